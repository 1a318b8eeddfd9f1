//! Session logs, 4 Hz resampling, per-user assembly and synthetic fleets.

mod log;
mod resample;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use self::log::{parse_session_log, parse_session_name, session_file_name, write_session_log};
pub use self::resample::resample_linear;
pub use self::synth::{
    generate_raw_sessions, generate_synthetic_fleet, Archetype, DriverSlot, Fleet, FleetSpec,
    SignalOverride, SignalParams, SyntheticSession,
};

/// Rate every analysed signal is resampled to, in samples per second.
pub const RESAMPLE_HZ: f64 = 4.0;

/// The eight vehicle bus signals used by the analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignalKind {
    /// Brake pressure.
    #[serde(rename = "BRK")]
    Brake,
    /// Gas pedal position.
    #[serde(rename = "GAS")]
    Gas,
    /// Engine revolutions per minute.
    #[serde(rename = "RPM")]
    Rpm,
    /// Vehicle speed.
    #[serde(rename = "SPD")]
    Speed,
    /// Steering wheel angle.
    #[serde(rename = "SWA")]
    SteeringAngle,
    /// Steering wheel momentum.
    #[serde(rename = "SWM")]
    SteeringMomentum,
    /// Frontal acceleration.
    #[serde(rename = "FACC")]
    FrontalAcceleration,
    /// Lateral acceleration.
    #[serde(rename = "LACC")]
    LateralAcceleration,
}

impl SignalKind {
    pub const ALL: [SignalKind; 8] = [
        SignalKind::Brake,
        SignalKind::Gas,
        SignalKind::Rpm,
        SignalKind::Speed,
        SignalKind::SteeringAngle,
        SignalKind::SteeringMomentum,
        SignalKind::FrontalAcceleration,
        SignalKind::LateralAcceleration,
    ];

    /// Column name in the session log format.
    pub fn column(self) -> &'static str {
        match self {
            SignalKind::Brake => "BRK",
            SignalKind::Gas => "GAS",
            SignalKind::Rpm => "RPM",
            SignalKind::Speed => "SPD",
            SignalKind::SteeringAngle => "SWA",
            SignalKind::SteeringMomentum => "SWM",
            SignalKind::FrontalAcceleration => "FACC",
            SignalKind::LateralAcceleration => "LACC",
        }
    }

    /// Position in [`SignalKind::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SignalKind::ALL
            .into_iter()
            .find(|k| k.column().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown signal `{s}`")))
    }
}

/// Raw `(t, x)` samples of one signal within one session.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSeries<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> SampleSeries<T> {
    /// Builds a series, checking that timestamps strictly increase.
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} timestamps for {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(format!(
                "timestamps must strictly increase ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { times, values })
    }

    pub fn from_pairs(pairs: &[(T, T)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> Option<T> {
        self.times.last().copied()
    }
}

/// Values on a uniform time grid: `values[i]` sits at `start + i / rate`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformSeries<T> {
    pub rate: T,
    pub start: T,
    pub values: Vec<T>,
}

impl<T: Scalar> UniformSeries<T> {
    pub fn new(rate: T, start: T, values: Vec<T>) -> Self {
        Self {
            rate,
            start,
            values,
        }
    }

    /// Series at [`RESAMPLE_HZ`] starting at zero.
    pub fn at_4hz(values: Vec<T>) -> Self {
        Self::new(T::of(RESAMPLE_HZ), T::zero(), values)
    }

    pub fn time(&self, i: usize) -> T {
        self.start + T::of_usize(i) / self.rate
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One recorded driving session with all eight raw signals.
#[derive(Clone, Debug, PartialEq)]
pub struct Session<T> {
    pub session_id: String,
    pub user_id: String,
    signals: Vec<SampleSeries<T>>,
    duration: T,
}

impl<T: Scalar> Session<T> {
    /// `signals` must be ordered as [`SignalKind::ALL`].
    pub fn new(
        user_id: impl Into<String>,
        session_id: impl Into<String>,
        signals: Vec<SampleSeries<T>>,
    ) -> Result<Self> {
        if signals.len() != SignalKind::ALL.len() {
            return Err(Error::Domain(format!(
                "a session carries {} signals, got {}",
                SignalKind::ALL.len(),
                signals.len()
            )));
        }
        let duration = signals
            .iter()
            .filter_map(SampleSeries::last_time)
            .fold(T::zero(), T::max);
        Ok(Self {
            session_id: session_id.into(),
            user_id: user_id.into(),
            signals,
            duration,
        })
    }

    pub fn signal(&self, kind: SignalKind) -> &SampleSeries<T> {
        &self.signals[kind.index()]
    }

    /// Seconds; the largest timestamp over all signals.
    pub fn duration(&self) -> T {
        self.duration
    }

    /// Resamples every signal onto its own uniform grid.
    pub fn resample(&self, rate: T) -> Result<ResampledSession<T>> {
        let signals = SignalKind::ALL
            .iter()
            .map(|&k| {
                resample_linear(self.signal(k), rate).map_err(|e| {
                    Error::Domain(format!("session {} signal {k}: {e}", self.session_id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResampledSession {
            session_id: self.session_id.clone(),
            duration: self.duration,
            signals,
        })
    }
}

/// A session after resampling; raw samples are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct ResampledSession<T> {
    pub session_id: String,
    pub duration: T,
    signals: Vec<UniformSeries<T>>,
}

impl<T: Scalar> ResampledSession<T> {
    /// `signals` must be ordered as [`SignalKind::ALL`].
    pub fn new(session_id: impl Into<String>, duration: T, signals: Vec<UniformSeries<T>>) -> Self {
        assert_eq!(signals.len(), SignalKind::ALL.len());
        Self {
            session_id: session_id.into(),
            duration,
            signals,
        }
    }

    pub fn signal(&self, kind: SignalKind) -> &UniformSeries<T> {
        &self.signals[kind.index()]
    }
}

/// All resampled sessions of one driver.
#[derive(Clone, Debug, PartialEq)]
pub struct UserRecord<T> {
    pub user_id: String,
    pub sessions: Vec<ResampledSession<T>>,
    pub total_hours: T,
}

impl<T: Scalar> UserRecord<T> {
    pub fn new(user_id: impl Into<String>, sessions: Vec<ResampledSession<T>>) -> Self {
        let seconds: T = sessions.iter().map(|s| s.duration).sum();
        Self {
            user_id: user_id.into(),
            sessions,
            total_hours: seconds / T::of(3600.0),
        }
    }
}

/// Keeps the users that drove at least `min_hours` in total, preserving order.
pub fn filter_min_duration<T: Scalar>(
    users: Vec<UserRecord<T>>,
    min_hours: T,
) -> Vec<UserRecord<T>> {
    users
        .into_iter()
        .filter(|u| u.total_hours >= min_hours)
        .collect()
}

/// Groups resampled sessions by user. Users come out sorted by id, sessions
/// by session id.
pub fn assemble_users<T: Scalar>(
    sessions: impl IntoIterator<Item = (String, ResampledSession<T>)>,
) -> Vec<UserRecord<T>> {
    let mut by_user: BTreeMap<String, Vec<ResampledSession<T>>> = BTreeMap::new();
    for (user, session) in sessions {
        by_user.entry(user).or_default().push(session);
    }
    by_user
        .into_iter()
        .map(|(user, mut sessions)| {
            sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
            UserRecord::new(user, sessions)
        })
        .collect()
}

/// Parses and resamples every `<user>__<session>.csv` file in `dir`.
pub fn load_directory(dir: &Path) -> Result<Vec<UserRecord<f64>>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") && parse_session_name(&path).is_some() {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::NoData(format!(
            "no sessions found in {}",
            dir.display()
        )));
    }
    paths.sort();
    let sessions = paths
        .par_iter()
        .map(|p| {
            let session = parse_session_log(p)?;
            let resampled = session.resample(RESAMPLE_HZ)?;
            Ok((session.user_id, resampled))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_users(sessions))
}
