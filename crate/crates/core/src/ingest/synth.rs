//! Synthetic fleets with planted driver archetypes.
//!
//! Each signal of each session is an Ornstein-Uhlenbeck process around the
//! archetype's mean level plus a train of decaying peak events arriving as a
//! Poisson process. The fleet is a pure function of the [`FleetSpec`].

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SampleSeries, Session, SignalKind, UserRecord, RESAMPLE_HZ};
use crate::error::{Error, Result};
use crate::seed;

/// Decay time of a peak event, in seconds.
const PEAK_DECAY_S: f64 = 1.0;

/// Generative parameters of one signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    /// Level the process reverts to.
    pub mean: f64,
    /// Stationary variance of the mean-reverting component.
    pub variance: f64,
    /// Expected peak events per second.
    pub peak_rate: f64,
    /// Typical peak height; each event draws uniformly from 0.5x to 1.5x.
    pub peak_amplitude: f64,
    /// Mean-reversion speed, 1/s.
    pub reversion: f64,
}

impl SignalParams {
    /// Baseline used for every signal an archetype does not override.
    pub fn default_for(kind: SignalKind) -> Self {
        let (mean, variance) = match kind {
            SignalKind::Brake => (5.0, 16.0),
            SignalKind::Gas => (25.0, 64.0),
            SignalKind::Rpm => (1800.0, 90_000.0),
            SignalKind::Speed => (60.0, 225.0),
            SignalKind::SteeringAngle => (0.0, 100.0),
            SignalKind::SteeringMomentum => (0.0, 1.0),
            SignalKind::FrontalAcceleration => (0.0, 0.5),
            SignalKind::LateralAcceleration => (0.0, 0.5),
        };
        Self {
            mean,
            variance,
            peak_rate: 0.05,
            peak_amplitude: 2.0 * variance.sqrt(),
            reversion: 0.5,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("{what}: {m}")));
        let all = [
            self.mean,
            self.variance,
            self.peak_rate,
            self.peak_amplitude,
            self.reversion,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite");
        }
        if self.variance < 0.0 {
            return bad("variance must be >= 0");
        }
        if self.peak_rate < 0.0 {
            return bad("peak_rate must be >= 0");
        }
        if self.reversion <= 0.0 {
            return bad("reversion must be > 0");
        }
        Ok(())
    }
}

/// Partial [`SignalParams`]; absent fields keep the baseline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reversion: Option<f64>,
}

impl SignalOverride {
    fn apply(&self, base: SignalParams) -> SignalParams {
        SignalParams {
            mean: self.mean.unwrap_or(base.mean),
            variance: self.variance.unwrap_or(base.variance),
            peak_rate: self.peak_rate.unwrap_or(base.peak_rate),
            peak_amplitude: self.peak_amplitude.unwrap_or(base.peak_amplitude),
            reversion: self.reversion.unwrap_or(base.reversion),
        }
    }
}

/// One planted driver profile.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "BRK", default, skip_serializing_if = "Option::is_none")]
    pub brk: Option<SignalOverride>,
    #[serde(rename = "GAS", default, skip_serializing_if = "Option::is_none")]
    pub gas: Option<SignalOverride>,
    #[serde(rename = "RPM", default, skip_serializing_if = "Option::is_none")]
    pub rpm: Option<SignalOverride>,
    #[serde(rename = "SPD", default, skip_serializing_if = "Option::is_none")]
    pub spd: Option<SignalOverride>,
    #[serde(rename = "SWA", default, skip_serializing_if = "Option::is_none")]
    pub swa: Option<SignalOverride>,
    #[serde(rename = "SWM", default, skip_serializing_if = "Option::is_none")]
    pub swm: Option<SignalOverride>,
    #[serde(rename = "FACC", default, skip_serializing_if = "Option::is_none")]
    pub facc: Option<SignalOverride>,
    #[serde(rename = "LACC", default, skip_serializing_if = "Option::is_none")]
    pub lacc: Option<SignalOverride>,
}

impl Archetype {
    pub fn override_mut(&mut self, kind: SignalKind) -> &mut SignalOverride {
        let slot = match kind {
            SignalKind::Brake => &mut self.brk,
            SignalKind::Gas => &mut self.gas,
            SignalKind::Rpm => &mut self.rpm,
            SignalKind::Speed => &mut self.spd,
            SignalKind::SteeringAngle => &mut self.swa,
            SignalKind::SteeringMomentum => &mut self.swm,
            SignalKind::FrontalAcceleration => &mut self.facc,
            SignalKind::LateralAcceleration => &mut self.lacc,
        };
        slot.get_or_insert_with(SignalOverride::default)
    }

    /// Fully resolved parameters for `kind`.
    pub fn params(&self, kind: SignalKind) -> SignalParams {
        let slot = match kind {
            SignalKind::Brake => &self.brk,
            SignalKind::Gas => &self.gas,
            SignalKind::Rpm => &self.rpm,
            SignalKind::Speed => &self.spd,
            SignalKind::SteeringAngle => &self.swa,
            SignalKind::SteeringMomentum => &self.swm,
            SignalKind::FrontalAcceleration => &self.facc,
            SignalKind::LateralAcceleration => &self.lacc,
        };
        let base = SignalParams::default_for(kind);
        slot.map_or(base, |o| o.apply(base))
    }
}

fn default_session_seconds() -> [f64; 2] {
    [1200.0, 2400.0]
}

fn default_raw_rate() -> f64 {
    20.0
}

/// Description of a synthetic fleet. Stored as TOML:
///
/// ```toml
/// seed = 7
/// drivers_per_archetype = 10
/// sessions_per_driver = 4
/// session_seconds = [1200.0, 2400.0]
///
/// [[archetype]]
/// name = "calm"
/// GAS = { mean = 20.0, variance = 16.0 }
///
/// [[archetype]]
/// name = "sporty"
/// GAS = { mean = 60.0, variance = 16.0, peak_rate = 0.2 }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSpec {
    pub seed: u64,
    pub drivers_per_archetype: usize,
    pub sessions_per_driver: usize,
    /// Session lengths are drawn uniformly from `[min, max]` seconds.
    #[serde(default = "default_session_seconds")]
    pub session_seconds: [f64; 2],
    /// Raw sampling rate of every generated signal.
    #[serde(default = "default_raw_rate")]
    pub raw_rate_hz: f64,
    #[serde(rename = "archetype", default)]
    pub archetypes: Vec<Archetype>,
}

impl FleetSpec {
    pub fn new(
        archetypes: Vec<Archetype>,
        drivers_per_archetype: usize,
        sessions_per_driver: usize,
        seed: u64,
    ) -> Self {
        Self {
            seed,
            drivers_per_archetype,
            sessions_per_driver,
            session_seconds: default_session_seconds(),
            raw_rate_hz: default_raw_rate(),
            archetypes,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("fleet spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.archetypes.is_empty() {
            return bad("at least one archetype is required".into());
        }
        if self.drivers_per_archetype == 0 {
            return bad("drivers_per_archetype must be >= 1".into());
        }
        if self.sessions_per_driver == 0 {
            return bad("sessions_per_driver must be >= 1".into());
        }
        let [lo, hi] = self.session_seconds;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad(format!(
                "session_seconds must satisfy 0 < min <= max, got [{lo}, {hi}]"
            ));
        }
        if !(self.raw_rate_hz.is_finite() && self.raw_rate_hz > 0.0) {
            return bad(format!("raw_rate_hz must be > 0, got {}", self.raw_rate_hz));
        }
        if lo * self.raw_rate_hz < 1.0 {
            return bad("sessions must span at least two raw samples".into());
        }
        for (g, a) in self.archetypes.iter().enumerate() {
            for kind in SignalKind::ALL {
                a.params(kind)
                    .validate(&format!("archetype {g} signal {kind}"))?;
            }
        }
        Ok(())
    }

    pub fn archetype_count(&self) -> usize {
        self.archetypes.len()
    }

    /// Every driver slot in generation order.
    pub fn drivers(&self) -> Vec<DriverSlot> {
        (0..self.archetypes.len())
            .flat_map(|g| {
                (0..self.drivers_per_archetype).map(move |d| DriverSlot {
                    archetype: g,
                    index: d,
                })
            })
            .collect()
    }

    /// Generates one raw session at `raw_rate_hz`.
    pub fn raw_session(&self, driver: DriverSlot, session: usize) -> Session<f64> {
        let key = [
            seed::STREAM_SYNTH,
            driver.archetype as u64,
            driver.index as u64,
            session as u64,
        ];
        let mut rng = seed::rng(seed::derive(self.seed, &key));
        let [lo, hi] = self.session_seconds;
        let length = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        let count = (length * self.raw_rate_hz).floor() as usize + 1;
        let dt = 1.0 / self.raw_rate_hz;
        let times: Vec<f64> = (0..count).map(|i| i as f64 / self.raw_rate_hz).collect();

        let archetype = &self.archetypes[driver.archetype];
        let signals = SignalKind::ALL
            .iter()
            .map(|&kind| {
                let mut key = key.to_vec();
                key.push(1 + kind.index() as u64);
                let mut rng = seed::rng(seed::derive(self.seed, &key));
                let values = simulate(&archetype.params(kind), count, dt, &mut rng);
                SampleSeries::new(times.clone(), values).expect("uniform grid is increasing")
            })
            .collect();
        Session::new(driver.user_id(), format!("s{session:03}"), signals)
            .expect("eight signals generated")
    }
}

/// Position of one synthetic driver in the fleet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DriverSlot {
    pub archetype: usize,
    pub index: usize,
}

impl DriverSlot {
    pub fn user_id(&self) -> String {
        format!("a{:02}-d{:03}", self.archetype, self.index)
    }
}

fn simulate(p: &SignalParams, count: usize, dt: f64, rng: &mut seed::Rng) -> Vec<f64> {
    let decay = (-p.reversion * dt).exp();
    let noise = (p.variance * (1.0 - decay * decay)).sqrt();
    let peak_decay = (-dt / PEAK_DECAY_S).exp();
    let peak_prob = 1.0 - (-p.peak_rate * dt).exp();
    let normal = |rng: &mut seed::Rng| -> f64 { StandardNormal.sample(rng) };

    let mut level = p.mean + p.variance.sqrt() * normal(rng);
    let mut excursion = 0.0;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(level + excursion);
        level = p.mean + (level - p.mean) * decay + noise * normal(rng);
        excursion *= peak_decay;
        // Consume the same number of draws whether or not an event fires.
        let (u, h): (f64, f64) = (rng.random(), rng.random());
        if u < peak_prob {
            excursion += p.peak_amplitude * (0.5 + h);
        }
    }
    out
}

/// A raw synthetic session and the archetype it was drawn from.
#[derive(Clone, Debug)]
pub struct SyntheticSession {
    pub archetype: usize,
    pub session: Session<f64>,
}

/// All raw sessions of the fleet, driver by driver.
pub fn generate_raw_sessions(spec: &FleetSpec) -> Result<Vec<SyntheticSession>> {
    spec.validate()?;
    let slots: Vec<(DriverSlot, usize)> = spec
        .drivers()
        .into_iter()
        .flat_map(|d| (0..spec.sessions_per_driver).map(move |s| (d, s)))
        .collect();
    Ok(slots
        .into_par_iter()
        .map(|(d, s)| SyntheticSession {
            archetype: d.archetype,
            session: spec.raw_session(d, s),
        })
        .collect())
}

/// Resampled synthetic fleet with its planted archetype labels.
#[derive(Clone, Debug)]
pub struct Fleet {
    pub users: Vec<UserRecord<f64>>,
    /// Archetype index of each user, aligned with `users`.
    pub archetypes: Vec<usize>,
}

/// Generates the fleet and resamples every session to 4 Hz. Raw samples
/// are discarded session by session.
pub fn generate_synthetic_fleet(spec: &FleetSpec) -> Result<Fleet> {
    spec.validate()?;
    let drivers = spec.drivers();
    let users = drivers
        .par_iter()
        .map(|&d| {
            let sessions = (0..spec.sessions_per_driver)
                .map(|s| spec.raw_session(d, s).resample(RESAMPLE_HZ))
                .collect::<Result<Vec<_>>>()?;
            Ok(UserRecord::new(d.user_id(), sessions))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fleet {
        users,
        archetypes: drivers.iter().map(|d| d.archetype).collect(),
    })
}
