//! The seven per-signal features computed on 4 Hz series.

use std::fmt;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{SignalKind, UniformSeries, UserRecord};
use crate::scalar::{total_cmp, Scalar};

/// Half-width of the one-minute moving window at 4 Hz (120 samples each side).
pub const MOVING_HALF_WIDTH: usize = 120;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum FeatureKind {
    /// The resampled values themselves.
    Values = 1,
    /// Discrete first derivative.
    DiffQuotient = 2,
    /// Time between consecutive singular points.
    PeakInterval = 3,
    /// Value at each local maximum.
    PeakValue = 4,
    MovingMean = 5,
    MovingMedian = 6,
    MovingStd = 7,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 7] = [
        FeatureKind::Values,
        FeatureKind::DiffQuotient,
        FeatureKind::PeakInterval,
        FeatureKind::PeakValue,
        FeatureKind::MovingMean,
        FeatureKind::MovingMedian,
        FeatureKind::MovingStd,
    ];

    /// Feature number, 1 to 7.
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.number() == n)
    }

    pub fn description(self) -> &'static str {
        match self {
            FeatureKind::Values => "signal values",
            FeatureKind::DiffQuotient => "difference quotient",
            FeatureKind::PeakInterval => "time interval between two singular points",
            FeatureKind::PeakValue => "value of the local maxima",
            FeatureKind::MovingMean => "moving mean",
            FeatureKind::MovingMedian => "moving median",
            FeatureKind::MovingStd => "moving standard deviation",
        }
    }
}

impl TryFrom<u8> for FeatureKind {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        Self::from_number(n).ok_or_else(|| format!("feature number must be 1..=7, got {n}"))
    }
}

impl From<FeatureKind> for u8 {
    fn from(f: FeatureKind) -> u8 {
        f.number()
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.number())
    }
}

/// Interior strict local extrema of a series.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SingularPoints {
    /// Every index `j` with `(x[j] - x[j-1]) * (x[j+1] - x[j]) < 0`, ascending.
    pub all: Vec<usize>,
    /// The subset of `all` that are local maxima.
    pub maxima: Vec<usize>,
}

pub fn singular_points<T: Scalar>(values: &[T]) -> SingularPoints {
    let mut sp = SingularPoints::default();
    for j in 1..values.len().saturating_sub(1) {
        let before = values[j] - values[j - 1];
        let after = values[j + 1] - values[j];
        if before * after < T::zero() {
            sp.all.push(j);
            if values[j] > values[j + 1] {
                sp.maxima.push(j);
            }
        }
    }
    sp
}

/// `(x[i+1] - x[i]) * rate` for every consecutive pair.
pub fn difference_quotient<T: Scalar>(series: &UniformSeries<T>) -> Vec<T> {
    series
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]) * series.rate)
        .collect()
}

/// Seconds between consecutive singular points.
pub fn peak_intervals<T: Scalar>(series: &UniformSeries<T>) -> Vec<T> {
    singular_points(&series.values)
        .all
        .windows(2)
        .map(|w| T::of_usize(w[1] - w[0]) / series.rate)
        .collect()
}

/// Values at the local maxima, in index order.
pub fn peak_values<T: Scalar>(series: &UniformSeries<T>) -> Vec<T> {
    singular_points(&series.values)
        .maxima
        .into_iter()
        .map(|j| series.values[j])
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MovingStat {
    Mean,
    Median,
    /// Square root of the unbiased sample variance; 0 for single-sample windows.
    Std,
}

/// Statistic over the one-minute window centred on every sample.
pub fn moving_stat<T: Scalar>(series: &UniformSeries<T>, stat: MovingStat) -> Vec<T> {
    moving_stat_window(&series.values, stat, MOVING_HALF_WIDTH)
}

/// Statistic over `values[i - half ..= i + half]`, truncated at both ends.
pub fn moving_stat_window<T: Scalar>(values: &[T], stat: MovingStat, half: usize) -> Vec<T> {
    let n = values.len();
    let window = |i: usize| &values[i.saturating_sub(half)..(i + half + 1).min(n)];
    match stat {
        MovingStat::Mean => (0..n).map(|i| mean(window(i))).collect(),
        MovingStat::Std => (0..n).map(|i| sample_std(window(i))).collect(),
        MovingStat::Median => moving_median(values, half),
    }
}

fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::of_usize(xs.len())
}

fn sample_std<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / T::of_usize(xs.len() - 1)).sqrt()
}

fn median_of_sorted<T: Scalar>(sorted: &[T]) -> T {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / T::of(2.0)
    }
}

/// Sliding median over a sorted copy of the current window.
fn moving_median<T: Scalar>(values: &[T], half: usize) -> Vec<T> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut sorted: Vec<T> = Vec::with_capacity(2 * half + 1);
    let insert = |sorted: &mut Vec<T>, v: T| {
        let at = sorted.partition_point(|x| total_cmp(x, &v).is_lt());
        sorted.insert(at, v);
    };
    for &v in &values[..(half + 1).min(n)] {
        insert(&mut sorted, v);
    }
    for i in 0..n {
        out.push(median_of_sorted(&sorted));
        if i + half + 1 < n {
            insert(&mut sorted, values[i + half + 1]);
        }
        if i >= half {
            let v = values[i - half];
            let at = sorted.partition_point(|x| total_cmp(x, &v).is_lt());
            sorted.remove(at);
        }
    }
    out
}

/// Feature `feature` of one uniform series.
pub fn compute_feature<T: Scalar>(series: &UniformSeries<T>, feature: FeatureKind) -> Vec<T> {
    match feature {
        FeatureKind::Values => series.values.clone(),
        FeatureKind::DiffQuotient => difference_quotient(series),
        FeatureKind::PeakInterval => peak_intervals(series),
        FeatureKind::PeakValue => peak_values(series),
        FeatureKind::MovingMean => moving_stat(series, MovingStat::Mean),
        FeatureKind::MovingMedian => moving_stat(series, MovingStat::Median),
        FeatureKind::MovingStd => moving_stat(series, MovingStat::Std),
    }
}

/// One feature of one signal for one user, all sessions concatenated.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T> {
    pub user_id: String,
    pub signal: SignalKind,
    pub feature: FeatureKind,
    pub values: Vec<T>,
}

/// Computes the feature session by session and concatenates the results in
/// session order. Nothing is computed across a session boundary.
pub fn extract_feature<T: Scalar>(
    user: &UserRecord<T>,
    signal: SignalKind,
    feature: FeatureKind,
) -> FeatureVector<T> {
    let values = user
        .sessions
        .iter()
        .flat_map(|s| compute_feature(s.signal(signal), feature))
        .collect();
    FeatureVector {
        user_id: user.user_id.clone(),
        signal,
        feature,
        values,
    }
}

/// Feature vectors of every user for one (signal, feature) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable<T> {
    pub signal: SignalKind,
    pub feature: FeatureKind,
    pub user_ids: Vec<String>,
    pub vectors: Vec<Vec<T>>,
}

impl<T: Scalar> FeatureTable<T> {
    /// Extracts the cell for every user. Users whose vector is empty (e.g. a
    /// signal without local maxima) are left out and logged.
    pub fn extract(users: &[UserRecord<T>], signal: SignalKind, feature: FeatureKind) -> Self {
        let vectors: Vec<FeatureVector<T>> = users
            .par_iter()
            .map(|u| extract_feature(u, signal, feature))
            .collect();
        let mut table = Self {
            signal,
            feature,
            user_ids: Vec::with_capacity(vectors.len()),
            vectors: Vec::with_capacity(vectors.len()),
        };
        for v in vectors {
            if v.values.is_empty() {
                info!(
                    "{signal} {feature}: user {} has no values, excluded",
                    v.user_id
                );
                continue;
            }
            table.user_ids.push(v.user_id);
            table.vectors.push(v.values);
        }
        table
    }

    pub fn from_vectors(
        signal: SignalKind,
        feature: FeatureKind,
        user_ids: Vec<String>,
        vectors: Vec<Vec<T>>,
    ) -> Result<Self> {
        if user_ids.len() != vectors.len() {
            return Err(Error::Alignment {
                left: user_ids.len(),
                right: vectors.len(),
            });
        }
        Ok(Self {
            signal,
            feature,
            user_ids,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.user_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user_ids.is_empty()
    }

    /// Same users in a different order: entry `i` of the result is entry
    /// `order[i]` of `self`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        Self {
            signal: self.signal,
            feature: self.feature,
            user_ids: order.iter().map(|&i| self.user_ids[i].clone()).collect(),
            vectors: order.iter().map(|&i| self.vectors[i].clone()).collect(),
        }
    }
}
