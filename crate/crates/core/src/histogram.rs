//! Percentile trimming, shared bins and normalized per-user histograms.

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureTable};
use crate::ingest::SignalKind;
use crate::scalar::{total_cmp, Scalar};

pub const DEFAULT_BIN_COUNT: usize = 10;

/// Percentile with linear interpolation between order statistics at the
/// zero-based rank `pct / 100 * (n - 1)`. `sorted` must be ascending and
/// non-empty.
pub fn percentile_of_sorted<T: Scalar>(sorted: &[T], pct: f64) -> T {
    assert!(!sorted.is_empty());
    let rank = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = T::of(rank - lo as f64);
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Keeps the values inside `[P_lo, P_hi]` (both inclusive), in input order.
pub fn trim_percentiles<T: Scalar>(values: &[T], lo_pct: f64, hi_pct: f64) -> Result<Vec<T>> {
    let (lo, hi) = percentile_bounds(values, lo_pct, hi_pct)?;
    Ok(values
        .iter()
        .copied()
        .filter(|&v| lo <= v && v <= hi)
        .collect())
}

/// `(P_lo, P_hi)` of `values`.
pub fn percentile_bounds<T: Scalar>(values: &[T], lo_pct: f64, hi_pct: f64) -> Result<(T, T)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("percentile trimming"));
    }
    if !(0.0..=100.0).contains(&lo_pct) || !(0.0..=100.0).contains(&hi_pct) || lo_pct > hi_pct {
        return Err(Error::Domain(format!(
            "percentiles must satisfy 0 <= lo <= hi <= 100, got {lo_pct}/{hi_pct}"
        )));
    }
    let mut scratch = values.to_vec();
    Ok((
        select_percentile(&mut scratch, lo_pct),
        select_percentile(&mut scratch, hi_pct),
    ))
}

/// Same value as [`percentile_of_sorted`] on the sorted input, found by
/// selection in linear time. Reorders `values`.
fn select_percentile<T: Scalar>(values: &mut [T], pct: f64) -> T {
    let rank = pct / 100.0 * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let (_, &mut below, above) = values.select_nth_unstable_by(lo, total_cmp);
    if rank == lo as f64 {
        return below;
    }
    let next = above
        .iter()
        .copied()
        .min_by(total_cmp)
        .expect("fractional rank has an element above it");
    below + (next - below) * T::of(rank - lo as f64)
}

/// Equal-width partition of `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSpec<T> {
    pub lo: T,
    pub hi: T,
    pub count: usize,
}

impl<T: Scalar> BinSpec<T> {
    pub fn new(lo: T, hi: T, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("bin count must be >= 1".into()));
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain(format!(
                "bin range [{lo}, {hi}] is not finite"
            )));
        }
        if lo == hi {
            return Err(Error::DegenerateRange {
                value: lo.to_f64_lossy(),
            });
        }
        if lo > hi {
            return Err(Error::Domain(format!("bin range [{lo}, {hi}] is reversed")));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn width(&self) -> T {
        (self.hi - self.lo) / T::of_usize(self.count)
    }

    /// Left edge of bin `i`; `edge(count)` is `hi`.
    pub fn edge(&self, i: usize) -> T {
        if i == self.count {
            self.hi
        } else {
            self.lo + T::of_usize(i) * (self.hi - self.lo) / T::of_usize(self.count)
        }
    }

    /// Bin holding `v`: `[edge(i), edge(i+1))`, the last bin closed at `hi`.
    pub fn bin_of(&self, v: T) -> Option<usize> {
        if !(self.lo <= v && v <= self.hi) {
            return None;
        }
        let raw = ((v - self.lo) / (self.hi - self.lo) * T::of_usize(self.count))
            .floor()
            .to_usize()
            .unwrap_or(0);
        let mut i = raw.min(self.count - 1);
        // The scaled index can be off by one next to an edge; settle it
        // against the edges themselves.
        while i > 0 && v < self.edge(i) {
            i -= 1;
        }
        while i + 1 < self.count && v >= self.edge(i + 1) {
            i += 1;
        }
        Some(i)
    }
}

/// Bins spanning the union of all `vectors`.
pub fn global_bin_spec<'a, T: Scalar>(
    vectors: impl IntoIterator<Item = &'a [T]>,
    count: usize,
) -> Result<BinSpec<T>> {
    let mut range: Option<(T, T)> = None;
    for v in vectors.into_iter().flatten() {
        range = Some(match range {
            None => (*v, *v),
            Some((lo, hi)) => (lo.min(*v), hi.max(*v)),
        });
    }
    let (lo, hi) = range.ok_or_else(|| Error::NoData("every feature vector is empty".into()))?;
    BinSpec::new(lo, hi, count)
}

/// Relative frequency of `values` in each bin; bars sum to 1.
pub fn build_histogram<T: Scalar>(values: &[T], bins: &BinSpec<T>) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let mut counts = vec![0usize; bins.count];
    for &v in values {
        let i = bins.bin_of(v).ok_or(Error::OutOfRange {
            value: v.to_f64_lossy(),
            lo: bins.lo.to_f64_lossy(),
            hi: bins.hi.to_f64_lossy(),
        })?;
        counts[i] += 1;
    }
    let total = values.len() as f64;
    Ok(counts
        .into_iter()
        .map(|c| T::of(c as f64 / total))
        .collect())
}

/// Normalized histogram of one user's feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram<T> {
    pub user_id: String,
    pub signal: SignalKind,
    pub feature: FeatureKind,
    pub bars: Vec<T>,
}

/// Trimming and binning parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramOptions {
    pub bins: usize,
    pub trim_low: f64,
    pub trim_high: f64,
}

impl Default for HistogramOptions {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BIN_COUNT,
            trim_low: 2.0,
            trim_high: 98.0,
        }
    }
}

/// Histograms of one (signal, feature) cell over all users sharing one
/// [`BinSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramSet<T> {
    pub signal: SignalKind,
    pub feature: FeatureKind,
    pub bins: BinSpec<T>,
    pub user_ids: Vec<String>,
    pub bars: Vec<Vec<T>>,
    /// Users whose trimmed vector came out empty.
    pub dropped: Vec<String>,
}

impl<T: Scalar> HistogramSet<T> {
    /// Trims every vector, builds bins over the union of the trimmed
    /// vectors and histograms each user. Users left with nothing after
    /// trimming are recorded in `dropped`.
    pub fn build(table: &FeatureTable<T>, opts: &HistogramOptions) -> Result<Self> {
        let mut kept_ids = Vec::with_capacity(table.len());
        let mut kept = Vec::with_capacity(table.len());
        let mut dropped = Vec::new();
        for (id, values) in table.user_ids.iter().zip(&table.vectors) {
            let trimmed = if values.is_empty() {
                Vec::new()
            } else {
                trim_percentiles(values, opts.trim_low, opts.trim_high)
                    .map_err(|e| e.for_user(id))?
            };
            if trimmed.is_empty() {
                info!(
                    "{} {}: user {id} has no values after trimming, excluded",
                    table.signal, table.feature
                );
                dropped.push(id.clone());
            } else {
                kept_ids.push(id.clone());
                kept.push(trimmed);
            }
        }
        let bins = global_bin_spec(kept.iter().map(Vec::as_slice), opts.bins)?;
        Self::with_bins(table, kept_ids, &kept, bins, dropped)
    }

    /// Histograms over fixed `bins`; `vectors` must lie inside them.
    pub fn with_bins(
        table: &FeatureTable<T>,
        user_ids: Vec<String>,
        vectors: &[Vec<T>],
        bins: BinSpec<T>,
        dropped: Vec<String>,
    ) -> Result<Self> {
        let bars = user_ids
            .iter()
            .zip(vectors)
            .map(|(id, v)| build_histogram(v, &bins).map_err(|e| e.for_user(id)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            signal: table.signal,
            feature: table.feature,
            bins,
            user_ids,
            bars,
            dropped,
        })
    }

    pub fn len(&self) -> usize {
        self.user_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user_ids.is_empty()
    }

    pub fn histograms(&self) -> impl Iterator<Item = Histogram<T>> + '_ {
        self.user_ids
            .iter()
            .zip(&self.bars)
            .map(|(id, bars)| Histogram {
                user_id: id.clone(),
                signal: self.signal,
                feature: self.feature,
                bars: bars.clone(),
            })
    }
}
