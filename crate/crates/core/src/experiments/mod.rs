//! Cross-validated choice of K and the subsampling robustness study.

mod crossval;
mod robustness;
mod subsample;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::histogram::{
    global_bin_spec, percentile_bounds, BinSpec, HistogramOptions, HistogramSet,
};
use crate::learn::{KMeansOptions, PointSet};
use crate::scalar::Scalar;

pub use self::crossval::{cross_validate, select_optimal_k, CrossValCell, CrossValResult};
pub use self::robustness::{full_data_clustering, robustness_curve, SubsampleCurve};
pub use self::subsample::{
    contiguous_block, split_train_validation, subsample, subsample_contiguous,
    subsample_independent, SubsampleMethod,
};

pub const DEFAULT_TRIALS: usize = 40;
pub const DEFAULT_PERCENTAGES: [f64; 7] = [100.0, 50.0, 20.0, 10.0, 5.0, 2.0, 1.0];

/// Where the bins of a split or subsample come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinsMode {
    /// Recompute trimming and bins on each subset.
    #[default]
    Local,
    /// Reuse each user's full-data trimming bounds and the full-data bins.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub histogram: HistogramOptions,
    pub kmeans: KMeansOptions,
    pub bins_mode: BinsMode,
    /// Share of each vector that goes to the training side of a split.
    pub train_fraction: f64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            histogram: HistogramOptions::default(),
            kmeans: KMeansOptions::default(),
            bins_mode: BinsMode::Local,
            train_fraction: 0.7,
        }
    }
}

/// `floor(fraction * len)`, tolerant of products that land a hair under an
/// integer (0.29 * 100 = 28.999...).
pub(crate) fn floor_share(fraction: f64, len: usize) -> usize {
    let x = fraction * len as f64;
    (x + 1e-9 * x.max(1.0)).floor() as usize
}

/// The full-data histogram set of a table plus what `Global` mode reuses.
pub(crate) struct Reference<T> {
    pub set: HistogramSet<T>,
    /// Table restricted to the users that survived trimming.
    pub table: FeatureTable<T>,
    bounds: Vec<(T, T)>,
}

impl<T: Scalar> Reference<T> {
    pub fn build(table: &FeatureTable<T>, opts: &ExperimentOptions) -> Result<Self> {
        let set = HistogramSet::build(table, &opts.histogram)?;
        let order: Vec<usize> = set
            .user_ids
            .iter()
            .map(|id| {
                table
                    .user_ids
                    .iter()
                    .position(|u| u == id)
                    .expect("kept users come from the table")
            })
            .collect();
        let table = table.reordered(&order);
        let h = &opts.histogram;
        let bounds = table
            .vectors
            .iter()
            .map(|v| percentile_bounds(v, h.trim_low, h.trim_high))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { set, table, bounds })
    }

    pub fn points(&self) -> Result<PointSet<T>> {
        PointSet::from_histograms(&self.set)
    }

    /// Histogram points of per-user subsets of the reference users. Every
    /// user must keep at least one value.
    pub fn subset_points(
        &self,
        subsets: Vec<Vec<T>>,
        opts: &ExperimentOptions,
    ) -> Result<PointSet<T>> {
        let ids = &self.table.user_ids;
        let h = &opts.histogram;
        let (kept, bins): (Vec<Vec<T>>, BinSpec<T>) = match opts.bins_mode {
            BinsMode::Local => {
                let kept = ids
                    .iter()
                    .zip(subsets)
                    .map(|(id, v)| {
                        let t = crate::histogram::trim_percentiles(&v, h.trim_low, h.trim_high)
                            .map_err(|e| e.for_user(id))?;
                        if t.is_empty() {
                            Err(Error::EmptyHistogram.for_user(id))
                        } else {
                            Ok(t)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let bins = global_bin_spec(kept.iter().map(Vec::as_slice), h.bins)?;
                (kept, bins)
            }
            BinsMode::Global => {
                let kept = ids
                    .iter()
                    .zip(subsets)
                    .zip(&self.bounds)
                    .map(|((id, v), &(lo, hi))| {
                        let t: Vec<T> = v.into_iter().filter(|&x| lo <= x && x <= hi).collect();
                        if t.is_empty() {
                            Err(Error::EmptyHistogram.for_user(id))
                        } else {
                            Ok(t)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                (kept, self.set.bins)
            }
        };
        let set = HistogramSet::with_bins(&self.table, ids.clone(), &kept, bins, Vec::new())?;
        PointSet::from_histograms(&set)
    }
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
