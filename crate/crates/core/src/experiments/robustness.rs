use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_std, subsample, ExperimentOptions, Reference, SubsampleMethod};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureTable};
use crate::histogram::HistogramSet;
use crate::ingest::SignalKind;
use crate::learn::Clustering;
use crate::learn::{kmeans, v_measure};
use crate::scalar::Scalar;
use crate::seed;

/// Agreement between full-data and subsampled clusterings per percentage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsampleCurve {
    pub signal: SignalKind,
    pub feature: FeatureKind,
    pub method: SubsampleMethod,
    pub k: usize,
    pub percentages: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub trials: usize,
}

fn kmeans_seed(table_seed: u64, signal: SignalKind, feature: FeatureKind) -> u64 {
    seed::derive(
        table_seed,
        &[
            seed::STREAM_ROBUSTNESS,
            signal.index() as u64,
            u64::from(feature.number()),
        ],
    )
}

/// Full-data histograms and their K-means clustering: the reference every
/// subsampled clustering of [`robustness_curve`] is compared with.
pub fn full_data_clustering<T: Scalar>(
    table: &FeatureTable<T>,
    k: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<(HistogramSet<T>, Clustering<T>)> {
    let reference = Reference::build(table, opts)?;
    let clustering = kmeans(
        &reference.points()?,
        k,
        kmeans_seed(seed, table.signal, table.feature),
        &opts.kmeans,
    )?;
    Ok((reference.set, clustering))
}

/// Clusters the full data with `k` clusters as the reference, then for each
/// percentage and trial subsamples every user's vector, rebuilds the
/// histograms, clusters again and scores the V-measure against the
/// reference.
///
/// All clusterings in one curve share one K-means seed, so a subsample that
/// reproduces the full histograms reproduces the reference clustering.
#[allow(clippy::too_many_arguments)]
pub fn robustness_curve<T: Scalar>(
    table: &FeatureTable<T>,
    method: SubsampleMethod,
    k: usize,
    percentages: &[f64],
    trials: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<SubsampleCurve> {
    if trials == 0 || percentages.is_empty() {
        return Err(Error::Domain(
            "a robustness curve needs at least one trial and percentage".into(),
        ));
    }
    let reference = Reference::build(table, opts)?;
    let cell_key = [
        seed::STREAM_ROBUSTNESS,
        table.signal.index() as u64,
        u64::from(table.feature.number()),
    ];
    let kmeans_seed = kmeans_seed(seed, table.signal, table.feature);
    let baseline = kmeans(&reference.points()?, k, kmeans_seed, &opts.kmeans)?;
    let user_keys: Vec<u64> = reference
        .table
        .user_ids
        .iter()
        .map(|id| seed::key_of(id))
        .collect();

    let jobs: Vec<(usize, usize)> = (0..percentages.len())
        .flat_map(|p| (0..trials).map(move |t| (p, t)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(pi, trial)| {
            let pct = percentages[pi];
            let mut key = cell_key.to_vec();
            key.extend([method.tag(), pi as u64, trial as u64]);
            let trial_seed = seed::derive(seed, &key);
            let run = || -> Result<f64> {
                let subsets = reference
                    .table
                    .user_ids
                    .iter()
                    .zip(&reference.table.vectors)
                    .zip(&user_keys)
                    .map(|((id, v), &uk)| {
                        subsample(method, v, pct / 100.0, seed::derive(trial_seed, &[uk]))
                            .map_err(|e| e.for_user(id))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let points = reference.subset_points(subsets, opts)?;
                let clustering = kmeans(&points, k, kmeans_seed, &opts.kmeans)?;
                v_measure(&baseline, &clustering)
            };
            run().map_err(|e| Error::Percentage {
                percentage: pct,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    let (mean, std): (Vec<f64>, Vec<f64>) = scores.chunks(trials).map(mean_std).unzip();
    Ok(SubsampleCurve {
        signal: table.signal,
        feature: table.feature,
        method,
        k,
        percentages: percentages.to_vec(),
        mean,
        std,
        trials,
    })
}
