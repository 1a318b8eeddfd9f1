use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_std, split_train_validation, ExperimentOptions, Reference};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureTable};
use crate::ingest::SignalKind;
use crate::learn::{kmeans, v_measure};
use crate::scalar::Scalar;
use crate::seed;

/// Mean and spread of the train/validation V-measure for each K, for one
/// (signal, feature).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValCell {
    pub signal: SignalKind,
    pub feature: FeatureKind,
    pub ks: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub optimal_k: usize,
    pub trials: usize,
    /// Users taking part after histogram construction.
    pub users: usize,
}

impl CrossValCell {
    fn index_of(&self, k: usize) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }

    pub fn mean_at(&self, k: usize) -> Option<f64> {
        self.index_of(k).map(|i| self.mean[i])
    }

    pub fn std_at(&self, k: usize) -> Option<f64> {
        self.index_of(k).map(|i| self.std[i])
    }
}

/// Every analysed cell of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossValResult {
    pub trials: usize,
    pub cells: Vec<CrossValCell>,
}

/// Index of the best mean, ties within 1e-12 going to the first (lowest K).
pub fn select_optimal_k(ks: &[usize], means: &[f64]) -> Result<usize> {
    if ks.is_empty() || ks.len() != means.len() {
        return Err(Error::Domain(format!(
            "need one mean per K, got {} K values and {} means",
            ks.len(),
            means.len()
        )));
    }
    let mut best = 0;
    for i in 1..means.len() {
        if means[i] > means[best] + 1e-12 {
            best = i;
        }
    }
    Ok(ks[best])
}

/// For every K in `ks` and every trial: split each user's vector 70/30,
/// histogram both sides, cluster both with K-means and score their
/// agreement with the V-measure.
pub fn cross_validate<T: Scalar>(
    table: &FeatureTable<T>,
    ks: &[usize],
    trials: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<CrossValCell> {
    if ks.is_empty() || trials == 0 {
        return Err(Error::Domain(
            "cross-validation needs at least one K and one trial".into(),
        ));
    }
    let reference = Reference::build(table, opts)?;
    let users = reference.table.len();
    let k_max = *ks.iter().max().expect("non-empty");
    if users < k_max {
        return Err(Error::InsufficientData {
            what: "cross-validation users",
            needed: k_max,
            got: users,
        });
    }
    let cell_key = [
        seed::STREAM_CROSSVAL,
        table.signal.index() as u64,
        u64::from(table.feature.number()),
    ];
    let user_keys: Vec<u64> = reference
        .table
        .user_ids
        .iter()
        .map(|id| seed::key_of(id))
        .collect();

    let jobs: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| (0..trials).map(move |t| (k, t)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(k, trial)| {
            let mut key = cell_key.to_vec();
            key.extend([k as u64, trial as u64]);
            let trial_seed = seed::derive(seed, &key);
            let mut train = Vec::with_capacity(users);
            let mut validation = Vec::with_capacity(users);
            for ((id, values), &uk) in reference
                .table
                .user_ids
                .iter()
                .zip(&reference.table.vectors)
                .zip(&user_keys)
            {
                let (t, v) = split_train_validation(
                    values,
                    opts.train_fraction,
                    seed::derive(trial_seed, &[uk]),
                )
                .map_err(|e| e.for_user(id))?;
                train.push(t);
                validation.push(v);
            }
            let train = reference.subset_points(train, opts)?;
            let validation = reference.subset_points(validation, opts)?;
            let c_train = kmeans(&train, k, seed::derive(trial_seed, &[1]), &opts.kmeans)?;
            let c_val = kmeans(&validation, k, seed::derive(trial_seed, &[2]), &opts.kmeans)?;
            v_measure(&c_train, &c_val)
        })
        .collect::<Result<Vec<f64>>>()?;

    let (mean, std): (Vec<f64>, Vec<f64>) = scores.chunks(trials).map(mean_std).unzip();
    let optimal_k = select_optimal_k(ks, &mean)?;
    Ok(CrossValCell {
        signal: table.signal,
        feature: table.feature,
        ks: ks.to_vec(),
        mean,
        std,
        optimal_k,
        trials,
        users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_argmax() {
        let ks: Vec<usize> = (2..=10).collect();
        let m = [0.96, 1.0, 0.8, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7];
        assert_eq!(select_optimal_k(&ks, &m).unwrap(), 3);
    }

    #[test]
    fn ties_go_to_lowest_k() {
        let ks: Vec<usize> = (2..=10).collect();
        let m = [1.0, 1.0, 0.9, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        assert_eq!(select_optimal_k(&ks, &m).unwrap(), 2);
        assert_eq!(select_optimal_k(&ks, &[0.4; 9]).unwrap(), 2);
        let near = [0.9, 0.9 + 5e-13, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
        assert_eq!(select_optimal_k(&ks, &near).unwrap(), 2);
    }

    #[test]
    fn mismatched_row() {
        assert!(select_optimal_k(&[2, 3], &[0.1]).is_err());
        assert!(select_optimal_k(&[], &[]).is_err());
    }
}
