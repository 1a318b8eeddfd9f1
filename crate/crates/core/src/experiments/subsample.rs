use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::floor_share;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsampleMethod {
    /// Uniform draw without replacement, ignoring time order.
    Independent,
    /// One circular run of consecutive elements.
    Contiguous,
}

impl SubsampleMethod {
    pub const ALL: [SubsampleMethod; 2] =
        [SubsampleMethod::Independent, SubsampleMethod::Contiguous];

    pub fn name(self) -> &'static str {
        match self {
            SubsampleMethod::Independent => "independent",
            SubsampleMethod::Contiguous => "contiguous",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            SubsampleMethod::Independent => 1,
            SubsampleMethod::Contiguous => 2,
        }
    }
}

/// Shuffles `values` and splits it into the first `floor(frac * d)`
/// elements and the rest.
pub fn split_train_validation<T: Copy>(
    values: &[T],
    frac: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            what: "train/validation split",
            needed: 2,
            got: values.len(),
        });
    }
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::Domain(format!(
            "split fraction must lie in [0, 1], got {frac}"
        )));
    }
    let mut shuffled = values.to_vec();
    shuffled.shuffle(&mut seed::rng(seed));
    let validation = shuffled.split_off(floor_share(frac, values.len()));
    Ok((shuffled, validation))
}

fn check_fraction(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "subsampling fraction must lie in (0, 1], got {p}"
        )))
    }
}

/// `floor(p * d)` elements drawn uniformly without replacement, in draw order.
pub fn subsample_independent<T: Copy>(values: &[T], p: f64, seed: u64) -> Result<Vec<T>> {
    check_fraction(p)?;
    let l = floor_share(p, values.len());
    if l == 0 {
        return Err(Error::EmptySample {
            len: values.len(),
            fraction: p,
        });
    }
    let mut rng = seed::rng(seed);
    Ok(index::sample(&mut rng, values.len(), l)
        .into_iter()
        .map(|i| values[i])
        .collect())
}

/// `floor(p * d)` consecutive elements starting at a uniform random index,
/// wrapping around the end.
pub fn subsample_contiguous<T: Copy>(values: &[T], p: f64, seed: u64) -> Result<Vec<T>> {
    check_fraction(p)?;
    let l = floor_share(p, values.len());
    if l == 0 {
        return Err(Error::EmptySample {
            len: values.len(),
            fraction: p,
        });
    }
    let start = seed::rng(seed).random_range(0..values.len());
    Ok(contiguous_block(values, start, l))
}

/// Elements `start, start + 1, ..., start + len - 1`, indices modulo `d`.
pub fn contiguous_block<T: Copy>(values: &[T], start: usize, len: usize) -> Vec<T> {
    let d = values.len();
    (0..len).map(|i| values[(start + i) % d]).collect()
}

pub fn subsample<T: Copy>(
    method: SubsampleMethod,
    values: &[T],
    p: f64,
    seed: u64,
) -> Result<Vec<T>> {
    match method {
        SubsampleMethod::Independent => subsample_independent(values, p, seed),
        SubsampleMethod::Contiguous => subsample_contiguous(values, p, seed),
    }
}
