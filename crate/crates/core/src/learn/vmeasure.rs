//! V-measure: harmonic mean of homogeneity and completeness, computed from
//! the contingency table of two labelings. Natural log throughout.

use std::collections::HashMap;

use super::Clustering;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyScores {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Homogeneity of `b` with respect to classes `a`, completeness, and
/// their harmonic mean. `H(a) = 0` gives homogeneity 1, `H(b) = 0` gives
/// completeness 1.
pub fn entropy_scores(a: &[usize], b: &[usize]) -> Result<EntropyScores> {
    if a.len() != b.len() {
        return Err(Error::Alignment {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(EntropyScores {
            homogeneity: 1.0,
            completeness: 1.0,
            v_measure: 1.0,
        });
    }
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut count_a: HashMap<usize, usize> = HashMap::new();
    let mut count_b: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *count_a.entry(x).or_default() += 1;
        *count_b.entry(y).or_default() += 1;
    }
    let lookup = |m: &HashMap<usize, usize>, key: usize| m[&key] as f64;
    // Sum every entropy over terms sorted by their counts, so relabeling
    // either argument cannot change the rounding.
    let mut marginal_a: Vec<usize> = count_a.values().copied().collect();
    let mut marginal_b: Vec<usize> = count_b.values().copied().collect();
    marginal_a.sort_unstable();
    marginal_b.sort_unstable();
    let h_a = entropy(marginal_a.into_iter(), n);
    let h_b = entropy(marginal_b.into_iter(), n);
    // H(a|b) = -sum n_ij/n ln(n_ij / n_j); H(b|a) symmetric.
    let conditional = |mut terms: Vec<(usize, f64)>| -> f64 {
        terms.sort_unstable_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        terms
            .into_iter()
            .map(|(c, total)| -(c as f64 / n) * (c as f64 / total).ln())
            .sum()
    };
    let h_a_given_b = conditional(
        joint
            .iter()
            .map(|(&(_, y), &c)| (c, lookup(&count_b, y)))
            .collect(),
    );
    let h_b_given_a = conditional(
        joint
            .iter()
            .map(|(&(x, _), &c)| (c, lookup(&count_a, x)))
            .collect(),
    );

    let homogeneity = if h_a == 0.0 {
        1.0
    } else {
        1.0 - h_a_given_b / h_a
    };
    let completeness = if h_b == 0.0 {
        1.0
    } else {
        1.0 - h_b_given_a / h_b
    };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(EntropyScores {
        homogeneity,
        completeness,
        v_measure,
    })
}

/// V-measure of two labelings of the same items, in `[0, 1]`.
pub fn v_measure_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    let s = entropy_scores(a, b)?;
    let t = entropy_scores(b, a)?;
    // The formula is symmetric; average the two evaluation orders so the
    // result is bit-for-bit symmetric too.
    Ok(((s.v_measure + t.v_measure) / 2.0).clamp(0.0, 1.0))
}

pub fn v_measure<T>(a: &Clustering<T>, b: &Clustering<T>) -> Result<f64> {
    v_measure_labels(&a.labels, &b.labels)
}
