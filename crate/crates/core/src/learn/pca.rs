use serde::{Deserialize, Serialize};

use super::PointSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Points projected on the leading principal components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection<T> {
    pub user_ids: Vec<String>,
    /// One row per point, one column per retained component.
    pub coordinates: Vec<Vec<T>>,
    /// Explained-variance share of the retained components.
    pub explained_variance_ratio: Vec<T>,
    /// Share of every component, descending; sums to 1.
    pub ratio_spectrum: Vec<T>,
    /// Unit component vectors, one per retained component.
    pub components: Vec<Vec<T>>,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with eigenvectors as rows.
pub fn symmetric_eigen<T: Scalar>(matrix: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<T>> = matrix.to_vec();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    let two = T::of(2.0);

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: T = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= T::epsilon() * T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j][j]
            .partial_cmp(&a[i][i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Projects centred points on the top `dims` eigenvectors of their sample
/// covariance. Each component is signed so its largest-magnitude entry is
/// positive.
pub fn pca_project<T: Scalar>(points: &PointSet<T>, dims: usize) -> Result<PcaProjection<T>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "PCA",
            needed: 2,
            got: n,
        });
    }
    let d = points.dim();
    if dims == 0 || dims > d {
        return Err(Error::Domain(format!(
            "cannot keep {dims} components of {d}-dimensional data"
        )));
    }
    let nf = T::of_usize(n);
    let mean: Vec<T> = (0..d)
        .map(|j| points.points().iter().map(|p| p[j]).sum::<T>() / nf)
        .collect();
    let centred: Vec<Vec<T>> = points
        .points()
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();
    let denom = T::of_usize(n - 1);
    let cov: Vec<Vec<T>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| centred.iter().map(|p| p[i] * p[j]).sum::<T>() / denom)
                .collect()
        })
        .collect();

    let (values, vectors) = symmetric_eigen(&cov);
    // Round-off can leave tiny negative eigenvalues on rank-deficient data.
    let values: Vec<T> = values.into_iter().map(|v| v.max(T::zero())).collect();
    let total: T = values.iter().copied().sum();
    let ratio_spectrum: Vec<T> = if total > T::zero() {
        values.iter().map(|&v| v / total).collect()
    } else {
        let mut r = vec![T::zero(); d];
        r[0] = T::one();
        r
    };

    let components: Vec<Vec<T>> = vectors
        .into_iter()
        .take(dims)
        .map(|mut c| {
            let lead =
                c.iter().copied().fold(
                    T::zero(),
                    |best, x| if x.abs() > best.abs() { x } else { best },
                );
            if lead < T::zero() {
                c.iter_mut().for_each(|x| *x = -*x);
            }
            c
        })
        .collect();
    let coordinates = centred
        .iter()
        .map(|p| {
            components
                .iter()
                .map(|c| p.iter().zip(c).map(|(&x, &w)| x * w).sum())
                .collect()
        })
        .collect();

    Ok(PcaProjection {
        user_ids: points.user_ids.clone(),
        coordinates,
        explained_variance_ratio: ratio_spectrum[..dims].to_vec(),
        ratio_spectrum,
        components,
    })
}
