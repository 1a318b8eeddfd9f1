//! K-means, PCA and the V-measure score.

mod kmeans;
mod pca;
mod vmeasure;

use crate::error::{Error, Result};
use crate::histogram::HistogramSet;
use crate::scalar::Scalar;

pub use self::kmeans::{kmeans, KMeansOptions};
pub use self::pca::{pca_project, symmetric_eigen, PcaProjection};
pub use self::vmeasure::{entropy_scores, v_measure, v_measure_labels, EntropyScores};

/// Points of equal dimension, one per user.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet<T> {
    pub user_ids: Vec<String>,
    points: Vec<Vec<T>>,
}

impl<T: Scalar> PointSet<T> {
    pub fn new(user_ids: Vec<String>, points: Vec<Vec<T>>) -> Result<Self> {
        if user_ids.len() != points.len() {
            return Err(Error::Alignment {
                left: user_ids.len(),
                right: points.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::InsufficientData {
                what: "point set",
                needed: 1,
                got: 0,
            });
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Domain("points differ in dimension".into()));
        }
        Ok(Self { user_ids, points })
    }

    /// Unnamed points; ids are the indices.
    pub fn from_points(points: Vec<Vec<T>>) -> Result<Self> {
        Self::new((0..points.len()).map(|i| i.to_string()).collect(), points)
    }

    pub fn from_histograms(set: &HistogramSet<T>) -> Result<Self> {
        Self::new(set.user_ids.clone(), set.bars.clone())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }
}

/// Cluster labels aligned with a [`PointSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering<T> {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: T,
}

pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}
