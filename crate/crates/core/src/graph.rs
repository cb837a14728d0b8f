//! Fully connected feature graph weighted by joint relevancy.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::plsa::PlsaModel;

/// `a[i][j] = relevancy[i] * relevancy[j]`, a symmetric rank-one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    pub a: Array2<f64>,
    pub relevancy: Array1<f64>,
}

impl AffinityGraph {
    /// Outer product of `relevancy` with itself, self-loops included.
    pub fn from_relevancy(relevancy: Array1<f64>) -> Result<Self> {
        if let Some(&bad) = relevancy.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter(format!(
                "relevancy {bad} is not a probability"
            )));
        }
        let n = relevancy.len();
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let w = relevancy[i] * relevancy[j];
                a[[i, j]] = w;
                a[[j, i]] = w;
            }
        }
        Ok(Self { a, relevancy })
    }

    pub fn from_model(model: &PlsaModel) -> Result<Self> {
        Self::from_relevancy(model.relevancy())
    }

    /// Drops self-loops. The result is no longer rank one.
    pub fn zero_diagonal(mut self) -> Self {
        self.a.diag_mut().fill(0.0);
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.a.nrows()
    }

    /// True when the diagonal still equals `relevancy^2`.
    pub fn has_self_loops(&self) -> bool {
        self.a
            .diag()
            .iter()
            .zip(&self.relevancy)
            .all(|(&d, &r)| d == r * r)
    }
}

/// Shorthand for [`AffinityGraph::from_model`].
pub fn build_graph(model: &PlsaModel) -> Result<AffinityGraph> {
    AffinityGraph::from_model(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn uniform_relevancy() {
        let g = AffinityGraph::from_relevancy(array![0.5, 0.5]).unwrap();
        assert_eq!(g.a, array![[0.25, 0.25], [0.25, 0.25]]);
    }

    #[test]
    fn extremes() {
        let g = AffinityGraph::from_relevancy(array![1.0, 0.0]).unwrap();
        assert_eq!(g.a, array![[1.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn three_nodes() {
        let g = AffinityGraph::from_relevancy(array![0.8, 0.3, 0.5]).unwrap();
        assert!((g.a[[0, 1]] - 0.24).abs() < 1e-15);
        assert!((g.a[[1, 2]] - 0.15).abs() < 1e-15);
        assert!((g.a[[2, 2]] - 0.25).abs() < 1e-15);
        assert!(g.has_self_loops());
        let z = g.zero_diagonal();
        assert_eq!(z.a.diag().to_vec(), vec![0.0; 3]);
        assert!(!z.has_self_loops());
    }

    #[test]
    fn rejects_non_probabilities() {
        assert!(AffinityGraph::from_relevancy(array![0.5, 1.5]).is_err());
        assert!(AffinityGraph::from_relevancy(array![f64::NAN]).is_err());
    }

    #[test]
    fn from_fitted_model() {
        let q = array![[0.0, 1.0, 9.0], [6.0, 3.0, 1.0]];
        let model = crate::plsa::fit(q.view(), &Default::default()).unwrap();
        let g = build_graph(&model).unwrap();
        let r = model.relevancy();
        assert_eq!(g.a[[0, 1]], r[0] * r[1]);
    }

    proptest! {
        #[test]
        fn symmetric_and_rank_one(v in prop::collection::vec(0.0f64..=1.0, 1..12)) {
            let g = AffinityGraph::from_relevancy(Array1::from(v.clone())).unwrap();
            let n = v.len();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(g.a[[i, j]].to_bits(), g.a[[j, i]].to_bits());
                    prop_assert!((g.a[[i, j]] - v[i] * v[j]).abs() <= 1e-15);
                }
            }
            // Largest eigenvalue of v v^T is |v|^2 with eigenvector v; removing
            // it must leave (numerically) nothing behind.
            let norm_sq: f64 = v.iter().map(|x| x * x).sum();
            let est = crate::ranker::spectral_radius(g.a.view(), 1e-12, 1000);
            prop_assert!((est.value - norm_sq).abs() < 1e-8);
            let mut residual = g.a.clone();
            for i in 0..n {
                for j in 0..n {
                    residual[[i, j]] -= v[i] * v[j];
                }
            }
            let frob = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(frob < 1e-8);
        }

        #[test]
        fn row_sums_follow_relevancy(v in prop::collection::vec(0.0f64..=1.0, 2..12)) {
            let g = AffinityGraph::from_relevancy(Array1::from(v.clone())).unwrap();
            let sums = g.a.sum_axis(ndarray::Axis(1));
            for i in 0..v.len() {
                for j in 0..v.len() {
                    if v[i] > v[j] && v.iter().any(|&x| x > 0.0) {
                        prop_assert!(sums[i] > sums[j]);
                    }
                }
            }
        }
    }
}
