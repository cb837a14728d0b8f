//! Feature scores from the regularized sum over all walks of the affinity graph.
//!
//! With `A` the affinity matrix and `r` a damping factor, the energy matrix
//! `Č = Σ_{l≥1} r^l A^l = (I - rA)^-1 - I` collects every walk of every length
//! between two features, longer walks weighted down geometrically. A feature's
//! score is its row sum of `Č`. The series converges when `r ρ(A) < 1`, so `r`
//! is picked as `damping / ρ(A)`.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::graph::AffinityGraph;
use crate::linalg::{Lu, PIVOT_THRESHOLD};
use crate::plsa::{self, EmConfig, PlsaModel};
use crate::quantizer::{self, PhiMode, TokenizedFeatures, DEFAULT_TOKENS};

pub const DEFAULT_DAMPING: f64 = 0.9;

/// Spectral radii at or below this are treated as zero by [`choose_r`].
pub const RADIUS_EPSILON: f64 = 1e-12;

pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 1000;

/// Outcome of power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRadius {
    /// Best estimate of `ρ(A)`. Meaningful even when `converged` is false.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration from the all-ones vector, estimating `ρ(A)` as `|A x|` for
/// unit `x`. Intended for non-negative matrices.
///
/// For a rank-one `A = v vᵀ` the second product is already aligned with `v`
/// and the estimate is exact.
pub fn spectral_radius(a: ArrayView2<'_, f64>, tol: f64, max_iter: usize) -> SpectralRadius {
    let n = a.nrows();
    if n == 0 {
        return SpectralRadius {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut x = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut estimate = f64::NAN;
    for iter in 1..=max_iter {
        let y = a.dot(&x);
        let norm = y.dot(&y).sqrt();
        if norm == 0.0 {
            return SpectralRadius {
                value: 0.0,
                iterations: iter,
                converged: true,
            };
        }
        let converged = (norm - estimate).abs() <= tol * norm;
        estimate = norm;
        if converged {
            return SpectralRadius {
                value: estimate,
                iterations: iter,
                converged: true,
            };
        }
        x = y / norm;
    }
    SpectralRadius {
        value: estimate,
        iterations: max_iter,
        converged: false,
    }
}

/// `r = damping / ρ`, so that `r ρ = damping < 1`. A vanishing `ρ` yields `damping`.
pub fn choose_r(rho: f64, damping: f64) -> Result<f64> {
    validate_damping(damping)?;
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("spectral radius {rho} is negative")));
    }
    if rho <= RADIUS_EPSILON {
        Ok(damping)
    } else {
        Ok(damping / rho)
    }
}

fn validate_damping(damping: f64) -> Result<()> {
    if damping > 0.0 && damping < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1), got {damping}"
        )))
    }
}

/// `Č = (I - rA)^-1 - I` through an LU factorization of `I - rA`.
pub fn energy_matrix(a: ArrayView2<'_, f64>, r: f64) -> Result<Array2<f64>> {
    let (n, cols) = a.dim();
    if n != cols {
        return Err(Error::ShapeMismatch(format!("adjacency is {n}x{cols}")));
    }
    let mut system = a.mapv(|w| -r * w);
    system.diag_mut().mapv_inplace(|d| d + 1.0);
    let mut c = Lu::factor(system.view())?.inverse();
    c.diag_mut().mapv_inplace(|d| d - 1.0);
    Ok(c)
}

/// Closed form of [`energy_matrix`] for `A = v vᵀ`:
/// `(I - r v vᵀ)^-1 - I = r v vᵀ / (1 - r |v|^2)`.
pub fn energy_matrix_rank_one(v: ArrayView1<'_, f64>, r: f64) -> Result<Array2<f64>> {
    let denom = 1.0 - r * v.dot(&v);
    if !(denom.abs() >= PIVOT_THRESHOLD) {
        return Err(Error::SingularMatrix {
            column: 0,
            pivot: denom,
        });
    }
    let scale = r / denom;
    let n = v.len();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| scale * v[i] * v[j]))
}

/// Row sums of the energy matrix.
pub fn scores(c_check: ArrayView2<'_, f64>) -> Array1<f64> {
    c_check.sum_axis(Axis(1))
}

/// Feature indices sorted by decreasing score, ties by ascending index.
pub fn order_by_score(scores: ArrayView1<'_, f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order
}

/// Nodes whose rows and columns are bitwise identical are interchangeable, so
/// their exact scores coincide. Elimination order can still leave them a few
/// ulps apart; this assigns each such group its mean score.
fn equalize_interchangeable(a: ArrayView2<'_, f64>, scores: &mut Array1<f64>) {
    let n = a.nrows();
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let key = a.row(i).iter().map(|v| v.to_bits()).collect();
        groups.entry(key).or_default().push(i);
    }
    for members in groups.values().filter(|g| g.len() > 1) {
        let mut remaining = members.clone();
        while let Some(&head) = remaining.first() {
            let (same, rest): (Vec<usize>, Vec<usize>) = remaining
                .iter()
                .partition(|&&j| a.column(j).iter().zip(a.column(head)).all(|(x, y)| x.to_bits() == y.to_bits()));
            if same.len() > 1 {
                let mean = same.iter().map(|&j| scores[j]).sum::<f64>() / same.len() as f64;
                for &j in &same {
                    scores[j] = mean;
                }
            }
            remaining = rest;
        }
    }
}

/// How the energy matrix is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyKernel {
    /// Generic LU inverse of `I - rA`.
    #[default]
    Lu,
    /// Sherman-Morrison closed form; needs the self-loops of the rank-one graph.
    RankOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Feature indices, most relevant first.
    pub order: Vec<usize>,
    /// Score of every feature, in input order.
    pub scores: Array1<f64>,
    pub r: f64,
    pub spectral_radius: f64,
}

impl Ranking {
    /// The `k` best features (fewer if there are not that many).
    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }
}

/// Scores and orders the nodes of an affinity graph.
pub fn rank_graph(graph: &AffinityGraph, damping: f64, kernel: EnergyKernel) -> Result<Ranking> {
    validate_damping(damping)?;
    let a = graph.a.view();
    let estimate = spectral_radius(a, POWER_TOLERANCE, POWER_MAX_ITER);
    // Without convergence fall back to the largest row sum, an upper bound on
    // ρ for non-negative matrices, so r ρ stays below one.
    let rho = if estimate.converged {
        estimate.value
    } else {
        scores(a).iter().fold(estimate.value, |acc, &s| acc.max(s))
    };
    let r = choose_r(rho, damping)?;
    let c = match kernel {
        EnergyKernel::Lu => energy_matrix(a, r)?,
        EnergyKernel::RankOne => {
            if !graph.has_self_loops() {
                return Err(Error::InvalidParameter(
                    "rank-one kernel requires the diagonal of the affinity graph".into(),
                ));
            }
            energy_matrix_rank_one(graph.relevancy.view(), r)?
        }
    };
    let mut s = scores(c.view());
    equalize_interchangeable(a, &mut s);
    let order = order_by_score(s.view());
    Ok(Ranking {
        order,
        scores: s,
        r,
        spectral_radius: rho,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankParams {
    pub n_tokens: usize,
    pub phi_mode: PhiMode,
    pub em: EmConfig,
    pub damping: f64,
    pub zero_diagonal: bool,
    pub kernel: EnergyKernel,
}

impl Default for RankParams {
    fn default() -> Self {
        Self {
            n_tokens: DEFAULT_TOKENS,
            phi_mode: PhiMode::default(),
            em: EmConfig::default(),
            damping: DEFAULT_DAMPING,
            zero_diagonal: false,
            kernel: EnergyKernel::default(),
        }
    }
}

/// Everything the pipeline produced, for diagnostics.
#[derive(Debug, Clone)]
pub struct RankOutcome {
    pub ranking: Ranking,
    pub tokens: TokenizedFeatures,
    pub model: PlsaModel,
    pub graph: AffinityGraph,
}

/// Full pipeline: quantize, fit the latent model, build the graph, rank.
pub fn rank(data: &FeatureMatrix, params: &RankParams) -> Result<RankOutcome> {
    validate_damping(params.damping)?;
    let tokens = quantizer::quantize_all(data, params.n_tokens, params.phi_mode)?;
    let model = plsa::fit(tokens.count_table().view(), &params.em)?;
    let mut graph = AffinityGraph::from_model(&model)?;
    if params.zero_diagonal {
        graph = graph.zero_diagonal();
    }
    let ranking = rank_graph(&graph, params.damping, params.kernel)?;
    Ok(RankOutcome {
        ranking,
        tokens,
        model,
        graph,
    })
}
