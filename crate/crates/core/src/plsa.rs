//! Two-topic latent model over (feature, token) co-occurrences, fitted by EM.
//!
//! Topic `z1` stands for relevancy and `z2` for irrelevancy. The identity of
//! the topics is fixed by the initial token distributions: `P(t|z1)` rises
//! linearly with the token value and `P(t|z2)` is its mirror image. The
//! model is parameterized by `P(z)`, `P(f|z)` and `P(t|z)`; the per-feature
//! mixing weights `P(z|f)` follow from Bayes' rule.

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Number of latent topics. Index 0 is relevancy, index 1 irrelevancy.
pub const TOPICS: usize = 2;

/// Floor for `P(t|f)` inside the logarithm when a token was observed.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop once `|L_k - L_{k-1}| / |L_{k-1}|` drops below this.
    pub rel_tolerance: f64,
    /// Added to every count before fitting.
    pub smoothing: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            rel_tolerance: 1e-6,
            smoothing: 0.0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tolerance must be positive, got {}",
                self.rel_tolerance
            )));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothing must be a finite non-negative number, got {}",
                self.smoothing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsaModel {
    /// `P(z)`, length 2.
    pub p_z: Array1<f64>,
    /// `n x 2`, each column a distribution over features.
    pub p_f_given_z: Array2<f64>,
    /// `T x 2`, each column a distribution over tokens.
    pub p_t_given_z: Array2<f64>,
    /// `n x 2`, each row a distribution over topics.
    pub p_z_given_f: Array2<f64>,
    /// Log-likelihood of the initial model followed by one entry per EM iteration.
    pub log_likelihood_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl PlsaModel {
    pub fn n_features(&self) -> usize {
        self.p_f_given_z.nrows()
    }

    pub fn n_tokens(&self) -> usize {
        self.p_t_given_z.nrows()
    }

    /// `P(z1|f)` for every feature.
    pub fn relevancy(&self) -> Array1<f64> {
        self.p_z_given_f.column(0).to_owned()
    }

    /// Recomputes `P(z|f)` from `P(f|z)` and `P(z)`.
    pub fn refresh_posterior(&mut self) {
        self.p_z_given_f = bayes_posterior(self.p_f_given_z.view(), &self.p_z);
    }

    /// Largest deviation from 1 of any distribution the model holds.
    pub fn normalization_error(&self) -> f64 {
        let mut worst = (self.p_z.sum() - 1.0).abs();
        for col in self.p_f_given_z.columns() {
            worst = worst.max((col.sum() - 1.0).abs());
        }
        for col in self.p_t_given_z.columns() {
            worst = worst.max((col.sum() - 1.0).abs());
        }
        for row in self.p_z_given_f.rows() {
            worst = worst.max((row.sum() - 1.0).abs());
        }
        worst
    }
}

/// `P(z|f) ∝ P(f|z) P(z)`; rows with zero mass become uniform.
pub fn bayes_posterior(p_f_given_z: ArrayView2<'_, f64>, p_z: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(p_f_given_z.raw_dim());
    for (mut row, src) in out.outer_iter_mut().zip(p_f_given_z.outer_iter()) {
        let joint = [src[0] * p_z[0], src[1] * p_z[1]];
        let total = joint[0] + joint[1];
        if total > 0.0 {
            row[0] = joint[0] / total;
            row[1] = joint[1] / total;
        } else {
            row.fill(0.5);
        }
    }
    out
}

/// Unfitted model: linearly spaced token priors, uniform `P(f|z)`, balanced `P(z)`.
pub fn init_priors(n_features: usize, n_tokens: usize) -> Result<PlsaModel> {
    if n_features < 1 {
        return Err(Error::InvalidParameter("need at least one feature".into()));
    }
    if n_tokens < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 tokens, got {n_tokens}"
        )));
    }
    let total = (n_tokens * (n_tokens + 1) / 2) as f64;
    let mut p_t_given_z = Array2::zeros((n_tokens, TOPICS));
    for t in 0..n_tokens {
        p_t_given_z[[t, 0]] = (t + 1) as f64 / total;
        p_t_given_z[[t, 1]] = (n_tokens - t) as f64 / total;
    }
    let p_z = Array1::from_elem(TOPICS, 0.5);
    let p_f_given_z = Array2::from_elem((n_features, TOPICS), 1.0 / n_features as f64);
    let p_z_given_f = bayes_posterior(p_f_given_z.view(), &p_z);
    Ok(PlsaModel {
        p_z,
        p_f_given_z,
        p_t_given_z,
        p_z_given_f,
        log_likelihood_trace: Vec::new(),
        iterations_run: 0,
        converged: false,
    })
}

fn check_shape(model: &PlsaModel, counts: ArrayView2<'_, f64>) -> Result<()> {
    if counts.dim() != (model.n_features(), model.n_tokens()) {
        return Err(Error::ShapeMismatch(format!(
            "count table is {:?}, model expects ({}, {})",
            counts.dim(),
            model.n_features(),
            model.n_tokens()
        )));
    }
    Ok(())
}

/// Topic posteriors `P(z|f,t)`, shaped `n x T x 2`.
pub fn e_step(model: &PlsaModel, counts: ArrayView2<'_, f64>) -> Result<Array3<f64>> {
    check_shape(model, counts)?;
    let (n, t_len) = counts.dim();
    let mut post = Array3::zeros((n, t_len, TOPICS));
    for f in 0..n {
        for t in 0..t_len {
            let w1 = model.p_z[0] * model.p_f_given_z[[f, 0]] * model.p_t_given_z[[t, 0]];
            let w2 = model.p_z[1] * model.p_f_given_z[[f, 1]] * model.p_t_given_z[[t, 1]];
            let total = w1 + w2;
            if total > 0.0 {
                post[[f, t, 0]] = w1 / total;
                post[[f, t, 1]] = w2 / total;
            } else {
                post[[f, t, 0]] = 0.5;
                post[[f, t, 1]] = 0.5;
            }
        }
    }
    Ok(post)
}

/// Re-estimated parameters from one M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct MStep {
    pub p_t_given_z: Array2<f64>,
    pub p_f_given_z: Array2<f64>,
    pub p_z: Array1<f64>,
}

pub fn m_step(posteriors: &Array3<f64>, counts: ArrayView2<'_, f64>) -> Result<MStep> {
    let (n, t_len, topics) = posteriors.dim();
    if (n, t_len) != counts.dim() || topics != TOPICS {
        return Err(Error::ShapeMismatch(format!(
            "posteriors {:?} do not match count table {:?}",
            posteriors.dim(),
            counts.dim()
        )));
    }
    // Expected counts per (f, t, z).
    let mut weighted = posteriors.clone();
    for ((f, t, _), w) in weighted.indexed_iter_mut() {
        *w *= counts[[f, t]];
    }
    let mass_t = weighted.sum_axis(Axis(0)); // T x 2
    let mass_f = weighted.sum_axis(Axis(1)); // n x 2
    let mass_z = mass_t.sum_axis(Axis(0)); // 2
    let total = counts.sum();

    let mut p_t_given_z = mass_t;
    let mut p_f_given_z = mass_f;
    for z in 0..TOPICS {
        normalize_or_uniform(p_t_given_z.column_mut(z), mass_z[z]);
        normalize_or_uniform(p_f_given_z.column_mut(z), mass_z[z]);
    }
    let p_z = if total > 0.0 {
        mass_z / total
    } else {
        Array1::from_elem(TOPICS, 0.5)
    };
    Ok(MStep {
        p_t_given_z,
        p_f_given_z,
        p_z,
    })
}

fn normalize_or_uniform(mut column: ndarray::ArrayViewMut1<'_, f64>, mass: f64) {
    if mass > 0.0 {
        column.mapv_inplace(|v| v / mass);
    } else {
        let len = column.len() as f64;
        column.fill(1.0 / len);
    }
}

/// `sum_f sum_t Q(f,t) log P(t|f)` with `P(t|f) = sum_z P(t|z) P(z|f)`.
pub fn log_likelihood(model: &PlsaModel, counts: ArrayView2<'_, f64>) -> Result<f64> {
    check_shape(model, counts)?;
    let mut total = 0.0;
    for ((f, t), &q) in counts.indexed_iter() {
        if q == 0.0 {
            continue;
        }
        let p = model.p_t_given_z[[t, 0]] * model.p_z_given_f[[f, 0]]
            + model.p_t_given_z[[t, 1]] * model.p_z_given_f[[f, 1]];
        total += q * p.max(PROBABILITY_FLOOR).ln();
    }
    Ok(total)
}

/// Stepwise EM driver. [`fit`] runs it to completion; tests and diagnostics
/// can step it manually and inspect the model between iterations.
#[derive(Debug, Clone)]
pub struct EmRun {
    counts: Array2<f64>,
    config: EmConfig,
    model: PlsaModel,
}

impl EmRun {
    pub fn new(counts: ArrayView2<'_, f64>, config: EmConfig) -> Result<Self> {
        config.validate()?;
        if counts.iter().any(|&q| !(q >= 0.0 && q.is_finite())) {
            return Err(Error::InvalidParameter(
                "counts must be finite and non-negative".into(),
            ));
        }
        let counts = counts.mapv(|q| q + config.smoothing);
        if !counts.iter().any(|&q| q > 0.0) {
            return Err(Error::DegenerateCounts);
        }
        let (n, t_len) = counts.dim();
        let mut model = init_priors(n, t_len)?;
        let ll = log_likelihood(&model, counts.view())?;
        model.log_likelihood_trace.push(ll);
        Ok(Self {
            counts,
            config,
            model,
        })
    }

    /// Runs one E-step and M-step and returns the new log-likelihood.
    pub fn step(&mut self) -> Result<f64> {
        let post = e_step(&self.model, self.counts.view())?;
        let update = m_step(&post, self.counts.view())?;
        self.model.p_t_given_z = update.p_t_given_z;
        self.model.p_f_given_z = update.p_f_given_z;
        self.model.p_z = update.p_z;
        self.model.refresh_posterior();
        let ll = log_likelihood(&self.model, self.counts.view())?;
        self.model.log_likelihood_trace.push(ll);
        self.model.iterations_run += 1;
        Ok(ll)
    }

    /// Relative change of the last iteration, if one has run.
    pub fn relative_change(&self) -> Option<f64> {
        let trace = &self.model.log_likelihood_trace;
        let [.., prev, last] = trace.as_slice() else {
            return None;
        };
        let diff = (last - prev).abs();
        Some(if diff == 0.0 { 0.0 } else { diff / prev.abs().max(f64::MIN_POSITIVE) })
    }

    pub fn model(&self) -> &PlsaModel {
        &self.model
    }

    /// Iterates until the relative tolerance or the iteration cap is hit.
    pub fn run(mut self) -> Result<PlsaModel> {
        while self.model.iterations_run < self.config.max_iterations {
            self.step()?;
            if self.relative_change().is_some_and(|r| r < self.config.rel_tolerance) {
                self.model.converged = true;
                break;
            }
        }
        Ok(self.model)
    }
}

/// Fits the two-topic model to a `n x T` count table.
pub fn fit(counts: ArrayView2<'_, f64>, config: &EmConfig) -> Result<PlsaModel> {
    EmRun::new(counts, *config)?.run()
}

/// Mirrors the token axis, `t -> T + 1 - t`.
pub fn reverse_tokens(counts: ArrayView2<'_, f64>) -> Array2<f64> {
    counts.slice(s![.., ..;-1]).to_owned()
}
