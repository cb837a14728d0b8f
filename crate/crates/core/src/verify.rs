//! Independent checks of the ranking kernel.
//!
//! Nothing here is used by the pipeline itself. The functions recompute the
//! quantities behind the closed-form energy matrix along separate routes:
//!
//! - explicit enumeration of every walk of a given length,
//! - partial sums of the geometric matrix series,
//! - the fundamental matrix of an absorbing Markov chain, obtained by
//!   Gauss-Jordan elimination rather than LU, and powers of its transition
//!   matrix.
//!
//! [`run_suites`] bundles them into randomized equivalence suites that take
//! the kernel under test as a parameter.

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::max_abs_diff;
use crate::ranker::{choose_r, spectral_radius};
use crate::synth::SeededRng;

pub const MAX_ENUM_NODES: usize = 8;
pub const MAX_ENUM_LENGTH: usize = 12;

/// Sum over every walk `i = v0, v1, ..., vl = j` of `Π a[v_k][v_k+1]`.
/// Nodes may repeat. Equals `(A^l)[i][j]`.
pub fn enumerate_paths(a: ArrayView2<'_, f64>, i: usize, j: usize, length: usize) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch(format!("adjacency is {n}x{}", a.ncols())));
    }
    if n > MAX_ENUM_NODES || length > MAX_ENUM_LENGTH {
        return Err(Error::BudgetExceeded { n, length });
    }
    if length == 0 || i >= n || j >= n {
        return Err(Error::InvalidParameter(format!(
            "need length >= 1 and endpoints below {n}, got ({i}, {j}, {length})"
        )));
    }

    fn walk(a: &ArrayView2<'_, f64>, node: usize, target: usize, steps_left: usize, weight: f64) -> f64 {
        if steps_left == 1 {
            return weight * a[[node, target]];
        }
        (0..a.nrows())
            .map(|next| walk(a, next, target, steps_left - 1, weight * a[[node, next]]))
            .sum()
    }
    Ok(walk(&a, i, j, length, 1.0))
}

/// `A^l` by repeated multiplication.
pub fn matrix_power(a: ArrayView2<'_, f64>, l: usize) -> Array2<f64> {
    let mut out = Array2::eye(a.nrows());
    for _ in 0..l {
        out = out.dot(&a);
    }
    out
}

/// `Σ_{l=1..terms} r^l A^l`.
pub fn truncated_energy(a: ArrayView2<'_, f64>, r: f64, terms: usize) -> Array2<f64> {
    let n = a.nrows();
    let scaled = a.mapv(|w| r * w);
    let mut power = Array2::eye(n);
    let mut total = Array2::zeros((n, n));
    for _ in 0..terms {
        power = power.dot(&scaled);
        total += &power;
    }
    total
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
fn gauss_jordan_inverse(m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    let mut aug = Array2::zeros((n, 2 * n));
    aug.slice_mut(s![.., ..n]).assign(&m);
    aug.slice_mut(s![.., n..]).assign(&Array2::<f64>::eye(n));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| aug[[x, col]].abs().total_cmp(&aug[[y, col]].abs()))
            .expect("non-empty column");
        let pivot = aug[[pivot_row, col]];
        if !(pivot.abs() >= 1e-14) {
            return Err(Error::SingularMatrix { column: col, pivot });
        }
        for k in 0..2 * n {
            aug.swap([col, k], [pivot_row, k]);
        }
        aug.row_mut(col).mapv_inplace(|v| v / pivot);
        let pivot_line = aug.row(col).to_owned();
        for row in 0..n {
            if row != col {
                let factor = aug[[row, col]];
                if factor != 0.0 {
                    aug.row_mut(row).scaled_add(-factor, &pivot_line);
                }
            }
        }
    }
    Ok(aug.slice(s![.., n..]).to_owned())
}

/// Absorbing Markov chain in canonical form
///
/// ```text
/// T = | I  0 |
///     | R  A |
/// ```
///
/// with the `q` absorbing states first and the `n` transient states after.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    t: Array2<f64>,
    q: usize,
}

impl AbsorbingChain {
    /// Validates a full transition matrix whose first `q` states absorb.
    pub fn new(t: Array2<f64>, q: usize) -> Result<Self> {
        let size = t.nrows();
        if t.ncols() != size || q == 0 || q > size {
            return Err(Error::InvalidChain(format!(
                "{}x{} matrix with {q} absorbing states",
                t.nrows(),
                t.ncols()
            )));
        }
        for (i, row) in t.outer_iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InvalidChain(format!("row {i} has a negative entry")));
            }
            if (row.sum() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidChain(format!("row {i} sums to {}", row.sum())));
            }
            if i < q && row[i] != 1.0 {
                return Err(Error::InvalidChain(format!("absorbing row {i} is not a unit row")));
            }
        }
        let chain = Self { t, q };
        let rho = spectral_radius(chain.a_block().view(), 1e-14, 100_000).value;
        if !(rho < 1.0) {
            return Err(Error::InvalidChain(format!(
                "transient block has spectral radius {rho}"
            )));
        }
        Ok(chain)
    }

    /// Assembles `T` from the transient block `A` (`n x n`) and `R` (`n x q`).
    pub fn from_blocks(a_block: ArrayView2<'_, f64>, r_block: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a_block.nrows();
        let q = r_block.ncols();
        if a_block.ncols() != n || r_block.nrows() != n {
            return Err(Error::ShapeMismatch(format!(
                "A is {:?}, R is {:?}",
                a_block.dim(),
                r_block.dim()
            )));
        }
        let mut t = Array2::zeros((q + n, q + n));
        t.slice_mut(s![..q, ..q]).assign(&Array2::<f64>::eye(q));
        t.slice_mut(s![q.., ..q]).assign(&r_block);
        t.slice_mut(s![q.., q..]).assign(&a_block);
        Self::new(t, q)
    }

    /// Single absorbing state receiving whatever mass each transient row lacks.
    pub fn from_transient(a_block: ArrayView2<'_, f64>) -> Result<Self> {
        let leak = a_block.sum_axis(ndarray::Axis(1)).mapv(|s| 1.0 - s);
        let r_block = leak.insert_axis(ndarray::Axis(1));
        Self::from_blocks(a_block, r_block.view())
    }

    pub fn transition(&self) -> &Array2<f64> {
        &self.t
    }

    pub fn n_absorbing(&self) -> usize {
        self.q
    }

    pub fn n_transient(&self) -> usize {
        self.t.nrows() - self.q
    }

    pub fn a_block(&self) -> Array2<f64> {
        self.t.slice(s![self.q.., self.q..]).to_owned()
    }

    pub fn r_block(&self) -> Array2<f64> {
        self.t.slice(s![self.q.., ..self.q]).to_owned()
    }
}

/// `C = (I - A)^-1`, the expected number of visits to each transient state.
pub fn fundamental_matrix(chain: &AbsorbingChain) -> Result<Array2<f64>> {
    let a = chain.a_block();
    let system = Array2::<f64>::eye(a.nrows()) - &a;
    gauss_jordan_inverse(system.view())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbLimit {
    /// `T^l`.
    pub power: Array2<f64>,
    /// Max deviation of the lower-left block of `T^l` from `(I + A + ... + A^{l-1}) R`.
    pub lower_left_deviation: f64,
    /// Max deviation of the upper blocks of `T^l` from `[I 0]`.
    pub upper_deviation: f64,
    /// Largest absolute entry of the lower-right block `A^l`.
    pub lower_right_max: f64,
}

/// Powers `T` and compares its blocks with the series form.
pub fn absorb_limit(chain: &AbsorbingChain, l: usize) -> Result<AbsorbLimit> {
    if l < 1 {
        return Err(Error::InvalidParameter("power must be at least 1".into()));
    }
    let q = chain.n_absorbing();
    let power = matrix_power(chain.transition().view(), l);
    let a = chain.a_block();
    let n = a.nrows();
    let mut partial = Array2::<f64>::zeros((n, n));
    let mut a_k = Array2::<f64>::eye(n);
    for _ in 0..l {
        partial += &a_k;
        a_k = a_k.dot(&a);
    }
    let expected_ll = partial.dot(&chain.r_block());
    let lower_left_deviation = max_abs_diff(power.slice(s![q.., ..q]), expected_ll.view());
    let mut upper = Array2::<f64>::zeros((q, q + n));
    upper.slice_mut(s![.., ..q]).assign(&Array2::<f64>::eye(q));
    let upper_deviation = max_abs_diff(power.slice(s![..q, ..]), upper.view());
    let lower_right_max = crate::linalg::max_abs(power.slice(s![q.., q..]));
    Ok(AbsorbLimit {
        power,
        lower_left_deviation,
        upper_deviation,
        lower_right_max,
    })
}

/// Kernel under test: `(A, r) -> (I - rA)^-1 - I`.
pub type EnergyFn = fn(ArrayView2<'_, f64>, f64) -> Result<Array2<f64>>;

pub const PATH_TOLERANCE: f64 = 1e-12;
pub const SERIES_TOLERANCE: f64 = 1e-8;
pub const MARKOV_TOLERANCE: f64 = 1e-10;
pub const SERIES_TERMS: usize = 400;
pub const ABSORB_POWERS: [usize; 4] = [1, 2, 8, 64];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { trials: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// Description of the first failing case, with enough detail to rerun it.
    pub failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    fn record(&mut self, deviation: f64, describe: impl FnOnce() -> String) {
        if !(deviation <= self.max_deviation) {
            self.max_deviation = deviation;
        }
        if self.failure.is_none() && !(deviation <= self.tolerance) {
            self.failure = Some(describe());
        }
    }

    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            trials: 0,
            max_deviation: 0.0,
            tolerance,
            failure: None,
        }
    }
}

fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.uniform())
}

fn format_matrix(a: &Array2<f64>) -> String {
    let rows: Vec<String> = a
        .outer_iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
            format!("[{}]", cells.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}

/// Walk enumeration against matrix powers on random `4 x 4` matrices, lengths `1..=max_length`.
pub fn path_suite(trials: usize, max_length: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = SeededRng::new(seed);
    let mut report = SuiteReport::new("paths", PATH_TOLERANCE);
    for trial in 0..trials {
        let a = random_matrix(&mut rng, 4, 4);
        for l in 1..=max_length {
            let power = matrix_power(a.view(), l);
            for i in 0..4 {
                for j in 0..4 {
                    let walks = enumerate_paths(a.view(), i, j, l)?;
                    let dev = (walks - power[[i, j]]).abs();
                    report.record(dev, || {
                        format!("trial {trial}: l={l} i={i} j={j} A={}", format_matrix(&a))
                    });
                }
            }
        }
        report.trials += 1;
    }
    Ok(report)
}

/// Closed form against `SERIES_TERMS` partial sums, random `n <= 8`, `r = 0.9 / ρ`.
pub fn series_suite(trials: usize, seed: u64, kernel: EnergyFn) -> Result<SuiteReport> {
    let mut rng = SeededRng::new(seed);
    let mut report = SuiteReport::new("series", SERIES_TOLERANCE);
    for trial in 0..trials {
        let n = 1 + rng.below(8);
        let a = random_matrix(&mut rng, n, n);
        let rho = spectral_radius(a.view(), 1e-14, 100_000).value;
        let r = choose_r(rho, 0.9)?;
        let dev = match kernel(a.view(), r) {
            Ok(closed) => max_abs_diff(closed.view(), truncated_energy(a.view(), r, SERIES_TERMS).view()),
            Err(_) => f64::INFINITY,
        };
        report.record(dev, || format!("trial {trial}: r={r:?} A={}", format_matrix(&a)));
        report.trials += 1;
    }
    Ok(report)
}

/// Random transient blocks with `ρ < 0.9`. Checks `C - I` against the kernel at
/// `r = 1`, and the block structure of `T^l` for each of [`ABSORB_POWERS`].
pub fn markov_suite(trials: usize, seed: u64, kernel: EnergyFn) -> Result<SuiteReport> {
    let mut rng = SeededRng::new(seed);
    let mut report = SuiteReport::new("markov", MARKOV_TOLERANCE);
    for trial in 0..trials {
        let n = 1 + rng.below(8);
        let mut a = random_matrix(&mut rng, n, n);
        // Row sums at most 0.85 bound ρ below 0.9.
        let target = 0.05 + 0.8 * rng.uniform();
        let max_row = a.sum_axis(ndarray::Axis(1)).fold(0.0f64, |m, &s| m.max(s));
        a.mapv_inplace(|w| w * target / max_row);
        let chain = AbsorbingChain::from_transient(a.view())?;
        let mut c = fundamental_matrix(&chain)?;
        c.diag_mut().mapv_inplace(|d| d - 1.0);
        let dev = match kernel(a.view(), 1.0) {
            Ok(energy) => max_abs_diff(c.view(), energy.view()),
            Err(_) => f64::INFINITY,
        };
        report.record(dev, || format!("trial {trial}: fundamental bridge, A={}", format_matrix(&a)));
        for l in ABSORB_POWERS {
            let limit = absorb_limit(&chain, l)?;
            let dev = limit.lower_left_deviation.max(limit.upper_deviation);
            report.record(dev, || format!("trial {trial}: T^{l} blocks, A={}", format_matrix(&a)));
        }
        report.trials += 1;
    }
    Ok(report)
}

/// The three equivalence suites.
pub fn run_suites(config: VerifyConfig, kernel: EnergyFn) -> Result<Vec<SuiteReport>> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    Ok(vec![
        path_suite(config.trials, 6, config.seed)?,
        series_suite(config.trials, config.seed.wrapping_add(1), kernel)?,
        markov_suite(config.trials, config.seed.wrapping_add(2), kernel)?,
    ])
}
