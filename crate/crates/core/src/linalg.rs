//! Dense LU factorization with partial pivoting, and a few matrix helpers.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Pivots with magnitude below this are treated as zero.
pub const PIVOT_THRESHOLD: f64 = 1e-14;

/// `P A = L U` packed into one matrix: `L` (unit diagonal) below, `U` on and above.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: Array2<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: ArrayView2<'_, f64>) -> Result<Self> {
        let (n, cols) = a.dim();
        if n != cols {
            return Err(Error::ShapeMismatch(format!("LU needs a square matrix, got {n}x{cols}")));
        }
        let mut lu = a.to_owned();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|i| (i, lu[[i, k]]))
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .expect("non-empty pivot column");
            if !(pivot.abs() >= PIVOT_THRESHOLD) {
                return Err(Error::SingularMatrix { column: k, pivot });
            }
            if pivot_row != k {
                for j in 0..n {
                    lu.swap([k, j], [pivot_row, j]);
                }
                perm.swap(k, pivot_row);
            }
            for i in k + 1..n {
                let factor = lu[[i, k]] / pivot;
                lu[[i, k]] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[[i, j]] -= factor * lu[[k, j]];
                    }
                }
            }
        }
        Ok(Self { packed: lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.dim();
        let mut x: Array1<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.packed[[i, j]] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.packed[[i, j]] * x[j];
            }
            x[i] = acc / self.packed[[i, i]];
        }
        x
    }

    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        let mut inv = Array2::zeros((n, n));
        let mut unit = Array1::zeros(n);
        for j in 0..n {
            unit[j] = 1.0;
            inv.column_mut(j).assign(&self.solve(&unit));
            unit[j] = 0.0;
        }
        inv
    }
}

/// `A^-1` via [`Lu`].
pub fn inverse(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    Ok(Lu::factor(a)?.inverse())
}

/// Largest absolute entry.
pub fn max_abs(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().fold(0.0, |acc, &v| acc.max(v.abs()))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}
