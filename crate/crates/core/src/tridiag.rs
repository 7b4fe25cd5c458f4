//! Complex symmetric tridiagonal matrices and their LDLᵀ factorization.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Complex symmetric (not Hermitian) tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<Complex<T>>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<Complex<T>>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![Complex::zero(); n],
            off: vec![Complex::zero(); n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc = acc + self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc = acc + self.off[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> T {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].norm();
                if i > 0 {
                    s = s + self.off[i - 1].norm();
                }
                if i + 1 < n {
                    s = s + self.off[i].norm();
                }
                s
            })
            .fold(T::zero(), T::max)
    }

    /// `M = L D Lᵀ` without pivoting.
    pub fn factor(&self) -> Result<LdlFactor<T>> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Degenerate("empty matrix".into()));
        }
        let mut pivots = Vec::with_capacity(n);
        let mut multipliers = Vec::with_capacity(n - 1);
        pivots.push(self.diag[0]);
        for i in 0..n - 1 {
            let d = pivots[i];
            if d.norm() == T::zero() || !d.norm().is_finite() {
                return Err(Error::Degenerate(format!("zero pivot at row {i}")));
            }
            let l = self.off[i] / d;
            multipliers.push(l);
            pivots.push(self.diag[i + 1] - l * self.off[i]);
        }
        let last = pivots[n - 1];
        if last.norm() == T::zero() || !last.norm().is_finite() {
            return Err(Error::Degenerate(format!("zero pivot at row {}", n - 1)));
        }
        Ok(LdlFactor {
            pivots,
            multipliers,
        })
    }
}

/// LDLᵀ factors of a complex symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlFactor<T> {
    pub pivots: Vec<Complex<T>>,
    pub multipliers: Vec<Complex<T>>,
}

impl<T: Real> LdlFactor<T> {
    /// `Σ ln d_i` with principal logarithms. For `M = −iK/ħ` with real `K`
    /// the pivot signs follow the inertia of `K`, so the imaginary part
    /// carries the Maslov phase.
    pub fn log_det(&self) -> Complex<T> {
        self.pivots
            .iter()
            .fold(Complex::zero(), |acc, d| acc + d.ln())
    }

    pub fn solve(&self, rhs: &[Complex<T>]) -> Vec<Complex<T>> {
        self.solve_with(rhs, false)
    }

    /// Solves with the entrywise conjugate matrix, i.e. `Mᴴ` for symmetric `M`.
    pub fn solve_conj(&self, rhs: &[Complex<T>]) -> Vec<Complex<T>> {
        self.solve_with(rhs, true)
    }

    fn solve_with(&self, rhs: &[Complex<T>], conj: bool) -> Vec<Complex<T>> {
        let n = self.pivots.len();
        assert_eq!(rhs.len(), n);
        let pick = |z: Complex<T>| if conj { z.conj() } else { z };
        let mut y = rhs.to_vec();
        for i in 1..n {
            y[i] = y[i] - pick(self.multipliers[i - 1]) * y[i - 1];
        }
        for i in 0..n {
            y[i] = y[i] / pick(self.pivots[i]);
        }
        for i in (0..n - 1).rev() {
            y[i] = y[i] - pick(self.multipliers[i]) * y[i + 1];
        }
        y
    }
}
