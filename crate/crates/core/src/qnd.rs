//! QND variables `A = ρ p + σ q` built from classical trajectories.
//!
//! For any solution `x(t)` of the trap equation, `f = −m ẋ / x` solves the
//! Riccati equation `f′ = f²/m + m k(t)`, and `ρ = σ f` gives a member of the
//! QND family for an arbitrary nonvanishing `σ(t)`.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{validation, Error, Result};
use crate::mathieu::{evaluate, find_zeros, Trajectory};
use crate::scalar::Real;
use crate::trapcore::{stiffness, TrapConfig};

/// Time-dependent coefficient `σ(t)` of the position term.
#[derive(Clone)]
pub enum Sigma<T> {
    Constant(T),
    Function(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> Sigma<T> {
    pub fn unit() -> Self {
        Sigma::Constant(T::one())
    }

    pub fn from_fn(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Sigma::Function(Arc::new(f))
    }

    pub fn at(&self, t: T) -> T {
        match self {
            Sigma::Constant(c) => *c,
            Sigma::Function(f) => f(t),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Sigma::Constant(c) if *c == T::one())
    }
}

impl<T: Real> Default for Sigma<T> {
    fn default() -> Self {
        Self::unit()
    }
}

impl<T: fmt::Debug> fmt::Debug for Sigma<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Sigma::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// One member of the QND family, sampled on the trajectory grid.
#[derive(Debug, Clone)]
pub struct QndElement<T> {
    trajectory: Trajectory<T>,
    mass: T,
    sigma: Sigma<T>,
    sigma_samples: Vec<T>,
    f: Vec<T>,
    rho: Vec<T>,
    singularities: Vec<T>,
}

/// Builds the QND element of `traj` with coefficient `sigma`.
///
/// Fails with [`Error::SingularWindow`] if `x` vanishes anywhere in the window.
pub fn build_qnd<T: Real>(traj: &Trajectory<T>, mass: T, sigma: Sigma<T>) -> Result<QndElement<T>> {
    if !(mass.is_finite() && mass > T::zero()) {
        return Err(validation("mass must be positive"));
    }
    let zeros = find_zeros(traj);
    if !zeros.is_empty() {
        return Err(Error::SingularWindow {
            times: zeros.iter().map(|t| t.to_f64().unwrap_or(f64::NAN)).collect(),
        });
    }
    let grid = traj.grid();
    let sigma_samples: Vec<T> = grid.times().map(|t| sigma.at(t)).collect();
    for (k, pair) in sigma_samples.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if !a.is_finite() || a == T::zero() || (a < T::zero()) != (b < T::zero()) {
            return Err(validation(format!(
                "sigma must not vanish on the window (near t = {})",
                grid.time(k)
            )));
        }
    }
    if sigma_samples[grid.steps()] == T::zero() {
        return Err(validation("sigma must not vanish on the window"));
    }
    let f: Vec<T> = traj
        .x()
        .iter()
        .zip(traj.xdot())
        .map(|(&x, &v)| -mass * v / x)
        .collect();
    let rho = f.iter().zip(&sigma_samples).map(|(&f, &s)| s * f).collect();
    Ok(QndElement {
        trajectory: traj.clone(),
        mass,
        sigma,
        sigma_samples,
        f,
        rho,
        singularities: Vec::new(),
    })
}

impl<T: Real> QndElement<T> {
    pub fn trajectory(&self) -> &Trajectory<T> {
        &self.trajectory
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn sigma(&self) -> &Sigma<T> {
        &self.sigma
    }

    pub fn sigma_samples(&self) -> &[T] {
        &self.sigma_samples
    }

    /// `f = ρ/σ = −m ẋ/x` at grid nodes.
    pub fn f(&self) -> &[T] {
        &self.f
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    /// Times excluded from evaluation. Always empty for a successfully built element.
    pub fn singularities(&self) -> &[T] {
        &self.singularities
    }

    /// Logarithmic derivative `ẋ/x` at grid nodes.
    pub fn log_derivative(&self) -> Vec<T> {
        self.trajectory
            .x()
            .iter()
            .zip(self.trajectory.xdot())
            .map(|(&x, &v)| v / x)
            .collect()
    }

    /// `f(t)` between nodes via the Hermite interpolant of the trajectory.
    pub fn f_at(&self, t: T) -> Result<T> {
        let (x, v) = evaluate(&self.trajectory, t)?;
        if x == T::zero() {
            return Err(Error::SingularWindow {
                times: vec![t.to_f64().unwrap_or(f64::NAN)],
            });
        }
        Ok(-self.mass * v / x)
    }

    /// Writes `t,f,rho,sigma` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,f,rho,sigma")?;
        for (k, t) in self.trajectory.grid().times().enumerate() {
            writeln!(
                out,
                "{t:.16e},{:.16e},{:.16e},{:.16e}",
                self.f[k], self.rho[k], self.sigma_samples[k]
            )?;
        }
        Ok(())
    }
}

/// Nodewise residual of the Riccati equation.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiResidual<T> {
    pub samples: Vec<T>,
    pub max_abs: T,
}

/// Residual `f′ − f²/m − m k(t)` with centered second-order differences
/// inside and four-point one-sided differences at the two ends.
pub fn riccati_residual<T: Real>(elem: &QndElement<T>, config: &TrapConfig<T>) -> RiccatiResidual<T> {
    let grid = elem.trajectory.grid();
    let n = grid.steps();
    let f = &elem.f;
    let m = elem.mass;
    let two_dt = T::lit(2.0) * grid.dt();
    let six_dt = T::lit(6.0) * grid.dt();
    let (c0, c1, c2, c3) = (T::lit(11.0), T::lit(18.0), T::lit(9.0), T::lit(2.0));
    let samples: Vec<T> = (0..=n)
        .map(|k| {
            let df = if n < 3 {
                // too few nodes for the four-point ends
                match k {
                    0 => (-T::lit(3.0) * f[0] + T::lit(4.0) * f[1] - f[2]) / two_dt,
                    _ if k == n => (T::lit(3.0) * f[n] - T::lit(4.0) * f[n - 1] + f[n - 2]) / two_dt,
                    _ => (f[k + 1] - f[k - 1]) / two_dt,
                }
            } else if k == 0 {
                (-c0 * f[0] + c1 * f[1] - c2 * f[2] + c3 * f[3]) / six_dt
            } else if k == n {
                (c0 * f[n] - c1 * f[n - 1] + c2 * f[n - 2] - c3 * f[n - 3]) / six_dt
            } else {
                (f[k + 1] - f[k - 1]) / two_dt
            };
            df - f[k] * f[k] / m - m * stiffness(config, grid.time(k))
        })
        .collect();
    let max_abs = samples.iter().fold(T::zero(), |acc, r| acc.max(r.abs()));
    RiccatiResidual { samples, max_abs }
}

/// `A(t) = σ(t) [f(t) q + p]`. Named after the observable `A` it evaluates.
#[allow(non_snake_case)]
pub fn evaluate_A<T: Real>(elem: &QndElement<T>, q: T, p: T, t: T) -> Result<T> {
    if elem.singularities.contains(&t) {
        return Err(Error::SingularWindow {
            times: vec![t.to_f64().unwrap_or(f64::NAN)],
        });
    }
    let f = elem.f_at(t)?;
    Ok(elem.sigma.at(t) * (f * q + p))
}
