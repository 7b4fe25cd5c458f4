//! Classical Mathieu dynamics `ẍ + k(t) x = 0`: fixed-step RK4 trajectories,
//! Hermite interpolation, zero finding and Floquet (monodromy) analysis.

use std::io::{self, Write};

use num_complex::Complex;

use crate::error::{validation, Error, Result};
use crate::scalar::Real;
use crate::trapcore::{stiffness, TimeGrid, TrapConfig};

/// Classical solution sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    grid: TimeGrid<T>,
    x: Vec<T>,
    xdot: Vec<T>,
    initial: (T, T),
}

impl<T: Real> Trajectory<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn xdot(&self) -> &[T] {
        &self.xdot
    }

    pub fn initial(&self) -> (T, T) {
        self.initial
    }

    /// Same trajectory with `x` and `ẋ` multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            grid: self.grid,
            x: self.x.iter().map(|&x| x * factor).collect(),
            xdot: self.xdot.iter().map(|&v| v * factor).collect(),
            initial: (self.initial.0 * factor, self.initial.1 * factor),
        }
    }

    /// Interpolated `(x, ẋ)`; see [`evaluate`].
    pub fn at(&self, t: T) -> Result<(T, T)> {
        evaluate(self, t)
    }

    /// Writes `t,x,xdot` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,xdot")?;
        for (k, t) in self.grid.times().enumerate() {
            writeln!(out, "{t:.16e},{:.16e},{:.16e}", self.x[k], self.xdot[k])?;
        }
        Ok(())
    }
}

#[inline]
fn rk4_step<T: Real>(config: &TrapConfig<T>, t: T, h: T, (x, v): (T, T)) -> (T, T) {
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    let th = t + half * h;
    let k_mid = stiffness(config, th);
    let k1x = v;
    let k1v = -stiffness(config, t) * x;
    let k2x = v + half * h * k1v;
    let k2v = -k_mid * (x + half * h * k1x);
    let k3x = v + half * h * k2v;
    let k3v = -k_mid * (x + half * h * k2x);
    let k4x = v + h * k3v;
    let k4v = -stiffness(config, t + h) * (x + h * k3x);
    (
        x + h * sixth * (k1x + two * k2x + two * k3x + k4x),
        v + h * sixth * (k1v + two * k2v + two * k3v + k4v),
    )
}

/// Integrates the state `(x, ẋ)` from `t_from` to `t_to` in `steps` equal RK4
/// steps. `t_to < t_from` integrates backwards.
pub fn propagate<T: Real>(
    config: &TrapConfig<T>,
    t_from: T,
    t_to: T,
    steps: usize,
    state: (T, T),
) -> Result<(T, T)> {
    if steps == 0 {
        return Err(validation("steps must be positive"));
    }
    let h = (t_to - t_from) / T::from_index(steps);
    let mut s = state;
    for k in 0..steps {
        let t = t_from + T::from_index(k) * h;
        s = rk4_step(config, t, h, s);
        if !(s.0.is_finite() && s.1.is_finite()) {
            return Err(Error::NumericRange {
                t: (t + h).to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(s)
}

/// Samples the solution with `x(t′) = x0`, `ẋ(t′) = v0` on every grid node.
pub fn integrate_trajectory<T: Real>(
    config: &TrapConfig<T>,
    grid: &TimeGrid<T>,
    x0: T,
    v0: T,
) -> Result<Trajectory<T>> {
    let n = grid.len();
    let mut x = Vec::with_capacity(n);
    let mut xdot = Vec::with_capacity(n);
    let h = grid.dt();
    let mut state = (x0, v0);
    x.push(x0);
    xdot.push(v0);
    for k in 0..grid.steps() {
        let t = grid.time(k);
        state = rk4_step(config, t, h, state);
        if !(state.0.is_finite() && state.1.is_finite()) {
            return Err(Error::NumericRange {
                t: grid.time(k + 1).to_f64().unwrap_or(f64::NAN),
            });
        }
        x.push(state.0);
        xdot.push(state.1);
    }
    Ok(Trajectory {
        grid: *grid,
        x,
        xdot,
        initial: (x0, v0),
    })
}

/// Cubic Hermite interpolation of `(x, ẋ)`; exact at grid nodes.
pub fn evaluate<T: Real>(traj: &Trajectory<T>, t: T) -> Result<(T, T)> {
    let grid = &traj.grid;
    if !grid.contains(t) {
        return Err(Error::OutOfRange {
            t: t.to_f64().unwrap_or(f64::NAN),
            start: grid.start().to_f64().unwrap_or(f64::NAN),
            end: grid.end().to_f64().unwrap_or(f64::NAN),
        });
    }
    let h = grid.dt();
    let k = ((t - grid.start()) / h)
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(grid.steps() - 1);
    if t == grid.time(k) {
        return Ok((traj.x[k], traj.xdot[k]));
    }
    if t == grid.time(k + 1) {
        return Ok((traj.x[k + 1], traj.xdot[k + 1]));
    }
    Ok(hermite(traj, k, (t - grid.time(k)) / h))
}

fn hermite<T: Real>(traj: &Trajectory<T>, k: usize, s: T) -> (T, T) {
    let h = traj.grid.dt();
    let (x0, x1) = (traj.x[k], traj.x[k + 1]);
    let (v0, v1) = (traj.xdot[k], traj.xdot[k + 1]);
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let six = T::lit(6.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + one;
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    let d00 = six * s2 - six * s;
    let d10 = three * s2 - four * s + one;
    let d01 = -six * s2 + six * s;
    let d11 = three * s2 - two * s;
    let x = h00 * x0 + h10 * h * v0 + h01 * x1 + h11 * h * v1;
    let v = (d00 * x0 + d01 * x1) / h + d10 * v0 + d11 * v1;
    (x, v)
}

/// Sign changes of `x`, refined by bisection on the Hermite interpolant to
/// `dt·1e-6`. Nodes where `x` is exactly zero are reported as-is.
pub fn find_zeros<T: Real>(traj: &Trajectory<T>) -> Vec<T> {
    let grid = &traj.grid;
    let tol = grid.dt() * T::lit(1e-6);
    let mut zeros = Vec::new();
    for k in 0..=grid.steps() {
        let xk = traj.x[k];
        if xk == T::zero() {
            zeros.push(grid.time(k));
            continue;
        }
        if k == grid.steps() {
            break;
        }
        let xn = traj.x[k + 1];
        if xn != T::zero() && (xk < T::zero()) != (xn < T::zero()) {
            let (mut lo, mut hi) = (T::zero(), T::one());
            let h = grid.dt();
            let negative_at_lo = xk < T::zero();
            while (hi - lo) * h > tol {
                let mid = T::lit(0.5) * (lo + hi);
                let (xm, _) = hermite(traj, k, mid);
                if (xm < T::zero()) == negative_at_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push(grid.time(k) + T::lit(0.5) * (lo + hi) * h);
        }
    }
    zeros
}

/// Floquet classification of a drive period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    /// `|trace| = 2` within [`MARGINAL_TOLERANCE`]; counted as stable.
    Marginal,
    Unstable,
}

/// Band around `|trace| = 2` treated as the stability boundary itself.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// One-period state-transition matrix and its Floquet data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyReport<T> {
    /// Row-major; column `j` is the state reached from basis vector `e_j`.
    pub matrix: [[T; 2]; 2],
    pub trace: T,
    pub determinant: T,
    pub multipliers: [Complex<T>; 2],
    pub stability: Stability,
}

impl<T: Real> MonodromyReport<T> {
    pub fn is_stable(&self) -> bool {
        self.stability != Stability::Unstable
    }
}

/// Monodromy matrix over one period `2π/ω`, starting at `t = 0`.
pub fn monodromy<T: Real>(
    config: &TrapConfig<T>,
    steps_per_period: usize,
) -> Result<MonodromyReport<T>> {
    let period = config.period();
    let c0 = propagate(config, T::zero(), period, steps_per_period, (T::one(), T::zero()))?;
    let c1 = propagate(config, T::zero(), period, steps_per_period, (T::zero(), T::one()))?;
    let matrix = [[c0.0, c1.0], [c0.1, c1.1]];
    let trace = matrix[0][0] + matrix[1][1];
    let determinant = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    let half_trace = Complex::new(trace * T::lit(0.5), T::zero());
    let root = (half_trace * half_trace - Complex::new(determinant, T::zero())).sqrt();
    let multipliers = [half_trace + root, half_trace - root];

    let two = T::lit(2.0);
    let tol = T::lit(MARGINAL_TOLERANCE).max(T::lit(100.0) * T::epsilon());
    let excess = trace.abs() - two;
    let stability = if excess.abs() <= tol {
        Stability::Marginal
    } else if excess < T::zero() {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    Ok(MonodromyReport {
        matrix,
        trace,
        determinant,
        multipliers,
        stability,
    })
}
