//! Lattice evaluation of (restricted) propagators as finite-dimensional
//! complex Gaussian integrals.
//!
//! The action is discretized on the time grid with a midpoint rule:
//!
//! ```text
//! S_N = Σ dt [ m (q_{k+1} − q_k)² / (2 dt²) − m k(t_k + dt/2) q̄_k² / 2 ],   q̄_k = (q_k + q_{k+1}) / 2
//! ```
//!
//! and the restricted integrand multiplies `exp(iS_N/ħ)` by the Gaussian
//! weight `exp(−(1/TΔa²) Σ dt [f q̄_k + m (q_{k+1} − q_k)/dt − a_k]²)`, where
//! momentum along a path is read as `m q̇`. The interior positions
//! `q_1..q_{N−1}` enter through `exp(−½ qᵀMq + bᵀq + c)`, which is integrated
//! exactly with the Feynman measure `(m / 2πiħ dt)^{N/2}`. With that measure
//! the free-particle lattice propagator equals the continuum one for every N.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{validation, Error, Result};
use crate::qnd::QndElement;
use crate::rpi::{probability_log, probability_ratio_log, ReadoutRecord};
use crate::scalar::Real;
use crate::tridiag::SymTridiagonal;
use crate::trapcore::{stiffness, TimeGrid, TrapConfig};

/// Smallest singular value, relative to the free-particle lowest lattice mode,
/// below which the Gaussian integral is treated as degenerate (caustic).
pub const DEGENERACY_RATIO: f64 = 1e-3;

const INVERSE_ITERATIONS: usize = 40;

/// Quadratic exponent `−½ qᵀMq + bᵀq + c` over the interior lattice positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeAction<T> {
    pub steps: usize,
    pub dt: T,
    pub mass: T,
    pub hbar: T,
    pub form: SymTridiagonal<T>,
    pub linear: Vec<Complex<T>>,
    pub scalar: Complex<T>,
    pub q_start: T,
    pub q_end: T,
}

/// Restriction data for [`build_lattice_action`].
#[derive(Debug, Clone, Copy)]
pub struct Restriction<'a, T> {
    pub element: &'a QndElement<T>,
    pub record: &'a ReadoutRecord<T>,
}

struct Assembler<T> {
    steps: usize,
    q_start: T,
    q_end: T,
    form: SymTridiagonal<T>,
    linear: Vec<Complex<T>>,
    scalar: Complex<T>,
}

impl<T: Real> Assembler<T> {
    fn new(steps: usize, q_start: T, q_end: T) -> Self {
        Self {
            steps,
            q_start,
            q_end,
            form: SymTridiagonal::zeros(steps - 1),
            linear: vec![Complex::zero(); steps - 1],
            scalar: Complex::zero(),
        }
    }

    /// Interior index of lattice node `j`, or its fixed boundary value.
    fn slot(&self, j: usize) -> std::result::Result<usize, T> {
        if j == 0 {
            Err(self.q_start)
        } else if j == self.steps {
            Err(self.q_end)
        } else {
            Ok(j - 1)
        }
    }

    /// Adds `−½ xᵀ L x + g·x + s` for `x = (q_k, q_{k+1})`.
    fn add_link(
        &mut self,
        k: usize,
        l: [Complex<T>; 3],
        g: [Complex<T>; 2],
        s: Complex<T>,
    ) {
        let half = T::lit(0.5);
        let [l00, l01, l11] = l;
        self.scalar = self.scalar + s;
        match (self.slot(k), self.slot(k + 1)) {
            (Ok(i0), Ok(i1)) => {
                self.form.diag[i0] = self.form.diag[i0] + l00;
                self.form.diag[i1] = self.form.diag[i1] + l11;
                self.form.off[i0] = self.form.off[i0] + l01;
                self.linear[i0] = self.linear[i0] + g[0];
                self.linear[i1] = self.linear[i1] + g[1];
            }
            (Err(u), Ok(i1)) => {
                self.scalar = self.scalar - l00 * (half * u * u) + g[0] * u;
                self.form.diag[i1] = self.form.diag[i1] + l11;
                self.linear[i1] = self.linear[i1] + g[1] - l01 * u;
            }
            (Ok(i0), Err(u)) => {
                self.scalar = self.scalar - l11 * (half * u * u) + g[1] * u;
                self.form.diag[i0] = self.form.diag[i0] + l00;
                self.linear[i0] = self.linear[i0] + g[0] - l01 * u;
            }
            (Err(u0), Err(u1)) => {
                self.scalar = self.scalar
                    - (l00 * u0 * u0 + l01 * (T::lit(2.0) * u0 * u1) + l11 * u1 * u1) * half
                    + g[0] * u0
                    + g[1] * u1;
            }
        }
    }
}

/// Assembles the lattice exponent for paths from `q_start` at `t′` to `q_end` at `t″`.
pub fn build_lattice_action<T: Real>(
    config: &TrapConfig<T>,
    grid: &TimeGrid<T>,
    q_start: T,
    q_end: T,
    restriction: Option<Restriction<'_, T>>,
) -> Result<LatticeAction<T>> {
    let steps = grid.steps();
    if steps < 2 {
        return Err(validation("lattice needs at least 2 steps"));
    }
    let m = config.mass();
    let hbar = config.hbar();
    let dt = grid.dt();
    let i = Complex::<T>::i();
    let zero = Complex::zero();
    let half = T::lit(0.5);

    let weight = match restriction {
        Some(r) => {
            if !r.element.sigma().is_unit() {
                return Err(validation("lattice restriction requires sigma = 1"));
            }
            if r.record.grid() != grid {
                return Err(validation("record grid does not match the lattice grid"));
            }
            let etraj = r.element.trajectory().grid();
            if etraj.start() > grid.start() || etraj.end() < grid.end() {
                return Err(validation("QND element window does not cover the lattice window"));
            }
            Some((r, dt / r.record.weight_scale()))
        }
        None => None,
    };

    let mut asm = Assembler::new(steps, q_start, q_end);
    let kinetic = m / (hbar * dt);
    for k in 0..steps {
        let t_mid = grid.time(k) + half * dt;
        // (i m / 2ħdt)(q_{k+1} − q_k)²
        let kin = -i * kinetic;
        // −(i m κ dt / 8ħ)(q_k + q_{k+1})²
        let pot = i * (m * stiffness(config, t_mid) * dt / (T::lit(4.0) * hbar));
        let mut l = [kin + pot, -kin + pot, kin + pot];
        let mut g = [zero, zero];
        let mut s = zero;
        if let Some((r, w)) = weight {
            if w != T::zero() {
                // −w (c0 q_k + c1 q_{k+1} − a)²
                let f = r.element.f_at(t_mid)?;
                let c0 = half * f - m / dt;
                let c1 = half * f + m / dt;
                let a = half * (r.record.samples()[k] + r.record.samples()[k + 1]);
                let two_w = T::lit(2.0) * w;
                l[0] = l[0] + Complex::from(two_w * c0 * c0);
                l[1] = l[1] + Complex::from(two_w * c0 * c1);
                l[2] = l[2] + Complex::from(two_w * c1 * c1);
                g = [Complex::from(two_w * a * c0), Complex::from(two_w * a * c1)];
                s = Complex::from(-w * a * a);
            }
        }
        asm.add_link(k, l, g, s);
    }

    Ok(LatticeAction {
        steps,
        dt,
        mass: m,
        hbar,
        form: asm.form,
        linear: asm.linear,
        scalar: asm.scalar,
        q_start,
        q_end,
    })
}

/// Log-amplitude of a lattice Gaussian integral with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeResult<T> {
    pub log_amplitude: Complex<T>,
    pub log_det: Complex<T>,
    /// Estimated smallest singular value of `M`.
    pub min_singular: T,
    /// `min_singular` over the free-particle lowest mode `(m/ħdt)·4 sin²(π/2N)`.
    pub degeneracy_ratio: T,
}

impl<T: Real> LatticeResult<T> {
    pub fn modulus(&self) -> T {
        self.log_amplitude.re.exp()
    }
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::zero(), |acc, (x, y)| acc + x * y)
}

fn norm2<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Integrates `exp(−½ qᵀMq + bᵀq + c)` over the interior positions with the
/// Feynman measure.
pub fn gaussian_integrate<T: Real>(action: &LatticeAction<T>) -> Result<LatticeResult<T>> {
    let n = action.form.dim();
    let factor = action.form.factor()?;

    // Smallest singular value by inverse iteration on MᴴM.
    let nn = T::from_index(action.steps);
    let mut v: Vec<Complex<T>> = (0..n)
        .map(|j| {
            let x = T::PI() * T::from_index(j + 1) / nn;
            Complex::from(x.sin() + T::lit(1e-3) * (T::lit(7.0) * x).cos())
        })
        .collect();
    let mut sigma_min = T::infinity();
    for _ in 0..INVERSE_ITERATIONS {
        let norm_v = norm2(&v);
        let w = factor.solve_conj(&factor.solve(&v));
        let norm_w = norm2(&w);
        if !(norm_w.is_finite() && norm_w > T::zero()) {
            return Err(Error::Degenerate("inverse iteration diverged".into()));
        }
        sigma_min = (norm_v / norm_w).sqrt();
        v = w.into_iter().map(|z| z / norm_w).collect();
    }
    let m = action.mass;
    let hbar = action.hbar;
    let dt = action.dt;
    let lowest_free = m / (hbar * dt)
        * T::lit(4.0)
        * (T::FRAC_PI_2() / nn).sin().powi(2);
    let degeneracy_ratio = sigma_min / lowest_free;
    if degeneracy_ratio < T::lit(DEGENERACY_RATIO) {
        return Err(Error::Degenerate(format!(
            "smallest singular value {sigma_min:e} is {degeneracy_ratio:e} of the free lowest mode"
        )));
    }

    let log_det = factor.log_det();
    let solved = factor.solve(&action.linear);
    let stationary = dot(&action.linear, &solved) * T::lit(0.5) + action.scalar;
    let half = T::lit(0.5);
    // ln(m / 2πiħdt) = ln(m / 2πħdt) − iπ/2
    let log_measure = Complex::new((m / (T::TAU() * hbar * dt)).ln(), -T::FRAC_PI_2());
    let log_amplitude = log_measure * (half * nn)
        + Complex::from(half * T::from_index(n) * T::TAU().ln())
        - log_det * half
        + stationary;
    Ok(LatticeResult {
        log_amplitude,
        log_det,
        min_singular: sigma_min,
        degeneracy_ratio,
    })
}

/// Lattice and closed-form log-ratios of two records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioProbe<T> {
    /// `2 Re ln Û(a) − 2 Re ln Û(b)` on the lattice.
    pub lattice: T,
    /// Closed-form ratio law.
    pub closed_form: T,
    /// `lattice − closed_form`; not expected to vanish.
    pub discrepancy: T,
}

/// Probes the ratio law on the lattice. Agreement is reported, not asserted.
pub fn restricted_ratio_probe<T: Real>(
    config: &TrapConfig<T>,
    grid: &TimeGrid<T>,
    elem: &QndElement<T>,
    record_a: &ReadoutRecord<T>,
    record_b: &ReadoutRecord<T>,
    q_start: T,
    q_end: T,
) -> Result<RatioProbe<T>> {
    if record_a.grid() != record_b.grid() {
        return Err(validation("records must share a grid"));
    }
    if record_a.delta_a() != record_b.delta_a() || record_a.duration() != record_b.duration() {
        return Err(validation("records must share delta_a and T"));
    }
    let two = T::lit(2.0);
    let log_amp = |record: &ReadoutRecord<T>| -> Result<Complex<T>> {
        let action = build_lattice_action(
            config,
            grid,
            q_start,
            q_end,
            Some(Restriction {
                element: elem,
                record,
            }),
        )?;
        Ok(gaussian_integrate(&action)?.log_amplitude)
    };
    let lattice = if record_a == record_b {
        T::zero()
    } else {
        two * (log_amp(record_a)?.re - log_amp(record_b)?.re)
    };
    let closed_form = if record_a.delta_a().is_finite() {
        probability_ratio_log(elem, config, record_a, record_b)?
    } else {
        T::zero()
    };
    Ok(RatioProbe {
        lattice,
        closed_form,
        discrepancy: lattice - closed_form,
    })
}

/// Lattice amplitude next to the closed-form density for one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport<T> {
    pub steps: usize,
    pub dt: T,
    pub delta_a: T,
    pub log_amp_lattice: Complex<T>,
    pub log_p_rpi: T,
    /// `2 Re ln Û_lattice − ln P`.
    pub discrepancy: T,
}

pub fn compare_with_closed_form<T: Real>(
    config: &TrapConfig<T>,
    grid: &TimeGrid<T>,
    elem: &QndElement<T>,
    record: &ReadoutRecord<T>,
    q_start: T,
    q_end: T,
) -> Result<ComparisonReport<T>> {
    let action = build_lattice_action(
        config,
        grid,
        q_start,
        q_end,
        Some(Restriction {
            element: elem,
            record,
        }),
    )?;
    let lattice = gaussian_integrate(&action)?;
    let log_p = probability_log(elem, config, record)?.total();
    Ok(ComparisonReport {
        steps: grid.steps(),
        dt: grid.dt(),
        delta_a: record.delta_a(),
        log_amp_lattice: lattice.log_amplitude,
        log_p_rpi: log_p,
        discrepancy: T::lit(2.0) * lattice.log_amplitude.re - log_p,
    })
}
