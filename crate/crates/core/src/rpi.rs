//! Closed-form restricted path-integral propagator and readout densities for
//! a continuously monitored QND variable with `σ = 1`.
//!
//! All exponents are kept in log space. With `w = (a ẋ/x)²`,
//! `α = (ẋ/x)² + β`, `β = k(t)`, `γ = 4m²ħ² + T²Δa⁴` and
//! `D = α² + T²Δa⁴ β² / (4m²ħ²)`:
//!
//! ```text
//! ln Û = −(1/TΔa²)∫a² + [(TΔa² − 2imħ)/(2m²ħγ)] ∫ w (2m²ħα + i m TΔa² β) / D
//! ln P = −(2/TΔa²)∫a² + (TΔa²/γ) ∫ w ((ẋ/x)² + 2β) / D
//! ```
//!
//! Time integrals use the composite trapezoid rule on the trajectory grid.

use std::io::{self, Write};

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{validation, Error, Result};
use crate::mathieu::integrate_trajectory;
use crate::qnd::QndElement;
use crate::scalar::Real;
use crate::trapcore::{stiffness, TimeGrid, TrapConfig};

/// Grid-sampled measurement readout `a(t)` with resolution `Δa` and duration constant `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRecord<T> {
    grid: TimeGrid<T>,
    samples: Vec<T>,
    delta_a: T,
    duration: T,
}

impl<T: Real> ReadoutRecord<T> {
    /// `duration = None` selects `T = t″ − t′`.
    ///
    /// `delta_a = +∞` is accepted (the unrestricted limit used by the lattice
    /// oracle); the closed forms require a finite resolution.
    pub fn new(grid: TimeGrid<T>, samples: Vec<T>, delta_a: T, duration: Option<T>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(validation(format!(
                "record has {} samples but the grid has {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        if samples.iter().any(|a| !a.is_finite()) {
            return Err(validation("record samples must be finite"));
        }
        if delta_a.is_nan() || delta_a <= T::zero() {
            return Err(validation("delta_a must be positive"));
        }
        let duration = duration.unwrap_or_else(|| grid.duration());
        if !(duration.is_finite() && duration > T::zero()) {
            return Err(validation("duration T must be positive"));
        }
        Ok(Self {
            grid,
            samples,
            delta_a,
            duration,
        })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn delta_a(&self) -> T {
        self.delta_a
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn with_delta_a(&self, delta_a: T) -> Result<Self> {
        Self::new(self.grid, self.samples.clone(), delta_a, Some(self.duration))
    }

    pub fn with_samples(&self, samples: Vec<T>) -> Result<Self> {
        Self::new(self.grid, samples, self.delta_a, Some(self.duration))
    }

    /// `T Δa²`.
    pub fn weight_scale(&self) -> T {
        self.duration * self.delta_a * self.delta_a
    }
}

/// Named analytic record shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecordShape<T> {
    Zero,
    Constant(T),
    /// `amplitude · sin(frequency · t + phase)`.
    Sine { amplitude: T, frequency: T, phase: T },
    /// The A-history `σ (f q + m q̇)` of the classical path with `q(t′) = x0`, `q̇(t′) = v0`.
    Matched { x0: T, v0: T },
}

/// Samples `shape` on the element's grid.
pub fn sample_record<T: Real>(
    shape: &RecordShape<T>,
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
) -> Result<Vec<T>> {
    let grid = elem.trajectory().grid();
    Ok(match *shape {
        RecordShape::Zero => vec![T::zero(); grid.len()],
        RecordShape::Constant(c) => vec![c; grid.len()],
        RecordShape::Sine {
            amplitude,
            frequency,
            phase,
        } => grid
            .times()
            .map(|t| amplitude * (frequency * t + phase).sin())
            .collect(),
        RecordShape::Matched { x0, v0 } => {
            let path = integrate_trajectory(config, grid, x0, v0)?;
            let m = elem.mass();
            (0..grid.len())
                .map(|k| {
                    elem.sigma_samples()[k] * (elem.f()[k] * path.x()[k] + m * path.xdot()[k])
                })
                .collect()
        }
    })
}

fn check_record<T: Real>(elem: &QndElement<T>, record: &ReadoutRecord<T>) -> Result<()> {
    if elem.trajectory().grid() != record.grid() {
        return Err(validation("record grid does not match the trajectory grid"));
    }
    if !record.delta_a.is_finite() {
        return Err(validation("delta_a must be finite"));
    }
    Ok(())
}

fn check_unit_sigma<T: Real>(elem: &QndElement<T>) -> Result<()> {
    if elem.sigma().is_unit() {
        Ok(())
    } else {
        Err(validation("propagator formulas require sigma = 1"))
    }
}

/// Log of the Gaussian weight functional: `−(1/TΔa²) ∫ [A − a]² dt` with
/// `A = σ (f q + p)` along the supplied phase-space path samples.
pub fn weight_log<T: Real>(
    elem: &QndElement<T>,
    record: &ReadoutRecord<T>,
    q: &[T],
    p: &[T],
) -> Result<T> {
    check_record(elem, record)?;
    let n = record.grid.len();
    if q.len() != n || p.len() != n {
        return Err(validation("path samples must match the grid"));
    }
    let integrand: Vec<T> = (0..n)
        .map(|k| {
            let a_val = elem.sigma_samples()[k] * (elem.f()[k] * q[k] + p[k]);
            let d = a_val - record.samples[k];
            d * d
        })
        .collect();
    Ok(-record.grid.trapezoid(&integrand) / record.weight_scale())
}

/// Nodewise `α`, `β` and the scalar `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBetaGamma<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub gamma: T,
}

pub fn alpha_beta_gamma<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    record: &ReadoutRecord<T>,
) -> Result<AlphaBetaGamma<T>> {
    check_record(elem, record)?;
    if !elem.singularities().is_empty() {
        return Err(Error::SingularWindow {
            times: elem
                .singularities()
                .iter()
                .map(|t| t.to_f64().unwrap_or(f64::NAN))
                .collect(),
        });
    }
    let grid = record.grid();
    let beta: Vec<T> = grid.times().map(|t| stiffness(config, t)).collect();
    let alpha = elem
        .log_derivative()
        .iter()
        .zip(&beta)
        .map(|(&g, &b)| g * g + b)
        .collect();
    let m = config.mass();
    let hbar = config.hbar();
    let scale = record.weight_scale();
    let gamma = T::lit(4.0) * m * m * hbar * hbar + scale * scale;
    Ok(AlphaBetaGamma { alpha, beta, gamma })
}

/// `ln Û = l1 + l2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorResult<T> {
    pub l1: T,
    pub l2: Complex<T>,
}

impl<T: Real> PropagatorResult<T> {
    pub fn total(&self) -> Complex<T> {
        Complex::new(self.l1, T::zero()) + self.l2
    }
}

/// `ln P = p1 + p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityResult<T> {
    pub p1: T,
    pub p2: T,
}

impl<T: Real> ProbabilityResult<T> {
    pub fn total(&self) -> T {
        self.p1 + self.p2
    }

    /// `exp(ln P)`; underflows to zero for very sharp records.
    pub fn density(&self) -> T {
        self.total().exp()
    }
}

/// Which closed form supplies the readout density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbabilitySource {
    /// The printed density formula.
    #[default]
    Density,
    /// `|Û|²` from the printed propagator; its second exponent is twice the density's.
    AmplitudeSquared,
}

/// Integrals shared by the propagator and density formulas.
struct Kernel<T> {
    a_squared: T,
    /// `∫ w 2m²ħα / D`
    re_part: T,
    /// `∫ w m TΔa² β / D`
    im_part: T,
    /// `∫ w ((ẋ/x)² + 2β) / D`
    density_part: T,
    gamma: T,
}

/// Per-node ingredients; `weights` multiplies `(ẋ/x)²` in place of `a²` so the
/// ratio law can reuse it with `a² − b²`.
fn kernel<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    record: &ReadoutRecord<T>,
    weights: &[T],
) -> Result<Kernel<T>> {
    let abg = alpha_beta_gamma(elem, config, record)?;
    let grid = record.grid();
    let m = config.mass();
    let hbar = config.hbar();
    let scale = record.weight_scale();
    let two = T::lit(2.0);
    let beta_coeff = scale * scale / (T::lit(4.0) * m * m * hbar * hbar);
    let g = elem.log_derivative();
    let n = grid.len();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    let mut dens = Vec::with_capacity(n);
    for k in 0..n {
        let w = weights[k] * g[k] * g[k];
        if w == T::zero() {
            re.push(T::zero());
            im.push(T::zero());
            dens.push(T::zero());
            continue;
        }
        let (alpha, beta) = (abg.alpha[k], abg.beta[k]);
        let denom = alpha * alpha + beta_coeff * beta * beta;
        re.push(w * two * m * m * hbar * alpha / denom);
        im.push(w * m * scale * beta / denom);
        dens.push(w * (g[k] * g[k] + two * beta) / denom);
    }
    Ok(Kernel {
        a_squared: grid.trapezoid(weights),
        re_part: grid.trapezoid(&re),
        im_part: grid.trapezoid(&im),
        density_part: grid.trapezoid(&dens),
        gamma: abg.gamma,
    })
}

fn squared_samples<T: Real>(record: &ReadoutRecord<T>) -> Vec<T> {
    record.samples.iter().map(|&a| a * a).collect()
}

/// Closed-form log-propagator, both exponent terms stored separately.
pub fn propagator_log<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    record: &ReadoutRecord<T>,
) -> Result<PropagatorResult<T>> {
    check_unit_sigma(elem)?;
    let k = kernel(elem, config, record, &squared_samples(record))?;
    let m = config.mass();
    let hbar = config.hbar();
    let scale = record.weight_scale();
    let two = T::lit(2.0);
    let prefactor = Complex::new(scale, -two * m * hbar) / (two * m * m * hbar * k.gamma);
    Ok(PropagatorResult {
        l1: -k.a_squared / scale,
        l2: prefactor * Complex::new(k.re_part, k.im_part),
    })
}

/// Closed-form log-density, both exponent terms stored separately.
pub fn probability_log<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    record: &ReadoutRecord<T>,
) -> Result<ProbabilityResult<T>> {
    check_unit_sigma(elem)?;
    let k = kernel(elem, config, record, &squared_samples(record))?;
    let scale = record.weight_scale();
    Ok(ProbabilityResult {
        p1: -T::lit(2.0) * k.a_squared / scale,
        p2: scale / k.gamma * k.density_part,
    })
}

/// Log-density from the selected closed form.
pub fn probability_log_with<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    record: &ReadoutRecord<T>,
    source: ProbabilitySource,
) -> Result<ProbabilityResult<T>> {
    match source {
        ProbabilitySource::Density => probability_log(elem, config, record),
        ProbabilitySource::AmplitudeSquared => {
            let prop = propagator_log(elem, config, record)?;
            let two = T::lit(2.0);
            Ok(ProbabilityResult {
                p1: two * prop.l1,
                p2: two * prop.l2.re,
            })
        }
    }
}

fn agreement_tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::lit(1000.0) * T::epsilon())
}

/// Relative comparison with a caller-supplied magnitude floor.
fn agree<T: Real>(x: T, y: T, scale: T) -> bool {
    let floor = scale.max(x.abs()).max(y.abs()).max(T::min_positive_value());
    (x - y).abs() <= agreement_tolerance::<T>() * floor
}

/// Both evaluation routes of the log-ratio `ln(P[a]/P[b])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRoutes<T> {
    /// Direct evaluation with integrands in `a² − b²`.
    pub direct: T,
    /// `ln P[a] − ln P[b]`.
    pub difference: T,
}

pub fn probability_ratio_routes<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    record_a: &ReadoutRecord<T>,
    record_b: &ReadoutRecord<T>,
) -> Result<RatioRoutes<T>> {
    if record_a.grid != record_b.grid {
        return Err(validation("records must share a grid"));
    }
    if record_a.delta_a != record_b.delta_a || record_a.duration != record_b.duration {
        return Err(validation("records must share delta_a and T"));
    }
    check_unit_sigma(elem)?;
    let pa = probability_log(elem, config, record_a)?;
    let pb = probability_log(elem, config, record_b)?;

    let diff_sq: Vec<T> = record_a
        .samples
        .iter()
        .zip(&record_b.samples)
        .map(|(&a, &b)| a * a - b * b)
        .collect();
    let k = kernel(elem, config, record_a, &diff_sq)?;
    let scale = record_a.weight_scale();
    let direct = -T::lit(2.0) * k.a_squared / scale + scale / k.gamma * k.density_part;
    Ok(RatioRoutes {
        direct,
        difference: pa.total() - pb.total(),
    })
}

/// `ln(P[a]/P[b])` evaluated directly in terms of `a² − b²`; errors if the
/// difference of the two log-densities disagrees beyond `1e-10` relative.
pub fn probability_ratio_log<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    record_a: &ReadoutRecord<T>,
    record_b: &ReadoutRecord<T>,
) -> Result<T> {
    let routes = probability_ratio_routes(elem, config, record_a, record_b)?;
    let pa = probability_log(elem, config, record_a)?;
    let pb = probability_log(elem, config, record_b)?;
    let scale = pa.p1.abs() + pa.p2.abs() + pb.p1.abs() + pb.p2.abs();
    if !agree(routes.direct, routes.difference, scale) {
        return Err(Error::Consistency(format!(
            "log-ratio routes disagree: direct {} vs difference {}",
            routes.direct, routes.difference
        )));
    }
    Ok(routes.direct)
}

/// Exponents of `|Û|²` against the printed density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusAudit<T> {
    pub propagator: PropagatorResult<T>,
    pub probability: ProbabilityResult<T>,
}

impl<T: Real> ModulusAudit<T> {
    /// `2 Re l2 / p2`; the printed formulas give exactly 2.
    pub fn second_exponent_ratio(&self) -> T {
        T::lit(2.0) * self.propagator.l2.re / self.probability.p2
    }
}

/// Evaluates both closed forms and checks `2 l1 = p1` and `2 Re l2 = 2 p2`
/// to `1e-10` relative.
pub fn modulus_audit<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    record: &ReadoutRecord<T>,
) -> Result<ModulusAudit<T>> {
    let propagator = propagator_log(elem, config, record)?;
    let probability = probability_log(elem, config, record)?;
    let two = T::lit(2.0);
    if !agree(two * propagator.l1, probability.p1, T::zero()) {
        return Err(Error::Consistency(format!(
            "first exponents: 2 l1 = {} vs p1 = {}",
            two * propagator.l1,
            probability.p1
        )));
    }
    if !agree(two * propagator.l2.re, two * probability.p2, T::zero()) {
        return Err(Error::Consistency(format!(
            "second exponents: 2 Re l2 = {} vs 2 p2 = {}",
            two * propagator.l2.re,
            two * probability.p2
        )));
    }
    Ok(ModulusAudit {
        propagator,
        probability,
    })
}

/// One row of a resolution sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub delta_a: T,
    pub propagator: PropagatorResult<T>,
    pub probability: ProbabilityResult<T>,
}

/// Resolution sweep in input order with monotonicity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<T> {
    pub rows: Vec<SweepRow<T>>,
    /// `ln P` non-decreasing as `Δa` increases (rows sorted by `Δa`).
    pub increasing_in_delta_a: bool,
    /// `ln P` non-increasing as `Δa` increases.
    pub decreasing_in_delta_a: bool,
}

impl<T: Real> SweepTable<T> {
    /// Writes `delta_a,log_p1,log_p2,log_p` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "delta_a,log_p1,log_p2,log_p")?;
        for row in &self.rows {
            // adding zero turns -0.0 into 0.0
            let p = ProbabilityResult {
                p1: row.probability.p1 + T::zero(),
                p2: row.probability.p2 + T::zero(),
            };
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                row.delta_a,
                p.p1,
                p.p2,
                p.total()
            )?;
        }
        Ok(())
    }
}

/// Evaluates the density at each resolution in `deltas`, in parallel; rows
/// keep the input order. `source` selects which closed form fills `probability`.
pub fn delta_a_sweep<T: Real>(
    elem: &QndElement<T>,
    config: &TrapConfig<T>,
    template: &ReadoutRecord<T>,
    deltas: &[T],
    source: ProbabilitySource,
) -> Result<SweepTable<T>> {
    if deltas.is_empty() {
        return Err(validation("delta_a list must not be empty"));
    }
    let rows = deltas
        .par_iter()
        .map(|&delta_a| {
            let record = template.with_delta_a(delta_a)?;
            Ok(SweepRow {
                delta_a,
                propagator: propagator_log(elem, config, &record)?,
                probability: probability_log_with(elem, config, &record, source)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| rows[i].delta_a.partial_cmp(&rows[j].delta_a).unwrap());
    let sorted: Vec<T> = order.iter().map(|&i| rows[i].probability.total()).collect();
    let increasing = sorted.windows(2).all(|w| w[1] >= w[0]);
    let decreasing = sorted.windows(2).all(|w| w[1] <= w[0]);
    Ok(SweepTable {
        rows,
        increasing_in_delta_a: increasing,
        decreasing_in_delta_a: decreasing,
    })
}

/// Least-squares slope of `ln|y|` against `ln x`.
pub fn log_log_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points");
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = T::from_index(xs.len());
    let mx = lx.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = ly.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, y) in lx.iter().zip(&ly) {
        sxy = sxy + (*x - mx) * (*y - my);
        sxx = sxx + (*x - mx) * (*x - mx);
    }
    sxy / sxx
}
