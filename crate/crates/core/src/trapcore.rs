//! Trap parameters, the periodic stiffness and the shared time grid.
//!
//! Every other module works with the reduced parameters `U = e Ū / (m r²)` and
//! `V = e V̄ / (m r²)`, so the equation of motion is always
//! `ẍ + k(t) x = 0` with `k(t) = ±[U − V cos(ωt)]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{validation, Error, Result};
use crate::scalar::Real;

/// Which trap axis is modelled. The z axis carries the opposite stiffness sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Axis {
    #[default]
    X,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => f.write_str("x"),
            Axis::Z => f.write_str("z"),
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "z" => Ok(Axis::Z),
            other => Err(validation(format!("axis must be `x` or `z`, got `{other}`"))),
        }
    }
}

/// Physical (unreduced) trap parameters as supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawTrapParams<T> {
    pub mass: T,
    pub charge: T,
    pub gap_r: T,
    pub u_bar: T,
    pub v_bar: T,
    pub omega: T,
    pub hbar: T,
    pub axis: Axis,
}

impl<T: Real> Default for RawTrapParams<T> {
    /// Natural units: `m = e = r = ħ = 1`, `Ū = 1`, `V̄ = 0`, `ω = 1`.
    fn default() -> Self {
        Self {
            mass: T::one(),
            charge: T::one(),
            gap_r: T::one(),
            u_bar: T::one(),
            v_bar: T::zero(),
            omega: T::one(),
            hbar: T::one(),
            axis: Axis::X,
        }
    }
}

/// Validated trap configuration with derived reduced parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig<T> {
    raw: RawTrapParams<T>,
    u: T,
    v: T,
}

/// Builds a [`TrapConfig`] from physical parameters, deriving `U` and `V`.
pub fn reduce_config<T: Real>(raw: RawTrapParams<T>) -> Result<TrapConfig<T>> {
    let positive = |value: T, name: &str| -> Result<()> {
        if value.is_finite() && value > T::zero() {
            Ok(())
        } else {
            Err(validation(format!("{name} must be positive")))
        }
    };
    positive(raw.mass, "mass")?;
    positive(raw.gap_r, "gap_r")?;
    positive(raw.omega, "omega")?;
    positive(raw.hbar, "hbar")?;
    for (value, name) in [(raw.charge, "charge"), (raw.u_bar, "U_bar"), (raw.v_bar, "V_bar")] {
        if !value.is_finite() {
            return Err(validation(format!("{name} must be finite")));
        }
    }
    let factor = raw.charge / (raw.mass * raw.gap_r * raw.gap_r);
    Ok(TrapConfig {
        raw,
        u: factor * raw.u_bar,
        v: factor * raw.v_bar,
    })
}

impl<T: Real> TrapConfig<T> {
    /// Convenience constructor in natural units (`m = ħ = e = r = 1`) with
    /// `Ū = U`, `V̄ = V`.
    pub fn natural(u: T, v: T, omega: T) -> Result<Self> {
        reduce_config(RawTrapParams {
            u_bar: u,
            v_bar: v,
            omega,
            ..RawTrapParams::default()
        })
    }

    pub fn raw(&self) -> &RawTrapParams<T> {
        &self.raw
    }

    pub fn mass(&self) -> T {
        self.raw.mass
    }

    pub fn hbar(&self) -> T {
        self.raw.hbar
    }

    pub fn omega(&self) -> T {
        self.raw.omega
    }

    pub fn axis(&self) -> Axis {
        self.raw.axis
    }

    /// Reduced dc parameter `U`.
    pub fn u(&self) -> T {
        self.u
    }

    /// Reduced ac parameter `V`.
    pub fn v(&self) -> T {
        self.v
    }

    /// Drive period `2π/ω`.
    pub fn period(&self) -> T {
        T::TAU() / self.raw.omega
    }

    /// Returns a copy with a different axis selector.
    pub fn with_axis(mut self, axis: Axis) -> Self {
        self.raw.axis = axis;
        self
    }

    /// Borrowed view of the stiffness function.
    pub fn stiffness_fn(&self) -> StiffnessFn<'_, T> {
        StiffnessFn { config: self }
    }
}

/// Stiffness `k(t) = ±[U − V cos(ωt)]`, sign set by the axis selector.
pub fn stiffness<T: Real>(config: &TrapConfig<T>, t: T) -> T {
    let k = config.u - config.v * (config.raw.omega * t).cos();
    match config.raw.axis {
        Axis::X => k,
        Axis::Z => -k,
    }
}

/// Callable view of the stiffness of one configuration.
#[derive(Debug, Clone, Copy)]
pub struct StiffnessFn<'a, T> {
    config: &'a TrapConfig<T>,
}

impl<T: Real> StiffnessFn<'_, T> {
    pub fn at(&self, t: T) -> T {
        stiffness(self.config, t)
    }
}

/// Uniform time grid `t_k = t′ + k·dt`, `k = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    start: T,
    end: T,
    steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(start: T, end: T, steps: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) {
            return Err(validation("grid endpoints must be finite"));
        }
        if end <= start {
            return Err(validation("t_end must be greater than t_start"));
        }
        if steps < 2 {
            return Err(validation("steps must be at least 2"));
        }
        Ok(Self { start, end, steps })
    }

    /// Grid with a prescribed step (rounded to the nearest whole number of steps).
    pub fn with_step(start: T, end: T, dt: T) -> Result<Self> {
        if !(dt.is_finite() && dt > T::zero()) {
            return Err(validation("dt must be positive"));
        }
        let steps = ((end - start) / dt)
            .round()
            .to_usize()
            .ok_or_else(|| validation("invalid step count"))?;
        Self::new(start, end, steps)
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    /// Number of steps `N`; there are `N + 1` nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> T {
        (self.end - self.start) / T::from_index(self.steps)
    }

    pub fn duration(&self) -> T {
        self.end - self.start
    }

    /// Node `t_k`. The last node is exactly `t″`.
    pub fn time(&self, k: usize) -> T {
        if k == self.steps {
            self.end
        } else {
            self.start + T::from_index(k) * self.dt()
        }
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.start && t <= self.end
    }

    /// Grid over the same window with twice as many steps.
    pub fn refined(&self) -> Self {
        Self {
            steps: self.steps * 2,
            ..*self
        }
    }

    /// Composite trapezoid rule for samples taken on this grid.
    pub fn trapezoid(&self, samples: &[T]) -> T {
        assert_eq!(samples.len(), self.len(), "samples must match grid nodes");
        let half = T::lit(0.5);
        let interior = samples[1..self.steps]
            .iter()
            .fold(T::zero(), |acc, &s| acc + s);
        self.dt() * (interior + half * (samples[0] + samples[self.steps]))
    }
}

/// Parsed flat `key = value` configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub params: RawTrapParams<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

const CONFIG_KEYS: [&str; 11] = [
    "mass", "charge", "gap_r", "U_bar", "V_bar", "omega", "hbar", "axis", "t_start", "t_end",
    "steps",
];

/// Parses the flat configuration format.
///
/// Blank lines and lines starting with `#` are skipped. Unknown or repeated
/// keys are rejected. `mass`, `charge`, `gap_r`, `hbar` default to 1 and
/// `axis` to `x`; the remaining keys are required.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut values: Vec<(&str, &str, usize)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config {
                line: line_no,
                message: format!("unknown key `{key}`"),
            });
        }
        if values.iter().any(|(k, _, _)| *k == key) {
            return Err(Error::Config {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        values.push((key, value, line_no));
    }

    let lookup = |key: &str| values.iter().find(|(k, _, _)| *k == key).copied();
    let number = |key: &str, default: Option<f64>| -> Result<f64> {
        match lookup(key) {
            Some((_, v, line)) => v.parse::<f64>().map_err(|_| Error::Config {
                line,
                message: format!("`{key}` is not a number: `{v}`"),
            }),
            None => default.ok_or_else(|| Error::Config {
                line: 0,
                message: format!("missing required key `{key}`"),
            }),
        }
    };

    let axis = match lookup("axis") {
        Some((_, v, line)) => v.parse::<Axis>().map_err(|e| Error::Config {
            line,
            message: e.to_string(),
        })?,
        None => Axis::X,
    };
    let steps = match lookup("steps") {
        Some((_, v, line)) => v.parse::<usize>().map_err(|_| Error::Config {
            line,
            message: format!("`steps` is not a non-negative integer: `{v}`"),
        })?,
        None => {
            return Err(Error::Config {
                line: 0,
                message: "missing required key `steps`".into(),
            })
        }
    };

    Ok(ConfigFile {
        params: RawTrapParams {
            mass: number("mass", Some(1.0))?,
            charge: number("charge", Some(1.0))?,
            gap_r: number("gap_r", Some(1.0))?,
            u_bar: number("U_bar", None)?,
            v_bar: number("V_bar", None)?,
            omega: number("omega", None)?,
            hbar: number("hbar", Some(1.0))?,
            axis,
        },
        t_start: number("t_start", None)?,
        t_end: number("t_end", None)?,
        steps,
    })
}

impl ConfigFile {
    /// Validates and converts into a configuration and grid.
    pub fn resolve<T: Real>(&self) -> Result<(TrapConfig<T>, TimeGrid<T>)> {
        let p = &self.params;
        let config = reduce_config(RawTrapParams {
            mass: T::lit(p.mass),
            charge: T::lit(p.charge),
            gap_r: T::lit(p.gap_r),
            u_bar: T::lit(p.u_bar),
            v_bar: T::lit(p.v_bar),
            omega: T::lit(p.omega),
            hbar: T::lit(p.hbar),
            axis: p.axis,
        })?;
        let grid = TimeGrid::new(T::lit(self.t_start), T::lit(self.t_end), self.steps)?;
        Ok((config, grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(e: f64, m: f64, r: f64, u_bar: f64, v_bar: f64) -> RawTrapParams<f64> {
        RawTrapParams {
            mass: m,
            charge: e,
            gap_r: r,
            u_bar,
            v_bar,
            ..RawTrapParams::default()
        }
    }

    #[test]
    fn reduction_with_unit_factors_is_identity() {
        let c = reduce_config(raw(1.0, 1.0, 1.0, 1.0, 0.5)).unwrap();
        assert_eq!(c.u(), 1.0);
        assert_eq!(c.v(), 0.5);
    }

    #[test]
    fn reduction_scales_by_charge_over_mass() {
        let c = reduce_config(raw(2.0, 4.0, 1.0, 2.0, 0.0)).unwrap();
        assert_eq!(c.u(), 1.0);
        assert_eq!(c.v(), 0.0);
    }

    #[test]
    fn non_positive_parameters_are_named() {
        let err = reduce_config(raw(1.0, 0.0, 1.0, 1.0, 0.0)).unwrap_err();
        assert_eq!(err.to_string(), "mass must be positive");
        let err = reduce_config(raw(1.0, 1.0, -1.0, 1.0, 0.0)).unwrap_err();
        assert_eq!(err.to_string(), "gap_r must be positive");
        let mut p = raw(1.0, 1.0, 1.0, 1.0, 0.0);
        p.omega = 0.0;
        assert_eq!(reduce_config(p).unwrap_err().to_string(), "omega must be positive");
        p.omega = 1.0;
        p.hbar = -2.0;
        assert_eq!(reduce_config(p).unwrap_err().to_string(), "hbar must be positive");
    }

    #[test]
    fn reduction_is_bit_identical_on_repeat() {
        let p = raw(1.7, 0.3, 2.1, 0.9, 0.4);
        let a = reduce_config(p).unwrap();
        let b = reduce_config(p).unwrap();
        assert_eq!(a.u().to_bits(), b.u().to_bits());
        assert_eq!(a.v().to_bits(), b.v().to_bits());
    }

    #[test]
    fn stiffness_examples() {
        let c = TrapConfig::<f64>::natural(1.0, 0.0, 1.0).unwrap();
        for t in [0.0, 0.3, 17.0] {
            assert_eq!(stiffness(&c, t), 1.0);
        }
        let c = TrapConfig::<f64>::natural(1.0, 0.5, 1.0).unwrap();
        assert_eq!(stiffness(&c, 0.0), 0.5);
        assert_eq!(stiffness(&c.with_axis(Axis::Z), 0.0), -0.5);
    }

    #[test]
    fn z_axis_is_exact_negation() {
        let c = TrapConfig::<f64>::natural(0.8, 1.3, 2.7).unwrap();
        let z = c.with_axis(Axis::Z);
        let grid = TimeGrid::<f64>::new(0.0, 10.0, 97).unwrap();
        for t in grid.times() {
            assert_eq!(stiffness(&z, t), -stiffness(&c, t));
        }
    }

    #[test]
    fn stiffness_is_periodic_on_grid() {
        let c = TrapConfig::<f64>::natural(0.8, 1.3, 2.7).unwrap();
        let grid = TimeGrid::<f64>::new(0.0, 10.0, 200).unwrap();
        let period = c.period();
        for t in grid.times() {
            let k = stiffness(&c, t);
            let shifted = c.stiffness_fn().at(t + period);
            // cos(ωt + 2π) loses a few ulps of the argument magnitude
            let tol = 10.0 * f64::EPSILON * k.abs() + 1e-13 * (1.0 + c.omega() * t);
            assert!((shifted - k).abs() <= tol, "t={t}: {shifted} vs {k}");
        }
    }

    #[test]
    fn grid_nodes_and_trapezoid() {
        let g = TimeGrid::<f64>::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.time(4), 1.0);
        assert_eq!(g.dt(), 0.25);
        let ones = vec![3.0; 5];
        assert!((g.trapezoid(&ones) - 3.0).abs() < 1e-15);
        let lin: Vec<f64> = g.times().collect();
        assert!((g.trapezoid(&lin) - 0.5).abs() < 1e-15);
        assert!(TimeGrid::<f64>::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::<f64>::new(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn parses_flat_config() {
        let text = "# trap\nmass = 2\nU_bar = 1\nV_bar = 0.5\nomega = 2\naxis = z\n\
                    t_start = 0\nt_end = 1.5\nsteps = 30\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.params.mass, 2.0);
        assert_eq!(cfg.params.charge, 1.0);
        assert_eq!(cfg.params.axis, Axis::Z);
        assert_eq!(cfg.steps, 30);
        let (c, g) = cfg.resolve::<f64>().unwrap();
        assert_eq!(c.u(), 0.5);
        assert_eq!(g.steps(), 30);
    }

    #[test]
    fn config_rejects_unknown_and_duplicate_keys() {
        let base = "U_bar = 1\nV_bar = 0\nomega = 1\nt_start = 0\nt_end = 1\nsteps = 10\n";
        let err = parse_config(&format!("{base}colour = red\n")).unwrap_err();
        assert!(err.to_string().contains("unknown key `colour`"));
        let err = parse_config(&format!("{base}omega = 2\n")).unwrap_err();
        assert!(err.to_string().contains("duplicate key"));
        let err = parse_config("U_bar = 1\n").unwrap_err();
        assert!(err.to_string().contains("missing required key"));
        let err = parse_config(&format!("{base}axis = y\n")).unwrap_err();
        assert!(err.to_string().contains("axis must be"));
    }
}
