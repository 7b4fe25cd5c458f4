use std::fmt;
use std::fs;
use std::io;

use paultrap_core::mathieu::{integrate_trajectory, monodromy, Trajectory};
use paultrap_core::oracle::{compare_with_closed_form, ComparisonReport};
use paultrap_core::qnd::{build_qnd, riccati_residual, QndElement, Sigma};
use paultrap_core::rpi::{
    delta_a_sweep, probability_ratio_log, sample_record, ProbabilitySource, ReadoutRecord,
};
use paultrap_core::trapcore::{parse_config, TimeGrid, TrapConfig};
use paultrap_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Endpoints, GlobalArgs, OracleArgs, ProbabilityArgs, RecordArgs, SourceArg, StabilityArgs};
use crate::manifest::{ArtifactDir, Num, RunManifest, StabilitySection};
use crate::record::RecordSpec;

/// Failure classes, mapped onto process exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or inputs: exit 2.
    Usage(String),
    /// The computation itself failed: exit 1.
    Compute(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Compute(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::Config { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(format!("i/o: {e}"))
    }
}

pub type Outcome = Result<Vec<std::path::PathBuf>, Failure>;

fn load(global: &GlobalArgs) -> Result<(TrapConfig<f64>, TimeGrid<f64>), Failure> {
    let path = global
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("--config is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|_| Failure::Usage(format!("config not found: {}", path.display())))?;
    let mut file = parse_config(&text)?;
    if let Some(steps) = global.steps {
        file.steps = steps;
    }
    Ok(file.resolve::<f64>()?)
}

fn reference(
    global: &GlobalArgs,
    config: &TrapConfig<f64>,
    grid: &TimeGrid<f64>,
) -> Result<Trajectory<f64>, Failure> {
    Ok(integrate_trajectory(config, grid, global.x0, global.v0)?)
}

fn manifest(
    command: &'static str,
    global: &GlobalArgs,
    config: &TrapConfig<f64>,
    grid: &TimeGrid<f64>,
) -> RunManifest {
    RunManifest::new(command, config, grid, (global.x0, global.v0), &global.out)
}

fn parse_spec(s: &str) -> Result<RecordSpec, Failure> {
    s.parse().map_err(Failure::Usage)
}

pub fn trajectory(global: &GlobalArgs) -> Outcome {
    let (config, grid) = load(global)?;
    let manifest = manifest("trajectory", global, &config, &grid);
    let traj = reference(global, &config, &grid)?;
    let dir = ArtifactDir::create(&global.out)?;
    Ok(vec![dir.write_csv("trajectory.csv", &manifest, |w| traj.write_csv(w))?])
}

fn parse_range(label: &str, s: &str) -> Result<[f64; 2], Failure> {
    let bad = || Failure::Usage(format!("{label}: expected `start:end`, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if b < a {
        return Err(Failure::Usage(format!("{label}: empty range {a}:{b}")));
    }
    Ok([a, b])
}

fn parse_resolution(s: &str) -> Result<[usize; 2], Failure> {
    let bad = || Failure::Usage(format!("resolution: expected `NUxNV`, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(Failure::Usage("resolution must be at least 1x1".into()));
    }
    Ok([a, b])
}

fn axis_points([a, b]: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

pub fn stability(global: &GlobalArgs, args: &StabilityArgs) -> Outcome {
    let (config, grid) = load(global)?;
    let u_range = parse_range("u-range", &args.u_range)?;
    let v_range = parse_range("v-range", &args.v_range)?;
    let resolution = parse_resolution(&args.resolution)?;
    if args.steps_per_period == 0 {
        return Err(Failure::Usage("steps-per-period must be positive".into()));
    }
    let mut manifest = manifest("stability", global, &config, &grid);
    manifest.stability = Some(StabilitySection {
        u_range: u_range.map(Num),
        v_range: v_range.map(Num),
        resolution,
        steps_per_period: args.steps_per_period,
    });

    let us = axis_points(u_range, resolution[0]);
    let vs = axis_points(v_range, resolution[1]);
    let cells: Vec<(f64, f64)> = vs
        .iter()
        .flat_map(|&v| us.iter().map(move |&u| (u, v)))
        .collect();
    let omega = config.omega();
    let axis = config.axis();
    let rows = cells
        .par_iter()
        .map(|&(u, v)| {
            let cell = TrapConfig::natural(u, v, omega)?.with_axis(axis);
            let report = monodromy(&cell, args.steps_per_period)?;
            Ok((u, v, report.trace.abs(), report.is_stable()))
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let dir = ArtifactDir::create(&global.out)?;
    let path = dir.write_csv("stability.csv", &manifest, |w| {
        writeln!(w, "U,V,abs_trace,stable")?;
        for (u, v, tr, stable) in &rows {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{}", u + 0.0, v + 0.0, tr, stable)?;
        }
        Ok(())
    })?;
    Ok(vec![path])
}

#[derive(Serialize)]
struct RiccatiReport {
    steps: usize,
    dt: Num,
    max_abs: Num,
    max_abs_at: Num,
    refined_dt: Num,
    refined_max_abs: Num,
    /// `max_abs / refined_max_abs`; about 4 for a second-order residual.
    shrink_ratio: Num,
}

fn argmax_abs(samples: &[f64]) -> usize {
    samples
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (k, s)| if s.abs() > best.1 { (k, s.abs()) } else { best })
        .0
}

pub fn qnd_check(global: &GlobalArgs) -> Outcome {
    let (config, grid) = load(global)?;
    let manifest = manifest("qnd-check", global, &config, &grid);
    let elem = build_qnd(&reference(global, &config, &grid)?, config.mass(), Sigma::unit())?;
    let residual = riccati_residual(&elem, &config);
    let fine_grid = grid.refined();
    let fine = build_qnd(&reference(global, &config, &fine_grid)?, config.mass(), Sigma::unit())?;
    let fine_residual = riccati_residual(&fine, &config);

    let report = RiccatiReport {
        steps: grid.steps(),
        dt: Num(grid.dt()),
        max_abs: Num(residual.max_abs),
        max_abs_at: Num(grid.time(argmax_abs(&residual.samples))),
        refined_dt: Num(fine_grid.dt()),
        refined_max_abs: Num(fine_residual.max_abs),
        shrink_ratio: Num(residual.max_abs / fine_residual.max_abs),
    };
    let dir = ArtifactDir::create(&global.out)?;
    Ok(vec![
        dir.write_csv("qnd.csv", &manifest, |w| elem.write_csv(w))?,
        dir.write_json("riccati.json", &manifest, report)?,
    ])
}

struct Setup {
    config: TrapConfig<f64>,
    grid: TimeGrid<f64>,
    elem: QndElement<f64>,
    template: ReadoutRecord<f64>,
    manifest: RunManifest,
}

fn setup(command: &'static str, global: &GlobalArgs, args: &RecordArgs) -> Result<Setup, Failure> {
    let (config, grid) = load(global)?;
    let spec = parse_spec(&args.record)?;
    let mut manifest = manifest(command, global, &config, &grid);
    manifest.record = Some(spec.to_string());
    manifest.delta_a = args.delta_a.iter().copied().map(Num).collect();
    manifest.duration_t = args.duration_t.map(Num);

    let elem = build_qnd(&reference(global, &config, &grid)?, config.mass(), Sigma::unit())?;
    let samples = sample_record(&spec.0, &elem, &config)?;
    let template = ReadoutRecord::new(grid, samples, args.delta_a[0], args.duration_t)?;
    Ok(Setup {
        config,
        grid,
        elem,
        template,
        manifest,
    })
}

#[derive(Serialize)]
struct OracleRow {
    #[serde(rename = "N")]
    n: usize,
    dt: Num,
    delta_a: Num,
    log_amp_lattice_re: Num,
    log_amp_lattice_im: Num,
    log_p_rpi: Num,
    discrepancy: Num,
}

impl From<ComparisonReport<f64>> for OracleRow {
    fn from(r: ComparisonReport<f64>) -> Self {
        Self {
            n: r.steps,
            dt: Num(r.dt),
            delta_a: Num(r.delta_a),
            log_amp_lattice_re: Num(r.log_amp_lattice.re),
            log_amp_lattice_im: Num(r.log_amp_lattice.im),
            log_p_rpi: Num(r.log_p_rpi),
            discrepancy: Num(r.discrepancy),
        }
    }
}

fn oracle_rows(s: &Setup, deltas: &[f64], ends: Endpoints) -> Result<Vec<OracleRow>, Failure> {
    let reports = deltas
        .par_iter()
        .map(|&d| {
            let record = s.template.with_delta_a(d)?;
            compare_with_closed_form(&s.config, &s.grid, &s.elem, &record, ends.q_start, ends.q_end)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(reports.into_iter().map(OracleRow::from).collect())
}

fn set_endpoints(manifest: &mut RunManifest, ends: Endpoints) {
    manifest.q_start = Some(Num(ends.q_start));
    manifest.q_end = Some(Num(ends.q_end));
}

#[derive(Serialize)]
struct ProbabilityRow {
    delta_a: Num,
    #[serde(rename = "T")]
    t: Num,
    log_p1: Num,
    log_p2: Num,
    log_p: Num,
    #[serde(rename = "re_L2")]
    re_l2: Num,
    #[serde(rename = "im_L2")]
    im_l2: Num,
}

#[derive(Serialize)]
struct RatioRow {
    delta_a: Num,
    log_ratio: Num,
}

#[derive(Serialize)]
struct ProbabilityBody {
    results: Vec<ProbabilityRow>,
    log_p_increasing_in_delta_a: bool,
    log_p_decreasing_in_delta_a: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<Vec<RatioRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<Vec<OracleRow>>,
}

#[derive(Serialize)]
struct OracleBody {
    reports: Vec<OracleRow>,
}

pub fn probability(global: &GlobalArgs, args: &ProbabilityArgs) -> Outcome {
    let record_b = args.record_b.as_deref().map(parse_spec).transpose()?;
    let mut s = setup("probability", global, &args.record)?;
    let source = match args.source {
        SourceArg::Density => ProbabilitySource::Density,
        SourceArg::AmplitudeSquared => ProbabilitySource::AmplitudeSquared,
    };
    s.manifest.record_b = record_b.map(|r| r.to_string());
    s.manifest.source = Some(match args.source {
        SourceArg::Density => "density",
        SourceArg::AmplitudeSquared => "amplitude-squared",
    });
    s.manifest.oracle = Some(args.oracle);
    if args.oracle {
        set_endpoints(&mut s.manifest, args.endpoints);
    }

    let deltas = &args.record.delta_a;
    let table = delta_a_sweep(&s.elem, &s.config, &s.template, deltas, source)?;
    let duration = s.template.duration();
    let results = table
        .rows
        .iter()
        .map(|row| ProbabilityRow {
            delta_a: Num(row.delta_a),
            t: Num(duration),
            log_p1: Num(row.probability.p1),
            log_p2: Num(row.probability.p2),
            log_p: Num(row.probability.total()),
            re_l2: Num(row.propagator.l2.re),
            im_l2: Num(row.propagator.l2.im),
        })
        .collect();

    let ratio = match record_b {
        Some(spec) => {
            let template_b = s
                .template
                .with_samples(sample_record(&spec.0, &s.elem, &s.config)?)?;
            let rows = deltas
                .par_iter()
                .map(|&d| {
                    let a = s.template.with_delta_a(d)?;
                    let b = template_b.with_delta_a(d)?;
                    Ok(RatioRow {
                        delta_a: Num(d),
                        log_ratio: Num(probability_ratio_log(&s.elem, &s.config, &a, &b)?),
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Some(rows)
        }
        None => None,
    };
    let oracle = if args.oracle {
        Some(oracle_rows(&s, deltas, args.endpoints)?)
    } else {
        None
    };

    let dir = ArtifactDir::create(&global.out)?;
    let mut written = vec![dir.write_csv("sweep.csv", &s.manifest, |w| table.write_csv(w))?];
    if let Some(rows) = &ratio {
        written.push(dir.write_csv("ratio.csv", &s.manifest, |w| {
            writeln!(w, "delta_a,log_ratio")?;
            for r in rows {
                writeln!(w, "{:.16e},{:.16e}", r.delta_a.0, r.log_ratio.0 + 0.0)?;
            }
            Ok(())
        })?);
    }
    let body = ProbabilityBody {
        results,
        log_p_increasing_in_delta_a: table.increasing_in_delta_a,
        log_p_decreasing_in_delta_a: table.decreasing_in_delta_a,
        ratio,
        oracle,
    };
    written.push(dir.write_json("probability.json", &s.manifest, &body)?);
    if let Some(reports) = body.oracle {
        written.push(dir.write_json("oracle.json", &s.manifest, OracleBody { reports })?);
    }
    Ok(written)
}

pub fn oracle(global: &GlobalArgs, args: &OracleArgs) -> Outcome {
    let mut s = setup("oracle", global, &args.record)?;
    set_endpoints(&mut s.manifest, args.endpoints);
    let reports = oracle_rows(&s, &args.record.delta_a, args.endpoints)?;
    let dir = ArtifactDir::create(&global.out)?;
    Ok(vec![dir.write_json("oracle.json", &s.manifest, OracleBody { reports })?])
}
