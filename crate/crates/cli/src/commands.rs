use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::process::ExitCode;
use std::sync::Arc;

use curvflow::pseudoindex::{check_certificate, SplittingType};
use curvflow::quadric::{
    bisectional_sweep_min, certify_two_positivity, curvature_operator, oracle_residuals, HoloTangent, OracleResiduals,
};
use curvflow::spectra::{classify_lambda12_values, eigenvalues_ascending, PositivityClass};
use curvflow::sphere_mesh::{build_icosphere, SphereMesh};
use curvflow::ym_lattice::{
    calibrate_tolerance, convergence_certificate, gauge_scramble, maxprin_monitor, monopole_field, perturb,
    quasi_positive_field, read_trace_csv, run_flow, write_trace_csv, FlowConfig, FlowReport, FlowTrace, GaugeField,
    MaxPrinCalibration, MaxPrinVerdict, MAX_RANK,
};
use curvflow::Error;
use serde::Serialize;

use crate::config::{self, CertFile, FlowFile, QuadricFile};
use crate::{CertArgs, FlowArgs, MaxprinArgs, QuadricArgs};

/// Steps of the stationary run used by `maxprin --calibrate`.
const CALIBRATION_STEPS: usize = 1000;
const ORACLE_MAX: f64 = 1e-9;
/// Offset between the perturbation seed and the gauge-scramble seed.
const SCRAMBLE_SEED_OFFSET: u64 = 0x9e37_79b9;

/// Outcome of a command whose checks ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    ClaimFailed,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Pass => ExitCode::SUCCESS,
            Status::ClaimFailed => ExitCode::from(1),
        }
    }
}

impl Status {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::ClaimFailed
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(2),
            Failure::Numerical(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical guard: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BranchCut { .. }
            | Error::StepFailure { .. }
            | Error::DegreeQuantization { .. }
            | Error::FluxQuantization { .. }
            | Error::NoConvergence(_)
            | Error::Geometry(_) => Failure::Numerical(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: Option<&str>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| Failure::Usage(format!("cannot write {p}: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct QuadricReport {
    n: usize,
    seed: u64,
    samples: usize,
    restarts: usize,
    iters: usize,
    certified: bool,
    min_lambda12: f64,
    argmin: HoloTangent,
    spectrum_at_argmin: Vec<f64>,
    failed_restarts: usize,
    oracle_pairs: usize,
    oracle_residuals: OracleResiduals,
    oracle_max_residual: f64,
    sweep_min_bisectional: f64,
    equality_case_lambda1: f64,
    equality_case_lambda2: f64,
    passes: bool,
}

pub fn quadric(args: QuadricArgs) -> Result<Status, Failure> {
    let file: QuadricFile = config::load(args.config.as_deref())?;
    let n = args.n.or(file.n).unwrap_or(3);
    let samples = args.samples.or(file.samples).unwrap_or(100_000);
    let restarts = args.restarts.or(file.restarts).unwrap_or(32);
    let iters = args.iters.or(file.iters).unwrap_or(400);
    let pairs = args.pairs.or(file.pairs).unwrap_or(1000);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = args.out.or(file.out);
    if !(2..=16).contains(&n) {
        return Err(Failure::Usage(format!("n must be in 2..=16, got {n}")));
    }
    if restarts == 0 || iters == 0 {
        return Err(Failure::Usage("restarts and iters must be positive".into()));
    }

    let cert = certify_two_positivity(n, restarts, iters, seed)?;
    let residuals = oracle_residuals(n, pairs, seed.wrapping_add(1))?;
    let sweep = bisectional_sweep_min(n, samples, seed.wrapping_add(2))?;
    let eq = eigenvalues_ascending(&curvature_operator(&HoloTangent::equality_case(n)?))?.eigenvalues;
    let passes = cert.certified() && residuals.max() < ORACLE_MAX;
    let report = QuadricReport {
        n,
        seed,
        samples,
        restarts,
        iters,
        certified: cert.certified(),
        min_lambda12: cert.min_lambda12,
        argmin: cert.argmin.clone(),
        spectrum_at_argmin: cert.spectrum.clone(),
        failed_restarts: cert.failed_restarts(),
        oracle_pairs: pairs,
        oracle_residuals: residuals,
        oracle_max_residual: residuals.max(),
        sweep_min_bisectional: sweep,
        equality_case_lambda1: eq[0],
        equality_case_lambda2: eq[1],
        passes,
    };
    write_json(&report, out.as_deref())?;
    Ok(Status::from_bool(passes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    Monopole,
    Perturbed,
    Flat,
    Quasi,
}

impl Init {
    fn parse(s: &str) -> Result<Self, Failure> {
        match s {
            "monopole" => Ok(Init::Monopole),
            "perturbed" => Ok(Init::Perturbed),
            "flat" => Ok(Init::Flat),
            "quasi" => Ok(Init::Quasi),
            other => Err(Failure::Usage(format!("unknown init {other:?} (monopole, perturbed, flat, quasi)"))),
        }
    }
}

/// Resolved flow parameters after merging flags, config file and defaults.
struct FlowSetup {
    mesh: Arc<SphereMesh>,
    rank: usize,
    degrees: Vec<i64>,
    init: Init,
    eps: f64,
    seed: u64,
    config: FlowConfig,
    trace: Option<String>,
    report: Option<String>,
}

fn resolve_flow(args: &FlowArgs, file: &FlowFile) -> Result<FlowSetup, Failure> {
    let level = args.level.or(file.level).unwrap_or(3);
    let degrees = match &args.degrees {
        Some(raw) => Some(config::parse_int_list(raw)?),
        None => file.degrees.clone(),
    };
    let rank = args.rank.or(file.rank).or(degrees.as_ref().map(Vec::len)).unwrap_or(2);
    let init = Init::parse(args.init.as_deref().or(file.init.as_deref()).unwrap_or("perturbed"))?;
    let eps = args.eps.or(file.eps).unwrap_or(0.1);
    let seed = args.seed.or(file.seed).unwrap_or(0);

    if level > curvflow::sphere_mesh::MAX_LEVEL {
        return Err(Failure::Usage(format!("level must be at most {}, got {level}", curvflow::sphere_mesh::MAX_LEVEL)));
    }
    if rank == 0 || rank > MAX_RANK {
        return Err(Failure::Usage(format!("rank must be in 1..={MAX_RANK}, got {rank}")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Failure::Usage(format!("eps must be a nonnegative number, got {eps}")));
    }
    let degrees = match (init, degrees) {
        (Init::Monopole | Init::Perturbed, Some(d)) if d.len() != rank => {
            return Err(Failure::Usage(format!("{} degrees given for rank {rank}", d.len())))
        }
        (Init::Monopole | Init::Perturbed, Some(d)) => d,
        (Init::Monopole | Init::Perturbed, None) if rank == 2 => vec![1, 1],
        (Init::Monopole | Init::Perturbed, None) => {
            return Err(Failure::Usage("--degrees is required for this rank".into()))
        }
        (Init::Quasi, _) if rank != 2 => return Err(Failure::Usage("the quasi-positive start has rank 2".into())),
        (Init::Quasi, _) => vec![0, 2],
        (Init::Flat, _) => vec![0; rank],
    };

    let mesh = Arc::new(build_icosphere(level)?);
    let mut config = FlowConfig::for_mesh(&mesh);
    if let Some(s) = args.step_size.or(file.step_size) {
        config.step_size = s;
    }
    if let Some(s) = args.steps.or(file.steps) {
        config.max_steps = s;
    }
    if let Some(t) = args.tol.or(file.tol) {
        config.grad_tol = t;
    }
    if let Some(k) = args.record_every.or(file.record_every) {
        config.record_every = k;
    }
    config.energy_backtrack = if args.no_backtrack { false } else { file.backtrack.unwrap_or(true) };
    config.seed = seed;
    config.validate()?;

    Ok(FlowSetup {
        mesh,
        rank,
        degrees,
        init,
        eps,
        seed,
        config,
        trace: args.trace.clone().or(file.trace.clone()),
        report: args.report.clone().or(file.report.clone()),
    })
}

fn initial_field(s: &FlowSetup) -> Result<GaugeField, Failure> {
    let scramble_seed = s.seed.wrapping_add(SCRAMBLE_SEED_OFFSET);
    let field = match s.init {
        Init::Monopole => monopole_field(s.mesh.clone(), &s.degrees)?,
        Init::Perturbed => {
            let base = monopole_field(s.mesh.clone(), &s.degrees)?;
            gauge_scramble(&perturb(&base, s.eps, s.seed)?, scramble_seed)
        }
        Init::Flat => perturb(&GaugeField::identity(s.mesh.clone(), s.rank)?, s.eps, s.seed)?,
        Init::Quasi => gauge_scramble(&quasi_positive_field(s.mesh.clone())?, scramble_seed),
    };
    Ok(field)
}

fn write_trace(trace: &FlowTrace, path: Option<&str>) -> Result<(), Failure> {
    let Some(p) = path else { return Ok(()) };
    let file = File::create(p).map_err(|e| Failure::Usage(format!("cannot write {p}: {e}")))?;
    let mut w = BufWriter::new(file);
    write_trace_csv(trace, &mut w)?;
    w.flush().map_err(|e| Failure::Usage(format!("cannot write {p}: {e}")))
}

fn run(setup: &FlowSetup) -> Result<(GaugeField, FlowTrace), Failure> {
    let start = initial_field(setup)?;
    Ok(run_flow(&start, &setup.config)?)
}

pub fn ymflow(args: FlowArgs) -> Result<Status, Failure> {
    let file: FlowFile = config::load(args.config.as_deref())?;
    let setup = resolve_flow(&args, &file)?;
    let (field, trace) = run(&setup)?;
    write_trace(&trace, setup.trace.as_deref())?;

    let cert = convergence_certificate(&field, &trace)?;
    let monitored = trace.initial_class.is_some_and(|c| c.is_two_nonnegative());
    let maxprin = if monitored { Some(maxprin_monitor(&trace, &MaxPrinCalibration::default())?) } else { None };
    let report = FlowReport::new(&trace, &cert, maxprin)?;
    write_json(&report, setup.report.as_deref())?;

    let ok = trace.converged
        && cert.passes()
        && trace.energy_monotone()
        && trace.degree_constant()
        && maxprin.as_ref().is_none_or(MaxPrinVerdict::passes);
    Ok(Status::from_bool(ok))
}

#[derive(Debug, Serialize)]
struct MaxprinReport {
    rank: usize,
    level: usize,
    source: &'static str,
    records: usize,
    final_time: f64,
    initial_class: Option<PositivityClass>,
    verdict: MaxPrinVerdict,
    passes: bool,
}

fn calibration(args: &MaxprinArgs, file: &FlowFile, setup: &FlowSetup) -> Result<MaxPrinCalibration, Failure> {
    let defaults = MaxPrinCalibration::default();
    let mut cal = MaxPrinCalibration {
        c: args.tol_c.or(file.tol_c).unwrap_or(defaults.c),
        c_prime: args.tol_c_prime.or(file.tol_c_prime).unwrap_or(defaults.c_prime),
        floor: args.tol_floor.or(file.tol_floor).unwrap_or(defaults.floor),
    };
    if [cal.c, cal.c_prime, cal.floor].iter().any(|v| !(*v >= 0.0)) {
        return Err(Failure::Usage("tolerance constants must be nonnegative".into()));
    }
    if args.calibrate || file.calibrate.unwrap_or(false) {
        let mono = monopole_field(setup.mesh.clone(), &[1, 1])?;
        let cfg = FlowConfig { max_steps: CALIBRATION_STEPS, grad_tol: f64::MIN_POSITIVE, ..setup.config };
        let (_, trace) = run_flow(&mono, &cfg)?;
        let l0 = trace.records[0].min_lambda12;
        let drop = trace.records.iter().map(|r| l0 - r.min_lambda12).fold(0.0, f64::max);
        let fit = calibrate_tolerance(&[(trace.mesh_h, trace.step_size, drop)], cal.floor);
        cal.c = cal.c.max(fit.c);
        cal.c_prime = cal.c_prime.max(fit.c_prime);
    }
    Ok(cal)
}

fn trace_from_csv(path: &str, setup: &FlowSetup) -> Result<FlowTrace, Failure> {
    let file = File::open(path).map_err(|e| Failure::Usage(format!("cannot read {path}: {e}")))?;
    let records = read_trace_csv(BufReader::new(file))?;
    let (first, last) = match (records.first(), records.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Failure::Usage(format!("trace {path} has no records"))),
    };
    // Only the minimum survives in a trace, so quasi-positivity cannot be
    // recognized from one.
    let initial_class = Some(classify_lambda12_values(&[first.min_lambda12], first.min_lambda12.max(0.0))?);
    Ok(FlowTrace {
        rank: setup.rank,
        level: setup.mesh.level(),
        mesh_h: setup.mesh.spacing(),
        step_size: setup.config.step_size,
        grad_tol: setup.config.grad_tol,
        converged: last.grad_norm < setup.config.grad_tol,
        steps_taken: last.step,
        final_time: last.time,
        total_halvings: 0,
        initial_class,
        records,
    })
}

pub fn maxprin(args: MaxprinArgs) -> Result<Status, Failure> {
    let file: FlowFile = config::load(args.flow.config.as_deref())?;
    let setup = resolve_flow(&args.flow, &file)?;
    if setup.rank < 2 {
        return Err(Failure::Usage(format!("the maximum-principle monitor needs rank >= 2, got {}", setup.rank)));
    }
    let cal = calibration(&args, &file, &setup)?;
    let (trace, source) = match &args.trace_in {
        Some(path) => (trace_from_csv(path, &setup)?, "trace-in"),
        None => {
            let (_, trace) = run(&setup)?;
            write_trace(&trace, setup.trace.as_deref())?;
            (trace, "flow")
        }
    };
    let verdict = maxprin_monitor(&trace, &cal)?;
    let report = MaxprinReport {
        rank: trace.rank,
        level: trace.level,
        source,
        records: trace.records.len(),
        final_time: trace.final_time,
        initial_class: trace.initial_class,
        verdict,
        passes: verdict.passes(),
    };
    write_json(&report, setup.report.as_deref())?;
    Ok(Status::from_bool(verdict.passes()))
}

pub fn cert(args: CertArgs) -> Result<Status, Failure> {
    let file: CertFile = config::load(args.config.as_deref())?;
    let splitting = match &args.splitting {
        Some(raw) => config::parse_int_list(raw)?,
        None => file.splitting.ok_or_else(|| Failure::Usage("--splitting is required".into()))?,
    };
    let n = args.n.or(file.n).unwrap_or(splitting.len());
    let k = args.k.or(file.k).unwrap_or(0);
    let st = SplittingType::new(splitting)?;
    let cert = check_certificate(&st, k, n)?;
    write_json(&cert, None)?;
    Ok(Status::from_bool(cert.verdict.passed()))
}
