//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so that the criteria share
//! flow traces: the degree-conservation criterion audits every trace
//! produced by the stationarity, convergence, maximum-principle and heat
//! criteria. The process exits non-zero when a criterion fails that is not
//! listed in [`EXPECTED_FAILURES`]; those are printed as FAIL all the same.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use curvflow::linalg::{random_hermitian, random_unitary};
use curvflow::pseudoindex::soundness_sweep;
use curvflow::quadric::{
    bisectional_descent_min, bisectional_sweep_min, certify_two_positivity, curvature_operator, oracle_residuals,
    HoloTangent, DEFAULT_ITERS, DEFAULT_RESTARTS,
};
use curvflow::spectra::{eigenvalues_ascending, lambda12, lambda12_variational, HermitianMatrix, PositivityClass};
use curvflow::sphere_mesh::{build_icosphere, SphereMesh};
use curvflow::ym_lattice::{
    calibrate_tolerance, convergence_certificate, gauge_scramble, heat_mode_projection, maxprin_monitor, mode_norms,
    monopole_field, perturb, perturb_smooth, quasi_positive_field, run_flow, ym_gradient, gradient_norm, FlowConfig,
    FlowTrace, GaugeField, MaxPrinCalibration, QuasiPositivityVerdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot pass with a faithful implementation, with the reason
/// printed next to their FAIL line.
const EXPECTED_FAILURES: &[(u32, &str)] = &[
    (
        4,
        "the area-proportional monopole is an exact lattice critical point; its gradient is rounding noise that \
         grows with the face count instead of shrinking like h^2",
    ),
    (
        5,
        "O(0)+O(2) is an unstable critical point; a generic perturbation deforms the bundle to O(1)+O(1), \
         which is where the flow goes",
    ),
];

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

#[derive(Default)]
struct Shared {
    /// `(label, expected degree, trace)` for every flow run.
    traces: Vec<(String, i64, FlowTrace)>,
    /// `(h, step_size, drop of min λ12)` on stationary rank-2 runs.
    stationary_drops: Vec<(f64, f64, f64)>,
}

fn mesh(level: usize) -> Arc<SphereMesh> {
    Arc::new(build_icosphere(level).expect("icosphere"))
}

fn criterion<F>(id: u32, budget: Duration, f: F) -> Outcome
where
    F: FnOnce() -> (bool, String),
{
    let t0 = Instant::now();
    let (ok, mut detail) = f();
    let elapsed = t0.elapsed();
    let in_time = elapsed <= budget;
    if !in_time {
        detail.push_str(&format!("; over the {:.0} s budget", budget.as_secs_f64()));
    }
    Outcome { id, pass: ok && in_time, detail, elapsed }
}

fn oracle_triangle() -> (bool, String) {
    let mut worst = 0.0f64;
    for n in 2..=6 {
        let r = oracle_residuals(n, 1000, 100 + n as u64).expect("oracle residuals");
        worst = worst.max(r.max());
    }
    (worst <= 1e-9, format!("max pairwise residual {worst:.2e} over n = 2..6, 1000 pairs each"))
}

fn nonnegativity() -> (bool, String) {
    let mut worst = f64::INFINITY;
    for n in 2..=6 {
        let sweep = bisectional_sweep_min(n, 100_000, 200 + n as u64).expect("sweep");
        let (descent, _) = bisectional_descent_min(n, 32, DEFAULT_ITERS, 300 + n as u64).expect("descent");
        worst = worst.min(sweep).min(descent);
    }
    (worst >= -1e-9, format!("minimum bisectional curvature {worst:.3e} (10^5 samples + 32 descents per n)"))
}

fn two_positivity() -> (bool, String) {
    let mut ok = true;
    let mut mins = Vec::new();
    for n in 2..=6 {
        let cert = certify_two_positivity(n, DEFAULT_RESTARTS, DEFAULT_ITERS, 400 + n as u64).expect("certificate");
        ok &= cert.min_lambda12 > 0.0;
        mins.push(format!("{:.6}", cert.min_lambda12));
        let eq = HoloTangent::equality_case(n).expect("equality vector");
        let ev = eigenvalues_ascending(&curvature_operator(&eq)).expect("spectrum").eigenvalues;
        ok &= ev[0].abs() <= 1e-8 && ev[1] > 0.0;
    }
    (ok, format!("min lambda12 per n = [{}]; equality vector has lambda_1 = 0, lambda_2 > 0", mins.join(", ")))
}

fn stationarity(shared: &mut Shared) -> (bool, String) {
    let cases: [&[i64]; 2] = [&[2], &[1, 1]];
    let mut ok = true;
    let mut lines = Vec::new();
    for degrees in cases {
        let mut grads = Vec::new();
        for level in 3..=5 {
            let m = mesh(level);
            let field = monopole_field(m.clone(), degrees).expect("monopole");
            let g = gradient_norm(&field, &ym_gradient(&field).expect("gradient"));
            let h = m.spacing();
            grads.push((h, g));

            let cfg = FlowConfig { max_steps: 1000, grad_tol: f64::MIN_POSITIVE, ..FlowConfig::for_mesh(&m) };
            let (_, trace) = run_flow(&field, &cfg).expect("flow");
            let e0 = trace.records[0].energy;
            let band = trace.records.iter().all(|r| r.grad_norm <= 1e-6 && (r.energy - e0).abs() <= 1e-10 * e0);
            ok &= band && trace.steps_taken == 1000;
            if degrees.len() >= 2 {
                let l0 = trace.records[0].min_lambda12;
                let drop = trace.records.iter().map(|r| l0 - r.min_lambda12).fold(0.0, f64::max);
                shared.stationary_drops.push((h, trace.step_size, drop));
            }
            shared.traces.push((format!("monopole {degrees:?} level {level}"), degrees.iter().sum(), trace));
        }
        let cs: Vec<String> = grads.iter().map(|(h, g)| format!("{:.2e}", g / (h * h))).collect();
        let ratios: Vec<f64> = grads.windows(2).map(|w| w[0].1 / w[1].1).collect();
        ok &= ratios.iter().all(|r| (3.0..=6.0).contains(r));
        lines.push(format!(
            "{degrees:?}: C = [{}], level ratios = [{}]",
            cs.join(", "),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
        ));
    }
    (ok, format!("{}; 1000-step band held", lines.join("; ")))
}

fn convergence(shared: &mut Shared) -> (bool, String) {
    let m = mesh(4);
    let h = m.spacing();
    let mut ok = true;
    let mut lines = Vec::new();
    for (i, degrees) in [[0i64, 2], [1, 1]].into_iter().enumerate() {
        let start = monopole_field(m.clone(), &degrees).expect("monopole");
        let start = gauge_scramble(&perturb(&start, 0.1, 11 + i as u64).expect("perturb"), 21 + i as u64);
        let cfg = FlowConfig { max_steps: 60_000, ..FlowConfig::for_mesh(&m) };
        let (field, trace) = run_flow(&start, &cfg).expect("flow");
        let cert = convergence_certificate(&field, &trace).expect("certificate");
        let good = trace.converged
            && cert.splitting == degrees.to_vec()
            && cert.integrality_residual < 0.05
            && cert.max_std < 5.0 * h;
        ok &= good;
        lines.push(format!(
            "{degrees:?} -> splitting {:?} (grad {:.2e}, residual {:.2e}, std {:.2e} vs {:.2e}, {} steps)",
            cert.splitting,
            cert.grad_norm,
            cert.integrality_residual,
            cert.max_std,
            5.0 * h,
            trace.steps_taken
        ));
        shared.traces.push((format!("perturbed {degrees:?}"), degrees.iter().sum(), trace));
    }
    (ok, lines.join("; "))
}

fn maximum_principle(shared: &mut Shared) -> (bool, String) {
    let m = mesh(4);
    let cal = if shared.stationary_drops.is_empty() {
        MaxPrinCalibration::default()
    } else {
        calibrate_tolerance(&shared.stationary_drops, MaxPrinCalibration::default().floor)
    };
    let mono = monopole_field(m.clone(), &[1, 1]).expect("monopole");
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for seed in 0..20u64 {
        let start = gauge_scramble(&perturb_smooth(&mono, 0.05, 4, seed).expect("perturb"), 1000 + seed);
        let cfg = FlowConfig { max_steps: 400, grad_tol: f64::MIN_POSITIVE, ..FlowConfig::for_mesh(&m) };
        let (_, trace) = run_flow(&start, &cfg).expect("flow");
        let positive = matches!(trace.initial_class, Some(PositivityClass::EpsilonTwoPositive(e)) if e > 0.0);
        let verdict = maxprin_monitor(&trace, &cal).expect("monitor");
        ok &= positive && verdict.preserved;
        worst_margin = worst_margin.min(verdict.worst_drop + verdict.tol_mp);
        shared.traces.push((format!("smooth (1,1) seed {seed}"), 2, trace));
    }

    let quasi = gauge_scramble(&quasi_positive_field(m.clone()).expect("quasi field"), 7);
    let cfg = FlowConfig { max_steps: 600, grad_tol: f64::MIN_POSITIVE, ..FlowConfig::for_mesh(&m) };
    let (_, trace) = run_flow(&quasi, &cfg).expect("flow");
    let verdict = maxprin_monitor(&trace, &cal).expect("monitor");
    let quasi_ok = trace.initial_class == Some(PositivityClass::TwoQuasiPositive)
        && matches!(verdict.quasi, QuasiPositivityVerdict::Pass { .. });
    let check = match verdict.quasi {
        QuasiPositivityVerdict::Pass { t_check } => format!("positive from t = {t_check:.4}"),
        other => format!("{other:?}"),
    };
    shared.traces.push(("quasi-positive".into(), 2, trace));
    (
        ok && quasi_ok,
        format!(
            "tol_mp = {:.3e} h^2 + {:.3e} tau + {:.0e}; worst (drop + tol_mp) over 20 seeds {worst_margin:.3e}; \
             quasi-positive start {check}",
            cal.c, cal.c_prime, cal.floor
        ),
    )
}

fn degree_conservation(shared: &Shared) -> (bool, String) {
    let bad: Vec<&str> = shared
        .traces
        .iter()
        .filter(|(_, d, t)| !t.degree_constant() || t.records.iter().any(|r| r.degree != *d))
        .map(|(label, _, _)| label.as_str())
        .collect();
    let records: usize = shared.traces.iter().map(|(_, _, t)| t.records.len()).sum();
    (
        bad.is_empty() && !shared.traces.is_empty(),
        format!("{} runs, {records} records, non-constant: {bad:?}", shared.traces.len()),
    )
}

fn heat_rates(shared: &mut Shared) -> (bool, String) {
    let m = mesh(4);
    let start = perturb(&GaugeField::identity(m.clone(), 1).expect("flat"), 0.01, 7).expect("perturb");
    let base = FlowConfig { grad_tol: f64::MIN_POSITIVE, ..FlowConfig::for_mesh(&m) };
    let steps_to = |t: f64| (t / base.step_size).ceil() as usize;
    let (a, first) = run_flow(&start, &FlowConfig { max_steps: steps_to(0.1), ..base }).expect("flow");
    let (b, second) = run_flow(&a, &FlowConfig { max_steps: steps_to(0.4), ..base }).expect("flow");
    let na = mode_norms(&heat_mode_projection(&a, 2).expect("projection"));
    let nb = mode_norms(&heat_mode_projection(&b, 2).expect("projection"));
    let dt = second.final_time;
    let rate = |l: usize| (na[l] / nb[l]).ln() / dt;
    let (r1, r2) = (rate(1), rate(2));
    let ok = ((r1 - 2.0) / 2.0).abs() <= 0.1 && ((r2 - 6.0) / 6.0).abs() <= 0.1;
    let detail = format!("rate(l=1) = {r1:.4} vs 2, rate(l=2) = {r2:.4} vs 6, over t in [{:.3}, {:.3}]", first.final_time, first.final_time + dt);
    shared.traces.push(("rank-1 heat, first leg".into(), 0, first));
    shared.traces.push(("rank-1 heat, second leg".into(), 0, second));
    (ok, detail)
}

fn soundness() -> (bool, String) {
    let report = soundness_sweep(&[3, 4, 5], &[0, 1, 2], -3, 6).expect("sweep");
    let witnesses = [3usize, 4, 5].iter().all(|n| report.witnesses.contains_key(n));
    (
        report.violations.is_empty() && witnesses,
        format!(
            "{} certificates, {} passing, {} violations, tight witnesses {:?}",
            report.checked,
            report.passing,
            report.violations.len(),
            report.witnesses.values().map(|(a, _)| a.clone()).collect::<Vec<_>>()
        ),
    )
}

fn spectra_properties() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 10_000;
    let mut fails = [0usize; 4];
    for i in 0..trials {
        let n = rng.random_range(2..=6);
        let a = HermitianMatrix::new(random_hermitian(n, &mut rng));
        let b = HermitianMatrix::new(random_hermitian(n, &mut rng));
        let (la, lb) = (lambda12(&a).unwrap(), lambda12(&b).unwrap());

        if lambda12(&(&a + &b)).unwrap() < la + lb - 1e-10 {
            fails[0] += 1;
        }

        let eps: f64 = rng.random_range(0.0..2.0);
        let lift = |m: &HermitianMatrix, l: f64| &m.clone() + &HermitianMatrix::from_real_diagonal(&vec![(eps - l) / 2.0; n]);
        let (ca, cb) = (lift(&a, la), lift(&b, lb));
        let t: f64 = rng.random_range(0.0..=1.0);
        if lambda12(&(&(&ca * t) + &(&cb * (1.0 - t)))).unwrap() < eps - 1e-10 {
            fails[1] += 1;
        }

        let w = random_unitary(n, &mut rng);
        if (lambda12(&a.conjugate_by(&w)).unwrap() - la).abs() > 1e-10 {
            fails[2] += 1;
        }

        if lambda12_variational(&a, 64, i as u64).unwrap() < la - 1e-10 {
            fails[3] += 1;
        }
    }
    (
        fails.iter().all(|&f| f == 0),
        format!(
            "{trials} trials; failures: superadditivity {}, convexity {}, unitary invariance {}, variational bound {}",
            fails[0], fails[1], fails[2], fails[3]
        ),
    )
}

fn main() -> ExitCode {
    let mut shared = Shared::default();
    let secs = Duration::from_secs;
    let mut outcomes = Vec::new();
    let mut report = |o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2}: {status} ({:.1} s) {}", o.id, o.elapsed.as_secs_f64(), o.detail);
        if !o.pass {
            if let Some((_, why)) = EXPECTED_FAILURES.iter().find(|(id, _)| *id == o.id) {
                println!("              expected failure: {why}");
            }
        }
        outcomes.push((o.id, o.pass));
    };

    report(criterion(1, secs(10), oracle_triangle));
    report(criterion(2, secs(60), nonnegativity));
    report(criterion(3, secs(60), two_positivity));
    report(criterion(4, secs(120), || stationarity(&mut shared)));
    report(criterion(5, secs(600), || convergence(&mut shared)));
    report(criterion(7, secs(600), || maximum_principle(&mut shared)));
    report(criterion(8, secs(120), || heat_rates(&mut shared)));
    report(criterion(6, secs(10), || degree_conservation(&shared)));
    report(criterion(9, secs(10), soundness));
    report(criterion(10, secs(30), spectra_properties));

    let unexpected: Vec<u32> = outcomes
        .iter()
        .filter(|(id, pass)| !pass && !EXPECTED_FAILURES.iter().any(|(e, _)| e == id))
        .map(|(id, _)| *id)
        .collect();
    let passed = outcomes.iter().filter(|(_, p)| *p).count();
    println!("acceptance: {passed}/{} criteria pass; unexpected failures: {unexpected:?}", outcomes.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
