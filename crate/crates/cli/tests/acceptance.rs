//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints its PASS/FAIL line; exits nonzero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mlab::analysis::{
    cond_probs, conditional_outputs, decoherence, irreversible_decoherence, positivity_excess,
    resolution, steering_report, ReadoutStrategy,
};
use mlab::interaction::{MeasurementInteraction, ProductHamiltonianSpec, TwoPartMeterSpec};
use mlab::linalg::{CVector, DensityMatrix};
use mlab::oracle::{
    bound_sweep, invariant_suite, random_state, InvariantReport, RandomSuiteConfig,
};
use mlab::readout_opt::{
    cp_factorize, eraser_readout, feedback_channel, feedback_correction, optimal_readout,
    FactorizeOptions,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Worst per-outcome positivity excess seen outside the random suite.
struct Positivity(f64);

impl Positivity {
    fn record(
        &mut self,
        mi: &MeasurementInteraction,
        r: &ReadoutStrategy,
        rho: &DensityMatrix,
    ) -> mlab::Result<()> {
        self.0 = self
            .0
            .max(positivity_excess(&conditional_outputs(mi, r, rho)?));
        Ok(())
    }
}

fn qubit_hamiltonian(theta: f64) -> MeasurementInteraction {
    MeasurementInteraction::from_product_hamiltonian(&ProductHamiltonianSpec {
        a_values: vec![1.0, -1.0],
        b_values: vec![1.0, -1.0],
        initial_meter: CVector::from_element(2, Complex64::new(FRAC_1_SQRT_2, 0.0)),
        effective_time: theta,
    })
    .unwrap()
}

fn y_readout() -> ReadoutStrategy {
    let s = FRAC_1_SQRT_2;
    let kets = [
        CVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)]),
        CVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(0.0, -s)]),
    ];
    ReadoutStrategy::from_basis(&kets, "Y").unwrap()
}

fn uniform_qubit() -> DensityMatrix {
    DensityMatrix::pure(&CVector::from_element(
        2,
        Complex64::new(FRAC_1_SQRT_2, 0.0),
    ))
    .unwrap()
}

fn criterion_1(cfg: &RandomSuiteConfig) -> mlab::Result<Outcome> {
    let start = Instant::now();
    let report = bound_sweep(cfg)?;
    let elapsed = start.elapsed();
    Ok(outcome(
        report.trials >= 1000 && report.max_excess <= 1e-10 && elapsed < Duration::from_secs(30),
        format!(
            "{} interactions x {} readouts, max(R - D) = {:.3e}, {:.2?}",
            report.trials, cfg.haar_samples, report.max_excess, elapsed
        ),
    ))
}

fn criterion_2(inv: &InvariantReport) -> Outcome {
    outcome(
        inv.max_tradeoff_gap <= 1e-9,
        format!(
            "max |D_irr(states) - R(table)| = {:.3e} over {} trials",
            inv.max_tradeoff_gap, inv.trials
        ),
    )
}

fn criterion_3(inv: &InvariantReport) -> Outcome {
    outcome(
        inv.max_reversible_gap <= 1e-10,
        format!(
            "max |sum_m p(m) rho(m) - rho_out| = {:.3e} (pure and mixed inputs)",
            inv.max_reversible_gap
        ),
    )
}

fn criterion_4(pos: &mut Positivity) -> mlab::Result<Outcome> {
    let mi = MeasurementInteraction::partial_cnot(FRAC_PI_4)?;
    let expected = 1.0 - FRAC_PI_4.cos();
    let d = decoherence(&mi.gram()).get(0, 1);
    let readout = ReadoutStrategy::computational(2);
    let r = resolution(&cond_probs(&mi, &readout)?).get(0, 1);
    pos.record(&mi, &readout, &uniform_qubit())?;
    Ok(outcome(
        (d - expected).abs() <= 1e-9 && (r - expected).abs() <= 1e-9,
        format!("D = {d:.10}, R = {r:.10}, expected {expected:.10}"),
    ))
}

fn criterion_5(pos: &mut Positivity) -> mlab::Result<Outcome> {
    let mi = qubit_hamiltonian(PI / 8.0);
    let y = y_readout();
    let b = ReadoutStrategy::computational(2);
    let rep = steering_report(&mi, &y, &b, (0, 1))?;
    pos.record(&mi, &y, &uniform_qubit())?;
    pos.record(&mi, &b, &uniform_qubit())?;
    let expected = 1.0 - FRAC_PI_4.cos();
    Ok(outcome(
        (rep.resolution_r - expected).abs() <= 1e-9
            && rep.irreversible_c.abs() <= 1e-10
            && rep.violation,
        format!(
            "R_Y = {:.10}, D_irr,B = {:.3e}, violation = {}",
            rep.resolution_r, rep.irreversible_c, rep.violation
        ),
    ))
}

fn random_two_part_meter(rng: &mut ChaCha8Rng) -> mlab::Result<MeasurementInteraction> {
    let n = rng.random_range(2..=4);
    let k = rng.random_range(2..=3);
    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = w.iter().sum();
    MeasurementInteraction::from_two_part_meter(&TwoPartMeterSpec {
        a_values: (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
        v_values: (0..k).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
        dist: w.iter().map(|x| x / total).collect(),
        effective_time: rng.random::<f64>() * 2.0,
    })
}

fn criterion_6(pos: &mut Positivity) -> mlab::Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_residual, mut worst_gap, mut failures) = (0.0_f64, 0.0_f64, 0);
    for _ in 0..100 {
        let mi = random_two_part_meter(&mut rng)?;
        let g = mi.gram();
        let fact = match cp_factorize(&g, &FactorizeOptions::default()) {
            Ok(f) => f,
            Err(mlab::Error::FactorizationNotFound { best_residual, .. }) => {
                failures += 1;
                worst_residual = worst_residual.max(best_residual);
                continue;
            }
            Err(e) => return Err(e),
        };
        worst_residual = worst_residual.max(fact.residual);
        let w = optimal_readout(&mi, &fact)?;
        let gap = resolution(&cond_probs(&mi, &w)?).max_deviation(&decoherence(&g));
        worst_gap = worst_gap.max(gap);
        let psi = random_state(&mut rng, mi.n());
        pos.record(&mi, &w, &DensityMatrix::pure(&psi)?)?;
    }
    let elapsed = start.elapsed();
    Ok(outcome(
        failures == 0 && worst_residual <= 1e-8 && worst_gap <= 1e-6 && elapsed < Duration::from_secs(120),
        format!(
            "100 two-part meters, worst residual = {worst_residual:.3e}, max |R - D| = {worst_gap:.3e}, {failures} failures, {elapsed:.2?}"
        ),
    ))
}

fn criterion_7(pos: &mut Positivity) -> mlab::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_r, mut worst_dirr, mut worst_infidelity) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..=4 {
        let mi = qubit_hamiltonian(k as f64 * PI / 16.0);
        let eraser = eraser_readout(&mi)?;
        let p = cond_probs(&mi, &eraser)?;
        worst_r = worst_r.max(resolution(&p).get(0, 1));
        worst_dirr = worst_dirr.max(irreversible_decoherence(&p).get(0, 1));
        let fb = feedback_correction(&mi, &eraser)?;
        for _ in 0..20 {
            let psi = random_state(&mut rng, 2);
            let rho = DensityMatrix::pure(&psi)?;
            pos.record(&mi, &eraser, &rho)?;
            let out = feedback_channel(&mi, &eraser, &fb, &rho)?;
            worst_infidelity = worst_infidelity.max(1.0 - out.fidelity_with_pure(&psi)?);
        }
    }
    Ok(outcome(
        worst_r <= 1e-12 && worst_dirr <= 1e-12 && worst_infidelity <= 1e-10,
        format!(
            "theta in 0..pi/4 step pi/16: max R = {worst_r:.3e}, max D_irr = {worst_dirr:.3e}, max 1 - F = {worst_infidelity:.3e}"
        ),
    ))
}

fn criterion_8(inv: &InvariantReport, pos: &Positivity) -> Outcome {
    let worst = inv.max_positivity_excess.max(pos.0);
    outcome(
        worst <= 1e-10,
        format!("max |rho(m)[a1a2]| - sqrt(rho(m)[a1a1] rho(m)[a2a2]) = {worst:.3e}"),
    )
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_mlab");
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/steering-demo.json");
    let dir = tempfile::tempdir().expect("temporary directory");

    let start = Instant::now();
    let run = Command::new(bin)
        .args([
            "run",
            scenario.to_str().unwrap(),
            "--quiet",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .expect("binary runs");
    let run_time = start.elapsed();
    let steering: Option<mlab_cli::run::SteeringOutput> =
        std::fs::read_to_string(dir.path().join("steering.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
    let expected = 1.0 - FRAC_PI_4.cos();
    let numbers_ok = steering.as_ref().is_some_and(|s| {
        s.violation
            && s.pairs.iter().all(|p| {
                (p.resolution_r - expected).abs() <= 1e-9
                    && p.irreversible_c.abs() <= 1e-10
                    && p.violation
            })
    });

    let start = Instant::now();
    let verify = Command::new(bin)
        .args(["verify", "--quiet"])
        .output()
        .expect("binary runs");
    let verify_time = start.elapsed();

    outcome(
        run.status.success() && numbers_ok && run_time < Duration::from_secs(5) && verify.status.code() == Some(0),
        format!(
            "steering-demo exit {:?} in {run_time:.2?}, numbers {}, verify exit {:?} in {verify_time:.2?}",
            run.status.code(),
            if numbers_ok { "match" } else { "mismatch" },
            verify.status.code()
        ),
    )
}

fn main() -> ExitCode {
    let cfg = RandomSuiteConfig::default();
    let mut pos = Positivity(0.0);
    let inv = invariant_suite(&cfg);

    let results: Vec<(&str, Outcome)> = vec![
        (
            "uncertainty bound",
            criterion_1(&cfg).unwrap_or_else(|e| outcome(false, e.to_string())),
        ),
        (
            "trade-off equality",
            inv.as_ref()
                .map_or_else(|e| outcome(false, e.to_string()), criterion_2),
        ),
        (
            "reversible sum",
            inv.as_ref()
                .map_or_else(|e| outcome(false, e.to_string()), criterion_3),
        ),
        (
            "partial CNOT closed form",
            criterion_4(&mut pos).unwrap_or_else(|e| outcome(false, e.to_string())),
        ),
        (
            "steering violation",
            criterion_5(&mut pos).unwrap_or_else(|e| outcome(false, e.to_string())),
        ),
        (
            "optimal readout synthesis",
            criterion_6(&mut pos).unwrap_or_else(|e| outcome(false, e.to_string())),
        ),
        (
            "eraser and feedback",
            criterion_7(&mut pos).unwrap_or_else(|e| outcome(false, e.to_string())),
        ),
        (
            "per-outcome positivity",
            inv.as_ref()
                .map_or_else(|e| outcome(false, e.to_string()), |i| criterion_8(i, &pos)),
        ),
        ("command line end to end", criterion_9()),
    ];

    let mut all = true;
    for (i, (name, o)) in results.iter().enumerate() {
        all &= o.pass;
        println!(
            "criterion {} [{}] {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
