//! Randomized cross-checks of the analysis invariants.
//!
//! Randomness comes from ChaCha8: trial `t` of a suite seeded with `s` uses
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `t`, so every trial can
//! be replayed on its own and the reported maxima do not depend on thread
//! scheduling.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    average_state, cond_probs, conditional_outputs, decoherence,
    irreversible_decoherence_from_states, output_density, positivity_excess, resolution,
    ReadoutStrategy,
};
use crate::error::{Error, Result};
use crate::interaction::MeasurementInteraction;
use crate::linalg::{max_abs, CMatrix, CVector, DensityMatrix};
use crate::tolerance;

pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64(seed), stream = trial index";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
/// Fields missing from a serialized config take their default values.
#[serde(default, deny_unknown_fields)]
pub struct RandomSuiteConfig {
    pub seed: u64,
    pub trials: u64,
    /// Inclusive range of the number of eigenstates.
    pub n_range: (usize, usize),
    /// Inclusive range of the meter dimension.
    pub d_range: (usize, usize),
    /// Haar-random readouts evaluated per interaction.
    pub haar_samples: usize,
    /// Added to every `R - D` before comparison. Only for exercising the
    /// failure path.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub fault_bias: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl Default for RandomSuiteConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            trials: 1000,
            n_range: (2, 4),
            d_range: (2, 5),
            haar_samples: 10,
            fault_bias: 0.0,
        }
    }
}

impl RandomSuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.n_range.0 < 2 || self.n_range.0 > self.n_range.1 {
            return Err(Error::InvalidParameter(format!(
                "n_range {:?} must be nonempty with n >= 2",
                self.n_range
            )));
        }
        if self.d_range.0 < 1 || self.d_range.0 > self.d_range.1 {
            return Err(Error::InvalidParameter(format!(
                "d_range {:?} must be nonempty with d >= 1",
                self.d_range
            )));
        }
        if self.haar_samples == 0 {
            return Err(Error::InvalidParameter("haar_samples must be >= 1".into()));
        }
        Ok(())
    }

    pub fn rng_for(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }

    /// Interaction sizes for one trial, drawn from the trial's generator.
    pub fn draw_sizes(&self, rng: &mut ChaCha8Rng) -> (usize, usize) {
        let n = rng.random_range(self.n_range.0..=self.n_range.1);
        let d = rng.random_range(self.d_range.0..=self.d_range.1);
        (n, d)
    }
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector in `d` dimensions.
pub fn random_state(rng: &mut impl Rng, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| gaussian(rng));
    let norm = v.norm();
    v.unscale(norm)
}

/// `n` independent Haar-random meter states of dimension `d`, labelled
/// `0..n`.
pub fn random_interaction(
    rng: &mut impl Rng,
    n: usize,
    d: usize,
) -> Result<MeasurementInteraction> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "meter dimension must be >= 1".into(),
        ));
    }
    let states = (0..n).map(|_| random_state(rng, d)).collect();
    MeasurementInteraction::from_states((0..n).map(|a| a as f64).collect(), states)
}

/// Haar-random `d × d` unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    let z = CMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let col = q.column(k) * phase;
        q.set_column(k, &col);
    }
    q
}

/// Readout in the basis given by the columns of a Haar-random unitary.
pub fn haar_readout(rng: &mut impl Rng, d: usize) -> ReadoutStrategy {
    ReadoutStrategy::new(haar_unitary(rng, d).adjoint(), "haar").expect("Haar unitary is unitary")
}

/// Random mixed state `V·diag(p)·V†` with Haar `V` and `p` uniform on the
/// simplex.
pub fn random_mixed_state(rng: &mut impl Rng, n: usize) -> DensityMatrix {
    let v = haar_unitary(rng, n);
    let weights: Vec<f64> = (0..n)
        .map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    let p = DVector::from_iterator(n, weights.iter().map(|w| Complex64::new(w / total, 0.0)));
    let m = &v * CMatrix::from_diagonal(&p) * v.adjoint();
    crate::linalg::validate_density(&m, tolerance::VALIDITY).expect("constructed state is valid")
}

/// Smallest Bhattacharyya coefficient for `pair` over `samples` Haar
/// readouts. Never below `|⟨φ(a₁)|φ(a₂)⟩|`.
pub fn bhattacharyya_supremum(
    mi: &MeasurementInteraction,
    pair: (usize, usize),
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let d = mi.meter_dim();
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let p = cond_probs(mi, &haar_readout(rng, d))?;
        best = best.min(p.bhattacharyya(pair.0, pair.1));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub config: RandomSuiteConfig,
    pub rng: String,
    pub trials: u64,
    pub readouts_evaluated: u64,
    /// Largest `R - D` over all trials, readouts and pairs.
    pub max_excess: f64,
    pub worst_trial: u64,
    pub violations: u64,
    pub threshold: f64,
    pub pass: bool,
}

impl BoundReport {
    pub fn into_result(self) -> Result<BoundReport> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::BoundViolated {
                excess: self.max_excess,
                seed: self.config.seed,
                trial: self.worst_trial,
            })
        }
    }
}

fn bound_trial(cfg: &RandomSuiteConfig, trial: u64) -> Result<f64> {
    let mut rng = cfg.rng_for(trial);
    let (n, d) = cfg.draw_sizes(&mut rng);
    let mi = random_interaction(&mut rng, n, d)?;
    let dec = decoherence(&mi.gram());
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cfg.haar_samples {
        let r = resolution(&cond_probs(&mi, &haar_readout(&mut rng, d))?);
        let excess = (r.matrix() - dec.matrix()).max() + cfg.fault_bias;
        worst = worst.max(excess);
    }
    Ok(worst)
}

/// Checks `R ≤ D` on random interactions and Haar readouts, returning the
/// report whether or not it passes.
pub fn bound_sweep(cfg: &RandomSuiteConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let per_trial: Vec<(u64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| bound_trial(cfg, t).map(|e| (t, e)))
        .collect::<Result<_>>()?;
    let threshold = tolerance::VALIDITY;
    let (worst_trial, max_excess) = per_trial.iter().copied().fold(
        (0, f64::NEG_INFINITY),
        |acc, x| if x.1 > acc.1 { x } else { acc },
    );
    let violations = per_trial.iter().filter(|(_, e)| *e > threshold).count() as u64;
    Ok(BoundReport {
        config: cfg.clone(),
        rng: RNG_ALGORITHM.into(),
        trials: cfg.trials,
        readouts_evaluated: cfg.trials * cfg.haar_samples as u64,
        max_excess,
        worst_trial,
        violations,
        threshold,
        pass: violations == 0,
    })
}

/// [`bound_sweep`] that turns a failing report into [`Error::BoundViolated`].
pub fn sweep_bound_check(cfg: &RandomSuiteConfig) -> Result<BoundReport> {
    bound_sweep(cfg)?.into_result()
}

/// Worst deviations seen by [`invariant_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub trials: u64,
    /// `|D_irr(states) - R(table)|`.
    pub max_tradeoff_gap: f64,
    /// `|Σ_m p(m)ρ(m) - ρ_out|` elementwise, pure and mixed inputs.
    pub max_reversible_gap: f64,
    /// `|ρ(m)[a₁a₂]| - √(ρ(m)[a₁a₁]ρ(m)[a₂a₂])`.
    pub max_positivity_excess: f64,
    /// `|diag ρ_out - diag ρ_in|`.
    pub max_diagonal_shift: f64,
    pub pass: bool,
}

pub const TRADEOFF_TOL: f64 = 1e-9;
pub const REVERSIBLE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default)]
struct TrialGaps {
    tradeoff: f64,
    reversible: f64,
    positivity: f64,
    diagonal: f64,
}

impl TrialGaps {
    fn merge(self, o: Self) -> Self {
        Self {
            tradeoff: self.tradeoff.max(o.tradeoff),
            reversible: self.reversible.max(o.reversible),
            positivity: self.positivity.max(o.positivity),
            diagonal: self.diagonal.max(o.diagonal),
        }
    }
}

fn invariant_trial(cfg: &RandomSuiteConfig, trial: u64) -> Result<TrialGaps> {
    let mut rng = cfg.rng_for(trial);
    let (n, d) = cfg.draw_sizes(&mut rng);
    let mi = random_interaction(&mut rng, n, d)?;
    let inputs = [
        DensityMatrix::pure(&random_state(&mut rng, n))?,
        random_mixed_state(&mut rng, n),
    ];
    let mut gaps = TrialGaps {
        positivity: f64::NEG_INFINITY,
        ..Default::default()
    };
    for rho in &inputs {
        let out = output_density(&mi, rho)?;
        for a in 0..n {
            gaps.diagonal = gaps
                .diagonal
                .max((out.entry(a, a) - rho.entry(a, a)).norm());
        }
        for _ in 0..cfg.haar_samples {
            let readout = haar_readout(&mut rng, d);
            let outs = conditional_outputs(&mi, &readout, rho)?;
            gaps.reversible = gaps
                .reversible
                .max(max_abs(&(average_state(&outs, n) - out.matrix())));
            gaps.positivity = gaps.positivity.max(positivity_excess(&outs));
            let r = resolution(&cond_probs(&mi, &readout)?);
            let from_states = irreversible_decoherence_from_states(&outs, rho)?;
            for a1 in 0..n {
                for a2 in 0..n {
                    if let Some(v) = from_states.entry(a1, a2) {
                        gaps.tradeoff = gaps.tradeoff.max((v - r.get(a1, a2)).abs());
                    }
                }
            }
        }
    }
    Ok(gaps)
}

/// Trade-off equality, reversible sum, per-outcome positivity and diagonal
/// preservation on random interactions, inputs and readouts.
pub fn invariant_suite(cfg: &RandomSuiteConfig) -> Result<InvariantReport> {
    cfg.validate()?;
    let gaps = (0..cfg.trials)
        .into_par_iter()
        .map(|t| invariant_trial(cfg, t))
        .try_reduce(
            || TrialGaps {
                positivity: f64::NEG_INFINITY,
                ..Default::default()
            },
            |a, b| Ok(a.merge(b)),
        )?;
    Ok(InvariantReport {
        trials: cfg.trials,
        max_tradeoff_gap: gaps.tradeoff,
        max_reversible_gap: gaps.reversible,
        max_positivity_excess: gaps.positivity,
        max_diagonal_shift: gaps.diagonal,
        pass: gaps.tradeoff <= TRADEOFF_TOL
            && gaps.reversible <= REVERSIBLE_TOL
            && gaps.positivity <= POSITIVITY_TOL
            && gaps.diagonal <= DIAGONAL_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::isometry_deviation;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn random_interaction_is_normalized_and_reproducible() {
        let cfg = RandomSuiteConfig::default();
        let a = random_interaction(&mut cfg.rng_for(0), 2, 2).unwrap();
        let b = random_interaction(&mut cfg.rng_for(0), 2, 2).unwrap();
        assert_eq!(a, b);
        for phi in a.states() {
            assert!((phi.norm() - 1.0).abs() < 1e-12);
        }
        let c = random_interaction(&mut cfg.rng_for(1), 2, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn one_dimensional_meter_gives_unit_overlaps() {
        let mi = random_interaction(&mut RandomSuiteConfig::default().rng_for(3), 3, 1).unwrap();
        assert!(mi
            .gram()
            .matrix()
            .iter()
            .all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn haar_readout_properties() {
        let cfg = RandomSuiteConfig::default();
        let r = haar_readout(&mut cfg.rng_for(0), 1);
        assert_eq!(r.outcomes(), 1);
        let mi = random_interaction(&mut cfg.rng_for(1), 3, 1).unwrap();
        let p = cond_probs(&mi, &r).unwrap();
        assert!(p.matrix().iter().all(|x| (x - 1.0).abs() < 1e-12));
        assert!(resolution(&p).matrix().iter().all(|x| *x == 0.0));

        for d in 1..6 {
            let u = haar_unitary(&mut cfg.rng_for(d as u64), d);
            assert!(isometry_deviation(&u) < 1e-10);
        }
        assert_eq!(
            haar_readout(&mut cfg.rng_for(9), 4),
            haar_readout(&mut cfg.rng_for(9), 4)
        );
    }

    #[test]
    fn small_bound_sweep_passes_and_is_reproducible() {
        let cfg = RandomSuiteConfig {
            trials: 50,
            ..Default::default()
        };
        let a = sweep_bound_check(&cfg).unwrap();
        let b = sweep_bound_check(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.max_excess <= 1e-10);
    }

    #[test]
    fn one_dimensional_and_trivial_sweeps() {
        let cfg = RandomSuiteConfig {
            trials: 20,
            d_range: (1, 1),
            ..Default::default()
        };
        let rep = sweep_bound_check(&cfg).unwrap();
        assert!(rep.max_excess <= 0.0);
    }

    #[test]
    fn fault_bias_is_reported_as_violation() {
        let cfg = RandomSuiteConfig {
            trials: 5,
            fault_bias: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            sweep_bound_check(&cfg),
            Err(Error::BoundViolated { .. })
        ));
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            RandomSuiteConfig {
                trials: 0,
                ..Default::default()
            },
            RandomSuiteConfig {
                n_range: (1, 3),
                ..Default::default()
            },
            RandomSuiteConfig {
                d_range: (4, 3),
                ..Default::default()
            },
        ] {
            assert!(matches!(bound_sweep(&cfg), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn bhattacharyya_examples() {
        let cfg = RandomSuiteConfig::default();
        let mi = MeasurementInteraction::partial_cnot(FRAC_PI_4).unwrap();
        let bc = bhattacharyya_supremum(&mi, (0, 1), 500, &mut cfg.rng_for(0)).unwrap();
        assert!(bc >= FRAC_PI_4.cos() - 1e-10);

        let phi = random_state(&mut cfg.rng_for(1), 3);
        let same =
            MeasurementInteraction::from_states(vec![0.0, 1.0], vec![phi.clone(), phi]).unwrap();
        let bc = bhattacharyya_supremum(&same, (0, 1), 50, &mut cfg.rng_for(2)).unwrap();
        assert!((bc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_invariant_suite_passes() {
        let cfg = RandomSuiteConfig {
            trials: 40,
            ..Default::default()
        };
        let rep = invariant_suite(&cfg).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
