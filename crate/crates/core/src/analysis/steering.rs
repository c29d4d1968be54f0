//! Steering between readouts.
//!
//! A single meter readout always satisfies `R = D_irr`. Comparing the
//! resolution of one readout with the irreversible decoherence of another
//! exposes the system-meter entanglement: `R_r > D_irr,c` cannot happen if
//! both readouts were coarse-grainings of one classical record.

use super::{cond_probs, irreversible_decoherence, resolution, ConditionalOutput, ReadoutStrategy};
use crate::error::{Error, Result};
use crate::interaction::MeasurementInteraction;
use crate::linalg::DensityMatrix;
use crate::tolerance;

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringReport {
    pub pair: (usize, usize),
    /// Resolution of the readout `r`.
    pub resolution_r: f64,
    /// Irreversible decoherence of the readout `c`.
    pub irreversible_c: f64,
    pub margin: f64,
    pub violation: bool,
}

pub fn steering_report(
    mi: &MeasurementInteraction,
    readout_r: &ReadoutStrategy,
    readout_c: &ReadoutStrategy,
    pair: (usize, usize),
) -> Result<SteeringReport> {
    steering_report_with_margin(mi, readout_r, readout_c, pair, tolerance::STEERING_MARGIN)
}

pub fn steering_report_with_margin(
    mi: &MeasurementInteraction,
    readout_r: &ReadoutStrategy,
    readout_c: &ReadoutStrategy,
    pair: (usize, usize),
    margin: f64,
) -> Result<SteeringReport> {
    check_pair(pair, mi.n())?;
    let resolution_r = resolution(&cond_probs(mi, readout_r)?).get(pair.0, pair.1);
    let irreversible_c = irreversible_decoherence(&cond_probs(mi, readout_c)?).get(pair.0, pair.1);
    Ok(SteeringReport {
        pair,
        resolution_r,
        irreversible_c,
        margin,
        violation: resolution_r - irreversible_c > margin,
    })
}

fn check_pair(pair: (usize, usize), n: usize) -> Result<()> {
    if pair.0 >= n || pair.1 >= n || pair.0 == pair.1 {
        return Err(Error::InvalidParameter(format!(
            "pair ({}, {}) is not a pair of distinct eigenstates out of {n}",
            pair.0, pair.1
        )));
    }
    Ok(())
}

/// Outcome-averaged diagonal and off-diagonal content of the conditional
/// states for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringAverages {
    /// `Σ_m p(m)·√(ρ(m)[a₁a₁]·ρ(m)[a₂a₂])`, equal to `(1 - R)·√(ρ_in[a₁a₁]·ρ_in[a₂a₂])`.
    pub avg_root_diag: f64,
    /// `Σ_m p(m)·|ρ(m)[a₁a₂]|`, equal to `(1 - D_irr)·|ρ_in[a₁a₂]|`.
    pub avg_coherence: f64,
}

/// Averages over outcomes for `pair`, checking per-outcome positivity
/// `|ρ[a₁a₂]| ≤ √(ρ[a₁a₁]·ρ[a₂a₂])` along the way.
pub fn steering_averages(
    outs: &[ConditionalOutput],
    rho_in: &DensityMatrix,
    pair: (usize, usize),
) -> Result<SteeringAverages> {
    let n = rho_in.dim();
    check_pair(pair, n)?;
    let (a1, a2) = pair;
    let mut avg_root_diag = 0.0;
    let mut avg_coherence = 0.0;
    for o in outs {
        let Some(rho) = &o.rho else { continue };
        if rho.dim() != n {
            return Err(Error::Dimension {
                context: "conditional state",
                expected: n,
                found: rho.dim(),
            });
        }
        let root_diag = (rho.entry(a1, a1).re.max(0.0) * rho.entry(a2, a2).re.max(0.0)).sqrt();
        let coherence = rho.entry(a1, a2).norm();
        let excess = coherence - root_diag;
        if excess > tolerance::VALIDITY {
            return Err(Error::PositivityViolated {
                outcome: o.outcome,
                a1,
                a2,
                excess,
            });
        }
        avg_root_diag += o.prob * root_diag;
        avg_coherence += o.prob * coherence;
    }
    Ok(SteeringAverages {
        avg_root_diag,
        avg_coherence,
    })
}

/// Largest `|ρ(m)[a₁a₂]| - √(ρ(m)[a₁a₁]·ρ(m)[a₂a₂])` over all outcomes and
/// pairs. Nonpositive for physical conditional states.
pub fn positivity_excess(outs: &[ConditionalOutput]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for rho in outs.iter().filter_map(|o| o.rho.as_ref()) {
        let n = rho.dim();
        for a1 in 0..n {
            for a2 in a1 + 1..n {
                let bound = (rho.entry(a1, a1).re.max(0.0) * rho.entry(a2, a2).re.max(0.0)).sqrt();
                worst = worst.max(rho.entry(a1, a2).norm() - bound);
            }
        }
    }
    worst
}
