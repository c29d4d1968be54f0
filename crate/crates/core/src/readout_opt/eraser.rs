use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{cond_probs, conditional_outputs, ReadoutStrategy};
use crate::error::{Error, Result};
use crate::interaction::{Construction, MeasurementInteraction};
use crate::linalg::{hermitian_eig, validate_density, CMatrix, DensityMatrix, UnitaryMatrix};
use crate::tolerance;

/// Fixed seed for the generic weights used in joint diagonalization.
const JOINT_DIAG_SEED: u64 = 0x6572_6173_6572;
/// Eigenvalues closer than this are treated as one degenerate block.
const DEGENERACY_GAP: f64 = 1e-8;

/// Readout whose outcome statistics do not depend on the eigenstate.
///
/// For Hamiltonian constructions the meter eigenbasis of `B̂` is conserved
/// and is returned directly. For commuting conditional unitaries the common
/// eigenbasis is found by diagonalizing a generic Hermitian combination.
pub fn eraser_readout(mi: &MeasurementInteraction) -> Result<ReadoutStrategy> {
    let readout = match mi.construction() {
        Construction::ProductHamiltonian(_) | Construction::TwoPartMeter(_) => {
            ReadoutStrategy::computational(mi.meter_dim())
        }
        Construction::ConditionalUnitaries(us) => {
            for (i, u) in us.iter().enumerate() {
                for v in &us[i + 1..] {
                    if !u.commutes_with(v, tolerance::VALIDITY) {
                        return Err(Error::NoEraserFound(
                            "conditional unitaries do not commute".into(),
                        ));
                    }
                }
            }
            let basis = joint_eigenbasis(us)?;
            ReadoutStrategy::new(basis.adjoint(), "eraser")?
        }
        Construction::States => return Err(Error::NoEraserFound(
            "interaction was given by meter states only; no conserved meter observable is known"
                .into(),
        )),
    };
    let spread = cond_probs(mi, &readout)?.label_dependence();
    if spread > tolerance::VALIDITY {
        return Err(Error::NoEraserFound(format!(
            "candidate basis leaves P(m|a) label dependent by {spread:e}"
        )));
    }
    Ok(readout.with_name("eraser"))
}

/// Hermitian combination `Σ_a w_a·(U+U†)/2 + w'_a·(U-U†)/2i`.
fn hermitian_mix(us: &[UnitaryMatrix], rng: &mut ChaCha8Rng) -> CMatrix {
    let d = us[0].dim();
    let minus_half_i = Complex64::new(0.0, -0.5);
    us.iter().fold(CMatrix::zeros(d, d), |acc, u| {
        let m = u.matrix();
        let re_part = (m + m.adjoint()).scale(0.5);
        let im_part = (m - m.adjoint()) * minus_half_i;
        acc + re_part.scale(rng.random::<f64>() + 0.5) + im_part.scale(rng.random::<f64>() + 0.5)
    })
}

/// Columns form a common eigenbasis of commuting unitaries.
fn joint_eigenbasis(us: &[UnitaryMatrix]) -> Result<CMatrix> {
    let d = us[0].dim();
    let mut rng = ChaCha8Rng::seed_from_u64(JOINT_DIAG_SEED);
    let eig = hermitian_eig(&hermitian_mix(us, &mut rng))?;
    let mut basis = eig.eigenvectors;

    // Second pass inside nearly degenerate blocks with fresh weights.
    let second = hermitian_mix(us, &mut rng);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eig.eigenvalues[end] - eig.eigenvalues[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            let block = basis.columns(start, end - start).into_owned();
            let reduced = block.adjoint() * &second * &block;
            let inner = hermitian_eig(&((&reduced + reduced.adjoint()).scale(0.5)))?;
            basis
                .columns_mut(start, end - start)
                .copy_from(&(block * inner.eigenvectors));
        }
        start = end;
    }

    for u in us {
        let rotated = basis.adjoint() * u.matrix() * &basis;
        let off = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| rotated[(i, j)].norm())
            .fold(0.0, f64::max);
        if off > 1e-8 {
            return Err(Error::NoEraserFound(format!(
                "joint diagonalization left off-diagonal weight {off:e}"
            )));
        }
    }
    Ok(basis)
}

/// Outcome-conditioned diagonal unitaries on the system that undo the phase
/// each eraser outcome imprints.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackCorrection {
    /// `phases[m][a] = arg⟨m|W|φ(a)⟩`; the correction for outcome `m` is
    /// `diag(exp(-i·phases[m][a]))`.
    phases: Vec<Vec<f64>>,
}

impl FeedbackCorrection {
    pub fn outcomes(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self, outcome: usize) -> &[f64] {
        &self.phases[outcome]
    }

    pub fn unitary(&self, outcome: usize) -> CMatrix {
        let diag = DVector::from_iterator(
            self.phases[outcome].len(),
            self.phases[outcome]
                .iter()
                .map(|&t| Complex64::from_polar(1.0, -t)),
        );
        CMatrix::from_diagonal(&diag)
    }

    /// `U(m)·ρ·U(m)†`.
    pub fn apply(&self, outcome: usize, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let u = self.unitary(outcome);
        if u.nrows() != rho.dim() {
            return Err(Error::Dimension {
                context: "feedback correction",
                expected: u.nrows(),
                found: rho.dim(),
            });
        }
        validate_density(&(&u * rho.matrix() * u.adjoint()), tolerance::VALIDITY)
    }
}

/// Phase feedback for an eraser readout.
pub fn feedback_correction(
    mi: &MeasurementInteraction,
    readout: &ReadoutStrategy,
) -> Result<FeedbackCorrection> {
    let spread = cond_probs(mi, readout)?.label_dependence();
    if spread > tolerance::VALIDITY {
        return Err(Error::NotEraser { spread });
    }
    let amps = readout.amplitudes(mi)?;
    let phases = amps
        .row_iter()
        .map(|row| {
            row.iter()
                .map(|z| {
                    if z.norm() > tolerance::NULL_PROBABILITY {
                        z.arg()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(FeedbackCorrection { phases })
}

/// Measure the eraser readout, then apply the matching correction: returns
/// `Σ_m p(m)·U(m)ρ(m)U(m)†`.
pub fn feedback_channel(
    mi: &MeasurementInteraction,
    readout: &ReadoutStrategy,
    correction: &FeedbackCorrection,
    rho_in: &DensityMatrix,
) -> Result<DensityMatrix> {
    let outs = conditional_outputs(mi, readout, rho_in)?;
    let n = rho_in.dim();
    let mut total = CMatrix::zeros(n, n);
    for o in &outs {
        if let Some(rho) = &o.rho {
            total += correction.apply(o.outcome, rho)?.matrix().scale(o.prob);
        }
    }
    validate_density(&total, tolerance::VALIDITY)
}
