//! Readouts at the two ends of the resolution/coherence trade-off.
//!
//! * [`optimal_readout`] reaches `R = D` for every pair. It needs a
//!   representation of the meter states with real nonnegative components,
//!   i.e. a nonnegative factorization of the Gram matrix ([`cp_factorize`]).
//! * [`eraser_readout`] measures a conserved meter observable, so `R = 0`
//!   and the phase record lets [`feedback_correction`] restore the input.

mod eraser;
mod factorize;

pub use eraser::{eraser_readout, feedback_channel, feedback_correction, FeedbackCorrection};
pub use factorize::{cp_factorize, factorization_residual, FactorizeOptions, NonnegFactorization};

use crate::analysis::ReadoutStrategy;
use crate::error::{Error, Result};
use crate::interaction::MeasurementInteraction;
use num_complex::Complex64;

use crate::linalg::{hermitian_eig, orthonormal_complement, real_to_complex, CMatrix, CVector};

/// Largest Frobenius mismatch `‖WΦ - F‖` accepted from the isometry fit.
const MAX_MISMATCH: f64 = 1e-6;

/// Isometry `W` from the meter into `max(M, d)` outcomes with
/// `⟨m|W|φ(a)⟩ = F[m][a]`.
///
/// With `G = Σ_k λ_k v_k v_k†`, the vectors `Φv_k/√λ_k` are an orthonormal
/// basis of the span of the meter states and `Fv_k/√λ_k` their required
/// images. Directions with `λ_k` at the level of the factorization residual
/// cannot be resolved and are handled with the orthogonal complement, which
/// is mapped isometrically onto unused outcome directions.
pub fn optimal_readout(
    mi: &MeasurementInteraction,
    fact: &NonnegFactorization,
) -> Result<ReadoutStrategy> {
    if fact.f.ncols() != mi.n() {
        return Err(Error::Dimension {
            context: "factorization columns",
            expected: mi.n(),
            found: fact.f.ncols(),
        });
    }
    let d = mi.meter_dim();
    let outcomes = fact.outcomes().max(d);
    let mut target = CMatrix::zeros(outcomes, mi.n());
    target
        .rows_mut(0, fact.outcomes())
        .copy_from(&real_to_complex(&fact.f));
    let phi = mi.state_matrix();

    let eig = hermitian_eig(mi.gram().matrix())?;
    let cutoff = fact.residual.max(MIN_EIGENVALUE);
    let kept: Vec<usize> = (0..mi.n())
        .filter(|&k| eig.eigenvalues[k] > cutoff)
        .collect();
    let scaled = |m: &CMatrix| {
        let cols: Vec<CVector> = kept
            .iter()
            .map(|&k| (m * eig.eigenvectors.column(k)).unscale(eig.eigenvalues[k].sqrt()))
            .collect();
        // A second pass removes what rounding leaves from the first.
        orthonormalize(&orthonormalize(&CMatrix::from_columns(&cols))?)
    };

    let mut w = CMatrix::zeros(outcomes, d);
    if !kept.is_empty() {
        let span = scaled(&phi)?;
        let image = scaled(&target)?;
        w += &image * span.adjoint();
        let rest = orthonormal_complement(&span);
        let free = orthonormal_complement(&image);
        w += free.columns(0, rest.ncols()) * rest.adjoint();
    } else {
        w.rows_mut(0, d).fill_with_identity();
    }

    let mismatch = (&w * &phi - &target).norm();
    if mismatch > MAX_MISMATCH {
        return Err(Error::InconsistentFactorization { mismatch });
    }
    ReadoutStrategy::new(w, "optimal")
}

/// Gram eigenvalues below this are too close to rounding noise to fix a
/// direction; dropping them costs at most `√MIN_EIGENVALUE` in `‖WΦ - F‖`.
const MIN_EIGENVALUE: f64 = 1e-13;

/// `m (m†m)^{-1/2}`: the nearest matrix with orthonormal columns.
fn orthonormalize(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(&(m.adjoint() * m))?;
    let inv_sqrt = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&x| Complex64::new(1.0 / x.max(f64::MIN_POSITIVE).sqrt(), 0.0)),
    );
    Ok(m * &eig.eigenvectors * CMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{cond_probs, decoherence, resolution};
    use crate::interaction::{ProductHamiltonianSpec, TwoPartMeterSpec};
    use crate::linalg::CVector;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};

    fn assert_r_equals_d(mi: &MeasurementInteraction) {
        let fact = cp_factorize(&mi.gram(), &FactorizeOptions::default()).unwrap();
        let w = optimal_readout(mi, &fact).unwrap();
        let r = resolution(&cond_probs(mi, &w).unwrap());
        let d = decoherence(&mi.gram());
        assert!(r.max_deviation(&d) <= 1e-6, "R = {r:?}, D = {d:?}");
    }

    #[test]
    fn qubit_hamiltonian_reaches_limit() {
        let mi = MeasurementInteraction::from_product_hamiltonian(&ProductHamiltonianSpec {
            a_values: vec![1.0, -1.0],
            b_values: vec![1.0, -1.0],
            initial_meter: CVector::from_element(2, Complex64::new(FRAC_1_SQRT_2, 0.0)),
            effective_time: FRAC_PI_8,
        })
        .unwrap();
        let fact = cp_factorize(&mi.gram(), &FactorizeOptions::default()).unwrap();
        let w = optimal_readout(&mi, &fact).unwrap();
        let r = resolution(&cond_probs(&mi, &w).unwrap());
        assert_abs_diff_eq!(r.get(0, 1), 1.0 - FRAC_PI_4.cos(), epsilon = 1e-6);
    }

    #[test]
    fn partial_cnot_and_trivial_reach_limit() {
        assert_r_equals_d(&MeasurementInteraction::partial_cnot(0.6).unwrap());
        assert_r_equals_d(&MeasurementInteraction::partial_cnot(0.0).unwrap());
        assert_r_equals_d(
            &MeasurementInteraction::partial_cnot(std::f64::consts::FRAC_PI_2).unwrap(),
        );
    }

    #[test]
    fn two_part_meter_reaches_limit() {
        let mi = MeasurementInteraction::from_two_part_meter(&TwoPartMeterSpec {
            a_values: vec![0.0, 0.7, 1.5, 2.0],
            v_values: vec![1.0, -1.0, 0.3],
            dist: vec![0.5, 0.3, 0.2],
            effective_time: 0.8,
        })
        .unwrap();
        assert_r_equals_d(&mi);
    }

    #[test]
    fn mismatched_factorization_is_rejected() {
        let mi = MeasurementInteraction::partial_cnot(0.6).unwrap();
        let bogus = NonnegFactorization {
            f: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            residual: 0.0,
            seed: 0,
            restart: 0,
            iterations: 0,
        };
        assert!(matches!(
            optimal_readout(&mi, &bogus),
            Err(Error::InconsistentFactorization { .. })
        ));
    }
}
