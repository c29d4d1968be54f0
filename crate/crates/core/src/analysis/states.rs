//! Output and outcome-conditioned system states.

use super::ReadoutStrategy;
use crate::error::{Error, Result};
use crate::interaction::MeasurementInteraction;
use crate::linalg::{validate_density, CMatrix, DensityMatrix};
use crate::tolerance;

fn check_input(mi: &MeasurementInteraction, rho_in: &DensityMatrix) -> Result<()> {
    if rho_in.dim() != mi.n() {
        return Err(Error::Dimension {
            context: "input state",
            expected: mi.n(),
            found: rho_in.dim(),
        });
    }
    Ok(())
}

/// System state after the interaction with the meter traced out:
/// `⟨a₁|ρ_out|a₂⟩ = ⟨φ(a₂)|φ(a₁)⟩·⟨a₁|ρ_in|a₂⟩`.
///
/// The map is applied elementwise, so mixed inputs are handled the same way
/// as pure ones.
pub fn output_density(
    mi: &MeasurementInteraction,
    rho_in: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_input(mi, rho_in)?;
    let g = mi.gram();
    let out = rho_in
        .matrix()
        .zip_map(&g.matrix().transpose(), |r, g| r * g);
    validate_density(&out, tolerance::VALIDITY)
}

/// Outcome `m` of a readout together with the system state it leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalOutput {
    pub outcome: usize,
    pub prob: f64,
    /// `None` for outcomes with probability at or below
    /// [`tolerance::NULL_PROBABILITY`].
    pub rho: Option<DensityMatrix>,
}

/// Conditional system states for every outcome of `readout`:
/// `⟨a₁|ρ(m)|a₂⟩ = ⟨φ(a₂)|m⟩⟨m|φ(a₁)⟩·⟨a₁|ρ_in|a₂⟩ / p(m)`.
pub fn conditional_outputs(
    mi: &MeasurementInteraction,
    readout: &ReadoutStrategy,
    rho_in: &DensityMatrix,
) -> Result<Vec<ConditionalOutput>> {
    check_input(mi, rho_in)?;
    let amps = readout.amplitudes(mi)?;
    let rho = rho_in.matrix();
    let n = mi.n();
    amps.row_iter()
        .enumerate()
        .map(|(outcome, row)| {
            let prob = (0..n)
                .map(|a| row[a].norm_sqr() * rho[(a, a)].re)
                .sum::<f64>()
                .max(0.0);
            if prob <= tolerance::NULL_PROBABILITY {
                return Ok(ConditionalOutput {
                    outcome,
                    prob,
                    rho: None,
                });
            }
            let cond = CMatrix::from_fn(n, n, |a1, a2| {
                row[a1] * row[a2].conj() * rho[(a1, a2)] / prob
            });
            Ok(ConditionalOutput {
                outcome,
                prob,
                rho: Some(validate_density(&cond, tolerance::VALIDITY)?),
            })
        })
        .collect()
}

/// Pair matrix whose entries may be undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePairMatrix {
    n: usize,
    values: Vec<Option<f64>>,
    coherence: Vec<f64>,
}

impl StatePairMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, a1: usize, a2: usize) -> Option<f64> {
        self.values[a1 * self.n + a2]
    }

    pub fn get(&self, a1: usize, a2: usize) -> Result<f64> {
        self.entry(a1, a2).ok_or(Error::UndefinedEntry {
            a1,
            a2,
            coherence: self.coherence[a1 * self.n + a2],
        })
    }
}

/// Irreversible decoherence from conditional states,
/// `1 - Σ_m p(m)|⟨a₁|ρ(m)|a₂⟩| / |⟨a₁|ρ_in|a₂⟩|`.
///
/// Entries whose input coherence vanishes are undefined.
pub fn irreversible_decoherence_from_states(
    outs: &[ConditionalOutput],
    rho_in: &DensityMatrix,
) -> Result<StatePairMatrix> {
    let n = rho_in.dim();
    if let Some(bad) = outs
        .iter()
        .filter_map(|o| o.rho.as_ref())
        .find(|r| r.dim() != n)
    {
        return Err(Error::Dimension {
            context: "conditional state",
            expected: n,
            found: bad.dim(),
        });
    }
    let mut values = vec![None; n * n];
    let mut coherence = vec![0.0; n * n];
    for a1 in 0..n {
        for a2 in 0..n {
            let c_in = rho_in.entry(a1, a2).norm();
            coherence[a1 * n + a2] = c_in;
            if a1 == a2 {
                values[a1 * n + a2] = Some(0.0);
                continue;
            }
            if c_in <= tolerance::NULL_COHERENCE {
                continue;
            }
            let kept: f64 = outs
                .iter()
                .filter_map(|o| o.rho.as_ref().map(|r| o.prob * r.entry(a1, a2).norm()))
                .sum();
            values[a1 * n + a2] = Some(1.0 - kept / c_in);
        }
    }
    Ok(StatePairMatrix {
        n,
        values,
        coherence,
    })
}

/// `Σ_m p(m)·ρ(m)` over outcomes that occur.
pub fn average_state(outs: &[ConditionalOutput], n: usize) -> CMatrix {
    outs.iter()
        .filter_map(|o| o.rho.as_ref().map(|r| r.matrix().scale(o.prob)))
        .fold(CMatrix::zeros(n, n), |acc, m| acc + m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{cond_probs, irreversible_decoherence};
    use crate::interaction::ProductHamiltonianSpec;
    use crate::linalg::{max_abs, CVector};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn plus() -> DensityMatrix {
        DensityMatrix::pure(&CVector::from_element(
            2,
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        ))
        .unwrap()
    }

    fn basis(n: usize, k: usize) -> DensityMatrix {
        let mut v = CVector::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        DensityMatrix::pure(&v).unwrap()
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

    #[test]
    fn output_density_examples() {
        let full = MeasurementInteraction::partial_cnot(FRAC_PI_2).unwrap();
        let out = output_density(&full, &plus()).unwrap();
        assert!(max_abs(&(out.matrix() - CMatrix::identity(2, 2).scale(0.5))) < 1e-15);

        let none = MeasurementInteraction::partial_cnot(0.0).unwrap();
        let out = output_density(&none, &plus()).unwrap();
        assert!(max_abs(&(out.matrix() - plus().matrix())) < 1e-15);

        let partial = MeasurementInteraction::partial_cnot(FRAC_PI_4).unwrap();
        let out = output_density(&partial, &plus()).unwrap();
        assert_abs_diff_eq!(out.entry(0, 1).re, 0.5 * FRAC_PI_4.cos(), epsilon = 1e-15);
    }

    #[test]
    fn conditional_outputs_full_cnot() {
        let mi = MeasurementInteraction::partial_cnot(FRAC_PI_2).unwrap();
        let outs = conditional_outputs(&mi, &ReadoutStrategy::computational(2), &plus()).unwrap();
        assert_eq!(outs.len(), 2);
        for (k, o) in outs.iter().enumerate() {
            assert_abs_diff_eq!(o.prob, 0.5, epsilon = 1e-15);
            let rho = o.rho.as_ref().unwrap();
            assert!(max_abs(&(rho.matrix() - basis(2, k).matrix())) < 1e-15);
        }
    }

    #[test]
    fn conditional_outputs_eraser_keep_coherence() {
        let theta = 0.3;
        let mi = qubit_hamiltonian(theta);
        let outs = conditional_outputs(&mi, &ReadoutStrategy::computational(2), &plus()).unwrap();
        for o in &outs {
            assert_abs_diff_eq!(o.prob, 0.5, epsilon = 1e-15);
            let rho = o.rho.as_ref().unwrap();
            assert_abs_diff_eq!(rho.entry(0, 1).norm(), 0.5, epsilon = 1e-15);
            assert!(rho.trace_distance(rho).unwrap() < 1e-15);
        }
        // The two outcomes carry opposite phases e^{∓2iθ}.
        let p0 = outs[0].rho.as_ref().unwrap().entry(0, 1).arg();
        let p1 = outs[1].rho.as_ref().unwrap().entry(0, 1).arg();
        assert_abs_diff_eq!(p0, -2.0 * theta, epsilon = 1e-14);
        assert_abs_diff_eq!(p1, 2.0 * theta, epsilon = 1e-14);
        let d = irreversible_decoherence_from_states(&outs, &plus()).unwrap();
        assert_abs_diff_eq!(d.get(0, 1).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenstate_input_is_only_bayes_updated() {
        let mi = MeasurementInteraction::partial_cnot(0.7).unwrap();
        let y = ReadoutStrategy::new(
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(FRAC_1_SQRT_2, 0.0),
                    Complex64::new(0.0, -FRAC_1_SQRT_2),
                    Complex64::new(FRAC_1_SQRT_2, 0.0),
                    Complex64::new(0.0, FRAC_1_SQRT_2),
                ],
            ),
            "Y",
        )
        .unwrap();
        for k in 0..2 {
            let rho = basis(2, k);
            for o in conditional_outputs(&mi, &y, &rho).unwrap() {
                if let Some(r) = o.rho {
                    assert!(max_abs(&(r.matrix() - rho.matrix())) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_probability_outcomes_have_no_state() {
        let mi = MeasurementInteraction::partial_cnot(FRAC_PI_4).unwrap();
        let outs =
            conditional_outputs(&mi, &ReadoutStrategy::computational(2), &basis(2, 0)).unwrap();
        assert!(outs[0].rho.is_some());
        assert!(outs[1].rho.is_none());
        assert_eq!(outs[1].prob, 0.0);
    }

    #[test]
    fn state_based_irreversible_examples() {
        let full = MeasurementInteraction::partial_cnot(FRAC_PI_2).unwrap();
        let outs = conditional_outputs(&full, &ReadoutStrategy::computational(2), &plus()).unwrap();
        let d = irreversible_decoherence_from_states(&outs, &plus()).unwrap();
        assert_abs_diff_eq!(d.get(0, 1).unwrap(), 1.0, epsilon = 1e-15);

        let diag = DensityMatrix::maximally_mixed(2);
        let outs = conditional_outputs(&full, &ReadoutStrategy::computational(2), &diag).unwrap();
        let d = irreversible_decoherence_from_states(&outs, &diag).unwrap();
        assert!(matches!(d.get(0, 1), Err(Error::UndefinedEntry { .. })));
        assert!(d.entry(1, 0).is_none());
    }

    #[test]
    fn state_path_matches_table_path() {
        let mi = MeasurementInteraction::partial_cnot(0.9).unwrap();
        let r = ReadoutStrategy::computational(2);
        let outs = conditional_outputs(&mi, &r, &plus()).unwrap();
        let from_states = irreversible_decoherence_from_states(&outs, &plus()).unwrap();
        let from_table = irreversible_decoherence(&cond_probs(&mi, &r).unwrap());
        assert_abs_diff_eq!(
            from_states.get(0, 1).unwrap(),
            from_table.get(0, 1),
            epsilon = 1e-12
        );
        let avg = average_state(&outs, 2);
        let out = output_density(&mi, &plus()).unwrap();
        assert!(max_abs(&(avg - out.matrix())) < 1e-15);
    }

    #[test]
    fn input_dimension_checked() {
        let mi = MeasurementInteraction::partial_cnot(0.2).unwrap();
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            output_density(&mi, &rho),
            Err(Error::Dimension { .. })
        ));
    }
}
