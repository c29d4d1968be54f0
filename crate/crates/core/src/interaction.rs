//! Stage-I measurement interactions.
//!
//! An interaction is fully described by the conditional meter states
//! `|φ(a)⟩ = U_M(a)|Φ₀⟩`, one per eigenstate `|a⟩` of the target observable.
//! Eigenstates are indexed by position; the numeric labels are carried along
//! for reporting and for the Hamiltonian constructions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, check_unit, CMatrix, CVector, UnitaryMatrix};
use crate::tolerance;

/// Meter Hamiltonian coupling `H = Â ⊗ B̂`, with `|Φ₀⟩` given in the
/// eigenbasis of `B̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductHamiltonianSpec {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub initial_meter: CVector,
    /// `t/ħ`; the phase picked up by `|a⟩|b⟩` is `A_a·B_b·effective_time`.
    pub effective_time: f64,
}

impl ProductHamiltonianSpec {
    pub fn validate(&self) -> Result<()> {
        if self.b_values.len() != self.initial_meter.len() {
            return Err(Error::Dimension {
                context: "product Hamiltonian initial meter",
                expected: self.b_values.len(),
                found: self.initial_meter.len(),
            });
        }
        check_unit(&self.initial_meter)?;
        check_finite(&self.a_values, "a_values")?;
        check_finite(&self.b_values, "b_values")?;
        check_finite(&[self.effective_time], "effective_time")
    }
}

/// Meter split into two identical parts coupled with opposite signs,
/// `B̂ = V̂_P1 - V̂_P2`, both parts prepared with the same distribution over
/// the eigenvalues `V_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPartMeterSpec {
    pub a_values: Vec<f64>,
    pub v_values: Vec<f64>,
    /// `|⟨v|Φ_P1⟩|² = |⟨v|Φ_P2⟩|²`.
    pub dist: Vec<f64>,
    pub effective_time: f64,
}

impl TwoPartMeterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.v_values.len() != self.dist.len() {
            return Err(Error::Dimension {
                context: "two-part meter distribution",
                expected: self.v_values.len(),
                found: self.dist.len(),
            });
        }
        if self.dist.is_empty() {
            return Err(Error::InvalidParameter(
                "two-part meter needs at least one v value".into(),
            ));
        }
        if let Some(p) = self.dist.iter().find(|p| p.is_nan() || **p < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "distribution entry {p} is negative"
            )));
        }
        let total: f64 = self.dist.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        check_finite(&self.a_values, "a_values")?;
        check_finite(&self.v_values, "v_values")?;
        check_finite(&[self.effective_time], "effective_time")
    }
}

fn check_finite(xs: &[f64], name: &str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

/// How an interaction was built. Readout synthesis uses this to find
/// conserved meter observables.
#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    States,
    ConditionalUnitaries(Vec<UnitaryMatrix>),
    ProductHamiltonian(ProductHamiltonianSpec),
    TwoPartMeter(TwoPartMeterSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementInteraction {
    labels: Vec<f64>,
    states: Vec<CVector>,
    construction: Construction,
}

impl MeasurementInteraction {
    /// Interaction given directly by its conditional meter states.
    pub fn from_states(labels: Vec<f64>, states: Vec<CVector>) -> Result<Self> {
        Self::build(labels, states, Construction::States)
    }

    fn build(labels: Vec<f64>, states: Vec<CVector>, construction: Construction) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "an interaction needs at least 2 eigenstates, got {}",
                labels.len()
            )));
        }
        if states.len() != labels.len() {
            return Err(Error::Dimension {
                context: "conditional meter states",
                expected: labels.len(),
                found: states.len(),
            });
        }
        check_finite(&labels, "eigenvalue labels")?;
        let d = states[0].len();
        for phi in &states {
            if phi.len() != d {
                return Err(Error::Dimension {
                    context: "conditional meter state",
                    expected: d,
                    found: phi.len(),
                });
            }
            check_unit(phi)?;
        }
        Ok(Self {
            labels,
            states,
            construction,
        })
    }

    /// `|φ(aᵢ)⟩ = U_M(aᵢ)|Φ₀⟩`.
    pub fn from_conditional_unitaries(
        unitaries: Vec<UnitaryMatrix>,
        initial_meter: &CVector,
        labels: Vec<f64>,
    ) -> Result<Self> {
        if unitaries.len() != labels.len() {
            return Err(Error::Dimension {
                context: "conditional unitaries",
                expected: labels.len(),
                found: unitaries.len(),
            });
        }
        check_unit(initial_meter)?;
        for u in &unitaries {
            if u.dim() != initial_meter.len() {
                return Err(Error::Dimension {
                    context: "conditional unitary",
                    expected: initial_meter.len(),
                    found: u.dim(),
                });
            }
        }
        let states = unitaries.iter().map(|u| u.apply(initial_meter)).collect();
        Self::build(
            labels,
            states,
            Construction::ConditionalUnitaries(unitaries),
        )
    }

    /// `φ(a)[b] = exp(-i·A_a·B_b·t)·⟨b|Φ₀⟩`.
    pub fn from_product_hamiltonian(spec: &ProductHamiltonianSpec) -> Result<Self> {
        spec.validate()?;
        let states = spec
            .a_values
            .iter()
            .map(|&a| {
                CVector::from_iterator(
                    spec.b_values.len(),
                    spec.b_values
                        .iter()
                        .zip(spec.initial_meter.iter())
                        .map(|(&b, &amp)| {
                            Complex64::from_polar(1.0, -a * b * spec.effective_time) * amp
                        }),
                )
            })
            .collect();
        Self::build(
            spec.a_values.clone(),
            states,
            Construction::ProductHamiltonian(spec.clone()),
        )
    }

    /// `|φ(a)⟩ = |φ_P1(a)⟩ ⊗ |φ_P2(a)⟩` with opposite-sign phases on the
    /// two parts. Meter index is `v1·k + v2` for `k` eigenvalues.
    pub fn from_two_part_meter(spec: &TwoPartMeterSpec) -> Result<Self> {
        spec.validate()?;
        let k = spec.v_values.len();
        let states = spec
            .a_values
            .iter()
            .map(|&a| {
                let part = |sign: f64| -> Vec<Complex64> {
                    spec.v_values
                        .iter()
                        .zip(&spec.dist)
                        .map(|(&v, &p)| {
                            Complex64::from_polar(p.sqrt(), sign * a * v * spec.effective_time)
                        })
                        .collect()
                };
                let p1 = part(-1.0);
                let p2 = part(1.0);
                CVector::from_iterator(k * k, p1.iter().flat_map(|x| p2.iter().map(move |y| x * y)))
            })
            .collect();
        Self::build(
            spec.a_values.clone(),
            states,
            Construction::TwoPartMeter(spec.clone()),
        )
    }

    /// Qubit meter with `U(0) = I` and `U(1)` a rotation by `2θ` about the
    /// meter Y axis, starting from `|0⟩`. Gives `φ(1) = (cos θ, sin θ)` and
    /// overlap `cos θ`; `θ = π/2` is a full CNOT.
    pub fn partial_cnot(theta: f64) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        let ry = CMatrix::from_row_slice(2, 2, &[c.into(), (-s).into(), s.into(), c.into()]);
        let initial = CVector::from_vec(vec![linalg::ONE, linalg::ZERO]);
        Self::from_conditional_unitaries(
            vec![UnitaryMatrix::identity(2), UnitaryMatrix::new(ry)?],
            &initial,
            vec![0.0, 1.0],
        )
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn meter_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    /// True when two eigenstates share the same numeric label. Such
    /// eigenstates are still treated as distinct branches.
    pub fn is_degenerate(&self) -> bool {
        self.labels
            .iter()
            .enumerate()
            .any(|(i, a)| self.labels[i + 1..].contains(a))
    }

    /// Meter states as the columns of a `d × n` matrix.
    pub fn state_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.states)
    }

    pub fn gram(&self) -> GramMatrix {
        let phi = self.state_matrix();
        GramMatrix {
            g: phi.adjoint() * phi,
        }
    }

    /// Pairs `(a1, a2)` with `a1 < a2`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }
}

pub fn gram(mi: &MeasurementInteraction) -> GramMatrix {
    mi.gram()
}

/// Matrix of meter-state overlaps `g[i][j] = ⟨φ(aᵢ)|φ(aⱼ)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    g: CMatrix,
}

impl GramMatrix {
    /// Validates a user-supplied Gram matrix: Hermitian, unit diagonal,
    /// positive semidefinite, entries bounded by one in modulus.
    pub fn new(g: CMatrix) -> Result<Self> {
        let n = g.nrows();
        if n != g.ncols() || n == 0 {
            return Err(Error::Dimension {
                context: "Gram matrix",
                expected: n,
                found: g.ncols(),
            });
        }
        let eig = linalg::hermitian_eig(&g)?;
        let g = (&g + g.adjoint()).scale(0.5);
        for i in 0..n {
            let dev = (g[(i, i)] - linalg::ONE).norm();
            if dev > tolerance::VALIDITY {
                return Err(Error::NotNormalized {
                    norm: g[(i, i)].re.sqrt(),
                });
            }
        }
        if eig.eigenvalues[0] < -tolerance::VALIDITY {
            return Err(Error::NotPositive {
                min_eigenvalue: eig.eigenvalues[0],
            });
        }
        if let Some(z) = g.iter().find(|z| z.norm() > 1.0 + tolerance::VALIDITY) {
            return Err(Error::InvalidParameter(format!(
                "Gram entry modulus {} exceeds 1",
                z.norm()
            )));
        }
        Ok(Self { g })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.g[(i, j)]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.g
    }

    /// Entry that is furthest from being real and nonnegative, with the size
    /// of the violation (0 when every entry qualifies).
    pub fn worst_nonnegativity(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.n() {
            for j in 0..self.n() {
                let z = self.g[(i, j)];
                let v = z.im.abs().max(-z.re);
                if v > worst.2 {
                    worst = (i, j, v);
                }
            }
        }
        worst
    }
}
