//! Readout statistics: conditional probabilities, resolution, decoherence
//! and irreversible decoherence.
//!
//! Resolution is the squared Hellinger distance between the outcome
//! distributions of two eigenstates. Decoherence is the loss of modulus of
//! the corresponding off-diagonal element, `1 - |⟨φ(a₂)|φ(a₁)⟩|`, and is
//! fixed by the interaction alone.

mod states;
mod steering;

pub use states::{
    average_state, conditional_outputs, irreversible_decoherence_from_states, output_density,
    ConditionalOutput, StatePairMatrix,
};
pub use steering::{
    positivity_excess, steering_averages, steering_report, steering_report_with_margin,
    SteeringAverages, SteeringReport,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interaction::{GramMatrix, MeasurementInteraction};
use crate::linalg::{self, CMatrix, CVector};
use crate::tolerance;

/// Stage-II readout: an isometric embedding `W` of the meter into an
/// `M`-dimensional space followed by a measurement in its standard basis.
/// Outcome `m` projects onto the row `⟨m|W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutStrategy {
    embed: CMatrix,
    name: String,
}

impl ReadoutStrategy {
    pub fn new(embed: CMatrix, name: impl Into<String>) -> Result<Self> {
        if embed.nrows() < embed.ncols() || embed.ncols() == 0 {
            return Err(Error::Dimension {
                context: "readout embedding rows",
                expected: embed.ncols(),
                found: embed.nrows(),
            });
        }
        let deviation = linalg::isometry_deviation(&embed);
        if deviation > tolerance::VALIDITY {
            return Err(Error::NotIsometry { deviation });
        }
        Ok(Self {
            embed,
            name: name.into(),
        })
    }

    pub fn computational(d: usize) -> Self {
        Self {
            embed: CMatrix::identity(d, d),
            name: "computational".into(),
        }
    }

    /// Readout in the orthonormal basis `kets` of the meter.
    pub fn from_basis(kets: &[CVector], name: impl Into<String>) -> Result<Self> {
        let Some(first) = kets.first() else {
            return Err(Error::InvalidParameter("readout basis is empty".into()));
        };
        let d = first.len();
        if kets.len() != d {
            return Err(Error::Dimension {
                context: "readout basis size",
                expected: d,
                found: kets.len(),
            });
        }
        if let Some(k) = kets.iter().find(|k| k.len() != d) {
            return Err(Error::Dimension {
                context: "readout basis vector",
                expected: d,
                found: k.len(),
            });
        }
        Self::new(CMatrix::from_columns(kets).adjoint(), name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn embed(&self) -> &CMatrix {
        &self.embed
    }

    pub fn outcomes(&self) -> usize {
        self.embed.nrows()
    }

    pub fn meter_dim(&self) -> usize {
        self.embed.ncols()
    }

    /// `⟨m|W|φ(a)⟩` as an `M × n` matrix.
    pub fn amplitudes(&self, mi: &MeasurementInteraction) -> Result<CMatrix> {
        if self.meter_dim() != mi.meter_dim() {
            return Err(Error::Dimension {
                context: "readout meter dimension",
                expected: mi.meter_dim(),
                found: self.meter_dim(),
            });
        }
        Ok(&self.embed * mi.state_matrix())
    }
}

/// Conditional probabilities `P(m|a)` as an `M × n` table.
#[derive(Debug, Clone, PartialEq)]
pub struct CondProbTable {
    p: DMatrix<f64>,
}

impl CondProbTable {
    /// Validates a table: entries within `[-ε, 1+ε]` are clamped to `[0, 1]`,
    /// and every column must sum to one within the validity tolerance.
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() == 0 || p.ncols() == 0 {
            return Err(Error::InvalidParameter("empty probability table".into()));
        }
        let slack = tolerance::PROBABILITY_SLACK;
        if let Some(x) = p.iter().find(|x| !(**x >= -slack && **x <= 1.0 + slack)) {
            return Err(Error::InvalidParameter(format!(
                "probability {x} outside [0, 1]"
            )));
        }
        let mut p = p.map(|x| x.clamp(0.0, 1.0));
        for mut col in p.column_iter_mut() {
            let total: f64 = col.sum();
            if (total - 1.0).abs() > tolerance::VALIDITY {
                return Err(Error::InvalidParameter(format!(
                    "conditional probabilities sum to {total}, expected 1"
                )));
            }
            col /= total;
        }
        Ok(Self { p })
    }

    pub fn get(&self, m: usize, a: usize) -> f64 {
        self.p[(m, a)]
    }

    pub fn outcomes(&self) -> usize {
        self.p.nrows()
    }

    pub fn n(&self) -> usize {
        self.p.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// `Σ_m √(P(m|a₁)·P(m|a₂))`.
    pub fn bhattacharyya(&self, a1: usize, a2: usize) -> f64 {
        self.p
            .column(a1)
            .iter()
            .zip(self.p.column(a2).iter())
            .map(|(x, y)| (x * y).sqrt())
            .sum()
    }

    /// Largest spread `max_a P(m|a) - min_a P(m|a)` over outcomes.
    pub fn label_dependence(&self) -> f64 {
        self.p
            .row_iter()
            .map(|row| row.max() - row.min())
            .fold(0.0, f64::max)
    }
}

/// `P(m|a) = |⟨m|W|φ(a)⟩|²`.
pub fn cond_probs(mi: &MeasurementInteraction, readout: &ReadoutStrategy) -> Result<CondProbTable> {
    let amps = readout.amplitudes(mi)?;
    CondProbTable::new(amps.map(|z| z.norm_sqr()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairKind {
    Resolution,
    Decoherence,
    IrreversibleDecoherence,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::Resolution => "resolution",
            PairKind::Decoherence => "decoherence",
            PairKind::IrreversibleDecoherence => "irreversible",
        }
    }
}

/// Symmetric real matrix over eigenstate pairs with zero diagonal and
/// entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    kind: PairKind,
    values: DMatrix<f64>,
}

impl PairMatrix {
    fn from_fn(kind: PairKind, n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j).clamp(0.0, 1.0);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
        Self { kind, values }
    }

    /// Validates a raw matrix (symmetric, zero diagonal, entries in `[0, 1]`
    /// within the validity tolerance).
    pub fn new(kind: PairKind, values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if n != values.ncols() {
            return Err(Error::Dimension {
                context: "pair matrix",
                expected: n,
                found: values.ncols(),
            });
        }
        let tol = tolerance::VALIDITY;
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter(
                    "pair matrix diagonal must be 0".into(),
                ));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if (v - values[(j, i)]).abs() > tol || !(v >= -tol && v <= 1.0 + tol) {
                    return Err(Error::InvalidParameter(format!(
                        "pair matrix entry ({i}, {j}) = {v} invalid"
                    )));
                }
            }
        }
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> PairKind {
        self.kind
    }

    pub fn get(&self, a1: usize, a2: usize) -> f64 {
        self.values[(a1, a2)]
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Largest `|self - other|` over all entries.
    pub fn max_deviation(&self, other: &PairMatrix) -> f64 {
        (&self.values - &other.values).amax()
    }
}

/// Squared Hellinger distance `½ Σ_m (√P(m|a₁) - √P(m|a₂))²`.
pub fn resolution(p: &CondProbTable) -> PairMatrix {
    let roots = p.matrix().map(f64::sqrt);
    PairMatrix::from_fn(PairKind::Resolution, p.n(), |a1, a2| {
        0.5 * (roots.column(a1) - roots.column(a2)).norm_squared()
    })
}

/// `D(a₁, a₂) = 1 - |⟨φ(a₂)|φ(a₁)⟩|`.
pub fn decoherence(g: &GramMatrix) -> PairMatrix {
    PairMatrix::from_fn(PairKind::Decoherence, g.n(), |a1, a2| {
        1.0 - g.get(a2, a1).norm()
    })
}

/// Decoherence left after optimal outcome-conditioned phase feedback,
/// `1 - Σ_m √(P(m|a₁)·P(m|a₂))`. Identical to [`resolution`] for every
/// table.
pub fn irreversible_decoherence(p: &CondProbTable) -> PairMatrix {
    PairMatrix::from_fn(PairKind::IrreversibleDecoherence, p.n(), |a1, a2| {
        1.0 - p.bhattacharyya(a1, a2)
    })
}
