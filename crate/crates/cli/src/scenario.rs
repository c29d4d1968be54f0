//! Scenario files: an interaction, named readouts, an input state and the
//! analyses to run on them.

use std::path::Path;

use mlab::analysis::ReadoutStrategy;
use mlab::interaction::{MeasurementInteraction, ProductHamiltonianSpec, TwoPartMeterSpec};
use mlab::linalg::{validate_density, CVector, DensityMatrix, UnitaryMatrix};
use mlab::oracle::haar_readout;
use mlab::readout_opt::{
    cp_factorize, eraser_readout, optimal_readout, FactorizeOptions, NonnegFactorization,
};
use mlab::tolerance;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::wire::{matrix_from_wire, vector_from_wire, WireMatrix, WireVector};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub interaction: InteractionSpec,
    #[serde(default)]
    pub readouts: Vec<ReadoutSpec>,
    /// Defaults to the uniform superposition of the eigenstates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_state: Option<InputState>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steering: Option<SteeringSpec>,
    /// Readout used by the feedback analysis; defaults to the first readout
    /// of type `eraser`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_readout: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InteractionSpec {
    ConditionalUnitaries {
        /// Defaults to `0, 1, ..., n-1`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<f64>>,
        unitaries: Vec<WireMatrix>,
        initial_meter: WireVector,
    },
    ProductHamiltonian {
        a_values: Vec<f64>,
        b_values: Vec<f64>,
        /// Defaults to the uniform superposition of the `B` eigenstates.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial_meter: Option<WireVector>,
        effective_time: f64,
    },
    TwoPartMeter {
        a_values: Vec<f64>,
        v_values: Vec<f64>,
        dist: Vec<f64>,
        effective_time: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReadoutSpec {
    Computational {
        name: String,
    },
    /// Rows are the outcome bras `⟨m|W`.
    BasisMatrix {
        name: String,
        rows: WireMatrix,
    },
    Eraser {
        name: String,
    },
    Optimal {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_outcomes: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        restarts: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    HaarRandom {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl ReadoutSpec {
    pub fn name(&self) -> &str {
        match self {
            ReadoutSpec::Computational { name }
            | ReadoutSpec::BasisMatrix { name, .. }
            | ReadoutSpec::Eraser { name }
            | ReadoutSpec::Optimal { name, .. }
            | ReadoutSpec::HaarRandom { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputState {
    Pure(WireVector),
    Density(WireMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Gram,
    Resolution,
    Decoherence,
    Irreversible,
    ConditionalStates,
    Steering,
    Feedback,
}

impl Analysis {
    pub fn file_stem(self) -> &'static str {
        match self {
            Analysis::Gram => "gram",
            Analysis::Resolution => "resolution",
            Analysis::Decoherence => "decoherence",
            Analysis::Irreversible => "irreversible",
            Analysis::ConditionalStates => "conditional-states",
            Analysis::Steering => "steering",
            Analysis::Feedback => "feedback",
        }
    }

    fn needs_readout(self) -> bool {
        !matches!(self, Analysis::Gram | Analysis::Decoherence)
    }
}

/// `r` is the resolving readout, `c` the coherence-preserving one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteeringSpec {
    pub r: String,
    pub c: String,
    /// Eigenstate indices; every pair when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
}

/// Settings from the command line that apply to every readout lacking its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: tolerance::OPTIMIZATION,
        }
    }
}

pub struct NamedReadout {
    pub spec: ReadoutSpec,
    pub strategy: ReadoutStrategy,
    pub factorization: Option<NonnegFactorization>,
}

/// A scenario with every component constructed and validated.
pub struct Built {
    pub scenario: Scenario,
    pub mi: MeasurementInteraction,
    pub readouts: Vec<NamedReadout>,
    pub rho_in: DensityMatrix,
    /// Set when the input is pure.
    pub psi_in: Option<CVector>,
}

impl Built {
    pub fn readout(&self, name: &str) -> Result<&NamedReadout, CliError> {
        self.readouts
            .iter()
            .find(|r| r.spec.name() == name)
            .ok_or_else(|| CliError::validation(format!("unknown readout {name:?}")))
    }
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(path, e, crate::error::EXIT_VALIDATION))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, &e))
}

pub fn load_value(path: &Path) -> Result<serde_json::Value, CliError> {
    load_json(path)
}

impl Scenario {
    pub fn from_value(value: serde_json::Value) -> Result<Self, CliError> {
        let s: Scenario =
            serde_json::from_value(value).map_err(|e| CliError::validation(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let s: Scenario = load_json(path)?;
        s.check()?;
        Ok(s)
    }

    /// Structural checks that do not need the interaction.
    pub fn check(&self) -> Result<(), CliError> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::validation(format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                self.version
            )));
        }
        let mut names: Vec<&str> = self.readouts.iter().map(ReadoutSpec::name).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::validation(format!(
                "duplicate readout name {:?}",
                w[0]
            )));
        }
        if self.readouts.is_empty() {
            if let Some(a) = self.analyses.iter().find(|a| a.needs_readout()) {
                return Err(CliError::validation(format!(
                    "analysis {:?} needs at least one readout",
                    a.file_stem()
                )));
            }
        }
        if self.analyses.contains(&Analysis::Steering)
            && self.steering.is_none()
            && self.readouts.len() != 2
        {
            return Err(CliError::validation(
                "steering needs a \"steering\" block or exactly two readouts",
            ));
        }
        Ok(())
    }

    /// Resolving and preserving readout names for the steering analysis.
    pub fn steering_readouts(&self) -> (String, String, Option<(usize, usize)>) {
        match &self.steering {
            Some(s) => (s.r.clone(), s.c.clone(), s.pair),
            None => (
                self.readouts[0].name().to_string(),
                self.readouts[1].name().to_string(),
                None,
            ),
        }
    }

    pub fn build(self, settings: &Settings) -> Result<Built, CliError> {
        let mi = build_interaction(&self.interaction)?;
        let (rho_in, psi_in) = build_input(self.input_state.as_ref(), mi.n())?;
        let readouts = self
            .readouts
            .iter()
            .map(|spec| build_readout(spec, &mi, settings))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Built {
            scenario: self,
            mi,
            readouts,
            rho_in,
            psi_in,
        })
    }
}

fn uniform(n: usize) -> CVector {
    CVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0))
}

pub fn build_interaction(spec: &InteractionSpec) -> Result<MeasurementInteraction, CliError> {
    let mi = match spec {
        InteractionSpec::ConditionalUnitaries {
            labels,
            unitaries,
            initial_meter,
        } => {
            let us = unitaries
                .iter()
                .enumerate()
                .map(|(i, u)| {
                    let m = matrix_from_wire(u, &format!("unitaries[{i}]"))?;
                    Ok(UnitaryMatrix::new(m)?)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let labels = labels
                .clone()
                .unwrap_or_else(|| (0..us.len()).map(|i| i as f64).collect());
            MeasurementInteraction::from_conditional_unitaries(
                us,
                &vector_from_wire(initial_meter),
                labels,
            )?
        }
        InteractionSpec::ProductHamiltonian {
            a_values,
            b_values,
            initial_meter,
            effective_time,
        } => MeasurementInteraction::from_product_hamiltonian(&ProductHamiltonianSpec {
            a_values: a_values.clone(),
            b_values: b_values.clone(),
            initial_meter: initial_meter
                .as_ref()
                .map(|v| vector_from_wire(v))
                .unwrap_or_else(|| uniform(b_values.len())),
            effective_time: *effective_time,
        })?,
        InteractionSpec::TwoPartMeter {
            a_values,
            v_values,
            dist,
            effective_time,
        } => MeasurementInteraction::from_two_part_meter(&TwoPartMeterSpec {
            a_values: a_values.clone(),
            v_values: v_values.clone(),
            dist: dist.clone(),
            effective_time: *effective_time,
        })?,
    };
    Ok(mi)
}

fn build_input(
    input: Option<&InputState>,
    n: usize,
) -> Result<(DensityMatrix, Option<CVector>), CliError> {
    let (rho, psi) = match input {
        None => {
            let psi = uniform(n);
            (DensityMatrix::pure(&psi)?, Some(psi))
        }
        Some(InputState::Pure(v)) => {
            let psi = vector_from_wire(v);
            (DensityMatrix::pure(&psi)?, Some(psi))
        }
        Some(InputState::Density(m)) => {
            let rho = validate_density(
                &matrix_from_wire(m, "input_state.density")?,
                tolerance::VALIDITY,
            )?;
            (rho, None)
        }
    };
    if rho.dim() != n {
        return Err(CliError::validation(format!(
            "input state has dimension {}, interaction has {n} eigenstates",
            rho.dim()
        )));
    }
    Ok((rho, psi))
}

fn build_readout(
    spec: &ReadoutSpec,
    mi: &MeasurementInteraction,
    settings: &Settings,
) -> Result<NamedReadout, CliError> {
    let d = mi.meter_dim();
    let mut factorization = None;
    let strategy = match spec {
        ReadoutSpec::Computational { .. } => ReadoutStrategy::computational(d),
        ReadoutSpec::BasisMatrix { name, rows } => {
            let w = matrix_from_wire(rows, &format!("readout {name:?} rows"))?;
            ReadoutStrategy::new(w, name.clone())?
        }
        ReadoutSpec::Eraser { .. } => eraser_readout(mi)?,
        ReadoutSpec::Optimal {
            max_outcomes,
            restarts,
            seed,
            ..
        } => {
            let defaults = FactorizeOptions::default();
            let opts = FactorizeOptions {
                max_outcomes: *max_outcomes,
                restarts: restarts.unwrap_or(defaults.restarts),
                tol: settings.tol,
                seed: seed.unwrap_or(settings.seed),
                ..defaults
            };
            let fact = cp_factorize(&mi.gram(), &opts)?;
            let w = optimal_readout(mi, &fact)?;
            factorization = Some(fact);
            w
        }
        ReadoutSpec::HaarRandom { seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(settings.seed));
            haar_readout(&mut rng, d)
        }
    };
    if strategy.meter_dim() != d {
        return Err(CliError::validation(format!(
            "readout {:?} acts on dimension {}, meter has {d}",
            spec.name(),
            strategy.meter_dim()
        )));
    }
    Ok(NamedReadout {
        strategy: strategy.with_name(spec.name()),
        spec: spec.clone(),
        factorization,
    })
}
