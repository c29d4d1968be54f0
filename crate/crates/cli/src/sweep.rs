//! The `sweep` verb: rerun a scenario with one numeric field replaced by
//! each of a list of values.

use mlab::analysis::{cond_probs, decoherence, irreversible_decoherence, resolution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::run::{fmt_float, render_csv};
use crate::scenario::{Scenario, Settings, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub version: u32,
    /// Dotted path into the scenario JSON, e.g. `interaction.effective_time`
    /// or `interaction.a_values.1`.
    pub parameter: String,
    /// Header of the parameter column; defaults to the last path segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub values: Vec<f64>,
    pub outputs: Vec<SweepOutput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    D,
    R,
    Dirr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOutput {
    pub quantity: Quantity,
    /// Required for `R` and `Dirr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<String>,
    /// Eigenstate indices.
    pub pair: (usize, usize),
    /// Defaults to `D`, `R_<readout>` or `Dirr_<readout>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
}

impl SweepOutput {
    pub fn column_name(&self) -> String {
        if let Some(c) = &self.column {
            return c.clone();
        }
        let q = match self.quantity {
            Quantity::D => "D",
            Quantity::R => "R",
            Quantity::Dirr => "Dirr",
        };
        match &self.readout {
            Some(r) if self.quantity != Quantity::D => format!("{q}_{r}"),
            _ => q.to_string(),
        }
    }
}

fn lookup<'a>(root: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    let mut cur = root;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(seg)?,
            Value::Array(items) => items.get_mut(seg.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    Some(cur)
}

impl SweepSpec {
    pub fn parameter_column(&self) -> String {
        self.column.clone().unwrap_or_else(|| {
            self.parameter
                .rsplit('.')
                .next()
                .unwrap_or_default()
                .to_string()
        })
    }

    pub fn check(&self, scenario: &Value) -> Result<(), CliError> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::validation(format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                self.version
            )));
        }
        if self.values.is_empty() {
            return Err(CliError::validation("sweep needs at least one value"));
        }
        if self.outputs.is_empty() {
            return Err(CliError::validation("sweep needs at least one output"));
        }
        let mut probe = scenario.clone();
        match lookup(&mut probe, &self.parameter) {
            Some(Value::Number(_)) => {}
            Some(_) => {
                return Err(CliError::validation(format!(
                    "parameter {:?} is not a number",
                    self.parameter
                )))
            }
            None => {
                return Err(CliError::validation(format!(
                    "parameter {:?} does not exist in the scenario",
                    self.parameter
                )))
            }
        }
        let parsed = Scenario::from_value(scenario.clone())?;
        for o in &self.outputs {
            match (&o.quantity, &o.readout) {
                (Quantity::D, _) => {}
                (_, None) => {
                    return Err(CliError::validation(format!(
                        "{:?} output needs a readout",
                        o.quantity
                    )))
                }
                (_, Some(name)) => {
                    if !parsed.readouts.iter().any(|r| r.name() == name) {
                        return Err(CliError::validation(format!("unknown readout {name:?}")));
                    }
                }
            }
        }
        let mut names: Vec<String> = self.outputs.iter().map(SweepOutput::column_name).collect();
        names.push(self.parameter_column());
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::validation(format!("duplicate column {:?}", w[0])));
        }
        Ok(())
    }

    pub fn header(&self) -> Vec<String> {
        std::iter::once(self.parameter_column())
            .chain(self.outputs.iter().map(SweepOutput::column_name))
            .collect()
    }
}

fn point(
    scenario: &Value,
    spec: &SweepSpec,
    value: f64,
    settings: &Settings,
) -> Result<Vec<String>, CliError> {
    let mut doc = scenario.clone();
    let slot = lookup(&mut doc, &spec.parameter).expect("checked before the sweep");
    *slot = serde_json::Number::from_f64(value)
        .map(Value::Number)
        .ok_or_else(|| CliError::validation(format!("sweep value {value} is not finite")))?;
    let built = Scenario::from_value(doc)?.build(settings)?;
    let n = built.mi.n();
    let mut row = vec![fmt_float(value)];
    for o in &spec.outputs {
        let (a1, a2) = o.pair;
        if a1 >= n || a2 >= n || a1 == a2 {
            return Err(CliError::validation(format!(
                "pair ({a1}, {a2}) is not a pair of distinct eigenstates out of {n}"
            )));
        }
        let x = match o.quantity {
            Quantity::D => decoherence(&built.mi.gram()).get(a1, a2),
            Quantity::R | Quantity::Dirr => {
                let name = o.readout.as_deref().expect("checked before the sweep");
                let p = cond_probs(&built.mi, &built.readout(name)?.strategy)?;
                if o.quantity == Quantity::R {
                    resolution(&p).get(a1, a2)
                } else {
                    irreversible_decoherence(&p).get(a1, a2)
                }
            }
        };
        row.push(fmt_float(x));
    }
    Ok(row)
}

/// CSV text with one row per value, in the order given.
pub fn sweep(scenario: &Value, spec: &SweepSpec, settings: &Settings) -> Result<String, CliError> {
    spec.check(scenario)?;
    let rows = spec
        .values
        .par_iter()
        .map(|&v| point(scenario, spec, v, settings))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let header = spec.header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(render_csv(&header, &rows))
}
