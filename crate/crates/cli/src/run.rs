//! The `run` verb: evaluate every requested analysis, then write all
//! outputs at once.

use std::path::{Path, PathBuf};

use mlab::analysis::{
    cond_probs, conditional_outputs, decoherence, irreversible_decoherence,
    irreversible_decoherence_from_states, output_density, positivity_excess, resolution,
    steering_report, PairMatrix,
};
use mlab::oracle::RNG_ALGORITHM;
use mlab::readout_opt::{feedback_channel, feedback_correction};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, EXIT_ANALYSIS};
use crate::scenario::{Analysis, Built, ReadoutSpec, Settings, FORMAT_VERSION};
use crate::wire::{matrix_to_wire, real_matrix_to_wire, WireMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramOutput {
    pub labels: Vec<f64>,
    pub degenerate_labels: bool,
    pub matrix: WireMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceOutput {
    pub labels: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionEntry {
    pub readout: String,
    pub outcomes: usize,
    /// `probabilities[m][a] = P(m|a)`.
    pub probabilities: Vec<Vec<f64>>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionOutput {
    pub labels: Vec<f64>,
    pub readouts: Vec<ResolutionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreversibleEntry {
    pub readout: String,
    /// From the outcome statistics.
    pub matrix: Vec<Vec<f64>>,
    /// From the conditional states of the input; `null` where the input has
    /// no coherence between the pair.
    pub from_states: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreversibleOutput {
    pub labels: Vec<f64>,
    pub readouts: Vec<IrreversibleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeState {
    pub outcome: usize,
    pub probability: f64,
    /// `null` for outcomes that never occur.
    pub state: Option<WireMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEntry {
    pub readout: String,
    pub positivity_excess: f64,
    pub outcomes: Vec<OutcomeState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalOutput {
    pub labels: Vec<f64>,
    pub input: WireMatrix,
    pub output: WireMatrix,
    pub readouts: Vec<ConditionalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringPair {
    pub pair: (usize, usize),
    pub labels: (f64, f64),
    pub resolution_r: f64,
    pub irreversible_c: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringOutput {
    pub r: String,
    pub c: String,
    pub margin: f64,
    pub pairs: Vec<SteeringPair>,
    /// True when any pair violates.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackOutput {
    pub readout: String,
    /// `phases[m][a]`; the correction after outcome `m` is
    /// `diag(exp(-i·phases[m][a]))`.
    pub phases: Vec<Vec<f64>>,
    pub output: WireMatrix,
    pub trace_distance: f64,
    /// Only for pure inputs.
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationSummary {
    pub readout: String,
    pub residual: f64,
    pub seed: u64,
    pub restart: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub scenario: Option<String>,
    pub rng: String,
    pub seed: u64,
    pub tol: f64,
    pub factorizations: Vec<FactorizationSummary>,
    pub files: Vec<String>,
}

/// All results of a run, held in memory until written.
pub struct RunOutputs {
    pub files: Vec<(String, String)>,
    pub manifest: Manifest,
    pub steering: Option<SteeringOutput>,
}

pub const CSV_HEADER: [&str; 5] = ["quantity", "readout", "a1_label", "a2_label", "value"];
pub const PAIRS_CSV: &str = "pairs.csv";
pub const MANIFEST: &str = "manifest.json";

/// Seventeen significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn pair_rows(rows: &mut Vec<[String; 5]>, m: &PairMatrix, readout: &str, labels: &[f64]) {
    let n = m.n();
    for a1 in 0..n {
        for a2 in a1 + 1..n {
            rows.push([
                m.kind().as_str().to_string(),
                readout.to_string(),
                fmt_float(labels[a1]),
                fmt_float(labels[a2]),
                fmt_float(m.get(a1, a2)),
            ]);
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn option_matrix(m: &mlab::analysis::StatePairMatrix) -> Vec<Vec<Option<f64>>> {
    (0..m.n())
        .map(|a1| {
            (0..m.n())
                .map(|a2| if a1 == a2 { Some(0.0) } else { m.entry(a1, a2) })
                .collect()
        })
        .collect()
}

pub fn evaluate(built: &Built, settings: &Settings) -> Result<RunOutputs, CliError> {
    let mi = &built.mi;
    let labels = mi.labels().to_vec();
    let mut analyses = built.scenario.analyses.clone();
    analyses.dedup();
    let mut files = Vec::new();
    let mut csv_rows: Vec<[String; 5]> = Vec::new();
    let mut steering = None;

    for analysis in &analyses {
        let body = match analysis {
            Analysis::Gram => to_json(&GramOutput {
                labels: labels.clone(),
                degenerate_labels: mi.is_degenerate(),
                matrix: matrix_to_wire(mi.gram().matrix()),
            }),
            Analysis::Decoherence => {
                let d = decoherence(&mi.gram());
                pair_rows(&mut csv_rows, &d, "", &labels);
                to_json(&DecoherenceOutput {
                    labels: labels.clone(),
                    matrix: real_matrix_to_wire(d.matrix()),
                })
            }
            Analysis::Resolution => {
                let mut readouts = Vec::new();
                for r in &built.readouts {
                    let p = cond_probs(mi, &r.strategy)?;
                    let res = resolution(&p);
                    pair_rows(&mut csv_rows, &res, r.spec.name(), &labels);
                    readouts.push(ResolutionEntry {
                        readout: r.spec.name().into(),
                        outcomes: p.outcomes(),
                        probabilities: real_matrix_to_wire(p.matrix()),
                        matrix: real_matrix_to_wire(res.matrix()),
                    });
                }
                to_json(&ResolutionOutput {
                    labels: labels.clone(),
                    readouts,
                })
            }
            Analysis::Irreversible => {
                let mut readouts = Vec::new();
                for r in &built.readouts {
                    let irr = irreversible_decoherence(&cond_probs(mi, &r.strategy)?);
                    pair_rows(&mut csv_rows, &irr, r.spec.name(), &labels);
                    let outs = conditional_outputs(mi, &r.strategy, &built.rho_in)?;
                    let states = irreversible_decoherence_from_states(&outs, &built.rho_in)?;
                    readouts.push(IrreversibleEntry {
                        readout: r.spec.name().into(),
                        matrix: real_matrix_to_wire(irr.matrix()),
                        from_states: option_matrix(&states),
                    });
                }
                to_json(&IrreversibleOutput {
                    labels: labels.clone(),
                    readouts,
                })
            }
            Analysis::ConditionalStates => {
                let mut readouts = Vec::new();
                for r in &built.readouts {
                    let outs = conditional_outputs(mi, &r.strategy, &built.rho_in)?;
                    readouts.push(ConditionalEntry {
                        readout: r.spec.name().into(),
                        positivity_excess: positivity_excess(&outs),
                        outcomes: outs
                            .iter()
                            .map(|o| OutcomeState {
                                outcome: o.outcome,
                                probability: o.prob,
                                state: o.rho.as_ref().map(|rho| matrix_to_wire(rho.matrix())),
                            })
                            .collect(),
                    });
                }
                to_json(&ConditionalOutput {
                    labels: labels.clone(),
                    input: matrix_to_wire(built.rho_in.matrix()),
                    output: matrix_to_wire(output_density(mi, &built.rho_in)?.matrix()),
                    readouts,
                })
            }
            Analysis::Steering => {
                let (r_name, c_name, pair) = built.scenario.steering_readouts();
                let r = built.readout(&r_name)?;
                let c = built.readout(&c_name)?;
                let pairs: Vec<(usize, usize)> = match pair {
                    Some(p) => vec![p],
                    None => mi.pairs().collect(),
                };
                let mut out = SteeringOutput {
                    r: r_name,
                    c: c_name,
                    margin: mlab::tolerance::STEERING_MARGIN,
                    pairs: Vec::new(),
                    violation: false,
                };
                for p in pairs {
                    let rep = steering_report(mi, &r.strategy, &c.strategy, p)?;
                    out.violation |= rep.violation;
                    out.pairs.push(SteeringPair {
                        pair: p,
                        labels: (labels[p.0], labels[p.1]),
                        resolution_r: rep.resolution_r,
                        irreversible_c: rep.irreversible_c,
                        violation: rep.violation,
                    });
                }
                let body = to_json(&out);
                steering = Some(out);
                body
            }
            Analysis::Feedback => {
                let name = match &built.scenario.feedback_readout {
                    Some(n) => n.clone(),
                    None => built
                        .readouts
                        .iter()
                        .find(|r| matches!(r.spec, ReadoutSpec::Eraser { .. }))
                        .map(|r| r.spec.name().to_string())
                        .ok_or_else(|| {
                            CliError::validation(
                                "feedback needs an eraser readout or \"feedback_readout\"",
                            )
                        })?,
                };
                let r = built.readout(&name)?;
                let fb = feedback_correction(mi, &r.strategy)?;
                let out = feedback_channel(mi, &r.strategy, &fb, &built.rho_in)?;
                to_json(&FeedbackOutput {
                    readout: name,
                    phases: (0..fb.outcomes()).map(|m| fb.phases(m).to_vec()).collect(),
                    output: matrix_to_wire(out.matrix()),
                    trace_distance: out.trace_distance(&built.rho_in)?,
                    fidelity: match &built.psi_in {
                        Some(psi) => Some(out.fidelity_with_pure(psi)?),
                        None => None,
                    },
                })
            }
        };
        files.push((format!("{}.json", analysis.file_stem()), body));
    }

    if !csv_rows.is_empty() {
        files.push((PAIRS_CSV.to_string(), render_csv(&CSV_HEADER, &csv_rows)));
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        scenario: built.scenario.name.clone(),
        rng: RNG_ALGORITHM.into(),
        seed: settings.seed,
        tol: settings.tol,
        factorizations: built
            .readouts
            .iter()
            .filter_map(|r| {
                r.factorization.as_ref().map(|f| FactorizationSummary {
                    readout: r.spec.name().into(),
                    residual: f.residual,
                    seed: f.seed,
                    restart: f.restart,
                    iterations: f.iterations,
                })
            })
            .collect(),
        files: files.iter().map(|(name, _)| name.clone()).collect(),
    };
    Ok(RunOutputs {
        files,
        manifest,
        steering,
    })
}

pub fn render_csv<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.as_ref()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io_err = |e| CliError::io(path, e, EXIT_ANALYSIS);
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Writes every output file and finally the manifest.
pub fn write_outputs(out_dir: &Path, outputs: &RunOutputs) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e, EXIT_ANALYSIS))?;
    for (name, body) in &outputs.files {
        write_atomic(&out_dir.join(name), body)?;
    }
    write_atomic(&out_dir.join(MANIFEST), &to_json(&outputs.manifest))
}

/// Loads, evaluates and writes a scenario; nothing is written unless every
/// analysis succeeds.
pub fn run(scenario: &Path, out_dir: &Path, settings: &Settings) -> Result<RunOutputs, CliError> {
    let built = crate::scenario::Scenario::load(scenario)?.build(settings)?;
    let outputs = evaluate(&built, settings)?;
    write_outputs(out_dir, &outputs)?;
    Ok(outputs)
}
