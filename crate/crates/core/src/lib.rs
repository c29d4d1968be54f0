//! Two-stage quantum measurement models.
//!
//! A measurement is split into an entangling system-meter interaction
//! (stage I), described completely by the conditional meter states
//! `|φ(a)⟩`, and a readout of the meter alone (stage II). This crate builds
//! interactions, evaluates readouts, and computes per-pair resolution
//! (squared Hellinger distance of the outcome distributions), decoherence
//! and irreversible decoherence. It also synthesizes readouts at both ends
//! of the trade-off: maximal resolution `R = D` through a nonnegative
//! factorization of the Gram matrix, and quantum-eraser readouts with
//! phase feedback that restore the input state.
//!
//! ```
//! use mlab::analysis::{cond_probs, decoherence, resolution, ReadoutStrategy};
//! use mlab::interaction::MeasurementInteraction;
//!
//! let mi = MeasurementInteraction::partial_cnot(std::f64::consts::FRAC_PI_4).unwrap();
//! let r = resolution(&cond_probs(&mi, &ReadoutStrategy::computational(2)).unwrap());
//! let d = decoherence(&mi.gram());
//! assert!((r.get(0, 1) - d.get(0, 1)).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod error;
pub mod interaction;
pub mod linalg;
pub mod oracle;
pub mod readout_opt;
pub mod tolerance;

pub use error::{Error, Result};
