//! Simulator for a cyclical quantum memory that stores photonic polarization
//! qubits in a fiber loop behind a polarizing Sagnac interferometer switch.
//!
//! A photon entering the switch is trapped in the storage loop for as long as
//! an electro-optic (Pockels) cell inside the Sagnac ring holds a half-wave
//! retardation, and is released on the first round trip that finds the cell
//! off. Storage is therefore quantized in units of the loop round-trip time,
//! and the stored polarization is bit-flipped once per completed cycle.
//!
//! The crate is layered bottom-up:
//!
//! * [`polarization`]: Jones vectors, density matrices, element operators.
//! * [`device`]: the per-cycle storage channel, its element-by-element
//!   oracle, and phase self-correction analysis.
//! * [`control`]: the pulse-pair drive waveform and schedule synthesis.
//! * [`monte_carlo`]: seeded, reproducible photon-counting experiments.
//!
//! # Quick start
//!
//! ```
//! use cqm::device::{propagate, CycleModel};
//! use cqm::polarization::make_linear;
//!
//! // Store a 30-degree linear polarization for three cycles.
//! let input = make_linear(30.0)?;
//! let out = propagate(&input, 3, &CycleModel::default())?;
//!
//! // A photon trapped for n cycles is flipped n - 1 times: the two flips
//! // cancel and the qubit reads out on its original 30-degree line.
//! let readout = out.state.analyzer_probability(30.0) / out.state.survival_probability();
//! assert!((readout - 1.0).abs() < 1e-12);
//! // Each cycle costs 19% of the photons: survival is 0.81^3.
//! assert!((out.state.survival_probability() - 0.531441).abs() < 1e-12);
//! # Ok::<(), cqm::Error>(())
//! ```

pub mod control;
pub mod device;
pub mod monte_carlo;
pub mod polarization;

mod error;

pub use error::{Error, Result};

/// Storage-loop round-trip time, in nanoseconds, for the reference device
/// (3.5 m of fiber plus the 0.5 m Sagnac path).
pub const DEFAULT_ROUND_TRIP_NS: f64 = 13.3;
