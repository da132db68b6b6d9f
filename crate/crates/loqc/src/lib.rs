//! Simulation of non-deterministic linear-optical C-sign gates with imperfect
//! ancilla production and detection.
//!
//! The crate models gates as linear-optical circuits over a truncated
//! multimode Fock space. Ancilla inefficiency enters as beamsplitter loss
//! channels; gate success is post-selected on photon-counting patterns, and
//! gate quality is scored by the worst-case fidelity over a three-angle
//! family of two-qubit input states.
//!
//! Modules:
//! - [`fock`]: basis enumeration, pure states, density operators, partial
//!   trace, projection and fidelity.
//! - [`optics`]: beamsplitters (both sign conventions), multi-photon lifts of
//!   mode transformations, and the photon-loss channel.
//! - [`gates`]: the NS gate and the KLM, Knill and PJF C-sign constructions,
//!   plus the post-selected evaluation engine.
//! - [`analysis`]: the input-state family, minimum-fidelity search and
//!   efficiency sweeps.
//! - [`tuner`]: beamsplitter-ratio optimization of the KLM gate and its
//!   success-probability cost.
//! - [`acceptance`]: the end-to-end verification suite used by the CLI
//!   `verify` command.

pub mod acceptance;
pub mod analysis;
pub mod fock;
pub mod gates;
pub mod optics;
pub mod optim;
pub mod tuner;

pub use fock::{C64, DensityOperator, FockBasis, FockError, PureState};
