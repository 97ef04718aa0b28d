//! Long-range gates with shallow dynamic circuits.
//!
//! * [`pauli`] — signed Pauli strings in symplectic form.
//! * [`stab_sim`] — stabilizer tableau and a shot executor with mid-circuit
//!   measurement, feed-forward and Pauli-frame post-processing.
//! * [`dense_sim`] — statevector oracle for small circuits (CCZ, Choi states).
//! * [`circuits`] — circuit IR, the gate-teleportation / GHZ builders and the
//!   scheduler tally.
//! * [`noise`] — Pauli-Lindblad channels, fault propagation, error budgets.
//! * [`certify`] — Monte-Carlo GHZ state and CNOT process certification.

pub mod certify;
pub mod circuits;
pub mod dense_sim;
pub mod noise;
pub mod pauli;
pub mod rng;
pub mod stab_sim;

pub use circuits::{Circuit, CircuitBuilder, FeedMode, Gate, Instruction, InstructionTally, UnitaryVariant};
pub use noise::{ErrorBudget, Family, NoiseParams, PauliLindbladChannel};
pub use pauli::{Pauli, PauliString};
pub use stab_sim::{ShotResult, StabilizerState};
