//! Density-matrix simulation of a linear-optics C-Sign gate array whose two
//! nonlinear-sign stages are realized by two-level atoms flying through
//! optical cavities.
//!
//! The crate is organized bottom-up:
//!
//! * [`fock`]: the reachable basis of four photonic rails plus two atoms,
//!   ladder operators, dual-rail encoding and the atomic partial trace.
//! * [`dynamics`]: Jaynes–Cummings eigensystem, closed-form single-cavity
//!   evolution, and the full-array Hamiltonian.
//! * [`lindblad`]: the first-order unitary-plus-dissipator stepper.
//! * [`circuit`]: beamsplitters, phase shifters, ideal references, the gate
//!   pipeline and the error metric.
//! * [`calibrate`]: analytic pre-selection of gate durations and detunings.
//! * [`sweep`]: parameter sweeps, optimal-set extraction and refinement.
//! * [`cli`]: the `csign` command-line front end.

pub mod calibrate;
pub mod circuit;
pub mod cli;
pub mod dynamics;
pub mod exec;
pub mod fock;
pub mod linalg;
pub mod lindblad;
pub mod sweep;


pub use circuit::{error_rate, GateArray, GateReport, NsModel, SimParams};
pub use sweep::{Execution, SweepRecord, SweepSpec};
pub use dynamics::{Frame, PhysParams};
pub use fock::{BasisState, DensityMatrix, PureState, StateSpace};
pub use linalg::{CMatrix, CVector, C64};
pub use lindblad::{LindbladChannel, StepSize, StepperConfig};

