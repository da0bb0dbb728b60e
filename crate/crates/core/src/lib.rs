//! Reactive synthesis for safety specifications given as AIGER monitor circuits.
//!
//! The crate is organised bottom-up:
//!
//! * [`aiger`] reads and writes and-inverter graphs in both AIGER profiles.
//! * [`bdd`] is the reduced ordered BDD engine used for all symbolic work.
//! * [`game`] turns a monitor circuit into a safety game and solves it.
//! * [`synth`] extracts a strategy and encodes it as a solution circuit.
//! * [`verify`] checks solutions independently of the solver.
//! * [`harness`] runs solver configurations over benchmark suites and ranks them.
//! * [`oracle`] and [`testgen`] are explicit-state references and random
//!   circuit generators used by the test suites.

pub mod aiger;
pub mod bdd;
pub mod game;
pub mod harness;
pub mod limits;
pub mod oracle;
pub mod synth;
pub mod testgen;
pub mod verify;
