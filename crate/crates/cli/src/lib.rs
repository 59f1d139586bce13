//! Library side of the `tracelasso` command-line tool: CSV interchange,
//! the synthetic experiment harness, Gram presets for the unit-ball command,
//! and perturbation-check instance builders. The binary in `main.rs` is a
//! thin argument-parsing layer over these functions.

pub mod experiment;
pub mod io;
pub mod perturb;
pub mod presets;
