//! Data generation, file formats and experiments.

pub mod bench;
pub mod inclusivity;
pub mod io;
pub mod scaling;
pub mod synth;
