//! Batch front end for the `ttnn` completion library: input loading, masked
//! experiments over r, reports and recovered outputs.

pub mod args;
pub mod experiment;
pub mod input;
pub mod output;
pub mod report;
pub mod tensor_file;

pub use args::Args;
pub use experiment::{run_and_write, run_experiment, RunConfig};
