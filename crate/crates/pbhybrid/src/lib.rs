//! OPB input and output, the `pbhybrid` command line and the benchmark
//! harness around [`pbhybrid_core`].

pub mod bench;
pub mod cli;
pub mod opb;

pub use pbhybrid_core as core;
