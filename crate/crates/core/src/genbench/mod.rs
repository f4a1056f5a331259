//! Seeded instance generators and the benchmark suite runner.

mod bench;
mod generate;

pub use bench::{
    oracle_value, run_suite, BenchReport, BenchRow, BenchSuite, InstanceSource, CSV_COLUMNS,
};
pub use generate::{
    generate, random_bath_term, random_planar_embedding, Distribution3, GeneratorKind,
    GeneratorSpec,
};
