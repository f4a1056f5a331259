//! Exact and approximate ground-state solvers for classical and quantum
//! Ising spin glasses on planar graphs.

pub mod embedding;
pub mod error;
pub mod format;
pub mod genbench;
pub mod instance;
pub mod lattice;
pub mod matching;
pub mod oracle;
pub mod outerplanar;
pub mod planar_exact;
pub mod quantum;
pub mod result;
pub mod solve;
pub mod treedec;
pub mod verify;

pub use embedding::{Face, PlanarEmbedding};
pub use error::{Error, Result};
pub use instance::{Edge, IsingInstance, NumericMode, SpinAssignment};
pub use oracle::{brute_force_min, BoundCertificate, CertificateKind};
pub use result::{Diagnostics, Guarantee, SolveResult, Witness};
