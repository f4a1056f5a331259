//! 2-local qubit Hamiltonians, exact diagonalization and the extensivity
//! machinery built on Pauli frames.

mod certificate;
mod eigen;
mod hamiltonian;
mod kpr;
mod pauli;
mod star;

pub use certificate::{greedy_coloring, product_state_certificate, ProductCertificate};
pub use eigen::{exact_diag_min, lanczos_min, spectrum, EigenOptions, GroundState, LinearOperator};
pub use hamiltonian::{PauliOperator, QuantumEdge, QuantumIsingHamiltonian};
pub use kpr::{
    bfs_layer_cut, bounded_degree_ptas, bounded_degree_ptas_min, classes_for_delta, kpr_decompose,
    ComponentReport, CutReport, KprOutcome, RoundRecord,
};
pub use pauli::{
    dominating_coupling, frames_for_colors, is_strength_two_array, local_norm, pauli_frames,
    term_norm, Pauli, PauliTwoBody, FRAME_TABLE, PAULIS,
};
pub use star::{
    coarse_grain, collective_spin, star_ptas_min, symmetric_subspace_min,
    symmetric_subspace_min_with, BathTerm, GroupedStar, ReducedStarOperator, StarInstance,
    STAR_DENSE_CAP, STAR_DIMENSION_CAP,
};

/// `−Σ‖L_u‖/5 − W/(5·3⁵)` with `W = Σ‖Q_uv‖`.
pub fn quantum_extensivity_bound(h: &QuantumIsingHamiltonian) -> f64 {
    -h.local_weight() / 5.0 - h.coupling_weight() / (5.0 * 243.0)
}
