//! Seeded fixtures shared by the criterion benches.

use spinglass_core::format::AnyInstance;
use spinglass_core::genbench::{generate, Distribution3, GeneratorKind, GeneratorSpec};
use spinglass_core::lattice::LatticeInstance;
use spinglass_core::quantum::QuantumIsingHamiltonian;
use spinglass_core::{IsingInstance, PlanarEmbedding};

pub fn lattice(width: usize, height: usize, seed: u64) -> LatticeInstance {
    let spec = GeneratorSpec {
        couplings: Distribution3::PlusMinusOne,
        ..GeneratorSpec::new(GeneratorKind::Lattice, seed).with_grid(width, height)
    };
    match generate(&spec).expect("valid spec") {
        AnyInstance::Lattice(l) => l,
        _ => unreachable!(),
    }
}

/// A random planar triangulation with integer couplings.
pub fn planar(n: usize, seed: u64) -> (IsingInstance, PlanarEmbedding) {
    match generate(&GeneratorSpec::new(GeneratorKind::RandomPlanar, seed).with_n(n))
        .expect("valid spec")
    {
        AnyInstance::Classical(f) => (
            f.instance().expect("generated instance"),
            f.embedding()
                .expect("generated embedding")
                .expect("embedding present"),
        ),
        _ => unreachable!(),
    }
}

pub fn quantum_grid(width: usize, height: usize, seed: u64) -> QuantumIsingHamiltonian {
    let spec = GeneratorSpec::new(GeneratorKind::QuantumLattice, seed).with_grid(width, height);
    match generate(&spec).expect("valid spec") {
        AnyInstance::Quantum(q) => q.hamiltonian().expect("generated hamiltonian"),
        _ => unreachable!(),
    }
}
