use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinglass_core::format::parse_instance;
use spinglass_core::genbench::{
    generate, random_planar_embedding, Distribution3, GeneratorKind, GeneratorSpec,
};
use spinglass_core::lattice::{strip_dp_min, LatticeInstance};
use spinglass_core::oracle::brute_force_min;
use spinglass_core::planar_exact::planar_exact_min;
use spinglass_core::solve::{solve, Method, SolveOptions};
use spinglass_core::treedec::{build_tree_decomposition, td_dp_min};
use spinglass_core::verify::{verify, VerifyOptions};
use spinglass_core::{Edge, IsingInstance, PlanarEmbedding, SpinAssignment};

fn planar_instance(seed: u64, n: usize, p: f64, fields: bool) -> (IsingInstance, PlanarEmbedding) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let emb = random_planar_embedding(&mut rng, n, p).unwrap();
    let edges = emb
        .endpoints()
        .iter()
        .map(|&(u, v)| Edge::new(u, v, rng.random_range(-4i32..=4) as f64))
        .collect();
    let f = (0..n)
        .map(|_| {
            if fields {
                rng.random_range(-2i32..=2) as f64
            } else {
                0.0
            }
        })
        .collect();
    (IsingInstance::new(n, edges, f).unwrap(), emb)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn euler_formula_holds(seed in any::<u64>(), n in 3usize..40, p in 0.0f64..0.7) {
        let (inst, emb) = planar_instance(seed, n, p, false);
        let c = inst.components().len() as i64;
        let chi = n as i64 - emb.edge_count() as i64 + emb.faces().len() as i64;
        prop_assert_eq!(chi, 1 + c);
        prop_assert!(inst.is_simple());
    }

    #[test]
    fn planar_exact_matches_brute_force(seed in any::<u64>(), n in 3usize..14, p in 0.0f64..0.6) {
        let (inst, emb) = planar_instance(seed, n, p, false);
        let exact = planar_exact_min(&inst, &emb).unwrap();
        prop_assert_eq!(exact.energy, brute_force_min(&inst).unwrap().0);
    }

    #[test]
    fn tree_decomposition_dp_is_exact(seed in any::<u64>(), n in 2usize..14, p in 0.0f64..0.6) {
        let (inst, _) = planar_instance(seed, n, p, true);
        let pairs: Vec<(usize, usize)> = inst.edges().iter().map(|e| (e.u, e.v)).collect();
        let td = build_tree_decomposition(n, &pairs, n).unwrap();
        prop_assert!(td.validate(n, &pairs).is_ok());
        let (e, s) = td_dp_min(&inst, &td).unwrap();
        prop_assert_eq!(e, brute_force_min(&inst).unwrap().0);
        prop_assert_eq!(inst.energy(&s).unwrap(), e);
    }

    #[test]
    fn strip_dp_matches_brute_force(seed in any::<u64>(), w in 1usize..6, h in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |k: usize| (0..k).map(|_| rng.random_range(-3i32..=3) as f64).collect::<Vec<_>>();
        let hc = draw(h * (w - 1));
        let vc = draw((h - 1) * w);
        let f = draw(w * h);
        let l = LatticeInstance::new(w, h, hc, vc, f).unwrap();
        prop_assert_eq!(strip_dp_min(&l).unwrap().0, brute_force_min(&l.to_instance()).unwrap().0);
    }

    #[test]
    fn global_flip_symmetry(seed in any::<u64>(), n in 3usize..20, bits in any::<u64>()) {
        let (inst, _) = planar_instance(seed, n, 0.2, false);
        let s = SpinAssignment::from_bits(n, bits);
        prop_assert_eq!(inst.energy(&s).unwrap(), inst.energy(&s.negated()).unwrap());
    }

    #[test]
    fn generated_files_round_trip(seed in any::<u64>(), kind in 0usize..5) {
        let spec = match kind {
            0 => GeneratorSpec { couplings: Distribution3::Gaussian { sigma: 1.5 }, ..GeneratorSpec::new(GeneratorKind::Lattice, seed).with_grid(3, 4) },
            1 => GeneratorSpec { delete_prob: 0.3, ..GeneratorSpec::new(GeneratorKind::RandomPlanar, seed).with_n(12) },
            2 => GeneratorSpec::new(GeneratorKind::Star, seed).with_n(4),
            3 => GeneratorSpec::new(GeneratorKind::QuantumPlanar, seed).with_n(5),
            _ => GeneratorSpec::new(GeneratorKind::QuantumLattice, seed).with_grid(2, 3),
        };
        let inst = generate(&spec).unwrap();
        let text = inst.to_json().unwrap();
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(back.kind(), inst.kind());
        prop_assert_eq!(back.to_json().unwrap(), text);
    }
}

/// Every applicable method on every generated kind produces a result that
/// the verifier accepts.
#[test]
fn solve_then_verify_everything() {
    let specs = [
        GeneratorSpec::new(GeneratorKind::Lattice, 1).with_grid(4, 4),
        GeneratorSpec::new(GeneratorKind::RandomPlanar, 2).with_n(16),
        GeneratorSpec::new(GeneratorKind::QuantumLattice, 3).with_grid(3, 3),
        GeneratorSpec::new(GeneratorKind::QuantumPlanar, 4).with_n(8),
        GeneratorSpec::new(GeneratorKind::Star, 5).with_n(7),
    ];
    for spec in specs {
        let inst = generate(&spec).unwrap();
        for &m in Method::applicable(inst.kind()) {
            for eps in [0.25, 0.5, 1.0] {
                let opts = SolveOptions {
                    epsilon: eps,
                    ..SolveOptions::default()
                };
                let r = solve(&inst, m, &opts)
                    .unwrap_or_else(|e| panic!("{m} on {}: {e}", inst.kind()));
                let rep = verify(&inst, &r, &VerifyOptions::default()).unwrap();
                assert!(
                    rep.passed(),
                    "{m} eps {eps} on {}: {:?}",
                    inst.kind(),
                    rep.checks
                );
                if !m.uses_epsilon() {
                    break;
                }
            }
        }
    }
}
