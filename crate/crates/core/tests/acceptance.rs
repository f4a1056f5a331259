//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every value is checked against an independent oracle computed
//! here (brute force, dense or Lanczos diagonalization, explicit norms).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinglass_core::embedding::grid_embedding;
use spinglass_core::error::Error;
use spinglass_core::genbench::{random_bath_term, random_planar_embedding};
use spinglass_core::lattice::{
    dp_step, lattice_ptas_min, row_energies, strip_dp_min, LatticeInstance,
};
use spinglass_core::oracle::{
    brute_force_min_capped, check_classical_extensivity, check_quantum_extensivity,
};
use spinglass_core::outerplanar::{planar_ptas_report, PlanarPtasOptions};
use spinglass_core::planar_exact::planar_exact_min;
use spinglass_core::quantum::{
    bounded_degree_ptas, coarse_grain, dominating_coupling, exact_diag_min, frames_for_colors,
    pauli_frames, spectrum, star_ptas_min, symmetric_subspace_min, BathTerm, EigenOptions,
    GroupedStar, Pauli, PauliTwoBody, QuantumEdge, QuantumIsingHamiltonian, StarInstance,
};
use spinglass_core::{Edge, IsingInstance, PlanarEmbedding};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

const BF_CAP: usize = 28;

fn brute(inst: &IsingInstance) -> f64 {
    brute_force_min_capped(inst, BF_CAP).expect("brute force").0
}

fn triangle_embedding() -> PlanarEmbedding {
    PlanarEmbedding::new(
        vec![(0, 1), (1, 2), (0, 2)],
        vec![vec![0, 4], vec![1, 2], vec![3, 5]],
        0,
    )
    .unwrap()
}

fn random_planar(rng: &mut ChaCha8Rng, n: usize, fields: bool) -> (IsingInstance, PlanarEmbedding) {
    let p = [0.0, 0.2, 0.5][rng.random_range(0..3)];
    let emb = random_planar_embedding(rng, n, p).unwrap();
    let edges = emb
        .endpoints()
        .iter()
        .map(|&(u, v)| Edge::new(u, v, rng.random_range(-5i32..=5) as f64))
        .collect();
    let f = (0..n)
        .map(|_| {
            if fields {
                rng.random_range(-3i32..=3) as f64
            } else {
                0.0
            }
        })
        .collect();
    (IsingInstance::new(n, edges, f).unwrap(), emb)
}

fn random_lattice(rng: &mut ChaCha8Rng, w: usize, h: usize, fields: bool) -> LatticeInstance {
    let mut draw = |k: usize| {
        (0..k)
            .map(|_| rng.random_range(-5i32..=5) as f64)
            .collect::<Vec<_>>()
    };
    let hc = draw(h * (w - 1));
    let vc = draw((h - 1) * w);
    let f = if fields {
        draw(w * h).into_iter().map(|x| (x / 2.0).round()).collect()
    } else {
        vec![0.0; w * h]
    };
    LatticeInstance::new(w, h, hc, vc, f).unwrap()
}

fn random_term(rng: &mut ChaCha8Rng) -> PauliTwoBody {
    let mut h = [[0.0; 3]; 3];
    match rng.random_range(0..3) {
        // dense
        0 => h
            .iter_mut()
            .flatten()
            .for_each(|c| *c = rng.random_range(-1.0..1.0)),
        // sparse
        1 => {
            for _ in 0..rng.random_range(1..=3) {
                h[rng.random_range(0..3)][rng.random_range(0..3)] = rng.random_range(-2.0..2.0);
            }
        }
        // near-isotropic, where the 1/9 ratio is approached
        _ => {
            for (a, row) in h.iter_mut().enumerate() {
                for (b, c) in row.iter_mut().enumerate() {
                    let base = if a == b { 1.0 } else { 0.0 };
                    *c = base + rng.random_range(-0.05..0.05);
                }
            }
        }
    }
    if h.iter().flatten().all(|&c| c == 0.0) {
        h[0][0] = 1.0;
    }
    PauliTwoBody::new(h)
}

fn random_quantum_planar(rng: &mut ChaCha8Rng, n: usize) -> QuantumIsingHamiltonian {
    let p = [0.0, 0.3][rng.random_range(0..2)];
    let emb = random_planar_embedding(rng, n, p).unwrap();
    random_quantum_on(rng, &emb)
}

fn random_quantum_on(rng: &mut ChaCha8Rng, emb: &PlanarEmbedding) -> QuantumIsingHamiltonian {
    let n = emb.n();
    let edges = emb
        .endpoints()
        .iter()
        .map(|&(u, v)| QuantumEdge {
            u,
            v,
            term: random_term(rng),
        })
        .collect();
    let scale = [0.0, 0.5, 1.5][rng.random_range(0..3)];
    let locals = (0..n)
        .map(|_| {
            [0; 3].map(|_| {
                if scale > 0.0 {
                    rng.random_range(-scale..scale)
                } else {
                    0.0
                }
            })
        })
        .collect();
    QuantumIsingHamiltonian::new(n, edges, locals).unwrap()
}

/// Operator norm of a Hermitian 4×4 matrix from its eigenvalues.
fn hermitian_norm(m: Matrix4<Complex64>) -> f64 {
    m.symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let tri = IsingInstance::from_couplings(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
    let bf = brute(&tri);
    let pe = planar_exact_min(&tri, &triangle_embedding())
        .unwrap()
        .energy;
    let w = tri.coupling_weight_exact().unwrap();
    let cert = check_classical_extensivity(&tri, pe).unwrap();
    let pair = IsingInstance::multigraph(
        2,
        vec![Edge::new(0, 1, 1.0), Edge::new(0, 1, -1.0)],
        vec![0.0; 2],
    )
    .unwrap();
    let pair_opt = brute(&pair);
    let pair_w = pair.coupling_weight_exact().unwrap();
    let na = matches!(
        check_classical_extensivity(&pair, pair_opt),
        Err(Error::CertificateNotApplicable(_))
    );
    let elapsed = start.elapsed();
    let pass = bf == -1.0
        && pe == -1.0
        && w == 3
        && 3 * (pe as i64) == -w
        && cert.holds
        && pair_opt == 0.0
        && pair_w == 2
        && na
        && elapsed < Duration::from_millis(1);
    outcome(
        pass,
        format!(
            "triangle opt {pe} (brute {bf}), W {w}; pair opt {pair_opt}, W {pair_w}, certificate not applicable: {na}; {:.3} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut mismatches = 0;
    let mut first = String::new();
    for k in 0..500 {
        let n = rng.random_range(3..=24);
        let (inst, emb) = random_planar(&mut rng, n, false);
        let pe = planar_exact_min(&inst, &emb).map(|r| r.energy);
        let bf = brute(&inst);
        if pe.as_ref().ok() != Some(&bf) {
            mismatches += 1;
            if first.is_empty() {
                first = format!("; first mismatch at #{k}: {pe:?} vs {bf}");
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(300),
        format!(
            "500 instances, {mismatches} mismatches, {:.1} s{first}",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut tightest = f64::NEG_INFINITY;
    for k in 0..200 {
        let n = rng.random_range(3..=16);
        let (inst, _) = random_planar(&mut rng, n, k % 2 == 1);
        let opt = brute(&inst);
        let w = inst.coupling_weight();
        // Integer data, so the comparison is exact.
        if 3.0 * opt > -w {
            violations += 1;
        }
        if w > 0.0 {
            tightest = tightest.max(3.0 * opt / w);
        }
    }
    outcome(
        violations == 0,
        format!("200 instances, {violations} violations, max 3·opt/W = {tightest:.4}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    let mut mismatches = 0;
    let mut shapes = Vec::new();
    for w in 1..=20 {
        for h in 1..=20 / w {
            for _ in 0..3 {
                shapes.push((w, h));
            }
        }
    }
    for _ in 0..500 {
        let w = rng.random_range(1..=20);
        shapes.push((w, rng.random_range(1..=20 / w)));
    }
    for (k, (w, h)) in shapes.into_iter().enumerate() {
        let l = random_lattice(&mut rng, w, h, k % 2 == 0);
        let dp = strip_dp_min(&l).unwrap().0;
        let bf = brute(&l.to_instance());
        checked += 1;
        if dp != bf {
            mismatches += 1;
        }
    }
    // Time per row transfer at fixed r; the solver itself always runs along
    // the shorter side, so the width is varied through the kernel directly.
    let mut times = Vec::new();
    for s in 12..=15 {
        let l = random_lattice(&mut rng, s, 3, false);
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            let mut table = row_energies(&l, 0);
            for y in 1..l.height() {
                let vc: Vec<f64> = (0..s).map(|x| l.vc(x, y - 1)).collect();
                table = dp_step(&table, &row_energies(&l, y), &vc).0;
            }
            std::hint::black_box(&table);
            best = best.min(t.elapsed().as_secs_f64());
        }
        times.push(best);
    }
    let ratios: Vec<f64> = times.windows(2).map(|p| p[1] / p[0]).collect();
    let timing_ok = ratios.iter().all(|r| (3.2..=4.8).contains(r));
    outcome(
        mismatches == 0 && timing_ok,
        format!(
            "{checked} grids, {mismatches} mismatches; time ratios s=12→13, 13→14, 14→15: {}",
            ratios
                .iter()
                .map(|r| format!("{r:.2}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lattices: Vec<(LatticeInstance, f64)> = (0..100)
        .map(|k| {
            let l = random_lattice(&mut rng, 5, 5, k % 2 == 1);
            let opt = brute(&l.to_instance());
            (l, opt)
        })
        .collect();
    let mut violations = 0;
    let mut worst = 0.0f64;
    for eps in [1.0 / 2.0, 1.0 / 3.0, 1.0 / 4.0] {
        for (l, opt) in &lattices {
            let e = lattice_ptas_min(l, eps).unwrap().energy;
            let tol = 1e-9 * (1.0 + opt.abs());
            if !(e >= opt - tol && e <= (1.0 - eps) * opt + tol) {
                violations += 1;
            }
            if *opt < 0.0 {
                worst = worst.max((e - opt) / opt.abs() / eps);
            }
        }
    }
    outcome(
        violations == 0,
        format!("300 runs, {violations} violations, max observed error / epsilon = {worst:.3}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eps = 0.25;
    let mut violations = 0;
    let mut bad_tds = 0;
    let mut tds = 0;
    for k in 0..100 {
        let n = rng.random_range(3..=20);
        let (inst, emb) = random_planar(&mut rng, n, k % 2 == 1);
        let opt = brute(&inst);
        let rep = planar_ptas_report(&inst, &emb, eps, &PlanarPtasOptions::default()).unwrap();
        let e = rep.result.energy;
        let w = inst.coupling_weight();
        if e > opt + 2.0 * eps * w + 1e-9 || e < opt - 1e-9 {
            violations += 1;
        }
        for d in &rep.decompositions {
            tds += 1;
            if d.td.validate(d.n, &d.edges).is_err()
                || !independent_td_check(d.n, &d.edges, &d.td.bags, &d.td.parent)
            {
                bad_tds += 1;
            }
        }
    }
    outcome(
        violations == 0 && bad_tds == 0,
        format!(
            "100 instances, {violations} bound violations; {tds} decompositions, {bad_tds} invalid"
        ),
    )
}

/// Coverage of vertices and edges, and connectedness of each vertex's bags
/// in the tree, checked from scratch.
fn independent_td_check(
    n: usize,
    edges: &[(usize, usize)],
    bags: &[Vec<usize>],
    parent: &[Option<usize>],
) -> bool {
    let m = bags.len();
    if parent.len() != m {
        return false;
    }
    if m == 0 {
        return n == 0;
    }
    // A single tree: m − 1 parent links and every bag reaches the root.
    if parent.iter().filter(|p| p.is_some()).count() != m - 1 {
        return false;
    }
    for start in 0..m {
        let (mut b, mut steps) = (start, 0);
        while let Some(p) = parent[b] {
            b = p;
            steps += 1;
            if steps > m {
                return false;
            }
        }
    }
    let holds = |v: usize| -> Vec<bool> { bags.iter().map(|bag| bag.contains(&v)).collect() };
    for v in 0..n {
        let h = holds(v);
        let count = h.iter().filter(|&&x| x).count();
        if count == 0 {
            return false;
        }
        let links = (0..m)
            .filter(|&b| h[b] && parent[b].is_some_and(|p| h[p]))
            .count();
        if links + 1 != count {
            return false;
        }
    }
    edges
        .iter()
        .all(|&(u, v)| bags.iter().any(|b| b.contains(&u) && b.contains(&v)))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = EigenOptions::default();
    let mut violations = 0;
    let mut slack = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.random_range(3..=12);
        let h = random_quantum_planar(&mut rng, n);
        let lambda = exact_diag_min(&h, &opts).unwrap().energy;
        let cert = check_quantum_extensivity(&h, lambda);
        let bound = -h.local_weight() / 5.0 - h.coupling_weight() / 1215.0;
        if lambda > bound + 1e-8 || !cert.holds || (cert.bound_value - bound).abs() > 1e-12 {
            violations += 1;
        }
        slack = slack.min(bound - lambda);
    }
    let mut kw_fail = 0;
    let mut kw_max = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(3..=10);
        let h = random_quantum_planar(&mut rng, n);
        let a = spectrum(&h, 10).unwrap();
        let b = spectrum(&h.with_negated_locals(), 10).unwrap();
        let diff = a
            .iter()
            .zip(&b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        kw_max = kw_max.max(diff);
        if a.len() != b.len() || diff > 1e-8 {
            kw_fail += 1;
        }
    }
    outcome(
        violations == 0 && kw_fail == 0,
        format!(
            "100 instances, {violations} violations, min slack {slack:.4}; spectrum symmetry on 50, {kw_fail} failures, max deviation {kw_max:.2e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..10_000 {
        let term = random_term(&mut rng);
        let norm = hermitian_norm(term.matrix());
        let max_c = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .map(|(a, b)| term.coef(Pauli::from_index(a), Pauli::from_index(b)).abs())
            .fold(0.0f64, f64::max);
        let picked = dominating_coupling(&term).map(|(_, _, c)| c.abs());
        if max_c < norm / 9.0 - 1e-12 || picked.ok() != Some(max_c) {
            violations += 1;
        }
        min_ratio = min_ratio.min(max_c / norm);
    }
    let table_ok =
        strength_two(&pauli_frames()) && (1..=6).all(|k| strength_two(&frames_for_colors(k)));
    outcome(
        violations == 0 && table_ok,
        format!(
            "10000 terms, {violations} violations, min |c|/‖Q‖ = {min_ratio:.4} (1/9 = {:.4}); frame tables orthogonal: {table_ok}",
            1.0 / 9.0
        ),
    )
}

/// Every pair of columns shows each of the nine Pauli pairs equally often.
fn strength_two(rows: &[Vec<Pauli>]) -> bool {
    let k = rows[0].len();
    for c1 in 0..k {
        for c2 in c1 + 1..k {
            let mut counts = [0usize; 9];
            for r in rows {
                counts[r[c1].index() * 3 + r[c2].index()] += 1;
            }
            if counts.iter().any(|&c| c * 9 != rows.len()) {
                return false;
            }
        }
    }
    rows.iter().all(|r| r.len() == k)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let opts = EigenOptions::default();
    let mut accounting = 0;
    let mut weyl = 0;
    let mut removed_total = 0usize;
    for k in 0..50 {
        // Long ladders have enough BFS layers for every class to be nonempty.
        let h = if k % 2 == 0 {
            let n = rng.random_range(4..=14);
            random_quantum_planar(&mut rng, n)
        } else {
            let len = rng.random_range(3..=7);
            random_quantum_on(&mut rng, &grid_embedding(2, len))
        };
        let eps = [0.25, 0.5, 1.0][k % 3];
        let out = bounded_degree_ptas(&h, eps, 14).unwrap();
        let norms = h.edge_norms();
        let recount: f64 = out.cut.removed_edges.iter().map(|&e| norms[e]).sum();
        let w = h.coupling_weight();
        if (recount - out.cut.removed_weight).abs() > 1e-12 * (1.0 + w)
            || recount > eps * w * (1.0 + 1e-12)
        {
            accounting += 1;
        }
        removed_total += out.cut.removed_edges.len();
        let mut keep = vec![true; h.edges().len()];
        for &e in &out.cut.removed_edges {
            keep[e] = false;
        }
        let sub = h.with_edge_mask(&keep);
        let l_full = exact_diag_min(&h, &opts).unwrap().energy;
        let l_sub = exact_diag_min(&sub, &opts).unwrap().energy;
        if (l_full - l_sub).abs() > recount + 1e-8
            || (out.result.energy - l_sub).abs() > 1e-8 * (1.0 + l_sub.abs())
        {
            weyl += 1;
        }
    }
    outcome(
        accounting == 0 && weyl == 0,
        format!("50 instances, {removed_total} edges removed in total; accounting failures {accounting}, eigenvalue-shift failures {weyl}"),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let opts = EigenOptions::default();
    let mut sym_fail = 0;
    let mut max_dev = 0.0f64;
    for _ in 0..50 {
        let m = rng.random_range(1..=3);
        let reps: Vec<BathTerm> = (0..m)
            .map(|_| random_bath_term(&mut rng, 0.5, 1.0))
            .collect();
        let n = rng.random_range(m..=12);
        let membership: Vec<usize> = (0..n)
            .map(|j| if j < m { j } else { rng.random_range(0..m) })
            .collect();
        let central = [0; 3].map(|_| rng.random_range(-0.5..0.5));
        let mut groups = vec![Vec::new(); m];
        for (j, &g) in membership.iter().enumerate() {
            groups[g].push(j);
        }
        let grouped = GroupedStar {
            central,
            groups,
            representatives: reps.clone(),
            membership: membership.clone(),
            step: 0.0,
            rounding_errors: vec![0.0; n],
        };
        let full = StarInstance {
            central,
            bath: membership.iter().map(|&g| reps[g]).collect(),
            a: 0.5,
            b: 1.0,
        };
        let l_sym = symmetric_subspace_min(&grouped).unwrap().0;
        let l_full = exact_diag_min(&full.to_hamiltonian().unwrap(), &opts)
            .unwrap()
            .energy;
        max_dev = max_dev.max((l_sym - l_full).abs());
        if (l_sym - l_full).abs() > 1e-8 {
            sym_fail += 1;
        }
    }
    let eps = 0.3;
    let mut cg_fail = 0;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let bath: Vec<BathTerm> = (0..n)
            .map(|_| random_bath_term(&mut rng, 0.5, 1.0))
            .collect();
        let star = StarInstance {
            central: [0; 3].map(|_| rng.random_range(-0.5..0.5)),
            bath,
            a: 0.5,
            b: 1.0,
        };
        let weight: f64 = star.bath.iter().map(|t| hermitian_norm(t.matrix())).sum();
        let exact = exact_diag_min(&star.to_hamiltonian().unwrap(), &opts)
            .unwrap()
            .energy;
        let approx = star_ptas_min(&star, eps).unwrap().energy;
        let grouped_full = exact_diag_min(
            &coarse_grain(&star, eps).unwrap().to_hamiltonian().unwrap(),
            &opts,
        )
        .unwrap()
        .energy;
        worst = worst.max((exact - approx).abs() / (eps * weight));
        if (exact - approx).abs() > eps * weight + 1e-8 || (approx - grouped_full).abs() > 1e-8 {
            cg_fail += 1;
        }
    }
    outcome(
        sym_fail == 0 && cg_fail == 0,
        format!(
            "50 grouped stars, {sym_fail} mismatches (max {max_dev:.2e}); 50 coarse-grained stars, {cg_fail} violations, max error / bound = {worst:.3}"
        ),
    )
}

/// Reported sizes and runtimes only; asymptotic claims are not asserted.
fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut parts = Vec::new();
    for n in [100usize, 200, 400] {
        let (inst, emb) = random_planar(&mut rng, n, false);
        let t = Instant::now();
        let e = planar_ptas_report(&inst, &emb, 0.5, &PlanarPtasOptions::default())
            .map(|r| r.result.energy);
        let ms = t.elapsed().as_secs_f64() * 1e3;
        let exact = planar_exact_min(&inst, &emb).unwrap().energy;
        match e {
            Ok(e) => parts.push(format!(
                "planar PTAS n={n}: {ms:.0} ms, ratio {:.3}",
                e / exact
            )),
            Err(err) => parts.push(format!("planar PTAS n={n}: {err}")),
        }
    }
    let h = random_quantum_on(&mut rng, &grid_embedding(2, 20));
    let t = Instant::now();
    match bounded_degree_ptas(&h, 1.0, 14) {
        Ok(o) => {
            let largest = o
                .cut
                .components
                .iter()
                .map(|c| c.vertices.len())
                .max()
                .unwrap_or(0);
            parts.push(format!(
                "KPR 2x20 ladder eps=1: largest component {largest}, {:.0} ms",
                t.elapsed().as_secs_f64() * 1e3
            ))
        }
        Err(err) => parts.push(format!("KPR 2x20 ladder eps=1: {err}")),
    }
    outcome(true, format!("reported only: {}", parts.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Outcome); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let mut failed = 0;
    for (k, f) in criteria {
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {k:>2}: {tag} ({:.1} s) {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
