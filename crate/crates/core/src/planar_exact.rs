//! Exact ground states of field-free planar instances.
//!
//! Edge `(u, v)` is satisfied when `c_uv·S_u·S_v = −|c_uv|`; a positive
//! coupling wants anti-aligned spins, a nonpositive one aligned spins. For
//! any assignment `Q(S) = −W + 2·Σ_unsatisfied |c_uv|`. Around every face
//! the number of unsatisfied edges has the parity of the number of positive
//! couplings, so the unsatisfied edges of an optimum form a minimum-weight
//! T-join in the dual, with T the faces seeing an odd number of positive
//! couplings. The T-join is assembled from shortest paths and a
//! minimum-weight perfect matching.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::{dart_edge, PlanarEmbedding};
use crate::error::{Error, Result};
use crate::instance::{IsingInstance, SpinAssignment};
use crate::matching::{min_weight_perfect_matching, MatchWeight, MatchingEngine};
use crate::result::{Guarantee, SolveResult};

/// One vertex per face, one edge per primal edge (same index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualGraph {
    pub face_count: usize,
    /// `edges[k]` joins the two faces on either side of primal edge `k`.
    pub edges: Vec<(usize, usize)>,
    /// `|c_k|`.
    pub weights: Vec<f64>,
    pub outer_face: usize,
}

impl DualGraph {
    pub fn degree(&self, face: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| (a == face) as usize + (b == face) as usize)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TJoin {
    /// Dual (equivalently primal) edge ids, sorted.
    pub edges: Vec<usize>,
    pub weight: f64,
}

fn check_embedding(instance: &IsingInstance, embedding: &PlanarEmbedding) -> Result<()> {
    if !embedding.matches_edges(instance.n(), instance.edges().iter().map(|e| (e.u, e.v))) {
        return Err(Error::InvalidInstance(
            "embedding edges do not match the instance edges".into(),
        ));
    }
    Ok(())
}

pub fn build_dual(embedding: &PlanarEmbedding, instance: &IsingInstance) -> Result<DualGraph> {
    check_embedding(instance, embedding)?;
    Ok(DualGraph {
        face_count: embedding.faces().len(),
        edges: (0..embedding.edge_count())
            .map(|k| embedding.edge_faces(k))
            .collect(),
        weights: instance.edges().iter().map(|e| e.coupling.abs()).collect(),
        outer_face: embedding.outer_face(),
    })
}

/// Faces whose boundary walk meets an odd number of positive couplings.
/// A bridge is walked twice by the same face and so never changes parity.
pub fn frustrated_faces(
    instance: &IsingInstance,
    embedding: &PlanarEmbedding,
) -> Result<Vec<usize>> {
    check_embedding(instance, embedding)?;
    let mut t = Vec::new();
    for (f, face) in embedding.faces().iter().enumerate() {
        let positive = face
            .darts
            .iter()
            .filter(|&&d| instance.edges()[dart_edge(d)].coupling > 0.0)
            .count();
        if positive % 2 == 1 {
            t.push(f);
        }
    }
    if t.len() % 2 == 1 {
        return Err(Error::Parity(format!("{} frustrated faces", t.len())));
    }
    Ok(t)
}

/// Weights usable both for exact (`i64`) and float T-joins.
trait JoinWeight: MatchWeight {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl JoinWeight for i64 {
    fn from_f64(x: f64) -> Self {
        x as i64
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl JoinWeight for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

#[derive(PartialEq)]
struct HeapItem<W>(W, usize);

impl<W: PartialOrd> Eq for HeapItem<W> {}

impl<W: PartialOrd> PartialOrd for HeapItem<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<W: PartialOrd> Ord for HeapItem<W> {
    // Reversed for a min-heap; ties by vertex id.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Dijkstra on the dual. On equal distances the predecessor edge with the
/// smaller id wins, which makes the paths deterministic.
fn shortest_paths<W: JoinWeight>(
    adj: &[Vec<(usize, usize)>],
    w: &[W],
    source: usize,
) -> (Vec<Option<W>>, Vec<usize>) {
    let mut dist: Vec<Option<W>> = vec![None; adj.len()];
    let mut pred = vec![usize::MAX; adj.len()];
    let mut done = vec![false; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(W::zero());
    heap.push(HeapItem(W::zero(), source));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, e) in &adj[u] {
            if done[v] {
                continue;
            }
            let nd = d + w[e];
            let better = match dist[v] {
                None => true,
                Some(old) => nd < old || (nd == old && e < pred[v]),
            };
            if better {
                dist[v] = Some(nd);
                pred[v] = e;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    (dist, pred)
}

/// Minimum-weight T-join: shortest paths between T vertices, a minimum
/// perfect matching on those distances (per dual component), then the
/// symmetric difference of the matched paths.
pub fn min_weight_tjoin(dual: &DualGraph, t: &[usize], exact: bool) -> Result<TJoin> {
    min_weight_tjoin_with(dual, t, exact, MatchingEngine::Auto)
}

pub fn min_weight_tjoin_with(
    dual: &DualGraph,
    t: &[usize],
    exact: bool,
    engine: MatchingEngine,
) -> Result<TJoin> {
    if exact {
        tjoin_impl::<i64>(dual, t, engine)
    } else {
        tjoin_impl::<f64>(dual, t, engine)
    }
}

fn tjoin_impl<W: JoinWeight>(
    dual: &DualGraph,
    t: &[usize],
    engine: MatchingEngine,
) -> Result<TJoin> {
    if t.len() % 2 == 1 {
        return Err(Error::Parity(format!("|T| = {} is odd", t.len())));
    }
    let nf = dual.face_count;
    let mut adj = vec![Vec::new(); nf];
    for (k, &(a, b)) in dual.edges.iter().enumerate() {
        if a != b {
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
    }
    let w: Vec<W> = dual.weights.iter().map(|&x| W::from_f64(x)).collect();

    // Group T by dual component.
    let mut comp = vec![usize::MAX; nf];
    let mut ncomp = 0;
    for s in 0..nf {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = ncomp;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = ncomp;
                    queue.push_back(v);
                }
            }
        }
        ncomp += 1;
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for &f in t {
        groups[comp[f]].push(f);
    }

    let mut in_join = vec![false; dual.edges.len()];
    for group in groups.iter().filter(|g| !g.is_empty()) {
        if group.len() % 2 == 1 {
            return Err(Error::Parity(
                "odd number of frustrated faces in a component".into(),
            ));
        }
        let k = group.len();
        let trees: Vec<(Vec<Option<W>>, Vec<usize>)> =
            group.iter().map(|&s| shortest_paths(&adj, &w, s)).collect();
        let mut dist = vec![W::zero(); k * k];
        for i in 0..k {
            for j in 0..k {
                dist[i * k + j] = trees[i].0[group[j]]
                    .ok_or_else(|| Error::Internal("T vertex unreachable".into()))?;
            }
        }
        let m = min_weight_perfect_matching(k, &dist, engine)?;
        for &(i, j) in &m.pairs {
            let pred = &trees[i].1;
            let mut v = group[j];
            while v != group[i] {
                let e = pred[v];
                in_join[e] = !in_join[e];
                let (a, b) = dual.edges[e];
                v = if a == v { b } else { a };
            }
        }
    }

    let mut parity = vec![false; nf];
    for (e, &on) in in_join.iter().enumerate() {
        if on {
            let (a, b) = dual.edges[e];
            parity[a] ^= true;
            parity[b] ^= true;
        }
    }
    let mut expected = vec![false; nf];
    for &f in t {
        expected[f] = true;
    }
    if parity != expected {
        return Err(Error::Internal("T-join parity check failed".into()));
    }
    let edges: Vec<usize> = (0..dual.edges.len()).filter(|&e| in_join[e]).collect();
    let weight = edges.iter().fold(W::zero(), |acc, &e| acc + w[e]).to_f64();
    Ok(TJoin { edges, weight })
}

/// Exact minimum of a field-free instance given a planar embedding whose
/// edge `k` is instance edge `k`.
pub fn planar_exact_min(
    instance: &IsingInstance,
    embedding: &PlanarEmbedding,
) -> Result<SolveResult> {
    planar_exact_min_with(instance, embedding, MatchingEngine::Auto)
}

pub fn planar_exact_min_with(
    instance: &IsingInstance,
    embedding: &PlanarEmbedding,
    engine: MatchingEngine,
) -> Result<SolveResult> {
    let start = Instant::now();
    if instance.has_fields() {
        return Err(Error::Unsupported(
            "the planar exact solver needs an instance without fields".into(),
        ));
    }
    let dual = build_dual(embedding, instance)?;
    let t = frustrated_faces(instance, embedding)?;
    let join = min_weight_tjoin_with(&dual, &t, instance.is_exact(), engine)?;
    let mut unsatisfied = vec![false; instance.edges().len()];
    for &e in &join.edges {
        unsatisfied[e] = true;
    }
    let spins = witness_from_unsatisfied(instance, &unsatisfied)?;

    let energy = instance.energy(&spins)?;
    let predicted = -instance.coupling_weight() + 2.0 * join.weight;
    let consistent = if instance.is_exact() {
        instance.energy_exact(&spins)?
            == -instance.coupling_weight_exact()? + 2 * (join.weight as i64)
    } else {
        (energy - predicted).abs() <= 1e-9 * (1.0 + predicted.abs())
    };
    if !consistent {
        return Err(Error::Internal(format!(
            "witness energy {energy} differs from -W + 2 w(J) = {predicted}"
        )));
    }
    let mut result = SolveResult::classical("planar-exact", instance, spins, Guarantee::Exact)?;
    result.diagnostics.subproblems = 1;
    result.diagnostics.note("frustrated_faces", t.len());
    result.diagnostics.note("tjoin_weight", join.weight);
    result.diagnostics.note("faces", embedding.faces().len());
    result.diagnostics.set_wall(start.elapsed());
    Ok(result)
}

/// Roots a BFS spanning forest at the smallest vertex of each component with
/// spin `+1` and propagates so that exactly the flagged edges are
/// unsatisfied; fails if a non-tree edge disagrees.
pub fn witness_from_unsatisfied(
    instance: &IsingInstance,
    unsatisfied: &[bool],
) -> Result<SpinAssignment> {
    let n = instance.n();
    let adj = instance.adjacency();
    // Relative sign S_u·S_v demanded by each edge.
    let want = |k: usize| -> i8 {
        let aligned = instance.edges()[k].coupling <= 0.0;
        if aligned != unsatisfied[k] {
            1
        } else {
            -1
        }
    };
    let mut spins = vec![0i8; n];
    for root in 0..n {
        if spins[root] != 0 {
            continue;
        }
        spins[root] = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, k) in &adj[u] {
                if spins[v] == 0 {
                    spins[v] = spins[u] * want(k);
                    queue.push_back(v);
                }
            }
        }
    }
    for (k, e) in instance.edges().iter().enumerate() {
        if spins[e.u] * spins[e.v] != want(k) {
            return Err(Error::Internal(format!(
                "edge {k} is inconsistent with the unsatisfied set"
            )));
        }
    }
    SpinAssignment::from_spins(spins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::grid_embedding;
    use crate::lattice::LatticeInstance;
    use crate::oracle::brute_force_min;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle(c: [f64; 3]) -> (IsingInstance, PlanarEmbedding) {
        let inst =
            IsingInstance::from_couplings(3, &[(0, 1, c[0]), (1, 2, c[1]), (0, 2, c[2])]).unwrap();
        let emb = PlanarEmbedding::from_coordinates(
            3,
            vec![(0, 1), (1, 2), (0, 2)],
            &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
        )
        .unwrap();
        (inst, emb)
    }

    #[test]
    fn triangle_duals_and_frustration() {
        let (inst, emb) = triangle([1.0, 1.0, 1.0]);
        let dual = build_dual(&emb, &inst).unwrap();
        assert_eq!(dual.face_count, 2);
        assert!(dual.edges.iter().all(|&(a, b)| a != b));
        assert_eq!(frustrated_faces(&inst, &emb).unwrap().len(), 2);
        let r = planar_exact_min(&inst, &emb).unwrap();
        assert_eq!(r.energy, -1.0);

        // (+1, +1, −1) has two positive edges per face: unfrustrated.
        let (inst, emb) = triangle([1.0, 1.0, -1.0]);
        assert!(frustrated_faces(&inst, &emb).unwrap().is_empty());
        assert_eq!(planar_exact_min(&inst, &emb).unwrap().energy, -3.0);
        assert_eq!(brute_force_min(&inst).unwrap().0, -3.0);
    }

    #[test]
    fn grid_dual_outer_degree() {
        let l = LatticeInstance::uniform(3, 3, 1.0).unwrap();
        let dual = build_dual(&l.embedding(), &l.to_instance()).unwrap();
        assert_eq!(dual.face_count, 5);
        assert_eq!(dual.degree(dual.outer_face), 8);
    }

    #[test]
    fn single_edge_self_loop() {
        let inst = IsingInstance::from_couplings(2, &[(0, 1, 3.0)]).unwrap();
        let emb = PlanarEmbedding::new(vec![(0, 1)], vec![vec![0], vec![1]], 0).unwrap();
        let dual = build_dual(&emb, &inst).unwrap();
        assert_eq!(dual.face_count, 1);
        assert_eq!(dual.edges, vec![(0, 0)]);
        let r = planar_exact_min(&inst, &emb).unwrap();
        assert_eq!(r.energy, -3.0);
        assert_eq!(r.witness.spins().unwrap().spins(), &[1, -1]);
    }

    #[test]
    fn tjoin_small_cases() {
        let dual = DualGraph {
            face_count: 2,
            edges: vec![(0, 1), (0, 1), (0, 1)],
            weights: vec![1.0, 1.0, 1.0],
            outer_face: 1,
        };
        let j = min_weight_tjoin(&dual, &[0, 1], true).unwrap();
        assert_eq!(j.weight, 1.0);
        assert_eq!(j.edges.len(), 1);
        let empty = min_weight_tjoin(&dual, &[], true).unwrap();
        assert!(empty.edges.is_empty());
        assert!(matches!(
            min_weight_tjoin(&dual, &[0], true),
            Err(Error::Parity(_))
        ));
    }

    #[test]
    fn rejects_fields() {
        let inst = IsingInstance::new(
            2,
            vec![crate::instance::Edge::new(0, 1, 1.0)],
            vec![1.0, 0.0],
        )
        .unwrap();
        let emb = PlanarEmbedding::new(vec![(0, 1)], vec![vec![0], vec![1]], 0).unwrap();
        assert!(matches!(
            planar_exact_min(&inst, &emb),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn grids_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (w, h) in [(2, 2), (3, 3), (4, 3), (4, 4), (5, 4)] {
            for _ in 0..10 {
                let hc = (0..h * (w - 1))
                    .map(|_| rng.random_range(-5..=5) as f64)
                    .collect();
                let vc = (0..(h - 1) * w)
                    .map(|_| rng.random_range(-5..=5) as f64)
                    .collect();
                let l = LatticeInstance::new(w, h, hc, vc, vec![0.0; w * h]).unwrap();
                let inst = l.to_instance();
                let emb = grid_embedding(w, h);
                let r = planar_exact_min(&inst, &emb).unwrap();
                assert_eq!(r.energy, brute_force_min(&inst).unwrap().0);
                let b = planar_exact_min_with(&inst, &emb, MatchingEngine::Blossom).unwrap();
                assert_eq!(b.energy, r.energy);
                // Join weight bound.
                let w_total = inst.coupling_weight();
                assert!(3.0 * (r.energy + w_total) / 2.0 <= w_total);
            }
        }
    }

    #[test]
    fn float_couplings() {
        let (inst, emb) = triangle([0.5, 0.25, 0.75]);
        let r = planar_exact_min(&inst, &emb).unwrap();
        assert!((r.energy - brute_force_min(&inst).unwrap().0).abs() < 1e-12);
    }
}
