//! Layer-peeling approximation for general planar instances: peel the
//! embedding into outerplanar levels, delete one residue class of
//! inter-level edges, and solve the remaining bounded-outerplanarity pieces
//! exactly over tree decompositions.

use std::collections::VecDeque;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::PlanarEmbedding;
use crate::error::{Error, Result};
use crate::instance::{IsingInstance, SpinAssignment};
use crate::oracle::brute_force_min_capped;
use crate::result::{Guarantee, SolveResult};
use crate::treedec::{build_tree_decomposition, td_dp_min, TreeDecomposition};

/// Outerplanar level of every vertex (0 = on an outer face).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPartition {
    pub level: Vec<usize>,
    /// `cross[i]`: edge ids joining level `i` to level `i + 1`.
    pub cross: Vec<Vec<usize>>,
}

impl LayerPartition {
    pub fn depth(&self) -> usize {
        self.level.iter().max().map_or(0, |&l| l + 1)
    }
}

/// Levels by breadth-first search on the vertex–face incidence graph,
/// started from one outer face per component. A vertex at distance `2k + 1`
/// from the outer faces is on level `k`. Isolated vertices are on level 0.
pub fn peel_layers(embedding: &PlanarEmbedding) -> LayerPartition {
    let n = embedding.n();
    let nf = embedding.faces().len();
    let mut faces_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let face_verts: Vec<Vec<usize>> = (0..nf).map(|f| embedding.face_vertices(f)).collect();
    for (f, vs) in face_verts.iter().enumerate() {
        for &v in vs {
            faces_of[v].push(f);
        }
    }
    let mut face_dist = vec![usize::MAX; nf];
    let mut level = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for f in embedding.component_outer_faces() {
        face_dist[f] = 0;
        queue.push_back(f);
    }
    while let Some(f) = queue.pop_front() {
        for &v in &face_verts[f] {
            if level[v] != usize::MAX {
                continue;
            }
            level[v] = face_dist[f];
            for &g in &faces_of[v] {
                if face_dist[g] == usize::MAX {
                    face_dist[g] = face_dist[f] + 1;
                    queue.push_back(g);
                }
            }
        }
    }
    for l in level.iter_mut().filter(|l| **l == usize::MAX) {
        *l = 0;
    }
    let depth = level.iter().max().map_or(0, |&l| l + 1);
    let mut cross = vec![Vec::new(); depth.saturating_sub(1)];
    for (k, &(u, v)) in embedding.endpoints().iter().enumerate() {
        let (a, b) = (level[u].min(level[v]), level[u].max(level[v]));
        debug_assert!(
            b - a <= 1,
            "levels of adjacent vertices differ by at most one"
        );
        if b == a + 1 {
            cross[a].push(k);
        }
    }
    LayerPartition { level, cross }
}

/// Drops the inter-level edges `E_i` with `i ≡ j (mod t)`. Returns the
/// reduced instance and the total `|c|` removed.
pub fn remove_edge_class(
    partition: &LayerPartition,
    instance: &IsingInstance,
    t: usize,
    j: usize,
) -> (IsingInstance, f64) {
    let mut keep = vec![true; instance.edges().len()];
    let mut removed = 0.0;
    for (i, edges) in partition.cross.iter().enumerate() {
        if i % t == j {
            for &k in edges {
                keep[k] = false;
                removed += instance.edges()[k].coupling.abs();
            }
        }
    }
    (instance.with_edge_mask(&keep), removed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPtasOptions {
    /// Tree-width cap; `None` means `3t − 1 + 2`.
    pub width_cap: Option<usize>,
    /// Components this small fall back to brute force when the width cap
    /// is exceeded.
    pub fallback_cap: usize,
}

impl Default for PlanarPtasOptions {
    fn default() -> Self {
        PlanarPtasOptions {
            width_cap: None,
            fallback_cap: 22,
        }
    }
}

/// A decomposition used during a solve, with the component graph it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedDecomposition {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub td: TreeDecomposition,
}

#[derive(Debug, Clone)]
pub struct PlanarPtasReport {
    pub result: SolveResult,
    /// Removed weight per residue class.
    pub removed: Vec<f64>,
    pub decompositions: Vec<EmittedDecomposition>,
}

/// `t = ⌈1/ε⌉`: the cheapest of `t` classes weighs at most `εW`.
pub fn levels_for_epsilon(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidInstance(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    Ok(((1.0 / epsilon) - 1e-9).ceil().max(1.0) as usize)
}

pub fn planar_ptas_min(
    instance: &IsingInstance,
    embedding: &PlanarEmbedding,
    epsilon: f64,
) -> Result<SolveResult> {
    planar_ptas_report(instance, embedding, epsilon, &PlanarPtasOptions::default())
        .map(|r| r.result)
}

pub fn planar_ptas_report(
    instance: &IsingInstance,
    embedding: &PlanarEmbedding,
    epsilon: f64,
    opts: &PlanarPtasOptions,
) -> Result<PlanarPtasReport> {
    let start = Instant::now();
    let t = levels_for_epsilon(epsilon)?;
    if !embedding.matches_edges(instance.n(), instance.edges().iter().map(|e| (e.u, e.v))) {
        return Err(Error::NonPlanarEmbedding(
            "embedding does not match the instance edges".into(),
        ));
    }
    let width_cap = opts.width_cap.unwrap_or(3 * t + 1);
    let partition = peel_layers(embedding);

    let classes: Vec<Result<(SpinAssignment, f64, Vec<EmittedDecomposition>)>> = (0..t)
        .into_par_iter()
        .map(|j| {
            let (sub, removed) = remove_edge_class(&partition, instance, t, j);
            let (spins, tds) = solve_by_components(&sub, width_cap, opts.fallback_cap)?;
            Ok((spins, removed, tds))
        })
        .collect();

    let mut best: Option<(f64, usize, SpinAssignment)> = None;
    let mut removed = Vec::with_capacity(t);
    let mut decompositions = Vec::new();
    for (j, class) in classes.into_iter().enumerate() {
        let (spins, r, tds) = class?;
        let e = instance.energy(&spins)?;
        removed.push(r);
        decompositions.extend(tds);
        if best.as_ref().is_none_or(|b| e < b.0) {
            best = Some((e, j, spins));
        }
    }
    let (_, j_best, spins) = best.expect("t >= 1");
    let min_removed = removed.iter().copied().fold(f64::INFINITY, f64::min);
    let guarantee = if instance.is_simple() {
        Guarantee::RelativeError {
            epsilon: 6.0 * epsilon,
        }
    } else {
        Guarantee::AbsoluteError {
            bound: 2.0 * min_removed,
        }
    };
    let mut result = SolveResult::classical("planar-ptas", instance, spins, guarantee)?;
    result.diagnostics.removed_weight = Some(removed[j_best]);
    result.diagnostics.subproblems = t;
    result.diagnostics.note("levels", partition.depth());
    result.diagnostics.note("t", t);
    result.diagnostics.note("chosen_class", j_best);
    result.diagnostics.note("absolute_bound", 2.0 * min_removed);
    result.diagnostics.note(
        "max_width",
        decompositions
            .iter()
            .map(|d| d.td.width())
            .max()
            .unwrap_or(0),
    );
    result.diagnostics.set_wall(start.elapsed());
    Ok(PlanarPtasReport {
        result,
        removed,
        decompositions,
    })
}

/// Exact minimum of each connected component, stitched together.
fn solve_by_components(
    instance: &IsingInstance,
    width_cap: usize,
    fallback_cap: usize,
) -> Result<(SpinAssignment, Vec<EmittedDecomposition>)> {
    let mut spins = SpinAssignment::all_up(instance.n());
    let mut tds = Vec::new();
    for comp in instance.components() {
        let sub = instance.induced(&comp);
        let edges: Vec<(usize, usize)> = sub.edges().iter().map(|e| (e.u, e.v)).collect();
        let local = match build_tree_decomposition(sub.n(), &edges, width_cap) {
            Ok(td) => {
                let (_, s) = td_dp_min(&sub, &td)?;
                tds.push(EmittedDecomposition {
                    n: sub.n(),
                    edges,
                    td,
                });
                s
            }
            Err(Error::WidthCap { .. }) if sub.n() <= fallback_cap => {
                brute_force_min_capped(&sub, fallback_cap)?.1
            }
            Err(Error::WidthCap { .. }) => {
                return Err(Error::ComponentTooLarge {
                    size: sub.n(),
                    cap: fallback_cap,
                })
            }
            Err(e) => return Err(e),
        };
        for (i, &v) in comp.iter().enumerate() {
            spins.set(v, local.get(i));
        }
    }
    Ok((spins, tds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::grid_embedding;
    use crate::lattice::LatticeInstance;
    use crate::oracle::brute_force_min;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_levels_are_rings() {
        let emb = grid_embedding(7, 7);
        let p = peel_layers(&emb);
        assert_eq!(p.depth(), 4);
        for y in 0..7 {
            for x in 0..7 {
                let ring = x.min(y).min(6 - x).min(6 - y);
                assert_eq!(p.level[y * 7 + x], ring);
            }
        }
        for (k, &(u, v)) in emb.endpoints().iter().enumerate() {
            let d = p.level[u].abs_diff(p.level[v]);
            assert!(d <= 1);
            assert_eq!(d == 1, p.cross.iter().flatten().any(|&c| c == k));
        }
    }

    #[test]
    fn matches_brute_force_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let l = LatticeInstance::new(
                4,
                4,
                (0..12).map(|_| rng.random_range(-4..=4) as f64).collect(),
                (0..12).map(|_| rng.random_range(-4..=4) as f64).collect(),
                (0..16).map(|_| rng.random_range(-2..=2) as f64).collect(),
            )
            .unwrap();
            let inst = l.to_instance();
            let emb = l.embedding();
            let (opt, _) = brute_force_min(&inst).unwrap();
            let w = inst.coupling_weight();
            for eps in [1.0, 0.5, 0.25] {
                let r =
                    planar_ptas_report(&inst, &emb, eps, &PlanarPtasOptions::default()).unwrap();
                let e = r.result.check_classical_witness(&inst).unwrap();
                assert!(e >= opt - 1e-9);
                assert!(e <= opt + 2.0 * eps * w + 1e-9);
                for d in &r.decompositions {
                    d.td.validate(d.n, &d.edges).unwrap();
                }
            }
            // Two levels and t = 2 leaves an empty class: exact.
            let r = planar_ptas_min(&inst, &emb, 0.5).unwrap();
            assert_eq!(r.energy, opt);
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(levels_for_epsilon(0.0).is_err());
        assert!(levels_for_epsilon(1.5).is_err());
        assert_eq!(levels_for_epsilon(1.0 / 3.0).unwrap(), 3);
        assert_eq!(levels_for_epsilon(0.3).unwrap(), 4);
    }
}
