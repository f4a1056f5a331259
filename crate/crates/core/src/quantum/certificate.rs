//! Variational product-state upper bounds on `λ(H)`.
//!
//! Candidates come from two families: classical solutions of `H` restricted
//! to a Pauli frame (one axis per colour class), and states that align one
//! colour class against its local fields with the rest derandomized qubit by
//! qubit. All candidates are polished by coordinate descent.

use serde::{Deserialize, Serialize};

use super::hamiltonian::QuantumIsingHamiltonian;
use super::pauli::{frames_for_colors, local_norm, Pauli};
use crate::embedding::PlanarEmbedding;
use crate::error::{Error, Result};
use crate::instance::{Edge, IsingInstance, SpinAssignment};
use crate::oracle::brute_force_min_capped;
use crate::outerplanar::planar_ptas_min;
use crate::planar_exact::planar_exact_min;
use crate::result::{Guarantee, SolveResult, Witness};
use crate::treedec::{build_tree_decomposition, td_dp_min};

/// Largest frame instance solved by exhaustive search.
const BRUTE_FORCE_FRAME_CAP: usize = 20;
/// Width cap when a frame instance with fields is solved over a tree decomposition.
const FRAME_WIDTH_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCertificate {
    pub bloch: Vec<[f64; 3]>,
    pub energy: f64,
    pub coloring: Vec<usize>,
    pub colors: usize,
    /// `−Σ‖L‖/(k+1) − W/((k+1)·3⁵)` for `k` colours.
    pub bound: f64,
    /// Whether every frame instance was solved exactly, which is what the
    /// bound relies on.
    pub exact_frames: bool,
    /// Which candidate won: `frame:<row>` or `aligned:<colour>`.
    pub source: String,
}

impl ProductCertificate {
    pub fn bound_holds(&self) -> bool {
        self.energy <= self.bound + 1e-8
    }

    pub fn into_result(self) -> SolveResult {
        let mut r = SolveResult::new(
            "product-state",
            self.energy,
            Witness::ProductState { bloch: self.bloch },
            Guarantee::UpperBound,
        );
        r.diagnostics.note("colors", self.colors);
        r.diagnostics.note("color_bound", self.bound);
        r.diagnostics.note("exact_frames", self.exact_frames);
        r.diagnostics.note("source", self.source);
        r
    }
}

/// Smallest-last greedy colouring: repeatedly strip a minimum-degree vertex
/// (lowest id on ties), then colour in reverse order with the smallest free
/// colour. Uses at most `degeneracy + 1` colours, so at most 6 on planar graphs.
pub fn greedy_coloring(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| (deg[v], v))
            .expect("vertex left");
        removed[v] = true;
        order.push(v);
        for &w in &adj[v] {
            if !removed[w] {
                deg[w] -= 1;
            }
        }
    }
    let mut color = vec![usize::MAX; n];
    for &v in order.iter().rev() {
        let used: Vec<usize> = adj[v].iter().map(|&w| color[w]).collect();
        color[v] = (0..)
            .find(|c| !used.contains(c))
            .expect("a free colour exists");
    }
    color
}

pub fn product_state_certificate(
    h: &QuantumIsingHamiltonian,
    embedding: Option<&PlanarEmbedding>,
) -> Result<ProductCertificate> {
    let n = h.n();
    let graph = h.graph_edges();
    if let Some(emb) = embedding {
        if !emb.matches_edges(n, graph.iter().copied()) {
            return Err(Error::NonPlanarEmbedding(
                "embedding does not match the Hamiltonian edges".into(),
            ));
        }
    }
    let coloring = greedy_coloring(n, &graph);
    let k = coloring.iter().map(|&c| c + 1).max().unwrap_or(0);
    let bound =
        -h.local_weight() / (k as f64 + 1.0) - h.coupling_weight() / ((k as f64 + 1.0) * 243.0);

    let mut candidates: Vec<(String, Vec<[f64; 3]>)> = Vec::new();
    let mut exact_frames = true;
    if k > 0 {
        for (row, frame) in frames_for_colors(k).iter().enumerate() {
            let axis: Vec<Pauli> = coloring.iter().map(|&c| frame[c]).collect();
            let edges = h
                .edges()
                .iter()
                .map(|q| Edge::new(q.u, q.v, q.term.coef(axis[q.u], axis[q.v])))
                .collect();
            let fields = (0..n).map(|u| h.locals()[u][axis[u].index()]).collect();
            let inst = IsingInstance::new(n, edges, fields)?;
            let (spins, exact) = classical_min(&inst, embedding)?;
            exact_frames &= exact;
            let bloch = (0..n)
                .map(|u| {
                    let mut r = [0.0; 3];
                    r[axis[u].index()] = spins.get(u) as f64;
                    r
                })
                .collect();
            candidates.push((format!("frame:{row}"), bloch));
        }
    }
    for j in 0..k {
        let mut bloch: Vec<[f64; 3]> = vec![[0.0; 3]; n];
        for u in (0..n).filter(|&u| coloring[u] == j) {
            let l = h.locals()[u];
            let norm = local_norm(&l);
            if norm > 0.0 {
                bloch[u] = [-l[0] / norm, -l[1] / norm, -l[2] / norm];
            }
        }
        // Multilinearity: replacing a mixed factor by the pure state
        // anti-aligned with its effective field never raises the energy.
        for u in (0..n).filter(|&u| coloring[u] != j) {
            bloch[u] = best_direction(h, &bloch, u);
        }
        candidates.push((format!("aligned:{j}"), bloch));
    }
    if n == 0 {
        candidates.push(("empty".into(), Vec::new()));
    }

    let mut best: Option<(f64, String, Vec<[f64; 3]>)> = None;
    for (source, mut bloch) in candidates {
        // Unset qubits (zero local field in an aligned class) get a direction too.
        for u in 0..n {
            if bloch[u] == [0.0; 3] {
                bloch[u] = best_direction(h, &bloch, u);
            }
        }
        let e = polish(h, &mut bloch)?;
        if best.as_ref().is_none_or(|b| e < b.0 - 1e-12) {
            best = Some((e, source, bloch));
        }
    }
    let (energy, source, bloch) = best.expect("at least one candidate");
    Ok(ProductCertificate {
        bloch,
        energy,
        coloring,
        colors: k,
        bound,
        exact_frames,
        source,
    })
}

/// Effective field on qubit `u` given the other Bloch vectors.
fn effective_field(h: &QuantumIsingHamiltonian, bloch: &[[f64; 3]], u: usize) -> [f64; 3] {
    let mut g = h.locals()[u];
    for q in h.edges() {
        if q.u == u {
            let rv = bloch[q.v];
            for (a, ga) in g.iter_mut().enumerate() {
                *ga += (0..3).map(|b| q.term.h[a][b] * rv[b]).sum::<f64>();
            }
        } else if q.v == u {
            let ru = bloch[q.u];
            for (b, gb) in g.iter_mut().enumerate() {
                *gb += (0..3).map(|a| q.term.h[a][b] * ru[a]).sum::<f64>();
            }
        }
    }
    g
}

fn best_direction(h: &QuantumIsingHamiltonian, bloch: &[[f64; 3]], u: usize) -> [f64; 3] {
    let g = effective_field(h, bloch, u);
    let norm = local_norm(&g);
    if norm > 0.0 {
        [-g[0] / norm, -g[1] / norm, -g[2] / norm]
    } else {
        [0.0, 0.0, 1.0]
    }
}

/// Coordinate descent over single-qubit directions; never raises the energy.
fn polish(h: &QuantumIsingHamiltonian, bloch: &mut [[f64; 3]]) -> Result<f64> {
    let mut e = h.product_energy(bloch)?;
    for _ in 0..200 {
        for u in 0..bloch.len() {
            bloch[u] = best_direction(h, bloch, u);
        }
        let next = h.product_energy(bloch)?;
        let done = e - next <= 1e-12 * (1.0 + e.abs());
        e = next.min(e);
        if done {
            break;
        }
    }
    Ok(e)
}

/// Minimum of a frame instance; the flag says whether it is exact.
fn classical_min(
    inst: &IsingInstance,
    embedding: Option<&PlanarEmbedding>,
) -> Result<(SpinAssignment, bool)> {
    if inst.n() <= BRUTE_FORCE_FRAME_CAP {
        return Ok((brute_force_min_capped(inst, BRUTE_FORCE_FRAME_CAP)?.1, true));
    }
    if let (Some(emb), false) = (embedding, inst.has_fields()) {
        let r = planar_exact_min(inst, emb)?;
        return Ok((r.witness.spins().expect("classical witness").clone(), true));
    }
    let pairs: Vec<(usize, usize)> = inst.edges().iter().map(|e| (e.u, e.v)).collect();
    match build_tree_decomposition(inst.n(), &pairs, FRAME_WIDTH_CAP) {
        Ok(td) => Ok((td_dp_min(inst, &td)?.1, true)),
        Err(Error::WidthCap { .. }) => match embedding {
            Some(emb) => {
                let r = planar_ptas_min(inst, emb, 0.25)?;
                let s = r.witness.spins().expect("classical witness").clone();
                // The best of S and −S is at least as good.
                let neg = s.negated();
                Ok((
                    if inst.energy(&neg)? < inst.energy(&s)? {
                        neg
                    } else {
                        s
                    },
                    false,
                ))
            }
            None => Err(Error::Unsupported(
                "frame instance too wide for exact search and no embedding given".into(),
            )),
        },
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::grid_embedding;
    use crate::quantum::eigen::{exact_diag_min, EigenOptions};
    use crate::quantum::hamiltonian::QuantumEdge;
    use crate::quantum::pauli::PauliTwoBody;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(
        rng: &mut ChaCha8Rng,
        w: usize,
        hgt: usize,
        with_locals: bool,
    ) -> QuantumIsingHamiltonian {
        let emb = grid_embedding(w, hgt);
        let edges = emb
            .endpoints()
            .iter()
            .map(|&(u, v)| {
                let mut m = [[0.0; 3]; 3];
                m.iter_mut()
                    .flatten()
                    .for_each(|c| *c = rng.random_range(-1.0..1.0));
                QuantumEdge {
                    u,
                    v,
                    term: PauliTwoBody::new(m),
                }
            })
            .collect();
        let locals = (0..w * hgt)
            .map(|_| {
                if with_locals {
                    [
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ]
                } else {
                    [0.0; 3]
                }
            })
            .collect();
        QuantumIsingHamiltonian::new(w * hgt, edges, locals).unwrap()
    }

    #[test]
    fn coloring_is_proper() {
        let emb = grid_embedding(5, 4);
        let c = greedy_coloring(20, emb.endpoints());
        assert!(emb.endpoints().iter().all(|&(u, v)| c[u] != c[v]));
        assert_eq!(c.iter().max(), Some(&1));
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let c = greedy_coloring(4, &k4);
        assert_eq!(c.iter().max(), Some(&3));
    }

    #[test]
    fn classical_diagonal_recovers_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let emb = grid_embedding(3, 3);
        let edges = emb
            .endpoints()
            .iter()
            .map(|&(u, v)| Edge::new(u, v, rng.random_range(-3..=3) as f64))
            .collect();
        let inst = IsingInstance::new(
            9,
            edges,
            (0..9).map(|_| rng.random_range(-2..=2) as f64).collect(),
        )
        .unwrap();
        let h = QuantumIsingHamiltonian::from_classical(&inst).unwrap();
        let cert = product_state_certificate(&h, Some(&emb)).unwrap();
        let opt = crate::oracle::brute_force_min(&inst).unwrap().0;
        assert!((cert.energy - opt).abs() < 1e-9);
    }

    #[test]
    fn xx_plus_zz_edge() {
        let mut m = [[0.0; 3]; 3];
        m[0][0] = 1.0;
        m[2][2] = 1.0;
        let h = QuantumIsingHamiltonian::new(
            2,
            vec![QuantumEdge {
                u: 0,
                v: 1,
                term: PauliTwoBody::new(m),
            }],
            vec![[0.0; 3]; 2],
        )
        .unwrap();
        let cert = product_state_certificate(&h, None).unwrap();
        let lambda = exact_diag_min(&h, &EigenOptions::default()).unwrap().energy;
        assert!(cert.energy <= -1.0 + 1e-12);
        assert!(cert.energy >= lambda - 1e-12);
        assert!((lambda + 2.0).abs() < 1e-10);
    }

    #[test]
    fn upper_bounds_and_colour_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..6 {
            let h = random_grid(&mut rng, 3, 3, i % 2 == 0);
            let emb = grid_embedding(3, 3);
            let cert = product_state_certificate(&h, Some(&emb)).unwrap();
            let lambda = exact_diag_min(&h, &EigenOptions::default()).unwrap().energy;
            assert!(cert.energy >= lambda - 1e-9);
            assert!((h.product_energy(&cert.bloch).unwrap() - cert.energy).abs() < 1e-9);
            assert!(cert.exact_frames);
            assert!(cert.bound_holds(), "{} > {}", cert.energy, cert.bound);
        }
    }
}
