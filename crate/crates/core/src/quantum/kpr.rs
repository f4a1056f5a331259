//! Three rounds of BFS layer cutting for bounded-degree planar quantum
//! instances, followed by exact diagonalization of each surviving component.

use std::collections::VecDeque;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::{exact_diag_min, EigenOptions};
use super::hamiltonian::QuantumIsingHamiltonian;
use super::quantum_extensivity_bound;
use crate::error::{Error, Result};
use crate::instance::connected_components;
use crate::result::{ComponentState, Guarantee, SolveResult, Witness};

/// Largest graph for which weak diameters are measured.
const WEAK_DIAMETER_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub root: usize,
    /// Residue class removed from this root's component.
    pub class: usize,
    pub class_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub vertices: Vec<usize>,
    /// Largest distance in the original graph between two vertices of the
    /// component; `None` when not measured.
    pub weak_diameter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub removed_edges: Vec<usize>,
    pub removed_weight: f64,
    pub total_weight: f64,
    pub classes: usize,
    pub rounds: Vec<RoundRecord>,
    pub components: Vec<ComponentReport>,
}

/// Number of residue classes for a cut parameter `δ`: `⌈1/δ⌉`, so the
/// lightest class weighs at most `δ` times the cross-level weight.
pub fn classes_for_delta(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidInstance(format!(
            "cut parameter must lie in (0, 1], got {delta}"
        )));
    }
    Ok(((1.0 / delta) - 1e-9).ceil().max(1.0) as usize)
}

/// One cutting round on the subgraph of edges with `alive[k]`. Each
/// component is rooted at its lowest vertex; its BFS inter-level edges are
/// split into `classes` residue classes and the lightest class (lowest index
/// on ties) is removed. Removed edges get `alive[k] = false`.
pub fn bfs_layer_cut(
    n: usize,
    edges: &[(usize, usize)],
    weights: &[f64],
    alive: &mut [bool],
    classes: usize,
    round: usize,
) -> Vec<RoundRecord> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(u, v)) in edges.iter().enumerate() {
        if alive[k] {
            adj[u].push((v, k));
            adj[v].push((u, k));
        }
    }
    let mut level = vec![usize::MAX; n];
    let mut records = Vec::new();
    for root in 0..n {
        if level[root] != usize::MAX {
            continue;
        }
        level[root] = 0;
        let mut queue = VecDeque::from([root]);
        let mut comp_edges = Vec::new();
        while let Some(u) = queue.pop_front() {
            for &(v, k) in &adj[u] {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
                if u < v {
                    comp_edges.push(k);
                }
            }
        }
        if comp_edges.is_empty() {
            continue;
        }
        let mut class_weight = vec![0.0; classes];
        let class_of = |k: usize| {
            let (u, v) = edges[k];
            (level[u] != level[v]).then(|| level[u].min(level[v]) % classes)
        };
        for &k in &comp_edges {
            if let Some(c) = class_of(k) {
                class_weight[c] += weights[k];
            }
        }
        let mut j = 0;
        for c in 1..classes {
            if class_weight[c] < class_weight[j] {
                j = c;
            }
        }
        for &k in &comp_edges {
            if class_of(k) == Some(j) {
                alive[k] = false;
            }
        }
        records.push(RoundRecord {
            round,
            root,
            class: j,
            class_weight: class_weight[j],
        });
    }
    records
}

/// Three cutting rounds with `δ = ε/3`.
pub fn kpr_decompose(
    n: usize,
    edges: &[(usize, usize)],
    weights: &[f64],
    epsilon: f64,
) -> Result<CutReport> {
    if edges.len() != weights.len() {
        return Err(Error::Dimension {
            expected: edges.len(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInstance(
            "edge weights must be finite and non-negative".into(),
        ));
    }
    let classes = classes_for_delta(epsilon / 3.0)?;
    let mut alive = vec![true; edges.len()];
    let mut rounds = Vec::new();
    for round in 0..3 {
        rounds.extend(bfs_layer_cut(n, edges, weights, &mut alive, classes, round));
    }
    let removed_edges: Vec<usize> = (0..edges.len()).filter(|&k| !alive[k]).collect();
    let removed_weight = removed_edges.iter().map(|&k| weights[k]).sum();
    let comps = connected_components(
        n,
        edges
            .iter()
            .zip(&alive)
            .filter(|(_, a)| **a)
            .map(|(e, _)| *e),
    );
    let diameters = (n <= WEAK_DIAMETER_LIMIT).then(|| weak_diameters(n, edges, &comps));
    let components = comps
        .into_iter()
        .enumerate()
        .map(|(i, vertices)| ComponentReport {
            vertices,
            weak_diameter: diameters.as_ref().map(|d| d[i]),
        })
        .collect();
    Ok(CutReport {
        removed_edges,
        removed_weight,
        total_weight: weights.iter().sum(),
        classes,
        rounds,
        components,
    })
}

/// Per component, the largest original-graph distance between its members
/// (`usize::MAX` if two members are disconnected in the original graph).
fn weak_diameters(n: usize, edges: &[(usize, usize)], comps: &[Vec<usize>]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    comps
        .par_iter()
        .map(|comp| {
            let mut diam = 0;
            let mut dist = vec![usize::MAX; n];
            for &s in comp {
                dist.iter_mut().for_each(|d| *d = usize::MAX);
                dist[s] = 0;
                let mut queue = VecDeque::from([s]);
                while let Some(u) = queue.pop_front() {
                    for &v in &adj[u] {
                        if dist[v] == usize::MAX {
                            dist[v] = dist[u] + 1;
                            queue.push_back(v);
                        }
                    }
                }
                diam = comp.iter().map(|&v| dist[v]).fold(diam, usize::max);
            }
            diam
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct KprOutcome {
    pub result: SolveResult,
    pub cut: CutReport,
    /// The Hamiltonian that was actually diagonalized.
    pub reduced: QuantumIsingHamiltonian,
}

pub fn bounded_degree_ptas_min(
    h: &QuantumIsingHamiltonian,
    epsilon: f64,
    component_cap: usize,
) -> Result<SolveResult> {
    bounded_degree_ptas(h, epsilon, component_cap).map(|o| o.result)
}

/// Removes a light edge set with `‖Q_uv‖` as weights, keeps every `L_u`, and
/// diagonalizes the components of what remains.
pub fn bounded_degree_ptas(
    h: &QuantumIsingHamiltonian,
    epsilon: f64,
    component_cap: usize,
) -> Result<KprOutcome> {
    let start = Instant::now();
    let edges = h.graph_edges();
    let weights = h.edge_norms();
    let cut = kpr_decompose(h.n(), &edges, &weights, epsilon)?;
    let w = h.coupling_weight();
    if cut.removed_weight > epsilon * w * (1.0 + 1e-12) {
        return Err(Error::Internal(format!(
            "removed weight {} exceeds epsilon * W = {}",
            cut.removed_weight,
            epsilon * w
        )));
    }
    if let Some(big) = cut
        .components
        .iter()
        .find(|c| c.vertices.len() > component_cap)
    {
        return Err(Error::ComponentTooLarge {
            size: big.vertices.len(),
            cap: component_cap,
        });
    }
    let mut keep = vec![true; edges.len()];
    for &k in &cut.removed_edges {
        keep[k] = false;
    }
    let reduced = h.with_edge_mask(&keep);
    let opts = EigenOptions {
        iterative_cap: component_cap.max(EigenOptions::default().dense_cap),
        ..EigenOptions::default()
    };
    let states: Vec<Result<ComponentState>> = cut
        .components
        .par_iter()
        .map(|c| {
            let g = exact_diag_min(&reduced.induced(&c.vertices), &opts)?;
            Ok(ComponentState {
                qubits: c.vertices.clone(),
                energy: g.energy,
                amplitudes: g.vector.iter().map(|a| [a.re, a.im]).collect(),
            })
        })
        .collect();
    let states = states.into_iter().collect::<Result<Vec<_>>>()?;
    let energy = states.iter().map(|s| s.energy).sum();

    let mut result = SolveResult::new(
        "quantum-kpr",
        energy,
        Witness::Components { components: states },
        Guarantee::AbsoluteError { bound: epsilon * w },
    );
    result.diagnostics.removed_weight = Some(cut.removed_weight);
    result.diagnostics.subproblems = cut.components.len();
    result.diagnostics.note("classes", cut.classes);
    result.diagnostics.note(
        "largest_component",
        cut.components
            .iter()
            .map(|c| c.vertices.len())
            .max()
            .unwrap_or(0),
    );
    if let Some(d) = cut.components.iter().filter_map(|c| c.weak_diameter).max() {
        result.diagnostics.note("max_weak_diameter", d);
    }
    // Relative form: |λ| ≥ |extensivity bound| on simple planar inputs.
    let ext = quantum_extensivity_bound(h);
    if ext < 0.0 {
        result
            .diagnostics
            .note("relative_error_via_extensivity", epsilon * w / ext.abs());
    }
    result.diagnostics.set_wall(start.elapsed());
    Ok(KprOutcome {
        result,
        cut,
        reduced,
    })
}
