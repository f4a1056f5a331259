//! Classical Ising instances, spin assignments and energies.
//!
//! An instance is `H(S) = Σ c_uv S_u S_v + Σ d_u S_u` over spins `S_u ∈ {−1, +1}`.
//! Coefficients are stored as `f64`. When every coefficient is an integer and
//! the total magnitude stays below 2^53 the instance is in [`NumericMode::Exact`]:
//! every partial energy sum is then an exactly representable integer, and the
//! certificate checks switch to checked `i64` arithmetic with no tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest total coefficient magnitude for which `f64` sums are exact integers.
const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericMode {
    /// Integral coefficients; energies are compared exactly.
    Exact,
    /// General real coefficients; comparisons use an absolute tolerance.
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub coupling: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, coupling: f64) -> Self {
        Edge { u, v, coupling }
    }

    /// The endpoint opposite to `w`.
    pub fn other(&self, w: usize) -> usize {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// A classical spin configuration, one `±1` per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinAssignment(Vec<i8>);

impl SpinAssignment {
    pub fn all_up(n: usize) -> Self {
        SpinAssignment(vec![1; n])
    }

    pub fn from_spins(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidInstance(format!(
                "spin value {bad} is not ±1"
            )));
        }
        Ok(SpinAssignment(spins))
    }

    /// Bit `i` of `bits` set means vertex `i` points down.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        SpinAssignment(
            (0..n)
                .map(|i| if bits >> i & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, s: i8) {
        debug_assert!(s == 1 || s == -1);
        self.0[i] = s;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn negated(&self) -> Self {
        SpinAssignment(self.0.iter().map(|s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for SpinAssignment {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        SpinAssignment::from_spins(v)
    }
}

impl From<SpinAssignment> for Vec<i8> {
    fn from(s: SpinAssignment) -> Self {
        s.0
    }
}

/// A classical Ising spin glass on `n` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance {
    n: usize,
    edges: Vec<Edge>,
    fields: Vec<f64>,
    multigraph: bool,
    mode: NumericMode,
}

impl IsingInstance {
    /// Builds a simple-graph instance: no self-loops, at most one edge per pair.
    pub fn new(n: usize, edges: Vec<Edge>, fields: Vec<f64>) -> Result<Self> {
        Self::build(n, edges, fields, false)
    }

    /// Builds an instance that may contain parallel edges. Extensivity
    /// certificates are disabled for such instances.
    pub fn multigraph(n: usize, edges: Vec<Edge>, fields: Vec<f64>) -> Result<Self> {
        Self::build(n, edges, fields, true)
    }

    /// Field-free instance from `(u, v, c)` triples.
    pub fn from_couplings(n: usize, couplings: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = couplings
            .iter()
            .map(|&(u, v, c)| Edge::new(u, v, c))
            .collect();
        Self::new(n, edges, vec![0.0; n])
    }

    fn build(n: usize, edges: Vec<Edge>, fields: Vec<f64>, multigraph: bool) -> Result<Self> {
        if fields.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: fields.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for (k, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidInstance(format!(
                    "edge {k} ({}, {}) references a vertex outside 0..{n}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidInstance(format!(
                    "edge {k} is a self-loop at {}",
                    e.u
                )));
            }
            if !e.coupling.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "edge {k} has a non-finite coupling"
                )));
            }
            if !multigraph && !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidInstance(format!(
                    "parallel edge ({}, {}) in a simple instance",
                    e.u, e.v
                )));
            }
        }
        if let Some(u) = fields.iter().position(|d| !d.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "field at vertex {u} is not finite"
            )));
        }
        let integral = edges.iter().all(|e| e.coupling.fract() == 0.0)
            && fields.iter().all(|d| d.fract() == 0.0);
        let total: f64 = edges.iter().map(|e| e.coupling.abs()).sum::<f64>()
            + fields.iter().map(|d| d.abs()).sum::<f64>();
        let mode = if integral && total < EXACT_LIMIT {
            NumericMode::Exact
        } else {
            NumericMode::Float
        };
        Ok(IsingInstance {
            n,
            edges,
            fields,
            multigraph,
            mode,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn numeric_mode(&self) -> NumericMode {
        self.mode
    }

    pub fn is_exact(&self) -> bool {
        self.mode == NumericMode::Exact
    }

    /// Whether the instance was admitted in multigraph mode.
    pub fn is_multigraph_mode(&self) -> bool {
        self.multigraph
    }

    /// Whether the underlying graph actually has no parallel edges.
    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.edges
            .iter()
            .all(|e| seen.insert((e.u.min(e.v), e.u.max(e.v))))
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&d| d != 0.0)
    }

    /// `W = Σ |c_uv|`.
    pub fn coupling_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.coupling.abs()).sum()
    }

    pub fn coupling_weight_exact(&self) -> Result<i64> {
        self.require_exact()?;
        self.edges.iter().try_fold(0i64, |acc, e| {
            acc.checked_add(to_i64(e.coupling.abs())?)
                .ok_or(Error::Overflow)
        })
    }

    fn require_exact(&self) -> Result<()> {
        match self.mode {
            NumericMode::Exact => Ok(()),
            NumericMode::Float => Err(Error::Unsupported(
                "exact arithmetic requested on a non-integral instance".into(),
            )),
        }
    }

    fn check_len(&self, s: &SpinAssignment) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: s.len(),
            });
        }
        Ok(())
    }

    /// `H(S) = Σ c_uv S_u S_v + Σ d_u S_u`.
    pub fn energy(&self, s: &SpinAssignment) -> Result<f64> {
        self.check_len(s)?;
        Ok(self.quadratic_part(s) + self.linear_part(s))
    }

    /// Energy in checked integer arithmetic; only for exact-mode instances.
    pub fn energy_exact(&self, s: &SpinAssignment) -> Result<i64> {
        self.require_exact()?;
        self.check_len(s)?;
        let sp = s.spins();
        let mut acc = 0i64;
        for e in &self.edges {
            let term = to_i64(e.coupling)?
                .checked_mul(i64::from(sp[e.u] * sp[e.v]))
                .ok_or(Error::Overflow)?;
            acc = acc.checked_add(term).ok_or(Error::Overflow)?;
        }
        for (u, &d) in self.fields.iter().enumerate() {
            let term = to_i64(d)?
                .checked_mul(i64::from(sp[u]))
                .ok_or(Error::Overflow)?;
            acc = acc.checked_add(term).ok_or(Error::Overflow)?;
        }
        Ok(acc)
    }

    /// The 2-local part `Q(S)`. Panics on a length mismatch.
    pub fn quadratic_part(&self, s: &SpinAssignment) -> f64 {
        let sp = s.spins();
        self.edges
            .iter()
            .map(|e| e.coupling * f64::from(sp[e.u] * sp[e.v]))
            .sum()
    }

    /// The 1-local part `L(S)`. Panics on a length mismatch.
    pub fn linear_part(&self, s: &SpinAssignment) -> f64 {
        self.fields
            .iter()
            .zip(s.spins())
            .map(|(d, &x)| d * f64::from(x))
            .sum()
    }

    /// Adjacency lists of `(neighbor, edge index)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.u].push((e.v, k));
            adj[e.v].push((e.u, k));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Connected components as sorted vertex lists, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        connected_components(self.n, self.edges.iter().map(|e| (e.u, e.v)))
    }

    /// The same couplings with every field negated.
    pub fn with_negated_fields(&self) -> Self {
        let mut out = self.clone();
        out.fields.iter_mut().for_each(|d| *d = -*d);
        out
    }

    /// The same couplings with all fields removed.
    pub fn without_fields(&self) -> Self {
        let mut out = self.clone();
        out.fields.iter_mut().for_each(|d| *d = 0.0);
        out
    }

    /// Keeps only the edges for which `keep[k]` holds. Fields are untouched.
    pub fn with_edge_mask(&self, keep: &[bool]) -> Self {
        let edges = self
            .edges
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(e, _)| *e)
            .collect();
        IsingInstance {
            edges,
            ..self.clone()
        }
    }

    /// The sub-instance induced by `vertices` (relabelled `0..vertices.len()`
    /// in the given order), keeping edges with both endpoints inside.
    pub fn induced(&self, vertices: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| local[e.u] != usize::MAX && local[e.v] != usize::MAX)
            .map(|e| Edge::new(local[e.u], local[e.v], e.coupling))
            .collect();
        let fields = vertices.iter().map(|&v| self.fields[v]).collect();
        let mut out = IsingInstance {
            n: vertices.len(),
            edges,
            fields,
            multigraph: self.multigraph,
            mode: self.mode,
        };
        out.mode = out.recompute_mode();
        out
    }

    fn recompute_mode(&self) -> NumericMode {
        Self::build(self.n, self.edges.clone(), self.fields.clone(), true)
            .map(|i| i.mode)
            .unwrap_or(NumericMode::Float)
    }
}

fn to_i64(x: f64) -> Result<i64> {
    if x.fract() != 0.0 || x.abs() >= EXACT_LIMIT {
        return Err(Error::Overflow);
    }
    Ok(x as i64)
}

/// Connected components of a graph given by an edge iterator.
pub fn connected_components(
    n: usize,
    edges: impl Iterator<Item = (usize, usize)>,
) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        if index[r] == usize::MAX {
            index[r] = out.len();
            out.push(Vec::new());
        }
        out[index[r]].push(v);
    }
    out
}
