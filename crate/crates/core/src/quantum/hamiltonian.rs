use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::pauli::{local_norm, term_norm, Pauli, PauliTwoBody, PAULIS};
use crate::error::{Error, Result};
use crate::instance::{Edge, IsingInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumEdge {
    pub u: usize,
    pub v: usize,
    pub term: PauliTwoBody,
}

/// `H = Σ_(u,v) Q_uv + Σ_u L_u` on `n` qubits, with `L_u = l_u · σ_u`.
///
/// Qubit `u` is bit `u` of a basis index and `Z|0⟩ = |0⟩`, so the classical
/// spin of a basis state is `+1` where the bit is clear.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumIsingHamiltonian {
    n: usize,
    edges: Vec<QuantumEdge>,
    locals: Vec<[f64; 3]>,
}

impl QuantumIsingHamiltonian {
    pub fn new(n: usize, edges: Vec<QuantumEdge>, locals: Vec<[f64; 3]>) -> Result<Self> {
        if locals.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: locals.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for (k, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n || e.u == e.v {
                return Err(Error::InvalidInstance(format!(
                    "edge {k} ({}, {}) is a self-loop or leaves 0..{n}",
                    e.u, e.v
                )));
            }
            if !e.term.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "edge {k} has a non-finite coefficient"
                )));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidInstance(format!(
                    "parallel edge ({}, {})",
                    e.u, e.v
                )));
            }
        }
        if locals.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance("non-finite local term".into()));
        }
        Ok(QuantumIsingHamiltonian { n, edges, locals })
    }

    /// Edge terms given with their own 1-local parts `(u, v, Q, left, right)`;
    /// the 1-local parts are moved into `L_u` and `L_v`.
    pub fn with_folded_locals(
        n: usize,
        terms: Vec<(usize, usize, PauliTwoBody, [f64; 3], [f64; 3])>,
        mut locals: Vec<[f64; 3]>,
    ) -> Result<Self> {
        if locals.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: locals.len(),
            });
        }
        let mut edges = Vec::with_capacity(terms.len());
        for (u, v, term, left, right) in terms {
            if u < n && v < n {
                for a in 0..3 {
                    locals[u][a] += left[a];
                    locals[v][a] += right[a];
                }
            }
            edges.push(QuantumEdge { u, v, term });
        }
        Self::new(n, edges, locals)
    }

    /// The diagonal Hamiltonian `Σ c_uv Z_u Z_v + Σ d_u Z_u`.
    pub fn from_classical(instance: &IsingInstance) -> Result<Self> {
        let edges = instance
            .edges()
            .iter()
            .map(|e| QuantumEdge {
                u: e.u,
                v: e.v,
                term: PauliTwoBody::single(Pauli::Z, Pauli::Z, e.coupling),
            })
            .collect();
        let locals = instance.fields().iter().map(|&d| [0.0, 0.0, d]).collect();
        Self::new(instance.n(), edges, locals)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[QuantumEdge] {
        &self.edges
    }

    pub fn locals(&self) -> &[[f64; 3]] {
        &self.locals
    }

    pub fn graph_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.u, e.v)).collect()
    }

    /// `W = Σ ‖Q_uv‖`.
    pub fn coupling_weight(&self) -> f64 {
        self.edge_norms().iter().sum()
    }

    pub fn edge_norms(&self) -> Vec<f64> {
        self.edges.iter().map(|e| term_norm(&e.term)).collect()
    }

    /// `Σ ‖L_u‖`.
    pub fn local_weight(&self) -> f64 {
        self.locals.iter().map(local_norm).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    /// True when every term is built from `Z` alone.
    pub fn is_classical_diagonal(&self) -> bool {
        self.edges.iter().all(|e| {
            PAULIS
                .iter()
                .flat_map(|&a| PAULIS.iter().map(move |&b| (a, b)))
                .all(|(a, b)| (a == Pauli::Z && b == Pauli::Z) || e.term.coef(a, b) == 0.0)
        }) && self.locals.iter().all(|l| l[0] == 0.0 && l[1] == 0.0)
    }

    /// The classical instance of a diagonal Hamiltonian.
    pub fn classical_instance(&self) -> Result<IsingInstance> {
        if !self.is_classical_diagonal() {
            return Err(Error::Unsupported(
                "Hamiltonian has off-diagonal terms".into(),
            ));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.u, e.v, e.term.coef(Pauli::Z, Pauli::Z)))
            .collect();
        IsingInstance::new(self.n, edges, self.locals.iter().map(|l| l[2]).collect())
    }

    /// True when the matrix in the computational basis is real.
    pub fn is_real(&self) -> bool {
        let y = Pauli::Y.index();
        self.edges
            .iter()
            .all(|e| (0..3).all(|a| a == y || (e.term.h[a][y] == 0.0 && e.term.h[y][a] == 0.0)))
            && self.locals.iter().all(|l| l[1] == 0.0)
    }

    pub fn without_locals(&self) -> Self {
        QuantumIsingHamiltonian {
            n: self.n,
            edges: self.edges.clone(),
            locals: vec![[0.0; 3]; self.n],
        }
    }

    pub fn with_negated_locals(&self) -> Self {
        QuantumIsingHamiltonian {
            n: self.n,
            edges: self.edges.clone(),
            locals: self.locals.iter().map(|l| [-l[0], -l[1], -l[2]]).collect(),
        }
    }

    /// Same qubits, keeping the edges with `keep[k]`.
    pub fn with_edge_mask(&self, keep: &[bool]) -> Self {
        QuantumIsingHamiltonian {
            n: self.n,
            edges: self
                .edges
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(e, _)| e.clone())
                .collect(),
            locals: self.locals.clone(),
        }
    }

    /// Restriction to `vertices`, relabelled `0..len` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            map[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| map[e.u] != usize::MAX && map[e.v] != usize::MAX)
            .map(|e| QuantumEdge {
                u: map[e.u],
                v: map[e.v],
                term: e.term,
            })
            .collect();
        QuantumIsingHamiltonian {
            n: vertices.len(),
            edges,
            locals: vertices.iter().map(|&v| self.locals[v]).collect(),
        }
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        crate::instance::connected_components(self.n, self.edges.iter().map(|e| (e.u, e.v)))
    }

    /// Energy of the product state with the given Bloch vectors. The
    /// expression is multilinear in the vectors, so it also covers mixed
    /// single-qubit states (shorter vectors).
    pub fn product_energy(&self, bloch: &[[f64; 3]]) -> Result<f64> {
        if bloch.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: bloch.len(),
            });
        }
        let mut e: f64 = self
            .edges
            .iter()
            .map(|q| q.term.expectation(&bloch[q.u], &bloch[q.v]))
            .sum();
        for (l, r) in self.locals.iter().zip(bloch) {
            e += l[0] * r[0] + l[1] * r[1] + l[2] * r[2];
        }
        Ok(e)
    }

    pub fn operator(&self) -> PauliOperator {
        PauliOperator::new(self)
    }

    /// Dense matrix in the computational basis. Only sensible for small `n`.
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let op = self.operator();
        let dim = op.dim;
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            for t in &op.two {
                let a = t.local(x);
                let base = x & !(t.mu | t.mv);
                for c in 0..4 {
                    let coef = t.m[c][a];
                    if coef != Complex64::ZERO {
                        m[(t.index(base, c), x)] += coef;
                    }
                }
            }
            for t in &op.one {
                let a = (x & t.mu != 0) as usize;
                let base = x & !t.mu;
                for c in 0..2 {
                    let coef = t.m[c][a];
                    if coef != Complex64::ZERO {
                        m[(if c == 1 { base | t.mu } else { base }, x)] += coef;
                    }
                }
            }
        }
        m
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> Result<f64> {
        let op = self.operator();
        if psi.len() != op.dim {
            return Err(Error::Dimension {
                expected: op.dim,
                actual: psi.len(),
            });
        }
        let mut out = vec![Complex64::ZERO; op.dim];
        op.apply(psi, &mut out);
        let num: Complex64 = psi.iter().zip(&out).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        Ok(num.re / den)
    }
}

struct TwoQubit {
    mu: usize,
    mv: usize,
    m: [[Complex64; 4]; 4],
}

impl TwoQubit {
    fn local(&self, x: usize) -> usize {
        (((x & self.mu) != 0) as usize) << 1 | ((x & self.mv) != 0) as usize
    }

    fn index(&self, base: usize, c: usize) -> usize {
        base | if c & 2 != 0 { self.mu } else { 0 } | if c & 1 != 0 { self.mv } else { 0 }
    }
}

struct OneQubit {
    mu: usize,
    m: [[Complex64; 2]; 2],
}

/// Matrix-free form of a Hamiltonian: one 4×4 block per edge and one 2×2
/// block per qubit, applied in gather form so rows can be computed in
/// parallel.
pub struct PauliOperator {
    n: usize,
    dim: usize,
    two: Vec<TwoQubit>,
    one: Vec<OneQubit>,
}

impl PauliOperator {
    fn new(h: &QuantumIsingHamiltonian) -> Self {
        let two = h
            .edges
            .iter()
            .filter(|e| !e.term.is_zero())
            .map(|e| {
                let mat = e.term.matrix();
                let mut m = [[Complex64::ZERO; 4]; 4];
                for (r, row) in m.iter_mut().enumerate() {
                    for (c, x) in row.iter_mut().enumerate() {
                        *x = mat[(r, c)];
                    }
                }
                TwoQubit {
                    mu: 1 << e.u,
                    mv: 1 << e.v,
                    m,
                }
            })
            .collect();
        let one = h
            .locals
            .iter()
            .enumerate()
            .filter(|(_, l)| l.iter().any(|&c| c != 0.0))
            .map(|(u, l)| {
                let c = |re: f64, im: f64| Complex64::new(re, im);
                OneQubit {
                    mu: 1 << u,
                    m: [
                        [c(l[2], 0.0), c(l[0], -l[1])],
                        [c(l[0], l[1]), c(-l[2], 0.0)],
                    ],
                }
            })
            .collect();
        PauliOperator {
            n: h.n,
            dim: 1 << h.n,
            two,
            one,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = H·psi`.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        const CHUNK: usize = 1 << 12;
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(ci, chunk)| {
                let start = ci * CHUNK;
                for (off, slot) in chunk.iter_mut().enumerate() {
                    let x = start + off;
                    let mut acc = Complex64::ZERO;
                    for t in &self.two {
                        let a = t.local(x);
                        let base = x & !(t.mu | t.mv);
                        let row = &t.m[a];
                        for (c, &coef) in row.iter().enumerate() {
                            if coef != Complex64::ZERO {
                                acc += coef * psi[t.index(base, c)];
                            }
                        }
                    }
                    for t in &self.one {
                        let a = (x & t.mu != 0) as usize;
                        let base = x & !t.mu;
                        acc += t.m[a][0] * psi[base] + t.m[a][1] * psi[base | t.mu];
                    }
                    *slot = acc;
                }
            });
    }
}
