use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

pub const PAULIS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

impl Pauli {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        PAULIS[i]
    }

    pub fn matrix(self) -> Matrix2<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => Matrix2::new(o, one, one, o),
            Pauli::Y => Matrix2::new(o, -i, i, o),
            Pauli::Z => Matrix2::new(one, o, o, -one),
        }
    }
}

impl std::fmt::Display for Pauli {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// `Q = Σ h[α][β] P^α ⊗ P^β`, purely 2-local.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PauliTwoBody {
    pub h: [[f64; 3]; 3],
}

impl PauliTwoBody {
    pub fn new(h: [[f64; 3]; 3]) -> Self {
        PauliTwoBody { h }
    }

    pub fn single(a: Pauli, b: Pauli, c: f64) -> Self {
        let mut h = [[0.0; 3]; 3];
        h[a.index()][b.index()] = c;
        PauliTwoBody { h }
    }

    pub fn coef(&self, a: Pauli, b: Pauli) -> f64 {
        self.h[a.index()][b.index()]
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().flatten().all(|&c| c == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().flatten().all(|c| c.is_finite())
    }

    /// The term with the roles of the two qubits exchanged.
    pub fn transposed(&self) -> Self {
        let mut h = [[0.0; 3]; 3];
        for (a, row) in self.h.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                h[b][a] = c;
            }
        }
        PauliTwoBody { h }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        out.h.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    /// Dense 4×4 matrix; the first qubit is the high bit of the local index.
    pub fn matrix(&self) -> Matrix4<Complex64> {
        let mut m = Matrix4::zeros();
        for a in PAULIS {
            for b in PAULIS {
                let c = self.coef(a, b);
                if c != 0.0 {
                    m += a.matrix().kronecker(&b.matrix()) * Complex64::new(c, 0.0);
                }
            }
        }
        m
    }

    /// Expectation in the product state with Bloch vectors `ru`, `rv`.
    pub fn expectation(&self, ru: &[f64; 3], rv: &[f64; 3]) -> f64 {
        let mut e = 0.0;
        for (a, row) in self.h.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                e += c * ru[a] * rv[b];
            }
        }
        e
    }
}

/// Spectral norm of a 2-local term.
pub fn term_norm(term: &PauliTwoBody) -> f64 {
    if term.is_zero() {
        return 0.0;
    }
    term.matrix()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |m, &e| m.max(e.abs()))
}

/// Spectral norm of `l·σ`, which is the Euclidean length of `l`.
pub fn local_norm(l: &[f64; 3]) -> f64 {
    (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt()
}

/// The largest-magnitude coefficient of `term`, ties going to the
/// lexicographically first `(α, β)`.
pub fn dominating_coupling(term: &PauliTwoBody) -> Result<(Pauli, Pauli, f64)> {
    let mut best: Option<(Pauli, Pauli, f64)> = None;
    for a in PAULIS {
        for b in PAULIS {
            let c = term.coef(a, b);
            if c != 0.0 && best.is_none_or(|(_, _, bc)| c.abs() > bc.abs()) {
                best = Some((a, b, c));
            }
        }
    }
    let best = best.ok_or(Error::ZeroTerm)?;
    let norm = term_norm(term);
    if best.2.abs() < norm / 9.0 - 1e-12 {
        return Err(Error::Internal(format!(
            "dominating coefficient {} is below norm/9 = {}",
            best.2,
            norm / 9.0
        )));
    }
    Ok(best)
}

/// Nine Pauli frames for four color classes. Every pair of columns
/// contains each of the nine Pauli pairs exactly once.
pub const FRAME_TABLE: [[Pauli; 4]; 9] = {
    use Pauli::*;
    [
        [X, X, X, X],
        [X, Y, Z, Y],
        [X, Z, Y, Z],
        [Y, X, Z, Z],
        [Y, Y, Y, X],
        [Y, Z, X, Y],
        [Z, X, Y, Y],
        [Z, Y, X, Z],
        [Z, Z, Z, X],
    ]
};

pub fn pauli_frames() -> Vec<Vec<Pauli>> {
    let rows: Vec<Vec<Pauli>> = FRAME_TABLE.iter().map(|r| r.to_vec()).collect();
    debug_assert!(is_strength_two_array(&rows));
    rows
}

/// Frames for `k` color classes: the nine-row table when it has enough
/// columns, otherwise the full `3^k` factorial design.
pub fn frames_for_colors(k: usize) -> Vec<Vec<Pauli>> {
    if k <= 4 {
        return FRAME_TABLE.iter().map(|r| r[..k].to_vec()).collect();
    }
    let total = 3usize.pow(k as u32);
    (0..total)
        .map(|mut r| {
            (0..k)
                .map(|_| {
                    let p = Pauli::from_index(r % 3);
                    r /= 3;
                    p
                })
                .collect()
        })
        .collect()
}

/// True if every ordered pair of columns shows each of the nine Pauli pairs
/// equally often.
pub fn is_strength_two_array(rows: &[Vec<Pauli>]) -> bool {
    let Some(first) = rows.first() else {
        return true;
    };
    let k = first.len();
    if rows.iter().any(|r| r.len() != k) || !rows.len().is_multiple_of(9) {
        return false;
    }
    for c1 in 0..k {
        for c2 in 0..k {
            if c1 == c2 {
                continue;
            }
            let mut count = [0usize; 9];
            for r in rows {
                count[r[c1].index() * 3 + r[c2].index()] += 1;
            }
            if count.iter().any(|&c| c != rows.len() / 9) {
                return false;
            }
        }
    }
    true
}
