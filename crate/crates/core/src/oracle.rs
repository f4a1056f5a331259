//! Ground-truth engines and bound certificates.
//!
//! [`brute_force_min`] is deliberately simple: it enumerates all `2^n`
//! assignments in Gray-code order, updating the energy in `O(degree)` per
//! step. Everything else in the crate is validated against it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{IsingInstance, SpinAssignment};
use crate::quantum::QuantumIsingHamiltonian;

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 28;

/// Absolute tolerance used for non-integral comparisons.
pub const FLOAT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    ClassicalExtensivity,
    QuantumExtensivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub kind: CertificateKind,
    pub bound_value: f64,
    pub optimum: f64,
    pub holds: bool,
}

/// Exhaustive minimum with the default size cap.
pub fn brute_force_min(instance: &IsingInstance) -> Result<(f64, SpinAssignment)> {
    brute_force_min_capped(instance, DEFAULT_BRUTE_FORCE_CAP)
}

/// Exhaustive minimum over all `2^n` assignments. Ties go to the
/// lexicographically smallest assignment, reading vertex 0 first and
/// ordering `+1` before `−1`.
pub fn brute_force_min_capped(
    instance: &IsingInstance,
    cap: usize,
) -> Result<(f64, SpinAssignment)> {
    let n = instance.n();
    if n > cap || n > 63 {
        return Err(Error::SizeCap {
            what: "brute-force instance",
            size: n,
            cap: cap.min(63),
        });
    }
    if n == 0 {
        return Ok((0.0, SpinAssignment::all_up(0)));
    }
    let csr = Csr::new(instance);
    let prefix_bits = n.min(6);
    let low_bits = n - prefix_bits;
    let best = (0u64..1 << prefix_bits)
        .into_par_iter()
        .map(|prefix| csr.scan(prefix << low_bits, low_bits))
        .reduce(|| (f64::INFINITY, u64::MAX), |a, b| better(a, b, n));
    let spins = SpinAssignment::from_bits(n, best.1);
    let energy = instance.energy(&spins)?;
    Ok((energy, spins))
}

/// Lexicographic key: vertex 0 is the most significant position.
fn tie_key(bits: u64, n: usize) -> u64 {
    bits.reverse_bits() >> (64 - n)
}

fn better(a: (f64, u64), b: (f64, u64), n: usize) -> (f64, u64) {
    if b.0 < a.0
        || (b.0 == a.0 && b.1 != u64::MAX && (a.1 == u64::MAX || tie_key(b.1, n) < tie_key(a.1, n)))
    {
        b
    } else {
        a
    }
}

struct Csr {
    n: usize,
    start: Vec<usize>,
    nbr: Vec<usize>,
    coupling: Vec<f64>,
    fields: Vec<f64>,
}

impl Csr {
    fn new(instance: &IsingInstance) -> Self {
        let adj = instance.adjacency();
        let mut start = vec![0];
        let mut nbr = Vec::new();
        let mut coupling = Vec::new();
        for list in &adj {
            for &(w, k) in list {
                nbr.push(w);
                coupling.push(instance.edges()[k].coupling);
            }
            start.push(nbr.len());
        }
        Csr {
            n: instance.n(),
            start,
            nbr,
            coupling,
            fields: instance.fields().to_vec(),
        }
    }

    /// Minimum over the `2^low` assignments that agree with `base` on the
    /// high bits, walking the low bits in Gray-code order.
    fn scan(&self, base: u64, low: usize) -> (f64, u64) {
        let spin = |bits: u64, i: usize| if bits >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut s: Vec<f64> = (0..self.n).map(|i| spin(base, i)).collect();
        // local[i] = d_i + Σ_j c_ij s_j
        let mut local: Vec<f64> = (0..self.n)
            .map(|i| {
                self.fields[i]
                    + (self.start[i]..self.start[i + 1])
                        .map(|k| self.coupling[k] * s[self.nbr[k]])
                        .sum::<f64>()
            })
            .collect();
        let mut energy: f64 = (0..self.n)
            .map(|i| s[i] * (self.fields[i] + 0.5 * (local[i] - self.fields[i])))
            .sum();
        let mut bits = base;
        let mut best = (energy, bits);
        for g in 1u64..1 << low {
            let i = g.trailing_zeros() as usize;
            let si = s[i];
            energy -= 2.0 * si * local[i];
            s[i] = -si;
            bits ^= 1 << i;
            for k in self.start[i]..self.start[i + 1] {
                local[self.nbr[k]] -= 2.0 * self.coupling[k] * si;
            }
            if energy <= best.0 {
                best = better(best, (energy, bits), self.n);
            }
        }
        best
    }
}

/// Extensivity certificate: on a simple planar graph the optimum is at
/// most `−W/3`. Exact-mode instances compare `3·opt ≤ −W` in integers.
pub fn check_classical_extensivity(
    instance: &IsingInstance,
    optimum: f64,
) -> Result<BoundCertificate> {
    if instance.is_multigraph_mode() || !instance.is_simple() {
        return Err(Error::CertificateNotApplicable(
            "the -W/3 bound requires a simple graph".into(),
        ));
    }
    let bound_value = -instance.coupling_weight() / 3.0;
    let holds = if instance.is_exact() && optimum.fract() == 0.0 {
        let w = instance.coupling_weight_exact()?;
        let opt = optimum as i64;
        opt.checked_mul(3).ok_or(Error::Overflow)? <= -w
    } else {
        optimum <= bound_value + FLOAT_TOLERANCE
    };
    Ok(BoundCertificate {
        kind: CertificateKind::ClassicalExtensivity,
        bound_value,
        optimum,
        holds,
    })
}

/// Quantum analogue: `λ(H) ≤ −Σ‖L_u‖/5 − W/(5·3⁵)` with `W = Σ‖Q_uv‖`.
pub fn check_quantum_extensivity(h: &QuantumIsingHamiltonian, lambda_min: f64) -> BoundCertificate {
    let bound_value = crate::quantum::quantum_extensivity_bound(h);
    BoundCertificate {
        kind: CertificateKind::QuantumExtensivity,
        bound_value,
        optimum: lambda_min,
        holds: lambda_min <= bound_value + FLOAT_TOLERANCE,
    }
}
