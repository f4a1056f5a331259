//! Central-spin instances: one qubit coupled to a bath of qubits with no
//! bath–bath terms. Interactions are rounded onto a mesh, identical rounded
//! interactions are grouped, and the grouped Hamiltonian is diagonalized in
//! the central qubit ⊗ product-of-symmetric-subspaces basis.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::{fix_phase, lanczos_min, EigenOptions, LinearOperator};
use super::hamiltonian::QuantumIsingHamiltonian;
use super::pauli::{Pauli, PauliTwoBody};
use crate::error::{Error, Result};
use crate::result::{Guarantee, SolveResult, Witness};

/// Reduced dimensions up to this size are diagonalized densely.
pub const STAR_DENSE_CAP: usize = 512;
/// Largest reduced dimension accepted.
pub const STAR_DIMENSION_CAP: usize = 1_000_000;

/// `Σ h[α][β]·P^α_0 ⊗ P^β_j + bath_local·P_j + central_local·P_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathTerm {
    pub h: [[f64; 3]; 3],
    #[serde(default)]
    pub bath_local: [f64; 3],
    #[serde(default, skip_serializing_if = "is_zero3")]
    pub central_local: [f64; 3],
}

fn is_zero3(v: &[f64; 3]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

impl BathTerm {
    pub fn new(h: [[f64; 3]; 3], bath_local: [f64; 3]) -> Self {
        BathTerm {
            h,
            bath_local,
            central_local: [0.0; 3],
        }
    }

    /// Coefficients in a fixed order: the 9 two-body entries, then bath
    /// local, then central local.
    pub fn coefficients(&self) -> [f64; 15] {
        let mut c = [0.0; 15];
        for a in 0..3 {
            for b in 0..3 {
                c[3 * a + b] = self.h[a][b];
            }
        }
        c[9..12].copy_from_slice(&self.bath_local);
        c[12..15].copy_from_slice(&self.central_local);
        c
    }

    pub fn from_coefficients(c: &[f64; 15]) -> Self {
        let mut h = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                h[a][b] = c[3 * a + b];
            }
        }
        BathTerm {
            h,
            bath_local: [c[9], c[10], c[11]],
            central_local: [c[12], c[13], c[14]],
        }
    }

    /// The 4×4 matrix on central ⊗ bath (central is the high factor here,
    /// matching [`PauliTwoBody::matrix`]).
    pub fn matrix(&self) -> nalgebra::Matrix4<Complex64> {
        let mut m = PauliTwoBody::new(self.h).matrix();
        let id = nalgebra::Matrix2::<Complex64>::identity();
        for (i, p) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
            let pm = p.matrix();
            m += id.kronecker(&pm) * Complex64::new(self.bath_local[i], 0.0);
            m += pm.kronecker(&id) * Complex64::new(self.central_local[i], 0.0);
        }
        m
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        if self.coefficients().iter().all(|&c| c == 0.0) {
            return 0.0;
        }
        let eig = SymmetricEigen::new(DMatrix::from_iterator(4, 4, self.matrix().iter().copied()));
        eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarInstance {
    pub central: [f64; 3],
    pub bath: Vec<BathTerm>,
    pub a: f64,
    pub b: f64,
}

impl StarInstance {
    /// Checks `0 < a ≤ ‖H_{0,j}‖ ≤ b` for every bath term.
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= self.b && self.b.is_finite()) {
            return Err(Error::InvalidBounds(format!(
                "need 0 < a <= b, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if !self.central.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInstance("central term must be finite".into()));
        }
        for (j, t) in self.bath.iter().enumerate() {
            if !t.coefficients().iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "bath term {j} is not finite"
                )));
            }
            let norm = t.norm();
            if norm < self.a * (1.0 - 1e-9) || norm > self.b * (1.0 + 1e-9) {
                return Err(Error::InvalidBounds(format!(
                    "bath term {j} has norm {norm}, outside [{}, {}]",
                    self.a, self.b
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.bath.len()
    }

    pub fn interaction_weight(&self) -> f64 {
        self.bath.iter().map(|t| t.norm()).sum()
    }

    /// The full `(n+1)`-qubit Hamiltonian; qubit 0 is the centre.
    pub fn to_hamiltonian(&self) -> Result<QuantumIsingHamiltonian> {
        star_hamiltonian(self.central, &self.bath)
    }
}

fn star_hamiltonian(central: [f64; 3], bath: &[BathTerm]) -> Result<QuantumIsingHamiltonian> {
    let n = bath.len() + 1;
    let terms = bath
        .iter()
        .enumerate()
        .map(|(j, t)| {
            (
                0,
                j + 1,
                PauliTwoBody::new(t.h),
                t.central_local,
                t.bath_local,
            )
        })
        .collect();
    let mut locals = vec![[0.0; 3]; n];
    locals[0] = central;
    QuantumIsingHamiltonian::with_folded_locals(n, terms, locals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedStar {
    pub central: [f64; 3],
    /// Bath indices in each group, in order of first appearance.
    pub groups: Vec<Vec<usize>>,
    pub representatives: Vec<BathTerm>,
    pub membership: Vec<usize>,
    /// Mesh step used, in the original units.
    pub step: f64,
    /// `‖H_{0,j} − G_{α(j)}‖` per bath term.
    pub rounding_errors: Vec<f64>,
}

impl GroupedStar {
    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    pub fn reduced_dimension(&self) -> usize {
        self.groups
            .iter()
            .fold(2usize, |d, g| d.saturating_mul(g.len() + 1))
    }

    /// The grouped Hamiltonian on the full `(n+1)`-qubit space.
    pub fn to_hamiltonian(&self) -> Result<QuantumIsingHamiltonian> {
        let bath: Vec<BathTerm> = self
            .membership
            .iter()
            .map(|&g| self.representatives[g])
            .collect();
        star_hamiltonian(self.central, &bath)
    }
}

/// Rounds every coefficient vector to a cubic mesh of step `2εa/15`, which
/// keeps each rounded operator within `ε·a ≤ ε‖H_{0,j}‖` of the original by
/// the triangle inequality. Errors are recomputed with explicit norms; the
/// step is halved until every one passes.
pub fn coarse_grain(star: &StarInstance, epsilon: f64) -> Result<GroupedStar> {
    star.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInstance(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    // Work with b = 1.
    let scale = star.b;
    let mut step = 2.0 * epsilon * (star.a / scale) / 15.0;
    let norms: Vec<f64> = star.bath.iter().map(|t| t.norm()).collect();
    for _ in 0..60 {
        let mut index: HashMap<[i64; 15], usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut representatives = Vec::new();
        let mut membership = Vec::with_capacity(star.n());
        for (j, t) in star.bath.iter().enumerate() {
            let key = t.coefficients().map(|c| (c / scale / step).round() as i64);
            let g = *index.entry(key).or_insert_with(|| {
                groups.push(Vec::new());
                representatives.push(BathTerm::from_coefficients(
                    &key.map(|k| k as f64 * step * scale),
                ));
                groups.len() - 1
            });
            groups[g].push(j);
            membership.push(g);
        }
        let rounding_errors: Vec<f64> = star
            .bath
            .iter()
            .zip(&membership)
            .map(|(t, &g)| difference_norm(t, &representatives[g]))
            .collect();
        if rounding_errors
            .iter()
            .zip(&norms)
            .all(|(e, n)| *e <= epsilon * n * (1.0 + 1e-12))
        {
            return Ok(GroupedStar {
                central: star.central,
                groups,
                representatives,
                membership,
                step: step * scale,
                rounding_errors,
            });
        }
        step /= 2.0;
    }
    Err(Error::Internal(
        "mesh refinement did not reach the requested accuracy".into(),
    ))
}

fn difference_norm(x: &BathTerm, y: &BathTerm) -> f64 {
    let (cx, cy) = (x.coefficients(), y.coefficients());
    let mut d = [0.0; 15];
    for i in 0..15 {
        d[i] = cx[i] - cy[i];
    }
    BathTerm::from_coefficients(&d).norm()
}

/// Collective spin matrices `(J^x, J^y, J^z)` on the symmetric subspace of
/// `k` qubits, in the basis `m = J, J−1, …, −J` with `J = k/2`.
pub fn collective_spin(k: usize) -> [DMatrix<Complex64>; 3] {
    let d = k + 1;
    let j = k as f64 / 2.0;
    let mut jx = DMatrix::zeros(d, d);
    let mut jy = DMatrix::zeros(d, d);
    let mut jz = DMatrix::zeros(d, d);
    for i in 0..d {
        let m = j - i as f64;
        jz[(i, i)] = Complex64::new(m, 0.0);
        if i + 1 < d {
            // ⟨m|J^+|m−1⟩ = sqrt(J(J+1) − m(m−1)).
            let c = (j * (j + 1.0) - m * (m - 1.0)).sqrt();
            jx[(i, i + 1)] = Complex64::new(c / 2.0, 0.0);
            jx[(i + 1, i)] = Complex64::new(c / 2.0, 0.0);
            jy[(i, i + 1)] = Complex64::new(0.0, -c / 2.0);
            jy[(i + 1, i)] = Complex64::new(0.0, c / 2.0);
        }
    }
    [jx, jy, jz]
}

/// `H_0 + Σ_α G_α` restricted to the central qubit ⊗ symmetric subspaces.
/// Index layout: central bit lowest, then each group's `m`-index in turn.
pub struct ReducedStarOperator {
    dim: usize,
    strides: Vec<usize>,
    sizes: Vec<usize>,
    /// Per group and block row `c·d + i`, the nonzero entries `(c', i', value)`
    /// of its block on central ⊗ group.
    blocks: Vec<Vec<Vec<(usize, usize, Complex64)>>>,
    central: [[Complex64; 2]; 2],
}

impl ReducedStarOperator {
    pub fn new(grouped: &GroupedStar) -> Result<Self> {
        let dim = grouped.reduced_dimension();
        if dim > STAR_DIMENSION_CAP {
            return Err(Error::SizeCap {
                what: "reduced star dimension",
                size: dim,
                cap: STAR_DIMENSION_CAP,
            });
        }
        let pauli: Vec<nalgebra::Matrix2<Complex64>> = [Pauli::X, Pauli::Y, Pauli::Z]
            .iter()
            .map(|p| p.matrix())
            .collect();
        let mut central = [[Complex64::ZERO; 2]; 2];
        for (a, p) in pauli.iter().enumerate() {
            for r in 0..2 {
                for c in 0..2 {
                    central[r][c] += p[(r, c)] * grouped.central[a];
                }
            }
        }
        let mut strides = Vec::new();
        let mut sizes = Vec::new();
        let mut stride = 2;
        let mut blocks = Vec::new();
        for (g, members) in grouped.groups.iter().enumerate() {
            let k = members.len();
            let d = k + 1;
            strides.push(stride);
            sizes.push(d);
            stride *= d;
            let rep = &grouped.representatives[g];
            let jm = collective_spin(k);
            let id_g = DMatrix::<Complex64>::identity(d, d);
            let id_c = DMatrix::<Complex64>::identity(2, 2);
            let to_dyn =
                |m: &nalgebra::Matrix2<Complex64>| DMatrix::from_iterator(2, 2, m.iter().copied());
            // Block on central ⊗ group with the central factor as the high index.
            let mut block = DMatrix::<Complex64>::zeros(2 * d, 2 * d);
            for a in 0..3 {
                let pa = to_dyn(&pauli[a]);
                for b in 0..3 {
                    let h = rep.h[a][b];
                    if h != 0.0 {
                        block += pa.kronecker(&jm[b]) * Complex64::new(2.0 * h, 0.0);
                    }
                }
                if rep.bath_local[a] != 0.0 {
                    block += id_c.kronecker(&jm[a]) * Complex64::new(2.0 * rep.bath_local[a], 0.0);
                }
                if rep.central_local[a] != 0.0 {
                    block +=
                        pa.kronecker(&id_g) * Complex64::new(k as f64 * rep.central_local[a], 0.0);
                }
            }
            let rows = (0..2 * d)
                .map(|r| {
                    (0..2 * d)
                        .filter(|&c| block[(r, c)] != Complex64::ZERO)
                        .map(|c| (c / d, c % d, block[(r, c)]))
                        .collect()
                })
                .collect();
            blocks.push(rows);
        }
        Ok(ReducedStarOperator {
            dim,
            strides,
            sizes,
            blocks,
            central,
        })
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut e = vec![Complex64::ZERO; self.dim];
        let mut col = vec![Complex64::ZERO; self.dim];
        for j in 0..self.dim {
            e[j] = Complex64::ONE;
            self.apply(&e, &mut col);
            e[j] = Complex64::ZERO;
            m.column_mut(j)
                .iter_mut()
                .zip(&col)
                .for_each(|(a, b)| *a = *b);
        }
        m
    }
}

impl LinearOperator for ReducedStarOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.par_chunks_mut(4096).enumerate().for_each(|(chunk, out)| {
            for (off, yo) in out.iter_mut().enumerate() {
                let idx = chunk * 4096 + off;
                let c = idx & 1;
                let mut acc = self.central[c][0] * x[idx & !1] + self.central[c][1] * x[idx | 1];
                for (g, rows) in self.blocks.iter().enumerate() {
                    let (stride, size) = (self.strides[g], self.sizes[g]);
                    let i = idx / stride % size;
                    let base = idx - c - i * stride;
                    for &(cc, ci, v) in &rows[c * size + i] {
                        acc += v * x[base + cc + ci * stride];
                    }
                }
                *yo = acc;
            }
        });
    }
}

/// Smallest eigenvalue of the grouped Hamiltonian, computed in the
/// symmetric subspace, with its reduced eigenvector.
pub fn symmetric_subspace_min(grouped: &GroupedStar) -> Result<(f64, Vec<Complex64>)> {
    symmetric_subspace_min_with(grouped, STAR_DENSE_CAP)
}

pub fn symmetric_subspace_min_with(
    grouped: &GroupedStar,
    dense_cap: usize,
) -> Result<(f64, Vec<Complex64>)> {
    let op = ReducedStarOperator::new(grouped)?;
    if op.dim <= dense_cap {
        let eig = SymmetricEigen::new(op.dense());
        let mut best = 0;
        for (i, &v) in eig.eigenvalues.iter().enumerate() {
            if v < eig.eigenvalues[best] {
                best = i;
            }
        }
        let mut v: Vec<Complex64> = eig.eigenvectors.column(best).iter().copied().collect();
        fix_phase(&mut v);
        return Ok((eig.eigenvalues[best], v));
    }
    let (lambda, v, _) = lanczos_min(&op, &EigenOptions::default())?;
    Ok((lambda, v))
}

pub fn star_ptas_min(star: &StarInstance, epsilon: f64) -> Result<SolveResult> {
    let start = Instant::now();
    let grouped = coarse_grain(star, epsilon)?;
    let (lambda, vector) = symmetric_subspace_min(&grouped)?;
    let weight = star.interaction_weight();
    let mut result = SolveResult::new(
        "star-ptas",
        lambda,
        Witness::Symmetric {
            group_sizes: grouped.group_sizes(),
            amplitudes: vector.iter().map(|a| [a.re, a.im]).collect(),
        },
        Guarantee::AbsoluteError {
            bound: epsilon * weight,
        },
    );
    let perturbation: f64 = grouped.rounding_errors.iter().sum();
    result.diagnostics.subproblems = 1;
    result.diagnostics.note("groups", grouped.groups.len());
    result
        .diagnostics
        .note("reduced_dimension", grouped.reduced_dimension());
    result.diagnostics.note("mesh_step", grouped.step);
    result.diagnostics.note("perturbation_bound", perturbation);
    if let Ok(h) = star.to_hamiltonian() {
        let ext = super::quantum_extensivity_bound(&h);
        if ext < 0.0 {
            result.diagnostics.note(
                "relative_error_via_extensivity",
                epsilon * weight / ext.abs(),
            );
        }
    }
    result.diagnostics.set_wall(start.elapsed());
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::eigen::exact_diag_min;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(a: Pauli, b: Pauli, c: f64) -> BathTerm {
        BathTerm::new(PauliTwoBody::single(a, b, c).h, [0.0; 3])
    }

    fn random_term(rng: &mut ChaCha8Rng, a: f64) -> BathTerm {
        let mut h = [[0.0; 3]; 3];
        h.iter_mut()
            .flatten()
            .for_each(|c| *c = rng.random_range(-1.0..1.0));
        let bl = [
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        ];
        let t = BathTerm::new(h, bl);
        let target = rng.random_range(a..1.0);
        let s = target / t.norm();
        let mut c = t.coefficients();
        c.iter_mut().for_each(|x| *x *= s);
        BathTerm::from_coefficients(&c)
    }

    #[test]
    fn collective_commutators() {
        for k in 1..6 {
            let [jx, jy, jz] = collective_spin(k);
            let i = Complex64::new(0.0, 1.0);
            let err = (&jx * &jy - &jy * &jx - &jz * i)
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12);
            let err = (&jy * &jz - &jz * &jy - &jx * i)
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn classical_two_bath_example() {
        let star = StarInstance {
            central: [0.0; 3],
            bath: vec![single(Pauli::Z, Pauli::Z, 1.0); 2],
            a: 1.0,
            b: 1.0,
        };
        let g = coarse_grain(&star, 0.1).unwrap();
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.reduced_dimension(), 6);
        let (l, _) = symmetric_subspace_min(&g).unwrap();
        assert!((l + 2.0).abs() < 1e-12);
    }

    #[test]
    fn xx_star_is_minus_n() {
        for n in [1usize, 4, 7] {
            let star = StarInstance {
                central: [0.0; 3],
                bath: vec![single(Pauli::X, Pauli::X, 1.0); n],
                a: 1.0,
                b: 1.0,
            };
            let r = star_ptas_min(&star, 0.3).unwrap();
            assert!((r.energy + n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn reduced_matches_full_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let reps: Vec<BathTerm> = (0..3).map(|_| random_term(&mut rng, 0.5)).collect();
            let n = rng.random_range(3..=9);
            let bath: Vec<BathTerm> = (0..n).map(|j| reps[j % 3]).collect();
            let star = StarInstance {
                central: [0.3, -0.2, 0.1],
                bath,
                a: 0.5,
                b: 1.0,
            };
            let g = coarse_grain(&star, 1e-9).unwrap();
            assert_eq!(g.groups.len(), 3);
            let (l, _) = symmetric_subspace_min(&g).unwrap();
            let full = exact_diag_min(&g.to_hamiltonian().unwrap(), &EigenOptions::default())
                .unwrap()
                .energy;
            assert!((l - full).abs() < 1e-8, "{l} vs {full}");
        }
    }

    #[test]
    fn matrix_free_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let reps: Vec<BathTerm> = (0..3).map(|_| random_term(&mut rng, 0.5)).collect();
        let bath: Vec<BathTerm> = (0..15).map(|j| reps[j % 3]).collect();
        let star = StarInstance {
            central: [0.1, 0.0, 0.4],
            bath,
            a: 0.5,
            b: 1.0,
        };
        let g = coarse_grain(&star, 1e-9).unwrap();
        assert_eq!(g.reduced_dimension(), 2 * 6 * 6 * 6);
        let (dense, _) = symmetric_subspace_min_with(&g, usize::MAX).unwrap();
        let (l, v) = symmetric_subspace_min_with(&g, 0).unwrap();
        let op = ReducedStarOperator::new(&g).unwrap();
        let mut hv = vec![Complex64::ZERO; v.len()];
        op.apply(&v, &mut hv);
        let rayleigh: Complex64 = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
        assert!((rayleigh.re - l).abs() < 1e-9);
        assert!((l - dense).abs() < 1e-8 * (1.0 + dense.abs()));
    }

    #[test]
    fn rounding_and_weyl() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let bath: Vec<BathTerm> = (0..8).map(|_| random_term(&mut rng, 0.5)).collect();
        let star = StarInstance {
            central: [0.2, 0.1, -0.3],
            bath,
            a: 0.5,
            b: 1.0,
        };
        let g = coarse_grain(&star, 0.3).unwrap();
        for (e, t) in g.rounding_errors.iter().zip(&star.bath) {
            assert!(*e <= 0.3 * t.norm() + 1e-12);
        }
        let exact = exact_diag_min(&star.to_hamiltonian().unwrap(), &EigenOptions::default())
            .unwrap()
            .energy;
        let r = star_ptas_min(&star, 0.3).unwrap();
        assert!((r.energy - exact).abs() <= 0.3 * star.interaction_weight() + 1e-8);
    }

    #[test]
    fn invalid_bounds() {
        let star = StarInstance {
            central: [0.0; 3],
            bath: vec![single(Pauli::Z, Pauli::Z, 1.0)],
            a: 0.0,
            b: 1.0,
        };
        assert!(matches!(
            coarse_grain(&star, 0.1),
            Err(Error::InvalidBounds(_))
        ));
        let star = StarInstance {
            a: 1.5,
            b: 2.0,
            ..star
        };
        assert!(matches!(
            coarse_grain(&star, 0.1),
            Err(Error::InvalidBounds(_))
        ));
    }
}
