use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hamiltonian::{PauliOperator, QuantumIsingHamiltonian};
use crate::error::{Error, Result};

/// Anything that can apply a Hermitian matrix to a vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

impl LinearOperator for PauliOperator {
    fn dim(&self) -> usize {
        PauliOperator::dim(self)
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        PauliOperator::apply(self, x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Largest qubit count diagonalized densely.
    pub dense_cap: usize,
    /// Largest qubit count handled by the iterative solver.
    pub iterative_cap: usize,
    /// Residual tolerance `‖Hx − λx‖ ≤ tol·max(1, |λ|)` for the iterative solver.
    pub tolerance: f64,
    /// Budget of Hamiltonian applications for the iterative solver.
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            dense_cap: 8,
            iterative_cap: 20,
            tolerance: 1e-9,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<Complex64>,
    pub dense: bool,
    pub iterations: usize,
}

/// Smallest eigenvalue of `h` with a normalized eigenvector.
pub fn exact_diag_min(h: &QuantumIsingHamiltonian, opts: &EigenOptions) -> Result<GroundState> {
    let n = h.n();
    if n > opts.iterative_cap.max(opts.dense_cap) {
        return Err(Error::SizeCap {
            what: "exact diagonalization",
            size: n,
            cap: opts.iterative_cap.max(opts.dense_cap),
        });
    }
    if n <= opts.dense_cap {
        let (energy, vector) = dense_ground_state(h);
        return Ok(GroundState {
            energy,
            vector,
            dense: true,
            iterations: 0,
        });
    }
    let op = h.operator();
    let (energy, vector, iterations) = lanczos_min(&op, opts)?;
    Ok(GroundState {
        energy,
        vector,
        dense: false,
        iterations,
    })
}

/// Full sorted spectrum. Dense, so only for small `n`.
pub fn spectrum(h: &QuantumIsingHamiltonian, cap: usize) -> Result<Vec<f64>> {
    if h.n() > cap {
        return Err(Error::SizeCap {
            what: "dense spectrum",
            size: h.n(),
            cap,
        });
    }
    let mut ev: Vec<f64> = if h.is_real() {
        real_part(&h.dense_matrix())
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    } else {
        h.dense_matrix()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    };
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn real_part(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    m.map(|c| c.re)
}

fn dense_ground_state(h: &QuantumIsingHamiltonian) -> (f64, Vec<Complex64>) {
    let m = h.dense_matrix();
    let (energy, mut vector): (f64, Vec<Complex64>) = if h.is_real() {
        let eig = SymmetricEigen::new(real_part(&m));
        let i = argmin(eig.eigenvalues.as_slice());
        let v = eig
            .eigenvectors
            .column(i)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        (eig.eigenvalues[i], v)
    } else {
        let eig = SymmetricEigen::new(m);
        let i = argmin(eig.eigenvalues.as_slice());
        (
            eig.eigenvalues[i],
            eig.eigenvectors.column(i).iter().copied().collect(),
        )
    };
    fix_phase(&mut vector);
    (energy, vector)
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// Normalizes and rotates the global phase so the largest amplitude is
/// real and positive.
pub(crate) fn fix_phase(v: &mut [Complex64]) {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let mut big = Complex64::ONE;
    let mut mag = -1.0;
    for a in v.iter() {
        if a.norm() > mag + 1e-12 {
            mag = a.norm();
            big = *a;
        }
    }
    let phase = if mag > 0.0 {
        big.conj() / big.norm()
    } else {
        Complex64::ONE
    };
    for a in v.iter_mut() {
        *a = *a * phase / norm;
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted Lanczos with full reorthogonalization. Each restart begins from
/// the best Ritz vector of the previous cycle; convergence is judged on the
/// true residual.
pub fn lanczos_min<O: LinearOperator + ?Sized>(
    op: &O,
    opts: &EigenOptions,
) -> Result<(f64, Vec<Complex64>, usize)> {
    let dim = op.dim();
    // Keep the Krylov basis within ~256 MiB.
    let mem_cap = (256usize << 20) / (16 * dim);
    let m = dim.min(80).min(mem_cap.max(12));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|a| *a /= nx);

    let mut applications = 0usize;
    let mut w = vec![Complex64::ZERO; dim];
    loop {
        let mut basis: Vec<Vec<Complex64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m {
            op.apply(&basis[j], &mut w);
            applications += 1;
            alpha.push(dot(&basis[j], &w).re);
            // Classical Gram-Schmidt, repeated only when it cancelled most
            // of the vector (the DGKS criterion).
            let mut before = norm(&w);
            let mut bj = before;
            for _ in 0..2 {
                let coefs: Vec<Complex64> = basis.iter().map(|b| dot(b, &w)).collect();
                for (b, c) in basis.iter().zip(&coefs) {
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
                }
                bj = norm(&w);
                if bj > 0.7 * before {
                    break;
                }
                before = bj;
            }
            if j + 1 == m || bj < 1e-13 * alpha.iter().fold(1.0f64, |a, &x| a.max(x.abs())) {
                break;
            }
            beta.push(bj);
            basis.push(w.iter().map(|a| a / bj).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let i = argmin(eig.eigenvalues.as_slice());
        let y = eig.eigenvectors.column(i);
        x.iter_mut().for_each(|a| *a = Complex64::ZERO);
        for (b, &c) in basis.iter().zip(y.iter()) {
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += bi * c);
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|a| *a /= nx);
        op.apply(&x, &mut w);
        applications += 1;
        let lambda = dot(&x, &w).re;
        let residual = w
            .iter()
            .zip(&x)
            .map(|(wi, xi)| (wi - xi * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= opts.tolerance * lambda.abs().max(1.0) || k == dim {
            fix_phase(&mut x);
            return Ok((lambda, x, applications));
        }
        if applications >= opts.max_iterations {
            return Err(Error::Convergence {
                iterations: applications,
                residual,
            });
        }
    }
}
