//! Independent re-checking of a solver result against its instance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::format::AnyInstance;
use crate::oracle::{
    brute_force_min_capped, check_classical_extensivity, check_quantum_extensivity,
};
use crate::quantum::{
    coarse_grain, exact_diag_min, EigenOptions, LinearOperator, ReducedStarOperator,
};
use crate::result::{SolveResult, Witness};
use crate::solve::{classical_parts, quantum_parts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the check does not apply.
    pub passed: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub recomputed_energy: Option<f64>,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    fn push(&mut self, name: &str, passed: Option<bool>, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Classical instances up to this size are compared with brute force.
    pub classical_oracle_cap: usize,
    /// Quantum instances up to this many qubits are diagonalized.
    pub quantum_oracle_cap: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            classical_oracle_cap: 24,
            quantum_oracle_cap: 12,
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

pub fn verify(
    instance: &AnyInstance,
    result: &SolveResult,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let mut report = VerifyReport {
        recomputed_energy: None,
        checks: Vec::new(),
    };
    if let Some((inst, _)) = classical_parts(instance)? {
        let Some(spins) = result.witness.spins() else {
            report.push(
                "witness",
                Some(false),
                "classical result without a spin assignment".into(),
            );
            return Ok(report);
        };
        if spins.len() != inst.n() {
            report.push(
                "witness",
                Some(false),
                format!("{} spins for {} vertices", spins.len(), inst.n()),
            );
            return Ok(report);
        }
        let e = inst.energy(spins)?;
        report.recomputed_energy = Some(e);
        report.push(
            "energy",
            Some(close(e, result.energy)),
            format!("claimed {}, recomputed {e}", result.energy),
        );
        if inst.n() <= opts.classical_oracle_cap {
            let (opt, _) = brute_force_min_capped(&inst, opts.classical_oracle_cap)?;
            report.push(
                "guarantee",
                Some(result.guarantee.holds(e, opt, 1e-9 * (1.0 + opt.abs()))),
                format!("{:?} against brute-force optimum {opt}", result.guarantee),
            );
            match check_classical_extensivity(&inst, opt) {
                Ok(c) => report.push(
                    "extensivity",
                    Some(c.holds),
                    format!("optimum {opt} vs bound {}", c.bound_value),
                ),
                Err(e) => report.push("extensivity", None, format!("not applicable: {e}")),
            }
        } else if result.guarantee == crate::result::Guarantee::Exact {
            match check_classical_extensivity(&inst, e) {
                Ok(c) => report.push(
                    "extensivity",
                    Some(c.holds),
                    format!("claimed optimum vs bound {}", c.bound_value),
                ),
                Err(err) => report.push("extensivity", None, format!("not applicable: {err}")),
            }
        }
        return Ok(report);
    }

    let (h, _) = quantum_parts(instance)?.expect("quantum or star instance");
    let recomputed = match &result.witness {
        Witness::ProductState { bloch } => {
            let unit = bloch
                .iter()
                .all(|r| (r.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
            report.push(
                "pure_state",
                Some(unit && bloch.len() == h.n()),
                "Bloch vectors have unit length".into(),
            );
            if bloch.len() == h.n() {
                Some(h.product_energy(bloch)?)
            } else {
                None
            }
        }
        Witness::Components { components } => {
            let reduced = match result.diagnostics.extra.get("removed_edges") {
                Some(v) => {
                    let removed: Vec<usize> = serde_json::from_value(v.clone())?;
                    let mut keep = vec![true; h.edges().len()];
                    for k in removed {
                        if let Some(slot) = keep.get_mut(k) {
                            *slot = false;
                        }
                    }
                    h.with_edge_mask(&keep)
                }
                None => h.clone(),
            };
            let mut total = 0.0;
            let mut ok = true;
            for c in components {
                let part = reduced.induced(&c.qubits);
                let psi: Vec<Complex64> = c
                    .amplitudes
                    .iter()
                    .map(|a| Complex64::new(a[0], a[1]))
                    .collect();
                match part.expectation(&psi) {
                    Ok(e) => total += e,
                    Err(_) => ok = false,
                }
            }
            let covered = components.iter().map(|c| c.qubits.len()).sum::<usize>() == h.n();
            report.push(
                "components",
                Some(ok && covered),
                "component states cover every qubit".into(),
            );
            ok.then_some(total)
        }
        Witness::Symmetric { amplitudes, .. } => match instance {
            AnyInstance::Star(star) => {
                let eps = result
                    .diagnostics
                    .extra
                    .get("epsilon")
                    .and_then(|v| v.as_f64())
                    .unwrap_or(0.5);
                let op = ReducedStarOperator::new(&coarse_grain(star, eps)?)?;
                let psi: Vec<Complex64> = amplitudes
                    .iter()
                    .map(|a| Complex64::new(a[0], a[1]))
                    .collect();
                if psi.len() == op.dim() {
                    let mut out = vec![Complex64::ZERO; psi.len()];
                    op.apply(&psi, &mut out);
                    let num: Complex64 = psi.iter().zip(&out).map(|(a, b)| a.conj() * b).sum();
                    let den: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
                    Some(num.re / den)
                } else {
                    report.push(
                        "witness",
                        Some(false),
                        "reduced vector has the wrong dimension".into(),
                    );
                    None
                }
            }
            _ => None,
        },
        Witness::Spins { .. } | Witness::None => None,
    };
    report.recomputed_energy = recomputed;
    match recomputed {
        Some(e) => report.push(
            "energy",
            Some(close(e, result.energy)),
            format!("claimed {}, recomputed {e}", result.energy),
        ),
        None => report.push(
            "energy",
            Some(false),
            "witness could not be evaluated".into(),
        ),
    }
    if h.n() <= opts.quantum_oracle_cap {
        let lambda = exact_diag_min(&h, &EigenOptions::default())?.energy;
        report.push(
            "guarantee",
            Some(
                result
                    .guarantee
                    .holds(result.energy, lambda, 1e-8 * (1.0 + lambda.abs())),
            ),
            format!(
                "{:?} against exact ground energy {lambda}",
                result.guarantee
            ),
        );
        let cert = check_quantum_extensivity(&h, lambda);
        report.push(
            "extensivity",
            Some(cert.holds),
            format!("ground energy {lambda} vs bound {}", cert.bound_value),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_instance;
    use crate::solve::{solve, Method, SolveOptions};

    #[test]
    fn detects_tampering() {
        let inst =
            parse_instance(r#"{"width": 3, "height": 2, "hcoup": [1,-2,3,1], "vcoup": [2,1,-1]}"#)
                .unwrap();
        let mut r = solve(&inst, Method::PlanarExact, &SolveOptions::default()).unwrap();
        assert!(verify(&inst, &r, &VerifyOptions::default())
            .unwrap()
            .passed());
        r.energy -= 1.0;
        assert!(!verify(&inst, &r, &VerifyOptions::default())
            .unwrap()
            .passed());
    }

    #[test]
    fn multigraph_certificate_not_applicable() {
        let inst = parse_instance(r#"{"n": 2, "edges": [[0, 1, 1], [0, 1, -1]], "simple": false}"#)
            .unwrap();
        let r = solve(&inst, Method::BruteForce, &SolveOptions::default()).unwrap();
        let rep = verify(&inst, &r, &VerifyOptions::default()).unwrap();
        assert!(rep.passed());
        let ext = rep.checks.iter().find(|c| c.name == "extensivity").unwrap();
        assert_eq!(ext.passed, None);
    }

    #[test]
    fn quantum_witnesses() {
        let text = r#"{"n": 3, "edges": [[0, 1, {"h": [[1,0,0],[0,0.5,0],[0,0,1]]}], [1, 2, {"h": [[0,0,1],[0,0,0],[0.3,0,0]]}]],
                       "locals": [[0, [0.2, 0, 0.1]]]}"#;
        let inst = parse_instance(text).unwrap();
        for m in [Method::ExactDiag, Method::ProductState, Method::QuantumKpr] {
            let r = solve(&inst, m, &SolveOptions::default()).unwrap();
            let rep = verify(&inst, &r, &VerifyOptions::default()).unwrap();
            assert!(rep.passed(), "{m}: {:?}", rep.checks);
        }
    }
}
