//! One entry point that routes an instance file to a named solver.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::PlanarEmbedding;
use crate::error::{Error, Result};
use crate::format::AnyInstance;
use crate::instance::IsingInstance;
use crate::lattice::{lattice_ptas_min, strip_dp_min_capped, LatticeInstance, DEFAULT_STRIP_CAP};
use crate::oracle::brute_force_min_capped;
use crate::outerplanar::{planar_ptas_report, PlanarPtasOptions};
use crate::planar_exact::planar_exact_min;
use crate::quantum::{
    bounded_degree_ptas, exact_diag_min, product_state_certificate, star_ptas_min, EigenOptions,
    QuantumIsingHamiltonian,
};
use crate::result::{ComponentState, Guarantee, SolveResult, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BruteForce,
    PlanarExact,
    StripDp,
    LatticePtas,
    PlanarPtas,
    ExactDiag,
    ProductState,
    QuantumKpr,
    StarPtas,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::BruteForce,
        Method::PlanarExact,
        Method::StripDp,
        Method::LatticePtas,
        Method::PlanarPtas,
        Method::ExactDiag,
        Method::ProductState,
        Method::QuantumKpr,
        Method::StarPtas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::BruteForce => "brute-force",
            Method::PlanarExact => "planar-exact",
            Method::StripDp => "strip-dp",
            Method::LatticePtas => "lattice-ptas",
            Method::PlanarPtas => "planar-ptas",
            Method::ExactDiag => "exact-diag",
            Method::ProductState => "product-state",
            Method::QuantumKpr => "quantum-kpr",
            Method::StarPtas => "star-ptas",
        }
    }

    pub fn uses_epsilon(self) -> bool {
        matches!(
            self,
            Method::LatticePtas | Method::PlanarPtas | Method::QuantumKpr | Method::StarPtas
        )
    }

    /// Methods that accept an instance of this kind.
    pub fn applicable(kind: &str) -> &'static [Method] {
        match kind {
            "lattice" => &[
                Method::BruteForce,
                Method::PlanarExact,
                Method::StripDp,
                Method::LatticePtas,
                Method::PlanarPtas,
            ],
            "classical" => &[Method::BruteForce, Method::PlanarExact, Method::PlanarPtas],
            "quantum" => &[Method::ExactDiag, Method::ProductState, Method::QuantumKpr],
            "star" => &[Method::ExactDiag, Method::ProductState, Method::StarPtas],
            _ => &[],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInstance(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub epsilon: f64,
    pub width_cap: Option<usize>,
    pub fallback_cap: usize,
    /// Largest component diagonalized by the KPR method.
    pub component_cap: usize,
    pub brute_force_cap: usize,
    pub eigen: EigenOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: 0.5,
            width_cap: None,
            fallback_cap: 22,
            component_cap: 14,
            brute_force_cap: crate::oracle::DEFAULT_BRUTE_FORCE_CAP,
            eigen: EigenOptions::default(),
        }
    }
}

/// The classical instance and embedding carried by a classical or lattice file.
pub fn classical_parts(
    instance: &AnyInstance,
) -> Result<Option<(IsingInstance, Option<PlanarEmbedding>)>> {
    Ok(match instance {
        AnyInstance::Classical(f) => Some((f.instance()?, f.embedding()?)),
        AnyInstance::Lattice(l) => Some((l.to_instance(), Some(l.embedding()))),
        _ => None,
    })
}

/// The quantum Hamiltonian and embedding carried by a quantum or star file.
pub fn quantum_parts(
    instance: &AnyInstance,
) -> Result<Option<(QuantumIsingHamiltonian, Option<PlanarEmbedding>)>> {
    Ok(match instance {
        AnyInstance::Quantum(f) => Some((f.hamiltonian()?, f.embedding()?)),
        AnyInstance::Star(s) => Some((s.to_hamiltonian()?, None)),
        _ => None,
    })
}

fn need_embedding(emb: Option<PlanarEmbedding>, method: Method) -> Result<PlanarEmbedding> {
    emb.ok_or_else(|| {
        Error::Unsupported(format!(
            "{method} needs a rotation system in the instance file"
        ))
    })
}

fn unsupported(method: Method, kind: &str) -> Error {
    Error::Unsupported(format!("{method} does not apply to {kind} instances"))
}

pub fn solve(instance: &AnyInstance, method: Method, opts: &SolveOptions) -> Result<SolveResult> {
    let start = Instant::now();
    let kind = instance.kind();
    if !Method::applicable(kind).contains(&method) {
        return Err(unsupported(method, kind));
    }
    let mut result = match method {
        Method::BruteForce
        | Method::PlanarExact
        | Method::PlanarPtas
        | Method::StripDp
        | Method::LatticePtas => {
            let (inst, emb) =
                classical_parts(instance)?.ok_or_else(|| unsupported(method, kind))?;
            match method {
                Method::BruteForce => {
                    let (_, s) = brute_force_min_capped(&inst, opts.brute_force_cap)?;
                    SolveResult::classical("brute-force", &inst, s, Guarantee::Exact)?
                }
                Method::PlanarExact => planar_exact_min(&inst, &need_embedding(emb, method)?)?,
                Method::PlanarPtas => {
                    let popts = PlanarPtasOptions {
                        width_cap: opts.width_cap,
                        fallback_cap: opts.fallback_cap,
                    };
                    planar_ptas_report(&inst, &need_embedding(emb, method)?, opts.epsilon, &popts)?
                        .result
                }
                Method::StripDp | Method::LatticePtas => {
                    let AnyInstance::Lattice(l) = instance else {
                        return Err(unsupported(method, kind));
                    };
                    lattice_method(l, method, opts)?
                }
                _ => unreachable!(),
            }
        }
        Method::ExactDiag => {
            let (h, _) = quantum_parts(instance)?.ok_or_else(|| unsupported(method, kind))?;
            let g = exact_diag_min(&h, &opts.eigen)?;
            let mut r = SolveResult::new(
                "exact-diag",
                g.energy,
                Witness::Components {
                    components: vec![ComponentState {
                        qubits: (0..h.n()).collect(),
                        energy: g.energy,
                        amplitudes: g.vector.iter().map(|a| [a.re, a.im]).collect(),
                    }],
                },
                Guarantee::Exact,
            );
            r.diagnostics.subproblems = 1;
            r.diagnostics.note("dense", g.dense);
            r.diagnostics.note("iterations", g.iterations);
            r
        }
        Method::ProductState => {
            let (h, emb) = quantum_parts(instance)?.ok_or_else(|| unsupported(method, kind))?;
            product_state_certificate(&h, emb.as_ref())?.into_result()
        }
        Method::QuantumKpr => {
            let AnyInstance::Quantum(f) = instance else {
                return Err(unsupported(method, kind));
            };
            let out = bounded_degree_ptas(&f.hamiltonian()?, opts.epsilon, opts.component_cap)?;
            let mut r = out.result;
            r.diagnostics.note("removed_edges", &out.cut.removed_edges);
            r
        }
        Method::StarPtas => {
            let AnyInstance::Star(s) = instance else {
                return Err(unsupported(method, kind));
            };
            star_ptas_min(s, opts.epsilon)?
        }
    };
    if method.uses_epsilon() {
        result.diagnostics.note("epsilon", opts.epsilon);
    }
    result.diagnostics.set_wall(start.elapsed());
    Ok(result)
}

fn lattice_method(l: &LatticeInstance, method: Method, opts: &SolveOptions) -> Result<SolveResult> {
    match method {
        Method::StripDp => {
            let (_, s) = strip_dp_min_capped(l, DEFAULT_STRIP_CAP)?;
            let mut r = SolveResult::classical("strip-dp", &l.to_instance(), s, Guarantee::Exact)?;
            r.diagnostics.subproblems = 1;
            Ok(r)
        }
        _ => lattice_ptas_min(l, opts.epsilon),
    }
}
