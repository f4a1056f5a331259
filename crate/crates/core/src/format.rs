//! JSON file formats for classical, lattice, quantum and star instances,
//! and instance validation reports.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::embedding::PlanarEmbedding;
use crate::error::{Error, Result};
use crate::instance::{Edge, IsingInstance, NumericMode};
use crate::lattice::LatticeInstance;
use crate::quantum::{PauliTwoBody, QuantumIsingHamiltonian, StarInstance};

fn yes() -> bool {
    true
}

/// `{"n", "edges": [[u, v, c]], "fields": [[u, d]], "rotation", "outer_face", "simple"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<(usize, f64)>,
    /// Outgoing dart ids per vertex in cyclic order; dart `2k` runs from the
    /// first to the second endpoint of edge `k`, dart `2k + 1` back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_face: Option<usize>,
    #[serde(default = "yes")]
    pub simple: bool,
}

impl InstanceFile {
    pub fn from_instance(instance: &IsingInstance, embedding: Option<&PlanarEmbedding>) -> Self {
        InstanceFile {
            n: instance.n(),
            edges: instance
                .edges()
                .iter()
                .map(|e| (e.u, e.v, e.coupling))
                .collect(),
            fields: instance
                .fields()
                .iter()
                .enumerate()
                .filter(|(_, d)| **d != 0.0)
                .map(|(u, d)| (u, *d))
                .collect(),
            rotation: embedding.map(|e| e.rotation().to_vec()),
            outer_face: embedding.map(|e| e.outer_face()),
            simple: !instance.is_multigraph_mode(),
        }
    }

    pub fn instance(&self) -> Result<IsingInstance> {
        let edges = self
            .edges
            .iter()
            .map(|&(u, v, c)| Edge::new(u, v, c))
            .collect();
        let fields = collect_locals(self.n, self.fields.iter().copied(), 0.0)?;
        if self.simple {
            IsingInstance::new(self.n, edges, fields)
        } else {
            IsingInstance::multigraph(self.n, edges, fields)
        }
    }

    pub fn embedding(&self) -> Result<Option<PlanarEmbedding>> {
        embedding_from(
            self.n,
            self.edges.iter().map(|e| (e.0, e.1)).collect(),
            &self.rotation,
            self.outer_face,
        )
    }
}

fn embedding_from(
    n: usize,
    endpoints: Vec<(usize, usize)>,
    rotation: &Option<Vec<Vec<usize>>>,
    outer_face: Option<usize>,
) -> Result<Option<PlanarEmbedding>> {
    let Some(rotation) = rotation else {
        return Ok(None);
    };
    if rotation.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: rotation.len(),
        });
    }
    PlanarEmbedding::new(endpoints, rotation.clone(), outer_face.unwrap_or(0)).map(Some)
}

/// Gathers `(vertex, value)` pairs into a dense vector, rejecting repeats.
fn collect_locals<T: Copy>(
    n: usize,
    items: impl Iterator<Item = (usize, T)>,
    zero: T,
) -> Result<Vec<T>> {
    let mut out = vec![zero; n];
    let mut seen = vec![false; n];
    for (u, x) in items {
        if u >= n {
            return Err(Error::InvalidInstance(format!(
                "local term on vertex {u} outside 0..{n}"
            )));
        }
        if seen[u] {
            return Err(Error::InvalidInstance(format!(
                "vertex {u} has two local terms"
            )));
        }
        seen[u] = true;
        out[u] = x;
    }
    Ok(out)
}

/// Edge payload: the 3×3 two-body matrix plus optional one-body parts on
/// each endpoint, folded into the vertex terms on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumEdgeSpec {
    pub h: [[f64; 3]; 3],
    #[serde(default, skip_serializing_if = "is_zero3")]
    pub left: [f64; 3],
    #[serde(default, skip_serializing_if = "is_zero3")]
    pub right: [f64; 3],
}

fn is_zero3(v: &[f64; 3]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

/// `{"n", "edges": [[u, v, {"h": 3x3}]], "locals": [[u, [lx, ly, lz]]], "rotation", "outer_face"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, QuantumEdgeSpec)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub locals: Vec<(usize, [f64; 3])>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_face: Option<usize>,
}

impl QuantumFile {
    pub fn from_hamiltonian(
        h: &QuantumIsingHamiltonian,
        embedding: Option<&PlanarEmbedding>,
    ) -> Self {
        QuantumFile {
            n: h.n(),
            edges: h
                .edges()
                .iter()
                .map(|q| {
                    (
                        q.u,
                        q.v,
                        QuantumEdgeSpec {
                            h: q.term.h,
                            left: [0.0; 3],
                            right: [0.0; 3],
                        },
                    )
                })
                .collect(),
            locals: h
                .locals()
                .iter()
                .enumerate()
                .filter(|(_, l)| !is_zero3(l))
                .map(|(u, l)| (u, *l))
                .collect(),
            rotation: embedding.map(|e| e.rotation().to_vec()),
            outer_face: embedding.map(|e| e.outer_face()),
        }
    }

    pub fn hamiltonian(&self) -> Result<QuantumIsingHamiltonian> {
        let locals = collect_locals(self.n, self.locals.iter().copied(), [0.0; 3])?;
        let terms = self
            .edges
            .iter()
            .map(|(u, v, s)| (*u, *v, PauliTwoBody::new(s.h), s.left, s.right))
            .collect();
        QuantumIsingHamiltonian::with_folded_locals(self.n, terms, locals)
    }

    pub fn embedding(&self) -> Result<Option<PlanarEmbedding>> {
        embedding_from(
            self.n,
            self.edges.iter().map(|e| (e.0, e.1)).collect(),
            &self.rotation,
            self.outer_face,
        )
    }
}

/// Any supported instance file, recognised by its keys.
#[derive(Debug, Clone)]
pub enum AnyInstance {
    Classical(InstanceFile),
    Lattice(LatticeInstance),
    Quantum(QuantumFile),
    Star(StarInstance),
}

impl AnyInstance {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyInstance::Classical(_) => "classical",
            AnyInstance::Lattice(_) => "lattice",
            AnyInstance::Quantum(_) => "quantum",
            AnyInstance::Star(_) => "star",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(match self {
            AnyInstance::Classical(f) => serde_json::to_string_pretty(f)?,
            AnyInstance::Lattice(l) => serde_json::to_string_pretty(l)?,
            AnyInstance::Quantum(q) => serde_json::to_string_pretty(q)?,
            AnyInstance::Star(s) => serde_json::to_string_pretty(s)?,
        })
    }
}

pub fn parse_instance(text: &str) -> Result<AnyInstance> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(map) = &value else {
        return Err(Error::InvalidInstance(
            "instance file must hold a JSON object".into(),
        ));
    };
    let inst = if map.contains_key("width") {
        AnyInstance::Lattice(serde_json::from_value(value)?)
    } else if map.contains_key("central") || map.contains_key("bath") {
        let star: StarInstance = serde_json::from_value(value)?;
        star.validate()?;
        AnyInstance::Star(star)
    } else if map.contains_key("locals") || quantum_edges(map.get("edges")) {
        let file: QuantumFile = serde_json::from_value(value)?;
        file.hamiltonian()?;
        file.embedding()?;
        AnyInstance::Quantum(file)
    } else {
        let file: InstanceFile = serde_json::from_value(value)?;
        file.instance()?;
        file.embedding()?;
        AnyInstance::Classical(file)
    };
    Ok(inst)
}

fn quantum_edges(edges: Option<&Value>) -> bool {
    let Some(Value::Array(list)) = edges else {
        return false;
    };
    list.iter()
        .any(|e| matches!(e, Value::Array(parts) if parts.get(2).is_some_and(Value::is_object)))
}

pub fn load_instance(path: &Path) -> Result<AnyInstance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub edges: usize,
    pub simple: bool,
    pub connected: bool,
    pub components: usize,
    pub max_degree: usize,
    pub numeric_mode: NumericMode,
    /// `None` when no embedding was supplied.
    pub embedding_consistent: Option<bool>,
    pub faces: Option<usize>,
    /// Whether the `−W/3` extensivity certificate applies (simple graphs only).
    pub extensivity_certificate_applicable: bool,
}

pub fn validate(instance: &IsingInstance, embedding: Option<&PlanarEmbedding>) -> ValidationReport {
    let comps = instance.components();
    ValidationReport {
        n: instance.n(),
        edges: instance.edges().len(),
        simple: instance.is_simple(),
        connected: comps.len() <= 1,
        components: comps.len(),
        max_degree: instance.degrees().into_iter().max().unwrap_or(0),
        numeric_mode: instance.numeric_mode(),
        embedding_consistent: embedding
            .map(|e| e.matches_edges(instance.n(), instance.edges().iter().map(|e| (e.u, e.v)))),
        faces: embedding.map(|e| e.faces().len()),
        extensivity_certificate_applicable: instance.is_simple(),
    }
}
