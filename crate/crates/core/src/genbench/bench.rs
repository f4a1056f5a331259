use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{load_instance, AnyInstance};
use crate::lattice::{strip_dp_min_capped, DEFAULT_STRIP_CAP};
use crate::oracle::brute_force_min_capped;
use crate::planar_exact::planar_exact_min;
use crate::quantum::{exact_diag_min, EigenOptions};
use crate::solve::{classical_parts, quantum_parts, solve, Method, SolveOptions};

use super::generate::{generate, GeneratorSpec};

/// Where a suite instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Generated {
        id: String,
        generator: GeneratorSpec,
    },
    File {
        id: String,
        path: PathBuf,
    },
}

impl InstanceSource {
    pub fn id(&self) -> &str {
        match self {
            InstanceSource::Generated { id, .. } | InstanceSource::File { id, .. } => id,
        }
    }
}

fn default_oracle_cap() -> usize {
    20
}

fn default_quantum_oracle_cap() -> usize {
    12
}

fn default_repeats() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSuite {
    #[serde(default)]
    pub instances: Vec<InstanceSource>,
    #[serde(default)]
    pub methods: Vec<Method>,
    /// Used for methods that take an epsilon; others run once.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: usize,
    #[serde(default = "default_quantum_oracle_cap")]
    pub quantum_oracle_cap: usize,
    /// Wall time is the minimum over this many runs.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

impl BenchSuite {
    /// Parses a suite file. Relative instance paths resolve against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut suite: BenchSuite = serde_json::from_str(text)?;
        if let Some(base) = base {
            for src in &mut suite.instances {
                if let InstanceSource::File { path, .. } = src {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
            }
        }
        if suite.repeats == 0 {
            return Err(Error::Spec("repeats must be at least 1".into()));
        }
        Ok(suite)
    }
}

/// One CSV row. Columns are fixed; empty cells mean "not available".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub method: String,
    pub epsilon: Option<f64>,
    pub energy: Option<f64>,
    pub guarantee_kind: Option<String>,
    pub guarantee_value: Option<f64>,
    pub oracle: Option<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    pub within_guarantee: Option<bool>,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// The exact optimum when the instance is small or structured enough.
pub fn oracle_value(
    inst: &AnyInstance,
    classical_cap: usize,
    quantum_cap: usize,
) -> Result<Option<f64>> {
    if let AnyInstance::Lattice(l) = inst {
        if l.n() <= classical_cap {
            return Ok(Some(
                brute_force_min_capped(&l.to_instance(), classical_cap)?.0,
            ));
        }
        if l.width().min(l.height()) <= DEFAULT_STRIP_CAP {
            return Ok(Some(strip_dp_min_capped(l, DEFAULT_STRIP_CAP)?.0));
        }
        return Ok(None);
    }
    if let Some((c, emb)) = classical_parts(inst)? {
        if c.n() <= classical_cap {
            return Ok(Some(brute_force_min_capped(&c, classical_cap)?.0));
        }
        if let (Some(emb), false) = (emb, c.has_fields()) {
            return Ok(Some(planar_exact_min(&c, &emb)?.energy));
        }
        return Ok(None);
    }
    if let Some((h, _)) = quantum_parts(inst)? {
        if h.n() <= quantum_cap {
            return Ok(Some(exact_diag_min(&h, &EigenOptions::default())?.energy));
        }
    }
    Ok(None)
}

struct Cell {
    index: usize,
    method: Method,
    epsilon: Option<f64>,
}

/// Runs every method (and epsilon) on every instance. Failures are recorded
/// in the `error` column and do not stop the run.
pub fn run_suite(suite: &BenchSuite, base: &SolveOptions) -> BenchReport {
    let loaded: Vec<Result<AnyInstance>> = suite
        .instances
        .par_iter()
        .map(|src| match src {
            InstanceSource::Generated { generator, .. } => generate(generator),
            InstanceSource::File { path, .. } => load_instance(path),
        })
        .collect();
    let oracles: Vec<Option<f64>> = loaded
        .par_iter()
        .map(|inst| {
            inst.as_ref().ok().and_then(|i| {
                oracle_value(i, suite.oracle_cap, suite.quantum_oracle_cap)
                    .ok()
                    .flatten()
            })
        })
        .collect();

    let mut cells = Vec::new();
    for index in 0..suite.instances.len() {
        for &method in &suite.methods {
            if method.uses_epsilon() && !suite.epsilons.is_empty() {
                for &e in &suite.epsilons {
                    cells.push(Cell {
                        index,
                        method,
                        epsilon: Some(e),
                    });
                }
            } else {
                cells.push(Cell {
                    index,
                    method,
                    epsilon: method.uses_epsilon().then_some(base.epsilon),
                });
            }
        }
    }

    let rows = cells
        .par_iter()
        .map(|cell| {
            let src = &suite.instances[cell.index];
            let mut row = BenchRow {
                instance_id: src.id().to_string(),
                method: cell.method.name().to_string(),
                epsilon: cell.epsilon,
                energy: None,
                guarantee_kind: None,
                guarantee_value: None,
                oracle: oracles[cell.index],
                abs_error: None,
                rel_error: None,
                within_guarantee: None,
                wall_ms: None,
                error: None,
            };
            let inst = match &loaded[cell.index] {
                Ok(i) => i,
                Err(e) => {
                    row.error = Some(e.to_string());
                    return row;
                }
            };
            let opts = SolveOptions {
                epsilon: cell.epsilon.unwrap_or(base.epsilon),
                ..*base
            };
            let mut best_ms = f64::INFINITY;
            let mut outcome = None;
            for _ in 0..suite.repeats {
                let start = Instant::now();
                let r = solve(inst, cell.method, &opts);
                best_ms = best_ms.min(start.elapsed().as_secs_f64() * 1e3);
                match r {
                    Ok(r) => outcome = Some(r),
                    Err(e) => {
                        row.error = Some(e.to_string());
                        break;
                    }
                }
            }
            if let Some(r) = outcome.filter(|_| row.error.is_none()) {
                row.energy = Some(r.energy);
                row.guarantee_kind = Some(r.guarantee.kind().to_string());
                row.guarantee_value = r.guarantee.value();
                row.wall_ms = Some(best_ms);
                if let Some(opt) = row.oracle {
                    let err = r.energy - opt;
                    row.abs_error = Some(err.abs());
                    if opt != 0.0 {
                        row.rel_error = Some(err / opt.abs());
                    }
                    row.within_guarantee =
                        Some(r.guarantee.holds(r.energy, opt, 1e-8 * (1.0 + opt.abs())));
                }
            }
            row
        })
        .collect();
    BenchReport { rows }
}

impl BenchReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            // Header only, so downstream tools still see the schema.
            wtr.write_record(CSV_COLUMNS)?;
        }
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Per-method counts, failures, worst errors and total time.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        if self.rows.is_empty() {
            out.push_str("empty suite: no cells run\n");
            return out;
        }
        let mut methods: Vec<&str> = self.rows.iter().map(|r| r.method.as_str()).collect();
        methods.sort_unstable();
        methods.dedup();
        let _ = writeln!(
            out,
            "{:<14} {:>5} {:>6} {:>12} {:>12} {:>9} {:>11}",
            "method", "cells", "failed", "max_abs_err", "max_rel_err", "violated", "total_ms"
        );
        for m in methods {
            let rows: Vec<&BenchRow> = self.rows.iter().filter(|r| r.method == m).collect();
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            let max_abs = rows
                .iter()
                .filter_map(|r| r.abs_error)
                .fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.max(x))));
            let max_rel = rows
                .iter()
                .filter_map(|r| r.rel_error)
                .fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.max(x))));
            let violated = rows
                .iter()
                .filter(|r| r.within_guarantee == Some(false))
                .count();
            let total: f64 = rows.iter().filter_map(|r| r.wall_ms).sum();
            let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
            let _ = writeln!(
                out,
                "{:<14} {:>5} {:>6} {:>12} {:>12} {:>9} {:>11.2}",
                m,
                rows.len(),
                failed,
                show(max_abs),
                show(max_rel),
                violated,
                total
            );
        }
        out
    }
}

pub const CSV_COLUMNS: [&str; 12] = [
    "instance_id",
    "method",
    "epsilon",
    "energy",
    "guarantee_kind",
    "guarantee_value",
    "oracle",
    "abs_error",
    "rel_error",
    "within_guarantee",
    "wall_ms",
    "error",
];
