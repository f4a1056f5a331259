use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embedding::{grid_embedding, PlanarEmbedding};
use crate::error::{Error, Result};
use crate::format::{AnyInstance, InstanceFile, QuantumEdgeSpec, QuantumFile};
use crate::instance::{connected_components, Edge, IsingInstance};
use crate::lattice::LatticeInstance;
use crate::quantum::{BathTerm, StarInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Lattice,
    RandomPlanar,
    Star,
    QuantumPlanar,
    QuantumLattice,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
            .map_err(|_| Error::Spec(format!("unknown generator kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distribution3 {
    /// Integers drawn uniformly from `lo..=hi`.
    Uniform {
        lo: i64,
        hi: i64,
    },
    Gaussian {
        sigma: f64,
    },
    /// `−1` or `+1` with equal probability.
    PlusMinusOne,
}

impl Distribution3 {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Distribution3::Uniform { lo, hi } => rng.random_range(lo..=hi) as f64,
            Distribution3::Gaussian { sigma } => Normal::new(0.0, sigma)
                .expect("validated sigma")
                .sample(rng),
            Distribution3::PlusMinusOne => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Distribution3::Uniform { lo, hi } if lo > hi => {
                Err(Error::Spec(format!("empty integer range {lo}..={hi}")))
            }
            Distribution3::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::Spec(format!("sigma must be positive, got {sigma}")))
            }
            _ => Ok(()),
        }
    }
}

fn default_couplings() -> Distribution3 {
    Distribution3::Uniform { lo: -5, hi: 5 }
}

fn default_a() -> f64 {
    0.5
}

fn default_one() -> f64 {
    1.0
}

/// Everything needed to rebuild an instance bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Vertex count (random planar, quantum planar) or bath size (star).
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub width: Option<usize>,
    #[serde(default)]
    pub height: Option<usize>,
    #[serde(default = "default_couplings")]
    pub couplings: Distribution3,
    /// Classical fields; none when absent.
    #[serde(default)]
    pub fields: Option<Distribution3>,
    /// Probability of deleting each triangulation edge (connectivity kept).
    #[serde(default)]
    pub delete_prob: f64,
    /// Star norm bounds.
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_one")]
    pub b: f64,
    /// Scale of random one-body terms in quantum instances (0 disables them).
    #[serde(default = "default_one")]
    pub local_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64) -> Self {
        GeneratorSpec {
            kind,
            n: None,
            width: None,
            height: None,
            couplings: default_couplings(),
            fields: None,
            delete_prob: 0.0,
            a: default_a(),
            b: 1.0,
            local_scale: 1.0,
            seed,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_grid(mut self, width: usize, height: usize) -> Self {
        self.width = Some(width);
        self.height = Some(height);
        self
    }
}

fn need(v: Option<usize>, what: &str) -> Result<usize> {
    match v {
        Some(x) if x > 0 => Ok(x),
        _ => Err(Error::Spec(format!("generator needs a positive '{what}'"))),
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<AnyInstance> {
    spec.couplings.validate()?;
    if let Some(f) = &spec.fields {
        f.validate()?;
    }
    if !(0.0..=1.0).contains(&spec.delete_prob) {
        return Err(Error::Spec("delete_prob must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GeneratorKind::Lattice => {
            let (w, h) = (need(spec.width, "width")?, need(spec.height, "height")?);
            let hcoup = (0..h * (w - 1))
                .map(|_| spec.couplings.sample(&mut rng))
                .collect();
            let vcoup = (0..(h - 1) * w)
                .map(|_| spec.couplings.sample(&mut rng))
                .collect();
            let fields = match &spec.fields {
                Some(d) => (0..w * h).map(|_| d.sample(&mut rng)).collect(),
                None => vec![0.0; w * h],
            };
            Ok(AnyInstance::Lattice(LatticeInstance::new(
                w, h, hcoup, vcoup, fields,
            )?))
        }
        GeneratorKind::RandomPlanar => {
            let n = need(spec.n, "n")?;
            let emb = random_planar_embedding(&mut rng, n, spec.delete_prob)?;
            let edges = emb
                .endpoints()
                .iter()
                .map(|&(u, v)| Edge::new(u, v, spec.couplings.sample(&mut rng)))
                .collect();
            let fields = match &spec.fields {
                Some(d) => (0..n).map(|_| d.sample(&mut rng)).collect(),
                None => vec![0.0; n],
            };
            let inst = IsingInstance::new(n, edges, fields)?;
            Ok(AnyInstance::Classical(InstanceFile::from_instance(
                &inst,
                Some(&emb),
            )))
        }
        GeneratorKind::QuantumPlanar | GeneratorKind::QuantumLattice => {
            let emb = if spec.kind == GeneratorKind::QuantumLattice {
                grid_embedding(need(spec.width, "width")?, need(spec.height, "height")?)
            } else {
                random_planar_embedding(&mut rng, need(spec.n, "n")?, spec.delete_prob)?
            };
            let edges = emb
                .endpoints()
                .iter()
                .map(|&(u, v)| {
                    let mut h = [[0.0; 3]; 3];
                    h.iter_mut()
                        .flatten()
                        .for_each(|c| *c = rng.random_range(-1.0..1.0));
                    (
                        u,
                        v,
                        QuantumEdgeSpec {
                            h,
                            left: [0.0; 3],
                            right: [0.0; 3],
                        },
                    )
                })
                .collect();
            let locals = if spec.local_scale > 0.0 {
                (0..emb.n())
                    .map(|u| {
                        let s = spec.local_scale;
                        (u, [0; 3].map(|_| rng.random_range(-s..s)))
                    })
                    .collect()
            } else {
                Vec::new()
            };
            Ok(AnyInstance::Quantum(QuantumFile {
                n: emb.n(),
                edges,
                locals,
                rotation: Some(emb.rotation().to_vec()),
                outer_face: Some(emb.outer_face()),
            }))
        }
        GeneratorKind::Star => {
            let n = need(spec.n, "n")?;
            if !(spec.a > 0.0 && spec.a <= spec.b) {
                return Err(Error::Spec(format!(
                    "need 0 < a <= b, got a = {}, b = {}",
                    spec.a, spec.b
                )));
            }
            let bath = (0..n)
                .map(|_| random_bath_term(&mut rng, spec.a, spec.b))
                .collect();
            let central = if spec.local_scale > 0.0 {
                [0; 3].map(|_| rng.random_range(-spec.local_scale..spec.local_scale))
            } else {
                [0.0; 3]
            };
            Ok(AnyInstance::Star(StarInstance {
                central,
                bath,
                a: spec.a,
                b: spec.b,
            }))
        }
    }
}

/// A random bath interaction rescaled so its norm is uniform in `[a, b]`.
pub fn random_bath_term(rng: &mut ChaCha8Rng, a: f64, b: f64) -> BathTerm {
    loop {
        let mut h = [[0.0; 3]; 3];
        h.iter_mut()
            .flatten()
            .for_each(|c| *c = rng.random_range(-1.0..1.0));
        let bl = [0; 3].map(|_| rng.random_range(-0.5..0.5));
        let t = BathTerm::new(h, bl);
        let norm = t.norm();
        if norm < 1e-6 {
            continue;
        }
        let target = if a < b { rng.random_range(a..=b) } else { a };
        let c = t.coefficients().map(|x| x * target / norm);
        let out = BathTerm::from_coefficients(&c);
        // Rescaling can land a hair outside [a, b]; draw again if so.
        let check = out.norm();
        if check >= a && check <= b {
            return out;
        }
    }
}

/// Random planar graph by repeated subdivision of inner triangles of a
/// triangle, then random edge deletions that keep the graph connected. The
/// rotation system is maintained combinatorially; the outer face is the
/// original triangle's outside.
pub fn random_planar_embedding(
    rng: &mut ChaCha8Rng,
    n: usize,
    delete_prob: f64,
) -> Result<PlanarEmbedding> {
    if n < 3 {
        return match n {
            0 | 1 => PlanarEmbedding::new(Vec::new(), vec![Vec::new(); n], 0),
            _ => PlanarEmbedding::new(vec![(0, 1)], vec![vec![0], vec![1]], 0),
        };
    }
    // Counter-clockwise neighbour lists and counter-clockwise inner faces.
    let mut rot: Vec<Vec<usize>> = vec![vec![1, 2], vec![2, 0], vec![0, 1]];
    let mut faces: Vec<[usize; 3]> = vec![[0, 1, 2]];
    let insert_after = |list: &mut Vec<usize>, after: usize, x: usize| {
        let i = list
            .iter()
            .position(|&w| w == after)
            .expect("neighbour present");
        list.insert(i + 1, x);
    };
    for x in 3..n {
        let f = rng.random_range(0..faces.len());
        let [a, b, c] = faces[f];
        insert_after(&mut rot[a], b, x);
        insert_after(&mut rot[b], c, x);
        insert_after(&mut rot[c], a, x);
        rot.push(vec![a, b, c]);
        faces[f] = [a, b, x];
        faces.push([b, c, x]);
        faces.push([c, a, x]);
    }
    let mut endpoints = Vec::new();
    let mut edge_id = std::collections::HashMap::new();
    for (u, list) in rot.iter().enumerate() {
        for &v in list {
            if u < v {
                edge_id.insert((u, v), endpoints.len());
                endpoints.push((u, v));
            }
        }
    }
    let dart = |u: usize, v: usize| {
        let k = edge_id[&(u.min(v), u.max(v))];
        if u < v {
            2 * k
        } else {
            2 * k + 1
        }
    };
    let rotation: Vec<Vec<usize>> = rot
        .iter()
        .enumerate()
        .map(|(u, list)| list.iter().map(|&v| dart(u, v)).collect())
        .collect();
    let probe = PlanarEmbedding::new(endpoints.clone(), rotation.clone(), 0)?;
    let outer = (0..probe.faces().len())
        .rfind(|&f| {
            let mut vs = probe.face_vertices(f);
            vs.sort_unstable();
            vs == [0, 1, 2]
        })
        .expect("the outer triangle is a face");
    let emb = PlanarEmbedding::new(endpoints.clone(), rotation, outer)?;
    if delete_prob == 0.0 {
        return Ok(emb);
    }
    let mut keep = vec![true; endpoints.len()];
    let mut order: Vec<usize> = (0..endpoints.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for k in order {
        if rng.random::<f64>() >= delete_prob {
            continue;
        }
        keep[k] = false;
        let live = endpoints
            .iter()
            .zip(&keep)
            .filter(|(_, &a)| a)
            .map(|(e, _)| *e);
        if connected_components(n, live).len() > 1 {
            keep[k] = true;
        }
    }
    emb.with_edge_mask(&keep)
}
