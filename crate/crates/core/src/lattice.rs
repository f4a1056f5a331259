//! Square-lattice instances, the strip dynamic program and the line-class
//! approximation scheme.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{grid_embedding, PlanarEmbedding};
use crate::error::{Error, Result};
use crate::instance::{Edge, IsingInstance, SpinAssignment};
use crate::result::{Guarantee, SolveResult};

/// Widest strip the dynamic program accepts by default.
pub const DEFAULT_STRIP_CAP: usize = 24;

/// A `width × height` lattice. Site `(x, y)` has vertex id `y·width + x`.
///
/// `hcoup[y·(width−1) + x]` couples `(x, y)`–`(x+1, y)`;
/// `vcoup[y·width + x]` couples `(x, y)`–`(x, y+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLattice", into = "RawLattice")]
pub struct LatticeInstance {
    width: usize,
    height: usize,
    hcoup: Vec<f64>,
    vcoup: Vec<f64>,
    fields: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawLattice {
    width: usize,
    height: usize,
    hcoup: Vec<f64>,
    vcoup: Vec<f64>,
    #[serde(default)]
    fields: Vec<f64>,
}

impl TryFrom<RawLattice> for LatticeInstance {
    type Error = Error;
    fn try_from(r: RawLattice) -> Result<Self> {
        let fields = if r.fields.is_empty() {
            vec![0.0; r.width * r.height]
        } else {
            r.fields
        };
        LatticeInstance::new(r.width, r.height, r.hcoup, r.vcoup, fields)
    }
}

impl From<LatticeInstance> for RawLattice {
    fn from(l: LatticeInstance) -> Self {
        RawLattice {
            width: l.width,
            height: l.height,
            hcoup: l.hcoup,
            vcoup: l.vcoup,
            fields: l.fields,
        }
    }
}

impl LatticeInstance {
    pub fn new(
        width: usize,
        height: usize,
        hcoup: Vec<f64>,
        vcoup: Vec<f64>,
        fields: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInstance(
                "lattice dimensions must be positive".into(),
            ));
        }
        for (name, v, len) in [
            ("hcoup", &hcoup, height * (width - 1)),
            ("vcoup", &vcoup, (height - 1) * width),
            ("fields", &fields, width * height),
        ] {
            if v.len() != len {
                return Err(Error::InvalidInstance(format!(
                    "{name} has {} entries, expected {len}",
                    v.len()
                )));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "{name} contains a non-finite value"
                )));
            }
        }
        Ok(LatticeInstance {
            width,
            height,
            hcoup,
            vcoup,
            fields,
        })
    }

    /// Lattice with every coupling equal to `c` and no fields.
    pub fn uniform(width: usize, height: usize, c: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![c; height * (width.max(1) - 1)],
            vec![c; (height.max(1) - 1) * width],
            vec![0.0; width * height],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n(&self) -> usize {
        self.width * self.height
    }

    pub fn id(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn hc(&self, x: usize, y: usize) -> f64 {
        self.hcoup[y * (self.width - 1) + x]
    }

    pub fn vc(&self, x: usize, y: usize) -> f64 {
        self.vcoup[y * self.width + x]
    }

    pub fn field(&self, x: usize, y: usize) -> f64 {
        self.fields[y * self.width + x]
    }

    pub fn hcoup(&self) -> &[f64] {
        &self.hcoup
    }

    pub fn vcoup(&self) -> &[f64] {
        &self.vcoup
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Edge list in the order used by [`grid_embedding`]: horizontal edges
    /// row by row, then vertical edges.
    pub fn edge_list(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.hcoup.len() + self.vcoup.len());
        for y in 0..self.height {
            for x in 0..self.width - 1 {
                out.push((self.id(x, y), self.id(x + 1, y), self.hc(x, y)));
            }
        }
        for y in 0..self.height - 1 {
            for x in 0..self.width {
                out.push((self.id(x, y), self.id(x, y + 1), self.vc(x, y)));
            }
        }
        out
    }

    pub fn to_instance(&self) -> IsingInstance {
        let edges = self
            .edge_list()
            .into_iter()
            .map(|(u, v, c)| Edge::new(u, v, c))
            .collect();
        IsingInstance::new(self.n(), edges, self.fields.clone()).expect("lattice edges are simple")
    }

    pub fn embedding(&self) -> PlanarEmbedding {
        grid_embedding(self.width, self.height)
    }

    /// Reads a lattice back from an instance whose edges are exactly the
    /// grid edges (in any order and orientation).
    pub fn from_instance(instance: &IsingInstance, width: usize, height: usize) -> Result<Self> {
        if instance.n() != width * height || width == 0 {
            return Err(Error::Dimension {
                expected: width * height,
                actual: instance.n(),
            });
        }
        let mut hcoup = vec![f64::NAN; height * (width - 1)];
        let mut vcoup = vec![f64::NAN; (height - 1) * width];
        for e in instance.edges() {
            let (a, b) = (e.u.min(e.v), e.u.max(e.v));
            let (x, y) = (a % width, a / width);
            let slot = if b == a + 1 && x + 1 < width {
                &mut hcoup[y * (width - 1) + x]
            } else if b == a + width {
                &mut vcoup[y * width + x]
            } else {
                return Err(Error::InvalidInstance(format!(
                    "edge ({a}, {b}) is not a lattice edge"
                )));
            };
            *slot = e.coupling;
        }
        if hcoup.iter().chain(&vcoup).any(|c| c.is_nan()) {
            return Err(Error::InvalidInstance(
                "instance is missing lattice edges".into(),
            ));
        }
        Self::new(width, height, hcoup, vcoup, instance.fields().to_vec())
    }

    /// Mirror across the diagonal: site `(x, y)` becomes `(y, x)`.
    pub fn transposed(&self) -> Self {
        let (w, h) = (self.height, self.width);
        let mut hcoup = Vec::with_capacity(h * (w - 1));
        for y in 0..h {
            for x in 0..w - 1 {
                hcoup.push(self.vc(y, x));
            }
        }
        let mut vcoup = Vec::with_capacity((h - 1) * w);
        for y in 0..h - 1 {
            for x in 0..w {
                vcoup.push(self.hc(y, x));
            }
        }
        let fields = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| self.field(y, x))
            .collect();
        LatticeInstance {
            width: w,
            height: h,
            hcoup,
            vcoup,
            fields,
        }
    }

    /// The rectangle `[x0, x0+w) × [y0, y0+h)` with all its internal terms.
    pub fn sub_lattice(&self, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        let mut hcoup = Vec::with_capacity(h * (w - 1));
        let mut vcoup = Vec::with_capacity((h - 1) * w);
        let mut fields = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            for x in x0..x0 + w - 1 {
                hcoup.push(self.hc(x, y));
            }
            for x in x0..x0 + w {
                fields.push(self.field(x, y));
                if y + 1 < y0 + h {
                    vcoup.push(self.vc(x, y));
                }
            }
        }
        LatticeInstance {
            width: w,
            height: h,
            hcoup,
            vcoup,
            fields,
        }
    }

    pub fn energy(&self, spins: &SpinAssignment) -> Result<f64> {
        self.to_instance().energy(spins)
    }
}

/// One step of the strip recurrence:
/// `V(i+1, S) = E_row(S) + min_S' [V(i, S') + Σ_x c_x S_x S'_x]`.
/// The inner minimum walks `S'` in Gray-code order with an O(1) update.
/// Returns the new table and the minimizing `S'` for each `S`.
pub fn dp_step(prev: &[f64], row_energy: &[f64], vcoup: &[f64]) -> (Vec<f64>, Vec<u32>) {
    let s = vcoup.len();
    let size = 1usize << s;
    let mut next = vec![0.0; size];
    let mut arg = vec![0u32; size];
    let mut w = vec![0.0; s];
    for (bits, (slot, back)) in next.iter_mut().zip(arg.iter_mut()).enumerate() {
        // w_x = c_x·S_x; starting from S' = all +1.
        let mut z = 0.0;
        for (x, wx) in w.iter_mut().enumerate() {
            *wx = if bits >> x & 1 == 1 {
                -vcoup[x]
            } else {
                vcoup[x]
            };
            z += *wx;
        }
        let mut sp = 0usize;
        let mut best = prev[0] + z;
        let mut best_sp = 0usize;
        for g in 1..size {
            let x = g.trailing_zeros() as usize;
            sp ^= 1 << x;
            if sp >> x & 1 == 1 {
                z -= 2.0 * w[x];
            } else {
                z += 2.0 * w[x];
            }
            let cand = prev[sp] + z;
            if cand < best {
                best = cand;
                best_sp = sp;
            }
        }
        *slot = row_energy[bits] + best;
        *back = best_sp as u32;
    }
    (next, arg)
}

/// Reference version of [`dp_step`] with an `O(s)` evaluation per pair.
pub fn dp_step_naive(prev: &[f64], row_energy: &[f64], vcoup: &[f64]) -> Vec<f64> {
    let s = vcoup.len();
    let spin = |b: usize, x: usize| if b >> x & 1 == 1 { -1.0 } else { 1.0 };
    (0..1usize << s)
        .map(|bits| {
            let inner = (0..1usize << s)
                .map(|sp| {
                    prev[sp]
                        + (0..s)
                            .map(|x| vcoup[x] * spin(bits, x) * spin(sp, x))
                            .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            row_energy[bits] + inner
        })
        .collect()
}

/// Energies of all `2^s` assignments of row `y` (horizontal couplings and
/// fields only).
pub fn row_energies(lattice: &LatticeInstance, y: usize) -> Vec<f64> {
    let s = lattice.width;
    let spin = |b: usize, x: usize| if b >> x & 1 == 1 { -1.0 } else { 1.0 };
    (0..1usize << s)
        .map(|bits| {
            let mut e = 0.0;
            for x in 0..s {
                e += lattice.field(x, y) * spin(bits, x);
                if x + 1 < s {
                    e += lattice.hc(x, y) * spin(bits, x) * spin(bits, x + 1);
                }
            }
            e
        })
        .collect()
}

/// Exact minimum of a lattice by the row-by-row strip recurrence, run along
/// the shorter side.
pub fn strip_dp_min(lattice: &LatticeInstance) -> Result<(f64, SpinAssignment)> {
    strip_dp_min_capped(lattice, DEFAULT_STRIP_CAP)
}

pub fn strip_dp_min_capped(lattice: &LatticeInstance, cap: usize) -> Result<(f64, SpinAssignment)> {
    if lattice.width > lattice.height {
        let t = lattice.transposed();
        let (e, s) = strip_dp_min_capped(&t, cap)?;
        let mut spins = vec![1i8; lattice.n()];
        for y in 0..lattice.height {
            for x in 0..lattice.width {
                spins[lattice.id(x, y)] = s.get(t.id(y, x));
            }
        }
        return Ok((e, SpinAssignment::from_spins(spins)?));
    }
    let s = lattice.width;
    if s > cap {
        return Err(Error::SizeCap {
            what: "strip width",
            size: s,
            cap,
        });
    }
    let r = lattice.height;
    let mut table = row_energies(lattice, 0);
    let mut backs: Vec<Vec<u32>> = Vec::with_capacity(r.saturating_sub(1));
    for y in 1..r {
        let vc: Vec<f64> = (0..s).map(|x| lattice.vc(x, y - 1)).collect();
        let (next, arg) = dp_step(&table, &row_energies(lattice, y), &vc);
        table = next;
        backs.push(arg);
    }
    let mut state = 0usize;
    for (b, &v) in table.iter().enumerate() {
        if v < table[state] {
            state = b;
        }
    }
    let best = table[state];
    let mut spins = vec![1i8; lattice.n()];
    for y in (0..r).rev() {
        for x in 0..s {
            spins[lattice.id(x, y)] = if state >> x & 1 == 1 { -1 } else { 1 };
        }
        if y > 0 {
            state = backs[y - 1][state] as usize;
        }
    }
    let spins = SpinAssignment::from_spins(spins)?;
    let energy = lattice.energy(&spins)?;
    if (energy - best).abs() > 1e-9 * (1.0 + best.abs()) {
        return Err(Error::Internal(format!(
            "strip DP value {best} but witness energy {energy}"
        )));
    }
    Ok((energy, spins))
}

/// Which family of lines a class removes: rows (`X`) or columns (`Y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// `H_i^b` and `H − H_i^b` for one line class.
#[derive(Debug, Clone)]
pub struct LineClass {
    pub axis: Axis,
    pub residue: usize,
    /// `H − H_i^b` on the full vertex set.
    pub sub: IsingInstance,
    /// `H_i^b`: fields on the class lines and perpendicular edges touching them.
    pub removed: IsingInstance,
    /// Per lattice edge (in [`LatticeInstance::edge_list`] order): removed?
    pub removed_edges: Vec<bool>,
    /// Per vertex: is its field removed?
    pub removed_fields: Vec<bool>,
}

fn on_class(axis: Axis, residue: usize, t: usize, x: usize, y: usize) -> bool {
    match axis {
        Axis::X => y % t == residue,
        Axis::Y => x % t == residue,
    }
}

/// All `2t` line-class splits `H = (H − H_i^b) + H_i^b`.
pub fn line_class_hamiltonians(lattice: &LatticeInstance, t: usize) -> Result<Vec<LineClass>> {
    if t == 0 {
        return Err(Error::InvalidInstance("t must be at least 1".into()));
    }
    let inst = lattice.to_instance();
    let w = lattice.width;
    let coords = |v: usize| (v % w, v / w);
    let mut out = Vec::with_capacity(2 * t);
    for axis in [Axis::X, Axis::Y] {
        for residue in 0..t {
            let removed_fields: Vec<bool> = (0..lattice.n())
                .map(|v| {
                    let (x, y) = coords(v);
                    on_class(axis, residue, t, x, y)
                })
                .collect();
            let removed_edges: Vec<bool> = inst
                .edges()
                .iter()
                .map(|e| {
                    let horizontal = e.u / w == e.v / w;
                    let perpendicular = match axis {
                        Axis::X => !horizontal,
                        Axis::Y => horizontal,
                    };
                    perpendicular && (removed_fields[e.u] || removed_fields[e.v])
                })
                .collect();
            let keep: Vec<bool> = removed_edges.iter().map(|r| !r).collect();
            let sub_fields = inst
                .fields()
                .iter()
                .zip(&removed_fields)
                .map(|(&d, &r)| if r { 0.0 } else { d })
                .collect();
            let sub = IsingInstance::new(
                inst.n(),
                inst.with_edge_mask(&keep).edges().to_vec(),
                sub_fields,
            )?;
            let rem_fields = inst
                .fields()
                .iter()
                .zip(&removed_fields)
                .map(|(&d, &r)| if r { d } else { 0.0 })
                .collect();
            let removed = IsingInstance::new(
                inst.n(),
                inst.with_edge_mask(&removed_edges).edges().to_vec(),
                rem_fields,
            )?;
            out.push(LineClass {
                axis,
                residue,
                sub,
                removed,
                removed_edges,
                removed_fields,
            });
        }
    }
    Ok(out)
}

/// Checks `Σ_i (H_i^x + H_i^y) = 2H` term by term: every coupling and every
/// field is removed by exactly two classes. Only meaningful for `t ≥ 2`.
pub fn check_double_cover(lattice: &LatticeInstance, classes: &[LineClass]) -> bool {
    let m = lattice.hcoup.len() + lattice.vcoup.len();
    let mut edge_count = vec![0usize; m];
    let mut field_count = vec![0usize; lattice.n()];
    for c in classes {
        for (k, &r) in c.removed_edges.iter().enumerate() {
            edge_count[k] += r as usize;
        }
        for (v, &r) in c.removed_fields.iter().enumerate() {
            field_count[v] += r as usize;
        }
    }
    edge_count.iter().chain(&field_count).all(|&c| c == 2)
}

/// Number of lines per class: `t = ⌈1/ε⌉`, so that `1/t ≤ ε`.
pub fn lines_for_epsilon(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidInstance(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    Ok(((1.0 / epsilon) - 1e-9).ceil().max(1.0) as usize)
}

/// Line-class approximation: solves `H − H_i^b` exactly for every class,
/// flips class lines so the removed terms are nonpositive, and returns the
/// best candidate under the full energy. Guarantee `opt ≤ E ≤ (1−ε)·opt`.
pub fn lattice_ptas_min(lattice: &LatticeInstance, epsilon: f64) -> Result<SolveResult> {
    let t = lines_for_epsilon(epsilon)?;
    let mut r = lattice_ptas_with_lines(lattice, t, DEFAULT_STRIP_CAP)?;
    r.guarantee = Guarantee::RelativeError { epsilon };
    Ok(r)
}

pub fn lattice_ptas_with_lines(
    lattice: &LatticeInstance,
    t: usize,
    strip_cap: usize,
) -> Result<SolveResult> {
    if t == 0 {
        return Err(Error::InvalidInstance("t must be at least 1".into()));
    }
    let start = Instant::now();
    let inst = lattice.to_instance();
    let transposed = lattice.transposed();
    let jobs: Vec<(Axis, usize)> = [Axis::X, Axis::Y]
        .into_iter()
        .flat_map(|a| (0..t).map(move |i| (a, i)))
        .collect();
    let results: Vec<Result<ClassSolution>> = jobs
        .par_iter()
        .map(|&(axis, i)| match axis {
            Axis::X => solve_row_class(lattice, i, t, strip_cap),
            Axis::Y => {
                // Columns of the lattice are rows of its transpose.
                let sol = solve_row_class(&transposed, i, t, strip_cap)?;
                let mut spins = vec![1i8; lattice.n()];
                for y in 0..lattice.height {
                    for x in 0..lattice.width {
                        spins[lattice.id(x, y)] = sol.spins[transposed.id(y, x)];
                    }
                }
                Ok(ClassSolution { spins, ..sol })
            }
        })
        .collect();

    let mut best: Option<(f64, usize, ClassSolution)> = None;
    let mut subproblems = 0;
    for (k, r) in results.into_iter().enumerate() {
        let sol = r?;
        subproblems += sol.subproblems;
        let e = inst.energy(&SpinAssignment::from_spins(sol.spins.clone())?)?;
        if best.as_ref().is_none_or(|(be, _, _)| e < *be) {
            best = Some((e, k, sol));
        }
    }
    let (_, k, sol) = best.expect("at least two classes");
    let spins = SpinAssignment::from_spins(sol.spins)?;
    let mut result = SolveResult::classical(
        "lattice-ptas",
        &inst,
        spins,
        Guarantee::RelativeError {
            epsilon: 1.0 / t as f64,
        },
    )?;
    result.diagnostics.removed_weight = Some(sol.removed_weight);
    result.diagnostics.subproblems = subproblems;
    result.diagnostics.note("t", t);
    result.diagnostics.note("class_axis", jobs[k].0);
    result.diagnostics.note("class_residue", jobs[k].1);
    result.diagnostics.set_wall(start.elapsed());
    Ok(result)
}

struct ClassSolution {
    spins: Vec<i8>,
    subproblems: usize,
    removed_weight: f64,
}

/// Solves `H − H_i^x` for the row class `y ≡ i (mod t)`, then applies the
/// line-flip correction.
fn solve_row_class(
    l: &LatticeInstance,
    i: usize,
    t: usize,
    strip_cap: usize,
) -> Result<ClassSolution> {
    let (w, h) = (l.width, l.height);
    let is_line = |y: usize| y % t == i;
    let mut spins = vec![1i8; l.n()];
    let mut subproblems = 0;

    // Class rows keep only their horizontal couplings: a field-free chain.
    let lines: Vec<usize> = (0..h).filter(|&y| is_line(y)).collect();
    for &y in &lines {
        for x in 0..w - 1 {
            let s = spins[l.id(x, y)];
            spins[l.id(x + 1, y)] = if l.hc(x, y) > 0.0 { -s } else { s };
        }
        subproblems += 1;
    }
    // Maximal runs of non-class rows are strips solved exactly.
    let mut y = 0;
    while y < h {
        if is_line(y) {
            y += 1;
            continue;
        }
        let y0 = y;
        while y < h && !is_line(y) {
            y += 1;
        }
        let strip = l.sub_lattice(0, y0, w, y - y0);
        let (_, s) = strip_dp_min_capped(&strip, strip_cap)?;
        for yy in y0..y {
            for x in 0..w {
                spins[l.id(x, yy)] = s.get(strip.id(x, yy - y0));
            }
        }
        subproblems += 1;
    }

    // Flipping a class line leaves H − H_i^x unchanged and negates the
    // removed terms touching it. Lines interact only through vertical edges
    // joining two class rows (t = 1), so the flips form a chain problem.
    let spin = |s: &[i8], x: usize, y: usize| s[l.id(x, y)] as f64;
    let mut line_field = Vec::with_capacity(lines.len());
    let mut link = Vec::with_capacity(lines.len());
    let mut removed_weight = 0.0;
    for (k, &y) in lines.iter().enumerate() {
        let mut f = 0.0;
        for x in 0..w {
            f += l.field(x, y) * spin(&spins, x, y);
            removed_weight += l.field(x, y).abs();
            if y > 0 && !is_line(y - 1) {
                f += l.vc(x, y - 1) * spin(&spins, x, y - 1) * spin(&spins, x, y);
                removed_weight += l.vc(x, y - 1).abs();
            }
            if y + 1 < h {
                let c = l.vc(x, y);
                removed_weight += c.abs();
                if !is_line(y + 1) {
                    f += c * spin(&spins, x, y) * spin(&spins, x, y + 1);
                }
            }
        }
        line_field.push(f);
        let j = if k + 1 < lines.len() && lines[k + 1] == y + 1 {
            (0..w)
                .map(|x| l.vc(x, y) * spin(&spins, x, y) * spin(&spins, x, y + 1))
                .sum()
        } else {
            0.0
        };
        link.push(j);
    }
    let flips = chain_min(&line_field, &link);
    for (&y, &f) in lines.iter().zip(&flips) {
        if f < 0 {
            for x in 0..w {
                spins[l.id(x, y)] *= -1;
            }
        }
    }
    Ok(ClassSolution {
        spins,
        subproblems,
        removed_weight,
    })
}

/// Minimizes `Σ h_k f_k + Σ J_k f_k f_{k+1}` over `f ∈ {±1}^m`, preferring
/// `+1` on ties.
pub fn chain_min(h: &[f64], j: &[f64]) -> Vec<i8> {
    let m = h.len();
    if m == 0 {
        return Vec::new();
    }
    // best[k][s]: optimum of the prefix ending with f_k = (s == 0 ? +1 : −1).
    let val = |s: usize| if s == 0 { 1.0 } else { -1.0 };
    let mut best = vec![[0.0f64; 2]; m];
    let mut back = vec![[0usize; 2]; m];
    best[0] = [h[0], -h[0]];
    for k in 1..m {
        for s in 0..2 {
            let mut b = (f64::INFINITY, 0);
            for p in 0..2 {
                let c = best[k - 1][p] + j[k - 1] * val(p) * val(s);
                if c < b.0 {
                    b = (c, p);
                }
            }
            best[k][s] = b.0 + h[k] * val(s);
            back[k][s] = b.1;
        }
    }
    let mut s = if best[m - 1][1] < best[m - 1][0] {
        1
    } else {
        0
    };
    let mut out = vec![1i8; m];
    for k in (0..m).rev() {
        out[k] = if s == 0 { 1 } else { -1 };
        s = back[k][s];
    }
    out
}
