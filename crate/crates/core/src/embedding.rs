//! Combinatorial planar embeddings given as rotation systems.
//!
//! Edge `k = (u, v)` owns two darts: `2k` runs `u → v` and `2k + 1` runs
//! `v → u`. The rotation at a vertex lists its outgoing darts in cyclic order.
//! The face successor of dart `d = (u → v)` is the dart following `rev(d)` in
//! the rotation at `v`. Faces are numbered in order of their smallest dart.

use crate::error::{Error, Result};
use crate::instance::connected_components;

#[inline]
pub fn rev(dart: usize) -> usize {
    dart ^ 1
}

#[inline]
pub fn dart_edge(dart: usize) -> usize {
    dart >> 1
}

/// A face as the closed walk of darts starting from its smallest dart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub darts: Vec<usize>,
}

impl Face {
    pub fn len(&self) -> usize {
        self.darts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.darts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarEmbedding {
    endpoints: Vec<(usize, usize)>,
    rotation: Vec<Vec<usize>>,
    outer_face: usize,
    position: Vec<usize>,
    faces: Vec<Face>,
    dart_face: Vec<usize>,
}

impl PlanarEmbedding {
    /// Validates the rotation system, traces faces and checks Euler's formula
    /// on every connected component.
    pub fn new(
        endpoints: Vec<(usize, usize)>,
        rotation: Vec<Vec<usize>>,
        outer_face: usize,
    ) -> Result<Self> {
        let n = rotation.len();
        let darts = 2 * endpoints.len();
        let mut position = vec![usize::MAX; darts];
        for (v, rot) in rotation.iter().enumerate() {
            for (i, &d) in rot.iter().enumerate() {
                if d >= darts {
                    return Err(Error::InvalidInstance(format!(
                        "rotation at vertex {v} names dart {d}, but only {darts} darts exist"
                    )));
                }
                if position[d] != usize::MAX {
                    return Err(Error::InvalidInstance(format!(
                        "dart {d} appears twice in the rotation"
                    )));
                }
                let (a, b) = endpoints[dart_edge(d)];
                let tail = if d % 2 == 0 { a } else { b };
                if tail != v {
                    return Err(Error::InvalidInstance(format!(
                        "dart {d} leaves vertex {tail}, not vertex {v}"
                    )));
                }
                position[d] = i;
            }
        }
        if let Some(d) = position.iter().position(|&p| p == usize::MAX) {
            return Err(Error::InvalidInstance(format!(
                "dart {d} is missing from the rotation"
            )));
        }
        for &(a, b) in &endpoints {
            if a >= n || b >= n {
                return Err(Error::InvalidInstance(format!(
                    "edge ({a}, {b}) outside 0..{n}"
                )));
            }
        }

        let mut emb = PlanarEmbedding {
            endpoints,
            rotation,
            outer_face,
            position,
            faces: Vec::new(),
            dart_face: Vec::new(),
        };
        emb.trace_faces();
        emb.check_euler()?;
        if emb.faces.is_empty() {
            emb.outer_face = 0;
        } else if outer_face >= emb.faces.len() {
            return Err(Error::InvalidInstance(format!(
                "outer face {outer_face} does not exist ({} faces)",
                emb.faces.len()
            )));
        }
        Ok(emb)
    }

    /// Orders the darts around each vertex by angle (counter-clockwise) using
    /// straight-line vertex coordinates. The outer face is the unbounded face
    /// below the lowest (then leftmost) vertex.
    pub fn from_coordinates(
        n: usize,
        endpoints: Vec<(usize, usize)>,
        coords: &[(f64, f64)],
    ) -> Result<Self> {
        if coords.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: coords.len(),
            });
        }
        let mut rotation = vec![Vec::new(); n];
        for (k, &(a, b)) in endpoints.iter().enumerate() {
            rotation[a].push(2 * k);
            rotation[b].push(2 * k + 1);
        }
        let head = |d: usize| {
            let (a, b) = endpoints[d / 2];
            if d.is_multiple_of(2) {
                b
            } else {
                a
            }
        };
        for (v, rot) in rotation.iter_mut().enumerate() {
            rot.sort_by(|&x, &y| {
                let ang = |d: usize| {
                    let w = head(d);
                    (coords[w].1 - coords[v].1).atan2(coords[w].0 - coords[v].0)
                };
                ang(x).total_cmp(&ang(y))
            });
        }
        let mut emb = PlanarEmbedding::new(endpoints, rotation, 0)?;
        emb.outer_face = emb.geometric_outer_face(coords);
        Ok(emb)
    }

    fn geometric_outer_face(&self, coords: &[(f64, f64)]) -> usize {
        let Some(v) = (0..self.n())
            .filter(|&v| !self.rotation[v].is_empty())
            .min_by(|&a, &b| {
                coords[a]
                    .1
                    .total_cmp(&coords[b].1)
                    .then(coords[a].0.total_cmp(&coords[b].0))
            })
        else {
            return 0;
        };
        // At the lowest vertex the wedge from the largest-angle dart round to
        // the smallest-angle dart points downwards, out of the drawing. The
        // face walk entering along rev(last) turns through exactly that wedge.
        let last = *self.rotation[v].last().unwrap();
        self.dart_face[rev(last)]
    }

    fn trace_faces(&mut self) {
        let darts = self.dart_count();
        let mut dart_face = vec![usize::MAX; darts];
        let mut faces = Vec::new();
        for start in 0..darts {
            if dart_face[start] != usize::MAX {
                continue;
            }
            let id = faces.len();
            let mut walk = Vec::new();
            let mut d = start;
            loop {
                dart_face[d] = id;
                walk.push(d);
                d = self.face_next(d);
                if d == start {
                    break;
                }
            }
            faces.push(Face { darts: walk });
        }
        self.faces = faces;
        self.dart_face = dart_face;
    }

    fn check_euler(&self) -> Result<()> {
        let n = self.n();
        let comps = connected_components(n, self.endpoints.iter().copied());
        let mut comp_of = vec![0; n];
        for (c, vs) in comps.iter().enumerate() {
            for &v in vs {
                comp_of[v] = c;
            }
        }
        let mut edges = vec![0i64; comps.len()];
        for &(a, _) in &self.endpoints {
            edges[comp_of[a]] += 1;
        }
        let mut faces = vec![0i64; comps.len()];
        for f in &self.faces {
            faces[comp_of[self.tail(f.darts[0])]] += 1;
        }
        for (c, vs) in comps.iter().enumerate() {
            if edges[c] == 0 {
                continue;
            }
            let chi = vs.len() as i64 - edges[c] + faces[c];
            if chi != 2 {
                return Err(Error::NonPlanarEmbedding(format!(
                    "component containing vertex {} has V - E + F = {chi}, expected 2",
                    vs[0]
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.rotation.len()
    }

    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn dart_count(&self) -> usize {
        2 * self.endpoints.len()
    }

    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.endpoints
    }

    pub fn rotation(&self) -> &[Vec<usize>] {
        &self.rotation
    }

    pub fn outer_face(&self) -> usize {
        self.outer_face
    }

    pub fn tail(&self, dart: usize) -> usize {
        let (a, b) = self.endpoints[dart_edge(dart)];
        if dart.is_multiple_of(2) {
            a
        } else {
            b
        }
    }

    pub fn head(&self, dart: usize) -> usize {
        self.tail(rev(dart))
    }

    /// Next outgoing dart in the rotation at the tail of `dart`.
    pub fn rotation_succ(&self, dart: usize) -> usize {
        let rot = &self.rotation[self.tail(dart)];
        rot[(self.position[dart] + 1) % rot.len()]
    }

    /// Next dart along the face walk.
    pub fn face_next(&self, dart: usize) -> usize {
        self.rotation_succ(rev(dart))
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face_of_dart(&self, dart: usize) -> usize {
        self.dart_face[dart]
    }

    /// The two faces on either side of edge `k`.
    pub fn edge_faces(&self, edge: usize) -> (usize, usize) {
        (self.dart_face[2 * edge], self.dart_face[2 * edge + 1])
    }

    /// Distinct vertices on a face boundary, in walk order.
    pub fn face_vertices(&self, face: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &d in &self.faces[face].darts {
            let v = self.tail(d);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    /// One outer face per connected component (with at least one edge): the
    /// designated outer face for its own component, otherwise the longest
    /// face of the component (lowest index on ties).
    pub fn component_outer_faces(&self) -> Vec<usize> {
        let comps = connected_components(self.n(), self.endpoints.iter().copied());
        let mut comp_of = vec![0; self.n()];
        for (c, vs) in comps.iter().enumerate() {
            for &v in vs {
                comp_of[v] = c;
            }
        }
        let mut best: Vec<Option<usize>> = vec![None; comps.len()];
        for (f, face) in self.faces.iter().enumerate() {
            let c = comp_of[self.tail(face.darts[0])];
            let better = match best[c] {
                None => true,
                Some(g) => {
                    g != self.outer_face
                        && (f == self.outer_face || face.len() > self.faces[g].len())
                }
            };
            if better {
                best[c] = Some(f);
            }
        }
        best.into_iter().flatten().collect()
    }

    /// Embedding of the graph after deleting edges with `keep[k] == false`.
    /// Edges are renumbered in order; the outer face is the face containing
    /// the first surviving dart of the old outer face, if any.
    pub fn with_edge_mask(&self, keep: &[bool]) -> Result<Self> {
        let mut new_id = vec![usize::MAX; self.edge_count()];
        let mut endpoints = Vec::new();
        for (k, &e) in self.endpoints.iter().enumerate() {
            if keep[k] {
                new_id[k] = endpoints.len();
                endpoints.push(e);
            }
        }
        let map = |d: usize| {
            let k = new_id[dart_edge(d)];
            (k != usize::MAX).then(|| 2 * k + (d & 1))
        };
        let rotation = self
            .rotation
            .iter()
            .map(|rot| rot.iter().filter_map(|&d| map(d)).collect())
            .collect();
        let mut emb = PlanarEmbedding::new(endpoints, rotation, 0)?;
        if let Some(f) = self.faces.get(self.outer_face) {
            if let Some(d) = f.darts.iter().find_map(|&d| map(d)) {
                emb.outer_face = emb.dart_face[d];
            }
        }
        Ok(emb)
    }

    /// Checks that this embedding describes exactly the edge set of an instance.
    pub fn matches_edges(&self, n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
        self.n() == n && edges.eq(self.endpoints.iter().copied())
    }
}

/// Row-major grid embedding with horizontal edges first, then vertical ones
/// (the edge order used by [`crate::lattice::LatticeInstance`]).
pub fn grid_embedding(width: usize, height: usize) -> PlanarEmbedding {
    let (endpoints, coords) = grid_layout(width, height);
    PlanarEmbedding::from_coordinates(width * height, endpoints, &coords)
        .expect("grid layouts are planar")
}

pub(crate) fn grid_layout(width: usize, height: usize) -> (Vec<(usize, usize)>, Vec<(f64, f64)>) {
    let id = |x: usize, y: usize| y * width + x;
    let mut endpoints = Vec::new();
    for y in 0..height {
        for x in 0..width.saturating_sub(1) {
            endpoints.push((id(x, y), id(x + 1, y)));
        }
    }
    for y in 0..height.saturating_sub(1) {
        for x in 0..width {
            endpoints.push((id(x, y), id(x, y + 1)));
        }
    }
    let coords = (0..width * height)
        .map(|v| ((v % width) as f64, (v / width) as f64))
        .collect();
    (endpoints, coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> PlanarEmbedding {
        PlanarEmbedding::new(
            vec![(0, 1), (1, 2), (2, 0)],
            vec![vec![0, 5], vec![1, 2], vec![3, 4]],
            0,
        )
        .unwrap()
    }

    #[test]
    fn triangle_has_two_faces_of_length_three() {
        let emb = triangle();
        assert_eq!(emb.faces().len(), 2);
        assert!(emb.faces().iter().all(|f| f.len() == 3));
    }

    #[test]
    fn four_cycle_and_grids() {
        let c4 = grid_embedding(2, 2);
        assert_eq!(c4.faces().len(), 2);
        assert!(c4.faces().iter().all(|f| f.len() == 4));

        let g = grid_embedding(3, 3);
        assert_eq!(g.faces().len(), 5);
        let outer = &g.faces()[g.outer_face()];
        assert_eq!(outer.len(), 8);
        let total: usize = g.faces().iter().map(Face::len).sum();
        assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn bad_rotation_fails_euler() {
        // K4 drawn with a twisted rotation at one vertex yields a torus-like
        // face structure.
        let endpoints = vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let coords = [(0.0, 0.0), (4.0, 0.0), (2.0, 4.0), (2.0, 1.0)];
        let good = PlanarEmbedding::from_coordinates(4, endpoints.clone(), &coords).unwrap();
        assert_eq!(good.faces().len(), 4);
        let mut rotation = good.rotation().to_vec();
        rotation[3].swap(0, 1);
        let err = PlanarEmbedding::new(endpoints, rotation, 0).unwrap_err();
        assert!(matches!(err, Error::NonPlanarEmbedding(_)));
    }

    #[test]
    fn malformed_rotations_are_rejected() {
        assert!(PlanarEmbedding::new(vec![(0, 1)], vec![vec![0], vec![0]], 0).is_err());
        assert!(PlanarEmbedding::new(vec![(0, 1)], vec![vec![0], vec![]], 0).is_err());
        assert!(PlanarEmbedding::new(vec![(0, 1)], vec![vec![1], vec![0]], 0).is_err());
    }

    #[test]
    fn tree_has_one_face() {
        let emb = PlanarEmbedding::new(vec![(0, 1)], vec![vec![0], vec![1]], 0).unwrap();
        assert_eq!(emb.faces().len(), 1);
        assert_eq!(emb.edge_faces(0), (0, 0));
    }

    #[test]
    fn disconnected_components_each_satisfy_euler() {
        let endpoints = vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)];
        let coords = [
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (5.0, 0.0),
            (6.0, 0.0),
            (5.0, 1.0),
        ];
        let emb =
            PlanarEmbedding::from_coordinates(7, endpoints, &[&coords[..], &[(9.0, 9.0)]].concat())
                .unwrap();
        assert_eq!(emb.faces().len(), 4);
        assert_eq!(emb.component_outer_faces().len(), 2);
    }

    #[test]
    fn edge_mask_keeps_planarity() {
        let g = grid_embedding(3, 3);
        let mut keep = vec![true; g.edge_count()];
        keep[0] = false;
        let h = g.with_edge_mask(&keep).unwrap();
        assert_eq!(h.faces().len(), 4);
        assert_eq!(h.faces()[h.outer_face()].len(), 10);
    }
}
