//! Tree decompositions by greedy min-fill elimination, and exact
//! minimization by dynamic programming over bags.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{IsingInstance, SpinAssignment};

/// Bags are sorted vertex lists; `parent[b]` is `None` only at the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
}

impl TreeDecomposition {
    /// `max |B| − 1`; an empty decomposition has width 0.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(|b| b.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    pub fn root(&self) -> Option<usize> {
        self.parent.iter().position(|p| p.is_none())
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.bags.len()];
        for (b, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                ch[*p].push(b);
            }
        }
        ch
    }

    /// Bags in preorder from the root, children by increasing id.
    pub fn preorder(&self) -> Vec<usize> {
        let ch = self.children();
        let mut out = Vec::with_capacity(self.bags.len());
        let mut stack: Vec<usize> = self.root().into_iter().collect();
        while let Some(b) = stack.pop() {
            out.push(b);
            stack.extend(ch[b].iter().rev());
        }
        out
    }

    /// Checks that the parent pointers form one tree and the three
    /// decomposition rules: every vertex is covered, every edge lies in a
    /// bag, and the bags holding a vertex are connected.
    pub fn validate(&self, n: usize, edges: &[(usize, usize)]) -> Result<()> {
        let m = self.bags.len();
        if self.parent.len() != m {
            return Err(Error::InvalidTreeDecomposition(
                "parent list length differs from bag count".into(),
            ));
        }
        if n == 0 && m == 0 {
            return Ok(());
        }
        let roots = self.parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 || self.preorder().len() != m {
            return Err(Error::InvalidTreeDecomposition(
                "bags do not form a single tree".into(),
            ));
        }
        let mut bags_with = vec![0usize; n];
        for bag in &self.bags {
            for &v in bag {
                if v >= n {
                    return Err(Error::InvalidTreeDecomposition(format!(
                        "bag holds unknown vertex {v}"
                    )));
                }
                bags_with[v] += 1;
            }
        }
        if let Some(v) = bags_with.iter().position(|&c| c == 0) {
            return Err(Error::InvalidTreeDecomposition(format!(
                "vertex {v} is in no bag"
            )));
        }
        let sets: Vec<BTreeSet<usize>> = self
            .bags
            .iter()
            .map(|b| b.iter().copied().collect())
            .collect();
        for &(u, v) in edges {
            if !sets.iter().any(|s| s.contains(&u) && s.contains(&v)) {
                return Err(Error::InvalidTreeDecomposition(format!(
                    "edge ({u}, {v}) is in no bag"
                )));
            }
        }
        // In a tree, the bags holding v are connected iff they span
        // exactly (count − 1) tree edges.
        let mut links = vec![0usize; n];
        for (b, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                for v in sets[b].intersection(&sets[p]) {
                    links[*v] += 1;
                }
            }
        }
        if let Some(v) = (0..n).find(|&v| links[v] + 1 != bags_with[v]) {
            return Err(Error::InvalidTreeDecomposition(format!(
                "bags containing vertex {v} are not connected"
            )));
        }
        Ok(())
    }
}

/// Greedy elimination ordering: minimum fill-in, then minimum degree, then
/// lowest id. Bag of `v` is `v` plus its neighbours at elimination time; its
/// parent is the bag of the earliest-eliminated of those neighbours.
pub fn build_tree_decomposition(
    n: usize,
    edges: &[(usize, usize)],
    width_cap: usize,
) -> Result<TreeDecomposition> {
    if n == 0 {
        return Ok(TreeDecomposition {
            bags: Vec::new(),
            parent: Vec::new(),
        });
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(u, v) in edges {
        if u != v {
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut eliminated = vec![false; n];
    let mut position = vec![usize::MAX; n];
    let mut bag_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for step in 0..n {
        let mut best: Option<(usize, usize, usize)> = None;
        for v in (0..n).filter(|&v| !eliminated[v]) {
            let nb: Vec<usize> = adj[v].iter().copied().collect();
            let mut fill = 0;
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    if !adj[nb[i]].contains(&nb[j]) {
                        fill += 1;
                    }
                }
            }
            let key = (fill, nb.len(), v);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let (_, deg, v) = best.expect("a vertex remains");
        if deg > width_cap {
            return Err(Error::WidthCap {
                width: deg,
                cap: width_cap,
            });
        }
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                adj[nb[i]].insert(nb[j]);
                adj[nb[j]].insert(nb[i]);
            }
        }
        for &u in &nb {
            adj[u].remove(&v);
        }
        let mut bag = nb;
        bag.push(v);
        bag.sort_unstable();
        bag_of[v] = bag;
        eliminated[v] = true;
        position[v] = step;
    }
    // Bag index = elimination step.
    let mut order = vec![0usize; n];
    for v in 0..n {
        order[position[v]] = v;
    }
    let bags: Vec<Vec<usize>> = order.iter().map(|&v| bag_of[v].clone()).collect();
    let mut parent: Vec<Option<usize>> = order
        .iter()
        .map(|&v| {
            bag_of[v]
                .iter()
                .filter(|&&u| u != v)
                .map(|&u| position[u])
                .min()
        })
        .collect();
    // Link the roots of a forest into a chain under the last bag.
    let last = n - 1;
    for (b, p) in parent.iter_mut().enumerate() {
        if p.is_none() && b != last {
            *p = Some(last);
        }
    }
    Ok(TreeDecomposition { bags, parent })
}

/// Exact minimum by dynamic programming over the bags. Each edge term goes
/// to the first bag in preorder holding both endpoints, each field to the
/// first bag holding its vertex.
pub fn td_dp_min(
    instance: &IsingInstance,
    td: &TreeDecomposition,
) -> Result<(f64, SpinAssignment)> {
    let n = instance.n();
    let edge_pairs: Vec<(usize, usize)> = instance.edges().iter().map(|e| (e.u, e.v)).collect();
    td.validate(n, &edge_pairs)?;
    if n == 0 {
        return Ok((0.0, SpinAssignment::all_up(0)));
    }
    let m = td.bags.len();
    if let Some(big) = td.bags.iter().find(|b| b.len() > 30) {
        return Err(Error::WidthCap {
            width: big.len() - 1,
            cap: 29,
        });
    }
    let pre = td.preorder();
    let pos_in = |bag: &[usize], v: usize| bag.binary_search(&v).ok();

    // Term assignment.
    let mut bag_edges: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); m];
    let mut bag_fields: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for e in instance.edges() {
        let b = pre
            .iter()
            .copied()
            .find(|&b| pos_in(&td.bags[b], e.u).is_some() && pos_in(&td.bags[b], e.v).is_some())
            .ok_or_else(|| {
                Error::InvalidTreeDecomposition(format!("edge ({}, {}) fits no bag", e.u, e.v))
            })?;
        bag_edges[b].push((
            pos_in(&td.bags[b], e.u).unwrap(),
            pos_in(&td.bags[b], e.v).unwrap(),
            e.coupling,
        ));
    }
    for (v, &d) in instance.fields().iter().enumerate() {
        if d != 0.0 {
            let b = pre
                .iter()
                .copied()
                .find(|&b| pos_in(&td.bags[b], v).is_some())
                .ok_or_else(|| {
                    Error::InvalidTreeDecomposition(format!("vertex {v} fits no bag"))
                })?;
            bag_fields[b].push((pos_in(&td.bags[b], v).unwrap(), d));
        }
    }

    let spin = |bits: usize, i: usize| if bits >> i & 1 == 1 { -1.0 } else { 1.0 };
    // For each non-root bag: positions (in the child) of the vertices it
    // shares with its parent, and the matching positions in the parent.
    let shared: Vec<(Vec<usize>, Vec<usize>)> = (0..m)
        .map(|b| match td.parent[b] {
            None => (Vec::new(), Vec::new()),
            Some(p) => {
                let mut cpos = Vec::new();
                let mut ppos = Vec::new();
                for (i, &v) in td.bags[b].iter().enumerate() {
                    if let Some(j) = pos_in(&td.bags[p], v) {
                        cpos.push(i);
                        ppos.push(j);
                    }
                }
                (cpos, ppos)
            }
        })
        .collect();
    let project = |bits: usize, positions: &[usize]| -> usize {
        positions
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &i)| acc | ((bits >> i) & 1) << k)
    };

    let children = td.children();
    let mut message: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut choice: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut root_table = Vec::new();
    for &b in pre.iter().rev() {
        let size = 1usize << td.bags[b].len();
        let mut table: Vec<f64> = (0..size)
            .map(|bits| {
                bag_edges[b]
                    .iter()
                    .map(|&(i, j, c)| c * spin(bits, i) * spin(bits, j))
                    .sum::<f64>()
                    + bag_fields[b]
                        .iter()
                        .map(|&(i, d)| d * spin(bits, i))
                        .sum::<f64>()
            })
            .collect();
        for &c in &children[b] {
            let ppos = &shared[c].1;
            for (bits, val) in table.iter_mut().enumerate() {
                *val += message[c][project(bits, ppos)];
            }
        }
        match td.parent[b] {
            None => root_table = table,
            Some(_) => {
                let cpos = &shared[b].0;
                let mut msg = vec![f64::INFINITY; 1 << cpos.len()];
                let mut arg = vec![0u32; 1 << cpos.len()];
                for (bits, &val) in table.iter().enumerate() {
                    let k = project(bits, cpos);
                    if val < msg[k] {
                        msg[k] = val;
                        arg[k] = bits as u32;
                    }
                }
                message[b] = msg;
                choice[b] = arg;
            }
        }
    }

    let root = pre[0];
    let mut assign = vec![0usize; m];
    let mut best = 0;
    for (bits, &v) in root_table.iter().enumerate() {
        if v < root_table[best] {
            best = bits;
        }
    }
    let value = root_table[best];
    assign[root] = best;
    let mut spins = vec![0i8; n];
    for &b in &pre {
        if let Some(p) = td.parent[b] {
            assign[b] = choice[b][project(assign[p], &shared[b].1)] as usize;
        }
        for (i, &v) in td.bags[b].iter().enumerate() {
            spins[v] = if assign[b] >> i & 1 == 1 { -1 } else { 1 };
        }
    }
    let spins = SpinAssignment::from_spins(spins)?;
    let energy = instance.energy(&spins)?;
    if (energy - value).abs() > 1e-9 * (1.0 + value.abs()) {
        return Err(Error::Internal(format!(
            "TD-DP value {value} but witness energy {energy}"
        )));
    }
    Ok((energy, spins))
}
