use serde::{Deserialize, Serialize};

use super::filtration::Filtration;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: f64,
    /// `f64::INFINITY` for features that never die.
    pub death: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn dim(&self, p: u8) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |q| q.dim == p)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Persistence pairs in dimensions 0 and 1.
///
/// Dimension 0 uses union-find over edges in filtration order. Dimension 1
/// reduces the triangle boundary matrix over Z/2; pairs of zero persistence
/// are dropped.
pub fn persistence(f: &Filtration) -> PersistenceDiagram {
    let tri = &f.triangulation;
    let n = tri.points.len();
    let mut pairs = Vec::new();
    if n == 0 {
        return PersistenceDiagram { pairs };
    }

    let edge_order: Vec<usize> = f.simplices.iter().filter(|s| s.dim == 1).map(|s| s.index).collect();
    let mut edge_pos = vec![0; edge_order.len()];
    for (k, &e) in edge_order.iter().enumerate() {
        edge_pos[e] = k;
    }

    // Every vertex is born at 0, so which of the two merging components is
    // "younger" does not affect the diagram.
    let mut uf = UnionFind::new(n);
    for &e in &edge_order {
        let [a, b] = tri.edges[e];
        if uf.union(a, b) {
            pairs.push(PersistencePair { dim: 0, birth: 0.0, death: f.edge_values[e] });
        }
    }
    pairs.push(PersistencePair { dim: 0, birth: 0.0, death: f64::INFINITY });

    // pivot[k] = reduced column whose lowest entry is edge position k
    let mut pivot: Vec<Option<Vec<usize>>> = vec![None; edge_order.len()];
    let mut paired = vec![false; edge_order.len()];
    for s in f.simplices.iter().filter(|s| s.dim == 2) {
        let mut col: Vec<usize> = tri.triangle_edges[s.index].iter().map(|&e| edge_pos[e]).collect();
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match &pivot[low] {
                Some(other) => col = symmetric_difference(&col, other),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            paired[low] = true;
            let birth = f.edge_values[edge_order[low]];
            if s.value > birth {
                pairs.push(PersistencePair { dim: 1, birth, death: s.value });
            }
            pivot[low] = Some(col);
        }
    }

    // positive edges (those creating a cycle) that are never filled
    let mut uf = UnionFind::new(n);
    for (k, &e) in edge_order.iter().enumerate() {
        let [a, b] = tri.edges[e];
        if !uf.union(a, b) && !paired[k] {
            pairs.push(PersistencePair { dim: 1, birth: f.edge_values[e], death: f64::INFINITY });
        }
    }
    PersistenceDiagram { pairs }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
