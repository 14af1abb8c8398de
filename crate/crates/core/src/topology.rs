//! Connectivity graphs: Chimera lattices, arbitrary edge lists, dead-vertex
//! masks and random cycle sampling.
//!
//! Chimera vertex numbering is `8 * (row * cols + col) + 4 * side + k` with
//! `side` 0 for the left (vertically coupled) half of a K_{4,4} cell and 1 for
//! the right (horizontally coupled) half, `k` in `0..4`. Edges are always kept
//! as `(i, j)` with `i < j`, sorted ascending; coupling vectors are indexed in
//! that order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Attempts `find_cycle` makes before giving up.
pub const DEFAULT_CYCLE_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChimeraShape {
    pub rows: usize,
    pub cols: usize,
}

impl ChimeraShape {
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }
}

/// Position of a vertex inside a Chimera lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellCoord {
    pub row: usize,
    pub col: usize,
    pub side: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// `(neighbor, edge index)` pairs, sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    chimera: Option<ChimeraShape>,
    mask: BTreeSet<usize>,
}

impl Topology {
    /// Graph from an arbitrary edge list. Pairs are normalized to `i < j`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list = Vec::new();
        for (a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::UnknownVertex(v));
                }
            }
            if a == b {
                return Err(Error::InvalidConfig(format!("self-loop on vertex {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::build(n, list, None, BTreeSet::new()))
    }

    /// Chimera lattice of `rows x cols` K_{4,4} unit cells.
    pub fn chimera(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(format!(
                "chimera dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let id = |r: usize, c: usize, side: usize, k: usize| 8 * (r * cols + c) + 4 * side + k;
        let mut edges = Vec::with_capacity(16 * rows * cols + 4 * (rows * (cols - 1) + cols * (rows - 1)));
        for r in 0..rows {
            for c in 0..cols {
                for a in 0..4 {
                    for b in 0..4 {
                        edges.push((id(r, c, 0, a), id(r, c, 1, b)));
                    }
                }
                for k in 0..4 {
                    if r + 1 < rows {
                        edges.push((id(r, c, 0, k), id(r + 1, c, 0, k)));
                    }
                    if c + 1 < cols {
                        edges.push((id(r, c, 1, k), id(r, c + 1, 1, k)));
                    }
                }
            }
        }
        edges.sort_unstable();
        Ok(Self::build(
            8 * rows * cols,
            edges,
            Some(ChimeraShape { rows, cols }),
            BTreeSet::new(),
        ))
    }

    fn build(
        n: usize,
        edges: Vec<(usize, usize)>,
        chimera: Option<ChimeraShape>,
        mask: BTreeSet<usize>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (e, &(i, j)) in edges.iter().enumerate() {
            adjacency[i].push((j, e));
            adjacency[j].push((i, e));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            n,
            edges,
            adjacency,
            chimera,
            mask,
        }
    }

    /// Removes every edge incident to a dead vertex and records the mask.
    /// Vertex ids are unchanged.
    pub fn apply_mask(&self, dead: &BTreeSet<usize>) -> Result<Self> {
        if let Some(&v) = dead.iter().find(|&&v| v >= self.n) {
            return Err(Error::UnknownVertex(v));
        }
        let mask: BTreeSet<usize> = self.mask.union(dead).copied().collect();
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(i, j)| !mask.contains(i) && !mask.contains(j))
            .collect();
        Ok(Self::build(self.n, edges, self.chimera, mask))
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Index of edge `{a, b}` in the canonical order.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(nb, _)| nb)
            .ok()
            .map(|pos| list[pos].1)
    }

    pub fn mask(&self) -> &BTreeSet<usize> {
        &self.mask
    }

    pub fn is_masked(&self, v: usize) -> bool {
        self.mask.contains(&v)
    }

    pub fn active_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |v| !self.mask.contains(v))
    }

    pub fn n_active(&self) -> usize {
        self.n - self.mask.len()
    }

    pub fn chimera_shape(&self) -> Option<ChimeraShape> {
        self.chimera
    }

    pub fn cell_coord(&self, v: usize) -> Option<CellCoord> {
        let shape = self.chimera?;
        if v >= self.n {
            return None;
        }
        let cell = v / 8;
        Some(CellCoord {
            row: cell / shape.cols,
            col: cell % shape.cols,
            side: (v % 8) / 4,
            k: v % 4,
        })
    }

    /// Samples a simple cycle of exactly `length` vertices through `start`
    /// with a self-avoiding random walk, retrying up to `attempts` times.
    /// The last step is restricted to neighbors of `start` so the walk can
    /// close.
    pub fn find_cycle<R: Rng + ?Sized>(
        &self,
        length: usize,
        start: usize,
        rng: &mut R,
        attempts: usize,
    ) -> Option<Vec<usize>> {
        if length < 3 || start >= self.n || self.adjacency[start].len() < 2 {
            return None;
        }
        let mut on_path = vec![false; self.n];
        let mut path = Vec::with_capacity(length);
        let mut candidates = Vec::new();
        'attempt: for _ in 0..attempts {
            for &v in &path {
                on_path[v] = false;
            }
            path.clear();
            path.push(start);
            on_path[start] = true;
            while path.len() < length {
                let cur = *path.last().unwrap();
                let closing = path.len() == length - 1;
                candidates.clear();
                candidates.extend(self.adjacency[cur].iter().map(|&(nb, _)| nb).filter(|&nb| {
                    !on_path[nb] && (!closing || self.edge_index(nb, start).is_some())
                }));
                let Some(&next) = candidates.choose(rng) else {
                    continue 'attempt;
                };
                on_path[next] = true;
                path.push(next);
            }
            return Some(path);
        }
        None
    }

    /// True when `cycle` is a simple cycle of this graph.
    pub fn is_cycle(&self, cycle: &[usize]) -> bool {
        if cycle.len() < 3 {
            return false;
        }
        let distinct: BTreeSet<_> = cycle.iter().collect();
        distinct.len() == cycle.len()
            && (0..cycle.len())
                .all(|i| self.edge_index(cycle[i], cycle[(i + 1) % cycle.len()]).is_some())
    }

    /// `N`, `M`, then one `i j` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n{}\n", self.n, self.edges.len());
        for (i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut header = |what: &str| -> Result<usize> {
            let (line, l) = lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("missing {what}"),
            })?;
            l.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad {what} `{l}`"),
            })
        };
        let n = header("vertex count")?;
        let m = header("edge count")?;
        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines {
            let mut it = l.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => edges.push((i, j)),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected `i j`, got `{l}`"),
                    })
                }
            }
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(n, edges)
    }
}

/// Parses a mask file: one vertex id per line, blank lines and `#` comments ignored.
pub fn parse_mask(text: &str) -> Result<BTreeSet<usize>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, l)| {
            l.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad vertex id `{l}`"),
            })
        })
        .collect()
}
