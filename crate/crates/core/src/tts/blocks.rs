//! Exact minimization over tree-shaped unions of vertex blocks.
//!
//! The vertices are partitioned into blocks: Chimera unit cells, half cells
//! or single vertices. Generic graphs always use single vertices. A set of blocks whose contracted adjacency
//! graph is a tree is minimized exactly, conditioned on every spin outside the
//! set, by leaf-to-root min-sum message passing. Within a block all `2^k`
//! states are enumerated; a message only depends on the spins of the parent
//! block that touch the child, so on Chimera the messages are 16-entry
//! tables over one side of a K_{4,4} cell.
//!
//! Work accounting: one unit per DP table entry written (field table, local
//! table, interface minimization, message, message expansion), per block state
//! read during backtracking, and per candidate block examined while growing a
//! random tree.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Energy, IsingInstance};

const NONE: u32 = u32::MAX;

/// How vertices are grouped into blocks on Chimera topologies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockShape {
    /// Whole K_{4,4} unit cells (8 spins).
    Cell,
    /// One side of a unit cell (4 spins, no internal edges).
    HalfCell,
    /// Single spins.
    #[default]
    Vertex,
}

impl std::str::FromStr for BlockShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell" => Ok(Self::Cell),
            "half-cell" => Ok(Self::HalfCell),
            "vertex" => Ok(Self::Vertex),
            _ => Err(Error::InvalidConfig(format!(
                "unknown block shape `{s}` (expected cell, half-cell or vertex)"
            ))),
        }
    }
}
pub const MAX_BLOCK_BITS: usize = 16;

#[derive(Clone, Debug)]
struct Block {
    vertices: Vec<usize>,
    /// Intra-block energy per state; bit `t` set means `vertices[t]` is `-1`.
    intra: Vec<Energy>,
    /// `(bit, outside vertex, J)` for edges leaving the block.
    external: Vec<(u8, usize, Energy)>,
}

#[derive(Clone, Debug)]
struct Link {
    lo: usize,
    /// Block state -> interface index, for each side.
    lo_iface: Vec<u16>,
    hi_iface: Vec<u16>,
    lo_size: usize,
    hi_size: usize,
    /// Coupling energy across the link, `inter[i_lo * hi_size + i_hi]`.
    inter: Vec<Energy>,
}

impl Link {
    fn iface(&self, block: usize) -> &[u16] {
        if block == self.lo {
            &self.lo_iface
        } else {
            &self.hi_iface
        }
    }

    fn size(&self, block: usize) -> usize {
        if block == self.lo {
            self.lo_size
        } else {
            self.hi_size
        }
    }

    #[inline]
    fn energy(&self, block: usize, i_block: usize, i_other: usize) -> Energy {
        if block == self.lo {
            self.inter[i_block * self.hi_size + i_other]
        } else {
            self.inter[i_other * self.hi_size + i_block]
        }
    }
}

/// A tree of blocks in BFS order; `parent` is `(parent block, link)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockTree {
    pub nodes: Vec<(usize, Option<(usize, usize)>)>,
}

impl BlockTree {
    pub fn blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().map(|&(b, _)| b)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Reusable buffers for [`BlockSolver::solve`].
#[derive(Clone, Debug, Default)]
pub struct DpScratch {
    acc: Vec<Vec<Energy>>,
    g_arg: Vec<Vec<u16>>,
    m_arg: Vec<Vec<u16>>,
    g: Vec<Energy>,
    m: Vec<Energy>,
    state: Vec<u16>,
    in_tree: Vec<bool>,
    // tree growth
    mark: Vec<u8>,
    tree_neighbors: Vec<u8>,
    candidates: Vec<(usize, usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DpOutcome {
    /// Energy of the tree terms (intra, boundary and link couplings) before.
    pub before: Energy,
    /// Minimum of the same terms, now written into the spins.
    pub after: Energy,
    pub work: u64,
}

/// Block partition of an instance with its couplings folded into tables.
#[derive(Clone, Debug)]
pub struct BlockSolver {
    blocks: Vec<Block>,
    links: Vec<Link>,
    adj: Vec<Vec<(usize, usize)>>,
    block_of: Vec<u32>,
}

impl BlockSolver {
    /// Partition of the active vertices by `shape`. Topologies without cell
    /// metadata always use single vertices. Masked vertices belong to no block.
    pub fn for_instance(inst: &IsingInstance, shape: BlockShape) -> Self {
        let topo = inst.topology();
        let width = match (topo.chimera_shape(), shape) {
            (Some(_), BlockShape::Cell) => 8,
            (Some(_), BlockShape::HalfCell) => 4,
            _ => 1,
        };
        let partition: Vec<Vec<usize>> = if width == 1 {
            topo.active_vertices().map(|v| vec![v]).collect()
        } else {
            (0..topo.n_vertices() / width)
                .map(|b| (width * b..width * (b + 1)).filter(|&v| !topo.is_masked(v)).collect::<Vec<_>>())
                .filter(|b| !b.is_empty())
                .collect()
        };
        Self::new(inst, &partition).expect("shape partition is valid")
    }

    /// Solver over the given disjoint blocks. Vertices in no block stay frozen.
    pub fn new(inst: &IsingInstance, partition: &[Vec<usize>]) -> Result<Self> {
        let topo = inst.topology();
        let n = topo.n_vertices();
        let mut block_of = vec![NONE; n];
        let mut bit_of = vec![0u8; n];
        for (b, vertices) in partition.iter().enumerate() {
            if vertices.is_empty() || vertices.len() > MAX_BLOCK_BITS {
                return Err(Error::InvalidConfig(format!(
                    "block {b} has {} vertices (allowed 1..={MAX_BLOCK_BITS})",
                    vertices.len()
                )));
            }
            for (t, &v) in vertices.iter().enumerate() {
                if v >= n {
                    return Err(Error::UnknownVertex(v));
                }
                if block_of[v] != NONE {
                    return Err(Error::InvalidConfig(format!("vertex {v} is in two blocks")));
                }
                block_of[v] = b as u32;
                bit_of[v] = t as u8;
            }
        }

        let mut blocks = Vec::with_capacity(partition.len());
        // crossing edges per unordered block pair
        let mut crossing: std::collections::BTreeMap<(usize, usize), Vec<(usize, usize, Energy)>> =
            Default::default();
        for (b, vertices) in partition.iter().enumerate() {
            let k = vertices.len();
            let mut intra_edges = Vec::new();
            let mut external = Vec::new();
            for (t, &v) in vertices.iter().enumerate() {
                for &(u, e) in topo.neighbors(v) {
                    let j = inst.coupling(e);
                    let ub = block_of[u];
                    if ub == b as u32 {
                        if v < u {
                            intra_edges.push((t, bit_of[u] as usize, j));
                        }
                    } else {
                        external.push((t as u8, u, j));
                        if ub != NONE && (b as u32) < ub {
                            crossing.entry((b, ub as usize)).or_default().push((v, u, j));
                        }
                    }
                }
            }
            let intra = (0..1usize << k)
                .map(|c| {
                    intra_edges
                        .iter()
                        .map(|&(a, bb, j)| {
                            let same = (c >> a & 1) == (c >> bb & 1);
                            if same {
                                j
                            } else {
                                -j
                            }
                        })
                        .sum()
                })
                .collect();
            blocks.push(Block {
                vertices: vertices.clone(),
                intra,
                external,
            });
        }

        let mut links = Vec::new();
        let mut adj = vec![Vec::new(); blocks.len()];
        for ((lo, hi), edges) in crossing {
            let iface_bits = |block: usize, pick: &dyn Fn(&(usize, usize, Energy)) -> usize| {
                let mut bits: Vec<usize> = edges.iter().map(|e| bit_of[pick(e)] as usize).collect();
                bits.sort_unstable();
                bits.dedup();
                let table: Vec<u16> = (0..1usize << blocks[block].vertices.len())
                    .map(|c| {
                        bits.iter()
                            .enumerate()
                            .fold(0u16, |acc, (i, &bit)| acc | (((c >> bit) & 1) as u16) << i)
                    })
                    .collect();
                (bits, table)
            };
            let (lo_bits, lo_iface) = iface_bits(lo, &|e| e.0);
            let (hi_bits, hi_iface) = iface_bits(hi, &|e| e.1);
            let (lo_size, hi_size) = (1usize << lo_bits.len(), 1usize << hi_bits.len());
            let mut inter = vec![0; lo_size * hi_size];
            for (il, slot) in inter.chunks_mut(hi_size).enumerate() {
                for (ih, value) in slot.iter_mut().enumerate() {
                    *value = edges
                        .iter()
                        .map(|&(v, u, j)| {
                            let pl = lo_bits.iter().position(|&b| b == bit_of[v] as usize).unwrap();
                            let ph = hi_bits.iter().position(|&b| b == bit_of[u] as usize).unwrap();
                            if (il >> pl & 1) == (ih >> ph & 1) {
                                j
                            } else {
                                -j
                            }
                        })
                        .sum();
                }
            }
            let id = links.len();
            adj[lo].push((hi, id));
            adj[hi].push((lo, id));
            links.push(Link {
                lo,
                lo_iface,
                hi_iface,
                lo_size,
                hi_size,
                inter,
            });
        }
        Ok(Self {
            blocks,
            links,
            adj,
            block_of,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_vertices(&self, b: usize) -> &[usize] {
        &self.blocks[b].vertices
    }

    pub fn scratch(&self) -> DpScratch {
        DpScratch {
            acc: self.blocks.iter().map(|b| vec![0; 1 << b.vertices.len()]).collect(),
            g_arg: self.adj.iter().map(|_| Vec::new()).collect(),
            m_arg: self.adj.iter().map(|_| Vec::new()).collect(),
            g: Vec::new(),
            m: Vec::new(),
            state: vec![0; self.blocks.len()],
            in_tree: vec![false; self.blocks.len()],
            mark: vec![0; self.blocks.len()],
            tree_neighbors: vec![0; self.blocks.len()],
            candidates: Vec::new(),
        }
    }

    /// Arranges `blocks` into BFS trees (one per connected component).
    /// Fails if the contracted block graph restricted to `blocks` has a cycle.
    pub fn tree_of(&self, blocks: &[usize]) -> Result<Vec<BlockTree>> {
        let mut member = vec![false; self.blocks.len()];
        for &b in blocks {
            if b >= self.blocks.len() {
                return Err(Error::InvalidConfig(format!("no block {b}")));
            }
            member[b] = true;
        }
        let mut seen = vec![false; self.blocks.len()];
        let mut trees = Vec::new();
        let mut inner_links = 0;
        for &b in blocks {
            inner_links += self.adj[b].iter().filter(|&&(nb, _)| member[nb]).count();
        }
        let mut n_members = 0;
        for &root in blocks {
            if seen[root] {
                continue;
            }
            let mut tree = BlockTree::default();
            tree.nodes.push((root, None));
            seen[root] = true;
            let mut head = 0;
            while head < tree.nodes.len() {
                let (b, _) = tree.nodes[head];
                head += 1;
                for &(nb, link) in &self.adj[b] {
                    if member[nb] && !seen[nb] {
                        seen[nb] = true;
                        tree.nodes.push((nb, Some((b, link))));
                    }
                }
            }
            n_members += tree.len();
            trees.push(tree);
        }
        // a forest on V vertices has exactly V - components edges
        if inner_links / 2 != n_members - trees.len() {
            return Err(Error::CyclicSubgraph);
        }
        Ok(trees)
    }

    /// Grows a random maximal set of blocks whose induced block graph is a
    /// tree: start from a random block and repeatedly add a random block that
    /// touches exactly one block already chosen.
    pub fn random_tree<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut DpScratch) -> (BlockTree, u64) {
        const FREE: u8 = 0;
        const IN: u8 = 1;
        const BLOCKED: u8 = 2;
        let mut tree = BlockTree::default();
        if self.blocks.is_empty() {
            return (tree, 0);
        }
        scratch.mark.fill(FREE);
        scratch.tree_neighbors.fill(0);
        scratch.candidates.clear();
        let mut work = 0u64;
        let root = rng.gen_range(0..self.blocks.len());
        let add = |b: usize, parent: Option<(usize, usize)>, scratch: &mut DpScratch, tree: &mut BlockTree| {
            scratch.mark[b] = IN;
            tree.nodes.push((b, parent));
            for &(nb, link) in &self.adj[b] {
                scratch.tree_neighbors[nb] += 1;
                if scratch.mark[nb] == FREE {
                    if scratch.tree_neighbors[nb] == 1 {
                        scratch.candidates.push((nb, b, link));
                    } else {
                        scratch.mark[nb] = BLOCKED;
                    }
                }
            }
        };
        add(root, None, scratch, &mut tree);
        while !scratch.candidates.is_empty() {
            let i = rng.gen_range(0..scratch.candidates.len());
            let (b, parent, link) = scratch.candidates.swap_remove(i);
            work += 1;
            if scratch.mark[b] != FREE {
                continue;
            }
            add(b, Some((parent, link)), scratch, &mut tree);
        }
        (tree, work)
    }

    fn encode(&self, b: usize, spins: &[i8]) -> u16 {
        self.blocks[b]
            .vertices
            .iter()
            .enumerate()
            .fold(0u16, |acc, (t, &v)| acc | u16::from(spins[v] < 0) << t)
    }

    /// Exact minimization of the energy over the spins of `tree`, with all
    /// other spins held fixed. Writes the minimizer into `spins`.
    pub fn solve(&self, tree: &BlockTree, spins: &mut [i8], scratch: &mut DpScratch) -> DpOutcome {
        let mut work = 0u64;
        for &(b, _) in &tree.nodes {
            scratch.in_tree[b] = true;
        }
        let mut before = 0;
        for &(b, _) in &tree.nodes {
            let block = &self.blocks[b];
            let k = block.vertices.len();
            let mut h = [0 as Energy; MAX_BLOCK_BITS];
            for &(bit, u, j) in &block.external {
                let ub = self.block_of[u];
                if ub == NONE || !scratch.in_tree[ub as usize] {
                    h[bit as usize] += j * Energy::from(spins[u]);
                }
            }
            let acc = &mut scratch.acc[b];
            // field term: all spins +1 at state 0, each set bit flips one
            acc[0] = h[..k].iter().sum();
            for c in 1..acc.len() {
                let low = c.trailing_zeros() as usize;
                acc[c] = acc[c & (c - 1)] - 2 * h[low];
            }
            for (a, &intra) in acc.iter_mut().zip(&block.intra) {
                *a += intra;
            }
            work += 2 * acc.len() as u64;
            let cur = self.encode(b, spins);
            scratch.state[b] = cur;
            before += acc[cur as usize];
        }
        for &(b, parent) in &tree.nodes {
            if let Some((p, l)) = parent {
                let link = &self.links[l];
                let ib = link.iface(b)[scratch.state[b] as usize] as usize;
                let ip = link.iface(p)[scratch.state[p] as usize] as usize;
                before += link.energy(b, ib, ip);
            }
        }

        for &(b, parent) in tree.nodes.iter().rev() {
            let Some((p, l)) = parent else { continue };
            let link = &self.links[l];
            let (nb, np) = (link.size(b), link.size(p));
            let child_iface = link.iface(b);
            scratch.g.clear();
            scratch.g.resize(nb, Energy::MAX);
            let g_arg = &mut scratch.g_arg[b];
            g_arg.clear();
            g_arg.resize(nb, 0);
            for (c, &v) in scratch.acc[b].iter().enumerate() {
                let i = child_iface[c] as usize;
                if v < scratch.g[i] {
                    scratch.g[i] = v;
                    g_arg[i] = c as u16;
                }
            }
            scratch.m.clear();
            let m_arg = &mut scratch.m_arg[b];
            m_arg.clear();
            for ip in 0..np {
                let (best, arg) = (0..nb)
                    .map(|ic| (scratch.g[ic] + link.energy(b, ic, ip), ic))
                    .min()
                    .expect("interface is non-empty");
                scratch.m.push(best);
                m_arg.push(arg as u16);
            }
            let parent_iface = link.iface(p);
            for (cp, a) in scratch.acc[p].iter_mut().enumerate() {
                *a += scratch.m[parent_iface[cp] as usize];
            }
            work += (scratch.acc[b].len() + nb * np + scratch.acc[p].len()) as u64;
        }

        let root = tree.nodes[0].0;
        let (after, best) = scratch.acc[root]
            .iter()
            .enumerate()
            .map(|(c, &v)| (v, c))
            .min()
            .expect("block is non-empty");
        work += scratch.acc[root].len() as u64;
        scratch.state[root] = best as u16;
        for &(b, parent) in &tree.nodes {
            if let Some((p, l)) = parent {
                let link = &self.links[l];
                let ip = link.iface(p)[scratch.state[p] as usize] as usize;
                let ic = scratch.m_arg[b][ip] as usize;
                scratch.state[b] = scratch.g_arg[b][ic];
                work += 1;
            }
            let state = scratch.state[b];
            for (t, &v) in self.blocks[b].vertices.iter().enumerate() {
                spins[v] = if state >> t & 1 == 1 { -1 } else { 1 };
            }
            scratch.in_tree[b] = false;
        }
        DpOutcome {
            before,
            after,
            work,
        }
    }
}

/// Minimizes the energy over the vertices of `blocks` (a partition of the
/// free vertices whose block graph is a forest), all other spins frozen at
/// their values in `spins`. Returns the new total energy and the work spent.
pub fn tree_conditional_min(
    inst: &IsingInstance,
    blocks: &[Vec<usize>],
    config: &mut crate::instance::SpinConfig,
) -> Result<(Energy, u64)> {
    inst.check_config(config)?;
    let solver = BlockSolver::new(inst, blocks)?;
    let all: Vec<usize> = (0..solver.n_blocks()).collect();
    let trees = solver.tree_of(&all)?;
    let mut scratch = solver.scratch();
    let mut work = 0;
    for tree in &trees {
        work += solver.solve(tree, config.spins_mut(), &mut scratch).work;
    }
    Ok((inst.energy_of(config.spins()), work))
}
