//! Ising instances `H = sum_{<i,j>} J_ij s_i s_j` over a topology, spin
//! configurations, and planted-solution instances built from loops.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Topology;

pub type Coupling = i64;
pub type Energy = i64;

/// Assignment of `+1`/`-1` to every vertex. Masked vertices sit at `+1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidConfig(format!("spin value {bad} is not +-1")));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Uniformly random spins on the active vertices.
    pub fn random<R: Rng + ?Sized>(topology: &Topology, rng: &mut R) -> Self {
        let mut spins = vec![1i8; topology.n_vertices()];
        for v in topology.active_vertices() {
            spins[v] = if rng.gen::<bool>() { 1 } else { -1 };
        }
        Self(spins)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [i8] {
        &mut self.0
    }

    pub fn get(&self, v: usize) -> i8 {
        self.0[v]
    }

    pub fn flip(&mut self, v: usize) {
        self.0[v] = -self.0[v];
    }

    /// Global spin flip restricted to the active vertices of `topology`.
    pub fn flipped(&self, topology: &Topology) -> Self {
        let mut out = self.clone();
        for v in topology.active_vertices() {
            out.0[v] = -out.0[v];
        }
        out
    }

    /// Representative of the `{c, -c}` pair whose first active spin is `+1`.
    pub fn canonical(&self, topology: &Topology) -> Self {
        match topology.active_vertices().next() {
            Some(v) if self.0[v] < 0 => self.flipped(topology),
            _ => self.clone(),
        }
    }

    pub fn hamming(&self, other: &Self, topology: &Topology) -> usize {
        topology
            .active_vertices()
            .filter(|&v| self.0[v] != other.0[v])
            .count()
    }

    /// `+`/`-` string, one character per vertex.
    pub fn to_pm_string(&self) -> String {
        self.0.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }

    pub fn from_pm_string(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::InvalidConfig(format!("bad spin character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl From<SpinConfig> for String {
    fn from(c: SpinConfig) -> String {
        c.to_pm_string()
    }
}

impl TryFrom<String> for SpinConfig {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::from_pm_string(&s)
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pm_string())
    }
}

/// A cycle sub-Hamiltonian of weight `weight`. A frustrated loop has one
/// violated edge, stored as its position `p` in the cycle (edge
/// `cycle[p] - cycle[p + 1 mod L]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    pub cycle: Vec<usize>,
    pub weight: u32,
    pub violated: Option<usize>,
}

impl Loop {
    pub fn is_frustrated(&self) -> bool {
        self.violated.is_some()
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    /// Minimum of the loop term: `-(L-2) w` when frustrated, `-L w` otherwise.
    pub fn min_energy(&self) -> Energy {
        let l = self.cycle.len() as Energy;
        let w = Energy::from(self.weight);
        if self.is_frustrated() {
            -(l - 2) * w
        } else {
            -l * w
        }
    }

    fn check(&self, topology: &Topology) -> Result<()> {
        if self.weight == 0 {
            return Err(Error::InvalidLoop("weight must be positive".into()));
        }
        if !topology.is_cycle(&self.cycle) {
            return Err(Error::InvalidLoop(format!(
                "{:?} is not a simple cycle of the topology",
                self.cycle
            )));
        }
        if let Some(p) = self.violated {
            if p >= self.cycle.len() {
                return Err(Error::InvalidLoop(format!("violated position {p} out of range")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedData {
    pub solution: SpinConfig,
    pub loops: Vec<Loop>,
    pub gs_energy: Energy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsingInstance {
    topology: Arc<Topology>,
    couplings: Vec<Coupling>,
    planted: Option<PlantedData>,
}

impl IsingInstance {
    pub fn new(topology: Arc<Topology>, couplings: Vec<Coupling>) -> Result<Self> {
        if couplings.len() != topology.n_edges() {
            return Err(Error::DimensionMismatch {
                expected: topology.n_edges(),
                actual: couplings.len(),
            });
        }
        Ok(Self {
            topology,
            couplings,
            planted: None,
        })
    }

    pub fn zero(topology: Arc<Topology>) -> Self {
        let m = topology.n_edges();
        Self {
            topology,
            couplings: vec![0; m],
            planted: None,
        }
    }

    /// Independent uniform `+-1` coupling on every edge.
    pub fn random_signed<R: Rng + ?Sized>(topology: Arc<Topology>, rng: &mut R) -> Self {
        let couplings = (0..topology.n_edges())
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        Self {
            topology,
            couplings,
            planted: None,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn topology_arc(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn coupling(&self, e: usize) -> Coupling {
        self.couplings[e]
    }

    pub fn planted(&self) -> Option<&PlantedData> {
        self.planted.as_ref()
    }

    pub fn n_vertices(&self) -> usize {
        self.topology.n_vertices()
    }

    pub fn is_signed(&self) -> bool {
        self.couplings.iter().all(|&j| j == 1 || j == -1)
    }

    pub fn check_config(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: self.n_vertices(),
                actual: config.len(),
            });
        }
        Ok(())
    }

    pub fn energy(&self, config: &SpinConfig) -> Result<Energy> {
        self.check_config(config)?;
        Ok(self.energy_of(config.spins()))
    }

    pub(crate) fn energy_of(&self, spins: &[i8]) -> Energy {
        self.topology
            .edges()
            .iter()
            .zip(&self.couplings)
            .map(|(&(i, j), &c)| c * Energy::from(spins[i] * spins[j]))
            .sum()
    }

    /// `sum_j J_vj s_j`: flipping `v` changes the energy by `-2 s_v h_v`.
    pub fn local_field(&self, v: usize, spins: &[i8]) -> Energy {
        self.topology
            .neighbors(v)
            .iter()
            .map(|&(u, e)| self.couplings[e] * Energy::from(spins[u]))
            .sum()
    }

    /// Copy with `J_e -> -J_e`. Planted data, if any, is dropped since the
    /// planted energy no longer holds.
    pub fn flip_edge(&self, e: usize) -> Result<Self> {
        let mut out = self.clone();
        out.flip_edge_in_place(e)?;
        Ok(out)
    }

    pub fn flip_edge_in_place(&mut self, e: usize) -> Result<()> {
        let len = self.couplings.len();
        let c = self.couplings.get_mut(e).ok_or(Error::EdgeOutOfRange { index: e, len })?;
        *c = -*c;
        self.planted = None;
        Ok(())
    }

    /// Instance whose couplings are the sum of the loop contributions, with
    /// `solution` a simultaneous ground state of every loop.
    pub fn assemble_planted(
        topology: Arc<Topology>,
        solution: SpinConfig,
        loops: Vec<Loop>,
    ) -> Result<Self> {
        if solution.len() != topology.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: topology.n_vertices(),
                actual: solution.len(),
            });
        }
        let mut couplings = vec![0; topology.n_edges()];
        let mut gs_energy = 0;
        for l in &loops {
            for (e, c) in loop_couplings(&topology, l, &solution)? {
                couplings[e] += c;
            }
            gs_energy += l.min_energy();
        }
        Ok(Self {
            topology,
            couplings,
            planted: Some(PlantedData {
                solution,
                loops,
                gs_energy,
            }),
        })
    }

    /// Swaps loop `index` of a planted instance for `new_loop`, updating the
    /// couplings and ground-state energy in place. Returns the removed loop.
    pub fn replace_loop(&mut self, index: usize, new_loop: Loop) -> Result<Loop> {
        let planted = self
            .planted
            .as_mut()
            .ok_or_else(|| Error::InvalidConfig("instance has no planted solution".into()))?;
        if index >= planted.loops.len() {
            return Err(Error::InvalidLoop(format!("no loop at index {index}")));
        }
        let added = loop_couplings(&self.topology, &new_loop, &planted.solution)?;
        let removed = loop_couplings(&self.topology, &planted.loops[index], &planted.solution)?;
        for (e, c) in removed {
            self.couplings[e] -= c;
        }
        for (e, c) in added {
            self.couplings[e] += c;
        }
        planted.gs_energy += new_loop.min_energy() - planted.loops[index].min_energy();
        Ok(std::mem::replace(&mut planted.loops[index], new_loop))
    }

    pub(crate) fn with_planted(mut self, planted: Option<PlantedData>) -> Self {
        self.planted = planted;
        self
    }
}

/// Per-edge contributions of one loop: `-w s_i s_j` on every cycle edge, with
/// the sign reversed on the violated edge of a frustrated loop. Returned in
/// cycle order as `(edge index, contribution)`.
pub fn loop_couplings(
    topology: &Topology,
    l: &Loop,
    solution: &SpinConfig,
) -> Result<Vec<(usize, Coupling)>> {
    l.check(topology)?;
    let w = Coupling::from(l.weight);
    let len = l.cycle.len();
    (0..len)
        .map(|p| {
            let (a, b) = (l.cycle[p], l.cycle[(p + 1) % len]);
            let e = topology.edge_index(a, b).ok_or(Error::NotAnEdge(a, b))?;
            let product = Coupling::from(solution.get(a) * solution.get(b));
            let sign = if l.violated == Some(p) { 1 } else { -1 };
            Ok((e, sign * w * product))
        })
        .collect()
}

/// Compressed neighbor lists with couplings, for the inner loops of the
/// Monte Carlo and local-search solvers.
#[derive(Clone, Debug)]
pub(crate) struct CouplingTable {
    start: Vec<usize>,
    nbr: Vec<u32>,
    j: Vec<Coupling>,
    /// Largest `2 * sum_j |J_vj|` over vertices; bounds `|dE|` of one flip.
    pub max_delta: Energy,
}

impl CouplingTable {
    pub fn new(inst: &IsingInstance) -> Self {
        let topo = inst.topology();
        let mut start = Vec::with_capacity(topo.n_vertices() + 1);
        let mut nbr = Vec::new();
        let mut j = Vec::new();
        let mut max_delta = 0;
        start.push(0);
        for v in 0..topo.n_vertices() {
            let mut abs_sum = 0;
            for &(u, e) in topo.neighbors(v) {
                let c = inst.coupling(e);
                if c != 0 {
                    nbr.push(u as u32);
                    j.push(c);
                    abs_sum += c.abs();
                }
            }
            max_delta = max_delta.max(2 * abs_sum);
            start.push(nbr.len());
        }
        Self {
            start,
            nbr,
            j,
            max_delta,
        }
    }

    #[inline]
    pub fn field(&self, v: usize, spins: &[i8]) -> Energy {
        let (a, b) = (self.start[v], self.start[v + 1]);
        self.nbr[a..b]
            .iter()
            .zip(&self.j[a..b])
            .map(|(&u, &c)| c * Energy::from(spins[u as usize]))
            .sum()
    }
}
