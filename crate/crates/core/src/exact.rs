//! Exact ground states: exhaustive enumeration for small instances and
//! min-sum variable elimination for low-treewidth ones (Chimera lattices up
//! to a few cells per side). Both serve as oracles for the heuristics.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::instance::{CouplingTable, Energy, IsingInstance, SpinConfig};

pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 24;
pub const DEFAULT_WIDTH_LIMIT: usize = 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundStates {
    pub energy: Energy,
    /// Every minimizing configuration, in ascending order of the binary
    /// encoding (bit `i` set when the `i`-th active vertex is `-1`).
    pub configs: Vec<SpinConfig>,
}

/// Exhaustive search over the active spins, visiting configurations in
/// Gray-code order with incremental energy updates.
pub fn brute_force_gs(inst: &IsingInstance, limit: usize) -> Result<GroundStates> {
    let topo = inst.topology();
    let active: Vec<usize> = topo.active_vertices().collect();
    let limit = limit.min(32);
    if active.len() > limit {
        return Err(Error::TooLarge {
            active: active.len(),
            limit,
        });
    }
    let table = CouplingTable::new(inst);
    let mut spins = vec![1i8; topo.n_vertices()];
    let mut energy = inst.energy_of(&spins);
    let mut best = energy;
    let mut minimizers: Vec<u32> = vec![0];
    let mut code: u32 = 0;
    let total: u64 = 1 << active.len();
    for step in 1..total {
        let bit = step.trailing_zeros() as usize;
        let v = active[bit];
        energy -= 2 * Energy::from(spins[v]) * table.field(v, &spins);
        spins[v] = -spins[v];
        code ^= 1 << bit;
        if energy < best {
            best = energy;
            minimizers.clear();
            minimizers.push(code);
        } else if energy == best {
            minimizers.push(code);
        }
    }
    minimizers.sort_unstable();
    let configs = minimizers
        .into_iter()
        .map(|code| {
            let mut s = vec![1i8; topo.n_vertices()];
            for (i, &v) in active.iter().enumerate() {
                if code >> i & 1 == 1 {
                    s[v] = -1;
                }
            }
            SpinConfig::new(s).expect("spins are +-1")
        })
        .collect();
    Ok(GroundStates {
        energy: best,
        configs,
    })
}

struct Factor {
    scope: Vec<usize>,
    /// Indexed by assignment bits over `scope` (bit set = spin -1).
    table: Vec<Energy>,
}

struct Elimination {
    var: usize,
    scope: Vec<usize>,
    /// Best value of `var` (true = -1) for each assignment of `scope`.
    choice: Vec<bool>,
}

/// Exact ground-state energy and one minimizing configuration by min-sum
/// variable elimination with a greedy min-degree order. Fails when an
/// intermediate table would span more than `width_limit` spins.
pub fn exact_ground_state(inst: &IsingInstance, width_limit: usize) -> Result<(Energy, SpinConfig)> {
    let topo = inst.topology();
    let n = topo.n_vertices();
    let mut factors: Vec<Option<Factor>> = Vec::new();
    let mut interacts: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (e, &(i, j)) in topo.edges().iter().enumerate() {
        let c = inst.coupling(e);
        if c == 0 {
            continue;
        }
        // table over (i, j): index bit0 = i, bit1 = j
        let table = (0..4u32)
            .map(|a| {
                let si = if a & 1 == 1 { -1 } else { 1 };
                let sj = if a & 2 == 2 { -1 } else { 1 };
                c * si * sj
            })
            .collect();
        factors.push(Some(Factor {
            scope: vec![i, j],
            table,
        }));
        interacts[i].insert(j);
        interacts[j].insert(i);
    }

    let mut remaining: BTreeSet<usize> = (0..n).filter(|&v| !interacts[v].is_empty()).collect();
    let mut order = Vec::with_capacity(remaining.len());
    let mut constant: Energy = 0;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (f, factor) in factors.iter().enumerate() {
        for &v in &factor.as_ref().unwrap().scope {
            buckets[v].push(f);
        }
    }

    while let Some(&var) = remaining
        .iter()
        .min_by_key(|&&v| (interacts[v].len(), v))
    {
        remaining.remove(&var);
        let scope: Vec<usize> = interacts[var].iter().copied().collect();
        if scope.len() > width_limit {
            return Err(Error::WidthExceeded {
                width: scope.len(),
                limit: width_limit,
            });
        }
        for &a in &scope {
            interacts[a].remove(&var);
            for &b in &scope {
                if a != b {
                    interacts[a].insert(b);
                }
            }
        }
        interacts[var].clear();

        let involved: Vec<Factor> = buckets[var]
            .drain(..)
            .filter_map(|f| factors[f].take())
            .collect();
        // For each factor, positions of its scope inside `scope` (None = var).
        let maps: Vec<Vec<Option<usize>>> = involved
            .iter()
            .map(|f| {
                f.scope
                    .iter()
                    .map(|v| scope.iter().position(|s| s == v))
                    .collect()
            })
            .collect();
        let size = 1usize << scope.len();
        let mut table = Vec::with_capacity(size);
        let mut choice = Vec::with_capacity(size);
        for a in 0..size {
            let mut up = 0;
            let mut down = 0;
            for (f, map) in involved.iter().zip(&maps) {
                let mut idx = 0;
                let mut var_bit = 0;
                for (t, pos) in map.iter().enumerate() {
                    match pos {
                        Some(p) => idx |= (a >> p & 1) << t,
                        None => var_bit = 1 << t,
                    }
                }
                up += f.table[idx];
                down += f.table[idx | var_bit];
            }
            table.push(up.min(down));
            choice.push(down < up);
        }
        if scope.is_empty() {
            constant += table[0];
        } else {
            let id = factors.len();
            for &v in &scope {
                buckets[v].push(id);
            }
            factors.push(Some(Factor {
                scope: scope.clone(),
                table,
            }));
        }
        order.push(Elimination { var, scope, choice });
    }

    let mut spins = vec![1i8; n];
    for step in order.iter().rev() {
        let idx = step
            .scope
            .iter()
            .enumerate()
            .fold(0, |acc, (t, &v)| acc | (usize::from(spins[v] < 0) << t));
        if step.choice[idx] {
            spins[step.var] = -1;
        }
    }
    let config = SpinConfig::new(spins).expect("spins are +-1");
    debug_assert_eq!(inst.energy_of(config.spins()), constant);
    Ok((constant, config))
}

/// Ground-state energy by whichever exact method fits.
pub fn ground_energy(inst: &IsingInstance) -> Result<Energy> {
    if inst.topology().n_active() <= 20 {
        return brute_force_gs(inst, 20).map(|g| g.energy);
    }
    exact_ground_state(inst, DEFAULT_WIDTH_LIMIT).map(|(e, _)| e)
}
