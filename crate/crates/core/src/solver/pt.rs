//! Parallel tempering with per-copy temperature tracing.
//!
//! Copies are organised as `n_chains` independent ladders of `N_T`
//! temperatures; copy `c * N_T + k` starts chain `c` at temperature `k`. One
//! elementary Monte Carlo step (EMCS) is `sweeps_per_emcs` Metropolis sweeps
//! of every copy at its current temperature followed by one exchange sweep
//! over the even (even EMCS) or odd (odd EMCS) adjacent temperature pairs of
//! each chain.

use std::collections::{BTreeMap, HashMap};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Energy, IsingInstance, SpinConfig};
use crate::rng::{self, Rng};
use crate::solver::metropolis::{AcceptanceTable, Metropolis};
use crate::topology::Topology;

/// Low-state collection stops storing new configurations for a level once it
/// holds this many.
pub const DEFAULT_LEVEL_CAPACITY: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtConfig {
    pub temperatures: Vec<f64>,
    pub n_chains: usize,
    pub sweeps_per_emcs: usize,
    pub max_emcs: u64,
    pub seed: u64,
    /// Keep every copy's energy after every EMCS (needed for trace export).
    pub record_energies: bool,
    pub level_capacity: usize,
}

impl Default for PtConfig {
    fn default() -> Self {
        Self {
            temperatures: geometric_temperatures(30, 0.2, 2.0),
            n_chains: 4,
            sweeps_per_emcs: 10,
            max_emcs: 10_000,
            seed: 0,
            record_energies: true,
            level_capacity: DEFAULT_LEVEL_CAPACITY,
        }
    }
}

pub fn geometric_temperatures(count: usize, t_min: f64, t_max: f64) -> Vec<f64> {
    if count == 1 {
        return vec![t_min];
    }
    let ratio = (t_max / t_min).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| t_min * ratio.powi(i as i32)).collect()
}

impl PtConfig {
    pub fn n_temps(&self) -> usize {
        self.temperatures.len()
    }

    pub fn n_copies(&self) -> usize {
        self.n_chains * self.temperatures.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.temperatures;
        if t.is_empty() || t.len() > usize::from(u16::MAX) {
            return Err(Error::InvalidConfig("need between 1 and 65535 temperatures".into()));
        }
        if t[0] <= 0.0 || t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "temperatures must be positive and strictly ascending".into(),
            ));
        }
        if self.sweeps_per_emcs == 0 || self.n_chains == 0 {
            return Err(Error::InvalidConfig(
                "sweeps_per_emcs and n_chains must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Canonical configurations seen at the two lowest energies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LowStates {
    levels: BTreeMap<Energy, HashMap<SpinConfig, u64>>,
    capacity: usize,
    truncated: bool,
}

impl LowStates {
    pub fn new(capacity: usize) -> Self {
        Self {
            levels: BTreeMap::new(),
            capacity,
            truncated: false,
        }
    }

    fn admits(&self, energy: Energy) -> bool {
        self.levels.len() < 2 || self.levels.keys().nth(1).is_some_and(|&e| energy <= e)
    }

    pub fn observe(&mut self, energy: Energy, config: &SpinConfig, topology: &Topology) {
        if !self.admits(energy) {
            return;
        }
        let level = self.levels.entry(energy).or_default();
        let canonical = config.canonical(topology);
        if let Some(count) = level.get_mut(&canonical) {
            *count += 1;
        } else if level.len() < self.capacity {
            level.insert(canonical, 1);
        } else {
            self.truncated = true;
        }
        while self.levels.len() > 2 {
            self.levels.pop_last();
        }
    }

    pub fn report(&self) -> LowStateReport {
        let mut it = self.levels.iter().map(|(&e, level)| {
            let mut configs: Vec<(SpinConfig, u64)> =
                level.iter().map(|(c, &n)| (c.clone(), n)).collect();
            configs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.spins().cmp(b.0.spins())));
            (e, configs)
        });
        let gs = it.next();
        let es = it.next();
        LowStateReport {
            partial: es.is_none(),
            truncated: self.truncated,
            ground: gs,
            excited: es,
        }
    }
}

/// Output of [`collect_low_states`]: `(energy, [(canonical config, count)])`
/// for the ground and first excited levels, most observed first.
#[derive(Clone, Debug, PartialEq)]
pub struct LowStateReport {
    pub ground: Option<(Energy, Vec<(SpinConfig, u64)>)>,
    pub excited: Option<(Energy, Vec<(SpinConfig, u64)>)>,
    /// Fewer than two energy levels were observed.
    pub partial: bool,
    /// Some level reached its capacity and dropped new configurations.
    pub truncated: bool,
}

impl LowStateReport {
    pub fn ground_configs(&self) -> Vec<SpinConfig> {
        self.ground
            .iter()
            .flat_map(|(_, v)| v.iter().map(|(c, _)| c.clone()))
            .collect()
    }

    pub fn excited_configs(&self) -> Vec<SpinConfig> {
        self.excited
            .iter()
            .flat_map(|(_, v)| v.iter().map(|(c, _)| c.clone()))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct PtTrace {
    pub n_temps: usize,
    pub n_chains: usize,
    pub sweeps_per_emcs: usize,
    pub emcs_executed: u64,
    /// `temp_index[copy][emcs]`.
    pub temp_index: Vec<Vec<u16>>,
    /// `energies[copy][emcs]`, when recording was enabled.
    pub energies: Option<Vec<Vec<Energy>>>,
    /// Energy of the copy at the lowest temperature, `[chain][emcs]`.
    pub lowest_temp_energies: Vec<Vec<Energy>>,
    pub best_energy: Vec<Energy>,
    pub best_config: Vec<SpinConfig>,
    /// Per adjacent pair `(k, k+1)`: proposed and accepted swaps.
    pub swap_proposed: Vec<u64>,
    pub swap_accepted: Vec<u64>,
    pub low_states: LowStates,
}

impl PtTrace {
    pub fn n_copies(&self) -> usize {
        self.temp_index.len()
    }

    /// Lowest energy over all copies and the configuration attaining it.
    pub fn best(&self) -> (Energy, &SpinConfig) {
        let i = (0..self.best_energy.len())
            .min_by_key(|&i| (self.best_energy[i], i))
            .expect("at least one copy");
        (self.best_energy[i], &self.best_config[i])
    }

    /// CSV with columns `emcs,copy,temp_index,energy`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "emcs,copy,temp_index,energy")?;
        for t in 0..self.emcs_executed as usize {
            for copy in 0..self.n_copies() {
                let energy = self
                    .energies
                    .as_ref()
                    .map(|e| e[copy][t].to_string())
                    .unwrap_or_default();
                writeln!(out, "{},{},{},{}", t, copy, self.temp_index[copy][t], energy)?;
            }
        }
        Ok(())
    }
}

struct Copy {
    spins: Vec<i8>,
    energy: Energy,
    rng: Rng,
    best_energy: Energy,
    best_spins: Vec<i8>,
}

/// Swap acceptance probability `min(1, exp((beta_k - beta_{k+1}) (E_k - E_{k+1})))`.
pub fn swap_probability(t_low: f64, t_high: f64, e_low: Energy, e_high: Energy) -> f64 {
    let x = (1.0 / t_low - 1.0 / t_high) * (e_low - e_high) as f64;
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

pub fn pt_run(inst: &IsingInstance, cfg: &PtConfig) -> Result<PtTrace> {
    cfg.validate()?;
    let topo = inst.topology();
    let n_temps = cfg.n_temps();
    let n_copies = cfg.n_copies();
    let kernel = Metropolis::new(inst);
    let tables: Vec<AcceptanceTable> = cfg
        .temperatures
        .iter()
        .map(|&t| AcceptanceTable::new(t, kernel.max_delta()))
        .collect();

    let mut copies: Vec<Copy> = (0..n_copies)
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, i as u64);
            let config = SpinConfig::random(topo, &mut rng);
            let energy = inst.energy_of(config.spins());
            let spins = config.spins().to_vec();
            Copy {
                best_spins: spins.clone(),
                spins,
                energy,
                rng,
                best_energy: energy,
            }
        })
        .collect();
    let mut exchange_rngs: Vec<Rng> = (0..cfg.n_chains)
        .map(|c| rng::stream(cfg.seed, (n_copies + c) as u64))
        .collect();
    // copy_at[chain][k] = copy index currently at temperature k
    let mut copy_at: Vec<Vec<usize>> = (0..cfg.n_chains)
        .map(|c| (0..n_temps).map(|k| c * n_temps + k).collect())
        .collect();
    let mut temp_of: Vec<usize> = (0..n_copies).map(|i| i % n_temps).collect();

    let steps = cfg.max_emcs as usize;
    let mut temp_index = vec![Vec::with_capacity(steps); n_copies];
    let mut energies = cfg.record_energies.then(|| vec![Vec::with_capacity(steps); n_copies]);
    let mut lowest = vec![Vec::with_capacity(steps); cfg.n_chains];
    let mut swap_proposed = vec![0u64; n_temps.saturating_sub(1)];
    let mut swap_accepted = vec![0u64; n_temps.saturating_sub(1)];
    let mut low_states = LowStates::new(cfg.level_capacity);
    let mut scratch = SpinConfig::all_up(topo.n_vertices());

    for step in 0..steps {
        copies.par_iter_mut().zip(temp_of.par_iter()).for_each(|(copy, &k)| {
            for _ in 0..cfg.sweeps_per_emcs {
                let stats = kernel.sweep(&mut copy.spins, &tables[k], &mut copy.rng);
                copy.energy += stats.energy_change;
                if copy.energy < copy.best_energy {
                    copy.best_energy = copy.energy;
                    copy.best_spins.copy_from_slice(&copy.spins);
                }
            }
        });

        for (chain, rng) in exchange_rngs.iter_mut().enumerate() {
            let ladder = &mut copy_at[chain];
            let mut k = step % 2;
            while k + 1 < n_temps {
                let (a, b) = (ladder[k], ladder[k + 1]);
                let p = swap_probability(
                    cfg.temperatures[k],
                    cfg.temperatures[k + 1],
                    copies[a].energy,
                    copies[b].energy,
                );
                swap_proposed[k] += 1;
                if p >= 1.0 || rng.gen::<f64>() < p {
                    swap_accepted[k] += 1;
                    ladder.swap(k, k + 1);
                    temp_of[a] = k + 1;
                    temp_of[b] = k;
                }
                k += 2;
            }
            lowest[chain].push(copies[ladder[0]].energy);
        }

        for (i, copy) in copies.iter().enumerate() {
            temp_index[i].push(temp_of[i] as u16);
            if let Some(e) = energies.as_mut() {
                e[i].push(copy.energy);
            }
            if low_states.admits(copy.energy) {
                scratch.spins_mut().copy_from_slice(&copy.spins);
                low_states.observe(copy.energy, &scratch, topo);
            }
        }
    }

    let best_config = copies
        .iter()
        .map(|c| SpinConfig::new(c.best_spins.clone()).expect("spins are +-1"))
        .collect();
    Ok(PtTrace {
        n_temps,
        n_chains: cfg.n_chains,
        sweeps_per_emcs: cfg.sweeps_per_emcs,
        emcs_executed: steps as u64,
        temp_index,
        energies,
        lowest_temp_energies: lowest,
        best_energy: copies.iter().map(|c| c.best_energy).collect(),
        best_config,
        swap_proposed,
        swap_accepted,
        low_states,
    })
}

/// Ground and first-excited configurations observed during a PT run.
pub fn collect_low_states(trace: &PtTrace) -> LowStateReport {
    trace.low_states.report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force_gs;
    use crate::rng::rng_from_seed;
    use std::sync::Arc;

    fn chain_instance(n: usize, j: i64) -> IsingInstance {
        let t = Topology::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap();
        IsingInstance::new(Arc::new(t), vec![j; n - 1]).unwrap()
    }

    fn small_cfg(temps: Vec<f64>, emcs: u64) -> PtConfig {
        PtConfig {
            temperatures: temps,
            n_chains: 2,
            sweeps_per_emcs: 1,
            max_emcs: emcs,
            seed: 3,
            ..PtConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(PtConfig::default().validate().is_ok());
        assert_eq!(PtConfig::default().n_copies(), 120);
        assert!(small_cfg(vec![1.0, 1.0], 1).validate().is_err());
        assert!(small_cfg(vec![0.0, 1.0], 1).validate().is_err());
        assert!(small_cfg(vec![], 1).validate().is_err());
        let t = geometric_temperatures(30, 0.2, 2.0);
        assert!((t[0] - 0.2).abs() < 1e-12 && (t[29] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_temperature_never_swaps() {
        let inst = chain_instance(4, -1);
        let trace = pt_run(&inst, &small_cfg(vec![1.0], 50)).unwrap();
        assert!(trace.temp_index.iter().flatten().all(|&k| k == 0));
        assert!(trace.swap_proposed.is_empty());
        assert_eq!(trace.emcs_executed, 50);
        assert!(trace.temp_index.iter().all(|s| s.len() == 50));
    }

    #[test]
    fn equal_energies_always_swap() {
        assert_eq!(swap_probability(0.5, 1.0, -3, -3), 1.0);
        // colder copy already lower: accepted with exp(-(2 - 1) * 2)
        assert_eq!(swap_probability(0.5, 1.0, -3, -1), (-2.0f64).exp());
        assert_eq!(swap_probability(0.5, 1.0, -1, -3), 1.0);
    }

    #[test]
    fn trace_indices_in_range_and_bests_consistent() {
        let t = Arc::new(Topology::chimera(1, 2).unwrap());
        let inst = IsingInstance::random_signed(t, &mut rng_from_seed(8));
        let cfg = small_cfg(geometric_temperatures(6, 0.3, 3.0), 300);
        let trace = pt_run(&inst, &cfg).unwrap();
        assert!(trace.temp_index.iter().flatten().all(|&k| (k as usize) < 6));
        for (e, c) in trace.best_energy.iter().zip(&trace.best_config) {
            assert_eq!(inst.energy(c).unwrap(), *e);
        }
        let gs = brute_force_gs(&inst, 24).unwrap().energy;
        assert_eq!(trace.best().0, gs);
        // every EMCS each chain holds a permutation of the ladder
        for t in 0..300 {
            for chain in 0..2 {
                let mut seen: Vec<u16> = (0..6).map(|k| trace.temp_index[chain * 6 + k][t]).collect();
                seen.sort_unstable();
                assert_eq!(seen, (0..6).collect::<Vec<u16>>());
            }
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let t = Arc::new(Topology::chimera(1, 1).unwrap());
        let inst = IsingInstance::random_signed(t, &mut rng_from_seed(1));
        let cfg = small_cfg(geometric_temperatures(4, 0.5, 2.0), 100);
        let a = pt_run(&inst, &cfg).unwrap();
        let b = pt_run(&inst, &cfg).unwrap();
        assert_eq!(a.temp_index, b.temp_index);
        assert_eq!(a.energies, b.energies);
    }

    #[test]
    fn two_temperature_joint_distribution() {
        // 2-spin ferromagnet at T = 0.7 and 1.5: the (low, high) energy pair
        // must follow the product of the two Boltzmann marginals.
        let inst = chain_instance(2, -1);
        let temps = vec![0.7, 1.5];
        let cfg = PtConfig {
            temperatures: temps.clone(),
            n_chains: 1,
            sweeps_per_emcs: 1,
            max_emcs: 200_000,
            seed: 11,
            ..PtConfig::default()
        };
        let trace = pt_run(&inst, &cfg).unwrap();
        let e = trace.energies.as_ref().unwrap();
        let mut joint = [[0f64; 2]; 2];
        for t in 0..cfg.max_emcs as usize {
            let (lo, hi) = if trace.temp_index[0][t] == 0 { (0, 1) } else { (1, 0) };
            let a = usize::from(e[lo][t] > 0);
            let b = usize::from(e[hi][t] > 0);
            joint[a][b] += 1.0;
        }
        let p_excited = |t: f64| {
            let w = (-2.0 / t).exp();
            w / (1.0 + w)
        };
        let (p0, p1) = (p_excited(temps[0]), p_excited(temps[1]));
        let n = cfg.max_emcs as f64;
        for a in 0..2 {
            for b in 0..2 {
                let pa = if a == 1 { p0 } else { 1.0 - p0 };
                let pb = if b == 1 { p1 } else { 1.0 - p1 };
                let observed = joint[a][b] / n;
                assert!(
                    (observed - pa * pb).abs() < 0.01,
                    "cell ({a},{b}): {observed} vs {}",
                    pa * pb
                );
            }
        }
        // swaps in the ladder are symmetric: the up and down flux through
        // the single pair must balance to within one transition
        let up = trace.temp_index[0].windows(2).filter(|w| w[0] == 0 && w[1] == 1).count();
        let down = trace.temp_index[0].windows(2).filter(|w| w[0] == 1 && w[1] == 0).count();
        assert!(up.abs_diff(down) <= 1);
        assert!(up > 1000);
    }

    #[test]
    fn low_states_of_small_systems() {
        let ferro = chain_instance(5, -1);
        let cfg = small_cfg(geometric_temperatures(4, 0.5, 2.0), 2000);
        let report = collect_low_states(&pt_run(&ferro, &cfg).unwrap());
        let (e0, gs) = report.ground.as_ref().unwrap();
        assert_eq!(*e0, -4);
        assert_eq!(gs.len(), 1);
        assert!(!report.partial);

        let square = Topology::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let frustrated = IsingInstance::new(Arc::new(square), vec![-1, 1, -1, -1]).unwrap();
        // Fixed-order sweeps split the 4-cycle's state space into closed
        // classes, so coverage comes from many independent random starts.
        let many = PtConfig {
            n_chains: 8,
            ..cfg.clone()
        };
        let report = collect_low_states(&pt_run(&frustrated, &many).unwrap());
        assert_eq!(report.ground.as_ref().unwrap().0, -2);
        assert_eq!(report.ground_configs().len(), 4);
        assert!(report.ground_configs().iter().all(|c| c.get(0) == 1));

        let edge = chain_instance(2, 1);
        let report = collect_low_states(&pt_run(&edge, &cfg).unwrap());
        let (e1, es) = report.excited.as_ref().unwrap();
        assert_eq!(*e1, 1);
        assert_eq!(es.len(), 1);
    }

    #[test]
    fn trace_csv_layout() {
        let inst = chain_instance(3, -1);
        let trace = pt_run(&inst, &small_cfg(vec![0.5, 1.0], 3)).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "emcs,copy,temp_index,energy");
        assert_eq!(lines.len(), 1 + 3 * 4);
    }
}
