//! Single-spin Metropolis dynamics and simulated annealing.

use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{CouplingTable, Energy, IsingInstance, SpinConfig};

/// `exp(-dE / T)` for every reachable positive `dE`.
#[derive(Clone, Debug)]
pub(crate) struct AcceptanceTable(Vec<f64>);

impl AcceptanceTable {
    pub fn new(temperature: f64, max_delta: Energy) -> Self {
        let beta = 1.0 / temperature;
        Self((0..=max_delta.max(0)).map(|d| (-(d as f64) * beta).exp()).collect())
    }

    #[inline]
    fn prob(&self, delta: Energy) -> f64 {
        self.0[delta as usize]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub proposals: u64,
    pub accepted: u64,
    pub uphill_proposals: u64,
    pub uphill_accepted: u64,
    pub energy_change: Energy,
}

/// Metropolis kernel prepared for one instance.
#[derive(Clone, Debug)]
pub(crate) struct Metropolis {
    table: CouplingTable,
    active: Vec<usize>,
}

impl Metropolis {
    pub fn new(inst: &IsingInstance) -> Self {
        Self {
            table: CouplingTable::new(inst),
            active: inst.topology().active_vertices().collect(),
        }
    }

    pub fn max_delta(&self) -> Energy {
        self.table.max_delta
    }

    /// One pass over the active vertices in ascending order.
    pub fn sweep<R: Rng + ?Sized>(
        &self,
        spins: &mut [i8],
        accept: &AcceptanceTable,
        rng: &mut R,
    ) -> SweepStats {
        let mut stats = SweepStats::default();
        for &v in &self.active {
            let delta = -2 * Energy::from(spins[v]) * self.table.field(v, spins);
            stats.proposals += 1;
            let take = if delta <= 0 {
                true
            } else {
                stats.uphill_proposals += 1;
                let ok = rng.gen::<f64>() < accept.prob(delta);
                stats.uphill_accepted += u64::from(ok);
                ok
            };
            if take {
                spins[v] = -spins[v];
                stats.accepted += 1;
                stats.energy_change += delta;
            }
        }
        stats
    }
}

/// One full-lattice Metropolis sweep at `temperature`, in fixed vertex order.
pub fn metropolis_sweep<R: Rng + ?Sized>(
    inst: &IsingInstance,
    config: &mut SpinConfig,
    temperature: f64,
    rng: &mut R,
) -> Result<SweepStats> {
    inst.check_config(config)?;
    if !(temperature > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let kernel = Metropolis::new(inst);
    let accept = AcceptanceTable::new(temperature, kernel.max_delta());
    Ok(kernel.sweep(config.spins_mut(), &accept, rng))
}

/// `steps` temperatures geometrically spaced from `hot` down to `cold`,
/// `sweeps` sweeps each.
pub fn geometric_schedule(hot: f64, cold: f64, steps: usize, sweeps: usize) -> Vec<(f64, usize)> {
    match steps {
        0 => Vec::new(),
        1 => vec![(cold, sweeps)],
        _ => {
            let ratio = (cold / hot).powf(1.0 / (steps - 1) as f64);
            (0..steps)
                .map(|i| (hot * ratio.powi(i as i32), sweeps))
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaOutcome {
    pub config: SpinConfig,
    pub energy: Energy,
    /// Spin-update proposals made.
    pub work: u64,
}

/// Simulated annealing from a uniformly random start; returns the lowest
/// energy configuration seen after any sweep.
pub fn sa_solve<R: Rng + ?Sized>(
    inst: &IsingInstance,
    schedule: &[(f64, usize)],
    rng: &mut R,
) -> Result<SaOutcome> {
    let kernel = Metropolis::new(inst);
    let tables = check_schedule(schedule, kernel.max_delta())?;
    Ok(anneal(inst, &kernel, schedule, &tables, rng))
}

pub(crate) fn check_schedule(schedule: &[(f64, usize)], max_delta: Energy) -> Result<Vec<AcceptanceTable>> {
    if schedule.is_empty() {
        return Err(Error::InvalidConfig("annealing schedule is empty".into()));
    }
    schedule
        .iter()
        .map(|&(t, _)| {
            if t > 0.0 {
                Ok(AcceptanceTable::new(t, max_delta))
            } else {
                Err(Error::InvalidConfig(format!("temperature must be positive, got {t}")))
            }
        })
        .collect()
}

pub(crate) fn anneal<R: Rng + ?Sized>(
    inst: &IsingInstance,
    kernel: &Metropolis,
    schedule: &[(f64, usize)],
    tables: &[AcceptanceTable],
    rng: &mut R,
) -> SaOutcome {
    let mut config = SpinConfig::random(inst.topology(), rng);
    let mut energy = inst.energy_of(config.spins());
    let mut best = (energy, config.clone());
    let mut work = 0;
    for (&(_, sweeps), table) in schedule.iter().zip(tables) {
        for _ in 0..sweeps {
            let stats = kernel.sweep(config.spins_mut(), table, rng);
            energy += stats.energy_change;
            work += stats.proposals;
            if energy < best.0 {
                best = (energy, config.clone());
            }
        }
    }
    SaOutcome {
        config: best.1,
        energy: best.0,
        work,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force_gs;
    use crate::rng::rng_from_seed;
    use crate::topology::Topology;
    use std::sync::Arc;

    fn chain(n: usize, j: i64) -> IsingInstance {
        let t = Topology::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap();
        IsingInstance::new(Arc::new(t), vec![j; n - 1]).unwrap()
    }

    #[test]
    fn zero_temperature_limit_rejects_uphill() {
        let t = Arc::new(Topology::chimera(2, 2).unwrap());
        let mut rng = rng_from_seed(1);
        let inst = IsingInstance::random_signed(t.clone(), &mut rng);
        let mut total = SweepStats::default();
        while total.proposals < 100_000 {
            let mut c = SpinConfig::random(&t, &mut rng);
            let s = metropolis_sweep(&inst, &mut c, 1e-6, &mut rng).unwrap();
            total.proposals += s.proposals;
            total.uphill_proposals += s.uphill_proposals;
            total.uphill_accepted += s.uphill_accepted;
        }
        assert!(total.uphill_proposals > 0);
        assert_eq!(total.uphill_accepted, 0);
    }

    #[test]
    fn infinite_temperature_limit_accepts_all() {
        let t = Arc::new(Topology::chimera(2, 2).unwrap());
        let mut rng = rng_from_seed(2);
        let inst = IsingInstance::random_signed(t.clone(), &mut rng);
        let mut c = SpinConfig::random(&t, &mut rng);
        let mut proposals = 0;
        let mut accepted = 0;
        for _ in 0..1000 {
            let s = metropolis_sweep(&inst, &mut c, 1e6, &mut rng).unwrap();
            proposals += s.proposals;
            accepted += s.accepted;
            assert_eq!(inst.energy(&c).unwrap(), inst.energy_of(c.spins()));
        }
        assert!(accepted as f64 / proposals as f64 > 0.999);
    }

    #[test]
    fn two_spin_ferromagnet_boltzmann() {
        // states ++, +-, -+, -- with energies -1, +1, +1, -1 at T = 1
        let inst = chain(2, -1);
        let mut rng = rng_from_seed(3);
        let mut c = SpinConfig::all_up(2);
        let samples = 200_000;
        let mut counts = [0u64; 4];
        for _ in 0..samples {
            metropolis_sweep(&inst, &mut c, 1.0, &mut rng).unwrap();
            let idx = usize::from(c.get(0) < 0) | usize::from(c.get(1) < 0) << 1;
            counts[idx] += 1;
        }
        let z = 2.0 * 1f64.exp() + 2.0 * (-1f64).exp();
        let probs = [1f64.exp() / z, (-1f64).exp() / z, (-1f64).exp() / z, 1f64.exp() / z];
        // successive sweeps are correlated; allow for an integrated time of a few sweeps
        let tau = 4.0;
        for (count, p) in counts.iter().zip(probs) {
            let sigma = (tau * samples as f64 * p * (1.0 - p)).sqrt();
            let expected = samples as f64 * p;
            assert!(
                (*count as f64 - expected).abs() < 3.0 * sigma,
                "count {count} vs {expected} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn bad_temperature() {
        let inst = chain(2, -1);
        let mut c = SpinConfig::all_up(2);
        assert!(metropolis_sweep(&inst, &mut c, 0.0, &mut rng_from_seed(0)).is_err());
        assert!(sa_solve(&inst, &[], &mut rng_from_seed(0)).is_err());
        assert!(sa_solve(&inst, &[(-1.0, 1)], &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn sa_solves_ferromagnetic_chain() {
        let inst = chain(8, -1);
        assert_eq!(brute_force_gs(&inst, 24).unwrap().energy, -7);
        let schedule = geometric_schedule(2.0, 0.1, 100, 1);
        assert_eq!(schedule.len(), 100);
        let successes = (0..100)
            .filter(|&seed| {
                let out = sa_solve(&inst, &schedule, &mut rng_from_seed(seed)).unwrap();
                assert_eq!(inst.energy(&out.config).unwrap(), out.energy);
                out.energy == -7
            })
            .count();
        assert!(successes >= 99, "{successes}/100");
    }

    #[test]
    fn sa_trivial_instances() {
        let edge = chain(2, 1);
        let sched = geometric_schedule(2.0, 0.1, 20, 1);
        for seed in 0..20 {
            assert_eq!(sa_solve(&edge, &sched, &mut rng_from_seed(seed)).unwrap().energy, -1);
        }
        let t = Arc::new(Topology::from_edges(3, [(0, 1), (1, 2)]).unwrap());
        let zero = IsingInstance::zero(t);
        let out = sa_solve(&zero, &sched, &mut rng_from_seed(1)).unwrap();
        assert_eq!(out.energy, 0);
        assert_eq!(out.work, 20 * 3);
    }
}
