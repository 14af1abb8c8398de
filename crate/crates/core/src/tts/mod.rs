//! Deterministic time-to-solution measurements.
//!
//! Time is counted in work units rather than seconds, so a measurement is
//! reproducible bit for bit from its seed. For the block-tree oracle a unit
//! is one DP table entry (see [`blocks`]) or one random spin drawn at a
//! restart; for the annealing oracle it is one Metropolis spin-update
//! proposal.

pub mod blocks;
pub mod hfs;

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Energy, IsingInstance, SpinConfig};
use crate::rng::stream;
use crate::solver::metropolis::{anneal, check_schedule, Metropolis};
use crate::solver::geometric_schedule;

pub use blocks::{tree_conditional_min, BlockShape, BlockSolver, BlockTree};
pub use hfs::{hfs_sweep, Hfs, HfsOutcome, DEFAULT_STALL_TREES};

/// Default stall length for measurements. Short sweeps keep easy and hard
/// instances far apart in TTS.
pub const ORACLE_STALL_TREES: usize = 1;

pub const HFS_ORACLE: &str = "hfs";
pub const SA_ORACLE: &str = "sa-restart";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtsEstimate {
    /// Work spent on the measurement.
    pub work: u64,
    pub seconds: Option<f64>,
    pub n_used: usize,
    /// Work until the stopping rule fired (equals `work` for the block-tree
    /// oracle).
    pub t_step_work: u64,
    /// Time to solution in work units.
    pub value: f64,
    pub oracle_id: String,
    pub best_energy: Energy,
    pub best_config: SpinConfig,
    pub restarts: u64,
    /// `value` is only a lower bound (no success observed).
    pub lower_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaRestartConfig {
    pub t_hot: f64,
    pub t_cold: f64,
    pub steps: usize,
    pub sweeps_per_step: usize,
    pub max_restarts: u64,
}

impl Default for SaRestartConfig {
    fn default() -> Self {
        Self {
            t_hot: 3.0,
            t_cold: 0.1,
            steps: 100,
            sweeps_per_step: 10,
            max_restarts: 1000,
        }
    }
}

impl SaRestartConfig {
    pub fn schedule(&self) -> Vec<(f64, usize)> {
        geometric_schedule(self.t_hot, self.t_cold, self.steps, self.sweeps_per_step)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_init: usize,
    pub n_min: usize,
    /// Step cutoff: a measurement whose stopping work exceeds it halves `n`.
    pub t_max: u64,
    /// Hard cap on the work of one measurement.
    pub work_cap: u64,
    pub block_shape: BlockShape,
    pub stall_trees: usize,
    /// Restarts evaluated per parallel batch. Results do not depend on it.
    pub batch: usize,
    pub wallclock: bool,
    pub sa: SaRestartConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_init: 512,
            n_min: 16,
            t_max: 500_000_000,
            work_cap: 1 << 40,
            block_shape: BlockShape::default(),
            stall_trees: ORACLE_STALL_TREES,
            batch: 64,
            wallclock: false,
            sa: SaRestartConfig::default(),
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_init < self.n_min {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= n_min <= n_init, got n_min={} n_init={}",
                self.n_min, self.n_init
            )));
        }
        if self.stall_trees == 0 || self.batch == 0 {
            return Err(Error::InvalidConfig("stall_trees and batch must be positive".into()));
        }
        Ok(())
    }
}

/// Restarts the block-tree search from random configurations until the
/// lowest energy seen has occurred `n + 1` times (a new lower energy resets
/// the count to one). The value is the total work divided by `n + 1`.
///
/// Restart `i` uses its own stream derived from one draw of `rng`, and the
/// stopping rule is applied in restart order, so the estimate does not
/// depend on how restarts are scheduled across threads.
pub fn estimate_tts<R: Rng + ?Sized>(
    inst: &IsingInstance,
    cfg: &OracleConfig,
    n: usize,
    rng: &mut R,
) -> Result<TtsEstimate> {
    cfg.validate()?;
    let start = Instant::now();
    let base: u64 = rng.gen();
    let hfs = Hfs::new(inst, cfg.block_shape, cfg.stall_trees);
    let target = n as u64 + 1;
    let mut work = 0u64;
    let mut best: Option<(Energy, SpinConfig)> = None;
    let mut hits = 0u64;
    let mut index = 0u64;
    let finish = |work: u64, hits: u64, restarts: u64, best: (Energy, SpinConfig)| TtsEstimate {
        work,
        seconds: cfg.wallclock.then(|| start.elapsed().as_secs_f64()),
        n_used: n,
        t_step_work: work,
        value: work as f64 / hits.max(1) as f64,
        oracle_id: HFS_ORACLE.into(),
        best_energy: best.0,
        best_config: best.1,
        restarts,
        lower_bound: false,
    };
    loop {
        let batch: Vec<(SpinConfig, HfsOutcome)> = (index..index + cfg.batch as u64)
            .into_par_iter()
            .map_init(
                || hfs.scratch(),
                |scratch, i| hfs.restart(inst, &mut stream(base, i), scratch),
            )
            .collect();
        for (config, out) in batch {
            index += 1;
            work += out.work;
            match &best {
                Some((e, _)) if out.energy > *e => {}
                Some((e, _)) if out.energy == *e => hits += 1,
                _ => {
                    best = Some((out.energy, config));
                    hits = 1;
                }
            }
            if hits == target {
                return Ok(finish(work, hits, index, best.expect("set above")));
            }
            if work > cfg.work_cap {
                let partial = finish(work, hits, index, best.expect("set above"));
                return Err(Error::BudgetExceeded {
                    cap: cfg.work_cap,
                    work,
                    partial: Some(Box::new(partial)),
                });
            }
        }
    }
}

/// `n -> max(n / 2, n_min)` when the step work exceeded `t_max`.
pub fn adaptive_n(n: usize, n_min: usize, t_max: u64, t_step_work: u64) -> usize {
    if t_step_work > t_max {
        (n / 2).max(n_min)
    } else {
        n
    }
}

/// The agreement parameter carried across a sequence of measurements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptiveN {
    pub n: usize,
    pub n_min: usize,
    pub t_max: u64,
}

impl AdaptiveN {
    pub fn new(cfg: &OracleConfig) -> Self {
        Self {
            n: cfg.n_init,
            n_min: cfg.n_min,
            t_max: cfg.t_max,
        }
    }

    pub fn update(&mut self, t_step_work: u64) -> usize {
        self.n = adaptive_n(self.n, self.n_min, self.t_max, t_step_work);
        self.n
    }

    /// Measures with the current `n`, then updates it from the step work.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        inst: &IsingInstance,
        cfg: &OracleConfig,
        rng: &mut R,
    ) -> Result<TtsEstimate> {
        let est = estimate_tts(inst, cfg, self.n, rng)?;
        self.update(est.t_step_work);
        Ok(est)
    }
}

/// `per_anneal / p` with `p = successes / restarts`; with no success the
/// value is `restarts * per_anneal`, flagged as a lower bound.
pub fn restart_value(per_anneal: u64, successes: u64, restarts: u64) -> (f64, bool) {
    if successes == 0 {
        (restarts as f64 * per_anneal as f64, true)
    } else {
        (per_anneal as f64 * restarts as f64 / successes as f64, false)
    }
}

/// Annealing time to solution: `max_restarts` independent anneals, each a
/// success when it reaches `reference_energy`.
pub fn restart_tts<R: Rng + ?Sized>(
    inst: &IsingInstance,
    sa: &SaRestartConfig,
    reference_energy: Energy,
    rng: &mut R,
) -> Result<TtsEstimate> {
    if sa.max_restarts == 0 {
        return Err(Error::InvalidConfig("max_restarts must be positive".into()));
    }
    let start = Instant::now();
    let schedule = sa.schedule();
    let kernel = Metropolis::new(inst);
    let tables = check_schedule(&schedule, kernel.max_delta())?;
    let base: u64 = rng.gen();
    let runs: Vec<_> = (0..sa.max_restarts)
        .into_par_iter()
        .map(|i| anneal(inst, &kernel, &schedule, &tables, &mut stream(base, i)))
        .collect();
    let successes = runs.iter().filter(|r| r.energy <= reference_energy).count() as u64;
    let per_anneal = runs[0].work;
    let work = runs.iter().map(|r| r.work).sum();
    let best = runs
        .into_iter()
        .min_by_key(|r| r.energy)
        .expect("at least one restart");
    let (value, lower_bound) = restart_value(per_anneal, successes, sa.max_restarts);
    Ok(TtsEstimate {
        work,
        seconds: Some(start.elapsed().as_secs_f64()),
        n_used: successes as usize,
        t_step_work: work,
        value,
        oracle_id: SA_ORACLE.into(),
        best_energy: best.energy,
        best_config: best.config,
        restarts: sa.max_restarts,
        lower_bound,
    })
}
