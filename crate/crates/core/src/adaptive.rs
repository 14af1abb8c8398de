//! Adaptive instance engineering: a Metropolis-like walk over instances
//! whose objective is the measured time to solution.
//!
//! Two move sets are provided. [`rao_run`] flips the sign of one random edge
//! of a `+-1` instance. [`lao_run`] swaps one loop of a planted-solution
//! instance for a freshly sampled loop, so the planted configuration stays a
//! ground state with known energy at every step.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Energy, IsingInstance, Loop, SpinConfig};
use crate::rng::rng_from_seed;
use crate::topology::Topology;
use crate::tts::{estimate_tts, AdaptiveN, OracleConfig, TtsEstimate};

/// Literal `beta = 6.5 n` rule, tied to TTS measured in seconds.
pub const PAPER_BETA_COEFF: f64 = 6.5;

/// Coefficient for TTS in work units, from [`calibrate_beta_coeff`] on
/// random chimera(3,3) instances with the default oracle at `n = 128`: a
/// typical adverse move is accepted with probability about 1/4.
pub const DEFAULT_BETA_COEFF: f64 = 3.3e-8;

pub const LOOP_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

impl Direction {
    /// `a` is strictly better than `b` in this direction.
    pub fn improves(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximize" | "max" => Ok(Direction::Maximize),
            "minimize" | "min" => Ok(Direction::Minimize),
            other => Err(Error::InvalidConfig(format!("unknown direction `{other}`"))),
        }
    }
}

/// Always accepts a move in the preferred direction, otherwise accepts with
/// probability `exp(-beta |tts_new - tts_old|)`.
pub fn accept_move<R: Rng + ?Sized>(
    tts_old: f64,
    tts_new: f64,
    beta: f64,
    direction: Direction,
    rng: &mut R,
) -> bool {
    if direction.improves(tts_new, tts_old) {
        return true;
    }
    let p = (-beta * (tts_new - tts_old).abs()).exp();
    p >= 1.0 || rng.gen::<f64>() < p
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaoConfig {
    pub nstep: usize,
    pub beta_coeff: f64,
    pub direction: Direction,
    pub oracle: OracleConfig,
    pub seed: u64,
}

impl Default for RaoConfig {
    fn default() -> Self {
        Self {
            nstep: 500,
            beta_coeff: DEFAULT_BETA_COEFF,
            direction: Direction::Maximize,
            oracle: OracleConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaoConfig {
    pub m_loops: usize,
    /// `(loop length, probability)`.
    pub length_dist: Vec<(usize, f64)>,
    /// Inclusive range of loop weights.
    pub weight_range: (u32, u32),
    pub frustrated_prob: f64,
    pub nstep: usize,
    pub beta_coeff: f64,
    pub direction: Direction,
    pub oracle: OracleConfig,
    pub seed: u64,
}

impl Default for LaoConfig {
    fn default() -> Self {
        Self {
            m_loops: 350,
            length_dist: vec![(4, 0.1), (6, 0.9)],
            weight_range: (1, 5),
            frustrated_prob: 1.0,
            nstep: 2000,
            beta_coeff: DEFAULT_BETA_COEFF,
            direction: Direction::Maximize,
            oracle: OracleConfig::default(),
            seed: 0,
        }
    }
}

impl LaoConfig {
    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta_coeff)?;
        let total: f64 = self.length_dist.iter().map(|&(_, p)| p).sum();
        if self.length_dist.is_empty()
            || (total - 1.0).abs() > 1e-9
            || self.length_dist.iter().any(|&(l, p)| l < 3 || !(p >= 0.0))
        {
            return Err(Error::InvalidConfig(
                "length distribution must be non-negative, over lengths >= 3, and sum to 1".into(),
            ));
        }
        let (lo, hi) = self.weight_range;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidConfig(format!("bad weight range [{lo}, {hi}]")));
        }
        if !(0.0..=1.0).contains(&self.frustrated_prob) {
            return Err(Error::InvalidConfig("frustrated_prob must lie in [0, 1]".into()));
        }
        self.oracle.validate()
    }
}

fn check_beta(beta_coeff: f64) -> Result<()> {
    if beta_coeff > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("beta_coeff must be positive, got {beta_coeff}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    FlipEdge { edge: usize },
    ReplaceLoop { index: usize, length: usize, weight: u32, frustrated: bool },
    /// No valid loop was found; the step is counted as rejected.
    NoLoop { length: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    #[serde(rename = "move")]
    pub mv: Move,
    pub tts_before: f64,
    pub tts_after: Option<f64>,
    pub accepted: bool,
    pub n: usize,
    pub beta: f64,
    /// Planted ground-state energy of the incumbent after this step.
    pub gs_energy: Option<Energy>,
    /// The planted configuration was re-evaluated and attains `gs_energy`.
    pub gs_verified: Option<bool>,
    /// Oracle's lowest energy for the proposed instance.
    pub best_energy: Option<Energy>,
    /// Best TTS among accepted states up to this step.
    pub best_tts: f64,
    pub work: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveTrajectory {
    pub direction: Direction,
    pub initial: IsingInstance,
    pub initial_tts: TtsEstimate,
    pub steps: Vec<StepRecord>,
    pub final_instance: IsingInstance,
    pub final_tts: f64,
    /// Highest TTS seen (lowest when minimizing) and its instance.
    pub best_instance: IsingInstance,
    pub best_tts: f64,
    /// Set when the run stopped early.
    pub truncated: Option<String>,
}

impl AdaptiveTrajectory {
    pub fn accepted(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }

    /// Longest run of consecutive steps without a change of the best TTS.
    pub fn longest_plateau(&self) -> usize {
        let mut longest = 0;
        let mut run = 0;
        let mut last = self.initial_tts.value;
        for s in &self.steps {
            if s.best_tts == last {
                run += 1;
            } else {
                run = 0;
                last = s.best_tts;
            }
            longest = longest.max(run);
        }
        longest
    }
}

/// State shared by both move sets.
struct Walk {
    direction: Direction,
    beta_coeff: f64,
    ctl: AdaptiveN,
    tts: f64,
    best_tts: f64,
    best: IsingInstance,
}

enum Outcome {
    Measured(TtsEstimate, bool),
    Stop(String),
}

impl Walk {
    fn propose<R: Rng + ?Sized>(
        &mut self,
        inst: &IsingInstance,
        oracle: &OracleConfig,
        rng: &mut R,
    ) -> (Outcome, usize, f64) {
        let n = self.ctl.n;
        let beta = self.beta_coeff * n as f64;
        let est = match estimate_tts(inst, oracle, n, rng) {
            Ok(est) => est,
            Err(e) => return (Outcome::Stop(e.to_string()), n, beta),
        };
        self.ctl.update(est.t_step_work);
        let accepted = accept_move(self.tts, est.value, beta, self.direction, rng);
        if accepted {
            self.tts = est.value;
            if self.direction.improves(est.value, self.best_tts) {
                self.best_tts = est.value;
                self.best = inst.clone();
            }
        }
        (Outcome::Measured(est, accepted), n, beta)
    }
}

fn start_walk<R: Rng + ?Sized>(
    inst: &IsingInstance,
    oracle: &OracleConfig,
    direction: Direction,
    beta_coeff: f64,
    rng: &mut R,
) -> Result<(Walk, TtsEstimate)> {
    let mut ctl = AdaptiveN::new(oracle);
    let est = estimate_tts(inst, oracle, ctl.n, rng)?;
    ctl.update(est.t_step_work);
    let walk = Walk {
        direction,
        beta_coeff,
        ctl,
        tts: est.value,
        best_tts: est.value,
        best: inst.clone(),
    };
    Ok((walk, est))
}

/// Random edge-sign walk from a `+-1` seed instance.
pub fn rao_run(seed_inst: &IsingInstance, cfg: &RaoConfig) -> Result<AdaptiveTrajectory> {
    check_beta(cfg.beta_coeff)?;
    cfg.oracle.validate()?;
    if !seed_inst.is_signed() {
        return Err(Error::InvalidConfig("edge-sign walk needs a +-1 instance".into()));
    }
    let m = seed_inst.topology().n_edges();
    if m == 0 {
        return Err(Error::InvalidConfig("topology has no edges".into()));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut inst = seed_inst.clone();
    let (mut walk, initial_tts) = start_walk(&inst, &cfg.oracle, cfg.direction, cfg.beta_coeff, &mut rng)?;
    let mut steps = Vec::with_capacity(cfg.nstep);
    let mut truncated = None;
    for step in 0..cfg.nstep {
        let edge = rng.gen_range(0..m);
        inst.flip_edge_in_place(edge)?;
        let before = walk.tts;
        let (outcome, n, beta) = walk.propose(&inst, &cfg.oracle, &mut rng);
        let (est, accepted) = match outcome {
            Outcome::Measured(est, accepted) => (est, accepted),
            Outcome::Stop(reason) => {
                inst.flip_edge_in_place(edge)?;
                truncated = Some(format!("step {step}: {reason}"));
                break;
            }
        };
        if !accepted {
            inst.flip_edge_in_place(edge)?;
        }
        steps.push(StepRecord {
            step,
            mv: Move::FlipEdge { edge },
            tts_before: before,
            tts_after: Some(est.value),
            accepted,
            n,
            beta,
            gs_energy: None,
            gs_verified: None,
            best_energy: Some(est.best_energy),
            best_tts: walk.best_tts,
            work: est.work,
        });
    }
    Ok(AdaptiveTrajectory {
        direction: cfg.direction,
        initial: seed_inst.clone(),
        initial_tts,
        steps,
        final_tts: walk.tts,
        final_instance: inst,
        best_instance: walk.best,
        best_tts: walk.best_tts,
        truncated,
    })
}

/// Samples one loop respecting the planted `solution`: a length from the
/// configured distribution, then up to [`LOOP_ATTEMPTS`] random starts for a
/// simple cycle of that length.
pub fn random_loop<R: Rng + ?Sized>(
    topology: &Topology,
    cfg: &LaoConfig,
    rng: &mut R,
) -> std::result::Result<Loop, usize> {
    let lengths = WeightedIndex::new(cfg.length_dist.iter().map(|&(_, p)| p))
        .expect("validated length distribution");
    let length = cfg.length_dist[lengths.sample(rng)].0;
    let active: Vec<usize> = topology.active_vertices().collect();
    if active.is_empty() {
        return Err(length);
    }
    for _ in 0..LOOP_ATTEMPTS {
        let start = active[rng.gen_range(0..active.len())];
        if let Some(cycle) = topology.find_cycle(length, start, rng, 1) {
            let weight = rng.gen_range(cfg.weight_range.0..=cfg.weight_range.1);
            let violated = (rng.gen::<f64>() < cfg.frustrated_prob).then(|| rng.gen_range(0..length));
            return Ok(Loop {
                cycle,
                weight,
                violated,
            });
        }
    }
    Err(length)
}

/// Random planted instance with `cfg.m_loops` loops.
pub fn planted_instance<R: Rng + ?Sized>(
    topology: std::sync::Arc<Topology>,
    cfg: &LaoConfig,
    rng: &mut R,
) -> Result<IsingInstance> {
    cfg.validate()?;
    let solution = SpinConfig::random(&topology, rng);
    let loops = (0..cfg.m_loops)
        .map(|_| {
            random_loop(&topology, cfg, rng)
                .map_err(|len| Error::InvalidLoop(format!("no cycle of length {len} found")))
        })
        .collect::<Result<Vec<_>>>()?;
    IsingInstance::assemble_planted(topology, solution, loops)
}

/// Loop-replacement walk over planted instances on `topology`.
pub fn lao_run(topology: std::sync::Arc<Topology>, cfg: &LaoConfig) -> Result<AdaptiveTrajectory> {
    let mut rng = rng_from_seed(cfg.seed);
    let inst = planted_instance(topology, cfg, &mut rng)?;
    lao_run_from(&inst, cfg, &mut rng)
}

/// Loop-replacement walk from an existing planted instance.
pub fn lao_run_from<R: Rng + ?Sized>(
    seed_inst: &IsingInstance,
    cfg: &LaoConfig,
    rng: &mut R,
) -> Result<AdaptiveTrajectory> {
    cfg.validate()?;
    let planted = seed_inst
        .planted()
        .ok_or_else(|| Error::InvalidConfig("loop walk needs a planted instance".into()))?;
    if planted.loops.is_empty() {
        return Err(Error::InvalidConfig("planted instance has no loops".into()));
    }
    let topology = seed_inst.topology_arc().clone();
    let mut inst = seed_inst.clone();
    let (mut walk, initial_tts) = start_walk(&inst, &cfg.oracle, cfg.direction, cfg.beta_coeff, rng)?;
    let mut steps = Vec::with_capacity(cfg.nstep);
    let mut truncated = None;
    for step in 0..cfg.nstep {
        let m = inst.planted().expect("planted").loops.len();
        let index = rng.gen_range(0..m);
        let before = walk.tts;
        let new_loop = match random_loop(&topology, cfg, rng) {
            Ok(l) => l,
            Err(length) => {
                steps.push(StepRecord {
                    step,
                    mv: Move::NoLoop { length },
                    tts_before: before,
                    tts_after: None,
                    accepted: false,
                    n: walk.ctl.n,
                    beta: cfg.beta_coeff * walk.ctl.n as f64,
                    gs_energy: inst.planted().map(|p| p.gs_energy),
                    gs_verified: Some(planted_holds(&inst)),
                    best_energy: None,
                    best_tts: walk.best_tts,
                    work: 0,
                });
                continue;
            }
        };
        let mv = Move::ReplaceLoop {
            index,
            length: new_loop.len(),
            weight: new_loop.weight,
            frustrated: new_loop.is_frustrated(),
        };
        let old_loop = inst.replace_loop(index, new_loop)?;
        let (outcome, n, beta) = walk.propose(&inst, &cfg.oracle, rng);
        let (est, accepted) = match outcome {
            Outcome::Measured(est, accepted) => (est, accepted),
            Outcome::Stop(reason) => {
                inst.replace_loop(index, old_loop)?;
                truncated = Some(format!("step {step}: {reason}"));
                break;
            }
        };
        if !accepted {
            inst.replace_loop(index, old_loop)?;
        }
        let gs = inst.planted().expect("planted").gs_energy;
        steps.push(StepRecord {
            step,
            mv,
            tts_before: before,
            tts_after: Some(est.value),
            accepted,
            n,
            beta,
            gs_energy: Some(gs),
            gs_verified: Some(planted_holds(&inst)),
            best_energy: Some(est.best_energy),
            best_tts: walk.best_tts,
            work: est.work,
        });
    }
    Ok(AdaptiveTrajectory {
        direction: cfg.direction,
        initial: seed_inst.clone(),
        initial_tts,
        steps,
        final_tts: walk.tts,
        final_instance: inst,
        best_instance: walk.best,
        best_tts: walk.best_tts,
        truncated,
    })
}

fn planted_holds(inst: &IsingInstance) -> bool {
    inst.planted()
        .is_some_and(|p| inst.energy_of(p.solution.spins()) == p.gs_energy)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaCalibration {
    pub beta_coeff: f64,
    pub n: usize,
    /// Median `|tts_new - tts_old|` over moves against `direction`.
    pub median_delta: f64,
    pub samples: usize,
    /// Median acceptance probability of those moves under `beta_coeff`.
    pub median_acceptance: f64,
}

/// Picks `beta_coeff` so that a typical move against `direction` (a TTS
/// decrease when maximizing) is accepted with probability `target`.
/// Samples `moves` random edge flips on each of `instances` random `+-1`
/// instances on `topology`, measuring with `oracle.n_init`.
pub fn calibrate_beta_coeff(
    topology: std::sync::Arc<Topology>,
    oracle: &OracleConfig,
    direction: Direction,
    instances: usize,
    moves: usize,
    target: f64,
    seed: u64,
) -> Result<BetaCalibration> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidConfig("target acceptance must lie in (0, 1)".into()));
    }
    let n = oracle.n_init;
    let mut rng = rng_from_seed(seed);
    let mut deltas = Vec::new();
    for _ in 0..instances {
        let inst = IsingInstance::random_signed(topology.clone(), &mut rng);
        let base = estimate_tts(&inst, oracle, n, &mut rng)?.value;
        for _ in 0..moves {
            let edge = rng.gen_range(0..topology.n_edges());
            let flipped = inst.flip_edge(edge)?;
            let value = estimate_tts(&flipped, oracle, n, &mut rng)?.value;
            if value != base && !direction.improves(value, base) {
                deltas.push((base - value).abs());
            }
        }
    }
    if deltas.is_empty() {
        return Err(Error::Analysis(format!("no move against {direction:?} observed")));
    }
    deltas.sort_by(f64::total_cmp);
    let median_delta = deltas[deltas.len() / 2];
    let beta_coeff = -target.ln() / (n as f64 * median_delta);
    let mut probs: Vec<f64> = deltas
        .iter()
        .map(|d| (-beta_coeff * n as f64 * d).exp())
        .collect();
    probs.sort_by(f64::total_cmp);
    Ok(BetaCalibration {
        beta_coeff,
        n,
        median_delta,
        samples: deltas.len(),
        median_acceptance: probs[probs.len() / 2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force_gs;
    use std::collections::BTreeSet;
    use std::sync::Arc;

    fn fast_oracle() -> OracleConfig {
        OracleConfig {
            n_init: 16,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn acceptance_rule() {
        let mut rng = rng_from_seed(1);
        assert!(accept_move(1.0, 2.0, 1e9, Direction::Maximize, &mut rng));
        assert!(accept_move(2.0, 1.0, 1e9, Direction::Minimize, &mut rng));
        assert!(accept_move(5.0, 5.0, 1e9, Direction::Maximize, &mut rng));
        assert!(!accept_move(2.0, 1.0, 1e9, Direction::Maximize, &mut rng));
        let trials = 10_000;
        let accepted = (0..trials)
            .filter(|_| accept_move(3.0, 3.0 - 2f64.ln(), 1.0, Direction::Maximize, &mut rng))
            .count() as f64;
        let sigma = (trials as f64 * 0.25).sqrt();
        assert!((accepted - 5000.0).abs() < 3.0 * sigma);
        let accepted = (0..trials)
            .filter(|_| accept_move(3.0, 3.0 + 2f64.ln(), 1.0, Direction::Minimize, &mut rng))
            .count() as f64;
        assert!((accepted - 5000.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn zero_steps_keeps_seed() {
        let t = Arc::new(Topology::chimera(2, 2).unwrap());
        let seed = IsingInstance::random_signed(t, &mut rng_from_seed(3));
        let traj = rao_run(
            &seed,
            &RaoConfig {
                nstep: 0,
                oracle: fast_oracle(),
                ..RaoConfig::default()
            },
        )
        .unwrap();
        assert!(traj.steps.is_empty());
        assert_eq!(traj.final_instance, seed);
        assert_eq!(traj.best_instance, seed);
    }

    #[test]
    fn greedy_walk_never_lowers_tts_and_reverts_exactly() {
        let t = Arc::new(Topology::chimera(2, 2).unwrap());
        let seed = IsingInstance::random_signed(t, &mut rng_from_seed(4));
        let cfg = RaoConfig {
            nstep: 60,
            beta_coeff: 1e6,
            oracle: fast_oracle(),
            seed: 7,
            ..RaoConfig::default()
        };
        let traj = rao_run(&seed, &cfg).unwrap();
        assert!(traj.final_instance.is_signed());
        let mut incumbent = traj.initial_tts.value;
        let mut inst = seed.clone();
        for s in &traj.steps {
            let Move::FlipEdge { edge } = s.mv else { panic!() };
            assert_eq!(s.tts_before, incumbent);
            if s.accepted {
                assert!(s.tts_after.unwrap() >= incumbent);
                incumbent = s.tts_after.unwrap();
                inst.flip_edge_in_place(edge).unwrap();
            }
        }
        // replaying only the accepted flips reproduces the final couplings
        assert_eq!(inst.couplings(), traj.final_instance.couplings());
        assert_eq!(traj.final_tts, incumbent);
        assert_eq!(traj.best_tts, incumbent);
    }

    #[test]
    fn best_series_is_monotone_and_replay_is_identical() {
        let t = Arc::new(Topology::chimera(2, 2).unwrap());
        let seed = IsingInstance::random_signed(t, &mut rng_from_seed(5));
        let cfg = RaoConfig {
            nstep: 40,
            beta_coeff: 1e-6,
            oracle: fast_oracle(),
            seed: 11,
            ..RaoConfig::default()
        };
        let a = rao_run(&seed, &cfg).unwrap();
        assert!(a.steps.windows(2).all(|w| w[1].best_tts >= w[0].best_tts));
        assert!(a.steps.iter().all(|s| s.best_tts >= a.initial_tts.value));
        let b = rao_run(&seed, &cfg).unwrap();
        assert_eq!(a, b);

        let min = rao_run(
            &seed,
            &RaoConfig {
                direction: Direction::Minimize,
                ..cfg
            },
        )
        .unwrap();
        assert!(min.steps.windows(2).all(|w| w[1].best_tts <= w[0].best_tts));
    }

    #[test]
    fn rao_needs_signed_instance() {
        let t = Arc::new(Topology::chimera(1, 1).unwrap());
        let inst = IsingInstance::zero(t);
        assert!(rao_run(&inst, &RaoConfig::default()).is_err());
    }

    #[test]
    fn single_loop_instance() {
        let t = Arc::new(Topology::chimera(2, 2).unwrap());
        let cfg = LaoConfig {
            m_loops: 1,
            nstep: 0,
            oracle: fast_oracle(),
            seed: 3,
            ..LaoConfig::default()
        };
        let traj = lao_run(t.clone(), &cfg).unwrap();
        let p = traj.final_instance.planted().unwrap();
        assert_eq!(p.loops.len(), 1);
        assert_eq!(p.gs_energy, p.loops[0].min_energy());
        let nonzero = traj.final_instance.couplings().iter().filter(|&&j| j != 0).count();
        assert_eq!(nonzero, p.loops[0].len());
        assert_eq!(traj.initial_tts.best_energy, p.gs_energy);
    }

    #[test]
    fn loop_walk_keeps_planted_ground_state() {
        // 24 active spins: chimera(2,2) with one cell masked
        let t = Topology::chimera(2, 2).unwrap();
        let masked = Arc::new(t.apply_mask(&(24..32).collect::<BTreeSet<_>>()).unwrap());
        let cfg = LaoConfig {
            m_loops: 12,
            nstep: 100,
            oracle: fast_oracle(),
            seed: 21,
            beta_coeff: 1e-6,
            ..LaoConfig::default()
        };
        let traj = lao_run(masked, &cfg).unwrap();
        assert!(traj.steps.iter().all(|s| s.gs_energy.is_some()));
        let p = traj.final_instance.planted().unwrap();
        assert_eq!(traj.final_instance.energy(&p.solution).unwrap(), p.gs_energy);
        assert_eq!(brute_force_gs(&traj.final_instance, 24).unwrap().energy, p.gs_energy);
        assert_eq!(traj.steps.last().unwrap().gs_energy, Some(p.gs_energy));
        // the planted solution stays optimal at every accepted step
        for s in traj.steps.iter().filter(|s| s.accepted) {
            assert!(s.best_energy.unwrap() >= s.gs_energy.unwrap());
        }
    }

    #[test]
    fn config_validation() {
        assert!(LaoConfig::default().validate().is_ok());
        let bad = [
            LaoConfig { length_dist: vec![(4, 0.5)], ..LaoConfig::default() },
            LaoConfig { length_dist: vec![(2, 1.0)], ..LaoConfig::default() },
            LaoConfig { weight_range: (0, 3), ..LaoConfig::default() },
            LaoConfig { weight_range: (4, 3), ..LaoConfig::default() },
            LaoConfig { beta_coeff: 0.0, ..LaoConfig::default() },
            LaoConfig { frustrated_prob: 1.5, ..LaoConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert_eq!("min".parse::<Direction>().unwrap(), Direction::Minimize);
        assert!("sideways".parse::<Direction>().is_err());
    }
}
