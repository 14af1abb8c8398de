use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use spinforge::adaptive::{self, planted_instance, AdaptiveTrajectory, LaoConfig, RaoConfig, StepRecord};
use spinforge::analysis::{overlap_ratio, power_fit, spearman, Aggregator, HardnessBands, OverlapReport, PowerFit};
use spinforge::exact::{brute_force_gs, exact_ground_state, ground_energy, DEFAULT_BRUTE_FORCE_LIMIT, DEFAULT_WIDTH_LIMIT};
use spinforge::io::{read_instance, read_points, write_instance};
use spinforge::rng::{derive_seed, rng_from_seed};
use spinforge::solver::{collect_low_states, geometric_temperatures, mixing_time, pt_run, MixingReport, PtConfig};
use spinforge::topology::{parse_mask, Topology};
use spinforge::tts::{estimate_tts, restart_tts, BlockShape, OracleConfig, SaRestartConfig, TtsEstimate};
use spinforge::{Direction, Energy, Error, IsingInstance};

use crate::{Ctx, InvalidInput, Status, TopologyArgs};

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidInput(msg.into()).into()
}

fn build_topology(ctx: &Ctx, args: &TopologyArgs) -> Result<Arc<Topology>> {
    let base = match (&args.chimera, &args.graph) {
        (Some(shape), None) => {
            let (r, c) = shape
                .split_once('x')
                .and_then(|(r, c)| Some((r.parse().ok()?, c.parse().ok()?)))
                .ok_or_else(|| invalid(format!("bad --chimera `{shape}`, expected RxC")))?;
            Topology::chimera(r, c)?
        }
        (None, Some(path)) => Topology::from_text(&ctx.run.read(path)?)?,
        _ => return Err(invalid("need --chimera RxC or --graph FILE")),
    };
    let topology = match &args.mask {
        Some(path) => base.apply_mask(&parse_mask(&ctx.run.read(path)?)?)?,
        None => base,
    };
    Ok(Arc::new(topology))
}

fn load(ctx: &Ctx, path: &Path) -> Result<IsingInstance> {
    read_instance(&ctx.run.read(path)?).with_context(|| format!("reading {}", path.display()))
}

fn save(ctx: &Ctx, path: &Path, inst: &IsingInstance) -> Result<()> {
    ctx.run.write(path, write_instance(inst).as_bytes())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LoopArgs {
    /// Probability of a 4-loop; other loops have length 6.
    #[arg(long, default_value_t = 0.1)]
    pub len4_prob: f64,
    #[arg(long, default_value_t = 1)]
    pub weight_min: u32,
    #[arg(long, default_value_t = 5)]
    pub weight_max: u32,
    /// Probability that a loop is frustrated.
    #[arg(long, default_value_t = 1.0)]
    pub frustrated_prob: f64,
}

impl LoopArgs {
    fn apply(&self, cfg: &mut LaoConfig) -> Result<()> {
        if !(0.0..=1.0).contains(&self.len4_prob) {
            return Err(invalid("--len4-prob must lie in [0, 1]"));
        }
        cfg.length_dist = [(4, self.len4_prob), (6, 1.0 - self.len4_prob)]
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .collect();
        cfg.weight_range = (self.weight_min, self.weight_max);
        cfg.frustrated_prob = self.frustrated_prob;
        cfg.validate().map_err(|e| invalid(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Hfs,
    SaRestart,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OracleArgs {
    #[arg(long, value_enum, default_value_t = OracleKind::Hfs)]
    pub oracle: OracleKind,
    /// Agreement count of the stopping rule.
    #[arg(long, default_value_t = OracleConfig::default().n_init)]
    pub n_init: usize,
    #[arg(long, default_value_t = OracleConfig::default().n_min)]
    pub n_min: usize,
    /// Step work above which the agreement count is halved.
    #[arg(long, default_value_t = OracleConfig::default().t_max)]
    pub t_max_work: u64,
    /// Hard cap on the work of one measurement.
    #[arg(long, default_value_t = OracleConfig::default().work_cap)]
    pub work_cap: u64,
    #[arg(long, default_value_t = OracleConfig::default().stall_trees)]
    pub stall_trees: usize,
    /// Blocks of the tree search: cell, half-cell or vertex.
    #[arg(long, default_value = "vertex")]
    pub block_shape: BlockShape,
    /// Also report wallclock seconds.
    #[arg(long)]
    pub wallclock: bool,
    #[arg(long, default_value_t = SaRestartConfig::default().t_hot)]
    pub sa_t_hot: f64,
    #[arg(long, default_value_t = SaRestartConfig::default().t_cold)]
    pub sa_t_cold: f64,
    #[arg(long, default_value_t = SaRestartConfig::default().steps)]
    pub sa_steps: usize,
    #[arg(long, default_value_t = SaRestartConfig::default().sweeps_per_step)]
    pub sa_sweeps_per_step: usize,
    #[arg(long, default_value_t = SaRestartConfig::default().max_restarts)]
    pub sa_restarts: u64,
}

impl OracleArgs {
    fn config(&self) -> Result<OracleConfig> {
        let cfg = OracleConfig {
            n_init: self.n_init,
            n_min: self.n_min.min(self.n_init),
            t_max: self.t_max_work,
            work_cap: self.work_cap,
            stall_trees: self.stall_trees,
            block_shape: self.block_shape,
            wallclock: self.wallclock,
            sa: SaRestartConfig {
                t_hot: self.sa_t_hot,
                t_cold: self.sa_t_cold,
                steps: self.sa_steps,
                sweeps_per_step: self.sa_sweeps_per_step,
                max_restarts: self.sa_restarts,
            },
            ..OracleConfig::default()
        };
        cfg.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PtArgs {
    /// Number of temperatures (geometric grid).
    #[arg(long, default_value_t = 30)]
    pub temps: usize,
    #[arg(long, default_value_t = 0.2)]
    pub t_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    /// Independent chains per temperature set.
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 10)]
    pub sweeps_per_emcs: usize,
    #[arg(long, default_value_t = 10_000)]
    pub emcs: u64,
}

impl PtArgs {
    fn config(&self, seed: u64, record_energies: bool) -> Result<PtConfig> {
        if self.temps == 0 || !(self.t_min > 0.0 && self.t_min <= self.t_max) {
            return Err(invalid("need --temps >= 1 and 0 < --t-min <= --t-max"));
        }
        let cfg = PtConfig {
            temperatures: geometric_temperatures(self.temps, self.t_min, self.t_max),
            n_chains: self.chains,
            sweeps_per_emcs: self.sweeps_per_emcs,
            max_emcs: self.emcs,
            seed,
            record_energies,
            ..PtConfig::default()
        };
        cfg.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(cfg)
    }
}

// ---------------------------------------------------------------- gen

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Uniform +-1 couplings (the default).
    #[arg(long, conflicts_with = "planted")]
    pub signed: bool,
    /// Sum of random loops sharing a planted ground state.
    #[arg(long)]
    pub planted: bool,
    #[arg(long, default_value_t = LaoConfig::default().m_loops)]
    pub loops: usize,
    #[command(flatten)]
    pub loop_args: LoopArgs,
    /// Number of instances; instance `i` uses seed number `i` of the master seed.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// File name inside the output directory. With `--count > 1` an index is
    /// appended to the stem.
    #[arg(short, long, default_value = "instance.txt")]
    pub output: PathBuf,
}

#[derive(Serialize)]
struct InstanceLine<'a> {
    path: &'a Path,
    seed: u64,
    n_active: usize,
    n_edges: usize,
    planted_gs_energy: Option<Energy>,
}

fn indexed(path: &Path, i: usize, count: usize) -> PathBuf {
    if count == 1 {
        return path.to_path_buf();
    }
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{}_{i:04}{ext}", stem(path)))
}

pub fn gen(ctx: &Ctx, a: &GenArgs) -> Result<Status> {
    let topology = build_topology(ctx, &a.topology)?;
    let mut lao = LaoConfig {
        m_loops: a.loops,
        ..LaoConfig::default()
    };
    a.loop_args.apply(&mut lao)?;
    let made: Vec<(PathBuf, u64, IsingInstance)> = (0..a.count)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(ctx.seed, i as u64);
            let mut rng = rng_from_seed(seed);
            let inst = if a.planted {
                planted_instance(topology.clone(), &lao, &mut rng)?
            } else {
                IsingInstance::random_signed(topology.clone(), &mut rng)
            };
            Ok((ctx.out_dir.join(indexed(&a.output, i, a.count)), seed, inst))
        })
        .collect::<Result<_>>()?;
    for (path, seed, inst) in &made {
        save(ctx, path, inst)?;
        ctx.log.emit(
            "instance",
            &InstanceLine {
                path,
                seed: *seed,
                n_active: inst.topology().n_active(),
                n_edges: inst.topology().n_edges(),
                planted_gs_energy: inst.planted().map(|p| p.gs_energy),
            },
        )?;
    }
    Ok(Status::Ok)
}

// ---------------------------------------------------------------- evolve

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("walk").required(true).args(["rao", "lao"])))]
pub struct EvolveArgs {
    /// Edge-sign flips on a +-1 instance.
    #[arg(long)]
    pub rao: bool,
    /// Loop replacement on a planted instance.
    #[arg(long)]
    pub lao: bool,
    /// Starting instance. Without it a random instance is drawn on the
    /// given topology (planted for `--lao`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Steps (default 500 for `--rao`, 2000 for `--lao`).
    #[arg(long)]
    pub nstep: Option<usize>,
    #[arg(long, conflicts_with = "minimize")]
    pub maximize: bool,
    #[arg(long)]
    pub minimize: bool,
    /// `beta = beta_coeff * n`, with TTS in work units.
    #[arg(long, default_value_t = adaptive::DEFAULT_BETA_COEFF)]
    pub beta_coeff: f64,
    /// Use the literal seconds-based coefficient instead.
    #[arg(long)]
    pub paper_beta: bool,
    /// Loops of a generated planted start.
    #[arg(long, default_value_t = LaoConfig::default().m_loops)]
    pub loops: usize,
    #[command(flatten)]
    pub loop_args: LoopArgs,
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Independent walks; walk `r` uses seed number `r` of the master seed.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
}

#[derive(Serialize)]
struct StepLine<'a> {
    run: usize,
    #[serde(flatten)]
    step: &'a StepRecord,
}

#[derive(Serialize)]
struct TrajectoryLine<'a> {
    run: usize,
    seed: u64,
    direction: Direction,
    initial_tts: &'a TtsEstimate,
    final_tts: f64,
    best_tts: f64,
    steps: usize,
    accepted: usize,
    longest_plateau: usize,
    truncated: &'a Option<String>,
    final_path: &'a Path,
    best_path: &'a Path,
}

pub fn evolve(ctx: &Ctx, a: &EvolveArgs) -> Result<Status> {
    if a.oracle.oracle != OracleKind::Hfs {
        return Err(invalid("adaptive walks measure with the hfs oracle"));
    }
    let oracle = a.oracle.config()?;
    let direction = if a.minimize { Direction::Minimize } else { Direction::Maximize };
    let beta_coeff = if a.paper_beta { adaptive::PAPER_BETA_COEFF } else { a.beta_coeff };
    let start = match &a.input {
        Some(path) => Some(load(ctx, path)?),
        None => None,
    };
    let topology = match &start {
        Some(inst) => inst.topology_arc().clone(),
        None => build_topology(ctx, &a.topology)?,
    };
    let mut lao = LaoConfig {
        m_loops: a.loops,
        nstep: a.nstep.unwrap_or(LaoConfig::default().nstep),
        beta_coeff,
        direction,
        oracle: oracle.clone(),
        ..LaoConfig::default()
    };
    a.loop_args.apply(&mut lao)?;
    let rao = RaoConfig {
        nstep: a.nstep.unwrap_or(RaoConfig::default().nstep),
        beta_coeff,
        direction,
        oracle,
        seed: 0,
    };
    if let Some(inst) = &start {
        if a.rao && !inst.is_signed() {
            return Err(invalid("--rao needs a +-1 instance"));
        }
        if a.lao && inst.planted().is_none() {
            return Err(invalid("--lao needs a planted instance"));
        }
    }
    let trajectories: Vec<(u64, AdaptiveTrajectory)> = (0..a.runs)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(ctx.seed, r as u64);
            let traj = if a.rao {
                let inst = match &start {
                    Some(inst) => inst.clone(),
                    None => IsingInstance::random_signed(topology.clone(), &mut rng_from_seed(derive_seed(seed, 1))),
                };
                adaptive::rao_run(&inst, &RaoConfig { seed, ..rao.clone() })?
            } else {
                let cfg = LaoConfig { seed, ..lao.clone() };
                match &start {
                    Some(inst) => adaptive::lao_run_from(inst, &cfg, &mut rng_from_seed(seed))?,
                    None => adaptive::lao_run(topology.clone(), &cfg)?,
                }
            };
            Ok((seed, traj))
        })
        .collect::<Result<_>>()?;
    let mut status = Status::Ok;
    for (r, (seed, traj)) in trajectories.iter().enumerate() {
        let dir = if a.runs == 1 { ctx.out_dir.clone() } else { ctx.out_dir.join(format!("run_{r:03}")) };
        let final_path = dir.join("final.txt");
        let best_path = dir.join("best.txt");
        save(ctx, &final_path, &traj.final_instance)?;
        save(ctx, &best_path, &traj.best_instance)?;
        ctx.run.add_work(traj.initial_tts.work + traj.steps.iter().map(|s| s.work).sum::<u64>());
        for step in &traj.steps {
            ctx.log.emit("step", &StepLine { run: r, step })?;
        }
        ctx.log.emit(
            "trajectory",
            &TrajectoryLine {
                run: r,
                seed: *seed,
                direction: traj.direction,
                initial_tts: &traj.initial_tts,
                final_tts: traj.final_tts,
                best_tts: traj.best_tts,
                steps: traj.steps.len(),
                accepted: traj.accepted(),
                longest_plateau: traj.longest_plateau(),
                truncated: &traj.truncated,
                final_path: &final_path,
                best_path: &best_path,
            },
        )?;
        if traj.truncated.is_some() {
            status = status.merge(Status::Budget);
        }
        if traj.steps.iter().any(|s| s.gs_verified == Some(false)) {
            status = status.merge(Status::Invalid("planted-check-failed".into()));
        }
    }
    Ok(status)
}

// ---------------------------------------------------------------- measure

#[derive(Args, Debug, Serialize)]
pub struct MeasureArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Instances with at most this many active spins are also solved
    /// exhaustively and the oracle's best energy is checked against them.
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_LIMIT)]
    pub cross_check_limit: usize,
}

#[derive(Serialize)]
struct TtsLine<'a> {
    input: &'a Path,
    seed: u64,
    #[serde(flatten)]
    estimate: &'a TtsEstimate,
    /// The estimate stopped at the work cap.
    partial: bool,
    exact_energy: Option<Energy>,
    cross_check: Option<bool>,
}

fn measure_one(inst: &IsingInstance, cfg: &OracleConfig, kind: OracleKind, seed: u64) -> Result<(TtsEstimate, bool)> {
    let mut rng = rng_from_seed(seed);
    let result = match kind {
        OracleKind::Hfs => estimate_tts(inst, cfg, cfg.n_init, &mut rng),
        OracleKind::SaRestart => {
            let reference = match inst.planted() {
                Some(p) => p.gs_energy,
                None => ground_energy(inst).context("sa-restart needs an exact reference energy")?,
            };
            restart_tts(inst, &cfg.sa, reference, &mut rng)
        }
    };
    match result {
        Ok(est) => Ok((est, false)),
        Err(Error::BudgetExceeded { partial: Some(p), .. }) => Ok((*p, true)),
        Err(e) => Err(e.into()),
    }
}

pub fn measure(ctx: &Ctx, a: &MeasureArgs) -> Result<Status> {
    let cfg = a.oracle.config()?;
    let instances: Vec<IsingInstance> = a.inputs.iter().map(|p| load(ctx, p)).collect::<Result<_>>()?;
    let results: Vec<(u64, TtsEstimate, bool, Option<Energy>)> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let seed = derive_seed(ctx.seed, i as u64);
            let (est, partial) = measure_one(inst, &cfg, a.oracle.oracle, seed)?;
            let exact = (inst.topology().n_active() <= a.cross_check_limit)
                .then(|| brute_force_gs(inst, a.cross_check_limit).map(|g| g.energy))
                .transpose()?;
            Ok((seed, est, partial, exact))
        })
        .collect::<Result<_>>()?;
    let mut status = Status::Ok;
    for (path, (seed, est, partial, exact)) in a.inputs.iter().zip(&results) {
        let cross_check = exact.map(|e| e == est.best_energy);
        ctx.run.add_work(est.work);
        ctx.log.emit(
            "tts",
            &TtsLine {
                input: path,
                seed: *seed,
                estimate: est,
                partial: *partial,
                exact_energy: *exact,
                cross_check,
            },
        )?;
        println!("{}\t{:.6e}", path.display(), est.value);
        if *partial {
            status = status.merge(Status::Budget);
        } else if cross_check == Some(false) {
            status = status.merge(Status::Invalid("cross-check-failed".into()));
        }
    }
    Ok(status)
}

// ---------------------------------------------------------------- ptmix

#[derive(Args, Debug, Serialize)]
pub struct PtmixArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub pt: PtArgs,
    /// Skip the per-EMCS trace CSV.
    #[arg(long)]
    pub no_trace: bool,
}

#[derive(Serialize)]
struct MixingLine<'a> {
    input: &'a Path,
    seed: u64,
    emcs: u64,
    best_energy: Energy,
    #[serde(flatten)]
    report: &'a MixingReport,
    trace: Option<&'a Path>,
}

pub fn ptmix(ctx: &Ctx, a: &PtmixArgs) -> Result<Status> {
    let instances: Vec<IsingInstance> = a.inputs.iter().map(|p| load(ctx, p)).collect::<Result<_>>()?;
    let configs: Vec<PtConfig> = (0..instances.len())
        .map(|i| a.pt.config(derive_seed(ctx.seed, i as u64), !a.no_trace))
        .collect::<Result<_>>()?;
    let mut status = Status::Ok;
    for ((path, inst), cfg) in a.inputs.iter().zip(&instances).zip(&configs) {
        let trace = pt_run(inst, cfg)?;
        let report = mixing_time(&trace, cfg)?;
        let trace_path = (!a.no_trace).then(|| ctx.out_dir.join(format!("{}.trace.csv", stem(path))));
        if let Some(p) = &trace_path {
            trace.write_csv(ctx.run.create(p)?)?;
        }
        let sweeps = trace.emcs_executed * (cfg.sweeps_per_emcs * cfg.n_copies()) as u64;
        ctx.run.add_work(sweeps * inst.topology().n_active() as u64);
        ctx.log.emit(
            "mixing",
            &MixingLine {
                input: path,
                seed: cfg.seed,
                emcs: trace.emcs_executed,
                best_energy: trace.best().0,
                report: &report,
                trace: trace_path.as_deref(),
            },
        )?;
        println!("{}\ttau={:.1}\tvalid={}", path.display(), report.tau, report.valid);
        if !report.valid {
            status = status.merge(Status::Invalid("invalid-mixing".into()));
        }
    }
    Ok(status)
}

// ---------------------------------------------------------------- analyze

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub what: Analysis,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    /// Fit `log10 y = slope log10 x + c` to per-group aggregates of a
    /// `x,y,group` CSV.
    Fit {
        points: PathBuf,
        /// median or lower-quartile.
        #[arg(long, default_value = "median")]
        aggregator: Aggregator,
        /// Groups to leave out, comma separated.
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<u32>,
    },
    /// Spearman rank correlation of the x and y columns of a CSV.
    Correlate { points: PathBuf },
    /// Ground/excited-state overlap ratio from a parallel-tempering run.
    Overlap {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        pt: PtArgs,
    },
}

#[derive(Serialize)]
struct CorrelationLine<'a> {
    points: &'a Path,
    n: usize,
    spearman: f64,
}

#[derive(Serialize)]
struct FitLine<'a> {
    points: &'a Path,
    #[serde(flatten)]
    fit: &'a PowerFit,
}

#[derive(Serialize)]
struct OverlapLine<'a> {
    input: &'a Path,
    seed: u64,
    gs_energy: Option<Energy>,
    es_energy: Option<Energy>,
    #[serde(flatten)]
    report: &'a OverlapReport,
    partial: bool,
    truncated: bool,
    pairs: &'static str,
}

pub fn analyze(ctx: &Ctx, a: &AnalyzeArgs) -> Result<Status> {
    match &a.what {
        Analysis::Fit { points, aggregator, exclude } => {
            let pts = read_points(&ctx.run.read(points)?)?;
            let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.x, p.y)).collect();
            let groups: Vec<Option<u32>> = pts.iter().map(|p| p.group).collect();
            let fit = power_fit(&xy, &groups, *aggregator, exclude).map_err(|e| invalid(e.to_string()))?;
            ctx.log.emit("fit", &FitLine { points, fit: &fit })?;
            println!("slope={:.4}\tintercept={:.4}", fit.slope, fit.intercept);
        }
        Analysis::Correlate { points } => {
            let pts = read_points(&ctx.run.read(points)?)?;
            let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
            let rho = spearman(&xs, &ys).map_err(|e| invalid(e.to_string()))?;
            ctx.log.emit(
                "correlation",
                &CorrelationLine {
                    points,
                    n: pts.len(),
                    spearman: rho,
                },
            )?;
            println!("spearman={rho:.4}");
        }
        Analysis::Overlap { inputs, pt } => {
            let mut status = Status::Ok;
            for (i, path) in inputs.iter().enumerate() {
                let inst = load(ctx, path)?;
                let cfg = pt.config(derive_seed(ctx.seed, i as u64), false)?;
                let trace = pt_run(&inst, &cfg)?;
                let low = collect_low_states(&trace);
                let report = overlap_ratio(&low.ground_configs(), &low.excited_configs(), inst.topology())?;
                ctx.log.emit(
                    "overlap",
                    &OverlapLine {
                        input: path,
                        seed: cfg.seed,
                        gs_energy: low.ground.as_ref().map(|g| g.0),
                        es_energy: low.excited.as_ref().map(|g| g.0),
                        report: &report,
                        partial: low.partial,
                        truncated: low.truncated,
                        pairs: "distinct canonical pairs, gauge-reduced |q|",
                    },
                )?;
                println!(
                    "{}\tratio={}",
                    path.display(),
                    report.ratio.map_or_else(|| "none".into(), |r| format!("{r:.4}"))
                );
                if low.partial {
                    status = status.merge(Status::Invalid("partial-low-states".into()));
                }
            }
            return Ok(status);
        }
    }
    Ok(Status::Ok)
}

// ---------------------------------------------------------------- classify

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandKind {
    /// Decades `[0.8, 1.2] * 10^(k-4)` seconds, k = 1..4.
    Seconds,
    /// The same decades scaled by `--unit`.
    Decades,
    /// `--count` bands between sample quantiles of the inputs.
    Quantiles,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    /// TTS values.
    pub values: Vec<f64>,
    /// Also classify the `value` of every `tts` record in this log.
    #[arg(long)]
    pub from_log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BandKind::Seconds)]
    pub bands: BandKind,
    #[arg(long, default_value_t = 1.0)]
    pub unit: f64,
    #[arg(long, default_value_t = 5)]
    pub count: usize,
}

#[derive(Serialize)]
struct ClassLine {
    input: Option<String>,
    value: f64,
    group: Option<u32>,
}

pub fn classify(ctx: &Ctx, a: &ClassifyArgs) -> Result<Status> {
    let mut items: Vec<(Option<String>, f64)> = a.values.iter().map(|&v| (None, v)).collect();
    if let Some(path) = &a.from_log {
        for (i, line) in ctx.run.read(path)?.lines().enumerate() {
            let rec: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| invalid(format!("{}:{}: {e}", path.display(), i + 1)))?;
            if rec["record"] == "tts" {
                let value = rec["value"]
                    .as_f64()
                    .ok_or_else(|| invalid(format!("{}:{}: tts record without value", path.display(), i + 1)))?;
                items.push((rec["input"].as_str().map(String::from), value));
            }
        }
    }
    if items.is_empty() {
        return Err(invalid("no values to classify"));
    }
    let bands = match a.bands {
        BandKind::Seconds => HardnessBands::seconds(),
        BandKind::Decades => HardnessBands::decades(a.unit),
        BandKind::Quantiles => {
            let values: Vec<f64> = items.iter().map(|i| i.1).collect();
            HardnessBands::quantiles(&values, a.count).map_err(|e| invalid(e.to_string()))?
        }
    };
    ctx.log.emit("bands", &bands)?;
    for (input, value) in items {
        let group = bands.classify(value);
        println!("{value}\t{}", group.map_or_else(|| "-".into(), |g| g.to_string()));
        ctx.log.emit("class", &ClassLine { input, value, group })?;
    }
    Ok(Status::Ok)
}

// ---------------------------------------------------------------- verify

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Exhaustive search up to this many active spins, elimination above.
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_LIMIT)]
    pub limit: usize,
    #[arg(long, default_value_t = DEFAULT_WIDTH_LIMIT)]
    pub width_limit: usize,
    /// Agreement count of the oracle run that is cross-checked.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
}

#[derive(Serialize)]
struct VerifyLine<'a> {
    input: &'a Path,
    method: &'static str,
    exact_energy: Energy,
    degeneracy: Option<usize>,
    planted_gs_energy: Option<Energy>,
    oracle_best_energy: Energy,
    agree: bool,
}

pub fn verify(ctx: &Ctx, a: &VerifyArgs) -> Result<Status> {
    let instances: Vec<IsingInstance> = a.inputs.iter().map(|p| load(ctx, p)).collect::<Result<_>>()?;
    let oracle = OracleConfig {
        n_init: a.n,
        n_min: a.n.min(OracleConfig::default().n_min),
        ..OracleConfig::default()
    };
    oracle.validate().map_err(|e| invalid(e.to_string()))?;
    let rows: Vec<(&'static str, Energy, Option<usize>, TtsEstimate)> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let (method, energy, degeneracy) = if inst.topology().n_active() <= a.limit {
                let gs = brute_force_gs(inst, a.limit)?;
                ("brute-force", gs.energy, Some(gs.configs.len()))
            } else {
                ("elimination", exact_ground_state(inst, a.width_limit)?.0, None)
            };
            let est = estimate_tts(inst, &oracle, a.n, &mut rng_from_seed(derive_seed(ctx.seed, i as u64)))?;
            Ok((method, energy, degeneracy, est))
        })
        .collect::<Result<_>>()?;
    let mut status = Status::Ok;
    for ((path, inst), (method, energy, degeneracy, est)) in a.inputs.iter().zip(&instances).zip(rows) {
        let planted = inst.planted().map(|p| p.gs_energy);
        let agree = est.best_energy == energy && planted.map_or(true, |p| p == energy);
        ctx.run.add_work(est.work);
        ctx.log.emit(
            "verify",
            &VerifyLine {
                input: path,
                method,
                exact_energy: energy,
                degeneracy,
                planted_gs_energy: planted,
                oracle_best_energy: est.best_energy,
                agree,
            },
        )?;
        println!("{}\t{energy}\t{}", path.display(), if agree { "agree" } else { "MISMATCH" });
        if !agree {
            status = status.merge(Status::Invalid("verify-mismatch".into()));
        }
    }
    Ok(status)
}
