//! Ising spin-glass instances on Chimera graphs, the solvers used to rate
//! them, and adaptive searches over couplings that make instances harder (or
//! easier) for a chosen solver.
//!
//! Hardness is measured as a time-to-solution in deterministic work units
//! ([`tts::estimate_tts`]) and as a parallel-tempering mixing time
//! ([`solver::mixing_time`]). [`adaptive::rao_run`] and [`adaptive::lao_run`]
//! evolve instances against the former.

pub mod adaptive;
pub mod analysis;
pub mod error;
pub mod exact;
pub mod instance;
pub mod io;
pub mod rng;
pub mod solver;
pub mod topology;
pub mod tts;

pub use adaptive::{
    accept_move, lao_run, rao_run, AdaptiveTrajectory, Direction, LaoConfig, Move, RaoConfig, StepRecord,
};
pub use error::{Error, Result};
pub use instance::{Coupling, Energy, IsingInstance, Loop, PlantedData, SpinConfig};
pub use solver::{mixing_time, pt_run, MixingReport, PtConfig, PtTrace};
pub use topology::{ChimeraShape, Topology};
pub use tts::{estimate_tts, BlockShape, OracleConfig, TtsEstimate};
