//! Thermal solvers: Metropolis sweeps, simulated annealing and parallel
//! tempering, plus the mixing-time analysis of tempering runs.

pub mod metropolis;
pub mod mixing;
pub mod pt;

pub use metropolis::{geometric_schedule, metropolis_sweep, sa_solve, SaOutcome, SweepStats};
pub use mixing::{integrated_autocorr_time, mixing_time, AutocorrTime, MixingReport};
pub use pt::{collect_low_states, geometric_temperatures, pt_run, LowStateReport, PtConfig, PtTrace};
