//! Temperature mixing time of a parallel-tempering run.
//!
//! For every copy the series `x_t = 1` if the copy sits in the hot half of
//! the ladder after EMCS `t` (top `ceil(N_T / 2)` temperatures), `0`
//! otherwise. Its integrated autocorrelation time
//! `tau = 1 + 2 sum_{t=1}^{W} rho(t)` is evaluated with the self-consistent
//! window `W = min { M : M >= c tau(M) }`, `c = 6`. The run's mixing time is
//! the largest per-copy value (floored at one EMCS), expressed in Metropolis
//! sweeps.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::pt::{PtConfig, PtTrace};

pub const WINDOW_FACTOR: f64 = 6.0;
pub const MIN_HOT_FRACTION: f64 = 0.2;
pub const MIN_RUN_OVER_TAU: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutocorrTime {
    /// `1 + 2 sum rho(t)` in units of the series step.
    pub tau: f64,
    pub window: usize,
    /// The window condition was met before the series ran out.
    pub converged: bool,
}

/// Normalized autocorrelation `rho(0..=max_lag)` via zero-padded FFT.
/// `None` for constant series.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return None;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for z in &mut buf {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if c0 <= 1e-12 * n as f64 {
        return None;
    }
    Some(buf[..=max_lag.min(n - 1)].iter().map(|z| z.re / c0).collect())
}

/// Integrated autocorrelation time with a self-consistent window of factor
/// `window_factor`. `None` for constant series.
pub fn integrated_autocorr_time(series: &[f64], window_factor: f64) -> Option<AutocorrTime> {
    let rho = autocorrelation(series, series.len().saturating_sub(1))?;
    let mut tau = 1.0;
    for (m, &r) in rho.iter().enumerate().skip(1) {
        tau += 2.0 * r;
        if m as f64 >= window_factor * tau {
            return Some(AutocorrTime {
                tau,
                window: m,
                converged: true,
            });
        }
    }
    Some(AutocorrTime {
        tau,
        window: rho.len() - 1,
        converged: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    /// Mixing time in Metropolis sweeps.
    pub tau: f64,
    pub tau_emcs: f64,
    /// Least fraction of the run any copy spent in the hot half.
    pub hot_half_min_fraction: f64,
    /// `emcs * sweeps_per_emcs / tau`.
    pub run_length_over_tau: f64,
    pub valid: bool,
    pub reason: Option<String>,
    /// Per-copy estimate in EMCS; `None` when the copy never changed half.
    pub per_copy_tau_emcs: Vec<Option<f64>>,
}

pub fn hot_half_start(n_temps: usize) -> usize {
    n_temps - n_temps.div_ceil(2)
}

pub fn mixing_time(trace: &PtTrace, cfg: &PtConfig) -> Result<MixingReport> {
    if trace.emcs_executed == 0 || trace.temp_index.is_empty() {
        return Err(Error::InvalidConfig("empty parallel-tempering trace".into()));
    }
    let hot_from = hot_half_start(trace.n_temps) as u16;
    let length = trace.emcs_executed as f64;
    let mut hot_min = f64::INFINITY;
    let mut degenerate = Vec::new();
    let mut unconverged = Vec::new();
    let mut per_copy = Vec::with_capacity(trace.n_copies());
    for (copy, series) in trace.temp_index.iter().enumerate() {
        let indicator: Vec<f64> = series
            .iter()
            .map(|&k| if k >= hot_from { 1.0 } else { 0.0 })
            .collect();
        hot_min = hot_min.min(indicator.iter().sum::<f64>() / length);
        match integrated_autocorr_time(&indicator, WINDOW_FACTOR) {
            Some(a) => {
                if !a.converged {
                    unconverged.push(copy);
                }
                per_copy.push(Some(a.tau.max(1.0)));
            }
            None => {
                degenerate.push(copy);
                per_copy.push(None);
            }
        }
    }
    let tau_emcs = per_copy.iter().flatten().copied().fold(1.0, f64::max);
    let tau = tau_emcs * cfg.sweeps_per_emcs as f64;
    let run_length_over_tau = length * cfg.sweeps_per_emcs as f64 / tau;

    let mut reasons = Vec::new();
    if !degenerate.is_empty() {
        reasons.push(format!("{} copies never changed half", degenerate.len()));
    }
    if !unconverged.is_empty() {
        reasons.push(format!("window did not converge for {} copies", unconverged.len()));
    }
    if hot_min < MIN_HOT_FRACTION {
        reasons.push(format!("hot-half fraction {hot_min:.3} below {MIN_HOT_FRACTION}"));
    }
    if run_length_over_tau < MIN_RUN_OVER_TAU {
        reasons.push(format!("run is only {run_length_over_tau:.1} tau long"));
    }
    Ok(MixingReport {
        tau,
        tau_emcs,
        hot_half_min_fraction: hot_min,
        run_length_over_tau,
        valid: reasons.is_empty(),
        reason: (!reasons.is_empty()).then(|| reasons.join("; ")),
        per_copy_tau_emcs: per_copy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::solver::pt::LowStates;
    use rand::Rng;

    /// Symmetric two-state Markov chain whose integrated autocorrelation time
    /// is `tau0`: rho(t) = phi^t with phi = (tau0 - 1) / (tau0 + 1).
    pub(crate) fn two_state_series(tau0: f64, len: usize, seed: u64) -> Vec<f64> {
        let phi = (tau0 - 1.0) / (tau0 + 1.0);
        let switch = (1.0 - phi) / 2.0;
        let mut rng = rng_from_seed(seed);
        let mut x = rng.gen::<bool>();
        (0..len)
            .map(|_| {
                if rng.gen::<f64>() < switch {
                    x = !x;
                }
                f64::from(u8::from(x))
            })
            .collect()
    }

    fn trace_from(series: Vec<Vec<u16>>, n_temps: usize) -> PtTrace {
        let emcs = series[0].len() as u64;
        let copies = series.len();
        PtTrace {
            n_temps,
            n_chains: 1,
            sweeps_per_emcs: 10,
            emcs_executed: emcs,
            temp_index: series,
            energies: None,
            lowest_temp_energies: vec![],
            best_energy: vec![0; copies],
            best_config: vec![],
            swap_proposed: vec![],
            swap_accepted: vec![],
            low_states: LowStates::new(1),
        }
    }

    #[test]
    fn autocorrelation_matches_direct_sum() {
        let x = two_state_series(5.0, 500, 1);
        let rho = autocorrelation(&x, 10).unwrap();
        let mean = x.iter().sum::<f64>() / 500.0;
        let c = |t: usize| (0..500 - t).map(|i| (x[i] - mean) * (x[i + t] - mean)).sum::<f64>();
        for t in 0..=10 {
            assert!((rho[t] - c(t) / c(0)).abs() < 1e-9);
        }
        assert!(autocorrelation(&[1.0; 10], 3).is_none());
    }

    #[test]
    fn recovers_known_tau() {
        for (tau0, seed) in [(10.0, 1), (50.0, 2)] {
            let x = two_state_series(tau0, 10_000 * tau0 as usize, seed);
            let est = integrated_autocorr_time(&x, WINDOW_FACTOR).unwrap();
            assert!(est.converged);
            assert!((est.tau - tau0).abs() / tau0 < 0.2, "{} vs {tau0}", est.tau);
        }
    }

    #[test]
    fn alternating_copy_mixes_at_floor() {
        let n_temps = 4;
        let series: Vec<u16> = (0..1000).map(|t| if t % 2 == 0 { 0 } else { 3 }).collect();
        let cfg = PtConfig {
            temperatures: vec![1.0, 2.0, 3.0, 4.0],
            n_chains: 1,
            ..PtConfig::default()
        };
        let report = mixing_time(&trace_from(vec![series], n_temps), &cfg).unwrap();
        assert_eq!(report.tau, 10.0);
        assert!((report.hot_half_min_fraction - 0.5).abs() < 1e-12);
        assert!(report.valid);
    }

    #[test]
    fn trapped_copy_is_invalid() {
        let cfg = PtConfig {
            temperatures: vec![1.0, 2.0, 3.0, 4.0],
            n_chains: 1,
            ..PtConfig::default()
        };
        let moving: Vec<u16> = (0..1000).map(|t| if t % 2 == 0 { 0 } else { 3 }).collect();
        let trapped = vec![1u16; 1000];
        let report = mixing_time(&trace_from(vec![moving, trapped], 4), &cfg).unwrap();
        assert!(!report.valid);
        assert_eq!(report.hot_half_min_fraction, 0.0);
        assert!(report.reason.unwrap().contains("never changed half"));
    }

    #[test]
    fn relabeling_copies_does_not_change_tau() {
        let a: Vec<u16> = two_state_series(8.0, 20_000, 5).iter().map(|&x| x as u16 * 3).collect();
        let b: Vec<u16> = two_state_series(20.0, 20_000, 6).iter().map(|&x| x as u16 * 3).collect();
        let cfg = PtConfig {
            temperatures: vec![1.0, 2.0, 3.0, 4.0],
            n_chains: 1,
            ..PtConfig::default()
        };
        let r1 = mixing_time(&trace_from(vec![a.clone(), b.clone()], 4), &cfg).unwrap();
        let r2 = mixing_time(&trace_from(vec![b, a], 4), &cfg).unwrap();
        assert_eq!(r1.tau, r2.tau);
    }

    #[test]
    fn hot_half_boundaries() {
        assert_eq!(hot_half_start(30), 15);
        assert_eq!(hot_half_start(5), 2);
        assert_eq!(hot_half_start(1), 0);
    }
}
