//! Landscape and hardness statistics: spin overlaps, ground/excited overlap
//! ratios, hardness bands, power-law fits and rank correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::SpinConfig;
use crate::topology::Topology;

/// `q = 1 - 2h/N` over the active vertices of `topology`.
pub fn overlap(a: &SpinConfig, b: &SpinConfig, topology: &Topology) -> Result<f64> {
    for c in [a, b] {
        if c.len() != topology.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: topology.n_vertices(),
                actual: c.len(),
            });
        }
    }
    let n = topology.n_active();
    if n == 0 {
        return Err(Error::Analysis("no active spins".into()));
    }
    Ok(1.0 - 2.0 * a.hamming(b, topology) as f64 / n as f64)
}

/// Overlap maximized over a global flip of one argument, i.e. `|q|`.
pub fn gauge_overlap(a: &SpinConfig, b: &SpinConfig, topology: &Topology) -> Result<f64> {
    overlap(a, b, topology).map(f64::abs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub median_gs_gs: f64,
    pub median_gs_es: Option<f64>,
    pub ratio: Option<f64>,
    pub n_gs: usize,
    pub n_es: usize,
}

/// Medians of `|q|` over pairs of distinct ground states and over
/// ground/excited pairs, after reducing every configuration to its
/// global-flip representative. A single ground state has `median_gs_gs = 1`.
pub fn overlap_ratio(gs: &[SpinConfig], es: &[SpinConfig], topology: &Topology) -> Result<OverlapReport> {
    if gs.is_empty() {
        return Err(Error::Analysis("empty ground-state set".into()));
    }
    let canon = |set: &[SpinConfig]| {
        let mut v: Vec<SpinConfig> = set.iter().map(|c| c.canonical(topology)).collect();
        v.sort();
        v.dedup();
        v
    };
    let gs = canon(gs);
    let es = canon(es);
    let mut within = Vec::new();
    for (i, a) in gs.iter().enumerate() {
        for b in &gs[i + 1..] {
            within.push(gauge_overlap(a, b, topology)?);
        }
    }
    let median_gs_gs = if within.is_empty() { 1.0 } else { median(&mut within) };
    let mut across = Vec::new();
    for a in &gs {
        for b in es.iter().filter(|b| *b != a) {
            across.push(gauge_overlap(a, b, topology)?);
        }
    }
    let median_gs_es = (!across.is_empty()).then(|| median(&mut across));
    Ok(OverlapReport {
        median_gs_gs,
        median_gs_es,
        ratio: median_gs_es.filter(|_| median_gs_gs != 0.0).map(|m| m / median_gs_gs),
        n_gs: gs.len(),
        n_es: es.len(),
    })
}

fn median(values: &mut [f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation sample quantile (R type 7). Sorts `values`.
pub fn quantile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    values.sort_by(f64::total_cmp);
    let h = (values.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    values[lo] + (h - lo as f64) * (values[hi] - values[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessGroup {
    pub k: u32,
    pub lower: f64,
    pub upper: f64,
}

/// Disjoint TTS bands; a value belongs to band `k` when
/// `lower <= tts <= upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessBands {
    pub groups: Vec<HardnessGroup>,
}

impl HardnessBands {
    pub fn new(mut groups: Vec<HardnessGroup>) -> Result<Self> {
        groups.sort_by(|a, b| a.lower.total_cmp(&b.lower));
        for g in &groups {
            if !(g.lower < g.upper) {
                return Err(Error::Analysis(format!("band {} is empty", g.k)));
            }
        }
        if groups.windows(2).any(|w| w[0].upper >= w[1].lower) {
            return Err(Error::Analysis("hardness bands overlap".into()));
        }
        Ok(Self { groups })
    }

    /// `[0.8, 1.2] * unit * 10^(k - 4)` for `k = 1..=4`; `unit = 1` gives
    /// the bands in seconds.
    pub fn decades(unit: f64) -> Self {
        Self {
            groups: (1..=4)
                .map(|k| {
                    let centre = unit * 10f64.powi(k as i32 - 4);
                    HardnessGroup {
                        k,
                        lower: 0.8 * centre,
                        upper: 1.2 * centre,
                    }
                })
                .collect(),
        }
    }

    pub fn seconds() -> Self {
        Self::decades(1.0)
    }

    /// `count` bands between consecutive sample quantiles of `values`, which
    /// together cover the whole sample. Band `k` is `[q_{k-1}, q_k)`, the
    /// last band closed; the upper edges are nudged down by one ulp so the
    /// bands stay disjoint.
    pub fn quantiles(values: &[f64], count: usize) -> Result<Self> {
        if count == 0 || values.len() < count {
            return Err(Error::Analysis(format!(
                "need at least {count} values for {count} quantile bands"
            )));
        }
        let mut sorted = values.to_vec();
        let edges: Vec<f64> = (0..=count)
            .map(|i| quantile(&mut sorted, i as f64 / count as f64))
            .collect();
        let groups = (0..count)
            .map(|i| HardnessGroup {
                k: i as u32 + 1,
                lower: edges[i],
                upper: if i + 1 == count {
                    edges[i + 1]
                } else {
                    next_down(edges[i + 1])
                },
            })
            .collect();
        Self::new(groups)
    }

    pub fn classify(&self, tts: f64) -> Option<u32> {
        self.groups
            .iter()
            .find(|g| g.lower <= tts && tts <= g.upper)
            .map(|g| g.k)
    }
}

fn next_down(x: f64) -> f64 {
    if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else if x == 0.0 {
        -f64::from_bits(1)
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// Band of `tts` under the seconds preset.
pub fn classify_hardness(tts: f64) -> Option<u32> {
    HardnessBands::seconds().classify(tts)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    #[default]
    Median,
    LowerQuartile,
}

impl Aggregator {
    fn quantile(self) -> f64 {
        match self {
            Aggregator::Median => 0.5,
            Aggregator::LowerQuartile => 0.25,
        }
    }
}

impl std::str::FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Aggregator::Median),
            "lower-quartile" | "lower_quartile" | "q1" => Ok(Aggregator::LowerQuartile),
            other => Err(Error::Analysis(format!("unknown aggregator `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    /// In `log10 y = slope * log10 x + intercept`.
    pub intercept: f64,
    /// `(group, x, y)` aggregate points the line was fit to.
    pub points: Vec<(u32, f64, f64)>,
    /// `log10 y - fitted` per aggregate point.
    pub residuals: Vec<f64>,
}

/// Least-squares line through `(log10 x, log10 y)` of the per-group
/// aggregate points. `groups[i]` labels `points[i]`; unlabeled points and
/// groups in `exclude` are dropped. Each group contributes the aggregate
/// of its x values and of its y values.
pub fn power_fit(
    points: &[(f64, f64)],
    groups: &[Option<u32>],
    aggregator: Aggregator,
    exclude: &[u32],
) -> Result<PowerFit> {
    if points.len() != groups.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: groups.len(),
        });
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Analysis("power fit needs positive values".into()));
    }
    let mut by_group: std::collections::BTreeMap<u32, (Vec<f64>, Vec<f64>)> = Default::default();
    for (&(x, y), g) in points.iter().zip(groups) {
        if let Some(k) = g.filter(|k| !exclude.contains(k)) {
            let entry = by_group.entry(k).or_default();
            entry.0.push(x);
            entry.1.push(y);
        }
    }
    let agg: Vec<(u32, f64, f64)> = by_group
        .into_iter()
        .map(|(k, (mut xs, mut ys))| {
            let q = aggregator.quantile();
            (k, quantile(&mut xs, q), quantile(&mut ys, q))
        })
        .collect();
    if agg.len() < 2 {
        return Err(Error::Analysis(format!("{} aggregate points, need 2", agg.len())));
    }
    let lx: Vec<f64> = agg.iter().map(|p| p.1.log10()).collect();
    let ly: Vec<f64> = agg.iter().map(|p| p.2.log10()).collect();
    let (slope, intercept) = least_squares(&lx, &ly)?;
    let residuals = lx.iter().zip(&ly).map(|(x, y)| y - (slope * x + intercept)).collect();
    Ok(PowerFit {
        slope,
        intercept,
        points: agg,
        residuals,
    })
}

/// Ordinary least squares `y = a x + b`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Analysis("all x values coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::Analysis("rank correlation needs at least 3 points".into()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let m = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let vx: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - m).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Analysis("rank correlation of a constant sample".into()));
    }
    Ok(cov / (vx * vy).sqrt())
}
