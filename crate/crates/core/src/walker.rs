//! Variable-speed random walk on the open-edge graph and mean-squared
//! displacement estimates.
//!
//! Each open edge carries unit conductance, so a walker at `z` waits an
//! exponential time of rate `deg(z)` and then jumps along a uniformly chosen
//! open incident edge. Simulation is event driven: no time discretization.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::EdgeGrid;
use crate::seeding::stream;

/// Fraction of walkers that must still be alive for a time to enter a fit.
pub const FIT_SURVIVAL_FRACTION: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("start vertex ({0}, {1}) has no open incident edge")]
    IsolatedStart(usize, usize),
    #[error("start vertex ({0}, {1}) is not strictly inside the window")]
    StartOutside(usize, usize),
    #[error("sample times must be ascending and within (0, t_max]")]
    BadSampleTimes,
    #[error("need at least {needed} usable sample times in the fit window, found {found}")]
    InsufficientData { needed: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Walkers reaching the window boundary stop counting from that time on.
    #[default]
    Absorb,
    /// Walkers reaching the boundary before `t_max` are dropped entirely.
    RejectRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub n_walkers: usize,
    pub t_max: f64,
    pub sample_times: Vec<f64>,
    /// Start vertex; the window centre when absent.
    #[serde(default)]
    pub start: Option<(usize, usize)>,
    #[serde(default)]
    pub boundary: BoundaryPolicy,
}

impl WalkConfig {
    /// `points` geometrically spaced sample times from `t_min` to `t_max`.
    pub fn geometric(n_walkers: usize, t_min: f64, t_max: f64, points: usize) -> Self {
        assert!(points >= 2 && t_min > 0.0 && t_max > t_min);
        let ratio = (t_max / t_min).powf(1.0 / (points - 1) as f64);
        let mut sample_times: Vec<f64> = (0..points).map(|i| t_min * ratio.powi(i as i32)).collect();
        sample_times[points - 1] = t_max;
        Self {
            n_walkers,
            t_max,
            sample_times,
            start: None,
            boundary: BoundaryPolicy::Absorb,
        }
    }

    fn check(&self) -> Result<(), WalkError> {
        let ascending = self.sample_times.windows(2).all(|w| w[0] < w[1]);
        let inside = self
            .sample_times
            .iter()
            .all(|&t| t > 0.0 && t <= self.t_max);
        if ascending && inside && !self.sample_times.is_empty() {
            Ok(())
        } else {
            Err(WalkError::BadSampleTimes)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsdPoint {
    pub t: f64,
    pub msd_mean: f64,
    pub msd_se: f64,
    pub survivors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsdCurve {
    pub points: Vec<MsdPoint>,
    /// Walkers launched.
    pub walkers: usize,
    /// Jumps made before `t_max` (or absorption), over all walkers.
    pub total_jumps: u64,
    /// `Σ_walkers ∫ deg(X_t) dt` over the same time span.
    pub integrated_degree: f64,
}

impl MsdCurve {
    /// Jumps divided by integrated degree; 1 in expectation.
    pub fn jump_rate_ratio(&self) -> f64 {
        self.total_jumps as f64 / self.integrated_degree
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,msd_mean,msd_se,survivors")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.t, p.msd_mean, p.msd_se, p.survivors)?;
        }
        Ok(())
    }
}

/// Squared displacement per sample time for one walker; `None` once removed.
struct Trace {
    squared: Vec<Option<f64>>,
    jumps: u64,
    integrated_degree: f64,
}

/// Running sums for pooling walkers, possibly over several environments.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdAccumulator {
    times: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: Vec<usize>,
    walkers: usize,
    jumps: u64,
    integrated_degree: f64,
}

impl MsdAccumulator {
    pub fn new(sample_times: &[f64]) -> Self {
        let m = sample_times.len();
        Self {
            times: sample_times.to_vec(),
            sum: vec![0.0; m],
            sum_sq: vec![0.0; m],
            count: vec![0; m],
            walkers: 0,
            jumps: 0,
            integrated_degree: 0.0,
        }
    }

    fn push(&mut self, trace: &Trace) {
        self.walkers += 1;
        self.jumps += trace.jumps;
        self.integrated_degree += trace.integrated_degree;
        for (i, s) in trace.squared.iter().enumerate() {
            if let Some(x) = *s {
                self.sum[i] += x;
                self.sum_sq[i] += x * x;
                self.count[i] += 1;
            }
        }
    }

    /// Adds the walkers pooled in `other`, which must share the sample times.
    pub fn merge(&mut self, other: &MsdAccumulator) {
        assert_eq!(self.times, other.times, "sample times differ");
        for i in 0..self.times.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            self.count[i] += other.count[i];
        }
        self.walkers += other.walkers;
        self.jumps += other.jumps;
        self.integrated_degree += other.integrated_degree;
    }

    pub fn finish(&self) -> MsdCurve {
        let points = (0..self.times.len())
            .map(|i| {
                let k = self.count[i];
                let mean = if k > 0 { self.sum[i] / k as f64 } else { 0.0 };
                let se = if k > 1 {
                    let var = (self.sum_sq[i] - k as f64 * mean * mean).max(0.0) / (k - 1) as f64;
                    (var / k as f64).sqrt()
                } else {
                    0.0
                };
                MsdPoint {
                    t: self.times[i],
                    msd_mean: mean,
                    msd_se: se,
                    survivors: k,
                }
            })
            .collect();
        MsdCurve {
            points,
            walkers: self.walkers,
            total_jumps: self.jumps,
            integrated_degree: self.integrated_degree,
        }
    }
}

fn on_boundary(grid: &EdgeGrid, z: usize) -> bool {
    let n = grid.n();
    let (u, v) = grid.coords(z);
    u == 0 || v == 0 || u == n || v == n
}

fn walk(grid: &EdgeGrid, config: &WalkConfig, start: usize, rng: &mut ChaCha8Rng) -> Trace {
    let times = &config.sample_times;
    let (u0, v0) = grid.coords(start);
    let mut squared = vec![None; times.len()];
    let mut next_sample = 0;
    let mut t = 0.0;
    let mut z = start;
    let mut jumps = 0u64;
    let mut integrated_degree = 0.0;
    let mut absorbed = false;
    loop {
        let (nb, k) = grid.neighbors(z);
        let hold: f64 = rng.sample::<f64, _>(Exp1) / k as f64;
        let t_next = t + hold;
        while next_sample < times.len() && times[next_sample] < t_next {
            let (u, v) = grid.coords(z);
            let du = u as f64 - u0 as f64;
            let dv = v as f64 - v0 as f64;
            squared[next_sample] = Some(du * du + dv * dv);
            next_sample += 1;
        }
        if t_next > config.t_max {
            integrated_degree += k as f64 * (config.t_max - t);
            break;
        }
        integrated_degree += k as f64 * hold;
        z = nb[rng.random_range(0..k)];
        t = t_next;
        jumps += 1;
        if on_boundary(grid, z) {
            absorbed = true;
            break;
        }
    }
    if absorbed && config.boundary == BoundaryPolicy::RejectRun {
        squared.iter_mut().for_each(|s| *s = None);
    }
    Trace {
        squared,
        jumps,
        integrated_degree,
    }
}

/// Runs `config.n_walkers` independent walkers on `grid` and adds them to `acc`.
///
/// Walker `i` uses its own stream derived from `(seed, i)`, and traces are
/// folded in walker order, so the result does not depend on thread count.
pub fn accumulate_walks(
    grid: &EdgeGrid,
    config: &WalkConfig,
    seed: u64,
    acc: &mut MsdAccumulator,
) -> Result<(), WalkError> {
    config.check()?;
    let n = grid.n();
    let (su, sv) = config.start.unwrap_or((n / 2, n / 2));
    if su == 0 || sv == 0 || su >= n || sv >= n {
        return Err(WalkError::StartOutside(su, sv));
    }
    let start = grid.vertex(su, sv);
    if grid.degree(start) == 0 {
        return Err(WalkError::IsolatedStart(su, sv));
    }
    let traces: Vec<Trace> = (0..config.n_walkers)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream(seed, &[i as u64]));
            walk(grid, config, start, &mut rng)
        })
        .collect();
    for trace in &traces {
        acc.push(trace);
    }
    Ok(())
}

pub fn simulate_walks(grid: &EdgeGrid, config: &WalkConfig, seed: u64) -> Result<MsdCurve, WalkError> {
    let mut acc = MsdAccumulator::new(&config.sample_times);
    accumulate_walks(grid, config, seed, &mut acc)?;
    Ok(acc.finish())
}

/// Least-squares slope of `ln MSD` against `ln t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub fit_t_min: f64,
    pub fit_t_max: f64,
    pub points: usize,
    pub walkers: usize,
}

impl ExponentFit {
    /// Normal-approximation 95% interval for the slope.
    pub fn ci95(&self) -> (f64, f64) {
        (self.slope - 1.96 * self.slope_se, self.slope + 1.96 * self.slope_se)
    }
}

/// Relative slack on the fit window so geometric grids hit their nominal ends.
const WINDOW_SLACK: f64 = 1e-9;

/// Fits the MSD exponent over sample times in `[t_min, t_max]` where at least
/// [`FIT_SURVIVAL_FRACTION`] of the walkers survive and the MSD is positive.
pub fn fit_exponent(curve: &MsdCurve, t_min: f64, t_max: f64) -> Result<ExponentFit, WalkError> {
    const NEEDED: usize = 5;
    let usable: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.t >= t_min * (1.0 - WINDOW_SLACK) && p.t <= t_max * (1.0 + WINDOW_SLACK))
        .filter(|p| p.survivors as f64 >= FIT_SURVIVAL_FRACTION * curve.walkers as f64)
        .filter(|p| p.msd_mean > 0.0)
        .map(|p| (p.t.ln(), p.msd_mean.ln()))
        .collect();
    if usable.len() < NEEDED {
        return Err(WalkError::InsufficientData {
            needed: NEEDED,
            found: usable.len(),
        });
    }
    let m = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = usable
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_se = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        slope_se,
        intercept,
        fit_t_min: usable[0].0.exp(),
        fit_t_max: usable[usable.len() - 1].0.exp(),
        points: usable.len(),
        walkers: curve.walkers,
    })
}
