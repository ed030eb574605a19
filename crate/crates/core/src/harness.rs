//! Monte Carlo campaigns over the graph process and the statistical checks
//! that compare them with the limit process.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::analytic;
use crate::appendixlab::{tail_check, ExceedanceReport};
use crate::error::{domain, input, Error, Result};
use crate::graphproc::{fluctuation_path, sample_edge_stream, trajectory, FluctuationPath};
use crate::rng::{replication_seed, rng_from_seed};
use crate::sde::ClosedFormSampler;
use crate::stats::{Estimate, McStats};

/// Fewest replications the verifiers accept.
pub const MIN_VERIFY_COUNT: u64 = 100;

/// Fewest samples the normality test accepts.
pub const MIN_KS_SAMPLES: usize = 100;

/// Asymptotic 1% critical value of the Kolmogorov–Smirnov statistic, times
/// `sqrt(n)`.
pub const KS_CRITICAL_1PCT: f64 = 1.63;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub n: usize,
    pub t0: f64,
    pub t1: f64,
    /// Number of grid points, spaced uniformly in the clock `v`.
    pub grid_points: usize,
    /// Explicit grid inside `[t0, t1]`; overrides `grid_points`.
    pub grid: Option<Vec<f64>>,
    pub replications: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            n: 10_000,
            t0: 1.5,
            t1: 3.0,
            grid_points: 8,
            grid: None,
            replications: 1000,
            master_seed: 0x6a09_e667_f3bc_c908,
            workers: 0,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 1.0 && self.t1 > self.t0) {
            return Err(domain(format!(
                "window must satisfy 1 < t0 < t1, got [{}, {}]",
                self.t0, self.t1
            )));
        }
        if !(self.t1 < self.n as f64) {
            return Err(domain(format!(
                "t1 = {} must stay below n = {}",
                self.t1, self.n
            )));
        }
        if self.replications < 2 {
            return Err(domain(format!(
                "need at least 2 replications, got {}",
                self.replications
            )));
        }
        match &self.grid {
            Some(g) => {
                if g.is_empty() {
                    return Err(input("explicit grid is empty"));
                }
                if g.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(input("explicit grid must be strictly increasing"));
                }
                if g[0] < self.t0 || g[g.len() - 1] > self.t1 {
                    return Err(input("explicit grid must lie inside [t0, t1]"));
                }
            }
            None if self.grid_points == 0 => return Err(domain("grid_points must be >= 1")),
            None => {}
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<Vec<f64>> {
        match &self.grid {
            Some(g) => Ok(g.clone()),
            None => v_uniform_grid(self.t0, self.t1, self.grid_points),
        }
    }
}

/// `points` times from `t0` to `t1` with equal gaps in `v(t)`.
pub fn v_uniform_grid(t0: f64, t1: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(domain("grid needs at least one point"));
    }
    if points == 1 {
        return Ok(vec![t0]);
    }
    let (v0, v1) = (analytic::scaling(t0)?.v, analytic::scaling(t1)?.v);
    let mut grid = Vec::with_capacity(points);
    grid.push(t0);
    for k in 1..points - 1 {
        let s = v0 + (v1 - v0) * k as f64 / (points - 1) as f64;
        grid.push(analytic::v_inverse(s)?);
    }
    grid.push(t1);
    Ok(grid)
}

/// One replication of the graph process rescaled on `grid`.
pub fn simulate_replication(n: usize, grid: &[f64], seed: u64) -> Result<FluctuationPath> {
    let t_max = *grid.last().ok_or_else(|| input("grid is empty"))?;
    let stream = sample_edge_stream(n, t_max, seed)?;
    fluctuation_path(&trajectory(&stream, grid)?)
}

/// All replications of a campaign, in replication order.
#[derive(Debug, Clone)]
pub struct CampaignRun {
    pub stats: McStats,
    pub paths: Vec<FluctuationPath>,
}

impl CampaignRun {
    /// `X_n` at grid index `i` across replications.
    pub fn x_at(&self, i: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.x[i]).collect()
    }

    pub fn all_x(&self) -> Vec<f64> {
        self.paths
            .iter()
            .flat_map(|p| p.x.iter().copied())
            .collect()
    }
}

pub fn run_campaign_full(config: &CampaignConfig) -> Result<CampaignRun> {
    config.validate()?;
    let grid = config.time_grid()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Sizing(format!("cannot start worker pool: {e}")))?;
    let paths = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|r| {
                simulate_replication(
                    config.n,
                    &grid,
                    replication_seed(config.master_seed, r as u64),
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;
    // canonical order: replication index
    let mut stats = McStats::new(&grid);
    for p in &paths {
        stats.push(&p.x, &p.z)?;
    }
    Ok(CampaignRun { stats, paths })
}

pub fn run_campaign(config: &CampaignConfig) -> Result<McStats> {
    Ok(run_campaign_full(config)?.stats)
}

/// Statistics of `samples` exact draws of the limit process on `grid`,
/// optionally scaled by `factor` (fault injection).
pub fn closed_form_stats(grid: &[f64], samples: usize, seed: u64, factor: f64) -> Result<McStats> {
    let sampler = ClosedFormSampler::new(grid)?;
    let u: Vec<f64> = grid
        .iter()
        .map(|&t| analytic::scaling(t).map(|s| s.u))
        .collect::<Result<_>>()?;
    let mut rng = rng_from_seed(seed);
    let mut stats = McStats::new(grid);
    let mut x = Vec::with_capacity(grid.len());
    let mut z = vec![0.0; grid.len()];
    for _ in 0..samples {
        sampler.sample_into(&mut rng, &mut x);
        for (k, xk) in x.iter_mut().enumerate() {
            *xk *= factor;
            z[k] = u[k] * *xk;
        }
        stats.push(&x, &z)?;
    }
    Ok(stats)
}

/// Pass when `|empirical - theoretical| <= max(n_se * se, rel_floor * |theoretical|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TolerancePolicy {
    pub n_se: f64,
    pub rel_floor: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            n_se: 3.0,
            rel_floor: 0.10,
        }
    }
}

impl TolerancePolicy {
    /// Standard errors only, no relative floor.
    pub fn strict(n_se: f64) -> Self {
        TolerancePolicy {
            n_se,
            rel_floor: 0.0,
        }
    }

    pub fn allowance(&self, theoretical: f64, se: f64) -> f64 {
        (self.n_se * se).max(self.rel_floor * theoretical.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub pair: [f64; 2],
    pub empirical: f64,
    pub theoretical: f64,
    pub se: f64,
    pub abs_error: f64,
    /// Error in units of the jackknife standard error.
    pub se_units: f64,
    pub decision: Decision,
}

impl Comparison {
    fn new(pair: [f64; 2], est: Estimate, theoretical: f64, policy: &TolerancePolicy) -> Self {
        let abs_error = (est.value - theoretical).abs();
        let pass = abs_error <= policy.allowance(theoretical, est.se);
        Comparison {
            pair,
            empirical: est.value,
            theoretical,
            se: est.se,
            abs_error,
            se_units: abs_error / est.se,
            decision: if pass { Decision::Pass } else { Decision::Fail },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub count: u64,
    pub policy: TolerancePolicy,
    pub comparisons: Vec<Comparison>,
    pub passed: bool,
}

fn require_count(stats: &McStats) -> Result<()> {
    if stats.count < MIN_VERIFY_COUNT {
        return Err(Error::Refused(format!(
            "need at least {MIN_VERIFY_COUNT} replications for standard errors, got {}",
            stats.count
        )));
    }
    Ok(())
}

fn report(
    check: &str,
    stats: &McStats,
    policy: &TolerancePolicy,
    comparisons: Vec<Comparison>,
) -> VerificationReport {
    let passed = comparisons.iter().all(|c| c.decision == Decision::Pass);
    VerificationReport {
        check: check.to_string(),
        count: stats.count,
        policy: *policy,
        comparisons,
        passed,
    }
}

/// Every empirical covariance `Cov(X(s), X(t))`, diagonal included, against
/// the limit kernel.
pub fn verify_covariance(stats: &McStats, policy: &TolerancePolicy) -> Result<VerificationReport> {
    require_count(stats)?;
    let g = &stats.grid;
    let mut out = Vec::new();
    for i in 0..g.len() {
        for j in i..g.len() {
            let theory = analytic::cov_kernel(g[i], g[j])?;
            out.push(Comparison::new(
                [g[i], g[j]],
                stats.cov(i, j),
                theory,
                policy,
            ));
        }
    }
    Ok(report("covariance", stats, policy, out))
}

/// Variances of consecutive increments of `Z_n` against the clock gaps.
pub fn verify_brownian_increments(
    stats: &McStats,
    policy: &TolerancePolicy,
) -> Result<VerificationReport> {
    require_count(stats)?;
    let g = &stats.grid;
    let mut out = Vec::new();
    for k in 0..g.len().saturating_sub(1) {
        let gap = analytic::scaling(g[k + 1])?.v - analytic::scaling(g[k])?.v;
        out.push(Comparison::new(
            [g[k], g[k + 1]],
            stats.z_increment_var(k),
            gap,
            policy,
        ));
    }
    Ok(report("brownian_increments", stats, policy, out))
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// `cdf`, with no standardization.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub samples: usize,
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

/// Standardizes by the sample mean and deviation, then tests against the
/// standard normal at the 1% level.
pub fn ks_normality(samples: &[f64]) -> Result<KsResult> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::Refused(format!(
            "normality test needs at least {MIN_KS_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    let statistic = ks_statistic(&z, standard_normal_cdf);
    let critical = KS_CRITICAL_1PCT / n.sqrt();
    Ok(KsResult {
        samples: samples.len(),
        statistic,
        critical,
        reject: statistic >= critical,
    })
}

/// Full verification of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub covariance: VerificationReport,
    pub increments: VerificationReport,
    /// Normality of `X_n` at the grid point closest to `t = 2`.
    pub normality_time: f64,
    pub normality: KsResult,
    pub tail_gamma: f64,
    pub tail: ExceedanceReport,
    pub passed: bool,
}

pub fn verify_campaign(
    config: &CampaignConfig,
    run: &CampaignRun,
    policy: &TolerancePolicy,
    tail_gamma: f64,
) -> Result<CampaignReport> {
    let covariance = verify_covariance(&run.stats, policy)?;
    let increments = verify_brownian_increments(&run.stats, policy)?;
    let grid = &run.stats.grid;
    let idx = (0..grid.len())
        .min_by(|&a, &b| (grid[a] - 2.0).abs().total_cmp(&(grid[b] - 2.0).abs()))
        .ok_or_else(|| input("empty grid"))?;
    let normality = ks_normality(&run.x_at(idx))?;
    let tail = tail_check(&run.all_x(), config.n, tail_gamma)?;
    let passed = covariance.passed && increments.passed && !normality.reject && tail.passed();
    Ok(CampaignReport {
        config: config.clone(),
        covariance,
        increments,
        normality_time: grid[idx],
        normality,
        tail_gamma,
        tail,
        passed,
    })
}
