//! Total progeny of the Bienaymé–Galton–Watson process with binomial
//! `Bin(m, p)` offspring, and the component-size domination bounds it
//! provides for Erdős–Rényi graphs.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::rng::LabRng;

/// Individual cap of [`sample_total_progeny`].
pub const PROGENY_CAP: u64 = 1_000_000_000;

/// Largest vertex count accepted by [`check_domination`].
pub const DOMINATION_MAX_N: usize = 6;

/// Offspring law `Bin(m, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BgwParams {
    pub m: u64,
    pub p: f64,
}

impl BgwParams {
    pub fn new(m: u64, p: f64) -> Result<Self> {
        if m == 0 {
            return Err(domain("offspring trial count must be positive"));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!(
                "offspring probability must lie in (0,1), got {p}"
            )));
        }
        Ok(BgwParams { m, p })
    }

    /// Mean offspring `m p`.
    pub fn mean_offspring(&self) -> f64 {
        self.m as f64 * self.p
    }

    pub fn is_subcritical(&self) -> bool {
        self.mean_offspring() < 1.0
    }
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `P(T = k)` for the total progeny `T`, by the hitting-time formula
/// `(1/k) C(mk, k-1) p^(k-1) (1-p)^(mk-k+1)`.
pub fn total_progeny_pmf(params: BgwParams, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(domain("total progeny is at least 1"));
    }
    let trials = params
        .m
        .checked_mul(k)
        .filter(|&t| t < (1u64 << 53))
        .ok_or_else(|| Error::Numeric(format!("m*k overflows for m={}, k={k}", params.m)))?;
    let (trials, kf) = (trials as f64, k as f64);
    let log = -kf.ln()
        + ln_choose(trials, kf - 1.0)
        + (kf - 1.0) * params.p.ln()
        + (trials - kf + 1.0) * (-params.p).ln_1p();
    Ok(log.exp().clamp(0.0, 1.0))
}

/// Closed-form mean `1/(1-mp)` and variance `mp(1-p)/(1-mp)^3`.
pub fn total_progeny_moments(params: BgwParams) -> Result<(f64, f64)> {
    let mp = params.mean_offspring();
    if mp >= 1.0 {
        return Err(domain(format!(
            "progeny moments diverge for m*p = {mp} >= 1"
        )));
    }
    let gap = 1.0 - mp;
    Ok((1.0 / gap, mp * (1.0 - params.p) / (gap * gap * gap)))
}

/// `P(T >= k) = 1 - sum_{j<k} P(T = j)`; valid for any `m p`.
pub fn total_progeny_tail(params: BgwParams, k: u64) -> Result<f64> {
    let mut below = 0.0;
    for j in 1..k {
        below += total_progeny_pmf(params, j)?;
    }
    Ok((1.0 - below).max(0.0))
}

/// Sums of the pmf truncated by the relative stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSums {
    pub mass: f64,
    pub mean: f64,
    pub second_moment: f64,
    /// Last `k` included.
    pub last_k: u64,
}

impl TruncatedSums {
    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }
}

/// Sums `pmf`, `k pmf` and `k^2 pmf` until the first `k > 10 mean` whose pmf
/// falls below `1e-14` of the running mass.
pub fn truncated_sums(params: BgwParams) -> Result<TruncatedSums> {
    let (mean, _) = total_progeny_moments(params)?;
    let mut s = TruncatedSums {
        mass: 0.0,
        mean: 0.0,
        second_moment: 0.0,
        last_k: 0,
    };
    let mut k = 1u64;
    loop {
        let pk = total_progeny_pmf(params, k)?;
        let kf = k as f64;
        if kf > 10.0 * mean && pk < 1e-14 * s.mass {
            break;
        }
        s.mass += pk;
        s.mean += kf * pk;
        s.second_moment += kf * kf * pk;
        s.last_k = k;
        k += 1;
    }
    Ok(s)
}

/// Borel law `e^{-lk} (lk)^{k-1} / k!`, the Poisson-offspring limit of the
/// binomial progeny as `m -> inf` with `m p -> l`.
pub fn borel_pmf(lambda: f64, k: u64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) || k == 0 {
        return Err(domain(format!(
            "borel pmf needs 0 < lambda < 1 and k >= 1, got ({lambda}, {k})"
        )));
    }
    let kf = k as f64;
    let lk = lambda * kf;
    Ok((-lk + (kf - 1.0) * lk.ln() - ln_gamma(kf + 1.0)).exp())
}

/// Exact breadth-first sampler of the total progeny.
#[derive(Debug, Clone)]
pub struct ProgenySampler {
    offspring: Binomial,
    cap: u64,
}

impl ProgenySampler {
    pub fn new(params: BgwParams) -> Result<Self> {
        Self::with_cap(params, PROGENY_CAP)
    }

    pub fn with_cap(params: BgwParams, cap: u64) -> Result<Self> {
        let offspring =
            Binomial::new(params.m, params.p).map_err(|e| domain(format!("offspring law: {e}")))?;
        Ok(ProgenySampler { offspring, cap })
    }

    pub fn sample(&self, rng: &mut LabRng) -> Result<u64> {
        let mut total = 1u64;
        let mut waiting = 1u64;
        while waiting > 0 {
            waiting -= 1;
            let children = self.offspring.sample(rng);
            total += children;
            waiting += children;
            if total > self.cap {
                return Err(Error::Runaway { cap: self.cap });
            }
        }
        Ok(total)
    }
}

pub fn sample_total_progeny(params: BgwParams, rng: &mut LabRng) -> Result<u64> {
    ProgenySampler::new(params)?.sample(rng)
}

/// Exact tails of the component of a fixed vertex in `ER(n, p)` next to the
/// two progeny tails that sandwich it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub n: usize,
    pub p: f64,
    pub k: Vec<usize>,
    /// `P(L_{n,p} >= k)`.
    pub component_tail: Vec<f64>,
    /// `P(T_{n,p} >= k)`.
    pub upper_tail: Vec<f64>,
    /// `P(T_{n-k,p} >= k)`.
    pub lower_tail: Vec<f64>,
    pub upper_margin: Vec<f64>,
    pub lower_margin: Vec<f64>,
    pub holds: bool,
}

/// Rounding slack when comparing tails that coincide (e.g. at `k = 1`).
const DOMINATION_SLACK: f64 = 1e-12;

/// Enumerates every graph on `n <= 6` vertices to get the law of the
/// component of vertex 0 and compares it with the progeny tails.
pub fn check_domination(n: usize, p: f64) -> Result<DominationReport> {
    if n > DOMINATION_MAX_N {
        return Err(Error::Refused(format!(
            "exhaustive enumeration limited to n <= {DOMINATION_MAX_N}, got {n}"
        )));
    }
    if n < 2 {
        return Err(domain(format!("need n >= 2, got {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("p must lie in (0,1), got {p}")));
    }
    let law = component_law(n, p);
    let mut report = DominationReport {
        n,
        p,
        k: Vec::new(),
        component_tail: Vec::new(),
        upper_tail: Vec::new(),
        lower_tail: Vec::new(),
        upper_margin: Vec::new(),
        lower_margin: Vec::new(),
        holds: true,
    };
    let upper_params = BgwParams::new(n as u64, p)?;
    for k in 1..=n {
        let comp: f64 = law[k..].iter().sum();
        let upper = total_progeny_tail(upper_params, k as u64)?;
        let lower = match n - k {
            // BGW(0, p): the root alone
            0 => f64::from(k <= 1),
            m => total_progeny_tail(BgwParams::new(m as u64, p)?, k as u64)?,
        };
        report.k.push(k);
        report.component_tail.push(comp);
        report.upper_tail.push(upper);
        report.lower_tail.push(lower);
        report.upper_margin.push(upper - comp);
        report.lower_margin.push(comp - lower);
        if upper - comp < -DOMINATION_SLACK || comp - lower < -DOMINATION_SLACK {
            report.holds = false;
        }
    }
    Ok(report)
}

/// `law[s] = P(|C(0)| = s)` in `ER(n, p)` by enumerating all edge subsets.
fn component_law(n: usize, p: f64) -> Vec<f64> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let total = pairs.len();
    let mut law = vec![0.0; n + 1];
    for mask in 0u32..(1 << total) {
        let edges = mask.count_ones() as i32;
        let weight = p.powi(edges) * (1.0 - p).powi(total as i32 - edges);
        let mut adj = vec![0u32; n];
        for (b, &(i, j)) in pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
        let mut reached = 1u32;
        let mut frontier = 1u32;
        while frontier != 0 {
            let mut next = 0;
            for (v, row) in adj.iter().enumerate() {
                if frontier >> v & 1 == 1 {
                    next |= row;
                }
            }
            frontier = next & !reached;
            reached |= next;
        }
        law[reached.count_ones() as usize] += weight;
    }
    law
}
