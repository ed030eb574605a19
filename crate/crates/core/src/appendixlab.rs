//! Exact and asymptotic component statistics in the parametrization where
//! each edge is present with probability `1 - exp(-s)`, `s = y / n`.

use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::graphproc::{component_sizes, sample_edge_stream};
use crate::rng::replication_seed;

mod fixed;

/// Largest vertex count of the connectivity recursion.
pub const CONNECTIVITY_MAX_N: usize = 1000;

/// Fractional bits of the fixed-point connectivity recursion.
pub const CONNECTIVITY_FRAC_BITS: u64 = 2304;

/// Connectivity probabilities `P_1(s), P_2(s), ...` for one fixed `s`.
///
/// The recursion conditions on the size `k` of the component holding a
/// marked vertex: `P_m = 1 - sum_k C(m-1, k-1) P_k q^{k(m-k)}` with
/// `q = e^{-s}`. The weights `C(m-1,k-1) q^{k(m-k)}` reach `e^{20}` and more
/// for small `s`, so rounding errors compound over the levels (about fifty
/// decimal digits are lost at `n = 600`, `s = 0.005`). The recursion is
/// therefore run in big-integer fixed point.
#[derive(Debug, Clone)]
pub struct ConnectivityTable {
    s: f64,
    frac_bits: u64,
    /// `q^d` for `d = 0..`.
    q_powers: Vec<BigInt>,
    /// Index 0 unused.
    probs: Vec<BigInt>,
}

impl ConnectivityTable {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_precision(s, CONNECTIVITY_FRAC_BITS)
    }

    pub fn with_precision(s: f64, frac_bits: u64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(domain(format!("rate parameter must be positive, got {s}")));
        }
        let one = fixed::one(frac_bits);
        Ok(ConnectivityTable {
            s,
            frac_bits,
            q_powers: vec![one.clone(), fixed::exp_neg(s, frac_bits)],
            probs: vec![BigInt::zero(), one],
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn prob(&mut self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(domain("connectivity of the empty graph is undefined"));
        }
        if n > CONNECTIVITY_MAX_N {
            return Err(Error::Refused(format!(
                "connectivity recursion limited to n <= {CONNECTIVITY_MAX_N}, got {n}"
            )));
        }
        while self.probs.len() <= n {
            self.extend();
        }
        Ok(fixed::to_f64(&self.probs[n], self.frac_bits).clamp(0.0, 1.0))
    }

    fn q_pow(&mut self, d: usize) -> &BigInt {
        while self.q_powers.len() <= d {
            let next = fixed::mul(
                &self.q_powers[self.q_powers.len() - 1],
                &self.q_powers[1],
                self.frac_bits,
            );
            self.q_powers.push(next);
        }
        &self.q_powers[d]
    }

    fn extend(&mut self) {
        let m = self.probs.len();
        let b = self.frac_bits;
        self.q_pow(m);
        // q^{k(m-k)} for k <= m/2; the exponent grows by m - 2k + 1 per step
        let half = m / 2;
        let mut weights = Vec::with_capacity(half + 1);
        weights.push(fixed::one(b));
        for k in 1..=half {
            let w = fixed::mul(&weights[k - 1], &self.q_powers[m - 2 * k + 1], b);
            weights.push(w);
        }
        let mut binom = BigInt::one();
        let mut sum = BigInt::zero();
        for k in 1..m {
            if k > 1 {
                // C(m-1, k-1) from C(m-1, k-2)
                binom = binom * (m - k + 1) / (k - 1);
            }
            let w = &weights[k.min(m - k)];
            sum += &binom * fixed::mul(&self.probs[k], w, b);
        }
        self.probs.push(fixed::one(b) - sum);
    }
}

thread_local! {
    static TABLES: RefCell<HashMap<u64, ConnectivityTable>> = RefCell::new(HashMap::new());
}

fn with_table<T>(s: f64, f: impl FnOnce(&mut ConnectivityTable) -> Result<T>) -> Result<T> {
    TABLES.with(|cell| {
        let mut tables = cell.borrow_mut();
        let table = match tables.entry(s.to_bits()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(ConnectivityTable::new(s)?),
        };
        f(table)
    })
}

/// Probability that `ER(n, 1 - exp(-s))` is connected. Tables are memoized
/// per thread and per `s`.
pub fn connectivity_prob(n: usize, s: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("connectivity of the empty graph is undefined"));
    }
    with_table(s, |t| t.prob(n))
}

/// `(1 - y/(e^y - 1)) (1 - e^{-y})^n`, the large-`n` form of `P_n(y/n)`.
pub fn stepanov_asymptotic(n: usize, y: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("need n >= 1"));
    }
    if !(y >= 1.0) || !y.is_finite() {
        return Err(domain(format!("need finite y >= 1, got {y}")));
    }
    let prefactor = 1.0 - y / y.exp_m1();
    Ok(prefactor * (n as f64 * (-(-y).exp_m1()).ln()).exp())
}

/// Expected number of components of order `k` in `ER(n, 1 - exp(-y/n))`:
/// `C(n,k) e^{-yk(1-k/n)} P_k(y/n)`.
pub fn expected_components(n: usize, k: usize, y: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(domain(format!(
            "component order must satisfy 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    if !(y > 0.0 && y.is_finite()) {
        return Err(domain(format!("need y > 0, got {y}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let ln_binom = ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
    let p_k = connectivity_prob(k, y / nf)?;
    Ok((ln_binom - y * kf * (1.0 - kf / nf)).exp() * p_k)
}

/// Large-deviation exponent in its two parametrizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdFunctions {
    pub x: f64,
    pub y: f64,
    /// `1 - e^{-xy} - x`.
    pub delta: f64,
    /// Exponent evaluated from `(x, y)`.
    pub phi: f64,
    /// Same exponent evaluated from `(x, delta)`; stable near `delta = 0`.
    pub psi: f64,
}

/// `x ln(1 + d/x) + (1-x) ln(1 - d/(1-x))`.
pub fn psi(x: f64, delta: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(domain(format!("x must lie in (0,1), got {x}")));
    }
    if !(delta > -x && delta < 1.0 - x) {
        return Err(domain(format!("delta must lie in (-x, 1-x), got {delta}")));
    }
    Ok(x * (delta / x).ln_1p() + (1.0 - x) * (-delta / (1.0 - x)).ln_1p())
}

pub fn ld_functions(x: f64, y: f64) -> Result<LdFunctions> {
    if !(x > 0.0 && x < 1.0) {
        return Err(domain(format!("x must lie in (0,1), got {x}")));
    }
    if !(y > 1.0 && y.is_finite()) {
        return Err(domain(format!("y must exceed 1, got {y}")));
    }
    let xy = x * y;
    // 1 - e^{-xy}
    let hit = -(-xy).exp_m1();
    let delta = hit - x;
    let phi = -xy * (1.0 - x) + x * hit.ln() - x * x.ln() - (1.0 - x) * (-x).ln_1p();
    Ok(LdFunctions {
        x,
        y,
        delta,
        phi,
        psi: psi(x, delta)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceReport {
    pub count: usize,
    pub threshold: f64,
    pub sample_size: usize,
    pub max_abs: f64,
}

impl ExceedanceReport {
    pub fn passed(&self) -> bool {
        self.count == 0
    }
}

pub fn count_exceedances(samples: &[f64], threshold: f64) -> ExceedanceReport {
    ExceedanceReport {
        count: samples.iter().filter(|x| x.abs() > threshold).count(),
        threshold,
        sample_size: samples.len(),
        max_abs: samples.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

/// Counts fluctuation samples with `|X| > n^gamma`.
pub fn tail_check(samples: &[f64], n: usize, gamma: f64) -> Result<ExceedanceReport> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(domain(format!("gamma must lie in (0, 0.5), got {gamma}")));
    }
    Ok(count_exceedances(samples, (n as f64).powf(gamma)))
}

/// Largest components of `reps` subcritical graphs `ER(n, c/n)` against the
/// threshold `ln^2 n`.
pub fn subcritical_component_check(
    n: usize,
    c: f64,
    reps: usize,
    seed: u64,
) -> Result<ExceedanceReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(domain(format!("mean degree must lie in (0,1), got {c}")));
    }
    let maxima = (0..reps)
        .map(|r| {
            let stream = sample_edge_stream(n, c, replication_seed(seed, r as u64))?;
            let sizes = component_sizes(n, stream.edges_at(c));
            Ok(sizes[0] as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let ln = (n as f64).ln();
    Ok(count_exceedances(&maxima, ln * ln))
}

/// Monte Carlo mean and standard error of the number of components of
/// each order `1..=k_max` in `ER(n, 1 - exp(-y/n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCountEstimate {
    pub n: usize,
    pub y: f64,
    pub reps: usize,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

pub fn simulate_component_counts(
    n: usize,
    y: f64,
    k_max: usize,
    reps: usize,
    seed: u64,
) -> Result<ComponentCountEstimate> {
    if reps < 2 {
        return Err(domain("need at least two replications"));
    }
    // edge probability t/n = 1 - e^{-y/n}
    let t = -(n as f64) * (-y / n as f64).exp_m1();
    let mut sum = vec![0.0; k_max];
    let mut sum_sq = vec![0.0; k_max];
    for r in 0..reps {
        let stream = sample_edge_stream(n, t, replication_seed(seed, r as u64))?;
        let mut counts = vec![0.0; k_max];
        for size in component_sizes(n, stream.edges_at(t)) {
            if size <= k_max {
                counts[size - 1] += 1.0;
            }
        }
        for k in 0..k_max {
            sum[k] += counts[k];
            sum_sq[k] += counts[k] * counts[k];
        }
    }
    let rf = reps as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / rf).collect();
    let se = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq - rf * m * m) / (rf - 1.0) / rf).sqrt())
        .collect();
    Ok(ComponentCountEstimate {
        n,
        y,
        reps,
        mean,
        se,
    })
}

/// One row of an appendix sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub y: f64,
    pub expected_components: f64,
    /// `P_n(y/n)` over its asymptotic form.
    pub connectivity_ratio: f64,
}

pub fn appendix_sweep(ns: &[usize], ks: &[usize], ys: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &y in ys {
            let ratio = connectivity_prob(n, y / n as f64)? / stepanov_asymptotic(n, y)?;
            for &k in ks.iter().filter(|&&k| k <= n) {
                rows.push(SweepRow {
                    n,
                    k,
                    y,
                    expected_components: expected_components(n, k, y)?,
                    connectivity_ratio: ratio,
                });
            }
        }
    }
    Ok(rows)
}
