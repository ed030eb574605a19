//! The limit process two ways: Euler–Maruyama on the linear SDE
//! `dX = a(t) X dt + sqrt(b(t)) dC`, and exact sampling of `B(v(t)) / u(t)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, coefficients_from};
use crate::error::{domain, input, Result};
use crate::rng::LabRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeMode {
    Stochastic,
    /// Diffusion switched off: the ODE `dX = a(t) X dt`.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdePath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub mode: SdeMode,
}

/// Euler–Maruyama on a uniform step with coefficients tabulated once, so
/// many paths can share them.
#[derive(Debug, Clone)]
pub struct EulerScheme {
    t0: f64,
    step: f64,
    /// `a(t_k) / x` at the left end of each step.
    rate: Vec<f64>,
    /// `sqrt(b(t_k) h)`.
    noise_scale: Vec<f64>,
}

impl EulerScheme {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t0 > 1.0) {
            return Err(domain(format!("start time must exceed 1, got {t0}")));
        }
        if !(t1 > t0 && t1.is_finite()) {
            return Err(domain(format!("end time {t1} must exceed start {t0}")));
        }
        if steps == 0 {
            return Err(domain("need at least one step"));
        }
        let step = (t1 - t0) / steps as f64;
        let mut rate = Vec::with_capacity(steps);
        let mut noise_scale = Vec::with_capacity(steps);
        for k in 0..steps {
            let sc = analytic::scaling(t0 + k as f64 * step)?;
            let c = coefficients_from(&sc, 1.0);
            rate.push(c.drift);
            noise_scale.push((c.diffusion * step).sqrt());
        }
        Ok(EulerScheme {
            t0,
            step,
            rate,
            noise_scale,
        })
    }

    pub fn steps(&self) -> usize {
        self.rate.len()
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    /// Drift rate `a(t_k)/x` and diffusion `b(t_k)` at the left end of step `k`.
    pub fn coefficients(&self, k: usize) -> (f64, f64) {
        let s = self.noise_scale[k];
        (self.rate[k], s * s / self.step)
    }

    fn advance(&self, k: usize, x: f64, mode: SdeMode, rng: &mut LabRng) -> f64 {
        let mut next = x + self.rate[k] * x * self.step;
        if mode == SdeMode::Stochastic {
            let xi: f64 = rng.sample(StandardNormal);
            next += self.noise_scale[k] * xi;
        }
        next
    }

    pub fn final_value(&self, x0: f64, mode: SdeMode, rng: &mut LabRng) -> f64 {
        (0..self.steps()).fold(x0, |x, k| self.advance(k, x, mode, rng))
    }

    pub fn path(&self, x0: f64, mode: SdeMode, rng: &mut LabRng) -> SdePath {
        let steps = self.steps();
        let mut grid = Vec::with_capacity(steps + 1);
        let mut values = Vec::with_capacity(steps + 1);
        let mut x = x0;
        grid.push(self.t0);
        values.push(x);
        for k in 0..steps {
            x = self.advance(k, x, mode, rng);
            grid.push(self.t0 + (k + 1) as f64 * self.step);
            values.push(x);
        }
        SdePath { grid, values, mode }
    }
}

pub fn euler_maruyama(
    t0: f64,
    t1: f64,
    x0: f64,
    steps: usize,
    mode: SdeMode,
    rng: &mut LabRng,
) -> Result<SdePath> {
    if !x0.is_finite() {
        return Err(domain(format!("initial value must be finite, got {x0}")));
    }
    Ok(EulerScheme::new(t0, t1, steps)?.path(x0, mode, rng))
}

/// Initial value drawn from the limit marginal `Normal(0, sigma2(t0))`.
pub fn stationary_start(t0: f64, rng: &mut LabRng) -> Result<f64> {
    let sd = analytic::scaling(t0)?.sigma2.sqrt();
    let xi: f64 = rng.sample(StandardNormal);
    Ok(sd * xi)
}

/// Precomputed `v` and `u` on a grid for repeated exact sampling.
#[derive(Debug, Clone)]
pub struct ClosedFormSampler {
    grid: Vec<f64>,
    /// Standard deviation of each Brownian increment in the clock `v`.
    increment_sd: Vec<f64>,
    u: Vec<f64>,
}

impl ClosedFormSampler {
    pub fn new(grid: &[f64]) -> Result<Self> {
        if grid.is_empty() {
            return Err(input("grid is empty"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(input("grid must be strictly increasing"));
        }
        let mut increment_sd = Vec::with_capacity(grid.len());
        let mut u = Vec::with_capacity(grid.len());
        let mut prev_v = 0.0;
        for &t in grid {
            let sc = analytic::scaling(t)?;
            increment_sd.push((sc.v - prev_v).sqrt());
            u.push(sc.u);
            prev_v = sc.v;
        }
        Ok(ClosedFormSampler {
            grid: grid.to_vec(),
            increment_sd,
            u,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Fills `out` with one sample of `B(v(t_k)) / u(t_k)`.
    pub fn sample_into(&self, rng: &mut LabRng, out: &mut Vec<f64>) {
        out.clear();
        let mut b = 0.0;
        for (sd, u) in self.increment_sd.iter().zip(&self.u) {
            let xi: f64 = rng.sample(StandardNormal);
            b += sd * xi;
            out.push(b / u);
        }
    }

    pub fn sample(&self, rng: &mut LabRng) -> SdePath {
        let mut values = Vec::with_capacity(self.grid.len());
        self.sample_into(rng, &mut values);
        SdePath {
            grid: self.grid.clone(),
            values,
            mode: SdeMode::Stochastic,
        }
    }
}

pub fn closed_form_sample(grid: &[f64], rng: &mut LabRng) -> Result<SdePath> {
    Ok(ClosedFormSampler::new(grid)?.sample(rng))
}
