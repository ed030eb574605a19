//! Streaming, mergeable moment accumulators.
//!
//! Each pair of coordinates keeps compensated power sums up to the mixed
//! fourth order. That is enough to recover the sample covariance and its
//! exact leave-one-out jackknife error without keeping the samples.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Power sums of a pair `(x, y)` up to `x^2 y^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairSums {
    x: CompensatedSum,
    y: CompensatedSum,
    xy: CompensatedSum,
    xx: CompensatedSum,
    yy: CompensatedSum,
    xxy: CompensatedSum,
    xyy: CompensatedSum,
    xxyy: CompensatedSum,
}

/// Covariance estimate with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl PairSums {
    pub fn push(&mut self, x: f64, y: f64) {
        let (xx, yy, xy) = (x * x, y * y, x * y);
        self.x.add(x);
        self.y.add(y);
        self.xy.add(xy);
        self.xx.add(xx);
        self.yy.add(yy);
        self.xxy.add(xx * y);
        self.xyy.add(x * yy);
        self.xxyy.add(xx * yy);
    }

    pub fn merge(&mut self, o: &PairSums) {
        self.x.merge(&o.x);
        self.y.merge(&o.y);
        self.xy.merge(&o.xy);
        self.xx.merge(&o.xx);
        self.yy.merge(&o.yy);
        self.xxy.merge(&o.xxy);
        self.xyy.merge(&o.xyy);
        self.xxyy.merge(&o.xxyy);
    }

    /// Unbiased sample covariance over `n` samples.
    pub fn covariance(&self, n: u64) -> f64 {
        let nf = n as f64;
        (self.xy.value() - self.x.value() * self.y.value() / nf) / (nf - 1.0)
    }

    /// Covariance and its jackknife standard error. The leave-one-out
    /// estimate is `const + g_k` with `g_k` quadratic in `(x_k, y_k)`, so the
    /// jackknife variance reduces to power sums.
    pub fn covariance_estimate(&self, n: u64) -> Estimate {
        let value = self.covariance(n);
        if n < 3 {
            return Estimate {
                value,
                se: f64::NAN,
            };
        }
        let nf = n as f64;
        let a = 1.0 / (nf - 2.0);
        let b = 1.0 / ((nf - 1.0) * (nf - 2.0));
        let c = a + b;
        let (sx, sy, sxy) = (self.x.value(), self.y.value(), self.xy.value());
        let sum_g = -c * sxy + 2.0 * b * sx * sy;
        let sum_g2 = c * c * self.xxyy.value()
            + b * b * (sy * sy * self.xx.value() + sx * sx * self.yy.value())
            - 2.0 * c * b * (sy * self.xxy.value() + sx * self.xyy.value())
            + 2.0 * b * b * sx * sy * sxy;
        let spread = (sum_g2 - sum_g * sum_g / nf).max(0.0);
        Estimate {
            value,
            se: ((nf - 1.0) / nf * spread).sqrt(),
        }
    }

    pub fn mean_x(&self, n: u64) -> f64 {
        self.x.value() / n as f64
    }
}

/// Replication statistics of `X_n` on a fixed grid plus the increments of
/// the time-changed process `Z_n` between consecutive grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub grid: Vec<f64>,
    pub count: u64,
    /// Upper triangle, row-major, diagonal included.
    cov_sums: Vec<PairSums>,
    inc_sums: Vec<PairSums>,
}

impl McStats {
    pub fn new(grid: &[f64]) -> Self {
        let g = grid.len();
        McStats {
            grid: grid.to_vec(),
            count: 0,
            cov_sums: vec![PairSums::default(); g * (g + 1) / 2],
            inc_sums: vec![PairSums::default(); g.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn tri(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let g = self.grid.len();
        i * g - i * (i + 1) / 2 + j
    }

    /// Adds one replication: `x` at the grid points and `z` its time change.
    pub fn push(&mut self, x: &[f64], z: &[f64]) -> Result<()> {
        let g = self.grid.len();
        if x.len() != g || z.len() != g {
            return Err(input(format!(
                "sample lengths ({}, {}) do not match grid of {g}",
                x.len(),
                z.len()
            )));
        }
        for i in 0..g {
            for j in i..g {
                let idx = self.tri(i, j);
                self.cov_sums[idx].push(x[i], x[j]);
            }
        }
        for k in 0..g.saturating_sub(1) {
            let d = z[k + 1] - z[k];
            self.inc_sums[k].push(d, d);
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &McStats) -> Result<()> {
        if self.grid != other.grid {
            return Err(input("cannot merge statistics over different grids"));
        }
        for (a, b) in self.cov_sums.iter_mut().zip(&other.cov_sums) {
            a.merge(b);
        }
        for (a, b) in self.inc_sums.iter_mut().zip(&other.inc_sums) {
            a.merge(b);
        }
        self.count += other.count;
        Ok(())
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.cov_sums[self.tri(i, i)].mean_x(self.count)
    }

    pub fn cov(&self, i: usize, j: usize) -> Estimate {
        self.cov_sums[self.tri(i, j)].covariance_estimate(self.count)
    }

    /// Variance of `Z(v(t_{k+1})) - Z(v(t_k))`.
    pub fn z_increment_var(&self, k: usize) -> Estimate {
        self.inc_sums[k].covariance_estimate(self.count)
    }

    pub fn cov_matrix(&self) -> Vec<Vec<f64>> {
        let g = self.grid.len();
        (0..g)
            .map(|i| (0..g).map(|j| self.cov(i, j).value).collect())
            .collect()
    }
}
