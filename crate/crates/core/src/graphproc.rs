//! Coupled Erdős–Rényi graph process on a finite window.
//!
//! A realization is an [`EdgeStream`]: the pairs whose uniform weight falls
//! below `t_max / n`, each stamped with its arrival time `n * weight`. The
//! graph at time `t <= t_max` is the set of events with time `<= t`, so every
//! grid point of a [`Trajectory`] sees the same underlying weights.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{domain, input, Error, Result};
use crate::rng::{rng_from_seed, LabRng};

mod union_find;

pub use union_find::UnionFind;

/// Largest vertex count accepted by [`brute_force_components`].
pub const BRUTE_FORCE_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub i: u32,
    pub j: u32,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStream {
    pub n: usize,
    pub t_max: f64,
    /// Sorted by arrival time; `i < j`; no pair repeats.
    pub events: Vec<EdgeEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub grid: Vec<f64>,
    /// Largest component order at each grid time.
    pub largest: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationPath {
    pub n: usize,
    pub grid: Vec<f64>,
    pub largest: Vec<usize>,
    /// `(L - n rho(t)) / sqrt(n)`.
    pub x: Vec<f64>,
    /// Clock values `v(t)`.
    pub z_grid: Vec<f64>,
    /// `u(t) * x`.
    pub z: Vec<f64>,
}

impl EdgeStream {
    /// Number of edges present at time `t`.
    pub fn count_at(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.time <= t)
    }

    /// Edge list of the graph at time `t`.
    pub fn edges_at(&self, t: f64) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.events[..self.count_at(t)]
            .iter()
            .map(|e| (e.i as usize, e.j as usize))
    }
}

/// Samples the arrival-stamped edges of one graph-process realization on
/// `(0, t_max]`, deterministically in `(n, t_max, seed)`.
pub fn sample_edge_stream(n: usize, t_max: f64, seed: u64) -> Result<EdgeStream> {
    let mut rng = rng_from_seed(seed);
    sample_edge_stream_with(n, t_max, &mut rng)
}

pub fn sample_edge_stream_with(n: usize, t_max: f64, rng: &mut LabRng) -> Result<EdgeStream> {
    if n < 2 {
        return Err(domain(format!("need at least two vertices, got {n}")));
    }
    if n > u32::MAX as usize {
        return Err(Error::Sizing(format!("vertex count {n} exceeds u32 ids")));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(domain(format!("window end must be positive, got {t_max}")));
    }
    if t_max >= n as f64 {
        return Err(domain(format!(
            "window end {t_max} must stay below n = {n} (edge probability would reach 1)"
        )));
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let p = t_max / n as f64;
    let count = Binomial::new(pairs, p)
        .map_err(|e| domain(format!("binomial parameters: {e}")))?
        .sample(rng);
    let expected = pairs as f64 * p;
    if count > isize::MAX as u64 / 64 || expected > 5e8 {
        return Err(Error::Sizing(format!(
            "about {expected:.3e} edge events requested; reduce n or t_max"
        )));
    }
    let chosen = choose_pairs(n, pairs, count as usize, rng);
    let mut events: Vec<EdgeEvent> = chosen
        .into_iter()
        .map(|(i, j)| EdgeEvent {
            i,
            j,
            time: t_max * (1.0 - rng.random::<f64>()),
        })
        .collect();
    // stable: equal times keep generation order
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(EdgeStream { n, t_max, events })
}

fn random_pair(n: usize, rng: &mut LabRng) -> (u32, u32) {
    loop {
        let a = rng.random_range(0..n as u32);
        let b = rng.random_range(0..n as u32);
        if a != b {
            return if a < b { (a, b) } else { (b, a) };
        }
    }
}

fn pair_key(n: usize, (i, j): (u32, u32)) -> u64 {
    i as u64 * n as u64 + j as u64
}

/// `count` distinct unordered pairs, uniformly among all `count`-subsets.
fn choose_pairs(n: usize, pairs: u64, count: usize, rng: &mut LabRng) -> Vec<(u32, u32)> {
    if (count as u64) * 2 <= pairs {
        let mut seen = HashSet::with_capacity(count * 2);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let pr = random_pair(n, rng);
            if seen.insert(pair_key(n, pr)) {
                out.push(pr);
            }
        }
        out
    } else {
        // dense: reject the complement instead
        let absent = (pairs - count as u64) as usize;
        let mut excluded = HashSet::with_capacity(absent * 2);
        while excluded.len() < absent {
            excluded.insert(pair_key(n, random_pair(n, rng)));
        }
        let mut out = Vec::with_capacity(count);
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                if !excluded.contains(&pair_key(n, (i, j))) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn check_grid(grid: &[f64], upper: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(input("grid is empty"));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(input("grid contains a non-finite time"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(input("grid must be strictly increasing"));
    }
    if grid[0] <= 0.0 {
        return Err(input(format!(
            "grid times must be positive, got {}",
            grid[0]
        )));
    }
    let last = grid[grid.len() - 1];
    if last > upper {
        return Err(input(format!(
            "grid time {last} exceeds the window end {upper}"
        )));
    }
    Ok(())
}

/// Largest component order at each grid time, in one pass over the stream.
pub fn trajectory(stream: &EdgeStream, grid: &[f64]) -> Result<Trajectory> {
    check_grid(grid, stream.t_max)?;
    let mut uf = UnionFind::new(stream.n);
    let mut largest = Vec::with_capacity(grid.len());
    let mut events = stream.events.iter().peekable();
    for &t in grid {
        while let Some(e) = events.next_if(|e| e.time <= t) {
            uf.union(e.i as usize, e.j as usize);
        }
        largest.push(uf.max_size());
    }
    Ok(Trajectory {
        n: stream.n,
        grid: grid.to_vec(),
        largest,
    })
}

/// Rescales a trajectory into `X_n` and its time-changed version `Z_n`.
pub fn fluctuation_path(traj: &Trajectory) -> Result<FluctuationPath> {
    let n = traj.n as f64;
    let root_n = n.sqrt();
    let len = traj.grid.len();
    let (mut x, mut z_grid, mut z) = (
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
    );
    for (&t, &l) in traj.grid.iter().zip(&traj.largest) {
        if t <= 1.0 {
            return Err(domain(format!("fluctuations need t > 1, got {t}")));
        }
        let sc = analytic::scaling(t)?;
        let xk = (l as f64 - n * analytic::rho(t)?) / root_n;
        x.push(xk);
        z_grid.push(sc.v);
        z.push(sc.u * xk);
    }
    Ok(FluctuationPath {
        n: traj.n,
        grid: traj.grid.clone(),
        largest: traj.largest.clone(),
        x,
        z_grid,
        z,
    })
}

/// Component sizes (descending) of a graph on `n` vertices via union-find.
pub fn component_sizes(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut uf = UnionFind::new(n);
    for (a, b) in edges {
        uf.union(a, b);
    }
    let mut sizes = uf.component_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Exact component sizes (descending) by graph traversal; test oracle for
/// small graphs only.
pub fn brute_force_components(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Refused(format!(
            "brute-force components limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(input(format!("edge ({a}, {b}) out of range for n = {n}")));
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut size = 0;
        while let Some(x) = stack.pop() {
            size += 1;
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(sizes)
}
