//! CSV and JSON writers. Floating-point fields are written with 17
//! significant digits so they read back bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::appendixlab::SweepRow;
use crate::error::Result;
use crate::graphproc::{FluctuationPath, Trajectory};
use crate::sde::SdePath;
use crate::stats::McStats;

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const FLUCTUATION_HEADER: &str = "t,L,X,v_t,Z";

pub fn write_fluctuation_csv<W: Write>(mut w: W, path: &FluctuationPath) -> Result<()> {
    writeln!(w, "{FLUCTUATION_HEADER}")?;
    for k in 0..path.grid.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(path.grid[k]),
            path.largest[k],
            fmt_f64(path.x[k]),
            fmt_f64(path.z_grid[k]),
            fmt_f64(path.z[k])
        )?;
    }
    Ok(())
}

/// Trajectories without a supercritical grid only carry `t` and `L`.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "t,L")?;
    for (t, l) in traj.grid.iter().zip(&traj.largest) {
        writeln!(w, "{},{l}", fmt_f64(*t))?;
    }
    Ok(())
}

pub fn write_sde_csv<W: Write>(mut w: W, path: &SdePath) -> Result<()> {
    writeln!(w, "t,value")?;
    for (t, v) in path.grid.iter().zip(&path.values) {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*v))?;
    }
    Ok(())
}

fn write_matrix<W: Write>(mut w: W, grid: &[f64], rows: &[Vec<f64>]) -> Result<()> {
    let header: Vec<String> = grid.iter().map(|t| fmt_f64(*t)).collect();
    writeln!(w, "t,{}", header.join(","))?;
    for (t, row) in grid.iter().zip(rows) {
        let cells: Vec<String> = row.iter().map(|x| fmt_f64(*x)).collect();
        writeln!(w, "{},{}", fmt_f64(*t), cells.join(","))?;
    }
    Ok(())
}

/// Writes `mean.csv`, `cov.csv`, `cov_se.csv` and `z_increments.csv`.
pub fn write_stats_csv(dir: &Path, stats: &McStats) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let g = stats.len();

    let mut w = BufWriter::new(File::create(dir.join("mean.csv"))?);
    writeln!(w, "t,mean,count")?;
    for i in 0..g {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(stats.grid[i]),
            fmt_f64(stats.mean(i)),
            stats.count
        )?;
    }
    w.flush()?;

    write_matrix(
        BufWriter::new(File::create(dir.join("cov.csv"))?),
        &stats.grid,
        &stats.cov_matrix(),
    )?;
    let se: Vec<Vec<f64>> = (0..g)
        .map(|i| (0..g).map(|j| stats.cov(i, j).se).collect())
        .collect();
    write_matrix(
        BufWriter::new(File::create(dir.join("cov_se.csv"))?),
        &stats.grid,
        &se,
    )?;

    let mut w = BufWriter::new(File::create(dir.join("z_increments.csv"))?);
    writeln!(w, "s,t,var,se")?;
    for k in 0..g.saturating_sub(1) {
        let e = stats.z_increment_var(k);
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(stats.grid[k]),
            fmt_f64(stats.grid[k + 1]),
            fmt_f64(e.value),
            fmt_f64(e.se)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "n,k,y,E_nk,P_n_ratio")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.n,
            r.k,
            fmt_f64(r.y),
            fmt_f64(r.expected_components),
            fmt_f64(r.connectivity_ratio)
        )?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
