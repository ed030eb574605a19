mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use giantfluct::analytic;
use giantfluct::appendixlab::{
    appendix_sweep, ld_functions, subcritical_component_check, ExceedanceReport, LdFunctions,
};
use giantfluct::harness::{
    closed_form_stats, run_campaign_full, verify_brownian_increments, verify_campaign,
    verify_covariance, CampaignRun, TolerancePolicy, VerificationReport,
};
use giantfluct::io::{
    fmt_f64, write_csv_file, write_fluctuation_csv, write_json, write_sde_csv, write_stats_csv,
    write_sweep_csv,
};
use giantfluct::rng::{replication_seed, rng_from_seed};
use giantfluct::sde::{closed_form_sample, stationary_start, EulerScheme};
use serde::Serialize;

use crate::config::LabConfig;

#[derive(Parser)]
#[command(
    name = "giantfluct",
    version,
    about = "Giant-component fluctuation lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign and write its statistics.
    Simulate(Common),
    /// Run a campaign and check it against the limit process.
    Verify(Common),
    /// Integrate the limit SDE and check the exact sampler.
    Sde(Common),
    /// Connectivity, component-count and large-deviation tables.
    Appendix(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; every field has a default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the campaign worker count.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<LabConfig> {
        let mut cfg = LabConfig::load(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            cfg.override_seed(seed);
        }
        if let Some(w) = self.workers {
            cfg.campaign.workers = w;
        }
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        write_json(&self.out.join("config.json"), &cfg)?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(c) => simulate(c).map(|_| true),
        Command::Verify(c) => verify(c),
        Command::Sde(c) => sde(c),
        Command::Appendix(c) => appendix(c),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write_campaign(out: &Path, run: &CampaignRun) -> Result<()> {
    write_stats_csv(&out.join("stats"), &run.stats)?;
    if let Some(first) = run.paths.first() {
        write_csv_file(&out.join("replication_0.csv"), |w| {
            write_fluctuation_csv(w, first)
        })?;
    }
    Ok(())
}

fn simulate(c: &Common) -> Result<CampaignRun> {
    let cfg = c.load()?;
    let run = run_campaign_full(&cfg.campaign)?;
    write_campaign(&c.out, &run)?;
    println!(
        "{} replications of n = {} on {} grid points written to {}",
        run.stats.count,
        cfg.campaign.n,
        run.stats.grid.len(),
        c.out.display()
    );
    Ok(run)
}

fn verify(c: &Common) -> Result<bool> {
    let cfg = c.load()?;
    let run = run_campaign_full(&cfg.campaign)?;
    write_campaign(&c.out, &run)?;
    let report = verify_campaign(
        &cfg.campaign,
        &run,
        &cfg.verify.policy,
        cfg.verify.tail_gamma,
    )?;
    write_json(&c.out.join("report.json"), &report)?;
    print_report(&report.covariance);
    print_report(&report.increments);
    println!(
        "normality at t = {}: D = {:.4} (critical {:.4})",
        report.normality_time, report.normality.statistic, report.normality.critical
    );
    println!(
        "tail: {} of {} samples above {:.3}",
        report.tail.count, report.tail.sample_size, report.tail.threshold
    );
    Ok(report.passed)
}

fn print_report(r: &VerificationReport) {
    let failed = r
        .comparisons
        .iter()
        .filter(|c| c.decision == giantfluct::harness::Decision::Fail)
        .count();
    println!(
        "{}: {} comparisons, {failed} failed",
        r.check,
        r.comparisons.len()
    );
}

#[derive(Serialize)]
struct EulerVariance {
    t0: f64,
    t1: f64,
    steps: usize,
    paths: usize,
    empirical: f64,
    se: f64,
    theoretical: f64,
    rel_error: f64,
    passed: bool,
}

#[derive(Serialize)]
struct SdeReport {
    closed_form_covariance: VerificationReport,
    closed_form_increments: VerificationReport,
    euler_variance: EulerVariance,
    passed: bool,
}

fn sde(c: &Common) -> Result<bool> {
    let cfg = c.load()?.sde;
    let scheme = EulerScheme::new(cfg.t0, cfg.t1, cfg.steps)?;

    let mut rng = rng_from_seed(replication_seed(cfg.seed, 0));
    let x0 = match cfg.x0 {
        Some(x) => x,
        None => stationary_start(cfg.t0, &mut rng)?,
    };
    let path = scheme.path(x0, cfg.mode, &mut rng);
    write_csv_file(&c.out.join("euler_path.csv"), |w| write_sde_csv(w, &path))?;
    let sample = closed_form_sample(&cfg.closed_form_grid, &mut rng)?;
    write_csv_file(&c.out.join("closed_form_path.csv"), |w| {
        write_sde_csv(w, &sample)
    })?;

    let mut rng = rng_from_seed(replication_seed(cfg.seed, 1));
    let finals: Vec<f64> = (0..cfg.paths)
        .map(|_| {
            let x = stationary_start(cfg.t0, &mut rng)?;
            Ok(scheme.final_value(x, giantfluct::SdeMode::Stochastic, &mut rng))
        })
        .collect::<giantfluct::Result<_>>()?;
    let (empirical, se) = variance_with_se(&finals);
    let theoretical = analytic::scaling(cfg.t1)?.sigma2;
    let rel_error = (empirical - theoretical).abs() / theoretical;
    let euler_variance = EulerVariance {
        t0: cfg.t0,
        t1: cfg.t1,
        steps: cfg.steps,
        paths: cfg.paths,
        empirical,
        se,
        theoretical,
        rel_error,
        passed: rel_error <= cfg.variance_rel_tol,
    };

    let stats = closed_form_stats(
        &cfg.closed_form_grid,
        cfg.closed_form_samples,
        replication_seed(cfg.seed, 2),
        1.0,
    )?;
    write_stats_csv(&c.out.join("closed_form_stats"), &stats)?;
    let strict = TolerancePolicy::strict(3.0);
    let cov = verify_covariance(&stats, &strict)?;
    let inc = verify_brownian_increments(&stats, &strict)?;
    let passed = cov.passed && inc.passed && euler_variance.passed;
    print_report(&cov);
    print_report(&inc);
    println!(
        "euler variance at t = {}: {:.5} vs {:.5} ({:.2}% off)",
        cfg.t1,
        empirical,
        theoretical,
        100.0 * rel_error
    );
    let report = SdeReport {
        closed_form_covariance: cov,
        closed_form_increments: inc,
        euler_variance,
        passed,
    };
    write_json(&c.out.join("sde_report.json"), &report)?;
    Ok(passed)
}

fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).sqrt())
}

#[derive(Serialize)]
struct SubcriticalCheck {
    t: f64,
    c: f64,
    n: usize,
    report: ExceedanceReport,
}

#[derive(Serialize)]
struct AppendixReport {
    ld_bound_holds: bool,
    ld_consistent: bool,
    subcritical: Vec<SubcriticalCheck>,
    passed: bool,
}

fn appendix(c: &Common) -> Result<bool> {
    let cfg = c.load()?.appendix;
    let rows = appendix_sweep(&cfg.ns, &cfg.ks, &cfg.ys)?;
    write_csv_file(&c.out.join("sweep.csv"), |w| write_sweep_csv(w, &rows))?;

    let mut table: Vec<LdFunctions> = Vec::new();
    for &y in cfg.ys.iter().filter(|&&y| y > 1.0) {
        for &x in &cfg.ld_xs {
            table.push(ld_functions(x, y)?);
        }
    }
    write_csv_file(&c.out.join("ld.csv"), |w| {
        use std::io::Write;
        writeln!(w, "x,y,delta,phi,psi")?;
        for r in &table {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(r.x),
                fmt_f64(r.y),
                fmt_f64(r.delta),
                fmt_f64(r.phi),
                fmt_f64(r.psi)
            )?;
        }
        Ok(())
    })?;
    let ld_bound_holds = table
        .iter()
        .all(|r| r.psi <= -2.0 * r.delta * r.delta + 1e-12);
    let ld_consistent = table.iter().all(|r| (r.phi - r.psi).abs() <= 1e-12);

    let subcritical = cfg
        .subcritical_t
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdeg = analytic::scaling(t)?.lambda;
            let report = subcritical_component_check(
                cfg.subcritical_n,
                cdeg,
                cfg.subcritical_reps,
                replication_seed(cfg.seed, i as u64),
            )?;
            Ok(SubcriticalCheck {
                t,
                c: cdeg,
                n: cfg.subcritical_n,
                report,
            })
        })
        .collect::<giantfluct::Result<Vec<_>>>()?;
    let passed = ld_bound_holds && ld_consistent && subcritical.iter().all(|s| s.report.passed());
    for s in &subcritical {
        println!(
            "subcritical t = {} (c = {:.4}): largest component {} vs threshold {:.1}",
            s.t, s.c, s.report.max_abs, s.report.threshold
        );
    }
    println!(
        "{} sweep rows, {} large-deviation rows",
        rows.len(),
        table.len()
    );
    write_json(
        &c.out.join("appendix_report.json"),
        &AppendixReport {
            ld_bound_holds,
            ld_consistent,
            subcritical,
            passed,
        },
    )?;
    Ok(passed)
}
