//! Command-line interface.

use std::path::PathBuf;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};
use stochflow_core::hdmr::complexity_counts_with;

use crate::config::{ExperimentConfig, MethodKind, CACHE_ENV};
use crate::experiment::{Experiment, QoIStats};
use crate::library::load_or_build_klb;
use crate::metrics::relative_errors;
use crate::{io, output};

#[derive(Debug, Parser)]
#[command(name = "stochflow", version, about = "Stochastic multiscale two-phase flow experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build (or load from the cache) the Karhunen-Loeve basis.
    Kle {
        #[command(flatten)]
        common: Common,
        /// Also write the basis to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the stochastic dimensions by first-order variance.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Solver used for the first-order lines.
        #[arg(long)]
        method: Option<MethodKind>,
        /// CSV destination; defaults to `<output>/sensitivity.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one method and write its statistics.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: Option<MethodKind>,
        /// Also write VTK files of the saturation statistics.
        #[arg(long)]
        vtk: bool,
    },
    /// Summarise a `.qoi` file and optionally re-export its tables.
    Stats {
        qoi: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        vtk: bool,
    },
    /// Relative errors of a test run against a reference run.
    Compare {
        reference: PathBuf,
        test: PathBuf,
        /// Saturation time; every common snapshot when absent.
        #[arg(long)]
        pvi: Option<f64>,
        /// CSV destination; the table is printed in any case.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the collocation counts of the four constructions.
    Counts {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Level of the inactive lines; defaults to `--level`.
        #[arg(long)]
        level_inactive: Option<u32>,
        /// Truncation order of the adaptive and truncated variants.
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
}

/// Options shared by the commands that read a configuration. Flags override
/// the file.
#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration; the built-in defaults when absent.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_terms: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = self.n_terms {
            c.kle.n_terms = n;
            c.hdmr.anchor = None;
        }
        if let Some(l) = self.level {
            c.hdmr.level = l;
            c.hdmr.level_inactive = l;
        }
        if let Some(z) = self.zeta {
            c.hdmr.zeta = z;
        }
        if self.workers.is_some() {
            c.run.workers = self.workers;
        }
        if let Some(o) = &self.output {
            c.run.output_dir = o.clone();
        }
        if self.cache_dir.is_some() {
            c.run.cache_dir = self.cache_dir.clone();
        }
        c.validate().context("after applying command-line overrides")?;
        Ok(c)
    }
}

pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    match cli.command {
        Command::Kle { common, out: file } => {
            let c = common.resolve()?;
            let (klb, hit) = load_or_build_klb(&c, c.cache_dir().as_deref())?;
            if let Some(p) = file {
                io::write_klb(&p, &klb)?;
            }
            writeln!(out, "terms,eigenvalue,energy")?;
            for (i, l) in klb.eigenvalues().iter().enumerate() {
                writeln!(out, "{},{l},{}", i + 1, klb.energy_fraction(i + 1)?)?;
            }
            log::info!("basis {}", if hit { "loaded from cache" } else { "computed" });
        }
        Command::Sensitivity {
            common,
            method,
            out: file,
        } => {
            let c = common.resolve()?;
            let method = method.unwrap_or(c.run.method);
            let path = file.unwrap_or_else(|| c.run.output_dir.join("sensitivity.csv"));
            let mut e = Experiment::new(c)?;
            let r = e.sensitivity(method.flavor())?;
            output::write_sensitivity(&path, &r)?;
            writeln!(out, "{} of {} dimensions active: {:?}", r.selected, r.variances.len(), r.active)?;
        }
        Command::Run { common, method, vtk } => {
            let mut c = common.resolve()?;
            if let Some(m) = method {
                c.run.method = m;
            }
            c.run.vtk |= vtk;
            let dir = c.run.output_dir.clone();
            let mut e = Experiment::new(c.clone())?;
            let stats = e.run(c.run.method)?;
            if c.run.method.reduction() != crate::config::Reduction::Full && c.hdmr.active.is_none() {
                output::write_sensitivity(&dir.join("sensitivity.csv"), &e.sensitivity(c.run.method.flavor())?)?;
            }
            io::write_atomic(&dir.join("config.toml"), c.to_toml()?.as_bytes())?;
            output::write_stats(&dir, &stats, c.run.vtk)?;
            summary(out, &stats)?;
        }
        Command::Stats { qoi, out: dir, vtk } => {
            let stats: QoIStats = io::read_json(&qoi)?;
            if let Some(d) = dir {
                output::write_stats(&d, &stats, vtk)?;
            }
            summary(out, &stats)?;
        }
        Command::Compare {
            reference,
            test,
            pvi,
            out: file,
        } => {
            let r: QoIStats = io::read_json(&reference)?;
            let t: QoIStats = io::read_json(&test)?;
            let times = match pvi {
                Some(p) => vec![p],
                None => r.snapshot_pvi.clone(),
            };
            let rows = times
                .iter()
                .map(|&p| Ok((t.method.to_string(), relative_errors(&r, &t, p)?)))
                .collect::<Result<Vec<_>>>()?;
            writeln!(out, "method,pvi,mean_saturation,std_saturation,mean_water_cut,std_water_cut")?;
            for (m, e) in &rows {
                writeln!(
                    out,
                    "{m},{},{:.6e},{:.6e},{:.6e},{:.6e}",
                    e.pvi, e.mean_saturation, e.std_saturation, e.mean_water_cut, e.std_water_cut
                )?;
            }
            if let Some(f) = file {
                output::write_errors(&f, &rows)?;
            }
        }
        Command::Counts {
            n,
            j,
            level,
            level_inactive,
            order,
        } => {
            anyhow::ensure!(j >= 1 && j <= n, "need 1 <= j <= n");
            anyhow::ensure!(order >= 1 && order <= j, "need 1 <= order <= j");
            let c = complexity_counts_with(n, j, level, level_inactive.unwrap_or(level), order);
            writeln!(out, "construction,models")?;
            writeln!(out, "full,{}", c.full)?;
            writeln!(out, "truncated,{}", c.truncated)?;
            writeln!(out, "adaptive,{}", c.adaptive)?;
            writeln!(out, "hybrid,{}", c.hybrid)?;
        }
    }
    Ok(())
}

fn summary(out: &mut dyn std::io::Write, s: &QoIStats) -> Result<()> {
    writeln!(out, "method {} on {}x{}", s.method, s.nx, s.ny)?;
    if let Some(a) = &s.active {
        writeln!(out, "active dimensions ({}): {a:?}", a.len())?;
    }
    let l = &s.ledger;
    writeln!(
        out,
        "models {} (distinct {}), flow runs {}, library solves {}",
        l.conventional, l.unique, l.flow_solves, l.library_solves
    )?;
    for (k, t) in s.snapshot_pvi.iter().enumerate() {
        let n = s.mean_saturation[k].len() as f64;
        let m: f64 = s.mean_saturation[k].iter().sum::<f64>() / n;
        let d: f64 = s.std_saturation[k].iter().sum::<f64>() / n;
        writeln!(out, "pvi {t}: domain-average mean {m:.6}, std {d:.6}")?;
    }
    if let (Some(t), Some(m)) = (s.water_cut_pvi.last(), s.mean_water_cut.last()) {
        writeln!(out, "water-cut at {t} PVI: {m:.6}")?;
    }
    for t in &s.timings {
        writeln!(out, "time {}: {:.3} s", t.phase, t.seconds)?;
    }
    Ok(())
}

/// Parses `args` and runs; errors are printed and turned into exit code 1
/// (2 for usage errors, as clap does).
pub fn main_with<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return e.exit_code();
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}
