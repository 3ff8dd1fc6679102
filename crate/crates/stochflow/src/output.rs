//! Run artifacts on disk.

use std::path::{Path, PathBuf};

use anyhow::{ensure, Result};
use stochflow_core::field::StructuredGrid;
use stochflow_core::hdmr::SensitivityReport;

use crate::experiment::QoIStats;
use crate::io;
use crate::metrics::ErrorReport;

pub const QOI_FILE: &str = "stats.qoi";

/// Writes the CSV tables (and optionally VTK) of a run into `dir`. The
/// `.qoi` file goes last, so its presence marks a complete set.
pub fn write_stats(dir: &Path, stats: &QoIStats, vtk: bool) -> Result<Vec<PathBuf>> {
    let grid = StructuredGrid::new(stats.nx, stats.ny, stats.domain[0], stats.domain[1])?;
    let mut written = Vec::new();
    let mut put = |name: String| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    io::write_series(&put("watercut_mean.csv".into()), &stats.water_cut_pvi, &stats.mean_water_cut)?;
    io::write_series(&put("watercut_std.csv".into()), &stats.water_cut_pvi, &stats.std_water_cut)?;
    for (k, t) in stats.snapshot_pvi.iter().enumerate() {
        io::write_field(&put(format!("sat_mean_{t}.csv")), &grid, &stats.mean_saturation[k])?;
        io::write_field(&put(format!("sat_std_{t}.csv")), &grid, &stats.std_saturation[k])?;
        if vtk {
            io::write_vtk(
                &put(format!("sat_{t}.vtk")),
                &grid,
                &[("mean", &stats.mean_saturation[k]), ("std", &stats.std_saturation[k])],
            )?;
        }
    }
    write_ledger(&put("ledger.csv".into()), std::slice::from_ref(stats))?;
    io::write_json(&put(QOI_FILE.into()), stats)?;
    Ok(written)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Library solves are left out: they depend on the cache, not the config.
pub fn write_ledger(path: &Path, runs: &[QoIStats]) -> Result<()> {
    io::write_table(
        path,
        &[
            "method",
            "n_terms",
            "active",
            "level",
            "level_inactive",
            "order",
            "conventional",
            "unique",
            "flow_solves",
            "interpolations",
        ],
        runs.iter().map(|s| {
            let l = &s.ledger;
            vec![
                s.method.to_string(),
                l.n_terms.to_string(),
                opt(s.active.as_ref().map(Vec::len)),
                l.level.to_string(),
                l.level_inactive.to_string(),
                opt(l.order),
                l.conventional.to_string(),
                l.unique.to_string(),
                l.flow_solves.to_string(),
                opt(l.interpolations),
            ]
        }),
    )
}

pub fn write_errors(path: &Path, rows: &[(String, ErrorReport)]) -> Result<()> {
    io::write_table(
        path,
        &["method", "pvi", "mean_saturation", "std_saturation", "mean_water_cut", "std_water_cut"],
        rows.iter().map(|(m, e)| {
            vec![
                m.clone(),
                e.pvi.to_string(),
                e.mean_saturation.to_string(),
                e.std_saturation.to_string(),
                e.mean_water_cut.to_string(),
                e.std_water_cut.to_string(),
            ]
        }),
    )
}

/// Dimensions in ranked order with their first-order variance.
pub fn write_sensitivity(path: &Path, r: &SensitivityReport) -> Result<()> {
    ensure!(r.order.len() == r.variances.len(), "inconsistent sensitivity report");
    io::write_table(
        path,
        &["rank", "dim", "variance", "cumulative", "active"],
        r.order.iter().enumerate().map(|(k, &d)| {
            vec![
                (k + 1).to_string(),
                d.to_string(),
                r.variances[d].to_string(),
                r.cumulative_ratio(k + 1).to_string(),
                (k < r.selected).to_string(),
            ]
        }),
    )
}
