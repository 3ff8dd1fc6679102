//! Relative errors between two sets of statistics.

use anyhow::{ensure, Context as _, Result};
use serde::{Deserialize, Serialize};

use crate::experiment::QoIStats;

/// Relative errors of a test run against a reference: saturation in L1 over
/// the domain at one time, water-cut in L2 over `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub pvi: f64,
    pub mean_saturation: f64,
    pub std_saturation: f64,
    pub mean_water_cut: f64,
    pub std_water_cut: f64,
}

/// Diagnostic split of a multiscale reduced method's error. `multiscale`
/// compares it with the fine solver on the same collocation nodes;
/// `reduction` is the fine solver's HDMR and collocation error against the
/// reference (the two are not separated further).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSplit {
    pub multiscale: ErrorReport,
    pub reduction: ErrorReport,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `||a - b||_1 / ||a||_1` on a uniform grid (the cell area cancels).
pub fn relative_l1(reference: &[f64], test: &[f64]) -> f64 {
    let num: f64 = reference.iter().zip(test).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = reference.iter().map(|a| a.abs()).sum();
    ratio(num, den)
}

/// Relative L2 norm in time with the trapezoid rule on the sample times.
pub fn relative_l2_time(times: &[f64], reference: &[f64], test: &[f64]) -> f64 {
    let integral = |f: &dyn Fn(usize) -> f64| -> f64 {
        times.windows(2).enumerate().map(|(k, t)| 0.5 * (t[1] - t[0]) * (f(k) + f(k + 1))).sum()
    };
    let num = integral(&|k| (reference[k] - test[k]).powi(2));
    let den = integral(&|k| reference[k].powi(2));
    ratio(num.sqrt(), den.sqrt())
}

fn snapshot_index(stats: &QoIStats, pvi: f64) -> Result<usize> {
    stats
        .snapshot_pvi
        .iter()
        .position(|&t| (t - pvi).abs() <= 1e-9)
        .with_context(|| format!("{} has no saturation snapshot at {pvi} PVI", stats.method))
}

pub fn relative_errors(reference: &QoIStats, test: &QoIStats, pvi: f64) -> Result<ErrorReport> {
    ensure!(
        (reference.nx, reference.ny) == (test.nx, test.ny),
        "grids differ: {}x{} against {}x{}",
        reference.nx,
        reference.ny,
        test.nx,
        test.ny
    );
    ensure!(
        reference.water_cut_pvi.len() == test.water_cut_pvi.len()
            && reference
                .water_cut_pvi
                .iter()
                .zip(&test.water_cut_pvi)
                .all(|(a, b)| (a - b).abs() <= 1e-12),
        "water-cut time axes differ"
    );
    let (r, t) = (snapshot_index(reference, pvi)?, snapshot_index(test, pvi)?);
    let times = &reference.water_cut_pvi;
    Ok(ErrorReport {
        pvi,
        mean_saturation: relative_l1(&reference.mean_saturation[r], &test.mean_saturation[t]),
        std_saturation: relative_l1(&reference.std_saturation[r], &test.std_saturation[t]),
        mean_water_cut: relative_l2_time(times, &reference.mean_water_cut, &test.mean_water_cut),
        std_water_cut: relative_l2_time(times, &reference.std_water_cut, &test.std_water_cut),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MethodKind;
    use crate::experiment::RunLedger;

    fn stats(scale: f64) -> QoIStats {
        QoIStats {
            method: MethodKind::MfemFull,
            nx: 2,
            ny: 2,
            domain: [1.0, 1.0],
            snapshot_pvi: vec![0.4],
            mean_saturation: vec![vec![0.1 * scale, 0.2 * scale, 0.0, 0.7 * scale]],
            std_saturation: vec![vec![0.01, 0.02, 0.0, 0.03]],
            water_cut_pvi: vec![0.0, 0.5, 1.0],
            mean_water_cut: vec![0.0, 0.3 * scale, 0.6 * scale],
            std_water_cut: vec![0.0, 0.1, 0.2],
            active: None,
            ledger: RunLedger::default(),
            timings: Vec::new(),
        }
    }

    #[test]
    fn identical_inputs_give_zero() {
        let e = relative_errors(&stats(1.0), &stats(1.0), 0.4).unwrap();
        assert_eq!(
            (e.mean_saturation, e.std_saturation, e.mean_water_cut, e.std_water_cut),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn doubled_mean_gives_one() {
        let e = relative_errors(&stats(1.0), &stats(2.0), 0.4).unwrap();
        assert_eq!(e.mean_saturation, 1.0);
        assert!((e.mean_water_cut - 1.0).abs() < 1e-15);
        assert_eq!(e.std_saturation, 0.0);
    }

    #[test]
    fn mismatches_are_rejected() {
        let mut t = stats(1.0);
        t.nx = 4;
        t.ny = 1;
        assert!(relative_errors(&stats(1.0), &t, 0.4).is_err());
        assert!(relative_errors(&stats(1.0), &stats(1.0), 0.5).is_err());
        let mut t = stats(1.0);
        t.water_cut_pvi[1] = 0.4;
        assert!(relative_errors(&stats(1.0), &t, 0.4).is_err());
    }

    #[test]
    fn zero_reference_with_nonzero_test_is_infinite() {
        assert_eq!(relative_l1(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!(relative_l1(&[0.0], &[1.0]).is_infinite());
    }
}
