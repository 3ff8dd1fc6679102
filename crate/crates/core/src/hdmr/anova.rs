use alloc::vec::Vec;

use super::hybrid::{HybridDecomposition, Moments};
use crate::sparsegrid::axpy;
use crate::Result;

/// ANOVA form of a hybrid Cut decomposition: every first-order line
/// component is shifted to zero mean and the shift is absorbed by the
/// active block.
#[derive(Debug, Clone, PartialEq)]
pub struct AnovaDecomposition<'a> {
    base: &'a HybridDecomposition,
    /// `E[f^cut]`
    pub f0: Vec<f64>,
    /// `sum_i E[f_i^cut]`, added to the active block.
    pub active_shift: Vec<f64>,
    /// `E[f_i^cut]` per inactive dimension, subtracted from its line.
    pub line_means: Vec<Vec<f64>>,
}

pub fn cut_to_anova(dec: &HybridDecomposition) -> Result<AnovaDecomposition<'_>> {
    let n_lines = dec.lines().dims().len();
    let mut active_shift = alloc::vec![0.0; dec.f0().len()];
    let mut line_means = Vec::with_capacity(n_lines);
    for k in 0..n_lines {
        let (mut m, _) = dec.lines().mean_var(k);
        axpy(-1.0, dec.f0(), &mut m);
        axpy(1.0, &m, &mut active_shift);
        line_means.push(m);
    }
    let (mut f0, _) = dec.active_grid().moments(dec.active_values())?;
    axpy(1.0, &active_shift, &mut f0);
    Ok(AnovaDecomposition {
        base: dec,
        f0,
        active_shift,
        line_means,
    })
}

impl AnovaDecomposition<'_> {
    /// `f^anova` on the active block at its grid nodes.
    pub fn active_values(&self) -> Vec<Vec<f64>> {
        self.base
            .active_values()
            .iter()
            .map(|v| {
                let mut v = v.clone();
                axpy(1.0, &self.active_shift, &mut v);
                v
            })
            .collect()
    }

    /// `f_k^anova` at the nodes of inactive line `k`.
    pub fn line_values(&self, k: usize) -> Vec<Vec<f64>> {
        self.base
            .lines()
            .values(k)
            .iter()
            .map(|v| {
                let mut v = v.clone();
                axpy(-1.0, self.base.f0(), &mut v);
                axpy(-1.0, &self.line_means[k], &mut v);
                v
            })
            .collect()
    }

    /// Quadrature mean of line component `k` (zero up to roundoff).
    pub fn line_mean(&self, k: usize) -> Vec<f64> {
        let w = self.base.lines().rule().weights();
        let mut m = alloc::vec![0.0; self.f0.len()];
        for (v, &wk) in self.line_values(k).iter().zip(w) {
            axpy(wk, v, &mut m);
        }
        m
    }

    pub fn evaluate_line(&self, k: usize, x: f64) -> Vec<f64> {
        let mut v = self.base.evaluate_line(k, x);
        axpy(-1.0, &self.line_means[k], &mut v);
        v
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.base.evaluate_active(point)?;
        axpy(1.0, &self.active_shift, &mut out);
        for (k, &d) in self.base.lines().dims().iter().enumerate() {
            axpy(1.0, &self.evaluate_line(k, point[d]), &mut out);
        }
        Ok(out)
    }

    /// Mean `f0` and the sum of component variances.
    pub fn stats(&self) -> Result<Moments> {
        let (_, mut variance) = self.base.active_grid().moments(&self.active_values())?;
        for k in 0..self.line_means.len() {
            let (_, v) = self.base.lines().mean_var(k);
            for (a, b) in variance.iter_mut().zip(&v) {
                *a += b.max(0.0);
            }
        }
        Ok(Moments {
            mean: self.f0.clone(),
            variance,
        })
    }
}
