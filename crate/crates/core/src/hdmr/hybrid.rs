use alloc::vec::Vec;

use super::counts::Ledger;
use super::model::{check_anchor, Model, Plan};
use super::sensitivity::{plan_lines, LineSet};
use crate::field::check_point;
use crate::sparsegrid::{axpy, build_sparse_grid_with_budget, count_nodes, node_count, SparseGrid, DEFAULT_NODE_BUDGET};
use crate::{Error, Result};

/// Mean and variance of a (vector) QoI.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Levels and resource limits for the HDMR constructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HdmrLevels {
    pub level: u32,
    pub level_inactive: u32,
    pub budget: u64,
}

impl HdmrLevels {
    pub fn new(level: u32) -> Self {
        HdmrLevels {
            level,
            level_inactive: level,
            budget: DEFAULT_NODE_BUDGET,
        }
    }
}

pub(crate) fn validate_active(active: &[usize], dim: usize) -> Result<Vec<usize>> {
    if active.is_empty() {
        return Err(Error::invalid("active", "the active set must not be empty"));
    }
    let mut sorted = active.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != active.len() {
        return Err(Error::invalid("active", "duplicate dimensions"));
    }
    if sorted.last().is_some_and(|&d| d >= dim) {
        return Err(Error::invalid("active", "dimension index out of range"));
    }
    Ok(active.to_vec())
}

pub(crate) fn complement(active: &[usize], dim: usize) -> Vec<usize> {
    (0..dim).filter(|d| !active.contains(d)).collect()
}

/// Anchor point with the coordinates of `dims` replaced by `coords`.
pub(crate) fn embed(anchor: &[f64], dims: &[usize], coords: &[f64]) -> Vec<f64> {
    let mut p = anchor.to_vec();
    for (&d, &x) in dims.iter().zip(coords) {
        p[d] = x;
    }
    p
}

/// Sparse-grid interpolant of the active block plus first-order lines for
/// the remaining dimensions:
/// `A_J[f](theta_J) + sum_{i not in J} A_i[f](theta_i) - (N - J) f0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDecomposition {
    dim: usize,
    active: Vec<usize>,
    anchor: Vec<f64>,
    f0: Vec<f64>,
    grid: SparseGrid,
    values: Vec<Vec<f64>>,
    lines: LineSet,
    ledger: Ledger,
}

/// Plain data needed to rebuild a [`HybridDecomposition`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HybridParts {
    pub dim: usize,
    pub active: Vec<usize>,
    pub anchor: Vec<f64>,
    pub level: u32,
    pub level_inactive: u32,
    pub f0: Vec<f64>,
    pub active_values: Vec<Vec<f64>>,
    pub line_values: Vec<Vec<Vec<f64>>>,
    pub ledger: Ledger,
}

pub fn build_hybrid<M: Model + ?Sized>(
    model: &M,
    active: &[usize],
    anchor: &[f64],
    levels: HdmrLevels,
) -> Result<HybridDecomposition> {
    let dim = model.dim();
    check_anchor(anchor, dim)?;
    let active = validate_active(active, dim)?;
    let inactive = complement(&active, dim);
    let grid = build_sparse_grid_with_budget(active.len(), levels.level, levels.budget)?;
    let rule = crate::sparsegrid::Rule1D::new(levels.level_inactive);

    let mut plan = Plan::default();
    let a = plan.add(anchor.to_vec());
    let grid_ids: Vec<usize> = grid.nodes().map(|x| plan.add(embed(anchor, &active, x))).collect();
    let line_ids = plan_lines(&mut plan, anchor, &inactive, &rule);
    let out = plan.run(model)?;

    let ledger = Ledger {
        conventional: count_nodes(active.len(), levels.level)
            + inactive.len() as u64 * node_count(levels.level_inactive) as u64
            + 1,
        unique: plan.unique(),
    };
    let line_values = line_ids
        .iter()
        .map(|row| row.iter().map(|&j| out[j].clone()).collect())
        .collect();
    Ok(HybridDecomposition {
        dim,
        f0: out[a].clone(),
        values: grid_ids.iter().map(|&j| out[j].clone()).collect(),
        lines: LineSet::from_parts(levels.level_inactive, inactive, line_values)?,
        active,
        anchor: anchor.to_vec(),
        grid,
        ledger,
    })
}

impl HybridDecomposition {
    pub fn from_parts(parts: HybridParts) -> Result<Self> {
        check_anchor(&parts.anchor, parts.dim)?;
        let active = validate_active(&parts.active, parts.dim)?;
        let inactive = complement(&active, parts.dim);
        let grid = build_sparse_grid_with_budget(active.len(), parts.level, u64::MAX)?;
        if parts.active_values.len() != grid.num_nodes() {
            return Err(Error::DimensionMismatch {
                context: "active block values",
                expected: grid.num_nodes(),
                actual: parts.active_values.len(),
            });
        }
        Ok(HybridDecomposition {
            dim: parts.dim,
            lines: LineSet::from_parts(parts.level_inactive, inactive, parts.line_values)?,
            active,
            anchor: parts.anchor,
            f0: parts.f0,
            grid,
            values: parts.active_values,
            ledger: parts.ledger,
        })
    }

    pub fn to_parts(&self) -> HybridParts {
        HybridParts {
            dim: self.dim,
            active: self.active.clone(),
            anchor: self.anchor.clone(),
            level: self.grid.level(),
            level_inactive: self.lines.rule().level(),
            f0: self.f0.clone(),
            active_values: self.values.clone(),
            line_values: (0..self.lines.dims().len()).map(|k| self.lines.values(k).to_vec()).collect(),
            ledger: self.ledger,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn inactive(&self) -> &[usize] {
        self.lines.dims()
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn active_grid(&self) -> &SparseGrid {
        &self.grid
    }

    /// `P_J f` at the active grid nodes.
    pub fn active_values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn lines(&self) -> &LineSet {
        &self.lines
    }

    pub fn ledger(&self) -> Ledger {
        self.ledger
    }

    fn check(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "evaluation point",
                expected: self.dim,
                actual: point.len(),
            });
        }
        check_point(point)
    }

    /// Interpolant of the active block at `point` (inactive slots ignored).
    pub fn evaluate_active(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check(point)?;
        let sub: Vec<f64> = self.active.iter().map(|&d| point[d]).collect();
        self.grid.interpolate_vec(&self.values, &sub)
    }

    /// First-order Cut component of inactive dimension number `k` at `x`.
    pub fn evaluate_line(&self, k: usize, x: f64) -> Vec<f64> {
        let mut v = self.lines.interpolate(k, x);
        axpy(-1.0, &self.f0, &mut v);
        v
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.evaluate_active(point)?;
        for (k, &d) in self.lines.dims().iter().enumerate() {
            let line = self.evaluate_line(k, point[d]);
            axpy(1.0, &line, &mut out);
        }
        Ok(out)
    }

    /// Moments by component-wise quadrature: the active-block mean plus the
    /// line means, and the sum of the block and line variances.
    pub fn stats(&self) -> Result<Moments> {
        let (mut mean, mut variance) = self.grid.moments(&self.values)?;
        for k in 0..self.lines.dims().len() {
            let (m, v) = self.lines.mean_var(k);
            for ((a, b), f) in mean.iter_mut().zip(&m).zip(&self.f0) {
                *a += b - f;
            }
            for (a, b) in variance.iter_mut().zip(&v) {
                *a += b.max(0.0);
            }
        }
        Ok(Moments { mean, variance })
    }
}

pub fn evaluate_hybrid(dec: &HybridDecomposition, point: &[f64]) -> Result<Vec<f64>> {
    dec.evaluate(point)
}

pub fn hybrid_stats(dec: &HybridDecomposition) -> Result<Moments> {
    dec.stats()
}
