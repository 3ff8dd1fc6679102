use alloc::vec;
use alloc::vec::Vec;

use super::model::{check_anchor, Model, Plan};
use crate::sparsegrid::Rule1D;
use crate::{Error, Result};

/// How first-order variances of a vector QoI collapse to one number per
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum SensitivityMeasure {
    /// `sum_c w_c Var[f_c]`; e.g. cell areas restricted to one snapshot.
    WeightedVariance(Vec<f64>),
    /// `Var[sum_c w_c f_c]`; e.g. trapezoid weights over a time series.
    LinearFunctional(Vec<f64>),
}

impl SensitivityMeasure {
    /// Variance of the measure under a 1-D rule with nodal values `values`.
    pub fn variance(&self, rule: &Rule1D, values: &[Vec<f64>]) -> Result<f64> {
        let w = rule.weights();
        match self {
            SensitivityMeasure::WeightedVariance(weights) => {
                check_len(weights.len(), values)?;
                let mut total = 0.0;
                for (c, &wc) in weights.iter().enumerate() {
                    if wc == 0.0 {
                        continue;
                    }
                    let mean: f64 = values.iter().zip(w).map(|(v, wk)| wk * v[c]).sum();
                    let var: f64 = values.iter().zip(w).map(|(v, wk)| wk * (v[c] - mean) * (v[c] - mean)).sum();
                    total += wc * var;
                }
                Ok(total.max(0.0))
            }
            SensitivityMeasure::LinearFunctional(weights) => {
                check_len(weights.len(), values)?;
                let g: Vec<f64> = values
                    .iter()
                    .map(|v| v.iter().zip(weights).map(|(x, y)| x * y).sum())
                    .collect();
                let mean: f64 = g.iter().zip(w).map(|(x, wk)| wk * x).sum();
                Ok(g.iter().zip(w).map(|(x, wk)| wk * (x - mean) * (x - mean)).sum::<f64>().max(0.0))
            }
        }
    }
}

fn check_len(expected: usize, values: &[Vec<f64>]) -> Result<()> {
    match values.iter().find(|v| v.len() != expected) {
        Some(v) => Err(Error::DimensionMismatch {
            context: "sensitivity weights",
            expected,
            actual: v.len(),
        }),
        None => Ok(()),
    }
}

/// Model values along the coordinate lines through the anchor,
/// `f(anchor with slot i replaced by theta_i^(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSet {
    rule: Rule1D,
    dims: Vec<usize>,
    values: Vec<Vec<Vec<f64>>>,
}

impl LineSet {
    pub fn from_parts(level: u32, dims: Vec<usize>, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let rule = Rule1D::new(level);
        if values.len() != dims.len() || values.iter().any(|v| v.len() != rule.len()) {
            return Err(Error::invalid("lines", "one value per rule node and dimension expected"));
        }
        Ok(LineSet { rule, dims, values })
    }

    pub fn rule(&self) -> &Rule1D {
        &self.rule
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Raw model values on line `k` (dimension `dims()[k]`).
    pub fn values(&self, k: usize) -> &[Vec<f64>] {
        &self.values[k]
    }

    pub fn position(&self, dim: usize) -> Option<usize> {
        self.dims.iter().position(|&d| d == dim)
    }

    /// Interpolated line value at `x`.
    pub fn interpolate(&self, k: usize, x: f64) -> Vec<f64> {
        let l = self.rule.lagrange(x);
        let vals = &self.values[k];
        let mut out = vec![0.0; vals.first().map_or(0, Vec::len)];
        for (c, v) in l.iter().zip(vals) {
            if *c != 0.0 {
                crate::sparsegrid::axpy(*c, v, &mut out);
            }
        }
        out
    }

    pub(crate) fn mean_var(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let w = self.rule.weights();
        let vals = &self.values[k];
        let len = vals.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; len];
        for (v, &wk) in vals.iter().zip(w) {
            crate::sparsegrid::axpy(wk, v, &mut mean);
        }
        let mut var = vec![0.0; len];
        for (v, &wk) in vals.iter().zip(w) {
            for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
                *s += wk * (x - m) * (x - m);
            }
        }
        (mean, var)
    }
}

/// Evaluates `f` on the lines of `dims`, reusing `f0` at the anchor.
pub(crate) fn plan_lines(plan: &mut Plan, anchor: &[f64], dims: &[usize], rule: &Rule1D) -> Vec<Vec<usize>> {
    dims.iter()
        .map(|&d| {
            rule.nodes()
                .iter()
                .map(|&x| {
                    let mut p = anchor.to_vec();
                    p[d] = x;
                    plan.add(p)
                })
                .collect()
        })
        .collect()
}

/// Line values for every dimension in `dims`, together with `f0`.
pub fn evaluate_lines<M: Model + ?Sized>(
    model: &M,
    anchor: &[f64],
    dims: &[usize],
    level: u32,
) -> Result<(Vec<f64>, LineSet)> {
    check_anchor(anchor, model.dim())?;
    if let Some(&d) = dims.iter().find(|&&d| d >= model.dim()) {
        return Err(Error::invalid("dim_index", alloc::format!("{d} outside 0..{}", model.dim())));
    }
    let rule = Rule1D::new(level);
    let mut plan = Plan::default();
    let a = plan.add(anchor.to_vec());
    let ids = plan_lines(&mut plan, anchor, dims, &rule);
    let out = plan.run(model)?;
    let values = ids.iter().map(|row| row.iter().map(|&j| out[j].clone()).collect()).collect();
    Ok((
        out[a].clone(),
        LineSet {
            rule,
            dims: dims.to_vec(),
            values,
        },
    ))
}

/// First-order Cut component `f_i(theta_i^(k)) = f(anchor; slot i = theta_i^(k)) - f0`
/// at the nodes of the level-`level` rule.
pub fn first_order_component<M: Model + ?Sized>(
    model: &M,
    anchor: &[f64],
    dim_index: usize,
    level: u32,
) -> Result<Vec<Vec<f64>>> {
    let (f0, lines) = evaluate_lines(model, anchor, &[dim_index], level)?;
    Ok(lines.values[0]
        .iter()
        .map(|v| v.iter().zip(&f0).map(|(a, b)| a - b).collect())
        .collect())
}

/// Ranking of dimensions by first-order variance and the selected active set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityReport {
    pub variances: Vec<f64>,
    /// Dimension indices sorted by decreasing variance (stable).
    pub order: Vec<usize>,
    pub zeta: f64,
    pub selected: usize,
    /// The selected dimensions in ascending index order.
    pub active: Vec<usize>,
}

impl SensitivityReport {
    /// Cumulative variance share of the first `k` ranked dimensions.
    pub fn cumulative_ratio(&self, k: usize) -> f64 {
        let total: f64 = self.variances.iter().sum();
        self.order[..k].iter().map(|&i| self.variances[i]).sum::<f64>() / total
    }
}

/// Smallest `J` whose top-`J` variances reach the share `zeta` of the total.
pub fn sensitivity_select(variances: &[f64], zeta: f64) -> Result<SensitivityReport> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::invalid("zeta", "threshold must lie in (0, 1)"));
    }
    if variances.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("variances", "must be finite and non-negative"));
    }
    let total: f64 = variances.iter().sum();
    if total == 0.0 {
        return Err(Error::NoActiveDimension);
    }
    let mut order: Vec<usize> = (0..variances.len()).collect();
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]));
    let mut acc = 0.0;
    let mut selected = variances.len();
    for (k, &i) in order.iter().enumerate() {
        acc += variances[i];
        if acc / total >= zeta {
            selected = k + 1;
            break;
        }
    }
    let mut active = order[..selected].to_vec();
    active.sort_unstable();
    Ok(SensitivityReport {
        variances: variances.to_vec(),
        order,
        zeta,
        selected,
        active,
    })
}
