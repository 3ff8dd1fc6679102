use alloc::vec;
use alloc::vec::Vec;

use super::counts::Ledger;
use super::hybrid::{complement, embed, validate_active, HdmrLevels, Moments};
use super::model::{check_anchor, Model, Plan};
use super::sensitivity::{plan_lines, LineSet};
use crate::field::check_point;
use crate::math::{binomial, binomial_f64};
use crate::sparsegrid::{axpy, build_sparse_grid_with_budget, count_nodes, node_count, Rule1D, SparseGrid};
use crate::{Error, Result};

/// Cut component grid over a subset of the active dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetComponent {
    pub dims: Vec<usize>,
    /// Weight of `P_w f` in the order-`q` truncation.
    pub coefficient: f64,
    /// `P_w f` at the nodes of the `|w|`-dimensional grid.
    pub values: Vec<Vec<f64>>,
}

/// Order-`q` Cut-HDMR truncation on the active dimensions with each
/// component interpolated on its own sparse grid, plus first-order lines
/// for the inactive dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveDecomposition {
    dim: usize,
    active: Vec<usize>,
    anchor: Vec<f64>,
    order: usize,
    f0: Vec<f64>,
    empty_coefficient: f64,
    // grids[j - 1] serves every subset of size j
    grids: Vec<SparseGrid>,
    subsets: Vec<SubsetComponent>,
    lines: LineSet,
    ledger: Ledger,
}

/// Moments from the outer-grid variance path and the work it took.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveMoments {
    pub moments: Moments,
    /// Number of component interpolations performed.
    pub interpolations: u64,
}

/// `sum_{k=0}^{q-|w|} (-1)^k C(J-|w|, k)`
fn truncation_coefficient(j: usize, size: usize, q: usize) -> f64 {
    (0..=q - size)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * binomial_f64(j - size, k))
        .sum()
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

pub fn build_adaptive<M: Model + ?Sized>(
    model: &M,
    active: &[usize],
    order: usize,
    anchor: &[f64],
    levels: HdmrLevels,
) -> Result<AdaptiveDecomposition> {
    let dim = model.dim();
    check_anchor(anchor, dim)?;
    let active = validate_active(active, dim)?;
    let j = active.len();
    if order == 0 || order > j {
        return Err(Error::invalid("order", alloc::format!("need 1 <= q <= {j}, got {order}")));
    }
    let inactive = complement(&active, dim);
    let grids = (1..=order)
        .map(|s| build_sparse_grid_with_budget(s, levels.level, levels.budget))
        .collect::<Result<Vec<_>>>()?;
    let rule = Rule1D::new(levels.level_inactive);

    let mut plan = Plan::default();
    let a = plan.add(anchor.to_vec());
    let mut subsets = Vec::new();
    let mut ids = Vec::new();
    for (s, grid) in (1..=order).zip(&grids) {
        let coefficient = truncation_coefficient(j, s, order);
        for dims in combinations(&active, s) {
            ids.push(grid.nodes().map(|x| plan.add(embed(anchor, &dims, x))).collect::<Vec<_>>());
            subsets.push(SubsetComponent {
                dims,
                coefficient,
                values: Vec::new(),
            });
        }
    }
    let line_ids = plan_lines(&mut plan, anchor, &inactive, &rule);
    let out = plan.run(model)?;

    for (sub, row) in subsets.iter_mut().zip(&ids) {
        sub.values = row.iter().map(|&k| out[k].clone()).collect();
    }
    let conventional = (1..=order).fold(0u64, |acc, s| {
        let c = binomial(j as u64, s as u64).unwrap_or(u64::MAX);
        acc.saturating_add(c.saturating_mul(count_nodes(s, levels.level)))
    }) + inactive.len() as u64 * node_count(levels.level_inactive) as u64
        + 1;
    let line_values = line_ids
        .iter()
        .map(|row| row.iter().map(|&k| out[k].clone()).collect())
        .collect();
    Ok(AdaptiveDecomposition {
        dim,
        empty_coefficient: truncation_coefficient(j, 0, order),
        f0: out[a].clone(),
        lines: LineSet::from_parts(levels.level_inactive, inactive, line_values)?,
        ledger: Ledger {
            conventional,
            unique: plan.unique(),
        },
        active,
        anchor: anchor.to_vec(),
        order,
        grids,
        subsets,
    })
}

impl AdaptiveDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn subsets(&self) -> &[SubsetComponent] {
        &self.subsets
    }

    pub fn lines(&self) -> &LineSet {
        &self.lines
    }

    pub fn ledger(&self) -> Ledger {
        self.ledger
    }

    /// Number of components interpolated per surrogate evaluation.
    pub fn components(&self) -> usize {
        self.subsets.iter().filter(|s| s.coefficient != 0.0).count() + self.lines.dims().len()
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "evaluation point",
                expected: self.dim,
                actual: point.len(),
            });
        }
        check_point(point)?;
        let mut out = vec![0.0; self.f0.len()];
        // the anchor appears with weight c_empty - (N - J) overall
        axpy(self.empty_coefficient - self.lines.dims().len() as f64, &self.f0, &mut out);
        let mut sub = Vec::with_capacity(self.order);
        for s in &self.subsets {
            if s.coefficient == 0.0 {
                continue;
            }
            sub.clear();
            sub.extend(s.dims.iter().map(|&d| point[d]));
            let c = self.grids[s.dims.len() - 1].interpolation_weights(&sub)?;
            for (cj, v) in c.iter().zip(&s.values) {
                if *cj != 0.0 {
                    axpy(s.coefficient * cj, v, &mut out);
                }
            }
        }
        for (k, &d) in self.lines.dims().iter().enumerate() {
            axpy(1.0, &self.lines.interpolate(k, point[d]), &mut out);
        }
        Ok(out)
    }

    /// Mean by component-wise quadrature.
    pub fn mean(&self) -> Result<Vec<f64>> {
        let mut mean = vec![0.0; self.f0.len()];
        axpy(self.empty_coefficient, &self.f0, &mut mean);
        for s in &self.subsets {
            if s.coefficient == 0.0 {
                continue;
            }
            let grid = &self.grids[s.dims.len() - 1];
            for (w, v) in grid.weights().iter().zip(&s.values) {
                axpy(s.coefficient * w, v, &mut mean);
            }
        }
        for k in 0..self.lines.dims().len() {
            let (m, _) = self.lines.mean_var(k);
            axpy(1.0, &m, &mut mean);
            axpy(-1.0, &self.f0, &mut mean);
        }
        Ok(mean)
    }

    /// Mean by components and variance by evaluating the surrogate at every
    /// node of `outer` (a grid over all `N` dimensions).
    pub fn stats(&self, outer: &SparseGrid) -> Result<AdaptiveMoments> {
        if outer.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "outer grid",
                expected: self.dim,
                actual: outer.dim(),
            });
        }
        let mean = self.mean()?;
        let len = mean.len();
        // centred accumulation: Var = E[(f - m)^2] - (E[f - m])^2
        let mut s1 = vec![0.0; len];
        let mut s2 = vec![0.0; len];
        for (x, &w) in outer.nodes().zip(outer.weights()) {
            let v = self.evaluate(x)?;
            for ((a, b), (vi, mi)) in s1.iter_mut().zip(s2.iter_mut()).zip(v.iter().zip(&mean)) {
                let d = vi - mi;
                *a += w * d;
                *b += w * d * d;
            }
        }
        let variance = s1.iter().zip(&s2).map(|(a, b)| (b - a * a).max(0.0)).collect();
        Ok(AdaptiveMoments {
            moments: Moments { mean, variance },
            interpolations: outer.num_nodes() as u64 * self.components() as u64,
        })
    }
}

pub fn adaptive_stats(dec: &AdaptiveDecomposition, outer: &SparseGrid) -> Result<AdaptiveMoments> {
    dec.stats(outer)
}

pub fn evaluate_adaptive(dec: &AdaptiveDecomposition, point: &[f64]) -> Result<Vec<f64>> {
    dec.evaluate(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdmr::{build_hybrid, FnModel};
    use crate::sparsegrid::build_sparse_grid;

    #[test]
    fn coefficients() {
        // q = 2 on J dims: pairs 1, singles 2 - J, empty 1 - J + C(J,2)
        assert_eq!(truncation_coefficient(5, 2, 2), 1.0);
        assert_eq!(truncation_coefficient(5, 1, 2), -3.0);
        assert_eq!(truncation_coefficient(5, 0, 2), 1.0 - 5.0 + 10.0);
        // complete truncation keeps only the full set
        assert_eq!(truncation_coefficient(3, 1, 3), 0.0);
        assert_eq!(truncation_coefficient(3, 3, 3), 1.0);
    }

    #[test]
    fn constant_model() {
        let m = FnModel::new(4, |_: &[f64]| vec![-1.5]);
        let dec = build_adaptive(&m, &[0, 1, 3], 2, &[0.0; 4], HdmrLevels::new(2)).unwrap();
        let outer = build_sparse_grid(4, 2).unwrap();
        let s = dec.stats(&outer).unwrap();
        assert!((s.moments.mean[0] + 1.5).abs() < 1e-12);
        assert!(s.moments.variance[0].abs() < 1e-12);
        for sub in dec.subsets() {
            assert!(sub.values.iter().all(|v| v[0] == -1.5));
        }
    }

    #[test]
    fn complete_order_equals_hybrid() {
        let f = |x: &[f64]| vec![(0.4 * x[0] + 0.3 * x[1] * x[2]).exp() + x[3] * x[1]];
        let m = FnModel::new(4, f);
        let levels = HdmrLevels::new(2);
        let ad = build_adaptive(&m, &[0, 1, 2], 3, &[0.0; 4], levels).unwrap();
        let hy = build_hybrid(&m, &[0, 1, 2], &[0.0; 4], levels).unwrap();
        for p in [[0.3, -0.2, 0.9, 0.1], [-1.0, 1.0, 0.5, -0.7], [0.0, 0.0, 0.0, 0.0]] {
            let a = ad.evaluate(&p).unwrap()[0];
            let h = hy.evaluate(&p).unwrap()[0];
            assert!((a - h).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_count_bound() {
        let m = FnModel::new(6, |x: &[f64]| vec![x.iter().product::<f64>() + x[0]]);
        let dec = build_adaptive(&m, &[0, 2, 4], 2, &[0.0; 6], HdmrLevels::new(2)).unwrap();
        let outer = build_sparse_grid(6, 2).unwrap();
        let s = dec.stats(&outer).unwrap();
        let bound = outer.num_nodes() as u64 * (6 - 3 + 3 + 3);
        assert!(s.interpolations <= bound);
        assert_eq!(dec.ledger().conventional, 3 * 5 + 3 * 13 + 3 * 5 + 1);
    }

    #[test]
    fn order_validated() {
        let m = FnModel::new(3, |x: &[f64]| vec![x[0]]);
        assert!(build_adaptive(&m, &[0, 1], 0, &[0.0; 3], HdmrLevels::new(2)).is_err());
        assert!(build_adaptive(&m, &[0, 1], 3, &[0.0; 3], HdmrLevels::new(2)).is_err());
    }
}
