use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::rule::{node_count, Rule1D};
use crate::field::check_point;
use crate::math::binomial_f64;
use crate::{Error, Result};

/// Default cap on the number of sparse-grid nodes.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

/// One tensor product in the Smolyak combination, stored sparsely: only
/// dimensions with a level above zero are listed.
#[derive(Debug, Clone, PartialEq)]
pub struct SmolyakTerm {
    index: Vec<(usize, u32)>,
    coefficient: f64,
    // global node ids in tensor order (last listed dimension fastest)
    node_ids: Vec<usize>,
}

impl SmolyakTerm {
    pub fn index(&self) -> &[(usize, u32)] {
        &self.index
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }
}

/// Smolyak sparse grid `A(N + level, N)` of nested Clenshaw-Curtis rules.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGrid {
    dim: usize,
    level: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    terms: Vec<SmolyakTerm>,
    rules: Vec<Rule1D>,
}

/// Variance estimate from a quadrature rule that is not positive for `f^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variance {
    /// Clipped at zero.
    pub value: f64,
    pub raw: f64,
}

/// New nodes contributed by a 1-D level.
fn new_points(level: u32) -> u128 {
    match level {
        0 => 1,
        1 => 2,
        l => 1u128 << (l - 1),
    }
}

/// Number of distinct nodes of `A(dim + level, dim)`.
pub fn count_nodes(dim: usize, level: u32) -> u64 {
    let l = level as usize;
    // coefficients of (sum_k new_points(k) t^k)^dim truncated at degree l
    let mut poly = vec![0u128; l + 1];
    poly[0] = 1;
    for _ in 0..dim {
        let mut next = vec![0u128; l + 1];
        for (a, &pa) in poly.iter().enumerate() {
            if pa == 0 {
                continue;
            }
            for (b, slot) in next.iter_mut().enumerate().skip(a) {
                *slot = slot.saturating_add(pa.saturating_mul(new_points((b - a) as u32)));
            }
        }
        poly = next;
    }
    let total = poly.iter().fold(0u128, |acc, &x| acc.saturating_add(x));
    u64::try_from(total).unwrap_or(u64::MAX)
}

/// Sparse multi-indices over `dim` dimensions whose levels sum to `total`.
fn multi_indices(dim: usize, total: u32) -> Vec<Vec<(usize, u32)>> {
    fn rec(dim: usize, start: usize, remaining: u32, cur: &mut Vec<(usize, u32)>, out: &mut Vec<Vec<(usize, u32)>>) {
        if remaining == 0 {
            out.push(cur.clone());
            return;
        }
        for d in start..dim {
            for l in 1..=remaining {
                cur.push((d, l));
                rec(dim, d + 1, remaining - l, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(dim, 0, total, &mut Vec::new(), &mut out);
    out
}

/// Advances a mixed-radix counter, last digit fastest. Returns false on wrap.
fn advance(counter: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for k in (0..counter.len()).rev() {
        counter[k] += 1;
        if counter[k] < radix(k) {
            return true;
        }
        counter[k] = 0;
    }
    false
}

/// `Q_l(x) - Q_{l-1}(x)`: weight of `x` in the difference rule of level `l`.
fn delta_weight(rules: &[Rule1D], l: u32, x: f64) -> f64 {
    let w = |level: u32| {
        let r = &rules[level as usize];
        r.nodes().iter().position(|&n| n == x).map_or(0.0, |i| r.weights()[i])
    };
    if l == 0 {
        w(0)
    } else {
        w(l) - w(l - 1)
    }
}

/// Weights from the difference form `sum_{|l| <= level} (x) Delta_{l_i}`,
/// which avoids the large alternating coefficients of the combination form.
fn surplus_weights(dim: usize, level: u32, rules: &[Rule1D], keys: &[Vec<(usize, u64)>]) -> Vec<f64> {
    let lv = level as usize;
    let centre: Vec<f64> = (0..=level).map(|l| delta_weight(rules, l, 0.0)).collect();
    // zero[m][r]: sum over m centred dimensions of levels summing to at most r
    let mut power = vec![0.0; lv + 1];
    power[0] = 1.0;
    let mut zero = Vec::with_capacity(dim + 1);
    for m in 0..=dim {
        let mut cum = power.clone();
        for r in 1..=lv {
            cum[r] += cum[r - 1];
        }
        zero.push(cum);
        if m == dim {
            break;
        }
        let mut next = vec![0.0; lv + 1];
        for (a, &pa) in power.iter().enumerate() {
            for (b, slot) in next.iter_mut().enumerate().skip(a) {
                *slot += pa * centre[b - a];
            }
        }
        power = next;
    }
    fn rec(
        coords: &[f64],
        budget: u32,
        rules: &[Rule1D],
        acc: f64,
        zero_row: &[f64],
    ) -> f64 {
        let Some((&x, rest)) = coords.split_first() else {
            return acc * zero_row[budget as usize];
        };
        let mut sum = 0.0;
        for l in 1..=budget {
            let d = delta_weight(rules, l, x);
            if d != 0.0 {
                sum += rec(rest, budget - l, rules, acc * d, zero_row);
            }
        }
        sum
    }
    keys.iter()
        .map(|key| {
            let coords: Vec<f64> = key.iter().map(|&(_, b)| f64::from_bits(b)).collect();
            rec(&coords, level, rules, 1.0, &zero[dim - key.len()])
        })
        .collect()
}

pub fn build_sparse_grid(dim: usize, level: u32) -> Result<SparseGrid> {
    build_sparse_grid_with_budget(dim, level, DEFAULT_NODE_BUDGET)
}

pub fn build_sparse_grid_with_budget(dim: usize, level: u32, budget: u64) -> Result<SparseGrid> {
    if dim == 0 {
        return Err(Error::invalid("dim", "sparse grids need at least one dimension"));
    }
    let requested = count_nodes(dim, level);
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    let rules: Vec<Rule1D> = (0..=level).map(Rule1D::new).collect();

    let mut lookup: BTreeMap<Vec<(usize, u64)>, usize> = BTreeMap::new();
    let mut nodes: Vec<f64> = Vec::new();
    let mut keys: Vec<Vec<(usize, u64)>> = Vec::new();
    let mut terms = Vec::new();

    let lowest = (level as usize).saturating_sub(dim - 1) as u32;
    for s in lowest..=level {
        let gap = (level - s) as usize;
        let coefficient = if gap % 2 == 0 { 1.0 } else { -1.0 } * binomial_f64(dim - 1, gap);
        for index in multi_indices(dim, s) {
            let sizes: Vec<usize> = index.iter().map(|&(_, l)| node_count(l)).collect();
            let mut counter = vec![0usize; index.len()];
            let mut node_ids = Vec::with_capacity(sizes.iter().product());
            loop {
                let mut key = Vec::with_capacity(index.len());
                for (k, &(_, l)) in index.iter().enumerate() {
                    let x = rules[l as usize].nodes()[counter[k]];
                    let d = index[k].0;
                    if x != 0.0 {
                        key.push((d, x.to_bits()));
                    }
                }
                let id = *lookup.entry(key).or_insert_with_key(|key| {
                    let id = keys.len();
                    let start = nodes.len();
                    nodes.resize(start + dim, 0.0);
                    for &(d, bits) in key {
                        nodes[start + d] = f64::from_bits(bits);
                    }
                    keys.push(key.clone());
                    id
                });
                node_ids.push(id);
                if !advance(&mut counter, |k| sizes[k]) {
                    break;
                }
            }
            terms.push(SmolyakTerm {
                index,
                coefficient,
                node_ids,
            });
        }
    }
    debug_assert_eq!(keys.len() as u64, requested);
    let weights = surplus_weights(dim, level, &rules, &keys);
    Ok(SparseGrid {
        dim,
        level,
        nodes,
        weights,
        terms,
        rules,
    })
}

impl SparseGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn terms(&self) -> &[SmolyakTerm] {
        &self.terms
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_nodes() {
            return Err(Error::DimensionMismatch {
                context: "nodal values",
                expected: self.num_nodes(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Expected value of the interpolant, `sum_j w_j f_j`.
    pub fn quadrature(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(crate::math::compensated_sum(values.iter().zip(&self.weights).map(|(v, w)| v * w)))
    }

    /// `sum_j w_j f_j^2 - (sum_j w_j f_j)^2`, evaluated in centred form.
    pub fn variance(&self, values: &[f64]) -> Result<Variance> {
        let mean = self.quadrature(values)?;
        let raw: f64 = values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * (v - mean) * (v - mean))
            .sum();
        Ok(Variance {
            value: raw.max(0.0),
            raw,
        })
    }

    /// Component-wise mean and clipped variance of vector-valued nodal data.
    pub fn moments<V: AsRef<[f64]>>(&self, values: &[V]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(values.len())?;
        let len = values.first().map_or(0, |v| v.as_ref().len());
        let mut mean = vec![0.0; len];
        for (v, &w) in values.iter().zip(&self.weights) {
            let v = v.as_ref();
            if v.len() != len {
                return Err(Error::DimensionMismatch {
                    context: "nodal vector",
                    expected: len,
                    actual: v.len(),
                });
            }
            axpy(w, v, &mut mean);
        }
        let mut var = vec![0.0; len];
        for (v, &w) in values.iter().zip(&self.weights) {
            for ((s, x), m) in var.iter_mut().zip(v.as_ref()).zip(&mean) {
                *s += w * (x - m) * (x - m);
            }
        }
        var.iter_mut().for_each(|s| *s = s.max(0.0));
        Ok((mean, var))
    }

    /// Coefficients `c_j(point)` with `interpolant(point) = sum_j c_j f_j`.
    pub fn interpolation_weights(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "interpolation point",
                expected: self.dim,
                actual: point.len(),
            });
        }
        check_point(point)?;
        // basis[d][l - 1]: Lagrange values of the level-l rule at point[d]
        let basis: Vec<Vec<Vec<f64>>> = point
            .iter()
            .map(|&x| self.rules[1..].iter().map(|r| r.lagrange(x)).collect())
            .collect();
        let mut out = vec![0.0; self.num_nodes()];
        let mut factors: Vec<&[f64]> = Vec::with_capacity(self.level as usize);
        for term in &self.terms {
            factors.clear();
            factors.extend(term.index.iter().map(|&(d, l)| basis[d][l as usize - 1].as_slice()));
            let mut counter = vec![0usize; factors.len()];
            for &id in &term.node_ids {
                let mut p = term.coefficient;
                for (f, &c) in factors.iter().zip(&counter) {
                    p *= f[c];
                }
                out[id] += p;
                advance(&mut counter, |k| factors[k].len());
            }
        }
        Ok(out)
    }

    pub fn interpolate(&self, values: &[f64], point: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        let c = self.interpolation_weights(point)?;
        Ok(c.iter().zip(values).map(|(c, v)| c * v).sum())
    }

    /// Interpolates vector-valued nodal data.
    pub fn interpolate_vec<V: AsRef<[f64]>>(&self, values: &[V], point: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        let c = self.interpolation_weights(point)?;
        let len = values.first().map_or(0, |v| v.as_ref().len());
        let mut out = vec![0.0; len];
        for (cj, v) in c.iter().zip(values) {
            if *cj != 0.0 {
                axpy(*cj, v.as_ref(), &mut out);
            }
        }
        Ok(out)
    }
}

#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `sum_j w_j f_j`, see [`SparseGrid::quadrature`].
pub fn quadrature(grid: &SparseGrid, values: &[f64]) -> Result<f64> {
    grid.quadrature(values)
}

/// See [`SparseGrid::variance`].
pub fn variance_from_grid(grid: &SparseGrid, values: &[f64]) -> Result<Variance> {
    grid.variance(values)
}

/// See [`SparseGrid::interpolate`].
pub fn interpolate(grid: &SparseGrid, values: &[f64], point: &[f64]) -> Result<f64> {
    grid.interpolate(values, point)
}
