use alloc::vec;
use alloc::vec::Vec;

use crate::math::cos;

/// Number of Clenshaw-Curtis nodes at a 1-D level.
pub fn node_count(level: u32) -> usize {
    if level == 0 {
        1
    } else {
        (1usize << level) + 1
    }
}

/// `-cos(pi * p / q)` with the symmetric points produced by negation so
/// that nested levels reproduce coordinates bit for bit.
fn chebyshev_lobatto(p: u64, q: u64) -> f64 {
    let g = gcd(p, q);
    let (p, q) = (p / g, q / g);
    if 2 * p == q {
        0.0
    } else if 2 * p < q {
        -cos(core::f64::consts::PI * p as f64 / q as f64)
    } else {
        cos(core::f64::consts::PI * (q - p) as f64 / q as f64)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Nested Clenshaw-Curtis rule on `[-1, 1]` for the uniform density.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    level: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule1D {
    pub fn new(level: u32) -> Self {
        if level == 0 {
            return Rule1D {
                level,
                nodes: vec![0.0],
                weights: vec![1.0],
            };
        }
        let m = node_count(level);
        let n = (m - 1) as u64;
        let nodes: Vec<f64> = (0..=n).map(|k| chebyshev_lobatto(k, n)).collect();
        let half = n / 2;
        let weights = (0..=n)
            .map(|k| {
                let theta = core::f64::consts::PI * k as f64 / n as f64;
                let mut s = 0.0;
                for j in 1..=half {
                    let b = if 2 * j == n { 1.0 } else { 2.0 };
                    s += b / (4.0 * (j * j) as f64 - 1.0) * cos(2.0 * j as f64 * theta);
                }
                let c = if k == 0 || k == n { 1.0 } else { 2.0 };
                // halved: weights of the probability density 1/2
                0.5 * c / n as f64 * (1.0 - s)
            })
            .collect();
        Rule1D {
            level,
            nodes,
            weights,
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Nodes in ascending order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis polynomials through the nodes, evaluated at `x`.
    pub fn lagrange_into(&self, x: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let xj = self.nodes[j];
            let mut p = 1.0;
            for (m, &xm) in self.nodes.iter().enumerate() {
                if m != j {
                    p *= (x - xm) / (xj - xm);
                }
            }
            *o = p;
        }
    }

    pub fn lagrange(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.lagrange_into(x, &mut out);
        out
    }

    pub fn quadrature(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}
