use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::sparsegrid::{axpy, Rule1D};
use crate::{Error, Result};

/// Single-phase velocities along the coordinate lines through the anchor,
/// keyed by `(dimension, node)`.
///
/// Boundary data for the global basis at `theta` is the additive first-order
/// expansion `u0 + sum_i (A_i[u](theta_i) - u0)`: only dimensions whose
/// coordinate differs from the anchor contribute.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityLibrary {
    anchor: Vec<f64>,
    level: u32,
    u0: Vec<f64>,
    entries: BTreeMap<(usize, u64), Vec<f64>>,
}

impl VelocityLibrary {
    pub fn new(anchor: Vec<f64>, level: u32, u0: Vec<f64>) -> Self {
        VelocityLibrary {
            anchor,
            level,
            u0,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn anchor_flux(&self) -> &[f64] {
        &self.u0
    }

    /// Number of stored solves, the anchor included.
    pub fn len(&self) -> usize {
        self.entries.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn insert(&mut self, dim: usize, node: f64, flux: Vec<f64>) {
        self.entries.insert((dim, (node + 0.0).to_bits()), flux);
    }

    pub fn get(&self, dim: usize, node: f64) -> Option<&[f64]> {
        if node == self.anchor[dim] {
            return Some(&self.u0);
        }
        self.entries.get(&(dim, (node + 0.0).to_bits())).map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64, &[f64])> {
        self.entries
            .iter()
            .map(|(&(d, bits), v)| (d, f64::from_bits(bits), v.as_slice()))
    }

    /// `(dimension, node)` pairs a set of points needs beyond the anchor.
    pub fn required<'a>(anchor: &[f64], points: impl IntoIterator<Item = &'a [f64]>) -> Vec<(usize, f64)> {
        let mut set = BTreeMap::new();
        for p in points {
            for (d, (&x, &a)) in p.iter().zip(anchor).enumerate() {
                if x != a {
                    set.insert((d, (x + 0.0).to_bits()), ());
                }
            }
        }
        let mut out: Vec<(usize, f64)> = set.into_keys().map(|(d, b)| (d, f64::from_bits(b))).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        out
    }

    /// First-order line value `A_d[u](x)`.
    fn line(&self, d: usize, x: f64) -> Result<Vec<f64>> {
        if let Some(v) = self.get(d, x) {
            return Ok(v.to_vec());
        }
        let rule = Rule1D::new(self.level);
        if rule.nodes().contains(&x) {
            return Err(Error::MissingLibraryEntry { dim: d, node: x });
        }
        let l = rule.lagrange(x);
        let mut out = alloc::vec![0.0; self.u0.len()];
        for (&node, &c) in rule.nodes().iter().zip(&l) {
            let v = self.get(d, node).ok_or(Error::MissingLibraryEntry { dim: d, node })?;
            axpy(c, v, &mut out);
        }
        Ok(out)
    }

    /// Boundary data for the global basis at `theta`.
    pub fn boundary_flux(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "theta",
                expected: self.dim(),
                actual: theta.len(),
            });
        }
        crate::field::check_point(theta)?;
        let mut out = self.u0.clone();
        for (d, (&x, &a)) in theta.iter().zip(&self.anchor).enumerate() {
            if x == a {
                continue;
            }
            let v = self.line(d, x)?;
            axpy(1.0, &v, &mut out);
            axpy(-1.0, &self.u0, &mut out);
        }
        Ok(out)
    }
}
