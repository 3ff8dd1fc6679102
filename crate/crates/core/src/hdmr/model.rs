use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A map from stochastic coordinates `theta in [-1, 1]^N` to a QoI vector.
///
/// Scalar quantities are length-one vectors. Every output of a model must
/// have the same length.
pub trait Model {
    fn dim(&self) -> usize;

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>>;

    /// Evaluates many points. Implementations may run them concurrently but
    /// must return results in input order.
    fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        points.iter().map(|p| self.evaluate(p)).collect()
    }
}

impl<M: Model + ?Sized> Model for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        (**self).evaluate(theta)
    }

    fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        (**self).evaluate_batch(points)
    }
}

/// Wraps a closure as a [`Model`].
pub struct FnModel<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> FnModel<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnModel { dim, f }
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> Model for FnModel<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(theta))
    }
}

/// Attaches the failing point to an evaluation error.
pub(crate) fn with_point(theta: &[f64], err: Error) -> Error {
    match err {
        e @ Error::Evaluation { .. } => e,
        e => Error::Evaluation {
            theta: theta.to_vec(),
            message: e.to_string(),
        },
    }
}

/// Collects the points a construction needs, deduplicated by exact
/// coordinates, and evaluates them in one batch.
#[derive(Default)]
pub(crate) struct Plan {
    points: Vec<Vec<f64>>,
    lookup: BTreeMap<Vec<u64>, usize>,
    requests: u64,
}

impl Plan {
    pub fn add(&mut self, point: Vec<f64>) -> usize {
        self.requests += 1;
        let key: Vec<u64> = point.iter().map(|x| (x + 0.0).to_bits()).collect();
        let next = self.points.len();
        *self.lookup.entry(key).or_insert_with(|| {
            self.points.push(point);
            next
        })
    }

    pub fn unique(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn run<M: Model + ?Sized>(&self, model: &M) -> Result<Vec<Vec<f64>>> {
        let out = match model.evaluate_batch(&self.points) {
            Ok(out) => out,
            Err(e @ Error::Evaluation { .. }) => return Err(e),
            Err(e) => {
                // pin the failure on the first point that reproduces it
                for p in &self.points {
                    model.evaluate(p).map_err(|e| with_point(p, e))?;
                }
                return Err(e);
            }
        };
        if out.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                context: "batch evaluation",
                expected: self.points.len(),
                actual: out.len(),
            });
        }
        let len = out.first().map_or(0, Vec::len);
        if let Some(bad) = out.iter().find(|v| v.len() != len) {
            return Err(Error::DimensionMismatch {
                context: "model output length",
                expected: len,
                actual: bad.len(),
            });
        }
        Ok(out)
    }
}

pub(crate) fn check_anchor(anchor: &[f64], dim: usize) -> Result<()> {
    if anchor.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "anchor",
            expected: dim,
            actual: anchor.len(),
        });
    }
    crate::field::check_point(anchor)
}
