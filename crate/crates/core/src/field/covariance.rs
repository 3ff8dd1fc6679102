use nalgebra::DMatrix;

use super::StructuredGrid;
use crate::math::exp;
use crate::{Error, Result};

/// Parameters of the two-point covariance of the log-permeability.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CovarianceSpec {
    pub sigma2: f64,
    pub corr_x: f64,
    pub corr_y: f64,
}

impl CovarianceSpec {
    pub fn new(sigma2: f64, corr_x: f64, corr_y: f64) -> Result<Self> {
        let spec = CovarianceSpec {
            sigma2,
            corr_x,
            corr_y,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "variance must be positive"));
        }
        if !(self.corr_x > 0.0 && self.corr_y > 0.0) {
            return Err(Error::invalid("corr", "correlation lengths must be positive"));
        }
        Ok(())
    }

    /// `sigma2 * exp(-dx^2 / (2 lx^2) - dy^2 / (2 ly^2))`
    #[inline]
    pub fn kernel(&self, dx: f64, dy: f64) -> f64 {
        self.sigma2
            * exp(-dx * dx / (2.0 * self.corr_x * self.corr_x) - dy * dy / (2.0 * self.corr_y * self.corr_y))
    }
}

/// Covariance between all pairs of cell centres.
pub fn build_covariance(grid: &StructuredGrid, spec: &CovarianceSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = grid.num_cells();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        let (xi, yi) = grid.center(i);
        c[(i, i)] = spec.sigma2;
        for j in 0..i {
            let (xj, yj) = grid.center(j);
            let v = spec.kernel(xi - xj, yi - yj);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}
