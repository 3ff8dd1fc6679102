use alloc::vec::Vec;

use super::KLBasis;
use crate::math::{exp, sqrt};
use crate::{Error, Result};

/// Strictly positive permeability per fine cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PermField {
    values: Vec<f64>,
}

impl PermField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::invalid(
                "permeability",
                alloc::format!("cell {i} has non-positive or non-finite value {}", values[i]),
            ));
        }
        Ok(PermField { values })
    }

    /// A constant field.
    pub fn uniform(cells: usize, k: f64) -> Result<Self> {
        Self::new(alloc::vec![k; cells])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

pub(crate) fn check_point(theta: &[f64]) -> Result<()> {
    for (index, &value) in theta.iter().enumerate() {
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
    }
    Ok(())
}

/// `a(x, theta) = E[a](x) + sum_i sqrt(lambda_i) b_i(x) theta_i`
pub fn realize_log_field(klb: &KLBasis, theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != klb.n_terms() {
        return Err(Error::DimensionMismatch {
            context: "theta",
            expected: klb.n_terms(),
            actual: theta.len(),
        });
    }
    check_point(theta)?;
    let mut a = klb.mean_field().to_vec();
    for (i, (&t, &l)) in theta.iter().zip(klb.eigenvalues()).enumerate() {
        let c = sqrt(l) * t;
        if c == 0.0 {
            continue;
        }
        for (ai, bi) in a.iter_mut().zip(klb.eigenfunction(i)) {
            *ai += c * bi;
        }
    }
    Ok(a)
}

pub fn realize_field(klb: &KLBasis, theta: &[f64]) -> Result<PermField> {
    let a = realize_log_field(klb, theta)?;
    PermField::new(a.into_iter().map(exp).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{compute_kle_separable, CovarianceSpec, StructuredGrid};

    fn basis() -> KLBasis {
        let g = StructuredGrid::unit(6, 6).unwrap();
        let spec = CovarianceSpec::new(1.0, 0.2, 0.2).unwrap();
        let mean: Vec<f64> = (0..36).map(|c| 0.1 * (c % 5) as f64).collect();
        compute_kle_separable(&g, &spec, 5)
            .unwrap()
            .with_mean_field(mean)
            .unwrap()
    }

    #[test]
    fn anchor_is_exp_mean() {
        let klb = basis();
        let k = realize_field(&klb, &[0.0; 5]).unwrap();
        for (ki, mi) in k.values().iter().zip(klb.mean_field()) {
            assert_eq!(*ki, exp(*mi));
        }
    }

    #[test]
    fn reflection_about_mean() {
        let klb = basis();
        let theta = [0.3, -0.9, 1.0, -1.0, 0.5];
        let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
        let a = realize_log_field(&klb, &theta).unwrap();
        let b = realize_log_field(&klb, &neg).unwrap();
        for ((ai, bi), mi) in a.iter().zip(&b).zip(klb.mean_field()) {
            assert!((bi - (2.0 * mi - ai)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_out_of_range_and_wrong_length() {
        let klb = basis();
        assert!(matches!(
            realize_field(&klb, &[0.0, 1.5, 0.0, 0.0, 0.0]),
            Err(Error::OutOfRange { index: 1, .. })
        ));
        assert!(realize_field(&klb, &[0.0; 4]).is_err());
    }

    #[test]
    fn perm_field_rejects_non_positive() {
        assert!(PermField::new(alloc::vec![1.0, 0.0]).is_err());
        assert!(PermField::new(alloc::vec![1.0, f64::NAN]).is_err());
    }
}
