use crate::{Error, Result};

/// Water viscosity relative to oil in the quadratic model.
pub const DEFAULT_VISCOSITY_RATIO: f64 = 0.1;

/// Fractional-flow model. Oil viscosity is fixed to one, so the quadratic
/// model has `mu_w = viscosity_ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum FracFlowModel {
    Linear,
    Quadratic { viscosity_ratio: f64 },
}

impl FracFlowModel {
    pub fn quadratic() -> Self {
        FracFlowModel::Quadratic {
            viscosity_ratio: DEFAULT_VISCOSITY_RATIO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FracFlowModel::Linear => Ok(()),
            FracFlowModel::Quadratic { viscosity_ratio } if viscosity_ratio > 0.0 && viscosity_ratio.is_finite() => {
                Ok(())
            }
            FracFlowModel::Quadratic { viscosity_ratio } => Err(Error::invalid(
                "viscosity_ratio",
                alloc::format!("must be positive and finite, got {viscosity_ratio}"),
            )),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, FracFlowModel::Linear)
    }

    /// `f_w` and its derivative, without range checks.
    #[inline]
    pub(crate) fn eval(&self, s: f64) -> (f64, f64) {
        match *self {
            FracFlowModel::Linear => (s, 1.0),
            FracFlowModel::Quadratic { viscosity_ratio: m } => {
                let o = 1.0 - s;
                let d = s * s + m * o * o;
                (s * s / d, 2.0 * m * s * o / (d * d))
            }
        }
    }

    /// Saturation where `df_w/ds` peaks, `None` for the linear model.
    pub(crate) fn inflection(&self) -> Option<f64> {
        if self.is_linear() {
            return None;
        }
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..100 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if self.eval(m1).1 < self.eval(m2).1 {
                a = m1;
            } else {
                b = m2;
            }
        }
        Some(0.5 * (a + b))
    }

    #[inline]
    pub(crate) fn mobility(&self, s: f64) -> f64 {
        match *self {
            FracFlowModel::Linear => 1.0,
            FracFlowModel::Quadratic { viscosity_ratio: m } => s * s / m + (1.0 - s) * (1.0 - s),
        }
    }
}

fn check(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::invalid("saturation", alloc::format!("{s} is outside [0, 1]")))
    }
}

/// Water fractional flow `f_w(s)` and `df_w/ds`.
pub fn fractional_flow(s: f64, model: FracFlowModel) -> Result<(f64, f64)> {
    check(s)?;
    Ok(model.eval(s))
}

/// Total mobility `lambda_w + lambda_o`.
pub fn total_mobility(s: f64, model: FracFlowModel) -> Result<f64> {
    check(s)?;
    Ok(model.mobility(s))
}

/// Fraction of water in the produced fluid, taken at the producer cell.
pub fn water_cut(saturation: &[f64], model: FracFlowModel, producer: usize) -> f64 {
    model.eval(saturation[producer].clamp(0.0, 1.0)).0
}

/// Pore volumes injected after time `t` at a constant rate.
pub fn pvi_clock(rate: f64, pore_volume: f64, t: f64) -> Result<f64> {
    if !(pore_volume > 0.0) {
        return Err(Error::invalid("pore_volume", alloc::format!("must be positive, got {pore_volume}")));
    }
    Ok(rate * t / pore_volume)
}
