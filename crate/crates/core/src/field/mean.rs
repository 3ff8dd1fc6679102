use alloc::vec::Vec;

use super::StructuredGrid;
use crate::math::{cos, exp, sin};
use crate::{Error, Result};

/// An anisotropic Gaussian ridge in the log-permeability mean.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ridge {
    pub amplitude: f64,
    pub center: [f64; 2],
    /// Orientation of the long axis in radians, counter-clockwise from `+x`.
    pub angle: f64,
    /// Standard deviation along the long axis.
    pub length: f64,
    /// Standard deviation across the ridge.
    pub width: f64,
}

impl Ridge {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let (c, s) = (cos(self.angle), sin(self.angle));
        let along = c * dx + s * dy;
        let across = -s * dx + c * dy;
        self.amplitude
            * exp(-along * along / (2.0 * self.length * self.length) - across * across / (2.0 * self.width * self.width))
    }

    /// Three high-permeability channels crossing the unit square.
    pub fn default_channels() -> [Ridge; 3] {
        [
            Ridge {
                amplitude: 2.0,
                center: [0.5, 0.2],
                angle: 0.15,
                length: 0.6,
                width: 0.05,
            },
            Ridge {
                amplitude: 2.5,
                center: [0.45, 0.55],
                angle: -0.3,
                length: 0.5,
                width: 0.06,
            },
            Ridge {
                amplitude: 1.8,
                center: [0.55, 0.85],
                angle: 0.35,
                length: 0.55,
                width: 0.045,
            },
        ]
    }
}

/// Mean log-permeability `base + sum of ridges` at cell centres.
pub fn channelized_mean(grid: &StructuredGrid, base: f64, ridges: &[Ridge]) -> Result<Vec<f64>> {
    if ridges.iter().any(|r| !(r.length > 0.0 && r.width > 0.0)) {
        return Err(Error::invalid("ridge", "length and width must be positive"));
    }
    Ok((0..grid.num_cells())
        .map(|c| {
            let (x, y) = grid.center(c);
            base + ridges.iter().map(|r| r.value(x, y)).sum::<f64>()
        })
        .collect())
}
