use alloc::vec;
use alloc::vec::Vec;

use crate::field::{PermField, StructuredGrid};
use crate::linalg::{BandLu, BandMatrix};
use crate::{Error, Result};

/// Residual tolerance of the cell balances, relative to the largest source
/// or boundary rate.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Tolerance of the Neumann compatibility condition, relative to the total
/// absolute rate.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-12;

/// Cell pressures and integrated edge fluxes (`+x`/`+y` orientation).
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSolution {
    /// Area-weighted mean zero.
    pub pressure: Vec<f64>,
    pub flux: Vec<f64>,
}

/// Injector/producer pair with a fixed total rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wells {
    pub injector: usize,
    pub producer: usize,
    pub rate: f64,
}

impl Wells {
    /// Injector in the top-left cell, producer in the bottom-right cell.
    pub fn quarter_five_spot(grid: &StructuredGrid, rate: f64) -> Self {
        Wells {
            injector: grid.cell(0, grid.ny() - 1),
            producer: grid.cell(grid.nx() - 1, 0),
            rate,
        }
    }

    /// Source density `q` (rate per unit area) per cell.
    pub fn source(&self, grid: &StructuredGrid) -> Vec<f64> {
        let mut q = vec![0.0; grid.num_cells()];
        let a = grid.cell_area();
        q[self.injector] += self.rate / a;
        q[self.producer] -= self.rate / a;
        q
    }
}

/// Two-point transmissibility of an interior edge.
#[inline]
pub(crate) fn transmissibility(grid: &StructuredGrid, e: usize, k_neg: f64, k_pos: f64) -> f64 {
    2.0 * grid.edge_length(e) / (grid.edge_span(e) * (1.0 / k_neg + 1.0 / k_pos))
}

/// Factorised two-point system on a grid with Neumann boundaries.
#[derive(Debug, Clone)]
pub(crate) struct TpfaSystem {
    grid: StructuredGrid,
    trans: Vec<f64>,
    lu: BandLu,
}

impl TpfaSystem {
    pub fn new(grid: StructuredGrid, coefficient: &[f64]) -> Result<Self> {
        let n = grid.num_cells();
        if coefficient.len() != n {
            return Err(Error::DimensionMismatch {
                context: "coefficient",
                expected: n,
                actual: coefficient.len(),
            });
        }
        if let Some(c) = coefficient.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::invalid(
                "coefficient",
                alloc::format!("cell {c} has non-positive value {}", coefficient[c]),
            ));
        }
        let mut trans = vec![0.0; grid.num_edges()];
        let mut a = BandMatrix::zeros(n, grid.nx(), grid.nx());
        for (e, t) in trans.iter_mut().enumerate() {
            if let (Some(l), Some(r)) = grid.edge_cells(e) {
                let tv = transmissibility(&grid, e, coefficient[l], coefficient[r]);
                *t = tv;
                a.add(l, l, tv);
                a.add(r, r, tv);
                a.add(l, r, -tv);
                a.add(r, l, -tv);
            }
        }
        if n == 1 {
            a.set(0, 0, 1.0);
        } else {
            a.pin(0);
        }
        Ok(TpfaSystem {
            grid,
            trans,
            lu: a.factor()?,
        })
    }

    /// Solves for integrated cell rates `rate` and prescribed fluxes on the
    /// boundary edges of `boundary` (interior entries are ignored).
    pub fn solve(&self, rate: &[f64], boundary: Option<&[f64]>) -> Result<MixedSolution> {
        let g = &self.grid;
        let n = g.num_cells();
        let mut rhs = rate.to_vec();
        let mut flux = vec![0.0; g.num_edges()];
        if let Some(b) = boundary {
            for (e, f) in flux.iter_mut().enumerate() {
                match g.edge_cells(e) {
                    (None, Some(r)) => {
                        *f = b[e];
                        rhs[r] += b[e];
                    }
                    (Some(l), None) => {
                        *f = b[e];
                        rhs[l] -= b[e];
                    }
                    _ => {}
                }
            }
        }
        let scale = rate
            .iter()
            .map(|r| r.abs())
            .chain(boundary.into_iter().flatten().map(|b| b.abs()))
            .fold(0.0_f64, f64::max);
        let total: f64 = rhs.iter().sum();
        let absolute: f64 = rhs.iter().map(|r| r.abs()).sum();
        if total.abs() > COMPATIBILITY_TOLERANCE * absolute.max(f64::MIN_POSITIVE) {
            return Err(Error::IncompatibleSource { net: total });
        }
        if scale == 0.0 {
            return Ok(MixedSolution {
                pressure: vec![0.0; n],
                flux,
            });
        }
        let mut p = rhs.clone();
        p[0] = 0.0;
        self.lu.solve_in_place(&mut p);
        let mean = p.iter().sum::<f64>() / n as f64;
        p.iter_mut().for_each(|x| *x -= mean);
        for (e, f) in flux.iter_mut().enumerate() {
            if let (Some(l), Some(r)) = g.edge_cells(e) {
                *f = self.trans[e] * (p[l] - p[r]);
            }
        }
        let residual = (0..n)
            .map(|c| (g.cell_outflow(&flux, c) - rate[c]).abs())
            .fold(0.0_f64, f64::max);
        if residual > RESIDUAL_TOLERANCE * scale {
            return Err(Error::Residual {
                residual,
                tolerance: RESIDUAL_TOLERANCE * scale,
            });
        }
        Ok(MixedSolution { pressure: p, flux })
    }
}

/// Lowest-order mixed solve on the fine grid with no-flow boundaries.
///
/// On rectangles the lowest-order Raviart-Thomas pair with a lumped
/// velocity mass matrix is the two-point flux scheme with harmonic
/// transmissibilities. `source` is a density (rate per unit area).
pub fn solve_fine_mixed(grid: &StructuredGrid, coefficient: &[f64], source: &[f64]) -> Result<MixedSolution> {
    if source.len() != grid.num_cells() {
        return Err(Error::DimensionMismatch {
            context: "source",
            expected: grid.num_cells(),
            actual: source.len(),
        });
    }
    let a = grid.cell_area();
    let rate: Vec<f64> = source.iter().map(|q| q * a).collect();
    TpfaSystem::new(*grid, coefficient)?.solve(&rate, None)
}

/// Unit-mobility solve, the velocity used as global boundary information.
pub fn solve_singlephase_global(grid: &StructuredGrid, perm: &PermField, source: &[f64]) -> Result<MixedSolution> {
    solve_fine_mixed(grid, perm.values(), source)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn divergence_residual(g: &StructuredGrid, s: &MixedSolution, q: &[f64]) -> f64 {
        (0..g.num_cells())
            .map(|c| (g.cell_outflow(&s.flux, c) - q[c] * g.cell_area()).abs())
            .fold(0.0, f64::max)
    }

    fn perm(g: &StructuredGrid) -> Vec<f64> {
        (0..g.num_cells())
            .map(|c| {
                let (x, y) = g.center(c);
                (2.0 * (7.0 * x).sin() * (5.0 * y).cos()).exp()
            })
            .collect()
    }

    #[test]
    fn zero_source_zero_solution() {
        let g = StructuredGrid::unit(5, 4).unwrap();
        let s = solve_fine_mixed(&g, &vec![1.0; 20], &vec![0.0; 20]).unwrap();
        assert!(s.flux.iter().all(|&f| f == 0.0));
        assert!(s.pressure.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn five_spot_is_conservative() {
        let g = StructuredGrid::unit(20, 20).unwrap();
        let q = Wells::quarter_five_spot(&g, 1.0).source(&g);
        let s = solve_fine_mixed(&g, &perm(&g), &q).unwrap();
        assert!(divergence_residual(&g, &s, &q) <= 1e-10);
        for e in 0..g.num_edges() {
            if g.is_boundary_edge(e) {
                assert_eq!(s.flux[e], 0.0);
            }
        }
        assert!(s.pressure.iter().sum::<f64>().abs() < 1e-9);
        // injector sits at the high-pressure end
        let w = Wells::quarter_five_spot(&g, 1.0);
        assert!(s.pressure[w.injector] > s.pressure[w.producer]);
    }

    #[test]
    fn coefficient_scaling() {
        let g = StructuredGrid::unit(12, 9).unwrap();
        let q = Wells::quarter_five_spot(&g, 1.0).source(&g);
        let k = perm(&g);
        let a = solve_fine_mixed(&g, &k, &q).unwrap();
        let k3: Vec<f64> = k.iter().map(|v| 3.0 * v).collect();
        let b = solve_fine_mixed(&g, &k3, &q).unwrap();
        for (x, y) in a.flux.iter().zip(&b.flux) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in a.pressure.iter().zip(&b.pressure) {
            assert!((x / 3.0 - y).abs() < 1e-10);
        }
    }

    #[test]
    fn incompatible_source_rejected() {
        let g = StructuredGrid::unit(3, 3).unwrap();
        let mut q = vec![0.0; 9];
        q[0] = 1.0;
        assert!(matches!(
            solve_fine_mixed(&g, &vec![1.0; 9], &q),
            Err(Error::IncompatibleSource { .. })
        ));
        assert!(solve_fine_mixed(&g, &vec![0.0; 9], &vec![0.0; 9]).is_err());
    }

    #[test]
    fn one_dimensional_flow_is_linear() {
        // uniform flow between opposite faces of a column of cells
        let g = StructuredGrid::new(6, 1, 1.0, 1.0 / 6.0).unwrap();
        let sys = TpfaSystem::new(g, &vec![1.0; 6]).unwrap();
        let mut b = vec![0.0; g.num_edges()];
        b[g.x_edge(0, 0)] = 1.0;
        b[g.x_edge(6, 0)] = 1.0;
        let s = sys.solve(&vec![0.0; 6], Some(&b)).unwrap();
        for ix in 0..=6 {
            assert!((s.flux[g.x_edge(ix, 0)] - 1.0).abs() < 1e-12);
        }
        let dp: Vec<f64> = s.pressure.windows(2).map(|w| w[0] - w[1]).collect();
        assert!(dp.iter().all(|d| (d - dp[0]).abs() < 1e-12));
    }
}
