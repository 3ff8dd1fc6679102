use alloc::vec;
use alloc::vec::Vec;

use super::FracFlowModel;
use crate::field::StructuredGrid;
use crate::linalg::{BandLu, BandMatrix};
use crate::{Error, Result};

pub const NEWTON_TOLERANCE: f64 = 1e-10;
pub const MAX_NEWTON_ITERATIONS: usize = 25;
pub const MAX_HALVINGS: u32 = 10;
/// Bound violations up to this size are treated as roundoff and clipped.
pub const BOUNDS_SLACK: f64 = 1e-12;
/// Largest saturation change per Newton iteration for nonlinear f_w.
const MAX_CHANGE: f64 = 0.2;

enum Failure {
    Stalled(f64),
    Bounds(usize, f64),
    Fatal(Error),
}

/// Implicit upwind saturation stepper for a fixed velocity.
///
/// `rates` are integrated cell sources: positive entries inject water,
/// negative entries produce fluid at the local fractional flow.
pub struct SaturationStepper<'a> {
    grid: StructuredGrid,
    flux: &'a [f64],
    rates: &'a [f64],
    model: FracFlowModel,
    // linear model: the Jacobian only depends on dt
    cache: Option<(u64, BandLu)>,
}

impl<'a> SaturationStepper<'a> {
    pub fn new(grid: StructuredGrid, flux: &'a [f64], rates: &'a [f64], model: FracFlowModel) -> Result<Self> {
        model.validate()?;
        for (context, v, n) in [
            ("flux", flux, grid.num_edges()),
            ("rates", rates, grid.num_cells()),
        ] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n,
                    actual: v.len(),
                });
            }
        }
        Ok(SaturationStepper {
            grid,
            flux,
            rates,
            model,
            cache: None,
        })
    }

    fn assemble(&self, s: &[f64], s_old: &[f64], dt: f64, residual: &mut [f64], jac: Option<&mut BandMatrix>) {
        let g = &self.grid;
        let acc = g.cell_area() / dt;
        for (c, r) in residual.iter_mut().enumerate() {
            *r = acc * (s[c] - s_old[c]);
        }
        let mut jac = jac;
        if let Some(j) = jac.as_deref_mut() {
            for c in 0..g.num_cells() {
                j.set(c, c, acc);
            }
        }
        for (e, &f) in self.flux.iter().enumerate() {
            let (Some(l), Some(r)) = g.edge_cells(e) else {
                continue;
            };
            if f == 0.0 {
                continue;
            }
            let up = if f > 0.0 { l } else { r };
            let (fw, dfw) = self.model.eval(s[up]);
            residual[l] += f * fw;
            residual[r] -= f * fw;
            if let Some(j) = jac.as_deref_mut() {
                j.add(l, up, f * dfw);
                j.add(r, up, -f * dfw);
            }
        }
        for (c, &q) in self.rates.iter().enumerate() {
            if q > 0.0 {
                residual[c] -= q;
            } else if q < 0.0 {
                let (fw, dfw) = self.model.eval(s[c]);
                residual[c] -= q * fw;
                if let Some(j) = jac.as_deref_mut() {
                    j.add(c, c, -q * dfw);
                }
            }
        }
    }

    fn newton(&mut self, s_old: &[f64], dt: f64) -> core::result::Result<Vec<f64>, Failure> {
        let n = self.grid.num_cells();
        let bw = self.grid.nx();
        let mut s = s_old.to_vec();
        let mut trial = vec![0.0; n];
        let mut res = vec![0.0; n];
        let mut last = f64::INFINITY;
        let inflection = self.model.inflection();
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let cached = self.model.is_linear() && matches!(&self.cache, Some((k, _)) if *k == dt.to_bits());
            if cached {
                self.assemble(&s, s_old, dt, &mut res, None);
            } else {
                let mut j = BandMatrix::zeros(n, bw, bw);
                self.assemble(&s, s_old, dt, &mut res, Some(&mut j));
                let lu = j.factor().map_err(Failure::Fatal)?;
                self.cache = Some((dt.to_bits(), lu));
            }
            let lu = &self.cache.as_ref().expect("factored").1;
            lu.solve_in_place(&mut res);
            last = 0.0;
            for ((t, si), d) in trial.iter_mut().zip(&s).zip(&res) {
                *t = si - d;
                last = last.max(d.abs());
            }
            if !last.is_finite() {
                return Err(Failure::Stalled(last));
            }
            if last <= NEWTON_TOLERANCE {
                for (c, t) in trial.iter_mut().enumerate() {
                    if *t < -BOUNDS_SLACK || *t > 1.0 + BOUNDS_SLACK {
                        return Err(Failure::Bounds(c, *t));
                    }
                    *t = t.clamp(0.0, 1.0);
                }
                return Ok(trial);
            }
            // chopped update: bounded change that does not cross the
            // inflection point of f_w
            for (si, &t) in s.iter_mut().zip(&trial) {
                let mut next = t.clamp(0.0, 1.0);
                if let Some(inf) = inflection {
                    next = next.clamp(*si - MAX_CHANGE, *si + MAX_CHANGE);
                    if (*si - inf) * (next - inf) < 0.0 {
                        next = inf;
                    }
                }
                *si = next;
            }
        }
        Err(Failure::Stalled(last))
    }

    fn advance_halving(&mut self, s: &[f64], dt: f64, depth: u32) -> core::result::Result<Vec<f64>, Failure> {
        match self.newton(s, dt) {
            Ok(v) => Ok(v),
            Err(Failure::Fatal(e)) => Err(Failure::Fatal(e)),
            Err(f) if depth >= MAX_HALVINGS => Err(f),
            Err(_) => {
                let half = self.advance_halving(s, 0.5 * dt, depth + 1)?;
                self.advance_halving(&half, 0.5 * dt, depth + 1)
            }
        }
    }

    /// One implicit Euler step of length `dt`, split in halves on failure.
    pub fn advance(&mut self, s: &[f64], dt: f64) -> Result<Vec<f64>> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", alloc::format!("must be positive, got {dt}")));
        }
        if s.len() != self.grid.num_cells() {
            return Err(Error::DimensionMismatch {
                context: "saturation",
                expected: self.grid.num_cells(),
                actual: s.len(),
            });
        }
        if let Some(c) = s.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::SaturationBounds { cell: c, value: s[c] });
        }
        self.advance_halving(s, dt, 0).map_err(|f| match f {
            Failure::Fatal(e) => e,
            Failure::Bounds(cell, value) => Error::SaturationBounds { cell, value },
            Failure::Stalled(last_update) => Error::NewtonDiverged {
                halvings: MAX_HALVINGS,
                last_update,
            },
        })
    }
}

/// Advances `s` by one implicit upwind step with fixed edge fluxes.
pub fn advance_saturation(
    grid: &StructuredGrid,
    s: &[f64],
    flux: &[f64],
    rates: &[f64],
    dt: f64,
    model: FracFlowModel,
) -> Result<Vec<f64>> {
    SaturationStepper::new(*grid, flux, rates, model)?.advance(s, dt)
}

/// Water volume change minus net injected water over a step.
pub fn mass_balance_defect(
    grid: &StructuredGrid,
    before: &[f64],
    after: &[f64],
    rates: &[f64],
    dt: f64,
    model: FracFlowModel,
) -> f64 {
    let a = grid.cell_area();
    let stored: f64 = after.iter().zip(before).map(|(x, y)| (x - y) * a).sum();
    let net: f64 = rates
        .iter()
        .enumerate()
        .map(|(c, &q)| if q > 0.0 { q } else { q * model.eval(after[c]).0 })
        .sum();
    stored - net * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::{solve_fine_mixed, Wells};

    fn five_spot(n: usize) -> (StructuredGrid, Vec<f64>, Vec<f64>) {
        let g = StructuredGrid::unit(n, n).unwrap();
        let w = Wells::quarter_five_spot(&g, 1.0);
        let q = w.source(&g);
        let k: Vec<f64> = (0..g.num_cells())
            .map(|c| {
                let (x, y) = g.center(c);
                (1.5 * (7.0 * x + 3.0 * y).sin()).exp()
            })
            .collect();
        let u = solve_fine_mixed(&g, &k, &q).unwrap();
        let rates = q.iter().map(|v| v * g.cell_area()).collect();
        (g, u.flux, rates)
    }

    #[test]
    fn no_flow_is_stationary() {
        let g = StructuredGrid::unit(4, 3).unwrap();
        let s: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        for m in [FracFlowModel::Linear, FracFlowModel::quadratic()] {
            let out = advance_saturation(&g, &s, &vec![0.0; g.num_edges()], &vec![0.0; 12], 0.1, m).unwrap();
            for (a, b) in out.iter().zip(&s) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_saturation_is_fixed_point() {
        let (g, flux, rates) = five_spot(8);
        for m in [FracFlowModel::Linear, FracFlowModel::quadratic()] {
            let out = advance_saturation(&g, &vec![1.0; 64], &flux, &rates, 0.05, m).unwrap();
            assert!(out.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn one_dimensional_mass_balance() {
        let g = StructuredGrid::unit(20, 1).unwrap();
        let mut rates = vec![0.0; 20];
        rates[0] = 1.0;
        rates[19] = -1.0;
        let flux: Vec<f64> = (0..g.num_edges())
            .map(|e| match g.edge_cells(e) {
                (Some(_), Some(_)) => 1.0,
                _ => 0.0,
            })
            .collect();
        let mut s = vec![0.0; 20];
        let mut st = SaturationStepper::new(g, &flux, &rates, FracFlowModel::Linear).unwrap();
        for _ in 0..30 {
            let next = st.advance(&s, 0.05).unwrap();
            let d = mass_balance_defect(&g, &s, &next, &rates, 0.05, FracFlowModel::Linear);
            assert!(d.abs() < 1e-8);
            for (a, b) in next.iter().zip(&s) {
                assert!(*a >= *b - 1e-14);
            }
            s = next;
        }
        assert!(s[19] > 0.5);
    }

    #[test]
    fn bounds_and_balance_quadratic() {
        let (g, flux, rates) = five_spot(10);
        let m = FracFlowModel::quadratic();
        let mut s = vec![0.0; 100];
        let mut st = SaturationStepper::new(g, &flux, &rates, m).unwrap();
        for _ in 0..20 {
            let next = st.advance(&s, 0.02).unwrap();
            assert!(next.iter().all(|v| (0.0..=1.0).contains(v)));
            let d = mass_balance_defect(&g, &s, &next, &rates, 0.02, m);
            assert!(d.abs() < 1e-8, "defect {d}");
            s = next;
        }
    }

    #[test]
    fn huge_step_still_converges() {
        let (g, flux, rates) = five_spot(8);
        let out = advance_saturation(&g, &vec![0.0; 64], &flux, &rates, 50.0, FracFlowModel::quadratic()).unwrap();
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn rejects_bad_input() {
        let g = StructuredGrid::unit(2, 2).unwrap();
        let f = vec![0.0; g.num_edges()];
        let r = vec![0.0; 4];
        let m = FracFlowModel::Linear;
        assert!(advance_saturation(&g, &[0.0; 4], &f, &r, 0.0, m).is_err());
        assert!(advance_saturation(&g, &[0.0; 3], &f, &r, 0.1, m).is_err());
        assert!(matches!(
            advance_saturation(&g, &[0.0, 1.5, 0.0, 0.0], &f, &r, 0.1, m),
            Err(Error::SaturationBounds { cell: 1, .. })
        ));
    }
}
