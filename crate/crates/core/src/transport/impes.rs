use alloc::vec::Vec;

use super::{water_cut, FracFlowModel, SaturationStepper};
use crate::field::StructuredGrid;
use crate::pressure::{solve_coarse, solve_fine_mixed, MsBasisSet, Wells};
use crate::{Error, Result};

/// Produces fine edge fluxes for a given total mobility per cell.
pub trait VelocitySolver {
    fn solve(&mut self, mobility: &[f64]) -> Result<Vec<f64>>;
}

fn scaled(perm: &[f64], mobility: &[f64]) -> Vec<f64> {
    perm.iter().zip(mobility).map(|(k, l)| k * l).collect()
}

/// Fine two-point mixed solver.
pub struct FineVelocity<'a> {
    pub grid: StructuredGrid,
    pub perm: &'a [f64],
    /// Source density.
    pub source: &'a [f64],
}

impl VelocitySolver for FineVelocity<'_> {
    fn solve(&mut self, mobility: &[f64]) -> Result<Vec<f64>> {
        Ok(solve_fine_mixed(&self.grid, &scaled(self.perm, mobility), self.source)?.flux)
    }
}

/// Mixed multiscale solver on a basis set built once and kept frozen.
pub struct MultiscaleVelocity<'a> {
    pub basis: &'a MsBasisSet,
    pub perm: &'a [f64],
    pub source: &'a [f64],
}

impl VelocitySolver for MultiscaleVelocity<'_> {
    fn solve(&mut self, mobility: &[f64]) -> Result<Vec<f64>> {
        Ok(solve_coarse(self.basis, &scaled(self.perm, mobility), self.source)?.fine_flux)
    }
}

/// Time stepping of a flooding run, with times in pore volumes injected.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub dt_pvi: f64,
    pub t_end_pvi: f64,
    /// Times at which to keep the saturation field; each must be a step time
    /// in `(0, t_end_pvi]`.
    pub snapshots: Vec<f64>,
}

impl Schedule {
    pub fn new(dt_pvi: f64, t_end_pvi: f64, snapshots: Vec<f64>) -> Result<Self> {
        let s = Schedule {
            dt_pvi,
            t_end_pvi,
            snapshots,
        };
        s.validate()?;
        Ok(s)
    }

    /// Number of steps; the last step may be shortened to land on `t_end_pvi`.
    pub fn num_steps(&self) -> usize {
        if self.t_end_pvi == 0.0 {
            return 0;
        }
        libm::ceil(self.t_end_pvi / self.dt_pvi - 1e-9) as usize
    }

    pub fn step_time(&self, k: usize) -> f64 {
        if k == self.num_steps() {
            self.t_end_pvi
        } else {
            k as f64 * self.dt_pvi
        }
    }

    fn snapshot_steps(&self) -> Result<Vec<usize>> {
        self.snapshots
            .iter()
            .map(|&t| {
                let n = self.num_steps();
                (1..=n)
                    .find(|&k| (self.step_time(k) - t).abs() <= 1e-9 * self.t_end_pvi.max(1.0))
                    .ok_or_else(|| {
                        Error::invalid(
                            "snapshots",
                            alloc::format!("{t} is not a step time in (0, {}]", self.t_end_pvi),
                        )
                    })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_pvi > 0.0 && self.dt_pvi.is_finite()) {
            return Err(Error::invalid("dt_pvi", alloc::format!("must be positive, got {}", self.dt_pvi)));
        }
        if !(self.t_end_pvi >= 0.0 && self.t_end_pvi.is_finite()) {
            return Err(Error::invalid(
                "t_end_pvi",
                alloc::format!("must be non-negative, got {}", self.t_end_pvi),
            ));
        }
        self.snapshot_steps().map(|_| ())
    }
}

/// Water-cut against pore volumes injected, starting at `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaterCutSeries {
    pub points: Vec<(f64, f64)>,
    pub producer: usize,
    pub pore_volume: f64,
}

impl WaterCutSeries {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpesResult {
    /// `(pvi, saturation)` at the requested snapshot times.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub water_cut: WaterCutSeries,
    pub final_saturation: Vec<f64>,
    /// Pressure solves performed, the initial one included.
    pub velocity_solves: usize,
}

/// Water flooding from `S = 0`: pressure at the start of each step, then an
/// implicit saturation step. With the linear model the velocity does not
/// depend on saturation and is solved once.
pub fn impes_run<V: VelocitySolver>(
    grid: &StructuredGrid,
    velocity: &mut V,
    model: FracFlowModel,
    wells: &Wells,
    schedule: &Schedule,
) -> Result<ImpesResult> {
    model.validate()?;
    schedule.validate()?;
    let n = grid.num_cells();
    for (name, c) in [("injector", wells.injector), ("producer", wells.producer)] {
        if c >= n {
            return Err(Error::invalid(name, alloc::format!("cell {c} outside grid of {n} cells")));
        }
    }
    if !(wells.rate > 0.0) {
        return Err(Error::invalid("rate", alloc::format!("must be positive, got {}", wells.rate)));
    }
    let pore_volume = grid.domain_area();
    let time_scale = pore_volume / wells.rate;
    let mut rates = alloc::vec![0.0; n];
    rates[wells.injector] += wells.rate;
    rates[wells.producer] -= wells.rate;

    let mut s = alloc::vec![0.0; n];
    let mut mobility: Vec<f64> = s.iter().map(|&v| model.mobility(v)).collect();
    let mut flux = velocity.solve(&mobility)?;
    let mut solves = 1;
    let snap_steps = schedule.snapshot_steps()?;
    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let mut points = Vec::with_capacity(schedule.num_steps() + 1);
    points.push((0.0, water_cut(&s, model, wells.producer)));

    let steps = schedule.num_steps();
    if model.is_linear() {
        let mut stepper = SaturationStepper::new(*grid, &flux, &rates, model)?;
        for k in 1..=steps {
            let dt = (schedule.step_time(k) - schedule.step_time(k - 1)) * time_scale;
            s = stepper.advance(&s, dt)?;
            record(schedule, k, &s, model, wells, &snap_steps, &mut snapshots, &mut points);
        }
    } else {
        for k in 1..=steps {
            if k > 1 {
                for (m, &v) in mobility.iter_mut().zip(&s) {
                    *m = model.mobility(v);
                }
                flux = velocity.solve(&mobility)?;
                solves += 1;
            }
            let dt = (schedule.step_time(k) - schedule.step_time(k - 1)) * time_scale;
            s = SaturationStepper::new(*grid, &flux, &rates, model)?.advance(&s, dt)?;
            record(schedule, k, &s, model, wells, &snap_steps, &mut snapshots, &mut points);
        }
    }
    Ok(ImpesResult {
        snapshots,
        water_cut: WaterCutSeries {
            points,
            producer: wells.producer,
            pore_volume,
        },
        final_saturation: s,
        velocity_solves: solves,
    })
}

#[allow(clippy::too_many_arguments)]
fn record(
    schedule: &Schedule,
    k: usize,
    s: &[f64],
    model: FracFlowModel,
    wells: &Wells,
    snap_steps: &[usize],
    snapshots: &mut Vec<(f64, Vec<f64>)>,
    points: &mut Vec<(f64, f64)>,
) {
    let t = schedule.step_time(k);
    points.push((t, water_cut(s, model, wells.producer)));
    for (i, &ks) in snap_steps.iter().enumerate() {
        if ks == k {
            snapshots.push((schedule.snapshots[i], s.to_vec()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::pressure::{assemble_ms_basis_set, BoundaryData, CoarsePartition};

    struct Counting<'a> {
        inner: FineVelocity<'a>,
        fluxes: Vec<Vec<f64>>,
    }

    impl VelocitySolver for Counting<'_> {
        fn solve(&mut self, mobility: &[f64]) -> Result<Vec<f64>> {
            let f = self.inner.solve(mobility)?;
            self.fluxes.push(f.clone());
            Ok(f)
        }
    }

    fn setup(n: usize) -> (StructuredGrid, Vec<f64>, Wells, Vec<f64>) {
        let g = StructuredGrid::unit(n, n).unwrap();
        let k: Vec<f64> = (0..g.num_cells())
            .map(|c| {
                let (x, y) = g.center(c);
                (1.2 * (5.0 * x - 4.0 * y).cos()).exp()
            })
            .collect();
        let w = Wells::quarter_five_spot(&g, 1.0);
        let q = w.source(&g);
        (g, k, w, q)
    }

    #[test]
    fn schedule() {
        let s = Schedule::new(0.02, 0.4, vec![0.2, 0.4]).unwrap();
        assert_eq!(s.num_steps(), 20);
        assert_eq!(Schedule::new(0.3, 0.4, vec![]).unwrap().num_steps(), 2);
        assert!(Schedule::new(0.02, 0.4, vec![0.21]).is_err());
        assert!(Schedule::new(0.02, 0.4, vec![0.6]).is_err());
        assert!(Schedule::new(0.0, 0.4, vec![]).is_err());
    }

    #[test]
    fn zero_end_time() {
        let (g, k, w, q) = setup(6);
        let mut v = FineVelocity { grid: g, perm: &k, source: &q };
        let r = impes_run(&g, &mut v, FracFlowModel::Linear, &w, &Schedule::new(0.02, 0.0, vec![]).unwrap()).unwrap();
        assert!(r.snapshots.is_empty());
        assert_eq!(r.water_cut.points, vec![(0.0, 0.0)]);
    }

    #[test]
    fn linear_velocity_is_solved_once() {
        let (g, k, w, q) = setup(8);
        let mut v = Counting {
            inner: FineVelocity { grid: g, perm: &k, source: &q },
            fluxes: vec![],
        };
        let sch = Schedule::new(0.05, 1.0, vec![0.5, 1.0]).unwrap();
        let r = impes_run(&g, &mut v, FracFlowModel::Linear, &w, &sch).unwrap();
        assert_eq!(r.velocity_solves, 1);
        assert_eq!(v.fluxes.len(), 1);
        assert_eq!(r.snapshots.len(), 2);
        assert_eq!(r.snapshots[1].1, r.final_saturation);
        let wc: Vec<f64> = r.water_cut.values().collect();
        assert_eq!(wc.len(), 21);
        assert!(wc.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(wc[20] > 0.0);
        let t: Vec<f64> = r.water_cut.times().collect();
        assert!(t.windows(2).all(|p| p[1] > p[0]));
        // injector-adjacent cells keep filling
        let mut prev = vec![0.0; g.num_cells()];
        let mut v2 = FineVelocity { grid: g, perm: &k, source: &q };
        for end in [0.25, 0.5, 0.75] {
            let r = impes_run(&g, &mut v2, FracFlowModel::Linear, &w, &Schedule::new(0.05, end, vec![]).unwrap())
                .unwrap();
            for c in [w.injector, g.cell(1, 7), g.cell(0, 6)] {
                assert!(r.final_saturation[c] >= prev[c]);
            }
            prev = r.final_saturation;
        }
    }

    #[test]
    fn quadratic_resolves_velocity() {
        let (g, k, w, q) = setup(8);
        let mut v = Counting {
            inner: FineVelocity { grid: g, perm: &k, source: &q },
            fluxes: vec![],
        };
        let sch = Schedule::new(0.1, 0.5, vec![0.5]).unwrap();
        let r = impes_run(&g, &mut v, FracFlowModel::quadratic(), &w, &sch).unwrap();
        assert_eq!(r.velocity_solves, 5);
        assert!(v.fluxes[0] != v.fluxes[4]);
    }

    #[test]
    fn deterministic_and_multiscale_close() {
        let (g, k, w, q) = setup(12);
        let sch = Schedule::new(0.05, 0.5, vec![0.5]).unwrap();
        let run = |m| {
            let mut v = FineVelocity { grid: g, perm: &k, source: &q };
            impes_run(&g, &mut v, m, &w, &sch).unwrap()
        };
        assert_eq!(run(FracFlowModel::quadratic()), run(FracFlowModel::quadratic()));
        let p = CoarsePartition::new(g, StructuredGrid::unit(3, 3).unwrap()).unwrap();
        let set = assemble_ms_basis_set(&p, &k, &q, BoundaryData::Local).unwrap();
        let mut ms = MultiscaleVelocity { basis: &set, perm: &k, source: &q };
        let a = impes_run(&g, &mut ms, FracFlowModel::Linear, &w, &sch).unwrap();
        let b = run(FracFlowModel::Linear);
        let l1: f64 = a.final_saturation.iter().zip(&b.final_saturation).map(|(x, y)| (x - y).abs()).sum();
        let norm: f64 = b.final_saturation.iter().sum();
        assert!(l1 / norm < 0.3);
    }
}
