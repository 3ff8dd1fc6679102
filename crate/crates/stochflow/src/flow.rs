//! The two-phase flow run as a stochastic model `theta -> QoI vector`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use stochflow_core::field::{realize_field, KLBasis, StructuredGrid};
use stochflow_core::hdmr::{Model, SensitivityMeasure};
use stochflow_core::pressure::{assemble_ms_basis_set, BoundaryData, CoarsePartition, VelocityLibrary, Wells};
use stochflow_core::transport::{impes_run, FineVelocity, FracFlowModel, ImpesResult, MultiscaleVelocity, Schedule};
use stochflow_core::{Error, Result};

use crate::config::{SensitivityFunctional, VelocityFlavor};

/// Position of each quantity inside a model output vector: the saturation
/// snapshots in schedule order, then the water-cut at every step time.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiLayout {
    pub cells: usize,
    pub snapshots: Vec<f64>,
    pub water_cut_times: Vec<f64>,
}

impl QoiLayout {
    pub fn new(grid: &StructuredGrid, schedule: &Schedule) -> Self {
        QoiLayout {
            cells: grid.num_cells(),
            snapshots: schedule.snapshots.clone(),
            water_cut_times: (0..=schedule.num_steps()).map(|k| schedule.step_time(k)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len() * self.cells + self.water_cut_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot<'a>(&self, v: &'a [f64], k: usize) -> &'a [f64] {
        &v[k * self.cells..(k + 1) * self.cells]
    }

    pub fn water_cut<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        &v[self.snapshots.len() * self.cells..]
    }

    pub fn pack(&self, run: &ImpesResult) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for (_, s) in &run.snapshots {
            out.extend_from_slice(s);
        }
        out.extend(run.water_cut.values());
        out
    }

    /// Collapses first-order variances to one number per dimension.
    pub fn measure(&self, functional: SensitivityFunctional, grid: &StructuredGrid) -> SensitivityMeasure {
        let mut w = vec![0.0; self.len()];
        match functional {
            SensitivityFunctional::FinalSaturation => {
                let last = self.snapshots.len() - 1;
                w[last * self.cells..(last + 1) * self.cells].fill(grid.cell_area());
                SensitivityMeasure::WeightedVariance(w)
            }
            SensitivityFunctional::WaterCutIntegral => {
                let off = self.snapshots.len() * self.cells;
                for (k, t) in self.water_cut_times.windows(2).enumerate() {
                    let h = 0.5 * (t[1] - t[0]);
                    w[off + k] += h;
                    w[off + k + 1] += h;
                }
                SensitivityMeasure::LinearFunctional(w)
            }
        }
    }
}

/// Everything a single flow run needs apart from `theta`.
#[derive(Debug, Clone)]
pub struct FlowSetup {
    pub partition: CoarsePartition,
    pub klb: KLBasis,
    pub wells: Wells,
    pub source: Vec<f64>,
    pub schedule: Schedule,
    pub model: FracFlowModel,
    pub layout: QoiLayout,
}

impl FlowSetup {
    pub fn new(partition: CoarsePartition, klb: KLBasis, rate: f64, schedule: Schedule, model: FracFlowModel) -> Self {
        let grid = *partition.fine();
        let wells = Wells::quarter_five_spot(&grid, rate);
        FlowSetup {
            source: wells.source(&grid),
            layout: QoiLayout::new(&grid, &schedule),
            partition,
            klb,
            wells,
            schedule,
            model,
        }
    }

    pub fn grid(&self) -> &StructuredGrid {
        self.partition.fine()
    }

    pub fn dim(&self) -> usize {
        self.klb.n_terms()
    }

    /// One flooding run with the given pressure solver.
    pub fn simulate(
        &self,
        flavor: VelocityFlavor,
        library: Option<&VelocityLibrary>,
        theta: &[f64],
    ) -> Result<ImpesResult> {
        let perm = realize_field(&self.klb, theta)?;
        let grid = self.grid();
        match flavor {
            VelocityFlavor::Fine => {
                let mut v = FineVelocity {
                    grid: *grid,
                    perm: perm.values(),
                    source: &self.source,
                };
                impes_run(grid, &mut v, self.model, &self.wells, &self.schedule)
            }
            VelocityFlavor::LocalMs | VelocityFlavor::GlobalMs => {
                let boundary;
                let data = if flavor == VelocityFlavor::GlobalMs {
                    let lib = library.ok_or_else(|| Error::InvalidArgument {
                        name: "library",
                        reason: "the global multiscale solver needs a velocity library".into(),
                    })?;
                    boundary = lib.boundary_flux(theta)?;
                    BoundaryData::Global(&boundary)
                } else {
                    BoundaryData::Local
                };
                let set = assemble_ms_basis_set(&self.partition, perm.values(), &self.source, data)?;
                let mut v = MultiscaleVelocity {
                    basis: &set,
                    perm: perm.values(),
                    source: &self.source,
                };
                impes_run(grid, &mut v, self.model, &self.wells, &self.schedule)
            }
        }
    }
}

fn key(theta: &[f64]) -> Vec<u64> {
    theta.iter().map(|x| (x + 0.0).to_bits()).collect()
}

/// Outputs already computed, shared by every model of one flavor.
#[derive(Debug, Default)]
pub struct Memo {
    values: Mutex<HashMap<Vec<u64>, Arc<Vec<f64>>>>,
    solves: AtomicU64,
}

impl Memo {
    /// Flow runs actually performed.
    pub fn solves(&self) -> u64 {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.values.lock().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// [`Model`] over the flow runs of one pressure solver. Batches run in
/// parallel on the current rayon pool; repeated points are served from the
/// memo.
#[derive(Clone)]
pub struct FlowModel {
    setup: Arc<FlowSetup>,
    flavor: VelocityFlavor,
    library: Option<Arc<VelocityLibrary>>,
    memo: Arc<Memo>,
}

impl FlowModel {
    pub fn new(
        setup: Arc<FlowSetup>,
        flavor: VelocityFlavor,
        library: Option<Arc<VelocityLibrary>>,
        memo: Arc<Memo>,
    ) -> Self {
        FlowModel {
            setup,
            flavor,
            library,
            memo,
        }
    }

    pub fn flavor(&self) -> VelocityFlavor {
        self.flavor
    }

    pub fn memo(&self) -> &Memo {
        &self.memo
    }

    fn run(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let r = self
            .setup
            .simulate(self.flavor, self.library.as_deref(), theta)
            .map_err(|e| match e {
                e @ Error::Evaluation { .. } => e,
                e => Error::Evaluation {
                    theta: theta.to_vec(),
                    message: e.to_string(),
                },
            })?;
        self.memo.solves.fetch_add(1, Ordering::Relaxed);
        Ok(self.setup.layout.pack(&r))
    }
}

impl Model for FlowModel {
    fn dim(&self) -> usize {
        self.setup.dim()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate_batch(&[theta.to_vec()])?.pop().expect("one output"))
    }

    fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let keys: Vec<Vec<u64>> = points.iter().map(|p| key(p)).collect();
        let missing: Vec<usize> = {
            let memo = self.memo.values.lock().expect("memo lock");
            let mut seen = std::collections::HashSet::new();
            (0..points.len())
                .filter(|&i| !memo.contains_key(&keys[i]) && seen.insert(&keys[i]))
                .collect()
        };
        let fresh: Vec<Result<Vec<f64>>> = missing.par_iter().map(|&i| self.run(&points[i])).collect();
        let mut memo = self.memo.values.lock().expect("memo lock");
        for (&i, r) in missing.iter().zip(fresh) {
            memo.insert(keys[i].clone(), Arc::new(r?));
        }
        Ok(keys.iter().map(|k| memo[k].as_ref().clone()).collect())
    }
}
