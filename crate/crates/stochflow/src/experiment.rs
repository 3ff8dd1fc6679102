//! Method runs: full sparse-grid collocation, hybrid and adaptive HDMR, each
//! with a fine or multiscale pressure solver.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, ensure, Context as _, Result};
use serde::{Deserialize, Serialize};
use stochflow_core::field::KLBasis;
use stochflow_core::hdmr::{
    adaptive_stats, build_adaptive, build_hybrid, evaluate_lines, hybrid_stats, sensitivity_select, HdmrLevels, Model,
    Moments, SensitivityReport,
};
use stochflow_core::pressure::CoarsePartition;
use stochflow_core::sparsegrid::{build_sparse_grid_with_budget, count_nodes};
use stochflow_core::Error;

use crate::config::{ExperimentConfig, MethodKind, Reduction, VelocityFlavor};
use crate::flow::{FlowModel, FlowSetup, Memo};
use crate::library::{klb_key, load_or_build_klb, LibraryStore};
use crate::metrics::{relative_errors, ErrorSplit};

/// Level of the first-order lines used to rank dimensions.
pub const SENSITIVITY_LEVEL: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

/// Model evaluations of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub n_terms: usize,
    pub level: u32,
    pub level_inactive: u32,
    pub order: Option<usize>,
    /// Collocation count of the construction (anchor counted once).
    pub conventional: u64,
    /// Distinct points the construction evaluated.
    pub unique: u64,
    /// Flow runs this call performed; earlier runs of the same solver are
    /// reused.
    pub flow_solves: u64,
    /// Single-phase library solves this call performed.
    pub library_solves: u64,
    /// Component interpolations of the adaptive variance.
    pub interpolations: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoIStats {
    pub method: MethodKind,
    pub nx: usize,
    pub ny: usize,
    pub domain: [f64; 2],
    pub snapshot_pvi: Vec<f64>,
    /// Row-major cell fields, one per snapshot.
    pub mean_saturation: Vec<Vec<f64>>,
    pub std_saturation: Vec<Vec<f64>>,
    pub water_cut_pvi: Vec<f64>,
    pub mean_water_cut: Vec<f64>,
    pub std_water_cut: Vec<f64>,
    /// Active dimensions of HDMR methods.
    pub active: Option<Vec<usize>>,
    pub ledger: RunLedger,
    pub timings: Vec<PhaseTiming>,
}

impl QoIStats {
    pub fn seconds(&self, phase: &str) -> f64 {
        self.timings.iter().filter(|t| t.phase == phase).map(|t| t.seconds).sum()
    }
}

struct Timer(Vec<PhaseTiming>);

impl Timer {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push(PhaseTiming {
            phase: phase.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Shared state of several runs on one configuration: the KL basis, the
/// global velocity library, one memo of flow outputs per solver and the
/// sensitivity reports.
pub struct Experiment {
    config: ExperimentConfig,
    key: String,
    setup: Arc<FlowSetup>,
    memos: HashMap<VelocityFlavor, Arc<Memo>>,
    library: Option<LibraryStore>,
    sensitivity: HashMap<VelocityFlavor, SensitivityReport>,
    pool: rayon::ThreadPool,
    kle_seconds: f64,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let start = Instant::now();
        let (klb, hit) = load_or_build_klb(&config, config.cache_dir().as_deref())?;
        log::info!("KL basis {} ({} terms)", if hit { "loaded" } else { "computed" }, klb.n_terms());
        let mut e = Self::with_basis(config, klb)?;
        e.kle_seconds = start.elapsed().as_secs_f64();
        Ok(e)
    }

    /// Uses a given KL basis instead of the configured covariance.
    pub fn with_basis(config: ExperimentConfig, klb: KLBasis) -> Result<Self> {
        config.validate()?;
        ensure!(
            klb.n_terms() == config.kle.n_terms && *klb.grid() == config.fine_grid()?,
            "KL basis does not match the configured grid and term count"
        );
        let partition = CoarsePartition::new(config.fine_grid()?, config.coarse_grid()?)?;
        let setup = FlowSetup::new(
            partition,
            klb,
            config.flow.rate,
            config.schedule()?,
            config.frac_flow(),
        );
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(k) = config.run.workers {
            pool = pool.num_threads(k);
        }
        // an injected basis must not share cache entries with the configured one
        let key = klb_key(&config) + &format!("-{:x}", fingerprint(&setup.klb));
        Ok(Experiment {
            key,
            setup: Arc::new(setup),
            memos: HashMap::new(),
            library: None,
            sensitivity: HashMap::new(),
            pool: pool.build()?,
            kle_seconds: 0.0,
            config,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn setup(&self) -> &FlowSetup {
        &self.setup
    }

    pub fn library(&self) -> Option<&LibraryStore> {
        self.library.as_ref()
    }

    fn memo(&mut self, flavor: VelocityFlavor) -> Arc<Memo> {
        self.memos.entry(flavor).or_default().clone()
    }

    fn library_solves(&self) -> u64 {
        self.library.as_ref().map_or(0, LibraryStore::solves)
    }

    /// Solves (or loads) the single-phase velocities on the given lines.
    pub fn precompute_library(&mut self, needs: &[(usize, u32)]) -> Result<&LibraryStore> {
        let setup = self.setup.clone();
        if self.library.is_none() {
            let anchor = self.config.anchor();
            let cache = self.config.cache_dir();
            let store = self
                .pool
                .install(|| LibraryStore::open(&setup, &anchor, &self.key, cache.as_deref()))?;
            self.library = Some(store);
        }
        let store = self.library.as_mut().expect("opened above");
        self.pool.install(|| store.ensure(&setup, needs))?;
        Ok(store)
    }

    /// The flow model of `flavor`; the global one sees the library as it is
    /// now.
    pub fn model(&mut self, flavor: VelocityFlavor) -> Result<FlowModel> {
        let library = match flavor {
            VelocityFlavor::GlobalMs => {
                let store = self.library.as_ref().context("velocity library not precomputed")?;
                Some(Arc::new(store.library().clone()))
            }
            _ => None,
        };
        Ok(FlowModel::new(self.setup.clone(), flavor, library, self.memo(flavor)))
    }

    /// First-order variances of the configured functional along every
    /// coordinate and the dimensions selected by `zeta`.
    pub fn sensitivity(&mut self, flavor: VelocityFlavor) -> Result<SensitivityReport> {
        if let Some(r) = self.sensitivity.get(&flavor) {
            return Ok(r.clone());
        }
        let n = self.setup.dim();
        let all: Vec<usize> = (0..n).collect();
        if flavor == VelocityFlavor::GlobalMs {
            let needs: Vec<_> = all.iter().map(|&d| (d, SENSITIVITY_LEVEL)).collect();
            self.precompute_library(&needs)?;
        }
        let model = self.model(flavor)?;
        let anchor = self.config.anchor();
        let (_, lines) = self
            .pool
            .install(|| evaluate_lines(&model, &anchor, &all, SENSITIVITY_LEVEL))?;
        let measure = self
            .setup
            .layout
            .measure(self.config.hdmr.sensitivity, self.setup.grid());
        let variances = (0..n)
            .map(|k| measure.variance(lines.rule(), lines.values(k)))
            .collect::<stochflow_core::Result<Vec<_>>>()?;
        let report = match sensitivity_select(&variances, self.config.hdmr.zeta) {
            Ok(r) => r,
            // a deterministic model: any single dimension represents it exactly
            Err(Error::NoActiveDimension) => {
                log::warn!("all first-order variances vanish; using dimension 0 as the active set");
                SensitivityReport {
                    variances,
                    order: all,
                    zeta: self.config.hdmr.zeta,
                    selected: 1,
                    active: vec![0],
                }
            }
            Err(e) => return Err(e.into()),
        };
        self.sensitivity.insert(flavor, report.clone());
        Ok(report)
    }

    fn active(&mut self, flavor: VelocityFlavor) -> Result<Vec<usize>> {
        match &self.config.hdmr.active {
            Some(a) => Ok(a.clone()),
            None => Ok(self.sensitivity(flavor)?.active),
        }
    }

    pub fn run(&mut self, method: MethodKind) -> Result<QoIStats> {
        self.run_with(method, method.flavor(), method.reduction())
            .with_context(|| format!("running {method}"))
    }

    fn run_with(&mut self, method: MethodKind, flavor: VelocityFlavor, reduction: Reduction) -> Result<QoIStats> {
        let mut timer = Timer(vec![PhaseTiming {
            phase: "kle".into(),
            seconds: self.kle_seconds,
        }]);
        let memo = self.memo(flavor);
        let flow_before = memo.solves();
        let lib_before = self.library_solves();
        let h = self.config.hdmr.clone();
        let n = self.setup.dim();
        let anchor = self.config.anchor();

        let active = match reduction {
            Reduction::Full => None,
            _ => Some(timer.time("sensitivity", || self.active(flavor))?),
        };
        if flavor == VelocityFlavor::GlobalMs {
            let needs: Vec<(usize, u32)> = (0..n)
                .map(|d| match &active {
                    Some(a) if !a.contains(&d) => (d, h.level_inactive),
                    _ => (d, h.level),
                })
                .collect();
            timer.time("library", || self.precompute_library(&needs).map(|_| ()))?;
        }
        let model = self.model(flavor)?;
        let levels = HdmrLevels {
            level: h.level,
            level_inactive: h.level_inactive,
            budget: h.node_budget,
        };
        let pool = &self.pool;

        let mut ledger = RunLedger {
            n_terms: n,
            level: h.level,
            level_inactive: h.level_inactive,
            ..RunLedger::default()
        };
        let moments: Moments = match reduction {
            Reduction::Full => {
                let grid = build_sparse_grid_with_budget(n, h.level, h.node_budget)?;
                let points: Vec<Vec<f64>> = grid.nodes().map(<[f64]>::to_vec).collect();
                let values = timer.time("collocation", || pool.install(|| model.evaluate_batch(&points)))?;
                ledger.conventional = count_nodes(n, h.level);
                ledger.unique = grid.num_nodes() as u64;
                let (mean, variance) = timer.time("statistics", || grid.moments(&values))?;
                Moments { mean, variance }
            }
            Reduction::Hybrid => {
                let active = active.as_deref().expect("hdmr method");
                let dec = timer.time("collocation", || pool.install(|| build_hybrid(&model, active, &anchor, levels)))?;
                ledger.conventional = dec.ledger().conventional;
                ledger.unique = dec.ledger().unique;
                timer.time("statistics", || hybrid_stats(&dec))?
            }
            Reduction::Adaptive => {
                let active = active.as_deref().expect("hdmr method");
                let order = h.order.min(active.len());
                if order < h.order {
                    log::warn!("adaptive order {} capped at the {} active dimensions", h.order, active.len());
                }
                ledger.order = Some(order);
                let dec = timer.time("collocation", || {
                    pool.install(|| build_adaptive(&model, active, order, &anchor, levels))
                })?;
                ledger.conventional = dec.ledger().conventional;
                ledger.unique = dec.ledger().unique;
                let am = timer.time("statistics", || -> Result<_> {
                    let outer = build_sparse_grid_with_budget(n, h.level, h.node_budget)?;
                    Ok(adaptive_stats(&dec, &outer)?)
                })?;
                ledger.interpolations = Some(am.interpolations);
                am.moments
            }
        };
        ledger.flow_solves = memo.solves() - flow_before;
        ledger.library_solves = self.library_solves() - lib_before;
        Ok(self.assemble(method, moments, active, ledger, timer.0))
    }

    fn assemble(
        &self,
        method: MethodKind,
        m: Moments,
        active: Option<Vec<usize>>,
        ledger: RunLedger,
        timings: Vec<PhaseTiming>,
    ) -> QoIStats {
        let layout = &self.setup.layout;
        let std: Vec<f64> = m.variance.iter().map(|v| v.max(0.0).sqrt()).collect();
        let k = layout.snapshots.len();
        QoIStats {
            method,
            nx: self.setup.grid().nx(),
            ny: self.setup.grid().ny(),
            domain: [self.setup.grid().lx(), self.setup.grid().ly()],
            snapshot_pvi: layout.snapshots.clone(),
            mean_saturation: (0..k).map(|i| layout.snapshot(&m.mean, i).to_vec()).collect(),
            std_saturation: (0..k).map(|i| layout.snapshot(&std, i).to_vec()).collect(),
            water_cut_pvi: layout.water_cut_times.clone(),
            mean_water_cut: layout.water_cut(&m.mean).to_vec(),
            std_water_cut: layout.water_cut(&std).to_vec(),
            active,
            ledger,
            timings,
        }
    }

    /// Splits the error of a multiscale reduced method at `pvi`. The fine
    /// solver is run with the same reduction, so both see identical nodes.
    pub fn error_split(&mut self, method: MethodKind, reference: &QoIStats, pvi: f64) -> Result<ErrorSplit> {
        if method.flavor() == VelocityFlavor::Fine {
            bail!("{method} has no multiscale error");
        }
        let test = self.run(method)?;
        // rank dimensions with the fine solver's own sensitivity
        let fine = self.run_with(MethodKind::MfemFull, VelocityFlavor::Fine, method.reduction())?;
        Ok(ErrorSplit {
            multiscale: relative_errors(&fine, &test, pvi)?,
            reduction: relative_errors(reference, &fine, pvi)?,
        })
    }
}

fn fingerprint(klb: &KLBasis) -> u64 {
    // FNV-1a over the bit patterns
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in klb.eigenvalues().iter().chain(klb.eigenfunctions()).chain(klb.mean_field()) {
        h = (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Builds an experiment and runs one method.
pub fn run_experiment(config: &ExperimentConfig, method: MethodKind) -> Result<QoIStats> {
    Experiment::new(config.clone())?.run(method)
}

/// Solves the global velocity library a config needs and reports how many
/// single-phase solves that took. Lines use level `level` on the configured
/// active set (every dimension when none is given) and `level_inactive`
/// elsewhere.
pub fn precompute_global_library(config: &ExperimentConfig) -> Result<LibraryStore> {
    let mut e = Experiment::new(config.clone())?;
    let h = &config.hdmr;
    let needs: Vec<(usize, u32)> = (0..config.kle.n_terms)
        .map(|d| match &h.active {
            Some(a) if !a.contains(&d) => (d, h.level_inactive),
            _ => (d, h.level),
        })
        .collect();
    e.precompute_library(&needs)?;
    Ok(e.library.take().expect("library opened"))
}
