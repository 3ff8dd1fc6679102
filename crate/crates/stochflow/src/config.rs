//! Experiment configuration, read from TOML with unknown keys rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};
use stochflow_core::field::{CovarianceSpec, StructuredGrid};
use stochflow_core::sparsegrid::DEFAULT_NODE_BUDGET;
use stochflow_core::transport::{FracFlowModel, Schedule, DEFAULT_VISCOSITY_RATIO};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "STOCHFLOW_CACHE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub covariance: CovarianceConfig,
    pub kle: KleConfig,
    pub hdmr: HdmrConfig,
    pub flow: FlowConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Fine cells `[nx, ny]`.
    pub fine: [usize; 2],
    /// Coarse blocks `[nx, ny]`; must divide the fine grid.
    pub coarse: [usize; 2],
    /// Domain edge lengths.
    pub domain: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CovarianceConfig {
    pub sigma2: f64,
    pub corr_x: f64,
    pub corr_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum MeanField {
    Zero,
    /// Synthetic channelized log-permeability mean on top of `base`.
    Channelized { base: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    /// Independent uniform coordinates on `[-1, 1]`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KleConfig {
    pub n_terms: usize,
    pub mean: MeanField,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityFunctional {
    /// Area-weighted saturation variance at the last snapshot.
    FinalSaturation,
    /// Variance of the time-integrated water-cut.
    WaterCutIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdmrConfig {
    pub zeta: f64,
    /// Smolyak level on the active block (and of full-dimension grids).
    pub level: u32,
    /// Level of the 1-D lines on inactive dimensions.
    pub level_inactive: u32,
    /// Truncation order `q` of the adaptive variant.
    pub order: usize,
    /// Anchor point; the origin when absent.
    pub anchor: Option<Vec<f64>>,
    /// Active dimensions; selected by the sensitivity pass when absent.
    pub active: Option<Vec<usize>>,
    pub sensitivity: SensitivityFunctional,
    pub node_budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub model: FlowKind,
    /// `mu_w / mu_o` of the quadratic model.
    pub viscosity_ratio: f64,
    /// Total injection rate.
    pub rate: f64,
    pub dt_pvi: f64,
    pub t_end_pvi: f64,
    /// Saturation snapshot times in PVI.
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    MfemFull,
    LMsFull,
    GMsFull,
    LMsHybrid,
    GMsHybrid,
    LMsAdaptive,
    GMsAdaptive,
}

/// Pressure solver used inside a method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VelocityFlavor {
    Fine,
    LocalMs,
    GlobalMs,
}

/// Treatment of the stochastic space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Full,
    Hybrid,
    Adaptive,
}

impl MethodKind {
    pub const ALL: [MethodKind; 7] = [
        MethodKind::MfemFull,
        MethodKind::LMsFull,
        MethodKind::GMsFull,
        MethodKind::LMsHybrid,
        MethodKind::GMsHybrid,
        MethodKind::LMsAdaptive,
        MethodKind::GMsAdaptive,
    ];

    pub fn flavor(self) -> VelocityFlavor {
        use MethodKind::*;
        match self {
            MfemFull => VelocityFlavor::Fine,
            LMsFull | LMsHybrid | LMsAdaptive => VelocityFlavor::LocalMs,
            GMsFull | GMsHybrid | GMsAdaptive => VelocityFlavor::GlobalMs,
        }
    }

    pub fn reduction(self) -> Reduction {
        use MethodKind::*;
        match self {
            MfemFull | LMsFull | GMsFull => Reduction::Full,
            LMsHybrid | GMsHybrid => Reduction::Hybrid,
            LMsAdaptive | GMsAdaptive => Reduction::Adaptive,
        }
    }

    pub fn name(self) -> &'static str {
        use MethodKind::*;
        match self {
            MfemFull => "mfem-full",
            LMsFull => "l-ms-full",
            GMsFull => "g-ms-full",
            LMsHybrid => "l-ms-hybrid",
            GMsHybrid => "g-ms-hybrid",
            LMsAdaptive => "l-ms-adaptive",
            GMsAdaptive => "g-ms-adaptive",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .with_context(|| {
                let names: Vec<_> = MethodKind::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub method: MethodKind,
    pub output_dir: PathBuf,
    /// Worker threads for model solves; all cores when absent.
    pub workers: Option<usize>,
    /// Seed of sampled diagnostics.
    pub seed: u64,
    /// Cache directory; the environment variable takes precedence.
    pub cache_dir: Option<PathBuf>,
    /// Also write VTK files of the saturation statistics.
    pub vtk: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            fine: [60, 60],
            coarse: [6, 6],
            domain: [1.0, 1.0],
        }
    }
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        CovarianceConfig {
            sigma2: 1.0,
            corr_x: 0.1,
            corr_y: 0.1,
        }
    }
}

impl Default for KleConfig {
    fn default() -> Self {
        KleConfig {
            n_terms: 20,
            mean: MeanField::Zero,
            distribution: Distribution::Uniform,
        }
    }
}

impl Default for HdmrConfig {
    fn default() -> Self {
        HdmrConfig {
            zeta: 0.9,
            level: 2,
            level_inactive: 2,
            order: 2,
            anchor: None,
            active: None,
            sensitivity: SensitivityFunctional::FinalSaturation,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            model: FlowKind::Linear,
            viscosity_ratio: DEFAULT_VISCOSITY_RATIO,
            rate: 1.0,
            dt_pvi: 0.02,
            t_end_pvi: 1.0,
            snapshots: vec![0.4],
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: MethodKind::LMsHybrid,
            output_dir: PathBuf::from("out"),
            workers: None,
            seed: 1,
            cache_dir: None,
            vtk: false,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::linear_desk()
    }
}

impl ExperimentConfig {
    /// 60x60 / 6x6, `l = 0.1`, `N = 20`, linear flux.
    pub fn linear_desk() -> Self {
        ExperimentConfig {
            grid: GridConfig::default(),
            covariance: CovarianceConfig::default(),
            kle: KleConfig::default(),
            hdmr: HdmrConfig::default(),
            flow: FlowConfig::default(),
            run: RunConfig::default(),
        }
    }

    /// 60x60 / 6x6, `l = 0.2`, `N = 30`, channelized mean, quadratic flux.
    pub fn quadratic_desk() -> Self {
        let mut c = ExperimentConfig::linear_desk();
        c.covariance.corr_x = 0.2;
        c.covariance.corr_y = 0.2;
        c.kle.n_terms = 30;
        c.kle.mean = MeanField::Channelized { base: 0.0 };
        c.flow.model = FlowKind::Quadratic;
        c.flow.dt_pvi = 0.01;
        c.run.method = MethodKind::GMsHybrid;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn fine_grid(&self) -> Result<StructuredGrid> {
        let [nx, ny] = self.grid.fine;
        let [lx, ly] = self.grid.domain;
        Ok(StructuredGrid::new(nx, ny, lx, ly)?)
    }

    pub fn coarse_grid(&self) -> Result<StructuredGrid> {
        let [nx, ny] = self.grid.coarse;
        let [lx, ly] = self.grid.domain;
        Ok(StructuredGrid::new(nx, ny, lx, ly)?)
    }

    pub fn covariance_spec(&self) -> Result<CovarianceSpec> {
        let c = &self.covariance;
        Ok(CovarianceSpec::new(c.sigma2, c.corr_x, c.corr_y)?)
    }

    pub fn frac_flow(&self) -> FracFlowModel {
        match self.flow.model {
            FlowKind::Linear => FracFlowModel::Linear,
            FlowKind::Quadratic => FracFlowModel::Quadratic {
                viscosity_ratio: self.flow.viscosity_ratio,
            },
        }
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Ok(Schedule::new(
            self.flow.dt_pvi,
            self.flow.t_end_pvi,
            self.flow.snapshots.clone(),
        )?)
    }

    pub fn anchor(&self) -> Vec<f64> {
        self.hdmr.anchor.clone().unwrap_or_else(|| vec![0.0; self.kle.n_terms])
    }

    /// Cache directory: the environment variable, then the config.
    pub fn cache_dir(&self) -> Option<PathBuf> {
        std::env::var_os(CACHE_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| self.run.cache_dir.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let fine = self.fine_grid().context("grid.fine")?;
        let coarse = self.coarse_grid().context("grid.coarse")?;
        if !fine.is_partitioned_by(&coarse) {
            bail!(
                "grid.coarse: {:?} blocks do not divide the {:?} fine grid",
                self.grid.coarse,
                self.grid.fine
            );
        }
        self.covariance_spec().context("covariance")?;
        let n = self.kle.n_terms;
        if n == 0 || n > fine.num_cells() {
            bail!("kle.n_terms: need 1..={} terms, got {n}", fine.num_cells());
        }
        let h = &self.hdmr;
        if !(h.zeta > 0.0 && h.zeta < 1.0) {
            bail!("hdmr.zeta: must lie in (0, 1), got {}", h.zeta);
        }
        if h.order == 0 {
            bail!("hdmr.order: must be at least 1");
        }
        if let Some(a) = &h.anchor {
            if a.len() != n {
                bail!("hdmr.anchor: expected {n} coordinates, got {}", a.len());
            }
            if a.iter().any(|x| !(-1.0..=1.0).contains(x)) {
                bail!("hdmr.anchor: coordinates must lie in [-1, 1]");
            }
        }
        if let Some(act) = &h.active {
            if act.is_empty() || act.iter().any(|&d| d >= n) {
                bail!("hdmr.active: need a non-empty subset of 0..{n}");
            }
            if h.order > act.len() && self.run.method.reduction() == Reduction::Adaptive {
                bail!("hdmr.order: {} exceeds the {} active dimensions", h.order, act.len());
            }
        }
        let f = &self.flow;
        if !(f.rate > 0.0 && f.rate.is_finite()) {
            bail!("flow.rate: must be positive, got {}", f.rate);
        }
        self.frac_flow().validate().context("flow.viscosity_ratio")?;
        self.schedule().context("flow")?;
        if f.snapshots.is_empty() {
            bail!("flow.snapshots: at least one snapshot time is required");
        }
        if self.run.workers == Some(0) {
            bail!("run.workers: must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        ExperimentConfig::quadratic_desk().validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ExperimentConfig::from_toml("[grid]\nfine = [4, 4]\ncoarse = [2, 2]\nbogus = 1\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("[kle]\nn_terms = 4\n[run]\nmethod = \"g-ms-adaptive\"\n").unwrap();
        assert_eq!(c.kle.n_terms, 4);
        assert_eq!(c.run.method, MethodKind::GMsAdaptive);
        assert_eq!(c.grid.fine, [60, 60]);
    }

    #[test]
    fn inconsistent_configs() {
        let bad = [
            "[grid]\nfine = [10, 10]\ncoarse = [3, 3]\n",
            "[hdmr]\nzeta = 1.5\n",
            "[kle]\nn_terms = 0\n",
            "[hdmr]\nactive = [25]\n",
            "[flow]\nsnapshots = [0.41]\n",
            "[covariance]\nsigma2 = -1.0\n",
            "[kle.mean]\nkind = \"spe10\"\n",
        ];
        for text in bad {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn method_names() {
        for m in MethodKind::ALL {
            assert_eq!(m.name().parse::<MethodKind>().unwrap(), m);
        }
        assert!("fem".parse::<MethodKind>().is_err());
    }
}
