//! Run configuration: a TOML document whose every table rejects unknown keys.

use std::path::Path;

use hubbard_ts::filter::{make_filter, FilterSpec};
use hubbard_ts::interferometry::StepPolicy;
use hubbard_ts::mitigation::MitigationMethod;
use hubbard_ts::model::{build_snake_layout, neel_state, HubbardParams, LatticeSpec, ProductState, DEFAULT_QUBIT_CAP};
use hubbard_ts::noise::NoiseSpec;
use hubbard_ts::resources::Encoding;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub x: usize,
    pub y: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { x: 2, y: 2 }
    }
}

/// Initial product state. Positions are snake positions within each spin
/// register.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum StateConfig {
    #[default]
    Neel,
    Occupations { up: Vec<usize>, down: Vec<usize> },
}

/// Either an explicit list or `points` evenly spaced values on
/// `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig { values: Some(vec![1.0]), start: None, stop: None, points: None }
    }
}

impl EnergyConfig {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let grid = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) if n >= 1 => {
                if n == 1 {
                    vec![a]
                } else {
                    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
                }
            }
            _ => return Err(CliError::Config("[energies] needs either `values` or all of `start`, `stop`, `points`".into())),
        };
        if grid.is_empty() || grid.iter().any(|e| !e.is_finite()) {
            return Err(CliError::Config("energy grid must be non-empty and finite".into()));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub delta: f64,
    pub x: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { delta: 1.0, x: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationConfig {
    #[serde(default = "no_mitigation")]
    pub method: MitigationMethod,
}

fn no_mitigation() -> MitigationMethod {
    MitigationMethod::None
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig { method: MitigationMethod::None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeseriesConfig {
    /// Emit grid metadata and gate counts without simulating.
    #[serde(default)]
    pub dry_run: bool,
    /// Pauli trajectories per point; zero uses the analytic outcome channel.
    #[serde(default)]
    pub trajectories: usize,
}

impl Default for TimeseriesConfig {
    fn default() -> Self {
        TimeseriesConfig { dry_run: false, trajectories: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Exact,
    Trotter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdosConfig {
    #[serde(default = "exact_series")]
    pub series: SeriesKind,
}

fn exact_series() -> SeriesKind {
    SeriesKind::Exact
}

impl Default for FdosConfig {
    fn default() -> Self {
        FdosConfig { series: SeriesKind::Exact }
    }
}

/// One column of a sampling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainVariant {
    /// Spectral weights from the exact eigendecomposition.
    Exact,
    /// Noiseless cosine-filter series.
    Noiseless,
    /// Series with shot noise from `noise.shots`.
    Shots,
    /// Series with shot noise and Gaussian noise `noise.sigma_series`.
    ShotsGaussian,
}

impl ChainVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ChainVariant::Exact => "exact",
            ChainVariant::Noiseless => "noiseless",
            ChainVariant::Shots => "shots",
            ChainVariant::ShotsGaussian => "shots_gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default = "default_variants")]
    pub variants: Vec<ChainVariant>,
    /// Evaluate series amplitudes with Trotter circuits instead of the exact
    /// propagator.
    #[serde(default)]
    pub trotter: bool,
    /// Also enumerate the sector for the exact expectation when it is small.
    #[serde(default = "yes")]
    pub exhaustive: bool,
    /// Write every sample to a per-chain CSV.
    #[serde(default = "yes")]
    pub write_chains: bool,
}

fn default_samples() -> usize {
    5000
}

fn default_variants() -> Vec<ChainVariant> {
    vec![ChainVariant::Exact]
}

fn yes() -> bool {
    true
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            n_samples: default_samples(),
            burn_in: None,
            variants: default_variants(),
            trotter: false,
            exhaustive: true,
            write_chains: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcesConfig {
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_fidelities")]
    pub fidelities: Vec<f64>,
    #[serde(default = "default_encodings")]
    pub encodings: Vec<Encoding>,
    /// Overhead the 6x6 rows are compared against, order of magnitude only.
    #[serde(default = "default_reference")]
    pub reference_overhead: f64,
}

fn default_sizes() -> Vec<usize> {
    (4..=8).collect()
}

fn default_fidelities() -> Vec<f64> {
    vec![0.998, 0.999]
}

fn default_encodings() -> Vec<Encoding> {
    vec![Encoding::Jw, Encoding::Compact]
}

fn default_reference() -> f64 {
    100.0
}

impl Default for ResourcesConfig {
    fn default() -> Self {
        ResourcesConfig {
            sizes: default_sizes(),
            fidelities: default_fidelities(),
            encodings: default_encodings(),
            reference_overhead: default_reference(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub params: HubbardParams,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub energies: EnergyConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub trotter: StepPolicy,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub mitigation: MitigationConfig,
    #[serde(default)]
    pub timeseries: TimeseriesConfig,
    #[serde(default)]
    pub fdos: FdosConfig,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub resources: ResourcesConfig,
}

/// Everything derived from a validated config that the commands share.
pub struct Resolved {
    pub lattice: LatticeSpec,
    pub params: HubbardParams,
    pub psi0: ProductState,
    pub energies: Vec<f64>,
    pub filter: FilterSpec,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form, so formatting and key order in
    /// the source file do not matter.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every module precondition. `simulate` additionally bounds the
    /// register size for dense simulation.
    pub fn resolve(&self, simulate: bool) -> Result<Resolved, CliError> {
        let lattice = LatticeSpec::new(self.lattice.x, self.lattice.y).map_err(CliError::from)?;
        if simulate {
            lattice.check_dense(DEFAULT_QUBIT_CAP).map_err(CliError::from)?;
        }
        let params = HubbardParams::new(self.params.j, self.params.u).map_err(CliError::from)?;
        let psi0 = match &self.state {
            StateConfig::Neel => neel_state(&lattice, &build_snake_layout(&lattice)),
            StateConfig::Occupations { up, down } => {
                ProductState::from_occupations(lattice.n_sites(), up, down).map_err(CliError::from)?
            }
        };
        if psi0.occupied().is_empty() {
            return Err(CliError::Config("initial state must hold at least one fermion".into()));
        }
        self.noise.validate().map_err(CliError::from)?;
        let filter = make_filter(lattice.n_qubits(), self.filter.delta, self.filter.x)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.chain.n_samples == 0 || self.chain.variants.is_empty() {
            return Err(CliError::Config("[chain] needs n_samples >= 1 and at least one variant".into()));
        }
        let needs_shots = self.chain.variants.iter().any(|v| matches!(v, ChainVariant::Shots | ChainVariant::ShotsGaussian));
        if needs_shots && self.noise.shots.is_none() {
            return Err(CliError::Config("shot-noise chain variants need `noise.shots`".into()));
        }
        if self.mitigation.method == MitigationMethod::Symmetry && self.noise.shots.is_none() {
            return Err(CliError::Config("symmetry mitigation post-selects shots and needs `noise.shots`".into()));
        }
        if self.resources.fidelities.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(CliError::Config("resource fidelities must lie in (0, 1]".into()));
        }
        if self.resources.sizes.iter().any(|&l| l < 2) {
            return Err(CliError::Config("resource lattice sizes must be at least 2".into()));
        }
        Ok(Resolved { lattice, params, psi0, energies: self.energies.grid()?, filter })
    }
}
