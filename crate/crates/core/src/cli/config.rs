//! Experiment configuration: a single TOML file with a mandatory seed,
//! resolved into defaults and embedded verbatim in every report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Mandatory seed for every randomized choice.
    pub seed: u64,
    #[serde(default)]
    pub fixture: FixtureConfig,
    #[serde(default)]
    pub natural_map: NaturalMapConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub samples: SampleConfig,
    #[serde(default)]
    pub volume: VolumeConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    /// Group fixture id (genus2-octagon, genus3, f2-schottky-h2,
    /// f2-schottky-h3) or a path to a natmap-cocycle/1 file.
    pub group: String,
    /// Size of the finite omega space.
    pub omega_size: usize,
    /// "representation", "twisted", or "pullback" (the genus-3 pullback of
    /// the genus-2 representation cocycle).
    pub cocycle: String,
    /// Seed of the twisting omega map when cocycle = "twisted".
    pub twist_seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            group: "genus2-octagon".into(),
            omega_size: 2,
            cocycle: "representation".into(),
            twist_seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaturalMapConfig {
    /// Decay parameter as a multiple of the source volume entropy.
    pub s_factor: f64,
    /// Sweep of s factors for jacobian-sweep; defaults to the single factor.
    pub s_sweep: Vec<f64>,
    pub interior_budget: usize,
    pub boundary_budget: usize,
    /// Word-ball radius of the orbit enumeration.
    pub domain_radius: usize,
    pub exclusion_radius: f64,
    pub fd_step: f64,
}

impl Default for NaturalMapConfig {
    fn default() -> Self {
        Self {
            s_factor: 1.2,
            s_sweep: vec![],
            interior_budget: 48,
            boundary_budget: 4096,
            domain_radius: 4,
            exclusion_radius: 1e-6,
            fd_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    /// Number of sampled evaluation points / moves.
    pub count: usize,
    /// Word length of sampled group moves.
    pub word_length: usize,
    /// Euclidean radius of sampled base points in the Dirichlet domain.
    pub point_radius: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            count: 8,
            word_length: 2,
            point_radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    /// Node budget of the fundamental-domain quadrature.
    pub domain_budget: usize,
    /// Family to integrate: "inclusion" or "natural".
    pub family: String,
    /// Essential-bound cap; volume errors out beyond it.
    pub essential_bound: f64,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        Self {
            domain_budget: 10_000,
            family: "inclusion".into(),
            essential_bound: 1e6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub relator_descent: f64,
    pub cocycle_identity: f64,
    pub equivariance: f64,
    pub slice_spread: f64,
    pub twisting: f64,
    pub degree_ratio: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            relator_descent: 1e-8,
            cocycle_identity: 1e-10,
            equivariance: 1e-5,
            slice_spread: 1e-6,
            twisting: 1e-6,
            degree_ratio: 0.02,
        }
    }
}

impl ExperimentConfig {
    /// Parse from TOML with line-anchored diagnostics on failure.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn default_with_seed(seed: u64) -> Self {
        Self {
            seed,
            fixture: FixtureConfig::default(),
            natural_map: NaturalMapConfig::default(),
            solver: SolverConfig::default(),
            samples: SampleConfig::default(),
            volume: VolumeConfig::default(),
            tolerances: ToleranceConfig::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.natural_map.s_factor <= 1.0 {
            return Err(Error::Config(format!(
                "natural_map.s_factor = {} must exceed 1 (s must exceed the volume entropy)",
                self.natural_map.s_factor
            )));
        }
        if self.fixture.omega_size == 0 {
            return Err(Error::Config("fixture.omega_size must be positive".into()));
        }
        if self.natural_map.interior_budget == 0 {
            return Err(Error::Config("interior budget must be positive".into()));
        }
        Ok(())
    }

    /// Scale every quadrature budget by `k` (the --budget-scale flag).
    pub fn scale_budgets(&mut self, k: f64) {
        let scale = |v: usize| ((v as f64) * k).round().max(1.0) as usize;
        self.natural_map.interior_budget = scale(self.natural_map.interior_budget);
        self.natural_map.boundary_budget = scale(self.natural_map.boundary_budget);
        self.volume.domain_budget = scale(self.volume.domain_budget);
    }
}
