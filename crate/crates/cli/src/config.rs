//! Experiment configuration: one JSON document, every field optional, with
//! command-line overrides applied on top.

use std::path::{Path, PathBuf};

use heisenberg_tm::functional::TMParams;
use heisenberg_tm::gluing::Preset;
use heisenberg_tm::quadrature::RuleOptions;
use heisenberg_tm::GroupDim;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
    pub params: ParamsConfig,
    pub output_dir: PathBuf,
    pub geometry: GeometryConfig,
    pub covering: CoveringConfig,
    pub cutoff: CutoffConfig,
    pub functional: FunctionalConfig,
    pub moser_scan: MoserScanConfig,
    pub glue: GlueConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 1,
            seed: 0,
            quadrature: QuadratureConfig::default(),
            params: ParamsConfig::default(),
            output_dir: PathBuf::from("htm-out"),
            geometry: GeometryConfig::default(),
            covering: CoveringConfig::default(),
            cutoff: CutoffConfig::default(),
            functional: FunctionalConfig::default(),
            moser_scan: MoserScanConfig::default(),
            glue: GlueConfig::default(),
        }
    }
}

/// Unset fields fall back to the defaults of the pipeline being run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub base_order: Option<usize>,
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    /// Defaults to half the sharp threshold for the chosen `beta`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub tau: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.0,
            tau: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub samples: usize,
    pub commutator_points: usize,
    /// Half-width of the sampling cube.
    pub half_width: f64,
    /// Append coincident triples to the quasi-triangle sweep.
    pub inject_duplicates: bool,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            commutator_points: 10_000,
            half_width: 3.0,
            inject_duplicates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoveringConfig {
    pub half_width: f64,
    pub rho: Vec<f64>,
    /// Verification lattice refinement relative to the construction lattice.
    pub refine: usize,
    /// Random samples for the multiplicity counts.
    pub multiplicity_samples: usize,
}

impl Default for CoveringConfig {
    fn default() -> Self {
        Self {
            half_width: 5.0,
            rho: vec![0.5, 1.0, 2.0],
            refine: 4,
            multiplicity_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffConfig {
    pub radii: Vec<f64>,
    pub samples: usize,
    /// Center of the tested cutoffs, as flat `(x, y, t)` coordinates.
    pub center: Option<Vec<f64>>,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            radii: vec![1.0, 5.0, 10.0],
            samples: 100_000,
            center: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    Gradient,
    Tau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalConfig {
    pub field: Preset,
    pub normalize: Normalization,
    /// Largest accepted `quadrature_error / tm_value`.
    pub rel_tol: f64,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self {
            field: Preset::SingleBump,
            normalize: Normalization::Tau,
            rel_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoserScanConfig {
    /// Defaults to `{6, 7.5, 8, 8.58, 9, 10.7}` at `beta = 0`, and to
    /// `{6, 7.5, 8, 9, 10.7}` scaled by `1 - beta/Q` otherwise.
    pub alpha_grid: Option<Vec<f64>>,
    /// Explicit family indices; otherwise powers of four up to `k_max`.
    pub k_list: Option<Vec<u64>>,
    pub k_max: u64,
}

impl Default for MoserScanConfig {
    fn default() -> Self {
        Self {
            alpha_grid: None,
            k_list: None,
            k_max: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlueConfig {
    pub preset: Preset,
    /// Covering radius; defaults to the selector's choice.
    pub r: Option<f64>,
}

impl Default for GlueConfig {
    fn default() -> Self {
        Self {
            preset: Preset::TwoBump,
            r: None,
        }
    }
}

/// Values given on the command line; each replaces the config field.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub tau: Option<f64>,
    pub r: Option<f64>,
    pub kmax: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.output_dir = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.alpha {
            self.params.alpha = Some(v);
        }
        if let Some(v) = o.beta {
            self.params.beta = v;
        }
        if let Some(v) = o.tau {
            self.params.tau = v;
        }
        if let Some(v) = o.r {
            self.glue.r = Some(v);
        }
        if let Some(v) = o.kmax {
            self.moser_scan.k_max = v;
            self.moser_scan.k_list = None;
        }
    }

    pub fn dim(&self) -> CliResult<GroupDim> {
        GroupDim::new(self.n).map_err(|e| CliError::Config(format!("at `n`: {e}")))
    }

    /// Parameters with `alpha` resolved and validated against `dim`.
    pub fn tm_params(&self, dim: &GroupDim) -> CliResult<TMParams> {
        let p = &self.params;
        // beta first, so a default alpha is never derived from a bad beta
        TMParams::new(1.0, p.beta, p.tau)
            .validate(dim)
            .map_err(|e| CliError::Config(format!("at `params`: {e}")))?;
        let alpha = p.alpha.unwrap_or_else(|| 0.5 * dim.threshold(p.beta));
        let params = TMParams::new(alpha, p.beta, p.tau);
        params
            .validate(dim)
            .map_err(|e| CliError::Config(format!("at `params`: {e}")))?;
        Ok(params)
    }

    /// Rule options with configured overrides on top of `base`.
    pub fn rule_options(&self, base: RuleOptions) -> RuleOptions {
        RuleOptions {
            base_order: self.quadrature.base_order.unwrap_or(base.base_order),
            levels: self.quadrature.levels.unwrap_or(base.levels),
            seed: self.seed,
            ..base
        }
    }
}
