//! TOML scenario configuration with full-resolution and small presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::colloc::PointSolverKind;
use crate::error::{Error, Result};
use crate::oneshot::{Channel, ControlSpec, Regularization};
use crate::randfield::CovarianceSpec;
use crate::solve::{KrylovConfig, KrylovMethod, MgConfig, PreconditionerKind};

/// Discretization defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `n = 128`, seven KL terms, order two, sparse-grid level two.
    #[default]
    Paper,
    /// `n = 32`, three KL terms, order two, sparse-grid level two.
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Galerkin,
    Collocation,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Galerkin => "galerkin",
            Method::Collocation => "collocation",
        }
    }
}

/// What the state should track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// Piecewise plateau target.
    #[default]
    Piecewise,
    /// Mean of the forward solution driven by the inverse source.
    InverseDeterministic,
    /// Full random forward solution driven by the inverse source.
    InverseStochastic,
}

impl TargetKind {
    pub fn is_inverse(&self) -> bool {
        !matches!(self, TargetKind::Piecewise)
    }
}

/// Source used to generate inverse-problem targets.
pub fn inverse_source(x1: f64, x2: f64) -> f64 {
    50.0 * (std::f64::consts::PI * x1).sin() * (2.0 * std::f64::consts::PI * x2).cos()
}

/// Explicit discretization parameters; unset entries come from the preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    pub n: Option<usize>,
    pub kl_terms: Option<usize>,
    pub order: Option<usize>,
    pub level: Option<usize>,
}

/// Fully resolved discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolved {
    pub n: usize,
    pub kl_terms: usize,
    pub order: usize,
    pub level: usize,
}

/// Random diffusion coefficient: mean plus a separable exponential KL
/// expansion with uniform variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub mean: f64,
    pub variance: f64,
    pub corr_length: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            mean: 1.0,
            variance: 0.25,
            corr_length: 1.0,
        }
    }
}

impl FieldConfig {
    pub fn covariance(&self) -> CovarianceSpec {
        CovarianceSpec {
            variance: self.variance,
            corr_length: self.corr_length,
            ..Default::default()
        }
    }
}

/// Known zero-mean Gaussian control perturbation `u'` (or `g'`) as a KL
/// expansion on extra Hermite dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    pub variance: f64,
    pub corr_length: f64,
    pub terms: usize,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            variance: 1.0,
            corr_length: 1.0,
            terms: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// `None` picks GMRES for the reduced system and MINRES for the saddle
    /// system.
    pub method: Option<KrylovMethod>,
    /// `None` picks multigrid for the reduced system and the block-diagonal
    /// preconditioner for the saddle system.
    pub preconditioner: Option<PreconditionerKind>,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub restart: Option<usize>,
    pub mg: MgConfig,
    pub point_solver: PointSolverKind,
    /// Worker threads for decoupled collocation points.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let k = KrylovConfig::default();
        Self {
            method: None,
            preconditioner: None,
            rel_tol: k.rel_tol,
            max_iter: k.max_iter,
            restart: Some(30),
            mg: MgConfig::default(),
            point_solver: PointSolverKind::Auto,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write mean/variance/control nodal CSV files.
    pub fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            fields: true,
        }
    }
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Grouping key for collated tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub target: TargetKind,
    /// Constant source in the state equation.
    #[serde(default)]
    pub source: f64,
    /// Penalty values for `sweep`; each run overrides `control.gamma`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_sweep: Vec<f64>,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub control: ControlSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    /// A scenario with default settings.
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            table: None,
            preset: Preset::Paper,
            method: Method::Galerkin,
            target: TargetKind::Piecewise,
            source: 0.0,
            gamma_sweep: Vec::new(),
            discretization: Discretization::default(),
            field: FieldConfig::default(),
            control: ControlSpec::default(),
            perturbation: None,
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Parse and validate.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolved(&self) -> Resolved {
        let (n, l, p, lev) = match self.preset {
            Preset::Paper => (128, 7, 2, 2),
            Preset::Small => (32, 3, 2, 2),
        };
        let d = &self.discretization;
        Resolved {
            n: d.n.unwrap_or(n),
            kl_terms: d.kl_terms.unwrap_or(l),
            order: d.order.unwrap_or(p),
            level: d.level.unwrap_or(lev),
        }
    }

    /// Krylov method and preconditioner actually used.
    pub fn solver_choice(&self) -> (KrylovMethod, PreconditionerKind) {
        let h1 = self.control.regularization == Regularization::H1;
        let method = self.solver.method.unwrap_or(if h1 { KrylovMethod::Minres } else { KrylovMethod::Gmres });
        let pre = self.solver.preconditioner.unwrap_or(if h1 {
            PreconditionerKind::BlockDiagonal
        } else {
            PreconditionerKind::Multigrid
        });
        (method, pre)
    }

    pub fn krylov(&self) -> KrylovConfig {
        KrylovConfig {
            method: self.solver_choice().0,
            rel_tol: self.solver.rel_tol,
            max_iter: self.solver.max_iter,
            restart: self.solver.restart,
        }
    }

    /// Check everything that can be checked before assembly.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.trim().is_empty() {
            return bad("scenario name must not be empty".into());
        }
        self.control.validate().map_err(|e| Error::Config(e.to_string()))?;
        let r = self.resolved();
        if r.n < 2 {
            return bad(format!("mesh resolution must be at least 2, got {}", r.n));
        }
        if r.kl_terms == 0 {
            return bad("at least one KL term is required".into());
        }
        self.field
            .covariance()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.field.mean > 0.0) {
            return bad("the coefficient mean must be positive".into());
        }
        if !self.source.is_finite() {
            return bad("source must be finite".into());
        }
        let h1 = self.control.regularization == Regularization::H1;
        if h1 && self.control.channel == Channel::Boundary {
            return bad("H1 regularization is only available for distributive controls".into());
        }
        if let Some(p) = &self.perturbation {
            if self.control.epsilon != 1 {
                return bad("a control perturbation requires epsilon = 1".into());
            }
            if p.terms == 0 || !(p.variance > 0.0) || !(p.corr_length > 0.0) {
                return bad("perturbation needs positive terms, variance and correlation length".into());
            }
            if self.method == Method::Collocation {
                return bad("control perturbations are only supported by the Galerkin method".into());
            }
        }
        if self.method == Method::Collocation && h1 {
            return bad("collocation does not support H1 regularization".into());
        }
        if self.gamma_sweep.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return bad("gamma_sweep values must be positive".into());
        }
        if !self.gamma_sweep.is_empty() && self.control.channel == Channel::Boundary {
            return bad("gamma sweeps apply to distributive controls".into());
        }
        if !(self.solver.rel_tol > 0.0 && self.solver.rel_tol < 1.0) || self.solver.max_iter == 0 {
            return bad("solver needs rel_tol in (0, 1) and max_iter >= 1".into());
        }
        if self.solver.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if self.solver.restart == Some(0) {
            return bad("restart must be at least 1".into());
        }
        self.solver.mg.level_count(r.n).map_err(|e| Error::Config(e.to_string()))?;
        if self.method == Method::Galerkin {
            let (m, p) = self.solver_choice();
            match (h1, m, p) {
                (false, KrylovMethod::Minres | KrylovMethod::Cg, _) => {
                    return bad("the reduced system is nonsymmetric; use gmres".into())
                }
                (false, _, PreconditionerKind::BlockDiagonal) => {
                    return bad("the block-diagonal preconditioner is for H1 problems".into())
                }
                (true, KrylovMethod::Cg, _) => return bad("the saddle system is indefinite".into()),
                (true, _, PreconditionerKind::MeanBased) => {
                    return bad("the mean-based preconditioner is for L2 problems".into())
                }
                (true, KrylovMethod::Minres, PreconditionerKind::Multigrid) => {
                    return bad("MINRES needs a symmetric positive definite preconditioner".into())
                }
                _ => {}
            }
        }
        Ok(())
    }
}
