use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use gpargmax::estimators::{CoverageSpec, DgpSpec, GridPolicy};
use gpargmax::rkhs::{ModelSpace, QuadratureSpec};
use gpargmax::simulate::SamplerKind;
use gpargmax::{CovSpec, Matrix, MeanSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Acceptance criterion this config exercises.
    #[serde(default)]
    pub criterion: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub seed: u64,
    #[serde(default)]
    pub sampler: SamplerKind,
    /// Multiplies every absolute tolerance in the experiment block.
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    /// Default output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    CheckKernel(CheckKernel),
    Simulate(Simulate),
    Continuity(Continuity),
    DiscontinuityExample(Discontinuity),
    RkhsVerify(RkhsVerify),
    EstimatorMc(EstimatorMc),
    CiExperiment(CiExperiment),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::CheckKernel(_) => "check-kernel",
            Experiment::Simulate(_) => "simulate",
            Experiment::Continuity(_) => "continuity",
            Experiment::DiscontinuityExample(_) => "discontinuity-example",
            Experiment::RkhsVerify(_) => "rkhs-verify",
            Experiment::EstimatorMc(_) => "estimator-mc",
            Experiment::CiExperiment(_) => "ci-experiment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckKernel {
    #[serde(default)]
    pub kernels: Vec<CovSpec>,
    #[serde(default = "default_triples")]
    pub triples: usize,
    /// Random points are drawn from `[-half_width, half_width]^d`.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_identity_tol")]
    pub tol: f64,
    #[serde(default)]
    pub mean_tails: Vec<MeanTailCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanTailCase {
    pub mean: MeanSpec,
    pub hurst: f64,
    pub eps: f64,
    /// Whether the mean is expected to pass.
    pub expect_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub extent: f64,
    pub ppu: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulate {
    pub cov: CovSpec,
    pub mean: MeanSpec,
    pub lattice: LatticeConfig,
    pub reps: u64,
    /// Compare with the closed-form law `Γ⁻¹Ġ` (bilinear kernels).
    #[serde(default)]
    pub closed_form: Option<ClosedForm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedForm {
    pub gamma: Matrix,
    pub sigma: Matrix,
    pub ks_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Continuity {
    pub cov: CovSpec,
    pub mean: MeanSpec,
    pub extent: f64,
    pub reps: u64,
    pub checks: Vec<ContinuityCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ContinuityCheck {
    /// `|F̂(point) − target| ≤ tol`.
    Ecdf { ppu: u32, point: Vec<f64>, target: f64, tol: f64 },
    /// Lattice-point mass at `location` across levels; successive ratios in range.
    Profile { coordinate: usize, location: f64, ppu_levels: Vec<u32>, ratio_min: f64, ratio_max: f64 },
    /// KS between two independently seeded laws.
    SeedKs { ppu: u32, tol: f64 },
    /// Largest single-point marginal mass, every coordinate.
    MarginalJump { ppu: u32, tol: f64 },
    /// Mass at each coordinate's modal point, `ppu_to` over `ppu_from`.
    Refinement { ppu_from: u32, ppu_to: u32, max_ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discontinuity {
    pub gamma: f64,
    #[serde(default = "one")]
    pub sigma2: f64,
    pub extent: f64,
    pub ppu: u32,
    pub reps: u64,
    /// Fixed `c`; calibrated when absent.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub calibration: Option<CalibrationConfig>,
    /// Second lattice for the stability check.
    #[serde(default)]
    pub stability_ppu: Option<u32>,
    #[serde(default = "five")]
    pub z_zero: f64,
    #[serde(default = "three")]
    pub z_half: f64,
    #[serde(default = "three")]
    pub z_calibration: f64,
    #[serde(default = "three")]
    pub z_stability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(default = "default_q")]
    pub q: f64,
    pub ppu: u32,
    pub reps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    MaxScore,
    Erm,
    ThreshReg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RkhsVerify {
    /// Explicit model spaces.
    #[serde(default)]
    pub models: Vec<ModelSpace>,
    /// Randomized model spaces on top of the explicit ones.
    #[serde(default)]
    pub random: Option<RandomModels>,
    pub pairs: usize,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_rkhs_tol")]
    pub tol: f64,
    #[serde(default = "default_cross_tol")]
    pub cross_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomModels {
    pub family: FamilyKind,
    pub count: usize,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_extents")]
    pub extents: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorMc {
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub convergence: Option<ConvergenceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub dgps: Vec<DgpSpec>,
    pub instances: usize,
    pub n_min: usize,
    pub n_max: usize,
    /// Grid around θ₀ for the grid-search fitters.
    pub grid_half_width: f64,
    pub grid_spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub dgp: DgpSpec,
    pub ns: Vec<usize>,
    pub reps: u64,
    pub limit: LimitLaw,
    pub final_tol: f64,
    #[serde(default)]
    pub grid: GridPolicy,
    /// Monotone within `z·√2·0.26·√(1/reps + 1/limit.reps)`.
    #[serde(default = "three")]
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitLaw {
    pub extent: f64,
    pub ppu: u32,
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiExperiment {
    /// Synthetic draw sets checked against hand-computed order statistics.
    #[serde(default)]
    pub percentile_sets: usize,
    #[serde(default)]
    pub coverage: Option<CoverageSpec>,
}

fn default_triples() -> usize {
    1000
}
fn default_half_width() -> f64 {
    5.0
}
fn default_identity_tol() -> f64 {
    1e-10
}
fn default_rkhs_tol() -> f64 {
    1e-8
}
fn default_cross_tol() -> f64 {
    1e-10
}
fn default_q() -> f64 {
    0.8
}
fn default_dims() -> Vec<usize> {
    vec![1, 2]
}
fn default_extents() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}
fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn five() -> f64 {
    5.0
}

/// Parses TOML, reporting the field path of any schema violation.
pub fn parse(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| anyhow!("config is not valid TOML: {e}"))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path.starts_with("experiment") {
            if let Some(inner) = diagnose_experiment(text) {
                return inner;
            }
        }
        anyhow!("schema violation at `{path}`: {}", e.into_inner())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

/// Tagged enums buffer their content, which loses the field path of an
/// error inside them. Re-parses the experiment block with its concrete type.
fn diagnose_experiment(text: &str) -> Option<anyhow::Error> {
    let mut table: toml::Table = toml::from_str(text).ok()?;
    let mut exp = match table.remove("experiment")? {
        toml::Value::Table(t) => t,
        _ => return None,
    };
    let kind = match exp.remove("kind") {
        Some(toml::Value::String(k)) => k,
        Some(_) => return Some(anyhow!("schema violation at `experiment.kind`: expected a string")),
        None => return Some(anyhow!("schema violation at `experiment.kind`: missing field")),
    };
    fn inner<T: serde::de::DeserializeOwned>(exp: toml::Table) -> Option<anyhow::Error> {
        serde_path_to_error::deserialize::<_, T>(toml::Value::Table(exp)).err().map(|e| {
            let path = e.path().to_string();
            anyhow!("schema violation at `experiment.{path}`: {}", e.into_inner())
        })
    }
    match kind.as_str() {
        "check-kernel" => inner::<CheckKernel>(exp),
        "simulate" => inner::<Simulate>(exp),
        "continuity" => inner::<Continuity>(exp),
        "discontinuity-example" => inner::<Discontinuity>(exp),
        "rkhs-verify" => inner::<RkhsVerify>(exp),
        "estimator-mc" => inner::<EstimatorMc>(exp),
        "ci-experiment" => inner::<CiExperiment>(exp),
        other => Some(anyhow!(
            "schema violation at `experiment.kind`: unknown experiment kind `{other}`, expected one of check-kernel, simulate, continuity, discontinuity-example, rkhs-verify, estimator-mc, ci-experiment"
        )),
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text)
}

fn field<T>(path: &str, r: gpargmax::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!("schema violation at `{path}`: {e}"))
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(anyhow!("schema violation at `{path}`: must be positive, got {v}"))
    }
}

fn nonzero(path: &str, v: u64) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(anyhow!("schema violation at `{path}`: must be at least 1"))
    }
}

/// Semantic checks the type system cannot express.
pub fn validate(cfg: &RunConfig) -> Result<()> {
    positive("tolerance_scale", cfg.tolerance_scale)?;
    match &cfg.experiment {
        Experiment::CheckKernel(c) => {
            for (i, k) in c.kernels.iter().enumerate() {
                field(&format!("experiment.kernels[{i}]"), k.validate())?;
            }
            for (i, m) in c.mean_tails.iter().enumerate() {
                field(&format!("experiment.mean_tails[{i}].mean"), m.mean.validate())?;
            }
            positive("experiment.tol", c.tol)?;
            positive("experiment.half_width", c.half_width)?;
        }
        Experiment::Simulate(s) => {
            field("experiment.cov", s.cov.validate())?;
            field("experiment.mean", s.mean.validate())?;
            if s.cov.dim() != s.mean.dim() {
                return Err(anyhow!(
                    "schema violation at `experiment.mean`: dimension {} differs from the kernel's {}",
                    s.mean.dim(),
                    s.cov.dim()
                ));
            }
            nonzero("experiment.reps", s.reps)?;
            if let Some(cf) = &s.closed_form {
                positive("experiment.closed_form.ks_tol", cf.ks_tol)?;
            }
        }
        Experiment::Continuity(c) => {
            field("experiment.cov", c.cov.validate())?;
            field("experiment.mean", c.mean.validate())?;
            if c.cov.dim() != c.mean.dim() {
                return Err(anyhow!(
                    "schema violation at `experiment.mean`: dimension {} differs from the kernel's {}",
                    c.mean.dim(),
                    c.cov.dim()
                ));
            }
            nonzero("experiment.reps", c.reps)?;
            if c.checks.is_empty() {
                return Err(anyhow!("schema violation at `experiment.checks`: no checks listed"));
            }
            for (i, ch) in c.checks.iter().enumerate() {
                if let ContinuityCheck::Profile { ppu_levels, .. } = ch {
                    if ppu_levels.len() < 3 {
                        return Err(anyhow!(
                            "schema violation at `experiment.checks[{i}].ppu_levels`: need at least 3 levels"
                        ));
                    }
                }
            }
        }
        Experiment::DiscontinuityExample(d) => {
            if d.c.is_none() && d.calibration.is_none() {
                return Err(anyhow!("schema violation at `experiment.c`: give c or a calibration block"));
            }
            nonzero("experiment.reps", d.reps)?;
        }
        Experiment::RkhsVerify(r) => {
            for (i, m) in r.models.iter().enumerate() {
                field(&format!("experiment.models[{i}]"), m.validate())?;
            }
            if r.models.is_empty() && r.random.is_none() {
                return Err(anyhow!("schema violation at `experiment.models`: no model spaces given"));
            }
            field("experiment.quadrature", r.quadrature.validate())?;
        }
        Experiment::EstimatorMc(e) => {
            if e.oracle.is_none() && e.convergence.is_none() {
                return Err(anyhow!("schema violation at `experiment`: give an oracle or convergence block"));
            }
            if let Some(o) = &e.oracle {
                for (i, g) in o.dgps.iter().enumerate() {
                    field(&format!("experiment.oracle.dgps[{i}]"), g.validate())?;
                }
                if o.n_min == 0 || o.n_min > o.n_max {
                    return Err(anyhow!("schema violation at `experiment.oracle.n_min`: need 1 ≤ n_min ≤ n_max"));
                }
            }
            if let Some(c) = &e.convergence {
                field("experiment.convergence.dgp", c.dgp.validate())?;
                if c.ns.is_empty() {
                    return Err(anyhow!("schema violation at `experiment.convergence.ns`: empty"));
                }
            }
        }
        Experiment::CiExperiment(c) => {
            if let Some(cov) = &c.coverage {
                field("experiment.coverage.dgp", cov.dgp.validate())?;
            }
        }
    }
    Ok(())
}

/// SHA-256 of the canonical JSON form of the effective config. The output
/// directory is not part of it.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut cfg = cfg.clone();
    cfg.out = None;
    let canonical = serde_json::to_vec(&cfg).expect("configs serialize");
    hex::encode(Sha256::digest(&canonical))
}
