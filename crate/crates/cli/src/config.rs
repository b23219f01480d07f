//! The structured configuration file and the flag overrides applied on top of it.

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rbo::landscape::LandscapeSpec;
use rbo::neural::{MlpSpec, TrainOptimizer};
use rbo::optimizer::ProjectionConfig;
use rbo::verify::{
    GdLimitConfig, LinearIroningConfig, OpenUnreachablesConfig, ProbeConfig, SharpMinimaConfig,
    SmoothingConfig, WeakIroningConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything a command can read; each subcommand uses its own section plus
/// the shared `seed` and `output`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Global seed. SGD minibatches use it directly; MLP training initializes
    /// with `seed` and shuffles with `seed + 1`.
    pub seed: u64,
    pub output: OutputConfig,
    pub trajectory: RunConfig,
    pub sweep: SweepConfig,
    pub verify: VerifyConfig,
    pub train: TrainSection,
    pub offset: OffsetConfig,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerId {
    #[default]
    Rbo,
    Gd,
    Sgd,
    Sam,
}

impl fmt::Display for OptimizerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rbo => "rbo",
            Self::Gd => "gd",
            Self::Sgd => "sgd",
            Self::Sam => "sam",
        })
    }
}

/// Fully resolved update rule with every hyperparameter present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerChoice {
    Rbo { rho: f64, eta: f64 },
    Gd { eta: f64 },
    Sgd { eta: f64 },
    Sam { eta: f64, sam_rho: f64 },
}

/// Applies the per-optimizer defaults (rbo: ρ = 1, η = 6; gd/sgd: η = 0.01;
/// sam: η = 0.01, sam_rho = 0.05) and rejects hyperparameters that do not
/// belong to the chosen optimizer.
pub fn resolve_optimizer(
    id: OptimizerId,
    rho: Option<f64>,
    eta: Option<f64>,
    sam_rho: Option<f64>,
) -> CliResult<OptimizerChoice> {
    if rho.is_some() && id != OptimizerId::Rbo {
        return Err(CliError::Config(format!(
            "rho is only valid for rbo, not {id}"
        )));
    }
    if sam_rho.is_some() && id != OptimizerId::Sam {
        return Err(CliError::Config(format!(
            "sam_rho is only valid for sam, not {id}"
        )));
    }
    let eta = eta.unwrap_or(if id == OptimizerId::Rbo { 6.0 } else { 0.01 });
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(CliError::Config(format!(
            "eta must be finite and >= 0, got {eta}"
        )));
    }
    Ok(match id {
        OptimizerId::Rbo => {
            let rho = rho.unwrap_or(1.0);
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(CliError::Config(format!(
                    "rho must be finite and > 0, got {rho}"
                )));
            }
            OptimizerChoice::Rbo { rho, eta }
        }
        OptimizerId::Gd => OptimizerChoice::Gd { eta },
        OptimizerId::Sgd => OptimizerChoice::Sgd { eta },
        OptimizerId::Sam => {
            let sam_rho = sam_rho.unwrap_or(0.05);
            if !(sam_rho >= 0.0) || !sam_rho.is_finite() {
                return Err(CliError::Config(format!(
                    "sam_rho must be finite and >= 0, got {sam_rho}"
                )));
            }
            OptimizerChoice::Sam { eta, sam_rho }
        }
    })
}

fn default_landscape() -> LandscapeSpec {
    LandscapeSpec::Riemann { n: 100 }
}

fn unit_quadratic() -> LandscapeSpec {
    LandscapeSpec::Quadratic {
        matrix: vec![vec![1.0]],
        center: None,
    }
}

/// Parses a landscape given on the command line, either as a bare id
/// (`riemann`) or as an inline table (`{ id = "riemann", n = 5 }`).
pub fn parse_landscape(text: &str) -> CliResult<LandscapeSpec> {
    let text = text.trim();
    let table = if text.starts_with('{') {
        format!("v = {text}")
    } else {
        format!("v = {{ id = {} }}", toml::Value::String(text.to_string()))
    };
    #[derive(Deserialize)]
    struct Wrapper {
        v: LandscapeSpec,
    }
    toml::from_str::<Wrapper>(&table)
        .map(|w| w.v)
        .map_err(|e| CliError::Config(format!("landscape `{text}`: {}", e.message())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub landscape: LandscapeSpec,
    pub optimizer: OptimizerId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sam_rho: Option<f64>,
    pub steps: usize,
    /// One per landscape dimension; defaults to all ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    pub projection: ProjectionConfig<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            landscape: default_landscape(),
            optimizer: OptimizerId::Rbo,
            rho: None,
            eta: None,
            sam_rho: None,
            steps: 100,
            theta0: None,
            projection: ProjectionConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn choice(&self) -> CliResult<OptimizerChoice> {
        resolve_optimizer(self.optimizer, self.rho, self.eta, self.sam_rho)
    }

    pub fn start(&self) -> CliResult<Vec<f64>> {
        start_point(&self.landscape, self.theta0.as_deref())
    }
}

pub fn start_point(landscape: &LandscapeSpec, theta0: Option<&[f64]>) -> CliResult<Vec<f64>> {
    let d = landscape.dim();
    match theta0 {
        None => Ok(vec![1.0; d]),
        Some(t) if t.len() == d => Ok(t.to_vec()),
        Some(t) => Err(CliError::Config(format!(
            "theta0 has {} entries but the landscape has dimension {d}",
            t.len()
        ))),
    }
}

/// `count` values log-spaced from `min` to `max`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LogGrid {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        let Self { min, max, count } = *self;
        if count == 0 {
            return Err(CliError::config("grid count must be >= 1"));
        }
        if !(min > 0.0) || !max.is_finite() {
            return Err(CliError::Config(format!(
                "grid bounds must be finite and > 0, got {min}..{max}"
            )));
        }
        if count == 1 {
            return if min <= max {
                Ok(vec![min])
            } else {
                Err(CliError::Config(format!(
                    "grid min {min} exceeds max {max}"
                )))
            };
        }
        if !(min < max) {
            return Err(CliError::Config(format!(
                "grid min {min} must be below max {max}"
            )));
        }
        let (ratio, last) = (max / min, count - 1);
        Ok((0..count)
            .map(|i| match i {
                0 => min,
                i if i == last => max,
                i => min * ratio.powf(i as f64 / last as f64),
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepTask {
    /// Final loss of an RBO trajectory on `sweep.landscape`.
    #[default]
    Landscape,
    /// Final validation accuracy of an MLP trained with the `train` data settings.
    Mlp,
}

/// A ρ–η grid for RBO. For every radius the learning rates are log-spaced
/// between `eta.min · ρ` and `eta.max · ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub rho: LogGrid,
    pub eta: LogGrid,
    pub task: SweepTask,
    pub epochs: usize,
    /// Worker threads; 0 uses every available core.
    pub parallelism: usize,
    pub landscape: LandscapeSpec,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    pub projection: ProjectionConfig<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rho: LogGrid {
                min: 0.1,
                max: 10.0,
                count: 5,
            },
            eta: LogGrid {
                min: 0.01,
                max: 10.0,
                count: 5,
            },
            task: SweepTask::Landscape,
            epochs: 3,
            parallelism: 0,
            landscape: unit_quadratic(),
            steps: 100,
            theta0: None,
            projection: ProjectionConfig::default(),
        }
    }
}

impl SweepConfig {
    /// Grid cells in row order, sorted by ρ and then η.
    pub fn cells(&self) -> CliResult<Vec<(f64, f64)>> {
        let ratios = self.eta.values()?;
        Ok(self
            .rho
            .values()?
            .into_iter()
            .flat_map(|rho| ratios.iter().map(move |r| (rho, r * rho)))
            .collect())
    }
}

/// A check configuration plus an optional replacement for its default landscape.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OnLandscape<C> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeSpec>,
    #[serde(flatten)]
    pub check: C,
}

// Hand-written so the check's own `deny_unknown_fields` still sees every other key.
impl<'de, C: Deserialize<'de>> Deserialize<'de> for OnLandscape<C> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut table = toml::Table::deserialize(de)?;
        let landscape = table
            .remove("landscape")
            .map(LandscapeSpec::deserialize)
            .transpose()
            .map_err(D::Error::custom)?;
        let check = C::deserialize(toml::Value::Table(table)).map_err(D::Error::custom)?;
        Ok(Self { landscape, check })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifyConfig {
    /// Checks to run when none are named on the command line; empty means all.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<String>,
    /// Sinusoid by default.
    pub weak_ironing: OnLandscape<WeakIroningConfig>,
    pub linear_ironing: LinearIroningConfig,
    pub sharp_minima: SharpMinimaConfig,
    /// `2θ²` by default.
    pub open_unreachables: OnLandscape<OpenUnreachablesConfig>,
    /// `θ²/2` by default.
    pub gd_limit: OnLandscape<GdLimitConfig>,
    pub smoothing: SmoothingConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Half-open row range written `A:B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rows(pub Range<usize>);

impl FromStr for Rows {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("row range `{s}` is not of the form A:B"))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|e| format!("row range `{s}`: {e}"))
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a >= b {
            return Err(format!("row range `{s}` is empty"));
        }
        Ok(Self(a..b))
    }
}

impl TryFrom<String> for Rows {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Rows> for String {
    fn from(r: Rows) -> Self {
        r.to_string()
    }
}

impl fmt::Display for Rows {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.0.start, self.0.end)
    }
}

/// Environment variable naming the directory that holds the MNIST IDX files.
pub const DATA_DIR_ENV: &str = "RBO_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub optimizer: OptimizerId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sam_rho: Option<f64>,
    pub projection: ProjectionConfig<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub precision: Precision,
    /// Falls back to `$RBO_DATA_DIR`, then `data/mnist`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    pub train_rows: Rows,
    pub val_rows: Rows,
    pub mlp: MlpSpec,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            optimizer: OptimizerId::Rbo,
            rho: None,
            eta: None,
            sam_rho: None,
            projection: ProjectionConfig {
                max_iters: 10,
                ..ProjectionConfig::default()
            },
            epochs: 10,
            batch_size: 128,
            precision: Precision::F64,
            data_dir: None,
            train_rows: Rows(0..50_000),
            val_rows: Rows(50_000..60_000),
            mlp: MlpSpec::default(),
        }
    }
}

impl TrainSection {
    /// Minibatch SGD, SAM or RBO; plain `gd` has no minibatch meaning here.
    pub fn train_optimizer(&self) -> CliResult<TrainOptimizer> {
        Ok(
            match resolve_optimizer(self.optimizer, self.rho, self.eta, self.sam_rho)? {
                OptimizerChoice::Rbo { rho, eta } => TrainOptimizer::Rbo {
                    rho,
                    eta,
                    projection: self.projection,
                },
                OptimizerChoice::Sgd { eta } => TrainOptimizer::Sgd { eta },
                OptimizerChoice::Sam { eta, sam_rho } => TrainOptimizer::Sam { eta, sam_rho },
                OptimizerChoice::Gd { .. } => {
                    return Err(CliError::config(
                        "training supports sgd, sam and rbo; use sgd for gradient descent",
                    ))
                }
            },
        )
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data/mnist"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetMode {
    /// `φ_ρ(θ)` on the grid.
    #[default]
    Offset,
    /// Reachability verdict of each graph point.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffsetConfig {
    pub landscape: LandscapeSpec,
    pub rhos: Vec<f64>,
    pub interval: (f64, f64),
    pub grid_step: f64,
    pub mode: OffsetMode,
    pub probe: ProbeConfig,
}

impl Default for OffsetConfig {
    fn default() -> Self {
        Self {
            landscape: default_landscape(),
            rhos: vec![0.01, 0.1, 1.0, 10.0],
            interval: (0.0, TAU),
            grid_step: 1e-3,
            mode: OffsetMode::Offset,
            probe: ProbeConfig::default(),
        }
    }
}

/// Parses `A:B` with `A <= B`.
pub fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("interval `{s}` is not of the form A:B"))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|e| format!("interval `{s}`: {e}"))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(format!("interval `{s}` needs finite A <= B"));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbo::landscape::ProfileId;
    use rbo::optimizer::{StepSize, WarmStart};

    #[test]
    fn default_config_round_trips() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn edited_config_round_trips() {
        let mut c = Config {
            seed: 17,
            ..Config::default()
        };
        c.output.path = Some("out.csv".into());
        c.output.format = Format::Json;
        c.trajectory.landscape = LandscapeSpec::AffineBump {
            slope: vec![1.0, -0.5],
            offset: 0.25,
            profile: ProfileId::Gaussian,
            amplitude: 0.3,
        };
        c.trajectory.optimizer = OptimizerId::Sam;
        c.trajectory.sam_rho = Some(0.2);
        c.trajectory.theta0 = Some(vec![0.1, 1e-7]);
        c.trajectory.projection = ProjectionConfig {
            gamma: StepSize::Fixed(0.03),
            max_iters: 7,
            grad_tol: 1e-11,
            warm_start: WarmStart::CandidateTheta,
        };
        c.sweep.task = SweepTask::Mlp;
        c.sweep.rho.count = 2;
        c.verify.checks = vec!["gd-limit".into()];
        c.verify.gd_limit.landscape = Some(LandscapeSpec::Quadratic {
            matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
            center: Some(vec![0.3, -0.1]),
        });
        c.verify.gd_limit.check.theta0 = vec![1.0, 1.0];
        c.verify.sharp_minima.sigmas = vec![1.0, 2.0, 4.0];
        c.train.precision = Precision::F32;
        c.train.val_rows = Rows(100..200);
        c.train.data_dir = Some("/tmp/mnist".into());
        c.offset.mode = OffsetMode::Unreachable;
        c.offset.interval = (-1.5, 0.1);
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_sections_take_defaults() {
        let c = Config::parse(
            r#"
            seed = 3
            [trajectory]
            optimizer = "gd"
            eta = 0.1
            landscape = { id = "quadratic", matrix = [[1.0]] }
            [trajectory.projection]
            max_iters = 5
            [verify.gd-limit]
            steps = 10
            [verify.weak-ironing]
            landscape = { id = "sinusoid" }
            epsilon = 0.5
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.trajectory.steps, 100);
        assert_eq!(c.trajectory.projection.max_iters, 5);
        assert_eq!(c.trajectory.projection.grad_tol, 1e-8);
        assert_eq!(c.verify.gd_limit.check.steps, 10);
        assert_eq!(c.verify.gd_limit.check.eta, 0.1);
        assert_eq!(
            c.verify.weak_ironing.landscape,
            Some(LandscapeSpec::Sinusoid)
        );
        assert_eq!(c.verify.weak_ironing.check.epsilon, 0.5);
        assert_eq!(
            c.trajectory.choice().unwrap(),
            OptimizerChoice::Gd { eta: 0.1 }
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("nonsense = 1").is_err());
        assert!(Config::parse("[trajectory]\nrate = 1").is_err());
        assert!(Config::parse("[trajectory.projection]\nsteps = 1").is_err());
        assert!(Config::parse("[verify.gd-limit]\nstep = 1").is_err());
    }

    #[test]
    fn unknown_landscape_names_the_id() {
        let e = Config::parse("[trajectory]\nlandscape = { id = \"wobbly\" }").unwrap_err();
        assert!(e.to_string().contains("wobbly"), "{e}");
        let e = parse_landscape("wobbly").unwrap_err();
        assert!(e.to_string().contains("wobbly"), "{e}");
    }

    #[test]
    fn landscape_flag_forms() {
        assert_eq!(
            parse_landscape("sinusoid").unwrap(),
            LandscapeSpec::Sinusoid
        );
        assert_eq!(
            parse_landscape("riemann").unwrap(),
            LandscapeSpec::Riemann { n: 100 }
        );
        assert_eq!(
            parse_landscape("{ id = \"riemann\", n = 5 }").unwrap(),
            LandscapeSpec::Riemann { n: 5 }
        );
    }

    #[test]
    fn optimizer_defaults_and_exclusions() {
        use OptimizerId::*;
        assert_eq!(
            resolve_optimizer(Rbo, None, None, None).unwrap(),
            OptimizerChoice::Rbo { rho: 1.0, eta: 6.0 }
        );
        assert_eq!(
            resolve_optimizer(Sgd, None, None, None).unwrap(),
            OptimizerChoice::Sgd { eta: 0.01 }
        );
        assert_eq!(
            resolve_optimizer(Sam, None, Some(0.1), None).unwrap(),
            OptimizerChoice::Sam {
                eta: 0.1,
                sam_rho: 0.05
            }
        );
        assert!(resolve_optimizer(Gd, Some(1.0), None, None).is_err());
        assert!(resolve_optimizer(Rbo, None, None, Some(0.1)).is_err());
        assert!(resolve_optimizer(Rbo, Some(0.0), None, None).is_err());
        assert!(resolve_optimizer(Gd, None, Some(f64::NAN), None).is_err());
    }

    #[test]
    fn log_grid() {
        let g = LogGrid {
            min: 0.1,
            max: 10.0,
            count: 3,
        };
        let v = g.values().unwrap();
        assert_eq!(v[0], 0.1);
        assert_eq!(v[1], 1.0);
        assert_eq!(v[2], 10.0);
        assert!(LogGrid {
            min: 1.0,
            max: 1.0,
            count: 2
        }
        .values()
        .is_err());
        assert!(LogGrid {
            min: 1.0,
            max: 2.0,
            count: 0
        }
        .values()
        .is_err());
        assert_eq!(
            LogGrid {
                min: 2.0,
                max: 2.0,
                count: 1
            }
            .values()
            .unwrap(),
            vec![2.0]
        );
    }

    #[test]
    fn sweep_cells_are_sorted() {
        let mut s = SweepConfig::default();
        s.rho.count = 3;
        s.eta.count = 4;
        let cells = s.cells().unwrap();
        assert_eq!(cells.len(), 12);
        assert!(cells.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(cells[0], (0.1, 0.1 * 0.01));
        assert_eq!(cells[11], (10.0, 100.0));
    }

    #[test]
    fn row_ranges_and_intervals() {
        assert_eq!("0:50000".parse::<Rows>().unwrap(), Rows(0..50_000));
        assert!("5:5".parse::<Rows>().is_err());
        assert!("5".parse::<Rows>().is_err());
        assert_eq!(parse_interval("-1:1").unwrap(), (-1.0, 1.0));
        assert!(parse_interval("1:0").is_err());
    }

    #[test]
    fn train_rejects_plain_gd() {
        let mut t = TrainSection {
            optimizer: OptimizerId::Gd,
            ..TrainSection::default()
        };
        assert!(t.train_optimizer().is_err());
        t.optimizer = OptimizerId::Sgd;
        assert_eq!(
            t.train_optimizer().unwrap(),
            TrainOptimizer::Sgd { eta: 0.01 }
        );
    }
}
