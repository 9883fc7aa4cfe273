//! JSON configuration shared by the subcommands. Every key has a default;
//! command-line flags override whatever the file sets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fastcv::Metric;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 20_160_915;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Multiclass,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Binary => "binary",
            Task::Multiclass => "multiclass",
        })
    }
}

impl FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "binary" => Ok(Task::Binary),
            "multiclass" => Ok(Task::Multiclass),
            other => Err(CliError::Argument(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Argument(format!("unknown format `{other}`"))),
        }
    }
}

/// Ridge penalty: a fixed value, or `auto` = `1e-3 · trace(S_w)/P` of the
/// data at hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPolicy {
    Fixed(f64),
    Auto,
}

pub const AUTO_LAMBDA_FACTOR: f64 = 1e-3;

impl LambdaPolicy {
    pub fn resolve(&self, dataset: &fastcv::Dataset) -> CliResult<f64> {
        match *self {
            LambdaPolicy::Fixed(v) => Ok(v),
            LambdaPolicy::Auto => {
                let sw = fastcv::scatter_matrices(dataset)?.s_w;
                let nu = fastcv::lsq::scatter_trace_scale(sw.view())?;
                Ok(AUTO_LAMBDA_FACTOR * nu)
            }
        }
    }
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaPolicy::Fixed(v) => write!(f, "{v}"),
            LambdaPolicy::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if s == "auto" {
            return Ok(LambdaPolicy::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(LambdaPolicy::Fixed(v)),
            _ => Err(CliError::Argument(format!(
                "lambda must be a non-negative number or `auto`, got `{s}`"
            ))),
        }
    }
}

impl Serialize for LambdaPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LambdaPolicy::Fixed(v) => s.serialize_f64(*v),
            LambdaPolicy::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => LambdaPolicy::from_str(&v.to_string()),
            Raw::Str(s) => LambdaPolicy::from_str(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Number of folds; `N` means leave-one-out at whatever sample count the
/// cell has.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldCount {
    Fixed(usize),
    LeaveOneOut,
}

impl FoldCount {
    pub fn resolve(&self, n_samples: usize) -> usize {
        match *self {
            FoldCount::Fixed(k) => k,
            FoldCount::LeaveOneOut => n_samples,
        }
    }
}

impl FromStr for FoldCount {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if s == "N" || s == "n" {
            return Ok(FoldCount::LeaveOneOut);
        }
        s.parse()
            .map(FoldCount::Fixed)
            .map_err(|_| CliError::Argument(format!("fold count must be an integer or `N`, got `{s}`")))
    }
}

impl Serialize for FoldCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            FoldCount::Fixed(k) => s.serialize_u64(*k as u64),
            FoldCount::LeaveOneOut => s.serialize_str("N"),
        }
    }
}

impl<'de> Deserialize<'de> for FoldCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(FoldCount::Fixed(k)),
            Raw::Str(s) => FoldCount::from_str(&s).map_err(serde::de::Error::custom),
        }
    }
}

mod metric_str {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Metric, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&m.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Metric, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Simulation grid of the `bench` subcommand. Each cell is one point of
/// the Cartesian product; `n_classes = 2` cells run the binary task, larger
/// values the multi-class one. `n_permutations` counts every labelling
/// evaluated, the observed one included, so `1` is plain cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchGrid {
    pub n_samples: Vec<usize>,
    pub n_features: Vec<usize>,
    pub n_classes: Vec<usize>,
    pub n_folds: Vec<FoldCount>,
    pub n_permutations: Vec<usize>,
    pub repeats: usize,
}

impl Default for BenchGrid {
    fn default() -> Self {
        Self {
            n_samples: vec![100, 1000],
            n_features: vec![10, 100, 1000],
            n_classes: vec![2, 5],
            n_folds: vec![FoldCount::Fixed(5), FoldCount::Fixed(10), FoldCount::LeaveOneOut],
            n_permutations: vec![1, 100],
            repeats: 3,
        }
    }
}

impl BenchGrid {
    pub fn validate(&self) -> CliResult<()> {
        let empty = [
            ("n_samples", self.n_samples.is_empty()),
            ("n_features", self.n_features.is_empty()),
            ("n_classes", self.n_classes.is_empty()),
            ("n_folds", self.n_folds.is_empty()),
            ("n_permutations", self.n_permutations.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(CliError::Argument(format!("bench grid `{name}` is empty")));
        }
        if self.repeats == 0 {
            return Err(CliError::Argument("repeats must be at least 1".into()));
        }
        if self.n_classes.iter().any(|&c| c < 2) {
            return Err(CliError::Argument("every class count must be at least 2".into()));
        }
        if self.n_permutations.contains(&0) {
            return Err(CliError::Argument(
                "n_permutations counts the observed labelling and must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Settings of the `run` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub task: Task,
    pub folds: usize,
    /// Null permutations drawn in addition to the observed labelling.
    pub permutations: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            task: Task::Binary,
            folds: 5,
            permutations: 0,
        }
    }
}

/// Settings of the `verify` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    /// Random datasets per grid cell.
    pub seeds: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { seeds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub threads: usize,
    pub lambda: LambdaPolicy,
    #[serde(with = "metric_str")]
    pub metric: Metric,
    pub stratify: bool,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub bench: BenchGrid,
    pub run: RunSettings,
    pub verify: VerifySettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            threads: 1,
            lambda: LambdaPolicy::Fixed(1.0),
            metric: Metric::Accuracy,
            stratify: true,
            format: OutputFormat::Csv,
            out: None,
            bench: BenchGrid::default(),
            run: RunSettings::default(),
            verify: VerifySettings::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Argument(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(Config::from_json("{}").unwrap(), Config::default());
    }

    #[test]
    fn partial_documents_override() {
        let c = Config::from_json(
            r#"{"seed": 7, "lambda": "auto", "metric": "auc",
                "bench": {"n_folds": [5, "N"], "repeats": 1}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.lambda, LambdaPolicy::Auto);
        assert_eq!(c.metric, Metric::Auc);
        assert_eq!(c.bench.n_folds, vec![FoldCount::Fixed(5), FoldCount::LeaveOneOut]);
        assert_eq!(c.bench.repeats, 1);
        assert_eq!(c.bench.n_features, BenchGrid::default().n_features);
    }

    #[test]
    fn bad_documents_are_argument_errors() {
        for text in [r#"{"lambda": -1}"#, r#"{"metric": "f1"}"#, r#"{"sede": 1}"#, "[1,"] {
            assert!(matches!(Config::from_json(text), Err(CliError::Argument(_))), "{text}");
        }
        let mut g = BenchGrid::default();
        g.n_features.clear();
        assert!(g.validate().is_err());
    }

    #[test]
    fn round_trip() {
        let c = Config {
            lambda: LambdaPolicy::Fixed(0.25),
            ..Config::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(Config::from_json(&text).unwrap(), c);
    }

    #[test]
    fn flag_values() {
        assert_eq!("auto".parse::<LambdaPolicy>().unwrap(), LambdaPolicy::Auto);
        assert_eq!("0.5".parse::<LambdaPolicy>().unwrap(), LambdaPolicy::Fixed(0.5));
        assert!("-2".parse::<LambdaPolicy>().is_err());
        assert_eq!("N".parse::<FoldCount>().unwrap().resolve(40), 40);
        assert_eq!("10".parse::<FoldCount>().unwrap().resolve(40), 10);
    }
}
