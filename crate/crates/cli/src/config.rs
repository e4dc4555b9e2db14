//! Experiment configuration (TOML).
//!
//! Relative data paths resolve against the config file's directory, or
//! against `DGKD_DATA_ROOT` when set. `DGKD_OUTPUT_DIR` replaces
//! `output_dir` and `DGKD_JOBS` the default parallelism. No other setting
//! can come from the environment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use dgkd_core::model::EncoderConfig;
use dgkd_core::synthesis::GeneratorConfig;
use dgkd_core::trainers::{Method, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub name: String,
    pub train: PathBuf,
    pub dev: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub name: String,
    pub test: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerSettings {
    pub min_count: usize,
    pub max_vocab: usize,
}

impl Default for TokenizerSettings {
    fn default() -> Self {
        Self {
            min_count: 1,
            max_vocab: 30_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSettings {
    pub max_len: usize,
    /// Defaults to half of `max_len`.
    pub stride: Option<usize>,
}

impl Default for WindowSettings {
    fn default() -> Self {
        Self {
            max_len: 128,
            stride: None,
        }
    }
}

/// Encoder shape; the vocabulary size comes from the fitted tokenizer and
/// the sequence length from the window settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSettings {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub dropout: f64,
    pub init_std: f64,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        Self {
            num_layers: 2,
            hidden_dim: 32,
            num_heads: 2,
            ffn_dim: 64,
            dropout: 0.1,
            init_std: 0.05,
        }
    }
}

impl EncoderSettings {
    pub fn encoder(&self, vocab_size: usize, max_len: usize) -> EncoderConfig {
        EncoderConfig {
            vocab_size,
            num_layers: self.num_layers,
            hidden_dim: self.hidden_dim,
            num_heads: self.num_heads,
            ffn_dim: self.ffn_dim,
            max_len,
            dropout: self.dropout,
            init_std: self.init_std,
        }
    }
}

/// Method-specific axes of the sweep. Empty lists fall back to the
/// method's default value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodGrid {
    pub tau: Vec<f64>,
    pub lambda_adv: Vec<f64>,
    pub lambda_erm: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub learning_rates: Vec<f64>,
    pub epochs: Vec<usize>,
    /// Keyed by method name (`kd_gold`, `domain_adv`, ...).
    pub methods: BTreeMap<String, MethodGrid>,
}

impl Default for Grid {
    fn default() -> Self {
        let kd = MethodGrid {
            tau: vec![1.0, 2.0, 4.0],
            ..MethodGrid::default()
        };
        let mut methods = BTreeMap::new();
        for m in [Method::KdGold, Method::KdAug, Method::KdDomainAdv, Method::KdEpisodic, Method::KdMldg] {
            methods.insert(m.as_str().to_string(), kd.clone());
        }
        Self {
            learning_rates: vec![1e-3, 3e-3],
            epochs: vec![4],
            methods,
        }
    }
}

/// One fully specified point of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub tau: f64,
    pub lambda_adv: f64,
    pub lambda_erm: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSettings {
    pub top_p: f64,
    pub top_k: usize,
    pub questions_per_passage: usize,
    /// Questions per source domain.
    pub total_questions: usize,
    pub seed: u64,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        let g = GeneratorConfig::new("");
        Self {
            top_p: g.top_p,
            top_k: g.top_k,
            questions_per_passage: g.questions_per_passage,
            total_questions: g.total_questions,
            seed: g.seed,
        }
    }
}

impl GeneratorSettings {
    pub fn for_domain(&self, domain: &str) -> GeneratorConfig {
        GeneratorConfig {
            top_p: self.top_p,
            top_k: self.top_k,
            questions_per_passage: self.questions_per_passage,
            total_questions: self.total_questions,
            seed: self.seed,
            source_domain: domain.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub batch_size: usize,
    /// Synthetic-stage epochs for augmented distillation.
    pub synthetic_epochs: usize,
    pub max_answer_len: usize,
    pub first_order_mldg: bool,
    pub inner_lr: Option<f64>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            batch_size: 16,
            synthetic_epochs: 1,
            max_answer_len: t.max_answer_len,
            first_order_mldg: false,
            inner_lr: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherSettings {
    pub encoder: EncoderSettings,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TeacherSettings {
    fn default() -> Self {
        Self {
            encoder: EncoderSettings {
                hidden_dim: 64,
                num_heads: 4,
                ffn_dim: 128,
                ..EncoderSettings::default()
            },
            learning_rate: 3e-3,
            epochs: 6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSettings {
    /// Method families a complete report must contain; the first is the
    /// baseline for relative gains and significance tests.
    pub methods: Vec<String>,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self {
            methods: Method::ALL.iter().map(|m| m.as_str().to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    pub sources: Vec<SourceSpec>,
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub tokenizer: TokenizerSettings,
    #[serde(default)]
    pub windows: WindowSettings,
    #[serde(default)]
    pub student: EncoderSettings,
    #[serde(default)]
    pub teacher: TeacherSettings,
    #[serde(default)]
    pub train: TrainSettings,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub generator: GeneratorSettings,
    #[serde(default)]
    pub report: ReportSettings,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_jobs() -> usize {
    1
}

impl ExperimentConfig {
    /// Parses `path` and applies the environment overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = match std::env::var_os("DGKD_DATA_ROOT") {
            Some(root) => PathBuf::from(root),
            None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for s in &mut cfg.sources {
            rebase(&mut s.train);
            rebase(&mut s.dev);
        }
        for t in &mut cfg.targets {
            rebase(&mut t.test);
        }
        match std::env::var_os("DGKD_OUTPUT_DIR") {
            Some(out) => cfg.output_dir = PathBuf::from(out),
            None => {
                let config_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                if cfg.output_dir.is_relative() {
                    cfg.output_dir = config_dir.join(&cfg.output_dir);
                }
            }
        }
        if let Ok(j) = std::env::var("DGKD_JOBS") {
            cfg.jobs = j.parse().with_context(|| format!("DGKD_JOBS must be a positive integer, got {j:?}"))?;
        }
        Ok(cfg)
    }

    /// Structural checks plus existence of every referenced data file.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.sources.len() >= 2, "need at least two source datasets, got {}", self.sources.len());
        ensure!(!self.targets.is_empty(), "need at least one target dataset");
        ensure!(!self.seeds.is_empty(), "seed list is empty");
        ensure!(self.jobs >= 1, "jobs must be at least 1");
        let mut names = std::collections::BTreeSet::new();
        for n in self.sources.iter().map(|s| &s.name).chain(self.targets.iter().map(|t| &t.name)) {
            ensure!(!n.is_empty() && !n.contains('/'), "dataset name {n:?} is not a plain file-name component");
            ensure!(names.insert(n), "dataset name {n} used twice");
        }
        for p in self
            .sources
            .iter()
            .flat_map(|s| [&s.train, &s.dev])
            .chain(self.targets.iter().map(|t| &t.test))
        {
            ensure!(p.is_file(), "data file {} does not exist", p.display());
        }
        ensure!(self.windows.max_len >= 8, "windows.max_len must be at least 8");
        ensure!(!self.grid.learning_rates.is_empty(), "grid.learning_rates is empty");
        ensure!(!self.grid.epochs.is_empty(), "grid.epochs is empty");
        for name in self.grid.methods.keys() {
            name.parse::<Method>().map_err(|e| anyhow::anyhow!("grid.methods: {e}"))?;
        }
        for name in &self.report.methods {
            name.parse::<Method>().map_err(|e| anyhow::anyhow!("report.methods: {e}"))?;
        }
        if self.report.methods.is_empty() {
            bail!("report.methods is empty");
        }
        for m in Method::ALL {
            for p in self.grid_points(m) {
                self.train_config(m, &p, 0).validate().with_context(|| format!("grid point {} of {m}", p.index))?;
            }
        }
        self.generator.for_domain("check").validate()?;
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.windows.stride.unwrap_or(self.windows.max_len / 2)
    }

    pub fn source_names(&self) -> Vec<String> {
        self.sources.iter().map(|s| s.name.clone()).collect()
    }

    /// Cartesian product of the shared and method-specific axes, in a fixed
    /// order (learning rate varies slowest).
    pub fn grid_points(&self, method: Method) -> Vec<GridPoint> {
        let defaults = TrainConfig::for_method(method);
        let mg = self.grid.methods.get(method.as_str()).cloned().unwrap_or_default();
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let (taus, advs, erms, betas) = (
            or(&mg.tau, defaults.tau),
            or(&mg.lambda_adv, defaults.lambda_adv),
            or(&mg.lambda_erm, defaults.lambda_erm),
            or(&mg.beta, defaults.beta),
        );
        let mut out = Vec::new();
        for &learning_rate in &self.grid.learning_rates {
            for &epochs in &self.grid.epochs {
                for &tau in &taus {
                    for &lambda_adv in &advs {
                        for &lambda_erm in &erms {
                            for &beta in &betas {
                                out.push(GridPoint {
                                    index: out.len(),
                                    learning_rate,
                                    epochs,
                                    tau,
                                    lambda_adv,
                                    lambda_erm,
                                    beta,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn train_config(&self, method: Method, p: &GridPoint, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: p.learning_rate,
            epochs: p.epochs,
            synthetic_epochs: if method == Method::KdAug { self.train.synthetic_epochs } else { 0 },
            batch_size: self.train.batch_size,
            seed,
            tau: p.tau,
            lambda_adv: p.lambda_adv,
            lambda_erm: p.lambda_erm,
            beta: p.beta,
            inner_lr: self.train.inner_lr,
            first_order_mldg: self.train.first_order_mldg,
            max_answer_len: self.train.max_answer_len,
            ..TrainConfig::for_method(method)
        }
    }

    pub fn teacher_train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.teacher.learning_rate,
            epochs: self.teacher.epochs,
            batch_size: self.train.batch_size,
            seed: self.teacher.seed,
            max_answer_len: self.train.max_answer_len,
            ..TrainConfig::for_method(Method::Erm)
        }
    }

    /// Companion models share the student's shape and the first grid point.
    pub fn companion_train_config(&self) -> TrainConfig {
        let p = &self.grid_points(Method::Erm)[0];
        self.train_config(Method::Erm, p, self.teacher.seed)
    }

    /// An annotated example configuration.
    pub fn example_toml() -> &'static str {
        include_str!("../example.toml")
    }
}
