//! Run configuration files (TOML, or JSON when the file ends in `.json`).
//!
//! ```toml
//! version = 1
//! output = "out"
//! method = "multi-hntf"                 # fit
//! methods = ["multi-hntf", "hncpd", "hntf-i"]   # compare
//! ranks = [7, 4, 2]
//! seeds = [0, 1, 2]
//! restarts = 1
//! lead_modes = [1, 2, 3]                # hntf-i, 1-based
//!
//! [options]
//! max_iters = 500
//! tol = 1e-6
//! epsilon = 1e-12
//!
//! [input]
//! path = "counts.dtf"                   # or a [input.synthetic] table
//!
//! [supervision]
//! labels = "labels.csv"
//! lambda = 1.0
//! sample_mode = 2
//!
//! [export]
//! chain = "out/chains/multi-hntf-seed0.json"
//! heatmap_modes = [1, 2]
//! vocab = "vocab.txt"
//! vocab_mode = 3
//! keywords = 10
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use multihntf::data::SyntheticSpec;
use multihntf::{FitOptions, Method};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub input: Option<InputConfig>,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub ranks: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Fits per seed; the one with the lowest final-layer loss is kept.
    #[serde(default = "one")]
    pub restarts: usize,
    /// 1-based lead modes for `hntf-i`; empty means every mode.
    #[serde(default)]
    pub lead_modes: Vec<usize>,
    #[serde(default)]
    pub options: OptionsConfig,
    #[serde(default)]
    pub supervision: Option<SupervisionConfig>,
    #[serde(default)]
    pub export: ExportConfig,
    /// Record per-fit wall time in reports (makes them nondeterministic).
    #[serde(default)]
    pub wall_time: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    /// Regenerate the synthetic noise for every run seed.
    #[serde(default)]
    pub resample: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionsConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub epsilon: f64,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        let d = FitOptions::default();
        OptionsConfig {
            max_iters: d.max_iters,
            tol: d.tol,
            epsilon: d.epsilon,
        }
    }
}

impl OptionsConfig {
    pub fn fit_options(&self, seed: u64) -> FitOptions {
        FitOptions {
            max_iters: self.max_iters,
            tol: self.tol,
            seed,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisionConfig {
    pub labels: PathBuf,
    /// Weight of the label term; without it labels are only used to score
    /// accuracy with a label dictionary fitted after the fact.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// 1-based mode whose factor rows are the labelled samples.
    #[serde(default = "two")]
    pub sample_mode: usize,
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub chain: Option<PathBuf>,
    /// 1-based; empty means every mode.
    pub heatmap_modes: Vec<usize>,
    pub vocab: Option<PathBuf>,
    /// 1-based mode indexed by the vocabulary; defaults to the only mode
    /// whose size matches it.
    pub vocab_mode: Option<usize>,
    pub keywords: usize,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            chain: None,
            heatmap_modes: Vec::new(),
            vocab: None,
            vocab_mode: None,
            keywords: 10,
        }
    }
}

/// Deserializes `text`, reporting the dotted path of the offending field.
pub fn parse_config(text: &str, json: bool) -> anyhow::Result<RunConfig> {
    let cfg: RunConfig = if json {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de)
            .map_err(|e| anyhow::anyhow!("{}: {}", e.path(), e.inner()))?
    } else {
        let de = toml::Deserializer::parse(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        serde_path_to_error::deserialize(de)
            .map_err(|e| anyhow::anyhow!("{}: {}", e.path(), e.inner()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Reads and validates a config file and resolves its relative paths.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg =
            parse_config(&text, json).with_context(|| format!("config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = &mut self.output {
            fix(p);
        }
        if let Some(p) = self.input.as_mut().and_then(|i| i.path.as_mut()) {
            fix(p);
        }
        if let Some(s) = &mut self.supervision {
            fix(&mut s.labels);
        }
        if let Some(p) = &mut self.export.chain {
            fix(p);
        }
        if let Some(p) = &mut self.export.vocab {
            fix(p);
        }
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.version != CONFIG_VERSION {
            bail!(
                "version: unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            );
        }
        if let Some(input) = &self.input {
            match (&input.path, &input.synthetic) {
                (Some(_), Some(_)) => bail!("input: give either path or synthetic, not both"),
                (None, None) => bail!("input: needs path or synthetic"),
                (None, Some(spec)) => spec
                    .validate()
                    .map_err(|e| anyhow::anyhow!("input.synthetic: {e}"))?,
                (Some(_), None) if input.resample => {
                    bail!("input.resample: only applies to synthetic input")
                }
                _ => {}
            }
        }
        if !self.ranks.is_empty() {
            if let Some(i) = self.ranks.iter().position(|&r| r == 0) {
                bail!("ranks[{i}]: ranks must be positive");
            }
            if let Some(i) = self.ranks.windows(2).position(|w| w[1] >= w[0]) {
                bail!("ranks[{}]: ranks must strictly decrease", i + 1);
            }
        }
        if self.seeds.is_empty() {
            bail!("seeds: at least one seed is required");
        }
        if self.restarts == 0 {
            bail!("restarts: must be at least 1");
        }
        if let Some(i) = self.lead_modes.iter().position(|&m| m == 0) {
            bail!("lead_modes[{i}]: modes are numbered from 1");
        }
        self.options
            .fit_options(0)
            .validate()
            .map_err(|e| anyhow::anyhow!("options: {e}"))?;
        if let Some(s) = &self.supervision {
            if let Some(l) = s.lambda {
                if !(l.is_finite() && l >= 0.0) {
                    bail!("supervision.lambda: must be finite and ≥ 0, got {l}");
                }
            }
            if s.sample_mode == 0 {
                bail!("supervision.sample_mode: modes are numbered from 1");
            }
        }
        if let Some(i) = self.export.heatmap_modes.iter().position(|&m| m == 0) {
            bail!("export.heatmap_modes[{i}]: modes are numbered from 1");
        }
        if self.export.vocab_mode == Some(0) {
            bail!("export.vocab_mode: modes are numbered from 1");
        }
        Ok(())
    }

    /// Methods of a comparison sweep: `methods`, else the single `method`.
    pub fn compare_methods(&self) -> anyhow::Result<Vec<Method>> {
        if !self.methods.is_empty() {
            return Ok(self.methods.clone());
        }
        match self.method {
            Some(m) => Ok(vec![m]),
            None => bail!("methods: compare needs `methods` or `method`"),
        }
    }

    pub fn fit_method(&self) -> anyhow::Result<Method> {
        match (self.method, self.methods.as_slice()) {
            (Some(m), _) => Ok(m),
            (None, [m]) => Ok(*m),
            (None, []) => bail!("method: fit needs a method"),
            (None, _) => bail!("methods: fit runs one method; use compare for several"),
        }
    }

    pub fn require_ranks(&self) -> anyhow::Result<&[usize]> {
        if self.ranks.is_empty() {
            bail!("ranks: at least one rank is required");
        }
        Ok(&self.ranks)
    }

    /// Checks that depend on the input's order.
    pub fn check_against_order(&self, methods: &[Method], order: usize) -> anyhow::Result<()> {
        for (i, m) in methods.iter().enumerate() {
            if m.matrix_only() && order != 2 {
                bail!("methods[{i}]: {m} requires order-2 input, got order {order}");
            }
        }
        if let Some(i) = self.lead_modes.iter().position(|&m| m > order) {
            bail!("lead_modes[{i}]: mode {} out of range for order {order}", self.lead_modes[i]);
        }
        if let Some(s) = &self.supervision {
            if s.sample_mode > order {
                bail!("supervision.sample_mode: mode {} out of range for order {order}", s.sample_mode);
            }
            if s.lambda.is_some() && order != 2 {
                bail!("supervision.lambda: supervised fitting requires order-2 input, got order {order}");
            }
            if s.lambda.is_some() && s.sample_mode != 2 {
                bail!("supervision.sample_mode: supervised fitting labels the columns (mode 2)");
            }
        }
        Ok(())
    }

    /// Zero-based lead modes for `hntf-i`.
    pub fn lead_modes_for(&self, order: usize, single: bool) -> Vec<usize> {
        if !self.lead_modes.is_empty() {
            self.lead_modes.iter().map(|m| m - 1).collect()
        } else if single {
            vec![0]
        } else {
            (0..order).collect()
        }
    }
}
