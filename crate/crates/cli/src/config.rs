//! `key = value` experiment configuration with `#` comments.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    BernoulliHalf,
    GroundTruthRbm,
}

impl DataSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DataSource::BernoulliHalf => "bernoulli-half",
            DataSource::GroundTruthRbm => "ground-truth-rbm",
        }
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DataSource {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "bernoulli-half" => Ok(DataSource::BernoulliHalf),
            "ground-truth-rbm" => Ok(DataSource::GroundTruthRbm),
            other => Err(CliError::Config(format!(
                "unknown data_source `{other}` (expected bernoulli-half or ground-truth-rbm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub b_radius: f64,
    pub w_radius: f64,
    pub num_sigma: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub step_size: f64,
    pub seed: u64,
    pub vc_values: Vec<u32>,
    pub data_source: DataSource,
    pub output_dir: PathBuf,
    /// Training.
    pub epochs: usize,
    pub learning_rate: f64,
    pub audit_every: usize,
    /// Size of the generated member set for FINITE_T.
    pub num_members: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 10,
            m: 4,
            n: 50,
            b_radius: 1.0,
            w_radius: 1.0,
            num_sigma: 1000,
            restarts: 8,
            iterations: 500,
            step_size: 0.1,
            seed: 1,
            vc_values: vec![1, 2, 5, 10],
            data_source: DataSource::BernoulliHalf,
            output_dir: PathBuf::from("out"),
            epochs: 200,
            learning_rate: 0.05,
            audit_every: 10,
            num_members: 256,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> CliResult<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("line {line}: bad value for `{key}`: {e}")))
}

impl ExperimentConfig {
    /// Missing keys keep their defaults; unknown or repeated keys are errors.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(CliError::Config(format!("line {line}: `{key}` given twice")));
            }
            seen.push(key.to_string());
            match key {
                "k" => cfg.k = parse_value(key, value, line)?,
                "m" => cfg.m = parse_value(key, value, line)?,
                "n" => cfg.n = parse_value(key, value, line)?,
                "B_radius" => cfg.b_radius = parse_value(key, value, line)?,
                "W_radius" => cfg.w_radius = parse_value(key, value, line)?,
                "num_sigma" => cfg.num_sigma = parse_value(key, value, line)?,
                "restarts" => cfg.restarts = parse_value(key, value, line)?,
                "iterations" => cfg.iterations = parse_value(key, value, line)?,
                "step_size" => cfg.step_size = parse_value(key, value, line)?,
                "seed" => cfg.seed = parse_value(key, value, line)?,
                "vc_values" => {
                    cfg.vc_values = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_value(key, s, line))
                        .collect::<CliResult<_>>()?
                }
                "data_source" => cfg.data_source = value.parse()?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "epochs" => cfg.epochs = parse_value(key, value, line)?,
                "learning_rate" => cfg.learning_rate = parse_value(key, value, line)?,
                "audit_every" => cfg.audit_every = parse_value(key, value, line)?,
                "num_members" => cfg.num_members = parse_value(key, value, line)?,
                other => return Err(CliError::Config(format!("line {line}: unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let counts = [
            ("k", self.k),
            ("m", self.m),
            ("n", self.n),
            ("num_sigma", self.num_sigma),
            ("restarts", self.restarts),
            ("iterations", self.iterations),
            ("audit_every", self.audit_every),
            ("num_members", self.num_members),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(CliError::Config(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [
            ("B_radius", self.b_radius),
            ("W_radius", self.w_radius),
            ("learning_rate", self.learning_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(CliError::Config(format!("step_size must be > 0, got {}", self.step_size)));
        }
        if self.vc_values.contains(&0) {
            return Err(CliError::Config("vc_values must be >= 1".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(CliError::Config("output_dir must not be empty".into()));
        }
        Ok(())
    }

    /// Canonical text: every key, one per line, in a fixed order.
    pub fn serialize(&self) -> String {
        let vc: Vec<String> = self.vc_values.iter().map(u32::to_string).collect();
        let mut out = String::new();
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "B_radius = {}", self.b_radius);
        let _ = writeln!(out, "W_radius = {}", self.w_radius);
        let _ = writeln!(out, "num_sigma = {}", self.num_sigma);
        let _ = writeln!(out, "restarts = {}", self.restarts);
        let _ = writeln!(out, "iterations = {}", self.iterations);
        let _ = writeln!(out, "step_size = {}", self.step_size);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "vc_values = {}", vc.join(","));
        let _ = writeln!(out, "data_source = {}", self.data_source);
        let _ = writeln!(out, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(out, "epochs = {}", self.epochs);
        let _ = writeln!(out, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(out, "audit_every = {}", self.audit_every);
        let _ = writeln!(out, "num_members = {}", self.num_members);
        out
    }
}
