//! JSON run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use klt_mbi_core::MbiConfig;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{RunError, RunResult};
use crate::scenarios::{check_spec, ScenarioKind, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbiSection {
    /// A number, or the string `"inf"`.
    #[serde(default = "default_epsilon", deserialize_with = "epsilon_value")]
    pub epsilon: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub record_trace: bool,
}

fn default_epsilon() -> f64 {
    MbiConfig::default().epsilon
}

fn default_max_iterations() -> usize {
    MbiConfig::default().max_iterations
}

fn default_true() -> bool {
    true
}

impl Default for MbiSection {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            max_iterations: default_max_iterations(),
            record_trace: false,
        }
    }
}

impl MbiSection {
    pub fn to_config(&self) -> MbiConfig {
        MbiConfig {
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
            record_trace: self.record_trace,
        }
    }
}

fn epsilon_value<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Number(v) => Ok(v),
        Raw::Text(t) if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity") => Ok(f64::INFINITY),
        Raw::Text(t) => Err(serde::de::Error::custom(format!(
            "epsilon must be a number or \"inf\", got {t:?}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub trace_csv: PathBuf,
    pub model_json: PathBuf,
    #[serde(default)]
    pub image_out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub mbi: MbiSection,
    pub outputs: Outputs,
    #[serde(default = "default_true")]
    pub report_baseline: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> RunResult<Self> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("invalid config: {e}")))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> RunResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.outputs.trace_csv);
        fix(&mut self.outputs.model_json);
        if let Some(p) = self.outputs.image_out_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.scenario.image_path.as_mut() {
            fix(p);
        }
    }

    /// Every problem found without touching the file system beyond
    /// metadata lookups.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = check_spec(&self.scenario);
        if let Err(e) = self.mbi.to_config().validate() {
            problems.push(format!("mbi: {e}"));
        }
        for (what, path) in [
            ("trace_csv", &self.outputs.trace_csv),
            ("model_json", &self.outputs.model_json),
        ] {
            if path.is_dir() {
                problems.push(format!("{what} {} is a directory", path.display()));
            } else if let Err(e) = writable_location(path.parent().unwrap_or(Path::new("."))) {
                problems.push(format!("{what} {}: {e}", path.display()));
            }
        }
        match (&self.outputs.image_out_dir, self.scenario.kind) {
            (Some(dir), ScenarioKind::Image) => {
                if let Err(e) = writable_location(dir) {
                    problems.push(format!("image_out_dir {}: {e}", dir.display()));
                }
            }
            (None, ScenarioKind::Image) => problems.push("image scenario requires outputs.image_out_dir".into()),
            (Some(_), _) => problems.push("image_out_dir applies to image scenarios only".into()),
            (None, _) => {}
        }
        problems
    }
}

/// A directory that exists and is writable, or could be created under its
/// nearest existing ancestor.
fn writable_location(dir: &Path) -> Result<(), String> {
    let mut probe: &Path = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
    loop {
        match fs::metadata(probe) {
            Ok(meta) if meta.is_dir() => {
                return if meta.permissions().readonly() {
                    Err(format!("{} is read-only", probe.display()))
                } else {
                    Ok(())
                };
            }
            Ok(_) => return Err(format!("{} is not a directory", probe.display())),
            Err(_) => match probe.parent() {
                Some(p) if !p.as_os_str().is_empty() => probe = p,
                _ => probe = Path::new("."),
            },
        }
    }
}

/// Outcome of checking a config file.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub config: RunConfig,
    pub summary: Vec<String>,
}

pub fn validate_file(path: &Path) -> RunResult<ValidationReport> {
    let config = RunConfig::load(path)?;
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(RunError::Config(problems.join("; ")));
    }
    let p = &config.scenario.partition;
    let eps = config.mbi.epsilon;
    let summary = vec![
        format!("scenario: {:?}", config.scenario.kind),
        format!("partition: m = {}, n = {:?}, r = {:?}", p.m, p.n, p.r),
        format!("mbi: epsilon = {eps:e}, max_iterations = {}", config.mbi.max_iterations),
        format!("trace_csv: {}", config.outputs.trace_csv.display()),
        format!("model_json: {}", config.outputs.model_json.display()),
    ];
    Ok(ValidationReport { config, summary })
}
