//! Run configuration, flag overrides and result emission for the `pcfb` binary.

use std::fs;
use std::path::{Path, PathBuf};

use pcfb_core::montecarlo::{ExperimentKind, ExperimentSpec, ResultTable};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// A validated set of experiments plus where their tables go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiments: Vec<ExperimentSpec>,
    #[serde(default)]
    pub output: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub verbosity: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{msg}")]
    Config { path: String, msg: String },
    #[error("{0}")]
    Core(#[from] pcfb_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
        }
    }

    /// The error as one line of JSON: `{"error":kind,"message":..,"path":..}`.
    pub fn to_json_line(&self) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("error".into(), self.kind().into());
        obj.insert("message".into(), self.to_string().into());
        match self {
            CliError::Config { path, .. } | CliError::Io { path, .. } => {
                obj.insert("path".into(), path.clone().into());
            }
            _ => {}
        }
        Value::Object(obj).to_string()
    }
}

fn config_error(path: impl Into<String>, msg: impl Into<String>) -> CliError {
    CliError::Config { path: path.into(), msg: msg.into() }
}

fn at(prefix: &str, path: &str) -> String {
    match (prefix.is_empty(), path.is_empty() || path == ".") {
        (true, _) => path.to_string(),
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{path}"),
    }
}

fn parse_spec(value: Value, prefix: &str) -> Result<ExperimentSpec, CliError> {
    let spec: ExperimentSpec = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = at(prefix, &e.path().to_string());
        config_error(path, e.into_inner().to_string())
    })?;
    check_spec(&spec, prefix)?;
    Ok(spec)
}

fn check_spec(spec: &ExperimentSpec, prefix: &str) -> Result<(), CliError> {
    spec.validate().map_err(|e| match e {
        pcfb_core::Error::Dimension(msg) => config_error(at(prefix, "r/t"), format!("invalid dimensions: {msg}")),
        other => config_error(if prefix.is_empty() { ".".into() } else { prefix.to_string() }, other.to_string()),
    })
}

/// Parses a JSON config document.
///
/// Two shapes are accepted: a bare experiment (`{"kind": .., "r": .., ..}`)
/// or a run document `{"experiments": spec-or-list, "output", "output_path",
/// "verbosity"}`. Unknown keys and type mismatches are reported with the
/// path of the offending value.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| config_error(".", format!("malformed document: {e}")))?;
    let Value::Object(mut map) = doc else {
        return Err(config_error(".", "config must be a JSON object"));
    };
    if !map.contains_key("experiments") {
        let spec = parse_spec(Value::Object(map), "")?;
        return Ok(RunConfig { experiments: vec![spec], output: OutputFormat::Csv, output_path: None, verbosity: 0 });
    }
    let experiments = match map.remove("experiments") {
        Some(Value::Array(items)) => items,
        Some(one @ Value::Object(_)) => vec![one],
        _ => return Err(config_error("experiments", "expected an experiment object or a list of them")),
    };
    map.insert("experiments".into(), Value::Array(Vec::new()));
    let mut config: RunConfig = serde_path_to_error::deserialize(Value::Object(map))
        .map_err(|e| config_error(e.path().to_string(), e.into_inner().to_string()))?;
    for (i, item) in experiments.into_iter().enumerate() {
        config.experiments.push(parse_spec(item, &format!("experiments[{i}]"))?);
    }
    if config.experiments.is_empty() {
        return Err(config_error("experiments", "at least one experiment is required"));
    }
    Ok(config)
}

/// Serializes a config as a run document that [`parse_config`] reads back.
pub fn emit_config(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

/// Command-line values that replace the matching config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub r: Option<usize>,
    pub t: Option<usize>,
    pub snr_db: Option<Vec<f64>>,
    pub bits: Option<Vec<u32>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub symbols_per_trial: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub verbosity: u8,
}

/// Builds the run for a subcommand. Flags take precedence over the config
/// file, which takes precedence over built-in defaults. Without a config
/// file, `--r` and `--t` are required.
pub fn resolve(kind: Option<ExperimentKind>, config: Option<RunConfig>, o: &Overrides) -> Result<RunConfig, CliError> {
    let mut config = match config {
        Some(c) => c,
        None => {
            let kind = kind.ok_or_else(|| CliError::Usage("`run` needs --config".into()))?;
            let (Some(r), Some(t)) = (o.r, o.t) else {
                return Err(CliError::Usage("--r and --t are required without --config".into()));
            };
            RunConfig {
                experiments: vec![ExperimentSpec::new(kind, r, t)],
                output: OutputFormat::Csv,
                output_path: None,
                verbosity: 0,
            }
        }
    };
    let many = config.experiments.len() > 1;
    for (i, spec) in config.experiments.iter_mut().enumerate() {
        if let Some(kind) = kind {
            if spec.kind != kind {
                return Err(config_error(
                    format!("experiments[{i}].kind"),
                    format!("config holds a {} experiment but the subcommand is {}", spec.kind.as_str(), kind.as_str()),
                ));
            }
        }
        if let Some(r) = o.r {
            spec.r = r;
        }
        if let Some(t) = o.t {
            spec.t = t;
        }
        if let Some(s) = &o.snr_db {
            spec.snr_db = s.clone();
        }
        if let Some(b) = &o.bits {
            spec.bit_budgets = b.clone();
        }
        if let Some(n) = o.trials {
            spec.trials = n;
        }
        if let Some(s) = o.seed {
            spec.seed = s;
        }
        if o.symbols_per_trial.is_some() {
            spec.symbols_per_trial = o.symbols_per_trial;
        }
        let prefix = if many { format!("experiments[{i}]") } else { String::new() };
        check_spec(spec, &prefix)?;
    }
    if let Some(p) = &o.out {
        config.output_path = Some(p.clone());
    }
    if let Some(f) = o.format {
        config.output = f;
    }
    config.verbosity = config.verbosity.max(o.verbosity);
    Ok(config)
}

impl RunConfig {
    /// Where the table of experiment `index` is written, if anywhere. With
    /// several experiments, `out.csv` becomes `out-1.csv`, `out-2.csv`, ...
    pub fn output_for(&self, index: usize) -> Option<PathBuf> {
        let path = self.output_path.as_ref()?;
        if self.experiments.len() == 1 {
            return Some(path.clone());
        }
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let name = match path.extension() {
            Some(ext) => format!("{stem}-{}.{}", index + 1, ext.to_string_lossy()),
            None => format!("{stem}-{}", index + 1),
        };
        Some(path.with_file_name(name))
    }
}

pub fn render(table: &ResultTable, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => {
            let mut s = table.to_json();
            if !s.ends_with('\n') {
                s.push('\n');
            }
            s
        }
    }
}

/// Writes `table` to `path`, or to stdout when `path` is `None`.
pub fn emit_results(table: &ResultTable, format: OutputFormat, path: Option<&Path>) -> Result<(), CliError> {
    let text = render(table, format);
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses `2,4,6` and inclusive ranges such as `0:16` or `0:16:2`.
pub fn parse_bits(text: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let nums: Vec<u32> = part
            .split(':')
            .map(|x| x.trim().parse::<u32>().map_err(|e| format!("bad bit count {x:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match nums[..] {
            [b] => out.push(b),
            [lo, hi] => out.extend(lo..=hi),
            [lo, hi, step] if step > 0 => out.extend((lo..=hi).step_by(step as usize)),
            _ => return Err(format!("bad bit range {part:?}")),
        }
    }
    Ok(out)
}

/// Parses a comma-separated list of SNRs in dB.
pub fn parse_snr(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|x| x.parse::<f64>().map_err(|e| format!("bad snr {x:?}: {e}")))
        .collect()
}
