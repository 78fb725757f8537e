//! Seeded sweeps that regenerate each experiment as a [`ResultTable`].
//!
//! Every sweep point re-uses the same per-trial random streams (common random
//! numbers), so differences between budgets reflect the quantizer and not the
//! draw. Results are identical for any thread count.

mod ber;
mod codebooks;
mod sweeps;
mod table;

pub use ber::{run_ber, simulate_ber, BerEstimate, DEFAULT_SYMBOLS_PER_TRIAL, MIN_ERRORS};
pub use codebooks::run_train_codebook;
pub use sweeps::{run_capacity, run_mse_sweep, run_rate_ratio, run_rate_sweep, run_single_vs_full};
pub use table::{format_value, Column, ResultTable, SIG_DIGITS};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::streams::Streams;

pub const DEFAULT_TRIALS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Capacity,
    TrainCodebook,
    MseSweep,
    RateSweep,
    RateRatio,
    SingleVsFull,
    Ber,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::TrainCodebook => "train-codebook",
            ExperimentKind::MseSweep => "mse-sweep",
            ExperimentKind::RateSweep => "rate-sweep",
            ExperimentKind::RateRatio => "rate-ratio",
            ExperimentKind::SingleVsFull => "single-vs-full",
            ExperimentKind::Ber => "ber",
        }
    }
}

fn default_snr() -> Vec<f64> {
    vec![10.0]
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

/// One experiment: what to sweep and how many trials per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub r: usize,
    pub t: usize,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub bit_budgets: Vec<u32>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// QPSK symbols per channel draw (BER only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols_per_trial: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, r: usize, t: usize) -> Self {
        ExperimentSpec {
            kind,
            r,
            t,
            snr_db: default_snr(),
            bit_budgets: Vec::new(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            symbols_per_trial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 1 || self.t < self.r {
            return Err(Error::Dimension(format!("need 1 <= r <= t, got r={}, t={}", self.r, self.t)));
        }
        if self.trials < 1 {
            return Err(Error::Validation("trials must be >= 1".into()));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Validation("snr_db must be a non-empty list of finite values".into()));
        }
        if self.symbols_per_trial == Some(0) {
            return Err(Error::Validation("symbols_per_trial must be >= 1".into()));
        }
        if self.symbols_per_trial.is_some() && self.kind != ExperimentKind::Ber {
            return Err(Error::Validation("symbols_per_trial only applies to ber".into()));
        }
        Ok(())
    }

    /// Root of every random stream used by this experiment.
    pub fn streams(&self) -> Streams {
        Streams::new(self.seed).derive_label(self.kind.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

/// Runs the sweep named by `spec.kind`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    match spec.kind {
        ExperimentKind::Capacity => run_capacity(spec),
        ExperimentKind::TrainCodebook => run_train_codebook(spec),
        ExperimentKind::MseSweep => run_mse_sweep(spec),
        ExperimentKind::RateSweep => run_rate_sweep(spec),
        ExperimentKind::RateRatio => run_rate_ratio(spec),
        ExperimentKind::SingleVsFull => run_single_vs_full(spec),
        ExperimentKind::Ber => run_ber(spec),
    }
}

fn check_kind(spec: &ExperimentSpec, want: ExperimentKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != want {
        return Err(Error::Validation(format!("expected a {} spec, got {}", want.as_str(), spec.kind.as_str())));
    }
    Ok(())
}

/// Version plus a digest of the spec.
pub fn provenance(spec: &ExperimentSpec) -> String {
    let digest = Sha256::digest(spec.to_json().as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("pcfb-core {} spec-sha256:{hex}", env!("CARGO_PKG_VERSION"))
}

fn stamp(table: &mut ResultTable, spec: &ExperimentSpec) {
    table.push_meta("experiment", spec.kind.as_str());
    table.push_meta("provenance", provenance(spec));
    table.push_meta("spec", spec.to_json());
}

fn snr_label(db: f64) -> String {
    format!("{db}db").replace('-', "m")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_defaults_and_validation() {
        let s: ExperimentSpec =
            serde_json::from_str(r#"{"kind":"mse-sweep","r":2,"t":4,"bit_budgets":[2,4,6]}"#).unwrap();
        assert_eq!(s.trials, DEFAULT_TRIALS);
        assert_eq!(s.seed, 0);
        assert_eq!(s.snr_db, vec![10.0]);
        s.validate().unwrap();
        let bad = ExperimentSpec { r: 3, t: 2, ..s.clone() };
        assert!(matches!(bad.validate(), Err(Error::Dimension(_))));
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"kind":"ber","r":2,"t":4,"bogus":1}"#).is_err());
        let back: ExperimentSpec = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn labels() {
        assert_eq!(snr_label(10.0), "10db");
        assert_eq!(snr_label(-5.0), "m5db");
        assert_eq!(snr_label(2.5), "2.5db");
    }
}
