use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_gaussian, sample_channel, svd_canonical};
use crate::error::{Error, Result};
use crate::givens::{decompose_postcoder, reconstruct_unchecked};
use crate::quantizer::{quantize_angles, CodebookSet};
use crate::spectral::{db_to_linear, waterfill_threshold, PowerPolicy};
use crate::stats::{run_trials, Estimate};
use crate::streams::Streams;

use super::sweeps::context;
use super::{check_kind, snr_label, stamp, ExperimentKind, ExperimentSpec, ResultTable};

pub const DEFAULT_SYMBOLS_PER_TRIAL: usize = 64;
/// Observed bit errors below which a BER point is flagged under-sampled.
pub const MIN_ERRORS: u64 = 100;

/// Bit error rate of QPSK on the dominant mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    /// Per-trial error fractions averaged over transmitting blocks.
    pub ber: Estimate,
    pub errors: u64,
    pub bits: u64,
    /// Blocks whose dominant mode sits below the water level.
    pub skipped: usize,
}

impl BerEstimate {
    pub fn under_sampled(&self) -> bool {
        self.errors < MIN_ERRORS
    }
}

/// Gray-mapped QPSK: bit 0 on the real axis, bit 1 on the imaginary axis.
fn qpsk(b0: bool, b1: bool) -> Complex64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(if b0 { -a } else { a }, if b1 { -a } else { a })
}

/// Simulates QPSK over the dominant eigenmode with post-coder `Û` (or `U`
/// when `books` is `None`).
///
/// Each block draws a channel; the transmitter sends `V e₁·√P₁·s` with
/// `P₁ = (1/λ − 1/σ₁²)⁺`, the receiver forms `y = Û†(Hx + η)` and slices
/// `y₁` without further equalization. Noise has per-antenna variance
/// `noise_var`.
pub fn simulate_ber(
    policy: &PowerPolicy,
    books: Option<&CodebookSet>,
    trials: usize,
    symbols_per_trial: usize,
    noise_var: f64,
    streams: &Streams,
) -> Result<BerEstimate> {
    let (r, t) = (policy.r, policy.t);
    if let Some(b) = books {
        if b.r != r {
            return Err(Error::Validation(format!("codebooks for r={}, channel has r={r}", b.r)));
        }
    }
    if trials < 1 || symbols_per_trial < 1 || !(noise_var >= 0.0) {
        return Err(Error::Validation("need trials, symbols >= 1 and noise variance >= 0".into()));
    }
    let noise_std = noise_var.sqrt();
    let outcomes = run_trials(trials, streams, |rng| {
        let f = loop {
            if let Ok(f) = svd_canonical(&sample_channel(r, t, rng).expect("valid dimensions")) {
                break f;
            }
        };
        let p1 = policy.mode_power(f.sigma[0] * f.sigma[0]);
        let u1: Vec<Complex64> = f.left.column(0).iter().copied().collect();
        let u1_hat: Vec<Complex64> = match books {
            None => u1.clone(),
            Some(b) => {
                let angles = decompose_postcoder(&f.left).expect("canonical post-coder");
                let (_, q) = quantize_angles(b, &angles).expect("dimensions checked");
                reconstruct_unchecked(&q).column(0).iter().copied().collect()
            }
        };
        // The residual coupling û₁†u₁ stays in the slicer input as distortion.
        let coupling: Complex64 = u1_hat.iter().zip(&u1).map(|(a, b)| a.conj() * b).sum();
        let gain = coupling * (f.sigma[0] * p1.sqrt());
        let mut errors = 0u64;
        for _ in 0..symbols_per_trial {
            let (b0, b1): (bool, bool) = (rng.random(), rng.random());
            // û₁†η for a unit-norm û₁ is one CN(0, noise_var) sample.
            let n: Complex64 = u1_hat.iter().map(|a| a.conj() * complex_gaussian(rng)).sum::<Complex64>() * noise_std;
            let y = gain * qpsk(b0, b1) + n;
            errors += ((y.re < 0.0) != b0) as u64 + ((y.im < 0.0) != b1) as u64;
        }
        if p1 > 0.0 {
            Some(errors)
        } else {
            None
        }
    });
    let bits_per_trial = 2 * symbols_per_trial as u64;
    let rates: Vec<f64> = outcomes.iter().flatten().map(|&e| e as f64 / bits_per_trial as f64).collect();
    let errors: u64 = outcomes.iter().flatten().sum();
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    Ok(BerEstimate {
        ber: if rates.is_empty() { Estimate::exact(0.0) } else { Estimate::from_samples(&rates) },
        errors,
        bits: rates.len() as u64 * bits_per_trial,
        skipped,
    })
}

/// BER with quantized and perfect post-coders, one row per budget.
pub fn run_ber(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, ExperimentKind::Ber)?;
    let symbols = spec.symbols_per_trial.unwrap_or(DEFAULT_SYMBOLS_PER_TRIAL);
    let ctx = context(spec)?;
    let streams = spec.streams().derive_label("link");
    let mut table = ResultTable::new("budget", spec.bit_budgets.iter().map(|&b| b as f64).collect());
    let mut flagged = Vec::new();
    for &snr in &spec.snr_db {
        let policy = waterfill_threshold(spec.r, spec.t, db_to_linear(snr))?;
        let s = format!("_{}", snr_label(snr));
        let perfect = simulate_ber(&policy, None, spec.trials, symbols, 1.0, &streams)?;
        if perfect.under_sampled() {
            flagged.push(format!("perfect{s}"));
        }
        let j = vec![policy.p_rx; spec.r];
        let mut rows = Vec::new();
        for &b in &spec.bit_budgets {
            let (alloc, _) = ctx.best_full(b, &j)?;
            let books = ctx.cache().books(spec.r, &alloc)?;
            let est = simulate_ber(&policy, Some(&books), spec.trials, symbols, 1.0, &streams)?;
            if est.under_sampled() {
                flagged.push(format!("ber{s}@{b}"));
            }
            rows.push(est);
        }
        let n = rows.len();
        table.add_metric(format!("ber{s}"), &rows.iter().map(|e| e.ber).collect::<Vec<_>>());
        table.add_column(format!("errors{s}"), rows.iter().map(|e| e.errors as f64).collect());
        table.add_metric(format!("perfect{s}"), &vec![perfect.ber; n]);
        table.add_column(format!("perfect_errors{s}"), vec![perfect.errors as f64; n]);
        table.add_column(format!("skipped{s}"), rows.iter().map(|e| e.skipped as f64).collect());
    }
    stamp(&mut table, spec);
    table.push_meta(
        "normalization",
        "QPSK (+-1+-j)/sqrt2 scaled by sqrt(P1), P1 = (1/lambda - 1/sigma1^2)+ with the ergodic water level; unit noise variance per receive antenna",
    );
    table.push_meta("symbols_per_trial", symbols.to_string());
    table.push_meta("under_sampled", if flagged.is_empty() { "none".to_string() } else { flagged.join(" ") });
    Ok(table)
}
