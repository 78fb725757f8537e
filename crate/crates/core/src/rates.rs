//! Achievable-rate bounds under quantized post-coder feedback, zero-forcing
//! precoding, and single-mode transmission.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_channel, svd_canonical};
use crate::error::{Error, Result};
use crate::givens::{decompose_unit_vector, unit_vector_unchecked};
use crate::quantizer::{quantize_unit_vector, CodebookSet};
use crate::stats::{column_estimates, mc_mean, run_trials, Estimate};
use crate::streams::{Streams, TrialRng};

/// Draws used to estimate `E[Tr Σ⁻²]` before the zero-forcing rate pass.
pub const ZF_MOMENT_TRIALS: usize = 100_000;

/// Monte Carlo moments of `Q = B†B`, `B = Û†U − I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub r: usize,
    pub q_diag: Vec<f64>,
    pub q_trace: f64,
    pub std_errors: Vec<f64>,
    pub trace_std_error: f64,
    /// Covariance of the `q_diag` estimate (sample covariance over `n`).
    pub q_cov: Vec<Vec<f64>>,
}

impl ErrorStats {
    /// Moments from per-trial rows of `diag(Q)`.
    pub fn from_rows(r: usize, rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let cols = column_estimates(rows);
        let traces: Vec<f64> = rows.iter().map(|row| row.iter().sum()).collect();
        let tr = Estimate::from_samples(&traces);
        let mean: Vec<f64> = cols.iter().map(|e| e.mean).collect();
        let mut q_cov = vec![vec![0.0; r]; r];
        if rows.len() > 1 {
            for row in rows {
                for a in 0..r {
                    for b in 0..r {
                        q_cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);
                    }
                }
            }
            let scale = 1.0 / ((n - 1.0) * n);
            q_cov.iter_mut().flatten().for_each(|x| *x *= scale);
        }
        ErrorStats {
            r,
            q_trace: tr.mean,
            q_diag: mean,
            std_errors: cols.iter().map(|e| e.std_error).collect(),
            trace_std_error: tr.std_error,
            q_cov,
        }
    }

    /// Standard error of `Σ_i w_i·q_i` for fixed weights.
    pub fn linear_std_error(&self, weights: &[f64]) -> f64 {
        let mut v = 0.0;
        for (a, wa) in weights.iter().enumerate() {
            for (b, wb) in weights.iter().enumerate() {
                v += wa * wb * self.q_cov[a][b];
            }
        }
        v.max(0.0).sqrt()
    }

    /// Delta-method standard error of [`rate_bound_tight`] at these moments.
    pub fn tight_std_error(&self, j_diag: &[f64]) -> f64 {
        let w: Vec<f64> = j_diag
            .iter()
            .zip(&self.q_diag)
            .map(|(j, q)| j / ((1.0 + j * q) * std::f64::consts::LN_2))
            .collect();
        self.linear_std_error(&w)
    }

    /// Delta-method standard error of [`rate_bound_simple`] at these moments.
    pub fn simple_std_error(&self, p_rx: f64) -> f64 {
        let r = self.r as f64;
        let slope = p_rx / ((1.0 + p_rx / r * self.q_trace) * std::f64::consts::LN_2);
        slope * self.trace_std_error
    }
}

/// Estimates `E[Q_ii]` over canonical post-coders of Rayleigh channels.
pub fn estimate_error_stats(books: &CodebookSet, trials: usize, streams: &Streams) -> Result<ErrorStats> {
    if trials < 1 {
        return Err(Error::Validation("trials must be >= 1".into()));
    }
    let rows = run_trials(trials, streams, |rng| crate::quantizer::bounds_haar_error_sq(books, rng));
    Ok(ErrorStats::from_rows(books.r, &rows))
}

/// `C − r·log₂(1 + (P_rx/r)·ε²)`.
pub fn rate_bound_simple(c_full: f64, r: usize, p_rx: f64, eps2: f64) -> Result<f64> {
    if r < 1 || !(p_rx >= 0.0) || !(eps2 >= 0.0) {
        return Err(Error::Validation("need r >= 1 and non-negative p_rx, eps2".into()));
    }
    Ok(c_full - r as f64 * (p_rx / r as f64 * eps2).ln_1p() / std::f64::consts::LN_2)
}

/// `R_full − Σ_i log₂(1 + E[J_ii]·E[Q_ii])`.
pub fn rate_bound_tight(r_full: f64, j_diag: &[f64], q_diag: &[f64]) -> Result<f64> {
    if j_diag.len() != q_diag.len() {
        return Err(Error::Validation(format!(
            "weight and error lists differ in length ({} vs {})",
            j_diag.len(),
            q_diag.len()
        )));
    }
    let loss: f64 = j_diag.iter().zip(q_diag).map(|(j, q)| (j * q).ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
    Ok(r_full - loss)
}

/// A computed rate next to its reference capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub label: String,
    pub rate: f64,
    pub reference_capacity: f64,
    pub gap: f64,
}

impl RateReport {
    pub fn new(label: impl Into<String>, rate: f64, reference_capacity: f64) -> Self {
        RateReport { label: label.into(), rate, reference_capacity, gap: reference_capacity - rate }
    }
}

fn inverse_eigen_trace(r: usize, t: usize, rng: &mut TrialRng) -> f64 {
    loop {
        let h = sample_channel(r, t, rng).expect("dimensions checked by caller");
        if let Ok(f) = svd_canonical(&h) {
            return f.sigma.iter().map(|s| 1.0 / (s * s)).sum();
        }
    }
}

/// Zero-forcing rate `r·E[log₂((P_T + E[Tr Σ⁻²]) / Tr Σ⁻²)]`.
///
/// The inner moment comes from an independent first pass of
/// [`ZF_MOMENT_TRIALS`] draws. Square channels have no finite moment.
pub fn zf_rate(r: usize, t: usize, p_total: f64, trials: usize, streams: &Streams) -> Result<Estimate> {
    if r < 1 || t < r {
        return Err(Error::Dimension(format!("need 1 <= r <= t, got r={r}, t={t}")));
    }
    if t == r {
        return Err(Error::UnboundedMoment(format!(
            "E[Tr (HH†)^-1] diverges for r = t = {r}; use selective inversion"
        )));
    }
    if trials < 1 || !(p_total > 0.0) {
        return Err(Error::Validation("need trials >= 1 and positive power".into()));
    }
    let moment = mc_mean(ZF_MOMENT_TRIALS, &streams.derive_label("zf-moment"), |rng| {
        inverse_eigen_trace(r, t, rng)
    })
    .mean;
    Ok(mc_mean(trials, &streams.derive_label("zf-rate"), |rng| {
        let tr = inverse_eigen_trace(r, t, rng);
        r as f64 * ((p_total + moment) / tr).log2()
    }))
}

/// All power on the dominant mode every block.
///
/// With `vector_books` the receiver combines with the quantized dominant
/// left singular vector and the rate is `E[log₂(1 + P_T·σ₁²·|û₁†u₁|²)]`.
pub fn selective_inversion_rate(
    r: usize,
    t: usize,
    p_total: f64,
    vector_books: Option<&CodebookSet>,
    trials: usize,
    streams: &Streams,
) -> Result<Estimate> {
    if r < 1 || t < r {
        return Err(Error::Dimension(format!("need 1 <= r <= t, got r={r}, t={t}")));
    }
    if trials < 1 || !(p_total >= 0.0) {
        return Err(Error::Validation("need trials >= 1 and non-negative power".into()));
    }
    if let Some(b) = vector_books {
        if b.r != r {
            return Err(Error::Validation(format!("vector codebooks for r={}, channel has r={r}", b.r)));
        }
    }
    Ok(mc_mean(trials, streams, |rng| {
        let f = loop {
            if let Ok(f) = svd_canonical(&sample_channel(r, t, rng).expect("dimensions checked")) {
                break f;
            }
        };
        let gain = f.sigma[0] * f.sigma[0];
        let fidelity = match vector_books {
            None => 1.0,
            Some(books) => dominant_fidelity(books, &f.left.column(0).iter().copied().collect::<Vec<_>>()),
        };
        (p_total * gain * fidelity).ln_1p() / std::f64::consts::LN_2
    }))
}

/// `|û†u|²` after coding `u` with `books`.
pub fn dominant_fidelity(books: &CodebookSet, u: &[Complex64]) -> f64 {
    let angles = decompose_unit_vector(u).expect("canonical dominant vector");
    let q = quantize_unit_vector(books, &angles).expect("dimensions checked");
    let v = unit_vector_unchecked(q.r, &q.phases, &q.rotations);
    let ip: Complex64 = v.iter().zip(u).map(|(a, b)| a.conj() * b).sum();
    ip.norm_sqr()
}
