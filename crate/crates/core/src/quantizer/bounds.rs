use statrs::function::beta::beta;

use crate::channel::sample_postcoder;
use crate::error::{Error, Result};
use crate::givens::{decompose_postcoder, reconstruct_unchecked};
use crate::linalg::{sinc, CMatrix};
use crate::stats::{mc_mean, Estimate};
use crate::streams::{Streams, TrialRng};

use super::codebook::{quantize_angles, BitAllocation, CodebookKind, CodebookSet, ScalarCodebook};

/// High-rate Lloyd distortion `β(2/3, (l+1)/3)³·l / (12·2^{2b+2})`.
pub fn theta_mse_highrate(l: u32, bits: u32) -> Result<f64> {
    if l < 1 {
        return Err(Error::Validation("theta class l must be >= 1".into()));
    }
    let b = beta(2.0 / 3.0, (l as f64 + 1.0) / 3.0);
    Ok(b.powi(3) * l as f64 / 12.0 * 2f64.powi(-2 * bits as i32 - 2))
}

/// Upper bound `r(r−1)(1 − sinc(2^{−b_φ})) + Σ_l 2(r−l)·ε²_l` on `E‖U − Û‖²_F`.
pub fn mse_bound_theorem1(r: usize, phase_bits: u32, theta_mses: &[f64]) -> Result<f64> {
    if r < 1 || theta_mses.len() != r - 1 {
        return Err(Error::Dimension(format!("r={r} needs {} theta distortions", r.saturating_sub(1))));
    }
    if theta_mses.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::Validation("theta distortions must be non-negative".into()));
    }
    let phase = (r * (r - 1)) as f64 * (1.0 - sinc(2f64.powi(-(phase_bits as i32))));
    let theta: f64 = theta_mses.iter().enumerate().map(|(j, e)| 2.0 * (r - 1 - j) as f64 * e).sum();
    Ok(phase + theta)
}

/// The bound with every `ε²_l` replaced by its high-rate approximation.
pub fn mse_approx_highrate(r: usize, alloc: &BitAllocation) -> Result<f64> {
    if alloc.theta_bits.len() != r.saturating_sub(1) {
        return Err(Error::Dimension(format!("allocation does not match r={r}")));
    }
    let eps = alloc
        .theta_bits
        .iter()
        .enumerate()
        .map(|(j, &b)| theta_mse_highrate(j as u32 + 1, b))
        .collect::<Result<Vec<_>>>()?;
    mse_bound_theorem1(r, alloc.phase_bits, &eps)
}

/// Exact `E‖U − Û‖²_F = 4 − 2·E[cos(θ − θ̂)]·(1 + sinc(2^{−b}))` for `r = 2`.
pub fn mse_exact_2x2(phase_book: &ScalarCodebook, theta_book: &ScalarCodebook) -> Result<f64> {
    if phase_book.kind != CodebookKind::UniformPhase
        || theta_book.kind != CodebookKind::LloydTheta
        || theta_book.theta_class != Some(1)
    {
        return Err(Error::Validation("need a uniform phase book and a class-1 rotation book".into()));
    }
    if phase_book.bits != theta_book.bits {
        return Err(Error::Validation(format!(
            "phase and rotation books must share a bit width ({} vs {})",
            phase_book.bits, theta_book.bits
        )));
    }
    let mse = 4.0 - 2.0 * theta_book.mean_cos_error() * (1.0 + phase_book.mean_cos_error());
    Ok(mse.clamp(0.0, 4.0))
}

/// Column-wise squared reconstruction errors `‖u_i − û_i‖²` for one post-coder.
///
/// With `B = Û†U − I` these are the diagonal entries of `B†B`.
pub fn postcoder_error_sq(books: &CodebookSet, u: &CMatrix) -> Result<Vec<f64>> {
    let angles = decompose_postcoder(u)?;
    let (_, q) = quantize_angles(books, &angles)?;
    let u_hat = reconstruct_unchecked(&q);
    Ok((0..u.ncols())
        .map(|i| u.column(i).iter().zip(u_hat.column(i).iter()).map(|(a, b)| (a - b).norm_sqr()).sum())
        .collect())
}

pub(crate) fn haar_error_sq(books: &CodebookSet, rng: &mut TrialRng) -> Vec<f64> {
    let u = sample_postcoder(books.r, rng).expect("square channel dimensions are valid");
    postcoder_error_sq(books, &u).expect("canonical SVD output decomposes")
}

/// Monte Carlo `E‖U − Û‖²_F` over canonical post-coders of Rayleigh channels.
pub fn empirical_postcoder_mse(books: &CodebookSet, trials: usize, streams: &Streams) -> Result<Estimate> {
    if trials < 1 {
        return Err(Error::Validation("trials must be >= 1".into()));
    }
    Ok(mc_mean(trials, streams, |rng| haar_error_sq(books, rng).iter().sum()))
}
