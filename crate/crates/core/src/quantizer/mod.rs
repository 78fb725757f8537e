//! Scalar quantization of post-coder angles.
//!
//! Phases are uniform on `(−π, π]` and get uniform codebooks; rotation angles
//! of class `l` follow `p_l(θ) = 2l·sin^{2l−1}θ·cos θ` on `[0, π/2]` and get
//! Lloyd-trained codebooks.

mod allocation;
mod bounds;
mod codebook;
mod format;
mod lloyd;

pub use allocation::{allocate_bits, allocate_vector_bits, AllocationContext, MAX_PARAM_BITS};
pub(crate) use bounds::haar_error_sq as bounds_haar_error_sq;
pub use bounds::{
    empirical_postcoder_mse, mse_approx_highrate, mse_bound_theorem1, mse_exact_2x2, postcoder_error_sq,
    theta_mse_highrate,
};
pub use codebook::{
    quantize_angles, quantize_unit_vector, uniform_phase_codebook, AngleIndices, BitAllocation, CodebookCache,
    CodebookKind, CodebookSet, ScalarCodebook,
};
pub use format::{parse_codebook, parse_codebook_set, write_codebook, write_codebook_set};
pub use lloyd::{lloyd_run, train_lloyd_theta, LloydRun, LLOYD_MAX_ITERS, LLOYD_TOL};

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Density of a class-`l` rotation angle. Zero outside `[0, π/2)`.
pub fn theta_pdf(l: u32, theta: f64) -> Result<f64> {
    if l < 1 {
        return Err(Error::Validation("theta class l must be >= 1".into()));
    }
    Ok(theta_pdf_unchecked(l, theta))
}

pub(crate) fn theta_pdf_unchecked(l: u32, theta: f64) -> f64 {
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return 0.0;
    }
    let (s, c) = theta.sin_cos();
    2.0 * l as f64 * s.powi(2 * l as i32 - 1) * c
}

/// `P(Θ ≤ θ) = sin^{2l}θ` on `[0, π/2]`.
#[cfg(test)]
pub(crate) fn theta_cdf(l: u32, theta: f64) -> f64 {
    if theta <= 0.0 {
        0.0
    } else if theta >= FRAC_PI_2 {
        1.0
    } else {
        theta.sin().powi(2 * l as i32)
    }
}

/// Inverse CDF, `arcsin(u^{1/(2l)})`.
pub(crate) fn theta_quantile(l: u32, u: f64) -> f64 {
    u.clamp(0.0, 1.0).powf(1.0 / (2.0 * l as f64)).asin()
}
