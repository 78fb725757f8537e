//! Rayleigh channel draws and the phase-canonical SVD.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Relative threshold on `σ_r/σ_1` below which a channel is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Draws one circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// An `r × t` channel matrix (receiver antennas × transmitter antennas).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    entries: CMatrix,
}

impl ChannelSample {
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        check_dims(entries.nrows(), entries.ncols())?;
        Ok(ChannelSample { entries })
    }

    pub fn r(&self) -> usize {
        self.entries.nrows()
    }

    pub fn t(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }
}

fn check_dims(r: usize, t: usize) -> Result<()> {
    if r < 1 || t < r {
        return Err(Error::Dimension(format!("need 1 <= r <= t, got r={r}, t={t}")));
    }
    Ok(())
}

/// Draws an i.i.d. unit-variance Rayleigh channel.
pub fn sample_channel<R: Rng + ?Sized>(r: usize, t: usize, rng: &mut R) -> Result<ChannelSample> {
    check_dims(r, t)?;
    let entries = CMatrix::from_fn(r, t, |_, _| complex_gaussian(rng));
    Ok(ChannelSample { entries })
}

/// SVD factors `H = U·diag(σ)·V†` with the first row of `U` real and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `r × r` unitary post-coder.
    pub left: CMatrix,
    /// Singular values, non-increasing.
    pub sigma: Vec<f64>,
    /// `t × r` precoder with orthonormal columns.
    pub right: CMatrix,
}

impl SvdFactors {
    pub fn r(&self) -> usize {
        self.sigma.len()
    }

    /// Eigenvalues of `HH†`, i.e. squared singular values.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s * s).collect()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.left.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        us * self.right.adjoint()
    }
}

/// Draws the canonical post-coder of a square Rayleigh channel, which is Haar
/// distributed up to the first-row phase convention. Degenerate draws are
/// redrawn.
pub fn sample_postcoder<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Result<CMatrix> {
    loop {
        match svd_canonical(&sample_channel(r, r, rng)?) {
            Ok(f) => return Ok(f.left),
            Err(Error::DegenerateChannel { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Computes the SVD of `h` and fixes the per-column phase ambiguity so that the
/// first row of `U` is real and non-negative. The compensating phases are
/// pushed into `V`, so `U·Σ·V†` is unchanged.
pub fn svd_canonical(h: &ChannelSample) -> Result<SvdFactors> {
    let r = h.r();
    let svd = h.entries.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: &DVector<f64> = &svd.singular_values;

    let mut order: Vec<usize> = (0..r).collect();
    // Stable sort keeps the routine's order for ties.
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    let sigma: Vec<f64> = order.iter().map(|&i| sv[i]).collect();
    let s_max = sigma[0];
    let s_min = sigma[r - 1];
    if s_max <= 0.0 || s_min < RANK_TOLERANCE * s_max {
        let ratio = if s_max > 0.0 { s_min / s_max } else { 0.0 };
        return Err(Error::DegenerateChannel { ratio });
    }

    let mut left = CMatrix::zeros(r, r);
    let mut right = CMatrix::zeros(h.t(), r);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &u.column(src));
        let vcol = v_t.row(src).adjoint();
        right.set_column(dst, &vcol);
    }
    canonicalize_phases(&mut left, &mut right);
    Ok(SvdFactors { left, sigma, right })
}

/// Rotates column `i` of both factors by `e^{−j·arg U[0,i]}`.
fn canonicalize_phases(left: &mut CMatrix, right: &mut CMatrix) {
    for i in 0..left.ncols() {
        let head = left[(0, i)];
        let mag = head.norm();
        if mag == 0.0 {
            continue;
        }
        let rot = head.conj() / mag;
        left.column_mut(i).iter_mut().for_each(|z| *z *= rot);
        right.column_mut(i).iter_mut().for_each(|z| *z *= rot);
        left[(0, i)] = Complex64::new(mag, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_dist, identity, orthonormality_defect};
    use crate::streams::Streams;

    fn assert_invariants(h: &ChannelSample, f: &SvdFactors) {
        assert!(orthonormality_defect(&f.left) < 1e-10);
        assert!(orthonormality_defect(&f.right) < 1e-10);
        let norm = crate::linalg::fro_sq(h.matrix()).sqrt();
        assert!(fro_dist(&f.reconstruct(), h.matrix()) < 1e-8 * norm);
        for w in f.sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for i in 0..f.r() {
            assert_eq!(f.left[(0, i)].im, 0.0);
            assert!(f.left[(0, i)].re >= 0.0);
        }
    }

    #[test]
    fn rejects_wide_receiver() {
        let mut rng = Streams::new(0).trial(0);
        assert!(matches!(sample_channel(3, 2, &mut rng), Err(Error::Dimension(_))));
        assert!(matches!(sample_channel(0, 2, &mut rng), Err(Error::Dimension(_))));
    }

    #[test]
    fn identity_channel() {
        let h = ChannelSample::from_matrix(identity(2)).unwrap();
        let f = svd_canonical(&h).unwrap();
        assert_eq!(f.sigma.len(), 2);
        assert!((f.sigma[0] - 1.0).abs() < 1e-14 && (f.sigma[1] - 1.0).abs() < 1e-14);
        assert_invariants(&h, &f);
        // Degenerate σ makes U non-unique; U·V† must still be I.
        let uv = &f.left * f.right.adjoint();
        assert!(fro_dist(&uv, &identity(2)) < 1e-12);
    }

    #[test]
    fn singular_values_of_scaled_unitary() {
        let mut rng = Streams::new(11).trial(0);
        let w = svd_canonical(&sample_channel(2, 2, &mut rng).unwrap()).unwrap().left;
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        let h = ChannelSample::from_matrix(d * w).unwrap();
        let f = svd_canonical(&h).unwrap();
        assert!((f.sigma[0] - 2.0).abs() < 1e-12);
        assert!((f.sigma[1] - 1.0).abs() < 1e-12);
        assert_invariants(&h, &f);
    }

    #[test]
    fn random_channels_satisfy_invariants() {
        let s = Streams::new(5);
        for i in 0..200 {
            let mut rng = s.trial(i);
            let (r, t) = [(2, 4), (3, 3), (3, 6), (1, 1), (4, 5)][i as usize % 5];
            let h = sample_channel(r, t, &mut rng).unwrap();
            let f = svd_canonical(&h).unwrap();
            assert_invariants(&h, &f);
        }
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let s = Streams::new(9);
        for i in 0..50 {
            let h = sample_channel(3, 5, &mut s.trial(i)).unwrap();
            let f = svd_canonical(&h).unwrap();
            let again = svd_canonical(&ChannelSample::from_matrix(f.reconstruct()).unwrap()).unwrap();
            assert!(fro_dist(&f.left, &again.left) < 1e-10);
            for (a, b) in f.sigma.iter().zip(&again.sigma) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_channel_is_rejected() {
        let mut m = CMatrix::zeros(2, 3);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(2.0, 0.0);
        let h = ChannelSample::from_matrix(m).unwrap();
        assert!(matches!(svd_canonical(&h), Err(Error::DegenerateChannel { .. })));
    }

    #[test]
    fn unit_variance_entries() {
        let s = Streams::new(1);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|i| complex_gaussian(&mut s.trial(i)).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.01);
    }
}
