//! Small complex matrix helpers on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Squared Frobenius norm.
pub fn fro_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `‖a − b‖_F`.
pub fn fro_dist(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `‖M†M − I‖_F`, i.e. how far the columns of `m` are from orthonormal.
pub fn orthonormality_defect(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    fro_dist(&gram, &identity(m.ncols()))
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}
