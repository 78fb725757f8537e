//! Givens-rotation parameterization of phase-canonical unitary post-coders.
//!
//! A canonical `r × r` unitary (first row real, non-negative) is written as a
//! product of `r − 1` stages, one per column:
//!
//! ```text
//! U = Π_{k=1}^{r−1} [ D_k · Π_{l=1}^{r−k} G_{r−l, r−l+1}(θ_{k,l})ᵀ ]
//! ```
//!
//! `D_k` puts phases `φ_{k,1} … φ_{k,r−k}` on entries `k+1 … r` and
//! `G_{p−1,p}(θ)` is the plane rotation `[[cos θ, −sin θ], [sin θ, cos θ]]` on
//! coordinates `(p−1, p)`. The trailing diagonal phase factor of a general
//! unitary is absent: canonicalization has pushed it into the precoder.
//!
//! Stage `k` fixes column `k`. Its rotation `θ_{k,l}` acts on the pair
//! `(r−l, r−l+1)`, so for Haar-distributed inputs it has density
//! `2l·sin^{2l−1}θ·cos θ`, independent of `k`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{identity, orthonormality_defect, wrap_phase, CMatrix};

const CANONICAL_TOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-8;

/// Independent angles of an effective post-coder.
///
/// Stage `k` (0-based index `k − 1`) holds `r − k` phases and `r − k`
/// rotations. `rotations[k−1][l−1]` is `θ_{k,l}` and belongs to class `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PostcoderAngles {
    pub r: usize,
    pub phases: Vec<Vec<f64>>,
    pub rotations: Vec<Vec<f64>>,
}

impl PostcoderAngles {
    pub fn zeros(r: usize) -> Self {
        let stages = r.saturating_sub(1);
        PostcoderAngles {
            r,
            phases: (0..stages).map(|k| vec![0.0; r - 1 - k]).collect(),
            rotations: (0..stages).map(|k| vec![0.0; r - 1 - k]).collect(),
        }
    }

    /// `r(r−1)`.
    pub fn parameter_count(&self) -> usize {
        self.phases.iter().map(Vec::len).sum::<usize>() + self.rotations.iter().map(Vec::len).sum::<usize>()
    }

    /// Rotation angles of class `l` (1-based), across all stages.
    pub fn rotations_of_class(&self, l: usize) -> impl Iterator<Item = f64> + '_ {
        self.rotations.iter().filter_map(move |stage| stage.get(l - 1).copied())
    }

    pub fn all_phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.phases.iter().flatten().copied()
    }

    fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::Dimension("post-coder dimension must be >= 1".into()));
        }
        let stages = self.r - 1;
        let shape_ok = self.phases.len() == stages
            && self.rotations.len() == stages
            && (0..stages).all(|k| self.phases[k].len() == self.r - 1 - k && self.rotations[k].len() == self.r - 1 - k);
        if !shape_ok {
            return Err(Error::Dimension(format!("angle layout does not match r={}", self.r)));
        }
        check_ranges(self.all_phases(), self.rotations.iter().flatten().copied())
    }
}

fn check_ranges(phases: impl Iterator<Item = f64>, rotations: impl Iterator<Item = f64>) -> Result<()> {
    for phi in phases {
        if !(-PI..=PI).contains(&phi) {
            return Err(Error::Validation(format!("phase {phi} outside (-pi, pi]")));
        }
    }
    for theta in rotations {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::Validation(format!("rotation {theta} outside [0, pi/2]")));
        }
    }
    Ok(())
}

/// Angles of a single canonical unit vector (the first stage only).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVectorAngles {
    pub r: usize,
    pub phases: Vec<f64>,
    /// `rotations[l−1]` has class `l`.
    pub rotations: Vec<f64>,
}

impl UnitVectorAngles {
    pub fn parameter_count(&self) -> usize {
        self.phases.len() + self.rotations.len()
    }
}

/// `n × n` identity with the rotation `[[cos θ, −sin θ], [sin θ, cos θ]]` on
/// rows/columns `(p−1, p)` (1-based pivot).
pub fn givens_matrix(p: usize, theta: f64, n: usize) -> Result<CMatrix> {
    if p < 2 || p > n {
        return Err(Error::Index(format!("pivot {p} outside 2..={n}")));
    }
    let (s, c) = theta.sin_cos();
    let mut g = identity(n);
    let (a, b) = (p - 2, p - 1);
    g[(a, a)] = c.into();
    g[(a, b)] = (-s).into();
    g[(b, a)] = s.into();
    g[(b, b)] = c.into();
    Ok(g)
}

/// `m ← m · G_{a,b}(θ)ᵀ` as a column operation (0-based `a < b`).
fn rotate_columns(m: &mut CMatrix, a: usize, b: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    for i in 0..m.nrows() {
        let x = m[(i, a)];
        let y = m[(i, b)];
        m[(i, a)] = x * c - y * s;
        m[(i, b)] = x * s + y * c;
    }
}

/// `m ← m · D` where `D` carries `phases` on entries `first..`.
fn phase_columns(m: &mut CMatrix, first: usize, phases: &[f64]) {
    for (offset, &phi) in phases.iter().enumerate() {
        let rot = Complex64::from_polar(1.0, phi);
        m.column_mut(first + offset).iter_mut().for_each(|z| *z *= rot);
    }
}

/// Stage `k` (0-based) factor `D_k · Π_l G_{r−l,r−l+1}(θ_{k,l})ᵀ` applied on the right of `m`.
fn apply_stage(m: &mut CMatrix, k: usize, phases: &[f64], rotations: &[f64]) {
    let r = m.ncols();
    phase_columns(m, k + 1, phases);
    for (j, &theta) in rotations.iter().enumerate() {
        // class l = j + 1 acts on 1-based pair (r−l, r−l+1)
        let l = j + 1;
        rotate_columns(m, r - l - 1, r - l, theta);
    }
}

/// Extracts stage angles from a column whose entries above `k` vanish and
/// whose entry `k` is real and non-negative.
///
/// With the `Gᵀ` convention the unphased column reads
/// `[c, −s·c', s·s'·c'', …]`, i.e. entry `k+m` carries the sign `(−1)^m`;
/// that sign is folded out before the phase is recorded.
fn extract_stage(col: &[Complex64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let r = col.len();
    let tail = r - 1 - k;
    let mut phases = Vec::with_capacity(tail);
    let mut mags = Vec::with_capacity(tail + 1);
    mags.push(col[k].norm());
    for m in 1..=tail {
        let z = col[k + m];
        let signed = if m % 2 == 1 { -z } else { z };
        phases.push(if z.norm() == 0.0 { 0.0 } else { wrap_phase(signed.arg()) });
        mags.push(z.norm());
    }
    // Bottom-up annihilation: θ_{k,l} zeroes the pair (r−l, r−l+1).
    let mut rotations = Vec::with_capacity(tail);
    let mut below = mags[tail];
    for l in 1..=tail {
        let pivot = mags[tail - l];
        let theta = below.atan2(pivot);
        rotations.push(theta);
        below = pivot.hypot(below);
    }
    (phases, rotations)
}

fn check_canonical_row(u: &CMatrix) -> Result<()> {
    for i in 0..u.ncols() {
        let z = u[(0, i)];
        if z.im.abs() > CANONICAL_TOL || z.re < -CANONICAL_TOL {
            return Err(Error::Validation(format!("first row entry {i} = {z} is not real non-negative")));
        }
    }
    Ok(())
}

/// Splits the angles out of a canonical unitary post-coder.
pub fn decompose_postcoder(u: &CMatrix) -> Result<PostcoderAngles> {
    let r = u.nrows();
    if r == 0 || u.ncols() != r {
        return Err(Error::Dimension(format!("post-coder must be square, got {:?}", u.shape())));
    }
    if orthonormality_defect(u) > UNITARY_TOL {
        return Err(Error::Validation("post-coder is not unitary".into()));
    }
    check_canonical_row(u)?;

    let mut residual = u.clone();
    let mut out = PostcoderAngles { r, phases: Vec::with_capacity(r - 1), rotations: Vec::with_capacity(r - 1) };
    for k in 0..r.saturating_sub(1) {
        let col: Vec<Complex64> = residual.column(k).iter().copied().collect();
        let (phases, rotations) = extract_stage(&col, k);
        let mut stage = identity(r);
        apply_stage(&mut stage, k, &phases, &rotations);
        residual = stage.adjoint() * residual;
        out.phases.push(phases);
        out.rotations.push(rotations);
    }
    Ok(out)
}

/// Rebuilds the post-coder from its angles.
pub fn reconstruct_postcoder(angles: &PostcoderAngles) -> Result<CMatrix> {
    angles.validate()?;
    Ok(reconstruct_unchecked(angles))
}

pub(crate) fn reconstruct_unchecked(angles: &PostcoderAngles) -> CMatrix {
    let mut u = identity(angles.r);
    for (k, (phases, rotations)) in angles.phases.iter().zip(&angles.rotations).enumerate() {
        apply_stage(&mut u, k, phases, rotations);
    }
    u
}

/// Splits a unit vector with a real non-negative first entry into `2(r−1)` angles.
pub fn decompose_unit_vector(u: &[Complex64]) -> Result<UnitVectorAngles> {
    let r = u.len();
    if r == 0 {
        return Err(Error::Dimension("empty vector".into()));
    }
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNITARY_TOL {
        return Err(Error::Validation(format!("vector norm {norm} is not 1")));
    }
    if u[0].im.abs() > CANONICAL_TOL || u[0].re < -CANONICAL_TOL {
        return Err(Error::Validation("first entry is not real non-negative".into()));
    }
    let (phases, rotations) = extract_stage(u, 0);
    Ok(UnitVectorAngles { r, phases, rotations })
}

/// First column of the stage-1 factor built from `angles`.
pub fn reconstruct_unit_vector(angles: &UnitVectorAngles) -> Result<Vec<Complex64>> {
    let r = angles.r;
    if r == 0 || angles.phases.len() != r - 1 || angles.rotations.len() != r - 1 {
        return Err(Error::Dimension(format!("angle layout does not match r={r}")));
    }
    check_ranges(angles.phases.iter().copied(), angles.rotations.iter().copied())?;
    Ok(unit_vector_unchecked(r, &angles.phases, &angles.rotations))
}

pub(crate) fn unit_vector_unchecked(r: usize, phases: &[f64], rotations: &[f64]) -> Vec<Complex64> {
    // Row-vector form of stage 1 acting on e_1: apply the rotations in reverse
    // product order to the column vector.
    let mut v = vec![Complex64::new(0.0, 0.0); r];
    v[0] = Complex64::new(1.0, 0.0);
    for (j, &theta) in rotations.iter().enumerate().rev() {
        let l = j + 1;
        let (a, b) = (r - l - 1, r - l);
        let (s, c) = theta.sin_cos();
        let (x, y) = (v[a], v[b]);
        v[a] = x * c + y * s;
        v[b] = -x * s + y * c;
    }
    for (m, &phi) in phases.iter().enumerate() {
        v[m + 1] *= Complex64::from_polar(1.0, phi);
    }
    v
}

/// Splits a general unitary into its canonical (effective) form and the
/// trailing diagonal phase factor: `U = U_eff · D`.
pub fn split_trailing_phases(u: &CMatrix) -> (CMatrix, Vec<Complex64>) {
    let mut eff = u.clone();
    let mut diag = Vec::with_capacity(u.ncols());
    for i in 0..u.ncols() {
        let z = u[(0, i)];
        let d = if z.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { z / z.norm() };
        eff.column_mut(i).iter_mut().for_each(|w| *w *= d.conj());
        eff[(0, i)] = Complex64::new(z.norm(), 0.0);
        diag.push(d);
    }
    (eff, diag)
}
