use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

use super::codebook::{CodebookKind, ScalarCodebook};
use super::{theta_pdf_unchecked, theta_quantile};

/// Relative change in distortion below which training stops.
pub const LLOYD_TOL: f64 = 1e-10;
pub const LLOYD_MAX_ITERS: usize = 500;
const MAX_TRAIN_BITS: u32 = 16;

/// A finished training run with its distortion history.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub codebook: ScalarCodebook,
    /// Distortion of each iterate, starting from the quantile initialisation.
    pub history: Vec<f64>,
}

/// Trains a `2^bits`-level codebook for class-`l` rotation angles.
///
/// Starts from the quantiles `arcsin(((i+½)/n)^{1/(2l)})` and alternates
/// midpoint edges with conditional centroids. Each iteration first tries a
/// Newton step towards the centroid fixed point and keeps it only when the
/// distortion drops, so the distortion history never increases. If
/// `max_iters` runs out the last (lowest) iterate is returned with
/// `converged = false`.
pub fn train_lloyd_theta(l: u32, bits: u32, tol: f64, max_iters: usize) -> Result<ScalarCodebook> {
    lloyd_run(l, bits, tol, max_iters).map(|run| run.codebook)
}

pub fn lloyd_run(l: u32, bits: u32, tol: f64, max_iters: usize) -> Result<LloydRun> {
    if l < 1 {
        return Err(Error::Validation("theta class l must be >= 1".into()));
    }
    if bits > MAX_TRAIN_BITS {
        return Err(Error::Validation(format!("at most {MAX_TRAIN_BITS} bits per rotation codebook")));
    }
    if max_iters == 0 || !(tol > 0.0) {
        return Err(Error::Validation("need max_iters >= 1 and tol > 0".into()));
    }
    let n = 1usize << bits;
    let mut levels: Vec<f64> = (0..n).map(|i| theta_quantile(l, (i as f64 + 0.5) / n as f64)).collect();
    let mut state = sweep(l, &levels);
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..max_iters {
        if let Some(&prev) = history.last() {
            if prev - state.distortion <= tol * state.distortion {
                converged = true;
            }
        }
        history.push(state.distortion);
        if converged {
            break;
        }
        // A damped Newton step on `centroid(y) = y`, kept only if it lowers
        // the distortion; otherwise a plain Lloyd update.
        let mut accepted = None;
        if let Some(step) = newton_step(l, &levels, &state) {
            let mut scale = 1.0;
            for _ in 0..4 {
                let trial: Vec<f64> = levels.iter().zip(&step).map(|(y, d)| y + scale * d).collect();
                if is_valid(&trial) {
                    let next = sweep(l, &trial);
                    if next.distortion <= state.distortion {
                        accepted = Some((trial, next));
                        break;
                    }
                }
                scale *= 0.5;
            }
        }
        let (next_levels, next_state) = accepted.unwrap_or_else(|| {
            let c = state.centroids.clone();
            let s = sweep(l, &c);
            (c, s)
        });
        levels = next_levels;
        state = next_state;
    }
    let mse = state.distortion;
    let boundaries = midpoint_edges(&levels);
    Ok(LloydRun {
        codebook: ScalarCodebook {
            kind: CodebookKind::LloydTheta,
            bits,
            levels,
            boundaries,
            theta_class: Some(l),
            trained_mse: Some(mse),
            converged,
        },
        history,
    })
}

pub(crate) fn midpoint_edges(levels: &[f64]) -> Vec<f64> {
    let mut edges = Vec::with_capacity(levels.len() + 1);
    edges.push(0.0);
    edges.extend(levels.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(FRAC_PI_2);
    edges
}

struct Sweep {
    distortion: f64,
    centroids: Vec<f64>,
    masses: Vec<f64>,
}

/// Distortion of `levels` with midpoint cells, plus each cell's centroid and mass.
fn sweep(l: u32, levels: &[f64]) -> Sweep {
    let edges = midpoint_edges(levels);
    let tol = 1e-14 / levels.len() as f64;
    let p = |t: f64| theta_pdf_unchecked(l, t);
    let mut distortion = 0.0;
    let mut centroids = Vec::with_capacity(levels.len());
    let mut masses = Vec::with_capacity(levels.len());
    for (i, &y) in levels.iter().enumerate() {
        let (a, b) = (edges[i], edges[i + 1]);
        let m0 = integrate(p, a, b, tol);
        let m1 = integrate(|t| t * p(t), a, b, tol);
        distortion += integrate(|t| (t - y) * (t - y) * p(t), a, b, tol);
        centroids.push(if m0 > 0.0 { (m1 / m0).clamp(a, b) } else { 0.5 * (a + b) });
        masses.push(m0);
    }
    Sweep { distortion, centroids, masses }
}

fn is_valid(levels: &[f64]) -> bool {
    levels.iter().all(|y| y.is_finite())
        && levels[0] > 0.0
        && levels[levels.len() - 1] < FRAC_PI_2
        && levels.windows(2).all(|w| w[0] < w[1])
}

/// Solves `(J − I)·δ = y − c` where `J` is the tridiagonal Jacobian of the
/// centroid map. Moving edge `a` of a cell shifts its centroid by
/// `p(a)(c − a)/m` per unit, edge `b` by `p(b)(b − c)/m`.
fn newton_step(l: u32, levels: &[f64], state: &Sweep) -> Option<Vec<f64>> {
    let n = levels.len();
    if n < 2 {
        return Some(vec![state.centroids[0] - levels[0]]);
    }
    let edges = midpoint_edges(levels);
    let mut sub = vec![0.0; n];
    let mut diag = vec![-1.0; n];
    let mut sup = vec![0.0; n];
    for i in 0..n {
        let m = state.masses[i];
        if !(m > 0.0) {
            return None;
        }
        let c = state.centroids[i];
        if i > 0 {
            let a = edges[i];
            let da = 0.5 * theta_pdf_unchecked(l, a) * (c - a) / m;
            sub[i] = da;
            diag[i] += da;
        }
        if i + 1 < n {
            let b = edges[i + 1];
            let db = 0.5 * theta_pdf_unchecked(l, b) * (b - c) / m;
            sup[i] = db;
            diag[i] += db;
        }
    }
    let rhs: Vec<f64> = levels.iter().zip(&state.centroids).map(|(y, c)| y - c).collect();
    thomas(&sub, &diag, &sup, &rhs)
}

/// Tridiagonal solve; `sub[0]` and `sup[n−1]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return None;
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Conditional centroid of every cell of `book`.
#[cfg(test)]
pub(crate) fn cell_centroids(book: &ScalarCodebook) -> Vec<f64> {
    let l = book.theta_class.unwrap_or(1);
    sweep(l, &book.levels).centroids
}
