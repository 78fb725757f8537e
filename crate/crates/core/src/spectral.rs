//! Unordered-eigenvalue law of `HH†` and ergodic water-filling.
//!
//! All integrals are over the eigenvalue `e = σ²` of `HH†` for an `r × t`
//! Rayleigh channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

const QUAD_TOL: f64 = 1e-12;
const BISECTION_ITERS: usize = 200;
const LAMBDA_FLOOR: f64 = 1e-12;

/// Associated Laguerre polynomial `L_k^a(x)` by the three-term recurrence.
pub fn laguerre_poly(k: u32, a: u32, x: f64) -> f64 {
    let a = a as f64;
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for j in 1..k {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + a - x) * cur - (j + a) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn check_dims(r: usize, t: usize) -> Result<()> {
    if r < 1 || t < r {
        return Err(Error::Validation(format!("need 1 <= r <= t, got r={r}, t={t}")));
    }
    Ok(())
}

/// Density of one unordered eigenvalue of `HH†`.
pub fn eigen_density(r: usize, t: usize, e: f64) -> Result<f64> {
    check_dims(r, t)?;
    Ok(density_unchecked(r, t, e))
}

fn density_unchecked(r: usize, t: usize, e: f64) -> f64 {
    if e < 0.0 {
        return 0.0;
    }
    let a = (t - r) as u32;
    let weight = if a == 0 { (-e).exp() } else { (a as f64 * e.ln() - e).exp() };
    let mut sum = 0.0;
    // k!/(k+a)!
    let mut ratio = (1..=a).map(|j| 1.0 / j as f64).product::<f64>();
    for k in 0..r as u32 {
        if k > 0 {
            ratio *= k as f64 / (k + a) as f64;
        }
        let l = laguerre_poly(k, a, e);
        sum += ratio * l * l;
    }
    sum * weight / r as f64
}

/// Upper integration limit; the density beyond it is negligible.
pub fn eigen_cutoff(t: usize) -> f64 {
    t as f64 + 10.0 * (t as f64).sqrt() + 50.0
}

/// `∫_lo^{E_max} f(e)·g(e) de`, split into unit-width panels.
fn integrate_weighted<F: Fn(f64) -> f64>(r: usize, t: usize, lo: f64, f: F) -> f64 {
    let hi = eigen_cutoff(t);
    if lo >= hi {
        return 0.0;
    }
    let mut pts = vec![lo];
    let mut x = lo.floor() + 1.0;
    while x < hi {
        pts.push(x);
        x += 1.0;
    }
    pts.push(hi);
    let per = QUAD_TOL / (pts.len() - 1) as f64;
    pts.windows(2)
        .map(|w| integrate(|e| f(e) * density_unchecked(r, t, e), w[0], w[1], per))
        .sum()
}

/// `∫ f(e)·g(e) de` over the whole support.
pub fn eigen_expectation<F: Fn(f64) -> f64>(r: usize, t: usize, f: F) -> Result<f64> {
    check_dims(r, t)?;
    Ok(integrate_weighted(r, t, 0.0, f))
}

/// Ergodic water-filling solution for an `r × t` channel at power `P_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    pub r: usize,
    pub t: usize,
    pub p_total: f64,
    /// Water level `λ`; modes with eigenvalue at or below it get no power.
    pub threshold: f64,
    /// Mean received power per mode, `∫_λ (e/λ − 1)·g de`.
    pub p_rx: f64,
}

impl PowerPolicy {
    /// `(1/λ − 1/e)⁺`.
    pub fn mode_power(&self, e: f64) -> f64 {
        if e <= self.threshold {
            0.0
        } else {
            1.0 / self.threshold - 1.0 / e
        }
    }

    /// Per-block water-filled rate `Σ_i log₂(1 + P(e_i)·e_i)` for one channel draw.
    pub fn block_rate(&self, eigenvalues: &[f64]) -> f64 {
        eigenvalues
            .iter()
            .filter(|&&e| e > self.threshold)
            .map(|&e| (e / self.threshold).log2())
            .sum()
    }

    /// Mean total power `r·∫(1/λ − 1/e)⁺ g de` implied by the threshold.
    pub fn constraint_value(&self) -> f64 {
        power_at(self.r, self.t, self.threshold)
    }
}

fn power_at(r: usize, t: usize, lambda: f64) -> f64 {
    r as f64 * integrate_weighted(r, t, lambda, |e| 1.0 / lambda - 1.0 / e)
}

/// Solves `r·∫_λ (1/λ − 1/e)·g de = P_T` for `λ` by bisection in `log λ`.
pub fn waterfill_threshold(r: usize, t: usize, p_total: f64) -> Result<PowerPolicy> {
    check_dims(r, t)?;
    if !(p_total > 0.0) || !p_total.is_finite() {
        return Err(Error::Validation(format!("total power must be positive, got {p_total}")));
    }
    let (mut lo, mut hi) = (LAMBDA_FLOOR.ln(), eigen_cutoff(t).ln());
    let mut lambda = hi.exp();
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        lambda = mid.exp();
        let resid = power_at(r, t, lambda) - p_total;
        if resid.abs() < 1e-10 * p_total.max(1.0) {
            break;
        }
        // Power is decreasing in λ.
        if resid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p_rx = integrate_weighted(r, t, lambda, |e| e / lambda - 1.0);
    Ok(PowerPolicy { r, t, p_total, threshold: lambda, p_rx })
}

/// Ergodic capacity with full CSI, `r·∫_λ log₂(e/λ)·g de`.
pub fn capacity_full_csi(policy: &PowerPolicy) -> f64 {
    let lambda = policy.threshold;
    policy.r as f64 * integrate_weighted(policy.r, policy.t, lambda, |e| (e / lambda).log2())
}

/// Mean received power per mode, `∫_λ (e/λ − 1)·g de`.
pub fn avg_rx_power(policy: &PowerPolicy) -> f64 {
    policy.p_rx
}

/// Linear power from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
