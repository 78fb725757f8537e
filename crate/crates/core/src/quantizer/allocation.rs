use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::sample_postcoder;
use crate::error::{Error, Result};
use crate::givens::{decompose_postcoder, reconstruct_unchecked, unit_vector_unchecked, PostcoderAngles};
use crate::linalg::CMatrix;
use crate::rates::{rate_bound_tight, ErrorStats};
use crate::streams::Streams;

use super::codebook::{quantize_angles, BitAllocation, CodebookCache};

/// Largest width the search gives any single parameter class.
pub const MAX_PARAM_BITS: u32 = 12;

struct PoolEntry {
    u: CMatrix,
    angles: PostcoderAngles,
}

/// Scores candidate allocations on a fixed pool of canonical post-coders.
///
/// Every candidate sees the same pool, so comparisons between allocations are
/// free of sampling noise from independent draws. Scores are memoized.
pub struct AllocationContext {
    r: usize,
    pool: Vec<PoolEntry>,
    cache: Arc<CodebookCache>,
    max_param_bits: u32,
    q_memo: Mutex<HashMap<BitAllocation, Vec<f64>>>,
    fidelity_memo: Mutex<HashMap<BitAllocation, f64>>,
}

impl AllocationContext {
    /// Pool member `i` is drawn from `streams.trial(i)`, the same draw
    /// [`crate::rates::estimate_error_stats`] uses for its trial `i`.
    pub fn new(r: usize, pool_size: usize, streams: &Streams, cache: Arc<CodebookCache>) -> Result<Self> {
        if r < 1 {
            return Err(Error::Dimension("r must be >= 1".into()));
        }
        if pool_size < 1 {
            return Err(Error::Validation("allocation pool must hold at least one sample".into()));
        }
        let pool = (0..pool_size as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = streams.trial(i);
                let u = sample_postcoder(r, &mut rng)?;
                let angles = decompose_postcoder(&u)?;
                Ok(PoolEntry { u, angles })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AllocationContext {
            r,
            pool,
            cache,
            max_param_bits: MAX_PARAM_BITS,
            q_memo: Mutex::new(HashMap::new()),
            fidelity_memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_max_param_bits(mut self, bits: u32) -> Self {
        self.max_param_bits = bits;
        self
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn cache(&self) -> &Arc<CodebookCache> {
        &self.cache
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    /// Per-sample `‖u_i − û_i‖²` over the pool, in pool order.
    pub fn error_rows(&self, alloc: &BitAllocation) -> Result<Vec<Vec<f64>>> {
        let books = self.cache.books(self.r, alloc)?;
        self.pool
            .par_iter()
            .map(|e| {
                let (_, q) = quantize_angles(&books, &e.angles)?;
                let u_hat = reconstruct_unchecked(&q);
                Ok((0..self.r)
                    .map(|i| e.u.column(i).iter().zip(u_hat.column(i).iter()).map(|(a, b)| (a - b).norm_sqr()).sum())
                    .collect::<Vec<f64>>())
            })
            .collect()
    }

    /// Full error statistics of `alloc` on the pool.
    pub fn error_stats(&self, alloc: &BitAllocation) -> Result<ErrorStats> {
        Ok(ErrorStats::from_rows(self.r, &self.error_rows(alloc)?))
    }

    /// Pool estimate of `E[Q_ii]`, the per-column squared error.
    pub fn q_diag(&self, alloc: &BitAllocation) -> Result<Vec<f64>> {
        if let Some(q) = self.q_memo.lock().unwrap().get(alloc) {
            return Ok(q.clone());
        }
        let rows = self.error_rows(alloc)?;
        let mut q = vec![0.0; self.r];
        for row in &rows {
            for (acc, x) in q.iter_mut().zip(row) {
                *acc += x;
            }
        }
        q.iter_mut().for_each(|x| *x /= rows.len() as f64);
        self.q_memo.lock().unwrap().insert(alloc.clone(), q.clone());
        Ok(q)
    }

    /// The rate penalty term of the tight bound, `−Σ log₂(1 + J_ii·Q_ii)`.
    pub fn score(&self, alloc: &BitAllocation, j_diag: &[f64]) -> Result<f64> {
        rate_bound_tight(0.0, j_diag, &self.q_diag(alloc)?)
    }

    /// Pool estimate of `E|û₁†u₁|²` when only the dominant column is fed back.
    pub fn vector_fidelity(&self, alloc: &BitAllocation) -> Result<f64> {
        if let Some(f) = self.fidelity_memo.lock().unwrap().get(alloc) {
            return Ok(*f);
        }
        let books = self.cache.books(self.r, alloc)?;
        let r = self.r;
        let vals: Vec<f64> = self
            .pool
            .par_iter()
            .map(|e| {
                if r == 1 {
                    return 1.0;
                }
                let phases: Vec<f64> = e.angles.phases[0].iter().map(|&x| books.phase_book.quantize(x)).collect();
                let rots: Vec<f64> = e.angles.rotations[0]
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| books.theta_books[j].quantize(x))
                    .collect();
                let v = unit_vector_unchecked(r, &phases, &rots);
                let ip: Complex64 = v.iter().zip(e.u.column(0).iter()).map(|(a, b)| a.conj() * b).sum();
                ip.norm_sqr()
            })
            .collect();
        let f = vals.iter().sum::<f64>() / vals.len() as f64;
        self.fidelity_memo.lock().unwrap().insert(alloc.clone(), f);
        Ok(f)
    }

    /// Best full post-coder allocation within `budget` and its score.
    ///
    /// `j_diag[i]` weights the error on mode `i`; under water-filling every
    /// entry is `P_rx`.
    pub fn best_full(&self, budget: u32, j_diag: &[f64]) -> Result<(BitAllocation, f64)> {
        if j_diag.len() != self.r {
            return Err(Error::Dimension(format!("r={} needs {} weights, got {}", self.r, self.r, j_diag.len())));
        }
        let nphase = (self.r * (self.r - 1) / 2) as u32;
        let weights: Vec<u32> = (1..self.r as u32).map(|l| self.r as u32 - l).collect();
        exhaustive(nphase, &weights, budget, self.max_param_bits, |a| self.score(a, j_diag))
    }

    /// Best single-vector allocation within `budget` and its fidelity.
    pub fn best_vector(&self, budget: u32) -> Result<(BitAllocation, f64)> {
        let weights = vec![1; self.r - 1];
        exhaustive(self.r as u32 - 1, &weights, budget, self.max_param_bits, |a| self.vector_fidelity(a))
    }
}

/// Allocation maximizing the tight rate bound among those costing at most `budget`.
///
/// Ties go to the lexicographically smallest `(phase_bits, theta_bits…)`.
pub fn allocate_bits(r: usize, budget: u32, j_diag: &[f64], ctx: &AllocationContext) -> Result<BitAllocation> {
    if ctx.r() != r {
        return Err(Error::Dimension(format!("context built for r={}, asked for r={r}", ctx.r())));
    }
    ctx.best_full(budget, j_diag).map(|(a, _)| a)
}

/// Allocation maximizing `E|û₁†u₁|²` for dominant-vector feedback.
pub fn allocate_vector_bits(r: usize, budget: u32, ctx: &AllocationContext) -> Result<BitAllocation> {
    if ctx.r() != r {
        return Err(Error::Dimension(format!("context built for r={}, asked for r={r}", ctx.r())));
    }
    ctx.best_vector(budget).map(|(a, _)| a)
}

/// Enumerates allocations in lexicographic order and keeps the first maximum.
fn exhaustive<F>(
    phase_weight: u32,
    theta_weights: &[u32],
    budget: u32,
    cap: u32,
    mut score: F,
) -> Result<(BitAllocation, f64)>
where
    F: FnMut(&BitAllocation) -> Result<f64>,
{
    let mut best: Option<(BitAllocation, f64)> = None;
    let mut current = BitAllocation { phase_bits: 0, theta_bits: vec![0; theta_weights.len()] };
    let phase_max = budget.checked_div(phase_weight).map_or(0, |m| cap.min(m));
    for pb in 0..=phase_max {
        current.phase_bits = pb;
        walk(theta_weights, 0, budget - pb * phase_weight, cap, &mut current, &mut |a| {
            let s = score(a)?;
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((a.clone(), s));
            }
            Ok(())
        })?;
    }
    Ok(best.expect("the all-zero allocation is always feasible"))
}

fn walk(
    weights: &[u32],
    j: usize,
    left: u32,
    cap: u32,
    current: &mut BitAllocation,
    visit: &mut dyn FnMut(&BitAllocation) -> Result<()>,
) -> Result<()> {
    if j == weights.len() {
        return visit(current);
    }
    for b in 0..=cap.min(left / weights[j]) {
        current.theta_bits[j] = b;
        walk(weights, j + 1, left - b * weights[j], cap, current, visit)?;
    }
    current.theta_bits[j] = 0;
    Ok(())
}
