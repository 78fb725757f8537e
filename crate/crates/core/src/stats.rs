//! Monte Carlo reductions.
//!
//! Trials are evaluated in parallel but always collected in trial order and
//! reduced sequentially, so sums are bit-reproducible for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::streams::{Streams, TrialRng};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { mean: value, std_error: 0.0 }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, std_error: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { mean, std_error: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Estimate { mean, std_error: (var / n as f64).sqrt() }
    }
}

/// Runs `trials` independent evaluations of `f` and returns the per-trial
/// outputs in trial order.
pub fn run_trials<T, F>(trials: usize, streams: &Streams, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut TrialRng) -> T + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.trial(i);
            f(&mut rng)
        })
        .collect()
}

/// Mean and standard error of a scalar trial statistic.
pub fn mc_mean<F>(trials: usize, streams: &Streams, f: F) -> Estimate
where
    F: Fn(&mut TrialRng) -> f64 + Sync,
{
    Estimate::from_samples(&run_trials(trials, streams, f))
}

/// Column-wise estimates for a vector-valued trial statistic.
pub fn column_estimates(rows: &[Vec<f64>]) -> Vec<Estimate> {
    let width = rows.first().map_or(0, Vec::len);
    let mut col = Vec::with_capacity(rows.len());
    (0..width)
        .map(|j| {
            col.clear();
            col.extend(rows.iter().map(|r| r[j]));
            Estimate::from_samples(&col)
        })
        .collect()
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn estimate_matches_hand_computation() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ks_of_uniform_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&xs, |x| x) <= 0.0005 + 1e-12);
    }
}
