use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::givens::{PostcoderAngles, UnitVectorAngles};
use crate::linalg::sinc;

use super::lloyd::{train_lloyd_theta, LLOYD_MAX_ITERS, LLOYD_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookKind {
    UniformPhase,
    LloydTheta,
}

impl CodebookKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CodebookKind::UniformPhase => "uniform-phase",
            CodebookKind::LloydTheta => "lloyd-theta",
        }
    }
}

/// A scalar quantizer: `2^bits` reconstruction levels and `2^bits + 1` edges.
///
/// Phase cells are `(b_i, b_{i+1}]`; rotation cells are `[b_i, b_{i+1})` with
/// the last cell closed at `π/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCodebook {
    pub kind: CodebookKind,
    pub bits: u32,
    pub levels: Vec<f64>,
    pub boundaries: Vec<f64>,
    pub theta_class: Option<u32>,
    /// Distortion `E[(θ − q(θ))²]` at the end of training (rotation books only).
    pub trained_mse: Option<f64>,
    pub converged: bool,
}

impl ScalarCodebook {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Cell index of `x`.
    pub fn index_of(&self, x: f64) -> usize {
        let n = self.levels.len();
        let interior = &self.boundaries[1..n];
        match self.kind {
            CodebookKind::UniformPhase => interior.partition_point(|&b| b < x),
            CodebookKind::LloydTheta => interior.partition_point(|&b| b <= x),
        }
    }

    pub fn level(&self, index: usize) -> f64 {
        self.levels[index]
    }

    pub fn quantize(&self, x: f64) -> f64 {
        self.levels[self.index_of(x)]
    }

    /// `E[cos(x − q(x))]` under the source law this book was designed for.
    pub fn mean_cos_error(&self) -> f64 {
        match self.kind {
            CodebookKind::UniformPhase => sinc(1.0 / self.levels.len() as f64),
            CodebookKind::LloydTheta => {
                let l = self.theta_class.unwrap_or(1);
                let tol = 1e-10 / self.levels.len() as f64;
                self.levels
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| {
                        crate::quadrature::integrate(
                            |t| (t - y).cos() * super::theta_pdf_unchecked(l, t),
                            self.boundaries[i],
                            self.boundaries[i + 1],
                            tol,
                        )
                    })
                    .sum()
            }
        }
    }

    pub(crate) fn check_structure(&self) -> Result<()> {
        let n = 1usize
            .checked_shl(self.bits)
            .ok_or_else(|| Error::Validation("bit width too large".into()))?;
        if self.levels.len() != n || self.boundaries.len() != n + 1 {
            return Err(Error::Validation(format!(
                "codebook with {} bits needs {} levels and {} edges",
                self.bits,
                n,
                n + 1
            )));
        }
        for i in 0..n {
            if !(self.boundaries[i] < self.levels[i] && self.levels[i] < self.boundaries[i + 1]) {
                return Err(Error::Validation(format!("level {i} is not inside its cell")));
            }
        }
        match (self.kind, self.theta_class) {
            (CodebookKind::LloydTheta, Some(l)) if l >= 1 => Ok(()),
            (CodebookKind::UniformPhase, None) => Ok(()),
            _ => Err(Error::Validation("theta_class must be set exactly for lloyd-theta books".into())),
        }
    }
}

/// Uniform quantizer for phases on `(−π, π]` with cell midpoints as levels.
pub fn uniform_phase_codebook(bits: u32) -> ScalarCodebook {
    let n = 1usize << bits;
    let width = 2.0 * PI / n as f64;
    let mut boundaries: Vec<f64> = (0..=n).map(|i| -PI + i as f64 * width).collect();
    boundaries[n] = PI;
    let levels = (0..n).map(|i| -PI + (i as f64 + 0.5) * width).collect();
    ScalarCodebook {
        kind: CodebookKind::UniformPhase,
        bits,
        levels,
        boundaries,
        theta_class: None,
        trained_mse: None,
        converged: true,
    }
}

/// Bit widths: one shared width for every phase and one per rotation class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitAllocation {
    pub phase_bits: u32,
    /// `theta_bits[l−1]` is the width for class `l`.
    pub theta_bits: Vec<u32>,
}

impl BitAllocation {
    pub fn zeros(r: usize) -> Self {
        BitAllocation { phase_bits: 0, theta_bits: vec![0; r.saturating_sub(1)] }
    }

    pub fn uniform(r: usize, bits: u32) -> Self {
        BitAllocation { phase_bits: bits, theta_bits: vec![bits; r.saturating_sub(1)] }
    }

    /// Fed-back bits for a full post-coder: `b_φ·r(r−1)/2 + Σ_l b_l·(r−l)`.
    pub fn cost(&self, r: usize) -> u32 {
        let phases = (r * (r - 1) / 2) as u32;
        self.phase_bits * phases
            + self
                .theta_bits
                .iter()
                .enumerate()
                .map(|(j, b)| b * (r - 1 - j) as u32)
                .sum::<u32>()
    }

    /// Fed-back bits for a single unit vector: `b_φ·(r−1) + Σ_l b_l`.
    pub fn vector_cost(&self, r: usize) -> u32 {
        self.phase_bits * (r as u32 - 1) + self.theta_bits.iter().sum::<u32>()
    }
}

/// Trains and memoizes codebooks by `(class, bits)`.
#[derive(Debug, Default)]
pub struct CodebookCache {
    theta: Mutex<HashMap<(u32, u32), Arc<ScalarCodebook>>>,
    phase: Mutex<HashMap<u32, Arc<ScalarCodebook>>>,
}

impl CodebookCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn theta(&self, l: u32, bits: u32) -> Result<Arc<ScalarCodebook>> {
        if let Some(book) = self.theta.lock().unwrap().get(&(l, bits)) {
            return Ok(book.clone());
        }
        // Trained outside the lock; a racing duplicate is identical.
        let book = Arc::new(train_lloyd_theta(l, bits, LLOYD_TOL, LLOYD_MAX_ITERS)?);
        Ok(self.theta.lock().unwrap().entry((l, bits)).or_insert(book).clone())
    }

    pub fn phase(&self, bits: u32) -> Arc<ScalarCodebook> {
        self.phase
            .lock()
            .unwrap()
            .entry(bits)
            .or_insert_with(|| Arc::new(uniform_phase_codebook(bits)))
            .clone()
    }

    pub fn books(&self, r: usize, alloc: &BitAllocation) -> Result<CodebookSet> {
        if alloc.theta_bits.len() != r.saturating_sub(1) {
            return Err(Error::Dimension(format!(
                "allocation has {} theta classes, r={r} needs {}",
                alloc.theta_bits.len(),
                r.saturating_sub(1)
            )));
        }
        let theta_books = alloc
            .theta_bits
            .iter()
            .enumerate()
            .map(|(j, &b)| self.theta(j as u32 + 1, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(CodebookSet { r, phase_book: self.phase(alloc.phase_bits), theta_books })
    }
}

/// One phase book shared by every `φ` plus one rotation book per class.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    pub r: usize,
    pub phase_book: Arc<ScalarCodebook>,
    /// `theta_books[l−1]` serves class `l`.
    pub theta_books: Vec<Arc<ScalarCodebook>>,
}

impl CodebookSet {
    pub fn new(r: usize, phase_book: ScalarCodebook, theta_books: Vec<ScalarCodebook>) -> Result<Self> {
        if phase_book.kind != CodebookKind::UniformPhase {
            return Err(Error::Validation("phase book must be uniform-phase".into()));
        }
        if theta_books.len() != r.saturating_sub(1) {
            return Err(Error::Dimension(format!("r={r} needs {} theta books", r.saturating_sub(1))));
        }
        for (j, b) in theta_books.iter().enumerate() {
            if b.kind != CodebookKind::LloydTheta || b.theta_class != Some(j as u32 + 1) {
                return Err(Error::Validation(format!("theta book {} has the wrong kind or class", j + 1)));
            }
        }
        Ok(CodebookSet {
            r,
            phase_book: Arc::new(phase_book),
            theta_books: theta_books.into_iter().map(Arc::new).collect(),
        })
    }

    pub fn allocation(&self) -> BitAllocation {
        BitAllocation {
            phase_bits: self.phase_book.bits,
            theta_bits: self.theta_books.iter().map(|b| b.bits).collect(),
        }
    }
}

/// Codebook indices, laid out like [`PostcoderAngles`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleIndices {
    pub phases: Vec<Vec<usize>>,
    pub rotations: Vec<Vec<usize>>,
}

/// Maps each angle to its cell and returns indices plus reconstruction values.
pub fn quantize_angles(books: &CodebookSet, angles: &PostcoderAngles) -> Result<(AngleIndices, PostcoderAngles)> {
    if books.r != angles.r {
        return Err(Error::Validation(format!("codebooks for r={} but angles for r={}", books.r, angles.r)));
    }
    let phases: Vec<Vec<usize>> = angles
        .phases
        .iter()
        .map(|stage| stage.iter().map(|&x| books.phase_book.index_of(x)).collect())
        .collect();
    let rotations: Vec<Vec<usize>> = angles
        .rotations
        .iter()
        .map(|stage| stage.iter().enumerate().map(|(j, &x)| books.theta_books[j].index_of(x)).collect())
        .collect();
    let quantized = dequantize(books, &phases, &rotations);
    Ok((AngleIndices { phases, rotations }, quantized))
}

fn dequantize(books: &CodebookSet, phases: &[Vec<usize>], rotations: &[Vec<usize>]) -> PostcoderAngles {
    PostcoderAngles {
        r: books.r,
        phases: phases.iter().map(|s| s.iter().map(|&i| books.phase_book.level(i)).collect()).collect(),
        rotations: rotations
            .iter()
            .map(|s| s.iter().enumerate().map(|(j, &i)| books.theta_books[j].level(i)).collect())
            .collect(),
    }
}

impl AngleIndices {
    pub fn dequantize(&self, books: &CodebookSet) -> PostcoderAngles {
        dequantize(books, &self.phases, &self.rotations)
    }
}

/// Quantizes single-vector angles with the same per-class books.
pub fn quantize_unit_vector(books: &CodebookSet, angles: &UnitVectorAngles) -> Result<UnitVectorAngles> {
    if books.r != angles.r {
        return Err(Error::Validation(format!("codebooks for r={} but vector for r={}", books.r, angles.r)));
    }
    Ok(UnitVectorAngles {
        r: angles.r,
        phases: angles.phases.iter().map(|&x| books.phase_book.quantize(x)).collect(),
        rotations: angles
            .rotations
            .iter()
            .enumerate()
            .map(|(j, &x)| books.theta_books[j].quantize(x))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::wrap_phase;
    use crate::stats::mc_mean;
    use crate::streams::Streams;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn uniform_zero_bits() {
        let b = uniform_phase_codebook(0);
        assert_eq!(b.levels, vec![0.0]);
        assert_eq!(b.boundaries, vec![-PI, PI]);
        assert!(b.mean_cos_error().abs() < 1e-16);
        b.check_structure().unwrap();
    }

    #[test]
    fn uniform_one_bit_cell_rule() {
        let b = uniform_phase_codebook(1);
        assert_eq!(b.boundaries, vec![-PI, 0.0, PI]);
        assert_eq!(b.levels, vec![-PI / 2.0, PI / 2.0]);
        assert_eq!(b.quantize(0.0), -PI / 2.0);
        assert_eq!(b.quantize(1e-12), PI / 2.0);
        assert_eq!(b.quantize(PI), PI / 2.0);
    }

    #[test]
    fn uniform_mean_cos_matches_monte_carlo() {
        let b = uniform_phase_codebook(2);
        let expect = (PI / 4.0).sin() / (PI / 4.0);
        assert!((b.mean_cos_error() - expect).abs() < 1e-15);
        let est = mc_mean(200_000, &Streams::new(3), |rng| {
            let phi = wrap_phase(rng.random_range(-PI..PI));
            (phi - b.quantize(phi)).cos()
        });
        assert!((est.mean - expect).abs() < 4.0 * est.std_error);
    }

    #[test]
    fn levels_are_fixed_points() {
        let b = uniform_phase_codebook(3);
        for &y in &b.levels {
            assert_eq!(b.quantize(y), y);
        }
        let t = train_lloyd_theta(2, 3, LLOYD_TOL, LLOYD_MAX_ITERS).unwrap();
        for &y in &t.levels {
            assert_eq!(t.quantize(y), y);
        }
    }

    #[test]
    fn quantize_matches_brute_force_nearest_level() {
        let cache = CodebookCache::new();
        let books = cache.books(2, &BitAllocation::uniform(2, 3)).unwrap();
        let angles = PostcoderAngles { r: 2, phases: vec![vec![1.0]], rotations: vec![vec![0.3]] };
        let (idx, q) = quantize_angles(&books, &angles).unwrap();
        assert!(idx.phases[0][0] < 8 && idx.rotations[0][0] < 8);
        assert_eq!(idx.dequantize(&books), q);
        let nearest = |levels: &[f64], x: f64| {
            *levels
                .iter()
                .min_by(|a, b| (*a - x).abs().total_cmp(&(*b - x).abs()))
                .unwrap()
        };
        assert_eq!(q.phases[0][0], nearest(&books.phase_book.levels, 1.0));
        assert_eq!(q.rotations[0][0], nearest(&books.theta_books[0].levels, 0.3));

        let mut rng = Streams::new(12).trial(0);
        for _ in 0..5000 {
            let phi: f64 = rng.random_range(-PI..PI);
            let theta: f64 = rng.random_range(0.0..FRAC_PI_2);
            assert_eq!(books.phase_book.quantize(phi), nearest(&books.phase_book.levels, phi));
            assert_eq!(books.theta_books[0].quantize(theta), nearest(&books.theta_books[0].levels, theta));
        }
    }

    #[test]
    fn zero_angles_map_to_lowest_rotation_level() {
        let cache = CodebookCache::new();
        let books = cache.books(3, &BitAllocation::uniform(3, 2)).unwrap();
        let (idx, _) = quantize_angles(&books, &PostcoderAngles::zeros(3)).unwrap();
        assert!(idx.rotations.iter().flatten().all(|&i| i == 0));
        // φ = 0 sits on the edge between cells 1 and 2 and goes left.
        assert!(idx.phases.iter().flatten().all(|&i| i == 1));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let cache = CodebookCache::new();
        let books = cache.books(2, &BitAllocation::uniform(2, 1)).unwrap();
        assert!(matches!(quantize_angles(&books, &PostcoderAngles::zeros(3)), Err(Error::Validation(_))));
        assert!(cache.books(3, &BitAllocation::uniform(2, 1)).is_err());
    }

    #[test]
    fn allocation_costs() {
        let a = BitAllocation { phase_bits: 2, theta_bits: vec![3, 4] };
        assert_eq!(a.cost(3), 2 * 3 + 3 * 2 + 4);
        assert_eq!(a.vector_cost(3), 2 * 2 + 3 + 4);
        assert_eq!(BitAllocation::uniform(2, 5).cost(2), 10);
    }

    proptest::proptest! {
        #[test]
        fn lloyd_cells_pick_the_nearest_level(l in 1u32..4, bits in 0u32..7, x in 0.0..FRAC_PI_2) {
            let book = CodebookCache::new().theta(l, bits).unwrap();
            let q = book.quantize(x);
            let best = book.levels.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
            proptest::prop_assert!((x - q).abs() <= best + 1e-12);
        }

        #[test]
        fn phase_cells_pick_the_nearest_level(bits in 0u32..9, x in -PI..PI) {
            let book = uniform_phase_codebook(bits);
            let q = book.quantize(x);
            let best = book.levels.iter().map(|y| wrap_phase(x - y).abs()).fold(f64::INFINITY, f64::min);
            proptest::prop_assert!(wrap_phase(x - q).abs() <= best + 1e-12);
        }
    }
}
