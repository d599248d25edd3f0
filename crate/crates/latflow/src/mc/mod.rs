//! Monte Carlo engines: seeded deterministic sampling, chunked parallel
//! estimation with an exact merge, and the statistical checks for the
//! integral inequalities.

pub mod contraction;
pub mod haar;
pub mod integrals;

pub use contraction::{
    estimate_m_tilde, iterate_contraction, verify_alpha_contraction, verify_tilde_contraction,
};
pub use haar::sample_haar_rotation;
pub use integrals::{
    compare_u_k_integrals, estimate_gaussian_wedge_moment, estimate_k_integral,
    tail_moment_diagnostics,
};

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dims::Dimensions;
use crate::error::Result;
use crate::lattice::Lattice;

/// Seed and stream fully determine every sample sequence. Estimators fan
/// out over sub-streams, one per fixed-size chunk, so results do not depend
/// on the thread schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSpec { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Sub-stream k of this spec; each spec owns 2^32 chunk streams.
    pub fn substream(&self, k: u64) -> RngSpec {
        RngSpec {
            seed: self.seed,
            stream: self.stream.wrapping_shl(32).wrapping_add(k),
        }
    }
}

/// Mean, standard error, and sample count of one estimate. Wall time stays
/// out of the serialized form so reports are bit-reproducible.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    #[serde(skip)]
    pub elapsed_s: f64,
}

/// Per-component variance of the composed-step Gaussian: the sum
/// sum_k e^{-2(k-1)(m+n)t} over the steps; lands in [1, 2] once t >= 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub variance: f64,
}

impl GaussianLaw {
    pub fn standard() -> Self {
        GaussianLaw { variance: 1.0 }
    }

    pub fn for_iterates(dims: Dimensions, t: f64, steps: usize) -> Self {
        let rate = -2.0 * dims.d() as f64 * t;
        let variance = (0..steps).map(|k| (rate * k as f64).exp()).sum();
        GaussianLaw { variance }
    }
}

const CHUNK: u64 = 8192;

/// Chunked parallel mean estimation. Chunk c draws from substream c; the
/// merge runs in chunk order, so the estimate is bit-identical for a fixed
/// (seed, stream, n) regardless of thread count.
pub fn parallel_estimate<F>(spec: RngSpec, n: u64, f: F) -> Result<EstimatorResult>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let start = std::time::Instant::now();
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Result<crate::stats::Accumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = spec.substream(c).rng();
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut acc = crate::stats::Accumulator::default();
            for _ in lo..hi {
                acc.push(f(&mut rng)?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = crate::stats::Accumulator::default();
    for p in partials {
        total.merge(&p?);
    }
    Ok(EstimatorResult {
        mean: total.mean(),
        stderr: total.stderr(),
        n_samples: total.n,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Standard Gaussian m-by-n offset matrix with the given per-component
/// variance.
pub fn gaussian_offset(dims: Dimensions, rng: &mut impl Rng, law: GaussianLaw) -> DMatrix<f64> {
    let sigma = law.variance.sqrt();
    DMatrix::from_fn(dims.m(), dims.n(), |_, _| {
        sigma * rng.sample::<f64, _>(StandardNormal)
    })
}

/// A random unimodular lattice: Gaussian basis rescaled to determinant one
/// (with a column swap to fix the sign). A plain source of generic test
/// lattices, not a canonical measure.
pub fn random_unimodular(dims: Dimensions, rng: &mut impl Rng) -> Lattice {
    let d = dims.d();
    loop {
        let mut b = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let det = b.determinant();
        if !det.is_finite() || det.abs() < 1e-6 {
            continue;
        }
        if det < 0.0 {
            b.swap_columns(0, 1);
        }
        let scale = det.abs().powf(1.0 / d as f64);
        b /= scale;
        if let Ok(x) = Lattice::new(dims, b) {
            return x;
        }
    }
}
