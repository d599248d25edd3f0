//! Monte Carlo estimates of the rotation-average and Gaussian wedge-moment
//! integrals, tail scaling diagnostics, and the horospherical-vs-rotation
//! comparison.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::exterior::{self, MultiVector};
use crate::lattice;
use crate::mc::{haar, parallel_estimate, EstimatorResult, RngSpec};
use crate::stats;

/// Estimate of the rotation average of |g_t k v|^{-beta} over Haar k, for a
/// decomposable grade-i multivector v. Finiteness needs beta < d - i + 1.
pub fn estimate_k_integral(
    v: &MultiVector,
    dims: Dimensions,
    t: f64,
    beta: f64,
    n: u64,
    spec: RngSpec,
) -> Result<EstimatorResult> {
    if v.d() != dims.d() {
        return Err(Error::validation("multivector dimension mismatch"));
    }
    if !v.is_decomposable() {
        return Err(Error::validation(
            "rotation-average estimate requires a decomposable input",
        ));
    }
    let i = v.grade();
    if !(beta < (dims.d() - i + 1) as f64) {
        return Err(Error::validation(format!(
            "beta = {beta} must be below d - i + 1 = {} for a finite integral",
            dims.d() - i + 1
        )));
    }
    let diag = lattice::flow_diagonal(dims, t);
    let d = dims.d();
    parallel_estimate(spec, n, move |rng: &mut ChaCha8Rng| {
        let k = haar::sample_haar_rotation(d, rng);
        let rotated = exterior::induced_action(&k, v)?;
        let pushed = exterior::induced_diagonal_action(&diag, &rotated);
        Ok(pushed.norm().powf(-beta))
    })
}

/// Gaussian wedge moment: expectation of |g_t (x_1 ^ .. ^ x_i)|^{-beta} over
/// independent standard Gaussian vectors.
pub fn estimate_gaussian_wedge_moment(
    dims: Dimensions,
    i: usize,
    t: f64,
    beta: f64,
    n: u64,
    spec: RngSpec,
) -> Result<EstimatorResult> {
    let d = dims.d();
    if i < 1 || i > d {
        return Err(Error::validation(format!("grade {i} out of range 1..={d}")));
    }
    let diag = lattice::flow_diagonal(dims, t);
    parallel_estimate(spec, n, move |rng: &mut ChaCha8Rng| {
        let vs: Vec<DVector<f64>> = (0..i)
            .map(|_| {
                DVector::from_fn(d, |r, _| diag[r] * rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        let w = exterior::wedge(&vs)?;
        Ok(w.norm().powf(-beta))
    })
}

/// Tail scaling diagnostics for the norm of a Gaussian wedge in dimension d:
/// the histogram over dyadic-log shells and the truncated critical moment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailDiagnostics {
    pub d: usize,
    pub i: usize,
    pub n_samples: u64,
    /// (shell index, count) for shells with at least `min_count` hits,
    /// excluding the boundary shell 0.
    pub bins: Vec<(usize, u64)>,
    /// Weighted-least-squares slope of log probability against shell index.
    pub slope: f64,
    pub slope_stderr: f64,
    /// Truncated moment E |W|^{-(d-i+1)} 1(W > e^{-kappa}) per kappa.
    pub truncated: Vec<(f64, f64)>,
    /// Largest relative deviation of the truncated moments from a line
    /// through the origin.
    pub linearity_defect: f64,
}

/// Sample the wedge-norm tail. Shell ell collects W in [e^{-ell-1}, e^{-ell});
/// the fit keeps shells with at least `min_count` hits, starting from shell
/// 1 for single vectors and shell 2 for genuine wedges, whose product
/// structure carries a visible pre-asymptotic defect in the shallow shells.
pub fn tail_moment_diagnostics(
    d: usize,
    i: usize,
    n: u64,
    kappas: &[f64],
    min_count: u64,
    spec: RngSpec,
) -> Result<TailDiagnostics> {
    if i < 1 || i > d {
        return Err(Error::validation(format!("grade {i} out of range 1..={d}")));
    }
    const MAX_SHELL: usize = 60;
    let critical = (d - i + 1) as f64;

    #[derive(Clone)]
    struct Part {
        counts: Vec<u64>,
        truncated: Vec<f64>,
    }

    const CHUNK: u64 = 16384;
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Part> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = spec.substream(c).rng();
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut part = Part {
                counts: vec![0u64; MAX_SHELL],
                truncated: vec![0.0; kappas.len()],
            };
            let mut mat = nalgebra::DMatrix::zeros(d, i);
            for _ in lo..hi {
                for v in mat.iter_mut() {
                    *v = rng.sample::<f64, _>(StandardNormal);
                }
                let cols: Vec<DVector<f64>> =
                    (0..i).map(|j| mat.column(j).into_owned()).collect();
                let w = exterior::wedge(&cols).expect("well-formed wedge").norm();
                if w < 1.0 && w > 0.0 {
                    let shell = (-w.ln()).floor() as usize;
                    if shell < MAX_SHELL {
                        part.counts[shell] += 1;
                    }
                }
                for (k, &kappa) in kappas.iter().enumerate() {
                    if w > (-kappa).exp() {
                        part.truncated[k] += w.powf(-critical);
                    }
                }
            }
            part
        })
        .collect();
    let mut counts = vec![0u64; MAX_SHELL];
    let mut truncated_sums = vec![0.0f64; kappas.len()];
    for part in partials {
        for (acc, c) in counts.iter_mut().zip(&part.counts) {
            *acc += c;
        }
        for (acc, t) in truncated_sums.iter_mut().zip(&part.truncated) {
            *acc += t;
        }
    }

    let first_shell = if i == 1 { 1 } else { 2 };
    let bins: Vec<(usize, u64)> = counts
        .iter()
        .enumerate()
        .skip(first_shell)
        .filter(|&(_, &c)| c >= min_count)
        .map(|(l, &c)| (l, c))
        .collect();
    if bins.len() < 2 {
        return Err(Error::Statistical(format!(
            "only {} usable shells at {n} samples; increase n",
            bins.len()
        )));
    }
    let xs: Vec<f64> = bins.iter().map(|&(l, _)| l as f64).collect();
    let ys: Vec<f64> = bins
        .iter()
        .map(|&(_, c)| (c as f64 / n as f64).ln())
        .collect();
    let ws: Vec<f64> = bins.iter().map(|&(_, c)| c as f64).collect();
    let ((_, slope), se) = stats::weighted_least_squares(&xs, &ys, &ws);

    let truncated: Vec<(f64, f64)> = kappas
        .iter()
        .zip(&truncated_sums)
        .map(|(&k, &s)| (k, s / n as f64))
        .collect();
    let ratio_fit: f64 = {
        let num: f64 = truncated.iter().map(|&(k, v)| k * v).sum();
        let den: f64 = truncated.iter().map(|&(k, _)| k * k).sum();
        num / den
    };
    let linearity_defect = truncated
        .iter()
        .map(|&(k, v)| ((v - ratio_fit * k) / v.max(1e-300)).abs())
        .fold(0.0f64, f64::max);

    Ok(TailDiagnostics {
        d,
        i,
        n_samples: n,
        bins,
        slope,
        slope_stderr: se,
        truncated,
        linearity_defect,
    })
}

/// Tail diagnostics with sample escalation: doubles n (starting from n0)
/// until at least two shells qualify and the slope standard error falls
/// under `target_se`. Honors the requirement that every used shell carry
/// enough counts while keeping the baseline sample size explicit.
pub fn tail_diagnostics_escalated(
    d: usize,
    i: usize,
    n0: u64,
    max_n: u64,
    kappas: &[f64],
    min_count: u64,
    target_se: f64,
    spec: RngSpec,
) -> Result<TailDiagnostics> {
    let mut n = n0;
    loop {
        match tail_moment_diagnostics(d, i, n, kappas, min_count, spec) {
            Ok(diag) if diag.slope_stderr <= target_se => return Ok(diag),
            Ok(diag) => {
                if n >= max_n {
                    return Ok(diag);
                }
            }
            Err(Error::Statistical(_)) if n < max_n => {}
            Err(e) => return Err(e),
        }
        n = (n * 4).min(max_n.max(n + 1));
    }
}

/// Ratio of the horospherical box average to the scaled rotation average.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UkComparison {
    pub box_side: EstimatorResult,
    pub rotation_side: EstimatorResult,
    /// box / ((1 + |s0|)^beta * rotation)
    pub ratio: f64,
    pub ratio_stderr: f64,
}

/// Compare the unit-cube horospherical average around s0 with the rotation
/// average, normalized by (1 + |s0|)^beta.
pub fn compare_u_k_integrals(
    w: &MultiVector,
    dims: Dimensions,
    t: f64,
    beta: f64,
    s0: &DMatrix<f64>,
    n: u64,
    spec: RngSpec,
) -> Result<UkComparison> {
    if !w.is_decomposable() {
        return Err(Error::validation("comparison requires a decomposable input"));
    }
    let (m, nn) = (dims.m(), dims.n());
    if s0.nrows() != m || s0.ncols() != nn {
        return Err(Error::validation("offset shape mismatch"));
    }
    let diag = lattice::flow_diagonal(dims, t);
    let s0o = s0.clone();
    let box_side = parallel_estimate(spec, n, move |rng: &mut ChaCha8Rng| {
        let jitter = DMatrix::from_fn(m, nn, |_, _| rng.gen_range(-0.5..0.5));
        let s = &s0o + jitter;
        let u = lattice::horospherical(dims, &s)?;
        let moved = exterior::induced_action(&u, w)?;
        let pushed = exterior::induced_diagonal_action(&diag, &moved);
        Ok(pushed.norm().powf(-beta))
    })?;
    let rotation_side = estimate_k_integral(
        w,
        dims,
        t,
        beta,
        n,
        RngSpec::new(spec.seed, spec.stream.wrapping_add(1)),
    )?;
    let scale = (1.0 + s0.norm()).powf(beta);
    let ratio = box_side.mean / (scale * rotation_side.mean);
    let rel = ((box_side.stderr / box_side.mean).powi(2)
        + (rotation_side.stderr / rotation_side.mean).powi(2))
    .sqrt();
    Ok(UkComparison {
        box_side,
        rotation_side,
        ratio,
        ratio_stderr: ratio.abs() * rel,
    })
}
