//! Haar sampling on the rotation group via QR of a Gaussian matrix with the
//! sign correction on the R diagonal, then a determinant fix landing in the
//! orientation-preserving component.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// One Haar-distributed rotation (orthogonal, determinant +1).
pub fn sample_haar_rotation(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    assert!(d >= 2, "rotation group needs d >= 2");
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    // reflecting one fixed column maps the det = -1 coset onto the
    // rotations without disturbing the distribution
    if q.determinant() < 0.0 {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Bin edges for the distribution of the (0,0) entry of a Haar rotation:
/// its square is Beta(1/2, (d-1)/2) with a symmetric sign, so equal-mass
/// quantiles come from the inverse Beta CDF.
pub fn cos_angle_bin_edges(d: usize, bins: usize) -> Vec<f64> {
    use statrs::distribution::{Beta, ContinuousCDF};
    assert!(bins >= 2 && bins % 2 == 0);
    let beta = Beta::new(0.5, (d as f64 - 1.0) / 2.0).expect("valid shape");
    let half = bins / 2;
    let mut edges = Vec::with_capacity(bins + 1);
    for k in 0..=bins {
        // mass below edge k is k/bins; fold onto the symmetric law
        let p = k as f64 / bins as f64;
        let edge = if p < 0.5 {
            -(beta.inverse_cdf(1.0 - 2.0 * p)).sqrt()
        } else if p > 0.5 {
            (beta.inverse_cdf(2.0 * p - 1.0)).sqrt()
        } else {
            0.0
        };
        edges.push(edge);
        let _ = half;
    }
    edges
}
