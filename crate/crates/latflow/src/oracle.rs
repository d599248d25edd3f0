//! Independent verification routes: brute-force covolume minimization over
//! boxed integer combinations, plain quadrature for the planar rotation
//! average, and continued-fraction convergents. These deliberately avoid
//! the reduction/enumeration machinery of the main implementation.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Minimal covolume of a rank-i subgroup generated by lattice vectors with
/// coordinates in [-bound, bound]^d. No reduction, no saturation: a plain
/// scan over tuples.
pub fn boxed_min_covolume(x: &Lattice, i: usize, bound: i64) -> Option<f64> {
    let d = x.dims().d();
    // all coordinate vectors in the box, up to sign (first nonzero positive)
    let mut vectors: Vec<DVector<f64>> = Vec::new();
    let mut coords = vec![0i64; d];
    loop {
        if coords.iter().any(|&c| c != 0) {
            let lead = coords.iter().find(|&&c| c != 0).copied().unwrap();
            if lead > 0 {
                vectors.push(x.vector(&coords));
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == d {
                break;
            }
            if coords[pos] < bound {
                coords[pos] += 1;
                break;
            }
            coords[pos] = -bound;
            pos += 1;
        }
        if pos == d {
            break;
        }
    }

    let mut best: Option<f64> = None;
    let mut idx = vec![0usize; i];
    scan_tuples(&vectors, i, 0, 0, &mut idx, &mut best);
    best
}

fn scan_tuples(
    vectors: &[DVector<f64>],
    i: usize,
    depth: usize,
    start: usize,
    idx: &mut Vec<usize>,
    best: &mut Option<f64>,
) {
    if depth == i {
        let mat = DMatrix::from_columns(&idx.iter().map(|&j| vectors[j].clone()).collect::<Vec<_>>());
        let gram = mat.transpose() * &mat;
        let det = gram.determinant();
        let scale: f64 = idx.iter().map(|&j| vectors[j].norm_squared()).product();
        if det > 1e-24 * scale {
            let cov = det.sqrt();
            if best.map(|b| cov < b).unwrap_or(true) {
                *best = Some(cov);
            }
        }
        return;
    }
    for j in start..vectors.len() {
        idx[depth] = j;
        scan_tuples(vectors, i, depth + 1, j + 1, idx, best);
    }
}

/// Escalating brute-force height: enlarge the coordinate box until the
/// minimum is stable across two consecutive sizes, then return its
/// reciprocal.
pub fn brute_force_alpha(x: &Lattice, i: usize) -> Result<f64> {
    let mut prev: Option<f64> = None;
    for bound in 1..=6i64 {
        let current = boxed_min_covolume(x, i, bound);
        if let (Some(p), Some(c)) = (prev, current) {
            if (p - c).abs() <= 1e-12 * p.abs() {
                return Ok(1.0 / c);
            }
        }
        prev = current.or(prev);
    }
    Err(Error::resource("brute-force height escalation", 6))
}

/// Planar rotation average of |g_t k v|^{-beta} for a unit vector: the
/// circle integral of (e^{2t} cos^2 + e^{-2t} sin^2)^{-beta/2}, by periodic
/// trapezoid (spectrally accurate for smooth periodic integrands).
pub fn circle_average_d2(t: f64, beta: f64) -> f64 {
    let n = 1 << 20;
    let mut acc = 0.0;
    let e2 = (2.0 * t).exp();
    let em2 = (-2.0 * t).exp();
    for k in 0..n {
        let theta = std::f64::consts::TAU * k as f64 / n as f64;
        let c = theta.cos();
        let s = theta.sin();
        acc += (e2 * c * c + em2 * s * s).powf(-beta / 2.0);
    }
    acc / n as f64
}

/// Convergents p_k/q_k of a continued fraction [a0; a1, a2, ...].
pub fn convergents(terms: &[BigInt]) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::with_capacity(terms.len());
    let (mut p0, mut q0) = (BigInt::from(1), BigInt::from(0));
    let (mut p1, mut q1) = (terms[0].clone(), BigInt::from(1));
    out.push((p1.clone(), q1.clone()));
    for a in &terms[1..] {
        let p2 = a * &p1 + &p0;
        let q2 = a * &q1 + &q0;
        out.push((p2.clone(), q2.clone()));
        (p0, q0) = (p1, q1);
        (p1, q1) = (p2, q2);
    }
    out
}

/// Fibonacci-style convergent denominators of the golden-ratio conjugate
/// [0; 1, 1, 1, ...].
pub fn golden_convergents(count: usize) -> Vec<(BigInt, BigInt)> {
    let terms: Vec<BigInt> = std::iter::once(BigInt::from(0))
        .chain(std::iter::repeat(BigInt::from(1)).take(count))
        .collect();
    convergents(&terms)
}
