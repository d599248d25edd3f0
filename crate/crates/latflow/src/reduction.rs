//! Basis reduction and short-vector enumeration. LLL on floating-point
//! column bases with an exact integer transform, then Fincke-Pohst
//! enumeration inside a given radius with an explicit vector budget.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Default cap on enumerated vectors before reporting a resource error.
pub const DEFAULT_MAX_VECTORS: usize = 400_000;

#[derive(Debug, Clone)]
pub struct Reduced {
    /// Reduced basis columns.
    pub basis: DMatrix<f64>,
    /// Unimodular transform: reduced = original * transform.
    pub transform: Vec<Vec<i128>>,
}

/// Textbook LLL (delta in (1/2, 1)) on the columns of the basis, with
/// floating Gram-Schmidt recomputed after each swap. Fine at d <= 10.
pub fn lll(basis: &DMatrix<f64>, delta: f64) -> Reduced {
    let d = basis.ncols();
    let mut b: Vec<DVector<f64>> = (0..d).map(|j| basis.column(j).into_owned()).collect();
    let mut u: Vec<Vec<i128>> = (0..d)
        .map(|j| (0..d).map(|i| if i == j { 1 } else { 0 }).collect())
        .collect();

    let mut mu = vec![vec![0.0; d]; d];
    let mut bstar_norm2 = vec![0.0; d];

    let recompute = |b: &[DVector<f64>], mu: &mut Vec<Vec<f64>>, bn2: &mut Vec<f64>| {
        let d = b.len();
        let mut bstar: Vec<DVector<f64>> = Vec::with_capacity(d);
        for i in 0..d {
            let mut v = b[i].clone();
            for j in 0..i {
                let denom = bn2[j];
                mu[i][j] = if denom == 0.0 {
                    0.0
                } else {
                    b[i].dot(&bstar[j]) / denom
                };
                v -= &bstar[j] * mu[i][j];
            }
            bn2[i] = v.norm_squared();
            bstar.push(v);
        }
    };

    recompute(&b, &mut mu, &mut bstar_norm2);

    let mut k = 1usize;
    let mut steps = 0usize;
    // step cap avoids livelock on degenerate float input
    let max_steps = 10_000 + 200 * d * d;
    while k < d && steps < max_steps {
        steps += 1;
        for j in (0..k).rev() {
            let r = mu[k][j].round();
            if r != 0.0 && r.is_finite() {
                let ri = r as i128;
                let (bj, bk) = {
                    let (left, right) = b.split_at_mut(k);
                    (&left[j], &mut right[0])
                };
                *bk -= bj * r;
                for i in 0..d {
                    u[i][k] -= ri * u[i][j];
                }
                recompute(&b, &mut mu, &mut bstar_norm2);
            }
        }
        if bstar_norm2[k] >= (delta - mu[k][k - 1].powi(2)) * bstar_norm2[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            for row in u.iter_mut() {
                row.swap(k, k - 1);
            }
            recompute(&b, &mut mu, &mut bstar_norm2);
            k = k.max(2) - 1;
        }
    }

    Reduced {
        basis: DMatrix::from_columns(&b),
        transform: u,
    }
}

/// A nonzero lattice vector with its coordinates in the original basis.
/// Enumeration returns one representative per +- pair (lexicographically
/// positive in the reduced coordinates).
#[derive(Debug, Clone)]
pub struct ShortVector {
    pub coords: Vec<i64>,
    pub vector: DVector<f64>,
    pub norm: f64,
}

/// All lattice vectors of norm at most `radius`, up to sign. Errors with a
/// resource report when more than `max_vectors` would be produced.
pub fn enumerate_short_vectors(
    x: &Lattice,
    radius: f64,
    max_vectors: usize,
) -> Result<Vec<ShortVector>> {
    let reduced = lll(x.basis(), 0.99);
    enumerate_with_reduced(x, &reduced, radius, max_vectors)
}

fn enumerate_with_reduced(
    x: &Lattice,
    reduced: &Reduced,
    radius: f64,
    max_vectors: usize,
) -> Result<Vec<ShortVector>> {
    let d = reduced.basis.ncols();
    // Gram-Schmidt data of the reduced basis
    let mut mu = vec![vec![0.0; d]; d];
    let mut bn2 = vec![0.0; d];
    {
        let mut bstar: Vec<DVector<f64>> = Vec::with_capacity(d);
        for i in 0..d {
            let mut v = reduced.basis.column(i).into_owned();
            for j in 0..i {
                mu[i][j] = if bn2[j] == 0.0 {
                    0.0
                } else {
                    reduced.basis.column(i).dot(&bstar[j]) / bn2[j]
                };
                v -= &bstar[j] * mu[i][j];
            }
            bn2[i] = v.norm_squared();
            bstar.push(v);
        }
    }
    if bn2.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::validation(
            "degenerate basis in short-vector enumeration",
        ));
    }

    let r2 = radius * radius * (1.0 + 1e-12);
    let mut out: Vec<ShortVector> = Vec::new();
    let mut z = vec![0i64; d];

    // depth-first over coordinates z[d-1] .. z[0]
    fn descend(
        level: isize,
        remaining: f64,
        z: &mut Vec<i64>,
        mu: &[Vec<f64>],
        bn2: &[f64],
        out: &mut Vec<(Vec<i64>, f64)>,
        max_vectors: usize,
        r2: f64,
    ) -> Result<()> {
        if level < 0 {
            if z.iter().any(|&c| c != 0) {
                // keep the lexicographically positive representative
                let leading = z.iter().rev().find(|&&c| c != 0).copied().unwrap_or(0);
                if leading > 0 {
                    if out.len() >= max_vectors {
                        return Err(Error::resource(
                            "short-vector enumeration",
                            format!("{max_vectors} vectors"),
                        ));
                    }
                    out.push((z.clone(), r2 - remaining));
                }
            }
            return Ok(());
        }
        let i = level as usize;
        let center: f64 = (i + 1..z.len()).map(|j| mu[j][i] * z[j] as f64).sum();
        let half_width = (remaining / bn2[i]).sqrt();
        let lo = (-center - half_width).ceil() as i64;
        let hi = (-center + half_width).floor() as i64;
        for zi in lo..=hi {
            let w = zi as f64 + center;
            let used = w * w * bn2[i];
            if used <= remaining {
                z[i] = zi;
                descend(level - 1, remaining - used, z, mu, bn2, out, max_vectors, r2)?;
            }
        }
        z[i] = 0;
        Ok(())
    }

    let mut raw: Vec<(Vec<i64>, f64)> = Vec::new();
    descend(
        d as isize - 1,
        r2,
        &mut z,
        &mu,
        &bn2,
        &mut raw,
        max_vectors,
        r2,
    )?;

    for (zr, _) in raw {
        // coordinates in the original basis: transform * z_reduced
        let mut coords = vec![0i64; d];
        for (i, c) in coords.iter_mut().enumerate() {
            let mut acc: i128 = 0;
            for (j, &zj) in zr.iter().enumerate() {
                acc += reduced.transform[i][j] * zj as i128;
            }
            *c = i64::try_from(acc)
                .map_err(|_| Error::resource("coordinate overflow in enumeration", acc))?;
        }
        let vector = x.vector(&coords);
        let norm = vector.norm();
        if norm <= radius * (1.0 + 1e-9) {
            out.push(ShortVector {
                coords,
                vector,
                norm,
            });
        }
    }
    out.sort_by(|a, b| {
        a.norm
            .partial_cmp(&b.norm)
            .unwrap()
            .then_with(|| a.coords.cmp(&b.coords))
    });
    Ok(out)
}

/// The first `count` successive minima with witness vectors, found by
/// escalating the enumeration radius until enough independent vectors
/// appear.
#[derive(Debug, Clone)]
pub struct Minima {
    pub values: Vec<f64>,
    pub witnesses: Vec<ShortVector>,
}

pub fn successive_minima(x: &Lattice, count: usize, max_vectors: usize) -> Result<Minima> {
    let d = x.dims().d();
    assert!(count >= 1 && count <= d);
    let reduced = lll(x.basis(), 0.99);
    let mut radius = reduced
        .basis
        .column_iter()
        .map(|c| c.norm())
        .fold(f64::INFINITY, f64::min)
        .max(1e-300);
    for _attempt in 0..64 {
        let vectors = enumerate_with_reduced(x, &reduced, radius, max_vectors)?;
        if let Some(minima) = greedy_independent(&vectors, count) {
            return Ok(minima);
        }
        radius *= 1.8;
    }
    Err(Error::resource(
        "successive minima radius escalation",
        radius,
    ))
}

fn greedy_independent(sorted: &[ShortVector], count: usize) -> Option<Minima> {
    let mut chosen: Vec<&ShortVector> = Vec::with_capacity(count);
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for cand in sorted {
        let mut v = cand.vector.clone();
        for b in &ortho {
            let denom = b.norm_squared();
            v -= b * (cand.vector.dot(b) / denom);
        }
        // integer coordinates make genuine dependence an exact zero up to
        // float noise; the relative threshold separates the two regimes
        if v.norm_squared() > 1e-24 * cand.vector.norm_squared().max(1e-300) {
            ortho.push(v);
            chosen.push(cand);
            if chosen.len() == count {
                return Some(Minima {
                    values: chosen.iter().map(|s| s.norm).collect(),
                    witnesses: chosen.into_iter().cloned().collect(),
                });
            }
        }
    }
    None
}
