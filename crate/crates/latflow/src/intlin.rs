//! Exact integer linear algebra on small matrices: Smith diagonalization
//! with transform tracking, integer kernels, saturation of subgroups, and
//! exact Gram determinants. Everything runs on BigInt, so there is no
//! overflow to guard at desk scale.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type IMatrix = Vec<Vec<BigInt>>;

pub fn from_i64(rows: &[Vec<i64>]) -> IMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

fn zeros(r: usize, c: usize) -> IMatrix {
    vec![vec![BigInt::zero(); c]; r]
}

fn identity(n: usize) -> IMatrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = BigInt::one();
    }
    m
}

/// Diagonalization U A V = D by elementary operations. `u_inv` accumulates
/// the inverse of the row transform, `v` the column transform; both are
/// unimodular. The diagonal is not normalized to the divisibility chain,
/// which none of the callers need.
pub struct Diagonalization {
    pub diag: Vec<BigInt>,
    pub rank: usize,
    pub u_inv: IMatrix,
    pub v: IMatrix,
}

pub fn diagonalize(a: &IMatrix) -> Diagonalization {
    let r = a.len();
    let c = if r == 0 { 0 } else { a[0].len() };
    let mut m = a.clone();
    let mut u_inv = identity(r);
    let mut v = identity(c);

    let mut k = 0usize;
    while k < r.min(c) {
        // pivot: smallest nonzero absolute value in the trailing block
        let mut pivot: Option<(usize, usize)> = None;
        for i in k..r {
            for j in k..c {
                if !m[i][j].is_zero()
                    && pivot
                        .map(|(pi, pj)| m[i][j].abs() < m[pi][pj].abs())
                        .unwrap_or(true)
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        swap_rows(&mut m, &mut u_inv, k, pi);
        swap_cols(&mut m, &mut v, k, pj);

        loop {
            let mut clean = true;
            for i in (k + 1)..r {
                if !m[i][k].is_zero() {
                    let q = rounded_div(&m[i][k], &m[k][k]);
                    if !q.is_zero() {
                        row_sub(&mut m, &mut u_inv, i, k, &q);
                    }
                    if !m[i][k].is_zero() {
                        // remainder became the smaller pivot
                        swap_rows(&mut m, &mut u_inv, k, i);
                        clean = false;
                    }
                }
            }
            for j in (k + 1)..c {
                if !m[k][j].is_zero() {
                    let q = rounded_div(&m[k][j], &m[k][k]);
                    if !q.is_zero() {
                        col_sub(&mut m, &mut v, j, k, &q);
                    }
                    if !m[k][j].is_zero() {
                        swap_cols(&mut m, &mut v, k, j);
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        k += 1;
    }

    let mut diag = Vec::with_capacity(r.min(c));
    let mut rank = 0;
    for i in 0..r.min(c) {
        if !m[i][i].is_zero() {
            rank += 1;
        }
        diag.push(m[i][i].clone());
    }
    Diagonalization {
        diag,
        rank,
        u_inv,
        v,
    }
}

fn rounded_div(a: &BigInt, b: &BigInt) -> BigInt {
    // nearest-integer division keeps remainders at most |b|/2
    let (q, rem) = a.div_rem(b);
    let two_rem = rem.abs() * 2;
    if two_rem > b.abs() {
        if (rem.sign() == b.sign()) || rem.is_zero() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

fn swap_rows(m: &mut IMatrix, u_inv: &mut IMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    m.swap(a, b);
    for row in u_inv.iter_mut() {
        row.swap(a, b);
    }
}

/// row_a -= q * row_b on m; the inverse op acts on u_inv columns.
fn row_sub(m: &mut IMatrix, u_inv: &mut IMatrix, a: usize, b: usize, q: &BigInt) {
    let c = m[0].len();
    for j in 0..c {
        let sub = q * &m[b][j];
        m[a][j] -= sub;
    }
    // u_inv <- u_inv * E^{-1}, E^{-1} adds q*col_a to col_b
    for row in u_inv.iter_mut() {
        let add = q * &row[a];
        row[b] += add;
    }
}

fn swap_cols(m: &mut IMatrix, v: &mut IMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for row in m.iter_mut() {
        row.swap(a, b);
    }
    for row in v.iter_mut() {
        row.swap(a, b);
    }
}

/// col_a -= q * col_b on m; v tracks the same column op.
fn col_sub(m: &mut IMatrix, v: &mut IMatrix, a: usize, b: usize, q: &BigInt) {
    for row in m.iter_mut() {
        let sub = q * &row[b];
        row[a] -= sub;
    }
    for row in v.iter_mut() {
        let sub = q * &row[b];
        row[a] -= sub;
    }
}

/// Basis of the integer kernel of `a`; the result is saturated. Each output
/// vector has length ncols(a).
pub fn kernel_basis(a: &IMatrix) -> Vec<Vec<BigInt>> {
    let c = if a.is_empty() { 0 } else { a[0].len() };
    let dec = diagonalize(a);
    let mut out = Vec::new();
    for j in dec.rank..c {
        let col: Vec<BigInt> = (0..c).map(|i| dec.v[i][j].clone()).collect();
        out.push(col);
    }
    out
}

/// Saturation of the subgroup generated by the given columns in Z^d: the
/// intersection of its rational span with Z^d. Input and output are column
/// vectors of length d.
pub fn saturate(cols: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    if cols.is_empty() {
        return Vec::new();
    }
    let d = cols[0].len();
    let i = cols.len();
    let mut m = zeros(d, i);
    for (j, col) in cols.iter().enumerate() {
        for r in 0..d {
            m[r][j] = col[r].clone();
        }
    }
    let dec = diagonalize(&m);
    // span of the columns = span of the first `rank` columns of U^{-1}
    let mut out = Vec::with_capacity(dec.rank);
    for j in 0..dec.rank {
        let col: Vec<BigInt> = (0..d).map(|r| dec.u_inv[r][j].clone()).collect();
        out.push(col);
    }
    out
}

/// A set of columns generates a saturated (primitive) subgroup iff the
/// diagonalized form has all units on the diagonal.
pub fn is_primitive(cols: &[Vec<BigInt>]) -> bool {
    if cols.is_empty() {
        return true;
    }
    let d = cols[0].len();
    let mut m = zeros(d, cols.len());
    for (j, col) in cols.iter().enumerate() {
        for r in 0..d {
            m[r][j] = col[r].clone();
        }
    }
    let dec = diagonalize(&m);
    dec.rank == cols.len() && dec.diag[..dec.rank].iter().all(|x| x.abs().is_one())
}

/// Intersection of the subgroups generated by `a` and `b` inside Z^d,
/// returned as a saturated basis (empty when the spans meet trivially).
pub fn intersect_subgroups(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let d = a[0].len();
    let (ia, ib) = (a.len(), b.len());
    let mut stacked = zeros(d, ia + ib);
    for (j, col) in a.iter().enumerate() {
        for r in 0..d {
            stacked[r][j] = col[r].clone();
        }
    }
    for (j, col) in b.iter().enumerate() {
        for r in 0..d {
            stacked[r][ia + j] = -col[r].clone();
        }
    }
    let kernel = kernel_basis(&stacked);
    let mut vectors = Vec::new();
    for k in kernel {
        let mut vec = vec![BigInt::zero(); d];
        for (j, col) in a.iter().enumerate() {
            for r in 0..d {
                vec[r] += &col[r] * &k[j];
            }
        }
        if vec.iter().any(|x| !x.is_zero()) {
            vectors.push(vec);
        }
    }
    saturate(&vectors)
}

/// Saturation of the subgroup generated by both inputs together.
pub fn sum_subgroups(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut all: Vec<Vec<BigInt>> = a.to_vec();
    all.extend_from_slice(b);
    saturate(&all)
}

/// Exact Gram determinant of integer columns (squared covolume of the
/// subgroup they generate).
pub fn gram_det(cols: &[Vec<BigInt>]) -> BigInt {
    let i = cols.len();
    if i == 0 {
        return BigInt::one();
    }
    let mut gram = zeros(i, i);
    for a in 0..i {
        for b in 0..i {
            let mut acc = BigInt::zero();
            for r in 0..cols[a].len() {
                acc += &cols[a][r] * &cols[b][r];
            }
            gram[a][b] = acc;
        }
    }
    bareiss_det(gram)
}

/// Fraction-free determinant (Bareiss).
fn bareiss_det(mut m: IMatrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let swap = (k + 1..n).find(|&r| !m[r][k].is_zero());
            match swap {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = num / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}
