//! The flow and horospherical elements, their action on unimodular
//! lattices, and exact operator norms of the flow on exterior powers.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::dims::Dimensions;
use crate::error::{Error, Result};

/// Unimodularity tolerance on construction and after every action.
pub const UNIMODULAR_TOL: f64 = 1e-9;

/// A unimodular lattice given by an explicit column basis. No reduction is
/// imposed on construction; `act` is a pure matrix product with a
/// determinant drift check.
#[derive(Debug, Clone)]
pub struct Lattice {
    basis: DMatrix<f64>,
    dims: Dimensions,
}

impl Lattice {
    pub fn new(dims: Dimensions, basis: DMatrix<f64>) -> Result<Self> {
        let d = dims.d();
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::validation(format!(
                "basis must be {d}x{d}, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let det = basis.determinant();
        if !det.is_finite() || (det - 1.0).abs() > UNIMODULAR_TOL {
            return Err(Error::validation(format!(
                "basis determinant {det} is not 1 within {UNIMODULAR_TOL}"
            )));
        }
        Ok(Lattice { basis, dims })
    }

    /// The standard integer lattice Z^d.
    pub fn standard(dims: Dimensions) -> Self {
        let d = dims.d();
        Lattice::new(dims, DMatrix::identity(d, d)).expect("identity basis is unimodular")
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Exact rational basis when available (all entries rational with
    /// denominator at most 10^6). Reconstructed on demand; oracles use this
    /// path for exact covolume arithmetic.
    pub fn rational_basis(&self) -> Option<Vec<Vec<BigRational>>> {
        rational_reconstruction(&self.basis, 1_000_000)
    }

    /// The lattice vector with the given integer coordinates.
    pub fn vector(&self, coords: &[i64]) -> DVector<f64> {
        let z = DVector::from_iterator(coords.len(), coords.iter().map(|&c| c as f64));
        &self.basis * z
    }

    /// The dual lattice, with basis the inverse transpose. Unimodular when
    /// the original is.
    pub fn dual(&self) -> Result<Lattice> {
        let inv = self
            .basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::validation("basis is numerically singular"))?;
        Lattice::new(self.dims, inv.transpose())
    }
}

/// The diagonal flow at time t: m entries e^{nt} followed by n entries
/// e^{-mt}; determinant one for every t.
pub fn diagonal_flow(dims: Dimensions, t: f64) -> DMatrix<f64> {
    let (m, n, d) = (dims.m(), dims.n(), dims.d());
    let mut g = DMatrix::zeros(d, d);
    let expand = (n as f64 * t).exp();
    let contract = (-(m as f64) * t).exp();
    for j in 0..m {
        g[(j, j)] = expand;
    }
    for j in m..d {
        g[(j, j)] = contract;
    }
    g
}

/// Diagonal entries of the flow without materializing the matrix.
pub fn flow_diagonal(dims: Dimensions, t: f64) -> Vec<f64> {
    let (m, n, d) = (dims.m(), dims.n(), dims.d());
    let expand = (n as f64 * t).exp();
    let contract = (-(m as f64) * t).exp();
    (0..d)
        .map(|j| if j < m { expand } else { contract })
        .collect()
}

/// The horospherical element with offset s: identity blocks with s in the
/// top-right m-by-n corner.
pub fn horospherical(dims: Dimensions, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n, d) = (dims.m(), dims.n(), dims.d());
    if s.nrows() != m || s.ncols() != n {
        return Err(Error::validation(format!(
            "offset must be {m}x{n}, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("offset entries must be finite"));
    }
    let mut u = DMatrix::identity(d, d);
    for r in 0..m {
        for c in 0..n {
            u[(r, m + c)] = s[(r, c)];
        }
    }
    Ok(u)
}

/// Left translation of a lattice by a unimodular matrix.
pub fn act(g: &DMatrix<f64>, x: &Lattice) -> Result<Lattice> {
    let det = g.determinant();
    if (det - 1.0).abs() > UNIMODULAR_TOL {
        return Err(Error::validation(format!(
            "acting matrix has determinant {det}, not 1 within {UNIMODULAR_TOL}"
        )));
    }
    Lattice::new(x.dims(), g * x.basis())
}

/// Convenience: the orbit point g_t u_s x.
pub fn flow_point(x: &Lattice, s: &DMatrix<f64>, t: f64) -> Result<Lattice> {
    let u = horospherical(x.dims(), s)?;
    let g = diagonal_flow(x.dims(), t);
    act(&(g * u), x)
}

/// The offset s with g_t u_{s_N} ... g_t u_{s_1} = g_{Nt} u_s, namely
/// sum_k e^{-(k-1)(m+n)t} s_k.
pub fn compose_steps(dims: Dimensions, t: f64, offsets: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if offsets.is_empty() {
        return Err(Error::validation("compose_steps needs at least one step"));
    }
    let (m, n) = (dims.m(), dims.n());
    let mut acc = DMatrix::zeros(m, n);
    let rate = -((dims.d()) as f64) * t;
    for (k, s) in offsets.iter().enumerate() {
        if s.nrows() != m || s.ncols() != n {
            return Err(Error::validation("offset shape mismatch"));
        }
        acc += s * (rate * k as f64).exp();
    }
    Ok(acc)
}

/// Operator norm of the induced flow action on grade-j multivectors: the
/// product of the j largest singular values, which for the diagonal flow is
/// a product of diagonal entries.
pub fn wedge_operator_norm(dims: Dimensions, t: f64, j: usize) -> Result<f64> {
    let d = dims.d();
    if j < 1 || j > d - 1 {
        return Err(Error::validation(format!(
            "grade must be between 1 and {}, got {j}",
            d - 1
        )));
    }
    let mut diag = flow_diagonal(dims, t);
    diag.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(diag[..j].iter().product())
}

/// Two-sided bound for the flow on all intermediate grades:
/// max over j of the grade-j operator norm. Equals e^{mn|t|}.
pub fn flow_norm_bound(dims: Dimensions, t: f64) -> f64 {
    (1..dims.d())
        .map(|j| wedge_operator_norm(dims, t, j).expect("grade in range"))
        .fold(1.0, f64::max)
}

/// Plain-text lattice format: first line "m n", then d rows holding the
/// transpose of the basis (row r = basis column r). Rejects non-unimodular
/// input.
pub fn write_lattice(x: &Lattice) -> String {
    let d = x.dims().d();
    let mut out = format!("{} {}\n", x.dims().m(), x.dims().n());
    for c in 0..d {
        let row: Vec<String> = (0..d)
            .map(|r| crate::stats::fmt_f64(x.basis()[(r, c)]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_lattice(text: &str) -> Result<Lattice> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty lattice file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Parse("first line must be \"m n\"".into()));
    }
    let m: usize = parts[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad m: {}", parts[0])))?;
    let n: usize = parts[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad n: {}", parts[1])))?;
    let dims = Dimensions::new(m, n)?;
    let d = dims.d();
    let mut basis = DMatrix::zeros(d, d);
    for c in 0..d {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {d} basis rows")))?;
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != d {
            return Err(Error::Parse(format!(
                "row {c} has {} entries, expected {d}",
                entries.len()
            )));
        }
        for r in 0..d {
            basis[(r, c)] = entries[r]
                .parse()
                .map_err(|_| Error::Parse(format!("bad entry: {}", entries[r])))?;
        }
    }
    Lattice::new(dims, basis)
}

/// Continued-fraction reconstruction of each entry as p/q with q bounded.
/// Returns None unless every entry reconstructs to within 1e-9 absolute.
fn rational_reconstruction(
    basis: &DMatrix<f64>,
    max_den: i64,
) -> Option<Vec<Vec<BigRational>>> {
    let mut rows = Vec::with_capacity(basis.nrows());
    for r in 0..basis.nrows() {
        let mut row = Vec::with_capacity(basis.ncols());
        for c in 0..basis.ncols() {
            row.push(to_rational(basis[(r, c)], max_den)?);
        }
        rows.push(row);
    }
    Some(rows)
}

fn to_rational(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    // A genuine rational stored in f64 sits within a rounding error of its
    // value; anything farther than a few ulps is treated as irrational.
    let tol = 16.0 * f64::EPSILON * x.abs().max(1.0);
    let accept = |p: i64, q: i64| (p as f64 / q as f64 - x).abs() <= tol;
    // Continued fraction expansion with denominator cap.
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, x.floor() as i64, 1i64);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if accept(p1, q1) {
            return Some(BigRational::new(BigInt::from(p1), BigInt::from(q1)));
        }
        if frac.abs() < 1e-15 {
            break;
        }
        let a = (1.0 / frac).floor();
        if !a.is_finite() || a >= max_den as f64 {
            break;
        }
        frac = 1.0 / frac - a;
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    if accept(p1, q1) {
        Some(BigRational::new(BigInt::from(p1), BigInt::from(q1)))
    } else {
        None
    }
}

/// Exact covolume squared of the sublattice spanned by the given integer
/// coordinate columns, computed with the rational basis.
pub fn exact_covolume_sq(
    rational_basis: &[Vec<BigRational>],
    coords: &[Vec<BigInt>],
) -> BigRational {
    let d = rational_basis.len();
    let i = coords.len();
    // columns of B * Z
    let mut cols: Vec<Vec<BigRational>> = Vec::with_capacity(i);
    for z in coords {
        let mut col = vec![BigRational::zero(); d];
        for (r, entry) in col.iter_mut().enumerate() {
            for (k, zk) in z.iter().enumerate() {
                *entry += &rational_basis[r][k] * BigRational::from_integer(zk.clone());
            }
        }
        cols.push(col);
    }
    // Gram matrix and its determinant by fraction-free elimination.
    let mut gram = vec![vec![BigRational::zero(); i]; i];
    for a in 0..i {
        for b in 0..i {
            let mut acc = BigRational::zero();
            for r in 0..d {
                acc += &cols[a][r] * &cols[b][r];
            }
            gram[a][b] = acc;
        }
    }
    rational_det(gram)
}

fn rational_det(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero());
        let Some(pivot) = pivot else {
            return BigRational::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let pv = m[col][col].clone();
        det *= &pv;
        for r in (col + 1)..n {
            let factor = &m[r][col] / &pv;
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn dims(m: usize, n: usize) -> Dimensions {
        Dimensions::new(m, n).unwrap()
    }

    fn random_offset(dims: Dimensions, rng: &mut StdRng) -> DMatrix<f64> {
        DMatrix::from_fn(dims.m(), dims.n(), |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn diagonal_flow_examples() {
        let g = diagonal_flow(dims(1, 1), 1.0);
        assert_relative_eq!(g[(0, 0)], std::f64::consts::E, max_relative = 1e-15);
        assert_relative_eq!(g[(1, 1)], 1.0 / std::f64::consts::E, max_relative = 1e-15);

        let g = diagonal_flow(dims(2, 1), 0.5);
        assert_relative_eq!(g[(0, 0)], 0.5f64.exp());
        assert_relative_eq!(g[(1, 1)], 0.5f64.exp());
        assert_relative_eq!(g[(2, 2)], (-1.0f64).exp());

        let id = diagonal_flow(dims(3, 2), 0.0);
        assert_eq!(id, DMatrix::identity(5, 5));
    }

    #[test]
    fn flow_determinant_drift() {
        for (m, n) in [(1, 1), (2, 1), (1, 2), (2, 3), (3, 2)] {
            for t in [0.1, 0.5, 1.0, 2.5, 4.0] {
                let det = diagonal_flow(dims(m, n), t).determinant();
                assert!((det - 1.0).abs() <= 1e-12, "det drift {det} at {m},{n},{t}");
            }
        }
    }

    #[test]
    fn horospherical_examples() {
        let z = DMatrix::zeros(1, 1);
        assert_eq!(
            horospherical(dims(1, 1), &z).unwrap(),
            DMatrix::identity(2, 2)
        );
        let s = DMatrix::from_element(1, 1, 0.5);
        let u = horospherical(dims(1, 1), &s).unwrap();
        assert_eq!(u[(0, 1)], 0.5);
        assert_eq!(u[(0, 0)], 1.0);
        assert_eq!(u[(1, 0)], 0.0);
        assert_eq!(u[(1, 1)], 1.0);
        // shape mismatch is rejected
        assert!(horospherical(dims(2, 1), &s).is_err());
    }

    #[test]
    fn horospherical_group_law() {
        let mut rng = StdRng::seed_from_u64(3);
        for (m, n) in [(1, 1), (2, 1), (2, 3)] {
            let dm = dims(m, n);
            for _ in 0..20 {
                let s1 = random_offset(dm, &mut rng);
                let s2 = random_offset(dm, &mut rng);
                let lhs = horospherical(dm, &s1).unwrap() * horospherical(dm, &s2).unwrap();
                let rhs = horospherical(dm, &(&s1 + &s2)).unwrap();
                let diff = (&lhs - &rhs).norm() / rhs.norm();
                assert!(diff <= 1e-12);
            }
        }
    }

    #[test]
    fn flow_group_law_and_commutation() {
        let mut rng = StdRng::seed_from_u64(4);
        for (m, n) in [(1, 1), (2, 1), (1, 2)] {
            let dm = dims(m, n);
            for _ in 0..20 {
                let t1: f64 = rng.gen_range(0.0..2.0);
                let t2: f64 = rng.gen_range(0.0..2.0);
                let lhs = diagonal_flow(dm, t1) * diagonal_flow(dm, t2);
                let rhs = diagonal_flow(dm, t1 + t2);
                assert!((&lhs - &rhs).norm() / rhs.norm() <= 1e-12);

                // g_t u_s g_{-t} = u_{e^{(m+n)t} s}
                let t: f64 = rng.gen_range(0.0..2.0);
                let s = random_offset(dm, &mut rng);
                let conj =
                    diagonal_flow(dm, t) * horospherical(dm, &s).unwrap() * diagonal_flow(dm, -t);
                let expanded = (dm.d() as f64 * t).exp();
                let expect = horospherical(dm, &(&s * expanded)).unwrap();
                assert!((&conj - &expect).norm() / expect.norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn act_examples() {
        let x = Lattice::standard(dims(1, 1));
        let id = DMatrix::identity(2, 2);
        let same = act(&id, &x).unwrap();
        assert_eq!(same.basis(), x.basis());

        // g_1 u_{1/2} Z^2 contains (0, 2/e), the image of (-1, 2)
        let s = DMatrix::from_element(1, 1, 0.5);
        let g = diagonal_flow(dims(1, 1), 1.0) * horospherical(dims(1, 1), &s).unwrap();
        let y = act(&g, &x).unwrap();
        let v = y.vector(&[-1, 2]);
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(v[1], 2.0 / std::f64::consts::E, max_relative = 1e-12);
    }

    #[test]
    fn act_preserves_determinant() {
        let mut rng = StdRng::seed_from_u64(6);
        let dm = dims(2, 1);
        let x = Lattice::standard(dm);
        for _ in 0..100 {
            let s = random_offset(dm, &mut rng);
            let t: f64 = rng.gen_range(0.0..2.0);
            let g = diagonal_flow(dm, t) * horospherical(dm, &s).unwrap();
            let y = act(&g, &x).unwrap();
            assert!((y.basis().determinant() - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn act_rejects_non_unimodular() {
        let x = Lattice::standard(dims(1, 1));
        let g = DMatrix::from_diagonal_element(2, 2, 2.0);
        assert!(act(&g, &x).is_err());
    }

    #[test]
    fn compose_steps_examples() {
        let dm = dims(1, 1);
        let s1 = DMatrix::from_element(1, 1, 0.7);
        assert_eq!(
            compose_steps(dm, 1.0, std::slice::from_ref(&s1)).unwrap()[(0, 0)],
            0.7
        );
        let s2 = DMatrix::from_element(1, 1, -0.3);
        let got = compose_steps(dm, 1.0, &[s1.clone(), s2.clone()]).unwrap();
        assert_relative_eq!(
            got[(0, 0)],
            0.7 - 0.3 * (-2.0f64).exp(),
            max_relative = 1e-15
        );
        assert!(compose_steps(dm, 1.0, &[]).is_err());
    }

    #[test]
    fn composed_product_identity() {
        let mut rng = StdRng::seed_from_u64(8);
        for (m, n) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            let dm = dims(m, n);
            for _ in 0..40 {
                let steps = rng.gen_range(1..=8);
                let t: f64 = rng.gen_range(0.3..2.5);
                let offsets: Vec<_> = (0..steps).map(|_| random_offset(dm, &mut rng)).collect();
                let mut product = DMatrix::identity(dm.d(), dm.d());
                for s in &offsets {
                    product = diagonal_flow(dm, t) * horospherical(dm, s).unwrap() * product;
                }
                let s = compose_steps(dm, t, &offsets).unwrap();
                let rhs =
                    diagonal_flow(dm, steps as f64 * t) * horospherical(dm, &s).unwrap();
                let rel = (&product - &rhs).norm() / rhs.norm();
                assert!(rel <= 1e-10, "relative error {rel}");
            }
        }
    }

    #[test]
    fn wedge_norm_examples() {
        for j in 1..=2 {
            assert_relative_eq!(wedge_operator_norm(dims(2, 1), 0.0, j).unwrap(), 1.0);
        }
        assert_relative_eq!(
            wedge_operator_norm(dims(1, 1), 1.0, 1).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-15
        );
        // max over grades at (2,1), t=1 is e^2 = e^{mnt}
        assert_relative_eq!(
            flow_norm_bound(dims(2, 1), 1.0),
            (2.0f64).exp(),
            max_relative = 1e-15
        );
        assert!(wedge_operator_norm(dims(1, 1), 1.0, 2).is_err());
    }

    #[test]
    fn wedge_norm_matches_singular_values() {
        // Oracle: product of the j largest singular values from a generic SVD.
        for (m, n) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            let dm = dims(m, n);
            for t in [0.25, 1.0, 1.7] {
                let g = diagonal_flow(dm, t);
                let mut sv: Vec<f64> = g.svd(false, false).singular_values.iter().copied().collect();
                sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
                for j in 1..dm.d() {
                    let expect: f64 = sv[..j].iter().product();
                    let got = wedge_operator_norm(dm, t, j).unwrap();
                    assert_relative_eq!(got, expect, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn lattice_file_round_trip() {
        let dm = dims(2, 1);
        let s = DMatrix::from_fn(2, 1, |r, _| 0.25 + r as f64 * 0.5);
        let g = diagonal_flow(dm, 0.75) * horospherical(dm, &s).unwrap();
        let x = act(&g, &Lattice::standard(dm)).unwrap();
        let text = write_lattice(&x);
        let back = parse_lattice(&text).unwrap();
        assert_eq!(back.basis(), x.basis());
    }

    #[test]
    fn parser_rejects_non_unimodular() {
        let text = "1 1\n2 0\n0 1\n";
        assert!(parse_lattice(text).is_err());
    }

    #[test]
    fn rational_basis_detected() {
        let x = Lattice::standard(dims(1, 1));
        assert!(x.rational_basis().is_some());
        let s = DMatrix::from_element(1, 1, 0.5);
        let u = horospherical(dims(1, 1), &s).unwrap();
        let y = act(&u, &x).unwrap();
        assert!(y.rational_basis().is_some());
        // an irrational push loses the exact path
        let g = diagonal_flow(dims(1, 1), 1.0);
        let z = act(&g, &x).unwrap();
        assert!(z.rational_basis().is_none());
    }

    #[test]
    fn exact_covolume_of_plane_in_z3() {
        use num_bigint::BigInt;
        let x = Lattice::standard(dims(2, 1));
        let rb = x.rational_basis().unwrap();
        let coords = vec![
            vec![BigInt::from(1), BigInt::from(0), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(1), BigInt::from(1)],
        ];
        let cov2 = exact_covolume_sq(&rb, &coords);
        assert_eq!(cov2, BigRational::from_integer(BigInt::from(2)));
    }
}
