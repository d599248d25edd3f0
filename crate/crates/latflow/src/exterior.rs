//! Exterior-power linear algebra on R^d: wedge products of vectors, the
//! induced action of matrices on grade-i multivectors, the Hodge star, and
//! the orthogonal projection onto the expanding coordinate block.
//!
//! Coefficients are dense over the i-element subsets of {0,..,d-1}. Subsets
//! are stored sorted ascending and ranked in colexicographic order:
//! rank(S) = sum_j C(S[j], j+1). This ranking is the serialization order of
//! the `coeffs` vector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binomial coefficient as usize; saturates are not needed at desk scale.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// All i-element subsets of {0,..,d-1} in colexicographic order.
pub fn subsets(d: usize, i: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(d, i));
    let mut current = Vec::with_capacity(i);
    // Colex order: recurse on the largest element last.
    fn rec(d: usize, i: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == i {
            out.push(current.clone());
            return;
        }
        let remaining = i - current.len();
        let top = current.last().map_or(0, |&x| x + 1);
        for next in top..d {
            current.push(next);
            rec(d, i, current, out);
            current.pop();
            let _ = remaining;
        }
    }
    rec(d, i, &mut current, &mut out);
    out.sort_by_key(|s| subset_rank(s));
    out
}

/// Colexicographic rank of a sorted subset.
pub fn subset_rank(subset: &[usize]) -> usize {
    subset
        .iter()
        .enumerate()
        .map(|(j, &s)| binomial(s, j + 1))
        .sum()
}

/// An element of the i-th exterior power of R^d with dense coefficients.
///
/// `decomposable` records whether the value is a wedge of vectors by
/// construction; operations that require decomposability check the flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiVector {
    d: usize,
    grade: usize,
    coeffs: Vec<f64>,
    #[serde(default)]
    decomposable: bool,
}

impl MultiVector {
    pub fn zero(d: usize, grade: usize) -> Self {
        MultiVector {
            d,
            grade,
            coeffs: vec![0.0; binomial(d, grade)],
            decomposable: true,
        }
    }

    /// Build from raw coefficients in colex subset order. Decomposability is
    /// unknown for a general coefficient vector, so the flag is cleared
    /// unless the grade forces it.
    pub fn from_coeffs(d: usize, grade: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != binomial(d, grade) {
            return Err(Error::validation(format!(
                "grade-{grade} multivector in dimension {d} needs {} coefficients, got {}",
                binomial(d, grade),
                coeffs.len()
            )));
        }
        // Grades 0, 1, d-1 and d consist entirely of decomposables.
        let decomposable = grade <= 1 || grade + 1 >= d;
        Ok(MultiVector {
            d,
            grade,
            coeffs,
            decomposable,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_decomposable(&self) -> bool {
        self.decomposable
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: f64) -> Self {
        MultiVector {
            d: self.d,
            grade: self.grade,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            decomposable: self.decomposable,
        }
    }

    pub fn sub(&self, other: &MultiVector) -> Result<Self> {
        if self.d != other.d || self.grade != other.grade {
            return Err(Error::validation("grade or dimension mismatch"));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        MultiVector::from_coeffs(self.d, self.grade, coeffs)
    }
}

/// Wedge product of `i` vectors in R^d. Coefficients are the i-by-i minors
/// of the matrix with the inputs as columns.
pub fn wedge(vectors: &[DVector<f64>]) -> Result<MultiVector> {
    if vectors.is_empty() {
        return Err(Error::validation("wedge of an empty list"));
    }
    let d = vectors[0].len();
    let i = vectors.len();
    if i > d {
        return Err(Error::validation(format!(
            "cannot wedge {i} vectors in dimension {d}"
        )));
    }
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::validation("wedge inputs must share a dimension"));
    }
    let mat = DMatrix::from_columns(vectors);
    let mut coeffs = Vec::with_capacity(binomial(d, i));
    for subset in subsets(d, i) {
        coeffs.push(minor(&mat, &subset));
    }
    Ok(MultiVector {
        d,
        grade: i,
        coeffs,
        decomposable: true,
    })
}

/// Determinant of the rows `rows` of a d-by-i matrix.
fn minor(mat: &DMatrix<f64>, rows: &[usize]) -> f64 {
    let i = rows.len();
    match i {
        1 => mat[(rows[0], 0)],
        2 => {
            mat[(rows[0], 0)] * mat[(rows[1], 1)] - mat[(rows[0], 1)] * mat[(rows[1], 0)]
        }
        3 => {
            let a = |r: usize, c: usize| mat[(rows[r], c)];
            a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
        }
        _ => {
            let sub = DMatrix::from_fn(i, i, |r, c| mat[(rows[r], c)]);
            sub.determinant()
        }
    }
}

/// The induced action of a d-by-d matrix on grade-i multivectors, i.e. the
/// i-th compound matrix applied to the coefficient vector.
pub fn induced_action(g: &DMatrix<f64>, v: &MultiVector) -> Result<MultiVector> {
    let d = v.d();
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::validation(format!(
            "matrix is {}x{}, multivector lives in dimension {d}",
            g.nrows(),
            g.ncols()
        )));
    }
    let i = v.grade();
    if i == 0 {
        return Ok(v.clone());
    }
    let subs = subsets(d, i);
    let mut coeffs = vec![0.0; subs.len()];
    // (Lambda^i g)[S,T] = det(g[S,T]); Cauchy-Binet makes this consistent
    // with acting on wedge factors.
    for (si, s) in subs.iter().enumerate() {
        let mut acc = 0.0;
        for (ti, t) in subs.iter().enumerate() {
            let c = v.coeffs[ti];
            if c != 0.0 {
                acc += compound_entry(g, s, t) * c;
            }
        }
        coeffs[si] = acc;
    }
    Ok(MultiVector {
        d,
        grade: i,
        coeffs,
        decomposable: v.decomposable,
    })
}

fn compound_entry(g: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let i = rows.len();
    match i {
        1 => g[(rows[0], cols[0])],
        2 => {
            g[(rows[0], cols[0])] * g[(rows[1], cols[1])]
                - g[(rows[0], cols[1])] * g[(rows[1], cols[0])]
        }
        _ => {
            let sub = DMatrix::from_fn(i, i, |r, c| g[(rows[r], cols[c])]);
            sub.determinant()
        }
    }
}

/// Fast path for diagonal matrices: scales each coefficient by the product
/// of the diagonal entries over its index subset.
pub fn induced_diagonal_action(diag: &[f64], v: &MultiVector) -> MultiVector {
    let subs = subsets(v.d(), v.grade());
    let coeffs = subs
        .iter()
        .zip(&v.coeffs)
        .map(|(s, c)| c * s.iter().map(|&j| diag[j]).product::<f64>())
        .collect();
    MultiVector {
        d: v.d,
        grade: v.grade,
        coeffs,
        decomposable: v.decomposable,
    }
}

/// Hodge star: basis subsets map to their signed complements, with the sign
/// of the permutation (S, S^c) of (0,..,d-1). Preserves norms.
pub fn hodge_star(v: &MultiVector) -> MultiVector {
    let d = v.d();
    let i = v.grade();
    let subs = subsets(d, i);
    let mut coeffs = vec![0.0; binomial(d, d - i)];
    for (si, s) in subs.iter().enumerate() {
        let complement: Vec<usize> = (0..d).filter(|j| !s.contains(j)).collect();
        let sign = permutation_sign(s, &complement);
        coeffs[subset_rank(&complement)] = sign * v.coeffs[si];
    }
    MultiVector {
        d,
        grade: d - i,
        coeffs,
        decomposable: v.decomposable,
    }
}

/// Sign of the permutation sending (0,..,d-1) to the concatenation (S, S^c):
/// parity of the number of pairs (a in S, b in S^c) with a > b.
fn permutation_sign(s: &[usize], complement: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for &a in s {
        for &b in complement {
            if a > b {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Orthogonal projection of a grade-i multivector onto the exterior power of
/// the expanding block: zeroes every coefficient whose subset meets
/// {m,..,d-1}. Returns the zero multivector when i > m.
pub fn unstable_projection(m: usize, v: &MultiVector) -> MultiVector {
    let subs = subsets(v.d(), v.grade());
    let coeffs = subs
        .iter()
        .zip(&v.coeffs)
        .map(|(s, c)| if s.iter().all(|&j| j < m) { *c } else { 0.0 })
        .collect();
    MultiVector {
        d: v.d,
        grade: v.grade,
        coeffs,
        decomposable: v.decomposable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice;
    use crate::Dimensions;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn gaussian_vec(d: usize, rng: &mut StdRng) -> DVector<f64> {
        DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
    }

    fn e(d: usize, j: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[j] = 1.0;
        v
    }

    #[test]
    fn subset_ranks_are_a_colex_bijection() {
        for d in 1..=8 {
            for i in 0..=d {
                let subs = subsets(d, i);
                assert_eq!(subs.len(), binomial(d, i));
                for (rank, s) in subs.iter().enumerate() {
                    assert_eq!(subset_rank(s), rank);
                }
            }
        }
    }

    #[test]
    fn wedge_of_basis_vectors() {
        // e0 ^ e1 in d=3: coefficient 1 on {0,1}, 0 elsewhere
        let w = wedge(&[e(3, 0), e(3, 1)]).unwrap();
        assert_eq!(w.coeffs()[subset_rank(&[0, 1])], 1.0);
        assert_eq!(w.coeffs()[subset_rank(&[0, 2])], 0.0);
        assert_eq!(w.coeffs()[subset_rank(&[1, 2])], 0.0);
    }

    #[test]
    fn wedge_of_repeated_vector_vanishes() {
        let mut rng = StdRng::seed_from_u64(5);
        let v = gaussian_vec(4, &mut rng);
        let w = wedge(&[v.clone(), v]).unwrap();
        assert_eq!(w.norm(), 0.0);
    }

    #[test]
    fn wedge_norm_matches_gram_determinant() {
        // Oracle: |v1 ^ .. ^ vi| = sqrt(det Gram(v1,..,vi))
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let d = rng.gen_range(2..=6);
            let i = rng.gen_range(1..=d);
            let vs: Vec<_> = (0..i).map(|_| gaussian_vec(d, &mut rng)).collect();
            let mat = DMatrix::from_columns(&vs);
            let gram = mat.transpose() * &mat;
            let expected = gram.determinant().max(0.0).sqrt();
            let got = wedge(&vs).unwrap().norm();
            assert_relative_eq!(got, expected, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn induced_action_identity() {
        let mut rng = StdRng::seed_from_u64(11);
        let vs: Vec<_> = (0..2).map(|_| gaussian_vec(4, &mut rng)).collect();
        let w = wedge(&vs).unwrap();
        let id = DMatrix::identity(4, 4);
        let moved = induced_action(&id, &w).unwrap();
        for (a, b) in w.coeffs().iter().zip(moved.coeffs()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn flow_scales_unstable_plane() {
        // m=2, n=1: the e0 ^ e1 plane scales by e^{2t}
        let dims = Dimensions::new(2, 1).unwrap();
        let t = 1.0;
        let g = lattice::diagonal_flow(dims, t);
        let w = wedge(&[e(3, 0), e(3, 1)]).unwrap();
        let moved = induced_action(&g, &w).unwrap();
        assert_relative_eq!(moved.norm(), (2.0 * t).exp(), max_relative = 1e-12);
    }

    #[test]
    fn induced_action_factors_through_wedge() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..50 {
            let d = rng.gen_range(2..=5);
            let i = rng.gen_range(1..=d);
            let vs: Vec<_> = (0..i).map(|_| gaussian_vec(d, &mut rng)).collect();
            let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let lhs = induced_action(&g, &wedge(&vs).unwrap()).unwrap();
            let gvs: Vec<_> = vs.iter().map(|v| &g * v).collect();
            let rhs = wedge(&gvs).unwrap();
            let diff = lhs.sub(&rhs).unwrap().norm();
            assert!(diff <= 1e-10 * rhs.norm().max(1.0), "diff={diff}");
        }
    }

    #[test]
    fn induced_action_is_multiplicative() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..30 {
            let d = rng.gen_range(2..=5);
            let i = rng.gen_range(1..=(d - 1));
            let vs: Vec<_> = (0..i).map(|_| gaussian_vec(d, &mut rng)).collect();
            let v = wedge(&vs).unwrap();
            let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let h = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let gh = &g * &h;
            let lhs = induced_action(&gh, &v).unwrap();
            let rhs = induced_action(&g, &induced_action(&h, &v).unwrap()).unwrap();
            let scale = lhs.norm().max(1e-30);
            assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn hodge_star_basis_example() {
        // d=3: *(e0 ^ e1) = e2
        let w = wedge(&[e(3, 0), e(3, 1)]).unwrap();
        let star = hodge_star(&w);
        assert_eq!(star.grade(), 1);
        assert_eq!(star.coeffs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn hodge_star_preserves_norm_and_involutes() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..100 {
            let d = rng.gen_range(2..=6);
            let i = rng.gen_range(0..=d);
            let coeffs: Vec<f64> = (0..binomial(d, i))
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let v = MultiVector::from_coeffs(d, i, coeffs).unwrap();
            let star = hodge_star(&v);
            assert_relative_eq!(star.norm(), v.norm(), max_relative = 1e-14);
            let twice = hodge_star(&star);
            let sign = if (i * (d - i)) % 2 == 0 { 1.0 } else { -1.0 };
            for (a, b) in twice.coeffs().iter().zip(v.coeffs()) {
                assert_eq!(*a, sign * b);
            }
        }
    }

    #[test]
    fn hodge_star_intertwines_the_flow() {
        // *(g_t v) = g_{-t} (*v) on decomposables
        let mut rng = StdRng::seed_from_u64(23);
        for &(m, n) in &[(1usize, 1usize), (2, 1), (1, 2), (2, 2)] {
            let dims = Dimensions::new(m, n).unwrap();
            let d = dims.d();
            for _ in 0..25 {
                let i = rng.gen_range(1..=(d - 1));
                let vs: Vec<_> = (0..i).map(|_| gaussian_vec(d, &mut rng)).collect();
                let v = wedge(&vs).unwrap();
                let t = rng.gen_range(0.1..2.0);
                let g_fwd = lattice::diagonal_flow(dims, t);
                let g_bwd = lattice::diagonal_flow(dims, -t);
                let lhs = hodge_star(&induced_action(&g_fwd, &v).unwrap());
                let rhs = induced_action(&g_bwd, &hodge_star(&v)).unwrap();
                let scale = lhs.norm().max(1e-30);
                assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn projection_examples() {
        // support on the expanding block is untouched
        let w = wedge(&[e(3, 0), e(3, 1)]).unwrap();
        let p = unstable_projection(2, &w);
        assert_eq!(p.coeffs(), w.coeffs());
        // d=3, m=2: e0 ^ e2 projects to zero
        let w2 = wedge(&[e(3, 0), e(3, 2)]).unwrap();
        assert_eq!(unstable_projection(2, &w2).norm(), 0.0);
    }

    #[test]
    fn projection_is_idempotent_and_contracting() {
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..50 {
            let d = rng.gen_range(2..=6);
            let i = rng.gen_range(1..=d);
            let m = rng.gen_range(1..d);
            let coeffs: Vec<f64> = (0..binomial(d, i))
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let v = MultiVector::from_coeffs(d, i, coeffs).unwrap();
            let p = unstable_projection(m, &v);
            let pp = unstable_projection(m, &p);
            assert_eq!(p.coeffs(), pp.coeffs());
            assert!(p.norm() <= v.norm() + 1e-15);
        }
    }

    #[test]
    fn projection_factors_through_wedge() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..50 {
            let d = rng.gen_range(2..=5);
            let m = rng.gen_range(1..d);
            let i = rng.gen_range(1..=m);
            let vs: Vec<_> = (0..i).map(|_| gaussian_vec(d, &mut rng)).collect();
            let lhs = unstable_projection(m, &wedge(&vs).unwrap());
            let projected: Vec<_> = vs
                .iter()
                .map(|v| {
                    let mut p = v.clone();
                    for j in m..d {
                        p[j] = 0.0;
                    }
                    p
                })
                .collect();
            let rhs = wedge(&projected).unwrap();
            let scale = rhs.norm().max(1e-12);
            assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-10 * scale);
        }
    }
}
