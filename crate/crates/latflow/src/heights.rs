//! Sublattice height functions and the composite height.
//!
//! `alpha(x, i)` is the maximal reciprocal covolume over rank-i subgroups of
//! the lattice. `build_height` turns a concave exponent profile into the
//! weighted combination whose flow average contracts outside a compact set;
//! `composite_height` evaluates that combination.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::intlin;
use crate::lattice::Lattice;
use crate::reduction::{self, ShortVector};

/// Enumeration budgets for the alpha search.
#[derive(Debug, Clone, Copy)]
pub struct EnumBudget {
    pub max_vectors: usize,
    pub max_tuples: usize,
}

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget {
            max_vectors: reduction::DEFAULT_MAX_VECTORS,
            max_tuples: 40_000_000,
        }
    }
}

/// Exponents attached to each intermediate rank: m/i for i <= m, else
/// n/(m+n-i).
pub fn beta_exponents(dims: Dimensions) -> Vec<f64> {
    let (m, n, d) = (dims.m() as f64, dims.n() as f64, dims.d());
    (1..d)
        .map(|i| {
            if i <= dims.m() {
                m / i as f64
            } else {
                n / (m + n - i as f64)
            }
        })
        .collect()
}

/// The concave profile whose reciprocals are the exponents: beta(0) =
/// beta(d) = 0 and beta(i) = 1/beta_i inside.
pub fn beta_profile(dims: Dimensions) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(beta_exponents(dims).iter().map(|b| 1.0 / b));
    out.push(0.0);
    out
}

/// Successive minima of the lattice with respect to the Euclidean ball.
pub fn minkowski_minima(x: &Lattice, budget: &EnumBudget) -> Result<Vec<f64>> {
    let d = x.dims().d();
    Ok(reduction::successive_minima(x, d, budget.max_vectors)?.values)
}

/// Volume of the Euclidean unit ball in dimension d.
pub fn ball_volume(d: usize) -> f64 {
    use statrs::function::gamma::gamma;
    std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Upper constant of Minkowski's second theorem for unimodular lattices:
/// the product of the minima lies in [1, 2^d / V_d].
pub fn minima_product_bound(d: usize) -> f64 {
    2.0f64.powi(d as i32) / ball_volume(d)
}

/// A computed height value with its minimizing sublattice.
#[derive(Debug, Clone)]
pub struct Alpha {
    pub value: f64,
    pub covolume: f64,
    /// Integer coordinates (in the lattice basis) of a saturated basis of
    /// the minimizer, one column per basis vector.
    pub witness_coords: Vec<Vec<i64>>,
    /// The witness basis as real columns.
    pub witness_basis: DMatrix<f64>,
}

/// Maximal reciprocal covolume over rank-i subgroups, with a witness.
///
/// Search: enumerate short vectors up to d * lambda_i, minimize the Gram
/// determinant over linearly independent i-tuples, then saturate the
/// minimizer by integer row reduction. Ranks above d/2 go through the dual
/// lattice, which maps the problem to rank d-i.
pub fn alpha(x: &Lattice, i: usize, budget: &EnumBudget) -> Result<Alpha> {
    let d = x.dims().d();
    if i < 1 || i > d - 1 {
        return Err(Error::validation(format!(
            "alpha index must be in 1..={}, got {i}",
            d - 1
        )));
    }
    if 2 * i > d {
        return alpha_via_dual(x, i, budget);
    }
    alpha_direct(x, i, budget)
}

fn alpha_direct(x: &Lattice, i: usize, budget: &EnumBudget) -> Result<Alpha> {
    let d = x.dims().d();
    let minima = reduction::successive_minima(x, i, budget.max_vectors)?;
    if i == 1 {
        let w = &minima.witnesses[0];
        return finish_witness(x, &[w.coords.clone()]);
    }

    let lambda_i = minima.values[i - 1];
    let r_full = d as f64 * lambda_i;
    // A Minkowski-reduced basis of the minimizer has vectors of norm at
    // most (2^i / V_i) * lambda_i (with a small slack above rank 4), so a
    // prefix of the enumeration covering that radius is enough to contain
    // a generating set.
    let slack = if i <= 4 {
        1.0
    } else {
        (5.0f64 / 4.0).powf((i as f64 - 4.0) / 2.0)
    };
    let r_needed = (2.0f64.powi(i as i32) / ball_volume(i) * slack * 1.05 * lambda_i).min(r_full);

    let vectors = match reduction::enumerate_short_vectors(x, r_full, budget.max_vectors) {
        Ok(v) => v,
        Err(Error::Resource { .. }) => {
            reduction::enumerate_short_vectors(x, r_needed, budget.max_vectors)?
        }
        Err(e) => return Err(e),
    };

    let mut count = vectors.len();
    while count > i && tuple_count(count, i) > budget.max_tuples as f64 {
        count -= 1;
    }
    if count < vectors.len() && vectors[count - 1].norm < r_needed {
        return Err(Error::resource(
            format!("alpha({i}) tuple search"),
            format!("{} tuples over {} vectors", budget.max_tuples, vectors.len()),
        ));
    }
    let candidates = &vectors[..count];

    let best = best_tuple(candidates, i).ok_or_else(|| {
        Error::validation(format!("no independent {i}-tuple found in enumeration"))
    })?;
    let coords: Vec<Vec<i64>> = best.1.iter().map(|&j| candidates[j].coords.clone()).collect();
    finish_witness(x, &coords)
}

fn tuple_count(v: usize, i: usize) -> f64 {
    let mut acc = 1.0f64;
    for j in 0..i {
        acc = acc * (v - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Minimum Gram determinant over independent i-tuples; returns (det, indices).
fn best_tuple(vectors: &[ShortVector], i: usize) -> Option<(f64, Vec<usize>)> {
    if vectors.len() < i {
        return None;
    }
    (0..=vectors.len() - i)
        .into_par_iter()
        .filter_map(|first| {
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut idx = Vec::with_capacity(i);
            idx.push(first);
            extend_tuple(vectors, i, &mut idx, &mut best);
            best
        })
        .min_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.1.cmp(&b.1))
        })
}

fn extend_tuple(
    vectors: &[ShortVector],
    i: usize,
    idx: &mut Vec<usize>,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if idx.len() == i {
        let det = gram_det_f64(vectors, idx);
        let norm_prod_sq: f64 = idx.iter().map(|&j| vectors[j].norm * vectors[j].norm).product();
        // dependent tuples land at float-noise scale, far below genuine minima
        if det > 1e-24 * norm_prod_sq {
            if best.as_ref().map(|(b, _)| det < *b).unwrap_or(true) {
                *best = Some((det, idx.clone()));
            }
        }
        return;
    }
    let last = *idx.last().unwrap();
    for next in (last + 1)..vectors.len() {
        idx.push(next);
        extend_tuple(vectors, i, idx, best);
        idx.pop();
    }
}

fn gram_det_f64(vectors: &[ShortVector], idx: &[usize]) -> f64 {
    match idx.len() {
        1 => vectors[idx[0]].norm * vectors[idx[0]].norm,
        2 => {
            let (a, b) = (&vectors[idx[0]].vector, &vectors[idx[1]].vector);
            let (na, nb, ab) = (a.norm_squared(), b.norm_squared(), a.dot(b));
            na * nb - ab * ab
        }
        3 => {
            let (a, b, c) = (
                &vectors[idx[0]].vector,
                &vectors[idx[1]].vector,
                &vectors[idx[2]].vector,
            );
            let (aa, bb, cc) = (a.norm_squared(), b.norm_squared(), c.norm_squared());
            let (ab, ac, bc) = (a.dot(b), a.dot(c), b.dot(c));
            aa * (bb * cc - bc * bc) - ab * (ab * cc - bc * ac) + ac * (ab * bc - bb * ac)
        }
        k => {
            let gram = DMatrix::from_fn(k, k, |r, c| {
                vectors[idx[r]].vector.dot(&vectors[idx[c]].vector)
            });
            gram.determinant()
        }
    }
}

/// Saturate the coordinates, rebuild the witness basis, and read the value
/// off the saturated covolume.
fn finish_witness(x: &Lattice, coords: &[Vec<i64>]) -> Result<Alpha> {
    let cols: Vec<Vec<BigInt>> = coords
        .iter()
        .map(|c| c.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let saturated = intlin::saturate(&cols);
    let coords_sat: Vec<Vec<i64>> = saturated
        .iter()
        .map(|col| {
            col.iter()
                .map(|v| i64::try_from(v).map_err(|_| Error::resource("witness coordinate", v)))
                .collect::<Result<Vec<i64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let columns: Vec<_> = coords_sat.iter().map(|c| x.vector(c)).collect();
    let witness_basis = DMatrix::from_columns(&columns);
    let gram = witness_basis.transpose() * &witness_basis;
    let covolume = gram.determinant().max(0.0).sqrt();
    if covolume <= 0.0 {
        return Err(Error::validation("degenerate witness"));
    }
    Ok(Alpha {
        value: 1.0 / covolume,
        covolume,
        witness_coords: coords_sat,
        witness_basis,
    })
}

fn alpha_via_dual(x: &Lattice, i: usize, budget: &EnumBudget) -> Result<Alpha> {
    let d = x.dims().d();
    let dual = x.dual()?;
    let dual_alpha = alpha_direct(&dual, d - i, budget)?;
    // The primal minimizer is the integer kernel of the transposed dual
    // witness coordinates.
    let rows: Vec<Vec<BigInt>> = (0..d - i)
        .map(|col| {
            (0..d)
                .map(|row| BigInt::from(dual_alpha.witness_coords[col][row]))
                .collect()
        })
        .collect();
    let kernel = intlin::kernel_basis(&rows);
    if kernel.len() != i {
        return Err(Error::validation(format!(
            "dual witness kernel has rank {}, expected {i}",
            kernel.len()
        )));
    }
    let coords: Vec<Vec<i64>> = kernel
        .iter()
        .map(|col| {
            col.iter()
                .map(|v| i64::try_from(v).map_err(|_| Error::resource("kernel coordinate", v)))
                .collect::<Result<Vec<i64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    finish_witness(x, &coords)
}

/// The full profile alpha_0..alpha_d with witnesses for the interior ranks.
#[derive(Debug, Clone)]
pub struct AlphaProfile {
    pub dims: Dimensions,
    pub values: Vec<f64>,
    pub witnesses: Vec<Alpha>,
}

pub fn alpha_profile(x: &Lattice, budget: &EnumBudget) -> Result<AlphaProfile> {
    let d = x.dims().d();
    let mut values = vec![1.0; d + 1];
    let mut witnesses = Vec::with_capacity(d - 1);
    for i in 1..d {
        let a = alpha(x, i, budget)?;
        values[i] = a.value;
        witnesses.push(a);
    }
    Ok(AlphaProfile {
        dims: x.dims(),
        values,
        witnesses,
    })
}

/// max over interior ranks of alpha_i(x)^{beta_i}; the covering-count
/// prefactor.
pub fn covering_constant(x: &Lattice, budget: &EnumBudget) -> Result<f64> {
    let betas = beta_exponents(x.dims());
    let profile = alpha_profile(x, budget)?;
    Ok((1..x.dims().d())
        .map(|i| profile.values[i].powf(betas[i - 1]))
        .fold(1.0f64, f64::max))
}

/// Output of the height construction: index sets, weights, and constants
/// making the flow average contract the combination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeightFunction {
    pub d: usize,
    /// Concave profile with zero endpoints.
    pub beta: Vec<f64>,
    /// Reciprocal exponents 1/beta(i) for the interior ranks, index i-1.
    pub exponents: Vec<f64>,
    /// All admissible (rank, step) pairs.
    pub psi: Vec<(usize, usize)>,
    /// Pairs where the profile is affine across the step.
    pub phi: Vec<(usize, usize)>,
    /// Largest affine defect ratio outside phi; strictly below one.
    pub b: f64,
    /// Ranks where the profile is strictly concave; always contains 0 and d.
    pub strict_set: Vec<usize>,
    pub d_minus: Vec<usize>,
    pub d_plus: Vec<usize>,
    /// The selected power of 1/2.
    pub epsilon: f64,
    /// Weights omega_i = epsilon^{d_-(i) d_+(i)}; ends are exactly one.
    pub weights: Vec<f64>,
    pub a: f64,
    pub a_prime: f64,
    /// Two-sided flow bound on intermediate exterior powers used in the
    /// cross-term budget.
    pub flow_bound: f64,
    /// Additive constant in the contraction conclusion.
    pub c0: f64,
}

impl HeightFunction {
    /// The construction for the standard profile of the given block
    /// dimensions, with the flow bound taken at time t.
    pub fn standard(dims: Dimensions, t: f64, a: f64, a_prime: f64) -> Result<HeightFunction> {
        let omega = crate::lattice::flow_norm_bound(dims, t);
        build_height(&beta_profile(dims), a, a_prime, omega)
    }

    pub fn exponent(&self, i: usize) -> f64 {
        self.exponents[i - 1]
    }

    /// Unit-weight variant useful for plain properness checks.
    pub fn with_unit_weights(mut self) -> Self {
        for w in self.weights.iter_mut() {
            *w = 1.0;
        }
        self
    }
}

/// Deterministic height construction from a concave profile.
///
/// Validates concavity of the piecewise-linear interpolation, derives the
/// index sets and weights, scans epsilon over powers of 1/2 until the
/// cross-term budget fits strictly under (a'-a)/2, and assembles the
/// additive constant from the affine-defect bound.
pub fn build_height(beta: &[f64], a: f64, a_prime: f64, omega: f64) -> Result<HeightFunction> {
    let d = beta.len().checked_sub(1).filter(|&d| d >= 2).ok_or_else(|| {
        Error::validation("profile needs at least d = 2 entries plus endpoints")
    })?;
    if beta[0] != 0.0 || beta[d] != 0.0 {
        return Err(Error::validation("profile must vanish at both endpoints"));
    }
    if beta[1..d].iter().any(|&b| b <= 0.0) {
        return Err(Error::validation("profile must be positive inside"));
    }
    // concavity of the piecewise-linear interpolation: non-increasing slopes
    for i in 1..d {
        let left = beta[i] - beta[i - 1];
        let right = beta[i + 1] - beta[i];
        if right > left + 1e-12 {
            return Err(Error::validation(format!(
                "profile is not concave at index {i}"
            )));
        }
    }
    if !(a > 0.0) {
        return Err(Error::validation("contraction coefficient a must be positive"));
    }
    if !(a_prime > a) {
        return Err(Error::validation("a' must exceed a"));
    }
    if !(omega >= 1.0) {
        return Err(Error::validation("flow bound must be at least 1"));
    }

    let exponents: Vec<f64> = (1..d).map(|i| 1.0 / beta[i]).collect();

    let mut psi = Vec::new();
    let mut phi = Vec::new();
    for i in 1..d {
        for j in 1..=i.min(d - i) {
            psi.push((i, j));
            if (beta[i] - 0.5 * (beta[i - j] + beta[i + j])).abs() <= 1e-12 {
                phi.push((i, j));
            }
        }
    }

    let b = psi
        .iter()
        .filter(|p| !phi.contains(p))
        .map(|&(i, j)| (beta[i - j] + beta[i + j]) / (2.0 * beta[i]))
        .fold(0.0f64, f64::max);
    debug_assert!(b < 1.0);

    // strictly concave ranks: no affine pair lands on them
    let strict_set: Vec<usize> = (0..=d)
        .filter(|&i| !phi.iter().any(|&(pi, _)| pi == i))
        .collect();

    let d_minus: Vec<usize> = (0..=d)
        .map(|i| {
            strict_set
                .iter()
                .filter(|&&s| s <= i)
                .map(|&s| i - s)
                .min()
                .expect("0 is strictly concave")
        })
        .collect();
    let d_plus: Vec<usize> = (0..=d)
        .map(|i| {
            strict_set
                .iter()
                .filter(|&&s| s >= i)
                .map(|&s| s - i)
                .min()
                .expect("d is strictly concave")
        })
        .collect();

    // epsilon scan: first power of 1/2 fitting the affine cross-term budget
    let budget = (a_prime - a) / 2.0;
    let mut epsilon = 0.5f64;
    let mut chosen = None;
    for _ in 0..1060 {
        let sum: f64 = psi
            .iter()
            .map(|&(i, j)| {
                omega.powf(2.0 * exponents[i - 1]) * epsilon.powf(exponents[i - 1] * (j * j) as f64)
            })
            .sum();
        if sum < budget {
            chosen = Some(epsilon);
            break;
        }
        epsilon *= 0.5;
    }
    let epsilon = chosen.ok_or_else(|| {
        Error::validation("no dyadic epsilon satisfies the cross-term budget")
    })?;

    let weights: Vec<f64> = (0..=d)
        .map(|i| epsilon.powi((d_minus[i] * d_plus[i]) as i32))
        .collect();

    // additive constant: affine-defect terms plus the sublinear remainder
    let c_defect: f64 = psi
        .iter()
        .filter(|p| !phi.contains(p))
        .map(|&(i, j)| {
            let bi = exponents[i - 1];
            omega.powf(2.0 * bi) * (weights[i] / (weights[i - j] * weights[i + j]).sqrt()).powf(bi)
        })
        .sum();
    let sup_term = if c_defect == 0.0 || b == 0.0 {
        c_defect
    } else {
        let kappa = budget;
        (1.0 - b) * c_defect.powf(1.0 / (1.0 - b)) * (b / kappa).powf(b / (1.0 - b))
    };
    let c0 = (2.0 * (1.0 - a) + c_defect + sup_term).max(2.0);

    Ok(HeightFunction {
        d,
        beta: beta.to_vec(),
        exponents,
        psi,
        phi,
        b,
        strict_set,
        d_minus,
        d_plus,
        epsilon,
        weights,
        a,
        a_prime,
        flow_bound: omega,
        c0,
    })
}

/// The composite height: 2 plus the weighted interior terms
/// (omega_i alpha_i)^{beta_i}. The endpoint ranks contribute the constant 1
/// each.
pub fn composite_height(x: &Lattice, h: &HeightFunction, budget: &EnumBudget) -> Result<f64> {
    let d = x.dims().d();
    if h.d != d {
        return Err(Error::validation(format!(
            "height built for d={}, lattice has d={d}",
            h.d
        )));
    }
    let mut acc = 2.0;
    for i in 1..d {
        let ai = alpha(x, i, budget)?.value;
        acc += (h.weights[i] * ai).powf(h.exponent(i));
    }
    Ok(acc)
}

/// Composite height from a precomputed profile (avoids re-enumeration).
pub fn composite_height_from_profile(profile: &AlphaProfile, h: &HeightFunction) -> f64 {
    let d = profile.dims.d();
    let mut acc = 2.0;
    for i in 1..d {
        acc += (h.weights[i] * profile.values[i]).powf(h.exponent(i));
    }
    acc
}

/// The sublevel region {x : composite height <= threshold}; compact for any
/// positive threshold by Mahler's criterion.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompactRegion {
    pub threshold: f64,
    /// Empirically estimated contraction threshold, when one was measured.
    pub m_tilde: Option<f64>,
}

impl CompactRegion {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::validation("region threshold must be positive"));
        }
        Ok(CompactRegion {
            threshold,
            m_tilde: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{self, Lattice};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn dims(m: usize, n: usize) -> Dimensions {
        Dimensions::new(m, n).unwrap()
    }

    fn budget() -> EnumBudget {
        EnumBudget::default()
    }

    #[test]
    fn beta_exponent_examples() {
        assert_eq!(beta_exponents(dims(2, 1)), vec![2.0, 1.0]);
        assert_eq!(beta_exponents(dims(1, 2)), vec![1.0, 2.0]);
        assert_eq!(beta_exponents(dims(1, 1)), vec![1.0]);
    }

    #[test]
    fn minima_examples() {
        let x = Lattice::standard(dims(2, 2));
        let m = minkowski_minima(&x, &budget()).unwrap();
        assert_eq!(m, vec![1.0; 4]);

        let basis = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 2.0]));
        let x = Lattice::new(dims(1, 1), basis).unwrap();
        let m = minkowski_minima(&x, &budget()).unwrap();
        assert_relative_eq!(m[0], 0.5);
        assert_relative_eq!(m[1], 2.0);
    }

    #[test]
    fn minima_product_within_bounds() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(41);
        for (m, n) in [(1usize, 1usize), (2, 1), (2, 2)] {
            let dm = dims(m, n);
            for _ in 0..20 {
                let x = crate::mc::random_unimodular(dm, &mut rng);
                let minima = minkowski_minima(&x, &budget()).unwrap();
                let prod: f64 = minima.iter().product();
                let cd = minima_product_bound(dm.d());
                assert!(
                    prod >= 1.0 - 1e-9 && prod <= cd * (1.0 + 1e-9),
                    "product {prod} outside [1, {cd}]"
                );
            }
        }
    }

    #[test]
    fn alpha_of_standard_lattice_is_one() {
        for (m, n) in [(1, 1), (2, 1), (2, 2)] {
            let x = Lattice::standard(dims(m, n));
            for i in 1..x.dims().d() {
                let a = alpha(&x, i, &budget()).unwrap();
                assert_relative_eq!(a.value, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn alpha_of_pushed_plane() {
        // alpha_1(g_1 Z^2) = e
        let dm = dims(1, 1);
        let g = lattice::diagonal_flow(dm, 1.0);
        let x = lattice::act(&g, &Lattice::standard(dm)).unwrap();
        let a = alpha(&x, 1, &budget()).unwrap();
        assert_relative_eq!(a.value, 1.0f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn alpha_lower_bound_along_divergent_direction() {
        // alpha_1(g_t u_{1/2} Z^2) >= e^t / 2 via the vector (0, 2e^{-t})
        let dm = dims(1, 1);
        let s = DMatrix::from_element(1, 1, 0.5);
        for t in 1..=6 {
            let x = lattice::flow_point(&Lattice::standard(dm), &s, t as f64).unwrap();
            let a = alpha(&x, 1, &budget()).unwrap();
            assert!(a.value >= (t as f64).exp() / 2.0 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn alpha_witness_consistency() {
        let dm = dims(2, 1);
        let s = DMatrix::from_fn(2, 1, |r, _| if r == 0 { 0.5 } else { 0.25 });
        let x = lattice::flow_point(&Lattice::standard(dm), &s, 1.0).unwrap();
        for i in 1..3 {
            let a = alpha(&x, i, &budget()).unwrap();
            assert_relative_eq!(a.value * a.covolume, 1.0, max_relative = 1e-12);
            // witness is primitive
            let cols: Vec<Vec<BigInt>> = a
                .witness_coords
                .iter()
                .map(|c| c.iter().map(|&v| BigInt::from(v)).collect())
                .collect();
            assert!(intlin::is_primitive(&cols));
        }
    }

    #[test]
    fn dual_route_matches_direct_search() {
        // diag(a, 1, 1/a): rank-2 minimizer has covolume a
        let a_par = 0.4f64;
        let basis = DMatrix::from_diagonal(&DVector::from_vec(vec![a_par, 1.0, 1.0 / a_par]));
        let x = Lattice::new(dims(2, 1), basis).unwrap();
        let via_dual = alpha(&x, 2, &budget()).unwrap();
        let direct = alpha_direct(&x, 2, &budget()).unwrap();
        assert_relative_eq!(via_dual.value, direct.value, max_relative = 1e-9);
        assert_relative_eq!(via_dual.value, 1.0 / a_par, max_relative = 1e-9);
    }

    #[test]
    fn covering_constant_examples() {
        let x = Lattice::standard(dims(2, 1));
        assert_relative_eq!(covering_constant(&x, &budget()).unwrap(), 1.0);

        let dm = dims(1, 1);
        let g = lattice::diagonal_flow(dm, 1.0);
        let y = lattice::act(&g, &Lattice::standard(dm)).unwrap();
        assert_relative_eq!(
            covering_constant(&y, &budget()).unwrap(),
            1.0f64.exp(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn height_construction_flat_profile() {
        // d = 2 profile (0, 1, 0): single pair, no affine part, unit weights
        let h = build_height(&[0.0, 1.0, 0.0], 0.1, 0.2, 1.0).unwrap();
        assert_eq!(h.psi, vec![(1, 1)]);
        assert!(h.phi.is_empty());
        assert_eq!(h.strict_set, vec![0, 1, 2]);
        assert_eq!(h.b, 0.0);
        assert_eq!(h.weights, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn height_construction_with_affine_segment() {
        // d = 3 profile (0, 1/2, 1, 0): affine at (1,1), strict at {0,2,3}
        let h = build_height(&[0.0, 0.5, 1.0, 0.0], 0.1, 0.2, 1.0).unwrap();
        assert_eq!(h.phi, vec![(1, 1)]);
        assert_eq!(h.strict_set, vec![0, 2, 3]);
        assert_eq!(h.d_minus[1], 1);
        assert_eq!(h.d_plus[1], 1);
        assert_relative_eq!(h.weights[1], h.epsilon);
        assert_eq!(h.weights[0], 1.0);
        assert_eq!(h.weights[2], 1.0);
        assert_eq!(h.weights[3], 1.0);
        // defect ratio from the (2,1) pair: (1/2 + 0) / (2 * 1)
        assert_relative_eq!(h.b, 0.25);
    }

    #[test]
    fn height_rejects_bad_input() {
        // slopes increase: not concave
        assert!(build_height(&[0.0, 1.0, 3.0, 0.0], 0.1, 0.2, 1.0).is_err());
        assert!(build_height(&[0.0, 1.0, 0.0], 0.3, 0.2, 1.0).is_err());
        assert!(build_height(&[0.1, 1.0, 0.0], 0.1, 0.2, 1.0).is_err());
    }

    #[test]
    fn epsilon_scan_is_the_largest_admissible_power() {
        let h = build_height(&[0.0, 1.0, 0.0], 0.1, 0.3, 1.0).unwrap();
        // budget 0.1: need omega^2 eps < 0.1 with omega = 1: eps = 1/16
        assert_relative_eq!(h.epsilon, 1.0 / 16.0);
        let sum = h.epsilon;
        assert!(sum < 0.1);
        assert!(h.epsilon * 2.0 >= 0.1);
    }

    #[test]
    fn composite_height_examples() {
        let dm = dims(1, 1);
        let h = HeightFunction::standard(dm, 1.0, 0.1, 0.2).unwrap();
        // weights are unit for d = 2, so the standard lattice scores 3
        let x = Lattice::standard(dm);
        assert_relative_eq!(
            composite_height(&x, &h, &budget()).unwrap(),
            3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn composite_height_at_least_two() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(43);
        let dm = dims(2, 1);
        let h = HeightFunction::standard(dm, 2.0, 0.1, 0.2).unwrap();
        for _ in 0..10 {
            let x = crate::mc::random_unimodular(dm, &mut rng);
            assert!(composite_height(&x, &h, &budget()).unwrap() >= 2.0);
        }
    }

    #[test]
    fn composite_height_diverges_along_divergent_orbit() {
        let dm = dims(1, 1);
        let h = HeightFunction::standard(dm, 1.0, 0.1, 0.2).unwrap();
        let s = DMatrix::from_element(1, 1, 0.5);
        let mut last = 0.0;
        for t in 1..=10 {
            let x = lattice::flow_point(&Lattice::standard(dm), &s, t as f64).unwrap();
            let v = composite_height(&x, &h, &budget()).unwrap();
            assert!(v > last, "height must increase along the divergent orbit");
            last = v;
        }
        assert!(last > 1e3);
    }

    #[test]
    fn flow_sandwich_on_exterior_powers() {
        use crate::exterior;
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        use rand_distr::StandardNormal;
        let mut rng = StdRng::seed_from_u64(47);
        for (m, n) in [(1usize, 1usize), (2, 1), (2, 2)] {
            let dm = dims(m, n);
            let d = dm.d();
            for _ in 0..20 {
                let t = rng.gen_range(0.1..2.0);
                let omega = crate::lattice::flow_norm_bound(dm, t);
                let j = rng.gen_range(1..d);
                let vs: Vec<DVector<f64>> = (0..j)
                    .map(|_| DVector::from_fn(d, |_, _| rng.sample(StandardNormal)))
                    .collect();
                let v = exterior::wedge(&vs).unwrap();
                if v.norm() < 1e-9 {
                    continue;
                }
                let moved =
                    exterior::induced_diagonal_action(&lattice::flow_diagonal(dm, t), &v);
                let ratio = moved.norm() / v.norm();
                assert!(ratio <= omega * (1.0 + 1e-12));
                assert!(ratio >= (1.0 - 1e-12) / omega);
            }
        }
    }
}
