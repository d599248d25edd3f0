//! Classification of matrices as singular / singular-on-average via
//! exhaustive best-approximation search over exact arithmetic, with a
//! cross-check against the dynamical characterization through the flow on
//! the standard lattice.

pub mod quadratic;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::heights::EnumBudget;
use crate::lattice::{self, Lattice};
use crate::reduction;
use crate::stats;
use quadratic::QuadVal;

/// Denominator used when promoting floating-point targets to exact
/// rationals before the search.
pub const FLOAT_PROMOTION_DEN: i128 = 1_000_000_000_000;

/// Feasibility cap for exhaustive search: the number of candidate integer
/// vectors T^n must not exceed this.
pub const SEARCH_BUDGET: f64 = 1e8;

/// An approximation target, held exactly.
#[derive(Debug, Clone)]
pub enum TargetMatrix {
    /// m-by-n rational matrix with a common denominator.
    Rational {
        rows: usize,
        cols: usize,
        numer: Vec<Vec<i128>>,
        denom: i128,
    },
    /// A single real quadratic irrational (1-by-1 targets only).
    Quadratic(QuadVal),
}

impl TargetMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            TargetMatrix::Rational { rows, cols, .. } => (*rows, *cols),
            TargetMatrix::Quadratic(_) => (1, 1),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            TargetMatrix::Rational {
                rows,
                cols,
                numer,
                denom,
            } => DMatrix::from_fn(*rows, *cols, |r, c| numer[r][c] as f64 / *denom as f64),
            TargetMatrix::Quadratic(v) => DMatrix::from_element(1, 1, v.approx()),
        }
    }

    /// Exact rational matrix from per-entry fractions.
    pub fn from_rationals(rows: usize, cols: usize, entries: &[Ratio<i128>]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::validation("entry count does not match the shape"));
        }
        let mut denom: i128 = 1;
        for e in entries {
            let d = *e.denom();
            denom = denom / denom.gcd(&d) * d;
            if denom > 1_000_000_000_000_000 {
                return Err(Error::validation(
                    "common denominator exceeds 10^15; reduce the input fractions",
                ));
            }
        }
        let numer = (0..rows)
            .map(|r| {
                (0..cols)
                    .map(|c| {
                        let e = entries[r * cols + c];
                        e.numer() * (denom / e.denom())
                    })
                    .collect()
            })
            .collect();
        Ok(TargetMatrix::Rational {
            rows,
            cols,
            numer,
            denom,
        })
    }

    /// Promote a floating matrix to an exact rational with denominator
    /// 10^12, so the search arithmetic is exact.
    pub fn from_f64(mat: &DMatrix<f64>) -> Result<Self> {
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("target entries must be finite"));
        }
        if mat.iter().any(|x| x.abs() > 1e6) {
            return Err(Error::validation("target entries too large to promote"));
        }
        let entries: Vec<Ratio<i128>> = mat
            .iter()
            .map(|&x| Ratio::new((x * FLOAT_PROMOTION_DEN as f64).round() as i128, FLOAT_PROMOTION_DEN))
            .collect();
        // DMatrix iterates column-major; reorder to row-major
        let mut row_major = Vec::with_capacity(entries.len());
        for r in 0..mat.nrows() {
            for c in 0..mat.ncols() {
                row_major.push(entries[c * mat.nrows() + r]);
            }
        }
        TargetMatrix::from_rationals(mat.nrows(), mat.ncols(), &row_major)
    }

    /// Named 1-by-1 constants: "golden", "sqrt2", "liouville(b)".
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "golden" => Ok(TargetMatrix::Quadratic(quadratic::golden())),
            "sqrt2" => Ok(TargetMatrix::Quadratic(quadratic::sqrt2())),
            _ => {
                if let Some(rest) = name.strip_prefix("liouville(") {
                    let base: u64 = rest
                        .strip_suffix(')')
                        .and_then(|b| b.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("bad liouville spec: {name}")))?;
                    if base < 2 {
                        return Err(Error::validation("liouville base must be at least 2"));
                    }
                    liouville(base)
                } else {
                    Err(Error::Parse(format!("unknown named constant: {name}")))
                }
            }
        }
    }

    /// Parse an m-by-n target: rows separated by ';', entries by ',', each
    /// entry "p/q", a decimal string, or (1x1 only) a named constant.
    pub fn parse(rows: usize, cols: usize, text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if rows == 1 && cols == 1 && trimmed.chars().any(|c| c.is_alphabetic()) {
            return TargetMatrix::named(trimmed);
        }
        let mut entries = Vec::with_capacity(rows * cols);
        let row_parts: Vec<&str> = trimmed.split(';').collect();
        if row_parts.len() != rows {
            return Err(Error::Parse(format!(
                "expected {rows} rows separated by ';', got {}",
                row_parts.len()
            )));
        }
        for row in row_parts {
            let cells: Vec<&str> = row.split(',').collect();
            if cells.len() != cols {
                return Err(Error::Parse(format!(
                    "expected {cols} entries per row, got {}",
                    cells.len()
                )));
            }
            for cell in cells {
                entries.push(parse_rational(cell.trim())?);
            }
        }
        TargetMatrix::from_rationals(rows, cols, &entries)
    }
}

/// Exact rational from "p/q" or a decimal string.
pub fn parse_rational(text: &str) -> Result<Ratio<i128>> {
    if let Some((p, q)) = text.split_once('/') {
        let p: i128 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator: {p}")))?;
        let q: i128 = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator: {q}")))?;
        if q == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        return Ok(Ratio::new(p, q));
    }
    let negative = text.starts_with('-');
    let body = text.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("bad number: {text}")));
    }
    if frac_part.len() > 18 {
        return Err(Error::Parse("decimal has more than 18 fractional digits".into()));
    }
    let int_val: i128 = if int_part.is_empty() {
        0
    } else {
        int_part
            .parse()
            .map_err(|_| Error::Parse(format!("bad number: {text}")))?
    };
    let scale = 10i128.pow(frac_part.len() as u32);
    let frac_val: i128 = if frac_part.is_empty() {
        0
    } else {
        frac_part
            .parse()
            .map_err(|_| Error::Parse(format!("bad number: {text}")))?
    };
    let mut value = Ratio::new(int_val * scale + frac_val, scale);
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Super-exponential continued fraction [0; b, b^2, b^4, b^8, ...], cut at
/// the last convergent whose denominator fits under the promotion cap. The
/// resulting rational shares the approximation profile of the limit for
/// every scale below that denominator.
fn liouville(base: u64) -> Result<TargetMatrix> {
    let cap = BigInt::from(FLOAT_PROMOTION_DEN);
    let b = BigInt::from(base);
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::zero(), BigInt::one()); // a0 = 0
    let mut power = b.clone(); // b^{2^0}
    loop {
        let p2 = &power * &p1 + &p0;
        let q2 = &power * &q1 + &q0;
        if q2 > cap {
            break;
        }
        (p0, q0) = (p1, q1);
        (p1, q1) = (p2, q2);
        power = &power * &power;
    }
    let numer = p1
        .to_i128()
        .ok_or_else(|| Error::validation("liouville numerator overflow"))?;
    let denom = q1
        .to_i128()
        .ok_or_else(|| Error::validation("liouville denominator overflow"))?;
    Ok(TargetMatrix::Rational {
        rows: 1,
        cols: 1,
        numer: vec![vec![numer]],
        denom,
    })
}

/// The best integer approximation at one scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestApprox {
    pub t_scale: u64,
    /// min |sq - p| over admissible q, as a float.
    pub min_norm: f64,
    /// Normalized quality min * T^{n/m}.
    pub eps: f64,
    pub q: Vec<i64>,
    pub p: Vec<i64>,
}

/// Minimize |s q - p| over integer q with 0 < |q| < T (Euclidean norm) and
/// p the nearest integer vector. Exhaustive and exact; q and -q are
/// identified by keeping the first nonzero coordinate positive.
pub fn best_approximation(s: &TargetMatrix, t_scale: u64) -> Result<BestApprox> {
    if t_scale < 2 {
        return Err(Error::validation("scale T must be at least 2"));
    }
    let (m, n) = s.shape();
    if (t_scale as f64).powi(n as i32) > SEARCH_BUDGET {
        return Err(Error::resource(
            "exhaustive approximation search",
            format!("T^n = {}^{n}", t_scale),
        ));
    }
    let exponent = n as f64 / m as f64;
    match s {
        TargetMatrix::Quadratic(v) => {
            let mut best: Option<(QuadVal, i128, i128)> = None;
            for q in 1..t_scale as i128 {
                let x = v.mul_int(q);
                let p = x.round();
                let r = x.sub_int(p);
                let better = match &best {
                    None => true,
                    Some((cur, _, _)) => r.abs_cmp(cur) == std::cmp::Ordering::Less,
                };
                if better {
                    best = Some((r, q, p));
                }
            }
            let (r, q, p) = best.ok_or_else(|| Error::validation("empty search range"))?;
            let min_norm = r.approx().abs();
            Ok(BestApprox {
                t_scale,
                min_norm,
                eps: min_norm * (t_scale as f64).powf(exponent),
                q: vec![q as i64],
                p: vec![p as i64],
            })
        }
        TargetMatrix::Rational { numer, denom, .. } => {
            let t = t_scale as i128;
            let t_sq = t * t;
            // candidates: integer vectors in the open ball, canonical sign
            let mut best: Option<(i128, Vec<i128>, Vec<i128>)> = None;
            let mut q = vec![0i128; n];
            search_q(
                &mut q,
                0,
                0,
                t_sq,
                &mut |q: &[i128]| {
                    if q.iter().all(|&c| c == 0) {
                        return;
                    }
                    if q.iter().find(|&&c| c != 0).copied().unwrap() < 0 {
                        return;
                    }
                    let mut p = Vec::with_capacity(m);
                    let mut norm_sq: i128 = 0;
                    for row in numer {
                        let num: i128 = row.iter().zip(q).map(|(&a, &b)| a * b).sum();
                        let pr = round_div(num, *denom);
                        let r = num - pr * denom;
                        norm_sq += r * r;
                        p.push(pr);
                    }
                    let better = match &best {
                        None => true,
                        Some((cur, bq, _)) => {
                            norm_sq < *cur || (norm_sq == *cur && q < bq.as_slice())
                        }
                    };
                    if better {
                        best = Some((norm_sq, q.to_vec(), p));
                    }
                },
            );
            let (norm_sq, q, p) = best.ok_or_else(|| Error::validation("empty search range"))?;
            let min_norm = (norm_sq as f64).sqrt() / *denom as f64;
            Ok(BestApprox {
                t_scale,
                min_norm,
                eps: min_norm * (t_scale as f64).powf(exponent),
                q: q.iter().map(|&c| c as i64).collect(),
                p: p.iter().map(|&c| c as i64).collect(),
            })
        }
    }
}

fn search_q(q: &mut Vec<i128>, pos: usize, norm_sq: i128, t_sq: i128, f: &mut impl FnMut(&[i128])) {
    if pos == q.len() {
        f(q);
        return;
    }
    let remaining = t_sq - 1 - norm_sq; // |q|^2 <= T^2 - 1 means |q| < T
    let bound = (remaining as f64).sqrt().floor() as i128;
    for c in -bound..=bound {
        if norm_sq + c * c < t_sq {
            q[pos] = c;
            search_q(q, pos + 1, norm_sq + c * c, t_sq, f);
        }
    }
    q[pos] = 0;
}

/// Nearest-integer division, ties away from zero.
fn round_div(a: i128, b: i128) -> i128 {
    let (q, r) = (a.div_euclid(b), a.rem_euclid(b));
    if 2 * r >= b {
        q + 1
    } else {
        q
    }
}

/// Per-scale record of the profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: u32,
    pub t_scale: u64,
    pub eps: f64,
    pub q: Vec<i64>,
    pub p: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxProfile {
    pub levels: Vec<LevelRecord>,
}

/// Best approximations at the dyadic scales T = 2^ell, ell = 1..=ell_max.
pub fn approx_profile(s: &TargetMatrix, ell_max: u32) -> Result<ApproxProfile> {
    let levels: Vec<Result<LevelRecord>> = (1..=ell_max)
        .into_par_iter()
        .map(|level| {
            let t_scale = 1u64 << level;
            let best = best_approximation(s, t_scale)?;
            Ok(LevelRecord {
                level,
                t_scale,
                eps: best.eps,
                q: best.q,
                p: best.p,
            })
        })
        .collect();
    Ok(ApproxProfile {
        levels: levels.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// Verdict for the density-one variant of singularity at a fixed quality
/// threshold. The limit is undecidable from finitely many levels, so the
/// operational verdict looks at the trailing half of the profile and the
/// full fraction curve is reported for judgment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnAverageVerdict {
    pub epsilon: f64,
    pub levels: usize,
    /// Fraction of all levels meeting the threshold.
    pub fraction: f64,
    /// Fraction over the trailing half of the levels.
    pub trailing_fraction: f64,
    pub singular_on_average: bool,
    pub curve: Vec<bool>,
}

pub const TRAILING_TOLERANCE: f64 = 0.1;

pub fn classify_on_average(
    s: &TargetMatrix,
    epsilon: f64,
    ell_max: u32,
) -> Result<(OnAverageVerdict, ApproxProfile)> {
    if !(epsilon > 0.0) {
        return Err(Error::validation("threshold epsilon must be positive"));
    }
    let profile = approx_profile(s, ell_max)?;
    let curve: Vec<bool> = profile.levels.iter().map(|l| l.eps < epsilon).collect();
    let hits = curve.iter().filter(|&&b| b).count();
    let half_start = curve.len() / 2;
    let trailing = &curve[half_start..];
    let trailing_hits = trailing.iter().filter(|&&b| b).count();
    let trailing_fraction = trailing_hits as f64 / trailing.len().max(1) as f64;
    Ok((
        OnAverageVerdict {
            epsilon,
            levels: curve.len(),
            fraction: hits as f64 / curve.len().max(1) as f64,
            trailing_fraction,
            singular_on_average: trailing_fraction >= 1.0 - TRAILING_TOLERANCE,
            curve,
        },
        profile,
    ))
}

/// Joint report of the approximation profile and the flow trajectory of the
/// associated lattice point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DaniReport {
    /// Times at which the shortest vector was measured.
    pub ts: Vec<f64>,
    pub lambda1: Vec<f64>,
    /// Profile at the dyadic scales matched to the time grid.
    pub levels: Vec<LevelRecord>,
    /// Rank correlation between -log lambda_1 and -log eps on the matched
    /// grid.
    pub spearman: f64,
    pub singular_flag: bool,
    pub divergent_flag: bool,
    pub flags_agree: bool,
    /// For rational targets: the common denominator D and whether
    /// lambda_1(t) <= D e^{-min(m,n) t} holds on the tail of the grid.
    pub rational_decay: Option<(i64, bool)>,
}

/// Cross-check the approximation profile against the trajectory
/// g_t u_s Z^d. Levels are matched to times via T = 2^ell, t = ell ln 2 / m.
pub fn dani_crosscheck(s: &TargetMatrix, ell_max: u32, epsilon: f64) -> Result<DaniReport> {
    let (m, n) = s.shape();
    let dims = Dimensions::new(m, n)?;
    let (verdict, profile) = classify_on_average(s, epsilon, ell_max)?;

    let offset = s.to_matrix();
    let x0 = Lattice::standard(dims);
    let ln2 = std::f64::consts::LN_2;
    let ts: Vec<f64> = (1..=ell_max).map(|l| l as f64 * ln2 / m as f64).collect();
    let mut lambda1 = Vec::with_capacity(ts.len());
    for &t in &ts {
        let y = lattice::flow_point(&x0, &offset, t)?;
        let minima = reduction::successive_minima(&y, 1, reduction::DEFAULT_MAX_VECTORS)?;
        lambda1.push(minima.values[0]);
    }

    let neg_log_lambda: Vec<f64> = lambda1.iter().map(|&l| -(l.max(1e-300)).ln()).collect();
    let neg_log_eps: Vec<f64> = profile
        .levels
        .iter()
        .map(|l| -(l.eps.max(1e-300)).ln())
        .collect();
    let spearman = stats::spearman(&neg_log_lambda, &neg_log_eps);

    let last = *lambda1.last().expect("nonempty grid");
    let peak = lambda1.iter().cloned().fold(0.0f64, f64::max);
    let divergent_flag = last < 0.25 && last < 0.5 * peak;

    let rational_decay = match s {
        TargetMatrix::Rational { denom, .. } => {
            let d = *denom as f64;
            let rate = m.min(n) as f64;
            // check the tail of the grid, where the predicted envelope is
            // already below the trivial bound 1
            let ok = ts
                .iter()
                .zip(&lambda1)
                .filter(|(&t, _)| d * (-rate * t).exp() < 1.0)
                .all(|(&t, &l)| l <= d * (-rate * t).exp() * (1.0 + 1e-9));
            Some((*denom as i64, ok))
        }
        TargetMatrix::Quadratic(_) => None,
    };

    Ok(DaniReport {
        ts,
        lambda1,
        levels: profile.levels,
        spearman,
        singular_flag: verdict.singular_on_average,
        divergent_flag,
        flags_agree: verdict.singular_on_average == divergent_flag,
        rational_decay,
    })
}

/// Budget type re-export for callers that drive the flow side.
pub fn default_budget() -> EnumBudget {
    EnumBudget::default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rational_1x1(p: i128, q: i128) -> TargetMatrix {
        TargetMatrix::from_rationals(1, 1, &[Ratio::new(p, q)]).unwrap()
    }

    #[test]
    fn rational_hit_at_small_scale() {
        // s = 1/2, T = 3: q = 2 kills the fractional part
        let s = rational_1x1(1, 2);
        let best = best_approximation(&s, 3).unwrap();
        assert_eq!(best.eps, 0.0);
        assert_eq!(best.q, vec![2]);
        assert_eq!(best.p, vec![1]);
    }

    #[test]
    fn zero_matrix_is_trivially_approximated() {
        let s = TargetMatrix::from_rationals(1, 1, &[Ratio::zero()]).unwrap();
        for t in [2u64, 8, 64] {
            let best = best_approximation(&s, t).unwrap();
            assert_eq!(best.eps, 0.0);
            assert_eq!(best.q, vec![1]);
            assert_eq!(best.p, vec![0]);
        }
    }

    #[test]
    fn golden_ratio_stays_badly_approximable() {
        let s = TargetMatrix::named("golden").unwrap();
        for ell in [4u32, 10, 16, 20] {
            let best = best_approximation(&s, 1 << ell).unwrap();
            assert!(
                best.eps > 0.4,
                "eps = {} at T = 2^{ell}",
                best.eps
            );
        }
    }

    #[test]
    fn golden_minima_sit_on_fibonacci_denominators() {
        // the minimizing q at scale T is the largest Fibonacci number
        // below T, and the error matches the convergent error exactly
        let s = TargetMatrix::named("golden").unwrap();
        let convergents = crate::oracle::golden_convergents(24);
        for ell in [5u32, 8, 13] {
            let t = 1u64 << ell;
            let best = best_approximation(&s, t).unwrap();
            let (pk, qk) = convergents
                .iter()
                .rev()
                .find(|(_, q)| q < &BigInt::from(t))
                .unwrap();
            assert_eq!(BigInt::from(best.q[0]), *qk);
            assert_eq!(BigInt::from(best.p[0].abs()), pk.abs());
            // oracle error: |q alpha - p| via exact quadratic arithmetic
            let g = quadratic::golden();
            let qi: i128 = qk.try_into().unwrap();
            let pi: i128 = pk.try_into().unwrap();
            let err = g.mul_int(qi).sub_int(pi).approx().abs();
            assert_relative_eq!(best.min_norm, err, max_relative = 1e-12);
        }
    }

    #[test]
    fn exhaustive_matches_double_loop_oracle() {
        // plain double loop over (q, p) without nearest-integer shortcuts
        use rand::Rng;
        let mut rng = crate::mc::RngSpec::new(97, 0).rng();
        for _ in 0..12 {
            let raw = DMatrix::from_fn(1, 2, |_, _| rng.gen_range(-2.0..2.0));
            let s = TargetMatrix::from_f64(&raw).unwrap();
            let t = 16u64;
            let best = best_approximation(&s, t).unwrap();
            // oracle
            let (numer, denom) = match &s {
                TargetMatrix::Rational { numer, denom, .. } => (numer.clone(), *denom),
                _ => unreachable!(),
            };
            let mut best_oracle: Option<i128> = None;
            let bound = (raw.abs().max().ceil() as i128 + 1) * t as i128 + 2;
            for q1 in -(t as i128 - 1)..t as i128 {
                for q2 in -(t as i128 - 1)..t as i128 {
                    if q1 == 0 && q2 == 0 {
                        continue;
                    }
                    if q1 * q1 + q2 * q2 >= (t * t) as i128 {
                        continue;
                    }
                    let num = numer[0][0] * q1 + numer[0][1] * q2;
                    for p in -bound..=bound {
                        let r = num - p * denom;
                        let v = r * r;
                        if best_oracle.map(|b| v < b).unwrap_or(true) {
                            best_oracle = Some(v);
                        }
                    }
                }
            }
            let oracle_norm = (best_oracle.unwrap() as f64).sqrt() / denom as f64;
            assert_relative_eq!(best.min_norm, oracle_norm, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn eps_is_invariant_under_integer_shift_and_negation() {
        for (p, q) in [(1i128, 3i128), (5, 7), (2, 9)] {
            let base = rational_1x1(p, q);
            let shifted = rational_1x1(p + q, q);
            let negated = rational_1x1(-p, q);
            for t in [4u64, 16, 64] {
                let a = best_approximation(&base, t).unwrap();
                let b = best_approximation(&shifted, t).unwrap();
                let c = best_approximation(&negated, t).unwrap();
                assert_eq!(a.eps, b.eps);
                assert_eq!(a.eps, c.eps);
            }
        }
    }

    #[test]
    fn profile_of_rational_vanishes_past_denominator() {
        let s = rational_1x1(3, 7);
        let profile = approx_profile(&s, 8).unwrap();
        for level in &profile.levels {
            if level.t_scale > 7 {
                assert_eq!(level.eps, 0.0, "level {}", level.level);
            }
        }
    }

    #[test]
    fn classification_examples() {
        // rational: singular on average, trailing fraction one
        let (v, _) = classify_on_average(&rational_1x1(1, 2), 0.1, 20).unwrap();
        assert!(v.singular_on_average);
        assert_eq!(v.trailing_fraction, 1.0);

        // golden ratio: fraction zero
        let golden = TargetMatrix::named("golden").unwrap();
        let (v, _) = classify_on_average(&golden, 0.1, 20).unwrap();
        assert_eq!(v.fraction, 0.0);
        assert!(!v.singular_on_average);

        // super-exponential continued fraction: singular on average with a
        // trailing fraction of at least 0.9 at 24 levels
        let liou = TargetMatrix::named("liouville(16)").unwrap();
        let (v, _) = classify_on_average(&liou, 0.1, 24).unwrap();
        assert!(
            v.trailing_fraction >= 0.9,
            "trailing fraction {}",
            v.trailing_fraction
        );
        assert!(v.singular_on_average);
    }

    #[test]
    fn parse_variants() {
        let t = TargetMatrix::parse(1, 2, "1/2, 0.25").unwrap();
        match &t {
            TargetMatrix::Rational { numer, denom, .. } => {
                assert_eq!(*denom, 4);
                assert_eq!(numer[0], vec![2, 1]);
            }
            _ => panic!("expected rational"),
        }
        assert!(TargetMatrix::parse(1, 1, "golden").is_ok());
        assert!(TargetMatrix::parse(1, 1, "liouville(16)").is_ok());
        assert!(TargetMatrix::parse(2, 1, "1/2").is_err());
        assert!(TargetMatrix::parse(1, 1, "nonsense").is_err());
    }

    #[test]
    fn search_budget_is_enforced() {
        let s = TargetMatrix::from_rationals(
            1,
            2,
            &[Ratio::new(1, 3), Ratio::new(1, 5)],
        )
        .unwrap();
        assert!(matches!(
            best_approximation(&s, 100_000),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn dani_flags_for_rational_and_quadratic() {
        // rational 1/2: singular and divergent, with the explicit decay
        // envelope lambda_1 <= 2 e^{-t}
        let report = dani_crosscheck(&rational_1x1(1, 2), 16, 0.1).unwrap();
        assert!(report.singular_flag);
        assert!(report.divergent_flag);
        assert!(report.flags_agree);
        let (denom, decay_ok) = report.rational_decay.unwrap();
        assert_eq!(denom, 2);
        assert!(decay_ok);
        // the exact-zero eps tail ties most ranks; the association stays
        // positive but far from one
        assert!(report.spearman > 0.0);

        // golden: neither singular nor divergent; the orbit stays thick
        let golden = TargetMatrix::named("golden").unwrap();
        let report = dani_crosscheck(&golden, 16, 0.1).unwrap();
        assert!(!report.singular_flag);
        assert!(!report.divergent_flag);
        assert!(report.flags_agree);
        let floor = report.lambda1.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(floor > 0.3, "orbit minimum {floor}");
    }

    #[test]
    fn zero_offset_flow_is_explicit() {
        // s = 0: lambda_1(g_t Z^2) = e^{-t} for t >= 0
        let s = TargetMatrix::from_rationals(1, 1, &[Ratio::zero()]).unwrap();
        let dims = Dimensions::new(1, 1).unwrap();
        let offset = s.to_matrix();
        for t in [0.5f64, 1.0, 2.0, 4.0] {
            let y = lattice::flow_point(&Lattice::standard(dims), &offset, t).unwrap();
            let minima = reduction::successive_minima(&y, 1, 100_000).unwrap();
            assert_relative_eq!(minima.values[0], (-t).exp(), max_relative = 1e-10);
        }
    }
}
