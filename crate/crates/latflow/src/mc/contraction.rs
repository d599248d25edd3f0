//! Monte Carlo verification of the contraction inequalities for the height
//! functions under the flow average, including the iterated form and the
//! empirical threshold search.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::heights::{self, CompactRegion, EnumBudget, HeightFunction};
use crate::lattice::{self, Lattice};
use crate::mc::{gaussian_offset, parallel_estimate, EstimatorResult, GaussianLaw, RngSpec};

/// Report for the per-rank contraction estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaContractionReport {
    pub rank: usize,
    pub t: f64,
    pub omega: f64,
    /// MC estimate of the averaged height power after one flow step.
    pub lhs: EstimatorResult,
    /// Base-point heights alpha_0..alpha_d.
    pub base_profile: Vec<f64>,
    /// Cross-rank term omega^{2 beta_i} max_j sqrt(alpha_{i+j} alpha_{i-j})^{beta_i}.
    pub cross_term: f64,
    /// c_0 t e^{-mnt} alpha_i^{beta_i} + cross term, with configured c_0.
    pub bound: f64,
    pub pass: bool,
    /// (lhs - cross term)_+ e^{mnt} / (t alpha_i^{beta_i}).
    pub implied_c0: f64,
}

/// Estimate the flow average of alpha_i^{beta_i} against the two-term bound.
pub fn verify_alpha_contraction(
    x: &Lattice,
    i: usize,
    t: f64,
    omega: f64,
    c0_config: f64,
    n: u64,
    spec: RngSpec,
    budget: &EnumBudget,
) -> Result<AlphaContractionReport> {
    let dims = x.dims();
    let d = dims.d();
    if i < 1 || i > d - 1 {
        return Err(Error::validation(format!("rank {i} out of range 1..{d}")));
    }
    let beta_i = heights::beta_exponents(dims)[i - 1];
    let profile = heights::alpha_profile(x, budget)?;

    let lhs = parallel_estimate(spec, n, |rng: &mut ChaCha8Rng| {
        let s = gaussian_offset(dims, rng, GaussianLaw::standard());
        let y = lattice::flow_point(x, &s, t)?;
        Ok(heights::alpha(&y, i, budget)?.value.powf(beta_i))
    })?;

    let cross_term = omega.powf(2.0 * beta_i)
        * (1..=i.min(d - i))
            .map(|j| (profile.values[i + j] * profile.values[i - j]).sqrt())
            .fold(0.0f64, f64::max)
            .powf(beta_i);
    let decay = t * (-(dims.mn() as f64) * t).exp();
    let base_power = profile.values[i].powf(beta_i);
    let bound = c0_config * decay * base_power + cross_term;
    let implied_c0 = (lhs.mean - cross_term).max(0.0) / (decay * base_power);

    Ok(AlphaContractionReport {
        rank: i,
        t,
        omega,
        lhs,
        base_profile: profile.values,
        cross_term,
        bound,
        pass: lhs.mean <= bound + 3.0 * lhs.stderr,
        implied_c0,
    })
}

/// Outcome of the composite-height contraction check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum TildeContraction {
    /// The base point sits at or below the threshold; the inequality is not
    /// claimed there.
    BelowThreshold { height: f64, threshold: f64 },
    Checked(TildeContractionReport),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TildeContractionReport {
    pub t: f64,
    pub height: f64,
    pub lhs: EstimatorResult,
    /// c t e^{-mnt} height with the configured c.
    pub bound: f64,
    pub pass: bool,
    /// lhs / (t e^{-mnt} height)
    pub implied_c: f64,
    /// Additive-form check: lhs <= a' height + c0 with the constants from
    /// the construction.
    pub additive_pass: bool,
}

/// Estimate the flow average of the composite height against the
/// multiplicative bound (above threshold) and the additive bound.
pub fn verify_tilde_contraction(
    x: &Lattice,
    h: &HeightFunction,
    t: f64,
    c_config: f64,
    threshold: f64,
    n: u64,
    spec: RngSpec,
    budget: &EnumBudget,
) -> Result<TildeContraction> {
    let height = heights::composite_height(x, h, budget)?;
    if height <= threshold {
        return Ok(TildeContraction::BelowThreshold { height, threshold });
    }
    let report = tilde_average(x, h, t, c_config, height, n, spec, budget)?;
    Ok(TildeContraction::Checked(report))
}

#[allow(clippy::too_many_arguments)]
fn tilde_average(
    x: &Lattice,
    h: &HeightFunction,
    t: f64,
    c_config: f64,
    height: f64,
    n: u64,
    spec: RngSpec,
    budget: &EnumBudget,
) -> Result<TildeContractionReport> {
    let dims = x.dims();
    let lhs = parallel_estimate(spec, n, |rng: &mut ChaCha8Rng| {
        let s = gaussian_offset(dims, rng, GaussianLaw::standard());
        let y = lattice::flow_point(x, &s, t)?;
        heights::composite_height(&y, h, budget)
    })?;
    let decay = t * (-(dims.mn() as f64) * t).exp();
    let bound = c_config * decay * height;
    Ok(TildeContractionReport {
        t,
        height,
        lhs,
        bound,
        pass: lhs.mean <= bound + 3.0 * lhs.stderr,
        implied_c: lhs.mean / (decay * height),
        additive_pass: lhs.mean <= h.a_prime * height + h.c0 + 3.0 * lhs.stderr,
    })
}

/// Report for the iterated contraction over N flow steps restricted to
/// trajectories that stay above the threshold at every intermediate step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateReport {
    pub t: f64,
    pub steps: usize,
    pub threshold: f64,
    pub height: f64,
    /// Per-component variance of the composed offset law.
    pub sigma_sq: f64,
    /// Restricted average (zero outside the surviving set).
    pub restricted: EstimatorResult,
    /// Unrestricted average of the final height, for the monotonicity check.
    pub unrestricted: EstimatorResult,
    /// constant * c^N t^N e^{-mntN} height
    pub bound: f64,
    pub pass: bool,
}

/// Iterated contraction: average the final composite height over step
/// Gaussians, keeping only trajectories whose intermediate heights exceed
/// the threshold, and compare against the N-fold decayed bound.
#[allow(clippy::too_many_arguments)]
pub fn iterate_contraction(
    x: &Lattice,
    h: &HeightFunction,
    t: f64,
    steps: usize,
    threshold: f64,
    c_config: f64,
    constant: f64,
    n: u64,
    spec: RngSpec,
    budget: &EnumBudget,
) -> Result<IterateReport> {
    if steps < 1 {
        return Err(Error::validation("need at least one step"));
    }
    let dims = x.dims();
    let height = heights::composite_height(x, h, budget)?;
    let law = GaussianLaw::for_iterates(dims, t, steps);

    // one trajectory: y_k = g_t u_{s_k} y_{k-1}; the survivor indicator
    // looks at steps 1..N-1
    let walk = |rng: &mut ChaCha8Rng, restrict: bool| -> Result<f64> {
        let mut y = x.clone();
        for k in 1..=steps {
            let s = gaussian_offset(dims, rng, GaussianLaw::standard());
            y = lattice::flow_point(&y, &s, t)?;
            if k < steps {
                let intermediate = heights::composite_height(&y, h, budget)?;
                if restrict && intermediate <= threshold {
                    return Ok(0.0);
                }
            }
        }
        heights::composite_height(&y, h, budget)
    };

    // same spec for both passes: paired samples make the restricted mean
    // dominated by the unrestricted one sample-by-sample
    let restricted = parallel_estimate(spec, n, |rng| walk(rng, true))?;
    let unrestricted = parallel_estimate(spec, n, |rng| walk(rng, false))?;

    let decay = (c_config * t).powi(steps as i32) * (-(dims.mn() as f64) * t * steps as f64).exp();
    let bound = constant * decay * height;
    Ok(IterateReport {
        t,
        steps,
        threshold,
        height,
        sigma_sq: law.variance,
        restricted,
        unrestricted,
        bound,
        pass: restricted.mean <= bound + 3.0 * restricted.stderr,
    })
}

/// Search for the empirical contraction threshold: the smallest power of two
/// M such that every probe lattice with composite height above M satisfies
/// the multiplicative contraction at the configured c. Returns the region
/// with the measured threshold recorded.
#[allow(clippy::too_many_arguments)]
pub fn estimate_m_tilde(
    h: &HeightFunction,
    t: f64,
    c_config: f64,
    probes: &[Lattice],
    n: u64,
    spec: RngSpec,
    budget: &EnumBudget,
) -> Result<CompactRegion> {
    if probes.is_empty() {
        return Err(Error::validation("threshold search needs probe lattices"));
    }
    let mut heights_cache = Vec::with_capacity(probes.len());
    for x in probes {
        heights_cache.push(heights::composite_height(x, h, budget)?);
    }
    let top = heights_cache.iter().cloned().fold(0.0f64, f64::max);

    let mut m = 4.0f64;
    while m < top {
        let mut all_pass = true;
        for ((k, x), &hx) in probes.iter().enumerate().zip(&heights_cache) {
            if hx <= m {
                continue;
            }
            let report = tilde_average(
                x,
                h,
                t,
                c_config,
                hx,
                n,
                RngSpec::new(spec.seed, spec.stream.wrapping_add(1000 + k as u64)),
                budget,
            )?;
            if !report.pass {
                all_pass = false;
                break;
            }
        }
        if all_pass {
            let mut region = CompactRegion::new(m)?;
            region.m_tilde = Some(m);
            return Ok(region);
        }
        m *= 2.0;
    }
    Err(Error::Statistical(format!(
        "no threshold below the largest probe height {top} passes at c = {c_config}"
    )))
}

/// Probe family for threshold searches: flow pushes of the standard
/// lattice to increasing heights. Generic offsets produce bounded orbits,
/// so the horospherical jitter shrinks with the push (rate e^{-(m+n)r}) to
/// keep the cusp excursion alive.
pub fn default_probes(dims: Dimensions, spec: RngSpec, count: usize) -> Vec<Lattice> {
    let mut rng = spec.rng();
    let mut out = vec![Lattice::standard(dims)];
    let mut r = 0.8f64;
    while out.len() < count {
        let scale = 0.4 * (-(dims.d() as f64) * r).exp();
        let s = gaussian_offset(dims, &mut rng, GaussianLaw::standard()) * scale;
        if let Ok(x) = lattice::flow_point(&Lattice::standard(dims), &s, r) {
            out.push(x);
        }
        r += 0.45;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dims(m: usize, n: usize) -> Dimensions {
        Dimensions::new(m, n).unwrap()
    }

    fn budget() -> EnumBudget {
        EnumBudget::default()
    }

    #[test]
    fn alpha_contraction_reports_on_standard_lattice() {
        let dm = dims(1, 1);
        let omega = lattice::flow_norm_bound(dm, 2.0);
        let report = verify_alpha_contraction(
            &Lattice::standard(dm),
            1,
            2.0,
            omega,
            8.0,
            4000,
            RngSpec::new(61, 0),
            &budget(),
        )
        .unwrap();
        assert!(report.lhs.mean.is_finite());
        assert!(report.lhs.stderr.is_finite());
        // all base heights are one, so the cross term is omega^2
        assert!((report.cross_term - omega * omega).abs() < 1e-9);
        assert!(report.pass);
    }

    #[test]
    fn cross_term_formula_on_diagonal_lattice() {
        // diag(1/2, 1, 2): alpha = (1, 2, 2, 1); at i = 1 the only step is
        // j = 1 with sqrt(alpha_2 alpha_0) = sqrt(2)
        let basis = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 1.0, 2.0]));
        let x = Lattice::new(dims(2, 1), basis).unwrap();
        let report = verify_alpha_contraction(
            &x,
            1,
            2.0,
            1.0,
            8.0,
            500,
            RngSpec::new(67, 0),
            &budget(),
        )
        .unwrap();
        let beta1 = 2.0;
        assert!((report.base_profile[1] - 2.0).abs() < 1e-9);
        assert!((report.base_profile[2] - 2.0).abs() < 1e-9);
        assert!((report.cross_term - 2.0f64.sqrt().powf(beta1)).abs() < 1e-9);
    }

    #[test]
    fn tilde_contraction_below_threshold_reports() {
        let dm = dims(1, 1);
        let h = HeightFunction::standard(dm, 3.0, 0.1, 0.2).unwrap();
        let out = verify_tilde_contraction(
            &Lattice::standard(dm),
            &h,
            3.0,
            8.0,
            16.0,
            100,
            RngSpec::new(71, 0),
            &budget(),
        )
        .unwrap();
        match out {
            TildeContraction::BelowThreshold { height, .. } => {
                assert!((height - 3.0).abs() < 1e-12)
            }
            TildeContraction::Checked(_) => panic!("standard lattice is below threshold"),
        }
    }

    #[test]
    fn tilde_contraction_far_in_the_cusp() {
        // push along the divergent rational direction: contraction with a
        // single-digit constant at t = 3
        let dm = dims(1, 1);
        let h = HeightFunction::standard(dm, 3.0, 0.1, 0.2).unwrap();
        let s = DMatrix::from_element(1, 1, 0.5);
        let x = lattice::flow_point(&Lattice::standard(dm), &s, 5.0).unwrap();
        let out = verify_tilde_contraction(
            &x,
            &h,
            3.0,
            8.0,
            16.0,
            20_000,
            RngSpec::new(73, 0),
            &budget(),
        )
        .unwrap();
        match out {
            TildeContraction::Checked(rep) => {
                assert!(rep.pass, "implied c = {}", rep.implied_c);
                assert!(rep.implied_c < 8.0);
            }
            TildeContraction::BelowThreshold { height, .. } => {
                panic!("cusp excursion scored {height}, expected above threshold")
            }
        }
    }

    #[test]
    fn iterate_single_step_matches_plain_average() {
        let dm = dims(1, 1);
        let h = HeightFunction::standard(dm, 2.0, 0.1, 0.2).unwrap();
        let s = DMatrix::from_element(1, 1, 0.5);
        let x = lattice::flow_point(&Lattice::standard(dm), &s, 4.0).unwrap();
        let spec = RngSpec::new(79, 0);
        let iter = iterate_contraction(&x, &h, 2.0, 1, 16.0, 8.0, 1.0, 6000, spec, &budget())
            .unwrap();
        // with one step there is no intermediate restriction
        assert_eq!(
            iter.restricted.mean.to_bits(),
            iter.unrestricted.mean.to_bits()
        );
        let height = heights::composite_height(&x, &h, &budget()).unwrap();
        let plain = tilde_average(&x, &h, 2.0, 8.0, height, 6000, spec, &budget()).unwrap();
        assert_eq!(iter.restricted.mean.to_bits(), plain.lhs.mean.to_bits());
    }

    #[test]
    fn restriction_is_monotone() {
        let dm = dims(1, 1);
        let h = HeightFunction::standard(dm, 2.0, 0.1, 0.2).unwrap();
        let s = DMatrix::from_element(1, 1, 0.5);
        let x = lattice::flow_point(&Lattice::standard(dm), &s, 4.0).unwrap();
        let iter = iterate_contraction(
            &x,
            &h,
            2.0,
            3,
            16.0,
            8.0,
            1.0,
            4000,
            RngSpec::new(83, 0),
            &budget(),
        )
        .unwrap();
        assert!(iter.restricted.mean <= iter.unrestricted.mean + 1e-12);
        assert!(iter.sigma_sq >= 1.0 && iter.sigma_sq <= 2.0);
    }

    #[test]
    fn threshold_search_returns_a_power_of_two() {
        let dm = dims(1, 1);
        let h = HeightFunction::standard(dm, 3.0, 0.1, 0.2).unwrap();
        let probes = default_probes(dm, RngSpec::new(89, 0), 10);
        let region = estimate_m_tilde(
            &h,
            3.0,
            8.0,
            &probes,
            4000,
            RngSpec::new(89, 1),
            &budget(),
        )
        .unwrap();
        let log2 = region.threshold.log2();
        assert!((log2 - log2.round()).abs() < 1e-12);
        assert_eq!(region.m_tilde, Some(region.threshold));
    }
}
