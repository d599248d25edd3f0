//! Escape-set surveys: occupancy of the set of horospherical directions
//! whose orbit spends a delta-fraction of its first N steps outside the
//! compact sublevel region, the covering-count comparison, and box-count
//! dimension estimates.

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dims::Dimensions;
use crate::error::{Error, Result};
use crate::heights::{self, EnumBudget, HeightFunction};
use crate::lattice::{self, Lattice};
use crate::mc::RngSpec;
use crate::stats;

/// Parameters of one escape survey.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EscapeConfig {
    pub dims: Dimensions,
    /// Flow time per step; positive.
    pub t: f64,
    /// Number of steps N.
    pub steps: usize,
    /// Escape proportion threshold in (0, 1].
    pub delta: f64,
    /// Sublevel threshold M defining the compact region.
    pub threshold: f64,
    /// Cell side; defaults to e^{-(m+n) t N}.
    pub resolution: f64,
    /// Sample count for Monte Carlo occupancy mode.
    pub mc_samples: u64,
    /// Covering-count slack factor absorbing the cube/ball mismatch.
    pub slack: f64,
}

impl EscapeConfig {
    pub fn new(dims: Dimensions, t: f64, steps: usize, delta: f64, threshold: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::validation("step time must be positive"));
        }
        if steps == 0 {
            return Err(Error::validation("need at least one step"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::validation("delta must lie in (0, 1]"));
        }
        let resolution = (-(dims.d() as f64) * t * steps as f64).exp();
        Ok(EscapeConfig {
            dims,
            t,
            steps,
            delta,
            threshold,
            resolution,
            mc_samples: 200_000,
            slack: 2.0f64.powi(dims.mn() as i32),
        })
    }

    pub fn with_resolution(mut self, r: f64) -> Self {
        self.resolution = r;
        self
    }

    /// Number of cells per axis covering (-1, 1).
    fn cells_per_axis(&self) -> u64 {
        (2.0 / self.resolution - 1e-9).ceil().max(1.0) as u64
    }

    fn total_cells(&self) -> f64 {
        (self.cells_per_axis() as f64).powi(self.dims.mn() as i32)
    }
}

/// Fraction of steps 1..=N at which the orbit of u_s x0 sits outside the
/// sublevel region.
pub fn escape_fraction(
    x0: &Lattice,
    s: &DMatrix<f64>,
    h: &HeightFunction,
    cfg: &EscapeConfig,
    budget: &EnumBudget,
) -> Result<f64> {
    let u = lattice::horospherical(cfg.dims, s)?;
    let mut y = lattice::act(&u, x0)?;
    let g = lattice::diagonal_flow(cfg.dims, cfg.t);
    let mut outside = 0usize;
    for _ in 1..=cfg.steps {
        y = lattice::act(&g, &y)?;
        if heights::composite_height(&y, h, budget)? > cfg.threshold {
            outside += 1;
        }
    }
    Ok(outside as f64 / cfg.steps as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurveyMode {
    FullGrid,
    MonteCarlo,
}

/// Occupancy of the escape set at one resolution, with the covering bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSurvey {
    pub resolution: f64,
    pub mode: SurveyMode,
    /// Cell count of the grid over (-1,1)^{mn}.
    pub total: f64,
    /// Occupied cell count (exact in grid mode, estimated in MC mode).
    pub occupied: f64,
    /// Covering-count bound C(x) t^{3N} e^{(m+n-delta) mn t N}.
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub samples: u64,
}

/// Cap on full-grid size.
pub const GRID_BUDGET: f64 = 1e8;

/// Survey the escape set over the cube (-1,1)^{mn} at the configured
/// resolution: full grid with one center probe per cell when affordable,
/// otherwise Monte Carlo occupancy (measure times r^{-mn}).
pub fn survey(
    x0: &Lattice,
    h: &HeightFunction,
    cfg: &EscapeConfig,
    spec: RngSpec,
    budget: &EnumBudget,
) -> Result<CellSurvey> {
    let total = cfg.total_cells();
    let bound = covering_bound(x0, cfg, budget)?;

    if total <= GRID_BUDGET {
        let cpa = cfg.cells_per_axis();
        let n_cells = (total as u64).max(1);
        let occupied: u64 = (0..n_cells)
            .into_par_iter()
            .map(|flat| {
                let mut rem = flat;
                let mut s = DMatrix::zeros(cfg.dims.m(), cfg.dims.n());
                for entry in s.iter_mut() {
                    let k = rem % cpa;
                    rem /= cpa;
                    *entry = -1.0 + (k as f64 + 0.5) * cfg.resolution;
                }
                let frac = escape_fraction(x0, &s, h, cfg, budget).unwrap_or(1.0);
                u64::from(frac >= cfg.delta)
            })
            .sum();
        Ok(CellSurvey {
            resolution: cfg.resolution,
            mode: SurveyMode::FullGrid,
            total,
            occupied: occupied as f64,
            bound,
            slack: cfg.slack,
            pass: (occupied as f64) <= bound * cfg.slack,
            samples: n_cells,
        })
    } else {
        if cfg.mc_samples == 0 {
            return Err(Error::resource(
                "full-grid survey",
                format!("{total} cells exceed {GRID_BUDGET}"),
            ));
        }
        let est = crate::mc::parallel_estimate(spec, cfg.mc_samples, |rng| {
            let s = DMatrix::from_fn(cfg.dims.m(), cfg.dims.n(), |_, _| rng.gen_range(-1.0..1.0));
            let frac = escape_fraction(x0, &s, h, cfg, budget)?;
            Ok(f64::from(frac >= cfg.delta))
        })?;
        let occupied = est.mean * total;
        Ok(CellSurvey {
            resolution: cfg.resolution,
            mode: SurveyMode::MonteCarlo,
            total,
            occupied,
            bound,
            slack: cfg.slack,
            pass: occupied <= bound * cfg.slack + 3.0 * est.stderr * total,
            samples: cfg.mc_samples,
        })
    }
}

/// The covering-count bound with the exact prefactor max alpha_i^{beta_i}.
pub fn covering_bound(x0: &Lattice, cfg: &EscapeConfig, budget: &EnumBudget) -> Result<f64> {
    let c_x = heights::covering_constant(x0, budget)?;
    let dims = cfg.dims;
    let exponent =
        (dims.d() as f64 - cfg.delta) * dims.mn() as f64 * cfg.t * cfg.steps as f64;
    Ok(c_x * cfg.t.powi(3 * cfg.steps as i32) * exponent.exp())
}

/// Box-count dimension estimate over a resolution ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub resolutions: Vec<f64>,
    pub counts: Vec<f64>,
    /// Least-squares slope of log count against log(1/r), clamped to
    /// [0, mn].
    pub fitted_dim: f64,
    pub raw_slope: f64,
    /// Set when every ladder point came up empty.
    pub empty: bool,
    /// Box-dimension bound at this (t, delta):
    /// (m+n-delta) mn/(m+n) + 3 log t / ((m+n) t).
    pub theory_box: f64,
    /// Dimension bound mn - delta mn/(m+n).
    pub theory_dim: f64,
}

/// Survey the escape set at resolutions r_N = e^{-(m+n) t N} over the given
/// ladder of step counts and fit the box-count slope.
pub fn dimension_estimate(
    x0: &Lattice,
    h: &HeightFunction,
    base: &EscapeConfig,
    ladder: &[usize],
    spec: RngSpec,
    budget: &EnumBudget,
) -> Result<DimensionEstimate> {
    if ladder.len() < 3 {
        return Err(Error::validation("resolution ladder needs at least 3 points"));
    }
    let mut resolutions = Vec::with_capacity(ladder.len());
    let mut counts = Vec::with_capacity(ladder.len());
    for (k, &steps) in ladder.iter().enumerate() {
        let mut cfg = EscapeConfig::new(base.dims, base.t, steps, base.delta, base.threshold)?;
        cfg.mc_samples = base.mc_samples;
        cfg.slack = base.slack;
        let cell = survey(x0, h, &cfg, RngSpec::new(spec.seed, spec.stream + k as u64), budget)?;
        resolutions.push(cfg.resolution);
        counts.push(cell.occupied);
    }

    let dims = base.dims;
    let mn = dims.mn() as f64;
    let theory_box = (dims.d() as f64 - base.delta) * mn / dims.d() as f64
        + 3.0 * base.t.ln() / (dims.d() as f64 * base.t);
    let theory_dim = mn - base.delta * mn / dims.d() as f64;

    let usable: Vec<(f64, f64)> = resolutions
        .iter()
        .zip(&counts)
        .filter(|&(_, &c)| c > 0.0)
        .map(|(&r, &c)| ((1.0 / r).ln(), c.ln()))
        .collect();
    if usable.len() < 2 {
        return Ok(DimensionEstimate {
            resolutions,
            counts,
            fitted_dim: 0.0,
            raw_slope: 0.0,
            empty: true,
            theory_box,
            theory_dim,
        });
    }
    let xs: Vec<f64> = usable.iter().map(|&(x, _)| x).collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, y)| y).collect();
    let (_, slope) = stats::least_squares(&xs, &ys);
    Ok(DimensionEstimate {
        resolutions,
        counts,
        fitted_dim: slope.clamp(0.0, mn),
        raw_slope: slope,
        empty: false,
        theory_box,
        theory_dim,
    })
}

/// The dimension bound mn - delta mn/(m+n) as an exact fraction and float.
pub fn theoretical_bound(dims: Dimensions, delta: Ratio<i64>) -> (Ratio<i64>, f64) {
    let mn = Ratio::from_integer(dims.mn() as i64);
    let d = Ratio::from_integer(dims.d() as i64);
    let exact = mn - delta * mn / d;
    let float = *exact.numer() as f64 / *exact.denom() as f64;
    (exact, float)
}
