//! Small statistics helpers shared by the Monte Carlo estimators and the
//! survey fits.

/// Running sum / sum-of-squares accumulator with an exact merge, so that
/// chunked parallel estimation is schedule-independent.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    /// Merge must be applied in a fixed chunk order to keep results
    /// bit-identical across thread counts.
    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.sum / self.n as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let var = (self.sum_sq - self.sum * self.sum / n).max(0.0) / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Ordinary least squares fit y = a + b x. Returns (intercept, slope).
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    weighted_least_squares(xs, ys, &vec![1.0; xs.len()]).0
}

/// Weighted least squares fit y = a + b x.
/// Returns ((intercept, slope), stderr of the slope under unit-variance
/// per unit weight).
pub fn weighted_least_squares(xs: &[f64], ys: &[f64], ws: &[f64]) -> ((f64, f64), f64) {
    assert_eq!(xs.len(), ys.len());
    assert_eq!(xs.len(), ws.len());
    let sw: f64 = ws.iter().sum();
    let xbar: f64 = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ybar: f64 = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - xbar) * (x - xbar);
        sxy += w * (x - xbar) * (y - ybar);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    ((intercept, slope), (1.0 / sxx).sqrt())
}

/// Spearman rank correlation. Ranks with average ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Chi-square goodness-of-fit p-value for observed counts against expected
/// counts (upper tail).
pub fn chi_square_p_value(observed: &[u64], expected: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    assert_eq!(observed.len(), expected.len());
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let dof = (observed.len() - 1) as f64;
    let chi = ChiSquared::new(dof).expect("valid dof");
    1.0 - chi.cdf(stat)
}

/// Full-precision decimal formatting: 17 significant digits round-trip f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
