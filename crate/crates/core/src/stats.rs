//! Ensemble statistics and goodness-of-fit helpers shared by the
//! Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Mean, sample standard deviation and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut acc = Welford::default();
        values.iter().for_each(|&v| acc.push(v));
        acc.summary()
    }

    /// `|mean - target|` in standard errors. Infinite when the sample has no
    /// spread but misses the target.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

/// Streaming mean/variance accumulator. Merging is exact up to rounding, so
/// callers that need bit-stable output merge in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64) / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn summary(&self) -> Summary {
        let n = self.count as usize;
        let var = if n > 1 { self.m2 / (n as f64 - 1.0) } else { 0.0 };
        let std = var.sqrt();
        Summary {
            count: n,
            mean: self.mean,
            std,
            stderr: if n > 0 { std / (n as f64).sqrt() } else { f64::NAN },
        }
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Asymptotic two-sided Kolmogorov–Smirnov critical value at level `alpha`
/// for `n` samples.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between lattice-valued samples and a
/// continuous CDF. The empirical CDF is compared at each occupied lattice
/// point `x` against `cdf(x + half_cell)` (continuity correction), which is
/// the right comparison when the continuous law approximates the mass of
/// whole lattice cells.
pub fn ks_lattice<F: Fn(f64) -> f64>(samples: &[f64], half_cell: f64, cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let below = i as f64 / n;
        while i < sorted.len() && sorted[i] == x {
            i += 1;
        }
        let at = i as f64 / n;
        worst = worst.max((at - cdf(x + half_cell)).abs());
        worst = worst.max((below - cdf(x - half_cell)).abs());
    }
    worst
}

/// Pearson chi-square goodness of fit of `observed` counts against cell
/// probabilities `expected_prob` (which should sum to 1). Adjacent cells are
/// pooled left to right until each pooled cell expects at least
/// `min_expected` counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub fn chi_square_gof(observed: &[u64], expected_prob: &[f64], min_expected: f64) -> ChiSquareTest {
    assert_eq!(observed.len(), expected_prob.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(expected_prob) {
        o += obs as f64;
        e += p * total;
        if e >= min_expected {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(statistic);
    ChiSquareTest {
        statistic,
        dof,
        p_value,
    }
}

/// First abscissa where the piecewise-linear curve through `(xs, ys)`
/// crosses `level`, interpolating in `ln x` (sweeps are log-spaced).
/// Returns `None` if the curve never reaches the level.
pub fn log_crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    for k in 1..xs.len() {
        let (y0, y1) = (ys[k - 1] - level, ys[k] - level);
        if y0 == 0.0 {
            return Some(xs[k - 1]);
        }
        if y0.signum() != y1.signum() {
            let t = y0 / (y0 - y1);
            let (l0, l1) = (xs[k - 1].ln(), xs[k].ln());
            return Some((l0 + t * (l1 - l0)).exp());
        }
    }
    None
}

/// `count` points geometrically spaced over `[lo, hi]`.
pub fn geomspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi / lo).ln() / (count - 1) as f64;
            (0..count).map(|i| lo * (step * i as f64).exp()).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_small_sample() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.stderr - s.std / 2.0).abs() < 1e-15);
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let whole = Summary::of(&xs);
        assert!((a.summary().mean - whole.mean).abs() < 1e-14);
        assert!((a.summary().std - whole.std).abs() < 1e-14);
    }

    #[test]
    fn ks_critical_value_at_one_percent() {
        assert!((ks_critical(0.01, 1) - 1.6276).abs() < 1e-4);
    }

    #[test]
    fn chi_square_accepts_exact_counts() {
        let t = chi_square_gof(&[250, 250, 500], &[0.25, 0.25, 0.5], 5.0);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_interpolates_in_log_space() {
        let x = log_crossing(&[1.0, 100.0], &[1.0, 0.0], 0.5).unwrap();
        assert!((x - 10.0).abs() < 1e-12);
        assert!(log_crossing(&[1.0, 2.0], &[1.0, 0.9], 0.5).is_none());
    }
}
