//! Back-to-unity tie-decay model.
//!
//! An interaction resets the tie strength to 1; otherwise it decays by
//! `e^{-alpha}` per step. Strengths therefore stay in `[0, 1]`, and after a
//! run a tie's strength is `e^{-alpha k}` where `k` is the number of steps
//! since its last interaction (or `s0 e^{-alpha T}` if it never interacted).

use rand::Rng;

use crate::additive::SweepRow;
use crate::error::{domain, invalid, Result};
use crate::events::{fold_events, InteractionProcess};
use crate::graph::{pair_at, pair_count, ComponentReport, ThresholdMode, TieMatrix, UnionFind};
use crate::rng::{derive_seed, realization_rng, unit_rng, EDGE_BLOCK};
use crate::stats::{Summary, Welford};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackToUnityParams {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub steps: u32,
    pub g: f64,
}

impl BackToUnityParams {
    pub fn new(n: usize, p: f64, alpha: f64, steps: u32, g: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("node count must be positive"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("interaction probability must lie in [0, 1], got {p}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("decay rate must be positive, got {alpha}")));
        }
        if !(g > 0.0 && g <= 1.0) {
            return Err(invalid(format!("threshold must lie in (0, 1], got {g}")));
        }
        Ok(Self { n, p, alpha, steps, g })
    }

    pub fn sigma(&self) -> f64 {
        (-self.alpha).exp()
    }

    /// `ceil(-ln g / alpha)`, the number of recent steps in which an
    /// interaction keeps a tie at or above `g`.
    pub fn q(&self) -> u64 {
        window(self.alpha, self.g)
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.n, p, self.alpha, self.steps, self.g)
    }
}

fn window(alpha: f64, g: f64) -> u64 {
    (-g.ln() / alpha).ceil().max(0.0) as u64
}

/// One update: reset to 1 after an interaction, decay otherwise.
pub fn step_edge_b2u(s: f64, interacted: bool, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("back-to-unity strength must lie in [0, 1], got {s}")));
    }
    Ok(if interacted { 1.0 } else { s * (-alpha).exp() })
}

/// Long-run `E[s^n] = p / (1 - sigma^n (1 - p))`.
pub fn moment_stationary_b2u(p: f64, alpha: f64, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(invalid("moment order must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) || !(alpha >= 0.0) {
        return Err(invalid(format!("need 0 <= p <= 1 and alpha >= 0, got p={p}, alpha={alpha}")));
    }
    let sigma_n = (-alpha * order as f64).exp();
    let denom = 1.0 - sigma_n * (1.0 - p);
    if denom == 0.0 {
        return Err(domain("no stationary moment for p = 0 and alpha = 0"));
    }
    Ok(p / denom)
}

/// `P(s >= g) = 1 - (1 - p)^q` with `q = ceil(-ln g / alpha)`.
pub fn prob_active(p: f64, alpha: f64, g: f64) -> f64 {
    let q = window(alpha, g);
    if q == 0 {
        return 0.0;
    }
    -((-p).ln_1p() * q as f64).exp_m1()
}

/// A giant component is predicted when more than `1/n` of ties are active.
pub fn gcc_predicted(n: usize, p: f64, alpha: f64, g: f64) -> bool {
    prob_active(p, alpha, g) > 1.0 / n as f64
}

/// Exact inverse of [`prob_active`] at `1/n`: `1 - (1 - 1/n)^{1/q}`.
pub fn critical_p(n: usize, alpha: f64, g: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("critical probability needs n >= 2"));
    }
    if !(g > 0.0 && g <= 1.0) || !(alpha > 0.0) {
        return Err(invalid(format!("need g in (0, 1] and alpha > 0, got g={g}, alpha={alpha}")));
    }
    let q = window(alpha, g);
    if q == 0 {
        return Err(domain("no finite critical probability at g = 1"));
    }
    Ok(-((-1.0 / n as f64).ln_1p() / q as f64).exp_m1())
}

/// Leading-order approximation `1 / (n q)` of [`critical_p`].
pub fn critical_p_approx(n: usize, alpha: f64, g: f64) -> Result<f64> {
    critical_p(n, alpha, g)?;
    Ok(1.0 / (n as f64 * window(alpha, g) as f64))
}

/// Strength after the run given the steps since the last interaction.
#[inline]
fn strength_from_lag(lag: u32, alpha: f64) -> f64 {
    (-alpha * lag as f64).exp()
}

/// `(pair index, strength)` for every pair that interacted at least once.
fn sparse_realization(params: &BackToUnityParams, seed: u64, stream: u64) -> Vec<(usize, f64)> {
    let process = InteractionProcess::new(params.p, params.steps);
    let alpha = params.alpha;
    process.par_map_last(pair_count(params.n), seed, stream, |idx, lag| (idx, strength_from_lag(lag, alpha)))
}

/// Full network after `params.steps` steps from zero strength.
pub fn simulate_b2u(params: &BackToUnityParams, seed: u64) -> TieMatrix {
    let mut strengths = vec![0.0; pair_count(params.n)];
    for (idx, s) in sparse_realization(params, seed, 0) {
        strengths[idx] = s;
    }
    TieMatrix::from_upper(params.n, strengths).expect("strengths lie in [0, 1]")
}

/// Largest-component census of `simulate_b2u` thresholded at `g` (at least).
pub fn components_b2u(params: &BackToUnityParams, seed: u64) -> ComponentReport {
    census(params, &sparse_realization(params, seed, 0))
}

fn census(params: &BackToUnityParams, sparse: &[(usize, f64)]) -> ComponentReport {
    let mut uf = UnionFind::new(params.n);
    for &(idx, s) in sparse {
        if ThresholdMode::AtLeast.is_active(s, params.g) {
            let (e, f) = pair_at(params.n, idx);
            uf.union(e, f);
        }
    }
    ComponentReport::from_union_find(&mut uf)
}

/// Mean largest-component fraction for each `p` in `p_grid`. Grid point `k`
/// draws from seed `derive_seed(seed, k)`, realization `r` from stream `r`.
pub fn gcc_sweep_b2u(params: &BackToUnityParams, p_grid: &[f64], realizations: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if realizations == 0 {
        return Err(invalid("at least one realization is required"));
    }
    p_grid
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let at_p = params.with_p(p)?;
            let point_seed = derive_seed(seed, k as u64);
            let fractions: Vec<f64> = (0..realizations)
                .map(|r| census(&at_p, &sparse_realization(&at_p, point_seed, r as u64)).largest_fraction)
                .collect();
            let s = Summary::of(&fractions);
            Ok(SweepRow {
                x: p,
                mean_fraction: s.mean,
                stderr: s.stderr,
            })
        })
        .collect()
}

/// Single-tie statistics after `params.steps` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TieEnsemble {
    pub strength: Summary,
    /// Indicator of `s >= g`.
    pub active: Summary,
}

/// `edges` independent ties run through every interaction (not just the
/// last one), starting from `s0 = 0`.
pub fn tie_ensemble(params: &BackToUnityParams, edges: usize, seed: u64) -> TieEnsemble {
    use rayon::prelude::*;
    let process = InteractionProcess::new(params.p, params.steps);
    let (t, alpha, g) = (params.steps, params.alpha, params.g);
    let blocks = edges.div_ceil(EDGE_BLOCK);
    let merged = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = unit_rng(seed, 0, b as u64);
            let (lo, hi) = (b * EDGE_BLOCK, ((b + 1) * EDGE_BLOCK).min(edges));
            let (mut strength, mut active) = (Welford::default(), Welford::default());
            let mut visited = 0;
            process.for_each_in_range(&mut rng, lo, hi, |_, ev| {
                let s = fold_events(ev, t, 0.0, alpha, |_| 1.0);
                strength.push(s);
                active.push(if s >= g { 1.0 } else { 0.0 });
                visited += 1;
            });
            for _ in visited..(hi - lo) {
                strength.push(0.0);
                active.push(0.0);
            }
            (strength, active)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((Welford::default(), Welford::default()), |(mut a, mut b), (x, y)| {
            a.merge(&x);
            b.merge(&y);
            (a, b)
        });
    TieEnsemble {
        strength: merged.0.summary(),
        active: merged.1.summary(),
    }
}

/// Single-tie trajectory `s_0 = 0, ..., s_T`, one coin per step.
pub fn trace_b2u(params: &BackToUnityParams, seed: u64) -> Vec<f64> {
    let mut rng = realization_rng(seed, 0);
    let mut s = 0.0;
    let mut out = Vec::with_capacity(params.steps as usize + 1);
    out.push(s);
    for _ in 0..params.steps {
        s = step_edge_b2u(s, rng.random::<f64>() < params.p, params.alpha).expect("strength stays in [0, 1]");
        out.push(s);
    }
    out
}
