//! Additive tie-decay model `G(n, p, alpha, T)`.
//!
//! Every unordered pair interacts independently with probability `p` per
//! unit step. An interaction adds 1 to the tie strength; a step without one
//! multiplies it by `sigma = e^{-alpha}`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, invalid, Result};
use crate::events::{fold_events, InteractionProcess};
use crate::graph::{pair_at, pair_count, ComponentReport, Threshold, ThresholdMode, TieMatrix, UnionFind};
use crate::rng::{realization_rng, EDGE_BLOCK};
use crate::stats::{Summary, Welford};

/// Largest `lambda = T p` accepted by the single-arrival approximation.
pub const SINGLE_ARRIVAL_MAX_LAMBDA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveParams {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub steps: u32,
    pub s0: f64,
}

impl AdditiveParams {
    pub fn new(n: usize, p: f64, alpha: f64, steps: u32) -> Result<Self> {
        Self::with_initial(n, p, alpha, steps, 0.0)
    }

    pub fn with_initial(n: usize, p: f64, alpha: f64, steps: u32, s0: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("node count must be positive"));
        }
        if !(0.0..1.0).contains(&p) {
            return Err(invalid(format!("interaction probability must lie in [0, 1), got {p}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("decay rate must be positive, got {alpha}")));
        }
        if !(s0 >= 0.0 && s0.is_finite()) {
            return Err(invalid(format!("initial strength must be >= 0, got {s0}")));
        }
        Ok(Self { n, p, alpha, steps, s0 })
    }

    pub fn sigma(&self) -> f64 {
        (-self.alpha).exp()
    }

    /// Expected number of interactions per pair over the run.
    pub fn lambda(&self) -> f64 {
        self.steps as f64 * self.p
    }

    /// Strength of a pair that never interacted.
    pub fn background_strength(&self) -> f64 {
        self.s0 * (-self.alpha * self.steps as f64).exp()
    }
}

/// One update: `s + 1` after an interaction, `s e^{-alpha}` otherwise.
#[inline]
pub fn step_edge(s: f64, interacted: bool, alpha: f64) -> f64 {
    if interacted {
        s + 1.0
    } else {
        s * (-alpha).exp()
    }
}

/// Strength after `t` steps for a pair with the given interaction steps.
pub fn strength_from_events(events: &[u32], t: u32, s0: f64, alpha: f64) -> f64 {
    fold_events(events, t, s0, alpha, |s| s + 1.0)
}

/// Burn-in used when an ensemble must be at stationarity.
pub fn burn_in_steps(alpha: f64) -> u32 {
    500u32.max((10.0 / alpha).ceil() as u32)
}

/// Full network after `params.steps` steps. Equivalent to realization 0 of
/// [`gcc_sweep`] under the same seed.
pub fn simulate(params: &AdditiveParams, seed: u64) -> TieMatrix {
    simulate_realization(params, seed, 0)
}

fn simulate_realization(params: &AdditiveParams, seed: u64, realization: u64) -> TieMatrix {
    let sparse = sparse_realization(params, seed, realization);
    let mut strengths = vec![params.background_strength(); pair_count(params.n)];
    for (idx, s) in sparse {
        strengths[idx] = s;
    }
    TieMatrix::from_upper(params.n, strengths).expect("strengths are non-negative")
}

/// `(pair index, strength)` for every pair that interacted at least once.
fn sparse_realization(params: &AdditiveParams, seed: u64, realization: u64) -> Vec<(usize, f64)> {
    let process = InteractionProcess::new(params.p, params.steps);
    let (t, s0, alpha) = (params.steps, params.s0, params.alpha);
    process.par_map_blocks(pair_count(params.n), seed, realization, |idx, ev| {
        (idx, strength_from_events(ev, t, s0, alpha))
    })
}

/// Single-pair trajectory `s_0, ..., s_T`, flipping one coin per step.
pub fn trace(params: &AdditiveParams, seed: u64) -> Vec<f64> {
    let mut rng = realization_rng(seed, 0);
    let mut s = params.s0;
    let mut out = Vec::with_capacity(params.steps as usize + 1);
    out.push(s);
    for _ in 0..params.steps {
        s = step_edge(s, rng.random::<f64>() < params.p, params.alpha);
        out.push(s);
    }
    out
}

/// Ensemble statistics of one pair's strength at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalSnapshot {
    pub t: u32,
    pub strength: Summary,
    /// Sample raw moments `E[s], E[s^2], E[s^3]` with their standard errors.
    pub raw_moments: [Summary; 3],
}

/// Marginal mode: `edges` i.i.d. copies of one pair, recorded at each
/// checkpoint. The run length is the largest checkpoint; `params.steps` and
/// `params.n` are not used.
pub fn simulate_marginal(params: &AdditiveParams, checkpoints: &[u32], edges: usize, seed: u64) -> Vec<MarginalSnapshot> {
    let horizon = checkpoints.iter().copied().max().unwrap_or(0);
    let process = InteractionProcess::new(params.p, horizon);
    let (s0, alpha) = (params.s0, params.alpha);
    let blocks = edges.div_ceil(EDGE_BLOCK);
    let per_block: Vec<Vec<[Welford; 3]>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![[Welford::default(); 3]; checkpoints.len()];
            let mut rng = crate::rng::unit_rng(seed, 0, b as u64);
            let lo = b * EDGE_BLOCK;
            let hi = (lo + EDGE_BLOCK).min(edges);
            let mut next_quiet = lo;
            let record = |acc: &mut Vec<[Welford; 3]>, ev: &[u32]| {
                for (slot, &t) in acc.iter_mut().zip(checkpoints) {
                    let s = strength_from_events(ev, t, s0, alpha);
                    slot[0].push(s);
                    slot[1].push(s * s);
                    slot[2].push(s * s * s);
                }
            };
            process.for_each_in_range(&mut rng, lo, hi, |e, ev| {
                for _ in next_quiet..e {
                    record(&mut acc, &[]);
                }
                record(&mut acc, ev);
                next_quiet = e + 1;
            });
            for _ in next_quiet..hi {
                record(&mut acc, &[]);
            }
            acc
        })
        .collect();

    checkpoints
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut total = [Welford::default(); 3];
            for block in &per_block {
                for (m, w) in total.iter_mut().zip(&block[k]) {
                    m.merge(w);
                }
            }
            MarginalSnapshot {
                t,
                strength: total[0].summary(),
                raw_moments: [total[0].summary(), total[1].summary(), total[2].summary()],
            }
        })
        .collect()
}

fn check_stationary(p: f64, alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(domain(format!("no stationary state for p = {p}; need 0 <= p < 1")));
    }
    if !(alpha > 0.0) {
        return Err(domain(format!("no stationary state for alpha = {alpha}; need alpha > 0")));
    }
    Ok(())
}

/// Truncated-sum approximation of `E[s_t]` (started from zero): the terms
/// `p^i e^{-j alpha}` with `i >= 1` and `i + j <= t`, each with coefficient 1.
pub fn mean_finite_time(p: f64, alpha: f64, t: u32) -> f64 {
    let sigma = (-alpha).exp();
    let mut total = 0.0;
    let mut p_pow = 1.0;
    for i in 1..=t {
        p_pow *= p;
        if p_pow == 0.0 {
            break;
        }
        // sum_{j=0}^{t-i} sigma^j
        let terms = (t - i + 1) as f64;
        let inner = if sigma < 1.0 {
            -(alpha * -terms).exp_m1() / -(-alpha).exp_m1()
        } else {
            terms
        };
        total += p_pow * inner;
    }
    total
}

/// Long-run mean `p / ((1 - sigma)(1 - p))`.
pub fn mean_stationary(p: f64, alpha: f64) -> Result<f64> {
    check_stationary(p, alpha)?;
    Ok(p / (-(-alpha).exp_m1() * (1.0 - p)))
}

/// Long-run variance `p / ((1 - sigma^2)(1 - p)^2)`.
pub fn variance_stationary(p: f64, alpha: f64) -> Result<f64> {
    check_stationary(p, alpha)?;
    Ok(p / (-(-2.0 * alpha).exp_m1() * (1.0 - p) * (1.0 - p)))
}

/// Stationary raw moments `m_1..m_{n_max}` from the recursion
/// `m_n = p sum_{j=1}^{n} C(n, j) m_{n-j} / ((1 - p)(1 - sigma^n))`, `m_0 = 1`.
pub fn raw_moments_stationary(p: f64, alpha: f64, n_max: usize) -> Result<Vec<f64>> {
    check_stationary(p, alpha)?;
    if n_max == 0 {
        return Err(invalid("moment order must be at least 1"));
    }
    let mut m = vec![1.0];
    for n in 1..=n_max {
        let mut binom = 1.0; // C(n, 0)
        let mut acc = 0.0;
        for j in 1..=n {
            binom = binom * (n - j + 1) as f64 / j as f64;
            acc += binom * m[n - j];
        }
        let one_minus_sigma_n = -(-(alpha * n as f64)).exp_m1();
        m.push(p * acc / ((1.0 - p) * one_minus_sigma_n));
    }
    m.remove(0);
    Ok(m)
}

fn check_single_arrival(params: &AdditiveParams) -> Result<()> {
    let lambda = params.lambda();
    if lambda > SINGLE_ARRIVAL_MAX_LAMBDA {
        return Err(domain(format!(
            "single-arrival approximation needs lambda = Tp <= {SINGLE_ARRIVAL_MAX_LAMBDA}, got {lambda}"
        )));
    }
    Ok(())
}

/// `P(s < s_tilde)` at the end of the run, keeping only runs with zero or
/// one interaction: `e^{-Tp} (1 + (p/alpha) ln(s_tilde e^{T alpha} - s0))`,
/// clamped to `[0, 1]`. Below `(s0 + 1) e^{-T alpha}` the one-interaction
/// runs cannot fall under `s_tilde`, leaving only the no-interaction mass.
pub fn poisson_cdf_approx(params: &AdditiveParams, s_tilde: f64) -> Result<f64> {
    check_single_arrival(params)?;
    let t_alpha = params.steps as f64 * params.alpha;
    let shifted = s_tilde * t_alpha.exp() - params.s0;
    if !(shifted > 0.0) {
        return Err(domain(format!(
            "ln(s_tilde e^(T alpha) - s0) is undefined for s_tilde = {s_tilde}, s0 = {}",
            params.s0
        )));
    }
    let no_arrival = (-params.lambda()).exp();
    if shifted < 1.0 {
        return Ok(no_arrival);
    }
    let value = no_arrival * (1.0 + params.p / params.alpha * shifted.ln());
    Ok(value.clamp(0.0, 1.0))
}

/// Threshold at which the single-arrival approximation puts exactly `1/n`
/// of the pairs at or above it:
/// `exp((alpha/p)(e^{Tp}(1 - 1/n) - 1) - T alpha) + s0 e^{-T alpha}`.
/// Thresholds below it predict a giant component.
pub fn critical_threshold(params: &AdditiveParams) -> Result<f64> {
    if params.p == 0.0 {
        return Err(domain("critical threshold is undefined for p = 0"));
    }
    if params.n < 2 {
        return Err(invalid("critical threshold needs n >= 2"));
    }
    check_single_arrival(params)?;
    let keep = 1.0 - 1.0 / params.n as f64;
    let growth = params.lambda().exp() * keep - 1.0;
    if growth < 0.0 {
        return Err(domain(format!(
            "no threshold reaches 1/n active pairs: 1 - e^(-Tp) = {} < 1/{}",
            -(-params.lambda()).exp_m1(),
            params.n
        )));
    }
    let t_alpha = params.steps as f64 * params.alpha;
    Ok((params.alpha / params.p * growth - t_alpha).exp() + params.s0 * (-t_alpha).exp())
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub mean_fraction: f64,
    pub stderr: f64,
}

/// Mean largest-component fraction against the threshold `g`, averaged
/// over `realizations` networks. Realization `r` uses keystream `r`.
pub fn gcc_sweep(
    params: &AdditiveParams,
    thresholds: &[f64],
    realizations: usize,
    mode: ThresholdMode,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if realizations == 0 {
        return Err(invalid("at least one realization is required"));
    }
    if thresholds.is_empty() {
        return Ok(Vec::new());
    }
    let gs: Vec<Threshold> = thresholds.iter().map(|&g| Threshold::new(g)).collect::<Result<_>>()?;
    let mut fractions = vec![Vec::with_capacity(realizations); gs.len()];
    for r in 0..realizations {
        let sparse = sparse_realization(params, seed, r as u64);
        for (k, g) in gs.iter().enumerate() {
            let report = census_sparse(params.n, &sparse, params.background_strength(), *g, mode);
            fractions[k].push(report.largest_fraction);
        }
    }
    Ok(thresholds
        .iter()
        .zip(fractions)
        .map(|(&g, f)| {
            let s = Summary::of(&f);
            SweepRow {
                x: g,
                mean_fraction: s.mean,
                stderr: s.stderr,
            }
        })
        .collect())
}

/// Component census when every pair outside `sparse` carries the same
/// `background` strength.
pub(crate) fn census_sparse(
    n: usize,
    sparse: &[(usize, f64)],
    background: f64,
    g: Threshold,
    mode: ThresholdMode,
) -> ComponentReport {
    let g = g.value();
    if mode.is_active(background, g) {
        // Background pairs are active: materialize the dense activity mask.
        let mut active = vec![true; pair_count(n)];
        for &(idx, s) in sparse {
            active[idx] = mode.is_active(s, g);
        }
        let edges = active.iter().enumerate().filter(|(_, a)| **a).map(|(idx, _)| pair_at(n, idx));
        return crate::graph::components(n, edges).expect("pair indices are in range");
    }
    let mut uf = UnionFind::new(n);
    for &(idx, s) in sparse {
        if mode.is_active(s, g) {
            let (e, f) = pair_at(n, idx);
            uf.union(e, f);
        }
    }
    ComponentReport::from_union_find(&mut uf)
}
