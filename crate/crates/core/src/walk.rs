//! Log-strength random walks: the diffusion model (`Delta = 0`, no upper
//! bound) and the bounded convection–diffusion model.
//!
//! A tie's log-strength `x` lives on the grid `{-L, ..., w - dx, w}` and
//! moves up with probability `1/2 + Delta`, down otherwise. Up-moves that
//! would pass `w` stop at `w`; down-moves at `-L` stay put (the lower bound is
//! placed beyond the reach of the run, so it only matters for stationary
//! analysis). Positions are kept as integer grid indices, `x = i dx`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use statrs::function::factorial::ln_binomial;

use crate::error::{config, domain, invalid, Result};
use crate::rng::{unit_rng, EDGE_BLOCK};

/// Relative tolerance for grid alignment checks.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    dx: f64,
    dt: f64,
    delta: f64,
    w: f64,
    t_total: f64,
    /// Grid index of the upper bound (`i64::MAX` when unbounded).
    upper: i64,
    /// Grid index of the lower bound, `-ceil(max(L, v T) / dx)`.
    lower: i64,
    start: i64,
}

fn grid_index(x: f64, dx: f64) -> Option<i64> {
    let r = x / dx;
    let i = r.round();
    ((r - i).abs() <= ALIGN_TOL * r.abs().max(1.0)).then_some(i as i64)
}

impl WalkParams {
    /// `w = f64::INFINITY` selects the unbounded (pure diffusion) mode.
    /// The lower bound is raised to `v T` if `l` is smaller.
    pub fn new(dx: f64, dt: f64, delta: f64, w: f64, l: f64, t_total: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("grid steps must be positive, got dx={dx}, dt={dt}")));
        }
        if !(0.0..0.5).contains(&delta) {
            return Err(config(format!("drift bias must lie in [0, 1/2), got {delta}")));
        }
        if !(t_total >= 0.0 && t_total.is_finite()) || !(l > 0.0 && l.is_finite()) {
            return Err(invalid(format!("need T >= 0 and L > 0, got T={t_total}, L={l}")));
        }
        let upper = if w == f64::INFINITY {
            i64::MAX
        } else {
            let i = grid_index(w, dx).ok_or_else(|| invalid(format!("w = {w} is not a multiple of dx = {dx}")))?;
            if i < 0 {
                return Err(invalid(format!("w = {w} lies below the start x = 0")));
            }
            i
        };
        let reach = l.max(dx / dt * t_total);
        let lower = -((reach / dx * (1.0 - ALIGN_TOL)).ceil() as i64).max(1);
        Ok(Self {
            dx,
            dt,
            delta,
            w,
            t_total,
            upper,
            lower,
            start: 0,
        })
    }

    /// Starts every edge at grid point `x0` instead of 0.
    pub fn with_start(mut self, x0: f64) -> Result<Self> {
        let i = grid_index(x0, self.dx).ok_or_else(|| invalid(format!("start {x0} is off the grid")))?;
        if i > self.upper || i < self.lower {
            return Err(invalid(format!("start {x0} lies outside [-L, w]")));
        }
        self.start = i;
        Ok(self)
    }

    pub fn with_duration(&self, t_total: f64) -> Result<Self> {
        let l = -self.lower as f64 * self.dx;
        Self::new(self.dx, self.dt, self.delta, self.w, l, t_total)?.with_start(self.x_at(self.start))
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn t_total(&self) -> f64 {
        self.t_total
    }
    pub fn is_bounded(&self) -> bool {
        self.upper != i64::MAX
    }
    /// Convection coefficient `Delta / dx`.
    pub fn beta(&self) -> f64 {
        self.delta / self.dx
    }
    /// Diffusion coefficient `dx^2 / (2 dt)`.
    pub fn k(&self) -> f64 {
        self.dx * self.dx / (2.0 * self.dt)
    }
    /// Propagation speed `dx / dt`.
    pub fn speed(&self) -> f64 {
        self.dx / self.dt
    }
    /// Magnitude of the lower bound, `L >= v T`.
    pub fn l(&self) -> f64 {
        -self.lower as f64 * self.dx
    }
    pub fn steps(&self) -> u64 {
        (self.t_total / self.dt + ALIGN_TOL).floor() as u64
    }
    pub fn up_probability(&self) -> f64 {
        0.5 + self.delta
    }
    pub fn start(&self) -> f64 {
        self.x_at(self.start)
    }
    pub(crate) fn upper_index(&self) -> i64 {
        self.upper
    }
    pub(crate) fn lower_index(&self) -> i64 {
        self.lower
    }

    /// Log-strength at grid index `i`; exactly `w` at the bound.
    pub fn x_at(&self, i: i64) -> f64 {
        if i == self.upper {
            self.w
        } else {
            i as f64 * self.dx
        }
    }

    fn step_index(&self, i: i64, coin: f64) -> i64 {
        if coin < self.up_probability() {
            (i + 1).min(self.upper)
        } else {
            (i - 1).max(self.lower)
        }
    }
}

/// One step from `x` using the uniform draw `coin` in `[0, 1)`.
pub fn walk_step(x: f64, params: &WalkParams, coin: f64) -> Result<f64> {
    if x > params.w {
        return Err(invalid(format!("log-strength {x} exceeds the bound w = {}", params.w)));
    }
    let i = grid_index(x, params.dx).ok_or_else(|| invalid(format!("log-strength {x} is off the grid")))?;
    Ok(params.x_at(params.step_index(i, coin)))
}

/// Final log-strengths of `n_edges` independent edges, one coin per step.
/// Every intermediate position is checked against the upper bound.
pub fn simulate_walk(params: &WalkParams, n_edges: usize, seed: u64) -> Vec<f64> {
    per_edge_blocks(n_edges, seed, 0, |rng| {
        let mut i = params.start;
        for _ in 0..params.steps() {
            i = params.step_index(i, rng.random());
            assert!(i <= params.upper, "walk passed the upper bound");
        }
        params.x_at(i)
    })
}

/// Final log-strengths drawn directly from the exact law of the walk after
/// `steps()` steps. Realization `r` draws from keystream `r`.
///
/// Below the bound the walk is a sum of ±1 steps; with the clamp at `w`
/// the distance to the bound follows the reflected recursion
/// `y' = max(y + xi, 0)`, whose value after `n` steps is
/// `S_n + max(y_0, -min_k S_k)`. The number of away-from-bound steps fixes
/// `S_n`; conditionally on it every ordering is equally likely, so the
/// running minimum follows from the reflection principle:
/// `P(-min S >= b | S_n = s) = C(n, u + b) / C(n, u)`, `u = (n + s) / 2`.
pub fn sample_endpoints(params: &WalkParams, n_edges: usize, seed: u64, realization: u64) -> Vec<f64> {
    let n = params.steps();
    if params.start - params.lower < n as i64 {
        // The lower bound is reachable; fall back to stepping.
        return per_edge_blocks(n_edges, seed, realization, |rng| {
            let mut i = params.start;
            for _ in 0..n {
                i = params.step_index(i, rng.random());
            }
            params.x_at(i)
        });
    }
    let away = 1.0 - params.up_probability();
    if !params.is_bounded() {
        let ups = Binomial::new(n, params.up_probability()).expect("valid binomial");
        return per_edge_blocks(n_edges, seed, realization, |rng| {
            let b = ups.sample(rng) as i64;
            params.x_at(params.start + 2 * b - n as i64)
        });
    }
    let y0 = (params.upper - params.start) as u64;
    let aways = Binomial::new(n, away).expect("valid binomial");
    per_edge_blocks(n_edges, seed, realization, |rng| {
        let u = aways.sample(rng);
        let v: f64 = rng.random();
        let y = reflected_endpoint(n, u, y0, v);
        params.x_at(params.upper - y as i64)
    })
}

/// `S_n + max(y0, M)` where `S_n = 2u - n` and `M = -min_k S_k` is drawn by
/// inverting its conditional survival function at `v`.
fn reflected_endpoint(n: u64, u: u64, y0: u64, v: f64) -> u64 {
    let b0 = n.saturating_sub(2 * u);
    let b_max = n - u;
    let ln_g = |b: u64| ln_binomial(n, u + b) - ln_binomial(n, u);
    let mut b = b0.max(y0);
    if b > b_max {
        return (y0 + 2 * u) - n;
    }
    let mut g = if b == b0 { 1.0 } else { ln_g(b).exp() };
    if g <= v {
        // M < y0.
        return (y0 + 2 * u) - n;
    }
    // Walk up the survival function; long tails switch to bisection.
    for _ in 0..64 {
        if b == b_max {
            return b + 2 * u - n;
        }
        let next = g * (n - u - b) as f64 / (u + b + 1) as f64;
        if next <= v {
            return b + 2 * u - n;
        }
        g = next;
        b += 1;
    }
    let ln_v = v.ln();
    let (mut lo, mut hi) = (b, b_max + 1); // G(lo) > v, G(hi) = 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ln_g(mid) > ln_v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + 2 * u - n
}

fn per_edge_blocks<F>(n_edges: usize, seed: u64, stream: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let blocks = n_edges.div_ceil(EDGE_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = unit_rng(seed, stream, b as u64);
            let len = EDGE_BLOCK.min(n_edges - b * EDGE_BLOCK);
            (0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Empirical density on grid nodes: `(x, count / (N dx))` for every
/// occupied node, in increasing `x`.
pub fn node_histogram(samples: &[f64], dx: f64) -> Vec<(f64, f64)> {
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &x in samples {
        *counts.entry((x / dx).round() as i64).or_default() += 1;
    }
    let norm = samples.len() as f64 * dx;
    counts.into_iter().map(|(i, c)| (i as f64 * dx, c as f64 / norm)).collect()
}

/// Similarity solution `(4 pi D t)^{-1/2} exp(-x^2 / (4 D t))`.
pub fn gaussian_solution(x: f64, t: f64, d: f64) -> Result<f64> {
    if !(t > 0.0) || !(d > 0.0) {
        return Err(domain(format!("need t > 0 and D > 0, got t={t}, D={d}")));
    }
    Ok((-x * x / (4.0 * d * t)).exp() / (4.0 * std::f64::consts::PI * d * t).sqrt())
}

/// Stationary density `4 beta e^{4 beta (x - w)}` for `x <= w`.
pub fn stationary_density(x: f64, beta: f64, w: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain(format!("no normalizable stationary state for beta = {beta}")));
    }
    if x > w {
        return Err(invalid(format!("x = {x} lies above the bound w = {w}")));
    }
    Ok(4.0 * beta * (4.0 * beta * (x - w)).exp())
}

/// Stationary CDF `e^{4 beta (x - w)}`.
pub fn stationary_cdf(x: f64, beta: f64, w: f64) -> f64 {
    (4.0 * beta * (x.min(w) - w)).exp()
}

/// Ratio of adjacent stationary grid values, `(1/2 + Delta) / (1/2 - Delta)`.
pub fn adjacent_ratio(delta: f64) -> f64 {
    (0.5 + delta) / (0.5 - delta)
}

/// Stationary boundary value `2 beta / (1/2 + Delta)` on an unbounded-below
/// grid (unit mass).
pub fn boundary_value_discrete(beta: f64, delta: f64) -> f64 {
    2.0 * beta / (0.5 + delta)
}

/// Stationary grid density `j` nodes below the bound on the finite grid
/// `[-L, w]`: `u_N eta^j` with `eta = (1/2 - Delta)/(1/2 + Delta)` and
/// `u_N` fixed by unit mass.
pub fn stationary_density_discrete(j: u64, params: &WalkParams) -> Result<f64> {
    if !params.is_bounded() {
        return Err(domain("the unbounded walk has no stationary state"));
    }
    let nodes = (params.upper - params.lower) as u64;
    if j > nodes {
        return Err(invalid(format!("offset {j} lies below the grid (N = {nodes})")));
    }
    let ln_eta = -adjacent_ratio(params.delta).ln();
    let total = if params.delta == 0.0 {
        (nodes + 1) as f64
    } else {
        -(ln_eta * (nodes + 1) as f64).exp_m1() / -ln_eta.exp_m1()
    };
    Ok((ln_eta * j as f64).exp() / (total * params.dx))
}

/// Stationary probability that a tie's log-strength is at least `w0`:
/// `1 - e^{4 beta (w0 - w)}`.
pub fn gcc_probability_cd(beta: f64, w: f64, w0: f64) -> Result<f64> {
    if w0 > w {
        return Err(domain(format!("threshold {w0} lies above the bound {w}")));
    }
    if !(beta > 0.0) {
        return Err(domain(format!("need beta > 0, got {beta}")));
    }
    Ok(-(4.0 * beta * (w0 - w)).exp_m1())
}

pub fn gcc_predicted_cd(n: usize, beta: f64, w: f64, w0: f64) -> Result<bool> {
    Ok(gcc_probability_cd(beta, w, w0)? > 1.0 / n as f64)
}

/// Stationary probability mass on the boundary node, `4 Delta / (1 + 2 Delta)`.
pub fn boundary_mass(delta: f64) -> f64 {
    4.0 * delta / (1.0 + 2.0 * delta)
}

/// Largest `Delta` for which the boundary node alone carries less than
/// `1/n` of the stationary mass: `1 / (4n - 2)`. A threshold just below the
/// bound activates at least that node, so `Delta < 1/(4n - 2)` is necessary
/// for the absence of a giant component.
pub fn no_gcc_delta_bound(n: usize) -> f64 {
    1.0 / (4.0 * n as f64 - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timescales {
    /// Convective time to reach the bound, `w / (4 beta k)`.
    pub tau1: f64,
    /// Diffusive time across `w`, `w^2 / (2k)`.
    pub tau2: f64,
    pub tau: f64,
    /// `4 beta w`.
    pub peclet: f64,
}

pub fn timescales(beta: f64, k: f64, w: f64) -> Result<Timescales> {
    if !(beta > 0.0 && k > 0.0 && w > 0.0) {
        return Err(domain(format!("need beta, k, w > 0, got {beta}, {k}, {w}")));
    }
    let tau1 = w / (4.0 * beta * k);
    let tau2 = w * w / (2.0 * k);
    Ok(Timescales {
        tau1,
        tau2,
        tau: tau1.max(tau2),
        peclet: 4.0 * beta * w,
    })
}

/// Time after which the walk is treated as stationary: `5 tau`.
pub fn stationarity_time(params: &WalkParams) -> Result<f64> {
    Ok(5.0 * timescales(params.beta(), params.k(), params.w)?.tau)
}
