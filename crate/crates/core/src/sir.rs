//! SIR contagion: the deterministic discrete recursion, a continuous-time
//! reference, and stochastic spreading over back-to-unity contacts.
//!
//! On the tie-decay network each pair is an active contact with probability
//! `P` (the stationary `P(s >= g)`), and an active contact with an infected
//! individual transmits with probability `beta_bar`. All draws in a step
//! use the start-of-step state.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::rng::realization_rng;
use crate::stats::{Summary, Welford};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirParams {
    pub beta_bar: f64,
    pub gamma_bar: f64,
    pub n_p: u64,
    pub p_active: f64,
}

impl SirParams {
    pub fn new(beta_bar: f64, gamma_bar: f64, n_p: u64, p_active: f64) -> Result<Self> {
        for (name, v) in [("beta_bar", beta_bar), ("gamma_bar", gamma_bar), ("p_active", p_active)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if n_p < 2 {
            return Err(invalid("population must have at least two individuals"));
        }
        Ok(Self {
            beta_bar,
            gamma_bar,
            n_p,
            p_active,
        })
    }

    /// `P = lambda / N_p`.
    pub fn from_lambda(beta_bar: f64, gamma_bar: f64, n_p: u64, lambda: f64) -> Result<Self> {
        Self::new(beta_bar, gamma_bar, n_p, lambda / n_p as f64)
    }

    /// Mean number of active contacts, `N_p P`.
    pub fn lambda(&self) -> f64 {
        self.n_p as f64 * self.p_active
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SirState<T> {
    pub s: T,
    pub i: T,
    pub r: T,
}

impl SirState<f64> {
    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }
}

impl SirState<u64> {
    pub fn total(&self) -> u64 {
        self.s + self.i + self.r
    }

    pub fn to_real(self) -> SirState<f64> {
        SirState {
            s: self.s as f64,
            i: self.i as f64,
            r: self.r as f64,
        }
    }
}

/// `S' = S - b I S / N`, `I' = I + b I S / N - g I`, `R' = R + g I`.
pub fn sir_discrete_step(state: SirState<f64>, params: &SirParams) -> SirState<f64> {
    let infections = params.beta_bar * state.i * state.s / params.n_p as f64;
    let recoveries = params.gamma_bar * state.i;
    SirState {
        s: state.s - infections,
        i: state.i + infections - recoveries,
        r: state.r + recoveries,
    }
}

/// `steps + 1` states of the discrete recursion, starting with `initial`.
pub fn sir_discrete(initial: SirState<f64>, params: &SirParams, steps: usize) -> Vec<SirState<f64>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial);
    for _ in 0..steps {
        out.push(sir_discrete_step(*out.last().unwrap(), params));
    }
    out
}

/// Classical RK4 integration of the continuous SIR equations with rates
/// `beta_bar` and `gamma_bar`, reported at integer times `0..=t_end`.
pub fn sir_ode_reference(initial: SirState<f64>, params: &SirParams, t_end: usize, dt_fine: f64) -> Result<Vec<SirState<f64>>> {
    if !(dt_fine > 0.0 && dt_fine <= 0.01) {
        return Err(invalid(format!("integrator step must lie in (0, 0.01], got {dt_fine}")));
    }
    let n = params.n_p as f64;
    let (b, g) = (params.beta_bar, params.gamma_bar);
    let rhs = |y: [f64; 3]| {
        let inf = b * y[0] * y[1] / n;
        let rec = g * y[1];
        [-inf, inf - rec, rec]
    };
    let substeps = (1.0 / dt_fine).ceil() as usize;
    let h = 1.0 / substeps as f64;
    let mut y = [initial.s, initial.i, initial.r];
    let mut out = vec![initial];
    for _ in 0..t_end {
        for _ in 0..substeps {
            let k1 = rhs(y);
            let k2 = rhs(std::array::from_fn(|c| y[c] + 0.5 * h * k1[c]));
            let k3 = rhs(std::array::from_fn(|c| y[c] + 0.5 * h * k2[c]));
            let k4 = rhs(std::array::from_fn(|c| y[c] + h * k3[c]));
            for c in 0..3 {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        out.push(SirState { s: y[0], i: y[1], r: y[2] });
    }
    Ok(out)
}

/// Probability that a susceptible is infected in one step by `infected`
/// individuals: `1 - (1 - P beta_bar)^I`.
pub fn infection_probability(params: &SirParams, infected: u64) -> f64 {
    -((-params.p_active * params.beta_bar).ln_1p() * infected as f64).exp_m1()
}

/// One synchronous stochastic step with aggregated contacts.
pub fn sir_tiedecay_step<R: Rng>(state: SirState<u64>, params: &SirParams, rng: &mut R) -> SirState<u64> {
    if state.i == 0 {
        return state;
    }
    let p_inf = infection_probability(params, state.i);
    let infections = Binomial::new(state.s, p_inf).expect("valid probability").sample(rng);
    let recoveries = Binomial::new(state.i, params.gamma_bar).expect("valid probability").sample(rng);
    SirState {
        s: state.s - infections,
        i: state.i + infections - recoveries,
        r: state.r + recoveries,
    }
}

/// How contacts between individuals are represented.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ContactModel {
    /// Every pair is independently active with probability `P` at every
    /// step.
    #[default]
    Annealed,
    /// Each pair carries its own back-to-unity tie, at stationarity at the
    /// start: it interacts with probability `p` per step and is active
    /// while its last interaction is fewer than `q` steps old. `P` must be
    /// `1 - (1 - p)^q`. Costs `O(S I)` per step.
    Quenched { p: f64, q: u64 },
}

/// One realization of `steps` steps; realization `r` uses keystream `r`.
pub fn simulate_sir_tiedecay(
    initial: SirState<u64>,
    params: &SirParams,
    model: ContactModel,
    steps: usize,
    seed: u64,
    realization: u64,
) -> Result<Vec<SirState<u64>>> {
    if initial.total() != params.n_p {
        return Err(invalid(format!("compartments sum to {}, not N_p = {}", initial.total(), params.n_p)));
    }
    let mut rng = realization_rng(seed, realization);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial);
    match model {
        ContactModel::Annealed => {
            for _ in 0..steps {
                let next = sir_tiedecay_step(*out.last().unwrap(), params, &mut rng);
                out.push(next);
            }
        }
        ContactModel::Quenched { p, q } => {
            let expected = 1.0 - (1.0 - p).powf(q as f64);
            if !(p > 0.0 && p <= 1.0) || (expected - params.p_active).abs() > 1e-9 * expected.max(1e-300) {
                return Err(invalid(format!("quenched contacts give P = {expected}, params say {}", params.p_active)));
            }
            let mut world = QuenchedWorld::new(initial, p, q);
            for t in 1..=steps as u64 {
                world.step(t, params, &mut rng);
                out.push(world.state());
            }
        }
    }
    for pair in out.windows(2) {
        assert_eq!(pair[1].total(), params.n_p, "compartments must be conserved");
        assert!(pair[1].s <= pair[0].s && pair[1].r >= pair[0].r, "S must not grow and R must not shrink");
    }
    Ok(out)
}

const SUSCEPTIBLE: u8 = 0;
const INFECTED: u8 = 1;
const RECOVERED: u8 = 2;

struct QuenchedWorld {
    labels: Vec<u8>,
    q: u64,
    /// Pair -> (time of last query, time of last interaction known then).
    ties: HashMap<(u32, u32), (i64, i64)>,
    lookback: Option<Geometric>,
}

impl QuenchedWorld {
    fn new(initial: SirState<u64>, p: f64, q: u64) -> Self {
        let mut labels = vec![SUSCEPTIBLE; initial.s as usize];
        labels.extend(std::iter::repeat_n(INFECTED, initial.i as usize));
        labels.extend(std::iter::repeat_n(RECOVERED, initial.r as usize));
        Self {
            labels,
            q,
            ties: HashMap::new(),
            lookback: (p < 1.0).then(|| Geometric::new(p).expect("0 < p < 1")),
        }
    }

    /// Whether the tie `{a, b}` is active at step `t`. Looking back from
    /// `t`, the number of steps since the most recent interaction is
    /// Geometric(p); it only replaces the remembered interaction if it
    /// falls after the previous query. An unseen tie is at stationarity,
    /// so its last interaction may predate the epidemic.
    fn active(&mut self, a: usize, b: usize, t: u64, rng: &mut ChaCha8Rng) -> bool {
        let key = (a.min(b) as u32, a.max(b) as u32);
        let lag = self.lookback.map_or(0, |g| g.sample(rng)).min(i64::MAX as u64 / 2) as i64;
        let t = t as i64;
        let last = match self.ties.get(&key) {
            Some(&(t0, last0)) if lag >= t - t0 => last0,
            _ => t - lag,
        };
        self.ties.insert(key, (t, last));
        t - last < self.q as i64
    }

    fn step(&mut self, t: u64, params: &SirParams, rng: &mut ChaCha8Rng) {
        let infected: Vec<usize> = (0..self.labels.len()).filter(|&k| self.labels[k] == INFECTED).collect();
        let susceptible: Vec<usize> = (0..self.labels.len()).filter(|&k| self.labels[k] == SUSCEPTIBLE).collect();
        let mut newly = Vec::new();
        for &s in &susceptible {
            let mut escaped = true;
            for &i in &infected {
                if self.active(s, i, t, rng) && rng.random::<f64>() < params.beta_bar {
                    escaped = false;
                }
            }
            if !escaped {
                newly.push(s);
            }
        }
        for &i in &infected {
            if rng.random::<f64>() < params.gamma_bar {
                self.labels[i] = RECOVERED;
            }
        }
        for s in newly {
            self.labels[s] = INFECTED;
        }
    }

    fn state(&self) -> SirState<u64> {
        let mut st = SirState::default();
        for &l in &self.labels {
            match l {
                SUSCEPTIBLE => st.s += 1,
                INFECTED => st.i += 1,
                _ => st.r += 1,
            }
        }
        st
    }
}

/// First step at which `I` is largest.
pub fn peak_time<T: PartialOrd + Copy>(trajectory: &[SirState<T>]) -> usize {
    let mut best = 0;
    for (t, st) in trajectory.iter().enumerate() {
        if st.i > trajectory[best].i {
            best = t;
        }
    }
    best
}

/// Fraction of the population no longer susceptible at the end.
pub fn attack_rate(trajectory: &[SirState<f64>], n_p: u64) -> f64 {
    1.0 - trajectory.last().map_or(0.0, |st| st.s) / n_p as f64
}

/// Ensemble of stochastic runs at one `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEnsemble {
    pub lambda: f64,
    /// Per-step ensemble statistics of `S`, `I`, `R`.
    pub s: Vec<Summary>,
    pub i: Vec<Summary>,
    pub r: Vec<Summary>,
    pub peak_times: Vec<usize>,
    pub attack_rates: Vec<f64>,
}

impl LambdaEnsemble {
    pub fn peak_time(&self) -> Summary {
        Summary::of(&self.peak_times.iter().map(|&t| t as f64).collect::<Vec<_>>())
    }

    pub fn attack_rate(&self) -> Summary {
        Summary::of(&self.attack_rates)
    }

    pub fn mean_trajectory(&self) -> Vec<SirState<f64>> {
        (0..self.s.len())
            .map(|t| SirState {
                s: self.s[t].mean,
                i: self.i[t].mean,
                r: self.r[t].mean,
            })
            .collect()
    }
}

/// Runs `realizations` annealed epidemics for each `lambda` (`P = lambda /
/// N_p`). `lambda_k` uses seed `derive_seed(seed, k)`.
pub fn sir_compare(
    lambdas: &[f64],
    base: &SirParams,
    initial: SirState<u64>,
    steps: usize,
    realizations: usize,
    seed: u64,
) -> Result<Vec<LambdaEnsemble>> {
    if realizations == 0 {
        return Err(invalid("at least one realization is required"));
    }
    lambdas
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let params = SirParams::from_lambda(base.beta_bar, base.gamma_bar, base.n_p, lambda)?;
            let point_seed = crate::rng::derive_seed(seed, k as u64);
            let runs: Vec<Vec<SirState<u64>>> = (0..realizations)
                .into_par_iter()
                .map(|r| simulate_sir_tiedecay(initial, &params, ContactModel::Annealed, steps, point_seed, r as u64))
                .collect::<Result<_>>()?;
            let column = |f: fn(&SirState<u64>) -> u64| -> Vec<Summary> {
                (0..=steps)
                    .map(|t| {
                        let mut w = Welford::default();
                        runs.iter().for_each(|run| w.push(f(&run[t]) as f64));
                        w.summary()
                    })
                    .collect()
            };
            Ok(LambdaEnsemble {
                lambda,
                s: column(|st| st.s),
                i: column(|st| st.i),
                r: column(|st| st.r),
                peak_times: runs.iter().map(|run| peak_time(run)).collect(),
                attack_rates: runs.iter().map(|run| 1.0 - run[steps].s as f64 / base.n_p as f64).collect(),
            })
        })
        .collect()
}
