//! Interaction times for independent edges.
//!
//! Each edge sees an i.i.d. Bernoulli(p) interaction at each of the steps
//! `0..steps`. Rather than flipping `steps` coins per edge, the sampler
//! jumps straight to the edges that interact at least once (geometric skips
//! over edge indices with success probability `1 - (1-p)^steps`), draws the
//! first interaction from the conditional law, and then walks the remaining
//! interactions with geometric gaps. The joint law of the interaction times
//! is the same as coin flipping.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::rng::{unit_rng, EDGE_BLOCK};

/// Bernoulli interaction process shared by all edges.
#[derive(Debug, Clone, Copy)]
pub struct InteractionProcess {
    p: f64,
    steps: u32,
    ln_miss: f64,
    any: f64,
}

impl InteractionProcess {
    pub fn new(p: f64, steps: u32) -> Self {
        assert!((0.0..=1.0).contains(&p), "interaction probability must lie in [0, 1]");
        let ln_miss = (-p).ln_1p();
        let any = if p == 0.0 || steps == 0 {
            0.0
        } else {
            -(ln_miss * steps as f64).exp_m1()
        };
        Self {
            p,
            steps,
            ln_miss,
            any,
        }
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Probability that an edge interacts at least once.
    pub fn any_interaction(&self) -> f64 {
        self.any
    }

    /// First interaction step given at least one interaction.
    fn first_given_any<R: Rng>(&self, rng: &mut R) -> u32 {
        if self.p >= 1.0 {
            return 0;
        }
        let u: f64 = rng.random();
        // P(first <= t | any) = (1 - (1-p)^(t+1)) / any; invert.
        let t = ((-u * self.any).ln_1p() / self.ln_miss).floor();
        (t.max(0.0) as u32).min(self.steps - 1)
    }

    /// All interaction steps of one edge, in increasing order, appended to
    /// `out` after clearing it. Returns `false` when the edge never interacts.
    pub fn sample_edge<R: Rng>(&self, rng: &mut R, out: &mut Vec<u32>) -> bool {
        out.clear();
        if self.any == 0.0 {
            return false;
        }
        if rng.random::<f64>() >= self.any {
            return false;
        }
        self.fill_from_first(rng, out);
        true
    }

    fn fill_from_first<R: Rng>(&self, rng: &mut R, out: &mut Vec<u32>) {
        let mut t = self.first_given_any(rng) as u64;
        out.push(t as u32);
        if self.p >= 1.0 {
            out.extend(1..self.steps);
            return;
        }
        let gap = Geometric::new(self.p).expect("0 < p < 1");
        loop {
            t += 1 + gap.sample(rng);
            if t >= self.steps as u64 {
                break;
            }
            out.push(t as u32);
        }
    }

    /// Visits every edge in `0..n_edges` that interacts at least once,
    /// passing its index and interaction steps. Edges are grouped in blocks
    /// of [`EDGE_BLOCK`]; block `b` draws from keystream `(seed, stream, b)`.
    /// Blocks run in parallel and results come back in edge order.
    pub fn par_map_blocks<T, F>(&self, n_edges: usize, seed: u64, stream: u64, per_edge: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &[u32]) -> T + Sync,
    {
        let blocks = n_edges.div_ceil(EDGE_BLOCK);
        let chunks: Vec<Vec<T>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = unit_rng(seed, stream, b as u64);
                let lo = b * EDGE_BLOCK;
                let hi = (lo + EDGE_BLOCK).min(n_edges);
                let mut out = Vec::new();
                self.for_each_in_range(&mut rng, lo, hi, |e, ev| out.push(per_edge(e, ev)));
                out
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }

    /// Like [`par_map_blocks`](Self::par_map_blocks), but only the number
    /// of steps since each edge's last interaction is drawn (0 means the
    /// edge interacted on the final step). By time reversal this lag has
    /// the law of the first interaction step.
    pub fn par_map_last<T, F>(&self, n_edges: usize, seed: u64, stream: u64, per_edge: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, u32) -> T + Sync,
    {
        let blocks = n_edges.div_ceil(EDGE_BLOCK);
        let chunks: Vec<Vec<T>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = unit_rng(seed, stream, b as u64);
                let lo = b * EDGE_BLOCK;
                let hi = (lo + EDGE_BLOCK).min(n_edges);
                let mut out = Vec::new();
                self.skip_edges(&mut rng, lo, hi, |rng, e| out.push(per_edge(e, self.first_given_any(rng))));
                out
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }

    /// Sequential skip-sampling over edges `lo..hi`.
    pub fn for_each_in_range<F>(&self, rng: &mut ChaCha8Rng, lo: usize, hi: usize, mut visit: F)
    where
        F: FnMut(usize, &[u32]),
    {
        let mut events = Vec::new();
        self.skip_edges(rng, lo, hi, |rng, e| {
            events.clear();
            self.fill_from_first(rng, &mut events);
            visit(e, &events);
        });
    }

    /// Calls `hit` for each edge in `lo..hi` that interacts at least once.
    fn skip_edges<F>(&self, rng: &mut ChaCha8Rng, lo: usize, hi: usize, mut hit: F)
    where
        F: FnMut(&mut ChaCha8Rng, usize),
    {
        if self.any == 0.0 {
            return;
        }
        if self.any >= 1.0 {
            for e in lo..hi {
                hit(rng, e);
            }
            return;
        }
        let skip = Geometric::new(self.any).expect("0 < any < 1");
        let mut e = lo as u64;
        loop {
            e += skip.sample(rng);
            if e >= hi as u64 {
                break;
            }
            hit(rng, e as usize);
            e += 1;
        }
    }
}

/// Tie strength after `t` steps of a decay process that starts at `s0`,
/// multiplies by `e^{-alpha}` on every step without an interaction, and
/// applies `boost` on every interaction step. `events` must be sorted;
/// events at or after `t` are ignored.
pub fn fold_events<B: Fn(f64) -> f64>(events: &[u32], t: u32, s0: f64, alpha: f64, boost: B) -> f64 {
    let mut s = s0;
    let mut clock = 0u32;
    for &e in events.iter().take_while(|&&e| e < t) {
        s *= (-alpha * (e - clock) as f64).exp();
        s = boost(s);
        clock = e + 1;
    }
    s * (-alpha * (t - clock) as f64).exp()
}
