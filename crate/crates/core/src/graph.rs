//! Tie-strength state, thresholding and connected-component census.

use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::rng::realization_rng;
use crate::stats::Summary;

/// Number of unordered node pairs on `n` nodes.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Flat upper-triangular index of the pair `{e, f}`, `e != f`.
#[inline]
pub fn pair_index(n: usize, e: usize, f: usize) -> usize {
    let (i, j) = if e < f { (e, f) } else { (f, e) };
    debug_assert!(i != j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_at(n: usize, idx: usize) -> (usize, usize) {
    debug_assert!(idx < pair_count(n));
    // Row i starts at i*(2n-i-1)/2; solve the quadratic, then fix rounding.
    let nf = n as f64;
    let disc = (2.0 * nf - 1.0).powi(2) - 8.0 * idx as f64;
    let mut i = (((2.0 * nf - 1.0) - disc.max(0.0).sqrt()) / 2.0).floor() as usize;
    let row_start = |i: usize| i * (2 * n - i - 1) / 2;
    while i > 0 && row_start(i) > idx {
        i -= 1;
    }
    while i + 1 < n && row_start(i + 1) <= idx {
        i += 1;
    }
    (i, i + 1 + idx - row_start(i))
}

/// Symmetric tie strengths over `n` nodes. Only unordered pairs are stored,
/// so the matrix is symmetric with a zero diagonal by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TieMatrix {
    n: usize,
    strengths: Vec<f64>,
}

impl TieMatrix {
    pub fn new(n: usize) -> Self {
        Self::filled(n, 0.0)
    }

    pub fn filled(n: usize, value: f64) -> Self {
        assert!(value >= 0.0, "tie strengths are non-negative");
        Self {
            n,
            strengths: vec![value; pair_count(n)],
        }
    }

    /// Builds a matrix from a flat upper-triangular vector.
    pub fn from_upper(n: usize, strengths: Vec<f64>) -> Result<Self> {
        if strengths.len() != pair_count(n) {
            return Err(invalid(format!(
                "expected {} pair strengths for n={n}, got {}",
                pair_count(n),
                strengths.len()
            )));
        }
        if let Some(s) = strengths.iter().find(|s| !(**s >= 0.0)) {
            return Err(invalid(format!("tie strength {s} is negative or NaN")));
        }
        Ok(Self { n, strengths })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Strength of `{e, f}`; the diagonal reads as zero.
    pub fn get(&self, e: usize, f: usize) -> f64 {
        if e == f {
            0.0
        } else {
            self.strengths[pair_index(self.n, e, f)]
        }
    }

    pub fn set(&mut self, e: usize, f: usize, s: f64) {
        assert!(e != f, "self-pairs have no tie");
        assert!(s >= 0.0, "tie strengths are non-negative");
        let idx = pair_index(self.n, e, f);
        self.strengths[idx] = s;
    }

    pub fn as_upper(&self) -> &[f64] {
        &self.strengths
    }

    /// `(e, f, strength)` for every pair with `e < f`, in layout order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |e| (e + 1..n).map(move |f| (e, f)))
            .zip(self.strengths.iter())
            .map(|((e, f), s)| (e, f, *s))
    }

    pub fn mean_strength(&self) -> f64 {
        if self.strengths.is_empty() {
            return 0.0;
        }
        self.strengths.iter().sum::<f64>() / self.strengths.len() as f64
    }
}

/// Tie-strength activity cutoff `g >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(g: f64) -> Result<Self> {
        if g >= 0.0 && g.is_finite() {
            Ok(Self(g))
        } else {
            Err(invalid(format!("threshold must be finite and >= 0, got {g}")))
        }
    }

    /// Threshold for strengths bounded by 1, restricted to `(0, 1]`.
    pub fn unit(g: f64) -> Result<Self> {
        if g > 0.0 && g <= 1.0 {
            Ok(Self(g))
        } else {
            Err(invalid(format!("threshold must lie in (0, 1], got {g}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Comparison used to decide whether a tie is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    /// `s >= g`.
    #[default]
    AtLeast,
    /// `s > g`.
    StrictlyAbove,
}

impl ThresholdMode {
    #[inline]
    pub fn is_active(self, s: f64, g: f64) -> bool {
        match self {
            ThresholdMode::AtLeast => s >= g,
            ThresholdMode::StrictlyAbove => s > g,
        }
    }
}

/// Active pairs `(e, f)`, `e < f`, in layout order.
pub fn threshold_edges(m: &TieMatrix, t: Threshold, mode: ThresholdMode) -> Vec<(usize, usize)> {
    m.pairs()
        .filter(|&(_, _, s)| mode.is_active(s, t.value()))
        .map(|(e, f, _)| (e, f))
        .collect()
}

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize);
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns `false` if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    /// Component sizes, largest first.
    pub fn component_sizes(&mut self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for x in 0..self.len() {
            if self.find(x) == x {
                sizes.push(self.size[x] as usize);
            }
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

/// Connected-component census of a graph on `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    n: usize,
    /// Sizes in non-increasing order; singletons included.
    pub component_sizes: Vec<usize>,
    pub largest: usize,
    pub largest_fraction: f64,
}

impl ComponentReport {
    fn from_sizes(n: usize, component_sizes: Vec<usize>) -> Self {
        let largest = component_sizes.first().copied().unwrap_or(0);
        let largest_fraction = if n == 0 { 0.0 } else { largest as f64 / n as f64 };
        Self {
            n,
            component_sizes,
            largest,
            largest_fraction,
        }
    }

    /// Census of the partition currently held by `uf`.
    pub fn from_union_find(uf: &mut UnionFind) -> Self {
        let n = uf.len();
        Self::from_sizes(n, uf.component_sizes())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn component_count(&self) -> usize {
        self.component_sizes.len()
    }
}

/// Partitions `0..n` into maximal connected sets of the given edges.
pub fn components<I>(n: usize, edges: I) -> Result<ComponentReport>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut uf = UnionFind::new(n);
    for (e, f) in edges {
        if e >= n || f >= n {
            return Err(invalid(format!("edge ({e}, {f}) has an endpoint outside 0..{n}")));
        }
        uf.union(e, f);
    }
    Ok(ComponentReport::from_sizes(n, uf.component_sizes()))
}

/// Where an Erdős–Rényi graph with edge probability `p_active` sits
/// relative to the giant-component threshold `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GccRegime {
    Subcritical,
    Critical,
    Supercritical,
}

/// Mean largest-component fraction of `realizations` independent
/// `G(n, p)` graphs, each sampled with geometric skips over the pair list.
/// Realization `r` uses keystream `r` under `seed`.
pub fn er_mean_largest_fraction(n: usize, p: f64, realizations: usize, seed: u64) -> Summary {
    let fractions: Vec<f64> = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = realization_rng(seed, r as u64);
            let mut uf = UnionFind::new(n);
            let total = pair_count(n) as u64;
            if p >= 1.0 {
                (0..total as usize).for_each(|idx| {
                    let (e, f) = pair_at(n, idx);
                    uf.union(e, f);
                });
            } else if p > 0.0 {
                let skip = Geometric::new(p).expect("0 < p < 1");
                let mut idx = 0u64;
                loop {
                    idx += skip.sample(&mut rng);
                    if idx >= total {
                        break;
                    }
                    let (e, f) = pair_at(n, idx as usize);
                    uf.union(e, f);
                    idx += 1;
                }
            }
            ComponentReport::from_union_find(&mut uf).largest_fraction
        })
        .collect();
    Summary::of(&fractions)
}

/// Exact comparison of `p_active` against `1/n`.
pub fn er_gcc_criterion(n: usize, p_active: f64) -> GccRegime {
    let critical = 1.0 / n as f64;
    if p_active > critical {
        GccRegime::Supercritical
    } else if p_active < critical {
        GccRegime::Subcritical
    } else {
        GccRegime::Critical
    }
}
