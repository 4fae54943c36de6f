//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! straight to stdout (visible without `--nocapture`) and then asserts.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tiedecay::additive::{self, AdditiveParams};
use tiedecay::b2u::{self, BackToUnityParams};
use tiedecay::fd::{self, BoundaryRule, Field, Grid, SchemeCoeffs, StationaryBackend};
use tiedecay::graph::{components, er_mean_largest_fraction, pair_count, ThresholdMode};
use tiedecay::sir::{self, SirParams, SirState};
use tiedecay::stats::{chi_square_gof, ks_critical, ks_lattice, log_crossing, normal_cdf, normal_quantile, geomspace};
use tiedecay::walk::{self, WalkParams};

const SEED: u64 = 20_240_601;

fn report(criterion: &str, pass: bool, detail: String, started: Instant) -> bool {
    let line = format!(
        "{} {criterion}: {detail} [{:.1}s]\n",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    pass
}

#[test]
fn additive_mean_convergence() {
    let t0 = Instant::now();
    let params = AdditiveParams::new(3000, 0.1, 0.05, 500).unwrap();
    let checkpoints = [50, 100, 150, 500];
    let reported_mc = [2.0368, 2.2524, 2.2751, 2.2782];
    let reported_sum = [2.0902, 2.2628, 2.2770, 2.2782];
    let snaps = additive::simulate_marginal(&params, &checkpoints, pair_count(3000), SEED);
    let mut ok = true;
    let mut detail = Vec::new();
    for k in 0..4 {
        let z = snaps[k].strength.z_score(reported_mc[k]);
        let analytic = additive::mean_finite_time(0.1, 0.05, checkpoints[k]);
        let rounded_ok = (analytic - reported_sum[k]).abs() < 5e-5;
        ok &= z < 3.0 && rounded_ok;
        detail.push(format!(
            "t={} mc={:.5}±{:.5} (z={z:.2}) sum={analytic:.5}",
            checkpoints[k], snaps[k].strength.mean, snaps[k].strength.stderr
        ));
    }
    assert!(report("additive mean convergence", ok, detail.join("; "), t0));
}

#[test]
fn additive_variance_identity() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let p = 0.005 + 0.099 * i as f64;
            let alpha = 0.002 * 2.0f64.powi(j);
            let m = additive::raw_moments_stationary(p, alpha, 2).unwrap();
            let sigma2 = (-2.0 * alpha).exp();
            let closed = p / ((1.0 - sigma2) * (1.0 - p) * (1.0 - p));
            worst = worst.max(((m[1] - m[0] * m[0]) - closed).abs() / closed);
        }
    }
    assert!(report("additive variance identity", worst <= 1e-12, format!("max relative error {worst:.2e}"), t0));
}

/// Where the sweep curve crosses the mean largest fraction of G(n, 1/n).
fn transition(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    log_crossing(xs, ys, level)
}

#[test]
fn additive_critical_threshold() {
    let t0 = Instant::now();
    let level = er_mean_largest_fraction(2000, 1.0 / 2000.0, 400, SEED ^ 1).mean;
    let mut ok = true;
    let mut detail = vec![format!("G(n,1/n) level {level:.4}")];
    for (alpha, target) in [(0.001, 0.9555), (0.01, 0.6345), (0.1, 0.0106)] {
        let params = AdditiveParams::new(2000, 1e-5, alpha, 1000).unwrap();
        let g_crit = additive::critical_threshold(&params).unwrap();
        let gs = geomspace(target * 0.5, target * 1.6, 30);
        let rows = additive::gcc_sweep(&params, &gs, 200, ThresholdMode::AtLeast, SEED).unwrap();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_fraction).collect();
        let found = transition(&gs, &ys, level);
        let rel = found.map(|g| (g - target) / target);
        let pass = rel.is_some_and(|r| r.abs() <= 0.10);
        ok &= pass;
        detail.push(format!(
            "alpha={alpha}: formula {g_crit:.4}, transition {} ({})",
            found.map_or("none".into(), |g| format!("{g:.4}")),
            rel.map_or("-".into(), |r| format!("{:+.1}%", 100.0 * r))
        ));
    }
    assert!(report("additive critical threshold", ok, detail.join("; "), t0));
}

#[test]
fn back_to_unity_probability_values() {
    let t0 = Instant::now();
    let p = 1.0 / 1100.0;
    let a = b2u::prob_active(p, 0.01, 0.95);
    let b = b2u::prob_active(p, 0.01, 0.995);
    let printed = format!("{a:.4}") == "0.0054" && format!("{:.2e}", b) == "9.09e-4";
    let mut ok = printed;
    let mut detail = vec![format!("P(s>=0.95)={a:.6}, P(s>=0.995)={b:.4e}")];
    for g in [0.95, 0.995] {
        let params = BackToUnityParams::new(1000, p, 0.01, 3000, g).unwrap();
        let ens = b2u::tie_ensemble(&params, pair_count(1000), SEED);
        let z = ens.active.z_score(b2u::prob_active(p, 0.01, g));
        ok &= z < 3.0;
        detail.push(format!("empirical g={g}: {:.6}±{:.6} (z={z:.2})", ens.active.mean, ens.active.stderr));
    }
    assert!(report("back-to-unity activity probability", ok, detail.join("; "), t0));
}

#[test]
fn back_to_unity_sweep_transitions() {
    let t0 = Instant::now();
    let level = er_mean_largest_fraction(1000, 1.0 / 1000.0, 500, SEED ^ 2).mean;
    let mut ok = true;
    let mut detail = vec![format!("G(n,1/n) level {level:.4}")];
    for (alpha, target) in [(0.01, 9e-5), (0.1, 5e-4), (1.0, 1e-3)] {
        let params = BackToUnityParams::new(1000, 0.0, alpha, 500, 0.9).unwrap();
        let ps = geomspace(target / 2.5, target * 2.5, 21);
        let rows = b2u::gcc_sweep_b2u(&params, &ps, 250, SEED).unwrap();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_fraction).collect();
        let found = transition(&ps, &ys, level);
        let rel = found.map(|p| (p - target) / target);
        let pass = rel.is_some_and(|r| r.abs() <= 0.20);
        ok &= pass;
        detail.push(format!(
            "alpha={alpha}: exact p_crit {:.4e}, transition {} ({})",
            b2u::critical_p(1000, alpha, 0.9).unwrap(),
            found.map_or("none".into(), |p| format!("{p:.4e}")),
            rel.map_or("-".into(), |r| format!("{:+.1}%", 100.0 * r))
        ));
    }
    assert!(report("back-to-unity sweep transitions", ok, detail.join("; "), t0));
}

#[test]
fn diffusion_law() {
    let t0 = Instant::now();
    let params = WalkParams::new(5e-3, 1e-5, 0.0, f64::INFINITY, 1.0, 0.03).unwrap();
    let xs = walk::simulate_walk(&params, 100_000, SEED);
    let s = tiedecay::stats::Summary::of(&xs);
    let target = 2.0 * params.k() * 0.03;
    let var_err = (s.std * s.std - target) / target;
    let sd = target.sqrt();
    // Samples sit on a lattice of spacing 2 dx; compare cell edges.
    let ks = ks_lattice(&xs, params.dx(), |x| normal_cdf(x / sd));
    let crit = ks_critical(0.01, xs.len());
    let ok = var_err.abs() <= 0.05 && ks < crit && s.z_score(0.0) < 3.0;
    let detail = format!(
        "variance {:.5} vs {target:.3} ({:+.2}%), mean z={:.2}, KS {ks:.5} < {crit:.5}",
        s.std * s.std,
        100.0 * var_err,
        s.z_score(0.0)
    );
    assert!(report("diffusion law", ok, detail, t0));
}

#[test]
fn convection_diffusion_stationarity() {
    let t0 = Instant::now();
    let (beta, dx, w) = (15.0, 5e-3, 2.0);
    let delta = beta * dx;
    let grid = Grid::new(1.0, w, dx).unwrap();
    let coeffs = SchemeCoeffs::new(0.5 + delta, 0.0, 0.5 - delta).unwrap();
    let m = fd::build_transition_matrix(&grid, &coeffs).unwrap();
    let u = fd::stationary_state(&grid, &m, StationaryBackend::Direct).unwrap();
    let boundary = u.boundary_value();
    let boundary_ok = (boundary - 52.174).abs() <= 1e-3;
    let exact_ratio = walk::adjacent_ratio(delta);
    let worst_ratio = u
        .values()
        .windows(2)
        .map(|p| (p[1] / p[0] - exact_ratio).abs())
        .fold(0.0, f64::max);
    let ratio_ok = worst_ratio <= 1e-9 && (exact_ratio - 1.352941).abs() < 5e-7;

    let errors: Vec<f64> = (0..4)
        .map(|h| {
            let dxh = dx / 2f64.powi(h);
            let g = Grid::new(1.0, w, dxh).unwrap();
            let k = SchemeCoeffs::new(0.5 + beta * dxh, 0.0, 0.5 - beta * dxh).unwrap();
            let mh = fd::build_transition_matrix(&g, &k).unwrap();
            4.0 * beta - fd::stationary_state(&g, &mh, StationaryBackend::Direct).unwrap().boundary_value()
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let order_ok = orders.iter().all(|o| (o - 1.0).abs() < 0.15);

    // Monte Carlo against the scheme evolved over the same horizon.
    let params = WalkParams::new(dx, 1e-5, delta, w, 1.0, 0.05).unwrap();
    let big = Grid::from_walk(&params).unwrap();
    let run = fd::evolve(&Field::delta_at(big, 0.0).unwrap(), &SchemeCoeffs::from_walk(&params), params.steps(), BoundaryRule::MassConserving)
        .unwrap();
    let probs: Vec<f64> = run.field.values().iter().map(|v| v * dx).collect();
    let mut counts = vec![0u64; big.len()];
    let (realizations, nodes) = (100u64, 2000usize);
    for r in 0..realizations {
        for x in walk::sample_endpoints(&params, pair_count(nodes), SEED, r) {
            counts[big.index_of(x).expect("sample on the grid")] += 1;
        }
    }
    let chi = chi_square_gof(&counts, &probs, 5.0);
    let mc_ok = chi.p_value > 0.01;
    let total: u64 = counts.iter().sum();
    let mc_boundary = counts[big.intervals()] as f64 / total as f64 / dx;

    let ok = boundary_ok && ratio_ok && order_ok && mc_ok;
    let detail = format!(
        "u_N={boundary:.6}, max |ratio-{exact_ratio:.10}|={worst_ratio:.1e}, orders {:?}, MC u_N={mc_boundary:.3} vs scheme {:.3}, chi2 p={:.3} (dof {})",
        orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>(),
        run.field.boundary_value(),
        chi.p_value,
        chi.dof
    );
    assert!(report("convection-diffusion stationarity", ok, detail, t0));
}

#[test]
fn mass_conservation() {
    let t0 = Instant::now();
    let grid = Grid::new(1.0, 2.0, 5e-3).unwrap();
    let coeffs = SchemeCoeffs::new(0.575, 0.0, 0.425).unwrap();
    let run = fd::evolve(&Field::delta_at(grid, 0.0).unwrap(), &coeffs, 1_000_000, BoundaryRule::MassConserving).unwrap();
    let final_drift = (run.field.mass() - 1.0).abs();
    let ok = run.max_mass_drift <= 1e-10 && final_drift <= 1e-10;
    let detail = format!("max drift {:.2e}, final drift {final_drift:.2e} over 1e6 steps", run.max_mass_drift);
    assert!(report("mass conservation", ok, detail, t0));
}

#[test]
fn sir_regimes() {
    let t0 = Instant::now();
    let steps = 400;
    let base = SirParams::from_lambda(0.6, 0.1, 5000, 1.0).unwrap();
    let init = SirState { s: 4990u64, i: 10, r: 0 };
    let discrete = sir::sir_discrete(init.to_real(), &base, steps);
    let ens = sir::sir_compare(&[1.0, 3.0, 0.3], &base, init, steps, 100, SEED).unwrap();
    let z99 = normal_quantile(0.99);

    // lambda = 1: every step inside 3-SE bands.
    let mut worst = (0.0f64, 0usize, "");
    let mut outside = 0;
    for t in 0..=steps {
        for (name, stats, reference) in [
            ("S", &ens[0].s[t], discrete[t].s),
            ("I", &ens[0].i[t], discrete[t].i),
            ("R", &ens[0].r[t], discrete[t].r),
        ] {
            let z = stats.z_score(reference);
            outside += (z > 3.0) as usize;
            if z > worst.0 {
                worst = (z, t, name);
            }
        }
    }
    let band_ok = worst.0 <= 3.0;

    let discrete_peak = sir::peak_time(&discrete) as f64;
    let peak = ens[1].peak_time();
    let faster = (discrete_peak - peak.mean) / peak.stderr > z99;

    let discrete_attack = sir::attack_rate(&discrete, 5000);
    let attack = ens[2].attack_rate();
    let smaller = (discrete_attack - attack.mean) / attack.stderr > z99;

    let ok = band_ok && faster && smaller;
    let detail = format!(
        "lambda=1 {outside} of {} step values outside 3 SE, worst z={:.1} ({} at step {}; peak I {:.0} vs {:.0}); lambda=3 peak {:.2}±{:.2} vs {discrete_peak}; lambda=0.3 attack {:.3}±{:.3} vs {discrete_attack:.4}",
        3 * (steps + 1),
        worst.0,
        worst.2,
        worst.1,
        ens[0].i.iter().map(|s| s.mean).fold(0.0, f64::max),
        discrete.iter().map(|s| s.i).fold(0.0, f64::max),
        peak.mean,
        peak.stderr,
        attack.mean,
        attack.stderr
    );
    assert!(report("sir regimes", ok, detail, t0));
}

fn bfs_largest_and_count(n: usize, edges: &[(usize, usize)]) -> (Vec<usize>, usize) {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let count = sizes.len();
    (sizes, count)
}

#[test]
fn oracle_suites() {
    let t0 = Instant::now();
    // Union-find against breadth-first search.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let p = rng.random::<f64>() * 4.0 / n as f64;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        let report = components(n, edges.iter().copied()).unwrap();
        let (sizes, count) = bfs_largest_and_count(n, &edges);
        if report.component_sizes != sizes || report.component_count() != count {
            mismatches += 1;
        }
    }
    let uf_ok = mismatches == 0;

    // Aggregated infection probability against per-contact simulation.
    let params = SirParams::new(0.6, 0.1, 20, 0.3).unwrap();
    let (s, i) = (15u64, 5u64);
    let q = sir::infection_probability(&params, i);
    let mut brute = vec![0u64; s as usize + 1];
    let mut aggregated = vec![0u64; s as usize + 1];
    for _ in 0..100_000 {
        let mut hits = 0;
        for _ in 0..s {
            let mut infected = false;
            for _ in 0..i {
                let contact = rng.random::<f64>() < params.p_active;
                let transmit = rng.random::<f64>() < params.beta_bar;
                infected |= contact && transmit;
            }
            hits += infected as usize;
        }
        brute[hits] += 1;
        let next = sir::sir_tiedecay_step(SirState { s, i, r: 0 }, &params, &mut rng);
        aggregated[(s - next.s) as usize] += 1;
    }
    // Compare the two samples with each other (homogeneity) and each with
    // the binomial law.
    let binom: Vec<f64> = (0..=s)
        .map(|k| {
            let ln = tiedecay_ln_choose(s, k) + k as f64 * q.ln() + (s - k) as f64 * (1.0 - q).ln();
            ln.exp()
        })
        .collect();
    let p_brute = chi_square_gof(&brute, &binom, 5.0).p_value;
    let p_agg = chi_square_gof(&aggregated, &binom, 5.0).p_value;
    let infection_ok = p_brute > 0.01 && p_agg > 0.01;

    // One scheme step from a point mass equals the walk's one-step law.
    let wp = WalkParams::new(5e-3, 1e-5, 0.075, 0.05, 0.05, 0.0).unwrap();
    let grid = Grid::from_walk(&wp).unwrap();
    let coeffs = SchemeCoeffs::from_walk(&wp);
    let mut step_ok = true;
    for j in 0..grid.len() {
        let x = grid.x(j);
        let stepped = fd::step_field(&Field::delta_at(grid, x).unwrap(), &coeffs);
        let mut law: HashMap<usize, f64> = HashMap::new();
        *law.entry(grid.index_of(walk::walk_step(x, &wp, 0.0).unwrap()).unwrap()).or_default() += wp.up_probability();
        *law.entry(grid.index_of(walk::walk_step(x, &wp, 1.0 - 1e-12).unwrap()).unwrap()).or_default() += 1.0 - wp.up_probability();
        for (k, &v) in stepped.values().iter().enumerate() {
            let want = law.get(&k).copied().unwrap_or(0.0);
            step_ok &= (v * grid.dx() - want).abs() <= 1e-15;
        }
    }

    let ok = uf_ok && infection_ok && step_ok;
    let detail = format!(
        "union-find/BFS mismatches {mismatches}/1000; infection chi2 p brute={p_brute:.3} aggregated={p_agg:.3}; scheme/walk one-step law {}",
        if step_ok { "identical" } else { "differs" }
    );
    assert!(report("oracle suites", ok, detail, t0));
}

fn tiedecay_ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|j| ((n - k + j) as f64 / j as f64).ln()).sum()
}
