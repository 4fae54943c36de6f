//! One runner per experiment id. Every runner is a pure function of the
//! config, so outputs depend only on the config and the seed; parallel
//! work inside the library is collected in index order.

use std::collections::BTreeMap;

use rand::Rng;
use serde_json::Value;

use tiedecay::additive::{self, AdditiveParams, SweepRow};
use tiedecay::b2u::{self, BackToUnityParams};
use tiedecay::fd::{self, BoundaryRule, Field, Grid, SchemeCoeffs, StationaryBackend};
use tiedecay::graph::{er_mean_largest_fraction, pair_count, ThresholdMode};
use tiedecay::rng::{derive_seed, realization_rng};
use tiedecay::sir::{self, SirParams, SirState};
use tiedecay::stats::log_crossing;
use tiedecay::walk::{self, WalkParams};

use crate::config::*;
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Stream tag for the random-graph reference level of a sweep.
const REFERENCE_TAG: u64 = u64::MAX;

/// Dry-run checks: every violation found, empty when the config can run.
pub fn check(config: &ExperimentConfig) -> Vec<String> {
    let mut v = Vec::new();
    match &config.params {
        Params::AdditiveTrace(p) => keep(&mut v, AdditiveParams::with_initial(2, p.p, p.alpha, p.steps, p.s0).map(drop).map_err(msg)),
        Params::AdditiveMoments(p) => {
            keep(&mut v, AdditiveParams::new(p.n.max(2), p.p, p.alpha, 0).map(drop).map_err(msg));
            if p.n < 2 {
                keep(&mut v, Err(format!("params.n: need at least 2 nodes, got {}", p.n)));
            }
            if p.checkpoints.is_empty() {
                keep(&mut v, Err("params.checkpoints: list is empty".into()));
            }
            if p.edges == Some(0) {
                keep(&mut v, Err("params.edges: must be positive".into()));
            }
        }
        Params::AdditiveGcc(p) => {
            keep(&mut v, AdditiveParams::with_initial(p.n, p.p, p.alpha, p.steps, p.s0).map(drop).map_err(msg));
            keep(&mut v, p.g.resolve("params.g").and_then(|gs| {
                gs.iter()
                    .all(|&g| g >= 0.0 && g.is_finite())
                    .then_some(())
                    .ok_or_else(|| "params.g: thresholds must be finite and >= 0".into())
            }));
        }
        Params::B2uTrace(p) => keep(&mut v, BackToUnityParams::new(2, p.p, p.alpha, p.steps, p.g).map(drop).map_err(msg)),
        Params::B2uComponents(p) => keep(&mut v, BackToUnityParams::new(p.n, p.p, p.alpha, p.steps, p.g).map(drop).map_err(msg)),
        Params::B2uSweep(p) => {
            keep(&mut v, BackToUnityParams::new(p.n, 0.0, p.alpha, p.steps, p.g).map(drop).map_err(msg));
            keep(&mut v, p.p.resolve("params.p").and_then(|ps| {
                ps.iter()
                    .all(|x| (0.0..=1.0).contains(x))
                    .then_some(())
                    .ok_or_else(|| "params.p: probabilities must lie in [0, 1]".into())
            }));
        }
        Params::WalkTrace(p) => {
            check_walk(&p.walk(), false, &mut v);
            if p.edges == 0 || p.stride == 0 {
                v.push("params.edges and params.stride must be positive".into());
            }
        }
        Params::WalkStationary(p) => {
            check_walk(&p.walk(), false, &mut v);
            if p.nodes < 2 {
                v.push(format!("params.nodes: need at least 2 nodes, got {}", p.nodes));
            }
        }
        Params::FdEvolve(p) => check_walk(&p.walk(), true, &mut v),
        Params::FdStationary(p) => {
            if !(0.0..0.5).contains(&p.delta) {
                v.push(format!("params.delta = {}: Δ < 1/2 (and >= 0) required", p.delta));
            } else if p.delta == 0.0 {
                v.push("params.delta = 0: the stationary solver needs a positive drift bias".into());
            } else {
                let coeffs = SchemeCoeffs::new(0.5 + p.delta, 0.0, 0.5 - p.delta);
                let grid = Grid::new(p.l, p.w, p.dx);
                if let Err(e) = &coeffs {
                    v.push(msg(e.clone()));
                }
                if let Err(e) = &grid {
                    v.push(msg(e.clone()));
                }
                if let (Ok(g), Ok(c)) = (grid, coeffs) {
                    keep(&mut v, fd::build_transition_matrix(&g, &c).map(drop).map_err(msg));
                }
            }
        }
        Params::SirCompare(p) => {
            keep(&mut v, SirParams::new(p.beta_bar, p.gamma_bar, p.n_p, 0.0).map(drop).map_err(msg));
            if p.s0 + p.i0 > p.n_p {
                keep(&mut v, Err(format!("params.s0 + params.i0 = {} exceeds n_p = {}", p.s0 + p.i0, p.n_p)));
            }
            if p.lambdas.is_empty() {
                keep(&mut v, Err("params.lambdas: list is empty".into()));
            }
            for &l in &p.lambdas {
                keep(&mut v, SirParams::from_lambda(p.beta_bar, p.gamma_bar, p.n_p, l).map(drop).map_err(|e| format!("params.lambdas: {e}")));
            }
        }
    }
    v
}

fn keep(v: &mut Vec<String>, r: Result<(), String>) {
    if let Err(e) = r {
        v.push(e);
    }
}

fn msg(e: tiedecay::Error) -> String {
    format!("params: {e}")
}

fn check_walk(spec: &WalkSpec, needs_bound: bool, v: &mut Vec<String>) {
    if !(0.0..0.5).contains(&spec.delta) {
        v.push(format!("params.delta = {}: Δ < 1/2 (and >= 0) required", spec.delta));
        return;
    }
    if spec.dx > 0.0 && spec.dt > 0.0 {
        let reach = spec.dx / spec.dt * spec.t_total;
        if spec.l < reach * (1.0 - 1e-12) {
            v.push(format!(
                "params.l = {} is below v T = {reach}: walkers could reach the lower edge; use l >= {reach}",
                spec.l
            ));
        }
    }
    if needs_bound && spec.w.is_none() {
        v.push("params.w: a finite upper bound is required for the scheme grid".into());
    }
    if let Err(e) = walk_params(spec) {
        v.push(msg(e));
    }
}

fn walk_params(spec: &WalkSpec) -> tiedecay::Result<WalkParams> {
    WalkParams::new(spec.dx, spec.dt, spec.delta, spec.w.unwrap_or(f64::INFINITY), spec.l, spec.t_total)?.with_start(spec.x0)
}

pub fn run(config: &ExperimentConfig) -> Result<Table, CliError> {
    let violations = check(config);
    if !violations.is_empty() {
        return Err(CliError::Config(violations.join("; ")));
    }
    let (seed, reps) = (config.seed, config.realizations);
    match &config.params {
        Params::AdditiveTrace(p) => additive_trace(p, seed),
        Params::AdditiveMoments(p) => additive_moments(p, seed),
        Params::AdditiveGcc(p) => additive_gcc(p, reps, seed),
        Params::B2uTrace(p) => b2u_trace(p, seed),
        Params::B2uComponents(p) => b2u_components(p, reps, seed),
        Params::B2uSweep(p) => b2u_sweep(p, reps, seed),
        Params::WalkTrace(p) => walk_trace(p, seed),
        Params::WalkStationary(p) => walk_stationary(p, reps, seed),
        Params::FdEvolve(p) => fd_evolve(p),
        Params::FdStationary(p) => fd_stationary(p),
        Params::SirCompare(p) => sir_compare(p, reps, seed),
    }
}

fn trace_table(values: &[f64]) -> Table {
    let mut t = Table::new(&["t", "s"]);
    for (i, &s) in values.iter().enumerate() {
        t.push(vec![i.into(), s.into()]);
    }
    t
}

fn additive_trace(p: &AdditiveTrace, seed: u64) -> Result<Table, CliError> {
    let params = AdditiveParams::with_initial(2, p.p, p.alpha, p.steps, p.s0)?;
    let mut t = trace_table(&additive::trace(&params, seed));
    t.note("mean_stationary", additive::mean_stationary(p.p, p.alpha)?);
    Ok(t)
}

fn additive_moments(p: &AdditiveMoments, seed: u64) -> Result<Table, CliError> {
    let params = AdditiveParams::new(p.n, p.p, p.alpha, 0)?;
    let snaps = additive::simulate_marginal(&params, &p.checkpoints, p.edges.unwrap_or(pair_count(p.n)), seed);
    let mut t = Table::new(&["t", "analytic_mean", "mc_mean", "mc_stderr", "mc_m2", "mc_m2_stderr", "mc_m3", "mc_m3_stderr"]);
    for s in &snaps {
        let [_, m2, m3] = s.raw_moments;
        t.push(vec![
            u64::from(s.t).into(),
            additive::mean_finite_time(p.p, p.alpha, s.t).into(),
            s.strength.mean.into(),
            s.strength.stderr.into(),
            m2.mean.into(),
            m2.stderr.into(),
            m3.mean.into(),
            m3.stderr.into(),
        ]);
    }
    let moments = additive::raw_moments_stationary(p.p, p.alpha, 3)?;
    t.note("mean_stationary", moments[0]);
    t.note("variance_stationary", additive::variance_stationary(p.p, p.alpha)?);
    t.note("m2_stationary", moments[1]);
    t.note("m3_stationary", moments[2]);
    Ok(t)
}

fn sweep_table(column: &'static str, rows: &[SweepRow], level: f64) -> Table {
    let mut t = Table::new(&[column, "mean_fraction", "stderr"]);
    for r in rows {
        t.push(vec![r.x.into(), r.mean_fraction.into(), r.stderr.into()]);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_fraction).collect();
    t.note("reference_level", level);
    t.note("transition", log_crossing(&xs, &ys, level).map_or(Value::Null, Value::from));
    t
}

fn additive_gcc(p: &AdditiveGcc, reps: usize, seed: u64) -> Result<Table, CliError> {
    let params = AdditiveParams::with_initial(p.n, p.p, p.alpha, p.steps, p.s0)?;
    let gs = p.g.resolve("params.g").map_err(CliError::Config)?;
    let mode = match p.mode {
        ModeSpec::AtLeast => ThresholdMode::AtLeast,
        ModeSpec::StrictlyAbove => ThresholdMode::StrictlyAbove,
    };
    let rows = additive::gcc_sweep(&params, &gs, reps, mode, seed)?;
    let level = er_mean_largest_fraction(p.n, 1.0 / p.n as f64, reps, derive_seed(seed, REFERENCE_TAG)).mean;
    let mut t = sweep_table("g", &rows, level);
    match additive::critical_threshold(&params) {
        Ok(g) => t.note("g_crit", g),
        Err(e) => t.note("g_crit_unavailable", e.to_string()),
    }
    Ok(t)
}

fn b2u_trace(p: &B2uTrace, seed: u64) -> Result<Table, CliError> {
    let params = BackToUnityParams::new(2, p.p, p.alpha, p.steps, p.g)?;
    let s = b2u::trace_b2u(&params, seed);
    let mut t = Table::new(&["t", "s", "active"]);
    for (i, &x) in s.iter().enumerate() {
        t.push(vec![i.into(), x.into(), u64::from(x >= p.g).into()]);
    }
    t.note("prob_active", b2u::prob_active(p.p, p.alpha, p.g));
    Ok(t)
}

fn b2u_components(p: &B2uComponents, reps: usize, seed: u64) -> Result<Table, CliError> {
    let params = BackToUnityParams::new(p.n, p.p, p.alpha, p.steps, p.g)?;
    let mut t = Table::new(&["realization", "rank", "size"]);
    for r in 0..reps {
        let report = b2u::components_b2u(&params, derive_seed(seed, r as u64));
        for (rank, &size) in report.component_sizes.iter().enumerate() {
            t.push(vec![r.into(), rank.into(), size.into()]);
        }
    }
    t.note("prob_active", b2u::prob_active(p.p, p.alpha, p.g));
    t.note("gcc_predicted", b2u::gcc_predicted(p.n, p.p, p.alpha, p.g));
    if let Ok(pc) = b2u::critical_p(p.n, p.alpha, p.g) {
        t.note("critical_p", pc);
    }
    Ok(t)
}

fn b2u_sweep(p: &B2uSweep, reps: usize, seed: u64) -> Result<Table, CliError> {
    let params = BackToUnityParams::new(p.n, 0.0, p.alpha, p.steps, p.g)?;
    let ps = p.p.resolve("params.p").map_err(CliError::Config)?;
    let rows = b2u::gcc_sweep_b2u(&params, &ps, reps, seed)?;
    let level = er_mean_largest_fraction(p.n, 1.0 / p.n as f64, reps, derive_seed(seed, REFERENCE_TAG)).mean;
    let mut t = sweep_table("p", &rows, level);
    if let Ok(pc) = b2u::critical_p(p.n, p.alpha, p.g) {
        t.note("critical_p", pc);
    }
    if let Ok(pc) = b2u::critical_p_approx(p.n, p.alpha, p.g) {
        t.note("critical_p_approx", pc);
    }
    Ok(t)
}

fn walk_trace(p: &WalkTrace, seed: u64) -> Result<Table, CliError> {
    let params = walk_params(&p.walk())?;
    let mut t = Table::new(&["edge", "step", "t", "x"]);
    for e in 0..p.edges {
        let mut rng = realization_rng(seed, e as u64);
        let mut x = params.start();
        for step in 0..=params.steps() {
            if step % p.stride as u64 == 0 || step == params.steps() {
                t.push(vec![e.into(), step.into(), (step as f64 * params.dt()).into(), x.into()]);
            }
            if step < params.steps() {
                x = walk::walk_step(x, &params, rng.random::<f64>())?;
            }
        }
    }
    Ok(t)
}

fn walk_stationary(p: &WalkStationary, reps: usize, seed: u64) -> Result<Table, CliError> {
    let params = walk_params(&p.walk())?;
    let dx = params.dx();
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for r in 0..reps {
        for x in walk::sample_endpoints(&params, pair_count(p.nodes), seed, r as u64) {
            *counts.entry((x / dx).round() as i64).or_default() += 1;
        }
    }
    let total: u64 = counts.values().sum();
    let mut t = Table::new(&["x", "count", "density"]);
    for (&i, &c) in &counts {
        t.push(vec![(i as f64 * dx).into(), c.into(), (c as f64 / (total as f64 * dx)).into()]);
    }
    t.note("samples", total);
    t.note("beta", params.beta());
    t.note("k", params.k());
    if params.is_bounded() && params.delta() > 0.0 {
        t.note("boundary_value_discrete", walk::boundary_value_discrete(params.beta(), params.delta()));
    }
    Ok(t)
}

fn fd_evolve(p: &FdEvolve) -> Result<Table, CliError> {
    let params = walk_params(&p.walk())?;
    let grid = Grid::from_walk(&params)?;
    let coeffs = SchemeCoeffs::from_walk(&params);
    let rule = match p.boundary {
        BoundarySpec::MassConserving => BoundaryRule::MassConserving,
        BoundarySpec::ContinuousFlux => BoundaryRule::ContinuousFlux,
    };
    let total = params.steps();
    let mut marks: Vec<u64> = p.snapshots.iter().copied().filter(|&s| s <= total).collect();
    marks.push(total);
    marks.sort_unstable();
    marks.dedup();

    let mut t = Table::new(&["step", "t", "x", "u"]);
    let mut field = Field::delta_at(grid, params.start())?;
    let mut drift: f64 = 0.0;
    for &mark in &marks {
        let run = fd::evolve(&field, &coeffs, mark - field.step(), rule)?;
        drift = drift.max(run.max_mass_drift + (field.mass() - 1.0).abs());
        field = run.field;
        for (x, u) in field.table() {
            t.push(vec![mark.into(), (mark as f64 * params.dt()).into(), x.into(), u.into()]);
        }
    }
    t.note("max_mass_drift", drift);
    t.note("final_boundary_value", field.boundary_value());
    Ok(t)
}

fn fd_stationary(p: &FdStationary) -> Result<Table, CliError> {
    let grid = Grid::new(p.l, p.w, p.dx)?;
    let coeffs = SchemeCoeffs::new(0.5 + p.delta, 0.0, 0.5 - p.delta)?;
    let matrix = fd::build_transition_matrix(&grid, &coeffs)?;
    let backend = match p.backend {
        BackendSpec::Direct => StationaryBackend::Direct,
        BackendSpec::PowerIteration => StationaryBackend::PowerIteration {
            max_iterations: p.max_iterations,
        },
    };
    let u = fd::stationary_state(&grid, &matrix, backend)?;
    let mut t = Table::new(&["x", "u"]);
    for (x, v) in u.table() {
        t.push(vec![x.into(), v.into()]);
    }
    let beta = p.delta / p.dx;
    t.note("boundary_value", u.boundary_value());
    t.note("boundary_value_exact", walk::boundary_value_discrete(beta, p.delta));
    t.note("adjacent_ratio_exact", walk::adjacent_ratio(p.delta));
    t.note("residual", matrix.residual(u.values()));
    Ok(t)
}

fn sir_compare(p: &SirCompare, reps: usize, seed: u64) -> Result<Table, CliError> {
    let base = SirParams::new(p.beta_bar, p.gamma_bar, p.n_p, 0.0)?;
    let initial = SirState {
        s: p.s0,
        i: p.i0,
        r: p.n_p - p.s0 - p.i0,
    };
    let discrete = sir::sir_discrete(initial.to_real(), &base, p.steps);
    let ensembles = sir::sir_compare(&p.lambdas, &base, initial, p.steps, reps, seed)?;

    let mut t = Table::new(&["model", "lambda", "t", "s", "s_stderr", "i", "i_stderr", "r", "r_stderr"]);
    for (step, st) in discrete.iter().enumerate() {
        let row: Vec<Cell> = vec![
            "discrete".into(),
            Cell::Empty,
            step.into(),
            st.s.into(),
            0.0.into(),
            st.i.into(),
            0.0.into(),
            st.r.into(),
            0.0.into(),
        ];
        t.push(row);
    }
    let mut per_lambda = serde_json::Map::new();
    for ens in &ensembles {
        for step in 0..=p.steps {
            t.push(vec![
                "tiedecay".into(),
                ens.lambda.into(),
                step.into(),
                ens.s[step].mean.into(),
                ens.s[step].stderr.into(),
                ens.i[step].mean.into(),
                ens.i[step].stderr.into(),
                ens.r[step].mean.into(),
                ens.r[step].stderr.into(),
            ]);
        }
        let (peak, attack) = (ens.peak_time(), ens.attack_rate());
        per_lambda.insert(
            ens.lambda.to_string(),
            serde_json::json!({
                "peak_time": peak.mean, "peak_time_stderr": peak.stderr,
                "attack_rate": attack.mean, "attack_rate_stderr": attack.stderr,
            }),
        );
    }
    t.note("discrete_peak_time", sir::peak_time(&discrete));
    t.note("discrete_attack_rate", sir::attack_rate(&discrete, p.n_p));
    t.note("ensembles", Value::Object(per_lambda));
    Ok(t)
}
