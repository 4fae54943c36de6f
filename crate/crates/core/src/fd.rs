//! Explicit finite-difference evolution of the log-strength density.
//!
//! On the grid `x_j = -L + j dx`, `j = 0..=N`, the interior update is
//! `u_j' = a u_{j-1} + b u_j + c u_{j+1}`. The end nodes keep whatever the
//! interior would have pushed past them:
//! `u_0' = (1 - a) u_0 + c u_1` and `u_N' = (1 - c) u_N + a u_{N-1}`,
//! so every column of the step operator sums to one and mass is conserved.
//! Fields carry unit probability mass, `sum_j u_j dx = 1`.

use crate::error::{config, invalid, Error, Result};
use crate::walk::WalkParams;

/// Tolerance on unit mass when accepting a field.
const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lower: f64,
    dx: f64,
    /// Number of intervals `N`; there are `N + 1` nodes.
    intervals: usize,
}

impl Grid {
    pub fn new(l: f64, w: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !(l.is_finite() && w.is_finite()) {
            return Err(invalid(format!("grid needs finite bounds and dx > 0, got L={l}, w={w}, dx={dx}")));
        }
        let span = (w + l) / dx;
        let intervals = span.round();
        if (span - intervals).abs() > 1e-9 * span.max(1.0) {
            return Err(invalid(format!("(w + L) / dx = {span} is not an integer")));
        }
        if intervals < 2.0 {
            return Err(invalid("grid needs at least three nodes"));
        }
        Ok(Self {
            lower: -l,
            dx,
            intervals: intervals as usize,
        })
    }

    /// Grid spanning `[-L, w]` of a bounded walk.
    pub fn from_walk(params: &WalkParams) -> Result<Self> {
        if !params.is_bounded() {
            return Err(invalid("the unbounded walk has no finite grid"));
        }
        let intervals = (params.upper_index() - params.lower_index()) as usize;
        if intervals < 2 {
            return Err(invalid("grid needs at least three nodes"));
        }
        Ok(Self {
            lower: params.lower_index() as f64 * params.dx(),
            dx: params.dx(),
            intervals,
        })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn intervals(&self) -> usize {
        self.intervals
    }
    pub fn len(&self) -> usize {
        self.intervals + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn x(&self, j: usize) -> f64 {
        self.lower + j as f64 * self.dx
    }
    /// Node at `x`, if `x` is (to rounding) a grid point.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let r = (x - self.lower) / self.dx;
        let j = r.round();
        ((r - j).abs() <= 1e-6 && j >= 0.0 && j <= self.intervals as f64).then_some(j as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    step: u64,
}

impl Field {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("field values must be non-negative"));
        }
        let field = Self { grid, values, step: 0 };
        let mass = field.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!("field mass is {mass}, expected 1")));
        }
        Ok(field)
    }

    /// All mass on the node at `x`.
    pub fn delta_at(grid: Grid, x: f64) -> Result<Self> {
        let j = grid.index_of(x).ok_or_else(|| invalid(format!("{x} is not a grid point")))?;
        let mut values = vec![0.0; grid.len()];
        values[j] = 1.0 / grid.dx;
        Ok(Self { grid, values, step: 0 })
    }

    pub fn uniform(grid: Grid) -> Self {
        let v = 1.0 / (grid.len() as f64 * grid.dx);
        Self {
            grid,
            values: vec![v; grid.len()],
            step: 0,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    /// Number of time steps taken since the initial field.
    pub fn step(&self) -> u64 {
        self.step
    }
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx
    }
    pub fn boundary_value(&self) -> f64 {
        self.values[self.grid.intervals]
    }
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
    /// `(x_j, u_j)` pairs.
    pub fn table(&self) -> Vec<(f64, f64)> {
        self.values.iter().enumerate().map(|(j, &u)| (self.grid.x(j), u)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SchemeCoeffs {
    /// Rejects negative coefficients (instability) and sums away from 1.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if a < 0.0 || b < 0.0 || c < 0.0 || !(a + b + c).is_finite() {
            return Err(config(format!("scheme coefficients must be non-negative, got a={a}, b={b}, c={c}")));
        }
        if (a + b + c - 1.0).abs() > 1e-12 {
            return Err(config(format!("scheme coefficients sum to {}, not 1", a + b + c)));
        }
        Ok(Self { a, b, c })
    }

    /// Forward-time, central-difference coefficients for
    /// `u_t = k u_xx - 4 beta k u_x`: with `r = k dt / dx^2`,
    /// `a = r + 2 beta k dt / dx`, `b = 1 - 2r`, `c = r - 2 beta k dt / dx`.
    pub fn from_physical(k: f64, beta: f64, dx: f64, dt: f64) -> Result<Self> {
        let r = k * dt / (dx * dx);
        let drift = 2.0 * beta * k * dt / dx;
        Self::new(r + drift, 1.0 - 2.0 * r, r - drift)
    }

    /// Coefficients matching the walk: `a = 1/2 + Delta`, `b = 0`, `c = 1/2 - Delta`.
    pub fn from_walk(params: &WalkParams) -> Self {
        let d = params.delta();
        Self {
            a: 0.5 + d,
            b: 0.0,
            c: 0.5 - d,
        }
    }

    pub fn delta(&self) -> f64 {
        (self.a - self.c) / 2.0
    }
}

/// Right-boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryRule {
    /// `u_N' = (1 - c) u_N + a u_{N-1}`; conserves mass exactly.
    #[default]
    MassConserving,
    /// `u_N' = u_{N-1}' / (1 - 4 Delta)`, the discretized zero-flux
    /// condition of the continuum equation. Needs `Delta < 1/4`; does not
    /// conserve mass exactly.
    ContinuousFlux,
}

/// One mass-conserving step.
pub fn step_field(u: &Field, coeffs: &SchemeCoeffs) -> Field {
    let mut out = vec![0.0; u.values.len()];
    step_into(&u.values, &mut out, coeffs);
    Field {
        grid: u.grid,
        values: out,
        step: u.step + 1,
    }
}

pub fn step_field_with(u: &Field, coeffs: &SchemeCoeffs, rule: BoundaryRule) -> Result<Field> {
    let mut out = vec![0.0; u.values.len()];
    match rule {
        BoundaryRule::MassConserving => step_into(&u.values, &mut out, coeffs),
        BoundaryRule::ContinuousFlux => step_into_flux(&u.values, &mut out, coeffs)?,
    }
    Ok(Field {
        grid: u.grid,
        values: out,
        step: u.step + 1,
    })
}

fn step_into(u: &[f64], out: &mut [f64], k: &SchemeCoeffs) {
    let n = u.len() - 1;
    out[0] = (1.0 - k.a) * u[0] + k.c * u[1];
    for j in 1..n {
        out[j] = k.a * u[j - 1] + k.b * u[j] + k.c * u[j + 1];
    }
    out[n] = (1.0 - k.c) * u[n] + k.a * u[n - 1];
}

fn step_into_flux(u: &[f64], out: &mut [f64], k: &SchemeCoeffs) -> Result<()> {
    let factor = 1.0 - 4.0 * k.delta();
    if !(factor > 0.0) {
        return Err(config("the continuous-flux boundary needs Delta < 1/4"));
    }
    step_into(u, out, k);
    let n = u.len() - 1;
    out[n] = out[n - 1] / factor;
    Ok(())
}

/// Column-stochastic tridiagonal step operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    /// `M[j+1][j]`, mass moved up from node `j`.
    sub: Vec<f64>,
    diag: Vec<f64>,
    /// `M[j][j+1]`, mass moved down from node `j + 1`.
    sup: Vec<f64>,
}

pub fn build_transition_matrix(grid: &Grid, coeffs: &SchemeCoeffs) -> Result<TransitionMatrix> {
    if coeffs.a <= 0.0 || coeffs.c <= 0.0 {
        return Err(config(format!(
            "transition band must be positive (needs Delta < 1/2), got a={}, c={}",
            coeffs.a, coeffs.c
        )));
    }
    let n = grid.intervals;
    let mut diag = vec![coeffs.b; n + 1];
    diag[0] = 1.0 - coeffs.a;
    diag[n] = 1.0 - coeffs.c;
    let m = TransitionMatrix {
        sub: vec![coeffs.a; n],
        diag,
        sup: vec![coeffs.c; n],
    };
    let worst = m.column_sums().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "column sums deviate from 1 by {worst}");
    Ok(m)
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `M[i][j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.sub[j]
        } else if j == i + 1 {
            self.sup[i]
        } else {
            0.0
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.len() - 1;
        (0..=n)
            .map(|j| {
                let down = if j > 0 { self.sup[j - 1] } else { 0.0 };
                let up = if j < n { self.sub[j] } else { 0.0 };
                self.diag[j] + down + up
            })
            .collect()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len() - 1;
        (0..=n)
            .map(|i| {
                let mut v = self.diag[i] * u[i];
                if i > 0 {
                    v += self.sub[i - 1] * u[i - 1];
                }
                if i < n {
                    v += self.sup[i] * u[i + 1];
                }
                v
            })
            .collect()
    }

    /// `max |M u - u| / max u`.
    pub fn residual(&self, u: &[f64]) -> f64 {
        let mu = self.apply(u);
        let scale = u.iter().copied().fold(0.0, f64::max);
        mu.iter().zip(u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationaryBackend {
    /// Detailed balance: a tridiagonal stochastic matrix is a birth–death
    /// chain, so `u_{j+1} / u_j = M[j+1][j] / M[j][j+1]`. Accumulated in
    /// log space; tails far below the peak underflow to zero.
    Direct,
    /// Repeated application of the operator from the uniform field.
    PowerIteration { max_iterations: u64 },
}

/// Residual that a stationary state must reach.
pub const STATIONARY_RESIDUAL: f64 = 1e-12;

pub fn stationary_state(grid: &Grid, matrix: &TransitionMatrix, backend: StationaryBackend) -> Result<Field> {
    if matrix.len() != grid.len() {
        return Err(invalid("matrix and grid sizes differ"));
    }
    let values = match backend {
        StationaryBackend::Direct => {
            let mut log_u = vec![0.0; matrix.len()];
            for j in 0..matrix.len() - 1 {
                log_u[j + 1] = log_u[j] + (matrix.sub[j] / matrix.sup[j]).ln();
            }
            let peak = log_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut u: Vec<f64> = log_u.iter().map(|l| (l - peak).exp()).collect();
            let total: f64 = u.iter().sum::<f64>() * grid.dx;
            u.iter_mut().for_each(|v| *v /= total);
            u
        }
        StationaryBackend::PowerIteration { max_iterations } => {
            let mut u = Field::uniform(*grid).values;
            let mut done = 0;
            loop {
                for _ in 0..100 {
                    u = matrix.apply(&u);
                }
                done += 100;
                let r = matrix.residual(&u);
                if r <= STATIONARY_RESIDUAL {
                    break;
                }
                if done >= max_iterations {
                    return Err(Error::Numerical {
                        message: format!("power iteration did not converge in {done} iterations"),
                        residual: r,
                    });
                }
            }
            let total: f64 = u.iter().sum::<f64>() * grid.dx;
            u.iter_mut().for_each(|v| *v /= total);
            u
        }
    };
    let residual = matrix.residual(&values);
    if residual > STATIONARY_RESIDUAL {
        return Err(Error::Numerical {
            message: "stationary state fails the fixed-point check".into(),
            residual,
        });
    }
    Ok(Field {
        grid: *grid,
        values,
        step: 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub field: Field,
    /// Largest `|mass - initial mass|` seen over the run.
    pub max_mass_drift: f64,
}

/// `steps` applications of the scheme, auditing mass after every step.
pub fn evolve(u0: &Field, coeffs: &SchemeCoeffs, steps: u64, rule: BoundaryRule) -> Result<Evolution> {
    let initial = u0.mass();
    let mut cur = u0.values.clone();
    let mut next = vec![0.0; cur.len()];
    let mut drift: f64 = 0.0;
    for _ in 0..steps {
        match rule {
            BoundaryRule::MassConserving => step_into(&cur, &mut next, coeffs),
            BoundaryRule::ContinuousFlux => step_into_flux(&cur, &mut next, coeffs)?,
        }
        std::mem::swap(&mut cur, &mut next);
        let mass = cur.iter().sum::<f64>() * u0.grid.dx;
        drift = drift.max((mass - initial).abs());
    }
    Ok(Evolution {
        field: Field {
            grid: u0.grid,
            values: cur,
            step: u0.step + steps,
        },
        max_mass_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{adjacent_ratio, gaussian_solution, timescales, walk_step};
    use rand::{Rng, SeedableRng};

    fn fig6_grid(dx: f64) -> (Grid, SchemeCoeffs) {
        let grid = Grid::new(1.0, 2.0, dx).unwrap();
        let delta = 15.0 * dx;
        (grid, SchemeCoeffs::new(0.5 + delta, 0.0, 0.5 - delta).unwrap())
    }

    #[test]
    fn coefficient_identification() {
        let k = SchemeCoeffs::from_physical(1.25, 15.0, 5e-3, 1e-5).unwrap();
        assert!((k.a - 0.575).abs() < 1e-12 && k.b.abs() < 1e-12 && (k.c - 0.425).abs() < 1e-12);
        assert!(matches!(SchemeCoeffs::new(0.7, -0.1, 0.4), Err(Error::Config(_))));
        assert!(matches!(SchemeCoeffs::from_physical(1.25, 15.0, 5e-3, 2e-5), Err(Error::Config(_))));
    }

    #[test]
    fn diffusion_step_averages_neighbours() {
        let grid = Grid::new(0.02, 0.02, 0.01).unwrap();
        let k = SchemeCoeffs::new(0.5, 0.0, 0.5).unwrap();
        let u = Field::from_values(grid, vec![10.0, 20.0, 30.0, 20.0, 20.0]).unwrap();
        let v = step_field(&u, &k);
        assert_eq!(v.values()[2], 20.0);
        assert_eq!(v.values()[1], 20.0);
        let d = Field::delta_at(grid, 0.0).unwrap();
        let s = step_field(&d, &k);
        assert_eq!(s.values(), &[0.0, 50.0, 0.0, 50.0, 0.0]);
    }

    #[test]
    fn right_boundary_update() {
        let grid = Grid::new(0.02, 0.0, 0.01).unwrap();
        let k = SchemeCoeffs::new(0.575, 0.0, 0.425).unwrap();
        let u = Field::from_values(grid, vec![0.0, 40.0, 60.0]).unwrap();
        let v = step_field(&u, &k);
        assert!((v.boundary_value() - (0.575 * 60.0 + 0.575 * 40.0)).abs() < 1e-12);
        assert!((v.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_grid_columns_sum_to_one() {
        let grid = Grid::new(0.01, 0.01, 0.01).unwrap();
        let m = build_transition_matrix(&grid, &SchemeCoeffs::new(0.5, 0.0, 0.5).unwrap()).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.column_sums().iter().all(|s| (s - 1.0).abs() < 1e-15));
        assert!(build_transition_matrix(&grid, &SchemeCoeffs::new(1.0, 0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn operator_equals_step_on_random_fields() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let grid = Grid::new(0.3, 0.2, 0.01).unwrap();
        let k = SchemeCoeffs::new(0.3, 0.25, 0.45).unwrap();
        let m = build_transition_matrix(&grid, &k).unwrap();
        for _ in 0..100 {
            let raw: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum::<f64>() * grid.dx();
            let u = Field::from_values(grid, raw.iter().map(|v| v / s).collect()).unwrap();
            let by_step = step_field(&u, &k);
            let by_matrix = m.apply(u.values());
            for (x, y) in by_step.values().iter().zip(&by_matrix) {
                assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0));
            }
        }
    }

    /// One step from a point mass reproduces the one-step law of the walk,
    /// at the bound, in the interior and at the lower edge.
    #[test]
    fn scheme_step_is_walk_law() {
        let params = WalkParams::new(0.01, 1e-4, 0.1, 0.05, 0.05, 0.0).unwrap();
        let grid = Grid::from_walk(&params).unwrap();
        let k = SchemeCoeffs::from_walk(&params);
        for j in [0usize, 3, grid.intervals()] {
            let x = grid.x(j);
            let f = step_field(&Field::delta_at(grid, x).unwrap(), &k);
            let mut law = vec![0.0; grid.len()];
            let up = grid.index_of(walk_step(x, &params, 0.0).unwrap()).unwrap();
            let down = grid.index_of(walk_step(x, &params, 0.999_999).unwrap()).unwrap();
            law[up] += params.up_probability();
            law[down] += 1.0 - params.up_probability();
            let mass: Vec<f64> = f.values().iter().map(|u| u * grid.dx()).collect();
            for (m, l) in mass.iter().zip(&law) {
                assert!((m - l).abs() < 1e-15, "node {j}");
            }
        }
    }

    #[test]
    fn stationary_boundary_and_ratios() {
        let (grid, k) = fig6_grid(5e-3);
        let m = build_transition_matrix(&grid, &k).unwrap();
        let u = stationary_state(&grid, &m, StationaryBackend::Direct).unwrap();
        assert!((u.boundary_value() - 52.173_913_043).abs() < 1e-6);
        let target = adjacent_ratio(0.075);
        for pair in u.values().windows(2) {
            assert!((pair[1] / pair[0] - target).abs() < 1e-10 * target);
        }
        assert!((u.mass() - 1.0).abs() < 1e-12);
        // Eigenvalue 1.
        let mu = m.apply(u.values());
        assert!(mu.iter().zip(u.values()).all(|(a, b)| (a - b).abs() <= 1e-12 * 60.0));
    }

    #[test]
    fn power_iteration_agrees_with_direct() {
        let (grid, k) = fig6_grid(5e-3);
        let m = build_transition_matrix(&grid, &k).unwrap();
        let direct = stationary_state(&grid, &m, StationaryBackend::Direct).unwrap();
        let power = stationary_state(&grid, &m, StationaryBackend::PowerIteration { max_iterations: 200_000 }).unwrap();
        assert!(direct.sup_distance(&power) < 1e-9 * direct.boundary_value());
        let starved = stationary_state(&grid, &m, StationaryBackend::PowerIteration { max_iterations: 100 });
        assert!(matches!(starved, Err(Error::Numerical { .. })));
    }

    #[test]
    fn unbiased_stationary_state_is_flat() {
        let grid = Grid::new(1.0, 2.0, 0.01).unwrap();
        let m = build_transition_matrix(&grid, &SchemeCoeffs::new(0.5, 0.0, 0.5).unwrap()).unwrap();
        let u = stationary_state(&grid, &m, StationaryBackend::Direct).unwrap();
        assert!(u.sup_distance(&Field::uniform(grid)) < 1e-13);
    }

    #[test]
    fn time_marching_reaches_stationary_state() {
        let (grid, k) = fig6_grid(5e-3);
        let m = build_transition_matrix(&grid, &k).unwrap();
        let stationary = stationary_state(&grid, &m, StationaryBackend::Direct).unwrap();
        let tau = timescales(15.0, 1.25, 2.0).unwrap().tau;
        let steps = (5.0 * tau / 1e-5).round() as u64;
        let run = evolve(&Field::delta_at(grid, 0.0).unwrap(), &k, steps, BoundaryRule::MassConserving).unwrap();
        assert!(run.field.sup_distance(&stationary) < 1e-8);
        assert_eq!(run.field.step(), steps);
    }

    #[test]
    fn zero_steps_is_identity() {
        let (grid, k) = fig6_grid(5e-3);
        let u0 = Field::delta_at(grid, 0.0).unwrap();
        let run = evolve(&u0, &k, 0, BoundaryRule::MassConserving).unwrap();
        assert_eq!(run.field, u0);
        assert_eq!(run.max_mass_drift, 0.0);
    }

    #[test]
    fn fields_stay_nonnegative_and_conserve_mass() {
        let (grid, k) = fig6_grid(5e-3);
        let run = evolve(&Field::delta_at(grid, 0.0).unwrap(), &k, 20_000, BoundaryRule::MassConserving).unwrap();
        assert!(run.field.values().iter().all(|&u| u >= 0.0));
        assert!(run.max_mass_drift < 1e-12);
    }

    /// Pure diffusion on a grid wide enough that nothing reaches the ends.
    /// Each step moves mass by one node, so the field lives on alternating
    /// nodes; compare cell-pair averages with the similarity solution.
    #[test]
    fn diffusion_matches_gaussian() {
        for dx in [1e-2, 5e-3] {
            let dt = dx * dx / 2.5; // k = 1.25
            let grid = Grid::new(4.0, 4.0, dx).unwrap();
            let k = SchemeCoeffs::new(0.5, 0.0, 0.5).unwrap();
            let steps = (0.03 / dt).round() as u64;
            let t = steps as f64 * dt;
            let run = evolve(&Field::delta_at(grid, 0.0).unwrap(), &k, steps, BoundaryRule::MassConserving).unwrap();
            let u = run.field.values();
            let mut worst: f64 = 0.0;
            for j in 1..u.len() - 1 {
                let smoothed = 0.25 * u[j - 1] + 0.5 * u[j] + 0.25 * u[j + 1];
                worst = worst.max((smoothed - gaussian_solution(grid.x(j), t, 1.25).unwrap()).abs());
            }
            assert!(worst < 2.0 * dx, "dx={dx} worst={worst}");
        }
    }

    #[test]
    fn boundary_value_converges_at_first_order() {
        let errors: Vec<f64> = [5e-3, 2.5e-3, 1.25e-3, 6.25e-4]
            .iter()
            .map(|&dx| {
                let (grid, k) = fig6_grid(dx);
                let m = build_transition_matrix(&grid, &k).unwrap();
                60.0 - stationary_state(&grid, &m, StationaryBackend::Direct).unwrap().boundary_value()
            })
            .collect();
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!((order - 1.0).abs() < 0.1, "order {order}");
        }
    }

    /// The two boundary closures agree to first order in Delta.
    #[test]
    fn boundary_variants_differ_at_second_order() {
        let mut scaled = Vec::new();
        for delta in [0.04, 0.02, 0.01, 0.005] {
            let grid = Grid::new(1.0, 1.0, 0.01).unwrap();
            let k = SchemeCoeffs::new(0.5 + delta, 0.0, 0.5 - delta).unwrap();
            let m = build_transition_matrix(&grid, &k).unwrap();
            let u = stationary_state(&grid, &m, StationaryBackend::Direct).unwrap();
            let n = grid.intervals();
            let conserving = u.values()[n] / u.values()[n - 1];
            let flux = 1.0 / (1.0 - 4.0 * delta);
            scaled.push((flux - conserving) / (delta * delta));
        }
        assert!(scaled.iter().all(|s| s.abs() > 1.0 && s.abs() < 20.0), "{scaled:?}");
        let run = evolve(
            &Field::delta_at(Grid::new(0.5, 0.5, 0.01).unwrap(), 0.0).unwrap(),
            &SchemeCoeffs::new(0.52, 0.0, 0.48).unwrap(),
            5000,
            BoundaryRule::ContinuousFlux,
        )
        .unwrap();
        let n = run.field.grid().intervals();
        let v = run.field.values();
        assert!((v[n] * (1.0 - 0.08) - v[n - 1]).abs() < 1e-12 * v[n]);
    }
}
