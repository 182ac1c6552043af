//! Newton solvers for p/q periodic orbits.
//!
//! Two formulations share the same residual `(_qR, _qS)`:
//!
//! * fixed drift: unknowns `(x_0, y_0)`, Jacobian = monodromy − I;
//! * implicit drift: `x_0` is given and the unknowns are `(δ, y_0)`, which
//!   defines `δ = Δ(x_0, ε)` and `y_0 = Y(x_0, ε)`. At `ε = 0` the Jacobian
//!   is `[[-q(q+1)/2, q], [-q, 0]]` with determinant `q²`.
//!
//! Both use damped Newton: the step is halved while the residual norm does
//! not decrease.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cylmap::{
    self, det, iterate, remainder_jet, remainders, MapError, MapParams, PhaseState, RemainderPair,
};
use crate::exec::{self, Execution};

/// Residual tolerance for a converged orbit.
pub const NEWTON_TOL: f64 = 1e-12;
/// Band around `|trace| = 2` classified as parabolic.
pub const CLASSIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub singular_det: f64,
    /// A continuation step is accepted only if Newton converges within this
    /// many iterations from the previous point's solution.
    pub safeguard_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol: NEWTON_TOL,
            max_iter: 50,
            max_halvings: 20,
            singular_det: 1e-14,
            safeguard_iter: 12,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("no periodic orbit found after {iterations} iterations (residual {residual:.3e})")]
    NotFound { iterations: usize, residual: f64 },
    #[error("singular Jacobian at ({x:.6}, {y:.6}), det = {det:.3e}; close to a saddle-node")]
    SingularJacobian { x: f64, y: f64, det: f64 },
    #[error("continuation failed at x0 = {x0:.6} for eps = {eps}")]
    ContinuationFailed { x0: f64, eps: f64 },
    #[error("grid of {grid} points is too coarse; need at least {min}")]
    GridTooCoarse { grid: usize, min: usize },
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitKind {
    Center,
    Saddle,
    Parabolic,
}

pub fn classify_trace(t: f64) -> OrbitKind {
    if t.abs() < 2.0 - CLASSIFY_TOL {
        OrbitKind::Center
    } else if t.abs() > 2.0 + CLASSIFY_TOL {
        OrbitKind::Saddle
    } else {
        OrbitKind::Parabolic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// The `q` points of one period, on the lift.
    pub states: Vec<PhaseState>,
    pub params: MapParams,
    pub residual: RemainderPair,
    /// Trace of the q-step monodromy matrix.
    pub trace: f64,
    pub kind: OrbitKind,
}

impl PeriodicOrbit {
    fn from_start(start: PhaseState, params: &MapParams, residual: RemainderPair) -> Self {
        let q = params.q as usize;
        let mut states = iterate(start, params, q);
        states.truncate(q);
        let trace = cylmap::trace(&cylmap::monodromy(start, params, q));
        PeriodicOrbit {
            states,
            params: params.clone(),
            residual,
            trace,
            kind: classify_trace(trace),
        }
    }

    /// Whether `(x, y)` lies on this orbit (x compared modulo 2π).
    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        self.states
            .iter()
            .any(|s| circle_dist(s.x, x) < tol && (s.y - y).abs() < tol)
    }

    /// Same orbit, possibly listed from a different starting point.
    pub fn same_orbit(&self, other: &PeriodicOrbit, tol: f64) -> bool {
        let s = other.states[0];
        self.contains(s.x, s.y, tol)
    }
}

/// Distance between two angles on the circle.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

pub fn classify(orbit: &PeriodicOrbit) -> OrbitKind {
    let q = orbit.params.q as usize;
    let t = cylmap::trace(&cylmap::monodromy(orbit.states[0], &orbit.params, q));
    classify_trace(t)
}

fn solve2(j: &[[f64; 2]; 2], rhs: [f64; 2]) -> Option<[f64; 2]> {
    let d = det(j);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([
        (rhs[0] * j[1][1] - rhs[1] * j[0][1]) / d,
        (j[0][0] * rhs[1] - j[1][0] * rhs[0]) / d,
    ])
}

fn norm(r: &RemainderPair) -> f64 {
    r.r.hypot(r.s)
}

/// Damped Newton on `F(x_0, y_0) = (x_q − x_0 − 2πp, y_q − y_0)`.
pub fn solve_orbit_fixed_delta(
    guess: PhaseState,
    m: &MapParams,
    settings: &NewtonSettings,
) -> Result<PeriodicOrbit, OrbitError> {
    let q = m.q as usize;
    let mut z = guess;
    let mut res = remainders(z, m, q);
    for it in 0..=settings.max_iter {
        if res.max_abs() < settings.tol {
            return Ok(PeriodicOrbit::from_start(z, m, res));
        }
        if it == settings.max_iter {
            break;
        }
        let jet = remainder_jet(z, m, q);
        let d = det(&jet.d_state);
        if d.abs() < settings.singular_det {
            return Err(OrbitError::SingularJacobian {
                x: z.x,
                y: z.y,
                det: d,
            });
        }
        let dz = solve2(&jet.d_state, [-res.r, -res.s]).ok_or(OrbitError::SingularJacobian {
            x: z.x,
            y: z.y,
            det: d,
        })?;
        let (next, next_res) = damped(res, settings, |t| {
            let s = PhaseState::new(z.x + t * dz[0], z.y + t * dz[1]);
            (s, remainders(s, m, q))
        })
        .ok_or(OrbitError::NotFound {
            iterations: it + 1,
            residual: res.max_abs(),
        })?;
        if !next.x.is_finite() || next.y.abs() > 1e3 {
            break;
        }
        z = next;
        res = next_res;
    }
    Err(OrbitError::NotFound {
        iterations: settings.max_iter,
        residual: res.max_abs(),
    })
}

/// Backtracking on the step length `t ∈ {1, ½, ¼, ...}`.
fn damped<S>(
    res: RemainderPair,
    settings: &NewtonSettings,
    eval: impl Fn(f64) -> (S, RemainderPair),
) -> Option<(S, RemainderPair)> {
    let base = norm(&res);
    let mut t = 1.0;
    for _ in 0..=settings.max_halvings {
        let (s, r) = eval(t);
        let n = norm(&r);
        if n.is_finite() && n < base {
            return Some((s, r));
        }
        t *= 0.5;
    }
    None
}

/// Solution of the implicit problem at one `x_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplicitSolution {
    pub x0: f64,
    pub eps: f64,
    /// `Δ(x_0, ε)`
    pub delta: f64,
    /// `Y(x_0, ε)`
    pub y0: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl ImplicitSolution {
    pub fn seed(&self) -> (f64, f64) {
        (self.delta, self.y0)
    }
}

/// Newton in `(δ, y_0)` on `(_qR, _qS)(x_0, y_0, ε, δ) = 0`.
///
/// The `eps` argument overrides `m.eps`; `m.delta` is ignored.
pub fn solve_delta_y(
    x0: f64,
    eps: f64,
    m: &MapParams,
    seed: Option<(f64, f64)>,
    settings: &NewtonSettings,
) -> ImplicitSolution {
    let q = m.q as usize;
    let mut mm = m.with_eps(eps);
    let (mut delta, mut y0) = seed.unwrap_or((0.0, 0.0));
    mm.delta = delta;
    let mut res = remainders(PhaseState::new(x0, y0), &mm, q);
    let mut out = ImplicitSolution {
        x0,
        eps,
        delta,
        y0,
        converged: false,
        iterations: 0,
        residual: res.max_abs(),
    };
    for it in 0..=settings.max_iter {
        out.iterations = it;
        if res.max_abs() < settings.tol {
            out.converged = true;
            break;
        }
        if it == settings.max_iter {
            break;
        }
        mm.delta = delta;
        let jet = remainder_jet(PhaseState::new(x0, y0), &mm, q);
        // columns: (δ, y_0)
        let j = [
            [jet.d_delta[0], jet.d_state[0][1]],
            [jet.d_delta[1], jet.d_state[1][1]],
        ];
        let Some(dz) = solve2(&j, [-res.r, -res.s]) else {
            break;
        };
        let step = damped(res, settings, |t| {
            let (d, y) = (delta + t * dz[0], y0 + t * dz[1]);
            let trial = mm.with_delta(d);
            ((d, y), remainders(PhaseState::new(x0, y), &trial, q))
        });
        let Some(((d, y), r)) = step else {
            break;
        };
        delta = d;
        y0 = y;
        res = r;
    }
    out.delta = delta;
    out.y0 = y0;
    out.residual = res.max_abs();
    out
}

/// Reach `eps` (either sign) from the unperturbed solution `(0, 0)` by
/// stepping in `ε`.
pub fn solve_delta_y_homotopy(
    x0: f64,
    eps: f64,
    m: &MapParams,
    settings: &NewtonSettings,
) -> ImplicitSolution {
    let dir = eps.signum();
    let span = eps.abs();
    let mut current = 0.0;
    let mut seed = (0.0, 0.0);
    let mut h = span.min(0.05);
    let mut last = ImplicitSolution {
        x0,
        eps: 0.0,
        delta: 0.0,
        y0: 0.0,
        converged: true,
        iterations: 0,
        residual: 0.0,
    };
    if eps == 0.0 {
        return last;
    }
    while current < span {
        let target = (current + h).min(span);
        let sol = solve_delta_y(x0, dir * target, m, Some(seed), settings);
        if sol.converged && sol.iterations <= settings.safeguard_iter {
            current = target;
            seed = sol.seed();
            last = sol;
            h *= 1.5;
        } else {
            h *= 0.5;
            if h < 1e-9 * span {
                return ImplicitSolution {
                    converged: false,
                    ..sol
                };
            }
        }
    }
    last
}

fn grid_points(grid_size: usize) -> Vec<f64> {
    (0..grid_size)
        .map(|j| TAU * j as f64 / grid_size as f64)
        .collect()
}

fn check_grid(m: &MapParams, grid_size: usize) -> Result<(), OrbitError> {
    let min = 8 * m.q as usize;
    if grid_size < min {
        return Err(OrbitError::GridTooCoarse {
            grid: grid_size,
            min,
        });
    }
    Ok(())
}

/// Advance the continuation from `prev` to `x1`, subdividing the step when
/// the seeded solve is rejected by the safeguard.
fn continue_to(
    prev: &ImplicitSolution,
    x1: f64,
    m: &MapParams,
    settings: &NewtonSettings,
    depth: usize,
) -> Option<ImplicitSolution> {
    let sol = solve_delta_y(x1, prev.eps, m, Some(prev.seed()), settings);
    if sol.converged && sol.iterations <= settings.safeguard_iter {
        return Some(sol);
    }
    if depth == 0 {
        return None;
    }
    let mid = 0.5 * (prev.x0 + x1);
    let half = continue_to(prev, mid, m, settings, depth - 1)?;
    continue_to(&half, x1, m, settings, depth - 1)
}

/// Sweep `x_0` over `[0, 2π)`, seeding each point from the previous one.
pub fn continue_in_x(
    eps: f64,
    m: &MapParams,
    grid_size: usize,
    settings: &NewtonSettings,
) -> Result<Vec<ImplicitSolution>, OrbitError> {
    continue_in_x_seeded(eps, m, grid_size, None, settings)
}

/// As [`continue_in_x`], with an optional seed for the first grid point
/// (used when sweeping in `ε`). Without a seed the first point is reached
/// by homotopy from `ε = 0`.
pub fn continue_in_x_seeded(
    eps: f64,
    m: &MapParams,
    grid_size: usize,
    first_seed: Option<(f64, f64)>,
    settings: &NewtonSettings,
) -> Result<Vec<ImplicitSolution>, OrbitError> {
    check_grid(m, grid_size)?;
    let xs = grid_points(grid_size);
    let mut first = match first_seed {
        Some(seed) => solve_delta_y(xs[0], eps, m, Some(seed), settings),
        None => solve_delta_y_homotopy(xs[0], eps, m, settings),
    };
    if !first.converged && first_seed.is_some() {
        first = solve_delta_y_homotopy(xs[0], eps, m, settings);
    }
    if !first.converged {
        return Err(OrbitError::ContinuationFailed { x0: xs[0], eps });
    }
    let mut out = Vec::with_capacity(grid_size);
    out.push(first);
    for &x in &xs[1..] {
        let prev = out.last().expect("non-empty");
        let next = continue_to(prev, x, m, settings, 8)
            .ok_or(OrbitError::ContinuationFailed { x0: x, eps })?;
        out.push(next);
    }
    Ok(out)
}

/// Every grid point solved on its own by homotopy from `ε = 0`; the points
/// are independent and may run in parallel.
pub fn continue_in_x_independent(
    eps: f64,
    m: &MapParams,
    grid_size: usize,
    settings: &NewtonSettings,
    exec: Execution,
) -> Result<Vec<ImplicitSolution>, OrbitError> {
    check_grid(m, grid_size)?;
    let xs = grid_points(grid_size);
    let sols = exec::map(exec, &xs, |&x| solve_delta_y_homotopy(x, eps, m, settings));
    match sols.iter().find(|s| !s.converged) {
        Some(bad) => Err(OrbitError::ContinuationFailed { x0: bad.x0, eps }),
        None => Ok(sols),
    }
}

/// The periodic orbit through `(x_0, Y)` at drift `Δ`.
pub fn orbit_from_solution(sol: &ImplicitSolution, m: &MapParams) -> PeriodicOrbit {
    let mm = m.with_eps(sol.eps).with_delta(sol.delta);
    let start = PhaseState::new(sol.x0, sol.y0);
    let res = remainders(start, &mm, mm.q as usize);
    PeriodicOrbit::from_start(start, &mm, res)
}

/// Starting guesses on an `n_x × ys` grid.
pub fn guess_grid(n_x: usize, ys: &[f64]) -> Vec<PhaseState> {
    let mut out = Vec::with_capacity(n_x * ys.len());
    for &y in ys {
        for x in grid_points(n_x) {
            out.push(PhaseState::new(x, y));
        }
    }
    out
}

/// Fixed-drift multistart: every guess is tried, converged orbits are
/// deduplicated up to the choice of starting point (tolerance 1e-6).
pub fn find_orbits(
    m: &MapParams,
    guesses: &[PhaseState],
    settings: &NewtonSettings,
    exec: Execution,
) -> Vec<PeriodicOrbit> {
    let found = exec::map(exec, guesses, |g| {
        solve_orbit_fixed_delta(*g, m, settings).ok()
    });
    let mut unique: Vec<PeriodicOrbit> = Vec::new();
    for orbit in found.into_iter().flatten() {
        if !unique.iter().any(|u| u.same_orbit(&orbit, 1e-6)) {
            unique.push(orbit);
        }
    }
    unique
}
