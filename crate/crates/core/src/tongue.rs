//! Tongue geometry.
//!
//! At fixed `ε` a p/q orbit exists exactly for `δ` in the range of the
//! continuous profile `x_0 ↦ Δ(x_0, ε)`, so the tongue width is
//! `max Δ − min Δ`. The extrema are where the center/saddle pair merges.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cylmap::{MapError, MapParams, PhaseState};
use crate::exec::{self, Execution};
use crate::fmt::number;
use crate::orbits::{
    continue_in_x_seeded, find_orbits, guess_grid, orbit_from_solution, solve_delta_y,
    ImplicitSolution, NewtonSettings, OrbitError, NEWTON_TOL,
};

/// Minimum number of samples for an exponent fit.
pub const MIN_FIT_SAMPLES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TongueError {
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("eps list must be sorted ascending")]
    UnsortedEps,
    #[error("need at least {needed} samples with width > {floor:e}, got {valid}")]
    InsufficientData {
        valid: usize,
        needed: usize,
        floor: f64,
    },
    #[error("no periodic orbit at delta = {delta} (the exact case must have one)")]
    NoOrbitAtReference { delta: f64 },
    #[error("orbits persist up to |delta| = {delta:e}; no outer bracket found")]
    NoOuterBracket { delta: f64 },
}

/// Tongue cross-section at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TongueSample {
    pub eps: f64,
    pub width: f64,
    pub delta_max: f64,
    pub delta_min: f64,
    pub x_argmax: f64,
    pub x_argmin: f64,
}

impl TongueSample {
    pub const CSV_HEADER: &'static str = "eps,width,delta_max,delta_min,x_argmax,x_argmin";

    pub fn csv_row(&self) -> String {
        [
            self.eps,
            self.width,
            self.delta_max,
            self.delta_min,
            self.x_argmax,
            self.x_argmin,
        ]
        .map(number)
        .join(",")
    }
}

/// A refined extremum of the `Δ` profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileExtremum {
    pub x0: f64,
    pub delta: f64,
    pub y0: f64,
}

/// Full profile plus refined extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct TongueProfile {
    pub eps: f64,
    pub points: Vec<ImplicitSolution>,
    pub max: ProfileExtremum,
    pub min: ProfileExtremum,
}

impl TongueProfile {
    pub fn sample(&self) -> TongueSample {
        TongueSample {
            eps: self.eps,
            width: self.max.delta - self.min.delta,
            delta_max: self.max.delta,
            delta_min: self.min.delta,
            x_argmax: self.max.x0.rem_euclid(TAU),
            x_argmin: self.min.x0.rem_euclid(TAU),
        }
    }
}

/// Brent's minimizer on `[a, b]` (golden section with parabolic steps).
pub fn brent_minimize(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0_f64, 0.0_f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-15;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}

fn refine_extremum(
    points: &[ImplicitSolution],
    idx: usize,
    sign: f64,
    m: &MapParams,
    eps: f64,
    settings: &NewtonSettings,
) -> Result<ProfileExtremum, TongueError> {
    let n = points.len();
    let h = TAU / n as f64;
    let center = points[idx];
    let seed = center.seed();
    let solve = |x: f64| solve_delta_y(x, eps, m, Some(seed), settings);
    let objective = |x: f64| {
        let s = solve(x);
        if s.converged {
            -sign * s.delta
        } else {
            f64::INFINITY
        }
    };
    let (x, _) = brent_minimize(objective, center.x0 - h, center.x0 + h, 1e-10);
    let best = solve(x);
    if !best.converged {
        return Err(OrbitError::ContinuationFailed { x0: x, eps }.into());
    }
    // never report something worse than the grid itself
    let pick = if sign * best.delta >= sign * center.delta {
        best
    } else {
        center
    };
    Ok(ProfileExtremum {
        x0: pick.x0,
        delta: pick.delta,
        y0: pick.y0,
    })
}

/// `Δ` profile over a grid of `x_0` with refined extrema.
pub fn profile(
    m: &MapParams,
    eps: f64,
    grid: usize,
    first_seed: Option<(f64, f64)>,
    settings: &NewtonSettings,
) -> Result<TongueProfile, TongueError> {
    m.require_coprime()?;
    let points = continue_in_x_seeded(eps, m, grid, first_seed, settings)?;
    let by = |cmp: fn(f64, f64) -> bool| {
        (0..points.len())
            .reduce(|best, i| {
                if cmp(points[i].delta, points[best].delta) {
                    i
                } else {
                    best
                }
            })
            .expect("grid is non-empty")
    };
    let imax = by(|a, b| a > b);
    let imin = by(|a, b| a < b);
    if eps == 0.0 {
        let zero = ProfileExtremum {
            x0: 0.0,
            delta: 0.0,
            y0: 0.0,
        };
        return Ok(TongueProfile {
            eps,
            points,
            max: zero,
            min: zero,
        });
    }
    let max = refine_extremum(&points, imax, 1.0, m, eps, settings)?;
    let min = refine_extremum(&points, imin, -1.0, m, eps, settings)?;
    Ok(TongueProfile {
        eps,
        points,
        max,
        min,
    })
}

/// Tongue width at `ε`; `m.eps` and `m.delta` are ignored.
pub fn width_at(
    m: &MapParams,
    eps: f64,
    grid: usize,
    settings: &NewtonSettings,
) -> Result<TongueSample, TongueError> {
    Ok(profile(m, eps, grid, None, settings)?.sample())
}

fn check_sorted(eps_list: &[f64]) -> Result<(), TongueError> {
    if eps_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(TongueError::UnsortedEps);
    }
    Ok(())
}

/// One sample per `ε`, each continuation seeded from the previous `ε`.
/// Failures are recorded per sample and the sweep carries on.
pub fn sweep(
    m: &MapParams,
    eps_list: &[f64],
    grid: usize,
    settings: &NewtonSettings,
) -> Result<Vec<Result<TongueSample, TongueError>>, TongueError> {
    check_sorted(eps_list)?;
    let mut seed = None;
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        match profile(m, eps, grid, seed, settings) {
            Ok(prof) => {
                seed = Some(prof.points[0].seed());
                out.push(Ok(prof.sample()));
            }
            Err(e) => out.push(Err(e)),
        }
    }
    Ok(out)
}

/// Independent samples (each homotopy-seeded from `ε = 0`), scheduled by
/// `exec`.
pub fn sweep_independent(
    m: &MapParams,
    eps_list: &[f64],
    grid: usize,
    settings: &NewtonSettings,
    exec: Execution,
) -> Result<Vec<Result<TongueSample, TongueError>>, TongueError> {
    check_sorted(eps_list)?;
    Ok(exec::map(exec, eps_list, |&eps| {
        width_at(m, eps, grid, settings)
    }))
}

/// Least-squares fit of `log width = exponent·log ε + log_prefactor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    /// Largest absolute deviation in log-log space.
    pub residual: f64,
    pub eps_range: (f64, f64),
    pub samples: usize,
}

/// The fit as written to disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub exponent: f64,
    pub residual: f64,
    pub expected_r: Option<usize>,
}

/// Samples narrower than this are below solver resolution.
pub fn width_floor() -> f64 {
    1e3 * NEWTON_TOL
}

pub fn fit_exponent(samples: &[TongueSample]) -> Result<ScalingFit, TongueError> {
    let floor = width_floor();
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.eps > 0.0 && s.width > floor)
        .map(|s| (s.eps.ln(), s.width.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(TongueError::InsufficientData {
            valid: pts.len(),
            needed: MIN_FIT_SAMPLES,
            floor,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let log_prefactor = my - exponent * mx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - exponent * p.0 - log_prefactor).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0.exp()), hi.max(p.0.exp()))
        });
    Ok(ScalingFit {
        exponent,
        log_prefactor,
        residual,
        eps_range: (lo, hi),
        samples: pts.len(),
    })
}

/// Where the center/saddle pair merges at the two tongue edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleNode {
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub x_plus: f64,
    pub x_minus: f64,
    /// Monodromy traces of the merging orbit; both tend to 2.
    pub trace_plus: f64,
    pub trace_minus: f64,
}

pub fn saddle_node_locus(
    m: &MapParams,
    eps: f64,
    grid: usize,
    settings: &NewtonSettings,
) -> Result<SaddleNode, TongueError> {
    let prof = profile(m, eps, grid, None, settings)?;
    let trace_at = |e: &ProfileExtremum| {
        let sol = ImplicitSolution {
            x0: e.x0,
            eps,
            delta: e.delta,
            y0: e.y0,
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
        orbit_from_solution(&sol, m).trace
    };
    Ok(SaddleNode {
        delta_plus: prof.max.delta,
        delta_minus: prof.min.delta,
        x_plus: prof.max.x0.rem_euclid(TAU),
        x_minus: prof.min.x0.rem_euclid(TAU),
        trace_plus: trace_at(&prof.max),
        trace_minus: trace_at(&prof.min),
    })
}

/// Settings of the fixed-drift existence oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionOptions {
    pub guesses: Vec<PhaseState>,
    /// Stop when the bracket is narrower than this.
    pub tol: f64,
    pub exec: Execution,
}

impl BisectionOptions {
    pub fn for_map(m: &MapParams, tol: f64) -> Self {
        BisectionOptions {
            guesses: guess_grid(16 * m.q as usize, &[-0.05, 0.0, 0.05]),
            tol,
            exec: Execution::default(),
        }
    }
}

/// Tongue edges from orbit existence alone: multistart Newton at fixed `δ`,
/// bisected outward from `δ = 0` (where orbits always exist).
pub fn width_by_bisection(
    m: &MapParams,
    eps: f64,
    settings: &NewtonSettings,
    opts: &BisectionOptions,
) -> Result<TongueSample, TongueError> {
    m.require_coprime()?;
    let base = m.with_eps(eps);
    let exists = |delta: f64| -> bool {
        let mm = base.with_delta(delta);
        !find_orbits(&mm, &opts.guesses, settings, opts.exec).is_empty()
    };
    if !exists(0.0) {
        return Err(TongueError::NoOrbitAtReference { delta: 0.0 });
    }
    let edge = |dir: f64| -> Result<f64, TongueError> {
        let mut inside = 0.0;
        let mut outside = 1e-9;
        while exists(dir * outside) {
            inside = outside;
            outside *= 2.0;
            if outside > 1e3 {
                return Err(TongueError::NoOuterBracket { delta: outside });
            }
        }
        while outside - inside > opts.tol {
            let mid = 0.5 * (inside + outside);
            if exists(dir * mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(dir * 0.5 * (inside + outside))
    };
    let delta_max = edge(1.0)?;
    let delta_min = edge(-1.0)?;
    Ok(TongueSample {
        eps,
        width: delta_max - delta_min,
        delta_max,
        delta_min,
        x_argmax: f64::NAN,
        x_argmin: f64::NAN,
    })
}
