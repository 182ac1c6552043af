//! Damped, torqued sine-Gordon chain with a twisted boundary:
//!
//! `ẍ_k + γ ẋ_k + ε sin x_k = x_{k+1} − 2x_k + x_{k−1} + δ`,
//! `x_{k+q} = x_k + 2πp`.
//!
//! Equilibria satisfy `x_{k+1} − 2x_k + x_{k−1} = ε sin x_k − δ`, which is the
//! p/q orbit equation of the map with `f = −sin` at the same `ε` and `δ`
//! ([`ChainParams::equivalent_map`]). Past the critical torque the chain
//! depins and settles into a traveling wave `x_{k+1}(t) = x_k(t + τ)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cylmap::{MapError, MapParams};
use crate::fmt::number;
use crate::trigpoly::TrigPoly;

/// Positions beyond this magnitude count as a blow-up.
pub const BLOWUP: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("invalid chain parameters: {0}")]
    InvalidParams(&'static str),
    #[error("integration blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("the chain is not pinned at delta = {delta}; no lower bracket")]
    NotPinned { delta: f64 },
    #[error("the chain stays pinned up to delta = {delta:e}; no upper bracket")]
    NoUpperBracket { delta: f64 },
    #[error("neither pinned nor sliding after the horizon at delta = {delta:e}")]
    Undecided { delta: f64 },
    #[error("state has {got} sites, expected {expected}")]
    WrongSize { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub q: usize,
    pub p: i64,
    pub gamma: f64,
    pub eps: f64,
    pub delta: f64,
}

impl ChainParams {
    pub fn new(q: usize, p: i64, gamma: f64, eps: f64, delta: f64) -> Result<Self, ChainError> {
        if q == 0 {
            return Err(ChainError::InvalidParams("q must be positive"));
        }
        if !(gamma.is_finite() && eps.is_finite() && delta.is_finite()) {
            return Err(ChainError::InvalidParams("parameters must be finite"));
        }
        if gamma < 0.0 {
            return Err(ChainError::InvalidParams("gamma must be non-negative"));
        }
        Ok(ChainParams {
            q,
            p,
            gamma,
            eps,
            delta,
        })
    }

    pub fn with_delta(&self, delta: f64) -> ChainParams {
        ChainParams { delta, ..*self }
    }

    /// Jump across the boundary: `x_{k+q} − x_k`.
    pub fn twist(&self) -> f64 {
        TAU * self.p as f64
    }

    /// The map whose p/q orbits are this chain's equilibria.
    pub fn equivalent_map(&self) -> Result<MapParams, MapError> {
        MapParams::new(
            TrigPoly::sin_k(1, -1.0),
            self.p,
            self.q as u32,
            self.eps,
            self.delta,
        )
    }

    /// Static force on site `k`, i.e. the acceleration at zero velocity.
    fn force(&self, pos: &[f64], k: usize) -> f64 {
        let q = self.q;
        let tw = self.twist();
        let next = if k + 1 == q { pos[0] + tw } else { pos[k + 1] };
        let prev = if k == 0 { pos[q - 1] - tw } else { pos[k - 1] };
        next - 2.0 * pos[k] + prev - self.eps * pos[k].sin() + self.delta
    }
}

/// Step size used when none is given.
pub fn default_dt(eps: f64) -> f64 {
    0.5 * 0.1 / (eps.abs() + 4.0).max(1.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub t: f64,
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
}

impl ChainState {
    /// Evenly twisted rest state `x_k = 2πpk/q + phase`.
    pub fn flat(params: &ChainParams, phase: f64) -> Self {
        let q = params.q;
        ChainState {
            t: 0.0,
            pos: (0..q)
                .map(|k| phase + params.twist() * k as f64 / q as f64)
                .collect(),
            vel: vec![0.0; q],
        }
    }

    pub fn mean_position(&self) -> f64 {
        self.pos.iter().sum::<f64>() / self.pos.len() as f64
    }

    pub fn max_speed(&self) -> f64 {
        self.vel.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn csv_header(q: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((0..q).map(|k| format!("x_{k}")));
        cols.extend((0..q).map(|k| format!("v_{k}")));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut s = number(self.t);
        for &v in self.pos.iter().chain(&self.vel) {
            s.push(',');
            s.push_str(&number(v));
        }
        s
    }
}

/// Largest static force, zero exactly at equilibria.
pub fn max_force(params: &ChainParams, state: &ChainState) -> f64 {
    (0..params.q).fold(0.0, |m, k| m.max(params.force(&state.pos, k).abs()))
}

/// Energy `Σ ½v² + ½(x_{k+1} − x_k)² − ε cos x_k − δ x_k`; with `γ = 0` it
/// is conserved.
pub fn energy(params: &ChainParams, state: &ChainState) -> f64 {
    let q = params.q;
    let mut e = 0.0;
    for k in 0..q {
        let x = state.pos[k];
        let next = if k + 1 == q {
            state.pos[0] + params.twist()
        } else {
            state.pos[k + 1]
        };
        e += 0.5 * state.vel[k] * state.vel[k] + 0.5 * (next - x) * (next - x)
            - params.eps * x.cos()
            - params.delta * x;
    }
    e
}

fn accel(params: &ChainParams, pos: &[f64], vel: &[f64], out: &mut [f64]) {
    for k in 0..params.q {
        out[k] = params.force(pos, k) - params.gamma * vel[k];
    }
}

/// Scratch space for [`rk4_step`].
#[derive(Debug, Clone)]
pub struct Rk4Work {
    k: [Vec<f64>; 8],
    xp: Vec<f64>,
    vp: Vec<f64>,
}

impl Rk4Work {
    pub fn new(q: usize) -> Self {
        Rk4Work {
            k: std::array::from_fn(|_| vec![0.0; q]),
            xp: vec![0.0; q],
            vp: vec![0.0; q],
        }
    }
}

/// One classical Runge–Kutta step of size `dt`.
pub fn rk4_step(params: &ChainParams, s: &mut ChainState, dt: f64, w: &mut Rk4Work) {
    let q = params.q;
    let [kx1, kv1, kx2, kv2, kx3, kv3, kx4, kv4] = &mut w.k;
    kx1.copy_from_slice(&s.vel);
    accel(params, &s.pos, &s.vel, kv1);
    for i in 0..q {
        w.xp[i] = s.pos[i] + 0.5 * dt * kx1[i];
        w.vp[i] = s.vel[i] + 0.5 * dt * kv1[i];
    }
    kx2.copy_from_slice(&w.vp);
    accel(params, &w.xp, &w.vp, kv2);
    for i in 0..q {
        w.xp[i] = s.pos[i] + 0.5 * dt * kx2[i];
        w.vp[i] = s.vel[i] + 0.5 * dt * kv2[i];
    }
    kx3.copy_from_slice(&w.vp);
    accel(params, &w.xp, &w.vp, kv3);
    for i in 0..q {
        w.xp[i] = s.pos[i] + dt * kx3[i];
        w.vp[i] = s.vel[i] + dt * kv3[i];
    }
    kx4.copy_from_slice(&w.vp);
    accel(params, &w.xp, &w.vp, kv4);
    for i in 0..q {
        s.pos[i] += dt / 6.0 * (kx1[i] + 2.0 * kx2[i] + 2.0 * kx3[i] + kx4[i]);
        s.vel[i] += dt / 6.0 * (kv1[i] + 2.0 * kv2[i] + 2.0 * kv3[i] + kv4[i]);
    }
    s.t += dt;
}

fn check_state(params: &ChainParams, s: &ChainState) -> Result<(), ChainError> {
    if s.pos.len() != params.q || s.vel.len() != params.q {
        return Err(ChainError::WrongSize {
            got: s.pos.len().min(s.vel.len()),
            expected: params.q,
        });
    }
    Ok(())
}

fn blown_up(s: &ChainState) -> bool {
    s.pos
        .iter()
        .chain(&s.vel)
        .any(|v| !v.is_finite() || v.abs() > BLOWUP)
}

/// Integrate for `duration`, keeping every `sample_every`-th state
/// (`0` keeps none). The returned samples include the start.
pub fn integrate(
    params: &ChainParams,
    init: &ChainState,
    dt: f64,
    duration: f64,
    sample_every: usize,
) -> Result<(ChainState, Vec<ChainState>), ChainError> {
    check_state(params, init)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ChainError::InvalidParams("dt must be positive"));
    }
    let steps = (duration / dt).round().max(0.0) as usize;
    let mut s = init.clone();
    let mut w = Rk4Work::new(params.q);
    let mut samples = Vec::new();
    if let Some(n) = steps.checked_div(sample_every) {
        samples.reserve(n + 1);
        samples.push(s.clone());
    }
    for i in 1..=steps {
        rk4_step(params, &mut s, dt, &mut w);
        if blown_up(&s) {
            return Err(ChainError::BlowUp { t: s.t });
        }
        if sample_every > 0 && i % sample_every == 0 {
            samples.push(s.clone());
        }
    }
    Ok((s, samples))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub dt: f64,
    /// Total integration time.
    pub horizon: f64,
    /// Fraction of the horizon kept for analysis.
    pub window: f64,
    /// Cap on stored samples; the stride grows to respect it.
    pub max_samples: usize,
    /// Equilibrium when every speed and static force is below these.
    pub speed_tol: f64,
    pub force_tol: f64,
    /// Delay-relation error under which the motion counts as a wave.
    pub wave_tol: f64,
}

impl ChainOptions {
    pub fn for_params(params: &ChainParams) -> Self {
        ChainOptions {
            dt: default_dt(params.eps),
            horizon: 1e5,
            window: 0.25,
            max_samples: 200_000,
            speed_tol: 1e-8,
            force_tol: 1e-10,
            wave_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorKind {
    Equilibrium,
    TravelingWave,
    Unclassified,
}

/// What the chain settles into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub kind: AttractorKind,
    pub mean_velocity: f64,
    /// Time after which every site has advanced by `2πp` (by one turn when
    /// `p = 0`).
    #[serde(rename = "T")]
    pub period: Option<f64>,
    /// Site-to-site delay `τ` with `x_{k+1}(t) = x_k(t + τ)`.
    pub tau: Option<f64>,
    /// `max |x_{k+1}(t) − x_k(t + τ)|` over the analysis window.
    pub delay_error: Option<f64>,
    /// `max |x_k(t + T) − x_k(t) − 2πp|` over the analysis window.
    pub period_error: Option<f64>,
    pub critical_delta: Option<f64>,
}

/// Densely sampled trajectory with cubic Hermite interpolation, using the
/// stored velocities as slopes.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<ChainState>,
    h: f64,
    twist: f64,
}

impl Trajectory {
    pub fn new(samples: Vec<ChainState>, twist: f64) -> Option<Self> {
        if samples.len() < 2 {
            return None;
        }
        let h = samples[1].t - samples[0].t;
        Some(Trajectory { samples, h, twist })
    }

    pub fn samples(&self) -> &[ChainState] {
        &self.samples
    }

    pub fn t_start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Position of site `k`, any integer `k` (through the twist).
    pub fn position(&self, k: i64, t: f64) -> f64 {
        let q = self.samples[0].pos.len() as i64;
        let wraps = k.div_euclid(q);
        let site = k.rem_euclid(q) as usize;
        let u = ((t - self.t_start()) / self.h).clamp(0.0, (self.samples.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.samples.len() - 2);
        let s = u - i as f64;
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let (x0, x1) = (a.pos[site], b.pos[site]);
        let (m0, m1) = (a.vel[site] * self.h, b.vel[site] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let x = (2.0 * s3 - 3.0 * s2 + 1.0) * x0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * x1
            + (s3 - s2) * m1;
        x + wraps as f64 * self.twist
    }

    fn mean_position(&self, t: f64) -> f64 {
        let q = self.samples[0].pos.len();
        (0..q as i64).map(|k| self.position(k, t)).sum::<f64>() / q as f64
    }

    /// First times the mean position passes `start + j·step` (moving in the
    /// direction of `step`), refined by bisection on the interpolant.
    pub fn level_passages(&self, step: f64) -> Vec<f64> {
        let dir = step.signum();
        let xbar = |i: usize| self.samples[i].mean_position();
        let mut level = xbar(0) + step;
        let mut out = Vec::new();
        for i in 1..self.samples.len() {
            while dir * (xbar(i) - level) >= 0.0 {
                let (mut lo, mut hi) = (self.samples[i - 1].t, self.samples[i].t);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if dir * (self.mean_position(mid) - level) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
                level += step;
            }
        }
        out
    }
}

/// Delay relation residual `max |x_{k+1}(t) − x_k(t + τ)|`; `None` when the
/// window is shorter than `|τ|`.
pub fn delay_error(traj: &Trajectory, tau: f64) -> Option<f64> {
    let q = traj.samples[0].pos.len() as i64;
    let (t0, t1) = (
        traj.t_start() + tau.min(0.0).abs(),
        traj.t_end() - tau.max(0.0),
    );
    let mut err: Option<f64> = None;
    for s in traj.samples.iter().filter(|s| s.t >= t0 && s.t <= t1) {
        for k in 0..q {
            let lhs = traj.position(k + 1, s.t);
            let rhs = traj.position(k, s.t + tau);
            err = Some(err.unwrap_or(0.0).max((lhs - rhs).abs()));
        }
    }
    err
}

/// Period residual `max |x_k(t + T) − x_k(t) − advance|`; `None` when the
/// window is shorter than `|T|`.
pub fn period_error(traj: &Trajectory, period: f64, advance: f64) -> Option<f64> {
    let q = traj.samples[0].pos.len() as i64;
    let (t0, t1) = (
        traj.t_start() + period.min(0.0).abs(),
        traj.t_end() - period.max(0.0),
    );
    let mut err: Option<f64> = None;
    for s in traj.samples.iter().filter(|s| s.t >= t0 && s.t <= t1) {
        for k in 0..q {
            let moved = traj.position(k, s.t + period) - traj.position(k, s.t);
            err = Some(err.unwrap_or(0.0).max((moved - advance).abs()));
        }
    }
    err
}

/// Integrate past the transient, then analyse the recorded window.
pub fn classify_attractor(
    params: &ChainParams,
    init: &ChainState,
    opts: &ChainOptions,
) -> Result<(ChainReport, Trajectory), ChainError> {
    let window = (opts.horizon * opts.window.clamp(0.0, 1.0)).max(opts.dt * 2.0);
    let (settled, _) = integrate(params, init, opts.dt, opts.horizon - window, 0)?;
    let steps = (window / opts.dt).round().max(1.0) as usize;
    let stride = steps.div_ceil(opts.max_samples.max(2)).max(1);
    let (end, samples) = integrate(params, &settled, opts.dt, window, stride)?;
    let traj = Trajectory::new(samples, params.twist())
        .ok_or(ChainError::InvalidParams("window shorter than two samples"))?;

    let unclassified = |v: f64| ChainReport {
        kind: AttractorKind::Unclassified,
        mean_velocity: v,
        period: None,
        tau: None,
        delay_error: None,
        period_error: None,
        critical_delta: None,
    };
    if end.max_speed() < opts.speed_tol && max_force(params, &end) < opts.force_tol {
        let mut r = unclassified(0.0);
        r.kind = AttractorKind::Equilibrium;
        return Ok((r, traj));
    }
    let span = traj.t_end() - traj.t_start();
    let drift = (end.mean_position() - settled.mean_position()) / span;
    let q = params.q as f64;
    // the mean position gains 2πp/q per delay; with p = 0 the sites move
    // in lockstep and the level step is a full turn
    let level = if params.p == 0 {
        TAU
    } else {
        TAU * params.p.unsigned_abs() as f64 / q
    };
    let passages = traj.level_passages(level * drift.signum());
    if drift == 0.0 || passages.len() < 3 {
        return Ok((unclassified(drift), traj));
    }
    let gap = (passages[passages.len() - 1] - passages[0]) / (passages.len() - 1) as f64;
    let (tau, period) = if params.p == 0 {
        (0.0, gap)
    } else {
        let tau = gap * (drift.signum() * params.p.signum() as f64);
        (tau, q * tau)
    };
    let derr = delay_error(&traj, tau);
    let advance = if params.p == 0 {
        TAU * drift.signum()
    } else {
        params.twist()
    };
    let perr = period_error(&traj, period, advance);
    let mean_velocity = if params.p == 0 {
        TAU * drift.signum() / gap
    } else {
        params.twist() / period
    };
    let kind = if derr.is_some_and(|e| e < opts.wave_tol) && perr.is_some_and(|e| e < opts.wave_tol)
    {
        AttractorKind::TravelingWave
    } else {
        AttractorKind::Unclassified
    };
    Ok((
        ChainReport {
            kind,
            mean_velocity,
            period: Some(period),
            tau: Some(tau),
            delay_error: derr,
            period_error: perr,
            critical_delta: None,
        },
        traj,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relaxation {
    Pinned,
    Sliding,
}

/// Integrate from `init` until the chain comes to rest or has slid by half a
/// turn on average.
pub fn relax(
    params: &ChainParams,
    init: &ChainState,
    opts: &ChainOptions,
) -> Result<(Relaxation, ChainState), ChainError> {
    check_state(params, init)?;
    let chunk = ((1.0 / opts.dt).round() as usize).max(1);
    let start = init.mean_position();
    let mut s = init.clone();
    let mut w = Rk4Work::new(params.q);
    let mut steps = 0usize;
    let max_steps = (opts.horizon / opts.dt).round() as usize;
    while steps < max_steps {
        for _ in 0..chunk {
            rk4_step(params, &mut s, opts.dt, &mut w);
        }
        steps += chunk;
        if blown_up(&s) {
            return Err(ChainError::BlowUp { t: s.t });
        }
        if (s.mean_position() - start).abs() > PI {
            return Ok((Relaxation::Sliding, s));
        }
        if s.max_speed() < opts.speed_tol && max_force(params, &s) < opts.force_tol {
            return Ok((Relaxation::Pinned, s));
        }
    }
    Err(ChainError::Undecided {
        delta: params.delta,
    })
}

/// Result of the quasi-static torque ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalTorque {
    pub delta: f64,
    /// Largest torque seen pinned and smallest seen sliding.
    pub lower: f64,
    pub upper: f64,
    /// Set when a trial neither came to rest nor slid within the horizon.
    /// Both sides of the saddle-node are slow, so such a torque is taken as
    /// the critical one and the search stops there.
    pub undecided_at: Option<f64>,
    /// Equilibrium at `lower`.
    pub equilibrium: ChainState,
}

/// Critical torque for positive `δ` (`params.delta` is ignored): each
/// trial starts from the equilibrium at the largest pinned torque so far,
/// and the bracket is bisected to relative width `rel_tol`.
pub fn critical_torque(
    params: &ChainParams,
    opts: &ChainOptions,
    rel_tol: f64,
) -> Result<CriticalTorque, ChainError> {
    let base = params.with_delta(0.0);
    let (state, eq) = relax(&base, &ChainState::flat(&base, 0.0), opts)?;
    if state != Relaxation::Pinned {
        return Err(ChainError::NotPinned { delta: 0.0 });
    }
    let at_rest = |s: ChainState| ChainState {
        t: 0.0,
        vel: vec![0.0; s.pos.len()],
        ..s
    };
    let mut out = CriticalTorque {
        delta: f64::NAN,
        lower: 0.0,
        upper: 1e-6,
        undecided_at: None,
        equilibrium: at_rest(eq),
    };
    let mut bracketed = false;
    while out.upper - out.lower > rel_tol * out.upper {
        let trial = if bracketed {
            0.5 * (out.lower + out.upper)
        } else {
            out.upper
        };
        match relax(&base.with_delta(trial), &out.equilibrium, opts) {
            Ok((Relaxation::Pinned, s)) => {
                out.lower = trial;
                out.equilibrium = at_rest(s);
                if !bracketed {
                    out.upper *= 2.0;
                    if out.upper > 1e3 {
                        return Err(ChainError::NoUpperBracket { delta: out.upper });
                    }
                }
            }
            Ok((Relaxation::Sliding, _)) => {
                out.upper = trial;
                bracketed = true;
            }
            Err(ChainError::Undecided { delta }) => {
                out.undecided_at = Some(delta);
                out.delta = delta;
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
    }
    out.delta = 0.5 * (out.lower + out.upper);
    Ok(out)
}
