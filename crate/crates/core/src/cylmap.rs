//! The drifted standard map in shifted coordinates.
//!
//! With `y = v - μ` and `g(x) = -δ - ε f(x)` one step reads
//!
//! ```text
//! x' = x + y + μ + g(x)
//! y' = y + g(x)
//! ```
//!
//! Coordinates are kept on the lift (no reduction mod 2π) so the winding
//! `x_q = x_0 + 2πp` stays explicit.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trigpoly::TrigPoly;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("q must be at least 1")]
    ZeroPeriod,
    #[error("non-finite map parameter")]
    NonFinite,
    #[error("eps must be non-negative, got {0}")]
    NegativeEps(f64),
    #[error("p/q = {p}/{q} is not in lowest terms")]
    Reducible { p: i64, q: u32 },
}

/// Full specification of the drifted cylinder map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapParams {
    pub eps: f64,
    pub delta: f64,
    pub p: i64,
    pub q: u32,
    f: TrigPoly,
    f_prime: TrigPoly,
}

impl MapParams {
    pub fn new(f: TrigPoly, p: i64, q: u32, eps: f64, delta: f64) -> Result<Self, MapError> {
        if q == 0 {
            return Err(MapError::ZeroPeriod);
        }
        if !eps.is_finite() || !delta.is_finite() {
            return Err(MapError::NonFinite);
        }
        if eps < 0.0 {
            return Err(MapError::NegativeEps(eps));
        }
        let f_prime = f.derivative();
        Ok(MapParams {
            eps,
            delta,
            p,
            q,
            f,
            f_prime,
        })
    }

    pub fn f(&self) -> &TrigPoly {
        &self.f
    }

    /// Rotation angle `μ = 2πp/q`.
    pub fn mu(&self) -> f64 {
        TAU * self.p as f64 / self.q as f64
    }

    /// `2πp`, the winding required after `q` steps.
    pub fn winding(&self) -> f64 {
        TAU * self.p as f64
    }

    pub fn with_delta(&self, delta: f64) -> MapParams {
        MapParams {
            delta,
            ..self.clone()
        }
    }

    pub fn with_eps(&self, eps: f64) -> MapParams {
        MapParams {
            eps,
            ..self.clone()
        }
    }

    pub fn is_coprime(&self) -> bool {
        gcd(self.p.unsigned_abs(), self.q as u64) == 1
    }

    /// Tongue and series analyses need `p/q` in lowest terms.
    pub fn require_coprime(&self) -> Result<(), MapError> {
        if self.is_coprime() {
            Ok(())
        } else {
            Err(MapError::Reducible {
                p: self.p,
                q: self.q,
            })
        }
    }

    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        -self.delta - self.eps * self.f.eval(x)
    }

    #[inline]
    pub fn g_prime(&self, x: f64) -> f64 {
        -self.eps * self.f_prime.eval(x)
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A point `(x, y)` with `y` the shifted momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
}

impl PhaseState {
    pub fn new(x: f64, y: f64) -> Self {
        PhaseState { x, y }
    }
}

/// Remainders `(_nR, _nS)`; both vanish on a periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderPair {
    pub r: f64,
    pub s: f64,
}

impl RemainderPair {
    pub fn max_abs(&self) -> f64 {
        self.r.abs().max(self.s.abs())
    }
}

pub fn step(s: PhaseState, m: &MapParams) -> PhaseState {
    let g = m.g(s.x);
    PhaseState {
        x: s.x + s.y + m.mu() + g,
        y: s.y + g,
    }
}

/// Jacobian of one step, `[[1+g', 1], [g', 1]]`.
pub fn tangent_step(s: PhaseState, m: &MapParams) -> Mat2 {
    let gp = m.g_prime(s.x);
    [[1.0 + gp, 1.0], [gp, 1.0]]
}

pub fn iterate(s0: PhaseState, m: &MapParams, n: usize) -> Vec<PhaseState> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(s0);
    let mut s = s0;
    for _ in 0..n {
        s = step(s, m);
        out.push(s);
    }
    out
}

/// Remainders from the weighted sums of `g` along the orbit:
/// `_nR = n·y_0 + Σ (n−k) g(x_k)`, `_nS = Σ g(x_k)`.
pub fn remainders(s0: PhaseState, m: &MapParams, n: usize) -> RemainderPair {
    let mut s = s0;
    let mut r = n as f64 * s0.y;
    let mut sum = 0.0;
    for k in 0..n {
        let g = m.g(s.x);
        r += (n - k) as f64 * g;
        sum += g;
        s = PhaseState {
            x: s.x + s.y + m.mu() + g,
            y: s.y + g,
        };
    }
    RemainderPair { r, s: sum }
}

/// Remainders straight from the definition `(x_n − x_0 − nμ, y_n − y_0)`.
pub fn remainders_by_definition(s0: PhaseState, m: &MapParams, n: usize) -> RemainderPair {
    let last = *iterate(s0, m, n)
        .last()
        .expect("iterate returns n+1 states");
    RemainderPair {
        r: last.x - s0.x - n as f64 * m.mu(),
        s: last.y - s0.y,
    }
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

/// Product of tangent maps along `n` steps from `s0`.
pub fn monodromy(s0: PhaseState, m: &MapParams, n: usize) -> Mat2 {
    let mut acc = [[1.0, 0.0], [0.0, 1.0]];
    let mut s = s0;
    for _ in 0..n {
        acc = mat_mul(&tangent_step(s, m), &acc);
        s = step(s, m);
    }
    acc
}

/// Remainders together with their derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderJet {
    pub value: RemainderPair,
    /// `∂(R, S)/∂(x_0, y_0)`, i.e. monodromy minus identity.
    pub d_state: Mat2,
    /// `(∂R/∂δ, ∂S/∂δ)`.
    pub d_delta: [f64; 2],
}

/// Remainders plus analytic first derivatives, by forward propagation of
/// the variational equations alongside the orbit.
pub fn remainder_jet(s0: PhaseState, m: &MapParams, n: usize) -> RemainderJet {
    let value = remainders(s0, m, n);
    let mut s = s0;
    let mut mono = [[1.0, 0.0], [0.0, 1.0]];
    let (mut dx, mut dy) = (0.0, 0.0);
    for _ in 0..n {
        let gp = m.g_prime(s.x);
        mono = mat_mul(&[[1.0 + gp, 1.0], [gp, 1.0]], &mono);
        // ∂g/∂δ = −1
        let dg = gp * dx - 1.0;
        dx += dy + dg;
        dy += dg;
        s = step(s, m);
    }
    RemainderJet {
        value,
        d_state: [
            [mono[0][0] - 1.0, mono[0][1]],
            [mono[1][0], mono[1][1] - 1.0],
        ],
        d_delta: [dx, dy],
    }
}
