//! Real trigonometric polynomials
//!
//! `a_0 + Σ_{k=1..D} (a_k cos kx + b_k sin kx)` stored as two coefficient
//! arrays. The nominal capacity `D` is the length of the sine array; the
//! *effective* degree ignores trailing coefficients below [`DEGREE_TOL`].
//! Coefficients are never trimmed behind the caller's back.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Threshold used when reporting the effective degree.
pub const DEGREE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrigError {
    #[error("coefficient arrays must satisfy len(cos) == len(sin) + 1 (got {cos} and {sin})")]
    Shape { cos: usize, sin: usize },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("product capacity {needed} exceeds configured maximum {max}")]
    CapacityOverflow { needed: usize, max: usize },
    #[error("need at least {needed} samples to recover capacity {capacity}, got {got}")]
    TooFewSamples {
        needed: usize,
        got: usize,
        capacity: usize,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTrigPoly {
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

/// A real trigonometric polynomial in coefficient form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrigPoly", into = "RawTrigPoly")]
pub struct TrigPoly {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TryFrom<RawTrigPoly> for TrigPoly {
    type Error = TrigError;

    fn try_from(raw: RawTrigPoly) -> Result<Self, Self::Error> {
        // A missing sine array or a short one is padded with zeros.
        let mut raw = raw;
        if raw.cos.is_empty() {
            raw.cos.push(0.0);
        }
        let cap = raw.sin.len().max(raw.cos.len() - 1);
        raw.cos.resize(cap + 1, 0.0);
        raw.sin.resize(cap, 0.0);
        TrigPoly::from_coeffs(raw.cos, raw.sin)
    }
}

impl From<TrigPoly> for RawTrigPoly {
    fn from(p: TrigPoly) -> Self {
        RawTrigPoly {
            cos: p.cos,
            sin: p.sin,
        }
    }
}

/// Global extrema over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub max: f64,
    pub min: f64,
    pub argmax: f64,
    pub argmin: f64,
}

impl Extrema {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

impl TrigPoly {
    /// `cos.len()` must equal `sin.len() + 1`.
    pub fn from_coeffs(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, TrigError> {
        if cos.len() != sin.len() + 1 {
            return Err(TrigError::Shape {
                cos: cos.len(),
                sin: sin.len(),
            });
        }
        if cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(TrigError::NonFinite);
        }
        Ok(TrigPoly { cos, sin })
    }

    pub fn zero(capacity: usize) -> Self {
        TrigPoly {
            cos: vec![0.0; capacity + 1],
            sin: vec![0.0; capacity],
        }
    }

    pub fn constant(c: f64) -> Self {
        TrigPoly {
            cos: vec![c],
            sin: Vec::new(),
        }
    }

    /// `amp * sin(k x)`
    pub fn sin_k(k: usize, amp: f64) -> Self {
        let mut p = TrigPoly::zero(k);
        if k > 0 {
            p.sin[k - 1] = amp;
        }
        p
    }

    /// `amp * cos(k x)`
    pub fn cos_k(k: usize, amp: f64) -> Self {
        let mut p = TrigPoly::zero(k);
        p.cos[k] = amp;
        p
    }

    pub fn capacity(&self) -> usize {
        self.sin.len()
    }

    /// Cosine coefficient `a_k` (zero beyond capacity).
    pub fn a(&self, k: usize) -> f64 {
        self.cos.get(k).copied().unwrap_or(0.0)
    }

    /// Sine coefficient `b_k` (zero for `k == 0` and beyond capacity).
    pub fn b(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.sin.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Largest `|a_k|` or `|b_k|`.
    pub fn norm(&self) -> f64 {
        self.cos
            .iter()
            .chain(self.sin.iter())
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Largest coefficient of a non-constant harmonic.
    pub fn oscillating_norm(&self) -> f64 {
        self.cos[1..]
            .iter()
            .chain(self.sin.iter())
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|&c| c == 0.0)
    }

    /// Effective degree with threshold [`DEGREE_TOL`].
    pub fn degree(&self) -> usize {
        self.degree_with(DEGREE_TOL)
    }

    pub fn degree_with(&self, tol: f64) -> usize {
        (1..=self.capacity())
            .rev()
            .find(|&k| self.a(k).abs().max(self.b(k).abs()) > tol)
            .unwrap_or(0)
    }

    /// Harmonics whose amplitude exceeds `tol`.
    pub fn frequency_support(&self, tol: f64) -> BTreeSet<usize> {
        (0..=self.capacity())
            .filter(|&k| self.a(k).abs().max(self.b(k).abs()) > tol)
            .collect()
    }

    /// Copy with capacity changed; dropped coefficients must be zero unless
    /// the caller accepts the loss.
    pub fn with_capacity(&self, capacity: usize) -> TrigPoly {
        let mut p = self.clone();
        p.cos.resize(capacity + 1, 0.0);
        p.sin.resize(capacity, 0.0);
        p
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.cos[0];
        if self.sin.is_empty() {
            return acc;
        }
        let (s1, c1) = x.sin_cos();
        let (mut s, mut c) = (s1, c1);
        for k in 1..=self.capacity() {
            acc += self.cos[k] * c + self.sin[k - 1] * s;
            // angle addition for (k+1)x
            let c_next = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = c_next;
        }
        acc
    }

    /// First derivative evaluated without building the derivative polynomial.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let (s1, c1) = x.sin_cos();
        let (mut s, mut c) = (s1, c1);
        for k in 1..=self.capacity() {
            let kf = k as f64;
            acc += kf * (self.sin[k - 1] * c - self.cos[k] * s);
            let c_next = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = c_next;
        }
        acc
    }

    pub fn derivative(&self) -> TrigPoly {
        let mut d = TrigPoly::zero(self.capacity());
        for k in 1..=self.capacity() {
            let kf = k as f64;
            d.cos[k] = kf * self.sin[k - 1];
            d.sin[k - 1] = -kf * self.cos[k];
        }
        d
    }

    /// `Q(x) = P(x + s)`.
    pub fn shift(&self, s: f64) -> TrigPoly {
        let mut out = TrigPoly::zero(self.capacity());
        out.cos[0] = self.cos[0];
        for k in 1..=self.capacity() {
            let (sk, ck) = (k as f64 * s).sin_cos();
            let (a, b) = (self.cos[k], self.sin[k - 1]);
            out.cos[k] = a * ck + b * sk;
            out.sin[k - 1] = b * ck - a * sk;
        }
        out
    }

    /// Shift by the rational angle `2π·num/den`, reduced modulo `den` first.
    pub fn shift_rational(&self, num: i64, den: u32) -> TrigPoly {
        let den_i = den as i64;
        let r = num.rem_euclid(den_i);
        self.shift(TAU * r as f64 / den as f64)
    }

    pub fn scale(&self, c: f64) -> TrigPoly {
        TrigPoly {
            cos: self.cos.iter().map(|v| v * c).collect(),
            sin: self.sin.iter().map(|v| v * c).collect(),
        }
    }

    /// `self += c * other`, growing capacity if needed.
    pub fn add_scaled(&mut self, other: &TrigPoly, c: f64) {
        if other.capacity() > self.capacity() {
            self.cos.resize(other.capacity() + 1, 0.0);
            self.sin.resize(other.capacity(), 0.0);
        }
        for (dst, src) in self.cos.iter_mut().zip(&other.cos) {
            *dst += c * src;
        }
        for (dst, src) in self.sin.iter_mut().zip(&other.sin) {
            *dst += c * src;
        }
    }

    /// Product via product-to-sum identities; capacity is the sum of the
    /// operand capacities.
    pub fn product(&self, other: &TrigPoly) -> TrigPoly {
        let (dp, dq) = (self.capacity(), other.capacity());
        let mut out = TrigPoly::zero(dp + dq);
        // out_cos / out_sin indexed by frequency; sin(−m) = −sin(m).
        let mut put = |m: i64, cos_part: f64, sin_part: f64| {
            let k = m.unsigned_abs() as usize;
            out.cos[k] += cos_part;
            if k > 0 {
                let sgn = if m < 0 { -1.0 } else { 1.0 };
                out.sin[k - 1] += sgn * sin_part;
            }
        };
        for j in 0..=dp {
            let (aj, bj) = (self.a(j), self.b(j));
            if aj == 0.0 && bj == 0.0 {
                continue;
            }
            for k in 0..=dq {
                let (ak, bk) = (other.a(k), other.b(k));
                if ak == 0.0 && bk == 0.0 {
                    continue;
                }
                let (ji, ki) = (j as i64, k as i64);
                // cos j cos k = ½[cos(j−k) + cos(j+k)]
                // sin j sin k = ½[cos(j−k) − cos(j+k)]
                // sin j cos k = ½[sin(j+k) + sin(j−k)]
                // cos j sin k = ½[sin(j+k) − sin(j−k)]
                put(
                    ji - ki,
                    0.5 * (aj * ak + bj * bk),
                    0.5 * (bj * ak - aj * bk),
                );
                put(
                    ji + ki,
                    0.5 * (aj * ak - bj * bk),
                    0.5 * (bj * ak + aj * bk),
                );
            }
        }
        out
    }

    /// Product with an explicit capacity ceiling.
    pub fn try_product(
        &self,
        other: &TrigPoly,
        max_capacity: usize,
    ) -> Result<TrigPoly, TrigError> {
        let needed = self.capacity() + other.capacity();
        if needed > max_capacity {
            return Err(TrigError::CapacityOverflow {
                needed,
                max: max_capacity,
            });
        }
        Ok(self.product(other))
    }

    /// `(1/q) Σ_{k<q} P(x + kμ)`.
    pub fn shift_average(&self, q: u32, mu: f64) -> TrigPoly {
        self.weighted_shifts(q, mu, |_| 1.0)
    }

    /// `(1/q) Σ_{k<q} (q−k) P(x + kμ)`.
    pub fn weighted_shift_average(&self, q: u32, mu: f64) -> TrigPoly {
        self.weighted_shifts(q, mu, |k| (q - k) as f64)
    }

    fn weighted_shifts(&self, q: u32, mu: f64, w: impl Fn(u32) -> f64) -> TrigPoly {
        assert!(q >= 1, "shift averages need q >= 1");
        let mut acc = TrigPoly::zero(self.capacity());
        for k in 0..q {
            acc.add_scaled(&self.shift(k as f64 * mu), w(k));
        }
        acc.scale(1.0 / q as f64)
    }

    /// Global extrema on `[0, 2π)`: dense scan, then Newton on `P' = 0`.
    pub fn range_extrema(&self) -> Extrema {
        let d = self.degree();
        if d == 0 {
            let c = self.eval(0.0);
            return Extrema {
                max: c,
                min: c,
                argmax: 0.0,
                argmin: 0.0,
            };
        }
        let n = 64 * (d + 1);
        let h = TAU / n as f64;
        let samples: Vec<f64> = (0..n).map(|i| self.eval(i as f64 * h)).collect();
        let dp = self.derivative();
        let ddp = dp.derivative();

        let mut best_max = (f64::NEG_INFINITY, 0.0);
        let mut best_min = (f64::INFINITY, 0.0);
        for i in 0..n {
            let (prev, cur, next) = (samples[(i + n - 1) % n], samples[i], samples[(i + 1) % n]);
            let x = i as f64 * h;
            if cur >= prev && cur >= next {
                let xr = newton_critical(&dp, &ddp, x, h);
                let v = self.eval(xr);
                if v > best_max.0 {
                    best_max = (v, xr);
                }
            }
            if cur <= prev && cur <= next {
                let xr = newton_critical(&dp, &ddp, x, h);
                let v = self.eval(xr);
                if v < best_min.0 {
                    best_min = (v, xr);
                }
            }
        }
        Extrema {
            max: best_max.0,
            min: best_min.0,
            argmax: best_max.1.rem_euclid(TAU),
            argmin: best_min.1.rem_euclid(TAU),
        }
    }

    /// Recover coefficients of capacity `capacity` from uniform samples
    /// `samples[j] = P(2πj/M)`. Exact when `M > 2·capacity`.
    pub fn interpolate(samples: &[f64], capacity: usize) -> Result<TrigPoly, TrigError> {
        let m = samples.len();
        if m < 2 * capacity + 1 {
            return Err(TrigError::TooFewSamples {
                needed: 2 * capacity + 1,
                got: m,
                capacity,
            });
        }
        let mut p = TrigPoly::zero(capacity);
        let mf = m as f64;
        p.cos[0] = samples.iter().sum::<f64>() / mf;
        for k in 1..=capacity {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, s) in samples.iter().enumerate() {
                let (sn, cs) = (TAU * ((k * j) % m) as f64 / mf).sin_cos();
                a += s * cs;
                b += s * sn;
            }
            // the Nyquist harmonic only has a cosine part, weight 1/M
            let w = if 2 * k == m { 1.0 / mf } else { 2.0 / mf };
            p.cos[k] = w * a;
            p.sin[k - 1] = if 2 * k == m { 0.0 } else { w * b };
        }
        Ok(p)
    }

    /// Largest coefficient-wise difference.
    pub fn max_coeff_diff(&self, other: &TrigPoly) -> f64 {
        let cap = self.capacity().max(other.capacity());
        (0..=cap)
            .map(|k| {
                (self.a(k) - other.a(k))
                    .abs()
                    .max((self.b(k) - other.b(k)).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn newton_critical(dp: &TrigPoly, ddp: &TrigPoly, x0: f64, h: f64) -> f64 {
    let mut x = x0;
    for _ in 0..50 {
        let (d1, d2) = (dp.eval(x), ddp.eval(x));
        if d1 == 0.0 || d2 == 0.0 {
            break;
        }
        let step = d1 / d2;
        // stay inside the bracketing cell
        if step.abs() > 2.0 * h || !step.is_finite() {
            return x0;
        }
        x -= step;
        if step.abs() < 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    if (x - x0).abs() > 2.0 * h {
        x0
    } else {
        x
    }
}

impl Add for &TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        out.add_scaled(rhs, 1.0);
        out
    }
}

impl Sub for &TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        out.add_scaled(rhs, -1.0);
        out
    }
}

impl Mul for &TrigPoly {
    type Output = TrigPoly;
    fn mul(self, rhs: &TrigPoly) -> TrigPoly {
        self.product(rhs)
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(-1.0)
    }
}
