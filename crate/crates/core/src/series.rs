//! Power series in `ε` for the drift `Δ(x, ε)` and momentum `Y(x, ε)`.
//!
//! The orbit deviations `ξ_i = x_i − x_0 − iμ` and `η_i = y_i` are carried
//! as truncated series whose coefficients are trigonometric polynomials in
//! `x_0`. Each step expands `f(x_0 + iμ + ξ_i)` in a Taylor series about the
//! base point. Requiring `ξ_q = 0` and `η_q = η_0` at order `n` is affine in
//! the unknowns `(Δ_n, Y_n)` with the constant matrix
//! `[[-q(q+1)/2, q], [-q, 0]]`, so each order is one scalar solve for `Δ_n`
//! (from the `S` equation) followed by one for `Y_n` (from `R`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cylmap::{MapError, MapParams};
use crate::orbits::{solve_delta_y_homotopy, NewtonSettings};
use crate::trigpoly::{TrigError, TrigPoly};

/// `Δ_n` counts as constant when its oscillating part is below this
/// fraction of `1 + ‖Δ_n‖`.
pub const CONSTANT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series order must be at least 1")]
    ZeroOrder,
    #[error("coefficient capacity exceeded: {0}")]
    Capacity(#[from] TrigError),
    #[error("no x-dependent coefficient of Δ up to order {order}")]
    LeadingIndexNotDetected { order: usize },
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Truncated series `Σ_{n ≤ N} c_n ε^n` with polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpsSeries {
    coeffs: Vec<TrigPoly>,
}

impl EpsSeries {
    pub fn zero(order: usize) -> Self {
        EpsSeries {
            coeffs: vec![TrigPoly::zero(0); order + 1],
        }
    }

    pub fn from_coeffs(coeffs: Vec<TrigPoly>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least the ε^0 term");
        EpsSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &TrigPoly {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[TrigPoly] {
        &self.coeffs
    }

    pub fn truncated(&self, order: usize) -> EpsSeries {
        let mut coeffs: Vec<TrigPoly> = self.coeffs.iter().take(order + 1).cloned().collect();
        coeffs.resize(order + 1, TrigPoly::zero(0));
        EpsSeries { coeffs }
    }

    fn add_scaled(&mut self, other: &EpsSeries, c: f64) {
        for (dst, src) in self.coeffs.iter_mut().zip(&other.coeffs) {
            dst.add_scaled(src, c);
        }
    }

    /// Multiply by `ε`, dropping the term that falls off the end.
    fn times_eps(&self) -> EpsSeries {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        coeffs.push(TrigPoly::zero(0));
        coeffs.extend(self.coeffs[..self.order()].iter().cloned());
        EpsSeries { coeffs }
    }

    /// Cauchy product truncated at `self.order()`.
    fn mul(&self, other: &EpsSeries, max_capacity: usize) -> Result<EpsSeries, TrigError> {
        let n = self.order();
        let mut out = EpsSeries::zero(n);
        for i in 0..=n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i).min(other.order()) {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                let prod = self.coeffs[i].try_product(&other.coeffs[j], max_capacity)?;
                out.coeffs[i + j].add_scaled(&prod, 1.0);
            }
        }
        Ok(out)
    }

    pub fn eval(&self, x: f64, eps: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * eps + c.eval(x))
    }
}

/// Evaluate `Σ c_n(x) ε^n`.
pub fn eval_series(s: &EpsSeries, x: f64, eps: f64) -> f64 {
    s.eval(x, eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SeriesRecord {
    q: u32,
    p: i64,
    #[serde(rename = "N")]
    order: usize,
    r: Option<usize>,
    #[serde(rename = "Delta")]
    delta: EpsSeries,
    #[serde(rename = "Y")]
    y: EpsSeries,
}

/// Expansions of `Δ` and `Y` together with the leading x-dependent index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SeriesRecord", into = "SeriesRecord")]
pub struct SeriesSolution {
    pub q: u32,
    pub p: i64,
    pub order: usize,
    pub delta: EpsSeries,
    pub y: EpsSeries,
    /// Smallest `n` with `Δ_n` non-constant, if any up to `order`.
    pub r: Option<usize>,
    /// Constant parts of `Δ_n` for `n < r` (all `n` when `r` is absent).
    pub a: Vec<f64>,
    /// Largest lower-order residual seen while solving; round-off only.
    pub consistency: f64,
}

impl From<SeriesRecord> for SeriesSolution {
    fn from(rec: SeriesRecord) -> Self {
        let a = constant_parts(&rec.delta, rec.r);
        SeriesSolution {
            q: rec.q,
            p: rec.p,
            order: rec.order,
            delta: rec.delta,
            y: rec.y,
            r: rec.r,
            a,
            consistency: 0.0,
        }
    }
}

impl From<SeriesSolution> for SeriesRecord {
    fn from(s: SeriesSolution) -> Self {
        SeriesRecord {
            q: s.q,
            p: s.p,
            order: s.order,
            r: s.r,
            delta: s.delta,
            y: s.y,
        }
    }
}

fn constant_parts(delta: &EpsSeries, r: Option<usize>) -> Vec<f64> {
    let end = r.unwrap_or(delta.order() + 1);
    delta.coeffs[..end].iter().map(|c| c.a(0)).collect()
}

impl SeriesSolution {
    /// `Δ_r`, the leading x-dependent coefficient.
    pub fn leading(&self) -> Result<&TrigPoly, SeriesError> {
        self.r
            .map(|r| self.delta.coeff(r))
            .ok_or(SeriesError::LeadingIndexNotDetected { order: self.order })
    }
}

pub fn is_constant(p: &TrigPoly) -> bool {
    p.oscillating_norm() < CONSTANT_TOL * (1.0 + p.norm())
}

struct Expansion {
    /// `shift(f^{(k)}, iμ) / k!` for each base point `i` and order `k`.
    taylor: Vec<Vec<TrigPoly>>,
    max_capacity: usize,
}

impl Expansion {
    /// Remainder series `(R, S)` truncated at order `n`.
    fn remainders(
        &self,
        delta: &EpsSeries,
        y: &EpsSeries,
        n: usize,
    ) -> Result<(EpsSeries, EpsSeries), TrigError> {
        let delta = delta.truncated(n);
        let y0 = y.truncated(n);
        let mut xi = EpsSeries::zero(n);
        let mut eta = y0.clone();
        for base in &self.taylor {
            // f(x_i) up to order n−1, Horner in ξ_i
            let top = (n - 1).min(base.len() - 1);
            let mut fx = EpsSeries::zero(n - 1);
            fx.coeffs[0] = base[top].clone();
            let xi_low = xi.truncated(n - 1);
            for k in (0..top).rev() {
                fx = fx.mul(&xi_low, self.max_capacity)?;
                fx.coeffs[0].add_scaled(&base[k], 1.0);
            }
            // g = −Δ − ε f(x_i), raised back to order n
            let mut g = EpsSeries::zero(n);
            g.add_scaled(&fx.truncated(n).times_eps(), -1.0);
            g.add_scaled(&delta, -1.0);
            xi.add_scaled(&eta, 1.0);
            xi.add_scaled(&g, 1.0);
            eta.add_scaled(&g, 1.0);
        }
        let mut s = eta;
        s.add_scaled(&y0, -1.0);
        Ok((xi, s))
    }
}

/// Order-by-order solution of the vanishing-remainder equations up to `order`.
pub fn expand(m: &MapParams, order: usize) -> Result<SeriesSolution, SeriesError> {
    if order == 0 {
        return Err(SeriesError::ZeroOrder);
    }
    m.require_coprime()?;
    let q = m.q as usize;
    let qf = q as f64;
    let f = m.f();
    let max_capacity = order * f.capacity();

    let mut derivs = Vec::with_capacity(order);
    let mut d = f.clone();
    let mut fact = 1.0;
    for k in 0..order {
        if k > 0 {
            d = d.derivative();
            fact *= k as f64;
        }
        derivs.push(d.scale(1.0 / fact));
    }
    let expansion = Expansion {
        taylor: (0..q)
            .map(|i| {
                derivs
                    .iter()
                    .map(|dk| dk.shift_rational(i as i64 * m.p, m.q))
                    .collect()
            })
            .collect(),
        max_capacity,
    };

    let mut delta = EpsSeries::zero(order);
    let mut y = EpsSeries::zero(order);
    let mut consistency = 0.0_f64;
    for n in 1..=order {
        let (r_series, s_series) = expansion.remainders(&delta, &y, n)?;
        for k in 1..n {
            consistency = consistency
                .max(r_series.coeff(k).norm())
                .max(s_series.coeff(k).norm());
        }
        // S_n = ρ_S − qΔ_n,  R_n = ρ_R + qY_n − q(q+1)/2 Δ_n
        let delta_n = s_series.coeff(n).scale(1.0 / qf);
        let mut y_n = delta_n.scale(0.5 * (qf + 1.0));
        y_n.add_scaled(r_series.coeff(n), -1.0 / qf);
        delta.coeffs[n] = delta_n;
        y.coeffs[n] = y_n;
    }

    let r = (1..=order).find(|&n| !is_constant(delta.coeff(n)));
    let a = constant_parts(&delta, r);
    Ok(SeriesSolution {
        q: m.q,
        p: m.p,
        order,
        delta,
        y,
        r,
        a,
        consistency,
    })
}

/// First-order coefficients compared against the closed forms
/// `Δ_1 = −f̄`, `Y_1 = −(q+1)/2 f̄ + f̿`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrderReport {
    pub delta1_error: f64,
    pub y1_error: f64,
}

impl FirstOrderReport {
    pub fn max_error(&self) -> f64 {
        self.delta1_error.max(self.y1_error)
    }
}

pub fn verify_first_order(sol: &SeriesSolution, m: &MapParams) -> FirstOrderReport {
    let mu = m.mu();
    let fbar = m.f().shift_average(m.q, mu);
    let fbarbar = m.f().weighted_shift_average(m.q, mu);
    let mut y1 = fbarbar.clone();
    y1.add_scaled(&fbar, -0.5 * (m.q as f64 + 1.0));
    FirstOrderReport {
        delta1_error: sol.delta.coeff(1).max_coeff_diff(&fbar.scale(-1.0)),
        y1_error: sol.y.coeff(1).max_coeff_diff(&y1),
    }
}

/// How far `Δ_r` is from being `μ`-periodic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicityReport {
    pub r: usize,
    /// `‖shift(Δ_r, μ) − Δ_r‖` (max coefficient)
    pub shift_residual: f64,
    pub norm: f64,
    pub support: Vec<usize>,
    pub support_in_q_lattice: bool,
}

impl PeriodicityReport {
    pub fn passes(&self) -> bool {
        self.shift_residual < 1e-10 * self.norm && self.support_in_q_lattice
    }
}

pub fn verify_periodicity(
    sol: &SeriesSolution,
    m: &MapParams,
) -> Result<PeriodicityReport, SeriesError> {
    let lead = sol.leading()?;
    let norm = lead.norm();
    let shift_residual = lead.shift(m.mu()).max_coeff_diff(lead);
    let support: Vec<usize> = lead.frequency_support(1e-10 * norm).into_iter().collect();
    let q = m.q as usize;
    Ok(PeriodicityReport {
        r: sol.r.expect("leading() succeeded"),
        shift_residual,
        norm,
        support_in_q_lattice: support.iter().all(|k| k % q == 0),
        support,
    })
}

/// Leading-order tongue width `(max Δ_r − min Δ_r)·ε^r`.
pub fn predicted_width(sol: &SeriesSolution, eps: f64) -> Result<f64, SeriesError> {
    let lead = sol.leading()?;
    let r = sol.r.expect("leading() succeeded");
    Ok(lead.range_extrema().range() * eps.powi(r as i32))
}

/// Largest `|Δ_numeric(x_0, ε) − Σ Δ_n(x_0) ε^n|` over the given points.
pub fn max_truncation_error(
    sol: &SeriesSolution,
    m: &MapParams,
    eps: f64,
    xs: &[f64],
    settings: &NewtonSettings,
) -> Option<f64> {
    let mut worst = 0.0_f64;
    for &x in xs {
        let num = solve_delta_y_homotopy(x, eps, m, settings);
        if !num.converged {
            return None;
        }
        worst = worst.max((num.delta - sol.delta.eval(x, eps)).abs());
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn sin_map(p: i64, q: u32) -> MapParams {
        MapParams::new(TrigPoly::sin_k(1, 1.0), p, q, 0.0, 0.0).unwrap()
    }

    #[test]
    fn q1_closed_form() {
        let sol = expand(&sin_map(0, 1), 4).unwrap();
        assert!(sol.delta.coeff(1).max_coeff_diff(&TrigPoly::sin_k(1, -1.0)) < 1e-15);
        assert!(sol.y.coeff(1).norm() < 1e-15);
        for n in 2..=4 {
            assert!(sol.delta.coeff(n).norm() < 1e-15, "Δ_{n} should vanish");
            assert!(sol.y.coeff(n).norm() < 1e-15);
        }
        assert_eq!(sol.r, Some(1));
        assert!(sol.delta.coeff(0).is_zero() && sol.y.coeff(0).is_zero());
        assert!((predicted_width(&sol, 0.1).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn q2_leading_index() {
        let sol = expand(&sin_map(1, 2), 4).unwrap();
        assert!(sol.delta.coeff(1).norm() < 1e-15);
        assert_eq!(sol.r, Some(2));
        let support = sol.delta.coeff(2).frequency_support(1e-12);
        assert!(support.contains(&2));
        assert!(support.iter().all(|k| k % 2 == 0));
        assert!(sol.consistency < 1e-14);
    }

    #[test]
    fn first_order_closed_form() {
        for (p, q) in [(1, 3), (2, 5), (1, 4)] {
            let m = sin_map(p, q);
            let sol = expand(&m, 2).unwrap();
            assert!(verify_first_order(&sol, &m).max_error() < 1e-12);
        }
        let m = MapParams::new(TrigPoly::sin_k(3, 1.0), 1, 3, 0.0, 0.0).unwrap();
        let sol = expand(&m, 2).unwrap();
        assert!(sol.delta.coeff(1).max_coeff_diff(&TrigPoly::sin_k(3, -1.0)) < 1e-12);
        assert!(verify_first_order(&sol, &m).max_error() < 1e-12);
        assert_eq!(sol.r, Some(1));
    }

    #[test]
    fn periodicity_reports() {
        let m = sin_map(1, 3);
        let sol = expand(&m, 4).unwrap();
        let rep = verify_periodicity(&sol, &m).unwrap();
        assert_eq!(rep.r, 3);
        assert!(rep.passes(), "{rep:?}");
        assert!(rep.support.iter().all(|k| [0, 3].contains(k)));
    }

    #[test]
    fn undetected_leading_index_is_an_error() {
        let m = sin_map(1, 5);
        let sol = expand(&m, 3).unwrap();
        assert_eq!(sol.r, None);
        assert_eq!(sol.a.len(), 4);
        assert!(matches!(
            predicted_width(&sol, 0.1),
            Err(SeriesError::LeadingIndexNotDetected { order: 3 })
        ));
        assert!(verify_periodicity(&sol, &m).is_err());
    }

    #[test]
    fn eval_series_examples() {
        assert_eq!(eval_series(&EpsSeries::zero(3), 0.4, 0.3), 0.0);
        let s = EpsSeries::from_coeffs(vec![TrigPoly::zero(0), TrigPoly::sin_k(1, -1.0)]);
        assert!((eval_series(&s, FRAC_PI_2, 0.1) + 0.1).abs() < 1e-16);
    }

    #[test]
    fn rejects_reducible_and_zero_order() {
        assert!(matches!(
            expand(&sin_map(2, 4), 3),
            Err(SeriesError::Map(_))
        ));
        assert_eq!(expand(&sin_map(1, 2), 0), Err(SeriesError::ZeroOrder));
    }

    #[test]
    fn json_layout() {
        let sol = expand(&sin_map(1, 2), 3).unwrap();
        let v: serde_json::Value = serde_json::to_value(&sol).unwrap();
        for key in ["q", "p", "N", "r", "Delta", "Y"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["r"], 2);
        assert_eq!(v["Delta"].as_array().unwrap().len(), 4);
        let back: SeriesSolution = serde_json::from_value(v).unwrap();
        assert_eq!(back.delta, sol.delta);
        assert_eq!(back.a, sol.a);
    }
}
