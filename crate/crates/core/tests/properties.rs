use std::f64::consts::TAU;

use proptest::prelude::*;

use tongues_core::cylmap::{det, monodromy, remainders, remainders_by_definition};
use tongues_core::exec::Execution;
use tongues_core::orbits::{
    continue_in_x, continue_in_x_independent, solve_delta_y_homotopy, NewtonSettings,
};
use tongues_core::series::{expand, SeriesSolution};
use tongues_core::tongue::{sweep, sweep_independent};
use tongues_core::{MapParams, PhaseState, TrigPoly};

fn poly(max_degree: usize) -> impl Strategy<Value = TrigPoly> {
    (1..=max_degree).prop_flat_map(|d| {
        (
            prop::collection::vec(-1.0..1.0f64, d + 1),
            prop::collection::vec(-1.0..1.0f64, d),
        )
            .prop_map(|(c, s)| TrigPoly::from_coeffs(c, s).unwrap())
    })
}

fn coprime_pair() -> impl Strategy<Value = (i64, u32)> {
    (1u32..=6)
        .prop_flat_map(|q| (0..q as i64, Just(q)))
        .prop_filter("coprime", |(p, q)| {
            tongues_core::cylmap::gcd(*p as u64, *q as u64) == 1
        })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

proptest! {
    #[test]
    fn shift_is_a_homomorphism(p in poly(4), q in poly(3), a in -7.0..7.0f64, b in -7.0..7.0f64) {
        prop_assert!(p.shift(a).shift(b).max_coeff_diff(&p.shift(a + b)) < 1e-12);
        let lhs = (&p * &q).shift(a);
        let rhs = &p.shift(a) * &q.shift(a);
        prop_assert!(lhs.max_coeff_diff(&rhs) < 1e-12);
    }

    #[test]
    fn product_rule(p in poly(4), q in poly(4)) {
        let lhs = (&p * &q).derivative();
        let rhs = &(&p.derivative() * &q) + &(&p * &q.derivative());
        prop_assert!(lhs.max_coeff_diff(&rhs) < 1e-12);
    }

    #[test]
    fn product_evaluates_pointwise(p in poly(4), q in poly(4), x in 0.0..TAU) {
        prop_assert!(close((&p * &q).eval(x), p.eval(x) * q.eval(x), 1e-12));
    }

    #[test]
    fn interpolation_recovers_coefficients(p in poly(5)) {
        let n = 2 * p.capacity() + 1;
        let samples: Vec<f64> = (0..n).map(|i| p.eval(TAU * i as f64 / n as f64)).collect();
        let back = TrigPoly::interpolate(&samples, p.capacity()).unwrap();
        prop_assert!(back.max_coeff_diff(&p) < 1e-12);
    }

    #[test]
    fn json_round_trip(p in poly(5)) {
        let s = serde_json::to_string(&p).unwrap();
        let back: TrigPoly = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn map_is_area_preserving(
        f in poly(4), (p, q) in coprime_pair(), eps in 0.0..1.0f64,
        delta in -0.3..0.3f64, x in 0.0..TAU, y in -1.0..1.0f64,
    ) {
        let m = MapParams::new(f, p, q, eps, delta).unwrap();
        let j = monodromy(PhaseState::new(x, y), &m, q as usize);
        let scale = j.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
        prop_assert!((det(&j) - 1.0).abs() < 1e-12 * scale * scale);
    }

    #[test]
    fn remainder_formula_matches_definition(
        f in poly(4), p in 0i64..9, q in 1u32..=8, eps in 0.0..1.0f64,
        delta in -0.5..0.5f64, x in 0.0..TAU, y in -1.0..1.0f64,
    ) {
        let m = MapParams::new(f, p, q, eps, delta).unwrap();
        let s0 = PhaseState::new(x, y);
        let a = remainders(s0, &m, q as usize);
        let b = remainders_by_definition(s0, &m, q as usize);
        prop_assert!(close(a.r, b.r, 1e-12) && close(a.s, b.s, 1e-12));
    }

    #[test]
    fn series_degree_bound(f in poly(3), (p, q) in coprime_pair()) {
        let m = MapParams::new(f.clone(), p, q, 0.0, 0.0).unwrap();
        let sol = expand(&m, 3).unwrap();
        let d = f.degree();
        for n in 1..=3 {
            let c = sol.delta.coeff(n);
            prop_assert!(c.degree_with(1e-12 * c.norm().max(1.0)) <= n * d);
        }
    }

    #[test]
    fn series_json_round_trip(f in poly(2), (p, q) in coprime_pair()) {
        let m = MapParams::new(f, p, q, 0.0, 0.0).unwrap();
        let sol = expand(&m, 3).unwrap();
        let back: SeriesSolution = serde_json::from_str(&serde_json::to_string(&sol).unwrap()).unwrap();
        prop_assert_eq!(back.r, sol.r);
        for n in 0..=3 {
            prop_assert!(back.delta.coeff(n).max_coeff_diff(sol.delta.coeff(n)) == 0.0);
            prop_assert!(back.y.coeff(n).max_coeff_diff(sol.y.coeff(n)) == 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn twist_shift_by_q_changes_nothing(
        f in poly(3), (p, q) in coprime_pair(), eps in 0.01..0.3f64, x in 0.0..TAU,
    ) {
        let s = NewtonSettings::default();
        let a = MapParams::new(f.clone(), p, q, 0.0, 0.0).unwrap();
        let b = MapParams::new(f, p + q as i64, q, 0.0, 0.0).unwrap();
        let sa = solve_delta_y_homotopy(x, eps, &a, &s);
        let sb = solve_delta_y_homotopy(x, eps, &b, &s);
        prop_assume!(sa.converged && sb.converged);
        prop_assert!((sa.delta - sb.delta).abs() < 1e-10);
        prop_assert!((sa.y0 - sb.y0).abs() < 1e-10);
    }

    #[test]
    fn negating_f_negates_eps(
        f in poly(3), (p, q) in coprime_pair(), eps in 0.01..0.3f64, x in 0.0..TAU,
    ) {
        let s = NewtonSettings::default();
        let a = MapParams::new(f.clone(), p, q, 0.0, 0.0).unwrap();
        let b = MapParams::new(f.scale(-1.0), p, q, 0.0, 0.0).unwrap();
        let sa = solve_delta_y_homotopy(x, -eps, &a, &s);
        let sb = solve_delta_y_homotopy(x, eps, &b, &s);
        prop_assume!(sa.converged && sb.converged);
        prop_assert!((sa.delta - sb.delta).abs() < 1e-10);
    }

    #[test]
    fn reflection_reverses_twist_and_drift(
        (p, q) in coprime_pair(), eps in 0.01..0.4f64, x in 0.0..TAU,
    ) {
        // odd f: (x, y, δ, p) ↦ (−x, −y, −δ, −p)
        let s = NewtonSettings::default();
        let f = TrigPoly::sin_k(1, 1.0);
        let a = MapParams::new(f.clone(), p, q, 0.0, 0.0).unwrap();
        let b = MapParams::new(f, -p, q, 0.0, 0.0).unwrap();
        let sa = solve_delta_y_homotopy(x, eps, &a, &s);
        let sb = solve_delta_y_homotopy(-x, eps, &b, &s);
        prop_assume!(sa.converged && sb.converged);
        prop_assert!((sa.delta + sb.delta).abs() < 1e-10);
        prop_assert!((sa.y0 + sb.y0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn continuation_agrees_with_independent_solves(q in 1u32..=4, eps in 0.05..0.4f64) {
        let s = NewtonSettings::default();
        let m = MapParams::new(TrigPoly::sin_k(1, 1.0), 1, q, 0.0, 0.0).unwrap();
        let grid = 16 * q as usize;
        let a = continue_in_x(eps, &m, grid, &s).unwrap();
        let b = continue_in_x_independent(eps, &m, grid, &s, Execution::Parallel).unwrap();
        let c = continue_in_x_independent(eps, &m, grid, &s, Execution::Sequential).unwrap();
        for ((u, v), w) in a.iter().zip(&b).zip(&c) {
            prop_assert!((u.delta - v.delta).abs() < 1e-10);
            prop_assert_eq!(v, w);
        }
    }

    #[test]
    fn sweep_modes_agree(q in 1u32..=3, e0 in 0.05..0.2f64) {
        let s = NewtonSettings::default();
        let m = MapParams::new(TrigPoly::sin_k(1, 1.0), 1, q, 0.0, 0.0).unwrap();
        let eps = [e0, e0 + 0.05, e0 + 0.1];
        let grid = 16 * q as usize;
        let a = sweep(&m, &eps, grid, &s).unwrap();
        let b = sweep_independent(&m, &eps, grid, &s, Execution::Parallel).unwrap();
        let c = sweep_independent(&m, &eps, grid, &s, Execution::Sequential).unwrap();
        for ((u, v), w) in a.iter().zip(&b).zip(&c) {
            let (u, v) = (u.as_ref().unwrap(), v.as_ref().unwrap());
            prop_assert!((u.width - v.width).abs() < 1e-10);
            prop_assert_eq!(v, w.as_ref().unwrap());
        }
    }
}
