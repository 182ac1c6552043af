use std::f64::consts::TAU;

use serde_json::{json, Value};

use tongues_core::fmt::number;
use tongues_core::orbits::{find_orbits, guess_grid, NewtonSettings, OrbitKind};
use tongues_core::series::expand;
use tongues_core::sgchain::{
    classify_attractor, critical_torque, ChainOptions, ChainParams, ChainState,
};
use tongues_core::tongue::{
    fit_exponent, profile, sweep_independent, FitReport, TongueError, TongueSample,
};
use tongues_core::{Execution, MapParams};

use crate::config::Resolved;
use crate::error::CliError;
use crate::output::Report;
use crate::svg::{Plot, Series, Style};

/// Rows of the chain trajectory written to csv.
const MAX_TRAJECTORY_ROWS: usize = 10_000;

fn map_params(c: &Resolved, eps: f64) -> Result<MapParams, CliError> {
    MapParams::new(c.f.clone(), c.p, c.q, eps, c.delta).map_err(|e| CliError::Usage(e.to_string()))
}

fn kind_name(k: OrbitKind) -> &'static str {
    match k {
        OrbitKind::Center => "center",
        OrbitKind::Saddle => "saddle",
        OrbitKind::Parabolic => "parabolic",
    }
}

pub fn orbit(c: &Resolved) -> Result<Report, CliError> {
    let m = map_params(c, c.eps[0])?;
    let guesses = guess_grid(c.grid, &[-0.1, -0.03, 0.0, 0.03, 0.1]);
    let orbits = find_orbits(
        &m,
        &guesses,
        &NewtonSettings::default(),
        Execution::Parallel,
    );
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut list = Vec::new();
    for (i, o) in orbits.iter().enumerate() {
        let kind = kind_name(o.kind);
        for (k, s) in o.states.iter().enumerate() {
            rows.push(format!(
                "{i},{k},{},{},{kind},{},{}",
                number(s.x.rem_euclid(TAU)),
                number(s.y),
                number(o.trace),
                number(o.residual.max_abs())
            ));
        }
        series.push(Series::new(
            format!("{kind} {i}"),
            o.states
                .iter()
                .map(|s| (s.x.rem_euclid(TAU), s.y))
                .collect(),
            Style::Markers,
        ));
        list.push(json!({
            "kind": kind,
            "trace": o.trace,
            "residual": o.residual.max_abs(),
            "states": o.states.iter().map(|s| [s.x.rem_euclid(TAU), s.y]).collect::<Vec<_>>(),
        }));
    }
    Ok(Report {
        json: json!({ "eps": c.eps[0], "delta": c.delta, "orbits": list }),
        csv: Some(("orbit,k,x,y,kind,trace,residual".into(), rows)),
        plot: Some(Plot {
            title: format!(
                "{}/{} orbits, eps={}, delta={}",
                c.p, c.q, c.eps[0], c.delta
            ),
            x_label: "x mod 2pi".into(),
            y_label: "y".into(),
            series,
            comment: vec![],
        }),
        failures: vec![],
    })
}

pub fn profile_cmd(c: &Resolved) -> Result<Report, CliError> {
    c.require_coprime()?;
    let eps = c.eps[0];
    let m = map_params(c, eps)?;
    let prof =
        profile(&m, eps, c.grid, None, &NewtonSettings::default()).map_err(CliError::numerical)?;
    let rows = prof
        .points
        .iter()
        .map(|s| [s.x0, s.delta, s.y0, s.residual].map(number).join(","))
        .collect();
    let extremum = |e: &tongues_core::tongue::ProfileExtremum| json!({ "x0": e.x0.rem_euclid(TAU), "delta": e.delta, "y0": e.y0 });
    let points: Vec<Value> = prof
        .points
        .iter()
        .map(|s| json!({ "x0": s.x0, "delta": s.delta, "y0": s.y0, "residual": s.residual }))
        .collect();
    Ok(Report {
        json: json!({
            "eps": eps,
            "points": points,
            "max": extremum(&prof.max),
            "min": extremum(&prof.min),
            "width": prof.max.delta - prof.min.delta,
        }),
        csv: Some(("x0,delta,y0,residual".into(), rows)),
        plot: Some(Plot {
            title: format!("Delta(x0) for {}/{}, eps={eps}", c.p, c.q),
            x_label: "x0".into(),
            y_label: "Delta".into(),
            series: vec![
                Series::new(
                    "Delta",
                    prof.points.iter().map(|s| (s.x0, s.delta)).collect(),
                    Style::Line,
                ),
                Series::new(
                    "extrema",
                    vec![
                        (prof.max.x0.rem_euclid(TAU), prof.max.delta),
                        (prof.min.x0.rem_euclid(TAU), prof.min.delta),
                    ],
                    Style::Markers,
                ),
            ],
            comment: vec![],
        }),
        failures: vec![],
    })
}

fn tongue_samples(c: &Resolved) -> Result<(Vec<TongueSample>, Vec<String>), CliError> {
    c.require_coprime()?;
    let m = map_params(c, 0.0)?;
    let results = sweep_independent(
        &m,
        &c.eps,
        c.grid,
        &NewtonSettings::default(),
        Execution::Parallel,
    )
    .map_err(|e| match e {
        TongueError::UnsortedEps => CliError::Usage(e.to_string()),
        other => CliError::numerical(other),
    })?;
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (eps, r) in c.eps.iter().zip(results) {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => failures.push(format!("eps = {eps}: {e}")),
        }
    }
    Ok((samples, failures))
}

pub fn tongue(c: &Resolved) -> Result<Report, CliError> {
    let (samples, failures) = tongue_samples(c)?;
    Ok(Report {
        json: json!({ "samples": samples }),
        csv: Some((
            TongueSample::CSV_HEADER.into(),
            samples.iter().map(TongueSample::csv_row).collect(),
        )),
        plot: Some(Plot {
            title: format!("{}/{} tongue", c.p, c.q),
            x_label: "delta".into(),
            y_label: "eps".into(),
            series: vec![
                Series::new(
                    "delta_max",
                    samples.iter().map(|s| (s.delta_max, s.eps)).collect(),
                    Style::Line,
                ),
                Series::new(
                    "delta_min",
                    samples.iter().map(|s| (s.delta_min, s.eps)).collect(),
                    Style::Line,
                ),
            ],
            comment: vec![],
        }),
        failures,
    })
}

pub fn series(c: &Resolved) -> Result<Report, CliError> {
    let m = map_params(c, 0.0)?;
    let sol = expand(&m, c.order).map_err(CliError::numerical)?;
    let json = serde_json::to_value(&sol).expect("series serializes");
    let mut rows = Vec::new();
    for (name, s) in [("Delta", &sol.delta), ("Y", &sol.y)] {
        for n in 0..=sol.order {
            let p = s.coeff(n);
            for k in 0..=p.capacity() {
                rows.push(format!(
                    "{n},{name},{k},{},{}",
                    number(p.a(k)),
                    number(p.b(k))
                ));
            }
        }
    }
    let xs: Vec<f64> = (0..=256).map(|i| TAU * i as f64 / 256.0).collect();
    let series = (1..=sol.order)
        .map(|n| {
            let p = sol.delta.coeff(n);
            Series::new(
                format!("Delta_{n}"),
                xs.iter().map(|&x| (x, p.eval(x))).collect(),
                Style::Line,
            )
        })
        .collect();
    Ok(Report {
        json,
        csv: Some(("n,series,k,cos,sin".into(), rows)),
        plot: Some(Plot {
            title: format!("series coefficients for {}/{}, r = {:?}", c.p, c.q, sol.r),
            x_label: "x".into(),
            y_label: "Delta_n".into(),
            series,
            comment: vec![],
        }),
        failures: vec![],
    })
}

pub fn chain(c: &Resolved) -> Result<Report, CliError> {
    let params = ChainParams::new(c.q as usize, c.p, c.gamma, c.eps[0], c.delta)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut opts = ChainOptions::for_params(&params);
    opts.dt = c.dt;
    opts.horizon = c.horizon;
    let critical = if c.critical {
        Some(
            critical_torque(&params, &opts, 1e-3)
                .map_err(CliError::numerical)?
                .delta,
        )
    } else {
        None
    };
    let (mut report, traj) = classify_attractor(&params, &ChainState::flat(&params, 0.0), &opts)
        .map_err(CliError::numerical)?;
    report.critical_delta = critical;
    let samples = traj.samples();
    let stride = samples.len().div_ceil(MAX_TRAJECTORY_ROWS).max(1);
    let kept: Vec<&ChainState> = samples.iter().step_by(stride).collect();
    let series = (0..params.q)
        .map(|k| {
            Series::new(
                format!("x_{k}"),
                kept.iter().map(|s| (s.t, s.pos[k])).collect(),
                Style::Line,
            )
        })
        .collect();
    Ok(Report {
        json: serde_json::to_value(&report).expect("report serializes"),
        csv: Some((
            ChainState::csv_header(params.q),
            kept.iter().map(|s| s.csv_row()).collect(),
        )),
        plot: Some(Plot {
            title: format!("chain q={} p={} delta={}", c.q, c.p, c.delta),
            x_label: "t".into(),
            y_label: "x_k".into(),
            series,
            comment: vec![],
        }),
        failures: vec![],
    })
}

pub fn fit(c: &Resolved) -> Result<Report, CliError> {
    let (samples, failures) = tongue_samples(c)?;
    let fit = fit_exponent(&samples).map_err(CliError::numerical)?;
    let expected_r = expand(&map_params(c, 0.0)?, c.order).ok().and_then(|s| s.r);
    let out = FitReport {
        exponent: fit.exponent,
        residual: fit.residual,
        expected_r,
    };
    let line: Vec<(f64, f64)> = [fit.eps_range.0, fit.eps_range.1]
        .iter()
        .map(|e| (e.ln(), fit.log_prefactor + fit.exponent * e.ln()))
        .collect();
    Ok(Report {
        json: serde_json::to_value(out).expect("fit serializes"),
        csv: Some((
            "exponent,residual,expected_r".into(),
            vec![format!(
                "{},{},{}",
                number(out.exponent),
                number(out.residual),
                expected_r.map_or(String::new(), |r| r.to_string())
            )],
        )),
        plot: Some(Plot {
            title: format!("width scaling, exponent {:.4}", fit.exponent),
            x_label: "ln eps".into(),
            y_label: "ln width".into(),
            series: vec![
                Series::new(
                    "samples",
                    samples
                        .iter()
                        .filter(|s| s.width > 0.0 && s.eps > 0.0)
                        .map(|s| (s.eps.ln(), s.width.ln()))
                        .collect(),
                    Style::Markers,
                ),
                Series::new("fit", line, Style::Line),
            ],
            comment: vec![],
        }),
        failures,
    })
}
