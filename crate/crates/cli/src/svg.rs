//! Minimal deterministic SVG line/scatter plots. Same input, same bytes:
//! every number is printed with a fixed precision and nothing depends on
//! time or hashing order.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SvgError {
    #[error("nothing to plot: the dataset has no finite points")]
    EmptyDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Series {
            name: name.into(),
            points,
            style,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Lines emitted inside an XML comment at the top.
    pub comment: Vec<String>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace("--", "- -")
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let mut it = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let &(x0, y0) = it.next()?;
    let (mut xl, mut xh, mut yl, mut yh) = (x0, x0, y0, y0);
    for &(x, y) in it {
        xl = xl.min(x);
        xh = xh.max(x);
        yl = yl.min(y);
        yh = yh.max(y);
    }
    let pad = |lo: f64, hi: f64| {
        if hi > lo {
            (lo, hi)
        } else {
            let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            (lo - d, hi + d)
        }
    };
    let (xl, xh) = pad(xl, xh);
    let (yl, yh) = pad(yl, yh);
    Some((xl, xh, yl, yh))
}

pub fn render(plot: &Plot) -> Result<String, SvgError> {
    let (xl, xh, yl, yh) = bounds(&plot.series).ok_or(SvgError::EmptyDataset)?;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - xl) / (xh - xl) * pw;
    let sy = |y: f64| TOP + (yh - y) / (yh - yl) * ph;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if !plot.comment.is_empty() {
        out.push_str("<!--\n");
        for line in &plot.comment {
            let _ = writeln!(out, "{}", escape(line));
        }
        out.push_str("-->\n");
    }
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = xl + f * (xh - xl);
        let yv = yl + f * (yh - yl);
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.4e}</text>",
            sx(xv),
            TOP + ph + 18.0,
            xv
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.4e}</text>",
            LEFT - 6.0,
            sy(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        LEFT + pw / 2.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        LEFT + pw / 2.0,
        HEIGHT - 8.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{}</text>",
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );
    for (i, s) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| (sx(x), sy(y)))
            .collect();
        match s.style {
            Style::Line => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                    path.join(" ")
                );
            }
            Style::Markers => {
                for (x, y) in &pts {
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{color}\"/>"
                    );
                }
            }
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            out,
            "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"12\" height=\"4\" fill=\"{color}\"/>",
            ly - 6.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{ly:.2}\">{}</text>",
            lx + 18.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(points: Vec<(f64, f64)>) -> Plot {
        Plot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series::new("s", points, Style::Line)],
            comment: vec!["a -- b".into()],
        }
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(render(&plot(vec![])), Err(SvgError::EmptyDataset));
        assert_eq!(
            render(&plot(vec![(f64::NAN, 1.0)])),
            Err(SvgError::EmptyDataset)
        );
    }

    #[test]
    fn deterministic_and_well_formed() {
        let p = plot(vec![(0.0, 1.0), (1.0, 2.0), (2.0, 0.5)]);
        let a = render(&p).unwrap();
        assert_eq!(a, render(&p).unwrap());
        assert!(a.starts_with("<?xml") && a.ends_with("</svg>\n"));
        // "--" is not allowed inside XML comments
        assert!(!a
            .split("<!--")
            .nth(1)
            .unwrap()
            .split("-->")
            .next()
            .unwrap()
            .contains("--"));
    }

    #[test]
    fn single_point_gets_a_range() {
        assert!(render(&plot(vec![(1.0, 1.0)])).is_ok());
    }
}
