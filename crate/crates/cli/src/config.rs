//! Run configuration: command-line flags layered over an optional
//! `key=value` file that uses the same keys.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use tongues_core::cylmap::gcd;
use tongues_core::sgchain::default_dt;
use tongues_core::TrigPoly;

use crate::error::CliError;

pub const KEYS: [&str; 14] = [
    "f", "q", "p", "eps", "delta", "order", "grid", "gamma", "dt", "horizon", "out", "jobs",
    "format", "critical",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format '{other}' (csv, json, svg)")),
        }
    }
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

/// Parse the `key=value` text. Blank lines and `#` comments are skipped;
/// keys outside [`KEYS`] are rejected.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected key=value, got '{raw}'",
                n + 1
            )));
        };
        let key = k.trim().trim_start_matches("--").to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key '{key}'",
                n + 1
            )));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Raw values after layering, before typing.
#[derive(Debug, Default, Clone)]
pub struct Layers {
    pub values: BTreeMap<String, String>,
}

impl Layers {
    pub fn from_file(file: BTreeMap<String, String>) -> Self {
        Layers { values: file }
    }

    /// A flag, when given, wins over the file.
    pub fn set(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid value '{v}' for {key}: {e}")))
            })
            .transpose()
    }
}

/// `sin`, `cos`, `sinK`, `cosK`, inline JSON, or a path to a JSON file.
pub fn parse_f(spec: &str) -> Result<TrigPoly, CliError> {
    let s = spec.trim();
    for (prefix, is_sin) in [("sin", true), ("cos", false)] {
        if let Some(rest) = s.strip_prefix(prefix) {
            let k = if rest.is_empty() {
                Some(1)
            } else {
                rest.parse::<usize>().ok()
            };
            if let Some(k) = k.filter(|&k| k >= 1) {
                return Ok(if is_sin {
                    TrigPoly::sin_k(k, 1.0)
                } else {
                    TrigPoly::cos_k(k, 1.0)
                });
            }
        }
    }
    let json = if s.starts_with('{') {
        s.to_string()
    } else {
        std::fs::read_to_string(s)
            .map_err(|e| CliError::Usage(format!("cannot read f from '{s}': {e}")))?
    };
    serde_json::from_str(&json).map_err(|e| CliError::Usage(format!("invalid f: {e}")))
}

fn parse_eps_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("invalid eps '{t}': {e}")))
        })
        .collect()
}

/// Fully typed configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub f_spec: String,
    pub f: TrigPoly,
    pub q: u32,
    pub p: i64,
    pub eps: Vec<f64>,
    pub delta: f64,
    pub order: usize,
    pub grid: usize,
    pub gamma: f64,
    pub dt: f64,
    pub horizon: f64,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub format: Format,
    pub critical: bool,
}

impl Resolved {
    pub fn from_layers(l: &Layers, default_format: Format) -> Result<Self, CliError> {
        let f_spec = l.values.get("f").cloned().unwrap_or_else(|| "sin".into());
        let f = parse_f(&f_spec)?;
        let q: u32 = l.get("q")?.unwrap_or(1);
        if q == 0 {
            return Err(CliError::Usage("q must be at least 1".into()));
        }
        let p: i64 = l.get("p")?.unwrap_or(if q == 1 { 0 } else { 1 });
        let eps = match l.values.get("eps") {
            Some(s) => parse_eps_list(s)?,
            None => vec![0.1],
        };
        if eps.is_empty() || eps.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(CliError::Usage(
                "eps must be a list of finite non-negative numbers".into(),
            ));
        }
        let delta: f64 = l.get("delta")?.unwrap_or(0.0);
        let order: usize = l.get("order")?.unwrap_or(4);
        if order == 0 {
            return Err(CliError::Usage("order must be at least 1".into()));
        }
        let grid: usize = l.get("grid")?.unwrap_or(64 * q as usize);
        if grid < 8 * q as usize {
            return Err(CliError::Usage(format!(
                "grid must be at least 8q = {}",
                8 * q
            )));
        }
        let gamma: f64 = l.get("gamma")?.unwrap_or(0.5);
        let dt: f64 = l.get("dt")?.unwrap_or_else(|| default_dt(eps[0]));
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Usage("dt must be positive".into()));
        }
        let horizon: f64 = l.get("horizon")?.unwrap_or(1e5);
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(CliError::Usage("horizon must be positive".into()));
        }
        let jobs: Option<usize> = l.get("jobs")?;
        let format: Format = l.get("format")?.unwrap_or(default_format);
        let critical: bool = l.get("critical")?.unwrap_or(false);
        Ok(Resolved {
            f_spec,
            f,
            q,
            p,
            eps,
            delta,
            order,
            grid,
            gamma,
            dt,
            horizon,
            out: l.values.get("out").map(PathBuf::from),
            jobs,
            format,
            critical,
        })
    }

    pub fn require_coprime(&self) -> Result<(), CliError> {
        if gcd(self.p.unsigned_abs(), self.q as u64) != 1 {
            return Err(CliError::Usage(format!(
                "p/q = {}/{} is not in lowest terms",
                self.p, self.q
            )));
        }
        Ok(())
    }

    /// Every key with the value actually used.
    pub fn as_map(&self) -> BTreeMap<&'static str, String> {
        let eps: Vec<String> = self.eps.iter().map(|e| e.to_string()).collect();
        BTreeMap::from([
            ("f", self.f_spec.clone()),
            ("q", self.q.to_string()),
            ("p", self.p.to_string()),
            ("eps", eps.join(",")),
            ("delta", self.delta.to_string()),
            ("order", self.order.to_string()),
            ("grid", self.grid.to_string()),
            ("gamma", self.gamma.to_string()),
            ("dt", self.dt.to_string()),
            ("horizon", self.horizon.to_string()),
            (
                "out",
                self.out
                    .as_ref()
                    .map_or("-".into(), |p| p.display().to_string()),
            ),
            ("jobs", self.jobs.map_or("auto".into(), |j| j.to_string())),
            ("format", self.format.name().into()),
            ("critical", self.critical.to_string()),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing() {
        let m = parse_file("# run\nq = 3\n\np=1  # twist\n--eps=0.1,0.2\n").unwrap();
        assert_eq!(m["q"], "3");
        assert_eq!(m["p"], "1");
        assert_eq!(m["eps"], "0.1,0.2");
        assert!(matches!(parse_file("bogus=1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_file("q 3"), Err(CliError::Usage(_))));
    }

    #[test]
    fn flags_override_file() {
        let mut l = Layers::from_file(parse_file("q=3\np=1\neps=0.2").unwrap());
        l.set("q", Some("2".into()));
        l.set("p", None);
        let r = Resolved::from_layers(&l, Format::Csv).unwrap();
        assert_eq!((r.q, r.p), (2, 1));
        assert_eq!(r.eps, vec![0.2]);
        assert_eq!(r.grid, 128);
    }

    #[test]
    fn f_specs() {
        assert_eq!(parse_f("sin").unwrap(), TrigPoly::sin_k(1, 1.0));
        assert_eq!(parse_f("sin2").unwrap(), TrigPoly::sin_k(2, 1.0));
        assert_eq!(parse_f("cos3").unwrap(), TrigPoly::cos_k(3, 1.0));
        let j = parse_f(r#"{"cos":[0,0.5],"sin":[1]}"#).unwrap();
        assert_eq!(j.a(1), 0.5);
        assert_eq!(j.b(1), 1.0);
        assert!(parse_f("sin0").is_err());
        assert!(parse_f("tan").is_err());
    }

    #[test]
    fn validation() {
        let mut l = Layers::default();
        l.set("grid", Some("4".into()));
        assert!(Resolved::from_layers(&l, Format::Csv).is_err());
        let mut l = Layers::default();
        l.set("eps", Some("0.1,-0.2".into()));
        assert!(Resolved::from_layers(&l, Format::Csv).is_err());
        let mut l = Layers::default();
        l.set("q", Some("4".into()));
        l.set("p", Some("2".into()));
        assert!(Resolved::from_layers(&l, Format::Csv)
            .unwrap()
            .require_coprime()
            .is_err());
    }
}
