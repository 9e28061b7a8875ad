//! Run configuration: a TOML document with a top-level `command` and the
//! sections `[family]`, `[trace]`, `[scan]` and `[output]`.
//!
//! ```toml
//! command = "discriminant"
//!
//! [family]
//! kind = "canonical"
//! a = "1"
//! b = "0"
//! c = "2"
//!
//! [scan]
//! r_param = 0.03
//! ```
//!
//! Coefficients are exact: integers, decimals or `"p/q"` strings. A general
//! family lists its terms:
//!
//! ```toml
//! [family]
//! kind = "polynomial"
//! params = ["lambda", "mu"]
//! terms = [
//!   { x_exp = 2, y_exp = 0, coeff = "1 + lambda" },
//!   { x_exp = 0, y_exp = 2, coeff = "1 - lambda" },
//!   { x_exp = 1, y_exp = 1, coeff = "2*mu" },
//!   { x_exp = 3, y_exp = 0, coeff = "1" },
//!   { x_exp = 0, y_exp = 3, coeff = "-1" },
//! ]
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;
use vertexset::poly::{parse_multi, parse_rational, BivarPoly, MultiPoly, ParamPoly, Rational};
use vertexset::surface::SurfaceFamily;
use vertexset::tracer::TraceConfig;
use vertexset::vertices::CensusConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    TraceVertexSet,
    LevelCensus,
    Kstar,
    Discriminant,
    CupSection,
    CupReference,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TraceVertexSet => "trace-vertex-set",
            Command::LevelCensus => "level-census",
            Command::Kstar => "kstar",
            Command::Discriminant => "discriminant",
            Command::CupSection => "cup-section",
            Command::CupReference => "cup-reference",
            Command::Verify => "verify",
        }
    }

    fn needs_family(self) -> bool {
        !matches!(self, Command::CupReference | Command::Verify)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Command::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s))
            .map_err(|_| err(format!("unknown command {s:?}")))
    }
}

/// An exact number written as an integer, a decimal or a `"p/q"` string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Exact {
    Int(i64),
    Text(String),
    Float(f64),
}

impl Exact {
    fn to_rational(&self, key: &str) -> Result<Rational, ConfigError> {
        match self {
            Exact::Int(n) => Ok(Rational::from_integer((*n).into())),
            Exact::Text(s) => parse_rational(s).map_err(|e| err(format!("family.{key}: {e}"))),
            // decimal literals are read through their shortest round-trip text
            Exact::Float(v) => parse_rational(&v.to_string()).map_err(|e| err(format!("family.{key}: {e}"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    x_exp: u32,
    y_exp: u32,
    coeff: Exact,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    kind: String,
    a: Option<Exact>,
    b: Option<Exact>,
    c: Option<Exact>,
    params: Option<Vec<String>>,
    terms: Option<Vec<RawTerm>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrace {
    radius: Option<f64>,
    resolution: Option<usize>,
    trace_tol: Option<f64>,
    r_fit: Option<f64>,
    r_origin: Option<f64>,
    h_max_rel: Option<f64>,
    h_min_rel: Option<f64>,
    fit_min: Option<usize>,
    max_steps: Option<usize>,
    window: Option<f64>,
    deg_tol: Option<f64>,
    points_per_curve: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    tau: Option<[f64; 2]>,
    levels: Option<Vec<f64>>,
    grid: Option<Vec<[f64; 2]>>,
    ray_theta_deg: Option<f64>,
    ray_radii: Option<Vec<f64>>,
    r_param: Option<f64>,
    step_deg: Option<f64>,
    tol_deg: Option<f64>,
    k: Option<f64>,
    r_max: Option<f64>,
    fan: Option<usize>,
    samples: Option<usize>,
    suite: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    prefix: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: String,
    family: Option<RawFamily>,
    #[serde(default)]
    trace: RawTrace,
    #[serde(default)]
    scan: RawScan,
    #[serde(default)]
    output: RawOutput,
}

/// Surface family as configured.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Canonical { a: Rational, b: Rational, c: Rational },
    Polynomial(ParamPoly),
}

impl FamilySpec {
    pub fn build(&self) -> vertexset::Result<SurfaceFamily> {
        match self {
            FamilySpec::Canonical { a, b, c } => SurfaceFamily::canonical(a.clone(), b.clone(), c.clone()),
            FamilySpec::Polynomial(p) => SurfaceFamily::new(p.clone()),
        }
    }
}

/// Scan settings with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub tau: [f64; 2],
    pub levels: Vec<f64>,
    pub grid: Vec<[f64; 2]>,
    pub r_param: f64,
    pub step_deg: f64,
    pub tol_deg: f64,
    pub k: f64,
    pub r_max: f64,
    pub fan: usize,
    pub samples: usize,
    pub suite: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub family: Option<FamilySpec>,
    pub trace: TraceConfig,
    pub census: CensusConfig,
    pub scan: ScanSpec,
    pub out_dir: PathBuf,
    pub prefix: String,
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(format!("{name} must be positive and finite, got {v}")))
    }
}

fn resolution(name: &str, v: usize) -> Result<usize, ConfigError> {
    if v >= 16 {
        Ok(v)
    } else {
        Err(err(format!("{name} must be at least 16, got {v}")))
    }
}

fn parse_family(raw: RawFamily) -> Result<FamilySpec, ConfigError> {
    match raw.kind.as_str() {
        "canonical" => {
            if raw.params.is_some() || raw.terms.is_some() {
                return Err(err("family: a canonical family takes only a, b and c"));
            }
            let get = |v: Option<Exact>, key: &str| {
                v.ok_or_else(|| err(format!("family.{key} is required for a canonical family")))?
                    .to_rational(key)
            };
            let (a, b, c) = (get(raw.a, "a")?, get(raw.b, "b")?, get(raw.c, "c")?);
            if b == c {
                return Err(err(format!(
                    "family: b = c = {b} makes the cubic divisible by x^2 + y^2 (not a generic umbilic)"
                )));
            }
            Ok(FamilySpec::Canonical { a, b, c })
        }
        "polynomial" => {
            if raw.a.is_some() || raw.b.is_some() || raw.c.is_some() {
                return Err(err("family: a polynomial family takes params and terms, not a, b, c"));
            }
            let params = raw.params.unwrap_or_default();
            let terms = raw
                .terms
                .ok_or_else(|| err("family.terms is required for a polynomial family"))?;
            let names: Vec<&str> = params.iter().map(String::as_str).collect();
            let mut poly: BivarPoly<MultiPoly<Rational>> = BivarPoly::zero();
            for (i, t) in terms.iter().enumerate() {
                let coeff = match &t.coeff {
                    Exact::Text(s) => {
                        parse_multi(s, &names).map_err(|e| err(format!("family.terms[{i}].coeff: {e}")))?
                    }
                    other => MultiPoly::constant(other.to_rational(&format!("terms[{i}].coeff"))?),
                };
                poly.add_term(t.x_exp, t.y_exp, coeff);
            }
            let p = ParamPoly::new(poly, params).map_err(|e| err(format!("family: {e}")))?;
            SurfaceFamily::new(p.clone()).map_err(|e| err(format!("family: {e}")))?;
            Ok(FamilySpec::Polynomial(p))
        }
        other => Err(err(format!(
            "family.kind must be \"canonical\" or \"polynomial\", got {other:?}"
        ))),
    }
}

fn parse_trace(raw: &RawTrace) -> Result<(TraceConfig, CensusConfig), ConfigError> {
    let d = TraceConfig::default();
    let trace = TraceConfig {
        radius: positive("trace.radius", raw.radius.unwrap_or(d.radius))?,
        resolution: resolution("trace.resolution", raw.resolution.unwrap_or(d.resolution))?,
        trace_tol: positive("trace.trace_tol", raw.trace_tol.unwrap_or(d.trace_tol))?,
        h_max_rel: positive("trace.h_max_rel", raw.h_max_rel.unwrap_or(d.h_max_rel))?,
        h_min_rel: positive("trace.h_min_rel", raw.h_min_rel.unwrap_or(d.h_min_rel))?,
        r_fit: positive("trace.r_fit", raw.r_fit.unwrap_or(d.r_fit))?,
        r_origin: raw.r_origin.map(|v| positive("trace.r_origin", v)).transpose()?,
        fit_min: raw.fit_min.unwrap_or(d.fit_min),
        max_steps: raw.max_steps.unwrap_or(d.max_steps),
    };
    trace.validate().map_err(|e| err(format!("trace: {e}")))?;
    let dc = CensusConfig::default();
    let census = CensusConfig {
        window: positive("trace.window", raw.window.unwrap_or(dc.window))?,
        deg_tol: positive("trace.deg_tol", raw.deg_tol.unwrap_or(dc.deg_tol))?,
        points_per_curve: resolution(
            "trace.points_per_curve",
            raw.points_per_curve.unwrap_or(dc.points_per_curve),
        )?,
        trace_tol: trace.trace_tol,
    };
    Ok((trace, census))
}

fn parse_scan(raw: RawScan, command: Command) -> Result<ScanSpec, ConfigError> {
    let mut grid = raw.grid.unwrap_or_default();
    match (raw.ray_theta_deg, raw.ray_radii) {
        (Some(t), Some(radii)) => {
            let t = t.to_radians();
            grid.extend(radii.iter().map(|r| [r * t.cos(), r * t.sin()]));
        }
        (None, None) => {}
        _ => return Err(err("scan.ray_theta_deg and scan.ray_radii go together")),
    }
    let spec = ScanSpec {
        tau: raw.tau.unwrap_or([0.0, 0.0]),
        levels: raw.levels.unwrap_or_default(),
        grid,
        r_param: positive("scan.r_param", raw.r_param.unwrap_or(0.03))?,
        step_deg: positive("scan.step_deg", raw.step_deg.unwrap_or(2.0))?,
        tol_deg: positive("scan.tol_deg", raw.tol_deg.unwrap_or(0.1))?,
        k: raw.k.unwrap_or(if command == Command::CupReference { 1.0 } else { 1e-4 }),
        r_max: positive("scan.r_max", raw.r_max.unwrap_or(0.06))?,
        fan: resolution("scan.fan", raw.fan.unwrap_or(360))?,
        samples: resolution("scan.samples", raw.samples.unwrap_or(720))?,
        suite: raw.suite.unwrap_or_else(|| "all".into()),
    };
    if spec.tau.iter().any(|v| !v.is_finite()) {
        return Err(err("scan.tau must be finite"));
    }
    match command {
        Command::LevelCensus if spec.levels.is_empty() => {
            return Err(err("scan.levels is required for level-census"));
        }
        Command::Kstar if spec.grid.is_empty() => {
            return Err(err("kstar needs scan.grid or scan.ray_theta_deg with scan.ray_radii"));
        }
        Command::CupReference if !(spec.k >= 0.0) => {
            return Err(err(format!("scan.k must be nonnegative, got {}", spec.k)));
        }
        Command::CupSection => {
            positive("scan.k", spec.k)?;
        }
        Command::Verify if vertexset::verify::suite_criteria(&spec.suite).is_none() => {
            return Err(err(format!(
                "scan.suite must be one of oracle, jets, branches, discriminant, cup, all; got {:?}",
                spec.suite
            )));
        }
        _ => {}
    }
    if spec.levels.iter().any(|k| !(*k > 0.0)) {
        return Err(err("scan.levels must be positive"));
    }
    Ok(spec)
}

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| err(format!("config: {}", e.to_string().trim_end())))?;
    let command: Command = raw.command.parse()?;
    let family = raw.family.map(parse_family).transpose()?;
    if command.needs_family() && family.is_none() {
        return Err(err(format!("[family] is required for {command}")));
    }
    let (trace, census) = parse_trace(&raw.trace)?;
    let scan = parse_scan(raw.scan, command)?;
    Ok(RunConfig {
        command,
        family,
        trace,
        census,
        scan,
        out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from(".")),
        prefix: raw.output.prefix.unwrap_or_else(|| command.name().to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"
command = "discriminant"
[family]
kind = "canonical"
a = 1
b = "0"
c = "2/1"
"#;

    #[test]
    fn canonical_block() {
        let cfg = parse_config(CANONICAL).unwrap();
        assert_eq!(cfg.command, Command::Discriminant);
        match cfg.family.unwrap() {
            FamilySpec::Canonical { a, b, c } => {
                assert_eq!((a, b, c), (Rational::from_integer(1.into()), Rational::from_integer(0.into()), Rational::from_integer(2.into())));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.scan.r_param, 0.03);
        assert_eq!(cfg.trace, TraceConfig::default());
        assert_eq!(cfg.prefix, "discriminant");
    }

    #[test]
    fn equal_b_and_c_rejected() {
        let e = parse_config(&CANONICAL.replace("c = \"2/1\"", "c = \"0/5\"")).unwrap_err();
        assert!(e.0.contains("b = c"), "{e}");
    }

    #[test]
    fn negative_exponent_rejected() {
        let text = r#"
command = "trace-vertex-set"
[family]
kind = "polynomial"
terms = [ { x_exp = -1, y_exp = 2, coeff = "1" } ]
"#;
        let e = parse_config(text).unwrap_err();
        assert!(e.0.contains("x_exp") || e.0.contains("invalid value"), "{e}");
    }

    #[test]
    fn unknown_keys_rejected() {
        for extra in ["[trace]\nradus = 0.1\n", "[scan]\nfoo = 1\n", "bogus = 1\n"] {
            let text = if extra.starts_with('[') {
                format!("{CANONICAL}{extra}")
            } else {
                format!("{extra}{CANONICAL}")
            };
            assert!(parse_config(&text).is_err(), "{extra}");
        }
    }

    #[test]
    fn example_surface_round_trips() {
        let text = r#"
command = "trace-vertex-set"
[family]
kind = "polynomial"
params = ["lambda", "mu"]
terms = [
  { x_exp = 2, y_exp = 0, coeff = "1 + lambda" },
  { x_exp = 0, y_exp = 2, coeff = "1 - lambda" },
  { x_exp = 1, y_exp = 1, coeff = "2*mu" },
  { x_exp = 3, y_exp = 0, coeff = 1 },
  { x_exp = 0, y_exp = 3, coeff = "-1" },
]
"#;
        let cfg = parse_config(text).unwrap();
        let expected = ParamPoly::parse("x^2+y^2+x^3-y^3+lambda*(x^2-y^2)+2*mu*x*y", &["lambda", "mu"]).unwrap();
        assert_eq!(cfg.family.unwrap(), FamilySpec::Polynomial(expected));
    }

    #[test]
    fn knobs_are_validated() {
        for bad in ["[trace]\nresolution = 8\n", "[trace]\ntrace_tol = 0.0\n", "[scan]\nfan = 4\n", "[trace]\ndeg_tol = -1\n"] {
            assert!(parse_config(&format!("{CANONICAL}{bad}")).is_err(), "{bad}");
        }
    }

    #[test]
    fn command_specific_requirements() {
        assert!(parse_config("command = \"kstar\"\n[family]\nkind = \"canonical\"\na = 1\nb = 0\nc = 2\n").is_err());
        assert!(parse_config("command = \"cup-reference\"\n").is_ok());
        assert!(parse_config("command = \"verify\"\n[scan]\nsuite = \"nope\"\n").is_err());
        assert!(parse_config("command = \"trace-vertex-set\"\n").is_err());
        assert!(parse_config("command = \"draw\"\n").is_err());
    }
}
