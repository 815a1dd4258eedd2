//! TOML system files.
//!
//! ```toml
//! [system]
//! dimension = 3
//! fields = ["phi"]
//!
//! [[term]]
//! equation = "phi"
//! source = "phi"
//! derivative = "none"   # none | dt | du | dv
//! power = "3"           # "p/q", decimal, or integer; kept exact
//! coefficient = 1.0
//! t_weight = 0
//! u_weight = 0
//!
//! [data.phi]
//! kind = "compact"      # compact | tail
//! tail_exponent = "3/2" # tail only
//! amplitude = 0.01
//! support = 1.0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use wavecrit::decay_rules::{DataKind, DataSpec, Derivative, NonlinearTerm, WaveSystem};
use wavecrit::{Rational, WaveSystemQ};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

/// Parses `-3/4`, `2.35`, `1e-3` or `7` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        return (!d.is_zero()).then(|| Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(digits);
    if scale >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    fn exact(&self) -> Option<Rational> {
        match self {
            Number::Int(i) => Some(Rational::from_integer(BigInt::from(*i))),
            // Shortest round-trip formatting recovers the literal as written.
            Number::Float(x) if x.is_finite() => parse_rational(&format!("{x}")),
            Number::Float(_) => None,
            Number::Text(s) => parse_rational(s),
        }
    }

    fn float(&self) -> Option<f64> {
        match self {
            Number::Int(i) => Some(*i as f64),
            Number::Float(x) => Some(*x),
            Number::Text(s) => s.trim().parse().ok().or_else(|| self.exact().and_then(|r| num_traits::ToPrimitive::to_f64(&r))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    dimension: u32,
    fields: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    equation: String,
    source: String,
    #[serde(default = "no_derivative")]
    derivative: Derivative,
    power: Number,
    coefficient: Option<Number>,
    t_weight: Option<Number>,
    u_weight: Option<Number>,
}

fn no_derivative() -> Derivative {
    Derivative::None
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RawKind {
    Compact,
    Tail,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    kind: RawKind,
    tail_exponent: Option<Number>,
    #[serde(default = "one")]
    amplitude: f64,
    #[serde(default = "one")]
    support: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Spanned<RawSystem>,
    #[serde(default)]
    term: Vec<Spanned<RawTerm>>,
    #[serde(default)]
    data: BTreeMap<String, Spanned<RawData>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_config_str(text: &str) -> Result<WaveSystemQ, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let invalid = |span: std::ops::Range<usize>, message: String| ConfigError::Invalid { line: line_of(text, span.start), message };
    let sys_span = raw.system.span();
    let sys = raw.system.into_inner();
    let fields = sys.fields;
    for (k, name) in fields.iter().enumerate() {
        if name.is_empty() || fields[..k].contains(name) {
            return Err(invalid(sys_span, format!("field name {name:?} is empty or repeated")));
        }
    }
    let index = |name: &str| fields.iter().position(|f| f == name);
    let mut terms = Vec::new();
    for t in raw.term {
        let span = t.span();
        let t = t.into_inner();
        let equation = index(&t.equation).ok_or_else(|| invalid(span.clone(), format!("unknown field {:?}", t.equation)))?;
        let source = index(&t.source).ok_or_else(|| invalid(span.clone(), format!("unknown field {:?}", t.source)))?;
        let exact = |n: &Option<Number>, what: &str| match n {
            None => Ok(Rational::zero()),
            Some(n) => n.exact().ok_or_else(|| invalid(span.clone(), format!("{what} is not a number"))),
        };
        let power = t.power.exact().ok_or_else(|| invalid(span.clone(), "power is not a number".into()))?;
        if power <= Rational::one() {
            return Err(invalid(span, format!("power {} must exceed 1", format_rational(&power))));
        }
        let coefficient = match &t.coefficient {
            None => 1.0,
            Some(n) => n
                .float()
                .filter(|c| c.is_finite())
                .ok_or_else(|| invalid(span.clone(), "coefficient is not a finite number".into()))?,
        };
        terms.push(NonlinearTerm {
            equation,
            source,
            derivative: t.derivative,
            power,
            coefficient,
            t_weight: exact(&t.t_weight, "t_weight")?,
            u_weight: exact(&t.u_weight, "u_weight")?,
        });
    }
    let mut data = vec![None; fields.len()];
    for (name, d) in raw.data {
        let span = d.span();
        let d = d.into_inner();
        let i = index(&name).ok_or_else(|| invalid(span.clone(), format!("data for unknown field {name:?}")))?;
        let kind = match (d.kind, d.tail_exponent) {
            (RawKind::Compact, None) => DataKind::Compact,
            (RawKind::Compact, Some(_)) => {
                return Err(invalid(span, "compact data takes no tail_exponent".into()));
            }
            (RawKind::Tail, Some(q)) => {
                let q = q.exact().ok_or_else(|| invalid(span.clone(), "tail_exponent is not a number".into()))?;
                if !q.is_positive() {
                    return Err(invalid(span, "tail_exponent must be positive".into()));
                }
                DataKind::Tail(q)
            }
            (RawKind::Tail, None) => return Err(invalid(span, "tail data needs tail_exponent".into())),
        };
        if !(d.amplitude.is_finite() && d.support > 0.0 && d.support.is_finite()) {
            return Err(invalid(span, "amplitude must be finite and support positive".into()));
        }
        data[i] = Some(DataSpec { kind, amplitude: d.amplitude, support: d.support });
    }
    let system = WaveSystem { dimension: sys.dimension, fields, terms, data };
    system.validate().map_err(|e| invalid(sys_span, e.to_string()))?;
    Ok(system)
}

pub fn parse_config(path: &Path) -> Result<WaveSystemQ, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config_str(&text)
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

pub fn print_config(sys: &WaveSystemQ) -> String {
    let mut out = String::new();
    let names: Vec<String> = sys.fields.iter().map(|f| quoted(f)).collect();
    let _ = writeln!(out, "[system]\ndimension = {}\nfields = [{}]", sys.dimension, names.join(", "));
    for t in &sys.terms {
        let _ = writeln!(
            out,
            "\n[[term]]\nequation = {}\nsource = {}\nderivative = \"{}\"\npower = \"{}\"\ncoefficient = {:?}\nt_weight = \"{}\"\nu_weight = \"{}\"",
            quoted(&sys.fields[t.equation]),
            quoted(&sys.fields[t.source]),
            t.derivative.name(),
            format_rational(&t.power),
            t.coefficient,
            format_rational(&t.t_weight),
            format_rational(&t.u_weight),
        );
    }
    for (name, d) in sys.fields.iter().zip(&sys.data) {
        let Some(d) = d else { continue };
        let _ = writeln!(out, "\n[data.{}]", quoted(name));
        match &d.kind {
            DataKind::Compact => {
                let _ = writeln!(out, "kind = \"compact\"");
            }
            DataKind::Tail(q) => {
                let _ = writeln!(out, "kind = \"tail\"\ntail_exponent = \"{}\"", format_rational(q));
            }
        }
        let _ = writeln!(out, "amplitude = {:?}\nsupport = {:?}", d.amplitude, d.support);
    }
    out
}
