//! TOML model configuration.
//!
//! ```toml
//! [meta]
//! n = 2
//! omega = 1.0
//!
//! [coefficients]
//! d = ["2 + 0.5*sin2(1)", "3"]
//! a = [["0", "0.5*cos(2)"], ["0.2", "0"]]
//! tau = [["0", "1"], ["0.5", "0"]]      # optional, zero by default
//! inputs = ["sin(2)", "0"]                # optional, zero by default
//! # an expression may also be a term list:
//! # [{ const = 2.0 }, { amp = 0.5, fn = "sin2", k = 1 }]
//!
//! [activations]
//! g = ["tanh", "tanh"]
//! f = ["arctan", { kind = "satlin", slope = 1.0, cap = 2.0 }]
//!
//! [[kernels]]                              # couplings without an entry are absent
//! i = 1
//! j = 2
//! atoms = [{ s = 0.0, w = "0.3" }]
//! density = { shape = "exponential", rate = 2.0, weight = "0.1" }
//! ```

use std::fmt::Write as _;

use serde::Deserialize;

use periodyn::kernels::{Atom, DelayKernel, Density, DensityShape};
use periodyn::model::{Activation, ActivationKind, NetworkModel, PeriodicExpr, SquareMatrix, Term, Wave};

use crate::expr::{parse_expr, ExprError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{field}: {source}")]
    Expr {
        field: String,
        #[source]
        source: ExprError,
    },
    #[error("{0}")]
    Shape(String),
}

fn shape(msg: impl Into<String>) -> ConfigError {
    ConfigError::Shape(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    meta: RawMeta,
    coefficients: RawCoefficients,
    activations: RawActivations,
    #[serde(default)]
    kernels: Vec<RawKernel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    n: usize,
    omega: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoefficients {
    d: Vec<RawExpr>,
    a: Vec<Vec<RawExpr>>,
    tau: Option<Vec<Vec<RawExpr>>>,
    inputs: Option<Vec<RawExpr>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawExpr {
    Text(String),
    Terms(Vec<RawTerm>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    #[serde(rename = "const")]
    constant: Option<f64>,
    amp: Option<f64>,
    #[serde(rename = "fn")]
    wave: Option<String>,
    k: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActivations {
    g: Vec<RawActivation>,
    f: Vec<RawActivation>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawActivation {
    Name(String),
    Table(RawActivationTable),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActivationTable {
    kind: String,
    slope: Option<f64>,
    cap: Option<f64>,
    lipschitz: Option<f64>,
    offset: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    i: usize,
    j: usize,
    #[serde(default)]
    atoms: Vec<RawAtom>,
    density: Option<RawDensity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    s: f64,
    w: RawExpr,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    shape: String,
    rate: Option<f64>,
    width: Option<f64>,
    values: Option<Vec<f64>>,
    weight: RawExpr,
}

fn expr(field: impl Into<String>, raw: &RawExpr) -> Result<PeriodicExpr, ConfigError> {
    let field = field.into();
    match raw {
        RawExpr::Text(src) => parse_expr(src).map_err(|source| ConfigError::Expr { field, source }),
        RawExpr::Terms(terms) => terms
            .iter()
            .enumerate()
            .map(|(m, t)| term(t).map_err(|msg| shape(format!("{field} term {}: {msg}", m + 1))))
            .collect::<Result<Vec<_>, _>>()
            .map(PeriodicExpr::from_terms),
    }
}

fn term(t: &RawTerm) -> Result<Term, String> {
    match (t.constant, t.amp, &t.wave, t.k) {
        (Some(c), None, None, None) => Ok(Term::Const(c)),
        (None, Some(amp), Some(name), Some(k)) if k >= 1 => Wave::from_name(name)
            .map(|wave| Term::Wave { amp, wave, k })
            .ok_or_else(|| format!("unknown wave '{name}'")),
        _ => Err("expected { const } or { amp, fn, k } with k >= 1".into()),
    }
}

fn vector(name: &str, n: usize, items: &[RawExpr]) -> Result<Vec<PeriodicExpr>, ConfigError> {
    if items.len() != n {
        return Err(shape(format!("coefficients.{name} has {} entries, expected {n}", items.len())));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, s)| expr(format!("coefficients.{name}[{}]", i + 1), s))
        .collect()
}

fn matrix(name: &str, n: usize, rows: &[Vec<RawExpr>]) -> Result<SquareMatrix<PeriodicExpr>, ConfigError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(shape(format!("coefficients.{name} must be {n} x {n}")));
    }
    let mut out = SquareMatrix::filled(n, PeriodicExpr::zero());
    for (i, row) in rows.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            out[(i, j)] = expr(format!("coefficients.{name}[{}][{}]", i + 1, j + 1), s)?;
        }
    }
    Ok(out)
}

fn parse_name(name: &str) -> Option<ActivationKind> {
    match name {
        "tanh" => Some(ActivationKind::Tanh),
        "arctan" => Some(ActivationKind::Arctan),
        "identity" => Some(ActivationKind::Identity),
        "zero" => Some(ActivationKind::Zero),
        _ => {
            let args = name.strip_prefix("satlin(")?.strip_suffix(')')?;
            let (slope, cap) = args.split_once(',')?;
            Some(ActivationKind::SatLin {
                slope: slope.trim().parse().ok()?,
                cap: cap.trim().parse().ok()?,
            })
        }
    }
}

fn activation(field: &str, raw: &RawActivation) -> Result<Activation, ConfigError> {
    match raw {
        RawActivation::Name(name) => parse_name(name)
            .map(Activation::new)
            .ok_or_else(|| shape(format!("{field}: unknown activation '{name}'"))),
        RawActivation::Table(t) => {
            let kind = match t.kind.as_str() {
                "satlin" => match (t.slope, t.cap) {
                    (Some(slope), Some(cap)) => ActivationKind::SatLin { slope, cap },
                    _ => return Err(shape(format!("{field}: satlin needs slope and cap"))),
                },
                other => {
                    if t.slope.is_some() || t.cap.is_some() {
                        return Err(shape(format!("{field}: slope/cap only apply to satlin")));
                    }
                    parse_name(other).ok_or_else(|| shape(format!("{field}: unknown activation '{other}'")))?
                }
            };
            let base = Activation::new(kind);
            Ok(Activation::with_constants(
                kind,
                t.lipschitz.unwrap_or(base.lipschitz),
                t.offset.unwrap_or(base.offset),
            ))
        }
    }
}

fn kernel(raw: &RawKernel) -> Result<DelayKernel, ConfigError> {
    let field = format!("kernels[i={}, j={}]", raw.i, raw.j);
    let atoms = raw
        .atoms
        .iter()
        .enumerate()
        .map(|(k, a)| {
            Ok(Atom {
                location: a.s,
                weight: expr(format!("{field}.atoms[{}].w", k + 1), &a.w)?,
            })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let density = match &raw.density {
        None => None,
        Some(d) => {
            let need = |v: Option<f64>, key: &str| v.ok_or_else(|| shape(format!("{field}.density: {} needs '{key}'", d.shape)));
            let shape_value = match d.shape.as_str() {
                "exponential" => DensityShape::Exponential { rate: need(d.rate, "rate")? },
                "uniform" => DensityShape::Uniform { width: need(d.width, "width")? },
                "table" => DensityShape::Table {
                    width: need(d.width, "width")?,
                    values: d
                        .values
                        .clone()
                        .ok_or_else(|| shape(format!("{field}.density: table needs 'values'")))?,
                },
                other => return Err(shape(format!("{field}.density: unknown shape '{other}'"))),
            };
            Some(Density {
                shape: shape_value,
                weight: expr(format!("{field}.density.weight"), &d.weight)?,
            })
        }
    };
    let k = DelayKernel { atoms, density };
    k.validate().map_err(|e| shape(format!("{field}: {e}")))?;
    Ok(k)
}

/// Parses a configuration document into a model. Admissibility (positivity,
/// periodicity, activation constants) is checked separately by `validate`.
pub fn parse_config(text: &str) -> Result<NetworkModel, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let n = raw.meta.n;
    if n == 0 {
        return Err(shape("meta.n must be positive"));
    }
    let mut m = NetworkModel::zeros(n, raw.meta.omega);
    let c = &raw.coefficients;
    m.d = vector("d", n, &c.d)?;
    m.a = matrix("a", n, &c.a)?;
    if let Some(tau) = &c.tau {
        m.tau = matrix("tau", n, tau)?;
    }
    if let Some(inputs) = &c.inputs {
        m.inputs = vector("inputs", n, inputs)?;
    }
    for (name, list) in [("g", &raw.activations.g), ("f", &raw.activations.f)] {
        if list.len() != n {
            return Err(shape(format!("activations.{name} has {} entries, expected {n}", list.len())));
        }
    }
    m.g = raw
        .activations
        .g
        .iter()
        .enumerate()
        .map(|(i, a)| activation(&format!("activations.g[{}]", i + 1), a))
        .collect::<Result<_, _>>()?;
    m.f = raw
        .activations
        .f
        .iter()
        .enumerate()
        .map(|(i, a)| activation(&format!("activations.f[{}]", i + 1), a))
        .collect::<Result<_, _>>()?;
    let mut seen = SquareMatrix::filled(n, false);
    for k in &raw.kernels {
        if k.i == 0 || k.j == 0 || k.i > n || k.j > n {
            return Err(shape(format!("kernel index ({}, {}) outside 1..={n}", k.i, k.j)));
        }
        let (i, j) = (k.i - 1, k.j - 1);
        if seen[(i, j)] {
            return Err(shape(format!("kernel ({}, {}) listed twice", k.i, k.j)));
        }
        seen[(i, j)] = true;
        m.kernels[(i, j)] = kernel(k)?;
    }
    Ok(m)
}

fn quoted(e: &PeriodicExpr) -> String {
    format!("\"{e}\"")
}

fn activation_text(a: &Activation) -> String {
    let base = Activation::new(a.kind);
    let name = match a.kind {
        ActivationKind::Tanh => "tanh".to_string(),
        ActivationKind::Arctan => "arctan".to_string(),
        ActivationKind::Identity => "identity".to_string(),
        ActivationKind::Zero => "zero".to_string(),
        ActivationKind::SatLin { slope, cap } => format!("satlin({slope:?}, {cap:?})"),
    };
    if a.lipschitz == base.lipschitz && a.offset == base.offset {
        return format!("\"{name}\"");
    }
    match a.kind {
        ActivationKind::SatLin { slope, cap } => format!(
            "{{ kind = \"satlin\", slope = {slope:?}, cap = {cap:?}, lipschitz = {:?}, offset = {:?} }}",
            a.lipschitz, a.offset
        ),
        _ => format!("{{ kind = \"{name}\", lipschitz = {:?}, offset = {:?} }}", a.lipschitz, a.offset),
    }
}

fn list(items: impl Iterator<Item = String>) -> String {
    format!("[{}]", items.collect::<Vec<_>>().join(", "))
}

/// Canonical text of a model; `parse_config` of the result reproduces it.
pub fn to_config(m: &NetworkModel) -> String {
    let n = m.n;
    let mut s = String::new();
    let _ = writeln!(s, "[meta]\nn = {n}\nomega = {:?}\n", m.omega);
    let _ = writeln!(s, "[coefficients]");
    let _ = writeln!(s, "d = {}", list(m.d.iter().map(quoted)));
    let rows = |mat: &SquareMatrix<PeriodicExpr>| {
        (0..n)
            .map(|i| format!("  {},\n", list(mat.row(i).iter().map(quoted))))
            .collect::<String>()
    };
    let _ = writeln!(s, "a = [\n{}]", rows(&m.a));
    let _ = writeln!(s, "tau = [\n{}]", rows(&m.tau));
    let _ = writeln!(s, "inputs = {}\n", list(m.inputs.iter().map(quoted)));
    let _ = writeln!(s, "[activations]");
    let _ = writeln!(s, "g = {}", list(m.g.iter().map(activation_text)));
    let _ = writeln!(s, "f = {}", list(m.f.iter().map(activation_text)));
    for ((i, j), k) in m.kernels.iter() {
        if k.is_empty() {
            continue;
        }
        let _ = writeln!(s, "\n[[kernels]]\ni = {}\nj = {}", i + 1, j + 1);
        if !k.atoms.is_empty() {
            let atoms = k
                .atoms
                .iter()
                .map(|a| format!("{{ s = {:?}, w = {} }}", a.location, quoted(&a.weight)));
            let _ = writeln!(s, "atoms = {}", list(atoms));
        }
        if let Some(d) = &k.density {
            let body = match &d.shape {
                DensityShape::Exponential { rate } => format!("shape = \"exponential\", rate = {rate:?}"),
                DensityShape::Uniform { width } => format!("shape = \"uniform\", width = {width:?}"),
                DensityShape::Table { width, values } => format!(
                    "shape = \"table\", width = {width:?}, values = {}",
                    list(values.iter().map(|v| format!("{v:?}")))
                ),
            };
            let _ = writeln!(s, "density = {{ {body}, weight = {} }}", quoted(&d.weight));
        }
    }
    s
}
