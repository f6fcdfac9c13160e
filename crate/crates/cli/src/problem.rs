//! JSON problem files.
//!
//! ```json
//! {
//!   "kind": "stein",
//!   "matrices": {
//!     "A": [[0.5, 0.1], [0.0, 0.4]],
//!     "B": [[[0.3, 0.1], [0, 0]], [[0, 0], [0.2, -0.1]]],
//!     "C": "c.mtx"
//!   }
//! }
//! ```
//!
//! Matrix entries are either numbers or `[re, im]` pairs; a string is a
//! Matrix Market path relative to the problem file. Scalar kinds use the
//! top-level fields `a`, `b`, `x1`, `y1` instead of `matrices`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::Value;

use semiflow::dare::DareState;
use semiflow::matrixkit::DenseMatrix;
use semiflow::pencil::PencilState;
use semiflow::scalar::{LinearScalarProblem, PairProblem, RationalScalarProblem};
use semiflow::stein::SteinState;

use crate::mtx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Stein,
    Pencil,
    Nme,
    Dare,
    ScalarLinear,
    ScalarRational,
    ScalarPair,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Stein,
        Kind::Pencil,
        Kind::Nme,
        Kind::Dare,
        Kind::ScalarLinear,
        Kind::ScalarRational,
        Kind::ScalarPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Stein => "stein",
            Kind::Pencil => "pencil",
            Kind::Nme => "nme",
            Kind::Dare => "dare",
            Kind::ScalarLinear => "scalar-linear",
            Kind::ScalarRational => "scalar-rational",
            Kind::ScalarPair => "scalar-pair",
        }
    }

    fn matrices(self) -> &'static [&'static str] {
        match self {
            Kind::Stein => &["A", "B", "C"],
            Kind::Pencil => &["A", "B"],
            Kind::Nme => &["Q", "A", "B"],
            Kind::Dare => &["A", "G", "H"],
            _ => &[],
        }
    }

    fn scalars(self) -> &'static [&'static str] {
        match self {
            Kind::Pencil => &["m"],
            Kind::ScalarLinear => &["a", "b", "x1"],
            Kind::ScalarRational => &["a", "b"],
            Kind::ScalarPair => &["x1", "y1"],
            _ => &[],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub enum Problem {
    Stein(SteinState),
    Pencil { state: PencilState, m: usize },
    Nme { q: DenseMatrix, a: DenseMatrix, b: DenseMatrix },
    Dare(DareState),
    ScalarLinear(LinearScalarProblem),
    ScalarRational(RationalScalarProblem),
    ScalarPair(PairProblem),
}

impl Problem {
    pub fn kind(&self) -> Kind {
        match self {
            Problem::Stein(_) => Kind::Stein,
            Problem::Pencil { .. } => Kind::Pencil,
            Problem::Nme { .. } => Kind::Nme,
            Problem::Dare(_) => Kind::Dare,
            Problem::ScalarLinear(_) => Kind::ScalarLinear,
            Problem::ScalarRational(_) => Kind::ScalarRational,
            Problem::ScalarPair(_) => Kind::ScalarPair,
        }
    }
}

/// A problem file could not be turned into a [`Problem`]. `field` names the
/// offending JSON path when one is known.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", field.as_ref().map(|f| format!("{f}: ")).unwrap_or_default())]
pub struct InputError {
    pub field: Option<String>,
    pub message: String,
}

impl InputError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { field: None, message: message.into() }
    }

    pub fn at(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: Some(field.into()), message: message.into() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: String,
    #[serde(default)]
    matrices: BTreeMap<String, Value>,
    m: Option<Value>,
    a: Option<Value>,
    b: Option<Value>,
    x1: Option<Value>,
    y1: Option<Value>,
}

impl RawProblem {
    fn scalar_field(&self, name: &str) -> Option<&Value> {
        match name {
            "m" => self.m.as_ref(),
            "a" => self.a.as_ref(),
            "b" => self.b.as_ref(),
            "x1" => self.x1.as_ref(),
            "y1" => self.y1.as_ref(),
            _ => None,
        }
    }
}

pub fn load(path: &Path) -> Result<Problem, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError::new(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, &base)
}

/// Parses problem JSON; Matrix Market paths resolve against `base`.
pub fn parse(text: &str, base: &Path) -> Result<Problem, InputError> {
    let raw: RawProblem =
        serde_json::from_str(text).map_err(|e| InputError::new(format!("invalid problem JSON: {e}")))?;
    let kind = Kind::ALL
        .into_iter()
        .find(|k| k.name() == raw.kind)
        .ok_or_else(|| {
            let names: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
            InputError::at("kind", format!("unknown kind `{}` (expected one of {})", raw.kind, names.join(", ")))
        })?;

    for name in raw.matrices.keys() {
        if !kind.matrices().contains(&name.as_str()) {
            return Err(InputError::at(format!("matrices.{name}"), format!("not used by kind {kind}")));
        }
    }
    for name in ["m", "a", "b", "x1", "y1"] {
        if raw.scalar_field(name).is_some() && !kind.scalars().contains(&name) {
            return Err(InputError::at(name, format!("not used by kind {kind}")));
        }
    }

    let matrix = |name: &str| -> Result<DenseMatrix, InputError> {
        let field = format!("matrices.{name}");
        let value = raw.matrices.get(name).ok_or_else(|| InputError::at(&field, "missing"))?;
        matrix_value(value, base, &field)
    };
    let scalar = |name: &str| -> Result<Complex64, InputError> {
        let value = raw.scalar_field(name).ok_or_else(|| InputError::at(name, "missing"))?;
        complex_value(value).ok_or_else(|| InputError::at(name, "expected a number or [re, im]"))
    };
    let shape_error = |e: semiflow::matrixkit::LinalgError| InputError::at("matrices", e.to_string());

    Ok(match kind {
        Kind::Stein => Problem::Stein(SteinState::new(matrix("A")?, matrix("B")?, matrix("C")?).map_err(shape_error)?),
        Kind::Pencil => {
            let state = PencilState::new(matrix("A")?, matrix("B")?).map_err(shape_error)?;
            let m = raw
                .m
                .as_ref()
                .ok_or_else(|| InputError::at("m", "missing"))?
                .as_u64()
                .filter(|&m| m >= 1 && m as usize <= state.dim())
                .ok_or_else(|| InputError::at("m", format!("expected an integer in 1..={}", state.dim())))?;
            Problem::Pencil { state, m: m as usize }
        }
        Kind::Nme => {
            let (q, a, b) = (matrix("Q")?, matrix("A")?, matrix("B")?);
            semiflow::nme::NmeState::initial(&q, &a, &b).map_err(shape_error)?;
            Problem::Nme { q, a, b }
        }
        Kind::Dare => Problem::Dare(DareState::new(matrix("A")?, matrix("G")?, matrix("H")?).map_err(shape_error)?),
        Kind::ScalarLinear => {
            let x1 = if raw.x1.is_some() { scalar("x1")? } else { Complex64::default() };
            Problem::ScalarLinear(LinearScalarProblem::new(scalar("a")?, scalar("b")?, x1))
        }
        Kind::ScalarRational => Problem::ScalarRational(
            RationalScalarProblem::new(scalar("a")?, scalar("b")?).map_err(|e| InputError::at("b", e.to_string()))?,
        ),
        Kind::ScalarPair => Problem::ScalarPair(
            PairProblem::new(scalar("x1")?, scalar("y1")?).map_err(|e| InputError::at("x1", e.to_string()))?,
        ),
    })
}

fn complex_value(v: &Value) -> Option<Complex64> {
    match v {
        Value::Number(n) => n.as_f64().map(|re| Complex64::new(re, 0.0)),
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0].as_f64()?;
            let im = pair[1].as_f64()?;
            Some(Complex64::new(re, im))
        }
        _ => None,
    }
}

fn matrix_value(value: &Value, base: &Path, field: &str) -> Result<DenseMatrix, InputError> {
    match value {
        Value::String(rel) => {
            let path: PathBuf = base.join(rel);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| InputError::at(field, format!("cannot read {}: {e}", path.display())))?;
            mtx::parse(&text).map_err(|e| InputError::at(field, format!("{}: {e}", path.display())))
        }
        Value::Array(rows) => {
            if rows.is_empty() {
                return Err(InputError::at(field, "matrix has no rows"));
            }
            let mut cols = None;
            let mut entries = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .ok_or_else(|| InputError::at(format!("{field}[{i}]"), "expected an array of entries"))?;
                match cols {
                    None => cols = Some(row.len()),
                    Some(c) if c != row.len() => {
                        return Err(InputError::at(
                            format!("{field}[{i}]"),
                            format!("row has {} entries, expected {c}", row.len()),
                        ))
                    }
                    _ => {}
                }
                for (j, entry) in row.iter().enumerate() {
                    let z = complex_value(entry).ok_or_else(|| {
                        InputError::at(format!("{field}[{i}][{j}]"), "expected a number or [re, im]")
                    })?;
                    entries.push(z);
                }
            }
            DenseMatrix::from_row_major(rows.len(), cols.unwrap_or(0), entries)
                .map_err(|e| InputError::at(field, e.to_string()))
        }
        _ => Err(InputError::at(field, "expected a 2-D array or a Matrix Market path")),
    }
}

/// Inline JSON form of a matrix: rows of `[re, im]` pairs.
pub fn matrix_to_json(m: &DenseMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| {
                Value::Array(
                    (0..m.cols())
                        .map(|j| {
                            let z = m.get(i, j);
                            serde_json::json!([z.re, z.im])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Problem JSON for a matrix problem, inlining every matrix.
pub fn problem_to_json(problem: &Problem) -> Value {
    let mats = |pairs: &[(&str, &DenseMatrix)]| -> Value {
        Value::Object(pairs.iter().map(|(k, m)| (k.to_string(), matrix_to_json(m))).collect())
    };
    let c = |z: Complex64| serde_json::json!([z.re, z.im]);
    let kind = problem.kind().name();
    match problem {
        Problem::Stein(s) => serde_json::json!({"kind": kind, "matrices": mats(&[("A", &s.a), ("B", &s.b), ("C", &s.c)])}),
        Problem::Pencil { state, m } => {
            serde_json::json!({"kind": kind, "m": m, "matrices": mats(&[("A", &state.a), ("B", &state.b)])})
        }
        Problem::Nme { q, a, b } => serde_json::json!({"kind": kind, "matrices": mats(&[("Q", q), ("A", a), ("B", b)])}),
        Problem::Dare(d) => serde_json::json!({"kind": kind, "matrices": mats(&[("A", &d.a), ("G", &d.g), ("H", &d.h)])}),
        Problem::ScalarLinear(p) => serde_json::json!({"kind": kind, "a": c(p.a), "b": c(p.b), "x1": c(p.x1)}),
        Problem::ScalarRational(p) => serde_json::json!({"kind": kind, "a": c(p.a), "b": c(p.b)}),
        Problem::ScalarPair(p) => serde_json::json!({"kind": kind, "x1": c(p.x1), "y1": c(p.y1)}),
    }
}
