//! Matrix Market reader for dense (`array`) and sparse (`coordinate`)
//! files with real, integer or complex entries.

use num_complex::Complex64;
use semiflow::matrixkit::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct MtxError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, MtxError> {
    Err(MtxError { line, message: message.into() })
}

pub fn parse(text: &str) -> Result<DenseMatrix, MtxError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (_, header) = lines.next().ok_or(MtxError { line: 1, message: "empty file".into() })?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return err(1, "expected header `%%MatrixMarket matrix <format> <field> <symmetry>`");
    }
    let layout = match words[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return err(1, format!("unsupported format `{other}`")),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        other => return err(1, format!("unsupported field `{other}`")),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return err(1, format!("unsupported symmetry `{other}`")),
    };
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return err(1, "hermitian symmetry requires complex entries");
    }

    let mut data = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = data.next().ok_or(MtxError { line: 1, message: "missing size line".into() })?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .or_else(|_| err(size_line, "size line must hold non-negative integers"))?;
    let expected = if layout == Layout::Array { 2 } else { 3 };
    if dims.len() != expected {
        return err(size_line, format!("size line must hold {expected} integers"));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows == 0 || cols == 0 {
        return err(size_line, "matrix dimensions must be positive");
    }
    if symmetry != Symmetry::General && rows != cols {
        return err(size_line, "symmetric storage requires a square matrix");
    }

    let value = |line: usize, tokens: &[&str]| -> Result<Complex64, MtxError> {
        let want = if field == Field::Complex { 2 } else { 1 };
        if tokens.len() != want {
            return err(line, format!("expected {want} value(s), found {}", tokens.len()));
        }
        let parse = |t: &str| -> Result<f64, MtxError> {
            let v = if field == Field::Integer {
                t.parse::<i64>().map(|v| v as f64).or_else(|_| err(line, format!("invalid integer `{t}`")))?
            } else {
                t.parse::<f64>().or_else(|_| err(line, format!("invalid number `{t}`")))?
            };
            if v.is_finite() {
                Ok(v)
            } else {
                err(line, format!("non-finite value `{t}`"))
            }
        };
        let re = parse(tokens[0])?;
        let im = if want == 2 { parse(tokens[1])? } else { 0.0 };
        Ok(Complex64::new(re, im))
    };

    let mut out = DenseMatrix::zeros(rows, cols);
    let mut place = |i: usize, j: usize, v: Complex64| {
        out.set(i, j, v);
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => out.set(j, i, v),
                Symmetry::SkewSymmetric => out.set(j, i, -v),
                Symmetry::Hermitian => out.set(j, i, v.conj()),
            }
        }
    };

    match layout {
        Layout::Array => {
            // Column-major; symmetric variants store the lower triangle only.
            let mut slots = Vec::new();
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::SkewSymmetric => j + 1,
                    _ => j,
                };
                slots.extend((start..rows).map(|i| (i, j)));
            }
            let mut count = 0;
            for (line, text) in data {
                let tokens: Vec<&str> = text.split_whitespace().collect();
                let Some(&(i, j)) = slots.get(count) else {
                    return err(line, format!("more than {} entries", slots.len()));
                };
                place(i, j, value(line, &tokens)?);
                count += 1;
            }
            if count != slots.len() {
                return err(size_line, format!("expected {} entries, found {count}", slots.len()));
            }
        }
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut count = 0;
            for (line, text) in data {
                let tokens: Vec<&str> = text.split_whitespace().collect();
                if tokens.len() < 3 {
                    return err(line, "coordinate entry needs `row col value`");
                }
                let index = |t: &str, bound: usize| -> Result<usize, MtxError> {
                    match t.parse::<usize>() {
                        Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
                        _ => err(line, format!("index `{t}` outside 1..={bound}")),
                    }
                };
                let (i, j) = (index(tokens[0], rows)?, index(tokens[1], cols)?);
                if symmetry != Symmetry::General && i < j {
                    return err(line, "symmetric storage expects entries on or below the diagonal");
                }
                place(i, j, value(line, &tokens[2..])?);
                count += 1;
            }
            if count != nnz {
                return err(size_line, format!("expected {nnz} entries, found {count}"));
            }
        }
    }
    Ok(out)
}
