//! JSON documents for generators, dense matrices and vectors.
//!
//! Generators: `{"kind": "hankel"|"toeplitz", "order": n, "gen": [...]}`.
//! Dense matrices: `{"kind": "dense", "rows": r, "cols": c, "entries": [...]}`
//! row-major; a square matrix may give `"order"` instead of rows and cols.
//! Scalars are `[re, im]` pairs or plain reals.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::structured::{HankelGen, ToeplitzGen};
use crate::C64;

#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Scalar> for C64 {
    fn from(s: Scalar) -> C64 {
        match s {
            Scalar::Real(r) => C64::new(r, 0.0),
            Scalar::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
struct RawDoc {
    kind: String,
    order: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
    gen: Option<Vec<Scalar>>,
    entries: Option<Vec<Scalar>>,
}

#[derive(Serialize)]
struct GenOut<'a> {
    kind: &'a str,
    order: usize,
    gen: &'a [C64],
}

#[derive(Serialize)]
struct DenseOut<'a> {
    kind: &'a str,
    rows: usize,
    cols: usize,
    entries: &'a [C64],
}

/// Any matrix document.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixDoc {
    Hankel(HankelGen),
    Toeplitz(ToeplitzGen),
    Dense(DenseMatrix),
}

impl MatrixDoc {
    pub fn kind(&self) -> &'static str {
        match self {
            MatrixDoc::Hankel(_) => "hankel",
            MatrixDoc::Toeplitz(_) => "toeplitz",
            MatrixDoc::Dense(_) => "dense",
        }
    }

    pub fn order(&self) -> usize {
        match self {
            MatrixDoc::Hankel(h) => h.order(),
            MatrixDoc::Toeplitz(t) => t.order(),
            MatrixDoc::Dense(m) => m.rows(),
        }
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<DenseMatrix> {
        match self {
            MatrixDoc::Hankel(h) => h.materialize_with_cap(cap),
            MatrixDoc::Toeplitz(t) => t.materialize_with_cap(cap),
            MatrixDoc::Dense(m) => Ok(m.clone()),
        }
    }
}

fn shape_error(message: String) -> Error {
    Error::Parse {
        line: 0,
        column: 0,
        message,
    }
}

fn check_order(kind: &str, order: Option<usize>, got: usize) -> Result<()> {
    match order {
        Some(n) if n != got => Err(shape_error(format!(
            "{kind} document declares order {n} but its data implies {got}"
        ))),
        _ => Ok(()),
    }
}

pub fn parse_matrix(text: &str) -> Result<MatrixDoc> {
    let raw: RawDoc = serde_json::from_str(text)?;
    let scalars = |v: Option<Vec<Scalar>>, field: &str| -> Result<Vec<C64>> {
        v.map(|s| s.into_iter().map(C64::from).collect())
            .ok_or_else(|| shape_error(format!("missing \"{field}\"")))
    };
    match raw.kind.as_str() {
        "hankel" => {
            let gen = scalars(raw.gen, "gen")?;
            if gen.len() % 2 == 0 {
                return Err(shape_error(format!(
                    "hankel generator length {} is not 2n−1",
                    gen.len()
                )));
            }
            check_order("hankel", raw.order, gen.len().div_ceil(2))?;
            Ok(MatrixDoc::Hankel(HankelGen::new(gen)?))
        }
        "toeplitz" => {
            let gen = scalars(raw.gen, "gen")?;
            check_order("toeplitz", raw.order, gen.len())?;
            Ok(MatrixDoc::Toeplitz(ToeplitzGen::new(gen)?))
        }
        "dense" => {
            let entries = scalars(raw.entries, "entries")?;
            let (rows, cols) = match (raw.rows, raw.cols, raw.order) {
                (Some(r), Some(c), _) => (r, c),
                (None, None, Some(n)) => (n, n),
                _ => return Err(shape_error("dense document needs rows and cols, or order".into())),
            };
            if let Some(n) = raw.order {
                if n != rows || n != cols {
                    return Err(shape_error(format!("order {n} disagrees with {rows}x{cols}")));
                }
            }
            if entries.len() != rows * cols {
                return Err(shape_error(format!(
                    "{} entries for a {rows}x{cols} matrix",
                    entries.len()
                )));
            }
            Ok(MatrixDoc::Dense(DenseMatrix::new(rows, cols, entries)?))
        }
        other => Err(shape_error(format!("unknown kind {other:?}"))),
    }
}

pub fn hankel_to_json(h: &HankelGen) -> Result<String> {
    Ok(serde_json::to_string(&GenOut {
        kind: "hankel",
        order: h.order(),
        gen: h.gen(),
    })?)
}

pub fn toeplitz_to_json(t: &ToeplitzGen) -> Result<String> {
    Ok(serde_json::to_string(&GenOut {
        kind: "toeplitz",
        order: t.order(),
        gen: t.gen(),
    })?)
}

pub fn dense_to_json(m: &DenseMatrix) -> Result<String> {
    Ok(serde_json::to_string(&DenseOut {
        kind: "dense",
        rows: m.rows(),
        cols: m.cols(),
        entries: m.entries(),
    })?)
}

pub fn matrix_to_json(doc: &MatrixDoc) -> Result<String> {
    match doc {
        MatrixDoc::Hankel(h) => hankel_to_json(h),
        MatrixDoc::Toeplitz(t) => toeplitz_to_json(t),
        MatrixDoc::Dense(m) => dense_to_json(m),
    }
}

/// A vector as a JSON array of scalars, or `{"x": [...]}`.
pub fn parse_vector(text: &str) -> Result<Vec<C64>> {
    let v: Value = serde_json::from_str(text)?;
    let arr = match v {
        Value::Object(mut o) => o
            .remove("x")
            .ok_or_else(|| shape_error("vector object needs \"x\"".into()))?,
        other => other,
    };
    let s: Vec<Scalar> = serde_json::from_value(arr)?;
    let out: Vec<C64> = s.into_iter().map(C64::from).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Rejected("non-finite vector entry".into()));
    }
    Ok(out)
}

pub fn vector_to_json(x: &[C64]) -> Result<String> {
    Ok(serde_json::to_string(x)?)
}
