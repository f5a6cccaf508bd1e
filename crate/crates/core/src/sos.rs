//! Difference-of-squares certificates for even-degree univariate polynomials.
//!
//! p(x) = xᵀHx with x = (1, x, …, x^k) and H the Hankel matrix that spreads
//! each coefficient evenly over its antidiagonal. Factoring H = B·B* − C·C*
//! turns every column into a linear form ℓ with p = Σ± |ℓ(x)|² on the reals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::hankel_factor;
use crate::structured::HankelGen;
use crate::C64;

/// Real polynomial a₀ + a₁x + … + a_d x^d. Trailing zeros are kept, so the
/// degree is always `coeffs.len() − 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Rejected("polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::Rejected("non-finite coefficient".into()));
        }
        Ok(Polynomial { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Accepts `1,2,3`, a JSON array, or `{"coeffs": [...]}`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('[') || t.starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(t)?;
            let arr = match &v {
                serde_json::Value::Array(_) => v.clone(),
                serde_json::Value::Object(o) => o.get("coeffs").cloned().ok_or_else(|| {
                    Error::Parse {
                        line: 1,
                        column: 1,
                        message: "missing \"coeffs\"".into(),
                    }
                })?,
                _ => unreachable!(),
            };
            let coeffs: Vec<f64> = serde_json::from_value(arr)?;
            return Polynomial::new(coeffs);
        }
        let mut coeffs = Vec::new();
        let mut column = 1;
        for piece in t.split(',') {
            let s = piece.trim();
            let a = s.parse::<f64>().map_err(|e| Error::Parse {
                line: 1,
                column,
                message: format!("bad coefficient {s:?}: {e}"),
            })?;
            coeffs.push(a);
            column += piece.len() + 1;
        }
        Polynomial::new(coeffs)
    }
}

/// sign·|b₀ + b₁x + … + b_k x^k|².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareTerm {
    pub sign: i8,
    pub coeffs: Vec<C64>,
}

impl SquareTerm {
    /// Coefficients of ℓ·conj(ℓ) as a real polynomial in real x.
    pub fn expand(&self) -> Vec<f64> {
        let k = self.coeffs.len();
        if k == 0 {
            return Vec::new();
        }
        let mut out = vec![0.0; 2 * k - 1];
        for (r, br) in self.coeffs.iter().enumerate() {
            for (s, bs) in self.coeffs.iter().enumerate() {
                out[r + s] += (br * bs.conj()).re;
            }
        }
        out
    }

    pub fn eval(&self, x: f64) -> f64 {
        let l = self
            .coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, b| acc * x + b);
        self.sign as f64 * l.norm_sqr()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SosCertificate {
    pub terms: Vec<SquareTerm>,
    pub residual: f64,
}

impl SosCertificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn half_degree(p: &Polynomial) -> Result<usize> {
    let d = p.degree();
    if !d.is_multiple_of(2) {
        return Err(Error::Rejected(format!("degree {d} is odd")));
    }
    Ok(d / 2)
}

/// Gram Hankel matrix of order k+1. Coefficient a_m sits on antidiagonal m,
/// which has min(m+1, 2k+1−m) cells.
pub fn gram_hankel(p: &Polynomial) -> Result<HankelGen> {
    let k = half_degree(p)?;
    let gen: Vec<f64> = p
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, a)| a / (m + 1).min(2 * k + 1 - m) as f64)
        .collect();
    HankelGen::from_real(&gen)
}

pub fn sos_decompose(p: &Polynomial) -> Result<Vec<SquareTerm>> {
    let k = half_degree(p)?;
    let pair = hankel_factor(&gram_hankel(p)?)?;
    let mut terms = Vec::new();
    for (node, sign) in [(&pair.b, 1i8), (&pair.c, -1i8)] {
        if node.ncols() == 0 {
            continue;
        }
        let m = node.materialize()?;
        for j in 0..m.cols() {
            let coeffs: Vec<C64> = (0..=k).map(|i| m[(i, j)]).collect();
            if coeffs.iter().any(|z| z.norm() > 0.0) {
                terms.push(SquareTerm { sign, coeffs });
            }
        }
    }
    Ok(terms)
}

/// Max-abs coefficient difference between Σ sign·|ℓ|² and p.
pub fn verify_decomposition(p: &Polynomial, terms: &[SquareTerm]) -> f64 {
    let len = terms
        .iter()
        .map(|t| (2 * t.coeffs.len()).saturating_sub(1))
        .max()
        .unwrap_or(0)
        .max(p.coeffs.len());
    let mut acc = vec![0.0; len];
    for t in terms {
        for (a, e) in acc.iter_mut().zip(t.expand()) {
            *a += t.sign as f64 * e;
        }
    }
    for (a, c) in acc.iter_mut().zip(&p.coeffs) {
        *a -= c;
    }
    acc.iter().fold(0.0, |m, a| m.max(a.abs()))
}

pub fn certificate(p: &Polynomial) -> Result<SosCertificate> {
    let terms = sos_decompose(p)?;
    let residual = verify_decomposition(p, &terms);
    Ok(SosCertificate { terms, residual })
}
