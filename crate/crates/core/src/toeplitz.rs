//! Rank-2 bordered crosses and the Hermitian Toeplitz factorization.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::factor::{concat_nonempty, FactorNode, FactorPair};
use crate::structured::{StructuredOp, ToeplitzGen};
use crate::C64;

/// Hermitian matrix whose only nonzeros are row `border` (entries `row`) and
/// column `border` (their conjugates), with a zero corner.
#[derive(Clone, Debug, PartialEq)]
pub struct BorderedCross {
    border: usize,
    row: Vec<C64>,
}

impl BorderedCross {
    pub fn new(border: usize, row: Vec<C64>) -> Result<Self> {
        if border >= row.len() {
            return Err(Error::Rejected(format!(
                "border index {border} outside order {}",
                row.len()
            )));
        }
        if row[border] != C64::new(0.0, 0.0) {
            return Err(Error::Rejected(format!(
                "cross corner entry must be zero, got {}",
                row[border]
            )));
        }
        if row.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Rejected("non-finite cross entry".into()));
        }
        Ok(BorderedCross { border, row })
    }

    pub fn order(&self) -> usize {
        self.row.len()
    }

    pub fn border(&self) -> usize {
        self.border
    }

    pub fn row(&self) -> &[C64] {
        &self.row
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.order();
        let j = self.border;
        DenseMatrix::from_fn(n, n, |a, b| {
            if a == j {
                self.row[b]
            } else if b == j {
                self.row[a].conj()
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// Vectors v1, v2 with v1·v1* − v2·v2* equal to the cross.
///
/// With λ = ‖row‖, v1 and v2 are √λ times the unit eigenvectors for ±λ, and the
/// border component of each is real positive. A zero cross gives zero vectors.
pub fn rank2_factor(cross: &BorderedCross) -> (Vec<C64>, Vec<C64>) {
    let n = cross.order();
    let j = cross.border;
    let lambda = cross.row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut v1 = vec![C64::new(0.0, 0.0); n];
    let mut v2 = vec![C64::new(0.0, 0.0); n];
    if lambda == 0.0 {
        return (v1, v2);
    }
    let corner = (lambda / 2.0).sqrt();
    let s = 1.0 / (2.0 * lambda).sqrt();
    for k in 0..n {
        if k == j {
            v1[k] = C64::new(corner, 0.0);
            v2[k] = C64::new(corner, 0.0);
        } else {
            let z = cross.row[k].conj() * s;
            v1[k] = z;
            v2[k] = -z;
        }
    }
    (v1, v2)
}

pub(crate) fn is_zero(v: &[C64]) -> bool {
    v.iter().all(|z| *z == C64::new(0.0, 0.0))
}

/// Factors T = B·B* − C·C* for a Hermitian Toeplitz T.
///
/// T − Δ·T·Δᵀ minus its diagonal is the cross with row (0, t₂, …, tₙ), so
/// T = Σ_j Δ^j (v1v1* − v2v2*) Δᵀ^j + t₁·I.
pub fn hermitian_toeplitz_factor(t: &ToeplitzGen) -> Result<FactorPair> {
    let n = t.order();
    let mut row = t.gen().to_vec();
    let d = row[0].re;
    row[0] = C64::new(0.0, 0.0);
    let (v1, v2) = rank2_factor(&BorderedCross::new(0, row)?);
    let shift = StructuredOp::ShiftDown { n };
    let mut b = Vec::new();
    let mut c = Vec::new();
    if !is_zero(&v1) {
        b.push(FactorNode::shift_expand(v1, shift, n)?);
        c.push(FactorNode::shift_expand(v2, shift, n)?);
    }
    if d > 0.0 {
        b.push(FactorNode::scaled_identity(d.sqrt(), n)?);
    } else if d < 0.0 {
        c.push(FactorNode::scaled_identity((-d).sqrt(), n)?);
    }
    FactorPair::new(
        concat_nonempty(n, b)?,
        concat_nonempty(n, c)?,
        n,
        "hermitian_toeplitz_factor",
    )
}
