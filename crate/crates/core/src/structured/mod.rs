//! Generator representations, implicit operators, displacement and structural checks.

mod generators;
mod ops;

pub use generators::{
    hankel_materialize, hankel_matvec, toeplitz_materialize, toeplitz_matvec, HankelGen,
    ToeplitzGen,
};
pub use ops::{apply_structured, StructuredOp};

use crate::dense::DenseMatrix;
use crate::error::{check_len, Error, Result};
use crate::C64;

/// Applies `op` to every column of `m` (op·M).
pub fn left_apply(op: &StructuredOp, m: &DenseMatrix) -> Result<DenseMatrix> {
    op.validate()?;
    check_len(op.size(), m.rows())?;
    let mut out = m.clone();
    for j in 0..m.cols() {
        let mut c = m.column(j);
        op.apply_in_place(&mut c, false);
        out.set_column(j, &c);
    }
    Ok(out)
}

/// M·op, computed row by row as (opᵀ·rowᵀ)ᵀ.
pub fn right_apply(m: &DenseMatrix, op: &StructuredOp) -> Result<DenseMatrix> {
    op.validate()?;
    check_len(op.size(), m.cols())?;
    let mut out = m.clone();
    for i in 0..m.rows() {
        let row = op.apply_transpose(m.row(i))?;
        for (j, z) in row.into_iter().enumerate() {
            out[(i, j)] = z;
        }
    }
    Ok(out)
}

/// U·M − M·V.
pub fn sylvester_displacement(
    m: &DenseMatrix,
    left: &StructuredOp,
    right: &StructuredOp,
) -> Result<DenseMatrix> {
    left_apply(left, m)?.sub(&right_apply(m, right)?)
}

/// M − U·M·V.
pub fn stein_displacement(
    m: &DenseMatrix,
    left: &StructuredOp,
    right: &StructuredOp,
) -> Result<DenseMatrix> {
    m.sub(&right_apply(&left_apply(left, m)?, right)?)
}

/// Count of singular values above `tau`·σ_max.
pub fn numeric_rank(m: &DenseMatrix, tau: f64) -> Result<usize> {
    m.numeric_rank(tau)
}

fn default_tol(m: &DenseMatrix, tol: Option<f64>) -> f64 {
    tol.unwrap_or(1e-10 * m.max_abs())
}

fn check_identity(m: &DenseMatrix, tol: Option<f64>, f: impl Fn(usize, usize) -> C64) -> bool {
    if !m.is_square() {
        return false;
    }
    let tol = default_tol(m, tol);
    let n = m.rows();
    (0..n).all(|i| (0..n).all(|j| (m[(i, j)] - f(i, j)).norm() <= tol))
}

/// J·M = M·J.
pub fn is_centrosymmetric(m: &DenseMatrix, tol: Option<f64>) -> bool {
    let n = m.rows();
    check_identity(m, tol, |i, j| m[(n - 1 - i, n - 1 - j)])
}

/// Symmetric about the anti-diagonal.
pub fn is_persymmetric(m: &DenseMatrix, tol: Option<f64>) -> bool {
    let n = m.rows();
    check_identity(m, tol, |i, j| m[(n - 1 - j, n - 1 - i)])
}

pub fn is_symmetric(m: &DenseMatrix, tol: Option<f64>) -> bool {
    check_identity(m, tol, |i, j| m[(j, i)])
}

/// Symmetric and persymmetric.
pub fn is_bisymmetric(m: &DenseMatrix, tol: Option<f64>) -> bool {
    is_symmetric(m, tol) && is_persymmetric(m, tol)
}

pub fn is_skew_symmetric(m: &DenseMatrix, tol: Option<f64>) -> bool {
    check_identity(m, tol, |i, j| -m[(j, i)])
}

pub fn is_hermitian(m: &DenseMatrix, tol: Option<f64>) -> bool {
    check_identity(m, tol, |i, j| m[(j, i)].conj())
}

pub fn is_hankel(m: &DenseMatrix, tol: Option<f64>) -> bool {
    let n = m.rows();
    check_identity(m, tol, |i, j| {
        if i + 1 < n && j > 0 {
            m[(i + 1, j - 1)]
        } else {
            m[(i, j)]
        }
    })
}

pub fn is_toeplitz(m: &DenseMatrix, tol: Option<f64>) -> bool {
    check_identity(m, tol, |i, j| {
        if i > 0 && j > 0 {
            m[(i - 1, j - 1)]
        } else {
            m[(i, j)]
        }
    })
}

/// Both halves of S·H·S* for a Hankel H, computed from the generator alone.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyIdentitySplit {
    /// Generator of ½(H + JHJ), a centrosymmetric Hankel matrix.
    pub real_part: HankelGen,
    /// Generator of i·½(HJ − JH), a Hermitian Toeplitz matrix with zero diagonal.
    pub imag_part: ToeplitzGen,
}

impl KeyIdentitySplit {
    /// First row of the real skew-symmetric Toeplitz matrix ½(HJ − JH).
    pub fn skew_first_row(&self) -> Vec<f64> {
        self.imag_part.gen().iter().map(|z| z.im).collect()
    }

    /// Dense ½(HJ − JH) as a real matrix (imag_part / i).
    pub fn skew_materialize(&self) -> Result<DenseMatrix> {
        Ok(self
            .imag_part
            .materialize()?
            .scale(C64::new(0.0, -1.0)))
    }
}

/// Splits a real Hankel generator into ½(H + JHJ) and i·½(HJ − JH) in O(n).
pub fn key_identity_split(h: &HankelGen) -> Result<KeyIdentitySplit> {
    if !h.is_real() {
        return Err(Error::Rejected(
            "the fold split requires a real Hankel generator".into(),
        ));
    }
    let n = h.order();
    let g = h.gen();
    let real: Vec<C64> = (0..2 * n - 1)
        .map(|m| (g[m] + g[2 * n - 2 - m]) * 0.5)
        .collect();
    let imag: Vec<C64> = (0..n)
        .map(|d| C64::new(0.0, 0.5 * (g[n - 1 - d].re - g[n - 1 + d].re)))
        .collect();
    Ok(KeyIdentitySplit {
        real_part: HankelGen::new(real)?,
        imag_part: ToeplitzGen::new(imag)?,
    })
}

/// Extends a Hankel generator with zeros to the next power-of-two order.
/// Power-of-two orders are returned unchanged.
pub fn pad_to_power_of_two(h: &HankelGen) -> HankelGen {
    let n = h.order();
    let target = n.next_power_of_two();
    if target == n {
        return h.clone();
    }
    let mut g = h.gen().to_vec();
    g.resize(2 * target - 1, C64::new(0.0, 0.0));
    HankelGen::new(g).expect("zero padding keeps the generator valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_split() {
        let h = HankelGen::from_real(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0]).unwrap();
        let s = key_identity_split(&h).unwrap();
        let first_row: Vec<f64> = s.real_part.gen()[..4].iter().map(|z| z.re).collect();
        assert_eq!(first_row, vec![4.5, 4.0, 4.0, 4.0]);
        assert_eq!(s.skew_first_row(), vec![0.0, -1.0, -2.0, -3.5]);
    }

    #[test]
    fn reversal_symmetric_has_zero_imag() {
        let h = HankelGen::from_real(&[1.0, 5.0, 2.0, 5.0, 1.0]).unwrap();
        assert!(key_identity_split(&h).unwrap().imag_part.is_zero());
    }

    #[test]
    fn padding_examples() {
        let h = HankelGen::from_real(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let p = pad_to_power_of_two(&h);
        assert_eq!(p.order(), 4);
        let g: Vec<f64> = p.gen().iter().map(|z| z.re).collect();
        assert_eq!(g, vec![1.0, 2.0, 3.0, 4.0, 5.0, 0.0, 0.0]);
        let h4 = HankelGen::from_real(&[1.0; 7]).unwrap();
        assert_eq!(pad_to_power_of_two(&h4), h4);
        let h5 = HankelGen::from_real(&[2.0; 9]).unwrap();
        let p5 = pad_to_power_of_two(&h5);
        assert_eq!(p5.order(), 8);
        assert_eq!(p5.gen().len(), 15);
        assert!(p5.gen()[9..].iter().all(|z| z.re == 0.0));
    }

    #[test]
    fn exchange_predicates() {
        let j = StructuredOp::Exchange { n: 5 }.matrix().unwrap();
        assert!(is_centrosymmetric(&j, None));
        assert!(is_persymmetric(&j, None));
    }

    #[test]
    fn displacement_ranks() {
        let h = HankelGen::from_real(&[3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, 6.0, -5.0, 3.0, 5.0, 8.0, 9.0, 7.0, 9.0])
            .unwrap()
            .materialize()
            .unwrap();
        let n = h.rows();
        let d = sylvester_displacement(
            &h,
            &StructuredOp::ShiftDown { n },
            &StructuredOp::ShiftUp { n },
        )
        .unwrap();
        assert_eq!(numeric_rank(&d, 1e-10).unwrap(), 2);
        let t = ToeplitzGen::new(
            [2.0, 1.0, -0.5, 0.25, 3.0, 1.0, 0.0, 2.0]
                .iter()
                .enumerate()
                .map(|(i, &x)| C64::new(x, if i == 0 { 0.0 } else { 0.3 * i as f64 }))
                .collect(),
        )
        .unwrap()
        .materialize()
        .unwrap();
        let s = stein_displacement(
            &t,
            &StructuredOp::ShiftDown { n },
            &StructuredOp::ShiftUp { n },
        )
        .unwrap();
        assert_eq!(numeric_rank(&s, 1e-10).unwrap(), 2);
    }
}
