use crate::error::{check_len, Result};
use crate::fft::convolve;
use crate::structured::StructuredOp;
use crate::C64;

use super::{doubling, FactorNode};

const ZERO: C64 = C64::new(0.0, 0.0);

impl FactorNode {
    /// F·x.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.ncols(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    /// F*·y.
    pub fn adjoint_apply(&self, y: &[C64]) -> Result<Vec<C64>> {
        check_len(self.nrows(), y.len())?;
        Ok(self.adjoint_unchecked(y))
    }

    pub(crate) fn apply_unchecked(&self, x: &[C64]) -> Vec<C64> {
        use FactorNode::*;
        match self {
            BaseVector { v } => v.iter().map(|z| z * x[0]).collect(),
            ShiftExpand { v, shift, count } => shift_expand_apply(v, shift, *count, x),
            ScaledIdentity { s, .. } => x.iter().map(|z| z * *s).collect(),
            PermutedCopy { child, prefix } => {
                let mut y = child.apply_unchecked(x);
                for op in prefix.iter().rev() {
                    op.apply_in_place(&mut y, false);
                }
                y
            }
            Concat { nrows, children } => {
                let mut y = vec![ZERO; *nrows];
                let mut off = 0;
                for c in children {
                    let k = c.ncols();
                    let part = c.apply_unchecked(&x[off..off + k]);
                    for (a, b) in y.iter_mut().zip(&part) {
                        *a += b;
                    }
                    off += k;
                }
                y
            }
            UnitaryPrefix { child, depth } => {
                let mut y = child.apply_unchecked(x);
                let n = y.len();
                for t in (1..=*depth).rev() {
                    StructuredOp::BlockFoldUnitary { n, level: t }.apply_in_place(&mut y, true);
                }
                y
            }
            DenseBlock { m } => m.matvec(x).expect("column count checked"),
            Doubling { child, levels } => doubling::apply(child, levels, x),
        }
    }

    pub(crate) fn adjoint_unchecked(&self, y: &[C64]) -> Vec<C64> {
        use FactorNode::*;
        match self {
            BaseVector { v } => vec![v.iter().zip(y).map(|(a, b)| a.conj() * b).sum()],
            ShiftExpand { v, shift, count } => shift_expand_adjoint(v, shift, *count, y),
            ScaledIdentity { s, .. } => y.iter().map(|z| z * *s).collect(),
            PermutedCopy { child, prefix } => {
                let mut z = y.to_vec();
                for op in prefix {
                    op.apply_in_place(&mut z, true);
                }
                child.adjoint_unchecked(&z)
            }
            Concat { children, .. } => {
                let mut out = Vec::with_capacity(self.ncols());
                for c in children {
                    out.extend(c.adjoint_unchecked(y));
                }
                out
            }
            UnitaryPrefix { child, depth } => {
                let mut z = y.to_vec();
                let n = z.len();
                for t in 1..=*depth {
                    StructuredOp::BlockFoldUnitary { n, level: t }.apply_in_place(&mut z, false);
                }
                child.adjoint_unchecked(&z)
            }
            DenseBlock { m } => {
                let mut out = vec![ZERO; m.cols()];
                for (i, &yi) in y.iter().enumerate() {
                    for (o, a) in out.iter_mut().zip(m.row(i)) {
                        *o += a.conj() * yi;
                    }
                }
                out
            }
            Doubling { child, levels } => doubling::adjoint(child, levels, y),
        }
    }

    /// All columns, each of length nrows.
    pub(crate) fn columns(&self) -> Vec<Vec<C64>> {
        use FactorNode::*;
        let n = self.nrows();
        match self {
            BaseVector { v } => vec![v.clone()],
            ShiftExpand { v, shift, count } => {
                let mut cols = Vec::with_capacity(*count);
                let mut cur = v.clone();
                for j in 0..*count {
                    if j > 0 {
                        shift.apply_in_place(&mut cur, false);
                    }
                    cols.push(cur.clone());
                }
                cols
            }
            ScaledIdentity { s, n } => (0..*n)
                .map(|j| {
                    let mut c = vec![ZERO; *n];
                    c[j] = C64::new(*s, 0.0);
                    c
                })
                .collect(),
            PermutedCopy { child, prefix } => {
                let mut cols = child.columns();
                for c in cols.iter_mut() {
                    for op in prefix.iter().rev() {
                        op.apply_in_place(c, false);
                    }
                }
                cols
            }
            Concat { children, .. } => children.iter().flat_map(|c| c.columns()).collect(),
            UnitaryPrefix { child, depth } => {
                let mut cols = child.columns();
                for c in cols.iter_mut() {
                    for t in (1..=*depth).rev() {
                        StructuredOp::BlockFoldUnitary { n, level: t }.apply_in_place(c, true);
                    }
                }
                cols
            }
            DenseBlock { m } => (0..m.cols()).map(|j| m.column(j)).collect(),
            Doubling { child, levels } => {
                let mut cols = child.columns();
                for &l in levels {
                    let e = StructuredOp::MaskE { n, level: l };
                    let f = StructuredOp::SwapF { n, level: l };
                    let extra: Vec<Vec<C64>> = cols
                        .iter()
                        .map(|c| {
                            let mut c = c.clone();
                            f.apply_in_place(&mut c, false);
                            e.apply_in_place(&mut c, false);
                            c
                        })
                        .collect();
                    cols.extend(extra);
                }
                cols
            }
        }
    }
}

/// Block length and direction of a ShiftExpand operator.
fn shift_layout(shift: &StructuredOp) -> (usize, bool) {
    match *shift {
        StructuredOp::ShiftDown { n } => (n, false),
        StructuredOp::ShiftUp { n } => (n, true),
        StructuredOp::BlockShift { block, .. } => (block, false),
        StructuredOp::BlockShiftUp { block, .. } => (block, true),
        _ => unreachable!("validated at construction"),
    }
}

fn shift_expand_apply(v: &[C64], shift: &StructuredOp, count: usize, x: &[C64]) -> Vec<C64> {
    let (q, up) = shift_layout(shift);
    let mut y = vec![ZERO; v.len()];
    for (vb, yb) in v.chunks(q).zip(y.chunks_mut(q)) {
        if up {
            // y[i] = Σ_j v[i + j] x[j]
            let u: Vec<C64> = vb.iter().rev().copied().collect();
            let c = convolve(&u, &x[..count]);
            for (i, o) in yb.iter_mut().enumerate() {
                *o = c[q - 1 - i];
            }
        } else {
            let c = convolve(vb, &x[..count]);
            yb.copy_from_slice(&c[..q]);
        }
    }
    y
}

fn shift_expand_adjoint(v: &[C64], shift: &StructuredOp, count: usize, y: &[C64]) -> Vec<C64> {
    let (q, up) = shift_layout(shift);
    let mut x = vec![ZERO; count];
    for (vb, yb) in v.chunks(q).zip(y.chunks(q)) {
        let c = if up {
            let vc: Vec<C64> = vb.iter().map(|z| z.conj()).collect();
            let yr: Vec<C64> = yb.iter().rev().copied().collect();
            convolve(&vc, &yr)
        } else {
            let w: Vec<C64> = vb.iter().rev().map(|z| z.conj()).collect();
            convolve(&w, yb)
        };
        for (j, o) in x.iter_mut().enumerate() {
            *o += c[q - 1 + j];
        }
    }
    x
}
