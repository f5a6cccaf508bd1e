use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{check_len, Error, Result};
use crate::C64;

/// Implicit linear-time operators. Levels are 1-based: level t acts on
/// granularity 2^(t−1) for `MaskE`/`SwapF` and on blocks of n / 2^(t−1) for
/// `BlockFoldUnitary`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum StructuredOp {
    /// J: reverses the vector.
    Exchange { n: usize },
    /// Δ: moves entries down one slot, zero on top.
    ShiftDown { n: usize },
    /// Δᵀ.
    ShiftUp { n: usize },
    /// S = ½(1+i)I + ½(1−i)J.
    FoldUnitary { n: usize },
    /// S applied to each block of length n / 2^(level−1).
    BlockFoldUnitary { n: usize, level: usize },
    /// E_t: zeroes the first 2^(t−1) entries.
    MaskE { n: usize, level: usize },
    /// F_t: swaps adjacent blocks of length 2^(t−1).
    SwapF { n: usize, level: usize },
    /// Δ applied within each block of the given length.
    BlockShift { n: usize, block: usize },
    /// Δᵀ applied within each block.
    BlockShiftUp { n: usize, block: usize },
    /// J applied within every odd-indexed block (0-based), identity on even blocks.
    OddBlockExchange { n: usize, block: usize },
}

const HALF_P: C64 = C64::new(0.5, 0.5);
const HALF_M: C64 = C64::new(0.5, -0.5);

fn pow2(level: usize) -> Option<usize> {
    if level == 0 || level > 62 {
        None
    } else {
        Some(1usize << (level - 1))
    }
}

impl StructuredOp {
    pub fn size(&self) -> usize {
        use StructuredOp::*;
        match *self {
            Exchange { n }
            | ShiftDown { n }
            | ShiftUp { n }
            | FoldUnitary { n }
            | BlockFoldUnitary { n, .. }
            | MaskE { n, .. }
            | SwapF { n, .. }
            | BlockShift { n, .. }
            | BlockShiftUp { n, .. }
            | OddBlockExchange { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use StructuredOp::*;
        let n = self.size();
        let bad = |msg: String| Err(Error::Rejected(msg));
        if n == 0 {
            return bad(format!("{self:?}: size must be positive"));
        }
        match *self {
            BlockFoldUnitary { level, .. } => match pow2(level) {
                Some(p) if n.is_multiple_of(p) && n / p >= 1 => Ok(()),
                _ => bad(format!("{self:?}: size not divisible into 2^(level-1) blocks")),
            },
            MaskE { level, .. } => match pow2(level) {
                Some(p) if p <= n => Ok(()),
                _ => bad(format!("{self:?}: mask longer than the vector")),
            },
            SwapF { level, .. } => match pow2(level) {
                Some(p) if n.is_multiple_of(2 * p) => Ok(()),
                _ => bad(format!("{self:?}: size not a multiple of 2^level")),
            },
            BlockShift { block, .. } | BlockShiftUp { block, .. } | OddBlockExchange { block, .. } => {
                if block >= 1 && n.is_multiple_of(block) {
                    Ok(())
                } else {
                    bad(format!("{self:?}: block does not divide size"))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn adjoint(&self) -> Option<StructuredOp> {
        use StructuredOp::*;
        match *self {
            ShiftDown { n } => Some(ShiftUp { n }),
            ShiftUp { n } => Some(ShiftDown { n }),
            BlockShift { n, block } => Some(BlockShiftUp { n, block }),
            BlockShiftUp { n, block } => Some(BlockShift { n, block }),
            FoldUnitary { .. } | BlockFoldUnitary { .. } => None,
            other => Some(other),
        }
    }

    /// op·x.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.validate()?;
        check_len(self.size(), x.len())?;
        let mut y = x.to_vec();
        self.apply_in_place(&mut y, false);
        Ok(y)
    }

    /// op*·x.
    pub fn apply_adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.validate()?;
        check_len(self.size(), x.len())?;
        let mut y = x.to_vec();
        self.apply_in_place(&mut y, true);
        Ok(y)
    }

    /// opᵀ·x.
    pub fn apply_transpose(&self, x: &[C64]) -> Result<Vec<C64>> {
        let c: Vec<C64> = x.iter().map(|z| z.conj()).collect();
        Ok(self.apply_adjoint(&c)?.iter().map(|z| z.conj()).collect())
    }

    /// Applies op (or op* when `adjoint`) in place. Assumes a validated op of matching size.
    pub(crate) fn apply_in_place(&self, x: &mut [C64], adjoint: bool) {
        use StructuredOp::*;
        let zero = C64::new(0.0, 0.0);
        let this = if adjoint {
            self.adjoint().unwrap_or(*self)
        } else {
            *self
        };
        match this {
            Exchange { .. } => x.reverse(),
            ShiftDown { .. } => shift_down(x),
            ShiftUp { .. } => shift_up(x),
            FoldUnitary { .. } => fold(x, adjoint),
            BlockFoldUnitary { n, level } => {
                let b = n >> (level - 1);
                for chunk in x.chunks_mut(b) {
                    fold(chunk, adjoint);
                }
            }
            MaskE { level, .. } => {
                for z in x.iter_mut().take(1 << (level - 1)) {
                    *z = zero;
                }
            }
            SwapF { level, .. } => {
                let p = 1 << (level - 1);
                for pair in x.chunks_mut(2 * p) {
                    let (a, b) = pair.split_at_mut(p);
                    a.swap_with_slice(b);
                }
            }
            BlockShift { block, .. } => x.chunks_mut(block).for_each(shift_down),
            BlockShiftUp { block, .. } => x.chunks_mut(block).for_each(shift_up),
            OddBlockExchange { block, .. } => {
                for (c, chunk) in x.chunks_mut(block).enumerate() {
                    if c % 2 == 1 {
                        chunk.reverse();
                    }
                }
            }
        }
    }

    /// Dense matrix of the operator.
    pub fn matrix(&self) -> Result<DenseMatrix> {
        self.validate()?;
        let n = self.size();
        let mut m = DenseMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            self.apply_in_place(&mut e, false);
            m.set_column(j, &e);
        }
        Ok(m)
    }
}

fn shift_down(x: &mut [C64]) {
    if x.is_empty() {
        return;
    }
    x.rotate_right(1);
    x[0] = C64::new(0.0, 0.0);
}

fn shift_up(x: &mut [C64]) {
    if x.is_empty() {
        return;
    }
    x.rotate_left(1);
    let l = x.len();
    x[l - 1] = C64::new(0.0, 0.0);
}

fn fold(x: &mut [C64], adjoint: bool) {
    let (a, b) = if adjoint { (HALF_M, HALF_P) } else { (HALF_P, HALF_M) };
    let l = x.len();
    for i in 0..l / 2 {
        let j = l - 1 - i;
        let (u, v) = (x[i], x[j]);
        x[i] = a * u + b * v;
        x[j] = a * v + b * u;
    }
    if l % 2 == 1 {
        x[l / 2] *= a + b;
    }
}

/// op·x; convenience wrapper over [`StructuredOp::apply`].
pub fn apply_structured(op: &StructuredOp, x: &[C64]) -> Result<Vec<C64>> {
    op.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use StructuredOp::*;

    fn r(xs: &[f64]) -> Vec<C64> {
        xs.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn basic_actions() {
        let x = r(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(Exchange { n: 4 }.apply(&x).unwrap(), r(&[4.0, 3.0, 2.0, 1.0]));
        assert_eq!(ShiftDown { n: 4 }.apply(&x).unwrap(), r(&[0.0, 1.0, 2.0, 3.0]));
        assert_eq!(ShiftUp { n: 4 }.apply(&x).unwrap(), r(&[2.0, 3.0, 4.0, 0.0]));
        assert_eq!(SwapF { n: 4, level: 1 }.apply(&x).unwrap(), r(&[2.0, 1.0, 4.0, 3.0]));
        assert_eq!(SwapF { n: 4, level: 2 }.apply(&x).unwrap(), r(&[3.0, 4.0, 1.0, 2.0]));
        assert_eq!(MaskE { n: 4, level: 2 }.apply(&x).unwrap(), r(&[0.0, 0.0, 3.0, 4.0]));
        assert_eq!(BlockShift { n: 4, block: 2 }.apply(&x).unwrap(), r(&[0.0, 1.0, 0.0, 3.0]));
        assert_eq!(
            OddBlockExchange { n: 4, block: 2 }.apply(&x).unwrap(),
            r(&[1.0, 2.0, 4.0, 3.0])
        );
    }

    #[test]
    fn fold_is_unitary_and_matches_definition() {
        for n in [1usize, 2, 5, 8] {
            let s = FoldUnitary { n }.matrix().unwrap();
            let j = Exchange { n }.matrix().unwrap();
            let i = DenseMatrix::identity(n);
            let def = i.scale(HALF_P).add(&j.scale(HALF_M)).unwrap();
            assert!(s.sub(&def).unwrap().max_abs() < 1e-15);
            let ss = s.matmul(&s.adjoint()).unwrap();
            assert!(ss.sub(&i).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn adjoint_matches_matrix_adjoint() {
        let ops = [
            ShiftDown { n: 6 },
            FoldUnitary { n: 6 },
            BlockFoldUnitary { n: 8, level: 2 },
            MaskE { n: 8, level: 3 },
            SwapF { n: 8, level: 2 },
            BlockShift { n: 6, block: 3 },
            BlockShiftUp { n: 6, block: 2 },
            OddBlockExchange { n: 8, block: 2 },
        ];
        for op in ops {
            let m = op.matrix().unwrap().adjoint();
            let n = op.size();
            for j in 0..n {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[j] = C64::new(1.0, 0.0);
                let y = op.apply_adjoint(&e).unwrap();
                for i in 0..n {
                    assert!((y[i] - m[(i, j)]).norm() < 1e-15, "{op:?}");
                }
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(SwapF { n: 6, level: 2 }.apply(&r(&[0.0; 6])).is_err());
        assert!(MaskE { n: 2, level: 3 }.apply(&r(&[0.0; 2])).is_err());
        assert!(BlockShift { n: 6, block: 4 }.apply(&r(&[0.0; 6])).is_err());
        assert!(Exchange { n: 3 }.apply(&r(&[0.0; 2])).is_err());
    }
}
