//! Recursive factorization of real Hankel matrices.
//!
//! Level t holds H_t, whose 2^t × 2^t blocks of order q = n / 2^t satisfy
//! H_t(A, B) = J^{a∧b}·Q_{A⊕B}·J^{a∧b} (a, b the lowest bits of A, B), so the
//! first block row determines everything. Folding every block with S splits
//! H_{t−1} into a real part H_t and an imaginary part N_t, whose blocks obey
//! N_t(A, B) = J^{a}·P_{A⊕B}·J^{b} with Hermitian Toeplitz P_c (zero for odd c).

use serde::Serialize;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::factor::{concat_nonempty, FactorNode, FactorPair};
use crate::structured::{key_identity_split, pad_to_power_of_two, HankelGen, StructuredOp, ToeplitzGen};
use crate::toeplitz::{is_zero, rank2_factor, BorderedCross};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// First block row of H_t.
#[derive(Clone, Debug, PartialEq)]
pub struct HLevelState {
    pub level: usize,
    pub block_order: usize,
    pub first_block_row: Vec<HankelGen>,
}

/// First block row of N_t.
#[derive(Clone, Debug, PartialEq)]
pub struct NLevelState {
    pub level: usize,
    pub block_order: usize,
    pub first_block_row: Vec<ToeplitzGen>,
}

fn exchange_block(m: &DenseMatrix, left: bool, right: bool) -> DenseMatrix {
    let q = m.rows();
    DenseMatrix::from_fn(q, q, |i, j| {
        let a = if left { q - 1 - i } else { i };
        let b = if right { q - 1 - j } else { j };
        m[(a, b)]
    })
}

impl HLevelState {
    /// H_0: the whole (power-of-two order, real) matrix as one block.
    pub fn initial(h: &HankelGen) -> Result<Self> {
        if !h.order().is_power_of_two() {
            return Err(Error::Precondition(format!(
                "level recursion needs a power-of-two order, got {}",
                h.order()
            )));
        }
        if !h.is_real() {
            return Err(Error::Rejected(
                "Hankel factorization requires a real generator".into(),
            ));
        }
        Ok(HLevelState {
            level: 0,
            block_order: h.order(),
            first_block_row: vec![h.clone()],
        })
    }

    pub fn order(&self) -> usize {
        self.block_order * self.first_block_row.len()
    }

    /// Dense H_t from its first block row.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        let q = self.block_order;
        let nb = self.first_block_row.len();
        let blocks: Vec<DenseMatrix> = self
            .first_block_row
            .iter()
            .map(|g| g.materialize())
            .collect::<Result<_>>()?;
        let mut m = DenseMatrix::zeros(q * nb, q * nb);
        for a in 0..nb {
            for b in 0..nb {
                let ex = (a & b & 1) == 1;
                m.set_submatrix(a * q, b * q, &exchange_block(&blocks[a ^ b], ex, ex));
            }
        }
        Ok(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.first_block_row
            .iter()
            .flat_map(|g| g.gen().iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl NLevelState {
    pub fn order(&self) -> usize {
        self.block_order * self.first_block_row.len()
    }

    /// Dense N_t from its first block row.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        let q = self.block_order;
        let nb = self.first_block_row.len();
        let blocks: Vec<DenseMatrix> = self
            .first_block_row
            .iter()
            .map(|g| g.materialize())
            .collect::<Result<_>>()?;
        let mut m = DenseMatrix::zeros(q * nb, q * nb);
        for a in 0..nb {
            for b in 0..nb {
                // P_c = N(0, c)·J^{c mod 2}; N(a, b) = J^{a mod 2}·P_{a⊕b}·J^{b mod 2}.
                let c = a ^ b;
                let p = exchange_block(&blocks[c], false, c & 1 == 1);
                m.set_submatrix(a * q, b * q, &exchange_block(&p, a & 1 == 1, b & 1 == 1));
            }
        }
        Ok(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.first_block_row
            .iter()
            .flat_map(|g| g.gen().iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Folds H_{t−1} into (N_t, H_t) in O(n) work.
pub fn split_level(state: &HLevelState) -> Result<(NLevelState, HLevelState)> {
    let q = state.block_order;
    if q < 2 {
        return Err(Error::Precondition("cannot split blocks of order 1".into()));
    }
    let half = q / 2;
    let mut n_row = Vec::with_capacity(state.first_block_row.len());
    let mut h_row = Vec::with_capacity(2 * state.first_block_row.len());
    for g in &state.first_block_row {
        let split = key_identity_split(g)?;
        n_row.push(split.imag_part);
        let r = split.real_part.gen();
        h_row.push(HankelGen::new(r[..q - 1].to_vec())?);
        h_row.push(HankelGen::new(r[half..half + q - 1].to_vec())?);
    }
    Ok((
        NLevelState {
            level: state.level + 1,
            block_order: q,
            first_block_row: n_row,
        },
        HLevelState {
            level: state.level + 1,
            block_order: half,
            first_block_row: h_row,
        },
    ))
}

/// `split_level` on contiguous real storage: `h` holds the first-row
/// generators of H_{t−1} (blocks of order q, 2q − 1 entries each). Returns
/// those of H_t and writes the imaginary parts of the N_t generators to `im`.
fn split_flat(h: &[f64], q: usize, im: &mut Vec<f64>) -> Vec<f64> {
    let len = 2 * q - 1;
    let nb = h.len() / len;
    let half = q / 2;
    im.clear();
    let mut out = Vec::with_capacity(2 * nb * (q - 1));
    for g in h.chunks_exact(len) {
        im.extend((0..q).map(|d| 0.5 * (g[q - 1 - d] - g[q - 1 + d])));
        out.extend((0..q - 1).map(|m| 0.5 * (g[m] + g[len - 1 - m])));
        out.extend((half..half + q - 1).map(|m| 0.5 * (g[m] + g[len - 1 - m])));
    }
    out
}

/// All level states of the recursion for a power-of-two real input.
#[derive(Clone, Debug)]
pub struct HankelLevels {
    /// H_0, …, H_k.
    pub h: Vec<HLevelState>,
    /// N_1, …, N_k.
    pub n: Vec<NLevelState>,
}

pub fn hankel_levels(h: &HankelGen) -> Result<HankelLevels> {
    let mut hs = vec![HLevelState::initial(h)?];
    let mut ns = Vec::new();
    while hs.last().unwrap().block_order > 1 {
        let (n, next) = split_level(hs.last().unwrap())?;
        ns.push(n);
        hs.push(next);
    }
    Ok(HankelLevels { h: hs, n: ns })
}

fn log2(n: usize) -> usize {
    n.trailing_zeros() as usize
}

fn pair_nodes(
    n: usize,
    x_parts: Vec<FactorNode>,
    y_parts: Vec<FactorNode>,
    levels: Vec<usize>,
    odd_exchange: Option<usize>,
) -> Result<(FactorNode, FactorNode)> {
    let wrap = |parts: Vec<FactorNode>| -> Result<FactorNode> {
        let child = concat_nonempty(n, parts)?;
        let node = if levels.is_empty() {
            child
        } else {
            FactorNode::doubling(child, levels.clone())?
        };
        match odd_exchange {
            Some(block) => FactorNode::permuted_copy(
                node,
                vec![StructuredOp::OddBlockExchange { n, block }],
            ),
            None => Ok(node),
        }
    };
    Ok((wrap(x_parts)?, wrap(y_parts)?))
}

/// X_t, Y_t with X_t·X_t* − Y_t·Y_t* = N_t.
pub fn factor_nt(state: &NLevelState) -> Result<(FactorNode, FactorNode)> {
    let blocks = &state.first_block_row;
    nt_nodes(state.block_order, blocks.len(), |c, o| blocks[c].gen()[o])
}

/// N_t factors from entry `gen(c, o)` of the first-row generator of block c.
fn nt_nodes(
    q: usize,
    nb: usize,
    gen: impl Fn(usize, usize) -> C64,
) -> Result<(FactorNode, FactorNode)> {
    let n = q * nb;
    if nb == 1 {
        let cross = BorderedCross::new(0, (0..q).map(|o| gen(0, o)).collect())?;
        let (v1, v2) = rank2_factor(&cross);
        let shift = StructuredOp::ShiftDown { n };
        let (xs, ys) = if is_zero(&v1) {
            (vec![], vec![])
        } else {
            (
                vec![FactorNode::shift_expand(v1, shift, n)?],
                vec![FactorNode::shift_expand(v2, shift, n)?],
            )
        };
        return pair_nodes(n, xs, ys, vec![], None);
    }
    // Upper parts (with the zero diagonal) hang off global row 0 and are spread
    // by the block shift; strictly lower parts hang off row q − 1 and are
    // spread by the upward block shift. P_0 is split evenly between the two.
    let mut u_row = vec![ZERO; n];
    let mut l_row = vec![ZERO; n];
    for c in 0..nb {
        let w = if c == 0 { 0.5 } else { 1.0 };
        for o in 0..q {
            u_row[c * q + o] = gen(c, o) * w;
        }
        for b in 0..q - 1 {
            l_row[c * q + b] = gen(c, q - 1 - b).conj() * w;
        }
    }
    u_row[0] = ZERO;
    let (v1, v2) = rank2_factor(&BorderedCross::new(0, u_row)?);
    let (w1, w2) = rank2_factor(&BorderedCross::new(q - 1, l_row)?);
    let down = StructuredOp::BlockShift { n, block: q };
    let up = StructuredOp::BlockShiftUp { n, block: q };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    if !is_zero(&v1) {
        xs.push(FactorNode::shift_expand(v1, down, q)?);
        ys.push(FactorNode::shift_expand(v2, down, q)?);
    }
    if !is_zero(&w1) {
        xs.push(FactorNode::shift_expand(w1, up, q)?);
        ys.push(FactorNode::shift_expand(w2, up, q)?);
    }
    let k = log2(n);
    let first = log2(q) + 1;
    pair_nodes(n, xs, ys, (first..=k).collect(), Some(q))
}

/// X, Y with X·X* − Y·Y* = H_k (blocks of order one).
pub fn factor_final(state: &HLevelState) -> Result<(FactorNode, FactorNode)> {
    if state.block_order != 1 {
        return Err(Error::Precondition(format!(
            "final stage needs blocks of order 1, got {}",
            state.block_order
        )));
    }
    final_nodes(state.first_block_row.iter().map(|g| g.gen()[0]).collect())
}

/// Factors of H_k from its first row.
fn final_nodes(mut row: Vec<C64>) -> Result<(FactorNode, FactorNode)> {
    let n = row.len();
    let d = row[0].re;
    row[0] = ZERO;
    let (v1, v2) = rank2_factor(&BorderedCross::new(0, row)?);
    let levels: Vec<usize> = (1..=log2(n)).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    if !is_zero(&v1) {
        let dbl = |v| -> Result<FactorNode> {
            let base = FactorNode::base_vector(v)?;
            if levels.is_empty() {
                Ok(base)
            } else {
                FactorNode::doubling(base, levels.clone())
            }
        };
        xs.push(dbl(v1)?);
        ys.push(dbl(v2)?);
    }
    if d > 0.0 {
        xs.push(FactorNode::scaled_identity(d.sqrt(), n)?);
    } else if d < 0.0 {
        ys.push(FactorNode::scaled_identity((-d).sqrt(), n)?);
    }
    Ok((concat_nonempty(n, xs)?, concat_nonempty(n, ys)?))
}

fn prefixed(node: FactorNode, depth: usize) -> Result<FactorNode> {
    if depth == 0 {
        Ok(node)
    } else {
        FactorNode::unitary_prefix(node, depth)
    }
}

/// H = B·B* − C·C* for a real Hankel generator of any order.
pub fn hankel_factor(h: &HankelGen) -> Result<FactorPair> {
    if !h.is_real() {
        return Err(Error::Rejected(
            "Hankel factorization requires a real generator".into(),
        ));
    }
    let n0 = h.order();
    let padded = pad_to_power_of_two(h);
    let n = padded.order();
    let k = log2(n);
    // Levels are consumed as they are produced, so only one H_t is live.
    let mut bs = Vec::with_capacity(k + 1);
    let mut cs = Vec::with_capacity(k + 1);
    let mut h: Vec<f64> = padded.gen().iter().map(|z| z.re).collect();
    let mut im = Vec::with_capacity(n);
    for t in 1..=k {
        let q = n >> (t - 1);
        h = split_flat(&h, q, &mut im);
        let (x, y) = nt_nodes(q, n / q, |c, o| C64::new(0.0, im[c * q + o]))?;
        bs.push(prefixed(x, t)?);
        cs.push(prefixed(y, t)?);
    }
    let (x, y) = final_nodes(h.into_iter().map(|v| C64::new(v, 0.0)).collect())?;
    bs.push(prefixed(x, k)?);
    cs.push(prefixed(y, k)?);
    bs.reverse();
    cs.reverse();
    FactorPair::new(
        FactorNode::concat(n, bs)?,
        FactorNode::concat(n, cs)?,
        n0,
        "hankel_factor",
    )
}

#[derive(Serialize)]
struct GenDump {
    gen: Vec<[f64; 2]>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LevelDump {
    kind: &'static str,
    level: usize,
    block_order: usize,
    max_abs: f64,
    first_block_row: Vec<GenDump>,
}

fn dump_gens<'a>(gens: impl Iterator<Item = &'a [C64]>) -> Vec<GenDump> {
    gens.map(|g| GenDump {
        gen: g.iter().map(|z| [z.re, z.im]).collect(),
    })
    .collect()
}

impl HankelLevels {
    /// JSON list of per-level first-block-row generators.
    pub fn to_json(&self) -> Result<String> {
        let mut out = Vec::new();
        for s in &self.h {
            out.push(LevelDump {
                kind: "H",
                level: s.level,
                block_order: s.block_order,
                max_abs: s.max_abs(),
                first_block_row: dump_gens(s.first_block_row.iter().map(|g| g.gen())),
            });
        }
        for s in &self.n {
            out.push(LevelDump {
                kind: "N",
                level: s.level,
                block_order: s.block_order,
                max_abs: s.max_abs(),
                first_block_row: dump_gens(s.first_block_row.iter().map(|g| g.gen())),
            });
        }
        Ok(serde_json::to_string_pretty(&out)?)
    }
}
