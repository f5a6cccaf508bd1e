//! Factorization of real symmetric matrices with small Sylvester displacement rank.
//!
//! Each level folds every block with S, peels off the imaginary part N_t and
//! keeps the real part M_t. After half as many levels as the Hankel recursion
//! the remaining M is factored by one dense eigendecomposition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::factor::{concat_nonempty, FactorNode, FactorPair};
use crate::structured::{
    is_hermitian, is_persymmetric, is_symmetric, left_apply, stein_displacement,
    sylvester_displacement, HankelGen, StructuredOp,
};
use crate::C64;

/// Dense symmetric input together with its claimed displacement rank.
#[derive(Clone, Debug)]
pub struct DisplacementInput {
    pub matrix: DenseMatrix,
    pub rank: usize,
    /// Condition-number bound, used only to scale tolerances.
    pub kappa_bound: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct DisplacementOptions {
    /// Relative singular-value threshold for numeric ranks.
    pub tau: f64,
    /// Eigenvalues with |λ| ≤ eig_drop·|λ|max are treated as zero.
    pub eig_drop: f64,
    /// Seed for the optional random perturbation of each displacement block.
    pub perturb_seed: Option<u64>,
}

impl Default for DisplacementOptions {
    fn default() -> Self {
        DisplacementOptions {
            tau: 1e-10,
            eig_drop: 1e-12,
            perturb_seed: None,
        }
    }
}

/// Measured Sylvester displacement ranks for (Δ, Δᵀ) and (Δᵀ, Δ).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisplacementCheck {
    pub down_rank: usize,
    pub up_rank: usize,
    pub passes: bool,
}

pub fn check_displacement(m: &DenseMatrix, r: usize, tau: f64) -> Result<DisplacementCheck> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let n = m.rows();
    let down = StructuredOp::ShiftDown { n };
    let up = StructuredOp::ShiftUp { n };
    let down_rank = sylvester_displacement(m, &down, &up)?.numeric_rank(tau)?;
    let up_rank = sylvester_displacement(m, &up, &down)?.numeric_rank(tau)?;
    Ok(DisplacementCheck {
        down_rank,
        up_rank,
        passes: down_rank <= r && up_rank <= r,
    })
}

/// S̃_t·M·S̃_t* with S applied per block of order n / 2^(t−1).
fn fold_dense(m: &DenseMatrix, t: usize) -> Result<DenseMatrix> {
    let op = StructuredOp::BlockFoldUnitary { n: m.rows(), level: t };
    let a = left_apply(&op, m)?;
    Ok(left_apply(&op, &a.adjoint())?.adjoint())
}

/// Level-t fold of M_{t−1}: returns (N_t, M_t).
pub fn fold_level(m: &DenseMatrix, t: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    if t == 0 {
        return Err(Error::Rejected("fold levels start at 1".into()));
    }
    let f = fold_dense(m, t)?;
    Ok((f.imag_part().scale(C64::new(0.0, 1.0)), f.real_part()))
}

/// Structural measurements of one fold of a whole matrix.
#[derive(Clone, Debug, Serialize)]
pub struct FoldStructure {
    pub real_bisymmetric: bool,
    pub imag_hermitian: bool,
    pub imag_persymmetric: bool,
    pub imag_diag_max: f64,
    /// Sylvester ranks of the real part for (Δ, Δᵀ) and (Δᵀ, Δ).
    pub real_sylvester_ranks: (usize, usize),
    /// Stein rank N − Δ·N·Δᵀ of the imaginary part.
    pub imag_stein_rank: usize,
}

pub fn fold_structure(m: &DenseMatrix, tau: f64) -> Result<FoldStructure> {
    let n = m.rows();
    let (imag, real) = fold_level(m, 1)?;
    let down = StructuredOp::ShiftDown { n };
    let up = StructuredOp::ShiftUp { n };
    let scale = m.max_abs();
    let tol = Some(1e-10 * scale.max(f64::MIN_POSITIVE));
    Ok(FoldStructure {
        real_bisymmetric: is_symmetric(&real, tol) && is_persymmetric(&real, tol),
        imag_hermitian: is_hermitian(&imag, tol),
        imag_persymmetric: is_persymmetric(&imag, tol),
        imag_diag_max: (0..n).map(|i| imag[(i, i)].norm()).fold(0.0, f64::max),
        real_sylvester_ranks: (
            sylvester_displacement(&real, &down, &up)?.numeric_rank(tau)?,
            sylvester_displacement(&real, &up, &down)?.numeric_rank(tau)?,
        ),
        imag_stein_rank: stein_displacement(&imag, &down, &up)?.numeric_rank(tau)?,
    })
}

/// N_t by its block order and first block column, plus the running real part M_t.
#[derive(Clone, Debug)]
pub struct GLevelState {
    pub level: usize,
    pub block_order: usize,
    /// Blocks N_t(j, 0), j = 0..2^(t−1).
    pub first_block_column: Vec<DenseMatrix>,
    pub residual: DenseMatrix,
}

impl GLevelState {
    pub fn from_fold(level: usize, n_t: &DenseMatrix, m_t: DenseMatrix) -> Self {
        let n = n_t.rows();
        let q = n >> (level - 1);
        let first_block_column = (0..n / q).map(|j| n_t.submatrix(j * q, 0, q, q)).collect();
        GLevelState {
            level,
            block_order: q,
            first_block_column,
            residual: m_t,
        }
    }

    pub fn order(&self) -> usize {
        self.block_order * self.first_block_column.len()
    }
}

fn exchange_rows(m: &DenseMatrix) -> DenseMatrix {
    let q = m.rows();
    DenseMatrix::from_fn(q, m.cols(), |i, j| m[(q - 1 - i, j)])
}

/// Counters and measurements collected while factoring.
#[derive(Clone, Debug, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DisplacementReport {
    pub source_order: usize,
    pub padded_order: usize,
    pub levels: usize,
    pub eigendecompositions: usize,
    pub input_down_rank: usize,
    pub input_up_rank: usize,
    /// Numeric rank of Q − Δ·Q·Δᵀ for the leading block of each N_t.
    pub stein_ranks: Vec<usize>,
    /// 2^t·r + 2 for each level.
    pub stein_bounds: Vec<usize>,
    pub residual_is_identity: bool,
}

struct Ctx<'a> {
    opts: &'a DisplacementOptions,
    tau: f64,
    rng: Option<ChaCha8Rng>,
    report: DisplacementReport,
}

fn perturb(w: &DenseMatrix, rng: &mut ChaCha8Rng) -> Result<DenseMatrix> {
    let q = w.rows();
    let raw = DenseMatrix::from_fn(q, q, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let herm = raw.hermitian_part()?;
    let norm = herm.frobenius_norm();
    if norm == 0.0 {
        return Ok(w.clone());
    }
    w.add(&herm.scale(C64::new(1e-10 * w.frobenius_norm() / norm, 0.0)))
}

/// D, E with D·D* − E·E* = Q1 embedded in the leading block of an n-row factor.
pub fn factor_displacement_block(
    q1: &DenseMatrix,
    n: usize,
    opts: &DisplacementOptions,
) -> Result<(FactorNode, FactorNode)> {
    let mut ctx = Ctx {
        opts,
        tau: opts.tau,
        rng: opts.perturb_seed.map(ChaCha8Rng::seed_from_u64),
        report: DisplacementReport::default(),
    };
    let (d, e) = block_factors(q1, n, &mut ctx)?;
    Ok((concat_nonempty(n, d)?, concat_nonempty(n, e)?))
}

fn block_factors(
    q1: &DenseMatrix,
    n: usize,
    ctx: &mut Ctx,
) -> Result<(Vec<FactorNode>, Vec<FactorNode>)> {
    let q = q1.rows();
    let mut w = stein_displacement(
        q1,
        &StructuredOp::ShiftDown { n: q },
        &StructuredOp::ShiftUp { n: q },
    )?;
    if let Some(rng) = ctx.rng.as_mut() {
        w = perturb(&w, rng)?;
    }
    ctx.report.stein_ranks.push(w.numeric_rank(ctx.tau)?);
    let (vals, vecs) = w.hermitian_eigen()?;
    ctx.report.eigendecompositions += 1;
    let top = vals.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let shift = if n == q {
        StructuredOp::ShiftDown { n }
    } else {
        StructuredOp::BlockShift { n, block: q }
    };
    let (mut d, mut e) = (Vec::new(), Vec::new());
    for (idx, &lam) in vals.iter().enumerate() {
        if top == 0.0 || lam.abs() <= ctx.opts.eig_drop * top {
            continue;
        }
        let s = lam.abs().sqrt();
        let mut col = vec![C64::new(0.0, 0.0); n];
        for i in 0..q {
            col[i] = vecs[(i, idx)] * s;
        }
        let node = FactorNode::shift_expand(col, shift, q)?;
        if lam > 0.0 {
            d.push(node);
        } else {
            e.push(node);
        }
    }
    Ok((d, e))
}

/// X_t, Y_t with X_t·X_t* − Y_t·Y_t* = N_t.
pub fn factor_nt_general(
    state: &GLevelState,
    opts: &DisplacementOptions,
) -> Result<(FactorNode, FactorNode)> {
    let mut ctx = Ctx {
        opts,
        tau: opts.tau,
        rng: opts.perturb_seed.map(ChaCha8Rng::seed_from_u64),
        report: DisplacementReport::default(),
    };
    level_factors(state, &mut ctx)
}

fn level_factors(state: &GLevelState, ctx: &mut Ctx) -> Result<(FactorNode, FactorNode)> {
    let q = state.block_order;
    let nb = state.first_block_column.len();
    let n = q * nb;
    let (mut d, mut e) = block_factors(&state.first_block_column[0], n, ctx)?;
    let off_zero = state.first_block_column[1..].iter().all(|b| b.max_abs() == 0.0);
    if nb == 1 || (off_zero && d.is_empty() && e.is_empty()) {
        return Ok((concat_nonempty(n, d)?, concat_nonempty(n, e)?));
    }
    // Conjugating by blockdiag(J on odd blocks) turns N_t into a block-XOR
    // matrix with blocks P_c = J^{c mod 2}·N_t(c, 0); the cross formed by its
    // first block row and column is F1·F1* − G1·G1*.
    let mut with_id = DenseMatrix::zeros(n, q);
    let mut id_only = DenseMatrix::zeros(n, q);
    let mut rest = DenseMatrix::zeros(n, q);
    let ident = DenseMatrix::identity(q);
    with_id.set_submatrix(0, 0, &ident);
    id_only.set_submatrix(0, 0, &ident);
    for (j, blk) in state.first_block_column.iter().enumerate().skip(1) {
        let p = if j % 2 == 1 { exchange_rows(blk) } else { blk.clone() };
        with_id.set_submatrix(j * q, 0, &p);
        rest.set_submatrix(j * q, 0, &p);
    }
    if !off_zero {
        d.push(FactorNode::dense_block(with_id));
        e.push(FactorNode::dense_block(id_only));
        e.push(FactorNode::dense_block(rest));
    }
    let k = n.trailing_zeros() as usize;
    let first = q.trailing_zeros() as usize + 1;
    let levels: Vec<usize> = (first..=k).collect();
    let wrap = |parts: Vec<FactorNode>| -> Result<FactorNode> {
        if parts.is_empty() {
            return Ok(FactorNode::empty(n));
        }
        FactorNode::permuted_copy(
            FactorNode::doubling(concat_nonempty(n, parts)?, levels.clone())?,
            vec![StructuredOp::OddBlockExchange { n, block: q }],
        )
    };
    Ok((wrap(d)?, wrap(e)?))
}

/// Factorization plus the measurements taken along the way.
#[derive(Clone, Debug)]
pub struct DisplacementFactorization {
    pub pair: FactorPair,
    pub report: DisplacementReport,
}

fn power_of_four_at_least(n: usize) -> usize {
    let mut p = 1;
    while p < n {
        p *= 4;
    }
    p
}

/// Effective rank threshold: scaled up for ill-conditioned inputs.
pub fn scaled_tau(tau: f64, n: usize, kappa: Option<f64>) -> f64 {
    match kappa {
        Some(k) if k.is_finite() => tau.max(10.0 * n as f64 * k * f64::EPSILON),
        _ => tau,
    }
}

pub fn displacement_factor(
    input: &DisplacementInput,
    opts: &DisplacementOptions,
) -> Result<DisplacementFactorization> {
    let m = &input.matrix;
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    if !m.is_real() {
        return Err(Error::Rejected("displacement input must be real".into()));
    }
    let n0 = m.rows();
    if n0 == 0 {
        return Err(Error::Rejected("empty matrix".into()));
    }
    if !is_symmetric(m, None) {
        return Err(Error::Rejected("displacement input must be symmetric".into()));
    }
    let tau = scaled_tau(opts.tau, n0, input.kappa_bound);
    let check = check_displacement(m, input.rank, tau)?;
    if !check.passes {
        return Err(Error::Precondition(format!(
            "displacement ranks ({}, {}) exceed claimed rank {}",
            check.down_rank, check.up_rank, input.rank
        )));
    }
    let n = power_of_four_at_least(n0);
    let mut cur = if n == n0 {
        m.clone()
    } else {
        let mut p = DenseMatrix::zeros(n, n);
        p.set_submatrix(0, 0, m);
        let padded = check_displacement(&p, input.rank + 2, tau)?;
        if !padded.passes {
            return Err(Error::Numeric(format!(
                "zero extension raised displacement ranks to ({}, {})",
                padded.down_rank, padded.up_rank
            )));
        }
        p
    };
    let k = n.trailing_zeros() as usize;
    let half = k / 2;
    let mut ctx = Ctx {
        opts,
        tau,
        rng: opts.perturb_seed.map(ChaCha8Rng::seed_from_u64),
        report: DisplacementReport {
            source_order: n0,
            padded_order: n,
            levels: half,
            input_down_rank: check.down_rank,
            input_up_rank: check.up_rank,
            ..Default::default()
        },
    };
    let mut level_nodes = Vec::with_capacity(half);
    for t in 1..=half {
        let (n_t, m_t) = fold_level(&cur, t)?;
        let state = GLevelState::from_fold(t, &n_t, m_t);
        ctx.report.stein_bounds.push((1 << t) * input.rank + 2);
        level_nodes.push(level_factors(&state, &mut ctx)?);
        cur = state.residual;
    }
    let (rx, ry) = residual_factors(&cur, &mut ctx)?;
    let wrap = |node: FactorNode, depth: usize| -> Result<FactorNode> {
        if depth == 0 {
            Ok(node)
        } else {
            FactorNode::unitary_prefix(node, depth)
        }
    };
    let mut bs = vec![wrap(rx, half)?];
    let mut cs = vec![wrap(ry, half)?];
    for (t, (x, y)) in level_nodes.into_iter().enumerate().rev() {
        bs.push(wrap(x, t + 1)?);
        cs.push(wrap(y, t + 1)?);
    }
    let pair = FactorPair::new(
        FactorNode::concat(n, bs)?,
        FactorNode::concat(n, cs)?,
        n0,
        "displacement_factor",
    )?;
    Ok(DisplacementFactorization {
        pair,
        report: ctx.report,
    })
}

fn residual_factors(m: &DenseMatrix, ctx: &mut Ctx) -> Result<(FactorNode, FactorNode)> {
    let n = m.rows();
    let c = m[(0, 0)].re;
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let is_identity = (0..n).all(|i| {
        (0..n).all(|j| {
            let e = if i == j { c } else { 0.0 };
            (m[(i, j)] - C64::new(e, 0.0)).norm() <= 1e-14 * scale
        })
    });
    ctx.report.eigendecompositions += 1;
    if is_identity {
        ctx.report.residual_is_identity = true;
        let node = FactorNode::scaled_identity(c.abs().sqrt(), n)?;
        return Ok(if c > 0.0 {
            (node, FactorNode::empty(n))
        } else if c < 0.0 {
            (FactorNode::empty(n), node)
        } else {
            (FactorNode::empty(n), FactorNode::empty(n))
        });
    }
    let (vals, vecs) = m.hermitian_eigen()?;
    let top = vals.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (idx, &lam) in vals.iter().enumerate() {
        if lam.abs() <= ctx.opts.eig_drop * top {
            continue;
        }
        let s = lam.abs().sqrt();
        let col: Vec<C64> = (0..n).map(|i| vecs[(i, idx)] * s).collect();
        if lam > 0.0 {
            pos.push(col);
        } else {
            neg.push(col);
        }
    }
    let block = |cols: Vec<Vec<C64>>| -> Result<FactorNode> {
        if cols.is_empty() {
            Ok(FactorNode::empty(n))
        } else {
            Ok(FactorNode::dense_block(DenseMatrix::from_columns(n, &cols)?))
        }
    };
    Ok((block(pos)?, block(neg)?))
}

/// Largest condition number accepted by [`hankel_inverse_factor`].
pub const MAX_CONDITION: f64 = 1e12;

/// Densely inverts a real Hankel matrix and factors the inverse.
pub fn hankel_inverse_factor(
    h: &HankelGen,
    opts: &DisplacementOptions,
) -> Result<DisplacementFactorization> {
    if !h.is_real() {
        return Err(Error::Rejected("Hankel inverse needs a real generator".into()));
    }
    let hm = h.materialize()?;
    let kappa = hm.condition_number()?;
    if !kappa.is_finite() || kappa > MAX_CONDITION {
        return Err(Error::Numeric(format!(
            "Hankel matrix is singular or ill-conditioned (condition estimate {kappa:e})"
        )));
    }
    let inv = hm.inverse()?;
    let sym = inv.add(&inv.transpose())?.scale(C64::new(0.5, 0.0)).real_part();
    let mut out = displacement_factor(
        &DisplacementInput {
            matrix: sym,
            rank: 2,
            kappa_bound: Some(kappa),
        },
        opts,
    )?;
    out.pair.provenance = "hankel_inverse_factor".into();
    Ok(out)
}

#[cfg(test)]
mod tests;
