//! Application of `Doubling` nodes.
//!
//! When the child acts block-locally (each column lives in blocks of length g,
//! where g = 2^(l1 − 1) for the first doubling level l1), the doubled factor
//! couples block β of the output with chunk c of the input through the kernel
//! of block β ⊕ c. After a per-block FFT this is an XOR convolution over block
//! indices, masked inside the first window by the E operators.

use crate::fft::{fft_forward, fft_inverse, next_pow2, xor_convolve};
use crate::structured::StructuredOp;
use crate::C64;

use super::FactorNode;

const ZERO: C64 = C64::new(0.0, 0.0);

struct LocalPart<'a> {
    v: &'a [C64],
    up: bool,
    width: usize,
    offset: usize,
}

fn collect_parts<'a>(
    node: &'a FactorNode,
    g: usize,
    parts: &mut Vec<LocalPart<'a>>,
    offset: &mut usize,
) -> bool {
    use FactorNode::*;
    let (v, up, width): (&[C64], bool, usize) = match node {
        BaseVector { v } => (v, false, 1),
        ShiftExpand { v, shift, count } => match *shift {
            StructuredOp::BlockShift { block, .. } if block == g => (v, false, *count),
            StructuredOp::BlockShiftUp { block, .. } if block == g => (v, true, *count),
            StructuredOp::ShiftDown { n } if n == g => (v, false, *count),
            StructuredOp::ShiftUp { n } if n == g => (v, true, *count),
            _ => return false,
        },
        Concat { children, .. } => {
            return children
                .iter()
                .all(|c| collect_parts(c, g, parts, offset));
        }
        _ => return false,
    };
    parts.push(LocalPart {
        v,
        up,
        width,
        offset: *offset,
    });
    *offset += width;
    true
}

fn fast_parts<'a>(child: &'a FactorNode, levels: &[usize]) -> Option<(usize, Vec<LocalPart<'a>>)> {
    let first = *levels.first()?;
    if levels.iter().enumerate().any(|(i, &l)| l != first + i) {
        return None;
    }
    let g = 1usize << (first - 1);
    let mut parts = Vec::new();
    let mut off = 0;
    if collect_parts(child, g, &mut parts, &mut off) {
        Some((g, parts))
    } else {
        None
    }
}

pub(super) fn apply(child: &FactorNode, levels: &[usize], x: &[C64]) -> Vec<C64> {
    let n = child.nrows();
    if let Some((g, parts)) = fast_parts(child, levels) {
        let w = child.ncols();
        let mut y = vec![ZERO; n];
        for p in &parts {
            fast_apply_part(p, g, levels.len(), w, n, x, &mut y);
        }
        return y;
    }
    naive_apply(child, levels, x)
}

pub(super) fn adjoint(child: &FactorNode, levels: &[usize], y: &[C64]) -> Vec<C64> {
    let n = child.nrows();
    if let Some((g, parts)) = fast_parts(child, levels) {
        let w = child.ncols();
        let mut x = vec![ZERO; w << levels.len()];
        for p in &parts {
            fast_adjoint_part(p, g, levels.len(), w, n, y, &mut x);
        }
        return x;
    }
    naive_adjoint(child, levels, y)
}

pub(super) fn naive_apply(child: &FactorNode, levels: &[usize], x: &[C64]) -> Vec<C64> {
    let Some((&top, rest)) = levels.split_last() else {
        return child.apply_unchecked(x);
    };
    let n = child.nrows();
    let half = x.len() / 2;
    let mut y = naive_apply(child, rest, &x[..half]);
    let mut z = naive_apply(child, rest, &x[half..]);
    StructuredOp::SwapF { n, level: top }.apply_in_place(&mut z, false);
    StructuredOp::MaskE { n, level: top }.apply_in_place(&mut z, false);
    for (a, b) in y.iter_mut().zip(&z) {
        *a += b;
    }
    y
}

fn naive_adjoint(child: &FactorNode, levels: &[usize], y: &[C64]) -> Vec<C64> {
    let Some((&top, rest)) = levels.split_last() else {
        return child.adjoint_unchecked(y);
    };
    let n = child.nrows();
    let mut out = naive_adjoint(child, rest, y);
    let mut z = y.to_vec();
    StructuredOp::MaskE { n, level: top }.apply_in_place(&mut z, false);
    StructuredOp::SwapF { n, level: top }.apply_in_place(&mut z, false);
    out.extend(naive_adjoint(child, rest, &z));
    out
}

/// Forward operator of the first window: y_β = Σ_c [chunk c reaches β] a[β ⊕ c] x_c.
fn masked(a: &[C64], x: &[C64]) -> Vec<C64> {
    let w = a.len();
    if w == 1 {
        return vec![a[0] * x[0]];
    }
    let h = w / 2;
    let (aa, ab) = a.split_at(h);
    let (x1, x2) = x.split_at(h);
    let mut y = masked(aa, x1);
    let mut yb = xor_convolve(ab, x1);
    for (p, q) in yb.iter_mut().zip(masked(aa, x2)) {
        *p += q;
    }
    y.extend(yb);
    y
}

/// Transpose of [`masked`].
fn masked_transpose(a: &[C64], y: &[C64]) -> Vec<C64> {
    let w = a.len();
    if w == 1 {
        return vec![a[0] * y[0]];
    }
    let h = w / 2;
    let (aa, ab) = a.split_at(h);
    let (ya, yb) = y.split_at(h);
    let mut x1 = masked_transpose(aa, ya);
    for (p, q) in x1.iter_mut().zip(xor_convolve(ab, yb)) {
        *p += q;
    }
    x1.extend(masked_transpose(aa, yb));
    x1
}

fn transform_rows(buf: &mut [C64], f: usize, inverse: bool) {
    if f == 1 {
        return;
    }
    for row in buf.chunks_mut(f) {
        if inverse {
            fft_inverse(row);
        } else {
            fft_forward(row);
        }
    }
}

/// Mixes per-frequency block vectors: out[β][ω] = Σ_c M(β, c) a[β ⊕ c][ω] inp[c][ω],
/// or its transpose.
fn mix(a: &[C64], inp: &[C64], nb: usize, win: usize, f: usize, transpose: bool) -> Vec<C64> {
    let mut out = vec![ZERO; nb * f];
    let mut av = vec![ZERO; win];
    let mut iv = vec![ZERO; win];
    for w in 0..nb / win {
        for omega in 0..f {
            for k in 0..win {
                av[k] = a[(w * win + k) * f + omega];
                iv[k] = if transpose {
                    inp[(w * win + k) * f + omega]
                } else {
                    inp[k * f + omega]
                };
            }
            let r = match (w, transpose) {
                (0, false) => masked(&av, &iv),
                (0, true) => masked_transpose(&av, &iv),
                _ => xor_convolve(&av, &iv),
            };
            for k in 0..win {
                if transpose {
                    out[k * f + omega] += r[k];
                } else {
                    out[(w * win + k) * f + omega] = r[k];
                }
            }
        }
    }
    out
}

fn fast_apply_part(
    p: &LocalPart,
    g: usize,
    depth: usize,
    w: usize,
    n: usize,
    x: &[C64],
    y: &mut [C64],
) {
    let nb = n / g;
    let win = 1usize << depth;
    let f = next_pow2(g + p.width - 1);
    let mut kernel = vec![ZERO; nb * f];
    for (b, row) in kernel.chunks_mut(f).enumerate() {
        let seg = &p.v[b * g..(b + 1) * g];
        if p.up {
            seg.iter().rev().zip(row.iter_mut()).for_each(|(s, r)| *r = *s);
        } else {
            row[..g].copy_from_slice(seg);
        }
    }
    transform_rows(&mut kernel, f, false);
    let mut inp = vec![ZERO; win * f];
    for (c, row) in inp.chunks_mut(f).enumerate() {
        let start = c * w + p.offset;
        row[..p.width].copy_from_slice(&x[start..start + p.width]);
    }
    transform_rows(&mut inp, f, false);
    let mut out = mix(&kernel, &inp, nb, win, f, false);
    transform_rows(&mut out, f, true);
    for (b, row) in out.chunks(f).enumerate() {
        let yb = &mut y[b * g..(b + 1) * g];
        for (i, o) in yb.iter_mut().enumerate() {
            *o += if p.up { row[g - 1 - i] } else { row[i] };
        }
    }
}

fn fast_adjoint_part(
    p: &LocalPart,
    g: usize,
    depth: usize,
    w: usize,
    n: usize,
    y: &[C64],
    x: &mut [C64],
) {
    let nb = n / g;
    let win = 1usize << depth;
    let f = next_pow2(g + p.width - 1);
    // Correlation kernels: down uses rev(conj v) against y, up uses conj v against rev(y).
    let mut kernel = vec![ZERO; nb * f];
    let mut inp = vec![ZERO; nb * f];
    for b in 0..nb {
        let seg = &p.v[b * g..(b + 1) * g];
        let ys = &y[b * g..(b + 1) * g];
        let krow = &mut kernel[b * f..b * f + g];
        let irow = &mut inp[b * f..b * f + g];
        if p.up {
            seg.iter().zip(krow.iter_mut()).for_each(|(s, r)| *r = s.conj());
            ys.iter().rev().zip(irow.iter_mut()).for_each(|(s, r)| *r = *s);
        } else {
            seg.iter().rev().zip(krow.iter_mut()).for_each(|(s, r)| *r = s.conj());
            irow.copy_from_slice(ys);
        }
    }
    transform_rows(&mut kernel, f, false);
    transform_rows(&mut inp, f, false);
    let mut out = mix(&kernel, &inp, nb, win, f, true);
    out.truncate(win * f);
    transform_rows(&mut out, f, true);
    for (c, row) in out.chunks(f).enumerate() {
        let start = c * w + p.offset;
        for j in 0..p.width {
            x[start + j] += row[(g - 1 + j) % f];
        }
    }
}
