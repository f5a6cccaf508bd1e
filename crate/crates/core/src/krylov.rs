//! Block-Krylov matrices K = [G, AG, …, A^{m−1}G] and batched products with K
//! and Kᵀ that never form K.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::structured::numeric_rank;
use crate::C64;

/// Largest n for which K is materialized.
pub const KRYLOV_DENSE_CAP: usize = 2048;

/// Real sparse matrix in coordinate form, sorted by (row, col), duplicates summed.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawSparse {
    rows: usize,
    cols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, v) in &triplets {
            if i >= rows || j >= cols {
                return Err(Error::Rejected(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Rejected(format!("non-finite entry at ({i}, {j})")));
            }
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        Ok(SparseMatrix {
            rows,
            cols,
            triplets: merged,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            triplets: (0..n).map(|i| (i, i, 1.0)).collect(),
        }
    }

    /// The down-shift Δ with ones on the subdiagonal.
    pub fn shift(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            triplets: (1..n).map(|i| (i, i - 1, 1.0)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets.iter().map(|&(i, j, v)| (j, i, v)).collect();
        SparseMatrix::new(self.cols, self.rows, t).expect("transpose keeps indices in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] += v;
        }
        m
    }

    /// max |A − Aᵀ|, or infinity for a non-square matrix.
    pub fn symmetry_residual(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let d = self.to_dense();
        (&d - d.transpose()).amax()
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.nrows(),
            });
        }
        let mut y = DMatrix::zeros(self.rows, x.ncols());
        for &(i, j, v) in &self.triplets {
            for c in 0..x.ncols() {
                y[(i, c)] += v * x[(j, c)];
            }
        }
        Ok(y)
    }

    pub fn transpose_mul_dense(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: x.nrows(),
            });
        }
        let mut y = DMatrix::zeros(self.cols, x.ncols());
        for &(i, j, v) in &self.triplets {
            for c in 0..x.ncols() {
                y[(j, c)] += v * x[(i, c)];
            }
        }
        Ok(y)
    }

    /// Reads `row col value` lines (0-based). An optional first line with two
    /// integers gives the shape; otherwise it is inferred. `#` starts a comment.
    pub fn parse_triplets(text: &str) -> Result<Self> {
        let mut shape = None;
        let mut trip = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: String| Error::Parse {
                line: ln + 1,
                column: 1,
                message: msg,
            };
            let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
            match toks.len() {
                2 if shape.is_none() && trip.is_empty() => {
                    shape = Some((int(toks[0])?, int(toks[1])?));
                }
                3 => {
                    let v = toks[2]
                        .parse::<f64>()
                        .map_err(|e| bad(format!("{:?}: {e}", toks[2])))?;
                    trip.push((int(toks[0])?, int(toks[1])?, v));
                }
                k => return Err(bad(format!("expected 3 fields, found {k}"))),
            }
        }
        let (rows, cols) = shape.unwrap_or_else(|| {
            trip.iter()
                .fold((0, 0), |(r, c), &(i, j, _)| (r.max(i + 1), c.max(j + 1)))
        });
        SparseMatrix::new(rows, cols, trip)
    }

    /// `{"rows", "cols", "triplets": [[i, j, v], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSparse = serde_json::from_str(text)?;
        SparseMatrix::new(raw.rows, raw.cols, raw.triplets)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&RawSparse {
            rows: self.rows,
            cols: self.cols,
            triplets: self.triplets.clone(),
        })?)
    }

    /// JSON when the text starts with `{`, triplet lines otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            SparseMatrix::from_json(text)
        } else {
            SparseMatrix::parse_triplets(text)
        }
    }
}

/// Random sparse rows×cols matrix with `per_col` nonzeros in each column,
/// values uniform in [−1, 1].
pub fn random_sparse(rows: usize, cols: usize, per_col: usize, seed: u64) -> SparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::with_capacity(cols * per_col);
    for j in 0..cols {
        for _ in 0..per_col.min(rows) {
            t.push((rng.gen_range(0..rows), j, rng.gen_range(-1.0..1.0)));
        }
    }
    SparseMatrix::new(rows, cols, t).expect("indices drawn in range")
}

/// Random symmetric sparse n×n matrix with about `per_row` off-diagonal
/// nonzeros per row and a random diagonal.
pub fn random_symmetric_sparse(n: usize, per_row: usize, seed: u64) -> SparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, rng.gen_range(-1.0..1.0)));
        for _ in 0..per_row / 2 {
            let j = rng.gen_range(0..n);
            let v = rng.gen_range(-1.0..1.0) / per_row.max(1) as f64;
            t.push((i, j, v));
            t.push((j, i, v));
        }
    }
    SparseMatrix::new(n, n, t).expect("indices drawn in range")
}

#[derive(Clone, Debug)]
pub struct KrylovSpec {
    pub a: SparseMatrix,
    pub g: SparseMatrix,
    pub m: usize,
}

impl KrylovSpec {
    pub fn new(a: SparseMatrix, g: SparseMatrix, m: usize) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.cols(),
            });
        }
        if g.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.rows(),
            });
        }
        if m == 0 || m * g.cols() != n {
            return Err(Error::Rejected(format!(
                "block count {m} times block width {} is not {n}",
                g.cols()
            )));
        }
        Ok(KrylovSpec { a, g, m })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn s(&self) -> usize {
        self.g.cols()
    }
}

/// Sparse products performed by one batched application.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub a_applications: usize,
    pub g_applications: usize,
}

fn to_real(b: &DenseMatrix) -> Result<DMatrix<f64>> {
    if !b.is_real() {
        return Err(Error::Rejected("Krylov products take real matrices".into()));
    }
    Ok(DMatrix::from_fn(b.rows(), b.cols(), |i, j| b[(i, j)].re))
}

fn from_real(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

fn dense_cap(n: usize) -> Result<()> {
    if n > KRYLOV_DENSE_CAP {
        return Err(Error::SizeCap {
            size: n,
            cap: KRYLOV_DENSE_CAP,
        });
    }
    Ok(())
}

fn krylov_real(spec: &KrylovSpec) -> Result<DMatrix<f64>> {
    let n = spec.n();
    let s = spec.s();
    dense_cap(n)?;
    let mut k = DMatrix::zeros(n, n);
    let mut cur = spec.g.to_dense();
    for i in 0..spec.m {
        if i > 0 {
            cur = spec.a.mul_dense(&cur)?;
        }
        k.view_mut((0, i * s), (n, s)).copy_from(&cur);
    }
    Ok(k)
}

pub fn build_krylov(spec: &KrylovSpec) -> Result<DenseMatrix> {
    Ok(from_real(&krylov_real(spec)?))
}

/// max |entry| of A^i·G for i = 0..m−1.
pub fn krylov_power_growth(spec: &KrylovSpec) -> Result<Vec<f64>> {
    let mut cur = spec.g.to_dense();
    let mut out = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        if i > 0 {
            cur = spec.a.mul_dense(&cur)?;
        }
        out.push(cur.amax());
    }
    Ok(out)
}

/// Largest deviation of an (m·s)-square matrix from block-Hankel form,
/// relative to its largest entry.
pub fn block_hankel_deviation(m: &DenseMatrix, s: usize) -> f64 {
    let nb = m.rows() / s;
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for bi in 0..nb {
        for bj in 0..nb {
            // Compare against the first block on the same antidiagonal.
            let d = bi + bj;
            let (ri, rj) = if d < nb { (0, d) } else { (d - nb + 1, nb - 1) };
            for a in 0..s {
                for b in 0..s {
                    let x = m[(bi * s + a, bj * s + b)];
                    let y = m[(ri * s + a, rj * s + b)];
                    worst = worst.max((x - y).norm() / scale);
                }
            }
        }
    }
    worst
}

/// Kᵀ·A·K, checked to be block-Hankel with s×s blocks Gᵀ·A^{i+j+1}·G.
pub fn build_block_hankel(spec: &KrylovSpec) -> Result<DenseMatrix> {
    let sym = spec.a.symmetry_residual();
    if sym > 0.0 {
        return Err(Error::Rejected(format!(
            "A is not symmetric: max |A − Aᵀ| = {sym:e}"
        )));
    }
    let k = krylov_real(spec)?;
    let ak = spec.a.mul_dense(&k)?;
    let h = from_real(&(k.transpose() * ak));
    let dev = block_hankel_deviation(&h, spec.s());
    if dev > 1e-10 {
        return Err(Error::Numeric(format!(
            "KᵀAK deviates from block-Hankel form by {dev:e}"
        )));
    }
    Ok(h)
}

/// Rank of U·M − M·Uᵀ with U = Δ^s the block down-shift.
pub fn block_displacement_rank(m: &DenseMatrix, s: usize, tau: f64) -> Result<usize> {
    let n = m.rows();
    let mut d = DenseMatrix::zeros(n, m.cols());
    for i in s..n {
        for j in 0..m.cols() {
            d[(i, j)] = m[(i - s, j)];
        }
    }
    let mut e = DenseMatrix::zeros(n, m.cols());
    for i in 0..n {
        for j in s..m.cols() {
            e[(i, j)] = m[(i, j - s)];
        }
    }
    numeric_rank(&d.sub(&e)?, tau)
}

/// K·B through M_m = G·B_m, M_{j−1} = G·B_{j−1} + A·M_j; returns M_1.
pub fn apply_k(spec: &KrylovSpec, b: &DenseMatrix) -> Result<(DenseMatrix, OpCounts)> {
    let n = spec.n();
    let s = spec.s();
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.rows(),
        });
    }
    let br = to_real(b)?;
    let mut counts = OpCounts::default();
    let block = |j: usize| br.rows(j * s, s).into_owned();
    let mut acc = spec.g.mul_dense(&block(spec.m - 1))?;
    counts.g_applications += 1;
    for j in (0..spec.m - 1).rev() {
        let mut next = spec.a.mul_dense(&acc)?;
        counts.a_applications += 1;
        next += spec.g.mul_dense(&block(j))?;
        counts.g_applications += 1;
        acc = next;
    }
    Ok((from_real(&acc), counts))
}

/// Kᵀ·B: block row i is Gᵀ·(Aᵀ)^i·B.
pub fn apply_k_transpose(spec: &KrylovSpec, b: &DenseMatrix) -> Result<(DenseMatrix, OpCounts)> {
    let n = spec.n();
    let s = spec.s();
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.rows(),
        });
    }
    let mut cur = to_real(b)?;
    let mut counts = OpCounts::default();
    let mut out = DMatrix::zeros(n, b.cols());
    for i in 0..spec.m {
        if i > 0 {
            cur = spec.a.transpose_mul_dense(&cur)?;
            counts.a_applications += 1;
        }
        let rows = spec.g.transpose_mul_dense(&cur)?;
        counts.g_applications += 1;
        out.rows_mut(i * s, s).copy_from(&rows);
    }
    Ok((from_real(&out), counts))
}

/// Summary of the batched-apply check against the dense K.
#[derive(Clone, Debug, Serialize)]
pub struct KrylovReport {
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub r: usize,
    #[serde(rename = "applyError")]
    pub apply_error: f64,
    #[serde(rename = "transposeError")]
    pub transpose_error: f64,
    #[serde(rename = "applyCounts")]
    pub apply_counts: OpCounts,
    #[serde(rename = "transposeCounts")]
    pub transpose_counts: OpCounts,
    #[serde(rename = "blockHankelDisplacementRank")]
    pub block_hankel_displacement_rank: Option<usize>,
    #[serde(rename = "powerGrowth")]
    pub power_growth: Vec<f64>,
}

/// Runs apply_k and apply_k_transpose on a random n×r block and compares with
/// the dense K. The displacement rank is reported only for symmetric A.
pub fn krylov_demo(spec: &KrylovSpec, r: usize, seed: u64) -> Result<KrylovReport> {
    let n = spec.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DenseMatrix::from_fn(n, r, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0));
    let k = build_krylov(spec)?;
    let (kb, apply_counts) = apply_k(spec, &b)?;
    let (ktb, transpose_counts) = apply_k_transpose(spec, &b)?;
    let apply_error = kb.relative_error(&k.matmul(&b)?)?;
    let transpose_error = ktb.relative_error(&k.transpose().matmul(&b)?)?;
    let block_hankel_displacement_rank = if spec.a.symmetry_residual() == 0.0 {
        let h = build_block_hankel(spec)?;
        Some(block_displacement_rank(&h, spec.s(), 1e-10)?)
    } else {
        None
    };
    Ok(KrylovReport {
        n,
        s: spec.s(),
        m: spec.m,
        r,
        apply_error,
        transpose_error,
        apply_counts,
        transpose_counts,
        block_hankel_displacement_rank,
        power_growth: krylov_power_growth(spec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_dense(rng: &mut ChaCha8Rng, n: usize, r: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, r, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0))
    }

    /// Dense oracle built by repeated dense multiplication.
    fn oracle_k(a: &SparseMatrix, g: &SparseMatrix, m: usize) -> DMatrix<f64> {
        let ad = a.to_dense();
        let mut cur = g.to_dense();
        let mut cols = Vec::new();
        for _ in 0..m {
            cols.push(cur.clone());
            cur = &ad * &cur;
        }
        let s = g.cols();
        DMatrix::from_fn(a.rows(), s * m, |i, j| cols[j / s][(i, j % s)])
    }

    #[test]
    fn sparse_loading() {
        let s = SparseMatrix::parse_triplets("# c\n3 3\n0 0 1\n0 0 2\n2 1 -1.5\n").unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.to_dense()[(0, 0)], 3.0);
        assert_eq!(s.rows(), 3);
        let s = SparseMatrix::parse_triplets("1 4 2\n").unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 5));
        assert!(matches!(
            SparseMatrix::parse_triplets("0 0 1\n0 x 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(SparseMatrix::parse_triplets("2 2\n5 0 1\n").is_err());
        let j = SparseMatrix::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(j, s);
        assert_eq!(SparseMatrix::parse(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn krylov_examples() {
        let g = random_sparse(8, 4, 3, 1);
        let k = build_krylov(&KrylovSpec::new(SparseMatrix::identity(8), g.clone(), 2).unwrap()).unwrap();
        for i in 0..8 {
            for j in 0..4 {
                assert_eq!(k[(i, j)], k[(i, j + 4)]);
            }
        }
        let a = random_symmetric_sparse(8, 4, 2);
        let k = build_krylov(&KrylovSpec::new(a.clone(), g.clone(), 2).unwrap()).unwrap();
        let ag = a.to_dense() * g.to_dense();
        for i in 0..8 {
            for j in 0..4 {
                assert!((k[(i, j + 4)].re - ag[(i, j)]).abs() < 1e-15);
            }
        }
        let e = SparseMatrix::new(8, 2, vec![(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let k = build_krylov(&KrylovSpec::new(SparseMatrix::shift(8), e, 4).unwrap()).unwrap();
        for col in 0..8 {
            let hot = col / 2 + col % 2;
            for i in 0..8 {
                assert_eq!(k[(i, col)].re, if i == hot { 1.0 } else { 0.0 });
            }
        }
        assert!(KrylovSpec::new(SparseMatrix::identity(8), g, 3).is_err());
    }

    #[test]
    fn block_hankel_structure() {
        let g = random_sparse(8, 2, 2, 3);
        let h = build_block_hankel(&KrylovSpec::new(SparseMatrix::identity(8), g.clone(), 4).unwrap()).unwrap();
        let gtg = g.to_dense().transpose() * g.to_dense();
        for bi in 0..4 {
            for bj in 0..4 {
                for a in 0..2 {
                    for b in 0..2 {
                        assert!((h[(bi * 2 + a, bj * 2 + b)].re - gtg[(a, b)]).abs() < 1e-14);
                    }
                }
            }
        }
        let spec = KrylovSpec::new(random_symmetric_sparse(8, 4, 4), g.clone(), 4).unwrap();
        let h = build_block_hankel(&spec).unwrap();
        assert!(block_hankel_deviation(&h, 2) <= 1e-10);
        assert!(block_displacement_rank(&h, 2, 1e-10).unwrap() <= 4);
        let asym = SparseMatrix::new(8, 8, vec![(0, 1, 1.0)]).unwrap();
        let err = build_block_hankel(&KrylovSpec::new(asym, g, 4).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Rejected(m) if m.contains("1e0")));
    }

    #[test]
    fn apply_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_sparse(64, 64, 6, 8);
        let g = random_sparse(64, 16, 4, 9);
        let spec = KrylovSpec::new(a.clone(), g.clone(), 4).unwrap();
        let k = from_real(&oracle_k(&a, &g, 4));
        for r in [1usize, 8] {
            let b = rand_dense(&mut rng, 64, r);
            let (kb, c) = apply_k(&spec, &b).unwrap();
            assert_eq!(c, OpCounts { a_applications: 3, g_applications: 4 });
            assert!(kb.relative_error(&k.matmul(&b).unwrap()).unwrap() < 1e-10);
            let (ktb, c) = apply_k_transpose(&spec, &b).unwrap();
            assert_eq!(c, OpCounts { a_applications: 3, g_applications: 4 });
            assert!(ktb.relative_error(&k.transpose().matmul(&b).unwrap()).unwrap() < 1e-10);
        }
        let (z, _) = apply_k(&spec, &DenseMatrix::zeros(64, 3)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(apply_k(&spec, &DenseMatrix::zeros(63, 1)).is_err());
    }

    #[test]
    fn identity_collapses_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_sparse(16, 4, 2, 5);
        let spec = KrylovSpec::new(SparseMatrix::identity(16), g.clone(), 4).unwrap();
        let b = rand_dense(&mut rng, 16, 1);
        let (kb, _) = apply_k(&spec, &b).unwrap();
        let gd = g.to_dense();
        let mut want = DMatrix::zeros(16, 1);
        for j in 0..4 {
            want += &gd * to_real(&b).unwrap().rows(j * 4, 4);
        }
        assert!(kb.relative_error(&from_real(&want)).unwrap() < 1e-14);
        let (ktb, _) = apply_k_transpose(&spec, &b).unwrap();
        let gtb = gd.transpose() * to_real(&b).unwrap();
        for j in 0..4 {
            for i in 0..4 {
                assert_eq!(ktb[(j * 4 + i, 0)].re, gtb[(i, 0)]);
            }
        }
    }

    #[test]
    fn demo_on_shift() {
        let spec = KrylovSpec::new(SparseMatrix::shift(32), random_sparse(32, 16, 3, 1), 2).unwrap();
        let rep = krylov_demo(&spec, 4, 0).unwrap();
        assert!(rep.apply_error < 1e-10 && rep.transpose_error < 1e-10);
        assert!(rep.block_hankel_displacement_rank.is_none());
        assert_eq!(rep.power_growth.len(), 2);
    }
}
