use crate::dense::{DenseMatrix, DESK_CAP};
use crate::error::{check_len, Error, Result};
use crate::fft::convolve;
use crate::C64;

fn check_finite(gen: &[C64]) -> Result<()> {
    if gen.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Rejected("non-finite generator entry".into()))
    }
}

fn check_cap(order: usize, cap: usize) -> Result<()> {
    if order > cap {
        Err(Error::SizeCap { size: order, cap })
    } else {
        Ok(())
    }
}

/// Hankel matrix H[i][j] = gen[i + j] (0-based), stored by its 2n − 1 generator entries.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelGen {
    gen: Vec<C64>,
}

impl HankelGen {
    pub fn new(gen: Vec<C64>) -> Result<Self> {
        if gen.is_empty() || gen.len().is_multiple_of(2) {
            return Err(Error::Rejected(format!(
                "Hankel generator length must be 2n-1 for n >= 1, got {}",
                gen.len()
            )));
        }
        check_finite(&gen)?;
        Ok(HankelGen { gen })
    }

    pub fn from_real(gen: &[f64]) -> Result<Self> {
        Self::new(gen.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(order: usize) -> Self {
        HankelGen {
            gen: vec![C64::new(0.0, 0.0); 2 * order.max(1) - 1],
        }
    }

    pub fn order(&self) -> usize {
        self.gen.len().div_ceil(2)
    }

    pub fn gen(&self) -> &[C64] {
        &self.gen
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.gen[i + j]
    }

    pub fn is_real(&self) -> bool {
        self.gen.iter().all(|z| z.im == 0.0)
    }

    pub fn materialize(&self) -> Result<DenseMatrix> {
        self.materialize_with_cap(DESK_CAP)
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<DenseMatrix> {
        let n = self.order();
        check_cap(n, cap)?;
        Ok(DenseMatrix::from_fn(n, n, |i, j| self.entry(i, j)))
    }

    /// H·x via one convolution: (H x)[i] = conv(gen, rev x)[i + n − 1].
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        let n = self.order();
        check_len(n, x.len())?;
        let rx: Vec<C64> = x.iter().rev().copied().collect();
        let c = convolve(&self.gen, &rx);
        Ok(c[n - 1..2 * n - 1].to_vec())
    }

    /// Sub-generator of the q×q block starting at (row, col).
    pub fn block(&self, row: usize, col: usize, q: usize) -> HankelGen {
        let s = row + col;
        HankelGen {
            gen: self.gen[s..s + 2 * q - 1].to_vec(),
        }
    }
}

/// Hermitian Toeplitz matrix: T[i][j] = gen[j − i] for j ≥ i, conj(gen[i − j]) otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzGen {
    gen: Vec<C64>,
}

impl ToeplitzGen {
    pub fn new(gen: Vec<C64>) -> Result<Self> {
        if gen.is_empty() {
            return Err(Error::Rejected("empty Toeplitz generator".into()));
        }
        check_finite(&gen)?;
        if gen[0].im != 0.0 {
            return Err(Error::Rejected(format!(
                "Hermitian Toeplitz generator needs a real first entry, got imaginary part {}",
                gen[0].im
            )));
        }
        Ok(ToeplitzGen { gen })
    }

    pub fn zeros(order: usize) -> Self {
        ToeplitzGen {
            gen: vec![C64::new(0.0, 0.0); order.max(1)],
        }
    }

    pub fn order(&self) -> usize {
        self.gen.len()
    }

    pub fn gen(&self) -> &[C64] {
        &self.gen
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        if j >= i {
            self.gen[j - i]
        } else {
            self.gen[i - j].conj()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.gen.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    pub fn materialize(&self) -> Result<DenseMatrix> {
        self.materialize_with_cap(DESK_CAP)
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<DenseMatrix> {
        let n = self.order();
        check_cap(n, cap)?;
        Ok(DenseMatrix::from_fn(n, n, |i, j| self.entry(i, j)))
    }

    /// T·x through the length-(2n − 1) diagonal sequence a[m] = T[i][j] with m = j − i + n − 1.
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        let n = self.order();
        check_len(n, x.len())?;
        // (T x)[i] = Σ_j d[j − i] x[j]; with a[m] = d[n − 1 − m] this is conv(a, x)[i + n − 1].
        let a: Vec<C64> = (0..2 * n - 1)
            .map(|m| {
                let d = n as isize - 1 - m as isize;
                if d >= 0 {
                    self.gen[d as usize]
                } else {
                    self.gen[(-d) as usize].conj()
                }
            })
            .collect();
        let c = convolve(&a, x);
        Ok(c[n - 1..2 * n - 1].to_vec())
    }
}

pub fn hankel_matvec(h: &HankelGen, x: &[C64]) -> Result<Vec<C64>> {
    h.matvec(x)
}

pub fn toeplitz_matvec(t: &ToeplitzGen, x: &[C64]) -> Result<Vec<C64>> {
    t.matvec(x)
}

pub fn hankel_materialize(h: &HankelGen) -> Result<DenseMatrix> {
    h.materialize()
}

pub fn toeplitz_materialize(t: &ToeplitzGen) -> Result<DenseMatrix> {
    t.materialize()
}
