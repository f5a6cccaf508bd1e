//! Convolution and Walsh–Hadamard helpers.

use std::cell::RefCell;

use rustfft::FftPlanner;

use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

const DIRECT_CONV_WORK: usize = 2048;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// In-place forward FFT (unnormalized).
pub fn fft_forward(buf: &mut [C64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place inverse FFT, normalized by 1/len.
pub fn fft_inverse(buf: &mut [C64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let s = 1.0 / buf.len() as f64;
    for z in buf.iter_mut() {
        *z *= s;
    }
}

/// Full linear convolution, length a.len() + b.len() − 1.
pub fn convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 16 || a.len() * b.len() <= DIRECT_CONV_WORK {
        let mut out = vec![C64::new(0.0, 0.0); len];
        for (i, &x) in a.iter().enumerate() {
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let m = next_pow2(len);
    let mut fa = a.to_vec();
    fa.resize(m, C64::new(0.0, 0.0));
    let mut fb = b.to_vec();
    fb.resize(m, C64::new(0.0, 0.0));
    fft_forward(&mut fa);
    fft_forward(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_inverse(&mut fa);
    fa.truncate(len);
    fa
}

/// Unnormalized Walsh–Hadamard transform; length must be a power of two.
pub fn walsh_hadamard(buf: &mut [C64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two() || n == 0);
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (x, y) = (buf[i], buf[i + h]);
                buf[i] = x + y;
                buf[i + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// y[i] = Σ_j a[i ^ j]·x[j] for power-of-two lengths.
pub fn xor_convolve(a: &[C64], x: &[C64]) -> Vec<C64> {
    let n = a.len();
    debug_assert_eq!(n, x.len());
    if n <= 8 {
        return (0..n)
            .map(|i| (0..n).map(|j| a[i ^ j] * x[j]).sum())
            .collect();
    }
    let mut fa = a.to_vec();
    let mut fx = x.to_vec();
    walsh_hadamard(&mut fa);
    walsh_hadamard(&mut fx);
    for (p, q) in fa.iter_mut().zip(&fx) {
        *p *= q;
    }
    walsh_hadamard(&mut fa);
    let s = 1.0 / n as f64;
    for z in fa.iter_mut() {
        *z *= s;
    }
    fa
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vec<C64> {
        xs.iter().map(|&x| C64::new(x, 0.5 * x - 1.0)).collect()
    }

    fn direct(a: &[C64], b: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
        for i in 0..a.len() {
            for j in 0..b.len() {
                out[i + j] += a[i] * b[j];
            }
        }
        out
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let a = v(&(0..100).map(|i| (i as f64).sin()).collect::<Vec<_>>());
        let b = v(&(0..70).map(|i| (i as f64 * 0.3).cos()).collect::<Vec<_>>());
        let c = convolve(&a, &b);
        let d = direct(&a, &b);
        for (x, y) in c.iter().zip(&d) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn xor_convolution_matches_direct() {
        let a = v(&(0..32).map(|i| (i as f64 * 0.7).sin()).collect::<Vec<_>>());
        let x = v(&(0..32).map(|i| (i as f64 * 1.3).cos()).collect::<Vec<_>>());
        let y = xor_convolve(&a, &x);
        for i in 0..32 {
            let e: C64 = (0..32).map(|j| a[i ^ j] * x[j]).sum();
            assert!((y[i] - e).norm() < 1e-10);
        }
    }
}
