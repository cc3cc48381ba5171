//! Mixed-radix complex FFT for arbitrary lengths.
//!
//! Lengths are factored into primes; each prime stage is a direct DFT of that
//! radix, so prime lengths fall back to O(n^2). Grids in this crate are small
//! (50, 59, 200, 209 points), where that is perfectly adequate.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::math::{cos, sin, PI};

#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    factors: Vec<usize>,
    /// e^{-2 pi i j / n} for j in 0..n
    twiddles: Vec<Complex64>,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "FFT length must be positive");
        let twiddles = (0..n)
            .map(|j| {
                let theta = -2.0 * PI * j as f64 / n as f64;
                Complex64::new(cos(theta), sin(theta))
            })
            .collect();
        Self {
            n,
            factors: factorize(n),
            twiddles,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform, X[k] = sum_j x[j] e^{-2 pi i jk/n}.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// Inverse transform including the 1/n factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
        let scale = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.n, "FFT length mismatch");
        let input = data.to_vec();
        self.recurse(&input, 1, data, &self.factors, 1, inverse);
    }

    fn twiddle(&self, j: usize, inverse: bool) -> Complex64 {
        let w = self.twiddles[j % self.n];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    fn recurse(
        &self,
        input: &[Complex64],
        stride: usize,
        out: &mut [Complex64],
        factors: &[usize],
        tw_stride: usize,
        inverse: bool,
    ) {
        let n = out.len();
        if n == 1 {
            out[0] = input[0];
            return;
        }
        let p = factors[0];
        let m = n / p;
        for r in 0..p {
            self.recurse(
                &input[r * stride..],
                stride * p,
                &mut out[r * m..(r + 1) * m],
                &factors[1..],
                tw_stride * p,
                inverse,
            );
        }
        // butterflies: X[k + m q] = sum_r (W_n^{rk} Y_r[k]) W_p^{rq}
        let mut tmp = vec![Complex64::new(0.0, 0.0); p];
        for k in 0..m {
            for (r, t) in tmp.iter_mut().enumerate() {
                *t = out[r * m + k] * self.twiddle(r * k * tw_stride, inverse);
            }
            for q in 0..p {
                let mut acc = Complex64::new(0.0, 0.0);
                for (r, t) in tmp.iter().enumerate() {
                    acc += t * self.twiddle(((r * q) % p) * m * tw_stride, inverse);
                }
                out[k + m * q] = acc;
            }
        }
    }
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    let mut p = 2;
    while n > 1 {
        if p * p > n {
            factors.push(n);
            break;
        }
        while n.is_multiple_of(p) {
            factors.push(p);
            n /= p;
        }
        p += 1;
    }
    factors
}
