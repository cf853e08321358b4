//! Fast discrete Hartley transform (power-of-two sizes).
//!
//! The DHT matrix `H`, with entries `cas(2*pi*j*k/n) / sqrt(n)` where
//! `cas(t) = cos(t) + sin(t)`, is real, symmetric and orthonormal, and is its
//! own inverse. It is evaluated here through a radix-2 complex FFT on the
//! real input (`H x = Re(F x) - Im(F x)`, normalized), giving an
//! `O(n log n)` apply with precomputed twiddles.

use alloc::format;
use alloc::vec::Vec;

// Needed for sqrt/ln/etc. in no_std builds; shadowed by std's inherent
// methods when tests link std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HartleyPlan {
    n: usize,
    rev: Vec<u32>,
    // w_k = exp(-2 pi i k / n) for k < n/2
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
    inv_sqrt_n: f64,
}

impl HartleyPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument {
                op: "HartleyPlan::new",
                reason: format!("length must be a power of two, got {n}"),
            });
        }
        let bits = n.trailing_zeros();
        let rev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        let half = n / 2;
        let mut tw_re = Vec::with_capacity(half.max(1));
        let mut tw_im = Vec::with_capacity(half.max(1));
        for k in 0..half.max(1) {
            let theta = -2.0 * core::f64::consts::PI * (k as f64) / (n as f64);
            tw_re.push(theta.cos());
            tw_im.push(theta.sin());
        }
        Ok(Self {
            n,
            rev,
            tw_re,
            tw_im,
            inv_sqrt_n: 1.0 / (n as f64).sqrt(),
        })
    }

    /// In-place orthonormal DHT of `x`; `im` is scratch of the same length.
    pub fn apply(&self, x: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(im.len(), n);
        if n == 1 {
            return;
        }
        // Bit-reversal permutation; imaginary part starts at zero.
        for i in 0..n {
            let r = self.rev[i] as usize;
            if r > i {
                x.swap(i, r);
            }
            im[i] = 0.0;
        }
        // Iterative radix-2 butterflies.
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            let mut base = 0;
            while base < n {
                for j in 0..half {
                    let (wr, wi) = (self.tw_re[j * step], self.tw_im[j * step]);
                    let i0 = base + j;
                    let i1 = i0 + half;
                    let tr = wr * x[i1] - wi * im[i1];
                    let ti = wr * im[i1] + wi * x[i1];
                    x[i1] = x[i0] - tr;
                    im[i1] = im[i0] - ti;
                    x[i0] += tr;
                    im[i0] += ti;
                }
                base += len;
            }
            len <<= 1;
        }
        // cas spectrum: Re - Im, normalized.
        for i in 0..n {
            x[i] = (x[i] - im[i]) * self.inv_sqrt_n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Direct O(n^2) cas-matrix evaluation.
    fn dht_naive(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let scale = 1.0 / (n as f64).sqrt();
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for (j, &v) in x.iter().enumerate() {
                    let t = 2.0 * core::f64::consts::PI * (j as f64) * (k as f64) / (n as f64);
                    acc += v * (t.cos() + t.sin());
                }
                acc * scale
            })
            .collect()
    }

    #[test]
    fn matches_direct_cas_matrix() {
        for &n in &[1usize, 2, 4, 8, 16, 64] {
            let plan = HartleyPlan::new(n).unwrap();
            let x0: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 17) as f64 - 8.0).collect();
            let expect = dht_naive(&x0);
            let mut x = x0.clone();
            let mut im = vec![0.0; n];
            plan.apply(&mut x, &mut im);
            for (a, b) in x.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn involution_recovers_input() {
        let n = 32;
        let plan = HartleyPlan::new(n).unwrap();
        let x0: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = x0.clone();
        let mut im = vec![0.0; n];
        plan.apply(&mut x, &mut im);
        plan.apply(&mut x, &mut im);
        for (a, b) in x.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(HartleyPlan::new(12).is_err());
        assert!(HartleyPlan::new(0).is_err());
    }
}
