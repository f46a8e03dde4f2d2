//! In-place radix-2 FFT, used as the fast path for evaluating trigonometric
//! polynomials on power-of-two grids. The direct O(m^2) transform in
//! `partial_sums` stays the reference; tests pin the two against each other.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Forward transform: out[j] = sum_k a[k] * exp(-2*pi*i*j*k/n).
/// Length must be a power of two.
pub(crate) fn fft_in_place(a: &mut [Complex64]) {
    let n = a.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    if n <= 1 {
        return;
    }
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -TAU / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        for chunk in a.chunks_mut(len) {
            let mut w = Complex64::new(1.0, 0.0);
            let half = len / 2;
            for i in 0..half {
                let u = chunk[i];
                let v = chunk[i + half] * w;
                chunk[i] = u + v;
                chunk[i + half] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

/// Inverse-kernel evaluation: out[j] = sum_k a[k] * exp(+2*pi*i*j*k/n),
/// without the 1/n normalization (conjugate trick around the forward FFT).
pub(crate) fn inverse_kernel(a: &mut [Complex64]) {
    for z in a.iter_mut() {
        *z = z.conj();
    }
    fft_in_place(a);
    for z in a.iter_mut() {
        *z = z.conj();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn direct_dft(a: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = a.len();
        (0..n)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &v) in a.iter().enumerate() {
                    let ang = sign * TAU * (j * k % n) as f64 / n as f64;
                    acc += v * Complex64::new(ang.cos(), ang.sin());
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft() {
        let mut rng = SplitMix64::new(17);
        for &n in &[1usize, 2, 8, 64, 256] {
            let a: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5))
                .collect();
            let mut fwd = a.clone();
            fft_in_place(&mut fwd);
            let expect = direct_dft(&a, -1.0);
            for (x, y) in fwd.iter().zip(&expect) {
                assert!((x - y).norm() < 1e-9 * (n as f64));
            }
            let mut inv = a.clone();
            inverse_kernel(&mut inv);
            let expect = direct_dft(&a, 1.0);
            for (x, y) in inv.iter().zip(&expect) {
                assert!((x - y).norm() < 1e-9 * (n as f64));
            }
        }
    }
}
