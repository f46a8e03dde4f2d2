//! Prefix sums, the maximum M(phi), the normalized discrete Fourier
//! transform, Plancherel reconstruction of partial sums from the spectrum,
//! and the half-period coefficients gamma_m(h).
//!
//! Conventions: phi-hat(h) = (1/sqrt(m)) * sum_n phi(n) e_m(h n), with h taken
//! in the symmetric window (-m/2, m/2]. M(phi) maximizes |sum_{0<=n<=x}
//! phi(n)| over integer x in [0, m). Psi is the normalized imaginary part of
//! the prefix sum at x = floor(m/2).

use crate::families::PeriodicFunction;
use crate::finite_field::CharTable;
use num_complex::Complex64;

/// Normalized Fourier coefficients, stored in DFT order: slot `i` holds
/// phi-hat(h) for the representative h = i when i <= m/2 and h = i - m
/// otherwise, so the symmetric window (-m/2, m/2] is covered exactly once.
#[derive(Clone, Debug)]
pub struct SpectralVector {
    m: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralVector {
    pub fn modulus(&self) -> usize {
        self.m
    }

    /// Coefficient at frequency h (any integer; reduced mod m).
    #[inline]
    pub fn coeff(&self, h: i64) -> Complex64 {
        let m = self.m as i64;
        self.coeffs[h.rem_euclid(m) as usize]
    }

    /// Iterates (h, phi-hat(h)) over the symmetric window (-m/2, m/2].
    pub fn iter_window(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let m = self.m as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| {
            let i = i as i64;
            let h = if 2 * i <= m { i } else { i - m };
            (h, c)
        })
    }

    /// Largest |Im phi-hat(h)|; zero for exactly real spectra.
    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Prefix sums of one period together with the maximum and the Psi statistic.
#[derive(Clone, Debug)]
pub struct PrefixProfile {
    m: usize,
    prefix: Vec<Complex64>,
    max_value: f64,
    argmax: usize,
    psi: f64,
}

impl PrefixProfile {
    pub fn modulus(&self) -> usize {
        self.m
    }

    /// prefix[x] = sum_{0 <= n <= x} phi(n).
    #[inline]
    pub fn prefix(&self, x: usize) -> Complex64 {
        self.prefix[x]
    }

    /// M(phi), unnormalized.
    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn argmax(&self) -> usize {
        self.argmax
    }

    /// (1/sqrt(m)) Im sum_{0 <= n <= m/2} phi(n).
    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// M(phi)/sqrt(m).
    pub fn normalized_max(&self) -> f64 {
        self.max_value / (self.m as f64).sqrt()
    }

    /// Maximum of |prefix| over the coarse grid x_j = floor(j*m/J),
    /// j = 0..J-1. Never exceeds the full maximum, and equals it at J = m.
    pub fn grid_max(&self, grid_count: usize) -> f64 {
        assert!(grid_count >= 1 && grid_count <= self.m);
        let m = self.m;
        (0..grid_count)
            .map(|j| self.prefix[j * m / grid_count].norm_sqr())
            .fold(0.0, f64::max)
            .sqrt()
    }
}

/// Single left-to-right scan with exact complex accumulation.
pub fn prefix_profile(phi: &PeriodicFunction) -> PrefixProfile {
    let m = phi.modulus();
    let values = phi.values();
    let mut prefix = Vec::with_capacity(m);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 0usize;
    for (x, &v) in values.iter().enumerate() {
        acc += v;
        prefix.push(acc);
        let sq = acc.norm_sqr();
        if sq > best {
            best = sq;
            argmax = x;
        }
    }
    let psi = prefix[m / 2].im / (m as f64).sqrt();
    PrefixProfile {
        m,
        prefix,
        max_value: best.sqrt(),
        argmax,
        psi,
    }
}

/// Direct O(m^2) normalized Fourier transform; this is the reference path
/// every fast transform in the crate is tested against.
pub fn fourier_transform(phi: &PeriodicFunction) -> SpectralVector {
    let m = phi.modulus();
    let table = CharTable::new(m as u64);
    let values = phi.values();
    let norm = 1.0 / (m as f64).sqrt();
    let mut coeffs = Vec::with_capacity(m);
    for h in 0..m as u64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = 0u64;
        for &v in values {
            acc += v * table.at(idx);
            idx += h;
            if idx >= m as u64 {
                idx -= m as u64;
            }
        }
        coeffs.push(acc * norm);
    }
    SpectralVector { m, coeffs }
}

/// Fourier coefficient at a single frequency in O(m), for audits that only
/// need a handful of frequencies per member.
pub fn fourier_coefficient(phi: &PeriodicFunction, h: i64) -> Complex64 {
    let m = phi.modulus() as u64;
    let table = CharTable::new(m);
    fourier_coefficient_with(phi, h, &table)
}

pub fn fourier_coefficient_with(phi: &PeriodicFunction, h: i64, table: &CharTable) -> Complex64 {
    let m = phi.modulus() as u64;
    let hr = h.rem_euclid(m as i64) as u64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut idx = 0u64;
    for &v in phi.values() {
        acc += v * table.at(idx);
        idx += hr;
        if idx >= m {
            idx -= m;
        }
    }
    acc / (m as f64).sqrt()
}

/// Fourier coefficient of the indicator of [0, x]:
/// gamma_m(h; x) = (1/sqrt(m)) sum_{0 <= n <= x} e_m(n h).
pub fn interval_coefficient(h: i64, x: usize, m: usize) -> Complex64 {
    let mf = m as f64;
    let root = mf.sqrt();
    let hr = h.rem_euclid(m as i64);
    if hr == 0 {
        return Complex64::new((x as f64 + 1.0) / root, 0.0);
    }
    // geometric sum (e_m(h(x+1)) - 1) / (e_m(h) - 1)
    let num = crate::finite_field::additive_character(hr * (x as i64 + 1), m as u64)
        - Complex64::new(1.0, 0.0);
    let den = crate::finite_field::additive_character(hr, m as u64) - Complex64::new(1.0, 0.0);
    num / den / root
}

/// Evaluates the Plancherel identity
/// sum_{0 <= n <= x} phi(n) = sum_h conj(gamma_m(h; x)) phi-hat(h)
/// from the spectrum alone.
pub fn plancherel_partial_sum(spectrum: &SpectralVector, x: usize) -> Complex64 {
    let m = spectrum.modulus();
    assert!(x < m);
    let mut acc = Complex64::new(0.0, 0.0);
    for (h, c) in spectrum.iter_window() {
        acc += interval_coefficient(h, x, m).conj() * c;
    }
    acc
}

/// gamma_m(h) = -(1/m) Im sum_{0 <= n <= m/2} e_m(n h), via the closed
/// geometric form. Odd in h, zero at h = 0, and |gamma_m(h)| <= 1/(2|h|).
pub fn gamma_m(h: i64, m: u64) -> f64 {
    let hr = h.rem_euclid(m as i64);
    if hr == 0 {
        return 0.0;
    }
    let x = (m / 2) as usize;
    let coeff = interval_coefficient(hr, x, m as usize);
    // interval_coefficient carries 1/sqrt(m); gamma_m wants 1/m
    -coeff.im / (m as f64).sqrt()
}

/// gamma_m(h) for h = 1..=m/2 (index 0 holds h = 1).
pub fn gamma_m_table(m: u64) -> Vec<f64> {
    (1..=(m / 2) as i64).map(|h| gamma_m(h, m)).collect()
}

/// max_j |prefix[floor(j m / J)]| over j = 0..J-1 without keeping the
/// profile around.
pub fn coarse_grid_max(phi: &PeriodicFunction, grid_count: usize) -> f64 {
    prefix_profile(phi).grid_max(grid_count)
}
