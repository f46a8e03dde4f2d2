//! Prime-field and binary-field arithmetic underneath every family.
//!
//! Prime fields `F_p` supply modular inverses and the additive character
//! `e_m(n) = exp(2*pi*i*n/m)`. Binary fields `GF(2^r)` supply the absolute
//! trace and the character `psi(x) = (-1)^{Tr(x)}` used by the extremal
//! family. Elements of `GF(2^r)` are plain `u64` bit vectors in the
//! polynomial basis; all operations live on the field descriptor.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldError {
    NotPrime(u64),
    PrimeTooSmall(u64),
    ZeroInverse,
    DegreeOutOfRange(u32),
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::NotPrime(p) => write!(f, "{p} is not prime"),
            FieldError::PrimeTooSmall(p) => write!(f, "prime modulus must be >= 3, got {p}"),
            FieldError::ZeroInverse => write!(f, "0 has no multiplicative inverse"),
            FieldError::DegreeOutOfRange(r) => {
                write!(f, "extension degree {r} outside supported range 1..=40")
            }
        }
    }
}

impl std::error::Error for FieldError {}

/// Odd prime modulus. Primality is established at construction, so downstream
/// code can rely on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p < 3 {
            return Err(FieldError::PrimeTooSmall(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(self) -> u64 {
        self.p
    }

    pub fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    pub fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        base %= self.p;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of `x` modulo `p`, in `1..p`.
    pub fn inverse(self, x: u64) -> Result<u64, FieldError> {
        if x.is_multiple_of(self.p) {
            return Err(FieldError::ZeroInverse);
        }
        // p is prime, so Fermat works and avoids signed bookkeeping.
        Ok(self.pow(x % self.p, self.p - 2))
    }

    /// Table of inverses, `table[x] = x^-1 mod p` for x in 1..p (entry 0 is 0).
    /// Linear-time recurrence; families use this to evaluate n-bar in O(1).
    pub fn inverse_table(self) -> Vec<u64> {
        let p = self.p;
        let mut inv = vec![0u64; p as usize];
        if p > 1 {
            inv[1] = 1;
            for n in 2..p {
                let q = p / n;
                let r = p % n;
                // n * inv[n] = 1 follows from p = q*n + r.
                inv[n as usize] = self.mul(p - q, inv[r as usize]);
            }
        }
        inv
    }
}

/// `mod_inverse(x, p)`: the y in 1..p with x*y = 1 (mod p).
pub fn mod_inverse(x: u64, field: PrimeField) -> Result<u64, FieldError> {
    field.inverse(x)
}

/// The standard additive character `e_m(n) = exp(2*pi*i*n/m)`, m-periodic in
/// `n`. The result is unit-modulus by construction.
pub fn additive_character(n: i64, m: u64) -> Complex64 {
    assert!(m >= 2, "additive character needs modulus >= 2");
    let r = n.rem_euclid(m as i64) as f64;
    let angle = TAU * r / m as f64;
    Complex64::new(angle.cos(), angle.sin())
}

/// Precomputed `e_m(k)` for k in 0..m. Family construction reduces exponents
/// mod m and indexes into this.
#[derive(Clone, Debug)]
pub struct CharTable {
    m: u64,
    values: Vec<Complex64>,
}

impl CharTable {
    pub fn new(m: u64) -> Self {
        assert!(m >= 2);
        let values = (0..m).map(|k| additive_character(k as i64, m)).collect();
        CharTable { m, values }
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    #[inline]
    pub fn at(&self, residue: u64) -> Complex64 {
        self.values[(residue % self.m) as usize]
    }
}

/// Deterministic Miller–Rabin, exact for all u64 with the fixed witness set.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n.is_multiple_of(q) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    let field = PrimeField { p: n };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = field.pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = field.mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `GF(2^r)` with a fixed irreducible modulus polynomial of degree r, stored
/// as an (r+1)-bit vector. Elements are r-bit vectors in the polynomial
/// basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryField {
    r: u32,
    modulus: u64,
    trace_mask: u64,
}

impl BinaryField {
    /// Field with the lexicographically-first irreducible modulus of degree
    /// `r` (smallest (r+1)-bit value with constant term 1 that is
    /// irreducible), so runs are reproducible.
    pub fn new(r: u32) -> Result<Self, FieldError> {
        if r == 0 || r > 40 {
            return Err(FieldError::DegreeOutOfRange(r));
        }
        let top = 1u64 << r;
        let mut modulus = 0;
        let mut k = 1u64;
        while k < top {
            if poly_is_irreducible(top | k, r) {
                modulus = top | k;
                break;
            }
            k += 2; // constant term must be 1, so only odd tails
        }
        assert!(modulus != 0, "no irreducible of degree {r} found");
        let mut field = BinaryField {
            r,
            modulus,
            trace_mask: 0,
        };
        // Tr is GF(2)-linear, so the trace of x is the parity of x AND-ed
        // with the traces of the basis monomials.
        let mut mask = 0u64;
        for i in 0..r {
            if field.trace_by_squaring(1u64 << i) == 1 {
                mask |= 1u64 << i;
            }
        }
        field.trace_mask = mask;
        Ok(field)
    }

    pub fn degree(&self) -> u32 {
        self.r
    }

    pub fn modulus_bits(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        1u64 << self.r
    }

    /// Carry-less product reduced by the modulus polynomial.
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.order() && b < self.order());
        let mut prod: u128 = 0;
        let mut x = a as u128;
        let mut y = b;
        while y != 0 {
            if y & 1 == 1 {
                prod ^= x;
            }
            x <<= 1;
            y >>= 1;
        }
        // reduce: degree of prod is at most 2r-2 < 80
        let modulus = self.modulus as u128;
        let r = self.r;
        while prod >> r != 0 {
            let deg = 127 - prod.leading_zeros();
            prod ^= modulus << (deg - r);
        }
        prod as u64
    }

    pub fn sqr(&self, a: u64) -> u64 {
        self.mul(a, a)
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.sqr(base);
            exp >>= 1;
        }
        acc
    }

    /// Absolute trace `Tr(x) = x + x^2 + x^4 + ... + x^(2^(r-1))` reduced to
    /// {0, 1}. O(1) via the precomputed basis mask.
    #[inline]
    pub fn trace(&self, x: u64) -> u64 {
        debug_assert!(x < self.order());
        ((x & self.trace_mask).count_ones() & 1) as u64
    }

    /// Reference trace implementation by repeated squaring; the mask is built
    /// from it and tests compare the two.
    pub fn trace_by_squaring(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        let mut term = x;
        for _ in 0..self.r {
            acc ^= term;
            term = self.sqr(term);
        }
        debug_assert!(acc <= 1, "trace must land in the prime subfield");
        acc
    }

    /// Additive character `psi(x) = (-1)^Tr(x)` as an integer sign.
    #[inline]
    pub fn psi(&self, x: u64) -> i64 {
        1 - 2 * self.trace(x) as i64
    }
}

/// `find_irreducible(r)`: the canonical `GF(2^r)` used throughout.
pub fn find_irreducible(r: u32) -> Result<BinaryField, FieldError> {
    BinaryField::new(r)
}

// --- polynomial arithmetic over GF(2) for the irreducibility test ---

fn poly_mulmod(a: u64, b: u64, modulus: u64, r: u32) -> u64 {
    let mut prod: u128 = 0;
    let mut x = a as u128;
    let mut y = b;
    while y != 0 {
        if y & 1 == 1 {
            prod ^= x;
        }
        x <<= 1;
        y >>= 1;
    }
    let m = modulus as u128;
    while prod >> r != 0 {
        let deg = 127 - prod.leading_zeros();
        prod ^= m << (deg - r);
    }
    prod as u64
}

fn poly_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let da = 63_i32 - a.leading_zeros() as i32;
        let db = 63_i32 - b.leading_zeros() as i32;
        if da < db {
            std::mem::swap(&mut a, &mut b);
            continue;
        }
        if a == 0 {
            break;
        }
        let shift = (63 - a.leading_zeros()) - (63 - b.leading_zeros());
        a ^= b << shift;
    }
    a
}

/// f (monic, degree r, given with its top bit) is irreducible over GF(2) iff
/// x^(2^r) = x mod f and gcd(x^(2^(r/q)) - x, f) = 1 for every prime q | r.
fn poly_is_irreducible(f: u64, r: u32) -> bool {
    if f & 1 == 0 {
        return false; // divisible by x
    }
    // the polynomial x, reduced mod f (only differs for r = 1)
    let x0 = {
        let mut v = 2u64;
        if r == 1 {
            v ^= f;
        }
        v
    };
    let frob = |k: u32| -> u64 {
        // x^(2^k) mod f by repeated squaring of the Frobenius image
        let mut t = x0;
        for _ in 0..k {
            t = poly_mulmod(t, t, f, r);
        }
        t
    };
    if frob(r) != x0 {
        return false;
    }
    // every prime divisor q of r must leave gcd(x^(2^(r/q)) - x, f) = 1
    let mut n = r;
    let mut q = 2;
    while q * q <= r {
        if n.is_multiple_of(q) {
            if poly_gcd(frob(r / q) ^ x0, f) != 1 {
                return false;
            }
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 && poly_gcd(frob(r / n) ^ x0, f) != 1 {
        return false;
    }
    true
}
