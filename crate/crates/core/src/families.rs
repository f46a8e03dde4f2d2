//! The m-periodic function families under study.
//!
//! Four kinds are generated as concrete one-period complex vectors:
//!
//! * Birch-type: `phi_a(n) = e_p(g(n) + a n)` for an odd polynomial g,
//!   parameters a in F_p^*;
//! * (generalized) Kloosterman: `phi_{(a,b)}(n) = e_p(b n + (a n-bar)^d)`
//!   with d odd (d = 1 is the classical family), parameters in
//!   F_p^* x F_p^*;
//! * hyper-Kloosterman twists: `phi_{(a,b)}(n) = Kl_r(inv(a n); p) e_p(b n)`
//!   for odd r >= 3;
//! * the extremal binary-field family whose spectrum is a prescribed +-1
//!   step function, built over GF(2^r) with r = floor(log2(m^3)).
//!
//! Kloosterman-type kinds set `phi(0) = 0`: n-bar is undefined at the
//! singular point and any bounded choice moves every partial sum by O(1).

use crate::finite_field::{BinaryField, CharTable, FieldError, PrimeField};
use num_complex::Complex64;
use std::fmt;

/// One period of values, index n -> phi(n) for 0 <= n < m.
#[derive(Clone, Debug)]
pub struct PeriodicFunction {
    values: Vec<Complex64>,
}

impl PeriodicFunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        assert!(values.len() >= 2, "period must be at least 2");
        debug_assert!(values.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        PeriodicFunction { values }
    }

    pub fn modulus(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyError {
    Field(FieldError),
    ParameterOutOfRange(String),
    DegenerateDegree { degree: usize, p: u64 },
    SignClassExhausted { sign: i64 },
}

impl fmt::Display for FamilyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyError::Field(e) => write!(f, "{e}"),
            FamilyError::ParameterOutOfRange(msg) => write!(f, "{msg}"),
            FamilyError::DegenerateDegree { degree, p } => {
                write!(f, "polynomial degree {degree} >= p = {p} (degenerate Weil regime)")
            }
            FamilyError::SignClassExhausted { sign } => write!(
                f,
                "ran out of field elements with character sign {sign}; this contradicts \
                 the Weil bound and indicates an arithmetic bug"
            ),
        }
    }
}

impl std::error::Error for FamilyError {}

impl From<FieldError> for FamilyError {
    fn from(e: FieldError) -> Self {
        FamilyError::Field(e)
    }
}

/// Odd integer polynomial `g(t) = sum_j c_j t^(2j+1)`, coefficients stored
/// ascending (c_0 multiplies t). Coefficients are kept in [-100, 100] so the
/// Weil non-degeneracy checks stay trivial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddPoly {
    coeffs: Vec<i64>,
}

impl OddPoly {
    pub fn new(coeffs: Vec<i64>) -> Result<Self, FamilyError> {
        if coeffs.is_empty() || coeffs.last() == Some(&0) {
            return Err(FamilyError::ParameterOutOfRange(
                "odd polynomial needs a nonzero leading coefficient".into(),
            ));
        }
        if coeffs.iter().any(|&c| c.abs() > 100) {
            return Err(FamilyError::ParameterOutOfRange(
                "odd polynomial coefficients must lie in [-100, 100]".into(),
            ));
        }
        Ok(OddPoly { coeffs })
    }

    /// The classical cubic `t^3`.
    pub fn cube() -> Self {
        OddPoly { coeffs: vec![0, 1] }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        2 * self.coeffs.len() - 1
    }

    /// g(n) mod p.
    pub fn eval_mod(&self, n: u64, field: PrimeField) -> u64 {
        let p = field.modulus();
        let n2 = field.mul(n % p, n % p);
        // Horner in n^2, then one extra factor of n
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            let c = c.rem_euclid(p as i64) as u64;
            acc = field.add(field.mul(acc, n2), c);
        }
        field.mul(acc, n % p)
    }
}

/// Family descriptor: kind plus modulus. The symmetry constant N and the
/// parameter-space size are derived.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    Birch(OddPoly),
    /// d odd; d = 1 is the classical Kloosterman family.
    Kloosterman { d: u64 },
    HyperKloostermanTwist { r: u32 },
    Extremal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub m: u64,
}

impl FamilySpec {
    pub fn birch(p: u64, g: OddPoly) -> Self {
        FamilySpec { kind: FamilyKind::Birch(g), m: p }
    }

    pub fn kloosterman(p: u64, d: u64) -> Self {
        FamilySpec { kind: FamilyKind::Kloosterman { d }, m: p }
    }

    pub fn hyper_kloosterman_twist(p: u64, r: u32) -> Self {
        FamilySpec { kind: FamilyKind::HyperKloostermanTwist { r }, m: p }
    }

    pub fn extremal(m: u64) -> Self {
        FamilySpec { kind: FamilyKind::Extremal, m }
    }

    /// The uniform bound N on the (real) Fourier coefficients.
    pub fn symmetry_bound(&self) -> f64 {
        match &self.kind {
            FamilyKind::Birch(g) => (g.degree() - 1) as f64,
            FamilyKind::Kloosterman { d } => (d + 1) as f64,
            FamilyKind::HyperKloostermanTwist { r } => (r + 1) as f64,
            FamilyKind::Extremal => 1.0,
        }
    }

    /// |Omega_m|: p-1 for Birch, (p-1)^2 for the Kloosterman kinds, 2^r for
    /// the extremal family (the whole field parametrizes members).
    pub fn member_count(&self) -> u64 {
        match &self.kind {
            FamilyKind::Birch(_) => self.m - 1,
            FamilyKind::Kloosterman { .. } | FamilyKind::HyperKloostermanTwist { .. } => {
                (self.m - 1) * (self.m - 1)
            }
            FamilyKind::Extremal => 1u64 << extremal_degree(self.m),
        }
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        match &self.kind {
            FamilyKind::Birch(g) => {
                let field = PrimeField::new(self.m)?;
                if g.degree() as u64 >= field.modulus() {
                    return Err(FamilyError::DegenerateDegree {
                        degree: g.degree(),
                        p: field.modulus(),
                    });
                }
            }
            FamilyKind::Kloosterman { d } => {
                PrimeField::new(self.m)?;
                if *d % 2 == 0 || *d == 0 {
                    return Err(FamilyError::ParameterOutOfRange(format!(
                        "d must be odd and positive, got {d}"
                    )));
                }
                if *d >= self.m {
                    return Err(FamilyError::ParameterOutOfRange(format!(
                        "d = {d} must be smaller than p = {}",
                        self.m
                    )));
                }
            }
            FamilyKind::HyperKloostermanTwist { r } => {
                PrimeField::new(self.m)?;
                if self.m < 5 {
                    return Err(FamilyError::ParameterOutOfRange("need p >= 5".into()));
                }
                if *r < 3 || *r % 2 == 0 || *r > 9 {
                    return Err(FamilyError::ParameterOutOfRange(format!(
                        "twist order r must be odd in 3..=9, got {r}"
                    )));
                }
            }
            FamilyKind::Extremal => {
                if self.m < 7 {
                    return Err(FamilyError::ParameterOutOfRange(
                        "extremal family needs m >= 7".into(),
                    ));
                }
                if extremal_degree(self.m) > 40 {
                    return Err(FamilyError::ParameterOutOfRange(format!(
                        "m = {} needs a binary field beyond the 2^40 limit",
                        self.m
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match &self.kind {
            FamilyKind::Birch(g) => {
                let coeffs: Vec<String> = g.coeffs().iter().map(|c| c.to_string()).collect();
                format!("birch(p={},g=[{}])", self.m, coeffs.join(" "))
            }
            FamilyKind::Kloosterman { d } => format!("kloosterman(p={},d={d})", self.m),
            FamilyKind::HyperKloostermanTwist { r } => {
                format!("hyper-kloosterman-twist(p={},r={r})", self.m)
            }
            FamilyKind::Extremal => format!("extremal(m={})", self.m),
        }
    }
}

/// r = floor(3 log m / log 2) = floor(log2(m^3)), in integer arithmetic.
pub fn extremal_degree(m: u64) -> u32 {
    let cube = (m as u128) * (m as u128) * (m as u128);
    127 - cube.leading_zeros()
}

/// phi_a(n) = e_p(g(n) + a n).
pub fn birch_function(a: u64, field: PrimeField, g: &OddPoly) -> Result<PeriodicFunction, FamilyError> {
    let p = field.modulus();
    if a == 0 || a >= p {
        return Err(FamilyError::ParameterOutOfRange(format!(
            "parameter a must satisfy 1 <= a <= p-1, got {a}"
        )));
    }
    if g.degree() as u64 >= p {
        return Err(FamilyError::DegenerateDegree { degree: g.degree(), p });
    }
    let chars = CharTable::new(p);
    let g_vals: Vec<u64> = (0..p).map(|n| g.eval_mod(n, field)).collect();
    Ok(birch_from_tables(a, field, &g_vals, &chars))
}

fn birch_from_tables(a: u64, field: PrimeField, g_vals: &[u64], chars: &CharTable) -> PeriodicFunction {
    let p = field.modulus();
    let mut values = Vec::with_capacity(p as usize);
    let mut an = 0u64;
    for &g in g_vals {
        values.push(chars.at(field.add(g, an)));
        an = field.add(an, a);
    }
    PeriodicFunction::new(values)
}

/// phi_{(a,b)}(n) = e_p(b n + (a n-bar)^d) for n != 0, phi(0) = 0.
pub fn kloosterman_function(
    a: u64,
    b: u64,
    field: PrimeField,
    d: u64,
) -> Result<PeriodicFunction, FamilyError> {
    let p = field.modulus();
    if a == 0 || a >= p || b == 0 || b >= p {
        return Err(FamilyError::ParameterOutOfRange(format!(
            "parameters must satisfy 1 <= a, b <= p-1, got ({a}, {b})"
        )));
    }
    if d.is_multiple_of(2) || d == 0 {
        return Err(FamilyError::ParameterOutOfRange(format!(
            "d must be odd and positive, got {d}"
        )));
    }
    let chars = CharTable::new(p);
    let inv = field.inverse_table();
    let invd: Vec<u64> = inv.iter().map(|&x| field.pow(x, d)).collect();
    Ok(kloosterman_from_tables(a, b, field, d, &invd, &chars))
}

fn kloosterman_from_tables(
    a: u64,
    b: u64,
    field: PrimeField,
    d: u64,
    invd: &[u64],
    chars: &CharTable,
) -> PeriodicFunction {
    let p = field.modulus();
    let ad = field.pow(a, d); // (a n-bar)^d = a^d * (n-bar)^d
    let mut values = Vec::with_capacity(p as usize);
    values.push(Complex64::new(0.0, 0.0));
    let mut bn = 0u64;
    for &nd in invd.iter().skip(1) {
        bn = field.add(bn, b);
        values.push(chars.at(field.add(bn, field.mul(ad, nd))));
    }
    PeriodicFunction::new(values)
}

/// Normalized hyper-Kloosterman sums Kl_r(n; p) for every n in F_p^*,
/// computed by r-1 multiplicative convolutions of e_p over F_p^* and scaled
/// by (-1)^(r-1) p^(-(r-1)/2). Index n of the returned vector holds
/// Kl_r(n; p); index 0 is unused and set to zero.
///
/// Values are complex: Kl_r is real exactly when r is even (conjugation
/// sends Kl_r(n) to Kl_r((-1)^r n)), so odd-r sums genuinely carry imaginary
/// parts. The normalized Deligne bound |Kl_r| <= r is asserted at runtime.
pub fn hyper_kloosterman_all(r: u32, field: PrimeField) -> Result<Vec<Complex64>, FamilyError> {
    let p = field.modulus();
    if !(2..=9).contains(&r) {
        return Err(FamilyError::ParameterOutOfRange(format!(
            "hyper-Kloosterman order must be in 2..=9, got {r}"
        )));
    }
    if p < 5 {
        return Err(FamilyError::ParameterOutOfRange("need p >= 5".into()));
    }
    let chars = CharTable::new(p);
    let inv = field.inverse_table();
    // v_1(n) = e_p(n); v_{j+1}(n) = sum_a v_j(a) e_p(n a-bar)
    let mut v: Vec<Complex64> = (0..p).map(|n| chars.at(n)).collect();
    v[0] = Complex64::new(0.0, 0.0);
    for _ in 1..r {
        let mut next = vec![Complex64::new(0.0, 0.0); p as usize];
        for (x, &vx) in v.iter().enumerate().skip(1) {
            let xinv = inv[x];
            // distribute v(x) e_p(n x-bar) over all n
            let mut idx = 0u64;
            for slot in next.iter_mut() {
                *slot += vx * chars.at(idx);
                idx += xinv;
                if idx >= p {
                    idx -= p;
                }
            }
        }
        next[0] = Complex64::new(0.0, 0.0);
        v = next;
    }
    let scale = if r.is_multiple_of(2) { -1.0 } else { 1.0 } * (p as f64).powf(-((r - 1) as f64) / 2.0);
    for z in v.iter_mut() {
        *z *= scale;
    }
    let bound = r as f64 + 1e-9;
    for (n, z) in v.iter().enumerate().skip(1) {
        assert!(
            z.norm() <= bound,
            "Deligne bound violated: |Kl_{r}({n};{p})| = {}",
            z.norm()
        );
    }
    Ok(v)
}

/// phi_{(a,b)}(n) = Kl_r(inv(a n); p) e_p(b n) for n != 0, phi(0) = 0.
/// `kl` must be the output of [`hyper_kloosterman_all`] for the same (r, p).
pub fn hyper_kloosterman_twist_function(
    a: u64,
    b: u64,
    field: PrimeField,
    kl: &[Complex64],
) -> Result<PeriodicFunction, FamilyError> {
    let p = field.modulus();
    if a == 0 || a >= p || b == 0 || b >= p {
        return Err(FamilyError::ParameterOutOfRange(format!(
            "parameters must satisfy 1 <= a, b <= p-1, got ({a}, {b})"
        )));
    }
    assert_eq!(kl.len(), p as usize, "Kl table does not match the modulus");
    let chars = CharTable::new(p);
    let inv = field.inverse_table();
    Ok(twist_from_tables(a, b, field, kl, &inv, &chars))
}

fn twist_from_tables(
    a: u64,
    b: u64,
    field: PrimeField,
    kl: &[Complex64],
    inv: &[u64],
    chars: &CharTable,
) -> PeriodicFunction {
    let p = field.modulus();
    let mut values = Vec::with_capacity(p as usize);
    values.push(Complex64::new(0.0, 0.0));
    let mut an = 0u64;
    let mut bn = 0u64;
    for _ in 1..p {
        an = field.add(an, a);
        bn = field.add(bn, b);
        values.push(kl[inv[an as usize] as usize] * chars.at(bn));
    }
    PeriodicFunction::new(values)
}

/// The extremal family over GF(2^r), r = floor(log2 m^3): distinct nonzero
/// field elements alpha_h for h in J = (-m/2, m/2], chosen so that
/// psi(P(alpha_h)) = +1 for h >= 1 and -1 for h <= 0, where
/// P(x) = x + x^3 + ... + x^(2r-1).
#[derive(Clone, Debug)]
pub struct ExtremalFamily {
    m: u64,
    field: BinaryField,
    h_min: i64,
    alphas: Vec<u64>,
}

impl ExtremalFamily {
    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn field(&self) -> &BinaryField {
        &self.field
    }

    /// Smallest frequency in J = (-m/2, m/2].
    pub fn h_min(&self) -> i64 {
        self.h_min
    }

    pub fn h_max(&self) -> i64 {
        self.m as i64 / 2
    }

    pub fn alpha(&self, h: i64) -> u64 {
        assert!(h >= self.h_min && h <= self.h_max());
        self.alphas[(h - self.h_min) as usize]
    }

    /// P evaluated in the field: x + x^3 + ... + x^(2r-1).
    pub fn eval_p(&self, x: u64) -> u64 {
        let f = &self.field;
        let r = f.degree();
        let x2 = f.sqr(x);
        let mut acc = 1u64;
        for _ in 1..r {
            acc = 1 ^ f.mul(acc, x2);
        }
        f.mul(x, acc)
    }

    /// The Fourier coefficient phi-hat_a(h) = psi(P(alpha_h a)), a +-1 sign.
    /// Exact integer arithmetic, no rounding anywhere.
    pub fn spectrum_sign(&self, a: u64, h: i64) -> i64 {
        self.field.psi(self.eval_p(self.field.mul(self.alpha(h), a)))
    }
}

/// Builds the family for a given modulus. Enumerates nonzero field elements
/// in increasing bit order and assigns +1 elements to h = 1, 2, ... and -1
/// elements to h = 0, -1, -2, ...; the Weil bound guarantees both sign
/// classes are large enough, so exhaustion is reported as a hard error.
pub fn build_extremal_family(m: u64) -> Result<ExtremalFamily, FamilyError> {
    let spec = FamilySpec::extremal(m);
    spec.validate()?;
    let r = extremal_degree(m);
    let field = BinaryField::new(r)?;
    let h_min = -((m as i64 - 1) / 2);
    let h_max = m as i64 / 2;
    let n_pos = h_max as usize;
    let n_nonpos = (1 - h_min) as usize;
    let mut alphas = vec![0u64; m as usize];
    let fam = ExtremalFamily {
        m,
        field,
        h_min,
        alphas: Vec::new(),
    };
    let mut pos_filled = 0usize;
    let mut nonpos_filled = 0usize;
    for alpha in 1..fam.field.order() {
        if pos_filled == n_pos && nonpos_filled == n_nonpos {
            break;
        }
        let sign = fam.field.psi(fam.eval_p(alpha));
        if sign == 1 {
            if pos_filled < n_pos {
                pos_filled += 1;
                let h = pos_filled as i64; // h = 1, 2, ...
                alphas[(h - h_min) as usize] = alpha;
            }
        } else if nonpos_filled < n_nonpos {
            let h = -(nonpos_filled as i64); // h = 0, -1, ...
            nonpos_filled += 1;
            alphas[(h - h_min) as usize] = alpha;
        }
    }
    if pos_filled < n_pos {
        return Err(FamilyError::SignClassExhausted { sign: 1 });
    }
    if nonpos_filled < n_nonpos {
        return Err(FamilyError::SignClassExhausted { sign: -1 });
    }
    Ok(ExtremalFamily { alphas, ..fam })
}

/// phi_a(n) = (1/sqrt(m)) sum_{h in J} psi(P(alpha_h a)) e_m(-n h).
/// By construction phi-hat_a(h) = psi(P(alpha_h a)) in {-1, +1}.
pub fn extremal_function(fam: &ExtremalFamily, a: u64) -> Result<PeriodicFunction, FamilyError> {
    if a == 0 || a >= fam.field.order() {
        return Err(FamilyError::ParameterOutOfRange(format!(
            "parameter must be a nonzero field element below 2^{}, got {a}",
            fam.field.degree()
        )));
    }
    Ok(extremal_function_unchecked(fam, a))
}

pub(crate) fn extremal_function_unchecked(fam: &ExtremalFamily, a: u64) -> PeriodicFunction {
    let m = fam.m;
    let chars = CharTable::new(m);
    let signs: Vec<f64> = (fam.h_min..=fam.h_max())
        .map(|h| fam.spectrum_sign(a, h) as f64)
        .collect();
    let norm = 1.0 / (m as f64).sqrt();
    let mut values = Vec::with_capacity(m as usize);
    for n in 0..m as i64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &s) in signs.iter().enumerate() {
            let h = fam.h_min + j as i64;
            acc += s * chars.at((-n * h).rem_euclid(m as i64) as u64);
        }
        values.push(acc * norm);
    }
    PeriodicFunction::new(values)
}

/// Cached tables for enumerating a family member-by-member. Building the
/// context costs one pass of table construction (plus the Kl_r convolution
/// for twist families); each member afterwards is O(m).
pub struct FamilyContext {
    spec: FamilySpec,
    tables: Tables,
}

enum Tables {
    Birch {
        field: PrimeField,
        chars: CharTable,
        g_vals: Vec<u64>,
    },
    Kloosterman {
        field: PrimeField,
        chars: CharTable,
        invd: Vec<u64>,
        d: u64,
    },
    Twist {
        field: PrimeField,
        chars: CharTable,
        inv: Vec<u64>,
        kl: Vec<Complex64>,
    },
    Extremal(ExtremalFamily),
}

impl FamilyContext {
    pub fn new(spec: FamilySpec) -> Result<Self, FamilyError> {
        spec.validate()?;
        let tables = match &spec.kind {
            FamilyKind::Birch(g) => {
                let field = PrimeField::new(spec.m)?;
                let g_vals = (0..spec.m).map(|n| g.eval_mod(n, field)).collect();
                Tables::Birch {
                    field,
                    chars: CharTable::new(spec.m),
                    g_vals,
                }
            }
            FamilyKind::Kloosterman { d } => {
                let field = PrimeField::new(spec.m)?;
                let inv = field.inverse_table();
                let invd = inv.iter().map(|&x| field.pow(x, *d)).collect();
                Tables::Kloosterman {
                    field,
                    chars: CharTable::new(spec.m),
                    invd,
                    d: *d,
                }
            }
            FamilyKind::HyperKloostermanTwist { r } => {
                let field = PrimeField::new(spec.m)?;
                let kl = hyper_kloosterman_all(*r, field)?;
                Tables::Twist {
                    field,
                    chars: CharTable::new(spec.m),
                    inv: field.inverse_table(),
                    kl,
                }
            }
            FamilyKind::Extremal => Tables::Extremal(build_extremal_family(spec.m)?),
        };
        Ok(FamilyContext { spec, tables })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn count(&self) -> u64 {
        self.spec.member_count()
    }

    /// Parameters of the member at `index`: (a, 0) for one-parameter kinds,
    /// (a, b) for two-parameter kinds, (a, 0) with a the field element for
    /// the extremal kind.
    pub fn member_params(&self, index: u64) -> (u64, u64) {
        match &self.tables {
            Tables::Birch { .. } => (index + 1, 0),
            Tables::Kloosterman { .. } | Tables::Twist { .. } => {
                let q = self.spec.m - 1;
                (index / q + 1, index % q + 1)
            }
            Tables::Extremal(_) => (index, 0),
        }
    }

    pub fn member(&self, index: u64) -> PeriodicFunction {
        assert!(index < self.count());
        let (a, b) = self.member_params(index);
        match &self.tables {
            Tables::Birch { field, chars, g_vals } => birch_from_tables(a, *field, g_vals, chars),
            Tables::Kloosterman { field, chars, invd, d } => {
                kloosterman_from_tables(a, b, *field, *d, invd, chars)
            }
            Tables::Twist { field, chars, inv, kl } => {
                twist_from_tables(a, b, *field, kl, inv, chars)
            }
            Tables::Extremal(fam) => extremal_function_unchecked(fam, a),
        }
    }

    pub fn extremal(&self) -> Option<&ExtremalFamily> {
        match &self.tables {
            Tables::Extremal(fam) => Some(fam),
            _ => None,
        }
    }

    /// Whole-family spectrum access for Birch: phi-hat_a(h) = w((a + h) mod p)
    /// where w(c) is the normalized complete sum with linear coefficient c.
    /// One O(p^2) pass serves every member and frequency.
    pub fn birch_spectrum_table(&self) -> Option<Vec<f64>> {
        match &self.tables {
            Tables::Birch { field, chars, g_vals } => {
                let p = field.modulus();
                let norm = 1.0 / (p as f64).sqrt();
                let mut out = Vec::with_capacity(p as usize);
                for c in 0..p {
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut cn = 0u64;
                    for g in g_vals.iter() {
                        acc += chars.at(field.add(*g, cn));
                        cn = field.add(cn, c);
                    }
                    out.push(acc.re * norm);
                }
                Some(out)
            }
            _ => None,
        }
    }
}
