//! Arithmetic in F_q (q = p^e) and in the degree-s extension F_{q^s}.
//!
//! Elements are kept in canonical polynomial-basis form. `FieldSpec` holds the
//! base-field description (characteristic, degree, reduction modulus) and all
//! arithmetic goes through it; `ExtFieldSpec` does the same one level up, with
//! coefficients drawn from the base field. Moduli are chosen by a deterministic
//! search so that identical parameters always produce identical fields.

use rand::Rng;
use thiserror::Error;

/// Hard cap on log2(q^s) for constructed fields.
pub const MAX_FIELD_BITS: u64 = 4096;

/// Per-coefficient index cap in the deterministic modulus search. The first
/// irreducible polynomial in value order always has tiny coefficient indices,
/// so the cap never changes the outcome for any field small enough to search;
/// it only keeps the odometer finite when q itself is astronomically large.
const MODULUS_SEARCH_CAP: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NonPrimeCharacteristic(u64),
    #[error("degree parameters must be positive")]
    ZeroDegree,
    #[error("field too large: log2(q^s) = {0} exceeds {MAX_FIELD_BITS}")]
    FieldTooLarge(u64),
    #[error("inversion of zero")]
    ZeroInverse,
    #[error("no irreducible modulus found within the search bound")]
    ModulusSearchExhausted,
}

/// One element of F_{p^e}, in reduced polynomial-basis coordinates.
///
/// The representation depends on the field shape: characteristic-2 fields of
/// degree <= 64 pack the coefficient vector into a word, prime fields keep a
/// single residue, everything else stores the coefficient vector explicitly.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FqElem(Repr);

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Repr {
    /// p == 2, e <= 64: coefficient i is bit i.
    Bits(u64),
    /// e == 1: residue mod p.
    Word(u64),
    /// General p^e: e residues mod p, low degree first.
    Coeffs(Vec<u64>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ReprKind {
    Bits,
    Word,
    Coeffs,
}

/// The base field F_q with q = p^e.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FieldSpec {
    p: u64,
    e: usize,
    /// Low coefficients c_0..c_{e-1} of the monic reduction modulus
    /// x^e + c_{e-1} x^{e-1} + ... + c_0. For e == 1 this is [0].
    modulus: Vec<u64>,
    /// Full modulus as a bit polynomial (only meaningful for the Bits kind).
    modulus_bits: u128,
    kind: ReprKind,
}

impl FieldSpec {
    /// F_p itself (e = 1, plain residues).
    fn prime(p: u64) -> Result<Self, FieldError> {
        if !is_prime_u64(p) {
            return Err(FieldError::NonPrimeCharacteristic(p));
        }
        let kind = if p == 2 {
            ReprKind::Bits
        } else {
            ReprKind::Word
        };
        Ok(FieldSpec {
            p,
            e: 1,
            modulus: vec![0],
            modulus_bits: 0b10, // x
            kind,
        })
    }

    fn from_modulus(p: u64, modulus: Vec<u64>) -> Self {
        let e = modulus.len();
        let kind = if p == 2 && e <= 64 {
            ReprKind::Bits
        } else if e == 1 {
            ReprKind::Word
        } else {
            ReprKind::Coeffs
        };
        let mut modulus_bits: u128 = 1 << e;
        if p == 2 {
            for (i, &c) in modulus.iter().enumerate() {
                if c != 0 {
                    modulus_bits |= 1 << i;
                }
            }
        }
        FieldSpec {
            p,
            e,
            modulus,
            modulus_bits,
            kind,
        }
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.e
    }

    /// Low coefficients of the reduction modulus (length e; [0] for e = 1).
    pub fn modulus_coeffs(&self) -> &[u64] {
        &self.modulus
    }

    /// q as an integer, if it fits.
    pub fn order_u128(&self) -> Option<u128> {
        let mut acc: u128 = 1;
        for _ in 0..self.e {
            acc = acc.checked_mul(self.p as u128)?;
        }
        Some(acc)
    }

    /// log2(q), exact for characteristic 2.
    pub fn log2_order(&self) -> f64 {
        (self.p as f64).log2() * self.e as f64
    }

    pub fn zero(&self) -> FqElem {
        match self.kind {
            ReprKind::Bits => FqElem(Repr::Bits(0)),
            ReprKind::Word => FqElem(Repr::Word(0)),
            ReprKind::Coeffs => FqElem(Repr::Coeffs(vec![0; self.e])),
        }
    }

    pub fn one(&self) -> FqElem {
        match self.kind {
            ReprKind::Bits => FqElem(Repr::Bits(1)),
            ReprKind::Word => FqElem(Repr::Word(1 % self.p)),
            ReprKind::Coeffs => {
                let mut c = vec![0; self.e];
                c[0] = 1;
                FqElem(Repr::Coeffs(c))
            }
        }
    }

    pub fn is_zero(&self, a: &FqElem) -> bool {
        match &a.0 {
            Repr::Bits(b) => *b == 0,
            Repr::Word(w) => *w == 0,
            Repr::Coeffs(c) => c.iter().all(|&x| x == 0),
        }
    }

    /// Build an element from its e polynomial-basis residues (reduced mod p).
    pub fn from_coeffs(&self, coeffs: &[u64]) -> FqElem {
        assert_eq!(coeffs.len(), self.e, "coefficient vector length mismatch");
        match self.kind {
            ReprKind::Bits => {
                let mut b = 0u64;
                for (i, &c) in coeffs.iter().enumerate() {
                    if c % 2 == 1 {
                        b |= 1 << i;
                    }
                }
                FqElem(Repr::Bits(b))
            }
            ReprKind::Word => FqElem(Repr::Word(coeffs[0] % self.p)),
            ReprKind::Coeffs => FqElem(Repr::Coeffs(coeffs.iter().map(|&c| c % self.p).collect())),
        }
    }

    /// Polynomial-basis residues of an element, low degree first (length e).
    pub fn coeffs(&self, a: &FqElem) -> Vec<u64> {
        match &a.0 {
            Repr::Bits(b) => (0..self.e).map(|i| (b >> i) & 1).collect(),
            Repr::Word(w) => vec![*w],
            Repr::Coeffs(c) => c.clone(),
        }
    }

    /// Element with canonical index `idx` = sum coeff_i * p^i. Only indices
    /// below 2^64 are addressable this way; that covers every enumeration the
    /// library performs.
    pub fn from_index(&self, idx: u64) -> FqElem {
        match self.kind {
            ReprKind::Bits => FqElem(Repr::Bits(idx)),
            ReprKind::Word => FqElem(Repr::Word(idx % self.p)),
            ReprKind::Coeffs => {
                let mut c = vec![0; self.e];
                let mut v = idx;
                for slot in c.iter_mut() {
                    if v == 0 {
                        break;
                    }
                    *slot = v % self.p;
                    v /= self.p;
                }
                FqElem(Repr::Coeffs(c))
            }
        }
    }

    /// Canonical index of an element (inverse of `from_index` where it fits).
    pub fn index(&self, a: &FqElem) -> u128 {
        match &a.0 {
            Repr::Bits(b) => *b as u128,
            Repr::Word(w) => *w as u128,
            Repr::Coeffs(c) => {
                let mut acc: u128 = 0;
                for &ci in c.iter().rev() {
                    acc = acc
                        .saturating_mul(self.p as u128)
                        .saturating_add(ci as u128);
                }
                acc
            }
        }
    }

    pub fn add(&self, a: &FqElem, b: &FqElem) -> FqElem {
        match (&a.0, &b.0) {
            (Repr::Bits(x), Repr::Bits(y)) => FqElem(Repr::Bits(x ^ y)),
            (Repr::Word(x), Repr::Word(y)) => FqElem(Repr::Word(addmod(*x, *y, self.p))),
            (Repr::Coeffs(x), Repr::Coeffs(y)) => FqElem(Repr::Coeffs(
                x.iter()
                    .zip(y)
                    .map(|(&a, &b)| addmod(a, b, self.p))
                    .collect(),
            )),
            _ => panic!("mixed element representations"),
        }
    }

    pub fn sub(&self, a: &FqElem, b: &FqElem) -> FqElem {
        match (&a.0, &b.0) {
            (Repr::Bits(x), Repr::Bits(y)) => FqElem(Repr::Bits(x ^ y)),
            (Repr::Word(x), Repr::Word(y)) => FqElem(Repr::Word(submod(*x, *y, self.p))),
            (Repr::Coeffs(x), Repr::Coeffs(y)) => FqElem(Repr::Coeffs(
                x.iter()
                    .zip(y)
                    .map(|(&a, &b)| submod(a, b, self.p))
                    .collect(),
            )),
            _ => panic!("mixed element representations"),
        }
    }

    pub fn neg(&self, a: &FqElem) -> FqElem {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        match (&a.0, &b.0) {
            (Repr::Bits(x), Repr::Bits(y)) => FqElem(Repr::Bits(self.bits_mul(*x, *y))),
            (Repr::Word(x), Repr::Word(y)) => FqElem(Repr::Word(mulmod(*x, *y, self.p))),
            (Repr::Coeffs(x), Repr::Coeffs(y)) => FqElem(Repr::Coeffs(self.coeffs_mul(x, y))),
            _ => panic!("mixed element representations"),
        }
    }

    pub fn inv(&self, a: &FqElem) -> Result<FqElem, FieldError> {
        if self.is_zero(a) {
            return Err(FieldError::ZeroInverse);
        }
        match &a.0 {
            Repr::Bits(_) => {
                // Fermat: a^(q-2). Squaring is cheap on the packed form.
                let q = self.order_u128().expect("bits repr implies e <= 64");
                Ok(self.pow(a, q - 2))
            }
            Repr::Word(w) => Ok(FqElem(Repr::Word(invmod(*w, self.p)?))),
            Repr::Coeffs(_) => {
                // Extended Euclid in F_p[x] against the reduction modulus.
                let sub = self.prime_subfield();
                let a_poly: Vec<FqElem> = self
                    .coeffs(a)
                    .iter()
                    .map(|&c| sub.from_coeffs(&[c]))
                    .collect();
                let mut full: Vec<FqElem> = self
                    .modulus
                    .iter()
                    .map(|&c| sub.from_coeffs(&[c]))
                    .collect();
                full.push(sub.one());
                let inv_poly = poly::invmod(&sub, &a_poly, &full)?;
                let mut out = vec![0u64; self.e];
                for (i, c) in inv_poly.iter().enumerate() {
                    out[i] = sub.coeffs(c)[0];
                }
                Ok(self.from_coeffs(&out))
            }
        }
    }

    pub fn pow(&self, a: &FqElem, mut exp: u128) -> FqElem {
        let mut result = self.one();
        let mut base = a.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            exp >>= 1;
        }
        result
    }

    /// Uniformly random element.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FqElem {
        match self.kind {
            ReprKind::Bits => {
                let mask = if self.e == 64 {
                    u64::MAX
                } else {
                    (1u64 << self.e) - 1
                };
                FqElem(Repr::Bits(rng.gen::<u64>() & mask))
            }
            ReprKind::Word => FqElem(Repr::Word(rng.gen_range(0..self.p))),
            ReprKind::Coeffs => FqElem(Repr::Coeffs(
                (0..self.e).map(|_| rng.gen_range(0..self.p)).collect(),
            )),
        }
    }

    /// Uniformly random nonzero element.
    pub fn sample_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FqElem {
        loop {
            let a = self.sample(rng);
            if !self.is_zero(&a) {
                return a;
            }
        }
    }

    /// Multiply by the polynomial-basis generator x (used when expanding an
    /// F_q row into its prime-subfield coordinate rows).
    pub(crate) fn mul_by_x(&self, a: &FqElem) -> FqElem {
        match &a.0 {
            Repr::Bits(b) => {
                let mut s = (*b as u128) << 1;
                if s >> self.e != 0 {
                    s ^= self.modulus_bits;
                }
                FqElem(Repr::Bits(s as u64))
            }
            Repr::Word(_) => a.clone(), // e == 1: x reduces to 0... never used
            Repr::Coeffs(c) => {
                let top = c[self.e - 1];
                let mut out = vec![0u64; self.e];
                for i in (1..self.e).rev() {
                    out[i] = c[i - 1];
                }
                if top != 0 {
                    for i in 0..self.e {
                        out[i] = submod(out[i], mulmod(top, self.modulus[i], self.p), self.p);
                    }
                }
                FqElem(Repr::Coeffs(out))
            }
        }
    }

    fn bits_mul(&self, a: u64, b: u64) -> u64 {
        // Carry-less multiply then reduce by the modulus bit polynomial.
        let mut acc: u128 = 0;
        let mut bb = b;
        while bb != 0 {
            let i = bb.trailing_zeros();
            acc ^= (a as u128) << i;
            bb &= bb - 1;
        }
        let e = self.e as u32;
        while acc >> e != 0 {
            let deg = 127 - acc.leading_zeros();
            acc ^= self.modulus_bits << (deg - e);
        }
        acc as u64
    }

    fn coeffs_mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let e = self.e;
        let p = self.p;
        let mut prod = vec![0u64; 2 * e - 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                prod[i + j] = addmod(prod[i + j], mulmod(ai, bj, p), p);
            }
        }
        for i in (e..2 * e - 1).rev() {
            let top = prod[i];
            if top != 0 {
                prod[i] = 0;
                for j in 0..e {
                    prod[i - e + j] = submod(prod[i - e + j], mulmod(top, self.modulus[j], p), p);
                }
            }
        }
        prod.truncate(e);
        prod
    }

    pub(crate) fn prime_subfield(&self) -> FieldSpec {
        FieldSpec::prime(self.p).expect("characteristic validated at construction")
    }
}

/// The extension field F_{q^s} over a base `FieldSpec`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExtFieldSpec {
    base: FieldSpec,
    s: usize,
    /// Low coefficients of the monic degree-s reduction modulus over F_q.
    ext_modulus: Vec<FqElem>,
}

/// One element of F_{q^s}: s coefficients over F_q, low degree first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FqsElem {
    coeffs: Vec<FqElem>,
}

impl FqsElem {
    pub fn coeffs(&self) -> &[FqElem] {
        &self.coeffs
    }
}

impl ExtFieldSpec {
    pub fn base(&self) -> &FieldSpec {
        &self.base
    }

    pub fn ext_degree(&self) -> usize {
        self.s
    }

    pub fn ext_modulus(&self) -> &[FqElem] {
        &self.ext_modulus
    }

    /// log2 of the extension-field order q^s.
    pub fn log2_order(&self) -> f64 {
        self.base.log2_order() * self.s as f64
    }

    pub fn zero(&self) -> FqsElem {
        FqsElem {
            coeffs: vec![self.base.zero(); self.s],
        }
    }

    pub fn one(&self) -> FqsElem {
        let mut coeffs = vec![self.base.zero(); self.s];
        coeffs[0] = self.base.one();
        FqsElem { coeffs }
    }

    /// The class of the polynomial generator y (a root of the modulus).
    /// For s = 1 this reduces to the base-field one.
    pub fn poly_gen(&self) -> FqsElem {
        if self.s == 1 {
            return self.one();
        }
        let mut coeffs = vec![self.base.zero(); self.s];
        coeffs[1] = self.base.one();
        FqsElem { coeffs }
    }

    pub fn embed(&self, a: &FqElem) -> FqsElem {
        let mut coeffs = vec![self.base.zero(); self.s];
        coeffs[0] = a.clone();
        FqsElem { coeffs }
    }

    pub fn from_coeffs(&self, coeffs: Vec<FqElem>) -> FqsElem {
        assert_eq!(coeffs.len(), self.s, "coefficient vector length mismatch");
        FqsElem { coeffs }
    }

    pub fn is_zero(&self, a: &FqsElem) -> bool {
        a.coeffs.iter().all(|c| self.base.is_zero(c))
    }

    pub fn add(&self, a: &FqsElem, b: &FqsElem) -> FqsElem {
        FqsElem {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| self.base.add(x, y))
                .collect(),
        }
    }

    pub fn sub(&self, a: &FqsElem, b: &FqsElem) -> FqsElem {
        FqsElem {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| self.base.sub(x, y))
                .collect(),
        }
    }

    pub fn neg(&self, a: &FqsElem) -> FqsElem {
        FqsElem {
            coeffs: a.coeffs.iter().map(|x| self.base.neg(x)).collect(),
        }
    }

    pub fn mul(&self, a: &FqsElem, b: &FqsElem) -> FqsElem {
        let f = &self.base;
        let s = self.s;
        if s == 1 {
            return FqsElem {
                coeffs: vec![f.mul(&a.coeffs[0], &b.coeffs[0])],
            };
        }
        let mut prod = vec![f.zero(); 2 * s - 1];
        for (i, ai) in a.coeffs.iter().enumerate() {
            if f.is_zero(ai) {
                continue;
            }
            for (j, bj) in b.coeffs.iter().enumerate() {
                let t = f.mul(ai, bj);
                prod[i + j] = f.add(&prod[i + j], &t);
            }
        }
        for i in (s..2 * s - 1).rev() {
            if f.is_zero(&prod[i]) {
                continue;
            }
            let top = prod[i].clone();
            prod[i] = f.zero();
            for j in 0..s {
                let t = f.mul(&top, &self.ext_modulus[j]);
                prod[i - s + j] = f.sub(&prod[i - s + j], &t);
            }
        }
        prod.truncate(s);
        FqsElem { coeffs: prod }
    }

    /// Multiply by a base-field scalar (coefficient-wise).
    pub fn scale(&self, a: &FqsElem, c: &FqElem) -> FqsElem {
        FqsElem {
            coeffs: a.coeffs.iter().map(|x| self.base.mul(x, c)).collect(),
        }
    }

    pub fn inv(&self, a: &FqsElem) -> Result<FqsElem, FieldError> {
        if self.is_zero(a) {
            return Err(FieldError::ZeroInverse);
        }
        let mut full = self.ext_modulus.clone();
        full.push(self.base.one());
        let inv = poly::invmod(&self.base, &a.coeffs, &full)?;
        let mut coeffs = vec![self.base.zero(); self.s];
        for (i, c) in inv.into_iter().enumerate() {
            coeffs[i] = c;
        }
        Ok(FqsElem { coeffs })
    }

    pub fn pow(&self, a: &FqsElem, mut exp: u128) -> FqsElem {
        let mut result = self.one();
        let mut base = a.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            exp >>= 1;
        }
        result
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FqsElem {
        FqsElem {
            coeffs: (0..self.s).map(|_| self.base.sample(rng)).collect(),
        }
    }

    pub fn sample_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FqsElem {
        loop {
            let a = self.sample(rng);
            if !self.is_zero(&a) {
                return a;
            }
        }
    }

    /// F_q coordinates of `a` with respect to the polynomial basis (length s).
    pub fn poly_coords(&self, a: &FqsElem) -> Vec<FqElem> {
        a.coeffs.clone()
    }
}

/// Construct F_q (q = p^e) and its degree-s extension with deterministic,
/// lexicographically-first irreducible moduli.
pub fn make_fields(p: u64, e: usize, s: usize) -> Result<(FieldSpec, ExtFieldSpec), FieldError> {
    if e == 0 || s == 0 {
        return Err(FieldError::ZeroDegree);
    }
    if !is_prime_u64(p) {
        return Err(FieldError::NonPrimeCharacteristic(p));
    }
    let bits = ((p as f64).log2() * (e as f64) * (s as f64)).ceil() as u64;
    if bits > MAX_FIELD_BITS {
        return Err(FieldError::FieldTooLarge(bits));
    }

    let prime = FieldSpec::prime(p)?;
    let base = if e == 1 {
        prime
    } else {
        let coeffs = find_irreducible(&prime, e)?;
        let raw: Vec<u64> = coeffs.iter().map(|c| prime.coeffs(c)[0]).collect();
        FieldSpec::from_modulus(p, raw)
    };

    let ext_modulus = if s == 1 {
        vec![base.zero()]
    } else {
        find_irreducible(&base, s)?
    };
    let ext = ExtFieldSpec {
        base: base.clone(),
        s,
        ext_modulus,
    };
    Ok((base, ext))
}

/// Find the first irreducible monic degree-d polynomial over `spec` in value
/// order (constant coefficient least significant, coefficients ordered by
/// their canonical element index). Returns the d low coefficients.
fn find_irreducible(spec: &FieldSpec, d: usize) -> Result<Vec<FqElem>, FieldError> {
    debug_assert!(d >= 2);
    let digit_base = match spec.order_u128() {
        Some(q) if q < MODULUS_SEARCH_CAP as u128 => q as u64,
        _ => MODULUS_SEARCH_CAP,
    };
    let mut digits = vec![0u64; d];
    digits[0] = 1; // constant term 0 would make the polynomial divisible by x
    loop {
        let coeffs: Vec<FqElem> = digits.iter().map(|&v| spec.from_index(v)).collect();
        if poly::is_irreducible(spec, &coeffs) {
            return Ok(coeffs);
        }
        // odometer in value order
        let mut pos = 0;
        loop {
            if pos == d {
                return Err(FieldError::ModulusSearchExhausted);
            }
            digits[pos] += 1;
            if digits[pos] < digit_base {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if digits[0] == 0 {
            digits[0] = 1;
        }
    }
}

/// Dense univariate polynomial helpers over an arbitrary `FieldSpec`.
/// Polynomials are coefficient vectors, low degree first, not necessarily
/// trimmed. Used by the modulus search and by extension-field inversion.
pub(crate) mod poly {
    use super::{FieldError, FieldSpec, FqElem};

    pub fn deg(spec: &FieldSpec, a: &[FqElem]) -> Option<usize> {
        a.iter().rposition(|c| !spec.is_zero(c))
    }

    fn trim(spec: &FieldSpec, mut a: Vec<FqElem>) -> Vec<FqElem> {
        while a.len() > 0 && spec.is_zero(a.last().unwrap()) {
            a.pop();
        }
        a
    }

    pub fn mul(spec: &FieldSpec, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![spec.zero(); a.len() + b.len() - 1];
        for (i, ai) in a.iter().enumerate() {
            if spec.is_zero(ai) {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                let t = spec.mul(ai, bj);
                out[i + j] = spec.add(&out[i + j], &t);
            }
        }
        out
    }

    /// Remainder of `a` by a monic polynomial given as its low coefficients
    /// (implied leading term x^d). Result has length < d.
    pub fn rem_monic(spec: &FieldSpec, a: &[FqElem], low: &[FqElem]) -> Vec<FqElem> {
        let d = low.len();
        let mut r: Vec<FqElem> = a.to_vec();
        for i in (d..r.len()).rev() {
            if spec.is_zero(&r[i]) {
                continue;
            }
            let top = r[i].clone();
            r[i] = spec.zero();
            for j in 0..d {
                let t = spec.mul(&top, &low[j]);
                r[i - d + j] = spec.sub(&r[i - d + j], &t);
            }
        }
        r.truncate(d);
        while r.len() < d {
            r.push(spec.zero());
        }
        r
    }

    /// General polynomial remainder (divisor need not be monic).
    fn rem(spec: &FieldSpec, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
        let db = deg(spec, b).expect("division by zero polynomial");
        let lead_inv = spec.inv(&b[db]).expect("nonzero leading coefficient");
        let mut r = a.to_vec();
        while let Some(dr) = deg(spec, &r) {
            if dr < db {
                break;
            }
            let factor = spec.mul(&r[dr], &lead_inv);
            for j in 0..=db {
                let t = spec.mul(&factor, &b[j]);
                r[dr - db + j] = spec.sub(&r[dr - db + j], &t);
            }
        }
        trim(spec, r)
    }

    fn gcd(spec: &FieldSpec, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
        let mut x = trim(spec, a.to_vec());
        let mut y = trim(spec, b.to_vec());
        while !y.is_empty() {
            let r = rem(spec, &x, &y);
            x = y;
            y = r;
        }
        x
    }

    /// Inverse of `a` modulo the monic polynomial `full` (low-to-high with
    /// explicit leading 1), via the extended Euclidean algorithm.
    pub fn invmod(
        spec: &FieldSpec,
        a: &[FqElem],
        full: &[FqElem],
    ) -> Result<Vec<FqElem>, FieldError> {
        // Invariants: r0 = t0*a (mod full), r1 = t1*a (mod full).
        let mut r0 = trim(spec, full.to_vec());
        let mut r1 = rem(spec, a, full);
        let mut t0: Vec<FqElem> = Vec::new();
        let mut t1 = vec![spec.one()];
        while !r1.is_empty() {
            let dr0 = deg(spec, &r0);
            let dr1 = deg(spec, &r1).unwrap();
            if dr0.is_none() || dr0.unwrap() < dr1 {
                std::mem::swap(&mut r0, &mut r1);
                std::mem::swap(&mut t0, &mut t1);
                continue;
            }
            // Single elimination step of the leading term.
            let dr0 = dr0.unwrap();
            let shift = dr0 - dr1;
            let factor = spec.mul(&r0[dr0], &spec.inv(&r1[dr1])?);
            for j in 0..=dr1 {
                let t = spec.mul(&factor, &r1[j]);
                r0[shift + j] = spec.sub(&r0[shift + j], &t);
            }
            r0 = trim(spec, r0);
            let mut shifted = vec![spec.zero(); shift];
            shifted.extend_from_slice(&t1);
            let scaled: Vec<FqElem> = shifted.iter().map(|c| spec.mul(c, &factor)).collect();
            let max_len = t0.len().max(scaled.len());
            let mut new_t0 = vec![spec.zero(); max_len];
            for (i, c) in t0.iter().enumerate() {
                new_t0[i] = c.clone();
            }
            for (i, c) in scaled.iter().enumerate() {
                new_t0[i] = spec.sub(&new_t0[i], c);
            }
            t0 = trim(spec, new_t0);
        }
        match deg(spec, &r0) {
            Some(0) => {
                let scale = spec.inv(&r0[0])?;
                Ok(t0.iter().map(|c| spec.mul(c, &scale)).collect())
            }
            _ => Err(FieldError::ZeroInverse),
        }
    }

    /// Rabin irreducibility test for a monic polynomial over F_q given by its
    /// low coefficients: f is irreducible of degree d iff x^(q^d) = x mod f
    /// and gcd(x^(q^(d/r)) - x, f) = 1 for every prime r dividing d.
    pub fn is_irreducible(spec: &FieldSpec, low: &[FqElem]) -> bool {
        let d = low.len();
        debug_assert!(d >= 2);
        if spec.is_zero(&low[0]) {
            return false;
        }
        let mut full = low.to_vec();
        full.push(spec.one());

        let checkpoints: Vec<usize> = prime_divisors(d as u64)
            .iter()
            .map(|&r| d / r as usize)
            .collect();

        // g = x^(q^t) mod f, advanced one Frobenius step at a time.
        let mut g = vec![spec.zero(), spec.one()]; // x
        let x = g.clone();
        for t in 1..=d {
            g = frobenius(spec, &g, low);
            if t < d && checkpoints.contains(&t) {
                // gcd(g - x, f) must be trivial
                let mut diff = g.clone();
                while diff.len() < 2 {
                    diff.push(spec.zero());
                }
                diff[1] = spec.sub(&diff[1], &spec.one());
                let h = gcd(spec, &diff, &full);
                if deg(spec, &h) != Some(0) {
                    return false;
                }
            }
        }
        // x^(q^d) must come back to x
        trim(spec, g) == trim(spec, x)
    }

    /// g -> g^q mod f, where q is the order of `spec` and f is monic with low
    /// coefficients `low`.
    fn frobenius(spec: &FieldSpec, g: &[FqElem], low: &[FqElem]) -> Vec<FqElem> {
        // g^q = (g^p)^(p^(e-1)); q = p^e
        let mut acc = g.to_vec();
        for _ in 0..spec.degree() {
            acc = powmod_small(spec, &acc, spec.characteristic(), low);
        }
        acc
    }

    fn powmod_small(spec: &FieldSpec, a: &[FqElem], mut exp: u64, low: &[FqElem]) -> Vec<FqElem> {
        let mut result = vec![spec.one()];
        let mut base = rem_monic(spec, a, low);
        while exp > 0 {
            if exp & 1 == 1 {
                result = rem_monic(spec, &mul(spec, &result, &base), low);
            }
            base = rem_monic(spec, &mul(spec, &base, &base), low);
            exp >>= 1;
        }
        result
    }

    fn prime_divisors(mut n: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                out.push(d);
                while n % d == 0 {
                    n /= d;
                }
            }
            d += 1;
        }
        if n > 1 {
            out.push(n);
        }
        out
    }
}

#[inline]
fn addmod(a: u64, b: u64, p: u64) -> u64 {
    let s = (a as u128) + (b as u128);
    (s % p as u128) as u64
}

#[inline]
fn submod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + (p - b)
    }
}

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn invmod(a: u64, p: u64) -> Result<u64, FieldError> {
    // Extended Euclid on integers.
    if a == 0 {
        return Err(FieldError::ZeroInverse);
    }
    let (mut r0, mut r1) = (p as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    Ok(((t0.rem_euclid(p as i128)) as u128 % p as u128) as u64)
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &sp in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == sp {
            return true;
        }
        if n % sp == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn powmod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}
