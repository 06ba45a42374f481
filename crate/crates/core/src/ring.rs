//! Exact commutative rings: integers, rationals, residues, one-variable
//! polynomial and Laurent towers, principal localizations and double rings.
//!
//! Elements are plain payloads ([`Elem`]); every operation goes through the
//! owning [`RingDescriptor`], which keeps payloads canonical so that equality
//! is structural.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("descriptor mismatch: {0}")]
    DescriptorMismatch(String),
    #[error("unsupported ideal class: {0}")]
    UnsupportedIdealClass(String),
    #[error("unit group of {0} is not enumerable")]
    NotEnumerable(String),
    #[error("{0} is not a unit")]
    NonUnit(String),
    #[error("{0} is not in the ideal")]
    NotInIdeal(String),
    #[error("unsupported localization: {0}")]
    UnsupportedLocalization(String),
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Ring = Arc<RingDescriptor>;

/// A ring in the supported tower.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RingDescriptor {
    Integers,
    Rationals,
    IntegersMod(u64),
    Polynomial(Ring, String),
    Laurent(Ring, String),
    /// `base[1/s]`; `s` is a non-zerodivisor of `base`.
    Localization(Ring, Elem),
    /// Pairs `(a; b)` with `a - b` in the ideal.
    DoubleRing(Ring, IdealSpec),
}

/// Canonical payload of a ring element. Which variant is valid depends on
/// the owning ring: `Poly` serves both polynomial and Laurent rings and keeps
/// `(exponent, coefficient)` terms sorted ascending with no zero coefficients;
/// `Frac(a, k)` is `a / s^k` with `k` minimal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    Int(BigInt),
    Rat(BigRational),
    Mod(u64),
    Poly(Vec<(i64, Elem)>),
    Frac(Box<Elem>, u32),
    Pair(Box<Elem>, Box<Elem>),
}

impl Elem {
    pub fn is_zero(&self) -> bool {
        match self {
            Elem::Int(n) => n.is_zero(),
            Elem::Rat(q) => q.is_zero(),
            Elem::Mod(r) => *r == 0,
            Elem::Poly(t) => t.is_empty(),
            Elem::Frac(a, _) => a.is_zero(),
            Elem::Pair(a, b) => a.is_zero() && b.is_zero(),
        }
    }

    pub fn terms(&self) -> &[(i64, Elem)] {
        match self {
            Elem::Poly(t) => t,
            _ => panic!("payload is not a polynomial: {self:?}"),
        }
    }
}

/// Finite generating set of an ideal of `ring`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdealSpec {
    pub ring: Ring,
    pub generators: Vec<Elem>,
}

/// A ring element bundled with its ring.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingElem {
    pub ring: Ring,
    pub value: Elem,
}

impl RingElem {
    pub fn new(ring: &Ring, value: Elem) -> Self {
        RingElem { ring: ring.clone(), value }
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ring.render(&self.value))
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (g, x) = {
        let e = BigInt::from(a).extended_gcd(&BigInt::from(m));
        (e.gcd, e.x)
    };
    if !g.is_one() {
        return None;
    }
    Some(x.mod_floor(&BigInt::from(m)).to_u64().unwrap())
}

pub fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            out.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

pub fn is_prime(m: u64) -> bool {
    m >= 2 && prime_factors(m) == vec![m]
}

fn radical(m: u64) -> u64 {
    prime_factors(m).into_iter().product()
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

impl RingDescriptor {
    pub fn integers() -> Ring {
        Arc::new(RingDescriptor::Integers)
    }

    pub fn rationals() -> Ring {
        Arc::new(RingDescriptor::Rationals)
    }

    pub fn integers_mod(m: u64) -> Result<Ring, RingError> {
        if m < 2 {
            return Err(RingError::InvalidRing(format!("modulus {m} < 2")));
        }
        Ok(Arc::new(RingDescriptor::IntegersMod(m)))
    }

    pub fn polynomial(base: &Ring, var: &str) -> Result<Ring, RingError> {
        Self::check_var(base, var)?;
        Ok(Arc::new(RingDescriptor::Polynomial(base.clone(), var.to_string())))
    }

    pub fn laurent(base: &Ring, var: &str) -> Result<Ring, RingError> {
        Self::check_var(base, var)?;
        Ok(Arc::new(RingDescriptor::Laurent(base.clone(), var.to_string())))
    }

    pub fn localization(base: &Ring, s: Elem) -> Result<Ring, RingError> {
        let s = base.normalize(&s)?;
        if !base.is_non_zerodivisor(&s)? {
            return Err(RingError::UnsupportedLocalization(format!(
                "{} is a zerodivisor of {}",
                base.render(&s),
                base
            )));
        }
        Ok(Arc::new(RingDescriptor::Localization(base.clone(), s)))
    }

    pub fn double(base: &Ring, ideal: IdealSpec) -> Result<Ring, RingError> {
        if &ideal.ring != base {
            return Err(RingError::DescriptorMismatch("ideal lives in another ring".into()));
        }
        // Membership must be decidable for the double ring to be usable.
        ideal_member(&ideal, &base.zero())?;
        Ok(Arc::new(RingDescriptor::DoubleRing(base.clone(), ideal)))
    }

    fn check_var(base: &Ring, var: &str) -> Result<(), RingError> {
        if var.is_empty() || !var.chars().all(|c| c.is_ascii_alphanumeric()) || !var.chars().next().unwrap().is_ascii_alphabetic() {
            return Err(RingError::InvalidRing(format!("bad variable name {var:?}")));
        }
        if base.variables().iter().any(|v| v == var) {
            return Err(RingError::InvalidRing(format!("variable {var} repeated in tower")));
        }
        Ok(())
    }

    /// Variable names along the tower, innermost first.
    pub fn variables(&self) -> Vec<String> {
        match self {
            RingDescriptor::Polynomial(b, v) | RingDescriptor::Laurent(b, v) => {
                let mut out = b.variables();
                out.push(v.clone());
                out
            }
            RingDescriptor::Localization(b, _) | RingDescriptor::DoubleRing(b, _) => b.variables(),
            _ => Vec::new(),
        }
    }

    /// Base ring of a polynomial/Laurent/localization/double layer.
    pub fn base(&self) -> Option<&Ring> {
        match self {
            RingDescriptor::Polynomial(b, _)
            | RingDescriptor::Laurent(b, _)
            | RingDescriptor::Localization(b, _)
            | RingDescriptor::DoubleRing(b, _) => Some(b),
            _ => None,
        }
    }

    pub fn is_prime_field(&self) -> bool {
        matches!(self, RingDescriptor::IntegersMod(p) if is_prime(*p))
    }

    /// `ℤ/p^e` or a prime field: the local residue rings supported by the
    /// decomposition algorithms. Returns `(p, p^e)`.
    pub fn local_residue(&self) -> Option<(u64, u64)> {
        match self {
            RingDescriptor::IntegersMod(m) => {
                let f = prime_factors(*m);
                (f.len() == 1).then(|| (f[0], *m))
            }
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            RingDescriptor::IntegersMod(_) => true,
            RingDescriptor::DoubleRing(b, _) => b.is_finite(),
            RingDescriptor::Localization(b, _) => b.is_finite(),
            _ => false,
        }
    }

    /// All elements of a finite ring, in canonical order.
    pub fn elements(&self) -> Option<Vec<Elem>> {
        match self {
            RingDescriptor::IntegersMod(m) => Some((0..*m).map(Elem::Mod).collect()),
            RingDescriptor::Localization(b, _) => {
                Some(b.elements()?.into_iter().map(|a| Elem::Frac(Box::new(a), 0)).collect())
            }
            RingDescriptor::DoubleRing(b, i) => {
                let all = b.elements()?;
                let mut out = Vec::new();
                for a in &all {
                    for c in &all {
                        if ideal_member(i, &b.sub(a, c)).ok()? {
                            out.push(Elem::Pair(Box::new(a.clone()), Box::new(c.clone())));
                        }
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }

    pub fn zero(&self) -> Elem {
        match self {
            RingDescriptor::Integers => Elem::Int(BigInt::zero()),
            RingDescriptor::Rationals => Elem::Rat(BigRational::zero()),
            RingDescriptor::IntegersMod(_) => Elem::Mod(0),
            RingDescriptor::Polynomial(..) | RingDescriptor::Laurent(..) => Elem::Poly(Vec::new()),
            RingDescriptor::Localization(b, _) => Elem::Frac(Box::new(b.zero()), 0),
            RingDescriptor::DoubleRing(b, _) => Elem::Pair(Box::new(b.zero()), Box::new(b.zero())),
        }
    }

    pub fn one(&self) -> Elem {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> Elem {
        self.from_bigint(&BigInt::from(n))
    }

    pub fn from_bigint(&self, n: &BigInt) -> Elem {
        match self {
            RingDescriptor::Integers => Elem::Int(n.clone()),
            RingDescriptor::Rationals => Elem::Rat(BigRational::from_integer(n.clone())),
            RingDescriptor::IntegersMod(m) => Elem::Mod(n.mod_floor(&BigInt::from(*m)).to_u64().unwrap()),
            RingDescriptor::Polynomial(b, _) | RingDescriptor::Laurent(b, _) => {
                let c = b.from_bigint(n);
                if c.is_zero() {
                    Elem::Poly(Vec::new())
                } else {
                    Elem::Poly(vec![(0, c)])
                }
            }
            RingDescriptor::Localization(b, _) => Elem::Frac(Box::new(b.from_bigint(n)), 0),
            RingDescriptor::DoubleRing(b, _) => {
                let c = b.from_bigint(n);
                Elem::Pair(Box::new(c.clone()), Box::new(c))
            }
        }
    }

    /// The element `c·X^e` of a polynomial or Laurent layer.
    pub fn monomial(&self, c: Elem, e: i64) -> Elem {
        match self {
            RingDescriptor::Polynomial(..) | RingDescriptor::Laurent(..) => {
                assert!(e >= 0 || matches!(self, RingDescriptor::Laurent(..)), "negative exponent in polynomial ring");
                if c.is_zero() {
                    Elem::Poly(Vec::new())
                } else {
                    Elem::Poly(vec![(e, c)])
                }
            }
            _ => panic!("monomial requested in {self}"),
        }
    }

    /// The outermost variable of a polynomial/Laurent layer.
    pub fn var(&self) -> Elem {
        match self {
            RingDescriptor::Polynomial(b, _) | RingDescriptor::Laurent(b, _) => self.monomial(b.one(), 1),
            _ => panic!("{self} has no outer variable"),
        }
    }

    /// Element for a variable anywhere in the tower.
    pub fn var_named(&self, name: &str) -> Option<Elem> {
        match self {
            RingDescriptor::Polynomial(b, v) | RingDescriptor::Laurent(b, v) => {
                if v == name {
                    Some(self.var())
                } else {
                    b.var_named(name).map(|c| self.monomial(c, 0))
                }
            }
            RingDescriptor::Localization(b, _) => b.var_named(name).map(|c| Elem::Frac(Box::new(c), 0)),
            RingDescriptor::DoubleRing(b, _) => b.var_named(name).map(|c| Elem::Pair(Box::new(c.clone()), Box::new(c))),
            _ => None,
        }
    }

    /// Embed a constant of the immediate base into a polynomial/Laurent layer.
    pub fn constant(&self, c: Elem) -> Elem {
        self.monomial(c, 0)
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        match (self, a, b) {
            (RingDescriptor::Integers, Elem::Int(x), Elem::Int(y)) => Elem::Int(x + y),
            (RingDescriptor::Rationals, Elem::Rat(x), Elem::Rat(y)) => Elem::Rat(x + y),
            (RingDescriptor::IntegersMod(m), Elem::Mod(x), Elem::Mod(y)) => {
                let s = x + y;
                Elem::Mod(if s >= *m { s - m } else { s })
            }
            (RingDescriptor::Polynomial(base, _) | RingDescriptor::Laurent(base, _), Elem::Poly(x), Elem::Poly(y)) => {
                Elem::Poly(poly_add(base, x, y))
            }
            (RingDescriptor::Localization(base, s), Elem::Frac(x, k), Elem::Frac(y, l)) => {
                let m = (*k).max(*l);
                let xs = base.mul(x, &base.pow_nat(s, (m - k) as u64));
                let ys = base.mul(y, &base.pow_nat(s, (m - l) as u64));
                frac_reduce(base, s, base.add(&xs, &ys), m)
            }
            (RingDescriptor::DoubleRing(base, _), Elem::Pair(x1, x2), Elem::Pair(y1, y2)) => {
                Elem::Pair(Box::new(base.add(x1, y1)), Box::new(base.add(x2, y2)))
            }
            _ => panic!("payload mismatch in {self}: {a:?} + {b:?}"),
        }
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        match (self, a) {
            (RingDescriptor::Integers, Elem::Int(x)) => Elem::Int(-x),
            (RingDescriptor::Rationals, Elem::Rat(x)) => Elem::Rat(-x),
            (RingDescriptor::IntegersMod(m), Elem::Mod(x)) => Elem::Mod(if *x == 0 { 0 } else { m - x }),
            (RingDescriptor::Polynomial(base, _) | RingDescriptor::Laurent(base, _), Elem::Poly(x)) => {
                Elem::Poly(x.iter().map(|(e, c)| (*e, base.neg(c))).collect())
            }
            (RingDescriptor::Localization(base, _), Elem::Frac(x, k)) => Elem::Frac(Box::new(base.neg(x)), *k),
            (RingDescriptor::DoubleRing(base, _), Elem::Pair(x, y)) => Elem::Pair(Box::new(base.neg(x)), Box::new(base.neg(y))),
            _ => panic!("payload mismatch in {self}: -{a:?}"),
        }
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match (self, a, b) {
            (RingDescriptor::Integers, Elem::Int(x), Elem::Int(y)) => Elem::Int(x * y),
            (RingDescriptor::Rationals, Elem::Rat(x), Elem::Rat(y)) => Elem::Rat(x * y),
            (RingDescriptor::IntegersMod(m), Elem::Mod(x), Elem::Mod(y)) => Elem::Mod(mul_mod(*x, *y, *m)),
            (RingDescriptor::Polynomial(base, _) | RingDescriptor::Laurent(base, _), Elem::Poly(x), Elem::Poly(y)) => {
                Elem::Poly(poly_mul(base, x, y))
            }
            (RingDescriptor::Localization(base, s), Elem::Frac(x, k), Elem::Frac(y, l)) => {
                frac_reduce(base, s, base.mul(x, y), k + l)
            }
            (RingDescriptor::DoubleRing(base, _), Elem::Pair(x1, x2), Elem::Pair(y1, y2)) => {
                Elem::Pair(Box::new(base.mul(x1, y1)), Box::new(base.mul(x2, y2)))
            }
            _ => panic!("payload mismatch in {self}: {a:?} * {b:?}"),
        }
    }

    /// `a·b + c`, the inner step of every matrix operation.
    pub fn mul_add(&self, a: &Elem, b: &Elem, c: &Elem) -> Elem {
        if let (RingDescriptor::IntegersMod(m), Elem::Mod(x), Elem::Mod(y), Elem::Mod(z)) = (self, a, b, c) {
            return Elem::Mod(((*x as u128 * *y as u128 + *z as u128) % *m as u128) as u64);
        }
        self.add(&self.mul(a, b), c)
    }

    pub fn pow_nat(&self, a: &Elem, mut n: u64) -> Elem {
        let mut result = self.one();
        let mut base = a.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = self.mul(&result, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    /// `a^n` for any integer `n`; negative powers need `a` to be a unit.
    pub fn pow(&self, a: &Elem, n: i64) -> Result<Elem, RingError> {
        if n >= 0 {
            Ok(self.pow_nat(a, n as u64))
        } else {
            let inv = self.inv(a).ok_or_else(|| RingError::NonUnit(self.render(a)))?;
            Ok(self.pow_nat(&inv, n.unsigned_abs()))
        }
    }

    pub fn is_one(&self, a: &Elem) -> bool {
        *a == self.one()
    }

    pub fn is_unit(&self, a: &Elem) -> bool {
        self.inv(a).is_some()
    }

    /// Multiplicative inverse, when the element is a unit and the ring class
    /// lets us find it.
    pub fn inv(&self, a: &Elem) -> Option<Elem> {
        match (self, a) {
            (RingDescriptor::Integers, Elem::Int(x)) => (x.abs().is_one()).then(|| Elem::Int(x.clone())),
            (RingDescriptor::Rationals, Elem::Rat(x)) => (!x.is_zero()).then(|| Elem::Rat(x.recip())),
            (RingDescriptor::IntegersMod(m), Elem::Mod(x)) => inv_mod(*x, *m).map(Elem::Mod),
            (RingDescriptor::Polynomial(base, _), Elem::Poly(t)) => {
                if t.is_empty() || t[0].0 != 0 {
                    return None;
                }
                self.series_inverse(base, t, 0)
            }
            (RingDescriptor::Laurent(base, _), Elem::Poly(t)) => {
                let unit_terms: Vec<usize> = (0..t.len()).filter(|&i| base.is_unit(&t[i].1)).collect();
                if unit_terms.len() != 1 {
                    return None;
                }
                self.series_inverse(base, t, unit_terms[0])
            }
            (RingDescriptor::Localization(base, s), Elem::Frac(x, k)) => {
                let sk = base.pow_nat(s, *k as u64);
                if let Some(xi) = base.inv(x) {
                    return Some(frac_reduce(base, s, base.mul(&xi, &sk), 0));
                }
                let mut sj = base.one();
                for j in 1..=64u32 {
                    sj = base.mul(&sj, s);
                    if let Some(t) = base.exact_div(&sj, x) {
                        return Some(frac_reduce(base, s, base.mul(&t, &sk), j));
                    }
                }
                None
            }
            (RingDescriptor::DoubleRing(base, _), Elem::Pair(x, y)) => {
                Some(Elem::Pair(Box::new(base.inv(x)?), Box::new(base.inv(y)?)))
            }
            _ => panic!("payload mismatch in {self}: inv {a:?}"),
        }
    }

    /// Inverse of `c·X^k·(1 + n)` with `n` nilpotent, via a terminating
    /// geometric series. `pivot` indexes the unit term.
    fn series_inverse(&self, base: &Ring, t: &[(i64, Elem)], pivot: usize) -> Option<Elem> {
        let (k, ref c) = t[pivot];
        let ci = base.inv(c)?;
        let lead_inv = self.monomial(ci.clone(), -k);
        let mut n_terms = Vec::new();
        for (i, (e, coef)) in t.iter().enumerate() {
            if i != pivot {
                let q = base.mul(coef, &ci);
                if !base.is_nilpotent(&q) {
                    return None;
                }
                n_terms.push((e - k, q));
            }
        }
        let n = Elem::Poly(n_terms);
        let minus_n = self.neg(&n);
        let mut sum = self.one();
        let mut p = self.one();
        for _ in 0..256 {
            p = self.mul(&p, &minus_n);
            if p.is_zero() {
                return Some(self.mul(&sum, &lead_inv));
            }
            sum = self.add(&sum, &p);
        }
        None
    }

    pub fn is_nilpotent(&self, a: &Elem) -> bool {
        match (self, a) {
            (RingDescriptor::IntegersMod(m), Elem::Mod(x)) => x % radical(*m) == 0,
            (RingDescriptor::Polynomial(b, _) | RingDescriptor::Laurent(b, _), Elem::Poly(t)) => {
                t.iter().all(|(_, c)| b.is_nilpotent(c))
            }
            (RingDescriptor::Localization(b, _), Elem::Frac(x, _)) => b.is_nilpotent(x),
            (RingDescriptor::DoubleRing(b, _), Elem::Pair(x, y)) => b.is_nilpotent(x) && b.is_nilpotent(y),
            _ => a.is_zero(),
        }
    }

    /// `q` with `q·d = a` when such a quotient exists and this ring class can
    /// find it: integers, fields, unit divisors, single-term divisors and
    /// divisors with a unit leading coefficient.
    pub fn exact_div(&self, a: &Elem, d: &Elem) -> Option<Elem> {
        if d.is_zero() {
            return None;
        }
        if a.is_zero() {
            return Some(self.zero());
        }
        match (self, a, d) {
            (RingDescriptor::Integers, Elem::Int(x), Elem::Int(y)) => {
                let (q, r) = x.div_rem(y);
                r.is_zero().then_some(Elem::Int(q))
            }
            (RingDescriptor::Rationals, Elem::Rat(x), Elem::Rat(y)) => Some(Elem::Rat(x / y)),
            (RingDescriptor::IntegersMod(_), _, _) => self.inv(d).map(|di| self.mul(a, &di)),
            (RingDescriptor::Polynomial(base, _) | RingDescriptor::Laurent(base, _), Elem::Poly(x), Elem::Poly(y)) => {
                let laurent = matches!(self, RingDescriptor::Laurent(..));
                if y.len() == 1 {
                    let (e, ref c) = y[0];
                    let mut out = Vec::with_capacity(x.len());
                    for (xe, xc) in x {
                        if !laurent && *xe < e {
                            return None;
                        }
                        out.push((xe - e, base.exact_div(xc, c)?));
                    }
                    return Some(Elem::Poly(out));
                }
                if !laurent {
                    return poly_long_div(base, x, y).map(Elem::Poly);
                }
                let (sx, sy) = (x[0].0, y[0].0);
                let shift = |t: &[(i64, Elem)], s: i64| t.iter().map(|(e, c)| (e - s, c.clone())).collect::<Vec<_>>();
                let q = poly_long_div(base, &shift(x, sx), &shift(y, sy))?;
                Some(Elem::Poly(shift(&q, sy - sx)))
            }
            _ => None,
        }
    }

    fn is_non_zerodivisor(&self, s: &Elem) -> Result<bool, RingError> {
        match (self, s) {
            (RingDescriptor::Integers | RingDescriptor::Rationals, _) => Ok(!s.is_zero()),
            (RingDescriptor::IntegersMod(m), Elem::Mod(x)) => Ok(gcd_u64(*x, *m) == 1),
            (RingDescriptor::Polynomial(b, _) | RingDescriptor::Laurent(b, _), Elem::Poly(t)) => match b.as_ref() {
                RingDescriptor::Integers | RingDescriptor::Rationals => Ok(!t.is_empty()),
                RingDescriptor::IntegersMod(m) => {
                    // A zerodivisor iff some prime of m divides every coefficient.
                    Ok(!prime_factors(*m).into_iter().any(|p| {
                        t.iter().all(|(_, c)| matches!(c, Elem::Mod(x) if x % p == 0))
                    }))
                }
                _ => Err(RingError::UnsupportedLocalization(format!("base {self}"))),
            },
            _ => Err(RingError::UnsupportedLocalization(format!("base {self}"))),
        }
    }

    /// Validate a payload and bring it to canonical form.
    pub fn normalize(&self, a: &Elem) -> Result<Elem, RingError> {
        let bad = || RingError::DescriptorMismatch(format!("{a:?} is not a payload of {self}"));
        match (self, a) {
            (RingDescriptor::Integers, Elem::Int(_)) | (RingDescriptor::Rationals, Elem::Rat(_)) => Ok(a.clone()),
            (RingDescriptor::Rationals, Elem::Int(n)) => Ok(Elem::Rat(BigRational::from_integer(n.clone()))),
            (RingDescriptor::IntegersMod(m), Elem::Mod(x)) => Ok(Elem::Mod(x % m)),
            (RingDescriptor::IntegersMod(_), Elem::Int(n)) => Ok(self.from_bigint(n)),
            (RingDescriptor::Polynomial(base, _) | RingDescriptor::Laurent(base, _), Elem::Poly(t)) => {
                let laurent = matches!(self, RingDescriptor::Laurent(..));
                let mut acc: BTreeMap<i64, Elem> = BTreeMap::new();
                for (e, c) in t {
                    if *e < 0 && !laurent {
                        return Err(bad());
                    }
                    let c = base.normalize(c)?;
                    let slot = acc.entry(*e).or_insert_with(|| base.zero());
                    *slot = base.add(slot, &c);
                }
                Ok(Elem::Poly(acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()))
            }
            (RingDescriptor::Localization(base, s), Elem::Frac(x, k)) => Ok(frac_reduce(base, s, base.normalize(x)?, *k)),
            (RingDescriptor::DoubleRing(base, ideal), Elem::Pair(x, y)) => {
                let (x, y) = (base.normalize(x)?, base.normalize(y)?);
                if !ideal_member(ideal, &base.sub(&x, &y))? {
                    return Err(RingError::NotInIdeal(format!("{} - {}", base.render(&x), base.render(&y))));
                }
                Ok(Elem::Pair(Box::new(x), Box::new(y)))
            }
            _ => Err(bad()),
        }
    }

    /// Canonical text form; coefficients ascending by exponent.
    pub fn render(&self, a: &Elem) -> String {
        match (self, a) {
            (RingDescriptor::Integers, Elem::Int(x)) => x.to_string(),
            (RingDescriptor::Rationals, Elem::Rat(x)) => x.to_string(),
            (RingDescriptor::IntegersMod(_), Elem::Mod(x)) => x.to_string(),
            (RingDescriptor::Polynomial(base, var) | RingDescriptor::Laurent(base, var), Elem::Poly(t)) => {
                if t.is_empty() {
                    return "0".into();
                }
                let mut out = String::new();
                for (i, (e, c)) in t.iter().enumerate() {
                    let cs = base.render(c);
                    let compound = is_compound(&cs);
                    let term = if *e == 0 {
                        if compound && i > 0 { format!("({cs})") } else { cs }
                    } else {
                        let mono = if *e == 1 { var.clone() } else { format!("{var}^{e}") };
                        if cs == "1" {
                            mono
                        } else if cs == "-1" {
                            format!("-{mono}")
                        } else if compound {
                            format!("({cs}){mono}")
                        } else {
                            format!("{cs}{mono}")
                        }
                    };
                    if i > 0 && !term.starts_with('-') {
                        out.push('+');
                    }
                    out.push_str(&term);
                }
                out
            }
            (RingDescriptor::Localization(base, s), Elem::Frac(x, k)) => {
                let xs = base.render(x);
                if *k == 0 {
                    return xs;
                }
                let ss = base.render(s);
                let num = if is_compound(&xs) { format!("({xs})") } else { xs };
                let den = if is_compound(&ss) || ss.contains('^') { format!("({ss})") } else { ss };
                if *k == 1 {
                    format!("{num}/{den}")
                } else {
                    format!("{num}/{den}^{k}")
                }
            }
            (RingDescriptor::DoubleRing(base, _), Elem::Pair(x, y)) => format!("({};{})", base.render(x), base.render(y)),
            _ => format!("<{a:?}>"),
        }
    }

    /// Parse an element written in the ring's own syntax, e.g. `3X^2+2`,
    /// `X^-1`, `1/5`, `(2;7)`.
    pub fn parse_elem(self: &Ring, s: &str) -> Result<Elem, RingError> {
        let toks = tokenize(s)?;
        let mut p = ElemParser { toks, pos: 0 };
        let e = p.expr(self)?;
        if p.pos != p.toks.len() {
            return Err(RingError::Parse(format!("trailing input in {s:?}")));
        }
        Ok(e)
    }

    /// Parse a descriptor: `Z`, `Q`, `Zmod:5`, `<base>[X]`, `<base>[X,X^-1]`,
    /// `<base>@loc:<elem>`, `D(<base>,(<gens>))`.
    pub fn parse(s: &str) -> Result<Ring, RingError> {
        let s = s.trim();
        let (mut ring, mut rest) = parse_ring_atom(s)?;
        loop {
            rest = rest.trim_start();
            if rest.is_empty() {
                return Ok(ring);
            }
            if let Some(r) = rest.strip_prefix('[') {
                let close = r.find(']').ok_or_else(|| RingError::Parse(format!("unclosed '[' in {s:?}")))?;
                let inner: Vec<&str> = r[..close].split(',').map(str::trim).collect();
                ring = match inner.as_slice() {
                    [v] => RingDescriptor::polynomial(&ring, v)?,
                    [v, w] if *w == format!("{v}^-1") => RingDescriptor::laurent(&ring, v)?,
                    _ => return Err(RingError::Parse(format!("bad variable block [{}]", &r[..close]))),
                };
                rest = &r[close + 1..];
            } else if let Some(r) = rest.strip_prefix("@loc:") {
                let end = top_level_end(r, &['[', '@']);
                let den = ring.parse_elem(&r[..end])?;
                ring = RingDescriptor::localization(&ring, den)?;
                rest = &r[end..];
            } else {
                return Err(RingError::Parse(format!("unexpected {rest:?} in ring descriptor")));
            }
        }
    }
}

fn is_compound(s: &str) -> bool {
    s.char_indices().any(|(i, c)| (c == '+' || c == '-') && i > 0) || s.contains('/')
}

fn top_level_end(s: &str, stops: &[char]) -> usize {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ if depth == 0 && stops.contains(&c) => return i,
            _ => {}
        }
    }
    s.len()
}

fn parse_ring_atom(s: &str) -> Result<(Ring, &str), RingError> {
    if let Some(r) = s.strip_prefix("Zmod:") {
        let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
        let m: u64 = r[..end].parse().map_err(|_| RingError::Parse(format!("bad modulus in {s:?}")))?;
        return Ok((RingDescriptor::integers_mod(m)?, &r[end..]));
    }
    if let Some(r) = s.strip_prefix("D(") {
        // D(<base>,(<gens>)): split at the last top-level comma.
        let mut depth = 0i32;
        let mut close = None;
        let mut comma = None;
        for (i, c) in r.char_indices() {
            match c {
                '(' | '[' => depth += 1,
                ']' => depth -= 1,
                ')' if depth == 0 => {
                    close = Some(i);
                    break;
                }
                ')' => depth -= 1,
                ',' if depth == 0 => comma = Some(i),
                _ => {}
            }
        }
        let (close, comma) = match (close, comma) {
            (Some(c), Some(m)) => (c, m),
            _ => return Err(RingError::Parse(format!("malformed double ring {s:?}"))),
        };
        let base = RingDescriptor::parse(&r[..comma])?;
        let ideal = parse_ideal(&base, r[comma + 1..close].trim())?;
        return Ok((RingDescriptor::double(&base, ideal)?, &r[close + 1..]));
    }
    if let Some(r) = s.strip_prefix('Z') {
        return Ok((RingDescriptor::integers(), r));
    }
    if let Some(r) = s.strip_prefix('Q') {
        return Ok((RingDescriptor::rationals(), r));
    }
    Err(RingError::Parse(format!("unknown ring {s:?}")))
}

/// Parse `(g1,g2,...)` as an ideal of `base`.
pub fn parse_ideal(base: &Ring, s: &str) -> Result<IdealSpec, RingError> {
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| RingError::Parse(format!("ideal must be parenthesized: {s:?}")))?;
    let mut gens = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                gens.push(base.parse_elem(&inner[start..i])?);
                start = i + 1;
            }
            _ => {}
        }
    }
    gens.push(base.parse_elem(&inner[start..])?);
    Ok(IdealSpec { ring: base.clone(), generators: gens })
}

impl fmt::Display for RingDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingDescriptor::Integers => write!(f, "Z"),
            RingDescriptor::Rationals => write!(f, "Q"),
            RingDescriptor::IntegersMod(m) => write!(f, "Zmod:{m}"),
            RingDescriptor::Polynomial(b, v) => write!(f, "{b}[{v}]"),
            RingDescriptor::Laurent(b, v) => write!(f, "{b}[{v},{v}^-1]"),
            RingDescriptor::Localization(b, s) => write!(f, "{b}@loc:{}", b.render(s)),
            RingDescriptor::DoubleRing(b, i) => {
                let gens: Vec<String> = i.generators.iter().map(|g| b.render(g)).collect();
                write!(f, "D({b},({}))", gens.join(","))
            }
        }
    }
}

fn poly_add(base: &RingDescriptor, a: &[(i64, Elem)], b: &[(i64, Elem)]) -> Vec<(i64, Elem)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let c = base.add(&a[i].1, &b[j].1);
                if !c.is_zero() {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn poly_mul(base: &RingDescriptor, a: &[(i64, Elem)], b: &[(i64, Elem)]) -> Vec<(i64, Elem)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len() == 1 || b.len() == 1 {
        let (single, other) = if a.len() == 1 { (&a[0], b) } else { (&b[0], a) };
        return other
            .iter()
            .filter_map(|(e, c)| {
                let p = base.mul(&single.1, c);
                (!p.is_zero()).then_some((single.0 + e, p))
            })
            .collect();
    }
    let mut acc: BTreeMap<i64, Elem> = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let p = base.mul(ca, cb);
            if p.is_zero() {
                continue;
            }
            match acc.get_mut(&(ea + eb)) {
                Some(slot) => *slot = base.add(slot, &p),
                None => {
                    acc.insert(ea + eb, p);
                }
            }
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Quotient of polynomials with nonnegative exponents when the divisor has a
/// unit leading coefficient and the division is exact.
fn poly_long_div(base: &RingDescriptor, x: &[(i64, Elem)], y: &[(i64, Elem)]) -> Option<Vec<(i64, Elem)>> {
    let (hy, lead) = y.last().map(|(e, c)| (*e, c))?;
    let lead_inv = base.inv(lead)?;
    let mut rem = x.to_vec();
    let mut q = Vec::new();
    while let Some((hr, cr)) = rem.last().cloned() {
        if hr < hy {
            return None;
        }
        let tc = base.mul(&cr, &lead_inv);
        let sub: Vec<(i64, Elem)> = poly_mul(base, &[(hr - hy, tc.clone())], y).into_iter().map(|(e, c)| (e, base.neg(&c))).collect();
        rem = poly_add(base, &rem, &sub);
        q.push((hr - hy, tc));
    }
    q.reverse();
    Some(q)
}

fn frac_reduce(base: &RingDescriptor, s: &Elem, a: Elem, k: u32) -> Elem {
    if a.is_zero() {
        return Elem::Frac(Box::new(base.zero()), 0);
    }
    let mut a = a;
    let mut k = k;
    while k > 0 {
        match base.exact_div(&a, s) {
            Some(q) => {
                a = q;
                k -= 1;
            }
            None => break,
        }
    }
    Elem::Frac(Box::new(a), k)
}

/// Decide `e ∈ I` for the supported ideal classes: principal ideals of `ℤ`,
/// `ℤ/m`, `ℚ`, and ideals generated by single terms `c·X^k` in one-variable
/// polynomial or Laurent rings over those.
pub fn ideal_member(ideal: &IdealSpec, e: &Elem) -> Result<bool, RingError> {
    let ring = &ideal.ring;
    match ring.as_ref() {
        RingDescriptor::Integers | RingDescriptor::Rationals | RingDescriptor::IntegersMod(_) => {
            Ok(scalar_member(ring, &ideal.generators, e))
        }
        RingDescriptor::Polynomial(base, _) | RingDescriptor::Laurent(base, _) => {
            if !matches!(base.as_ref(), RingDescriptor::Integers | RingDescriptor::Rationals | RingDescriptor::IntegersMod(_)) {
                return Err(RingError::UnsupportedIdealClass(format!("ideal of {ring}")));
            }
            let laurent = matches!(ring.as_ref(), RingDescriptor::Laurent(..));
            let mut terms = Vec::new();
            for g in &ideal.generators {
                match g.terms() {
                    [] => {}
                    [(k, c)] => terms.push((*k, c.clone())),
                    _ => {
                        return Err(RingError::UnsupportedIdealClass(format!(
                            "generator {} is not a single term",
                            ring.render(g)
                        )))
                    }
                }
            }
            for (j, a) in e.terms() {
                let gens: Vec<Elem> = terms.iter().filter(|(k, _)| laurent || k <= j).map(|(_, c)| c.clone()).collect();
                if !scalar_member(base, &gens, a) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Err(RingError::UnsupportedIdealClass(format!("ideal of {ring}"))),
    }
}

fn scalar_member(ring: &RingDescriptor, gens: &[Elem], e: &Elem) -> bool {
    match (ring, e) {
        (RingDescriptor::Rationals, _) => e.is_zero() || gens.iter().any(|g| !g.is_zero()),
        (RingDescriptor::Integers, Elem::Int(x)) => {
            let g = gens.iter().fold(BigInt::zero(), |acc, g| match g {
                Elem::Int(n) => acc.gcd(n),
                _ => acc,
            });
            if g.is_zero() {
                x.is_zero()
            } else {
                (x % &g).is_zero()
            }
        }
        (RingDescriptor::IntegersMod(m), Elem::Mod(x)) => {
            let g = gens.iter().fold(*m, |acc, g| match g {
                Elem::Mod(n) => gcd_u64(acc, *n),
                _ => acc,
            });
            x % g == 0
        }
        _ => false,
    }
}

/// The unit group of a ring, as far as it can be listed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnitSet {
    Finite(Vec<Elem>),
    /// `{c·X^k : c ∈ coeffs, k ∈ ℤ}` in a Laurent ring over a prime field.
    LaurentMonomials { ring: Ring, coeffs: Vec<Elem> },
}

impl UnitSet {
    /// Draw a unit; Laurent exponents are drawn from `-max_exp..=max_exp`.
    pub fn sample<R: Rng>(&self, rng: &mut R, max_exp: i64) -> Elem {
        match self {
            UnitSet::Finite(v) => v[rng.gen_range(0..v.len())].clone(),
            UnitSet::LaurentMonomials { ring, coeffs } => {
                let c = coeffs[rng.gen_range(0..coeffs.len())].clone();
                ring.monomial(c, rng.gen_range(-max_exp..=max_exp))
            }
        }
    }
}

pub fn units(ring: &Ring) -> Result<UnitSet, RingError> {
    let not_enum = || RingError::NotEnumerable(ring.to_string());
    match ring.as_ref() {
        RingDescriptor::Integers => Ok(UnitSet::Finite(vec![ring.one(), ring.from_i64(-1)])),
        RingDescriptor::IntegersMod(m) => {
            Ok(UnitSet::Finite((1..*m).filter(|x| gcd_u64(*x, *m) == 1).map(Elem::Mod).collect()))
        }
        RingDescriptor::Laurent(base, _) if base.is_prime_field() => match units(base)? {
            UnitSet::Finite(coeffs) => Ok(UnitSet::LaurentMonomials { ring: ring.clone(), coeffs }),
            _ => Err(not_enum()),
        },
        RingDescriptor::Polynomial(base, _) => match base.as_ref() {
            RingDescriptor::IntegersMod(m) if radical(*m) == *m => match units(base)? {
                UnitSet::Finite(c) => Ok(UnitSet::Finite(c.into_iter().map(|u| ring.constant(u)).collect())),
                _ => Err(not_enum()),
            },
            RingDescriptor::Integers => Ok(UnitSet::Finite(vec![ring.one(), ring.from_i64(-1)])),
            _ => Err(not_enum()),
        },
        _ if ring.is_finite() => {
            let all = ring.elements().ok_or_else(not_enum)?;
            Ok(UnitSet::Finite(all.into_iter().filter(|e| ring.is_unit(e)).collect()))
        }
        _ => Err(not_enum()),
    }
}

/// Ring homomorphisms used by the constructions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HomKind {
    /// Substitute `value` (an element of the target) for the outermost variable.
    Evaluation { var: String, value: Elem },
    /// `R → R[1/a]`.
    LocalizationMap(Elem),
    /// Coefficient reduction `ℤ → ℤ/m` or `ℤ/m → ℤ/m'` through the tower.
    Reduction,
    /// Canonical inclusion of a ring into a tower built on top of it.
    Inclusion,
    /// `p₁` or `p₂` on a double ring.
    DoubleProjection(u8),
    /// `Δ: R → D(R, I)`.
    Diagonal,
    /// Apply the listed maps left to right.
    Composition(Vec<RingHom>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingHom {
    pub source: Ring,
    pub target: Ring,
    pub kind: HomKind,
}

impl RingHom {
    pub fn evaluation(source: &Ring, target: &Ring, value: Elem) -> Result<Self, RingError> {
        let (base, var) = match source.as_ref() {
            RingDescriptor::Polynomial(b, v) | RingDescriptor::Laurent(b, v) => (b, v),
            _ => return Err(RingError::DescriptorMismatch(format!("{source} has no variable to evaluate"))),
        };
        if embed(base, target, &base.one()).is_none() {
            return Err(RingError::DescriptorMismatch(format!("{base} does not embed into {target}")));
        }
        let value = target.normalize(&value)?;
        if matches!(source.as_ref(), RingDescriptor::Laurent(..)) && !target.is_unit(&value) {
            return Err(RingError::NonUnit(target.render(&value)));
        }
        Ok(RingHom { source: source.clone(), target: target.clone(), kind: HomKind::Evaluation { var: var.clone(), value } })
    }

    pub fn localization_map(source: &Ring, a: Elem) -> Result<Self, RingError> {
        let target = RingDescriptor::localization(source, a.clone())?;
        Ok(RingHom { source: source.clone(), target, kind: HomKind::LocalizationMap(a) })
    }

    pub fn reduction(source: &Ring, target: &Ring) -> Result<Self, RingError> {
        reduce(source, target, &source.zero())?;
        Ok(RingHom { source: source.clone(), target: target.clone(), kind: HomKind::Reduction })
    }

    pub fn inclusion(source: &Ring, target: &Ring) -> Result<Self, RingError> {
        if embed(source, target, &source.one()).is_none() {
            return Err(RingError::DescriptorMismatch(format!("{source} does not embed into {target}")));
        }
        Ok(RingHom { source: source.clone(), target: target.clone(), kind: HomKind::Inclusion })
    }

    pub fn projection(source: &Ring, index: u8) -> Result<Self, RingError> {
        match source.as_ref() {
            RingDescriptor::DoubleRing(b, _) if index == 1 || index == 2 => {
                Ok(RingHom { source: source.clone(), target: b.clone(), kind: HomKind::DoubleProjection(index) })
            }
            _ => Err(RingError::DescriptorMismatch(format!("p{index} on {source}"))),
        }
    }

    pub fn diagonal(target: &Ring) -> Result<Self, RingError> {
        match target.as_ref() {
            RingDescriptor::DoubleRing(b, _) => Ok(RingHom { source: b.clone(), target: target.clone(), kind: HomKind::Diagonal }),
            _ => Err(RingError::DescriptorMismatch(format!("diagonal into {target}"))),
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &RingHom) -> Result<Self, RingError> {
        if self.target != next.source {
            return Err(RingError::DescriptorMismatch(format!("{} then {}", self.target, next.source)));
        }
        let mut parts = match &self.kind {
            HomKind::Composition(v) => v.clone(),
            _ => vec![self.clone()],
        };
        match &next.kind {
            HomKind::Composition(v) => parts.extend(v.iter().cloned()),
            _ => parts.push(next.clone()),
        }
        Ok(RingHom { source: self.source.clone(), target: next.target.clone(), kind: HomKind::Composition(parts) })
    }

    pub fn apply(&self, e: &Elem) -> Result<Elem, RingError> {
        match &self.kind {
            HomKind::Evaluation { value, .. } => {
                let base = self.source.base().unwrap();
                let mut acc = self.target.zero();
                for (k, c) in e.terms() {
                    let c = embed(base, &self.target, c).expect("checked at construction");
                    let p = self.target.pow(value, *k)?;
                    acc = self.target.add(&acc, &self.target.mul(&c, &p));
                }
                Ok(acc)
            }
            HomKind::LocalizationMap(_) | HomKind::Inclusion => {
                embed(&self.source, &self.target, e).ok_or_else(|| RingError::DescriptorMismatch("embedding".into()))
            }
            HomKind::Reduction => reduce(&self.source, &self.target, e),
            HomKind::DoubleProjection(i) => match e {
                Elem::Pair(a, b) => Ok(if *i == 1 { (**a).clone() } else { (**b).clone() }),
                _ => Err(RingError::DescriptorMismatch("projection of a non-pair".into())),
            },
            HomKind::Diagonal => Ok(Elem::Pair(Box::new(e.clone()), Box::new(e.clone()))),
            HomKind::Composition(parts) => {
                let mut x = e.clone();
                for h in parts {
                    x = h.apply(&x)?;
                }
                Ok(x)
            }
        }
    }

    pub fn apply_elem(&self, e: &RingElem) -> Result<RingElem, RingError> {
        if e.ring != self.source {
            return Err(RingError::DescriptorMismatch(format!("{} is not {}", e.ring, self.source)));
        }
        Ok(RingElem::new(&self.target, self.apply(&e.value)?))
    }
}

pub fn apply_hom(h: &RingHom, e: &RingElem) -> Result<RingElem, RingError> {
    h.apply_elem(e)
}

pub fn normalize(e: &RingElem) -> Result<RingElem, RingError> {
    Ok(RingElem::new(&e.ring, e.ring.normalize(&e.value)?))
}

/// Canonical inclusion `src → tgt` when `tgt` is built on top of `src`.
pub fn embed(src: &RingDescriptor, tgt: &RingDescriptor, e: &Elem) -> Option<Elem> {
    if src == tgt {
        return Some(e.clone());
    }
    match tgt {
        RingDescriptor::Laurent(b, v) => {
            if let RingDescriptor::Polynomial(sb, sv) = src {
                if sb == b && sv == v {
                    return Some(e.clone());
                }
            }
            embed(src, b, e).map(|c| tgt.constant(c))
        }
        RingDescriptor::Polynomial(b, _) => embed(src, b, e).map(|c| tgt.constant(c)),
        RingDescriptor::Localization(b, _) => embed(src, b, e).map(|c| Elem::Frac(Box::new(c), 0)),
        _ => match (src, e) {
            (RingDescriptor::Integers, Elem::Int(n)) => Some(tgt.from_bigint(n)),
            (RingDescriptor::Rationals, Elem::Rat(q)) if *tgt == RingDescriptor::Rationals => Some(Elem::Rat(q.clone())),
            _ => None,
        },
    }
}

/// Try to view an element of `big` as an element of `small`, inverting
/// [`embed`] (e.g. a Laurent polynomial without negative exponents).
pub fn retract(big: &RingDescriptor, small: &RingDescriptor, e: &Elem) -> Option<Elem> {
    if big == small {
        return Some(e.clone());
    }
    match (big, small) {
        (RingDescriptor::Laurent(b, v), RingDescriptor::Polynomial(sb, sv)) if b == sb && v == sv => {
            e.terms().iter().all(|(k, _)| *k >= 0).then(|| e.clone())
        }
        (RingDescriptor::Laurent(b, _) | RingDescriptor::Polynomial(b, _), _) => match e.terms() {
            [] => Some(small.zero()),
            [(0, c)] => retract(b, small, c),
            _ => None,
        },
        _ => None,
    }
}

fn reduce(src: &RingDescriptor, tgt: &RingDescriptor, e: &Elem) -> Result<Elem, RingError> {
    let mismatch = || RingError::DescriptorMismatch(format!("no reduction {src} -> {tgt}"));
    match (src, tgt, e) {
        (RingDescriptor::Integers, RingDescriptor::IntegersMod(_), Elem::Int(n)) => Ok(tgt.from_bigint(n)),
        (RingDescriptor::IntegersMod(m), RingDescriptor::IntegersMod(m2), Elem::Mod(x)) if m % m2 == 0 => Ok(Elem::Mod(x % m2)),
        (RingDescriptor::Polynomial(b, v), RingDescriptor::Polynomial(b2, v2), Elem::Poly(t))
        | (RingDescriptor::Laurent(b, v), RingDescriptor::Laurent(b2, v2), Elem::Poly(t))
            if v == v2 =>
        {
            let mut out = Vec::with_capacity(t.len());
            for (k, c) in t {
                let c = reduce(b, b2, c)?;
                if !c.is_zero() {
                    out.push((*k, c));
                }
            }
            Ok(Elem::Poly(out))
        }
        _ => Err(mismatch()),
    }
}

struct ElemParser {
    toks: Vec<Tok>,
    pos: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, RingError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            out.push(Tok::Num(digits.parse().unwrap()));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^();".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(RingError::Parse(format!("unexpected character {c:?} in {s:?}")));
        }
    }
    Ok(out)
}

impl ElemParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self, r: &Ring) -> Result<Elem, RingError> {
        let mut acc = self.term(r)?;
        loop {
            if self.eat('+') {
                let t = self.term(r)?;
                acc = r.add(&acc, &t);
            } else if self.eat('-') {
                let t = self.term(r)?;
                acc = r.sub(&acc, &t);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self, r: &Ring) -> Result<Elem, RingError> {
        let mut acc = self.unary(r)?;
        loop {
            if self.eat('*') {
                let t = self.unary(r)?;
                acc = r.mul(&acc, &t);
            } else if self.eat('/') {
                let t = self.unary(r)?;
                let inv = r.inv(&t).ok_or_else(|| RingError::NonUnit(r.render(&t)))?;
                acc = r.mul(&acc, &inv);
            } else if matches!(self.peek(), Some(Tok::Num(_) | Tok::Ident(_) | Tok::Sym('('))) {
                let t = self.power(r)?;
                acc = r.mul(&acc, &t);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self, r: &Ring) -> Result<Elem, RingError> {
        if self.eat('-') {
            let v = self.unary(r)?;
            return Ok(r.neg(&v));
        }
        self.power(r)
    }

    fn power(&mut self, r: &Ring) -> Result<Elem, RingError> {
        let base = self.atom(r)?;
        if self.eat('^') {
            let neg = self.eat('-');
            let n = match self.peek() {
                Some(Tok::Num(n)) => n.to_i64().ok_or_else(|| RingError::Parse("exponent too large".into()))?,
                _ => return Err(RingError::Parse("expected exponent".into())),
            };
            self.pos += 1;
            return r.pow(&base, if neg { -n } else { n });
        }
        Ok(base)
    }

    fn atom(&mut self, r: &Ring) -> Result<Elem, RingError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(r.from_bigint(&n))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                r.var_named(&name).ok_or_else(|| RingError::Parse(format!("unknown variable {name} in {r}")))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                if let RingDescriptor::DoubleRing(base, _) = r.as_ref() {
                    let save = self.pos;
                    if let Ok(a) = self.expr(base) {
                        if self.eat(';') {
                            let b = self.expr(base)?;
                            if !self.eat(')') {
                                return Err(RingError::Parse("expected ')'".into()));
                            }
                            return r.normalize(&Elem::Pair(Box::new(a), Box::new(b)));
                        }
                    }
                    self.pos = save;
                }
                let e = self.expr(r)?;
                if !self.eat(')') {
                    return Err(RingError::Parse("expected ')'".into()));
                }
                Ok(e)
            }
            other => Err(RingError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zmod(m: u64) -> Ring {
        RingDescriptor::integers_mod(m).unwrap()
    }

    #[test]
    fn residues_reduce() {
        let r = zmod(5);
        assert_eq!(r.from_i64(7), Elem::Mod(2));
        assert_eq!(r.normalize(&Elem::Mod(7)).unwrap(), Elem::Mod(2));
    }

    #[test]
    fn zero_coefficients_dropped() {
        let r = RingDescriptor::polynomial(&RingDescriptor::integers(), "X").unwrap();
        let raw = Elem::Poly(vec![(2, Elem::Int(0.into())), (1, Elem::Int(3.into()))]);
        let n = r.normalize(&raw).unwrap();
        assert_eq!(n, Elem::Poly(vec![(1, Elem::Int(3.into()))]));
        assert_eq!(r.render(&n), "3X");
    }

    #[test]
    fn localization_cancels() {
        let zx = RingDescriptor::polynomial(&RingDescriptor::integers(), "X").unwrap();
        let l = RingDescriptor::localization(&zx, zx.from_i64(5)).unwrap();
        let five_x = zx.mul(&zx.from_i64(5), &zx.var());
        let a = l.normalize(&Elem::Frac(Box::new(five_x), 1)).unwrap();
        let b = l.normalize(&Elem::Frac(Box::new(zx.var()), 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_takes_constant_term() {
        let f5 = zmod(5);
        let r = RingDescriptor::polynomial(&f5, "X").unwrap();
        let e = r.parse_elem("3X+2").unwrap();
        let h = RingHom::evaluation(&r, &f5, f5.zero()).unwrap();
        assert_eq!(h.apply(&e).unwrap(), Elem::Mod(2));
    }

    #[test]
    fn ideal_examples() {
        let f5 = zmod(5);
        let r = RingDescriptor::polynomial(&f5, "X").unwrap();
        let i = parse_ideal(&r, "(X)").unwrap();
        assert!(ideal_member(&i, &r.parse_elem("3X^2").unwrap()).unwrap());
        let z = RingDescriptor::integers();
        let i5 = parse_ideal(&z, "(5)").unwrap();
        assert!(!ideal_member(&i5, &z.from_i64(7)).unwrap());
        let r25 = RingDescriptor::polynomial(&zmod(25), "X").unwrap();
        let m = parse_ideal(&r25, "(5)").unwrap();
        assert!(ideal_member(&m, &r25.parse_elem("10X+5").unwrap()).unwrap());
    }

    #[test]
    fn unit_lists() {
        assert_eq!(units(&zmod(5)).unwrap(), UnitSet::Finite((1..5).map(Elem::Mod).collect()));
        assert_eq!(units(&zmod(4)).unwrap(), UnitSet::Finite(vec![Elem::Mod(1), Elem::Mod(3)]));
        let l = RingDescriptor::laurent(&zmod(5), "X").unwrap();
        assert!(matches!(units(&l).unwrap(), UnitSet::LaurentMonomials { .. }));
        assert!(units(&RingDescriptor::rationals()).is_err());
    }

    #[test]
    fn descriptor_strings_round_trip() {
        for s in ["Z", "Q", "Zmod:5", "Zmod:5[X]", "Zmod:5[X,X^-1]", "Z[X]@loc:5", "D(Zmod:5[X],(X))", "Zmod:35[X][Y][Z]"] {
            let r = RingDescriptor::parse(s).unwrap();
            assert_eq!(r.to_string(), s);
        }
    }

    #[test]
    fn nilpotent_series_inverse() {
        let r = RingDescriptor::polynomial(&zmod(25), "X").unwrap();
        let u = r.parse_elem("1+5X").unwrap();
        let ui = r.inv(&u).unwrap();
        assert!(r.is_one(&r.mul(&u, &ui)));
        let l = RingDescriptor::laurent(&zmod(5), "X").unwrap();
        let x = l.var();
        assert_eq!(l.render(&l.inv(&x).unwrap()), "X^-1");
        assert!(l.inv(&l.parse_elem("1+X").unwrap()).is_none());
    }
}
