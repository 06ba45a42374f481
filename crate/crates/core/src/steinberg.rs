//! Words in the Steinberg generators `x_α(a)`: constructors for `w_α`, `h_α`,
//! symbols and relative generators, free reduction, collection into ordered
//! unipotent normal forms, weight automorphisms, ring-hom images, and a
//! formal symbol algebra.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::chevalley::{ChevalleyBasis, MicroweightRep};
use crate::ring::{ideal_member, Elem, IdealSpec, Ring, RingDescriptor, RingError, RingHom};
use crate::rootsys::{Root, RootSystem, Weight};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("{0} is not a unit")]
    NonUnit(String),
    #[error("letter x_{root}({coeff}) lies outside the subset")]
    LetterOutsideS { root: Root, coeff: String },
    #[error("{0} is not in the ideal")]
    NotInIdeal(String),
    #[error("word image is not monomial")]
    NotMonomial,
    #[error("unsupported field for symbols: {0}")]
    UnsupportedField(String),
    #[error("word parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// The generator `x_root(coeff)`. Inverse letters are stored as
/// `x_root(-coeff)`, which is how free reduction normalizes them anyway.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub root: Root,
    pub coeff: Elem,
}

/// A word over a fixed ring and root system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StWord {
    pub ring: Ring,
    pub rs: Arc<RootSystem>,
    pub letters: Vec<Letter>,
}

impl StWord {
    pub fn empty(rs: &Arc<RootSystem>, ring: &Ring) -> Self {
        StWord { ring: ring.clone(), rs: rs.clone(), letters: Vec::new() }
    }

    pub fn from_letters(rs: &Arc<RootSystem>, ring: &Ring, letters: Vec<Letter>) -> Self {
        StWord { ring: ring.clone(), rs: rs.clone(), letters }
    }

    /// `x_α(a)`.
    pub fn x(rs: &Arc<RootSystem>, ring: &Ring, root: Root, a: Elem) -> Self {
        let mut w = Self::empty(rs, ring);
        if !a.is_zero() {
            w.letters.push(Letter { root, coeff: a });
        }
        w
    }

    /// `w_α(u) = x_α(u)·x_{−α}(−u⁻¹)·x_α(u)`.
    pub fn w(rs: &Arc<RootSystem>, ring: &Ring, root: Root, u: &Elem) -> Result<Self, WordError> {
        let ui = ring.inv(u).ok_or_else(|| WordError::NonUnit(ring.render(u)))?;
        let letters = vec![
            Letter { root, coeff: u.clone() },
            Letter { root: rs.neg(root), coeff: ring.neg(&ui) },
            Letter { root, coeff: u.clone() },
        ];
        Ok(Self::from_letters(rs, ring, letters))
    }

    /// `h_α(u) = w_α(u)·w_α(−1)`.
    pub fn h(rs: &Arc<RootSystem>, ring: &Ring, root: Root, u: &Elem) -> Result<Self, WordError> {
        let a = Self::w(rs, ring, root, u)?;
        let b = Self::w(rs, ring, root, &ring.from_i64(-1))?;
        Ok(a.concat(&b))
    }

    /// `{u, v} = h_α(uv)·h_α(u)⁻¹·h_α(v)⁻¹` with `α = α_1`.
    pub fn symbol(rs: &Arc<RootSystem>, ring: &Ring, u: &Elem, v: &Elem) -> Result<Self, WordError> {
        let a = rs.simple(1);
        let uv = ring.mul(u, v);
        let huv = Self::h(rs, ring, a, &uv)?;
        let hu = Self::h(rs, ring, a, u)?;
        let hv = Self::h(rs, ring, a, v)?;
        Ok(huv.concat(&hu.inverse()).concat(&hv.inverse()))
    }

    /// `z_α(m, a) = x_{−α}(a)⁻¹·x_α(m)·x_{−α}(a)`, `m ∈ I`.
    pub fn z_gen(rs: &Arc<RootSystem>, ring: &Ring, ideal: &IdealSpec, root: Root, m: &Elem, a: &Elem) -> Result<Self, WordError> {
        if !ideal_member(ideal, m)? {
            return Err(WordError::NotInIdeal(ring.render(m)));
        }
        let na = rs.neg(root);
        let letters = vec![
            Letter { root: na, coeff: ring.neg(a) },
            Letter { root, coeff: m.clone() },
            Letter { root: na, coeff: a.clone() },
        ];
        Ok(Self::from_letters(rs, ring, letters).free_reduce())
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, o: &StWord) -> StWord {
        debug_assert_eq!(self.ring, o.ring);
        let mut letters = self.letters.clone();
        letters.extend(o.letters.iter().cloned());
        StWord { ring: self.ring.clone(), rs: self.rs.clone(), letters }
    }

    pub fn push(&mut self, root: Root, coeff: Elem) {
        if !coeff.is_zero() {
            self.letters.push(Letter { root, coeff });
        }
    }

    pub fn inverse(&self) -> StWord {
        let letters = self
            .letters
            .iter()
            .rev()
            .map(|l| Letter { root: l.root, coeff: self.ring.neg(&l.coeff) })
            .collect();
        StWord { ring: self.ring.clone(), rs: self.rs.clone(), letters }
    }

    /// `^g x = g·x·g⁻¹`.
    pub fn conj_by(&self, g: &StWord) -> StWord {
        g.concat(self).concat(&g.inverse())
    }

    /// `[a, b] = a·b·a⁻¹·b⁻¹`.
    pub fn commutator(a: &StWord, b: &StWord) -> StWord {
        a.concat(b).concat(&a.inverse()).concat(&b.inverse())
    }

    /// Merge adjacent same-root letters and drop zero letters until stable.
    pub fn free_reduce(&self) -> StWord {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for l in &self.letters {
            if l.coeff.is_zero() {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.root == l.root => {
                    let c = self.ring.add(&last.coeff, &l.coeff);
                    if c.is_zero() {
                        out.pop();
                    } else {
                        last.coeff = c;
                    }
                }
                _ => out.push(l.clone()),
            }
        }
        StWord { ring: self.ring.clone(), rs: self.rs.clone(), letters: out }
    }

    /// Letterwise image under a ring homomorphism, freely reduced.
    pub fn apply_hom(&self, h: &RingHom) -> Result<StWord, WordError> {
        if h.source != self.ring {
            return Err(RingError::DescriptorMismatch(format!("word over {} mapped from {}", self.ring, h.source)).into());
        }
        let letters = self
            .letters
            .iter()
            .map(|l| Ok(Letter { root: l.root, coeff: h.apply(&l.coeff)? }))
            .collect::<Result<Vec<_>, RingError>>()?;
        Ok(StWord { ring: h.target.clone(), rs: self.rs.clone(), letters }.free_reduce())
    }

    /// `χ_{ω,u}`: `x_α(a) ↦ x_α(u^{⟨ω,α⟩}·a)`.
    pub fn chi(&self, omega: &Weight, u: &Elem) -> Result<StWord, WordError> {
        let ring = &self.ring;
        let letters = self
            .letters
            .iter()
            .map(|l| {
                let p = ring.pow(u, self.rs.pairing(omega, l.root)).map_err(|_| WordError::NonUnit(ring.render(u)))?;
                Ok(Letter { root: l.root, coeff: ring.mul(&p, &l.coeff) })
            })
            .collect::<Result<Vec<_>, WordError>>()?;
        Ok(StWord { ring: ring.clone(), rs: self.rs.clone(), letters })
    }

    /// Canonical text: `x(a1;3X+2)*x(-amax;1)`.
    pub fn render(&self) -> String {
        if self.letters.is_empty() {
            return "1".into();
        }
        self.letters
            .iter()
            .map(|l| format!("x({};{})", root_name(&self.rs, l.root), self.ring.render(&l.coeff)))
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Parse the word grammar: factors `x(<root>;<elem>)`, `w(<root>;<unit>)`,
    /// `h(<root>;<unit>)`, each optionally followed by `^-1`, joined by `*`.
    /// Roots are `a<i>`, `-a<i>`, `amax`, `-amax` or `r<index>`.
    pub fn parse(rs: &Arc<RootSystem>, ring: &Ring, s: &str) -> Result<StWord, WordError> {
        let mut out = StWord::empty(rs, ring);
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(out);
        }
        for factor in split_top(s, '*') {
            let factor = factor.trim();
            let (body, inv) = match factor.strip_suffix("^-1") {
                Some(b) => (b, true),
                None => (factor, false),
            };
            let kind = body.chars().next().ok_or_else(|| WordError::Parse("empty factor".into()))?;
            let inner = body[1..]
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| WordError::Parse(format!("malformed factor {factor:?}")))?;
            let (rname, coeff) = inner.split_once(';').ok_or_else(|| WordError::Parse(format!("missing ';' in {factor:?}")))?;
            let root = parse_root(rs, rname.trim())?;
            let c = ring.parse_elem(coeff)?;
            let w = match kind {
                'x' => StWord::x(rs, ring, root, c),
                'w' => StWord::w(rs, ring, root, &c)?,
                'h' => StWord::h(rs, ring, root, &c)?,
                _ => return Err(WordError::Parse(format!("unknown generator {kind}"))),
            };
            out = out.concat(&if inv { w.inverse() } else { w });
        }
        Ok(out)
    }
}

impl fmt::Display for StWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Name of a root: `a<i>` for simple roots, `amax` for the highest root,
/// their negatives with a leading `-`, otherwise `r<index>`.
pub fn root_name(rs: &RootSystem, a: Root) -> String {
    let (sign, p) = if rs.is_positive(a) { ("", a) } else { ("-", rs.neg(a)) };
    if p < rs.rank {
        format!("{sign}a{}", p + 1)
    } else if p == rs.highest_root() {
        format!("{sign}amax")
    } else {
        format!("r{a}")
    }
}

pub fn parse_root(rs: &RootSystem, s: &str) -> Result<Root, WordError> {
    let bad = || WordError::Parse(format!("unknown root {s:?}"));
    if let Some(i) = s.strip_prefix('r') {
        let i: usize = i.parse().map_err(|_| bad())?;
        return (i < rs.num_roots()).then_some(i).ok_or_else(bad);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let p = if body == "amax" {
        rs.highest_root()
    } else {
        let i: usize = body.strip_prefix('a').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if !(1..=rs.rank).contains(&i) {
            return Err(bad());
        }
        rs.simple(i)
    };
    Ok(if neg { rs.neg(p) } else { p })
}

/// Collect a word whose letters all lie in the special, closed set `subset`
/// into the ordered product `∏ x_α(c_α)` (ascending height, ties by index).
pub fn unipotent_normal_form(basis: &ChevalleyBasis, word: &StWord, subset: &[Root]) -> Result<Vec<(Root, Elem)>, WordError> {
    let rs = &word.rs;
    let ring = &word.ring;
    let mut in_s = vec![false; rs.num_roots()];
    for &a in subset {
        in_s[a] = true;
    }
    for l in &word.letters {
        if !in_s[l.root] {
            return Err(WordError::LetterOutsideS { root: l.root, coeff: ring.render(&l.coeff) });
        }
    }
    // Bubble sort with commutator insertion:
    // x_γ(c)·x_α(a) = x_α(a)·x_γ(c)·x_{γ+α}(N_{γ,α}·c·a) for α ≺ γ.
    let mut seq: Vec<(Root, Elem)> = word.letters.iter().map(|l| (l.root, l.coeff.clone())).collect();
    let key = |a: Root| rs.order_key(a);
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < seq.len() {
            let (g, a) = (seq[i].0, seq[i + 1].0);
            if seq[i].1.is_zero() {
                seq.remove(i);
                changed = true;
                continue;
            }
            if g == a {
                let c = ring.add(&seq[i].1, &seq[i + 1].1);
                seq[i].1 = c;
                seq.remove(i + 1);
                changed = true;
                continue;
            }
            if key(a) < key(g) {
                let (cg, ca) = (seq[i].1.clone(), seq[i + 1].1.clone());
                seq[i] = (a, ca.clone());
                seq[i + 1] = (g, cg.clone());
                if let Some(s) = rs.sum(g, a) {
                    if !in_s[s] {
                        return Err(WordError::LetterOutsideS { root: s, coeff: "commutator".into() });
                    }
                    let n = basis.n(g, a);
                    let c = ring.mul(&ring.mul(&cg, &ca), &ring.from_i64(n));
                    seq.insert(i + 2, (s, c));
                }
                changed = true;
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    seq.retain(|(_, c)| !c.is_zero());
    Ok(seq)
}

/// Word for an ordered product of root elements.
pub fn word_from_coords(rs: &Arc<RootSystem>, ring: &Ring, coords: &[(Root, Elem)]) -> StWord {
    let mut w = StWord::empty(rs, ring);
    for (a, c) in coords {
        w.push(*a, c.clone());
    }
    w
}

/// Relative symbol `{(a;a), (1;1+m)}` over the double ring `D(R, MR)`.
pub fn relative_symbol(rs: &Arc<RootSystem>, double: &Ring, a: &Elem, m: &Elem) -> Result<StWord, WordError> {
    let (base, ideal) = match double.as_ref() {
        RingDescriptor::DoubleRing(b, i) => (b, i),
        _ => return Err(RingError::DescriptorMismatch(format!("{double} is not a double ring")).into()),
    };
    if !ideal_member(ideal, m)? {
        return Err(WordError::NotInIdeal(base.render(m)));
    }
    if !base.is_unit(a) {
        return Err(WordError::NonUnit(base.render(a)));
    }
    let first = Elem::Pair(Box::new(a.clone()), Box::new(a.clone()));
    let one_m = base.add(&base.one(), m);
    let second = Elem::Pair(Box::new(base.one()), Box::new(one_m));
    StWord::symbol(rs, double, &first, &second)
}

/// Weyl group element recorded as the permutation it induces on the
/// representation's weights, plus a reduced word in simple reflections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    pub perm: Vec<usize>,
    /// `w = s_{word[0]}·s_{word[1]}⋯` (1-based simple indices).
    pub word: Vec<usize>,
}

impl WeylElement {
    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }
}

/// Image of a product of `w_α(u)^{±1}` in the Weyl group, read from the line
/// permutation of `ρ` over the residue field `kappa`.
pub fn weyl_image(rep: &MicroweightRep, word: &StWord, to_residue: &RingHom) -> Result<WeylElement, WordError> {
    let w = word.apply_hom(to_residue)?;
    let m = rep.eval(&w);
    let perm = m.monomial_pattern().ok_or(WordError::NotMonomial)?;
    Ok(WeylElement { word: rep.weyl_word_from_perm(&perm), perm })
}

/// A formal product of symbols `{u, v}^{±1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolExpr {
    pub ring: Ring,
    pub factors: Vec<(Elem, Elem, i64)>,
}

impl SymbolExpr {
    pub fn new(ring: &Ring) -> Self {
        SymbolExpr { ring: ring.clone(), factors: Vec::new() }
    }

    pub fn symbol(ring: &Ring, u: Elem, v: Elem) -> Self {
        SymbolExpr { ring: ring.clone(), factors: vec![(u, v, 1)] }
    }

    pub fn mul(&self, o: &SymbolExpr) -> SymbolExpr {
        let mut f = self.factors.clone();
        f.extend(o.factors.iter().cloned());
        SymbolExpr { ring: self.ring.clone(), factors: f }
    }

    pub fn inverse(&self) -> SymbolExpr {
        SymbolExpr { ring: self.ring.clone(), factors: self.factors.iter().map(|(u, v, e)| (u.clone(), v.clone(), -e)).collect() }
    }
}

/// Canonical form of a symbol product. Over a prime field every symbol is
/// trivial. Over `ℚ` the model is the tame-symbol vector: the sign component
/// at the real place and the tame symbol `∂_p` at each odd prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymbolNormalForm {
    Trivial,
    /// `(real sign component ∈ {0,1}, {p ↦ residue of ∂_p})`, trivial
    /// components omitted.
    Rational { real: u8, tame: BTreeMap<u64, u64> },
}

pub fn symbol_normal_form(s: &SymbolExpr) -> Result<SymbolNormalForm, WordError> {
    let ring = &s.ring;
    for (u, v, _) in &s.factors {
        if !ring.is_unit(u) || !ring.is_unit(v) {
            return Err(WordError::NonUnit(format!("{{{}, {}}}", ring.render(u), ring.render(v))));
        }
    }
    match ring.as_ref() {
        RingDescriptor::IntegersMod(p) if crate::ring::is_prime(*p) => Ok(SymbolNormalForm::Trivial),
        RingDescriptor::Rationals => {
            let mut real = 0u8;
            let mut tame: BTreeMap<u64, u64> = BTreeMap::new();
            for (u, v, e) in &s.factors {
                let (Elem::Rat(u), Elem::Rat(v)) = (u, v) else { unreachable!() };
                if u.is_negative() && v.is_negative() && e.rem_euclid(2) == 1 {
                    real ^= 1;
                }
                let mut primes: Vec<u64> = Vec::new();
                for q in [u.numer(), u.denom(), v.numer(), v.denom()] {
                    let q = q.abs().to_u64().ok_or_else(|| WordError::UnsupportedField("entries too large".into()))?;
                    primes.extend(crate::ring::prime_factors(q));
                }
                primes.sort_unstable();
                primes.dedup();
                for p in primes.into_iter().filter(|&p| p != 2) {
                    let t = tame_symbol(u, v, p);
                    let slot = tame.entry(p).or_insert(1);
                    let te = if *e >= 0 {
                        pow_mod(t, *e as u64, p)
                    } else {
                        pow_mod(crate::ring::inv_mod(t, p).unwrap(), e.unsigned_abs(), p)
                    };
                    *slot = slot.wrapping_mul(te) % p;
                }
            }
            tame.retain(|_, r| *r != 1);
            if real == 0 && tame.is_empty() {
                Ok(SymbolNormalForm::Trivial)
            } else {
                Ok(SymbolNormalForm::Rational { real, tame })
            }
        }
        _ => Err(WordError::UnsupportedField(ring.to_string())),
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    r
}

fn valuation(q: &BigRational, p: u64) -> i64 {
    let pb = BigInt::from(p);
    let count = |n: &BigInt| {
        let mut n = n.abs();
        let mut c = 0;
        while !n.is_zero() && (&n % &pb).is_zero() {
            n /= &pb;
            c += 1;
        }
        c
    };
    count(q.numer()) - count(q.denom())
}

/// `∂_p{u, v} = (−1)^{ab}·u^b / v^a mod p` with `a = v_p(u)`, `b = v_p(v)`.
fn tame_symbol(u: &BigRational, v: &BigRational, p: u64) -> u64 {
    let (a, b) = (valuation(u, p), valuation(v, p));
    let pb = BigRational::from_integer(BigInt::from(p));
    let pow = |x: &BigRational, n: i64| -> BigRational {
        if n >= 0 {
            num_traits::pow(x.clone(), n as usize)
        } else {
            num_traits::pow(x.recip(), n.unsigned_abs() as usize)
        }
    };
    // Unit parts u' = u / p^a, v' = v / p^b.
    let up = u / pow(&pb, a);
    let vp = v / pow(&pb, b);
    let mut val = pow(&up, b) / pow(&vp, a);
    if (a * b).rem_euclid(2) == 1 {
        val = -val;
    }
    let m = BigInt::from(p);
    let num = val.numer().mod_floor(&m).to_u64().unwrap();
    let den = val.denom().mod_floor(&m).to_u64().unwrap();
    ((num as u128 * crate::ring::inv_mod(den, p).unwrap() as u128) % p as u128) as u64
}
