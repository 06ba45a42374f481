//! The linear case `St(n, R)`: canonical decompositions, the elements
//! `x(v, w)`, the Tulenbaev elements `X^d(u, v)` and `Y^d(v, u)`, the
//! `σ(±ϖ₁)` images of the row/column generators `F(u, v)`, `S(v, u)`, Weyl
//! transport of `σ`, and the patching identity for `h(X, Y, Z)`.
//!
//! Indices are 0-based: `x_ij(a)` has matrix `e + a·e_ij` in the standard
//! representation with basis `ε_1, …, ε_n`.

use std::sync::Arc;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chevalley::{ChevError, GroupMatrix, MicroweightRep};
use crate::ring::{embed, retract, Elem, Ring, RingDescriptor, RingError, RingHom};
use crate::rootsys::{Root, RootError, RootSystem, RootType, Weight};
use crate::steinberg::{root_name, Letter, StWord, WordError};
use crate::verify::{
    compare_matrices, default_rep, oracle_equal, sample_elem, CaseRecord, OracleVerdict, SuiteOutcome, SuiteParams, Verdict, VerifyError,
};

#[derive(Debug, Error)]
pub enum TulenbaevError {
    #[error("vectors are not orthogonal")]
    NotOrthogonal,
    #[error("neither vector has a zero entry")]
    NoZeroEntry,
    #[error("recipe {0:?} is not admissible for these vectors")]
    BadRecipe(Recipe),
    #[error("witness w does not satisfy wᵗu = 1")]
    NotUnimodular,
    #[error("inadmissible input: {0}")]
    Inadmissible(String),
    #[error("base ring {0} is not local")]
    NotLocal(String),
    #[error("letter {0} does not lie in N for this weight")]
    NotInN(String),
    #[error("{0} and {1} are not coprime")]
    NotCoprime(i64, i64),
    #[error("vector of length {0} where n = {1}")]
    Length(usize, usize),
    #[error("n = {0}; the constructions need n ≥ 4")]
    TooSmall(usize),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Chev(#[from] ChevError),
    #[error(transparent)]
    Word(#[from] WordError),
}

type Result<T> = std::result::Result<T, TulenbaevError>;

/// `A_{n−1}` with its standard representation and the signs that make
/// `x_ij(a)` act as `e + a·e_ij`.
pub struct Linear {
    pub n: usize,
    pub rs: Arc<RootSystem>,
    pub rep: Arc<MicroweightRep>,
    /// `roots[i][j] = (ε_i − ε_j, s)` with `e_{ε_i−ε_j} v_j = s·v_i`.
    roots: Vec<Vec<(Root, i64)>>,
}

impl Linear {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(TulenbaevError::TooSmall(n));
        }
        let rs = RootSystem::build(RootType::A, n - 1)?;
        let rep = MicroweightRep::new(&rs, 1)?;
        let mut roots = vec![vec![(0, 0); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (lo, hi) = (i.min(j), i.max(j));
                let coeffs: Vec<i64> = (0..n - 1).map(|l| i64::from(lo <= l && l < hi)).collect();
                let pos = rs.find(&coeffs).expect("ε_i − ε_j is a root");
                let root = if i < j { pos } else { rs.neg(pos) };
                let &(_, _, s) = rep.action[root].iter().find(|(src, dst, _)| *src == j && *dst == i).expect("standard representation");
                roots[i][j] = (root, s);
            }
        }
        Ok(Linear { n, rs, rep, roots })
    }

    pub fn root(&self, i: usize, j: usize) -> Root {
        self.roots[i][j].0
    }

    pub fn push_x(&self, w: &mut StWord, i: usize, j: usize, a: &Elem) {
        let (root, s) = self.roots[i][j];
        w.push(root, if s == 1 { a.clone() } else { w.ring.neg(a) });
    }

    pub fn x(&self, ring: &Ring, i: usize, j: usize, a: &Elem) -> StWord {
        let mut w = StWord::empty(&self.rs, ring);
        self.push_x(&mut w, i, j, a);
        w
    }

    pub fn eval(&self, w: &StWord) -> GroupMatrix {
        self.rep.eval(w)
    }

    fn check_len(&self, v: &[Elem]) -> Result<()> {
        if v.len() != self.n {
            return Err(TulenbaevError::Length(v.len(), self.n));
        }
        Ok(())
    }
}

pub fn dot(ring: &Ring, a: &[Elem], b: &[Elem]) -> Elem {
    a.iter().zip(b).fold(ring.zero(), |acc, (x, y)| ring.mul_add(x, y, &acc))
}

pub fn vadd(ring: &Ring, a: &[Elem], b: &[Elem]) -> Vec<Elem> {
    a.iter().zip(b).map(|(x, y)| ring.add(x, y)).collect()
}

pub fn vscale(ring: &Ring, v: &[Elem], c: &Elem) -> Vec<Elem> {
    v.iter().map(|x| ring.mul(x, c)).collect()
}

pub fn unit_vec(ring: &Ring, n: usize, i: usize) -> Vec<Elem> {
    (0..n).map(|k| if k == i { ring.one() } else { ring.zero() }).collect()
}

pub fn mat_vec(m: &GroupMatrix, v: &[Elem]) -> Vec<Elem> {
    let ring = &m.ring;
    (0..m.n).map(|r| (0..m.n).fold(ring.zero(), |acc, c| ring.mul_add(m.get(r, c), &v[c], &acc))).collect()
}

pub fn transpose(m: &GroupMatrix) -> GroupMatrix {
    let mut t = m.clone();
    for r in 0..m.n {
        for c in 0..m.n {
            t.set(r, c, m.get(c, r).clone());
        }
    }
    t
}

/// `g* = (gᵗ)⁻¹` for the image of an elementary word.
pub fn dual(lin: &Linear, w: &StWord) -> GroupMatrix {
    transpose(&lin.eval(&w.inverse()))
}

/// `e + a·bᵗ`.
pub fn transvection(ring: &Ring, a: &[Elem], b: &[Elem]) -> GroupMatrix {
    let n = a.len();
    let mut m = GroupMatrix::identity(ring, n);
    for r in 0..n {
        for c in 0..n {
            let x = ring.mul(&a[r], &b[c]);
            if !x.is_zero() {
                m.set(r, c, ring.add(m.get(r, c), &x));
            }
        }
    }
    m
}

fn render_vec(ring: &Ring, v: &[Elem]) -> String {
    format!("({})", v.iter().map(|x| ring.render(x)).collect::<Vec<_>>().join(","))
}

/// `u_ij = e_i·u_j − e_j·u_i`.
pub fn u_ij(ring: &Ring, u: &[Elem], i: usize, j: usize) -> Vec<Elem> {
    let mut out = vec![ring.zero(); u.len()];
    out[i] = u[j].clone();
    out[j] = ring.neg(&u[i]);
    out
}

/// Coefficients `c_ij(v, w) = v_i w_j − v_j w_i`, `i < j`, of the canonical
/// decomposition `(wᵗu)·v = Σ u_ij·c_ij`; zero coefficients are omitted.
pub fn canonical_decomposition(ring: &Ring, u: &[Elem], v: &[Elem], w: &[Elem]) -> Result<Vec<(usize, usize, Elem)>> {
    if !dot(ring, u, v).is_zero() {
        return Err(TulenbaevError::NotOrthogonal);
    }
    let n = u.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let c = ring.sub(&ring.mul(&v[i], &w[j]), &ring.mul(&v[j], &w[i]));
            if !c.is_zero() {
                out.push((i, j, c));
            }
        }
    }
    let mut sum = vec![ring.zero(); n];
    for (i, j, c) in &out {
        sum = vadd(ring, &sum, &vscale(ring, &u_ij(ring, u, *i, *j), c));
    }
    assert_eq!(sum, vscale(ring, v, &dot(ring, w, u)), "canonical decomposition identity");
    Ok(out)
}

/// Which zero entry the `x(v, w)` recipe pivots on: `Column(k)` needs
/// `w_k = 0`, `Row(k)` needs `v_k = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recipe {
    Column(usize),
    Row(usize),
}

/// Admissible recipes, preferred first.
pub fn recipes(v: &[Elem], w: &[Elem]) -> Vec<Recipe> {
    let cols = (0..w.len()).filter(|&k| w[k].is_zero()).map(Recipe::Column);
    let rows = (0..v.len()).filter(|&k| v[k].is_zero()).map(Recipe::Row);
    cols.chain(rows).collect()
}

/// `x(v, w)` with `π(x(v, w)) = e + v·wᵗ`, using the first admissible recipe.
pub fn x_small(lin: &Linear, ring: &Ring, v: &[Elem], w: &[Elem]) -> Result<StWord> {
    let r = *recipes(v, w).first().ok_or(TulenbaevError::NoZeroEntry)?;
    x_small_with(lin, ring, v, w, r)
}

/// `[∏_{i≠k} x_ik(v_i), ∏_{j≠k} x_kj(w_j)]` followed by `∏_{j≠k} x_kj(v_k w_j)`
/// when `w_k = 0`, or by `∏_{i≠k} x_ik(w_k v_i)` when `v_k = 0`.
pub fn x_small_with(lin: &Linear, ring: &Ring, v: &[Elem], w: &[Elem], recipe: Recipe) -> Result<StWord> {
    lin.check_len(v)?;
    lin.check_len(w)?;
    if !dot(ring, v, w).is_zero() {
        return Err(TulenbaevError::NotOrthogonal);
    }
    let k = match recipe {
        Recipe::Column(k) if w[k].is_zero() => k,
        Recipe::Row(k) if v[k].is_zero() => k,
        _ => return Err(TulenbaevError::BadRecipe(recipe)),
    };
    let mut a = StWord::empty(&lin.rs, ring);
    let mut b = StWord::empty(&lin.rs, ring);
    let mut c = StWord::empty(&lin.rs, ring);
    for i in (0..lin.n).filter(|&i| i != k) {
        lin.push_x(&mut a, i, k, &v[i]);
        lin.push_x(&mut b, k, i, &w[i]);
        match recipe {
            Recipe::Column(_) => lin.push_x(&mut c, k, i, &ring.mul(&v[k], &w[i])),
            Recipe::Row(_) => lin.push_x(&mut c, i, k, &ring.mul(&w[k], &v[i])),
        }
    }
    Ok(StWord::commutator(&a, &b).concat(&c).free_reduce())
}

/// `R = A[X] ⊂ S = A[X, X⁻¹]` with `I = X·A[X]`.
#[derive(Clone, Debug)]
pub struct Tower {
    pub base: Ring,
    pub r: Ring,
    pub s: Ring,
}

impl Tower {
    pub fn over(base: &Ring) -> Result<Self> {
        Ok(Tower { base: base.clone(), r: RingDescriptor::polynomial(base, "X")?, s: RingDescriptor::laurent(base, "X")? })
    }

    pub fn up(&self, e: &Elem) -> Elem {
        embed(&self.r, &self.s, e).expect("A[X] embeds into A[X, X⁻¹]")
    }

    pub fn down(&self, e: &Elem) -> Option<Elem> {
        retract(&self.s, &self.r, e)
    }

    pub fn x_pow(&self, k: i64) -> Elem {
        self.s.monomial(self.base.one(), k)
    }

    pub fn in_ideal(&self, e: &Elem) -> bool {
        e.terms().iter().all(|(k, _)| *k >= 1)
    }

    /// `d·v` over `S`, retracted to `R`.
    fn scale_down(&self, d: &[Elem], v: &[Elem], inverse: bool, what: &str) -> Result<Vec<Elem>> {
        d.iter()
            .zip(v)
            .map(|(di, vi)| {
                let di = if inverse { self.s.inv(di).expect("diagonal of units") } else { di.clone() };
                let x = self.s.mul(&di, &self.up(vi));
                self.down(&x).ok_or_else(|| TulenbaevError::Inadmissible(format!("{what} leaves A[X]")))
            })
            .collect()
    }

    /// `diag(X, 1, …, 1)`.
    pub fn d1(&self, n: usize) -> Vec<Elem> {
        (0..n).map(|i| if i == 0 { self.x_pow(1) } else { self.s.one() }).collect()
    }

    pub fn diag_mul(&self, a: &[Elem], b: &[Elem]) -> Vec<Elem> {
        a.iter().zip(b).map(|(x, y)| self.s.mul(x, y)).collect()
    }

    pub fn diag_inv(&self, a: &[Elem]) -> Vec<Elem> {
        a.iter().map(|x| self.s.inv(x).expect("diagonal of units")).collect()
    }

    pub fn diag_scalar(&self, a: &[Elem], k: i64) -> Vec<Elem> {
        a.iter().map(|x| self.s.mul(x, &self.x_pow(k))).collect()
    }

    pub fn identity_diag(&self, n: usize) -> Vec<Elem> {
        vec![self.s.one(); n]
    }

    /// `d⁻¹·(e + a·bᵗ)·d` over `S`.
    pub fn conjugated_transvection(&self, d: &[Elem], a: &[Elem], b: &[Elem]) -> GroupMatrix {
        let s = &self.s;
        let a: Vec<Elem> = a.iter().map(|x| self.up(x)).collect();
        let b: Vec<Elem> = b.iter().map(|x| self.up(x)).collect();
        let t = transvection(s, &a, &b);
        let mut out = t.clone();
        for r in 0..t.n {
            for c in 0..t.n {
                let x = t.get(r, c);
                if !x.is_zero() {
                    out.set(r, c, s.mul(&s.mul(&s.inv(&d[r]).unwrap(), x), &d[c]));
                }
            }
        }
        out
    }

    /// Image of a word over `R` as a matrix over `S`.
    pub fn eval_up(&self, lin: &Linear, w: &StWord) -> GroupMatrix {
        let inc = RingHom::inclusion(&self.r, &self.s).expect("inclusion");
        lin.eval(w).map(&inc).expect("inclusion")
    }
}

/// A unimodular column with the witness `w`, `wᵗu = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UmVec {
    pub u: Vec<Elem>,
    pub witness: Vec<Elem>,
}

impl UmVec {
    /// `u = m·e_1` with witness `m*·e_1`.
    pub fn from_elementary(lin: &Linear, m: &StWord) -> Self {
        let ring = &m.ring;
        let e1 = unit_vec(ring, lin.n, 0);
        UmVec { u: mat_vec(&lin.eval(m), &e1), witness: mat_vec(&dual(lin, m), &e1) }
    }

    fn check(&self, ring: &Ring) -> Result<()> {
        if !ring.is_one(&dot(ring, &self.witness, &self.u)) {
            return Err(TulenbaevError::NotUnimodular);
        }
        Ok(())
    }
}

/// Vectors `u_ij·c_ij(v, w)` of the canonical decomposition of `v`.
pub fn canonical_parts(ring: &Ring, um: &UmVec, v: &[Elem]) -> Result<Vec<Vec<Elem>>> {
    Ok(canonical_decomposition(ring, &um.u, v, &um.witness)?
        .into_iter()
        .map(|(i, j, c)| vscale(ring, &u_ij(ring, &um.u, i, j), &c))
        .collect())
}

fn check_parts(tower: &Tower, u: &[Elem], parts: &[Vec<Elem>]) -> Result<()> {
    for p in parts {
        if !dot(&tower.r, u, p).is_zero() {
            return Err(TulenbaevError::NotOrthogonal);
        }
        if p.iter().filter(|x| x.is_zero()).count() < 2 {
            return Err(TulenbaevError::Inadmissible("summand has fewer than two zero entries".into()));
        }
        if !p.iter().all(|x| tower.in_ideal(x)) {
            return Err(TulenbaevError::Inadmissible("summand is not in Iⁿ".into()));
        }
    }
    Ok(())
}

/// `∏_r x(d⁻¹u, d·v^r)` for a decomposition `v = Σ v^r` into `D(u) ∩ Iⁿ`.
pub fn x_d_parts(lin: &Linear, tower: &Tower, u: &[Elem], parts: &[Vec<Elem>], d: &[Elem]) -> Result<StWord> {
    check_parts(tower, u, parts)?;
    let left = tower.scale_down(d, u, true, "d⁻¹u")?;
    let mut out = StWord::empty(&lin.rs, &tower.r);
    for p in parts {
        let right = tower.scale_down(d, p, false, "d·v")?;
        out = out.concat(&x_small(lin, &tower.r, &left, &right)?);
    }
    Ok(out.free_reduce())
}

/// `∏_r x(d⁻¹·v^r, d·u)`.
pub fn y_d_parts(lin: &Linear, tower: &Tower, u: &[Elem], parts: &[Vec<Elem>], d: &[Elem]) -> Result<StWord> {
    check_parts(tower, u, parts)?;
    let right = tower.scale_down(d, u, false, "d·u")?;
    let mut out = StWord::empty(&lin.rs, &tower.r);
    for p in parts {
        let left = tower.scale_down(d, p, true, "d⁻¹v")?;
        out = out.concat(&x_small(lin, &tower.r, &left, &right)?);
    }
    Ok(out.free_reduce())
}

fn check_xy_inputs(lin: &Linear, tower: &Tower, um: &UmVec, v: &[Elem]) -> Result<()> {
    lin.check_len(&um.u)?;
    lin.check_len(v)?;
    um.check(&tower.r)?;
    if !v.iter().all(|x| tower.in_ideal(x)) {
        return Err(TulenbaevError::Inadmissible("v is not in Iⁿ".into()));
    }
    Ok(())
}

/// `X^d(u, v)` over the canonical decomposition given by the witness.
pub fn x_d(lin: &Linear, tower: &Tower, um: &UmVec, v: &[Elem], d: &[Elem]) -> Result<StWord> {
    check_xy_inputs(lin, tower, um, v)?;
    x_d_parts(lin, tower, &um.u, &canonical_parts(&tower.r, um, v)?, d)
}

/// `Y^d(v, u)` over the canonical decomposition given by the witness.
pub fn y_d(lin: &Linear, tower: &Tower, v: &[Elem], um: &UmVec, d: &[Elem]) -> Result<StWord> {
    check_xy_inputs(lin, tower, um, v)?;
    y_d_parts(lin, tower, &um.u, &canonical_parts(&tower.r, um, v)?, d)
}

/// Generators of the relative group `St(n, A[X], XA[X])`.
#[derive(Clone, Debug)]
pub enum Generator {
    F { um: UmVec, v: Vec<Elem> },
    S { v: Vec<Elem>, um: UmVec },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `σ(±ϖ_1)` on a generator: `F ↦ X^{d₁⁻¹}`, `S ↦ Y^{d₁⁻¹X}` for `+`;
/// `F ↦ X^{d₁X⁻¹}`, `S ↦ Y^{d₁}` for `−`, with `d₁ = diag(X, 1, …, 1)`.
pub fn sigma_pi1(lin: &Linear, tower: &Tower, gen: &Generator, sign: Sign) -> Result<StWord> {
    if tower.base.local_residue().is_none() {
        return Err(TulenbaevError::NotLocal(tower.base.to_string()));
    }
    let d1 = tower.d1(lin.n);
    let d1inv = tower.diag_inv(&d1);
    match (gen, sign) {
        (Generator::F { um, v }, Sign::Plus) => x_d(lin, tower, um, v, &d1inv),
        (Generator::S { v, um }, Sign::Plus) => y_d(lin, tower, v, um, &tower.diag_scalar(&d1inv, 1)),
        (Generator::F { um, v }, Sign::Minus) => x_d(lin, tower, um, v, &tower.diag_scalar(&d1, -1)),
        (Generator::S { v, um }, Sign::Minus) => y_d(lin, tower, v, um, &d1),
    }
}

/// The generator's image in `St(n, A[X])`: `X^e(u, v)` or `Y^e(v, u)`.
pub fn generator_image(lin: &Linear, tower: &Tower, gen: &Generator) -> Result<StWord> {
    let e = tower.identity_diag(lin.n);
    match gen {
        Generator::F { um, v } => x_d(lin, tower, um, v, &e),
        Generator::S { v, um } => y_d(lin, tower, v, um, &e),
    }
}

/// Letterwise `σ(ω)`: `x_α(f) ↦ x_α(X^{⟨ω,α⟩}·f)`; fails when a letter is
/// not divisible enough for the result to stay in `A[X]`.
pub fn sigma_letterwise(tower: &Tower, w: &StWord, omega: &Weight) -> Result<StWord> {
    let mut letters = Vec::with_capacity(w.letters.len());
    for l in &w.letters {
        let e = w.rs.pairing(omega, l.root);
        let c = tower.s.mul(&tower.x_pow(e), &tower.up(&l.coeff));
        let c = tower
            .down(&c)
            .ok_or_else(|| TulenbaevError::NotInN(format!("x({};{})", root_name(&w.rs, l.root), tower.r.render(&l.coeff))))?;
        letters.push(Letter { root: l.root, coeff: c });
    }
    Ok(StWord::from_letters(&w.rs, &tower.r, letters))
}

/// Transport of `σ(ω)` along a Weyl word: `w·σ(ω)(w⁻¹·x_β(f)·w)·w⁻¹` for
/// `w = ∏ w_{α_i}(u_i)`, computed on the single conjugated letter with the
/// basis signs `η`. Returns the resulting letter over `A[X]`.
pub fn sigma_transport(rep: &MicroweightRep, tower: &Tower, ws: &[(Root, Elem)], omega: &Weight, beta: Root, f: &Elem) -> Result<(Root, Elem)> {
    let rs = &rep.rs;
    let s = &tower.s;
    let mut gamma = beta;
    let mut c = tower.up(f);
    // ^{w_α(u)} x_γ(c) = x_{s_α γ}(η_{α,γ}·u^{−⟨γ,α⟩}·c), and w_α(u)⁻¹ = w_α(−u).
    let step = |alpha: Root, u: &Elem, gamma: Root, c: &Elem| -> (Root, Elem) {
        let eta = s.from_i64(rep.basis.eta(alpha, gamma));
        let p = s.pow(&embed(&tower.base, s, u).unwrap(), -rs.root_pairing(gamma, alpha)).expect("unit");
        (rs.reflect_root(alpha, gamma), s.mul(&eta, &s.mul(&p, c)))
    };
    for (alpha, u) in ws {
        (gamma, c) = step(*alpha, &tower.base.neg(u), gamma, &c);
    }
    c = s.mul(&tower.x_pow(rs.pairing(omega, gamma)), &c);
    if tower.down(&c).is_none() {
        return Err(TulenbaevError::NotInN(format!("x({};{})", root_name(rs, beta), tower.r.render(f))));
    }
    for (alpha, u) in ws.iter().rev() {
        (gamma, c) = step(*alpha, u, gamma, &c);
    }
    debug_assert_eq!(gamma, beta);
    Ok((gamma, tower.down(&c).expect("checked above")))
}

/// `w̄·ω` for `w = w_{α_1}(u_1)⋯w_{α_m}(u_m)`.
pub fn weyl_act(rs: &RootSystem, ws: &[(Root, Elem)], omega: &Weight) -> Weight {
    ws.iter().rev().fold(omega.clone(), |acc, (a, _)| rs.reflect_weight(*a, &acc))
}

/// `h` with `X ↦ aⁿ·X`.
pub fn dilation_substitute(h: &StWord, a: &Elem, n: u32) -> Result<StWord> {
    let r = &h.ring;
    let base = r.base().ok_or_else(|| TulenbaevError::Inadmissible(format!("{r} has no variable")))?;
    let an = base.pow_nat(a, n as u64);
    let hom = RingHom::evaluation(r, r, r.monomial(an, 1))?;
    Ok(h.apply_hom(&hom)?)
}

/// Smallest `n ≤ max_n` for which the dilated word satisfies `pred`.
pub fn dilation_search(h: &StWord, a: &Elem, max_n: u32, pred: impl Fn(&StWord) -> bool) -> Result<Option<(u32, StWord)>> {
    for n in 0..=max_n {
        let w = dilation_substitute(h, a, n)?;
        if pred(&w) {
            return Ok(Some((n, w)));
        }
    }
    Ok(None)
}

/// Both sides of `g(X) = h(X, 1, −s·bⁿ)·h(X, r·aⁿ, −r·aⁿ)` where
/// `h(X, Y, Z) = g(YX)·g((Y+Z)X)⁻¹` and `r·aⁿ + s·bⁿ = 1`. `h` is built over
/// `A[X][Y][Z]` and specialized by evaluation.
pub fn patch_identity(g: &StWord, a: i64, b: i64, n: u32) -> Result<(StWord, StWord)> {
    let r = g.ring.clone();
    let base = r.base().ok_or_else(|| TulenbaevError::Inadmissible(format!("{r} has no variable")))?.clone();
    let (an, bn) = (a.pow(n), b.pow(n));
    let eg = an.extended_gcd(&bn);
    if eg.gcd != 1 {
        return Err(TulenbaevError::NotCoprime(an, bn));
    }
    let (rc, sc) = (eg.x, eg.y);
    let ry = RingDescriptor::polynomial(&r, "Y")?;
    let t = RingDescriptor::polynomial(&ry, "Z")?;
    let x = t.var_named("X").expect("X in the tower");
    let y = t.var_named("Y").expect("Y in the tower");
    let z = t.var();
    let first = g.apply_hom(&RingHom::evaluation(&r, &t, t.mul(&y, &x))?)?;
    let second = g.apply_hom(&RingHom::evaluation(&r, &t, t.mul(&t.add(&y, &z), &x))?)?;
    let h = first.concat(&second.inverse());
    let specialize = |yv: i64, zv: i64| -> Result<StWord> {
        let ez = RingHom::evaluation(&t, &ry, ry.from_i64(zv))?;
        let ey = RingHom::evaluation(&ry, &r, r.from_i64(yv))?;
        Ok(h.apply_hom(&ez)?.apply_hom(&ey)?)
    };
    let _ = &base;
    let rhs = specialize(1, -sc * bn)?.concat(&specialize(rc * an, -rc * an)?);
    Ok((g.clone(), rhs))
}

// Sampling.

fn case_rng(seed: u64, salt: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt.wrapping_mul(1_000_003)).wrapping_add(i as u64))
}

fn salt(id: &str) -> u64 {
    id.bytes().fold(1469598103934665603u64, |h, b| (h ^ b as u64).wrapping_mul(1099511628211))
}

fn rand_vec<R: Rng>(ring: &Ring, n: usize, zeros: &[usize], rng: &mut R) -> Vec<Elem> {
    (0..n).map(|i| if zeros.contains(&i) { ring.zero() } else { sample_elem(ring, 0, rng) }).collect()
}

fn rand_positions<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    rand::seq::index::sample(rng, n, k).into_vec()
}

/// A vector with zeros at `zeros` orthogonal to every constraint (one or
/// two), solved through a unit entry or a unit 2×2 minor.
fn solve_orthogonal<R: Rng>(ring: &Ring, n: usize, zeros: &[usize], cons: &[&[Elem]], rng: &mut R) -> Option<Vec<Elem>> {
    let free: Vec<usize> = (0..n).filter(|i| !zeros.contains(i)).collect();
    let mut v = rand_vec(ring, n, zeros, rng);
    match cons {
        [c] => {
            let piv: Vec<usize> = free.iter().copied().filter(|&j| ring.is_unit(&c[j])).collect();
            let j = *piv.get(rng.gen_range(0..piv.len().max(1)))?;
            v[j] = ring.zero();
            let rest = dot(ring, &v, c);
            v[j] = ring.neg(&ring.mul(&rest, &ring.inv(&c[j])?));
        }
        [c, d] => {
            let mut pairs = Vec::new();
            for (a, &j1) in free.iter().enumerate() {
                for &j2 in &free[a + 1..] {
                    let det = ring.sub(&ring.mul(&c[j1], &d[j2]), &ring.mul(&c[j2], &d[j1]));
                    if ring.is_unit(&det) {
                        pairs.push((j1, j2, det));
                    }
                }
            }
            let (j1, j2, det) = pairs.get(rng.gen_range(0..pairs.len().max(1)))?.clone();
            v[j1] = ring.zero();
            v[j2] = ring.zero();
            let (r1, r2) = (dot(ring, &v, c), dot(ring, &v, d));
            let di = ring.inv(&det)?;
            let x1 = ring.sub(&ring.mul(&r2, &c[j2]), &ring.mul(&r1, &d[j2]));
            let x2 = ring.sub(&ring.mul(&r1, &d[j1]), &ring.mul(&r2, &c[j1]));
            v[j1] = ring.mul(&x1, &di);
            v[j2] = ring.mul(&x2, &di);
        }
        _ => unreachable!("one or two constraints"),
    }
    debug_assert!(cons.iter().all(|c| dot(ring, &v, c).is_zero()));
    Some(v)
}

fn retry<T, R: Rng>(rng: &mut R, mut f: impl FnMut(&mut R) -> Option<T>) -> T {
    for _ in 0..1000 {
        if let Some(t) = f(rng) {
            return t;
        }
    }
    panic!("sampler found no admissible instance in 1000 draws")
}

/// Random elementary word over `ring` with coefficients of degree ≤ `deg`.
pub fn random_elementary<R: Rng>(lin: &Linear, ring: &Ring, len: usize, deg: usize, rng: &mut R) -> StWord {
    let mut w = StWord::empty(&lin.rs, ring);
    for _ in 0..len {
        let i = rng.gen_range(0..lin.n);
        let j = (i + rng.gen_range(1..lin.n)) % lin.n;
        lin.push_x(&mut w, i, j, &sample_elem(ring, deg, rng));
    }
    w
}

fn ideal_elem<R: Rng>(tower: &Tower, rng: &mut R) -> Elem {
    tower.r.mul(&tower.r.var(), &sample_elem(&tower.r, 1, rng))
}

/// `(u, witness, v)`: `u = m·e_1`, witness `m*·e_1`, `v = m*·z` with `z_1 = 0`,
/// `z ∈ Iⁿ`. Also returns `m` and `z`.
struct FSample {
    m: StWord,
    um: UmVec,
    z: Vec<Elem>,
    v: Vec<Elem>,
}

fn sample_f<R: Rng>(lin: &Linear, tower: &Tower, rng: &mut R) -> FSample {
    let m = random_elementary(lin, &tower.r, 2 * lin.n, 1, rng);
    let um = UmVec::from_elementary(lin, &m);
    let mut z: Vec<Elem> = (0..lin.n).map(|_| ideal_elem(tower, rng)).collect();
    z[0] = tower.r.zero();
    let v = mat_vec(&dual(lin, &m), &z);
    FSample { m, um, z, v }
}

fn oracle(lin: &Linear, a: &StWord, b: &StWord) -> OracleVerdict {
    oracle_equal(&lin.rep, a, b).expect("words over an evaluable ring")
}

fn record(id: &str, inputs: String, r: Result<OracleVerdict>) -> CaseRecord {
    match r {
        Ok(v) => CaseRecord::from_oracle(id, inputs, &v),
        Err(e) => {
            let mut c = CaseRecord::from_oracle(id, inputs, &OracleVerdict { verdict: Verdict::NotEqual, justification: crate::verify::Justification::MatrixLevel, witness: None });
            c.note = Some(e.to_string());
            c
        }
    }
}

fn with_check(v: OracleVerdict, ok: bool) -> OracleVerdict {
    if ok {
        v
    } else {
        OracleVerdict { verdict: Verdict::NotEqual, ..v }
    }
}

// Instances of the lemma on `x(v, w)`, over the base ring.

fn xsmall_instance(lin: &Linear, ring: &Ring, id: &str, rng: &mut ChaCha8Rng) -> (String, Result<OracleVerdict>) {
    let n = lin.n;
    match id {
        "x-small-matrix" | "x-small-choice" => {
            let (v, w) = retry(rng, |rng| {
                let zeros = rand_positions(n, rng.gen_range(1..=2), rng);
                let w = rand_vec(ring, n, &zeros, rng);
                let v = solve_orthogonal(ring, n, &[], &[&w], rng)?;
                Some(if rng.gen_bool(0.5) { (v, w) } else { (w, v) })
            });
            let inputs = format!("v={},w={}", render_vec(ring, &v), render_vec(ring, &w));
            let res = (|| {
                let x = x_small(lin, ring, &v, &w)?;
                if id == "x-small-matrix" {
                    return Ok(compare_matrices(&lin.eval(&x), &transvection(ring, &v, &w)));
                }
                let all = recipes(&v, &w);
                let alt = all[rng.gen_range(0..all.len())];
                Ok(oracle(lin, &x, &x_small_with(lin, ring, &v, &w, alt)?))
            })();
            (inputs, res)
        }
        "xsmall-a" => {
            let (v, w, a) = retry(rng, |rng| {
                let zeros = rand_positions(n, 2, rng);
                let w = rand_vec(ring, n, &zeros, rng);
                let v = solve_orthogonal(ring, n, &[], &[&w], rng)?;
                let a = sample_elem(ring, 0, rng);
                Some(if rng.gen_bool(0.5) { (v, w, a) } else { (w, v, a) })
            });
            let inputs = format!("v={},w={},a={}", render_vec(ring, &v), render_vec(ring, &w), ring.render(&a));
            let res = (|| Ok(oracle(lin, &x_small(lin, ring, &v, &vscale(ring, &w, &a))?, &x_small(lin, ring, &vscale(ring, &v, &a), &w)?)))();
            (inputs, res)
        }
        "xsmall-b-right" | "xsmall-b-left" => {
            let (v, w1, w2) = retry(rng, |rng| {
                let common = rng.gen_range(0..n);
                let other = |rng: &mut ChaCha8Rng| (common + rng.gen_range(1..n)) % n;
                let (z1, z2) = (other(rng), other(rng));
                let w1 = rand_vec(ring, n, &[common, z1], rng);
                let w2 = rand_vec(ring, n, &[common, z2], rng);
                let v = solve_orthogonal(ring, n, &[], &[&w1, &w2], rng)?;
                Some((v, w1, w2))
            });
            let inputs = format!("v={},w1={},w2={}", render_vec(ring, &v), render_vec(ring, &w1), render_vec(ring, &w2));
            let sum = vadd(ring, &w1, &w2);
            let res = (|| {
                Ok(if id == "xsmall-b-right" {
                    oracle(lin, &x_small(lin, ring, &v, &w1)?.concat(&x_small(lin, ring, &v, &w2)?), &x_small(lin, ring, &v, &sum)?)
                } else {
                    oracle(lin, &x_small(lin, ring, &w1, &v)?.concat(&x_small(lin, ring, &w2, &v)?), &x_small(lin, ring, &sum, &v)?)
                })
            })();
            (inputs, res)
        }
        "xsmall-c" => {
            let (v, v2, w, w2) = retry(rng, |rng| {
                let w = rand_vec(ring, n, &rand_positions(n, 2, rng), rng);
                let w2 = rand_vec(ring, n, &rand_positions(n, 2, rng), rng);
                let v = solve_orthogonal(ring, n, &[], &[&w, &w2], rng)?;
                let v2 = solve_orthogonal(ring, n, &[], &[&w, &w2], rng)?;
                Some((v, v2, w, w2))
            });
            let inputs = format!("v={},v'={},w={},w'={}", render_vec(ring, &v), render_vec(ring, &v2), render_vec(ring, &w), render_vec(ring, &w2));
            let res = (|| {
                let c = StWord::commutator(&x_small(lin, ring, &v, &w)?, &x_small(lin, ring, &v2, &w2)?);
                Ok(oracle(lin, &c, &StWord::empty(&lin.rs, ring)))
            })();
            (inputs, res)
        }
        "xsmall-d" => {
            let (v, w, h, k, a) = retry(rng, |rng| {
                let zeros = rand_positions(n, 2, rng);
                let w = rand_vec(ring, n, &zeros, rng);
                let v = solve_orthogonal(ring, n, &[], &[&w], rng)?;
                let h = rng.gen_range(0..n);
                let k = (h + rng.gen_range(1..n)) % n;
                let a = sample_elem(ring, 0, rng);
                Some(if rng.gen_bool(0.5) { (v, w, h, k, a) } else { (w, v, h, k, a) })
            });
            let inputs = format!("v={},w={},g=x{}{}({})", render_vec(ring, &v), render_vec(ring, &w), h + 1, k + 1, ring.render(&a));
            let res = (|| {
                let g = lin.x(ring, h, k, &a);
                let lhs = x_small(lin, ring, &v, &w)?.conj_by(&g);
                // g·v = v + a·v_k·e_h and g*·w = w − a·w_h·e_k.
                let mut gv = v.clone();
                gv[h] = ring.add(&gv[h], &ring.mul(&a, &v[k]));
                let mut gw = w.clone();
                gw[k] = ring.sub(&gw[k], &ring.mul(&a, &w[h]));
                Ok(oracle(lin, &lhs, &x_small(lin, ring, &gv, &gw)?))
            })();
            (inputs, res)
        }
        _ => unreachable!(),
    }
}

// Instances for `X^d`, `Y^d` over `A[X]`.

fn x_scalings(tower: &Tower, n: usize) -> Vec<(&'static str, Vec<Elem>)> {
    let d1 = tower.d1(n);
    vec![("e", tower.identity_diag(n)), ("d1^-1", tower.diag_inv(&d1)), ("d1*X^-1", tower.diag_scalar(&d1, -1))]
}

fn y_scalings(tower: &Tower, n: usize) -> Vec<(&'static str, Vec<Elem>)> {
    let d1 = tower.d1(n);
    vec![("e", tower.identity_diag(n)), ("d1^-1*X", tower.diag_scalar(&tower.diag_inv(&d1), 1)), ("d1", d1)]
}

fn xy_instance(lin: &Linear, tower: &Tower, id: &str, rng: &mut ChaCha8Rng) -> (String, Result<OracleVerdict>) {
    let r = &tower.r;
    let n = lin.n;
    let is_x = id.ends_with("-x");
    let scalings = if is_x { x_scalings(tower, n) } else { y_scalings(tower, n) };
    let (dname, d) = scalings[rng.gen_range(0..scalings.len())].clone();
    let f = sample_f(lin, tower, rng);
    let inputs = format!("d={dname},u={},v={}", render_vec(r, &f.um.u), render_vec(r, &f.v));
    let build = |um: &UmVec, v: &[Elem]| if is_x { x_d(lin, tower, um, v, &d) } else { y_d(lin, tower, v, um, &d) };
    let build_parts = |u: &[Elem], parts: &[Vec<Elem>]| if is_x { x_d_parts(lin, tower, u, parts, &d) } else { y_d_parts(lin, tower, u, parts, &d) };
    let res = (|| -> Result<OracleVerdict> {
        let base = build(&f.um, &f.v)?;
        match id {
            "xy-matrix-x" | "xy-matrix-y" => {
                let expected = if is_x {
                    tower.conjugated_transvection(&d, &f.um.u, &f.v)
                } else {
                    tower.conjugated_transvection(&d, &f.v, &f.um.u)
                };
                Ok(compare_matrices(&tower.eval_up(lin, &base), &expected).with_justification_of(r))
            }
            "xy-wd-witness-x" | "xy-wd-witness-y" => {
                let mut t: Vec<Elem> = (0..n).map(|_| sample_elem(r, 1, rng)).collect();
                t[0] = r.one();
                let um2 = UmVec { u: f.um.u.clone(), witness: mat_vec(&dual(lin, &f.m), &t) };
                Ok(oracle(lin, &base, &build(&um2, &f.v)?))
            }
            "xy-wd-split-x" | "xy-wd-split-y" => {
                let mut z1: Vec<Elem> = (0..n).map(|_| ideal_elem(tower, rng)).collect();
                z1[0] = r.zero();
                let z2: Vec<Elem> = f.z.iter().zip(&z1).map(|(a, b)| r.sub(a, b)).collect();
                let mstar = dual(lin, &f.m);
                let mut parts = canonical_parts(r, &f.um, &mat_vec(&mstar, &z1))?;
                parts.extend(canonical_parts(r, &f.um, &mat_vec(&mstar, &z2))?);
                Ok(oracle(lin, &base, &build_parts(&f.um.u, &parts)?))
            }
            "xy-conj-x" | "xy-conj-y" => {
                let h = rng.gen_range(0..n);
                let k = (h + rng.gen_range(1..n)) % n;
                let mut a = sample_elem(r, 1, rng);
                let ratio = tower.s.mul(&d[h], &tower.s.inv(&d[k]).unwrap());
                let mut b = tower.s.mul(&ratio, &tower.up(&a));
                if tower.down(&b).is_none() {
                    a = r.mul(&r.var(), &a);
                    b = tower.s.mul(&ratio, &tower.up(&a));
                }
                let b = tower.down(&b).ok_or_else(|| TulenbaevError::Inadmissible("d·π(g)·d⁻¹ leaves A[X]".into()))?;
                let g = lin.x(r, h, k, &a);
                let m = transvection(r, &unit_vec(r, n, h), &vscale(r, &unit_vec(r, n, k), &b));
                let mstar = transvection(r, &unit_vec(r, n, k), &vscale(r, &unit_vec(r, n, h), &r.neg(&b)));
                let lhs = base.conj_by(&g);
                let rhs = if is_x {
                    let um2 = UmVec { u: mat_vec(&m, &f.um.u), witness: mat_vec(&mstar, &f.um.witness) };
                    x_d(lin, tower, &um2, &mat_vec(&mstar, &f.v), &d)?
                } else {
                    let um2 = UmVec { u: mat_vec(&mstar, &f.um.u), witness: mat_vec(&m, &f.um.witness) };
                    y_d(lin, tower, &mat_vec(&m, &f.v), &um2, &d)?
                };
                Ok(oracle(lin, &lhs, &rhs))
            }
            _ => unreachable!(),
        }
    })();
    (inputs, res)
}

trait JustifyBy {
    fn with_justification_of(self, ring: &Ring) -> OracleVerdict;
}

impl JustifyBy for OracleVerdict {
    /// A matrix comparison over `S` stands for the same comparison over `R`.
    fn with_justification_of(self, ring: &Ring) -> OracleVerdict {
        let j = crate::verify::justification_for(ring);
        let verdict = match (self.verdict, j) {
            (Verdict::NotEqual, _) => Verdict::NotEqual,
            (_, crate::verify::Justification::MatrixLevel) => Verdict::MatrixEqualOnly,
            _ => Verdict::Equal,
        };
        OracleVerdict { verdict, justification: j, witness: self.witness }
    }
}

pub const XSMALL_IDS: &[&str] = &["x-small-matrix", "x-small-choice", "xsmall-a", "xsmall-b-right", "xsmall-b-left", "xsmall-c", "xsmall-d"];
pub const XY_IDS: &[&str] = &[
    "xy-matrix-x",
    "xy-matrix-y",
    "xy-wd-witness-x",
    "xy-wd-witness-y",
    "xy-wd-split-x",
    "xy-wd-split-y",
    "xy-conj-x",
    "xy-conj-y",
];

fn linear_params(p: &SuiteParams) -> Result<(Linear, Ring)> {
    let lin = Linear::new(p.n)?;
    let ring = RingDescriptor::parse(&p.ring)?;
    Ok((lin, ring))
}

/// The lemma on `x(v, w)` over the base ring and the lemmas on `X^d`, `Y^d`
/// over the base ring's polynomial ring, `cases` seeded instances each.
pub fn tulenbaev_suite(p: &SuiteParams) -> std::result::Result<SuiteOutcome, VerifyError> {
    let (lin, ring) = linear_params(p)?;
    if !ring.is_finite() {
        return Err(VerifyError::NotFinite(ring.to_string()));
    }
    let tower = Tower::over(&ring)?;
    let mut jobs: Vec<(&str, usize)> = Vec::new();
    for id in XSMALL_IDS.iter().chain(XY_IDS) {
        jobs.extend((0..p.cases).map(|i| (*id, i)));
    }
    let cases = jobs
        .par_iter()
        .map(|&(id, i)| {
            let mut rng = case_rng(p.seed, salt(id), i);
            let (inputs, res) = if id.starts_with("xy") { xy_instance(&lin, &tower, id, &mut rng) } else { xsmall_instance(&lin, &ring, id, &mut rng) };
            record(id, inputs, res)
        })
        .collect();
    Ok(SuiteOutcome { params: p.to_map(&["ring", "n", "cases"]), exhaustive: false, cases })
}

pub const SIGMA_PAIR_IDS: &[&str] = &["add4", "add5", "conj3", "coef-move", "ev0-image", "sigma-inverse", "transport", "varpi2"];

fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

fn sigma_pair_instance(lin: &Linear, tower: &Tower, id: &str, i: usize, rng: &mut ChaCha8Rng) -> (String, Result<OracleVerdict>) {
    let r = &tower.r;
    let n = lin.n;
    let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
    let sn = sign_name(sign);
    let omega = lin.rs.fundamental(1);
    match id {
        "add4" => {
            let f = sample_f(lin, tower, rng);
            let g = sample_f(lin, tower, rng);
            let v2 = mat_vec(&dual(lin, &f.m), &g.z);
            let inputs = format!("sign={sn},u={},v={},v'={}", render_vec(r, &f.um.u), render_vec(r, &f.v), render_vec(r, &v2));
            let res = (|| {
                let a = sigma_pi1(lin, tower, &Generator::F { um: f.um.clone(), v: f.v.clone() }, sign)?;
                let b = sigma_pi1(lin, tower, &Generator::F { um: f.um.clone(), v: v2.clone() }, sign)?;
                let c = sigma_pi1(lin, tower, &Generator::F { um: f.um.clone(), v: vadd(r, &f.v, &v2) }, sign)?;
                Ok(oracle(lin, &a.concat(&b), &c))
            })();
            (inputs, res)
        }
        "add5" => {
            let f = sample_f(lin, tower, rng);
            let g = sample_f(lin, tower, rng);
            let v2 = mat_vec(&dual(lin, &f.m), &g.z);
            let inputs = format!("sign={sn},u={},v1={},v2={}", render_vec(r, &f.um.u), render_vec(r, &f.v), render_vec(r, &v2));
            let res = (|| {
                let a = sigma_pi1(lin, tower, &Generator::S { v: f.v.clone(), um: f.um.clone() }, sign)?;
                let b = sigma_pi1(lin, tower, &Generator::S { v: v2.clone(), um: f.um.clone() }, sign)?;
                let c = sigma_pi1(lin, tower, &Generator::S { v: vadd(r, &f.v, &v2), um: f.um.clone() }, sign)?;
                Ok(oracle(lin, &a.concat(&b), &c))
            })();
            (inputs, res)
        }
        "conj3" => {
            let f = sample_f(lin, tower, rng);
            let g = sample_f(lin, tower, rng);
            let inputs = format!(
                "sign={sn},u={},v={},u'={},v'={}",
                render_vec(r, &f.um.u),
                render_vec(r, &f.v),
                render_vec(r, &g.um.u),
                render_vec(r, &g.v)
            );
            let res = (|| {
                let a = sigma_pi1(lin, tower, &Generator::F { um: f.um.clone(), v: f.v.clone() }, sign)?;
                let b = sigma_pi1(lin, tower, &Generator::F { um: g.um.clone(), v: g.v.clone() }, sign)?;
                // t(u, v)·u′ and t(v, u)⁻¹·v′ = (e − v·uᵗ)·v′, witness (e − v·uᵗ)·w′.
                let t = transvection(r, &f.um.u, &f.v);
                let tinv_star = transvection(r, &f.v, &f.um.u.iter().map(|x| r.neg(x)).collect::<Vec<_>>());
                let um2 = UmVec { u: mat_vec(&t, &g.um.u), witness: mat_vec(&tinv_star, &g.um.witness) };
                let c = sigma_pi1(lin, tower, &Generator::F { um: um2, v: mat_vec(&tinv_star, &g.v) }, sign)?;
                Ok(oracle(lin, &b.conj_by(&a), &c))
            })();
            (inputs, res)
        }
        "coef-move" => {
            // Half the cases draw m from G₀ = H₁·U₁⁻·U₁⁺, the rest from E(n, A[X]).
            let m = if (i / 2) % 2 == 0 {
                let units: Vec<Elem> = tower.base.elements().unwrap().into_iter().filter(|e| tower.base.is_unit(e)).collect();
                let c = r.constant(units[rng.gen_range(0..units.len())].clone());
                let mut m = StWord::h(&lin.rs, r, lin.root(0, 1), &c).expect("unit");
                for k in 1..n {
                    lin.push_x(&mut m, k, 0, &sample_elem(r, 1, rng));
                }
                for k in 1..n {
                    lin.push_x(&mut m, 0, k, &sample_elem(r, 1, rng));
                }
                m
            } else {
                random_elementary(lin, r, 2 * n, 1, rng)
            };
            let a = ideal_elem(tower, rng);
            let inputs = format!("sign={sn},m={},a={}", m.render(), r.render(&a));
            let res = (|| {
                let mm = lin.eval(&m);
                let ms = dual(lin, &m);
                let e1 = unit_vec(r, n, 0);
                let e2 = unit_vec(r, n, 1);
                let f_um = UmVec { u: mat_vec(&mm, &e1), witness: mat_vec(&ms, &e1) };
                let f_v = vscale(r, &mat_vec(&ms, &e2), &a);
                let s_um = UmVec { u: mat_vec(&ms, &e2), witness: mat_vec(&mm, &e2) };
                let s_v = vscale(r, &mat_vec(&mm, &e1), &a);
                let lhs = sigma_pi1(lin, tower, &Generator::F { um: f_um, v: f_v }, sign)?;
                let rhs = sigma_pi1(lin, tower, &Generator::S { v: s_v, um: s_um }, sign)?;
                Ok(oracle(lin, &lhs, &rhs))
            })();
            (inputs, res)
        }
        "ev0-image" => {
            let f = sample_f(lin, tower, rng);
            let gen = if i % 2 == 0 { Generator::F { um: f.um.clone(), v: f.v.clone() } } else { Generator::S { v: f.v.clone(), um: f.um.clone() } };
            let kind = if i % 2 == 0 { "F" } else { "S" };
            let inputs = format!("gen={kind},u={},v={}", render_vec(r, &f.um.u), render_vec(r, &f.v));
            let res = (|| {
                let w = sigma_pi1(lin, tower, &gen, Sign::Plus)?;
                let ev = RingHom::evaluation(r, &tower.base, tower.base.zero())?;
                let w0 = w.apply_hom(&ev)?;
                let m = lin.eval(&w0);
                let a = &tower.base;
                let pattern = (0..n).all(|row| (0..n).all(|col| {
                    let x = m.get(row, col);
                    if row == col {
                        a.is_one(x)
                    } else {
                        col == 0 || x.is_zero()
                    }
                }));
                let mut lower = StWord::empty(&lin.rs, a);
                for row in 1..n {
                    lin.push_x(&mut lower, row, 0, m.get(row, 0));
                }
                Ok(with_check(oracle(lin, &w0, &lower), pattern))
            })();
            (inputs, res)
        }
        "sigma-inverse" => {
            let f = sample_f(lin, tower, rng);
            let is_f = (i / 2) % 2 == 0;
            let gen = if is_f { Generator::F { um: f.um.clone(), v: f.v.clone() } } else { Generator::S { v: f.v.clone(), um: f.um.clone() } };
            // σ(ϖ₁)∘σ(−ϖ₁) for even i, σ(−ϖ₁)∘σ(ϖ₁) for odd i.
            let inputs = format!("gen={},first={sn},u={},v={}", if is_f { "F" } else { "S" }, render_vec(r, &f.um.u), render_vec(r, &f.v));
            let res = (|| {
                let inner = sigma_pi1(lin, tower, &gen, if sign == Sign::Plus { Sign::Minus } else { Sign::Plus })?;
                let outer_weight = if sign == Sign::Plus { omega.clone() } else { omega.neg() };
                let back = sigma_letterwise(tower, &inner, &outer_weight)?;
                Ok(oracle(lin, &back, &generator_image(lin, tower, &gen)?))
            })();
            (inputs, res)
        }
        "transport" => {
            let units: Vec<Elem> = tower.base.elements().unwrap().into_iter().filter(|e| tower.base.is_unit(e)).collect();
            let nr = lin.rs.num_roots();
            let len = rng.gen_range(1..=3);
            let ws: Vec<(Root, Elem)> = (0..len).map(|_| (rng.gen_range(0..nr), units[rng.gen_range(0..units.len())].clone())).collect();
            let ws2: Vec<(Root, Elem)> = ws.iter().map(|(a, _)| (*a, units[rng.gen_range(0..units.len())].clone())).collect();
            let target = weyl_act(&lin.rs, &ws, &omega);
            let beta = rng.gen_range(0..nr);
            let e = lin.rs.pairing(&target, beta);
            let f = r.mul(&r.monomial(tower.base.one(), (-e).max(0)), &sample_elem(r, 1, rng));
            let inputs = format!(
                "w={},beta={},f={}",
                ws.iter().map(|(a, u)| format!("w({};{})", root_name(&lin.rs, *a), tower.base.render(u))).collect::<Vec<_>>().join("*"),
                root_name(&lin.rs, beta),
                r.render(&f)
            );
            let res = (|| {
                let (g1, c1) = sigma_transport(&lin.rep, tower, &ws, &omega, beta, &f)?;
                let (g2, c2) = sigma_transport(&lin.rep, tower, &ws2, &omega, beta, &f)?;
                let out = StWord::x(&lin.rs, r, g1, c1.clone());
                let expected = tower.down(&tower.s.mul(&tower.x_pow(e), &tower.up(&f))).expect("f divisible as chosen");
                let h = lin.rep.weight_torus(&tower.s, &target, &tower.x_pow(1))?;
                let conj = crate::suites::torus_conjugate(&h, &tower.eval_up(lin, &StWord::x(&lin.rs, r, beta, f.clone())));
                let torus_ok = tower.eval_up(lin, &out) == conj;
                let class_ok = (g1, &c1) == (g2, &c2);
                Ok(with_check(oracle(lin, &out, &StWord::x(&lin.rs, r, beta, expected)), torus_ok && class_ok && g1 == beta))
            })();
            (inputs, res)
        }
        "varpi2" => {
            // σ(ϖ₂) on x_α(X·g) as σ(ϖ₁)∘σ(s_1·ϖ₁), checked against H_{ϖ₂}(X).
            let nr = lin.rs.num_roots();
            let alpha = rng.gen_range(0..nr);
            let f = ideal_elem(tower, rng);
            let inputs = format!("alpha={},f={}", root_name(&lin.rs, alpha), r.render(&f));
            let res = (|| {
                let s1 = [(lin.rs.simple(1), tower.base.one())];
                let (g1, c1) = sigma_transport(&lin.rep, tower, &s1, &omega, alpha, &f)?;
                let (g2, c2) = sigma_transport(&lin.rep, tower, &[], &omega, g1, &c1)?;
                let out = StWord::x(&lin.rs, r, g2, c2);
                let w2 = lin.rs.fundamental(2);
                let h = lin.rep.weight_torus(&tower.s, &w2, &tower.x_pow(1))?;
                let conj = crate::suites::torus_conjugate(&h, &tower.eval_up(lin, &StWord::x(&lin.rs, r, alpha, f.clone())));
                Ok(compare_matrices(&tower.eval_up(lin, &out), &conj).with_justification_of(r))
            })();
            (inputs, res)
        }
        _ => unreachable!(),
    }
}

/// Relations (add4), (add5), (conj3), (coef-move) on `σ(±ϖ₁)`-images, the
/// `ev_{X=0}` image check, mutual inverseness of `σ(ϖ₁)` and `σ(−ϖ₁)`,
/// Weyl transport of `σ`, and (for `n = 4`) the composite `σ(ϖ₂)`.
pub fn sigma_pair_suite(p: &SuiteParams) -> std::result::Result<SuiteOutcome, VerifyError> {
    let (lin, ring) = linear_params(p)?;
    if ring.local_residue().is_none() {
        return Err(TulenbaevError::NotLocal(ring.to_string()).into());
    }
    let tower = Tower::over(&ring)?;
    let mut jobs: Vec<(&str, usize)> = Vec::new();
    for id in SIGMA_PAIR_IDS {
        if *id == "varpi2" && lin.n != 4 {
            continue;
        }
        jobs.extend((0..p.cases).map(|i| (*id, i)));
    }
    let cases = jobs
        .par_iter()
        .map(|&(id, i)| {
            let mut rng = case_rng(p.seed, salt(id), i);
            let (inputs, res) = sigma_pair_instance(&lin, &tower, id, i, &mut rng);
            record(id, inputs, res)
        })
        .collect();
    Ok(SuiteOutcome { params: p.to_map(&["ring", "n", "cases"]), exhaustive: false, cases })
}

/// The patching identity on random words `g` of letters `x_α(X·f)` over
/// `A[X]` with `(a, b) = (5, 7)` and exponents 1 to 3, plus the monoid law of
/// the dilation substitution.
pub fn patch_suite(p: &SuiteParams) -> std::result::Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let rep = default_rep(&rs)?;
    let base = p.parse_ring()?;
    let r = RingDescriptor::polynomial(&base, "X")?;
    let roots: Vec<Root> = (0..rs.num_roots()).collect();
    let (a, b) = (5i64, 7i64);
    let mut cases: Vec<CaseRecord> = (0..p.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(p.seed, salt("patch"), i);
            let mut g = StWord::empty(&rs, &r);
            for _ in 0..8 {
                let f = r.mul(&r.var(), &sample_elem(&r, 1, &mut rng));
                g.push(roots[rng.gen_range(0..roots.len())], f);
            }
            let n = 1 + (i % 3) as u32;
            let inputs = format!("n={n},g={}", g.render());
            let res = patch_identity(&g, a, b, n).map(|(lhs, rhs)| compare_matrices(&rep.eval(&lhs), &rep.eval(&rhs)));
            record("patch", inputs, res)
        })
        .collect();
    let dil: Vec<CaseRecord> = (0..p.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(p.seed, salt("dilation"), i);
            let mut g = StWord::empty(&rs, &r);
            for _ in 0..4 {
                g.push(roots[rng.gen_range(0..roots.len())], sample_elem(&r, 2, &mut rng));
            }
            let c = sample_elem(&base, 0, &mut rng);
            let (n1, n2) = (rng.gen_range(0..3u32), rng.gen_range(0..3u32));
            let inputs = format!("a={},n={n1},m={n2},g={}", base.render(&c), g.render());
            let ok = (|| -> Result<bool> {
                let twice = dilation_substitute(&dilation_substitute(&g, &c, n1)?, &c, n2)?;
                Ok(twice == dilation_substitute(&g, &c, n1 + n2)?)
            })();
            match ok {
                Ok(ok) => CaseRecord::predicate("dilation-compose", inputs, &r, ok, None),
                Err(e) => CaseRecord::predicate("dilation-compose", inputs, &r, false, Some(e.to_string())),
            }
        })
        .collect();
    cases.extend(dil);
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring", "cases"]), exhaustive: false, cases })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> Ring {
        RingDescriptor::integers_mod(5).unwrap()
    }

    #[test]
    fn x_small_of_basis_vectors_is_one_letter() {
        let lin = Linear::new(4).unwrap();
        let r = f5();
        let v = unit_vec(&r, 4, 0);
        let w = vscale(&r, &unit_vec(&r, 4, 1), &Elem::Mod(3));
        let x = x_small(&lin, &r, &v, &w).unwrap();
        assert_eq!(x, lin.x(&r, 0, 1, &Elem::Mod(3)));
    }

    #[test]
    fn canonical_decomposition_rebuilds_v() {
        let r = f5();
        let e = |i| unit_vec(&r, 4, i);
        let v: Vec<Elem> = vadd(&r, &e(1), &vscale(&r, &e(2), &Elem::Mod(4)));
        let parts = canonical_decomposition(&r, &e(0), &v, &e(0)).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(canonical_decomposition(&r, &e(0), &v, &e(0)).is_ok());
        assert!(matches!(canonical_decomposition(&r, &e(0), &e(0), &e(0)), Err(TulenbaevError::NotOrthogonal)));
        let zero = vec![r.zero(); 4];
        assert!(canonical_decomposition(&r, &e(0), &zero, &e(0)).unwrap().is_empty());
    }

    #[test]
    fn x_small_needs_a_zero_entry() {
        let lin = Linear::new(4).unwrap();
        let r = f5();
        let v: Vec<Elem> = [1, 1, 1, 2].iter().map(|&k| Elem::Mod(k)).collect();
        let w: Vec<Elem> = [1, 1, 1, 1].iter().map(|&k| Elem::Mod(k)).collect();
        assert!(matches!(x_small(&lin, &r, &v, &w), Err(TulenbaevError::NoZeroEntry)));
    }

    #[test]
    fn dilation_examples() {
        let rs = RootSystem::build(RootType::A, 3).unwrap();
        let r = RingDescriptor::polynomial(&RingDescriptor::integers_mod(35).unwrap(), "X").unwrap();
        let g = StWord::x(&rs, &r, 0, r.var());
        assert_eq!(dilation_substitute(&g, &Elem::Mod(2), 0).unwrap(), g);
        assert_eq!(dilation_substitute(&g, &Elem::Mod(2), 3).unwrap(), StWord::x(&rs, &r, 0, r.monomial(Elem::Mod(8), 1)));
    }

    #[test]
    fn patch_identity_on_single_letter() {
        let rs = RootSystem::build(RootType::A, 3).unwrap();
        let r = RingDescriptor::polynomial(&RingDescriptor::integers_mod(35).unwrap(), "X").unwrap();
        let g = StWord::x(&rs, &r, 2, r.monomial(Elem::Mod(4), 1));
        let (lhs, rhs) = patch_identity(&g, 5, 7, 1).unwrap();
        let rep = MicroweightRep::new(&rs, 1).unwrap();
        assert_eq!(rep.eval(&lhs), rep.eval(&rhs));
        assert!(matches!(patch_identity(&g, 6, 4, 1), Err(TulenbaevError::NotCoprime(6, 4))));
    }

    #[test]
    fn sigma_needs_local_base() {
        let lin = Linear::new(4).unwrap();
        let tower = Tower::over(&RingDescriptor::integers_mod(35).unwrap()).unwrap();
        let r = &tower.r;
        let um = UmVec { u: unit_vec(r, 4, 0), witness: unit_vec(r, 4, 0) };
        let gen = Generator::F { um, v: vec![r.zero(); 4] };
        assert!(matches!(sigma_pi1(&lin, &tower, &gen, Sign::Plus), Err(TulenbaevError::NotLocal(_))));
    }
}
