//! Loop-group dictionary between affine Steinberg words and words over
//! `A[X, X⁻¹]`, and the suites for the Curtis–Tits style relations of the
//! affine group and for the torus element `σ`.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::chevalley::{GroupMatrix, MicroweightRep};
use crate::ring::{Elem, Ring, RingDescriptor};
use crate::rootsys::{AffineRoot, Root, RootSystem, RootType};
use crate::steinberg::{root_name, StWord};
use crate::verify::{all_polys, compare_matrices, default_rep, CaseRecord, SuiteOutcome, SuiteParams, VerifyError, EXHAUSTIVE_BOUND};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AffineError {
    #[error("roots ({0}) and ({1}) are not a prenilpotent pair")]
    NotPrenilpotent(String, String),
}

/// `x_{(α, m)}(a)` with `a` in the base ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineLetter {
    pub root: AffineRoot,
    pub coeff: Elem,
}

/// `x_{(α,m)}(a) ↦ x_α(a·X^m)` into the Laurent ring over the base.
pub fn loop_map(rs: &Arc<RootSystem>, laurent: &Ring, letters: &[AffineLetter]) -> StWord {
    let mut w = StWord::empty(rs, laurent);
    for l in letters {
        w.push(l.root.root, laurent.monomial(l.coeff.clone(), l.root.level));
    }
    w.free_reduce()
}

/// Inverse of [`loop_map`]: `x_α(Σ a_i X^i) ↦ ∏_i x_{(α,i)}(a_i)`.
pub fn loop_untwist(w: &StWord) -> Vec<AffineLetter> {
    let mut out = Vec::new();
    for l in &w.free_reduce().letters {
        for (e, c) in l.coeff.terms() {
            out.push(AffineLetter { root: AffineRoot { root: l.root, level: *e }, coeff: c.clone() });
        }
    }
    out
}

/// Right-hand side of the affine commutator relation for
/// `[x_{(α,m)}(a), x_{(β,n)}(b)]`; only defined on prenilpotent pairs.
pub fn affine_commutator(
    rep: &MicroweightRep,
    base: &Ring,
    a: &AffineLetter,
    b: &AffineLetter,
) -> Result<Vec<AffineLetter>, AffineError> {
    let rs = &rep.rs;
    if !rs.prenilpotent(a.root, b.root) {
        return Err(AffineError::NotPrenilpotent(
            format!("{},{}", root_name(rs, a.root.root), a.root.level),
            format!("{},{}", root_name(rs, b.root.root), b.root.level),
        ));
    }
    Ok(match rs.sum(a.root.root, b.root.root) {
        Some(s) => {
            let c = base.mul(&base.mul(&a.coeff, &b.coeff), &base.from_i64(rep.basis.n(a.root.root, b.root.root)));
            vec![AffineLetter { root: AffineRoot { root: s, level: a.root.level + b.root.level }, coeff: c }]
        }
        None => Vec::new(),
    })
}

/// One factor of a relation side: a word, or a power of the distinguished
/// element `S` whose matrix is supplied by the caller.
#[derive(Clone, Debug)]
pub enum Factor {
    W(StWord),
    S(i32),
}

pub struct SContext {
    pub s: GroupMatrix,
    pub s_inv: GroupMatrix,
}

pub fn eval_side(rep: &MicroweightRep, ring: &Ring, side: &[Factor], ctx: &SContext) -> GroupMatrix {
    let mut m = rep.identity(ring);
    for f in side {
        match f {
            Factor::W(w) => rep.eval_into(&mut m, w),
            Factor::S(k) => {
                let step = if *k > 0 { &ctx.s } else { &ctx.s_inv };
                for _ in 0..k.unsigned_abs() {
                    m = m.mul(step);
                }
            }
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AllcockMode {
    Affine,
    Simpler,
}

/// Relation identifiers and the parameters each one ranges over.
#[derive(Clone, Copy, Debug)]
struct RelationSpec {
    id: &'static str,
    uses_i: bool,
    uses_a: bool,
    uses_b: bool,
    affine: bool,
    simpler: bool,
}

const fn rel(id: &'static str, i: bool, a: bool, b: bool, affine: bool, simpler: bool) -> RelationSpec {
    RelationSpec { id, uses_i: i, uses_a: a, uses_b: b, affine, simpler }
}

const RELATIONS: &[RelationSpec] = &[
    rel("2", false, true, false, true, true),
    rel("3", false, false, false, true, true),
    rel("4", true, false, false, true, true),
    rel("5-1", true, true, false, true, true),
    rel("5-2", true, true, false, true, false),
    rel("6", true, true, true, true, false),
    rel("7", false, false, false, true, true),
    rel("8-1", false, false, false, true, true),
    rel("8-2", false, false, false, true, true),
    rel("9-1", false, true, false, true, true),
    rel("9-2", false, true, false, true, true),
    rel("10-1", false, true, false, true, true),
    rel("10-2", false, true, false, true, false),
    rel("11-1", false, true, true, true, true),
    rel("11-2", false, true, true, true, false),
    rel("12", false, true, true, true, true),
    rel("12-sym", false, true, true, true, false),
];

/// Builds relation sides over the Laurent ring, with `X₀(a) = x_{α₀}(aX)`.
struct RelationBuilder<'a> {
    rs: &'a Arc<RootSystem>,
    lr: &'a Ring,
    alpha0: Root,
    j: usize,
}

impl RelationBuilder<'_> {
    fn x0(&self, a: &Elem) -> Factor {
        Factor::W(StWord::x(self.rs, self.lr, self.alpha0, self.lr.monomial(a.clone(), 1)))
    }

    fn xs(&self, i: usize, a: &Elem) -> Factor {
        Factor::W(StWord::x(self.rs, self.lr, self.rs.simple(i), self.lr.constant(a.clone())))
    }

    fn ws(&self, i: usize, sign: i64) -> Factor {
        Factor::W(StWord::w(self.rs, self.lr, self.rs.simple(i), &self.lr.from_i64(sign)).expect("±1 is a unit"))
    }

    fn inv(f: &Factor) -> Factor {
        match f {
            Factor::W(w) => Factor::W(w.inverse()),
            Factor::S(k) => Factor::S(-k),
        }
    }

    fn inv_side(s: &[Factor]) -> Vec<Factor> {
        s.iter().rev().map(Self::inv).collect()
    }

    fn comm(a: &[Factor], b: &[Factor]) -> Vec<Factor> {
        let mut v = a.to_vec();
        v.extend(b.iter().cloned());
        v.extend(Self::inv_side(a));
        v.extend(Self::inv_side(b));
        v
    }

    fn conj(g: &[Factor], x: &[Factor]) -> Vec<Factor> {
        let mut v = g.to_vec();
        v.extend(x.iter().cloned());
        v.extend(Self::inv_side(g));
        v
    }

    fn build(&self, id: &str, i: usize, a: &Elem, b: &Elem) -> (Vec<Factor>, Vec<Factor>) {
        let base = self.lr.base().unwrap();
        let j = self.j;
        let s = Factor::S(1);
        let s2 = [Factor::S(2)];
        let wj = self.ws(j, 1);
        let wj2 = [wj.clone(), wj.clone()];
        let neg = |x: &Elem| base.neg(x);
        let one = base.one();
        match id {
            "2" => (Self::comm(&s2, &[self.x0(a)]), vec![]),
            "3" => {
                let x = self.x0(&one);
                (vec![x.clone(), s.clone(), x.clone(), Factor::S(-1), x], vec![s])
            }
            "4" => (Self::comm(&[s], &[self.ws(i, 1)]), vec![]),
            "5-1" => (Self::comm(&[s], &[self.xs(i, a)]), vec![]),
            "5-2" => (Self::comm(&[self.ws(i, 1)], &[self.x0(a)]), vec![]),
            "6" => (Self::comm(&[self.x0(a)], &[self.xs(i, b)]), vec![]),
            "7" => (vec![s.clone(), wj.clone(), s.clone()], vec![wj.clone(), s, wj]),
            "8-1" => (Self::conj(&s2, &[wj]), vec![self.ws(j, -1)]),
            "8-2" => (Self::conj(&wj2, &[s]), vec![Factor::S(-1)]),
            "9-1" => (vec![self.xs(j, a), s.clone(), wj.clone()], vec![s, wj, self.x0(a)]),
            "9-2" => (vec![self.x0(a), wj.clone(), s.clone()], vec![wj, s, self.xs(j, a)]),
            "10-1" => (Self::conj(&s2, &[self.xs(j, a)]), vec![self.xs(j, &neg(a))]),
            "10-2" => (Self::conj(&wj2, &[self.x0(a)]), vec![self.x0(&neg(a))]),
            "11-1" => (Self::comm(&[self.x0(a)], &Self::conj(&[s], &[self.xs(j, b)])), vec![]),
            "11-2" => (Self::comm(&[self.xs(j, a)], &Self::conj(&[wj], &[self.x0(b)])), vec![]),
            "12" => (Self::comm(&[self.x0(a)], &[self.xs(j, b)]), Self::conj(&[s], &[self.xs(j, &base.mul(a, b))])),
            "12-sym" => (Self::comm(&[self.xs(j, b)], &[self.x0(a)]), Self::conj(&[wj], &[self.x0(&base.mul(a, b))])),
            _ => unreachable!("unknown relation {id}"),
        }
    }
}

fn require_affine_type(rs: &RootSystem) -> Result<(), VerifyError> {
    match (rs.ty, rs.rank) {
        (RootType::D, _) | (RootType::E, 6) | (RootType::E, 7) => Ok(()),
        _ => Err(VerifyError::BadParam(format!("{} is not one of D, E6, E7", rs.label()))),
    }
}

fn laurent_over(params: &SuiteParams) -> Result<(Ring, Ring, Vec<Elem>), VerifyError> {
    let base = params.parse_ring()?;
    let elems = base.elements().ok_or_else(|| VerifyError::NotFinite(base.to_string()))?;
    let lr = RingDescriptor::laurent(&base, "X")?;
    Ok((base, lr, elems))
}

/// Every `(relation, i, a, b)` instance for the given mode, relation order
/// first, then inputs.
fn allcock_instances(rs: &RootSystem, mode: AllcockMode, elems: &[Elem]) -> Vec<(&'static str, usize, usize, usize)> {
    let unjoined: Vec<usize> = (1..=rs.rank).filter(|&i| !rs.joined_to_node0(i)).collect();
    let mut out = Vec::new();
    for r in RELATIONS.iter().filter(|r| if mode == AllcockMode::Affine { r.affine } else { r.simpler }) {
        let is: Vec<usize> = if r.uses_i { unjoined.clone() } else { vec![0] };
        let as_: Vec<usize> = if r.uses_a { (0..elems.len()).collect() } else { vec![0] };
        let bs: Vec<usize> = if r.uses_b { (0..elems.len()).collect() } else { vec![0] };
        for &i in &is {
            for &a in &as_ {
                for &b in &bs {
                    out.push((r.id, i, a, b));
                }
            }
        }
    }
    out
}

fn relation_inputs(rs: &RootSystem, base: &Ring, id: &str, i: usize, a: &Elem, b: &Elem) -> String {
    let spec = RELATIONS.iter().find(|r| r.id == id).unwrap();
    let mut parts = Vec::new();
    if spec.uses_i {
        parts.push(format!("i={i}"));
    }
    if spec.uses_a {
        parts.push(format!("a={}", base.render(a)));
    }
    if spec.uses_b {
        parts.push(format!("b={}", base.render(b)));
    }
    let _ = rs;
    parts.join(",")
}

/// Evaluate every relation of the chosen list with `S` given by `ctx`.
fn run_relations(
    rep: &MicroweightRep,
    base: &Ring,
    lr: &Ring,
    elems: &[Elem],
    mode: AllcockMode,
    ctx: &SContext,
    prefix: &str,
) -> Vec<CaseRecord> {
    let rs = &rep.rs;
    let marks = rs.extended_marks().expect("checked type");
    let builder = RelationBuilder { rs, lr, alpha0: rs.neg(rs.highest_root()), j: marks.j };
    let instances = allcock_instances(rs, mode, elems);
    instances
        .par_iter()
        .map(|&(id, i, ai, bi)| {
            let (a, b) = (&elems[ai], &elems[bi]);
            let (lhs, rhs) = builder.build(id, i, a, b);
            let v = compare_matrices(&eval_side(rep, lr, &lhs, ctx), &eval_side(rep, lr, &rhs, ctx));
            CaseRecord::from_oracle(format!("{prefix}-{id}"), relation_inputs(rs, base, id, i, a, b), &v)
        })
        .collect()
}

/// `^{w_{α₀}(1)·w_j(1)} x_{α₀}(a) = x_j(a)` over the base ring, all `a`.
fn simpler_relation_cases(rep: &MicroweightRep, base: &Ring, elems: &[Elem], id: &str) -> Vec<CaseRecord> {
    let rs = &rep.rs;
    let j = rs.extended_marks().expect("checked type").j;
    let a0 = rs.neg(rs.highest_root());
    let g = StWord::w(rs, base, a0, &base.one()).unwrap().concat(&StWord::w(rs, base, rs.simple(j), &base.one()).unwrap());
    elems
        .par_iter()
        .map(|a| {
            let lhs = StWord::x(rs, base, a0, a.clone()).conj_by(&g);
            let rhs = StWord::x(rs, base, rs.simple(j), a.clone());
            let v = compare_matrices(&rep.eval(&lhs), &rep.eval(&rhs));
            CaseRecord::from_oracle(id, format!("a={}", base.render(a)), &v)
        })
        .collect()
}

fn s0_context(rep: &MicroweightRep, lr: &Ring) -> SContext {
    let rs = &rep.rs;
    let s0 = StWord::w(rs, lr, rs.neg(rs.highest_root()), &lr.var()).expect("X is a unit");
    SContext { s: rep.eval(&s0), s_inv: rep.eval(&s0.inverse()) }
}

/// Relations of the affine presentation, `S₀ = w_{α₀}(X)`, exhaustive in
/// `a, b` over a finite base ring.
pub fn allcock_suite(rs: &Arc<RootSystem>, base: &Ring, mode: AllcockMode) -> Result<Vec<CaseRecord>, VerifyError> {
    require_affine_type(rs)?;
    let rep = default_rep(rs)?;
    let elems = base.elements().ok_or_else(|| VerifyError::NotFinite(base.to_string()))?;
    let lr = RingDescriptor::laurent(base, "X")?;
    let ctx = s0_context(&rep, &lr);
    let prefix = if mode == AllcockMode::Affine { "allcock" } else { "simpler" };
    let mut cases = run_relations(&rep, base, &lr, &elems, mode, &ctx, prefix);
    if mode == AllcockMode::Simpler {
        cases.extend(simpler_relation_cases(&rep, base, &elems, "simpler-relation"));
    }
    Ok(cases)
}

pub fn allcock_affine_suite(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let (base, _, _) = laurent_over(p)?;
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring"]), exhaustive: true, cases: allcock_suite(&rs, &base, AllcockMode::Affine)? })
}

pub fn allcock_simpler_suite(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let (base, _, _) = laurent_over(p)?;
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring"]), exhaustive: true, cases: allcock_suite(&rs, &base, AllcockMode::Simpler)? })
}

/// `d·m·d⁻¹` (or `d⁻¹·m·d` when `inverse`) for diagonal `d` of units.
pub fn conj_diag(d: &[Elem], m: &GroupMatrix, inverse: bool) -> GroupMatrix {
    let ring = &m.ring;
    let dinv: Vec<Elem> = d.iter().map(|x| ring.inv(x).expect("diagonal of units")).collect();
    let (l, r): (&[Elem], &[Elem]) = if inverse { (&dinv, d) } else { (d, &dinv) };
    let mut out = m.clone();
    for row in 0..m.n {
        for col in 0..m.n {
            let x = m.get(row, col);
            if !x.is_zero() {
                out.set(row, col, ring.mul(&ring.mul(&l[row], x), &r[col]));
            }
        }
    }
    out
}

/// The torus element `σ` as conjugation by `H_{ϖ_k}(X)`:
/// (i) `^σx_α(f) = x_α(Xf)` on `Σ_k⁺`, (ii) `x_β(f)^σ = x_β(Xf)` on `Σ_k⁻`,
/// (iii) `σ` centralizes `Δ_k`, (iv) `φ(S) = w_{α₀}(1)^σ` satisfies the
/// simpler relation list, (v) the conjugation identity for `w_{α₀}(1)w_j(1)`.
pub fn sigma_amalgam(rs: &Arc<RootSystem>, base: &Ring, deg: usize) -> Result<Vec<CaseRecord>, VerifyError> {
    require_affine_type(rs)?;
    let rep = default_rep(rs)?;
    let k = rep.k;
    let elems = base.elements().ok_or_else(|| VerifyError::NotFinite(base.to_string()))?;
    let lr = RingDescriptor::laurent(base, "X")?;
    let pr = RingDescriptor::polynomial(base, "X")?;
    let polys: Vec<Elem> = all_polys(&pr, deg)?;
    let h = rep.weight_torus(&lr, &rs.fundamental(k), &lr.var())?;
    let d: Vec<Elem> = (0..rep.dim()).map(|i| h.get(i, i).clone()).collect();
    let (plus, delta, minus) = rs.special_subsets(k);
    let x = lr.var();

    let mut jobs: Vec<(&'static str, Root, usize)> = Vec::new();
    for (tag, set) in [("sigma-i", &plus), ("sigma-ii", &minus), ("sigma-iii", &delta)] {
        for &a in set.iter() {
            for fi in 0..polys.len() {
                jobs.push((tag, a, fi));
            }
        }
    }
    let mut cases: Vec<CaseRecord> = jobs
        .par_iter()
        .map(|&(tag, a, fi)| {
            // Polynomials embed into the Laurent ring unchanged.
            let f = polys[fi].clone();
            let g = rep.eval(&StWord::x(rs, &lr, a, f.clone()));
            let (lhs, target) = match tag {
                "sigma-i" => (conj_diag(&d, &g, false), lr.mul(&x, &f)),
                "sigma-ii" => (conj_diag(&d, &g, true), lr.mul(&x, &f)),
                _ => (conj_diag(&d, &g, false), f.clone()),
            };
            let rhs = rep.eval(&StWord::x(rs, &lr, a, target));
            let v = compare_matrices(&lhs, &rhs);
            CaseRecord::from_oracle(tag, format!("root={},f={}", root_name(rs, a), pr.render(&polys[fi])), &v)
        })
        .collect();

    let w0 = rep.eval(&StWord::w(rs, &lr, rs.neg(rs.highest_root()), &lr.one()).unwrap());
    let phi_s = conj_diag(&d, &w0, true);
    let w0inv = rep.eval(&StWord::w(rs, &lr, rs.neg(rs.highest_root()), &lr.from_i64(-1)).unwrap());
    let phi_s_inv = conj_diag(&d, &w0inv, true);
    let ctx = SContext { s: phi_s, s_inv: phi_s_inv };
    cases.extend(run_relations(&rep, base, &lr, &elems, AllcockMode::Simpler, &ctx, "sigma-iv"));
    cases.extend(simpler_relation_cases(&rep, base, &elems, "sigma-v"));
    Ok(cases)
}

pub fn sigma_amalgam_suite(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let (base, _, elems) = laurent_over(p)?;
    let space = (elems.len() as u64).saturating_pow(p.deg as u32 + 1) * rs.num_roots() as u64;
    if space > EXHAUSTIVE_BOUND {
        return Err(VerifyError::BadParam(format!("instance space {space} exceeds the exhaustive bound; lower --deg")));
    }
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring", "deg"]), exhaustive: true, cases: sigma_amalgam(&rs, &base, p.deg)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_round_trip() {
        let rs = RootSystem::build(RootType::D, 4).unwrap();
        let base = RingDescriptor::integers_mod(5).unwrap();
        let lr = RingDescriptor::laurent(&base, "X").unwrap();
        let c = lr.parse_elem("1+X").unwrap();
        let w = StWord::x(&rs, &lr, 0, c);
        let un = loop_untwist(&w);
        assert_eq!(un.len(), 2);
        assert_eq!(un[0].root.level, 0);
        assert_eq!(un[1].root.level, 1);
        assert_eq!(loop_map(&rs, &lr, &un), w);
        let two = AffineLetter { root: AffineRoot { root: 3, level: 2 }, coeff: Elem::Mod(3) };
        assert_eq!(loop_map(&rs, &lr, &[two]).render(), format!("x({};3X^2)", root_name(&rs, 3)));
    }

    #[test]
    fn opposite_roots_are_not_prenilpotent() {
        let rs = RootSystem::build(RootType::D, 4).unwrap();
        let rep = MicroweightRep::new(&rs, 1).unwrap();
        let base = RingDescriptor::integers_mod(5).unwrap();
        let a = AffineLetter { root: AffineRoot { root: 0, level: 0 }, coeff: Elem::Mod(1) };
        let b = AffineLetter { root: AffineRoot { root: rs.neg(0), level: 1 }, coeff: Elem::Mod(1) };
        assert!(affine_commutator(&rep, &base, &a, &b).is_err());
    }

    #[test]
    fn d4_simpler_relations_hold() {
        let rs = RootSystem::build(RootType::D, 4).unwrap();
        let base = RingDescriptor::integers_mod(5).unwrap();
        let cases = allcock_suite(&rs, &base, AllcockMode::Simpler).unwrap();
        let bad: Vec<_> = cases.iter().filter(|c| !c.passed()).map(|c| format!("{} {}", c.id, c.inputs)).collect();
        assert!(bad.is_empty(), "{bad:?}");
    }
}
