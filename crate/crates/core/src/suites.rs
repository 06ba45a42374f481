//! Suites over finite base rings: Steinberg relations, Weyl conjugation,
//! decompositions, the weight-orbit elements `w_{λ,u}`, symbols and `χ`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chevalley::{GroupMatrix, MicroweightRep};
use crate::ring::{units, Elem, Ring, RingDescriptor, RingHom};
use crate::rootsys::{Root, RootSystem, RootType};
use crate::steinberg::{root_name, symbol_normal_form, word_from_coords, StWord, SymbolExpr};
use crate::verify::{
    compare_matrices, default_rep, justification_for, sample_elem, CaseRecord, Justification, OracleVerdict, SuiteOutcome, SuiteParams, Verdict,
    VerifyError, EXHAUSTIVE_BOUND,
};

fn finite_elements(ring: &Ring) -> Result<Vec<Elem>, VerifyError> {
    ring.elements().ok_or_else(|| VerifyError::NotFinite(ring.to_string()))
}

fn unit_elements(ring: &Ring) -> Result<Vec<Elem>, VerifyError> {
    Ok(finite_elements(ring)?.into_iter().filter(|e| ring.is_unit(e)).collect())
}

/// All instances when there are at most `EXHAUSTIVE_BOUND` of them,
/// otherwise `cases` seeded draws. Returns the exhaustive flag too.
fn enumerate_or_sample<T: Clone>(all: Vec<T>, cases: usize, seed: u64) -> (bool, Vec<T>) {
    if all.len() as u64 <= EXHAUSTIVE_BOUND {
        (true, all)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (false, (0..cases).map(|_| all.choose(&mut rng).unwrap().clone()).collect())
    }
}

/// `(R1)` for `α = β`, `(R2)` when `α + β` is a root, `(R3)` otherwise.
pub fn relation_sides(rep: &MicroweightRep, ring: &Ring, a: Root, b: Root, s: &Elem, t: &Elem) -> (StWord, StWord) {
    let rs = &rep.rs;
    let xa = StWord::x(rs, ring, a, s.clone());
    let xb = StWord::x(rs, ring, b, t.clone());
    if a == b {
        return (xa.concat(&xb), StWord::x(rs, ring, a, ring.add(s, t)));
    }
    let lhs = StWord::commutator(&xa, &xb);
    let rhs = match rs.sum(a, b) {
        Some(g) => StWord::x(rs, ring, g, ring.mul(&ring.from_i64(rep.basis.n(a, b)), &ring.mul(s, t))),
        None => StWord::empty(rs, ring),
    };
    (lhs, rhs)
}

pub fn relations(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let rep = default_rep(&rs)?;
    let ring = p.parse_ring()?;
    let elems = finite_elements(&ring)?;
    let nr = rs.num_roots();
    let mut all = Vec::new();
    for a in 0..nr {
        for b in 0..nr {
            if b == rs.neg(a) {
                continue;
            }
            for s in 0..elems.len() {
                for t in 0..elems.len() {
                    all.push((a, b, s, t));
                }
            }
        }
    }
    let (exhaustive, inst) = enumerate_or_sample(all, p.cases, p.seed);
    let cases = inst
        .par_iter()
        .map(|&(a, b, si, ti)| {
            let (s, t) = (&elems[si], &elems[ti]);
            let (lhs, rhs) = relation_sides(&rep, &ring, a, b, s, t);
            let id = if a == b {
                "R1"
            } else if rs.sum(a, b).is_some() {
                "R2"
            } else {
                "R3"
            };
            let v = compare_matrices(&rep.eval(&lhs), &rep.eval(&rhs));
            let inputs = format!("{},{},a={},b={}", root_name(&rs, a), root_name(&rs, b), ring.render(s), ring.render(t));
            CaseRecord::from_oracle(id, inputs, &v)
        })
        .collect();
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring", "cases"]), exhaustive, cases })
}

/// `^{w_α(u)}x_β(b) = x_{s_α β}(η·u^{−⟨β,α⟩}·b)` with `η` from the basis.
pub fn matsumoto(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let rep = default_rep(&rs)?;
    let ring = p.parse_ring()?;
    let elems = finite_elements(&ring)?;
    let us = unit_elements(&ring)?;
    let nr = rs.num_roots();
    let mut all = Vec::new();
    for a in 0..nr {
        for b in 0..nr {
            for ui in 0..us.len() {
                for bi in 0..elems.len() {
                    all.push((a, b, ui, bi));
                }
            }
        }
    }
    let (exhaustive, inst) = enumerate_or_sample(all, p.cases, p.seed);
    let cases = inst
        .par_iter()
        .map(|&(a, b, ui, bi)| {
            let (u, c) = (&us[ui], &elems[bi]);
            let w = StWord::w(&rs, &ring, a, u).expect("unit");
            let lhs = StWord::x(&rs, &ring, b, c.clone()).conj_by(&w);
            let eta = ring.from_i64(rep.basis.eta(a, b));
            let scale = ring.pow(u, -rs.root_pairing(b, a)).expect("unit");
            let rhs = StWord::x(&rs, &ring, rs.reflect_root(a, b), ring.mul(&eta, &ring.mul(&scale, c)));
            let v = compare_matrices(&rep.eval(&lhs), &rep.eval(&rhs));
            let inputs = format!("{},{},u={},b={}", root_name(&rs, a), root_name(&rs, b), ring.render(u), ring.render(c));
            CaseRecord::from_oracle("conjugation", inputs, &v)
        })
        .collect();
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring", "cases"]), exhaustive, cases })
}

pub fn random_word<R: Rng>(rs: &Arc<RootSystem>, ring: &Ring, roots: &[Root], len: usize, rng: &mut R) -> StWord {
    let mut w = StWord::empty(rs, ring);
    for _ in 0..len {
        let r = roots[rng.gen_range(0..roots.len())];
        w.push(r, sample_elem(ring, 0, rng));
    }
    w
}

fn case_with(id: &str, inputs: String, v: &OracleVerdict, ok: bool, why: &str) -> CaseRecord {
    if ok {
        CaseRecord::from_oracle(id, inputs, v)
    } else {
        let mut c = CaseRecord::from_oracle(id, inputs, v);
        c.verdict = Verdict::NotEqual;
        c.with_note(why)
    }
}

/// Bruhat, Gauss and Chevalley–Matsumoto round trips on seeded random
/// products of generators, plus stability of the Weyl class of a Bruhat
/// decomposition under re-decomposition and under `U⁺` translates.
pub fn decompose(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let rep = default_rep(&rs)?;
    let ring = p.parse_ring()?;
    let (pchar, _) = ring.local_residue().ok_or_else(|| VerifyError::UnsupportedRing(ring.to_string()))?;
    let residue = RingDescriptor::integers_mod(pchar)?;
    let red = RingHom::reduction(&ring, &residue)?;
    let all_roots: Vec<Root> = (0..rs.num_roots()).collect();
    let positive: Vec<Root> = all_roots.iter().copied().filter(|&a| rs.is_positive(a)).collect();
    let (plus, delta, minus) = rs.special_subsets(rep.k);
    let parabolic: Vec<Root> = plus.iter().chain(delta.iter()).copied().collect();
    const WORD_LEN: usize = 20;

    let mut cases: Vec<CaseRecord> = (0..p.cases)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(i as u64));
            let mut out = Vec::new();
            let word = random_word(&rs, &ring, &all_roots, WORD_LEN, &mut rng);
            let g = rep.eval(&word);
            let inputs = word.render();

            match rep.bruhat(&g) {
                Ok(b) => {
                    let back = b.reconstruct(&rep).expect("torus entries are units");
                    let level_ok = b.level.map(&red).map(|m| m.is_identity()).unwrap_or(false);
                    let v = compare_matrices(&back, &g);
                    out.push(case_with("bruhat", inputs.clone(), &v, level_ok, "level factor is not 1 modulo the maximal ideal"));
                    let again = rep.bruhat(&g).map(|b2| b2.weyl_word == b.weyl_word).unwrap_or(false);
                    let u1 = rep.eval(&random_word(&rs, &ring, &positive, 6, &mut rng));
                    let v1 = rep.eval(&random_word(&rs, &ring, &positive, 6, &mut rng));
                    let shifted = u1.mul(&g).mul(&v1);
                    let stable = again && rep.bruhat(&shifted).map(|b3| rep.weyl_perm(&b3.weyl_word) == rep.weyl_perm(&b.weyl_word)).unwrap_or(false);
                    out.push(CaseRecord::predicate("bruhat-weyl-class", inputs.clone(), &ring, stable, None));
                }
                Err(e) => out.push(CaseRecord::predicate("bruhat", inputs.clone(), &ring, false, Some(e.to_string()))),
            }

            match rep.gauss(&g, &mut rng, 200) {
                Ok(gs) => {
                    let v = compare_matrices(&rep.eval(&gs.word(&rep, &ring).expect("unit torus")), &g);
                    out.push(CaseRecord::from_oracle("gauss", inputs.clone(), &v));
                }
                Err(e) => out.push(CaseRecord::predicate("gauss", inputs.clone(), &ring, false, Some(e.to_string()))),
            }

            let lower = random_word(&rs, &ring, &minus, WORD_LEN / 2, &mut rng);
            let par = random_word(&rs, &ring, &parabolic, WORD_LEN / 2, &mut rng);
            let h = rep.eval(&lower.concat(&par));
            let cm_inputs = lower.concat(&par).render();
            match rep.chevalley_matsumoto(&h) {
                Ok(cm) => {
                    let back = rep.eval(&word_from_coords(&rs, &ring, &cm.u_minus)).mul(&cm.stab);
                    let top = rep.top();
                    let line_ok = ring.is_unit(cm.stab.get(top, top)) && (0..h.n).all(|r| r == top || cm.stab.get(r, top).is_zero());
                    let v = compare_matrices(&back, &h);
                    out.push(case_with("chevalley-matsumoto", cm_inputs, &v, line_ok, "stabilizer part moves the v⁺ line"));
                }
                Err(e) => out.push(CaseRecord::predicate("chevalley-matsumoto", cm_inputs, &ring, false, Some(e.to_string()))),
            }
            out
        })
        .collect();
    // Fixed presentation order: all Bruhat cases, then Weyl class, Gauss, CM.
    let order = ["bruhat", "bruhat-weyl-class", "gauss", "chevalley-matsumoto"];
    cases.sort_by_key(|c| order.iter().position(|o| *o == c.id).unwrap_or(order.len()));
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring", "cases"]), exhaustive: false, cases })
}

/// Largest factor count of `w_{λ,u}` over the orbit.
pub fn orbit_factor_bound(rs: &RootSystem) -> usize {
    match (rs.ty, rs.rank) {
        (RootType::A, _) => 1,
        (RootType::D, _) | (RootType::E, 6) => 2,
        _ => 3,
    }
}

/// `ρ(w_{λ,u})·v^λ = u⁻¹·v⁺` for every weight `λ` of the orbit and every
/// unit `u`, with the factor-count bound, orthogonality and `Σ⁻` checks.
pub fn orbit(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let rep = default_rep(&rs)?;
    let ring = p.parse_ring()?;
    let us = unit_elements(&ring)?;
    let (_, _, minus) = rs.special_subsets(rep.k);
    let bound = orbit_factor_bound(&rs);
    let top = rep.top();
    let inst: Vec<(usize, usize)> = rep.blocks[0].clone().flat_map(|l| (0..us.len()).map(move |u| (l, u))).collect();
    let results: Vec<(CaseRecord, usize)> = inst
        .par_iter()
        .map(|&(lidx, ui)| {
            let u = &us[ui];
            let lambda = &rep.weights[lidx];
            let inputs = format!("lambda={:?},u={}", lambda.0, ring.render(u));
            let ws = match rep.w_lambda_u(&ring, lambda, u) {
                Ok(ws) => ws,
                Err(e) => return (CaseRecord::predicate("w-lambda-u", inputs, &ring, false, Some(e.to_string())), 0),
            };
            let is_top = lidx == top;
            // The h-form `w_β(u)·w_β(−1)` counts as one factor.
            let count = if is_top { 1 } else { ws.len() };
            let roots_ok = ws.iter().all(|(b, _)| minus.contains(b))
                && ws.iter().enumerate().all(|(i, (b, _))| ws[i + 1..].iter().all(|(c, _)| rs.root_pairing(*b, *c) == 0))
                || is_top;
            let m = rep.eval(&rep.w_product_word(&ring, &ws).expect("units"));
            let uinv = ring.inv(u).expect("unit");
            let expected = (0..m.n).all(|r| if r == top { *m.get(r, lidx) == uinv } else { m.get(r, lidx).is_zero() });
            let moves = is_top || !rep.stabilizes(&m, lidx);
            let ok = expected && roots_ok && count <= bound && moves;
            let note = (!ok).then(|| format!("factors={count}, image_ok={expected}, roots_ok={roots_ok}"));
            (CaseRecord::predicate("w-lambda-u", inputs, &ring, ok, note), count)
        })
        .collect();
    let max_seen = results.iter().map(|(_, c)| *c).max().unwrap_or(0);
    let mut cases: Vec<CaseRecord> = results.into_iter().map(|(c, _)| c).collect();
    cases.push(CaseRecord::predicate(
        "factor-bound-attained",
        format!("bound={bound},max={max_seen}"),
        &ring,
        max_seen == bound,
        None,
    ));
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring"]), exhaustive: true, cases })
}

fn matrix_verdict(ring: &Ring, ok: bool) -> OracleVerdict {
    let j = justification_for(ring);
    let verdict = match (ok, j) {
        (false, _) => Verdict::NotEqual,
        (true, Justification::MatrixLevel) => Verdict::MatrixEqualOnly,
        (true, _) => Verdict::Equal,
    };
    OracleVerdict { verdict, justification: j, witness: None }
}

/// Fixed rational units for the tame-symbol model.
fn rational_samples(q: &Ring) -> Vec<Elem> {
    ["-1", "2", "3", "-6", "5/7", "1/2", "-9/4", "10", "7/3"].iter().map(|s| q.parse_elem(s).unwrap()).collect()
}

/// Symbol identities: `ρ{u,v} = 1` and `ρ[h_α(u), h_β(v)] = 1` over the base
/// field, and normal-form identities (antisymmetry, bimultiplicativity,
/// `{u,1} = 1`, `{u, 1−u} = 1`) over the base field and over `ℚ`.
pub fn symbols(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let rep = default_rep(&rs)?;
    let ring = p.parse_ring()?;
    let us = unit_elements(&ring)?;
    let mut cases = Vec::new();
    let id = rep.identity(&ring);

    for u in &us {
        for v in &us {
            let w = StWord::symbol(&rs, &ring, u, v)?;
            let v_ = compare_matrices(&rep.eval(&w), &id);
            cases.push(CaseRecord::from_oracle("symbol-kernel", format!("u={},v={}", ring.render(u), ring.render(v)), &v_));
        }
    }
    for i in 1..=rs.rank {
        for j in 1..=rs.rank {
            for u in &us {
                for v in &us {
                    let ha = StWord::h(&rs, &ring, rs.simple(i), u)?;
                    let hb = StWord::h(&rs, &ring, rs.simple(j), v)?;
                    let v_ = compare_matrices(&rep.eval(&StWord::commutator(&ha, &hb)), &id);
                    cases.push(CaseRecord::from_oracle("h-commute", format!("i={i},j={j},u={},v={}", ring.render(u), ring.render(v)), &v_));
                }
            }
        }
    }

    let q = RingDescriptor::rationals();
    let qs = rational_samples(&q);
    for (r, vals) in [(&ring, &us), (&q, &qs)] {
        let nf = |e: &SymbolExpr| symbol_normal_form(e);
        let sym = |a: &Elem, b: &Elem| SymbolExpr::symbol(r, a.clone(), b.clone());
        let mut push = |id: &str, inputs: String, lhs: SymbolExpr, rhs: SymbolExpr| {
            let ok = matches!((nf(&lhs), nf(&rhs)), (Ok(a), Ok(b)) if a == b);
            cases.push(CaseRecord::from_oracle(id, inputs, &matrix_verdict(r, ok)));
        };
        for a in vals.iter() {
            push("symbol-unit", format!("u={}", r.render(a)), sym(a, &r.one()), SymbolExpr::new(r));
            let one_minus = r.sub(&r.one(), a);
            if r.is_unit(&one_minus) {
                push("symbol-steinberg", format!("u={}", r.render(a)), sym(a, &one_minus), SymbolExpr::new(r));
            }
            for b in vals.iter() {
                let inputs = format!("u={},v={}", r.render(a), r.render(b));
                push("symbol-antisymmetric", inputs.clone(), sym(a, b).mul(&sym(b, a)), SymbolExpr::new(r));
                for c in vals.iter() {
                    let inputs = format!("u={},s={},t={}", r.render(a), r.render(b), r.render(c));
                    push("symbol-bimultiplicative", inputs, sym(a, &r.mul(b, c)), sym(a, b).mul(&sym(a, c)));
                }
            }
        }
    }
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring"]), exhaustive: true, cases })
}

/// Conjugation by the weight torus `H_ω(u)` on a matrix.
pub fn torus_conjugate(h: &GroupMatrix, m: &GroupMatrix) -> GroupMatrix {
    let ring = &m.ring;
    let mut out = m.clone();
    for r in 0..m.n {
        for c in 0..m.n {
            let x = m.get(r, c);
            if !x.is_zero() {
                let hc = ring.inv(h.get(c, c)).expect("torus entries are units");
                out.set(r, c, ring.mul(&ring.mul(h.get(r, r), x), &hc));
            }
        }
    }
    out
}

/// `ρ(w_α(u)⁻¹·χ_{ω,X}(w_α(u))) = ρ(h_α(X^{⟨ω,α⟩})⁻¹)` exhaustively over
/// roots, fundamental weights and units of the base; then
/// `ρ(χ_{ω,u}(w)) = H_ω(u)·ρ(w)·H_ω(u)⁻¹` on seeded random words.
pub fn chi(p: &SuiteParams) -> Result<SuiteOutcome, VerifyError> {
    let rs = p.root_system()?;
    let rep = default_rep(&rs)?;
    let base = p.parse_ring()?;
    let us = unit_elements(&base)?;
    let lr = RingDescriptor::laurent(&base, "X")?;
    let x = lr.var();
    let mut inst = Vec::new();
    for a in 0..rs.num_roots() {
        for w in 1..=rs.rank {
            for ui in 0..us.len() {
                inst.push((a, w, ui));
            }
        }
    }
    let mut cases: Vec<CaseRecord> = inst
        .par_iter()
        .map(|&(a, wi, ui)| {
            let omega = rs.fundamental(wi);
            let u = lr.constant(us[ui].clone());
            let wa = StWord::w(&rs, &lr, a, &u).expect("unit");
            let lhs = wa.inverse().concat(&wa.chi(&omega, &x).expect("X is a unit"));
            let e = rs.pairing(&omega, a);
            let rhs = StWord::h(&rs, &lr, a, &lr.pow(&x, e).unwrap()).expect("unit").inverse();
            let v = compare_matrices(&rep.eval(&lhs), &rep.eval(&rhs));
            CaseRecord::from_oracle("w-chi", format!("{},omega={wi},u={}", root_name(&rs, a), base.render(&us[ui])), &v)
        })
        .collect();

    let all_roots: Vec<Root> = (0..rs.num_roots()).collect();
    let unitset = units(&lr)?;
    let random: Vec<CaseRecord> = (0..p.cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(i as u64));
            let mut w = StWord::empty(&rs, &lr);
            for _ in 0..12 {
                let r = all_roots[rng.gen_range(0..all_roots.len())];
                w.push(r, sample_elem(&lr, 1, &mut rng));
            }
            let wi = rng.gen_range(1..=rs.rank);
            let omega = rs.fundamental(wi);
            let u = unitset.sample(&mut rng, 2);
            let h = rep.weight_torus(&lr, &omega, &u).expect("unit");
            let lhs = rep.eval(&w.chi(&omega, &u).expect("unit"));
            let rhs = torus_conjugate(&h, &rep.eval(&w));
            let v = compare_matrices(&lhs, &rhs);
            CaseRecord::from_oracle("chi-torus", format!("omega={wi},u={},w={}", lr.render(&u), w.render()), &v)
        })
        .collect();
    cases.extend(random);
    Ok(SuiteOutcome { params: p.to_map(&["type", "ring", "cases"]), exhaustive: true, cases })
}
