use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stgroup::chevalley::MicroweightRep;
use stgroup::ring::{ideal_member, parse_ideal, Elem, Ring, RingDescriptor, RingHom};
use stgroup::rootsys::{Root, RootSystem, RootType, Weight};
use stgroup::steinberg::{unipotent_normal_form, StWord};
use stgroup::suites::{random_word, relation_sides, torus_conjugate};
use stgroup::verify::{compare_matrices, default_rep, oracle_equal, sample_elem, Verdict};

const TYPES: [(RootType, usize); 6] = [(RootType::A, 3), (RootType::A, 4), (RootType::D, 4), (RootType::D, 5), (RootType::E, 6), (RootType::E, 7)];

fn rs_of(i: usize) -> Arc<RootSystem> {
    let (t, r) = TYPES[i % TYPES.len()];
    RootSystem::build(t, r).unwrap()
}

fn ring(s: &str) -> Ring {
    RingDescriptor::parse(s).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent(seed in any::<u64>(), which in 0usize..4) {
        let r = ring(["Zmod:25[X,X^-1]", "Zmod:6[X][Y]", "Z@loc:2", "D(Zmod:5[X],(X))"][which]);
        let e = sample_elem(&r, 3, &mut rng(seed));
        let once = r.normalize(&e).unwrap();
        prop_assert_eq!(r.normalize(&once).unwrap(), once);
    }

    #[test]
    fn homomorphisms_compose(seed in any::<u64>()) {
        let a = ring("Zmod:7");
        let ax = RingDescriptor::polynomial(&a, "X").unwrap();
        let axy = RingDescriptor::polynomial(&ax, "Y").unwrap();
        let f = RingHom::evaluation(&axy, &ax, ax.add(&ax.var(), &ax.one())).unwrap();
        let g = RingHom::evaluation(&ax, &a, a.from_i64(3)).unwrap();
        let gf = f.then(&g).unwrap();
        let mut r = rng(seed);
        for _ in 0..16 {
            let e = sample_elem(&axy, 3, &mut r);
            prop_assert_eq!(gf.apply(&e).unwrap(), g.apply(&f.apply(&e).unwrap()).unwrap());
        }
    }

    #[test]
    fn double_ring_laws(a in 0u64..25, k in 0u64..5) {
        let base = ring("Zmod:25");
        let ideal = parse_ideal(&base, "(5)").unwrap();
        let d = RingDescriptor::double(&base, ideal.clone()).unwrap();
        let delta = RingHom::diagonal(&d).unwrap();
        let x = Elem::Mod(a);
        for i in [1, 2] {
            let p = RingHom::projection(&d, i).unwrap();
            prop_assert_eq!(p.apply(&delta.apply(&x).unwrap()).unwrap(), x.clone());
        }
        let b = Elem::Mod((a + 5 * k) % 25);
        prop_assert!(ideal_member(&ideal, &base.sub(&x, &b)).unwrap());
    }

    #[test]
    fn localization_matches_fractions(a in -50i64..50, b in -50i64..50, k in 0i64..4, l in 0i64..4) {
        let z = RingDescriptor::integers();
        let loc = RingDescriptor::localization(&z, Elem::Int(BigInt::from(2))).unwrap();
        let two = loc.from_i64(2);
        let x = loc.mul(&loc.from_i64(a), &loc.pow(&two, -k).unwrap());
        let y = loc.mul(&loc.from_i64(b), &loc.pow(&two, -l).unwrap());
        let q = |n: i64, e: i64| BigRational::new(BigInt::from(n), BigInt::from(2).pow(e as u32));
        prop_assert_eq!(x == y, q(a, k) == q(b, l));
    }

    #[test]
    fn pairing_is_weyl_invariant(t in 0usize..6, labels in prop::collection::vec(-3i64..4, 7), b in any::<prop::sample::Index>(), g in any::<prop::sample::Index>()) {
        let rs = rs_of(t);
        let v = Weight(labels[..rs.rank].to_vec());
        let (beta, gamma) = (b.index(rs.num_roots()), g.index(rs.num_roots()));
        prop_assert_eq!(rs.pairing(&rs.reflect_weight(gamma, &v), rs.reflect_root(gamma, beta)), rs.pairing(&v, beta));
    }

    #[test]
    fn free_reduce_is_idempotent_and_invisible(seed in any::<u64>(), t in 0usize..3) {
        let rs = rs_of(t);
        let r = ring("Zmod:5");
        let rep = default_rep(&rs).unwrap();
        let roots: Vec<Root> = (0..rs.num_roots()).collect();
        let mut g = rng(seed);
        let a = random_word(&rs, &r, &roots, 6, &mut g);
        let b = random_word(&rs, &r, &roots, 6, &mut g);
        let w = a.concat(&b).concat(&b.inverse()).concat(&a.inverse()).concat(&a);
        let red = w.free_reduce();
        prop_assert_eq!(red.free_reduce(), red.clone());
        prop_assert_eq!(rep.eval(&red), rep.eval(&w));
        prop_assert!(red.letters.len() <= a.letters.len());
    }

    #[test]
    fn chi_is_multiplicative(seed in any::<u64>(), t in 0usize..4, node in 1usize..5) {
        let rs = rs_of(t);
        let r = ring("Zmod:5[X,X^-1]");
        let roots: Vec<Root> = (0..rs.num_roots()).collect();
        let mut g = rng(seed);
        let w = random_word(&rs, &r, &roots, 8, &mut g);
        let omega = rs.fundamental(node.min(rs.rank));
        let u = r.monomial(Elem::Mod(2), 1);
        let v = r.monomial(Elem::Mod(3), -2);
        prop_assert_eq!(w.chi(&omega, &v).unwrap().chi(&omega, &u).unwrap(), w.chi(&omega, &r.mul(&u, &v)).unwrap());
    }

    #[test]
    fn unipotent_normal_form_decides_equality(seed in any::<u64>(), m in prop::sample::select(vec!["Zmod:4", "Zmod:5"])) {
        let rs = RootSystem::build(RootType::A, 3).unwrap();
        let r = ring(m);
        let rep = MicroweightRep::new(&rs, 1).unwrap();
        let pos: Vec<Root> = (0..rs.num_roots()).filter(|&a| rs.is_positive(a)).collect();
        let mut g = rng(seed);
        let a = random_word(&rs, &r, &pos, 3, &mut g);
        // Half the time compare against a rearranged word with the same image.
        let b = if seed % 2 == 0 { random_word(&rs, &r, &pos, 3, &mut g) } else {
            let nf = unipotent_normal_form(&rep.basis, &a, &pos).unwrap();
            let mut w = StWord::empty(&rs, &r);
            for (root, c) in nf { w.push(root, c); }
            w
        };
        let same_nf = unipotent_normal_form(&rep.basis, &a, &pos).unwrap() == unipotent_normal_form(&rep.basis, &b, &pos).unwrap();
        prop_assert_eq!(same_nf, rep.eval(&a) == rep.eval(&b));
    }

    #[test]
    fn oracle_accepts_relation_consequences(seed in any::<u64>(), t in 0usize..3) {
        let rs = rs_of(t);
        let r = ring("Zmod:5");
        let rep = default_rep(&rs).unwrap();
        let roots: Vec<Root> = (0..rs.num_roots()).collect();
        let mut g = rng(seed);
        let w = random_word(&rs, &r, &roots, 8, &mut g);
        let (a, b) = (roots[(seed as usize) % roots.len()], roots[(seed as usize / 7) % roots.len()]);
        prop_assume!(a != rs.neg(b));
        let (lhs, rhs) = relation_sides(&rep, &r, a, b, &Elem::Mod(2), &Elem::Mod(3));
        let rel = lhs.concat(&rhs.inverse());
        let v = oracle_equal(&rep, &w, &w.concat(&rel.conj_by(&w))).unwrap();
        prop_assert_eq!(v.verdict, Verdict::Equal);
    }

    #[test]
    fn oracle_discriminates_with_witness(seed in any::<u64>(), t in 0usize..3) {
        let rs = rs_of(t);
        let r = ring("Zmod:5");
        let rep = default_rep(&rs).unwrap();
        let pos: Vec<Root> = (0..rs.num_roots()).filter(|&a| rs.is_positive(a)).collect();
        let mut g = rng(seed);
        let a = random_word(&rs, &r, &pos, 4, &mut g);
        let b = random_word(&rs, &r, &pos, 4, &mut g);
        let na = unipotent_normal_form(&rep.basis, &a, &pos).unwrap();
        let nb = unipotent_normal_form(&rep.basis, &b, &pos).unwrap();
        prop_assume!(na != nb);
        let v = oracle_equal(&rep, &a, &b).unwrap();
        prop_assert_eq!(v.verdict, Verdict::NotEqual);
        let (i, j) = v.witness.expect("NotEqual carries a witness");
        let (ma, mb) = (rep.eval(&a), rep.eval(&b));
        prop_assert_ne!(ma.get(i, j), mb.get(i, j));
    }
}

#[test]
fn special_subsets_partition_the_roots() {
    for t in 0..TYPES.len() {
        let rs = rs_of(t);
        for k in 1..=rs.rank {
            let (plus, delta, minus) = rs.special_subsets(k);
            let mut all: Vec<Root> = plus.iter().chain(&delta).chain(&minus).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..rs.num_roots()).collect::<Vec<_>>(), "{} k={k}", rs.label());
        }
    }
}

#[test]
fn highest_root_is_the_unique_maximum() {
    for t in 0..TYPES.len() {
        let rs = rs_of(t);
        let top = rs.highest_root();
        for b in (0..rs.num_roots()).filter(|&b| rs.is_positive(b) && b != top) {
            assert!((0..rs.rank).all(|i| rs.roots[top][i] >= rs.roots[b][i]));
            assert!(rs.height(b) < rs.height(top));
        }
    }
}

#[test]
fn marked_node_has_abelian_radical() {
    for (t, r) in [(RootType::D, 4), (RootType::D, 5), (RootType::E, 6), (RootType::E, 7)] {
        let rs = RootSystem::build(t, r).unwrap();
        let k = rs.extended_marks().unwrap().k;
        let (plus, _, _) = rs.special_subsets(k);
        assert!(plus.iter().all(|&a| rs.coeff(a, k) == 1));
        for &a in &plus {
            for &b in &plus {
                assert!(rs.sum(a, b).is_none());
            }
        }
    }
}

#[test]
fn torus_fixes_orthogonal_root_elements() {
    let r = ring("Zmod:5[X,X^-1]");
    for t in 0..TYPES.len() {
        let rs = rs_of(t);
        let rep = default_rep(&rs).unwrap();
        for node in 1..=rs.rank {
            let omega = rs.fundamental(node);
            let h = rep.weight_torus(&r, &omega, &r.var()).unwrap();
            for g in (0..rs.num_roots()).filter(|&g| rs.pairing(&omega, g) == 0) {
                let m = rep.eval(&StWord::x(&rs, &r, g, r.one()));
                assert_eq!(torus_conjugate(&h, &m), m);
            }
        }
    }
}

/// Central torus elements `∏ h_{α_i}(g^{e_i})` solve `Σ_i e_i·C_ij ≡ 0` mod
/// `p − 1`; the representation must move every nontrivial one.
#[test]
fn representation_is_faithful_on_the_centre() {
    for (p, gen) in [(5u64, 2u64), (7, 3)] {
        let r = RingDescriptor::integers_mod(p).unwrap();
        for t in 0..TYPES.len() {
            let rs = rs_of(t);
            let rep = default_rep(&rs).unwrap();
            let q = (p - 1) as i64;
            let n = rs.rank;
            let mut found = 0;
            let mut e = vec![0i64; n];
            loop {
                let central = (0..n).all(|j| (0..n).map(|i| e[i] * rs.cartan[i][j]).sum::<i64>().rem_euclid(q) == 0);
                if central && e.iter().any(|&x| x != 0) {
                    let tt: Vec<Elem> = e.iter().map(|&x| r.pow_nat(&Elem::Mod(gen), x as u64)).collect();
                    let m = rep.eval(&rep.torus_word(&r, &tt).unwrap());
                    assert!(!m.is_identity(), "{} over F{p}: {e:?} acts trivially", rs.label());
                    for a in 0..rs.num_roots() {
                        let x = rep.eval(&StWord::x(&rs, &r, a, r.one()));
                        assert_eq!(m.mul(&x), x.mul(&m), "not central");
                    }
                    found += 1;
                }
                // Odometer over (ℤ/q)^n.
                let mut i = 0;
                while i < n {
                    e[i] += 1;
                    if e[i] < q {
                        break;
                    }
                    e[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
            // The centre has order gcd(|Z|, p − 1) − 1 nontrivial elements.
            let z = match (rs.ty, rs.rank) {
                (RootType::A, l) => (l + 1) as i64,
                (RootType::E, 6) => 3,
                _ => 2,
            };
            let expected = if rs.ty == RootType::D {
                // ℤ/2 × ℤ/2 for even rank, ℤ/4 for odd.
                if rs.rank % 2 == 0 { 4 } else { num_integer::gcd(4, q) }
            } else {
                num_integer::gcd(z, q)
            };
            assert_eq!(found as i64, expected - 1, "{} over F{p}", rs.label());
        }
    }
}

#[test]
fn diagonal_torus_commutators_vanish() {
    let r = ring("Zmod:7");
    let rs = RootSystem::build(RootType::E, 6).unwrap();
    let rep = default_rep(&rs).unwrap();
    for a in 0..rs.rank {
        for b in 0..rs.rank {
            let ha = StWord::h(&rs, &r, rs.simple(a + 1), &Elem::Mod(3)).unwrap();
            let hb = StWord::h(&rs, &r, rs.simple(b + 1), &Elem::Mod(5)).unwrap();
            assert!(rep.eval(&StWord::commutator(&ha, &hb)).is_identity());
        }
    }
}

#[test]
fn matrix_comparison_reports_first_difference() {
    let rs = RootSystem::build(RootType::A, 3).unwrap();
    let r = ring("Zmod:5");
    let rep = default_rep(&rs).unwrap();
    let a = rep.eval(&StWord::x(&rs, &r, 0, Elem::Mod(1)));
    let b = rep.eval(&StWord::x(&rs, &r, 0, Elem::Mod(2)));
    assert_eq!(compare_matrices(&a, &a).verdict, Verdict::Equal);
    let v = compare_matrices(&a, &b);
    assert_eq!(v.verdict, Verdict::NotEqual);
    assert!(v.witness.is_some());
}
