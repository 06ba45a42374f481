//! Root data and suite sizes recomputed from scratch, independently of the
//! library's own enumeration, plus CLI determinism.

use std::collections::BTreeSet;

use stgroup::rootsys::{RootSystem, RootType};
use stgroup::verify::{run_suite, suite_names, SuiteParams};

/// Dynkin edges in Bourbaki numbering (1-based).
fn edges(t: RootType, n: usize) -> Vec<(usize, usize)> {
    match t {
        RootType::A => (1..n).map(|i| (i, i + 1)).collect(),
        RootType::D => (1..n - 1).map(|i| (i, i + 1)).chain([(n - 2, n)]).collect(),
        RootType::E => [(1, 3), (3, 4), (4, 5), (2, 4)].into_iter().chain((5..n).map(|i| (i, i + 1))).collect(),
    }
}

fn cartan(t: RootType, n: usize) -> Vec<Vec<i64>> {
    let mut c = vec![vec![0; n]; n];
    for i in 0..n {
        c[i][i] = 2;
    }
    for (a, b) in edges(t, n) {
        c[a - 1][b - 1] = -1;
        c[b - 1][a - 1] = -1;
    }
    c
}

fn pair(c: &[Vec<i64>], a: &[i64], b: &[i64]) -> i64 {
    let n = c.len();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[i] * b[j] * c[i][j]).sum()
}

fn reflect(c: &[Vec<i64>], a: &[i64], b: &[i64]) -> Vec<i64> {
    let k = pair(c, b, a);
    b.iter().zip(a).map(|(x, y)| x - k * y).collect()
}

/// All roots as the closure of the simple roots under simple reflections.
fn roots(c: &[Vec<i64>]) -> BTreeSet<Vec<i64>> {
    let n = c.len();
    let simple: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let mut seen: BTreeSet<Vec<i64>> = simple.iter().cloned().collect();
    let mut todo: Vec<Vec<i64>> = simple.clone();
    while let Some(r) = todo.pop() {
        for s in &simple {
            let x = reflect(c, s, &r);
            if seen.insert(x.clone()) {
                todo.push(x);
            }
        }
    }
    seen
}

/// Rank-3 root subsystems with 12 roots are exactly the A3 subsystems in
/// simply-laced types (A2×A1 has 8 roots, A1³ has 6).
fn a3_count(c: &[Vec<i64>]) -> usize {
    let all: Vec<Vec<i64>> = roots(c).into_iter().collect();
    let pos: Vec<&Vec<i64>> = all.iter().filter(|r| r.iter().all(|&x| x >= 0)).collect();
    let mut found: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            for k in j + 1..pos.len() {
                let gens = [pos[i], pos[j], pos[k]];
                let mut set: BTreeSet<Vec<i64>> = gens.iter().map(|g| (*g).clone()).collect();
                let mut todo: Vec<Vec<i64>> = set.iter().cloned().collect();
                while let Some(r) = todo.pop() {
                    if set.len() > 12 {
                        break;
                    }
                    for g in gens {
                        let x = reflect(c, g, &r);
                        if set.insert(x.clone()) {
                            todo.push(x);
                        }
                    }
                }
                if set.len() == 12 {
                    found.insert(set.into_iter().collect());
                }
            }
        }
    }
    found.len()
}

const TYPES: [(RootType, usize, usize, usize); 6] = [
    // (type, rank, |Φ|, number of A3 subsystems)
    (RootType::A, 3, 12, 1),
    (RootType::A, 4, 20, 5),
    (RootType::D, 4, 24, 12),
    (RootType::D, 5, 40, 50),
    (RootType::E, 6, 72, 270),
    (RootType::E, 7, 126, 1260),
];

#[test]
fn cartan_matrices_match_dynkin_diagrams() {
    for (t, n, _, _) in TYPES {
        let rs = RootSystem::build(t, n).unwrap();
        assert_eq!(rs.cartan, cartan(t, n), "{}", rs.label());
    }
}

#[test]
fn root_sets_match_reflection_closure() {
    for (t, n, count, _) in TYPES {
        let rs = RootSystem::build(t, n).unwrap();
        let mine: BTreeSet<Vec<i64>> = rs.roots.iter().cloned().collect();
        let oracle = roots(&cartan(t, n));
        assert_eq!(oracle.len(), count);
        assert_eq!(mine, oracle, "{}", rs.label());
    }
}

#[test]
fn a3_subsystem_counts() {
    for (t, n, _, a3) in TYPES {
        let rs = RootSystem::build(t, n).unwrap();
        assert_eq!(a3_count(&cartan(t, n)), a3, "oracle {}", rs.label());
        assert_eq!(rs.a3_subsystems().len(), a3, "library {}", rs.label());
    }
}

#[test]
fn e7_extended_marks() {
    let rs = RootSystem::build(RootType::E, 7).unwrap();
    let m = rs.extended_marks().unwrap();
    assert_eq!((m.j, m.k), (1, 7));
}

#[test]
fn microweight_orbit_sizes() {
    for (t, n, dim) in [(RootType::A, 4, 5), (RootType::D, 4, 8), (RootType::D, 5, 10), (RootType::E, 6, 27), (RootType::E, 7, 56)] {
        let rs = RootSystem::build(t, n).unwrap();
        let k = if (t, n) == (RootType::E, 7) { 7 } else { 1 };
        assert_eq!(rs.weight_orbit(&rs.fundamental(k)).unwrap().len(), dim, "{}", rs.label());
        let rep = stgroup::chevalley::MicroweightRep::new(&rs, k).unwrap();
        assert_eq!(rep.blocks[0].len(), dim);
    }
}

/// Exhaustive suites enumerate `|Φ|·(|Φ| − 1)·|A|²` relation instances and
/// `|Φ|²·|A^×|·|A|` conjugation instances.
#[test]
fn exhaustive_suite_sizes() {
    for (ty, roots) in [("A3", 12usize), ("D4", 24)] {
        let p = SuiteParams { root_type: ty.into(), ring: "Zmod:5".into(), ..SuiteParams::default() };
        let rel = run_suite("relations", &p, true).unwrap();
        assert!(rel.exhaustive);
        assert_eq!(rel.cases.len(), roots * (roots - 1) * 25);
        let mat = run_suite("matsumoto", &p, true).unwrap();
        assert_eq!(mat.cases.len(), roots * roots * 4 * 5);
        assert_eq!(mat.summary.fail, 0);
    }
}

#[test]
fn tulenbaev_suite_over_f5() {
    let p = SuiteParams { root_type: "A3".into(), n: 4, cases: 40, ..SuiteParams::default() };
    for suite in ["tulenbaev", "sigma-pair"] {
        let r = run_suite(suite, &p, true).unwrap();
        assert_eq!((r.summary.fail, r.summary.matrix_only), (0, 0), "{suite}");
    }
}

#[test]
fn cli_output_is_reproducible() {
    let argv: Vec<String> =
        "stgroup verify --suite decompose --type A3 --ring Zmod:5 --cases 20 --reproducible".split_whitespace().map(String::from).collect();
    let (mut a, mut b) = (String::new(), String::new());
    assert_eq!(stgroup::cli::run(&argv, &mut a), 0);
    assert_eq!(stgroup::cli::run(&argv, &mut b), 0);
    assert_eq!(a, b);
    let list: Vec<String> = ["stgroup", "verify", "--list-suites"].iter().map(|s| s.to_string()).collect();
    let mut out = String::new();
    stgroup::cli::run(&list, &mut out);
    assert_eq!(out.lines().collect::<Vec<_>>(), suite_names());
}
