//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Every check is exact; matrix-only verdicts count as
//! holding under the representation.

use std::process::ExitCode;
use std::time::Instant;

use stgroup::verify::{run_suite, SuiteParams, Verdict, VerificationReport};

struct Check {
    ok: bool,
    detail: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { ok: true, detail: Vec::new() }
    }

    fn suite(&mut self, name: &str, p: SuiteParams, pred: impl Fn(&VerificationReport) -> Result<(), String>) {
        let tag = match name {
            "tulenbaev" | "sigma-pair" => format!("{name} n={} {}", p.n, p.ring),
            _ => format!("{name} {} {}", p.root_type, p.ring),
        };
        match run_suite(name, &p, true) {
            Ok(r) => {
                let s = &r.summary;
                let verdict = if r.summary.fail > 0 { Err(format!("{} failing cases", s.fail)) } else { pred(&r) };
                if let Err(why) = &verdict {
                    self.ok = false;
                    self.detail.push(format!("{tag}: {why}"));
                    if let Some(c) = r.cases.iter().find(|c| c.verdict == Verdict::NotEqual) {
                        self.detail.push(format!("  first failure {} {} {:?}", c.id, c.inputs, c.note));
                    }
                } else {
                    self.detail.push(format!("{tag}: pass={} matrix_only={}", s.pass, s.matrix_only));
                }
            }
            Err(e) => {
                self.ok = false;
                self.detail.push(format!("{tag}: error {e}"));
            }
        }
    }
}

fn params(ty: &str, ring: &str) -> SuiteParams {
    SuiteParams { root_type: ty.into(), ring: ring.into(), ..SuiteParams::default() }
}

fn linear(n: usize, ring: &str, cases: usize) -> SuiteParams {
    SuiteParams { root_type: format!("A{}", n - 1), ring: ring.into(), n, cases, ..SuiteParams::default() }
}

fn exhaustive(r: &VerificationReport) -> Result<(), String> {
    if r.exhaustive {
        Ok(())
    } else {
        Err("run was sampled, not exhaustive".into())
    }
}

fn all_equal(r: &VerificationReport) -> Result<(), String> {
    if r.summary.matrix_only == 0 {
        Ok(())
    } else {
        Err(format!("{} cases only matrix-equal", r.summary.matrix_only))
    }
}

fn ids_at_least(r: &VerificationReport, ids: &[&str], min: usize) -> Result<(), String> {
    for id in ids {
        let k = r.cases.iter().filter(|c| c.id == *id).count();
        if k < min {
            return Err(format!("{id}: {k} instances, need {min}"));
        }
    }
    Ok(())
}

const ADE: [&str; 5] = ["A4", "D4", "D5", "E6", "E7"];
const DE: [&str; 4] = ["D4", "D5", "E6", "E7"];

fn criterion(n: usize) -> (&'static str, Check) {
    let mut c = Check::new();
    let name = match n {
        1 => {
            for ty in ADE {
                c.suite("relations", params(ty, "Zmod:5"), |r| exhaustive(r).and_then(|_| all_equal(r)));
            }
            "relations R1-R3 exhaustive over Z/5"
        }
        2 => {
            for ty in ADE {
                c.suite("matsumoto", params(ty, "Zmod:5"), |r| exhaustive(r).and_then(|_| all_equal(r)));
            }
            "Weyl conjugation law exhaustive over F5"
        }
        3 => {
            for ty in DE {
                c.suite("allcock", params(ty, "Zmod:5"), exhaustive);
                c.suite("simpler", params(ty, "Zmod:5"), exhaustive);
            }
            "affine and simpler relation lists over (Z/5)[X,X^-1]"
        }
        4 => {
            for ty in ["D4", "E6", "E7"] {
                c.suite("sigma", params(ty, "Zmod:5"), exhaustive);
            }
            "sigma amalgam checks, deg <= 2 over Z/5"
        }
        5 => {
            use stgroup::tulenbaev::{XSMALL_IDS, XY_IDS};
            for n in [4, 5, 6] {
                c.suite("tulenbaev", linear(n, "Zmod:5", 500), |r| all_equal(r).and_then(|_| ids_at_least(r, XSMALL_IDS, 500)).and_then(|_| ids_at_least(r, XY_IDS, 200)));
                c.suite("tulenbaev", linear(n, "Zmod:25", 500), |r| ids_at_least(r, XSMALL_IDS, 500));
            }
            "x(v,w) lemma and X^d/Y^d well-definedness and conjugation"
        }
        6 => {
            use stgroup::tulenbaev::SIGMA_PAIR_IDS;
            for n in [4, 5] {
                c.suite("sigma-pair", linear(n, "Zmod:5", 200), |r| {
                    all_equal(r).and_then(|_| ids_at_least(r, &SIGMA_PAIR_IDS[..6], 200))
                });
            }
            "sigma(+-w1) relations, ev0 image, mutual inverses over F5[X]"
        }
        7 => {
            for ty in ["A3", "D4"] {
                for ring in ["Zmod:5", "Zmod:25"] {
                    let p = SuiteParams { cases: 1000, ..params(ty, ring) };
                    c.suite("decompose", p, |r| ids_at_least(r, &["bruhat", "bruhat-weyl-class", "gauss", "chevalley-matsumoto"], 1000));
                }
            }
            "Bruhat, Gauss, Chevalley-Matsumoto round trips"
        }
        8 => {
            for ty in DE {
                c.suite("orbit", params(ty, "Zmod:5"), exhaustive);
            }
            "w_{lambda,u} over the orbit with factor bounds"
        }
        9 => {
            let p = SuiteParams { cases: 100, ..params("D4", "Zmod:35") };
            c.suite("patch", p, |r| ids_at_least(r, &["patch"], 100));
            "patching identity over Z/35[X], (a,b) = (5,7)"
        }
        10 => {
            for ty in DE {
                c.suite("symbols", params(ty, "Zmod:5"), |_| Ok(()));
                let p = SuiteParams { cases: 1000, ..params(ty, "Zmod:5") };
                c.suite("chi", p, |r| ids_at_least(r, &["chi-torus"], 1000));
            }
            "symbol normal forms and chi against torus conjugation"
        }
        _ => unreachable!(),
    };
    (name, c)
}

fn main() -> ExitCode {
    let verbose = std::env::args().any(|a| a == "--verbose");
    let mut all = true;
    for n in 1..=10 {
        let t = Instant::now();
        let (name, c) = criterion(n);
        all &= c.ok;
        println!("{} criterion {n}: {name} ({:.1}s)", if c.ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
        if verbose || !c.ok {
            for d in &c.detail {
                println!("    {d}");
            }
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
