//! Command-line front end: root data queries, representation info, single
//! decompositions, suite runs and report rendering.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::ring::RingDescriptor;
use crate::rootsys::{format_rational_vec, Root, RootSystem};
use crate::steinberg::{root_name, word_from_coords};
use crate::suites::random_word;
use crate::verify::{default_rep, run_suite, suite_names, SuiteParams, Verdict, VerificationReport, VerifyError};

/// Exit code when every case passed (matrix-only counts as passing).
pub const EXIT_OK: i32 = 0;
/// Exit code when some case came out `NotEqual`.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug, Clone, PartialEq, Eq)]
#[command(name = "stgroup", version, about = "Exact Chevalley and Steinberg group computations")]
pub struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print progress and summaries on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Root data of an ADE system.
    Roots(RootsArgs),
    /// Microweight representation data.
    Rep(RepArgs),
    /// Decompose one random generator product and check the reconstruction.
    Decompose(DecomposeArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Summarize one or more saved reports.
    Report(ReportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RootsList {
    Roots,
    Weights,
    Marks,
    A3,
}

#[derive(Args, Debug, Clone, PartialEq, Eq)]
pub struct RootsArgs {
    #[arg(long = "type", default_value = "D4")]
    pub root_type: String,
    #[arg(long, value_enum, default_value = "roots")]
    pub list: RootsList,
    /// Emit the realization as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Eq)]
pub struct RepArgs {
    #[arg(long = "type", default_value = "D4")]
    pub root_type: String,
    /// Prime field `𝔽_p` for the matrices.
    #[arg(long)]
    pub field: Option<u64>,
    #[arg(long, conflicts_with = "field")]
    pub ring: Option<String>,
    #[arg(long)]
    pub print_dim: bool,
    #[arg(long)]
    pub print_weights: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DecomposeKind {
    Bruhat,
    Gauss,
    Cm,
}

#[derive(Args, Debug, Clone, PartialEq, Eq)]
pub struct DecomposeArgs {
    #[arg(long, value_enum)]
    pub kind: DecomposeKind,
    #[arg(long = "type", default_value = "D4")]
    pub root_type: String,
    #[arg(long, default_value = "Zmod:5")]
    pub ring: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Letters in the random product.
    #[arg(long, default_value_t = 20)]
    pub len: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Eq)]
pub struct VerifyArgs {
    #[arg(long, required_unless_present = "list_suites")]
    pub suite: Option<String>,
    #[arg(long = "type", default_value = "D4")]
    pub root_type: String,
    #[arg(long, default_value = "Zmod:5")]
    pub ring: String,
    #[arg(long, default_value_t = 2)]
    pub deg: usize,
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Matrix size for the linear suites.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Zero the timing field so equal inputs give equal bytes.
    #[arg(long)]
    pub reproducible: bool,
    /// Keep only failing cases in the written report.
    #[arg(long)]
    pub failures_only: bool,
    #[arg(long)]
    pub list_suites: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Eq)]
pub struct ReportArgs {
    pub path: PathBuf,
    /// Rerun each failing suite and confirm the same cases fail again.
    #[arg(long)]
    pub replay: bool,
}

impl VerifyArgs {
    pub fn params(&self) -> SuiteParams {
        SuiteParams { root_type: self.root_type.clone(), ring: self.ring.clone(), deg: self.deg, cases: self.cases, seed: self.seed, n: self.n }
    }
}

impl Cli {
    /// Normalized argv: every option spelled out in a fixed order, so that
    /// parsing the result gives back the same configuration.
    pub fn normalized(&self) -> Vec<String> {
        let mut v = vec!["stgroup".to_string()];
        if let Some(t) = self.threads {
            v.extend(["--threads".into(), t.to_string()]);
        }
        for _ in 0..self.verbose {
            v.push("-v".into());
        }
        let opt = |v: &mut Vec<String>, k: &str, x: String| v.extend([format!("--{k}"), x]);
        match &self.command {
            Command::Roots(a) => {
                v.push("roots".into());
                opt(&mut v, "type", a.root_type.clone());
                opt(&mut v, "list", value_name(a.list));
                if a.json {
                    v.push("--json".into());
                }
            }
            Command::Rep(a) => {
                v.push("rep".into());
                opt(&mut v, "type", a.root_type.clone());
                if let Some(f) = a.field {
                    opt(&mut v, "field", f.to_string());
                }
                if let Some(r) = &a.ring {
                    opt(&mut v, "ring", r.clone());
                }
                for (on, flag) in [(a.print_dim, "--print-dim"), (a.print_weights, "--print-weights")] {
                    if on {
                        v.push(flag.into());
                    }
                }
            }
            Command::Decompose(a) => {
                v.push("decompose".into());
                opt(&mut v, "kind", value_name(a.kind));
                opt(&mut v, "type", a.root_type.clone());
                opt(&mut v, "ring", a.ring.clone());
                opt(&mut v, "seed", a.seed.to_string());
                opt(&mut v, "len", a.len.to_string());
            }
            Command::Verify(a) => {
                v.push("verify".into());
                if let Some(s) = &a.suite {
                    opt(&mut v, "suite", s.clone());
                }
                opt(&mut v, "type", a.root_type.clone());
                opt(&mut v, "ring", a.ring.clone());
                opt(&mut v, "deg", a.deg.to_string());
                opt(&mut v, "cases", a.cases.to_string());
                opt(&mut v, "seed", a.seed.to_string());
                opt(&mut v, "n", a.n.to_string());
                if let Some(o) = &a.out {
                    opt(&mut v, "out", o.display().to_string());
                }
                for (on, flag) in [(a.reproducible, "--reproducible"), (a.failures_only, "--failures-only"), (a.list_suites, "--list-suites")] {
                    if on {
                        v.push(flag.into());
                    }
                }
            }
            Command::Report(a) => {
                v.push("report".into());
                v.push(a.path.display().to_string());
                if a.replay {
                    v.push("--replay".into());
                }
            }
        }
        v
    }
}

fn value_name<T: ValueEnum>(x: T) -> String {
    x.to_possible_value().expect("no skipped variants").get_name().to_string()
}

/// Parse `argv` and run; returns the process exit code and writes output
/// to `out`.
pub fn run(argv: &[String], out: &mut String) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            out.push_str(&e.render().to_string());
            return code;
        }
    };
    if let Some(t) = cli.threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli, out: &mut String) -> Result<i32, VerifyError> {
    match &cli.command {
        Command::Roots(a) => roots(a, out),
        Command::Rep(a) => rep(a, out),
        Command::Decompose(a) => decompose(a, out),
        Command::Verify(a) => verify(a, cli.verbose, out),
        Command::Report(a) => report(a, out),
    }
}

fn build_rs(label: &str) -> Result<std::sync::Arc<RootSystem>, VerifyError> {
    let (ty, rank) = RootSystem::parse_label(label)?;
    Ok(RootSystem::build(ty, rank)?)
}

fn roots(a: &RootsArgs, out: &mut String) -> Result<i32, VerifyError> {
    let rs = build_rs(&a.root_type)?;
    if a.json {
        let roots: Vec<Value> = (0..rs.num_roots())
            .map(|r| json!({"name": root_name(&rs, r), "coeffs": rs.roots[r], "coords": format_rational_vec(&rs.root_coords(r))}))
            .collect();
        let simple: Vec<String> = rs.simple_root_coords().iter().map(|c| format_rational_vec(c)).collect();
        let doc = json!({"type": rs.label(), "cartan": rs.cartan, "simple_coords": simple, "roots": roots});
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"));
        return Ok(EXIT_OK);
    }
    match a.list {
        RootsList::Roots => {
            for r in 0..rs.num_roots() {
                let _ = writeln!(out, "{}\t{:?}\t{}", root_name(&rs, r), rs.roots[r], format_rational_vec(&rs.root_coords(r)));
            }
        }
        RootsList::Weights => {
            let rep = default_rep(&rs)?;
            for w in &rep.weights {
                let _ = writeln!(out, "{:?}\t{}", w.0, format_rational_vec(&rs.weight_coords(w)));
            }
        }
        RootsList::Marks => {
            let m = rs.extended_marks()?;
            let _ = writeln!(out, "j={}, k={}", m.j, m.k);
        }
        RootsList::A3 => {
            let subs = rs.a3_subsystems();
            let _ = writeln!(out, "{} A3 subsystems", subs.len());
            for s in subs {
                let names: Vec<String> = s.iter().filter(|&&r| rs.is_positive(r)).map(|&r| root_name(&rs, r)).collect();
                let _ = writeln!(out, "{}", names.join(" "));
            }
        }
    }
    Ok(EXIT_OK)
}

fn rep(a: &RepArgs, out: &mut String) -> Result<i32, VerifyError> {
    let rs = build_rs(&a.root_type)?;
    let rep = default_rep(&rs)?;
    let ring = match (&a.field, &a.ring) {
        (Some(p), _) => {
            let r = RingDescriptor::integers_mod(*p)?;
            if !r.is_prime_field() {
                return Err(VerifyError::UnsupportedRing(format!("{p} is not prime")));
            }
            r
        }
        (None, Some(s)) => RingDescriptor::parse(s)?,
        (None, None) => RingDescriptor::integers_mod(5)?,
    };
    let _ = writeln!(out, "type {} node {} over {}", rs.label(), rep.k, ring);
    if a.print_dim || !a.print_weights {
        let _ = writeln!(out, "dim {}", rep.dim());
    }
    if a.print_weights {
        for (b, range) in rep.blocks.iter().enumerate() {
            for i in range.clone() {
                let _ = writeln!(out, "{b}\t{i}\t{:?}", rep.weights[i].0);
            }
        }
    }
    Ok(EXIT_OK)
}

fn letters_json(rs: &RootSystem, ring: &crate::ring::Ring, l: &[(Root, crate::ring::Elem)]) -> Vec<Value> {
    l.iter().map(|(r, c)| json!([root_name(rs, *r), ring.render(c)])).collect()
}

fn decompose(a: &DecomposeArgs, out: &mut String) -> Result<i32, VerifyError> {
    let rs = build_rs(&a.root_type)?;
    let rep = default_rep(&rs)?;
    let ring = RingDescriptor::parse(&a.ring)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let all: Vec<Root> = (0..rs.num_roots()).collect();
    let (factors, input, ok) = match a.kind {
        DecomposeKind::Bruhat | DecomposeKind::Gauss => {
            let word = random_word(&rs, &ring, &all, a.len, &mut rng);
            let g = rep.eval(&word);
            if a.kind == DecomposeKind::Bruhat {
                let b = rep.bruhat(&g)?;
                let back = b.reconstruct(&rep)?;
                let f = json!({
                    "u": letters_json(&rs, &ring, &b.u),
                    "weyl_word": b.weyl_word,
                    "torus": b.torus.iter().map(|t| ring.render(t)).collect::<Vec<_>>(),
                    "v": letters_json(&rs, &ring, &b.v),
                    "level_is_identity": b.level.is_identity(),
                });
                (f, word.render(), back == g)
            } else {
                let gs = rep.gauss(&g, &mut rng, 200)?;
                let back = rep.eval(&gs.word(&rep, &ring)?);
                let f = json!({
                    "torus": gs.torus.iter().map(|t| ring.render(t)).collect::<Vec<_>>(),
                    "u_plus": letters_json(&rs, &ring, &gs.u_plus),
                    "u_minus": letters_json(&rs, &ring, &gs.u_minus),
                    "u_plus2": letters_json(&rs, &ring, &gs.u_plus2),
                });
                (f, word.render(), back == g)
            }
        }
        DecomposeKind::Cm => {
            // Inputs are drawn from U(Σ⁻)·P so that the factorization exists.
            let (plus, delta, minus) = rs.special_subsets(rep.k);
            let parabolic: Vec<Root> = plus.iter().chain(delta.iter()).copied().collect();
            let word = random_word(&rs, &ring, &minus, a.len / 2, &mut rng).concat(&random_word(&rs, &ring, &parabolic, a.len / 2, &mut rng));
            let g = rep.eval(&word);
            let cm = rep.chevalley_matsumoto(&g)?;
            let back = rep.eval(&word_from_coords(&rs, &ring, &cm.u_minus)).mul(&cm.stab);
            let f = json!({"u_minus": letters_json(&rs, &ring, &cm.u_minus), "stab": cm.stab.render()});
            (f, word.render(), back == g)
        }
    };
    let doc = json!({
        "kind": value_name(a.kind),
        "type": rs.label(),
        "ring": ring.to_string(),
        "seed": a.seed,
        "input": input,
        "factors": factors,
        "reconstructs": ok,
    });
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"));
    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}

fn verify(a: &VerifyArgs, verbose: u8, out: &mut String) -> Result<i32, VerifyError> {
    if a.list_suites {
        for n in suite_names() {
            let _ = writeln!(out, "{n}");
        }
        return Ok(EXIT_OK);
    }
    let suite = a.suite.as_deref().expect("clap enforces --suite");
    let mut report = run_suite(suite, &a.params(), a.reproducible)?;
    let code = if report.all_passed() { EXIT_OK } else { EXIT_FAIL };
    if verbose > 0 {
        eprintln!("{}", summary_line(&report));
    }
    if a.failures_only {
        report.cases.retain(|c| c.verdict == Verdict::NotEqual);
    }
    let json = report.to_json();
    match &a.out {
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| VerifyError::BadParam(format!("{}: {e}", path.display())))?;
            let _ = writeln!(out, "{}", summary_line(&report));
        }
        None => {
            let _ = writeln!(out, "{json}");
        }
    }
    Ok(code)
}

fn summary_line(r: &VerificationReport) -> String {
    let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "{} [{}] pass={} matrix_only={} fail={}{}",
        r.suite,
        params.join(" "),
        r.summary.pass,
        r.summary.matrix_only,
        r.summary.fail,
        if r.exhaustive { " (exhaustive)" } else { "" }
    )
}

/// Reports are stored one per file or as a JSON array.
pub fn load_reports(text: &str) -> Result<Vec<VerificationReport>, serde_json::Error> {
    match serde_json::from_str::<Vec<VerificationReport>>(text) {
        Ok(v) => Ok(v),
        Err(_) => Ok(vec![VerificationReport::from_json(text)?]),
    }
}

/// Human-readable table of suites and counts with the first failure of each.
pub fn render_reports(reports: &[VerificationReport]) -> String {
    let mut s = String::new();
    let all_ok = reports.iter().all(|r| r.all_passed());
    let _ = writeln!(s, "{}", if all_ok { "PASS" } else { "FAIL" });
    let _ = writeln!(s, "{:<14} {:>8} {:>12} {:>6}  params", "suite", "pass", "matrix-only", "fail");
    for r in reports {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "{:<14} {:>8} {:>12} {:>6}  {}", r.suite, r.summary.pass, r.summary.matrix_only, r.summary.fail, params.join(" "));
        if let Some(c) = r.cases.iter().find(|c| c.verdict == Verdict::NotEqual) {
            let at = c.witness.map(|[i, j]| format!(" at ({i},{j})")).unwrap_or_default();
            let _ = writeln!(s, "  first failure: {} {}{at}", c.id, c.inputs);
        }
    }
    s
}

fn params_from_report(r: &VerificationReport) -> SuiteParams {
    let mut p = SuiteParams { seed: r.seed, ..SuiteParams::default() };
    for (k, v) in &r.params {
        match k.as_str() {
            "type" => p.root_type = v.clone(),
            "ring" => p.ring = v.clone(),
            "deg" => p.deg = v.parse().unwrap_or(p.deg),
            "cases" => p.cases = v.parse().unwrap_or(p.cases),
            "n" => p.n = v.parse().unwrap_or(p.n),
            _ => {}
        }
    }
    p
}

fn report(a: &ReportArgs, out: &mut String) -> Result<i32, VerifyError> {
    let text = std::fs::read_to_string(&a.path).map_err(|e| VerifyError::BadParam(format!("{}: {e}", a.path.display())))?;
    let reports = load_reports(&text).map_err(|e| VerifyError::BadParam(format!("malformed report: {e}")))?;
    out.push_str(&render_reports(&reports));
    if a.replay {
        for r in reports.iter().filter(|r| !r.all_passed()) {
            let again = run_suite(&r.suite, &params_from_report(r), true)?;
            let failed = |rep: &VerificationReport| -> Vec<(String, String)> {
                rep.cases.iter().filter(|c| c.verdict == Verdict::NotEqual).map(|c| (c.id.clone(), c.inputs.clone())).collect()
            };
            let (before, after) = (failed(r), failed(&again));
            let confirmed = before.iter().all(|c| after.contains(c));
            let _ = writeln!(out, "replay {}: {} of {} failures reproduced", r.suite, before.iter().filter(|c| after.contains(c)).count(), before.len());
            if !confirmed {
                return Ok(EXIT_FAIL);
            }
        }
    }
    Ok(if reports.iter().all(|r| r.all_passed()) { EXIT_OK } else { EXIT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn normalized_form_round_trips() {
        for s in [
            "stgroup roots --type E7 --list marks",
            "stgroup --threads 2 -v verify --suite relations --type D4 --ring Zmod:5 --reproducible",
            "stgroup rep --type E7 --field 5 --print-dim",
            "stgroup decompose --kind cm --seed 7",
            "stgroup report r.json --replay",
            "stgroup verify --list-suites",
        ] {
            let cli = Cli::try_parse_from(argv(s)).unwrap();
            let norm = cli.normalized();
            let again = Cli::try_parse_from(&norm).unwrap();
            assert_eq!(again, cli);
            assert_eq!(again.normalized(), norm);
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        let mut out = String::new();
        assert_eq!(run(&argv("stgroup verify --bogus"), &mut out), EXIT_USAGE);
        out.clear();
        assert_eq!(run(&argv("stgroup verify --suite nope"), &mut out), EXIT_USAGE);
        assert!(out.contains("unknown suite"));
    }

    #[test]
    fn e7_marks() {
        let mut out = String::new();
        assert_eq!(run(&argv("stgroup roots --type E7 --list marks"), &mut out), EXIT_OK);
        assert_eq!(out.trim(), "j=1, k=7");
    }
}
