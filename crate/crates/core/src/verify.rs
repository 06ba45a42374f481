//! Equality oracle, deterministic sampling, suite registry and JSON reports.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chevalley::{ChevError, GroupMatrix, MicroweightRep};
use crate::ring::{units, Elem, Ring, RingDescriptor, RingError};
use crate::rootsys::{RootError, RootSystem, RootType};
use crate::steinberg::{StWord, WordError};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite {0:?}; see --list-suites")]
    UnknownSuite(String),
    #[error("unsupported ring for this suite: {0}")]
    UnsupportedRing(String),
    #[error("ring {0} is not finite")]
    NotFinite(String),
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Chev(#[from] ChevError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Linear(#[from] crate::tulenbaev::TulenbaevError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Equal,
    MatrixEqualOnly,
    NotEqual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Justification {
    FaithfulField,
    FaithfulPolyOverField,
    MatrixLevel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleVerdict {
    pub verdict: Verdict,
    pub justification: Justification,
    /// First differing `(row, col)`; present exactly when `verdict` is `NotEqual`.
    pub witness: Option<(usize, usize)>,
}

impl OracleVerdict {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::NotEqual
    }
}

/// Rings over which matrix equality certifies word equality: prime fields
/// with `p ≥ 5` and one-variable polynomial rings over them.
pub fn justification_for(ring: &RingDescriptor) -> Justification {
    let prime_field = |r: &RingDescriptor| matches!(r, RingDescriptor::IntegersMod(p) if *p >= 5 && crate::ring::is_prime(*p));
    match ring {
        r if prime_field(r) => Justification::FaithfulField,
        RingDescriptor::Polynomial(b, _) if prime_field(b) => Justification::FaithfulPolyOverField,
        _ => Justification::MatrixLevel,
    }
}

pub fn compare_matrices(lhs: &GroupMatrix, rhs: &GroupMatrix) -> OracleVerdict {
    let justification = justification_for(&lhs.ring);
    match lhs.first_difference(rhs) {
        Some(w) => OracleVerdict { verdict: Verdict::NotEqual, justification, witness: Some(w) },
        None => OracleVerdict {
            verdict: if justification == Justification::MatrixLevel { Verdict::MatrixEqualOnly } else { Verdict::Equal },
            justification,
            witness: None,
        },
    }
}

pub fn oracle_equal(rep: &MicroweightRep, w1: &StWord, w2: &StWord) -> Result<OracleVerdict, VerifyError> {
    if w1.ring != w2.ring {
        return Err(RingError::DescriptorMismatch(format!("{} vs {}", w1.ring, w2.ring)).into());
    }
    if !evaluable(&w1.ring) {
        return Err(VerifyError::UnsupportedRing(w1.ring.to_string()));
    }
    Ok(compare_matrices(&rep.eval(w1), &rep.eval(w2)))
}

fn evaluable(r: &RingDescriptor) -> bool {
    match r {
        RingDescriptor::Integers | RingDescriptor::Rationals | RingDescriptor::IntegersMod(_) => true,
        RingDescriptor::Polynomial(b, _) | RingDescriptor::Laurent(b, _) | RingDescriptor::Localization(b, _) | RingDescriptor::DoubleRing(b, _) => {
            evaluable(b)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub inputs: String,
    pub verdict: Verdict,
    pub justification: Justification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CaseRecord {
    pub fn from_oracle(id: impl Into<String>, inputs: impl Into<String>, v: &OracleVerdict) -> Self {
        CaseRecord {
            id: id.into(),
            inputs: inputs.into(),
            verdict: v.verdict,
            justification: v.justification,
            witness: v.witness.map(|(r, c)| [r, c]),
            note: None,
        }
    }

    /// A structural check (no matrix comparison behind it).
    pub fn predicate(id: impl Into<String>, inputs: impl Into<String>, ring: &RingDescriptor, ok: bool, note: Option<String>) -> Self {
        let justification = justification_for(ring);
        let verdict = match (ok, justification) {
            (false, _) => Verdict::NotEqual,
            (true, Justification::MatrixLevel) => Verdict::MatrixEqualOnly,
            (true, _) => Verdict::Equal,
        };
        CaseRecord { id: id.into(), inputs: inputs.into(), verdict, justification, witness: None, note }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::NotEqual
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub matrix_only: usize,
    pub fail: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub params: BTreeMap<String, String>,
    pub exhaustive: bool,
    pub cases: Vec<CaseRecord>,
    pub summary: Summary,
    pub seed: u64,
    pub elapsed_ms: u64,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

pub fn summarize(cases: &[CaseRecord]) -> Summary {
    let mut s = Summary::default();
    for c in cases {
        match c.verdict {
            Verdict::Equal => s.pass += 1,
            Verdict::MatrixEqualOnly => s.matrix_only += 1,
            Verdict::NotEqual => s.fail += 1,
        }
    }
    s
}

/// Enumerate everything up to this many instances; sample beyond it.
pub const EXHAUSTIVE_BOUND: u64 = 1_000_000;

/// Shared suite parameters; each suite reads the fields it needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteParams {
    pub root_type: String,
    pub ring: String,
    pub deg: usize,
    pub cases: usize,
    pub seed: u64,
    pub n: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams { root_type: "D4".into(), ring: "Zmod:5".into(), deg: 2, cases: 200, seed: 42, n: 4 }
    }
}

impl SuiteParams {
    pub fn to_map(&self, used: &[&str]) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        for &k in used {
            let v = match k {
                "type" => self.root_type.clone(),
                "ring" => self.ring.clone(),
                "deg" => self.deg.to_string(),
                "cases" => self.cases.to_string(),
                "n" => self.n.to_string(),
                _ => continue,
            };
            m.insert(k.to_string(), v);
        }
        m
    }

    pub fn root_system(&self) -> Result<Arc<RootSystem>, VerifyError> {
        let (ty, rank) = RootSystem::parse_label(&self.root_type)?;
        Ok(RootSystem::build(ty, rank)?)
    }

    pub fn parse_ring(&self) -> Result<Ring, VerifyError> {
        Ok(RingDescriptor::parse(&self.ring)?)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Microweight representation used as the oracle for a root system:
/// `ϖ_1` for A, D (with its partner block) and E6, `ϖ_7` for E7.
pub fn default_rep(rs: &Arc<RootSystem>) -> Result<Arc<MicroweightRep>, VerifyError> {
    let k = match (rs.ty, rs.rank) {
        (RootType::E, 7) => 7,
        (RootType::E, 8) => return Err(RootError::UnsupportedType("E8 has no microweight".into()).into()),
        _ => 1,
    };
    Ok(MicroweightRep::new(rs, k)?)
}

/// Deterministic samplers over a ring.
pub struct Sampler<'a> {
    pub ring: &'a Ring,
    pub rng: ChaCha8Rng,
}

impl<'a> Sampler<'a> {
    pub fn new(ring: &'a Ring, seed: u64) -> Self {
        Sampler { ring, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// A coefficient from the innermost finite ring.
    pub fn scalar(&mut self) -> Elem {
        sample_elem(self.ring, 0, &mut self.rng)
    }

    /// Element with every polynomial layer of degree ≤ `deg`.
    pub fn elem(&mut self, deg: usize) -> Elem {
        sample_elem(self.ring, deg, &mut self.rng)
    }

    pub fn unit(&mut self) -> Result<Elem, VerifyError> {
        let u = units(self.ring)?;
        Ok(u.sample(&mut self.rng, 2))
    }

    pub fn vector(&mut self, n: usize, deg: usize) -> Vec<Elem> {
        (0..n).map(|_| self.elem(deg)).collect()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

pub fn sample_elem<R: Rng>(ring: &RingDescriptor, deg: usize, rng: &mut R) -> Elem {
    match ring {
        RingDescriptor::IntegersMod(m) => Elem::Mod(rng.gen_range(0..*m)),
        RingDescriptor::Integers => Elem::Int(rng.gen_range(-5i64..=5).into()),
        RingDescriptor::Polynomial(b, _) => {
            let mut acc = ring.zero();
            for e in 0..=deg as i64 {
                let c = sample_elem(b, 0, rng);
                acc = ring.add(&acc, &ring.monomial(c, e));
            }
            acc
        }
        RingDescriptor::Laurent(b, _) => {
            let mut acc = ring.zero();
            let d = deg as i64;
            for e in -d..=d {
                let c = sample_elem(b, 0, rng);
                acc = ring.add(&acc, &ring.monomial(c, e));
            }
            acc
        }
        _ => ring.from_i64(rng.gen_range(-3..=3)),
    }
}

/// All polynomials over a finite base of degree ≤ `deg`.
pub fn all_polys(ring: &RingDescriptor, deg: usize) -> Result<Vec<Elem>, VerifyError> {
    let (base, _) = match ring {
        RingDescriptor::Polynomial(b, v) | RingDescriptor::Laurent(b, v) => (b, v),
        _ => return Err(VerifyError::UnsupportedRing(ring.to_string())),
    };
    let coeffs = base.elements().ok_or_else(|| VerifyError::NotFinite(base.to_string()))?;
    let mut out = vec![ring.zero()];
    for e in 0..=deg as i64 {
        let mut next = Vec::with_capacity(out.len() * coeffs.len());
        for p in &out {
            for c in &coeffs {
                next.push(ring.add(p, &ring.monomial(c.clone(), e)));
            }
        }
        out = next;
    }
    Ok(out)
}

pub type SuiteFn = fn(&SuiteParams) -> Result<SuiteOutcome, VerifyError>;

/// What a suite hands back before timing and summary are attached.
pub struct SuiteOutcome {
    pub params: BTreeMap<String, String>,
    pub exhaustive: bool,
    pub cases: Vec<CaseRecord>,
}

pub fn registry() -> Vec<(&'static str, SuiteFn)> {
    vec![
        ("relations", crate::suites::relations),
        ("matsumoto", crate::suites::matsumoto),
        ("allcock", crate::affine::allcock_affine_suite),
        ("simpler", crate::affine::allcock_simpler_suite),
        ("sigma", crate::affine::sigma_amalgam_suite),
        ("decompose", crate::suites::decompose),
        ("orbit", crate::suites::orbit),
        ("symbols", crate::suites::symbols),
        ("chi", crate::suites::chi),
        ("tulenbaev", crate::tulenbaev::tulenbaev_suite),
        ("sigma-pair", crate::tulenbaev::sigma_pair_suite),
        ("patch", crate::tulenbaev::patch_suite),
    ]
}

pub fn suite_names() -> Vec<&'static str> {
    registry().into_iter().map(|(n, _)| n).collect()
}

/// Run a registered suite. With `reproducible`, `elapsed_ms` is written as
/// zero so identical inputs give byte-identical reports.
pub fn run_suite(name: &str, params: &SuiteParams, reproducible: bool) -> Result<VerificationReport, VerifyError> {
    let f = registry().into_iter().find(|(n, _)| *n == name).map(|(_, f)| f).ok_or_else(|| VerifyError::UnknownSuite(name.into()))?;
    let start = Instant::now();
    let out = f(params)?;
    let elapsed_ms = if reproducible { 0 } else { start.elapsed().as_millis() as u64 };
    Ok(VerificationReport {
        suite: name.to_string(),
        params: out.params,
        exhaustive: out.exhaustive,
        summary: summarize(&out.cases),
        cases: out.cases,
        seed: params.seed,
        elapsed_ms,
    })
}
