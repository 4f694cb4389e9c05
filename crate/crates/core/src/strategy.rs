//! Option sets, manipulation and obvious-manipulation detection, exhaustive
//! certification, and the minimal counterexample family for quantile
//! mechanisms with a positive quantile.
//!
//! Everything here quantifies over the *full* preference domain of the
//! opponents (every strict ranking of every subset of each opponent's
//! contracts). A search whose predicted iteration count exceeds the caller's
//! budget is refused up front rather than truncated silently.

use std::collections::HashMap;
use std::error::Error;
use std::fmt;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::market::{
    Allocation, ContractDecl, DoctorId, Market, Outcome, Preference, Profile,
};
use crate::mechanisms::{
    interior_index, quantile_allocation, quantile_index, Mechanism, Quantile,
};
use crate::stability::{doctor_proposing_da, hospital_proposing_da, stable_among};

/// Default cap on search iterations (opponent-subprofile visits).
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyError {
    /// The search would need `required` iterations but only `budget` were
    /// allowed.
    BudgetExceeded { required: u128, budget: u64 },
}

impl fmt::Display for StrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyError::BudgetExceeded { required, budget } => write!(
                f,
                "exhaustive search needs {required} iterations, over the budget of {budget}"
            ),
        }
    }
}

impl Error for StrategyError {}

fn check_budget(required: u128, budget: u64) -> Result<(), StrategyError> {
    if required > budget as u128 {
        Err(StrategyError::BudgetExceeded { required, budget })
    } else {
        Ok(())
    }
}

/// The property a certification run checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    /// No manipulation at all.
    StrategyProofness,
    /// No obvious manipulation.
    NotObviouslyManipulable,
}

impl Property {
    pub fn descriptor(&self) -> &'static str {
        match self {
            Property::StrategyProofness => "sp",
            Property::NotObviouslyManipulable => "nom",
        }
    }

    pub fn parse_descriptor(s: &str) -> Option<Property> {
        match s {
            "sp" => Some(Property::StrategyProofness),
            "nom" => Some(Property::NotObviouslyManipulable),
            _ => None,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.descriptor())
    }
}

/// Preferences for every doctor except one, in roster order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subprofile {
    doctor: DoctorId,
    others: Vec<(DoctorId, Preference)>,
}

impl Subprofile {
    /// The doctor whose preference is left open.
    pub fn doctor(&self) -> DoctorId {
        self.doctor
    }

    pub fn others(&self) -> &[(DoctorId, Preference)] {
        &self.others
    }

    /// Insert `own` for the open doctor to obtain a full profile.
    pub fn complete(&self, own: &Preference, market: &Market) -> Profile {
        let mut slots: Vec<Option<Preference>> = vec![None; market.doctor_count()];
        for (d, p) in &self.others {
            slots[d.0] = Some(p.clone());
        }
        slots[self.doctor.0] = Some(own.clone());
        let prefs = slots
            .into_iter()
            .map(|p| p.expect("subprofile plus own preference covers the roster"))
            .collect();
        Profile::new(market, prefs).expect("subprofile preferences are owned correctly")
    }
}

/// Every outcome a doctor can receive under a fixed report, with one witness
/// subprofile per outcome (the first one found in enumeration order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionSet {
    doctor: DoctorId,
    reported: Preference,
    entries: Vec<(Outcome, Subprofile)>,
}

impl OptionSet {
    pub fn doctor(&self) -> DoctorId {
        self.doctor
    }

    pub fn reported(&self) -> &Preference {
        &self.reported
    }

    /// Distinct outcomes in canonical order (contracts by roster index, then
    /// the empty outcome).
    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.entries.iter().map(|(o, _)| *o)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, o: Outcome) -> bool {
        self.entries.iter().any(|(x, _)| *x == o)
    }

    pub fn witness(&self, o: Outcome) -> Option<&Subprofile> {
        self.entries.iter().find(|(x, _)| *x == o).map(|(_, w)| w)
    }

    pub fn entries(&self) -> &[(Outcome, Subprofile)] {
        &self.entries
    }
}

/// Worst outcome in the option set under preference `p`.
pub fn worst_case(p: &Preference, options: &OptionSet) -> Outcome {
    options
        .outcomes()
        .max_by_key(|&o| p.rank_key(o))
        .expect("option sets are non-empty")
}

/// Best outcome in the option set under preference `p`.
pub fn best_case(p: &Preference, options: &OptionSet) -> Outcome {
    options
        .outcomes()
        .min_by_key(|&o| p.rank_key(o))
        .expect("option sets are non-empty")
}

/// Which of the two obvious-manipulation conditions fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggeredCondition {
    None,
    WorstCase,
    BestCase,
    Both,
}

impl fmt::Display for TriggeredCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriggeredCondition::None => "none",
            TriggeredCondition::WorstCase => "worst-case",
            TriggeredCondition::BestCase => "best-case",
            TriggeredCondition::Both => "both",
        })
    }
}

/// Full result of an obvious-manipulation test: the two option sets, the
/// four worst/best comparisons judged under the true preference, and the
/// manipulation witness when one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmVerdict {
    pub doctor: DoctorId,
    pub truth: Preference,
    pub report: Preference,
    pub option_truth: OptionSet,
    pub option_report: OptionSet,
    pub manipulation_witness: Option<Subprofile>,
    pub worst_truth: Outcome,
    pub worst_report: Outcome,
    pub best_truth: Outcome,
    pub best_report: Outcome,
    pub worst_case_improved: bool,
    pub best_case_improved: bool,
    pub is_obvious: bool,
}

impl OmVerdict {
    pub fn is_manipulation(&self) -> bool {
        self.manipulation_witness.is_some()
    }

    pub fn triggered(&self) -> TriggeredCondition {
        match (self.worst_case_improved, self.best_case_improved) {
            (true, true) => TriggeredCondition::Both,
            (true, false) => TriggeredCondition::WorstCase,
            (false, true) => TriggeredCondition::BestCase,
            (false, false) => TriggeredCondition::None,
        }
    }
}

/// Shared evaluation state for one (market, mechanism) search: the
/// allocation roster is enumerated once and mechanism outputs are memoized
/// per profile, since the same subprofile recurs across truth/report pairs.
struct Evaluator<'m> {
    market: &'m Market,
    mech: Mechanism,
    candidates: Vec<Allocation>,
    cache: Mutex<HashMap<Profile, Allocation>>,
}

impl<'m> Evaluator<'m> {
    fn new(market: &'m Market, mech: Mechanism) -> Self {
        let candidates = match mech {
            // The proposal algorithms never look at the allocation roster.
            Mechanism::DoctorDa | Mechanism::HospitalDa => Vec::new(),
            _ => market.enumerate_allocations(),
        };
        Evaluator { market, mech, candidates, cache: Mutex::new(HashMap::new()) }
    }

    fn compute(&self, profile: &Profile) -> Allocation {
        match self.mech {
            Mechanism::DoctorDa => doctor_proposing_da(profile, self.market),
            Mechanism::HospitalDa => hospital_proposing_da(profile, self.market),
            Mechanism::Quantile(q) => {
                let stable = stable_among(&self.candidates, profile, self.market);
                let j = quantile_index(stable.k(), q);
                quantile_allocation(&stable, profile, self.market, j)
            }
            Mechanism::InteriorStable => {
                let stable = stable_among(&self.candidates, profile, self.market);
                let j = interior_index(stable.k());
                quantile_allocation(&stable, profile, self.market, j)
            }
        }
    }

    fn evaluate(&self, profile: &Profile) -> Allocation {
        if let Some(a) = self.cache.lock().unwrap().get(profile) {
            return a.clone();
        }
        let a = self.compute(profile);
        self.cache.lock().unwrap().insert(profile.clone(), a.clone());
        a
    }

    fn outcome(&self, profile: &Profile, d: DoctorId) -> Outcome {
        self.evaluate(profile).doctor_assignment(self.market, d)
    }
}

/// The full preference domain of every doctor other than `d`, in roster
/// order.
fn opponent_domains(market: &Market, d: DoctorId) -> Vec<(DoctorId, Vec<Preference>)> {
    market
        .doctor_ids()
        .filter(|&i| i != d)
        .map(|i| (i, market.enumerate_preferences(i)))
        .collect()
}

/// Number of opponent subprofiles, computed arithmetically so oversized
/// markets are refused before any domain is materialized.
fn opponent_domain_size(market: &Market, d: DoctorId) -> u128 {
    market
        .doctor_ids()
        .filter(|&i| i != d)
        .fold(1u128, |acc, i| acc.saturating_mul(market.preference_domain_size(i)))
}

/// Odometer over the cartesian product of opponent domains; the last roster
/// doctor varies fastest.
struct Subprofiles<'a> {
    doctor: DoctorId,
    domains: &'a [(DoctorId, Vec<Preference>)],
    indices: Vec<usize>,
    done: bool,
}

impl<'a> Subprofiles<'a> {
    fn new(doctor: DoctorId, domains: &'a [(DoctorId, Vec<Preference>)]) -> Self {
        let done = domains.iter().any(|(_, v)| v.is_empty());
        Subprofiles { doctor, domains, indices: vec![0; domains.len()], done }
    }
}

impl Iterator for Subprofiles<'_> {
    type Item = Subprofile;

    fn next(&mut self) -> Option<Subprofile> {
        if self.done {
            return None;
        }
        let others = self
            .domains
            .iter()
            .zip(&self.indices)
            .map(|((d, prefs), &i)| (*d, prefs[i].clone()))
            .collect();
        let item = Subprofile { doctor: self.doctor, others };
        self.done = true;
        for pos in (0..self.indices.len()).rev() {
            self.indices[pos] += 1;
            if self.indices[pos] < self.domains[pos].1.len() {
                self.done = false;
                break;
            }
            self.indices[pos] = 0;
        }
        Some(item)
    }
}

fn option_set_inner(
    ev: &Evaluator<'_>,
    domains: &[(DoctorId, Vec<Preference>)],
    d: DoctorId,
    reported: &Preference,
) -> OptionSet {
    let mut entries: Vec<(Outcome, Subprofile)> = Vec::new();
    for sub in Subprofiles::new(d, domains) {
        let profile = sub.complete(reported, ev.market);
        let out = ev.outcome(&profile, d);
        if !entries.iter().any(|(o, _)| *o == out) {
            entries.push((out, sub));
        }
    }
    entries.sort_by_key(|(o, _)| match o {
        Some(c) => (0, c.0),
        None => (1, 0),
    });
    OptionSet { doctor: d, reported: reported.clone(), entries }
}

fn manipulation_inner(
    ev: &Evaluator<'_>,
    domains: &[(DoctorId, Vec<Preference>)],
    d: DoctorId,
    truth: &Preference,
    report: &Preference,
) -> Option<Subprofile> {
    if truth == report {
        return None;
    }
    for sub in Subprofiles::new(d, domains) {
        let under_report = ev.outcome(&sub.complete(report, ev.market), d);
        let under_truth = ev.outcome(&sub.complete(truth, ev.market), d);
        if truth.prefers(under_report, under_truth) {
            return Some(sub);
        }
    }
    None
}

fn obvious_inner(
    ev: &Evaluator<'_>,
    domains: &[(DoctorId, Vec<Preference>)],
    d: DoctorId,
    truth: &Preference,
    report: &Preference,
) -> OmVerdict {
    let option_truth = option_set_inner(ev, domains, d, truth);
    let option_report = option_set_inner(ev, domains, d, report);
    let manipulation_witness = manipulation_inner(ev, domains, d, truth, report);

    // All four comparisons are judged under the true preference.
    let worst_truth = worst_case(truth, &option_truth);
    let worst_report = worst_case(truth, &option_report);
    let best_truth = best_case(truth, &option_truth);
    let best_report = best_case(truth, &option_report);
    let worst_case_improved = truth.prefers(worst_report, worst_truth);
    let best_case_improved = truth.prefers(best_report, best_truth);
    let is_obvious = manipulation_witness.is_some() && (worst_case_improved || best_case_improved);

    // An improved worst or best case entails the existence of a profile
    // where the report strictly helps, so the conjunction above never loses
    // a positive: check the implication as an internal consistency guard.
    assert!(
        !(worst_case_improved || best_case_improved) || manipulation_witness.is_some(),
        "worst/best-case improvement without a manipulation witness"
    );

    OmVerdict {
        doctor: d,
        truth: truth.clone(),
        report: report.clone(),
        option_truth,
        option_report,
        manipulation_witness,
        worst_truth,
        worst_report,
        best_truth,
        best_report,
        worst_case_improved,
        best_case_improved,
        is_obvious,
    }
}

/// The option set left open by `reported`: apply the mechanism against every
/// subprofile of the other doctors and collect the distinct outcomes for
/// `d`, each with one witness subprofile.
pub fn option_set(
    mech: Mechanism,
    market: &Market,
    d: DoctorId,
    reported: &Preference,
    budget: u64,
) -> Result<OptionSet, StrategyError> {
    check_budget(opponent_domain_size(market, d), budget)?;
    let domains = opponent_domains(market, d);
    let ev = Evaluator::new(market, mech);
    Ok(option_set_inner(&ev, &domains, d, reported))
}

/// Search for a subprofile where `report` yields a strictly better outcome
/// than `truth`, judged under `truth`. Returns the first witness in
/// enumeration order. `report == truth` returns `None` by convention.
pub fn is_manipulation(
    mech: Mechanism,
    market: &Market,
    d: DoctorId,
    truth: &Preference,
    report: &Preference,
    budget: u64,
) -> Result<Option<Subprofile>, StrategyError> {
    check_budget(opponent_domain_size(market, d), budget)?;
    let domains = opponent_domains(market, d);
    let ev = Evaluator::new(market, mech);
    Ok(manipulation_inner(&ev, &domains, d, truth, report))
}

/// Decide whether `report` is an obvious manipulation of the mechanism at
/// `truth`: a manipulation that improves the worst case or the best case of
/// the option set, judged under the true preference.
pub fn is_obvious_manipulation(
    mech: Mechanism,
    market: &Market,
    d: DoctorId,
    truth: &Preference,
    report: &Preference,
    budget: u64,
) -> Result<OmVerdict, StrategyError> {
    // Two option sets plus the manipulation scan.
    check_budget(opponent_domain_size(market, d).saturating_mul(3), budget)?;
    let domains = opponent_domains(market, d);
    let ev = Evaluator::new(market, mech);
    Ok(obvious_inner(&ev, &domains, d, truth, report))
}

/// A certification failure: the misreport, the doctor, and the witness that
/// re-verifies it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleFound {
    pub doctor: DoctorId,
    pub truth: Preference,
    pub report: Preference,
    pub witness: Subprofile,
    /// Full verdict for obvious-manipulation counterexamples.
    pub verdict: Option<Box<OmVerdict>>,
}

/// Outcome of an exhaustive certification run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certification {
    pub mechanism: Mechanism,
    pub property: Property,
    pub passed: bool,
    pub counterexample: Option<CounterexampleFound>,
    /// Total (truth, report) pairs in scope.
    pub pairs: u64,
    /// Iterations admitted against the budget:
    /// `sum over doctors of truths × reports × subprofiles`.
    pub iterations: u64,
}

/// Exhaustively certify a property: every doctor, every truth in the
/// doctor's full domain, every distinct report, every opponent subprofile.
/// Returns the first counterexample in deterministic search order (doctors
/// in roster order, preferences in enumeration order), or a certificate of
/// exhaustion. Pairs are checked in parallel; the reported counterexample is
/// always the sequentially first one.
pub fn certify(
    mech: Mechanism,
    market: &Market,
    property: Property,
    budget: u64,
) -> Result<Certification, StrategyError> {
    struct DoctorSearch {
        doctor: DoctorId,
        prefs: Vec<Preference>,
        domains: Vec<(DoctorId, Vec<Preference>)>,
    }

    // Admission check from domain sizes alone, before anything is built.
    let mut required: u128 = 0;
    for d in market.doctor_ids() {
        let t = market.preference_domain_size(d);
        let n = opponent_domain_size(market, d);
        required = required.saturating_add(t.saturating_mul(t - 1).saturating_mul(n));
    }
    check_budget(required, budget)?;

    let searches: Vec<DoctorSearch> = market
        .doctor_ids()
        .map(|d| DoctorSearch {
            doctor: d,
            prefs: market.enumerate_preferences(d),
            domains: opponent_domains(market, d),
        })
        .collect();

    let mut pairs: u64 = 0;
    for s in &searches {
        let t = s.prefs.len() as u64;
        pairs += t * (t - 1);
    }

    let ev = Evaluator::new(market, mech);

    let mut tasks: Vec<(usize, usize, usize)> = Vec::with_capacity(pairs as usize);
    for (si, s) in searches.iter().enumerate() {
        for t in 0..s.prefs.len() {
            for r in 0..s.prefs.len() {
                if t != r {
                    tasks.push((si, t, r));
                }
            }
        }
    }

    let counterexample = tasks.par_iter().find_map_first(|&(si, t, r)| {
        let s = &searches[si];
        let truth = &s.prefs[t];
        let report = &s.prefs[r];
        match property {
            Property::StrategyProofness => {
                manipulation_inner(&ev, &s.domains, s.doctor, truth, report).map(|witness| {
                    CounterexampleFound {
                        doctor: s.doctor,
                        truth: truth.clone(),
                        report: report.clone(),
                        witness,
                        verdict: None,
                    }
                })
            }
            Property::NotObviouslyManipulable => {
                let verdict = obvious_inner(&ev, &s.domains, s.doctor, truth, report);
                if verdict.is_obvious {
                    Some(CounterexampleFound {
                        doctor: s.doctor,
                        truth: truth.clone(),
                        report: report.clone(),
                        witness: verdict
                            .manipulation_witness
                            .clone()
                            .expect("obvious manipulations carry a witness"),
                        verdict: Some(Box::new(verdict)),
                    })
                } else {
                    None
                }
            }
        }
    });

    Ok(Certification {
        mechanism: mech,
        property,
        passed: counterexample.is_none(),
        counterexample,
        pairs,
        iterations: required as u64,
    })
}

/// Errors from the counterexample-family constructor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CounterexampleError {
    /// `q = 0` selects the doctor-optimal allocation at every profile; the
    /// construction has nothing to exhibit.
    ZeroQuantile,
    /// `⌈k·q⌉` is not 2 for the requested `k`.
    WrongIndex { k: usize, q: Quantile, index: usize, minimal: usize },
}

impl fmt::Display for CounterexampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterexampleError::ZeroQuantile => {
                write!(f, "q = 0/1 selects the doctor-optimal allocation everywhere; no counterexample exists")
            }
            CounterexampleError::WrongIndex { k, q, index, minimal } => write!(
                f,
                "k = {k} gives quantile position {index} for q = {q}, but the construction \
                 needs position 2; the smallest valid k is {minimal}"
            ),
        }
    }
}

impl Error for CounterexampleError {}

/// A generated market exhibiting an obvious manipulation, together with the
/// truth/report pair that triggers it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleInstance {
    pub market: Market,
    /// The manipulating doctor (`d1`).
    pub doctor: DoctorId,
    /// `d1` finds every chain contract acceptable, best terms first.
    pub truth: Preference,
    /// `d1` declares only the best contract acceptable.
    pub report: Preference,
    /// `d2` finds its single contract acceptable.
    pub opponent: Preference,
}

impl CounterexampleInstance {
    pub fn truthful_profile(&self) -> Profile {
        Profile::new(&self.market, vec![self.truth.clone(), self.opponent.clone()])
            .expect("instance preferences cover the roster")
    }
}

/// Build the minimal market on which a quantile mechanism with positive `q`
/// admits an obvious manipulation: doctor `d1` holds a chain of `k`
/// contracts `x1..xk` with hospital `h1` ranked oppositely by the two sides,
/// and doctor `d2` holds a single contract `w` with `h2`. Requires
/// `⌈k·q⌉ = 2`, so that the mechanism picks `d1`'s second-best stable
/// contract at the truthful chain, while truncating the report to `x1`
/// collapses the stable set and secures `x1` against every opponent
/// preference.
pub fn counterexample_market(
    k: usize,
    q: Quantile,
) -> Result<CounterexampleInstance, CounterexampleError> {
    if q.is_zero() {
        return Err(CounterexampleError::ZeroQuantile);
    }
    let minimal = minimal_k_for(q);
    let index = if k == 0 { 0 } else { quantile_index(k, q) };
    if index != 2 {
        return Err(CounterexampleError::WrongIndex { k, q, index, minimal });
    }

    let chain_ids: Vec<String> = (1..=k).map(|t| format!("x{t}")).collect();
    let mut contracts: Vec<ContractDecl> =
        chain_ids.iter().map(|id| ContractDecl::new(id, "d1", "h1")).collect();
    contracts.push(ContractDecl::new("w", "d2", "h2"));

    // h1 ranks the chain in the opposite order to d1.
    let h1_ranking: Vec<String> = chain_ids.iter().rev().cloned().collect();
    let market = Market::assemble(
        vec!["d1".into(), "d2".into()],
        vec!["h1".into(), "h2".into()],
        contracts,
        vec![("h1".into(), h1_ranking), ("h2".into(), vec!["w".into()])],
    )
    .expect("generated declarations are valid");

    let chain_refs: Vec<&str> = chain_ids.iter().map(|s| s.as_str()).collect();
    let truth = market.doctor_preference_by_ids("d1", &chain_refs).unwrap();
    let report = market.doctor_preference_by_ids("d1", &["x1"]).unwrap();
    let opponent = market.doctor_preference_by_ids("d2", &["w"]).unwrap();
    let doctor = market.doctor_index("d1").unwrap();

    Ok(CounterexampleInstance { market, doctor, truth, report, opponent })
}

/// Smallest `k ≥ 2` with `⌈k·q⌉ = 2`, by linear scan in exact arithmetic.
/// Such a `k` exists for every positive `q ≤ 1`.
pub fn minimal_k_for(q: Quantile) -> usize {
    assert!(!q.is_zero(), "no k yields quantile position 2 when q = 0");
    (2..).find(|&k| quantile_index(k, q) == 2).expect("a valid k exists for every q in (0, 1]")
}
