//! Machine-readable records for verdicts and listings. Records are flat
//! string/number structures that serialize to JSON and parse back to equal
//! values, so downstream tooling can re-read anything the CLI emits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::market::{Market, Outcome, Profile};
use crate::mechanisms::Mechanism;
use crate::strategy::{Certification, OmVerdict, OptionSet, Subprofile};

/// Short content digest of a market (its canonical serialization without any
/// doctor profile).
pub fn market_digest(market: &Market) -> String {
    let hash = Sha256::digest(market.to_text(None).as_bytes());
    hash[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn outcome_field(market: &Market, o: Outcome) -> Option<String> {
    o.map(|c| market.contract(c).id().to_string())
}

fn option_set_field(market: &Market, o: &OptionSet) -> Vec<Option<String>> {
    o.outcomes().map(|x| outcome_field(market, x)).collect()
}

/// A subprofile as doctor-name → ranking text.
pub fn witness_map(market: &Market, witness: &Subprofile) -> BTreeMap<String, String> {
    witness
        .others()
        .iter()
        .map(|(d, p)| (market.doctor_name(*d).to_string(), market.ranking_label(p)))
        .collect()
}

/// Listing of a stable set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableRecord {
    pub market: String,
    pub allocations: Vec<String>,
    pub k: usize,
}

impl StableRecord {
    pub fn new(market: &Market, stable: &crate::stability::StableSet) -> Self {
        StableRecord {
            market: market_digest(market),
            allocations: stable.allocations().iter().map(|a| a.label(market)).collect(),
            k: stable.k(),
        }
    }
}

/// A mechanism application: the selected allocation and per-doctor
/// assignments (`null` = unmatched).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechRecord {
    pub market: String,
    pub mechanism: String,
    pub allocation: String,
    pub assignments: BTreeMap<String, Option<String>>,
}

impl MechRecord {
    pub fn new(
        market: &Market,
        mech: Mechanism,
        _profile: &Profile,
        allocation: &crate::market::Allocation,
    ) -> Self {
        let assignments = market
            .doctor_ids()
            .map(|d| {
                (
                    market.doctor_name(d).to_string(),
                    outcome_field(market, allocation.doctor_assignment(market, d)),
                )
            })
            .collect();
        MechRecord {
            market: market_digest(market),
            mechanism: mech.descriptor(),
            allocation: allocation.label(market),
            assignments,
        }
    }
}

/// Full obvious-manipulation verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOmRecord {
    pub mechanism: String,
    pub market: String,
    pub doctor: String,
    pub truth: String,
    pub report: String,
    pub option_set_truth: Vec<Option<String>>,
    pub option_set_report: Vec<Option<String>>,
    pub worst_truth: Option<String>,
    pub worst_report: Option<String>,
    pub best_truth: Option<String>,
    pub best_report: Option<String>,
    pub worst_case_improved: bool,
    pub best_case_improved: bool,
    pub triggered: String,
    pub manipulation: bool,
    pub manipulation_witness: Option<BTreeMap<String, String>>,
    pub obvious: bool,
}

impl CheckOmRecord {
    pub fn new(market: &Market, mech: Mechanism, verdict: &OmVerdict) -> Self {
        CheckOmRecord {
            mechanism: mech.descriptor(),
            market: market_digest(market),
            doctor: market.doctor_name(verdict.doctor).to_string(),
            truth: market.ranking_label(&verdict.truth),
            report: market.ranking_label(&verdict.report),
            option_set_truth: option_set_field(market, &verdict.option_truth),
            option_set_report: option_set_field(market, &verdict.option_report),
            worst_truth: outcome_field(market, verdict.worst_truth),
            worst_report: outcome_field(market, verdict.worst_report),
            best_truth: outcome_field(market, verdict.best_truth),
            best_report: outcome_field(market, verdict.best_report),
            worst_case_improved: verdict.worst_case_improved,
            best_case_improved: verdict.best_case_improved,
            triggered: verdict.triggered().to_string(),
            manipulation: verdict.is_manipulation(),
            manipulation_witness: verdict
                .manipulation_witness
                .as_ref()
                .map(|w| witness_map(market, w)),
            obvious: verdict.is_obvious,
        }
    }
}

/// The misreport a failed certification reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub doctor: String,
    pub truth: String,
    pub report: String,
    pub witness: BTreeMap<String, String>,
}

/// Result of an exhaustive certification run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifyRecord {
    pub property: String,
    pub mechanism: String,
    pub market: String,
    pub verdict: String,
    pub counterexample: Option<CounterexampleRecord>,
    pub pairs: u64,
    pub iterations: u64,
}

impl CertifyRecord {
    pub fn new(market: &Market, cert: &Certification) -> Self {
        CertifyRecord {
            property: cert.property.descriptor().to_string(),
            mechanism: cert.mechanism.descriptor(),
            market: market_digest(market),
            verdict: if cert.passed { "PASS".into() } else { "FAIL".into() },
            counterexample: cert.counterexample.as_ref().map(|cx| CounterexampleRecord {
                doctor: market.doctor_name(cx.doctor).to_string(),
                truth: market.ranking_label(&cx.truth),
                report: market.ranking_label(&cx.report),
                witness: witness_map(market, &cx.witness),
            }),
            pairs: cert.pairs,
            iterations: cert.iterations,
        }
    }
}

/// A generated counterexample run: the market text plus the verdict on the
/// canonical truth/report pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleRunRecord {
    pub k: usize,
    pub q: String,
    pub market_text: String,
    pub check: CheckOmRecord,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::Quantile;
    use crate::strategy::{
        certify, counterexample_market, is_obvious_manipulation, Property, DEFAULT_BUDGET,
    };

    #[test]
    fn records_round_trip_through_json() {
        let inst = counterexample_market(2, Quantile::one()).unwrap();
        let m = &inst.market;
        let mech = Mechanism::Quantile(Quantile::one());

        let verdict =
            is_obvious_manipulation(mech, m, inst.doctor, &inst.truth, &inst.report, DEFAULT_BUDGET)
                .unwrap();
        let record = CheckOmRecord::new(m, mech, &verdict);
        let json = serde_json::to_string_pretty(&record).unwrap();
        let back: CheckOmRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(record, back);

        let cert = certify(mech, m, Property::NotObviouslyManipulable, DEFAULT_BUDGET).unwrap();
        let record = CertifyRecord::new(m, &cert);
        let json = serde_json::to_string(&record).unwrap();
        let back: CertifyRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(record, back);
        assert_eq!(back.verdict, "FAIL");
    }

    #[test]
    fn digest_ignores_the_profile_but_not_the_market() {
        let a = counterexample_market(2, Quantile::one()).unwrap();
        let b = counterexample_market(3, "1/2".parse().unwrap()).unwrap();
        assert_eq!(market_digest(&a.market), market_digest(&a.market));
        assert_ne!(market_digest(&a.market), market_digest(&b.market));
    }
}
