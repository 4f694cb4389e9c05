//! Individual rationality, blocking, stability, brute-force stable-set
//! enumeration, and the two deferred-acceptance algorithms.
//!
//! The stable set is computed by filtering every allocation of the market;
//! the proposal algorithms are the fast path for the lattice extremes and
//! are validated against the brute-force enumeration, not the other way
//! around.

use crate::market::{Allocation, ContractId, Market, Outcome, Preference, Profile};

/// True iff every contract in `y` is acceptable to both of its agents.
pub fn is_individually_rational(y: &Allocation, profile: &Profile, market: &Market) -> bool {
    y.contracts().iter().all(|&c| {
        let k = market.contract(c);
        profile.pref(k.doctor()).accepts(c) && market.hospital_pref(k.hospital()).accepts(c)
    })
}

fn assignments(y: &Allocation, market: &Market) -> (Vec<Outcome>, Vec<Outcome>) {
    let mut doctor = vec![None; market.doctor_count()];
    let mut hospital = vec![None; market.hospital_count()];
    for &c in y.contracts() {
        let k = market.contract(c);
        doctor[k.doctor().0] = Some(c);
        hospital[k.hospital().0] = Some(c);
    }
    (doctor, hospital)
}

fn blocks(
    c: ContractId,
    market: &Market,
    profile: &Profile,
    doctor_asn: &[Outcome],
    hospital_asn: &[Outcome],
) -> bool {
    let k = market.contract(c);
    profile.pref(k.doctor()).prefers(Some(c), doctor_asn[k.doctor().0])
        && market.hospital_pref(k.hospital()).prefers(Some(c), hospital_asn[k.hospital().0])
}

/// Contracts outside `y` that both their doctor and their hospital strictly
/// prefer to their current assignments.
pub fn blocking_contracts(y: &Allocation, profile: &Profile, market: &Market) -> Vec<ContractId> {
    let (doctor_asn, hospital_asn) = assignments(y, market);
    market
        .contract_ids()
        .filter(|&c| !y.contains(c) && blocks(c, market, profile, &doctor_asn, &hospital_asn))
        .collect()
}

/// Individually rational and unblocked.
pub fn is_stable(y: &Allocation, profile: &Profile, market: &Market) -> bool {
    if !is_individually_rational(y, profile, market) {
        return false;
    }
    let (doctor_asn, hospital_asn) = assignments(y, market);
    !market
        .contract_ids()
        .any(|c| !y.contains(c) && blocks(c, market, profile, &doctor_asn, &hospital_asn))
}

/// All stable allocations under one profile, in canonical enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableSet {
    allocations: Vec<Allocation>,
}

impl StableSet {
    /// Number of stable allocations.
    pub fn k(&self) -> usize {
        self.allocations.len()
    }

    pub fn allocations(&self) -> &[Allocation] {
        &self.allocations
    }

    pub fn contains(&self, y: &Allocation) -> bool {
        self.allocations.iter().any(|a| a == y)
    }
}

/// Filter a precomputed candidate list down to the stable allocations.
pub(crate) fn stable_among(
    candidates: &[Allocation],
    profile: &Profile,
    market: &Market,
) -> StableSet {
    let allocations: Vec<Allocation> = candidates
        .iter()
        .filter(|y| is_stable(y, profile, market))
        .cloned()
        .collect();
    // Non-emptiness is a theorem for valid markets; a violation is a defect.
    assert!(
        !allocations.is_empty(),
        "stable set is empty; market or profile construction is broken"
    );
    StableSet { allocations }
}

/// Enumerate the full stable set by brute force over all allocations.
pub fn enumerate_stable(profile: &Profile, market: &Market) -> StableSet {
    stable_among(&market.enumerate_allocations(), profile, market)
}

/// One side proposes, the other holds. `proposer_prefs`/`receiver_prefs` are
/// indexed by the proposing/receiving agent, and `proposer_of`/`receiver_of`
/// map a contract to those indices.
fn proposal_process(
    market: &Market,
    proposer_prefs: &[&Preference],
    receiver_prefs: &[&Preference],
    proposer_of: impl Fn(ContractId) -> usize,
    receiver_of: impl Fn(ContractId) -> usize,
) -> Allocation {
    let mut rejected = vec![false; market.contract_count()];
    let mut held: Vec<Outcome> = vec![None; receiver_prefs.len()];
    let mut matched = vec![false; proposer_prefs.len()];

    loop {
        // Each unmatched proposer offers its best not-yet-rejected contract.
        let mut offers: Vec<Vec<ContractId>> = vec![Vec::new(); receiver_prefs.len()];
        let mut proposed = false;
        for (a, pref) in proposer_prefs.iter().enumerate() {
            if matched[a] {
                continue;
            }
            if let Some(&c) = pref.ranking().iter().find(|&&c| !rejected[c.0]) {
                offers[receiver_of(c)].push(c);
                proposed = true;
            }
        }
        if !proposed {
            break;
        }

        // Each receiver keeps the best acceptable option among the held
        // contract and the new offers, rejecting everything else.
        for (r, batch) in offers.iter().enumerate() {
            if batch.is_empty() {
                continue;
            }
            let mut best = held[r];
            for &c in batch {
                if receiver_prefs[r].prefers(Some(c), best) {
                    best = Some(c);
                }
            }
            if best != held[r] {
                if let Some(old) = held[r] {
                    rejected[old.0] = true;
                    matched[proposer_of(old)] = false;
                }
                held[r] = best;
                matched[proposer_of(best.expect("a new offer was held"))] = true;
            }
            for &c in batch {
                if Some(c) != best {
                    rejected[c.0] = true;
                }
            }
        }
    }

    let mut contracts: Vec<ContractId> = held.into_iter().flatten().collect();
    contracts.sort_unstable();
    Allocation::from_sorted_unchecked(contracts)
}

/// Doctors propose in roster order; hospitals hold their best acceptable
/// offer. Yields the doctor-optimal stable allocation.
pub fn doctor_proposing_da(profile: &Profile, market: &Market) -> Allocation {
    let proposer_prefs: Vec<&Preference> = market.doctor_ids().map(|d| profile.pref(d)).collect();
    let receiver_prefs: Vec<&Preference> =
        market.hospital_ids().map(|h| market.hospital_pref(h)).collect();
    proposal_process(
        market,
        &proposer_prefs,
        &receiver_prefs,
        |c| market.contract(c).doctor().0,
        |c| market.contract(c).hospital().0,
    )
}

/// Hospitals propose in roster order; doctors hold. Yields the
/// hospital-optimal (doctor-pessimal) stable allocation.
pub fn hospital_proposing_da(profile: &Profile, market: &Market) -> Allocation {
    let proposer_prefs: Vec<&Preference> =
        market.hospital_ids().map(|h| market.hospital_pref(h)).collect();
    let receiver_prefs: Vec<&Preference> = market.doctor_ids().map(|d| profile.pref(d)).collect();
    proposal_process(
        market,
        &proposer_prefs,
        &receiver_prefs,
        |c| market.contract(c).hospital().0,
        |c| market.contract(c).doctor().0,
    )
}
