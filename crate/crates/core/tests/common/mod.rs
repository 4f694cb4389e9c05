//! Shared market generators for the integration suites.
#![allow(dead_code)] // each test target uses a different subset

use qsm_core::{ContractDecl, ContractId, Market, Profile};
use rand::prelude::*;
use rand::rngs::StdRng;

/// A random market with up to the given roster and contract sizes, plus a
/// random truthful profile. Preferences are random orderings of random
/// subsets, so acceptability cutoffs (including empty rankings) are covered.
pub fn random_market_with(
    rng: &mut StdRng,
    max_doctors: usize,
    max_hospitals: usize,
    max_contracts: usize,
) -> (Market, Profile) {
    let n_doctors = rng.gen_range(1..=max_doctors);
    let n_hospitals = rng.gen_range(1..=max_hospitals);
    let n_contracts = rng.gen_range(0..=max_contracts);

    let doctors: Vec<String> = (1..=n_doctors).map(|i| format!("d{i}")).collect();
    let hospitals: Vec<String> = (1..=n_hospitals).map(|i| format!("h{i}")).collect();
    let decls: Vec<ContractDecl> = (1..=n_contracts)
        .map(|i| {
            ContractDecl::new(
                &format!("c{i}"),
                &doctors[rng.gen_range(0..n_doctors)],
                &hospitals[rng.gen_range(0..n_hospitals)],
            )
        })
        .collect();

    let rankings: Vec<(String, Vec<String>)> = hospitals
        .iter()
        .map(|h| {
            let own: Vec<String> = decls
                .iter()
                .filter(|c| &c.hospital == h)
                .map(|c| c.id.clone())
                .collect();
            (h.clone(), random_ranking(rng, &own))
        })
        .collect();

    let market = Market::assemble(doctors, hospitals, decls, rankings).unwrap();
    let profile = random_profile(rng, &market);
    (market, profile)
}

pub fn random_market(rng: &mut StdRng) -> (Market, Profile) {
    random_market_with(rng, 3, 3, 8)
}

pub fn random_profile(rng: &mut StdRng, market: &Market) -> Profile {
    let prefs = market
        .doctor_ids()
        .map(|d| {
            let mut pool: Vec<ContractId> = market.contracts_of_doctor(d).to_vec();
            pool.shuffle(rng);
            let cutoff = rng.gen_range(0..=pool.len());
            pool.truncate(cutoff);
            market.doctor_preference(d, pool).unwrap()
        })
        .collect();
    Profile::new(market, prefs).unwrap()
}

fn random_ranking(rng: &mut StdRng, ids: &[String]) -> Vec<String> {
    let mut pool: Vec<String> = ids.to_vec();
    pool.shuffle(rng);
    let cutoff = rng.gen_range(0..=pool.len());
    pool.truncate(cutoff);
    pool
}

/// Every strict ranking of every subset of `ids`, independent of the
/// library's preference enumeration.
pub fn all_rankings(ids: &[String]) -> Vec<Vec<String>> {
    fn perms(items: &[String]) -> Vec<Vec<String>> {
        if items.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            for mut tail in perms(&rest) {
                tail.insert(0, head.clone());
                out.push(tail);
            }
        }
        out
    }
    let mut out = Vec::new();
    for mask in 0usize..(1 << ids.len()) {
        let subset: Vec<String> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| s.clone())
            .collect();
        out.extend(perms(&subset));
    }
    out
}

/// Every market with doctors {d1, d2}, hospitals {h1, h2}, up to
/// `max_contracts` contracts distributed among the four doctor-hospital
/// pairs (as a multiset), and every choice of hospital preferences over the
/// resulting contract sets.
pub fn exhaustive_suite(max_contracts: usize) -> Vec<Market> {
    let pairs = [("d1", "h1"), ("d1", "h2"), ("d2", "h1"), ("d2", "h2")];

    // Multisets over the four pairs as nondecreasing index sequences.
    let mut shapes: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_contracts {
        let mut next = Vec::new();
        for shape in &frontier {
            let start = shape.last().copied().unwrap_or(0);
            for p in start..pairs.len() {
                let mut extended = shape.clone();
                extended.push(p);
                next.push(extended);
            }
        }
        shapes.extend(next.iter().cloned());
        frontier = next;
    }

    let mut markets = Vec::new();
    for shape in &shapes {
        let decls: Vec<ContractDecl> = shape
            .iter()
            .enumerate()
            .map(|(i, &p)| ContractDecl::new(&format!("c{}", i + 1), pairs[p].0, pairs[p].1))
            .collect();
        let per_hospital: Vec<Vec<String>> = ["h1", "h2"]
            .iter()
            .map(|h| decls.iter().filter(|c| &c.hospital == h).map(|c| c.id.clone()).collect())
            .collect();
        for h1_ranking in all_rankings(&per_hospital[0]) {
            for h2_ranking in all_rankings(&per_hospital[1]) {
                markets.push(
                    Market::assemble(
                        vec!["d1".into(), "d2".into()],
                        vec!["h1".into(), "h2".into()],
                        decls.clone(),
                        vec![("h1".into(), h1_ranking.clone()), ("h2".into(), h2_ranking)],
                    )
                    .unwrap(),
                );
            }
        }
    }
    markets
}
