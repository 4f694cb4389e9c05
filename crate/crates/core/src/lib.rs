//! One-to-one matching markets with contracts: stable-set enumeration,
//! quantile stable mechanisms, and exhaustive manipulation analysis.
//!
//! The crate is built around exact, desk-scale search rather than asymptotic
//! cleverness:
//!
//! - [`market`] defines the data model (contracts, preferences with an
//!   acceptability cutoff, profiles, one-to-one allocations) and enumerates
//!   preference domains and allocation sets in a canonical order.
//! - [`stability`] decides individual rationality, blocking and stability,
//!   enumerates the full stable set by brute force, and implements both
//!   deferred-acceptance algorithms as fast paths for the lattice extremes.
//! - [`mechanisms`] implements the quantile stable mechanisms (selecting the
//!   `⌈kq⌉`-th quantile allocation, where `k` is the number of stable
//!   allocations under the reported profile) and a canonical interior-stable
//!   mechanism.
//! - [`strategy`] computes option sets by exhausting opponent preference
//!   domains, detects manipulations and obvious manipulations, certifies
//!   strategy-proofness and non-obvious-manipulability on small markets, and
//!   generates the minimal counterexample family for positive quantiles.
//! - [`parse`] reads and writes the line-oriented market file format, and
//!   [`report`] provides machine-readable verdict records.
//!
//! All domain values are immutable after construction and safe to share
//! across worker threads; every operation is a pure function of its inputs.

pub mod market;
pub mod mechanisms;
pub mod parse;
pub mod report;
pub mod stability;
pub mod strategy;

pub use market::{
    Agent, Allocation, Contract, ContractDecl, ContractId, DoctorId, HospitalId, Market,
    MarketError, Outcome, Preference, Profile,
};
pub use mechanisms::{
    apply_mechanism, interior_stable_mechanism, quantile_allocation, quantile_index, Mechanism,
    MechanismParseError, Quantile, QuantileError,
};
pub use parse::{parse_market, parse_ranking, ParseError};
pub use stability::{
    blocking_contracts, doctor_proposing_da, enumerate_stable, hospital_proposing_da,
    is_individually_rational, is_stable, StableSet,
};
pub use strategy::{
    best_case, certify, counterexample_market, is_manipulation, is_obvious_manipulation,
    minimal_k_for, option_set, worst_case, Certification, CounterexampleError,
    CounterexampleFound, CounterexampleInstance, OmVerdict, OptionSet, Property, StrategyError,
    Subprofile, TriggeredCondition, DEFAULT_BUDGET,
};
