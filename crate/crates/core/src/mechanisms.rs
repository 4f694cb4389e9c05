//! Quantile stable mechanisms and a canonical interior-stable mechanism.

use std::error::Error;
use std::fmt;
use std::str::FromStr;

use crate::market::{Allocation, ContractId, Market, Outcome, Profile};
use crate::stability::{doctor_proposing_da, enumerate_stable, hospital_proposing_da, StableSet};

/// An exact rational in [0, 1], stored reduced. Never a float: the ceiling
/// at points where `k·q` is an integer would otherwise depend on rounding
/// noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quantile {
    num: u64,
    den: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuantileError {
    ZeroDenominator,
    OutOfRange { num: u64, den: u64 },
    Malformed(String),
}

impl fmt::Display for QuantileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantileError::ZeroDenominator => write!(f, "quantile denominator must be nonzero"),
            QuantileError::OutOfRange { num, den } => {
                write!(f, "quantile {num}/{den} is outside [0, 1]")
            }
            QuantileError::Malformed(s) => {
                write!(f, "cannot parse {s:?} as a quantile; expected 'num/den'")
            }
        }
    }
}

impl Error for QuantileError {}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Quantile {
    pub fn new(num: u64, den: u64) -> Result<Quantile, QuantileError> {
        if den == 0 {
            return Err(QuantileError::ZeroDenominator);
        }
        if num > den {
            return Err(QuantileError::OutOfRange { num, den });
        }
        let g = gcd(num, den).max(1);
        Ok(Quantile { num: num / g, den: den / g })
    }

    pub fn zero() -> Quantile {
        Quantile { num: 0, den: 1 }
    }

    pub fn one() -> Quantile {
        Quantile { num: 1, den: 1 }
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }
}

impl fmt::Display for Quantile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Quantile {
    type Err = QuantileError;

    /// Accepts `num/den` or a bare integer (`"1"` parses as `1/1`).
    fn from_str(s: &str) -> Result<Quantile, QuantileError> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (
                n.trim().parse::<u64>().map_err(|_| QuantileError::Malformed(s.into()))?,
                d.trim().parse::<u64>().map_err(|_| QuantileError::Malformed(s.into()))?,
            ),
            None => (s.parse::<u64>().map_err(|_| QuantileError::Malformed(s.into()))?, 1),
        };
        Quantile::new(num, den)
    }
}

impl PartialOrd for Quantile {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Quantile {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Cross-multiply in u128: exact, no overflow for u64 components.
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        lhs.cmp(&rhs)
    }
}

/// `⌈k·q⌉` in exact integer arithmetic, with the convention that the index
/// is 1 when `k·q = 0`. Panics if `k == 0`.
pub fn quantile_index(k: usize, q: Quantile) -> usize {
    assert!(k >= 1, "quantile index needs at least one stable allocation");
    if q.is_zero() {
        return 1;
    }
    let num = k as u128 * q.num as u128;
    num.div_ceil(q.den as u128) as usize
}

/// The built-in mechanisms. `Quantile(0)` and `DoctorDa` compute the same
/// allocation by different routes, as do `Quantile(1)` and `HospitalDa`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Quantile(Quantile),
    InteriorStable,
    DoctorDa,
    HospitalDa,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MechanismParseError {
    UnknownKind(String),
    Quantile(QuantileError),
}

impl fmt::Display for MechanismParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismParseError::UnknownKind(s) => write!(
                f,
                "unknown mechanism {s:?}; expected 'quantile:<num>/<den>', 'interior', \
                 'da:doctors' or 'da:hospitals'"
            ),
            MechanismParseError::Quantile(e) => write!(f, "{e}"),
        }
    }
}

impl Error for MechanismParseError {}

impl Mechanism {
    /// Stable descriptor for reports: `quantile:1/2`, `interior`,
    /// `da:doctors`, `da:hospitals`.
    pub fn descriptor(&self) -> String {
        match self {
            Mechanism::Quantile(q) => format!("quantile:{q}"),
            Mechanism::InteriorStable => "interior".into(),
            Mechanism::DoctorDa => "da:doctors".into(),
            Mechanism::HospitalDa => "da:hospitals".into(),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.descriptor())
    }
}

impl FromStr for Mechanism {
    type Err = MechanismParseError;

    fn from_str(s: &str) -> Result<Mechanism, MechanismParseError> {
        match s.trim() {
            "interior" => Ok(Mechanism::InteriorStable),
            "da:doctors" => Ok(Mechanism::DoctorDa),
            "da:hospitals" => Ok(Mechanism::HospitalDa),
            other => match other.strip_prefix("quantile:") {
                Some(q) => {
                    Ok(Mechanism::Quantile(q.parse().map_err(MechanismParseError::Quantile)?))
                }
                None => Err(MechanismParseError::UnknownKind(other.into())),
            },
        }
    }
}

/// The `j`-th quantile stable allocation: for each doctor, sort that
/// doctor's stable outcomes best-first under their reported preference
/// (the empty outcome participates at its rank, and repeated outcomes stay
/// as multiset entries so the index always ranges over exactly `k`
/// positions), take the `j`-th entry, and union over doctors.
///
/// The result is asserted to be a member of the stable set; a failure is an
/// implementation defect, not a user error. Panics if `j` is out of
/// `[1, k]`.
pub fn quantile_allocation(
    stable: &StableSet,
    profile: &Profile,
    market: &Market,
    j: usize,
) -> Allocation {
    let k = stable.k();
    assert!(j >= 1 && j <= k, "quantile position {j} out of range [1, {k}]");
    let mut picked: Vec<ContractId> = Vec::new();
    for d in market.doctor_ids() {
        let mut outcomes: Vec<Outcome> = stable
            .allocations()
            .iter()
            .map(|y| y.doctor_assignment(market, d))
            .collect();
        outcomes.sort_by_key(|&o| profile.pref(d).rank_key(o));
        if let Some(c) = outcomes[j - 1] {
            picked.push(c);
        }
    }
    picked.sort_unstable();
    let y = Allocation::from_sorted_unchecked(picked);
    assert!(
        stable.contains(&y),
        "quantile allocation is not a member of the stable set; this is a defect"
    );
    y
}

pub(crate) fn interior_index(k: usize) -> usize {
    // Canonical representative: the second quantile when an interior
    // allocation can exist, the doctor-optimal one otherwise.
    if k >= 3 {
        2
    } else {
        1
    }
}

/// A canonical interior-stable mechanism: selects the second quantile
/// allocation when the stable set has at least three members, and the
/// doctor-optimal allocation otherwise.
pub fn interior_stable_mechanism(profile: &Profile, market: &Market) -> Allocation {
    let stable = enumerate_stable(profile, market);
    quantile_allocation(&stable, profile, market, interior_index(stable.k()))
}

/// Run a mechanism on a profile. Quantile mechanisms enumerate the stable
/// set and select the `⌈kq⌉`-th quantile allocation; the deferred-acceptance
/// kinds run the proposal algorithms directly.
pub fn apply_mechanism(mech: Mechanism, profile: &Profile, market: &Market) -> Allocation {
    match mech {
        Mechanism::DoctorDa => doctor_proposing_da(profile, market),
        Mechanism::HospitalDa => hospital_proposing_da(profile, market),
        Mechanism::InteriorStable => interior_stable_mechanism(profile, market),
        Mechanism::Quantile(q) => {
            let stable = enumerate_stable(profile, market);
            let j = quantile_index(stable.k(), q);
            quantile_allocation(&stable, profile, market, j)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{market, theorem_market, truthful_profile};

    fn q(s: &str) -> Quantile {
        s.parse().unwrap()
    }

    #[test]
    fn quantile_index_examples() {
        assert_eq!(quantile_index(4, q("1/2")), 2);
        assert_eq!(quantile_index(7, Quantile::zero()), 1);
        assert_eq!(quantile_index(3, Quantile::one()), 3);
        assert_eq!(quantile_index(3, q("1/2")), 2);
    }

    #[test]
    fn quantile_index_monotone_in_q() {
        let grid = ["0/1", "1/4", "1/3", "1/2", "2/3", "3/4", "1/1"];
        for k in 1..=6 {
            let indices: Vec<usize> = grid.iter().map(|s| quantile_index(k, q(s))).collect();
            assert!(indices.windows(2).all(|w| w[0] <= w[1]), "k={k}: {indices:?}");
            assert_eq!(indices[0], 1);
            assert_eq!(*indices.last().unwrap(), k);
        }
    }

    #[test]
    fn quantile_parsing_and_reduction() {
        assert_eq!(q("2/4"), q("1/2"));
        assert_eq!(q("1").to_string(), "1/1");
        assert_eq!(q("0/7").to_string(), "0/1");
        assert!("3/2".parse::<Quantile>().is_err());
        assert!("1/0".parse::<Quantile>().is_err());
        assert!("x".parse::<Quantile>().is_err());
        assert!(q("1/4") < q("1/3"));
    }

    #[test]
    fn descriptor_round_trip() {
        for s in ["quantile:1/2", "interior", "da:doctors", "da:hospitals", "quantile:0/1"] {
            let mech: Mechanism = s.parse().unwrap();
            assert_eq!(mech.descriptor(), s);
        }
        assert!("quantile:3/2".parse::<Mechanism>().is_err());
        assert!("median".parse::<Mechanism>().is_err());
    }

    #[test]
    fn second_quantile_of_the_chain_market() {
        let (m, d1) = theorem_market(4);
        let p = truthful_profile(&m);
        let stable = enumerate_stable(&p, &m);
        assert_eq!(stable.k(), 4);

        let y = quantile_allocation(&stable, &p, &m, 2);
        assert_eq!(y.doctor_assignment(&m, d1), m.contract_by_id("x2"));
        assert_eq!(y.label(&m), "{x2,w}");

        let first = quantile_allocation(&stable, &p, &m, 1);
        assert_eq!(first, doctor_proposing_da(&p, &m));
    }

    #[test]
    fn apply_mechanism_selects_the_expected_quantile() {
        let (m, d1) = theorem_market(4);
        let p = truthful_profile(&m);
        let y = apply_mechanism(Mechanism::Quantile(q("1/2")), &p, &m);
        assert_eq!(y.doctor_assignment(&m, d1), m.contract_by_id("x2"));

        // Under the truncated report the stable set is a singleton.
        let truncated =
            p.with_replaced(d1, m.doctor_preference(d1, vec![m.contract_by_id("x1").unwrap()]).unwrap());
        let y = apply_mechanism(Mechanism::Quantile(q("1/2")), &truncated, &m);
        assert_eq!(y.doctor_assignment(&m, d1), m.contract_by_id("x1"));

        assert_eq!(
            apply_mechanism(Mechanism::Quantile(Quantile::zero()), &p, &m),
            doctor_proposing_da(&p, &m)
        );
        assert_eq!(
            apply_mechanism(Mechanism::Quantile(Quantile::one()), &p, &m),
            hospital_proposing_da(&p, &m)
        );
    }

    #[test]
    fn interior_mechanism_representative() {
        let (m, d1) = theorem_market(4);
        let p = truthful_profile(&m);
        let y = interior_stable_mechanism(&p, &m);
        assert_eq!(y.doctor_assignment(&m, d1), m.contract_by_id("x2"));

        // k = 1: the unique stable allocation.
        let single = market(&["d"], &["h"], &[("c", "d", "h")], &[("h", &["c"])]);
        let p1 = Profile::new(
            &single,
            vec![single.doctor_preference_by_ids("d", &["c"]).unwrap()],
        )
        .unwrap();
        let y = interior_stable_mechanism(&p1, &single);
        assert_eq!(y.label(&single), "{c}");

        // k = 2: falls back to the doctor-optimal allocation.
        let (m2, _) = theorem_market(2);
        let p2 = truthful_profile(&m2);
        assert_eq!(interior_stable_mechanism(&p2, &m2), doctor_proposing_da(&p2, &m2));
    }
}
