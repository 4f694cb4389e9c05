//! Market data model: agents, contracts, preferences, profiles, allocations.
//!
//! Agents and contracts are referred to by symbolic ids in the file format,
//! but internally everything is resolved once into dense indices
//! ([`DoctorId`], [`HospitalId`], [`ContractId`]) so that the enumeration
//! kernels work on plain integers.

use std::collections::HashMap;
use std::error::Error;
use std::fmt;

/// Index of a doctor in the market roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoctorId(pub usize);

/// Index of a hospital in the market roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HospitalId(pub usize);

/// Index of a contract in the market roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContractId(pub usize);

/// Either side of the market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agent {
    Doctor(DoctorId),
    Hospital(HospitalId),
}

/// What an agent ends up with: a contract, or nothing (`None` is the empty
/// outcome).
pub type Outcome = Option<ContractId>;

/// A bilateral agreement between one doctor and one hospital. Several
/// contracts may bind the same pair under different terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Contract {
    id: String,
    doctor: DoctorId,
    hospital: HospitalId,
}

impl Contract {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn doctor(&self) -> DoctorId {
        self.doctor
    }

    pub fn hospital(&self) -> HospitalId {
        self.hospital
    }
}

/// A contract stated in terms of agent names, before index resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractDecl {
    pub id: String,
    pub doctor: String,
    pub hospital: String,
}

impl ContractDecl {
    pub fn new(id: &str, doctor: &str, hospital: &str) -> Self {
        ContractDecl {
            id: id.to_string(),
            doctor: doctor.to_string(),
            hospital: hospital.to_string(),
        }
    }
}

/// Semantic errors raised while assembling markets, preferences, profiles or
/// allocations from declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarketError {
    BadToken(String),
    DuplicateDoctor(String),
    DuplicateHospital(String),
    DuplicateContract(String),
    UnknownDoctor { contract: String, doctor: String },
    UnknownHospital { contract: String, hospital: String },
    UnknownRankedHospital(String),
    UnknownRankedDoctor(String),
    DuplicateHospitalRanking(String),
    DuplicateDoctorRanking(String),
    MissingHospitalRanking(String),
    IncompleteProfile { missing: String },
    UnknownContractInRanking { owner: String, contract: String },
    ForeignContractInRanking { owner: String, contract: String },
    DuplicateContractInRanking { owner: String, contract: String },
    InvalidRanking(String),
    InvalidProfile(String),
    InvalidAllocation(String),
}

impl fmt::Display for MarketError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use MarketError::*;
        match self {
            BadToken(t) => write!(
                f,
                "invalid id {t:?}: ids are non-empty strings of letters, digits and '_'"
            ),
            DuplicateDoctor(d) => write!(f, "duplicate doctor id {d:?}"),
            DuplicateHospital(h) => write!(f, "duplicate hospital id {h:?}"),
            DuplicateContract(c) => write!(f, "duplicate contract id {c:?}"),
            UnknownDoctor { contract, doctor } => {
                write!(f, "contract {contract:?} names unknown doctor {doctor:?}")
            }
            UnknownHospital { contract, hospital } => {
                write!(f, "contract {contract:?} names unknown hospital {hospital:?}")
            }
            UnknownRankedHospital(h) => write!(f, "ranking given for unknown hospital {h:?}"),
            UnknownRankedDoctor(d) => write!(f, "ranking given for unknown doctor {d:?}"),
            DuplicateHospitalRanking(h) => write!(f, "hospital {h:?} has more than one ranking"),
            DuplicateDoctorRanking(d) => write!(f, "doctor {d:?} has more than one ranking"),
            MissingHospitalRanking(h) => {
                write!(f, "hospital {h:?} has no ranking line (use an empty ranking if none is acceptable)")
            }
            IncompleteProfile { missing } => {
                write!(f, "doctor rankings are present but doctor {missing:?} has none")
            }
            UnknownContractInRanking { owner, contract } => {
                write!(f, "ranking for {owner:?} lists unknown contract {contract:?}")
            }
            ForeignContractInRanking { owner, contract } => {
                write!(f, "ranking for {owner:?} lists contract {contract:?}, which does not involve {owner:?}")
            }
            DuplicateContractInRanking { owner, contract } => {
                write!(f, "ranking for {owner:?} lists contract {contract:?} twice")
            }
            InvalidRanking(msg) => write!(f, "invalid ranking: {msg}"),
            InvalidProfile(msg) => write!(f, "invalid profile: {msg}"),
            InvalidAllocation(msg) => write!(f, "invalid allocation: {msg}"),
        }
    }
}

impl Error for MarketError {}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A strict ranking of an agent's own contracts, best first. Contracts of the
/// owner absent from the ranking are unacceptable and rank below the empty
/// outcome; ties among unacceptable contracts are broken by contract index so
/// that the induced order on outcomes is total.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Preference {
    owner: Agent,
    ranking: Vec<ContractId>,
}

impl Preference {
    pub(crate) fn new_unchecked(owner: Agent, ranking: Vec<ContractId>) -> Self {
        Preference { owner, ranking }
    }

    pub fn owner(&self) -> Agent {
        self.owner
    }

    /// Acceptable contracts, best first.
    pub fn ranking(&self) -> &[ContractId] {
        &self.ranking
    }

    /// Whether `c` is acceptable (listed).
    pub fn accepts(&self, c: ContractId) -> bool {
        self.ranking.contains(&c)
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    /// Sort key over outcomes: lower is better. Listed contracts come first
    /// in ranking order, then the empty outcome, then unlisted contracts.
    pub(crate) fn rank_key(&self, o: Outcome) -> (u8, usize) {
        match o {
            Some(c) => match self.ranking.iter().position(|&x| x == c) {
                Some(pos) => (0, pos),
                None => (2, c.0),
            },
            None => (1, 0),
        }
    }

    /// Strict preference: `a` is strictly better than `b`.
    pub fn prefers(&self, a: Outcome, b: Outcome) -> bool {
        self.rank_key(a) < self.rank_key(b)
    }

    /// Weak preference: `a` equals `b` or is strictly better.
    pub fn weakly_prefers(&self, a: Outcome, b: Outcome) -> bool {
        a == b || self.prefers(a, b)
    }
}

/// One preference per doctor, in roster order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    prefs: Vec<Preference>,
}

impl Profile {
    pub fn new(market: &Market, prefs: Vec<Preference>) -> Result<Profile, MarketError> {
        if prefs.len() != market.doctor_count() {
            return Err(MarketError::InvalidProfile(format!(
                "expected {} preferences, got {}",
                market.doctor_count(),
                prefs.len()
            )));
        }
        for (i, p) in prefs.iter().enumerate() {
            if p.owner() != Agent::Doctor(DoctorId(i)) {
                return Err(MarketError::InvalidProfile(format!(
                    "preference at position {i} is not owned by doctor {:?}",
                    market.doctor_name(DoctorId(i))
                )));
            }
        }
        Ok(Profile { prefs })
    }

    pub fn pref(&self, d: DoctorId) -> &Preference {
        &self.prefs[d.0]
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    /// A copy of this profile with doctor `d`'s preference swapped out.
    pub fn with_replaced(&self, d: DoctorId, pref: Preference) -> Profile {
        let mut prefs = self.prefs.clone();
        prefs[d.0] = pref;
        Profile { prefs }
    }
}

/// A set of contracts with at most one contract per agent, stored as a
/// strictly ascending list of contract indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    contracts: Vec<ContractId>,
}

impl Allocation {
    pub fn empty() -> Allocation {
        Allocation { contracts: Vec::new() }
    }

    pub fn new(market: &Market, mut contracts: Vec<ContractId>) -> Result<Allocation, MarketError> {
        contracts.sort_unstable();
        for w in contracts.windows(2) {
            if w[0] == w[1] {
                return Err(MarketError::InvalidAllocation(format!(
                    "contract {:?} appears twice",
                    market.contract(w[0]).id()
                )));
            }
        }
        for &c in &contracts {
            if c.0 >= market.contract_count() {
                return Err(MarketError::InvalidAllocation(format!(
                    "contract index {} out of range",
                    c.0
                )));
            }
        }
        let alloc = Allocation { contracts };
        if let Some((a, b)) = alloc.find_agent_conflict(market) {
            return Err(MarketError::InvalidAllocation(format!(
                "contracts {:?} and {:?} share an agent",
                market.contract(a).id(),
                market.contract(b).id()
            )));
        }
        Ok(alloc)
    }

    pub(crate) fn from_sorted_unchecked(contracts: Vec<ContractId>) -> Allocation {
        debug_assert!(contracts.windows(2).all(|w| w[0] < w[1]));
        Allocation { contracts }
    }

    pub fn contracts(&self) -> &[ContractId] {
        &self.contracts
    }

    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }

    pub fn contains(&self, c: ContractId) -> bool {
        self.contracts.binary_search(&c).is_ok()
    }

    fn find_agent_conflict(&self, market: &Market) -> Option<(ContractId, ContractId)> {
        for (i, &a) in self.contracts.iter().enumerate() {
            for &b in &self.contracts[i + 1..] {
                let (ca, cb) = (market.contract(a), market.contract(b));
                if ca.doctor == cb.doctor || ca.hospital == cb.hospital {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Whether the one-contract-per-agent invariant holds over `market`.
    pub fn is_valid(&self, market: &Market) -> bool {
        self.contracts.windows(2).all(|w| w[0] < w[1])
            && self.contracts.iter().all(|c| c.0 < market.contract_count())
            && self.find_agent_conflict(market).is_none()
    }

    /// The unique contract involving `agent`, or the empty outcome.
    pub fn assignment(&self, market: &Market, agent: Agent) -> Outcome {
        self.contracts.iter().copied().find(|&c| {
            let k = market.contract(c);
            match agent {
                Agent::Doctor(d) => k.doctor == d,
                Agent::Hospital(h) => k.hospital == h,
            }
        })
    }

    pub fn doctor_assignment(&self, market: &Market, d: DoctorId) -> Outcome {
        self.assignment(market, Agent::Doctor(d))
    }

    pub fn hospital_assignment(&self, market: &Market, h: HospitalId) -> Outcome {
        self.assignment(market, Agent::Hospital(h))
    }

    /// Render as `{x1,w}` using contract ids, `{}` when empty.
    pub fn label(&self, market: &Market) -> String {
        let ids: Vec<&str> = self.contracts.iter().map(|&c| market.contract(c).id()).collect();
        format!("{{{}}}", ids.join(","))
    }
}

/// The universal contract set, agent rosters and fixed hospital preferences.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Market {
    doctors: Vec<String>,
    hospitals: Vec<String>,
    contracts: Vec<Contract>,
    hospital_prefs: Vec<Preference>,
    by_doctor: Vec<Vec<ContractId>>,
    by_hospital: Vec<Vec<ContractId>>,
}

impl Market {
    /// Resolve declarations into a validated market. Every hospital must have
    /// a ranking entry (possibly empty).
    pub fn assemble(
        doctors: Vec<String>,
        hospitals: Vec<String>,
        contracts: Vec<ContractDecl>,
        hospital_rankings: Vec<(String, Vec<String>)>,
    ) -> Result<Market, MarketError> {
        for d in &doctors {
            if !valid_token(d) {
                return Err(MarketError::BadToken(d.clone()));
            }
        }
        for h in &hospitals {
            if !valid_token(h) {
                return Err(MarketError::BadToken(h.clone()));
            }
        }

        let mut doctor_index = HashMap::new();
        for (i, d) in doctors.iter().enumerate() {
            if doctor_index.insert(d.clone(), DoctorId(i)).is_some() {
                return Err(MarketError::DuplicateDoctor(d.clone()));
            }
        }
        let mut hospital_index = HashMap::new();
        for (i, h) in hospitals.iter().enumerate() {
            if hospital_index.insert(h.clone(), HospitalId(i)).is_some() {
                return Err(MarketError::DuplicateHospital(h.clone()));
            }
        }

        let mut contract_index = HashMap::new();
        let mut resolved = Vec::with_capacity(contracts.len());
        let mut by_doctor = vec![Vec::new(); doctors.len()];
        let mut by_hospital = vec![Vec::new(); hospitals.len()];
        for (i, decl) in contracts.into_iter().enumerate() {
            if !valid_token(&decl.id) {
                return Err(MarketError::BadToken(decl.id));
            }
            let doctor = *doctor_index.get(&decl.doctor).ok_or_else(|| {
                MarketError::UnknownDoctor { contract: decl.id.clone(), doctor: decl.doctor.clone() }
            })?;
            let hospital = *hospital_index.get(&decl.hospital).ok_or_else(|| {
                MarketError::UnknownHospital {
                    contract: decl.id.clone(),
                    hospital: decl.hospital.clone(),
                }
            })?;
            if contract_index.insert(decl.id.clone(), ContractId(i)).is_some() {
                return Err(MarketError::DuplicateContract(decl.id));
            }
            by_doctor[doctor.0].push(ContractId(i));
            by_hospital[hospital.0].push(ContractId(i));
            resolved.push(Contract { id: decl.id, doctor, hospital });
        }

        let mut prefs: Vec<Option<Preference>> = vec![None; hospitals.len()];
        for (owner, names) in hospital_rankings {
            let h = *hospital_index
                .get(&owner)
                .ok_or_else(|| MarketError::UnknownRankedHospital(owner.clone()))?;
            if prefs[h.0].is_some() {
                return Err(MarketError::DuplicateHospitalRanking(owner));
            }
            let ranking = resolve_ranking(&owner, &names, &contract_index, |c| {
                resolved[c.0].hospital == h
            })?;
            prefs[h.0] = Some(Preference::new_unchecked(Agent::Hospital(h), ranking));
        }
        let mut hospital_prefs = Vec::with_capacity(hospitals.len());
        for (i, p) in prefs.into_iter().enumerate() {
            match p {
                Some(p) => hospital_prefs.push(p),
                None => return Err(MarketError::MissingHospitalRanking(hospitals[i].clone())),
            }
        }

        Ok(Market {
            doctors,
            hospitals,
            contracts: resolved,
            hospital_prefs,
            by_doctor,
            by_hospital,
        })
    }

    pub fn doctor_count(&self) -> usize {
        self.doctors.len()
    }

    pub fn hospital_count(&self) -> usize {
        self.hospitals.len()
    }

    pub fn contract_count(&self) -> usize {
        self.contracts.len()
    }

    pub fn doctor_ids(&self) -> impl Iterator<Item = DoctorId> {
        (0..self.doctors.len()).map(DoctorId)
    }

    pub fn hospital_ids(&self) -> impl Iterator<Item = HospitalId> {
        (0..self.hospitals.len()).map(HospitalId)
    }

    pub fn contract_ids(&self) -> impl Iterator<Item = ContractId> {
        (0..self.contracts.len()).map(ContractId)
    }

    pub fn doctor_name(&self, d: DoctorId) -> &str {
        &self.doctors[d.0]
    }

    pub fn hospital_name(&self, h: HospitalId) -> &str {
        &self.hospitals[h.0]
    }

    pub fn agent_name(&self, a: Agent) -> &str {
        match a {
            Agent::Doctor(d) => self.doctor_name(d),
            Agent::Hospital(h) => self.hospital_name(h),
        }
    }

    pub fn contract(&self, c: ContractId) -> &Contract {
        &self.contracts[c.0]
    }

    pub fn contracts(&self) -> &[Contract] {
        &self.contracts
    }

    pub fn doctor_index(&self, name: &str) -> Option<DoctorId> {
        self.doctors.iter().position(|d| d == name).map(DoctorId)
    }

    pub fn hospital_index(&self, name: &str) -> Option<HospitalId> {
        self.hospitals.iter().position(|h| h == name).map(HospitalId)
    }

    pub fn contract_by_id(&self, id: &str) -> Option<ContractId> {
        self.contracts.iter().position(|c| c.id == id).map(ContractId)
    }

    /// Contracts involving `d`, in roster order.
    pub fn contracts_of_doctor(&self, d: DoctorId) -> &[ContractId] {
        &self.by_doctor[d.0]
    }

    pub fn contracts_of_hospital(&self, h: HospitalId) -> &[ContractId] {
        &self.by_hospital[h.0]
    }

    pub fn hospital_pref(&self, h: HospitalId) -> &Preference {
        &self.hospital_prefs[h.0]
    }

    /// Build a doctor's preference from contract indices, validating
    /// ownership and uniqueness.
    pub fn doctor_preference(
        &self,
        d: DoctorId,
        ranking: Vec<ContractId>,
    ) -> Result<Preference, MarketError> {
        let owner_name = self.doctor_name(d).to_string();
        let mut seen = Vec::new();
        for &c in &ranking {
            if c.0 >= self.contracts.len() {
                return Err(MarketError::UnknownContractInRanking {
                    owner: owner_name,
                    contract: format!("#{}", c.0),
                });
            }
            if self.contracts[c.0].doctor != d {
                return Err(MarketError::ForeignContractInRanking {
                    owner: owner_name,
                    contract: self.contracts[c.0].id.clone(),
                });
            }
            if seen.contains(&c) {
                return Err(MarketError::DuplicateContractInRanking {
                    owner: owner_name,
                    contract: self.contracts[c.0].id.clone(),
                });
            }
            seen.push(c);
        }
        Ok(Preference::new_unchecked(Agent::Doctor(d), ranking))
    }

    /// Build a doctor's preference from contract ids.
    pub fn doctor_preference_by_ids(
        &self,
        doctor: &str,
        names: &[&str],
    ) -> Result<Preference, MarketError> {
        let d = self
            .doctor_index(doctor)
            .ok_or_else(|| MarketError::UnknownRankedDoctor(doctor.to_string()))?;
        let index: HashMap<String, ContractId> = self
            .contracts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), ContractId(i)))
            .collect();
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let ranking = resolve_ranking(doctor, &names, &index, |c| self.contracts[c.0].doctor == d)?;
        Ok(Preference::new_unchecked(Agent::Doctor(d), ranking))
    }

    /// Assemble a truthful profile from per-doctor rankings given by name.
    /// Every doctor in the roster must be covered exactly once.
    pub fn profile_from_rankings(
        &self,
        rankings: &[(String, Vec<String>)],
    ) -> Result<Profile, MarketError> {
        let mut prefs: Vec<Option<Preference>> = vec![None; self.doctor_count()];
        for (owner, names) in rankings {
            let d = self
                .doctor_index(owner)
                .ok_or_else(|| MarketError::UnknownRankedDoctor(owner.clone()))?;
            if prefs[d.0].is_some() {
                return Err(MarketError::DuplicateDoctorRanking(owner.clone()));
            }
            let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            prefs[d.0] = Some(self.doctor_preference_by_ids(owner, &name_refs)?);
        }
        let mut out = Vec::with_capacity(prefs.len());
        for (i, p) in prefs.into_iter().enumerate() {
            match p {
                Some(p) => out.push(p),
                None => {
                    return Err(MarketError::IncompleteProfile {
                        missing: self.doctors[i].clone(),
                    })
                }
            }
        }
        Ok(Profile { prefs: out })
    }

    /// Render a ranking as `x1 > x2`; empty rankings render as the empty
    /// string.
    pub fn ranking_label(&self, p: &Preference) -> String {
        let ids: Vec<&str> = p.ranking().iter().map(|&c| self.contract(c).id()).collect();
        ids.join(" > ")
    }

    /// Render an outcome as the contract id, or `∅` for the empty outcome.
    pub fn outcome_label(&self, o: Outcome) -> String {
        match o {
            Some(c) => self.contract(c).id().to_string(),
            None => "∅".to_string(),
        }
    }

    /// Size of doctor `d`'s preference domain without materializing it:
    /// the sum over subset sizes `s` of `C(n,s)·s!` falling factorials.
    pub fn preference_domain_size(&self, d: DoctorId) -> u128 {
        let n = self.by_doctor[d.0].len();
        let mut total: u128 = 1;
        let mut term: u128 = 1;
        for s in 1..=n {
            term = term.saturating_mul((n - s + 1) as u128);
            total = total.saturating_add(term);
        }
        total
    }

    /// Every preference doctor `d` could report: each subset of the doctor's
    /// contracts, in every order. Subsets are visited in ascending bitmask
    /// order over the doctor's contract list, and each subset in lexicographic
    /// permutation order, so the output order is canonical.
    pub fn enumerate_preferences(&self, d: DoctorId) -> Vec<Preference> {
        let pool = &self.by_doctor[d.0];
        assert!(
            pool.len() <= 10,
            "preference domain for doctor {:?} is too large to materialize ({} contracts)",
            self.doctor_name(d),
            pool.len()
        );
        let mut out = Vec::new();
        for mask in 0usize..(1 << pool.len()) {
            let subset: Vec<ContractId> = pool
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &c)| c)
                .collect();
            for perm in permutations(&subset) {
                out.push(Preference::new_unchecked(Agent::Doctor(d), perm));
            }
        }
        out
    }

    /// Every allocation over this market, in ascending subset-bitmask order
    /// over the contract roster (the empty allocation first).
    pub fn enumerate_allocations(&self) -> Vec<Allocation> {
        let mut used_doctor = vec![false; self.doctors.len()];
        let mut used_hospital = vec![false; self.hospitals.len()];
        let mut chosen = Vec::new();
        let mut out = Vec::new();
        self.allocation_dfs(
            self.contracts.len(),
            &mut used_doctor,
            &mut used_hospital,
            &mut chosen,
            &mut out,
        );
        out
    }

    fn allocation_dfs(
        &self,
        depth: usize,
        used_doctor: &mut [bool],
        used_hospital: &mut [bool],
        chosen: &mut Vec<ContractId>,
        out: &mut Vec<Allocation>,
    ) {
        if depth == 0 {
            let mut contracts = chosen.clone();
            contracts.reverse();
            out.push(Allocation::from_sorted_unchecked(contracts));
            return;
        }
        let idx = depth - 1;
        // Excluding the contract first yields ascending bitmask order.
        self.allocation_dfs(idx, used_doctor, used_hospital, chosen, out);
        let c = &self.contracts[idx];
        if !used_doctor[c.doctor.0] && !used_hospital[c.hospital.0] {
            used_doctor[c.doctor.0] = true;
            used_hospital[c.hospital.0] = true;
            chosen.push(ContractId(idx));
            self.allocation_dfs(idx, used_doctor, used_hospital, chosen, out);
            chosen.pop();
            used_doctor[c.doctor.0] = false;
            used_hospital[c.hospital.0] = false;
        }
    }
}

fn resolve_ranking(
    owner: &str,
    names: &[String],
    index: &HashMap<String, ContractId>,
    involves_owner: impl Fn(ContractId) -> bool,
) -> Result<Vec<ContractId>, MarketError> {
    let mut ranking = Vec::with_capacity(names.len());
    for name in names {
        let &c = index.get(name).ok_or_else(|| MarketError::UnknownContractInRanking {
            owner: owner.to_string(),
            contract: name.clone(),
        })?;
        if !involves_owner(c) {
            return Err(MarketError::ForeignContractInRanking {
                owner: owner.to_string(),
                contract: name.clone(),
            });
        }
        if ranking.contains(&c) {
            return Err(MarketError::DuplicateContractInRanking {
                owner: owner.to_string(),
                contract: name.clone(),
            });
        }
        ranking.push(c);
    }
    Ok(ranking)
}

/// All permutations of `items`, in lexicographic order relative to the input
/// order.
fn permutations(items: &[ContractId]) -> Vec<Vec<ContractId>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}
