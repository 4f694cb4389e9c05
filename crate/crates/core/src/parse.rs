//! Line-oriented market description format.
//!
//! ```text
//! # comment
//! doctors: d1 d2
//! hospitals: h1 h2
//! contract x1 = (d1, h1)
//! contract x2 = (d1, h1)
//! contract w = (d2, h2)
//! hospital h1 : x2 > x1        # acceptable contracts, best first
//! hospital h2 : w
//! doctor d1 : x1 > x2          # optional truthful profile
//! doctor d2 : w
//! ```
//!
//! Every hospital must have a `hospital` line, possibly with an empty
//! ranking. Doctor lines are optional, but when any is present all doctors
//! must be covered. Ids are non-empty strings of letters, digits and `_`.

use std::error::Error;
use std::fmt;

use crate::market::{Agent, ContractDecl, Market, MarketError, Preference, Profile};

/// A parse failure with its position. `line == 0` means the error concerns
/// the file as a whole (e.g. a missing section); `col == 0` means the whole
/// line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { line, col, message: message.into() }
    }

    fn whole_file(message: impl Into<String>) -> ParseError {
        ParseError { line: 0, col: 0, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.col) {
            (0, _) => write!(f, "{}", self.message),
            (l, 0) => write!(f, "line {l}: {}", self.message),
            (l, c) => write!(f, "line {l}, col {c}: {}", self.message),
        }
    }
}

impl Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Colon,
    Eq,
    LParen,
    RParen,
    Comma,
    Gt,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Colon => "':'".into(),
            Tok::Eq => "'='".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Gt => "'>'".into(),
        }
    }
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = line.chars().enumerate().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                chars.next();
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Word(word), col));
            }
            ':' | '=' | '(' | ')' | ',' | '>' => {
                let t = match c {
                    ':' => Tok::Colon,
                    '=' => Tok::Eq,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    _ => Tok::Gt,
                };
                toks.push((t, col));
                chars.next();
            }
            other => {
                return Err(ParseError::at(
                    lineno,
                    col,
                    format!("unexpected character {other:?}"),
                ))
            }
        }
    }
    Ok(toks)
}

/// Cursor over one line's tokens.
struct Cursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    line_len: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [(Tok, usize)], line: usize, line_len: usize) -> Self {
        Cursor { toks, pos: 0, line, line_len }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<(&'a Tok, usize)> {
        let item = self.toks.get(self.pos).map(|(t, c)| (t, *c))?;
        self.pos += 1;
        Some(item)
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<usize, ParseError> {
        match self.next() {
            Some((t, col)) if t == want => Ok(col),
            Some((t, col)) => Err(ParseError::at(
                self.line,
                col,
                format!("expected {what}, found {}", t.describe()),
            )),
            None => Err(ParseError::at(
                self.line,
                self.line_len + 1,
                format!("expected {what}, found end of line"),
            )),
        }
    }

    fn expect_word(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        match self.next() {
            Some((Tok::Word(w), col)) => Ok((w.clone(), col)),
            Some((t, col)) => Err(ParseError::at(
                self.line,
                col,
                format!("expected {what}, found {}", t.describe()),
            )),
            None => Err(ParseError::at(
                self.line,
                self.line_len + 1,
                format!("expected {what}, found end of line"),
            )),
        }
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        if let Some((t, col)) = self.next() {
            return Err(ParseError::at(
                self.line,
                col,
                format!("unexpected trailing {}", t.describe()),
            ));
        }
        Ok(())
    }

    /// `word (> word)*` or nothing.
    fn ranking(&mut self) -> Result<Vec<(String, usize)>, ParseError> {
        let mut items = Vec::new();
        if self.peek().is_none() {
            return Ok(items);
        }
        loop {
            items.push(self.expect_word("a contract id")?);
            match self.next() {
                None => return Ok(items),
                Some((Tok::Gt, _)) => continue,
                Some((t, col)) => {
                    return Err(ParseError::at(
                        self.line,
                        col,
                        format!("expected '>' or end of line, found {}", t.describe()),
                    ))
                }
            }
        }
    }
}

/// `(line, owner, ranking items with their columns)`.
type RankingDecl = (usize, String, Vec<(String, usize)>);

#[derive(Default)]
struct Declarations {
    doctors: Option<(usize, Vec<(String, usize)>)>,
    hospitals: Option<(usize, Vec<(String, usize)>)>,
    contracts: Vec<(usize, ContractDecl)>,
    hospital_rankings: Vec<RankingDecl>,
    doctor_rankings: Vec<RankingDecl>,
}

/// Parse a market description. Returns the market and, when doctor lines are
/// present (or the doctor roster is empty), the truthful profile.
pub fn parse_market(text: &str) -> Result<(Market, Option<Profile>), ParseError> {
    let mut decls = Declarations::default();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let toks = tokenize(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(&toks, lineno, raw.chars().count());
        let (keyword, kw_col) = cur.expect_word("a section keyword")?;
        match keyword.as_str() {
            "doctors" => {
                cur.expect(&Tok::Colon, "':'")?;
                if decls.doctors.is_some() {
                    return Err(ParseError::at(lineno, kw_col, "duplicate 'doctors:' line"));
                }
                let mut names = Vec::new();
                while cur.peek().is_some() {
                    names.push(cur.expect_word("a doctor id")?);
                }
                decls.doctors = Some((lineno, names));
            }
            "hospitals" => {
                cur.expect(&Tok::Colon, "':'")?;
                if decls.hospitals.is_some() {
                    return Err(ParseError::at(lineno, kw_col, "duplicate 'hospitals:' line"));
                }
                let mut names = Vec::new();
                while cur.peek().is_some() {
                    names.push(cur.expect_word("a hospital id")?);
                }
                decls.hospitals = Some((lineno, names));
            }
            "contract" => {
                let (id, _) = cur.expect_word("a contract id")?;
                cur.expect(&Tok::Eq, "'='")?;
                cur.expect(&Tok::LParen, "'('")?;
                let (doctor, _) = cur.expect_word("a doctor id")?;
                cur.expect(&Tok::Comma, "','")?;
                let (hospital, _) = cur.expect_word("a hospital id")?;
                cur.expect(&Tok::RParen, "')'")?;
                cur.expect_end()?;
                decls.contracts.push((lineno, ContractDecl { id, doctor, hospital }));
            }
            "hospital" => {
                let (id, _) = cur.expect_word("a hospital id")?;
                cur.expect(&Tok::Colon, "':'")?;
                let items = cur.ranking()?;
                decls.hospital_rankings.push((lineno, id, items));
            }
            "doctor" => {
                let (id, _) = cur.expect_word("a doctor id")?;
                cur.expect(&Tok::Colon, "':'")?;
                let items = cur.ranking()?;
                decls.doctor_rankings.push((lineno, id, items));
            }
            other => {
                return Err(ParseError::at(
                    lineno,
                    kw_col,
                    format!(
                        "unknown keyword {other:?}; expected 'doctors', 'hospitals', \
                         'contract', 'hospital' or 'doctor'"
                    ),
                ))
            }
        }
    }

    let (_, doctor_names) = decls
        .doctors
        .as_ref()
        .ok_or_else(|| ParseError::whole_file("missing 'doctors:' line"))?;
    let (_, hospital_names) = decls
        .hospitals
        .as_ref()
        .ok_or_else(|| ParseError::whole_file("missing 'hospitals:' line"))?;

    let market = Market::assemble(
        doctor_names.iter().map(|(n, _)| n.clone()).collect(),
        hospital_names.iter().map(|(n, _)| n.clone()).collect(),
        decls.contracts.iter().map(|(_, d)| d.clone()).collect(),
        decls
            .hospital_rankings
            .iter()
            .map(|(_, id, items)| (id.clone(), items.iter().map(|(n, _)| n.clone()).collect()))
            .collect(),
    )
    .map_err(|e| locate(&e, &decls))?;

    let profile = if decls.doctor_rankings.is_empty() && market.doctor_count() > 0 {
        None
    } else {
        let rankings: Vec<(String, Vec<String>)> = decls
            .doctor_rankings
            .iter()
            .map(|(_, id, items)| (id.clone(), items.iter().map(|(n, _)| n.clone()).collect()))
            .collect();
        Some(market.profile_from_rankings(&rankings).map_err(|e| locate(&e, &decls))?)
    };

    Ok((market, profile))
}

/// Map a semantic error back to the declaration that caused it.
fn locate(err: &MarketError, decls: &Declarations) -> ParseError {
    use MarketError::*;

    fn second_occurrence(items: &[(String, usize)], name: &str) -> Option<usize> {
        items.iter().filter(|(n, _)| n == name).nth(1).map(|(_, c)| *c)
    }

    fn ranking_pos<'a>(rankings: &'a [RankingDecl], owner: &str) -> Option<&'a RankingDecl> {
        rankings.iter().find(|(_, id, _)| id == owner)
    }

    fn ranking_item_pos(rankings: &[RankingDecl], owner: &str, contract: &str) -> (usize, usize) {
        match ranking_pos(rankings, owner) {
            Some((line, _, items)) => {
                let col = items.iter().find(|(n, _)| n == contract).map(|(_, c)| *c).unwrap_or(0);
                (*line, col)
            }
            None => (0, 0),
        }
    }

    let (line, col) = match err {
        DuplicateDoctor(d) => match &decls.doctors {
            Some((line, items)) => (*line, second_occurrence(items, d).unwrap_or(0)),
            None => (0, 0),
        },
        DuplicateHospital(h) => match &decls.hospitals {
            Some((line, items)) => (*line, second_occurrence(items, h).unwrap_or(0)),
            None => (0, 0),
        },
        DuplicateContract(id) => {
            let line = decls
                .contracts
                .iter()
                .filter(|(_, d)| d.id == *id)
                .nth(1)
                .map(|(l, _)| *l)
                .unwrap_or(0);
            (line, 0)
        }
        UnknownDoctor { contract, .. } | UnknownHospital { contract, .. } => {
            let line = decls
                .contracts
                .iter()
                .find(|(_, d)| d.id == *contract)
                .map(|(l, _)| *l)
                .unwrap_or(0);
            (line, 0)
        }
        UnknownRankedHospital(h) => {
            (ranking_pos(&decls.hospital_rankings, h).map(|(l, _, _)| *l).unwrap_or(0), 0)
        }
        UnknownRankedDoctor(d) => {
            (ranking_pos(&decls.doctor_rankings, d).map(|(l, _, _)| *l).unwrap_or(0), 0)
        }
        DuplicateHospitalRanking(h) => {
            let line = decls
                .hospital_rankings
                .iter()
                .filter(|(_, id, _)| id == h)
                .nth(1)
                .map(|(l, _, _)| *l)
                .unwrap_or(0);
            (line, 0)
        }
        DuplicateDoctorRanking(d) => {
            let line = decls
                .doctor_rankings
                .iter()
                .filter(|(_, id, _)| id == d)
                .nth(1)
                .map(|(l, _, _)| *l)
                .unwrap_or(0);
            (line, 0)
        }
        UnknownContractInRanking { owner, contract }
        | ForeignContractInRanking { owner, contract }
        | DuplicateContractInRanking { owner, contract } => {
            let (l, c) = ranking_item_pos(&decls.hospital_rankings, owner, contract);
            if l != 0 {
                (l, c)
            } else {
                ranking_item_pos(&decls.doctor_rankings, owner, contract)
            }
        }
        MissingHospitalRanking(_) | IncompleteProfile { .. } => (0, 0),
        _ => (0, 0),
    };
    ParseError { line, col, message: err.to_string() }
}

/// Parse a command-line ranking such as `x1 > x2` (whitespace optional, empty
/// string for an empty ranking) into a preference for `owner`.
pub fn parse_ranking(market: &Market, owner: Agent, text: &str) -> Result<Preference, MarketError> {
    let trimmed = text.trim();
    let names: Vec<&str> = if trimmed.is_empty() {
        Vec::new()
    } else {
        trimmed.split('>').map(|s| s.trim()).collect()
    };
    for n in &names {
        if n.is_empty() {
            return Err(MarketError::InvalidRanking(format!(
                "empty item in ranking {text:?}"
            )));
        }
    }
    match owner {
        Agent::Doctor(d) => market.doctor_preference_by_ids(market.doctor_name(d), &names),
        Agent::Hospital(_) => Err(MarketError::InvalidRanking(
            "hospital rankings are fixed by the market file".into(),
        )),
    }
}

impl Market {
    /// Serialize back to the line-oriented format. Includes `doctor` lines
    /// when a profile is given. `parse_market` inverts this exactly.
    pub fn to_text(&self, profile: Option<&Profile>) -> String {
        let mut out = String::new();
        let join = |names: Vec<&str>| -> String {
            if names.is_empty() {
                String::new()
            } else {
                format!(" {}", names.join(" "))
            }
        };
        out.push_str(&format!(
            "doctors:{}\n",
            join(self.doctor_ids().map(|d| self.doctor_name(d)).collect())
        ));
        out.push_str(&format!(
            "hospitals:{}\n",
            join(self.hospital_ids().map(|h| self.hospital_name(h)).collect())
        ));
        for c in self.contracts() {
            out.push_str(&format!(
                "contract {} = ({}, {})\n",
                c.id(),
                self.doctor_name(c.doctor()),
                self.hospital_name(c.hospital())
            ));
        }
        for h in self.hospital_ids() {
            let label = self.ranking_label(self.hospital_pref(h));
            if label.is_empty() {
                out.push_str(&format!("hospital {} :\n", self.hospital_name(h)));
            } else {
                out.push_str(&format!("hospital {} : {}\n", self.hospital_name(h), label));
            }
        }
        if let Some(p) = profile {
            for d in self.doctor_ids() {
                let label = self.ranking_label(p.pref(d));
                if label.is_empty() {
                    out.push_str(&format!("doctor {} :\n", self.doctor_name(d)));
                } else {
                    out.push_str(&format!("doctor {} : {}\n", self.doctor_name(d), label));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THEOREM_K2: &str = "\
# two contracts between d1 and h1, one between d2 and h2
doctors: d1 d2
hospitals: h1 h2
contract x1 = (d1, h1)
contract x2 = (d1, h1)
contract w  = (d2, h2)
hospital h1 : x2 > x1
hospital h2 : w
doctor d1 : x1 > x2
doctor d2 : w
";

    #[test]
    fn parses_the_example_market() {
        let (m, profile) = parse_market(THEOREM_K2).unwrap();
        assert_eq!(m.doctor_count(), 2);
        assert_eq!(m.hospital_count(), 2);
        assert_eq!(m.contract_count(), 3);
        let h1 = m.hospital_index("h1").unwrap();
        assert_eq!(m.ranking_label(m.hospital_pref(h1)), "x2 > x1");
        let profile = profile.expect("doctor lines present");
        let d1 = m.doctor_index("d1").unwrap();
        assert_eq!(m.ranking_label(profile.pref(d1)), "x1 > x2");
    }

    #[test]
    fn empty_market_is_valid() {
        let (m, profile) = parse_market("doctors:\nhospitals:\n").unwrap();
        assert_eq!(m.doctor_count(), 0);
        assert_eq!(m.contract_count(), 0);
        // The empty profile is trivially complete.
        assert!(profile.is_some());
    }

    #[test]
    fn no_doctor_lines_means_no_profile() {
        let text = "\
doctors: d1
hospitals: h1
contract x1 = (d1, h1)
hospital h1 : x1
";
        let (_, profile) = parse_market(text).unwrap();
        assert!(profile.is_none());
    }

    #[test]
    fn ranking_for_wrong_hospital_is_located() {
        let text = "\
doctors: d1 d2
hospitals: h1 h2
contract x1 = (d1, h1)
contract w = (d2, h2)
hospital h1 :
hospital h2 : x1
";
        let err = parse_market(text).unwrap_err();
        assert_eq!(err.line, 6);
        assert!(err.message.contains("does not involve"), "{}", err.message);
    }

    #[test]
    fn unknown_agent_reported_at_contract_line() {
        let text = "\
doctors: d1
hospitals: h1
contract x1 = (d9, h1)
hospital h1 :
";
        let err = parse_market(text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("unknown doctor"), "{}", err.message);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_market("doctors: d1\nhospitals: h1\ncontract x1 = d1, h1)\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert_eq!(err.col, 15);
        assert!(err.message.contains("expected '('"), "{}", err.message);

        let err = parse_market("doctors; d1\n").unwrap_err();
        assert_eq!((err.line, err.col), (1, 8));
    }

    #[test]
    fn missing_sections_rejected() {
        let err = parse_market("hospitals: h1\nhospital h1 :\n").unwrap_err();
        assert_eq!(err.line, 0);
        assert!(err.message.contains("doctors"), "{}", err.message);
    }

    #[test]
    fn incomplete_doctor_profile_rejected() {
        let text = "\
doctors: d1 d2
hospitals: h1
contract x1 = (d1, h1)
hospital h1 : x1
doctor d1 : x1
";
        let err = parse_market(text).unwrap_err();
        assert!(err.message.contains("d2"), "{}", err.message);
    }

    #[test]
    fn round_trip_is_identity() {
        let (m, profile) = parse_market(THEOREM_K2).unwrap();
        let text = m.to_text(profile.as_ref());
        let (m2, profile2) = parse_market(&text).unwrap();
        assert_eq!(m, m2);
        assert_eq!(profile, profile2);
    }

    #[test]
    fn parse_ranking_accepts_loose_spacing() {
        let (m, _) = parse_market(THEOREM_K2).unwrap();
        let d1 = m.doctor_index("d1").unwrap();
        let p = parse_ranking(&m, Agent::Doctor(d1), "x2>x1").unwrap();
        assert_eq!(m.ranking_label(&p), "x2 > x1");
        let empty = parse_ranking(&m, Agent::Doctor(d1), "  ").unwrap();
        assert!(empty.is_empty());
        assert!(parse_ranking(&m, Agent::Doctor(d1), "x1 >").is_err());
        assert!(parse_ranking(&m, Agent::Doctor(d1), "w").is_err());
    }
}
