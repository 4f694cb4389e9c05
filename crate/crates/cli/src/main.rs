//! `qsm` — stable matching with contracts from the command line.
//!
//! Exit codes: 0 success or negative finding, 1 usage or parse error,
//! 2 positive finding (a manipulation, an obvious manipulation, or a failed
//! certification), 3 search budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use qsm_core::report::{
    market_digest, witness_map, CertifyRecord, CheckOmRecord, CounterexampleRunRecord, MechRecord,
    StableRecord,
};
use qsm_core::{
    certify, counterexample_market, enumerate_stable, is_obvious_manipulation, parse_market,
    parse_ranking, Agent, Market, Mechanism, OmVerdict, OptionSet, Preference, Profile, Property,
    Quantile, StrategyError, Subprofile, DEFAULT_BUDGET,
};

#[derive(Parser)]
#[command(
    name = "qsm",
    version,
    about = "Stable allocations, quantile stable mechanisms, and manipulation analysis \
             for one-to-one matching markets with contracts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Human-readable report
    Text,
    /// Machine-readable JSON record
    Record,
}

#[derive(Subcommand)]
enum Command {
    /// List every stable allocation under the market file's truthful profile
    Stable {
        market: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Apply a mechanism to the truthful profile and print the result
    Mech {
        market: PathBuf,
        /// quantile:<num>/<den>, interior, da:doctors, or da:hospitals
        #[arg(long)]
        mechanism: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Test whether a report is an obvious manipulation at a truth
    #[command(name = "check-om")]
    CheckOm {
        market: PathBuf,
        #[arg(long)]
        mechanism: String,
        /// The manipulating doctor
        #[arg(long)]
        doctor: String,
        /// True ranking, e.g. "x1 > x2" (empty string for nothing acceptable)
        #[arg(long)]
        truth: String,
        /// Reported ranking
        #[arg(long)]
        report: String,
        /// Cap on search iterations
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Worker threads (0 = automatic)
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Exhaustively certify a property of a mechanism on a market
    Certify {
        market: PathBuf,
        #[arg(long)]
        mechanism: String,
        /// nom (not obviously manipulable) or sp (strategy-proof)
        #[arg(long)]
        property: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Generate the minimal obviously-manipulable chain market for a positive
    /// quantile and run the manipulation check end to end
    Counterexample {
        /// Number of chain contracts; the quantile position ⌈k·q⌉ must be 2
        #[arg(long)]
        k: usize,
        /// Quantile as num/den, e.g. 1/2
        #[arg(long)]
        q: String,
        /// Write the generated market file here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

impl From<StrategyError> for Failure {
    fn from(e: StrategyError) -> Failure {
        match e {
            StrategyError::BudgetExceeded { .. } => Failure { code: 3, message: e.to_string() },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Stable { market, format } => cmd_stable(&market, format),
        Command::Mech { market, mechanism, format } => cmd_mech(&market, &mechanism, format),
        Command::CheckOm { market, mechanism, doctor, truth, report, budget, workers, format } => {
            cmd_check_om(&market, &mechanism, &doctor, &truth, &report, budget, workers, format)
        }
        Command::Certify { market, mechanism, property, budget, workers, format } => {
            cmd_certify(&market, &mechanism, &property, budget, workers, format)
        }
        Command::Counterexample { k, q, out, format } => cmd_counterexample(k, &q, out, format),
    }
}

fn load_market(path: &Path) -> Result<(Market, Option<Profile>), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_market(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn require_profile(profile: Option<Profile>, path: &Path) -> Result<Profile, Failure> {
    profile.ok_or_else(|| {
        Failure::usage(format!(
            "{}: no doctor lines; this command needs the truthful profile in the market file",
            path.display()
        ))
    })
}

fn parse_mechanism(s: &str) -> Result<Mechanism, Failure> {
    s.parse().map_err(|e| Failure::usage(format!("{e}")))
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::usage(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn emit_record<T: serde::Serialize>(record: &T) {
    println!("{}", serde_json::to_string_pretty(record).expect("records serialize"));
}

fn cmd_stable(path: &Path, format: Format) -> Result<u8, Failure> {
    let (market, profile) = load_market(path)?;
    let profile = require_profile(profile, path)?;
    let stable = enumerate_stable(&profile, &market);
    match format {
        Format::Text => {
            for y in stable.allocations() {
                println!("{}", y.label(&market));
            }
            println!("k={}", stable.k());
        }
        Format::Record => emit_record(&StableRecord::new(&market, &stable)),
    }
    Ok(0)
}

fn cmd_mech(path: &Path, mechanism: &str, format: Format) -> Result<u8, Failure> {
    let (market, profile) = load_market(path)?;
    let profile = require_profile(profile, path)?;
    let mech = parse_mechanism(mechanism)?;
    let allocation = qsm_core::apply_mechanism(mech, &profile, &market);
    match format {
        Format::Text => {
            println!("allocation: {}", allocation.label(&market));
            for d in market.doctor_ids() {
                println!(
                    "{}:{}",
                    market.doctor_name(d),
                    market.outcome_label(allocation.doctor_assignment(&market, d))
                );
            }
        }
        Format::Record => emit_record(&MechRecord::new(&market, mech, &profile, &allocation)),
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_check_om(
    path: &Path,
    mechanism: &str,
    doctor: &str,
    truth: &str,
    report: &str,
    budget: u64,
    workers: usize,
    format: Format,
) -> Result<u8, Failure> {
    let (market, _) = load_market(path)?;
    let mech = parse_mechanism(mechanism)?;
    let d = market
        .doctor_index(doctor)
        .ok_or_else(|| Failure::usage(format!("unknown doctor {doctor:?}")))?;
    let truth: Preference = parse_ranking(&market, Agent::Doctor(d), truth)
        .map_err(|e| Failure::usage(format!("--truth: {e}")))?;
    let report: Preference = parse_ranking(&market, Agent::Doctor(d), report)
        .map_err(|e| Failure::usage(format!("--report: {e}")))?;

    let verdict =
        with_pool(workers, || is_obvious_manipulation(mech, &market, d, &truth, &report, budget))??;

    match format {
        Format::Text => print_om_text(&market, mech, &verdict),
        Format::Record => emit_record(&CheckOmRecord::new(&market, mech, &verdict)),
    }
    Ok(if verdict.is_obvious { 2 } else { 0 })
}

fn cmd_certify(
    path: &Path,
    mechanism: &str,
    property: &str,
    budget: u64,
    workers: usize,
    format: Format,
) -> Result<u8, Failure> {
    let (market, _) = load_market(path)?;
    let mech = parse_mechanism(mechanism)?;
    let property = Property::parse_descriptor(property)
        .ok_or_else(|| Failure::usage(format!("unknown property {property:?}; use nom or sp")))?;

    let start = Instant::now();
    let cert = with_pool(workers, || certify(mech, &market, property, budget))??;
    let elapsed = start.elapsed();

    match format {
        Format::Text => {
            println!("property: {}", cert.property);
            println!("mechanism: {}", cert.mechanism.descriptor());
            println!("market: {}", market_digest(&market));
            println!("pairs: {}", cert.pairs);
            println!("iterations: {}", cert.iterations);
            println!("verdict: {}", if cert.passed { "PASS" } else { "FAIL" });
            if let Some(cx) = &cert.counterexample {
                println!("counterexample:");
                println!("  doctor: {}", market.doctor_name(cx.doctor));
                println!("  truth: {}", ranking_text(&market, &cx.truth));
                println!("  report: {}", ranking_text(&market, &cx.report));
                println!("  witness: {}", witness_text(&market, &cx.witness));
            }
            println!("wall time: {} ms", elapsed.as_millis());
        }
        Format::Record => emit_record(&CertifyRecord::new(&market, &cert)),
    }
    Ok(if cert.passed { 0 } else { 2 })
}

fn cmd_counterexample(
    k: usize,
    q: &str,
    out: Option<PathBuf>,
    format: Format,
) -> Result<u8, Failure> {
    let q: Quantile = q.parse().map_err(|e| Failure::usage(format!("--q: {e}")))?;
    let inst = counterexample_market(k, q).map_err(|e| Failure::usage(e.to_string()))?;
    let market = &inst.market;
    let mech = Mechanism::Quantile(q);
    let market_text = market.to_text(Some(&inst.truthful_profile()));

    if let Some(path) = &out {
        fs::write(path, &market_text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }

    let verdict =
        is_obvious_manipulation(mech, market, inst.doctor, &inst.truth, &inst.report, DEFAULT_BUDGET)?;

    match format {
        Format::Text => {
            println!("k: {k}");
            println!("q: {q}");
            match &out {
                Some(path) => println!("market file written to {}", path.display()),
                None => {
                    println!("market file:");
                    for line in market_text.lines() {
                        println!("  {line}");
                    }
                }
            }
            println!();
            print_om_text(market, mech, &verdict);
        }
        Format::Record => {
            let record = CounterexampleRunRecord {
                k,
                q: q.to_string(),
                market_text,
                check: CheckOmRecord::new(market, mech, &verdict),
            };
            emit_record(&record);
        }
    }
    Ok(if verdict.is_obvious { 2 } else { 0 })
}

fn ranking_text(market: &Market, p: &Preference) -> String {
    let label = market.ranking_label(p);
    if label.is_empty() {
        "(empty)".into()
    } else {
        label
    }
}

fn witness_text(market: &Market, witness: &Subprofile) -> String {
    let map = witness_map(market, witness);
    if map.is_empty() {
        return "(no other doctors)".into();
    }
    map.into_iter()
        .map(|(d, r)| if r.is_empty() { format!("{d}: (empty)") } else { format!("{d}: {r}") })
        .collect::<Vec<_>>()
        .join("; ")
}

fn option_set_text(market: &Market, o: &OptionSet) -> String {
    let labels: Vec<String> = o.outcomes().map(|x| market.outcome_label(x)).collect();
    format!("{{{}}}", labels.join(","))
}

fn print_om_text(market: &Market, mech: Mechanism, v: &OmVerdict) {
    let out = |o: qsm_core::Outcome| market.outcome_label(o);
    println!("mechanism: {}", mech.descriptor());
    println!("market: {}", market_digest(market));
    println!("doctor: {}", market.doctor_name(v.doctor));
    println!("truth: {}", ranking_text(market, &v.truth));
    println!("report: {}", ranking_text(market, &v.report));
    println!("option set under truth: {}", option_set_text(market, &v.option_truth));
    println!("option set under report: {}", option_set_text(market, &v.option_report));
    println!(
        "worst case: truth -> {}, report -> {} ({})",
        out(v.worst_truth),
        out(v.worst_report),
        if v.worst_case_improved { "improved" } else { "not improved" }
    );
    println!(
        "best case: truth -> {}, report -> {} ({})",
        out(v.best_truth),
        out(v.best_report),
        if v.best_case_improved { "improved" } else { "not improved" }
    );
    match &v.manipulation_witness {
        Some(w) => println!("manipulation: yes (witness {})", witness_text(market, w)),
        None => println!("manipulation: no"),
    }
    if v.is_obvious {
        println!("obvious manipulation: yes (triggered: {})", v.triggered());
    } else {
        println!("obvious manipulation: no");
    }
}
