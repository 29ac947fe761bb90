use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use reprank::chase::{chase_bounded, ChaseBound};
use reprank::greport::{self, compare, load_greports, rank_with_greports, validate_hierarchical, GOrder};
use reprank::measures::{relevance_measure, trust_measure, RELEVANCE_MEASURES, TRUST_MEASURES};
use reprank::ranking::{rank, Algorithm, Collapse, RankSetup, RankedAnswer};
use reprank::report::load_reports;
use reprank::{parse_program, parse_query, Consistency, Error, Execution, Ontology, Reasoner, Spo, SpoSpec};

#[derive(Parser)]
#[command(name = "reprank", version, about = "Rank ontology query answers by subjective reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check consistency and classify the rules of a knowledge base.
    Check { kb: PathBuf },
    /// Print the certain answers of a conjunctive query.
    Query {
        kb: PathBuf,
        query: String,
        /// Null-depth constant of the chase bound (default: max 1 + head arity).
        #[arg(long)]
        depth_constant: Option<usize>,
        /// Also print the chase the answers were read from.
        #[arg(long)]
        dump_chase: bool,
    },
    /// Rank the answers of a simple query by reports.
    Rank(RankArgs),
    /// Print the more-general-than relation between every pair of g-reports.
    CompareGreports {
        kb: PathBuf,
        #[arg(long)]
        greports: PathBuf,
        /// Comma-separated labels of the hierarchical rules.
        #[arg(long, default_value = "")]
        hierarchy: String,
    },
    /// Print the chase of a knowledge base, one atom per line.
    DumpChase {
        kb: PathBuf,
        /// Stop after this many levels.
        #[arg(long, conflicts_with = "depth")]
        levels: Option<usize>,
        /// Bound the nesting depth of nulls instead (default 2).
        #[arg(long)]
        depth: Option<u32>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Basic,
    Hist,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct RankArgs {
    kb: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long)]
    reports: Option<PathBuf>,
    #[arg(long)]
    greports: Option<PathBuf>,
    #[arg(long)]
    user_spo: PathBuf,
    #[arg(long, value_enum, default_value = "basic")]
    algo: Algo,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    rel_threshold: Option<f64>,
    /// drop-lowest, mean10, weighted or skip-k.
    #[arg(long)]
    collapse: Option<String>,
    /// Ten comma-separated bucket weights for `--collapse weighted`.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Buckets ignored by `--collapse skip-k`.
    #[arg(long)]
    skip: Option<usize>,
    #[arg(long, default_value = "rank-exp")]
    trust: String,
    #[arg(long, default_value = "rank-dist")]
    relevance: String,
    /// Comma-separated labels of the hierarchical rules.
    #[arg(long, default_value = "")]
    hierarchy: String,
    #[arg(long, default_value = "rank-exp")]
    weighting: String,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Score atoms on one thread.
    #[arg(long)]
    sequential: bool,
}

enum Failure {
    Domain(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Inconsistent(_) => Failure::Domain(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_kb(path: &Path) -> Result<Ontology, Failure> {
    parse_program(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn hierarchy_labels(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|l| !l.is_empty()).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { kb } => check(&kb),
        Command::Query {
            kb,
            query,
            depth_constant,
            dump_chase,
        } => run_query(&kb, &query, depth_constant, dump_chase),
        Command::Rank(args) => run_rank(&args),
        Command::CompareGreports {
            kb,
            greports,
            hierarchy,
        } => compare_greports(&kb, &greports, &hierarchy),
        Command::DumpChase { kb, levels, depth } => dump_chase(&kb, levels, depth),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn check(path: &Path) -> Result<ExitCode, Failure> {
    let kb = load_kb(path)?;
    let (linear, guarded, other) = kb.classification();
    println!(
        "tgds: {} (linear {linear}, guarded {guarded}, other {other})",
        kb.tgds.len()
    );
    println!("egds: {}", kb.egds.len());
    println!("negative constraints: {}", kb.ncs.len());
    let reasoner = Reasoner::new(&kb)?;
    match reasoner.check_consistency() {
        Consistency::Consistent => {
            println!("consistent");
            Ok(ExitCode::SUCCESS)
        }
        Consistency::Violated(v) => {
            println!("inconsistent: {v}");
            Ok(ExitCode::from(1))
        }
    }
}

fn run_query(path: &Path, text: &str, dc: Option<usize>, dump: bool) -> Result<ExitCode, Failure> {
    let kb = load_kb(path)?;
    let q = parse_query(text, &kb).map_err(input)?;
    let mut reasoner = Reasoner::new(&kb)?;
    if let Some(c) = dc {
        reasoner = reasoner.with_depth_constant(c);
    }
    let answers = reasoner.answer_cq(&q)?;
    if dump {
        print!("{}", reasoner.chase_for(q.atoms.len()).dump());
        println!();
    }
    if q.is_boolean() {
        println!("{}", !answers.is_empty());
    } else if q.is_simple() {
        for t in &answers {
            println!("{}", q.atom_form(t).expect("free variables fill the distinguished atom"));
        }
    } else {
        for t in &answers {
            let parts: Vec<&str> = t.iter().map(|c| &**c).collect();
            println!("({})", parts.join(", "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn algorithm(args: &RankArgs) -> Result<Algorithm, Failure> {
    match args.algo {
        Algo::Basic => {
            let stray = [
                ("--collapse", args.collapse.is_some()),
                ("--rel-threshold", args.rel_threshold.is_some()),
                ("--weights", args.weights.is_some()),
                ("--skip", args.skip.is_some()),
            ];
            if let Some((flag, _)) = stray.iter().find(|(_, set)| *set) {
                return Err(Failure::Input(format!("{flag} requires --algo hist")));
            }
            Ok(Algorithm::Basic)
        }
        Algo::Hist => {
            let collapse = Collapse::by_name(
                args.collapse.as_deref().unwrap_or("drop-lowest"),
                args.weights.as_deref(),
                args.skip,
            )?;
            Ok(Algorithm::Hist {
                rel_threshold: args.rel_threshold.unwrap_or(0.0),
                collapse,
            })
        }
    }
}

fn run_rank(args: &RankArgs) -> Result<ExitCode, Failure> {
    let algo = algorithm(args)?;
    let trust = trust_measure(&args.trust).ok_or_else(|| {
        Failure::Input(format!(
            "unknown trust measure `{}` (expected one of {})",
            args.trust,
            TRUST_MEASURES.join(", ")
        ))
    })?;
    let relevance = relevance_measure(&args.relevance).ok_or_else(|| {
        Failure::Input(format!(
            "unknown relevance measure `{}` (expected one of {})",
            args.relevance,
            RELEVANCE_MEASURES.join(", ")
        ))
    })?;
    let kb = load_kb(&args.kb)?;
    let spec: SpoSpec = serde_json::from_str(&read(&args.user_spo)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.user_spo.display())))?;
    let user = Spo::from_spec(&spec).map_err(|e| Failure::Input(format!("user preferences: {e}")))?;
    let q = parse_query(&args.query, &kb).map_err(input)?;
    let reasoner = Reasoner::new(&kb)?;
    if let Consistency::Violated(v) = reasoner.check_consistency() {
        return Err(Failure::Domain(format!("inconsistent knowledge base: {v}")));
    }
    let mode = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let setup = RankSetup::new(&user, trust.as_ref(), relevance.as_ref(), args.k).with_execution(mode);

    let plain = match &args.reports {
        Some(p) => load_reports(&read(p)?, &reasoner).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => Default::default(),
    };
    let ranked = match &args.greports {
        None => rank(&reasoner, &q, &setup, &algo, &plain)?,
        Some(p) => {
            let mut store = load_greports(&read(p)?, &reasoner)
                .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            for atom in plain.atoms() {
                for r in plain.reports_for(atom) {
                    store.plain.insert(atom.clone(), r.clone());
                }
            }
            let hs = validate_hierarchical(&hierarchy_labels(&args.hierarchy), &kb)?;
            let weighting = greport::weighting(&args.weighting).ok_or_else(|| {
                Failure::Input(format!(
                    "unknown weighting `{}` (expected one of {})",
                    args.weighting,
                    greport::WEIGHTINGS.join(", ")
                ))
            })?;
            rank_with_greports(&reasoner, &q, &setup, &algo, weighting.as_ref(), &store, &hs)?
        }
    };
    print_ranking(&ranked, args.format);
    Ok(ExitCode::SUCCESS)
}

fn print_ranking(ranked: &[RankedAnswer], format: Format) {
    match format {
        Format::Text => {
            for (i, r) in ranked.iter().enumerate() {
                println!("{}\t{}\t{:.6}", i + 1, r.atom, r.score);
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = ranked
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    serde_json::json!({
                        "rank": i + 1,
                        "atom": r.atom.to_string(),
                        "score": r.score,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&rows).expect("plain values serialize"));
        }
    }
}

fn compare_greports(kb_path: &Path, greports: &Path, hierarchy: &str) -> Result<ExitCode, Failure> {
    let kb = load_kb(kb_path)?;
    let reasoner = Reasoner::new(&kb)?;
    let store = load_greports(&read(greports)?, &reasoner)
        .map_err(|e| Failure::Input(format!("{}: {e}", greports.display())))?;
    let hs = validate_hierarchical(&hierarchy_labels(hierarchy), &kb)?;
    let grs = &store.greports;
    for (i, a) in grs.iter().enumerate() {
        for b in &grs[i + 1..] {
            let rel = match compare(a, b, &reasoner, &hs)? {
                GOrder::MoreGeneral => format!("{} ⊑ {}", b.id(), a.id()),
                GOrder::LessGeneral => format!("{} ⊑ {}", a.id(), b.id()),
                GOrder::Equivalent => format!("{} ≡ {}", a.id(), b.id()),
                GOrder::Incomparable => format!("{} incomparable to {}", a.id(), b.id()),
            };
            println!("{rel}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn dump_chase(path: &Path, levels: Option<usize>, depth: Option<u32>) -> Result<ExitCode, Failure> {
    let kb = load_kb(path)?;
    let bound = match levels {
        Some(k) => ChaseBound::levels(k),
        None => ChaseBound::null_depth(depth.unwrap_or(2)),
    };
    let inst = chase_bounded(&kb, bound, Execution::default())?;
    print!("{}", inst.dump());
    Ok(ExitCode::SUCCESS)
}
