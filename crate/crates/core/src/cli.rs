//! The `netsplit` command line.
//!
//! Exit status: 0 on success, 2 for usage errors, 3 when an input fails
//! validation, 4 when `--expect-spe` was given and no verified outcome exists.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::document::GameDocument;
use crate::equilibrium::ConsistencyMode;
use crate::error::{Error, Result};
use crate::graphs::{search_graphs, SearchMode};
use crate::model::{Game, Tolerances};
use crate::report::{AnalyzeReport, SolveReport, VerifyReport, VerifySettings};
use crate::verifier::{self, Firm, Outcome, Radius};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_NO_SPE: i32 = 4;

/// The bundled example corpus as `(name, document)`.
pub const CORPUS: &[(&str, &str)] = &[
    ("grilo", include_str!("../fixtures/grilo.json")),
    ("tolotti", include_str!("../fixtures/tolotti.json")),
    ("amaldoss", include_str!("../fixtures/amaldoss.json")),
    ("amaldoss-delta0", include_str!("../fixtures/amaldoss-delta0.json")),
    ("armstrong", include_str!("../fixtures/armstrong.json")),
    ("armstrong-modified", include_str!("../fixtures/armstrong-modified.json")),
    ("armstrong-3group", include_str!("../fixtures/armstrong-3group.json")),
    ("adjacency-figure1", include_str!("../fixtures/adjacency-figure1.json")),
    ("example2", include_str!("../fixtures/example2.json")),
];

pub fn corpus_document(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, d)| *d)
}

#[derive(Parser, Debug)]
#[command(name = "netsplit", version, about = "Price competition with group network effects")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Consistency convention for the price difference of a split.
    #[arg(long, value_enum, global = true, default_value_t = ModeArg::Foc)]
    mode: ModeArg,

    /// Slack allowed in the second-stage Nash conditions.
    #[arg(long, global = true)]
    tol_ne: Option<f64>,

    /// Emit JSON instead of the text report.
    #[arg(long, global = true)]
    json: bool,

    /// Replace group masses with draws from U(0.5, 2) under this seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Exit with status 4 unless a verified outcome is found.
    #[arg(long, global = true)]
    expect_spe: bool,

    /// Append wall-clock timing to reports.
    #[arg(long, global = true)]
    timing: bool,

    /// Verifier neighborhood: a number, a percentage of p_j* such as `10%`, or `auto`.
    #[arg(long, global = true, default_value = "auto")]
    radius: String,

    /// Verifier grid points per firm.
    #[arg(long, global = true, default_value_t = 41)]
    points: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Foc,
    AsPrinted,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FirmArg {
    A,
    B,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split calculus at a profile.
    Analyze {
        spec: PathBuf,
        /// Comma-separated shares; defaults to one half for every group.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        sigma: Option<Vec<f64>>,
    },
    /// Find all certified outcomes and verify them.
    Solve { spec: PathBuf },
    /// Run the numerical oracle on outcomes read from a file.
    Verify {
        spec: PathBuf,
        /// An outcome `{prices, sigma}`, a certificate or a `solve --json` report.
        #[arg(long)]
        outcome: PathBuf,
    },
    /// Exhaustive search over loopy graphs for realizable splits.
    SearchGraphs {
        #[arg(long)]
        nodes: usize,
        /// Report counts only.
        #[arg(long, conflicts_with = "first")]
        none_exists: bool,
        /// Stop at the first graph with a realizable split.
        #[arg(long)]
        first: bool,
    },
    /// Reproduce the bundled example corpus, or one named example.
    Examples { name: Option<String> },
    /// CSV of the traced selection around an outcome.
    Trace {
        spec: PathBuf,
        #[arg(long, value_enum)]
        firm: FirmArg,
        /// Outcome file; defaults to the first certificate of `solve`.
        #[arg(long)]
        outcome: Option<PathBuf>,
    },
}

struct Settings {
    mode: ConsistencyMode,
    tol_ne: Option<f64>,
    json: bool,
    seed: Option<u64>,
    expect_spe: bool,
    timing: bool,
    verify: VerifySettings,
}

fn parse_radius(s: &str) -> Result<Radius> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Radius::Auto);
    }
    let bad = || Error::Invalid(format!("invalid radius `{s}`"));
    let positive = |x: f64| if x > 0.0 && x.is_finite() { Ok(x) } else { Err(bad()) };
    match s.strip_suffix('%') {
        Some(p) => Ok(Radius::Relative(positive(p.parse().map_err(|_| bad())?)? / 100.0)),
        None => Ok(Radius::Absolute(positive(s.parse().map_err(|_| bad())?)?)),
    }
}

/// Parses `args` and runs the command, writing the report to `out` and
/// diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let settings = Settings {
        mode: match cli.mode {
            ModeArg::Foc => ConsistencyMode::FocConsistent,
            ModeArg::AsPrinted => ConsistencyMode::AsPrinted,
        },
        tol_ne: cli.tol_ne,
        json: cli.json,
        seed: cli.seed,
        expect_spe: cli.expect_spe,
        timing: cli.timing,
        verify: VerifySettings {
            radius: parse_radius(&cli.radius)?,
            points: cli.points,
        },
    };
    match cli.command {
        Command::Analyze { spec, sigma } => {
            let (game, desc) = load(&spec, &settings)?;
            let sigma = sigma.unwrap_or_else(|| vec![0.5; game.groups()]);
            let profile = game.profile(sigma)?;
            let report = AnalyzeReport::build(&game, desc, &profile)?;
            emit(out, &settings, &report, &report.render())?;
            Ok(EXIT_OK)
        }
        Command::Solve { spec } => {
            let (game, desc) = load(&spec, &settings)?;
            solve(out, &settings, &game, desc)
        }
        Command::Verify { spec, outcome } => {
            let (game, desc) = load(&spec, &settings)?;
            let outcomes = read_outcomes(&outcome)?;
            let report = VerifyReport::build(&game, desc, &outcomes, settings.verify)?;
            emit(out, &settings, &report, &report.render())?;
            if report.entries.iter().any(|e| e.error.is_some()) {
                return Ok(EXIT_INVALID);
            }
            Ok(expect(&settings, report.all_verified()))
        }
        Command::SearchGraphs {
            nodes,
            none_exists,
            first,
        } => {
            let mode = if none_exists {
                SearchMode::NoneExists
            } else if first {
                SearchMode::First
            } else {
                SearchMode::All
            };
            let start = Instant::now();
            let summary = search_graphs(nodes, mode)?;
            let mut text = summary.to_string();
            if settings.timing {
                text.push_str(&format!("time: {:.1} ms\n", start.elapsed().as_secs_f64() * 1e3));
            }
            emit(out, &settings, &summary, &text)?;
            if none_exists && !summary.none_exist() {
                return Ok(EXIT_NO_SPE);
            }
            Ok(expect(&settings, !summary.none_exist()))
        }
        Command::Examples { name } => {
            let names: Vec<&str> = match &name {
                Some(n) => {
                    if corpus_document(n).is_none() {
                        return Err(Error::Invalid(format!(
                            "unknown example `{n}`; available: {}",
                            CORPUS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
                        )));
                    }
                    vec![n.as_str()]
                }
                None => CORPUS.iter().map(|(n, _)| *n).collect(),
            };
            let mut status = EXIT_OK;
            for n in names {
                if !settings.json {
                    writeln!(out, "== {n}")?;
                }
                let (game, desc) = parse(corpus_document(n).expect("checked"), &settings)?;
                let code = solve(out, &settings, &game, desc)?;
                status = status.max(code);
            }
            Ok(status)
        }
        Command::Trace {
            spec,
            firm,
            outcome,
        } => {
            let (game, _) = load(&spec, &settings)?;
            let outcome = match outcome {
                Some(path) => read_outcomes(&path)?
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::Invalid("outcome file lists no outcomes".into()))?,
                None => {
                    let found = crate::equilibrium::find_local_spe(&game, settings.mode)?;
                    match found.certificates.first() {
                        Some(c) => c.into(),
                        None => return Ok(EXIT_NO_SPE),
                    }
                }
            };
            let firm = match firm {
                FirmArg::A => Firm::A,
                FirmArg::B => Firm::B,
            };
            let path = verifier::trace_local_selection(
                &game,
                &outcome,
                firm,
                settings.verify.radius,
                settings.verify.points,
            )?;
            if settings.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&path)?)?;
            } else {
                write!(out, "{}", path.to_csv())?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn expect(settings: &Settings, found: bool) -> i32 {
    if settings.expect_spe && !found {
        EXIT_NO_SPE
    } else {
        EXIT_OK
    }
}

fn solve(out: &mut dyn Write, settings: &Settings, game: &Game, desc: Option<String>) -> Result<i32> {
    let start = Instant::now();
    let mut report = SolveReport::build(game, desc, settings.mode, settings.verify)?;
    if settings.timing {
        report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    emit(out, settings, &report, &report.render())?;
    let found = !report.certificates.is_empty() && report.all_verified();
    Ok(expect(settings, found))
}

fn emit<T: Serialize>(out: &mut dyn Write, settings: &Settings, value: &T, text: &str) -> Result<()> {
    if settings.json {
        writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    } else {
        write!(out, "{text}")?;
    }
    Ok(())
}

fn load(path: &Path, settings: &Settings) -> Result<(Game, Option<String>)> {
    parse(&std::fs::read_to_string(path)?, settings)
}

fn parse(document: &str, settings: &Settings) -> Result<(Game, Option<String>)> {
    let doc: GameDocument = serde_json::from_str(document)?;
    let desc = doc.description.clone();
    let mut game = doc.into_game()?;
    if let Some(tol) = settings.tol_ne {
        if !(tol >= 0.0) {
            return Err(Error::Invalid(format!("--tol-ne must be non-negative, got {tol}")));
        }
        let tols = Tolerances {
            ne: tol,
            ..game.tolerances()
        };
        game = game.with_tolerances(tols);
    }
    if let Some(seed) = settings.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let masses: Vec<f64> = (0..game.groups()).map(|_| rng.gen_range(0.5..2.0)).collect();
        game = game.with_masses(&masses)?;
    }
    Ok((game, desc))
}

/// Outcomes from a file holding an outcome, a certificate, a list of either,
/// or a `solve`/`verify` JSON report.
pub fn outcomes_from_json(text: &str) -> Result<Vec<Outcome>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let mut found = Vec::new();
    collect_outcomes(&value, &mut found);
    if found.is_empty() {
        return Err(Error::Invalid("no outcome (prices and sigma) found in file".into()));
    }
    Ok(found)
}

fn collect_outcomes(v: &serde_json::Value, found: &mut Vec<Outcome>) {
    use serde_json::Value;
    match v {
        Value::Array(items) => items.iter().for_each(|i| collect_outcomes(i, found)),
        Value::Object(map) => {
            if let (Some(p), Some(s)) = (map.get("prices"), map.get("sigma")) {
                if let (Ok(prices), Ok(sigma)) = (
                    serde_json::from_value(p.clone()),
                    serde_json::from_value(s.clone()),
                ) {
                    found.push(Outcome { prices, sigma });
                    return;
                }
            }
            for key in ["certificates", "certificate", "entries", "outcome"] {
                if let Some(inner) = map.get(key) {
                    collect_outcomes(inner, found);
                }
            }
        }
        _ => {}
    }
}

fn read_outcomes(path: &Path) -> Result<Vec<Outcome>> {
    outcomes_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("netsplit").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn radius_parsing() {
        assert_eq!(parse_radius("auto").unwrap(), Radius::Auto);
        assert_eq!(parse_radius("10%").unwrap(), Radius::Relative(0.1));
        assert_eq!(parse_radius("0.25").unwrap(), Radius::Absolute(0.25));
        assert!(parse_radius("-1").is_err());
    }

    #[test]
    fn corpus_parses() {
        for (name, doc) in CORPUS {
            assert!(crate::document::load_game(doc).is_ok(), "{name}");
        }
    }

    #[test]
    fn unknown_command_is_usage_error() {
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
    }

    #[test]
    fn outcome_extraction() {
        let o = outcomes_from_json(r#"{"prices":{"p_a":1,"p_b":2},"sigma":[0.5]}"#).unwrap();
        assert_eq!(o[0].sigma, vec![0.5]);
        let nested = outcomes_from_json(
            r#"{"certificates":[{"certificate":{"prices":{"p_a":1,"p_b":1},"sigma":[0.5,0.5]}}]}"#,
        )
        .unwrap();
        assert_eq!(nested.len(), 1);
        assert!(outcomes_from_json("{}").is_err());
    }
}
