//! The `cbd` command line: parse a system file, run one analysis, print JSON.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 malformed input or
//! arguments, 3 the requested LP exceeds the outcome budget.

mod commands;
mod gen;

use std::path::PathBuf;

use cbd_core::{AnalysisOptions, SolveMode, DEFAULT_BUDGET};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub use commands::run;

#[derive(Debug, Parser)]
#[command(name = "cbd", version, about = "Contextuality-by-Default analysis of context-content systems")]
pub struct Cli {
    /// LP arithmetic: exact rationals, or floating point verified exactly.
    #[arg(long, value_enum, default_value_t = Mode::Exact, global = true)]
    pub mode: Mode,
    /// Largest number of joint outcomes an LP may range over.
    #[arg(long, default_value_t = DEFAULT_BUDGET, global = true)]
    pub budget: u128,
    /// Most multimaximal couplings to enumerate per connection.
    #[arg(long, default_value_t = 16, global = true)]
    pub limit: usize,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn options(&self) -> AnalysisOptions {
        let mode = match self.mode {
            Mode::Exact => SolveMode::Exact,
            Mode::Fast => SolveMode::FloatThenVerify,
        };
        AnalysisOptions { budget: self.budget, mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Fast,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a system file and summarize it.
    Validate { input: PathBuf },
    /// Multimaximal couplings of each connection (or of one content).
    Coupling {
        input: PathBuf,
        #[arg(long)]
        content: Option<String>,
    },
    /// Decide contextuality.
    Check {
        input: PathBuf,
        /// Also test every pair of contexts on its own.
        #[arg(long)]
        pairs: bool,
    },
    /// Minimal total variation over quasi-couplings, minus one.
    Measure { input: PathBuf },
    /// Remove cells, given as content@context.
    Subsystem {
        input: PathBuf,
        #[arg(long = "drop", required = true)]
        drop: Vec<String>,
    },
    /// Replace a content by binary split indicators.
    Dichotomize {
        input: PathBuf,
        #[arg(long)]
        content: String,
        /// Comma-separated labels on one side of a split; repeatable. Default: every split.
        #[arg(long = "split")]
        splits: Vec<String>,
    },
    /// Lump values of a content.
    Coarsen {
        input: PathBuf,
        #[arg(long)]
        content: String,
        /// Comma-separated labels merged into one value; repeatable.
        #[arg(long = "lump", required = true)]
        lumps: Vec<String>,
    },
    /// Emit a canonical system.
    Gen {
        kind: gen::Kind,
        /// Number of contents of a cyclic system.
        #[arg(long, default_value_t = 4)]
        rank: usize,
        /// Draw random bunch distributions from this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the coupling LP in a CPLEX-like text format.
    LpDump {
        input: PathBuf,
        /// The signed program used by `measure` instead of the feasibility one.
        #[arg(long)]
        signed: bool,
    },
}

/// What a command prints.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Json(Value),
    /// Already formatted text, printed verbatim.
    Text(String),
}

impl Output {
    pub fn render(&self) -> String {
        match self {
            Output::Json(v) => {
                let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
                s.push('\n');
                s
            }
            Output::Text(t) => t.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cbd_core::Error),
}

impl From<cbd_core::corpus::CorpusError> for CliError {
    fn from(e: cbd_core::corpus::CorpusError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<cbd_core::model::ModelError> for CliError {
    fn from(e: cbd_core::model::ModelError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<cbd_core::CouplingError> for CliError {
    fn from(e: cbd_core::CouplingError) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use cbd_core::Error as E;
        match self {
            CliError::Io { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Core(E::TooLarge(_)) => 3,
            CliError::Core(E::Lp(_)) => 1,
            CliError::Core(_) => 2,
        }
    }

    /// Machine-readable form printed on standard output.
    pub fn to_json(&self) -> Value {
        use cbd_core::Error as E;
        let mut body = json!({ "message": self.to_string() });
        let kind = match self {
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Core(E::Parse(_)) => "parse",
            CliError::Core(E::Validation(errors)) | CliError::Core(E::Model(cbd_core::model::ModelError::Invalid(errors))) => {
                body["violations"] = errors
                    .iter()
                    .map(|v| {
                        json!({
                            "kind": v.kind(),
                            "context": v.context().map(|c| c.as_str()),
                            "content": v.content().map(|c| c.as_str()),
                            "message": v.to_string(),
                        })
                    })
                    .collect();
                "validation"
            }
            CliError::Core(E::TooLarge(t)) => {
                body["outcomes"] = json!(t.outcomes.to_string());
                body["budget"] = json!(t.budget.to_string());
                "too-large"
            }
            CliError::Core(E::Model(_)) => "model",
            CliError::Core(E::Coupling(_)) => "coupling",
            CliError::Core(E::Corpus(_)) => "transform",
            CliError::Core(E::Lp(_)) => "lp",
        };
        body["kind"] = json!(kind);
        json!({ "error": body })
    }
}

/// Runs the parsed command and writes its output to `--out` or standard output.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let text = run(cli)?.render();
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_flags_after_the_verb() {
        let cli = Cli::try_parse_from(["cbd", "check", "sys.json", "--mode", "fast", "--budget", "64"]).unwrap();
        assert_eq!(cli.options(), AnalysisOptions { budget: 64, mode: SolveMode::FloatThenVerify });
        assert!(matches!(cli.command, Command::Check { pairs: false, .. }));
        let cli = Cli::try_parse_from(["cbd", "gen", "rex-shape"]).unwrap();
        assert_eq!(cli.options(), AnalysisOptions::default());
        assert_eq!(cli.limit, 16);
    }

    #[test]
    fn repeated_options() {
        let cli = Cli::try_parse_from(["cbd", "coarsen", "f.json", "--content", "q", "--lump", "a,b", "--lump", "c,d"]).unwrap();
        let Command::Coarsen { lumps, .. } = cli.command else { panic!() };
        assert_eq!(lumps, ["a,b", "c,d"]);
        assert!(Cli::try_parse_from(["cbd", "subsystem", "f.json"]).is_err());
    }

    #[test]
    fn exit_codes() {
        let too_large = cbd_core::TooLarge { what: "x".into(), outcomes: 10, budget: 1 };
        assert_eq!(CliError::Core(too_large.into()).exit_code(), 3);
        assert_eq!(CliError::Core(cbd_core::Error::Parse("bad".into())).exit_code(), 2);
        assert_eq!(CliError::Usage("bad".into()).exit_code(), 2);
        let io = CliError::Io { path: "f".into(), source: std::io::Error::other("gone") };
        assert_eq!(io.exit_code(), 1);
        assert_eq!(io.to_json()["error"]["kind"], "io");
    }

    #[test]
    fn output_rendering() {
        assert_eq!(Output::Json(json!({ "b": 1, "a": 2 })).render(), "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
        assert_eq!(Output::Text("x\n".into()).render(), "x\n");
    }
}
