use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaptopk::verification::{run_suite, Suite, SuiteOptions};
use gaptopk::QueryVector;
use serde::Serialize;

use crate::bench::{bench, BenchParams, BenchVariant};
use crate::dataset::{ingest, parse_queries};
use crate::error::{usage, CliError, Result};
use crate::run::{parse_epsilon, parse_gamma, run, RunParams, Variant};
use crate::synth::{write_transactions, zipf_counts};

#[derive(Debug, Parser)]
#[command(
    name = "gaptopk",
    version,
    about = "Floating-point free Noisy Top-k with Gap"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one mechanism and print the selected queries and gaps (1-based).
    Run(RunArgs),
    /// Time the mechanisms over many seeded trials.
    Bench(BenchArgs),
    /// Run verification suites; exits 2 if any check fails.
    Verify(VerifyArgs),
    /// Write a synthetic Zipf transaction file.
    Synth(SynthArgs),
    /// Print record and item counts of a transaction file.
    Ingest(IngestArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct Source {
    /// Transaction file: one transaction per line, whitespace-separated items.
    #[arg(long, visible_alias = "dataset", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Inline answers, e.g. "3,2,1/2,0"; rounded down onto the gamma grid.
    #[arg(long, value_name = "LIST", conflicts_with = "input")]
    pub queries: Option<String>,
}

#[derive(Debug, Args)]
pub struct Mechanism {
    /// Privacy budget as num/den.
    #[arg(long = "eps", default_value = "1/1")]
    pub eps: String,
    /// Target resolution 1/d.
    #[arg(long, default_value = "1/10")]
    pub gamma: String,
    /// Refinement factor M.
    #[arg(long, default_value_t = 10)]
    pub refine_factor: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub mechanism: Mechanism,
    #[arg(long)]
    pub k: usize,
    /// Omit to draw the key from the operating system.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Variant::Secure)]
    pub variant: Variant,
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: Source,
    /// Use deterministic Zipf counts for this many items instead of a file.
    #[arg(long, value_name = "N", conflicts_with_all = ["input", "queries"])]
    pub zipf: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    pub zipf_total: u64,
    #[arg(long, default_value_t = 1.0)]
    pub zipf_skew: f64,
    #[command(flatten)]
    pub mechanism: Mechanism,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long = "variant", value_enum, value_delimiter = ',',
          default_values_t = [BenchVariant::Secure, BenchVariant::OptSecure, BenchVariant::Baseline])]
    pub variants: Vec<BenchVariant>,
    /// Master seed; trial seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// lemmas, samplers, equivalence or all.
    pub suite: String,
    #[arg(long, default_value_t = SuiteOptions::default().seed)]
    pub seed: u64,
    /// Draws per distributional check.
    #[arg(long, default_value_t = SuiteOptions::default().samples)]
    pub samples: u64,
    /// Runs per side for each equivalence fixture.
    #[arg(long, default_value_t = SuiteOptions::default().equivalence_runs)]
    pub runs: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub items: usize,
    #[arg(long, default_value_t = 100_000)]
    pub records: u64,
    #[arg(long, default_value_t = 1.0)]
    pub skew: f64,
    #[arg(long, default_value_t = 8.0)]
    pub mean_len: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, visible_alias = "dataset", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn load(source: &Source, base_denom: u64) -> Result<(QueryVector, String)> {
    match (&source.input, &source.queries) {
        (Some(path), _) => Ok((
            ingest(path)?.queries(base_denom),
            path.display().to_string(),
        )),
        (None, Some(list)) => Ok((parse_queries(list, base_denom)?, "inline".into())),
        (None, None) => Err(usage("give --input PATH or --queries LIST")),
    }
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out).map_err(stdout_err)
}

fn stdout_err(source: std::io::Error) -> CliError {
    CliError::Io {
        path: "<stdout>".into(),
        source,
    }
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    path: String,
    records: u64,
    unique_items: usize,
    top_items: Vec<(&'a str, u64)>,
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run(a) => {
            let base_denom = parse_gamma(&a.mechanism.gamma)?;
            let (q, _) = load(&a.source, base_denom)?;
            let params = RunParams {
                k: a.k,
                epsilon: parse_epsilon(&a.mechanism.eps)?,
                base_denom,
                refine_factor: a.mechanism.refine_factor,
                seed: a.seed,
                variant: a.variant,
                prune: !a.no_prune,
            };
            let res = run(&q, &params)?;
            match a.format {
                Format::Json => print_json(out, &res)?,
                Format::Table => {
                    writeln!(out, "{:>6}  {:>8}  gap", "rank", "query").map_err(stdout_err)?;
                    for (r, (i, g)) in res.indices.iter().zip(&res.gaps).enumerate() {
                        writeln!(out, "{:>6}  {:>8}  {g}", r + 1, i).map_err(stdout_err)?;
                    }
                }
            }
        }
        Command::Bench(a) => {
            let base_denom = parse_gamma(&a.mechanism.gamma)?;
            let (q, name) = match a.zipf {
                Some(n) => (
                    QueryVector::from_counts(
                        &zipf_counts(n, a.zipf_total, a.zipf_skew),
                        base_denom,
                    ),
                    format!("zipf(n={n}, total={}, s={})", a.zipf_total, a.zipf_skew),
                ),
                None => load(&a.source, base_denom)?,
            };
            let params = BenchParams {
                ks: a.k,
                trials: a.trials,
                variants: a.variants,
                epsilon: parse_epsilon(&a.mechanism.eps)?,
                base_denom,
                refine_factor: a.mechanism.refine_factor,
                master_seed: a.seed,
            };
            let report = bench(&q, &name, &params)?;
            match a.format {
                Format::Json => print_json(out, &report)?,
                Format::Table => write!(out, "{}", report.to_table()).map_err(stdout_err)?,
            }
        }
        Command::Verify(a) => {
            let suite: Suite = a
                .suite
                .parse()
                .map_err(|e: gaptopk::Error| usage(e.to_string()))?;
            let opts = SuiteOptions {
                seed: a.seed,
                samples: a.samples,
                equivalence_runs: a.runs,
            };
            let report = run_suite(suite, &opts)?;
            match a.format {
                Format::Json => print_json(out, &report)?,
                Format::Table => {
                    for c in &report.checks {
                        let verdict = if c.pass { "PASS" } else { "FAIL" };
                        writeln!(
                            out,
                            "{verdict}  {:<12} {:<44} {}",
                            c.suite, c.name, c.detail
                        )
                        .map_err(stdout_err)?;
                    }
                }
            }
            if !report.pass {
                let failed = report.checks.iter().filter(|c| !c.pass).count();
                return Err(CliError::Verification(format!("{failed} check(s) failed")));
            }
        }
        Command::Synth(a) => {
            write_transactions(&a.output, a.items, a.records, a.skew, a.mean_len, a.seed)?;
        }
        Command::Ingest(a) => {
            let ds = ingest(&a.input)?;
            let mut order: Vec<usize> = (0..ds.items.len()).collect();
            order.sort_by(|&x, &y| ds.counts[y].cmp(&ds.counts[x]).then(x.cmp(&y)));
            let summary = IngestSummary {
                path: ds.path.display().to_string(),
                records: ds.n_records,
                unique_items: ds.unique_items(),
                top_items: order
                    .iter()
                    .take(10)
                    .map(|&i| (ds.items[i].as_str(), ds.counts[i]))
                    .collect(),
            };
            match a.format {
                Format::Json => print_json(out, &summary)?,
                Format::Table => writeln!(
                    out,
                    "{}: {} records, {} unique items",
                    summary.path, summary.records, summary.unique_items
                )
                .map_err(stdout_err)?,
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
