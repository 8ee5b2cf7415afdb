//! Command-line interface: a single binary exposing every verb.
//!
//! Human-readable output goes to standard out (progress to standard error);
//! machine-readable output goes only to files. Every verb accepts `--seed`
//! and repeated invocations with identical flags produce byte-identical
//! files and reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::discrepancy::{estimate_discrepancy, DiscrepancyConfig, TracePoint};
use crate::error::{Error, Result};
use crate::io::{read_samples, read_vectors, write_plan, write_vectors};
use crate::srvt::{srvt_forward, srvt_inverse};
use crate::trainer::{train, MetricsRecord, TrainConfig};
use crate::transport::wasserstein_exact;
use crate::verify::{manifest_hash, run_suite, Suite};

/// Version string with the invariant-suite manifest hash, so a report can be
/// tied to the exact set of checks that produced it.
pub fn long_version() -> &'static str {
    static VERSION: OnceLock<String> = OnceLock::new();
    VERSION
        .get_or_init(|| {
            format!(
                "{}\ninvariant manifest {}",
                env!("CARGO_PKG_VERSION"),
                manifest_hash()
            )
        })
        .as_str()
}

#[derive(Parser)]
#[command(
    name = "pcd",
    version,
    long_version = long_version(),
    about = "Maximal p-centrality discrepancy: estimator, transport oracles, trainer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Exact Wasserstein distance between two CSV point clouds.
    Wasserstein(WassersteinArgs),
    /// Apply the square-root velocity transform to each CSV row.
    Srvt(SrvtArgs),
    /// Estimate the maximal p-centrality discrepancy by certified ascent.
    Discrepancy(DiscrepancyArgs),
    /// Train the adversarial pair on a synthetic 2D mixture.
    Train(TrainArgs),
    /// Run the consolidated invariant suite and print the report.
    Verify(VerifyArgs),
    /// Merge training metrics across runs into a comparison table.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct WassersteinArgs {
    /// Moment order p >= 1.
    #[arg(long)]
    pub p: f64,
    /// CSV of the left distribution (x1..xm[,weight]).
    #[arg(long)]
    pub left: PathBuf,
    /// CSV of the right distribution (x1..xm[,weight]).
    #[arg(long)]
    pub right: PathBuf,
    /// Optional CSV dump of the optimal plan as (i, j, mass) triples.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Accepted for interface uniformity; the solver is exact.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct SrvtArgs {
    /// Apply the inverse transform instead of the forward one.
    #[arg(long)]
    pub inverse: bool,
    /// Input CSV; each row is one vector.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output CSV with transformed rows.
    #[arg(long)]
    pub out: PathBuf,
    /// Accepted for interface uniformity; the transform is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct DiscrepancyArgs {
    /// CSV of the left distribution.
    #[arg(long)]
    pub left: PathBuf,
    /// CSV of the right distribution.
    #[arg(long)]
    pub right: PathBuf,
    /// Moment order p >= 1.
    #[arg(long)]
    pub p: f64,
    /// Critic output dimension.
    #[arg(long)]
    pub n: usize,
    /// Lipschitz budget K.
    #[arg(long = "K")]
    pub k: f64,
    /// Insert the SRVT block after the critic.
    #[arg(long)]
    pub srvt: bool,
    /// Ascent steps (default from the estimator configuration).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report: value, trace, config echo, certified sigmas.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// JSON file with exactly the TrainConfig fields.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for metrics.csv, checkpoint.bin, and sample dumps.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Override the seed from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// fast: reduced counts, under a minute. full: acceptance counts.
    #[arg(long, default_value = "fast")]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Directory scanned recursively for metrics.csv files.
    #[arg(long)]
    pub dir: PathBuf,
    /// Consolidated CSV path (default: <dir>/report.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accepted for interface uniformity; the merge is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Render with `sig` significant digits in plain positional notation.
fn format_significant(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Run one parsed invocation and return the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Wasserstein(args) => cmd_wasserstein(args),
        Command::Srvt(args) => cmd_srvt(args),
        Command::Discrepancy(args) => cmd_discrepancy(args),
        Command::Train(args) => cmd_train(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_wasserstein(args: WassersteinArgs) -> Result<i32> {
    let left = read_samples(&args.left)?;
    let right = read_samples(&args.right)?;
    let (dist, plan) = wasserstein_exact(&left, &right, args.p)?;
    if let Some(path) = &args.plan {
        write_plan(path, &plan)?;
    }
    println!("{}", format_significant(dist, 12));
    Ok(0)
}

fn cmd_srvt(args: SrvtArgs) -> Result<i32> {
    let rows = read_vectors(&args.input)?;
    let transformed: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            if args.inverse {
                srvt_inverse(row)
            } else {
                srvt_forward(row)
            }
        })
        .collect();
    write_vectors(&args.out, &transformed)?;
    println!(
        "{} {} rows -> {}",
        if args.inverse { "inverted" } else { "transformed" },
        transformed.len(),
        args.out.display()
    );
    Ok(0)
}

/// JSON emitted by the discrepancy verb: the estimate plus enough context to
/// reproduce it.
#[derive(Serialize)]
struct DiscrepancyReport<'a> {
    config: &'a DiscrepancyConfig,
    value: f64,
    best_step: usize,
    certified_sigmas: &'a [f64],
    trace: &'a [TracePoint],
}

fn cmd_discrepancy(args: DiscrepancyArgs) -> Result<i32> {
    let left = read_samples(&args.left)?;
    let right = read_samples(&args.right)?;
    let mut cfg = DiscrepancyConfig::new(args.p, args.n, args.k);
    cfg.srvt = args.srvt;
    cfg.seed = args.seed;
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    let outcome = estimate_discrepancy(&left, &right, &cfg)?;
    let est = &outcome.estimate;
    let report = DiscrepancyReport {
        config: &cfg,
        value: est.value,
        best_step: est.best_step,
        certified_sigmas: &est.certified_sigmas,
        trace: &est.trace,
    };
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    fs::write(&args.out, body)?;
    println!("{}", format_significant(est.value, 12));
    Ok(0)
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.config)?;
    let mut cfg: TrainConfig = serde_json::from_str(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = train(&cfg, Some(&args.out_dir))?;
    if let Some(last) = out.records.last() {
        println!(
            "final step {}  objective {}  w1 {}  modes {}  hq_frac {}",
            last.step,
            format_significant(last.objective, 6),
            format_significant(last.w1, 6),
            last.modes,
            format_significant(last.hq_frac, 6),
        );
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let report = run_suite(args.suite, args.seed);
    print!("{}", report.render());
    Ok(if report.all_passed() { 0 } else { 1 })
}

/// One training run discovered on disk: its grouping key, seed, and the
/// final metrics row.
struct RunRow {
    group: String,
    seed: u64,
    last: MetricsRecord,
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    let mut files = Vec::new();
    collect_metrics_files(&args.dir, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(Error::NoMetrics(args.dir.display().to_string()));
    }

    let mut rows = Vec::new();
    for path in &files {
        rows.push(load_run(path)?);
    }
    rows.sort_by(|a, b| (&a.group, a.seed).cmp(&(&b.group, b.seed)));

    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| args.dir.join("report.csv"));
    let mut csv = String::from("config,seed,step,objective,w1,modes,hq_frac,seconds\n");
    for row in &rows {
        csv.push_str(&format!("{},{},{}\n", row.group, row.seed, row.last.csv_row()));
    }
    fs::write(&out_path, csv)?;

    // Group in first-seen order of the sorted rows; medians across seeds.
    let mut groups: Vec<(String, Vec<&RunRow>)> = Vec::new();
    for row in &rows {
        match groups.iter_mut().find(|(g, _)| *g == row.group) {
            Some((_, v)) => v.push(row),
            None => groups.push((row.group.clone(), vec![row])),
        }
    }
    println!("config | runs | median_w1 | median_modes | median_hq_frac | median_objective");
    for (group, runs) in &groups {
        let med = |f: &dyn Fn(&RunRow) -> f64| -> f64 {
            median(runs.iter().map(|r| f(r)).collect())
        };
        println!(
            "{} | {} | {} | {} | {} | {}",
            group,
            runs.len(),
            format_significant(med(&|r| r.last.w1), 6),
            format_significant(med(&|r| r.last.modes as f64), 6),
            format_significant(med(&|r| r.last.hq_frac), 6),
            format_significant(med(&|r| r.last.objective), 6),
        );
    }
    Ok(0)
}

fn collect_metrics_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_metrics_files(&path, out)?;
        } else if path.file_name().and_then(|n| n.to_str()) == Some("metrics.csv") {
            out.push(path);
        }
    }
    Ok(())
}

/// The grouping key comes from the config echo written next to metrics.csv;
/// without one, runs group by their directory name.
fn run_group_and_seed(metrics_path: &Path) -> (String, u64) {
    let dir = metrics_path.parent().unwrap_or(Path::new("."));
    let fallback = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("run")
        .to_string();
    let Ok(text) = fs::read_to_string(dir.join("config.json")) else {
        return (fallback, 0);
    };
    match serde_json::from_str::<TrainConfig>(&text) {
        Ok(cfg) => (
            format!(
                "p={} n={} K={} srvt={}",
                cfg.p,
                cfg.n,
                cfg.k_lip,
                if cfg.srvt { "on" } else { "off" }
            ),
            cfg.seed,
        ),
        Err(_) => (fallback, 0),
    }
}

fn load_run(path: &Path) -> Result<RunRow> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.display().to_string(),
        line: line + 1,
        msg,
    };
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty metrics file".into()))?;
    if header.trim() != MetricsRecord::csv_header() {
        return Err(parse_err(0, format!("unexpected header {header:?}")));
    }
    let mut last: Option<MetricsRecord> = None;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(idx, format!("expected 6 fields, got {}", fields.len())));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(idx, format!("column {}: {e}", j + 1)))
        };
        last = Some(MetricsRecord {
            step: num(0)? as usize,
            objective: num(1)?,
            w1: num(2)?,
            modes: num(3)? as usize,
            hq_frac: num(4)?,
            seconds: num(5)?,
        });
    }
    let last = last.ok_or_else(|| parse_err(1, "metrics file has no data rows".into()))?;
    let (group, seed) = run_group_and_seed(path);
    Ok(RunRow { group, seed, last })
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(2.75, 12), "2.75000000000");
        assert_eq!(format_significant(0.00123, 3), "0.00123");
        assert_eq!(format_significant(12345.0, 3), "12345");
        assert_eq!(format_significant(-1.5, 4), "-1.500");
        assert_eq!(format_significant(0.0, 5), "0");
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn cli_parses_every_verb() {
        use clap::Parser;
        let cli = Cli::try_parse_from([
            "pcd",
            "wasserstein",
            "--p",
            "2",
            "--left",
            "a.csv",
            "--right",
            "b.csv",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Wasserstein(_)));
        let cli = Cli::try_parse_from([
            "pcd",
            "discrepancy",
            "--left",
            "a.csv",
            "--right",
            "b.csv",
            "--p",
            "1",
            "--n",
            "16",
            "--K",
            "2",
            "--srvt",
            "--out",
            "o.json",
        ])
        .unwrap();
        match cli.command {
            Command::Discrepancy(args) => {
                assert_eq!(args.k, 2.0);
                assert!(args.srvt);
            }
            _ => panic!("expected discrepancy verb"),
        }
        assert!(Cli::try_parse_from(["pcd", "verify", "--suite", "slow"]).is_err());
    }
}
