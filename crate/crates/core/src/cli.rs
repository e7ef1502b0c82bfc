//! Command-line front end. Every command prints one JSON report on stdout;
//! `verify-table` and `search` can also write CSV and JSON-lines files.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage,
//! validation or I/O errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::appendix::{self, AppendixReport};
use crate::channel::CziChannel;
use crate::envelope::EnvelopeConfig;
use crate::error::{Error, Result};
use crate::hk::{hk_max, tin_max, HkConfig, WeightedProblem};
use crate::search::{search_counterexamples, SearchConfig, DEFAULT_LAMBDAS};
use crate::table::{self, RowCheck, Tolerances};
use crate::twoletter::{two_letter_max, GapReport, TwoLetterConfig, DEFAULT_GAP_THRESHOLD};

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "CZI_THREADS";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "czi", version, about = "Weighted sum-rates of binary clean-Z interference channels")]
pub struct Cli {
    /// Worker threads (defaults to $CZI_THREADS, then to the core count)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// P(Y1=0|x1,x2) as q00,q01,q10,q11
    #[arg(long)]
    pub channel: CziChannel,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-letter HK maximum of lambda*R1 + R2 (lambda >= 1)
    HkMax {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Points on the p and q grids; the envelope uses 4(n-1)+1 samples
        #[arg(long, default_value_t = 4097)]
        grid: usize,
    },
    /// Treating-interference-as-noise maximum of lambda*R1 + R2
    Tin {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Normalized two-letter TIN maximum of the product channel
    TwoLetter {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recompute the embedded counterexample table
    VerifyTable {
        /// One-based rows, comma separated (default: all)
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
        /// CSV output path
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = Tolerances::default().hk_abs, hide = true)]
        hk_tol: f64,
        #[arg(long, default_value_t = Tolerances::default().two_below, hide = true)]
        two_below_tol: f64,
        #[arg(long, default_value_t = Tolerances::default().two_abs, hide = true)]
        two_tol: f64,
    },
    /// Closed-form bound, explicit two-letter point and envelope cross-check
    VerifyAppendix {
        #[arg(long, default_value_t = 1e-6)]
        fd_step: f64,
        /// p grid of the envelope cross-check
        #[arg(long, default_value_t = 101)]
        envelope_p: usize,
        /// q grid of the envelope cross-check
        #[arg(long, default_value_t = 10_000)]
        envelope_q: usize,
    },
    /// Random search for channels with a positive two-letter gap
    Search {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_GAP_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        /// Screening grid; flagged candidates are rechecked 4x finer
        #[arg(long, default_value_t = 1025)]
        grid: usize,
        /// JSON-lines output path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every report, not only flagged ones
        #[arg(long)]
        all: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub status: Status,
    pub inputs: Value,
    pub outputs: Value,
    pub error_budgets: Value,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        match self.status {
            Status::Fail => EXIT_FAIL,
            _ => EXIT_OK,
        }
    }
}

/// Rounds to 7 decimal places.
pub fn r7(x: f64) -> f64 {
    (x * 1e7).round() / 1e7
}

fn r7_all(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(r7).collect()
}

/// Grids for `hk-max --grid n`.
pub fn hk_config_for_grid(n: usize) -> Result<HkConfig> {
    if n < 3 {
        return Err(Error::GridTooSmall(n));
    }
    Ok(HkConfig {
        envelope: EnvelopeConfig {
            n_grid: 4 * (n - 1) + 1,
            ..EnvelopeConfig::default()
        },
        p_grid: n,
        q_grid: n,
        ..HkConfig::default()
    })
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    Ok(n)
}

/// Parses `args` (program name first), runs the command, writes the report
/// to `out` and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    let echo = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, echo) {
        Ok(report) => {
            let written = serde_json::to_writer_pretty(&mut *out, &report)
                .map_err(std::io::Error::from)
                .and_then(|_| writeln!(out));
            if let Err(e) = written {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: Cli, command: Vec<String>) -> Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let start = Instant::now();
    let mut report = pool.install(|| dispatch(&cli.command))?;
    report.command = command;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn report(status: Status, inputs: Value, outputs: Value, error_budgets: Value, seed: Option<u64>) -> Report {
    Report {
        command: Vec::new(),
        status,
        inputs,
        outputs,
        error_budgets,
        seed,
        wall_time_s: 0.0,
    }
}

fn problem_inputs(p: &ProblemArgs) -> Value {
    json!({ "channel": p.channel, "lambda": p.lambda })
}

fn dispatch(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::HkMax { problem, grid } => cmd_hk_max(problem, *grid),
        Command::Tin { problem } => cmd_tin(problem),
        Command::TwoLetter { problem, starts, seed } => cmd_two_letter(problem, *starts, *seed),
        Command::VerifyTable {
            rows,
            out,
            hk_tol,
            two_below_tol,
            two_tol,
        } => {
            let tol = Tolerances {
                hk_abs: *hk_tol,
                two_below: *two_below_tol,
                two_abs: *two_tol,
            };
            cmd_verify_table(rows.as_deref(), out.as_deref(), &tol)
        }
        Command::VerifyAppendix {
            fd_step,
            envelope_p,
            envelope_q,
        } => cmd_verify_appendix(*fd_step, *envelope_p, *envelope_q),
        Command::Search {
            lambdas,
            trials,
            seed,
            threshold,
            starts,
            grid,
            out,
            all,
        } => {
            let cfg = SearchConfig {
                lambdas: lambdas.clone(),
                trials: *trials,
                seed: *seed,
                threshold: *threshold,
                two_letter: TwoLetterConfig {
                    starts: *starts,
                    seed: *seed,
                    ..TwoLetterConfig::default()
                },
                hk: hk_config_for_grid(*grid)?,
                forced: Vec::new(),
            };
            cmd_search(&cfg, out.as_deref(), *all)
        }
    }
}

pub fn cmd_hk_max(problem: &ProblemArgs, grid: usize) -> Result<Report> {
    if !(problem.lambda >= 1.0) {
        return Err(Error::Domain {
            what: "lambda (hk-max needs lambda >= 1; use `tin` below 1)",
            value: problem.lambda,
        });
    }
    let cfg = hk_config_for_grid(grid)?;
    let res = hk_max(&WeightedProblem::new(problem.channel, problem.lambda)?, &cfg)?;
    let s = res.support;
    Ok(report(
        Status::Ok,
        json!({ "channel": problem.channel, "lambda": problem.lambda, "grid": grid }),
        json!({
            "value": r7(res.value),
            "p_star": r7(res.p_star),
            "q_star": r7(res.q_star),
            "support": { "x_lo": r7(s.x_lo), "x_hi": r7(s.x_hi), "w": r7(s.w) },
            "certificate_value": r7(res.certificate_value),
        }),
        json!({
            "total": res.error_budget(),
            "envelope": res.grid_meta.envelope_error_estimate,
            "certificate_gap": (res.value - res.certificate_value).abs(),
            "grid": res.grid_meta,
        }),
        None,
    ))
}

pub fn cmd_tin(problem: &ProblemArgs) -> Result<Report> {
    let res = tin_max(&problem.channel, problem.lambda)?;
    Ok(report(
        Status::Ok,
        problem_inputs(problem),
        json!({ "value": r7(res.value), "p": r7(res.p), "q": r7(res.q) }),
        json!({}),
        None,
    ))
}

pub fn cmd_two_letter(problem: &ProblemArgs, starts: usize, seed: u64) -> Result<Report> {
    let cfg = TwoLetterConfig {
        starts,
        seed,
        ..TwoLetterConfig::default()
    };
    let res = two_letter_max(&problem.channel, problem.lambda, &cfg)?;
    Ok(report(
        Status::Ok,
        json!({ "channel": problem.channel, "lambda": problem.lambda, "starts": starts }),
        json!({
            "value": r7(res.value),
            "pi1": r7_all(res.pi1_star.probs()),
            "pi2": r7_all(res.pi2_star.probs()),
            "best_start": res.best_start,
            "converged_starts": res.converged_starts,
            "tin_value": r7(res.tin.value),
        }),
        json!({ "optimizer_tol": cfg.tol }),
        Some(seed),
    ))
}

#[derive(Debug, Serialize)]
struct CsvRow {
    row: usize,
    lambda: f64,
    channel: String,
    hk_table: f64,
    hk_ours: f64,
    two_table: f64,
    two_ours: f64,
    gap: f64,
    status: &'static str,
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_table_csv(path: &Path, checks: &[RowCheck]) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for c in checks {
        w.serialize(CsvRow {
            row: c.row,
            lambda: c.expected.lambda,
            channel: c.report.channel.to_string(),
            hk_table: c.expected.hk,
            hk_ours: r7(c.report.hk_value),
            two_table: c.expected.two,
            two_ours: r7(c.report.two_letter_value),
            gap: r7(c.report.gap),
            status: pass_fail(c.passed()),
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_verify_table(rows: Option<&[usize]>, out: Option<&Path>, tol: &Tolerances) -> Result<Report> {
    let t = table::table();
    let selected: Vec<usize> = match rows {
        Some(r) => r.to_vec(),
        None => (1..=t.rows.len()).collect(),
    };
    let hk_cfg = HkConfig::default();
    let tl_cfg = TwoLetterConfig::default();
    let checks = selected
        .iter()
        .map(|&r| table::verify_row(&t, r, &hk_cfg, &tl_cfg, tol))
        .collect::<Result<Vec<_>>>()?;
    if let Some(path) = out {
        write_table_csv(path, &checks)?;
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    let per_row: Vec<Value> = checks
        .iter()
        .map(|c| {
            json!({
                "row": c.row,
                "lambda": c.expected.lambda,
                "hk": r7(c.report.hk_value),
                "two_letter": r7(c.report.two_letter_value),
                "gap": r7(c.report.gap),
                "hk_ok": c.hk_ok,
                "two_ok": c.two_ok,
                "gap_ok": c.gap_ok,
                "status": pass_fail(c.passed()),
            })
        })
        .collect();
    let budgets: Vec<f64> = checks.iter().map(|c| c.report.error_budget).collect();
    Ok(report(
        if passed == checks.len() { Status::Pass } else { Status::Fail },
        json!({ "rows": selected, "table_version": t.version, "tolerances": tol }),
        json!({ "passed": passed, "total": checks.len(), "rows": per_row }),
        json!({ "per_row": budgets }),
        Some(tl_cfg.seed),
    ))
}

pub fn cmd_verify_appendix(fd_step: f64, n_p: usize, n_q: usize) -> Result<Report> {
    if n_p < 2 || n_q < 2 {
        return Err(Error::Config("envelope cross-check grids need at least 2 points".into()));
    }
    let r: AppendixReport = appendix::verify_appendix(fd_step, n_p, n_q, EnvelopeConfig::default())?;
    Ok(report(
        if r.passed() { Status::Pass } else { Status::Fail },
        json!({ "fd_step": fd_step, "envelope_p": n_p, "envelope_q": n_q, "constants": appendix::CONSTANTS }),
        json!({
            "bound": r7(r.bound.value),
            "f_at_point": r7(r.bound.f_at_point),
            "dF_dp": r.bound.a,
            "dF_dq": r.bound.b,
            "two_letter_point": r7(r.two_letter_point),
            "margin": r7(r.margin),
            "envelope_max_abs_diff": r.envelope_max_abs_diff,
            "bound_ok": r.bound_ok,
            "point_ok": r.point_ok,
            "chain_ok": r.chain_ok,
            "envelope_ok": r.envelope_ok,
        }),
        json!({
            "bound": appendix::BOUND_TOL,
            "point": appendix::POINT_TOL,
            "envelope": appendix::ENVELOPE_TOL,
            "fd_consistency": [(r.bound.a - r.bound.a_coarse).abs(), (r.bound.b - r.bound.b_coarse).abs()],
        }),
        None,
    ))
}

fn write_jsonl(path: &Path, reports: &[&GapReport]) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in reports {
        serde_json::to_writer(&mut w, r).map_err(|e| io(e.into()))?;
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn cmd_search(cfg: &SearchConfig, out: Option<&Path>, all: bool) -> Result<Report> {
    let reports = search_counterexamples(cfg)?;
    let flagged: Vec<&GapReport> = reports.iter().filter(|r| r.flagged).collect();
    if let Some(path) = out {
        let written: Vec<&GapReport> = if all { reports.iter().collect() } else { flagged.clone() };
        write_jsonl(path, &written)?;
    }
    let summary: Vec<Value> = flagged
        .iter()
        .map(|r| json!({ "channel": r.channel, "lambda": r.lambda, "gap": r7(r.gap) }))
        .collect();
    let max_budget = reports.iter().map(|r| r.error_budget).fold(0.0, f64::max);
    Ok(report(
        Status::Ok,
        json!({
            "lambdas": cfg.lambdas,
            "trials": cfg.trials,
            "threshold": cfg.threshold,
            "starts": cfg.two_letter.starts,
            "grid": cfg.hk.p_grid,
        }),
        json!({ "evaluated": reports.len(), "flagged": summary }),
        json!({ "max": max_budget }),
        Some(cfg.seed),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (u8, String) {
        let mut out = Vec::new();
        let code = run(args.iter().copied(), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn rounding() {
        assert_eq!(r7(1.10751630299), 1.1075163);
        assert_eq!(r7(-0.00000004), -0.0);
    }

    #[test]
    fn grid_flag_matches_default_config() {
        assert_eq!(hk_config_for_grid(4097).unwrap(), HkConfig::default());
        assert_eq!(hk_config_for_grid(1025).unwrap(), HkConfig::screening());
        assert!(hk_config_for_grid(2).is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_str(&["czi", "hk-max", "--channel", "1,0.5,1", "--lambda", "2"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["czi", "hk-max", "--channel", "1,0.5,1,0", "--lambda", "0.5"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["czi", "frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["czi", "--threads", "0", "tin", "--channel", "1,0.5,1,0", "--lambda", "1"]).0, EXIT_USAGE);
    }

    #[test]
    fn tin_report_is_json() {
        let (code, out) = run_str(&["czi", "tin", "--channel", "0.5,0.5,0.5,0.5", "--lambda", "3"]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["outputs"]["value"], json!(1.0));
        assert_eq!(v["status"], json!("ok"));
        assert_eq!(v["command"][1], json!("tin"));
    }
}
