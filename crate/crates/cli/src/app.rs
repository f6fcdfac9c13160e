//! Argument parsing and subcommand bodies.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use semiflow::engine::Mode;

use crate::bench::{bench, exit_code, write_bench, BenchOptions};
use crate::check::{run_suites, Suite};
use crate::output::{with_suffix, write_solve_outputs};
use crate::problem;
use crate::solve::{run, SolveOptions};

pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "semiflow", version, about = "Accelerated fixed-point solvers for structured matrix equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Accelerated,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem file and write <out>.solution.json and <out>.history.csv.
    Solve {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "accelerated")]
        mode: ModeArg,
        #[arg(long, default_value_t = 2)]
        order: u32,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 200)]
        max_iter: usize,
        /// Output prefix; defaults to the problem path without its extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Iterate even when the Stein precondition fails.
        #[arg(long)]
        force: bool,
    },
    /// Compare plain iteration with several acceleration orders; writes <out>.bench.csv.
    Bench {
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        orders: Vec<u32>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 1000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Run seeded property suites.
    Check {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

fn default_prefix(problem: &std::path::Path, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| problem.with_extension(""))
}

/// Help and version requests succeed; every other parse error is an input
/// error.
fn parse_exit_code(e: &clap::Error) -> i32 {
    if e.use_stderr() {
        EXIT_INPUT
    } else {
        0
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return parse_exit_code(&e);
        }
    };
    match cli.command {
        Command::Solve { problem, mode, order, tol, max_iter, out, force } => {
            let mode = match mode {
                ModeArg::Plain => Mode::Plain,
                ModeArg::Accelerated => Mode::Accelerated,
            };
            solve_cmd(problem, SolveOptions { mode, order, tol, max_iter, force }, out)
        }
        Command::Bench { problem, orders, tol, max_iter, out, force } => {
            bench_cmd(problem, BenchOptions { orders, tol, max_iter, force }, out)
        }
        Command::Check { suite, seed, trials } => check_cmd(suite, seed, trials),
    }
}

fn solve_cmd(path: PathBuf, opts: SolveOptions, out: Option<PathBuf>) -> i32 {
    let problem = match problem::load(&path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    };
    let result = match run(&problem, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let prefix = default_prefix(&path, out);
    match write_solve_outputs(&prefix, problem.kind(), &result) {
        Ok((json, csv)) => {
            println!(
                "{}: {} after {} outer steps ({} applies), residual {:.3e}",
                problem.kind(),
                result.status.label(),
                result.report.outer_steps(),
                result.report.total_applies(),
                result.report.final_residual().unwrap_or(f64::NAN)
            );
            if result.status.exit_code() != 0 {
                eprintln!("{}", result.message);
            }
            println!("wrote {} and {}", json.display(), csv.display());
            result.status.exit_code()
        }
        Err(e) => {
            eprintln!("error: cannot write outputs: {e:#}");
            EXIT_INPUT
        }
    }
}

fn bench_cmd(path: PathBuf, opts: BenchOptions, out: Option<PathBuf>) -> i32 {
    if opts.orders.iter().any(|&r| r < 2) {
        eprintln!("error: --orders: every order must be at least 2");
        return EXIT_INPUT;
    }
    let problem = match problem::load(&path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    };
    let rows = bench(&problem, &opts);
    for row in &rows {
        let label = row.order.map_or("plain".to_string(), |r| format!("r={r}"));
        println!(
            "{label:<8} {:<15} outer_steps={:<6} applies={:<6} residual={:.3e}",
            row.status,
            row.outer_steps,
            row.total_applies,
            row.final_residual.unwrap_or(f64::NAN)
        );
        if row.exit_code != 0 {
            eprintln!("{label}: {}", row.message);
        }
    }
    let csv_path = with_suffix(&default_prefix(&path, out), ".bench.csv");
    let written = std::fs::File::create(&csv_path).map_err(csv::Error::from).and_then(|f| write_bench(f, &rows));
    if let Err(e) = written {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return EXIT_INPUT;
    }
    println!("wrote {}", csv_path.display());
    exit_code(&rows)
}

fn check_cmd(suite: Suite, seed: u64, trials: usize) -> i32 {
    let results = run_suites(suite, seed, trials);
    for r in &results {
        println!("{r}");
    }
    if results.iter().all(|r| r.passed()) {
        println!("all suites passed");
        0
    } else {
        EXIT_CHECK_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn call(args: &[&str]) -> i32 {
        main_with(std::iter::once("semiflow").chain(args.iter().copied()))
    }

    fn write(dir: &Path, name: &str, text: &str) -> String {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn csv_rows(path: &Path) -> Vec<Vec<String>> {
        let mut r = csv::Reader::from_path(path).unwrap();
        r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
    }

    #[test]
    fn solve_with_sidecar_writes_history() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        write(d, "g.mtx", "%%MatrixMarket matrix array real symmetric\n2 2\n1\n0\n1\n");
        let problem = write(
            d,
            "p.json",
            r#"{"kind": "dare", "matrices": {"A": [[0.5, 0.1], [0, 0.4]], "G": "g.mtx", "H": [[1, 0], [0, 2]]}}"#,
        );
        let prefix = d.join("run");
        assert_eq!(call(&["solve", &problem, "--order", "3", "--out", &prefix.to_string_lossy()]), 0);
        let rows = csv_rows(&with_suffix(&prefix, ".history.csv"));
        let sol: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(with_suffix(&prefix, ".solution.json")).unwrap()).unwrap();
        assert_eq!(rows.len() as u64, sol["outer_steps"].as_u64().unwrap() + 1);
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row[0], (k + 1).to_string());
            assert_eq!(row[1], 3u64.pow(k as u32).to_string());
        }
        assert_eq!(sol["total_applies"].as_u64().unwrap(), 2 * (rows.len() as u64 - 1));
        assert_eq!(sol["solution"]["rows"], 2);
    }

    #[test]
    fn default_prefix_and_deterministic_bodies() {
        let dir = tempfile::tempdir().unwrap();
        let problem = write(dir.path(), "nme.json", r#"{"kind": "nme", "matrices": {"Q": [[3]], "A": [[1]], "B": [[1]]}}"#);
        let strip = |rows: Vec<Vec<String>>| rows.into_iter().map(|r| r[..3].to_vec()).collect::<Vec<_>>();
        assert_eq!(call(&["solve", &problem, "--mode", "plain"]), 0);
        let first = strip(csv_rows(&dir.path().join("nme.history.csv")));
        assert_eq!(call(&["solve", &problem, "--mode", "plain"]), 0);
        assert_eq!(first, strip(csv_rows(&dir.path().join("nme.history.csv"))));
        assert!(first.len() > 10);
    }

    #[test]
    fn bench_writes_one_row_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let problem = write(dir.path(), "lin.json", r#"{"kind": "scalar-linear", "a": 0.5, "b": 1}"#);
        assert_eq!(call(&["bench", &problem, "--orders", "2,3"]), 0);
        let rows = csv_rows(&dir.path().join("lin.bench.csv"));
        assert_eq!(rows.iter().map(|r| r[1].clone()).collect::<Vec<_>>(), ["", "2", "3"]);
        assert!(rows.iter().all(|r| r[6] == "converged"));
        assert_eq!(call(&["bench", &problem, "--orders", "1"]), EXIT_INPUT);
    }

    #[test]
    fn status_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let singular = write(d, "s.json", r#"{"kind": "nme", "matrices": {"Q": [[1]], "A": [[1]], "B": [[1]]}}"#);
        assert_eq!(call(&["solve", &singular]), 3);
        let ambiguous = write(
            d,
            "amb.json",
            r#"{"kind": "pencil", "m": 2, "matrices": {"A": [[0.5, 0, 0], [0, 2, 0], [0, 0, 3]], "B": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}}"#,
        );
        assert_eq!(call(&["solve", &ambiguous]), 3);
        let stable = write(
            d,
            "pen.json",
            r#"{"kind": "pencil", "m": 1, "matrices": {"A": [[0.5, 0], [0, 2]], "B": [[1, 0], [0, 1]]}}"#,
        );
        assert_eq!(call(&["solve", &stable]), 0);
        let slow = write(d, "slow.json", r#"{"kind": "scalar-linear", "a": 0.99, "b": 1}"#);
        assert_eq!(call(&["solve", &slow, "--mode", "plain", "--max-iter", "3"]), 2);
        assert_eq!(call(&["solve", &d.join("missing.json").to_string_lossy()]), EXIT_INPUT);
        let not_herm = write(d, "nh.json", r#"{"kind": "dare", "matrices": {"A": [[1]], "G": [[1, 2], [0, 1]], "H": [[1]]}}"#);
        assert_eq!(call(&["solve", &not_herm]), EXIT_INPUT);
    }

    #[test]
    fn argument_errors() {
        let code = |args: &[&str]| match Cli::try_parse_from(std::iter::once("semiflow").chain(args.iter().copied())) {
            Ok(_) => None,
            Err(e) => Some(parse_exit_code(&e)),
        };
        assert_eq!(code(&["--help"]), Some(0));
        assert_eq!(code(&["--version"]), Some(0));
        assert_eq!(code(&["solve"]), Some(EXIT_INPUT));
        assert_eq!(code(&["check", "--suite", "bogus"]), Some(EXIT_INPUT));
        assert_eq!(code(&["bench", "p.json", "--orders", "2,x"]), Some(EXIT_INPUT));
        assert_eq!(code(&["check"]), None);
        assert_eq!(call(&["check", "--suite", "lemmas", "--trials", "5"]), 0);
    }
}
