//! Plain versus accelerated comparison over several orders.

use std::io::Write;

use rayon::prelude::*;
use semiflow::engine::Mode;

use crate::problem::Problem;
use crate::solve::{run, SolveOptions};

/// Environment variable capping the number of bench worker threads.
pub const THREADS_VAR: &str = "SEMIFLOW_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub mode: Mode,
    /// `None` for the plain row.
    pub order: Option<u32>,
    pub outer_steps: usize,
    pub total_applies: u64,
    pub final_residual: Option<f64>,
    pub estimated_order: Option<f64>,
    pub status: String,
    pub exit_code: i32,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub orders: Vec<u32>,
    pub tol: f64,
    pub max_iter: usize,
    pub force: bool,
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_VAR).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn cell(problem: &Problem, opts: &BenchOptions, order: Option<u32>) -> BenchRow {
    let solve = SolveOptions {
        mode: if order.is_some() { Mode::Accelerated } else { Mode::Plain },
        order: order.unwrap_or(2),
        tol: opts.tol,
        max_iter: opts.max_iter,
        force: opts.force,
    };
    match run(problem, &solve) {
        Ok(out) => BenchRow {
            mode: solve.mode,
            order,
            outer_steps: out.report.outer_steps(),
            total_applies: out.report.total_applies(),
            final_residual: out.report.final_residual(),
            estimated_order: out.report.estimated_order,
            status: out.status.label().to_string(),
            exit_code: out.status.exit_code(),
            message: out.message,
        },
        Err(e) => BenchRow {
            mode: solve.mode,
            order,
            outer_steps: 0,
            total_applies: 0,
            final_residual: None,
            estimated_order: None,
            status: "error".into(),
            exit_code: 1,
            message: e.to_string(),
        },
    }
}

/// Runs the plain row and one accelerated row per order. Rows come back
/// in that order whatever the scheduling.
pub fn bench(problem: &Problem, opts: &BenchOptions) -> Vec<BenchRow> {
    let cells: Vec<Option<u32>> = std::iter::once(None).chain(opts.orders.iter().copied().map(Some)).collect();
    let work = || cells.par_iter().map(|&order| cell(problem, opts, order)).collect::<Vec<_>>();
    match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_bench<W: Write>(writer: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["mode", "r", "outer_steps", "total_applies", "final_residual", "estimated_order", "status"])?;
    for row in rows {
        w.write_record([
            row.mode.to_string(),
            row.order.map(|r| r.to_string()).unwrap_or_default(),
            row.outer_steps.to_string(),
            row.total_applies.to_string(),
            opt(row.final_residual),
            opt(row.estimated_order),
            row.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// 0 when every row converged, otherwise the largest row exit code.
pub fn exit_code(rows: &[BenchRow]) -> i32 {
    rows.iter().map(|r| r.exit_code).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use semiflow::instances::stein_instance;

    #[test]
    fn rows_in_request_order_and_monotone() {
        let p = Problem::Stein(stein_instance(3, 6, 0.8));
        let opts = BenchOptions { orders: vec![2, 3, 4], tol: 1e-12, max_iter: 1000, force: false };
        let rows = bench(&p, &opts);
        assert_eq!(rows.iter().map(|r| r.order).collect::<Vec<_>>(), [None, Some(2), Some(3), Some(4)]);
        assert!(rows.iter().all(|r| r.status == "converged"), "{rows:?}");
        for w in rows[1..].windows(2) {
            assert!(w[1].outer_steps <= w[0].outer_steps);
        }
        assert!((rows[1].total_applies as usize) < rows[0].outer_steps);
        assert_eq!(exit_code(&rows), 0);

        let mut buf = Vec::new();
        write_bench(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("plain,,"));
    }

    #[test]
    fn failed_rows_do_not_abort_the_batch() {
        let p = Problem::Stein(stein_instance(3, 4, 1.2));
        let opts = BenchOptions { orders: vec![2], tol: 1e-12, max_iter: 50, force: false };
        let rows = bench(&p, &opts);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.status == "error"));
        assert_eq!(exit_code(&rows), 1);
    }
}
