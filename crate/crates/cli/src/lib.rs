//! Command-line front end: problem files, solver dispatch, benchmarks and
//! property suites.

pub mod app;
pub mod bench;
pub mod check;
pub mod mtx;
pub mod output;
pub mod problem;
pub mod solve;
