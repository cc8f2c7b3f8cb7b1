//! Benchmark problems, multi-trial runs, summaries and bound checks.

pub mod bounds;
pub mod io;
pub mod problems;
pub mod runner;
pub mod summary;

pub use problems::{make_problem, BenchmarkProblem, ProblemId, ProblemOverrides};
pub use runner::{
    run_trial, run_trials, Algorithm, AlgorithmSpec, HyperMode, TrialResult, TrialSet, TrialTarget,
};
pub use summary::TrialSummary;
pub use bounds::{validate_bounds, BoundCheck, BoundReport, BoundSuite};
pub use io::{read_history_csv, read_summary_csv, write_history_csv, write_summary_csv};
