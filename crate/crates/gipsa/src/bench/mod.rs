//! Benchmark harness: deterministic instance generation, algorithm
//! descriptors, single-instance experiments with full traces, and repeated
//! randomized trials.

pub mod algorithms;
pub mod experiment;
pub mod instance;
pub mod trials;

pub use algorithms::{parse_algorithm, parse_algorithm_list, AlgorithmSpec};
pub use experiment::{
    fit_rate_from_rows, format_trace_csv, identification_from_rows, iters_to_tol, parse_trace_csv,
    predicted_q_for, read_trace_csv, run_algorithm_observed, run_algorithm_on_instance,
    run_experiment, write_trace_csv, AlgorithmRun, AlgorithmSummary, ExperimentConfig,
    ExperimentSummary, TraceRow,
};
pub use instance::{
    generate_instance, instance_from_str, instance_to_string, read_instance_file,
    write_instance_file, GenSpec, GeneratedInstance, InstanceMeta,
};
pub use trials::{
    format_trials_csv, run_trials, write_trials_outputs, TrialCell, TrialsConfig, TrialsReport,
};
