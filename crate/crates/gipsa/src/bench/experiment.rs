//! Single-instance experiments: run a set of algorithm variants on one
//! problem, trace everything per step, and write machine-readable outputs.
//!
//! Trace CSVs print floats with 17 significant digits, so a parsed file
//! reproduces the computed values bit for bit; summaries are JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::algorithms::AlgorithmSpec;
use crate::bench::instance::InstanceMeta;
use crate::diagnostics::{
    estimate_rate, select_rate_window, signature_from_parts, ActiveSetEstimate, ActiveSetSummary,
    ManifoldRecord, ManifoldTrace, RateEstimate,
};
use crate::error::{Error, Result};
use crate::oracle::{cached_reference_solution, high_accuracy_solve, ReferenceSolution};
use crate::problem::{CompositeProblem, LassoInstance};
use crate::rng::GENERATOR_NAME;
use crate::schedules::{predicted_local_rate, RateModel, ScheduleSpec};
use crate::solver::{
    run, run_with_restart, IterationRecord, RunOutcome, StepView, StopReason, StoppingRule,
    TraceSink,
};

/// One step of a benchmark run, scored against the reference solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    /// Step index, 1-based; the step produced iterate k + 1.
    pub k: usize,
    /// F(accepted iterate) - F*.
    pub f_gap: f64,
    /// ||accepted iterate - x*||_2.
    pub iterate_err: f64,
    pub increment_norm_sq: f64,
    pub support_outside_e: usize,
    pub sign_mismatches_on_e: usize,
    pub lyapunov_energy: f64,
    pub restarted: bool,
}

pub const TRACE_HEADER: &str =
    "k,f_gap,iterate_err,increment_norm_sq,support_outside_e,sign_mismatches_on_e,lyapunov_energy,restarted";

/// Formats rows as CSV; floats carry 17 significant digits so parsing the
/// text reproduces them exactly.
pub fn format_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{}\n",
            r.k,
            r.f_gap,
            r.iterate_err,
            r.increment_norm_sq,
            r.support_outside_e,
            r.sign_mismatches_on_e,
            r.lyapunov_energy,
            u8::from(r.restarted),
        ));
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRACE_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "bad trace header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Format(format!(
                "line {}: expected 8 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_u = |s: &str, what: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad {what} '{s}'", lineno + 2)))
        };
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad {what} '{s}'", lineno + 2)))
        };
        rows.push(TraceRow {
            k: parse_u(fields[0], "k")?,
            f_gap: parse_f(fields[1], "f_gap")?,
            iterate_err: parse_f(fields[2], "iterate_err")?,
            increment_norm_sq: parse_f(fields[3], "increment_norm_sq")?,
            support_outside_e: parse_u(fields[4], "support_outside_e")?,
            sign_mismatches_on_e: parse_u(fields[5], "sign_mismatches_on_e")?,
            lyapunov_energy: parse_f(fields[6], "lyapunov_energy")?,
            restarted: match fields[7].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Format(format!(
                        "line {}: bad restarted flag '{other}'",
                        lineno + 2
                    )))
                }
            },
        });
    }
    Ok(rows)
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    fs::write(path, format_trace_csv(rows))?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    parse_trace_csv(&fs::read_to_string(path)?)
}

/// Sink that scores each accepted iterate against the reference solution on
/// the fly, so a run never has to store its iterates.
struct CollectSink<'a, 'o> {
    est: &'a ActiveSetEstimate,
    f_star: f64,
    x_star: &'a [f64],
    rows: Vec<TraceRow>,
    observer: Option<&'o mut dyn TraceSink>,
}

impl TraceSink for CollectSink<'_, '_> {
    fn on_step(&mut self, record: &IterationRecord, view: &StepView<'_>) {
        let (p, q) = signature_from_parts(self.est, view.next, view.y, view.grad_z, record.lambda);
        let err: f64 = view
            .next
            .iter()
            .zip(self.x_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.rows.push(TraceRow {
            k: record.k,
            f_gap: record.objective - self.f_star,
            iterate_err: err.sqrt(),
            increment_norm_sq: record.increment_norm_sq,
            support_outside_e: q,
            sign_mismatches_on_e: p,
            lyapunov_energy: record.lyapunov_energy,
            restarted: record.restarted,
        });
        if let Some(obs) = self.observer.as_deref_mut() {
            obs.on_step(record, view);
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlgorithmRun {
    pub algorithm: AlgorithmSpec,
    pub schedule: ScheduleSpec,
    pub restart: bool,
    pub rows: Vec<TraceRow>,
    pub outcome: RunOutcome,
}

/// Runs one algorithm variant from the origin, scoring every step against
/// the reference. The same entry point serves the CLI and the acceptance
/// battery, so their numbers agree by construction.
pub fn run_algorithm_on_instance(
    inst: &LassoInstance,
    reference: &ReferenceSolution,
    est: &ActiveSetEstimate,
    alg: &AlgorithmSpec,
    rules: &[StoppingRule],
) -> Result<AlgorithmRun> {
    run_algorithm_observed(inst, reference, est, alg, rules, None)
}

/// [`run_algorithm_on_instance`] with a second sink watching every step, for
/// checks that need the iterates themselves rather than the scored rows.
pub fn run_algorithm_observed(
    inst: &LassoInstance,
    reference: &ReferenceSolution,
    est: &ActiveSetEstimate,
    alg: &AlgorithmSpec,
    rules: &[StoppingRule],
    observer: Option<&mut dyn TraceSink>,
) -> Result<AlgorithmRun> {
    let (schedule, restart) = alg.resolve(inst, Some(est))?;
    let x0 = vec![0.0; inst.num_cols()];
    let mut sink = CollectSink {
        est,
        f_star: reference.f_star,
        x_star: &reference.x_star,
        rows: Vec::new(),
        observer,
    };
    let outcome = if restart {
        run_with_restart(inst, &x0, &schedule, rules, Some(&mut sink))
    } else {
        run(inst, &x0, &schedule, rules, Some(&mut sink))
    }
    .map_err(Error::from)?;
    Ok(AlgorithmRun {
        algorithm: alg.clone(),
        schedule,
        restart,
        rows: sink.rows,
        outcome,
    })
}

/// Earliest step count k such that the relative objective gap sits at or
/// below `tol` from iterate k + 1 onward and never crosses back. `None` when
/// the trace ends above `tol` (censored).
pub fn iters_to_tol(rows: &[TraceRow], f_star: f64, tol: f64) -> Option<usize> {
    let denom = if f_star > 0.0 { f_star } else { 1.0 };
    let last_over = rows.iter().rposition(|r| r.f_gap / denom > tol);
    match last_over {
        None => rows.first().map(|r| r.k),
        Some(i) if i + 1 < rows.len() => Some(rows[i + 1].k),
        Some(_) => None,
    }
}

/// Identification iteration read off a trace: earliest iterate index from
/// which no later row violates the active structure.
pub fn identification_from_rows(rows: &[TraceRow]) -> Option<usize> {
    let trace = ManifoldTrace {
        records: rows
            .iter()
            .map(|r| ManifoldRecord {
                k: r.k + 1,
                support_outside_e: r.support_outside_e,
                sign_mismatches_on_e: r.sign_mismatches_on_e,
            })
            .collect(),
    };
    trace.identification_iteration()
}

/// Theoretical local contraction factor for variants that have one.
pub fn predicted_q_for(alg: &AlgorithmSpec, est: &ActiveSetEstimate, l: f64) -> Option<f64> {
    let model = match alg {
        AlgorithmSpec::Fbs { .. } => RateModel::Fbs,
        AlgorithmSpec::IfbsStar { .. } => RateModel::ConstantMomentum,
        AlgorithmSpec::FistaCd { .. } => RateModel::FistaCd,
        AlgorithmSpec::FistaCdRestart { .. } => RateModel::FistaCdRestart,
        AlgorithmSpec::IfbsFixed { .. } | AlgorithmSpec::Gipsa { .. } => return None,
    };
    if !(est.l_e_hat.is_finite() && est.l_e_hat > 0.0) {
        return None;
    }
    predicted_local_rate(model, est.l_e_hat, l)
        .ok()
        .map(|p| p.q)
}

/// Linear-rate fit of the iterate-error tail of a trace.
pub fn fit_rate_from_rows(
    rows: &[TraceRow],
    identified_at: Option<usize>,
    predicted_q: Option<f64>,
) -> Option<RateEstimate> {
    let ident = identified_at?;
    let errors: Vec<f64> = rows.iter().map(|r| r.iterate_err).collect();
    // Iterate K sits at array index K - 2 (the first row holds iterate 2).
    let idx = ident.saturating_sub(2);
    let scale = errors.first().copied().unwrap_or(1.0);
    let window = select_rate_window(&errors, idx, scale)?;
    estimate_rate(&errors, window, predicted_q).ok()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TolCount {
    pub tol: f64,
    /// Steps to reach and keep the tolerance; absent means censored.
    pub iters: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub descriptor: String,
    pub label: String,
    pub schedule: String,
    pub restart: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub stop: StopReason,
    pub final_f_gap: f64,
    pub final_iterate_err: f64,
    pub iters_to_tol: Vec<TolCount>,
    pub identification_iteration: Option<usize>,
    pub rate: Option<RateEstimate>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub m: usize,
    pub n: usize,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nnz: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
}

impl From<&InstanceMeta> for InstanceInfo {
    fn from(m: &InstanceMeta) -> Self {
        Self {
            m: m.m,
            n: m.n,
            rho: m.rho,
            seed: m.seed,
            nnz: m.nnz,
            sigma2: m.sigma2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub f_star: f64,
    pub residual: f64,
    pub support_size: usize,
    pub support_refined: bool,
    pub low_accuracy: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub generator: String,
    pub instance: InstanceInfo,
    pub lipschitz: f64,
    pub reference: ReferenceInfo,
    pub structure: ActiveSetSummary,
    pub algorithms: Vec<AlgorithmSummary>,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub algorithms: Vec<AlgorithmSpec>,
    /// Tolerances reported as iteration counts in the summary.
    pub tols: Vec<f64>,
    pub max_iters: usize,
    /// Fixed-point residual at which runs stop.
    pub residual_tol: f64,
    /// Where to cache reference solutions; solved fresh when absent.
    pub cache_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: crate::bench::algorithms::parse_algorithm_list(
                "fbs,ifbs:0.4,ifbs:star,fista-cd,fista-cd-re",
            )
            .expect("default algorithm list parses"),
            tols: vec![1e-2, 1e-6],
            max_iters: 50_000,
            residual_tol: 1e-10,
            cache_dir: None,
        }
    }
}

/// Runs every configured variant on one instance and writes one trace CSV
/// per variant plus `summary.json` into `out_dir`.
pub fn run_experiment(
    inst: &LassoInstance,
    meta: &InstanceMeta,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExperimentSummary> {
    fs::create_dir_all(out_dir)?;
    let reference = match &cfg.cache_dir {
        Some(dir) => cached_reference_solution(inst, dir)?,
        None => high_accuracy_solve(inst)?,
    };
    let est = crate::diagnostics::estimate_active_set(inst, &reference.x_star, None)?;
    let l = inst.lipschitz();
    let rules = [
        StoppingRule::FixedPointResidual {
            tol: cfg.residual_tol,
        },
        StoppingRule::MaxIterations { max: cfg.max_iters },
    ];

    let mut algorithms = Vec::with_capacity(cfg.algorithms.len());
    for alg in &cfg.algorithms {
        let run = run_algorithm_on_instance(inst, &reference, &est, alg, &rules)?;
        let label = alg.label();
        write_trace_csv(&out_dir.join(format!("trace-{label}.csv")), &run.rows)?;
        let ident = identification_from_rows(&run.rows);
        let rate = fit_rate_from_rows(&run.rows, ident, predicted_q_for(alg, &est, l));
        let last = run.rows.last();
        algorithms.push(AlgorithmSummary {
            descriptor: alg.to_string(),
            label,
            schedule: run.schedule.to_string(),
            restart: run.restart,
            iterations: run.rows.len(),
            restarts: run.outcome.state.restarts,
            stop: run.outcome.stop.clone(),
            final_f_gap: last.map_or(0.0, |r| r.f_gap),
            final_iterate_err: last.map_or(0.0, |r| r.iterate_err),
            iters_to_tol: cfg
                .tols
                .iter()
                .map(|&tol| TolCount {
                    tol,
                    iters: iters_to_tol(&run.rows, reference.f_star, tol),
                })
                .collect(),
            identification_iteration: ident,
            rate,
        });
    }

    let summary = ExperimentSummary {
        generator: GENERATOR_NAME.to_string(),
        instance: InstanceInfo::from(meta),
        lipschitz: l,
        reference: ReferenceInfo {
            f_star: reference.f_star,
            residual: reference.residual,
            support_size: reference.support().len(),
            support_refined: reference.support_refined,
            low_accuracy: reference.low_accuracy,
        },
        structure: est.summary(),
        algorithms,
    };
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::instance::{generate_instance, GenSpec, InstanceMeta};

    fn row(k: usize, f_gap: f64) -> TraceRow {
        TraceRow {
            k,
            f_gap,
            iterate_err: f_gap.abs().sqrt(),
            increment_norm_sq: 1e-3 / k as f64,
            support_outside_e: 0,
            sign_mismatches_on_e: 0,
            lyapunov_energy: f_gap + 1.0,
            restarted: false,
        }
    }

    #[test]
    fn trace_csv_round_trip_is_exact() {
        let rows = vec![
            TraceRow {
                k: 1,
                f_gap: 0.1 + 0.2,
                iterate_err: 1.0 / 3.0,
                increment_norm_sq: 1e-300,
                support_outside_e: 7,
                sign_mismatches_on_e: 2,
                lyapunov_energy: -2.5000000000000004,
                restarted: false,
            },
            TraceRow {
                k: 2,
                f_gap: f64::MIN_POSITIVE,
                iterate_err: 9.999999999999999e-5,
                increment_norm_sq: 0.0,
                support_outside_e: 0,
                sign_mismatches_on_e: 0,
                lyapunov_energy: 1.7976931348623157e308,
                restarted: true,
            },
        ];
        let text = format_trace_csv(&rows);
        let back = parse_trace_csv(&text).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.f_gap.to_bits(), b.f_gap.to_bits());
            assert_eq!(a.iterate_err.to_bits(), b.iterate_err.to_bits());
            assert_eq!(a.increment_norm_sq.to_bits(), b.increment_norm_sq.to_bits());
            assert_eq!(a.lyapunov_energy.to_bits(), b.lyapunov_energy.to_bits());
            assert_eq!((a.k, a.restarted), (b.k, b.restarted));
        }
    }

    #[test]
    fn malformed_traces_are_refused() {
        assert!(parse_trace_csv("").is_err());
        assert!(parse_trace_csv("wrong,header\n").is_err());
        let text = format!("{TRACE_HEADER}\n1,2,3\n");
        assert!(parse_trace_csv(&text).is_err());
        let text = format!("{TRACE_HEADER}\n1,x,0,0,0,0,0,0\n");
        assert!(parse_trace_csv(&text).is_err());
        let text = format!("{TRACE_HEADER}\n1,0,0,0,0,0,0,2\n");
        assert!(parse_trace_csv(&text).is_err());
    }

    #[test]
    fn iters_to_tol_scans_from_the_end() {
        let rows: Vec<TraceRow> = [1.0, 0.5, 0.09, 0.11, 0.01, 0.005]
            .iter()
            .enumerate()
            .map(|(i, &g)| row(i + 1, g))
            .collect();
        // Gap dips below 0.1 at k = 3 but pops back above; the stable
        // crossing is k = 5.
        assert_eq!(iters_to_tol(&rows, 1.0, 0.1), Some(5));
        assert_eq!(iters_to_tol(&rows, 1.0, 0.3), Some(3));
        // Censored: never settles below.
        assert_eq!(iters_to_tol(&rows, 1.0, 1e-3), None);
        // Already below from the start.
        assert_eq!(iters_to_tol(&rows, 1.0, 2.0), Some(1));
        assert_eq!(iters_to_tol(&[], 1.0, 0.1), None);
    }

    #[test]
    fn small_experiment_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GenSpec {
            n: 40,
            m: 20,
            rho: 0.3,
            nnz: 5,
            sigma2: 0.04,
            seed: 31,
        };
        let gen = generate_instance(&spec).unwrap();
        let cfg = ExperimentConfig {
            algorithms: crate::bench::algorithms::parse_algorithm_list("fbs,ifbs:star,fista-cd-re")
                .unwrap(),
            tols: vec![1e-2, 1e-6],
            max_iters: 20_000,
            residual_tol: 1e-10,
            cache_dir: Some(dir.path().join("cache")),
        };
        let meta = InstanceMeta::from_gen_spec(&spec);
        let summary = run_experiment(&gen.instance, &meta, &cfg, &dir.path().join("out")).unwrap();
        assert_eq!(summary.algorithms.len(), 3);
        assert_eq!(summary.generator, crate::rng::GENERATOR_NAME);
        assert!(!summary.reference.low_accuracy);

        for alg in &summary.algorithms {
            let rows = read_trace_csv(
                &dir.path()
                    .join("out")
                    .join(format!("trace-{}.csv", alg.label)),
            )
            .unwrap();
            assert_eq!(rows.len(), alg.iterations);
            // Every variant converged on this small instance.
            let t6 = alg.iters_to_tol.iter().find(|t| t.tol == 1e-6).unwrap();
            assert!(t6.iters.is_some(), "{} censored at 1e-6", alg.descriptor);
            assert!(alg.identification_iteration.is_some(), "{}", alg.descriptor);
        }
        // The tuned variant beats plain forward-backward at the tight
        // tolerance on this instance.
        let pick = |d: &str| {
            summary
                .algorithms
                .iter()
                .find(|a| a.descriptor == d)
                .unwrap()
                .iters_to_tol
                .iter()
                .find(|t| t.tol == 1e-6)
                .unwrap()
                .iters
                .unwrap()
        };
        assert!(pick("ifbs:star") < pick("fbs"));

        // Summary JSON parses back.
        let text = fs::read_to_string(dir.path().join("out").join("summary.json")).unwrap();
        let parsed: ExperimentSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.algorithms.len(), 3);
        // The reference cache was populated and is reused.
        assert!(dir.path().join("cache").exists());
    }
}
