//! Repeated randomized trials: many generated instances, each solved by each
//! configured variant, reduced to iteration-count statistics per tolerance.
//!
//! Trials run in parallel but are seeded individually (base seed + index) and
//! reduced in index order, so the report is identical however many threads
//! participate.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::algorithms::AlgorithmSpec;
use crate::bench::experiment::{iters_to_tol, run_algorithm_on_instance};
use crate::bench::instance::{generate_instance, GenSpec};
use crate::diagnostics::estimate_active_set;
use crate::error::{Error, Result};
use crate::oracle::high_accuracy_solve;
use crate::rng::GENERATOR_NAME;
use crate::solver::StoppingRule;

#[derive(Clone, Debug)]
pub struct TrialsConfig {
    /// Base recipe; trial t uses seed `base.seed + t`.
    pub base: GenSpec,
    pub num_trials: usize,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Tolerances measured, in any order.
    pub tols: Vec<f64>,
    pub max_iters: usize,
}

impl TrialsConfig {
    fn check(&self) -> Result<()> {
        if self.num_trials == 0 {
            return Err(Error::InvalidParameter {
                name: "num_trials",
                value: 0.0,
                constraint: "at least one trial",
            });
        }
        if self.algorithms.is_empty() || self.tols.is_empty() {
            return Err(Error::InvalidParameter {
                name: "algorithms/tols",
                value: 0.0,
                constraint: "nonempty",
            });
        }
        if !self.tols.iter().all(|&t| t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tols",
                value: f64::NAN,
                constraint: "positive finite tolerances",
            });
        }
        Ok(())
    }

    /// Objective-gap tolerance the runs stop at: two decades beyond the
    /// tightest measured tolerance, so "stays below" verdicts are stable.
    fn stop_tol(&self) -> f64 {
        let min_tol = self.tols.iter().cloned().fold(f64::INFINITY, f64::min);
        min_tol * 1e-2
    }
}

/// One (algorithm, tolerance) measurement of one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub descriptor: String,
    pub tol: f64,
    pub iters: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub results: Vec<TrialResult>,
}

/// Aggregated iteration counts for one (algorithm, tolerance) cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialCell {
    pub descriptor: String,
    pub tol: f64,
    /// Mean over uncensored trials.
    pub mean: f64,
    /// Sample standard deviation over uncensored trials.
    pub std: f64,
    /// Trials that never settled below the tolerance.
    pub censored: usize,
    /// Uncensored trial count behind the mean.
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialsReport {
    pub generator: String,
    pub base: GenSpec,
    pub num_trials: usize,
    pub max_iters: usize,
    pub cells: Vec<TrialCell>,
    pub per_trial: Vec<TrialRecord>,
}

impl TrialsReport {
    pub fn cell(&self, descriptor: &str, tol: f64) -> Option<&TrialCell> {
        self.cells
            .iter()
            .find(|c| c.descriptor == descriptor && c.tol == tol)
    }
}

fn run_one_trial(cfg: &TrialsConfig, trial: usize) -> Result<TrialRecord> {
    let spec = GenSpec {
        seed: cfg.base.seed + trial as u64,
        ..cfg.base
    };
    let gen = generate_instance(&spec)?;
    let inst = &gen.instance;
    let reference = high_accuracy_solve(inst)?;
    if reference.low_accuracy {
        return Err(Error::StaleSolution {
            residual: reference.residual,
            threshold: crate::oracle::REFERENCE_RESIDUAL_FLOOR,
        });
    }
    let est = estimate_active_set(inst, &reference.x_star, None)?;
    let rules = [
        StoppingRule::RelativeObjectiveGap {
            f_star: reference.f_star,
            tol: cfg.stop_tol(),
        },
        StoppingRule::MaxIterations { max: cfg.max_iters },
    ];
    let mut results = Vec::with_capacity(cfg.algorithms.len() * cfg.tols.len());
    for alg in &cfg.algorithms {
        let run = run_algorithm_on_instance(inst, &reference, &est, alg, &rules)?;
        for &tol in &cfg.tols {
            results.push(TrialResult {
                descriptor: alg.to_string(),
                tol,
                iters: iters_to_tol(&run.rows, reference.f_star, tol),
            });
        }
    }
    Ok(TrialRecord {
        seed: spec.seed,
        results,
    })
}

/// Runs all trials (in parallel) and reduces them to per-cell statistics.
pub fn run_trials(cfg: &TrialsConfig) -> Result<TrialsReport> {
    cfg.check()?;
    let per_trial: Vec<TrialRecord> = (0..cfg.num_trials)
        .into_par_iter()
        .map(|t| run_one_trial(cfg, t))
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(cfg.algorithms.len() * cfg.tols.len());
    for alg in &cfg.algorithms {
        let descriptor = alg.to_string();
        for &tol in &cfg.tols {
            let counts: Vec<Option<usize>> = per_trial
                .iter()
                .map(|rec| {
                    rec.results
                        .iter()
                        .find(|r| r.descriptor == descriptor && r.tol == tol)
                        .and_then(|r| r.iters)
                })
                .collect();
            let observed: Vec<f64> = counts.iter().flatten().map(|&v| v as f64).collect();
            let censored = counts.len() - observed.len();
            let count = observed.len();
            let mean = if count > 0 {
                observed.iter().sum::<f64>() / count as f64
            } else {
                f64::NAN
            };
            let std = if count > 1 {
                let ss: f64 = observed.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            cells.push(TrialCell {
                descriptor: descriptor.clone(),
                tol,
                mean,
                std,
                censored,
                count,
            });
        }
    }
    Ok(TrialsReport {
        generator: GENERATOR_NAME.to_string(),
        base: cfg.base,
        num_trials: cfg.num_trials,
        max_iters: cfg.max_iters,
        cells,
        per_trial,
    })
}

pub const TRIALS_HEADER: &str = "descriptor,tol,mean,std,censored,count";

/// The per-cell table as CSV, one row per (algorithm, tolerance).
pub fn format_trials_csv(report: &TrialsReport) -> String {
    let mut out = String::new();
    out.push_str(TRIALS_HEADER);
    out.push('\n');
    for c in &report.cells {
        out.push_str(&format!(
            "{},{:e},{:.16e},{:.16e},{},{}\n",
            c.descriptor, c.tol, c.mean, c.std, c.censored, c.count
        ));
    }
    out
}

pub fn write_trials_outputs(report: &TrialsReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("trials.csv"), format_trials_csv(report))?;
    std::fs::write(
        out_dir.join("trials.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::algorithms::parse_algorithm_list;

    fn tiny_config() -> TrialsConfig {
        TrialsConfig {
            base: GenSpec {
                n: 60,
                m: 30,
                rho: 0.15,
                nnz: 8,
                sigma2: 1.0 / 30.0,
                seed: 1000,
            },
            num_trials: 5,
            algorithms: parse_algorithm_list("fbs,ifbs:star,fista-cd-re").unwrap(),
            tols: vec![1e-2, 1e-4],
            max_iters: 30_000,
        }
    }

    #[test]
    fn trials_aggregate_and_are_deterministic() {
        let cfg = tiny_config();
        let a = run_trials(&cfg).unwrap();
        assert_eq!(a.cells.len(), 6);
        assert_eq!(a.per_trial.len(), 5);
        for cell in &a.cells {
            assert_eq!(cell.censored, 0, "{} censored", cell.descriptor);
            assert_eq!(cell.count, 5);
            assert!(cell.mean.is_finite() && cell.mean >= 1.0);
            assert!(cell.std.is_finite() && cell.std >= 0.0);
        }
        // Tight tolerance costs at least as much as the loose one.
        for alg in &cfg.algorithms {
            let d = alg.to_string();
            let loose = a.cell(&d, 1e-2).unwrap().mean;
            let tight = a.cell(&d, 1e-4).unwrap().mean;
            assert!(tight >= loose, "{d}: {tight} < {loose}");
        }
        // Bitwise repeatability across thread schedules.
        let b = run_trials(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn trials_csv_has_one_row_per_cell() {
        let cfg = TrialsConfig {
            num_trials: 2,
            ..tiny_config()
        };
        let report = run_trials(&cfg).unwrap();
        let csv = format_trials_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRIALS_HEADER);
        assert_eq!(lines.len(), 1 + report.cells.len());
        let dir = tempfile::tempdir().unwrap();
        write_trials_outputs(&report, dir.path()).unwrap();
        assert!(dir.path().join("trials.csv").exists());
        let text = std::fs::read_to_string(dir.path().join("trials.json")).unwrap();
        let parsed: TrialsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.cells.len(), report.cells.len());
    }

    #[test]
    fn config_validation() {
        let ok = tiny_config();
        assert!(run_trials(&TrialsConfig {
            num_trials: 0,
            ..ok.clone()
        })
        .is_err());
        assert!(run_trials(&TrialsConfig {
            tols: vec![],
            ..ok.clone()
        })
        .is_err());
        assert!(run_trials(&TrialsConfig {
            tols: vec![-1.0],
            ..ok
        })
        .is_err());
    }
}
