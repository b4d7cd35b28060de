//! Algorithm descriptors: the compact strings the CLI and benchmark configs
//! use to name a solver variant, and their resolution into runnable
//! schedules.
//!
//! Grammar, with `@s` an optional trailing step factor lambda * L (default 1):
//!
//! ```text
//! fbs[@s]                  plain forward-backward
//! ifbs:<alpha>[@s]         fixed inertia alpha = beta
//! ifbs:star[@s]            inertia tuned to the reduced curvature at x*
//! gipsa:<alpha>:<beta>[@s] independent inertia and extrapolation
//! fista-cd[:<a>][@s]       growing momentum (k-1)/(k+a), default a = 2.1
//! fista-cd-re[:<a>][@s]    the same rule with objective restarts
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diagnostics::ActiveSetEstimate;
use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, LassoInstance};
use crate::schedules::{optimal_inertia, ScheduleSpec};

pub const DEFAULT_MOMENTUM_OFFSET: f64 = 2.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Fbs {
        lf: f64,
    },
    IfbsFixed {
        alpha: f64,
        lf: f64,
    },
    /// Inertia picked as (1 - sqrt(mu lambda)) / (1 + sqrt(mu lambda)) with
    /// mu the effective reduced curvature, so resolution needs structure.
    IfbsStar {
        lf: f64,
    },
    Gipsa {
        alpha: f64,
        beta: f64,
        lf: f64,
    },
    FistaCd {
        a: f64,
        lf: f64,
    },
    FistaCdRestart {
        a: f64,
        lf: f64,
    },
}

impl AlgorithmSpec {
    /// Whether resolving this variant needs an active-set estimate.
    pub fn requires_structure(&self) -> bool {
        matches!(self, Self::IfbsStar { .. })
    }

    pub fn uses_restart(&self) -> bool {
        matches!(self, Self::FistaCdRestart { .. })
    }

    fn lf(&self) -> f64 {
        match self {
            Self::Fbs { lf }
            | Self::IfbsFixed { lf, .. }
            | Self::IfbsStar { lf }
            | Self::Gipsa { lf, .. }
            | Self::FistaCd { lf, .. }
            | Self::FistaCdRestart { lf, .. } => *lf,
        }
    }

    /// Filename-safe tag, unique per descriptor.
    pub fn label(&self) -> String {
        let mut base = match self {
            Self::Fbs { .. } => "fbs".to_string(),
            Self::IfbsFixed { alpha, .. } => format!("ifbs-{alpha}"),
            Self::IfbsStar { .. } => "ifbs-star".to_string(),
            Self::Gipsa { alpha, beta, .. } => format!("gipsa-{alpha}-{beta}"),
            Self::FistaCd { a, .. } => {
                if *a == DEFAULT_MOMENTUM_OFFSET {
                    "fista-cd".to_string()
                } else {
                    format!("fista-cd-{a}")
                }
            }
            Self::FistaCdRestart { a, .. } => {
                if *a == DEFAULT_MOMENTUM_OFFSET {
                    "fista-cd-re".to_string()
                } else {
                    format!("fista-cd-re-{a}")
                }
            }
        };
        if self.lf() != 1.0 {
            base.push_str(&format!("-s{}", self.lf()));
        }
        base.replace('.', "p")
    }

    /// Turns the descriptor into a concrete schedule for one instance, plus
    /// whether the run should use restarts. `ifbs:star` draws its inertia
    /// from `est` and refuses to resolve without one.
    pub fn resolve(
        &self,
        inst: &LassoInstance,
        est: Option<&ActiveSetEstimate>,
    ) -> Result<(ScheduleSpec, bool)> {
        self.resolve_with_l(inst.lipschitz(), est)
    }

    /// [`AlgorithmSpec::resolve`] given only the gradient Lipschitz constant.
    pub fn resolve_with_l(
        &self,
        l: f64,
        est: Option<&ActiveSetEstimate>,
    ) -> Result<(ScheduleSpec, bool)> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lipschitz",
                value: l,
                constraint: "positive finite",
            });
        }
        let lambda = self.lf() / l;
        match self {
            Self::Fbs { .. } => Ok((ScheduleSpec::fbs(lambda)?, false)),
            Self::IfbsFixed { alpha, .. } => Ok((ScheduleSpec::fixed_ifbs(*alpha, lambda)?, false)),
            Self::IfbsStar { .. } => {
                let est = est.ok_or(Error::InvalidParameter {
                    name: "est",
                    value: f64::NAN,
                    constraint: "ifbs:star needs an active-set estimate",
                })?;
                let mu = est.l_e_hat;
                if !(mu.is_finite() && mu > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "l_e_hat",
                        value: mu,
                        constraint: "positive finite reduced curvature",
                    });
                }
                let alpha = optimal_inertia(mu, lambda)?;
                Ok((ScheduleSpec::fixed_ifbs(alpha, lambda)?, false))
            }
            Self::Gipsa { alpha, beta, .. } => {
                Ok((ScheduleSpec::fixed_gipsa(*alpha, *beta, lambda)?, false))
            }
            Self::FistaCd { a, .. } => Ok((ScheduleSpec::fista_cd(*a, lambda)?, false)),
            Self::FistaCdRestart { a, .. } => Ok((ScheduleSpec::fista_cd(*a, lambda)?, true)),
        }
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fbs { .. } => write!(f, "fbs")?,
            Self::IfbsFixed { alpha, .. } => write!(f, "ifbs:{alpha}")?,
            Self::IfbsStar { .. } => write!(f, "ifbs:star")?,
            Self::Gipsa { alpha, beta, .. } => write!(f, "gipsa:{alpha}:{beta}")?,
            Self::FistaCd { a, .. } => {
                if *a == DEFAULT_MOMENTUM_OFFSET {
                    write!(f, "fista-cd")?;
                } else {
                    write!(f, "fista-cd:{a}")?;
                }
            }
            Self::FistaCdRestart { a, .. } => {
                if *a == DEFAULT_MOMENTUM_OFFSET {
                    write!(f, "fista-cd-re")?;
                } else {
                    write!(f, "fista-cd-re:{a}")?;
                }
            }
        }
        if self.lf() != 1.0 {
            write!(f, "@{}", self.lf())?;
        }
        Ok(())
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("cannot parse {what} from '{s}'")))
}

/// Parses one descriptor; see the module grammar.
pub fn parse_algorithm(descriptor: &str) -> Result<AlgorithmSpec> {
    let descriptor = descriptor.trim();
    let (head, lf) = match descriptor.split_once('@') {
        Some((h, s)) => {
            let lf = parse_f64(s, "step factor")?;
            if !(lf > 0.0 && lf.is_finite()) {
                return Err(Error::Format(format!(
                    "step factor must be positive, got '{s}'"
                )));
            }
            (h, lf)
        }
        None => (descriptor, 1.0),
    };
    let parts: Vec<&str> = head.split(':').collect();
    let spec = match parts.as_slice() {
        ["fbs"] => AlgorithmSpec::Fbs { lf },
        ["ifbs", "star"] => AlgorithmSpec::IfbsStar { lf },
        ["ifbs", alpha] => AlgorithmSpec::IfbsFixed {
            alpha: parse_f64(alpha, "inertia")?,
            lf,
        },
        ["gipsa", alpha, beta] => AlgorithmSpec::Gipsa {
            alpha: parse_f64(alpha, "inertia")?,
            beta: parse_f64(beta, "extrapolation")?,
            lf,
        },
        ["fista-cd"] => AlgorithmSpec::FistaCd {
            a: DEFAULT_MOMENTUM_OFFSET,
            lf,
        },
        ["fista-cd", a] => AlgorithmSpec::FistaCd {
            a: parse_f64(a, "momentum offset")?,
            lf,
        },
        ["fista-cd-re"] => AlgorithmSpec::FistaCdRestart {
            a: DEFAULT_MOMENTUM_OFFSET,
            lf,
        },
        ["fista-cd-re", a] => AlgorithmSpec::FistaCdRestart {
            a: parse_f64(a, "momentum offset")?,
            lf,
        },
        _ => {
            return Err(Error::Format(format!(
                "unrecognized algorithm descriptor '{descriptor}'"
            )))
        }
    };
    Ok(spec)
}

/// Parses a comma-separated descriptor list, ignoring empty items.
pub fn parse_algorithm_list(list: &str) -> Result<Vec<AlgorithmSpec>> {
    let specs: Vec<AlgorithmSpec> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_algorithm)
        .collect::<Result<_>>()?;
    if specs.is_empty() {
        return Err(Error::Format("empty algorithm list".into()));
    }
    Ok(specs)
}
