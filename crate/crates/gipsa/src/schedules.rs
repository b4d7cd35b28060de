//! Parameter schedules (alpha_k, beta_k, lambda_k) and their validation.
//!
//! A schedule is admissible for the global convergence theorem when, for some
//! eps > 0, gamma in (0, 2), and beta_bar < 1, every k satisfies
//!
//!   0 <= alpha_k <= 1,
//!   0 <= beta_k <= beta_bar,
//!   lambda_k alpha_k <= beta_k / L,
//!   lambda_k L <= 2 - gamma,
//!   2 - lambda_k L (1 - alpha_k) - beta_k - beta_{k+1} >= eps,
//!
//! with lambda_k positive and nondecreasing. [`validate_gipsa`] checks these
//! over a horizon and reports the worst margin per condition. The fista-cd
//! rule drives its momentum to 1, so it can never satisfy the theorem; it is
//! covered by a separate summability argument when a > 2 and lambda L <= 1,
//! and the report says so explicitly rather than just failing it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_VALIDATION_HORIZON: usize = 10_000;

/// Rounding slack for conditions that hold with equality by design
/// (e.g. lambda alpha = beta / L exactly for fista-cd at lambda = 1/L).
const CLOSED_CONDITION_SLACK: f64 = 1e-9;

/// Momentum this close to 1 is treated as 1.
const BETA_SUP_GUARD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleSpec {
    /// Plain forward-backward: alpha = beta = 0.
    Fbs { lambda: f64 },
    /// Inertial forward-backward with equal, constant momentum.
    FixedIfbs { alpha: f64, lambda: f64 },
    /// Fully general fixed parameters (alpha and beta may differ).
    FixedGipsa { alpha: f64, beta: f64, lambda: f64 },
    /// alpha_k = beta_k = (k - 1) / (k + a), requires a > 2.
    FistaCd { a: f64, lambda: f64 },
    /// Constant momentum tuned to a curvature estimate mu:
    /// alpha = beta = (1 - sqrt(mu lambda)) / (1 + sqrt(mu lambda)).
    ConstantMomentum { mu: f64, lambda: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

fn require(cond: bool, name: &'static str, value: f64, constraint: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            constraint,
        })
    }
}

impl ScheduleSpec {
    pub fn fbs(lambda: f64) -> Result<Self> {
        let s = Self::Fbs { lambda };
        s.check()?;
        Ok(s)
    }

    pub fn fixed_ifbs(alpha: f64, lambda: f64) -> Result<Self> {
        let s = Self::FixedIfbs { alpha, lambda };
        s.check()?;
        Ok(s)
    }

    pub fn fixed_gipsa(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        let s = Self::FixedGipsa {
            alpha,
            beta,
            lambda,
        };
        s.check()?;
        Ok(s)
    }

    pub fn fista_cd(a: f64, lambda: f64) -> Result<Self> {
        let s = Self::FistaCd { a, lambda };
        s.check()?;
        Ok(s)
    }

    pub fn constant_momentum(mu: f64, lambda: f64) -> Result<Self> {
        let s = Self::ConstantMomentum { mu, lambda };
        s.check()?;
        Ok(s)
    }

    /// Structural validity of the payload (not the convergence conditions).
    pub fn check(&self) -> Result<()> {
        let lambda = self.lambda();
        require(
            lambda > 0.0 && lambda.is_finite(),
            "lambda",
            lambda,
            "lambda > 0",
        )?;
        match *self {
            Self::Fbs { .. } => Ok(()),
            Self::FixedIfbs { alpha, .. } => require(
                alpha.is_finite() && alpha >= 0.0,
                "alpha",
                alpha,
                "alpha >= 0",
            ),
            Self::FixedGipsa { alpha, beta, .. } => {
                require(
                    alpha.is_finite() && alpha >= 0.0,
                    "alpha",
                    alpha,
                    "alpha >= 0",
                )?;
                require(beta.is_finite() && beta >= 0.0, "beta", beta, "beta >= 0")
            }
            Self::FistaCd { a, .. } => require(a > 2.0, "a", a, "a > 2"),
            Self::ConstantMomentum { mu, lambda } => {
                require(mu > 0.0 && mu.is_finite(), "mu", mu, "mu > 0")?;
                require(mu * lambda <= 1.0, "mu", mu, "mu * lambda <= 1")
            }
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Self::Fbs { lambda }
            | Self::FixedIfbs { lambda, .. }
            | Self::FixedGipsa { lambda, .. }
            | Self::FistaCd { lambda, .. }
            | Self::ConstantMomentum { lambda, .. } => lambda,
        }
    }

    pub fn uses_restart_compatible_rule(&self) -> bool {
        matches!(self, Self::FistaCd { .. })
    }
}

impl std::fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Self::Fbs { lambda } => write!(f, "fbs(lambda={lambda})"),
            Self::FixedIfbs { alpha, lambda } => write!(f, "ifbs(alpha={alpha}, lambda={lambda})"),
            Self::FixedGipsa {
                alpha,
                beta,
                lambda,
            } => write!(f, "gipsa(alpha={alpha}, beta={beta}, lambda={lambda})"),
            Self::FistaCd { a, lambda } => write!(f, "fista-cd(a={a}, lambda={lambda})"),
            Self::ConstantMomentum { mu, lambda } => {
                write!(f, "constant-momentum(mu={mu}, lambda={lambda})")
            }
        }
    }
}

/// Parameters for step k (1-based).
pub fn schedule_at(spec: &ScheduleSpec, k: usize) -> Result<ScheduleParams> {
    spec.check()?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            constraint: "k >= 1",
        });
    }
    let params = match *spec {
        ScheduleSpec::Fbs { lambda } => ScheduleParams {
            alpha: 0.0,
            beta: 0.0,
            lambda,
        },
        ScheduleSpec::FixedIfbs { alpha, lambda } => ScheduleParams {
            alpha,
            beta: alpha,
            lambda,
        },
        ScheduleSpec::FixedGipsa {
            alpha,
            beta,
            lambda,
        } => ScheduleParams {
            alpha,
            beta,
            lambda,
        },
        ScheduleSpec::FistaCd { a, lambda } => {
            let m = (k as f64 - 1.0) / (k as f64 + a);
            ScheduleParams {
                alpha: m,
                beta: m,
                lambda,
            }
        }
        ScheduleSpec::ConstantMomentum { mu, lambda } => {
            let alpha = optimal_inertia(mu, lambda)?;
            ScheduleParams {
                alpha,
                beta: alpha,
                lambda,
            }
        }
    };
    Ok(params)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FistaCdLemmaNote {
    pub covered: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schedule: String,
    pub lipschitz: f64,
    pub horizon: usize,
    pub satisfies_global_theorem: bool,
    /// Worst value of 2 - lambda L (1 - alpha_k) - beta_k - beta_{k+1}.
    pub epsilon_margin: f64,
    /// 2 - max_k lambda_k L.
    pub gamma_margin: f64,
    pub conditions: Vec<ConditionCheck>,
    /// Present only for fista-cd schedules, which fall outside the theorem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fista_cd_lemma: Option<FistaCdLemmaNote>,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("schedule: {}\n", self.schedule));
        out.push_str(&format!(
            "global convergence theorem: {}\n",
            if self.satisfies_global_theorem {
                "satisfied"
            } else {
                "NOT satisfied"
            }
        ));
        for c in &self.conditions {
            out.push_str(&format!(
                "  [{}] {:<28} margin {:+.6e}{}\n",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                c.margin,
                c.note
                    .as_deref()
                    .map(|n| format!("  ({n})"))
                    .unwrap_or_default()
            ));
        }
        if let Some(lemma) = &self.fista_cd_lemma {
            out.push_str(&format!(
                "fista-cd summability lemma: {}\n",
                if lemma.covered {
                    format!("covered ({})", lemma.detail)
                } else {
                    format!("NOT covered ({})", lemma.detail)
                }
            ));
        }
        out
    }
}

/// Checks the global convergence conditions for `spec` over `horizon` steps
/// and reports per-condition worst margins.
///
/// Fixed schedules make the horizon sweep exact. For fista-cd the momentum
/// supremum and the eps infimum are limits in k, so those two margins use the
/// analytic limit instead of the horizon minimum.
pub fn validate_gipsa(
    spec: &ScheduleSpec,
    lipschitz: f64,
    horizon: usize,
) -> Result<ValidationReport> {
    spec.check()?;
    require(
        lipschitz > 0.0 && lipschitz.is_finite(),
        "lipschitz",
        lipschitz,
        "L > 0",
    )?;
    require(horizon >= 1, "horizon", horizon as f64, "horizon >= 1")?;

    let l = lipschitz;
    let is_fista_cd = matches!(spec, ScheduleSpec::FistaCd { .. });

    let mut alpha_low = f64::INFINITY;
    let mut alpha_high = f64::INFINITY; // min of 1 - alpha_k
    let mut beta_low = f64::INFINITY;
    let mut beta_sup_margin = f64::INFINITY; // min of 1 - beta_k
    let mut coupling = f64::INFINITY; // min of beta_k - lambda_k alpha_k L
    let mut gamma_margin = f64::INFINITY; // min of 2 - lambda_k L
    let mut epsilon_margin = f64::INFINITY;
    let mut lambda_step = f64::INFINITY; // min of lambda_{k+1} - lambda_k
    let mut lambda_positive = true;

    let mut cur = schedule_at(spec, 1)?;
    for k in 1..=horizon {
        let next = schedule_at(spec, k + 1)?;
        alpha_low = alpha_low.min(cur.alpha);
        alpha_high = alpha_high.min(1.0 - cur.alpha);
        beta_low = beta_low.min(cur.beta);
        beta_sup_margin = beta_sup_margin.min(1.0 - cur.beta);
        coupling = coupling.min(cur.beta - cur.lambda * cur.alpha * l);
        gamma_margin = gamma_margin.min(2.0 - cur.lambda * l);
        epsilon_margin =
            epsilon_margin.min(2.0 - cur.lambda * l * (1.0 - cur.alpha) - cur.beta - next.beta);
        lambda_step = lambda_step.min(next.lambda - cur.lambda);
        lambda_positive &= cur.lambda > 0.0;
        cur = next;
    }

    let mut analytic_note = None;
    if is_fista_cd {
        // sup beta_k = 1 and inf eps_k = 0 in the limit k -> infinity.
        beta_sup_margin = beta_sup_margin.min(0.0);
        epsilon_margin = epsilon_margin.min(0.0);
        analytic_note = Some("limit as k grows, not attained on the horizon".to_string());
    }

    let closed = |margin: f64| margin >= -CLOSED_CONDITION_SLACK;
    let conditions = vec![
        ConditionCheck {
            name: "lambda_positive_nondecreasing".into(),
            pass: lambda_positive && closed(lambda_step),
            margin: lambda_step,
            note: None,
        },
        ConditionCheck {
            name: "alpha_in_unit_interval".into(),
            pass: closed(alpha_low) && closed(alpha_high),
            margin: alpha_low.min(alpha_high),
            note: None,
        },
        ConditionCheck {
            name: "beta_nonnegative".into(),
            pass: closed(beta_low),
            margin: beta_low,
            note: None,
        },
        ConditionCheck {
            name: "beta_sup_below_one".into(),
            pass: beta_sup_margin > BETA_SUP_GUARD,
            margin: beta_sup_margin,
            note: analytic_note.clone(),
        },
        ConditionCheck {
            name: "stepsize_inertia_coupling".into(),
            pass: closed(coupling),
            margin: coupling,
            note: Some("beta_k - lambda_k alpha_k L".into()),
        },
        ConditionCheck {
            name: "stepsize_below_two_over_l".into(),
            pass: gamma_margin > 0.0,
            margin: gamma_margin,
            note: None,
        },
        ConditionCheck {
            name: "epsilon_condition".into(),
            pass: epsilon_margin > 0.0,
            margin: epsilon_margin,
            note: analytic_note,
        },
    ];

    let satisfies = conditions.iter().all(|c| c.pass);

    let fista_cd_lemma = match *spec {
        ScheduleSpec::FistaCd { a, lambda } => {
            let covered = a > 2.0 && lambda * l <= 1.0 + CLOSED_CONDITION_SLACK;
            Some(FistaCdLemmaNote {
                covered,
                detail: if covered {
                    format!("a = {a} > 2 and lambda L = {:.6} <= 1", lambda * l)
                } else {
                    format!(
                        "requires a > 2 and lambda L <= 1, got a = {a}, lambda L = {:.6}",
                        lambda * l
                    )
                },
            })
        }
        _ => None,
    };

    Ok(ValidationReport {
        schedule: spec.to_string(),
        lipschitz: l,
        horizon,
        satisfies_global_theorem: satisfies,
        epsilon_margin,
        gamma_margin,
        conditions,
        fista_cd_lemma,
    })
}

/// Largest alpha a fixed schedule can pair with a given beta while keeping
/// the widest step-size range: alpha*(beta) = beta / (2 - beta).
pub fn alpha_star_of_beta(beta: f64) -> Result<f64> {
    require(
        (0.0..1.0).contains(&beta) && beta.is_finite(),
        "beta",
        beta,
        "0 <= beta < 1",
    )?;
    Ok(beta / (2.0 - beta))
}

/// Supremum of lambda L for fixed (alpha, beta):
/// 2 (1 - beta) / (1 - alpha) when alpha <= alpha*(beta), else beta / alpha.
/// Step sizes strictly below the bound validate with positive margins.
pub fn max_stepsize_fixed(alpha: f64, beta: f64) -> Result<f64> {
    require(
        (0.0..=1.0).contains(&alpha) && alpha.is_finite(),
        "alpha",
        alpha,
        "0 <= alpha <= 1",
    )?;
    let astar = alpha_star_of_beta(beta)?;
    if alpha <= astar {
        Ok(2.0 * (1.0 - beta) / (1.0 - alpha))
    } else {
        // alpha > alpha*(beta) >= 0 forces alpha > 0 here.
        Ok(beta / alpha)
    }
}

/// Momentum that optimizes the local linear rate for curvature mu at step
/// size lambda: (1 - sqrt(mu lambda)) / (1 + sqrt(mu lambda)).
pub fn optimal_inertia(mu: f64, lambda: f64) -> Result<f64> {
    require(mu > 0.0 && mu.is_finite(), "mu", mu, "mu > 0")?;
    require(
        lambda > 0.0 && lambda.is_finite(),
        "lambda",
        lambda,
        "lambda > 0",
    )?;
    require(
        mu * lambda <= 1.0,
        "mu*lambda",
        mu * lambda,
        "mu * lambda <= 1",
    )?;
    let s = (mu * lambda).sqrt();
    Ok((1.0 - s) / (1.0 + s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateModel {
    ConstantMomentum,
    Fbs,
    FistaCd,
    FistaCdRestart,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RatePrediction {
    /// Per-iteration factor for the iterate error; the objective gap
    /// contracts like q^2.
    pub q: f64,
    /// True when the model is only asymptotically exact.
    pub approximation: bool,
}

/// Predicted local per-iteration contraction factor once the active manifold
/// is identified, for curvature mu on that manifold and global constant l.
pub fn predicted_local_rate(model: RateModel, mu: f64, l: f64) -> Result<RatePrediction> {
    require(mu > 0.0 && mu.is_finite(), "mu", mu, "mu > 0")?;
    require(l > 0.0 && l.is_finite(), "l", l, "L > 0")?;
    require(mu <= l, "mu", mu, "mu <= L")?;
    let ratio = mu / l;
    let pred = match model {
        RateModel::ConstantMomentum | RateModel::FistaCdRestart => RatePrediction {
            q: (1.0 - ratio.sqrt()).sqrt(),
            approximation: false,
        },
        RateModel::Fbs => RatePrediction {
            q: (1.0 - ratio).sqrt(),
            approximation: false,
        },
        RateModel::FistaCd => RatePrediction {
            q: (1.0 - ratio).sqrt(),
            approximation: true,
        },
    };
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        let s = ScheduleSpec::fista_cd(2.1, 0.5).unwrap();
        let p1 = schedule_at(&s, 1).unwrap();
        assert_eq!(p1.alpha, 0.0);
        assert_eq!(p1.beta, 0.0);
        let p2 = schedule_at(&s, 2).unwrap();
        assert!((p2.alpha - 1.0 / 4.1).abs() < 1e-15);
        let p1000 = schedule_at(&s, 1000).unwrap();
        assert!((p1000.alpha - 999.0 / 1002.1).abs() < 1e-15);

        let f = ScheduleSpec::fbs(0.25).unwrap();
        let p = schedule_at(&f, 7).unwrap();
        assert_eq!((p.alpha, p.beta, p.lambda), (0.0, 0.0, 0.25));
    }

    #[test]
    fn schedule_rejects_bad_payloads() {
        assert!(ScheduleSpec::fista_cd(2.0, 0.5).is_err());
        assert!(ScheduleSpec::fbs(0.0).is_err());
        assert!(ScheduleSpec::fixed_ifbs(-0.1, 0.5).is_err());
        assert!(ScheduleSpec::constant_momentum(0.0, 1.0).is_err());
        let s = ScheduleSpec::fbs(1.0).unwrap();
        assert!(schedule_at(&s, 0).is_err());
    }

    #[test]
    fn alpha_star_examples() {
        assert!((alpha_star_of_beta(0.6).unwrap() - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(alpha_star_of_beta(0.0).unwrap(), 0.0);
        assert!(alpha_star_of_beta(1.0).is_err());
        assert!(alpha_star_of_beta(-0.2).is_err());
    }

    #[test]
    fn max_stepsize_examples() {
        // At alpha = alpha*(beta) the bound is 2 - beta.
        let astar = alpha_star_of_beta(0.6).unwrap();
        assert!((max_stepsize_fixed(astar, 0.6).unwrap() - 1.4).abs() < 1e-12);
        // Above alpha* the binding constraint is beta / alpha.
        assert!((max_stepsize_fixed(0.9, 0.45).unwrap() - 0.5).abs() < 1e-15);
        // Plain forward-backward keeps the full range lambda L < 2.
        assert!((max_stepsize_fixed(0.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        // beta = 0 with alpha > 0 leaves no admissible step size.
        assert_eq!(max_stepsize_fixed(0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn optimal_inertia_examples() {
        assert!((optimal_inertia(0.25, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((optimal_inertia(1.0, 1.0).unwrap()).abs() < 1e-15);
        assert!(optimal_inertia(2.0, 1.0).is_err());
        assert!(optimal_inertia(-1.0, 1.0).is_err());
    }

    #[test]
    fn validate_ifbs_half() {
        let l = 2.0;
        let s = ScheduleSpec::fixed_ifbs(0.5, 1.0 / l).unwrap();
        let r = validate_gipsa(&s, l, 1000).unwrap();
        assert!(r.satisfies_global_theorem, "{}", r.summary());
        assert!((r.epsilon_margin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn validate_fbs_wide_step() {
        let l = 3.0;
        let s = ScheduleSpec::fbs(1.9 / l).unwrap();
        let r = validate_gipsa(&s, l, 100).unwrap();
        assert!(r.satisfies_global_theorem, "{}", r.summary());
        assert!((r.gamma_margin - 0.1).abs() < 1e-12);
        assert!((r.epsilon_margin - 0.1).abs() < 1e-12);
    }

    #[test]
    fn validate_gipsa_feasible_and_infeasible_alpha() {
        let l = 4.0;
        // alpha = 3/7 = alpha*(0.6) admits lambda L = 1.39.
        let good = ScheduleSpec::fixed_gipsa(3.0 / 7.0, 0.6, 1.39 / l).unwrap();
        let r = validate_gipsa(&good, l, 100).unwrap();
        assert!(r.satisfies_global_theorem, "{}", r.summary());
        assert!((r.epsilon_margin - (0.8 - 1.39 * 4.0 / 7.0)).abs() < 1e-9);
        assert!(r.epsilon_margin > 0.005 && r.epsilon_margin < 0.006);

        // Rounding alpha down to 0.42 flips the epsilon condition negative.
        let bad = ScheduleSpec::fixed_gipsa(0.42, 0.6, 1.39 / l).unwrap();
        let r = validate_gipsa(&bad, l, 100).unwrap();
        assert!(!r.satisfies_global_theorem);
        assert!((r.epsilon_margin - (0.8 - 1.39 * 0.58)).abs() < 1e-9);
        let eps = r
            .conditions
            .iter()
            .find(|c| c.name == "epsilon_condition")
            .unwrap();
        assert!(!eps.pass);
    }

    #[test]
    fn validate_fista_cd_reports_lemma() {
        let l = 5.0;
        let s = ScheduleSpec::fista_cd(2.1, 1.0 / l).unwrap();
        let r = validate_gipsa(&s, l, 1000).unwrap();
        assert!(!r.satisfies_global_theorem);
        let lemma = r.fista_cd_lemma.as_ref().unwrap();
        assert!(lemma.covered);
        let sup = r
            .conditions
            .iter()
            .find(|c| c.name == "beta_sup_below_one")
            .unwrap();
        assert!(!sup.pass);
        assert_eq!(sup.margin, 0.0);

        // Too large a step loses the lemma as well.
        let wide = ScheduleSpec::fista_cd(2.1, 1.5 / l).unwrap();
        let r = validate_gipsa(&wide, l, 1000).unwrap();
        assert!(!r.fista_cd_lemma.as_ref().unwrap().covered);
    }

    #[test]
    fn validate_rejects_momentum_at_one() {
        let l = 1.0;
        let s = ScheduleSpec::FixedIfbs {
            alpha: 1.0 - 1e-13,
            lambda: 0.9,
        };
        let r = validate_gipsa(&s, l, 10).unwrap();
        let sup = r
            .conditions
            .iter()
            .find(|c| c.name == "beta_sup_below_one")
            .unwrap();
        assert!(!sup.pass);
        assert!(!r.satisfies_global_theorem);
    }

    #[test]
    fn validate_ifbs_095_passes() {
        let l = 2.5;
        let s = ScheduleSpec::fixed_ifbs(0.95, 1.0 / l).unwrap();
        let r = validate_gipsa(&s, l, 100).unwrap();
        assert!(r.satisfies_global_theorem, "{}", r.summary());
        assert!((r.epsilon_margin - 0.05).abs() < 1e-9);
    }

    #[test]
    fn constant_momentum_schedule_validates() {
        let l = 6.0;
        let s = ScheduleSpec::constant_momentum(0.3, 1.0 / l).unwrap();
        let r = validate_gipsa(&s, l, 100).unwrap();
        assert!(r.satisfies_global_theorem, "{}", r.summary());
    }

    #[test]
    fn report_serializes_to_json() {
        let l = 2.0;
        let s = ScheduleSpec::fista_cd(3.0, 0.5).unwrap();
        let r = validate_gipsa(&s, l, 50).unwrap();
        let json = serde_json::to_string_pretty(&r).unwrap();
        let back: ValidationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.satisfies_global_theorem, r.satisfies_global_theorem);
        assert_eq!(back.conditions.len(), r.conditions.len());
        assert!(json.contains("beta_sup_below_one"));
    }

    #[test]
    fn rate_predictions() {
        let p = predicted_local_rate(RateModel::ConstantMomentum, 0.25, 1.0).unwrap();
        assert!((p.q - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(!p.approximation);

        let p = predicted_local_rate(RateModel::Fbs, 0.25, 1.0).unwrap();
        assert!((p.q - 0.75f64.sqrt()).abs() < 1e-15);

        let p = predicted_local_rate(RateModel::FistaCd, 0.25, 1.0).unwrap();
        assert!(p.approximation);

        let p = predicted_local_rate(RateModel::FistaCdRestart, 0.09, 1.0).unwrap();
        assert!((p.q - 0.7f64.sqrt()).abs() < 1e-15);

        assert!(predicted_local_rate(RateModel::Fbs, 2.0, 1.0).is_err());
        assert!(predicted_local_rate(RateModel::Fbs, 0.0, 1.0).is_err());
    }

    #[test]
    fn schedule_spec_json_round_trip() {
        let specs = [
            ScheduleSpec::fbs(0.5).unwrap(),
            ScheduleSpec::fixed_ifbs(0.4, 0.2).unwrap(),
            ScheduleSpec::fixed_gipsa(0.42, 0.6, 0.3).unwrap(),
            ScheduleSpec::fista_cd(2.1, 0.1).unwrap(),
            ScheduleSpec::constant_momentum(0.5, 1.0).unwrap(),
        ];
        for s in &specs {
            let json = serde_json::to_string(s).unwrap();
            let back: ScheduleSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(&back, s);
        }
    }
}
