//! Runs every applicable certificate check on a finished run.

use bundle_accel::diagnostics::{
    check_ahpe_condition, check_coefficients, check_inner_bound, check_model_minorant,
    check_monotone, check_potential, check_rate_bound, CertificateReport,
};
use bundle_accel::objectives::{ObjectiveOracle, Optimum};
use bundle_accel::solvers::{RunRecord, SolverKind};
use bundle_accel::vecops::dist_sq;
use bundle_accel::Error;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped,
}

impl CheckStatus {
    pub fn label(self) -> &'static str {
        match self {
            CheckStatus::Passed => "pass",
            CheckStatus::Failed => "FAIL",
            CheckStatus::Skipped => "skip",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// `None` when nothing was checked or the value is not finite.
    #[serde(default)]
    pub worst_violation: Option<f64>,
    #[serde(default)]
    pub slack: Option<f64>,
    #[serde(default)]
    pub checked: usize,
    #[serde(default)]
    pub first_failure: Option<usize>,
}

impl CheckOutcome {
    pub fn from_report(report: CertificateReport) -> Self {
        CheckOutcome {
            name: report.check_name,
            status: if report.passed {
                CheckStatus::Passed
            } else {
                CheckStatus::Failed
            },
            note: None,
            worst_violation: report
                .worst_violation
                .is_finite()
                .then_some(report.worst_violation),
            slack: Some(report.slack),
            checked: report.checked,
            first_failure: report.first_failure,
        }
    }

    pub fn skipped(name: &str, note: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.to_string(),
            status: CheckStatus::Skipped,
            note: Some(note.into()),
            worst_violation: None,
            slack: None,
            checked: 0,
            first_failure: None,
        }
    }

    pub fn failed(name: &str, note: impl Into<String>) -> Self {
        CheckOutcome {
            status: CheckStatus::Failed,
            ..Self::skipped(name, note)
        }
    }
}

fn outcome(name: &str, result: bundle_accel::Result<CertificateReport>) -> CheckOutcome {
    match result {
        Ok(report) => CheckOutcome::from_report(report),
        Err(Error::NotApplicable(why)) => CheckOutcome::skipped(name, why),
        Err(e) => CheckOutcome::failed(name, e.to_string()),
    }
}

/// Certificate checks for `run`. Bundle certificates require `ρ ≥ M` and are
/// skipped otherwise; the accelerated gradient method is checked with
/// `ρ = M`. `samples` points per recorded model are used for the minorant
/// check.
pub fn certify<O: ObjectiveOracle + ?Sized>(
    run: &RunRecord,
    oracle: &O,
    optimum: Option<&Optimum>,
    samples: usize,
    seed: u64,
) -> Vec<CheckOutcome> {
    let m = run.parameters.smoothness;
    let kind = run.solver;
    let rho = match kind {
        SolverKind::Nesterov => Some(m),
        _ if kind.is_bundle() => run.parameters.rho,
        _ => None,
    };
    let beta = run.parameters.beta;
    let mut out = Vec::new();

    out.push(match kind {
        SolverKind::GradientDescent | SolverKind::Bundle | SolverKind::BundleSingleLoop => {
            CheckOutcome::from_report(check_monotone(run))
        }
        _ => CheckOutcome::skipped("monotone", "not claimed for accelerated methods"),
    });

    let Some(rho) = rho else {
        return out;
    };
    if rho < m {
        for name in ["ahpe-condition", "potential", "coefficients", "inner-bound", "rate-bound"] {
            out.push(CheckOutcome::skipped(name, format!("ρ = {rho} < M = {m}")));
        }
    } else {
        out.push(outcome("ahpe-condition", check_ahpe_condition(run, rho)));
        if kind.is_accelerated() {
            out.push(match optimum {
                Some(opt) => outcome("potential", check_potential(run, oracle, &opt.point, rho)),
                None => CheckOutcome::skipped("potential", "optimum unavailable"),
            });
            out.push(outcome("coefficients", check_coefficients(run)));
            out.push(match optimum {
                Some(opt) => {
                    let x0 = &run.iterations[0].x;
                    outcome("rate-bound", check_rate_bound(run, dist_sq(x0, &opt.point), rho))
                }
                None => CheckOutcome::skipped("rate-bound", "optimum unavailable"),
            });
        }
        if kind.is_bundle() {
            out.push(match beta {
                Some(beta) => outcome("inner-bound", check_inner_bound(run, m, rho, beta)),
                None => CheckOutcome::failed("inner-bound", "run record has no beta"),
            });
        }
    }

    if kind.is_bundle() {
        out.push(if run.model_snapshots.is_empty() {
            CheckOutcome::skipped("model-minorant", "no model snapshots recorded")
        } else {
            CheckOutcome::from_report(check_model_minorant(
                oracle,
                &run.model_snapshots,
                samples,
                seed,
            ))
        });
    }
    out
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.status != CheckStatus::Failed)
}
