//! The `ProxDescent(y, β, ρ)` oracle.
//!
//! Starting from the tangent cut at the center, each inner iteration solves
//! the prox subproblem over the current two-cut model and applies the descent
//! test. A failed test (null step) replaces the model by the tangent at the
//! trial point plus the aggregate of the old model. The first trial point that
//! passes is returned together with its inexact-subgradient certificate
//! `v = ρ(y − x⁺)`, `ε = f(x⁺) − f̃(x⁺)`.

use serde::{Deserialize, Serialize};

use crate::bundle_model::{aggregate_cut, solve_prox, Cut, ProxSolution, TwoCutModel};
use crate::error::{check_dim, Error, Result};
use crate::objectives::ObjectiveOracle;

/// Below this (relative) magnitude a negative `f(x⁺) − f̃(x⁺)` is rounding.
const EPSILON_ROUNDING: f64 = 1e-12;

/// Budget used when the smoothness constant is unknown.
pub const FALLBACK_MAX_INNER: usize = 100_000;

/// One inner iteration: the trial point `z_{j+1}` and its descent verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerRecord {
    pub trial: Vec<f64>,
    pub f_trial: f64,
    /// `f̃_j(z_{j+1})`
    pub model_at_trial: f64,
    /// `η_j = min_y f̃_j(y) + (ρ/2)‖y − center‖²`
    pub subproblem_value: f64,
    pub descent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxDescentReport {
    pub f_center: f64,
    pub accepted: Vec<f64>,
    pub f_accepted: f64,
    /// `ρ(center − accepted)`
    pub v: Vec<f64>,
    pub epsilon: f64,
    pub inner_iterations: usize,
    pub trace: Vec<InnerRecord>,
    pub oracle_calls: usize,
    /// Model `f̃_j` used at each inner iteration, when recording is enabled.
    pub models: Vec<TwoCutModel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxDescentOptions {
    pub beta: f64,
    pub rho: f64,
    pub max_inner: usize,
    pub record_models: bool,
}

impl ProxDescentOptions {
    pub fn new(beta: f64, rho: f64, max_inner: usize) -> Self {
        ProxDescentOptions {
            beta,
            rho,
            max_inner,
            record_models: false,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
                reason: "must lie in (0, 1)",
            });
        }
        if !(self.rho > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: self.rho,
                reason: "must be positive",
            });
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidParameter {
                name: "max_inner",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// `f(y) − f(z) ≥ β (f(y) − f̃(z))`.
pub fn descent_test(f_at_center: f64, f_at_trial: f64, model_at_trial: f64, beta: f64) -> Result<bool> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "must lie in (0, 1]",
        });
    }
    Ok(passes_descent_test(f_at_center, f_at_trial, model_at_trial, beta))
}

#[inline]
fn passes_descent_test(f_center: f64, f_trial: f64, model_trial: f64, beta: f64) -> bool {
    f_center - f_trial >= beta * (f_center - model_trial)
}

/// Relative resolution below which a predicted decrease is rounding noise.
const STALL_RESOLUTION: f64 = 16.0 * f64::EPSILON;

/// The model predicts no decrease beyond the resolution of `f(y)` and the
/// trial is no worse than the center at that resolution. Happens only at
/// centers that are stationary to working precision, where the exact test
/// compares rounding noise and can fail indefinitely.
#[inline]
fn stalled(f_center: f64, f_trial: f64, model_trial: f64) -> bool {
    let tol = STALL_RESOLUTION * (1.0 + f_center.abs());
    f_center - model_trial <= tol && f_trial <= f_center + tol
}

/// Worst-case inner iteration count `16(M + ρ)³ / ((1 − β)² ρ³)` for an
/// `M`-smooth objective.
pub fn inner_iteration_bound(smoothness: f64, rho: f64, beta: f64) -> f64 {
    16.0 * (smoothness + rho).powi(3) / ((1.0 - beta).powi(2) * rho.powi(3))
}

/// `⌈inner_iteration_bound⌉`, ignoring rounding noise in the last bits so
/// that e.g. β = 0.9 gives 12800 rather than 12801.
pub fn inner_iteration_cap(smoothness: f64, rho: f64, beta: f64) -> usize {
    let bound = inner_iteration_bound(smoothness, rho, beta);
    (bound * (1.0 - 1e-12)).ceil() as usize
}

/// Four times the inner bound when `M` is known, else [`FALLBACK_MAX_INNER`].
pub fn default_max_inner(smoothness: Option<f64>, rho: f64, beta: f64) -> usize {
    match smoothness {
        Some(m) if m > 0.0 && rho > 0.0 && beta > 0.0 && beta < 1.0 => {
            let cap = inner_iteration_bound(m, rho, beta);
            if cap.is_finite() && cap < (FALLBACK_MAX_INNER * 100) as f64 {
                4 * inner_iteration_cap(m, rho, beta)
            } else {
                FALLBACK_MAX_INNER
            }
        }
        _ => FALLBACK_MAX_INNER,
    }
}

/// One prox solve plus descent test, shared by the double-loop oracle and
/// the single-loop classical method so both follow the same rounding path.
#[derive(Clone, Debug)]
pub(crate) struct BundleStep {
    pub prox: ProxSolution,
    pub f_trial: f64,
    pub grad_trial: Vec<f64>,
    pub descent: bool,
}

pub(crate) fn bundle_step<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    model: &TwoCutModel,
    center: &[f64],
    f_center: f64,
    beta: f64,
    rho: f64,
) -> Result<BundleStep> {
    let prox = solve_prox(model, center, rho)?;
    let (f_trial, grad_trial) = oracle.value_and_gradient(&prox.point);
    let descent = passes_descent_test(f_center, f_trial, prox.model_value, beta)
        || stalled(f_center, f_trial, prox.model_value);
    Ok(BundleStep {
        prox,
        f_trial,
        grad_trial,
        descent,
    })
}

/// Model after a null step: tangent at the trial point, aggregate of the old model.
pub(crate) fn null_step_model(step: &BundleStep, center: &[f64], rho: f64) -> TwoCutModel {
    let z = &step.prox.point;
    let newest = Cut::anchored(z, step.f_trial, step.grad_trial.clone());
    let aggregate = aggregate_cut(center, z, rho, step.prox.model_value);
    TwoCutModel::with_aggregate(newest, aggregate)
}

pub(crate) fn certificate_epsilon(f_trial: f64, model_value: f64) -> f64 {
    let eps = f_trial - model_value;
    if eps < 0.0 && eps >= -EPSILON_ROUNDING * (1.0 + f_trial.abs()) {
        0.0
    } else {
        eps
    }
}

pub(crate) fn inexact_subgradient(center: &[f64], accepted: &[f64], rho: f64) -> Vec<f64> {
    center
        .iter()
        .zip(accepted)
        .map(|(c, x)| rho * (c - x))
        .collect()
}

fn inner_record(step: &BundleStep, center: &[f64], rho: f64) -> InnerRecord {
    InnerRecord {
        trial: step.prox.point.clone(),
        f_trial: step.f_trial,
        model_at_trial: step.prox.model_value,
        subproblem_value: step.prox.subproblem_value(center, rho),
        descent: step.descent,
    }
}

/// Runs `ProxDescent(center, β, ρ)` with at most `max_inner` prox solves.
pub fn prox_descent<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    center: &[f64],
    beta: f64,
    rho: f64,
    max_inner: usize,
) -> Result<ProxDescentReport> {
    prox_descent_with(oracle, center, &ProxDescentOptions::new(beta, rho, max_inner))
}

pub fn prox_descent_with<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    center: &[f64],
    opts: &ProxDescentOptions,
) -> Result<ProxDescentReport> {
    opts.validate()?;
    check_dim(oracle.dim(), center.len())?;
    let ProxDescentOptions { beta, rho, .. } = *opts;

    let (f_center, grad_center) = oracle.value_and_gradient(center);
    let mut model = TwoCutModel::single(Cut::anchored(center, f_center, grad_center));
    let mut trace = Vec::new();
    let mut models = Vec::new();

    for _ in 0..opts.max_inner {
        if opts.record_models {
            models.push(model.clone());
        }
        let step = bundle_step(oracle, &model, center, f_center, beta, rho)?;
        trace.push(inner_record(&step, center, rho));

        if step.descent {
            let epsilon = certificate_epsilon(step.f_trial, step.prox.model_value);
            let v = inexact_subgradient(center, &step.prox.point, rho);
            return Ok(ProxDescentReport {
                f_center,
                accepted: step.prox.point,
                f_accepted: step.f_trial,
                v,
                epsilon,
                inner_iterations: trace.len(),
                oracle_calls: trace.len() + 1,
                trace,
                models,
            });
        }
        model = null_step_model(&step, center, rho);
    }

    Err(Error::InnerBudgetExhausted {
        budget: opts.max_inner,
        trace,
    })
}
