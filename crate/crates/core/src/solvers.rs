//! Outer algorithms: gradient descent, Nesterov's AGD, the double-loop and
//! single-loop proximal bundle methods, and the accelerated bundle method.
//!
//! AGD and the accelerated bundle method run through one driver
//! ([`accelerated_driver`]) that differs only in how `x_{k+1}` is produced
//! from the extrapolated point `y_k`: an exact gradient step or a call to
//! [`prox_descent`](crate::prox_descent::prox_descent_with).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bundle_model::{Cut, TwoCutModel};
use crate::error::{check_dim, Error, Result};
use crate::objectives::ObjectiveOracle;
use crate::prox_descent::{
    bundle_step, certificate_epsilon, default_max_inner, inexact_subgradient, null_step_model,
    prox_descent_with, ProxDescentOptions,
};
use crate::vecops::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "gd")]
    GradientDescent,
    #[serde(rename = "agd")]
    Nesterov,
    #[serde(rename = "pbm")]
    Bundle,
    #[serde(rename = "pbm-single")]
    BundleSingleLoop,
    #[serde(rename = "apbm")]
    AcceleratedBundle,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::GradientDescent,
        SolverKind::Nesterov,
        SolverKind::Bundle,
        SolverKind::BundleSingleLoop,
        SolverKind::AcceleratedBundle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::GradientDescent => "gd",
            SolverKind::Nesterov => "agd",
            SolverKind::Bundle => "pbm",
            SolverKind::BundleSingleLoop => "pbm-single",
            SolverKind::AcceleratedBundle => "apbm",
        }
    }

    /// Whether the method is parameterized by ρ and β.
    pub fn is_bundle(self) -> bool {
        matches!(
            self,
            SolverKind::Bundle | SolverKind::BundleSingleLoop | SolverKind::AcceleratedBundle
        )
    }

    pub fn is_accelerated(self) -> bool {
        matches!(self, SolverKind::Nesterov | SolverKind::AcceleratedBundle)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownSolver(s.to_string()))
    }
}

/// Momentum weights `(a_k, A_k)` with `a_k = (1 + √(1 + 4A_k)) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccelCoefficients {
    /// `a_k`
    pub step_weight: f64,
    /// `A_k`
    pub total_weight: f64,
}

impl AccelCoefficients {
    pub fn from_total(total_weight: f64) -> Self {
        AccelCoefficients {
            step_weight: 0.5 * (1.0 + (1.0 + 4.0 * total_weight).sqrt()),
            total_weight,
        }
    }

    /// `A_{k+1} = A_k + a_k`
    pub fn next_total(&self) -> f64 {
        self.total_weight + self.step_weight
    }

    pub fn advance(&self) -> Self {
        Self::from_total(self.next_total())
    }
}

/// `(a_k, A_k)` for `k = 0, 1, …`, starting from `A_0 = 0`.
pub fn coefficient_sequence() -> impl Iterator<Item = AccelCoefficients> {
    std::iter::successors(Some(AccelCoefficients::from_total(0.0)), |c| {
        Some(c.advance())
    })
}

/// Outcome of one subproblem solve in the single-loop method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Descent,
    Null,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunParameters {
    pub smoothness: f64,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub iterations: usize,
    #[serde(default)]
    pub max_inner: Option<usize>,
}

/// State after `k` iterations. Step data (`inner_iterations`, `epsilon`, `v`)
/// describe the step that produced `x`; extrapolation data (`y`, `a`)
/// describe the step taken from this row, so they are absent on the last row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
    /// `a_k`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// `A_k`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_a: Option<f64>,
    pub f: f64,
    #[serde(default)]
    pub gap: Option<f64>,
    pub inner_iterations: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepKind>,
    /// Cumulative oracle evaluations.
    pub oracle_calls: usize,
    /// Milliseconds since the run started.
    pub wall_ms: f64,
}

/// Model in force at inner step `inner` of outer iteration `outer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub outer: usize,
    pub inner: usize,
    pub center: Vec<f64>,
    pub model: TwoCutModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: SolverKind,
    pub objective: String,
    pub parameters: RunParameters,
    #[serde(default)]
    pub f_star: Option<f64>,
    pub iterations: Vec<IterationRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub model_snapshots: Vec<ModelSnapshot>,
}

impl RunRecord {
    pub fn gaps(&self) -> Option<Vec<f64>> {
        self.iterations.iter().map(|r| r.gap).collect()
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.iterations.last().and_then(|r| r.gap)
    }

    pub fn final_point(&self) -> &[f64] {
        &self.iterations.last().expect("run has an initial row").x
    }

    /// Iterates accepted by descent steps, in order. For the double-loop
    /// solvers every row after the first is one.
    pub fn descent_iterates(&self) -> Vec<&[f64]> {
        match self.solver {
            SolverKind::BundleSingleLoop => self
                .iterations
                .iter()
                .filter(|r| r.step == Some(StepKind::Descent))
                .map(|r| r.x.as_slice())
                .collect(),
            _ => self.iterations[1..].iter().map(|r| r.x.as_slice()).collect(),
        }
    }

    /// Number of subproblem solves spent on each descent step (null steps
    /// plus the descent step itself).
    pub fn solves_per_descent(&self) -> Vec<usize> {
        match self.solver {
            SolverKind::BundleSingleLoop => {
                let mut out = Vec::new();
                let mut pending = 0;
                for r in &self.iterations[1..] {
                    pending += 1;
                    if r.step == Some(StepKind::Descent) {
                        out.push(pending);
                        pending = 0;
                    }
                }
                out
            }
            _ => self.iterations[1..]
                .iter()
                .map(|r| r.inner_iterations)
                .collect(),
        }
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.iterations.iter().map(|r| r.inner_iterations).sum()
    }
}

/// Run metadata that does not affect the iteration itself.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunContext {
    pub objective_name: String,
    /// Optimal value; enables the gap column.
    pub f_star: Option<f64>,
    /// Keep every bundle model for later minorant checks.
    pub record_models: bool,
    /// Stop as soon as the gap drops to this value. Off by default.
    pub stop_gap: Option<f64>,
    pub seed: Option<u64>,
}

impl RunContext {
    pub fn named(objective_name: impl Into<String>) -> Self {
        RunContext {
            objective_name: objective_name.into(),
            ..Default::default()
        }
    }

    pub fn with_optimum(mut self, f_star: f64) -> Self {
        self.f_star = Some(f_star);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BundleParams {
    pub beta: f64,
    pub rho: f64,
    pub max_inner: usize,
}

impl BundleParams {
    /// `max_inner` defaults to four times the inner-iteration bound for `M`.
    pub fn new(beta: f64, rho: f64, smoothness: f64) -> Self {
        BundleParams {
            beta,
            rho,
            max_inner: default_max_inner(Some(smoothness), rho, beta),
        }
    }

    fn prox_options(&self, record_models: bool) -> ProxDescentOptions {
        ProxDescentOptions {
            record_models,
            ..ProxDescentOptions::new(self.beta, self.rho, self.max_inner)
        }
    }
}

struct Recorder<'a> {
    start: Instant,
    ctx: &'a RunContext,
    record: RunRecord,
}

impl<'a> Recorder<'a> {
    fn new(solver: SolverKind, ctx: &'a RunContext, parameters: RunParameters) -> Self {
        Recorder {
            start: Instant::now(),
            ctx,
            record: RunRecord {
                solver,
                objective: ctx.objective_name.clone(),
                parameters,
                f_star: ctx.f_star,
                iterations: Vec::new(),
                model_snapshots: Vec::new(),
            },
        }
    }

    fn row(&self, x: Vec<f64>, f: f64, oracle_calls: usize) -> IterationRecord {
        IterationRecord {
            k: self.record.iterations.len(),
            x,
            y: None,
            z: None,
            a: None,
            big_a: None,
            f,
            gap: self.ctx.f_star.map(|fs| f - fs),
            inner_iterations: 0,
            epsilon: None,
            v: None,
            step: None,
            oracle_calls,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        }
    }

    fn push(&mut self, row: IterationRecord) {
        self.record.iterations.push(row);
    }

    fn last_mut(&mut self) -> &mut IterationRecord {
        self.record.iterations.last_mut().expect("initial row pushed")
    }

    /// Whether the optional gap threshold has been reached.
    fn converged(&self) -> bool {
        match (self.ctx.stop_gap, self.record.iterations.last().and_then(|r| r.gap)) {
            (Some(tol), Some(gap)) => gap <= tol,
            _ => false,
        }
    }

    fn snapshot(&mut self, outer: usize, center: &[f64], models: Vec<TwoCutModel>) {
        if !self.ctx.record_models {
            return;
        }
        for (inner, model) in models.into_iter().enumerate() {
            self.record.model_snapshots.push(ModelSnapshot {
                outer,
                inner: inner + 1,
                center: center.to_vec(),
                model,
            });
        }
    }

    fn abort(self, cause: Error) -> Error {
        Error::RunAborted {
            partial: Box::new(self.record),
            cause: Box::new(cause),
        }
    }

    fn finish(self) -> RunRecord {
        self.record
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "must lie in (0, 1)",
        })
    }
}

/// `x_{k+1} = x_k − step · ∇f(x_k)`
pub fn gradient_descent<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    step: f64,
    iters: usize,
    ctx: &RunContext,
) -> Result<RunRecord> {
    check_dim(oracle.dim(), x0.len())?;
    check_positive("step", step)?;
    let params = RunParameters {
        smoothness: oracle.smoothness(),
        step: Some(step),
        seed: ctx.seed,
        iterations: iters,
        ..Default::default()
    };
    let mut rec = Recorder::new(SolverKind::GradientDescent, ctx, params);

    let mut x = x0.to_vec();
    let mut calls = 0;
    for k in 0..=iters {
        let (f, g) = oracle.value_and_gradient(&x);
        calls += 1;
        let row = rec.row(x.clone(), f, calls);
        rec.push(row);
        if k == iters || rec.converged() {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
    }
    Ok(rec.finish())
}

/// Result of producing `x_{k+1}` from `y_k` in the accelerated driver,
/// written in inexact-proximal form `x_{k+1} = y_k − v/ρ`.
struct StepOutcome {
    next: Vec<f64>,
    f_next: f64,
    v: Vec<f64>,
    epsilon: f64,
    inner_iterations: usize,
    oracle_calls: usize,
    models: Vec<TwoCutModel>,
}

trait ExtrapolatedStep {
    fn take<O: ObjectiveOracle + ?Sized>(&self, oracle: &O, y: &[f64]) -> Result<StepOutcome>;
}

/// `x_{k+1} = y_k − ∇f(y_k)/M`, certified with `v = ∇f(y_k)` and the
/// linearization gap at `x_{k+1}` as `ε`.
struct GradientStep {
    smoothness: f64,
}

impl ExtrapolatedStep for GradientStep {
    fn take<O: ObjectiveOracle + ?Sized>(&self, oracle: &O, y: &[f64]) -> Result<StepOutcome> {
        let (f_y, g) = oracle.value_and_gradient(y);
        let next: Vec<f64> = y
            .iter()
            .zip(&g)
            .map(|(yi, gi)| yi - gi / self.smoothness)
            .collect();
        let f_next = oracle.value(&next);
        let displacement: Vec<f64> = next.iter().zip(y).map(|(a, b)| a - b).collect();
        let epsilon = certificate_epsilon(f_next, f_y + dot(&g, &displacement));
        Ok(StepOutcome {
            next,
            f_next,
            v: g,
            epsilon,
            inner_iterations: 0,
            oracle_calls: 2,
            models: Vec::new(),
        })
    }
}

struct BundleStepOracle {
    opts: ProxDescentOptions,
}

impl ExtrapolatedStep for BundleStepOracle {
    fn take<O: ObjectiveOracle + ?Sized>(&self, oracle: &O, y: &[f64]) -> Result<StepOutcome> {
        let report = prox_descent_with(oracle, y, &self.opts)?;
        Ok(StepOutcome {
            next: report.accepted,
            f_next: report.f_accepted,
            v: report.v,
            epsilon: report.epsilon,
            inner_iterations: report.inner_iterations,
            oracle_calls: report.oracle_calls,
            models: report.models,
        })
    }
}

fn accelerated_driver<O: ObjectiveOracle + ?Sized, S: ExtrapolatedStep>(
    oracle: &O,
    x0: &[f64],
    iters: usize,
    stepper: &S,
    mut rec: Recorder<'_>,
) -> Result<RunRecord> {
    let mut x = x0.to_vec();
    let mut z = x0.to_vec();
    let mut total = 0.0;
    let mut calls = 1;
    let mut first = rec.row(x.clone(), oracle.value(&x), calls);
    first.z = Some(z.clone());
    first.big_a = Some(total);
    rec.push(first);

    for k in 0..iters {
        if rec.converged() {
            break;
        }
        let coeff = AccelCoefficients::from_total(total);
        let a = coeff.step_weight;
        let total_next = coeff.next_total();
        let (wx, wz) = (total / total_next, a / total_next);
        let y: Vec<f64> = x.iter().zip(&z).map(|(xi, zi)| wx * xi + wz * zi).collect();
        {
            let row = rec.last_mut();
            row.y = Some(y.clone());
            row.a = Some(a);
        }

        let out = match stepper.take(oracle, &y) {
            Ok(out) => out,
            Err(e) => return Err(rec.abort(e)),
        };
        calls += out.oracle_calls;
        rec.snapshot(k, &y, out.models);

        for ((zi, yi), xi) in z.iter_mut().zip(&y).zip(&out.next) {
            *zi -= a * (yi - xi);
        }
        x = out.next;
        total = total_next;

        let mut row = rec.row(x.clone(), out.f_next, calls);
        row.z = Some(z.clone());
        row.big_a = Some(total);
        row.inner_iterations = out.inner_iterations;
        row.epsilon = Some(out.epsilon);
        row.v = Some(out.v);
        rec.push(row);
    }
    Ok(rec.finish())
}

/// Nesterov's accelerated gradient descent with step `1/M`.
pub fn nesterov_agd<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    iters: usize,
    ctx: &RunContext,
) -> Result<RunRecord> {
    check_dim(oracle.dim(), x0.len())?;
    let smoothness = oracle.smoothness();
    check_positive("smoothness", smoothness)?;
    let params = RunParameters {
        smoothness,
        seed: ctx.seed,
        iterations: iters,
        ..Default::default()
    };
    let rec = Recorder::new(SolverKind::Nesterov, ctx, params);
    accelerated_driver(oracle, x0, iters, &GradientStep { smoothness }, rec)
}

/// Accelerated proximal bundle method: Nesterov extrapolation around
/// `ProxDescent(y_k, β, ρ)`.
pub fn accelerated_pbm<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    params: &BundleParams,
    outer_iters: usize,
    ctx: &RunContext,
) -> Result<RunRecord> {
    check_dim(oracle.dim(), x0.len())?;
    let opts = params.prox_options(ctx.record_models);
    opts.validate()?;
    let rec = Recorder::new(
        SolverKind::AcceleratedBundle,
        ctx,
        bundle_parameters(oracle, params, outer_iters, ctx),
    );
    accelerated_driver(oracle, x0, outer_iters, &BundleStepOracle { opts }, rec)
}

fn bundle_parameters<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    params: &BundleParams,
    iterations: usize,
    ctx: &RunContext,
) -> RunParameters {
    RunParameters {
        smoothness: oracle.smoothness(),
        rho: Some(params.rho),
        beta: Some(params.beta),
        seed: ctx.seed,
        iterations,
        max_inner: Some(params.max_inner),
        ..Default::default()
    }
}

/// Double-loop proximal bundle method: `y_{k+1} = ProxDescent(y_k, β, ρ)`.
pub fn pbm<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    y0: &[f64],
    params: &BundleParams,
    outer_iters: usize,
    ctx: &RunContext,
) -> Result<RunRecord> {
    check_dim(oracle.dim(), y0.len())?;
    let opts = params.prox_options(ctx.record_models);
    opts.validate()?;
    let mut rec = Recorder::new(
        SolverKind::Bundle,
        ctx,
        bundle_parameters(oracle, params, outer_iters, ctx),
    );

    let mut y = y0.to_vec();
    let mut calls = 1;
    let first = rec.row(y.clone(), oracle.value(&y), calls);
    rec.push(first);
    for k in 0..outer_iters {
        if rec.converged() {
            break;
        }
        let report = match prox_descent_with(oracle, &y, &opts) {
            Ok(r) => r,
            Err(e) => return Err(rec.abort(e)),
        };
        calls += report.oracle_calls;
        rec.snapshot(k, &y, report.models);
        y = report.accepted;
        let mut row = rec.row(y.clone(), report.f_accepted, calls);
        row.inner_iterations = report.inner_iterations;
        row.epsilon = Some(report.epsilon);
        row.v = Some(report.v);
        rec.push(row);
    }
    Ok(rec.finish())
}

/// Classical single-loop proximal bundle method. Each of the `total_iters`
/// iterations is one subproblem solve; a null step keeps the center and
/// refines the model, a descent step moves the center and restarts the model
/// from the tangent there.
pub fn classical_pbm_single_loop<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    y0: &[f64],
    beta: f64,
    rho: f64,
    total_iters: usize,
    ctx: &RunContext,
) -> Result<RunRecord> {
    check_dim(oracle.dim(), y0.len())?;
    check_beta(beta)?;
    check_positive("rho", rho)?;
    let params = RunParameters {
        smoothness: oracle.smoothness(),
        rho: Some(rho),
        beta: Some(beta),
        seed: ctx.seed,
        iterations: total_iters,
        ..Default::default()
    };
    let mut rec = Recorder::new(SolverKind::BundleSingleLoop, ctx, params);

    let mut center = y0.to_vec();
    let (mut f_center, g_center) = oracle.value_and_gradient(&center);
    let mut calls = 1;
    let mut model = TwoCutModel::single(Cut::anchored(&center, f_center, g_center));
    let first = rec.row(center.clone(), f_center, calls);
    rec.push(first);

    let mut descents = 0;
    let mut inner = 0;
    for _ in 0..total_iters {
        if rec.converged() {
            break;
        }
        inner += 1;
        if ctx.record_models {
            rec.snapshot(descents, &center, vec![model.clone()]);
            rec.record.model_snapshots.last_mut().unwrap().inner = inner;
        }
        let step = match bundle_step(oracle, &model, &center, f_center, beta, rho) {
            Ok(s) => s,
            Err(e) => return Err(rec.abort(e)),
        };
        calls += 1;
        let previous = center.clone();
        let (kind, epsilon, v) = if step.descent {
            let eps = certificate_epsilon(step.f_trial, step.prox.model_value);
            let v = inexact_subgradient(&center, &step.prox.point, rho);
            center = step.prox.point.clone();
            f_center = step.f_trial;
            model = TwoCutModel::single(Cut::anchored(&center, f_center, step.grad_trial));
            descents += 1;
            inner = 0;
            (StepKind::Descent, Some(eps), Some(v))
        } else {
            model = null_step_model(&step, &center, rho);
            (StepKind::Null, None, None)
        };
        let mut row = rec.row(center.clone(), f_center, calls);
        row.y = Some(previous);
        row.inner_iterations = 1;
        row.step = Some(kind);
        row.epsilon = epsilon;
        row.v = v;
        rec.push(row);
    }
    Ok(rec.finish())
}

/// Solver choice plus its parameters, as used by the experiment harness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub rho: f64,
    pub beta: f64,
    pub iterations: usize,
    /// Inner budget; defaults to four times the inner bound.
    pub max_inner: Option<usize>,
    /// Gradient-descent step; defaults to `1/M`.
    pub step: Option<f64>,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, rho: f64, beta: f64, iterations: usize) -> Self {
        SolverConfig {
            kind,
            rho,
            beta,
            iterations,
            max_inner: None,
            step: None,
        }
    }
}

pub fn run_solver<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    x0: &[f64],
    config: &SolverConfig,
    ctx: &RunContext,
) -> Result<RunRecord> {
    let m = oracle.smoothness();
    let bundle = BundleParams {
        beta: config.beta,
        rho: config.rho,
        max_inner: config
            .max_inner
            .unwrap_or_else(|| default_max_inner(Some(m), config.rho, config.beta)),
    };
    match config.kind {
        SolverKind::GradientDescent => {
            gradient_descent(oracle, x0, config.step.unwrap_or(1.0 / m), config.iterations, ctx)
        }
        SolverKind::Nesterov => nesterov_agd(oracle, x0, config.iterations, ctx),
        SolverKind::Bundle => pbm(oracle, x0, &bundle, config.iterations, ctx),
        SolverKind::BundleSingleLoop => classical_pbm_single_loop(
            oracle,
            x0,
            config.beta,
            config.rho,
            config.iterations,
            ctx,
        ),
        SolverKind::AcceleratedBundle => {
            accelerated_pbm(oracle, x0, &bundle, config.iterations, ctx)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_worst_case, quadratic_optimum};

    struct HalfSquare;

    impl ObjectiveOracle for HalfSquare {
        fn dim(&self) -> usize {
            1
        }
        fn smoothness(&self) -> f64 {
            1.0
        }
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * x[0] * x[0]
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0]]
        }
    }

    fn ctx() -> RunContext {
        RunContext::named("half-square").with_optimum(0.0)
    }

    #[test]
    fn solver_names_round_trip() {
        for kind in SolverKind::ALL {
            assert_eq!(kind.name().parse::<SolverKind>().unwrap(), kind);
        }
        assert!(matches!(
            "nosuch".parse::<SolverKind>(),
            Err(Error::UnknownSolver(_))
        ));
    }

    #[test]
    fn first_coefficients() {
        let mut seq = coefficient_sequence();
        let c0 = seq.next().unwrap();
        assert_eq!(c0.total_weight, 0.0);
        assert_eq!(c0.step_weight, 1.0);
        let c1 = seq.next().unwrap();
        assert_eq!(c1.total_weight, 1.0);
        assert_eq!(c1.step_weight, 0.5 * (1.0 + 5f64.sqrt()));
        let c2 = seq.next().unwrap();
        assert_eq!(c2.total_weight, 1.0 + c1.step_weight);
    }

    #[test]
    fn gd_unit_step_is_exact_on_half_square() {
        let run = gradient_descent(&HalfSquare, &[1.0], 1.0, 3, &ctx()).unwrap();
        assert_eq!(run.iterations[1].x, vec![0.0]);
        assert_eq!(run.iterations.len(), 4);
    }

    #[test]
    fn gd_half_step_halves() {
        let run = gradient_descent(&HalfSquare, &[1.0], 0.5, 10, &ctx()).unwrap();
        for r in &run.iterations {
            assert_eq!(r.x[0], 0.5f64.powi(r.k as i32));
        }
    }

    #[test]
    fn agd_first_extrapolate_is_start() {
        let f = make_worst_case(5).unwrap();
        let x0 = vec![0.1, -0.2, 0.3, 0.0, 1.0];
        let run = nesterov_agd(&f, &x0, 3, &RunContext::named("wc")).unwrap();
        assert_eq!(run.iterations[0].y.as_deref(), Some(x0.as_slice()));
        assert_eq!(run.iterations[0].a, Some(1.0));
        assert_eq!(run.iterations[1].big_a, Some(1.0));
        assert!(run.iterations[3].y.is_none());
    }

    #[test]
    fn agd_exact_on_half_square() {
        let run = nesterov_agd(&HalfSquare, &[1.0], 6, &ctx()).unwrap();
        for r in &run.iterations[1..] {
            assert_eq!(r.x, vec![0.0]);
        }
    }

    #[test]
    fn pbm_on_half_square() {
        // ρ = M: one step to the minimizer.
        let run = pbm(&HalfSquare, &[1.0], &BundleParams::new(0.5, 1.0, 1.0), 4, &ctx()).unwrap();
        assert!(run.iterations[1..].iter().all(|r| r.x == vec![0.0]));
        // ρ = 2M: each outer step is a half gradient step, y_k = 2⁻ᵏ.
        let run = pbm(&HalfSquare, &[1.0], &BundleParams::new(0.5, 2.0, 1.0), 20, &ctx()).unwrap();
        for r in &run.iterations {
            assert_eq!(r.x[0], 0.5f64.powi(r.k as i32));
            assert!(r.k == 0 || r.inner_iterations == 1);
        }
    }

    #[test]
    fn stationary_start_stays_put() {
        let f = make_worst_case(6).unwrap();
        let opt = quadratic_optimum(&f).unwrap();
        let c = RunContext::named("wc").with_optimum(opt.value);
        let params = BundleParams::new(0.5, 1.0, 1.0);
        let run = pbm(&f, &opt.point, &params, 5, &c).unwrap();
        for r in &run.iterations {
            for (a, b) in r.x.iter().zip(&opt.point) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        let run = accelerated_pbm(&f, &opt.point, &params, 5, &c).unwrap();
        for r in &run.iterations[1..] {
            assert!(r.epsilon.unwrap().abs() < 1e-15);
            for (a, b) in r.x.iter().zip(&opt.point) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_loop_budget_counts_every_solve() {
        let f = make_worst_case(500).unwrap();
        let run =
            classical_pbm_single_loop(&f, &vec![0.0; 500], 0.99, 1.0, 10, &RunContext::named("wc"))
                .unwrap();
        assert_eq!(run.iterations.len(), 11);
        assert_eq!(run.total_inner_iterations(), 10);
        assert_eq!(run.iterations.last().unwrap().oracle_calls, 11);
    }

    #[test]
    fn single_loop_half_square_has_no_null_steps() {
        let run = classical_pbm_single_loop(&HalfSquare, &[1.0], 0.5, 1.0, 8, &ctx()).unwrap();
        assert!(run.iterations[1..]
            .iter()
            .all(|r| r.step == Some(StepKind::Descent)));
    }

    #[test]
    fn gap_threshold_stops_early() {
        let f = make_worst_case(20).unwrap();
        let opt = quadratic_optimum(&f).unwrap();
        let mut c = RunContext::named("wc").with_optimum(opt.value);
        c.stop_gap = Some(1e-3);
        let run = nesterov_agd(&f, &[0.0; 20], 1000, &c).unwrap();
        assert!(run.iterations.len() < 1001);
        assert!(run.final_gap().unwrap() <= 1e-3);
    }

    #[test]
    fn budget_failure_keeps_partial_record() {
        let f = make_worst_case(50).unwrap();
        let params = BundleParams {
            beta: 0.99,
            rho: 0.01,
            max_inner: 1,
        };
        let err = accelerated_pbm(&f, &[0.0; 50], &params, 100, &RunContext::named("wc"))
            .unwrap_err();
        assert!(err.is_budget_exhausted());
        match err {
            Error::RunAborted { partial, .. } => assert!(!partial.iterations.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let f = make_worst_case(3).unwrap();
        let c = RunContext::named("wc");
        assert!(gradient_descent(&f, &[0.0; 3], 0.0, 5, &c).is_err());
        assert!(pbm(&f, &[0.0; 3], &BundleParams::new(1.0, 1.0, 1.0), 5, &c).is_err());
        assert!(classical_pbm_single_loop(&f, &[0.0; 3], 0.5, -1.0, 5, &c).is_err());
        assert!(nesterov_agd(&f, &[0.0; 2], 5, &c).is_err());
    }
}
