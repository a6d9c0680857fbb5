//! Runtime checks of the inequalities behind the convergence guarantees.
//!
//! Every checker is pure: it reads a [`RunRecord`] (and, where needed, the
//! oracle) and returns a [`CertificateReport`]. Violations are normalized:
//! most checks divide `lhs − rhs` by their tolerance `atol · (1 + magnitude)`,
//! so a check passes when its worst violation is at most its declared
//! `slack` (1 for those, 0 for the integer inner-iteration bound).

use serde::Serialize;

use crate::bundle_model::TwoCutModel;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveOracle;
use crate::prox_descent::inner_iteration_cap;
use crate::rng;
use crate::solvers::{
    coefficient_sequence, AccelCoefficients, ModelSnapshot, RunRecord, SolverKind, StepKind,
};
use crate::vecops::{dist_sq, norm};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub check_name: String,
    /// Largest normalized violation; `-inf` when nothing was checked.
    pub worst_violation: f64,
    pub first_failure: Option<usize>,
    pub passed: bool,
    pub slack: f64,
    /// Number of inequalities evaluated.
    pub checked: usize,
}

struct Tally {
    name: &'static str,
    slack: f64,
    worst: f64,
    first_failure: Option<usize>,
    checked: usize,
}

impl Tally {
    fn new(name: &'static str, slack: f64) -> Self {
        Tally {
            name,
            slack,
            worst: f64::NEG_INFINITY,
            first_failure: None,
            checked: 0,
        }
    }

    fn observe(&mut self, index: usize, violation: f64) {
        let violation = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation
        };
        self.checked += 1;
        if violation > self.worst {
            self.worst = violation;
        }
        if violation > self.slack && self.first_failure.is_none() {
            self.first_failure = Some(index);
        }
    }

    fn finish(self) -> CertificateReport {
        CertificateReport {
            check_name: self.name.to_string(),
            worst_violation: self.worst,
            first_failure: self.first_failure,
            passed: self.first_failure.is_none(),
            slack: self.slack,
            checked: self.checked,
        }
    }
}

/// `(lhs − rhs) / (atol · (1 + |magnitude|))`
fn scaled(lhs: f64, rhs: f64, atol: f64, magnitude: f64) -> f64 {
    (lhs - rhs) / (atol * (1.0 + magnitude.abs()))
}

/// One inexact proximal step `x = center − v/ρ` with inexactness `ε`.
struct CertifiedStep<'a> {
    index: usize,
    center: &'a [f64],
    next: &'a [f64],
    v: &'a [f64],
    epsilon: f64,
}

fn certified_steps(run: &RunRecord) -> Result<Vec<CertifiedStep<'_>>> {
    let rows = &run.iterations;
    let missing = || {
        Error::NotApplicable(format!(
            "{} run has no recorded subgradient certificates",
            run.solver
        ))
    };
    let mut steps = Vec::new();
    match run.solver {
        SolverKind::GradientDescent => return Err(missing()),
        SolverKind::BundleSingleLoop => {
            for row in rows.iter().filter(|r| r.step == Some(StepKind::Descent)) {
                steps.push(CertifiedStep {
                    index: row.k,
                    center: row.y.as_deref().ok_or_else(missing)?,
                    next: &row.x,
                    v: row.v.as_deref().ok_or_else(missing)?,
                    epsilon: row.epsilon.ok_or_else(missing)?,
                });
            }
        }
        kind => {
            for pair in rows.windows(2) {
                let (prev, row) = (&pair[0], &pair[1]);
                let center = if kind.is_accelerated() {
                    prev.y.as_deref().ok_or_else(missing)?
                } else {
                    &prev.x
                };
                steps.push(CertifiedStep {
                    index: prev.k,
                    center,
                    next: &row.x,
                    v: row.v.as_deref().ok_or_else(missing)?,
                    epsilon: row.epsilon.ok_or_else(missing)?,
                });
            }
        }
    }
    Ok(steps)
}

/// Inexact proximal-point admissibility: for every step
/// `x_{k+1} = y_k − v_k/ρ` (to `1e-12` relative) and
/// `2ε_{k+1} ≤ ρ‖x_{k+1} − y_k‖²` (to `1e-9 (1 + ρ‖x_{k+1} − y_k‖²)`).
/// Indices in the report are the `k` of `y_k`.
pub fn check_ahpe_condition(run: &RunRecord, rho: f64) -> Result<CertificateReport> {
    let steps = certified_steps(run)?;
    let mut tally = Tally::new("ahpe-condition", 1.0);
    for s in &steps {
        let reconstructed: Vec<f64> = s
            .center
            .iter()
            .zip(s.v)
            .map(|(c, v)| c - v / rho)
            .collect();
        let residual = dist_sq(&reconstructed, s.next).sqrt();
        let form = residual / (1e-12 * (1.0 + norm(s.next)));

        let step_sq = rho * dist_sq(s.next, s.center);
        let inexact = scaled(2.0 * s.epsilon, step_sq, 1e-9, step_sq);
        tally.observe(s.index, form.max(inexact));
    }
    Ok(tally.finish())
}

/// Potential `A_k (f(x_k) − f(x)) + (ρ/2)‖z_k − x‖²` is nonincreasing in
/// `k`, for the fixed reference `x = x_ref`, to `1e-8 (1 + |Φ_k|)`.
pub fn check_potential<O: ObjectiveOracle + ?Sized>(
    run: &RunRecord,
    oracle: &O,
    x_ref: &[f64],
    rho: f64,
) -> Result<CertificateReport> {
    let not_applicable =
        || Error::NotApplicable(format!("{} run records no z_k / A_k sequence", run.solver));
    if !run.solver.is_accelerated() {
        return Err(not_applicable());
    }
    let f_ref = oracle.value(x_ref);
    let potential = |row: &crate::solvers::IterationRecord| -> Result<f64> {
        let big_a = row.big_a.ok_or_else(not_applicable)?;
        let z = row.z.as_deref().ok_or_else(not_applicable)?;
        Ok(big_a * (row.f - f_ref) + 0.5 * rho * dist_sq(z, x_ref))
    };

    let mut tally = Tally::new("potential", 1.0);
    let rows = &run.iterations;
    if rows.is_empty() {
        return Ok(tally.finish());
    }
    let mut prev = potential(&rows[0])?;
    for row in &rows[1..] {
        let next = potential(row)?;
        tally.observe(row.k - 1, scaled(next, prev, 1e-8, prev));
        prev = next;
    }
    Ok(tally.finish())
}

const COEFFICIENT_RTOL: f64 = 1e-10;

fn observe_coefficients(
    tally: &mut Tally,
    k: usize,
    coeff: &AccelCoefficients,
    next_total: f64,
) {
    let big_a = coeff.total_weight;
    let quad = if k >= 1 {
        let lower = (k as f64) * (k as f64) / 4.0;
        (lower - big_a) / (COEFFICIENT_RTOL * big_a)
    } else {
        f64::NEG_INFINITY
    };
    let square = (next_total - coeff.step_weight * coeff.step_weight).abs()
        / (COEFFICIENT_RTOL * next_total);
    let sum = (next_total - (big_a + coeff.step_weight)).abs() / (COEFFICIENT_RTOL * next_total);
    tally.observe(k, quad.max(square).max(sum));
}

/// `A_k ≥ k²/4` and `A_{k+1} = a_k² = A_k + a_k` at every recorded `k`,
/// with `1e-10` relative slack.
pub fn check_coefficients(run: &RunRecord) -> Result<CertificateReport> {
    let not_applicable =
        || Error::NotApplicable(format!("{} run records no momentum weights", run.solver));
    if !run.solver.is_accelerated() {
        return Err(not_applicable());
    }
    let mut tally = Tally::new("coefficients", 1.0);
    for pair in run.iterations.windows(2) {
        let (row, next) = (&pair[0], &pair[1]);
        let coeff = AccelCoefficients {
            step_weight: row.a.ok_or_else(not_applicable)?,
            total_weight: row.big_a.ok_or_else(not_applicable)?,
        };
        let next_total = next.big_a.ok_or_else(not_applicable)?;
        observe_coefficients(&mut tally, row.k, &coeff, next_total);
    }
    Ok(tally.finish())
}

/// The coefficient checks on the bare recursion for `k = 0..steps`, with
/// no oracle involved.
pub fn check_coefficient_sequence(steps: usize) -> CertificateReport {
    let mut tally = Tally::new("coefficients", 1.0);
    for (k, coeff) in coefficient_sequence().take(steps).enumerate() {
        observe_coefficients(&mut tally, k, &coeff, coeff.next_total());
    }
    tally.finish()
}

/// Every inner-iteration count is at most `⌈16(M+ρ)³/((1−β)²ρ³)⌉`.
/// The violation is `count − cap`.
pub fn check_inner_bound(
    run: &RunRecord,
    smoothness: f64,
    rho: f64,
    beta: f64,
) -> Result<CertificateReport> {
    if !matches!(
        run.solver,
        SolverKind::Bundle | SolverKind::AcceleratedBundle | SolverKind::BundleSingleLoop
    ) {
        return Err(Error::NotApplicable(format!(
            "{} run has no inner loop",
            run.solver
        )));
    }
    let cap = inner_iteration_cap(smoothness, rho, beta) as f64;
    let mut tally = Tally::new("inner-bound", 0.0);
    if run.solver == SolverKind::BundleSingleLoop {
        for (i, solves) in run.solves_per_descent().into_iter().enumerate() {
            tally.observe(i, solves as f64 - cap);
        }
    } else {
        for row in &run.iterations[1..] {
            tally.observe(row.k, row.inner_iterations as f64 - cap);
        }
    }
    Ok(tally.finish())
}

/// Samples `samples` points uniformly in the radius-10 ball around each
/// snapshot's center and checks `f̃(y) ≤ f(y) + 1e-9 (1 + |f(y)|)`.
/// Report indices are snapshot positions.
pub fn check_model_minorant<O: ObjectiveOracle + ?Sized>(
    oracle: &O,
    snapshots: &[ModelSnapshot],
    samples: usize,
    seed: u64,
) -> CertificateReport {
    const RADIUS: f64 = 10.0;
    let mut rng = rng::stream(seed, rng::PROBE_STREAM);
    let mut tally = Tally::new("model-minorant", 1.0);
    for (i, snap) in snapshots.iter().enumerate() {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let y = rng::uniform_in_ball(&mut rng, &snap.center, RADIUS);
            let f = oracle.value(&y);
            let violation = scaled(snap.model.eval(&y), f, 1e-9, f);
            worst = worst.max(if violation.is_nan() {
                f64::INFINITY
            } else {
                violation
            });
        }
        if samples > 0 {
            tally.observe(i, worst);
        }
    }
    tally.finish()
}

/// `f(x_k) − f⋆ ≤ 2ρ dist²(x₀, S) / k² + 1e-9 (1 + |f⋆|)` for every `k ≥ 1`.
pub fn check_rate_bound(run: &RunRecord, dist_sq_to_solution: f64, rho: f64) -> Result<CertificateReport> {
    let f_star = run
        .f_star
        .ok_or_else(|| Error::NotApplicable("optimal value unknown".into()))?;
    let mut tally = Tally::new("rate-bound", 1.0);
    for row in &run.iterations[1..] {
        let k = row.k as f64;
        let bound = 2.0 * rho * dist_sq_to_solution / (k * k);
        let gap = row.f - f_star;
        tally.observe(row.k, (gap - bound) / (1e-9 * (1.0 + f_star.abs())));
    }
    Ok(tally.finish())
}

/// `f(x_{k+1}) ≤ f(x_k) + 1e-12 (1 + |f(x_k)|)` along the run.
pub fn check_monotone(run: &RunRecord) -> CertificateReport {
    let mut tally = Tally::new("monotone", 1.0);
    for pair in run.iterations.windows(2) {
        tally.observe(pair[0].k, scaled(pair[1].f, pair[0].f, 1e-12, pair[0].f));
    }
    tally.finish()
}

/// Least-squares slope of `ln gap_k` against `ln k` for `k ∈ [k_lo, k_hi]`,
/// where `gaps[k]` is the gap after `k` iterations.
pub fn loglog_slope(gaps: &[f64], k_lo: usize, k_hi: usize) -> Result<f64> {
    if k_lo < 1 || k_hi <= k_lo {
        return Err(Error::WindowUnusable(format!(
            "need 1 ≤ k_lo < k_hi, got [{k_lo}, {k_hi}]"
        )));
    }
    if k_hi >= gaps.len() {
        return Err(Error::WindowUnusable(format!(
            "window ends at {k_hi} but only {} gaps recorded",
            gaps.len()
        )));
    }
    let mut points = Vec::with_capacity(k_hi - k_lo + 1);
    for (k, &gap) in gaps.iter().enumerate().take(k_hi + 1).skip(k_lo) {
        if !(gap > 0.0) || !gap.is_finite() {
            return Err(Error::WindowUnusable(format!("gap at k = {k} is {gap}")));
        }
        points.push(((k as f64).ln(), gap.ln()));
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    Ok(sxy / sxx)
}

/// Brute-force reference for the two-cut prox subproblem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridProxResult {
    /// Largest dual value `D(θ)` over the grid; a lower bound on the primal
    /// optimum that converges quadratically in the grid spacing.
    pub best_dual: f64,
    pub best_dual_weight: f64,
    /// Smallest primal value at the grid candidates `z(θ)`; an upper bound
    /// on the optimum, but only first-order accurate.
    pub best_primal: f64,
}

/// Scans `points` equally spaced weights `θ ∈ [0, 1]` (endpoints included).
/// For each, forms `z(θ) = center − (θ g₁ + (1−θ) g₂)/ρ` and evaluates the
/// Lagrangian `θ l₁(z) + (1−θ) l₂(z) + (ρ/2)‖z − center‖²` (the dual value)
/// and the primal `max(l₁, l₂)(z) + (ρ/2)‖z − center‖²` directly.
pub fn grid_prox_search(
    model: &TwoCutModel,
    center: &[f64],
    rho: f64,
    points: usize,
) -> GridProxResult {
    let newest = &model.newest;
    let Some(agg) = &model.aggregate else {
        let z: Vec<f64> = center
            .iter()
            .zip(&newest.slope)
            .map(|(c, g)| c - g / rho)
            .collect();
        let value = newest.eval(&z) + 0.5 * rho * dist_sq(&z, center);
        return GridProxResult {
            best_dual: value,
            best_dual_weight: 1.0,
            best_primal: value,
        };
    };

    let n = center.len();
    let mut z = vec![0.0; n];
    let mut best = GridProxResult {
        best_dual: f64::NEG_INFINITY,
        best_dual_weight: 0.0,
        best_primal: f64::INFINITY,
    };
    let denom = (points.max(2) - 1) as f64;
    for i in 0..points.max(2) {
        let theta = i as f64 / denom;
        for j in 0..n {
            let g = theta * newest.slope[j] + (1.0 - theta) * agg.slope[j];
            z[j] = center[j] - g / rho;
        }
        let l1 = newest.eval(&z);
        let l2 = agg.eval(&z);
        let prox = 0.5 * rho * dist_sq(&z, center);
        let dual = theta * l1 + (1.0 - theta) * l2 + prox;
        let primal = l1.max(l2) + prox;
        if dual > best.best_dual {
            best.best_dual = dual;
            best.best_dual_weight = theta;
        }
        best.best_primal = best.best_primal.min(primal);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle_model::Cut;
    use crate::objectives::make_worst_case;
    use crate::solvers::{nesterov_agd, pbm, BundleParams, RunContext};

    #[test]
    fn slope_of_power_laws() {
        let inv: Vec<f64> = (0..200).map(|k| 3.0 / (k.max(1) as f64)).collect();
        assert!((loglog_slope(&inv, 10, 150).unwrap() + 1.0).abs() < 1e-9);
        let inv2: Vec<f64> = (0..200)
            .map(|k| 0.5 / ((k.max(1) * k.max(1)) as f64))
            .collect();
        assert!((loglog_slope(&inv2, 10, 150).unwrap() + 2.0).abs() < 1e-9);
        let flat = vec![0.25; 50];
        assert!(loglog_slope(&flat, 1, 49).unwrap().abs() < 1e-12);
    }

    #[test]
    fn slope_rejects_bad_windows() {
        let mut gaps = vec![1.0; 20];
        assert!(loglog_slope(&gaps, 0, 10).is_err());
        assert!(loglog_slope(&gaps, 5, 5).is_err());
        assert!(loglog_slope(&gaps, 5, 20).is_err());
        gaps[7] = 0.0;
        assert!(matches!(
            loglog_slope(&gaps, 5, 10),
            Err(Error::WindowUnusable(_))
        ));
    }

    #[test]
    fn first_coefficients_pass() {
        let report = check_coefficient_sequence(3);
        assert!(report.passed);
        assert_eq!(report.checked, 3);
        let a2 = ((1.0 + 5f64.sqrt()) / 2.0).powi(2);
        let seq: Vec<_> = coefficient_sequence().take(3).collect();
        assert_eq!(seq[1].total_weight, 1.0);
        assert!((seq[2].total_weight - a2).abs() < 1e-15);
        assert!(seq[2].total_weight >= 1.0);
    }

    #[test]
    fn inflated_epsilon_is_caught() {
        let f = make_worst_case(30).unwrap();
        let mut run = nesterov_agd(&f, &[0.0; 30], 20, &RunContext::named("wc")).unwrap();
        assert!(check_ahpe_condition(&run, 1.0).unwrap().passed);
        // Make one ε exceed ρ‖x − y‖²/2 by a clear margin.
        let y = run.iterations[6].y.clone().unwrap();
        let d2 = dist_sq(&run.iterations[7].x, &y);
        let row_eps = run.iterations[7].epsilon.unwrap();
        run.iterations[7].epsilon = Some(10.0 * row_eps.max(d2));
        let report = check_ahpe_condition(&run, 1.0).unwrap();
        assert!(!report.passed);
        assert_eq!(report.first_failure, Some(6));
    }

    #[test]
    fn gd_has_no_certificates() {
        let f = make_worst_case(4).unwrap();
        let run =
            crate::solvers::gradient_descent(&f, &[0.0; 4], 1.0, 3, &RunContext::named("wc"))
                .unwrap();
        assert!(matches!(
            check_ahpe_condition(&run, 1.0),
            Err(Error::NotApplicable(_))
        ));
        assert!(check_coefficients(&run).is_err());
        assert!(check_inner_bound(&run, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn inner_count_over_cap_fails() {
        let f = make_worst_case(4).unwrap();
        let mut run = pbm(
            &f,
            &[0.0; 4],
            &BundleParams::new(0.5, 1.0, 1.0),
            5,
            &RunContext::named("wc"),
        )
        .unwrap();
        let ok = check_inner_bound(&run, 1.0, 1.0, 0.5).unwrap();
        assert!(ok.passed);
        assert_eq!(ok.worst_violation, 1.0 - 512.0);
        run.iterations[3].inner_iterations = 513;
        let bad = check_inner_bound(&run, 1.0, 1.0, 0.5).unwrap();
        assert!(!bad.passed);
        assert_eq!(bad.first_failure, Some(3));
        assert_eq!(bad.worst_violation, 1.0);
    }

    #[test]
    fn tangent_model_is_minorant_and_lifted_cut_is_not() {
        // One dimension: f − tangent = (y − c)²/4, so a cut lifted by 1 is
        // above f whenever |y − c| < 2.
        let f = make_worst_case(1).unwrap();
        let center = vec![0.3];
        let tangent = crate::bundle_model::tangent_cut(&f, &center).unwrap();
        let good = ModelSnapshot {
            outer: 0,
            inner: 1,
            center: center.clone(),
            model: TwoCutModel::single(tangent.clone()),
        };
        assert!(check_model_minorant(&f, std::slice::from_ref(&good), 200, 1).passed);

        let lifted = ModelSnapshot {
            model: TwoCutModel::single(Cut {
                offset: tangent.offset + 1.0,
                ..tangent
            }),
            ..good.clone()
        };
        let report = check_model_minorant(&f, &[good, lifted], 200, 1);
        assert!(!report.passed);
        assert_eq!(report.first_failure, Some(1));
    }

    #[test]
    fn grid_brackets_symmetric_instance() {
        let model = TwoCutModel::with_aggregate(
            Cut {
                slope: vec![1.0],
                offset: 0.0,
            },
            Cut {
                slope: vec![-1.0],
                offset: 0.0,
            },
        );
        let r = grid_prox_search(&model, &[0.0], 1.0, 1001);
        assert_eq!(r.best_dual_weight, 0.5);
        assert!(r.best_dual.abs() < 1e-15);
        assert!(r.best_primal.abs() < 1e-15);
    }
}
