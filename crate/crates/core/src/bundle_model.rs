//! Cutting-plane models and the closed-form proximal subproblem.
//!
//! A [`Cut`] is an affine minorant stored anchor-free as `l(y) = c + ⟨g, y⟩`.
//! The [`TwoCutModel`] keeps at most two cuts: the tangent at the newest
//! trial point and the aggregate of the previous model. Its proximal
//! subproblem reduces to a one-dimensional concave dual in the convex weight
//! θ between the two slopes, which has a closed-form maximizer.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::objectives::ObjectiveOracle;
use crate::vecops::{dot, norm_sq};

/// Affine function `y ↦ offset + ⟨slope, y⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl Cut {
    /// The affine function through `(anchor, value)` with the given slope.
    pub fn anchored(anchor: &[f64], value: f64, slope: Vec<f64>) -> Cut {
        let offset = value - dot(&slope, anchor);
        Cut { slope, offset }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.offset + dot(&self.slope, y)
    }

    pub fn dim(&self) -> usize {
        self.slope.len()
    }
}

/// Tangent cut `f(z) + ⟨∇f(z), y − z⟩`.
pub fn tangent_cut<O: ObjectiveOracle + ?Sized>(oracle: &O, z: &[f64]) -> Result<Cut> {
    check_dim(oracle.dim(), z.len())?;
    let (f, g) = oracle.value_and_gradient(z);
    Ok(Cut::anchored(z, f, g))
}

/// Aggregate cut `f̃(z) + ⟨s, y − z⟩` with `s = ρ(center − z)`, where `z`
/// minimized the previous model's prox subproblem at `center`.
pub fn aggregate_cut(center: &[f64], z: &[f64], rho: f64, model_value_at_z: f64) -> Cut {
    debug_assert_eq!(center.len(), z.len());
    let slope: Vec<f64> = center.iter().zip(z).map(|(c, zi)| rho * (c - zi)).collect();
    Cut::anchored(z, model_value_at_z, slope)
}

/// `max(newest, aggregate)`; the aggregate is absent on the first inner step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoCutModel {
    pub newest: Cut,
    pub aggregate: Option<Cut>,
}

impl TwoCutModel {
    pub fn single(cut: Cut) -> Self {
        TwoCutModel {
            newest: cut,
            aggregate: None,
        }
    }

    pub fn with_aggregate(newest: Cut, aggregate: Cut) -> Self {
        debug_assert_eq!(newest.dim(), aggregate.dim());
        TwoCutModel {
            newest,
            aggregate: Some(aggregate),
        }
    }

    pub fn dim(&self) -> usize {
        self.newest.dim()
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let head = self.newest.eval(y);
        match &self.aggregate {
            Some(agg) => head.max(agg.eval(y)),
            None => head,
        }
    }
}

/// Value of the model at `y`.
pub fn model_eval(model: &TwoCutModel, y: &[f64]) -> Result<f64> {
    check_dim(model.dim(), y.len())?;
    Ok(model.eval(y))
}

/// Minimizer of `f̃(y) + (ρ/2)‖y − center‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxSolution {
    pub point: Vec<f64>,
    /// `f̃(point)`.
    pub model_value: f64,
    /// Weight on the newest cut's slope (1 for a single-cut model).
    pub weight: f64,
    /// Optimal value of the dual, equal to the primal optimum
    /// `model_value + (ρ/2)‖point − center‖²` in exact arithmetic.
    pub dual_value: f64,
}

impl ProxSolution {
    /// Primal subproblem value at the returned point.
    pub fn subproblem_value(&self, center: &[f64], rho: f64) -> f64 {
        let d: f64 = self
            .point
            .iter()
            .zip(center)
            .map(|(z, c)| (z - c) * (z - c))
            .sum();
        self.model_value + 0.5 * rho * d
    }
}

pub fn solve_prox(model: &TwoCutModel, center: &[f64], rho: f64) -> Result<ProxSolution> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "must be positive",
        });
    }
    check_dim(model.dim(), center.len())?;

    let newest = &model.newest;
    let Some(agg) = &model.aggregate else {
        let point: Vec<f64> = center
            .iter()
            .zip(&newest.slope)
            .map(|(c, g)| c - g / rho)
            .collect();
        let model_value = newest.eval(&point);
        let dual_value = newest.eval(center) - norm_sq(&newest.slope) / (2.0 * rho);
        return Ok(ProxSolution {
            point,
            model_value,
            weight: 1.0,
            dual_value,
        });
    };

    // Dual: maximize D(θ) = l_θ(center) − ‖g_θ‖² / (2ρ) over θ ∈ [0, 1] with
    // g_θ = θ g₁ + (1 − θ) g₂. D is a concave quadratic in θ.
    let (g1, g2) = (&newest.slope, &agg.slope);
    let diff: Vec<f64> = g1.iter().zip(g2).map(|(a, b)| a - b).collect();
    let diff_sq = norm_sq(&diff);
    let weight = if diff_sq == 0.0 {
        1.0
    } else {
        let gap = newest.eval(center) - agg.eval(center);
        ((rho * gap - dot(g2, &diff)) / diff_sq).clamp(0.0, 1.0)
    };

    let slope: Vec<f64> = g1
        .iter()
        .zip(g2)
        .map(|(a, b)| weight * a + (1.0 - weight) * b)
        .collect();
    let point: Vec<f64> = center.iter().zip(&slope).map(|(c, g)| c - g / rho).collect();
    let combined_at_center =
        weight * newest.eval(center) + (1.0 - weight) * agg.eval(center);
    let dual_value = combined_at_center - norm_sq(&slope) / (2.0 * rho);
    let model_value = model.eval(&point);
    Ok(ProxSolution {
        point,
        model_value,
        weight,
        dual_value,
    })
}
