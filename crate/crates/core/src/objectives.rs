//! Objective oracles and the two benchmark quadratics.
//!
//! Both benchmark objectives are convex quadratics `f(x) = ½xᵀQx − ⟨b, x⟩`.
//! The worst-case family keeps `Q` implicit (constant tridiagonal), so one
//! oracle call on `n = 500` costs `O(n)`; the random family stores `Q` dense.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::vecops::{axpy, dot, norm};

/// First-order oracle for a convex, `M`-smooth function on `ℝⁿ`.
///
/// Implementations are immutable after construction and must be pure, so a
/// single oracle can be shared by concurrent solver runs.
pub trait ObjectiveOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Lipschitz constant `M` of the gradient.
    fn smoothness(&self) -> f64;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `(f(x), ∇f(x))`. Must return bit-for-bit the same numbers as
    /// [`value`](Self::value) and [`gradient`](Self::gradient).
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }
}

impl<T: ObjectiveOracle + ?Sized> ObjectiveOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn smoothness(&self) -> f64 {
        (**self).smoothness()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Hessian {
    /// Constant `diag` on the diagonal, `off` on both off-diagonals.
    Tridiagonal { diag: f64, off: f64 },
    /// Row-major `n × n`.
    Dense(Vec<f64>),
}

/// `f(x) = ½xᵀQx − ⟨b, x⟩` with `Q` symmetric positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObjective {
    n: usize,
    hessian: Hessian,
    linear: Vec<f64>,
    smoothness: f64,
}

impl QuadraticObjective {
    /// Builds a dense quadratic. `q` is row-major `n × n`.
    pub fn dense(q: Vec<f64>, linear: Vec<f64>, smoothness: f64) -> Result<Self> {
        let n = linear.len();
        if n == 0 {
            return Err(Error::EmptyDimension);
        }
        check_dim(n * n, q.len())?;
        if !(smoothness > 0.0) {
            return Err(Error::InvalidParameter {
                name: "smoothness",
                value: smoothness,
                reason: "must be positive",
            });
        }
        Ok(QuadraticObjective {
            n,
            hessian: Hessian::Dense(q),
            linear,
            smoothness,
        })
    }

    /// `Q x`.
    pub fn apply_hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        match &self.hessian {
            Hessian::Tridiagonal { diag, off } => {
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let left = if i > 0 { x[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                    out.push(diag * x[i] + off * (left + right));
                }
                out
            }
            Hessian::Dense(q) => q.chunks_exact(n).map(|row| dot(row, x)).collect(),
        }
    }

    pub fn hessian_entry(&self, i: usize, j: usize) -> f64 {
        match &self.hessian {
            Hessian::Tridiagonal { diag, off } => {
                if i == j {
                    *diag
                } else if i.abs_diff(j) == 1 {
                    *off
                } else {
                    0.0
                }
            }
            Hessian::Dense(q) => q[i * self.n + j],
        }
    }

    /// Row-major dense copy of `Q`.
    pub fn hessian_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.hessian_entry(i, j);
            }
        }
        out
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.linear
    }

    pub fn is_tridiagonal(&self) -> bool {
        matches!(self.hessian, Hessian::Tridiagonal { .. })
    }

    fn eval_with_product(&self, x: &[f64], qx: &[f64]) -> f64 {
        0.5 * dot(x, qx) - dot(&self.linear, x)
    }
}

impl ObjectiveOracle for QuadraticObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn value(&self, x: &[f64]) -> f64 {
        let qx = self.apply_hessian(x);
        self.eval_with_product(x, &qx)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.apply_hessian(x);
        axpy(-1.0, &self.linear, &mut g);
        g
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut g = self.apply_hessian(x);
        let f = self.eval_with_product(x, &g);
        axpy(-1.0, &self.linear, &mut g);
        (f, g)
    }
}

/// Nesterov's worst-case quadratic `f(x) = ⅛xᵀLx − ¼⟨x, e₁⟩`, where `L` has
/// 2 on the diagonal and −1 on both off-diagonals.
///
/// `‖¼L‖ < 1`, and the smoothness constant is fixed at `M = 1`.
pub fn make_worst_case(n: usize) -> Result<QuadraticObjective> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut linear = vec![0.0; n];
    linear[0] = 0.25;
    Ok(QuadraticObjective {
        n,
        hessian: Hessian::Tridiagonal {
            diag: 0.5,
            off: -0.25,
        },
        linear,
        smoothness: 1.0,
    })
}

/// Largest eigenvalue of a symmetric PSD row-major matrix by power iteration,
/// stopped once the Rayleigh quotient changes by at most `1e-10` relative.
pub fn power_iteration_norm(q: &[f64], n: usize) -> f64 {
    const REL_TOL: f64 = 1e-10;
    const MAX_ITERS: usize = 100_000;

    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERS {
        let w: Vec<f64> = q.chunks_exact(n).map(|row| dot(row, &v)).collect();
        let next = dot(&v, &w);
        let len = norm(&w);
        if len == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / len).collect();
        if (next - lambda).abs() <= REL_TOL * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// `f(x) = ½xᵀQx` with `Q = AᵀA / ‖AᵀA‖_op`, `A` an `n × n` matrix of
/// seeded standard-normal entries. Smoothness is 1.
pub fn make_random_psd_quadratic(n: usize, seed: u64) -> Result<QuadraticObjective> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    let mut rng = rng::stream(seed, rng::MATRIX_STREAM);
    let a = rng::standard_normal_vec(&mut rng, n * n);

    // AᵀA, filled symmetrically.
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|r| a[r * n + i] * a[r * n + j]).sum();
            gram[i * n + j] = s;
            gram[j * n + i] = s;
        }
    }
    let top = power_iteration_norm(&gram, n);
    if !(top > 0.0) {
        return Err(Error::InvalidParameter {
            name: "seed",
            value: seed as f64,
            reason: "random Gram matrix is zero",
        });
    }
    for q in &mut gram {
        *q /= top;
    }
    QuadraticObjective::dense(gram, vec![0.0; n], 1.0)
}

/// Minimizer and minimum value of a quadratic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Solves `Qx = b` exactly for the tridiagonal family and by conjugate
/// gradients otherwise, to residual `‖Qx − b‖ ≤ 1e-12 (1 + ‖b‖)`.
pub fn quadratic_optimum(obj: &QuadraticObjective) -> Result<Optimum> {
    let n = obj.n;
    let b = &obj.linear;
    let tol = 1e-12 * (1.0 + norm(b));

    let point = match &obj.hessian {
        Hessian::Tridiagonal { diag, off } => solve_constant_tridiagonal(*diag, *off, b),
        Hessian::Dense(_) => conjugate_gradient(obj, b, tol, 10 * n)?,
    };

    let mut residual = obj.apply_hessian(&point);
    axpy(-1.0, b, &mut residual);
    if !(norm(&residual) <= tol) {
        return Err(Error::OptimumUnavailable { iterations: 10 * n });
    }
    let value = obj.value(&point);
    Ok(Optimum { point, value })
}

/// Thomas algorithm for a constant-coefficient tridiagonal system.
fn solve_constant_tridiagonal(diag: f64, off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let m = diag - off * c[i - 1];
        c[i] = off / m;
        d[i] = (rhs[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn conjugate_gradient(
    obj: &QuadraticObjective,
    b: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iters {
        if rr.sqrt() <= tol {
            return Ok(x);
        }
        let qp = obj.apply_hessian(&p);
        let pqp = dot(&p, &qp);
        if !(pqp > 0.0) {
            break;
        }
        let alpha = rr / pqp;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &qp, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_next;
    }
    if rr.sqrt() <= tol {
        Ok(x)
    } else {
        Err(Error::OptimumUnavailable {
            iterations: max_iters,
        })
    }
}

/// CLI-addressable objective: `worst-case:<n>` or `psd-quad:<n>:<seed>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectiveSpec {
    WorstCase { n: usize },
    PsdQuadratic { n: usize, seed: u64 },
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<QuadraticObjective> {
        match *self {
            ObjectiveSpec::WorstCase { n } => make_worst_case(n),
            ObjectiveSpec::PsdQuadratic { n, seed } => make_random_psd_quadratic(n, seed),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ObjectiveSpec::WorstCase { n } | ObjectiveSpec::PsdQuadratic { n, .. } => n,
        }
    }

    /// Starting point used by the experiments: the origin for the worst-case
    /// family, uniform on `[0, 1]ⁿ` (seeded) for random quadratics, whose
    /// minimizer is the origin.
    pub fn default_start(&self) -> Vec<f64> {
        match *self {
            ObjectiveSpec::WorstCase { n } => vec![0.0; n],
            ObjectiveSpec::PsdQuadratic { n, seed } => {
                let mut rng = rng::stream(seed, rng::START_STREAM);
                rng::uniform_vec(&mut rng, n, 0.0, 1.0)
            }
        }
    }
}

impl fmt::Display for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveSpec::WorstCase { n } => write!(f, "worst-case:{n}"),
            ObjectiveSpec::PsdQuadratic { n, seed } => write!(f, "psd-quad:{n}:{seed}"),
        }
    }
}

impl FromStr for ObjectiveSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownObjective(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let positive = |p: &str| match p.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(unknown()),
        };
        match parts.as_slice() {
            ["worst-case", n] => Ok(ObjectiveSpec::WorstCase { n: positive(n)? }),
            ["psd-quad", n, seed] => Ok(ObjectiveSpec::PsdQuadratic {
                n: positive(n)?,
                seed: seed.parse().map_err(|_| unknown())?,
            }),
            _ => Err(unknown()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_case_n3_matches_explicit_matrix() {
        let f = make_worst_case(3).unwrap();
        let expected = [
            [0.5, -0.25, 0.0],
            [-0.25, 0.5, -0.25],
            [0.0, -0.25, 0.5],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert_eq!(f.hessian_entry(i, j), e);
            }
        }
        assert_eq!(f.linear_term(), &[0.25, 0.0, 0.0]);
        assert_eq!(f.smoothness(), 1.0);
    }

    #[test]
    fn worst_case_origin() {
        let f = make_worst_case(7).unwrap();
        let zero = vec![0.0; 7];
        assert_eq!(f.value(&zero), 0.0);
        let g = f.gradient(&zero);
        assert_eq!(g[0], -0.25);
        assert!(g[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(make_worst_case(0), Err(Error::EmptyDimension)));
        assert!(matches!(
            make_random_psd_quadratic(0, 1),
            Err(Error::EmptyDimension)
        ));
    }

    #[test]
    fn random_quadratic_is_deterministic() {
        let a = make_random_psd_quadratic(100, 7).unwrap();
        let b = make_random_psd_quadratic(100, 7).unwrap();
        assert_eq!(a, b);
        let c = make_random_psd_quadratic(100, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_quadratic_vanishes_at_origin() {
        let f = make_random_psd_quadratic(20, 3).unwrap();
        let zero = vec![0.0; 20];
        assert_eq!(f.value(&zero), 0.0);
        assert!(f.gradient(&zero).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn worst_case_one_dimensional_optimum() {
        // f(x) = x²/4 − x/4: grid search over [−2, 2] as the oracle.
        let f = make_worst_case(1).unwrap();
        let (mut best_x, mut best_f) = (0.0, f64::INFINITY);
        for i in 0..=400_000 {
            let x = -2.0 + 4.0 * i as f64 / 400_000.0;
            let v = x * x / 4.0 - x / 4.0;
            if v < best_f {
                best_f = v;
                best_x = x;
            }
        }
        let opt = quadratic_optimum(&f).unwrap();
        assert!((opt.point[0] - best_x).abs() < 1e-5);
        assert!((opt.value - best_f).abs() < 1e-12);
        assert_eq!(opt.point[0], 0.5);
        assert_eq!(opt.value, -1.0 / 16.0);
    }

    #[test]
    fn psd_optimum_is_origin() {
        let f = make_random_psd_quadratic(10, 11).unwrap();
        let opt = quadratic_optimum(&f).unwrap();
        assert!(opt.point.iter().all(|&x| x == 0.0));
        assert_eq!(opt.value, 0.0);
    }

    #[test]
    fn dense_cg_solves_nonzero_rhs() {
        // Q = diag(1, 2, 4), b = (1, 1, 1) → x⋆ = (1, ½, ¼).
        let q = vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 4.0];
        let f = QuadraticObjective::dense(q, vec![1.0; 3], 4.0).unwrap();
        let opt = quadratic_optimum(&f).unwrap();
        for (x, e) in opt.point.iter().zip([1.0, 0.5, 0.25]) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_inconsistent_system_reports_unavailable() {
        // Q = diag(1, 0), b = (0, 1): b is outside the range of Q.
        let q = vec![1.0, 0.0, 0.0, 0.0];
        let f = QuadraticObjective::dense(q, vec![0.0, 1.0], 1.0).unwrap();
        assert!(matches!(
            quadratic_optimum(&f),
            Err(Error::OptimumUnavailable { .. })
        ));
    }

    #[test]
    fn objective_names_parse() {
        assert_eq!(
            "worst-case:500".parse::<ObjectiveSpec>().unwrap(),
            ObjectiveSpec::WorstCase { n: 500 }
        );
        assert_eq!(
            "psd-quad:100:7".parse::<ObjectiveSpec>().unwrap(),
            ObjectiveSpec::PsdQuadratic { n: 100, seed: 7 }
        );
        for bad in ["worst-case", "worst-case:0", "psd-quad:3", "nope:1", "psd-quad:2:x"] {
            assert!(bad.parse::<ObjectiveSpec>().is_err(), "{bad}");
        }
        let spec = ObjectiveSpec::PsdQuadratic { n: 4, seed: 9 };
        assert_eq!(spec.to_string().parse::<ObjectiveSpec>().unwrap(), spec);
    }

    #[test]
    fn psd_start_is_in_unit_cube_and_seeded() {
        let spec = ObjectiveSpec::PsdQuadratic { n: 100, seed: 7 };
        let x0 = spec.default_start();
        assert_eq!(x0, spec.default_start());
        assert!(x0.iter().all(|&x| (0.0..1.0).contains(&x)));
        assert_eq!(
            ObjectiveSpec::WorstCase { n: 3 }.default_start(),
            vec![0.0; 3]
        );
    }
}
