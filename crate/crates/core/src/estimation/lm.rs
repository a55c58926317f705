//! Box-constrained Levenberg-Marquardt.
//!
//! Minimizes `½‖r(p)‖²` with Marquardt diagonal scaling. Trial points are
//! projected onto the parameter box, and a step is accepted only when it does
//! not raise the cost, so the accepted cost sequence is non-increasing.
//! Parameters whose lower and upper bound coincide are held fixed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub trait LeastSquaresProblem {
    fn residual_count(&self) -> usize;

    fn residuals(&self, params: &[f64], out: &mut [f64]);

    /// Jacobian `∂r_i/∂p_j`, `residual_count × params.len()`. The default is
    /// a central difference that stays inside `bounds`.
    fn jacobian(&self, params: &[f64], bounds: &Bounds) -> DMatrix<f64> {
        finite_difference_jacobian(self, params, bounds)
    }
}

pub fn finite_difference_jacobian<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    params: &[f64],
    bounds: &Bounds,
) -> DMatrix<f64> {
    let m = problem.residual_count();
    let n = params.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut up = vec![0.0; m];
    let mut dn = vec![0.0; m];
    let mut p = params.to_vec();
    for j in 0..n {
        let h = 1e-6 * params[j].abs().max(1e-3);
        let hi = (params[j] + h).min(bounds.upper[j]);
        let lo = (params[j] - h).max(bounds.lower[j]);
        if hi <= lo {
            continue;
        }
        p[j] = hi;
        problem.residuals(&p, &mut up);
        p[j] = lo;
        problem.residuals(&p, &mut dn);
        p[j] = params[j];
        let span = hi - lo;
        for i in 0..m {
            jac[(i, j)] = (up[i] - dn[i]) / span;
        }
    }
    jac
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::invalid("bound vectors differ in length"));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::invalid(format!(
                    "bounds for parameter {i} are empty: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    pub fn unbounded(n: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn is_free(&self, j: usize) -> bool {
        self.lower[j] < self.upper[j]
    }

    pub fn contains(&self, params: &[f64]) -> bool {
        params
            .iter()
            .enumerate()
            .all(|(j, p)| *p >= self.lower[j] && *p <= self.upper[j])
    }

    pub fn project(&self, params: &mut [f64]) {
        for (j, p) in params.iter_mut().enumerate() {
            *p = p.clamp(self.lower[j], self.upper[j]);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost change on an accepted step.
    pub ftol: f64,
    /// Norm of the projected gradient of `½‖r‖²`.
    pub gtol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            ftol: 1e-10,
            gtol: 1e-8,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    SmallGradient,
    SmallCostChange,
    /// Damping grew without finding a non-increasing step.
    Stalled,
    MaxIterations,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Termination::SmallGradient | Termination::SmallCostChange)
    }
}

#[derive(Clone, Debug)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub cost: f64,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Cost at the start and after every accepted step.
    pub cost_history: Vec<f64>,
    pub gradient_norm: f64,
}

impl LmReport {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }
}

const MAX_LAMBDA: f64 = 1e20;

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient `Jᵀr` restricted to free parameters, with components that push
/// against an active bound zeroed.
fn projected_gradient(jac: &DMatrix<f64>, r: &[f64], params: &[f64], bounds: &Bounds) -> DVector<f64> {
    let r = DVector::from_column_slice(r);
    let mut g = jac.tr_mul(&r);
    for j in 0..params.len() {
        if !bounds.is_free(j)
            || (params[j] <= bounds.lower[j] && g[j] > 0.0)
            || (params[j] >= bounds.upper[j] && g[j] < 0.0)
        {
            g[j] = 0.0;
        }
    }
    g
}

pub fn minimize<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    initial: &[f64],
    bounds: &Bounds,
    options: &LmOptions,
) -> Result<LmReport> {
    let n = initial.len();
    if bounds.len() != n {
        return Err(Error::invalid(format!(
            "{} bounds given for {n} parameters",
            bounds.len()
        )));
    }
    if !bounds.contains(initial) {
        return Err(Error::invalid("initial parameters lie outside the bounds"));
    }
    let m = problem.residual_count();
    let free: Vec<usize> = (0..n).filter(|&j| bounds.is_free(j)).collect();

    let mut params = initial.to_vec();
    let mut r = vec![0.0; m];
    problem.residuals(&params, &mut r);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::invalid("cost is not finite at the initial parameters"));
    }
    let mut history = vec![cost];
    let mut lambda = options.initial_lambda;
    let mut iterations = 0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];

    let termination = 'outer: loop {
        let jac = problem.jacobian(&params, bounds);
        let g = projected_gradient(&jac, &r, &params, bounds);
        if g.norm() < options.gtol {
            break Termination::SmallGradient;
        }
        if iterations >= options.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let k = free.len();
        let jf = jac.select_columns(&free);
        let a = jf.tr_mul(&jf);
        let gf = DVector::from_iterator(k, free.iter().map(|&j| g[j]));
        let max_diag = a.diagonal().max();
        let floor = if max_diag > 0.0 { 1e-12 * max_diag } else { 1.0 };

        loop {
            let mut damped = a.clone();
            for d in 0..k {
                damped[(d, d)] += lambda * a[(d, d)].max(floor);
            }
            let step = solve_spd(damped, -&gf);

            trial.copy_from_slice(&params);
            if let Some(step) = step {
                for (d, &j) in free.iter().enumerate() {
                    trial[j] += step[d];
                }
            }
            bounds.project(&mut trial);

            let moved = trial.iter().zip(&params).any(|(a, b)| a != b);
            if moved {
                problem.residuals(&trial, &mut r_trial);
                let c = cost_of(&r_trial);
                if c.is_finite() && c <= cost {
                    let rel = if cost > 0.0 { (cost - c) / cost } else { 0.0 };
                    std::mem::swap(&mut params, &mut trial);
                    std::mem::swap(&mut r, &mut r_trial);
                    cost = c;
                    history.push(cost);
                    lambda = (lambda / 10.0).max(1e-15);
                    if rel < options.ftol {
                        break 'outer Termination::SmallCostChange;
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > MAX_LAMBDA {
                break 'outer Termination::Stalled;
            }
        }
    };

    let jacobian = problem.jacobian(&params, bounds);
    let gradient_norm = projected_gradient(&jacobian, &r, &params, bounds).norm();
    Ok(LmReport {
        params,
        cost,
        residuals: r,
        jacobian,
        iterations,
        termination,
        cost_history: history,
        gradient_norm,
    })
}

fn solve_spd(m: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Some(chol.solve(&b));
    }
    m.svd(true, true).solve(&b, 1e-14).ok()
}

/// Parameter standard errors from the Jacobian at the optimum,
/// `cov = s²·(JᵀJ)⁻¹` with `s² = ‖r‖²/(m − k)`.
#[derive(Clone, Debug)]
pub struct Uncertainty {
    pub std_errors: Vec<f64>,
    pub rank_deficient: bool,
}

pub fn standard_errors(report: &LmReport, bounds: &Bounds) -> Uncertainty {
    let n = report.params.len();
    let m = report.residuals.len();
    let free: Vec<usize> = (0..n).filter(|&j| bounds.is_free(j)).collect();
    let k = free.len();
    let mut std_errors = vec![0.0; n];
    if k == 0 {
        return Uncertainty {
            std_errors,
            rank_deficient: false,
        };
    }
    let dof = m.saturating_sub(k);
    let s2 = if dof > 0 {
        2.0 * report.cost / dof as f64
    } else {
        f64::NAN
    };

    let mut jf = report.jacobian.select_columns(&free);
    let norms: Vec<f64> = (0..k).map(|c| jf.column(c).norm()).collect();
    for (c, &nrm) in norms.iter().enumerate() {
        if nrm > 0.0 {
            jf.column_mut(c).unscale_mut(nrm);
        }
    }
    let svd = jf.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let s_max = svd.singular_values.max();
    let tol = 1e-10 * s_max.max(f64::MIN_POSITIVE);

    let mut inflated = vec![false; k];
    let mut rank_deficient = false;
    for (c, &nrm) in norms.iter().enumerate() {
        if nrm == 0.0 {
            inflated[c] = true;
            rank_deficient = true;
        }
    }
    let mut cov_diag = vec![0.0; k];
    for (idx, &sv) in svd.singular_values.iter().enumerate() {
        let row = v_t.row(idx);
        if sv <= tol {
            rank_deficient = true;
            for c in 0..k {
                if row[c].abs() > 1e-6 {
                    inflated[c] = true;
                }
            }
        } else {
            for c in 0..k {
                cov_diag[c] += row[c] * row[c] / (sv * sv);
            }
        }
    }
    for (c, &j) in free.iter().enumerate() {
        std_errors[j] = if inflated[c] {
            f64::INFINITY
        } else {
            (s2 * cov_diag[c]).sqrt() / norms[c]
        };
    }
    Uncertainty {
        std_errors,
        rank_deficient,
    }
}
