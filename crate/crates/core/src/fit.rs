//! Least-squares fitting of the rational mapping `phi(eta)`.
//!
//! Two stages. Initialization multiplies through by the denominator, which
//! turns the model linear in the six coefficients, and solves the 6x6 normal
//! equations by Gaussian elimination with partial pivoting. Refinement runs
//! Levenberg-Marquardt on the true residuals `phi(eta_i) - perf_i` with an
//! analytic Jacobian, damping factor starting at 1e-3, multiplied by 10 on a
//! rejected step and divided by 10 on an accepted one.

use crate::error::{Error, Result};
use crate::stii::{FitPoint, MappingFunction};

const MIN_DISTINCT_POINTS: usize = 6;
const MAX_ITERATIONS: usize = 200;
const RELATIVE_RESIDUAL_STOP: f64 = 1e-10;
const INITIAL_DAMPING: f64 = 1e-3;
const MAX_DAMPING: f64 = 1e12;

/// Fits the six mapping coefficients to measured points. The fit domain of
/// the returned function is the data's eta range; a denominator root inside
/// that range is rejected as unstable.
///
/// Refinement runs from two starts: the linearized solution, and a plain
/// cubic with the denominator pinned to `eta^2 + 1` (no real roots). On
/// noisy data the linearized start sometimes converges to a fit with a pole
/// between data points; the pole-free start covers that case, and the
/// lowest-cost stable candidate wins.
pub fn fit_rational(points: &[FitPoint]) -> Result<MappingFunction> {
    let distinct = count_distinct_eta(points);
    if distinct < MIN_DISTINCT_POINTS {
        return Err(Error::InsufficientData {
            got: distinct,
            need: MIN_DISTINCT_POINTS,
        });
    }
    let (lo, hi) = eta_range(points);

    let starts = [linearized_init(points)?, polynomial_init(points)?];
    let mut best: Option<(MappingFunction, f64)> = None;
    let mut first_rejection = None;
    for start in starts {
        let mut theta = start;
        if levenberg_marquardt(points, &mut theta, (lo, hi)).is_err() {
            continue;
        }
        let Some(c) = cost(points, &theta) else {
            continue;
        };
        let p = [theta[0], theta[1], theta[2], theta[3]];
        let q = [theta[4], theta[5]];
        match MappingFunction::new(p, q, [lo, hi], "fitted") {
            Ok(mapping) => {
                if best.as_ref().is_none_or(|(_, best_cost)| c < *best_cost) {
                    best = Some((mapping, c));
                }
            }
            Err(e) => {
                first_rejection.get_or_insert(e);
            }
        }
    }
    match best {
        Some((mapping, _)) => Ok(mapping),
        None => Err(first_rejection
            .unwrap_or_else(|| Error::NumericalFailure("no usable rational fit".into()))),
    }
}

fn count_distinct_eta(points: &[FitPoint]) -> usize {
    let mut etas: Vec<f64> = points.iter().map(|p| p.eta).collect();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    etas.len()
}

fn eta_range(points: &[FitPoint]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in points {
        lo = lo.min(p.eta);
        hi = hi.max(p.eta);
    }
    (lo, hi)
}

/// Multiplying `phi(eta) = perf` through by the denominator gives
///
/// ```text
/// p1 e^3 + p2 e^2 + p3 e + p4 - perf q1 e - perf q2 = perf e^2
/// ```
///
/// one linear equation per point in the six unknowns.
fn linearized_init(points: &[FitPoint]) -> Result<[f64; 6]> {
    let mut normal = [[0.0; 6]; 6];
    let mut rhs = [0.0; 6];
    for pt in points {
        let e = pt.eta;
        let row = [
            e * e * e,
            e * e,
            e,
            1.0,
            -pt.performance * e,
            -pt.performance,
        ];
        let target = pt.performance * e * e;
        for i in 0..6 {
            rhs[i] += row[i] * target;
            for j in 0..6 {
                normal[i][j] += row[i] * row[j];
            }
        }
    }
    solve(normal, rhs).ok_or_else(|| {
        Error::NumericalFailure("singular normal equations in linearized fit".into())
    })
}

/// Plain cubic least squares with the denominator pinned to `eta^2 + 1`:
/// the numerator solves `num(eta) ~ perf * (eta^2 + 1)` in the four p's.
fn polynomial_init(points: &[FitPoint]) -> Result<[f64; 6]> {
    let mut normal = [[0.0; 4]; 4];
    let mut rhs = [0.0; 4];
    for pt in points {
        let e = pt.eta;
        let row = [e * e * e, e * e, e, 1.0];
        let target = pt.performance * (e * e + 1.0);
        for i in 0..4 {
            rhs[i] += row[i] * target;
            for j in 0..4 {
                normal[i][j] += row[i] * row[j];
            }
        }
    }
    let p = solve(normal, rhs).ok_or_else(|| {
        Error::NumericalFailure("singular normal equations in polynomial fallback".into())
    })?;
    Ok([p[0], p[1], p[2], p[3], 0.0, 1.0])
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot_row = (col..N).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            a[row][col] = 0.0;
            for k in col + 1..N {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for k in row + 1..N {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Sum of squared residuals, or None when the denominator vanishes at a data
/// point (such a step is rejected).
fn cost(points: &[FitPoint], theta: &[f64; 6]) -> Option<f64> {
    let p = [theta[0], theta[1], theta[2], theta[3]];
    let q = [theta[4], theta[5]];
    let mut total = 0.0;
    for pt in points {
        let value = MappingFunction::eval_unchecked(&p, &q, pt.eta);
        if !value.is_finite() {
            return None;
        }
        let r = value - pt.performance;
        total += r * r;
    }
    Some(total)
}

fn levenberg_marquardt(points: &[FitPoint], theta: &mut [f64; 6], range: (f64, f64)) -> Result<()> {
    let mut damping = INITIAL_DAMPING;
    let mut current_cost = cost(points, theta).ok_or_else(|| {
        Error::NumericalFailure("initialization lands on a denominator root".into())
    })?;

    for _ in 0..MAX_ITERATIONS {
        let (jtj, jtr) = normal_system(points, theta);

        let mut accepted = false;
        while damping <= MAX_DAMPING {
            // Marquardt scaling: damp each diagonal entry proportionally.
            let mut lhs = jtj;
            for i in 0..6 {
                lhs[i][i] += damping * jtj[i][i].max(1e-12);
            }
            let mut rhs = [0.0; 6];
            for i in 0..6 {
                rhs[i] = -jtr[i];
            }
            let Some(step) = solve(lhs, rhs) else {
                damping *= 10.0;
                continue;
            };
            let mut candidate = *theta;
            for i in 0..6 {
                candidate[i] += step[i];
            }
            // Steps that would put a denominator root inside the data range
            // are rejected like uphill steps: rational least squares loves
            // spurious poles between data points, and a pole-free start must
            // stay pole-free.
            let stable =
                crate::stii::denominator_root_in([candidate[4], candidate[5]], range.0, range.1)
                    .is_none();
            match cost(points, &candidate) {
                Some(new_cost) if stable && new_cost <= current_cost => {
                    let relative_drop = (current_cost - new_cost) / current_cost.max(1e-300);
                    *theta = candidate;
                    current_cost = new_cost;
                    damping = (damping / 10.0).max(1e-15);
                    accepted = true;
                    if relative_drop < RELATIVE_RESIDUAL_STOP {
                        return Ok(());
                    }
                    break;
                }
                _ => damping *= 10.0,
            }
        }
        if !accepted {
            // No downhill step exists at any damping; the current point is
            // as converged as the data allows.
            return Ok(());
        }
    }
    Ok(())
}

/// J^T J and J^T r for the residuals `phi(eta_i) - perf_i`.
///
/// With `num = p1 e^3 + p2 e^2 + p3 e + p4` and `den = e^2 + q1 e + q2`:
/// d phi/d p_j = e^(3-j)/den, d phi/d q1 = -num e / den^2,
/// d phi/d q2 = -num / den^2.
fn normal_system(points: &[FitPoint], theta: &[f64; 6]) -> ([[f64; 6]; 6], [f64; 6]) {
    let p = [theta[0], theta[1], theta[2], theta[3]];
    let q = [theta[4], theta[5]];
    let mut jtj = [[0.0; 6]; 6];
    let mut jtr = [0.0; 6];
    for pt in points {
        let e = pt.eta;
        let den = (e + q[0]) * e + q[1];
        let num = ((p[0] * e + p[1]) * e + p[2]) * e + p[3];
        let value = num / den;
        let residual = value - pt.performance;
        let den2 = den * den;
        let row = [
            e * e * e / den,
            e * e / den,
            e / den,
            1.0 / den,
            -num * e / den2,
            -num / den2,
        ];
        for i in 0..6 {
            jtr[i] += row[i] * residual;
            for j in 0..6 {
                jtj[i][j] += row[i] * row[j];
            }
        }
    }
    (jtj, jtr)
}
