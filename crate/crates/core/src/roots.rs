//! Bracketed Newton solvers for the transcendental equations behind the rate
//! functions, plus the Hartman-Watson auxiliary function F.
//!
//! All equations are solved in normalized form (residual is dimensionless and
//! O(1) across the whole input range), e.g. `sinh(x)/(x c) - 1 = 0` rather
//! than `sinh(x)/x - c = 0`. The `residual` reported in [`SolveResult`] is the
//! absolute value of that normalized residual.

use crate::error::{Result, SabrError};

/// Residual bound every solver must meet before returning `Ok`.
pub const RESIDUAL_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

/// Root of a transcendental equation together with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveResult {
    pub root: f64,
    pub iterations: usize,
    /// Absolute value of the normalized equation residual at `root`.
    pub residual: f64,
}

/// Newton iteration safeguarded by a sign-change bracket.
///
/// `f` returns `(value, derivative)` of the normalized equation. The bracket
/// `[lo, hi]` must contain a sign change; steps that leave the bracket fall
/// back to bisection. Iterates until the residual stops improving, so the
/// returned root is machine-limited rather than tolerance-limited.
fn bracketed_newton<F>(f: F, lo: f64, hi: f64, seed: f64) -> (f64, usize, f64)
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, _) = f(lo);
    let mut x = seed.clamp(lo, hi);
    let mut best_x = x;
    let mut best_res = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=MAX_ITER {
        iterations = it;
        let (fx, dfx) = f(x);
        if fx.abs() < best_res {
            best_res = fx.abs();
            best_x = x;
        }
        if fx == 0.0 {
            break;
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            let (fx, _) = f(x);
            if fx.abs() < best_res {
                best_res = fx.abs();
                best_x = x;
            }
            break;
        }
    }
    (best_x, iterations, best_res)
}

/// Crate-internal access to the Newton driver for equation families that
/// manage their own residual scaling (the J_X stationarity equations).
pub(crate) fn bracketed_newton_raw<F>(f: &F, lo: f64, hi: f64, seed: f64) -> (f64, usize, f64)
where
    F: Fn(f64) -> (f64, f64),
{
    bracketed_newton(f, lo, hi, seed)
}

fn finish(op: &str, root: f64, iterations: usize, residual: f64) -> Result<SolveResult> {
    if residual.abs() <= RESIDUAL_TOL {
        Ok(SolveResult {
            root,
            iterations,
            residual: residual.abs(),
        })
    } else {
        Err(SabrError::SolverFailure {
            message: format!("{op}: residual {residual:.3e} above {RESIDUAL_TOL:.0e} after {iterations} iterations (root {root:.6e})"),
        })
    }
}

/// `sinh(x)/x` with the removable singularity at zero filled in.
pub(crate) fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 6.0 * (1.0 + x2 / 20.0)
    } else {
        x.sinh() / x
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Solves `sinh(xi)/xi = c` for `xi >= 0`, `c >= 1`.
///
/// The root is monotone increasing in `c`; `c = 1` returns 0 exactly. Near
/// the branch point the double root stalls Newton, so a series seed
/// `xi ~ sqrt(6(c-1))` is used (and returned directly for `c - 1 < 1e-8`).
pub fn solve_sinhc(c: f64) -> Result<SolveResult> {
    if !c.is_finite() || c < 1.0 {
        return Err(SabrError::invalid(format!(
            "solve_sinhc requires c >= 1, got {c}"
        )));
    }
    if c == 1.0 {
        return Ok(SolveResult {
            root: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    // sinh x/x = 1 + x^2/6 (1 + x^2/20) inverted to second order
    let mut x2 = 6.0 * (c - 1.0);
    x2 = 6.0 * (c - 1.0) / (1.0 + x2 / 20.0);
    let seed = x2.sqrt();
    if c - 1.0 < 1e-8 {
        let residual = sinhc(seed) / c - 1.0;
        return finish("solve_sinhc", seed, 0, residual);
    }
    // asinh-based asymptotics keep the upper bracket tight for large c
    let l = (2.0 * c).ln();
    let hi = (l + l.max(1.0).ln() + 5.0).max(50.0);
    let f = |x: f64| {
        let v = sinhc(x) / c - 1.0;
        let d = (x.cosh() - sinhc(x)) / (x * c);
        (v, d)
    };
    let (root, iterations, residual) = bracketed_newton(f, 1e-300, hi, seed.min(hi));
    finish("solve_sinhc", root, iterations, residual)
}

/// Solves `sin(lambda)/lambda = r` on `lambda in [0, pi)` for `0 < r <= 1`.
///
/// Monotone decreasing in `r`; `r = 1` returns 0 exactly.
pub fn solve_sinc(r: f64) -> Result<SolveResult> {
    if !r.is_finite() || r <= 0.0 || r > 1.0 {
        return Err(SabrError::invalid(format!(
            "solve_sinc requires 0 < r <= 1, got {r}"
        )));
    }
    if r == 1.0 {
        return Ok(SolveResult {
            root: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let pi = std::f64::consts::PI;
    let mut x2 = 6.0 * (1.0 - r);
    x2 = 6.0 * (1.0 - r) / (1.0 - x2 / 20.0);
    let seed = x2.sqrt();
    if 1.0 - r < 1e-8 {
        let residual = sinc(seed) / r - 1.0;
        return finish("solve_sinc", seed, 0, residual);
    }
    // For roots close to pi the direct residual sin(lambda)/(lambda r) - 1
    // hits a relative-precision wall (sin loses digits near pi), so solve in
    // the reflected angle d = pi - lambda where sin(d) is fully accurate:
    // sin(d) = (pi - d) r.
    if r <= 0.18 {
        let f = |d: f64| {
            let v = d.sin() / ((pi - d) * r) - 1.0;
            let dv = (d.cos() * (pi - d) + d.sin()) / ((pi - d) * (pi - d) * r);
            (v, dv)
        };
        // sin d ~ (pi - d) r gives d ~ pi r/(1 + r)
        let seed = pi * r / (1.0 + r);
        let (d, iterations, residual) = bracketed_newton(f, 1e-300, 1.2, seed);
        return finish("solve_sinc", pi - d, iterations, residual);
    }
    let f = |x: f64| {
        let v = sinc(x) / r - 1.0;
        let d = (x.cos() - sinc(x)) / (x * r);
        (v, d)
    };
    let (root, iterations, residual) = bracketed_newton(f, 1e-15, pi - 1e-15, seed);
    finish("solve_sinc", root, iterations, residual)
}

/// Solves `sin(2 lambda)/(2 lambda) = x` on `lambda in [0, pi/2)`.
///
/// Same equation family as [`solve_sinc`] with the argument halved.
pub fn solve_sinc2(x: f64) -> Result<SolveResult> {
    if !x.is_finite() || x <= 0.0 || x > 1.0 {
        return Err(SabrError::invalid(format!(
            "solve_sinc2 requires 0 < x <= 1, got {x}"
        )));
    }
    let inner = solve_sinc(x)?;
    Ok(SolveResult {
        root: 0.5 * inner.root,
        ..inner
    })
}

/// Solves `sinh(phi/2)/(phi/2) = r` for `phi > 0`, `r > 1` (the case-(i)
/// branch variable of the volatility rate function).
pub fn solve_case_i(r: f64) -> Result<SolveResult> {
    if !r.is_finite() || r <= 1.0 {
        return Err(SabrError::invalid(format!(
            "solve_case_i requires r > 1, got {r}"
        )));
    }
    let inner = solve_sinhc(r)?;
    Ok(SolveResult {
        root: 2.0 * inner.root,
        ..inner
    })
}

/// Series switch radius around the branch point rho = 1 of [`hartman_watson_f`].
pub const HW_SERIES_RADIUS: f64 = 1e-3;

/// Hartman-Watson auxiliary function F(rho), rho > 0.
///
/// Lower branch (0 < rho < 1): `F = x1^2/2 - rho cosh x1 + pi^2/2` with
/// `rho sinh(x1)/x1 = 1`. Upper branch (rho > 1):
/// `F = -y1^2/2 + rho cos y1 + pi y1` with `y1 + rho sin y1 = pi`, solved
/// through `y1 = pi - lambda`, `sin(lambda)/lambda = 1/rho`. Within
/// `|rho - 1| < 1e-3` both branches lose
/// accuracy to branch-point cancellation and the Taylor series around rho = 1
/// is used instead; the function is continuous across the switch.
///
/// F has its minimum at rho = pi/2 with value 3 pi^2/8.
pub fn hartman_watson_f(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(SabrError::invalid(format!(
            "hartman_watson_f requires rho > 0, got {rho}"
        )));
    }
    let pi = std::f64::consts::PI;
    if (rho - 1.0).abs() < HW_SERIES_RADIUS {
        let d = rho - 1.0;
        return Ok(pi * pi / 2.0 - 1.0 - d + 1.5 * d * d - 1.2 * d * d * d);
    }
    if rho < 1.0 {
        let x1 = solve_sinhc(1.0 / rho)?.root;
        Ok(0.5 * x1 * x1 - rho * x1.cosh() + pi * pi / 2.0)
    } else {
        let y1 = pi - solve_sinc(1.0 / rho)?.root;
        Ok(-0.5 * y1 * y1 + rho * y1.cos() + pi * y1)
    }
}

/// Derivative F'(rho), by the envelope theorem: the inner root does not
/// contribute, leaving `-cosh x1` below the branch point and `cos y1` above.
pub fn hartman_watson_f_prime(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(SabrError::invalid(format!(
            "hartman_watson_f_prime requires rho > 0, got {rho}"
        )));
    }
    if (rho - 1.0).abs() < HW_SERIES_RADIUS {
        let d = rho - 1.0;
        return Ok(-1.0 + 3.0 * d - 3.6 * d * d);
    }
    if rho < 1.0 {
        let x1 = solve_sinhc(1.0 / rho)?.root;
        Ok(-x1.cosh())
    } else {
        let lambda = solve_sinc(1.0 / rho)?.root;
        Ok(-lambda.cos())
    }
}
