//! Large-deviations rate functions of the discretized log-normal SABR model:
//! the joint volatility rate function I(u, v) in scaled variables, its
//! Hartman-Watson representation and expansions, the integrated-variance rate
//! J_BS, and the log-price rate J_X (closed form at zero correlation, 2D
//! minimization otherwise) together with the martingale infimum point and the
//! right switch point y_R.

mod optim;

use crate::error::{validate_finite, validate_positive, Result, SabrError};
use crate::roots::{
    self, hartman_watson_f, hartman_watson_f_prime, solve_case_i, solve_sinc, solve_sinhc,
};
use optim::{golden_min_1d, minimize_2d};

pub use optim::FOC_TOL;

/// Asymptotic-regime quantities kept fixed in the large-step-count limit.
///
/// `beta = omega^2 tau n^2 / 2`, `rho = sigma0 sqrt(tau)`; the surface
/// smallness parameter is `a = 4 beta rho^2 = 2 (sigma0^2 T)(omega^2 T)` and
/// the terminal-vol scale is `v0 = rho / sqrt(2 beta)`.
#[derive(Debug, Clone, Copy)]
pub struct ScalingParams {
    pub beta: f64,
    pub rho: f64,
    pub a: f64,
    pub v0: f64,
    pub corr: f64,
    pub corr_perp: f64,
    pub n: u32,
    pub tau: f64,
}

impl ScalingParams {
    pub fn new(beta: f64, rho: f64, corr: f64, n: u32, tau: f64) -> Result<Self> {
        validate_positive(beta, "beta")?;
        validate_positive(rho, "rho")?;
        validate_positive(tau, "tau")?;
        if n == 0 {
            return Err(SabrError::invalid("n must be >= 1"));
        }
        if !(-1.0..=0.0).contains(&corr) {
            return Err(SabrError::invalid(format!(
                "corr must lie in [-1, 0] for asymptotic-surface use, got {corr}"
            )));
        }
        Ok(Self {
            beta,
            rho,
            a: 4.0 * beta * rho * rho,
            v0: rho / (2.0 * beta).sqrt(),
            corr,
            corr_perp: (1.0 - corr * corr).sqrt(),
            n,
            tau,
        })
    }
}

/// Which extremal-problem branch produced a rate value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// u/v > 1 branch of I (hyperbolic solver variable phi).
    CaseI,
    /// u/v < 1 branch of I (trigonometric solver variable lambda).
    CaseII,
    /// u = v diagonal of I.
    Diagonal,
    /// |y| > 1/2 closed-form branch of J_X at zero correlation.
    Uncorrelated1,
    /// |y| < 1/2 closed-form branch of J_X at zero correlation.
    Uncorrelated2,
    /// Exact boundary values (y = +-1/2 and the quadratic-model zone).
    Boundary,
}

/// A rate-function value with the minimizer and solver internals attached.
#[derive(Debug, Clone, Copy)]
pub struct RateEval {
    pub value: f64,
    pub u_star: f64,
    pub v_star: f64,
    pub branch: Branch,
    /// Transcendental-solver variable behind the evaluation (xi, lambda or phi).
    pub solver_var: f64,
    /// Set when the evaluation used a positive correlation outside the
    /// theorems' hypothesis (research mode).
    pub research_mode: bool,
}

const DIAGONAL_GUARD: f64 = 1e-10;

// ---------------------------------------------------------------------------
// I(u, v): joint rate function of scaled integrated variance and terminal vol
// ---------------------------------------------------------------------------

pub(crate) fn rate_i_parts(u_bar: f64, v_bar: f64) -> Result<(f64, Branch, f64)> {
    validate_positive(u_bar, "u_bar")?;
    validate_positive(v_bar, "v_bar")?;
    let ratio = u_bar / v_bar;
    if (ratio - 1.0).abs() <= DIAGONAL_GUARD {
        let d = u_bar - 1.0;
        return Ok((4.0 * d * d / u_bar, Branch::Diagonal, 0.0));
    }
    if ratio > 1.0 {
        let phi = solve_case_i(ratio)?.root;
        let e_half = (0.5 * phi).exp();
        // the gamma form has a removable 0/0 at e^{phi/2} = v; the
        // Hartman-Watson representation is regular there
        let value = if (e_half - v_bar).abs() <= 1e-6 * e_half.max(v_bar) {
            rate_i_via_f(u_bar, v_bar)?
        } else {
            let g = e_half * (v_bar * e_half - 1.0) / (e_half - v_bar);
            phi * (phi - 4.0 * g / (g + 1.0) + 4.0 * g / (phi.exp() + g))
        };
        Ok((value, Branch::CaseI, phi))
    } else {
        let lambda = solve_sinc(ratio)?.root;
        let tan_eta = (v_bar * lambda.cos() - 1.0) / (v_bar * lambda.sin());
        let value = 4.0 * lambda * lambda * (u_bar * (1.0 + tan_eta * tan_eta) - 1.0);
        Ok((value, Branch::CaseII, lambda))
    }
}

/// I(u, v) in scaled variables: case (i) for u/v > 1, case (ii) for u/v < 1,
/// the diagonal closed form on u = v. Vanishes exactly at (1, 1).
pub fn rate_i(u_bar: f64, v_bar: f64) -> Result<f64> {
    rate_i_parts(u_bar, v_bar).map(|(v, _, _)| v)
}

/// Alternative representation `I = 8 F(v/u) + 4 (1 + v^2)/u - 4 pi^2` through
/// the Hartman-Watson function.
pub fn rate_i_via_f(u_bar: f64, v_bar: f64) -> Result<f64> {
    validate_positive(u_bar, "u_bar")?;
    validate_positive(v_bar, "v_bar")?;
    let pi = std::f64::consts::PI;
    let f = hartman_watson_f(v_bar / u_bar)?;
    Ok(8.0 * f + 4.0 * (1.0 + v_bar * v_bar) / u_bar - 4.0 * pi * pi)
}

/// Gradient (dI/du, dI/dv) from the Hartman-Watson representation; the inner
/// roots drop out by the envelope theorem.
pub(crate) fn rate_i_grad(u_bar: f64, v_bar: f64) -> Result<(f64, f64)> {
    let fp = hw_f_prime_tight(v_bar / u_bar)?;
    let du = -(8.0 * fp * v_bar + 4.0 * (1.0 + v_bar * v_bar)) / (u_bar * u_bar);
    let dv = (8.0 * fp + 8.0 * v_bar) / u_bar;
    Ok((du, dv))
}

// F' with a tighter series window than the value: the cubic truncation is
// only accurate enough for gradient work within |rho - 1| < 1e-5, and the
// branch formulas are stable that close to the branch point.
fn hw_f_prime_tight(rho: f64) -> Result<f64> {
    if (rho - 1.0).abs() < 1e-5 {
        return hartman_watson_f_prime(rho);
    }
    if rho < 1.0 {
        let x1 = solve_sinhc(1.0 / rho)?.root;
        Ok(-x1.cosh())
    } else {
        let lambda = solve_sinc(1.0 / rho)?.root;
        Ok(-lambda.cos())
    }
}

/// Taylor expansion of I around (1, 1) in `eps = log u`, `eta = log v`,
/// through quartic order; `quadratic_only` truncates after the quadratic
/// form `12 eps^2 - 24 eps eta + 16 eta^2`.
pub fn rate_i_quartic(u_bar: f64, v_bar: f64, quadratic_only: bool) -> Result<f64> {
    validate_positive(u_bar, "u_bar")?;
    validate_positive(v_bar, "v_bar")?;
    let e = u_bar.ln();
    let n = v_bar.ln();
    let quad = 12.0 * e * e - 24.0 * e * n + 16.0 * n * n;
    if quadratic_only {
        return Ok(quad);
    }
    let cubic = -12.0 / 5.0 * e * e * e + 36.0 / 5.0 * e * e * n - 56.0 / 5.0 * e * n * n
        + 32.0 / 5.0 * n * n * n;
    let quart = 109.0 / 175.0 * e.powi(4) - 436.0 / 175.0 * e.powi(3) * n
        + 1004.0 / 175.0 * e * e * n * n
        - 1136.0 / 175.0 * e * n.powi(3)
        + 1552.0 / 525.0 * n.powi(4);
    Ok(quad + cubic + quart)
}

// ---------------------------------------------------------------------------
// J_BS: rate function of the scaled discrete integrated variance
// ---------------------------------------------------------------------------

/// `J_BS(x)`: `xi^2/2 - xi tanh(xi/2)` for x >= 1 (sinh(xi)/xi = x) and
/// `2 lambda (tan lambda - lambda)` for 0 < x <= 1 (sin(2 lambda)/(2 lambda)
/// = x); zero at x = 1.
pub fn rate_j_bs(x: f64) -> Result<f64> {
    validate_positive(x, "x")?;
    if x == 1.0 {
        return Ok(0.0);
    }
    if x > 1.0 {
        let xi = solve_sinhc(x)?.root;
        Ok(0.5 * xi * xi - xi * (0.5 * xi).tanh())
    } else {
        let lambda = 0.5 * solve_sinc(x)?.root;
        Ok(2.0 * lambda * (lambda.tan() - lambda))
    }
}

/// Derivative of [`rate_j_bs`]; tends to 0 from both sides at x = 1, where
/// the continuous extension 0 is returned.
pub fn rate_j_bs_prime(x: f64) -> Result<f64> {
    validate_positive(x, "x")?;
    if x == 1.0 {
        return Ok(0.0);
    }
    if x > 1.0 {
        let xi = solve_sinhc(x)?.root;
        let c = (0.5 * xi).cosh();
        Ok(0.5 * xi * xi / (c * c))
    } else {
        let lambda = 0.5 * solve_sinc(x)?.root;
        let c = lambda.cos();
        Ok(-2.0 * lambda * lambda / (c * c))
    }
}

// ---------------------------------------------------------------------------
// J_X at zero correlation: closed form
// ---------------------------------------------------------------------------

const BOUNDARY_GUARD: f64 = 1e-6;

/// Leading coefficient of `J_X(y; a, corr)` around its zero at y = -1/2:
/// `6a / (6 + a - 3 sqrt(2a) corr)`.
pub fn rate_j_x_quadratic_coeff(a: f64, corr: f64) -> Result<f64> {
    validate_positive(a, "a")?;
    validate_corr(corr)?;
    Ok(6.0 * a / (6.0 + a - 3.0 * (2.0 * a).sqrt() * corr))
}

fn validate_corr(corr: f64) -> Result<()> {
    if !(-1.0..=0.0).contains(&corr) {
        return Err(SabrError::invalid(format!(
            "corr must lie in [-1, 0] (positive correlation requires research mode), got {corr}"
        )));
    }
    Ok(())
}

// minimizer expansion around y = -1/2, linear order
fn boundary_minimizer(y: f64, a: f64, corr: f64) -> (f64, f64) {
    let s = (2.0 * a).sqrt();
    let den = 6.0 - 3.0 * s * corr + a;
    let a1 = (-2.0 * a + 3.0 * s * corr) / den;
    let b1 = -3.0 * (a - 2.0 * s * corr) / (2.0 * den);
    let d = y + 0.5;
    ((a1 * d).exp(), (b1 * d).exp())
}

fn boundary_eval(y: f64, a: f64, corr: f64, research: bool) -> RateEval {
    let q = 6.0 * a / (6.0 + a - 3.0 * (2.0 * a).sqrt() * corr);
    let d = y + 0.5;
    let (u, v) = boundary_minimizer(y, a, corr);
    RateEval {
        value: q * d * d,
        u_star: u,
        v_star: v,
        branch: Branch::Boundary,
        solver_var: 0.0,
        research_mode: research,
    }
}

/// Closed-form `J_X(y; a, 0)` of the uncorrelated model.
///
/// For |y| > 1/2 the hyperbolic branch solves a xi-equation and returns
/// `xi^2/2 - xi tanh(xi/2) + a (xi/sinh xi)(y + sinh(xi)/(2 xi))^2`; for
/// |y| < 1/2 the trigonometric branch is the analogue in lambda. The exact
/// boundary values are `J_X(-1/2) = 0` and `J_X(1/2) = a`.
pub fn rate_j_x_uncorr(y: f64, a: f64) -> Result<RateEval> {
    validate_positive(a, "a")?;
    validate_finite(y, "y")?;
    if (y + 0.5).abs() < BOUNDARY_GUARD {
        return Ok(boundary_eval(y, a, 0.0, false));
    }
    if y == 0.5 {
        return Ok(RateEval {
            value: a,
            u_star: 1.0,
            v_star: 1.0,
            branch: Branch::Boundary,
            solver_var: 0.0,
            research_mode: false,
        });
    }
    if y.abs() > 0.5 {
        let xi = solve_uncorr_xi(y, a)?;
        let u = roots::sinhc(xi);
        let value = 0.5 * xi * xi - xi * (0.5 * xi).tanh() + a / u * (y + 0.5 * u).powi(2);
        Ok(RateEval {
            value,
            u_star: u,
            v_star: (0.5 * xi).cosh(),
            branch: Branch::Uncorrelated1,
            solver_var: xi,
            research_mode: false,
        })
    } else {
        let lambda = solve_uncorr_lambda(y, a)?;
        let u = roots::sinc(2.0 * lambda);
        let value = 2.0 * lambda * (lambda.tan() - lambda) + a / u * (y + 0.5 * u).powi(2);
        Ok(RateEval {
            value,
            u_star: u,
            v_star: lambda.cos(),
            branch: Branch::Uncorrelated2,
            solver_var: lambda,
            research_mode: false,
        })
    }
}

// stationarity equation for |y| > 1/2:
// xi^2/cosh^2(xi/2)/(4a) + 1/8 - y^2 xi^2/(2 sinh^2 xi) = 0
fn solve_uncorr_xi(y: f64, a: f64) -> Result<f64> {
    let y2 = y * y;
    let f = |xi: f64| {
        let ch = (0.5 * xi).cosh();
        let aa = xi * xi / (ch * ch);
        let b = xi / xi.sinh();
        let v = aa / (4.0 * a) + 0.125 - 0.5 * y2 * b * b;
        let sh = xi.sinh();
        let ap = 2.0 * xi / (ch * ch) - xi * xi * (0.5 * xi).sinh() / (ch * ch * ch);
        let bp = 2.0 * xi / (sh * sh) - 2.0 * xi * xi * xi.cosh() / (sh * sh * sh);
        (v, ap / (4.0 * a) - 0.5 * y2 * bp)
    };
    // psi(0+) = 1/8 - y^2/2 < 0 and psi -> 1/8 as xi -> inf
    let seed = 2.0 * (y.abs() * (0.5 * a).sqrt()).asinh();
    let mut hi = seed.max(1.0);
    while f(hi).0 <= 0.0 {
        hi *= 2.0;
        if hi > 1400.0 {
            return Err(SabrError::SolverFailure {
                message: format!("uncorrelated xi bracket failed at y={y}, a={a}"),
            });
        }
    }
    let (root, iters, res) = roots::bracketed_newton_raw(&f, 1e-300, hi, seed.clamp(1e-300, hi));
    let scale = 0.125 + 0.5 * y2;
    if res.abs() > 1e-10 * scale {
        return Err(SabrError::SolverFailure {
            message: format!(
                "uncorrelated xi: residual {res:.3e} after {iters} iterations (y={y}, a={a})"
            ),
        });
    }
    Ok(root)
}

// stationarity equation for |y| < 1/2:
// -lambda^2/cos^2(lambda)/a + 1/8 - y^2 (2 lambda)^2/(2 sin^2(2 lambda)) = 0
fn solve_uncorr_lambda(y: f64, a: f64) -> Result<f64> {
    let y2 = y * y;
    let f = |l: f64| {
        let c = l.cos();
        let cc = l * l / (c * c);
        let s2 = (2.0 * l).sin();
        let d = 2.0 * l / s2;
        let v = -cc / a + 0.125 - 0.5 * y2 * d * d;
        let cp = 2.0 * l / (c * c) + 2.0 * l * l * l.sin() / (c * c * c);
        let dp = 8.0 * l / (s2 * s2) - 16.0 * l * l * (2.0 * l).cos() / (s2 * s2 * s2);
        (v, -cp / a - 0.5 * y2 * dp)
    };
    let seed = (a * (0.125 - 0.5 * y2)).sqrt().min(1.4);
    let (root, iters, res) = roots::bracketed_newton_raw(
        &f,
        1e-15,
        std::f64::consts::FRAC_PI_2 - 1e-15,
        seed.max(1e-12),
    );
    let scale = 0.125 + 0.5 * y2;
    if res.abs() > 1e-10 * scale {
        return Err(SabrError::SolverFailure {
            message: format!(
                "uncorrelated lambda: residual {res:.3e} after {iters} iterations (y={y}, a={a})"
            ),
        });
    }
    Ok(root)
}

// ---------------------------------------------------------------------------
// J_X at general correlation: 2D minimization in log coordinates
// ---------------------------------------------------------------------------

struct JxObjective {
    y: f64,
    a: f64,
    corr_perp2: f64,
    kappa: f64, // corr * sqrt(2/a)
}

impl JxObjective {
    fn new(y: f64, a: f64, corr: f64) -> Self {
        Self {
            y,
            a,
            corr_perp2: 1.0 - corr * corr,
            kappa: corr * (2.0 / a).sqrt(),
        }
    }

    fn value(&self, eps: f64, eta: f64) -> f64 {
        if eps.abs() > 600.0 || eta.abs() > 600.0 {
            return f64::INFINITY;
        }
        let (u, v) = (eps.exp(), eta.exp());
        match rate_i(u, v) {
            Ok(i) => {
                let d = self.y + 0.5 * u - self.kappa * (v - 1.0);
                0.5 * i + self.a / (self.corr_perp2 * u) * d * d
            }
            Err(_) => f64::INFINITY,
        }
    }

    // gradient in log coordinates
    fn grad(&self, eps: f64, eta: f64) -> (f64, f64) {
        let (u, v) = (eps.exp(), eta.exp());
        let Ok((iu, iv)) = rate_i_grad(u, v) else {
            return (f64::NAN, f64::NAN);
        };
        let d = self.y + 0.5 * u - self.kappa * (v - 1.0);
        let p = self.a / (self.corr_perp2 * u);
        let gu = 0.5 * iu + p * (d - d * d / u);
        let gv = 0.5 * iv - 2.0 * p * d * self.kappa;
        (u * gu, v * gv)
    }
}

// quadratic-model Newton start: minimize the Iquad form plus the linearized
// penalty, a 2x2 linear solve
fn quad_model_start(y: f64, a: f64, corr: f64) -> (f64, f64) {
    let cp2 = 1.0 - corr * corr;
    if cp2 < 1e-12 {
        return (0.0, 0.0);
    }
    let p = a / cp2;
    let w = y + 0.5;
    let k = corr * (2.0 / a).sqrt();
    let a11 = 12.0 + 0.5 * p;
    let a12 = -12.0 - p * k;
    let a22 = 16.0 + 2.0 * p * k * k;
    let det = a11 * a22 - a12 * a12;
    if det.abs() < 1e-12 {
        return (0.0, 0.0);
    }
    let b1 = -p * w;
    let b2 = 2.0 * p * k * w;
    let e = (b1 * a22 - b2 * a12) / det;
    let n = (b2 * a11 - b1 * a12) / det;
    (e.clamp(-3.0, 3.0), n.clamp(-3.0, 3.0))
}

fn eval_from_min(m: optim::MinResult, research: bool) -> RateEval {
    let (u, v) = (m.eps.exp(), m.eta.exp());
    let (branch, solver_var) = match rate_i_parts(u, v) {
        Ok((_, b, s)) => (b, s),
        Err(_) => (Branch::Diagonal, 0.0),
    };
    RateEval {
        value: m.value,
        u_star: u,
        v_star: v,
        branch,
        solver_var,
        research_mode: research,
    }
}

/// Raw 2D minimizer for `J_X(y; a, corr)` without the closed-form delegation,
/// exposed so the zero-correlation route can be cross-validated against
/// [`rate_j_x_uncorr`]. Newton starts from the quadratic-model point with a
/// correlation-continuation fallback.
pub fn rate_j_x_minimize(y: f64, a: f64, corr: f64) -> Result<RateEval> {
    validate_positive(a, "a")?;
    validate_finite(y, "y")?;
    if corr.abs() >= 1.0 {
        return Err(SabrError::invalid(format!(
            "rate_j_x_minimize requires |corr| < 1, got {corr}"
        )));
    }
    let research = corr > 0.0;
    let obj = JxObjective::new(y, a, corr);
    let start = quad_model_start(y, a, corr);
    let mut seeds = vec![(0.0, 0.0), (-0.5, -0.5)];
    // uncorrelated closed-form minimizer rescues extreme strikes
    if let Ok(u0) = rate_j_x_uncorr(y, a) {
        seeds.push((u0.u_star.ln(), u0.v_star.ln()));
    }
    let direct = minimize_2d(
        |e, n| obj.value(e, n),
        |e, n| obj.grad(e, n),
        start,
        &seeds,
        "rate_j_x",
    );
    let m = match direct {
        Ok(m) => m,
        Err(_) => continuation(y, a, corr)?,
    };
    Ok(eval_from_min(m, research))
}

// walk the correlation from 0 to the target, re-solving from the previous
// minimizer; used when the direct solve stalls
fn continuation(y: f64, a: f64, corr: f64) -> Result<optim::MinResult> {
    let u0 = rate_j_x_uncorr(y, a)?;
    let mut start = (u0.u_star.ln(), u0.v_star.ln());
    let steps = (corr.abs() / 0.125).ceil().max(1.0) as usize;
    let mut last = None;
    for k in 1..=steps {
        let c = corr * k as f64 / steps as f64;
        let obj = JxObjective::new(y, a, c);
        let m = minimize_2d(
            |e, n| obj.value(e, n),
            |e, n| obj.grad(e, n),
            start,
            &[],
            "rate_j_x continuation",
        )?;
        start = (m.eps, m.eta);
        last = Some(m);
    }
    Ok(last.expect("at least one continuation step"))
}

// corr = -1 collapses the penalty to the hard constraint
// v = 1 - (y + u/2) sqrt(a/2); minimize (1/2) I(u, v(u)) over u
fn rate_j_x_perfectly_anticorrelated(y: f64, a: f64) -> Result<RateEval> {
    let s = (0.5 * a).sqrt();
    let u_max = 2.0 * ((2.0 / a).sqrt() - y);
    if u_max <= 0.0 {
        return Err(SabrError::invalid(format!(
            "J_X diverges at corr = -1 for y = {y} (no admissible terminal vol)"
        )));
    }
    let v_of = |u: f64| 1.0 - (y + 0.5 * u) * s;
    let f = |eps: f64| {
        let u = eps.exp();
        let v = v_of(u);
        if v <= 0.0 {
            return f64::INFINITY;
        }
        match rate_i(u, v) {
            Ok(i) => 0.5 * i,
            Err(_) => f64::INFINITY,
        }
    };
    let lo = (1e-8 * u_max).ln();
    let hi = ((1.0 - 1e-12) * u_max).ln();
    let (eps, value) = golden_min_1d(f, lo, hi);
    if !value.is_finite() {
        return Err(SabrError::NoConvergence {
            message: format!("corr=-1 line search failed at y={y}, a={a}"),
        });
    }
    let u = eps.exp();
    let v = v_of(u);
    let (_, branch, solver_var) = rate_i_parts(u, v)?;
    Ok(RateEval {
        value,
        u_star: u,
        v_star: v,
        branch,
        solver_var,
        research_mode: false,
    })
}

/// `J_X(y; a, corr)`: the log-price rate function in normalized strike `y`.
///
/// Delegates to the closed form at `corr = 0`, to a constrained 1D search at
/// `corr = -1`, and to the 2D minimizer otherwise. Within `|y + 1/2| < 1e-6`
/// the quadratic model around the zero is returned, making `J_X(-1/2) = 0`
/// exact. For `corr <= 0` the value satisfies `J_X >= max(0, 2 a y)`.
pub fn rate_j_x(y: f64, a: f64, corr: f64) -> Result<RateEval> {
    validate_positive(a, "a")?;
    validate_finite(y, "y")?;
    validate_corr(corr)?;
    rate_j_x_inner(y, a, corr)
}

/// Research-mode variant accepting positive correlation; the returned
/// evaluation is tagged with `research_mode = true` there. The martingale
/// theory behind the surface holds only for `corr <= 0`.
pub fn rate_j_x_unchecked(y: f64, a: f64, corr: f64) -> Result<RateEval> {
    validate_positive(a, "a")?;
    validate_finite(y, "y")?;
    if corr.abs() > 1.0 || !corr.is_finite() {
        return Err(SabrError::invalid(format!("corr must lie in [-1, 1], got {corr}")));
    }
    if corr == 1.0 {
        return Err(SabrError::invalid(
            "corr = +1 is degenerate (perfectly correlated driver)",
        ));
    }
    rate_j_x_inner(y, a, corr)
}

fn rate_j_x_inner(y: f64, a: f64, corr: f64) -> Result<RateEval> {
    if (y + 0.5).abs() < BOUNDARY_GUARD {
        return Ok(boundary_eval(y, a, corr, corr > 0.0));
    }
    if corr == 0.0 {
        return rate_j_x_uncorr(y, a);
    }
    if corr == -1.0 {
        return rate_j_x_perfectly_anticorrelated(y, a);
    }
    rate_j_x_minimize(y, a, corr)
}

// bridge for sibling modules running their own extremal problems on top of
// the shared minimizer; returns (eps, eta, value)
pub(crate) fn minimize_2d_pub<F, G>(
    f: F,
    grad: G,
    start: (f64, f64),
    seeds: &[(f64, f64)],
) -> Result<(f64, f64, f64)>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> (f64, f64),
{
    let m = minimize_2d(f, grad, start, seeds, "rate extremal problem")?;
    Ok((m.eps, m.eta, m.value))
}

/// Gradient (in log coordinates) of the J_X extremal objective at (u, v),
/// for first-order-condition diagnostics.
pub fn rate_j_x_gradient(y: f64, a: f64, corr: f64, u: f64, v: f64) -> Result<(f64, f64)> {
    validate_positive(a, "a")?;
    validate_positive(u, "u")?;
    validate_positive(v, "v")?;
    if corr.abs() >= 1.0 {
        return Err(SabrError::invalid("gradient undefined at |corr| = 1"));
    }
    let obj = JxObjective::new(y, a, corr);
    let g = obj.grad(u.ln(), v.ln());
    if g.0.is_finite() && g.1.is_finite() {
        Ok(g)
    } else {
        Err(SabrError::SolverFailure {
            message: "gradient evaluation failed".into(),
        })
    }
}

// ---------------------------------------------------------------------------
// Martingale infimum point and switch point y_R
// ---------------------------------------------------------------------------

/// Minimizer `(u_m, v_m)` of `I(u,v)/2 + a corr^2 u - 2 sqrt(2a) corr (v-1)`.
///
/// The attained infimum is 0 (asymptotic martingale property); the solver
/// verifies |value| <= 1e-6 before returning. At corr = 0 the point is
/// exactly (1, 1).
pub fn martingale_min_point(a: f64, corr: f64) -> Result<(f64, f64)> {
    validate_positive(a, "a")?;
    validate_corr(corr)?;
    if corr == 0.0 {
        return Ok((1.0, 1.0));
    }
    let s = -corr * (0.5 * a).sqrt();
    let c2 = corr * corr;
    let lin = 2.0 * (2.0 * a).sqrt() * corr;
    let f = |e: f64, n: f64| {
        if e.abs() > 600.0 || n.abs() > 600.0 {
            return f64::INFINITY;
        }
        let (u, v) = (e.exp(), n.exp());
        match rate_i(u, v) {
            Ok(i) => 0.5 * i + a * c2 * u - lin * (v - 1.0),
            Err(_) => f64::INFINITY,
        }
    };
    let grad = |e: f64, n: f64| {
        let (u, v) = (e.exp(), n.exp());
        match rate_i_grad(u, v) {
            Ok((iu, iv)) => (u * (0.5 * iu + a * c2), v * (0.5 * iv - lin)),
            Err(_) => (f64::NAN, f64::NAN),
        }
    };
    // the infimum sits on the diagonal at 1/(1 + s); seed Newton there
    let t = (1.0 / (1.0 + s)).ln();
    let m = minimize_2d(f, grad, (t, t), &[(0.0, 0.0)], "martingale_min_point")?;
    if m.value.abs() > 1e-6 {
        return Err(SabrError::NoConvergence {
            message: format!(
                "martingale infimum {:.3e} not within 1e-6 of zero (a={a}, corr={corr})",
                m.value
            ),
        });
    }
    Ok((m.eps.exp(), m.eta.exp()))
}

/// Right switch point `y_R = (1 - 2 corr^2) u_m / 2 + corr sqrt(2/a) (v_m - 1)`,
/// where the rate function meets its linear lower bound: `J_X(y_R) = 2 a y_R`.
pub fn switch_point_y_r(a: f64, corr: f64) -> Result<f64> {
    let (um, vm) = martingale_min_point(a, corr)?;
    Ok(0.5 * (1.0 - 2.0 * corr * corr) * um + corr * (2.0 / a).sqrt() * (vm - 1.0))
}

// ---------------------------------------------------------------------------
// Asymptotics and scaling
// ---------------------------------------------------------------------------

/// Large-argument expansion `J_X(x; a, 0) ~ 2 a x + log^2(2x)/2
/// + log(2x) log(2 log 2x) - log(2x)`; reliable for x >= 10.
pub fn rate_j_x_large_x(x: f64, a: f64) -> Result<f64> {
    validate_positive(a, "a")?;
    if x < 10.0 || x.is_nan() {
        return Err(SabrError::invalid(format!(
            "large-x expansion requires x >= 10, got {x}"
        )));
    }
    let l = (2.0 * x).ln();
    Ok(2.0 * a * x + 0.5 * l * l + l * (2.0 * l).ln() - l)
}

/// Log-price rate function in model units: `I_X(k) = J_X(k/rho^2; a, corr)
/// / (8 beta)`; vanishes at `k = -rho^2/2`.
pub fn rate_i_x(k: f64, sp: &ScalingParams) -> Result<f64> {
    validate_finite(k, "k")?;
    let y = k / (sp.rho * sp.rho);
    Ok(rate_j_x(y, sp.a, sp.corr)?.value / (8.0 * sp.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (diff {:.3e})", (a - b).abs());
    }

    // --- I(u, v) ---

    #[test]
    fn rate_i_vanishes_at_one_one() {
        assert_eq!(rate_i(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rate_i_diagonal_closed_form() {
        assert_close(rate_i(2.0, 2.0).unwrap(), 2.0, 1e-14, "I(2,2)");
        assert_close(rate_i(0.5, 0.5).unwrap(), 2.0, 1e-14, "I(0.5,0.5)");
    }

    #[test]
    fn rate_i_case_i_frozen_oracle() {
        // path-discretization PGD oracle agrees with this to 3e-5 relative;
        // value frozen from the high-precision closed-form evaluation
        assert_close(rate_i(1.5, 1.0).unwrap(), 1.828309632343081, 1e-12, "I(1.5,1)");
    }

    #[test]
    fn rate_i_case_ii_value() {
        assert_close(rate_i(0.8, 1.2).unwrap(), 2.3512169084879946, 1e-12, "I(0.8,1.2)");
    }

    #[test]
    fn rate_i_matches_f_representation() {
        for &(u, v) in &[(1.5, 1.0), (0.8, 1.2), (3.0, 0.4), (0.3, 2.5), (2.0, 2.0 + 1e-7)] {
            let a = rate_i(u, v).unwrap();
            let b = rate_i_via_f(u, v).unwrap();
            assert_close(a, b, 1e-10 * (1.0 + a.abs()), "I vs F-form");
        }
    }

    #[test]
    fn rate_i_cross_representation_grid() {
        // 50x50 log-grid over [0.2, 5]^2, both routes within 1e-8
        let mut worst = 0.0f64;
        for i in 0..50 {
            for j in 0..50 {
                let u = 0.2 * (25.0f64).powf(i as f64 / 49.0);
                let v = 0.2 * (25.0f64).powf(j as f64 / 49.0);
                let a = rate_i(u, v).unwrap();
                let b = rate_i_via_f(u, v).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst <= 1e-8, "worst |I - I_F| = {worst:.3e}");
    }

    #[test]
    fn j_x_general_first_order_conditions() {
        for &(y, a, corr) in &[
            (0.3, 0.32, -0.75),
            (-0.8, 2.0, -0.75),
            (1.5, 0.08, -0.5),
            (0.0, 1.0, -0.25),
        ] {
            let r = rate_j_x(y, a, corr).unwrap();
            let (ge, gn) = rate_j_x_gradient(y, a, corr, r.u_star, r.v_star).unwrap();
            assert!(
                ge.abs() < 1e-8 && gn.abs() < 1e-8,
                "FOC at (y={y}, a={a}, corr={corr}): ({ge:.2e}, {gn:.2e})"
            );
        }
    }

    #[test]
    fn rate_i_via_f_fixed_points() {
        // 8 F(1) + 8 - 4 pi^2 = 0 by the series constant
        assert!(rate_i_via_f(1.0, 1.0).unwrap().abs() < 1e-12);
        assert_close(rate_i_via_f(2.0, 2.0).unwrap(), 2.0, 1e-12, "F-form diagonal");
    }

    #[test]
    fn rate_i_gamma_singularity_guarded() {
        // e^{phi/2} = v line: u/v such that the gamma denominator vanishes
        let v = 2.0f64;
        let phi = 2.0 * v.ln();
        let u = v * roots::sinhc(0.5 * phi);
        let direct = rate_i(u, v).unwrap();
        let via_f = rate_i_via_f(u, v).unwrap();
        assert_close(direct, via_f, 1e-9, "singular line");
        // nearby points stay finite and continuous
        let eps = 1e-5;
        let left = rate_i(u * (1.0 - eps), v).unwrap();
        let right = rate_i(u * (1.0 + eps), v).unwrap();
        assert!((left - direct).abs() < 1e-3 && (right - direct).abs() < 1e-3);
    }

    #[test]
    fn rate_i_branch_continuity_across_diagonal() {
        for i in 0..100 {
            let v = 0.2 + 4.8 * i as f64 / 99.0;
            let diag = rate_i(v, v).unwrap();
            let above = rate_i(v * (1.0 + 1e-9), v).unwrap();
            let below = rate_i(v * (1.0 - 1e-9), v).unwrap();
            assert_close(above, diag, 1e-7, "case i -> diagonal");
            assert_close(below, diag, 1e-7, "case ii -> diagonal");
        }
    }

    #[test]
    fn rate_i_rejects_nonpositive() {
        assert!(rate_i(0.0, 1.0).is_err());
        assert!(rate_i(1.0, -2.0).is_err());
    }

    #[test]
    fn rate_i_quartic_examples() {
        assert_eq!(rate_i_quartic(1.0, 1.0, false).unwrap(), 0.0);
        // eps = 0.01, eta = 0: 12 e^2 - (12/5) e^3 + (109/175) e^4
        let e = 0.01f64;
        let expected = 12.0 * e * e - 2.4 * e * e * e + 109.0 / 175.0 * e * e * e * e;
        assert_close(
            rate_i_quartic(e.exp(), 1.0, false).unwrap(),
            expected,
            1e-15,
            "quartic at eta=0",
        );
        // quartic truncation error bound at (1.1, 1.05)
        let full = rate_i(1.1, 1.05).unwrap();
        let quart = rate_i_quartic(1.1, 1.05, false).unwrap();
        assert!((full - quart).abs() <= 1e-4);
        // quadratic-only flag
        let quad = rate_i_quartic(1.1, 1.05, true).unwrap();
        let (eps, eta) = (1.1f64.ln(), 1.05f64.ln());
        assert_close(
            quad,
            12.0 * eps * eps - 24.0 * eps * eta + 16.0 * eta * eta,
            1e-15,
            "quadratic truncation",
        );
    }

    #[test]
    fn rate_i_projections() {
        // inf over v of I(u, .) = 2 J_BS(u); inf over u of I(., v) = 4 log^2 v
        for &u in &[0.5f64, 0.8, 1.3, 2.0] {
            let jbs2 = 2.0 * rate_j_bs(u).unwrap();
            let mut best = f64::INFINITY;
            for i in 0..20000 {
                let v = (-2.0 + 4.0 * i as f64 / 19999.0_f64).exp();
                best = best.min(rate_i(u, v).unwrap());
            }
            assert_close(best, jbs2, 1e-6, "inf_v I = 2 J_BS");
        }
        for &v in &[0.6f64, 1.0, 1.7] {
            let target = 4.0 * v.ln().powi(2);
            let mut best = f64::INFINITY;
            for i in 0..20000 {
                let u = (-2.0 + 4.0 * i as f64 / 19999.0_f64).exp();
                best = best.min(rate_i(u, v).unwrap());
            }
            assert_close(best, target, 1e-6, "inf_u I = 4 log^2 v");
        }
    }

    // --- J_BS ---

    #[test]
    fn j_bs_zero_at_one() {
        assert_eq!(rate_j_bs(1.0).unwrap(), 0.0);
    }

    #[test]
    fn j_bs_hyperbolic_branch_forced_root() {
        let x = 2.0f64.sinh() / 2.0;
        let expected = 2.0 - 2.0 * 1.0f64.tanh();
        assert_close(rate_j_bs(x).unwrap(), expected, 1e-14, "J_BS(sinh2/2)");
    }

    #[test]
    fn j_bs_trigonometric_branch() {
        // frozen against the constrained path oracle through I projections
        let v = rate_j_bs(0.5).unwrap();
        assert!(v > 0.0);
        // cross-check against inf over v of I(0.5, v)/2 computed in
        // rate_i_projections; here just pin the closed-form value
        let lam = 0.5 * solve_sinc(0.5).unwrap().root;
        assert_close(v, 2.0 * lam * (lam.tan() - lam), 1e-15, "J_BS(0.5)");
    }

    #[test]
    fn j_bs_prime_matches_finite_differences() {
        let h = 1e-6;
        for &x in &[0.3, 0.7, 0.9, 1.2, 2.0, 5.0] {
            let fd = (rate_j_bs(x + h).unwrap() - rate_j_bs(x - h).unwrap()) / (2.0 * h);
            let an = rate_j_bs_prime(x).unwrap();
            assert_close(an, fd, 1e-6, "J_BS'");
        }
    }

    #[test]
    fn j_bs_prime_limits_at_one() {
        assert_close(
            rate_j_bs_prime(2.0f64.sinh() / 2.0).unwrap(),
            2.0 / 1.0f64.cosh().powi(2),
            1e-14,
            "J_BS'(sinh2/2)",
        );
        assert!(rate_j_bs_prime(1.0 + 1e-9).unwrap().abs() < 1e-7);
        assert!(rate_j_bs_prime(1.0 - 1e-9).unwrap().abs() < 1e-7);
    }

    // --- J_X uncorrelated ---

    #[test]
    fn j_x_uncorr_boundary_values() {
        assert_eq!(rate_j_x_uncorr(-0.5, 2.0).unwrap().value, 0.0);
        assert_eq!(rate_j_x_uncorr(0.5, 0.7).unwrap().value, 0.7);
    }

    #[test]
    fn j_x_uncorr_frozen_oracle_value() {
        // 2D grid + refinement oracle, frozen
        let r = rate_j_x_uncorr(1.3, 1.0).unwrap();
        assert_close(r.value, 3.016002792036087, 1e-9, "J_X(1.3;1,0)");
        assert_close(r.u_star, 1.3790481576977476, 1e-8, "u*(1.3)");
        assert_eq!(r.branch, Branch::Uncorrelated1);
    }

    #[test]
    fn j_x_uncorr_symmetry() {
        for &a in &[0.1, 1.0, 10.0] {
            for i in 0..61 {
                let y = -3.0 + 0.1 * i as f64;
                let d = rate_j_x_uncorr(y, a).unwrap().value
                    - rate_j_x_uncorr(-y, a).unwrap().value;
                assert_close(d, 2.0 * a * y, 1e-9, "symmetry");
            }
        }
    }

    #[test]
    fn j_x_uncorr_first_order_conditions() {
        for &(y, a) in &[(1.3, 1.0), (0.3, 0.8), (-2.0, 5.0), (0.05, 0.1)] {
            let r = rate_j_x_uncorr(y, a).unwrap();
            let (ge, gn) = rate_j_x_gradient(y, a, 0.0, r.u_star, r.v_star).unwrap();
            assert!(ge.abs() < 1e-8 && gn.abs() < 1e-8, "FOC at y={y}: ({ge}, {gn})");
        }
    }

    // --- J_X general ---

    #[test]
    fn j_x_zero_at_left_boundary_any_corr() {
        assert_eq!(rate_j_x(-0.5, 2.0, -0.75).unwrap().value, 0.0);
    }

    #[test]
    fn j_x_optimizer_matches_uncorrelated_closed_form() {
        let r = rate_j_x_minimize(0.8, 1.0, 0.0).unwrap();
        let c = rate_j_x_uncorr(0.8, 1.0).unwrap();
        assert_close(r.value, c.value, 1e-8, "optimizer vs closed form");
    }

    #[test]
    fn j_x_correlated_frozen_value() {
        // frozen from an independent Nelder-Mead minimization
        let r = rate_j_x(0.2, 0.32, -0.75).unwrap();
        assert_close(r.value, 0.1448508930467148, 1e-7, "J_X(0.2;0.32,-0.75)");
    }

    #[test]
    fn j_x_lower_bound_and_contact() {
        for &(a, corr) in &[(0.08, -0.75), (2.0, -0.75), (1.0, -0.5)] {
            let yr = switch_point_y_r(a, corr).unwrap();
            for &y in &[-0.3, 0.0, yr, 0.7, 1.5] {
                let v = rate_j_x(y, a, corr).unwrap().value;
                assert!(v >= 2.0 * a * y - 1e-9, "lower bound at y={y}");
            }
            let v = rate_j_x(yr, a, corr).unwrap().value;
            assert_close(v, 2.0 * a * yr, 1e-6, "contact at y_R");
        }
    }

    #[test]
    fn j_x_quadratic_coeff_values() {
        assert_close(rate_j_x_quadratic_coeff(6.0, 0.0).unwrap(), 3.0, 1e-15, "q(6,0)");
        assert_close(
            rate_j_x_quadratic_coeff(2.0, -1.0).unwrap(),
            6.0 / 7.0,
            1e-15,
            "q(2,-1)",
        );
        // centered second difference of J_X at y = -1/2 (step outside the
        // quadratic-model zone)
        let (a, corr) = (0.1, -0.5);
        let q = rate_j_x_quadratic_coeff(a, corr).unwrap();
        let h = 1e-3;
        let jm = rate_j_x(-0.5 - h, a, corr).unwrap().value;
        let jp = rate_j_x(-0.5 + h, a, corr).unwrap().value;
        let fd = (jp + jm) / (2.0 * h * h);
        assert!((fd - q).abs() / q < 0.01, "q={q} fd={fd}");
    }

    #[test]
    fn j_x_rejects_positive_corr_without_research_mode() {
        assert!(rate_j_x(0.3, 1.0, 0.2).is_err());
        let r = rate_j_x_unchecked(0.3, 1.0, 0.2).unwrap();
        assert!(r.research_mode);
        assert!(r.value.is_finite());
    }

    #[test]
    fn j_x_perfect_anticorrelation() {
        let r = rate_j_x(0.1, 0.5, -1.0).unwrap();
        assert!(r.value > 0.0 && r.v_star > 0.0);
        // hard constraint holds at the minimizer
        let s = (0.5 * 0.5f64).sqrt();
        assert_close(
            r.v_star,
            1.0 - (0.1 + 0.5 * r.u_star) * s,
            1e-9,
            "corr=-1 constraint",
        );
    }

    #[test]
    fn large_x_expansion_accuracy_improves() {
        let exact4 = rate_j_x_uncorr(1e4, 1.0).unwrap().value;
        let exact6 = rate_j_x_uncorr(1e6, 1.0).unwrap().value;
        let e4 = (rate_j_x_large_x(1e4, 1.0).unwrap() - exact4).abs() / exact4;
        let e6 = (rate_j_x_large_x(1e6, 1.0).unwrap() - exact6).abs() / exact6;
        assert!(e4 <= 2e-3, "rel err at 1e4: {e4}");
        assert!(e6 < e4, "no improvement: {e4} -> {e6}");
        // dominant term
        let x = 1e8;
        assert_close(rate_j_x_large_x(x, 1.0).unwrap() / (2.0 * x), 1.0, 1e-2, "leading order");
        assert!(rate_j_x_large_x(5.0, 1.0).is_err());
    }

    // --- martingale point and y_R ---

    #[test]
    fn martingale_point_uncorrelated_is_unit() {
        assert_eq!(martingale_min_point(1.7, 0.0).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn martingale_infimum_attained_at_zero() {
        for &(a, corr) in &[(0.005, -0.75), (0.08, -0.75), (2.0, -0.75), (0.5, -1.0), (3.0, -0.2)]
        {
            let (um, vm) = martingale_min_point(a, corr).unwrap();
            let val = 0.5 * rate_i(um, vm).unwrap() + a * corr * corr * um
                - corr * 2.0 * (2.0 * a).sqrt() * (vm - 1.0);
            assert!(val.abs() < 1e-9, "infimum {val} at a={a}, corr={corr}");
            // closed-form diagonal solution of the infimum problem
            let t = 1.0 / (1.0 - corr * (0.5 * a).sqrt());
            assert_close(um, t, 1e-7, "u_m");
            assert_close(vm, t, 1e-7, "v_m");
        }
    }

    #[test]
    fn switch_point_uncorrelated_is_half() {
        assert_close(switch_point_y_r(0.7, 0.0).unwrap(), 0.5, 1e-15, "y_R at corr 0");
    }

    #[test]
    fn switch_point_contact_identity() {
        for &a in &[0.005, 0.08, 0.32, 2.0] {
            let yr = switch_point_y_r(a, -0.75).unwrap();
            let j = rate_j_x(yr, a, -0.75).unwrap().value;
            assert_close(j, 2.0 * a * yr, 1e-6, "J(y_R) = 2 a y_R");
        }
    }

    // --- scaling ---

    #[test]
    fn scaling_params_invariants() {
        let sp = ScalingParams::new(0.5, 0.2, -0.5, 100, 0.01).unwrap();
        assert_close(sp.a, 4.0 * 0.5 * 0.04, 1e-15, "a");
        assert_close(sp.v0, 0.2, 1e-15, "v0");
        assert_close(sp.corr_perp * sp.corr_perp + sp.corr * sp.corr, 1.0, 1e-15, "corr norm");
        assert!(ScalingParams::new(0.5, 0.2, 0.3, 100, 0.01).is_err());
    }

    #[test]
    fn i_x_vanishes_at_minus_half_rho_sq() {
        let sp = ScalingParams::new(0.5, 0.2, 0.0, 100, 0.01).unwrap();
        let k = -0.5 * sp.rho * sp.rho;
        assert_eq!(rate_i_x(k, &sp).unwrap(), 0.0);
    }

    #[test]
    fn i_x_scaling_identity() {
        let sp = ScalingParams::new(0.5, 0.2, 0.0, 100, 0.01).unwrap();
        let k = 0.1;
        let direct = rate_i_x(k, &sp).unwrap();
        let via_jx = rate_j_x_uncorr(k / (sp.rho * sp.rho), sp.a).unwrap().value / (8.0 * sp.beta);
        assert_close(direct, via_jx, 1e-14, "scaling identity");
        // symmetry in model units: I_X(k) - I_X(-k) = k at corr = 0
        let d = rate_i_x(0.1, &sp).unwrap() - rate_i_x(-0.1, &sp).unwrap();
        assert_close(d, 0.1, 1e-10, "I_X symmetry");
    }

    #[test]
    fn nonnegativity_sampled() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let u = (4.0 * next() - 2.0_f64).exp();
            let v = (4.0 * next() - 2.0_f64).exp();
            assert!(rate_i(u, v).unwrap() >= 0.0);
        }
        for _ in 0..200 {
            let y = 4.0 * next() - 2.0;
            let a = 0.05 + 5.0 * next();
            assert!(rate_j_x_uncorr(y, a).unwrap().value >= -1e-12);
        }
    }

    #[test]
    fn j_x_random_box_robustness() {
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut rand = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..300 {
            let y = -20.0 + 40.0 * rand();
            let a = 10f64.powf(-3.0 + 4.0 * rand());
            let corr = -rand();
            let r = rate_j_x(y, a, corr).unwrap();
            assert!(
                r.value >= 2.0 * a * y - 1e-7 * (1.0 + (2.0 * a * y).abs()),
                "lower bound at y={y}, a={a}, corr={corr}"
            );
            if corr > -1.0 && (y + 0.5).abs() > 1e-6 {
                let (ge, gn) = rate_j_x_gradient(y, a, corr, r.u_star, r.v_star).unwrap();
                assert!(ge.abs() < 1e-8 && gn.abs() < 1e-8, "FOC at y={y}, a={a}, corr={corr}");
            }
        }
    }

    #[test]
    fn f_constant_term_consistency() {
        // the F-form cancellation at (1,1) pins F(1) = pi^2/2 - 1
        let f1 = hartman_watson_f(1.0).unwrap();
        assert_close(8.0 * f1 + 8.0 - 4.0 * PI * PI, 0.0, 1e-12, "Fexp constant");
    }
}
