//! Asymptotic implied-volatility surface of the discretized log-normal SABR
//! model: the normalized surface Sigma_BS(y; a) with its three strike
//! regions, and the limiting expansions (short maturity, ATM series, the
//! classic SABR smile formula, the O(T^2) ATM expansion, extreme strikes).

use crate::error::{validate_finite, validate_positive, Result, SabrError};
use crate::rate::{self, rate_i, rate_i_grad, rate_j_x, switch_point_y_r, ScalingParams};
use rayon::prelude::*;

/// Continuous-model inputs.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub spot: f64,
    /// Initial volatility, 1/sqrt(time) units.
    pub sigma0: f64,
    /// Vol of vol, 1/sqrt(time) units.
    pub omega: f64,
    /// Spot/vol correlation; surface operations require corr <= 0.
    pub corr: f64,
    pub maturity: f64,
}

impl ModelParams {
    pub fn new(spot: f64, sigma0: f64, omega: f64, corr: f64, maturity: f64) -> Result<Self> {
        validate_positive(spot, "spot")?;
        validate_positive(sigma0, "sigma0")?;
        validate_positive(omega, "omega")?;
        validate_positive(maturity, "maturity")?;
        if !(-1.0..=1.0).contains(&corr) {
            return Err(SabrError::invalid(format!(
                "corr must lie in [-1, 1], got {corr}"
            )));
        }
        Ok(Self {
            spot,
            sigma0,
            omega,
            corr,
            maturity,
        })
    }

    /// Surface smallness parameter `a = 2 (sigma0^2 T)(omega^2 T)`.
    pub fn a_param(&self) -> f64 {
        let s2t = self.sigma0 * self.sigma0 * self.maturity;
        let w2t = self.omega * self.omega * self.maturity;
        2.0 * s2t * w2t
    }

    /// Asymptotic-regime quantities for an `n`-step discretization.
    pub fn scaling(&self, n: u32) -> Result<ScalingParams> {
        if n == 0 {
            return Err(SabrError::invalid("n must be >= 1"));
        }
        let tau = self.maturity / n as f64;
        let beta = 0.5 * self.omega * self.omega * tau * (n as f64) * (n as f64);
        let rho = self.sigma0 * tau.sqrt();
        ScalingParams::new(beta, rho, self.corr.min(0.0), n, tau)
    }

    fn require_nonpositive_corr(&self, what: &str) -> Result<()> {
        if self.corr > 0.0 {
            return Err(SabrError::invalid(format!(
                "{what} requires corr <= 0, got {}",
                self.corr
            )));
        }
        Ok(())
    }
}

/// Strike region of the three-branch surface formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// y < -1/2.
    LeftWing,
    /// -1/2 <= y <= y_R (closed interval).
    Center,
    /// y > y_R.
    RightWing,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::LeftWing => "left_wing",
            Region::Center => "center",
            Region::RightWing => "right_wing",
        }
    }
}

/// One point of the asymptotic smile.
#[derive(Debug, Clone, Copy)]
pub struct SmilePoint {
    /// Log-strike x = log(K/S0).
    pub log_strike: f64,
    /// Normalized strike y = x / (sigma0^2 T).
    pub y_norm: f64,
    pub region: Region,
    pub implied_vol: f64,
    /// J_X(y; a, corr) at this strike.
    pub rate_value: f64,
}

const SWITCH_SNAP: f64 = 1e-9;

fn sigma_with_rate(y: f64, a: f64, corr: f64) -> Result<(f64, Region, f64)> {
    validate_positive(a, "a")?;
    validate_finite(y, "y")?;
    let y_r = switch_point_y_r(a, corr)?;
    // exact switch values: J_X(-1/2) = 0 gives Sigma = 1, J_X(y_R) = 2 a y_R
    // collapses the first square root
    if (y + 0.5).abs() <= SWITCH_SNAP {
        return Ok((1.0, Region::Center, 0.0));
    }
    if (y - y_r).abs() <= SWITCH_SNAP * y_r.abs().max(1.0) {
        return Ok(((2.0 * y_r).sqrt(), Region::Center, 2.0 * a * y_r));
    }
    let region = if y < -0.5 {
        Region::LeftWing
    } else if y <= y_r {
        Region::Center
    } else {
        Region::RightWing
    };
    let j = rate_j_x(y, a, corr)?.value;
    let big = j / a;
    // nonnegative by the lower bound J_X >= 2 a y; clamp optimizer noise
    let diff = (big - 2.0 * y).max(0.0);
    let (sd, sa) = (diff.sqrt(), big.sqrt());
    let vol = match region {
        Region::Center => sd + sa,
        _ => {
            if (sd - sa).abs() <= 1e-6 * sa.max(sd) {
                // cancellation-safe rewrite of |sqrt(J/a - 2y) - sqrt(J/a)|
                2.0 * y.abs() / (sd + sa)
            } else {
                (sd - sa).abs()
            }
        }
    };
    Ok((vol, region, j))
}

/// Normalized asymptotic implied volatility `Sigma_BS(y; a)` and its region.
///
/// Central branch `sqrt(J/a - 2y) + sqrt(J/a)` on `-1/2 <= y <= y_R`, wing
/// branch `|sqrt(J/a - 2y) - sqrt(J/a)|` elsewhere. Exactly 1 at y = -1/2 and
/// `sqrt(2 y_R)` at y = y_R.
pub fn sigma_bs_normalized(y: f64, a: f64, corr: f64) -> Result<(f64, Region)> {
    if corr > 0.0 {
        return Err(SabrError::invalid(format!(
            "sigma_bs_normalized requires corr <= 0, got {corr}"
        )));
    }
    sigma_with_rate(y, a, corr).map(|(v, r, _)| (v, r))
}

/// Asymptotic implied volatility at log-strike `x`:
/// `sigma0 Sigma_BS(x/(sigma0^2 T); a)`.
pub fn implied_vol(x: f64, m: &ModelParams) -> Result<SmilePoint> {
    m.require_nonpositive_corr("implied_vol")?;
    validate_finite(x, "x")?;
    let s2t = m.sigma0 * m.sigma0 * m.maturity;
    let y = x / s2t;
    let a = m.a_param();
    let (vol, region, rate_value) = sigma_with_rate(y, a, m.corr)?;
    Ok(SmilePoint {
        log_strike: x,
        y_norm: y,
        region,
        implied_vol: m.sigma0 * vol,
        rate_value,
    })
}

/// Linear approximation of the normalized surface near y = -1/2:
/// `1 - (1 - sqrt(c))(y + 1/2)` with `c = 1/(1 + a/6 - sqrt(a/2) corr)`.
pub fn sigma_bs_linear(y: f64, a: f64, corr: f64) -> Result<f64> {
    validate_positive(a, "a")?;
    let c = 1.0 / (1.0 + a / 6.0 - (0.5 * a).sqrt() * corr);
    Ok(1.0 - (1.0 - c.sqrt()) * (y + 0.5))
}

/// Evaluates the smile at each log-strike in parallel; output sorted by
/// strike.
pub fn smile(m: &ModelParams, log_strikes: &[f64]) -> Result<Vec<SmilePoint>> {
    let mut points = log_strikes
        .par_iter()
        .map(|&x| implied_vol(x, m))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|p, q| p.log_strike.total_cmp(&q.log_strike));
    Ok(points)
}

// ---------------------------------------------------------------------------
// Short-maturity limit
// ---------------------------------------------------------------------------

/// Short-maturity rate `J(zeta; corr)`, the `a -> 0` limit of J_X at fixed
/// `sqrt(a) y = sqrt(2) zeta`.
///
/// Closed form `2 log^2(sqrt(zeta^2+1) + |zeta|)` at zero correlation; a 2D
/// minimization of `I/2 + 2 (zeta - corr (v-1))^2 / ((1-corr^2) u)` otherwise.
pub fn short_maturity_rate(zeta: f64, corr: f64) -> Result<f64> {
    validate_finite(zeta, "zeta")?;
    if !(-1.0..=0.0).contains(&corr) {
        return Err(SabrError::invalid(format!(
            "short_maturity_rate requires corr in [-1, 0], got {corr}"
        )));
    }
    if zeta == 0.0 {
        return Ok(0.0);
    }
    if corr == 0.0 {
        let t = (zeta * zeta + 1.0).sqrt() + zeta.abs();
        return Ok(2.0 * t.ln() * t.ln());
    }
    if corr == -1.0 {
        // hard constraint v = 1 - zeta; projection over u gives 4 log^2 v
        let v = 1.0 - zeta;
        if v <= 0.0 {
            return Err(SabrError::invalid(format!(
                "short-maturity rate diverges at corr = -1 for zeta = {zeta}"
            )));
        }
        return Ok(2.0 * v.ln() * v.ln());
    }
    short_maturity_minimize(zeta, corr)
}

fn short_maturity_minimize(zeta: f64, corr: f64) -> Result<f64> {
    let objective = |c: f64| {
        let cp2 = 1.0 - c * c;
        move |e: f64, n: f64| {
            if e.abs() > 600.0 || n.abs() > 600.0 {
                return f64::INFINITY;
            }
            let (u, v) = (e.exp(), n.exp());
            match rate_i(u, v) {
                Ok(i) => {
                    let d = zeta - c * (v - 1.0);
                    0.5 * i + 2.0 / (cp2 * u) * d * d
                }
                Err(_) => f64::INFINITY,
            }
        }
    };
    let gradient = |c: f64| {
        let cp2 = 1.0 - c * c;
        move |e: f64, n: f64| {
            let (u, v) = (e.exp(), n.exp());
            match rate_i_grad(u, v) {
                Ok((iu, iv)) => {
                    let d = zeta - c * (v - 1.0);
                    (
                        u * (0.5 * iu - 2.0 / (cp2 * u * u) * d * d),
                        v * (0.5 * iv - 4.0 * c / (cp2 * u) * d),
                    )
                }
                Err(_) => (f64::NAN, f64::NAN),
            }
        }
    };
    // uncorrelated minimizer in closed form: u = sinh(xi)/xi, v = cosh(xi/2)
    // with xi = 2 asinh|zeta|; walk the correlation from there
    let xi = 2.0 * zeta.abs().asinh();
    let u0 = if xi > 1e-8 { xi.sinh() / xi } else { 1.0 };
    let v0 = (0.5 * xi).cosh();
    let mut start = (u0.ln(), v0.ln());
    let steps = (corr.abs() / 0.25).ceil().max(1.0) as usize;
    let mut value = 0.0;
    for k in 1..=steps {
        let c = corr * k as f64 / steps as f64;
        let m = rate::minimize_2d_pub(
            objective(c),
            gradient(c),
            start,
            &[(corr * zeta, corr * zeta), (0.0, 0.0)],
        )?;
        start = (m.0, m.1);
        value = m.2;
    }
    Ok(value)
}

/// Conjectured closed form
/// `2 log^2[(sqrt(1 + 2 corr zeta + zeta^2) + zeta + corr)/(1 + corr)]`;
/// matches the minimizer numerically but is unproven away from corr = 0.
pub fn short_maturity_rate_conjecture(zeta: f64, corr: f64) -> Result<f64> {
    validate_finite(zeta, "zeta")?;
    if corr <= -1.0 || corr >= 1.0 {
        return Err(SabrError::invalid(format!(
            "conjectured form needs |corr| < 1, got {corr}"
        )));
    }
    let t = ((1.0 + 2.0 * corr * zeta + zeta * zeta).sqrt() + zeta + corr) / (1.0 + corr);
    Ok(2.0 * t.ln() * t.ln())
}

/// Series `J = 2 zeta^2 - 2 corr zeta^3 + (-2/3 + 5 corr^2/2) zeta^4`.
pub fn short_maturity_rate_series(zeta: f64, corr: f64) -> f64 {
    2.0 * zeta * zeta - 2.0 * corr * zeta.powi(3)
        + (-2.0 / 3.0 + 2.5 * corr * corr) * zeta.powi(4)
}

/// T -> 0 implied volatility `sigma0 sqrt(2) |zeta| / sqrt(J(zeta; corr))`
/// with `zeta = (omega/sigma0) x`; equals sigma0 at x = 0.
pub fn short_maturity_vol(x: f64, m: &ModelParams) -> Result<f64> {
    m.require_nonpositive_corr("short_maturity_vol")?;
    validate_finite(x, "x")?;
    if x == 0.0 {
        return Ok(m.sigma0);
    }
    let zeta = m.omega / m.sigma0 * x;
    let j = short_maturity_rate(zeta, m.corr)?;
    Ok(m.sigma0 * std::f64::consts::SQRT_2 * zeta.abs() / j.sqrt())
}

// ---------------------------------------------------------------------------
// Reference expansions
// ---------------------------------------------------------------------------

/// Leading-order SABR smile formula `sigma0 zeta/D(zeta) (1 + (corr omega
/// sigma0/4 + (2 - 3 corr^2) omega^2/24) T)`; the O(T) factor is exact only
/// at the money. Accepts the full correlation range (-1, 1).
pub fn hagan_vol(x: f64, m: &ModelParams) -> Result<f64> {
    validate_finite(x, "x")?;
    if m.corr.abs() >= 1.0 {
        return Err(SabrError::invalid(
            "hagan_vol requires corr strictly inside (-1, 1)",
        ));
    }
    let c = m.corr;
    let zeta = m.omega / m.sigma0 * x;
    let ratio = if zeta.abs() < 1e-4 {
        // Taylor of zeta/D through the ATM point
        1.0 + 0.5 * c * zeta + (1.0 / 6.0 - 0.25 * c * c) * zeta * zeta
    } else {
        let d = (((1.0 + 2.0 * c * zeta + zeta * zeta).sqrt() + zeta + c) / (1.0 + c)).ln();
        zeta / d
    };
    let factor = 1.0
        + (0.25 * c * m.omega * m.sigma0 + (2.0 - 3.0 * c * c) * m.omega * m.omega / 24.0)
            * m.maturity;
    Ok(m.sigma0 * ratio * factor)
}

/// O(T^2) ATM expansion of the log-normal SABR implied volatility
/// (transform-method reference).
pub fn lewis_atm_t2(m: &ModelParams) -> Result<f64> {
    let (s0, w, c, t) = (m.sigma0, m.omega, m.corr, m.maturity);
    let r = w / s0;
    let order1 = s0 * w * t / 24.0 * (6.0 * c + r * (2.0 - 3.0 * c * c));
    let order2 = w * w * s0 * s0 * t * t / 1920.0
        * ((-80.0 + 240.0 * c * c)
            + r * c * (240.0 - 180.0 * c * c)
            + r * r * (-12.0 + 60.0 * c * c - 45.0 * c * c * c * c));
    Ok(s0 * (1.0 + order1 + order2))
}

/// Small-`a` series of the normalized ATM vol `Sigma_BS(0; a)`.
///
/// At corr = 0 the expansion has integer powers only:
/// `1 - a/48 + 43 a^2/23040 - 1907 a^3/7741440 - 51083 a^4/7431782400`.
/// Otherwise the correlated series through O(a) is returned.
pub fn atm_series(a: f64, corr: f64) -> Result<f64> {
    validate_positive(a, "a")?;
    if corr > 0.0 {
        return Err(SabrError::invalid("atm_series requires corr <= 0"));
    }
    if corr == 0.0 {
        Ok(1.0 - a / 48.0 + 43.0 * a * a / 23040.0 - 1907.0 * a.powi(3) / 7741440.0
            - 51083.0 * a.powi(4) / 7431782400.0)
    } else {
        Ok(1.0 + corr * a.sqrt() / (4.0 * std::f64::consts::SQRT_2)
            + (-1.0 / 48.0 + corr * corr / 16.0) * a)
    }
}

/// Extreme-strike expansion of `Sigma_BS(x; a, 0)` for normalized log-strike
/// x >= 10 (uncorrelated regime).
pub fn extreme_strike_vol(x: f64, a: f64) -> Result<f64> {
    validate_positive(a, "a")?;
    if x < 10.0 || x.is_nan() {
        return Err(SabrError::invalid(format!(
            "extreme-strike expansion requires x >= 10, got {x}"
        )));
    }
    let l = (2.0 * x).ln();
    let ll = (2.0 * l).ln();
    let s2a = (2.0 * a).sqrt();
    let s2x = (2.0 * x).sqrt();
    Ok(s2x - l / s2a - ll / (2.0 * a) + 1.0 / s2a + l * l / (4.0 * a * s2x)
        + l * ll / (2.0 * a * s2x))
}

/// Companion form `sqrt(2x) (sqrt(1 + r) - sqrt(r))` with
/// `r = (log^2(2x)/2 + log(2x) log(2 log 2x) - log(2x)) / (2 a x)`.
pub fn extreme_strike_vol_r_form(x: f64, a: f64) -> Result<f64> {
    validate_positive(a, "a")?;
    if x < 10.0 || x.is_nan() {
        return Err(SabrError::invalid(format!(
            "extreme-strike r-form requires x >= 10, got {x}"
        )));
    }
    let l = (2.0 * x).ln();
    let r = (0.5 * l * l + l * (2.0 * l).ln() - l) / (2.0 * a * x);
    Ok((2.0 * x).sqrt() * ((1.0 + r).sqrt() - r.sqrt()))
}

/// Large-strike implied-variance expansion in model units:
/// `sigma^2 T = 2x - sqrt(2x/(omega^2 T)) sqrt(L^2 + 2 L log(2L) - 2L)`,
/// `L = log(2x/(sigma0^2 T))`.
pub fn implied_variance_expansion(x: f64, m: &ModelParams) -> Result<f64> {
    validate_positive(x, "x")?;
    let w2t = m.omega * m.omega * m.maturity;
    let l = (2.0 * x / (m.sigma0 * m.sigma0 * m.maturity)).ln();
    if l <= 0.0 {
        return Err(SabrError::invalid(
            "implied-variance expansion needs 2x above sigma0^2 T",
        ));
    }
    Ok(2.0 * x - (2.0 * x / w2t).sqrt() * (l * l + 2.0 * l * (2.0 * l).ln() - 2.0 * l).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    }

    fn model(sigma0: f64, omega: f64, corr: f64, t: f64) -> ModelParams {
        ModelParams::new(1.0, sigma0, omega, corr, t).unwrap()
    }

    // --- Sigma_BS ---

    #[test]
    fn switch_values_exact() {
        for &(a, corr) in &[(1.0, 0.0), (0.08, -0.75), (2.0, -0.75)] {
            let (v, r) = sigma_bs_normalized(-0.5, a, corr).unwrap();
            assert_eq!(v, 1.0);
            assert_eq!(r, Region::Center);
            let yr = switch_point_y_r(a, corr).unwrap();
            let (v, r) = sigma_bs_normalized(yr, a, corr).unwrap();
            close(v, (2.0 * yr).sqrt(), 1e-12, "Sigma(y_R)");
            assert_eq!(r, Region::Center);
        }
    }

    #[test]
    fn table3_atm_normalized_small_a() {
        // Sigma(0; 0.005) = 0.19998/0.2 from the benchmark table
        let (v, _) = sigma_bs_normalized(0.0, 0.005, 0.0).unwrap();
        close(v, 0.99990, 5e-5, "Sigma(0;0.005)");
    }

    #[test]
    fn region_classification() {
        let yr = switch_point_y_r(1.0, 0.0).unwrap(); // 1/2 at corr = 0
        assert_eq!(sigma_bs_normalized(-0.7, 1.0, 0.0).unwrap().1, Region::LeftWing);
        assert_eq!(sigma_bs_normalized(0.2, 1.0, 0.0).unwrap().1, Region::Center);
        assert_eq!(sigma_bs_normalized(yr + 0.1, 1.0, 0.0).unwrap().1, Region::RightWing);
    }

    #[test]
    fn continuity_across_switch_points() {
        let h = 1e-6;
        let mut cases = vec![(1.0, -0.5)];
        for &a in &[0.005, 0.08, 0.32, 2.0] {
            for &corr in &[0.0, -0.5, -0.75] {
                cases.push((a, corr));
            }
        }
        for &(a, corr) in &cases {
            let yr = switch_point_y_r(a, corr).unwrap();
            let l = sigma_bs_normalized(yr - h, a, corr).unwrap().0;
            let r = sigma_bs_normalized(yr + h, a, corr).unwrap().0;
            assert!((l - r).abs() <= 1e-5, "switch at y_R: {l} vs {r} (a={a})");
            let l = sigma_bs_normalized(-0.5 - h, a, corr).unwrap().0;
            let r = sigma_bs_normalized(-0.5 + h, a, corr).unwrap().0;
            assert!((l - r).abs() <= 1e-5, "switch at -1/2: {l} vs {r} (a={a})");
        }
    }

    #[test]
    fn rejects_positive_corr_and_zero_a() {
        assert!(sigma_bs_normalized(0.0, 1.0, 0.1).is_err());
        assert!(sigma_bs_normalized(0.0, 0.0, 0.0).is_err());
    }

    // --- implied_vol ---

    #[test]
    fn implied_vol_matches_table3_rows() {
        // sigma0=0.2, omega=1, T=5 => a=2; benchmark 0.19286
        let m = model(0.2, 1.0, 0.0, 5.0);
        close(m.a_param(), 2.0, 1e-12, "a");
        let p = implied_vol(0.0, &m).unwrap();
        close(p.implied_vol, 0.19286, 1e-4, "ATM T=5");
        // sigma0=1, omega=0.1, T=50 => a=50; benchmark 0.72071
        let m = model(1.0, 0.1, 0.0, 50.0);
        let p = implied_vol(0.0, &m).unwrap();
        close(p.implied_vol, 0.72071, 1e-4, "ATM T=50");
    }

    #[test]
    fn implied_vol_symmetric_at_zero_corr() {
        let m = model(0.2, 1.0, 0.0, 1.0);
        for &x in &[0.01, 0.05, 0.1, 0.3] {
            let up = implied_vol(x, &m).unwrap().implied_vol;
            let dn = implied_vol(-x, &m).unwrap().implied_vol;
            close(up, dn, 1e-8, "symmetry");
        }
    }

    #[test]
    fn smile_sorted_and_consistent() {
        let m = model(0.2, 1.0, -0.75, 1.0);
        let pts = smile(&m, &[0.1, -0.1, 0.0]).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.windows(2).all(|w| w[0].log_strike < w[1].log_strike));
        let atm = implied_vol(0.0, &m).unwrap();
        close(pts[1].implied_vol, atm.implied_vol, 1e-14, "ATM consistency");
        // region boundaries for the T=1 benchmark scenario (a = 0.08):
        // x_L = -sigma0^2 T / 2, x_R = y_R sigma0^2 T
        let yr = switch_point_y_r(0.08, -0.75).unwrap();
        let s2t = 0.04;
        let just_in = implied_vol(yr * s2t * (1.0 - 1e-6), &m).unwrap();
        let just_out = implied_vol(yr * s2t * (1.0 + 1e-6), &m).unwrap();
        assert_eq!(just_in.region, Region::Center);
        assert_eq!(just_out.region, Region::RightWing);
    }

    // --- linear approximation ---

    #[test]
    fn linear_approximation() {
        close(sigma_bs_linear(-0.5, 1.0, 0.0).unwrap(), 1.0, 1e-15, "constant term");
        // a = 6, corr = 0: slope -(1 - sqrt(1/2))
        let s = sigma_bs_linear(0.5, 6.0, 0.0).unwrap() - sigma_bs_linear(-0.5, 6.0, 0.0).unwrap();
        close(s, -(1.0 - 0.5f64.sqrt()), 1e-12, "slope");
        // measured bound near the left switch point
        for &y in &[-0.55, -0.5, -0.45] {
            let lin = sigma_bs_linear(y, 1.0, -0.5).unwrap();
            let full = sigma_bs_normalized(y, 1.0, -0.5).unwrap().0;
            assert!((lin - full).abs() <= 1e-3, "y={y}: {lin} vs {full}");
        }
    }

    // --- short maturity ---

    #[test]
    fn short_rate_zero_and_closed_form() {
        assert_eq!(short_maturity_rate(0.0, -0.5).unwrap(), 0.0);
        // zeta = sinh(1): sqrt(zeta^2+1) + zeta = e, so J = 2
        close(short_maturity_rate(1.0f64.sinh(), 0.0).unwrap(), 2.0, 1e-14, "J(sinh 1)");
    }

    #[test]
    fn short_rate_matches_conjectured_form() {
        for &(z, c) in &[(0.3, -0.5), (1.0, -0.5), (-0.4, -0.75), (0.1, -0.9)] {
            let j = short_maturity_rate(z, c).unwrap();
            let jt = short_maturity_rate_conjecture(z, c).unwrap();
            assert!((j - jt).abs() <= 1e-6, "J({z};{c}) = {j} vs {jt}");
        }
    }

    #[test]
    fn short_rate_series_consistency() {
        for &c in &[0.0, -0.3, -0.7] {
            let z = 0.02;
            let j = short_maturity_rate(z, c).unwrap();
            let s = short_maturity_rate_series(z, c);
            // truncation error is O(zeta^5)
            assert!((j - s).abs() < 1e-7, "series at corr {c}: {j} vs {s}");
        }
    }

    #[test]
    fn short_vol_limits() {
        let m = model(0.2, 1.0, -0.75, 0.25);
        assert_eq!(short_maturity_vol(0.0, &m).unwrap(), 0.2);
        // corr = 0 closed form sigma0 |zeta| / log(sqrt(zeta^2+1) + |zeta|)
        let m0 = model(0.2, 1.0, 0.0, 0.25);
        for &x in &[0.05, -0.2] {
            let z: f64 = 5.0 * x;
            let expect = 0.2 * z.abs() / ((z * z + 1.0).sqrt() + z.abs()).ln();
            close(short_maturity_vol(x, &m0).unwrap(), expect, 1e-12, "closed form");
        }
        // correlated evaluation runs through the optimizer
        let v = short_maturity_vol(0.1, &m).unwrap();
        assert!(v > 0.0 && v.is_finite());
    }

    // --- Hagan / Lewis ---

    #[test]
    fn hagan_atm_values() {
        let m = model(0.2, 1.0, -0.75, 0.25);
        // direct evaluation of the ATM factor
        close(hagan_vol(0.0, &m).unwrap(), 0.19877604166666668, 1e-15, "hagan ATM");
        // T -> 0 limit is sigma0
        let m0 = model(0.2, 1.0, -0.75, 1e-12);
        close(hagan_vol(0.0, &m0).unwrap(), 0.2, 1e-10, "hagan T->0");
    }

    #[test]
    fn hagan_symmetric_at_zero_corr() {
        let m = model(0.2, 1.0, 0.0, 1.0);
        for &x in &[0.1, 0.4] {
            close(
                hagan_vol(x, &m).unwrap(),
                hagan_vol(-x, &m).unwrap(),
                1e-12,
                "hagan symmetry",
            );
        }
    }

    #[test]
    fn hagan_smooth_through_atm() {
        let m = model(0.2, 1.0, -0.5, 1.0);
        let v = |x: f64| hagan_vol(x, &m).unwrap();
        // series/exact seam at |zeta| = 1e-4, i.e. x = 2e-5
        let h = 1e-6;
        for &x in &[1.9e-5, 2.0e-5, 2.1e-5] {
            let curv = (v(x + h) + v(x - h) - 2.0 * v(x)) / (h * h);
            // the analytic curvature here is ~1; a seam would blow this up
            assert!(curv.abs() < 10.0, "curvature {curv} at {x}");
        }
    }

    #[test]
    fn lewis_t2_table_values() {
        let m = model(0.2, 1.0, 0.0, 0.25);
        close(lewis_atm_t2(&m).unwrap(), 0.204068, 1e-5 * 0.204068, "T=0.25");
        let m = model(1.0, 0.1, 0.0, 1.0);
        close(lewis_atm_t2(&m).unwrap(), 1.00042, 1e-5 * 1.00042, "T=1");
        // breakdown at large maturity
        let m = model(0.2, 1.0, 0.0, 50.0);
        close(lewis_atm_t2(&m).unwrap(), -2.925, 1e-5 * 2.925, "T=50 breakdown");
    }

    // --- ATM series ---

    #[test]
    fn atm_series_values() {
        close(atm_series(1e-9, 0.0).unwrap(), 1.0, 1e-10, "a -> 0");
        let a = 0.08f64;
        let expect = 1.0 - a / 48.0 + 43.0 * a * a / 23040.0 - 1907.0 * a.powi(3) / 7741440.0
            - 51083.0 * a.powi(4) / 7431782400.0;
        close(atm_series(a, 0.0).unwrap(), expect, 1e-15, "uncorrelated series");
        assert!((atm_series(a, 0.0).unwrap() - 0.998345).abs() < 1e-6);
        // measured bound against the full surface at a = 0.5
        let full = sigma_bs_normalized(0.0, 0.5, 0.0).unwrap().0;
        assert!((atm_series(0.5, 0.0).unwrap() - full).abs() <= 5e-5);
    }

    #[test]
    fn atm_series_correlated_term() {
        let (a, c) = (0.04f64, -0.6);
        let expect = 1.0 + c * a.sqrt() / (4.0 * std::f64::consts::SQRT_2)
            + (-1.0 / 48.0 + c * c / 16.0) * a;
        close(atm_series(a, c).unwrap(), expect, 1e-15, "correlated series");
    }

    // --- extreme strikes ---

    #[test]
    fn extreme_strike_leading_order_and_accuracy() {
        let a = 1.0;
        for &x in &[1e4, 1e6] {
            let exact = sigma_bs_normalized(x, a, 0.0).unwrap().0;
            let exp = extreme_strike_vol(x, a).unwrap();
            let rel = (exp - exact).abs() / exact;
            let bound = if x < 1e5 { 2e-2 } else { 1e-2 };
            assert!(rel <= bound, "x={x}: rel {rel}");
        }
        // leading ratio -> 1
        let x = 1e8;
        let ratio = extreme_strike_vol(x, a).unwrap() / (2.0 * x).sqrt();
        assert!((ratio - 1.0).abs() < 5e-3);
        assert!(extreme_strike_vol(5.0, 1.0).is_err());
        // r-form variant agrees at leading orders
        let d = extreme_strike_vol(1e6, 1.0).unwrap() - extreme_strike_vol_r_form(1e6, 1.0).unwrap();
        assert!(d.abs() / extreme_strike_vol(1e6, 1.0).unwrap() < 1e-3);
    }

    #[test]
    fn lee_bound_on_wing_growth() {
        let m = model(0.2, 1.0, 0.0, 1.0);
        let s2t = 0.04;
        for &x in &[50.0 * s2t, 400.0 * s2t, 3000.0 * s2t] {
            let p = implied_vol(x, &m).unwrap();
            let total_var = p.implied_vol * p.implied_vol * m.maturity;
            assert!(total_var <= 2.0 * x * 1.05, "Lee bound at x={x}");
        }
    }

    #[test]
    fn benchmark_smile_shape() {
        // 101-point grid for the T = 0.25 benchmark scenario: decreasing
        // left wing, minimum near the center
        let m = model(0.2, 1.0, -0.75, 0.25);
        let xs: Vec<f64> = (0..101).map(|i| -0.5 + i as f64 / 100.0).collect();
        let pts = smile(&m, &xs).unwrap();
        for w in pts.windows(2).take(40) {
            assert!(w[1].implied_vol < w[0].implied_vol, "left wing must decrease");
        }
        let (imin, _) = pts
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.implied_vol.total_cmp(&b.1.implied_vol))
            .unwrap();
        // interior minimum pushed right of ATM by the negative correlation
        assert!(imin > 0 && imin < pts.len() - 1, "minimum at the grid edge");
        let x_min = pts[imin].log_strike;
        assert!(
            (0.0..0.4).contains(&x_min),
            "minimum at x = {x_min}, expected right of ATM"
        );
    }

    #[test]
    fn variance_expansion_form() {
        let m = model(0.2, 1.0, 0.0, 1.0);
        let x = 400.0;
        let v = implied_variance_expansion(x, &m).unwrap();
        assert!(v > 0.0 && v < 2.0 * x);
    }

    // --- parameter validation ---

    #[test]
    fn model_params_validation() {
        assert!(ModelParams::new(0.0, 0.2, 1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -0.2, 1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.2, 1.0, -1.5, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.2, 1.0, 0.0, 0.0).is_err());
        // positive corr constructs (for Hagan/Lewis) but the surface rejects it
        let m = ModelParams::new(1.0, 0.2, 1.0, 0.3, 1.0).unwrap();
        assert!(implied_vol(0.0, &m).is_err());
        assert!(hagan_vol(0.1, &m).is_ok());
    }

    #[test]
    fn scaling_from_model() {
        let m = model(0.2, 1.0, -0.75, 1.0);
        let sp = m.scaling(100).unwrap();
        close(sp.a, 0.08, 1e-14, "a from model");
        close(sp.rho, 0.02, 1e-15, "rho from model");
        close(sp.beta, 50.0, 1e-12, "beta from model");
    }
}
