//! Monte Carlo implementation of the modified Log-Euler scheme: the
//! volatility path is simulated exactly on the grid, the orthogonal Gaussian
//! is either sampled (plain paths) or integrated out analytically
//! (conditional pricing), and all estimators are bit-reproducible for a
//! given seed independent of the thread count.

use crate::black::{
    bs_implied_totalstdev, bs_implied_totalstdev_from_covered, bs_price, BsQuote,
};
use crate::error::{validate_finite, validate_positive, Result, SabrError};
use crate::surface::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Discretization configuration for the scheme.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub model: ModelParams,
    pub n_steps: u32,
    /// Volatility drift alpha (d sigma = alpha sigma dt + omega sigma dZ);
    /// zero for the plain scheme.
    pub vol_drift: f64,
    /// Permits corr > 0 (outside the martingale theory) for research runs.
    pub research_positive_corr: bool,
}

impl SchemeConfig {
    pub fn new(model: ModelParams, n_steps: u32) -> Result<Self> {
        if n_steps == 0 {
            return Err(SabrError::invalid("n_steps must be >= 1"));
        }
        Ok(Self {
            model,
            n_steps,
            vol_drift: 0.0,
            research_positive_corr: false,
        })
    }

    pub fn with_vol_drift(mut self, alpha: f64) -> Result<Self> {
        validate_finite(alpha, "vol_drift")?;
        self.vol_drift = alpha;
        Ok(self)
    }

    pub fn with_research_positive_corr(mut self) -> Self {
        self.research_positive_corr = true;
        self
    }

    pub fn tau(&self) -> f64 {
        self.model.maturity / self.n_steps as f64
    }

    fn check_correlated_ok(&self) -> Result<()> {
        let m = &self.model;
        if m.omega == 0.0 && m.corr != 0.0 {
            return Err(SabrError::invalid(
                "omega = 0 with corr != 0 leaves the correlated vol term undefined",
            ));
        }
        if m.corr > 0.0 && !self.research_positive_corr {
            return Err(SabrError::invalid(
                "corr > 0 requires research mode (asymptotic martingale property fails there)",
            ));
        }
        Ok(())
    }
}

/// Terminal state of one simulated volatility path.
#[derive(Debug, Clone, Copy)]
pub struct PathState {
    /// V_n = sum sigma_i^2 tau over i = 0..n-1.
    pub v_sum: f64,
    /// sigma_n at the final grid point.
    pub sigma_end: f64,
    /// Accumulated (alpha - omega^2/2) t_n drift in log sigma.
    pub log_sigma_drift: f64,
}

/// Monte Carlo statistic with its seed provenance.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub seed: u64,
}

/// Per-path generator: a ChaCha stream keyed by (seed, path index), so the
/// draw sequence depends only on that pair and never on scheduling.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    const DOMAIN_TAG: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&path_index.to_le_bytes());
    key[16..24].copy_from_slice(&DOMAIN_TAG.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Simulates the volatility leg: sigma_i = sigma0 exp(omega Z_i + (alpha -
/// omega^2/2) t_i) on the uniform grid, accumulating V_n and sigma_n.
pub fn simulate_vol_path<R: rand::Rng>(cfg: &SchemeConfig, rng: &mut R) -> PathState {
    let m = &cfg.model;
    let n = cfg.n_steps as usize;
    let tau = cfg.tau();
    let sqrt_tau = tau.sqrt();
    let drift = cfg.vol_drift - 0.5 * m.omega * m.omega;
    let mut z = 0.0f64;
    let mut sigma = m.sigma0;
    let mut v_sum = 0.0f64;
    for i in 0..n {
        v_sum += sigma * sigma * tau;
        let u: f64 = StandardNormal.sample(rng);
        z += sqrt_tau * u;
        sigma = m.sigma0 * (m.omega * z + drift * tau * (i + 1) as f64).exp();
    }
    PathState {
        v_sum,
        sigma_end: sigma,
        log_sigma_drift: drift * m.maturity,
    }
}

/// One sample of log S_n from the closed-form representation
/// `log S0 + corr_perp sqrt(V_n) Z - V_n/2 + (corr/omega)(sigma_n - sigma0)`.
pub fn simulate_log_s<R: rand::Rng>(cfg: &SchemeConfig, rng: &mut R) -> Result<f64> {
    cfg.check_correlated_ok()?;
    let m = &cfg.model;
    let ps = simulate_vol_path(cfg, rng);
    let z: f64 = StandardNormal.sample(rng);
    let corr_perp = (1.0 - m.corr * m.corr).sqrt();
    let parallel = if m.omega > 0.0 {
        m.corr / m.omega * (ps.sigma_end - m.sigma0)
    } else {
        0.0
    };
    Ok(m.spot.ln() + corr_perp * ps.v_sum.sqrt() * z - 0.5 * ps.v_sum + parallel)
}

// deterministic chunked reduction: per-chunk Kahan sums combined in chunk
// order, so the result is independent of the rayon schedule
const CHUNK: u64 = 4096;

fn accumulate<F>(n_paths: u64, seed: u64, n_stats: usize, per_path: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(u64, &mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let n_chunks = n_paths.div_ceil(CHUNK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(n_paths);
            let mut sums = vec![0.0f64; n_stats];
            let mut comps = vec![0.0f64; n_stats];
            let mut sq_sums = vec![0.0f64; n_stats];
            let mut sq_comps = vec![0.0f64; n_stats];
            let mut vals = vec![0.0f64; n_stats];
            for path in lo..hi {
                let mut rng = path_rng(seed, path);
                per_path(path, &mut rng, &mut vals);
                for (j, &v) in vals.iter().enumerate() {
                    let y = v - comps[j];
                    let t = sums[j] + y;
                    comps[j] = (t - sums[j]) - y;
                    sums[j] = t;
                    let y = v * v - sq_comps[j];
                    let t = sq_sums[j] + y;
                    sq_comps[j] = (t - sq_sums[j]) - y;
                    sq_sums[j] = t;
                }
            }
            (sums, sq_sums)
        })
        .collect();
    let mut sums = vec![0.0f64; n_stats];
    let mut sq_sums = vec![0.0f64; n_stats];
    for (s, q) in partials {
        for j in 0..n_stats {
            sums[j] += s[j];
            sq_sums[j] += q[j];
        }
    }
    (sums, sq_sums)
}

fn estimate(sum: f64, sq_sum: f64, n: u64, seed: u64) -> McEstimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sq_sum - nf * mean * mean) / (nf - 1.0)).max(0.0);
    McEstimate {
        mean,
        std_error: (var / nf).sqrt(),
        n_paths: n,
        seed,
    }
}

fn validate_paths(n_paths: u64) -> Result<()> {
    if n_paths < 2 {
        return Err(SabrError::invalid("n_paths must be >= 2"));
    }
    Ok(())
}

/// Conditional Monte Carlo option price: the orthogonal Gaussian is
/// integrated out, each path contributing the Black-Scholes value with
/// forward `S0 exp(-corr^2 V_n/2 + (corr/omega)(sigma_n - sigma0))` and total
/// stdev `corr_perp sqrt(V_n)`.
pub fn conditional_price(
    cfg: &SchemeConfig,
    strike: f64,
    is_call: bool,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    validate_positive(strike, "strike")?;
    validate_paths(n_paths)?;
    cfg.check_correlated_ok()?;
    let m = cfg.model;
    let cfg = *cfg;
    let corr_perp = (1.0 - m.corr * m.corr).sqrt();
    let (sums, sqs) = accumulate(n_paths, seed, 1, move |_, rng, out| {
        let ps = simulate_vol_path(&cfg, rng);
        let parallel = if m.omega > 0.0 {
            m.corr / m.omega * (ps.sigma_end - m.sigma0)
        } else {
            0.0
        };
        let forward = m.spot * (-0.5 * m.corr * m.corr * ps.v_sum + parallel).exp();
        out[0] = bs_price(&BsQuote {
            forward,
            strike,
            total_stdev: corr_perp * ps.v_sum.sqrt(),
            is_call,
        });
    });
    Ok(estimate(sums[0], sqs[0], n_paths, seed))
}

/// Plain payoff-averaging estimator on the same per-path streams; reference
/// for the variance-reduction comparison (the conditional estimator draws one
/// extra normal per path, which this consumes identically).
pub fn naive_price(
    cfg: &SchemeConfig,
    strike: f64,
    is_call: bool,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    validate_positive(strike, "strike")?;
    validate_paths(n_paths)?;
    cfg.check_correlated_ok()?;
    let cfg = *cfg;
    let (sums, sqs) = accumulate(n_paths, seed, 1, move |_, rng, out| {
        let s = simulate_log_s(&cfg, rng).expect("validated config").exp();
        out[0] = if is_call {
            (s - strike).max(0.0)
        } else {
            (strike - s).max(0.0)
        };
    });
    Ok(estimate(sums[0], sqs[0], n_paths, seed))
}

/// Estimates `E[S_n]/S0` through the conditional representation
/// `E[exp(-corr^2 V_n/2 + (corr/omega)(sigma_n - sigma0))]`; the integrand is
/// identically 1 at corr = 0, making the martingale identity exact there.
pub fn martingale_defect(cfg: &SchemeConfig, n_paths: u64, seed: u64) -> Result<McEstimate> {
    validate_paths(n_paths)?;
    cfg.check_correlated_ok()?;
    let m = cfg.model;
    let cfg = *cfg;
    let (sums, sqs) = accumulate(n_paths, seed, 1, move |_, rng, out| {
        let ps = simulate_vol_path(&cfg, rng);
        out[0] = if m.corr == 0.0 {
            1.0
        } else {
            (-0.5 * m.corr * m.corr * ps.v_sum + m.corr / m.omega * (ps.sigma_end - m.sigma0))
                .exp()
        };
    });
    Ok(estimate(sums[0], sqs[0], n_paths, seed))
}

/// Sample mean and standard error of the almost-sure-limit statistic
/// `(log S_n - log S0)/n`; converges to `-rho^2/2` (times the drift factor
/// `(e^{2 alpha_inf} - 1)/(2 alpha_inf)` when a volatility drift is present).
pub fn as_limit_statistic(cfg: &SchemeConfig, n_paths: u64, seed: u64) -> Result<McEstimate> {
    validate_paths(n_paths)?;
    cfg.check_correlated_ok()?;
    let cfg = *cfg;
    let n = cfg.n_steps as f64;
    let log_s0 = cfg.model.spot.ln();
    let (sums, sqs) = accumulate(n_paths, seed, 1, move |_, rng, out| {
        out[0] = (simulate_log_s(&cfg, rng).expect("validated config") - log_s0) / n;
    });
    Ok(estimate(sums[0], sqs[0], n_paths, seed))
}

/// Limit of the almost-sure statistic for the configured drift:
/// `-rho^2/2 (e^{2 alpha_inf} - 1)/(2 alpha_inf)`, `alpha_inf = alpha tau n`.
pub fn as_limit_target(cfg: &SchemeConfig) -> f64 {
    let rho2 = cfg.model.sigma0 * cfg.model.sigma0 * cfg.tau();
    let alpha_inf = cfg.vol_drift * cfg.model.maturity;
    let factor = if alpha_inf.abs() < 1e-12 {
        1.0
    } else {
        ((2.0 * alpha_inf).exp() - 1.0) / (2.0 * alpha_inf)
    };
    -0.5 * rho2 * factor
}

/// Sample variance (with its standard error) of the fluctuation statistic
/// `(log S_n - log S0 + rho^2 n/2)/sqrt(n)`; the limit variance is
/// `rho^2 + 2 rho^4 beta/3` at corr = 0.
pub fn fluctuation_variance(cfg: &SchemeConfig, n_paths: u64, seed: u64) -> Result<(f64, f64)> {
    validate_paths(n_paths)?;
    cfg.check_correlated_ok()?;
    let cfg = *cfg;
    let n = cfg.n_steps as f64;
    let rho2 = cfg.model.sigma0 * cfg.model.sigma0 * cfg.tau();
    let log_s0 = cfg.model.spot.ln();
    // raw moments up to fourth order for the variance-of-variance estimate
    let (sums, _) = accumulate(n_paths, seed, 4, move |_, rng, out| {
        let w = (simulate_log_s(&cfg, rng).expect("validated config") - log_s0
            + 0.5 * rho2 * n)
            / n.sqrt();
        out[0] = w;
        out[1] = w * w;
        out[2] = w * w * w;
        out[3] = w * w * w * w;
    });
    let nf = n_paths as f64;
    let m1 = sums[0] / nf;
    let m2 = sums[1] / nf;
    let m3 = sums[2] / nf;
    let m4 = sums[3] / nf;
    let var = (m2 - m1 * m1) * nf / (nf - 1.0);
    let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    let se = ((mu4 - var * var).max(0.0) / nf).sqrt();
    Ok((var, se))
}

/// One smile point estimated from Monte Carlo, with the implied-vol band
/// from bumping the price by one standard error.
#[derive(Debug, Clone)]
pub struct McSmilePoint {
    pub log_strike: f64,
    pub price: McEstimate,
    pub implied_vol: Option<f64>,
    pub vol_band: Option<(f64, f64)>,
    /// Inversion failure reason, if the price fell outside arbitrage bounds.
    pub error: Option<String>,
}

/// Conditional prices at each strike (one path sweep) inverted to implied
/// vols; inversion failures are flagged per strike without aborting.
///
/// Three statistics are accumulated per strike: the call, the covered call
/// `S0 - C` (cancellation-free), and the put. The inversion runs on whichever
/// is smallest relative to its scale, matching the three strike regions where
/// prices decay and preserving the implied vol long after `S0 - C` has fallen
/// below the floating-point resolution of the call itself.
pub fn mc_smile(
    cfg: &SchemeConfig,
    log_strikes: &[f64],
    n_paths: u64,
    seed: u64,
) -> Result<Vec<McSmilePoint>> {
    validate_paths(n_paths)?;
    cfg.check_correlated_ok()?;
    let m = cfg.model;
    let cfg = *cfg;
    let corr_perp = (1.0 - m.corr * m.corr).sqrt();
    let strikes: Vec<f64> = log_strikes.iter().map(|&x| m.spot * x.exp()).collect();
    let strikes_for_paths = strikes.clone();
    let n_strikes = strikes.len();
    let (sums, sqs) = accumulate(n_paths, seed, 3 * n_strikes, move |_, rng, out| {
        let ps = simulate_vol_path(&cfg, rng);
        let parallel = if m.omega > 0.0 {
            m.corr / m.omega * (ps.sigma_end - m.sigma0)
        } else {
            0.0
        };
        // w = log(F_n/S0), kept in log form for the covered-call rewrite
        let w = -0.5 * m.corr * m.corr * ps.v_sum + parallel;
        let forward = m.spot * w.exp();
        let stdev = corr_perp * ps.v_sum.sqrt();
        for (j, &k) in strikes_for_paths.iter().enumerate() {
            let q = BsQuote {
                forward,
                strike: k,
                total_stdev: stdev,
                is_call: true,
            };
            out[j] = bs_price(&q);
            out[n_strikes + j] = if stdev == 0.0 {
                m.spot - (forward - k).max(0.0)
            } else {
                // S0 - C = -S0 expm1(w + ln N(d1)) + K N(d2)
                let d1 = (forward / k).ln() / stdev + 0.5 * stdev;
                -m.spot * (w + crate::black::ln_normal_cdf(d1)).exp_m1()
                    + k * crate::black::normal_cdf(d1 - stdev)
            };
            out[2 * n_strikes + j] = bs_price(&BsQuote { is_call: false, ..q });
        }
    });
    let sqrt_t = m.maturity.sqrt();
    let to_vol = |s: f64| s / sqrt_t;
    Ok(log_strikes
        .iter()
        .zip(&strikes)
        .enumerate()
        .map(|(j, (&x, &k))| {
            let call = estimate(sums[j], sqs[j], n_paths, seed);
            let covered = estimate(sums[n_strikes + j], sqs[n_strikes + j], n_paths, seed);
            let put = estimate(sums[2 * n_strikes + j], sqs[2 * n_strikes + j], n_paths, seed);
            // pick the best-conditioned representation: the OTM put below
            // spot, the covered call when C is pinned to S0, the call
            // otherwise
            type Inverter = Box<dyn Fn(f64) -> Result<f64>>;
            let (est, invert): (&McEstimate, Inverter) =
                if put.mean <= call.mean.min(covered.mean) {
                    (&put, Box::new(move |p| bs_implied_totalstdev(p, m.spot, k, false)))
                } else if covered.mean < call.mean {
                    (
                        &covered,
                        Box::new(move |p| bs_implied_totalstdev_from_covered(p, m.spot, k)),
                    )
                } else {
                    (&call, Box::new(move |p| bs_implied_totalstdev(p, m.spot, k, true)))
                };
            match invert(est.mean) {
                Ok(s) => {
                    let vol = to_vol(s);
                    let a = invert(est.mean - est.std_error).map(to_vol).unwrap_or(vol);
                    let b = invert(est.mean + est.std_error).map(to_vol).unwrap_or(vol);
                    McSmilePoint {
                        log_strike: x,
                        price: call,
                        implied_vol: Some(vol),
                        vol_band: Some((a.min(b), a.max(b))),
                        error: None,
                    }
                }
                Err(e) => McSmilePoint {
                    log_strike: x,
                    price: call,
                    implied_vol: None,
                    vol_band: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Hull-White vol-of-vol mapping: a driftless variance process with
/// vol-of-variance `xi` matches the scheme with `omega = xi/2`.
pub fn hull_white_map(xi: f64) -> Result<f64> {
    validate_positive(xi, "xi")?;
    Ok(0.5 * xi)
}

/// Which of the tabulated asymptotic regimes the inputs approximate.
pub fn regime_label(m: &ModelParams, n: u32) -> &'static str {
    let w2t = m.omega * m.omega * m.maturity;
    let s2t = m.sigma0 * m.sigma0 * m.maturity;
    let _ = n;
    if m.maturity >= 10.0 && w2t <= 0.5 {
        "large maturity, small vol-of-vol (regime 3)"
    } else if m.maturity <= 0.5 && s2t >= 2.0 {
        "small maturity, large initial vol (regime 2)"
    } else if w2t <= 0.5 && s2t >= 2.0 {
        "finite maturity, small vol-of-vol, large initial vol (regime 1)"
    } else {
        "outside the tabulated asymptotic regimes"
    }
}

/// Exact mean of V_n/(sigma0^2 T) for the discrete scheme (geometric sum of
/// the per-step second moments); oracle for the vol-path tests.
pub fn v_sum_relative_mean(cfg: &SchemeConfig) -> f64 {
    let m = &cfg.model;
    let n = cfg.n_steps as usize;
    let tau = cfg.tau();
    let g = (2.0 * cfg.vol_drift + m.omega * m.omega) * tau;
    let mut total = 0.0;
    for i in 0..n {
        total += (g * i as f64).exp();
    }
    total * tau / m.maturity
}
