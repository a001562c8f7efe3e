//! Two-dimensional minimizer used by the rate-function extremal problems.
//!
//! Damped Newton in log coordinates with a finite-difference Hessian built
//! from the analytic gradient, falling back to Nelder-Mead when Newton cannot
//! make progress. Objectives return `f64::INFINITY` where they are undefined.

use crate::error::{Result, SabrError};

pub(crate) struct MinResult {
    pub eps: f64,
    pub eta: f64,
    pub value: f64,
    pub grad_norm: f64,
}

const GRAD_TOL: f64 = 1e-10;
/// First-order-condition bound the caller is promised.
pub const FOC_TOL: f64 = 1e-8;

fn fd_hessian<G>(grad: &G, e: f64, n: f64) -> [[f64; 2]; 2]
where
    G: Fn(f64, f64) -> (f64, f64),
{
    let he = 1e-6 * (1.0 + e.abs());
    let hn = 1e-6 * (1.0 + n.abs());
    let (gpe0, gpe1) = grad(e + he, n);
    let (gme0, gme1) = grad(e - he, n);
    let (gpn0, gpn1) = grad(e, n + hn);
    let (gmn0, gmn1) = grad(e, n - hn);
    let h00 = (gpe0 - gme0) / (2.0 * he);
    let h11 = (gpn1 - gmn1) / (2.0 * hn);
    let h01 = 0.5 * ((gpn0 - gmn0) / (2.0 * hn) + (gpe1 - gme1) / (2.0 * he));
    [[h00, h01], [h01, h11]]
}

fn newton_direction(h: [[f64; 2]; 2], g: (f64, f64)) -> (f64, f64) {
    // shift the Hessian until positive definite, then solve H d = -g
    let mut shift = 0.0;
    let scale = h[0][0].abs().max(h[1][1].abs()).max(1e-8);
    for _ in 0..60 {
        let a = h[0][0] + shift;
        let c = h[1][1] + shift;
        let det = a * c - h[0][1] * h[0][1];
        if a > 0.0 && det > 1e-14 * scale * scale {
            let d0 = (-g.0 * c + g.1 * h[0][1]) / det;
            let d1 = (-g.1 * a + g.0 * h[0][1]) / det;
            if d0.is_finite() && d1.is_finite() {
                return (d0, d1);
            }
        }
        shift = if shift == 0.0 { 1e-8 * scale } else { shift * 10.0 };
    }
    (-g.0, -g.1)
}

fn newton_loop<F, G>(f: &F, grad: &G, start: (f64, f64)) -> Option<MinResult>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> (f64, f64),
{
    let (mut e, mut n) = start;
    let mut fv = f(e, n);
    if !fv.is_finite() {
        return None;
    }
    for _ in 0..120 {
        let g = grad(e, n);
        if !g.0.is_finite() || !g.1.is_finite() {
            return None;
        }
        let gn = g.0.abs().max(g.1.abs());
        if gn < GRAD_TOL {
            return Some(MinResult { eps: e, eta: n, value: fv, grad_norm: gn });
        }
        let h = fd_hessian(grad, e, n);
        let (mut d0, mut d1) = newton_direction(h, g);
        let mut slope = g.0 * d0 + g.1 * d1;
        if slope >= 0.0 {
            d0 = -g.0;
            d1 = -g.1;
            slope = -(g.0 * g.0 + g.1 * g.1);
        }
        // trust-region style cap keeps exp() arguments sane
        let norm = d0.abs().max(d1.abs());
        if norm > 2.0 {
            d0 *= 2.0 / norm;
            d1 *= 2.0 / norm;
            slope *= 2.0 / norm;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let (en, nn) = (e + t * d0, n + t * d1);
            let fn_ = f(en, nn);
            if fn_.is_finite() && fn_ <= fv + 1e-4 * t * slope {
                e = en;
                n = nn;
                fv = fn_;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // near the minimum the objective differences fall below f64 noise and
    // the Armijo test stalls; finish on the gradient norm instead, where
    // Newton still converges quadratically
    let mut g = grad(e, n);
    let mut gn = g.0.abs().max(g.1.abs());
    for _ in 0..30 {
        if gn < GRAD_TOL || !gn.is_finite() {
            break;
        }
        let h = fd_hessian(grad, e, n);
        let (d0, d1) = newton_direction(h, g);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let (en, nn) = (e + t * d0, n + t * d1);
            let gt = grad(en, nn);
            let gtn = gt.0.abs().max(gt.1.abs());
            if gtn.is_finite() && gtn < gn {
                e = en;
                n = nn;
                g = gt;
                gn = gtn;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let fv = f(e, n);
    Some(MinResult { eps: e, eta: n, value: fv, grad_norm: gn })
}

fn nelder_mead<F>(f: &F, start: (f64, f64), scale: f64) -> (f64, f64, f64)
where
    F: Fn(f64, f64) -> f64,
{
    let mut pts = [
        (start.0, start.1),
        (start.0 + scale, start.1),
        (start.0, start.1 + scale),
    ];
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p.0, p.1)).collect();
    for _ in 0..4000 {
        // order ascending
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        if (vals[w] - vals[b]).abs() < 1e-15 * (1.0 + vals[b].abs()) {
            break;
        }
        let cen = (
            0.5 * (pts[b].0 + pts[m].0),
            0.5 * (pts[b].1 + pts[m].1),
        );
        let refl = (2.0 * cen.0 - pts[w].0, 2.0 * cen.1 - pts[w].1);
        let fr = f(refl.0, refl.1);
        if fr < vals[b] {
            let exp = (cen.0 + 2.0 * (refl.0 - cen.0), cen.1 + 2.0 * (refl.1 - cen.1));
            let fe = f(exp.0, exp.1);
            if fe < fr {
                pts[w] = exp;
                vals[w] = fe;
            } else {
                pts[w] = refl;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            pts[w] = refl;
            vals[w] = fr;
        } else {
            let con = (
                cen.0 + 0.5 * (pts[w].0 - cen.0),
                cen.1 + 0.5 * (pts[w].1 - cen.1),
            );
            let fc = f(con.0, con.1);
            if fc < vals[w] {
                pts[w] = con;
                vals[w] = fc;
            } else {
                for i in 0..3 {
                    if i != b {
                        pts[i] = (
                            pts[b].0 + 0.5 * (pts[i].0 - pts[b].0),
                            pts[b].1 + 0.5 * (pts[i].1 - pts[b].1),
                        );
                        vals[i] = f(pts[i].0, pts[i].1);
                    }
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    (pts[best].0, pts[best].1, vals[best])
}

/// Minimizes `f` over log coordinates starting from `start`, trying the given
/// extra seeds if Newton stalls. The returned point satisfies the first-order
/// conditions to [`FOC_TOL`].
pub(crate) fn minimize_2d<F, G>(
    f: F,
    grad: G,
    start: (f64, f64),
    extra_starts: &[(f64, f64)],
    context: &str,
) -> Result<MinResult>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> (f64, f64),
{
    let mut best: Option<MinResult> = None;
    let consider = |cand: Option<MinResult>, best: &mut Option<MinResult>| {
        if let Some(c) = cand {
            let better = match best {
                None => true,
                Some(b) => c.value < b.value || (c.value <= b.value && c.grad_norm < b.grad_norm),
            };
            if better {
                *best = Some(c);
            }
        }
    };

    consider(newton_loop(&f, &grad, start), &mut best);
    if best.as_ref().is_none_or(|b| b.grad_norm > GRAD_TOL) {
        for &s in extra_starts {
            consider(newton_loop(&f, &grad, s), &mut best);
            if best.as_ref().is_some_and(|b| b.grad_norm <= GRAD_TOL) {
                break;
            }
        }
    }
    if best.as_ref().is_none_or(|b| b.grad_norm > GRAD_TOL) {
        // Nelder-Mead rescue, then polish with Newton
        let s = best
            .as_ref()
            .map(|b| (b.eps, b.eta))
            .unwrap_or(start);
        let (e, n, _) = nelder_mead(&f, s, 0.5);
        consider(newton_loop(&f, &grad, (e, n)), &mut best);
    }
    match best {
        Some(b) if b.grad_norm <= FOC_TOL => Ok(b),
        Some(b) => Err(SabrError::NoConvergence {
            message: format!(
                "{context}: gradient norm {:.3e} above {FOC_TOL:.0e} at (eps, eta) = ({:.6e}, {:.6e}), value {:.6e}",
                b.grad_norm, b.eps, b.eta, b.value
            ),
        }),
        None => Err(SabrError::NoConvergence {
            message: format!("{context}: objective undefined at every starting point"),
        }),
    }
}

/// Golden-section minimizer for the one-dimensional constrained cases.
pub(crate) fn golden_min_1d<F>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..220 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
        if (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
            break;
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}
