//! Deterministic quadrature for the trace model: the moment generating
//! function of the USp(2r) trace, the clipped log-MGF
//!
//! ```text
//! f_X(t) = log E e^{tX}            for |t| < 1,
//!          log E e^{tX} - N|t|     for |t| >= 1,      N = 2r,
//! ```
//!
//! the integral of f_X(u)/u^2, the tail constants A0 and B0, the exact
//! product formula for log L_X(s) = sum_h log E exp(s gamma_m(h) X(h)), the
//! saddle point, and the resulting double-exponential tail prediction.
//! Everything here is quadrature; no Monte Carlo.

use crate::partial_sums::gamma_m;
use crate::quadrature::{adaptive_simpson, gauss_cached, map_rule};
use crate::EULER_GAMMA;
use rayon::prelude::*;
use std::f64::consts::PI;

fn weyl_normalization(r: u32) -> f64 {
    // 2^(r^2) / (r! pi^r)
    let mut fact = 1.0;
    for k in 2..=r as u64 {
        fact *= k as f64;
    }
    2f64.powi((r * r) as i32) / (fact * PI.powi(r as i32))
}

/// Per-dimension quadrature nodes for integrands concentrated near theta = 0
/// at scale 1/sqrt(t): two Gauss–Legendre panels split at theta_c, with the
/// near panel shrinking as t grows. `points_per_panel` is 32 for r = 1 (64
/// nodes per factor) and 16 for r in {2, 3} (tensor 32^r nodes).
fn theta_rule(t_abs: f64, points_per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let theta_c = if t_abs <= 58.0 {
        PI / 2.0
    } else {
        12.0 / t_abs.sqrt()
    };
    let (base_x, base_w) = gauss_cached(points_per_panel);
    let (mut xs, mut ws) = map_rule(base_x, base_w, 0.0, theta_c);
    let (xs2, ws2) = map_rule(base_x, base_w, theta_c, PI);
    xs.extend(xs2);
    ws.extend(ws2);
    (xs, ws)
}

/// E[e^{t(X - N)}] for t >= 0: the exponentially scaled MGF, free of
/// overflow and of large-t cancellation.
fn scaled_mgf(t_abs: f64, r: u32) -> f64 {
    debug_assert!(t_abs >= 0.0);
    let per_panel = if r == 1 { 32 } else { 16 };
    let (xs, ws) = theta_rule(t_abs, per_panel);
    let k = xs.len();
    let cosv: Vec<f64> = xs.iter().map(|&t| t.cos()).collect();
    let sin2: Vec<f64> = xs.iter().map(|&t| t.sin().powi(2)).collect();
    let expv: Vec<f64> = cosv.iter().map(|&c| (2.0 * t_abs * (c - 1.0)).exp()).collect();
    let norm = weyl_normalization(r);
    match r {
        1 => {
            let mut acc = 0.0;
            for i in 0..k {
                acc += ws[i] * sin2[i] * expv[i];
            }
            norm * acc
        }
        2 => {
            let mut acc = 0.0;
            for i in 0..k {
                let wi = ws[i] * sin2[i] * expv[i];
                for j in 0..k {
                    let d = cosv[j] - cosv[i];
                    acc += wi * ws[j] * sin2[j] * expv[j] * d * d;
                }
            }
            norm * acc
        }
        3 => {
            let mut acc = 0.0;
            for i in 0..k {
                let wi = ws[i] * sin2[i] * expv[i];
                for j in 0..k {
                    let dij = cosv[j] - cosv[i];
                    let wij = wi * ws[j] * sin2[j] * expv[j] * dij * dij;
                    for l in 0..k {
                        let dil = cosv[l] - cosv[i];
                        let djl = cosv[l] - cosv[j];
                        acc += wij * ws[l] * sin2[l] * expv[l] * (dil * dil) * (djl * djl);
                    }
                }
            }
            norm * acc
        }
        _ => panic!("trace model supports r in 1..=3, got {r}"),
    }
}

/// log E[e^{tX}] for the USp(2r) trace X. Even in t.
pub fn log_mgf(t: f64, r: u32) -> f64 {
    let t_abs = t.abs();
    scaled_mgf(t_abs, r).ln() + 2.0 * r as f64 * t_abs
}

/// E[e^{tX}]; overflows to infinity once 2r|t| exceeds ~709, use [`log_mgf`]
/// in that regime.
pub fn mgf(t: f64, r: u32) -> f64 {
    log_mgf(t, r).exp()
}

/// E[X^k] by the same quadrature.
pub fn trace_moment(k: u32, r: u32) -> f64 {
    let per_panel = if r == 1 { 32 } else { 16 };
    let (xs, ws) = theta_rule(0.0, per_panel);
    let n = xs.len();
    let cosv: Vec<f64> = xs.iter().map(|&t| t.cos()).collect();
    let sin2: Vec<f64> = xs.iter().map(|&t| t.sin().powi(2)).collect();
    let norm = weyl_normalization(r);
    let mut acc = 0.0;
    match r {
        1 => {
            for i in 0..n {
                acc += ws[i] * sin2[i] * (2.0 * cosv[i]).powi(k as i32);
            }
        }
        2 => {
            for i in 0..n {
                for j in 0..n {
                    let d = cosv[j] - cosv[i];
                    acc += ws[i] * ws[j] * sin2[i] * sin2[j] * d * d
                        * (2.0 * (cosv[i] + cosv[j])).powi(k as i32);
                }
            }
        }
        3 => {
            for i in 0..n {
                for j in 0..n {
                    let dij = cosv[j] - cosv[i];
                    for l in 0..n {
                        let dil = cosv[l] - cosv[i];
                        let djl = cosv[l] - cosv[j];
                        acc += ws[i] * ws[j] * ws[l] * sin2[i] * sin2[j] * sin2[l]
                            * (dij * dij) * (dil * dil) * (djl * djl)
                            * (2.0 * (cosv[i] + cosv[j] + cosv[l])).powi(k as i32);
                    }
                }
            }
        }
        _ => panic!("trace model supports r in 1..=3, got {r}"),
    }
    norm * acc
}

/// The clipped log-MGF f_X. The |t| >= 1 branch is evaluated directly on the
/// scaled integral, so there is no e^{N|t|} cancellation at large |t|.
pub fn f_x(t: f64, r: u32) -> f64 {
    let t_abs = t.abs();
    if t_abs < 1.0 {
        log_mgf(t_abs, r)
    } else {
        scaled_mgf(t_abs, r).ln()
    }
}

#[derive(Clone, Debug)]
pub struct FIntegral {
    pub value: f64,
    /// conservative bound on quadrature-plus-tail error
    pub error_bound: f64,
    pub u_cut: f64,
}

/// integral over the whole line of f_X(u)/u^2 du. The integrand has a
/// removable singularity at 0 (limit E[X^2]/2), a jump at |u| = 1 from the
/// clipping, and a -A log u / u^2 tail with A = r(2r+1)/2; the tail beyond
/// `u_cut` is integrated with a two-term asymptotic fit whose misfit is
/// monitored and reported inside `error_bound`.
pub fn f_integral(r: u32, tol: f64) -> FIntegral {
    f_integral_with_cut(r, tol, 1e4)
}

pub fn f_integral_with_cut(r: u32, tol: f64, u_cut: f64) -> FIntegral {
    assert!(tol >= 1e-9 && u_cut >= 16.0);
    let m2 = trace_moment(2, r);
    let m4 = trace_moment(4, r);
    let m6 = trace_moment(6, r);
    let k2 = m2;
    let k4 = m4 - 3.0 * m2 * m2;
    let k6 = m6 - 15.0 * m4 * m2 + 30.0 * m2 * m2 * m2;

    // [0, u0]: Taylor series of f_X(u)/u^2 = k2/2 + k4 u^2/24 + k6 u^4/720
    let u0 = 1e-3;
    let head = k2 * u0 / 2.0 + k4 * u0.powi(3) / 72.0 + k6 * u0.powi(5) / 3600.0;

    let integrand = |u: f64| f_x(u, r) / (u * u);
    let mid_low = adaptive_simpson(&integrand, u0, 1.0, tol / 4.0);
    let mid_high = adaptive_simpson(&integrand, 1.0, u_cut, tol / 4.0);

    // tail: f_X(u) ~ -A ln u + c + b/u, with A forced to the known corner
    // exponent and (c, b) fitted at u_cut/2 and u_cut
    let a_exp = r as f64 * (2.0 * r as f64 + 1.0) / 2.0;
    let cfit = |u: f64| f_x(u, r) + a_exp * u.ln();
    let c_half = cfit(u_cut / 2.0);
    let c_full = cfit(u_cut);
    let b = (c_half - c_full) * u_cut;
    let c = 2.0 * c_full - c_half;
    let tail = (-a_exp * (u_cut.ln() + 1.0) + c) / u_cut + b / (2.0 * u_cut * u_cut);
    // monitor the fit at u_cut/4 and report the factor-2 slack
    let misfit = (cfit(u_cut / 4.0) - (c + 4.0 * b / u_cut)).abs();
    let tail_error = 2.0 * misfit / u_cut + b.abs() / (u_cut * u_cut);

    let half_line = head + mid_low + mid_high + tail;
    FIntegral {
        value: 2.0 * half_line,
        error_bound: 2.0 * (tol / 2.0 + tail_error + k6.abs() * u0.powi(5)),
        u_cut,
    }
}

/// The assembled model constants for N = 2r.
#[derive(Clone, Debug)]
pub struct ModelConstants {
    pub r: u32,
    pub n: f64,
    pub f_integral: f64,
    pub f_integral_error: f64,
    pub a0: f64,
    pub b0: f64,
    /// B = log A0 + 9, the range constant attached to the tail theorem.
    pub b: f64,
}

/// A0 = (N/2) exp(-gamma - 1 - I/(2N)) and
/// B0 = (N/pi)(gamma + log 2 - log pi + I/(2N)), I = integral of f_X(u)/u^2.
pub fn a0_b0(r: u32, tol: f64) -> ModelConstants {
    assert!((1..=3).contains(&r));
    let n = 2.0 * r as f64;
    let fi = f_integral(r, tol);
    let a0 = (n / 2.0) * (-EULER_GAMMA - 1.0 - fi.value / (2.0 * n)).exp();
    let b0 = (n / PI) * (EULER_GAMMA + 2f64.ln() - PI.ln() + fi.value / (2.0 * n));
    ModelConstants {
        r,
        n,
        f_integral: fi.value,
        f_integral_error: fi.error_bound,
        a0,
        b0,
        b: a0.ln() + 9.0,
    }
}

/// log L_X(s) = sum over 0 < |h| <= m/2 of log E exp(s gamma_m(h) X(h)),
/// one 1-d quadrature per frequency. gamma_m is odd and the MGF is even, so
/// the +-h pairs double up; even-h factors (size O(1/m)) are kept exactly.
pub fn laplace_log_product(s: f64, m: u64, r: u32) -> f64 {
    assert!(s >= 0.0);
    let half = (m / 2) as i64;
    let partials: Vec<f64> = (1..=half)
        .into_par_iter()
        .map(|h| {
            let t = s * gamma_m(h, m);
            2.0 * log_mgf(t, r)
        })
        .collect();
    // sequential left-to-right sum keeps the result bit-stable at any
    // worker count; for even m the h = m/2 term has gamma = 0 and the
    // doubling is harmless because the term vanishes.
    partials.iter().sum()
}

/// The asymptotic main term (N/pi) s log s + B0 s of log L_X(s).
pub fn laplace_asymptotic(s: f64, consts: &ModelConstants) -> f64 {
    consts.n / PI * s * s.ln() + consts.b0 * s
}

/// Saddle point s(V) = exp(pi V/N - pi B0/N - 1).
pub fn saddle_point(v: f64, n: f64, b0: f64) -> f64 {
    (PI * v / n - PI * b0 / n - 1.0).exp()
}

/// Leading-order tail prediction exp(-A0 exp(pi V/N)) together with the
/// magnitude V e^{-pi V/(2N)} of the relative error factor.
pub fn psi_prediction(v: f64, consts: &ModelConstants) -> (f64, f64) {
    let rate = (PI * v / consts.n).exp();
    let err = v * (-PI * v / (2.0 * consts.n)).exp();
    ((-consts.a0 * rate).exp(), err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mgf_basics() {
        for r in 1..=3 {
            assert!((mgf(0.0, r) - 1.0).abs() < 1e-10, "r={r}");
            assert!((mgf(0.7, r) - mgf(-0.7, r)).abs() < 1e-12);
            // Jensen and boundedness: 1 <= E e^{tX} <= e^{tN}
            let t = 1.3;
            assert!(mgf(t, r) >= 1.0);
            assert!(log_mgf(t, r) <= 2.0 * r as f64 * t + 1e-12);
        }
    }

    #[test]
    fn mgf_r1_matches_fine_reference() {
        // independent oracle: adaptive Simpson on the defining integral,
        // seeded with a split at the bump scale so the refinement sees it
        for &t in &[0.3f64, 1.0, 5.0, 50.0, 58.0, 200.0, 1e4] {
            let f = |theta: f64| {
                (2.0 / PI) * theta.sin().powi(2) * (2.0 * t * (theta.cos() - 1.0)).exp()
            };
            let split = (40.0 / t.max(1.0)).sqrt().min(1.0);
            let reference =
                adaptive_simpson(&f, 0.0, split, 1e-16) + adaptive_simpson(&f, split, PI, 1e-16);
            let got = scaled_mgf(t, 1);
            assert!(
                (got - reference).abs() <= 1e-8 * reference,
                "t={t}: {got} vs {reference} (rel {:.2e})",
                (got - reference).abs() / reference
            );
        }
    }

    #[test]
    fn trace_moments_match_theory() {
        // USp(2): Catalan moments 1, 2, 5; USp(2r), r >= 2: Gaussian 1, 3, 15
        assert!((trace_moment(2, 1) - 1.0).abs() < 1e-10);
        assert!((trace_moment(4, 1) - 2.0).abs() < 1e-10);
        assert!((trace_moment(6, 1) - 5.0).abs() < 1e-9);
        for r in 2..=3 {
            assert!((trace_moment(1, r)).abs() < 1e-10);
            assert!((trace_moment(3, r)).abs() < 1e-9);
            assert!((trace_moment(2, r) - 1.0).abs() < 1e-8, "r={r}");
            assert!((trace_moment(4, r) - 3.0).abs() < 1e-7, "r={r}");
        }
        assert!((trace_moment(6, 2) - 14.0).abs() < 1e-6); // one invariant shy of Gaussian 15
    }

    #[test]
    fn f_x_examples() {
        assert!(f_x(0.0, 1).abs() < 1e-12);
        for &t in &[1.0f64, 3.0, 40.0, 1e4] {
            assert!(f_x(t, 1) <= 0.0, "f_X(t) <= 0 for |t| >= 1, t={t}");
            assert!((f_x(t, 1) - f_x(-t, 1)).abs() < 1e-12);
        }
        // small t: f_X(t) = t^2 E[X^2]/2 + O(t^4)
        let v = f_x(0.01, 1);
        assert!((v - 5e-5).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn f_x_tail_follows_the_corner_exponent() {
        // f_X(u) ~ -A ln u + c with A = r(2r+1)/2
        for r in 1..=2u32 {
            let a = r as f64 * (2.0 * r as f64 + 1.0) / 2.0;
            let slope = (f_x(8000.0, r) - f_x(2000.0, r)) / (8000f64.ln() - 2000f64.ln());
            assert!(
                (slope + a).abs() < 0.05,
                "r={r}: tail slope {slope} vs -{a}"
            );
        }
        // r=1 constant: c = -ln(2 sqrt(pi))
        let c = f_x(1e4, 1) + 1.5 * 1e4f64.ln();
        assert!((c + (2.0 * PI.sqrt()).ln()).abs() < 2e-3, "c = {c}");
    }

    #[test]
    fn f_integral_is_stable() {
        let coarse = f_integral(1, 1e-4);
        let fine = f_integral(1, 1e-6);
        assert!((coarse.value - fine.value).abs() < 1e-4);
        // doubling the cutoff moves the value by less than the reported bound
        let doubled = f_integral_with_cut(1, 1e-6, 2e4);
        assert!(
            (doubled.value - fine.value).abs() <= fine.error_bound + doubled.error_bound,
            "{} vs {} (bounds {} / {})",
            doubled.value,
            fine.value,
            doubled.error_bound,
            fine.error_bound
        );
    }

    #[test]
    fn model_constants_identities() {
        for r in 1..=3 {
            let c = a0_b0(r, 1e-6);
            assert!(c.a0 > 0.0);
            let n = c.n;
            // definitional identity for log A0
            let lhs = c.a0.ln();
            let rhs = (n / 2.0).ln() - EULER_GAMMA - 1.0 - c.f_integral / (2.0 * n);
            assert!((lhs - rhs).abs() < 1e-12);
            // B0 and A0 share the integral term
            let shared = PI * c.b0 / n - (EULER_GAMMA + 2f64.ln() - PI.ln());
            assert!((shared - c.f_integral / (2.0 * n)).abs() < 1e-10);
            assert!((c.b - (c.a0.ln() + 9.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn laplace_product_basics() {
        let m = 4001u64;
        assert!(laplace_log_product(0.0, m, 1).abs() < 1e-9);
        // Jensen: each factor is >= 1, so log L >= 0
        for &s in &[1.0f64, 5.0, 20.0] {
            assert!(laplace_log_product(s, m, 1) >= 0.0);
        }
        // convexity in s (L is an MGF): second differences non-negative
        let grid: Vec<f64> = (0..8).map(|k| 2.0 + 3.0 * k as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&s| laplace_log_product(s, m, 1)).collect();
        for w in vals.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-8);
        }
    }

    #[test]
    fn saddle_and_prediction_shapes() {
        let consts = a0_b0(1, 1e-6);
        let n = consts.n;
        // inversion identity: V chosen so the exponent vanishes gives s = 1
        let v0 = n / PI * (1.0 + PI * consts.b0 / n);
        assert!((saddle_point(v0, n, consts.b0) - 1.0).abs() < 1e-12);
        assert!(saddle_point(3.0, n, consts.b0) > saddle_point(2.0, n, consts.b0));
        // psi_prediction decreasing, and log log (1/psi) affine with slope pi/N
        let (p1, _) = psi_prediction(1.0, &consts);
        let (p2, _) = psi_prediction(2.0, &consts);
        let (p3, _) = psi_prediction(3.0, &consts);
        assert!(p1 > p2 && p2 > p3);
        let y1 = (1.0 / p1).ln().ln();
        let y2 = (1.0 / p2).ln().ln();
        let y3 = (1.0 / p3).ln().ln();
        assert!(((y2 - y1) - PI / n).abs() < 1e-9);
        assert!(((y3 - y2) - PI / n).abs() < 1e-9);
    }
}
