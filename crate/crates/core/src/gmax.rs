//! The extremal functional
//!
//! ```text
//! G(H) = max_{alpha in [0,1)} max_{y in [-1,1]^{2H}}
//!        | sum_{1 <= |h| <= H} (e(alpha h) - 1)/h * y_h |
//! ```
//!
//! with exact closed forms (odd and even H), the asymptotic
//! `2 log H + 2 log 2 + 2 gamma + O(1/H)`, and an independent grid-search
//! oracle that lower-bounds G(H) and converges to it as the grids refine.

use crate::EULER_GAMMA;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

/// Exact value of G(H):
/// odd H: `2 sum_{h<=H} (1 - (-1)^h)/h`;
/// even H: `2 sum_{h<=H} (1 - (-1)^h cos(pi h/(H+1)))/h`.
pub fn g_exact(h_max: u64) -> f64 {
    assert!(h_max >= 1);
    if h_max % 2 == 1 {
        let mut acc = 0.0;
        let mut h = 1u64;
        while h <= h_max {
            acc += 2.0 / h as f64; // (1 - (-1)^h)/h is 2/h for odd h, 0 for even
            h += 2;
        }
        2.0 * acc
    } else {
        let mut acc = 0.0;
        for h in 1..=h_max {
            let sign = if h % 2 == 0 { 1.0 } else { -1.0 };
            let c = (PI * h as f64 / (h_max as f64 + 1.0)).cos();
            acc += (1.0 - sign * c) / h as f64;
        }
        2.0 * acc
    }
}

/// `2 ln H + 2 ln 2 + 2 gamma`.
pub fn g_asymptotic(h_max: u64) -> f64 {
    assert!(h_max >= 1);
    2.0 * (h_max as f64).ln() + 2.0 * std::f64::consts::LN_2 + 2.0 * EULER_GAMMA
}

#[derive(Clone, Debug)]
pub struct GmaxResult {
    pub h_max: u64,
    pub exact: f64,
    pub asymptotic: f64,
    pub bruteforce: Option<f64>,
    pub alpha_star: f64,
    pub theta_star: f64,
}

/// Grid-search oracle. For fixed alpha the box maximum reduces exactly to a
/// sweep over the modulus direction theta:
///
/// `max_y |sum c_h y_h| = max_theta sum_h |Re(e^{-i theta} c_h)|`,
///
/// a linear objective over the box is maximized at a sign vertex. Since
/// c_{-h} = -conj(c_h), the h and -h terms pair up as
/// |Re(e^{-i theta} c_h)| + |Re(e^{+i theta} c_h)|. Every grid point yields
/// an attained value, so the result is a lower bound for G(H) that converges
/// from below as the grids refine.
pub fn g_bruteforce(h_max: u64, alpha_grid: usize, theta_grid: usize) -> GmaxResult {
    assert!((1..=64).contains(&h_max));
    assert!(alpha_grid >= 4 * h_max as usize && theta_grid >= 4 * h_max as usize);
    let best = (0..alpha_grid)
        .into_par_iter()
        .map(|ia| {
            let alpha = ia as f64 / alpha_grid as f64;
            let coeffs: Vec<Complex64> = (1..=h_max)
                .map(|h| {
                    let ang = TAU * alpha * h as f64;
                    (Complex64::new(ang.cos(), ang.sin()) - 1.0) / h as f64
                })
                .collect();
            let mut local = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
            for it in 0..theta_grid {
                // theta in [0, pi): the objective has period pi
                let theta = PI * it as f64 / theta_grid as f64;
                let (s, c) = theta.sin_cos();
                let mut total = 0.0;
                for z in &coeffs {
                    let re = c * z.re + s * z.im; // Re(e^{-i theta} c_h)
                    let re_neg = c * z.re - s * z.im; // Re(e^{+i theta} c_h)
                    total += re.abs() + re_neg.abs();
                }
                if total > local.0 {
                    local = (total, alpha, theta);
                }
            }
            local
        })
        .reduce(
            || (f64::NEG_INFINITY, 0.0, 0.0),
            |a, b| if a.0 >= b.0 { a } else { b },
        );
    GmaxResult {
        h_max,
        exact: g_exact(h_max),
        asymptotic: g_asymptotic(h_max),
        bruteforce: Some(best.0),
        alpha_star: best.1,
        theta_star: best.2,
    }
}

/// Value of the explicit witness alpha = 1/2, y_h = -sign(h):
/// `2 sum_{h odd <= H} 2/h`, which attains G(H) for odd H.
pub fn g_witness_half(h_max: u64) -> f64 {
    let mut acc = 0.0;
    let mut h = 1u64;
    while h <= h_max {
        acc += 2.0 / h as f64;
        h += 2;
    }
    2.0 * acc
}

/// Checks `sum_{h=1}^{H} sin^2(pi alpha h)/h <= sum (1 - (-1)^h)/(2h)` on a
/// grid of alpha in [0, 1/2] (true for odd H; equality is attained at
/// alpha = 1/2). Returns false on any violation beyond 1e-12 slack.
pub fn sin_sum_monotone_check(h_max: u64, grid: usize) -> bool {
    assert!(h_max % 2 == 1, "the sine-sum bound is an odd-H statement");
    let bound: f64 = (1..=h_max)
        .map(|h| if h % 2 == 1 { 1.0 / h as f64 } else { 0.0 })
        .sum();
    for i in 0..=grid {
        let alpha = 0.5 * i as f64 / grid as f64;
        let mut s = 0.0;
        for h in 1..=h_max {
            s += (PI * alpha * h as f64).sin().powi(2) / h as f64;
        }
        if s > bound + 1e-12 {
            return false;
        }
    }
    true
}
