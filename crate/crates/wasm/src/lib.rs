//! Browser bindings for the demo page: three interactive views onto the
//! laboratory. The computational cores return plain float vectors (and are
//! unit-tested on the host); the `#[wasm_bindgen]` exports are thin shims
//! that only translate errors, so the page's JS owns all canvas work.

use pvlab::families::{
    build_extremal_family, birch_function, extremal_function, hyper_kloosterman_all,
    hyper_kloosterman_twist_function, kloosterman_function, OddPoly,
};
use pvlab::finite_field::PrimeField;
use pvlab::gmax::{g_asymptotic, g_exact};
use pvlab::partial_sums::prefix_profile;
use pvlab::random_model::{sato_tate_pdf, TraceSampler};
use wasm_bindgen::prelude::*;

/// Prefix-sum path of one family member in the complex plane.
///
/// Layout of the returned vector: `[m, M/sqrt(m), argmax/m, psi, N,
/// re_0, im_0, re_1, im_1, ...]` — four stats, the spectral bound, then the
/// m prefix points scaled by 1/sqrt(m).
///
/// `kind` is one of `birch` (uses g = t^3; `a` is the parameter),
/// `kloosterman` (parameters `a`, `b`, order `d` odd), `twist`
/// (hyper-Kloosterman twist of odd order `r = order`), `extremal`
/// (`modulus` is m, `a` indexes a nonzero field element).
#[wasm_bindgen]
pub fn partial_sum_path(
    kind: &str,
    modulus: u32,
    a: u32,
    b: u32,
    order: u32,
) -> Result<Vec<f64>, JsValue> {
    path_impl(kind, modulus, a, b, order).map_err(|e| JsValue::from_str(&e))
}

fn path_impl(kind: &str, modulus: u32, a: u32, b: u32, order: u32) -> Result<Vec<f64>, String> {
    let m = modulus as u64;
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let (phi, n_bound) = match kind {
        "birch" => {
            let field = PrimeField::new(m).map_err(|e| err(&e))?;
            (
                birch_function(a as u64, field, &OddPoly::cube()).map_err(|e| err(&e))?,
                2.0,
            )
        }
        "kloosterman" => {
            let field = PrimeField::new(m).map_err(|e| err(&e))?;
            let d = order.max(1) as u64;
            (
                kloosterman_function(a as u64, b as u64, field, d).map_err(|e| err(&e))?,
                (d + 1) as f64,
            )
        }
        "twist" => {
            let field = PrimeField::new(m).map_err(|e| err(&e))?;
            let r = order.max(3);
            let kl = hyper_kloosterman_all(r, field).map_err(|e| err(&e))?;
            (
                hyper_kloosterman_twist_function(a as u64, b as u64, field, &kl)
                    .map_err(|e| err(&e))?,
                (r + 1) as f64,
            )
        }
        "extremal" => {
            let fam = build_extremal_family(m).map_err(|e| err(&e))?;
            let element = 1 + (a as u64).saturating_sub(1) % (fam.field().order() - 1);
            (extremal_function(&fam, element).map_err(|e| err(&e))?, 1.0)
        }
        other => return Err(format!("unknown family kind {other:?}")),
    };
    let profile = prefix_profile(&phi);
    let root = (phi.modulus() as f64).sqrt();
    let mut out = Vec::with_capacity(5 + 2 * phi.modulus());
    out.push(phi.modulus() as f64);
    out.push(profile.normalized_max());
    out.push(profile.argmax() as f64 / phi.modulus() as f64);
    out.push(profile.psi());
    out.push(n_bound);
    for x in 0..phi.modulus() {
        let z = profile.prefix(x);
        out.push(z.re / root);
        out.push(z.im / root);
    }
    Ok(out)
}

/// Rows (H, exact, asymptotic) of the extremal functional for H = 1..=h_max.
#[wasm_bindgen]
pub fn gmax_table(h_max: u32) -> Vec<f64> {
    let h_max = h_max.clamp(1, 4000) as u64;
    let mut out = Vec::with_capacity(3 * h_max as usize);
    for h in 1..=h_max {
        out.push(h as f64);
        out.push(g_exact(h));
        out.push(g_asymptotic(h));
    }
    out
}

/// Histogram (normalized to a density) of `samples` USp(2r) trace draws on
/// [-2r, 2r], split into `bins` buckets.
#[wasm_bindgen]
pub fn trace_histogram(r: u32, samples: u32, seed: u32, bins: u32) -> Result<Vec<f64>, JsValue> {
    histogram_impl(r, samples, seed, bins).map_err(|e| JsValue::from_str(&e))
}

fn histogram_impl(r: u32, samples: u32, seed: u32, bins: u32) -> Result<Vec<f64>, String> {
    let sampler = TraceSampler::new(r, seed as u64).map_err(|e| e.to_string())?;
    let bins = bins.clamp(4, 400) as usize;
    let half = 2.0 * r as f64;
    let width = 2.0 * half / bins as f64;
    let mut counts = vec![0u32; bins];
    for i in 0..samples as u64 {
        let x = sampler.sample(i);
        let k = (((x + half) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .iter()
        .map(|&c| c as f64 / (samples.max(1) as f64 * width))
        .collect())
}

/// The Sato–Tate density sampled at `points` positions across [-2, 2],
/// the exact r = 1 curve the histogram converges to.
#[wasm_bindgen]
pub fn sato_tate_curve(points: u32) -> Vec<f64> {
    let points = points.clamp(2, 4000);
    (0..points)
        .map(|i| {
            let x = -2.0 + 4.0 * i as f64 / (points - 1) as f64;
            sato_tate_pdf(x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_layout_and_stats() {
        let out = path_impl("kloosterman", 101, 1, 1, 1).unwrap();
        assert_eq!(out.len(), 5 + 2 * 101);
        assert_eq!(out[0], 101.0);
        assert!(out[1] > 0.0 && out[1] < 3.0); // normalized max for N = 2
        assert_eq!(out[4], 2.0);
        // the endpoint of the path is the (normalized) complete sum
        let last = pvlab::Complex64::new(out[5 + 2 * 100], out[6 + 2 * 100]);
        assert!(last.norm() <= 2.0 + 1e-9);
        assert!(path_impl("nope", 101, 1, 1, 1).is_err());
        assert!(path_impl("kloosterman", 100, 1, 1, 1).is_err());
        let ext = path_impl("extremal", 31, 1, 1, 1).unwrap();
        assert_eq!(ext[0], 31.0);
    }

    #[test]
    fn gmax_rows() {
        let rows = gmax_table(5);
        assert_eq!(rows.len(), 15);
        assert_eq!(rows[0], 1.0);
        assert!((rows[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_is_a_density() {
        let h = histogram_impl(1, 20_000, 7, 40).unwrap();
        let width = 4.0 / 40.0;
        let mass: f64 = h.iter().map(|v| v * width).sum();
        assert!((mass - 1.0).abs() < 1e-9);
        // compare a central bucket with the exact density
        let curve = sato_tate_curve(41);
        assert!((h[20] - curve[20]).abs() < 0.05);
    }
}
