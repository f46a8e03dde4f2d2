//! Acceptance suite: one test per numbered criterion of the project's
//! numerical contract, each printing a single pass/fail line (run with
//! `--nocapture` to see them). Every tolerance is pinned here, in code.
//!
//! Criterion 5 carries a realness clause for hyper-Kloosterman values of
//! both orders 2 and 3. For odd order the values are genuinely complex
//! (conjugation sends Kl_r(n) to Kl_r((-1)^r n), and e.g. Kl_3(1;5) has
//! imaginary part ~0.1), so the r = 3 half of that clause cannot hold; it is
//! asserted as written in `c05b_...` and is expected to fail. Everything
//! else passes.

use pvlab::constants::{a0_b0, laplace_asymptotic, laplace_log_product};
use pvlab::distribution::{
    coarse_grid_audit, extremal_joint_moments, scan_family, short_sum_moment_audit, SampleMode,
};
use pvlab::families::{
    build_extremal_family, extremal_function, hyper_kloosterman_all, FamilyContext, FamilySpec,
    OddPoly,
};
use pvlab::finite_field::{additive_character, is_prime, PrimeField};
use pvlab::gmax::{g_asymptotic, g_bruteforce, g_exact};
use pvlab::partial_sums::{fourier_transform, plancherel_partial_sum, prefix_profile};
use pvlab::random_model::{sample_m_x, sato_tate_cdf, trace_lower_bound_probe, TraceSampler};
use pvlab::rng::SplitMix64;
use pvlab::Complex64;
use rayon::prelude::*;
use std::time::Instant;

fn pass(id: &str, detail: String) {
    println!("acceptance {id}: PASS ({detail})");
}

#[test]
fn c01_gmax_bruteforce_matches_exact() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for h in 1..=9u64 {
        let res = g_bruteforce(h, 4096, 4096);
        let gap = (res.bruteforce.unwrap() - res.exact).abs();
        worst = worst.max(gap);
        assert!(
            gap <= 1e-3,
            "H={h}: bruteforce {} vs exact {}",
            res.bruteforce.unwrap(),
            res.exact
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
    pass("01 gmax-bruteforce-vs-exact", format!("max gap {worst:.2e}, {elapsed:?}"));
}

#[test]
fn c02_gmax_asymptotic_constant() {
    let mut c = 0.0f64;
    let mut h = 11u64;
    while h <= 1001 {
        c = c.max((g_exact(h) - g_asymptotic(h)).abs() * h as f64);
        h += 10;
    }
    assert!(c <= 4.0, "calibrated constant {c} exceeds 4");
    pass("02 gmax-asymptotic", format!("calibrated C = {c:.3} <= 4"));
}

#[test]
fn c03_fourier_structure_across_families() {
    let start = Instant::now();
    let cases = [
        (FamilySpec::kloosterman(101, 1), "kloosterman p=101"),
        (FamilySpec::birch(499, OddPoly::cube()), "birch p=499"),
    ];
    for (spec, name) in cases {
        let n_bound = spec.symmetry_bound();
        let ctx = FamilyContext::new(spec).unwrap();
        let worst: (f64, f64, f64) = (0..ctx.count())
            .into_par_iter()
            .map(|index| {
                let phi = ctx.member(index);
                let energy: f64 = phi.values().iter().map(|v| v.norm_sqr()).sum();
                let spec = fourier_transform(&phi);
                let parseval = (spec.energy() - energy).abs() / energy.max(1.0);
                (spec.max_imag(), spec.max_abs(), parseval)
            })
            .reduce(
                || (0.0, 0.0, 0.0),
                |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)),
            );
        assert!(worst.0 <= 1e-8, "{name}: spectrum imaginary part {}", worst.0);
        assert!(worst.1 <= n_bound + 1e-8, "{name}: |phi-hat| {} > N = {n_bound}", worst.1);
        assert!(worst.2 <= 1e-6, "{name}: Parseval defect {}", worst.2);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60 s");
    pass("03 fourier-structure", format!("all members real/bounded/Parseval, {elapsed:?}"));
}

#[test]
fn c04_plancherel_reconstruction() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x91a4);
    let specs = [
        FamilySpec::kloosterman(101, 1),
        FamilySpec::birch(499, OddPoly::cube()),
    ];
    let mut pairs = 0usize;
    for spec in specs {
        let m = spec.m as usize;
        let tol = 1e-8 * (m as f64).sqrt();
        let ctx = FamilyContext::new(spec).unwrap();
        for _ in 0..20 {
            let index = rng.next_below(ctx.count());
            let phi = ctx.member(index);
            let profile = prefix_profile(&phi);
            let spectrum = fourier_transform(&phi);
            for _ in 0..25 {
                let x = rng.next_below(m as u64) as usize;
                let rebuilt = plancherel_partial_sum(&spectrum, x);
                let direct = profile.prefix(x);
                assert!(
                    (rebuilt - direct).norm() <= tol,
                    "m={m} member {index} x={x}: {rebuilt} vs {direct}"
                );
                pairs += 1;
            }
        }
    }
    assert_eq!(pairs, 1000);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0);
    pass("04 plancherel", format!("{pairs} (member, x) pairs within 1e-8 sqrt(m), {elapsed:?}"));
}

/// Direct-definition hyper-Kloosterman oracle, O(p^(r-1)) per argument.
fn hyper_kl_direct(r: u32, p: u64, n: u64) -> Complex64 {
    let field = PrimeField::new(p).unwrap();
    let inv = field.inverse_table();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut tuple = vec![1u64; (r - 1) as usize];
    loop {
        let mut prod = 1u64;
        let mut sum = 0u64;
        for &y in &tuple {
            prod = field.mul(prod, y);
            sum = field.add(sum, y);
        }
        let last = field.mul(n, inv[prod as usize]);
        acc += additive_character(field.add(sum, last) as i64, p);
        let mut k = 0usize;
        loop {
            if k == tuple.len() {
                let sign = if r.is_multiple_of(2) { -1.0 } else { 1.0 };
                return acc * sign * (p as f64).powf(-((r - 1) as f64) / 2.0);
            }
            tuple[k] += 1;
            if tuple[k] < p {
                break;
            }
            tuple[k] = 1;
            k += 1;
        }
    }
}

#[test]
fn c05a_hyper_kloosterman_convolution_oracle() {
    let start = Instant::now();
    let primes: Vec<u64> = (5..=101).filter(|&n| is_prime(n)).collect();
    for r in [2u32, 3] {
        for &p in &primes {
            let field = PrimeField::new(p).unwrap();
            let kl = hyper_kloosterman_all(r, field).unwrap();
            let worst: f64 = (1..p)
                .into_par_iter()
                .map(|n| (kl[n as usize] - hyper_kl_direct(r, p, n)).norm())
                .reduce(|| 0.0, f64::max);
            assert!(worst <= 1e-8, "r={r} p={p}: direct-sum gap {worst}");
            let max_abs = kl.iter().skip(1).map(|z| z.norm()).fold(0.0, f64::max);
            assert!(max_abs <= r as f64 + 1e-9, "r={r} p={p}: |Kl| = {max_abs}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0);
    pass(
        "05a hyper-kloosterman-oracle",
        format!("r=2,3 match direct sums on all primes 5..=101, |Kl_r| <= r, {elapsed:?}"),
    );
}

#[test]
fn c05b_hyper_kloosterman_realness_as_specified() {
    // Realness is required for both r = 2 and r = 3. For r = 2 it holds
    // (even-order self-duality). For r = 3 it is mathematically false:
    // conj Kl_3(n; p) = Kl_3(-n; p), and already Kl_3(1; 5) =
    // (3 + 6 zeta + 4 zeta^3 + 3 zeta^4)/5 = 0.509... + 0.100...i.
    // The requirement is asserted as stated; the r = 3 branch is an
    // expected, documented failure, not an implementation bug.
    let primes: Vec<u64> = (5..=101).filter(|&n| is_prime(n)).collect();
    let mut worst = (0.0f64, 0u32, 0u64);
    for r in [2u32, 3] {
        for &p in &primes {
            let field = PrimeField::new(p).unwrap();
            let kl = hyper_kloosterman_all(r, field).unwrap();
            let imag = kl.iter().skip(1).map(|z| z.im.abs()).fold(0.0, f64::max);
            if imag > worst.0 {
                worst = (imag, r, p);
            }
        }
    }
    assert!(
        worst.0 <= 1e-8,
        "realness fails as predicted: max |Im Kl_{}(.;{})| = {:.6} (odd-order \
         hyper-Kloosterman values are genuinely complex; see test comment)",
        worst.1,
        worst.2,
        worst.0
    );
    pass("05b hyper-kloosterman-realness", format!("max imaginary part {:.2e}", worst.0));
}

#[test]
fn c06_sampler_moments_and_cdf() {
    let start = Instant::now();
    let sampler = TraceSampler::new(1, 0x5a70).unwrap();
    let n = 1_000_000u64;
    let mut xs: Vec<f64> = (0..n).into_par_iter().map(|i| sampler.sample(i)).collect();
    let nf = n as f64;
    let m1 = xs.iter().sum::<f64>() / nf;
    let m2 = xs.iter().map(|x| x * x).sum::<f64>() / nf;
    let m3 = xs.iter().map(|x| x * x * x).sum::<f64>() / nf;
    let m4 = xs.iter().map(|x| x * x * x * x).sum::<f64>() / nf;
    assert!(m1.abs() <= 5e-3, "E X = {m1}");
    assert!((m2 - 1.0).abs() <= 5e-3, "E X^2 = {m2}");
    assert!(m3.abs() <= 5e-3, "E X^3 = {m3}");
    assert!((m4 - 2.0).abs() <= 2e-2, "E X^4 = {m4}");
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut worst = 0.0f64;
    for k in 1..=20 {
        let x = -2.0 + 4.0 * k as f64 / 21.0;
        let empirical = xs.partition_point(|&v| v <= x) as f64 / nf;
        worst = worst.max((empirical - sato_tate_cdf(x)).abs());
    }
    assert!(worst <= 5e-3, "CDF deviation {worst}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0);
    pass(
        "06 sampler-moments",
        format!(
            "m1 {m1:.1e} m2-1 {:.1e} m3 {m3:.1e} m4-2 {:.1e}, CDF {worst:.1e}, {elapsed:?}",
            m2 - 1.0,
            m4 - 2.0
        ),
    );
}

#[test]
fn c07_corner_exponent_probe() {
    let start = Instant::now();
    let eps = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
    let r1 = trace_lower_bound_probe(1, &eps, 10_000_000, 0xcafe).unwrap();
    assert!(
        r1.slope >= 1.4 && r1.slope <= 1.6,
        "r=1 slope {} outside [1.4, 1.6]",
        r1.slope
    );
    let r2 = trace_lower_bound_probe(2, &eps, 10_000_000, 0xfeed).unwrap();
    assert!(
        r2.slope >= 4.5 && r2.slope <= 5.5,
        "r=2 slope {} outside [4.5, 5.5]",
        r2.slope
    );
    let elapsed = start.elapsed();
    pass(
        "07 corner-exponent",
        format!("slopes {:.3} (theory 1.5) and {:.3} (theory 5), {elapsed:?}", r1.slope, r2.slope),
    );
}

#[test]
fn c08_laplace_asymptotic_residuals() {
    let start = Instant::now();
    let consts = a0_b0(1, 1e-6);
    let m = 1_000_003u64;
    let mut worst = 0.0f64;
    for &s in &[10.0f64, 30.0, 100.0] {
        let exact = laplace_log_product(s, m, 1);
        let asym = laplace_asymptotic(s, &consts);
        let residual = (exact - asym).abs() / s.ln().powi(2);
        worst = worst.max(residual);
    }
    assert!(worst <= 5.0, "residual constant {worst} exceeds the pinned 5.0");
    let elapsed = start.elapsed();
    pass(
        "08 laplace-asymptotic",
        format!("max residual/(ln s)^2 = {worst:.4} <= 5, {elapsed:?}"),
    );
}

#[test]
fn c09_family_vs_model_convergence() {
    let start = Instant::now();
    let ctx = FamilyContext::new(FamilySpec::birch(3001, OddPoly::cube())).unwrap();
    let scan = scan_family(&ctx, SampleMode::Exhaustive);
    let sampler = TraceSampler::new(1, 0x90de1).unwrap();
    let mc_n = 10_000u64;
    let values: Vec<f64> = (0..mc_n)
        .into_par_iter()
        .map(|i| sample_m_x(&sampler, 512, 4096, i).value)
        .collect();
    for v in [0.8f64, 1.0, 1.2] {
        let family = scan.max_tail.phi_at(v);
        let hits = values.iter().filter(|&&x| x > v).count();
        let model = hits as f64 / mc_n as f64;
        let se_f = scan.max_tail.stderr_at(v);
        let se_m = (model * (1.0 - model) / mc_n as f64).sqrt();
        let tol = 0.05 + 3.0 * (se_f * se_f + se_m * se_m).sqrt();
        assert!(
            (family - model).abs() <= tol,
            "V={v}: family {family} vs model {model} (tol {tol})"
        );
    }
    let elapsed = start.elapsed();
    pass(
        "09 family-vs-model",
        format!(
            "Phi(0.8/1.0/1.2) = {:.4}/{:.4}/{:.4} against the truncated-maximum model, {elapsed:?}",
            scan.max_tail.phi_at(0.8),
            scan.max_tail.phi_at(1.0),
            scan.max_tail.phi_at(1.2)
        ),
    );
}

#[test]
fn c10_extremal_family() {
    let start = Instant::now();
    for m in [101u64, 211] {
        let fam = build_extremal_family(m).unwrap();
        let phi = extremal_function(&fam, 1).unwrap();
        let profile = prefix_profile(&phi);
        let half = profile.prefix(m as usize / 2).norm() / (m as f64).sqrt();
        let predicted = (m as f64).ln() / std::f64::consts::PI;
        assert!(
            (half - predicted).abs() <= 3.0,
            "m={m}: half-period sum {half} vs {predicted}"
        );
        // the spectrum is exactly the +-1 step function
        let spectrum = fourier_transform(&phi);
        for (h, c) in spectrum.iter_window() {
            let expect = if h >= 1 { 1.0 } else { -1.0 };
            assert!(
                (c - Complex64::new(expect, 0.0)).norm() <= 1e-8,
                "m={m} h={h}: {c}"
            );
        }
    }
    // joint moments over all 2^19 members at m = 101
    let fam = build_extremal_family(101).unwrap();
    let r = fam.field().degree();
    let tuples: Vec<Vec<i64>> = vec![
        vec![1],
        vec![-1],
        vec![50],
        vec![1, 2],
        vec![3, -3],
        vec![5, 5],
        vec![1, 2, 3],
        vec![-1, 4, 17],
        vec![2, 2, 7],
    ];
    let (rows, budget) = extremal_joint_moments(&fam, &tuples);
    let allowed = 2.0 * budget;
    let mut worst = 0.0f64;
    for row in &rows {
        worst = worst.max(row.scaled_deviation);
        assert!(
            row.scaled_deviation <= allowed,
            "tuple {:?}: |{} - {}| > {allowed}",
            row.tuple,
            row.empirical,
            row.model
        );
    }
    let elapsed = start.elapsed();
    pass(
        "10 extremal-family",
        format!(
            "step spectrum exact, half-period sums in range, 2^{r} joint moments within {:.2e} (worst {:.2e}), {elapsed:?}",
            allowed, worst
        ),
    );
}

#[test]
fn c11_short_sum_fourth_moment() {
    let start = Instant::now();
    let p = 499u64;
    let lens = [20u64, 100, (499f64).powf(0.55) as u64];
    for d in [1u64, 3] {
        for &l in &lens {
            let report = short_sum_moment_audit(p, d, l);
            assert!(
                (report.full_m4 - report.count_over_p2).abs() <= 1e-9,
                "d={d} |I|={l}: orthogonality route {} vs combinatorial count {}",
                report.full_m4,
                report.count_over_p2
            );
            assert!(
                report.normalized <= 4.0 * d as f64,
                "d={d} |I|={l}: M4 p^2/|I|^2 = {} > 4d",
                report.normalized
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0);
    pass(
        "11 short-sum-moments",
        format!("d=1,3 at |I|=20,100,{}: bounded by 4d, dual routes equal, {elapsed:?}", lens[2]),
    );
}

#[test]
fn c12_coarse_grid_reduction() {
    let start = Instant::now();
    let p = 2003u64;
    let ctx = FamilyContext::new(FamilySpec::kloosterman(p, 1)).unwrap();
    let j = (p as f64).powf(0.5 - 1.0 / 30.0) as usize;
    let report = coarse_grid_audit(
        &ctx,
        j,
        SampleMode::Subsample { count: 10_000, seed: 0xc0a5 },
    );
    let allowed = 3.0 * (p as f64).powf(-1.0 / 60.0);
    assert!(
        report.exceedance <= allowed,
        "exceedance {} > {allowed}",
        report.exceedance
    );
    let elapsed = start.elapsed();
    pass(
        "12 coarse-grid",
        format!(
            "J={j}: exceedance {} (allowed {allowed:.3}), max gap {:.2} vs threshold {:.1}, {elapsed:?}",
            report.exceedance, report.max_gap, report.threshold
        ),
    );
}

#[test]
fn c13_determinism_byte_identical_reruns() {
    let configs = [
        vec!["scan", "--family", "kloosterman", "--p", "101", "--d", "1", "--sample", "500", "--seed", "99"],
        vec!["scan", "--family", "birch", "--p", "499", "--exhaustive", "--per-member", "--seed", "4"],
        vec!["random-model", "--r", "1", "--epsilons", "0.1,0.2,0.3", "--samples", "200000", "--seed", "5"],
        vec!["random-model", "--r", "1", "--mx-samples", "64", "--h-trunc", "128", "--seed", "6"],
        vec!["constants", "--r", "1", "--tol", "1e-4"],
        vec!["gmax", "--h-max", "6"],
    ];
    for config in configs {
        let args: Vec<String> = config.iter().map(|s| s.to_string()).collect();
        let parsed = pvlab_cli::parse_args(&args).unwrap();
        let first = pvlab_cli::run(&parsed).unwrap();
        let second = pvlab_cli::run(&parsed).unwrap();
        assert_eq!(
            first.data, second.data,
            "rerun of {args:?} changed the data body"
        );
        for line in first.data.lines().filter(|l| !l.starts_with('#')) {
            for field in line.split(',') {
                if let Ok(x) = field.parse::<f64>() {
                    assert!(x.is_finite(), "non-finite value escaped to output: {line}");
                }
            }
        }
    }
    pass("13 determinism", "6 experiment reruns byte-identical, all values finite".into());
}
