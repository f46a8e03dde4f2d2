//! Whole-family scans and the audit battery.
//!
//! `scan_family` turns a family into two empirical tails: the distribution
//! of M(phi_a)/sqrt(m) and of the half-period statistic Psi. The audits
//! measure, with calibrated constants, the quantities the tail theory
//! rests on: joint spectral moments, average fourth moments of short sums
//! (with an exact combinatorial cross-check), the maximum over short
//! intervals, the tail of the spectral sum, and the coarse-grid reduction
//! of the maximum.

use crate::families::{FamilyContext, FamilyKind, FamilySpec};
use crate::finite_field::{CharTable, PrimeField};
use crate::partial_sums::{fourier_coefficient_with, prefix_profile};
use crate::rng::distinct_indices;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    Exhaustive,
    Subsample { count: u64, seed: u64 },
}

impl SampleMode {
    fn indices(self, universe: u64) -> Vec<u64> {
        match self {
            SampleMode::Exhaustive => (0..universe).collect(),
            SampleMode::Subsample { count, seed } => distinct_indices(seed, universe, count),
        }
    }

    pub fn label(self) -> String {
        match self {
            SampleMode::Exhaustive => "exhaustive".into(),
            SampleMode::Subsample { count, seed } => format!("subsample(n={count},seed={seed})"),
        }
    }
}

/// Sorted statistics supporting tail queries. Phi(V) uses the strict
/// inequality `stat > V`, so Phi at the maximum statistic is exactly 0.
#[derive(Clone, Debug)]
pub struct EmpiricalTail {
    stats: Vec<f64>,
}

impl EmpiricalTail {
    pub fn from_stats(mut stats: Vec<f64>) -> Self {
        assert!(!stats.is_empty());
        stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
        EmpiricalTail { stats }
    }

    pub fn count(&self) -> usize {
        self.stats.len()
    }

    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn min(&self) -> f64 {
        self.stats[0]
    }

    pub fn max(&self) -> f64 {
        *self.stats.last().unwrap()
    }

    /// Proportion of statistics strictly above v.
    pub fn phi_at(&self, v: f64) -> f64 {
        let idx = self.stats.partition_point(|&s| s <= v);
        (self.stats.len() - idx) as f64 / self.stats.len() as f64
    }

    /// Proportion strictly below -v (the Psi-minus tail).
    pub fn minus_at(&self, v: f64) -> f64 {
        let idx = self.stats.partition_point(|&s| s < -v);
        idx as f64 / self.stats.len() as f64
    }

    /// Binomial standard error of the empirical proportion at v.
    pub fn stderr_at(&self, v: f64) -> f64 {
        let p = self.phi_at(v);
        (p * (1.0 - p) / self.stats.len() as f64).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct MemberStat {
    pub index: u64,
    pub a: u64,
    pub b: u64,
    pub norm_max: f64,
    pub argmax_frac: f64,
    pub psi: f64,
}

#[derive(Clone, Debug)]
pub struct FamilyScan {
    pub spec: FamilySpec,
    pub mode: SampleMode,
    pub max_tail: EmpiricalTail,
    pub psi_tail: EmpiricalTail,
    pub members: Vec<MemberStat>,
}

/// Scans the family member-by-member: one prefix profile per sampled
/// parameter. Parallel over members, merged in index order, so output is
/// independent of the worker count.
pub fn scan_family(ctx: &FamilyContext, mode: SampleMode) -> FamilyScan {
    let indices = mode.indices(ctx.count());
    let members: Vec<MemberStat> = indices
        .into_par_iter()
        .with_min_len(16)
        .map(|index| {
            let phi = ctx.member(index);
            let profile = prefix_profile(&phi);
            let (a, b) = ctx.member_params(index);
            MemberStat {
                index,
                a,
                b,
                norm_max: profile.normalized_max(),
                argmax_frac: profile.argmax() as f64 / phi.modulus() as f64,
                psi: profile.psi(),
            }
        })
        .collect();
    FamilyScan {
        spec: ctx.spec().clone(),
        mode,
        max_tail: EmpiricalTail::from_stats(members.iter().map(|m| m.norm_max).collect()),
        psi_tail: EmpiricalTail::from_stats(members.iter().map(|m| m.psi).collect()),
        members,
    }
}

/// One audit outcome: a measured quantity against a theoretical shape with
/// a calibrated constant.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub assumption: String,
    pub measured: f64,
    pub bound: f64,
    pub constant: f64,
    pub pass: bool,
    pub notes: String,
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] measured {:.6e} vs bound {:.6e} (constant {}): {}{}",
            self.assumption,
            self.measured,
            self.bound,
            self.constant,
            if self.pass { "pass" } else { "FAIL" },
            if self.notes.is_empty() {
                String::new()
            } else {
                format!(" — {}", self.notes)
            }
        )
    }
}

#[derive(Clone, Debug)]
pub struct JointMomentRow {
    pub tuple: Vec<i64>,
    pub empirical: f64,
    pub model: f64,
    /// |empirical - model| * sqrt(m)
    pub scaled_deviation: f64,
}

/// Joint spectral moments (1/|Omega|) sum_a prod_i phi-hat_a(h_i) against
/// the independent-trace model: the model moment is the product over
/// distinct frequencies of E[X^mult], with E[X], E[X^3] = 0 and E[X^2] from
/// deterministic quadrature. Deviations are reported scaled by sqrt(m) and
/// checked against the calibrated constant.
pub fn joint_moment_audit(
    ctx: &FamilyContext,
    tuples: &[Vec<i64>],
    mode: SampleMode,
    constant: f64,
) -> (Vec<JointMomentRow>, AuditReport) {
    let m = ctx.spec().m;
    let chars = CharTable::new(m);
    let indices = mode.indices(ctx.count());
    let n_members = indices.len() as f64;
    let mut rows = Vec::with_capacity(tuples.len());
    // frequencies needed across all tuples
    let mut freqs: Vec<i64> = tuples.iter().flatten().cloned().collect();
    freqs.sort_unstable();
    freqs.dedup();
    let sums: Vec<Vec<Complex64>> = indices
        .par_iter()
        .with_min_len(16)
        .map(|&index| {
            let phi = ctx.member(index);
            freqs
                .iter()
                .map(|&h| fourier_coefficient_with(&phi, h, &chars))
                .collect()
        })
        .collect();
    for tuple in tuples {
        assert!(tuple.len() <= 3 && tuple.iter().all(|&h| h != 0));
        let mut acc = Complex64::new(0.0, 0.0);
        for member in &sums {
            let mut prod = Complex64::new(1.0, 0.0);
            for h in tuple {
                let slot = freqs.binary_search(h).unwrap();
                prod *= member[slot];
            }
            acc += prod;
        }
        let empirical = acc.re / n_members;
        let model = model_moment(tuple, ctx.spec());
        rows.push(JointMomentRow {
            tuple: tuple.clone(),
            empirical,
            model,
            scaled_deviation: (empirical - model).abs() * (m as f64).sqrt(),
        });
    }
    let worst = rows
        .iter()
        .map(|r| r.scaled_deviation)
        .fold(0.0, f64::max);
    let report = AuditReport {
        assumption: "joint-moments".into(),
        measured: worst,
        bound: constant,
        constant,
        pass: worst <= constant,
        notes: format!(
            "{} tuples on {} of {} members",
            tuples.len(),
            indices.len(),
            ctx.count()
        ),
    };
    (rows, report)
}

fn model_moment(tuple: &[i64], spec: &FamilySpec) -> f64 {
    let second = match spec.kind {
        FamilyKind::Extremal => 1.0, // fair coins
        _ => {
            let rank = (spec.symmetry_bound() / 2.0).round().max(1.0) as u32;
            if rank <= 3 {
                crate::constants::trace_moment(2, rank)
            } else {
                1.0 // E[X^2] = 1 for every USp(2r)
            }
        }
    };
    let mut counts: HashMap<i64, u32> = HashMap::new();
    for &h in tuple {
        *counts.entry(h).or_insert(0) += 1;
    }
    let mut prod = 1.0;
    for (_, mult) in counts {
        prod *= match mult {
            1 | 3 => 0.0, // odd moments vanish
            2 => second,
            _ => unreachable!("tuples are limited to k <= 3"),
        };
    }
    prod
}

/// Exact joint moments of the extremal family's +-1 spectrum over the whole
/// field, in integer arithmetic. Returns (empirical, model, |dev|) rows plus
/// the Weil budget (2r-2) 2^(r/2) / 2^r.
pub fn extremal_joint_moments(
    fam: &crate::families::ExtremalFamily,
    tuples: &[Vec<i64>],
) -> (Vec<JointMomentRow>, f64) {
    let field = fam.field();
    let order = field.order();
    let r = field.degree();
    let rows: Vec<JointMomentRow> = tuples
        .par_iter()
        .map(|tuple| {
            // collapse even multiplicities: signs square to one
            let mut counts: HashMap<i64, u32> = HashMap::new();
            for &h in tuple {
                *counts.entry(h).or_insert(0) += 1;
            }
            let odd: Vec<i64> = counts
                .iter()
                .filter(|(_, &c)| c % 2 == 1)
                .map(|(&h, _)| h)
                .collect();
            let acc: i64 = if odd.is_empty() {
                order as i64
            } else {
                (0..order)
                    .into_par_iter()
                    .map(|a| odd.iter().map(|&h| fam.spectrum_sign(a, h)).product::<i64>())
                    .sum()
            };
            let empirical = acc as f64 / order as f64;
            let model = if odd.is_empty() { 1.0 } else { 0.0 };
            JointMomentRow {
                tuple: tuple.clone(),
                empirical,
                model,
                scaled_deviation: (empirical - model).abs(),
            }
        })
        .collect();
    let budget = (2.0 * r as f64 - 2.0) * 2f64.powf(r as f64 / 2.0) / order as f64;
    (rows, budget)
}

#[derive(Clone, Debug)]
pub struct ShortSumReport {
    pub interval_len: u64,
    /// family-average fourth moment, scaled by p^2/|I|^2
    pub normalized: f64,
    /// 4d: the solution-count bound
    pub bound: f64,
    /// full (a, b in F_p) fourth moment from character orthogonality
    pub full_m4: f64,
    /// exact combinatorial solution count over p^2
    pub count_over_p2: f64,
    pub pass: bool,
}

/// Average fourth moment of short sums for the generalized Kloosterman
/// family over I = {1, ..., L}:
///
///   M4 = (1/(p-1)^2) sum_{a,b} |p^{-1/2} sum_{n in I} phi_{(a,b)}(n)|^4.
///
/// Two independent routes cross-check the computation: the direct family
/// average, and the additive-character identity that evaluates the full
/// (a, b in F_p, parameter-linear) version exactly as (number of solutions
/// of n1+n2=m1+m2, n1bar^d+n2bar^d=m1bar^d+m2bar^d in I^4) / p^2.
pub fn short_sum_moment_audit(p: u64, d: u64, interval_len: u64) -> ShortSumReport {
    let field = PrimeField::new(p).expect("p must be prime");
    assert!(interval_len >= 1 && interval_len < p);
    let chars = CharTable::new(p);
    let inv = field.inverse_table();
    let invd: Vec<u64> = inv.iter().map(|&x| field.pow(x, d)).collect();
    let l = interval_len as usize;

    // family average over (a, b) in F_p^* x F_p^*, phi = e_p(bn + (an-bar)^d)
    let family_sum: f64 = (1..p)
        .into_par_iter()
        .map(|a| {
            let ad = field.pow(a, d);
            let mut acc = 0.0;
            for b in 1..p {
                let mut s = Complex64::new(0.0, 0.0);
                for n in 1..=l as u64 {
                    s += chars.at(field.add(field.mul(b, n), field.mul(ad, invd[n as usize])));
                }
                let v = s.norm_sqr() / p as f64;
                acc += v * v;
            }
            acc
        })
        .sum();
    let m4_family = family_sum / ((p - 1) * (p - 1)) as f64;

    // full version over all (a, b) in F_p^2 with the linear parameter a n-bar^d
    let full_sum: f64 = (0..p)
        .into_par_iter()
        .map(|a| {
            let mut acc = 0.0;
            for b in 0..p {
                let mut s = Complex64::new(0.0, 0.0);
                for n in 1..=l as u64 {
                    s += chars.at(field.add(field.mul(b, n), field.mul(a, invd[n as usize])));
                }
                let v = s.norm_sqr() / p as f64;
                acc += v * v;
            }
            acc
        })
        .sum();
    let full_m4 = full_sum / (p * p) as f64;

    // combinatorial route: count solutions by bucketing (n1+n2, n1bar^d+n2bar^d)
    let mut buckets: HashMap<(u64, u64), u64> = HashMap::new();
    for n1 in 1..=interval_len {
        for n2 in 1..=interval_len {
            let key = (
                field.add(n1 % p, n2 % p),
                field.add(invd[n1 as usize], invd[n2 as usize]),
            );
            *buckets.entry(key).or_insert(0) += 1;
        }
    }
    let solutions: u64 = buckets.values().map(|c| c * c).sum();
    let count_over_p2 = solutions as f64 / (p * p) as f64;

    let normalized = m4_family * (p * p) as f64 / (interval_len * interval_len) as f64;
    let bound = 4.0 * d as f64;
    ShortSumReport {
        interval_len,
        normalized,
        bound,
        full_m4,
        count_over_p2,
        pass: normalized <= bound,
    }
}

#[derive(Clone, Debug)]
pub struct MaxShortReport {
    pub max_len: usize,
    /// empirical alpha-moment of the normalized short-sum maximum
    pub moment: f64,
    /// the bound shape L m^(-1/2-delta/2) + m^(-delta/4), delta = 1/6
    pub shape: f64,
    pub ratio: f64,
    pub members: usize,
}

/// Per member, the true maximum over all intervals of length <= L of
/// |m^{-1/2} sum_{n in I} phi(n)|, by sliding prefix differences; reports
/// the empirical alpha-th moment against the bound shape.
pub fn max_short_sum_audit(
    ctx: &FamilyContext,
    max_len: usize,
    alpha: u32,
    mode: SampleMode,
) -> MaxShortReport {
    let m = ctx.spec().m as usize;
    assert!(max_len >= 1 && max_len < m);
    let indices = mode.indices(ctx.count());
    let root = (m as f64).sqrt();
    let moments: Vec<f64> = indices
        .par_iter()
        .with_min_len(4)
        .map(|&index| {
            let phi = ctx.member(index);
            let profile = prefix_profile(&phi);
            let mut best = 0.0f64;
            // intervals [x, y] with 0 <= x <= y <= m-1, y - x <= L
            for y in 0..m {
                let x_lo = y.saturating_sub(max_len);
                for x in x_lo..=y {
                    let s = if x == 0 {
                        profile.prefix(y)
                    } else {
                        profile.prefix(y) - profile.prefix(x - 1)
                    };
                    let v = s.norm_sqr();
                    if v > best {
                        best = v;
                    }
                }
            }
            (best.sqrt() / root).powi(alpha as i32)
        })
        .collect();
    let moment = moments.iter().sum::<f64>() / moments.len() as f64;
    let delta = 1.0 / 6.0;
    let mf = m as f64;
    let shape = max_len as f64 * mf.powf(-0.5 - delta / 2.0) + mf.powf(-delta / 4.0);
    MaxShortReport {
        max_len,
        moment,
        shape,
        ratio: moment / shape,
        members: moments.len(),
    }
}

#[derive(Clone, Debug)]
pub struct TailMomentReport {
    /// true when the asymptotic regime's own y = 10^5 N^2 k exceeds m/4 and a
    /// surrogate cutoff was used instead
    pub surrogate_regime: bool,
    pub y_used: u64,
    pub theory_y: u64,
    pub k: u32,
    pub grid_count: usize,
    /// empirical 2k-th moment of the grid maximum of the spectral tail sum
    pub moment: f64,
    /// e^{-2k}, the shape the moment is compared against
    pub reference: f64,
    pub ratio: f64,
}

/// 2k-th moment of max_{alpha in S} |sum_{y <= |h| < m/2}
/// (e(alpha h)-1)/h phi-hat_a(h)| for a Birch family, using the
/// shifted-complete-sum structure of the spectrum so the whole family costs
/// one O(p^2) table. When the asymptotic regime's cutoff y = 10^5 N^2 k exceeds
/// m/4 (every desk-scale prime), the audit runs at the surrogate cutoff
/// y = m/8 and says so.
pub fn tail_moment_audit(
    ctx: &FamilyContext,
    k: u32,
    grid_count: usize,
    mode: SampleMode,
) -> TailMomentReport {
    assert!((1..=4).contains(&k), "moment order limited to k <= 4");
    let m = ctx.spec().m;
    let n_bound = ctx.spec().symmetry_bound();
    let theory_y = (1e5 * n_bound * n_bound * k as f64) as u64;
    let (y_used, surrogate) = if theory_y > m / 4 {
        (m / 8, true)
    } else {
        (theory_y, false)
    };
    let table = ctx
        .birch_spectrum_table()
        .expect("tail moment audit runs on Birch families");
    let p = m;
    let indices = mode.indices(ctx.count());
    let moments: Vec<f64> = indices
        .par_iter()
        .with_min_len(8)
        .map(|&index| {
            let (a, _) = ctx.member_params(index);
            let mut best = 0.0f64;
            for j in 0..grid_count {
                let alpha = j as f64 / grid_count as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for h in y_used as i64..=((m - 1) / 2) as i64 {
                    // pair +-h; both map into the shifted complete-sum table
                    let ang = TAU * alpha * h as f64;
                    let e = Complex64::new(ang.cos(), ang.sin());
                    let c_plus = (e - 1.0) / h as f64;
                    let c_minus = (e.conj() - 1.0) / (-h as f64);
                    let w_plus = table[((a as i64 + h) % p as i64) as usize];
                    let w_minus = table[(a as i64 - h).rem_euclid(p as i64) as usize];
                    acc += c_plus * w_plus + c_minus * w_minus;
                }
                best = best.max(acc.norm());
            }
            best.powi(2 * k as i32)
        })
        .collect();
    let moment = if moments.is_empty() {
        0.0
    } else {
        moments.iter().sum::<f64>() / moments.len() as f64
    };
    let reference = (-2.0 * k as f64).exp();
    TailMomentReport {
        surrogate_regime: surrogate,
        y_used,
        theory_y,
        k,
        grid_count,
        moment,
        reference,
        ratio: moment / reference,
    }
}

#[derive(Clone, Debug)]
pub struct CoarseGridReport {
    pub grid_count: usize,
    /// proportion of members with |full max - grid max| above the threshold
    pub exceedance: f64,
    /// 3 m^(1/2 - delta/(8 alpha)), delta = 1/6, alpha = 4
    pub threshold: f64,
    /// allowed exceptional proportion 3 m^(-delta/10)
    pub allowed: f64,
    pub max_gap: f64,
    pub members: usize,
    pub pass: bool,
}

/// Measures how well the coarse grid x_j = floor(j m / J) captures the true
/// maximum across the family.
pub fn coarse_grid_audit(ctx: &FamilyContext, grid_count: usize, mode: SampleMode) -> CoarseGridReport {
    let m = ctx.spec().m as f64;
    let delta = 1.0 / 6.0;
    let alpha = 4.0;
    let threshold = 3.0 * m.powf(0.5 - delta / (8.0 * alpha));
    let allowed = 3.0 * m.powf(-delta / 10.0);
    let indices = mode.indices(ctx.count());
    let gaps: Vec<f64> = indices
        .par_iter()
        .with_min_len(16)
        .map(|&index| {
            let profile = prefix_profile(&ctx.member(index));
            profile.max_value() - profile.grid_max(grid_count)
        })
        .collect();
    let exceed = gaps.iter().filter(|&&g| g > threshold).count();
    let members = gaps.len();
    let exceedance = exceed as f64 / members as f64;
    CoarseGridReport {
        grid_count,
        exceedance,
        threshold,
        allowed,
        max_gap: gaps.iter().cloned().fold(0.0, f64::max),
        members,
        pass: exceedance <= allowed,
    }
}

#[derive(Clone, Debug)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub points_used: usize,
    pub v_window: (f64, f64),
    /// set when the resolvable window is under one unit of V
    pub narrow_window: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SlopeError {
    InsufficientWindow { resolvable: usize },
}

impl fmt::Display for SlopeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlopeError::InsufficientWindow { resolvable } => write!(
                f,
                "only {resolvable} tail points are statistically resolvable (need 4); \
                 the asymptotic window is closed at this modulus"
            ),
        }
    }
}

impl std::error::Error for SlopeError {}

/// Least-squares slope of log log (1/Phi(V)) against V over the grid points
/// where the tail is resolvable: Phi in (10/count, 0.5). Refuses rather
/// than extrapolating when fewer than 4 points qualify.
pub fn loglog_slope(tail: &EmpiricalTail, v_grid: &[f64]) -> Result<SlopeFit, SlopeError> {
    let floor = 10.0 / tail.count() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &v in v_grid {
        let phi = tail.phi_at(v);
        if phi > floor && phi < 0.5 {
            xs.push(v);
            ys.push((1.0 / phi).ln().ln());
        }
    }
    if xs.len() < 4 {
        return Err(SlopeError::InsufficientWindow { resolvable: xs.len() });
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    let window = (xs[0], *xs.last().unwrap());
    Ok(SlopeFit {
        slope,
        stderr,
        points_used: xs.len(),
        v_window: window,
        narrow_window: window.1 - window.0 < 1.0,
    })
}

/// The fixed V grid used for cross-run comparisons: 0.0, 0.1, ..., 3.0.
pub fn standard_v_grid() -> Vec<f64> {
    (0..=30).map(|k| k as f64 / 10.0).collect()
}
