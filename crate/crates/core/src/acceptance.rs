//! Acceptance suite: one check per criterion, each with pinned tolerances,
//! a pass flag, a human-readable detail line and a deterministic artifact
//! (the numbers the verdict was computed from, in round-trip notation).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::capacity::{
    annulus_capacity, superpoly_decay_check, theorem1_experiment, EnergyModel, GridSolverConfig, Theorem1Config,
    DECAY_FLOOR,
};
use crate::distortion::{bound_ratio, decades, distortion_k, jacobian_f2_analytic, jacobian_fd, Jacobian2};
use crate::maps::{boundary_image_trace, image_angle, mobius_f1, MapChain};
use crate::point::{PolarPoint, Sector};
use crate::profile::ProfileParams;
use crate::quadrature::{exp_divergence_onset, integral_exp_k, integral_k_pow, AnnularScheme, Verdict};
use crate::sampling::{halton2_from, halton_disk, halton_disk_from};

pub const JACOBIAN_REL_TOL: f64 = 1e-6;
pub const JACOBIAN_POINTS_PER_SECTOR: usize = 1000;
pub const FD_STEP_REL: f64 = 1e-5;
pub const ROUND_TRIP_TOL: f64 = 1e-9;
pub const SEAM_TOL: f64 = 1e-12;
pub const RATIO_BAND: (f64, f64) = (0.05, 2.0);
pub const RATIO_LIMIT_TARGET: f64 = 0.5;
pub const RATIO_LIMIT_TOL: f64 = 0.05;
pub const LP_EXPONENTS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
pub const EXP_LAMBDAS: [f64; 3] = [0.01, 0.1, 1.0];
pub const DECAY_EXPONENTS: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];
pub const POWER_CONTROL_S0: f64 = 5.0;
pub const ANNULUS_TOL: f64 = 0.02;
pub const ANNULUS_RESOLUTIONS: [usize; 3] = [128, 256, 512];
pub const THEOREM1_RESOLUTION: usize = 256;
pub const BOUNDARY_C_TOL: f64 = 0.2;

/// Criteria whose targets are out of reach for the constructed map; they are
/// run exactly as stated and report FAIL.
pub const UNATTAINABLE: [u8; 2] = [3, 5];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AcceptanceOptions {
    pub params: ProfileParams,
    /// Replace `G'` by `g'` in the analytic Jacobian (negative control).
    pub inject_wrong_jacobian: bool,
    /// Offset into the Halton sequence for the sampled criteria.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub module: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub artifact: String,
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {:<10} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.module,
            self.title,
            self.detail
        )
    }
}

pub const ALL: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

pub fn module_of(id: u8) -> &'static str {
    match id {
        1 | 3 => "distortion",
        2 | 9 => "maps",
        4 | 5 => "quadrature",
        6..=8 => "capacity",
        _ => "cli",
    }
}

/// Criteria belonging to a module tag, or the single criterion `"N"`.
pub fn select(filter: &str) -> Option<Vec<u8>> {
    if let Ok(id) = filter.parse::<u8>() {
        return ALL.contains(&id).then(|| vec![id]);
    }
    let ids: Vec<u8> = ALL.iter().copied().filter(|&id| module_of(id) == filter).collect();
    (!ids.is_empty()).then_some(ids)
}

fn nums(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn budget(id: u8) -> f64 {
    match id {
        1 | 2 | 6 => 5.0,
        3 => 10.0,
        4 | 5 => 60.0,
        7 => 120.0,
        8 => 600.0,
        9 => 2.0,
        _ => f64::INFINITY,
    }
}

pub fn run_criterion(id: u8, opts: &AcceptanceOptions) -> CriterionResult {
    let start = Instant::now();
    let (title, pass, detail, artifact) = match id {
        1 => jacobian_agreement(opts),
        2 => homeomorphism_sanity(opts),
        3 => distortion_bound(opts),
        4 => lp_convergence(opts),
        5 => exp_divergence(opts),
        6 => lemma2_decay(),
        7 => annulus_calibration(),
        8 => theorem1_shape(opts),
        9 => boundary_asymptotics(),
        _ => ("unknown criterion", false, format!("no criterion {id}"), String::new()),
    };
    let elapsed_s = start.elapsed().as_secs_f64();
    let in_time = elapsed_s <= budget(id);
    let detail =
        if in_time { detail } else { format!("{detail}; runtime {elapsed_s:.1} s over the {} s budget", budget(id)) };
    CriterionResult { id, module: module_of(id), title, pass: pass && in_time, detail, artifact, elapsed_s }
}

pub fn run_suite(ids: &[u8], opts: &AcceptanceOptions) -> Vec<CriterionResult> {
    ids.iter().map(|&id| run_criterion(id, opts)).collect()
}

/// Criterion 10: two runs give byte-identical artifacts.
pub fn determinism(first: &[CriterionResult], second: &[CriterionResult]) -> CriterionResult {
    let mismatched: Vec<u8> = first
        .iter()
        .zip(second)
        .filter(|(a, b)| a.id != b.id || a.artifact != b.artifact || a.detail != b.detail)
        .map(|(a, _)| a.id)
        .collect();
    let same_len = first.len() == second.len();
    let pass = same_len && mismatched.is_empty();
    let detail = if pass {
        format!("{} artifacts byte-identical across two runs", first.len())
    } else {
        format!("artifacts differ for criteria {mismatched:?}")
    };
    CriterionResult {
        id: 10,
        module: "cli",
        title: "determinism",
        pass,
        detail,
        artifact: String::new(),
        elapsed_s: 0.0,
    }
}

type Outcome = (&'static str, bool, String, String);

fn analytic(p: &PolarPoint, params: &ProfileParams, opts: &AcceptanceOptions) -> Jacobian2 {
    let mut m = jacobian_f2_analytic(p, params).expect("analytic Jacobian on sampled point");
    if opts.inject_wrong_jacobian {
        let s = params.eval_scaled(p.r.ln()).expect("profile on sampled point");
        m.a11 = s.r_depth_prime / p.r;
    }
    m
}

fn sector_points(sector: Sector, n: usize, seed: u64) -> Vec<PolarPoint> {
    let (lo, hi) = (1e-6f64.ln(), 0.9f64.ln());
    let base = match sector {
        Sector::Inner => -FRAC_PI_2,
        Sector::Outer => FRAC_PI_2,
    };
    halton2_from(1 + seed, n)
        .into_iter()
        .map(|(u, v)| PolarPoint::new((lo + (hi - lo) * u).exp(), base + PI * v))
        .collect()
}

fn jacobian_agreement(opts: &AcceptanceOptions) -> Outcome {
    let params = opts.params;
    let mut worst = 0.0f64;
    let mut skipped = 0usize;
    let mut checked = 0usize;
    for sector in [Sector::Inner, Sector::Outer] {
        for p in sector_points(sector, JACOBIAN_POINTS_PER_SECTOR, opts.seed) {
            let fd = match jacobian_fd(&p, &params, FD_STEP_REL * p.r) {
                Ok(m) => m,
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            };
            let a = analytic(&p, &params, opts);
            let c1 = a.a11.hypot(a.a21);
            let c2 = a.a12.hypot(a.a22);
            let dev = [
                (a.a11 - fd.a11).abs() / c1,
                (a.a21 - fd.a21).abs() / c1,
                (a.a12 - fd.a12).abs() / c2,
                (a.a22 - fd.a22).abs() / c2,
            ]
            .into_iter()
            .fold(0.0, f64::max);
            worst = worst.max(dev);
            checked += 1;
        }
    }
    let pass = worst <= JACOBIAN_REL_TOL && skipped == 0;
    (
        "Jacobian matches central differences",
        pass,
        format!(
            "max relative deviation {worst:.3e} over {checked} points (tol {JACOBIAN_REL_TOL:e}), {skipped} seam skips"
        ),
        format!("worst={worst:?};checked={checked};skipped={skipped}"),
    )
}

fn homeomorphism_sanity(opts: &AcceptanceOptions) -> Outcome {
    let params = opts.params;
    let chain = MapChain::new(params);
    let mut round_trip = 0.0f64;
    let points = halton_disk_from(1 + opts.seed, 1000, 0.99);
    let mut failures = 0;
    for &x in &points {
        match chain.apply(x).and_then(|w| chain.apply_inverse(w)) {
            Ok(back) => round_trip = round_trip.max(back.distance(x)),
            Err(_) => failures += 1,
        }
    }
    let mut seam = 0.0f64;
    for k in 0..200 {
        let r = (1e-12f64.ln() * (1.0 - k as f64 / 199.0)).exp();
        let s = params.eval_scaled(r.ln()).expect("profile on seam radius");
        for theta in [FRAC_PI_2, -FRAC_PI_2] {
            let inner = PolarPoint { r, theta, sector: Sector::Inner };
            let outer = PolarPoint { r, theta, sector: Sector::Outer };
            let (a, b) = (image_angle(&inner, s.atan_aspect), image_angle(&outer, s.atan_aspect));
            let gap = s.image_radius * 2.0 * (0.5 * (a - b)).sin().abs();
            seam = seam.max(gap);
        }
    }
    let mut min_det = f64::INFINITY;
    for sector in [Sector::Inner, Sector::Outer] {
        for p in sector_points(sector, JACOBIAN_POINTS_PER_SECTOR, opts.seed) {
            min_det = min_det.min(distortion_k(&jacobian_f2_analytic(&p, &params).expect("sampled point")).jac_det);
        }
    }
    for x in halton_disk(1000, 0.99) {
        let p = PolarPoint::from_plane(mobius_f1(x));
        if p.r > 0.0 && p.r.is_finite() {
            min_det = min_det.min(distortion_k(&jacobian_f2_analytic(&p, &params).expect("disk point")).jac_det);
        }
    }
    let pass = failures == 0 && round_trip <= ROUND_TRIP_TOL && seam <= SEAM_TOL && min_det > 0.0;
    (
        "chain is a homeomorphism on samples",
        pass,
        format!(
            "round trip {round_trip:.3e} (tol {ROUND_TRIP_TOL:e}, {failures} failures), seam gap {seam:.3e} (tol {SEAM_TOL:e}), min det {min_det:.3e}"
        ),
        format!("round_trip={round_trip:?};seam={seam:?};min_det={min_det:?};failures={failures}"),
    )
}

fn distortion_bound(opts: &AcceptanceOptions) -> Outcome {
    let params = opts.params;
    let log_r = decades(2.0, 30.0, 57);
    let thetas: Vec<f64> = (0..64).map(|j| -FRAC_PI_2 + 2.0 * PI * (j as f64 + 0.5) / 64.0).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_at, mut hi_at) = ((0.0, 0.0), (0.0, 0.0));
    for &l in &log_r {
        for &t in &thetas {
            let q = bound_ratio(l, t, &params).expect("ratio on sampled point");
            if q < lo {
                lo = q;
                lo_at = (l, t);
            }
            if q > hi {
                hi = q;
                hi_at = (l, t);
            }
        }
    }
    let limit = bound_ratio(-30.0 * std::f64::consts::LN_10, PI, &params).expect("ratio at r = 1e-30");
    let in_band = lo >= RATIO_BAND.0 && hi <= RATIO_BAND.1;
    let at_limit = (limit - RATIO_LIMIT_TARGET).abs() <= RATIO_LIMIT_TOL;
    (
        "distortion bound ratio K / (log loglog)",
        in_band && at_limit,
        format!(
            "ratios in [{lo:.4}, {hi:.4}] (band [{}, {}]; min at log10 r = {:.1}, theta = {:.3}; max at log10 r = {:.1}, theta = {:.3}); theta = pi ratio at r = 1e-30 is {limit:.4} (target {RATIO_LIMIT_TARGET} +/- {RATIO_LIMIT_TOL})",
            RATIO_BAND.0,
            RATIO_BAND.1,
            lo_at.0 / std::f64::consts::LN_10,
            lo_at.1,
            hi_at.0 / std::f64::consts::LN_10,
            hi_at.1
        ),
        format!("min={lo:?};max={hi:?};limit={limit:?}"),
    )
}

fn lp_convergence(opts: &AcceptanceOptions) -> Outcome {
    let chain = MapChain::new(opts.params);
    let scheme = AnnularScheme::default();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut art = String::new();
    for p in LP_EXPONENTS {
        let r = integral_k_pow(p, &scheme, &chain).expect("K^p quadrature");
        let good = r.verdict == Verdict::Convergent && r.ratio_stats.last <= 0.9;
        ok &= good;
        parts.push(format!("p={p}: {:?}, last ratio {:.3}", r.verdict, r.ratio_stats.last));
        let _ = write!(art, "p={p:?}:{}|", nums(&r.log_increments));
    }
    ("K^p integrable down to eps = 2^-64", ok, parts.join("; "), art)
}

fn exp_divergence(opts: &AcceptanceOptions) -> Outcome {
    let params = opts.params;
    let chain = MapChain::new(params);
    let scheme = AnnularScheme::default();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut art = String::new();
    for lambda in EXP_LAMBDAS {
        let r = integral_exp_k(lambda, &scheme, &chain).expect("exp(lambda K) quadrature");
        let increasing = r.partials.windows(2).all(|w| w[1].log_value > w[0].log_value);
        let growing = r.ratio_stats.min_last_window >= 1.1;
        let good = r.verdict == Verdict::Divergent && increasing && growing;
        ok &= good;
        let onset = exp_divergence_onset(lambda, &params).expect("onset search");
        parts.push(format!(
            "lambda={lambda}: {:?}, last ratio {:.3}, increments grow only beyond r = 2^-{:.4e}",
            r.verdict, r.ratio_stats.last, onset.octaves
        ));
        let _ = write!(art, "lambda={lambda:?}:{}|onset={:?}|", nums(&r.log_increments), onset.depth);
    }
    ("exp(lambda K) diverges down to eps = 2^-64", ok, parts.join("; "), art)
}

fn lemma2_decay() -> Outcome {
    let r: Vec<f64> = (3..=12).map(|k| 0.5f64.powi(k)).collect();
    let report = superpoly_decay_check(&DECAY_EXPONENTS, &r, EnergyModel::ExpCusp).expect("decay check");
    let control = superpoly_decay_check(&[10.0], &r, EnergyModel::Power { s0: POWER_CONTROL_S0 }).expect("control");
    let pass = report.pass && !control.pass;
    let finals: Vec<f64> = report.rows.iter().map(|row| *row.log_ratios.last().unwrap()).collect();
    (
        "test-function energy decays faster than any power",
        pass,
        format!(
            "final log ratios {:?} (floor log {:.2}); power-cusp control with s0 = {POWER_CONTROL_S0} {}",
            finals.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>(),
            DECAY_FLOOR.ln(),
            if control.pass { "passes (wrong)" } else { "fails as required" }
        ),
        format!("finals={};control={}", nums(&finals), control.pass),
    )
}

fn annulus_calibration() -> Outcome {
    let exact = 2.0 * PI / 4f64.ln();
    let mut errs = Vec::new();
    let mut vals = Vec::new();
    for res in ANNULUS_RESOLUTIONS {
        let e = annulus_capacity(0.25, 1.0, &GridSolverConfig::with_resolution(res)).expect("annulus solve");
        vals.push(e.value);
        errs.push(((e.value - exact) / exact).abs());
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let pass = monotone && errs[2] <= ANNULUS_TOL;
    (
        "annulus capacity calibration",
        pass,
        format!(
            "relative errors {:.3e}, {:.3e}, {:.3e} at resolutions 128/256/512 (tol {ANNULUS_TOL}); exact {exact:.6}",
            errs[0], errs[1], errs[2]
        ),
        format!("values={}", nums(&vals)),
    )
}

fn theorem1_shape(opts: &AcceptanceOptions) -> Outcome {
    let chain = MapChain::new(opts.params);
    let ts: Vec<f64> = (3..=8).map(|k| 0.5f64.powi(k)).collect();
    let cfg = Theorem1Config { grid: GridSolverConfig::with_resolution(THEOREM1_RESOLUTION), ..Default::default() };
    let table = theorem1_experiment(&ts, &chain, &cfg).expect("pullback experiment");
    let monotone = table.capacity_monotone();
    let mut pass = monotone;
    let mut parts = vec![format!("capacity column {}", if monotone { "monotone" } else { "NOT monotone" })];
    for s in [1.0, 2.0] {
        let lr = table.log_ratios(s);
        let decays = lr.windows(2).all(|w| w[1] < w[0]) && *lr.last().unwrap() < DECAY_FLOOR.ln();
        pass &= decays;
        parts.push(format!("log cap/t^{s} from {:.2} to {:.2}", lr[0], lr[lr.len() - 1]));
    }
    let caps: Vec<f64> = table.rows.iter().map(|r| r.log_capacity).collect();
    (
        "pullback capacity vanishes faster than t^s",
        pass,
        parts.join("; "),
        format!("log_cap={};near={:?}", nums(&caps), table.near_field.value),
    )
}

fn boundary_asymptotics() -> Outcome {
    let ts: Vec<f64> = (0..=60).map(|k| 10f64.powf(-4.0 + 3.0 * k as f64 / 60.0)).collect();
    let trace = boundary_image_trace(&ts);
    let a = crate::maps::fit_quadratic_residual(&trace, 1e-4, 1e-2).unwrap_or(f64::NAN);
    let b = crate::maps::fit_quadratic_residual(&trace, 1e-3, 1e-1).unwrap_or(f64::NAN);
    let bounded = trace.iter().all(|p| p.residual <= 1.05 * a.max(b) * p.t * p.t);
    let stable = (a / b - 1.0).abs() <= BOUNDARY_C_TOL;
    (
        "image boundary is t + O(t^2)",
        stable && bounded,
        format!("fitted C = {a:.6} on [1e-4, 1e-2], {b:.6} on [1e-3, 1e-1] (stability tol {BOUNDARY_C_TOL})"),
        format!("c_small={a:?};c_large={b:?}"),
    )
}
