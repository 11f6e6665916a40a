//! Pullback condenser of the cusp map on the unit disk.
//!
//! Around the source point `x* = -1` write `x = -1 + e^{-s} e^{i phi}`. The
//! coordinates are conformal, so the weighted Dirichlet energy keeps its form
//! `∫ (u_s^2 + u_phi^2) w ds dphi`, and the disk becomes
//! `{e^{-s} < 2 cos phi}`: a half-strip of width `pi` for large `s`. The arc
//! `E_t` is the part of its boundary with `s >= s_max(t)`, which for the
//! exponential cusp lies astronomically far down the strip.
//!
//! The condenser is split at `s = s_cut`. The part containing `F` is solved on
//! a grid with `u = 1` on the cut; beyond the cut `u` is taken to depend on
//! `s` alone, which gives the series resistance `∫ ds / W(s)` with
//! `W(s) = ∫ w(s, phi) dphi` over the cross-section.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::grid::{grid_capacity, Grid, GridSolverConfig, Rect};
use super::lemmas::{capala_lower_bound_log, diamarvio_bound, lip_test_energy};
use super::CapacityEstimate;
use crate::distortion::distortion_k_log;
use crate::domains::{arc_diameter, image_boundary_arc, preimage_arc_diameter, preimage_arc_log_radius};
use crate::error::{CuspError, Result};
use crate::maps::{MapChain, Stage};
use crate::point::PlanePoint;
use crate::quadrature::{log_sum_exp, GaussRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightKind {
    /// `1 / K_f`.
    InverseDistortion,
    /// `1`.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Config {
    pub grid: GridSolverConfig,
    pub s_cut: f64,
    pub weight: WeightKind,
    pub lambda: f64,
    pub eps: f64,
    pub c: f64,
    pub c_tilde: f64,
    /// Samples per branch of the image arc.
    pub arc_samples: usize,
}

impl Default for Theorem1Config {
    fn default() -> Self {
        Self {
            grid: GridSolverConfig::default(),
            s_cut: 5.0,
            weight: WeightKind::InverseDistortion,
            lambda: 1.0,
            eps: 1.0,
            c: 1.0,
            c_tilde: 1.0,
            arc_samples: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Row {
    pub t: f64,
    pub diam_e_prime: f64,
    pub log_diam_e: f64,
    pub s_max: f64,
    pub capacity: f64,
    pub log_capacity: f64,
    pub log_cap_over_t: f64,
    pub log_cap_over_t2: f64,
    /// `None` where `sqrt(4L/pi) / diam E_t <= 1`.
    pub lemma1_log_bound: Option<f64>,
    pub lemma3_log_bound: f64,
    /// `None` unless `t < d/2`.
    pub lemma2_log_energy: Option<f64>,
    /// Whether `E_t ⊂ B(-1, 1/6)`.
    pub e_in_sixth_ball: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Table {
    pub weight: WeightKind,
    pub rows: Vec<Theorem1Row>,
    pub near_field: CapacityEstimate,
    /// Column of the near-field grid carrying `u = 1`.
    pub s_cut: f64,
    /// `log ∫_B exp(lambda K)`.
    pub log_l: f64,
    /// `min(1, dist(0, f(F)))`.
    pub d: f64,
}

impl Theorem1Table {
    pub fn capacity_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].log_capacity <= w[0].log_capacity)
    }

    /// `log(cap(t) / t^s)` down the rows.
    pub fn log_ratios(&self, s: f64) -> Vec<f64> {
        self.rows.iter().map(|r| r.log_capacity - s * r.t.ln()).collect()
    }
}

/// `(log |f1(x)|, arg f1(x))` for `x = -1 + e^{-s} e^{i phi}`.
pub fn source_log_polar(s: f64, phi: f64) -> (f64, f64) {
    let w = Complex64::new(2.0, 0.0) - Complex64::from_polar((-s).exp(), phi);
    (-s - w.norm().ln(), phi - w.arg())
}

/// `acos(e^{-s} / 2)`: half-width of the disk's cross-section at `s`.
pub fn section_half_width(s: f64) -> f64 {
    (0.5 * (-s).exp()).min(1.0).acos()
}

fn distortion_at(s: f64, phi: f64, chain: &MapChain) -> Result<f64> {
    if !chain.has(Stage::F2) {
        return Ok(1.0);
    }
    let (log_r, theta) = source_log_polar(s, phi);
    distortion_k_log(log_r, theta, chain.params())
}

fn weight_at(s: f64, phi: f64, chain: &MapChain, kind: WeightKind) -> f64 {
    match kind {
        WeightKind::Unit => 1.0,
        WeightKind::InverseDistortion => distortion_at(s, phi, chain).map_or(f64::NAN, |k| 1.0 / k),
    }
}

fn section_weight(s: f64, chain: &MapChain, kind: WeightKind, rule: &GaussRule) -> Result<f64> {
    let b = section_half_width(s);
    let panels = 8;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = -b + 2.0 * b * k as f64 / panels as f64;
        let hi = -b + 2.0 * b * (k + 1) as f64 / panels as f64;
        for (phi, w) in rule.on(lo, hi) {
            let v = weight_at(s, phi, chain, kind);
            if !v.is_finite() {
                return Err(CuspError::Node { r: (-s).exp(), theta: phi });
            }
            total += w * v;
        }
    }
    Ok(total)
}

/// `∫_{s0}^{s1} ds / W(s)`, integrated in `log s`.
fn tail_resistance(s0: f64, s1: f64, chain: &MapChain, kind: WeightKind) -> Result<f64> {
    let (v0, v1) = (s0.ln(), s1.ln());
    let panels = ((v1 - v0) / 0.125).ceil().max(1.0) as usize;
    let radial = GaussRule::new(8)?;
    let angular = GaussRule::new(12)?;
    (0..panels)
        .into_par_iter()
        .map(|k| {
            let lo = v0 + (v1 - v0) * k as f64 / panels as f64;
            let hi = v0 + (v1 - v0) * (k + 1) as f64 / panels as f64;
            radial
                .on(lo, hi)
                .map(|(v, w)| {
                    let s = v.exp();
                    Ok(w * s / section_weight(s, chain, kind, &angular)?)
                })
                .sum::<Result<f64>>()
        })
        .collect::<Result<Vec<f64>>>()
        .map(|parts| parts.iter().sum())
}

/// `log ∫_B exp(lambda K)`, with `dx = e^{-2s} ds dphi`. The cross-section
/// closes like a square root at `s = -log 2`, so the first unit of `s` is
/// integrated in `q = sqrt(s + log 2)`.
pub fn log_exp_distortion_integral(lambda: f64, chain: &MapChain) -> Result<f64> {
    let radial = GaussRule::new(8)?;
    let angular = GaussRule::new(12)?;
    let mut nodes = Vec::new();
    let q_panels = 16;
    for k in 0..q_panels {
        let (lo, hi) = (k as f64 / q_panels as f64, (k + 1) as f64 / q_panels as f64);
        nodes.extend(radial.on(lo, hi).map(|(q, w)| (q * q - LN_2, 2.0 * q * w)));
    }
    let (s0, s1) = (1.0 - LN_2, 40.0);
    let panels = ((s1 - s0) / 0.125).ceil() as usize;
    for k in 0..panels {
        let lo = s0 + (s1 - s0) * k as f64 / panels as f64;
        let hi = s0 + (s1 - s0) * (k + 1) as f64 / panels as f64;
        nodes.extend(radial.on(lo, hi));
    }
    let terms = nodes
        .par_iter()
        .map(|&(s, ws)| {
            let b = section_half_width(s);
            let mut out = Vec::with_capacity(8 * angular.len());
            for p in 0..8 {
                let a0 = -b + 2.0 * b * p as f64 / 8.0;
                let a1 = -b + 2.0 * b * (p + 1) as f64 / 8.0;
                for (phi, wp) in angular.on(a0, a1) {
                    out.push((ws * wp).ln() - 2.0 * s + lambda * distortion_at(s, phi, chain)?);
                }
            }
            Ok(log_sum_exp(&out))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_sum_exp(&terms))
}

/// Condenser between `F = |x| <= 1/4` and the cut `s >= s_cut` on the grid.
/// Returns the estimate and the abscissa of the cut column.
pub fn near_field_capacity(chain: &MapChain, cfg: &Theorem1Config) -> Result<(CapacityEstimate, f64)> {
    if !(cfg.s_cut > 1.0) {
        return Err(CuspError::Domain(format!("cut at s = {} does not clear F", cfg.s_cut)));
    }
    let bounds = Rect { x_min: -LN_2, x_max: cfg.s_cut, y_min: -FRAC_PI_2, y_max: FRAC_PI_2 };
    let grid = Grid::covering(&bounds, cfg.grid.resolution)?;
    let s_edge = (0..grid.nx).map(|i| grid.x(i)).find(|&s| s >= cfg.s_cut).unwrap_or(grid.x(grid.nx - 1));
    let kind = cfg.weight;
    let est = grid_capacity(
        |s, phi| weight_at(s, phi, chain, kind),
        |s, phi| (Complex64::from_polar((-s).exp(), phi) - 1.0).norm() <= 0.25,
        |s, _| s >= s_edge,
        |s, phi| (-s).exp() < 2.0 * phi.cos(),
        &bounds,
        &cfg.grid,
    )?;
    let weight = match kind {
        WeightKind::Unit => "1",
        WeightKind::InverseDistortion => "1/K",
    };
    Ok((est.described(weight, &format!("|x| <= 1/4 to s >= {s_edge}")), s_edge))
}

/// `min(1, dist(0, f(F)))` for `F = |x| <= 1/4`, from the image of the circle.
pub fn tip_distance_to_f(chain: &MapChain) -> Result<f64> {
    let n = 4096;
    let mut best = f64::INFINITY;
    for k in 0..n {
        let a = 2.0 * PI * k as f64 / n as f64;
        best = best.min(chain.apply(PlanePoint::new(0.25 * a.cos(), 0.25 * a.sin()))?.norm());
    }
    Ok(best.min(1.0))
}

/// Capacity table of `(F, E_t; B)` for decreasing `t`, with the closed-form
/// bounds of the contradiction argument alongside.
pub fn theorem1_experiment(t_list: &[f64], chain: &MapChain, cfg: &Theorem1Config) -> Result<Theorem1Table> {
    if t_list.is_empty() || t_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(CuspError::Domain("t values must be strictly decreasing".into()));
    }
    if chain.stages() != [Stage::F1, Stage::F2, Stage::F3] {
        return Err(CuspError::Domain("the experiment pulls back through the full chain".into()));
    }
    let (near_field, s_cut) = near_field_capacity(chain, cfg)?;
    let r_near = 1.0 / near_field.value;
    let log_l = log_exp_distortion_integral(cfg.lambda, chain)?;
    let d = tip_distance_to_f(chain)?;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let log_r = preimage_arc_log_radius(t, chain)?;
        if !log_r.is_finite() {
            return Err(CuspError::Range(format!("E_t for t = {t} lies beyond the double range of log r")));
        }
        let s_max = -LN_2 - log_r + 0.5 * (2.0 * log_r).exp().ln_1p();
        if !(s_max > s_cut) {
            return Err(CuspError::Domain(format!("E_t for t = {t} reaches the near-field cut (s_max = {s_max})")));
        }
        let log_capacity = -(r_near + tail_resistance(s_cut, s_max, chain, cfg.weight)?).ln();
        let diam_e_prime = arc_diameter(&image_boundary_arc(t, cfg.arc_samples, chain)?);
        let log_diam_e = preimage_arc_diameter(t, chain, cfg.arc_samples)?.log_value;
        rows.push(Theorem1Row {
            t,
            diam_e_prime,
            log_diam_e,
            s_max,
            capacity: log_capacity.exp(),
            log_capacity,
            log_cap_over_t: log_capacity - t.ln(),
            log_cap_over_t2: log_capacity - 2.0 * t.ln(),
            lemma1_log_bound: capala_lower_bound_log(cfg.lambda, log_l, log_diam_e, cfg.c).ok().map(|b| b.log_value),
            lemma3_log_bound: diamarvio_bound(diam_e_prime, cfg.lambda, cfg.eps, cfg.c, cfg.c_tilde)?.log_value,
            lemma2_log_energy: (t < 0.5 * d).then(|| lip_test_energy(t, d).map(|e| e.log_value)).transpose()?,
            e_in_sixth_ball: -s_max < (1.0f64 / 6.0).ln(),
        });
    }
    Ok(Theorem1Table { weight: cfg.weight, rows, near_field, s_cut, log_l, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProfileParams;

    #[test]
    fn log_polar_coordinates_match_direct_map() {
        for (s, phi) in [(0.3f64, 0.4), (2.0, -1.2), (-0.5, 0.1)] {
            let x = Complex64::new(-1.0, 0.0) + Complex64::from_polar((-s).exp(), phi);
            let f1 = (x + 1.0) / (Complex64::new(1.0, 0.0) - x);
            let (lr, th) = source_log_polar(s, phi);
            assert!((lr - f1.norm().ln()).abs() < 1e-13);
            assert!((th - f1.arg()).abs() < 1e-13);
        }
    }

    #[test]
    fn disk_occupies_right_half_plane() {
        for s in [0.0, 3.0, 40.0] {
            let b = section_half_width(s);
            let (_, th) = source_log_polar(s, 0.999 * b);
            assert!(th.abs() < FRAC_PI_2);
        }
        assert_eq!(section_half_width(-LN_2), 0.0);
    }

    #[test]
    fn exp_distortion_is_integrable_over_the_disk() {
        let chain = MapChain::new(ProfileParams::default());
        let a = log_exp_distortion_integral(1.0, &chain).unwrap();
        assert!(a.is_finite() && a > PI.ln() + 1.0);
        let conformal = MapChain::with_stages(ProfileParams::default(), &[Stage::F1]).unwrap();
        let b = log_exp_distortion_integral(1.0, &conformal).unwrap();
        assert!((b - (PI.ln() + 1.0)).abs() < 1e-9, "{b}");
    }

    #[test]
    fn unit_tail_matches_strip_resistance() {
        let chain = MapChain::new(ProfileParams::default());
        let r = tail_resistance(10.0, 1e6, &chain, WeightKind::Unit).unwrap();
        assert!(((r - (1e6 - 10.0) / PI) / r).abs() < 1e-6);
    }
}
