//! Differential of the cusp map in polar-aligned frames, operator norm,
//! Jacobian and the optimal distortion `K = |Df|^2 / J`.
//!
//! The matrix of `Df2` at `(r, theta)` maps the source frame
//! `(e_r, e_theta)` to the image frame `(e_rho, e_alpha)` at `f2(r, theta)`:
//!
//! ```text
//! [ G'(r)                 0                   ]
//! [ G(r) d/dr L(theta)    G(r)/r d/dtheta L   ]
//! ```
//!
//! with `L` the inner or outer linear angle map. Norm and determinant do not
//! depend on the orthonormal frames, so no Cartesian conversion is needed.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CuspError, Result};
use crate::maps::{cusp_map_f2, mobius_f1, MapChain, Stage};
use crate::point::{PlanePoint, PolarPoint, Sector};
use crate::profile::{ProfileParams, ScaledProfile};

/// 2x2 differential in polar-aligned orthonormal frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub base: PolarPoint,
}

impl Jacobian2 {
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    fn entries(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    fn scaled(self, k: f64) -> Self {
        Self { a11: self.a11 * k, a12: self.a12 * k, a21: self.a21 * k, a22: self.a22 * k, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionSample {
    pub base: PolarPoint,
    pub op_norm: f64,
    pub jac_det: f64,
    pub k: f64,
}

/// Matrix of `r Df2` from the scaled profile; rows and columns as in the
/// module docs. Multiplying by `r` leaves `K` unchanged and keeps every entry
/// finite for radii below the double range.
fn scaled_cusp_matrix(s: &ScaledProfile, p: &PolarPoint) -> Jacobian2 {
    let q = (1.0 + s.aspect * s.aspect).sqrt();
    let a11 = s.r_image_radius_prime;
    let (angle_rate, slope) = match p.sector {
        Sector::Inner => (2.0 * p.theta / PI, 2.0 / PI * s.atan_aspect),
        Sector::Outer => (2.0 - 2.0 * p.outer_theta() / PI, 2.0 - 2.0 / PI * s.atan_aspect),
    };
    Jacobian2 { a11, a12: 0.0, a21: angle_rate / q * s.depth * s.r_aspect_prime, a22: slope * s.depth * q, base: *p }
}

/// `Df2` outside the closed unit disk, where `f2(x) = |x| h(x / |x|)`.
fn extension_matrix(unit: &ScaledProfile, p: &PolarPoint) -> Jacobian2 {
    let g1 = unit.image_radius;
    let slope = match p.sector {
        Sector::Inner => 2.0 / PI * unit.atan_aspect,
        Sector::Outer => 2.0 - 2.0 / PI * unit.atan_aspect,
    };
    Jacobian2 { a11: g1, a12: 0.0, a21: 0.0, a22: g1 * slope, base: *p }
}

/// Closed-form differential of `f2` at a polar point with `r > 0`.
///
/// For `r <= 1` the entries are the cusp matrix; for `r > 1` the radial
/// extension's diagonal matrix `diag(G(1), G(1) L'(theta))`.
pub fn jacobian_f2_analytic(p: &PolarPoint, params: &ProfileParams) -> Result<Jacobian2> {
    if !(p.r > 0.0 && p.r.is_finite()) {
        return Err(CuspError::Domain(format!("no classical derivative at r = {}", p.r)));
    }
    if p.r > 1.0 {
        return Ok(extension_matrix(&params.eval_scaled(0.0)?, p));
    }
    let s = params.eval_scaled(p.r.ln())?;
    Ok(scaled_cusp_matrix(&s, p).scaled(1.0 / p.r))
}

/// `r Df2` at the point with the given `log r`; valid for any `log r`
/// including values whose radius is not representable.
pub fn scaled_jacobian_f2(log_r: f64, theta: f64, params: &ProfileParams) -> Result<Jacobian2> {
    let p = PolarPoint::new(log_r.exp(), theta);
    if log_r > 0.0 {
        return Ok(extension_matrix(&params.eval_scaled(0.0)?, &p).scaled(p.r));
    }
    Ok(scaled_cusp_matrix(&params.eval_scaled(log_r)?, &p))
}

/// Central-difference differential of `f2` in the same frames.
///
/// The radial step is `h` and the angular step `h / r`.
pub fn jacobian_fd(p: &PolarPoint, params: &ProfileParams, h: f64) -> Result<Jacobian2> {
    let dtheta = h / p.r;
    let seams = [-FRAC_PI_2, FRAC_PI_2, 1.5 * PI];
    if seams.iter().any(|&s| (p.theta - s).abs() <= 2.0 * dtheta) {
        return Err(CuspError::Seam { theta: p.theta });
    }
    if p.r - 2.0 * h <= 0.0 || (p.r - 1.0).abs() <= 2.0 * h {
        return Err(CuspError::Domain(format!("radius {} is within 2h of the profile endpoints", p.r)));
    }
    let at = |r: f64, t: f64| -> Result<Complex64> {
        let w = cusp_map_f2(&PolarPoint::new(r, t), params)?;
        Ok(Complex64::new(w.x1, w.x2))
    };
    let w = at(p.r, p.theta)?;
    let frame = w / w.norm();
    let d_r = (at(p.r + h, p.theta)? - at(p.r - h, p.theta)?) / (2.0 * h);
    let d_t = (at(p.r, p.theta + dtheta)? - at(p.r, p.theta - dtheta)?) / (2.0 * dtheta * p.r);
    let col1 = d_r * frame.conj();
    let col2 = d_t * frame.conj();
    Ok(Jacobian2 { a11: col1.re, a12: col2.re, a21: col1.im, a22: col2.im, base: *p })
}

/// Largest singular value, from the closed-form 2x2 SVD.
pub fn op_norm(m: &Jacobian2) -> f64 {
    let p = (m.a11 + m.a22).hypot(m.a21 - m.a12);
    let q = (m.a11 - m.a22).hypot(m.a12 + m.a21);
    0.5 * (p + q)
}

/// Optimal distortion; `K = 1` wherever the Jacobian is not positive or
/// the matrix is not finite.
pub fn distortion_k(m: &Jacobian2) -> DistortionSample {
    let finite = m.entries().iter().all(|v| v.is_finite());
    let norm = op_norm(m);
    let det = m.det();
    let k = if finite && det > 0.0 { (norm * norm / det).max(1.0) } else { 1.0 };
    DistortionSample { base: m.base, op_norm: norm, jac_det: det, k }
}

/// `K_{f2}` at `(log r, theta)`, usable far below the double range.
pub fn distortion_k_log(log_r: f64, theta: f64, params: &ProfileParams) -> Result<f64> {
    Ok(distortion_k(&scaled_jacobian_f2(log_r, theta, params)?).k)
}

/// Polar grid over `(0, 1] x [-pi/2, 3pi/2)`; radii log-spaced, angles at
/// cell midpoints (so no sample sits on a seam).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl PolarGrid {
    pub fn points(&self) -> Result<Vec<PolarPoint>> {
        if !(self.r_min > 0.0 && self.r_min <= self.r_max && self.r_max <= 1.0) {
            return Err(CuspError::Domain(format!("invalid radial range {self:?}")));
        }
        if self.n_r == 0 || self.n_theta == 0 {
            return Err(CuspError::Domain("empty polar grid".into()));
        }
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        let mut out = Vec::with_capacity(self.n_r * self.n_theta);
        for i in 0..self.n_r {
            let r = if self.n_r == 1 { self.r_max } else { (a + (b - a) * i as f64 / (self.n_r - 1) as f64).exp() };
            for j in 0..self.n_theta {
                let theta = -FRAC_PI_2 + 2.0 * PI * (j as f64 + 0.5) / self.n_theta as f64;
                out.push(PolarPoint::new(r, theta));
            }
        }
        Ok(out)
    }
}

/// Distortion samples over the grid, in row-major (radius, angle) order.
pub fn distortion_field(grid: &PolarGrid, params: &ProfileParams) -> Result<Vec<DistortionSample>> {
    grid.points()?.par_iter().map(|p| Ok(distortion_k(&jacobian_f2_analytic(p, params)?))).collect()
}

/// Distortion of a chain over a grid in the `f2` source plane. Without the
/// cusp stage the chain is conformal and every sample has `K = 1`.
pub fn distortion_field_chain(grid: &PolarGrid, chain: &MapChain) -> Result<Vec<DistortionSample>> {
    if chain.has(Stage::F2) {
        return distortion_field(grid, chain.params());
    }
    Ok(grid.points()?.into_iter().map(|base| DistortionSample { base, op_norm: 1.0, jac_det: 1.0, k: 1.0 }).collect())
}

/// Ratios `K(r, theta) / (log(c_g/r) log log(c_g/r))` along a ray.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRatioReport {
    pub theta: f64,
    pub log_r: Vec<f64>,
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub band: (f64, f64),
    pub pass: bool,
}

/// Accepted band for the ratios of the outer sector.
pub const BOUND_RATIO_BAND: (f64, f64) = (0.05, 2.0);

pub fn bound_ratio(log_r: f64, theta: f64, params: &ProfileParams) -> Result<f64> {
    let l1 = params.c_g().ln() - log_r;
    Ok(distortion_k_log(log_r, theta, params)? / (l1 * l1.ln()))
}

/// Bound ratios along the ray `theta` at the radii `exp(log_r)`.
pub fn bound_ratio_fit(log_r: &[f64], theta: f64, params: &ProfileParams) -> Result<BoundRatioReport> {
    let ratios = log_r.iter().map(|&l| bound_ratio(l, theta, params)).collect::<Result<Vec<_>>>()?;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let band = BOUND_RATIO_BAND;
    Ok(BoundRatioReport { theta, log_r: log_r.to_vec(), ratios, min, max, band, pass: min >= band.0 && max <= band.1 })
}

/// `log r` values `ln(10^-k)` for `k` stepping from `k_lo` to `k_hi`.
pub fn decades(k_lo: f64, k_hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -(k_lo + (k_hi - k_lo) * i as f64 / (n.max(2) - 1) as f64) * std::f64::consts::LN_10).collect()
}

/// Distortion of the chain at a source point.
///
/// The Möbius stages are conformal, so only `f2` contributes: `K` is `K_{f2}`
/// at `f1(x)` (or at `x` when `F1` is disabled), and `1` without `F2`.
pub fn distortion_k_chain(x: PlanePoint, chain: &MapChain) -> Result<DistortionSample> {
    let w = if chain.has(Stage::F1) { mobius_f1(x) } else { x };
    let p = if w.at_infinity { PolarPoint::new(f64::INFINITY, 0.0) } else { PolarPoint::from_plane(w) };
    if !chain.has(Stage::F2) {
        return Ok(DistortionSample { base: p, op_norm: 1.0, jac_det: 1.0, k: 1.0 });
    }
    if p.r == 0.0 || !p.r.is_finite() {
        return Ok(DistortionSample { base: p, op_norm: f64::NAN, jac_det: f64::NAN, k: 1.0 });
    }
    Ok(distortion_k(&jacobian_f2_analytic(&p, chain.params())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::eval_profile;

    fn jac(a11: f64, a12: f64, a21: f64, a22: f64) -> Jacobian2 {
        Jacobian2 { a11, a12, a21, a22, base: PolarPoint::new(1.0, 0.0) }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn upper_right_entry_vanishes() {
        let p = ProfileParams::default();
        for (r, t) in [(0.3, 1.0), (0.01, PI), (1e-9, -1.2), (0.5, 1.4 * PI), (3.0, 0.2)] {
            assert_eq!(jacobian_f2_analytic(&PolarPoint::new(r, t), &p).unwrap().a12, 0.0);
        }
        assert_eq!(jacobian_f2_analytic(&PolarPoint::new(0.2, 0.0), &p).unwrap().a21, 0.0);
    }

    #[test]
    fn cusp_matrix_matches_displayed_entries() {
        let p = ProfileParams::default();
        let r = 0.07;
        let e = eval_profile(r, &p).unwrap();
        let q = (1.0 + e.aspect * e.aspect).sqrt();
        let theta = 2.2;
        let m = jacobian_f2_analytic(&PolarPoint::new(r, theta), &p).unwrap();
        let top = (e.depth_prime * (1.0 + e.aspect * e.aspect) + e.depth * e.aspect * e.aspect_prime) / q;
        assert!(rel(m.a11, top) < 1e-14);
        assert!(rel(m.a21, (2.0 - 2.0 * theta / PI) / q * e.depth * e.aspect_prime) < 1e-14);
        assert!(rel(m.a22, (2.0 - 2.0 / PI * e.atan_aspect) * e.depth / r * q) < 1e-14);
    }

    #[test]
    fn outer_matrix_matches_multiprecision_oracle() {
        // mpmath.diff of the map itself at (0.01, pi), c_g = 16
        let m = jacobian_f2_analytic(&PolarPoint::new(0.01, PI), &ProfileParams::default()).unwrap();
        assert!(rel(m.a11, 3.7560436449521328608) < 1e-10);
        assert!(m.a21.abs() < 1e-14);
        assert!(rel(m.a22, 94.952751484706979584) < 1e-10);
        assert!(rel(distortion_k(&m).k, 25.279991517754863697) < 1e-10);
    }

    #[test]
    fn inner_and_outer_match_oracle_at_moderate_radius() {
        let p = ProfileParams::default();
        let m = jacobian_f2_analytic(&PolarPoint::new(0.3, 1.0), &p).unwrap();
        assert!(rel(m.a11, 0.48469787562713289433) < 1e-10);
        assert!(rel(m.a21, 0.034937077226104965931) < 1e-10);
        assert!(rel(m.a22, 0.54370346766414529125) < 1e-10);
        let m = jacobian_f2_analytic(&PolarPoint::new(0.3, 0.75 * PI), &p).unwrap();
        assert!(rel(m.a21, 0.027439516287857658174) < 1e-10);
        assert!(rel(m.a22, 4.5684655632389107299) < 1e-10);
    }

    fn fd_deviation(a: &Jacobian2, b: &Jacobian2) -> f64 {
        let c1 = a.a11.hypot(a.a21);
        let c2 = a.a12.hypot(a.a22);
        [(a.a11 - b.a11).abs() / c1, (a.a21 - b.a21).abs() / c1, (a.a12 - b.a12).abs() / c2, (a.a22 - b.a22).abs() / c2]
            .into_iter()
            .fold(0.0, f64::max)
    }

    #[test]
    fn finite_differences_agree() {
        let p = ProfileParams::default();
        for (r, t) in [(0.3, 1.0), (0.3, PI), (1e-5, -0.4), (2e-3, 4.0)] {
            let pt = PolarPoint::new(r, t);
            let a = jacobian_f2_analytic(&pt, &p).unwrap();
            let f = jacobian_fd(&pt, &p, 1e-7 * r).unwrap();
            assert!(fd_deviation(&a, &f) < 1e-6, "({r}, {t})");
        }
    }

    #[test]
    fn finite_differences_converge_at_second_order() {
        let p = ProfileParams::default();
        let pt = PolarPoint::new(0.3, 1.0);
        let a = jacobian_f2_analytic(&pt, &p).unwrap();
        let errs: Vec<f64> =
            [1e-2, 1e-3].iter().map(|&h| fd_deviation(&a, &jacobian_fd(&pt, &p, h * 0.3).unwrap())).collect();
        let order = (errs[0] / errs[1]).log10();
        assert!((order - 2.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn finite_differences_refuse_seams() {
        let p = ProfileParams::default();
        let pt = PolarPoint::new(0.3, FRAC_PI_2 - 1e-8);
        assert!(matches!(jacobian_fd(&pt, &p, 1e-7), Err(CuspError::Seam { .. })));
        assert!(jacobian_fd(&PolarPoint::new(1.0, 0.3), &p, 1e-7).is_err());
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(op_norm(&jac(1.0, 0.0, 0.0, 1.0)), 1.0);
        assert_eq!(op_norm(&jac(3.0, 0.0, 0.0, 2.0)), 3.0);
        assert!((op_norm(&jac(0.0, 0.0, 1.0, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn operator_norm_against_unit_vector_search() {
        let ms = [jac(0.0, 0.0, 1.0, 0.0), jac(1.0, 2.0, -3.0, 0.5), jac(1e-3, 0.0, 7.0, 2e3)];
        for m in ms {
            let brute = (0..10_000)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / 10_000.0;
                    (m.a11 * a.cos() + m.a12 * a.sin()).hypot(m.a21 * a.cos() + m.a22 * a.sin())
                })
                .fold(0.0, f64::max);
            let n = op_norm(&m);
            assert!(n >= brute && (n - brute) <= 1e-6 * n);
        }
    }

    #[test]
    fn distortion_examples() {
        assert!((distortion_k(&jac(0.6, -0.8, 0.8, 0.6)).k - 1.0).abs() < 1e-15);
        assert_eq!(distortion_k(&jac(2.0, 0.0, 0.0, 1.0)).k, 2.0);
        assert_eq!(distortion_k(&jac(1.0, 0.0, 0.0, 0.0)).k, 1.0);
        assert_eq!(distortion_k(&jac(f64::NAN, 0.0, 0.0, 1.0)).k, 1.0);
        assert_eq!(distortion_k(&jac(1.0, 0.0, 0.0, -1.0)).k, 1.0);
    }

    #[test]
    fn field_properties() {
        let p = ProfileParams::default();
        let g = PolarGrid { r_min: 1e-8, r_max: 1.0, n_r: 40, n_theta: 64 };
        let f = distortion_field(&g, &p).unwrap();
        assert_eq!(f.len(), 40 * 64);
        assert!(f.iter().all(|s| s.k >= 1.0 && s.jac_det > 0.0));
        let far = PolarGrid { r_min: 0.9, r_max: 1.0, n_r: 8, n_theta: 64 };
        assert!(distortion_field(&far, &p).unwrap().iter().all(|s| s.k < 1e3));
    }

    #[test]
    fn outer_rays_dominate_at_small_radius() {
        let p = ProfileParams::default();
        for r in [1e-4, 1e-7, 1e-12] {
            let inner = distortion_k(&jacobian_f2_analytic(&PolarPoint::new(r, 0.7), &p).unwrap()).k;
            let outer = distortion_k(&jacobian_f2_analytic(&PolarPoint::new(r, 2.5), &p).unwrap()).k;
            assert!(outer > inner);
        }
    }

    #[test]
    fn bound_ratios_match_oracle() {
        // mpmath ratios K / (log(c/r) loglog(c/r))
        let p = ProfileParams::default();
        let cases = [
            (2.0, 1.71456853126002, 0.157644873731825),
            (10.0, 1.85498922919145, 0.0770764437671713),
            (30.0, 1.9397672989129, 0.0373979310216132),
        ];
        for (k, pi_ratio, zero_ratio) in cases {
            let l = -k * std::f64::consts::LN_10;
            assert!(rel(bound_ratio(l, PI, &p).unwrap(), pi_ratio) < 1e-9);
            assert!(rel(bound_ratio(l, 0.0, &p).unwrap(), zero_ratio) < 1e-9);
        }
    }

    #[test]
    fn outer_ratio_tends_to_two_and_inner_to_zero() {
        let p = ProfileParams::default();
        let far = bound_ratio(-1e6, PI, &p).unwrap();
        assert!((far - 2.0).abs() < 0.01, "{far}");
        let inner = bound_ratio(-1e6, 0.0, &p).unwrap();
        assert!(inner < 0.01);
        let fit = bound_ratio_fit(&decades(2.0, 30.0, 29), PI, &p).unwrap();
        assert!(fit.pass && fit.ratios.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn two_window_constant_is_stable() {
        let p = ProfileParams::default();
        let window_max = |lo: f64, hi: f64| {
            [0.0, 1.0, PI, 4.0]
                .iter()
                .map(|&t| bound_ratio_fit(&decades(lo, hi, 11), t, &p).unwrap().max)
                .fold(0.0, f64::max)
        };
        let a = window_max(10.0, 20.0);
        let b = window_max(20.0, 30.0);
        assert!(rel(a, b) < 0.05);
    }

    #[test]
    fn chain_distortion() {
        let params = ProfileParams::default();
        let chain = MapChain::new(params);
        let at0 = distortion_k_chain(PlanePoint::ORIGIN, &chain).unwrap();
        let direct = distortion_k(&jacobian_f2_analytic(&PolarPoint::new(1.0, 0.0), &params).unwrap());
        assert_eq!(at0.k, direct.k);
        assert!(rel(at0.k, 1.57997883811517) < 1e-10);
        // mpmath: K near the preimage of the tip
        for (k, want) in [(2, 2.54143025614615), (4, 3.82531833715297), (8, 5.78726091324158)] {
            let x = PlanePoint::new(-1.0 + 10f64.powi(-k), 0.0);
            assert!(rel(distortion_k_chain(x, &chain).unwrap().k, want) < 1e-7);
        }
        let only_f1 = MapChain::with_stages(params, &[Stage::F1]).unwrap();
        assert_eq!(distortion_k_chain(PlanePoint::new(0.3, 0.2), &only_f1).unwrap().k, 1.0);
    }

    #[test]
    fn conformal_stages_do_not_change_distortion() {
        let params = ProfileParams::default();
        let full = MapChain::new(params);
        let without_f3 = MapChain::with_stages(params, &[Stage::F1, Stage::F2]).unwrap();
        let bare = MapChain::with_stages(params, &[Stage::F2]).unwrap();
        for x in crate::sampling::halton_disk(200, 0.99) {
            let a = distortion_k_chain(x, &full).unwrap().k;
            let b = distortion_k_chain(x, &without_f3).unwrap().k;
            let c = distortion_k_chain(mobius_f1(x), &bare).unwrap().k;
            assert!((a - b).abs() <= 1e-9 * a && (a - c).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn blow_up_along_outer_axis() {
        let p = ProfileParams::default();
        let ks: Vec<f64> = [1e-4, 1e-8, 1e-16, 1e-32]
            .iter()
            .map(|&r| distortion_k(&jacobian_f2_analytic(&PolarPoint::new(r, PI), &p).unwrap()).k)
            .collect();
        assert!(ks.windows(2).all(|w| w[0] <= w[1]));
    }
}
