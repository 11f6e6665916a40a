//! The homeomorphism `f = f3 . f2 . f1` taking the unit disk onto a domain
//! with an exponential cusp at the origin.
//!
//! * `f1(z) = (z + 1) / (1 - z)` sends the disk onto the right half plane
//!   with `-1` going to the origin.
//! * `f2` is the polar cusp map: radius `r -> G(r)`, and the angle is
//!   squeezed linearly so that the inner sector `(-pi/2, pi/2)` fills the
//!   cusp `|x2| < e^{-1/x1}` and the outer sector covers the rest of the
//!   circle. Outside the closed unit disk `f2(x) = |x| h(x / |x|)`.
//! * `f3(z) = z / (z + 1)` bends the right half plane onto `B((1/2, 0), 1/2)`.
//!
//! No bi-Lipschitz correction is applied after `f3`, so the image of the
//! disk is `f3(f2(f1(B)))` rather than the model domain itself.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{CuspError, Result};
use crate::point::{PlanePoint, PolarPoint, Sector};
use crate::profile::{ProfileParams, ScaledProfile};

/// Angle snapping window for points that lie on a seam ray of the image.
const SEAM_SNAP: f64 = 1e-14;
const MAX_BISECTION: usize = 200;

fn mobius(z: PlanePoint, a: f64, b: f64, c: f64, d: f64) -> PlanePoint {
    // (a z + b) / (c z + d) with real coefficients
    match z.to_complex() {
        None => {
            if c == 0.0 {
                PlanePoint::INFINITY
            } else {
                PlanePoint::new(a / c, 0.0)
            }
        }
        Some(z) => {
            let den = z * c + d;
            if den.norm() == 0.0 {
                PlanePoint::INFINITY
            } else {
                PlanePoint::from_complex((z * a + b) / den)
            }
        }
    }
}

/// `f1(z) = (z + 1) / (1 - z)`.
pub fn mobius_f1(z: PlanePoint) -> PlanePoint {
    mobius(z, 1.0, 1.0, -1.0, 1.0)
}

/// `f1^{-1}(w) = (w - 1) / (w + 1)`.
pub fn mobius_f1_inv(w: PlanePoint) -> PlanePoint {
    mobius(w, 1.0, -1.0, 1.0, 1.0)
}

/// `f3(z) = z / (z + 1)`.
pub fn mobius_f3(z: PlanePoint) -> PlanePoint {
    mobius(z, 1.0, 0.0, 1.0, 1.0)
}

/// `f3^{-1}(w) = w / (1 - w)`.
pub fn mobius_f3_inv(w: PlanePoint) -> PlanePoint {
    mobius(w, 1.0, 0.0, -1.0, 1.0)
}

/// Image angle of the polar point under the linear angle maps, given the
/// half-opening `atan H(r)` of the cusp at that radius.
pub(crate) fn image_angle(p: &PolarPoint, atan_h: f64) -> f64 {
    match p.sector {
        Sector::Inner => 2.0 * p.theta / PI * atan_h,
        Sector::Outer => {
            let t = p.outer_theta();
            2.0 * t - PI + (2.0 - 2.0 * t / PI) * atan_h
        }
    }
}

fn check_cusp_range(params: &ProfileParams) -> Result<()> {
    if params.r_max() < 1.0 {
        return Err(CuspError::Domain(format!("the cusp map needs the profile on (0, 1], r_max = {}", params.r_max())));
    }
    Ok(())
}

/// Polar cusp map `f2`.
pub fn cusp_map_f2(p: &PolarPoint, params: &ProfileParams) -> Result<PlanePoint> {
    check_cusp_range(params)?;
    if !(p.r >= 0.0) || !p.theta.is_finite() {
        return Err(CuspError::Domain(format!("invalid polar point {p:?}")));
    }
    if p.r == 0.0 {
        return Ok(PlanePoint::ORIGIN);
    }
    if p.r.is_infinite() {
        return Ok(PlanePoint::INFINITY);
    }
    let (radius, atan_h) = if p.r <= 1.0 {
        let s = params.eval_scaled(p.r.ln())?;
        (s.image_radius, s.atan_aspect)
    } else {
        let s = params.eval_scaled(0.0)?;
        (p.r * s.image_radius, s.atan_aspect)
    };
    let ang = image_angle(p, atan_h);
    Ok(PlanePoint::new(radius * ang.cos(), radius * ang.sin()))
}

/// `log r` of the source radius with `G(r) = rho` inside the unit disk, by
/// bisection on the increasing function `G`.
pub fn invert_image_radius(rho: f64, params: &ProfileParams) -> Result<f64> {
    let radius = |log_r: f64| -> Result<f64> { Ok(params.eval_scaled(log_r)?.image_radius) };
    let g1 = radius(0.0)?;
    if !(rho > 0.0 && rho <= g1) {
        return Err(CuspError::Range(format!("image radius {rho} outside (0, {g1}]")));
    }
    if rho == g1 {
        return Ok(0.0);
    }
    let mut lo = f64::MIN_POSITIVE.ln();
    let mut hi = 0.0;
    if radius(lo)? > rho {
        return Err(CuspError::Range(format!("image radius {rho} needs a source radius below the double range")));
    }
    let mut iterations = 0;
    // coarse stage in log r, then plain bisection in r down to adjacent doubles
    while hi - lo > 1e-3 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if radius(mid)? < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut a, mut b) = (lo.exp(), hi.exp());
    loop {
        iterations += 1;
        if iterations > MAX_BISECTION {
            return Err(CuspError::Convergence { what: "image-radius bisection", iterations });
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if radius(mid.ln())? < rho {
            a = mid;
        } else {
            b = mid;
        }
    }
    let pick = if (radius(a.ln())? - rho).abs() <= (radius(b.ln())? - rho).abs() { a } else { b };
    Ok(pick.ln())
}

/// Inverse of the polar cusp map.
pub fn cusp_map_f2_inv(w: PlanePoint, params: &ProfileParams) -> Result<PolarPoint> {
    check_cusp_range(params)?;
    if w.at_infinity {
        return Ok(PolarPoint::new(f64::INFINITY, 0.0));
    }
    let rho = w.norm();
    if rho == 0.0 {
        return Ok(PolarPoint::new(0.0, 0.0));
    }
    if !rho.is_finite() {
        return Err(CuspError::Range(format!("non-finite point {w:?}")));
    }
    let unit: ScaledProfile = params.eval_scaled(0.0)?;
    let (r, atan_h) = if rho > unit.image_radius {
        (rho / unit.image_radius, unit.atan_aspect)
    } else {
        let log_r = invert_image_radius(rho, params)?;
        (log_r.exp(), params.eval_scaled(log_r)?.atan_aspect)
    };
    let alpha = w.x2.atan2(w.x1);
    if (alpha.abs() - atan_h).abs() <= SEAM_SNAP {
        let theta = if alpha > 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
        return Ok(PolarPoint::new(r, theta));
    }
    if alpha.abs() < atan_h {
        return Ok(PolarPoint::new(r, alpha * PI / (2.0 * atan_h)));
    }
    let a = if alpha >= atan_h { alpha } else { alpha + 2.0 * PI };
    let theta = (a + PI - 2.0 * atan_h) / (2.0 - 2.0 * atan_h / PI);
    Ok(PolarPoint::new(r, theta))
}

/// Stages of the map chain, applied in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Stage {
    F1,
    F2,
    F3,
}

impl std::str::FromStr for Stage {
    type Err = CuspError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Ok(Stage::F1),
            "f2" => Ok(Stage::F2),
            "f3" => Ok(Stage::F3),
            other => Err(CuspError::Domain(format!("unknown map stage '{other}'"))),
        }
    }
}

/// The composed map `f3 . f2 . f1` (or a sub-chain of it).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapChain {
    params: ProfileParams,
    stages: Vec<Stage>,
}

impl MapChain {
    pub fn new(params: ProfileParams) -> Self {
        Self { params, stages: vec![Stage::F1, Stage::F2, Stage::F3] }
    }

    /// A sub-chain; stages must be nonempty, distinct and in the order F1, F2, F3.
    pub fn with_stages(params: ProfileParams, stages: &[Stage]) -> Result<Self> {
        if stages.is_empty() {
            return Err(CuspError::Domain("empty map chain".into()));
        }
        if stages.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CuspError::Domain(format!("stages {stages:?} are not in the order F1, F2, F3")));
        }
        Ok(Self { params, stages: stages.to_vec() })
    }

    pub fn params(&self) -> &ProfileParams {
        &self.params
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn has(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    pub fn apply(&self, x: PlanePoint) -> Result<PlanePoint> {
        self.stages.iter().try_fold(x, |z, stage| match stage {
            Stage::F1 => Ok(mobius_f1(z)),
            Stage::F2 => {
                if z.at_infinity {
                    Ok(PlanePoint::INFINITY)
                } else {
                    cusp_map_f2(&PolarPoint::from_plane(z), &self.params)
                }
            }
            Stage::F3 => Ok(mobius_f3(z)),
        })
    }

    pub fn apply_inverse(&self, w: PlanePoint) -> Result<PlanePoint> {
        self.stages.iter().rev().try_fold(w, |z, stage| match stage {
            Stage::F1 => Ok(mobius_f1_inv(z)),
            Stage::F2 => {
                let p = cusp_map_f2_inv(z, &self.params)?;
                if p.r.is_infinite() {
                    Ok(PlanePoint::INFINITY)
                } else {
                    Ok(p.to_plane())
                }
            }
            Stage::F3 => Ok(mobius_f3_inv(z)),
        })
    }
}

/// One point of the traced image of the cusp boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryTracePoint {
    pub t: f64,
    pub image: PlanePoint,
    /// `|Re f3(t + i e^{-1/t}) - t|`
    pub residual: f64,
}

/// Images under `f3` of the upper cusp boundary points `t + i e^{-1/t}`.
pub fn boundary_image_trace(t_values: &[f64]) -> Vec<BoundaryTracePoint> {
    t_values
        .iter()
        .map(|&t| {
            let z = PlanePoint::new(t, (-1.0 / t).exp());
            let image = mobius_f3(z);
            BoundaryTracePoint { t, image, residual: (image.x1 - t).abs() }
        })
        .collect()
}

/// Least-squares constant `C` in `residual ~ C t^2` over the trace points
/// with `t` inside `[t_lo, t_hi]`.
pub fn fit_quadratic_residual(trace: &[BoundaryTracePoint], t_lo: f64, t_hi: f64) -> Option<f64> {
    let (num, den) = trace.iter().filter(|p| p.t >= t_lo && p.t <= t_hi).fold((0.0, 0.0), |(n, d), p| {
        let t2 = p.t * p.t;
        (n + p.residual * t2, d + t2 * t2)
    });
    (den > 0.0).then(|| num / den)
}
