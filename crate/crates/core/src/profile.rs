//! Radial profile of the cusp map.
//!
//! The cusp is generated by the depth function `g(r) = 1 / log log(c_g / r)`,
//! the aspect `H(r) = e^{-1/g(r)} / g(r)` and the image radius
//! `G(r) = g(r) sqrt(1 + H(r)^2)`. A point at source radius `r` on the
//! seam ray lands on `(g(r), e^{-1/g(r)})`, i.e. on the cusp boundary
//! `|x2| = e^{-1/x1}`.
//!
//! Everything is evaluated through `L1 = log(c_g / r)` and `L2 = log L1`,
//! which gives the exact simplifications `g = 1/L2` and `H = L2 / L1` and
//! keeps the evaluation finite for radii far below the smallest positive
//! double (the radius is then carried as its logarithm).

use serde::Serialize;

use crate::error::{CuspError, Result};

/// Configuration of the depth function `g(r) = 1 / log log(c_g / r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileParams {
    c_g: f64,
    r_max: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self { c_g: 16.0, r_max: 1.0 }
    }
}

impl ProfileParams {
    /// Validates `c_g > 0`, `0 < r_max <= 1` and `log log(c_g / r_max) > 0`,
    /// then checks that `g` and `G` increase along the dyadic radii
    /// `r_max * 2^-k` down to far below the double-precision range.
    pub fn new(c_g: f64, r_max: f64) -> Result<Self> {
        if !(c_g.is_finite() && c_g > 0.0) {
            return Err(CuspError::Domain(format!("c_g must be positive, got {c_g}")));
        }
        if !(r_max > 0.0 && r_max <= 1.0) {
            return Err(CuspError::Domain(format!("r_max must lie in (0, 1], got {r_max}")));
        }
        let params = Self { c_g, r_max };
        let l1 = c_g.ln() - r_max.ln();
        if l1 <= 1.0 {
            return Err(CuspError::Domain(format!("log log(c_g / r_max) = {} is not positive", l1.ln())));
        }
        let mut prev: Option<ScaledProfile> = None;
        for k in 0..=1200 {
            let cur = params.eval_scaled(r_max.ln() - k as f64 * std::f64::consts::LN_2)?;
            if cur.r_image_radius_prime <= 0.0 || cur.r_depth_prime <= 0.0 {
                return Err(CuspError::Domain(format!("profile is not increasing at log r = {}", cur.log_r)));
            }
            if let Some(p) = prev {
                if !(cur.depth < p.depth && cur.image_radius < p.image_radius) {
                    return Err(CuspError::Domain(format!("profile is not increasing at log r = {}", cur.log_r)));
                }
            }
            prev = Some(cur);
        }
        Ok(params)
    }

    pub fn c_g(&self) -> f64 {
        self.c_g
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Evaluates the profile at `log r`; derivatives are returned multiplied by `r`.
    pub fn eval_scaled(&self, log_r: f64) -> Result<ScaledProfile> {
        if log_r.is_nan() || log_r > self.r_max.ln() {
            return Err(CuspError::Domain(format!("log r = {log_r} outside (-inf, log r_max]")));
        }
        let l1 = self.c_g.ln() - log_r;
        let l2 = l1.ln();
        if !(l2 > 0.0) || !l2.is_finite() {
            return Err(CuspError::Domain(format!("log log(c_g / r) = {l2} is not a positive finite number")));
        }
        let depth = 1.0 / l2;
        let aspect = l2 / l1;
        let q = (1.0 + aspect * aspect).sqrt();
        let r_depth_prime = 1.0 / (l1 * l2 * l2);
        let r_aspect_prime = (l2 - 1.0) / (l1 * l1);
        let r_image_radius_prime = (r_depth_prime * (1.0 + aspect * aspect) + depth * aspect * r_aspect_prime) / q;
        Ok(ScaledProfile {
            log_r,
            depth,
            aspect,
            image_radius: depth * q,
            r_depth_prime,
            r_aspect_prime,
            r_image_radius_prime,
            atan_aspect: aspect.atan(),
        })
    }

    /// `log r` of the radius where `g` takes the value `depth`.
    pub fn log_radius_for_depth(&self, depth: f64) -> Result<f64> {
        let top = eval_g(self.r_max, self)?;
        if !(depth > 0.0 && depth <= top) {
            return Err(CuspError::Domain(format!("depth {depth} outside (0, {top}]")));
        }
        Ok(self.c_g.ln() - (1.0 / depth).exp())
    }
}

/// Profile values at one radius, with derivatives scaled by `r`.
///
/// The scaled derivatives `r g'`, `r H'`, `r G'` depend on `r` only through
/// `log r`, so they stay finite where `r` itself underflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledProfile {
    pub log_r: f64,
    pub depth: f64,
    pub aspect: f64,
    pub image_radius: f64,
    pub r_depth_prime: f64,
    pub r_aspect_prime: f64,
    pub r_image_radius_prime: f64,
    pub atan_aspect: f64,
}

/// Profile values `g, H, G` and their first derivatives at a radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileEval {
    pub r: f64,
    /// `g(r)`
    pub depth: f64,
    pub depth_prime: f64,
    /// `H(r)`
    pub aspect: f64,
    pub aspect_prime: f64,
    /// `G(r)`
    pub image_radius: f64,
    pub image_radius_prime: f64,
    /// `arctan H(r)`, the half-opening angle of the cusp image at radius `r`.
    pub atan_aspect: f64,
}

fn check_radius(r: f64, params: &ProfileParams) -> Result<()> {
    if !(r > 0.0 && r <= params.r_max) {
        return Err(CuspError::Domain(format!("radius {r} outside (0, {}]", params.r_max)));
    }
    Ok(())
}

/// Depth function `g(r) = 1 / log log(c_g / r)`.
pub fn eval_g(r: f64, params: &ProfileParams) -> Result<f64> {
    check_radius(r, params)?;
    let l2 = (params.c_g.ln() - r.ln()).ln();
    if !(l2 > 0.0) {
        return Err(CuspError::Domain(format!("log log(c_g / r) = {l2} is not positive at r = {r}")));
    }
    Ok(1.0 / l2)
}

pub fn eval_profile(r: f64, params: &ProfileParams) -> Result<ProfileEval> {
    check_radius(r, params)?;
    let s = params.eval_scaled(r.ln())?;
    Ok(ProfileEval {
        r,
        depth: s.depth,
        depth_prime: s.r_depth_prime / r,
        aspect: s.aspect,
        aspect_prime: s.r_aspect_prime / r,
        image_radius: s.image_radius,
        image_radius_prime: s.r_image_radius_prime / r,
        atan_aspect: s.atan_aspect,
    })
}

/// Inverse of the depth function: `r = c_g exp(-exp(1/g))`.
pub fn eval_g_inverse(gval: f64, params: &ProfileParams) -> Result<f64> {
    Ok(params.log_radius_for_depth(gval)?.exp())
}
