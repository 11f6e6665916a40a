use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

/// Point of the extended plane. `at_infinity` stands for the point at infinity
/// of the Riemann sphere, in which case the coordinates are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanePoint {
    pub x1: f64,
    pub x2: f64,
    pub at_infinity: bool,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x1: 0.0, x2: 0.0, at_infinity: false };
    pub const INFINITY: PlanePoint = PlanePoint { x1: 0.0, x2: 0.0, at_infinity: true };

    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2, at_infinity: false }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            Self::new(z.re, z.im)
        } else {
            Self::INFINITY
        }
    }

    /// `None` for the point at infinity.
    pub fn to_complex(self) -> Option<Complex64> {
        (!self.at_infinity).then(|| Complex64::new(self.x1, self.x2))
    }

    pub fn norm(self) -> f64 {
        if self.at_infinity {
            f64::INFINITY
        } else {
            self.x1.hypot(self.x2)
        }
    }

    pub fn distance(self, other: PlanePoint) -> f64 {
        match (self.at_infinity, other.at_infinity) {
            (false, false) => (self.x1 - other.x1).hypot(self.x2 - other.x2),
            (true, true) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

/// Which linear angle map of the cusp construction applies to a polar point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sector {
    /// `theta` in `(-pi/2, pi/2)`: mapped into the cusp.
    Inner,
    /// `theta` in `[pi/2, 3pi/2]`, with `3pi/2` stored as `-pi/2`.
    Outer,
}

/// Polar point with `theta` normalised to `[-pi/2, 3pi/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
    pub sector: Sector,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Self {
        let theta = normalize_angle(theta);
        let sector = if theta > -FRAC_PI_2 && theta < FRAC_PI_2 { Sector::Inner } else { Sector::Outer };
        Self { r, theta, sector }
    }

    pub fn from_plane(p: PlanePoint) -> Self {
        Self::new(p.x1.hypot(p.x2), p.x2.atan2(p.x1))
    }

    pub fn to_plane(self) -> PlanePoint {
        PlanePoint::new(self.r * self.theta.cos(), self.r * self.theta.sin())
    }

    /// Angle used by the outer linear map: `[pi/2, 3pi/2]`, so the seam
    /// `-pi/2` is read as `3pi/2`.
    pub fn outer_theta(self) -> f64 {
        if self.theta < FRAC_PI_2 {
            self.theta + 2.0 * PI
        } else {
            self.theta
        }
    }
}

/// Reduces an angle to `[-pi/2, 3pi/2)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = (theta + FRAC_PI_2).rem_euclid(two_pi) - FRAC_PI_2;
    if t >= 1.5 * PI {
        t -= two_pi;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_assignment_on_seams() {
        assert_eq!(PolarPoint::new(1.0, 0.0).sector, Sector::Inner);
        assert_eq!(PolarPoint::new(1.0, FRAC_PI_2).sector, Sector::Outer);
        assert_eq!(PolarPoint::new(1.0, -FRAC_PI_2).sector, Sector::Outer);
        let p = PolarPoint::new(1.0, 1.5 * PI);
        assert_eq!(p.sector, Sector::Outer);
        assert!((p.theta + FRAC_PI_2).abs() < 1e-15);
        assert!((p.outer_theta() - 1.5 * PI).abs() < 1e-15);
        assert_eq!(PolarPoint::new(1.0, PI).sector, Sector::Outer);
    }

    #[test]
    fn normalisation_range() {
        for k in -50..50 {
            let t = normalize_angle(k as f64 * 0.37);
            assert!((-FRAC_PI_2..1.5 * PI).contains(&t));
        }
        let p = PolarPoint::from_plane(PlanePoint::new(-1.0, -1e-300));
        assert_eq!(p.sector, Sector::Outer);
        assert!((p.theta - PI).abs() < 1e-15);
        let q = PolarPoint::from_plane(PlanePoint::new(-1e-3, -1.0));
        assert!(q.theta > PI && q.theta < 1.5 * PI);
    }
}
