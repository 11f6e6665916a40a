//! Exponential and power cusp domains, boundary arcs near the cusp tip and
//! their diameters.

use serde::Serialize;

use crate::error::{CuspError, Result};
use crate::maps::{mobius_f3, MapChain, Stage};
use crate::point::PlanePoint;
use crate::profile::eval_g;

/// Smallest `x1` used when sampling the cusp boundary.
pub const TIP_FLOOR: f64 = 1e-300;

/// `{0 < x1 < 1, |x2| < e^{-1/x1}} ∪ B((2, 0), sqrt(1 + e^{-2}))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpCuspDomain {
    pub center: PlanePoint,
    pub radius: f64,
}

impl Default for ExpCuspDomain {
    fn default() -> Self {
        Self { center: PlanePoint::new(2.0, 0.0), radius: (1.0 + (-2.0f64).exp()).sqrt() }
    }
}

/// `{0 < x1 < 1, |x2| < x1^{1+s}} ∪ B((s + 2, 0), sqrt((s + 1)^2 + 1))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerCuspDomain {
    pub s: f64,
    pub center: PlanePoint,
    pub radius: f64,
}

impl PowerCuspDomain {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CuspError::Domain(format!("cusp exponent must be positive, got {s}")));
        }
        Ok(Self { s, center: PlanePoint::new(s + 2.0, 0.0), radius: ((s + 1.0) * (s + 1.0) + 1.0).sqrt() })
    }
}

pub fn contains_exp(p: PlanePoint, d: &ExpCuspDomain) -> bool {
    if p.at_infinity {
        return false;
    }
    let strip = p.x1 > 0.0 && p.x1 < 1.0 && p.x2.abs() < (-1.0 / p.x1).exp();
    strip || p.distance(d.center) < d.radius
}

pub fn contains_power(p: PlanePoint, d: &PowerCuspDomain) -> bool {
    if p.at_infinity {
        return false;
    }
    let strip = p.x1 > 0.0 && p.x1 < 1.0 && p.x2.abs() < p.x1.powf(1.0 + d.s);
    strip || p.distance(d.center) < d.radius
}

/// Boundary points within distance `t` of the cusp tip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryArc {
    pub t: f64,
    /// Upper branch (increasing `x1`) followed by the lower branch.
    pub samples: Vec<PlanePoint>,
}

fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) < 0 <= f(hi); stops when the bracket is two adjacent doubles
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest `x1` with `x1^2 + e^{-2/x1} <= t^2`.
pub fn exp_arc_x1_max(t: f64) -> f64 {
    bisect_increasing(|x| x * x + (-2.0 / x).exp() - t * t, TIP_FLOOR, t)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| if k + 1 == n { hi } else { (a + (b - a) * k as f64 / (n - 1) as f64).exp() }).collect()
}

fn two_branches(xs: Vec<f64>, width: impl Fn(f64) -> f64) -> Vec<PlanePoint> {
    let upper = xs.iter().map(|&x| PlanePoint::new(x, width(x)));
    let lower = xs.iter().map(|&x| PlanePoint::new(x, -width(x)));
    upper.chain(lower).collect()
}

/// `E'_t`: `n` samples per branch of `{x in boundary(Omega) : |x| <= t}`.
///
/// Branch points below the underflow floor of `e^{-1/x1}` come out as `(x1, 0)`.
pub fn boundary_arc(t: f64, n: usize, _d: &ExpCuspDomain) -> Result<BoundaryArc> {
    if !(t > 0.0 && t < 0.5) {
        return Err(CuspError::Domain(format!("arc radius {t} outside (0, 1/2)")));
    }
    if n < 2 {
        return Err(CuspError::Domain(format!("need at least 2 samples per branch, got {n}")));
    }
    let x_max = exp_arc_x1_max(t);
    let samples = two_branches(log_grid(TIP_FLOOR, x_max, n), |x| (-1.0 / x).exp());
    Ok(BoundaryArc { t, samples })
}

/// Exact maximum pairwise distance over the samples.
pub fn arc_diameter(arc: &BoundaryArc) -> f64 {
    let s = &arc.samples;
    let mut best: f64 = 0.0;
    for (i, a) in s.iter().enumerate() {
        for b in &s[i + 1..] {
            best = best.max(a.distance(*b));
        }
    }
    best
}

/// A length that may be far below the double range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLength {
    /// `exp(log_value)`; zero when it underflows.
    pub value: f64,
    pub log_value: f64,
}

impl LogLength {
    pub fn from_log(log_value: f64) -> Self {
        Self { value: log_value.exp(), log_value }
    }
}

fn image_tip_point(x1: f64) -> PlanePoint {
    mobius_f3(PlanePoint::new(x1, (-1.0 / x1).exp()))
}

/// Cusp-boundary abscissa `x1` at which the image arc of the full chain reaches
/// distance `t` from the tip.
pub fn image_arc_x1_max(t: f64, chain: &MapChain) -> Result<f64> {
    if !(t > 0.0 && t < 0.5) {
        return Err(CuspError::Domain(format!("arc radius {t} outside (0, 1/2)")));
    }
    if chain.stages() != [Stage::F1, Stage::F2, Stage::F3] {
        return Err(CuspError::Domain("image arcs need the full F1, F2, F3 chain".into()));
    }
    let tip_depth = eval_g(1.0, chain.params())?;
    if image_tip_point(tip_depth).norm() < t {
        return Err(CuspError::Domain(format!("arc radius {t} reaches past the cusp section of the image boundary")));
    }
    Ok(bisect_increasing(|x| image_tip_point(x).norm() - t, TIP_FLOOR, tip_depth))
}

/// Arc of the boundary of the image domain `f(B)` within distance `t` of the tip.
pub fn image_boundary_arc(t: f64, n: usize, chain: &MapChain) -> Result<BoundaryArc> {
    if n < 2 {
        return Err(CuspError::Domain(format!("need at least 2 samples per branch, got {n}")));
    }
    let x_max = image_arc_x1_max(t, chain)?;
    let upper: Vec<f64> = log_grid(TIP_FLOOR, x_max, n);
    let mut samples: Vec<PlanePoint> = upper.iter().map(|&x| image_tip_point(x)).collect();
    samples.extend(upper.iter().map(|&x| {
        let p = image_tip_point(x);
        PlanePoint::new(p.x1, -p.x2)
    }));
    Ok(BoundaryArc { t, samples })
}

/// `log r` of the source radius of the outermost point of `E_t`.
pub fn preimage_arc_log_radius(t: f64, chain: &MapChain) -> Result<f64> {
    let x_max = image_arc_x1_max(t, chain)?;
    chain.params().log_radius_for_depth(x_max)
}

/// Diameter of `E_t = f^{-1}(E'_t)` on the unit circle.
///
/// When the source radii are representable every sample of the image arc is
/// pulled back through the chain; samples whose preimage lies closer to `-1`
/// than the double range resolves collapse onto `-1`. When even the outermost
/// preimage underflows, the arc `{-e^{i a} : |a| <= 2 atan r}` gives
/// `diam = 2 sin(2 atan r)`, evaluated in log form.
pub fn preimage_arc_diameter(t: f64, chain: &MapChain, n: usize) -> Result<LogLength> {
    let log_r = preimage_arc_log_radius(t, chain)?;
    if log_r < f64::MIN_POSITIVE.ln() + 8.0 {
        return Ok(LogLength::from_log(std::f64::consts::LN_2 * 2.0 + log_r));
    }
    let arc = image_boundary_arc(t, n, chain)?;
    let tip = PlanePoint::new(-1.0, 0.0);
    let samples = arc
        .samples
        .iter()
        .map(|&p| match chain.apply_inverse(p) {
            Ok(x) => Ok(x),
            Err(CuspError::Range(_)) => Ok(tip),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let d = arc_diameter(&BoundaryArc { t, samples });
    Ok(LogLength { value: d, log_value: d.ln() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProfileParams;
    use std::f64::consts::E;

    #[test]
    fn exp_membership_examples() {
        let d = ExpCuspDomain::default();
        assert!((d.radius * d.radius - (1.0 + E.powi(-2))).abs() < 1e-15);
        assert!(contains_exp(PlanePoint::new(0.5, 0.0), &d));
        assert!(!contains_exp(PlanePoint::new(0.5, E.powi(-2)), &d));
        assert!(contains_exp(PlanePoint::new(3.0, 0.0), &d));
        assert!(!contains_exp(PlanePoint::INFINITY, &d));
    }

    #[test]
    fn power_membership_examples() {
        let d = PowerCuspDomain::new(1.0).unwrap();
        assert!(contains_power(PlanePoint::new(0.5, 0.0), &d));
        assert!(!contains_power(PlanePoint::new(0.5, 0.25), &d));
        assert!(contains_power(PlanePoint::new(4.0, 0.0), &d));
        assert!(PowerCuspDomain::new(0.0).is_err());
    }

    #[test]
    fn arc_samples_on_boundary() {
        let d = ExpCuspDomain::default();
        let arc = boundary_arc(0.1, 64, &d).unwrap();
        assert_eq!(arc.samples.len(), 128);
        for p in &arc.samples {
            assert!(p.norm() <= 0.1);
            assert!((p.x2.abs() - (-1.0 / p.x1).exp()).abs() <= 1e-12);
            assert!(!contains_exp(*p, &d));
            if p.x1 < 1.0 {
                let inside = PlanePoint::new(p.x1, p.x2 * (1.0 - 1e-9));
                assert!(p.x2 == 0.0 || contains_exp(inside, &d));
            }
        }
        for branch in arc.samples.chunks(64) {
            assert!(branch.windows(2).all(|w| w[0].x1 < w[1].x1));
        }
        assert!(boundary_arc(0.6, 10, &d).is_err());
        assert!(boundary_arc(0.1, 1, &d).is_err());
    }

    #[test]
    fn arc_endpoint_matches_oracle() {
        // mpmath findroot of x^2 + e^{-2/x} = t^2
        assert!((exp_arc_x1_max(0.1) - 0.099999989694252598474).abs() < 1e-15);
        assert!((exp_arc_x1_max(0.3) - 0.29796639577158206482).abs() < 1e-15);
        for t in [0.05, 0.02, 0.01] {
            let gap = (t - exp_arc_x1_max(t)) / t;
            assert!(gap <= (-2.0 / t).exp() / (t * t) + 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn diameter_examples() {
        let two = BoundaryArc { t: 1.0, samples: vec![PlanePoint::new(0.0, 0.0), PlanePoint::new(3.0, 4.0)] };
        assert_eq!(arc_diameter(&two), 5.0);
        let d = ExpCuspDomain::default();
        let a = arc_diameter(&boundary_arc(0.1, 64, &d).unwrap());
        assert!((a - exp_arc_x1_max(0.1)).abs() < 1e-4);
        let ds: Vec<f64> = [0.02, 0.05, 0.1].iter().map(|&t| arc_diameter(&boundary_arc(t, 64, &d).unwrap())).collect();
        assert!(ds.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diameter_over_radius_tends_to_one() {
        let d = ExpCuspDomain::default();
        for k in 4..=20 {
            let t = 2f64.powi(-k);
            let ratio = arc_diameter(&boundary_arc(t, 32, &d).unwrap()) / t;
            assert!(ratio <= 1.0 + 1e-15);
            if k >= 10 {
                assert!(ratio >= 1.0 - 1e-6, "k = {k}: {ratio}");
            }
        }
    }

    #[test]
    fn preimage_diameter_representable_case() {
        let chain = MapChain::new(ProfileParams::default());
        let d = preimage_arc_diameter(0.25, &chain, 64).unwrap();
        // mpmath: log(2 sin(2 atan r_t)) for t = 0.25
        assert!((d.log_value - (-16.735538849262688301)).abs() < 1e-6);
        assert!(d.value > 0.0 && d.value <= 2.0);
    }

    #[test]
    fn preimage_diameter_underflow_case() {
        let chain = MapChain::new(ProfileParams::default());
        let a = preimage_arc_diameter(0.05, &chain, 64).unwrap();
        let b = preimage_arc_diameter(0.05, &chain, 64).unwrap();
        assert_eq!(a, b);
        // mpmath value of log diam E_t
        assert!(((a.log_value - (-178482296.80432435302)) / a.log_value).abs() < 1e-9);
        let ds: Vec<f64> =
            [0.05, 0.1, 0.2, 0.25].iter().map(|&t| preimage_arc_diameter(t, &chain, 64).unwrap().log_value).collect();
        assert!(ds.windows(2).all(|w| w[0] <= w[1]));
    }
}
