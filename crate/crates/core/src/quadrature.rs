//! Annular Gauss–Legendre quadrature around the singular point of the
//! distortion field and the convergence classifier for partial integrals.
//!
//! Integration runs in the polar coordinates of the `f2` domain, where the
//! distinguished source point (preimage of the cusp tip) sits at `r = 0`.
//! Annuli are integrated in `u = log r`, so `r dr dtheta = e^{2u} du dtheta`,
//! and every sum is accumulated as a logarithm.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;

use crate::distortion::distortion_k_log;
use crate::error::{CuspError, Result};
use crate::maps::{MapChain, Stage};
use crate::point::PolarPoint;
use crate::profile::ProfileParams;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pairs: Vec<(f64, f64)>,
}

impl GaussRule {
    pub fn new(n: usize) -> Result<Self> {
        let n = NonZeroUsize::new(n).ok_or_else(|| CuspError::Domain("zero Gauss nodes".into()))?;
        Ok(Self { pairs: GaussLegendre::new(n).as_node_weight_pairs().to_vec() })
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `log(sum exp(x_i))` with the max-shift rule; `-inf` for an empty or
/// all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Node counts of the tensor rule on one annulus. The angular count is per
/// sector; the two sectors are integrated separately because the field jumps
/// across the seam rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Nodes {
    pub radial: usize,
    pub angular: usize,
}

impl Default for Nodes {
    fn default() -> Self {
        Self { radial: 8, angular: 16 }
    }
}

struct TensorRule {
    radial: GaussRule,
    angular: GaussRule,
}

const SECTORS: [(f64, f64); 2] = [(-FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, 1.5 * PI)];

impl TensorRule {
    fn new(nodes: Nodes) -> Result<Self> {
        if nodes.radial < 2 || nodes.angular < 2 {
            return Err(CuspError::Domain(format!("node counts must be at least 2, got {nodes:?}")));
        }
        Ok(Self { radial: GaussRule::new(nodes.radial)?, angular: GaussRule::new(nodes.angular)? })
    }

    /// `log` of the integral of `exp(log_field)` over `u in [u_lo, u_hi]`
    /// against `e^{2u} du dtheta`.
    fn log_integral<F>(&self, u_lo: f64, u_hi: f64, log_field: &F) -> Result<f64>
    where
        F: Fn(f64, f64) -> Result<f64>,
    {
        let mut terms = Vec::with_capacity(2 * self.radial.len() * self.angular.len());
        for (u, wu) in self.radial.on(u_lo, u_hi) {
            for &(a, b) in &SECTORS {
                for (theta, wt) in self.angular.on(a, b) {
                    let v = log_field(u, theta)?;
                    if v.is_nan() || v == f64::INFINITY {
                        return Err(CuspError::Node { r: u.exp(), theta });
                    }
                    terms.push(v + 2.0 * u + (wu * wt).ln());
                }
            }
        }
        Ok(log_sum_exp(&terms))
    }
}

/// Tensor Gauss value of `∫∫ field r dr dtheta` over `r_in < r < r_out`.
pub fn integrate_annulus<F>(field: F, r_in: f64, r_out: f64, nodes: Nodes) -> Result<f64>
where
    F: Fn(PolarPoint) -> f64,
{
    if !(r_in > 0.0 && r_in < r_out && r_out.is_finite()) {
        return Err(CuspError::Domain(format!("invalid annulus ({r_in}, {r_out})")));
    }
    let rule = TensorRule::new(nodes)?;
    let mut total = 0.0;
    for (u, wu) in rule.radial.on(r_in.ln(), r_out.ln()) {
        let r = u.exp();
        for &(a, b) in &SECTORS {
            for (theta, wt) in rule.angular.on(a, b) {
                let v = field(PolarPoint::new(r, theta));
                if !v.is_finite() {
                    return Err(CuspError::Node { r, theta });
                }
                total += wu * wt * r * r * v;
            }
        }
    }
    Ok(total)
}

/// Log of the annulus integral of a positive field given through its log.
pub fn integrate_annulus_log<F>(log_field: F, log_r_in: f64, log_r_out: f64, nodes: Nodes) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if !(log_r_in < log_r_out) {
        return Err(CuspError::Domain(format!("invalid annulus (e^{log_r_in}, e^{log_r_out})")));
    }
    TensorRule::new(nodes)?.log_integral(log_r_in, log_r_out, &log_field)
}

/// Inner radii `eps_k = exp(log_eps[k])` of the partial integrals over
/// `eps_k < r < 1`; each interval `(eps_k, eps_{k-1})` is cut into
/// `ceil(annuli_per_octave * log2(eps_{k-1} / eps_k))` annuli.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnularScheme {
    pub log_eps: Vec<f64>,
    pub annuli_per_octave: usize,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl Default for AnnularScheme {
    fn default() -> Self {
        Self::dyadic(64)
    }
}

impl AnnularScheme {
    /// `eps = 2^-1, ..., 2^-k_max`.
    pub fn dyadic(k_max: u32) -> Self {
        Self {
            log_eps: (1..=k_max).map(|k| -(k as f64) * LN_2).collect(),
            annuli_per_octave: 2,
            radial_nodes: 8,
            angular_nodes: 16,
        }
    }

    /// `ln eps = -2^j` for `j = 0, ..., j_max`: radii whose logarithms double,
    /// one annulus per octave, for probing depths far below `2^-64`.
    pub fn doubling_depth(j_max: u32) -> Self {
        Self {
            log_eps: (0..=j_max).map(|j| -(2f64.powi(j as i32))).collect(),
            annuli_per_octave: 1,
            radial_nodes: 8,
            angular_nodes: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.log_eps.is_empty() {
            return Err(CuspError::Domain("empty eps list".into()));
        }
        let mut prev = 0.0;
        for &l in &self.log_eps {
            if !(l < prev) || !l.is_finite() {
                return Err(CuspError::Domain("eps list must be strictly decreasing inside (0, 1)".into()));
            }
            prev = l;
        }
        if self.annuli_per_octave == 0 || self.radial_nodes < 2 || self.angular_nodes < 2 {
            return Err(CuspError::Domain("annulus and node counts must be positive, nodes at least 2".into()));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Nodes {
        Nodes { radial: self.radial_nodes, angular: self.angular_nodes }
    }

    /// Same radii with twice the annuli and nodes.
    pub fn refined(&self) -> Self {
        Self {
            log_eps: self.log_eps.clone(),
            annuli_per_octave: 2 * self.annuli_per_octave,
            radial_nodes: 2 * self.radial_nodes,
            angular_nodes: 2 * self.angular_nodes,
        }
    }

    fn panels(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        let mut hi = 0.0;
        for (k, &lo) in self.log_eps.iter().enumerate() {
            let n = ((hi - lo) / LN_2 * self.annuli_per_octave as f64).ceil().max(1.0) as usize;
            for j in 0..n {
                let a = hi - (hi - lo) * (j + 1) as f64 / n as f64;
                let b = hi - (hi - lo) * j as f64 / n as f64;
                out.push((k, if j + 1 == n { lo } else { a }, b));
            }
            hi = lo;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Shrink and growth factors of the classifier.
pub const SHRINK_FACTOR: f64 = 0.9;
pub const GROWTH_FACTOR: f64 = 1.1;
const WINDOW: usize = 3;
const MIN_PARTIALS: usize = 6;

/// Verdict from the last three ratios of successive increments.
pub fn classify(increments: &[f64]) -> Result<Verdict> {
    let logs: Vec<f64> = increments.iter().map(|x| x.ln()).collect();
    classify_log_increments(&logs)
}

/// [`classify`] on logarithms of the increments.
pub fn classify_log_increments(log_increments: &[f64]) -> Result<Verdict> {
    let n = log_increments.len();
    if n < MIN_PARTIALS {
        return Err(CuspError::InsufficientData { needed: MIN_PARTIALS, got: n });
    }
    let ratios: Vec<f64> = log_increments[n - WINDOW - 1..].windows(2).map(|w| w[1] - w[0]).collect();
    if ratios.iter().all(|&r| r <= SHRINK_FACTOR.ln()) {
        Ok(Verdict::Convergent)
    } else if ratios.iter().all(|&r| r >= GROWTH_FACTOR.ln()) {
        Ok(Verdict::Divergent)
    } else {
        Ok(Verdict::Inconclusive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partial {
    pub log_eps: f64,
    /// `exp(log_eps)`; `0` once it underflows.
    pub eps: f64,
    pub log_value: f64,
    /// `None` when the partial is not representable as a double.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioStats {
    /// Successive increment ratios, as logarithms.
    pub log_ratios: Vec<f64>,
    pub last: f64,
    pub min_last_window: f64,
    pub max_last_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub integrand: String,
    pub exponent: f64,
    pub partials: Vec<Partial>,
    pub log_increments: Vec<f64>,
    pub ratio_stats: RatioStats,
    pub verdict: Verdict,
}

impl IntegrabilityReport {
    pub fn final_log_value(&self) -> f64 {
        self.partials.last().map_or(f64::NEG_INFINITY, |p| p.log_value)
    }
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Partial integrals of `exp(log_field)` over `eps_k < r < 1`.
pub fn partial_integrals<F>(
    integrand: &str,
    exponent: f64,
    scheme: &AnnularScheme,
    log_field: F,
) -> Result<IntegrabilityReport>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    scheme.validate()?;
    let rule = TensorRule::new(scheme.nodes())?;
    let panels = scheme.panels();
    let values =
        panels.par_iter().map(|&(_, a, b)| rule.log_integral(a, b, &log_field)).collect::<Result<Vec<f64>>>()?;
    let mut log_increments = vec![f64::NEG_INFINITY; scheme.log_eps.len()];
    for (&(k, _, _), v) in panels.iter().zip(values) {
        log_increments[k] = log_add(log_increments[k], v);
    }
    let mut partials = Vec::with_capacity(log_increments.len());
    let mut acc = f64::NEG_INFINITY;
    for (&le, &inc) in scheme.log_eps.iter().zip(&log_increments) {
        acc = log_add(acc, inc);
        if acc == f64::INFINITY {
            return Err(CuspError::Overflow);
        }
        partials.push(Partial { log_eps: le, eps: le.exp(), log_value: acc, value: finite_or_none(acc.exp()) });
    }
    let log_ratios: Vec<f64> = log_increments.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &log_ratios[log_ratios.len().saturating_sub(WINDOW)..];
    let ratio_stats = RatioStats {
        last: log_ratios.last().map_or(f64::NAN, |r| r.exp()),
        min_last_window: tail.iter().copied().fold(f64::INFINITY, f64::min).exp(),
        max_last_window: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp(),
        log_ratios,
    };
    let verdict = classify_log_increments(&log_increments)?;
    Ok(IntegrabilityReport {
        integrand: integrand.to_string(),
        exponent,
        partials,
        log_increments,
        ratio_stats,
        verdict,
    })
}

/// `log K` of the chain at `f2`-domain polar coordinates; identically zero
/// when the chain has no `F2` stage.
pub fn chain_log_k(chain: &MapChain) -> impl Fn(f64, f64) -> Result<f64> + Sync + '_ {
    let with_f2 = chain.has(Stage::F2);
    move |log_r, theta| {
        if with_f2 {
            Ok(distortion_k_log(log_r, theta, chain.params())?.ln())
        } else {
            Ok(0.0)
        }
    }
}

/// Partial integrals of `K^p`.
pub fn integral_k_pow(p: f64, scheme: &AnnularScheme, chain: &MapChain) -> Result<IntegrabilityReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(CuspError::Domain(format!("exponent p must be positive, got {p}")));
    }
    let log_k = chain_log_k(chain);
    partial_integrals("K^p", p, scheme, move |u, t| Ok(p * log_k(u, t)?))
}

/// Partial integrals of `exp(lambda K)`, accumulated in log space.
pub fn integral_exp_k(lambda: f64, scheme: &AnnularScheme, chain: &MapChain) -> Result<IntegrabilityReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CuspError::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let log_k = chain_log_k(chain);
    partial_integrals("exp(lambda K)", lambda, scheme, move |u, t| Ok(lambda * log_k(u, t)?.exp()))
}

/// Where the annular increments of `∫ exp(lambda K)` stop shrinking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceOnset {
    pub lambda: f64,
    /// `-log r` at the minimum of the angular density `e^{2u} ∫ exp(lambda K) dtheta`.
    pub depth: f64,
    /// The same depth in octaves, `-log2 r`.
    pub octaves: f64,
}

/// Locates the minimum of `D(s) = -2s + log ∫ exp(lambda K(e^{-s}, theta)) dtheta`
/// by golden-section search in `log s`. Beyond it the increments grow.
pub fn exp_divergence_onset(lambda: f64, params: &ProfileParams) -> Result<DivergenceOnset> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CuspError::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let rule = GaussRule::new(32)?;
    let density = |v: f64| -> Result<f64> {
        let s = v.exp();
        let mut terms = Vec::with_capacity(64);
        for &(a, b) in &SECTORS {
            for (theta, w) in rule.on(a, b) {
                terms.push(lambda * distortion_k_log(-s, theta, params)? + w.ln());
            }
        }
        Ok(-2.0 * s + log_sum_exp(&terms))
    };
    let (mut a, mut b) = (0.0f64, 300.0f64);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (density(c)?, density(d)?);
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = density(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = density(d)?;
        }
        if b - a < 1e-10 * b.max(1.0) {
            break;
        }
    }
    let depth = (0.5 * (a + b)).exp();
    Ok(DivergenceOnset { lambda, depth, octaves: depth / LN_2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gauss_rule_is_exact_on_polynomials() {
        let g = GaussRule::new(5).unwrap();
        let v: f64 = g.on(0.0, 2.0).map(|(x, w)| w * x.powi(9)).sum();
        assert!(rel(v, 2f64.powi(10) / 10.0) < 1e-14);
        assert!(GaussRule::new(0).is_err());
    }

    #[test]
    fn log_sum_exp_basics() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + LN_2)).abs() < 1e-12);
        assert!((log_add(0.0, 0.0) - LN_2).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, 3.0), 3.0);
    }

    #[test]
    fn annulus_calibration() {
        let n = Nodes::default();
        assert!((integrate_annulus(|_| 1.0, 0.5, 1.0, n).unwrap() - 0.75 * PI).abs() < 1e-12);
        let (a, b) = (0.01, 0.9);
        assert!(
            (integrate_annulus(|p| 1.0 / p.r, a, b, Nodes { radial: 16, angular: 4 }).unwrap() - 2.0 * PI * (b - a))
                .abs()
                < 1e-10
        );
        assert!((integrate_annulus(|p| 1.0 / (p.r * p.r), a, b, n).unwrap() - 2.0 * PI * (b / a).ln()).abs() < 1e-10);
        let log_version = integrate_annulus_log(|_, _| Ok(0.0), 0.5f64.ln(), 0.0, n).unwrap();
        assert!((log_version.exp() - 0.75 * PI).abs() < 1e-12);
    }

    #[test]
    fn annulus_errors() {
        let n = Nodes::default();
        assert!(integrate_annulus(|_| 1.0, 0.5, 0.5, n).is_err());
        assert!(matches!(integrate_annulus(|_| f64::NAN, 0.5, 1.0, n), Err(CuspError::Node { .. })));
        assert!(integrate_annulus(|_| 1.0, 0.5, 1.0, Nodes { radial: 1, angular: 4 }).is_err());
    }

    #[test]
    fn classifier_examples() {
        assert_eq!(classify(&[1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5]).unwrap(), Verdict::Convergent);
        assert_eq!(classify(&[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]).unwrap(), Verdict::Divergent);
        assert_eq!(classify(&[3.0; 6]).unwrap(), Verdict::Inconclusive);
        assert!(matches!(classify(&[1.0; 5]), Err(CuspError::InsufficientData { needed: 6, got: 5 })));
    }

    #[test]
    fn one_over_r_squared_is_inconclusive() {
        let s = AnnularScheme::dyadic(10);
        let r = partial_integrals("1/r^2", 2.0, &s, |u, _| Ok(-2.0 * u)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        let want = 2.0 * PI * 10.0 * LN_2;
        assert!(rel(r.partials.last().unwrap().value.unwrap(), want) < 1e-12);
    }

    #[test]
    fn scheme_validation() {
        let mut s = AnnularScheme::dyadic(8);
        assert!(s.validate().is_ok());
        s.log_eps.swap(2, 3);
        assert!(s.validate().is_err());
        assert!(AnnularScheme { log_eps: vec![0.1], ..AnnularScheme::dyadic(1) }.validate().is_err());
    }

    #[test]
    fn conformal_chain_gives_disk_area() {
        let chain = MapChain::with_stages(ProfileParams::default(), &[Stage::F1]).unwrap();
        let s = AnnularScheme::dyadic(40);
        for p in [0.5, 2.0, 8.0] {
            let r = integral_k_pow(p, &s, &chain).unwrap();
            assert!(rel(r.partials.last().unwrap().value.unwrap(), PI) < 1e-12);
            assert_eq!(r.verdict, Verdict::Convergent);
        }
        let r = integral_exp_k(1.0, &s, &chain).unwrap();
        assert!(rel(r.partials.last().unwrap().value.unwrap(), std::f64::consts::E * PI) < 1e-12);
    }

    #[test]
    fn partials_are_monotone() {
        let chain = MapChain::new(ProfileParams::default());
        let s = AnnularScheme::dyadic(24);
        for r in [integral_k_pow(2.0, &s, &chain).unwrap(), integral_exp_k(1.0, &s, &chain).unwrap()] {
            assert!(r.partials.windows(2).all(|w| w[1].log_value >= w[0].log_value));
        }
    }

    #[test]
    fn refinement_is_stable() {
        let chain = MapChain::new(ProfileParams::default());
        let s = AnnularScheme::dyadic(32);
        for (a, b) in [
            (integral_k_pow(4.0, &s, &chain).unwrap(), integral_k_pow(4.0, &s.refined(), &chain).unwrap()),
            (integral_exp_k(1.0, &s, &chain).unwrap(), integral_exp_k(1.0, &s.refined(), &chain).unwrap()),
        ] {
            for (x, y) in a.partials.iter().zip(&b.partials) {
                assert!((x.log_value - y.log_value).abs() < 0.005_f64.ln_1p());
            }
        }
    }

    #[test]
    fn onset_depths() {
        let p = ProfileParams::default();
        let one = exp_divergence_onset(1.0, &p).unwrap();
        assert!(one.octaves < 64.0, "{one:?}");
        let tenth = exp_divergence_onset(0.1, &p).unwrap();
        assert!(tenth.octaves > 64.0);
        let hundredth = exp_divergence_onset(0.01, &p).unwrap();
        assert!(hundredth.depth > tenth.depth * 1e6);
    }
}
