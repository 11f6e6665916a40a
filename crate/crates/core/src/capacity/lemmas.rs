use serde::Serialize;

use super::{CapacityEstimate, CapacityMethod};
use crate::domains::{contains_exp, ExpCuspDomain};
use crate::error::{CuspError, Result};
use crate::point::PlanePoint;
use crate::quadrature::GaussRule;

/// Cut-off test function of the exponential cusp: `1` up to `x1 = r`,
/// `0` beyond `x1 = d/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipTestFn {
    pub r: f64,
    pub d: f64,
}

impl LipTestFn {
    pub fn new(r: f64, d: f64) -> Result<Self> {
        if !(r > 0.0 && d <= 1.0 && r < 0.5 * d) {
            return Err(CuspError::Domain(format!("need 0 < r < d/2 <= 1/2, got r = {r}, d = {d}")));
        }
        Ok(Self { r, d })
    }
}

/// `log ∫_a^b e^{1/t} dt` for `0 < a < b`.
///
/// With `w = 1/a - 1/t` the integral is `e^{1/a} ∫_0^{1/a - 1/b} e^{-w} (1/a - w)^{-2} dw`;
/// the remaining integrand is smooth and decays, so unit Gauss panels reach
/// double precision well before the tail matters.
pub fn log_exp_reciprocal_integral(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a < b && b.is_finite()) {
        return Err(CuspError::Domain(format!("invalid interval ({a}, {b})")));
    }
    let (ia, ib) = (1.0 / a, 1.0 / b);
    let width = ia - ib;
    let cutoff = width.min(45.0 + 2.0 * (b / a).ln());
    let panels = cutoff.ceil().max(1.0) as usize;
    let rule = GaussRule::new(20)?;
    let mut sum = 0.0;
    for k in 0..panels {
        let lo = cutoff * k as f64 / panels as f64;
        let hi = cutoff * (k + 1) as f64 / panels as f64;
        sum += rule.on(lo, hi).map(|(w, wt)| wt * (-w).exp() / ((ia - w) * (ia - w))).sum::<f64>();
    }
    Ok(ia + sum.ln())
}

/// The test function at a point of the cusp domain.
pub fn lip_test_value(x: PlanePoint, f: &LipTestFn) -> Result<f64> {
    if !contains_exp(x, &ExpCuspDomain::default()) {
        return Err(CuspError::Domain(format!("({}, {}) is not in the cusp domain", x.x1, x.x2)));
    }
    if x.x1 <= f.r {
        return Ok(1.0);
    }
    if x.x1 > 0.5 * f.d {
        return Ok(0.0);
    }
    let part = log_exp_reciprocal_integral(f.r, x.x1)?;
    let whole = log_exp_reciprocal_integral(f.r, 0.5 * f.d)?;
    Ok((-(part - whole).exp()).clamp(-1.0, 0.0) + 1.0)
}

fn closed_form(log_value: f64, weight: &str, pair: String) -> CapacityEstimate {
    CapacityEstimate {
        value: log_value.exp(),
        log_value,
        method: CapacityMethod::ClosedForm,
        weight_desc: weight.to_string(),
        pair_desc: pair,
        solver: None,
    }
}

/// `(∫_r^{d/2} e^{1/t} dt)^{-1}`, the energy bound displayed with the test
/// function. The value underflows for `r` below about `0.0014`; the log value
/// stays exact.
pub fn lip_test_energy(r: f64, d: f64) -> Result<CapacityEstimate> {
    let f = LipTestFn::new(r, d)?;
    let log_value = -log_exp_reciprocal_integral(f.r, 0.5 * f.d)?;
    Ok(closed_form(log_value, "1", format!("x1 <= {r} / x1 > {}", 0.5 * d)))
}

/// Exact Dirichlet energy of the test function over the cusp strip. The
/// cross-section has width `2 e^{-1/x1}`, so this is twice [`lip_test_energy`].
pub fn lip_dirichlet_energy(r: f64, d: f64) -> Result<CapacityEstimate> {
    let e = lip_test_energy(r, d)?;
    Ok(closed_form(e.log_value + std::f64::consts::LN_2, "1", e.pair_desc))
}

/// Log of the discrete Dirichlet energy of the sampled test function on a
/// cusp grid with `n` columns graded uniformly in `1/x1`; every column is
/// exactly as tall as the cusp at its midpoint, so the cells follow the
/// throat instead of cutting across it.
pub fn lip_discrete_energy(r: f64, d: f64, n: usize) -> Result<f64> {
    let f = LipTestFn::new(r, d)?;
    if n < 16 {
        return Err(CuspError::Domain(format!("resolution {n} below 16")));
    }
    let (ia, ib) = (1.0 / f.r, 2.0 / f.d);
    let xs: Vec<f64> = (0..=n).map(|k| 1.0 / (ia + (ib - ia) * k as f64 / n as f64)).collect();
    let u: Vec<f64> = xs
        .iter()
        .map(|&x| if x <= f.r { Ok(1.0) } else { lip_test_value(PlanePoint::new(x.min(0.5 * f.d), 0.0), &f) })
        .collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(n);
    for k in 0..n {
        let dx = xs[k + 1] - xs[k];
        let du = u[k] - u[k + 1];
        let mid = 0.5 * (xs[k] + xs[k + 1]);
        terms.push(2.0 * du.ln() - dx.ln() + std::f64::consts::LN_2 - 1.0 / mid);
    }
    Ok(crate::quadrature::log_sum_exp(&terms))
}

/// Energies fed to [`superpoly_decay_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EnergyModel {
    /// [`lip_test_energy`] with `d = 1`.
    ExpCusp,
    /// `r^{s0}`, the decay available in a power cusp.
    Power { s0: f64 },
}

impl EnergyModel {
    fn log_energy(&self, r: f64) -> Result<f64> {
        match *self {
            EnergyModel::ExpCusp => Ok(lip_test_energy(r, 1.0)?.log_value),
            EnergyModel::Power { s0 } => Ok(s0 * r.ln()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub s: f64,
    /// `log(energy(r) / r^s)` along the radii.
    pub log_ratios: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub model: EnergyModel,
    pub r: Vec<f64>,
    pub rows: Vec<DecayRow>,
    pub pass: bool,
}

/// Ratios below this count as having reached zero.
pub const DECAY_FLOOR: f64 = 1e-6;

/// For each `s`, checks that `energy(r) / r^s` decreases strictly over the
/// second half of the radii and ends below [`DECAY_FLOOR`].
pub fn superpoly_decay_check(s_list: &[f64], r_list: &[f64], model: EnergyModel) -> Result<DecayReport> {
    if r_list.len() < 2
        || r_list.windows(2).any(|w| !(w[1] < w[0]))
        || !(r_list[0] < 0.25)
        || !(r_list[r_list.len() - 1] > 0.0)
    {
        return Err(CuspError::Domain("radii must decrease inside (0, 1/4)".into()));
    }
    if s_list.iter().any(|&s| !(s > 0.0)) {
        return Err(CuspError::Domain("exponents must be positive".into()));
    }
    let log_e = r_list.iter().map(|&r| model.log_energy(r)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<DecayRow> = s_list
        .iter()
        .map(|&s| {
            let log_ratios: Vec<f64> = log_e.iter().zip(r_list).map(|(&e, &r)| e - s * r.ln()).collect();
            let half = log_ratios.len() / 2;
            let pass =
                log_ratios[half..].windows(2).all(|w| w[1] < w[0]) && *log_ratios.last().unwrap() < DECAY_FLOOR.ln();
            DecayRow { s, log_ratios, pass }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(DecayReport { model, r: r_list.to_vec(), rows, pass })
}

/// A bound together with its logarithm, for values below the double range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogBound {
    pub value: f64,
    pub log_value: f64,
}

/// `C λ (log(sqrt(4L/π) / diam E))^{-2}`.
pub fn capala_lower_bound(lambda: f64, l: f64, diam_e: f64, c: f64) -> Result<f64> {
    if !(diam_e > 0.0 && l > 0.0) {
        return Err(CuspError::Domain(format!("need L > 0 and diam E > 0, got {l}, {diam_e}")));
    }
    if !(lambda > 0.0 && c > 0.0) {
        return Err(CuspError::Domain(format!("need lambda > 0 and C > 0, got {lambda}, {c}")));
    }
    let lg = ((4.0 * l / std::f64::consts::PI).sqrt() / diam_e).ln();
    if !(lg > 0.0) {
        return Err(CuspError::Domain(format!("sqrt(4L/pi) / diam E = e^{lg} is not above 1")));
    }
    Ok(c * lambda / (lg * lg))
}

/// [`capala_lower_bound`] from `log L` and `log diam E`.
pub fn capala_lower_bound_log(lambda: f64, log_l: f64, log_diam_e: f64, c: f64) -> Result<LogBound> {
    if !(lambda > 0.0 && c > 0.0) {
        return Err(CuspError::Domain(format!("need lambda > 0 and C > 0, got {lambda}, {c}")));
    }
    let lg = 0.5 * ((4.0 / std::f64::consts::PI).ln() + log_l) - log_diam_e;
    if !(lg > 0.0) {
        return Err(CuspError::Domain(format!("sqrt(4L/pi) / diam E = e^{lg} is not above 1")));
    }
    let log_value = c.ln() + lambda.ln() - 2.0 * lg.ln();
    Ok(LogBound { value: c * lambda / (lg * lg), log_value })
}

/// `C exp(-C̃ / diam(E')^{(1+ε)/λ})`.
pub fn diamarvio_bound(diam_e_prime: f64, lambda: f64, eps: f64, c: f64, c_tilde: f64) -> Result<LogBound> {
    if !(diam_e_prime > 0.0) {
        return Err(CuspError::Domain(format!("diam E' must be positive, got {diam_e_prime}")));
    }
    if !(lambda > 0.0 && eps > 0.0 && c > 0.0 && c_tilde > 0.0) {
        return Err(CuspError::Domain("all bound parameters must be positive".into()));
    }
    let x = c_tilde / diam_e_prime.powf((1.0 + eps) / lambda);
    Ok(LogBound { value: c * (-x).exp(), log_value: c.ln() - x })
}

/// [`diamarvio_bound`] from `log diam E'`.
pub fn diamarvio_bound_log(log_diam: f64, lambda: f64, eps: f64, c: f64, c_tilde: f64) -> Result<LogBound> {
    if !(lambda > 0.0 && eps > 0.0 && c > 0.0 && c_tilde > 0.0) {
        return Err(CuspError::Domain("all bound parameters must be positive".into()));
    }
    let log_value = c.ln() - c_tilde * (-(1.0 + eps) / lambda * log_diam).exp();
    Ok(LogBound { value: log_value.exp(), log_value })
}
