use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cuspmap::acceptance::{run_criterion, AcceptanceOptions};
use cuspmap::capacity::{annulus_capacity as grid_annulus, lip_test_energy as closed_form_energy, GridSolverConfig};
use cuspmap::distortion::{bound_ratio as ratio, distortion_k_chain};
use cuspmap::error::CuspError;
use cuspmap::maps::{boundary_image_trace, MapChain, Stage};
use cuspmap::point::PlanePoint;
use cuspmap::profile::ProfileParams;
use cuspmap::quadrature::{integral_exp_k, integral_k_pow, AnnularScheme, IntegrabilityReport};

fn py_err(e: CuspError) -> PyErr {
    match e {
        CuspError::Convergence { .. } | CuspError::Overflow | CuspError::Node { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn chain(cg: f64, stages: Option<Vec<String>>) -> PyResult<MapChain> {
    let params = ProfileParams::new(cg, 1.0).map_err(py_err)?;
    match stages {
        None => Ok(MapChain::new(params)),
        Some(names) => {
            let stages = names.iter().map(|s| s.parse::<Stage>()).collect::<Result<Vec<_>, _>>().map_err(py_err)?;
            MapChain::with_stages(params, &stages).map_err(py_err)
        }
    }
}

fn finite_pair(w: PlanePoint) -> (f64, f64) {
    if w.at_infinity {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (w.x1, w.x2)
    }
}

/// Image of `(x1, x2)` under the map chain.
#[pyfunction]
#[pyo3(signature = (x1, x2, cg = 16.0, stages = None))]
fn map_point(x1: f64, x2: f64, cg: f64, stages: Option<Vec<String>>) -> PyResult<(f64, f64)> {
    let c = chain(cg, stages)?;
    Ok(finite_pair(c.apply(PlanePoint::new(x1, x2)).map_err(py_err)?))
}

#[pyfunction]
#[pyo3(signature = (w1, w2, cg = 16.0, stages = None))]
fn map_inverse(w1: f64, w2: f64, cg: f64, stages: Option<Vec<String>>) -> PyResult<(f64, f64)> {
    let c = chain(cg, stages)?;
    Ok(finite_pair(c.apply_inverse(PlanePoint::new(w1, w2)).map_err(py_err)?))
}

/// Distortion `K` of the chain at a source point.
#[pyfunction]
#[pyo3(signature = (x1, x2, cg = 16.0, stages = None))]
fn distortion(x1: f64, x2: f64, cg: f64, stages: Option<Vec<String>>) -> PyResult<f64> {
    let c = chain(cg, stages)?;
    Ok(distortion_k_chain(PlanePoint::new(x1, x2), &c).map_err(py_err)?.k)
}

#[pyfunction]
#[pyo3(signature = (log_r, theta, cg = 16.0))]
fn bound_ratio(log_r: f64, theta: f64, cg: f64) -> PyResult<f64> {
    let params = ProfileParams::new(cg, 1.0).map_err(py_err)?;
    ratio(log_r, theta, &params).map_err(py_err)
}

fn summary(r: IntegrabilityReport) -> (String, Vec<f64>, Vec<f64>) {
    let log_eps = r.partials.iter().map(|p| p.log_eps).collect();
    let log_values = r.partials.iter().map(|p| p.log_value).collect();
    (format!("{:?}", r.verdict), log_eps, log_values)
}

/// `(verdict, log_eps, log_partials)` for `∫ K^p` on the dyadic schedule.
#[pyfunction]
#[pyo3(signature = (p, k_max = 64, cg = 16.0))]
fn integrate_kpow(py: Python<'_>, p: f64, k_max: u32, cg: f64) -> PyResult<(String, Vec<f64>, Vec<f64>)> {
    let c = chain(cg, None)?;
    let r = py.detach(|| integral_k_pow(p, &AnnularScheme::dyadic(k_max), &c)).map_err(py_err)?;
    Ok(summary(r))
}

#[pyfunction]
#[pyo3(signature = (lam, k_max = 64, cg = 16.0))]
fn integrate_exp(py: Python<'_>, lam: f64, k_max: u32, cg: f64) -> PyResult<(String, Vec<f64>, Vec<f64>)> {
    let c = chain(cg, None)?;
    let r = py.detach(|| integral_exp_k(lam, &AnnularScheme::dyadic(k_max), &c)).map_err(py_err)?;
    Ok(summary(r))
}

#[pyfunction]
fn lip_test_energy(r: f64, d: f64) -> PyResult<f64> {
    Ok(closed_form_energy(r, d).map_err(py_err)?.value)
}

#[pyfunction]
#[pyo3(signature = (rho, big_r, resolution = 128))]
fn annulus_capacity(py: Python<'_>, rho: f64, big_r: f64, resolution: usize) -> PyResult<f64> {
    let cfg = GridSolverConfig::with_resolution(resolution);
    Ok(py.detach(|| grid_annulus(rho, big_r, &cfg)).map_err(py_err)?.value)
}

/// `(t, x1, x2, residual)` rows for the cusp boundary points `t + i exp(-1/t)`.
#[pyfunction]
fn boundary_trace(t: Vec<f64>) -> Vec<(f64, f64, f64, f64)> {
    boundary_image_trace(&t).into_iter().map(|p| (p.t, p.image.x1, p.image.x2, p.residual)).collect()
}

/// `(pass, report_line)` for one acceptance criterion.
#[pyfunction]
#[pyo3(signature = (id, cg = 16.0))]
fn verify(py: Python<'_>, id: u8, cg: f64) -> PyResult<(bool, String)> {
    let params = ProfileParams::new(cg, 1.0).map_err(py_err)?;
    let opts = AcceptanceOptions { params, ..Default::default() };
    let r = py.detach(|| run_criterion(id, &opts));
    Ok((r.pass, r.line()))
}

#[pymodule]
fn pycuspmap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(map_point, m)?)?;
    m.add_function(wrap_pyfunction!(map_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(distortion, m)?)?;
    m.add_function(wrap_pyfunction!(bound_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_kpow, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_exp, m)?)?;
    m.add_function(wrap_pyfunction!(lip_test_energy, m)?)?;
    m.add_function(wrap_pyfunction!(annulus_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_trace, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
