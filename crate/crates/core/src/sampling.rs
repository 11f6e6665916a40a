//! Deterministic quasi-random point sets (Halton sequences).

use std::f64::consts::PI;

use crate::point::PlanePoint;

/// Radical inverse of `index` in the given base.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while index > 0 {
        x += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    x
}

/// First `n` points of the 2D Halton sequence (bases 2 and 3), skipping index 0.
pub fn halton2(n: usize) -> Vec<(f64, f64)> {
    halton2_from(1, n)
}

/// `n` Halton points starting at sequence index `start`.
pub fn halton2_from(start: u64, n: usize) -> Vec<(f64, f64)> {
    (0..n as u64).map(|k| (radical_inverse(start + k, 2), radical_inverse(start + k, 3))).collect()
}

/// Area-uniform quasi-random points in the closed disk `B(0, radius)`.
pub fn halton_disk(n: usize, radius: f64) -> Vec<PlanePoint> {
    halton_disk_from(1, n, radius)
}

pub fn halton_disk_from(start: u64, n: usize, radius: f64) -> Vec<PlanePoint> {
    halton2_from(start, n)
        .into_iter()
        .map(|(u, v)| {
            let rho = radius * u.sqrt();
            let a = 2.0 * PI * v;
            PlanePoint::new(rho * a.cos(), rho * a.sin())
        })
        .collect()
}
