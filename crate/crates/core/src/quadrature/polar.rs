//! Homogeneous-polar tensor rule on a gauge ball of `H^1`.
//!
//! With `s = ρ cos χ`, `t = ρ² sin χ sqrt(1 + cos² χ)` and `θ` the polar angle
//! of `z = x + iy`, one has `s⁴ + t² = ρ⁴` and
//!
//! ```text
//! dξ = 2 ρ³ cos χ / sqrt(1 + cos² χ) dρ dχ dθ,   χ ∈ [-π/2, π/2], θ ∈ [0, 2π).
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use super::gauss::{gauss_jacobi_unit, gauss_legendre_on};
use super::NodeSet;
use crate::error::{Error, Result};
use crate::hgroup::{compose_unchecked, HPoint};

#[derive(Debug, Clone)]
pub(crate) struct PolarSpec {
    pub center: HPoint,
    pub radius: f64,
    /// Radii (about the center) that must be cell boundaries.
    pub kinks: Vec<f64>,
    /// Exponent of the singular weight at the center, `0 <= beta < 4`.
    pub beta: f64,
    pub levels: usize,
}

/// Radial cell boundaries `b_0 < b_1 < ... = R`; the innermost cell is `[0, b_0]`.
pub(crate) fn radial_breaks(radius: f64, kinks: &[f64], levels: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = kinks
        .iter()
        .copied()
        .filter(|k| *k > 0.0 && *k < radius * (1.0 - 1e-12))
        .collect();
    pts.push(radius);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

    let mut filled = vec![pts[0]];
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = (b / a).log2().ceil().max(1.0) as usize;
        for j in 1..m {
            filled.push(a * (b / a).powf(j as f64 / m as f64));
        }
        filled.push(b);
    }
    let s = filled[0];
    let mut inner: Vec<f64> = (1..=levels).rev().map(|j| s / 2f64.powi(j as i32)).collect();
    inner.extend(filled);
    inner
}

fn composite(order: usize, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .flat_map(|k| gauss_legendre_on(order, lo + k as f64 * h, lo + (k + 1) as f64 * h))
        .collect()
}

/// Nodes and weights with radial and angular Gauss orders `order`.
pub(crate) fn polar_nodes(spec: &PolarSpec, order: usize) -> Result<NodeSet> {
    if spec.center.n() != 1 {
        return Err(Error::Precondition("polar rule is implemented for n = 1".into()));
    }
    if !(spec.beta < 4.0) {
        return Err(Error::NonIntegrable(format!(
            "weight |ξ|^-{} is not locally integrable for Q = 4",
            spec.beta
        )));
    }
    let breaks = radial_breaks(spec.radius, &spec.kinks, spec.levels);

    // (ρ, ρ-weight including ρ³)
    let mut radial: Vec<(f64, f64)> = Vec::new();
    let b0 = breaks[0];
    for (v, lam) in gauss_jacobi_unit(order, 0.0, 3.0 - spec.beta)? {
        radial.push((b0 * v, b0.powi(4) * lam * v.powf(spec.beta)));
    }
    for w in breaks.windows(2) {
        for (rho, wr) in gauss_legendre_on(order, w[0], w[1]) {
            radial.push((rho, wr * rho.powi(3)));
        }
    }

    let chi = composite(order, -FRAC_PI_2, FRAC_PI_2, 4);
    let theta = composite(order, 0.0, 2.0 * PI, 4);
    let ang: Vec<(f64, f64, f64)> = chi
        .iter()
        .map(|&(c, wc)| {
            let (s, co) = c.sin_cos();
            let root = (1.0 + co * co).sqrt();
            (co, s * root, wc * 2.0 * co / root)
        })
        .collect();
    let trig: Vec<(f64, f64, f64)> = theta.iter().map(|&(th, w)| (th.cos(), th.sin(), w)).collect();

    let cap = radial.len() * ang.len() * trig.len();
    let mut set = NodeSet::with_capacity(cap);
    for &(rho, wr) in &radial {
        for &(co, st, wc) in &ang {
            if wc <= 0.0 {
                continue;
            }
            let s = rho * co;
            let t = rho * rho * st;
            for &(ct, sn, wt) in &trig {
                let eta = HPoint::h1(s * ct, s * sn, t);
                set.push(compose_unchecked(&spec.center, &eta), wr * wc * wt);
            }
        }
    }
    Ok(set)
}
