//! Semiclassical and named Lieb-Thirring constants.
//!
//! `L^cl_{d,gamma} = (2 pi)^{-d} \int_{R^d} (1 - |xi|^2)_+^gamma d xi`
//! `               = Gamma(gamma + 1) / (2^d pi^{d/2} Gamma(gamma + 1 + d/2))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{invalid, Result};
use crate::quad::{integrate, QuadConfig};

/// `2 / (3 sqrt 3)`, the one-dimensional matrix Lieb-Thirring constant at `gamma = 1`.
pub fn c_thm1() -> f64 {
    2.0 / (3.0 * 3f64.sqrt())
}

/// `4 / (3 sqrt 3 pi)`, the one-bound-state constant.
pub fn c_keller() -> f64 {
    4.0 / (3.0 * 3f64.sqrt() * PI)
}

/// Ratio of [`c_thm1`] to `L^cl_{1,1} = 2 / (3 pi)`; equals `pi / sqrt 3`.
pub fn ratio_r() -> f64 {
    c_thm1() / lt_classical(1, 1.0).expect("valid arguments")
}

/// Closed form of the semiclassical constant.
pub fn lt_classical(d: u32, gamma: f64) -> Result<f64> {
    if d == 0 {
        return invalid("dimension must be >= 1");
    }
    if !(gamma >= 0.0) {
        return invalid(format!("gamma must be >= 0, got {gamma}"));
    }
    let half_d = f64::from(d) / 2.0;
    Ok(gamma_fn(gamma + 1.0) / (2f64.powi(d as i32) * PI.powf(half_d) * gamma_fn(gamma + 1.0 + half_d)))
}

/// Surface area of the unit sphere `S^{d-1}` for `d` in 1..=3.
fn sphere_area(d: u32) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("checked by caller"),
    }
}

/// Radial quadrature of the phase-space integral, `d` in 1..=3.
pub fn lt_classical_quadrature(d: u32, gamma: f64) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return invalid(format!("radial quadrature supports d in 1..=3, got {d}"));
    }
    if !(gamma >= 0.0) {
        return invalid(format!("gamma must be >= 0, got {gamma}"));
    }
    let radial = integrate(
        |r| (1.0 - r * r).max(0.0).powf(gamma) * r.powi(d as i32 - 1),
        0.0,
        1.0,
        QuadConfig { abs_tol: 1e-14, rel_tol: 1e-13, ..QuadConfig::default() },
    )?;
    Ok(sphere_area(d) * radial.value / (2.0 * PI).powi(d as i32))
}

/// The variant with `(1 - |xi|)_+^gamma`, kept to document that it does not
/// reproduce `2 / (3 pi)` at `d = gamma = 1`.
pub fn lt_classical_linear_profile(d: u32, gamma: f64) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return invalid(format!("radial quadrature supports d in 1..=3, got {d}"));
    }
    let radial = integrate(
        |r| (1.0 - r).max(0.0).powf(gamma) * r.powi(d as i32 - 1),
        0.0,
        1.0,
        QuadConfig::default(),
    )?;
    Ok(sphere_area(d) * radial.value / (2.0 * PI).powi(d as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NamedConstants {
    pub c_thm1: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub c_keller: f64,
    /// `2 L^cl_{1,1} = 4 / (3 pi)`.
    pub twice_lcl_1_1: f64,
}

pub fn named_constants() -> NamedConstants {
    let lcl = lt_classical(1, 1.0).expect("valid arguments");
    let out = NamedConstants { c_thm1: c_thm1(), r: ratio_r(), c_keller: c_keller(), twice_lcl_1_1: 2.0 * lcl };
    debug_assert!(out.c_keller < out.c_thm1 && out.c_thm1 < out.twice_lcl_1_1);
    out
}

/// One row of the constants table: `L^cl_{d,gamma}` and `R L^cl_{d,gamma}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsEntry {
    pub d: u32,
    pub gamma: f64,
    pub lcl: f64,
    pub bound: f64,
}

pub fn constants_entry(d: u32, gamma: f64) -> Result<ConstantsEntry> {
    let lcl = lt_classical(d, gamma)?;
    Ok(ConstantsEntry { d, gamma, lcl, bound: ratio_r() * lcl })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KellerMinimum {
    pub x_star: f64,
    pub min_value: f64,
}

/// Minimizes `X - a X^{1/3}` over `X >= 0`: `X* = (a/3)^{3/2}`,
/// minimum `-(2 / (3 sqrt 3)) a^{3/2}`.
pub fn keller_minimize(a: f64) -> Result<KellerMinimum> {
    if !(a > 0.0) || !a.is_finite() {
        return invalid(format!("keller_minimize needs a > 0, got {a}"));
    }
    let objective = |x: f64| x - a * x.cbrt();
    let x_star = (a / 3.0).powf(1.5);
    let min_value = -c_thm1() * a.powf(1.5);
    let delta = 1e-3 * x_star;
    debug_assert!(objective(x_star + delta) >= objective(x_star) - 1e-12 * a.powf(1.5));
    debug_assert!(objective(x_star - delta) >= objective(x_star) - 1e-12 * a.powf(1.5));
    Ok(KellerMinimum { x_star, min_value })
}
