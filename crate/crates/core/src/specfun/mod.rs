//! Special functions at complex argument, integer order.
//!
//! Accuracy contract: about `1e-10` relative for `I_n` with `|z| <= 200`,
//! for `K_n` with `1e-6 <= |z| <= 200`, `|arg z| <= 3 pi / 4`, and for `J_n`
//! with `|z| <= 60`. The tests compare against exact rational series and
//! direct quadrature.

mod bessel;
mod dd;
mod gamma;
mod hyper;

pub use bessel::{
    bessel_i, bessel_i_scaled, bessel_j, bessel_k, bessel_k_scaled, I_SERIES_RADIUS,
    K_ASYMPTOTIC_RADIUS, K_SERIES_RADIUS,
};
pub use gamma::{
    digamma_int, factorial, gamma_complex, gamma_int, ln_factorial, ln_gamma_complex,
    EULER_GAMMA,
};
pub use hyper::{bessel_i_reduced_exp, bessel_j_reduced, hyp0f1, hyp0f2, hyp1f1};

pub(crate) use dd::Dd;

use crate::{Result, C64};

/// Relative distance below which [`bessel_kernel`] uses the diagonal formula.
pub const CONFLUENCE_EPS: f64 = 1e-8;

/// `(Y E(X) E'(Y) - X E'(X) E(Y)) / (4 (X - Y))` with `E(w) = w^{-n/2} J_n(2 sqrt w)`.
///
/// The hard-edge Bessel kernel is `K(4X, 4Y) = (X Y)^{n/2}` times this, so the
/// reduced form is single valued and entire in both arguments.
pub fn bessel_kernel_reduced(order: u32, x: C64, y: C64) -> Result<C64> {
    let scale = 1f64.max(x.norm()).max(y.norm());
    if (x - y).norm() < CONFLUENCE_EPS * scale {
        // symmetric in (X, Y), so the midpoint value is second-order accurate
        let m = (x + y) / 2.0;
        let e = bessel_j_reduced(order, m)?;
        let e1 = -bessel_j_reduced(order + 1, m)?;
        let e2 = bessel_j_reduced(order + 2, m)?;
        return Ok((m * e1 * e1 - e1 * e - m * e2 * e) / 4.0);
    }
    let ex = bessel_j_reduced(order, x)?;
    let ey = bessel_j_reduced(order, y)?;
    let dx = -bessel_j_reduced(order + 1, x)?;
    let dy = -bessel_j_reduced(order + 1, y)?;
    Ok((y * ex * dy - x * dx * ey) / (4.0 * (x - y)))
}

/// Hard-edge Bessel kernel
/// `(J_n(sqrt x) sqrt y J_n'(sqrt y) - J_n(sqrt y) sqrt x J_n'(sqrt x)) / (2 (x - y))`
/// with principal square roots; near the diagonal the confluent limit is used.
pub fn bessel_kernel(order: u32, x: C64, y: C64) -> Result<C64> {
    let (xr, yr) = (x / 4.0, y / 4.0);
    let pre = (xr.sqrt() * yr.sqrt()).powu(order);
    Ok(pre * bessel_kernel_reduced(order, xr, yr)?)
}
