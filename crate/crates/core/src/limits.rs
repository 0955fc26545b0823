//! Hard-edge limiting kernels `K_I`..`K_IV`, their rank-`m` decompositions,
//! the Meijer G-kernel, the integrable form of the critical kernel and the
//! transitions between the kernels as `tau` varies.
//!
//! `K_I` comes from the `w`-integral of a product of two Meijer G-functions,
//! evaluated by their residue series. `K_II`, `K_III`, `K_IV` are double
//! contour integrals on nested origin circles. For `K_II` with large `tau` the
//! factor `e^{tau/v}` makes the contour sums cancel badly, so the `m = 0` part
//! switches to a real-line Laplace form (see [`kernel_ii_zero_laplace`]).

use crate::contour::{
    double_contour_grid, quad_closed, BesselPair, ContourPair, ContourSpec, Escalation,
    KernelValue, PoleFactor, Separable,
};
use crate::quadrature::{self, tanh_sinh_real};
use crate::specfun::{
    bessel_j_reduced, digamma_int, factorial, hyp0f2, ln_factorial, ln_gamma_complex,
};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which limiting kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitFamily {
    I,
    II,
    III,
    IV,
}

impl std::str::FromStr for LimitFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(LimitFamily::I),
            "ii" | "2" => Ok(LimitFamily::II),
            "iii" | "3" => Ok(LimitFamily::III),
            "iv" | "4" => Ok(LimitFamily::IV),
            _ => Err(Error::Validation(format!("unknown kernel family '{s}'"))),
        }
    }
}

/// Parameters `nu`, `kappa`, `tau` and the `m` spike values `pi_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitKernelParams {
    pub nu: u32,
    pub kappa: u32,
    pub m: usize,
    pub tau: f64,
    pub pis: Vec<f64>,
}

impl LimitKernelParams {
    pub fn new(nu: u32, kappa: u32, tau: f64, pis: Vec<f64>) -> Self {
        LimitKernelParams { nu, kappa, m: pis.len(), tau, pis }
    }

    /// `nu + m`.
    pub fn alpha_ord(&self) -> u32 {
        self.nu + self.m as u32
    }

    pub fn validate(&self, family: LimitFamily) -> Result<()> {
        if self.pis.len() != self.m {
            return Err(Error::Validation(format!("expected {} pis, got {}", self.m, self.pis.len())));
        }
        let open01 = self.pis.iter().all(|&p| p > 0.0 && p < 1.0);
        match family {
            LimitFamily::I => {}
            LimitFamily::II => {
                if !(self.tau > 0.0 && self.tau.is_finite()) {
                    return Err(Error::Validation(format!("tau must be positive, got {}", self.tau)));
                }
                if !open01 {
                    return Err(Error::Validation("K_II needs every pi in (0, 1)".into()));
                }
            }
            LimitFamily::III => {
                if !self.pis.iter().all(|&p| p > 0.0 && p.is_finite()) {
                    return Err(Error::Validation("K_III needs every pi > 0".into()));
                }
            }
            LimitFamily::IV => {
                if self.m == 0 {
                    return Err(Error::Validation("K_IV needs m >= 1".into()));
                }
                if !open01 {
                    return Err(Error::Validation("K_IV needs every pi in (0, 1)".into()));
                }
            }
        }
        Ok(())
    }

    fn pmax(&self) -> f64 {
        self.pis.iter().cloned().fold(0.0, f64::max)
    }
}

fn check_args(xs: &[f64]) -> Result<()> {
    for &x in xs {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("kernel arguments must be positive, got {x}")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- K_I

/// `G^{1,0}_{0,3}(z | 0, -nu, -kappa) = 0F2(; nu+1, kappa+1; -z) / (nu! kappa!)`.
pub fn meijer_g10(nu: u32, kappa: u32, z: f64) -> Result<f64> {
    let f = hyp0f2(nu as i64 + 1, kappa as i64 + 1, C64::new(-z, 0.0))?;
    Ok(f.re / (factorial(nu) * factorial(kappa)))
}

/// `G^{2,0}_{0,3}(z | nu, kappa, 0)` for `z > 0` by its residue series.
///
/// With `lo = min(nu, kappa)`, `d = |nu - kappa|`: simple poles at
/// `s = -lo - j`, `j < d`, then double poles at `s = -lo - d - k`.
pub fn meijer_g20(nu: u32, kappa: u32, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("G^20 needs z > 0, got {z}")));
    }
    let lo = nu.min(kappa);
    let hi = nu.max(kappa);
    let d = hi - lo;
    let lz = z.ln();
    let mut sum = 0.0;
    for j in 0..d {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * factorial(d - j - 1) * z.powi((lo + j) as i32)
            / (factorial(j) * factorial(lo + j));
    }
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    let mut tail = 0.0;
    let mut quiet = 0;
    for k in 0..400u32 {
        let ln_mag = (hi + k) as f64 * lz - ln_factorial(k) - ln_factorial(d + k) - ln_factorial(hi + k);
        let psi = digamma_int(k + 1) + digamma_int(d + k + 1) + digamma_int(hi + k + 1) - lz;
        let term = ln_mag.exp() * psi;
        tail += term;
        if term.abs() <= 1e-17 * tail.abs() && k > 3 {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum + sign * tail);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Convergence(format!("G^20 series at z={z} did not settle")))
}

/// `K_I(xi, eta) = (eta/xi)^{kappa/2} int_0^1 G^{1,0}(eta w) G^{2,0}(xi w) dw`.
pub fn kernel_i(p: &LimitKernelParams, xi: f64, eta: f64) -> Result<f64> {
    check_args(&[xi, eta])?;
    let (nu, kappa) = (p.nu, p.kappa);
    let mut err = None;
    let v = tanh_sinh_real(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            match (meijer_g10(nu, kappa, eta * w), meijer_g20(nu, kappa, xi * w)) {
                (Ok(a), Ok(b)) => a * b,
                (Err(e), _) | (_, Err(e)) => {
                    err = Some(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        1e-13,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((eta / xi).powf(kappa as f64 / 2.0) * v)
}

/// Value with a truncation error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Meijer G-kernel `K_{nu,kappa}(x, y)` from its Mellin-Barnes form.
///
/// The `v`-contour is the residue sum over `v = 0, 1, 2, ..`; the `u`-line
/// `Re u = -1/2` is truncated at `|Im u| = T`, doubling `T` from 20 until two
/// values agree to `1e-8` relative.
pub fn meijer_g_kernel(nu: u32, kappa: u32, x: f64, y: f64) -> Result<Estimate> {
    check_args(&[x, y])?;
    // residue coefficients x^n / (n! (n+nu)! (n+kappa)!) with sign (-1)^n
    let mut coef = Vec::new();
    let mut quiet = 0;
    let mut total = 0.0f64;
    for n in 0..500u32 {
        let ln_mag = n as f64 * x.ln() - ln_factorial(n) - ln_factorial(n + nu) - ln_factorial(n + kappa);
        let c = if n % 2 == 0 { ln_mag.exp() } else { -ln_mag.exp() };
        coef.push(c);
        total += c.abs();
        if c.abs() < 1e-14 * total {
            quiet += 1;
            if quiet >= 5 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let s_of = |u: C64| -> C64 {
        coef.iter().enumerate().map(|(n, &c)| c / (u - n as f64)).sum::<C64>() / PI
    };
    let h = 0.05;
    let integrand = |t: f64| -> f64 {
        let u = C64::new(-0.5, t);
        // sin(pi u) = -cosh(pi t), folded into the logarithm
        let ln_cosh = PI * t.abs() + (0.5 * (1.0 + (-2.0 * PI * t.abs()).exp())).ln();
        let lg = ln_gamma_complex(u + 1.0)
            + ln_gamma_complex(u + 1.0 + nu as f64)
            + ln_gamma_complex(u + 1.0 + kappa as f64)
            - (u + 1.0) * y.ln()
            + ln_cosh;
        (-(lg.exp()) * s_of(u)).re
    };
    let mut t_max: f64 = 20.0;
    let mut prev: Option<f64> = None;
    loop {
        let steps = (t_max / h).round() as usize;
        // integrand(t) and integrand(-t) are conjugate, so the real part is even
        let mut acc = 0.5 * integrand(0.0);
        for j in 1..=steps {
            acc += integrand(j as f64 * h);
        }
        // (1/2 pi i) du = dt / (2 pi), two conjugate halves; the residue sum
        // already carries the v-contour factor. With the u-line run upward and
        // the v-loop clockwise around the poles 0, 1, 2, .. the signs cancel.
        let val = 2.0 * acc * h / (2.0 * PI);
        if let Some(pv) = prev {
            let err = (val - pv).abs();
            if err <= 1e-8 * val.abs().max(1e-300) {
                return Ok(Estimate { value: val, error: err });
            }
        }
        if t_max >= 320.0 {
            return Err(Error::Convergence(format!(
                "Meijer G-kernel line integral at ({x}, {y}) not settled"
            )));
        }
        prev = Some(val);
        t_max *= 2.0;
    }
}

// ----------------------------------------------------- contour kernels

/// `e^{sqrt(x) u} R(u)` and `e^{-sqrt(y) v} / R(v)` with `R` carrying
/// `e^{-1/u}`; prefactor `2 / (4 (x y)^{1/4})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpPair {
    pub poles: PoleFactor,
}

impl Separable for ExpPair {
    fn outer(&self, u: C64, x: f64) -> Result<C64> {
        Ok((x.sqrt() * u + self.poles.log_outer(u)).exp())
    }

    fn inner(&self, v: C64, y: f64) -> Result<C64> {
        Ok((-y.sqrt() * v - self.poles.log_outer(v)).exp())
    }

    fn prefactor(&self, x: f64, y: f64) -> f64 {
        0.5 / (x * y).powf(0.25)
    }
}

/// Default contours: nested origin circles. For II and IV the radii are
/// `p + (1-p)/3` (inner) and `p + 2(1-p)/3` (outer), `p = max pi_l`, keeping
/// the outer circle left of the branch point 1. For III there is no such
/// limit and the circles are `r_in = max(1.25 p, p + 0.3, 0.5)` and
/// `1.5 r_in + 0.5`.
pub fn default_limit_contours(family: LimitFamily, p: &LimitKernelParams) -> ContourPair {
    let pmax = p.pmax();
    let (r_in, r_out) = match family {
        LimitFamily::III => {
            let r = (1.25 * pmax).max(pmax + 0.3).max(0.5);
            (r, 1.5 * r + 0.5)
        }
        _ => (pmax + (1.0 - pmax) / 3.0, pmax + 2.0 * (1.0 - pmax) / 3.0),
    };
    let nodes = if family == LimitFamily::III { 64 } else { 128 };
    ContourPair::nested(
        ContourSpec::origin_circle(r_out, nodes),
        ContourSpec::origin_circle(r_in, nodes),
    )
}

fn bessel_limit_integrand(p: &LimitKernelParams, tau: f64, with_spikes: bool) -> BesselPair {
    let (power, pts): (u32, &[f64]) =
        if with_spikes { (p.nu, &p.pis) } else { (p.alpha_ord(), &[]) };
    BesselPair {
        kappa: p.kappa,
        scale: 1.0,
        constant: 2.0,
        poles: PoleFactor::from_points(power as i32, pts, tau),
        shift: 0.0,
    }
}

fn exp_limit_integrand(p: &LimitKernelParams, with_spikes: bool) -> ExpPair {
    let (power, pts): (u32, &[f64]) =
        if with_spikes { (p.nu, &p.pis) } else { (p.alpha_ord(), &[]) };
    ExpPair { poles: PoleFactor::from_points(power as i32, pts, 1.0) }
}

/// Above this `tau / r_in` the direct `K_II` contour sum loses too many digits.
pub const DIRECT_TAU_LIMIT: f64 = 12.0;

/// Limiting kernel of `family` on a grid. `contours = None` uses
/// [`default_limit_contours`]; `K_I` ignores the contours.
pub fn kernel_limit_grid(
    family: LimitFamily,
    p: &LimitKernelParams,
    contours: Option<&ContourPair>,
    xs: &[f64],
    ys: &[f64],
    esc: Escalation,
) -> Result<Vec<Vec<KernelValue>>> {
    p.validate(family)?;
    check_args(xs)?;
    check_args(ys)?;
    let pair = contours.cloned().unwrap_or_else(|| default_limit_contours(family, p));
    let limit = match family {
        LimitFamily::III => None,
        _ => Some(1.0),
    };
    let points: Vec<f64> = std::iter::once(0.0).chain(p.pis.iter().cloned()).collect();
    crate::parallel::install(|| match family {
        LimitFamily::I => xs
            .par_iter()
            .map(|&x| {
                ys.iter()
                    .map(|&y| Ok(KernelValue { value: kernel_i(p, x, y)?, im_residual: 0.0, nodes: 0 }))
                    .collect()
            })
            .collect(),
        LimitFamily::II => {
            let r_in = pair.inner.as_circle().map(|(_, r)| r).unwrap_or(1.0);
            if p.tau / r_in > DIRECT_TAU_LIMIT {
                return kernel_ii_large_tau(p, xs, ys);
            }
            validate_limit_pair(&pair, &points, limit)?;
            double_contour_grid(&bessel_limit_integrand(p, p.tau, true), &pair, xs, ys, esc)
        }
        LimitFamily::III => {
            validate_limit_pair(&pair, &points, limit)?;
            double_contour_grid(&exp_limit_integrand(p, true), &pair, xs, ys, esc)
        }
        LimitFamily::IV => {
            validate_limit_pair(&pair, &points[1..], limit)?;
            double_contour_grid(&bessel_limit_integrand(p, 0.0, true), &pair, xs, ys, esc)
        }
    })
}

fn validate_limit_pair(pair: &ContourPair, points: &[f64], limit: Option<f64>) -> Result<()> {
    // the inner contour must also enclose the origin (essential singularity
    // or pole there), which `validate` checks through `points`
    pair.validate(points, limit)
}

fn single(v: Result<Vec<Vec<KernelValue>>>) -> Result<KernelValue> {
    Ok(v?[0][0])
}

/// `K_II(tau; xi, eta)`.
pub fn kernel_ii(p: &LimitKernelParams, xi: f64, eta: f64) -> Result<KernelValue> {
    single(kernel_limit_grid(LimitFamily::II, p, None, &[xi], &[eta], Escalation::default()))
}

/// `K_III(xi, eta)`.
pub fn kernel_iii(p: &LimitKernelParams, xi: f64, eta: f64) -> Result<KernelValue> {
    single(kernel_limit_grid(LimitFamily::III, p, None, &[xi], &[eta], Escalation::default()))
}

/// `K_IV(xi, eta)`.
pub fn kernel_iv(p: &LimitKernelParams, xi: f64, eta: f64) -> Result<KernelValue> {
    single(kernel_limit_grid(LimitFamily::IV, p, None, &[xi], &[eta], Escalation::default()))
}

/// `K_II^(0)`: the `m = 0` critical kernel with power `nu + m`, by contours.
pub fn kernel_ii_zero(p: &LimitKernelParams, xi: f64, eta: f64) -> Result<KernelValue> {
    check_args(&[xi, eta])?;
    let pair = default_limit_contours(LimitFamily::II, &LimitKernelParams::new(0, 0, p.tau, vec![]));
    let pair = pair_for(LimitFamily::II, p, pair);
    single(double_contour_grid(
        &bessel_limit_integrand(p, p.tau, false),
        &pair,
        &[xi],
        &[eta],
        Escalation::default(),
    ))
}

/// `K_III^(0)`, the `m = 0` part with power `nu + m`.
pub fn kernel_iii_zero(p: &LimitKernelParams, xi: f64, eta: f64) -> Result<KernelValue> {
    check_args(&[xi, eta])?;
    let pair = default_limit_contours(LimitFamily::III, p);
    single(double_contour_grid(
        &exp_limit_integrand(p, false),
        &pair,
        &[xi],
        &[eta],
        Escalation::default(),
    ))
}

fn pair_for(_family: LimitFamily, p: &LimitKernelParams, fallback: ContourPair) -> ContourPair {
    if p.m == 0 {
        fallback
    } else {
        default_limit_contours(LimitFamily::II, p)
    }
}

// ------------------------------------------------------ Lambda functions

/// `tilde Lambda^(k)` of `family` at `x` on the contour `c0` around the origin.
pub fn lambda_tilde_on(
    family: LimitFamily,
    p: &LimitKernelParams,
    k: usize,
    x: f64,
    c0: &ContourSpec,
) -> Result<f64> {
    check_lambda(family, p, k, x)?;
    let a = p.alpha_ord() as i32;
    let pts = &p.pis[..k - 1];
    let power = a - (k as i32 - 1);
    let v = match family {
        LimitFamily::III => {
            let e = ExpPair { poles: PoleFactor::from_points(power, pts, 1.0) };
            let q = quad_closed(c0, |u| e.outer(u, x).unwrap_or(C64::new(f64::NAN, 0.0)))?;
            q.value / (2.0 * x.powf(0.25))
        }
        _ => {
            if c0.re_range().1 >= 1.0 {
                return Err(Error::Domain("C_0 must stay left of Re = 1".into()));
            }
            let tau = if family == LimitFamily::II { p.tau } else { 0.0 };
            let b = BesselPair {
                kappa: p.kappa,
                scale: 1.0,
                constant: 2.0,
                poles: PoleFactor::from_points(power, pts, tau),
                shift: 0.0,
            };
            let q = quad_closed(c0, |u| b.outer(u, x).unwrap_or(C64::new(f64::NAN, 0.0)))?;
            q.value * 2.0
        }
    };
    Ok(v.re)
}

/// `Lambda^(k)` of `family` at `x` on the contour `cpi`, which must enclose
/// `pi_1..pi_k` and, for II and III, also the origin.
pub fn lambda_on(
    family: LimitFamily,
    p: &LimitKernelParams,
    k: usize,
    x: f64,
    cpi: &ContourSpec,
) -> Result<f64> {
    check_lambda(family, p, k, x)?;
    for &q in &p.pis[..k] {
        if !cpi.encloses(C64::new(q, 0.0)) {
            return Err(Error::Domain(format!("C_pi must enclose pi = {q}")));
        }
    }
    if family != LimitFamily::IV && !cpi.encloses(C64::new(0.0, 0.0)) {
        return Err(Error::Domain("C_pi must enclose the origin for II and III".into()));
    }
    let a = p.alpha_ord() as i32;
    let pts = &p.pis[..k];
    let power = a - k as i32;
    let v = match family {
        LimitFamily::III => {
            let e = ExpPair { poles: PoleFactor::from_points(power, pts, 1.0) };
            let q = quad_closed(cpi, |v| e.inner(v, x).unwrap_or(C64::new(f64::NAN, 0.0)))?;
            q.value / (2.0 * x.powf(0.25))
        }
        _ => {
            let tau = if family == LimitFamily::II { p.tau } else { 0.0 };
            let b = BesselPair {
                kappa: p.kappa,
                scale: 1.0,
                constant: 2.0,
                poles: PoleFactor::from_points(power, pts, tau),
                shift: 0.0,
            };
            quad_closed(cpi, |v| b.inner(v, x).unwrap_or(C64::new(f64::NAN, 0.0)))?.value
        }
    };
    Ok(v.re)
}

fn check_lambda(family: LimitFamily, p: &LimitKernelParams, k: usize, x: f64) -> Result<()> {
    if family == LimitFamily::I {
        return Err(Error::Unsupported("K_I has no Lambda functions".into()));
    }
    p.validate(family)?;
    if k == 0 || k > p.m {
        return Err(Error::Domain(format!("Lambda index k={k} outside 1..={}", p.m)));
    }
    check_args(&[x])
}

/// Default `(C_0, C_pi)` for the Lambda functions: the outer and inner
/// circles of [`default_limit_contours`].
pub fn default_lambda_contours(family: LimitFamily, p: &LimitKernelParams) -> (ContourSpec, ContourSpec) {
    let pair = default_limit_contours(family, p);
    (pair.outer.with_nodes(256), pair.inner.with_nodes(256))
}

/// `tilde Lambda^(k)(x)` on the default contour.
pub fn lambda_tilde(family: LimitFamily, p: &LimitKernelParams, k: usize, x: f64) -> Result<f64> {
    lambda_tilde_on(family, p, k, x, &default_lambda_contours(family, p).0)
}

/// `Lambda^(k)(x)` on the default contour.
pub fn lambda(family: LimitFamily, p: &LimitKernelParams, k: usize, x: f64) -> Result<f64> {
    lambda_on(family, p, k, x, &default_lambda_contours(family, p).1)
}

// ------------------------------------------- real-line forms for large tau

/// `E_a(w) = w^{-a/2} J_a(2 sqrt w)`, real argument.
fn e_reduced(a: u32, w: f64) -> Result<f64> {
    Ok(bessel_j_reduced(a, C64::new(w, 0.0))?.re)
}

/// Trapezoid rule on the real line for a function decaying at both ends,
/// halving `h` until the sum is stable to `tol` relative.
fn trapezoid_line(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, h0: f64, tol: f64) -> Result<f64> {
    let mut h = h0;
    let n0 = ((hi - lo) / h).ceil() as usize;
    let mut sum = 0.0;
    let mut scale = 0.0f64;
    for j in 0..=n0 {
        let v = f(lo + j as f64 * h)?;
        scale = scale.max(v.abs());
        sum += v;
    }
    let mut n = n0;
    let mut prev = sum * h;
    for _ in 0..8 {
        let mut extra = 0.0;
        for j in 0..n {
            let v = f(lo + (j as f64 + 0.5) * h)?;
            scale = scale.max(v.abs());
            extra += v;
        }
        sum += extra;
        n *= 2;
        h /= 2.0;
        let cur = sum * h;
        if (cur - prev).abs() <= tol * scale.max(cur.abs()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Convergence("real-line trapezoid rule did not settle".into()))
}

/// `int_0^inf t^p e^{-x t - 1/t} E_a(c/t) dt` for `x > 0`, by the trapezoid
/// rule in `ln t`.
pub fn laplace_bessel(x: f64, p: i32, c: f64, a: u32) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Laplace-type integral needs x > 0, got {x}")));
    }
    let pf = p as f64 + 1.0;
    let g = |y: f64| -> Result<f64> {
        let t = y.exp();
        let e = e_reduced(a, c / t)?;
        Ok((pf * y - x * t - 1.0 / t).exp() * e)
    };
    // e^{-1/t} is negligible below t = 1/700; the upper end sits where e^{-x t}
    // has beaten the power t^{p+1}
    let lo = -(700f64.ln());
    let hi = ((750.0 + pf.max(0.0) * 10.0) / x).ln();
    trapezoid_line(g, lo, hi, 0.05, 1e-14)
}

/// Radius of the circle `|s| = r` minimising the size bound
/// `1/r + |x| r + 2 sqrt(c/r) + (p+1) ln r` of `s^p e^{x s + 1/s} E_a(c/s) ds`.
fn saddle_radius(x: f64, p: i32, c: f64) -> f64 {
    let phi = |l: f64| {
        let r = l.exp();
        1.0 / r + x.abs() * r + 2.0 * (c / r).sqrt() + (p as f64 + 1.0) * l
    };
    let (mut a, mut b) = (-8.0f64, 8.0f64);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c1 = b - gr * (b - a);
        let c2 = a + gr * (b - a);
        if phi(c1) < phi(c2) {
            b = c2;
        } else {
            a = c1;
        }
    }
    (0.5 * (a + b)).exp()
}

/// `(1/2 pi i) oint s^p e^{x s + 1/s} E_a(c/s) ds` around the origin, by the
/// trapezoid rule on a circle through the saddle region.
pub fn circle_bessel(x: f64, p: i32, c: f64, a: u32) -> Result<f64> {
    let r = saddle_radius(x, p, c);
    let eval = |n: usize| -> Result<(f64, f64)> {
        let mut acc = 0.0;
        let mut big = 0.0f64;
        for j in 0..n {
            let s = C64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
            // ds / (2 pi i) = s dtheta / (2 pi)
            let e = bessel_j_reduced(a, C64::new(c, 0.0) / s)?;
            let v = (s.ln() * (p as f64 + 1.0) + x * s + s.inv()).exp() * e;
            big = big.max(v.norm());
            acc += v.re;
        }
        Ok((acc / n as f64, big))
    };
    let mut n = 64;
    let (mut prev, _) = eval(n)?;
    loop {
        n *= 2;
        let (cur, big) = eval(n)?;
        if (cur - prev).abs() <= 1e-15 * big.max(cur.abs()) * 8.0 {
            return Ok(cur);
        }
        if n >= 1 << 14 {
            return Err(Error::Convergence(format!(
                "circle integral for x={x}, c={c} did not settle"
            )));
        }
        prev = cur;
    }
}

/// `K_II^(0)(tau; xi, eta)` with power `a` by the real-line form
/// `(xi/eta)^{kappa/2} tau^{a+1} int_0^1 w^a F(xi, w) G(eta, w) dw`, where
/// `F = int t^{kappa-1-a} e^{-xi t - 1/t} E_a(tau w/t) dt` and `G` is the
/// matching circle integral. Accurate for any `tau`; used when `tau` is large.
pub fn kernel_ii_zero_laplace(
    a: u32,
    kappa: u32,
    tau: f64,
    xs: &[f64],
    ys: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_args(xs)?;
    check_args(ys)?;
    if !(tau > 0.0) {
        return Err(Error::Validation("tau must be positive".into()));
    }
    let k = kappa as i32;
    let ai = a as i32;
    let eval = |nw: usize| -> Result<Vec<Vec<f64>>> {
        let rule = quadrature::legendre(nw).mapped(0.0, 1.0);
        let fs: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|&x| {
                rule.nodes
                    .iter()
                    .map(|&w| laplace_bessel(x, k - 1 - ai, tau * w, a))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let gs: Vec<Vec<f64>> = ys
            .par_iter()
            .map(|&y| {
                rule.nodes
                    .iter()
                    .map(|&w| circle_bessel(y, -k - 1, tau * w, a))
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                ys.iter()
                    .enumerate()
                    .map(|(j, &y)| {
                        let s: f64 = (0..nw)
                            .map(|q| rule.weights[q] * rule.nodes[q].powi(ai) * fs[i][q] * gs[j][q])
                            .sum();
                        (x / y).powf(kappa as f64 / 2.0) * tau.powi(ai + 1) * s
                    })
                    .collect()
            })
            .collect())
    };
    let mut nw = 48;
    let mut prev = eval(nw)?;
    loop {
        nw *= 2;
        let cur = eval(nw)?;
        let worst = prev
            .iter()
            .flatten()
            .zip(cur.iter().flatten())
            .map(|(p, q)| (p - q).abs() / (1.0 + q.abs()))
            .fold(0.0, f64::max);
        if worst <= 1e-11 {
            return Ok(cur);
        }
        if nw >= 768 {
            return Err(Error::Convergence(format!("w-integral not settled ({worst:e})")));
        }
        prev = cur;
    }
}

/// `K_II` for large `tau`: the `m = 0` part from the real-line form plus the
/// rank-`m` sum with Lambda contours pushed away from the origin (a wide
/// circle left of 1 for `tilde Lambda`, a circle reaching `Re v = tau` for
/// `Lambda`), where `e^{-tau/u}` and `e^{tau/v}` stay bounded.
fn kernel_ii_large_tau(p: &LimitKernelParams, xs: &[f64], ys: &[f64]) -> Result<Vec<Vec<KernelValue>>> {
    let k0 = kernel_ii_zero_laplace(p.alpha_ord(), p.kappa, p.tau, xs, ys)?;
    let mut out: Vec<Vec<KernelValue>> = k0
        .iter()
        .map(|row| row.iter().map(|&v| KernelValue { value: v, im_residual: 0.0, nodes: 0 }).collect())
        .collect();
    if p.m == 0 {
        return Ok(out);
    }
    let (c0, cpi) = large_tau_lambda_contours(p);
    for k in 1..=p.m {
        let lt: Vec<f64> = xs
            .iter()
            .map(|&x| lambda_tilde_on(LimitFamily::II, p, k, x, &c0))
            .collect::<Result<_>>()?;
        let l: Vec<f64> = ys
            .iter()
            .map(|&y| lambda_on(LimitFamily::II, p, k, y, &cpi))
            .collect::<Result<_>>()?;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                v.value += lt[i] * l[j];
            }
        }
    }
    Ok(out)
}

fn large_tau_lambda_contours(p: &LimitKernelParams) -> (ContourSpec, ContourSpec) {
    let rho = p.pmax() + (1.0 - p.pmax()) / 2.0;
    let left = p.tau.max(2.0);
    let c0 = ContourSpec::circle(C64::new((rho - left) / 2.0, 0.0), (rho + left) / 2.0, 1024);
    let right = p.tau.max(2.0);
    let cpi = ContourSpec::circle(C64::new((right - 0.5) / 2.0, 0.0), (right + 0.5) / 2.0, 1024);
    (c0, cpi)
}

// ------------------------------------------------------ integrable form

/// The pair `f`, `g` of the integrable form of `K_II^(0)`, with `alpha = nu + m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrableState {
    pub alpha_ord: u32,
    pub kappa: u32,
    pub tau: f64,
}

impl IntegrableState {
    pub fn new(p: &LimitKernelParams) -> Self {
        IntegrableState { alpha_ord: p.alpha_ord(), kappa: p.kappa, tau: p.tau }
    }

    fn norm(&self) -> f64 {
        self.tau.powf(self.alpha_ord as f64 / 2.0)
    }

    /// `f^{(k)}(x)`, `x > 0`, `k <= 4`: the `t`-integral with `(-t)^k` brought down.
    pub fn f(&self, x: f64, k: u32) -> Result<f64> {
        check_order(k)?;
        let p = self.kappa as i32 - 3 - self.alpha_ord as i32 + k as i32;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * self.norm() * laplace_bessel(x, p, self.tau, self.alpha_ord)?)
    }

    /// `g^{(k)}(x)`, any real `x`, `k <= 4`: the `s`-integral with `s^k` brought down.
    pub fn g(&self, x: f64, k: u32) -> Result<f64> {
        check_order(k)?;
        let p = -(self.kappa as i32) - 3 + k as i32;
        Ok(self.norm() * circle_bessel(x, p, self.tau, self.alpha_ord)?)
    }

    fn fs(&self, x: f64) -> Result<[f64; 5]> {
        Ok([self.f(x, 0)?, self.f(x, 1)?, self.f(x, 2)?, self.f(x, 3)?, self.f(x, 4)?])
    }

    fn gs(&self, x: f64) -> Result<[f64; 5]> {
        Ok([self.g(x, 0)?, self.g(x, 1)?, self.g(x, 2)?, self.g(x, 3)?, self.g(x, 4)?])
    }

    fn consts(&self) -> (f64, f64, f64) {
        let a = self.alpha_ord as f64;
        let k = self.kappa as f64;
        (a - 2.0 * k, a * k - k * k, self.tau)
    }

    /// Residual of the fourth-order equation for `f` at `x`.
    pub fn f_residual(&self, x: f64) -> Result<f64> {
        let f = self.fs(x)?;
        let (b, c, t) = self.consts();
        Ok(x * x * f[4] - (b - 1.0) * x * f[3] - (2.0 * x + c) * f[2] + (b - t + 1.0) * f[1] + f[0])
    }

    /// Residual of the fourth-order equation for `g` at `x`.
    pub fn g_residual(&self, x: f64) -> Result<f64> {
        let g = self.gs(x)?;
        let (b, c, t) = self.consts();
        Ok(x * x * g[4] + (b + 1.0) * x * g[3] - (2.0 * x + c) * g[2] - (b - t - 1.0) * g[1] + g[0])
    }

    /// Largest single term of each equation at `x`, a natural size for the residuals.
    pub fn residual_scale(&self, x: f64) -> Result<(f64, f64)> {
        let f = self.fs(x)?;
        let g = self.gs(x)?;
        let (b, c, t) = self.consts();
        let fmax = [x * x * f[4], (b - 1.0) * x * f[3], (2.0 * x + c) * f[2], (b - t + 1.0) * f[1], f[0]]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let gmax = [x * x * g[4], (b + 1.0) * x * g[3], (2.0 * x + c) * g[2], (b - t - 1.0) * g[1], g[0]]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((fmax, gmax))
    }

    /// The pairing `[f(x), g(y)]`; returns the value and the largest term.
    pub fn pairing(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let f = self.fs(x)?;
        let g = self.gs(y)?;
        Ok(pair_terms(self.consts(), x, y, &f, &g))
    }

    /// Bilinear concomitant `[f, g](x)` with the size of its largest term.
    pub fn concomitant(&self, x: f64) -> Result<(f64, f64)> {
        self.pairing(x, x)
    }
}

fn pair_terms((b, c, t): (f64, f64, f64), x: f64, y: f64, f: &[f64; 5], g: &[f64; 5]) -> (f64, f64) {
    let terms = [
        x * y * f[3] * g[3],
        (g[0] - (b - t - 1.0) * g[1] - y * g[2]) * f[2],
        (f[0] + (b - t + 1.0) * f[1] - x * f[2]) * g[2],
        -c * f[2] * g[2],
        -f[1] * g[1],
    ];
    let big = terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (terms.iter().sum(), big)
}

fn check_order(k: u32) -> Result<()> {
    if k > 4 {
        return Err(Error::Domain(format!("derivative order {k} > 4")));
    }
    Ok(())
}

/// Offset of the two-sided diagonal limit of the integrable form.
pub const DIAGONAL_OFFSET: f64 = 1e-5;

/// `K_II^(0)` from the integrable form `(xi/eta)^{kappa/2} [f(xi), g(eta)] / (eta - xi)`.
/// On the diagonal the symmetric two-sided limit at offsets `h`, `h/2` is
/// combined by Richardson extrapolation.
pub fn kernel_ii_integrable(state: &IntegrableState, xi: f64, eta: f64) -> Result<f64> {
    check_args(&[xi, eta])?;
    let off = |x: f64, y: f64| -> Result<f64> {
        let (v, _) = state.pairing(x, y)?;
        Ok((x / y).powf(state.kappa as f64 / 2.0) * v / (y - x))
    };
    if (xi - eta).abs() > 1e-3 * xi.max(eta) {
        return off(xi, eta);
    }
    let x = 0.5 * (xi + eta);
    let two_sided = |h: f64| -> Result<f64> { Ok(0.5 * (off(x, x + h)? + off(x + h, x)?)) };
    let h = DIAGONAL_OFFSET * x.max(1.0);
    let a1 = two_sided(h)?;
    let a2 = two_sided(h / 2.0)?;
    Ok((4.0 * a2 - a1) / 3.0)
}

// -------------------------------------------------------- transitions

/// The three limits out of `K_II` as `tau` moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// `(1/tau) K_II(tau; x/tau, y/tau) -> K_I` as `tau -> inf` (needs `m = 0`).
    ToI,
    /// `e^{2(sqrt x - sqrt y)/tau} tau^{-2} K_II(tau; x/tau^2, y/tau^2) -> K_III`
    /// as `tau -> 0` with every `pi_l = tau hat pi_l`; `pis` holds `hat pi`.
    ToIII,
    /// `K_II(tau; x, y) -> K_IV` as `tau -> 0`.
    ToIV,
}

impl std::str::FromStr for Transition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "to_i" => Ok(Transition::ToI),
            "to_iii" => Ok(Transition::ToIII),
            "to_iv" => Ok(Transition::ToIV),
            _ => Err(Error::Validation(format!("unknown transition '{s}'"))),
        }
    }
}

/// Distances to the target kernel along a `tau` schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub which: Transition,
    pub taus: Vec<f64>,
    pub sup_error: Vec<f64>,
    pub mean_error: Vec<f64>,
    /// Sup error strictly decreasing over the last three schedule points.
    pub decreasing: bool,
}

/// Rescaled `K_II` and the target kernel of `which` on `grid`.
pub fn transition_values(
    which: Transition,
    p: &LimitKernelParams,
    tau: f64,
    grid: &[(f64, f64)],
) -> Result<Vec<(f64, f64)>> {
    let xs: Vec<f64> = grid.iter().map(|g| g.0).collect();
    let ys: Vec<f64> = grid.iter().map(|g| g.1).collect();
    check_args(&xs)?;
    check_args(&ys)?;
    let mut q = p.clone();
    q.tau = tau;
    match which {
        Transition::ToI => {
            if p.m != 0 {
                return Err(Error::Unsupported("the K_I transition is implemented for m = 0".into()));
            }
            let sx: Vec<f64> = xs.iter().map(|x| x / tau).collect();
            let sy: Vec<f64> = ys.iter().map(|y| y / tau).collect();
            let mut out = Vec::with_capacity(grid.len());
            for (i, &(x, y)) in grid.iter().enumerate() {
                let v = if tau <= 4.0 {
                    kernel_limit_grid(LimitFamily::II, &q, None, &[sx[i]], &[sy[i]], Escalation::default())?
                        [0][0]
                        .value
                } else {
                    kernel_ii_zero_laplace(q.alpha_ord(), q.kappa, tau, &[sx[i]], &[sy[i]])?[0][0]
                };
                out.push((v / tau, kernel_i(p, x, y)?));
            }
            Ok(out)
        }
        Transition::ToIII => {
            p.validate(LimitFamily::III)?;
            let spikes: Vec<f64> = p.pis.iter().map(|h| tau * h).collect();
            let integrand = BesselPair {
                kappa: p.kappa,
                scale: 1.0,
                constant: 2.0 / (tau * tau),
                poles: PoleFactor::from_points(p.nu as i32, &spikes, tau),
                shift: 2.0,
            };
            let base = default_limit_contours(LimitFamily::III, p);
            let (_, ro) = base.outer.as_circle().expect("circle");
            let (_, ri) = base.inner.as_circle().expect("circle");
            let s = tau.min(0.9 / ro);
            let pair = ContourPair::nested(
                ContourSpec::origin_circle(s * ro, 128),
                ContourSpec::origin_circle(s * ri, 128),
            );
            let pts: Vec<f64> = std::iter::once(0.0).chain(spikes.iter().cloned()).collect();
            pair.validate(&pts, Some(1.0))?;
            let mut out = Vec::with_capacity(grid.len());
            for &(x, y) in grid {
                let (sx, sy) = (x / (tau * tau), y / (tau * tau));
                let v = crate::parallel::install(|| {
                    double_contour_grid(&integrand, &pair, &[sx], &[sy], Escalation::default())
                })?[0][0]
                    .value;
                out.push((v, kernel_iii(p, x, y)?.value));
            }
            Ok(out)
        }
        Transition::ToIV => {
            p.validate(LimitFamily::IV)?;
            let mut out = Vec::with_capacity(grid.len());
            for &(x, y) in grid {
                out.push((kernel_ii(&q, x, y)?.value, kernel_iv(p, x, y)?.value));
            }
            Ok(out)
        }
    }
}

/// Sup and mean distance between the rescaled `K_II` and the target along `taus`.
pub fn transition_limits(
    which: Transition,
    p: &LimitKernelParams,
    taus: &[f64],
    grid: &[(f64, f64)],
) -> Result<TransitionReport> {
    let mut sup_error = Vec::with_capacity(taus.len());
    let mut mean_error = Vec::with_capacity(taus.len());
    for &tau in taus {
        let vals = transition_values(which, p, tau, grid)?;
        let errs: Vec<f64> = vals.iter().map(|(a, b)| (a - b).abs()).collect();
        sup_error.push(errs.iter().cloned().fold(0.0, f64::max));
        mean_error.push(errs.iter().sum::<f64>() / errs.len().max(1) as f64);
    }
    let decreasing = trend_decreasing(&sup_error);
    Ok(TransitionReport { which, taus: taus.to_vec(), sup_error, mean_error, decreasing })
}

/// Strict decrease over the last three entries (fewer entries: over all).
pub fn trend_decreasing(errs: &[f64]) -> bool {
    let tail = &errs[errs.len().saturating_sub(3)..];
    tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0])
}
