//! Gap probabilities `det(I - K)` on `(0, s)` by Nystrom discretisation, the
//! smallest-eigenvalue distribution, and the closed form for a single spike.

use crate::biorthogonal::{half_line, BiorthogonalSystem};
use crate::contour::{kernel_contour_grid, kernel_contour_jacobi_grid, ContourPair, Escalation};
use crate::limits::{kernel_limit_grid, LimitFamily, LimitKernelParams};
use crate::quadrature::{self, tanh_sinh_real};
use crate::specfun::{bessel_i_scaled, bessel_k_scaled, factorial};
use crate::{Error, GaussianEnsembleParams, JacobiEnsembleParams, Result, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Anything that can fill the matrix `K(x_i, x_j)` on a set of points.
pub trait Kernel: Sync {
    fn matrix(&self, xs: &[f64]) -> Result<DMatrix<f64>>;
}

impl Kernel for BiorthogonalSystem {
    fn matrix(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        let n = xs.len();
        let vals: Vec<f64> = crate::parallel::install(|| {
            (0..n * n)
                .into_par_iter()
                .map(|k| self.kernel(xs[k % n], xs[k / n]))
                .collect::<Result<_>>()
        })?;
        Ok(DMatrix::from_vec(n, n, vals))
    }
}

fn from_grid(g: Vec<Vec<crate::KernelValue>>) -> DMatrix<f64> {
    let n = g.len();
    DMatrix::from_fn(n, n, |i, j| g[i][j].value)
}

/// Finite-N Gaussian kernel through its double contour integral.
#[derive(Clone, Debug)]
pub struct GaussianContourKernel {
    pub params: GaussianEnsembleParams,
    pub contours: ContourPair,
}

impl Kernel for GaussianContourKernel {
    fn matrix(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        Ok(from_grid(kernel_contour_grid(&self.params, &self.contours, xs, xs, Escalation::default())?))
    }
}

/// Finite-N Jacobi kernel through its double contour integral.
#[derive(Clone, Debug)]
pub struct JacobiContourKernel {
    pub params: JacobiEnsembleParams,
    pub contours: ContourPair,
}

impl Kernel for JacobiContourKernel {
    fn matrix(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        Ok(from_grid(kernel_contour_jacobi_grid(&self.params, &self.contours, xs, xs, Escalation::default())?))
    }
}

/// One of the limiting kernels with its default contours.
#[derive(Clone, Debug)]
pub struct LimitKernel {
    pub family: LimitFamily,
    pub params: LimitKernelParams,
}

impl Kernel for LimitKernel {
    fn matrix(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        Ok(from_grid(kernel_limit_grid(self.family, &self.params, None, xs, xs, Escalation::default())?))
    }
}

/// A kernel given pointwise by a closure.
pub struct FnKernel<F>(pub F);

impl<F: Fn(f64, f64) -> Result<f64> + Sync> Kernel for FnKernel<F> {
    fn matrix(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        let n = xs.len();
        let vals: Vec<f64> = crate::parallel::install(|| {
            (0..n * n).into_par_iter().map(|k| (self.0)(xs[k % n], xs[k / n])).collect::<Result<_>>()
        })?;
        Ok(DMatrix::from_vec(n, n, vals))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Identity,
    SquareMap,
}

/// Quadrature nodes and weights on `(0, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NystromRule {
    pub nodes: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub transform: Transform,
}

impl NystromRule {
    /// Gauss-Legendre on `(0, s)`, or for `SquareMap` on `t in (0, 1)` with
    /// `x = s t^2` and the Jacobian `2 s t` folded into the weights.
    pub fn new(nodes: usize, s: f64, transform: Transform) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("interval end s must be positive, got {s}")));
        }
        if nodes == 0 {
            return Err(Error::Validation("Nystrom rule needs at least one node".into()));
        }
        let gl = quadrature::legendre(nodes).mapped(0.0, 1.0);
        let (points, weights) = match transform {
            Transform::Identity => {
                (gl.nodes.iter().map(|t| s * t).collect(), gl.weights.iter().map(|w| s * w).collect())
            }
            Transform::SquareMap => (
                gl.nodes.iter().map(|t| s * t * t).collect(),
                gl.nodes.iter().zip(&gl.weights).map(|(t, w)| 2.0 * s * t * w).collect(),
            ),
        };
        Ok(NystromRule { nodes, points, weights, transform })
    }
}

/// Node schedule for [`gap_probability`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NystromSettings {
    pub nodes: usize,
    pub max_nodes: usize,
    /// Absolute change between successive doublings accepted as converged.
    pub tol: f64,
    pub transform: Transform,
}

impl Default for NystromSettings {
    fn default() -> Self {
        NystromSettings { nodes: 40, max_nodes: 160, tol: 1e-8, transform: Transform::SquareMap }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapValue {
    /// Determinant as computed, possibly slightly outside `[0, 1]`.
    pub raw: f64,
    /// Change under the last node doubling.
    pub error: f64,
    pub nodes: usize,
    /// Whether `error` met the tolerance before the node cap.
    pub converged: bool,
}

impl GapValue {
    /// `raw` clamped to `[0, 1]` for reporting.
    pub fn value(&self) -> f64 {
        self.raw.clamp(0.0, 1.0)
    }
}

/// `det(delta_ij - sqrt(w_i) K(x_i, x_j) sqrt(w_j))` for one rule.
pub fn fredholm_det(kernel: &dyn Kernel, rule: &NystromRule) -> Result<f64> {
    let k = kernel.matrix(&rule.points)?;
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let n = rule.points.len();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - sw[i] * k[(i, j)] * sw[j]
    });
    let det = a.lu().determinant();
    if !det.is_finite() {
        return Err(Error::Numeric("Fredholm determinant is not finite".into()));
    }
    Ok(det)
}

/// Probability that no eigenvalue lies in `(0, s)`, doubling the node count
/// until two values agree to `settings.tol`. At the node cap the last value is
/// returned with `converged = false`.
pub fn gap_probability(kernel: &dyn Kernel, s: f64, settings: &NystromSettings) -> Result<GapValue> {
    if s == 0.0 {
        return Ok(GapValue { raw: 1.0, error: 0.0, nodes: 0, converged: true });
    }
    let mut n = settings.nodes;
    let mut prev = fredholm_det(kernel, &NystromRule::new(n, s, settings.transform)?)?;
    let mut err = f64::INFINITY;
    while n * 2 <= settings.max_nodes {
        n *= 2;
        let cur = fredholm_det(kernel, &NystromRule::new(n, s, settings.transform)?)?;
        err = (cur - prev).abs();
        prev = cur;
        if err <= settings.tol {
            break;
        }
    }
    Ok(GapValue { raw: prev, error: err, nodes: n, converged: err <= settings.tol })
}

/// `P(smallest eigenvalue <= s) = 1 - gap` on a grid of `s`.
pub fn smallest_eigenvalue_cdf(kernel: &dyn Kernel, s_grid: &[f64], settings: &NystromSettings) -> Result<Vec<f64>> {
    s_grid
        .iter()
        .map(|&s| Ok(1.0 - gap_probability(kernel, s, settings)?.value()))
        .collect()
}

/// Distribution function of the single point of the `m = 1` critical limit
/// as `tau -> 0`: `c int_0^y t^{nu/2} K_{nu-kappa}(2 sqrt t) I_kappa(2 sqrt((1-pi) t)) dt`
/// with `c = 2 pi^{nu+1} / (nu! (1-pi)^{kappa/2})`. `y = inf` is allowed.
pub fn goodform_limit(pi1: f64, nu: u32, kappa: u32, y: f64) -> Result<f64> {
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::Domain(format!("pi_1 must lie in (0, 1), got {pi1}")));
    }
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("y must be non-negative, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let d = (1.0 - pi1).sqrt();
    let c = 2.0 * pi1.powi(nu as i32 + 1) / (factorial(nu) * d.powi(kappa as i32));
    let order = nu as i32 - kappa as i32;
    let mut err = None;
    let mut f = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let r = 2.0 * t.sqrt();
        match (bessel_k_scaled(order, C64::new(r, 0.0)), bessel_i_scaled(kappa as i32, C64::new(d * r, 0.0))) {
            (Ok(k), Ok(i)) => t.powf(nu as f64 / 2.0) * (k.re * i.re) * (-(1.0 - d) * r).exp(),
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                0.0
            }
        }
    };
    let v = if y.is_infinite() {
        half_line(&mut f, 1e-13)?
    } else {
        // t = y s^2 tames the t^{nu/2} K behaviour at 0
        tanh_sinh_real(|s| 2.0 * y * s * f(y * s * s), 0.0, 1.0, 1e-13)?
    };
    if let Some(e) = err {
        return Err(e);
    }
    Ok(c * v)
}
