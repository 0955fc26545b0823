//! Finite-N kernels from the inverse Gram matrix,
//! `K_N(x, y) = sum_{ij} c_ij eta_i(x) xi_j(y)` with `C = (G^{-1})^T`.
//!
//! This route needs distinct, nonzero deltas and is the independent check on
//! the contour kernels.

use crate::ensemble::{joint_pdf, GaussianEnsembleParams};
use crate::quadrature;
use crate::specfun::{bessel_i_scaled, bessel_k_scaled, gamma_int, hyp1f1, Dd};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Parameters of the Jacobi-type product: `n` eigenvalues, exponents
/// `nu`, `nu_prime`, `kappa` with `nu + nu_prime >= kappa`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiEnsembleParams {
    pub n: usize,
    pub nu: u32,
    pub nu_prime: u32,
    pub kappa: u32,
    pub alpha: f64,
    pub deltas: Vec<f64>,
}

impl JacobiEnsembleParams {
    pub fn new(
        n: usize,
        nu: u32,
        nu_prime: u32,
        kappa: u32,
        alpha: f64,
        deltas: Vec<f64>,
    ) -> Result<Self> {
        let p = JacobiEnsembleParams { n, nu, nu_prime, kappa, alpha, deltas };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("n must be >= 1".into()));
        }
        if self.nu + self.nu_prime < self.kappa {
            return Err(Error::Validation("nu + nu_prime >= kappa required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Validation(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.deltas.len() != self.n {
            return Err(Error::Validation(format!(
                "expected {} deltas, got {}",
                self.n,
                self.deltas.len()
            )));
        }
        for (j, &d) in self.deltas.iter().enumerate() {
            if !(d >= 0.0) {
                return Err(Error::Validation(format!("delta[{j}] must be >= 0")));
            }
            if d >= self.alpha {
                return Err(Error::Validation(format!("delta[{j}] >= alpha")));
            }
        }
        Ok(())
    }

    /// `nu + nu' + N`.
    pub fn big_a(&self) -> u32 {
        self.nu + self.nu_prime + self.n as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Family {
    Gaussian(GaussianEnsembleParams),
    Jacobi(JacobiEnsembleParams),
}

/// Biorthogonal structure of one ensemble: the function families, the Gram
/// matrix `g_ij = int eta_i xi_j` (closed form) and `c = (g^{-1})^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiorthogonalSystem {
    pub n: usize,
    pub gram: DMatrix<f64>,
    pub coeffs: DMatrix<f64>,
    /// 2-norm condition number of the Gram matrix after row/column equilibration.
    pub condition: f64,
    family: Family,
}

/// Minimum spacing between deltas (relative to alpha) for the Gram route.
pub const MIN_DELTA_GAP: f64 = 1e-6;

fn check_distinct(deltas: &[f64], alpha: f64, kappa: u32) -> Result<()> {
    let gap = MIN_DELTA_GAP * alpha;
    for i in 0..deltas.len() {
        if deltas[i] < gap && (kappa > 0 || deltas.len() > 1) {
            return Err(Error::SingularGram(format!("delta[{i}] = {} is zero", deltas[i])));
        }
        for j in 0..i {
            if (deltas[i] - deltas[j]).abs() < gap {
                return Err(Error::SingularGram(format!(
                    "delta[{j}] and delta[{i}] coincide ({})",
                    deltas[i]
                )));
            }
        }
    }
    Ok(())
}

/// Closed-form Gram matrix of the Gaussian-coupled ensemble.
pub fn gaussian_gram(p: &GaussianEnsembleParams) -> DMatrix<f64> {
    let n = p.n;
    let (nu, kappa) = (p.nu() as i32, p.kappa() as i32);
    let a = p.alpha;
    DMatrix::from_fn(n, n, |i, j| {
        let i1 = i as i32 + 1;
        let d = p.deltas[j];
        let q = 1.0 - d * d / (a * a);
        gamma_int((nu + i1) as u32) * d.powi(kappa) / (2.0 * a.powi(nu + kappa + i1 + 1))
            * q.powi(-nu - i1)
    })
}

/// Closed-form Gram matrix of the Jacobi-type ensemble.
pub fn jacobi_gram(p: &JacobiEnsembleParams) -> DMatrix<f64> {
    let n = p.n;
    let big_a = p.big_a();
    let lead = gamma_int(p.kappa + 1) * gamma_int(big_a - p.kappa) / gamma_int(big_a + 1);
    let a = p.alpha;
    DMatrix::from_fn(n, n, |i, j| {
        let e = p.nu as i32 + i as i32 + 1;
        let d = p.deltas[j];
        let q = 1.0 - d * d / (a * a);
        lead * gamma_int(e as u32) / a.powi(e) * q.powi(-e)
    })
}

/// `(G^{-1})^T` by full-pivot LU and refinement with compensated residuals,
/// plus the condition number of the equilibrated matrix.
pub fn invert_gram(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = g.nrows();
    // equilibrate: G = R^{-1} H S^{-1}
    let r: Vec<f64> = (0..n).map(|i| 1.0 / g.row(i).amax()).collect();
    let mut h = g.clone();
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] *= r[i];
        }
    }
    let s: Vec<f64> = (0..n).map(|j| 1.0 / h.column(j).amax()).collect();
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] *= s[j];
        }
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularGram("non-finite Gram entries".into()));
    }
    let sv = h.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let lu = h.clone().full_piv_lu();
    let mut x = lu
        .try_inverse()
        .ok_or_else(|| Error::SingularGram("Gram matrix is singular".into()))?;
    for _ in 0..3 {
        // residual I - H X with double-double accumulation
        let mut res = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Dd::new(if i == j { 1.0 } else { 0.0 });
                for k in 0..n {
                    acc = acc.add(Dd::two_prod(-h[(i, k)], x[(k, j)]));
                }
                res[(i, j)] = acc.to_f64();
            }
        }
        let corr = lu.solve(&res).ok_or_else(|| Error::SingularGram("refinement failed".into()))?;
        x += corr;
    }
    // G^{-1} = S H^{-1} R
    let mut inv = x;
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] *= s[i] * r[j];
        }
    }
    Ok((inv.transpose(), condition))
}

/// Gram system of the Gaussian-coupled ensemble.
pub fn gaussian_system(params: &GaussianEnsembleParams) -> Result<BiorthogonalSystem> {
    params.validate()?;
    check_distinct(&params.deltas, params.alpha, params.kappa())?;
    let gram = gaussian_gram(params);
    let (coeffs, condition) = invert_gram(&gram)?;
    Ok(BiorthogonalSystem {
        n: params.n,
        gram,
        coeffs,
        condition,
        family: Family::Gaussian(params.clone()),
    })
}

/// Gram system of the Jacobi-type ensemble.
pub fn jacobi_system(params: &JacobiEnsembleParams) -> Result<BiorthogonalSystem> {
    params.validate()?;
    check_distinct(&params.deltas, params.alpha, 1)?;
    let gram = jacobi_gram(params);
    let (coeffs, condition) = invert_gram(&gram)?;
    Ok(BiorthogonalSystem {
        n: params.n,
        gram,
        coeffs,
        condition,
        family: Family::Jacobi(params.clone()),
    })
}

/// `int_0^1 (1-t)^{p-1} (x/t)^e e^{-a x / t} dt / t` by Gauss-Jacobi in `t`,
/// doubling from 64 nodes until two rules agree to `1e-12` relative.
///
/// For small `a x` the mass sits in a layer of width `~a x` near `t = 0`
/// that no rule in `t` resolves; there the integral is taken in `ln t`.
pub fn jacobi_eta_quadrature(p: u32, e: i32, ax: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return if e > 0 && x == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain(format!("Jacobi eta_{e} needs x > 0, got {x}")))
        };
    }
    if ax < ETA_LOG_SWITCH {
        return jacobi_eta_log(p, e, ax, x);
    }
    let mut prev: Option<f64> = None;
    let mut n = 64;
    loop {
        // weight (1-s)^{p-1} on [-1, 1] with t = (1+s)/2
        let rule = quadrature::jacobi(n, p as f64 - 1.0, 0.0)?;
        let scale = 0.5f64.powi(p as i32);
        let mut acc = 0.0;
        for (s, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = (1.0 + s) / 2.0;
            let v = (e as f64 * (x / t).ln() - ax / t).exp() / t;
            acc += w * v;
        }
        let val = acc * scale;
        if let Some(pv) = prev {
            if (val - pv).abs() <= 1e-12 * val.abs() {
                return Ok(val);
            }
        }
        if n >= 512 {
            return Err(Error::Convergence(format!(
                "Jacobi eta quadrature at x={x} did not settle"
            )));
        }
        prev = Some(val);
        n *= 2;
    }
}

const ETA_LOG_SWITCH: f64 = 0.5;

/// Same integral in `s = ln t` on `[ln(a x / 750), 0]` by composite
/// Gauss-Legendre, panels doubled until two passes agree to `1e-12`.
fn jacobi_eta_log(p: u32, e: i32, ax: f64, x: f64) -> Result<f64> {
    let lo = (ax / 750.0).ln();
    let rule = quadrature::legendre(20);
    let f = |s: f64| {
        let t = s.exp();
        ((p as f64 - 1.0) * (-t).ln_1p() + e as f64 * (x.ln() - s) - ax / t).exp()
    };
    let pass = |panels: usize| {
        let h = -lo / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let a = lo + k as f64 * h;
            for (u, w) in rule.nodes.iter().zip(&rule.weights) {
                acc += w * f(a + (u + 1.0) * h / 2.0);
            }
        }
        acc * h / 2.0
    };
    let mut panels = 8;
    let mut prev = pass(panels);
    while panels < 1024 {
        panels *= 2;
        let val = pass(panels);
        if (val - prev).abs() <= 1e-12 * val.abs() {
            return Ok(val);
        }
        prev = val;
    }
    Err(Error::Convergence(format!("Jacobi eta quadrature at x={x} did not settle")))
}

impl BiorthogonalSystem {
    /// `xi_j(x)`, `j` zero based.
    pub fn xi(&self, j: usize, x: f64) -> Result<f64> {
        match &self.family {
            Family::Gaussian(p) => {
                let z = 2.0 * p.deltas[j] * x.sqrt();
                Ok(bessel_i_scaled(p.kappa() as i32, C64::new(z, 0.0))?.re * z.exp())
            }
            Family::Jacobi(p) => {
                let z = p.deltas[j] * p.deltas[j] * x / p.alpha;
                let f = hyp1f1(p.big_a() as i64 + 1, p.kappa as i64 + 1, C64::new(z, 0.0))?.re;
                Ok(x.powi(p.kappa as i32) * f)
            }
        }
    }

    /// `eta_i(x)`, `i` zero based.
    pub fn eta(&self, i: usize, x: f64) -> Result<f64> {
        match &self.family {
            Family::Gaussian(p) => {
                let z = 2.0 * p.alpha * x.sqrt();
                let order = p.nu() as i32 - p.kappa() as i32 + i as i32;
                let k = bessel_k_scaled(order, C64::new(z, 0.0))?.re;
                Ok(x.powf((p.nu() as f64 + i as f64) / 2.0) * k * (-z).exp())
            }
            Family::Jacobi(p) => {
                let e = p.nu as i32 - p.kappa as i32 + i as i32;
                jacobi_eta_quadrature(p.big_a() - p.kappa, e, p.alpha * x, x)
            }
        }
    }

    pub fn kernel(&self, x: f64, y: f64) -> Result<f64> {
        kernel_gram(self, x, y)
    }
}

/// `K_N(x, y) = sum_ij c_ij eta_i(x) xi_j(y)`.
pub fn kernel_gram(system: &BiorthogonalSystem, x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::Domain("kernel arguments must be positive".into()));
    }
    let n = system.n;
    let eta: Vec<f64> = (0..n).map(|i| system.eta(i, x)).collect::<Result<_>>()?;
    let xi: Vec<f64> = (0..n).map(|j| system.xi(j, y)).collect::<Result<_>>()?;
    let mut acc = Dd::new(0.0);
    for i in 0..n {
        for j in 0..n {
            acc = acc.add(Dd::two_prod(system.coeffs[(i, j)] * eta[i], xi[j]));
        }
    }
    Ok(acc.to_f64())
}

/// `int_0^inf f(t) dt` by tanh-sinh after `t = (u / (1 - u))^2`.
pub(crate) fn half_line(mut f: impl FnMut(f64) -> f64, tol: f64) -> Result<f64> {
    quadrature::tanh_sinh_real(
        |u| {
            let r = u / (1.0 - u);
            let jac = 2.0 * r / ((1.0 - u) * (1.0 - u));
            let v = f(r * r);
            if v == 0.0 {
                0.0
            } else {
                v * jac
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// One-point density `N int P_N(x, x_2, ..) dx_2 ..` by brute-force quadrature
/// of the joint density, for `N <= 3`.
pub fn density_from_pdf_oracle(params: &GaussianEnsembleParams, x: f64) -> Result<f64> {
    params.validate()?;
    let n = params.n;
    match n {
        1 => Ok(joint_pdf(params, &[x])?.value),
        2 => {
            let v = half_line(|t| if t > 0.0 { pdf_or_zero(params, &[x, t]) } else { 0.0 }, 1e-10)?;
            Ok(2.0 * v)
        }
        3 => {
            // symmetric in (t, s): integrate over s < t and double
            let v = half_line(
                |t| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    // well below the outer tolerance, or the outer rule sees
                    // noise and never settles; the absolute floor covers tiny
                    // t where the density itself is rounding noise
                    let inner = quadrature::tanh_sinh_abs(
                        |s| C64::new(if s > 0.0 { pdf_or_zero(params, &[x, t, s]) } else { 0.0 }, 0.0),
                        0.0,
                        t,
                        1e-12,
                        1e-15,
                    );
                    inner.map(|v| v.re).unwrap_or(f64::NAN)
                },
                1e-7,
            )?;
            if !v.is_finite() {
                return Err(Error::Convergence("inner quadrature failed".into()));
            }
            Ok(3.0 * 2.0 * v)
        }
        _ => Err(Error::Unsupported(format!("density oracle needs N <= 3, got {n}"))),
    }
}

fn pdf_or_zero(p: &GaussianEnsembleParams, x: &[f64]) -> f64 {
    joint_pdf(p, x).map(|v| v.value).unwrap_or(0.0)
}
