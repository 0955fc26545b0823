//! Closed contours, trapezoid quadrature on them, and the finite-N kernels as
//! double contour integrals (Gaussian-coupled and Jacobi-type).
//!
//! Every double integral in the crate has a separable integrand
//! `A(u, x) B(v, y) / (u - v)`, so a grid of kernel values costs one pass of
//! factor evaluations plus a dense double sum.

use crate::biorthogonal::JacobiEnsembleParams;
use crate::ensemble::GaussianEnsembleParams;
use crate::specfun::{bessel_i_reduced_exp, bessel_k_scaled, factorial, hyp1f1};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I2PI: C64 = C64 { re: 0.0, im: 2.0 * PI };

/// Shape of a closed counterclockwise contour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ContourKind {
    Circle { center: C64, radius: f64 },
    /// Axis-aligned rectangle symmetric about the real axis.
    Rectangle { re_min: f64, re_max: f64, half_height: f64 },
    /// The circle `|z - zero| = ratio |z - pole|`, sampled uniformly in the
    /// Moebius angle of `(z - zero) / (z - pole)`. Nodes crowd towards the side
    /// facing `zero` (for `ratio < 1`) or `pole` (for `ratio > 1`), which is
    /// where integrands with high-order zeros and poles vary fastest.
    Apollonius { zero: C64, pole: C64, ratio: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub kind: ContourKind,
    pub nodes: usize,
}

/// Quadrature value with a node-halving error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadValue {
    pub value: C64,
    pub error: f64,
}

impl ContourSpec {
    pub fn circle(center: C64, radius: f64, nodes: usize) -> Self {
        ContourSpec { kind: ContourKind::Circle { center, radius }, nodes }
    }

    pub fn origin_circle(radius: f64, nodes: usize) -> Self {
        Self::circle(C64::new(0.0, 0.0), radius, nodes)
    }

    pub fn rectangle(re_min: f64, re_max: f64, half_height: f64, nodes: usize) -> Self {
        ContourSpec { kind: ContourKind::Rectangle { re_min, re_max, half_height }, nodes }
    }

    pub fn apollonius(zero: C64, pole: C64, ratio: f64, nodes: usize) -> Self {
        ContourSpec { kind: ContourKind::Apollonius { zero, pole, ratio }, nodes }
    }

    pub fn with_nodes(&self, nodes: usize) -> Self {
        ContourSpec { kind: self.kind.clone(), nodes }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 32 || self.nodes % 2 == 1 {
            return Err(Error::Validation(format!(
                "contour needs an even node count >= 32, got {}",
                self.nodes
            )));
        }
        let ok = match &self.kind {
            ContourKind::Circle { radius, .. } => *radius > 0.0 && radius.is_finite(),
            ContourKind::Rectangle { re_min, re_max, half_height } => {
                re_max > re_min && *half_height > 0.0
            }
            ContourKind::Apollonius { zero, pole, ratio } => {
                *ratio > 0.0 && (*ratio - 1.0).abs() > 1e-14 && zero != pole
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("degenerate contour {:?}", self.kind)))
        }
    }

    /// Centre and radius for the circular kinds.
    pub fn as_circle(&self) -> Option<(C64, f64)> {
        match self.kind {
            ContourKind::Circle { center, radius } => Some((center, radius)),
            ContourKind::Apollonius { zero, pole, ratio } => {
                let k2 = ratio * ratio;
                let center = (zero - pole * k2) / (1.0 - k2);
                let radius = ratio * (zero - pole).norm() / (1.0 - k2).abs();
                Some((center, radius))
            }
            ContourKind::Rectangle { .. } => None,
        }
    }

    /// `(min Re, max Re)` over the contour.
    pub fn re_range(&self) -> (f64, f64) {
        match self.kind {
            ContourKind::Rectangle { re_min, re_max, .. } => (re_min, re_max),
            _ => {
                let (c, r) = self.as_circle().expect("circular contour");
                (c.re - r, c.re + r)
            }
        }
    }

    /// Whether `p` lies strictly inside the contour.
    pub fn encloses(&self, p: C64) -> bool {
        match self.kind {
            ContourKind::Rectangle { re_min, re_max, half_height } => {
                p.re > re_min && p.re < re_max && p.im.abs() < half_height
            }
            _ => {
                let (c, r) = self.as_circle().expect("circular contour");
                (p - c).norm() < r
            }
        }
    }

    /// Distance from `p` to the contour curve.
    pub fn distance(&self, p: C64) -> f64 {
        match self.kind {
            ContourKind::Rectangle { re_min, re_max, half_height } => {
                let dx = (re_min - p.re).max(p.re - re_max);
                let dy = p.im.abs() - half_height;
                if dx <= 0.0 && dy <= 0.0 {
                    (-dx).min(-dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
            _ => {
                let (c, r) = self.as_circle().expect("circular contour");
                ((p - c).norm() - r).abs()
            }
        }
    }

    /// Nodes `z_j` and weights `w_j` with `sum_j w_j f(z_j) ~ (1/2 pi i) oint f dz`.
    pub fn points(&self) -> Vec<(C64, C64)> {
        let n = self.nodes;
        match self.kind {
            ContourKind::Circle { center, radius } => (0..n)
                .map(|j| {
                    let e = C64::from_polar(radius, 2.0 * PI * j as f64 / n as f64);
                    (center + e, e / n as f64)
                })
                .collect(),
            ContourKind::Apollonius { zero, pole, ratio } => {
                // z(w) = (zero - pole w) / (1 - w), w = ratio e^{i theta}
                let sign = if ratio < 1.0 { 1.0 } else { -1.0 };
                (0..n)
                    .map(|j| {
                        let w = C64::from_polar(ratio, 2.0 * PI * j as f64 / n as f64);
                        let om = C64::new(1.0, 0.0) - w;
                        let z = (zero - pole * w) / om;
                        let dz = (zero - pole) / (om * om);
                        (z, dz * w * (sign / n as f64))
                    })
                    .collect()
            }
            ContourKind::Rectangle { re_min, re_max, half_height } => {
                let per_side = (n / 4).max(8);
                let rule = crate::quadrature::legendre(per_side);
                let corners = [
                    C64::new(re_min, -half_height),
                    C64::new(re_max, -half_height),
                    C64::new(re_max, half_height),
                    C64::new(re_min, half_height),
                ];
                let mut out = Vec::with_capacity(4 * per_side);
                for s in 0..4 {
                    let (a, b) = (corners[s], corners[(s + 1) % 4]);
                    let half = (b - a) / 2.0;
                    let mid = (a + b) / 2.0;
                    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                        out.push((mid + half * *t, half * *w / I2PI));
                    }
                }
                out
            }
        }
    }
}

/// `(1/2 pi i) oint f(z) dz` by the contour's rule, with the difference to the
/// half-node rule as error estimate.
pub fn quad_closed(contour: &ContourSpec, f: impl Fn(C64) -> C64) -> Result<QuadValue> {
    contour.validate()?;
    let sum = |spec: &ContourSpec| -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (z, w) in spec.points() {
            let v = f(z);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Numeric(format!("non-finite integrand at z = {z}")));
            }
            acc += w * v;
        }
        Ok(acc)
    };
    let full = sum(contour)?;
    let half = sum(&contour.with_nodes(contour.nodes / 2))?;
    Ok(QuadValue { value: full, error: (full - half).norm() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Configuration {
    DisjointRight,
    Nested,
}

/// Outer (`u`) and inner (`v`) contours of a double integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourPair {
    pub outer: ContourSpec,
    pub inner: ContourSpec,
    pub configuration: Configuration,
}

impl ContourPair {
    pub fn nested(outer: ContourSpec, inner: ContourSpec) -> Self {
        ContourPair { outer, inner, configuration: Configuration::Nested }
    }

    pub fn disjoint(outer: ContourSpec, inner: ContourSpec) -> Self {
        ContourPair { outer, inner, configuration: Configuration::DisjointRight }
    }

    pub fn with_nodes(&self, nodes: usize) -> Self {
        ContourPair {
            outer: self.outer.with_nodes(nodes),
            inner: self.inner.with_nodes(nodes),
            configuration: self.configuration,
        }
    }

    /// Checks the geometric requirements: the outer contour encloses the
    /// origin (and stays left of `re_limit` if given), the inner one encloses
    /// `points`, and the two curves do not meet.
    pub fn validate(&self, points: &[f64], re_limit: Option<f64>) -> Result<()> {
        self.outer.validate()?;
        self.inner.validate()?;
        let origin = C64::new(0.0, 0.0);
        if !self.outer.encloses(origin) {
            return Err(Error::Domain("outer contour must enclose the origin".into()));
        }
        if let Some(lim) = re_limit {
            let (_, hi) = self.outer.re_range();
            if hi >= lim {
                return Err(Error::Domain(format!(
                    "outer contour reaches Re = {hi}, must stay below {lim}"
                )));
            }
        }
        for &p in points {
            if !self.inner.encloses(C64::new(p, 0.0)) {
                return Err(Error::Domain(format!("inner contour must enclose {p}")));
            }
        }
        match self.configuration {
            Configuration::DisjointRight => {
                let (_, out_hi) = self.outer.re_range();
                let (in_lo, _) = self.inner.re_range();
                if in_lo <= out_hi {
                    return Err(Error::Domain("inner contour must lie right of the outer one".into()));
                }
            }
            Configuration::Nested => {
                let ok = self
                    .inner
                    .points()
                    .iter()
                    .all(|(z, _)| self.outer.encloses(*z) && self.outer.distance(*z) > 0.0);
                if !ok {
                    return Err(Error::Domain("inner contour must lie inside the outer one".into()));
                }
            }
        }
        Ok(())
    }
}

/// Node escalation for double contour integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Escalation {
    pub max_nodes: usize,
    /// Accept when `|K(n) - K(2n)| <= tol (1 + |K|)` over the whole grid.
    pub tol: f64,
}

impl Default for Escalation {
    fn default() -> Self {
        Escalation { max_nodes: 4096, tol: 1e-10 }
    }
}

/// Separable integrand `A(u, x) B(v, y) / (u - v)` of a double contour integral.
pub trait Separable: Sync {
    fn outer(&self, u: C64, x: f64) -> Result<C64>;
    fn inner(&self, v: C64, y: f64) -> Result<C64>;
    /// Constant in front of `(1/2 pi i)^2 oint oint`.
    fn prefactor(&self, x: f64, y: f64) -> f64;
}

/// Kernel value; `im_residual` is the imaginary part left by the quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub im_residual: f64,
    pub nodes: usize,
}

fn factor_table(
    pts: &[(C64, C64)],
    args: &[f64],
    f: impl Fn(C64, f64) -> Result<C64> + Sync,
) -> Result<Vec<Vec<C64>>> {
    args.par_iter()
        .map(|&x| {
            pts.iter()
                .map(|&(z, w)| {
                    let v = f(z, x)?;
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::Numeric(format!("non-finite factor at z = {z}, arg {x}")));
                    }
                    Ok(w * v)
                })
                .collect()
        })
        .collect()
}

/// One evaluation at fixed node counts, complex values on the `xs` by `ys` grid.
pub fn double_contour_once(
    integrand: &impl Separable,
    pair: &ContourPair,
    xs: &[f64],
    ys: &[f64],
) -> Result<Vec<Vec<C64>>> {
    let up = pair.outer.points();
    let vp = pair.inner.points();
    let a = factor_table(&up, xs, |u, x| integrand.outer(u, x))?;
    let b = factor_table(&vp, ys, |v, y| integrand.inner(v, y))?;
    // c[y][j] = sum_k B(v_k, y) / (u_j - v_k)
    let c: Vec<Vec<C64>> = b
        .par_iter()
        .map(|by| {
            up.iter()
                .map(|&(u, _)| {
                    vp.iter()
                        .zip(by)
                        .fold(C64::new(0.0, 0.0), |acc, (&(v, _), &bv)| acc + bv / (u - v))
                })
                .collect()
        })
        .collect();
    Ok(xs
        .iter()
        .zip(&a)
        .map(|(&x, ax)| {
            ys.iter()
                .zip(&c)
                .map(|(&y, cy)| {
                    let s = ax.iter().zip(cy).fold(C64::new(0.0, 0.0), |acc, (p, q)| acc + p * q);
                    s * integrand.prefactor(x, y)
                })
                .collect()
        })
        .collect())
}

/// Grid evaluation with node doubling until successive grids agree.
pub fn double_contour_grid(
    integrand: &impl Separable,
    pair: &ContourPair,
    xs: &[f64],
    ys: &[f64],
    esc: Escalation,
) -> Result<Vec<Vec<KernelValue>>> {
    if xs.is_empty() || ys.is_empty() {
        return Ok(vec![Vec::new(); xs.len()]);
    }
    let mut nodes = pair.outer.nodes.max(pair.inner.nodes);
    let mut prev = double_contour_once(integrand, &pair.with_nodes(nodes), xs, ys)?;
    loop {
        let next_nodes = nodes * 2;
        if next_nodes > esc.max_nodes {
            let worst = worst_change(&prev, &prev);
            return Err(Error::Convergence(format!(
                "double contour integral not settled at {nodes} nodes ({worst:e})"
            )));
        }
        let cur = double_contour_once(integrand, &pair.with_nodes(next_nodes), xs, ys)?;
        let change = worst_change(&prev, &cur);
        if change <= esc.tol {
            return Ok(cur
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|v| KernelValue { value: v.re, im_residual: v.im, nodes: next_nodes })
                        .collect()
                })
                .collect());
        }
        if next_nodes * 2 > esc.max_nodes {
            return Err(Error::Convergence(format!(
                "double contour integral changed by {change:e} at {next_nodes} nodes"
            )));
        }
        prev = cur;
        nodes = next_nodes;
    }
}

fn worst_change(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(p, q)| (p - q).norm() / (1.0 + q.norm())))
        .fold(0.0, f64::max)
}

/// Rational part `u^{-p} prod_l (1 - a_l/u)^{m_l} e^{-tau/u}` shared by the
/// Bessel-type integrands; the inner factor uses its reciprocal.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleFactor {
    pub power: i32,
    pub zeros: Vec<(f64, u32)>,
    pub tau: f64,
}

impl PoleFactor {
    /// Groups equal points into `(point, multiplicity)`.
    pub fn from_points(power: i32, points: &[f64], tau: f64) -> Self {
        let mut zeros: Vec<(f64, u32)> = Vec::new();
        for &p in points {
            match zeros.iter_mut().find(|(q, _)| *q == p) {
                Some(e) => e.1 += 1,
                None => zeros.push((p, 1)),
            }
        }
        PoleFactor { power, zeros, tau }
    }

    /// `ln` of the outer factor at `u` (the inner one is its negative at `v`).
    pub fn log_outer(&self, u: C64) -> C64 {
        let mut s = -(self.power as f64) * u.ln();
        for &(a, m) in &self.zeros {
            s += (m as f64) * (C64::new(1.0, 0.0) - a / u).ln();
        }
        s - self.tau / u
    }

    pub fn outer(&self, u: C64) -> C64 {
        let mut p = u.powi(-self.power) * (-self.tau / u).exp();
        for &(a, m) in &self.zeros {
            p *= (C64::new(1.0, 0.0) - a / u).powu(m);
        }
        p
    }

    pub fn inner(&self, v: C64) -> C64 {
        let mut p = v.powi(self.power) * (self.tau / v).exp();
        for &(a, m) in &self.zeros {
            p /= (C64::new(1.0, 0.0) - a / v).powu(m);
        }
        p
    }
}

/// `c K_{-kappa}(2 s sqrt((1-u)x)) I_kappa(2 s sqrt((1-v)y)) ((1-u)/(1-v))^{kappa/2}
///  R(u)/R(v) / (u - v)` with the exponential weight `e^{shift (sqrt x - sqrt y)}`.
///
/// With `s = alpha`, `c = 2 alpha^2`, `R` from the `N` points `1 - delta_l^2/alpha^2`
/// and power `nu`, this is the Gaussian finite-N kernel; the limiting kernels
/// II and IV and the transition maps reuse it with other constants.
#[derive(Clone, Debug, PartialEq)]
pub struct BesselPair {
    pub kappa: u32,
    pub scale: f64,
    pub constant: f64,
    pub poles: PoleFactor,
    pub shift: f64,
}

impl Separable for BesselPair {
    fn outer(&self, u: C64, x: f64) -> Result<C64> {
        let t = (C64::new(1.0, 0.0) - u).sqrt();
        let z = 2.0 * self.scale * x.sqrt() * t;
        let k = bessel_k_scaled(self.kappa as i32, z)?;
        let e = (-z + self.shift * x.sqrt() + self.poles.log_outer(u)).exp();
        Ok(k * t.powu(self.kappa) * e)
    }

    fn inner(&self, v: C64, y: f64) -> Result<C64> {
        let w = (C64::new(1.0, 0.0) - v) * (self.scale * self.scale * y);
        let (m, ex) = bessel_i_reduced_exp(self.kappa, w)?;
        let pre = (self.scale * y.sqrt()).powi(self.kappa as i32);
        let e = (C64::new(ex - self.shift * y.sqrt(), 0.0) - self.poles.log_outer(v)).exp();
        Ok(m * pre * e)
    }

    fn prefactor(&self, _x: f64, _y: f64) -> f64 {
        self.constant
    }
}

/// Points `1 - delta_l^2 / alpha^2` around which the inner contour must wind.
pub fn coupling_points(alpha: f64, deltas: &[f64]) -> Vec<f64> {
    deltas.iter().map(|d| 1.0 - d * d / (alpha * alpha)).collect()
}

/// Default contours for the points `a_l = 1 - delta_l^2/alpha^2 > 0`.
///
/// Both curves are Apollonius circles `|z - A| = k |z|` about the harmonic
/// centre `A` of the points, which are close to level lines of
/// `|u^{-N} prod (u - a_l)|`. This keeps the size of the integrand (and so the
/// cancellation in the sum) within about `e^4` of the result. The inner ratio
/// is `max(sqrt s, N/(N+2))`, with `s` the spread of the points, and the outer
/// ratio is its reciprocal.
pub fn default_contours_for_points(points: &[f64]) -> Result<ContourPair> {
    if points.is_empty() {
        return Ok(ContourPair::nested(
            ContourSpec::origin_circle(0.5, 64),
            ContourSpec::origin_circle(0.25, 64),
        ));
    }
    let n = points.len() as f64;
    let amin = points.iter().cloned().fold(f64::INFINITY, f64::min);
    let amax = points.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(amin > 0.0) {
        return Err(Error::Domain("a coupling value reaches alpha (point at 0)".into()));
    }
    let centre = 2.0 * amin * amax / (amin + amax);
    let spread = (amax - amin) / (amax + amin);
    let k = spread.sqrt().max(n / (n + 2.0));
    let zero = C64::new(centre, 0.0);
    let origin = C64::new(0.0, 0.0);
    Ok(ContourPair::disjoint(
        ContourSpec::apollonius(zero, origin, 1.0 / k, 64),
        ContourSpec::apollonius(zero, origin, k, 64),
    ))
}

/// Default contour pair for the Gaussian-coupled ensemble.
pub fn default_contours(params: &GaussianEnsembleParams) -> Result<ContourPair> {
    params.validate()?;
    default_contours_for_points(&coupling_points(params.alpha, &params.deltas))
}

pub(crate) fn gaussian_integrand(params: &GaussianEnsembleParams) -> BesselPair {
    let a = coupling_points(params.alpha, &params.deltas);
    BesselPair {
        kappa: params.kappa(),
        scale: params.alpha,
        constant: 2.0 * params.alpha * params.alpha,
        poles: PoleFactor::from_points(params.nu() as i32, &a, 0.0),
        shift: 0.0,
    }
}

/// Finite-N Gaussian-coupled kernel on a grid via the double contour integral.
pub fn kernel_contour_grid(
    params: &GaussianEnsembleParams,
    contours: &ContourPair,
    xs: &[f64],
    ys: &[f64],
    esc: Escalation,
) -> Result<Vec<Vec<KernelValue>>> {
    params.validate()?;
    check_positive(xs.iter().chain(ys))?;
    let a = coupling_points(params.alpha, &params.deltas);
    contours.validate(&a, Some(1.0))?;
    crate::parallel::install(|| {
        double_contour_grid(&gaussian_integrand(params), contours, xs, ys, esc)
    })
}

/// Finite-N Gaussian-coupled kernel `K_N(x, y)` via the double contour integral.
pub fn kernel_contour(
    params: &GaussianEnsembleParams,
    contours: &ContourPair,
    x: f64,
    y: f64,
) -> Result<KernelValue> {
    Ok(kernel_contour_grid(params, contours, &[x], &[y], Escalation::default())?[0][0])
}

fn check_positive<'a>(vals: impl Iterator<Item = &'a f64>) -> Result<()> {
    for &v in vals {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("kernel arguments must be positive, got {v}")));
        }
    }
    Ok(())
}

/// `f_1(n, k; z) = n! / (k! (n-k-1)!) 1F1(n+1; k+1; z)`.
pub fn jacobi_f1(n: u32, k: u32, z: C64) -> Result<C64> {
    if n <= k {
        return Err(Error::Domain(format!("f1 needs n > kappa, got n={n}, kappa={k}")));
    }
    let coef = ((n - k)..=n).fold(1.0, |acc, j| acc * j as f64) / factorial(k);
    Ok(hyp1f1(n as i64 + 1, k as i64 + 1, z)? * coef)
}

/// `f_2(n, k; z) = int_0^1 (1-t)^{n-1} t^{k-1} e^{-z/t} dt` for `Re z > 0`.
///
/// With `t = 1/(1+s)` this is `e^{-z} int_0^inf s^{n-1} (1+s)^{-n-k} e^{-z s} ds`;
/// the ray is rotated onto `arg s = -arg z` and integrated by the trapezoid
/// rule in `ln s`, which converges geometrically.
pub fn jacobi_f2(n: u32, k: i32, z: C64) -> Result<C64> {
    if n == 0 {
        return Err(Error::Domain("f2 needs n >= 1".into()));
    }
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!("f2 needs Re z > 0, got {z}")));
    }
    let (r, phi) = z.to_polar();
    let rot = C64::from_polar(1.0, -phi);
    let nf = n as f64;
    let kf = k as f64;
    let h = 0.125;
    let lo = -(45.0 / nf) - 1.0;
    let hi = (60.0 / r).ln().max(lo + 1.0) + 1.0;
    let steps = ((hi - lo) / h).ceil() as usize;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=steps {
        let y = lo + j as f64 * h;
        let sigma = y.exp();
        let s = sigma * rot;
        // s^n (1+s)^{-n-k} e^{-r sigma}: the rotation cancels the phase of z
        let l = s.ln() * nf - (C64::new(1.0, 0.0) + s).ln() * (nf + kf) - r * sigma;
        acc += l.exp();
    }
    Ok(acc * h * (-z).exp())
}

/// Jacobi-type integrand `f2(n2, k; alpha(1-u)x) f1(n1, k; alpha(1-v)y) R(u)/R(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiPair {
    pub kappa: u32,
    pub n1: u32,
    pub n2: u32,
    pub alpha: f64,
    pub poles: PoleFactor,
    /// Weight `e^{shift (sqrt x - sqrt y)}`, zero for the plain kernel.
    pub shift: f64,
}

impl Separable for JacobiPair {
    fn outer(&self, u: C64, x: f64) -> Result<C64> {
        let z = (C64::new(1.0, 0.0) - u) * (self.alpha * x);
        let e = (self.shift * x.sqrt()).exp();
        Ok(jacobi_f2(self.n2, self.kappa as i32, z)? * self.poles.outer(u) * e)
    }

    fn inner(&self, v: C64, y: f64) -> Result<C64> {
        let z = (C64::new(1.0, 0.0) - v) * (self.alpha * y);
        let e = (-self.shift * y.sqrt()).exp();
        Ok(jacobi_f1(self.n1, self.kappa, z)? * self.poles.inner(v) * e)
    }

    fn prefactor(&self, x: f64, y: f64) -> f64 {
        self.alpha * (y / x).powi(self.kappa as i32)
    }
}

pub(crate) fn jacobi_integrand(p: &JacobiEnsembleParams) -> JacobiPair {
    let n = p.n as u32;
    JacobiPair {
        kappa: p.kappa,
        n1: p.nu + p.nu_prime + n,
        n2: p.nu + p.nu_prime + n - p.kappa,
        alpha: p.alpha,
        poles: PoleFactor::from_points(p.nu as i32, &coupling_points(p.alpha, &p.deltas), 0.0),
        shift: 0.0,
    }
}

/// Jacobi-type finite-N kernel on a grid.
pub fn kernel_contour_jacobi_grid(
    params: &JacobiEnsembleParams,
    contours: &ContourPair,
    xs: &[f64],
    ys: &[f64],
    esc: Escalation,
) -> Result<Vec<Vec<KernelValue>>> {
    params.validate()?;
    check_positive(xs.iter().chain(ys))?;
    contours.validate(&coupling_points(params.alpha, &params.deltas), Some(1.0))?;
    crate::parallel::install(|| {
        double_contour_grid(&jacobi_integrand(params), contours, xs, ys, esc)
    })
}

/// Jacobi-type finite-N kernel `K_N(x, y)`.
pub fn kernel_contour_jacobi(
    params: &JacobiEnsembleParams,
    contours: &ContourPair,
    x: f64,
    y: f64,
) -> Result<KernelValue> {
    Ok(kernel_contour_jacobi_grid(params, contours, &[x], &[y], Escalation::default())?[0][0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residues_on_circles() {
        let c = ContourSpec::origin_circle(1.0, 64);
        let v = quad_closed(&c, |z| z.inv()).unwrap();
        assert!((v.value - 1.0).norm() < 1e-13);
        for k in 0..5 {
            let v = quad_closed(&c, |z| z.powu(k)).unwrap();
            assert!(v.value.norm() < 1e-13);
        }
        let c2 = ContourSpec::origin_circle(2.0, 64);
        let v = quad_closed(&c2, |z| z.exp() / z.powu(3)).unwrap();
        assert!((v.value - 0.5).norm() < 1e-12);
    }

    #[test]
    fn apollonius_orientation() {
        let zero = C64::new(1.0, 0.0);
        let pole = C64::new(0.0, 0.0);
        // ratio < 1 encloses `zero`, ratio > 1 encloses `pole`
        let a = ContourSpec::apollonius(zero, pole, 0.5, 128);
        let v = quad_closed(&a, |z| (z - 1.0).inv()).unwrap();
        assert!((v.value - 1.0).norm() < 1e-12);
        let b = ContourSpec::apollonius(zero, pole, 2.0, 128);
        let v = quad_closed(&b, |z| z.inv()).unwrap();
        assert!((v.value - 1.0).norm() < 1e-12);
        assert!(b.encloses(pole) && !b.encloses(zero));
    }

    #[test]
    fn rectangle_rule() {
        let r = ContourSpec::rectangle(-1.0, 0.5, 1.0, 128);
        let v = quad_closed(&r, |z| z.exp() / z).unwrap();
        assert!((v.value - 1.0).norm() < 1e-12);
    }

    #[test]
    fn f2_against_quadrature_on_real_axis() {
        for &(n, k, z) in &[(3u32, 1u32, 0.7), (5, 0, 2.5), (1, 2, 0.05)] {
            let want = crate::quadrature::tanh_sinh_real(
                |t| (1.0 - t).powi(n as i32 - 1) * t.powi(k as i32 - 1) * (-z / t).exp(),
                0.0,
                1.0,
                1e-14,
            )
            .unwrap();
            let got = jacobi_f2(n, k as i32, C64::new(z, 0.0)).unwrap();
            assert!((got.re / want - 1.0).abs() < 1e-12, "n={n} k={k} z={z}");
            assert!(got.im.abs() < 1e-14 * want.abs());
        }
    }
}
