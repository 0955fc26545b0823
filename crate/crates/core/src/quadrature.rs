//! Gauss rules (Golub-Welsch plus Newton polishing), generic over the scalar,
//! and a double-exponential integrator for endpoint singularities.

use crate::specfun::ln_gamma_complex;
use crate::{Error, Real, Result, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{Float, FromPrimitive};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of an `n`-point Gauss rule.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

fn lit<T: Real>(x: f64) -> T {
    <T as FromPrimitive>::from_f64(x).expect("representable constant")
}

fn ln_gamma_real(x: f64) -> f64 {
    ln_gamma_complex(C64::new(x, 0.0)).re
}

/// Three-term recurrence of the monic orthogonal polynomials:
/// `p_{k+1} = (x - a_k) p_k - b_k p_{k-1}`, with `b_0 = mu_0` the total mass.
struct Recurrence {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Recurrence {
    fn legendre(n: usize) -> Self {
        let a = vec![0.0; n];
        let mut b = vec![2.0; n];
        for (k, bk) in b.iter_mut().enumerate().skip(1) {
            let k = k as f64;
            *bk = k * k / (4.0 * k * k - 1.0);
        }
        Recurrence { a, b }
    }

    fn jacobi(n: usize, al: f64, be: f64) -> Self {
        let ab = al + be;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        a[0] = (be - al) / (ab + 2.0);
        b[0] = ((ab + 1.0) * 2f64.ln() + ln_gamma_real(al + 1.0) + ln_gamma_real(be + 1.0)
            - ln_gamma_real(ab + 2.0))
        .exp();
        for k in 1..n {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            a[k] = (be * be - al * al) / (s * (s + 2.0));
            b[k] = if k == 1 {
                4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * kf * (kf + al) * (kf + be) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
        }
        Recurrence { a, b }
    }

    fn laguerre(n: usize, al: f64) -> Self {
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        b[0] = ln_gamma_real(al + 1.0).exp();
        for k in 0..n {
            let kf = k as f64;
            a[k] = 2.0 * kf + 1.0 + al;
            if k > 0 {
                b[k] = kf * (kf + al);
            }
        }
        Recurrence { a, b }
    }

    /// Orthonormal `p_n(x)`, `p_n'(x)` and `sum_{k<n} p_k(x)^2` (the latter
    /// returned as `(mantissa, log10 scale)` to survive overflow).
    fn eval<T: Real>(&self, x: T) -> (T, T, T, i32) {
        let n = self.a.len();
        let mut p_prev = T::zero();
        let mut p = Float::recip(Float::sqrt(lit::<T>(self.b[0])));
        let mut d_prev = T::zero();
        let mut d = T::zero();
        let mut sum = T::zero();
        let mut scale = 0i32;
        let big = lit::<T>(1e15);
        let shrink = lit::<T>(1e-15);
        for k in 0..n {
            sum += p * p;
            let sb_next = Float::sqrt(lit::<T>(if k + 1 < n { self.b[k + 1] } else { next_b(self, k + 1) }));
            let sb = if k == 0 { T::zero() } else { Float::sqrt(lit::<T>(self.b[k])) };
            let ak = lit::<T>(self.a[k]);
            let p_next = ((x - ak) * p - sb * p_prev) / sb_next;
            let d_next = (p + (x - ak) * d - sb * d_prev) / sb_next;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
            if Float::abs(p) > big {
                p = p * shrink;
                p_prev = p_prev * shrink;
                d = d * shrink;
                d_prev = d_prev * shrink;
                sum = sum * shrink * shrink;
                scale += 30;
            }
        }
        (p, d, sum, scale)
    }
}

/// `b_n` for the degree-`n` step, needed by the polishing recurrence.
fn next_b(r: &Recurrence, n: usize) -> f64 {
    // extend by re-deriving from the family's closed forms is awkward; the
    // last coefficient only rescales p_n, which leaves its zeros unchanged
    r.b[n - 1].max(f64::MIN_POSITIVE)
}

fn golub_welsch<T: Real>(rec: &Recurrence) -> Result<GaussRule<T>> {
    let n = rec.a.len();
    if n == 0 {
        return Err(Error::Domain("Gauss rule with zero nodes".into()));
    }
    let mut jm = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        jm[(i, i)] = lit(rec.a[i]);
        if i + 1 < n {
            let off = lit::<T>(rec.b[i + 1].sqrt());
            jm[(i, i + 1)] = off;
            jm[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &i in &order {
        let mut x = eig.eigenvalues[i];
        // polish the node on p_n, then take the Christoffel weight
        for _ in 0..3 {
            let (p, d, _, _) = rec.eval(x);
            if d == T::zero() {
                break;
            }
            let step = p / d;
            x -= step;
            if Float::abs(step) <= T::epsilon() * (T::one() + Float::abs(x)) {
                break;
            }
        }
        let (_, _, sum, scale) = rec.eval(x);
        let w = if scale == 0 {
            Float::recip(sum)
        } else {
            let v0 = eig.eigenvectors[(0, i)];
            v0 * v0 * lit::<T>(rec.b[0])
        };
        nodes.push(x);
        weights.push(w);
    }
    Ok(GaussRule { nodes, weights })
}

impl<T: Real> GaussRule<T> {
    /// Gauss-Legendre on `[-1, 1]`.
    pub fn legendre(n: usize) -> Result<Self> {
        golub_welsch(&Recurrence::legendre(n))
    }

    /// Gauss-Jacobi on `[-1, 1]` with weight `(1-x)^a (1+x)^b`, `a, b > -1`.
    pub fn jacobi(n: usize, a: f64, b: f64) -> Result<Self> {
        if a <= -1.0 || b <= -1.0 {
            return Err(Error::Domain(format!("Gauss-Jacobi exponents ({a}, {b}) must exceed -1")));
        }
        golub_welsch(&Recurrence::jacobi(n, a, b))
    }

    /// Generalized Gauss-Laguerre on `[0, inf)` with weight `x^a e^{-x}`.
    pub fn laguerre(n: usize, a: f64) -> Result<Self> {
        if a <= -1.0 {
            return Err(Error::Domain(format!("Gauss-Laguerre exponent {a} must exceed -1")));
        }
        golub_welsch(&Recurrence::laguerre(n, a))
    }

    /// Affine map of a `[-1, 1]` rule onto `[lo, hi]`.
    pub fn mapped(&self, lo: T, hi: T) -> GaussRule<T> {
        let half = (hi - lo) / lit(2.0);
        let mid = (hi + lo) / lit(2.0);
        GaussRule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| w * half).collect(),
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Shared Gauss-Legendre rules in `f64`, built once per size.
pub fn legendre(n: usize) -> Arc<GaussRule<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("rule cache");
    map.entry(n)
        .or_insert_with(|| Arc::new(GaussRule::legendre(n).expect("Legendre rule")))
        .clone()
}

/// Shared Gauss-Jacobi rules keyed by `(n, a, b)` bit patterns.
pub fn jacobi(n: usize, a: f64, b: f64) -> Result<Arc<GaussRule<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64, u64), Arc<GaussRule<f64>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(r) = cache.lock().expect("rule cache").get(&key) {
        return Ok(r.clone());
    }
    let rule = Arc::new(GaussRule::jacobi(n, a, b)?);
    cache.lock().expect("rule cache").insert(key, rule.clone());
    Ok(rule)
}

/// Tanh-sinh quadrature of a complex integrand on `[a, b]`, halving the step
/// until two levels agree to `tol` relative. Endpoint singularities are fine
/// as long as `f` is finite at interior points.
pub fn tanh_sinh(f: impl FnMut(f64) -> C64, a: f64, b: f64, tol: f64) -> Result<C64> {
    tanh_sinh_abs(f, a, b, tol, 0.0)
}

/// [`tanh_sinh`] that also stops once two levels differ by less than `atol`.
pub fn tanh_sinh_abs(mut f: impl FnMut(f64) -> C64, a: f64, b: f64, tol: f64, atol: f64) -> Result<C64> {
    let half = (b - a) / 2.0;
    let pi2 = std::f64::consts::FRAC_PI_2;
    let tmax = 4.0;
    let mut eval = |t: f64| -> C64 {
        let s = pi2 * t.sinh();
        let c = s.cosh();
        let u = s.tanh();
        let w = pi2 * t.cosh() / (c * c);
        // distance to the nearer endpoint without cancellation
        let gap = 1.0 / (s.abs().exp() * c);
        let x = if u >= 0.0 { b - half * gap } else { a + half * gap };
        if w < 1e-300 || gap == 0.0 || x <= a || x >= b {
            return C64::new(0.0, 0.0);
        }
        f(x) * w
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= tmax {
        sum += eval(k as f64 * h) + eval(-(k as f64) * h);
        k += 1;
    }
    let mut prev = sum * h * half;
    for _level in 0..12 {
        h /= 2.0;
        let mut k = 1;
        while (k as f64) * h <= tmax {
            sum += eval(k as f64 * h) + eval(-(k as f64) * h);
            k += 2;
        }
        let cur = sum * h * half;
        if (cur - prev).norm() <= (tol * cur.norm()).max(atol).max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Convergence(format!("tanh-sinh on [{a}, {b}] stalled near {prev}")))
}

/// Real-valued convenience wrapper around [`tanh_sinh`].
pub fn tanh_sinh_real(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    tanh_sinh(|x| C64::new(f(x), 0.0), a, b, tol).map(|v| v.re)
}
