//! Oracles shared by the integration tests.
#![allow(dead_code)]

use hardedge::C64;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn crel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn qf(x: &BigRational) -> f64 {
    x.to_f64().expect("finite rational")
}

/// `sum_{k<terms} s^k (z/2)^{2k+n} / (k! (k+n)!)` in exact complex rational
/// arithmetic, `s = 1` for `I_n` and `-1` for `J_n`; `z/2 = (hr + i hi)` with
/// rational parts `hr = a/b`, `hi = c/d`.
pub fn bessel_series_exact(n: u32, half: ((i64, i64), (i64, i64)), sign: i64, terms: usize) -> C64 {
    let (hr, hi) = (q(half.0 .0, half.0 .1), q(half.1 .0, half.1 .1));
    let mul = |a: &(BigRational, BigRational), b: &(BigRational, BigRational)| {
        (&a.0 * &b.0 - &a.1 * &b.1, &a.0 * &b.1 + &a.1 * &b.0)
    };
    let h = (hr, hi);
    let h2 = mul(&h, &h);
    let mut pow = (BigRational::one(), BigRational::zero());
    for _ in 0..n {
        pow = mul(&pow, &h);
    }
    let mut fact_k = BigRational::one();
    let mut fact_kn: BigRational = (1..=n as i64).fold(BigRational::one(), |a, j| a * q(j, 1));
    let mut acc = (BigRational::zero(), BigRational::zero());
    for k in 0..terms {
        if k > 0 {
            fact_k = fact_k * q(k as i64, 1);
            fact_kn = fact_kn * q(k as i64 + n as i64, 1);
            pow = mul(&pow, &h2);
            if sign < 0 {
                pow = (-pow.0, -pow.1);
            }
        }
        let d = &fact_k * &fact_kn;
        acc = (acc.0 + &pow.0 / &d, acc.1 + &pow.1 / &d);
    }
    C64::new(qf(&acc.0), qf(&acc.1))
}

/// `1F1(a; c; x)` for rational `x = num/den` by 60 exact terms.
pub fn hyp1f1_exact(a: i64, c: i64, num: i64, den: i64) -> f64 {
    let x = q(num, den);
    let mut term = BigRational::one();
    let mut acc = BigRational::one();
    for k in 0..60i64 {
        term = term * q(a + k, 1) * &x / (q(c + k, 1) * q(k + 1, 1));
        acc = acc + &term;
    }
    qf(&acc)
}

/// `K_n(z) = (1/2)(z/2)^n int_0^inf t^{-n-1} e^{-t - z^2/(4t)} dt` for
/// `|arg z| < pi/4`, by the trapezoid rule in `ln t`.
pub fn bessel_k_integral(n: i32, z: C64) -> C64 {
    let h = 1.0 / 64.0;
    let (lo, hi) = (-40.0, 8.0);
    let steps = ((hi - lo) / h) as usize;
    let z2 = z * z / 4.0;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=steps {
        let s = lo + j as f64 * h;
        let t = s.exp();
        acc += (-(t) - z2 / t).exp() * (-(n as f64) * s).exp();
    }
    (z / 2.0).powi(n) * acc * h * 0.5
}

/// Gauss-Legendre on `[a, b]` built independently of the library (Newton on
/// the Legendre recurrence).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w));
    }
    out
}

/// Composite Gauss-Legendre of `f` on `[a, b]` with `panels` panels of 20 nodes.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let base = gauss_legendre(20, 0.0, 1.0);
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(t, w) in &base {
            acc += w * h * f(lo + t * h);
        }
    }
    acc
}

/// `int_0^inf f` through `x = t^2/(1-t)^2`-type mapping `x = (t/(1-t))^2`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    integrate(
        |t| {
            if t <= 0.0 || t >= 1.0 {
                return 0.0;
            }
            let r = t / (1.0 - t);
            let x = r * r;
            let dx = 2.0 * r / ((1.0 - t) * (1.0 - t));
            let v = f(x) * dx;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        panels,
    )
}

/// Equispaced `k` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![a];
    }
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

pub mod contracts;

/// `int_0^{r^2} f(x) dx` through `x = u^2`, for integrands that are negligible
/// beyond `r^2` but cannot be evaluated out there.
pub fn integrate_sqrt(f: impl Fn(f64) -> f64, r: f64, panels: usize) -> f64 {
    integrate(|u| 2.0 * u * f(u * u), 0.0, r, panels)
}

/// `ln Gamma(z)` by the Lanczos approximation (g = 7, 9 terms) with reflection.
pub fn ln_gamma_lanczos(z: C64) -> C64 {
    use std::f64::consts::PI;
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if z.re < 0.5 {
        return C64::new(PI.ln(), 0.0) - (z * PI).sin().ln() - ln_gamma_lanczos(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = C64::new(COEF[0], 0.0);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}
