//! Special-function contracts measured over their stated domains. Each
//! returns the worst error found so tests can assert and the acceptance
//! run can print it.

use super::linspace;
use hardedge::specfun::*;
use hardedge::C64;
use std::f64::consts::PI;

fn arg_grid(max_arg: f64, k: usize) -> Vec<f64> {
    linspace(-max_arg, max_arg, k)
}

fn radii(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), k).into_iter().map(f64::exp).collect()
}

/// `|z (I_n K_{n+1} + I_{n+1} K_n) - 1|` for `|z|` in `[0.1, 100]`,
/// `|arg z| <= 3 pi/4`, relative to `max(1, |z I_n K_{n+1}| + |z I_{n+1} K_n|)`.
/// Left of the imaginary axis both products grow like `e^{2|Re z|}` and cancel,
/// so the size of the terms is the only attainable reference there.
pub fn wronskian() -> f64 {
    let mut worst: f64 = 0.0;
    for r in radii(0.1, 100.0, 25) {
        for a in arg_grid(0.75 * PI, 13) {
            let z = C64::from_polar(r, a);
            for n in 0..6 {
                // scaled forms keep e^{+-z} out of the product
                let i0 = bessel_i_scaled(n, z).unwrap();
                let i1 = bessel_i_scaled(n + 1, z).unwrap();
                let k0 = bessel_k_scaled(n, z).unwrap();
                let k1 = bessel_k_scaled(n + 1, z).unwrap();
                // I_s K_s = I K e^{z - |Re z|}
                let f = z * (C64::new(z.re.abs(), 0.0) - z).exp();
                let (a, b) = (f * i0 * k1, f * i1 * k0);
                let size = (a.norm() + b.norm()).max(1.0);
                worst = worst.max((a + b - 1.0).norm() / size);
            }
        }
    }
    worst
}

/// `max |K_{-n}(z) - K_n(z)|`, expected exactly 0.
pub fn k_order_symmetry() -> f64 {
    let mut worst: f64 = 0.0;
    for r in radii(1e-3, 100.0, 12) {
        for a in arg_grid(0.75 * PI, 7) {
            let z = C64::from_polar(r, a);
            for n in 0..6 {
                worst = worst.max((bessel_k(-n, z).unwrap() - bessel_k(n, z).unwrap()).norm());
            }
        }
    }
    worst
}

/// `0F1(nu+1; z) = nu! z^{-nu/2} I_nu(2 sqrt z)` relative, complex `|z| <= 50`.
pub fn hyp0f1_vs_i() -> f64 {
    let mut worst: f64 = 0.0;
    for r in linspace(0.5, 50.0, 12) {
        for a in arg_grid(PI * 0.999, 13) {
            let z = C64::from_polar(r, a);
            for nu in 0..5u32 {
                let lhs = hyp0f1(nu as i64 + 1, z).unwrap();
                let s = z.sqrt();
                let rhs = factorial(nu) * bessel_i(nu as i32, 2.0 * s).unwrap() / s.powu(nu);
                worst = worst.max((lhs - rhs).norm() / rhs.norm());
            }
        }
    }
    worst
}

/// `max |I_n(z) sqrt(2 pi z) e^{-z} - 1| * |z| / ((4n^2 - 1)/8 + 1)`: the
/// leading correction scaled out, so values of order one or less mean the
/// expansion holds with its `O(1/z)` envelope. `|arg z| <= pi/2 - 0.1`.
pub fn i_asymptotic_envelope() -> f64 {
    let mut worst: f64 = 0.0;
    for r in [30.0, 60.0, 100.0, 150.0] {
        for a in arg_grid(PI / 2.0 - 0.1, 9) {
            let z = C64::from_polar(r, a);
            for n in 0..4i32 {
                // e^{-|Re z|} I_n(z) ~ e^{i Im z} / sqrt(2 pi z)
                let v = bessel_i_scaled(n, z).unwrap() * (2.0 * PI * z).sqrt() * C64::new(0.0, -z.im).exp();
                let env = ((4 * n * n - 1) as f64 / 8.0).abs() + 1.0;
                worst = worst.max((v - 1.0).norm() * r / env);
            }
        }
    }
    worst
}

/// Continuity across the series/asymptotic switch radii: the symmetric
/// difference `f(r+h) - f(r-h)` against `2 h f'(r)` from the recurrences,
/// relative to `|f(r)|`.
pub fn crossover_continuity() -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for a in arg_grid(0.75 * PI, 9) {
        let dir = C64::from_polar(1.0, a);
        for &r in &[K_SERIES_RADIUS, K_ASYMPTOTIC_RADIUS] {
            for n in 0..3i32 {
                let z = dir * r;
                // g(w) = K_n(w) e^z, g'(z) = (-K_{n+1} + n K_n / z) e^z
                let f = |w: C64| bessel_k_scaled(n, w).unwrap() * (z - w).exp();
                let k = bessel_k_scaled(n, z).unwrap();
                let k1 = bessel_k_scaled(n + 1, z).unwrap();
                let d = -k1 + k * (n as f64) / z;
                let diff = f(z + dir * h) - f(z - dir * h) - dir * (2.0 * h) * d;
                worst = worst.max(diff.norm() / k.norm());
            }
        }
        if a.abs() <= PI / 2.0 {
            let r = I_SERIES_RADIUS;
            let z = dir * r;
            for n in 0..3i32 {
                // g(w) = I_n(w) e^{-|Re z|}, g'(z) = (I_{n+1} + n I_n / z) e^{-|Re z|}
                let f = |w: C64| bessel_i_scaled(n, w).unwrap() * (w.re.abs() - z.re.abs()).exp();
                let i = bessel_i_scaled(n, z).unwrap();
                let i1 = bessel_i_scaled(n + 1, z).unwrap();
                let d = i1 + i * (n as f64) / z;
                let diff = f(z + dir * h) - f(z - dir * h) - dir * (2.0 * h) * d;
                worst = worst.max(diff.norm() / i.norm());
            }
        }
    }
    worst
}

/// `|J_{n-1} + J_{n+1} - (2n/z) J_n|` relative to the largest of the three
/// terms, `|z| <= 60`.
pub fn j_recurrence() -> f64 {
    let mut worst: f64 = 0.0;
    for r in linspace(0.5, 60.0, 15) {
        for a in arg_grid(PI * 0.999, 11) {
            let z = C64::from_polar(r, a);
            for n in 1..6i32 {
                let jm = bessel_j(n - 1, z).unwrap();
                let j = bessel_j(n, z).unwrap();
                let jp = bessel_j(n + 1, z).unwrap();
                let t = j * (2.0 * n as f64) / z;
                let scale = jm.norm().max(jp.norm()).max(t.norm());
                worst = worst.max((jm + jp - t).norm() / scale);
            }
        }
    }
    worst
}
