//! Modified Bessel functions `I_n`, `K_n` and Bessel `J_n` of integer order at
//! complex argument.
//!
//! `I_n`: compensated ascending series for `|z| <= 25`, then the two-exponential
//! asymptotic expansion, with Miller's backward recurrence when the expansion
//! is too coarse for the order. `K_0`, `K_1`: logarithmic series for `|z| <= 2`,
//! Temme's continued fraction (Steed's algorithm) up to `|z| = 25`, asymptotic
//! expansion beyond; higher orders by forward recurrence.

use super::dd::CDd;
use super::gamma::{digamma_int, factorial};
use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// Radius where the `I` series hands over to the asymptotic expansion.
pub const I_SERIES_RADIUS: f64 = 25.0;
/// Radius where the `K` continued fraction hands over to the asymptotic expansion.
pub const K_ASYMPTOTIC_RADIUS: f64 = 25.0;
/// Radius below which `K_0`, `K_1` come from the logarithmic series.
pub const K_SERIES_RADIUS: f64 = 2.0;

fn check_finite(z: C64, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: non-finite argument {z}")))
    }
}

/// `sum_k w^k / (k! (n+1)_k)` in double-double.
pub(crate) fn i_series_sum(n: u32, w: C64) -> Result<C64> {
    let mut term = CDd::one();
    let mut sum = CDd::one();
    for k in 1..4000u32 {
        term = term.mul_c(w).div_f64(k as f64).div_f64((k + n) as f64);
        sum = sum.add(term);
        let t = term.norm_hi();
        if t == 0.0 || (t <= 1e-33 * sum.norm_hi() && (k as f64) * (k as f64) > w.norm()) {
            return Ok(sum.to_c64());
        }
    }
    Err(Error::Convergence(format!("I series for w={w} did not settle")))
}

/// Coefficients of the Hankel expansion, `a_k(n)` for `k = 0..`, stopping once
/// the terms `a_k / |z|^k` stop decreasing or fall below `1e-17`.
/// Returns the coefficients and whether the smallest term is below `1e-16`.
fn hankel_coeffs(n: u32, z_abs: f64) -> (Vec<f64>, bool) {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut a = vec![1.0];
    let mut last = 1.0f64;
    for k in 1..200u32 {
        let odd = (2 * k - 1) as f64;
        let next = a[(k - 1) as usize] * (mu - odd * odd) / (8.0 * k as f64);
        let size = next.abs() / z_abs.powi(k as i32);
        if next == 0.0 {
            return (a, true);
        }
        if size > last {
            return (a, last < 1e-16);
        }
        a.push(next);
        last = size;
        if size < 1e-17 {
            return (a, true);
        }
    }
    (a, last < 1e-16)
}

fn hankel_sum(a: &[f64], z: C64, alternate: bool) -> C64 {
    let zi = z.inv();
    let mut p = C64::new(1.0, 0.0);
    let mut s = C64::new(0.0, 0.0);
    for (k, c) in a.iter().enumerate() {
        let sign = if alternate && k % 2 == 1 { -1.0 } else { 1.0 };
        s += p * (sign * c);
        p *= zi;
    }
    s
}

/// Miller backward recurrence normalised by `e^z = I_0 + 2 sum I_k`.
/// Returns `e^{-z} I_n(z)`.
fn i_miller_over_exp(n: u32, z: C64) -> C64 {
    let r = z.norm();
    let start = (n as f64).max(r) + 40.0 + 8.0 * r.sqrt();
    let start = start.ceil() as u32;
    let mut fkp1 = C64::new(0.0, 0.0);
    let mut fk = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut target = C64::new(0.0, 0.0);
    let two_over_z = 2.0 / z;
    let mut k = start;
    while k > 0 {
        // I_{k-1} = (2k/z) I_k + I_{k+1}
        let fkm1 = two_over_z * (k as f64) * fk + fkp1;
        if k == n {
            target = fk;
        }
        sum += 2.0 * fk;
        fkp1 = fk;
        fk = fkm1;
        k -= 1;
        if fk.norm() > 1e250 {
            fk *= 1e-250;
            fkp1 *= 1e-250;
            sum *= 1e-250;
            target *= 1e-250;
        }
    }
    if n == 0 {
        target = fk;
    }
    sum += fk;
    // normalise before dividing so |sum|^2 cannot underflow
    let m = sum.norm();
    (target / m) / (sum / m)
}

/// `e^{-|Re z|} I_n(z)` for integer `n`.
pub fn bessel_i_scaled(order: i32, z: C64) -> Result<C64> {
    check_finite(z, "bessel_i")?;
    let n = order.unsigned_abs();
    if z.norm() == 0.0 {
        return Ok(C64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0));
    }
    // reflect into the right half plane: I_n(-z) = (-1)^n I_n(z)
    let (zr, sign) = if z.re < 0.0 {
        (-z, if n % 2 == 1 { -1.0 } else { 1.0 })
    } else {
        (z, 1.0)
    };
    let val = if zr.norm() <= I_SERIES_RADIUS {
        let w = zr * zr / 4.0;
        let lead = (zr / 2.0).powu(n) / factorial(n);
        i_series_sum(n, w)? * lead * (-zr.re).exp()
    } else {
        let (a, good) = hankel_coeffs(n, zr.norm());
        if good {
            let s1 = hankel_sum(&a, zr, true);
            let s2 = hankel_sum(&a, zr, false);
            let root = (2.0 * PI * zr).sqrt();
            let phase = C64::new(0.0, zr.im).exp();
            let stokes = if zr.im > 0.0 {
                1.0
            } else if zr.im < 0.0 {
                -1.0
            } else {
                0.0
            };
            let parity = if n % 2 == 1 { -1.0 } else { 1.0 };
            // e^{-z - Re z} = e^{-2 Re z} e^{-i Im z}
            let sub = (-zr - zr.re).exp() * C64::new(0.0, stokes * parity);
            (phase * s1 + sub * s2) / root
        } else {
            i_miller_over_exp(n, zr) * C64::new(0.0, zr.im).exp()
        }
    };
    Ok(val * sign)
}

/// `I_n(z)`, the modified Bessel function of the first kind.
pub fn bessel_i(order: i32, z: C64) -> Result<C64> {
    let s = bessel_i_scaled(order, z)?;
    Ok(s * z.re.abs().exp())
}

/// `J_n(z) = i^n I_n(-i z)`; negative orders via `J_{-n} = (-1)^n J_n`.
pub fn bessel_j(order: i32, z: C64) -> Result<C64> {
    check_finite(z, "bessel_j")?;
    let n = order.unsigned_abs();
    let iz = C64::new(z.im, -z.re);
    let v = bessel_i(n as i32, iz)? * C64::new(0.0, 1.0).powu(n % 4);
    let neg = order < 0 && n % 2 == 1;
    Ok(if neg { -v } else { v })
}

fn k01_series(z: C64) -> (C64, C64) {
    let w = z * z / 4.0;
    let lz = (z / 2.0).ln();
    // K_0 = -ln(z/2) I_0 + sum psi(k+1) w^k / k!^2
    // K_1 = 1/z + ln(z/2) I_1 - (z/4) sum (psi(k+1) + psi(k+2)) w^k / (k! (k+1)!)
    let mut i0 = C64::new(0.0, 0.0);
    let mut i1 = C64::new(0.0, 0.0);
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = C64::new(0.0, 0.0);
    let mut p = C64::new(1.0, 0.0); // w^k / k!^2
    for k in 0..60u32 {
        let q = p / (k as f64 + 1.0); // w^k / (k! (k+1)!)
        i0 += p;
        i1 += q;
        s0 += p * digamma_int(k + 1);
        s1 += q * (digamma_int(k + 1) + digamma_int(k + 2));
        p = p * w / ((k as f64 + 1.0) * (k as f64 + 1.0));
        if p.norm() < 1e-18 * (i0.norm() + s0.norm()) {
            break;
        }
    }
    let i1 = i1 * z / 2.0;
    let k0 = -lz * i0 + s0;
    let k1 = z.inv() + lz * i1 - z / 4.0 * s1;
    (k0, k1)
}

/// Temme's CF2 via Steed's algorithm; returns `(e^z K_0(z), e^z K_1(z))`.
fn k01_cf2(z: C64) -> Result<(C64, C64)> {
    let one = C64::new(1.0, 0.0);
    let mut b = 2.0 * (one + z);
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let mut q1 = C64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25;
    let mut q = C64::new(a1, 0.0);
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    let mut converged = false;
    for i in 2..200_000u32 {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = (b + a * d).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        // c grows without bound while q1, q2 shrink; only c * q matters
        if c.abs() > 1e100 {
            c *= 1e-100;
            q1 *= 1e100;
            q2 *= 1e100;
        }
        if dels.norm() < 1e-17 * s.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence(format!("K continued fraction at z={z}")));
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * z)).sqrt() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    Ok((k0, k1))
}

fn k_asymptotic_scaled(n: u32, z: C64) -> C64 {
    let (a, _) = hankel_coeffs(n, z.norm());
    (PI / (2.0 * z)).sqrt() * hankel_sum(&a, z, false)
}

fn check_cut(z: C64) -> Result<()> {
    check_finite(z, "bessel_k")?;
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::Domain(format!(
            "bessel_k: argument {z} on the branch cut (-inf, 0]"
        )));
    }
    Ok(())
}

/// `e^z K_n(z)` for integer `n`, `z` off `(-inf, 0]`.
pub fn bessel_k_scaled(order: i32, z: C64) -> Result<C64> {
    check_cut(z)?;
    let n = order.unsigned_abs();
    let r = z.norm();
    if r > K_ASYMPTOTIC_RADIUS {
        let (_, good) = hankel_coeffs(n, r);
        if good {
            return Ok(k_asymptotic_scaled(n, z));
        }
    }
    let (k0, k1) = if r <= K_SERIES_RADIUS {
        let (k0, k1) = k01_series(z);
        let e = z.exp();
        (k0 * e, k1 * e)
    } else if r <= K_ASYMPTOTIC_RADIUS {
        k01_cf2(z)?
    } else {
        (k_asymptotic_scaled(0, z), k_asymptotic_scaled(1, z))
    };
    if n == 0 {
        return Ok(k0);
    }
    let (mut km1, mut k) = (k0, k1);
    for j in 1..n {
        let next = km1 + 2.0 * j as f64 / z * k;
        km1 = k;
        k = next;
    }
    Ok(k)
}

/// `K_n(z)`, the modified Bessel function of the second kind (`K_{-n} = K_n`).
pub fn bessel_k(order: i32, z: C64) -> Result<C64> {
    Ok(bessel_k_scaled(order, z)? * (-z).exp())
}
