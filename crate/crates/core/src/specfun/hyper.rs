//! Confluent hypergeometric series and the entire "reduced" Bessel functions
//! `w^{-n/2} J_n(2 sqrt w)` and `w^{-n/2} I_n(2 sqrt w)`.

use super::bessel::{bessel_i_scaled, bessel_j, i_series_sum};
use super::dd::CDd;
use super::gamma::factorial;
use crate::{Error, Result, C64};

const MAX_TERMS: u32 = 200_000;

fn check(z: C64, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: non-finite argument {z}")))
    }
}

/// Generic `pFq` series with integer parameters, summed in double-double.
/// `upper` are the numerator parameters, `lower` the denominator ones.
fn pfq_series(upper: &[i64], lower: &[i64], z: C64, what: &str) -> Result<C64> {
    let mut term = CDd::one();
    let mut sum = CDd::one();
    let zabs = z.norm();
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let mut t = term.mul_c(z).div_f64(kf + 1.0);
        for &a in upper {
            t = t.mul_f64(a as f64 + kf);
        }
        for &b in lower {
            t = t.div_f64(b as f64 + kf);
        }
        term = t;
        sum = sum.add(term);
        let size = term.norm_hi();
        // past the hump: ratio |z| * prod(a+k) / ((k+1) prod(b+k)) < 1
        let past = {
            let mut r = zabs / (kf + 2.0);
            for &a in upper {
                r *= (a as f64 + kf + 1.0).abs();
            }
            for &b in lower {
                r /= (b as f64 + kf + 1.0).abs();
            }
            r < 0.5
        };
        if size == 0.0 || (past && size <= 1e-33 * sum.norm_hi()) {
            return Ok(sum.to_c64());
        }
    }
    Err(Error::Convergence(format!("{what} series at z={z}")))
}

/// `0F1(; c; z)` for integer `c >= 1`.
pub fn hyp0f1(c: i64, z: C64) -> Result<C64> {
    check(z, "hyp0f1")?;
    if c < 1 {
        return Err(Error::Domain(format!("hyp0f1: c = {c} must be >= 1")));
    }
    if z.norm() <= 150.0 {
        return pfq_series(&[], &[c], z, "hyp0f1");
    }
    // 0F1(n+1; z) = n! z^{-n/2} I_n(2 sqrt z)
    let n = (c - 1) as u32;
    let r = z.sqrt();
    let arg = 2.0 * r;
    let s = bessel_i_scaled(n as i32, arg)?;
    Ok(s * factorial(n) / r.powu(n) * arg.re.abs().exp())
}

/// `1F1(a; c; z)` for integer `a` and integer `c >= 1`.
pub fn hyp1f1(a: i64, c: i64, z: C64) -> Result<C64> {
    check(z, "hyp1f1")?;
    if c < 1 {
        return Err(Error::Domain(format!("hyp1f1: c = {c} must be >= 1")));
    }
    pfq_series(&[a], &[c], z, "hyp1f1")
}

/// `0F2(; b1, b2; z)` for integers `b1, b2 >= 1`.
pub fn hyp0f2(b1: i64, b2: i64, z: C64) -> Result<C64> {
    check(z, "hyp0f2")?;
    if b1 < 1 || b2 < 1 {
        return Err(Error::Domain(format!("hyp0f2: parameters ({b1}, {b2}) must be >= 1")));
    }
    pfq_series(&[], &[b1, b2], z, "hyp0f2")
}

/// `w^{-n/2} J_n(2 sqrt w) = sum_k (-w)^k / (k! (k+n)!)`, entire in `w`.
pub fn bessel_j_reduced(n: u32, w: C64) -> Result<C64> {
    check(w, "bessel_j_reduced")?;
    if w.norm() <= 150.0 {
        return Ok(i_series_sum(n, -w)? / factorial(n));
    }
    let r = w.sqrt();
    Ok(bessel_j(n as i32, 2.0 * r)? / r.powu(n))
}

/// `w^{-n/2} I_n(2 sqrt w) = 0F1(n+1; w) / n!` as `(mantissa, exponent)` with
/// value `mantissa * e^{exponent}`, so large arguments do not overflow.
pub fn bessel_i_reduced_exp(n: u32, w: C64) -> Result<(C64, f64)> {
    check(w, "bessel_i_reduced")?;
    if w.norm() <= 100.0 {
        return Ok((i_series_sum(n, w)? / factorial(n), 0.0));
    }
    let r = w.sqrt();
    let arg = 2.0 * r;
    Ok((bessel_i_scaled(n as i32, arg)? / r.powu(n), arg.re.abs()))
}
