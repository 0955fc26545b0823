//! Gamma-function helpers. Every order in the ensembles is an integer, so the
//! real-argument routines only need factorials and harmonic numbers; the
//! complex log-gamma is used on the Mellin-Barnes line of the Meijer kernel.

use crate::C64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `n!` as a double (overflows to infinity past 170).
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `ln n!` summed exactly for small `n`, via `ln_gamma` beyond.
pub fn ln_factorial(n: u32) -> f64 {
    if n < 64 {
        factorial(n).ln()
    } else {
        ln_gamma_complex(C64::new(n as f64 + 1.0, 0.0)).re
    }
}

/// `Gamma(n)` for a positive integer `n`.
pub fn gamma_int(n: u32) -> f64 {
    assert!(n >= 1, "gamma_int needs n >= 1");
    factorial(n - 1)
}

/// Digamma at a positive integer: `psi(n) = -gamma + H_{n-1}`.
pub fn digamma_int(n: u32) -> f64 {
    assert!(n >= 1, "digamma_int needs n >= 1");
    -EULER_GAMMA + (1..n).map(|k| 1.0 / k as f64).sum::<f64>()
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

/// Principal branch of `ln Gamma(z)` (Lanczos, reflection for `Re z < 1/2`).
pub fn ln_gamma_complex(z: C64) -> C64 {
    if z.re < 0.5 {
        // Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let s = (z * PI).sin();
        return C64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_complex(C64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    C64::new(0.5 * (2.0 * PI).ln(), 0.0) + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma_complex(z: C64) -> C64 {
    ln_gamma_complex(z).exp()
}
