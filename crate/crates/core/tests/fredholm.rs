mod common;

use common::*;
use hardedge::biorthogonal::gaussian_system;
use hardedge::ensemble::sample_batch;
use hardedge::fredholm::*;
use hardedge::limits::{LimitFamily, LimitKernelParams};
use hardedge::specfun::{bessel_i, bessel_k};
use hardedge::{GaussianEnsembleParams, C64};

fn three_point() -> GaussianEnsembleParams {
    GaussianEnsembleParams::new(3, 3, 4, 1.0, vec![0.2, 0.5, 0.8]).unwrap()
}

fn smallest(p: &GaussianEnsembleParams, seed: u64, draws: usize) -> Vec<f64> {
    let b = sample_batch(p, seed, draws).unwrap();
    let mut v: Vec<f64> = b.eigenvalues.iter().map(|r| r[0]).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn empty_interval_has_no_points() {
    let sys = gaussian_system(&three_point()).unwrap();
    let g = gap_probability(&sys, 0.0, &NystromSettings::default()).unwrap();
    assert_eq!(g.raw, 1.0);
    assert_eq!(smallest_eigenvalue_cdf(&sys, &[0.0], &NystromSettings::default()).unwrap()[0], 0.0);
}

#[test]
fn gap_is_monotone_and_cdf_has_nonnegative_density() {
    let sys = gaussian_system(&three_point()).unwrap();
    let s = linspace(0.05, 4.0, 24);
    let f = smallest_eigenvalue_cdf(&sys, &s, &NystromSettings::default()).unwrap();
    for w in f.windows(2) {
        assert!(w[1] >= w[0] - 1e-8, "{f:?}");
    }
    // centred differences of the cdf
    for i in 1..s.len() - 1 {
        let d = (f[i + 1] - f[i - 1]) / (s[i + 1] - s[i - 1]);
        assert!(d >= -1e-6, "density {d} at {}", s[i]);
    }
}

#[test]
fn matches_monte_carlo_smallest_eigenvalue() {
    let p = three_point();
    let sys = gaussian_system(&p).unwrap();
    let draws = 100_000;
    let mins = smallest(&p, 11, draws);
    for &s in &[0.06, 0.25, 0.5, 1.0, 2.4] {
        let g = gap_probability(&sys, s, &NystromSettings::default()).unwrap();
        assert!(g.converged);
        let above = mins.iter().filter(|&&m| m > s).count() as f64 / draws as f64;
        let sd = (g.raw * (1.0 - g.raw) / draws as f64).sqrt();
        assert!((above - g.raw).abs() <= 3.0 * sd, "s={s}: MC {above} vs {} +- {sd}", g.raw);
    }
}

#[test]
fn kolmogorov_smirnov_against_monte_carlo() {
    let p = three_point();
    let sys = gaussian_system(&p).unwrap();
    let draws = 100_000;
    let mins = smallest(&p, 12, draws);
    let grid: Vec<f64> = log_grid(0.01, 8.0, 40);
    let cdf = smallest_eigenvalue_cdf(&sys, &grid, &NystromSettings::default()).unwrap();
    let d = grid
        .iter()
        .zip(&cdf)
        .map(|(&s, &f)| {
            let emp = mins.partition_point(|&m| m <= s) as f64 / draws as f64;
            (emp - f).abs()
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample statistic
    let crit = 1.628 / (draws as f64).sqrt();
    assert!(d < crit, "D = {d} >= {crit}");
}

fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), k).into_iter().map(f64::exp).collect()
}

#[test]
fn all_mass_is_eventually_captured() {
    // with nu = 0 the smallest eigenvalue has a stretched exponential tail and
    // 10 means leave ~2e-3 uncaptured; nu = 1 is comfortably inside
    let p = GaussianEnsembleParams::new(4, 5, 6, 1.0, vec![0.1, 0.3, 0.5, 0.7]).unwrap();
    let sys = gaussian_system(&p).unwrap();
    // mean of the smallest eigenvalue as the length scale
    let mins = smallest(&p, 13, 20_000);
    let scale = mins.iter().sum::<f64>() / mins.len() as f64;
    let settings = NystromSettings { max_nodes: 320, ..Default::default() };
    let c = smallest_eigenvalue_cdf(&sys, &[10.0 * scale], &settings).unwrap()[0];
    assert!((1.0 - c).abs() < 1e-3, "cdf(10 scale = {}) = {c}", 10.0 * scale);
    let g = gap_probability(&sys, 20.0 * scale, &settings).unwrap();
    assert!(g.raw.abs() < 1e-3, "gap(20 scale) = {}", g.raw);
}

#[test]
fn node_doubling_and_rule_transform() {
    let sys = gaussian_system(&GaussianEnsembleParams::square(3, 1, 1, 1.0, vec![0.2, 0.5, 0.8]).unwrap()).unwrap();
    for &s in &[0.3, 1.5, 4.0] {
        let sq = gap_probability(&sys, s, &NystromSettings::default()).unwrap();
        assert!(sq.converged && sq.error <= 1e-8, "{sq:?}");
        let id = gap_probability(
            &sys,
            s,
            &NystromSettings { transform: Transform::Identity, max_nodes: 640, ..Default::default() },
        )
        .unwrap();
        assert!((sq.raw - id.raw).abs() < 1e-7, "s={s}: {} vs {}", sq.raw, id.raw);
    }
}

#[test]
fn contour_and_gram_kernels_give_the_same_gap() {
    let p = three_point();
    let sys = gaussian_system(&p).unwrap();
    let c = GaussianContourKernel { contours: hardedge::contour::default_contours(&p).unwrap(), params: p };
    let rule = NystromRule::new(40, 1.2, Transform::SquareMap).unwrap();
    let a = fredholm_det(&sys, &rule).unwrap();
    let b = fredholm_det(&c, &rule).unwrap();
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}

/// `int_0^inf t^{nu/2} K_{nu-kappa}(2 sqrt t) I_kappa(2 d sqrt t) dt` by
/// quadrature in `u = t^{1/4}`, which smooths the logarithm of `K_0`.
fn spike_integral(nu: u32, kappa: u32, d: f64) -> f64 {
    // the product decays like e^{-2(1-d) sqrt t}
    let end = 40.0 / (1.0 - d);
    integrate_sqrt(
        |r| {
            if r <= 0.0 {
                return 0.0;
            }
            let k = bessel_k(nu as i32 - kappa as i32, C64::new(2.0 * r, 0.0)).unwrap().re;
            let i = bessel_i(kappa as i32, C64::new(2.0 * d * r, 0.0)).unwrap().re;
            2.0 * r.powi(nu as i32 + 1) * k * i
        },
        end.sqrt(),
        200,
    )
}

#[test]
fn spike_integral_closed_form() {
    // with a = 2, b = 2d the Bessel product integral is d^kappa nu! / (2 (1-d^2)^{nu+1})
    for &(nu, kappa, pi) in &[(0u32, 0u32, 0.3), (1, 0, 0.5), (2, 1, 0.7), (1, 2, 0.4)] {
        let d = (1.0f64 - pi).sqrt();
        let fact: f64 = (1..=nu).map(|j| j as f64).product();
        let want = d.powi(kappa as i32) * fact / (2.0 * pi.powi(nu as i32 + 1));
        let got = spike_integral(nu, kappa, d);
        assert!(rel(got, want) < 1e-9, "nu={nu} kappa={kappa}: {got} vs {want}");
    }
}

#[test]
fn single_spike_distribution() {
    for &(nu, kappa) in &[(0u32, 0u32), (1, 0), (0, 1), (1, 1), (2, 1)] {
        for &pi in &[0.25, 0.5, 0.75] {
            assert_eq!(goodform_limit(pi, nu, kappa, 0.0).unwrap(), 0.0);
            let total = goodform_limit(pi, nu, kappa, f64::INFINITY).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "nu={nu} kappa={kappa} pi={pi}: {total}");
        }
    }
    assert!(goodform_limit(1.0, 0, 0, 1.0).is_err());
    assert!(goodform_limit(0.0, 0, 0, 1.0).is_err());
}

#[test]
fn single_spike_matches_fredholm_determinant() {
    let settings = NystromSettings { max_nodes: 320, ..Default::default() };
    for &(nu, kappa, pi) in &[(0u32, 0u32, 0.5), (1, 1, 0.3), (2, 0, 0.7)] {
        let k = LimitKernel { family: LimitFamily::IV, params: LimitKernelParams::new(nu, kappa, 0.0, vec![pi]) };
        for &y in &[0.5, 1.0, 2.0] {
            let g = gap_probability(&k, y, &settings).unwrap();
            let f = goodform_limit(pi, nu, kappa, y).unwrap();
            assert!((f - (1.0 - g.raw)).abs() < 1e-6, "nu={nu} kappa={kappa} pi={pi} y={y}: {f} vs {}", 1.0 - g.raw);
        }
    }
}

#[test]
fn rule_validation() {
    assert!(NystromRule::new(10, 0.0, Transform::SquareMap).is_err());
    assert!(NystromRule::new(0, 1.0, Transform::SquareMap).is_err());
    let r = NystromRule::new(16, 2.0, Transform::SquareMap).unwrap();
    assert!(r.points.iter().all(|&x| x > 0.0 && x < 2.0));
    assert!(r.weights.iter().all(|&w| w > 0.0));
}
