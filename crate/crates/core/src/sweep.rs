//! Finite-N kernels under each hard-edge rescaling, compared against the
//! limiting kernels over increasing `N`.

use crate::contour::{
    coupling_points, default_contours_for_points, double_contour_grid, gaussian_integrand,
    jacobi_integrand, ContourPair, ContourSpec, Escalation,
};
use crate::ensemble::{fmt_f64, Regime, ScalingRegime};
use crate::limits::{
    default_limit_contours, kernel_limit_grid, trend_decreasing, LimitFamily, LimitKernelParams,
};
use crate::{Error, GaussianEnsembleParams, JacobiEnsembleParams, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Which finite-N ensemble is rescaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Gaussian { nu: u32, kappa: u32 },
    Jacobi { nu: u32, nu_prime: u32, kappa: u32 },
}

impl Model {
    fn nu_kappa(&self) -> (u32, u32) {
        match *self {
            Model::Gaussian { nu, kappa } => (nu, kappa),
            Model::Jacobi { nu, kappa, .. } => (nu, kappa),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSchedule {
    pub regime: ScalingRegime,
    pub model: Model,
    pub n_values: Vec<usize>,
    pub grid: Vec<(f64, f64)>,
}

impl RegimeSchedule {
    pub fn validate(&self) -> Result<()> {
        self.regime.validate()?;
        if self.n_values.len() < 3 {
            return Err(Error::Validation("a schedule needs at least 3 values of N".into()));
        }
        if !self.n_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation("N values must increase".into()));
        }
        if self.n_values[0] < self.regime.m.max(1) {
            return Err(Error::Validation("N must be at least m".into()));
        }
        for &(x, y) in &self.grid {
            if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
                return Err(Error::Validation(format!("grid point ({x}, {y}) outside (0, inf)^2")));
            }
        }
        if let Model::Jacobi { nu, nu_prime, kappa } = self.model {
            if nu + nu_prime < kappa {
                return Err(Error::Validation("nu + nu_prime >= kappa required".into()));
            }
        }
        Ok(())
    }
}

/// Tensor grid `{lo..hi} x {lo..hi}` with `k` equispaced values per side.
pub fn tensor_grid(lo: f64, hi: f64, k: usize) -> Vec<(f64, f64)> {
    let vals: Vec<f64> = match k {
        0 => vec![],
        1 => vec![lo],
        _ => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
    };
    vals.iter().flat_map(|&x| vals.iter().map(move |&y| (x, y))).collect()
}

/// Default grid for the sweeps: 4 x 4 on `[0.5, 5]^2`.
pub fn default_grid() -> Vec<(f64, f64)> {
    tensor_grid(0.5, 5.0, 4)
}

fn limit_family(r: Regime) -> LimitFamily {
    match r {
        Regime::I => LimitFamily::I,
        Regime::II => LimitFamily::II,
        Regime::III => LimitFamily::III,
        Regime::IV => LimitFamily::IV,
    }
}

/// Contours for the finite-N kernel at size `n`. Regime I uses the default
/// Apollonius pair; II and IV the limiting kernel's origin circles, which
/// also enclose the bulk point `~ 4 mu`; III the limiting circles shrunk by
/// `4 mu N`, the scale of all its coupling points.
pub fn regime_contours(regime: &ScalingRegime, n: usize, points: &[f64]) -> Result<ContourPair> {
    let nodes = 128;
    match regime.regime {
        // the two level circles come within ~1/N of each other, which the
        // trapezoid rule resolves once the node count is a few times N
        Regime::I => Ok(default_contours_for_points(points)?.with_nodes((8 * n).next_power_of_two().max(128))),
        Regime::II | Regime::IV => {
            let pmax = points.iter().cloned().fold(0.0, f64::max);
            Ok(ContourPair::nested(
                ContourSpec::origin_circle(pmax + 2.0 * (1.0 - pmax) / 3.0, nodes),
                ContourSpec::origin_circle(pmax + (1.0 - pmax) / 3.0, nodes),
            ))
        }
        Regime::III => {
            let s = 4.0 * regime.mu_of_n.mu(n) * n as f64;
            let lim = LimitKernelParams::new(0, 0, 1.0, regime.pis.clone());
            let base = default_limit_contours(LimitFamily::III, &lim);
            let (_, ro) = base.outer.as_circle().expect("origin circle");
            let (_, ri) = base.inner.as_circle().expect("origin circle");
            let pmax = points.iter().cloned().fold(0.0, f64::max);
            let r_in = (s * ri).max(1.2 * pmax);
            let r_out = (s * ro).min(0.5 * (r_in + 1.0));
            if r_in >= 0.9 || r_out <= r_in * 1.05 {
                return Err(Error::Domain(format!(
                    "regime III contours do not fit left of 1 at N={n}; increase N"
                )));
            }
            Ok(ContourPair::nested(
                ContourSpec::origin_circle(r_out, nodes),
                ContourSpec::origin_circle(r_in, nodes),
            ))
        }
    }
}

/// Finite-N deltas of the regime at size `n` (shared by both models).
fn regime_alpha_deltas(regime: &ScalingRegime, n: usize) -> Result<(f64, Vec<f64>)> {
    let g = regime.gaussian_params(n, 0, 0)?;
    Ok((g.alpha, g.deltas))
}

/// The theorem's left-hand side on the tensor grid `xs x ys`: the finite-N
/// kernel at rescaled arguments with the regime's prefactor.
pub fn rescaled_finite_grid(
    model: Model,
    regime: &ScalingRegime,
    n: usize,
    xs: &[f64],
    ys: &[f64],
) -> Result<Vec<Vec<f64>>> {
    regime.validate()?;
    let mu = regime.mu_of_n.mu(n);
    let nf = n as f64;
    let (alpha, deltas) = regime_alpha_deltas(regime, n)?;
    let points = coupling_points(alpha, &deltas);
    let pair = regime_contours(regime, n, &points)?;
    pair.validate(&points, Some(1.0))?;
    let esc = Escalation { max_nodes: 16384, ..Escalation::default() };
    // c: argument scale; shift: weight e^{shift (sqrt x - sqrt y)} on the scaled arguments
    let (c, grid) = match model {
        Model::Gaussian { nu, kappa } => {
            let params = GaussianEnsembleParams::new(n, n + kappa as usize, n + nu as usize, alpha, deltas)?;
            let mut integrand = gaussian_integrand(&params);
            let c = match regime.regime {
                Regime::I => mu / nf,
                Regime::II => 1.0 / (alpha * alpha),
                Regime::III => {
                    integrand.shift = 2.0 * alpha;
                    1.0 / (4.0 * nf * nf)
                }
                Regime::IV => 4.0 * mu * mu,
            };
            let sx: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let sy: Vec<f64> = ys.iter().map(|y| c * y).collect();
            (c, crate::parallel::install(|| double_contour_grid(&integrand, &pair, &sx, &sy, esc))?)
        }
        Model::Jacobi { nu, nu_prime, kappa } => {
            let params = JacobiEnsembleParams::new(n, nu, nu_prime, kappa, alpha, deltas)?;
            let mut integrand = jacobi_integrand(&params);
            let c = match regime.regime {
                Regime::I => (1.0 + mu) / (2.0 * nf * nf),
                Regime::II | Regime::IV => 1.0 / (alpha * nf),
                Regime::III => {
                    let c = 1.0 / (16.0 * alpha * mu * mu * nf * nf * nf);
                    integrand.shift = 1.0 / (2.0 * mu * nf * c.sqrt());
                    c
                }
            };
            let sx: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let sy: Vec<f64> = ys.iter().map(|y| c * y).collect();
            (c, crate::parallel::install(|| double_contour_grid(&integrand, &pair, &sx, &sy, esc))?)
        }
    };
    Ok(grid.iter().map(|row| row.iter().map(|v| c * v.value).collect()).collect())
}

/// Single-point version of [`rescaled_finite_grid`].
pub fn rescaled_finite_kernel(model: Model, regime: &ScalingRegime, n: usize, xi: f64, eta: f64) -> Result<f64> {
    Ok(rescaled_finite_grid(model, regime, n, &[xi], &[eta])?[0][0])
}

/// The regime's target on `xs x ys`; for the Jacobi model it carries the
/// extra `(eta/xi)^{kappa/2}`.
pub fn limit_target_grid(model: Model, regime: &ScalingRegime, xs: &[f64], ys: &[f64]) -> Result<Vec<Vec<f64>>> {
    let (nu, kappa) = model.nu_kappa();
    let family = limit_family(regime.regime);
    let p = match regime.regime {
        Regime::I => LimitKernelParams::new(nu, kappa, 1.0, vec![]),
        Regime::II => LimitKernelParams::new(nu, kappa, regime.tau, regime.pis.clone()),
        _ => LimitKernelParams::new(nu, kappa, 0.0, regime.pis.clone()),
    };
    let g = kernel_limit_grid(family, &p, None, xs, ys, Escalation::default())?;
    Ok(xs
        .iter()
        .zip(&g)
        .map(|(&x, row)| {
            ys.iter()
                .zip(row)
                .map(|(&y, v)| match model {
                    Model::Gaussian { .. } => v.value,
                    Model::Jacobi { .. } => (y / x).powf(kappa as f64 / 2.0) * v.value,
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub xi: f64,
    pub eta: f64,
    pub finite_value: f64,
    pub limit_value: f64,
    pub abs_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sup_error: f64,
    pub mean_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schedule: RegimeSchedule,
    pub rows: Vec<ConvergenceRow>,
    pub points: Vec<SweepPoint>,
    /// Sup error strictly decreasing over the last three `N`.
    pub decreasing: bool,
}

impl ConvergenceReport {
    pub fn final_sup(&self) -> f64 {
        self.rows.last().map(|r| r.sup_error).unwrap_or(f64::NAN)
    }
}

fn unique_sorted(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut u: Vec<f64> = v.collect();
    u.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    u.dedup();
    u
}

/// Errors of the rescaled finite-N kernel against its limit for every `N`
/// of the schedule. A violated trend is reported in `decreasing`, not raised.
pub fn convergence_report(schedule: &RegimeSchedule) -> Result<ConvergenceReport> {
    schedule.validate()?;
    let xs = unique_sorted(schedule.grid.iter().map(|g| g.0));
    let ys = unique_sorted(schedule.grid.iter().map(|g| g.1));
    let idx = |v: &[f64], a: f64| v.iter().position(|&b| b == a).expect("grid value present");
    let target = limit_target_grid(schedule.model, &schedule.regime, &xs, &ys)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &n in &schedule.n_values {
        let fin = rescaled_finite_grid(schedule.model, &schedule.regime, n, &xs, &ys)?;
        let mut sup = 0.0f64;
        let mut sum = 0.0;
        for &(x, y) in &schedule.grid {
            let (i, j) = (idx(&xs, x), idx(&ys, y));
            let e = (fin[i][j] - target[i][j]).abs();
            sup = sup.max(e);
            sum += e;
            points.push(SweepPoint {
                n,
                xi: x,
                eta: y,
                finite_value: fin[i][j],
                limit_value: target[i][j],
                abs_error: e,
            });
        }
        rows.push(ConvergenceRow { n, sup_error: sup, mean_error: sum / schedule.grid.len().max(1) as f64 });
    }
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
    Ok(ConvergenceReport { schedule: schedule.clone(), decreasing: trend_decreasing(&sups), rows, points })
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::I => "i",
        Regime::II => "ii",
        Regime::III => "iii",
        Regime::IV => "iv",
    }
}

/// CSV with columns `regime,N,xi,eta,finite_value,limit_value,abs_error`.
pub fn write_report_csv(report: &ConvergenceReport, out: &mut impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
    w.write_record(["regime", "N", "xi", "eta", "finite_value", "limit_value", "abs_error"])
        .map_err(io)?;
    let name = regime_name(report.schedule.regime.regime);
    for p in &report.points {
        w.write_record([
            name.to_string(),
            p.n.to_string(),
            fmt_f64(p.xi),
            fmt_f64(p.eta),
            fmt_f64(p.finite_value),
            fmt_f64(p.limit_value),
            fmt_f64(p.abs_error),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
    Ok(())
}

/// JSON summary: regime, model, per-`N` errors and the trend verdict.
pub fn report_summary(report: &ConvergenceReport) -> serde_json::Value {
    serde_json::json!({
        "regime": regime_name(report.schedule.regime.regime),
        "model": report.schedule.model,
        "schedule": report.schedule.regime,
        "rows": report.rows.iter().map(|r| serde_json::json!({
            "n": r.n,
            "sup_error": fmt_f64(r.sup_error),
            "mean_error": fmt_f64(r.mean_error),
        })).collect::<Vec<_>>(),
        "decreasing": report.decreasing,
    })
}
