//! The coupled Gaussian pair `(X1, X2)`: parameters, exact sampling, squared
//! singular values of `X1 X2`, and the joint eigenvalue density.
//!
//! The coupling matrix is taken as `diag(delta) | 0`. Then the only dependent
//! entries are the pairs `(X1[j][k], X2[k][j])` for `j < N`; for each pair the
//! real parts have covariance `[[a, d], [d, a]] / (2 (a^2 - d^2))` (`a = alpha`,
//! `d = delta_j`) and the imaginary parts the same with `-d`.

use crate::biorthogonal::gaussian_gram;
use crate::specfun::{bessel_i_scaled, bessel_k_scaled, ln_factorial};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnsembleParams {
    /// Number of nonzero squared singular values `N`.
    pub n: usize,
    pub l: usize,
    pub m_dim: usize,
    pub alpha: f64,
    /// Singular values of the coupling matrix, one per eigenvalue.
    pub deltas: Vec<f64>,
}

impl GaussianEnsembleParams {
    pub fn new(n: usize, l: usize, m_dim: usize, alpha: f64, deltas: Vec<f64>) -> Result<Self> {
        let p = GaussianEnsembleParams { n, l, m_dim, alpha, deltas };
        p.validate()?;
        Ok(p)
    }

    /// `N = L = M`, so `nu = kappa = 0` unless given.
    pub fn square(n: usize, nu: usize, kappa: usize, alpha: f64, deltas: Vec<f64>) -> Result<Self> {
        Self::new(n, n + kappa, n + nu, alpha, deltas)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("n must be >= 1".into()));
        }
        if self.l < self.n {
            return Err(Error::Validation(format!("l >= n required (l={}, n={})", self.l, self.n)));
        }
        if self.m_dim < self.n {
            return Err(Error::Validation(format!(
                "m_dim >= n required (m_dim={}, n={})",
                self.m_dim, self.n
            )));
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

    /// `nu = M - N`.
    pub fn nu(&self) -> u32 {
        (self.m_dim - self.n) as u32
    }

    /// `kappa = L - N`.
    pub fn kappa(&self) -> u32 {
        (self.l - self.n) as u32
    }
}

/// Hard-edge regime of the coupled product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    I,
    II,
    III,
    IV,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Regime::I),
            "ii" | "2" => Ok(Regime::II),
            "iii" | "3" => Ok(Regime::III),
            "iv" | "4" => Ok(Regime::IV),
            _ => Err(Error::Validation(format!("unknown regime '{s}'"))),
        }
    }
}

/// Coupling strength `mu` as a function of `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuSchedule {
    Fixed { mu: f64 },
    /// `mu = tau / (4 N)`.
    Critical { tau: f64 },
    /// `mu = N^{-exponent}`.
    Power { exponent: f64 },
}

impl MuSchedule {
    pub fn mu(&self, n: usize) -> f64 {
        match *self {
            MuSchedule::Fixed { mu } => mu,
            MuSchedule::Critical { tau } => tau / (4.0 * n as f64),
            MuSchedule::Power { exponent } => (n as f64).powf(-exponent),
        }
    }
}

/// Regime tag plus the finite-rank data of the scaling assumptions:
/// `alpha = (1+mu)/(2 mu)`, `delta_{m+1..N} = (1-mu)/(2 mu)`, and the first
/// `m` deltas set from `pis`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    pub regime: Regime,
    pub m: usize,
    pub mu_of_n: MuSchedule,
    pub tau: f64,
    pub pis: Vec<f64>,
}

impl ScalingRegime {
    /// Default schedules: `mu = 1` for I, `tau/(4N)` for II, `N^{-3/2}` for III and IV.
    pub fn with_defaults(regime: Regime, tau: f64, pis: Vec<f64>) -> Result<Self> {
        let mu_of_n = match regime {
            Regime::I => MuSchedule::Fixed { mu: 1.0 },
            Regime::II => MuSchedule::Critical { tau },
            Regime::III | Regime::IV => MuSchedule::Power { exponent: 1.5 },
        };
        let r = ScalingRegime { regime, m: pis.len(), mu_of_n, tau, pis };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pis.len() != self.m {
            return Err(Error::Validation(format!("expected {} pis, got {}", self.m, self.pis.len())));
        }
        let open01 = |p: f64| p > 0.0 && p < 1.0;
        match self.regime {
            Regime::I => {}
            Regime::II => {
                if !(self.tau > 0.0) {
                    return Err(Error::Validation("regime II needs tau > 0".into()));
                }
                if !self.pis.iter().all(|&p| open01(p)) {
                    return Err(Error::Validation("regime II needs pi_l in (0, 1)".into()));
                }
            }
            Regime::III => {
                if !self.pis.iter().all(|&p| p > 0.0 && p.is_finite()) {
                    return Err(Error::Validation("regime III needs pi_l > 0".into()));
                }
            }
            Regime::IV => {
                if self.m == 0 {
                    return Err(Error::Validation("regime IV needs m >= 1".into()));
                }
                if !self.pis.iter().all(|&p| open01(p)) {
                    return Err(Error::Validation("regime IV needs pi_l in (0, 1)".into()));
                }
            }
        }
        Ok(())
    }

    /// `(alpha, delta)` for coupling strength `mu`.
    pub fn alpha_delta(mu: f64) -> (f64, f64) {
        ((1.0 + mu) / (2.0 * mu), (1.0 - mu) / (2.0 * mu))
    }

    /// `1 - delta_l^2 / alpha^2` for the `m` exceptional couplings at size `n`.
    pub fn spike_points(&self, n: usize) -> Vec<f64> {
        let mu = self.mu_of_n.mu(n);
        match self.regime {
            Regime::III => self.pis.iter().map(|p| 4.0 * mu * n as f64 * p).collect(),
            _ => self.pis.clone(),
        }
    }

    /// Finite-N ensemble with `L = N + kappa`, `M = N + nu`.
    pub fn gaussian_params(&self, n: usize, nu: u32, kappa: u32) -> Result<GaussianEnsembleParams> {
        self.validate()?;
        if n < self.m {
            return Err(Error::Validation(format!("n={n} smaller than m={}", self.m)));
        }
        let (alpha, delta) = Self::alpha_delta(self.mu_of_n.mu(n));
        let mut deltas = Vec::with_capacity(n);
        for a in self.spike_points(n) {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Domain(format!(
                    "spike point 1 - delta^2/alpha^2 = {a} outside (0, 1] at n={n}"
                )));
            }
            deltas.push(alpha * (1.0 - a).sqrt());
        }
        deltas.resize(n, delta);
        GaussianEnsembleParams::new(n, n + kappa as usize, n + nu as usize, alpha, deltas)
    }
}

/// Seeded Monte Carlo draws; row `d` holds the ascending eigenvalues of draw `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub params: GaussianEnsembleParams,
    pub seed: u64,
    pub draws: usize,
    pub eigenvalues: Vec<Vec<f64>>,
}

/// Generator for draw `draw` of the batch with seed `seed`.
pub fn draw_rng(seed: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// One draw of `(X1, X2)` with shapes `L x M` and `M x N`.
pub fn sample_pair(
    params: &GaussianEnsembleParams,
    rng: &mut impl Rng,
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    params.validate()?;
    let (n, l, m) = (params.n, params.l, params.m_dim);
    let a = params.alpha;
    let mut x1 = DMatrix::<C64>::zeros(l, m);
    let mut x2 = DMatrix::<C64>::zeros(m, n);
    for j in 0..n {
        let d = params.deltas[j];
        let sigma = (a / (2.0 * (a * a - d * d))).sqrt();
        let rho = d / a;
        let rc = (1.0 - rho * rho).sqrt();
        for k in 0..m {
            let (z1, z2, z3, z4) = (normal(rng), normal(rng), normal(rng), normal(rng));
            x1[(j, k)] = C64::new(sigma * z1, sigma * z3);
            x2[(k, j)] = C64::new(sigma * (rho * z1 + rc * z2), sigma * (-rho * z3 + rc * z4));
        }
    }
    let s = (1.0 / (2.0 * a)).sqrt();
    for j in n..l {
        for k in 0..m {
            x1[(j, k)] = C64::new(s * normal(rng), s * normal(rng));
        }
    }
    Ok((x1, x2))
}

/// Ascending eigenvalues of `(X1 X2)^* (X1 X2)`, tiny negatives clamped to 0.
pub fn squared_singular_values(x1: &DMatrix<C64>, x2: &DMatrix<C64>) -> Result<Vec<f64>> {
    if x1.ncols() != x2.nrows() {
        return Err(Error::Validation(format!(
            "shapes {}x{} and {}x{} do not conform",
            x1.nrows(),
            x1.ncols(),
            x2.nrows(),
            x2.ncols()
        )));
    }
    let y = x1 * x2;
    let h = y.adjoint() * &y;
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(h, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for v in vals.iter_mut() {
        if !v.is_finite() {
            return Err(Error::Numeric("non-finite eigenvalue".into()));
        }
        if *v < 0.0 {
            if *v < -1e-12 * scale {
                return Err(Error::Numeric(format!("negative eigenvalue {v} of a Gram matrix")));
            }
            *v = 0.0;
        }
    }
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(vals)
}

/// `draws` independent samples; draw `d` uses stream `d` of `seed`, so the
/// result does not depend on the worker count.
pub fn sample_batch(params: &GaussianEnsembleParams, seed: u64, draws: usize) -> Result<SampleBatch> {
    params.validate()?;
    let eigenvalues = crate::parallel::install(|| {
        (0..draws)
            .into_par_iter()
            .map(|d| {
                let mut rng = draw_rng(seed, d as u64);
                let (x1, x2) = sample_pair(params, &mut rng)?;
                squared_singular_values(&x1, &x2)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SampleBatch { params: params.clone(), seed, draws, eigenvalues })
}

/// Value of the joint density; `degenerate` marks parameters where coincident
/// or zero deltas were split by `epsilon` and extrapolated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PdfValue {
    pub value: f64,
    pub degenerate: bool,
}

/// Splitting used for coincident or zero deltas.
pub const PDF_SPLIT_EPS: f64 = 1e-5;

fn needs_split(p: &GaussianEnsembleParams) -> bool {
    let gap = 1e-6 * p.alpha;
    let d = &p.deltas;
    (p.kappa() > 0 && d.iter().any(|&x| x < gap))
        || (0..d.len()).any(|i| (0..i).any(|j| (d[i] - d[j]).abs() < gap))
}

fn split(p: &GaussianEnsembleParams, eps: f64) -> GaussianEnsembleParams {
    let mut q = p.clone();
    let base = eps * p.alpha;
    for (j, d) in q.deltas.iter_mut().enumerate() {
        *d += base * (j as f64 + 1.0);
    }
    q
}

/// `(ln |det A|, sign)` by partial-pivot LU; sign 0 for a singular matrix.
pub(crate) fn ln_abs_det(a: DMatrix<f64>) -> Result<(f64, f64)> {
    let lu = a.lu();
    let mut sign: f64 = lu.p().determinant();
    let mut ln = 0.0;
    let u = lu.u();
    for i in 0..u.nrows() {
        let v = u[(i, i)];
        if !v.is_finite() {
            return Err(Error::Numeric("non-finite LU pivot".into()));
        }
        if v == 0.0 {
            return Ok((f64::NEG_INFINITY, 0.0));
        }
        ln += v.abs().ln();
        sign *= v.signum();
    }
    Ok((ln, sign))
}

fn pdf_distinct(p: &GaussianEnsembleParams, x: &[f64]) -> Result<f64> {
    let n = p.n;
    let (nu, kappa) = (p.nu() as i32, p.kappa() as i32);
    let dmax = p.deltas.iter().cloned().fold(0.0, f64::max);
    let mut xi = DMatrix::<f64>::zeros(n, n);
    let mut eta = DMatrix::<f64>::zeros(n, n);
    let mut ln_cols = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        let r = xj.sqrt();
        ln_cols += 2.0 * dmax * r - 2.0 * p.alpha * r + 0.5 * nu as f64 * xj.ln();
        for i in 0..n {
            let di = p.deltas[i];
            let iv = bessel_i_scaled(kappa, C64::new(2.0 * di * r, 0.0))?.re;
            xi[(i, j)] = iv * (2.0 * (di - dmax) * r).exp();
            let kv = bessel_k_scaled(nu - kappa + i as i32, C64::new(2.0 * p.alpha * r, 0.0))?.re;
            eta[(i, j)] = kv * xj.powf(i as f64 / 2.0);
        }
    }
    let (l1, s1) = ln_abs_det(xi)?;
    let (l2, s2) = ln_abs_det(eta)?;
    if s1 == 0.0 || s2 == 0.0 {
        return Ok(0.0);
    }
    let (lz, sz) = ln_abs_det(gaussian_gram(p))?;
    let ln_z = ln_factorial(n as u32) + lz;
    let v = (l1 + l2 + ln_cols - ln_z).exp() * s1 * s2 * sz;
    Ok(v.max(0.0))
}

/// Joint density of the `N` squared singular values at `x`, with normalization.
pub fn joint_pdf(params: &GaussianEnsembleParams, x: &[f64]) -> Result<PdfValue> {
    params.validate()?;
    if x.len() != params.n {
        return Err(Error::Validation(format!("expected {} points, got {}", params.n, x.len())));
    }
    if x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("joint_pdf needs positive points".into()));
    }
    if !needs_split(params) {
        return Ok(PdfValue { value: pdf_distinct(params, x)?, degenerate: false });
    }
    let e = PDF_SPLIT_EPS;
    let a = pdf_distinct(&split(params, e), x)?;
    let b = pdf_distinct(&split(params, e / 2.0), x)?;
    Ok(PdfValue { value: (2.0 * b - a).max(0.0), degenerate: true })
}

/// Histogram of a batch on the bin edges `edges`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `counts / draws`; sums to `N` minus `outside`.
    pub mass: Vec<f64>,
    /// `mass / bin width`, an estimate of the one-point density.
    pub density: Vec<f64>,
    /// Mass per draw falling outside the edges.
    pub outside: f64,
    pub draws: usize,
}

pub fn empirical_density(batch: &SampleBatch, edges: &[f64]) -> Result<Histogram> {
    if batch.draws == 0 || batch.eigenvalues.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation("bin edges must be increasing, at least two".into()));
    }
    let nb = edges.len() - 1;
    let mut counts = vec![0u64; nb];
    let mut out = 0u64;
    for row in &batch.eigenvalues {
        for &v in row {
            // bins are [e_k, e_{k+1}), the last one closed
            let k = edges.partition_point(|&e| e <= v);
            if k == 0 || (k > nb && v > edges[nb]) {
                out += 1;
            } else {
                counts[(k - 1).min(nb - 1)] += 1;
            }
        }
    }
    let draws = batch.eigenvalues.len() as f64;
    let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / draws).collect();
    let density = mass.iter().zip(edges.windows(2)).map(|(m, w)| m / (w[1] - w[0])).collect();
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        mass,
        density,
        outside: out as f64 / draws,
        draws: batch.eigenvalues.len(),
    })
}

/// Round-trip decimal formatting used in every CSV: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `draw,idx,value` rows.
pub fn write_batch_csv(batch: &SampleBatch, out: &mut impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
    w.write_record(["draw", "idx", "value"]).map_err(io)?;
    for (d, row) in batch.eigenvalues.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            w.write_record([d.to_string(), i.to_string(), fmt_f64(*v)]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
    Ok(())
}

/// Sidecar JSON next to `path` (`<path>.json`).
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
