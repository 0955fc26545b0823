//! Command-line front end: `sample`, `kernel`, `gap`, `sweep`.
//!
//! Every command takes its parameters from flags and optionally a JSON file
//! (`--config`); flags win. The resolved parameters go into a sidecar
//! `<out>.json` together with the tool version, and feeding that sidecar
//! back through `--config` replays the run.

use crate::biorthogonal::gaussian_system;
use crate::contour::{
    coupling_points, default_contours, default_contours_for_points, kernel_contour_grid,
    kernel_contour_jacobi_grid, Escalation, KernelValue,
};
use crate::ensemble::{fmt_f64, sample_batch, sidecar_path, write_batch_csv, Regime, ScalingRegime};
use crate::fredholm::{
    gap_probability, FnKernel, GaussianContourKernel, JacobiContourKernel, Kernel, LimitKernel,
    NystromSettings, Transform,
};
use crate::limits::{kernel_limit_grid, LimitFamily, LimitKernelParams};
use crate::sweep::{convergence_report, report_summary, tensor_grid, write_report_csv, Model, RegimeSchedule};
use crate::{Error, GaussianEnsembleParams, JacobiEnsembleParams};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
const EXIT_IO: i32 = 1;

#[derive(Parser, Debug)]
#[command(name = "hardedge", version, about = "Kernels, hard-edge limits and gap probabilities of coupled Gaussian products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Monte Carlo draws of the squared singular values.
    Sample(SampleArgs),
    /// Correlation kernel on a grid.
    Kernel(KernelArgs),
    /// Gap probability and smallest-eigenvalue distribution on (0, s).
    Gap(GapArgs),
    /// Convergence of a rescaled finite-N kernel to its hard-edge limit.
    Sweep(SweepArgs),
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SampleArgs {
    /// JSON file with any of these parameters; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub m_dim: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Coupling singular values, comma separated; one value is repeated N times.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta: Option<Vec<f64>>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Kernel parameters shared by `kernel` and `gap`.
#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParamArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Columns of the first factor (`L = N + kappa`); defaults to N.
    #[arg(long)]
    pub l: Option<usize>,
    /// Rows of the second factor (`M = N + nu`); defaults to N.
    #[arg(long)]
    pub m_dim: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta: Option<Vec<f64>>,
    /// `nu` for the limiting and Jacobi kernels.
    #[arg(long)]
    pub nu: Option<u32>,
    #[arg(long)]
    pub nu_prime: Option<u32>,
    #[arg(long)]
    pub kappa: Option<u32>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Number of spikes; must match the length of `--pi` when both are given.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub pi: Option<Vec<f64>>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct KernelArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// gram | contour | limit-I | limit-II | limit-III | limit-IV | jacobi-contour
    #[arg(long)]
    pub method: Option<String>,
    /// Grid `a:b:n` (n equispaced values from a to b).
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: KernelParamArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GapArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Kernel method as for `kernel`.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub s_max: Option<f64>,
    /// Number of s values, `0..=s_max` equispaced.
    #[arg(long)]
    pub points: Option<usize>,
    /// Starting Nystrom node count (doubled up to 8x).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: KernelParamArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// i | ii | iii | iv
    #[arg(long)]
    pub regime: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// gaussian | jacobi
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub nu: Option<u32>,
    #[arg(long)]
    pub nu_prime: Option<u32>,
    #[arg(long)]
    pub kappa: Option<u32>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub pi: Option<Vec<f64>>,
    /// Tensor grid `a:b:k` per axis.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Convergence(_) | Error::Numeric(_) => EXIT_CONVERGENCE,
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_VALIDATION, message: msg.into() }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn sorted(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<_> = m.keys().cloned().collect();
            keys.sort();
            let mut out = Map::new();
            let mut m = m;
            for k in keys {
                let x = m.remove(&k).expect("key");
                out.insert(k, sorted(x));
            }
            Value::Object(out)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sorted).collect()),
        x => x,
    }
}

/// Flags over file: non-null flag values replace the file's entries. A
/// sidecar (with `config` and `version` keys) is accepted as the file.
fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> CliResult<(T, Value)> {
    let mut base = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            let v = match v {
                Value::Object(mut m) if m.contains_key("version") && m.contains_key("config") => {
                    m.remove("config").expect("config key")
                }
                v => v,
            };
            match v {
                Value::Object(m) => m,
                _ => return Err(invalid("config file must hold a JSON object")),
            }
        }
        None => Map::new(),
    };
    let fl = serde_json::to_value(flags).map_err(|e| invalid(e.to_string()))?;
    if let Value::Object(m) = fl {
        for (k, v) in m {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    let resolved: T = serde_json::from_value(Value::Object(base)).map_err(|e| invalid(format!("config: {e}")))?;
    let value = sorted(serde_json::to_value(&resolved).map_err(|e| invalid(e.to_string()))?);
    Ok((resolved, value))
}

fn need<T: Clone>(v: &Option<T>, name: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| invalid(format!("missing --{name}")))
}

fn write_outputs(out: &Path, body: &[u8], command: &str, config: &Value) -> CliResult<()> {
    std::fs::write(out, body).map_err(|e| io_err(out, e))?;
    let mut side = Map::new();
    side.insert("command".into(), Value::String(command.into()));
    side.insert("config".into(), config.clone());
    side.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    let text = serde_json::to_string_pretty(&Value::Object(side)).expect("json") + "\n";
    let sp = sidecar_path(out);
    std::fs::write(&sp, text).map_err(|e| io_err(&sp, e))
}

/// `a:b:n` into `n` equispaced values.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid(format!("grid '{spec}' is not of the form a:b:n")));
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| invalid(format!("bad grid start in '{spec}'")))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| invalid(format!("bad grid end in '{spec}'")))?;
    let n: usize = parts[2].trim().parse().map_err(|_| invalid(format!("bad grid count in '{spec}'")))?;
    Ok(match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    })
}

fn deltas_for(n: usize, d: Vec<f64>) -> Vec<f64> {
    if d.len() == 1 && n > 1 {
        vec![d[0]; n]
    } else {
        d
    }
}

fn gaussian_params(p: &KernelParamArgs) -> CliResult<GaussianEnsembleParams> {
    let n = need(&p.n, "n")?;
    let deltas = deltas_for(n, need(&p.delta, "delta")?);
    Ok(GaussianEnsembleParams::new(n, p.l.unwrap_or(n), p.m_dim.unwrap_or(n), need(&p.alpha, "alpha")?, deltas)?)
}

fn jacobi_params(p: &KernelParamArgs) -> CliResult<JacobiEnsembleParams> {
    let n = need(&p.n, "n")?;
    let deltas = deltas_for(n, need(&p.delta, "delta")?);
    Ok(JacobiEnsembleParams::new(
        n,
        p.nu.unwrap_or(0),
        p.nu_prime.unwrap_or(0),
        p.kappa.unwrap_or(0),
        need(&p.alpha, "alpha")?,
        deltas,
    )?)
}

fn limit_params(p: &KernelParamArgs) -> CliResult<LimitKernelParams> {
    let pis = p.pi.clone().unwrap_or_default();
    if let Some(m) = p.m {
        if m != pis.len() {
            return Err(invalid(format!("--m {m} but {} values in --pi", pis.len())));
        }
    }
    Ok(LimitKernelParams::new(p.nu.unwrap_or(0), p.kappa.unwrap_or(0), p.tau.unwrap_or(1.0), pis))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Gram,
    Contour,
    Limit(LimitFamily),
    JacobiContour,
}

fn parse_method(s: &str) -> CliResult<Method> {
    Ok(match s {
        "gram" => Method::Gram,
        "contour" => Method::Contour,
        "jacobi-contour" => Method::JacobiContour,
        "limit-I" => Method::Limit(LimitFamily::I),
        "limit-II" => Method::Limit(LimitFamily::II),
        "limit-III" => Method::Limit(LimitFamily::III),
        "limit-IV" => Method::Limit(LimitFamily::IV),
        _ => return Err(invalid(format!("unknown method '{s}'"))),
    })
}

fn kernel_table(method: Method, p: &KernelParamArgs, xs: &[f64], ys: &[f64]) -> CliResult<Vec<Vec<KernelValue>>> {
    let esc = Escalation::default();
    Ok(match method {
        Method::Gram => {
            let sys = gaussian_system(&gaussian_params(p)?)?;
            let mut out = Vec::with_capacity(xs.len());
            for &x in xs {
                let row = ys
                    .iter()
                    .map(|&y| Ok(KernelValue { value: sys.kernel(x, y)?, im_residual: 0.0, nodes: 0 }))
                    .collect::<crate::Result<Vec<_>>>()?;
                out.push(row);
            }
            out
        }
        Method::Contour => {
            let g = gaussian_params(p)?;
            kernel_contour_grid(&g, &default_contours(&g)?, xs, ys, esc)?
        }
        Method::JacobiContour => {
            let j = jacobi_params(p)?;
            let pair = default_contours_for_points(&coupling_points(j.alpha, &j.deltas))?;
            kernel_contour_jacobi_grid(&j, &pair, xs, ys, esc)?
        }
        Method::Limit(f) => kernel_limit_grid(f, &limit_params(p)?, None, xs, ys, esc)?,
    })
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf)
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_IO, message: format!("csv: {e}") }
}

fn cmd_sample(args: &SampleArgs) -> CliResult<()> {
    let (a, cfg) = resolve(args, args.config.as_deref())?;
    let n = need(&a.n, "n")?;
    let params = GaussianEnsembleParams::new(
        n,
        need(&a.l, "l")?,
        need(&a.m_dim, "m-dim")?,
        need(&a.alpha, "alpha")?,
        deltas_for(n, need(&a.delta, "delta")?),
    )?;
    let out = need(&a.out, "out")?;
    let batch = sample_batch(&params, need(&a.seed, "seed")?, need(&a.draws, "draws")?)?;
    let mut buf = Vec::new();
    write_batch_csv(&batch, &mut buf)?;
    write_outputs(&out, &buf, "sample", &cfg)
}

fn cmd_kernel(args: &KernelArgs) -> CliResult<()> {
    let (a, cfg) = resolve(args, args.config.as_deref())?;
    let method = parse_method(&need(&a.method, "method")?)?;
    let xs = parse_grid(&need(&a.x, "x")?)?;
    let ys = parse_grid(&need(&a.y, "y")?)?;
    let out = need(&a.out, "out")?;
    let with_im = !matches!(method, Method::Gram | Method::Limit(LimitFamily::I));
    let table = if xs.is_empty() || ys.is_empty() { vec![] } else { kernel_table(method, &a.params, &xs, &ys)? };
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        let header: &[&str] = if with_im { &["x", "y", "K", "im_residual"] } else { &["x", "y", "K"] };
        w.write_record(header).map_err(csv_err)?;
        for (i, row) in table.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let mut rec = vec![fmt_f64(xs[i]), fmt_f64(ys[j]), fmt_f64(v.value)];
                if with_im {
                    rec.push(fmt_f64(v.im_residual));
                }
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
        w.flush().map_err(csv_err)?;
    }
    write_outputs(&out, &buf, "kernel", &cfg)
}

fn gap_kernel(method: Method, p: &KernelParamArgs) -> CliResult<Box<dyn Kernel>> {
    Ok(match method {
        Method::Gram => {
            let sys = gaussian_system(&gaussian_params(p)?)?;
            Box::new(FnKernel(move |x, y| sys.kernel(x, y)))
        }
        Method::Contour => {
            let params = gaussian_params(p)?;
            let contours = default_contours(&params)?;
            Box::new(GaussianContourKernel { params, contours })
        }
        Method::JacobiContour => {
            let params = jacobi_params(p)?;
            let contours = default_contours_for_points(&coupling_points(params.alpha, &params.deltas))?;
            Box::new(JacobiContourKernel { params, contours })
        }
        Method::Limit(family) => {
            let params = limit_params(p)?;
            params.validate(family)?;
            Box::new(LimitKernel { family, params })
        }
    })
}

/// Node cap of the `gap` command relative to the starting count.
pub const GAP_NODE_FACTOR: usize = 8;

fn cmd_gap(args: &GapArgs) -> CliResult<()> {
    let (a, cfg) = resolve(args, args.config.as_deref())?;
    let method = parse_method(&need(&a.kernel, "kernel")?)?;
    let s_max = need(&a.s_max, "s-max")?;
    if !(s_max >= 0.0 && s_max.is_finite()) {
        return Err(invalid("--s-max must be a non-negative number"));
    }
    let points = a.points.unwrap_or(11);
    let nodes = a.nodes.unwrap_or(NystromSettings::default().nodes);
    if nodes == 0 {
        return Err(invalid("--nodes must be positive"));
    }
    let out = need(&a.out, "out")?;
    let kernel = gap_kernel(method, &a.params)?;
    let settings = NystromSettings {
        nodes,
        max_nodes: nodes * GAP_NODE_FACTOR,
        tol: NystromSettings::default().tol,
        transform: Transform::SquareMap,
    };
    let ss: Vec<f64> = match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points).map(|i| s_max * i as f64 / (points - 1) as f64).collect(),
    };
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(["s", "gap", "cdf"]).map_err(csv_err)?;
        for &s in &ss {
            let g = gap_probability(kernel.as_ref(), s, &settings)?;
            if !g.converged {
                return Err(CliError {
                    code: EXIT_CONVERGENCE,
                    message: format!(
                        "gap probability at s = {s} not stable to {:e} with {} nodes (last change {:e})",
                        settings.tol, g.nodes, g.error
                    ),
                });
            }
            w.write_record([fmt_f64(s), fmt_f64(g.value()), fmt_f64(1.0 - g.value())]).map_err(csv_err)?;
        }
        w.flush().map_err(csv_err)?;
    }
    write_outputs(&out, &buf, "gap", &cfg)
}

/// Runs `sweep`; returns whether the trend held.
fn cmd_sweep(args: &SweepArgs) -> CliResult<bool> {
    let (a, cfg) = resolve(args, args.config.as_deref())?;
    let regime: Regime = need(&a.regime, "regime")?.parse()?;
    let n_values = need(&a.n_list, "n-list")?;
    let (nu, kappa) = (a.nu.unwrap_or(0), a.kappa.unwrap_or(0));
    let model = match a.model.as_deref().unwrap_or("gaussian") {
        "gaussian" => Model::Gaussian { nu, kappa },
        "jacobi" => Model::Jacobi { nu, nu_prime: a.nu_prime.unwrap_or(0), kappa },
        m => return Err(invalid(format!("unknown model '{m}'"))),
    };
    let pis = a.pi.clone().unwrap_or_else(|| match regime {
        Regime::I => vec![],
        _ => vec![0.5],
    });
    let grid = match &a.grid {
        Some(g) => {
            let v = parse_grid(g)?;
            let (lo, hi) = (v.first().copied().unwrap_or(0.5), v.last().copied().unwrap_or(5.0));
            tensor_grid(lo, hi, v.len())
        }
        None => crate::sweep::default_grid(),
    };
    let out = need(&a.out, "out")?;
    let schedule = RegimeSchedule {
        regime: ScalingRegime::with_defaults(regime, a.tau.unwrap_or(1.0), pis)?,
        model,
        n_values,
        grid,
    };
    let report = convergence_report(&schedule)?;
    let mut buf = Vec::new();
    write_report_csv(&report, &mut buf)?;
    write_outputs(&out, &buf, "sweep", &cfg)?;
    let summary = sorted(report_summary(&report));
    let mut sp = out.as_os_str().to_owned();
    sp.push(".summary.json");
    let sp = PathBuf::from(sp);
    std::fs::write(&sp, serde_json::to_string_pretty(&summary).expect("json") + "\n").map_err(|e| io_err(&sp, e))?;
    Ok(report.decreasing)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let res = match &cli.command {
        Command::Sample(a) => cmd_sample(a).map(|_| 0),
        Command::Kernel(a) => cmd_kernel(a).map(|_| 0),
        Command::Gap(a) => cmd_gap(a).map(|_| 0),
        Command::Sweep(a) => cmd_sweep(a).map(|ok| {
            if ok {
                0
            } else {
                eprintln!("sweep: errors did not decrease over the last three N");
                EXIT_CONVERGENCE
            }
        }),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
