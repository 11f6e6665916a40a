//! `cuspmap`: sampling, distortion fields, integrability sweeps, capacity
//! experiments and the acceptance suite for the exponential-cusp map.

mod config;
mod output;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cuspmap::acceptance::{self, AcceptanceOptions, CriterionResult};
use cuspmap::capacity::{
    annulus_capacity, lip_dirichlet_energy, lip_test_energy, superpoly_decay_check, theorem1_experiment, EnergyModel,
    GridSolverConfig, Theorem1Config, WeightKind,
};
use cuspmap::distortion::{bound_ratio_fit, decades, distortion_field_chain, PolarGrid};
use cuspmap::error::CuspError;
use cuspmap::maps::{boundary_image_trace, MapChain, Stage};
use cuspmap::point::PlanePoint;
use cuspmap::profile::ProfileParams;
use cuspmap::quadrature::{integral_exp_k, integral_k_pow, AnnularScheme};
use cuspmap::sampling::halton_disk_from;

use output::{emit, grey_levels, pgm, to_json, Csv};

#[derive(Parser)]
#[command(name = "cuspmap", version, about, args_override_self = true)]
struct Cli {
    /// Profile constant c_g.
    #[arg(long, global = true, default_value_t = 16.0)]
    cg: f64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Offset into the Halton sequence used for quasi-random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Plain-text key=value file with defaults for the global flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Pgm,
}

#[derive(Subcommand)]
enum Command {
    /// Push points through the map chain.
    #[command(subcommand)]
    Map(MapCmd),
    /// Distortion fields and the logarithmic bound.
    #[command(subcommand)]
    Distortion(DistortionCmd),
    /// Partial integrals of K^p or exp(lambda K) over shrinking annuli.
    Integrate(IntegrateArgs),
    /// Condenser capacities.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Run the acceptance suite; exit status 1 if any criterion fails.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ChainArg {
    /// Comma-separated stages of the chain.
    #[arg(long, value_delimiter = ',', default_values_t = ["f1".to_string(), "f2".into(), "f3".into()])]
    chain: Vec<String>,
}

#[derive(Subcommand)]
enum MapCmd {
    /// Images of listed points, a square grid or Halton points in the disk.
    Sample {
        /// Points `x1,x2`, several separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
        /// Square grid with this many nodes per side, restricted to |x| < 1.
        #[arg(long)]
        grid: Option<usize>,
        /// Quasi-random points in the disk of radius 0.99.
        #[arg(long)]
        halton: Option<usize>,
        /// Add the round-trip error column.
        #[arg(long)]
        roundtrip: bool,
        #[command(flatten)]
        chain: ChainArg,
    },
    /// Images of the cusp boundary points `t + i exp(-1/t)`.
    TraceBoundary {
        #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
        t: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum DistortionCmd {
    /// K over a log-polar grid in the cusp-map source plane.
    Field {
        #[arg(long, default_value_t = 1e-8)]
        r_min: f64,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        #[arg(long, default_value_t = 64)]
        nr: usize,
        #[arg(long, default_value_t = 64)]
        ntheta: usize,
        /// Upper end of the grey scale for log K; the field maximum when absent.
        #[arg(long)]
        log_k_max: Option<f64>,
        #[command(flatten)]
        chain: ChainArg,
    },
    /// Ratio of K to log(c_g/r) log log(c_g/r) along a ray.
    FitBound {
        /// Angle, as a number or a multiple of pi (`pi`, `-pi/2`, `3pi/4`).
        #[arg(long, default_value = "pi", allow_hyphen_values = true, value_parser = parse_angle)]
        theta: f64,
        /// Radii from 10^-decade-lo down to 10^-decade-hi.
        #[arg(long, default_value_t = 2.0)]
        decade_lo: f64,
        #[arg(long, default_value_t = 30.0)]
        decade_hi: f64,
        #[arg(long, default_value_t = 29)]
        n: usize,
    },
}

#[derive(Args)]
#[group(id = "integrand", required = true, multiple = false)]
struct Integrand {
    #[arg(long)]
    kpow: Option<f64>,
    #[arg(long)]
    explambda: Option<f64>,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    integrand: Integrand,
    /// Innermost radius 2^-k-max of the dyadic schedule.
    #[arg(long, default_value_t = 64)]
    k_max: u32,
    /// Use radii with ln eps = -2^j, j = 0..deep, instead of the dyadic schedule.
    #[arg(long, conflicts_with = "k_max")]
    deep: Option<u32>,
    #[arg(long)]
    annuli_per_octave: Option<usize>,
    #[arg(long)]
    radial_nodes: Option<usize>,
    #[arg(long)]
    angular_nodes: Option<usize>,
    #[command(flatten)]
    chain: ChainArg,
}

#[derive(Args, Clone, Copy)]
struct GridArgs {
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iterations: usize,
}

impl GridArgs {
    fn config(self) -> GridSolverConfig {
        GridSolverConfig { resolution: self.resolution, tolerance: self.tolerance, max_iterations: self.max_iterations }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Weight {
    InverseDistortion,
    Unit,
}

#[derive(Subcommand)]
enum CapacityCmd {
    /// Energy of the Lipschitz test function and its decay against powers of r.
    TestFn {
        #[arg(long, default_value_t = 0.2)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 5.0, 10.0])]
        s: Vec<f64>,
        /// Compare against a power cusp with this exponent instead of the exponential cusp.
        #[arg(long)]
        power_s0: Option<f64>,
    },
    /// Grid solve of the annulus condenser `rho < |x| < big_r`.
    Grid {
        #[arg(long, num_args = 2, value_names = ["RHO", "R"], default_values_t = [0.25, 1.0])]
        annulus: Vec<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Weighted capacity of the pulled-back condensers.
    Theorem1 {
        #[arg(long, value_delimiter = ',', default_values_t = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625])]
        t: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Weight::InverseDistortion)]
        weight: Weight,
        #[arg(long, default_value_t = 5.0)]
        s_cut: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Module name or criterion number.
    #[arg(long)]
    only: Option<String>,
    /// Negative control: use g' in place of G' in the analytic Jacobian.
    #[arg(long, hide = true)]
    inject_wrong_jacobian: bool,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Verification,
}

impl From<CuspError> for Failure {
    fn from(e: CuspError) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Numeric(format!("json: {e}"))
    }
}

type Run = Result<(), Failure>;

fn parse_angle(s: &str) -> Result<f64, String> {
    let s = s.trim().to_ascii_lowercase();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| format!("bad angle {s:?}"))?),
        None => (s.as_str(), 1.0),
    };
    let coef = num.strip_suffix("pi").ok_or_else(|| format!("bad angle {s:?}"))?.trim_end_matches('*');
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| format!("bad angle {s:?}"))?,
    };
    Ok(c * PI / den)
}

fn parse_points(s: &str) -> Result<Vec<PlanePoint>, Failure> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let xs: Vec<f64> = p
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::Usage(format!("bad point {p:?}")))?;
            match xs[..] {
                [x1, x2] => Ok(PlanePoint::new(x1, x2)),
                _ => Err(Failure::Usage(format!("point {p:?} needs two coordinates"))),
            }
        })
        .collect()
}

fn build_chain(params: ProfileParams, chain: &ChainArg) -> Result<MapChain, Failure> {
    let stages = chain
        .chain
        .iter()
        .map(|s| s.parse::<Stage>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    MapChain::with_stages(params, &stages).map_err(|e| Failure::Usage(e.to_string()))
}

struct Ctx {
    params: ProfileParams,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: u64,
}

impl Ctx {
    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Failure::Usage("this command does not support the requested --format".into()))
        }
    }

    fn write(&self, bytes: &[u8]) -> Run {
        Ok(emit(bytes, self.out.as_deref())?)
    }

    fn write_json<T: Serialize>(&self, value: &T) -> Run {
        self.write(to_json(value)?.as_bytes())
    }
}

fn map_cmd(ctx: &Ctx, cmd: MapCmd) -> Run {
    match cmd {
        MapCmd::Sample { points, grid, halton, roundtrip, chain } => {
            let chain = build_chain(ctx.params, &chain)?;
            let xs = match (points, grid, halton) {
                (Some(p), None, None) => parse_points(&p)?,
                (None, Some(n), None) if n >= 2 => (0..n * n)
                    .map(|k| {
                        let step = 2.0 / (n - 1) as f64;
                        PlanePoint::new(-1.0 + step * (k % n) as f64, 1.0 - step * (k / n) as f64)
                    })
                    .filter(|x| x.norm() < 1.0)
                    .collect(),
                (None, None, Some(n)) => halton_disk_from(1 + ctx.seed, n, 0.99),
                _ => return Err(Failure::Usage("give exactly one of --points, --grid N (N >= 2), --halton N".into())),
            };
            #[derive(Serialize)]
            struct Row {
                x1: f64,
                x2: f64,
                fx1: f64,
                fx2: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                roundtrip_error: Option<f64>,
            }
            let mut rows = Vec::with_capacity(xs.len());
            for x in xs {
                let w = chain.apply(x)?;
                let err = if roundtrip { Some(chain.apply_inverse(w)?.distance(x)) } else { None };
                let (fx1, fx2) = if w.at_infinity { (f64::INFINITY, f64::INFINITY) } else { (w.x1, w.x2) };
                rows.push(Row { x1: x.x1, x2: x.x2, fx1, fx2, roundtrip_error: err });
            }
            match ctx.format(Format::Csv, &[Format::Csv, Format::Json])? {
                Format::Json => ctx.write_json(&rows),
                _ => {
                    let mut header = vec!["x1", "x2", "fx1", "fx2"];
                    if roundtrip {
                        header.push("roundtrip_error");
                    }
                    let mut csv = Csv::new(&header);
                    for r in &rows {
                        let mut f = vec![r.x1, r.x2, r.fx1, r.fx2];
                        f.extend(r.roundtrip_error);
                        csv.row(&f);
                    }
                    ctx.write(csv.into_string().as_bytes())
                }
            }
        }
        MapCmd::TraceBoundary { t } => {
            if t.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
                return Err(Failure::Usage("--t values must lie in (0, 1)".into()));
            }
            let trace = boundary_image_trace(&t);
            match ctx.format(Format::Csv, &[Format::Csv, Format::Json])? {
                Format::Json => ctx.write_json(&trace),
                _ => {
                    let mut csv = Csv::new(&["t", "image_x1", "image_x2", "residual", "residual_over_t2"]);
                    for p in &trace {
                        csv.row(&[p.t, p.image.x1, p.image.x2, p.residual, p.residual / (p.t * p.t)]);
                    }
                    ctx.write(csv.into_string().as_bytes())
                }
            }
        }
    }
}

fn distortion_cmd(ctx: &Ctx, cmd: DistortionCmd) -> Run {
    match cmd {
        DistortionCmd::Field { r_min, r_max, nr, ntheta, log_k_max, chain } => {
            let chain = build_chain(ctx.params, &chain)?;
            let grid = PolarGrid { r_min, r_max, n_r: nr, n_theta: ntheta };
            let field = distortion_field_chain(&grid, &chain).map_err(|e| Failure::Usage(e.to_string()))?;
            match ctx.format(Format::Csv, &[Format::Csv, Format::Json, Format::Pgm])? {
                Format::Json => ctx.write_json(&field),
                Format::Pgm => {
                    let log_k: Vec<f64> = field.iter().map(|s| s.k.ln()).collect();
                    let top = log_k_max.unwrap_or_else(|| log_k.iter().copied().fold(0.0, f64::max));
                    // Innermost radius on the bottom row.
                    let mut pixels = Vec::with_capacity(log_k.len());
                    for row in log_k.chunks(ntheta).rev() {
                        pixels.extend(grey_levels(row, top));
                    }
                    ctx.write(&pgm(ntheta, nr, &pixels))
                }
                Format::Csv => {
                    let mut csv = Csv::new(&["r", "theta", "k", "op_norm", "jac_det"]);
                    for s in &field {
                        csv.row(&[s.base.r, s.base.theta, s.k, s.op_norm, s.jac_det]);
                    }
                    ctx.write(csv.into_string().as_bytes())
                }
            }
        }
        DistortionCmd::FitBound { theta, decade_lo, decade_hi, n } => {
            if !(decade_lo < decade_hi && n >= 2) {
                return Err(Failure::Usage("need decade-lo < decade-hi and n >= 2".into()));
            }
            let report = bound_ratio_fit(&decades(decade_lo, decade_hi, n), theta, &ctx.params)?;
            match ctx.format(Format::Json, &[Format::Csv, Format::Json])? {
                Format::Csv => {
                    let mut csv = Csv::new(&["log_r", "ratio"]);
                    for (l, q) in report.log_r.iter().zip(&report.ratios) {
                        csv.row(&[*l, *q]);
                    }
                    ctx.write(csv.into_string().as_bytes())
                }
                _ => ctx.write_json(&report),
            }?;
            eprintln!(
                "{} ratio range [{:.4}, {:.4}] within band [{}, {}]",
                if report.pass { "PASS" } else { "FAIL" },
                report.min,
                report.max,
                report.band.0,
                report.band.1
            );
            Ok(())
        }
    }
}

fn integrate_cmd(ctx: &Ctx, a: IntegrateArgs) -> Run {
    let chain = build_chain(ctx.params, &a.chain)?;
    let mut scheme = match a.deep {
        Some(j) => AnnularScheme::doubling_depth(j),
        None => AnnularScheme::dyadic(a.k_max),
    };
    if let Some(v) = a.annuli_per_octave {
        scheme.annuli_per_octave = v;
    }
    if let Some(v) = a.radial_nodes {
        scheme.radial_nodes = v;
    }
    if let Some(v) = a.angular_nodes {
        scheme.angular_nodes = v;
    }
    scheme.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let report = match (a.integrand.kpow, a.integrand.explambda) {
        (Some(p), _) => integral_k_pow(p, &scheme, &chain),
        (_, Some(l)) => integral_exp_k(l, &scheme, &chain),
        _ => unreachable!("clap enforces one integrand"),
    }?;
    match ctx.format(Format::Json, &[Format::Csv, Format::Json])? {
        Format::Csv => {
            let mut csv = Csv::new(&["log_eps", "log_value"]);
            for p in &report.partials {
                csv.row(&[p.log_eps, p.log_value]);
            }
            ctx.write(csv.into_string().as_bytes())
        }
        _ => ctx.write_json(&report),
    }
}

fn capacity_cmd(ctx: &Ctx, cmd: CapacityCmd) -> Run {
    match cmd {
        CapacityCmd::TestFn { r, d, s, power_s0 } => {
            let energy = lip_test_energy(r, d).map_err(|e| Failure::Usage(e.to_string()))?;
            let dirichlet = lip_dirichlet_energy(r, d)?;
            let model = match power_s0 {
                Some(s0) => EnergyModel::Power { s0 },
                None => EnergyModel::ExpCusp,
            };
            let radii: Vec<f64> = (3..=12).map(|k| 0.5f64.powi(k)).collect();
            let decay = superpoly_decay_check(&s, &radii, model)?;
            #[derive(Serialize)]
            struct Out<T, U, V> {
                energy: T,
                dirichlet_energy: U,
                decay: V,
            }
            ctx.format(Format::Json, &[Format::Json])?;
            ctx.write_json(&Out { energy, dirichlet_energy: dirichlet, decay })
        }
        CapacityCmd::Grid { annulus, grid } => {
            let cfg = grid.config();
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let (rho, big_r) = (annulus[0], annulus[1]);
            if !(rho > 0.0 && rho < big_r) {
                return Err(Failure::Usage("--annulus needs 0 < RHO < R".into()));
            }
            let est = annulus_capacity(rho, big_r, &cfg)?;
            let exact = 2.0 * PI / (big_r / rho).ln();
            #[derive(Serialize)]
            struct Out<T> {
                estimate: T,
                exact: f64,
                relative_error: f64,
            }
            ctx.format(Format::Json, &[Format::Json])?;
            ctx.write_json(&Out { relative_error: (est.value - exact) / exact, estimate: est, exact })
        }
        CapacityCmd::Theorem1 { t, weight, s_cut, grid } => {
            let cfg = Theorem1Config {
                grid: grid.config(),
                s_cut,
                weight: match weight {
                    Weight::InverseDistortion => WeightKind::InverseDistortion,
                    Weight::Unit => WeightKind::Unit,
                },
                ..Default::default()
            };
            cfg.grid.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let chain = MapChain::new(ctx.params);
            let table = theorem1_experiment(&t, &chain, &cfg)?;
            match ctx.format(Format::Json, &[Format::Csv, Format::Json])? {
                Format::Csv => {
                    let mut csv = Csv::new(&[
                        "t",
                        "log_diam_e",
                        "s_max",
                        "capacity",
                        "log_capacity",
                        "log_cap_over_t",
                        "log_cap_over_t2",
                        "lemma3_log_bound",
                    ]);
                    for r in &table.rows {
                        csv.row(&[
                            r.t,
                            r.log_diam_e,
                            r.s_max,
                            r.capacity,
                            r.log_capacity,
                            r.log_cap_over_t,
                            r.log_cap_over_t2,
                            r.lemma3_log_bound,
                        ]);
                    }
                    ctx.write(csv.into_string().as_bytes())
                }
                _ => ctx.write_json(&table),
            }
        }
    }
}

fn verify_cmd(ctx: &Ctx, a: VerifyArgs) -> Run {
    let opts = AcceptanceOptions { params: ctx.params, inject_wrong_jacobian: a.inject_wrong_jacobian, seed: ctx.seed };
    let (ids, with_determinism) = match a.only.as_deref() {
        None => (acceptance::ALL.to_vec(), true),
        Some("cli") | Some("10") => (acceptance::ALL.to_vec(), true),
        Some(f) => {
            (acceptance::select(f).ok_or_else(|| Failure::Usage(format!("no criterion or module {f:?}")))?, false)
        }
    };
    let mut results: Vec<CriterionResult> = Vec::new();
    for &id in &ids {
        let r = acceptance::run_criterion(id, &opts);
        println!("{}", r.line());
        results.push(r);
    }
    if with_determinism {
        let second = acceptance::run_suite(&ids, &opts);
        let det = acceptance::determinism(&results, &second);
        println!("{}", det.line());
        results.push(det);
    }
    if a.only.as_deref().is_some_and(|f| f == "cli" || f == "10") {
        results.retain(|r| r.id == 10);
    }
    if let Some(path) = &ctx.out {
        emit(to_json(&results)?.as_bytes(), Some(path))?;
    }
    if results.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn run(cli: Cli) -> Run {
    let params = ProfileParams::new(cli.cg, 1.0).map_err(|e| Failure::Usage(e.to_string()))?;
    let ctx = Ctx { params, out: cli.out, format: cli.format, seed: cli.seed };
    match cli.command {
        Command::Map(c) => map_cmd(&ctx, c),
        Command::Distortion(c) => distortion_cmd(&ctx, c),
        Command::Integrate(a) => integrate_cmd(&ctx, a),
        Command::Capacity(c) => capacity_cmd(&ctx, c),
        Command::Verify(a) => verify_cmd(&ctx, a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric error: {msg}");
            ExitCode::from(3)
        }
    }
}
