use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use qlab::beltrami::{solve_principal, BeltramiField, PlanarMap};
use qlab::carleson::{carleson_norm, BallFamily, CarlesonDensity, Reference, DEFAULT_CENTERS};
use qlab::cauchy::{hinf_profile, BoundaryFunction, BuiltinG};
use qlab::experiments::config::{GridSpec, Scenario};
use qlab::experiments::{self, ScenarioConfig};
use qlab::extension::{cutoff_global, ConformalBoundaryMap, MapKind, DEFAULT_R0};
use qlab::io::{read_curve, read_field, write_curve, write_field};
use qlab::regularity::{
    a_infinity_indicator, bmo_dyadic_norm, chord_arc_metrics, curve_report, dyadic_lags, dynkin_check,
    hardy_littlewood_fit, holder_exponent, omega_ms, DEFAULT_DYNKIN_C,
};
use qlab::{Complex64, ParametricCurve, QlabError, Region, Result};

#[derive(Parser)]
#[command(name = "qlab", version, about = "Quasiconformal maps, Carleson measures and Cauchy integrals on grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Beltrami equation for the principal solution.
    Solve(SolveArgs),
    /// Solve, then sample the image of the real line or a circle.
    Trace(TraceArgs),
    /// Carleson norm of a density built from a dilatation.
    Carleson(CarlesonArgs),
    /// Boundedness profile of a Cauchy integral near a curve.
    Cauchy(CauchyArgs),
    /// Regularity metrics of a curve or builtin map.
    Regularity(RegularityArgs),
    /// Tapered reflection-extension dilatation of a builtin map.
    Extend(ExtendArgs),
    TheoremA(ScenarioArgs),
    TheoremB(ScenarioArgs),
    Corollary(ScenarioArgs),
}

/// Where the dilatation comes from.
#[derive(Args)]
struct MuSource {
    /// Field CSV with its `.meta.toml` sidecar.
    #[arg(long)]
    mu_file: Option<PathBuf>,
    /// Scenario config whose `[mu]` and `[grid]` sections define the field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid override for `--config`, as `HALF_WIDTH:N`.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: MuSource,
    #[arg(long, default_value_t = qlab::beltrami::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = qlab::beltrami::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Also write `ρ(z) − z` as a field CSV.
    #[arg(long)]
    map_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    source: MuSource,
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    #[arg(long, default_value_t = 4.0)]
    span: f64,
    /// Trace the image of the unit circle instead of the real line.
    #[arg(long)]
    circle: bool,
    /// Curve CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityKind {
    Mu2OverY,
    Mu2OverDistCircle,
    Mu2OverYPlain,
    /// Real part of the field file is the density.
    Custom,
}

#[derive(Args)]
struct CarlesonArgs {
    #[arg(long, value_enum)]
    density: DensityKind,
    #[command(flatten)]
    source: MuSource,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// `real-line` or `unit-circle`.
    #[arg(long, default_value = "real-line")]
    curve: String,
    #[arg(long, default_value_t = DEFAULT_CENTERS)]
    centers: usize,
    #[arg(long, default_value_t = 6)]
    jmax: usize,
    #[arg(long, default_value_t = 1.0)]
    r_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionArg {
    Upper,
    Lower,
    Inside,
    Outside,
}

impl From<RegionArg> for Region {
    fn from(r: RegionArg) -> Self {
        match r {
            RegionArg::Upper => Region::UpperHalf,
            RegionArg::Lower => Region::LowerHalf,
            RegionArg::Inside => Region::InsideCurve,
            RegionArg::Outside => Region::OutsideCurve,
        }
    }
}

#[derive(Args)]
struct CauchyArgs {
    /// `unit-circle`, `real-line` or a curve CSV.
    #[arg(long)]
    curve: String,
    /// `one`, `identity`, `pole:<p>`, `step`, or a CSV of `re,im` samples.
    #[arg(long)]
    g: String,
    #[arg(long, value_enum)]
    region: RegionArg,
    #[arg(long, default_value_t = 8)]
    profile_depth: usize,
    /// Samples for builtin curves.
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Metric {
    Holder,
    Chordarc,
    Bmo,
    Dynkin,
    Omega,
}

#[derive(Args)]
struct RegularityArgs {
    /// `unit-circle` or a curve CSV.
    #[arg(long, conflicts_with = "map")]
    curve: Option<String>,
    /// Builtin map `identity`, `quad:a` or `moebius:b`.
    #[arg(long)]
    map: Option<String>,
    #[arg(long, value_enum)]
    metric: Metric,
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtendArgs {
    #[arg(long)]
    map: String,
    /// Cutoff radius where the taper starts.
    #[arg(long, default_value_t = 1.5)]
    r0: f64,
    #[arg(long, default_value_t = 0.5)]
    taper: f64,
    /// Inner radius of the annulus the map is known on.
    #[arg(long, default_value_t = DEFAULT_R0)]
    inner_r0: f64,
    /// `HALF_WIDTH:N`
    #[arg(long, default_value = "4:512")]
    grid: String,
    /// Field CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML; the shipped scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    let (w, n) = s.split_once(':').ok_or_else(|| QlabError::Config(format!("grid `{s}` is not HALF_WIDTH:N")))?;
    let bad = || QlabError::Config(format!("grid `{s}` is not HALF_WIDTH:N"));
    Ok(GridSpec {
        half_width: w.trim().parse().map_err(|_| bad())?,
        n: n.trim().parse().map_err(|_| bad())?,
        center: [0.0, 0.0],
    })
}

fn load_mu(src: &MuSource) -> Result<BeltramiField> {
    match (&src.mu_file, &src.config) {
        (Some(p), None) => BeltramiField::from_field(read_field(p)?),
        (None, Some(p)) => {
            let cfg = ScenarioConfig::load(p)?;
            let grid = match &src.grid {
                Some(g) => parse_grid(g)?,
                None => cfg.grid,
            };
            cfg.mu.ok_or_else(|| QlabError::Config(format!("{} has no [mu] section", p.display())))?.build(grid.build()?)
        }
        _ => Err(QlabError::Config("give exactly one of --mu-file and --config".into())),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn load_curve(spec: &str, samples: usize) -> Result<ParametricCurve> {
    match spec {
        "unit-circle" => ParametricCurve::unit_circle(samples),
        "real-line" => ParametricCurve::real_line(samples, 4.0),
        path => read_curve(Path::new(path)),
    }
}

fn load_g(spec: &str, curve: &ParametricCurve) -> Result<BoundaryFunction> {
    if let Ok(b) = BuiltinG::from_str(spec) {
        return b.sample(curve);
    }
    let mut rdr = csv::Reader::from_path(spec)?;
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| QlabError::Config(format!("missing column {k} in {spec}")))?
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| QlabError::Config(e.to_string()))
        };
        samples.push(Complex64::new(num(0)?, num(1)?));
    }
    if samples.len() != curve.len() {
        return Err(QlabError::Config(format!("{spec} has {} samples, curve has {}", samples.len(), curve.len())));
    }
    BoundaryFunction::new(samples)
}

fn solve(args: &SolveArgs) -> Result<bool> {
    let mu = load_mu(&args.source)?;
    let start = Instant::now();
    let map = solve_principal(&mu, args.tol, args.max_iter)?;
    if let Some(p) = &args.map_out {
        write_field(p, &map.rho_field)?;
    }
    let g = map.grid();
    emit(
        &json!({
            "residual": map.residual,
            "iterations": map.iterations,
            "k": map.k,
            "grid": { "x0": g.x0, "x1": g.x1, "y0": g.y0, "y1": g.y1, "nx": g.nx, "ny": g.ny, "h": g.h },
            "runtime_seconds": start.elapsed().as_secs_f64(),
        }),
        args.out.as_deref(),
    )?;
    Ok(true)
}

fn trace(args: &TraceArgs) -> Result<bool> {
    let mu = load_mu(&args.source)?;
    let map: PlanarMap = solve_principal(&mu, qlab::beltrami::DEFAULT_TOL, qlab::beltrami::DEFAULT_MAX_ITER)?;
    let curve = if args.circle {
        map.trace_circle(Complex64::new(0.0, 0.0), 1.0, args.samples)?
    } else {
        map.trace_quasicircle(args.samples, args.span)?
    };
    write_curve(&args.out, &curve)?;
    Ok(true)
}

fn carleson(args: &CarlesonArgs) -> Result<bool> {
    let mu = load_mu(&args.source)?;
    let grid = mu.grid();
    let density = match args.density {
        DensityKind::Mu2OverY => CarlesonDensity::mu2_over_y(&mu.mu, args.epsilon)?,
        DensityKind::Mu2OverDistCircle => CarlesonDensity::mu2_over_dist_circle(&mu.mu, args.epsilon)?,
        DensityKind::Mu2OverYPlain => CarlesonDensity::mu2_over_y_plain(&mu.mu),
        DensityKind::Custom => CarlesonDensity::custom(grid, mu.mu.values.iter().map(|v| v.re).collect())?,
    };
    let (reference, family) = match args.curve.as_str() {
        "real-line" => {
            let sb = mu.support_box;
            (Reference::RealLine, BallFamily::on_real_line(sb.x0, sb.x1, args.centers, args.r_max, args.jmax, grid.h))
        }
        "unit-circle" => (Reference::UnitCircle, BallFamily::on_unit_circle(args.centers, args.r_max, args.jmax, grid.h)),
        other => {
            let curve = read_curve(Path::new(other))?;
            let fam = BallFamily::on_curve(&curve, &grid, args.centers, args.r_max, args.jmax);
            (Reference::Sampled(curve), fam)
        }
    };
    emit(&carleson_norm(&density, &reference, &family), args.out.as_deref())?;
    Ok(true)
}

fn cauchy(args: &CauchyArgs) -> Result<bool> {
    let curve = load_curve(&args.curve, args.samples)?;
    let g = load_g(&args.g, &curve)?;
    let profile = hinf_profile(&curve, &g, args.region.into(), args.profile_depth)?;
    emit(&profile, args.out.as_deref())?;
    Ok(true)
}

fn regularity(args: &RegularityArgs) -> Result<bool> {
    let out = args.out.as_deref();
    if let Some(spec) = &args.curve {
        let curve = load_curve(spec, args.samples)?;
        match args.metric {
            Metric::Holder => {
                let j_max = ((curve.len() / 128).max(1) as f64).log2().floor() as u32;
                let fit = holder_exponent(&curve.derivs, curve.dparam(), &dyadic_lags(0, j_max.min(10)), curve.closed)?;
                emit(&fit, out)?;
            }
            Metric::Chordarc => emit(&chord_arc_metrics(&curve), out)?,
            Metric::Bmo => {
                let speed: Vec<f64> = curve.derivs.iter().map(|d| d.norm()).collect();
                let logs: Vec<f64> = speed.iter().map(|s| s.max(1e-300).ln()).collect();
                let (flag, share) = a_infinity_indicator(&speed)?;
                emit(&json!({ "bmo_norm": bmo_dyadic_norm(&logs)?, "a_infinity": flag, "heaviest_quarter_share": share }), out)?;
            }
            Metric::Dynkin | Metric::Omega => {
                return Err(QlabError::Config("dynkin and omega need --map".into()));
            }
        }
        return Ok(true);
    }
    let spec = args.map.as_deref().ok_or_else(|| QlabError::Config("give --curve or --map".into()))?;
    let map = ConformalBoundaryMap::new(MapKind::from_str(spec)?, DEFAULT_R0)?;
    let grid = GridSpec { half_width: 4.0, n: 512, center: [0.0, 0.0] }.build()?;
    match args.metric {
        Metric::Holder => {
            let radii: Vec<f64> = (1..=5).map(|j| 1.0 - 0.25f64.powi(j)).collect();
            emit(&hardy_littlewood_fit(|z| map.d2f(z), &radii), out)?;
        }
        Metric::Dynkin => {
            let mu = cutoff_global(&map, grid, 1.5, 0.5)?;
            let checks = (0..16)
                .map(|j| {
                    let z = Complex64::from_polar(0.95 * ((j as f64 + 0.5) / 16.0).sqrt(), 2.399_963 * j as f64);
                    dynkin_check(|w| map.df(w), |w| map.d2f(w), &mu, z, DEFAULT_DYNKIN_C)
                })
                .collect::<Result<Vec<_>>>()?;
            let pass = checks.iter().all(|c| c.pass);
            emit(&json!({ "checks": checks, "pass": pass }), out)?;
            return Ok(pass);
        }
        Metric::Omega => {
            let mu = cutoff_global(&map, grid, 1.5, 0.5)?;
            let rows = (0..=12)
                .map(|j| {
                    let t = 10f64.powf(-0.25 * j as f64);
                    omega_ms(&mu, Complex64::new(1.0, 0.0), t).map(|w| (t, w))
                })
                .collect::<Result<Vec<_>>>()?;
            emit(&json!({ "z": [1.0, 0.0], "omega": rows }), out)?;
        }
        Metric::Chordarc | Metric::Bmo => {
            let curve = ParametricCurve::closed_from_fn(args.samples, |t| map.f(Complex64::from_polar(1.0, t)), |t| {
                let e = Complex64::from_polar(1.0, t);
                map.df(e) * Complex64::i() * e
            })?;
            emit(&curve_report(&curve)?, out)?;
        }
    }
    Ok(true)
}

fn extend(args: &ExtendArgs) -> Result<bool> {
    let map = ConformalBoundaryMap::new(MapKind::from_str(&args.map)?, args.inner_r0)?;
    let grid = parse_grid(&args.grid)?.build()?;
    let mu = cutoff_global(&map, grid, args.r0, args.taper)?;
    write_field(&args.out, &mu.mu)?;
    eprintln!("k = {:.6}", mu.k);
    Ok(true)
}

fn scenario(kind: Scenario, args: &ScenarioArgs) -> Result<bool> {
    let cfg = match &args.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::shipped(kind),
    };
    if cfg.scenario != kind {
        return Err(QlabError::Config(format!("config is for {}, not {}", cfg.scenario.name(), kind.name())));
    }
    let report = experiments::run(&cfg)?;
    let out = args.out.clone().or_else(|| cfg.output.clone());
    emit(&report, out.as_deref())?;
    for c in report.failed() {
        eprintln!("FAIL {}: {} vs {}{}", c.name, c.value, c.threshold, c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default());
    }
    Ok(report.overall)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Trace(a) => trace(a),
        Command::Carleson(a) => carleson(a),
        Command::Cauchy(a) => cauchy(a),
        Command::Regularity(a) => regularity(a),
        Command::Extend(a) => extend(a),
        Command::TheoremA(a) => scenario(Scenario::TheoremA, a),
        Command::TheoremB(a) => scenario(Scenario::TheoremB, a),
        Command::Corollary(a) => scenario(Scenario::Corollary, a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
