use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stemflow::abm::{self, AbmConfig};
use stemflow::config::{apply_overrides, parse_parameters};
use stemflow::dde::{self, DelayConfig, DelayHistory, OmegaClosure, OmegaTiming};
use stemflow::grid::GridSpec;
use stemflow::pde_full::FullModel;
use stemflow::pde_reduced::{ReducedModel, ReducedVariant};
use stemflow::scan::{self, Axis, SweepParameter};
use stemflow::spectral::{self, CharacteristicEquation, FrozenRates, RootSearch};
use stemflow::steady::{self, DEFAULT_MIDPOINT};
use stemflow::trace::{format_f64, write_overlay_csv};
use stemflow::{PopulationTrace, Preset, RawParameters, RescaledParameters};

/// Stem cell population models: agent-based simulation, transport PDEs,
/// delay equations and stability analysis.
#[derive(Parser, Debug)]
#[command(name = "stemflow", version, arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Built-in parameter set.
    #[arg(long, global = true, default_value = "ph-minus")]
    preset: String,
    /// Parameter file (`key = value` lines); replaces the preset.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Parameter override, applied after loading. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Affinity decrease factor `d` (shorthand for `--set d=...`).
    #[arg(long, global = true)]
    d: Option<f64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Time steps per hour of the transport lattice.
    #[arg(long, global = true, default_value_t = 2)]
    grid: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one model and write its population trace.
    Simulate(SimulateArgs),
    /// Nonzero steady state of Approximation 3 or 4.
    Steady(SteadyArgs),
    /// Real eigenvalue of the zero-state eigenproblem with its adjoint.
    Eigen(EigenArgs),
    /// Roots of the characteristic equation at the nonzero steady state.
    CharRoots(RootArgs),
    /// Whether the zero steady state attracts.
    ZeroStability,
    /// Integrate the delay formulation of Approximation 4.
    Dde(DdeArgs),
    /// Classify a (rho_d, b) window into stability regions.
    StabilityMap(MapArgs),
    /// Follow the rightmost characteristic root along a parameter sweep.
    RootTrajectory(TrajectoryArgs),
    /// Produce the data behind one of the standard figures.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    Abm,
    Approx0,
    Approx1,
    Approx2,
    Approx3,
    Approx4,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long, default_value_t = 100.0)]
    days: f64,
    /// Initial immature pool (transport models, in units of N~_A).
    #[arg(long, default_value_t = 1.0)]
    a0: f64,
    /// Sampling interval of the output (days).
    #[arg(long, default_value_t = 0.25)]
    record_every: f64,
    /// Random seed of the agent-based model.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Agent-based model option (`seed`, `cycle_convention`, `imatinib`,
    /// `initial_ph_plus_fraction`, ...). Repeatable.
    #[arg(long = "abm-set", value_name = "KEY=VALUE")]
    abm_overrides: Vec<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SteadyVariant {
    Approx3,
    Approx4,
}

impl From<SteadyVariant> for ReducedVariant {
    fn from(v: SteadyVariant) -> Self {
        match v {
            SteadyVariant::Approx3 => ReducedVariant::Approx3,
            SteadyVariant::Approx4 => ReducedVariant::Approx4,
        }
    }
}

#[derive(Args, Debug)]
struct PointArgs {
    /// Override the rescaled maturation speed.
    #[arg(long)]
    rho_d: Option<f64>,
    /// Override the expansion rate.
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args, Debug)]
struct SteadyArgs {
    #[arg(long, value_enum, default_value = "approx4")]
    variant: SteadyVariant,
    #[command(flatten)]
    point: PointArgs,
    /// Write the Omega profile on this many maturity points.
    #[arg(long)]
    profile: Option<usize>,
}

#[derive(Args, Debug)]
struct EigenArgs {
    #[arg(long, value_enum, default_value = "approx3")]
    variant: SteadyVariant,
    #[command(flatten)]
    point: PointArgs,
    /// Write `x, Omega, phi` on this many maturity points.
    #[arg(long)]
    profile: Option<usize>,
}

#[derive(Args, Debug)]
struct RootArgs {
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    re_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    re_max: f64,
    #[arg(long, default_value_t = 40.0)]
    im_max: f64,
    /// Newton starts per axis.
    #[arg(long, default_value_t = 21)]
    starts: usize,
}

impl SearchArgs {
    fn search(&self) -> Result<RootSearch> {
        if !(self.re_min < self.re_max && self.im_max > 0.0 && self.starts > 0) {
            bail!(Usage("empty root search box".into()));
        }
        Ok(RootSearch {
            re: (self.re_min, self.re_max),
            im: (0.0, self.im_max),
            starts_re: self.starts,
            starts_im: self.starts,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TimingArg {
    Delayed,
    Current,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClosureArg {
    Projected,
    Differential,
}

#[derive(Args, Debug)]
struct DdeArgs {
    #[arg(long, default_value_t = 100.0)]
    days: f64,
    /// Constant initial pool; ignored with `--from-pde`.
    #[arg(long, default_value_t = 1.0)]
    a0: f64,
    #[arg(long, default_value_t = 256)]
    steps_per_delay: usize,
    #[arg(long, value_enum, default_value = "delayed")]
    omega_timing: TimingArg,
    #[arg(long, value_enum, default_value = "projected")]
    closure: ClosureArg,
    /// Seed the history with an Approximation 4 run from `A* = a0` and
    /// report the gap to it.
    #[arg(long)]
    from_pde: bool,
    #[command(flatten)]
    point: PointArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MapArgs {
    #[arg(long, default_value_t = 0.04)]
    rho_min: f64,
    #[arg(long, default_value_t = 0.75)]
    rho_max: f64,
    #[arg(long, default_value_t = 40)]
    rho_n: usize,
    #[arg(long, default_value_t = 0.2)]
    b_min: f64,
    #[arg(long, default_value_t = 1.5)]
    b_max: f64,
    #[arg(long, default_value_t = 40)]
    b_n: usize,
    /// CSV path (default `<out>/stability_map.csv`).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// SVG path (default `<out>/stability_map.svg`).
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepArg {
    #[value(name = "rho_d")]
    RhoD,
    B,
}

#[derive(Args, Debug)]
struct TrajectoryArgs {
    #[arg(long, value_enum)]
    param: SweepArg,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 60)]
    n: usize,
    /// Value of the parameter held fixed (default: from the parameter set).
    #[arg(long)]
    fixed: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=7))]
    figure: u8,
    /// Agent-based runs per panel.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
}

/// An error in the invocation rather than in the computation.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                eprintln!("run `stemflow --help` for usage");
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let raw = load_parameters(&cli.common)?;
    let c = &cli.common;
    match cli.command {
        Command::Simulate(a) => simulate(c, raw, &a),
        Command::Steady(a) => steady_cmd(&rescaled(&raw, &a.point)?, &a),
        Command::Eigen(a) => eigen_cmd(&rescaled(&raw, &a.point)?, &a),
        Command::CharRoots(a) => char_roots(&rescaled(&raw, &a.point)?, &a),
        Command::ZeroStability => zero_stability(&raw.rescale()?),
        Command::Dde(a) => dde_cmd(c, &rescaled(&raw, &a.point)?, &a),
        Command::StabilityMap(a) => stability_map(c, &raw.rescale()?, &a),
        Command::RootTrajectory(a) => root_trajectory(&raw.rescale()?, &a),
        Command::Reproduce(a) => reproduce(c, &raw, &a),
    }
}

fn load_parameters(c: &Common) -> Result<RawParameters> {
    let mut raw = match &c.params {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_parameters(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))?
        }
        None => c
            .preset
            .parse::<Preset>()
            .map_err(|e| Usage(e.to_string()))?
            .parameters(),
    };
    let mut overrides: Vec<String> = c.overrides.clone();
    if let Some(d) = c.d {
        overrides.push(format!("d={d}"));
    }
    apply_overrides(&mut raw, overrides.iter().map(String::as_str)).map_err(|e| Usage(e.to_string()))?;
    Ok(raw)
}

fn rescaled(raw: &RawParameters, point: &PointArgs) -> Result<RescaledParameters> {
    let mut p = raw.rescale()?;
    if let Some(rho) = point.rho_d {
        if !(rho > 0.0) {
            bail!(Usage("--rho-d must be positive".into()));
        }
        p = p.with_rho_d(rho);
    }
    if let Some(b) = point.b {
        p = p.with_b(b);
    }
    Ok(p)
}

fn grid_spec(c: &Common) -> Result<GridSpec> {
    if c.grid == 0 {
        bail!(Usage("--grid must be at least 1".into()));
    }
    Ok(GridSpec::uniform(c.grid))
}

/// Opens `path` for writing, or standard output.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            ))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn out_file(c: &Common, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    Ok(c.out.join(name))
}

fn run_transport(
    p: &RescaledParameters,
    spec: GridSpec,
    model: Model,
    a0: f64,
    days: f64,
    every: f64,
) -> Result<PopulationTrace> {
    let variant = match model {
        Model::Approx0 => {
            let mut m = FullModel::new(p.clone(), spec)?;
            let mut s = m.initial_state(a0);
            return Ok(m.simulate(&mut s, days, every)?);
        }
        Model::Approx1 => ReducedVariant::Approx1,
        Model::Approx2 => ReducedVariant::Approx2,
        Model::Approx3 => ReducedVariant::Approx3,
        Model::Approx4 => ReducedVariant::Approx4,
        Model::Abm => unreachable!("handled by the caller"),
    };
    let mut m = ReducedModel::new(p.clone(), spec, variant)?;
    let mut s = m.initial_state(a0);
    Ok(m.simulate(&mut s, days, every)?)
}

fn abm_config(raw: RawParameters, days: f64, seed: u64, overrides: &[String]) -> Result<AbmConfig> {
    let mut cfg = AbmConfig::new(raw, days, seed);
    for item in overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Usage(format!("`{item}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| Usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn simulate(c: &Common, raw: RawParameters, a: &SimulateArgs) -> Result<()> {
    if !(a.days > 0.0 && a.record_every > 0.0) {
        bail!(Usage("--days and --record-every must be positive".into()));
    }
    let out = sink(a.output.as_deref())?;
    if a.model == Model::Abm {
        let mut cfg = abm_config(raw, a.days, a.seed, &a.abm_overrides)?;
        cfg.record_cadence_hours = ((a.record_every * 24.0).round() as u32).max(1);
        let trace = abm::simulate(cfg)?;
        trace.write_csv(out)?;
        return Ok(());
    }
    if !a.abm_overrides.is_empty() {
        bail!(Usage("--abm-set only applies to --model abm".into()));
    }
    let trace = run_transport(&raw.rescale()?, grid_spec(c)?, a.model, a.a0, a.days, a.record_every)?;
    trace.write_csv(out)?;
    Ok(())
}

fn steady_cmd(p: &RescaledParameters, a: &SteadyArgs) -> Result<()> {
    let s = steady::solve_steady(p, a.variant.into())?;
    let mut out = io::stdout().lock();
    writeln!(out, "variant = {}", s.variant)?;
    writeln!(out, "rho_d = {}", format_f64(p.rho_d))?;
    writeln!(out, "b = {}", format_f64(p.b))?;
    writeln!(out, "b_star = {}", format_f64(s.b_star))?;
    writeln!(out, "A_tilde = {}", format_f64(s.a_tilde))?;
    writeln!(out, "Omega_bar = {}", format_f64(s.omega_bar))?;
    writeln!(out, "Omega0 = {}", format_f64(s.omega0))?;
    if let Some(n) = a.profile.filter(|&n| n >= 2) {
        writeln!(out, "x,Omega,alpha")?;
        for k in 0..n {
            let x = k as f64 / (n - 1) as f64;
            writeln!(
                out,
                "{},{},{}",
                format_f64(x),
                format_f64(s.profile_at(x)),
                format_f64(s.alpha_at(x))
            )?;
        }
    }
    Ok(())
}

fn eigen_cmd(p: &RescaledParameters, a: &EigenArgs) -> Result<()> {
    let rates = FrozenRates::zero_state(p, a.variant.into())?;
    let e = spectral::real_eigenvalue(&rates)?;
    let mut out = io::stdout().lock();
    writeln!(out, "lambda = {}", format_f64(e.lambda))?;
    writeln!(out, "A = {}", format_f64(e.a))?;
    writeln!(out, "Omega0 = {}", format_f64(e.omega0))?;
    writeln!(out, "Psi = {}", format_f64(e.psi))?;
    writeln!(out, "L = {}", format_f64(e.l_value))?;
    writeln!(out, "growth_condition = {}", format_f64(e.l_value - p.rho_d))?;
    if let Some(n) = a.profile.filter(|&n| n >= 2) {
        writeln!(out, "x,Omega,phi")?;
        for k in 0..n {
            let x = k as f64 / (n - 1) as f64;
            writeln!(out, "{},{},{}", format_f64(x), format_f64(e.omega_at(x)), format_f64(e.phi_at(x)?))?;
        }
    }
    Ok(())
}

fn char_roots(p: &RescaledParameters, a: &RootArgs) -> Result<()> {
    let s = steady::solve_steady(p, ReducedVariant::Approx4)?;
    let eq = CharacteristicEquation::new(&s, p)?;
    let roots = spectral::rightmost_roots(&eq, &a.search.search()?)?;
    let mut out = sink(a.output.as_deref())?;
    writeln!(out, "re,im,residual,multiplicity")?;
    for r in roots {
        writeln!(
            out,
            "{},{},{},{}",
            format_f64(r.lambda.re),
            format_f64(r.lambda.im),
            format_f64(r.residual),
            r.multiplicity_hint
        )?;
    }
    Ok(())
}

fn zero_stability(p: &RescaledParameters) -> Result<()> {
    let verdict = spectral::zero_state_condition(p)?;
    let rates = FrozenRates::zero_state(p, ReducedVariant::Approx3)?;
    let gap = spectral::growth_condition(&rates)?;
    println!("{}", verdict.label());
    eprintln!("int alpha e^(...) dx - rho_d = {}", format_f64(gap));
    Ok(())
}

fn dde_cmd(c: &Common, p: &RescaledParameters, a: &DdeArgs) -> Result<()> {
    let timing = match a.omega_timing {
        TimingArg::Delayed => OmegaTiming::Delayed,
        TimingArg::Current => OmegaTiming::Current,
    };
    let closure = match a.closure {
        ClosureArg::Projected => OmegaClosure::Projected,
        ClosureArg::Differential => OmegaClosure::Differential,
    };
    let trace = if a.from_pde {
        if timing != OmegaTiming::Delayed || closure != OmegaClosure::Projected {
            bail!(Usage("--from-pde uses the default timing and closure".into()));
        }
        let cmp = dde::compare_with_pde(p, grid_spec(c)?, a.steps_per_delay, a.a0, a.days)?;
        eprintln!("sup relative gap to the transport solution: {:.3e}", cmp.sup_relative_gap);
        cmp.dde
    } else {
        let cfg = DelayConfig {
            steps_per_delay: a.steps_per_delay,
            omega_timing: timing,
            closure,
            midpoint: DEFAULT_MIDPOINT,
            ..DelayConfig::default()
        };
        let history = DelayHistory::Constant {
            a_star: a.a0,
            omega_bar: 0.0,
        };
        dde::integrate_dde(&history, p, a.days, &cfg)?
    };
    trace.write_csv(sink(a.output.as_deref())?)?;
    Ok(())
}

fn write_map(map: &scan::RegionMap, csv: &Path, svg: &Path) -> Result<()> {
    map.write_csv(sink(Some(csv))?)?;
    map.write_svg(sink(Some(svg))?)?;
    let counts: Vec<String> = scan::Regime::ALL
        .iter()
        .map(|r| format!("{r} {}", map.count(*r)))
        .collect();
    eprintln!("{}; wrote {} and {}", counts.join(", "), csv.display(), svg.display());
    Ok(())
}

fn stability_map(c: &Common, p: &RescaledParameters, a: &MapArgs) -> Result<()> {
    let axis = |lo, hi, n| Axis::new(lo, hi, n).map_err(|e| Usage(e.to_string()));
    let rho = axis(a.rho_min, a.rho_max, a.rho_n)?;
    let b = axis(a.b_min, a.b_max, a.b_n)?;
    if rho.lo <= 0.0 || b.lo <= 0.0 {
        bail!(Usage("the window must lie in rho_d > 0, b > 0".into()));
    }
    let map = scan::region_map(rho, b, p, &a.search.search()?, scan::threads_from_env())?;
    let csv = match &a.csv {
        Some(p) => p.clone(),
        None => out_file(c, "stability_map.csv")?,
    };
    let svg = match &a.svg {
        Some(p) => p.clone(),
        None => out_file(c, "stability_map.svg")?,
    };
    write_map(&map, &csv, &svg)
}

fn report_trajectory(t: &scan::RootTrajectory) {
    for x in &t.crossings {
        eprintln!(
            "crossing at {} = {:.6}: lambda = {:.3e} {:+.6}i ({})",
            t.parameter.name(),
            x.value,
            x.root.re,
            x.root.im,
            if x.destabilising { "stable to unstable" } else { "unstable to stable" }
        );
    }
    if let Some((v, why)) = &t.lost {
        eprintln!("branch lost at {} = {v}: {why}", t.parameter.name());
    }
}

fn root_trajectory(p: &RescaledParameters, a: &TrajectoryArgs) -> Result<()> {
    let parameter = match a.param {
        SweepArg::RhoD => SweepParameter::RhoD,
        SweepArg::B => SweepParameter::B,
    };
    let p = match (parameter, a.fixed) {
        (SweepParameter::RhoD, Some(b)) => p.with_b(b),
        (SweepParameter::B, Some(rho)) => p.with_rho_d(rho),
        _ => p.clone(),
    };
    let t = scan::root_trajectory(parameter, (a.from, a.to), a.n, &p, &a.search.search()?)?;
    t.write_csv(sink(a.output.as_deref())?)?;
    report_trajectory(&t);
    Ok(())
}

fn reproduce(c: &Common, raw: &RawParameters, a: &ReproduceArgs) -> Result<()> {
    let spec = grid_spec(c)?;
    let search = RootSearch::default();
    match a.figure {
        2..=5 => {
            let models: &[Model] = match a.figure {
                2 => &[Model::Approx0],
                3 => &[Model::Approx1],
                4 => &[Model::Approx2],
                _ => &[Model::Approx3, Model::Approx4],
            };
            for d in [1.02, 1.05, 1.2] {
                let raw = raw.clone().with_d(d);
                let p = raw.rescale()?;
                let mut traces = Vec::new();
                for &m in models {
                    traces.push(run_transport(&p, spec, m, 1.0, 100.0, 0.25)?);
                }
                for seed in 1..=a.seeds {
                    let mut cfg = AbmConfig::new(raw.clone(), 100.0, seed);
                    cfg.record_cadence_hours = 6;
                    let mut t = abm::simulate(cfg)?.population_trace();
                    t.model = format!("abm-seed{seed}");
                    traces.push(t);
                }
                let path = out_file(c, &format!("figure{}_d{d}.csv", a.figure))?;
                let refs: Vec<&PopulationTrace> = traces.iter().collect();
                write_overlay_csv(&refs, sink(Some(&path))?)?;
                let verdicts: Vec<String> = traces
                    .iter()
                    .map(|t| format!("{} {}", t.model, scan::classify_trace(t)))
                    .collect();
                eprintln!("d = {d}: {}; wrote {}", verdicts.join(", "), path.display());
            }
        }
        6 => {
            let (rho, b) = scan::default_axes();
            let map = scan::region_map(rho, b, &raw.rescale()?, &search, scan::threads_from_env())?;
            write_map(&map, &out_file(c, "figure6.csv")?, &out_file(c, "figure6.svg")?)?;
        }
        _ => {
            let p = raw.rescale()?;
            let sweeps = [
                ("figure7a.csv", SweepParameter::RhoD, (0.0422, 0.3505), p.clone()),
                ("figure7b.csv", SweepParameter::B, (0.2, 1.5), p.clone()),
            ];
            for (name, parameter, range, p) in sweeps {
                let t = scan::root_trajectory(parameter, range, 80, &p, &search)?;
                let path = out_file(c, name)?;
                t.write_csv(sink(Some(&path))?)?;
                report_trajectory(&t);
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
