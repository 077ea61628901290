//! Command-line front end. `run` returns the process exit code: 0 on success, 2 on
//! invalid input or configuration, 3 when a numerical certificate fails.

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::grid::{config_hash, Grid, GridFunction};
use crate::operators::{self, symbol_check, ExtensionMode, Operators, SeriesSolution};
use crate::simulator::{self, estimators, ChainSample, EstimatorReport, ExactChain, TruncatedPath};
use crate::solvers;
use crate::sonine::{build_pair, log_points, sonine_residual, Provenance, SoninePair};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICS: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bernstein", version, about = "Bernstein-function calculus: Sonine pairs, censored equations, Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Bernstein function config (`family=stable alpha=0.5` or `family=mixture terms=1:0.3,1:0.7`).
    #[arg(long)]
    spec: PathBuf,
    /// Horizon T.
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    /// Number of grid intervals.
    #[arg(long = "M", default_value_t = 512)]
    m: usize,
    /// Grading exponent (default max(2, 1/alpha_min)).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Rhs {
    /// Right-hand side as an `x,value` CSV, linearly interpolated onto the grid.
    #[arg(long, conflicts_with = "g_const")]
    g: Option<PathBuf>,
    /// Constant right-hand side.
    #[arg(long)]
    g_const: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Path,
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// exact: stable embedded chain; path: eps-truncated compound Poisson paths.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Stopping floor for censoring positions (default 1e-6 x0; compare uses 1e-10 x0).
    #[arg(long)]
    floor: Option<f64>,
    /// Path mode time horizon per path.
    #[arg(long, default_value_t = 1e6)]
    t_horizon: f64,
    /// Grid intervals for the series comparators.
    #[arg(long = "M", default_value_t = 1024)]
    m: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Subcommand, Debug, Clone)]
enum Cmd {
    /// Tabulate mu_bar, k and K with the contraction constant and Sonine residual.
    Sonine(GridArgs),
    /// Run the invariant suite for one Bernstein function.
    Verify(GridArgs),
    /// Solve D_c phi = g, phi(0) = phi0.
    SolveIvp {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        rhs: Rhs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi0: f64,
    },
    /// Solve D_c phi = lambda phi + g, phi(0) = phi0.
    Resolve {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        rhs: Rhs,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phi0: f64,
    },
    /// Implicit Euler for d/dt u = -D_c u.
    Evolve {
        #[command(flatten)]
        grid: GridArgs,
        /// Initial datum as an `x,value` CSV.
        #[arg(long)]
        g0: PathBuf,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        steps: usize,
        /// Write every k-th state.
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// Laplace transform of the lifetime, E^x exp(-lambda tau_inf).
    LifetimeLt {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        x: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4")]
        lambdas: Vec<f64>,
    },
    /// Simulate censoring chains and write per-step samples.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Sample CSV `path_id,n,position,sigma`.
        #[arg(long)]
        out: PathBuf,
        /// Estimator CSV `name,estimate,std_error,comparator,z`.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Series values against Monte Carlo estimates; fails unless every |z| <= 3.
    Compare {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICS
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn dispatch(cmd: &Cmd) -> Result<i32> {
    match cmd {
        Cmd::Sonine(g) => cmd_sonine(cmd, g),
        Cmd::Verify(g) => cmd_verify(cmd, g),
        Cmd::SolveIvp { grid, rhs, phi0 } => cmd_solve(cmd, grid, rhs, None, *phi0),
        Cmd::Resolve { grid, rhs, lambda, phi0 } => cmd_solve(cmd, grid, rhs, Some(*lambda), *phi0),
        Cmd::Evolve { grid, g0, dt, steps, every } => cmd_evolve(cmd, grid, g0, *dt, *steps, *every),
        Cmd::LifetimeLt { grid, x, lambdas } => cmd_lifetime(cmd, grid, *x, lambdas),
        Cmd::Simulate { sim, out, summary } => cmd_simulate(cmd, sim, out, summary.as_deref()),
        Cmd::Compare { sim, out } => cmd_compare(cmd, sim, out.as_deref()),
    }
}

fn read_spec(path: &Path) -> Result<(BernsteinSpec, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let spec = BernsteinSpec::parse(&text).map_err(|e| match e {
        Error::Config { line, msg } => Error::Config { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    })?;
    Ok((spec, text))
}

fn read_grid_csv(path: &Path) -> Result<GridFunction> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    GridFunction::read_csv(BufReader::new(f))
}

fn resample(src: &GridFunction, grid: &Arc<Grid>) -> Result<GridFunction> {
    let mut v = Vec::with_capacity(grid.len());
    for &x in grid.nodes() {
        let y = src.eval(x).filter(|y| y.is_finite()).ok_or_else(|| {
            Error::Domain(format!("input data does not cover x = {x} (range [{}, {}])", src.nodes()[0], src.grid().horizon()))
        })?;
        v.push(y);
    }
    GridFunction::new(grid.clone(), v)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

struct Setup {
    spec: BernsteinSpec,
    ops: Operators,
    header: Vec<String>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

// Output locations are not part of the configuration.
fn echo(cmd: &Cmd, spec_text: &str) -> String {
    let mut c = cmd.clone();
    match &mut c {
        Cmd::Sonine(g) | Cmd::Verify(g) => g.out = None,
        Cmd::SolveIvp { grid, .. } | Cmd::Resolve { grid, .. } | Cmd::Evolve { grid, .. } | Cmd::LifetimeLt { grid, .. } => grid.out = None,
        Cmd::Simulate { out, summary, .. } => {
            *out = PathBuf::new();
            *summary = None;
        }
        Cmd::Compare { out, .. } => *out = None,
    }
    format!("{c:?}\n{spec_text}")
}

fn setup(cmd: &Cmd, g: &GridArgs) -> Result<Setup> {
    positive("T", g.t)?;
    positive("tol", g.tol)?;
    if g.m < 8 {
        return Err(Error::InvalidParameter(format!("M must be at least 8, got {}", g.m)));
    }
    let (spec, text) = read_spec(&g.spec)?;
    let pair = build_pair(&spec, g.t)?;
    let gamma = g.gamma.unwrap_or_else(|| operators::default_gamma(&spec));
    let ops = Operators::new(&pair, Arc::new(Grid::graded(g.t, g.m, gamma)?))?;
    let header = vec![
        format!("bernstein-calculus {}", env!("CARGO_PKG_VERSION")),
        format!("config_hash={}", config_hash(&echo(cmd, &text))),
        format!("spec={}", spec.to_config().unwrap_or_default().trim().replace('\n', " ")),
        format!("T={} M={} gamma={} tol={:e}", g.t, g.m, gamma, g.tol),
        format!("provenance={:?} q={:.12}", pair.provenance(), ops.q()),
    ];
    Ok(Setup { spec, ops, header })
}

fn header_text(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

fn cmd_sonine(cmd: &Cmd, g: &GridArgs) -> Result<i32> {
    let s = setup(cmd, g)?;
    let pair = s.ops.pair();
    let pts = log_points(g.t, 64, 12.0);
    let residual = sonine_residual(pair, &pts)?;
    let mut out = header_text(&s.header);
    out.push_str("x,mu_bar,k,K\n");
    for &x in &s.ops.grid().nodes()[1..] {
        let _ = writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", x, pair.mu_bar(x), pair.k(x), pair.big_k(x));
    }
    let _ = writeln!(out, "# q={:.12}, residual={:.6e}", s.ops.q(), residual);
    emit(g.out.as_deref(), &out)?;
    Ok(EXIT_OK)
}

struct Check {
    name: &'static str,
    value: f64,
    bound: f64,
}

fn verify_checks(spec: &BernsteinSpec, ops: &Operators, tol: f64) -> Result<Vec<Check>> {
    let pair = ops.pair();
    let grid = ops.grid().clone();
    let t = ops.horizon();
    let exact = pair.provenance() == Provenance::Analytic;
    let mut checks = Vec::new();
    let a = spec.check_assumptions();
    checks.push(Check { name: "assumptions_a1_a2", value: if a.a1_pass && a.a2_pass { 0.0 } else { 1.0 }, bound: 0.0 });
    let res = sonine_residual(pair, &log_points(t, 64, 12.0))?;
    checks.push(Check { name: "sonine_residual", value: res, bound: if exact { 1e-8 } else { 1e-3 } });
    checks.push(Check { name: "contraction_q_below_1", value: ops.q(), bound: 1.0 - 1e-12 });
    if let Some(alpha) = spec.is_stable() {
        let q0 = (std::f64::consts::PI * alpha).sin() / (std::f64::consts::PI * alpha);
        checks.push(Check { name: "q_closed_form", value: (ops.q() - q0).abs(), bound: 1e-8 });
    }
    let one = GridFunction::constant(grid.clone(), 1.0);
    let k1 = ops.apply_k(&one)?;
    let norm_err = k1.values()[1..].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check { name: "k1_normalization", value: norm_err, bound: if exact { 1e-6 } else { 1e-3 } });
    let phi = GridFunction::from_fn(grid.clone(), |x| 1.0 + (3.0 * x / t).sin() + x / t);
    let dk = ops.rl_derivative(&phi, ExtensionMode::Killing)?;
    let ds = ops.rl_derivative(&phi, ExtensionMode::Sticky)?;
    let dc = ops.censored_derivative(&phi)?;
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for i in 1..grid.len() {
        let mu = pair.mu_bar(grid.nodes()[i]);
        let scale = 1.0 + dk.values()[i].abs();
        e1 = e1.max((dk.values()[i] - ds.values()[i] - phi.values()[0] * mu).abs() / scale);
        e2 = e2.max((dc.values()[i] + phi.values()[i] * mu - dk.values()[i]).abs() / scale);
    }
    checks.push(Check { name: "killing_minus_sticky", value: e1, bound: 1e-10 });
    checks.push(Check { name: "censored_plus_tail_term", value: e2, bound: 1e-10 });
    let psi = GridFunction::from_fn(grid.clone(), |x| 1.0 + (x / t) * (4.0 * x / t).sin());
    let back = ops.rl_derivative(&ops.rl_integral(&psi)?, ExtensionMode::Killing)?;
    let lo = grid.first_at_or_above(t / 10.0);
    let li = (lo..grid.len()).map(|i| (back.values()[i] - psi.values()[i]).abs()).fold(0.0, f64::max) / psi.sup_norm();
    checks.push(Check { name: "left_inverse", value: li, bound: 5e-3 });
    let kk: Vec<f64> = grid.nodes().iter().map(|&x| pair.big_k(x)).collect();
    let phik = GridFunction::from_fn(grid.clone(), |x| pair.big_k(x) * (5.0 * x / t).cos());
    let pw = ops.k_powers(&phik, 10)?;
    let mut worst = 0.0f64;
    for (i, p) in pw.iter().enumerate() {
        for (v, k) in p.values().iter().zip(&kk) {
            if *k > 0.0 {
                worst = worst.max(v.abs() / (ops.q().powi(i as i32) * k));
            }
        }
    }
    checks.push(Check { name: "k_power_contraction", value: worst, bound: 1.01 });
    let gin = GridFunction::from_fn(grid.clone(), |x| (2.0 * x / t).cos());
    let ivp = solvers::solve_ivp(ops, &gin, 0.5, tol)?;
    checks.push(Check { name: "ivp_residual", value: ivp.residual, bound: 10.0 * tol });
    for lam in [-1.0, 1.0] {
        let r = solvers::solve_resolvent(ops, lam, &gin, 0.5, tol)?;
        checks.push(Check { name: if lam < 0.0 { "resolvent_residual_neg" } else { "resolvent_residual_pos" }, value: r.residual, bound: 10.0 * tol });
    }
    let mut prev = 1.0;
    let mut monotone = 0.0f64;
    for lam in [0.25, 0.5, 1.0, 2.0] {
        let v = solvers::lifetime_laplace(ops, t, lam, tol.max(1e-10))?;
        monotone = monotone.max(v - prev).max(-v).max(v - 1.0);
        prev = v;
    }
    checks.push(Check { name: "lifetime_lt_monotone_unit", value: monotone.max(0.0), bound: 0.0 });
    if spec.is_stable().is_some() && t >= 3.5 {
        let bump = |x: f64| {
            let (a, b) = (0.5, 3.0);
            if x <= a || x >= b {
                0.0
            } else {
                let u = 2.0 * (x - a) / (b - a) - 1.0;
                (-1.0 / (1.0 - u * u)).exp()
            }
        };
        let phi = GridFunction::from_fn(grid.clone(), bump);
        let sc = symbol_check(spec, ops, &phi, &[2.0, 4.0, 8.0], 1e-6)?;
        checks.push(Check { name: "symbol_check", value: sc.max_rel_error, bound: 1e-3 });
    }
    Ok(checks)
}

fn cmd_verify(cmd: &Cmd, g: &GridArgs) -> Result<i32> {
    let s = setup(cmd, g)?;
    let checks = verify_checks(&s.spec, &s.ops, g.tol)?;
    let mut out = header_text(&s.header);
    out.push_str("check,value,bound,status\n");
    let mut ok = true;
    for c in &checks {
        let pass = c.value <= c.bound;
        ok &= pass;
        let _ = writeln!(out, "{},{:.6e},{:.6e},{}", c.name, c.value, c.bound, if pass { "PASS" } else { "FAIL" });
    }
    emit(g.out.as_deref(), &out)?;
    Ok(if ok { EXIT_OK } else { EXIT_NUMERICS })
}

fn rhs_on(rhs: &Rhs, grid: &Arc<Grid>) -> Result<GridFunction> {
    match (&rhs.g, rhs.g_const) {
        (Some(p), _) => resample(&read_grid_csv(p)?, grid),
        (None, Some(c)) => Ok(GridFunction::constant(grid.clone(), c)),
        (None, None) => Ok(GridFunction::constant(grid.clone(), 0.0)),
    }
}

fn summary_lines(s: &SeriesSolution) -> Vec<String> {
    vec![
        format!("method={:?} terms_used={} tail_bound={:.6e}", s.method, s.terms_used, s.tail_bound),
        format!("residual={:.6e} derivative_residual={:.6e}", s.residual, s.derivative_residual),
    ]
}

fn cmd_solve(cmd: &Cmd, g: &GridArgs, rhs: &Rhs, lambda: Option<f64>, phi0: f64) -> Result<i32> {
    let s = setup(cmd, g)?;
    let gin = rhs_on(rhs, s.ops.grid())?;
    let sol = match lambda {
        None => solvers::solve_ivp(&s.ops, &gin, phi0, g.tol)?,
        Some(l) => solvers::solve_resolvent(&s.ops, l, &gin, phi0, g.tol)?,
    };
    let mut header = s.header.clone();
    header.push(format!("phi0={phi0}{}", lambda.map(|l| format!(" lambda={l}")).unwrap_or_default()));
    header.extend(summary_lines(&sol));
    let mut buf = Vec::new();
    sol.solution.write_csv(&mut buf, &header)?;
    emit(g.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(if sol.residual <= 10.0 * g.tol { EXIT_OK } else { EXIT_NUMERICS })
}

fn cmd_evolve(cmd: &Cmd, g: &GridArgs, g0: &Path, dt: f64, steps: usize, every: usize) -> Result<i32> {
    positive("dt", dt)?;
    if every == 0 {
        return Err(Error::InvalidParameter("--every must be at least 1".into()));
    }
    let s = setup(cmd, g)?;
    let init = resample(&read_grid_csv(g0)?, s.ops.grid())?;
    let traj = solvers::evolve_cauchy(&s.ops, &init, dt, steps)?;
    let mut header = s.header.clone();
    header.push(format!("dt={dt} steps={steps} every={every}"));
    let mut out = header_text(&header);
    out.push_str("step,t,x,value\n");
    let mut min_seen = f64::INFINITY;
    for (n, st) in traj.iter().enumerate() {
        min_seen = min_seen.min(st.min_value());
        if n % every != 0 && n != steps {
            continue;
        }
        for (x, v) in st.nodes().iter().zip(st.values()) {
            let _ = writeln!(out, "{n},{:.17e},{x:.17e},{v:.17e}", n as f64 * dt);
        }
    }
    let _ = writeln!(out, "# min_value={min_seen:.6e}");
    emit(g.out.as_deref(), &out)?;
    if init.min_value() >= 0.0 && min_seen < -10.0 * g.tol {
        eprintln!("error: nonnegative datum produced a state below -10 tol ({min_seen:.3e})");
        return Ok(EXIT_NUMERICS);
    }
    Ok(EXIT_OK)
}

fn cmd_lifetime(cmd: &Cmd, g: &GridArgs, x: f64, lambdas: &[f64]) -> Result<i32> {
    let s = setup(cmd, g)?;
    let mut out = header_text(&s.header);
    let _ = writeln!(out, "# x={x}");
    out.push_str("lambda,value\n");
    for &l in lambdas {
        let v = solvers::lifetime_laplace(&s.ops, x, l, g.tol)?;
        let _ = writeln!(out, "{l},{v:.17e}");
    }
    emit(g.out.as_deref(), &out)?;
    Ok(EXIT_OK)
}

struct SimRun {
    spec_text: String,
    pair: SoninePair,
    ops: Operators,
    mode: Mode,
    floor: f64,
    samples: Vec<ChainSample>,
}

fn simulate_run(sim: &SimArgs, default_floor: f64) -> Result<SimRun> {
    positive("x0", sim.x0)?;
    positive("eps", sim.eps)?;
    positive("tol", sim.tol)?;
    if sim.paths < 2 {
        return Err(Error::InvalidParameter("--paths must be at least 2".into()));
    }
    let (spec, spec_text) = read_spec(&sim.spec)?;
    let pair = build_pair(&spec, sim.x0)?;
    let ops = Operators::graded(&pair, sim.x0, sim.m.max(8))?;
    let mode = sim.mode.unwrap_or(if spec.is_stable().is_some() { Mode::Exact } else { Mode::Path });
    let floor = sim.floor.unwrap_or(default_floor * sim.x0);
    let samples = match mode {
        Mode::Exact => {
            let ch = ExactChain::new(&pair, ops.q())?;
            simulator::run_paths(sim.paths, sim.seed, |r| ch.simulate(sim.x0, floor, simulator::DEFAULT_MAX_STEPS, r))?
        }
        Mode::Path => {
            let tp = TruncatedPath::new(&spec, sim.eps, Some((pair.clone(), ops.q())))?;
            simulator::run_paths(sim.paths, sim.seed, |r| tp.simulate(sim.x0, floor, sim.t_horizon, simulator::DEFAULT_MAX_STEPS, r))?
        }
    };
    Ok(SimRun { spec_text, pair, ops, mode, floor, samples })
}

fn sim_header(cmd: &Cmd, run: &SimRun, sim: &SimArgs) -> Vec<String> {
    let stopped: usize = run.samples.iter().filter(|s| !s.converged()).count();
    vec![
        format!("bernstein-calculus {}", env!("CARGO_PKG_VERSION")),
        format!("config_hash={}", config_hash(&echo(cmd, &run.spec_text))),
        format!("spec={}", run.pair.spec().to_config().unwrap_or_default().trim().replace('\n', " ")),
        format!("mode={:?} x0={} paths={} seed={} eps={} floor={:e} q={:.12}", run.mode, sim.x0, sim.paths, sim.seed, sim.eps, run.floor, run.ops.q()),
        format!("unconverged_paths={stopped}"),
    ]
}

fn reports(run: &SimRun, sim: &SimArgs) -> Result<Vec<EstimatorReport>> {
    let ops = &run.ops;
    let one = GridFunction::constant(ops.grid().clone(), 1.0);
    let mean_tau = ops.censored_integral(&one, sim.tol)?.solution.eval(sim.x0).unwrap();
    let mut out = vec![
        estimators::estimate_lifetime(&run.samples, true, Some(mean_tau))?,
        estimators::estimate_sigma(&run.samples, 1, Some(run.pair.big_k(sim.x0)))?,
    ];
    let id = GridFunction::from_fn(ops.grid().clone(), |x| x);
    let mut occ = estimators::estimate_occupation(ops, &run.samples, &id, sim.tol)?;
    occ.name = "occupation_x".into();
    out.push(occ);
    let lt = |l: f64| solvers::lifetime_laplace(ops, sim.x0, l, 1e-8);
    out.extend(estimators::estimate_lifetime_lt(&run.samples, &[0.5, 1.0, 2.0], Some(&lt))?);
    Ok(out)
}

fn report_csv(header: &[String], rows: &[EstimatorReport]) -> String {
    let mut out = header_text(header);
    out.push_str("name,estimate,std_error,comparator,z\n");
    for r in rows {
        let c = r.comparator.map(|c| format!("{c:.10e}")).unwrap_or_default();
        let z = r.z.map(|z| format!("{z:.4}")).unwrap_or_default();
        let _ = writeln!(out, "{},{:.10e},{:.6e},{c},{z}", r.name, r.estimate, r.std_error);
    }
    out
}

fn cmd_simulate(cmd: &Cmd, sim: &SimArgs, out: &Path, summary: Option<&Path>) -> Result<i32> {
    let run = simulate_run(sim, simulator::DEFAULT_FLOOR_FACTOR)?;
    let header = sim_header(cmd, &run, sim);
    let mut text = header_text(&header);
    text.push_str("path_id,n,position,sigma\n");
    for (id, s) in run.samples.iter().enumerate() {
        for (n, (y, sg)) in s.positions.iter().zip(&s.sigmas).enumerate() {
            let _ = writeln!(text, "{id},{},{y:.17e},{sg:.17e}", n + 1);
        }
    }
    emit(Some(out), &text)?;
    if let Some(p) = summary {
        emit(Some(p), &report_csv(&header, &reports(&run, sim)?))?;
    }
    Ok(EXIT_OK)
}

fn cmd_compare(cmd: &Cmd, sim: &SimArgs, out: Option<&Path>) -> Result<i32> {
    let run = simulate_run(sim, 1e-10)?;
    let rows = reports(&run, sim)?;
    emit(out, &report_csv(&sim_header(cmd, &run, sim), &rows))?;
    let bad: Vec<&str> = rows.iter().filter(|r| !r.within(3.0)).map(|r| r.name.as_str()).collect();
    if bad.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("error: |z| > 3 for {}", bad.join(", "));
        Ok(EXIT_NUMERICS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_are_validation_failures() {
        assert_eq!(run(["bernstein", "frobnicate"]), EXIT_INVALID);
        assert_eq!(run(["bernstein", "sonine", "--spec", "x.cfg", "--bogus", "1"]), EXIT_INVALID);
        assert_eq!(run(["bernstein", "sonine", "--spec", "/nonexistent/spec.cfg"]), EXIT_INVALID);
        assert_eq!(run(["bernstein", "--help"]), EXIT_OK);
    }
}
