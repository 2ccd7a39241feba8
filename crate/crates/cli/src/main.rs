mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser as ClapParser, Subcommand};

use timebin_core::dsl::{BuiltinSeq, Parser as SeqParser, Sequence};
use timebin_core::engine::{run, BellReport};
use timebin_core::error::{DslError, EngineError, FidelityError};
use timebin_core::fidelity::{
    acceptance_to_cutoff, curves_csv_string, mc_fidelity, purcell_ratio, t2_star, FidelityCurve,
    Strategy,
};
use timebin_core::params::{BranchOrder, EmitterPair, RunOptions};
use timebin_core::phase::{ratio, LinearPhase, TimeSymbol};
use timebin_core::tradeoff::{compare, format_table, table_csv};

use config::{parse_rational, Config, ConfigError};

/// Simulate and verify time-bin spin-spin entanglement protocols under
/// quasi-static spectral diffusion.
#[derive(ClapParser)]
#[command(name = "timebin", version, about)]
struct Cli {
    /// Flat key=value configuration file (frequencies in Hz).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. --set gamma_b=2e6 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Size of the worker pool for Monte Carlo sampling (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sequence symbolically and check its unknown phase residual.
    Verify(VerifyArgs),
    /// Emit fidelity-versus-acceptance curves as CSV.
    Curve(CurveArgs),
    /// Invert the curves: maximum acceptance fraction for a target fidelity.
    Tradeoff(TradeoffArgs),
    /// Monte Carlo fidelity estimate for one parameter point.
    Mc(McArgs),
    /// Print derived hardware quantities (T2*, lifetime ratio, cutoff).
    Params,
}

#[derive(Args)]
struct VerifyArgs {
    /// Built-in protocol name (see `--builtin list`).
    #[arg(long, conflicts_with = "file")]
    builtin: Option<String>,
    /// A .seq program file.
    file: Option<PathBuf>,
    /// Expected residual class for file input: t0 | arrival-diff | eps | none.
    #[arg(long)]
    expect: Option<String>,
    /// Force the excited-detuning correlation substitution on or off
    /// (defaults to on for shelved built-ins).
    #[arg(long)]
    assume_correlated: Option<bool>,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CurveArgs {
    /// Strategy: rephase | postselect.
    #[arg(long)]
    strategy: String,
    /// Lifetime ratios for the rephase strategy, comma separated.
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    /// Diffusion ratios for the postselect strategy, comma separated.
    #[arg(long, value_delimiter = ',')]
    theta: Vec<f64>,
    /// Acceptance-fraction grid: comma list or start:end:step.
    #[arg(long, default_value = "0.02:1:0.02")]
    fa: String,
    /// Sample count: compute the curve by Monte Carlo instead of the
    /// closed forms, adding the stderr column.
    #[arg(long)]
    mc: Option<u64>,
    /// Seed for --mc.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TradeoffArgs {
    /// Target fidelity in (0.5, 1).
    #[arg(long)]
    target: f64,
    /// Rephase lifetime ratios to compare.
    #[arg(long = "rephase-x", value_delimiter = ',')]
    rephase_x: Vec<f64>,
    /// Post-selection diffusion ratios to compare.
    #[arg(long = "postselect-theta", value_delimiter = ',')]
    postselect_theta: Vec<f64>,
    /// Bisection tolerance on the acceptance fraction.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Also write the table as CSV to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Built-in sequence to sample.
    #[arg(long, conflicts_with = "strategy")]
    sequence: Option<String>,
    /// Or a strategy shorthand: rephase | postselect.
    #[arg(long)]
    strategy: Option<String>,
    /// Lifetime ratio for --strategy rephase.
    #[arg(long)]
    x: Option<f64>,
    /// Diffusion ratio for --strategy postselect.
    #[arg(long)]
    theta: Option<f64>,
    /// Acceptance fraction.
    #[arg(long)]
    fa: Option<f64>,
    /// Sample count.
    #[arg(long)]
    n: Option<u64>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
}

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        CliError { code, msg: msg.into() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::new(2, e.to_string())
    }
}

impl From<DslError> for CliError {
    fn from(e: DslError) -> Self {
        CliError::new(2, e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::new(3, e.to_string())
    }
}

impl From<FidelityError> for CliError {
    fn from(e: FidelityError) -> Self {
        match e {
            FidelityError::InvalidParam(_) | FidelityError::Dsl(_) => {
                CliError::new(2, e.to_string())
            }
            _ => CliError::new(3, e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(3, format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        // Build the global pool before any sampling touches it.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: cannot configure worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for kv in &cli.overrides {
        cfg.set_assignment(kv)?;
    }
    let params = cfg.emitter_pair()?;
    for w in params.validate()? {
        eprintln!("warning: {w}");
    }

    match &cli.command {
        Command::Verify(args) => cmd_verify(args, &cfg, &params),
        Command::Curve(args) => cmd_curve(args, &cfg, &params),
        Command::Tradeoff(args) => cmd_tradeoff(args, &params),
        Command::Mc(args) => cmd_mc(args, &cfg, &params),
        Command::Params => cmd_params(&cfg, &params),
    }
}

// ---- verify ----

#[derive(Clone, Copy, PartialEq, Eq)]
enum ResidualClass {
    EmissionTime,
    ArrivalDiff,
    TimingError,
    NoResidual,
}

impl ResidualClass {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "t0" => Ok(ResidualClass::EmissionTime),
            "arrival-diff" => Ok(ResidualClass::ArrivalDiff),
            "eps" => Ok(ResidualClass::TimingError),
            "none" => Ok(ResidualClass::NoResidual),
            other => Err(CliError::new(
                2,
                format!("unknown residual class `{other}` (expected t0 | arrival-diff | eps | none)"),
            )),
        }
    }

    fn for_builtin(b: BuiltinSeq) -> Self {
        match b {
            BuiltinSeq::SingleStandard => ResidualClass::EmissionTime,
            BuiltinSeq::SingleRephase | BuiltinSeq::SingleRephaseShelved => {
                ResidualClass::TimingError
            }
            BuiltinSeq::TwoPhotonStandard => ResidualClass::ArrivalDiff,
            BuiltinSeq::TwoPhotonRephase
            | BuiltinSeq::TwoPhotonRephaseShelved
            | BuiltinSeq::TwoPhotonRephaseShelvedFlipped => ResidualClass::NoResidual,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            ResidualClass::EmissionTime => "emission-time dependent: ±(Δ₂−Δ₁)·t₀ survives",
            ResidualClass::ArrivalDiff => "arrival-difference dependent: ±(Δ₂−Δ₁)·(τ₂−τ₁)",
            ResidualClass::TimingError => "timing-error only: exactly ±(Δ₂−Δ₁)·ε",
            ResidualClass::NoResidual => "fully known: zero unknown residual",
        }
    }

    fn matches(self, residual: &LinearPhase) -> bool {
        use timebin_core::phase::FreqSymbol::{Delta1, Delta2};
        let diff = |t: TimeSymbol| {
            LinearPhase::from_terms([(Delta2, t, ratio(1, 1)), (Delta1, t, ratio(-1, 1))])
        };
        match self {
            ResidualClass::EmissionTime => {
                let t0_part = LinearPhase::from_terms(
                    residual
                        .terms()
                        .filter(|(_, ts, _)| *ts == TimeSymbol::EmitT0)
                        .map(|(f, t, c)| (f, t, c.clone())),
                );
                t0_part.eq_up_to_sign(&diff(TimeSymbol::EmitT0))
            }
            ResidualClass::ArrivalDiff => {
                let expect = LinearPhase::combine(
                    &diff(TimeSymbol::Tau2),
                    &diff(TimeSymbol::Tau1),
                    -1,
                );
                residual.eq_up_to_sign(&expect)
            }
            ResidualClass::TimingError => residual.eq_up_to_sign(&diff(TimeSymbol::Eps)),
            ResidualClass::NoResidual => residual.is_zero(),
        }
    }
}

fn cmd_verify(args: &VerifyArgs, cfg: &Config, params: &EmitterPair) -> Result<u8, CliError> {
    let mut opts = cfg.run_options()?;

    let (sequence, expected): (Sequence, Option<ResidualClass>) = match (&args.builtin, &args.file)
    {
        (Some(name), None) => {
            if name == "list" {
                for b in BuiltinSeq::ALL {
                    println!("{b}");
                }
                return Ok(0);
            }
            let b: BuiltinSeq = name.parse()?;
            if b.is_shelved() {
                opts.assume_correlated = true;
            }
            (b.sequence(&params.moment_ratio), Some(ResidualClass::for_builtin(b)))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::new(2, format!("cannot read {}: {e}", path.display())))?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("user");
            let parser = SeqParser::new().with_param("r", params.moment_ratio.clone());
            let seq = parser.parse_named(&text, name)?;
            let expect = args.expect.as_deref().map(ResidualClass::parse).transpose()?;
            (seq, expect)
        }
        _ => {
            return Err(CliError::new(2, "give either --builtin NAME or a .seq file"));
        }
    };
    if let Some(flag) = args.assume_correlated {
        opts.assume_correlated = flag;
    }

    let orders: &[BranchOrder] = if sequence.has_branch() {
        &[BranchOrder::SecondLater, BranchOrder::FirstLater]
    } else {
        &[BranchOrder::SecondLater]
    };

    let mut reports: Vec<(BranchOrder, BellReport)> = Vec::new();
    for &order in orders {
        let o = RunOptions { assumed_order: order, ..opts.clone() };
        let (_, report) = run(&sequence, params, &o)?;
        reports.push((order, report));
    }

    let verdict = expected.map(|class| {
        (
            class,
            reports.iter().all(|(_, r)| class.matches(&r.unknown_part)),
        )
    });

    if args.json {
        let output = serde_json::json!({
            "sequence": sequence.name,
            "runs": reports
                .iter()
                .map(|(order, r)| {
                    let mut v = r.to_json();
                    v["branch"] = serde_json::json!(order);
                    v
                })
                .collect::<Vec<_>>(),
            "pass": verdict.map(|(_, ok)| ok),
        });
        println!("{output}");
    } else {
        println!("sequence: {}", sequence.name);
        for (order, report) in &reports {
            if sequence.has_branch() {
                match order {
                    BranchOrder::SecondLater => println!("-- branch: second photon later --"),
                    BranchOrder::FirstLater => println!("-- branch: first photon later --"),
                }
            }
            println!("{report}");
        }
        if let Some((class, _)) = verdict {
            println!("expected residual class: {}", class.describe());
        }
    }

    match verdict {
        Some((_, true)) => {
            if !args.json {
                println!("PASS");
            }
            Ok(0)
        }
        Some((_, false)) => {
            if !args.json {
                println!("FAIL");
            }
            Ok(1)
        }
        None => Ok(0),
    }
}

// ---- curve ----

fn parse_fa_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    use num::ToPrimitive;
    let bad = |msg: String| CliError::new(2, msg);
    let mut grid = Vec::new();
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("grid `{spec}` must be start:end:step")));
        }
        let start = parse_rational(parts[0])?;
        let end = parse_rational(parts[1])?;
        let step = parse_rational(parts[2])?;
        if step <= ratio(0, 1) || end < start {
            return Err(bad("grid needs step > 0 and end ≥ start".into()));
        }
        // Rational stepping keeps grid points at clean decimals.
        let mut cur = start;
        while cur <= end {
            grid.push(cur.to_f64().unwrap());
            cur += step.clone();
        }
    } else {
        for part in spec.split(',') {
            grid.push(
                parse_rational(part.trim())?
                    .to_f64()
                    .ok_or_else(|| bad("grid value out of range".into()))?,
            );
        }
    }
    if grid.is_empty() || !grid.iter().all(|f| *f > 0.0 && *f <= 1.0) {
        return Err(bad("acceptance fractions must lie in (0, 1]".into()));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(bad("acceptance grid must be strictly increasing".into()));
    }
    Ok(grid)
}

fn strategies_from(
    kind: &str,
    xs: &[f64],
    thetas: &[f64],
) -> Result<Vec<Strategy>, CliError> {
    match kind {
        "rephase" => {
            let xs = if xs.is_empty() { vec![0.01, 0.1, 1.0] } else { xs.to_vec() };
            Ok(xs.into_iter().map(|x| Strategy::Rephase { x }).collect())
        }
        "postselect" => {
            let ts = if thetas.is_empty() { vec![0.1, 1.0, 10.0] } else { thetas.to_vec() };
            Ok(ts.into_iter().map(|theta| Strategy::PostSelect { theta }).collect())
        }
        other => Err(CliError::new(
            2,
            format!("unknown strategy `{other}` (expected rephase | postselect)"),
        )),
    }
}

fn cmd_curve(args: &CurveArgs, cfg: &Config, params: &EmitterPair) -> Result<u8, CliError> {
    let grid = parse_fa_grid(&args.fa)?;
    let strategies = strategies_from(&args.strategy, &args.x, &args.theta)?;
    let normalized = cfg.normalized_eq()?;

    let mut curves = Vec::new();
    for s in strategies {
        let curve = match args.mc {
            None => FidelityCurve::analytic(s, &grid, normalized)?,
            Some(n) => FidelityCurve::monte_carlo(s, &grid, params.gamma_b, n, args.seed)?,
        };
        curves.push(curve);
    }

    let csv = curves_csv_string(&curves);
    match &args.output {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

// ---- tradeoff ----

fn cmd_tradeoff(args: &TradeoffArgs, params: &EmitterPair) -> Result<u8, CliError> {
    let mut strategies: Vec<Strategy> =
        args.rephase_x.iter().map(|&x| Strategy::Rephase { x }).collect();
    strategies.extend(
        args.postselect_theta
            .iter()
            .map(|&theta| Strategy::PostSelect { theta }),
    );
    if strategies.is_empty() {
        return Err(CliError::new(
            2,
            "give at least one of --rephase-x or --postselect-theta",
        ));
    }
    let rows = compare(&strategies, params.gamma_b, args.target, args.tol, true)?;
    print!("{}", format_table(&rows));
    if let Some(path) = &args.csv {
        std::fs::write(path, table_csv(&rows))?;
    }
    Ok(0)
}

// ---- mc ----

fn cmd_mc(args: &McArgs, cfg: &Config, params: &EmitterPair) -> Result<u8, CliError> {
    let mut params = params.clone();
    let (sequence, strategy_note) = match (&args.sequence, &args.strategy) {
        (Some(name), None) => (name.parse::<BuiltinSeq>()?, None),
        (None, Some(kind)) => match kind.as_str() {
            "rephase" => {
                let x = args
                    .x
                    .ok_or_else(|| CliError::new(2, "--strategy rephase needs --x"))?;
                params.gamma_a = x * params.gamma_b;
                (BuiltinSeq::SingleRephaseShelved, Some(("x", x)))
            }
            "postselect" => {
                let theta = args
                    .theta
                    .ok_or_else(|| CliError::new(2, "--strategy postselect needs --theta"))?;
                params.sigma_f = theta * params.gamma_b;
                (BuiltinSeq::SingleStandard, Some(("theta", theta)))
            }
            other => {
                return Err(CliError::new(2, format!("unknown strategy `{other}`")));
            }
        },
        _ => {
            return Err(CliError::new(2, "give exactly one of --sequence or --strategy"));
        }
    };

    let f_a = match args.fa {
        Some(v) => v,
        None => cfg.f64_or("fa", 1.0)?,
    };
    let n = match args.n {
        Some(v) => v,
        None => cfg.u64_or("n", 100_000)?,
    };
    let seed = match args.seed {
        Some(v) => v,
        None => cfg.u64_or("seed", 42)?,
    };
    let opts = cfg.run_options()?;

    let est = mc_fidelity(sequence, &params, &opts, f_a, n, seed)?;

    let mut out = serde_json::json!({
        "mean": est.mean,
        "stderr": est.stderr,
        "n": est.n,
        "seed": est.seed,
        "params": {
            "sequence": sequence.name(),
            "f_a": f_a,
            "gamma_b": params.gamma_b,
            "gamma_a": params.gamma_a,
            "sigma_f_hz": params.sigma_f,
            "eps_s": params.eps,
            "alpha": params.alpha,
            "r": format!("{}", params.moment_ratio),
        },
    });
    if let Some((key, value)) = strategy_note {
        out["params"][key] = serde_json::json!(value);
    }
    println!("{out}");
    Ok(0)
}

// ---- params ----

fn cmd_params(cfg: &Config, params: &EmitterPair) -> Result<u8, CliError> {
    let mut out = String::new();
    if params.sigma_f > 0.0 {
        writeln!(
            out,
            "T2* (dephasing time)        : {:.6e} s",
            t2_star(params.sigma_f).map_err(CliError::from)?
        )
        .unwrap();
    } else {
        writeln!(out, "T2* (dephasing time)        : n/a (sigma_f_hz = 0)").unwrap();
    }
    writeln!(out, "lifetime ratio x = ΓA/ΓB    : {}", params.lifetime_ratio()).unwrap();

    let kappa = cfg.f64_or("kappa_hz", 0.0)?;
    let mut split = cfg.f64_or("delta_split_hz", 0.0)?;
    if split == 0.0 {
        // Fall back to the Zeeman splittings when given: Δ_split = |ω_g − ω_e|.
        let two_pi = 2.0 * std::f64::consts::PI;
        split = (params.zeeman_g[0] - params.zeeman_e[0]).abs() / two_pi;
    }
    if kappa > 0.0 {
        writeln!(
            out,
            "cavity lifetime ratio x     : {} (Δ_split = {split} Hz, κ = {kappa} Hz)",
            purcell_ratio(split, kappa).map_err(CliError::from)?
        )
        .unwrap();
    }

    let f_a = cfg.f64_or("fa", 1.0)?;
    let t_c = acceptance_to_cutoff(f_a, params.gamma_b).map_err(CliError::from)?;
    writeln!(out, "acceptance window t_c       : {t_c:.6e} s (f_A = {f_a})").unwrap();
    writeln!(out, "mean time of flight T0      : {:.6e} s", params.flight_mean()).unwrap();
    writeln!(out, "differential flight δT      : {:.6e} s", params.flight_delta()).unwrap();
    print!("{out}");
    Ok(0)
}
