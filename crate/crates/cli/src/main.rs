mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use coinflip_core::asymptotic::{
    closed_form_constant, discrete_hl, ode_convergence, Schedule, DEFAULT_C, DEFAULT_C0, DEFAULT_N,
    DEFAULT_STEP,
};
use coinflip_core::bounds::{curve_csv, curve_svg, Curve, DEFAULT_GRID};
use coinflip_core::certify::{certify, CertifyOptions, DEFAULT_CERT_MAX_DEPTH, DEFAULT_EPSILON_PRIME};
use coinflip_core::optimal::{family_table, fair_game, optimal_game, t_family_game};
use coinflip_core::quantum::{classical_play, honest_run_with_limit, DEFAULT_SIM_MAX_DEPTH};
use coinflip_core::{eval_h, protocol_point, random_game, CoinGame, Error, GameFile, TreeAssignment};

use output::{csv_row, emit, json, write_atomic, Format};

/// Exit status when a certificate or constraint check fails.
const EXIT_CONSTRAINT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "coinflip", version, about = "Coin-game protocol analysis, simulation and certification")]
struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the main output here (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Numerical tolerance for pass/fail checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Root values and cheating probabilities of a game file.
    Analyze { game: PathBuf },
    /// Write a named game as canonical JSON.
    Generate {
        #[arg(value_enum)]
        kind: GameKind,
        #[arg(long)]
        n: usize,
        /// Top coin for the t-family.
        #[arg(long)]
        t: Option<f64>,
        /// Seed for random games.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample the lower boundary curve `f_n` (or its limit with `--n inf`).
    Curve {
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Run the protocol honestly, or play the classical game by Monte-Carlo.
    Simulate {
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = SimMode::Honest)]
        mode: SimMode,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the final honest state as JSON lines.
        #[arg(long)]
        dump_state: Option<PathBuf>,
        #[arg(long, env = "COINFLIP_SIM_MAX_DEPTH", default_value_t = DEFAULT_SIM_MAX_DEPTH)]
        max_depth: usize,
    },
    /// Check the primal strategy and the dual certificate for Bob's cheating probability.
    Certify {
        game: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON_PRIME)]
        epsilon_prime: f64,
        /// Replace the primal weight tree (`{"depth": n, "nodes": [...]}`).
        #[arg(long)]
        primal_weights: Option<PathBuf>,
        #[arg(long, env = "COINFLIP_CERT_MAX_DEPTH", default_value_t = DEFAULT_CERT_MAX_DEPTH)]
        max_depth: usize,
        /// Largest padding constant the bisection may try.
        #[arg(long, default_value_t = 1e6)]
        max_c: f64,
    },
    /// The continuum limit of the high/low sequences.
    Asymptotic {
        #[arg(value_enum)]
        mode: AsymptoticMode,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_C)]
        c: f64,
        #[arg(long, default_value_t = DEFAULT_C0)]
        c0: f64,
        /// Also write the trajectory as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Closed-form values of the optimal family for n = 1..=n-max.
    Table {
        #[arg(long, default_value_t = 20)]
        n_max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GameKind {
    Optimal,
    Fair,
    TFamily,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMode {
    Honest,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AsymptoticMode {
    Ode,
    Discrete,
    ClosedForm,
}

/// Bad flag combinations; reported with exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

/// A check ran to completion and failed.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct CheckFailed(String);

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<UsageError>() {
        return 2;
    }
    if err.is::<CheckFailed>() {
        return EXIT_CONSTRAINT;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Size { .. }) => 4,
        Some(Error::ConstraintViolation { .. } | Error::BisectionFailure { .. }) => EXIT_CONSTRAINT,
        Some(Error::Io(_)) | None => 1,
        Some(_) => 2,
    }
}

fn pick(format: Option<Format>, default: Format, allowed: &[Format], command: &str) -> anyhow::Result<Format> {
    let f = format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(UsageError(format!("{command} does not support --format {f:?}").to_lowercase()).into());
    }
    Ok(f)
}

fn read_game(path: &Path) -> anyhow::Result<CoinGame> {
    let text = std::fs::read_to_string(path).map_err(Error::from).with_context(|| format!("reading {}", path.display()))?;
    CoinGame::from_json(&text).with_context(|| format!("in {}", path.display()))
}

fn read_weights(path: &Path) -> anyhow::Result<TreeAssignment> {
    let text = std::fs::read_to_string(path).map_err(Error::from).with_context(|| format!("reading {}", path.display()))?;
    let file: GameFile = serde_json::from_str(&text).map_err(Error::from).with_context(|| format!("in {}", path.display()))?;
    Ok(TreeAssignment::new(file.depth, file.nodes)?)
}

#[derive(Serialize)]
struct AnalyzeReport {
    depth: usize,
    a_root: f64,
    b_root: f64,
    h_root: f64,
    pa: f64,
    pa_star: f64,
    pb_star: f64,
    bias: f64,
}

fn analyze(path: &Path, format: Option<Format>) -> anyhow::Result<String> {
    let format = pick(format, Format::Csv, &[Format::Csv, Format::Json], "analyze")?;
    let game = read_game(path)?;
    let p = protocol_point(&game)?;
    let r = AnalyzeReport {
        depth: game.depth(),
        a_root: p.a_root,
        b_root: p.b_root,
        h_root: p.h_root,
        pa: p.pa,
        pa_star: p.pa_star,
        pb_star: p.pb_star,
        bias: p.bias(),
    };
    Ok(match format {
        Format::Json => json(&r),
        _ => csv_row(&[
            ("depth", r.depth.to_string()),
            ("a_root", r.a_root.to_string()),
            ("b_root", r.b_root.to_string()),
            ("h_root", r.h_root.to_string()),
            ("pa", r.pa.to_string()),
            ("pa_star", r.pa_star.to_string()),
            ("pb_star", r.pb_star.to_string()),
            ("bias", r.bias.to_string()),
        ]),
    })
}

fn generate(kind: GameKind, n: usize, t: Option<f64>, seed: u64, format: Option<Format>) -> anyhow::Result<String> {
    pick(format, Format::Json, &[Format::Json], "generate")?;
    if t.is_some() && kind != GameKind::TFamily {
        return Err(UsageError("--t only applies to the t-family".into()).into());
    }
    let game = match kind {
        GameKind::Optimal => optimal_game(n)?,
        GameKind::Fair => fair_game(n).context("fair games need an even n >= 2")?,
        GameKind::TFamily => {
            let t = t.ok_or_else(|| UsageError("the t-family needs --t in [0, 1]".into()))?;
            t_family_game(n, t).context("the t-family needs an even n and t in [0, 1]")?
        }
        GameKind::Random => random_game(n, seed)?,
    };
    Ok(format!("{}\n", game.to_json()))
}

fn parse_curve(n: &str) -> anyhow::Result<Curve> {
    match n.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(Curve::Infinity),
        other => {
            let n: usize = other
                .parse()
                .map_err(|_| UsageError(format!("--n must be a positive integer or `inf`, got `{n}`")))?;
            if n == 0 {
                return Err(Error::Domain("n must be at least 1".into()).into());
            }
            Ok(Curve::Finite(n))
        }
    }
}

fn curve(n: &str, grid: usize, format: Option<Format>) -> anyhow::Result<String> {
    let format = pick(format, Format::Csv, &[Format::Csv, Format::Svg], "curve")?;
    let c = parse_curve(n)?;
    Ok(match format {
        Format::Svg => curve_svg(c, grid)?,
        _ => curve_csv(c, grid)?,
    })
}

#[derive(Serialize)]
struct HonestReport {
    mode: &'static str,
    depth: usize,
    h_root: f64,
    p_bob_wins: f64,
    p_alice_wins: f64,
    disagreement: f64,
    agreement: bool,
    nonzero_terms: usize,
}

#[derive(Serialize)]
struct ClassicalReport {
    mode: &'static str,
    depth: usize,
    h_root: f64,
    samples: u64,
    seed: u64,
    bob_wins: u64,
    estimate: f64,
    std_error: f64,
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    path: &Path,
    mode: SimMode,
    samples: u64,
    seed: u64,
    dump_state: Option<&Path>,
    max_depth: usize,
    format: Option<Format>,
) -> anyhow::Result<String> {
    let format = pick(format, Format::Json, &[Format::Csv, Format::Json], "simulate")?;
    let game = read_game(path)?;
    let h_root = eval_h(&game).root();
    match mode {
        SimMode::Honest => {
            let out = honest_run_with_limit(&game, max_depth)?;
            if let Some(dump) = dump_state {
                let mut buf = Vec::new();
                out.final_state.write_jsonl(&mut buf)?;
                write_atomic(dump, std::str::from_utf8(&buf).expect("JSON is UTF-8"))?;
            }
            let r = HonestReport {
                mode: "honest",
                depth: game.depth(),
                h_root,
                p_bob_wins: out.p_bob_wins,
                p_alice_wins: out.p_alice_wins,
                disagreement: out.disagreement,
                agreement: out.agreement,
                nonzero_terms: out.final_state.nnz(),
            };
            Ok(match format {
                Format::Json => json(&r),
                _ => csv_row(&[
                    ("mode", r.mode.into()),
                    ("depth", r.depth.to_string()),
                    ("h_root", r.h_root.to_string()),
                    ("p_bob_wins", r.p_bob_wins.to_string()),
                    ("p_alice_wins", r.p_alice_wins.to_string()),
                    ("disagreement", r.disagreement.to_string()),
                    ("agreement", r.agreement.to_string()),
                    ("nonzero_terms", r.nonzero_terms.to_string()),
                ]),
            })
        }
        SimMode::Classical => {
            if dump_state.is_some() {
                return Err(UsageError("--dump-state needs --mode honest".into()).into());
            }
            let est = classical_play(&game, samples, seed)?;
            let r = ClassicalReport {
                mode: "classical",
                depth: game.depth(),
                h_root,
                samples,
                seed,
                bob_wins: est.bob_wins,
                estimate: est.mean,
                std_error: est.std_error,
            };
            Ok(match format {
                Format::Json => json(&r),
                _ => csv_row(&[
                    ("mode", r.mode.into()),
                    ("depth", r.depth.to_string()),
                    ("h_root", r.h_root.to_string()),
                    ("samples", r.samples.to_string()),
                    ("seed", r.seed.to_string()),
                    ("bob_wins", r.bob_wins.to_string()),
                    ("estimate", r.estimate.to_string()),
                    ("std_error", r.std_error.to_string()),
                ]),
            })
        }
    }
}

struct CertifyArgs<'a> {
    game: &'a Path,
    epsilon_prime: f64,
    primal_weights: Option<&'a Path>,
    max_depth: usize,
    max_c: f64,
    tol: Option<f64>,
    format: Option<Format>,
    out: Option<&'a Path>,
}

/// Writes the report even when checks fail, then reports the failure.
fn run_certify(a: CertifyArgs<'_>) -> anyhow::Result<()> {
    pick(a.format, Format::Json, &[Format::Json], "certify")?;
    let game = read_game(a.game)?;
    let weights = a.primal_weights.map(read_weights).transpose()?;
    let defaults = CertifyOptions::default();
    let opts = CertifyOptions {
        epsilon_prime: a.epsilon_prime,
        tol: a.tol.unwrap_or(defaults.tol),
        max_depth: a.max_depth,
        max_c: a.max_c,
    };
    let report = certify(&game, &opts, weights.as_ref())?;
    emit(a.out, &json(&report))?;
    if !report.passed {
        return Err(CheckFailed(format!("certification failed:\n  {}", report.failures.join("\n  "))).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct LimitReport {
    mode: &'static str,
    p_star: f64,
    bias: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l0_unrefined: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_invariant_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h0: Option<f64>,
}

impl LimitReport {
    fn new(mode: &'static str, p_star: f64) -> Self {
        LimitReport {
            mode,
            p_star,
            bias: p_star - 0.5,
            closed_form: None,
            l0: None,
            l0_unrefined: None,
            step: None,
            max_invariant_drift: None,
            n: None,
            c: None,
            c0: None,
            h0: None,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn asymptotic(
    mode: AsymptoticMode,
    step: f64,
    n: usize,
    c: f64,
    c0: f64,
    trajectory: Option<&Path>,
    format: Option<Format>,
) -> anyhow::Result<String> {
    let closed = closed_form_constant();
    match mode {
        AsymptoticMode::ClosedForm => {
            pick(format, Format::Json, &[Format::Json], "asymptotic closed-form")?;
            if trajectory.is_some() {
                return Err(UsageError("closed-form has no trajectory".into()).into());
            }
            Ok(json(&LimitReport::new("closed-form", closed)))
        }
        AsymptoticMode::Ode => {
            let format = pick(format, Format::Json, &[Format::Json, Format::Csv], "asymptotic ode")?;
            let t = ode_convergence(step)?;
            if let Some(path) = trajectory {
                write_atomic(path, &t.to_csv())?;
            }
            if format == Format::Csv {
                return Ok(t.to_csv());
            }
            let mut r = LimitReport::new("ode", t.p_star());
            r.closed_form = Some(closed);
            r.l0 = Some(t.l0);
            r.l0_unrefined = Some(t.l0_raw);
            r.step = Some(step);
            r.max_invariant_drift = Some(t.max_invariant_drift());
            Ok(json(&r))
        }
        AsymptoticMode::Discrete => {
            let format = pick(format, Format::Json, &[Format::Json, Format::Csv], "asymptotic discrete")?;
            let seq = discrete_hl(&Schedule::harmonic(n, c, c0)?);
            if let Some(path) = trajectory {
                write_atomic(path, &seq.to_csv())?;
            }
            if format == Format::Csv {
                return Ok(seq.to_csv());
            }
            let mut r = LimitReport::new("discrete", seq.p_star());
            r.closed_form = Some(closed);
            r.n = Some(n);
            r.c = Some(c);
            r.c0 = Some(c0);
            r.h0 = Some(seq.h[0]);
            r.l0 = Some(seq.l[0]);
            Ok(json(&r))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let out = cli.out.as_deref();
    let text = match cli.command {
        Command::Analyze { game } => analyze(&game, cli.format)?,
        Command::Generate { kind, n, t, seed } => generate(kind, n, t, seed, cli.format)?,
        Command::Curve { n, grid } => curve(&n, grid, cli.format)?,
        Command::Simulate { game, mode, samples, seed, dump_state, max_depth } => {
            simulate(&game, mode, samples, seed, dump_state.as_deref(), max_depth, cli.format)?
        }
        Command::Certify { game, epsilon_prime, primal_weights, max_depth, max_c } => {
            return run_certify(CertifyArgs {
                game: &game,
                epsilon_prime,
                primal_weights: primal_weights.as_deref(),
                max_depth,
                max_c,
                tol: cli.tol,
                format: cli.format,
                out,
            });
        }
        Command::Asymptotic { mode, step, n, c, c0, trajectory } => {
            asymptotic(mode, step, n, c, c0, trajectory.as_deref(), cli.format)?
        }
        Command::Table { n_max } => {
            pick(cli.format, Format::Csv, &[Format::Csv], "table")?;
            family_table(n_max)?
        }
    };
    emit(out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
