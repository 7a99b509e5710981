use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use chromatch::experiments::{run_experiment, ExperimentConfig, GridMode, Suite};
use chromatch::instances::{
    figure1_instance, instance_to_string, random_balanced, read_instance_file, unbalanced_hull_instance,
};
use chromatch::oracle::{matching_count, min_f};
use chromatch::rng::rng_from_seed;
use chromatch::rounding::{certify_origin, theorem3_pipeline, Rational};
use chromatch::rpm::{rpm_sample, sample_until_bound};
use chromatch::search::search_from_rpm;
use chromatch::{color_vector, ColoredCompleteGraph, Error, PerfectMatching};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_BUDGET: u8 = 2;
const EXIT_HULL: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "chromatch", version, about = "Nearly color-balanced perfect matchings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file.
    Generate(GenerateArgs),
    /// Find a matching with small imbalance.
    Solve(SolveArgs),
    /// Run a seeded experiment grid and write CSV.
    Experiment(ExperimentArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long, required_unless_present = "figure1")]
    k: Option<usize>,
    #[arg(long, required_unless_present = "figure1")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// The fixed 3-colored K6 with no rainbow perfect matching.
    #[arg(long, conflicts_with_all = ["k", "n", "hull_unbalanced"])]
    figure1: bool,
    /// An unbalanced coloring whose origin is still in the matching hull.
    #[arg(long)]
    hull_unbalanced: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Rpm,
    Swap,
    Round,
    Oracle,
}

#[derive(clap::Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = chromatch::search::DEFAULT_PLATEAU_BUDGET)]
    plateau: usize,
    #[arg(long, default_value_t = chromatch::rpm::DEFAULT_BUDGET)]
    budget: usize,
    /// Uniform matchings drawn for the hull certificate.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Print a JSON report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    suite: Suite,
    /// Comma-separated color counts.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Comma-separated balance parameters (graph orders for `uniformity`).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Use every (k, n) combination instead of pairing the lists.
    #[arg(long)]
    cross: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, visible_alias = "runs")]
    trials: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    plateau: Option<usize>,
    /// Comma-separated rational weights such as `1/4`.
    #[arg(long, value_delimiter = ',')]
    p: Vec<Rational>,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::HullNotCertified { .. } | Error::HullSearchExhausted { .. } => EXIT_HULL,
            Error::Io(_) | Error::Csv(_) | Error::Consistency(_) => 1,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Experiment(args) => experiment(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("CHROMATCH_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("CHROMATCH_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Destination for the main output, plus a writer for side information that
/// must not mix into a file printed on stdout.
fn open_output(out: &Option<PathBuf>) -> io::Result<(Box<dyn Write>, Box<dyn Write>)> {
    Ok(match out {
        Some(path) => (Box::new(BufWriter::new(File::create(path)?)), Box::new(io::stdout())),
        None => (Box::new(io::stdout()), Box::new(io::stderr())),
    })
}

fn generate(args: GenerateArgs) -> Result<u8, Failure> {
    let mut certificate = None;
    let g = if args.figure1 {
        figure1_instance()
    } else {
        let (k, n) = (args.k.unwrap_or_default(), args.n.unwrap_or_default());
        if args.hull_unbalanced {
            let hull = unbalanced_hull_instance(k, n, args.seed)?;
            certificate = Some((hull.certificate.support(), hull.attempts));
            hull.graph
        } else {
            random_balanced(k, n, args.seed)?
        }
    };
    let (mut main, mut info) = open_output(&args.out)?;
    main.write_all(instance_to_string(&g).as_bytes())?;
    main.flush()?;

    writeln!(info, "order {} with {} colors", g.order(), g.num_colors())?;
    for (c, count) in g.color_counts().iter().enumerate() {
        writeln!(info, "color {}: {count} edges", c + 1)?;
    }
    match g.balance_parameter() {
        Ok(n) if g.is_balanced() => writeln!(info, "balanced: yes (n = {n})")?,
        _ => writeln!(info, "balanced: no")?,
    }
    if let Some((support, attempts)) = certificate {
        writeln!(
            info,
            "hull certificate: {support} matchings, found on attempt {attempts}"
        )?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct StageJson {
    p: String,
    bundles: usize,
    attempts: usize,
    rounding_deviation: f64,
    step_deviation: f64,
    accepted: bool,
}

#[derive(Serialize)]
struct SolveReport {
    method: &'static str,
    file: String,
    order: usize,
    k: usize,
    n: usize,
    seed: u64,
    matching: Vec<(usize, usize)>,
    deviations: Vec<i64>,
    f: u64,
    bound: Option<f64>,
    attempts: usize,
    status: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    stages: Vec<StageJson>,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Rpm => "rpm",
        Method::Swap => "swap",
        Method::Round => "round",
        Method::Oracle => "oracle",
    }
}

fn solve(args: SolveArgs) -> Result<u8, Failure> {
    let g = read_instance_file(&args.file).map_err(|e| input_error(format!("{}: {e}", args.file.display())))?;
    let n = g.balance_parameter()?;
    let mut report = SolveReport {
        method: method_name(args.method),
        file: args.file.display().to_string(),
        order: g.order(),
        k: g.num_colors(),
        n,
        seed: args.seed,
        matching: Vec::new(),
        deviations: Vec::new(),
        f: 0,
        bound: None,
        attempts: 0,
        status: "ok",
        notes: Vec::new(),
        stages: Vec::new(),
    };
    let mut code = 0;
    let matching = match args.method {
        Method::Oracle => {
            let best = min_f(&g, n)?;
            report.attempts = matching_count(g.order()) as usize;
            report.notes.push(format!("min f = {}", best.min_f));
            report.notes.push(format!("{} minimizing matchings", best.minimizers));
            best.witness
        }
        Method::Rpm => {
            let out = sample_until_bound(&g, n, args.budget, &mut rng_from_seed(args.seed))?;
            report.attempts = out.attempts;
            report.bound = Some(out.bound);
            if !out.within_bound {
                report.status = "budget exhausted";
                code = EXIT_BUDGET;
            }
            out.matching
        }
        Method::Swap => {
            let out = search_from_rpm(&g, n, args.restarts, args.plateau, args.seed)?;
            report.attempts = out.restarts.len();
            for (r, s) in out.restarts.iter().enumerate() {
                report.notes.push(format!(
                    "restart {r}: f {} -> {} ({} improving, {} plateau steps)",
                    s.start_f, s.final_f, s.improving_steps, s.plateau_steps
                ));
            }
            out.best
        }
        Method::Round => {
            let mut rng = rng_from_seed(args.seed);
            let pool = (0..args.samples)
                .map(|_| rpm_sample(g.order(), &mut rng))
                .collect::<chromatch::Result<Vec<PerfectMatching>>>()?;
            let cc = certify_origin(&g, n, &pool, args.samples, &mut rng)?;
            report
                .notes
                .push(format!("hull certificate with {} matchings", cc.support()));
            let out = theorem3_pipeline(&g, n, &cc, &mut rng)?;
            let trace = &out.trace;
            report.bound = Some(trace.final_bound);
            report.attempts = trace.total_attempts();
            if !trace.guarantee_applies {
                report.notes.push("fewer than 4 colors: bounds not guaranteed".into());
            }
            report.stages = trace
                .stages
                .iter()
                .map(|s| StageJson {
                    p: s.p.to_string(),
                    bundles: s.bundles,
                    attempts: s.attempts,
                    rounding_deviation: s.rounding_deviation,
                    step_deviation: s.step_deviation,
                    accepted: s.accepted,
                })
                .collect();
            if !trace.all_accepted() {
                report.status = "budget exhausted";
                code = EXIT_BUDGET;
            }
            out.matching
        }
    };
    let cv = color_vector(&g, &matching, n)?;
    report.matching = matching.pairs();
    report.deviations = cv.deviations;
    report.f = cv.norm1;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
    } else {
        write_text(&mut out, &g, &report)?;
    }
    Ok(code)
}

fn write_text(out: &mut impl Write, g: &ColoredCompleteGraph, r: &SolveReport) -> io::Result<()> {
    writeln!(
        out,
        "instance: {} (order {}, k = {}, n = {})",
        r.file, r.order, r.k, r.n
    )?;
    writeln!(out, "method: {} (seed {})", r.method, r.seed)?;
    let pairs: Vec<String> = r
        .matching
        .iter()
        .map(|&(u, v)| format!("{u}-{v}:{}", g.color(u, v) + 1))
        .collect();
    writeln!(out, "matching (u-v:color): {}", pairs.join(" "))?;
    let devs: Vec<String> = r.deviations.iter().map(|d| format!("{d:+}")).collect();
    writeln!(out, "v = ({})", devs.join(", "))?;
    for note in &r.notes {
        writeln!(out, "{note}")?;
    }
    for (i, s) in r.stages.iter().enumerate() {
        writeln!(
            out,
            "stage {}: p = {}, {} bundles, {} attempts, deviation {:.3}, step {:.3}{}",
            i + 1,
            s.p,
            s.bundles,
            s.attempts,
            s.rounding_deviation,
            s.step_deviation,
            if s.accepted { "" } else { " (not accepted)" }
        )?;
    }
    match r.bound {
        Some(b) => writeln!(out, "final f = {} (bound {b:.3}, attempts {})", r.f, r.attempts)?,
        None => writeln!(out, "final f = {} (attempts {})", r.f, r.attempts)?,
    }
    writeln!(out, "status: {}", r.status)
}

fn experiment(args: ExperimentArgs) -> Result<u8, Failure> {
    let mut cfg = ExperimentConfig::defaults(args.suite);
    cfg.seed = args.seed;
    if !args.k.is_empty() {
        cfg.ks = args.k;
    }
    if !args.n.is_empty() {
        cfg.ns = args.n;
    }
    if args.cross {
        cfg.grid = GridMode::Cross;
    }
    cfg.trials = args.trials.unwrap_or(cfg.trials);
    cfg.samples = args.samples.unwrap_or(cfg.samples);
    cfg.budget = args.budget.unwrap_or(cfg.budget);
    cfg.restarts = args.restarts.unwrap_or(cfg.restarts);
    cfg.plateau = args.plateau.unwrap_or(cfg.plateau);
    if !args.p.is_empty() {
        cfg.probabilities = args.p;
    }
    let report = run_experiment(&cfg)?;
    let (main, mut info) = open_output(&args.out)?;
    report.write_csv(main)?;
    writeln!(info, "{}", report.summary_line())?;
    Ok(if report.passed() { 0 } else { 1 })
}
