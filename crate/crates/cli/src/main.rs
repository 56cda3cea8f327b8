//! `qwalk`: escape probabilities, information maps and estimation runs for
//! quantum walks with an absorbing boundary.
//!
//! Exit status: 0 on success, 1 on domain or I/O errors (one line on stderr),
//! 2 on usage errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qwalk_core::bloch::parse_angle;
use qwalk_core::estimation::{estimate_once, monte_carlo, tomography_comparison, ExperimentDesign};
use qwalk_core::figures::{reproduce_figures, FigureOptions};
use qwalk_core::fisher::{efficiency, fisher_alpha, fisher_beta, fisher_matrix, fisher_total, qfi};
use qwalk_core::grid::{grid_scan, hot_spots, GridSpec, Layout, Quantity};
use qwalk_core::spectral::{escape_prob_closed, escape_prob_quadrature, parse_placements, DEFAULT_QUAD_TOL};
use qwalk_core::walk::{run, WalkConfig, DEFAULT_MAX_STEPS};
use qwalk_core::{BlochState, Boundary, Error};

mod output;

use output::{round_json, Output};

#[derive(Debug, Parser)]
#[command(name = "qwalk", version, about = "Quantum-walk escape probabilities and coin-state estimation")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Escape probability at one coin state.
    EscapeProb(EscapeArgs),
    /// Per-step absorption trace of the time-domain walk, as CSV.
    Simulate(SimulateArgs),
    /// A quantity evaluated over the (alpha, beta) grid.
    Grid(GridArgs),
    /// Fisher information, quantum Fisher information and efficiency at one state.
    Fisher(FisherArgs),
    /// Refined local maxima of F_beta.
    HotSpots(HotSpotArgs),
    /// Sample absorption counts and estimate the coin angles.
    Estimate(EstimateArgs),
    /// Measurement settings needed by tomography versus absorption.
    CompareTomo(TomoArgs),
    /// Write all figure data and a manifest into a directory.
    ReproduceFigures(FigureArgs),
    /// Run a list of subcommands read from a JSON config file.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
struct StateArgs {
    /// Polar angle in radians; accepts forms like `pi/2` or `3pi/4`.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    alpha: String,
    /// Azimuthal angle in radians; same forms as `--alpha`.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    beta: String,
}

impl StateArgs {
    fn state(&self) -> Result<BlochState, Error> {
        BlochState::new(parse_angle(&self.alpha)?, parse_angle(&self.beta)?)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Closed,
    Quadrature,
    Simulate,
}

#[derive(Debug, Args)]
struct EscapeArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Absorbing site: a positive integer or `inf`.
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    m: String,
    /// Coin bias; the closed form needs 0.5.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, value_enum, default_value_t = Method::Closed)]
    method: Method,
    /// Steps for `--method simulate`.
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    steps: usize,
    /// Absolute tolerance for `--method quadrature`.
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    m: String,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    steps: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LayoutArg {
    Nodes,
    Cell,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// One of P_E, F_alpha, F_beta, eta_alpha, eta_beta, detF_tot.
    #[arg(long)]
    quantity: String,
    /// Single placement (ignored when `--placements` is given).
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    m: String,
    /// Comma-separated placements, e.g. `1,2,inf`; used by detF_tot.
    #[arg(long)]
    placements: Option<String>,
    /// Resolution as `<n_alpha>x<n_beta>`.
    #[arg(long, default_value = "100x100")]
    res: String,
    /// Display cap as a percentile of the raw values.
    #[arg(long)]
    cap: Option<f64>,
    /// Defaults to nodes for P_E and cell-centred for the rest.
    #[arg(long, value_enum)]
    layout: Option<LayoutArg>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct FisherArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    m: String,
    /// Comma-separated placements for the combined matrix.
    #[arg(long)]
    placements: Option<String>,
}

#[derive(Debug, Args)]
struct HotSpotArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "inf")]
    m: String,
    /// Alpha cells of the seeding grid (beta gets twice as many).
    #[arg(long, default_value_t = 60)]
    res: usize,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value = "1,2")]
    placements: String,
    /// Trials per placement.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// 1 for a single estimate, at least 100 for a Monte Carlo study.
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TomoArgs {
    #[arg(long)]
    steps: u64,
    #[arg(long)]
    placements: u64,
}

#[derive(Debug, Args)]
struct FigureArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Surface resolution as `<n_alpha>x<n_beta>`.
    #[arg(long, default_value = "101x201")]
    res: String,
    /// Points per 1-D cut.
    #[arg(long, default_value_t = 401)]
    cut_points: usize,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// JSON file: `{"runs": [["escape-prob", "--m", "2"], ...]}`.
    #[arg(long)]
    config: PathBuf,
}

fn parse_res(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::Parse(format!("resolution {s:?} must look like 100x100"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn boundary(s: &str) -> Result<Boundary, Error> {
    s.parse()
}

fn placements_or(single: &str, list: &Option<String>) -> Result<Vec<Boundary>, Error> {
    match list {
        Some(l) => parse_placements(l),
        None => Ok(vec![boundary(single)?]),
    }
}

fn escape_prob(a: &EscapeArgs) -> Result<Output, Error> {
    let state = a.state.state()?;
    let m = boundary(&a.m)?;
    let record = match a.method {
        Method::Closed => {
            if a.rho != 0.5 {
                return Err(Error::Domain(format!(
                    "closed form exists only for rho = 0.5 (got {}); use --method quadrature",
                    a.rho
                )));
            }
            json!({"value": escape_prob_closed(&state, m)?, "achieved_tol": Value::Null})
        }
        Method::Quadrature => {
            let q = escape_prob_quadrature(&state, m, a.rho, a.tol)?;
            json!({"value": q.value, "achieved_tol": q.achieved_tol, "panels": q.panels, "experimental": q.experimental})
        }
        Method::Simulate => {
            let mf = m
                .as_finite()
                .ok_or_else(|| Error::Domain("the simulator needs a finite absorbing site".into()))?;
            let trace = run(&WalkConfig::new(a.rho, mf, a.steps)?, &state)?;
            json!({"value": trace.escape_estimate, "achieved_tol": trace.certify(), "steps": trace.steps_run})
        }
    };
    let mut record = record;
    let method = match a.method {
        Method::Closed => "closed",
        Method::Quadrature => "quadrature",
        Method::Simulate => "simulate",
    };
    let obj = record.as_object_mut().expect("record is an object");
    obj.insert("method".into(), json!(method));
    obj.insert("m".into(), serde_json::to_value(m)?);
    obj.insert("rho".into(), json!(a.rho));
    obj.insert("alpha".into(), json!(state.alpha()));
    obj.insert("beta".into(), json!(state.beta()));
    Ok(Output::Json(record))
}

fn simulate(a: &SimulateArgs) -> Result<Output, Error> {
    let state = a.state.state()?;
    let m = boundary(&a.m)?
        .as_finite()
        .ok_or_else(|| Error::Domain("the simulator needs a finite absorbing site".into()))?;
    let trace = run(&WalkConfig::new(a.rho, m, a.steps)?, &state)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).expect("writing to a Vec cannot fail");
    Ok(Output::Text(String::from_utf8(buf).expect("CSV output is ASCII")))
}

fn grid(a: &GridArgs) -> Result<Output, Error> {
    let quantity: Quantity = a.quantity.parse()?;
    let placements = placements_or(&a.m, &a.placements)?;
    let (na, nb) = parse_res(&a.res)?;
    let layout = match a.layout {
        Some(LayoutArg::Nodes) => Layout::Nodes,
        Some(LayoutArg::Cell) => Layout::CellCentered,
        None => quantity.default_layout(),
    };
    let spec = GridSpec::new(quantity, placements[0], na, nb)
        .placements(placements)
        .layout(layout)
        .cap(a.cap);
    let g = grid_scan(&spec)?;
    Ok(match a.format {
        Format::Csv => Output::Text(g.to_csv_string()),
        // raw grid values keep full precision so the envelope round-trips
        Format::Json => Output::RawJson(serde_json::to_value(g.envelope())?),
    })
}

fn fisher(a: &FisherArgs) -> Result<Output, Error> {
    let state = a.state.state()?;
    let m = boundary(&a.m)?;
    let mut record = json!({
        "alpha": state.alpha(),
        "beta": state.beta(),
        "m": m,
        "F_alpha": fisher_alpha(&state, m)?,
        "F_beta": fisher_beta(&state, m)?,
        "matrix": fisher_matrix(&state, m)?,
        "qfi": qfi(&state),
        "efficiency": efficiency(&state, m)?,
    });
    if let Some(list) = &a.placements {
        let placements = parse_placements(list)?;
        let total = fisher_total(&state, &placements)?;
        record["total"] = json!({
            "matrix": total.matrix,
            "det": total.matrix.det(),
            "rank_deficient": total.matrix.is_rank_deficient(),
            "skipped": total.skipped,
        });
    }
    Ok(Output::Json(record))
}

fn estimate(a: &EstimateArgs) -> Result<Output, Error> {
    let state = a.state.state()?;
    let design = ExperimentDesign::new(parse_placements(&a.placements)?, a.trials, a.seed)?;
    let report = if a.replicates == 1 {
        estimate_once(&state, &design)?
    } else {
        monte_carlo(&state, &design, a.replicates)?
    };
    Ok(Output::Json(serde_json::to_value(report)?))
}

fn figures(a: &FigureArgs) -> Result<Output, Error> {
    let (n_alpha, n_beta) = parse_res(&a.res)?;
    let opts = FigureOptions {
        n_alpha,
        n_beta,
        cut_points: a.cut_points,
    };
    let manifest = reproduce_figures(&a.out_dir, &opts)?;
    Ok(Output::Json(serde_json::to_value(manifest)?))
}

fn batch(a: &BatchArgs) -> Result<Output, Error> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::Io {
        path: a.config.clone(),
        source: e,
    })?;
    let config: Value = serde_json::from_str(&text)?;
    let runs = config["runs"]
        .as_array()
        .ok_or_else(|| Error::Parse("batch config needs a \"runs\" array".into()))?;
    let mut lines = Vec::new();
    for (i, entry) in runs.iter().enumerate() {
        let args: Vec<String> = entry
            .as_array()
            .and_then(|a| a.iter().map(|v| v.as_str().map(str::to_owned)).collect())
            .ok_or_else(|| Error::Parse(format!("batch run {i} must be an array of strings")))?;
        let cli = Cli::try_parse_from(std::iter::once("qwalk".to_owned()).chain(args))
            .map_err(|e| Error::Parse(format!("batch run {i}: {}", e.kind())))?;
        if matches!(cli.command, Command::Batch(_)) {
            return Err(Error::Parse("batch runs cannot nest".into()));
        }
        let out = execute(&cli.command)?;
        match &cli.output {
            Some(path) => out.write_to(Some(path))?,
            None => lines.push(out.render()),
        }
    }
    Ok(Output::Text(lines.concat()))
}

fn execute(cmd: &Command) -> Result<Output, Error> {
    match cmd {
        Command::EscapeProb(a) => escape_prob(a),
        Command::Simulate(a) => simulate(a),
        Command::Grid(a) => grid(a),
        Command::Fisher(a) => fisher(a),
        Command::HotSpots(a) => Ok(Output::Json(serde_json::to_value(hot_spots(boundary(&a.m)?, a.res)?)?)),
        Command::Estimate(a) => estimate(a),
        Command::CompareTomo(a) => Ok(Output::Json(serde_json::to_value(tomography_comparison(
            a.steps,
            a.placements,
        )?)?)),
        Command::ReproduceFigures(a) => figures(a),
        Command::Batch(a) => batch(a),
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("QWALK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Domain(format!("QWALK_THREADS={raw:?} is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Domain(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|_| execute(&cli.command))
        .and_then(|out| out.write_to(cli.output.as_deref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(io::stderr(), "qwalk: {msg}");
            ExitCode::from(1)
        }
    }
}

impl Output {
    fn write_to(&self, path: Option<&Path>) -> Result<(), Error> {
        let text = self.render();
        let io_err = |p: &Path, e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        };
        match path {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?);
                w.write_all(text.as_bytes())
                    .and_then(|_| w.flush())
                    .map_err(|e| io_err(p, e))
            }
            None => {
                let mut out = io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| io_err(Path::new("<stdout>"), e))
            }
        }
    }

    fn render(&self) -> String {
        match self {
            Output::Json(v) => format!("{}\n", round_json(v.clone())),
            Output::RawJson(v) => format!("{v}\n"),
            Output::Text(t) => t.clone(),
        }
    }
}
