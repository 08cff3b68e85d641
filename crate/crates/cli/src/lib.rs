//! Command-line front end: construct, verify, estimate, sweep, search and
//! plot.

pub mod plot;
pub mod table;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use hausdorff_forge::construction::{construct, inequality_report, verify_prop2, ConstructionParams};
use hausdorff_forge::density::{estimate, EstimateOptions, HausdorffEstimate, SearchConfig};
use hausdorff_forge::ifs::Ifs;
use hausdorff_forge::measure::NaturalMeasure;
use hausdorff_forge::search::{estimate_at, find_t, straddling_pair, sweep, SearchOptions};
use hausdorff_forge::{Budget, Error};
use serde::Serialize;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "HAUSDORFF_FORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hausdorff-forge", version, about = "Self-similar sets with prescribed Hausdorff measure")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for randomized candidate jitter.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cylinder nodes allowed per refinement.
    #[arg(long, global = true, default_value_t = Budget::default().node_cap)]
    pub node_cap: u64,
    /// Pair evaluations allowed in pairwise searches.
    #[arg(long, global = true, default_value_t = Budget::default().pair_cap)]
    pub pair_cap: u64,
    /// Candidate sets allowed in the density search.
    #[arg(long, global = true, default_value_t = Budget::default().candidate_cap)]
    pub candidate_cap: u64,
    /// Wall-clock limit in seconds (0 disables it).
    #[arg(long, global = true, default_value_t = 0)]
    pub time_cap: u64,
}

impl GlobalOpts {
    fn budget(&self) -> Budget {
        Budget {
            node_cap: self.node_cap,
            pair_cap: self.pair_cap,
            candidate_cap: self.candidate_cap,
            ..Budget::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Final measure tolerance of the density search.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Fattening depth for rigorous lower bounds on the line.
    #[arg(long)]
    pub depth: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choose n, the lattice and the ratio for (d, s, eps) and write params JSON.
    Construct {
        #[arg(short = 'd', long)]
        dim: usize,
        #[arg(short = 's', long)]
        s: f64,
        #[arg(short = 'e', long)]
        eps: f64,
        /// Use this n instead of the minimal one; rigor flags are dropped.
        #[arg(long)]
        force_n: Option<u64>,
        #[arg(short = 'o', long, default_value = "params.json")]
        out: PathBuf,
    },
    /// Check every claim about the family at sampled t.
    Verify {
        params: PathBuf,
        #[arg(short = 't', long = "t", value_delimiter = ',', default_values_t = vec![0.0, 0.5, 1.0])]
        ts: Vec<f64>,
    },
    /// Enclose the Hausdorff measure of K_t, or of an IFS given as JSON.
    Estimate {
        /// Params JSON from `construct`.
        params: Option<PathBuf>,
        #[arg(short = 't', long, default_value_t = 0.0)]
        t: f64,
        /// IFS JSON instead of params.
        #[arg(long, conflicts_with = "params")]
        ifs: Option<PathBuf>,
        #[command(flatten)]
        est: EstimateArgs,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Estimate at grid + 1 equispaced t and write CSV.
    Sweep {
        params: PathBuf,
        #[arg(short = 'c', long)]
        c: f64,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[command(flatten)]
        est: EstimateArgs,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Find t0 with H^s(K_t0) = c by sweep and bisection.
    Search {
        params: PathBuf,
        #[arg(short = 'c', long)]
        c: f64,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        tol_t: f64,
        /// Bisection steps allowed after the sweep.
        #[arg(long, default_value_t = 48)]
        max_steps: u32,
        #[command(flatten)]
        est: EstimateArgs,
        /// Sweep CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Draw the first cylinders of K_t, or a sweep CSV, as SVG.
    Plot {
        params: Option<PathBuf>,
        #[arg(short = 't', long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 1)]
        depth: u32,
        /// Sweep CSV instead of params.
        #[arg(long, conflicts_with = "params")]
        sweep: Option<PathBuf>,
        #[arg(short = 'o', long)]
        out: PathBuf,
    },
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Io = 1,
    Precondition = 2,
    Verification = 3,
    Inconclusive = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::InvalidIfs(_) | Error::DimensionMismatch { .. } | Error::Domain(_) | Error::IterationCap { .. } => {
                Exit::Precondition
            }
            Error::BudgetExceeded { .. } | Error::SscUnknown | Error::Inconclusive(_) => Exit::Inconclusive,
        };
        Self::new(exit, e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::new(Exit::Io, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new(Exit::Io, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    fs::write(path, body).map_err(|e| CliError::new(Exit::Io, format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::new(Exit::Io, format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output") + "\n"
}

fn load_params(path: &Path) -> CliResult<ConstructionParams<f64>> {
    read_json(path)
}

fn estimate_options(g: &GlobalOpts, e: &EstimateArgs) -> CliResult<EstimateOptions<f64>> {
    if !(e.tol > 0.0) {
        return Err(CliError::new(Exit::Precondition, "--tol must be positive"));
    }
    Ok(EstimateOptions {
        search: SearchConfig {
            tol_final: e.tol,
            seed: g.seed,
            budget: g.budget(),
            ..SearchConfig::default()
        },
        fattening_depth: e.depth,
        ..EstimateOptions::default()
    })
}

/// Installs the global thread pool size from [`THREADS_ENV`], if set.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs a parsed command, honouring the wall-clock cap.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let cap = cli.global.time_cap;
    if cap == 0 {
        return dispatch(cli, out);
    }
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut buf = Vec::new();
        let res = dispatch(cli, &mut buf);
        let _ = tx.send((res, buf));
    });
    match rx.recv_timeout(Duration::from_secs(cap)) {
        Ok((res, buf)) => {
            out.write_all(&buf)?;
            res
        }
        Err(_) => Err(CliError::new(Exit::Inconclusive, format!("time cap of {cap} s reached"))),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let g = cli.global;
    match cli.command {
        Command::Construct {
            dim,
            s,
            eps,
            force_n,
            out: path,
        } => cmd_construct(&g, dim, s, eps, force_n, &path, out),
        Command::Verify { params, ts } => cmd_verify(&g, &params, &ts, out),
        Command::Estimate {
            params,
            t,
            ifs,
            est,
            out: path,
        } => cmd_estimate(&g, params.as_deref(), t, ifs.as_deref(), &est, path.as_deref(), out),
        Command::Sweep {
            params,
            c,
            grid,
            est,
            out: path,
        } => cmd_sweep(&g, &params, c, grid, &est, path.as_deref(), out),
        Command::Search {
            params,
            c,
            grid,
            tol_t,
            max_steps,
            est,
            csv,
            out: path,
        } => {
            let opts = SearchOptions {
                grid,
                tol_t,
                max_steps,
                estimate: estimate_options(&g, &est)?,
            };
            cmd_search(&g, &params, c, &opts, csv.as_deref(), path.as_deref(), out)
        }
        Command::Plot {
            params,
            t,
            depth,
            sweep,
            out: path,
        } => cmd_plot(&g, params.as_deref(), t, depth, sweep.as_deref(), &path),
    }
}

#[derive(Serialize)]
struct ConstructOutput<'a> {
    params: &'a ConstructionParams<f64>,
    checks: &'a [hausdorff_forge::construction::CheckOutcome],
}

fn cmd_construct(
    g: &GlobalOpts,
    d: usize,
    s: f64,
    eps: f64,
    force_n: Option<u64>,
    path: &Path,
    out: &mut dyn Write,
) -> CliResult<()> {
    let params = match construct(d, s, eps, force_n) {
        Err(Error::Inconclusive(msg)) => return Err(CliError::new(Exit::Verification, msg)),
        other => other?,
    };
    let report = inequality_report(&params);
    write_file(path, &to_json(&params))?;
    if params.forced {
        eprintln!("warning: n = {} was forced; bounds for this family are not certified", params.n);
    }
    if g.json {
        write!(
            out,
            "{}",
            to_json(&ConstructOutput {
                params: &params,
                checks: &report.checks,
            })
        )?;
    } else {
        writeln!(out, "n = {}", params.n)?;
        writeln!(out, "ell = {}", params.ell)?;
        writeln!(out, "r = {}", params.r)?;
        writeln!(out, "(8n+4) r = {}", (8 * params.n + 4) as f64 * params.r)?;
        writeln!(out, "eps^(1/s) = {}", eps.powf(1.0 / s))?;
        for c in &report.checks {
            writeln!(out, "{:<28} {}", c.name, if c.passed { "pass" } else { "FAIL" })?;
        }
        writeln!(out, "wrote {}", path.display())?;
    }
    if !params.forced && !report.passed() {
        return Err(CliError::new(Exit::Verification, "construction checks failed"));
    }
    Ok(())
}

fn cmd_verify(g: &GlobalOpts, path: &Path, ts: &[f64], out: &mut dyn Write) -> CliResult<()> {
    let params = load_params(path)?;
    if let Some(t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CliError::new(Exit::Precondition, format!("t = {t} must lie in [0, 1]")));
    }
    let report = verify_prop2(&params, ts, &g.budget());
    if g.json {
        write!(out, "{}", to_json(&report))?;
    } else {
        for c in &report.checks {
            let at = c.t.map(|t| format!(" (t = {t})")).unwrap_or_default();
            writeln!(out, "{:<28} {}{at} {}", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail)?;
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::new(Exit::Verification, "verification failed"))
    }
}

fn print_estimate(out: &mut dyn Write, e: &HausdorffEstimate<f64>) -> io::Result<()> {
    let tag = |r: bool| if r { "rigorous" } else { "heuristic" };
    writeln!(out, "lower = {} ({})", e.lower, tag(e.lower_rigorous))?;
    writeln!(out, "upper = {} ({})", e.upper, tag(e.upper_rigorous))?;
    writeln!(
        out,
        "witness: {} with mu in [{}, {}], diameter {}",
        serde_json::to_string(&e.witness.candidate).expect("serializable"),
        e.witness.mu.lo,
        e.witness.mu.hi,
        e.witness.diam
    )
}

fn cmd_estimate(
    g: &GlobalOpts,
    params: Option<&Path>,
    t: f64,
    ifs: Option<&Path>,
    est: &EstimateArgs,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let opts = estimate_options(g, est)?;
    let e = match (params, ifs) {
        (_, Some(f)) => {
            let f: Ifs<f64> = read_json(f)?;
            estimate(&NaturalMeasure::new(f), &opts)?
        }
        (Some(p), None) => {
            let p = load_params(p)?;
            estimate_at(&p, t, &opts)?
        }
        (None, None) => return Err(CliError::new(Exit::Precondition, "need a params file or --ifs")),
    };
    let body = to_json(&e);
    if let Some(path) = path {
        write_file(path, &body)?;
    }
    if g.json {
        write!(out, "{body}")?;
    } else {
        print_estimate(out, &e)?;
    }
    Ok(())
}

fn cmd_sweep(
    g: &GlobalOpts,
    path: &Path,
    c: f64,
    grid: usize,
    est: &EstimateArgs,
    csv_out: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let params = load_params(path)?;
    let opts = estimate_options(g, est)?;
    let points = sweep(&params, c, grid, &opts)?;
    let text = table::sweep_csv(&points)?;
    if let Some(p) = csv_out {
        write_file(p, &text)?;
    }
    if g.json {
        write!(out, "{}", to_json(&points))?;
    } else {
        write!(out, "{text}")?;
    }
    straddling_pair(&points, c)?;
    Ok(())
}

#[derive(Serialize)]
struct SearchOutput<'a> {
    t0: f64,
    estimate: &'a HausdorffEstimate<f64>,
    bracket: (f64, f64),
    steps: u32,
}

fn cmd_search(
    g: &GlobalOpts,
    path: &Path,
    c: f64,
    opts: &SearchOptions<f64>,
    csv_out: Option<&Path>,
    json_out: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let params = load_params(path)?;
    if !(opts.tol_t > 0.0) {
        return Err(CliError::new(Exit::Precondition, "--tol-t must be positive"));
    }
    let res = find_t(&params, c, opts)?;
    if let Some(p) = csv_out {
        write_file(p, &table::sweep_csv(&res.sweep)?)?;
    }
    let summary = SearchOutput {
        t0: res.t0,
        estimate: &res.estimate,
        bracket: res.bracket,
        steps: res.steps,
    };
    let body = to_json(&summary);
    if let Some(p) = json_out {
        write_file(p, &body)?;
    }
    if g.json {
        write!(out, "{body}")?;
    } else {
        writeln!(out, "t0 = {}", res.t0)?;
        writeln!(out, "bracket = [{}, {}] after {} steps", res.bracket.0, res.bracket.1, res.steps)?;
        print_estimate(out, &res.estimate)?;
    }
    Ok(())
}

fn cmd_plot(
    g: &GlobalOpts,
    params: Option<&Path>,
    t: f64,
    depth: u32,
    sweep_csv: Option<&Path>,
    path: &Path,
) -> CliResult<()> {
    let svg = match (params, sweep_csv) {
        (_, Some(csv_path)) => {
            let rows = table::read_sweep_csv(&read_file(csv_path)?)?;
            if rows.is_empty() {
                return Err(CliError::new(Exit::Io, format!("{}: no sweep rows", csv_path.display())));
            }
            plot::sweep_svg(&rows)
        }
        (Some(p), None) => {
            let p = load_params(p)?;
            if p.d > 2 {
                return Err(CliError::new(Exit::Precondition, "attractor plots need d <= 2"));
            }
            let f = hausdorff_forge::construction::ifs_at(&p, t)?;
            let cap = g.node_cap.min(200_000);
            if (f.len() as f64).powi(depth as i32) > cap as f64 {
                return Err(CliError::new(Exit::Precondition, format!("depth {depth} exceeds the plot cap")));
            }
            let v = (t == 1.0).then(|| p.inner_ball());
            plot::attractor_svg(&f, depth, v.as_ref())
        }
        (None, None) => return Err(CliError::new(Exit::Precondition, "need a params file or --sweep")),
    };
    write_file(path, &svg)
}
