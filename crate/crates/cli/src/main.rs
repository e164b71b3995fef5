//! `ahsps`: simulate, analyze, histogram and sweep runs of an asynchronous
//! heralded single-photon source on a two-detector bench.
//!
//! Exit status: 0 success, 1 usage error, 2 data or format error, 3 the
//! solve was degenerate or had to be clamped (results are still printed).

mod manifest;
mod render;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ahsps_core::estimator::Provenance;
use ahsps_core::histogram::{build_histogram, fit_c, normalize};
use ahsps_core::sweep::{run_sweep, SweepAxis};
use ahsps_core::{
    accumulate_counts, analyze, read_raw, simulate_run_with, write_raw, Arms, BenchConfig,
    CountTotals, Execution, RunOptions,
};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use manifest::{verify, ConfigSnapshot, FileDigest, RunManifest};
use render::{AnalysisView, HistogramView, SimulationView, SweepView};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("degenerate solve: {0}")]
    Degenerate(String),
}

impl Failure {
    pub fn data(msg: impl Into<String>) -> Self {
        Failure::Data(msg.into())
    }

    fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Degenerate(_) => 3,
        }
    }
}

impl From<ahsps_core::Error> for Failure {
    fn from(e: ahsps_core::Error) -> Self {
        match e {
            ahsps_core::Error::Singular { .. } => Failure::Degenerate(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, PartialEq, Eq)]
enum Status {
    Ok,
    /// Results were produced but a solve was clamped or degenerate.
    Flagged,
}

#[derive(Parser, Debug)]
#[command(
    name = "ahsps",
    version,
    about = "Heralded single-photon source simulation and counting analysis"
)]
struct Cli {
    /// Log more (-v info, -vv debug); RUST_LOG overrides.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate accepted triggers and write a raw record file.
    Simulate(SimulateArgs),
    /// Solve P(0), P(1), P(2) and g2(0) from a raw file or from count totals.
    Analyze(AnalyzeArgs),
    /// Build the start/stop trigger-separation histogram of a raw file.
    Histogram(HistogramArgs),
    /// Simulate and analyze a pump-power or attenuation sweep.
    Sweep(SweepArgs),
    /// Verify the hashes recorded in a run manifest, optionally re-running it.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Tsv,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Accepted triggers to generate (e.g. 1e7).
    #[arg(long, value_parser = parse_count)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Raw file to write; the manifest goes to <out>.manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Store per-trigger timestamps (ns) in the raw file.
    #[arg(long)]
    timestamps: bool,
    /// Run the generator on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Raw record file.
    #[arg(required_unless_present = "counts")]
    input: Option<PathBuf>,
    /// Count totals instead of a file: n_t,n_a,n_ab or n_t,n_a,n_b,n_ab.
    /// Without n_b only detector A takes part in the solve.
    #[arg(long, conflicts_with = "input", value_parser = parse_counts)]
    counts: Option<CountsArg>,
    /// Bench config; the reference bench when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Also write the rendered report here (with a manifest).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HistogramArgs {
    input: PathBuf,
    /// Bench config for the raw g2 error bar; the reference bench when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = ahsps_core::histogram::DEFAULT_N_MAX)]
    n_max: u32,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Bench config; the reference bench when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pump powers in mW, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required_unless_present = "attenuation", conflicts_with = "attenuation")]
    pump: Vec<f64>,
    /// Heralding-signal attenuation factors, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    attenuation: Vec<f64>,
    /// Accepted triggers per point.
    #[arg(long, value_parser = parse_count)]
    n: u64,
    /// Point k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    manifest: PathBuf,
    /// Re-execute the recorded command in a scratch directory and compare
    /// the output hashes.
    #[arg(long)]
    replay: bool,
}

#[derive(Clone, Copy, Debug)]
struct CountsArg {
    totals: CountTotals,
    arms: Arms,
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a count"))?;
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
        Ok(v as u64)
    } else {
        Err(format!("'{s}' is not a non-negative integer"))
    }
}

fn parse_counts(s: &str) -> Result<CountsArg, String> {
    let v = s
        .split(',')
        .map(|f| parse_count(f.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    match v[..] {
        [n_t, n_a, n_ab] => Ok(CountsArg {
            totals: CountTotals {
                n_t,
                n_a,
                n_b: 0,
                n_ab,
            },
            arms: Arms::AOnly,
        }),
        [n_t, n_a, n_b, n_ab] => Ok(CountsArg {
            totals: CountTotals {
                n_t,
                n_a,
                n_b,
                n_ab,
            },
            arms: Arms::Both,
        }),
        _ => Err(format!(
            "expected n_t,n_a,n_ab or n_t,n_a,n_b,n_ab, got {} values",
            v.len()
        )),
    }
}

/// Where a command sends its console output and whether it records a
/// manifest. Replays run with a sink and no manifest.
struct Env {
    stdout: Box<dyn Write>,
    argv: Vec<String>,
    started_at: String,
    write_manifests: bool,
}

impl Env {
    fn print(&mut self, text: &str) -> Result<(), Failure> {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::data(format!("stdout: {e}")))
    }

    fn manifest(
        &self,
        subcommand: &str,
        config: Option<ConfigSnapshot>,
        seed: Option<u64>,
        inputs: Vec<FileDigest>,
        out: &Path,
    ) -> Result<(), Failure> {
        if !self.write_manifests {
            return Ok(());
        }
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command_line: self.argv.clone(),
            subcommand: subcommand.to_owned(),
            config,
            seed,
            inputs,
            outputs: vec![FileDigest::of(out)?],
            started_at: self.started_at.clone(),
            finished_at: now(),
        };
        m.write(&RunManifest::path_for(out))
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

fn load_config(path: Option<&Path>) -> Result<(BenchConfig, ConfigSnapshot), Failure> {
    let cfg = match path {
        Some(p) => {
            BenchConfig::load(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?
        }
        None => BenchConfig::default(),
    };
    let snap = ConfigSnapshot {
        path: path.map(Path::to_path_buf),
        text: cfg.to_text(),
        sha256: cfg.hash(),
    };
    Ok((cfg, snap))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn read_records(path: &Path) -> Result<ahsps_core::RecordSet, Failure> {
    read_raw(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn cmd_simulate(a: &SimulateArgs, env: &mut Env) -> Result<Status, Failure> {
    if a.format == Format::Tsv {
        return Err(Failure::usage("simulate prints table or json"));
    }
    let (cfg, snap) = load_config(Some(&a.config))?;
    let opts = RunOptions {
        execution: execution(a.sequential),
        timestamps: a.timestamps,
        ..RunOptions::default()
    };
    let sim = simulate_run_with(&cfg.source, &cfg.det_a, &cfg.det_b, a.n, a.seed, &opts)?;
    write_raw(&sim.records, &a.out)?;
    env.manifest("simulate", Some(snap), Some(a.seed), vec![], &a.out)?;

    let out = a.out.display().to_string();
    let view = SimulationView {
        output: &out,
        summary: &sim.summary,
        discard_fraction: sim.summary.discard_fraction(),
    };
    env.print(&match a.format {
        Format::Json => view.json(),
        _ => view.table(),
    })?;
    Ok(Status::Ok)
}

fn cmd_analyze(a: &AnalyzeArgs, env: &mut Env) -> Result<Status, Failure> {
    if a.format == Format::Tsv {
        return Err(Failure::usage("analyze prints table or json"));
    }
    let (cfg, snap) = load_config(a.config.as_deref())?;
    let (totals, arms, input, inputs) = match (&a.input, &a.counts) {
        (Some(path), None) => {
            let records = read_records(path)?;
            let totals = accumulate_counts(&records, Execution::default());
            (
                totals,
                Arms::Both,
                Some(path.display().to_string()),
                vec![FileDigest::of(path)?],
            )
        }
        (None, Some(c)) => (c.totals, c.arms, None, vec![]),
        _ => return Err(Failure::usage("give either a raw file or --counts")),
    };
    let report = analyze(
        &totals,
        arms,
        &cfg.det_a,
        &cfg.det_b,
        Provenance {
            input: input.clone(),
            config_hash: Some(snap.sha256.clone()),
        },
    )?;
    let view = AnalysisView {
        input: input.as_deref(),
        report: &report,
    };
    let text = match a.format {
        Format::Json => view.json(),
        _ => view.table(),
    };
    if let Some(out) = &a.out {
        write_file(out, &text)?;
        env.manifest("analyze", Some(snap), None, inputs, out)?;
    }
    env.print(&text)?;
    Ok(if report.clamped {
        Status::Flagged
    } else {
        Status::Ok
    })
}

fn cmd_histogram(a: &HistogramArgs, env: &mut Env) -> Result<Status, Failure> {
    let (cfg, snap) = load_config(a.config.as_deref())?;
    let records = read_records(&a.input)?;
    let h = build_histogram(records.clicks(), a.n_max)?;
    let totals = accumulate_counts(&records, Execution::default());
    let measured = ahsps_core::measured_rates(&totals)?;
    let (p_a, p_b) = (measured.p_a, measured.p_b);
    let fit = fit_c(&h, p_a, p_b)?;
    let norm = normalize(&h, p_a, p_b, fit.c)?;
    let report = analyze(
        &totals,
        Arms::Both,
        &cfg.det_a,
        &cfg.det_b,
        Provenance::default(),
    )?;
    let input = a.input.display().to_string();
    let view = HistogramView {
        input: &input,
        p_a,
        p_b,
        histogram: &h,
        fit: &fit,
        normalized: &norm,
        g2_raw: report.g2_raw,
    };
    let text = match a.format {
        Format::Json => view.json(),
        Format::Tsv => view.tsv(),
        Format::Table => view.table(),
    };
    if let Some(out) = &a.out {
        write_file(out, &text)?;
        env.manifest(
            "histogram",
            Some(snap),
            None,
            vec![FileDigest::of(&a.input)?],
            out,
        )?;
    }
    env.print(&text)?;
    Ok(Status::Ok)
}

fn cmd_sweep(a: &SweepArgs, env: &mut Env) -> Result<Status, Failure> {
    let (cfg, snap) = load_config(a.config.as_deref())?;
    let axis = if a.pump.is_empty() {
        SweepAxis::Attenuation(a.attenuation.clone())
    } else {
        SweepAxis::Pump(a.pump.iter().map(|mw| mw * 1e-3).collect())
    };
    let res = run_sweep(&cfg, &axis, a.n, a.seed, &RunOptions::default())?;
    let view = SweepView { result: &res };
    let text = match a.format {
        Format::Json => view.json(),
        Format::Tsv => view.tsv(),
        Format::Table => view.table(),
    };
    if let Some(out) = &a.out {
        write_file(out, &text)?;
        env.manifest("sweep", Some(snap), Some(a.seed), vec![], out)?;
    }
    env.print(&text)?;
    let flagged = res.p2_fit.degenerate || res.points.iter().any(|p| p.report.clamped);
    Ok(if flagged { Status::Flagged } else { Status::Ok })
}

fn cmd_report(a: &ReportArgs, env: &mut Env) -> Result<Status, Failure> {
    let m = RunManifest::load(&a.manifest)?;
    let mut s = String::new();
    s.push_str(&format!("command        {}\n", m.command_line.join(" ")));
    s.push_str(&format!("tool           {} {}\n", m.tool, m.version));
    s.push_str(&format!(
        "run            {} .. {}\n",
        m.started_at, m.finished_at
    ));
    if let Some(seed) = m.seed {
        s.push_str(&format!("seed           {seed}\n"));
    }
    if let Some(c) = &m.config {
        s.push_str(&format!("config sha256  {}\n", c.sha256));
    }
    let mut bad = 0;
    for (role, files) in [("input", &m.inputs), ("output", &m.outputs)] {
        let mismatched = verify(files);
        for f in files.iter() {
            match mismatched.iter().find(|x| x.path == f.path) {
                None => s.push_str(&format!(
                    "{role:<7} ok    {}  {}\n",
                    f.sha256,
                    f.path.display()
                )),
                Some(x) => {
                    bad += 1;
                    s.push_str(&format!(
                        "{role:<7} FAIL  {}  {} (now {})\n",
                        x.expected,
                        x.path.display(),
                        x.found.as_deref().unwrap_or("unreadable")
                    ));
                }
            }
        }
    }
    env.print(&s)?;
    if bad > 0 {
        return Err(Failure::data(format!(
            "{bad} file(s) do not match the manifest"
        )));
    }
    if a.replay {
        replay(&m, env)?;
    }
    Ok(Status::Ok)
}

/// Re-runs a manifest's command with its config snapshot, writing into a
/// scratch directory, and compares the output hashes.
fn replay(m: &RunManifest, env: &mut Env) -> Result<(), Failure> {
    let scratch =
        tempfile::tempdir().map_err(|e| Failure::data(format!("scratch directory: {e}")))?;
    let cli = Cli::try_parse_from(&m.command_line)
        .map_err(|e| Failure::data(format!("manifest command line does not parse: {e}")))?;
    let snapshot = scratch.path().join("config.txt");
    if let Some(c) = &m.config {
        write_file(&snapshot, &c.text)?;
    }
    let relocate = |p: &Path| {
        scratch
            .path()
            .join(p.file_name().unwrap_or_else(|| "out".as_ref()))
    };
    let config = m.config.as_ref().map(|_| snapshot.clone());
    let mut command = cli.command;
    let out = match &mut command {
        Command::Simulate(a) => {
            a.config = config.expect("simulate manifests carry a config");
            a.out = relocate(&a.out);
            a.out.clone()
        }
        Command::Analyze(a) => {
            a.config = config;
            a.out = a.out.as_deref().map(relocate);
            a.out
                .clone()
                .ok_or_else(|| Failure::data("recorded command has no --out"))?
        }
        Command::Histogram(a) => {
            a.config = config;
            a.out = a.out.as_deref().map(relocate);
            a.out
                .clone()
                .ok_or_else(|| Failure::data("recorded command has no --out"))?
        }
        Command::Sweep(a) => {
            a.config = config;
            a.out = a.out.as_deref().map(relocate);
            a.out
                .clone()
                .ok_or_else(|| Failure::data("recorded command has no --out"))?
        }
        Command::Report(_) => return Err(Failure::data("report runs are not replayable")),
    };
    let mut quiet = Env {
        stdout: Box::new(io::sink()),
        argv: m.command_line.clone(),
        started_at: now(),
        write_manifests: false,
    };
    dispatch(&command, &mut quiet)?;
    let fresh = FileDigest::of(&out)?;
    let recorded = &m.outputs[0];
    if fresh.sha256 != recorded.sha256 {
        env.print(&format!(
            "replay  FAIL  {}  {}\n",
            fresh.sha256,
            recorded.path.display()
        ))?;
        return Err(Failure::data(
            "replayed output differs from the recorded hash",
        ));
    }
    env.print(&format!(
        "replay  ok    {}  {}\n",
        fresh.sha256,
        recorded.path.display()
    ))
}

fn dispatch(command: &Command, env: &mut Env) -> Result<Status, Failure> {
    match command {
        Command::Simulate(a) => cmd_simulate(a, env),
        Command::Analyze(a) => cmd_analyze(a, env),
        Command::Histogram(a) => cmd_histogram(a, env),
        Command::Sweep(a) => cmd_sweep(a, env),
        Command::Report(a) => cmd_report(a, env),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut env = Env {
        stdout: Box::new(io::stdout().lock()),
        argv,
        started_at: now(),
        write_manifests: true,
    };
    match dispatch(&cli.command, &mut env) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Flagged) => {
            eprintln!("ahsps: solve clamped or degenerate; see warnings");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("ahsps: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
