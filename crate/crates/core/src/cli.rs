//! The `splicer` command line: `gen`, `verify`, `stats` and `approx`.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage, parse or
//! I/O error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::connectivity::{edge_connectivity, ConnectivityCertificate};
use crate::disjoint::{generate_k_connected, packing_possible, Generated, RepairLog};
use crate::graph::{Edge, SimpleGraph};
use crate::sampler::{RngStream, SamplerKind};
use crate::stats::{
    asymptotics, enumerate_moments, render_table, Asymptotics, McRun, StatReport, Statistic,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "splicer",
    version,
    about = "k-edge-connected graphs from unions of random spanning trees of K_n"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a k-edge-connected graph on n vertices.
    Gen(GenArgs),
    /// Certify the edge connectivity of an edge-list file.
    Verify(VerifyArgs),
    /// Compare exact edge statistics with Monte Carlo estimates.
    Stats(StatsArgs),
    /// Report the approximation ratio of a generated graph.
    Approx(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Edgelist,
    Json,
    Dot,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long = "n")]
    pub n: usize,
    #[arg(long = "k")]
    pub k: usize,
    /// Seed for all randomness; drawn from entropy and echoed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "prufer")]
    pub sampler: SamplerKind,
    #[arg(long, value_enum, default_value = "edgelist")]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub path: PathBuf,
    /// Required edge connectivity.
    #[arg(long = "k")]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Cross-check every closed form against full enumeration (small n, k).
    #[arg(long)]
    pub oracle: bool,
    /// Relative deviation threshold for the concentration row.
    #[arg(long = "s", default_value_t = 2.0)]
    pub s: f64,
}

/// Resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub n: usize,
    pub k: usize,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub trials: usize,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    fn from_common(subcommand: &str, c: &CommonArgs, trials: usize) -> Self {
        RunConfig {
            subcommand: subcommand.to_string(),
            n: c.n,
            k: c.k,
            sampler: c.sampler,
            seed: c.seed.unwrap_or_else(rand::random),
            trials,
            output_format: c.format,
            output_path: c.out.clone(),
        }
    }
}

#[derive(Debug)]
pub struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError(msg.into())
}

/// JSON rendering of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub m: usize,
    pub edges: Vec<Edge>,
}

impl GraphJson {
    pub fn from_graph(g: &SimpleGraph) -> Self {
        GraphJson {
            n: g.n(),
            m: g.edge_count(),
            edges: g.edges().collect(),
        }
    }

    pub fn to_graph(&self) -> Result<SimpleGraph, crate::graph::GraphError> {
        SimpleGraph::from_edges(self.n, self.edges.iter().copied())
    }
}

pub fn render_graph(g: &SimpleGraph, format: OutputFormat) -> String {
    match format {
        OutputFormat::Edgelist => g.to_edge_list(),
        OutputFormat::Dot => g.to_dot(),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&GraphJson::from_graph(g)).unwrap();
            s.push('\n');
            s
        }
    }
}

/// Reads a graph written in any of the output formats except DOT.
pub fn read_graph(path: &Path) -> Result<SimpleGraph, CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let parsed: GraphJson = serde_json::from_str(&text)?;
        return Ok(parsed.to_graph()?);
    }
    Ok(SimpleGraph::parse_edge_list(&text)?)
}

/// Sidecar written next to every generated graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSummary {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub edges: usize,
    pub fallbacks: usize,
    pub lambda: usize,
    /// `edges / ceil(kn/2)`, an upper bound on the ratio to the optimum.
    pub ratio_bound: f64,
    pub certificate: ConnectivityCertificate,
    pub repair: RepairLog,
}

/// `ceil(kn/2)`: every vertex of a `k`-edge-connected graph has degree `>= k`.
pub fn opt_lower_bound(n: usize, k: usize) -> usize {
    (k * n).div_ceil(2)
}

fn generate(cfg: &RunConfig) -> Result<(Generated, GenSummary), CliError> {
    if cfg.n < 2 {
        return Err(usage(format!("--n must be at least 2, got {}", cfg.n)));
    }
    if cfg.k < 1 {
        return Err(usage("--k must be at least 1"));
    }
    let generated = generate_k_connected(cfg.n, cfg.k, cfg.sampler, &RngStream::new(cfg.seed, 0))?;
    let certificate = edge_connectivity(&generated.graph)?;
    let edges = generated.graph.edge_count();
    let summary = GenSummary {
        n: cfg.n,
        k: cfg.k,
        seed: cfg.seed,
        sampler: cfg.sampler,
        edges,
        fallbacks: generated.log.fallbacks,
        lambda: certificate.lambda,
        ratio_bound: edges as f64 / opt_lower_bound(cfg.n, cfg.k) as f64,
        certificate,
        repair: generated.log.clone(),
    };
    Ok((generated, summary))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_output(path: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Into::into),
    }
}

fn warn_packing(cfg: &RunConfig, stderr: &mut dyn Write) -> io::Result<()> {
    if !packing_possible(cfg.n, cfg.k) {
        writeln!(
            stderr,
            "warning: K_{} cannot hold {} edge-disjoint spanning trees; expect fallbacks",
            cfg.n, cfg.k
        )?;
    }
    Ok(())
}

/// Writes the graph (to `--out` or stdout) and the JSON sidecar (to
/// `<out>.meta.json`, or stderr when writing the graph to stdout).
pub fn cmd_gen(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    warn_packing(cfg, stderr)?;
    let (generated, summary) = generate(cfg)?;
    write_output(&cfg.output_path, &render_graph(&generated.graph, cfg.output_format), stdout)?;
    let meta = serde_json::to_string_pretty(&summary)? + "\n";
    match &cfg.output_path {
        Some(p) => fs::write(sidecar_path(p), meta)?,
        None => stderr.write_all(meta.as_bytes())?,
    }
    if summary.lambda < cfg.k {
        writeln!(
            stderr,
            "edge connectivity {} < k = {} ({} fallbacks)",
            summary.lambda, cfg.k, summary.fallbacks
        )?;
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(path: &Path, expected_k: usize, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let g = read_graph(path)?;
    let cert = edge_connectivity(&g)?;
    writeln!(stdout, "{}", serde_json::to_string(&cert)?)?;
    Ok(if cert.lambda >= expected_k {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub edges: usize,
    pub lower_bound: usize,
    pub ratio: f64,
    pub cap: f64,
    pub lambda: usize,
    pub fallbacks: usize,
    pub pass: bool,
}

pub fn cmd_approx(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    if cfg.n < 3 {
        return Err(usage(format!("approx needs n >= 3, got {}", cfg.n)));
    }
    warn_packing(cfg, stderr)?;
    let (generated, summary) = generate(cfg)?;
    if cfg.output_path.is_some() {
        write_output(&cfg.output_path, &render_graph(&generated.graph, cfg.output_format), stdout)?;
    }
    let lower_bound = opt_lower_bound(cfg.n, cfg.k);
    // edges / lb <= 2(n-1)/n, compared in integers
    let pass = summary.edges * cfg.n <= 2 * (cfg.n - 1) * lower_bound;
    let report = ApproxReport {
        n: cfg.n,
        k: cfg.k,
        seed: cfg.seed,
        sampler: cfg.sampler,
        edges: summary.edges,
        lower_bound,
        ratio: summary.edges as f64 / lower_bound as f64,
        cap: 2.0 * (cfg.n - 1) as f64 / cfg.n as f64,
        lambda: summary.lambda,
        fallbacks: summary.fallbacks,
        pass,
    };
    if cfg.output_format == OutputFormat::Json {
        writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        writeln!(stdout, "n={} k={} seed={} sampler={}", report.n, report.k, report.seed, report.sampler)?;
        writeln!(stdout, "edges        {}", report.edges)?;
        writeln!(stdout, "lower bound  {}", report.lower_bound)?;
        writeln!(stdout, "ratio        {:.6}", report.ratio)?;
        writeln!(stdout, "cap 2(n-1)/n {:.6}", report.cap)?;
        writeln!(stdout, "lambda       {} (fallbacks {})", report.lambda, report.fallbacks)?;
        writeln!(stdout, "{}", if pass { "PASS" } else { "FAIL" })?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
}

/// Closed form against full enumeration, compared as rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub quantity: String,
    pub exact: String,
    pub enumerated: String,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsOutput {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub trials: usize,
    pub rows: Vec<StatReport>,
    pub oracle: Option<Vec<OracleCheck>>,
    pub asymptotics: Asymptotics,
    pub pass: bool,
}

fn stat_rows(n: usize, k: usize) -> Vec<Statistic> {
    let mut rows = vec![Statistic::EdgeProbability];
    if n >= 3 {
        rows.push(Statistic::PairProbability { adjacent: true });
    }
    if n >= 4 {
        rows.push(Statistic::PairProbability { adjacent: false });
    }
    rows.extend((1..=k).map(|ell| Statistic::ExpectedCommon { ell }));
    rows.extend([Statistic::ExpectedSk, Statistic::ExpectedM, Statistic::VarM]);
    rows
}

fn oracle_rows(n: usize, k: usize) -> Vec<Statistic> {
    let mut rows = stat_rows(n, k);
    rows.extend([Statistic::ExpectedRe, Statistic::VarRe]);
    if n >= 3 {
        rows.push(Statistic::CovRe { adjacent: true });
    }
    if n >= 4 {
        rows.push(Statistic::CovRe { adjacent: false });
    }
    rows
}

pub fn run_stats(cfg: &RunConfig, oracle: bool, s: f64) -> Result<StatsOutput, CliError> {
    if cfg.trials < 100 {
        return Err(usage(format!("--trials must be at least 100, got {}", cfg.trials)));
    }
    if cfg.n < 2 || cfg.k < 1 {
        return Err(usage("need n >= 2 and k >= 1"));
    }
    let oracle = if oracle {
        let moments = enumerate_moments(cfg.n, cfg.k)?;
        let checks = oracle_rows(cfg.n, cfg.k)
            .into_iter()
            .map(|stat| {
                let exact = stat.exact(cfg.n, cfg.k)?;
                let enumerated = moments.get(stat)?;
                Ok(OracleCheck {
                    quantity: stat.name(),
                    equal: exact == enumerated,
                    exact: exact.to_string(),
                    enumerated: enumerated.to_string(),
                })
            })
            .collect::<Result<Vec<_>, crate::stats::StatsError>>()?;
        Some(checks)
    } else {
        None
    };
    let run = McRun::simulate(cfg.n, cfg.k, cfg.trials, cfg.sampler, &RngStream::new(cfg.seed, 0))?;
    let mut rows = stat_rows(cfg.n, cfg.k)
        .into_iter()
        .map(|stat| run.report(stat))
        .collect::<Result<Vec<_>, _>>()?;
    if cfg.k >= 2 {
        rows.push(run.concentration(s)?.to_stat_report());
    }
    let pass = rows.iter().all(|r| r.pass)
        && oracle.as_ref().map_or(true, |c| c.iter().all(|c| c.equal));
    Ok(StatsOutput {
        n: cfg.n,
        k: cfg.k,
        seed: cfg.seed,
        sampler: cfg.sampler,
        trials: cfg.trials,
        rows,
        oracle,
        asymptotics: asymptotics(cfg.n, cfg.k),
        pass,
    })
}

pub fn cmd_stats(cfg: &RunConfig, oracle: bool, s: f64, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let output = run_stats(cfg, oracle, s)?;
    let text = if cfg.output_format == OutputFormat::Json {
        serde_json::to_string_pretty(&output)? + "\n"
    } else {
        let mut text = format!(
            "n={} k={} seed={} sampler={} trials={}\n",
            output.n, output.k, output.seed, output.sampler, output.trials
        );
        text.push_str(&render_table(&output.rows));
        if let Some(checks) = &output.oracle {
            text.push_str("\nenumeration cross-check\n");
            for c in checks {
                text.push_str(&format!(
                    "{:<26} exact {:>14}  enumerated {:>14}  {}\n",
                    c.quantity,
                    c.exact,
                    c.enumerated,
                    if c.equal { "EQUAL" } else { "DIFFER" }
                ));
            }
        }
        text
    };
    write_output(&cfg.output_path, &text, stdout)?;
    Ok(if output.pass { EXIT_OK } else { EXIT_VIOLATION })
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(&RunConfig::from_common("gen", &a.common, 0), stdout, stderr),
        Command::Approx(a) => cmd_approx(&RunConfig::from_common("approx", &a.common, 0), stdout, stderr),
        Command::Verify(a) => cmd_verify(&a.path, a.k, stdout),
        Command::Stats(a) => cmd_stats(
            &RunConfig::from_common("stats", &a.common, a.trials),
            a.oracle,
            a.s,
            stdout,
        ),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}
