//! Experiment runner for the low-rank Poisson and Stokes solvers.
//!
//! Every experiment produces a [`Table`] that is written as CSV (to `--out`
//! or stdout) and optionally as a markdown table. Sine and cavity runs can
//! also dump their GMRES traces.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use lrstokes::experiments::{cavity_problem, relative_pressure_error, run_sine, solve, Mode, SolveRecord};
use lrstokes::operators::Operators;
use lrstokes::poisson::{bench_inverse, solve_poisson_cross, synthetic_frequency_rhs};
use lrstokes::refsolver::{
    dense_poisson, schur_spectrum, SpectrumSummary, DENSE_POISSON_MAX_N, DENSE_STOKES_MAX_N, SPECTRUM_MAX_N,
};
use lrstokes::stokes::IterationRecord;
use lrstokes::{GmresConfig, TruncationPolicy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

pub const DEFAULT_EPS: f64 = 5e-9;
pub const SINE_HEADER: [&str; 6] = ["n", "mode", "time_s", "iters", "max_rank", "rel_err_p"];
pub const TRACE_HEADER: [&str; 4] = ["iter", "residual", "krylov_rank", "matvec_eps"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Sine,
    Cavity,
    Poisson,
    BenchInverse,
    Spectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(alias = "lr")]
    Lowrank,
    Full,
    Both,
}

impl ModeArg {
    fn modes(self) -> &'static [Mode] {
        match self {
            ModeArg::Lowrank => &[Mode::LowRank],
            ModeArg::Full => &[Mode::Full],
            ModeArg::Both => &[Mode::LowRank, Mode::Full],
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lrstokes", version, about = "Low-rank Poisson and Stokes experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// Grid sizes, comma separated. Defaults depend on the experiment.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Truncation threshold.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-iteration GMRES trace (sine and cavity).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Markdown table output.
    #[arg(long)]
    pub markdown: Option<PathBuf>,
    /// Input rank for `poisson` and `bench-inverse`.
    #[arg(long, default_value_t = 30)]
    pub rank: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Run the grid sizes on separate threads.
    #[arg(long)]
    pub parallel: bool,
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n_list: Vec<usize>,
    pub eps: f64,
    pub modes: Vec<Mode>,
    pub seed: u64,
    pub rank: usize,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub markdown: Option<PathBuf>,
    pub parallel: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] lrstokes::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn default_n(experiment: Experiment) -> Vec<usize> {
    match experiment {
        Experiment::Sine => vec![64, 128, 256],
        Experiment::Cavity | Experiment::Poisson => vec![256],
        Experiment::BenchInverse => vec![1024],
        Experiment::Spectrum => vec![8, 12, 16],
    }
}

impl TryFrom<Cli> for RunConfig {
    type Error = RunError;

    fn try_from(cli: Cli) -> Result<Self, RunError> {
        let usage = |m: String| Err(RunError::Usage(m));
        let n_list = if cli.n.is_empty() { default_n(cli.experiment) } else { cli.n };
        for &n in &n_list {
            // The spectrum is a dense n²×n² eigenproblem and is also run on
            // non-power-of-two sizes.
            let ok = match cli.experiment {
                Experiment::Spectrum => (8..=SPECTRUM_MAX_N).contains(&n),
                _ => n >= 8 && n.is_power_of_two(),
            };
            if !ok {
                return usage(match cli.experiment {
                    Experiment::Spectrum => format!("spectrum needs 8 ≤ n ≤ {SPECTRUM_MAX_N}, got {n}"),
                    _ => format!("n must be a power of two ≥ 8, got {n}"),
                });
            }
        }
        if !(cli.eps > 0.0 && cli.eps < 1e-2) {
            return usage(format!("eps must lie in (0, 1e-2), got {}", cli.eps));
        }
        let modes = cli.mode.modes().to_vec();
        let full_max = match cli.experiment {
            Experiment::Sine | Experiment::Cavity => DENSE_STOKES_MAX_N,
            _ => DENSE_POISSON_MAX_N,
        };
        if modes.contains(&Mode::Full) {
            if let Some(&n) = n_list.iter().find(|&&n| n > full_max) {
                return usage(format!("full mode is limited to n ≤ {full_max}, got {n}"));
            }
        }
        if cli.rank == 0 {
            return usage("rank must be positive".into());
        }
        if cli.max_iter == 0 {
            return usage("max-iter must be positive".into());
        }
        Ok(Self {
            experiment: cli.experiment,
            n_list,
            eps: cli.eps,
            modes,
            seed: cli.seed,
            rank: cli.rank,
            max_iter: cli.max_iter,
            out: cli.out,
            trace: cli.trace,
            markdown: cli.markdown,
            parallel: cli.parallel,
        })
    }
}

impl RunConfig {
    pub fn gmres(&self) -> GmresConfig {
        GmresConfig { max_iter: self.max_iter, ..GmresConfig::for_eps(self.eps) }
    }
}

/// Rows of one experiment, formatted as strings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_markdown(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "| {} |", self.header.join(" | "))?;
        writeln!(w, "|{}", "---|".repeat(self.header.len()))?;
        for row in &self.rows {
            writeln!(w, "| {} |", row.join(" | "))?;
        }
        Ok(())
    }
}

pub fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

/// What a run produced, besides the files.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub table: Table,
    /// Labels of the runs that did not converge.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

/// Output of one grid size: table rows, traces and failure labels.
#[derive(Default)]
struct Chunk {
    rows: Vec<Vec<String>>,
    traces: Vec<(String, Vec<IterationRecord>)>,
    failures: Vec<String>,
}

fn stokes_row(rec: &SolveRecord, err: f64) -> Vec<String> {
    vec![
        rec.n.to_string(),
        rec.mode.to_string(),
        sci(rec.elapsed.as_secs_f64()),
        rec.iterations.to_string(),
        rec.max_rank.to_string(),
        sci(err),
    ]
}

fn record_stokes(chunk: &mut Chunk, rec: &SolveRecord, err: f64) {
    let label = format!("n{}_{}", rec.n, rec.mode);
    if !rec.converged {
        chunk.failures.push(format!("GMRES {label}"));
    }
    chunk.rows.push(stokes_row(rec, err));
    chunk.traces.push((label, rec.report.iterations.clone()));
}

fn run_n(cfg: &RunConfig, n: usize) -> Result<Chunk, RunError> {
    let mut chunk = Chunk::default();
    match cfg.experiment {
        Experiment::Sine => {
            for &mode in &cfg.modes {
                let (rec, err) = run_sine(n, mode, &cfg.gmres())?;
                record_stokes(&mut chunk, &rec, err);
            }
        }
        Experiment::Cavity => {
            let prob = cavity_problem(n)?;
            let recs = cfg.modes.iter().map(|&m| solve(&prob, m, &cfg.gmres())).collect::<Result<Vec<_>, _>>()?;
            // The LR row carries the difference to the full solution; with a
            // single mode there is nothing to compare against.
            let diff = match recs.as_slice() {
                [a, b] => relative_pressure_error(&a.pressure, &b.pressure),
                _ => f64::NAN,
            };
            for rec in &recs {
                let err = if rec.mode == Mode::Full && recs.len() == 2 { 0.0 } else { diff };
                record_stokes(&mut chunk, rec, err);
            }
        }
        Experiment::Poisson => {
            let ops = Operators::with_n(n)?;
            let g = synthetic_frequency_rhs(n - 1, cfg.rank, cfg.seed);
            let gd = g.to_dense();
            let start = Instant::now();
            let dense = dense_poisson(&ops, &gd)?;
            let t_dense = start.elapsed();
            for &mode in &cfg.modes {
                let row = match mode {
                    Mode::LowRank => {
                        let (f, stats) = solve_poisson_cross(&ops, &g, &TruncationPolicy::relative(cfg.eps))?;
                        if !stats.converged {
                            chunk.failures.push(format!("poisson n{n}"));
                        }
                        let diff = (f.to_dense() - &dense).norm() / dense.norm();
                        vec![
                            sci(stats.elapsed.as_secs_f64()),
                            stats.rank_in.to_string(),
                            stats.rank_out.to_string(),
                            sci(stats.residual),
                            sci(diff),
                        ]
                    }
                    Mode::Full => {
                        let res = (ops.apply_laplace_dense(&dense) - &gd).norm() / gd.norm();
                        vec![sci(t_dense.as_secs_f64()), g.rank().to_string(), (n - 1).to_string(), sci(res), sci(0.0)]
                    }
                };
                let mut full = vec![n.to_string(), mode.to_string()];
                full.extend(row);
                chunk.rows.push(full);
            }
        }
        Experiment::BenchInverse => {
            let r = bench_inverse(n, cfg.rank, cfg.eps, cfg.seed)?;
            chunk.rows.push(vec![
                r.n.to_string(),
                r.rank_in.to_string(),
                sci(r.eps),
                r.expsum_terms.to_string(),
                sci(r.time_cross.as_secs_f64()),
                sci(r.time_expsum.as_secs_f64()),
                sci(r.speedup()),
                r.rank_cross.to_string(),
                r.rank_expsum.to_string(),
                sci(r.err_cross),
                sci(r.err_expsum),
            ]);
        }
        Experiment::Spectrum => {
            let eig = schur_spectrum(n)?;
            let s = SpectrumSummary::from_eigenvalues(n, &eig, 1e-10);
            chunk.rows.push(vec![
                n.to_string(),
                eig.len().to_string(),
                s.zeros.to_string(),
                s.ones.to_string(),
                sci(s.min_nonzero),
                sci(s.max),
            ]);
        }
    }
    Ok(chunk)
}

fn header(experiment: Experiment) -> Table {
    Table::new(match experiment {
        Experiment::Sine | Experiment::Cavity => &SINE_HEADER,
        Experiment::Poisson => &["n", "mode", "time_s", "rank_in", "rank_out", "residual", "rel_diff"],
        Experiment::BenchInverse => &[
            "n",
            "rank_in",
            "eps",
            "expsum_terms",
            "time_cross_s",
            "time_expsum_s",
            "speedup",
            "rank_cross",
            "rank_expsum",
            "err_cross",
            "err_expsum",
        ],
        Experiment::Spectrum => &["n", "size", "zeros", "ones", "min_nonzero", "max"],
    })
}

/// Trace file for one run: the path itself for a single run, otherwise the
/// run label is appended to the file stem.
pub fn trace_path(base: &Path, label: &str, single: bool) -> PathBuf {
    if single {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{label}"),
    };
    base.with_file_name(name)
}

fn write_trace(path: &Path, records: &[IterationRecord]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", TRACE_HEADER.join(","))?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.iter, sci(r.residual), r.krylov_rank, sci(r.matvec_eps))?;
    }
    w.flush()
}

/// Streams CSV rows as they arrive so that completed rows survive a later
/// failure.
struct CsvSink {
    w: Box<dyn Write>,
}

impl CsvSink {
    fn open(path: Option<&Path>, header: &[String]) -> io::Result<Self> {
        let w: Box<dyn Write> = match path {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout()),
        };
        let mut sink = Self { w };
        writeln!(sink.w, "{}", header.join(","))?;
        sink.w.flush()?;
        Ok(sink)
    }

    fn push(&mut self, rows: &[Vec<String>]) -> io::Result<()> {
        for row in rows {
            writeln!(self.w, "{}", row.join(","))?;
        }
        self.w.flush()
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut table = header(cfg.experiment);
    let mut sink = CsvSink::open(cfg.out.as_deref(), &table.header)?;
    let runs = cfg.n_list.len() * if matches!(cfg.experiment, Experiment::Sine | Experiment::Cavity) { cfg.modes.len() } else { 1 };
    let mut failures = Vec::new();

    let mut absorb = |chunk: Chunk, table: &mut Table| -> Result<(), RunError> {
        sink.push(&chunk.rows)?;
        if let Some(base) = &cfg.trace {
            for (label, recs) in &chunk.traces {
                write_trace(&trace_path(base, label, runs == 1), recs)?;
            }
        }
        table.rows.extend(chunk.rows);
        failures.extend(chunk.failures);
        Ok(())
    };

    if cfg.parallel && cfg.n_list.len() > 1 {
        let results: Vec<Result<Chunk, RunError>> = std::thread::scope(|s| {
            let handles: Vec<_> = cfg.n_list.iter().map(|&n| s.spawn(move || run_n(cfg, n))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for r in results {
            absorb(r?, &mut table)?;
        }
    } else {
        for &n in &cfg.n_list {
            absorb(run_n(cfg, n)?, &mut table)?;
        }
    }

    if let Some(path) = &cfg.markdown {
        let mut w = BufWriter::new(File::create(path)?);
        table.write_markdown(&mut w)?;
        w.flush()?;
    }
    Ok(Outcome { table, failures })
}

/// Parses `args` (program name first), runs and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match RunConfig::try_from(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("not converged: {f}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
