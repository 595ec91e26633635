//! `solve`, `study` and `verify`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use awbem::analysis::{default_window, fit_rate, RateFit};
use awbem::discretize::EntryCache;
use awbem::solver::{solve_with_observer, write_history, HistoryRecord, Mode, RhsApprox, SolveResult, Termination};
use awbem::surface::Surface;

use crate::plot::{loglog_svg, Series};
use crate::run_spec::{RunSpec, UsageError};
use crate::verify::{format_table, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CommandError {
    Usage(UsageError),
    Runtime(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => EXIT_USAGE,
            CommandError::Runtime(_) => EXIT_ERROR,
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Usage(e) => write!(f, "usage: {e}"),
            CommandError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<UsageError> for CommandError {
    fn from(e: UsageError) -> Self {
        CommandError::Usage(e)
    }
}

impl From<awbem::Error> for CommandError {
    fn from(e: awbem::Error) -> Self {
        CommandError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::Runtime(e.to_string())
    }
}

type CmdResult<T> = Result<T, CommandError>;

/// Runs `f` on a pool with the requested number of threads, or on the
/// global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CmdResult<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CommandError::Runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CommandError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn open_cache(surface: &Surface, spec: &RunSpec, out: &mut dyn Write) -> CmdResult<EntryCache> {
    let cache = EntryCache::new(surface, spec.solver.quad);
    if let Some(path) = spec.cache.as_deref().filter(|p| p.exists()) {
        let file = File::open(path)?;
        let n = cache.load(BufReader::new(file))?;
        writeln!(out, "loaded {n} cached blocks from {}", path.display())?;
    }
    Ok(cache)
}

fn save_cache(cache: &EntryCache, spec: &RunSpec) -> CmdResult<()> {
    if let Some(path) = &spec.cache {
        let mut w = create(path)?;
        cache.dump(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn run_mode(surface: &Surface, cache: &EntryCache, spec: &RunSpec, mode: Mode, out: &mut dyn Write) -> CmdResult<SolveResult> {
    let mut cfg = spec.solver;
    cfg.mode = mode;
    let mut rhs = RhsApprox::new(surface, spec.rhs.build(), cfg.quad, cfg.resolve_level)?;
    let timing = !spec.no_timing;
    let result = solve_with_observer(surface, cache, &mut rhs, &cfg, |r: &HistoryRecord| {
        let t = if timing { format!(" time {:.1}s", r.wall_time_s) } else { String::new() };
        // Progress lines are best effort.
        let _ = writeln!(
            out,
            "{} step {} dofs {} residual {:.4e} delta {:.3e}{t}",
            mode.name(),
            r.step,
            r.dofs,
            r.residual,
            r.delta
        );
    })?;
    writeln!(out, "{}: {}", mode.name(), result.termination.name())?;
    Ok(result)
}

fn exit_for(terminations: &[Termination]) -> i32 {
    if terminations.iter().all(|t| *t == Termination::Converged) {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

/// History CSV as a string.
pub fn history_csv(history: &[HistoryRecord], timing: bool) -> CmdResult<String> {
    let mut buf = Vec::new();
    write_history(&mut buf, history, timing)?;
    String::from_utf8(buf).map_err(|e| CommandError::Runtime(e.to_string()))
}

/// Single adaptive or uniform run.
pub fn cmd_solve(spec: &RunSpec, out: &mut (dyn Write + Send)) -> CmdResult<i32> {
    let surface = spec.build_surface()?;
    spec.rhs.build().validate(&surface).map_err(|e| UsageError(e.to_string()))?;
    writeln!(out, "surface {} rhs {} mode {}", spec.surface, spec.rhs.describe(), spec.solver.mode.name())?;
    let (result, cache) = with_threads(spec.threads, || -> CmdResult<_> {
        let cache = open_cache(&surface, spec, out)?;
        let result = run_mode(&surface, &cache, spec, spec.solver.mode, out)?;
        Ok((result, cache))
    })??;
    save_cache(&cache, spec)?;
    if let Some(path) = &spec.csv {
        let mut w = create(path)?;
        write_history(&mut w, &result.history, !spec.no_timing)?;
        w.flush()?;
    }
    if let Some(path) = &spec.dump_solution {
        let mut w = create(path)?;
        result.u.write_to(&mut w)?;
        w.flush()?;
    }
    Ok(exit_for(&[result.termination]))
}

/// Fitted rate of a history; `window` defaults to the tail.
pub fn history_rate(history: &[HistoryRecord], window: Option<Range<usize>>) -> awbem::Result<RateFit> {
    let pts: Vec<(f64, f64)> = history.iter().map(|h| (h.dofs as f64, h.residual)).collect();
    let window = window.map(|w| w.start..w.end.min(pts.len()));
    fit_rate(&pts, window)
}

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("study");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

/// Combined study CSV: the history header prefixed by a `mode` column.
pub fn study_csv(runs: &[(Mode, &[HistoryRecord])], timing: bool) -> CmdResult<String> {
    let mut text = String::new();
    for (k, (mode, history)) in runs.iter().enumerate() {
        let csv = history_csv(history, timing)?;
        for (i, line) in csv.lines().enumerate() {
            if i == 0 {
                if k == 0 {
                    text.push_str(&format!("mode,{line}\n"));
                }
            } else {
                text.push_str(&format!("{},{line}\n", mode.name()));
            }
        }
    }
    Ok(text)
}

/// Uniform and adaptive runs of the same problem with fitted rates and a plot.
pub fn cmd_study(spec: &RunSpec, out: &mut (dyn Write + Send)) -> CmdResult<i32> {
    let surface = spec.build_surface()?;
    spec.rhs.build().validate(&surface).map_err(|e| UsageError(e.to_string()))?;
    writeln!(out, "study surface {} rhs {}", spec.surface, spec.rhs.describe())?;
    let (runs, cache) = with_threads(spec.threads, || -> CmdResult<_> {
        let cache = open_cache(&surface, spec, out)?;
        let mut runs = Vec::new();
        for mode in [Mode::Uniform, Mode::Adaptive] {
            runs.push((mode, run_mode(&surface, &cache, spec, mode, out)?));
        }
        Ok((runs, cache))
    })??;
    save_cache(&cache, spec)?;
    let timing = !spec.no_timing;
    for (mode, r) in &runs {
        let window = match (&spec.window, mode) {
            (Some(w), _) => Some(w.clone()),
            (None, Mode::Uniform) => Some(0..r.history.len()),
            (None, Mode::Adaptive) => Some(default_window(r.history.len())),
        };
        match history_rate(&r.history, window) {
            Ok(fit) => writeln!(
                out,
                "{} rate {:.3} (points {}..{}, r2 {:.3})",
                mode.name(),
                fit.slope,
                fit.window.start,
                fit.window.end,
                fit.r2
            )?,
            Err(e) => writeln!(out, "{} rate unavailable: {e}", mode.name())?,
        }
    }
    if let Some(path) = &spec.csv {
        let pairs: Vec<(Mode, &[HistoryRecord])> = runs.iter().map(|(m, r)| (*m, r.history.as_slice())).collect();
        let mut w = create(path)?;
        w.write_all(study_csv(&pairs, timing)?.as_bytes())?;
        w.flush()?;
        for (mode, r) in &runs {
            let mut w = create(&sibling(path, mode.name()))?;
            write_history(&mut w, &r.history, timing)?;
            w.flush()?;
        }
    }
    if let Some(path) = &spec.svg {
        let series: Vec<Series> = runs
            .iter()
            .map(|(m, r)| Series {
                label: m.name().to_string(),
                points: r.history.iter().map(|h| (h.dofs as f64, h.residual)).collect(),
            })
            .collect();
        let title = format!("{} {}", spec.surface, spec.rhs.describe());
        let mut w = create(path)?;
        w.write_all(loglog_svg(&title, &series, &spec.guides).as_bytes())?;
        w.flush()?;
    }
    let terms: Vec<Termination> = runs.iter().map(|(_, r)| r.termination).collect();
    Ok(exit_for(&terms))
}

/// Runs one suite and prints its table.
pub fn cmd_verify(suite: &str, out: &mut dyn Write) -> CmdResult<i32> {
    let suite: Suite = suite.parse()?;
    let checks = suite.run();
    write!(out, "{}", format_table(&checks))?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(out, "{}: {} of {} checks passed", suite.name(), checks.len() - failed, checks.len())?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_ERROR })
}
