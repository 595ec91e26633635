//! Problem description assembled from a key=value file and command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use awbem::discretize::RightHandSide;
use awbem::solver::SolverConfig;
use awbem::surface::Surface;

/// Error in a flag or configuration value; reported with exit code 64.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

/// Right-hand side family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsKind {
    Constant(f64),
    Point(f64),
    Cartoon,
}

impl RhsKind {
    pub fn build(&self) -> RightHandSide {
        match *self {
            RhsKind::Constant(c) => RightHandSide::Constant(c),
            RhsKind::Point(alpha) => RightHandSide::fichera_corner(alpha),
            RhsKind::Cartoon => RightHandSide::cube_cartoon(),
        }
    }

    /// Slopes of the guide lines drawn in study plots.
    pub fn default_guides(&self) -> Vec<f64> {
        match *self {
            RhsKind::Constant(_) => Vec::new(),
            RhsKind::Point(alpha) => vec![(1.0 - alpha) / 2.0, 1.0 - alpha],
            RhsKind::Cartoon => vec![0.25, 0.5],
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            RhsKind::Constant(c) => format!("constant {c}"),
            RhsKind::Point(alpha) => format!("point alpha={alpha}"),
            RhsKind::Cartoon => "cartoon".to_string(),
        }
    }
}

/// Everything needed to run `solve` or `study`.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub surface: String,
    pub rhs: RhsKind,
    pub solver: SolverConfig,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub dump_solution: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub threads: Option<usize>,
    pub no_timing: bool,
    pub guides: Vec<f64>,
    pub window: Option<Range<usize>>,
}

impl RunSpec {
    pub fn build_surface(&self) -> Result<Surface, UsageError> {
        Surface::by_name(&self.surface).map_err(|e| UsageError(e.to_string()))
    }
}

/// Flat `key = value` settings; later entries win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parses a configuration file body. Blank lines and lines starting with
    /// `#` are skipped; keys may be written with `-` or `_`.
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key=value", n + 1));
            };
            let key = k.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return usage(format!("config line {}: unknown key '{}'", n + 1, k.trim()));
            }
            map.insert(key, v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn read(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Entries of `other` replace those of `self`.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, UsageError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| UsageError(format!("invalid value '{v}' for {key}"))),
        }
    }

    fn flag(&self, key: &str) -> Result<bool, UsageError> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => usage(format!("invalid value '{v}' for {key}")),
        }
    }

    /// Builds a run description. `mode_required` asks for a `mode` entry.
    pub fn to_spec(&self, mode_required: bool) -> Result<RunSpec, UsageError> {
        let Some(surface) = self.get("surface") else {
            return usage("missing --surface");
        };
        if !matches!(surface, "fichera" | "cube") {
            return usage(format!("unknown surface '{surface}' (fichera, cube)"));
        }
        let alpha: Option<f64> = self.num("alpha")?;
        let rhs = match self.get("rhs").unwrap_or("point") {
            "point" => RhsKind::Point(alpha.unwrap_or(0.5)),
            "cartoon" => RhsKind::Cartoon,
            "constant" => RhsKind::Constant(self.num("value")?.unwrap_or(1.0)),
            other => return usage(format!("unknown rhs '{other}' (point, cartoon, constant)")),
        };
        let mut solver = SolverConfig::default();
        match self.get("mode") {
            Some(m) => solver.mode = m.parse().map_err(|_| UsageError(format!("unknown mode '{m}' (adaptive, uniform)")))?,
            None if mode_required => return usage("missing --mode"),
            None => {}
        }
        if let Some(v) = self.num("eps")? {
            solver.eps = v;
        }
        if let Some(v) = self.num("omega")? {
            solver.omega = v;
        }
        if let Some(v) = self.num("theta")? {
            solver.theta = v;
        }
        if let Some(v) = self.num::<u8>("max-level")? {
            solver.max_level = v;
            solver.resolve_level = solver.resolve_level.max(v);
        }
        if let Some(v) = self.num::<u8>("resolve-level")? {
            solver.resolve_level = v;
        }
        if let Some(v) = self.num("quad-order")? {
            solver.quad.outer_order = v;
        }
        if let Some(v) = self.num("max-dofs")? {
            solver.max_dofs = Some(v);
        }
        if let Some(v) = self.num("max-iterations")? {
            solver.max_iterations = v;
        }
        if let Some(v) = self.num("delta-init")? {
            solver.delta_init = Some(v);
        }
        if let Some(v) = self.num("gmres-tol")? {
            solver.gmres.tol = v;
        }
        solver.validate().map_err(|e| UsageError(e.to_string()))?;
        let threads: Option<usize> = self.num("threads")?;
        if threads == Some(0) {
            return usage("--threads must be positive");
        }
        let guides = match self.get("guides") {
            Some(list) => list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>().map_err(|_| UsageError(format!("invalid guide slope '{s}'"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => rhs.default_guides(),
        };
        let window = match self.get("window") {
            Some(w) => Some(parse_window(w)?),
            None => None,
        };
        let path = |k: &str| self.get(k).map(PathBuf::from);
        Ok(RunSpec {
            surface: surface.to_string(),
            rhs,
            solver,
            csv: path("csv"),
            svg: path("svg"),
            dump_solution: path("dump-solution"),
            cache: path("cache"),
            threads,
            no_timing: self.flag("no-timing")?,
            guides,
            window,
        })
    }
}

/// `start:end` with either side optional; `end` is exclusive.
pub fn parse_window(s: &str) -> Result<Range<usize>, UsageError> {
    let bad = || UsageError(format!("invalid window '{s}' (expected start:end)"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let start = if a.trim().is_empty() { 0 } else { a.trim().parse().map_err(|_| bad())? };
    let end = if b.trim().is_empty() { usize::MAX } else { b.trim().parse().map_err(|_| bad())? };
    if end <= start {
        return Err(bad());
    }
    Ok(start..end)
}

/// Keys accepted in configuration files and as flags.
pub const KEYS: &[&str] = &[
    "surface",
    "rhs",
    "alpha",
    "value",
    "mode",
    "eps",
    "omega",
    "theta",
    "max-level",
    "resolve-level",
    "quad-order",
    "max-dofs",
    "max-iterations",
    "delta-init",
    "gmres-tol",
    "csv",
    "svg",
    "dump-solution",
    "cache",
    "threads",
    "no-timing",
    "guides",
    "window",
];

#[cfg(test)]
mod tests {
    use super::*;
    use awbem::solver::Mode;

    #[test]
    fn flags_override_file() {
        let mut s = Settings::parse("surface = fichera\n# comment\nrhs=point\nalpha = 0.75\nmax_level=3\n").unwrap();
        let mut flags = Settings::default();
        flags.set("alpha", "0.5");
        flags.set("mode", "uniform");
        s.merge(&flags);
        let spec = s.to_spec(true).unwrap();
        assert_eq!(spec.rhs, RhsKind::Point(0.5));
        assert_eq!(spec.solver.mode, Mode::Uniform);
        assert_eq!(spec.solver.max_level, 3);
        assert_eq!(spec.guides, vec![0.25, 0.5]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Settings::parse("surface fichera").is_err());
        assert!(Settings::parse("colour = red").is_err());
        let s = Settings::parse("rhs = point").unwrap();
        assert_eq!(s.to_spec(false).unwrap_err().0, "missing --surface");
        let s = Settings::parse("surface = torus").unwrap();
        assert!(s.to_spec(false).is_err());
        let s = Settings::parse("surface = cube\nmode = fast").unwrap();
        assert!(s.to_spec(false).is_err());
        let s = Settings::parse("surface = cube\nomega = 2").unwrap();
        assert!(s.to_spec(false).is_err());
        let s = Settings::parse("surface = cube").unwrap();
        assert!(s.to_spec(true).is_err());
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("2:5").unwrap(), 2..5);
        assert_eq!(parse_window(":4").unwrap(), 0..4);
        assert_eq!(parse_window("3:").unwrap(), 3..usize::MAX);
        assert!(parse_window("5:2").is_err());
        assert!(parse_window("x").is_err());
    }
}
