use crate::discretize::QuadConfig;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Adaptive,
    Uniform,
}

impl std::str::FromStr for Mode {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Mode::Adaptive),
            "uniform" => Ok(Mode::Uniform),
            other => invalid(format!("unknown mode '{other}'")),
        }
    }
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Adaptive => "adaptive",
            Mode::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub restart: usize,
    /// Relative residual reduction.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 50,
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Residual equivalence factor of the estimation loop.
    pub omega: f64,
    /// Coarsening factor: the marked part keeps all but `theta` of the residual.
    pub theta: f64,
    /// Target residual norm.
    pub eps: f64,
    /// Initial accuracy of the estimation loop; `None` selects
    /// `max(1, ‖f_δ0‖)` with `δ0 = 1/2`.
    pub delta_init: Option<f64>,
    /// Highest wavelet level of the active tree. In uniform mode the last
    /// level of the refinement ladder.
    pub max_level: u8,
    /// Highest level used when resolving right-hand sides and operator
    /// applications beyond the active tree.
    pub resolve_level: u8,
    pub mode: Mode,
    pub gmres: GmresConfig,
    /// Stop with a partial result once the tree exceeds this many indices.
    pub max_dofs: Option<usize>,
    pub max_iterations: usize,
    /// Trees up to this size are assembled without compression.
    pub dense_limit: usize,
    pub quad: QuadConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            omega: 0.4,
            theta: 0.3,
            eps: 1e-2,
            delta_init: None,
            max_level: 30,
            resolve_level: 30,
            mode: Mode::Adaptive,
            gmres: GmresConfig::default(),
            max_dofs: None,
            max_iterations: 200,
            dense_limit: 1500,
            quad: QuadConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return invalid(format!("omega = {} must lie in (0, 1)", self.omega));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return invalid(format!("theta = {} must lie in (0, 1)", self.theta));
        }
        if !(self.eps > 0.0) {
            return invalid(format!("eps = {} must be positive", self.eps));
        }
        if let Some(d) = self.delta_init {
            if !(d > 0.0) {
                return invalid(format!("delta_init = {d} must be positive"));
            }
        }
        if self.max_level > 30 || self.resolve_level > 30 {
            return invalid("levels above 30 are not supported");
        }
        if self.resolve_level < self.max_level {
            return invalid("resolve_level must not be below max_level");
        }
        if self.gmres.restart == 0 || self.gmres.max_iter == 0 || !(self.gmres.tol > 0.0) {
            return invalid("invalid GMRES settings");
        }
        self.quad.validate()
    }
}
