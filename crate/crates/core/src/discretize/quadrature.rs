use std::sync::OnceLock;

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub const MAX_ORDER: usize = 64;

fn compute_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    GaussRule { nodes, weights }
}

/// Cached rule of order `n` (`1 ≤ n ≤ MAX_ORDER`).
pub fn gauss_legendre(n: usize) -> &'static GaussRule {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    assert!((1..=MAX_ORDER).contains(&n), "gauss order {n} out of range");
    &RULES.get_or_init(|| (1..=MAX_ORDER).map(compute_rule).collect())[n - 1]
}

/// Quadrature settings for Galerkin entries and right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Largest outer Gauss order per direction.
    pub outer_order: usize,
    /// Maximal number of subdivisions of a cell pair before falling back to
    /// the plain rule.
    pub near_depth: usize,
    /// Dyadic grading depth towards the singular point of a right-hand side.
    pub rhs_depth: usize,
    /// A subcell is integrated by Gauss once its diameter is at most
    /// `admissibility` times its distance to the source.
    pub admissibility: f64,
    /// Relative accuracy used to lower the Gauss order for distant pairs.
    pub order_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            outer_order: 4,
            near_depth: 6,
            rhs_depth: 20,
            admissibility: 0.5,
            order_tol: 1e-10,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(1..=MAX_ORDER).contains(&self.outer_order) {
            return crate::error::invalid(format!("outer order {} outside 1..={MAX_ORDER}", self.outer_order));
        }
        if !(self.admissibility > 0.0 && self.order_tol > 0.0) {
            return crate::error::invalid("admissibility and order tolerance must be positive");
        }
        Ok(())
    }

    /// Smallest order that reaches `order_tol` for a cell whose distance to
    /// the nearest singularity is `ratio` times its diameter.
    pub fn order_for_ratio(&self, ratio: f64) -> usize {
        let a = 1.0 + 2.0 * ratio;
        let rho = a + (a * a - 1.0).max(0.0).sqrt();
        if rho <= 1.0 {
            return self.outer_order;
        }
        let q = (self.order_tol.recip().ln() / (2.0 * rho.ln())).ceil() as usize;
        q.clamp(1, self.outer_order)
    }
}
