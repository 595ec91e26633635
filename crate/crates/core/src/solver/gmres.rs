use super::config::GmresConfig;
use crate::error::{Error, Result};

pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations, started
/// from `x0`. Converged when `‖b − A x‖ ≤ tol ‖b‖`.
pub fn gmres<F>(apply: F, b: &[f64], x0: &[f64], cfg: &GmresConfig) -> Result<GmresOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.to_vec();
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = cfg.tol * bnorm;
    let m = cfg.restart.min(n.max(1));
    let mut r = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut iterations = 0;
    loop {
        apply(&x, &mut ax);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        let beta = norm(&r);
        if beta <= target {
            return Ok(GmresOutcome {
                x,
                iterations,
                relative_residual: beta / bnorm,
            });
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NoConvergence {
                achieved: beta / bnorm,
                iterations,
            });
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut w = vec![0.0; n];
            apply(&basis[k], &mut w);
            iterations += 1;
            for (i, vi) in basis.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            let breakdown = hn <= 1e-300;
            if !breakdown {
                basis.push(w.iter().map(|v| v / hn).collect());
            }
            if g[k + 1].abs() <= target || iterations >= cfg.max_iter || breakdown {
                break;
            }
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    #[test]
    fn solves_nonsymmetric_system() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let n = 80;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                0.3 * rng.gen_range(-1.0..1.0) / n as f64
            }
        });
        let b = DVector::from_fn(n, |i, _| (i as f64).sin());
        let cfg = GmresConfig {
            restart: 7,
            ..GmresConfig::default()
        };
        let out = gmres(
            |x, y| {
                let v = &a * DVector::from_column_slice(x);
                y.copy_from_slice(v.as_slice());
            },
            b.as_slice(),
            &vec![0.0; n],
            &cfg,
        )
        .unwrap();
        let exact = a.lu().solve(&b).unwrap();
        let err = (DVector::from_vec(out.x) - exact).norm();
        assert!(err < 1e-7, "{err}");
        assert!(out.relative_residual <= 1e-8);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let out = gmres(|x, y| y.copy_from_slice(x), &[0.0; 4], &[1.0; 4], &GmresConfig::default()).unwrap();
        assert_eq!(out.x, vec![0.0; 4]);
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = GmresConfig {
            restart: 2,
            tol: 1e-14,
            max_iter: 3,
        };
        // Cyclic shift: GMRES needs n steps.
        let n = 10;
        let res = gmres(
            |x, y| {
                for i in 0..n {
                    y[i] = x[(i + 1) % n];
                }
            },
            &(0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
            &vec![0.0; n],
            &cfg,
        );
        assert!(matches!(res, Err(Error::NoConvergence { .. })));
    }
}
