use super::coeffs::CoeffVector;
use crate::error::{invalid, Result};
use crate::surface::Surface;

/// `(‖scaling part‖² + Σ_j 4^{sj} Σ |v_j|²)^{1/2}`, valid for `|s| < 1/2`.
pub fn sobolev_seq_norm(v: &CoeffVector, s: f64) -> Result<f64> {
    if !(s.abs() < 0.5) {
        return invalid(format!("sobolev smoothness {s} outside (-1/2, 1/2)"));
    }
    let sum: f64 = v
        .iter()
        .map(|(k, c)| {
            if k.is_scaling() {
                c * c
            } else {
                (2.0 * s * k.level as f64).exp2() * c * c
            }
        })
        .sum();
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovParams {
    pub alpha: f64,
    pub p: f64,
    /// `f64::INFINITY` selects the supremum over levels.
    pub q: f64,
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, q: f64) -> Result<Self> {
        let params = Self { alpha, p, q };
        params.check()?;
        Ok(params)
    }

    /// Parameters of the adaptivity scale on a two-dimensional surface,
    /// `1/τ = α/2 + 1/2` with `p = q = τ`.
    pub fn adaptivity_scale(alpha: f64) -> Result<Self> {
        let tau = 1.0 / (alpha / 2.0 + 0.5);
        Self::new(alpha, tau, tau)
    }

    pub fn check(&self) -> Result<()> {
        let Self { alpha, p, q } = *self;
        if !(alpha >= 0.0 && p > 0.0 && p.is_finite() && q > 0.0) {
            return invalid(format!("besov parameters ({alpha}, {p}, {q}) out of range"));
        }
        let inv_p = 1.0 / p;
        let upper = alpha / 2.0 + 0.5;
        const TOL: f64 = 1e-12;
        if inv_p < 0.5 - TOL {
            return invalid(format!("1/p = {inv_p} is below 1/2"));
        }
        if inv_p > upper + TOL {
            return invalid(format!("1/p = {inv_p} exceeds alpha/2 + 1/2 = {upper}"));
        }
        if (inv_p - upper).abs() <= TOL && q > 2.0 {
            return invalid(format!("q = {q} must not exceed 2 on the critical line"));
        }
        Ok(())
    }
}

/// Besov-type quasi-norm: the `L_p` norm of the patchwise-constant scaling
/// part plus the weighted `ℓ_q(ℓ_p)` norm of the wavelet levels.
pub fn besov_norm(v: &CoeffVector, surface: &Surface, params: BesovParams) -> Result<f64> {
    params.check()?;
    let BesovParams { alpha, p, q } = params;
    let mut projector = 0.0;
    let mut levels: Vec<f64> = Vec::new();
    for (k, c) in v.iter() {
        if k.is_scaling() {
            let jac = surface.patch(k.patch as usize)?.jacobian;
            projector += jac * (c.abs() / jac.sqrt()).powf(p);
        } else {
            let j = k.level as usize;
            if levels.len() <= j {
                levels.resize(j + 1, 0.0);
            }
            levels[j] += c.abs().powf(p);
        }
    }
    let projector = projector.powf(1.0 / p);
    let exponent = alpha + 2.0 * (0.5 - 1.0 / p);
    let weighted = levels
        .iter()
        .enumerate()
        .map(|(j, s)| (exponent * j as f64).exp2() * s.powf(1.0 / p));
    let tail = if q.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else {
        weighted.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    Ok(projector + tail)
}

/// `σ_n`: the ℓ2 norm of all but the `n` largest coefficients in magnitude.
pub fn best_n_term_curve(v: &CoeffVector, n_list: &[usize]) -> Vec<(usize, f64)> {
    let mut mags: Vec<f64> = v.iter().map(|(_, c)| c.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite coefficients"));
    // Suffix sums from the smallest upwards for accuracy.
    let mut tail = vec![0.0; mags.len() + 1];
    for i in (0..mags.len()).rev() {
        tail[i] = tail[i + 1] + mags[i] * mags[i];
    }
    n_list
        .iter()
        .map(|&n| (n, tail[n.min(mags.len())].sqrt()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Kind, WaveletIndex};
    use crate::surface::make_cube;

    fn w(level: u8, k1: u32, kind: Kind) -> WaveletIndex {
        WaveletIndex::wavelet(0, level, k1, 0, kind).unwrap()
    }

    #[test]
    fn sobolev_examples() {
        let v: CoeffVector = vec![(WaveletIndex::scaling(0), 3.0), (w(2, 1, Kind::Diag), 4.0)]
            .into_iter()
            .collect();
        assert!((sobolev_seq_norm(&v, 0.0).unwrap() - 5.0).abs() < 1e-15);
        let single: CoeffVector = vec![(w(4, 3, Kind::Horiz), -2.0)].into_iter().collect();
        assert!((sobolev_seq_norm(&single, 0.25).unwrap() - 2.0 * 4f64.sqrt()).abs() < 1e-14);
        assert_eq!(sobolev_seq_norm(&CoeffVector::new(), 0.1).unwrap(), 0.0);
        assert!(sobolev_seq_norm(&v, 0.5).is_err());
    }

    #[test]
    fn besov_examples() {
        let cube = make_cube();
        let params = BesovParams::new(0.6, 1.25, 1.0).unwrap();
        let single: CoeffVector = vec![(w(3, 2, Kind::Vert), 0.7)].into_iter().collect();
        let expect = 0.7 * (3.0_f64 * (0.6 + 2.0 * (0.5 - 0.8))).exp2();
        assert!((besov_norm(&single, &cube, params).unwrap() - expect).abs() < 1e-14);
        let v: CoeffVector = vec![(w(1, 1, Kind::Horiz), 0.3), (w(2, 3, Kind::Diag), -0.2)]
            .into_iter()
            .collect();
        let b = besov_norm(&v, &cube, BesovParams::new(0.3, 2.0, 2.0).unwrap()).unwrap();
        assert!((b - sobolev_seq_norm(&v, 0.3).unwrap()).abs() < 1e-14);
        assert!(BesovParams::new(0.5, 3.0, 1.0).is_err());
        assert!(BesovParams::new(0.5, 1.0 / 0.75, 3.0).is_err());
        assert!(BesovParams::new(0.5, 1.0 / 0.75, 2.0).is_ok());
    }

    #[test]
    fn best_n_term_examples() {
        let v: CoeffVector = vec![
            (w(0, 0, Kind::Horiz), 3.0),
            (w(0, 0, Kind::Vert), -2.0),
            (w(0, 0, Kind::Diag), 1.0),
        ]
        .into_iter()
        .collect();
        let c = best_n_term_curve(&v, &[0, 1, 3, 10]);
        assert!((c[0].1 - 14f64.sqrt()).abs() < 1e-15);
        assert!((c[1].1 - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(c[2].1, 0.0);
        assert_eq!(c[3].1, 0.0);
    }
}
