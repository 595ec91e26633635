use super::coeffs::CoeffVector;
use super::index::{Kind, WaveletIndex};
use crate::error::{invalid, Result};
use crate::surface::Patch;

/// Level `J` of a full `2^J × 2^J` grid with `len` cells.
pub fn grid_level(len: usize) -> Option<u8> {
    let mut j = 0u8;
    let mut n = 1usize;
    while n < len {
        n *= 4;
        j += 1;
    }
    (n == len && j <= 15).then_some(j)
}

/// Coefficients of the patch-constant function with the given cell values.
///
/// `values[k2 * 2^J + k1]` is the value on cell `(k1, k2)` of the level-`J`
/// grid. The result has the scaling coefficient and all wavelets of levels
/// below `J`.
pub fn haar_analysis(patch: &Patch, values: &[f64]) -> Result<CoeffVector> {
    let Some(level) = grid_level(values.len()) else {
        return invalid(format!("{} values do not form a dyadic square grid", values.len()));
    };
    let id = patch.id as u16;
    let sqrt_jac = patch.jacobian.sqrt();
    let mut out = CoeffVector::new();
    let mut avg = values.to_vec();
    let mut n = 1usize << level;
    for j in (0..level).rev() {
        let m = n / 2;
        let mut coarse = vec![0.0; m * m];
        let factor = sqrt_jac * (-(j as f64)).exp2() / 4.0;
        for k2 in 0..m {
            for k1 in 0..m {
                let q = [
                    avg[2 * k2 * n + 2 * k1],
                    avg[2 * k2 * n + 2 * k1 + 1],
                    avg[(2 * k2 + 1) * n + 2 * k1],
                    avg[(2 * k2 + 1) * n + 2 * k1 + 1],
                ];
                for kind in Kind::WAVELETS {
                    let s = kind.signs();
                    let c = factor * (s[0] * q[0] + s[1] * q[1] + s[2] * q[2] + s[3] * q[3]);
                    out.set(
                        WaveletIndex {
                            patch: id,
                            level: j as i8,
                            k1: k1 as u32,
                            k2: k2 as u32,
                            kind,
                        },
                        c,
                    );
                }
                coarse[k2 * m + k1] = 0.25 * (q[0] + q[1] + q[2] + q[3]);
            }
        }
        avg = coarse;
        n = m;
    }
    out.set(WaveletIndex::scaling(id), sqrt_jac * avg[0]);
    Ok(out)
}

/// Cell values on the level-`level` grid of the function with the given
/// coefficients. Indices on other patches are ignored.
pub fn haar_synthesis(v: &CoeffVector, patch: &Patch, level: u8) -> Result<Vec<f64>> {
    if level > 15 {
        return invalid(format!("grid level {level} too large"));
    }
    let id = patch.id as u16;
    let sqrt_jac = patch.jacobian.sqrt();
    for (idx, _) in v.iter() {
        if idx.patch == id && idx.level >= level as i8 {
            return invalid(format!("index ({idx}) is not below grid level {level}"));
        }
    }
    let mut avg = vec![v.get(&WaveletIndex::scaling(id)) / sqrt_jac];
    let mut n = 1usize;
    for j in 0..level {
        let m = 2 * n;
        let mut fine = vec![0.0; m * m];
        let scale = (j as f64).exp2() / sqrt_jac;
        for k2 in 0..n {
            for k1 in 0..n {
                let mut q = [avg[k2 * n + k1]; 4];
                for kind in Kind::WAVELETS {
                    let c = v.get(&WaveletIndex {
                        patch: id,
                        level: j as i8,
                        k1: k1 as u32,
                        k2: k2 as u32,
                        kind,
                    });
                    if c != 0.0 {
                        let s = kind.signs();
                        for i in 0..4 {
                            q[i] += s[i] * c * scale;
                        }
                    }
                }
                fine[2 * k2 * m + 2 * k1] = q[0];
                fine[2 * k2 * m + 2 * k1 + 1] = q[1];
                fine[(2 * k2 + 1) * m + 2 * k1] = q[2];
                fine[(2 * k2 + 1) * m + 2 * k1 + 1] = q[3];
            }
        }
        avg = fine;
        n = m;
    }
    Ok(avg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{make_cube, SurfacePoint};
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_gives_scaling_only() {
        let cube = make_cube();
        let p = &cube.patches()[3];
        let c = haar_analysis(p, &vec![1.5; 64]).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.get(&WaveletIndex::scaling(3)) - 1.5 * 2.0).abs() < 1e-14);
    }

    #[test]
    fn sampled_wavelet_gives_unit_coefficient() {
        let cube = make_cube();
        let p = &cube.patches()[0];
        let lam = WaveletIndex::wavelet(0, 1, 1, 0, Kind::Diag).unwrap();
        let n = 8;
        let values: Vec<f64> = (0..n * n)
            .map(|i| {
                let (k1, k2) = (i % n, i / n);
                let x = SurfacePoint::new(0, (k1 as f64 + 0.5) / n as f64, (k2 as f64 + 0.5) / n as f64);
                lam.evaluate(&cube, x).unwrap()
            })
            .collect();
        let c = haar_analysis(p, &values).unwrap();
        for (idx, v) in c.iter() {
            let expect = if *idx == lam { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "{idx}: {v}");
        }
    }

    #[test]
    fn parseval_and_round_trip() {
        let cube = make_cube();
        let p = &cube.patches()[4];
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let values: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = haar_analysis(p, &values).unwrap();
        let l2: f64 = values.iter().map(|v| v * v * p.jacobian / 256.0).sum();
        assert!((l2 - c.norm().powi(2)).abs() < 1e-12);
        let back = haar_synthesis(&c, p, 4).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(haar_synthesis(&c, p, 3).is_err());
        assert!(haar_analysis(p, &[0.0; 8]).is_err());
    }
}
