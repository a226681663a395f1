use super::banded::BandedHermitian;
use super::dense::generalized_hermitian_eigen;
use super::C64;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

/// A shift strictly below the spectrum of the pencil `(k, m)`, found by
/// doubling until `k - sigma m` is positive definite.
pub fn shift_below(k: &BandedHermitian, m: &BandedHermitian, start: f64) -> Result<f64> {
    let mut sigma = -start.abs().max(1.0);
    for _ in 0..80 {
        if let Ok(f) = k.add_scaled(-sigma, m).ldl() {
            if f.inertia().negative == 0 {
                return Ok(sigma);
            }
        }
        sigma *= 2.0;
    }
    Err(Error::InvalidInput("no shift below the spectrum found".into()))
}

fn negatives(k: &BandedHermitian, m: &BandedHermitian, sigma: f64) -> Option<usize> {
    k.add_scaled(-sigma, m).ldl().ok().map(|f| f.inertia().negative)
}

/// A shift just below the lowest eigenvalue, located by bisection on inertia.
fn shift_near_bottom(k: &BandedHermitian, m: &BandedHermitian, scale: f64) -> Result<f64> {
    let mut lo = shift_below(k, m, scale)?;
    let mut step = lo.abs();
    let mut hi = lo + step;
    for _ in 0..80 {
        if negatives(k, m, hi).is_none_or(|c| c > 0) {
            break;
        }
        lo = hi;
        step *= 2.0;
        hi = lo + step;
    }
    for _ in 0..60 {
        if hi - lo <= 1e-3 * hi.abs().max(scale.abs()).max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match negatives(k, m, mid) {
            Some(0) => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(lo - (hi - lo))
}

/// The `nev` lowest eigenpairs of `k x = lambda m x` by shift-invert
/// subspace iteration with Rayleigh-Ritz. Eigenvectors are `m`-orthonormal.
pub fn lowest_eigenpairs(k: &BandedHermitian, m: &BandedHermitian, nev: usize, scale: f64, seed: u64) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = k.dim();
    let nev = nev.min(n);
    if nev == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let p = (2 * nev + 8).min(n);
    let sigma = shift_near_bottom(k, m, scale)?;
    let ldl = k.add_scaled(-sigma, m).ldl()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<C64>> = (0..p)
        .map(|_| (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect();
    let mut prev = vec![f64::INFINITY; nev];
    let mut vals = Vec::new();
    for _ in 0..2000 {
        let y: Vec<Vec<C64>> = x.iter().map(|v| ldl.solve(&m.matvec(v))).collect();
        let ky: Vec<Vec<C64>> = y.iter().map(|v| k.matvec(v)).collect();
        let my: Vec<Vec<C64>> = y.iter().map(|v| m.matvec(v)).collect();
        let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
        let kr = DMatrix::from_fn(p, p, |i, j| dot(&y[i], &ky[j]));
        let mr = DMatrix::from_fn(p, p, |i, j| dot(&y[i], &my[j]));
        let kr = (&kr + kr.adjoint()) * C64::new(0.5, 0.0);
        let mr = (&mr + mr.adjoint()) * C64::new(0.5, 0.0);
        let (ritz, vecs) = generalized_hermitian_eigen(&kr, &mr).ok_or(Error::Breakdown(0))?;
        x = (0..p)
            .map(|c| {
                let mut v = vec![C64::new(0.0, 0.0); n];
                for (r, yr) in y.iter().enumerate() {
                    let coef = vecs[(r, c)];
                    for (vi, yi) in v.iter_mut().zip(yr) {
                        *vi += coef * yi;
                    }
                }
                v
            })
            .collect();
        vals = ritz[..nev].to_vec();
        let settled = vals.iter().zip(&prev).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prev = vals.clone();
        if settled {
            let resid = (0..nev).all(|i| {
                let kx = k.matvec(&x[i]);
                let mx = m.matvec(&x[i]);
                let r = kx.iter().zip(&mx).map(|(a, b)| (a - b * vals[i]).norm_sqr()).sum::<f64>().sqrt();
                let s = mx.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                r <= 1e-12 * s * (vals[i].abs() + scale.abs()).max(1.0)
            });
            if resid {
                break;
            }
        }
    }
    x.truncate(nev);
    Ok((vals, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_pencil() {
        let n = 60;
        let mut k = BandedHermitian::zeros(n, 2);
        let mut m = BandedHermitian::zeros(n, 2);
        for i in 0..n {
            k.add(i, i, C64::new(2.0 + 0.1 * (i as f64).sin() - 3.0 * (i == 7) as i32 as f64, 0.0));
            m.add(i, i, C64::new(4.0, 0.0));
            if i > 0 {
                k.add(i, i - 1, C64::new(-1.0, 0.3));
                m.add(i, i - 1, C64::new(1.0, 0.0));
            }
            if i > 1 {
                k.add(i, i - 2, C64::new(0.0, -0.2));
            }
        }
        let (dense, _) = generalized_hermitian_eigen(&k.to_dense(), &m.to_dense()).unwrap();
        let (vals, vecs) = lowest_eigenpairs(&k, &m, 3, 1.0, 7).unwrap();
        for i in 0..3 {
            assert!((vals[i] - dense[i]).abs() < 1e-10, "{} {}", vals[i], dense[i]);
            let kx = k.matvec(&vecs[i]);
            let mx = m.matvec(&vecs[i]);
            let res: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - b * vals[i]).norm()).fold(0.0, f64::max);
            assert!(res < 1e-8, "residual {i} {res}");
        }
    }
}
