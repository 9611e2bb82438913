//! Exhaustive closest-vector search and sphere enumeration for BW_n with
//! n ≤ 16.
//!
//! Depth-first enumeration over the integer coefficients `z` of the generator
//! matrix, pruned by the partial Gram-Schmidt distances (Fincke-Pohst).
//! Candidate distances are then re-checked exactly from the integer point.
//! Nothing here calls into [`crate::decoders`].

use crate::decoders::{Candidate, CandidateList};
use crate::error::{Error, Result};
use crate::lattice::{generator_matrix, squared_distance, within_radius, Dimension};

/// Oracle dimension cap (n = 2^4).
pub const MAX_ORACLE_EXPONENT: u32 = 4;

/// A closest point of BW_{2^t} to `y`. Ties go to the lexicographically
/// smallest point.
pub fn exact_cvp(y: &[f64], t: u32) -> Result<Vec<i64>> {
    let e = Enumerator::new(t)?;
    e.check_target(y)?;
    Ok(e.closest(y))
}

/// All points of BW_{2^t} with `d(x, y) ≤ r2` (inclusive tolerance),
/// sorted lexicographically. `r2` may not exceed `3/4 · d(BW_n)`.
pub fn enumerate_ball(y: &[f64], t: u32, r2: f64) -> Result<CandidateList> {
    let e = Enumerator::new(t)?;
    e.check_target(y)?;
    let limit = 0.75 * e.dim.min_dist2() as f64;
    if !(r2 >= 0.0) || !within_radius(r2, limit) {
        return Err(Error::RadiusGuard { r2, limit });
    }
    let mut items: Vec<Candidate> = e
        .within(y, r2)
        .into_iter()
        .map(|point| Candidate {
            dist2: squared_distance(y, &point),
            point,
        })
        .collect();
    items.sort_by(|a, b| a.point.cmp(&b.point));
    Ok(CandidateList {
        items,
        target: y.to_vec(),
    })
}

/// Every vector of BW_{2^t} with squared norm `d(BW_n)`, sorted.
pub fn minimal_vectors(t: u32) -> Result<Vec<Vec<i64>>> {
    let e = Enumerator::new(t)?;
    let d = e.dim.min_dist2() as i64;
    let origin = vec![0.0; e.dim.n()];
    let mut v: Vec<Vec<i64>> = e
        .within(&origin, d as f64)
        .into_iter()
        .filter(|x| x.iter().map(|a| a * a).sum::<i64>() == d)
        .collect();
    v.sort();
    Ok(v)
}

struct Enumerator {
    dim: Dimension,
    basis: Vec<Vec<i64>>,
    /// Gram-Schmidt vectors.
    ortho: Vec<Vec<f64>>,
    ortho_norm2: Vec<f64>,
    /// `mu[j][k] = <b_j, b*_k> / |b*_k|²` for k < j.
    mu: Vec<Vec<f64>>,
}

impl Enumerator {
    fn new(t: u32) -> Result<Self> {
        let dim = Dimension::new(t)?;
        if t > MAX_ORACLE_EXPONENT {
            return Err(Error::OracleDimension(dim.n()));
        }
        let basis = generator_matrix(t)?;
        let n = dim.n();
        let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut ortho_norm2 = Vec::with_capacity(n);
        let mut mu = vec![vec![0.0; n]; n];
        for j in 0..n {
            let b: Vec<f64> = basis[j].iter().map(|&v| v as f64).collect();
            let mut v = b.clone();
            for k in 0..j {
                let m = dot(&b, &ortho[k]) / ortho_norm2[k];
                mu[j][k] = m;
                for (vi, oi) in v.iter_mut().zip(&ortho[k]) {
                    *vi -= m * oi;
                }
            }
            ortho_norm2.push(dot(&v, &v));
            ortho.push(v);
        }
        Ok(Self {
            dim,
            basis,
            ortho,
            ortho_norm2,
            mu,
        })
    }

    fn check_target(&self, y: &[f64]) -> Result<()> {
        self.dim.check_len(y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    fn point(&self, z: &[i64]) -> Vec<i64> {
        let n = self.dim.n();
        let mut x = vec![0; n];
        for (zi, row) in z.iter().zip(&self.basis) {
            if *zi != 0 {
                for (xj, bj) in x.iter_mut().zip(row) {
                    *xj += zi * bj;
                }
            }
        }
        x
    }

    fn target_coeffs(&self, y: &[f64]) -> Vec<f64> {
        self.ortho
            .iter()
            .zip(&self.ortho_norm2)
            .map(|(o, n2)| dot(y, o) / n2)
            .collect()
    }

    /// Babai nearest-plane point, used to seed the search radius.
    fn nearest_plane(&self, coeffs: &[f64]) -> Vec<i64> {
        let n = self.dim.n();
        let mut z = vec![0i64; n];
        for k in (0..n).rev() {
            let c = coeffs[k] - (k + 1..n).map(|j| z[j] as f64 * self.mu[j][k]).sum::<f64>();
            z[k] = c.round() as i64;
        }
        z
    }

    fn closest(&self, y: &[f64]) -> Vec<i64> {
        let coeffs = self.target_coeffs(y);
        let seed = self.point(&self.nearest_plane(&coeffs));
        let mut best = (squared_distance(y, &seed), seed);
        let mut bound = slack(best.0);
        let mut z = vec![0i64; self.dim.n()];
        self.walk(self.dim.n(), &mut z, 0.0, &coeffs, &mut bound, &mut |z| {
            let x = self.point(z);
            let d = squared_distance(y, &x);
            if d < best.0 || (d == best.0 && x < best.1) {
                best = (d, x);
            }
            slack(best.0)
        });
        best.1
    }

    fn within(&self, y: &[f64], r2: f64) -> Vec<Vec<i64>> {
        let coeffs = self.target_coeffs(y);
        let mut bound = slack(r2);
        let mut out = Vec::new();
        let mut z = vec![0i64; self.dim.n()];
        self.walk(self.dim.n(), &mut z, 0.0, &coeffs, &mut bound, &mut |z| {
            let x = self.point(z);
            if within_radius(squared_distance(y, &x), r2) {
                out.push(x);
            }
            slack(r2)
        });
        out
    }

    /// Visits every `z` whose Gram-Schmidt distance is within `bound`.
    /// `levels` coordinates (indices `0..levels`) remain to be fixed; the
    /// leaf callback returns the bound to continue with.
    fn walk<F>(
        &self,
        levels: usize,
        z: &mut [i64],
        partial: f64,
        coeffs: &[f64],
        bound: &mut f64,
        leaf: &mut F,
    ) where
        F: FnMut(&[i64]) -> f64,
    {
        let n = self.dim.n();
        let k = levels - 1;
        let center = coeffs[k] - (k + 1..n).map(|j| z[j] as f64 * self.mu[j][k]).sum::<f64>();
        let room = (*bound - partial) / self.ortho_norm2[k];
        if room < 0.0 {
            return;
        }
        let w = room.sqrt();
        let lo = (center - w).ceil() as i64;
        let hi = (center + w).floor() as i64;
        for zk in lo..=hi {
            let e = center - zk as f64;
            let p = partial + self.ortho_norm2[k] * e * e;
            if p > *bound {
                continue;
            }
            z[k] = zk;
            if k == 0 {
                *bound = leaf(z);
            } else {
                self.walk(k, z, p, coeffs, bound, leaf);
            }
        }
        z[k] = 0;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Floating Gram-Schmidt error must never prune an exact boundary point.
fn slack(r2: f64) -> f64 {
    r2 * (1.0 + 1e-7) + 1e-7
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{is_member, params};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cvp_on_lattice_point() {
        let y = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(exact_cvp(&y, 2).unwrap(), vec![1, 0, 0, 1]);
        assert_eq!(exact_cvp(&[0.6, 0.6], 1).unwrap(), vec![1, 1]);
    }

    #[test]
    fn cvp_beats_every_ball_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 1..=4 {
            let n = 1usize << t;
            for _ in 0..40 {
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let x = exact_cvp(&y, t).unwrap();
                assert!(is_member(&x, t).unwrap());
                let d = squared_distance(&y, &x);
                let limit = 0.75 * params(t).unwrap().d as f64;
                if d <= limit {
                    let ball = enumerate_ball(&y, t, d).unwrap();
                    assert!(ball.contains(&x));
                    for c in &ball.items {
                        assert!(c.dist2 >= d - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn z2_deep_hole_ball() {
        let b = enumerate_ball(&[0.5, 0.5], 1, 0.5).unwrap();
        assert_eq!(b.len(), 4);
        let b = enumerate_ball(&[0.0, 1.0], 1, 0.0).unwrap();
        assert_eq!(b.points().collect::<Vec<_>>(), vec![&[0i64, 1][..]]);
    }

    #[test]
    fn guards() {
        assert!(enumerate_ball(&[0.0; 4], 2, 1.6).is_err());
        assert!(enumerate_ball(&[0.0; 4], 2, 1.5).is_ok());
        assert_eq!(exact_cvp(&[0.0; 32], 5), Err(Error::OracleDimension(32)));
        assert!(minimal_vectors(5).is_err());
    }

    #[test]
    fn kissing_small() {
        assert_eq!(minimal_vectors(1).unwrap().len(), 4);
        assert_eq!(minimal_vectors(2).unwrap().len(), 24);
        assert_eq!(minimal_vectors(3).unwrap().len(), 240);
    }
}
