//! Barnes-Wall lattices BW_n, n = 2^t, built by the squaring construction
//! from BW_2 = Z².
//!
//! Every point of BW_n has integer coordinates at this scaling, so lattice
//! points are handled as `i64` vectors throughout and compared exactly. A point
//! of BW_2n is a Plotkin pair `(u, u + v)` with `u ∈ BW_n` and `v ∈ R·BW_n`,
//! where `R` applies `(a, b) -> (a + b, a - b)` to every coordinate pair.

use std::f64::consts::{E, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported exponent. The kissing number of BW_{2^14} still fits
/// in a `u128`.
pub const MAX_EXPONENT: u32 = 14;

/// Lattice dimension `n = 2^t`, `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dimension {
    t: u32,
}

impl Dimension {
    pub fn new(t: u32) -> Result<Self> {
        if t < 1 || t > MAX_EXPONENT {
            return Err(Error::InvalidExponent(t));
        }
        Ok(Self { t })
    }

    /// Builds the dimension from `n`, which must be a power of two ≥ 2.
    pub fn from_n(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidDimension(n));
        }
        Self::new(n.trailing_zeros())
    }

    pub fn t(self) -> u32 {
        self.t
    }

    pub fn n(self) -> usize {
        1 << self.t
    }

    /// Squared minimum distance `d(BW_n) = n / 2`.
    pub fn min_dist2(self) -> u64 {
        1 << (self.t - 1)
    }

    pub(crate) fn check_len(self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Closed-form constants of BW_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub t: u32,
    pub n: usize,
    /// Squared minimum distance.
    pub d: u64,
    /// Squared packing radius, `d / 4`.
    pub rho2: f64,
    /// Fundamental volume `(n/2)^(n/4)`. Overflows to infinity for t ≥ 9;
    /// `volume_log2` is exact for every supported t.
    pub volume: f64,
    pub volume_log2: u64,
    pub kissing: u128,
    /// Fundamental coding gain `sqrt(n/2)`.
    pub gamma: f64,
    /// Poltyrev noise variance `vol^(2/n) / (2πe)`.
    pub sigma2_max: f64,
}

/// Computes the constants of BW_{2^t}.
pub fn params(t: u32) -> Result<LatticeParams> {
    let dim = Dimension::new(t)?;
    let n = dim.n();
    let d = dim.min_dist2();
    // vol(BW_2n) = vol(BW_n) * vol(R BW_n) = 2^(n/2) vol(BW_n)^2, which
    // solves to log2 vol(BW_n) = (t - 1) n / 4.
    let volume_log2 = u64::from(t - 1) * (n as u64) / 4;
    let volume = 2f64.powi(volume_log2 as i32);
    let kissing = (1..=t).map(|i| (1u128 << i) + 2).product();
    // vol^(2/n) = 2^((t - 1) / 2)
    let vol_2n = 2f64.powf(f64::from(t - 1) / 2.0);
    Ok(LatticeParams {
        t,
        n,
        d,
        rho2: d as f64 / 4.0,
        volume,
        volume_log2,
        kissing,
        gamma: (n as f64 / 2.0).sqrt(),
        sigma2_max: vol_2n / (2.0 * PI * E),
    })
}

/// Applies `R(2)` to every coordinate pair: `(a, b) -> (a + b, a - b)`.
pub fn rotate(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() % 2 != 0 {
        return Err(Error::OddLength(v.len()));
    }
    Ok(rotate_unchecked(v))
}

/// Inverse of [`rotate`]: `(a, b) -> ((a + b) / 2, (a - b) / 2)`.
pub fn unrotate(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() % 2 != 0 {
        return Err(Error::OddLength(v.len()));
    }
    Ok(v.chunks_exact(2)
        .flat_map(|p| [(p[0] + p[1]) / 2.0, (p[0] - p[1]) / 2.0])
        .collect())
}

pub(crate) fn rotate_unchecked(v: &[f64]) -> Vec<f64> {
    v.chunks_exact(2)
        .flat_map(|p| [p[0] + p[1], p[0] - p[1]])
        .collect()
}

/// Integer rotation of a lattice point.
pub fn rotate_point(x: &[i64]) -> Vec<i64> {
    debug_assert!(x.len() % 2 == 0);
    x.chunks_exact(2)
        .flat_map(|p| [p[0] + p[1], p[0] - p[1]])
        .collect()
}

/// Exact integer inverse rotation. `None` when some pair has odd sum, i.e.
/// `x` is not in `R·Z^n`.
pub fn unrotate_point(x: &[i64]) -> Option<Vec<i64>> {
    if x.len() % 2 != 0 {
        return None;
    }
    let mut out = Vec::with_capacity(x.len());
    for p in x.chunks_exact(2) {
        let (s, d) = (p[0] + p[1], p[0] - p[1]);
        if s.rem_euclid(2) != 0 {
            return None;
        }
        out.push(s / 2);
        out.push(d / 2);
    }
    Some(out)
}

/// Generator matrix of BW_{2^t} (rows are basis vectors), laid out as
/// `G_2n = [[G_n, G_n], [0, G_n R(n)]]` with `G_2 = I`.
pub fn generator_matrix(t: u32) -> Result<Vec<Vec<i64>>> {
    Dimension::new(t)?;
    let mut g = vec![vec![1, 0], vec![0, 1]];
    for _ in 1..t {
        let n = g.len();
        let mut next = Vec::with_capacity(2 * n);
        for row in &g {
            let mut r = row.clone();
            r.extend_from_slice(row);
            next.push(r);
        }
        for row in &g {
            let mut r = vec![0; n];
            r.extend(rotate_point(row));
            next.push(r);
        }
        g = next;
    }
    Ok(g)
}

/// Membership test for BW_{2^t}: `(x1, x2) ∈ BW_2n` iff `x1 ∈ BW_n` and
/// `x2 - x1 ∈ R·BW_n`.
pub fn is_member(x: &[i64], t: u32) -> Result<bool> {
    Dimension::new(t)?.check_len(x.len())?;
    Ok(member(x))
}

fn member(x: &[i64]) -> bool {
    if x.len() == 2 {
        return true;
    }
    let h = x.len() / 2;
    let (x1, x2) = x.split_at(h);
    if !member(x1) {
        return false;
    }
    let diff: Vec<i64> = x2.iter().zip(x1).map(|(a, b)| a - b).collect();
    match unrotate_point(&diff) {
        Some(w) => member(&w),
        None => false,
    }
}

/// Integer coefficients `z` with `z G = x`, recovered by back-substitution
/// through the block-triangular generator.
pub fn coordinates(x: &[i64], t: u32) -> Result<Vec<i64>> {
    Dimension::new(t)?.check_len(x.len())?;
    coords_rec(x).ok_or(Error::NotInLattice)
}

fn coords_rec(x: &[i64]) -> Option<Vec<i64>> {
    if x.len() == 2 {
        return Some(x.to_vec());
    }
    let h = x.len() / 2;
    let (x1, x2) = x.split_at(h);
    let mut z = coords_rec(x1)?;
    let diff: Vec<i64> = x2.iter().zip(x1).map(|(a, b)| a - b).collect();
    z.extend(coords_rec(&unrotate_point(&diff)?)?);
    Some(z)
}

/// The lattice point `z G`.
pub fn from_coordinates(z: &[i64], t: u32) -> Result<Vec<i64>> {
    Dimension::new(t)?.check_len(z.len())?;
    Ok(combine_rec(z))
}

fn combine_rec(z: &[i64]) -> Vec<i64> {
    if z.len() == 2 {
        return z.to_vec();
    }
    let h = z.len() / 2;
    let u = combine_rec(&z[..h]);
    let v = rotate_point(&combine_rec(&z[h..]));
    let mut x = u.clone();
    x.extend(u.iter().zip(&v).map(|(a, b)| a + b));
    x
}

/// Random lattice point `z G` with each `z_i` uniform in `[-range, range]`.
pub fn sample_point<R: Rng + ?Sized>(t: u32, range: i64, rng: &mut R) -> Result<Vec<i64>> {
    let dim = Dimension::new(t)?;
    if range < 0 {
        return Err(Error::InvalidConfig(format!(
            "negative sample range {range}"
        )));
    }
    let z: Vec<i64> = (0..dim.n())
        .map(|_| rng.random_range(-range..=range))
        .collect();
    Ok(combine_rec(&z))
}

/// Union-bound estimate of the maximum-likelihood point error probability,
/// `(τ/2) erfc(sqrt(d / (8σ²)))` with `σ² = σ²_max / vnr` (`vnr` linear).
pub fn union_bound_estimate(t: u32, vnr: f64) -> Result<f64> {
    let p = params(t)?;
    if !(vnr > 0.0) || !vnr.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "vnr must be positive, got {vnr}"
        )));
    }
    let sigma2 = p.sigma2_max / vnr;
    let arg = (p.d as f64 / (8.0 * sigma2)).sqrt();
    Ok(p.kissing as f64 / 2.0 * statrs::function::erf::erfc(arg))
}

/// Squared Euclidean distance between a real target and a lattice point.
#[inline]
pub fn squared_distance(y: &[f64], x: &[i64]) -> f64 {
    y.iter()
        .zip(x)
        .map(|(a, &b)| {
            let e = a - b as f64;
            e * e
        })
        .sum()
}

/// Inclusive sphere test shared by the decoders and the oracle:
/// `dist2 ≤ r2 (1 + 1e-9) + 1e-12`.
#[inline]
pub fn within_radius(dist2: f64, r2: f64) -> bool {
    dist2 <= r2 * (1.0 + 1e-9) + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_small() {
        let p = params(1).unwrap();
        assert_eq!((p.d, p.kissing, p.volume), (1, 4, 1.0));
        assert_eq!(p.rho2, 0.25);
        assert_eq!(p.gamma, 1.0);

        let p = params(2).unwrap();
        assert_eq!((p.d, p.kissing, p.volume), (2, 24, 2.0));
        assert!((p.gamma - 2f64.sqrt()).abs() < 1e-15);

        let p = params(3).unwrap();
        assert_eq!((p.d, p.kissing, p.volume), (4, 240, 16.0));

        let p = params(4).unwrap();
        assert_eq!((p.d, p.kissing, p.volume), (8, 4320, 4096.0));
    }

    #[test]
    fn params_rejects_zero() {
        assert_eq!(params(0), Err(Error::InvalidExponent(0)));
    }

    #[test]
    fn gamma_matches_volume() {
        for t in 1..=8 {
            let p = params(t).unwrap();
            let g = p.d as f64 / p.volume.powf(2.0 / p.n as f64);
            assert!((g - p.gamma).abs() < 1e-9 * p.gamma, "t={t}");
        }
    }

    #[test]
    fn rotate_examples() {
        assert_eq!(rotate(&[1.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(unrotate(&[1.0, 1.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(
            rotate(&[2.0, 3.0, -1.0, 4.0]).unwrap(),
            vec![5.0, -1.0, 3.0, -5.0]
        );
        assert_eq!(rotate(&[1.0, 2.0, 3.0]), Err(Error::OddLength(3)));
        assert_eq!(unrotate(&[1.0]), Err(Error::OddLength(1)));
    }

    #[test]
    fn generator_small() {
        assert_eq!(generator_matrix(1).unwrap(), vec![vec![1, 0], vec![0, 1]]);
        let g = generator_matrix(2).unwrap();
        assert_eq!(g[2], vec![0, 0, 1, 1]);
        assert_eq!(g[2].iter().map(|a| a * a).sum::<i64>(), 2);
    }

    #[test]
    fn generator_rows_are_members() {
        for t in 1..=5 {
            for row in generator_matrix(t).unwrap() {
                assert!(is_member(&row, t).unwrap());
            }
        }
    }

    #[test]
    fn membership_examples() {
        assert!(is_member(&[0, 0, 0, 0], 2).unwrap());
        assert!(is_member(&[0, 0, 1, 1], 2).unwrap());
        assert!(!is_member(&[0, 0, 1, 0], 2).unwrap());
        assert!(is_member(&[0; 8], 2).is_err());
    }

    #[test]
    fn sample_is_member_and_reproducible() {
        for t in 1..=6 {
            let mut a = ChaCha8Rng::seed_from_u64(7);
            let mut b = ChaCha8Rng::seed_from_u64(7);
            let x = sample_point(t, 3, &mut a).unwrap();
            assert_eq!(x, sample_point(t, 3, &mut b).unwrap());
            assert!(is_member(&x, t).unwrap());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_point(3, 0, &mut rng).unwrap(), vec![0; 8]);
    }

    #[test]
    fn coordinates_invert_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 1..=6 {
            let g = generator_matrix(t).unwrap();
            let n = 1usize << t;
            for _ in 0..20 {
                let z: Vec<i64> = (0..n).map(|_| rng.random_range(-5..=5)).collect();
                let x: Vec<i64> = (0..n)
                    .map(|j| (0..n).map(|i| z[i] * g[i][j]).sum())
                    .collect();
                assert_eq!(from_coordinates(&z, t).unwrap(), x);
                assert_eq!(coordinates(&x, t).unwrap(), z);
            }
        }
        assert_eq!(coordinates(&[0, 0, 1, 0], 2), Err(Error::NotInLattice));
    }

    #[test]
    fn union_bound_behaviour() {
        let hi = union_bound_estimate(6, 10f64.powf(0.1)).unwrap();
        let lo = union_bound_estimate(6, 10f64.powf(0.2)).unwrap();
        assert!(lo < hi);
        assert!(union_bound_estimate(6, 1e6).unwrap() < 1e-300);
        assert!(union_bound_estimate(1, 0.0).is_err());
        assert!(union_bound_estimate(1, -1.0).is_err());
        let p = params(6).unwrap();
        assert!(union_bound_estimate(6, 1e-9).unwrap() <= p.kissing as f64 / 2.0);
    }

    #[test]
    fn union_bound_z2_reference() {
        // Z², vnr = 1: sigma² = 1/(2πe); (4/2) erfc(sqrt(2πe/8)).
        let s2 = 1.0 / (2.0 * PI * E);
        let expected = 2.0 * statrs::function::erf::erfc((1.0 / (8.0 * s2)).sqrt());
        let got = union_bound_estimate(1, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.0757).abs() < 2e-3, "{got}");
    }
}
