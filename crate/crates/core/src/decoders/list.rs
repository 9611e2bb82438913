use super::bdd::{add_rotated, residual, BddScratch};
use super::merge::sort_dedup_into;
use super::{
    check_list_radius, check_target, is_bdd_radius, Candidate, CandidateList, ListSchedule,
    OpCounter, MAX_LIST_RADIUS,
};
use crate::error::{Error, Result};
use crate::lattice::{squared_distance, within_radius, Dimension};

/// All points of Z² within distance `r` of `y` (inclusive), sorted
/// lexicographically.
pub fn enum_z2(y: &[f64], r: f64) -> Result<CandidateList> {
    if y.len() != 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            got: y.len(),
        });
    }
    check_target(y)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "radius must be >= 0, got {r}"
        )));
    }
    let mut flat = Flat::new(2);
    enum_flat(y, r * r, &mut OpCounter::default(), &mut flat);
    Ok(flat.into_list(y))
}

/// Complete list of the points of BW_{2^t} within relative squared distance
/// `delta` of `y`.
pub fn list_rec(y: &[f64], t: u32, delta: f64) -> Result<CandidateList> {
    list_rec_counted(y, t, delta, &mut OpCounter::default())
}

pub fn list_rec_counted(
    y: &[f64],
    t: u32,
    delta: f64,
    ops: &mut OpCounter,
) -> Result<CandidateList> {
    Dimension::new(t)?.check_len(y.len())?;
    check_target(y)?;
    check_list_radius(delta)?;
    let mut cx = Ctx::new(Prune::Radius, y.len(), ops);
    Ok(cx.list(y, delta, 0).into_list(y))
}

/// List decoding that keeps the `ℵ` closest candidates at every merging
/// level. At most `schedule.truncations()[0]` candidates are returned.
pub fn list_rec_bounded(y: &[f64], t: u32, schedule: &ListSchedule) -> Result<CandidateList> {
    list_rec_bounded_counted(y, t, schedule, &mut OpCounter::default())
}

pub fn list_rec_bounded_counted(
    y: &[f64],
    t: u32,
    schedule: &ListSchedule,
    ops: &mut OpCounter,
) -> Result<CandidateList> {
    Dimension::new(t)?.check_len(y.len())?;
    check_target(y)?;
    let mut cx = Ctx::new(Prune::Keep(schedule), y.len(), ops);
    Ok(cx.list(y, schedule.delta(), 0).into_list(y))
}

/// Closest candidate returned by [`list_rec_bounded`], if any.
pub fn decode_bounded(
    y: &[f64],
    t: u32,
    schedule: &ListSchedule,
    ops: &mut OpCounter,
) -> Result<Option<Candidate>> {
    Dimension::new(t)?.check_len(y.len())?;
    check_target(y)?;
    let mut cx = Ctx::new(Prune::Keep(schedule), y.len(), ops);
    let flat = cx.list(y, schedule.delta(), 0);
    Ok(flat.closest().map(|i| Candidate {
        point: flat.point(i).to_vec(),
        dist2: flat.d2[i],
    }))
}

/// One branch of the list decoder on `(y1, y2)`: every `u1` within relative
/// radius `delta1` of `y1` is paired with every `v2 ∈ R·BW` within `delta2`
/// of `y2 - u1`, emitting `(u1, u1 + v2)`, or `(u1 + v2, u1)` when `reverse`.
///
/// Radii at or below 1/4 use the bounded-distance decoder. The candidates
/// are returned unsorted, with distances to `(y1, y2)` (or `(y2, y1)` when
/// `reverse`), in which order the target is also stored.
pub fn subroutine(
    y1: &[f64],
    y2: &[f64],
    t: u32,
    delta1: f64,
    delta2: f64,
    reverse: bool,
) -> Result<CandidateList> {
    let dim = Dimension::new(t)?;
    if t < 2 {
        return Err(Error::InvalidExponent(t));
    }
    let h = dim.n() / 2;
    for half in [y1, y2] {
        if half.len() != h {
            return Err(Error::LengthMismatch {
                expected: h,
                got: half.len(),
            });
        }
        check_target(half)?;
    }
    for d in [delta1, delta2] {
        if !(d > 0.0 && d <= MAX_LIST_RADIUS) {
            return Err(Error::RadiusOutOfRange {
                delta: d,
                lo: 0.0,
                hi: MAX_LIST_RADIUS,
            });
        }
    }
    let mut ops = OpCounter::default();
    let mut cx = Ctx::new(Prune::Radius, dim.n(), &mut ops);
    let mut out = Flat::new(dim.n());
    cx.sub(y1, y2, (delta1, 0), (delta2, 0), reverse, &mut out);
    let target: Vec<f64> = if reverse {
        y2.iter().chain(y1).copied().collect()
    } else {
        y1.iter().chain(y2).copied().collect()
    };
    Ok(out.into_list(&target))
}

/// Candidates stored row-major with a fixed stride.
pub(crate) struct Flat {
    n: usize,
    pts: Vec<i64>,
    d2: Vec<f64>,
}

impl Flat {
    fn new(n: usize) -> Self {
        Self {
            n,
            pts: Vec::new(),
            d2: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.d2.len()
    }

    fn point(&self, i: usize) -> &[i64] {
        &self.pts[i * self.n..(i + 1) * self.n]
    }

    fn push(&mut self, point: &[i64], d2: f64) {
        self.pts.extend_from_slice(point);
        self.d2.push(d2);
    }

    fn gather_into(&self, keep: &[usize], out: &mut Flat) {
        for &i in keep {
            out.push(self.point(i), self.d2[i]);
        }
    }

    fn closest(&self) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            self.d2[a]
                .total_cmp(&self.d2[b])
                .then_with(|| self.point(a).cmp(self.point(b)))
        })
    }

    fn into_list(self, target: &[f64]) -> CandidateList {
        let items = (0..self.len())
            .map(|i| Candidate {
                point: self.point(i).to_vec(),
                dist2: self.d2[i],
            })
            .collect();
        CandidateList {
            items,
            target: target.to_vec(),
        }
    }
}

#[derive(Clone, Copy)]
enum Prune<'a> {
    /// Drop candidates outside the decoding sphere.
    Radius,
    /// Keep the `ℵ` closest candidates of each level.
    Keep(&'a ListSchedule),
}

struct Ctx<'a> {
    prune: Prune<'a>,
    ops: &'a mut OpCounter,
    bdd: BddScratch,
    pool: Pool,
    order: Vec<usize>,
    scratch: Vec<usize>,
}

/// Recycled buffers; the recursion would otherwise allocate a few vectors
/// per candidate.
#[derive(Default)]
struct Pool {
    ints: Vec<Vec<i64>>,
    reals: Vec<Vec<f64>>,
}

impl Pool {
    fn ints(&mut self, len: usize) -> Vec<i64> {
        let mut v = self.ints.pop().unwrap_or_default();
        v.clear();
        v.resize(len, 0);
        v
    }

    fn reals(&mut self, len: usize) -> Vec<f64> {
        let mut v = self.reals.pop().unwrap_or_default();
        v.clear();
        v.resize(len, 0.0);
        v
    }

    fn flat(&mut self, n: usize) -> Flat {
        let mut pts = self.ints.pop().unwrap_or_default();
        let mut d2 = self.reals.pop().unwrap_or_default();
        pts.clear();
        d2.clear();
        Flat { n, pts, d2 }
    }

    fn recycle(&mut self, f: Flat) {
        self.ints.push(f.pts);
        self.reals.push(f.d2);
    }
}

/// A relative radius and its position in the `δ (2/3)^k` chain.
type Radius = (f64, usize);

impl<'a> Ctx<'a> {
    fn new(prune: Prune<'a>, n: usize, ops: &'a mut OpCounter) -> Self {
        Self {
            prune,
            ops,
            bdd: BddScratch::new(n),
            pool: Pool::default(),
            order: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn list(&mut self, y: &[f64], delta: f64, level: usize) -> Flat {
        self.ops.calls += 1;
        let n = y.len();
        if n == 2 {
            // d(BW_2) = 1
            let mut out = self.pool.flat(2);
            enum_flat(y, delta, self.ops, &mut out);
            return out;
        }
        let h = n / 2;
        let (y1, y2) = y.split_at(h);
        let big = (delta, level);
        let small = (delta * 2.0 / 3.0, level + 1);

        let mut all = self.pool.flat(n);
        self.sub(y1, y2, small, big, false, &mut all);
        self.sub(y1, y2, big, small, false, &mut all);
        self.sub(y2, y1, big, small, true, &mut all);
        self.sub(y2, y1, small, big, true, &mut all);

        if let Prune::Radius = self.prune {
            let r2 = delta * h as f64;
            self.order.clear();
            self.order
                .extend((0..all.len()).filter(|&i| within_radius(all.d2[i], r2)));
            let mut inside = self.pool.flat(n);
            all.gather_into(&self.order, &mut inside);
            self.pool.recycle(std::mem::replace(&mut all, inside));
        }
        let sorted = self.sort_dedup(all);
        match self.prune {
            Prune::Radius => sorted,
            Prune::Keep(schedule) => self.keep_closest(sorted, schedule.aleph(level)),
        }
    }

    fn sub(
        &mut self,
        y1: &[f64],
        y2: &[f64],
        first: Radius,
        second: Radius,
        reverse: bool,
        out: &mut Flat,
    ) {
        let h = y1.len();
        let u_list = if is_bdd_radius(first.0) {
            let mut u = self.pool.flat(h);
            u.pts.resize(h, 0);
            self.bdd.decode(y1, &mut u.pts, self.ops);
            self.ops.distance_terms += h as u64;
            u.d2.push(squared_distance(y1, &u.pts));
            u
        } else {
            self.list(y1, first.0, first.1)
        };
        let mut res = self.pool.reals(h);
        let mut v = self.pool.ints(h);
        let mut x = self.pool.ints(2 * h);
        let mut emitted = 0u64;
        for i in 0..u_list.len() {
            let u = u_list.point(i);
            let du = u_list.d2[i];
            residual(y2, u, &mut res);
            self.ops.vector_ops += 2 * h as u64;
            if is_bdd_radius(second.0) {
                self.bdd.decode(&res, &mut v, self.ops);
                assemble(u, du, &v, y2, reverse, &mut x, out);
                emitted += 1;
            } else {
                let v_list = self.list(&res, second.0, second.1);
                for j in 0..v_list.len() {
                    assemble(u, du, v_list.point(j), y2, reverse, &mut x, out);
                }
                emitted += v_list.len() as u64;
                self.pool.recycle(v_list);
            }
        }
        self.pool.recycle(u_list);
        self.pool.reals.push(res);
        self.pool.ints.push(v);
        self.pool.ints.push(x);
        self.ops.vector_ops += 2 * h as u64 * emitted;
        self.ops.distance_terms += h as u64 * emitted;
        self.ops.candidates += emitted;
    }

    fn sort_dedup(&mut self, all: Flat) -> Flat {
        if all.len() <= 1 {
            return all;
        }
        sort_dedup_into(
            all.len(),
            |a, b| all.point(a).cmp(all.point(b)),
            &mut self.ops.comparisons,
            &mut self.order,
            &mut self.scratch,
        );
        let mut out = self.pool.flat(all.n);
        all.gather_into(&self.order, &mut out);
        self.pool.recycle(all);
        out
    }

    /// `sorted` is lexicographic; ties in distance keep that order.
    fn keep_closest(&mut self, sorted: Flat, aleph: usize) -> Flat {
        let k = sorted.len();
        if k <= aleph {
            return sorted;
        }
        self.order.clear();
        self.order.extend(0..k);
        self.order
            .sort_by(|&a, &b| sorted.d2[a].total_cmp(&sorted.d2[b]));
        self.order.truncate(aleph);
        self.order.sort_unstable();
        self.ops.comparisons += (k as f64 * (k as f64).log2()).ceil() as u64;
        let mut out = self.pool.flat(sorted.n);
        sorted.gather_into(&self.order, &mut out);
        self.pool.recycle(sorted);
        out
    }
}

/// Pushes `(u, u + vR)`, or `(u + vR, u)` when `reverse`. `du` is the
/// distance of `u` to its half of the target and `y2` the other half.
#[inline]
fn assemble(
    u: &[i64],
    du: f64,
    v: &[i64],
    y2: &[f64],
    reverse: bool,
    x: &mut [i64],
    out: &mut Flat,
) {
    let h = u.len();
    let (uh, wh) = if reverse {
        let (a, b) = x.split_at_mut(h);
        (b, a)
    } else {
        x.split_at_mut(h)
    };
    uh.copy_from_slice(u);
    add_rotated(u, v, wh);
    let d = du + squared_distance(y2, wh);
    out.push(x, d);
}

fn enum_flat(y: &[f64], r2: f64, ops: &mut OpCounter, out: &mut Flat) {
    ops.calls += 1;
    ops.enum_leaves += 1;
    let reach = (r2 * (1.0 + 1e-9) + 1e-12).sqrt();
    let lo0 = ceil(y[0] - reach);
    let hi0 = floor(y[0] + reach);
    for a in lo0..=hi0 {
        let e0 = y[0] - a as f64;
        let rest = (reach * reach - e0 * e0).max(0.0).sqrt();
        let lo1 = ceil(y[1] - rest);
        let hi1 = floor(y[1] + rest);
        for b in lo1..=hi1 {
            let p = [a, b];
            ops.distance_terms += 2;
            let d = squared_distance(y, &p);
            if within_radius(d, r2) {
                out.push(&p, d);
            }
        }
    }
}

// Casting helpers; the libm calls are not inlined on baseline x86-64.
#[inline]
fn floor(v: f64) -> i64 {
    let i = v as i64;
    if (i as f64) > v {
        i - 1
    } else {
        i
    }
}

#[inline]
fn ceil(v: f64) -> i64 {
    let i = v as i64;
    if (i as f64) < v {
        i + 1
    } else {
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::rec_bdd;
    use crate::lattice::{is_member, params, sample_point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(l: &CandidateList) -> Vec<Vec<i64>> {
        l.points().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn enum_deep_hole() {
        let l = enum_z2(&[0.5, 0.5], 0.5f64.sqrt()).unwrap();
        assert_eq!(
            pts(&l),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        for c in &l.items {
            assert!((c.dist2 - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn enum_small() {
        assert_eq!(pts(&enum_z2(&[0.0, 0.0], 0.5).unwrap()), vec![vec![0, 0]]);
        assert_eq!(pts(&enum_z2(&[0.1, -0.2], 0.5).unwrap()), vec![vec![0, 0]]);
        assert!(enum_z2(&[0.5, 0.5], 0.1).unwrap().is_empty());
        assert!(enum_z2(&[0.0], 1.0).is_err());
        assert!(enum_z2(&[0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn enum_matches_neighbourhood_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let y = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let r: f64 = rng.random_range(0.0..1.2);
            let mut want = Vec::new();
            for a in -6..=6 {
                for b in -6..=6 {
                    let d = (y[0] - a as f64).powi(2) + (y[1] - b as f64).powi(2);
                    if d <= r * r {
                        want.push(vec![a, b]);
                    }
                }
            }
            assert_eq!(pts(&enum_z2(&y, r).unwrap()), want);
        }
    }

    #[test]
    fn singleton_in_bdd_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 2..=5 {
            let p = params(t).unwrap();
            let x = sample_point(t, 3, &mut rng).unwrap();
            let y: Vec<f64> = x
                .iter()
                .map(|&v| v as f64 + 0.3 * (p.rho2 / (1 << t) as f64).sqrt())
                .collect();
            let l = list_rec(&y, t, 0.26).unwrap();
            assert_eq!(pts(&l), vec![x]);
        }
    }

    #[test]
    fn output_sorted_members_inside_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for t in 2..=4 {
            let n = 1usize << t;
            let r2 = 0.5 * (n / 2) as f64;
            for _ in 0..10 {
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let l = list_rec(&y, t, 0.5).unwrap();
                for w in l.items.windows(2) {
                    assert!(w[0].point < w[1].point);
                }
                for c in &l.items {
                    assert!(is_member(&c.point, t).unwrap());
                    assert!(within_radius(c.dist2, r2));
                    assert!((squared_distance(&y, &c.point) - c.dist2).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn radius_range_checked() {
        assert!(list_rec(&[0.0; 4], 2, 0.2).is_err());
        assert!(list_rec(&[0.0; 4], 2, 0.75).is_err());
        assert!(list_rec(&[0.0; 4], 2, 0.7).is_ok());
        assert!(list_rec(&[0.0; 3], 2, 0.3).is_err());
    }

    #[test]
    fn subroutine_noiseless_bdd_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for t in 2..=5 {
            let x = sample_point(t, 3, &mut rng).unwrap();
            let y: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let h = y.len() / 2;
            let l = subroutine(&y[..h], &y[h..], t, 0.25, 0.25, false).unwrap();
            assert_eq!(pts(&l), vec![x.clone()]);
            let l = subroutine(&y[h..], &y[..h], t, 0.25, 0.25, true).unwrap();
            assert_eq!(pts(&l), vec![x]);
        }
    }

    #[test]
    fn reverse_swaps_halves() {
        // A target symmetric under swapping halves gives mirrored outputs.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for t in 2..=4 {
            let h = 1usize << (t - 1);
            let half: Vec<f64> = (0..h).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fwd = subroutine(&half, &half, t, 0.4, 0.25, false).unwrap();
            let rev = subroutine(&half, &half, t, 0.4, 0.25, true).unwrap();
            let swapped: Vec<Vec<i64>> = fwd
                .points()
                .map(|p| p[h..].iter().chain(&p[..h]).copied().collect())
                .collect();
            assert_eq!(swapped, pts(&rev));
        }
    }

    #[test]
    fn bounded_single_is_no_worse_than_bdd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = ListSchedule::new(3.0 / 8.0, vec![1]).unwrap();
        for t in 2..=6 {
            let n = 1usize << t;
            let rho2 = params(t).unwrap().rho2;
            for _ in 0..30 {
                let x = sample_point(t, 3, &mut rng).unwrap();
                let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let scale = (0.95 * rho2).sqrt() / norm;
                let y: Vec<f64> = x
                    .iter()
                    .zip(&dir)
                    .map(|(&a, d)| a as f64 + d * scale)
                    .collect();
                let l = list_rec_bounded(&y, t, &s).unwrap();
                assert_eq!(l.len(), 1);
                let b = rec_bdd(&y, t).unwrap();
                assert!(l.items[0].dist2 <= squared_distance(&y, &b) + 1e-9);
                assert_eq!(l.items[0].point, x);
            }
        }
    }

    #[test]
    fn bounded_respects_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = ListSchedule::new(0.5, vec![7, 2]).unwrap();
        for _ in 0..20 {
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0)).collect();
            let l = list_rec_bounded(&y, 4, &s).unwrap();
            assert!(l.len() <= 7);
            for w in l.items.windows(2) {
                assert!(w[0].point < w[1].point);
            }
        }
    }
}
