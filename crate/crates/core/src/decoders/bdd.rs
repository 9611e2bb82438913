use super::{check_target, OpCounter};
use crate::error::Result;
use crate::lattice::{squared_distance, Dimension};

/// Bounded-distance decoding of `y` in BW_{2^t}.
///
/// Returns a lattice point; when `d(y, BW_n) < ρ²` it is the unique closest
/// one.
pub fn rec_bdd(y: &[f64], t: u32) -> Result<Vec<i64>> {
    rec_bdd_counted(y, t, &mut OpCounter::default())
}

pub fn rec_bdd_counted(y: &[f64], t: u32, ops: &mut OpCounter) -> Result<Vec<i64>> {
    Dimension::new(t)?.check_len(y.len())?;
    check_target(y)?;
    let mut scratch = BddScratch::new(y.len());
    let mut out = vec![0; y.len()];
    scratch.decode(y, &mut out, ops);
    Ok(out)
}

/// Reusable work buffers for [`bdd_into`].
pub(crate) struct BddScratch {
    reals: Vec<f64>,
    ints: Vec<i64>,
}

impl BddScratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            reals: vec![0.0; n],
            ints: vec![0; 3 * n],
        }
    }

    pub(crate) fn decode(&mut self, y: &[f64], out: &mut [i64], ops: &mut OpCounter) {
        if self.reals.len() < y.len() {
            *self = Self::new(y.len());
        }
        bdd_into(y, out, &mut self.reals, &mut self.ints, ops);
    }
}

/// Writes the decision for `y` into `out`. `reals` needs `y.len()` entries
/// and `ints` `3 y.len()`.
fn bdd_into(y: &[f64], out: &mut [i64], reals: &mut [f64], ints: &mut [i64], ops: &mut OpCounter) {
    let n = y.len();
    ops.calls += 1;
    if n == 2 {
        ops.bdd_leaves += 1;
        out[0] = round(y[0]);
        out[1] = round(y[1]);
        return;
    }
    if n == 4 {
        bdd4(y, out, ops);
        return;
    }
    let h = n / 2;
    let (y1, y2) = y.split_at(h);
    let (alt, rest) = ints.split_at_mut(n);
    let (v, rest) = rest.split_at_mut(h);
    let (res, reals) = reals.split_at_mut(h);

    // First candidate (u1, u1 + v2) in `out`, second (u2 + v1, u2) in `alt`.
    let (a1, a2) = out.split_at_mut(h);
    let (b1, b2) = alt.split_at_mut(h);
    bdd_into(y1, a1, reals, rest, ops);
    bdd_into(y2, b2, reals, rest, ops);

    residual(y2, a1, res);
    bdd_into(res, v, reals, rest, ops);
    add_rotated(a1, v, a2);

    residual(y1, b2, res);
    bdd_into(res, v, reals, rest, ops);
    add_rotated(b2, v, b1);

    ops.vector_ops += 4 * n as u64;
    ops.distance_terms += 2 * n as u64;
    let da = squared_distance(y, out);
    let db = squared_distance(y, alt);
    if db < da || (db == da && *alt < *out) {
        out.copy_from_slice(alt);
    }
}

/// The n = 4 level unrolled; same decisions and tallies as the recursion.
#[inline]
fn bdd4(y: &[f64], out: &mut [i64], ops: &mut OpCounter) {
    ops.calls += 5;
    ops.bdd_leaves += 4;
    ops.vector_ops += 16;
    ops.distance_terms += 8;
    let half = |t0: f64, t1: f64, b0: i64, b1: i64| {
        let p = t0 - b0 as f64;
        let q = t1 - b1 as f64;
        (round((p + q) * 0.5), round((p - q) * 0.5))
    };
    let a = [round(y[0]), round(y[1])];
    let b = [round(y[2]), round(y[3])];
    let (v0, v1) = half(y[2], y[3], a[0], a[1]);
    let ca = [a[0], a[1], a[0] + v0 + v1, a[1] + v0 - v1];
    let (w0, w1) = half(y[0], y[1], b[0], b[1]);
    let cb = [b[0] + w0 + w1, b[1] + w0 - w1, b[0], b[1]];
    let da = squared_distance(y, &ca);
    let db = squared_distance(y, &cb);
    if db < da || (db == da && cb < ca) {
        out.copy_from_slice(&cb);
    } else {
        out.copy_from_slice(&ca);
    }
}

/// Nearest integer, halves away from zero. Truncating casts compile to a
/// single instruction where `f64::round` may not.
#[inline]
fn round(v: f64) -> i64 {
    let k = (v.abs() + 0.5) as i64;
    if v < 0.0 {
        -k
    } else {
        k
    }
}

/// `res = (target - base) R^T / 2`.
#[inline]
pub(crate) fn residual(target: &[f64], base: &[i64], res: &mut [f64]) {
    for ((r, t), b) in res
        .chunks_exact_mut(2)
        .zip(target.chunks_exact(2))
        .zip(base.chunks_exact(2))
    {
        let p = t[0] - b[0] as f64;
        let q = t[1] - b[1] as f64;
        r[0] = (p + q) * 0.5;
        r[1] = (p - q) * 0.5;
    }
}

/// `out = base + v R`.
#[inline]
pub(crate) fn add_rotated(base: &[i64], v: &[i64], out: &mut [i64]) {
    for ((o, b), w) in out
        .chunks_exact_mut(2)
        .zip(base.chunks_exact(2))
        .zip(v.chunks_exact(2))
    {
        o[0] = b[0] + w[0] + w[1];
        o[1] = b[1] + w[0] - w[1];
    }
}
