use bw_core::decoders::{
    list_rec, list_rec_bounded, merge_sort_dedup, rec_bdd, subroutine, CandidateList, ListSchedule,
};
use bw_core::lattice::{params, sample_point, squared_distance};
use bw_core::oracle::{enumerate_ball, exact_cvp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random direction scaled to squared norm `r2`.
fn noise_of_norm(n: usize, r2: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let s = (r2 / g.iter().map(|v| v * v).sum::<f64>()).sqrt();
    g.into_iter().map(|v| v * s).collect()
}

fn shift(x: &[i64], e: &[f64]) -> Vec<f64> {
    x.iter().zip(e).map(|(&a, b)| a as f64 + b).collect()
}

fn points(l: &CandidateList) -> Vec<Vec<i64>> {
    l.points().map(|p| p.to_vec()).collect()
}

#[test]
fn bdd_inside_packing_radius_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rho2 = params(3).unwrap().rho2;
    for _ in 0..10_000 {
        let x = sample_point(3, 4, &mut rng).unwrap();
        let y = shift(&x, &noise_of_norm(8, 0.9 * rho2, &mut rng));
        assert_eq!(rec_bdd(&y, 3).unwrap(), x);
        assert_eq!(exact_cvp(&y, 3).unwrap(), x);
    }
}

#[test]
fn list_rec_agrees_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for t in 2..=3u32 {
        let n = 1usize << t;
        let d = params(t).unwrap().d as f64;
        for delta in [0.26, 0.375, 0.5] {
            for k in 0..40 {
                let y: Vec<f64> = if k % 2 == 0 {
                    let x = sample_point(t, 2, &mut rng).unwrap();
                    shift(
                        &x,
                        &noise_of_norm(n, rng.random_range(0.0..delta * d), &mut rng),
                    )
                } else {
                    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
                };
                let got = list_rec(&y, t, delta).unwrap();
                let want = enumerate_ball(&y, t, delta * d).unwrap();
                assert_eq!(points(&got), points(&want), "t={t} delta={delta} y={y:?}");
            }
        }
    }
}

#[test]
fn subroutine_distances_decompose() {
    // δ(x, y) = δ(u1, y1)/2 + δ(v2, y2 - u1) with v2 = x2 - u1.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut seen = 0;
    for t in 2..=5u32 {
        let n = 1usize << t;
        let h = n / 2;
        let d = params(t).unwrap().d as f64;
        let dh = d / 2.0;
        for _ in 0..20 {
            let x = sample_point(t, 3, &mut rng).unwrap();
            let y = shift(&x, &noise_of_norm(n, 0.4 * d, &mut rng));
            let (y1, y2) = y.split_at(h);
            let l = subroutine(y1, y2, t, 0.5, 1.0 / 3.0, false).unwrap();
            seen += l.len();
            for c in &l.items {
                let (u1, x2) = c.point.split_at(h);
                let v2: Vec<i64> = x2.iter().zip(u1).map(|(a, b)| a - b).collect();
                let res: Vec<f64> = y2.iter().zip(u1).map(|(a, &b)| a - b as f64).collect();
                let lhs = squared_distance(&y, &c.point) / d;
                let rhs = squared_distance(y1, u1) / dh / 2.0 + squared_distance(&res, &v2) / d;
                assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1e-300));
                assert!(
                    (c.dist2 - squared_distance(&y, &c.point)).abs() <= 1e-9 * c.dist2.max(1.0)
                );
            }
        }
    }
    assert!(seen > 40);
}

#[test]
fn deep_hole_of_z2() {
    let l = enumerate_ball(&[0.5, 0.5], 1, 0.5).unwrap();
    assert_eq!(l.len(), 4);
    let l = list_rec(&[0.5, 0.5], 1, 0.5).unwrap();
    assert_eq!(l.len(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bdd_within_packing_radius(t in 2u32..=7, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1usize << t;
        let rho2 = params(t).unwrap().rho2;
        let x = sample_point(t, 6, &mut rng).unwrap();
        let y = shift(&x, &noise_of_norm(n, frac * rho2, &mut rng));
        prop_assert_eq!(rec_bdd(&y, t).unwrap(), x);
    }

    #[test]
    fn decoders_are_idempotent(t in 2u32..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1usize << t;
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let x = rec_bdd(&y, t).unwrap();
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        prop_assert_eq!(rec_bdd(&xf, t).unwrap(), x.clone());

        let s = ListSchedule::new(0.375, vec![8]).unwrap();
        let l = list_rec_bounded(&xf, t, &s).unwrap();
        prop_assert_eq!(&l.closest().unwrap().point, &x);
        prop_assert_eq!(l.closest().unwrap().dist2, 0.0);
    }

    #[test]
    fn merge_sort_matches_std(raw in prop::collection::vec(prop::collection::vec(-3i64..3, 4), 0..200)) {
        let mut list = CandidateList::new(vec![0.0; 4]);
        for p in &raw {
            list.push_point(p.clone());
        }
        let got = points(&merge_sort_dedup(list));
        let mut want = raw.clone();
        want.sort();
        want.dedup();
        prop_assert_eq!(got, want);
    }
}
