use espresso::{
    channel_distribution, greedy_entropy_seg, information_gain, knee_point, knee_point_levels, segment_entropy,
    EntropyView, MultiSeries, StopRule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_view() -> impl Strategy<Value = EntropyView> {
    (1usize..6, 4usize..80).prop_flat_map(|(d, n)| {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, n), d)
            .prop_map(|rows| EntropyView::new(&MultiSeries::new(rows).unwrap()))
    })
}

fn segment() -> impl Strategy<Value = (EntropyView, usize, usize)> {
    random_view().prop_flat_map(|v| {
        let n = v.len();
        (0..n).prop_flat_map(move |s| (Just(v.clone()), Just(s), s + 1..=n))
    })
}

/// Strictly increasing boundaries drawn from `1..n`.
fn pick_boundaries(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    let mut b: Vec<usize> = (0..count).map(|_| rng.gen_range(1..n)).collect();
    b.sort_unstable();
    b.dedup();
    b
}

fn naive_entropy(view: &EntropyView, start: usize, end: usize) -> f64 {
    let areas: Vec<f64> = view.shifted().iter().map(|r| r[start..end].iter().sum()).collect();
    let total: f64 = areas.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    areas
        .iter()
        .filter(|&&a| a > 0.0)
        .map(|a| {
            let p = a / total;
            -p * p.log2()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn entropy_stays_in_bounds((view, s, e) in segment()) {
        let h = segment_entropy(&view, s, e).unwrap();
        prop_assert!(h.bits >= 0.0);
        prop_assert!(h.bits <= (view.n_channels() as f64).log2());
        if let Some(p) = channel_distribution(&view, s, e).unwrap() {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn prefix_areas_match_naive_sums((view, s, e) in segment()) {
        for j in 0..view.n_channels() {
            let naive: f64 = view.shifted()[j][s..e].iter().sum();
            prop_assert!((view.area(j, s, e) - naive).abs() <= 1e-9 * (1.0 + naive.abs()));
        }
        let h = segment_entropy(&view, s, e).unwrap().bits;
        prop_assert!((h - naive_entropy(&view, s, e)).abs() <= 1e-9);
    }

    #[test]
    fn shifted_view_is_nonnegative(view in random_view()) {
        for row in view.shifted() {
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn greedy_is_deterministic(view in random_view(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cands = pick_boundaries(&mut rng, view.len(), 8);
        let a = greedy_entropy_seg(&view, &cands, StopRule::Exhaust).unwrap();
        let b = greedy_entropy_seg(&view, &cands, StopRule::Exhaust).unwrap();
        prop_assert_eq!(&a, &b);
        for w in a.ig_trace.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert!(a.boundaries.iter().all(|b| cands.contains(b)));
    }
}

#[test]
fn refinement_never_lowers_information_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    for _ in 0..10_000 {
        let d = rng.gen_range(1..6);
        let n = rng.gen_range(3..60);
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let view = EntropyView::new(&MultiSeries::new(rows).unwrap());
        let count = rng.gen_range(0..5);
        let coarse = pick_boundaries(&mut rng, n, count);
        let mut fine = coarse.clone();
        fine.push(rng.gen_range(1..n));
        fine.sort_unstable();
        fine.dedup();
        let before = information_gain(&view, &coarse).unwrap();
        let after = information_gain(&view, &fine).unwrap();
        if after < before - 1e-12 {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

/// Best gain over all subsets of `cands` with exactly `size` elements.
fn best_subset_gain(view: &EntropyView, cands: &[usize], size: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << cands.len()) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let subset: Vec<usize> = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| cands[i]).collect();
        best = best.max(information_gain(view, &subset).unwrap());
    }
    best
}

#[test]
fn greedy_tracks_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials = 300;
    let mut good = 0;
    for _ in 0..trials {
        let d = rng.gen_range(2..5);
        let n = rng.gen_range(30..90);
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                let level = rng.gen_range(0.0..3.0);
                (0..n).map(|_| level + rng.gen_range(0.0..2.0)).collect()
            })
            .collect();
        let view = EntropyView::new(&MultiSeries::new(rows).unwrap());
        let cands = pick_boundaries(&mut rng, n, 12);
        let k = rng.gen_range(2..=3);
        let greedy = greedy_entropy_seg(&view, &cands, StopRule::Segments(k)).unwrap();

        let first = greedy_entropy_seg(&view, &cands, StopRule::Segments(2)).unwrap();
        assert!(first.final_gain() >= best_subset_gain(&view, &cands, 1) - 1e-12);

        let best = best_subset_gain(&view, &cands, k - 1);
        if best <= 0.0 || greedy.final_gain() >= 0.9 * best {
            good += 1;
        }
    }
    let share = good as f64 / trials as f64;
    println!("greedy within 90% of exhaustive optimum on {good}/{trials} instances");
    assert!(share >= 0.9);
}

#[test]
fn boundary_candidate_beats_homogeneous_ones() {
    let n = 60;
    let rows = vec![
        (0..n).map(|i| if i < 30 { 1.0 } else { 0.0 }).collect(),
        (0..n).map(|i| if i < 30 { 0.0 } else { 1.0 }).collect(),
    ];
    let view = EntropyView::from_nonnegative(rows).unwrap();
    let seg = greedy_entropy_seg(&view, &[10, 20, 30, 40, 50], StopRule::Exhaust).unwrap();
    assert_eq!(seg.order[0], 30);
}

/// Non-decreasing trace whose increments are either exactly 0 or clearly
/// positive, so flat steps stay flat under rescaling.
fn random_trace(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.gen_range(3..12);
    let mut level = 0.0;
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.8) {
                level += rng.gen_range(0.01..5.0);
            }
            level
        })
        .collect()
}

#[test]
fn knee_is_affine_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1_000 {
        let trace = random_trace(&mut rng);
        let scale = rng.gen_range(0.1..100.0);
        let offset = rng.gen_range(-50.0..50.0);
        let mut levels = vec![0.0];
        levels.extend(&trace);
        let moved: Vec<f64> = levels.iter().map(|l| scale * l + offset).collect();
        assert_eq!(knee_point_levels(&levels).unwrap(), knee_point_levels(&moved).unwrap());
        let scaled: Vec<f64> = trace.iter().map(|l| scale * l).collect();
        assert_eq!(knee_point(&trace).unwrap(), knee_point(&scaled).unwrap());
    }
}
