use std::collections::BTreeSet;

use espresso::{
    arc_curve, compute_profile, extract_cac, extract_wcac, find_candidates, smooth, Arc, ArcSet, CandidateConfig,
    ChainThreshold, CurveKind, Error, MultiSeries, ProfilePair, ShapeCurve, SubseqSpec,
};
use proptest::prelude::*;

fn profile_of(values: Vec<f64>, l: usize) -> ProfilePair {
    let s = MultiSeries::new(vec![values]).unwrap();
    compute_profile(&s, 0, &SubseqSpec::new(l).unwrap()).unwrap()
}

fn random_profile() -> impl Strategy<Value = ProfilePair> {
    (prop::sample::select(vec![4usize, 8]), 40usize..160)
        .prop_flat_map(|(l, n)| prop::collection::vec(-5.0f64..5.0, n).prop_map(move |v| profile_of(v, l)))
}

/// A profile plus an arbitrary arc set fitting its curve length.
fn profile_and_arcs() -> impl Strategy<Value = (ProfilePair, ArcSet)> {
    random_profile().prop_flat_map(|p| {
        let len = p.len();
        let radius = p.spec.exclusion_radius;
        let spec = p.spec;
        let arc = (0..len, 0..len, 0.0f64..10.0, 1usize..5)
            .prop_filter("outside exclusion zone", move |(a, b, _, _)| a.abs_diff(*b) >= radius.max(1))
            .prop_map(|(src, dst, chain_distance, hop_count)| Arc {
                src,
                dst,
                chain_distance,
                hop_count,
            });
        (Just(p), prop::collection::vec(arc, 0..40).prop_map(move |arcs| ArcSet { arcs, spec }))
    })
}

fn naive_wcac(len: usize, arcs: &ArcSet) -> Vec<f64> {
    (0..len)
        .map(|t| {
            arcs.arcs
                .iter()
                .filter(|a| a.src.min(a.dst) <= t && t <= a.src.max(a.dst))
                .map(|a| a.chain_distance / (a.src.abs_diff(a.dst) as f64 / len as f64))
                .sum()
        })
        .collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn wcac_matches_naive_reference((p, arcs) in profile_and_arcs()) {
        let curve = extract_wcac(&p, &arcs).unwrap();
        prop_assert_eq!(curve.kind, CurveKind::Wcac);
        prop_assert!(close(&curve.values, &naive_wcac(p.len(), &arcs), 1e-9));
    }

    #[test]
    fn wcac_of_chained_arcs_matches_naive_reference(p in random_profile(), beta in 0.0f64..6.0) {
        let arcs = extract_cac(&p, ChainThreshold::MedianMultiple(beta));
        let curve = extract_wcac(&p, &arcs).unwrap();
        prop_assert!(close(&curve.values, &naive_wcac(p.len(), &arcs), 1e-9));
    }

    #[test]
    fn arc_curve_counts_unique_nearest_neighbour_links(p in random_profile()) {
        let pairs: BTreeSet<(usize, usize)> =
            p.mpi.iter().enumerate().map(|(i, &j)| (i.min(j), i.max(j))).collect();
        let expected: Vec<f64> = (0..p.len())
            .map(|t| pairs.iter().filter(|(lo, hi)| *lo <= t && t <= *hi).count() as f64)
            .collect();
        prop_assert_eq!(arc_curve(&p).values, expected);
    }

    #[test]
    fn chained_arcs_respect_invariants(p in random_profile(), beta in 0.0f64..6.0) {
        let arcs = extract_cac(&p, ChainThreshold::MedianMultiple(beta));
        let direct: BTreeSet<(usize, usize)> =
            p.mpi.iter().enumerate().map(|(i, &j)| (i.min(j), i.max(j))).collect();
        let hop1: BTreeSet<(usize, usize)> =
            arcs.arcs.iter().filter(|a| a.hop_count == 1).map(|a| a.span()).collect();
        prop_assert_eq!(&hop1, &direct);
        let mut seen = BTreeSet::new();
        for a in &arcs.arcs {
            prop_assert!(seen.insert(a.span()), "duplicate arc {:?}", a.span());
            prop_assert!(a.temporal_distance() >= p.spec.exclusion_radius);
            if a.hop_count == 1 {
                prop_assert_eq!(a.chain_distance, p.mp[a.src]);
            }
        }
    }

    #[test]
    fn removing_an_arc_never_raises_the_curve((p, arcs) in profile_and_arcs(), pick in any::<prop::sample::Index>()) {
        prop_assume!(!arcs.is_empty());
        let full = extract_wcac(&p, &arcs).unwrap().values;
        let mut fewer = arcs.clone();
        fewer.arcs.remove(pick.index(arcs.len()));
        let less = extract_wcac(&p, &fewer).unwrap().values;
        for (hi, lo) in full.iter().zip(&less) {
            prop_assert!(*lo <= *hi + 1e-9 * (1.0 + hi.abs()));
        }
    }

    #[test]
    fn curves_survive_affine_rescaling(
        values in prop::collection::vec(-5.0f64..5.0, 60..160),
        scale in 0.2f64..10.0,
        offset in -20.0f64..20.0,
    ) {
        let moved: Vec<f64> = values.iter().map(|v| scale * v + offset).collect();
        let (a, b) = (profile_of(values, 8), profile_of(moved, 8));
        prop_assume!(a.mpi == b.mpi);
        prop_assert_eq!(arc_curve(&a).values, arc_curve(&b).values);
        let wa = extract_wcac(&a, &extract_cac(&a, ChainThreshold::default())).unwrap();
        let wb = extract_wcac(&b, &extract_cac(&b, ChainThreshold::default())).unwrap();
        prop_assert!(close(&wa.values, &wb.values, 1e-7));
    }

    #[test]
    fn candidates_are_separated_local_minima(
        values in prop::collection::vec(0.0f64..10.0, 10..120),
        width in 1usize..8,
        margin in 0usize..6,
        min_gap in 1usize..8,
    ) {
        let curve = ShapeCurve { values: values.clone(), kind: CurveKind::Wcac, candidates: Vec::new() };
        let cfg = CandidateConfig { smoothing_width: width, margin, min_gap };
        match find_candidates(&curve, &cfg) {
            Ok(c) => {
                let s = smooth(&values, width);
                for w in c.windows(2) {
                    prop_assert!(w[1] >= w[0] + min_gap);
                }
                for &i in &c {
                    prop_assert!(i >= margin.max(1) && i + margin.max(1) < values.len());
                    prop_assert!(s[i] <= s[i - 1] && s[i] <= s[i + 1]);
                }
            }
            Err(e) => prop_assert_eq!(e, Error::NoCandidates),
        }
    }
}
