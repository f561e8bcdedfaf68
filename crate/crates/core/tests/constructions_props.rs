mod common;

use proptest::prelude::*;
use treecap::constructions::{capacity_curve, lambda_value};
use treecap::{
    capacity_of_set, capacity_oracle, certified_capacity, compact_set_of_capacity, greedy_digits, homogeneous_capacity,
    lambda_digits, subdyadic_tree_of_capacity, BoundarySet, EdgeId, OracleOptions, PExponent, Tree, TreeSpec,
};

proptest! {
    #[test]
    fn greedy_partial_sums_stay_below(lambda in 0.01f64..100.0, base in 0.05f64..0.95, count in 0usize..40) {
        let e = greedy_digits(lambda, base, count).unwrap();
        prop_assert_eq!(e.digits.len(), count + 1);
        let mut sum = 0.0;
        let mut w = 1.0;
        for (k, &n) in e.digits.iter().enumerate() {
            sum += n as f64 * w;
            prop_assert!(sum <= lambda * (1.0 + 1e-15), "partial sum {sum} above {lambda}");
            // remainder after step k is below the weight of that step
            prop_assert!(lambda - sum < w * (1.0 + 1e-9) + 1e-13 * lambda, "step {k}");
            if k > 0 {
                // a digit never exceeds what one more unit of the previous weight allows
                prop_assert!((n as f64) * base < 1.0 + 1e-9);
            }
            w *= base;
        }
        prop_assert!((lambda - e.value()).abs() < base.powi(count as i32) + 1e-13 * lambda);
    }

    #[test]
    fn dyadic_rationals_are_reproduced_exactly(whole in 0u64..50, frac in 0u64..(1 << 20)) {
        let lambda = whole as f64 + frac as f64 / (1u64 << 20) as f64;
        prop_assume!(lambda > 0.0);
        let e = greedy_digits(lambda, 0.5, 20).unwrap();
        prop_assert_eq!(e.value(), lambda);
        prop_assert_eq!(e.remainder, 0.0);
        prop_assert!(e.digits[1..].iter().all(|&d| d <= 1));
    }

    #[test]
    fn subdyadic_trees_hit_their_target(
        frac in 0.0f64..1.0,
        which in 0usize..3,
    ) {
        let p = PExponent::new([2.0, 2.5, 3.0][which]).unwrap();
        let top = homogeneous_capacity(2, p);
        let c = 0.01 + frac * (top - 0.02);
        let r = subdyadic_tree_of_capacity(c, p, 30).unwrap();
        prop_assert!((r.capacity.midpoint() - c).abs() <= 1e-4 + 0.5 * r.capacity.width());
        let slack = r.expansion.base.powi(30);
        prop_assert!(r.capacity.contains(c, slack * 10.0), "{:?} vs {c}", r.capacity);
    }
}

fn runs_of(spec: &TreeSpec) -> &[u64] {
    match spec {
        TreeSpec::Subdyadic { runs } => runs,
        other => panic!("unexpected spec {other:?}"),
    }
}

#[test]
fn subdyadic_series_and_arena_agree() {
    let mut rng = common::rng(3);
    use rand::Rng;
    let mut tight = 0;
    for _ in 0..30 {
        let p = PExponent::new([2.0, 2.5, 3.0][rng.gen_range(0..3)]).unwrap();
        let top = homogeneous_capacity(2, p);
        let c = rng.gen_range(0.3..0.98) * top;
        let r = subdyadic_tree_of_capacity(c, p, 12).unwrap();
        let tree = Tree::build(&r.spec, Some(20)).unwrap();
        let arena = certified_capacity(&tree, p).unwrap();
        assert!(arena.overlaps(&r.capacity, 1e-12), "{arena:?} vs {:?}", r.capacity);
        if arena.width() < 1e-3 {
            tight += 1;
        }
    }
    assert!(tight >= 10, "only {tight} truncations were informative");
}

#[test]
fn one_third_needs_a_single_unary_edge() {
    let r = subdyadic_tree_of_capacity(1.0 / 3.0, PExponent::TWO, 30).unwrap();
    assert_eq!(runs_of(&r.spec)[0], 1);
    assert!(r.capacity.contains(1.0 / 3.0, 1e-14));
    let tree = Tree::build(&r.spec, Some(20)).unwrap();
    let arena = certified_capacity(&tree, PExponent::TWO).unwrap();
    assert!(arena.contains(1.0 / 3.0, 1e-15) && arena.width() < 1e-5);
}

#[test]
fn positions_follow_leaf_order() {
    for n in [2u32, 3] {
        let tree = Tree::build(&TreeSpec::Homogeneous { degree: n }, Some(4)).unwrap().without_tails();
        let leaves: Vec<EdgeId> = tree.top_down().iter().copied().filter(|&e| tree.is_leaf(e)).collect();
        let values: Vec<f64> = leaves.iter().map(|&l| lambda_value(&lambda_digits(&tree, l).unwrap(), n)).collect();
        assert_eq!(values[0], 0.0);
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        let last = *values.last().unwrap();
        assert!((last - (1.0 - (n as f64).powi(-4))).abs() < 1e-15);
    }
}

#[test]
fn capacity_grows_with_the_interval() {
    for p in [1.5, 2.0, 3.0] {
        let p = PExponent::new(p).unwrap();
        let curve = capacity_curve(2, p, 10, 64).unwrap();
        assert_eq!(curve[0].1.upper, 0.0);
        assert!(curve.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1.lower <= w[1].1.lower + 1e-15));
        let end = curve.last().unwrap();
        assert_eq!(end.0, 1.0);
        assert!(end.1.contains(homogeneous_capacity(2, p), 1e-14));
    }
}

#[test]
fn deeper_bisection_does_not_lose_accuracy() {
    let p = PExponent::TWO;
    for t in [0.1, 0.25, 0.4] {
        let mut last = f64::INFINITY;
        for depth in [8, 12, 16] {
            let k = compact_set_of_capacity(2, p, t, 0.0, depth).unwrap();
            let err = (k.capacity.midpoint() - t).abs();
            assert!(err <= last, "t {t} depth {depth}: {err} > {last}");
            last = err;
        }
        assert!(last < 1e-4);
    }
}

#[test]
fn compact_set_capacity_against_the_oracle() {
    // the finite tree one level deeper bounds the infinite value from above
    let p = PExponent::TWO;
    let k = compact_set_of_capacity(2, p, 0.25, 1e-3, 6).unwrap();
    let deep = Tree::build(&TreeSpec::Homogeneous { degree: 2 }, Some(10)).unwrap().without_tails();
    let leaves: Vec<EdgeId> = deep.top_down().iter().copied().filter(|&e| deep.is_leaf(e)).collect();
    let cut = (k.x * leaves.len() as f64).round() as usize;
    let set: BoundarySet = leaves[..cut].iter().copied().collect();
    let oracle = capacity_oracle(&deep, &set, p, &OracleOptions::default()).unwrap();
    let direct = capacity_of_set(&deep, &set, p).unwrap().capacity.lower;
    assert!(common::rel_diff(oracle.value, direct) < 1e-8);
    assert!(oracle.value >= k.capacity.lower && oracle.value - k.capacity.lower < 0.05);
}

#[test]
fn targets_outside_the_range() {
    let p = PExponent::TWO;
    assert!(compact_set_of_capacity(2, p, -0.1, 1e-3, 6).is_err());
    assert!(compact_set_of_capacity(2, p, 0.9, 1e-3, 6).is_err());
    assert!(compact_set_of_capacity(1, p, 0.1, 1e-3, 6).is_err());
    assert!(subdyadic_tree_of_capacity(homogeneous_capacity(2, p), p, 10).is_err());
}
