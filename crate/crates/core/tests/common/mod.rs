#![allow(dead_code)]

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treecap::{BoundaryMeasure, BoundarySet, EdgeId, PExponent, Tree};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random recursive tree: edge `i` hangs from a uniformly chosen earlier edge.
pub fn random_tree(rng: &mut impl Rng, max_edges: usize) -> Tree {
    let n = rng.gen_range(1..=max_edges);
    let parents: Vec<Option<usize>> = (0..n)
        .map(|i| if i == 0 { None } else { Some(rng.gen_range(0..i)) })
        .collect();
    Tree::from_parents(&parents).unwrap()
}

/// Tree in which every non-leaf edge has 2 or 3 children.
pub fn branching_tree(rng: &mut impl Rng, max_edges: usize) -> Tree {
    let target = rng.gen_range(3..=max_edges.max(3));
    let mut parents: Vec<Option<usize>> = vec![None];
    let mut leaves = vec![0usize];
    while parents.len() + 3 <= target || parents.len() == 1 {
        let pick = rng.gen_range(0..leaves.len());
        let leaf = leaves.swap_remove(pick);
        for _ in 0..rng.gen_range(2..=3) {
            leaves.push(parents.len());
            parents.push(Some(leaf));
        }
    }
    Tree::from_parents(&parents).unwrap()
}

/// Nonempty random subset of the true leaves.
pub fn random_subset(rng: &mut impl Rng, tree: &Tree) -> BoundarySet {
    let leaves: Vec<EdgeId> = tree.true_leaves().collect();
    let mut chosen: Vec<EdgeId> = leaves.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    if chosen.is_empty() {
        chosen.push(*leaves.choose(rng).unwrap());
    }
    BoundarySet::new(tree, chosen).unwrap()
}

pub fn random_p(rng: &mut impl Rng) -> PExponent {
    PExponent::new(rng.gen_range(1.2..=4.0)).unwrap()
}

pub fn random_measure(rng: &mut impl Rng, tree: &Tree) -> BoundaryMeasure {
    let leaves: Vec<EdgeId> = tree.leaves().collect();
    BoundaryMeasure::from_leaf_masses(tree, leaves.into_iter().map(|e| (e, rng.gen_range(0.0..1.0)))).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Parent list strategy: edge `i` hangs from an arbitrary earlier edge.
pub fn tree_strategy(max_edges: usize) -> impl Strategy<Value = Tree> {
    prop::collection::vec(any::<prop::sample::Index>(), 0..max_edges).prop_map(|picks| {
        let mut parents = vec![None];
        for (i, pick) in picks.iter().enumerate() {
            parents.push(Some(pick.index(i + 1)));
        }
        Tree::from_parents(&parents).unwrap()
    })
}

/// A tree with a nonempty leaf subset chosen by a bitmask.
pub fn tree_and_set(max_edges: usize) -> impl Strategy<Value = (Tree, BoundarySet)> {
    (tree_strategy(max_edges), any::<u64>()).prop_map(|(tree, bits)| {
        let leaves: Vec<EdgeId> = tree.true_leaves().collect();
        let mut chosen: Vec<EdgeId> = leaves
            .iter()
            .enumerate()
            .filter(|(i, _)| bits >> (i % 64) & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if chosen.is_empty() {
            chosen.push(leaves[(bits as usize) % leaves.len()]);
        }
        let set = BoundarySet::new(&tree, chosen).unwrap();
        (tree, set)
    })
}

pub fn p_strategy() -> impl Strategy<Value = PExponent> {
    (1.2f64..4.0).prop_map(|p| PExponent::new(p).unwrap())
}
