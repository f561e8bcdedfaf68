//! Trees and boundary sets of prescribed capacity.

use serde::Serialize;

use crate::capacity::{
    capacity_recursive, homogeneous_capacity, symmetric_capacity, CapacityInterval, TailPolicy,
};
use crate::error::{Error, Result};
use crate::potential::{abs_pow, PExponent};
use crate::tree::{BoundarySet, EdgeId, Tail, Tree, TreeSpec};

/// Greedy expansion `λ ≈ Σ_j n_j B^j` with `0 < B < 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DigitExpansion {
    pub base: f64,
    pub target: f64,
    pub digits: Vec<u64>,
    /// `λ - Σ_j n_j B^j`, in `[0, B^{last index})`.
    pub remainder: f64,
}

impl DigitExpansion {
    pub fn value(&self) -> f64 {
        let mut w = 1.0;
        let mut sum = 0.0;
        for &n in &self.digits {
            sum += n as f64 * w;
            w *= self.base;
        }
        sum
    }
}

/// Largest `n` with `n · w ≤ r`, guarding against rounding in the division.
fn greedy_step(r: f64, w: f64) -> u64 {
    let mut n = (r / w).floor().max(0.0);
    while n > 0.0 && n * w > r {
        n -= 1.0;
    }
    while (n + 1.0) * w <= r {
        n += 1.0;
    }
    n as u64
}

/// Digits `n_0, …, n_count` of the greedy expansion: `n_0 = ⌊λ⌋` and
/// `n_j = ⌊r_{j-1} / B^j⌋`. Stopping after `n_count` leaves a remainder
/// below `B^count`.
pub fn greedy_digits(lambda: f64, base: f64, count: usize) -> Result<DigitExpansion> {
    if !(base > 0.0 && base < 1.0) {
        return Err(Error::OutOfRange(format!("digit base {base} must lie in (0, 1)")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::OutOfRange(format!("expansion target {lambda} must be positive")));
    }
    let mut digits = Vec::with_capacity(count + 1);
    let mut r = lambda;
    let mut w = 1.0;
    for _ in 0..=count {
        let n = greedy_step(r, w);
        r -= n as f64 * w;
        digits.push(n);
        w *= base;
    }
    Ok(DigitExpansion {
        base,
        target: lambda,
        digits,
        remainder: r.max(0.0),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubdyadicConstruction {
    pub spec: TreeSpec,
    pub capacity: CapacityInterval,
    pub expansion: DigitExpansion,
}

/// A tree built from unary runs separated by binary levels, continuing
/// dyadically, whose boundary has capacity `c`.
///
/// With `B = 2^{1-p'}` the tree with runs `n_0, n_1, …` has
/// `c^{1-p'} = 1/(1-B) + Σ_j n_j B^j`, so the runs are the greedy digits of
/// `c^{1-p'} - 1/(1-B)`. This is positive exactly when `c < c(2, p)`.
pub fn subdyadic_tree_of_capacity(c: f64, p: PExponent, digit_count: usize) -> Result<SubdyadicConstruction> {
    let dyadic = homogeneous_capacity(2, p);
    if !(c > 0.0 && c < dyadic) {
        return Err(Error::OutOfRange(format!(
            "capacity {c} must lie strictly between 0 and {dyadic}, the capacity of the dyadic tree"
        )));
    }
    let e = 1.0 - p.conj();
    let base = abs_pow(2.0, e);
    let baseline = 1.0 / (1.0 - base);
    let shifted = abs_pow(c, e) - baseline;
    if !(shifted > 0.0) {
        return Err(Error::OutOfRange(format!("capacity {c} is too close to {dyadic}")));
    }
    let expansion = greedy_digits(shifted, base, digit_count)?;
    let spec = TreeSpec::Subdyadic {
        runs: expansion.digits.clone(),
    };
    let capacity = match spec.level_degrees() {
        Ok(Some(degrees)) => symmetric_capacity(&degrees, p, degrees.prefix.len() + 1)?,
        // runs too long to list level by level; same series summed per run
        _ => CapacityInterval::point(abs_pow(baseline + expansion.value(), 1.0 - p.p())),
    };
    Ok(SubdyadicConstruction {
        spec,
        capacity,
        expansion,
    })
}

/// Common number of children of the internal edges, if there is one.
fn homogeneous_degree(tree: &Tree) -> Option<usize> {
    let mut degree = None;
    for e in tree.edges() {
        let k = tree.children(e).len();
        if k == 0 {
            continue;
        }
        match degree {
            None => degree = Some(k),
            Some(d) if d != k => return None,
            _ => {}
        }
    }
    degree
}

/// Child indices along the geodesic to `leaf`: the base-`n` digits of its
/// position `Λ(ζ) = Σ_j i(α_j) n^{-j}` in `[0, 1]`.
pub fn lambda_digits(tree: &Tree, leaf: EdgeId) -> Result<Vec<u32>> {
    tree.check(leaf)?;
    if !tree.is_leaf(leaf) {
        return Err(Error::NotALeaf(leaf));
    }
    if homogeneous_degree(tree).is_none() && tree.len() > 1 {
        return Err(Error::MalformedTree("digit positions need a homogeneous tree".into()));
    }
    Ok(tree
        .predecessor_path(leaf)?
        .into_iter()
        .skip(1)
        .map(|e| tree.child_index(e).expect("non-root edge") as u32)
        .collect())
}

/// `Σ_j d_j n^{-j}` for digits `d_1, d_2, …`.
pub fn lambda_value(digits: &[u32], n: u32) -> f64 {
    let mut w = 1.0;
    digits.iter().fold(0.0, |acc, &d| {
        w /= n as f64;
        acc + d as f64 * w
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactSet {
    /// Finite homogeneous tree whose leaves address the boundary at the
    /// working depth.
    #[serde(skip)]
    pub tree: Tree,
    pub set: BoundarySet,
    /// Right end of the interval `[0, x]` of positions covered by the set.
    pub x: f64,
    /// Capacity of `{ζ : Λ(ζ) ≤ x}` in the infinite homogeneous tree.
    pub capacity: CapacityInterval,
    /// Whether the bracket lies within the requested tolerance of the target.
    pub within_tol: bool,
}

/// Positions `[0, x]` in the infinite tree of degree `n`, resolved to the
/// first `count` leaves at `depth`.
struct Prefixes {
    tree: Tree,
    leaves: Vec<EdgeId>,
    n: u32,
    p: PExponent,
}

impl Prefixes {
    fn new(n: u32, p: PExponent, depth: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec("degree must be at least 2".into()));
        }
        if depth == 0 {
            return Err(Error::InvalidSpec("depth must be positive".into()));
        }
        let tree = Tree::build(&TreeSpec::Homogeneous { degree: n }, Some(depth))?.without_tails();
        let leaves: Vec<EdgeId> = tree.top_down().iter().copied().filter(|&e| tree.is_leaf(e)).collect();
        Ok(Prefixes { tree, leaves, n, p })
    }

    fn set(&self, count: usize) -> BoundarySet {
        self.leaves[..count].iter().copied().collect()
    }

    fn x(&self, count: usize) -> f64 {
        count as f64 / self.leaves.len() as f64
    }

    /// Capacity of the infinite-tree boundary below the first `count`
    /// leaves. Below the working depth every tent is a full homogeneous tree
    /// of known capacity, so the value is exact up to rounding.
    fn capacity(&self, count: usize) -> Result<CapacityInterval> {
        if count == 0 {
            return Ok(CapacityInterval::point(0.0));
        }
        let (sub, _) = self.tree.spanned_subtree(&self.set(count))?;
        let tent = homogeneous_capacity(self.n, self.p);
        let tails: Vec<(EdgeId, Tail)> = sub.leaves().map(|e| (e, Tail { min_degree: self.n })).collect();
        let known = tails.iter().map(|&(e, _)| (e, tent)).collect();
        let sub = sub.with_tails(&tails)?;
        Ok(capacity_recursive(&sub, self.p, &TailPolicy::Known(known))?.capacity)
    }
}

/// A set `{ζ : Λ(ζ) ≤ x}` of capacity `t` in the homogeneous tree of degree
/// `n`, found by bisection on the number of leaves at `depth`.
pub fn compact_set_of_capacity(n: u32, p: PExponent, t: f64, tol: f64, depth: usize) -> Result<CompactSet> {
    let prefixes = Prefixes::new(n, p, depth)?;
    let total = prefixes.leaves.len();
    if !(t >= 0.0) {
        return Err(Error::OutOfRange(format!("target capacity {t} is negative")));
    }
    let full = prefixes.capacity(total)?;
    if t > full.upper + tol {
        return Err(Error::OutOfRange(format!(
            "target capacity {t} exceeds {} at depth {depth}",
            full.upper
        )));
    }
    let done = |count: usize, c: CapacityInterval| CompactSet {
        tree: prefixes.tree.clone(),
        set: prefixes.set(count),
        x: prefixes.x(count),
        capacity: c,
        within_tol: (c.midpoint() - t).abs() <= tol + 0.5 * c.width(),
    };
    if t == 0.0 {
        return Ok(done(0, CapacityInterval::point(0.0)));
    }
    if t >= full.midpoint() {
        return Ok(done(total, full));
    }
    // smallest count whose midpoint reaches t
    let (mut lo, mut hi) = (0usize, total);
    let mut hi_cap = full;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let c = prefixes.capacity(mid)?;
        if c.midpoint() >= t {
            hi = mid;
            hi_cap = c;
        } else {
            lo = mid;
        }
    }
    let lo_cap = prefixes.capacity(lo)?;
    Ok(if (lo_cap.midpoint() - t).abs() < (hi_cap.midpoint() - t).abs() {
        done(lo, lo_cap)
    } else {
        done(hi, hi_cap)
    })
}

/// Samples `x ↦ capacity of {ζ : Λ(ζ) ≤ x}` at `samples + 1` evenly spaced
/// leaf counts.
pub fn capacity_curve(n: u32, p: PExponent, depth: usize, samples: usize) -> Result<Vec<(f64, CapacityInterval)>> {
    let prefixes = Prefixes::new(n, p, depth)?;
    let total = prefixes.leaves.len();
    let samples = samples.clamp(1, total);
    (0..=samples)
        .map(|i| {
            let count = i * total / samples;
            Ok((prefixes.x(count), prefixes.capacity(count)?))
        })
        .collect()
}
