//! p-capacities and equilibrium measures.
//!
//! The workhorse is the tent recursion
//!
//! ```text
//! c(α) = S / (1 + S^{p'-1})^{p-1},   S = Σ_{children β} c(β)
//! ```
//!
//! with `c = 1` on true leaves. `c(α)` is the capacity of the boundary of the
//! tent `T_α` seen from its own root, and the equilibrium co-potential follows
//! top-down as `M(α) = c(α) Π_{γ<α} (1 - c(γ)^{p'-1})^{p-1}`.
//!
//! The recursion is nondecreasing in every child value, so running it with
//! lower and upper bounds on the truncated tents brackets the capacity of the
//! infinite tree.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{abs_pow, signed_power, PExponent, VertexFunction};
use crate::tree::{
    BoundaryMeasure, BoundarySet, Continuation, EdgeFunction, EdgeId, LevelDegrees, Tail, Tree,
    Vertex,
};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityInterval {
    pub lower: f64,
    pub upper: f64,
}

impl CapacityInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(Error::OutOfRange(format!(
                "capacity interval [{lower}, {upper}] is not inside [0, 1]"
            )));
        }
        Ok(CapacityInterval { lower, upper })
    }

    pub fn point(c: f64) -> Self {
        CapacityInterval { lower: c, upper: c }
    }

    /// Orders the endpoints and clamps them into `[0, 1]`.
    fn spanning(a: f64, b: f64) -> Self {
        CapacityInterval {
            lower: a.min(b).clamp(0.0, 1.0),
            upper: a.max(b).clamp(0.0, 1.0),
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lower - slack <= x && x <= self.upper + slack
    }

    pub fn overlaps(&self, other: &CapacityInterval, slack: f64) -> bool {
        self.lower <= other.upper + slack && other.lower <= self.upper + slack
    }
}

/// Boundary condition for tail edges.
#[derive(Clone, Debug, PartialEq)]
pub enum TailPolicy {
    /// Unexplored tents have capacity 0.
    Pessimistic,
    /// Unexplored tents have capacity 1, as if the tail were a true leaf.
    Optimistic,
    /// Caller-supplied tent capacities; tails without an entry use 0.
    Known(BTreeMap<EdgeId, f64>),
    /// Run with certified lower bounds on the tails and with 1, returning the
    /// bracket. Measures come from the optimistic run.
    Certified,
}

/// Capacity `c(n, p) = (1 - n^{1-p'})^{p-1}` of the boundary of the
/// homogeneous tree of degree `n`; 0 for `n < 2`.
pub fn homogeneous_capacity(n: u32, p: PExponent) -> f64 {
    if n < 2 {
        return 0.0;
    }
    abs_pow(1.0 - abs_pow(n as f64, 1.0 - p.conj()), p.p() - 1.0)
}

/// Certified bracket for the capacity of an unexplored tent.
///
/// The tent contains a homogeneous subtree of degree `min_degree`, and no
/// capacity exceeds 1.
pub fn tail_bounds(tail: Tail, p: PExponent) -> (f64, f64) {
    (homogeneous_capacity(tail.min_degree, p), 1.0)
}

/// One step of the branched continued fraction: the capacity of a tent whose
/// root edge has children with total capacity `s`.
#[inline]
pub fn branch_capacity(s: f64, p: PExponent) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if p.is_quadratic() {
        return s / (1.0 + s);
    }
    s / abs_pow(1.0 + abs_pow(s, p.conj() - 1.0), p.p() - 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub p: PExponent,
    pub capacity: CapacityInterval,
    /// Rescaled tent capacities `c(α)`.
    #[serde(rename = "c")]
    pub c_of_alpha: EdgeFunction,
    /// Co-potential `M` of the equilibrium measure.
    #[serde(rename = "M")]
    pub measure: BoundaryMeasure,
    /// Equilibrium function `M_p`.
    #[serde(skip)]
    pub equilibrium_function: EdgeFunction,
}

impl EquilibriumResult {
    /// `I M_p` at every vertex.
    pub fn potential(&self, tree: &Tree) -> VertexFunction {
        VertexFunction::potential_of(tree, &self.equilibrium_function)
    }
}

fn tail_value(tree: &Tree, e: EdgeId, policy: &TailPolicy, p: PExponent, upper: bool) -> Result<f64> {
    let v = match policy {
        TailPolicy::Pessimistic => 0.0,
        TailPolicy::Optimistic => 1.0,
        TailPolicy::Known(map) => map.get(&e).copied().unwrap_or(0.0),
        TailPolicy::Certified => {
            let (lo, hi) = tail_bounds(tree.tail(e).unwrap_or(Tail::UNKNOWN), p);
            if upper {
                hi
            } else {
                lo
            }
        }
    };
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidTailValue { edge: e, value: v });
    }
    Ok(v)
}

fn tent_capacities(tree: &Tree, p: PExponent, policy: &TailPolicy, upper: bool) -> Result<EdgeFunction> {
    let mut c = EdgeFunction::zeros(tree);
    for e in tree.bottom_up() {
        let kids = tree.children(e);
        let v = if kids.is_empty() {
            if tree.is_tail(e) {
                tail_value(tree, e, policy, p, upper)?
            } else {
                1.0
            }
        } else {
            branch_capacity(kids.iter().map(|&k| c.get(k)).sum(), p)
        };
        c.set(e, v);
    }
    Ok(c)
}

fn measure_from_tent_capacities(tree: &Tree, c: &EdgeFunction, p: PExponent) -> EdgeFunction {
    let mut m = EdgeFunction::zeros(tree);
    let mut factor = vec![1.0; tree.len()];
    for &e in tree.top_down() {
        m.set(e, c.get(e) * factor[e.0]);
        let kids = tree.children(e);
        if !kids.is_empty() {
            // 1 - c^{p'-1} = 1 / (1 + S^{p'-1}); no cancellation when c is near 1
            let s: f64 = kids.iter().map(|&k| c.get(k)).sum();
            let shrink = abs_pow(1.0 + abs_pow(s, p.conj() - 1.0), 1.0 - p.p());
            for &k in kids {
                factor[k.0] = factor[e.0] * shrink;
            }
        }
    }
    m
}

/// Equilibrium measure of the whole boundary by the tent recursion.
pub fn capacity_recursive(tree: &Tree, p: PExponent, policy: &TailPolicy) -> Result<EquilibriumResult> {
    let c = tent_capacities(tree, p, policy, true)?;
    let m = measure_from_tent_capacities(tree, &c, p);
    let top = c.get(tree.root());
    let capacity = match policy {
        TailPolicy::Certified if tree.tails().next().is_some() => {
            let lower = tent_capacities(tree, p, policy, false)?.get(tree.root());
            CapacityInterval::spanning(lower, top)
        }
        _ => CapacityInterval::point(top),
    };
    Ok(EquilibriumResult {
        p,
        capacity,
        equilibrium_function: signed_power(&m, p),
        measure: BoundaryMeasure::from_trusted(m),
        c_of_alpha: c,
    })
}

/// Certified capacity bracket of the boundary of a possibly truncated tree.
pub fn certified_capacity(tree: &Tree, p: PExponent) -> Result<CapacityInterval> {
    Ok(capacity_recursive(tree, p, &TailPolicy::Certified)?.capacity)
}

/// Equilibrium measure of a set of true leaves, extended by zero to `tree`.
pub fn capacity_of_set(tree: &Tree, set: &BoundarySet, p: PExponent) -> Result<EquilibriumResult> {
    set.validate(tree)?;
    let (sub, origin) = tree.spanned_subtree(set)?;
    let r = capacity_recursive(&sub, p, &TailPolicy::Pessimistic)?;
    let mut c = EdgeFunction::zeros(tree);
    let mut m = EdgeFunction::zeros(tree);
    for e in sub.edges() {
        c.set(origin[e.0], r.c_of_alpha.get(e));
        m.set(origin[e.0], r.measure.get(e));
    }
    Ok(EquilibriumResult {
        p,
        capacity: r.capacity,
        equilibrium_function: signed_power(&m, p),
        measure: BoundaryMeasure::from_trusted(m),
        c_of_alpha: c,
    })
}

/// Restriction of an equilibrium measure to a tent, rescaled by `k`.
#[derive(Clone, Debug)]
pub struct RescaledTent {
    pub k: f64,
    pub tent: Tree,
    /// Original id of every tent edge.
    pub origin: Vec<EdgeId>,
    pub measure: BoundaryMeasure,
}

/// `k_α = (1 - I M_p(b(α)))^{-p/p'}` and the rescaled restriction
/// `k_α μ|_{∂T_α}`, which is the equilibrium measure of `E ∩ ∂T_α` in `T_α`.
pub fn rescaling_constant(tree: &Tree, result: &EquilibriumResult, alpha: EdgeId) -> Result<RescaledTent> {
    tree.check(alpha)?;
    let p = result.p;
    let gap = VertexFunction::potential_of(tree, &result.equilibrium_function).deficit(1.0, tree.begin(alpha));
    if !(gap > 0.0) {
        return Err(Error::PotentialBound {
            vertex: tree.begin(alpha),
            potential: 1.0 - gap,
        });
    }
    // On charged edges `c(α) = M(α) k`, which avoids the subtraction.
    let mass = result.measure.get(alpha);
    let k = if mass > 0.0 {
        result.c_of_alpha.get(alpha) / mass
    } else {
        abs_pow(gap, -(p.p() - 1.0))
    };
    let (tent, origin) = tree.tent_mapped(alpha)?;
    let m = EdgeFunction::from_fn(&tent, |e| k * result.measure.get(origin[e.0]));
    Ok(RescaledTent {
        k,
        tent,
        origin,
        measure: BoundaryMeasure::from_trusted(m),
    })
}

fn require_sequence(degrees: &LevelDegrees) -> Result<()> {
    if degrees.prefix.is_empty() && degrees.then == Continuation::Finite {
        return Err(Error::InvalidSpec("empty degree sequence".into()));
    }
    Ok(())
}

/// Capacity of the boundary of a spherically symmetric tree from the series
/// `(Σ_k card{|β| = k}^{1-p'})^{1-p}`.
///
/// The first `depth` terms are summed exactly. The remainder is bounded below
/// by 0 and above by a geometric series in the smallest degree that can
/// occur later; a constant continuation makes it exact.
pub fn symmetric_capacity(degrees: &LevelDegrees, p: PExponent, depth: usize) -> Result<CapacityInterval> {
    require_sequence(degrees)?;
    let e = 1.0 - p.conj();
    let mut sum = 0.0;
    let mut card = 1.0f64;
    let mut k = 0;
    loop {
        sum += abs_pow(card, e);
        let d = match degrees.degree_at(k) {
            Some(0) => return Ok(CapacityInterval::point(abs_pow(sum, 1.0 - p.p()))),
            Some(d) => d,
            None => break,
        };
        if degrees.is_infinite() && k + 1 >= depth.max(1) && k + 1 >= degrees.prefix.len() {
            break;
        }
        card *= d as f64;
        k += 1;
    }
    // remaining terms are those of levels > k; `card` is the level-k count
    let (remainder, exact) = match degrees.then {
        Continuation::Constant(n) => (geometric_tail(card, n, e), true),
        Continuation::AtLeast(n) => (geometric_tail(card, n, e), false),
        Continuation::Finite => unreachable!("finite sequences return above"),
    };
    let upper = abs_pow(sum, 1.0 - p.p());
    let lower = if remainder.is_finite() {
        abs_pow(sum + remainder, 1.0 - p.p())
    } else {
        0.0
    };
    Ok(if exact {
        CapacityInterval::point(lower)
    } else {
        CapacityInterval::spanning(lower, upper)
    })
}

/// `Σ_{j≥1} (card · n^j)^e` for `e < 0`; infinite when `n < 2`.
fn geometric_tail(card: f64, n: u32, e: f64) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    let r = abs_pow(n as f64, e);
    abs_pow(card, e) * r / (1.0 - r)
}

/// The tent recursion on a spherically symmetric tree, one value per level.
///
/// All tents rooted at one level are isomorphic, so this is the arena
/// recursion with the sibling sum replaced by `degree · c(next level)`. It
/// handles truncation depths whose arena would not fit in memory. Levels
/// reaching `depth` are tails with certified bounds.
pub fn capacity_by_levels(degrees: &LevelDegrees, p: PExponent, depth: usize) -> Result<CapacityInterval> {
    require_sequence(degrees)?;
    let depth = depth.max(1);
    let mut level_degrees = Vec::new();
    let (lo, hi) = loop {
        let k = level_degrees.len();
        match degrees.degree_at(k) {
            Some(0) => break (1.0, 1.0),
            Some(d) if k < depth => level_degrees.push(d),
            _ => {
                let tail = Tail {
                    min_degree: degrees.min_from(k).max(1),
                };
                break tail_bounds(tail, p);
            }
        }
    };
    let fold = |start: f64| {
        level_degrees
            .iter()
            .rev()
            .fold(start, |c, &d| branch_capacity(d as f64 * c, p))
    };
    Ok(CapacityInterval::spanning(fold(lo), fold(hi)))
}

/// Effective resistances for `p = 2` with unit resistors on every edge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResistanceReport {
    /// Resistance between `o` and the grounded boundary.
    pub from_root_vertex: Interval,
    /// Resistance between `e(ω)` and the grounded boundary; the `R` of
    /// `R` in `capacity = 1 / (1 + R)`.
    pub beyond_root_edge: Interval,
    /// `1 / (1 + R)` for the bracket above.
    pub capacity: CapacityInterval,
    /// `R(α)`: resistance between `e(α)` and the boundary of `T_α`, from the
    /// optimistic (or fixed-policy) run. Zero at true leaves.
    pub per_edge: EdgeFunction,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

fn series_parallel(tree: &Tree, policy: &TailPolicy, upper_capacity: bool) -> Result<EdgeFunction> {
    // resistance from b(α) through α; a tent of capacity c has resistance 1/c
    let mut through = EdgeFunction::zeros(tree);
    for e in tree.bottom_up() {
        let kids = tree.children(e);
        let r = if kids.is_empty() {
            if tree.is_tail(e) {
                1.0 / tail_value(tree, e, policy, PExponent::TWO, upper_capacity)?
            } else {
                1.0
            }
        } else {
            let conductance: f64 = kids.iter().map(|&k| 1.0 / through.get(k)).sum();
            1.0 + 1.0 / conductance
        };
        through.set(e, r);
    }
    Ok(through)
}

/// Series-parallel reduction of the tree as a unit-resistor network with the
/// boundary grounded. Tails stand for tents of capacity `c`, i.e. resistance
/// `1/c` measured from their beginning vertex.
pub fn total_resistance(tree: &Tree, policy: &TailPolicy) -> Result<ResistanceReport> {
    let through = series_parallel(tree, policy, true)?;
    let root = tree.root();
    let small = through.get(root);
    let large = match policy {
        TailPolicy::Certified if tree.tails().next().is_some() => {
            series_parallel(tree, policy, false)?.get(root)
        }
        _ => small,
    };
    let (lo, hi) = (small.min(large), small.max(large));
    Ok(ResistanceReport {
        from_root_vertex: Interval { lower: lo, upper: hi },
        beyond_root_edge: Interval {
            lower: lo - 1.0,
            upper: hi - 1.0,
        },
        capacity: CapacityInterval::spanning(1.0 / hi, 1.0 / lo),
        per_edge: through.map(|r| r - 1.0),
    })
}

/// `1 - I M_p(b(α))` for every edge, without cancellation.
pub(crate) fn gap_at_begin(tree: &Tree, mp: &EdgeFunction) -> EdgeFunction {
    let g = VertexFunction::potential_of(tree, mp);
    EdgeFunction::from_fn(tree, |e| g.deficit(1.0, tree.begin(e)))
}

/// Convenience: vertex potential of the equilibrium function at a leaf.
pub fn equilibrium_potential_at(tree: &Tree, result: &EquilibriumResult, leaf: EdgeId) -> Result<f64> {
    crate::potential::potential(tree, &result.equilibrium_function, Vertex::End(leaf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::TreeSpec;

    fn cherry() -> Tree {
        Tree::from_parents(&[None, Some(0), Some(0)]).unwrap()
    }

    #[test]
    fn cherry_equilibrium() {
        let t = cherry();
        let r = capacity_recursive(&t, PExponent::TWO, &TailPolicy::Pessimistic).unwrap();
        assert_eq!(r.capacity.lower, 2.0 / 3.0);
        let m = r.measure.co_potential().as_slice();
        assert_eq!(m[0], 2.0 / 3.0);
        assert_eq!(m[1], 1.0 / 3.0);
        assert_eq!(m[2], 1.0 / 3.0);
        assert_eq!(r.c_of_alpha.get(EdgeId(1)), 1.0);
    }

    #[test]
    fn single_edge_has_capacity_one() {
        let t = Tree::path(1).unwrap();
        let r = capacity_recursive(&t, PExponent::new(3.0).unwrap(), &TailPolicy::Pessimistic).unwrap();
        assert_eq!(r.capacity, CapacityInterval::point(1.0));
        assert_eq!(r.measure.mass(&t), 1.0);
    }

    #[test]
    fn path_capacity_matches_single_point_formula() {
        for p in [1.5, 2.0, 3.0] {
            let p = PExponent::new(p).unwrap();
            for k in 1..=12 {
                let t = Tree::path(k).unwrap();
                let c = capacity_recursive(&t, p, &TailPolicy::Pessimistic).unwrap().capacity.lower;
                let expected = (k as f64).powf(1.0 - p.p());
                assert!((c - expected).abs() < 1e-12, "k={k} p={p}: {c} vs {expected}");
            }
        }
    }

    #[test]
    fn tail_values_are_checked() {
        let t = Tree::build(&TreeSpec::Homogeneous { degree: 2 }, Some(2)).unwrap();
        let mut map = BTreeMap::new();
        map.insert(EdgeId(3), 1.5);
        let err = capacity_recursive(&t, PExponent::TWO, &TailPolicy::Known(map)).unwrap_err();
        assert!(matches!(err, Error::InvalidTailValue { .. }));
    }

    #[test]
    fn tail_policies_bracket() {
        let t = Tree::build(&TreeSpec::Homogeneous { degree: 2 }, Some(8)).unwrap();
        let p = PExponent::TWO;
        let lo = capacity_recursive(&t, p, &TailPolicy::Pessimistic).unwrap().capacity.lower;
        let hi = capacity_recursive(&t, p, &TailPolicy::Optimistic).unwrap().capacity.upper;
        let cert = certified_capacity(&t, p).unwrap();
        assert_eq!(lo, 0.0);
        assert!(lo <= cert.lower && cert.upper <= hi);
        assert!(cert.contains(0.5, 1e-15));
    }

    #[test]
    fn homogeneous_closed_form() {
        assert!((homogeneous_capacity(2, PExponent::TWO) - 0.5).abs() < 1e-15);
        let p3 = PExponent::new(3.0).unwrap();
        let expected = (1.0 - 2f64.powf(-0.5)).powi(2);
        assert!((homogeneous_capacity(2, p3) - expected).abs() < 1e-15);
        assert_eq!(homogeneous_capacity(1, p3), 0.0);
    }

    #[test]
    fn symmetric_series() {
        let p = PExponent::TWO;
        let h = LevelDegrees::homogeneous(2).unwrap();
        assert!((symmetric_capacity(&h, p, 1).unwrap().lower - 0.5).abs() < 1e-15);
        assert!((symmetric_capacity(&h, p, 30).unwrap().upper - 0.5).abs() < 1e-14);
        for (n, pp) in [(3u32, 2.0), (2, 3.0), (4, 1.5)] {
            let p = PExponent::new(pp).unwrap();
            let d = LevelDegrees::homogeneous(n).unwrap();
            let c = symmetric_capacity(&d, p, 5).unwrap();
            assert!((c.lower - homogeneous_capacity(n, p)).abs() < 1e-14);
        }
        // finite path of 4 edges
        let path = LevelDegrees::new(vec![1, 1, 1], Continuation::Finite).unwrap();
        assert!((symmetric_capacity(&path, p, 1).unwrap().lower - 0.25).abs() < 1e-15);
        // a ray has capacity zero
        let ray = LevelDegrees::new(vec![], Continuation::Constant(1)).unwrap();
        assert_eq!(symmetric_capacity(&ray, p, 4).unwrap(), CapacityInterval::point(0.0));
        // lower bounds only
        let open = LevelDegrees::new(vec![2, 3], Continuation::AtLeast(2)).unwrap();
        let c = symmetric_capacity(&open, p, 6).unwrap();
        assert!(c.width() > 0.0);
        let unknown = LevelDegrees::new(vec![2, 3], Continuation::AtLeast(1)).unwrap();
        assert_eq!(symmetric_capacity(&unknown, p, 6).unwrap().lower, 0.0);
        assert!(symmetric_capacity(&LevelDegrees::new(vec![], Continuation::Finite).unwrap(), p, 3).is_err());
    }

    #[test]
    fn level_recursion_agrees_with_arena() {
        let p = PExponent::new(2.5).unwrap();
        let spec = TreeSpec::SphericallySymmetric {
            degrees: vec![1, 3, 2, 1],
            then: Some(2),
        };
        let degrees = spec.level_degrees().unwrap().unwrap();
        for depth in [3, 6, 9] {
            let t = Tree::build(&spec, Some(depth)).unwrap();
            let arena = certified_capacity(&t, p).unwrap();
            let levels = capacity_by_levels(&degrees, p, depth).unwrap();
            assert!((arena.lower - levels.lower).abs() < 1e-14);
            assert!((arena.upper - levels.upper).abs() < 1e-14);
        }
        let series = symmetric_capacity(&degrees, p, 10).unwrap();
        let levels = capacity_by_levels(&degrees, p, 30).unwrap();
        assert!(levels.contains(series.lower, 1e-12));
    }

    #[test]
    fn resistance_of_simple_trees() {
        let single = Tree::path(1).unwrap();
        let r = total_resistance(&single, &TailPolicy::Pessimistic).unwrap();
        assert_eq!(r.from_root_vertex.lower, 1.0);
        assert_eq!(r.beyond_root_edge.lower, 0.0);
        assert_eq!(r.capacity.lower, 1.0);

        let c = cherry();
        let r = total_resistance(&c, &TailPolicy::Pessimistic).unwrap();
        assert_eq!(r.from_root_vertex.lower, 1.5);
        assert!((r.capacity.lower - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rescaling_cherry() {
        let t = cherry();
        let r = capacity_recursive(&t, PExponent::TWO, &TailPolicy::Pessimistic).unwrap();
        assert_eq!(rescaling_constant(&t, &r, EdgeId(0)).unwrap().k, 1.0);
        let child = rescaling_constant(&t, &r, EdgeId(1)).unwrap();
        assert!((child.k - 3.0).abs() < 1e-14);
        assert!((child.measure.mass(&child.tent) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_rescaling_is_an_error() {
        // a measure whose potential already reaches 1 at e(ω)
        let t = Tree::path(2).unwrap();
        let m = EdgeFunction::from_vec(vec![1.0, 1.0]);
        let fake = EquilibriumResult {
            p: PExponent::TWO,
            capacity: CapacityInterval::point(1.0),
            c_of_alpha: m.clone(),
            measure: BoundaryMeasure::from_co_potential(&t, m.clone(), 0.0).unwrap(),
            equilibrium_function: m,
        };
        assert!(matches!(
            rescaling_constant(&t, &fake, EdgeId(1)),
            Err(Error::PotentialBound { .. })
        ));
    }
}
