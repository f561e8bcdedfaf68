use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{EdgeId, Tree};
use crate::error::{Error, Result};

/// A real function on the edges of a tree. Entries outside the stored range
/// read as zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeFunction {
    values: Vec<f64>,
}

impl EdgeFunction {
    pub fn zeros(tree: &Tree) -> Self {
        EdgeFunction {
            values: vec![0.0; tree.len()],
        }
    }

    pub fn constant(tree: &Tree, value: f64) -> Self {
        EdgeFunction {
            values: vec![value; tree.len()],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        EdgeFunction { values }
    }

    pub fn from_fn(tree: &Tree, f: impl FnMut(EdgeId) -> f64) -> Self {
        EdgeFunction {
            values: tree.edges().map(f).collect(),
        }
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> f64 {
        self.values.get(e.0).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, e: EdgeId, value: f64) {
        if e.0 >= self.values.len() {
            self.values.resize(e.0 + 1, 0.0);
        }
        self.values[e.0] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Pads or checks the stored range against `tree`.
    pub fn conform(mut self, tree: &Tree) -> Result<Self> {
        if let Some(i) = (tree.len()..self.values.len()).find(|&i| self.values[i] != 0.0) {
            return Err(Error::UnknownEdge(EdgeId(i)));
        }
        self.values.resize(tree.len(), 0.0);
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        EdgeFunction {
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &EdgeFunction) -> f64 {
        let n = self.values.len().max(other.values.len());
        (0..n)
            .map(|i| (self.get(EdgeId(i)) - other.get(EdgeId(i))).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_map(&self) -> BTreeMap<EdgeId, f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (EdgeId(i), v))
            .collect()
    }

    /// Checks `f(α) = Σ_{children β} f(β)` at every edge with children.
    pub fn additivity(&self, tree: &Tree, tol: f64) -> AdditivityReport {
        let mut report = AdditivityReport {
            additive: true,
            worst_edge: None,
            worst_violation: 0.0,
        };
        for e in tree.edges() {
            let kids = tree.children(e);
            if kids.is_empty() {
                continue;
            }
            let sum: f64 = kids.iter().map(|&c| self.get(c)).sum();
            let v = (self.get(e) - sum).abs();
            if v > report.worst_violation || (v.is_nan() && report.worst_edge.is_none()) {
                report.worst_violation = v;
                report.worst_edge = Some(e);
            }
            if !(v <= tol) {
                report.additive = false;
            }
        }
        report
    }
}

impl Serialize for EdgeFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for EdgeFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<EdgeId, f64>::deserialize(d)?;
        let mut f = EdgeFunction::default();
        for (e, v) in map {
            f.set(e, v);
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub additive: bool,
    pub worst_edge: Option<EdgeId>,
    pub worst_violation: f64,
}

impl Tree {
    pub fn is_forward_additive(&self, f: &EdgeFunction, tol: f64) -> AdditivityReport {
        f.additivity(self, tol)
    }
}

/// A finite positive measure on the boundary, stored as its co-potential
/// `M(α) = μ(∂T_α)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BoundaryMeasure {
    co_potential: EdgeFunction,
}

impl BoundaryMeasure {
    /// Relative tolerance used when validating forward additivity.
    pub const ADDITIVITY_TOL: f64 = 1e-9;

    /// Validates that `m` is nonnegative and forward additive to within
    /// `tol · max(1, M(ω))`.
    pub fn from_co_potential(tree: &Tree, m: EdgeFunction, tol: f64) -> Result<Self> {
        let m = m.conform(tree)?;
        if let Some(e) = tree.edges().find(|&e| !(m.get(e) >= 0.0) || !m.get(e).is_finite()) {
            return Err(Error::NotAMeasure {
                edge: e,
                reason: format!("value {} is not a finite nonnegative number", m.get(e)),
            });
        }
        let scale = m.get(tree.root()).max(1.0);
        let report = m.additivity(tree, tol * scale);
        if !report.additive {
            return Err(Error::NotAMeasure {
                edge: report.worst_edge.unwrap(),
                reason: format!("not forward additive (violation {:e})", report.worst_violation),
            });
        }
        Ok(BoundaryMeasure { co_potential: m })
    }

    /// Builds the co-potential from masses placed on leaves (tails allowed).
    pub fn from_leaf_masses(
        tree: &Tree,
        masses: impl IntoIterator<Item = (EdgeId, f64)>,
    ) -> Result<Self> {
        let mut m = EdgeFunction::zeros(tree);
        for (e, w) in masses {
            tree.check(e)?;
            if !tree.is_leaf(e) {
                return Err(Error::NotALeaf(e));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::NotAMeasure {
                    edge: e,
                    reason: format!("leaf mass {w} is not a finite nonnegative number"),
                });
            }
            m.set(e, m.get(e) + w);
        }
        for e in tree.bottom_up() {
            let kids = tree.children(e);
            if !kids.is_empty() {
                let s = kids.iter().map(|&c| m.get(c)).sum();
                m.set(e, s);
            }
        }
        Ok(BoundaryMeasure { co_potential: m })
    }

    pub fn zero(tree: &Tree) -> Self {
        BoundaryMeasure {
            co_potential: EdgeFunction::zeros(tree),
        }
    }

    /// Wraps a co-potential that is additive by construction.
    pub(crate) fn from_trusted(co_potential: EdgeFunction) -> Self {
        BoundaryMeasure { co_potential }
    }

    pub fn co_potential(&self) -> &EdgeFunction {
        &self.co_potential
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> f64 {
        self.co_potential.get(e)
    }

    /// Total mass `μ(∂T) = M(ω)`.
    pub fn mass(&self, tree: &Tree) -> f64 {
        self.get(tree.root())
    }

    pub fn scaled(&self, k: f64) -> Self {
        BoundaryMeasure {
            co_potential: self.co_potential.map(|x| k * x),
        }
    }

    /// Leaves (tails included) carrying positive mass.
    pub fn support_leaves<'a>(&'a self, tree: &'a Tree) -> impl Iterator<Item = EdgeId> + 'a {
        tree.leaves().filter(move |&e| self.get(e) > 0.0)
    }
}

/// A set of boundary points of a finite (or truncated) tree, addressed by
/// their leaf edges.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundarySet {
    leaves: BTreeSet<EdgeId>,
}

impl BoundarySet {
    /// Every member must be a true (non-tail) leaf of `tree`.
    pub fn new(tree: &Tree, leaves: impl IntoIterator<Item = EdgeId>) -> Result<Self> {
        let set = BoundarySet {
            leaves: leaves.into_iter().collect(),
        };
        set.validate(tree)?;
        Ok(set)
    }

    pub fn validate(&self, tree: &Tree) -> Result<()> {
        for &e in &self.leaves {
            tree.check(e)?;
            if tree.is_tail(e) {
                return Err(Error::TailInSet(e));
            }
            if !tree.is_leaf(e) {
                return Err(Error::NotALeaf(e));
            }
        }
        Ok(())
    }

    pub fn all_leaves(tree: &Tree) -> Self {
        BoundarySet {
            leaves: tree.true_leaves().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.leaves.contains(&e)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = EdgeId> + '_ {
        self.leaves.iter().copied()
    }

    pub fn is_subset(&self, other: &BoundarySet) -> bool {
        self.leaves.is_subset(&other.leaves)
    }

    pub fn union(&self, other: &BoundarySet) -> BoundarySet {
        BoundarySet {
            leaves: self.leaves.union(&other.leaves).copied().collect(),
        }
    }
}

impl FromIterator<EdgeId> for BoundarySet {
    fn from_iter<I: IntoIterator<Item = EdgeId>>(iter: I) -> Self {
        BoundarySet {
            leaves: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cherry() -> Tree {
        Tree::from_parents(&[None, Some(0), Some(0)]).unwrap()
    }

    #[test]
    fn constant_one_is_not_additive() {
        let t = cherry();
        let r = t.is_forward_additive(&EdgeFunction::constant(&t, 1.0), 1e-12);
        assert!(!r.additive);
        assert_eq!(r.worst_edge, Some(EdgeId(0)));
        assert_eq!(r.worst_violation, 1.0);
    }

    #[test]
    fn leaf_masses_are_additive() {
        let t = Tree::from_parents(&[None, Some(0), Some(0), Some(1), Some(1)]).unwrap();
        let mu = BoundaryMeasure::from_leaf_masses(&t, [(EdgeId(3), 0.25), (EdgeId(2), 0.5)]).unwrap();
        assert_eq!(mu.mass(&t), 0.75);
        assert_eq!(mu.get(EdgeId(1)), 0.25);
        assert!(t.is_forward_additive(mu.co_potential(), 0.0).additive);
        assert_eq!(mu.support_leaves(&t).collect::<Vec<_>>(), vec![EdgeId(2), EdgeId(3)]);
        assert!(BoundaryMeasure::from_leaf_masses(&t, [(EdgeId(1), 1.0)]).is_err());
    }

    #[test]
    fn co_potential_validation() {
        let t = cherry();
        let ok = EdgeFunction::from_vec(vec![1.0, 0.5, 0.5]);
        assert!(BoundaryMeasure::from_co_potential(&t, ok, 1e-12).is_ok());
        let neg = EdgeFunction::from_vec(vec![0.0, 0.5, -0.5]);
        assert!(BoundaryMeasure::from_co_potential(&t, neg, 1e-12).is_err());
        let bad = EdgeFunction::from_vec(vec![1.0, 0.5, 0.4]);
        assert!(BoundaryMeasure::from_co_potential(&t, bad, 1e-12).is_err());
        let too_long = EdgeFunction::from_vec(vec![1.0, 0.5, 0.5, 3.0]);
        assert!(matches!(
            BoundaryMeasure::from_co_potential(&t, too_long, 1e-12),
            Err(Error::UnknownEdge(EdgeId(3)))
        ));
    }

    #[test]
    fn missing_entries_read_as_zero() {
        let f: EdgeFunction = serde_json::from_str(r#"{"2": 1.5}"#).unwrap();
        assert_eq!(f.get(EdgeId(0)), 0.0);
        assert_eq!(f.get(EdgeId(2)), 1.5);
        assert_eq!(f.get(EdgeId(7)), 0.0);
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"0":0.0,"1":0.0,"2":1.5}"#);
    }

    #[test]
    fn boundary_set_rejects_tails_and_interior_edges() {
        let t = Tree::build(&super::super::TreeSpec::Homogeneous { degree: 2 }, Some(1)).unwrap();
        assert!(matches!(BoundarySet::new(&t, [EdgeId(1)]), Err(Error::TailInSet(_))));
        let c = cherry();
        assert!(matches!(BoundarySet::new(&c, [EdgeId(0)]), Err(Error::NotALeaf(_))));
    }
}
