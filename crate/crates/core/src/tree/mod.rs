//! Rooted trees stored as an arena of edges.
//!
//! Every tree has a single root edge `ω` whose beginning vertex `o` touches no
//! other edge. Vertices are not stored: apart from `o`, each vertex is the end
//! vertex `e(α)` of exactly one edge `α`, so a [`Vertex`] is either
//! [`Vertex::Root`] or [`Vertex::End`] of an edge.
//!
//! Infinite trees are truncated at a finite depth. The truncated edges keep a
//! [`Tail`] marker that separates "this geodesic continues" from a true leaf.

mod function;
mod spec;

pub use function::{AdditivityReport, BoundaryMeasure, BoundarySet, EdgeFunction};
pub use spec::{Continuation, ExplicitEdge, LevelDegrees, TreeSpec, MAX_EDGES};

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

// JSON object keys arrive as strings, so ids accept both forms.
impl<'de> Deserialize<'de> for EdgeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct IdVisitor;
        impl serde::de::Visitor<'_> for IdVisitor {
            type Value = EdgeId;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an edge id")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<EdgeId, E> {
                usize::try_from(v).map(EdgeId).map_err(E::custom)
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<EdgeId, E> {
                usize::try_from(v).map(EdgeId).map_err(E::custom)
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<EdgeId, E> {
                v.trim().parse().map(EdgeId).map_err(|_| E::custom(format!("bad edge id {v:?}")))
            }
        }
        d.deserialize_any(IdVisitor)
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for EdgeId {
    fn from(i: usize) -> Self {
        EdgeId(i)
    }
}

/// A vertex of the tree: the root vertex `o`, or the end vertex of an edge.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Root,
    End(EdgeId),
}

impl Vertex {
    /// Dense index: `o` is 0, `e(α)` is `α + 1`.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Vertex::Root => 0,
            Vertex::End(e) => e.0 + 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Vertex::Root
        } else {
            Vertex::End(EdgeId(i - 1))
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Root => write!(f, "o"),
            Vertex::End(e) => write!(f, "e({e})"),
        }
    }
}

impl Serialize for Vertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Marker for an edge whose tent was cut off by truncation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tail {
    /// Every edge of the unexplored tent has at least this many children.
    /// Values below 2 carry no information.
    pub min_degree: u32,
}

impl Tail {
    pub const UNKNOWN: Tail = Tail { min_degree: 1 };
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRecord {
    pub parent: Option<EdgeId>,
    pub children: Vec<EdgeId>,
    pub level: usize,
    pub tail: Option<Tail>,
}

/// Result of [`Tree::confluent`].
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Confluent {
    /// The last common edge of both geodesics; the confluent is its end vertex.
    pub edge: EdgeId,
    /// Level of the confluent vertex, `|e(edge)| = |edge| + 1`.
    pub level: usize,
}

impl Confluent {
    /// Boundary distance `exp(-level)`.
    pub fn distance(&self) -> f64 {
        (-(self.level as f64)).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    edges: Vec<EdgeRecord>,
    root: EdgeId,
    /// Breadth-first order from the root; parents precede children.
    order: Vec<EdgeId>,
}

impl Tree {
    /// Builds a tree from per-edge child lists.
    ///
    /// Edge ids must be exactly `0..children.len()`. `tails` lists the edges
    /// that stand for truncated tents; they must be leaves.
    pub fn from_children(
        root: EdgeId,
        children: Vec<Vec<EdgeId>>,
        tails: &[(EdgeId, Tail)],
    ) -> Result<Tree> {
        let n = children.len();
        if root.0 >= n {
            return Err(Error::MalformedTree(format!("root {root} is not an edge")));
        }
        let mut parent: Vec<Option<EdgeId>> = vec![None; n];
        for (i, kids) in children.iter().enumerate() {
            for &c in kids {
                if c.0 >= n {
                    return Err(Error::MalformedTree(format!("edge {i} lists unknown child {c}")));
                }
                if c == root {
                    return Err(Error::MalformedTree(format!("root {root} listed as child of {i}")));
                }
                if let Some(p) = parent[c.0] {
                    return Err(Error::MalformedTree(format!(
                        "edge {c} has two parents ({p} and {i})"
                    )));
                }
                parent[c.0] = Some(EdgeId(i));
            }
        }
        let mut edges: Vec<EdgeRecord> = children
            .into_iter()
            .zip(parent)
            .map(|(children, parent)| EdgeRecord {
                parent,
                children,
                level: 0,
                tail: None,
            })
            .collect();

        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root.0] = true;
        while let Some(e) = queue.pop_front() {
            order.push(e);
            let level = edges[e.0].level;
            for k in 0..edges[e.0].children.len() {
                let c = edges[e.0].children[k];
                if seen[c.0] {
                    return Err(Error::MalformedTree(format!("cycle through edge {c}")));
                }
                seen[c.0] = true;
                edges[c.0].level = level + 1;
                queue.push_back(c);
            }
        }
        if order.len() != n {
            let stray = seen.iter().position(|s| !s).unwrap();
            return Err(Error::MalformedTree(format!(
                "edge {stray} is not reachable from the root (multiple roots or a cycle)"
            )));
        }
        for &(e, tail) in tails {
            let rec = edges.get_mut(e.0).ok_or(Error::UnknownEdge(e))?;
            if !rec.children.is_empty() {
                return Err(Error::MalformedTree(format!("tail edge {e} has children")));
            }
            rec.tail = Some(tail);
        }
        Ok(Tree { edges, root, order })
    }

    /// Builds a tree from a parent list; `parents[0]` must be `None` and every
    /// other entry must point to a smaller index. Children keep index order.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Tree> {
        let mut children = vec![Vec::new(); parents.len()];
        let mut root = None;
        for (i, p) in parents.iter().enumerate() {
            match p {
                None if root.is_none() => root = Some(EdgeId(i)),
                None => return Err(Error::MalformedTree("multiple root edges".into())),
                Some(p) if *p < parents.len() => children[*p].push(EdgeId(i)),
                Some(p) => return Err(Error::MalformedTree(format!("unknown parent {p}"))),
            }
        }
        let root = root.ok_or_else(|| Error::MalformedTree("no root edge".into()))?;
        Tree::from_children(root, children, &[])
    }

    /// A path of `len` edges ending in a true leaf.
    pub fn path(len: usize) -> Result<Tree> {
        if len == 0 {
            return Err(Error::MalformedTree("a tree has at least one edge".into()));
        }
        let parents: Vec<_> = (0..len).map(|i| i.checked_sub(1)).collect();
        Tree::from_parents(&parents)
    }

    pub fn build(spec: &TreeSpec, depth: Option<usize>) -> Result<Tree> {
        spec::build_tree(spec, depth)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    #[inline]
    pub fn root(&self) -> EdgeId {
        self.root
    }

    pub fn num_vertices(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        e.0 < self.edges.len()
    }

    pub fn check(&self, e: EdgeId) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(Error::UnknownEdge(e))
        }
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        match v {
            Vertex::Root => Ok(()),
            Vertex::End(e) => self.check(e),
        }
    }

    #[inline]
    pub fn record(&self, e: EdgeId) -> &EdgeRecord {
        &self.edges[e.0]
    }

    #[inline]
    pub fn parent(&self, e: EdgeId) -> Option<EdgeId> {
        self.edges[e.0].parent
    }

    #[inline]
    pub fn children(&self, e: EdgeId) -> &[EdgeId] {
        &self.edges[e.0].children
    }

    #[inline]
    pub fn level(&self, e: EdgeId) -> usize {
        self.edges[e.0].level
    }

    #[inline]
    pub fn tail(&self, e: EdgeId) -> Option<Tail> {
        self.edges[e.0].tail
    }

    #[inline]
    pub fn is_tail(&self, e: EdgeId) -> bool {
        self.edges[e.0].tail.is_some()
    }

    /// Leaf of the stored arena (true leaf or tail).
    #[inline]
    pub fn is_leaf(&self, e: EdgeId) -> bool {
        self.edges[e.0].children.is_empty()
    }

    #[inline]
    pub fn is_true_leaf(&self, e: EdgeId) -> bool {
        self.is_leaf(e) && !self.is_tail(e)
    }

    /// Beginning vertex `b(α)`.
    #[inline]
    pub fn begin(&self, e: EdgeId) -> Vertex {
        match self.edges[e.0].parent {
            None => Vertex::Root,
            Some(p) => Vertex::End(p),
        }
    }

    pub fn vertex_level(&self, v: Vertex) -> usize {
        match v {
            Vertex::Root => 0,
            Vertex::End(e) => self.level(e) + 1,
        }
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    /// Edges in breadth-first order (parents before children).
    pub fn top_down(&self) -> &[EdgeId] {
        &self.order
    }

    /// Edges with children after parents.
    pub fn bottom_up(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.order.iter().rev().copied()
    }

    /// All arena leaves, tails included, in breadth-first order.
    pub fn leaves(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.order.iter().copied().filter(|&e| self.is_leaf(e))
    }

    pub fn true_leaves(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.order.iter().copied().filter(|&e| self.is_true_leaf(e))
    }

    pub fn tails(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.order.iter().copied().filter(|&e| self.is_tail(e))
    }

    pub fn depth(&self) -> usize {
        self.edges.iter().map(|r| r.level).max().unwrap_or(0)
    }

    /// `β ≥ α`: `β` lies in the tent of `α`.
    pub fn is_descendant(&self, beta: EdgeId, alpha: EdgeId) -> bool {
        let target = self.level(alpha);
        let mut cur = beta;
        while self.level(cur) > target {
            cur = self.parent(cur).expect("non-root edge has a parent");
        }
        cur == alpha
    }

    /// Geodesic from `ω` to `x`, inclusive, ordered by level.
    pub fn predecessor_path(&self, x: EdgeId) -> Result<Vec<EdgeId>> {
        self.check(x)?;
        let mut path = Vec::with_capacity(self.level(x) + 1);
        let mut cur = Some(x);
        while let Some(e) = cur {
            path.push(e);
            cur = self.parent(e);
        }
        path.reverse();
        Ok(path)
    }

    /// Predecessor set of a vertex: empty for `o`, `P(α)` for `e(α)`.
    pub fn vertex_path(&self, v: Vertex) -> Result<Vec<EdgeId>> {
        match v {
            Vertex::Root => Ok(Vec::new()),
            Vertex::End(e) => self.predecessor_path(e),
        }
    }

    /// The confluent `ζ ∧ η` of two leaves.
    pub fn confluent(&self, zeta: EdgeId, eta: EdgeId) -> Result<Confluent> {
        for x in [zeta, eta] {
            self.check(x)?;
            if !self.is_leaf(x) {
                return Err(Error::NotALeaf(x));
            }
        }
        let (mut a, mut b) = (zeta, eta);
        while self.level(a) > self.level(b) {
            a = self.parent(a).unwrap();
        }
        while self.level(b) > self.level(a) {
            b = self.parent(b).unwrap();
        }
        while a != b {
            a = self.parent(a).unwrap();
            b = self.parent(b).unwrap();
        }
        Ok(Confluent {
            edge: a,
            level: self.level(a) + 1,
        })
    }

    /// The tent `T_α`, re-rooted at `α`.
    pub fn tent(&self, alpha: EdgeId) -> Result<Tree> {
        Ok(self.tent_mapped(alpha)?.0)
    }

    /// Like [`Tree::tent`], also returning the original id of every new edge.
    pub fn tent_mapped(&self, alpha: EdgeId) -> Result<(Tree, Vec<EdgeId>)> {
        self.check(alpha)?;
        Ok(self.extract(alpha, |_| true))
    }

    /// The subtree with edge set `⋃_{ζ ∈ E} P(ζ)`, with the original id of every
    /// new edge. Leaves of the result are exactly the members of `set`.
    pub fn spanned_subtree(&self, set: &BoundarySet) -> Result<(Tree, Vec<EdgeId>)> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut keep = vec![false; self.len()];
        for leaf in set.iter() {
            self.check(leaf)?;
            let mut cur = Some(leaf);
            while let Some(e) = cur {
                if keep[e.0] {
                    break;
                }
                keep[e.0] = true;
                cur = self.parent(e);
            }
        }
        Ok(self.extract(self.root, |e| keep[e.0]))
    }

    /// Breadth-first copy of the part of the tent of `top` selected by `keep`.
    fn extract(&self, top: EdgeId, keep: impl Fn(EdgeId) -> bool) -> (Tree, Vec<EdgeId>) {
        let mut origin = vec![top];
        let mut edges = vec![EdgeRecord {
            parent: None,
            children: Vec::new(),
            level: 0,
            tail: self.tail(top),
        }];
        let mut head = 0;
        while head < origin.len() {
            let old = origin[head];
            for &c in self.children(old) {
                if !keep(c) {
                    continue;
                }
                let id = EdgeId(origin.len());
                origin.push(c);
                edges.push(EdgeRecord {
                    parent: Some(EdgeId(head)),
                    children: Vec::new(),
                    level: edges[head].level + 1,
                    tail: self.tail(c),
                });
                edges[head].children.push(id);
            }
            head += 1;
        }
        let order = (0..edges.len()).map(EdgeId).collect();
        (
            Tree {
                edges,
                root: EdgeId(0),
                order,
            },
            origin,
        )
    }

    /// Shape equality up to edge numbering (children order matters).
    pub fn same_shape(&self, other: &Tree) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            let (ra, rb) = (self.record(a), other.record(b));
            if ra.children.len() != rb.children.len() || ra.tail.is_some() != rb.tail.is_some() {
                return false;
            }
            stack.extend(ra.children.iter().copied().zip(rb.children.iter().copied()));
        }
        true
    }

    /// Position of `e` among its siblings.
    pub fn child_index(&self, e: EdgeId) -> Option<usize> {
        let p = self.parent(e)?;
        self.children(p).iter().position(|&c| c == e)
    }

    /// Re-marks the given leaves as tails. Used to treat a finite truncation of
    /// a known infinite tree as the truncation it is.
    pub fn with_tails(mut self, tails: &[(EdgeId, Tail)]) -> Result<Tree> {
        for &(e, tail) in tails {
            self.check(e)?;
            if !self.is_leaf(e) {
                return Err(Error::NotALeaf(e));
            }
            self.edges[e.0].tail = Some(tail);
        }
        Ok(self)
    }

    /// The finite tree obtained by turning every tail into a true leaf.
    pub fn without_tails(mut self) -> Tree {
        for r in &mut self.edges {
            r.tail = None;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_depth2() -> Tree {
        // ω with two children, each with two leaves
        Tree::from_parents(&[None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(2)]).unwrap()
    }

    #[test]
    fn explicit_three_edge_tree() {
        let t = Tree::from_children(EdgeId(0), vec![vec![EdgeId(1), EdgeId(2)], vec![], vec![]], &[])
            .unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.is_true_leaf(EdgeId(1)) && t.is_true_leaf(EdgeId(2)));
        assert_eq!(t.level(EdgeId(2)), 1);
    }

    #[test]
    fn rejects_cycles_and_multiple_roots() {
        let cyc = Tree::from_children(
            EdgeId(0),
            vec![vec![EdgeId(1)], vec![EdgeId(2)], vec![EdgeId(1)]],
            &[],
        );
        assert!(matches!(cyc, Err(Error::MalformedTree(_))));
        let two_roots = Tree::from_children(EdgeId(0), vec![vec![], vec![]], &[]);
        assert!(matches!(two_roots, Err(Error::MalformedTree(_))));
        assert!(Tree::from_parents(&[None, None]).is_err());
    }

    #[test]
    fn tail_must_be_leaf() {
        let r = Tree::from_children(EdgeId(0), vec![vec![EdgeId(1)], vec![]], &[(EdgeId(0), Tail::UNKNOWN)]);
        assert!(r.is_err());
    }

    #[test]
    fn predecessor_paths() {
        let t = binary_depth2();
        assert_eq!(t.predecessor_path(EdgeId(0)).unwrap(), vec![EdgeId(0)]);
        assert_eq!(
            t.predecessor_path(EdgeId(5)).unwrap(),
            vec![EdgeId(0), EdgeId(2), EdgeId(5)]
        );
        assert!(matches!(t.predecessor_path(EdgeId(9)), Err(Error::UnknownEdge(_))));
    }

    #[test]
    fn confluents() {
        let t = Tree::from_parents(&[None, Some(0), Some(0)]).unwrap();
        let c = t.confluent(EdgeId(1), EdgeId(2)).unwrap();
        assert_eq!(c, Confluent { edge: EdgeId(0), level: 1 });
        let same = t.confluent(EdgeId(1), EdgeId(1)).unwrap();
        assert_eq!(same, Confluent { edge: EdgeId(1), level: 2 });

        let t = binary_depth2();
        // leaves in disjoint level-1 tents meet at e(ω)
        assert_eq!(t.confluent(EdgeId(3), EdgeId(6)).unwrap().edge, EdgeId(0));
        assert_eq!(t.confluent(EdgeId(3), EdgeId(4)).unwrap().level, 2);
        assert!(matches!(t.confluent(EdgeId(1), EdgeId(3)), Err(Error::NotALeaf(_))));
    }

    #[test]
    fn tents() {
        let t = binary_depth2();
        assert_eq!(t.tent(EdgeId(0)).unwrap(), t);
        let sub = t.tent(EdgeId(1)).unwrap();
        assert_eq!(sub.len(), 3);
        assert_eq!(sub.level(EdgeId(2)), 1);
        assert_eq!(t.tent(EdgeId(4)).unwrap().len(), 1);

        let trunc = Tree::build(&TreeSpec::Homogeneous { degree: 2 }, Some(1)).unwrap();
        let tail = trunc.tent(EdgeId(2)).unwrap();
        assert_eq!(tail.len(), 1);
        assert!(tail.is_tail(EdgeId(0)));
    }

    #[test]
    fn spanned_subtree_of_outer_leaves() {
        let t = binary_depth2();
        let set = BoundarySet::new(&t, [EdgeId(3), EdgeId(6)]).unwrap();
        let (s, origin) = t.spanned_subtree(&set).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(origin, vec![EdgeId(0), EdgeId(1), EdgeId(2), EdgeId(3), EdgeId(6)]);
        let leaves: Vec<_> = s.true_leaves().map(|e| origin[e.0]).collect();
        assert_eq!(leaves, vec![EdgeId(3), EdgeId(6)]);

        let all = BoundarySet::all_leaves(&t);
        assert_eq!(t.spanned_subtree(&all).unwrap().0, t);

        let one = BoundarySet::new(&t, [EdgeId(4)]).unwrap();
        let (path, _) = t.spanned_subtree(&one).unwrap();
        assert!(path.same_shape(&Tree::path(3).unwrap()));

        assert!(matches!(
            t.spanned_subtree(&BoundarySet::default()),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn descendant_relation() {
        let t = binary_depth2();
        assert!(t.is_descendant(EdgeId(5), EdgeId(2)));
        assert!(t.is_descendant(EdgeId(5), EdgeId(0)));
        assert!(!t.is_descendant(EdgeId(5), EdgeId(1)));
        assert!(t.is_descendant(EdgeId(1), EdgeId(1)));
    }
}
