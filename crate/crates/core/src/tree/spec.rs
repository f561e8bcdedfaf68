use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EdgeId, EdgeRecord, Tail, Tree};
use crate::error::{Error, Result};

/// Upper limit on the number of edges a builder will materialize.
pub const MAX_EDGES: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitEdge {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
    #[serde(default)]
    pub children: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tail: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_min_degree: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeSpec {
    Explicit {
        root: usize,
        edges: Vec<ExplicitEdge>,
    },
    /// Every edge has `degree` children.
    Homogeneous { degree: u32 },
    /// Edges at level `k` have `degrees[k]` children; past the list they have
    /// `then` children, or none when `then` is absent.
    SphericallySymmetric {
        degrees: Vec<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        then: Option<u32>,
    },
    /// Along every geodesic: `runs[0]` unary edges, one binary edge, `runs[1]`
    /// unary edges, one binary edge, ... and binary edges forever after the
    /// listed runs.
    Subdyadic { runs: Vec<u64> },
}

/// How a per-level degree sequence continues past its listed prefix.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuation {
    /// No further levels: the last listed level consists of leaves.
    Finite,
    /// Exactly this degree at every further level.
    Constant(u32),
    /// Degrees at further levels are unknown but at least this large.
    AtLeast(u32),
}

/// Forward degree as a function of the level, for spherically symmetric trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDegrees {
    pub prefix: Vec<u32>,
    pub then: Continuation,
}

impl LevelDegrees {
    pub fn new(prefix: Vec<u32>, then: Continuation) -> Result<Self> {
        if let Some(k) = prefix.iter().position(|&d| d == 0) {
            return Err(Error::InvalidSpec(format!("degree 0 at level {k}")));
        }
        match then {
            Continuation::Constant(0) | Continuation::AtLeast(0) => {
                Err(Error::InvalidSpec("continuation degree must be at least 1".into()))
            }
            _ => Ok(LevelDegrees { prefix, then }),
        }
    }

    pub fn homogeneous(n: u32) -> Result<Self> {
        LevelDegrees::new(Vec::new(), Continuation::Constant(n))
    }

    /// Exact degree at level `k`: `Some(0)` past the end of a finite tree,
    /// `None` where only a lower bound is known.
    pub fn degree_at(&self, k: usize) -> Option<u32> {
        match self.prefix.get(k) {
            Some(&d) => Some(d),
            None => match self.then {
                Continuation::Finite => Some(0),
                Continuation::Constant(d) => Some(d),
                Continuation::AtLeast(_) => None,
            },
        }
    }

    /// Lower bound on the degree of every edge at levels `>= k`; 0 when the
    /// tree ends at a finite level.
    pub fn min_from(&self, k: usize) -> u32 {
        let tail = match self.then {
            Continuation::Finite => 0,
            Continuation::Constant(d) | Continuation::AtLeast(d) => d,
        };
        self.prefix.iter().skip(k).copied().fold(tail, u32::min)
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self.then, Continuation::Finite)
    }
}

impl TreeSpec {
    /// Per-level degrees of the spherically symmetric variants.
    pub fn level_degrees(&self) -> Result<Option<LevelDegrees>> {
        match self {
            TreeSpec::Explicit { .. } => Ok(None),
            TreeSpec::Homogeneous { degree } => {
                if *degree < 2 {
                    return Err(Error::InvalidSpec(format!(
                        "homogeneous degree must be at least 2, got {degree}"
                    )));
                }
                LevelDegrees::homogeneous(*degree).map(Some)
            }
            TreeSpec::SphericallySymmetric { degrees, then } => {
                let then = then.map_or(Continuation::Finite, Continuation::Constant);
                LevelDegrees::new(degrees.clone(), then).map(Some)
            }
            TreeSpec::Subdyadic { runs } => {
                let total: u64 = runs.iter().map(|r| r + 1).sum();
                if total > MAX_EDGES as u64 {
                    return Err(Error::InvalidSpec("subdyadic runs are too long".into()));
                }
                let mut prefix = Vec::with_capacity(total as usize);
                for &r in runs {
                    prefix.extend(std::iter::repeat(1).take(r as usize));
                    prefix.push(2);
                }
                LevelDegrees::new(prefix, Continuation::Constant(2)).map(Some)
            }
        }
    }

    pub fn is_infinite(&self) -> Result<bool> {
        Ok(self.level_degrees()?.is_some_and(|d| d.is_infinite()))
    }
}

pub(super) fn build_tree(spec: &TreeSpec, depth: Option<usize>) -> Result<Tree> {
    if depth == Some(0) {
        return Err(Error::InvalidSpec("depth must be positive".into()));
    }
    match spec {
        TreeSpec::Explicit { root, edges } => {
            let tree = build_explicit(*root, edges)?;
            match depth {
                Some(d) if d < tree.depth() => truncate(&tree, d),
                _ => Ok(tree),
            }
        }
        _ => {
            let degrees = spec.level_degrees()?.expect("symmetric variant");
            if degrees.is_infinite() && depth.is_none() {
                return Err(Error::InvalidSpec("infinite tree needs a depth".into()));
            }
            build_symmetric(&degrees, depth)
        }
    }
}

fn build_explicit(root: usize, edges: &[ExplicitEdge]) -> Result<Tree> {
    let n = edges.len();
    let mut children: Vec<Option<Vec<EdgeId>>> = vec![None; n];
    let mut tails = Vec::new();
    for e in edges {
        if e.id >= n {
            return Err(Error::MalformedTree(format!(
                "edge ids must be 0..{n}, found {}",
                e.id
            )));
        }
        if children[e.id].is_some() {
            return Err(Error::MalformedTree(format!("duplicate edge id {}", e.id)));
        }
        let mut kids: Vec<EdgeId> = e.children.iter().map(|&c| EdgeId(c)).collect();
        let len = kids.len();
        kids.sort();
        kids.dedup();
        if kids.len() != len {
            return Err(Error::MalformedTree(format!("edge {} lists a child twice", e.id)));
        }
        children[e.id] = Some(e.children.iter().map(|&c| EdgeId(c)).collect());
        if e.tail || e.tail_min_degree.is_some() {
            let min_degree = e.tail_min_degree.unwrap_or(1);
            tails.push((EdgeId(e.id), Tail { min_degree }));
        }
    }
    let children: Vec<Vec<EdgeId>> = children.into_iter().map(Option::unwrap_or_default).collect();
    let tree = Tree::from_children(EdgeId(root), children, &tails)?;
    for e in edges {
        if let Some(p) = e.parent {
            if tree.parent(EdgeId(e.id)) != Some(EdgeId(p)) {
                return Err(Error::MalformedTree(format!(
                    "edge {} declares parent {p} but is not its child",
                    e.id
                )));
            }
        } else if e.id != root && tree.parent(EdgeId(e.id)).is_none() {
            return Err(Error::MalformedTree(format!("edge {} has no parent", e.id)));
        }
    }
    Ok(tree)
}

fn truncate(tree: &Tree, depth: usize) -> Result<Tree> {
    let (cut, origin) = tree.extract(tree.root(), |e| tree.level(e) <= depth);
    let tails: Vec<_> = cut
        .edges()
        .filter(|&e| cut.level(e) == depth && !tree.is_leaf(origin[e.0]))
        .map(|e| (e, Tail::UNKNOWN))
        .collect();
    cut.with_tails(&tails)
}

fn build_symmetric(degrees: &LevelDegrees, depth: Option<usize>) -> Result<Tree> {
    // count first so oversized requests fail before allocating
    let mut total: usize = 0;
    let mut card: usize = 1;
    let mut level = 0;
    loop {
        total = total.saturating_add(card);
        if total > MAX_EDGES {
            return Err(Error::InvalidSpec(format!(
                "tree exceeds {MAX_EDGES} edges; lower the depth"
            )));
        }
        if depth == Some(level) {
            break;
        }
        let d = degrees
            .degree_at(level)
            .ok_or_else(|| Error::InvalidSpec("degree unknown at a stored level".into()))?;
        if d == 0 {
            break;
        }
        card = card.saturating_mul(d as usize);
        level += 1;
    }

    let mut edges = Vec::with_capacity(total);
    edges.push(EdgeRecord {
        parent: None,
        children: Vec::new(),
        level: 0,
        tail: None,
    });
    let mut head = 0;
    while head < edges.len() {
        let level = edges[head].level;
        let d = degrees.degree_at(level).unwrap_or(0);
        if d > 0 {
            if depth == Some(level) {
                edges[head].tail = Some(Tail {
                    min_degree: degrees.min_from(level).max(1),
                });
            } else {
                for _ in 0..d {
                    let id = EdgeId(edges.len());
                    edges.push(EdgeRecord {
                        parent: Some(EdgeId(head)),
                        children: Vec::new(),
                        level: level + 1,
                        tail: None,
                    });
                    edges[head].children.push(id);
                }
            }
        }
        head += 1;
    }
    let order = (0..edges.len()).map(EdgeId).collect();
    Ok(Tree {
        edges,
        root: EdgeId(0),
        order,
    })
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::InvalidSpec(format!("not a nonnegative integer: {t:?}")))
        })
        .collect()
}

/// Parses a degree sequence such as `2,3,2` (finite), `1,2*` (last degree
/// repeats forever) or `1,2+` (later degrees are at least 2).
impl FromStr for LevelDegrees {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, mode) = match s.chars().last() {
            Some('*') => (&s[..s.len() - 1], Some('*')),
            Some('+') => (&s[..s.len() - 1], Some('+')),
            _ => (s, None),
        };
        let mut prefix: Vec<u32> = parse_list(body)?;
        let then = match mode {
            None => Continuation::Finite,
            Some(m) => {
                let last = prefix
                    .pop()
                    .ok_or_else(|| Error::InvalidSpec("empty degree sequence".into()))?;
                if m == '*' {
                    Continuation::Constant(last)
                } else {
                    Continuation::AtLeast(last)
                }
            }
        };
        LevelDegrees::new(prefix, then)
    }
}

/// Short textual form used on the command line: `homogeneous:2`,
/// `symmetric:1,2,3` or `symmetric:1,3*`, `subdyadic:1,0,2`, `path:5`.
impl FromStr for TreeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "homogeneous" => {
                let degree = arg
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("bad degree {arg:?}")))?;
                Ok(TreeSpec::Homogeneous { degree })
            }
            "symmetric" => {
                let d: LevelDegrees = arg.parse()?;
                let then = match d.then {
                    Continuation::Finite => None,
                    Continuation::Constant(c) => Some(c),
                    Continuation::AtLeast(_) => {
                        return Err(Error::InvalidSpec(
                            "a tree needs exact degrees; use '*' to repeat".into(),
                        ))
                    }
                };
                Ok(TreeSpec::SphericallySymmetric {
                    degrees: d.prefix,
                    then,
                })
            }
            "subdyadic" => Ok(TreeSpec::Subdyadic {
                runs: parse_list(arg)?,
            }),
            "path" => {
                let len: usize = arg
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("bad path length {arg:?}")))?;
                if len == 0 {
                    return Err(Error::InvalidSpec("path length must be positive".into()));
                }
                Ok(TreeSpec::SphericallySymmetric {
                    degrees: vec![1; len - 1],
                    then: None,
                })
            }
            other => Err(Error::InvalidSpec(format!("unknown tree kind {other:?}"))),
        }
    }
}
