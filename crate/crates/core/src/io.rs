//! JSON documents for trees, measures and leaf sets.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{BoundaryMeasure, BoundarySet, EdgeFunction, EdgeId, ExplicitEdge, Tree, TreeSpec};

/// A tree spec given either as a structured object or in the short text form
/// accepted by [`TreeSpec::from_str`](std::str::FromStr).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecField {
    Text(String),
    Structured(TreeSpec),
}

impl SpecField {
    pub fn resolve(&self) -> Result<TreeSpec> {
        match self {
            SpecField::Text(s) => s.parse(),
            SpecField::Structured(spec) => Ok(spec.clone()),
        }
    }
}

/// Tree interchange format: either a generator spec with an optional
/// truncation depth, or an explicit edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeDocument {
    Spec {
        spec: SpecField,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<usize>,
    },
    Explicit {
        root: usize,
        edges: Vec<ExplicitEdge>,
    },
}

impl TreeDocument {
    /// Builds the tree; `default_depth` truncates infinite specs that carry
    /// no depth of their own.
    pub fn to_tree(&self, default_depth: Option<usize>) -> Result<Tree> {
        match self {
            TreeDocument::Spec { spec, depth } => {
                let spec = spec.resolve()?;
                Tree::build(&spec, depth.or(default_depth))
            }
            TreeDocument::Explicit { root, edges } => Tree::build(
                &TreeSpec::Explicit {
                    root: *root,
                    edges: edges.clone(),
                },
                None,
            ),
        }
    }

    pub fn from_tree(tree: &Tree) -> Self {
        let edges = tree
            .edges()
            .map(|e| ExplicitEdge {
                id: e.0,
                parent: tree.parent(e).map(|p| p.0),
                children: tree.children(e).iter().map(|c| c.0).collect(),
                tail: tree.is_tail(e),
                tail_min_degree: tree.tail(e).map(|t| t.min_degree).filter(|&d| d > 1),
            })
            .collect();
        TreeDocument::Explicit {
            root: tree.root().0,
            edges,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Measure files: the output of an equilibrium computation (`{"M": …}`),
/// leaf masses, or a bare co-potential map.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum MeasureDocument {
    Result {
        #[serde(rename = "M")]
        co_potential: EdgeFunction,
    },
    LeafMasses {
        leaf_masses: BTreeMap<EdgeId, f64>,
    },
    CoPotential(EdgeFunction),
}

impl MeasureDocument {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_measure(&self, tree: &Tree) -> Result<BoundaryMeasure> {
        match self {
            MeasureDocument::Result { co_potential } | MeasureDocument::CoPotential(co_potential) => {
                BoundaryMeasure::from_co_potential(tree, co_potential.clone(), BoundaryMeasure::ADDITIVITY_TOL)
            }
            MeasureDocument::LeafMasses { leaf_masses } => {
                BoundaryMeasure::from_leaf_masses(tree, leaf_masses.iter().map(|(&e, &w)| (e, w)))
            }
        }
    }
}

/// Leaf sets: a bare id list or any object with a `set` list.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SetDocument {
    List(Vec<EdgeId>),
    Wrapped { set: Vec<EdgeId> },
}

impl SetDocument {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_set(&self, tree: &Tree) -> Result<BoundarySet> {
        let ids = match self {
            SetDocument::List(ids) | SetDocument::Wrapped { set: ids } => ids,
        };
        BoundarySet::new(tree, ids.iter().copied())
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_documents() {
        let doc: TreeDocument = serde_json::from_str(r#"{"spec": "homogeneous:2", "depth": 3}"#).unwrap();
        assert_eq!(doc.to_tree(None).unwrap().len(), 15);
        let doc: TreeDocument =
            serde_json::from_str(r#"{"spec": {"kind": "spherically_symmetric", "degrees": [2, 1]}}"#).unwrap();
        assert_eq!(doc.to_tree(None).unwrap().len(), 5);
        let doc: TreeDocument = serde_json::from_str(r#"{"spec": "homogeneous:3"}"#).unwrap();
        assert!(doc.to_tree(None).is_err());
        assert_eq!(doc.to_tree(Some(1)).unwrap().len(), 4);
    }

    #[test]
    fn explicit_round_trip() {
        let text = r#"{"root": 0, "edges": [
            {"id": 0, "children": [1, 2]},
            {"id": 1, "parent": 0},
            {"id": 2, "parent": 0, "tail": true, "tail_min_degree": 2}
        ]}"#;
        let doc: TreeDocument = serde_json::from_str(text).unwrap();
        let tree = doc.to_tree(None).unwrap();
        assert!(tree.is_tail(EdgeId(2)));
        let again = TreeDocument::from_tree(&tree);
        let back: TreeDocument = serde_json::from_str(&serde_json::to_string(&again).unwrap()).unwrap();
        assert_eq!(back, again);
        assert!(back.to_tree(None).unwrap().same_shape(&tree));
    }

    #[test]
    fn measure_documents() {
        let tree = Tree::from_parents(&[None, Some(0), Some(0)]).unwrap();
        let result: MeasureDocument =
            serde_json::from_str(r#"{"capacity": {"lower": 1, "upper": 1}, "M": {"0": 1.0, "1": 0.5, "2": 0.5}}"#).unwrap();
        assert_eq!(result.to_measure(&tree).unwrap().mass(&tree), 1.0);
        let leaves: MeasureDocument = serde_json::from_str(r#"{"leaf_masses": {"1": 0.25, "2": 0.5}}"#).unwrap();
        assert_eq!(leaves.to_measure(&tree).unwrap().mass(&tree), 0.75);
        let bare: MeasureDocument = serde_json::from_str(r#"{"0": 1.0, "1": 0.25, "2": 0.5}"#).unwrap();
        assert!(bare.to_measure(&tree).is_err());
    }

    #[test]
    fn set_documents() {
        let tree = Tree::from_parents(&[None, Some(0), Some(0)]).unwrap();
        let list: SetDocument = serde_json::from_str("[2]").unwrap();
        assert_eq!(list.to_set(&tree).unwrap().len(), 1);
        let wrapped: SetDocument = serde_json::from_str(r#"{"x": 0.5, "set": [1, 2]}"#).unwrap();
        assert_eq!(wrapped.to_set(&tree).unwrap().len(), 2);
        let bad: SetDocument = serde_json::from_str("[0]").unwrap();
        assert!(bad.to_set(&tree).is_err());
    }
}
