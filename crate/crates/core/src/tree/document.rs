//! Flat JSON documents for trees, one object per file.
//!
//! ```text
//! {"alpha":"1.5","n":1,"edges":[[0,1]],"leaf_order":[0,1]}
//! ```
//!
//! Colored trees add `edge_colors` and `vertex_colors` maps (id to `"blue"` or
//! `"red"`) and the second parameter `alpha_prime`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GrowthTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Red,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub alpha: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_prime: Option<String>,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub leaf_order: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_colors: Option<BTreeMap<usize, Color>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_colors: Option<BTreeMap<usize, Color>>,
}

pub(crate) fn parse_decimal(field: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        line: 1,
        column: 1,
        message: format!("field `{field}`: {e}"),
    })
}

impl TreeDocument {
    pub fn from_tree(tree: &GrowthTree) -> Self {
        TreeDocument {
            alpha: format!("{}", tree.alpha()),
            alpha_prime: None,
            n: tree.step_count(),
            edges: tree.edges().map(|(u, v)| [u.index(), v.index()]).collect(),
            leaf_order: tree.leaf_order().iter().map(|l| l.index()).collect(),
            edge_colors: None,
            vertex_colors: None,
        }
    }

    /// Rebuilds the tree and checks the growth-state invariants.
    pub fn to_tree(&self) -> Result<GrowthTree> {
        let alpha = parse_decimal("alpha", &self.alpha)?;
        let vertex_count = self.edges.len() + 1;
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut tree = GrowthTree::from_edges(alpha, vertex_count, &edges, &self.leaf_order)?;
        tree.step_count = self.n;
        tree.check_chain_invariants()?;
        Ok(tree)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("document serialization is infallible");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl GrowthTree {
    pub fn to_json(&self) -> String {
        TreeDocument::from_tree(self).to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        TreeDocument::from_json(text)?.to_tree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{enumerate_labeled_shapes, LabeledShape};

    #[test]
    fn single_edge_golden_bytes() {
        let t = GrowthTree::single_edge(1.5);
        assert_eq!(
            t.to_json(),
            "{\"alpha\":\"1.5\",\"n\":1,\"edges\":[[0,1]],\"leaf_order\":[0,1]}\n"
        );
    }

    #[test]
    fn enumerated_shapes_round_trip() {
        for k in 2..=5 {
            for s in enumerate_labeled_shapes(k).unwrap() {
                let t = s.to_tree(1.25).unwrap();
                let back = GrowthTree::from_json(&t.to_json()).unwrap();
                assert_eq!(back, t);
                assert_eq!(LabeledShape::from_tree(&back).unwrap(), s);
            }
        }
    }

    #[test]
    fn malformed_documents_report_location() {
        let err = GrowthTree::from_json(
            "{\"alpha\":\"1.5\",\n\"n\":1,\n\"edges\":[[0,1]],\"leaf_order\":[0,1]",
        )
        .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        // Well-formed JSON that violates the invariants: degree-two vertex.
        let bad = "{\"alpha\":\"1.5\",\"n\":1,\"edges\":[[0,2],[2,1]],\"leaf_order\":[0,1]}";
        assert!(matches!(
            GrowthTree::from_json(bad),
            Err(Error::Invariant(_))
        ));
        let unknown = "{\"alpha\":\"1.5\",\"n\":1,\"edges\":[[0,1]],\"leaf_order\":[0,1],\"x\":1}";
        assert!(GrowthTree::from_json(unknown).is_err());
    }
}
