//! JSON model files: flat per-tree node tables addressed by id.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Ensemble, Node, Tree};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Not valid JSON for the schema; message carries line/column.
    Json(String),
    /// Parsed fine but violates the model contract.
    Integrity(String),
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::Json(msg) => write!(f, "model parse error: {msg}"),
            ModelError::Integrity(msg) => write!(f, "model integrity error: {msg}"),
        }
    }
}

impl core::error::Error for ModelError {}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    base_score: f64,
    feature_names: Vec<String>,
    trees: Vec<TreeDoc>,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    cover: f64,
}

/// Compact JSON bytes for `model`; numbers keep full round-trip precision.
pub fn save_model(model: &Ensemble) -> Result<Vec<u8>, ModelError> {
    let doc = ModelDoc {
        format_version: MODEL_FORMAT_VERSION,
        base_score: model.base_score,
        feature_names: model.feature_names.clone(),
        trees: model
            .trees
            .iter()
            .map(|tree| TreeDoc {
                nodes: tree
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(id, node)| match *node {
                        Node::Split { feature, threshold, left, right, cover } => NodeDoc {
                            id,
                            kind: String::from("split"),
                            feature: Some(feature),
                            threshold: Some(threshold),
                            left: Some(left),
                            right: Some(right),
                            weight: None,
                            cover,
                        },
                        Node::Leaf { weight, cover } => NodeDoc {
                            id,
                            kind: String::from("leaf"),
                            feature: None,
                            threshold: None,
                            left: None,
                            right: None,
                            weight: Some(weight),
                            cover,
                        },
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_vec(&doc).map_err(|e| ModelError::Json(e.to_string()))
}

/// Parses and validates a model document produced by [`save_model`].
pub fn load_model(bytes: &[u8]) -> Result<Ensemble, ModelError> {
    let doc: ModelDoc =
        serde_json::from_slice(bytes).map_err(|e| ModelError::Json(e.to_string()))?;
    if doc.format_version != MODEL_FORMAT_VERSION {
        return Err(ModelError::Integrity(alloc::format!(
            "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
            doc.format_version
        )));
    }
    if !doc.base_score.is_finite() {
        return Err(ModelError::Integrity(String::from("base_score is not finite")));
    }
    let m = doc.feature_names.len();
    let mut trees = Vec::with_capacity(doc.trees.len());
    for (t, tree_doc) in doc.trees.iter().enumerate() {
        trees.push(parse_tree(t, tree_doc, m)?);
    }
    Ok(Ensemble { base_score: doc.base_score, feature_names: doc.feature_names, trees })
}

fn parse_tree(t: usize, doc: &TreeDoc, m: usize) -> Result<Tree, ModelError> {
    let bad = |msg: String| Err(ModelError::Integrity(alloc::format!("tree {t}: {msg}")));
    if doc.nodes.is_empty() {
        return bad(String::from("empty node list"));
    }
    let n = doc.nodes.len();
    let mut nodes = Vec::with_capacity(n);
    for (i, nd) in doc.nodes.iter().enumerate() {
        if nd.id != i {
            return bad(alloc::format!("node {i} carries id {}", nd.id));
        }
        if !(nd.cover.is_finite() && nd.cover >= 0.0) {
            return bad(alloc::format!("node {i}: bad cover {}", nd.cover));
        }
        let node = match nd.kind.as_str() {
            "split" => {
                let (Some(feature), Some(threshold), Some(left), Some(right)) =
                    (nd.feature, nd.threshold, nd.left, nd.right)
                else {
                    return bad(alloc::format!("split node {i} is missing fields"));
                };
                if feature >= m {
                    return bad(alloc::format!(
                        "node {i}: feature {feature} out of range for {m} features"
                    ));
                }
                if !threshold.is_finite() {
                    return bad(alloc::format!("node {i}: threshold is not finite"));
                }
                Node::Split { feature, threshold, left, right, cover: nd.cover }
            }
            "leaf" => {
                let Some(weight) = nd.weight else {
                    return bad(alloc::format!("leaf node {i} is missing weight"));
                };
                if !weight.is_finite() {
                    return bad(alloc::format!("node {i}: weight is not finite"));
                }
                Node::Leaf { weight, cover: nd.cover }
            }
            other => return bad(alloc::format!("node {i}: unknown kind '{other}'")),
        };
        nodes.push(node);
    }
    // Every node must be reachable from the root exactly once.
    let mut visited = alloc::vec![false; n];
    let mut stack = alloc::vec![0usize];
    while let Some(i) = stack.pop() {
        if i >= n {
            return bad(alloc::format!("child index {i} out of range"));
        }
        if visited[i] {
            return bad(alloc::format!("node {i} is referenced more than once"));
        }
        visited[i] = true;
        if let Node::Split { left, right, .. } = nodes[i] {
            stack.push(left);
            stack.push(right);
        }
    }
    if let Some(orphan) = visited.iter().position(|v| !v) {
        return bad(alloc::format!("node {orphan} is unreachable from the root"));
    }
    Ok(Tree { nodes })
}

#[cfg(test)]
mod tests {
    use super::super::{train, TrainConfig};
    use super::*;
    use crate::rng::SplitMix64;
    use crate::signal::Dataset;
    use alloc::format;
    use alloc::vec;

    fn trained_model() -> (Ensemble, Dataset) {
        let mut rng = SplitMix64::new(99);
        let n = 180;
        let x1: Vec<f64> = (0..n).map(|_| rng.next_f64() * 4.0).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let y: Vec<f64> = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| 20.0 + 5.0 * a + 3.0 * b + rng.next_normal())
            .collect();
        let ts: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let data = Dataset::new(
            vec![String::from("a"), String::from("b")],
            vec![x1, x2],
            y,
            ts,
            None,
        )
        .unwrap();
        let cfg = TrainConfig {
            n_estimators: 12,
            max_depth: 4,
            subsample: 0.8,
            colsample: 0.9,
            seed: 3,
            ..TrainConfig::default()
        };
        (train(&data, &cfg).unwrap(), data)
    }

    #[test]
    fn round_trip_is_identity() {
        let (model, data) = trained_model();
        let bytes = save_model(&model).unwrap();
        let back = load_model(&bytes).unwrap();
        assert_eq!(model, back);
        let a = model.predict_dataset(&data).unwrap();
        let b = back.predict_dataset(&data).unwrap();
        // bit-identical, not merely close
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn hand_written_document_predicts_per_routing_rule() {
        let text = r#"{
            "format_version": 1,
            "base_score": 1.0,
            "feature_names": ["x"],
            "trees": [{"nodes": [
                {"id": 0, "kind": "split", "feature": 0, "threshold": 2.0,
                 "left": 1, "right": 2, "cover": 10.0},
                {"id": 1, "kind": "leaf", "weight": -1.0, "cover": 4.0},
                {"id": 2, "kind": "leaf", "weight": 3.0, "cover": 6.0}
            ]}]
        }"#;
        let model = load_model(text.as_bytes()).unwrap();
        assert_eq!(model.predict_row(&[0.0]).unwrap(), 0.0);
        assert_eq!(model.predict_row(&[5.0]).unwrap(), 4.0);
        // boundary routes right
        assert_eq!(model.predict_row(&[2.0]).unwrap(), 4.0);
    }

    #[test]
    fn truncated_payload_is_a_parse_error() {
        let (model, _) = trained_model();
        let bytes = save_model(&model).unwrap();
        let cut = &bytes[..bytes.len() / 2];
        match load_model(cut) {
            Err(ModelError::Json(msg)) => assert!(msg.contains("line")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn doc_with_nodes(nodes: &str) -> String {
        format!(
            r#"{{"format_version": 1, "base_score": 0.0, "feature_names": ["x"],
                "trees": [{{"nodes": [{nodes}]}}]}}"#
        )
    }

    #[test]
    fn integrity_checks_fire() {
        // wrong version
        let bad_version = r#"{"format_version": 2, "base_score": 0.0,
            "feature_names": [], "trees": []}"#;
        assert!(matches!(
            load_model(bad_version.as_bytes()),
            Err(ModelError::Integrity(_))
        ));

        // id out of sequence
        let doc = doc_with_nodes(r#"{"id": 1, "kind": "leaf", "weight": 0.0, "cover": 1.0}"#);
        assert!(matches!(load_model(doc.as_bytes()), Err(ModelError::Integrity(_))));

        // both children point at the same node
        let doc = doc_with_nodes(
            r#"{"id": 0, "kind": "split", "feature": 0, "threshold": 1.0,
                "left": 1, "right": 1, "cover": 2.0},
               {"id": 1, "kind": "leaf", "weight": 0.0, "cover": 2.0}"#,
        );
        let err = load_model(doc.as_bytes());
        assert!(matches!(err, Err(ModelError::Integrity(_))), "{err:?}");

        // child out of range
        let doc = doc_with_nodes(
            r#"{"id": 0, "kind": "split", "feature": 0, "threshold": 1.0,
                "left": 1, "right": 7, "cover": 2.0},
               {"id": 1, "kind": "leaf", "weight": 0.0, "cover": 1.0}"#,
        );
        assert!(matches!(load_model(doc.as_bytes()), Err(ModelError::Integrity(_))));

        // split missing its threshold
        let doc = doc_with_nodes(
            r#"{"id": 0, "kind": "split", "feature": 0,
                "left": 1, "right": 2, "cover": 2.0},
               {"id": 1, "kind": "leaf", "weight": 0.0, "cover": 1.0},
               {"id": 2, "kind": "leaf", "weight": 0.0, "cover": 1.0}"#,
        );
        assert!(matches!(load_model(doc.as_bytes()), Err(ModelError::Integrity(_))));

        // unknown kind
        let doc = doc_with_nodes(r#"{"id": 0, "kind": "stump", "cover": 1.0}"#);
        assert!(matches!(load_model(doc.as_bytes()), Err(ModelError::Integrity(_))));

        // feature index beyond the name list
        let doc = doc_with_nodes(
            r#"{"id": 0, "kind": "split", "feature": 3, "threshold": 1.0,
                "left": 1, "right": 2, "cover": 2.0},
               {"id": 1, "kind": "leaf", "weight": 0.0, "cover": 1.0},
               {"id": 2, "kind": "leaf", "weight": 0.0, "cover": 1.0}"#,
        );
        assert!(matches!(load_model(doc.as_bytes()), Err(ModelError::Integrity(_))));
    }

    #[test]
    fn empty_forest_round_trips() {
        let model = Ensemble {
            base_score: 42.0,
            feature_names: vec![String::from("only")],
            trees: vec![],
        };
        let back = load_model(&save_model(&model).unwrap()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.predict_row(&[1.0]).unwrap(), 42.0);
    }
}
