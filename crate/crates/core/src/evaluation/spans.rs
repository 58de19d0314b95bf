use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryTree;

/// Constituent spans `(start, end)`, end inclusive.
pub type SpanSet = BTreeSet<(usize, usize)>;

/// Whether the span covering the whole document is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootSpan {
    #[default]
    Include,
    Exclude,
}

/// Spans of all internal nodes, root included, leaves excluded.
pub fn tree_spans(tree: &BinaryTree) -> SpanSet {
    tree.internal_spans().into_iter().collect()
}

pub fn scored_spans(tree: &BinaryTree, root: RootSpan) -> SpanSet {
    let mut spans = tree_spans(tree);
    if root == RootSpan::Exclude {
        spans.remove(&tree.span());
    }
    spans
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocSpanCounts {
    pub doc_id: String,
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocError {
    pub doc_id: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    /// Percentage in `[0, 100]`; 100 when nothing was predicted.
    pub precision: f64,
    pub matched: usize,
    pub predicted: usize,
    pub root_span: RootSpan,
    pub documents: Vec<DocSpanCounts>,
    /// Documents excluded from the score.
    pub errors: Vec<DocError>,
}

/// Corpus-level span precision, micro-averaged over documents in doc_id
/// order. Documents without a gold tree or with a different leaf count are
/// excluded and reported.
pub fn micro_precision(
    pred: &BTreeMap<String, BinaryTree>,
    gold: &BTreeMap<String, BinaryTree>,
    root: RootSpan,
) -> PrecisionReport {
    let mut documents = Vec::new();
    let mut errors = Vec::new();
    let (mut matched, mut predicted) = (0, 0);
    for (doc_id, p) in pred {
        let Some(g) = gold.get(doc_id) else {
            errors.push(DocError {
                doc_id: doc_id.clone(),
                message: "no gold tree".into(),
            });
            continue;
        };
        if p.num_leaves() != g.num_leaves() {
            errors.push(DocError {
                doc_id: doc_id.clone(),
                message: format!(
                    "predicted tree has {} leaves, gold has {}",
                    p.num_leaves(),
                    g.num_leaves()
                ),
            });
            continue;
        }
        let ps = scored_spans(p, root);
        let gs = scored_spans(g, root);
        let m = ps.intersection(&gs).count();
        matched += m;
        predicted += ps.len();
        documents.push(DocSpanCounts {
            doc_id: doc_id.clone(),
            matched: m,
            predicted: ps.len(),
            gold: gs.len(),
        });
    }
    let precision = if predicted == 0 {
        100.0
    } else {
        100.0 * matched as f64 / predicted as f64
    };
    PrecisionReport {
        precision,
        matched,
        predicted,
        root_span: root,
        documents,
        errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_tree;

    fn bank(items: &[(&str, &str)]) -> BTreeMap<String, BinaryTree> {
        items
            .iter()
            .map(|(id, t)| (id.to_string(), parse_tree(t).unwrap()))
            .collect()
    }

    #[test]
    fn spans_of_small_trees() {
        assert!(tree_spans(&BinaryTree::Leaf(0)).is_empty());
        let t = parse_tree("((0 1) 2)").unwrap();
        assert_eq!(tree_spans(&t), SpanSet::from([(0, 1), (0, 2)]));
        assert_eq!(scored_spans(&t, RootSpan::Exclude), SpanSet::from([(0, 1)]));
    }

    #[test]
    fn left_versus_right_scores_half() {
        let pred = bank(&[("a", "((0 1) 2)")]);
        let gold = bank(&[("a", "(0 (1 2))")]);
        let r = micro_precision(&pred, &gold, RootSpan::Include);
        assert_eq!(r.precision, 50.0);
        let r = micro_precision(&pred, &gold, RootSpan::Exclude);
        assert_eq!(r.precision, 0.0);
    }

    #[test]
    fn identity_and_single_leaf_documents() {
        let t = bank(&[("a", "((0 1) (2 3))"), ("b", "0"), ("c", "(0 (1 2))")]);
        let r = micro_precision(&t, &t, RootSpan::Include);
        assert_eq!(r.precision, 100.0);
        assert_eq!(r.predicted, 5);
        let single = bank(&[("b", "0")]);
        let r = micro_precision(&single, &single, RootSpan::Include);
        assert_eq!((r.matched, r.predicted, r.precision), (0, 0, 100.0));
    }

    #[test]
    fn mismatched_documents_are_excluded() {
        let pred = bank(&[("a", "(0 1)"), ("b", "((0 1) 2)"), ("z", "(0 1)")]);
        let gold = bank(&[("a", "(0 1)"), ("b", "(0 1)")]);
        let r = micro_precision(&pred, &gold, RootSpan::Include);
        assert_eq!(r.precision, 100.0);
        assert_eq!(r.documents.len(), 1);
        let ids: Vec<&str> = r.errors.iter().map(|e| e.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "z"]);
    }
}
