use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryTree;
use crate::error::{Error, Result};

/// Sequence of merge positions that builds a binary tree bottom-up.
///
/// Entry `k` is the index of the left element merged at step `k`, counted
/// among the `n - k` elements still present at that step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MergeTrace(Vec<usize>);

impl MergeTrace {
    pub fn new(positions: Vec<usize>) -> Self {
        Self(positions)
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn push(&mut self, position: usize) {
        self.0.push(position);
    }

    pub fn num_leaves(&self) -> usize {
        self.0.len() + 1
    }

    /// Checks `positions[k] <= n - k - 2` for every step.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_leaves();
        for (k, &p) in self.0.iter().enumerate() {
            if p + k + 2 > n {
                return Err(Error::InvalidTrace(format!(
                    "step {k} merges position {p} but only {} elements remain",
                    n - k
                )));
            }
        }
        Ok(())
    }

    pub fn to_tree(&self) -> Result<BinaryTree> {
        self.validate()?;
        let mut items: Vec<BinaryTree> = (0..self.num_leaves()).map(BinaryTree::Leaf).collect();
        for &p in &self.0 {
            let right = items.remove(p + 1);
            let left = std::mem::replace(&mut items[p], BinaryTree::Leaf(0));
            items[p] = BinaryTree::node(left, right);
        }
        Ok(items.pop().expect("one element remains"))
    }

    /// Canonical trace of `tree`: at each step the leftmost mergeable pair
    /// is merged.
    pub fn from_tree(tree: &BinaryTree) -> MergeTrace {
        // span -> end of the left child
        fn splits(t: &BinaryTree, out: &mut HashMap<(usize, usize), usize>) {
            if let BinaryTree::Node(l, r) = t {
                out.insert(t.span(), l.span().1);
                splits(l, out);
                splits(r, out);
            }
        }
        let mut targets = HashMap::new();
        splits(tree, &mut targets);
        let (first, last) = tree.span();
        let mut items: Vec<(usize, usize)> = (first..=last).map(|i| (i, i)).collect();
        let mut trace = MergeTrace::default();
        while items.len() > 1 {
            let k = (0..items.len() - 1)
                .find(|&k| targets.get(&(items[k].0, items[k + 1].1)) == Some(&items[k].1))
                .expect("binary tree always has a mergeable pair");
            items[k] = (items[k].0, items[k + 1].1);
            items.remove(k + 1);
            trace.push(k);
        }
        trace
    }
}
