use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BinaryTree;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Left,
    Right,
    HierLeft,
    HierRight,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::Left,
        BaselineKind::Right,
        BaselineKind::HierLeft,
        BaselineKind::HierRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Left => "left",
            BaselineKind::Right => "right",
            BaselineKind::HierLeft => "hier-left",
            BaselineKind::HierRight => "hier-right",
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown baseline `{s}`")))
    }
}

fn branching(left: bool, start: usize, n: usize) -> BinaryTree {
    if left {
        BinaryTree::left_branching(start, n)
    } else {
        BinaryTree::right_branching(start, n)
    }
}

/// Branching baseline for a document with the given sentence sizes. The
/// flat kinds ignore sentence boundaries; the hierarchical kinds branch
/// inside each sentence and then over the sentences.
pub fn baseline_tree(kind: BaselineKind, sentence_sizes: &[usize]) -> Result<BinaryTree> {
    if sentence_sizes.is_empty() || sentence_sizes.contains(&0) {
        return Err(Error::invalid("baseline needs non-empty sentences"));
    }
    let n: usize = sentence_sizes.iter().sum();
    Ok(match kind {
        BaselineKind::Left => branching(true, 0, n),
        BaselineKind::Right => branching(false, 0, n),
        BaselineKind::HierLeft | BaselineKind::HierRight => {
            let left = kind == BaselineKind::HierLeft;
            let mut start = 0;
            let sentences: Vec<BinaryTree> = sentence_sizes
                .iter()
                .map(|&s| {
                    let t = branching(left, start, s);
                    start += s;
                    t
                })
                .collect();
            branching(left, 0, sentences.len()).substitute(&sentences)
        }
    })
}

/// `Cat(0..=n)` as floats.
fn catalan_table(n: usize) -> Vec<f64> {
    let mut cat = vec![1.0; n + 1];
    for k in 1..=n {
        cat[k] = cat[k - 1] * 2.0 * (2 * k - 1) as f64 / (k + 1) as f64;
    }
    cat
}

/// Probability that a fixed span of `m ≥ 2` leaves is a constituent of a
/// binary tree over `n` leaves drawn uniformly from all `Cat(n-1)` trees.
pub fn span_probability(m: usize, n: usize) -> f64 {
    assert!(
        m >= 2 && m <= n,
        "span length {m} out of range for {n} leaves"
    );
    let cat = catalan_table(n);
    // Trees containing the span: any tree inside it, times any tree over
    // the n - m + 1 units left after collapsing it.
    cat[m - 1] * cat[n - m] / cat[n - 1]
}

/// Expected matched and predicted span counts of a uniformly random tree
/// scored against `gold`.
pub fn expected_random_counts(gold: &BinaryTree, root: super::RootSpan) -> (f64, usize) {
    let n = gold.num_leaves();
    let spans = super::scored_spans(gold, root);
    let cat = catalan_table(n);
    let matched = spans
        .iter()
        .map(|&(s, e)| {
            let m = e - s + 1;
            cat[m - 1] * cat[n - m] / cat[n - 1]
        })
        .sum();
    (matched, spans.len())
}

/// Expected micro-precision of uniformly random binary trees against a
/// treebank.
pub fn expected_random_precision<'a>(
    gold: impl IntoIterator<Item = &'a BinaryTree>,
    root: super::RootSpan,
) -> f64 {
    let (mut matched, mut predicted) = (0.0, 0usize);
    for tree in gold {
        let (m, p) = expected_random_counts(tree, root);
        matched += m;
        predicted += p;
    }
    if predicted == 0 {
        100.0
    } else {
        100.0 * matched / predicted as f64
    }
}

/// Expected matched and predicted span counts of a random tree that is
/// uniform within each sentence and uniform over the sentence roots.
pub fn expected_sentence_random_counts(
    gold: &BinaryTree,
    sentence_sizes: &[usize],
    root: super::RootSpan,
) -> Result<(f64, usize)> {
    let n: usize = sentence_sizes.iter().sum();
    if n != gold.num_leaves() || sentence_sizes.contains(&0) {
        return Err(Error::invalid(format!(
            "sentence sizes {sentence_sizes:?} do not cover {} leaves",
            gold.num_leaves()
        )));
    }
    let mut starts = Vec::with_capacity(sentence_sizes.len() + 1);
    let mut acc = 0;
    for &s in sentence_sizes {
        starts.push(acc);
        acc += s;
    }
    starts.push(acc);
    let sentence_of = |leaf: usize| starts.partition_point(|&b| b <= leaf) - 1;
    let cat = catalan_table(n.max(sentence_sizes.len()));
    let spans = super::scored_spans(gold, root);
    let matched = spans
        .iter()
        .map(|&(s, e)| {
            let (a, b) = (sentence_of(s), sentence_of(e));
            if a == b {
                let k = sentence_sizes[a];
                let m = e - s + 1;
                cat[m - 1] * cat[k - m] / cat[k - 1]
            } else if starts[a] == s && starts[b + 1] == e + 1 {
                let total = sentence_sizes.len();
                let c = b - a + 1;
                cat[c - 1] * cat[total - c] / cat[total - 1]
            } else {
                0.0
            }
        })
        .sum();
    Ok((matched, spans.len()))
}

/// A tree drawn uniformly from all binary trees over leaves
/// `start..start + n`.
pub fn sample_uniform_tree(start: usize, n: usize, rng: &mut impl Rng) -> BinaryTree {
    let cat = catalan_table(n.max(1));
    sample_with(start, n, &cat, rng)
}

fn sample_with(start: usize, n: usize, cat: &[f64], rng: &mut impl Rng) -> BinaryTree {
    if n == 1 {
        return BinaryTree::Leaf(start);
    }
    // The left subtree has k leaves with weight Cat(k-1)·Cat(n-k-1).
    let mut u = rng.gen::<f64>() * cat[n - 1];
    let mut k = 1;
    while k < n - 1 {
        let w = cat[k - 1] * cat[n - k - 1];
        if u < w {
            break;
        }
        u -= w;
        k += 1;
    }
    BinaryTree::node(
        sample_with(start, k, cat, rng),
        sample_with(start + k, n - k, cat, rng),
    )
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::evaluation::RootSpan;

    #[test]
    fn flat_baselines() {
        assert_eq!(
            baseline_tree(BaselineKind::Left, &[3]).unwrap().to_string(),
            "((0 1) 2)"
        );
        assert_eq!(
            baseline_tree(BaselineKind::Right, &[3])
                .unwrap()
                .to_string(),
            "(0 (1 2))"
        );
        assert_eq!(
            baseline_tree(BaselineKind::Left, &[1, 2])
                .unwrap()
                .to_string(),
            "((0 1) 2)"
        );
    }

    #[test]
    fn hierarchical_baselines() {
        let t = baseline_tree(BaselineKind::HierRight, &[2, 2]).unwrap();
        assert_eq!(t.to_string(), "((0 1) (2 3))");
        let t = baseline_tree(BaselineKind::HierLeft, &[1, 3, 2]).unwrap();
        assert_eq!(t.to_string(), "((0 ((1 2) 3)) (4 5))");
        let t = baseline_tree(BaselineKind::HierRight, &[1, 3, 2]).unwrap();
        assert_eq!(t.to_string(), "(0 ((1 (2 3)) (4 5)))");
        assert!(baseline_tree(BaselineKind::Left, &[]).is_err());
        assert!(baseline_tree(BaselineKind::Left, &[2, 0]).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.as_str().parse::<BaselineKind>().unwrap(), k);
        }
        assert!("diagonal".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn catalan_numbers() {
        let cat = catalan_table(6);
        assert_eq!(cat, vec![1.0, 1.0, 2.0, 5.0, 14.0, 42.0, 132.0]);
    }

    #[test]
    fn span_probability_small_cases() {
        // Three leaves: each of (0,1) and (1,2) appears in one of two trees.
        assert_eq!(span_probability(2, 3), 0.5);
        assert_eq!(span_probability(3, 3), 1.0);
        // Four leaves, five trees; (0,1) appears in (((0 1) 2) 3) and ((0 1) (2 3)).
        assert_eq!(span_probability(2, 4), 2.0 / 5.0);
        assert_eq!(span_probability(3, 4), 2.0 / 5.0);
    }

    #[test]
    fn uniform_sampler_hits_every_tree_equally() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts: HashMap<String, usize> = HashMap::new();
        let draws = 42_000;
        for _ in 0..draws {
            *counts
                .entry(sample_uniform_tree(0, 6, &mut rng).to_string())
                .or_default() += 1;
        }
        assert_eq!(counts.len(), 42);
        for &c in counts.values() {
            assert!((c as f64 - 1000.0).abs() < 150.0, "{c}");
        }
    }

    #[test]
    fn sentence_random_matches_sampling() {
        let gold = crate::corpus::parse_tree("((0 (1 2)) ((3 4) (5 (6 7))))").unwrap();
        let sizes = [3, 2, 3];
        let (m, p) = expected_sentence_random_counts(&gold, &sizes, RootSpan::Include).unwrap();
        let exact = 100.0 * m / p as f64;
        let bank = std::collections::BTreeMap::from([("g".to_string(), gold.clone())]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 20_000;
        let mut total = 0.0;
        for _ in 0..trials {
            let mut start = 0;
            let parts: Vec<BinaryTree> = sizes
                .iter()
                .map(|&s| {
                    let t = sample_uniform_tree(start, s, &mut rng);
                    start += s;
                    t
                })
                .collect();
            let tree = sample_uniform_tree(0, sizes.len(), &mut rng).substitute(&parts);
            let pred = std::collections::BTreeMap::from([("g".to_string(), tree)]);
            total += crate::evaluation::micro_precision(&pred, &bank, RootSpan::Include).precision;
        }
        assert!(
            (total / trials as f64 - exact).abs() < 0.5,
            "{} vs {exact}",
            total / trials as f64
        );
        assert!(expected_sentence_random_counts(&gold, &[3, 3], RootSpan::Include).is_err());
    }

    #[test]
    fn expected_precision_matches_sampling() {
        let gold = crate::corpus::parse_tree("((0 (1 2)) ((3 4) (5 (6 7))))").unwrap();
        let exact = expected_random_precision([&gold], RootSpan::Exclude);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bank = std::collections::BTreeMap::from([("g".to_string(), gold.clone())]);
        let trials = 20_000;
        let mut total = 0.0;
        for _ in 0..trials {
            let pred = std::collections::BTreeMap::from([(
                "g".to_string(),
                sample_uniform_tree(0, 8, &mut rng),
            )]);
            total += crate::evaluation::micro_precision(&pred, &bank, RootSpan::Exclude).precision;
        }
        assert!(
            (total / trials as f64 - exact).abs() < 0.5,
            "{} vs {exact}",
            total / trials as f64
        );
    }
}
