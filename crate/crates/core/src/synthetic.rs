//! Planted-structure corpora with known discourse trees.
//!
//! Every internal node of a planted document tree carries a topic. The
//! words of an EDU are drawn from the topics on its path to the root,
//! weighted toward the nearest ancestors, so EDUs that are merged early in
//! the planted tree share vocabulary. Word vectors are noisy copies of
//! their topic centroid.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryTree, Document, EmbeddingTable};
use crate::error::{Error, Result};
use crate::evaluation::sample_uniform_tree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub num_docs: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub max_edus_per_sentence: usize,
    pub words_per_edu: usize,
    pub num_topics: usize,
    pub words_per_topic: usize,
    pub embed_dim: usize,
    /// Standard deviation of a word vector around its topic centroid.
    pub word_noise: f64,
    /// Relative weight of each step closer to the leaf when picking the
    /// topic of a word.
    pub depth_decay: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_docs: 500,
            min_sentences: 2,
            max_sentences: 4,
            max_edus_per_sentence: 4,
            words_per_edu: 8,
            num_topics: 24,
            words_per_topic: 20,
            embed_dim: 32,
            word_noise: 0.3,
            depth_decay: 3.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_docs", self.num_docs),
            ("min_sentences", self.min_sentences),
            ("max_edus_per_sentence", self.max_edus_per_sentence),
            ("words_per_edu", self.words_per_edu),
            ("num_topics", self.num_topics),
            ("words_per_topic", self.words_per_topic),
            ("embed_dim", self.embed_dim),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(Error::Config {
                    field: field.into(),
                    message: "must be positive".into(),
                });
            }
        }
        if self.max_sentences < self.min_sentences {
            return Err(Error::Config {
                field: "max_sentences".into(),
                message: format!("must be at least min_sentences ({})", self.min_sentences),
            });
        }
        if !(self.word_noise >= 0.0 && self.depth_decay >= 1.0) {
            return Err(Error::Config {
                field: "depth_decay".into(),
                message: "noise must be non-negative and decay at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub gold: BTreeMap<String, BinaryTree>,
    pub embeddings: EmbeddingTable,
}

fn word(topic: usize, k: usize) -> String {
    format!("t{topic}w{k}")
}

/// Root-to-leaf topic paths of every leaf, nearest ancestor last.
fn topic_paths(
    tree: &BinaryTree,
    topics: &mut impl FnMut() -> usize,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    match tree {
        BinaryTree::Leaf(_) => out.push(path.clone()),
        BinaryTree::Node(l, r) => {
            path.push(topics());
            topic_paths(l, topics, path, out);
            topic_paths(r, topics, path, out);
            path.pop();
        }
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let mut embeddings = EmbeddingTable::new(cfg.embed_dim);
    for t in 0..cfg.num_topics {
        let centroid: Vec<f64> = (0..cfg.embed_dim).map(|_| normal(&mut rng)).collect();
        for k in 0..cfg.words_per_topic {
            let v = centroid
                .iter()
                .map(|c| c + cfg.word_noise * normal(&mut rng))
                .collect();
            embeddings.insert(word(t, k), v)?;
        }
    }

    let mut documents = Vec::with_capacity(cfg.num_docs);
    let mut gold = BTreeMap::new();
    let width = cfg.num_docs.to_string().len();
    for d in 0..cfg.num_docs {
        let doc_id = format!("syn{d:0width$}");
        let num_sentences = rng.gen_range(cfg.min_sentences..=cfg.max_sentences);
        let sizes: Vec<usize> = (0..num_sentences)
            .map(|_| rng.gen_range(1..=cfg.max_edus_per_sentence))
            .collect();
        let mut start = 0;
        let sentence_trees: Vec<BinaryTree> = sizes
            .iter()
            .map(|&s| {
                let t = sample_uniform_tree(start, s, &mut rng);
                start += s;
                t
            })
            .collect();
        let tree = sample_uniform_tree(0, num_sentences, &mut rng).substitute(&sentence_trees);

        let mut paths = Vec::new();
        let mut topic_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let mut draw_topic = || topic_rng.gen_range(0..cfg.num_topics);
        let leaf_topics: Vec<usize> = (0..start).map(|_| draw_topic()).collect();
        topic_paths(&tree, &mut draw_topic, &mut Vec::new(), &mut paths);

        let mut edus = Vec::with_capacity(start);
        for (leaf, path) in paths.iter().enumerate() {
            // The leaf's own topic is the deepest level of its path.
            let mut levels = path.clone();
            levels.push(leaf_topics[leaf]);
            let weights: Vec<f64> = (0..levels.len())
                .map(|i| cfg.depth_decay.powi(i as i32))
                .collect();
            let total: f64 = weights.iter().sum();
            let words: Vec<String> = (0..cfg.words_per_edu)
                .map(|_| {
                    let mut u = rng.gen::<f64>() * total;
                    let mut level = levels.len() - 1;
                    for (i, w) in weights.iter().enumerate() {
                        if u < *w {
                            level = i;
                            break;
                        }
                        u -= w;
                    }
                    word(levels[level], rng.gen_range(0..cfg.words_per_topic))
                })
                .collect();
            edus.push(words.join(" "));
        }
        let mut it = edus.into_iter();
        let sentences = sizes
            .iter()
            .map(|&s| it.by_ref().take(s).collect())
            .collect();
        let label = paths
            .first()
            .and_then(|p| p.first())
            .map_or(1, |t| (t % 5) as u8 + 1);
        documents.push(Document {
            doc_id: doc_id.clone(),
            sentences,
            label: Some(label),
        });
        gold.insert(doc_id, tree);
    }
    Ok(SyntheticCorpus {
        documents,
        gold,
        embeddings,
    })
}
