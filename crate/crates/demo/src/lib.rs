//! Browser demo bindings. Every export takes plain numbers or strings and
//! returns a JSON string for the page to render.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use tae::autodiff::{ParamStore, Tape, Tensor};
use tae::corpus::{parse_nary, BinaryTree, EmbeddedDocument};
use tae::evaluation::{
    baseline_tree, expected_random_counts, expected_sentence_random_counts, micro_precision,
    tree_spans, BaselineKind, RootSpan,
};
use tae::model::{select_merge, GumbelConfig, ModelConfig, Sampler, TaeModel};
use tae::training::document_loss;

const DEMO_EMBED: usize = 8;
const DEMO_HIDDEN: usize = 16;
const MAX_DRAWS: usize = 20_000;

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[derive(Debug, Serialize)]
pub struct GumbelSummary {
    /// Noise-free `softmax(scores / tau)`.
    pub relaxed: Vec<f64>,
    /// Fraction of perturbed draws won by each position.
    pub frequencies: Vec<f64>,
    /// Perturbed probabilities of the first draw.
    pub first_draw: Vec<f64>,
    pub draws: usize,
}

pub fn gumbel_summary(
    scores: &[f64],
    tau: f64,
    seed: u64,
    draws: usize,
) -> Result<GumbelSummary, String> {
    if scores.is_empty() {
        return Err("enter at least one score".into());
    }
    if draws == 0 || draws > MAX_DRAWS {
        return Err(format!("draws must lie in 1..={MAX_DRAWS}"));
    }
    let store = ParamStore::new();
    let mut tape = Tape::new(&store);
    let s = tape
        .leaf(Tensor::vector(scores.to_vec()))
        .map_err(|e| e.to_string())?;
    let mut plain = Sampler::new(GumbelConfig::deterministic(tau), 0);
    let relaxed = select_merge(&mut tape, s, &mut plain).map_err(|e| e.to_string())?;
    let relaxed = tape.value(relaxed.probs).data().to_vec();
    let cfg = GumbelConfig {
        tau,
        noise: true,
        seed,
    };
    let mut counts = vec![0usize; scores.len()];
    let mut first_draw = Vec::new();
    for d in 0..draws {
        let mut tape = Tape::new(&store);
        let s = tape
            .leaf(Tensor::vector(scores.to_vec()))
            .map_err(|e| e.to_string())?;
        let sel = select_merge(&mut tape, s, &mut Sampler::new(cfg, d as u64))
            .map_err(|e| e.to_string())?;
        counts[sel.index] += 1;
        if d == 0 {
            first_draw = tape.value(sel.probs).data().to_vec();
        }
    }
    Ok(GumbelSummary {
        relaxed,
        frequencies: counts.iter().map(|&c| c as f64 / draws as f64).collect(),
        first_draw,
        draws,
    })
}

/// Relaxed and sampled merge distributions for a row of merge scores.
#[wasm_bindgen]
pub fn gumbel_explore(
    scores: Vec<f64>,
    tau: f64,
    seed: u32,
    draws: u32,
) -> Result<String, JsValue> {
    to_js(gumbel_summary(&scores, tau, seed as u64, draws as usize))
}

#[derive(Debug, Serialize)]
pub struct ScoredTree {
    pub name: String,
    pub tree: String,
    pub precision: f64,
    pub precision_without_root: f64,
}

#[derive(Debug, Serialize)]
pub struct BaselineComparison {
    pub gold: String,
    pub trees: Vec<ScoredTree>,
    /// Expected precision of a uniformly random tree.
    pub uniform_random: f64,
    /// Expected precision of a random tree that keeps sentences intact.
    pub sentence_random: f64,
}

fn precision(pred: &BinaryTree, gold: &BinaryTree, root: RootSpan) -> f64 {
    let p = BTreeMap::from([(String::new(), pred.clone())]);
    let g = BTreeMap::from([(String::new(), gold.clone())]);
    micro_precision(&p, &g, root).precision
}

fn ratio((m, p): (f64, usize)) -> f64 {
    if p == 0 {
        100.0
    } else {
        100.0 * m / p as f64
    }
}

pub fn compare_baselines(
    sentence_sizes: &[usize],
    gold: &str,
) -> Result<BaselineComparison, String> {
    let gold = parse_nary(gold)
        .map_err(|e| e.to_string())?
        .right_binarize();
    let n: usize = sentence_sizes.iter().sum();
    if gold.num_leaves() != n {
        return Err(format!(
            "gold tree has {} leaves, sentences cover {n}",
            gold.num_leaves()
        ));
    }
    let trees = BaselineKind::ALL
        .into_iter()
        .map(|kind| {
            let t = baseline_tree(kind, sentence_sizes).map_err(|e| e.to_string())?;
            Ok(ScoredTree {
                name: kind.as_str().to_string(),
                tree: t.to_string(),
                precision: precision(&t, &gold, RootSpan::Include),
                precision_without_root: precision(&t, &gold, RootSpan::Exclude),
            })
        })
        .collect::<Result<_, String>>()?;
    let sentence_random = expected_sentence_random_counts(&gold, sentence_sizes, RootSpan::Include)
        .map_err(|e| e.to_string())?;
    Ok(BaselineComparison {
        gold: gold.to_string(),
        trees,
        uniform_random: ratio(expected_random_counts(&gold, RootSpan::Include)),
        sentence_random: ratio(sentence_random),
    })
}

/// Branching baselines for the given sentence sizes, scored against a gold
/// s-expression.
#[wasm_bindgen]
pub fn baselines(sentence_sizes: Vec<u32>, gold: &str) -> Result<String, JsValue> {
    let sizes: Vec<usize> = sentence_sizes.iter().map(|&s| s as usize).collect();
    to_js(compare_baselines(&sizes, gold))
}

#[derive(Debug, Serialize)]
pub struct InducedTree {
    pub tree: String,
    pub document_trace: Vec<usize>,
    pub sentence_traces: Vec<Vec<usize>>,
    pub spans: Vec<(usize, usize)>,
    pub reconstruction_loss: f64,
}

/// Encodes a document of random EDU vectors with a randomly initialized
/// model and returns the tree its merge decisions build.
pub fn induce_random(
    sentence_sizes: &[usize],
    seed: u64,
    tau: f64,
    noise: bool,
) -> Result<InducedTree, String> {
    if sentence_sizes.is_empty()
        || sentence_sizes.contains(&0)
        || sentence_sizes.iter().sum::<usize>() > 64
    {
        return Err("use 1 to 64 EDUs in non-empty sentences".into());
    }
    let model = TaeModel::new(ModelConfig::new(DEMO_EMBED, DEMO_HIDDEN), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let doc = EmbeddedDocument {
        doc_id: "demo".into(),
        sentences: sentence_sizes
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        Tensor::vector((0..DEMO_EMBED).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    })
                    .collect()
            })
            .collect(),
        label: None,
    };
    let mut tape = Tape::new(&model.store);
    let mut sampler = Sampler::new(GumbelConfig { tau, noise, seed }, 0);
    let (loss, enc) =
        document_loss(&model, &mut tape, &doc, &mut sampler, None).map_err(|e| e.to_string())?;
    let tree = enc.full_tree();
    Ok(InducedTree {
        tree: tree.to_string(),
        document_trace: enc.document_trace.positions().to_vec(),
        sentence_traces: enc
            .sentence_traces
            .iter()
            .map(|t| t.positions().to_vec())
            .collect(),
        spans: tree_spans(&tree).into_iter().collect(),
        reconstruction_loss: tape.value(loss).item(),
    })
}

#[wasm_bindgen]
pub fn induce(
    sentence_sizes: Vec<u32>,
    seed: u32,
    tau: f64,
    noise: bool,
) -> Result<String, JsValue> {
    let sizes: Vec<usize> = sentence_sizes.iter().map(|&s| s as usize).collect();
    to_js(induce_random(&sizes, seed as u64, tau, noise))
}
