//! Trains on a planted-structure corpus and compares induced trees with
//! the planted ones.
//!
//! `cargo run --release -p tae --example planted -- [key=value ...]`
//!
//! Keys are training config fields; `syn.<field>` sets a generator field.

use std::collections::BTreeMap;

use tae::corpus::{build_vocab, embed_document, stratified_split};
use tae::evaluation::{expected_random_precision, micro_precision, RootSpan};
use tae::model::TaeModel;
use tae::synthetic::{generate, SyntheticConfig};
use tae::training::{fit, induce_all, TrainConfig};

fn main() -> tae::Result<()> {
    let mut cfg = TrainConfig {
        epochs: 10,
        hidden: 32,
        ..TrainConfig::default()
    };
    let mut syn = serde_json::to_value(SyntheticConfig::default())?;
    for arg in std::env::args().skip(1) {
        let (key, value) = arg.split_once('=').expect("arguments look like key=value");
        match key.strip_prefix("syn.") {
            Some(field) => syn[field] = serde_json::from_str(value)?,
            None => cfg.set(key, value)?,
        }
    }
    let mut syn: SyntheticConfig = serde_json::from_value(syn)?;
    syn.seed = cfg.seed;
    let corpus = generate(&syn)?;
    let vocab = build_vocab(&corpus.documents, cfg.vocab_cap, cfg.min_freq);
    let (train, dev) = stratified_split(&corpus.documents, cfg.dev_size);
    let embed = |docs: &[tae::corpus::Document]| -> Vec<_> {
        docs.iter()
            .map(|d| embed_document(d, &corpus.embeddings, &vocab, cfg.max_words))
            .collect()
    };
    let (train, dev, all) = (embed(&train), embed(&dev), embed(&corpus.documents));
    let init = TaeModel::new(cfg.model_config(corpus.embeddings.dim()), cfg.seed);
    let score = |model: &TaeModel| -> tae::Result<f64> {
        let induced = induce_all(model, &all)?;
        let pred: BTreeMap<_, _> = all
            .iter()
            .zip(induced)
            .map(|(d, r)| (d.doc_id.clone(), r.tree))
            .collect();
        Ok(micro_precision(&pred, &corpus.gold, RootSpan::Include).precision)
    };
    println!(
        "random trees  {:.2}",
        expected_random_precision(corpus.gold.values(), RootSpan::Include)
    );
    println!("untrained     {:.2}", score(&init)?);
    let start = std::time::Instant::now();
    let result = fit(init, &train, &dev, &cfg, |e| {
        println!(
            "epoch {:>3} {:<14} tau {:.3} train {:.4e} dev {:.4e} grad {:.2e}",
            e.epoch,
            e.phase.as_str(),
            e.tau,
            e.train_loss,
            e.dev_loss,
            e.grad_norm
        )
    })?;
    let best = result
        .log
        .iter()
        .map(|e| e.dev_loss)
        .fold(f64::INFINITY, f64::min);
    println!(
        "dev loss {:.4e} -> {:.4e} ({:.1}%), best epoch {:?}",
        result.initial_dev_loss,
        best,
        100.0 * best / result.initial_dev_loss,
        result.best_epoch
    );
    println!(
        "trained       {:.2} in {:.1?}",
        score(&result.best)?,
        start.elapsed()
    );
    Ok(())
}
