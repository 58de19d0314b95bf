use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tae::corpus::{
    build_vocab, embed_document, load_documents, load_embeddings, load_gold_trees,
    stratified_split, write_documents, write_treebank, BinaryTree, Document, EmbeddedDocument,
};
use tae::evaluation::{
    baseline_tree, majority_baseline, micro_precision, nearest_documents, probe_train,
    random_baseline, BaselineKind, RootSpan,
};
use tae::model::{Checkpoint, TaeModel};
use tae::training::{check_gradients, eval_loss, fit, induce_all, TrainConfig};

use crate::config::RunConfig;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOG_FILE: &str = "train_log.jsonl";

/// One line of an encodings file.
#[derive(Debug, Serialize, Deserialize)]
struct EncodingRecord {
    doc_id: String,
    label: Option<u8>,
    encoding: Vec<f64>,
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes `value` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, value: &Value) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn tree_header(run: &Value) -> Vec<String> {
    vec![format!(
        "config {}",
        serde_json::to_string(run).expect("JSON values always serialize")
    )]
}

fn embed_all(
    docs: &[Document],
    table: &tae::corpus::EmbeddingTable,
    vocab: &tae::corpus::Vocab,
    max_words: usize,
) -> Vec<EmbeddedDocument> {
    docs.iter()
        .map(|d| embed_document(d, table, vocab, max_words))
        .collect()
}

pub fn train(cfg: &RunConfig, corpus: &Path, embeddings: &Path, out: &Path) -> Result<()> {
    let tc = &cfg.train;
    let docs = load_documents(corpus, tc.caps())?.documents;
    if docs.len() <= tc.dev_size {
        bail!(tae::Error::Config {
            field: "dev_size".into(),
            message: format!(
                "{} leaves no training documents out of {}",
                tc.dev_size,
                docs.len()
            ),
        });
    }
    let (train_docs, dev_docs) = stratified_split(&docs, tc.dev_size);
    let vocab = build_vocab(&train_docs, tc.vocab_cap, tc.min_freq);
    let table = load_embeddings(embeddings, Some(&vocab))?;
    let train_set = embed_all(&train_docs, &table, &vocab, tc.max_words);
    let dev_set = embed_all(&dev_docs, &table, &vocab, tc.max_words);
    let init = TaeModel::new(tc.model_config(table.dim()), tc.seed);

    let run = json!({
        "command": "train",
        "corpus": path_str(corpus),
        "embeddings": path_str(embeddings),
        "config": cfg,
    });
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let log_path = out.join(LOG_FILE);
    let mut log = BufWriter::new(
        File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?,
    );
    writeln!(log, "{}", json!({"event": "config", "run": run}))?;
    writeln!(
        log,
        "{}",
        json!({
        "event": "init",
        "epoch": 0,
        "train_docs": train_set.len(),
        "dev_docs": dev_set.len(),
        "vocab": vocab.num_tokens(),
        "dev_loss": eval_loss(&init, &dev_set)?,
        })
    )?;
    let mut io_err = None;
    let result = fit(init, &train_set, &dev_set, tc, |e| {
        let mut v = serde_json::to_value(e).expect("log entries serialize");
        v.as_object_mut()
            .expect("object")
            .insert("event".into(), "epoch".into());
        if let Err(err) = writeln!(log, "{v}") {
            io_err.get_or_insert(err);
        }
    })?;
    if let Some(err) = io_err {
        return Err(err.into());
    }
    let best_loss = match result.best_epoch {
        Some(e) => result.log[e - 1].dev_loss,
        None => result.initial_dev_loss,
    };
    writeln!(
        log,
        "{}",
        json!({"event": "best", "epoch": result.best_epoch.unwrap_or(0), "dev_loss": best_loss})
    )?;
    log.flush()?;

    Checkpoint::new(&result.best, &vocab, run, result.best_epoch)
        .save(out.join(CHECKPOINT_FILE))?;
    println!(
        "best epoch {} dev loss {:.6e} (initial {:.6e}); wrote {}",
        result.best_epoch.unwrap_or(0),
        best_loss,
        result.initial_dev_loss,
        out.display()
    );
    Ok(())
}

pub fn induce(
    checkpoint: &Path,
    corpus: &Path,
    embeddings: &Path,
    out: &Path,
    encodings: Option<&Path>,
) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let model = ckpt.to_model()?;
    let tc: TrainConfig = serde_json::from_value(ckpt.config["config"]["train"].clone())
        .context("checkpoint does not carry a training config")?;
    let docs = load_documents(corpus, tc.caps())?.documents;
    let table = load_embeddings(embeddings, Some(&ckpt.vocab))?;
    if table.dim() != model.config.embed_dim {
        bail!(
            "embeddings have dimension {}, the model expects {}",
            table.dim(),
            model.config.embed_dim
        );
    }
    let embedded = embed_all(&docs, &table, &ckpt.vocab, tc.max_words);
    let induced = induce_all(&model, &embedded)?;

    let run = json!({
        "command": "induce",
        "checkpoint_fingerprint": ckpt.config_fingerprint,
        "checkpoint_epoch": ckpt.epoch,
        "corpus": path_str(corpus),
        "embeddings": path_str(embeddings),
        "train": tc,
    });
    write_treebank(
        out,
        &tree_header(&run),
        docs.iter()
            .zip(&induced)
            .map(|(d, r)| (d.doc_id.as_str(), &r.tree)),
    )?;
    if let Some(path) = encodings {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        for (d, r) in docs.iter().zip(&induced) {
            let rec = EncodingRecord {
                doc_id: d.doc_id.clone(),
                label: d.label,
                encoding: r.encoding.clone(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    println!("induced {} trees; wrote {}", induced.len(), out.display());
    Ok(())
}

pub fn eval_structure(
    cfg: &RunConfig,
    pred: &Path,
    gold: &Path,
    root_span: &str,
    out: Option<&Path>,
) -> Result<()> {
    let root: RootSpan = serde_json::from_value(Value::String(root_span.into())).map_err(|_| {
        anyhow::anyhow!("--root-span must be `include` or `exclude`, got `{root_span}`")
    })?;
    let p = load_gold_trees(pred)?;
    let g = load_gold_trees(gold)?;
    for (line, id, e) in p.errors.iter().chain(&g.errors) {
        log::warn!("skipped tree line {line} ({id}): {e}");
    }
    let report = micro_precision(&p.trees, &g.trees, root);
    for e in &report.errors {
        log::warn!("{}: {}", e.doc_id, e.message);
    }
    let value = json!({
        "run": {
            "command": "eval-structure",
            "pred": path_str(pred),
            "gold": path_str(gold),
            "config": cfg,
        },
        "report": report,
    });
    if out.is_some() {
        println!(
            "precision {:.2} ({} of {} spans, {} documents, {} excluded)",
            report.precision,
            report.matched,
            report.predicted,
            report.documents.len(),
            report.errors.len()
        );
    }
    emit(out, &value)
}

pub fn baseline(cfg: &RunConfig, kind: &str, corpus: &Path, out: &Path) -> Result<()> {
    let kind: BaselineKind = kind.parse()?;
    let docs = load_documents(corpus, cfg.train.caps())?.documents;
    let trees: Vec<BinaryTree> = docs
        .iter()
        .map(|d| baseline_tree(kind, &d.sentence_sizes()))
        .collect::<tae::Result<_>>()?;
    let run = json!({
        "command": "baseline",
        "kind": kind.as_str(),
        "corpus": path_str(corpus),
        "config": cfg,
    });
    write_treebank(
        out,
        &tree_header(&run),
        docs.iter().map(|d| d.doc_id.as_str()).zip(&trees),
    )?;
    println!(
        "wrote {} {} trees to {}",
        trees.len(),
        kind.as_str(),
        out.display()
    );
    Ok(())
}

fn read_encodings(path: &Path) -> Result<Vec<EncodingRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

fn labelled(records: Vec<EncodingRecord>, path: &Path) -> (Vec<Vec<f64>>, Vec<u8>) {
    let total = records.len();
    let (enc, labels): (Vec<_>, Vec<_>) = records
        .into_iter()
        .filter_map(|r| r.label.map(|l| (r.encoding, l)))
        .unzip();
    if labels.len() < total {
        log::warn!(
            "{}: {} unlabelled documents skipped",
            path.display(),
            total - labels.len()
        );
    }
    (enc, labels)
}

pub fn probe(cfg: &RunConfig, train: &Path, eval: &Path, out: Option<&Path>) -> Result<()> {
    let (train_x, train_y) = labelled(read_encodings(train)?, train);
    let (eval_x, eval_y) = labelled(read_encodings(eval)?, eval);
    let model = probe_train(&train_x, &train_y, &cfg.probe)?;
    let accuracy = model.accuracy(&eval_x, &eval_y)?;
    let (majority_label, majority) = majority_baseline(&train_y, &eval_y)?;
    let random = random_baseline(&eval_y, cfg.probe.seed)?;
    let value = json!({
        "run": {
            "command": "probe",
            "train": path_str(train),
            "eval": path_str(eval),
            "config": cfg,
        },
        "train_docs": train_y.len(),
        "eval_docs": eval_y.len(),
        "accuracy": accuracy,
        "majority_label": majority_label,
        "majority_accuracy": majority,
        "random_accuracy": random,
    });
    if out.is_some() {
        println!(
            "probe accuracy {:.2}% (majority {:.2}%, random {:.2}%)",
            100.0 * accuracy,
            100.0 * majority,
            100.0 * random
        );
    }
    emit(out, &value)
}

pub fn nearest(encodings: &Path, query: &str, k: usize, out: Option<&Path>) -> Result<()> {
    let records = read_encodings(encodings)?;
    let pairs: Vec<(String, Vec<f64>)> = records
        .into_iter()
        .map(|r| (r.doc_id, r.encoding))
        .collect();
    let r = nearest_documents(query, &pairs, k)?;
    let mut text = format!("# query {}\n", r.query);
    for (name, list) in [("similar", &r.similar), ("different", &r.different)] {
        for (rank, n) in list.iter().enumerate() {
            text.push_str(&format!(
                "{name}\t{}\t{}\t{:.4}\n",
                rank + 1,
                n.doc_id,
                n.similarity
            ));
        }
    }
    for id in &r.excluded {
        text.push_str(&format!("excluded\t{id}\n"));
    }
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn grad_check(
    cfg: &RunConfig,
    embed_dim: usize,
    hidden: usize,
    tol: f64,
    out: Option<&Path>,
) -> Result<bool> {
    let checks = check_gradients(embed_dim, hidden, cfg.train.seed, tol)?;
    let passed = checks.iter().all(|c| c.report.passed);
    for c in &checks {
        println!(
            "{} {:<20} max_rel_error={:.3e} entries={}",
            if c.report.passed { "PASS" } else { "FAIL" },
            c.component,
            c.report.max_rel_error,
            c.report.checked
        );
    }
    if let Some(p) = out {
        write_json(
            p,
            &json!({
                "run": {"command": "grad-check", "embed_dim": embed_dim, "hidden": hidden, "config": cfg},
                "passed": passed,
                "checks": checks,
            }),
        )?;
    }
    Ok(passed)
}

pub fn generate_synthetic(cfg: &RunConfig, out: &Path) -> Result<()> {
    let corpus = tae::synthetic::generate(&cfg.synthetic)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_documents(out.join("documents.jsonl"), &corpus.documents)?;
    corpus.embeddings.write(out.join("embeddings.txt"))?;
    let run = json!({"command": "generate-synthetic", "config": cfg});
    write_treebank(
        out.join("gold.trees"),
        &tree_header(&run),
        corpus.gold.iter().map(|(id, t)| (id.as_str(), t)),
    )?;
    println!(
        "wrote {} documents to {}",
        corpus.documents.len(),
        out.display()
    );
    Ok(())
}
