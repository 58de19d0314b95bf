use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{phase_of_epoch, tau_of_epoch, Phase, TrainConfig};
use super::optim::Adam;
use crate::autodiff::{ParamGrads, ParamId, Tape, Var};
use crate::corpus::{BinaryTree, EmbeddedDocument};
use crate::error::{Error, Result};
use crate::model::{DocumentEncoding, GumbelConfig, Level, NodeState, Sampler, TaeModel};

/// Mean over leaves of `mse(softmax(input), softmax(output))`.
pub fn reconstruction_loss(tape: &mut Tape<'_>, inputs: &[Var], outputs: &[Var]) -> Result<Var> {
    if inputs.len() != outputs.len() || inputs.is_empty() {
        return Err(Error::ShapeMismatch {
            op: "reconstruction_loss",
            left: vec![inputs.len()],
            right: vec![outputs.len()],
        });
    }
    let mut terms = Vec::with_capacity(inputs.len());
    for (&x, &y) in inputs.iter().zip(outputs) {
        let px = tape.softmax(x)?;
        let py = tape.softmax(y)?;
        terms.push(tape.mse(px, py)?);
    }
    tape.mean(&terms)
}

/// Inverted dropout masks drawn from a dedicated stream.
pub struct Dropout {
    rate: f64,
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rate, rng }
    }

    pub fn apply(&mut self, tape: &mut Tape<'_>, v: Var) -> Result<Var> {
        if self.rate == 0.0 {
            return Ok(v);
        }
        let keep = 1.0 / (1.0 - self.rate);
        let n = tape.value(v).len();
        let mask: Arc<[f64]> = (0..n)
            .map(|_| {
                if self.rng.gen::<f64>() < self.rate {
                    0.0
                } else {
                    keep
                }
            })
            .collect();
        tape.dropout(v, mask)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Purpose {
    Gumbel = 0,
    Dropout = 1,
    Shuffle = 2,
}

/// Random stream id for one (epoch, document, purpose) triple.
fn stream_id(epoch: usize, doc_index: usize, purpose: Purpose) -> u64 {
    ((epoch as u64) << 40) | ((doc_index as u64) << 2) | purpose as u64
}

/// Forward pass over one document: encode, decode along the encoder's
/// tree at both levels, and sum the two reconstruction losses.
pub fn document_loss(
    model: &TaeModel,
    tape: &mut Tape<'_>,
    doc: &EmbeddedDocument,
    sampler: &mut Sampler,
    mut dropout: Option<&mut Dropout>,
) -> Result<(Var, DocumentEncoding)> {
    let mut targets = Vec::with_capacity(doc.num_edus());
    let mut leaves: Vec<Vec<NodeState>> = Vec::with_capacity(doc.sentences.len());
    for sentence in &doc.sentences {
        let mut states = Vec::with_capacity(sentence.len());
        for emb in sentence {
            let x = tape.leaf(emb.clone())?;
            targets.push(x);
            let input = match dropout.as_deref_mut() {
                Some(d) => d.apply(tape, x)?,
                None => x,
            };
            states.push(model.leaf_transform(tape, input)?);
        }
        leaves.push(states);
    }
    let enc = model.encode_document(tape, &leaves, sampler)?;

    let mut outputs = Vec::with_capacity(targets.len());
    for (root, trace) in enc.sentence_roots.iter().zip(&enc.sentence_traces) {
        for leaf in model.decode_tree(tape, Level::Sentence, *root, trace)? {
            outputs.push(output(model, tape, leaf, dropout.as_deref_mut())?);
        }
    }
    let sentence_loss = reconstruction_loss(tape, &targets, &outputs)?;

    let mut root = enc.root;
    if let Some(d) = dropout.as_deref_mut() {
        root.h = d.apply(tape, root.h)?;
    }
    let mut outputs = Vec::with_capacity(targets.len());
    let sentence_states = model.decode_tree(tape, Level::Document, root, &enc.document_trace)?;
    for (state, trace) in sentence_states.into_iter().zip(&enc.sentence_traces) {
        for leaf in model.decode_tree(tape, Level::Sentence, state, trace)? {
            outputs.push(output(model, tape, leaf, dropout.as_deref_mut())?);
        }
    }
    let document_loss = reconstruction_loss(tape, &targets, &outputs)?;
    let total = tape.add(sentence_loss, document_loss)?;
    Ok((total, enc))
}

fn output(
    model: &TaeModel,
    tape: &mut Tape<'_>,
    leaf: NodeState,
    dropout: Option<&mut Dropout>,
) -> Result<Var> {
    let y = model.project(tape, leaf.h)?;
    match dropout {
        Some(d) => d.apply(tape, y),
        None => Ok(y),
    }
}

/// Result of running a document through the model in evaluation mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Induced {
    pub tree: BinaryTree,
    /// Hidden vector of the document root.
    pub encoding: Vec<f64>,
    pub loss: f64,
}

/// Evaluation mode: no noise, no dropout, pure argmax.
pub fn induce(model: &TaeModel, doc: &EmbeddedDocument) -> Result<Induced> {
    let mut tape = Tape::new(&model.store);
    let mut sampler = Sampler::deterministic(1.0);
    let (loss, enc) = document_loss(model, &mut tape, doc, &mut sampler, None)?;
    Ok(Induced {
        tree: enc.full_tree(),
        encoding: tape.value(enc.root.h).data().to_vec(),
        loss: tape.value(loss).item(),
    })
}

fn map_in_order<T: Sync, R: Send>(items: &[T], f: impl Fn(usize, &T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
    }
}

/// Runs [`induce`] over a corpus, in parallel when enabled.
pub fn induce_all(model: &TaeModel, docs: &[EmbeddedDocument]) -> Result<Vec<Induced>> {
    map_in_order(docs, |_, d| induce(model, d))
        .into_iter()
        .collect()
}

/// Mean evaluation-mode loss over `docs`.
pub fn eval_loss(model: &TaeModel, docs: &[EmbeddedDocument]) -> Result<f64> {
    if docs.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty corpus"));
    }
    let induced = induce_all(model, docs)?;
    Ok(induced.iter().map(|r| r.loss).sum::<f64>() / docs.len() as f64)
}

/// Parameters updated in `phase`.
pub fn phase_params(model: &TaeModel, phase: Phase) -> Vec<ParamId> {
    match phase {
        Phase::Structure => model.structure_params(),
        Phase::Representation => model.representation_params(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub mean_loss: f64,
    /// Mean global gradient norm before clipping.
    pub grad_norm: f64,
    pub max_grad_norm: f64,
    /// Largest global norm of an applied (clipped) update.
    pub max_clipped_norm: f64,
    pub steps: usize,
}

/// One pass over `docs` in mini-batches, updating only the parameters of
/// `phase`.
pub fn train_epoch(
    model: &mut TaeModel,
    adam: &mut Adam,
    docs: &[EmbeddedDocument],
    phase: Phase,
    tau: f64,
    epoch: usize,
    cfg: &TrainConfig,
) -> Result<EpochStats> {
    if docs.is_empty() {
        return Err(Error::invalid("cannot train on an empty corpus"));
    }
    let active = phase_params(model, phase);
    let gumbel = GumbelConfig {
        tau,
        noise: cfg.gumbel_noise,
        seed: cfg.seed,
    };
    gumbel.validate()?;
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(stream_id(epoch, 0, Purpose::Shuffle));
    order.shuffle(&mut shuffle_rng);

    let mut stats = EpochStats {
        mean_loss: 0.0,
        grad_norm: 0.0,
        max_grad_norm: 0.0,
        max_clipped_norm: 0.0,
        steps: 0,
    };
    let mut loss_sum = 0.0;
    for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
        let frozen: &TaeModel = model;
        let results = map_in_order(batch, |_, &i| -> Result<(f64, ParamGrads)> {
            let doc = &docs[i];
            let mut tape = Tape::new(&frozen.store);
            let mut sampler = Sampler::new(gumbel, stream_id(epoch, i, Purpose::Gumbel));
            let mut dropout =
                Dropout::new(cfg.dropout, cfg.seed, stream_id(epoch, i, Purpose::Dropout));
            let (loss, _) = document_loss(frozen, &mut tape, doc, &mut sampler, Some(&mut dropout))
                .map_err(|e| non_finite(e, epoch, batch_no, &doc.doc_id))?;
            let value = tape.value(loss).item();
            let grads = tape
                .backward(loss)
                .map_err(|e| non_finite(e, epoch, batch_no, &doc.doc_id))?;
            Ok((value, grads.into_params()))
        });
        let mut total = ParamGrads::zeros(&model.store);
        for r in results {
            let (loss, grads) = r?;
            loss_sum += loss;
            total.add_assign(&grads);
        }
        total.scale(1.0 / batch.len() as f64);
        total.mask(|id| active.contains(&id));
        let norm = total.clip_global_norm(cfg.grad_clip_norm);
        if !norm.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: batch_no,
                doc_id: docs[batch[0]].doc_id.clone(),
            });
        }
        stats.grad_norm += norm;
        stats.max_grad_norm = stats.max_grad_norm.max(norm);
        stats.max_clipped_norm = stats.max_clipped_norm.max(total.global_norm());
        stats.steps += 1;
        adam.step(&mut model.store, &total, &active);
    }
    stats.mean_loss = loss_sum / docs.len() as f64;
    stats.grad_norm /= stats.steps as f64;
    Ok(stats)
}

fn non_finite(e: Error, epoch: usize, batch: usize, doc_id: &str) -> Error {
    match e {
        Error::NonFinite { .. } => Error::NonFiniteLoss {
            epoch,
            batch,
            doc_id: doc_id.to_string(),
        },
        other => other,
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// Counted from 1; epoch 0 is the initialization.
    pub epoch: usize,
    pub phase: Phase,
    pub tau: f64,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub grad_norm: f64,
    pub max_grad_norm: f64,
    pub max_clipped_norm: f64,
    /// Parameters outside the phase were bit-identical after the epoch.
    pub masking_held: bool,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub best: TaeModel,
    /// `None` when no epoch ran and the initialization is returned.
    pub best_epoch: Option<usize>,
    pub initial_dev_loss: f64,
    pub log: Vec<EpochLog>,
}

/// Alternates structure and representation epochs and keeps the parameters
/// with the lowest dev loss (earliest on ties).
pub fn fit(
    init: TaeModel,
    train: &[EmbeddedDocument],
    dev: &[EmbeddedDocument],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<FitResult> {
    cfg.validate()?;
    let mut model = init;
    let initial_dev_loss = eval_loss(&model, dev)?;
    let mut adam = Adam::new(
        &model.store,
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_eps,
    );
    let mut best = model.clone();
    let mut best_epoch = None;
    let mut best_loss = f64::INFINITY;
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let phase = phase_of_epoch(epoch, cfg);
        let tau = tau_of_epoch(epoch, cfg);
        let before = model.store.clone();
        let stats = train_epoch(&mut model, &mut adam, train, phase, tau, epoch, cfg)?;
        let active = phase_params(&model, phase);
        let masking_held = model
            .store
            .ids()
            .filter(|id| !active.contains(id))
            .all(|id| model.store.get(id) == before.get(id));
        let dev_loss = eval_loss(&model, dev)?;
        let entry = EpochLog {
            epoch: epoch + 1,
            phase,
            tau,
            train_loss: stats.mean_loss,
            dev_loss,
            grad_norm: stats.grad_norm,
            max_grad_norm: stats.max_grad_norm,
            max_clipped_norm: stats.max_clipped_norm,
            masking_held,
        };
        log::info!(
            "epoch {} {} tau={:.4} train={:.6e} dev={:.6e}",
            entry.epoch,
            phase.as_str(),
            tau,
            stats.mean_loss,
            dev_loss
        );
        on_epoch(&entry);
        if dev_loss < best_loss {
            best_loss = dev_loss;
            best_epoch = Some(epoch + 1);
            best = model.clone();
        }
        log.push(entry);
    }
    Ok(FitResult {
        best,
        best_epoch,
        initial_dev_loss,
        log,
    })
}
