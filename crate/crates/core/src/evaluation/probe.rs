use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{argmax, ParamGrads, ParamId, ParamStore, Tape, Tensor};
use crate::error::{Error, Result};
use crate::training::Adam;

pub const NUM_CLASSES: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 20,
            learning_rate: 0.001,
            seed: 0,
        }
    }
}

/// Single affine layer from a frozen document encoding to class scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeModel {
    pub store: ParamStore,
    pub w: ParamId,
    pub b: ParamId,
}

fn class_index(label: u8) -> Result<usize> {
    if (1..=NUM_CLASSES as u8).contains(&label) {
        Ok(label as usize - 1)
    } else {
        Err(Error::invalid(format!(
            "label {label} outside 1..={NUM_CLASSES}"
        )))
    }
}

impl ProbeModel {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (dim as f64).sqrt();
        let data = (0..NUM_CLASSES * dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        let mut store = ParamStore::new();
        let w = store.add(
            "probe.w",
            Tensor::new(vec![NUM_CLASSES, dim], data).expect("finite init"),
        );
        let b = store.add("probe.b", Tensor::zeros(&[NUM_CLASSES]));
        Self { store, w, b }
    }

    pub fn dim(&self) -> usize {
        self.store.get(self.w).cols()
    }

    pub fn scores(&self, encoding: &[f64]) -> Result<Vec<f64>> {
        let mut tape = Tape::new(&self.store);
        let x = tape.leaf(Tensor::vector(encoding.to_vec()))?;
        let (w, b) = (tape.param(self.w), tape.param(self.b));
        let z = tape.affine(w, x, b)?;
        Ok(tape.value(z).data().to_vec())
    }

    /// Predicted label in `1..=5`; ties go to the lowest class.
    pub fn predict(&self, encoding: &[f64]) -> Result<u8> {
        Ok(argmax(&self.scores(encoding)?) as u8 + 1)
    }

    pub fn accuracy(&self, encodings: &[Vec<f64>], labels: &[u8]) -> Result<f64> {
        check_pairs(encodings, labels)?;
        let mut correct = 0;
        for (e, &l) in encodings.iter().zip(labels) {
            class_index(l)?;
            if self.predict(e)? == l {
                correct += 1;
            }
        }
        Ok(correct as f64 / labels.len() as f64)
    }
}

fn check_pairs(encodings: &[Vec<f64>], labels: &[u8]) -> Result<()> {
    if encodings.len() != labels.len() || labels.is_empty() {
        return Err(Error::invalid(format!(
            "{} encodings for {} labels",
            encodings.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Trains a probe with cross-entropy and Adam on the given split only.
pub fn probe_train(encodings: &[Vec<f64>], labels: &[u8], cfg: &ProbeConfig) -> Result<ProbeModel> {
    check_pairs(encodings, labels)?;
    if cfg.batch_size == 0 {
        return Err(Error::Config {
            field: "batch_size".into(),
            message: "must be positive".into(),
        });
    }
    let classes: Vec<usize> = labels
        .iter()
        .map(|&l| class_index(l))
        .collect::<Result<_>>()?;
    let dim = encodings[0].len();
    let mut probe = ProbeModel::new(dim, cfg.seed);
    let mut adam = Adam::new(&probe.store, cfg.learning_rate, 0.9, 0.999, 1e-8);
    let params = [probe.w, probe.b];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut tape = Tape::new(&probe.store);
            let (w, b) = (tape.param(probe.w), tape.param(probe.b));
            let mut losses = Vec::with_capacity(batch.len());
            for &i in batch {
                let x = tape.leaf(Tensor::vector(encodings[i].clone()))?;
                let z = tape.affine(w, x, b)?;
                losses.push(tape.cross_entropy(z, classes[i])?);
            }
            let loss = tape.mean(&losses)?;
            let grads: ParamGrads = tape.backward(loss)?.into_params();
            adam.step(&mut probe.store, &grads, &params);
        }
    }
    Ok(probe)
}

/// Most frequent label of `reference` (lowest label on ties) and its
/// accuracy on `eval`.
pub fn majority_baseline(reference: &[u8], eval: &[u8]) -> Result<(u8, f64)> {
    if reference.is_empty() || eval.is_empty() {
        return Err(Error::invalid("majority baseline needs labels"));
    }
    let mut counts = [0usize; NUM_CLASSES];
    for &l in reference {
        counts[class_index(l)?] += 1;
    }
    let best = (0..NUM_CLASSES).fold(0, |b, k| if counts[k] > counts[b] { k } else { b });
    let label = best as u8 + 1;
    let hits = eval.iter().filter(|&&l| l == label).count();
    Ok((label, hits as f64 / eval.len() as f64))
}

/// Accuracy of uniform random guessing with a fixed seed.
pub fn random_baseline(eval: &[u8], seed: u64) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::invalid("random baseline needs labels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for &l in eval {
        class_index(l)?;
        if rng.gen_range(1..=NUM_CLASSES as u8) == l {
            hits += 1;
        }
    }
    Ok(hits as f64 / eval.len() as f64)
}
