use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{argmax, Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GumbelConfig {
    pub tau: f64,
    pub noise: bool,
    pub seed: u64,
}

impl GumbelConfig {
    /// Noise-free argmax selection.
    pub fn deterministic(tau: f64) -> Self {
        Self {
            tau,
            noise: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau > 0.0 && self.tau.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "temperature must be positive, got {}",
                self.tau
            )))
        }
    }
}

/// Standard Gumbel sample `-ln(-ln(u))` for `u` in the open unit interval.
pub fn gumbel_noise(u: f64) -> Result<f64> {
    if u > 0.0 && u < 1.0 {
        Ok(-(-u.ln()).ln())
    } else {
        Err(Error::invalid(format!("uniform sample {u} outside (0, 1)")))
    }
}

/// Draws merge decisions for one document from its own random stream.
#[derive(Clone, Debug)]
pub struct Sampler {
    cfg: GumbelConfig,
    rng: ChaCha8Rng,
}

impl Sampler {
    /// Stream `stream` of the generator seeded with `cfg.seed`.
    pub fn new(cfg: GumbelConfig, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        Self { cfg, rng }
    }

    pub fn deterministic(tau: f64) -> Self {
        Self::new(GumbelConfig::deterministic(tau), 0)
    }

    pub fn config(&self) -> &GumbelConfig {
        &self.cfg
    }

    pub fn sample_noise(&mut self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u = loop {
                    let u: f64 = self.rng.gen();
                    if u > 0.0 {
                        break u;
                    }
                };
                -(-u.ln()).ln()
            })
            .collect()
    }
}

/// Outcome of one merge decision.
#[derive(Clone, Copy, Debug)]
pub struct Selection {
    /// `softmax((scores + g) / tau)`
    pub probs: Var,
    /// One-hot forward, identity backward onto `probs`.
    pub one_hot: Var,
    pub index: usize,
}

/// Gumbel-perturbed, temperature-scaled softmax over merge scores followed
/// by a straight-through one-hot at the first maximal probability.
pub fn select_merge(tape: &mut Tape<'_>, scores: Var, sampler: &mut Sampler) -> Result<Selection> {
    sampler.cfg.validate()?;
    let n = tape.value(scores).len();
    let perturbed = if sampler.cfg.noise {
        let noise = tape.leaf(Tensor::vector(sampler.sample_noise(n)))?;
        tape.add(scores, noise)?
    } else {
        scores
    };
    let scaled = tape.scale(perturbed, 1.0 / sampler.cfg.tau)?;
    let probs = tape.softmax(scaled)?;
    let index = argmax(tape.value(probs).data());
    let one_hot = tape.straight_through(probs, index)?;
    Ok(Selection {
        probs,
        one_hot,
        index,
    })
}
