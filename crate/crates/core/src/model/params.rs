use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamId, ParamStore, Tensor};

/// Architecture of a T-AE network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    /// Use one parameter set for the sentence and document levels.
    pub shared_levels: bool,
}

impl ModelConfig {
    pub fn new(embed_dim: usize, hidden: usize) -> Self {
        Self {
            embed_dim,
            hidden,
            shared_levels: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Sentence,
    Document,
}

/// Composition, merge scorer and splitting weights of one tree level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelParams {
    /// `5H × 2H`
    pub compose_w: ParamId,
    /// `5H`
    pub compose_b: ParamId,
    /// `1 × H`
    pub score_w: ParamId,
    /// `1`
    pub score_b: ParamId,
    /// `8H × H`
    pub split_w: ParamId,
    /// `8H`
    pub split_b: ParamId,
}

/// Parameters of the tree autoencoder and the handles to each tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct TaeModel {
    pub config: ModelConfig,
    pub store: ParamStore,
    /// `2H × E`
    pub leaf_w: ParamId,
    pub leaf_b: ParamId,
    /// `E × H`
    pub proj_w: ParamId,
    pub proj_b: ParamId,
    pub sentence: LevelParams,
    pub document: LevelParams,
}

impl TaeModel {
    /// All-zero parameters.
    pub fn zeros(config: ModelConfig) -> Self {
        let h = config.hidden;
        let e = config.embed_dim;
        let mut store = ParamStore::new();
        let leaf_w = store.add("leaf.w", Tensor::zeros(&[2 * h, e]));
        let leaf_b = store.add("leaf.b", Tensor::zeros(&[2 * h]));
        let mut level = |prefix: &str| LevelParams {
            compose_w: store.add(
                format!("{prefix}.compose.w"),
                Tensor::zeros(&[5 * h, 2 * h]),
            ),
            compose_b: store.add(format!("{prefix}.compose.b"), Tensor::zeros(&[5 * h])),
            score_w: store.add(format!("{prefix}.score.w"), Tensor::zeros(&[1, h])),
            score_b: store.add(format!("{prefix}.score.b"), Tensor::zeros(&[1])),
            split_w: store.add(format!("{prefix}.split.w"), Tensor::zeros(&[8 * h, h])),
            split_b: store.add(format!("{prefix}.split.b"), Tensor::zeros(&[8 * h])),
        };
        let (sentence, document) = if config.shared_levels {
            let shared = level("tree");
            (shared, shared)
        } else {
            (level("sentence"), level("document"))
        };
        let proj_w = store.add("proj.w", Tensor::zeros(&[e, h]));
        let proj_b = store.add("proj.b", Tensor::zeros(&[e]));
        Self {
            config,
            store,
            leaf_w,
            leaf_b,
            proj_w,
            proj_b,
            sentence,
            document,
        }
    }

    /// Uniform initialization in `±1/sqrt(2H)` with forget-gate biases at 1.
    pub fn new(config: ModelConfig, seed: u64) -> Self {
        let mut model = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / ((2 * model.config.hidden) as f64).sqrt();
        let ids: Vec<ParamId> = model.store.ids().collect();
        for id in ids {
            for v in model.store.get_mut(id).data_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
        let h = model.config.hidden;
        let levels = if model.config.shared_levels {
            vec![model.sentence]
        } else {
            vec![model.sentence, model.document]
        };
        for lvl in levels {
            // compose gates [i, f_l, f_r, o, u]
            model.store.get_mut(lvl.compose_b).data_mut()[h..3 * h].fill(1.0);
            // split gates [i_l, f_l, o_l, u_l, i_r, f_r, o_r, u_r]
            let b = model.store.get_mut(lvl.split_b).data_mut();
            b[h..2 * h].fill(1.0);
            b[5 * h..6 * h].fill(1.0);
        }
        model
    }

    pub fn level(&self, level: Level) -> &LevelParams {
        match level {
            Level::Sentence => &self.sentence,
            Level::Document => &self.document,
        }
    }

    /// Merge-scorer parameters, trained in the structure phase.
    pub fn structure_params(&self) -> Vec<ParamId> {
        let mut ids = vec![
            self.sentence.score_w,
            self.sentence.score_b,
            self.document.score_w,
            self.document.score_b,
        ];
        ids.sort();
        ids.dedup();
        ids
    }

    /// Every parameter outside the merge scorer.
    pub fn representation_params(&self) -> Vec<ParamId> {
        let structure = self.structure_params();
        self.store
            .ids()
            .filter(|id| !structure.contains(id))
            .collect()
    }
}
