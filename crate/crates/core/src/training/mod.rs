//! Reconstruction objective, phased optimization and model selection.

mod checks;
mod config;
mod optim;
mod trainer;

pub use checks::{check_gradients, ComponentCheck};
pub use config::{
    anneal_tau, phase_of_epoch, structure_epochs_before, tau_of_epoch, LossKind, Phase, TrainConfig,
};
pub use optim::Adam;
pub use trainer::{
    document_loss, eval_loss, fit, induce, induce_all, phase_params, reconstruction_loss,
    train_epoch, Dropout, EpochLog, EpochStats, FitResult, Induced,
};

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::autodiff::{grad_check, Tape, Tensor};
    use crate::corpus::EmbeddedDocument;
    use crate::model::{ModelConfig, Sampler, TaeModel};

    fn random_doc(
        rng: &mut ChaCha8Rng,
        id: usize,
        dim: usize,
        sizes: &[usize],
    ) -> EmbeddedDocument {
        EmbeddedDocument {
            doc_id: format!("d{id}"),
            sentences: sizes
                .iter()
                .map(|&n| {
                    (0..n)
                        .map(|_| {
                            Tensor::vector((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                        })
                        .collect()
                })
                .collect(),
            label: None,
        }
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            hidden: 6,
            batch_size: 4,
            epochs: 4,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn component_gradients_match_differences() {
        for (e, h) in [(3, 2), (5, 4), (6, 8)] {
            for c in check_gradients(e, h, 11, 1e-4).unwrap() {
                assert!(c.report.passed, "{} at H={h}: {:?}", c.component, c.report);
                assert!(c.report.checked > 0);
            }
        }
    }

    #[test]
    fn loss_of_identical_outputs_is_zero() {
        let store = crate::autodiff::ParamStore::new();
        let mut tape = Tape::new(&store);
        let a = tape.leaf(Tensor::vector(vec![0.2, -1.0, 3.0])).unwrap();
        let b = tape.leaf(Tensor::vector(vec![0.2, -1.0, 3.0])).unwrap();
        let l = reconstruction_loss(&mut tape, &[a], &[b]).unwrap();
        assert_eq!(tape.value(l).item(), 0.0);
    }

    #[test]
    fn loss_of_swapped_unit_vectors() {
        let store = crate::autodiff::ParamStore::new();
        let mut tape = Tape::new(&store);
        let a = tape.leaf(Tensor::vector(vec![1.0, 0.0])).unwrap();
        let b = tape.leaf(Tensor::vector(vec![0.0, 1.0])).unwrap();
        let l = reconstruction_loss(&mut tape, &[a], &[b]).unwrap();
        let e = std::f64::consts::E;
        let expected = ((e - 1.0) / (e + 1.0)).powi(2);
        assert!((tape.value(l).item() - expected).abs() < 1e-15);
        assert!((expected - 0.21355).abs() < 1e-5);
    }

    #[test]
    fn loss_is_shift_invariant_per_leaf() {
        let store = crate::autodiff::ParamStore::new();
        let mut tape = Tape::new(&store);
        let x = [vec![0.5, -0.3, 1.2], vec![0.0, 0.1, -0.9]];
        let y = [vec![1.0, 0.2, 0.3], vec![-0.4, 0.6, 0.2]];
        let vars = |tape: &mut Tape<'_>, vs: &[Vec<f64>]| -> Vec<_> {
            vs.iter()
                .map(|v| tape.leaf(Tensor::vector(v.clone())).unwrap())
                .collect()
        };
        let (xi, yo) = (vars(&mut tape, &x), vars(&mut tape, &y));
        let base = reconstruction_loss(&mut tape, &xi, &yo).unwrap();
        let shifted: Vec<Vec<f64>> = vec![x[0].iter().map(|v| v + 7.5).collect(), x[1].clone()];
        let xs = vars(&mut tape, &shifted);
        let moved = reconstruction_loss(&mut tape, &xs, &yo).unwrap();
        assert!((tape.value(base).item() - tape.value(moved).item()).abs() < 1e-15);
    }

    #[test]
    fn loss_rejects_mismatched_counts() {
        let store = crate::autodiff::ParamStore::new();
        let mut tape = Tape::new(&store);
        let a = tape.leaf(Tensor::vector(vec![1.0, 0.0])).unwrap();
        assert!(reconstruction_loss(&mut tape, &[a, a], &[a]).is_err());
        let c = tape.leaf(Tensor::vector(vec![1.0, 0.0, 2.0])).unwrap();
        assert!(reconstruction_loss(&mut tape, &[a], &[c]).is_err());
    }

    #[test]
    fn loss_and_projection_gradients() {
        let model = TaeModel::new(ModelConfig::new(4, 3), 2);
        let report = grad_check(&model.store, &[model.proj_w, model.proj_b], 1e-4, |tape| {
            let h = tape.leaf(Tensor::vector(vec![0.3, -0.6, 0.9]))?;
            let y = model.project(tape, h)?;
            let x = tape.leaf(Tensor::vector(vec![0.5, -0.5, 0.25, 1.0]))?;
            reconstruction_loss(tape, &[x], &[y])
        })
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn full_document_loss_gradient() {
        // Straight-through gradients reach the scorer and, through the
        // scores, the composition weights; finite differences of the discrete
        // forward cannot see them. A zero scorer weight cuts that path while
        // keeping the tree fixed.
        let mut model = TaeModel::new(ModelConfig::new(3, 3), 4);
        model
            .store
            .get_mut(model.sentence.score_w)
            .data_mut()
            .fill(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let doc = random_doc(&mut rng, 0, 3, &[2, 3]);
        let ids = model.representation_params();
        let report = grad_check(&model.store, &ids, 1e-4, |tape| {
            let (loss, _) =
                document_loss(&model, tape, &doc, &mut Sampler::deterministic(1.0), None)?;
            Ok(loss)
        })
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn tau_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(anneal_tau(0, &cfg), 5.0);
        assert_eq!(anneal_tau(1, &cfg), 11.0 / 3.0);
        assert_eq!(anneal_tau(2, &cfg), 7.0 / 3.0);
        assert_eq!(anneal_tau(3, &cfg), 1.0);
        assert_eq!(anneal_tau(10, &cfg), 1.0);
        let taus: Vec<f64> = (0..8).map(|e| tau_of_epoch(e, &cfg)).collect();
        assert_eq!(
            taus,
            vec![
                5.0,
                5.0,
                11.0 / 3.0,
                11.0 / 3.0,
                7.0 / 3.0,
                7.0 / 3.0,
                1.0,
                1.0
            ]
        );
        let phases: Vec<Phase> = (0..3).map(|e| phase_of_epoch(e, &cfg)).collect();
        assert_eq!(
            phases,
            vec![Phase::Structure, Phase::Representation, Phase::Structure]
        );
    }

    #[test]
    fn representation_first_schedule() {
        let cfg = TrainConfig {
            start_phase: Phase::Representation,
            ..TrainConfig::default()
        };
        assert_eq!(phase_of_epoch(0, &cfg), Phase::Representation);
        assert_eq!(tau_of_epoch(0, &cfg), 5.0);
        assert_eq!(tau_of_epoch(1, &cfg), 5.0);
        assert_eq!(tau_of_epoch(3, &cfg), 11.0 / 3.0);
    }

    #[test]
    fn config_validation_names_fields() {
        let mut cfg = TrainConfig::default();
        cfg.validate().unwrap();
        cfg.dropout = 1.0;
        assert!(
            matches!(cfg.validate(), Err(crate::Error::Config { field, .. }) if field == "dropout")
        );
        let cfg = TrainConfig {
            tau_start: 0.5,
            ..TrainConfig::default()
        };
        assert!(
            matches!(cfg.validate(), Err(crate::Error::Config { field, .. }) if field == "tau_start")
        );
        let mut cfg = TrainConfig::default();
        assert!(
            matches!(cfg.set("bogus", "1"), Err(crate::Error::Config { field, .. }) if field == "bogus")
        );
        assert!(
            matches!(cfg.set("epochs", "x"), Err(crate::Error::Config { field, .. }) if field == "epochs")
        );
        cfg.set("start_phase", "representation").unwrap();
        assert_eq!(cfg.start_phase, Phase::Representation);
        for key in TrainConfig::KEYS {
            let value = serde_json::to_value(&cfg).unwrap()[key].clone();
            let text = match value {
                serde_json::Value::String(s) => s,
                v => v.to_string(),
            };
            cfg.set(key, &text).unwrap();
        }
        let json = serde_json::to_value(TrainConfig::default()).unwrap();
        assert_eq!(json.as_object().unwrap().len(), TrainConfig::KEYS.len());
    }

    #[test]
    fn structure_phase_touches_only_scorer() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let docs: Vec<_> = (0..6)
            .map(|i| random_doc(&mut rng, i, 4, &[3, 2]))
            .collect();
        let mut model = TaeModel::new(cfg.model_config(4), 1);
        let mut adam = Adam::new(&model.store, 0.01, 0.9, 0.999, 1e-8);
        for phase in [Phase::Structure, Phase::Representation] {
            let before = model.clone();
            train_epoch(&mut model, &mut adam, &docs, phase, 2.0, 0, &cfg).unwrap();
            let active = phase_params(&model, phase);
            let mut changed = false;
            for id in model.store.ids() {
                if active.contains(&id) {
                    changed |= model.store.get(id) != before.store.get(id);
                } else {
                    assert_eq!(
                        model.store.get(id),
                        before.store.get(id),
                        "{}",
                        model.store.name(id)
                    );
                }
            }
            assert!(changed, "{phase:?} should update something");
        }
    }

    #[test]
    fn clipping_bounds_every_step() {
        let cfg = TrainConfig {
            grad_clip_norm: 1e-3,
            ..small_cfg()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let docs: Vec<_> = (0..8)
            .map(|i| random_doc(&mut rng, i, 4, &[2, 2]))
            .collect();
        let mut model = TaeModel::new(cfg.model_config(4), 1);
        let mut adam = Adam::new(&model.store, 0.001, 0.9, 0.999, 1e-8);
        let stats = train_epoch(
            &mut model,
            &mut adam,
            &docs,
            Phase::Representation,
            1.0,
            0,
            &cfg,
        )
        .unwrap();
        assert_eq!(stats.steps, 2);
        assert!(stats.max_grad_norm > 1e-3);
        assert!(stats.max_clipped_norm <= 1e-3 + 1e-12);
    }

    #[test]
    fn overfits_a_repeated_document() {
        let cfg = TrainConfig {
            dropout: 0.0,
            gumbel_noise: false,
            batch_size: 1,
            ..small_cfg()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let doc = random_doc(&mut rng, 0, 5, &[3, 2]);
        let docs = vec![doc; 4];
        let mut model = TaeModel::new(cfg.model_config(5), 2);
        let mut adam = Adam::new(&model.store, 0.001, 0.9, 0.999, 1e-8);
        let mut losses = vec![eval_loss(&model, &docs[..1]).unwrap()];
        for epoch in 0..5 {
            train_epoch(
                &mut model,
                &mut adam,
                &docs,
                Phase::Representation,
                1.0,
                epoch,
                &cfg,
            )
            .unwrap();
            losses.push(eval_loss(&model, &docs[..1]).unwrap());
        }
        for w in losses.windows(2) {
            assert!(w[1] <= w[0], "{losses:?}");
        }
        assert!(losses[5] < losses[0]);
    }

    #[test]
    fn fit_is_deterministic_and_selects_minimum() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let train: Vec<_> = (0..8)
            .map(|i| random_doc(&mut rng, i, 4, &[2, 3]))
            .collect();
        let dev: Vec<_> = (8..11).map(|i| random_doc(&mut rng, i, 4, &[3])).collect();
        let run = || {
            fit(
                TaeModel::new(cfg.model_config(4), 1),
                &train,
                &dev,
                &cfg,
                |_| {},
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.log, b.log);
        assert_eq!(a.best, b.best);
        assert_eq!(a.log.len(), 4);
        let min = a
            .log
            .iter()
            .map(|e| e.dev_loss)
            .fold(f64::INFINITY, f64::min);
        let first = a.log.iter().position(|e| e.dev_loss == min).unwrap();
        assert_eq!(a.best_epoch, Some(first + 1));
        assert!((eval_loss(&a.best, &dev).unwrap() - min).abs() == 0.0);
        assert!(a.log.iter().all(|e| e.masking_held));
        assert_eq!(a.log[0].tau, 5.0);
        assert_eq!(a.log[2].tau, 11.0 / 3.0);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let cfg = TrainConfig {
            epochs: 0,
            ..small_cfg()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let train = vec![random_doc(&mut rng, 0, 4, &[2])];
        let dev = vec![random_doc(&mut rng, 1, 4, &[2])];
        let init = TaeModel::new(cfg.model_config(4), 1);
        let r = fit(init.clone(), &train, &dev, &cfg, |_| {}).unwrap();
        assert!(r.log.is_empty());
        assert_eq!(r.best, init);
        assert_eq!(r.best_epoch, None);
    }

    #[test]
    fn eval_mode_is_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let doc = random_doc(&mut rng, 0, 4, &[3, 1, 2]);
        let model = TaeModel::new(ModelConfig::new(4, 5), 3);
        let a = induce(&model, &doc).unwrap();
        let b = induce(&model, &doc).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.tree.num_leaves(), 6);
        assert_eq!(a.encoding.len(), 5);
    }
}
