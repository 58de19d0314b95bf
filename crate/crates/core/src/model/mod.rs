//! The tree autoencoder: leaf transform, TreeLSTM composition, Gumbel
//! merge selection, inverse-TreeLSTM splitting and the sentence/document
//! hierarchy.

mod checkpoint;
mod gumbel;
mod network;
mod params;
mod trace;

pub use checkpoint::{fingerprint, Checkpoint, NamedTensor, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use gumbel::{gumbel_noise, select_merge, GumbelConfig, Sampler, Selection};
pub use network::{DocumentEncoding, MergeChoice, NodeState, SequenceEncoding};
pub use params::{Level, LevelParams, ModelConfig, TaeModel};
pub use trace::MergeTrace;

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::autodiff::{grad_check, Tape, Tensor};

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    fn matvec(w: &Tensor, x: &[f64]) -> Vec<f64> {
        w.data()
            .chunks(w.cols())
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Straight-line binary TreeLSTM cell on plain vectors.
    fn oracle_compose(
        m: &TaeModel,
        level: Level,
        l: (&[f64], &[f64]),
        r: (&[f64], &[f64]),
    ) -> (Vec<f64>, Vec<f64>) {
        let p = m.level(level);
        let h = m.config.hidden;
        let mut x = l.1.to_vec();
        x.extend_from_slice(r.1);
        let z: Vec<f64> = matvec(m.store.get(p.compose_w), &x)
            .iter()
            .zip(m.store.get(p.compose_b).data())
            .map(|(a, b)| a + b)
            .collect();
        let mut c = vec![0.0; h];
        let mut hp = vec![0.0; h];
        for k in 0..h {
            let i = sig(z[k]);
            let fl = sig(z[h + k]);
            let fr = sig(z[2 * h + k]);
            let o = sig(z[3 * h + k]);
            let u = z[4 * h + k].tanh();
            c[k] = fl * l.0[k] + fr * r.0[k] + i * u;
            hp[k] = o * c[k].tanh();
        }
        (c, hp)
    }

    /// Straight-line inverse cell on plain vectors.
    fn oracle_split(
        m: &TaeModel,
        level: Level,
        c: &[f64],
        hp: &[f64],
    ) -> [(Vec<f64>, Vec<f64>); 2] {
        let p = m.level(level);
        let h = m.config.hidden;
        let z: Vec<f64> = matvec(m.store.get(p.split_w), hp)
            .iter()
            .zip(m.store.get(p.split_b).data())
            .map(|(a, b)| a + b)
            .collect();
        let child = |off: usize| {
            let mut cc = vec![0.0; h];
            let mut hh = vec![0.0; h];
            for k in 0..h {
                let i = sig(z[off + k]);
                let f = sig(z[off + h + k]);
                let o = sig(z[off + 2 * h + k]);
                let u = z[off + 3 * h + k].tanh();
                cc[k] = f * c[k] + i * u;
                hh[k] = o * cc[k].tanh();
            }
            (cc, hh)
        };
        [child(0), child(4 * h)]
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn state(tape: &mut Tape<'_>, c: Vec<f64>, h: Vec<f64>) -> NodeState {
        NodeState {
            c: tape.leaf(Tensor::vector(c)).unwrap(),
            h: tape.leaf(Tensor::vector(h)).unwrap(),
        }
    }

    fn values(tape: &Tape<'_>, s: NodeState) -> (Vec<f64>, Vec<f64>) {
        (
            tape.value(s.c).data().to_vec(),
            tape.value(s.h).data().to_vec(),
        )
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_compose_averages_memory() {
        let m = TaeModel::zeros(ModelConfig::new(3, 3));
        let mut tape = Tape::new(&m.store);
        let l = state(&mut tape, vec![1.0, -2.0, 0.5], vec![0.3, 0.1, 0.2]);
        let r = state(&mut tape, vec![3.0, 0.0, 0.5], vec![-0.3, 0.9, 0.0]);
        let p = m.compose(&mut tape, Level::Sentence, l, r).unwrap();
        let (c, h) = values(&tape, p);
        assert_eq!(c, vec![2.0, -1.0, 0.5]);
        let expected_h: Vec<f64> = c.iter().map(|v| 0.5 * v.tanh()).collect();
        assert_close(&h, &expected_h, 1e-15);

        let zero = state(&mut tape, vec![0.0; 3], vec![0.0; 3]);
        let p = m.compose(&mut tape, Level::Sentence, zero, zero).unwrap();
        assert_eq!(values(&tape, p), (vec![0.0; 3], vec![0.0; 3]));
    }

    #[test]
    fn compose_matches_straight_line_cell() {
        let m = TaeModel::new(ModelConfig::new(4, 4), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (lc, lh, rc, rh) = (
            random_vec(&mut rng, 4),
            random_vec(&mut rng, 4),
            random_vec(&mut rng, 4),
            random_vec(&mut rng, 4),
        );
        let mut tape = Tape::new(&m.store);
        let l = state(&mut tape, lc.clone(), lh.clone());
        let r = state(&mut tape, rc.clone(), rh.clone());
        let p = m.compose(&mut tape, Level::Sentence, l, r).unwrap();
        let (c, h) = values(&tape, p);
        let (oc, oh) = oracle_compose(&m, Level::Sentence, (&lc, &lh), (&rc, &rh));
        assert_close(&c, &oc, 1e-14);
        assert_close(&h, &oh, 1e-14);
    }

    #[test]
    fn compose_rejects_dimension_mismatch() {
        let m = TaeModel::zeros(ModelConfig::new(3, 3));
        let mut tape = Tape::new(&m.store);
        let l = state(&mut tape, vec![0.0; 3], vec![0.0; 3]);
        let r = state(&mut tape, vec![0.0; 2], vec![0.0; 2]);
        assert!(m.compose(&mut tape, Level::Sentence, l, r).is_err());
    }

    #[test]
    fn zero_split_halves_memory() {
        let m = TaeModel::zeros(ModelConfig::new(2, 2));
        let mut tape = Tape::new(&m.store);
        let p = state(&mut tape, vec![1.0, -4.0], vec![0.2, 0.2]);
        let (l, r) = m.split(&mut tape, Level::Sentence, p).unwrap();
        for child in [l, r] {
            let (c, h) = values(&tape, child);
            assert_eq!(c, vec![0.5, -2.0]);
            assert_close(&h, &[0.5 * 0.5f64.tanh(), 0.5 * (-2.0f64).tanh()], 1e-15);
        }
        let zero = state(&mut tape, vec![0.0; 2], vec![0.0; 2]);
        let (l, r) = m.split(&mut tape, Level::Sentence, zero).unwrap();
        assert_eq!(values(&tape, l), (vec![0.0; 2], vec![0.0; 2]));
        assert_eq!(values(&tape, r), (vec![0.0; 2], vec![0.0; 2]));
    }

    #[test]
    fn split_matches_straight_line_cell() {
        let m = TaeModel::new(ModelConfig::new(4, 4), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (pc, ph) = (random_vec(&mut rng, 4), random_vec(&mut rng, 4));
        let mut tape = Tape::new(&m.store);
        let p = state(&mut tape, pc.clone(), ph.clone());
        let (l, r) = m.split(&mut tape, Level::Sentence, p).unwrap();
        let [ol, or] = oracle_split(&m, Level::Sentence, &pc, &ph);
        assert_close(&values(&tape, l).0, &ol.0, 1e-14);
        assert_close(&values(&tape, l).1, &ol.1, 1e-14);
        assert_close(&values(&tape, r).0, &or.0, 1e-14);
        assert_close(&values(&tape, r).1, &or.1, 1e-14);
    }

    #[test]
    fn leaf_transform_zero_and_identity() {
        let m = TaeModel::zeros(ModelConfig::new(3, 3));
        let mut tape = Tape::new(&m.store);
        let e = tape.leaf(Tensor::vector(vec![0.4, -0.2, 1.5])).unwrap();
        let s = m.leaf_transform(&mut tape, e).unwrap();
        assert_eq!(values(&tape, s), (vec![0.0; 3], vec![0.0; 3]));

        let mut m = TaeModel::zeros(ModelConfig::new(3, 3));
        let w = m.store.get_mut(m.leaf_w).data_mut();
        for k in 0..3 {
            w[k * 3 + k] = 1.0;
            w[(3 + k) * 3 + k] = 1.0;
        }
        let mut tape = Tape::new(&m.store);
        let e = tape.leaf(Tensor::vector(vec![0.4, -0.2, 1.5])).unwrap();
        let s = m.leaf_transform(&mut tape, e).unwrap();
        let (c, h) = values(&tape, s);
        assert_eq!(c, vec![0.4, -0.2, 1.5]);
        assert_close(&h, &[0.4f64.tanh(), (-0.2f64).tanh(), 1.5f64.tanh()], 1e-15);

        let e = tape.leaf(Tensor::vector(vec![0.4, -0.2])).unwrap();
        assert!(m.leaf_transform(&mut tape, e).is_err());
    }

    #[test]
    fn leaf_transform_gradient() {
        let m = TaeModel::new(ModelConfig::new(5, 4), 8);
        let report = grad_check(&m.store, &[m.leaf_w, m.leaf_b], 1e-4, |tape| {
            let e = tape.leaf(Tensor::vector(vec![0.3, -0.7, 0.2, 0.9, -0.1]))?;
            let s = m.leaf_transform(tape, e)?;
            let both = tape.concat(&[s.c, s.h])?;
            let target = tape.leaf(Tensor::vector(vec![0.1; 8]))?;
            tape.mse(both, target)
        })
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn score_pairs_counts_and_symmetry() {
        let m = TaeModel::zeros(ModelConfig::new(2, 2));
        let mut tape = Tape::new(&m.store);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let states: Vec<NodeState> = (0..5)
            .map(|_| {
                let (c, h) = (random_vec(&mut rng, 2), random_vec(&mut rng, 2));
                state(&mut tape, c, h)
            })
            .collect();
        let (cands, scores) = m.score_pairs(&mut tape, Level::Sentence, &states).unwrap();
        assert_eq!(cands.len(), 4);
        assert_eq!(tape.value(scores).data(), &[0.0; 4]);
        let (_, two) = m
            .score_pairs(&mut tape, Level::Sentence, &states[..2])
            .unwrap();
        assert_eq!(tape.value(two).len(), 1);
        assert!(m
            .score_pairs(&mut tape, Level::Sentence, &states[..1])
            .is_err());
    }

    #[test]
    fn score_depends_only_on_adjacent_pair() {
        let m = TaeModel::new(ModelConfig::new(3, 3), 21);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw: Vec<(Vec<f64>, Vec<f64>)> = (0..5)
            .map(|_| (random_vec(&mut rng, 3), random_vec(&mut rng, 3)))
            .collect();
        let mut tape = Tape::new(&m.store);
        let states: Vec<NodeState> = raw
            .iter()
            .map(|(c, h)| state(&mut tape, c.clone(), h.clone()))
            .collect();
        let (_, scores) = m.score_pairs(&mut tape, Level::Sentence, &states).unwrap();
        let all = tape.value(scores).data().to_vec();
        for k in 0..4 {
            let (_, pair) = m
                .score_pairs(&mut tape, Level::Sentence, &states[k..k + 2])
                .unwrap();
            assert_eq!(tape.value(pair).data()[0], all[k]);
        }
    }

    #[test]
    fn single_leaf_encodes_to_itself() {
        let m = TaeModel::new(ModelConfig::new(2, 2), 1);
        let mut tape = Tape::new(&m.store);
        let s = state(&mut tape, vec![0.1, 0.2], vec![0.3, 0.4]);
        let enc = m
            .encode_sequence(
                &mut tape,
                Level::Sentence,
                &[s],
                MergeChoice::Sample(&mut Sampler::deterministic(1.0)),
            )
            .unwrap();
        assert_eq!(enc.root, s);
        assert!(enc.trace.is_empty());
    }

    #[test]
    fn forced_trace_yields_left_branching() {
        let m = TaeModel::new(ModelConfig::new(2, 2), 1);
        let mut tape = Tape::new(&m.store);
        let leaves: Vec<NodeState> = (0..3)
            .map(|i| state(&mut tape, vec![i as f64; 2], vec![0.1; 2]))
            .collect();
        let forced = MergeTrace::new(vec![0, 0]);
        let enc = m
            .encode_sequence(
                &mut tape,
                Level::Sentence,
                &leaves,
                MergeChoice::Follow(&forced),
            )
            .unwrap();
        assert_eq!(enc.trace.positions(), &[0, 0]);
        assert_eq!(enc.trace.to_tree().unwrap().to_string(), "((0 1) 2)");
        let wrong = MergeTrace::new(vec![0]);
        assert!(m
            .encode_sequence(
                &mut tape,
                Level::Sentence,
                &leaves,
                MergeChoice::Follow(&wrong)
            )
            .is_err());
    }

    /// Re-simulates greedy merging from scratch at every step with the
    /// straight-line cell, recomputing all candidates.
    fn brute_force_trace(
        m: &TaeModel,
        leaves: &[(Vec<f64>, Vec<f64>)],
    ) -> (Vec<usize>, (Vec<f64>, Vec<f64>)) {
        let p = m.level(Level::Sentence);
        let sw = m.store.get(p.score_w).data().to_vec();
        let sb = m.store.get(p.score_b).data()[0];
        let mut items = leaves.to_vec();
        let mut trace = Vec::new();
        while items.len() > 1 {
            let cands: Vec<(Vec<f64>, Vec<f64>)> = items
                .windows(2)
                .map(|w| oracle_compose(m, Level::Sentence, (&w[0].0, &w[0].1), (&w[1].0, &w[1].1)))
                .collect();
            let scores: Vec<f64> = cands
                .iter()
                .map(|(_, h)| h.iter().zip(&sw).map(|(a, b)| a * b).sum::<f64>() + sb)
                .collect();
            let mut best = 0;
            for k in 1..scores.len() {
                if scores[k] > scores[best] {
                    best = k;
                }
            }
            items[best] = cands[best].clone();
            items.remove(best + 1);
            trace.push(best);
        }
        (trace, items.pop().unwrap())
    }

    #[test]
    fn greedy_encoding_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..40 {
            let m = TaeModel::new(ModelConfig::new(4, 4), trial);
            let n = 1 + trial as usize % 6;
            let raw: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
                .map(|_| (random_vec(&mut rng, 4), random_vec(&mut rng, 4)))
                .collect();
            let mut tape = Tape::new(&m.store);
            let leaves: Vec<NodeState> = raw
                .iter()
                .map(|(c, h)| state(&mut tape, c.clone(), h.clone()))
                .collect();
            let enc = m
                .encode_sequence(
                    &mut tape,
                    Level::Sentence,
                    &leaves,
                    MergeChoice::Sample(&mut Sampler::deterministic(2.5)),
                )
                .unwrap();
            let (trace, root) = brute_force_trace(&m, &raw);
            assert_eq!(enc.trace.positions(), trace.as_slice(), "trial {trial}");
            assert_close(&values(&tape, enc.root).0, &root.0, 1e-12);
            assert_close(&values(&tape, enc.root).1, &root.1, 1e-12);
        }
    }

    /// Top-down decode following the tree structure recursively.
    fn oracle_decode(
        m: &TaeModel,
        tree: &crate::corpus::BinaryTree,
        c: &[f64],
        h: &[f64],
        out: &mut Vec<(usize, Vec<f64>)>,
    ) {
        match tree {
            crate::corpus::BinaryTree::Leaf(i) => out.push((*i, h.to_vec())),
            crate::corpus::BinaryTree::Node(l, r) => {
                let [lc, rc] = oracle_split(m, Level::Sentence, c, h);
                oracle_decode(m, l, &lc.0, &lc.1, out);
                oracle_decode(m, r, &rc.0, &rc.1, out);
            }
        }
    }

    #[test]
    fn decoder_mirrors_encoder_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = TaeModel::new(ModelConfig::new(3, 3), 2);
        for _ in 0..50 {
            let n = rng.gen_range(1..=8usize);
            let positions: Vec<usize> = (0..n - 1).map(|k| rng.gen_range(0..n - k - 1)).collect();
            let trace = MergeTrace::new(positions);
            let (c, h) = (random_vec(&mut rng, 3), random_vec(&mut rng, 3));
            let mut tape = Tape::new(&m.store);
            let root = state(&mut tape, c.clone(), h.clone());
            let leaves = m
                .decode_tree(&mut tape, Level::Sentence, root, &trace)
                .unwrap();
            assert_eq!(leaves.len(), n);
            let mut expected = Vec::new();
            oracle_decode(&m, &trace.to_tree().unwrap(), &c, &h, &mut expected);
            for (k, (leaf, (idx, oh))) in leaves.iter().zip(&expected).enumerate() {
                assert_eq!(k, *idx);
                assert_close(tape.value(leaf.h).data(), oh, 1e-13);
            }
        }
    }

    #[test]
    fn decode_small_cases_and_invalid_trace() {
        let m = TaeModel::new(ModelConfig::new(2, 2), 3);
        let mut tape = Tape::new(&m.store);
        let root = state(&mut tape, vec![0.1, 0.2], vec![0.3, 0.4]);
        let one = m
            .decode_tree(&mut tape, Level::Sentence, root, &MergeTrace::default())
            .unwrap();
        assert_eq!(one, vec![root]);
        let two = m
            .decode_tree(&mut tape, Level::Sentence, root, &MergeTrace::new(vec![0]))
            .unwrap();
        let (l, r) = m.split(&mut tape, Level::Sentence, root).unwrap();
        assert_eq!(tape.value(two[0].h), tape.value(l.h));
        assert_eq!(tape.value(two[1].h), tape.value(r.h));
        assert!(m
            .decode_tree(&mut tape, Level::Sentence, root, &MergeTrace::new(vec![1]))
            .is_err());
    }

    #[test]
    fn document_tree_respects_sentences() {
        let m = TaeModel::new(ModelConfig::new(3, 4), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cfg = GumbelConfig {
            tau: 1.0,
            noise: true,
            seed: 5,
        };
        for trial in 0..30u64 {
            let sizes: Vec<usize> = (0..rng.gen_range(1..=4))
                .map(|_| rng.gen_range(1..=4))
                .collect();
            let mut tape = Tape::new(&m.store);
            let sentences: Vec<Vec<NodeState>> = sizes
                .iter()
                .map(|&s| {
                    (0..s)
                        .map(|_| {
                            let e = tape.leaf(Tensor::vector(random_vec(&mut rng, 3))).unwrap();
                            m.leaf_transform(&mut tape, e).unwrap()
                        })
                        .collect()
                })
                .collect();
            let enc = m
                .encode_document(&mut tape, &sentences, &mut Sampler::new(cfg, trial))
                .unwrap();
            let tree = enc.full_tree();
            let total: usize = sizes.iter().sum();
            assert_eq!(tree.num_leaves(), total);
            tree.validate().unwrap();
            let spans = tree.internal_spans();
            let mut start = 0;
            for &s in &sizes {
                if s > 1 {
                    assert!(spans.contains(&(start, start + s - 1)), "{tree} {sizes:?}");
                }
                start += s;
            }
            if sizes.len() == 1 {
                assert_eq!(tree, enc.sentence_traces[0].to_tree().unwrap());
            }
        }
    }

    #[test]
    fn straight_through_gradient_matches_relaxed_surrogate() {
        let m = TaeModel::new(ModelConfig::new(3, 3), 12);
        let leaves_raw: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (vec![0.2, -0.5, 0.1], vec![0.4, 0.3, -0.2]),
            (vec![-0.3, 0.8, 0.0], vec![0.1, -0.6, 0.5]),
            (vec![0.7, 0.1, -0.4], vec![-0.2, 0.2, 0.9]),
        ];
        let u = Tensor::vector(vec![0.5, -1.0, 0.75]);
        let build = |tape: &mut Tape<'_>, relaxed: bool| -> crate::Result<crate::autodiff::Var> {
            let leaves: Vec<NodeState> = leaves_raw
                .iter()
                .map(|(c, h)| NodeState {
                    c: tape.leaf(Tensor::vector(c.clone())).unwrap(),
                    h: tape.leaf(Tensor::vector(h.clone())).unwrap(),
                })
                .collect();
            let (cands, scores) = m.score_pairs(tape, Level::Sentence, &leaves)?;
            let sel = select_merge(tape, scores, &mut Sampler::deterministic(2.0))?;
            let hs: Vec<_> = cands.iter().map(|s| s.h).collect();
            let weights = if relaxed { sel.probs } else { sel.one_hot };
            let merged = tape.weighted_sum(weights, &hs)?;
            let uv = tape.leaf(u.clone())?;
            let prod = tape.mul(merged, uv)?;
            let ones = tape.leaf(Tensor::matrix(1, 3, vec![1.0; 3]))?;
            let total = tape.matvec(ones, prod)?;
            tape.slice(total, 0, 1)
        };
        let score_ids = [m.sentence.score_w, m.sentence.score_b];
        let st_grads = {
            let mut tape = Tape::new(&m.store);
            let root = build(&mut tape, false).unwrap();
            tape.backward(root).unwrap().into_params()
        };
        let norm: f64 = score_ids
            .iter()
            .flat_map(|&id| st_grads.get(id))
            .map(|g| g * g)
            .sum();
        assert!(
            norm > 1e-12,
            "straight-through gradient should reach the scorer"
        );
        // The relaxed surrogate has the same scorer gradient, checked against
        // finite differences.
        let report = grad_check(&m.store, &score_ids, 1e-4, |tape| build(tape, true)).unwrap();
        assert!(report.passed, "{report:?}");
        let relaxed_grads = {
            let mut tape = Tape::new(&m.store);
            let root = build(&mut tape, true).unwrap();
            tape.backward(root).unwrap().into_params()
        };
        for &id in &score_ids {
            assert_close(st_grads.get(id), relaxed_grads.get(id), 1e-12);
        }
    }

    #[test]
    fn seeded_noisy_encoding_is_reproducible() {
        let m = TaeModel::new(ModelConfig::new(3, 3), 4);
        let cfg = GumbelConfig {
            tau: 1.0,
            noise: true,
            seed: 77,
        };
        let run = || {
            let mut tape = Tape::new(&m.store);
            let leaves: Vec<NodeState> = (0..7)
                .map(|i| {
                    let e = tape
                        .leaf(Tensor::vector(vec![i as f64 * 0.1, -0.2, 0.3]))
                        .unwrap();
                    m.leaf_transform(&mut tape, e).unwrap()
                })
                .collect();
            m.encode_sequence(
                &mut tape,
                Level::Sentence,
                &leaves,
                MergeChoice::Sample(&mut Sampler::new(cfg, 1)),
            )
            .unwrap()
            .trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn checkpoint_round_trip_and_validation() {
        let m = TaeModel::new(ModelConfig::new(3, 2), 1);
        let vocab = crate::corpus::Vocab::from_tokens(["a".to_string()]);
        let ck = Checkpoint::new(&m, &vocab, serde_json::json!({"seed": 1}), Some(3));
        let text = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap(), m);

        let mut bad = ck.clone();
        bad.params[0].shape = vec![1, 1];
        bad.params[0].data = vec![0.0];
        assert!(bad.to_model().is_err());
        let mut bad = ck.clone();
        bad.config = serde_json::json!({"seed": 2});
        assert!(bad.to_model().is_err());
    }

    #[test]
    fn independent_levels_have_separate_params() {
        let mut cfg = ModelConfig::new(3, 2);
        cfg.shared_levels = false;
        let m = TaeModel::new(cfg, 1);
        assert_ne!(m.sentence, m.document);
        assert_eq!(m.structure_params().len(), 4);
        let shared = TaeModel::new(ModelConfig::new(3, 2), 1);
        assert_eq!(shared.structure_params().len(), 2);
        assert_eq!(
            shared.structure_params().len() + shared.representation_params().len(),
            shared.store.len()
        );
    }
}
