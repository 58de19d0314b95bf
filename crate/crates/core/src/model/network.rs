use super::gumbel::{select_merge, Sampler, Selection};
use super::params::{Level, TaeModel};
use super::trace::MergeTrace;
use crate::autodiff::{Tape, Var};
use crate::corpus::BinaryTree;
use crate::error::{Error, Result};

/// Memory and hidden vectors of one tree node, as tape variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeState {
    pub c: Var,
    pub h: Var,
}

/// How merge decisions are made while encoding a sequence.
pub enum MergeChoice<'a> {
    /// Gumbel-perturbed argmax from the sampler's stream.
    Sample(&'a mut Sampler),
    /// Replays a fixed trace; probabilities use unit temperature.
    Follow(&'a MergeTrace),
}

#[derive(Clone, Debug)]
pub struct SequenceEncoding {
    pub root: NodeState,
    pub trace: MergeTrace,
    pub selections: Vec<Selection>,
}

#[derive(Clone, Debug)]
pub struct DocumentEncoding {
    pub root: NodeState,
    pub sentence_roots: Vec<NodeState>,
    pub sentence_traces: Vec<MergeTrace>,
    pub document_trace: MergeTrace,
}

impl DocumentEncoding {
    pub fn sentence_sizes(&self) -> Vec<usize> {
        self.sentence_traces
            .iter()
            .map(MergeTrace::num_leaves)
            .collect()
    }

    /// Document-level tree with each leaf replaced by its sentence tree.
    pub fn full_tree(&self) -> BinaryTree {
        let mut offset = 0;
        let sentence_trees: Vec<BinaryTree> = self
            .sentence_traces
            .iter()
            .map(|t| {
                let tree = t
                    .to_tree()
                    .expect("traces built by the encoder are valid")
                    .shifted(offset);
                offset += t.num_leaves();
                tree
            })
            .collect();
        self.document_trace
            .to_tree()
            .expect("traces built by the encoder are valid")
            .substitute(&sentence_trees)
    }
}

fn check_dims(tape: &Tape<'_>, state: NodeState, h: usize) -> Result<()> {
    let (c_len, h_len) = (tape.value(state.c).len(), tape.value(state.h).len());
    if c_len != h || h_len != h {
        return Err(Error::ShapeMismatch {
            op: "node state",
            left: vec![c_len, h_len],
            right: vec![h, h],
        });
    }
    Ok(())
}

impl TaeModel {
    /// Affine map of an EDU embedding to `[c; h]` with `tanh` on `h`.
    pub fn leaf_transform(&self, tape: &mut Tape<'_>, embedding: Var) -> Result<NodeState> {
        let (w, b) = (tape.param(self.leaf_w), tape.param(self.leaf_b));
        let z = tape.affine(w, embedding, b)?;
        let h_dim = self.config.hidden;
        let c = tape.slice(z, 0, h_dim)?;
        let pre_h = tape.slice(z, h_dim, h_dim)?;
        let h = tape.tanh(pre_h)?;
        Ok(NodeState { c, h })
    }

    /// Binary TreeLSTM cell.
    pub fn compose(
        &self,
        tape: &mut Tape<'_>,
        level: Level,
        left: NodeState,
        right: NodeState,
    ) -> Result<NodeState> {
        let h_dim = self.config.hidden;
        check_dims(tape, left, h_dim)?;
        check_dims(tape, right, h_dim)?;
        let p = *self.level(level);
        let (w, b) = (tape.param(p.compose_w), tape.param(p.compose_b));
        let x = tape.concat(&[left.h, right.h])?;
        let z = tape.affine(w, x, b)?;
        let gates = tape.chunks(z, 5)?;
        let i = tape.sigmoid(gates[0])?;
        let f_l = tape.sigmoid(gates[1])?;
        let f_r = tape.sigmoid(gates[2])?;
        let o = tape.sigmoid(gates[3])?;
        let u = tape.tanh(gates[4])?;
        let keep_l = tape.mul(f_l, left.c)?;
        let keep_r = tape.mul(f_r, right.c)?;
        let write = tape.mul(i, u)?;
        let c = tape.sum(&[keep_l, keep_r, write])?;
        let tc = tape.tanh(c)?;
        let h = tape.mul(o, tc)?;
        Ok(NodeState { c, h })
    }

    /// Un-normalized merge score of a candidate composition.
    pub fn score(&self, tape: &mut Tape<'_>, level: Level, candidate: NodeState) -> Result<Var> {
        let p = *self.level(level);
        let (w, b) = (tape.param(p.score_w), tape.param(p.score_b));
        tape.affine(w, candidate.h, b)
    }

    /// Composes every adjacent pair and scores it. Returns the candidate
    /// states and the `n - 1` scores.
    pub fn score_pairs(
        &self,
        tape: &mut Tape<'_>,
        level: Level,
        states: &[NodeState],
    ) -> Result<(Vec<NodeState>, Var)> {
        if states.len() < 2 {
            return Err(Error::invalid("scoring needs at least two states"));
        }
        let mut candidates = Vec::with_capacity(states.len() - 1);
        let mut scores = Vec::with_capacity(states.len() - 1);
        for pair in states.windows(2) {
            let cand = self.compose(tape, level, pair[0], pair[1])?;
            scores.push(self.score(tape, level, cand)?);
            candidates.push(cand);
        }
        let scores = tape.concat(&scores)?;
        Ok((candidates, scores))
    }

    /// Builds a tree bottom-up: score every adjacent pair, merge the
    /// selected one, forward all other states untouched, repeat.
    ///
    /// Candidate compositions of pairs that did not change are carried over
    /// from the previous step; they are the same values the cell would
    /// recompute.
    pub fn encode_sequence(
        &self,
        tape: &mut Tape<'_>,
        level: Level,
        leaves: &[NodeState],
        mut choice: MergeChoice<'_>,
    ) -> Result<SequenceEncoding> {
        let Some(&first) = leaves.first() else {
            return Err(Error::invalid("cannot encode an empty sequence"));
        };
        if let MergeChoice::Follow(trace) = &choice {
            trace.validate()?;
            if trace.num_leaves() != leaves.len() {
                return Err(Error::InvalidTrace(format!(
                    "trace covers {} leaves, sequence has {}",
                    trace.num_leaves(),
                    leaves.len()
                )));
            }
        }
        let mut trace = MergeTrace::default();
        let mut selections = Vec::new();
        if leaves.len() == 1 {
            return Ok(SequenceEncoding {
                root: first,
                trace,
                selections,
            });
        }

        let mut states = leaves.to_vec();
        let mut candidates = Vec::with_capacity(states.len() - 1);
        let mut scores = Vec::with_capacity(states.len() - 1);
        for pair in states.windows(2) {
            let cand = self.compose(tape, level, pair[0], pair[1])?;
            scores.push(self.score(tape, level, cand)?);
            candidates.push(cand);
        }

        while states.len() > 1 {
            let step = trace.len();
            let score_vec = tape.concat(&scores)?;
            let selection = match &mut choice {
                MergeChoice::Sample(sampler) => select_merge(tape, score_vec, sampler)?,
                MergeChoice::Follow(forced) => {
                    let probs = tape.softmax(score_vec)?;
                    let index = forced.positions()[step];
                    let one_hot = tape.straight_through(probs, index)?;
                    Selection {
                        probs,
                        one_hot,
                        index,
                    }
                }
            };
            let l = selection.index;
            let cs: Vec<Var> = candidates.iter().map(|s| s.c).collect();
            let hs: Vec<Var> = candidates.iter().map(|s| s.h).collect();
            let merged = NodeState {
                c: tape.weighted_sum(selection.one_hot, &cs)?,
                h: tape.weighted_sum(selection.one_hot, &hs)?,
            };
            states[l] = merged;
            states.remove(l + 1);

            let m = states.len();
            let mut next_c = Vec::with_capacity(m.saturating_sub(1));
            let mut next_s = Vec::with_capacity(m.saturating_sub(1));
            let keep = l.saturating_sub(1);
            next_c.extend_from_slice(&candidates[..keep]);
            next_s.extend_from_slice(&scores[..keep]);
            if l >= 1 {
                let cand = self.compose(tape, level, states[l - 1], merged)?;
                next_s.push(self.score(tape, level, cand)?);
                next_c.push(cand);
            }
            if l + 1 < m {
                let cand = self.compose(tape, level, merged, states[l + 1])?;
                next_s.push(self.score(tape, level, cand)?);
                next_c.push(cand);
            }
            if l + 2 < candidates.len() {
                next_c.extend_from_slice(&candidates[l + 2..]);
                next_s.extend_from_slice(&scores[l + 2..]);
            }
            candidates = next_c;
            scores = next_s;
            trace.push(l);
            selections.push(selection);
        }
        Ok(SequenceEncoding {
            root: states[0],
            trace,
            selections,
        })
    }

    /// Inverse TreeLSTM cell: one parent state into left and right children.
    pub fn split(
        &self,
        tape: &mut Tape<'_>,
        level: Level,
        parent: NodeState,
    ) -> Result<(NodeState, NodeState)> {
        check_dims(tape, parent, self.config.hidden)?;
        let p = *self.level(level);
        let (w, b) = (tape.param(p.split_w), tape.param(p.split_b));
        let z = tape.affine(w, parent.h, b)?;
        let g = tape.chunks(z, 8)?;
        let child = |tape: &mut Tape<'_>, gates: &[Var]| -> Result<NodeState> {
            let i = tape.sigmoid(gates[0])?;
            let f = tape.sigmoid(gates[1])?;
            let o = tape.sigmoid(gates[2])?;
            let u = tape.tanh(gates[3])?;
            let keep = tape.mul(f, parent.c)?;
            let write = tape.mul(i, u)?;
            let c = tape.add(keep, write)?;
            let tc = tape.tanh(c)?;
            let h = tape.mul(o, tc)?;
            Ok(NodeState { c, h })
        };
        let left = child(tape, &g[0..4])?;
        let right = child(tape, &g[4..8])?;
        Ok((left, right))
    }

    /// Splits nodes in reverse merge order, so output `k` reconstructs
    /// input leaf `k`.
    pub fn decode_tree(
        &self,
        tape: &mut Tape<'_>,
        level: Level,
        root: NodeState,
        trace: &MergeTrace,
    ) -> Result<Vec<NodeState>> {
        trace.validate()?;
        let mut states = vec![root];
        for &p in trace.positions().iter().rev() {
            let (l, r) = self.split(tape, level, states[p])?;
            states[p] = l;
            states.insert(p + 1, r);
        }
        Ok(states)
    }

    /// Maps a hidden vector back to embedding space.
    pub fn project(&self, tape: &mut Tape<'_>, h: Var) -> Result<Var> {
        let (w, b) = (tape.param(self.proj_w), tape.param(self.proj_b));
        tape.affine(w, h, b)
    }

    /// Encodes each sentence, then the sequence of sentence roots.
    pub fn encode_document(
        &self,
        tape: &mut Tape<'_>,
        sentences: &[Vec<NodeState>],
        sampler: &mut Sampler,
    ) -> Result<DocumentEncoding> {
        if sentences.is_empty() {
            return Err(Error::invalid("document without sentences"));
        }
        let mut sentence_roots = Vec::with_capacity(sentences.len());
        let mut sentence_traces = Vec::with_capacity(sentences.len());
        for leaves in sentences {
            let enc =
                self.encode_sequence(tape, Level::Sentence, leaves, MergeChoice::Sample(sampler))?;
            sentence_roots.push(enc.root);
            sentence_traces.push(enc.trace);
        }
        let doc = self.encode_sequence(
            tape,
            Level::Document,
            &sentence_roots,
            MergeChoice::Sample(sampler),
        )?;
        Ok(DocumentEncoding {
            root: doc.root,
            sentence_roots,
            sentence_traces,
            document_trace: doc.trace,
        })
    }
}
