use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::trainer::reconstruction_loss;
use crate::autodiff::{grad_check, GradCheckReport, Tape, Tensor, Var};
use crate::error::Result;
use crate::model::{Level, ModelConfig, TaeModel};

#[derive(Clone, Debug, Serialize)]
pub struct ComponentCheck {
    pub component: &'static str,
    pub report: GradCheckReport,
}

/// Finite-difference checks of the leaf transform, composition and split
/// cells, output projection and reconstruction loss on a randomly
/// initialized model.
pub fn check_gradients(
    embed_dim: usize,
    hidden: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<ComponentCheck>> {
    let m = TaeModel::new(ModelConfig::new(embed_dim, hidden), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let inputs: Vec<Vec<f64>> = (0..3).map(|_| draw(embed_dim)).collect();
    let target_2h = draw(2 * hidden);
    let target_4h = draw(4 * hidden);
    let target_e = draw(embed_dim);
    let lvl = m.sentence;
    let leaf = [m.leaf_w, m.leaf_b];

    let embed = |tape: &mut Tape<'_>, i: usize| -> Result<Var> {
        tape.leaf(Tensor::vector(inputs[i].clone()))
    };

    let mut out = Vec::new();
    let report = grad_check(&m.store, &leaf, tol, |tape| {
        let e = embed(tape, 0)?;
        let s = m.leaf_transform(tape, e)?;
        let both = tape.concat(&[s.c, s.h])?;
        let t = tape.leaf(Tensor::vector(target_2h.clone()))?;
        tape.mse(both, t)
    })?;
    out.push(ComponentCheck {
        component: "leaf",
        report,
    });

    let report = grad_check(
        &m.store,
        &[lvl.compose_w, lvl.compose_b, m.leaf_w, m.leaf_b],
        tol,
        |tape| {
            let (a, b) = (embed(tape, 0)?, embed(tape, 1)?);
            let l = m.leaf_transform(tape, a)?;
            let r = m.leaf_transform(tape, b)?;
            let p = m.compose(tape, Level::Sentence, l, r)?;
            let both = tape.concat(&[p.c, p.h])?;
            let t = tape.leaf(Tensor::vector(target_2h.clone()))?;
            tape.mse(both, t)
        },
    )?;
    out.push(ComponentCheck {
        component: "compose",
        report,
    });

    let report = grad_check(
        &m.store,
        &[lvl.split_w, lvl.split_b, m.leaf_w, m.leaf_b],
        tol,
        |tape| {
            let a = embed(tape, 0)?;
            let parent = m.leaf_transform(tape, a)?;
            let (l, r) = m.split(tape, Level::Sentence, parent)?;
            let all = tape.concat(&[l.c, l.h, r.c, r.h])?;
            let t = tape.leaf(Tensor::vector(target_4h.clone()))?;
            tape.mse(all, t)
        },
    )?;
    out.push(ComponentCheck {
        component: "split",
        report,
    });

    let report = grad_check(
        &m.store,
        &[m.proj_w, m.proj_b, m.leaf_w, m.leaf_b],
        tol,
        |tape| {
            let a = embed(tape, 0)?;
            let s = m.leaf_transform(tape, a)?;
            let y = m.project(tape, s.h)?;
            let t = tape.leaf(Tensor::vector(target_e.clone()))?;
            tape.mse(y, t)
        },
    )?;
    out.push(ComponentCheck {
        component: "projection",
        report,
    });

    let report = grad_check(
        &m.store,
        &[m.proj_w, m.proj_b, m.leaf_w, m.leaf_b],
        tol,
        |tape| {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for i in 0..inputs.len() {
                let e = embed(tape, i)?;
                let s = m.leaf_transform(tape, e)?;
                ys.push(m.project(tape, s.h)?);
                xs.push(e);
            }
            reconstruction_loss(tape, &xs, &ys)
        },
    )?;
    out.push(ComponentCheck {
        component: "reconstruction_loss",
        report,
    });
    Ok(out)
}
