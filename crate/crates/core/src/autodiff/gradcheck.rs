use serde::Serialize;

use super::{ParamId, ParamStore, Tape, Var};
use crate::error::Result;

/// Central-difference step used by [`grad_check`].
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for the relative error, so entries whose true gradient
/// is zero are compared absolutely.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub tol: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares analytic gradients of the scalar built by `f` against central
/// differences for every entry of `params`.
///
/// `f` must be deterministic: no noise, no dropout.
pub fn grad_check<F>(
    store: &ParamStore,
    params: &[ParamId],
    tol: f64,
    f: F,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new(store);
        let root = f(&mut tape)?;
        tape.backward(root)?.into_params()
    };

    let eval = |s: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new(s);
        let root = f(&mut tape)?;
        Ok(tape.value(root).item())
    };

    let mut probe = store.clone();
    let mut max_err = 0.0f64;
    let mut worst = None;
    let mut checked = 0;
    for &id in params {
        for i in 0..store.get(id).len() {
            let orig = store.get(id).data()[i];
            probe.get_mut(id).data_mut()[i] = orig + FD_STEP;
            let plus = eval(&probe)?;
            probe.get_mut(id).data_mut()[i] = orig - FD_STEP;
            let minus = eval(&probe)?;
            probe.get_mut(id).data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let err = relative_error(analytic.get(id)[i], numeric);
            checked += 1;
            if err > max_err || worst.is_none() {
                max_err = max_err.max(err);
                worst = Some((store.name(id).to_string(), i));
            }
        }
    }
    Ok(GradCheckReport {
        checked,
        max_rel_error: max_err,
        worst,
        tol,
        passed: max_err <= tol,
    })
}
