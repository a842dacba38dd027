use super::loss::LossConfig;
use super::model::{Model, Sample};
use super::train::batch_loss_and_gradients;
use crate::error::Result;

/// Largest disagreement between analytic and finite-difference gradients in
/// one parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub name: String,
    pub checked: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// Largest analytic gradient magnitude, to spot vacuous checks.
    pub max_gradient: f64,
}

/// Compares backpropagated gradients of the mean batch loss (dropout off)
/// with central differences of step `h`, for every parameter. The relative
/// error is `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check(
    model: &mut Model,
    batch: &[Sample],
    loss: &LossConfig,
    h: f64,
    floor: f64,
) -> Result<Vec<GroupCheck>> {
    let refs: Vec<&Sample> = batch.iter().collect();
    let (_, analytic) = batch_loss_and_gradients(model, &refs, loss, None)?;
    let names = model.param_names();
    let mut out = Vec::with_capacity(names.len());
    for (g, name) in names.iter().enumerate() {
        let len = analytic.0[g].len();
        let mut check = GroupCheck {
            name: name.clone(),
            checked: len,
            max_abs_error: 0.0,
            max_rel_error: 0.0,
            max_gradient: analytic.0[g].iter().fold(0.0, |m, x| m.max(x.abs())),
        };
        for k in 0..len {
            let original = model.params_mut()[g][k];
            model.params_mut()[g][k] = original + h;
            let up = batch_loss_and_gradients(model, &refs, loss, None)?.0;
            model.params_mut()[g][k] = original - h;
            let down = batch_loss_and_gradients(model, &refs, loss, None)?.0;
            model.params_mut()[g][k] = original;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.0[g][k];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(floor);
            check.max_abs_error = check.max_abs_error.max(abs);
            check.max_rel_error = check.max_rel_error.max(rel);
        }
        out.push(check);
    }
    Ok(out)
}
