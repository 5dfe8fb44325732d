use rand::seq::index;

use super::model::Model;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Central-difference step used by [`grad_check`].
pub const FD_STEP: f64 = 1e-5;
/// Above this many parameters a random subsample of this size is checked.
pub const MAX_CHECKED: usize = 10_000;
/// Gradients smaller than this (times `max(1, |loss|)`) are compared in
/// absolute terms; finite-difference round-off grows with the loss.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Parameter index (or `param_count + input index`) of the worst entry.
    pub worst_index: usize,
    pub checked: usize,
    /// Entries whose perturbation flipped a ReLU and were therefore skipped.
    pub skipped: usize,
}

/// Compares the analytic gradient of `loss_fn(model(batch))` with central
/// finite differences, over every parameter and every input entry.
///
/// `loss_fn` returns the loss and its gradient with respect to the model
/// output. The model is evaluated in train mode (batch statistics) without
/// touching its running statistics. Entries whose `±step` perturbation moves
/// any ReLU pre-activation across zero are skipped, since the function is not
/// differentiable there.
pub fn grad_check<F>(model: &Model, batch: &Tensor, loss_fn: F) -> Result<GradCheck>
where
    F: Fn(&Tensor) -> (f64, Tensor),
{
    if model.param_count() == 0 {
        return Err(Error::Empty("parameter vector"));
    }
    let params = model.params().to_vec();
    let (out, cache) = model.run(&params, batch)?;
    let (loss, upstream) = loss_fn(&out);
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    let (analytic_p, analytic_x) = model.backward_with(&params, &cache, &upstream, true)?;
    let pattern: Vec<bool> = cache.relu_inputs().flatten().map(|v| *v > 0.0).collect();

    let eval = |p: &[f64], x: &Tensor| -> Result<Option<f64>> {
        let (out, cache) = model.run(p, x)?;
        let same = cache
            .relu_inputs()
            .flatten()
            .map(|v| *v > 0.0)
            .eq(pattern.iter().copied());
        let (l, _) = loss_fn(&out);
        if !l.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        Ok(same.then_some(l))
    };

    let floor = REL_FLOOR * loss.abs().max(1.0);
    let mut report = GradCheck {
        max_relative_error: 0.0,
        worst_index: 0,
        checked: 0,
        skipped: 0,
    };
    let mut record = |idx: usize, a: f64, plus: Option<f64>, minus: Option<f64>| match (plus, minus)
    {
        (Some(lp), Some(lm)) => {
            let n = (lp - lm) / (2.0 * FD_STEP);
            let err = (a - n).abs() / a.abs().max(n.abs()).max(floor);
            report.checked += 1;
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst_index = idx;
            }
        }
        _ => report.skipped += 1,
    };

    let mut rng = rng::stream(model.seed(), Stream::Init, u64::MAX);
    let pick = |n: usize, rng: &mut rng::Rng| -> Vec<usize> {
        if n <= MAX_CHECKED {
            (0..n).collect()
        } else {
            let mut v = index::sample(rng, n, MAX_CHECKED).into_vec();
            v.sort_unstable();
            v
        }
    };

    let mut p = params.clone();
    for i in pick(params.len(), &mut rng) {
        p[i] = params[i] + FD_STEP;
        let plus = eval(&p, batch)?;
        p[i] = params[i] - FD_STEP;
        let minus = eval(&p, batch)?;
        p[i] = params[i];
        record(i, analytic_p[i], plus, minus);
    }

    let mut x = batch.clone();
    for i in pick(batch.len(), &mut rng) {
        let orig = batch.data()[i];
        x.data_mut()[i] = orig + FD_STEP;
        let plus = eval(&params, &x)?;
        x.data_mut()[i] = orig - FD_STEP;
        let minus = eval(&params, &x)?;
        x.data_mut()[i] = orig;
        record(params.len() + i, analytic_x[i], plus, minus);
    }
    Ok(report)
}
