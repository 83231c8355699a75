use crate::dataset::Quadruple;
use crate::error::{Error, Result};

use super::history::History;
use super::params::{Grads, ModelParams};

/// An event paired with its history window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub quad: Quadruple,
    pub history: History,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn input_vector(params: &ModelParams, s: usize, r: usize, h: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(params.layout().input_dim());
    x.extend_from_slice(params.entity(s));
    x.extend_from_slice(params.relation(r));
    x.extend_from_slice(h);
    x
}

fn logits_for_input(params: &ModelParams, x: &[f64]) -> Vec<f64> {
    (0..params.layout().num_entities)
        .map(|o| dot(params.output(o), x))
        .collect()
}

/// Logits over all candidate objects for query `(s, r)` with history
/// feature `h`.
pub fn score(params: &ModelParams, s: usize, r: usize, h: &[f64]) -> Result<Vec<f64>> {
    let layout = params.layout();
    layout.check_ids(s, r)?;
    if h.len() != layout.dim {
        return Err(Error::shape(format!(
            "history vector has dimension {}, expected {}",
            h.len(),
            layout.dim
        )));
    }
    Ok(logits_for_input(params, &input_vector(params, s, r, h)))
}

pub fn score_example(params: &ModelParams, ex: &TrainingExample) -> Result<Vec<f64>> {
    check_example(params, ex)?;
    let h = ex.history.vector(params);
    score(params, ex.quad.subject, ex.quad.relation, &h)
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

fn check_example(params: &ModelParams, ex: &TrainingExample) -> Result<()> {
    let layout = params.layout();
    layout.check_ids(ex.quad.subject, ex.quad.relation)?;
    let n = layout.num_entities;
    if ex.quad.object >= n || ex.history.objects.iter().any(|&o| o >= n) {
        return Err(Error::invalid(format!(
            "object id out of range in {:?}",
            ex.quad
        )));
    }
    Ok(())
}

/// Adds `weight · ∂(−log p(o | s, r))/∂θ` for one example into `grads` and
/// returns the example's cross-entropy.
pub(crate) fn accumulate_example(
    params: &ModelParams,
    ex: &TrainingExample,
    grads: &mut Grads,
    weight: f64,
) -> f64 {
    let layout = params.layout();
    let d = layout.dim;
    let (s, r, target) = (ex.quad.subject, ex.quad.relation, ex.quad.object);
    let h = ex.history.vector(params);
    let x = input_vector(params, s, r, &h);
    let logits = logits_for_input(params, &x);
    let lse = log_sum_exp(&logits);
    let loss = lse - logits[target];

    let mut dx = vec![0.0; layout.input_dim()];
    for (o, z) in logits.iter().enumerate() {
        let mut dz = (z - lse).exp();
        if o == target {
            dz -= 1.0;
        }
        let dz = dz * weight;
        let w = params.output(o);
        for (acc, wk) in dx.iter_mut().zip(w) {
            *acc += dz * wk;
        }
        for (g, xk) in grads.output_mut(o).iter_mut().zip(&x) {
            *g += dz * xk;
        }
    }
    for (g, v) in grads.entity_mut(s).iter_mut().zip(&dx[..d]) {
        *g += v;
    }
    for (g, v) in grads.relation_mut(r).iter_mut().zip(&dx[d..2 * d]) {
        *g += v;
    }
    if !ex.history.objects.is_empty() {
        let inv = 1.0 / ex.history.objects.len() as f64;
        for &o in &ex.history.objects {
            for (g, v) in grads.entity_mut(o).iter_mut().zip(&dx[2 * d..]) {
                *g += v * inv;
            }
        }
    }
    loss
}

/// Mean cross-entropy of the batch under the full softmax, and its exact
/// gradient. `penalty` is added to the gradient when supplied; it does not
/// contribute to the returned loss.
pub fn loss_and_grads(
    params: &ModelParams,
    batch: &[TrainingExample],
    penalty: Option<&Grads>,
) -> Result<(f64, Grads)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    for ex in batch {
        check_example(params, ex)?;
    }
    let mut grads = Grads::zeros(params.layout());
    let weight = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for ex in batch {
        total += accumulate_example(params, ex, &mut grads, weight);
    }
    if let Some(p) = penalty {
        grads.add_scaled(p, 1.0)?;
    }
    Ok((total * weight, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, ParamLayout};

    fn zero_params(ne: usize, nr: usize, d: usize) -> ModelParams {
        ModelParams::zeros(ParamLayout::new(ne, nr, d).unwrap())
    }

    #[test]
    fn zero_params_give_uniform_softmax() {
        let p = zero_params(5, 2, 3);
        let logits = score(&p, 1, 1, &[0.0; 3]).unwrap();
        assert!(logits.iter().all(|&z| z == 0.0));
        for q in softmax(&logits) {
            assert!((q - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_logit() {
        let mut p = zero_params(2, 1, 1);
        p.entity_mut(0)[0] = 1.0;
        p.relation_mut(0)[0] = 2.0;
        p.output_mut(1).copy_from_slice(&[1.0, 1.0, 1.0]);
        let logits = score(&p, 0, 0, &[0.0]).unwrap();
        assert_eq!(logits[1], 3.0);
    }

    #[test]
    fn swapping_output_rows_swaps_logits() {
        let p = init_params(3, 4, 2, 1).unwrap();
        let mut q = p.clone();
        let (a, b) = (q.output(0).to_vec(), q.output(2).to_vec());
        q.output_mut(0).copy_from_slice(&b);
        q.output_mut(2).copy_from_slice(&a);
        let h = vec![0.3, -0.2, 0.5];
        let lp = score(&p, 1, 0, &h).unwrap();
        let lq = score(&q, 1, 0, &h).unwrap();
        assert_eq!((lp[0], lp[2], lp[1]), (lq[2], lq[0], lq[1]));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = init_params(3, 4, 2, 1).unwrap();
        assert!(matches!(score(&p, 0, 0, &[0.0; 2]), Err(Error::Shape(_))));
    }

    #[test]
    fn uniform_logits_give_ln_of_vocabulary_size() {
        let p = zero_params(4, 1, 2);
        let batch = vec![TrainingExample {
            quad: Quadruple::new(0, 0, 3, 0),
            history: History::default(),
        }];
        let (loss, _) = loss_and_grads(&p, &batch, None).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let p = zero_params(4, 1, 2);
        assert!(loss_and_grads(&p, &[], None).is_err());
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let probs = softmax(&[1000.0, 999.0, -1000.0]);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(probs.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn penalty_grads_are_added() {
        let p = init_params(4, 5, 2, 3).unwrap();
        let batch = vec![TrainingExample {
            quad: Quadruple::new(0, 1, 3, 0),
            history: History::new(vec![2]),
        }];
        let (l0, g0) = loss_and_grads(&p, &batch, None).unwrap();
        let mut pen = Grads::zeros(p.layout());
        pen.values_mut()[7] = 2.5;
        let (l1, g1) = loss_and_grads(&p, &batch, Some(&pen)).unwrap();
        assert_eq!(l0, l1);
        assert!((g1.values()[7] - g0.values()[7] - 2.5).abs() < 1e-15);
    }
}
