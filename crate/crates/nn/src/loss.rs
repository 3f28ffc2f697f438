use crate::error::{NnError, Result};
use crate::tensor::Tensor;

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `-log softmax(logits)[label]`.
pub fn cross_entropy_loss(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(NnError::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let loss = log_sum_exp(logits) - logits[label];
    if !loss.is_finite() {
        return Err(NnError::NonFinite("cross-entropy loss"));
    }
    Ok(loss)
}

/// Mean cross-entropy over a `[batch, classes]` logit matrix, together with the
/// gradient of that mean with respect to the logits.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (batch, classes) = logits.batch_dims()?;
    if batch != labels.len() {
        return Err(crate::error::shape_err(
            format!("{batch} labels"),
            labels.len(),
        ));
    }
    if batch == 0 {
        return Err(NnError::EmptyBatch);
    }
    let scale = 1.0 / batch as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(batch * classes);
    for (b, &label) in labels.iter().enumerate() {
        let row = &logits.data()[b * classes..(b + 1) * classes];
        total += cross_entropy_loss(row, label)?;
        let probs = softmax(row);
        grad.extend(
            probs
                .iter()
                .enumerate()
                .map(|(c, &p)| (p - if c == label { 1.0 } else { 0.0 }) * scale),
        );
    }
    Ok((total * scale, Tensor::new(logits.shape().to_vec(), grad)?))
}
