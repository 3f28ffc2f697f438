use feddrl_data::Dataset;
use feddrl_nn::{cross_entropy_loss, Batch, ModelParams, Network, SgdConfig, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::aggregate::ClientReport;
use crate::error::Result;

/// Rows per forward pass when evaluating.
const EVAL_CHUNK: usize = 256;

/// Features and labels of one client's shard, gathered once.
#[derive(Clone, Debug)]
pub struct ClientData {
    pub client_id: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub feature_dim: usize,
}

impl ClientData {
    pub fn gather(client_id: usize, ds: &Dataset, indices: &[usize]) -> Self {
        let (features, labels) = ds.gather(indices);
        Self {
            client_id,
            features,
            labels,
            feature_dim: ds.feature_dim(),
        }
    }

    /// The whole dataset as one "client"; used for the test split.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let all: Vec<usize> = (0..ds.len()).collect();
        Self::gather(usize::MAX, ds, &all)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn rows(&self, start: usize, end: usize) -> Tensor {
        let d = self.feature_dim;
        Tensor::matrix(end - start, d, self.features[start * d..end * d].to_vec())
    }

    fn chunks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len())
            .step_by(EVAL_CHUNK)
            .map(|s| (s, usize::min(s + EVAL_CHUNK, self.len())))
    }
}

/// Mean cross-entropy of `net` over all samples.
pub fn inference_loss(net: &Network, data: &ClientData) -> Result<f64> {
    let mut total = 0.0;
    for (s, e) in data.chunks() {
        let logits = net.predict(&data.rows(s, e))?;
        for (i, label) in data.labels[s..e].iter().enumerate() {
            total += cross_entropy_loss(logits.row(i), *label)?;
        }
    }
    Ok(total / data.len() as f64)
}

/// Index of the largest logit; the first one on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose argmax logit equals the label.
pub fn evaluate_top1(net: &Network, data: &ClientData) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (s, e) in data.chunks() {
        let logits = net.predict(&data.rows(s, e))?;
        correct += data.labels[s..e]
            .iter()
            .enumerate()
            .filter(|(i, l)| argmax(logits.row(*i)) == **l)
            .count();
    }
    Ok(correct as f64 / data.len() as f64)
}

/// `epochs` passes of mini-batch SGD over the shard, reshuffled each epoch;
/// the last batch of an epoch may be short.
pub fn local_train<R: Rng + ?Sized>(
    net: &mut Network,
    data: &ClientData,
    sgd: &SgdConfig,
    anchor: Option<&ModelParams>,
    rng: &mut R,
) -> Result<()> {
    let d = data.feature_dim;
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..sgd.epochs {
        order.shuffle(rng);
        for idx in order.chunks(sgd.batch_size) {
            let mut x = Vec::with_capacity(idx.len() * d);
            for &i in idx {
                x.extend_from_slice(&data.features[i * d..(i + 1) * d]);
            }
            let batch = Batch {
                inputs: Tensor::matrix(idx.len(), d, x),
                labels: idx.iter().map(|&i| data.labels[i]).collect(),
            };
            net.sgd_step(&batch, sgd, anchor)?;
        }
    }
    Ok(())
}

/// One client's round: evaluate the received model, train locally, evaluate
/// again, report.
pub fn client_update<R: Rng + ?Sized>(
    template: &Network,
    global: &ModelParams,
    data: &ClientData,
    sgd: &SgdConfig,
    rng: &mut R,
) -> Result<ClientReport> {
    let mut net = template.clone();
    net.set_params(global)?;
    let loss_before = inference_loss(&net, data)?;
    let anchor = (sgd.proximal_mu > 0.0).then_some(global);
    local_train(&mut net, data, sgd, anchor, rng)?;
    let loss_after = inference_loss(&net, data)?;
    Ok(ClientReport {
        client_id: data.client_id,
        loss_before,
        loss_after,
        num_samples: data.len(),
        params: net.export_params(),
    })
}
