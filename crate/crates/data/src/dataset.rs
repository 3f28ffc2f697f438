use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

/// Labelled samples with fixed-width features stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    class_count: usize,
    feature_dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        class_count: usize,
        feature_dim: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if feature_dim == 0 || class_count == 0 {
            return Err(DataError::Dataset("zero feature width or class count".into()));
        }
        if features.len() != labels.len() * feature_dim {
            return Err(DataError::Dataset(format!(
                "{} feature values for {} samples of width {feature_dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(DataError::Dataset(format!(
                "label {bad} >= class count {class_count}"
            )));
        }
        Ok(Self {
            name: name.into(),
            class_count,
            feature_dim,
            features,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Concatenated features and labels of `indices`, in order.
    pub fn gather(&self, indices: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let mut x = Vec::with_capacity(indices.len() * self.feature_dim);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.features(i));
            y.push(self.labels[i]);
        }
        (x, y)
    }

    /// First `n` samples (or all of them).
    pub fn truncated(mut self, n: usize) -> Self {
        if n < self.len() {
            self.labels.truncate(n);
            self.features.truncate(n * self.feature_dim);
        }
        self
    }

    /// Sample indices grouped by label, ascending within each label.
    pub fn indices_by_label(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_count];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn label_histogram(&self, indices: &[usize]) -> Vec<usize> {
        let mut h = vec![0; self.class_count];
        for &i in indices {
            h[self.labels[i]] += 1;
        }
        h
    }
}

/// Gaussian-blob classification problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub dims: usize,
    pub samples: usize,
    pub test_samples: usize,
    /// Standard deviation of the class centres; sample noise has unit variance.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            dims: 20,
            samples: 5000,
            test_samples: 1000,
            separation: 1.0,
            seed: 0,
        }
    }
}

/// Draws class centres once, then balanced train and test sets around them.
pub fn synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Dataset)> {
    if spec.classes < 2 || spec.dims == 0 || spec.samples == 0 {
        return Err(DataError::Dataset(format!(
            "synthetic spec needs >= 2 classes, dims > 0 and samples > 0: {spec:?}"
        )));
    }
    let centre = Normal::new(0.0, spec.separation)
        .map_err(|e| DataError::Dataset(format!("separation: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centres: Vec<f64> = (0..spec.classes * spec.dims)
        .map(|_| centre.sample(&mut rng))
        .collect();
    let mut draw = |n: usize, name: &str| {
        let mut labels: Vec<usize> = (0..n).map(|i| i % spec.classes).collect();
        labels.shuffle(&mut rng);
        let mut features = Vec::with_capacity(n * spec.dims);
        for &l in &labels {
            let c = &centres[l * spec.dims..(l + 1) * spec.dims];
            features.extend(c.iter().map(|m| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + z
            }));
        }
        Dataset::new(name, spec.classes, spec.dims, features, labels)
    };
    let train = draw(spec.samples, "synthetic")?;
    let test = draw(spec.test_samples.max(1), "synthetic-test")?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_labels_and_shapes() {
        assert!(Dataset::new("x", 2, 1, vec![0.0, 1.0], vec![0, 2]).is_err());
        assert!(Dataset::new("x", 2, 2, vec![0.0, 1.0], vec![0, 1]).is_err());
        assert!(Dataset::new("x", 2, 1, vec![0.0, 1.0], vec![0, 1]).is_ok());
    }

    #[test]
    fn synthetic_is_balanced_and_seeded() {
        let spec = SyntheticSpec {
            classes: 3,
            samples: 30,
            test_samples: 9,
            ..Default::default()
        };
        let (a, t) = synthetic(&spec).unwrap();
        let (b, _) = synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.label_histogram(&(0..30).collect::<Vec<_>>()), vec![10, 10, 10]);
        assert_eq!(t.len(), 9);
        let (c, _) = synthetic(&SyntheticSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gather_and_histogram() {
        let ds = Dataset::new("x", 3, 2, vec![0., 1., 2., 3., 4., 5.], vec![2, 0, 2]).unwrap();
        assert_eq!(ds.gather(&[2, 0]), (vec![4., 5., 0., 1.], vec![2, 2]));
        assert_eq!(ds.indices_by_label(), vec![vec![1], vec![], vec![0, 2]]);
        assert_eq!(ds.label_histogram(&[0, 1, 2]), vec![1, 0, 2]);
    }
}
