use serde::{Deserialize, Serialize};

/// Multinomial naive Bayes with add-one smoothing.
///
/// `P(c) = n_c / n`; `P(f | c) = (sum of f over class c + 1) / (sum of all
/// features over class c + |features|)`. Feature values are treated as
/// non-negative counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    /// `None` for classes absent from the training rows.
    pub log_prior: Vec<Option<f64>>,
    pub log_likelihood: Vec<Vec<f64>>,
}

impl NaiveBayes {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Self {
        let width = x.first().map_or(0, Vec::len);
        let mut class_rows = vec![0usize; n_classes];
        let mut totals = vec![vec![0.0; width]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            class_rows[c] += 1;
            for (t, v) in totals[c].iter_mut().zip(row) {
                *t += v.max(0.0);
            }
        }
        let n = x.len() as f64;
        let log_prior = class_rows
            .iter()
            .map(|&k| (k > 0).then(|| (k as f64 / n).ln()))
            .collect();
        let log_likelihood = totals
            .iter()
            .map(|t| {
                let denom = t.iter().sum::<f64>() + width as f64;
                t.iter().map(|v| ((v + 1.0) / denom).ln()).collect()
            })
            .collect();
        Self { log_prior, log_likelihood }
    }

    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        self.log_prior
            .iter()
            .zip(&self.log_likelihood)
            .map(|(prior, ll)| match prior {
                Some(p) => p + x.iter().zip(ll).map(|(v, l)| v.max(0.0) * l).sum::<f64>(),
                None => f64::NEG_INFINITY,
            })
            .collect()
    }

    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let joint = self.log_joint(x);
        let max = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = joint.iter().map(|j| (j - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / z).collect()
    }
}
