use serde::{Deserialize, Serialize};

use super::{fit_learned, LearnError, Learned, LearnerSpec};
use crate::rng::SplitMix64;

/// How bagging draws each estimator's training sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bootstrap {
    /// `n` draws with replacement from the seeded stream.
    #[default]
    Sampled,
    /// Every estimator sees the rows as given. Test hook.
    Identity,
}

/// Bootstrap-aggregated ensemble with majority voting.
///
/// One [`SplitMix64`] stream seeded with the bagging seed drives everything:
/// for each estimator in turn it yields `n` row indices (`below(n)` each),
/// then one more value that seeds the estimator itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bagging {
    pub n_classes: usize,
    pub estimators: Vec<Learned>,
}

impl Bagging {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        n_estimators: usize,
        base: &LearnerSpec,
        seed: u64,
        bootstrap: Bootstrap,
    ) -> Result<Self, LearnError> {
        let n = x.len();
        let mut rng = SplitMix64::new(seed);
        let mut estimators = Vec::with_capacity(n_estimators);
        for _ in 0..n_estimators {
            let sample: Vec<usize> = match bootstrap {
                Bootstrap::Sampled => (0..n).map(|_| rng.below(n)).collect(),
                Bootstrap::Identity => (0..n).collect(),
            };
            let est_seed = rng.next_u64();
            let xs: Vec<Vec<f64>> = sample.iter().map(|&i| x[i].clone()).collect();
            let ys: Vec<usize> = sample.iter().map(|&i| y[i]).collect();
            estimators.push(fit_learned(base, &xs, &ys, n_classes, est_seed, Bootstrap::Sampled)?);
        }
        Ok(Self { n_classes, estimators })
    }

    pub fn from_estimators(estimators: Vec<Learned>, n_classes: usize) -> Self {
        Self { n_classes, estimators }
    }

    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.n_classes];
        for e in &self.estimators {
            votes[e.predict(x)] += 1;
        }
        votes
    }

    /// Vote fractions. The argmax (first maximum) is the majority vote with
    /// ties going to the earlier label.
    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let total = self.estimators.len().max(1) as f64;
        self.votes(x).into_iter().map(|v| v as f64 / total).collect()
    }
}
