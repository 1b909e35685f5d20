use serde::{Deserialize, Serialize};

use super::LearnError;

/// Lazy k-nearest-neighbour classifier under Euclidean distance.
///
/// Equal distances prefer the lower training row index. Equal votes prefer
/// the label with more training rows, then the lower label index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNearest {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_rows: Vec<usize>,
}

impl KNearest {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, k: usize) -> Result<Self, LearnError> {
        if k == 0 || k > x.len() {
            return Err(LearnError::KTooLarge { k, rows: x.len() });
        }
        let mut class_rows = vec![0; n_classes];
        for &c in y {
            class_rows[c] += 1;
        }
        Ok(Self { k, rows: x.to_vec(), labels: y.to_vec(), class_rows })
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let mut by_distance: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (squared_distance(r, x), i))
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        by_distance.truncate(self.k);
        by_distance.into_iter().map(|(_, i)| i).collect()
    }

    fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.class_rows.len()];
        for i in self.neighbours(x) {
            votes[self.labels[i]] += 1;
        }
        votes
    }

    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        self.votes(x).into_iter().map(|v| v as f64 / self.k as f64).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let votes = self.votes(x);
        (0..votes.len())
            .max_by(|&a, &b| {
                votes[a]
                    .cmp(&votes[b])
                    .then(self.class_rows[a].cmp(&self.class_rows[b]))
                    .then(b.cmp(&a))
            })
            .unwrap_or(0)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
