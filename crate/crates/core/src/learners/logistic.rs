use serde::{Deserialize, Serialize};

/// L2-regularized logistic regression trained by full-batch gradient descent.
///
/// Columns are scaled by their training max-abs value. Each binary unit
/// minimizes `mean(log(1 + e^z) - t z) + l2/2 |w|^2` (bias unregularized)
/// from zero weights for a fixed number of epochs. The L2 term is applied
/// as a proximal step, `w <- (w - lr g) / (1 + lr l2)`, which has the same
/// fixed point and stays stable for large penalties.
///
/// Two classes use a single unit scoring the second label; more classes use
/// one-vs-rest units with normalized scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub scale: Vec<f64>,
    pub units: Vec<LogitUnit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitUnit {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Regularized binary log-loss and its gradient `(loss, dw, db)` for targets in {0, 1}.
pub fn logistic_loss_and_gradient(
    x: &[Vec<f64>],
    t: &[f64],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &target) in x.iter().zip(t) {
        let z = dot(weights, row) + bias;
        loss += softplus(z) - target * z;
        let r = sigmoid(z) - target;
        for (g, v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * dot(weights, weights);
    (loss, grad, grad_b)
}

impl LogitUnit {
    /// Train one unit, returning it with the loss before each epoch.
    pub fn train(x: &[Vec<f64>], t: &[f64], l2: f64, lr: f64, epochs: usize) -> (Self, Vec<f64>) {
        let width = x.first().map_or(0, Vec::len);
        let mut unit = LogitUnit { weights: vec![0.0; width], bias: 0.0 };
        let mut history = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            // Data-term gradient only; the penalty is handled by the proximal step.
            let (loss, grad, grad_b) = logistic_loss_and_gradient(x, t, &unit.weights, unit.bias, 0.0);
            history.push(loss + 0.5 * l2 * dot(&unit.weights, &unit.weights));
            for (w, g) in unit.weights.iter_mut().zip(&grad) {
                *w = (*w - lr * g) / (1.0 + lr * l2);
            }
            unit.bias -= lr * grad_b;
        }
        (unit, history)
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }
}

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, l2: f64, lr: f64, epochs: usize) -> Self {
        let width = x.first().map_or(0, Vec::len);
        let mut scale = vec![1.0; width];
        for (j, s) in scale.iter_mut().enumerate() {
            let max = x.iter().map(|r| r[j].abs()).fold(0.0, f64::max);
            if max > 0.0 {
                *s = max;
            }
        }
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| apply_scale(r, &scale)).collect();
        let positives: Vec<usize> = if n_classes == 2 { vec![1] } else { (0..n_classes).collect() };
        let units = positives
            .into_iter()
            .map(|class| {
                let t: Vec<f64> = y.iter().map(|&c| f64::from(u8::from(c == class))).collect();
                LogitUnit::train(&scaled, &t, l2, lr, epochs).0
            })
            .collect();
        Self { l2, lr, epochs, scale, units }
    }

    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let scaled = apply_scale(x, &self.scale);
        if self.units.len() == 1 {
            let p = self.units[0].score(&scaled);
            return vec![1.0 - p, p];
        }
        let scores: Vec<f64> = self.units.iter().map(|u| u.score(&scaled)).collect();
        let z: f64 = scores.iter().sum();
        if z <= 0.0 {
            return vec![1.0 / scores.len() as f64; scores.len()];
        }
        scores.into_iter().map(|s| s / z).collect()
    }
}

fn apply_scale(x: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter().zip(scale).map(|(v, s)| v / s).collect()
}
