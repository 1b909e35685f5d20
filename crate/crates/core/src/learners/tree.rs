use serde::{Deserialize, Serialize};

use super::infogain::entropy;

/// Binary information-gain tree over numeric features.
///
/// Splits test `x[feature] <= threshold`, thresholds sitting at midpoints
/// between sorted distinct values. Equal gains prefer the lower column index
/// (columns are in lexicographic feature-name order), then the lower
/// threshold. Impure nodes split even at zero gain so that interactions
/// such as XOR remain learnable within `max_depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub root: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

const GAIN_EPS: f64 = 1e-12;

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl DecisionTree {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, max_depth: usize, min_leaf: usize) -> Self {
        let rows: Vec<usize> = (0..x.len()).collect();
        let root = grow(x, y, n_classes, &rows, 0, max_depth, min_leaf);
        Self { max_depth, min_leaf, root }
    }

    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { counts } => {
                    let total: usize = counts.iter().sum();
                    return counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect();
                }
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }
}

fn class_counts(y: &[usize], rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &r in rows {
        counts[y[r]] += 1;
    }
    counts
}

fn as_f64(counts: &[usize]) -> Vec<f64> {
    counts.iter().map(|&c| c as f64).collect()
}

fn grow(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
) -> TreeNode {
    let counts = class_counts(y, rows, n_classes);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= max_depth || rows.len() < 2 * min_leaf {
        return TreeNode::Leaf { counts };
    }
    let Some(best) = best_split(x, y, n_classes, rows, &counts, min_leaf) else {
        return TreeNode::Leaf { counts };
    };
    let (left, right): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| x[r][best.feature] <= best.threshold);
    TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        gain: best.gain,
        left: Box::new(grow(x, y, n_classes, &left, depth + 1, max_depth, min_leaf)),
        right: Box::new(grow(x, y, n_classes, &right, depth + 1, max_depth, min_leaf)),
    }
}

fn best_split(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    parent: &[usize],
    min_leaf: usize,
) -> Option<Candidate> {
    let n = rows.len() as f64;
    let parent_h = entropy(&as_f64(parent));
    let width = x[rows[0]].len();
    let mut best: Option<Candidate> = None;
    let mut values: Vec<(f64, usize)> = Vec::with_capacity(rows.len());

    for feature in 0..width {
        values.clear();
        values.extend(rows.iter().map(|&r| (x[r][feature], y[r])));
        let first = values[0].0;
        if values.iter().all(|v| v.0 == first) {
            continue;
        }
        values.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = vec![0usize; n_classes];
        for i in 0..values.len() - 1 {
            left[values[i].1] += 1;
            if values[i].0 == values[i + 1].0 {
                continue;
            }
            let n_left = i + 1;
            let n_right = values.len() - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| (p - l) as f64).collect();
            let h = (n_left as f64 / n) * entropy(&as_f64(&left)) + (n_right as f64 / n) * entropy(&right);
            let gain = (parent_h - h).max(0.0);
            if best.as_ref().is_none_or(|b| gain > b.gain + GAIN_EPS) {
                best = Some(Candidate {
                    feature,
                    threshold: (values[i].0 + values[i + 1].0) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::testutil::dense_dataset;
    use super::super::{LearnerSpec, Learned};

    fn tree(spec: &LearnerSpec, data: &super::super::Dataset) -> super::DecisionTree {
        match spec.fit(data, 0).unwrap().learned {
            Learned::DecisionTree(t) => t,
            _ => unreachable!(),
        }
    }

    #[test]
    fn separable_single_feature_is_depth_one() {
        let data = dense_dataset(
            &[(&[1.0], "a"), (&[2.0], "a"), (&[7.0], "b"), (&[9.0], "b")],
            &["a", "b"],
        );
        let spec = LearnerSpec::DecisionTree { max_depth: 20, min_leaf: 1 };
        let t = tree(&spec, &data);
        assert_eq!(t.depth(), 1);
        match &t.root {
            super::TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 4.5),
            _ => panic!("expected split"),
        }
        let model = spec.fit(&data, 0).unwrap();
        assert!(data.rows().iter().all(|r| model.predict(&r.x) == r.y));
    }

    #[test]
    fn single_class_is_single_leaf() {
        let data = dense_dataset(&[(&[1.0], "b"), (&[5.0], "b")], &["a", "b"]);
        let t = tree(&LearnerSpec::decision_tree(), &data);
        assert_eq!(t.root, super::TreeNode::Leaf { counts: vec![0, 2] });
    }

    #[test]
    fn xor_learned_at_depth_two() {
        // Truth table of XOR over two binary features.
        let data = dense_dataset(
            &[(&[0.0, 0.0], "no"), (&[0.0, 1.0], "yes"), (&[1.0, 0.0], "yes"), (&[1.0, 1.0], "no")],
            &["no", "yes"],
        );
        let spec = LearnerSpec::DecisionTree { max_depth: 2, min_leaf: 1 };
        let model = spec.fit(&data, 0).unwrap();
        assert!(data.rows().iter().all(|r| model.predict(&r.x) == r.y));
        // Zero-gain root: the lexicographically first feature wins.
        match &tree(&spec, &data).root {
            super::TreeNode::Split { feature, gain, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*gain, 0.0);
            }
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn min_leaf_and_depth_limits() {
        let data = dense_dataset(
            &[(&[0.0, 0.0], "no"), (&[0.0, 1.0], "yes"), (&[1.0, 0.0], "yes"), (&[1.0, 1.0], "no")],
            &["no", "yes"],
        );
        let shallow = tree(&LearnerSpec::DecisionTree { max_depth: 1, min_leaf: 1 }, &data);
        assert_eq!(shallow.depth(), 1);
        let wide_leaves = tree(&LearnerSpec::DecisionTree { max_depth: 5, min_leaf: 3 }, &data);
        assert_eq!(wide_leaves.depth(), 0);
    }

    #[test]
    fn leaf_fraction_is_score() {
        let data = dense_dataset(&[(&[0.0], "a"), (&[0.0], "a"), (&[0.0], "b")], &["a", "b"]);
        let model = LearnerSpec::decision_tree().fit(&data, 0).unwrap();
        let p = model.proba(&data.rows()[0].x);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
    }
}
