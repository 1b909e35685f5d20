use super::{Dataset, LearnError};

/// Shannon entropy in bits of a class-count histogram.
pub fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Rank features by `H(class) - H(class | feature)`, descending, ties by name.
///
/// Features whose values are all 0/1 are used as-is; any other feature is
/// binarized as `value > median`.
pub fn information_gain_ranking(data: &Dataset) -> Result<Vec<(String, f64)>, LearnError> {
    if data.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let n_classes = data.label_set().len();
    let x = data.dense();
    let y = data.labels();
    let class_h = entropy(&data.class_counts().iter().map(|&c| c as f64).collect::<Vec<_>>());
    let n = x.len() as f64;

    let mut ranking: Vec<(String, f64)> = data
        .features()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let column: Vec<f64> = x.iter().map(|row| row[j]).collect();
            let binary = column.iter().all(|&v| v == 0.0 || v == 1.0);
            let cut = if binary { 0.5 } else { median(&column) };
            let mut split = [vec![0.0; n_classes], vec![0.0; n_classes]];
            for (v, &c) in column.iter().zip(&y) {
                split[usize::from(*v > cut)][c] += 1.0;
            }
            let conditional: f64 = split
                .iter()
                .map(|counts| counts.iter().sum::<f64>() / n * entropy(counts))
                .sum();
            (name.clone(), (class_h - conditional).clamp(0.0, class_h))
        })
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranking)
}
