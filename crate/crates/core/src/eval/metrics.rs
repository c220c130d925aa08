use crate::ids::UnitIdx;

/// Precision and recall of the top-`n` of `recommended` against the hidden
/// selections of one user.
///
/// `hidden` holds the unit of every hidden selection (`None` when it maps to
/// no unit, which is always a miss). Each hidden selection counts once; one
/// recommended unit may match several of them. Returns `None` when nothing
/// was hidden, since recall is undefined.
pub fn precision_recall_at_n(recommended: &[UnitIdx], hidden: &[Option<UnitIdx>], n: usize) -> Option<(f64, f64)> {
    if hidden.is_empty() || n == 0 {
        return None;
    }
    let top = &recommended[..recommended.len().min(n)];
    let hits = hidden
        .iter()
        .filter(|h| h.is_some_and(|u| top.contains(&u)))
        .count();
    // with cluster units several hidden photos can share one recommended
    // cluster, so hits may exceed n
    let precision = hits.min(n) as f64 / n as f64;
    let recall = hits as f64 / hidden.len() as f64;
    Some((precision, recall))
}

/// Arithmetic mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
