/// Averages a timestamped attribute stream over utterance spans.
///
/// For each `[start, end)` span, returns the arithmetic mean of the samples
/// whose timestamp lies in the span, or `None` when no sample does.
pub fn average_over_spans(
    timestamps: &[f64],
    samples: &[Vec<f64>],
    spans: &[(f64, f64)],
) -> Vec<Option<Vec<f64>>> {
    spans
        .iter()
        .map(|&(start, end)| {
            let mut sum: Option<Vec<f64>> = None;
            let mut n = 0usize;
            for (t, s) in timestamps.iter().zip(samples) {
                if *t >= start && *t < end {
                    let acc = sum.get_or_insert_with(|| vec![0.0; s.len()]);
                    for (a, v) in acc.iter_mut().zip(s) {
                        *a += v;
                    }
                    n += 1;
                }
            }
            sum.map(|s| s.into_iter().map(|v| v / n as f64).collect())
        })
        .collect()
}
