/// A forecast origin (0-based index of the last observation used) and the
/// number of horizons whose targets fall inside the test set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub index: usize,
    pub usable: usize,
}

/// Origins `train_len - 1, train_len - 1 + step, ...` while at least one
/// target remains before the end of the series.
pub fn rolling_origins(train_len: usize, test_len: usize, horizon: usize, step: usize) -> Vec<Origin> {
    if train_len == 0 || test_len == 0 || horizon == 0 || step == 0 {
        return Vec::new();
    }
    let last = train_len + test_len - 1;
    (train_len - 1..last)
        .step_by(step)
        .map(|index| Origin {
            index,
            usable: horizon.min(last - index),
        })
        .collect()
}

/// Number of forecasts contributing at each horizon `1..=horizon`.
pub fn horizon_counts(origins: &[Origin], horizon: usize) -> Vec<usize> {
    (1..=horizon)
        .map(|h| origins.iter().filter(|o| o.usable >= h).count())
        .collect()
}
