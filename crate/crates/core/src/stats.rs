//! Small summary-statistics helpers for replication ensembles.

/// Nearest-rank percentile of an ascending-sorted slice, `q` in (0, 100].
pub fn nearest_rank<T: Copy>(sorted: &[T], q: f64) -> T {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    let n = sorted.len();
    let rank = ((q / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (zero for a single sample).
///
/// Deviations are taken from the first sample, so a constant series gives
/// exactly zero.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let shift = xs[0];
    let n = xs.len() as f64;
    let (s1, s2) = xs.iter().fold((0.0, 0.0), |(s1, s2), x| {
        let d = x - shift;
        (s1 + d, s2 + d * d)
    });
    let m = s1 / n;
    (s2 / n - m * m).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_examples() {
        let xs: Vec<u32> = (1..=100).collect();
        assert_eq!(nearest_rank(&xs, 5.0), 5);
        assert_eq!(nearest_rank(&xs, 50.0), 50);
        assert_eq!(nearest_rank(&xs, 95.0), 95);
        assert_eq!(nearest_rank(&[7u32], 5.0), 7);
        assert_eq!(nearest_rank(&[1, 2, 3, 4], 50.0), 2);
        assert_eq!(nearest_rank(&[1, 2, 3, 4], 0.0), 1);
    }

    #[test]
    fn moments() {
        assert_eq!(std_dev(&[3.0]), 0.0);
        assert_eq!(std_dev(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_dev(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(std_dev(&[0.1 + 0.2; 7]), 0.0);
    }
}
