//! Population statistics over plain slices.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divides by n).
pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

pub fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Counts strict interior local maxima that also exceed `mean + std` of the
/// whole series. Series shorter than three values have no peaks.
pub fn count_peaks(series: &[f64]) -> usize {
    if series.len() < 3 {
        return 0;
    }
    let threshold = mean(series) + std_dev(series);
    series
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] > threshold)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaks_use_mean_plus_std_threshold() {
        // mean 2.2, std 1.6: only the 5 clears 3.8
        assert_eq!(count_peaks(&[1.0, 3.0, 1.0, 5.0, 1.0]), 1);
        assert_eq!(count_peaks(&[4.0; 4]), 0);
        assert_eq!(count_peaks(&[1.0, 9.0]), 0);
        assert_eq!(count_peaks(&[]), 0);
    }

    #[test]
    fn peaks_match_brute_force() {
        // independent scan written against the rule as stated
        fn oracle(s: &[f64]) -> usize {
            let n = s.len();
            if n < 3 {
                return 0;
            }
            let m = s.iter().sum::<f64>() / n as f64;
            let sd = (s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            (1..n - 1)
                .filter(|&i| s[i] > s[i - 1] && s[i] > s[i + 1] && s[i] > m + sd)
                .count()
        }
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for len in 0..40 {
            let series: Vec<f64> = (0..len)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state % 10) as f64
                })
                .collect();
            assert_eq!(count_peaks(&series), oracle(&series));
        }
    }

    #[test]
    fn population_convention() {
        assert_eq!(std_dev(&[100.0, 300.0]), 100.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 2.0 / 3.0);
        assert_eq!(std_dev(&[0.5]), 0.0);
    }
}
