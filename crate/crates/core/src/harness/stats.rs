//! Binomial confidence intervals.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.low <= other.high && other.low <= self.high
    }
}

/// Wilson score interval for `successes / n`.
pub fn wilson(successes: usize, n: usize, z: f64) -> Interval {
    if n == 0 {
        return Interval { low: 0.0, high: 1.0 };
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        low: (center - half).max(0.0),
        high: (center + half).min(1.0),
    }
}

/// Newcombe's hybrid score interval for `p1 − p2` from two independent
/// binomial samples.
pub fn newcombe_difference(s1: usize, n1: usize, s2: usize, n2: usize, z: f64) -> Interval {
    let p1 = s1 as f64 / n1.max(1) as f64;
    let p2 = s2 as f64 / n2.max(1) as f64;
    let a = wilson(s1, n1, z);
    let b = wilson(s2, n2, z);
    let d = p1 - p2;
    Interval {
        low: d - ((p1 - a.low).powi(2) + (b.high - p2).powi(2)).sqrt(),
        high: d + ((a.high - p1).powi(2) + (p2 - b.low).powi(2)).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 81/263: interval (0.2553, 0.3662) from the standard worked example
        let w = wilson(81, 263, Z95);
        assert!((w.low - 0.2553).abs() < 1e-4, "{w:?}");
        assert!((w.high - 0.3662).abs() < 1e-4, "{w:?}");
        let w = wilson(0, 10, Z95);
        assert_eq!(w.low, 0.0);
    }

    #[test]
    fn newcombe_reference_values() {
        // 56/70 vs 48/80: difference 0.2, interval (0.0524, 0.3339)
        let d = newcombe_difference(56, 70, 48, 80, Z95);
        assert!((d.low - 0.0524).abs() < 1e-4, "{d:?}");
        assert!((d.high - 0.3339).abs() < 1e-4, "{d:?}");
    }
}
