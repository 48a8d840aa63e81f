//! Small deterministic random-number utilities.
//!
//! Everything seed-driven in the workbench (rough initial data, network
//! initialisation, test fixtures) flows through these generators so that a
//! fixed seed reproduces output byte for byte, independent of library
//! versions. Per-wavenumber draws are counter-based: each (seed, key) pair
//! owns its own stream.

/// SplitMix64 sequential generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Generator keyed by (seed, key): statistically independent streams
    /// for distinct keys under a fixed seed.
    pub fn keyed(seed: u64, key: u64) -> Self {
        let mut g = Self::new(seed ^ key.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        // burn-in decorrelates nearby keys
        g.next_u64();
        g.next_u64();
        g
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `(0, 1]` (never exactly zero, so `ln` is safe).
    pub fn next_unit(&mut self) -> f64 {
        let bits = self.next_u64() >> 11; // 53 significant bits
        (bits as f64 + 1.0) / 9_007_199_254_740_992.0
    }

    /// Uniform in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (self.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0
    }

    /// Standard real Gaussian via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u = self.next_unit();
        let v = self.next_unit();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    /// Standard complex Gaussian: `E|ξ|² = 1`.
    pub fn next_complex_gaussian(&mut self) -> (f64, f64) {
        let u = self.next_unit();
        let v = self.next_unit();
        let r = (-u.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * v;
        (r * th.cos(), r * th.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a: Vec<u64> = {
            let mut g = SplitMix64::new(123);
            (0..8).map(|_| g.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut g = SplitMix64::new(123);
            (0..8).map(|_| g.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn keyed_streams_differ() {
        let mut a = SplitMix64::keyed(1, 10);
        let mut b = SplitMix64::keyed(1, 11);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn gaussian_moments() {
        let mut g = SplitMix64::new(7);
        let n = 200_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let x = g.next_gaussian();
            m1 += x;
            m2 += x * x;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!(m1.abs() < 0.01, "mean {m1}");
        assert!((m2 - 1.0).abs() < 0.02, "var {m2}");
    }

    #[test]
    fn complex_gaussian_unit_variance() {
        let mut g = SplitMix64::new(9);
        let n = 200_000;
        let mut e2 = 0.0;
        for _ in 0..n {
            let (re, im) = g.next_complex_gaussian();
            e2 += re * re + im * im;
        }
        e2 /= n as f64;
        assert!((e2 - 1.0).abs() < 0.02, "E|ξ|² = {e2}");
    }
}
