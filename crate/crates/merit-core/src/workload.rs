//! Analytic models behind the bundled desk-scale synthetic workloads: the
//! serial/parallel sleeper, the triad memory kernel, and the bisection
//! pairing. The runnable entry points (sleeping, timing, sockets) live in
//! the companion crate; everything here is pure and reused verbatim by the
//! simulated backend.

use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::util::mix_seed;

pub const DEFAULT_MESSAGE_BYTES: u64 = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("process count must be even and positive, got {0}")]
    OddProcessCount(u64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("noise fraction must lie in [0, 1), got {0}")]
    BadNoise(f64),
}

/// Runtime model `t(N) = t_s + t_p / N`, optionally perturbed by seeded
/// multiplicative noise uniform in `[-noise_fraction, +noise_fraction]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmdahlConfig {
    pub serial_seconds: f64,
    pub parallel_seconds: f64,
    pub noise_fraction: f64,
    pub seed: u64,
}

impl AmdahlConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.serial_seconds < 0.0 {
            return Err(WorkloadError::NonPositive("serial_seconds"));
        }
        if self.parallel_seconds < 0.0 {
            return Err(WorkloadError::NonPositive("parallel_seconds"));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(WorkloadError::BadNoise(self.noise_fraction));
        }
        Ok(())
    }

    /// Modeled runtime at a node count. Deterministic: the noise stream is
    /// derived from (seed, nodes), so each node count gets an independent
    /// but reproducible draw.
    pub fn model_time(&self, nodes: u64) -> f64 {
        let ideal = self.serial_seconds + self.parallel_seconds / nodes as f64;
        ideal * (1.0 + self.noise(nodes))
    }

    fn noise(&self, nodes: u64) -> f64 {
        if self.noise_fraction == 0.0 {
            return 0.0;
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(self.seed, nodes));
        let unit = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (2.0 * unit - 1.0) * self.noise_fraction
    }
}

/// Memory-bandwidth triad kernel configuration. Array length is documented
/// guidance, not enforced: for measurement the three arrays should exceed
/// the last-level cache.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriadConfig {
    pub array_length: u64,
    pub repetitions: u64,
}

impl TriadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.array_length == 0 {
            return Err(WorkloadError::NonPositive("array_length"));
        }
        if self.repetitions == 0 {
            return Err(WorkloadError::NonPositive("repetitions"));
        }
        Ok(())
    }

    /// Bytes moved by the kernel: three arrays of f64 per pass.
    pub fn bytes_moved(&self) -> f64 {
        3.0 * 8.0 * self.array_length as f64 * self.repetitions as f64
    }
}

/// Fills the triad inputs with the closed-form pattern `b[i] = i`,
/// `c[i] = 1`, so the result is verifiable analytically.
pub fn triad_fill(length: usize) -> (Vec<f64>, Vec<f64>) {
    let b: Vec<f64> = (0..length).map(|i| i as f64).collect();
    let c = alloc::vec![1.0f64; length];
    (b, c)
}

/// One triad pass: `a[i] = b[i] + scalar * c[i]`.
pub fn triad_kernel(a: &mut [f64], b: &[f64], c: &[f64], scalar: f64) {
    for ((a, b), c) in a.iter_mut().zip(b).zip(c) {
        *a = b + scalar * c;
    }
}

/// Checks the result array against the closed form of [`triad_fill`].
pub fn triad_verify(a: &[f64], scalar: f64) -> bool {
    a.iter().enumerate().all(|(i, &v)| v == i as f64 + scalar)
}

/// Bisection ping-pong configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    pub process_count: u64,
    pub message_bytes: u64,
    pub repetitions: u64,
    pub bidirectional: bool,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            process_count: 2,
            message_bytes: DEFAULT_MESSAGE_BYTES,
            repetitions: 4,
            bidirectional: true,
        }
    }
}

impl BisectionConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        pair_bisection(self.process_count)?;
        if self.message_bytes == 0 {
            return Err(WorkloadError::NonPositive("message_bytes"));
        }
        if self.repetitions == 0 {
            return Err(WorkloadError::NonPositive("repetitions"));
        }
        Ok(())
    }

    /// Bytes moved per pair: each repetition carries one message in each
    /// direction, whether bounced serially or exchanged simultaneously.
    pub fn bytes_per_pair(&self) -> f64 {
        2.0 * self.message_bytes as f64 * self.repetitions as f64
    }
}

/// Splits processes into two equal halves and pairs them across the cut:
/// `(i, i + P/2)` for `i` in the lower half. Every process lands in exactly
/// one pair.
pub fn pair_bisection(process_count: u64) -> Result<Vec<(u64, u64)>, WorkloadError> {
    if process_count == 0 || !process_count.is_multiple_of(2) {
        return Err(WorkloadError::OddProcessCount(process_count));
    }
    let half = process_count / 2;
    Ok((0..half).map(|i| (i, i + half)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn amdahl_model_values() {
        let config = AmdahlConfig {
            serial_seconds: 1.0,
            parallel_seconds: 8.0,
            noise_fraction: 0.0,
            seed: 0,
        };
        assert_eq!(config.model_time(4), 3.0);
        assert_eq!(config.model_time(1), 9.0);
    }

    #[test]
    fn amdahl_noise_is_bounded_and_reproducible() {
        let config = AmdahlConfig {
            serial_seconds: 10.0,
            parallel_seconds: 80.0,
            noise_fraction: 0.1,
            seed: 7,
        };
        for nodes in [1u64, 2, 4, 8, 640] {
            let ideal = 10.0 + 80.0 / nodes as f64;
            let t = config.model_time(nodes);
            assert!((t / ideal - 1.0).abs() <= 0.1 + 1e-12);
            assert_eq!(t, config.model_time(nodes));
        }
        let reseeded = AmdahlConfig { seed: 8, ..config };
        assert_ne!(config.model_time(4), reseeded.model_time(4));
    }

    #[test]
    fn amdahl_validation() {
        let bad = AmdahlConfig {
            serial_seconds: 1.0,
            parallel_seconds: 1.0,
            noise_fraction: 1.0,
            seed: 0,
        };
        assert_eq!(bad.validate().unwrap_err(), WorkloadError::BadNoise(1.0));
    }

    #[test]
    fn pairing_small_cases() {
        assert_eq!(pair_bisection(4).unwrap(), vec![(0, 2), (1, 3)]);
        assert_eq!(pair_bisection(2).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn pairing_rejects_odd_and_zero() {
        assert!(pair_bisection(3).is_err());
        assert!(pair_bisection(0).is_err());
    }

    #[test]
    fn pairing_is_a_perfect_matching_across_halves() {
        for p in (2..=64u64).step_by(2) {
            let pairs = pair_bisection(p).unwrap();
            assert_eq!(pairs.len() as u64, p / 2);
            let mut seen = alloc::collections::BTreeSet::new();
            for (a, b) in &pairs {
                assert!(*a < p / 2 && *b >= p / 2, "pair ({a},{b}) does not cross the cut");
                assert!(seen.insert(*a) && seen.insert(*b), "process reused");
            }
            assert_eq!(seen.len() as u64, p);
        }
    }

    #[test]
    fn triad_closed_form() {
        let (b, c) = triad_fill(8);
        let mut a = vec![0.0; 8];
        triad_kernel(&mut a, &b, &c, 2.0);
        assert_eq!(a, vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert!(triad_verify(&a, 2.0));
        a[3] = 0.0;
        assert!(!triad_verify(&a, 2.0));
    }

    #[test]
    fn triad_config_validation_and_bytes() {
        let config = TriadConfig {
            array_length: 2_000_000,
            repetitions: 5,
        };
        config.validate().unwrap();
        assert_eq!(config.bytes_moved(), 240_000_000.0);
        assert!(TriadConfig {
            array_length: 8,
            repetitions: 0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn bisection_bytes_per_pair() {
        let config = BisectionConfig {
            process_count: 4,
            message_bytes: 1024,
            repetitions: 8,
            bidirectional: true,
        };
        assert_eq!(config.bytes_per_pair(), 16384.0);
    }
}
