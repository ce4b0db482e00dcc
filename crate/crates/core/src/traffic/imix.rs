use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LoftError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImixEntry {
    pub size: u32,
    pub weight: u32,
}

/// Discrete packet-size mix, drawn by weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Imix {
    entries: Vec<ImixEntry>,
    total_weight: u32,
}

impl Default for Imix {
    /// The common 7:4:1 mix over 64, 594 and 1518 bytes.
    fn default() -> Self {
        Imix::new(vec![
            ImixEntry {
                size: 64,
                weight: 7,
            },
            ImixEntry {
                size: 594,
                weight: 4,
            },
            ImixEntry {
                size: 1518,
                weight: 1,
            },
        ])
        .expect("valid default mix")
    }
}

impl Imix {
    pub fn new(entries: Vec<ImixEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(LoftError::Config("empty packet-size mix".into()));
        }
        if entries.iter().any(|e| e.size == 0 || e.size > 65_535) {
            return Err(LoftError::Config(
                "packet sizes must lie in 1..=65535".into(),
            ));
        }
        let total_weight = entries
            .iter()
            .try_fold(0u32, |acc, e| acc.checked_add(e.weight))
            .filter(|&w| w > 0)
            .ok_or_else(|| LoftError::Config("mix weights must sum to a positive u32".into()))?;
        Ok(Imix {
            entries,
            total_weight,
        })
    }

    pub fn entries(&self) -> &[ImixEntry] {
        &self.entries
    }

    pub fn mean(&self) -> f64 {
        let s: f64 = self
            .entries
            .iter()
            .map(|e| f64::from(e.size) * f64::from(e.weight))
            .sum();
        s / f64::from(self.total_weight)
    }

    pub fn max_size(&self) -> u32 {
        self.entries
            .iter()
            .filter(|e| e.weight > 0)
            .map(|e| e.size)
            .max()
            .unwrap_or(0)
    }

    /// Size for a weight position `r` in `0..total_weight`.
    pub fn size_at(&self, mut r: u32) -> u32 {
        for e in &self.entries {
            if r < e.weight {
                return e.size;
            }
            r -= e.weight;
        }
        unreachable!("weight position beyond total")
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.size_at(rng.gen_range(0..self.total_weight))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn first_category_is_smallest() {
        assert_eq!(Imix::default().size_at(0), 64);
        assert_eq!(Imix::default().size_at(6), 64);
        assert_eq!(Imix::default().size_at(7), 594);
        assert_eq!(Imix::default().size_at(11), 1518);
    }

    #[test]
    fn default_mean() {
        let m = Imix::default().mean();
        assert!((m - 4342.0 / 12.0).abs() < 1e-12);
        assert!((m - 361.8).abs() < 0.05);
    }

    #[test]
    fn empirical_mean_matches() {
        let mix = Imix::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| u64::from(mix.draw(&mut rng))).sum();
        let m = sum as f64 / n as f64;
        assert!((m / mix.mean() - 1.0).abs() < 0.01, "{m}");
    }

    #[test]
    fn rejects_bad_mix() {
        assert!(Imix::new(vec![]).is_err());
        assert!(Imix::new(vec![ImixEntry {
            size: 64,
            weight: 0
        }])
        .is_err());
        assert!(Imix::new(vec![ImixEntry { size: 0, weight: 1 }]).is_err());
    }
}
