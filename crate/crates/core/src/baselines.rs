//! Reference mechanisms used for error comparisons: k-ary randomized
//! response and subset selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pg::{CountVector, EstimateVector, EXACT_MODE_LIMIT};

/// k-ary randomized response parameters.
#[derive(Debug, Clone)]
pub struct RrParams {
    epsilon: f64,
    num_values: u64,
    p_true: f64,
    p_other: f64,
}

impl RrParams {
    pub fn new(epsilon: f64, num_values: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if num_values < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 values, got {num_values}"
            )));
        }
        let e = epsilon.exp();
        let denom = e + num_values as f64 - 1.0;
        Ok(RrParams {
            epsilon,
            num_values,
            p_true: e / denom,
            p_other: 1.0 / denom,
        })
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn num_values(&self) -> u64 {
        self.num_values
    }

    /// Probability of reporting the held value.
    #[inline]
    pub fn p_true(&self) -> f64 {
        self.p_true
    }

    /// Probability of reporting any particular other value.
    #[inline]
    pub fn p_other(&self) -> f64 {
        self.p_other
    }

    pub fn encode<R: Rng + ?Sized>(&self, value: u64, rng: &mut R) -> Result<u64> {
        if value >= self.num_values {
            return Err(Error::InputOutOfRange {
                value,
                k: self.num_values,
            });
        }
        if rng.random::<f64>() < self.p_true {
            Ok(value)
        } else {
            let mut other = rng.random_range(0..self.num_values - 1);
            if other >= value {
                other += 1;
            }
            Ok(other)
        }
    }

    pub fn message_distribution(&self, value: u64) -> Result<Vec<f64>> {
        if self.num_values > EXACT_MODE_LIMIT {
            return Err(Error::TooLargeForExactMode(self.num_values));
        }
        if value >= self.num_values {
            return Err(Error::InputOutOfRange {
                value,
                k: self.num_values,
            });
        }
        let mut dist = vec![self.p_other; self.num_values as usize];
        dist[value as usize] = self.p_true;
        Ok(dist)
    }

    /// Unbiased estimates: `(y_v - n p_other) / (p_true - p_other)`.
    pub fn decode(&self, y: &CountVector) -> Result<EstimateVector> {
        if y.counts().len() as u64 != self.num_values {
            return Err(Error::UniverseMismatch {
                left: self.num_values,
                right: y.counts().len() as u64,
            });
        }
        let n = y.total() as f64;
        let scale = self.p_true - self.p_other;
        let values = y
            .counts()
            .iter()
            .map(|&c| (c as f64 - n * self.p_other) / scale)
            .collect();
        Ok(EstimateVector { values })
    }
}

/// Subset-selection parameters; each report is a size-`d` subset.
#[derive(Debug, Clone)]
pub struct SsParams {
    epsilon: f64,
    num_values: u64,
    subset_size: u64,
    include_true: f64,
    include_other: f64,
}

/// A report: the chosen value indices, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsMessage {
    pub indices: Vec<u64>,
}

impl SsParams {
    /// `d = max(1, round(k / (e^eps + 1)))`, the utility-optimal report size.
    pub fn new(epsilon: f64, num_values: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if num_values < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 values, got {num_values}"
            )));
        }
        let e = epsilon.exp();
        let k = num_values as f64;
        let subset_size = ((k / (e + 1.0)).round() as u64).max(1);
        debug_assert!(subset_size < num_values);
        let d = subset_size as f64;
        let include_true = e * d / (d * e + k - d);
        let include_other = d * (e * (d - 1.0) + (k - d)) / ((e * d + k - d) * (k - 1.0));
        Ok(SsParams {
            epsilon,
            num_values,
            subset_size,
            include_true,
            include_other,
        })
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn num_values(&self) -> u64 {
        self.num_values
    }

    #[inline]
    pub fn subset_size(&self) -> u64 {
        self.subset_size
    }

    /// Probability that the report contains the held value.
    #[inline]
    pub fn include_true(&self) -> f64 {
        self.include_true
    }

    /// Probability that the report contains any particular other value.
    #[inline]
    pub fn include_other(&self) -> f64 {
        self.include_other
    }

    /// With probability `e^eps d / (d e^eps + k - d)` a uniform size-`d`
    /// subset containing the value, otherwise one excluding it.
    pub fn encode<R: Rng + ?Sized>(&self, value: u64, rng: &mut R) -> Result<SsMessage> {
        if value >= self.num_values {
            return Err(Error::InputOutOfRange {
                value,
                k: self.num_values,
            });
        }
        let k = self.num_values as usize;
        let d = self.subset_size as usize;
        let include = rng.random::<f64>() < self.include_true;
        let amount = if include { d - 1 } else { d };
        // Uniform subset of the k-1 values other than `value`.
        let mut indices: Vec<u64> = rand::seq::index::sample(rng, k - 1, amount)
            .into_iter()
            .map(|i| {
                let i = i as u64;
                if i >= value {
                    i + 1
                } else {
                    i
                }
            })
            .collect();
        if include {
            indices.push(value);
        }
        indices.sort_unstable();
        Ok(SsMessage { indices })
    }

    /// Per-value inclusion counts; `total` tracks the number of reports.
    pub fn accumulate<I: IntoIterator<Item = SsMessage>>(&self, messages: I) -> Result<SsCounts> {
        let mut acc = SsCounts::new(self.num_values);
        for m in messages {
            acc.add(&m)?;
        }
        Ok(acc)
    }

    /// Unbiased estimates from inclusion counts.
    pub fn decode(&self, y: &SsCounts) -> Result<EstimateVector> {
        if y.ones.len() as u64 != self.num_values {
            return Err(Error::UniverseMismatch {
                left: self.num_values,
                right: y.ones.len() as u64,
            });
        }
        let n = y.reports as f64;
        let scale = self.include_true - self.include_other;
        let values = y
            .ones
            .iter()
            .map(|&c| (c as f64 - n * self.include_other) / scale)
            .collect();
        Ok(EstimateVector { values })
    }

    /// Serializes a report as a count-prefixed list of 32-bit LE indices.
    pub fn message_to_bytes(&self, message: &SsMessage) -> Result<Vec<u8>> {
        if self.num_values > u32::MAX as u64 {
            return Err(Error::ParameterOverflow(
                "universe exceeds 2^32; 32-bit wire form unavailable".into(),
            ));
        }
        let mut out = Vec::with_capacity(4 * (message.indices.len() + 1));
        out.extend_from_slice(&(message.indices.len() as u32).to_le_bytes());
        for &i in &message.indices {
            if i >= self.num_values {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    size: self.num_values,
                });
            }
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
        Ok(out)
    }

    pub fn message_from_bytes(&self, bytes: &[u8]) -> Result<SsMessage> {
        if bytes.len() < 4 {
            return Err(Error::MalformedMessage("missing count prefix".into()));
        }
        let count = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
        if bytes.len() != 4 + 4 * count {
            return Err(Error::MalformedMessage(format!(
                "expected {} bytes for {count} indices, got {}",
                4 + 4 * count,
                bytes.len()
            )));
        }
        let indices: Vec<u64> = bytes[4..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as u64)
            .collect();
        if indices.iter().any(|&i| i >= self.num_values) {
            return Err(Error::MalformedMessage("index outside universe".into()));
        }
        Ok(SsMessage { indices })
    }
}

/// Inclusion counts for subset-selection reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsCounts {
    ones: Vec<u64>,
    reports: u64,
}

impl SsCounts {
    pub fn new(universe: u64) -> Self {
        SsCounts {
            ones: vec![0; universe as usize],
            reports: 0,
        }
    }

    pub fn add(&mut self, message: &SsMessage) -> Result<()> {
        let size = self.ones.len() as u64;
        for &i in &message.indices {
            if i >= size {
                return Err(Error::IndexOutOfRange { index: i, size });
            }
        }
        for &i in &message.indices {
            self.ones[i as usize] += 1;
        }
        self.reports += 1;
        Ok(())
    }

    pub fn merge(&self, other: &SsCounts) -> Result<SsCounts> {
        if self.ones.len() != other.ones.len() {
            return Err(Error::UniverseMismatch {
                left: self.ones.len() as u64,
                right: other.ones.len() as u64,
            });
        }
        Ok(SsCounts {
            ones: self
                .ones
                .iter()
                .zip(&other.ones)
                .map(|(&a, &b)| a + b)
                .collect(),
            reports: self.reports + other.reports,
        })
    }

    #[inline]
    pub fn ones(&self) -> &[u64] {
        &self.ones
    }

    #[inline]
    pub fn reports(&self) -> u64 {
        self.reports
    }
}
