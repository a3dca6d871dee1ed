//! The hybrid block mechanism.
//!
//! Inputs are split into `h` blocks of at most `ceil(k/h)` values; a block
//! carries its own copy of the projective-geometry construction over a
//! smaller field. A response is a pair `(j, u)`: the correct block together
//! with a favored point gets probability `e^eps * p`, every other pair gets
//! `p`. Decoding runs the hyperplane dynamic program block by block, so a
//! smaller `q` trades reconstruction error for decode time.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::pg::{subset_sums_dp, CountVector, EstimateVector, EXACT_MODE_LIMIT};
use crate::projgeom::{canonical_count, Geometry, PointIndex};

/// A response: block index plus a point of the block geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HpgMessage {
    pub block: u64,
    pub point: PointIndex,
}

/// Per-block message counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HpgCountVector {
    blocks: Vec<CountVector>,
}

impl HpgCountVector {
    pub fn new(num_blocks: u64, block_universe: u64) -> Self {
        HpgCountVector {
            blocks: (0..num_blocks)
                .map(|_| CountVector::new(block_universe))
                .collect(),
        }
    }

    pub fn add(&mut self, message: HpgMessage) -> Result<()> {
        let h = self.blocks.len() as u64;
        if message.block >= h {
            return Err(Error::BlockMismatch {
                expected: h,
                got: message.block + 1,
            });
        }
        self.blocks[message.block as usize].add(message.point)
    }

    pub fn from_messages<I: IntoIterator<Item = HpgMessage>>(
        num_blocks: u64,
        block_universe: u64,
        messages: I,
    ) -> Result<Self> {
        let mut acc = Self::new(num_blocks, block_universe);
        for m in messages {
            acc.add(m)?;
        }
        Ok(acc)
    }

    pub fn merge(&self, other: &HpgCountVector) -> Result<HpgCountVector> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::BlockMismatch {
                expected: self.blocks.len() as u64,
                got: other.blocks.len() as u64,
            });
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.merge(b))
            .collect::<Result<_>>()?;
        Ok(HpgCountVector { blocks })
    }

    #[inline]
    pub fn blocks(&self) -> &[CountVector] {
        &self.blocks
    }

    /// Messages across all blocks.
    pub fn total(&self) -> u64 {
        self.blocks.iter().map(CountVector::total).sum()
    }
}

/// Derived parameters of the hybrid mechanism.
#[derive(Debug, Clone)]
pub struct HpgParams {
    epsilon: f64,
    geometry: Geometry,
    num_blocks: u64,
    num_values: u64,
    block_size: u64,
    base_prob: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl HpgParams {
    /// Searches `(t, h)` for the given prime `q`, minimizing the distance of
    /// `h * z` to `e^eps + 1` subject to `b*h >= k > c_set*h`; ties go to the
    /// smaller padded universe `b*h`.
    pub fn derive(epsilon: f64, num_values: u64, q: u64) -> Result<Self> {
        let (t, h) = search_shape(epsilon, num_values, q, None)?;
        Self::with_shape(epsilon, num_values, q, t, h)
    }

    /// Like [`HpgParams::derive`] but also requires each block to fit its
    /// values among points with nonzero last coordinate (`ceil(k/h) <= q^(t-1)`),
    /// which the public-coin variant needs.
    pub fn derive_with_block_capacity(epsilon: f64, num_values: u64, q: u64) -> Result<Self> {
        let (t, h) = search_shape(epsilon, num_values, q, Some(()))?;
        Self::with_shape(epsilon, num_values, q, t, h)
    }

    /// Builds parameters with `(q, t, h)` pinned, validating the block
    /// constraints.
    pub fn with_shape(epsilon: f64, num_values: u64, q: u64, t: u32, h: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if h == 0 {
            return Err(Error::InvalidConfig("need at least one block".into()));
        }
        let geometry = Geometry::new(Field::new(q)?, t)?;
        let b = geometry.num_points();
        let c_set = geometry.subspace_size();
        if b.checked_mul(h).is_none() {
            return Err(Error::ParameterOverflow(format!(
                "b*h overflows for q={q}, t={t}, h={h}"
            )));
        }
        if b * h < num_values || num_values <= c_set * h {
            return Err(Error::NoFeasibleParams {
                epsilon,
                k: num_values,
                q,
            });
        }
        let e = epsilon.exp();
        let bh = (b * h) as f64;
        let cs = c_set as f64;
        let ci = geometry.intersection_size() as f64;
        let base_prob = 1.0 / (bh + (e - 1.0) * cs);
        let alpha = (bh + (e - 1.0) * cs) / ((e - 1.0) * (cs - ci));
        let beta = -alpha * ci / cs;
        let gamma = -(cs - b as f64 * ci / cs) / ((e - 1.0) * (cs - ci));
        Ok(HpgParams {
            epsilon,
            geometry,
            num_blocks: h,
            num_values,
            block_size: num_values.div_ceil(h),
            base_prob,
            alpha,
            beta,
            gamma,
        })
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    #[inline]
    pub fn num_blocks(&self) -> u64 {
        self.num_blocks
    }

    #[inline]
    pub fn num_values(&self) -> u64 {
        self.num_values
    }

    /// Values allocated to each block, `ceil(k/h)`.
    #[inline]
    pub fn block_size(&self) -> u64 {
        self.block_size
    }

    /// Points per block, `b = (q^t - 1)/(q - 1)`.
    #[inline]
    pub fn block_points(&self) -> u64 {
        self.geometry.num_points()
    }

    #[inline]
    pub fn base_prob(&self) -> f64 {
        self.base_prob
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Subspace ratio `z = c_set / c_int`.
    pub fn subspace_ratio(&self) -> f64 {
        self.geometry.subspace_size() as f64 / self.geometry.intersection_size() as f64
    }

    /// Error inflation over the plain mechanism, `z / (z - 1)`.
    pub fn error_inflation(&self) -> f64 {
        let z = self.subspace_ratio();
        z / (z - 1.0)
    }

    /// Splits a value into its block and within-block point.
    pub fn value_position(&self, value: u64) -> Result<(u64, PointIndex)> {
        if value >= self.num_values {
            return Err(Error::InputOutOfRange {
                value,
                k: self.num_values,
            });
        }
        Ok((value / self.block_size, value % self.block_size))
    }

    /// Randomizes one input value into a `(block, point)` response.
    pub fn encode<R: Rng + ?Sized>(&self, value: u64, rng: &mut R) -> Result<HpgMessage> {
        let (block, within) = self.value_position(value)?;
        let point = self.geometry.index_to_point(within)?;
        let e = self.epsilon.exp();
        let b = self.block_points() as f64;
        let cs = self.geometry.subspace_size() as f64;
        let p_in = e * self.base_prob * cs;
        let p_same_out = self.base_prob * (b - cs);
        let draw = rng.random::<f64>();
        if draw < p_in {
            Ok(HpgMessage {
                block,
                point: self.geometry.sample_in_subspace(&point, rng),
            })
        } else if draw < p_in + p_same_out {
            Ok(HpgMessage {
                block,
                point: self.geometry.sample_out_subspace(&point, rng),
            })
        } else {
            let mut other = rng.random_range(0..self.num_blocks - 1);
            if other >= block {
                other += 1;
            }
            Ok(HpgMessage {
                block: other,
                point: rng.random_range(0..self.block_points()),
            })
        }
    }

    /// Exact distribution over all `(block, point)` pairs, flattened as
    /// `block * b + point`; small universes only.
    pub fn message_distribution(&self, value: u64) -> Result<Vec<f64>> {
        let universe = self.block_points() * self.num_blocks;
        if universe > EXACT_MODE_LIMIT {
            return Err(Error::TooLargeForExactMode(universe));
        }
        let (block, within) = self.value_position(value)?;
        let point = self.geometry.index_to_point(within)?;
        let mut dist = vec![self.base_prob; universe as usize];
        let favored = self.epsilon.exp() * self.base_prob;
        let offset = block * self.block_points();
        for u in self.geometry.subspace_members(&point) {
            dist[(offset + u) as usize] = favored;
        }
        Ok(dist)
    }

    /// Estimates from per-block counts: within-block hyperplane sums via the
    /// dynamic program, plus the block-total and grand-total corrections.
    /// Blocks decode independently and in parallel.
    pub fn decode(&self, y: &HpgCountVector) -> Result<EstimateVector> {
        if y.blocks().len() as u64 != self.num_blocks {
            return Err(Error::BlockMismatch {
                expected: self.num_blocks,
                got: y.blocks().len() as u64,
            });
        }
        for block in y.blocks() {
            if block.counts().len() as u64 != self.block_points() {
                return Err(Error::UniverseMismatch {
                    left: self.block_points(),
                    right: block.counts().len() as u64,
                });
            }
        }
        let n = y.total();
        let global = self.gamma * n as f64;
        let per_block: Vec<Vec<f64>> = y
            .blocks()
            .par_iter()
            .map(|block| {
                let sums = subset_sums_dp(&self.geometry, block.counts());
                let offset = self.beta * block.total() as f64 + global;
                sums.into_iter()
                    .map(|s| self.alpha * s as f64 + offset)
                    .collect()
            })
            .collect();
        let values = (0..self.num_values)
            .map(|m| per_block[(m / self.block_size) as usize][(m % self.block_size) as usize])
            .collect();
        Ok(EstimateVector { values })
    }

    /// Per-coordinate mean-squared-error bound for `n` users over `k`
    /// coordinates, from the block mechanism's error lemma.
    pub fn variance_bound(&self, n: u64, k: u64) -> f64 {
        let e = self.epsilon.exp();
        let z = self.subspace_ratio();
        let h = self.num_blocks as f64;
        let zh = z * h;
        let em1 = e - 1.0;
        let own = 1.0 + (zh + em1) / (em1 * em1 * (z - 1.0)) + 2.0 / em1
            + e * (zh - e + 1.0) / (em1 * em1);
        let per_block = k.div_ceil(self.num_blocks) as f64;
        let cross = (zh + em1) * z / (em1 * em1 * (z - 1.0))
            * (k as f64 - per_block + (per_block - 1.0) * (z + em1) / z);
        n as f64 * (own + cross) / k as f64
    }

    /// The simplified bound `n/k + z/(z-1) * 4 n e^eps / (e^eps - 1)^2`,
    /// available when `z * h` hits `e^eps + 1` exactly.
    pub fn simplified_variance_bound(&self, n: u64, k: u64) -> Option<f64> {
        let e = self.epsilon.exp();
        let zh = self.subspace_ratio() * self.num_blocks as f64;
        if (zh - (e + 1.0)).abs() > 1e-9 {
            return None;
        }
        let n = n as f64;
        Some(n / k as f64 + self.error_inflation() * 4.0 * n * e / ((e - 1.0) * (e - 1.0)))
    }

    /// Serializes a message as a 16-bit block index plus a 32-bit point
    /// index, both little endian.
    pub fn message_to_bytes(&self, message: HpgMessage) -> Result<[u8; 6]> {
        if self.num_blocks > u16::MAX as u64 + 1 {
            return Err(Error::ParameterOverflow(
                "block count exceeds 2^16; 16-bit wire form unavailable".into(),
            ));
        }
        if message.block >= self.num_blocks {
            return Err(Error::BlockMismatch {
                expected: self.num_blocks,
                got: message.block + 1,
            });
        }
        if message.point >= self.block_points() {
            return Err(Error::IndexOutOfRange {
                index: message.point,
                size: self.block_points(),
            });
        }
        let mut out = [0u8; 6];
        out[..2].copy_from_slice(&(message.block as u16).to_le_bytes());
        out[2..].copy_from_slice(&(message.point as u32).to_le_bytes());
        Ok(out)
    }

    pub fn message_from_bytes(&self, bytes: [u8; 6]) -> Result<HpgMessage> {
        let block = u16::from_le_bytes([bytes[0], bytes[1]]) as u64;
        let point = u32::from_le_bytes([bytes[2], bytes[3], bytes[4], bytes[5]]) as u64;
        if block >= self.num_blocks || point >= self.block_points() {
            return Err(Error::MalformedMessage(format!(
                "block {block} / point {point} outside {} x {}",
                self.num_blocks,
                self.block_points()
            )));
        }
        Ok(HpgMessage { block, point })
    }
}

/// Exhaustive `(t, h)` search; `star_capacity` additionally requires
/// `ceil(k/h) <= q^(t-1)`.
fn search_shape(
    epsilon: f64,
    num_values: u64,
    q: u64,
    star_capacity: Option<()>,
) -> Result<(u32, u64)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !crate::field::is_prime(q) {
        return Err(Error::NonPrimeModulus(q));
    }
    let target = epsilon.exp() + 1.0;
    const MAX_DIM: u32 = 40;
    const MAX_BLOCKS: u64 = 1 << 20;
    let mut best: Option<(f64, u64, u32, u64)> = None; // (distance, b*h, t, h)
    // z = c_set/c_int needs c_int >= 1, so dimensions start at 3.
    for t in 3..=MAX_DIM {
        let b = match canonical_count(q, t) {
            Ok(b) => b,
            Err(_) => break,
        };
        let c_set = canonical_count(q, t - 1).expect("smaller dim fits");
        let c_int = canonical_count(q, t - 2).expect("smaller dim fits");
        let z = c_set as f64 / c_int as f64;
        let mut lo = num_values.div_ceil(b).max(1);
        let hi = num_values.div_ceil(c_set).saturating_sub(1).min(MAX_BLOCKS);
        if star_capacity.is_some() {
            let capacity = b - c_set; // q^(t-1)
            lo = lo.max(num_values.div_ceil(capacity));
        }
        for h in lo..=hi {
            let dist = (h as f64 * z - target).abs();
            let padded = b * h;
            let better = match best {
                None => true,
                Some((best_dist, best_padded, _, _)) => {
                    if (dist - best_dist).abs() <= 1e-12 * best_dist.max(1.0) {
                        padded < best_padded
                    } else {
                        dist < best_dist
                    }
                }
            };
            if better {
                best = Some((dist, padded, t, h));
            }
        }
    }
    match best {
        Some((_, _, t, h)) => Ok((t, h)),
        None => Err(Error::NoFeasibleParams {
            epsilon,
            k: num_values,
            q,
        }),
    }
}
