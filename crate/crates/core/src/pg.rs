//! The projective-geometry mechanism.
//!
//! Inputs are identified with projective points of `P(F_q^t)`; the favored
//! message set for input `v` is the hyperplane `S(v) = {u : <u, v> = 0}`.
//! The client sends a point of `S(v)` with total probability
//! `e^eps * p * c_set` and a point outside it otherwise, so every single
//! message probability is either `e^eps * p` or `p`. The server keeps a
//! count per point and recovers unbiased estimates from hyperplane sums,
//! either by direct enumeration or by a dynamic program over prefixes that
//! runs in `O(k t q)` time and `O(k)` memory.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{is_prime, Field};
use crate::projgeom::{canonical_count, index_to_coords, Geometry, PointIndex};

/// Exact-mode enumeration is limited to universes of this size.
pub const EXACT_MODE_LIMIT: u64 = 100_000;

/// Universe bound for the 32-bit wire encoding.
pub const WIRE_UNIVERSE_LIMIT: u64 = 1 << 32;

/// Derived parameters of the mechanism.
#[derive(Debug, Clone)]
pub struct PgParams {
    epsilon: f64,
    geometry: Geometry,
    num_values: u64,
    base_prob: f64,
    alpha: f64,
    beta: f64,
}

impl PgParams {
    /// Derives parameters from the privacy budget and the logical universe
    /// size: `q` is the prime closest to `e^eps + 1` (ties to the smaller
    /// prime) and `t` the smallest dimension whose point count covers `k`.
    pub fn derive(epsilon: f64, num_values: u64) -> Result<Self> {
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
        let q = closest_prime(epsilon.exp() + 1.0);
        let t = smallest_dim(q, num_values)?;
        Self::with_geometry(epsilon, num_values, q, t)
    }

    /// Builds parameters with `(q, t)` pinned explicitly.
    pub fn with_geometry(epsilon: f64, num_values: u64, q: u64, t: u32) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let geometry = Geometry::new(Field::new(q)?, t)?;
        if num_values > geometry.num_points() {
            return Err(Error::ParameterOverflow(format!(
                "k={num_values} exceeds universe {} for q={q}, t={t}",
                geometry.num_points()
            )));
        }
        let e = epsilon.exp();
        let k = geometry.num_points() as f64;
        let c_set = geometry.subspace_size() as f64;
        let c_int = geometry.intersection_size() as f64;
        let base_prob = 1.0 / ((e - 1.0) * c_set + k);
        let alpha = ((e - 1.0) * c_set + k) / ((e - 1.0) * (c_set - c_int));
        let beta = -((e - 1.0) * c_int + c_set) / ((e - 1.0) * (c_set - c_int));
        Ok(PgParams {
            epsilon,
            geometry,
            num_values,
            base_prob,
            alpha,
            beta,
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

    /// Logical universe size `k` (estimates are emitted for these values only).
    #[inline]
    pub fn num_values(&self) -> u64 {
        self.num_values
    }

    /// Probability of each non-favored message.
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

    /// Randomizes one input value into a message point.
    pub fn encode<R: Rng + ?Sized>(&self, value: u64, rng: &mut R) -> Result<PointIndex> {
        if value >= self.num_values {
            return Err(Error::InputOutOfRange {
                value,
                k: self.num_values,
            });
        }
        let point = self.geometry.index_to_point(value)?;
        let p_in = self.epsilon.exp() * self.base_prob * self.geometry.subspace_size() as f64;
        if rng.random::<f64>() < p_in {
            Ok(self.geometry.sample_in_subspace(&point, rng))
        } else {
            Ok(self.geometry.sample_out_subspace(&point, rng))
        }
    }

    /// Exact message distribution for one input; small universes only.
    pub fn message_distribution(&self, value: u64) -> Result<Vec<f64>> {
        let k = self.geometry.num_points();
        if k > EXACT_MODE_LIMIT {
            return Err(Error::TooLargeForExactMode(k));
        }
        if value >= self.num_values {
            return Err(Error::InputOutOfRange {
                value,
                k: self.num_values,
            });
        }
        let point = self.geometry.index_to_point(value)?;
        let mut dist = vec![self.base_prob; k as usize];
        let favored = self.epsilon.exp() * self.base_prob;
        for u in self.geometry.subspace_members(&point) {
            dist[u as usize] = favored;
        }
        Ok(dist)
    }

    /// Estimates via direct enumeration of each hyperplane.
    pub fn decode_naive(&self, y: &CountVector) -> Result<EstimateVector> {
        self.check_universe(y)?;
        let sums = subset_sums_naive(&self.geometry, y.counts());
        Ok(self.estimates_from_sums(&sums, y.total()))
    }

    /// Estimates via the dynamic program; identical integer sums to
    /// [`PgParams::decode_naive`].
    pub fn decode_dp(&self, y: &CountVector) -> Result<EstimateVector> {
        self.check_universe(y)?;
        let sums = subset_sums_dp(&self.geometry, y.counts());
        Ok(self.estimates_from_sums(&sums, y.total()))
    }

    fn check_universe(&self, y: &CountVector) -> Result<()> {
        if y.counts().len() as u64 != self.geometry.num_points() {
            return Err(Error::UniverseMismatch {
                left: self.geometry.num_points(),
                right: y.counts().len() as u64,
            });
        }
        Ok(())
    }

    /// Applies the unbiased estimator to integer hyperplane sums.
    pub fn estimates_from_sums(&self, sums: &[u64], total: u64) -> EstimateVector {
        let offset = self.beta * total as f64;
        let values = sums[..self.num_values as usize]
            .iter()
            .map(|&s| self.alpha * s as f64 + offset)
            .collect();
        EstimateVector { values }
    }

    /// Per-coordinate mean-squared-error bound for `n` users: the ratio form
    /// when the intersection size is positive, the direct form otherwise.
    pub fn variance_bound(&self, n: u64) -> f64 {
        if self.geometry.intersection_size() > 0 {
            self.ratio_form_variance_bound(n)
                .expect("intersection size checked")
        } else {
            let e = self.epsilon.exp();
            let k = self.geometry.num_points() as f64;
            let c_set = self.geometry.subspace_size() as f64;
            let c_int = self.geometry.intersection_size() as f64;
            let denom = (e - 1.0) * (e - 1.0) * (c_set - c_int) * (c_set - c_int);
            let own = (k - c_set) * e * c_set / denom;
            let cross = ((e - 1.0) * c_int + c_set) * ((e - 2.0) * c_set + k - (e - 1.0) * c_int)
                / denom;
            n as f64 * (own + (k - 1.0) * cross) / k
        }
    }

    /// The bound expressed through the subspace ratio `z = c_set / c_int`.
    pub fn ratio_form_variance_bound(&self, n: u64) -> Result<f64> {
        if self.geometry.intersection_size() == 0 {
            return Err(Error::DegenerateIntersection);
        }
        let e = self.epsilon.exp();
        let k = self.geometry.num_points() as f64;
        let z = self.geometry.subspace_size() as f64 / self.geometry.intersection_size() as f64;
        let total = n as f64 * (e * z * z + (k - 1.0) * ((e - 1.0) + z) * ((e - 1.0) + z))
            / ((e - 1.0) * (e - 1.0) * (z - 1.0));
        Ok(total / k)
    }

    /// Exact single-user variance of the input's own coordinate,
    /// `(k - c_set) e^eps c_set / ((e^eps - 1)^2 (c_set - c_int)^2)`, scaled by `n`.
    pub fn own_coordinate_variance(&self, n: u64) -> f64 {
        let e = self.epsilon.exp();
        let k = self.geometry.num_points() as f64;
        let c_set = self.geometry.subspace_size() as f64;
        let c_int = self.geometry.intersection_size() as f64;
        n as f64 * (k - c_set) * e * c_set
            / ((e - 1.0) * (e - 1.0) * (c_set - c_int) * (c_set - c_int))
    }

    /// Serializes a message as a 32-bit little-endian point index.
    pub fn message_to_bytes(&self, index: PointIndex) -> Result<[u8; 4]> {
        if self.geometry.num_points() > WIRE_UNIVERSE_LIMIT {
            return Err(Error::ParameterOverflow(
                "universe exceeds 2^32; 32-bit wire form unavailable".into(),
            ));
        }
        if index >= self.geometry.num_points() {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.geometry.num_points(),
            });
        }
        Ok((index as u32).to_le_bytes())
    }

    /// Parses a 32-bit little-endian point index.
    pub fn message_from_bytes(&self, bytes: [u8; 4]) -> Result<PointIndex> {
        let index = u32::from_le_bytes(bytes) as u64;
        if index >= self.geometry.num_points() {
            return Err(Error::MalformedMessage(format!(
                "point index {index} outside universe {}",
                self.geometry.num_points()
            )));
        }
        Ok(index)
    }
}

/// The prime minimizing the distance to `target`, ties to the smaller prime.
pub(crate) fn closest_prime(target: f64) -> u64 {
    let floor = target.floor() as u64;
    let mut below = floor;
    while below >= 2 && !is_prime(below) {
        below -= 1;
    }
    let mut above = floor + 1;
    while !is_prime(above) {
        above += 1;
    }
    if below < 2 {
        return above;
    }
    let d_below = target - below as f64;
    let d_above = above as f64 - target;
    if d_below <= d_above {
        below
    } else {
        above
    }
}

/// Smallest `t >= 2` with `(q^t - 1)/(q - 1) >= k`.
pub(crate) fn smallest_dim(q: u64, k: u64) -> Result<u32> {
    let mut t = 2u32;
    loop {
        match canonical_count(q, t) {
            Ok(count) if count >= k => return Ok(t),
            Ok(_) => t += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Per-point message counts, mergeable across shards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn new(universe: u64) -> Self {
        CountVector {
            counts: vec![0; universe as usize],
            total: 0,
        }
    }

    /// Counts every message in the stream.
    pub fn from_messages<I: IntoIterator<Item = PointIndex>>(
        universe: u64,
        messages: I,
    ) -> Result<Self> {
        let mut acc = Self::new(universe);
        for m in messages {
            acc.add(m)?;
        }
        Ok(acc)
    }

    pub fn add(&mut self, index: PointIndex) -> Result<()> {
        let size = self.counts.len() as u64;
        if index >= size {
            return Err(Error::IndexOutOfRange { index, size });
        }
        self.counts[index as usize] += 1;
        self.total += 1;
        Ok(())
    }

    /// Componentwise sum of two shards.
    pub fn merge(&self, other: &CountVector) -> Result<CountVector> {
        if self.counts.len() != other.counts.len() {
            return Err(Error::UniverseMismatch {
                left: self.counts.len() as u64,
                right: other.counts.len() as u64,
            });
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(CountVector {
            counts,
            total: self.total + other.total,
        })
    }

    #[inline]
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total number of messages counted.
    #[inline]
    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Real-valued histogram estimate over the logical universe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateVector {
    pub values: Vec<f64>,
}

/// Hyperplane sums by direct enumeration.
pub fn subset_sums_naive(geometry: &Geometry, counts: &[u64]) -> Vec<u64> {
    (0..geometry.num_points())
        .map(|i| {
            let v = geometry.index_to_point(i).expect("in range");
            geometry
                .subspace_members(&v)
                .into_iter()
                .map(|u| counts[u as usize])
                .sum()
        })
        .collect()
}

/// Hyperplane sums via the prefix dynamic program, `O(k t q)` time.
///
/// The state `f(a, b, z)` sums the counts of points whose length-`j` prefix
/// equals `a` and whose suffix has inner product `z` with `b`. Layers are
/// computed bottom-up from full-length prefixes to the empty prefix, keeping
/// two layers in memory. Suffix arguments `b` are stored only in
/// canonical-or-zero form; a state with non-canonical `b` is looked up as
/// `f(a, b/zeta, z/zeta)` where `zeta` is the first nonzero entry of `b`.
pub fn subset_sums_dp(geometry: &Geometry, counts: &[u64]) -> Vec<u64> {
    let field = geometry.field();
    let q = field.modulus() as u64;
    let t = geometry.dim();
    let num_points = geometry.num_points();
    debug_assert_eq!(counts.len() as u64, num_points);

    // Layer t-1 directly from the counts. Suffixes have length 1, so the
    // canonical-or-zero choices for `b` are exactly (0) and (1):
    //   f(a, (1), z) = y[a . z]          (the single extension w = z)
    //   f(a, (0), z) = [z = 0] sum_w y[a . w]
    // A prefix `a` is either canonical (stored at 1 + its dense index) or
    // the zero vector (stored at 0), whose only extension to a point is
    // appending 1, reaching the last point (0, ..., 0, 1).
    let a_count = canonical_count(q, t - 1).expect("validated at construction") + 1;
    let b_count = 2u64;
    let mut prev = vec![0u64; (a_count * b_count * q) as usize];
    let last_point = (num_points - 1) as usize;
    {
        let state = |a_idx: u64, b_idx: u64, z: u64| ((a_idx * b_count + b_idx) * q + z) as usize;
        prev[state(0, 1, 1)] = counts[last_point];
        prev[state(0, 0, 0)] = counts[last_point];
        for c in 0..a_count - 1 {
            let a_idx = 1 + c;
            let base = (q * c) as usize;
            let mut row_sum = 0u64;
            for w in 0..q {
                let y = counts[base + w as usize];
                row_sum += y;
                prev[state(a_idx, 1, w)] = y;
            }
            prev[state(a_idx, 0, 0)] = row_sum;
        }
    }
    let mut prev_b_count = b_count;

    // Middle layers t-2 down to 1.
    for j in (1..t.saturating_sub(1)).rev() {
        let suffix_len = t - j;
        let a_count = canonical_count(q, j).expect("in range") + 1;
        let b_count = canonical_count(q, suffix_len).expect("in range") + 1;
        let b_table = suffix_transitions(geometry, suffix_len);
        let mut cur = vec![0u64; (a_count * b_count * q) as usize];
        let zero_extension = canonical_count(q, j + 1).expect("in range");
        for a_idx in 0..a_count {
            let (w_limit, next_base) = if a_idx == 0 {
                (2, None)
            } else {
                (q, Some(q * (a_idx - 1)))
            };
            for (b_idx, step) in b_table.iter().enumerate() {
                for z in 0..q {
                    let mut acc = 0u64;
                    for w in 0..w_limit {
                        let next_a = match next_base {
                            Some(base) => 1 + base + w,
                            None if w == 0 => 0,
                            None => zero_extension,
                        };
                        let z_next = field.mul(
                            field.sub(z as u32, field.mul(w as u32, step.first)),
                            step.inv_scale,
                        ) as u64;
                        acc += prev
                            [((next_a * prev_b_count + step.next_b_idx) * q + z_next) as usize];
                    }
                    cur[((a_idx * b_count + b_idx as u64) * q + z) as usize] = acc;
                }
            }
        }
        prev = cur;
        prev_b_count = b_count;
    }

    // Final layer: empty prefix, canonical b = v, z = 0 only.
    let v_table = suffix_transitions(geometry, t);
    let zero_extension = canonical_count(q, 1).expect("in range");
    let mut out = vec![0u64; num_points as usize];
    for (v, slot) in out.iter_mut().enumerate() {
        let step = &v_table[v + 1];
        let mut acc = 0u64;
        for w in 0..2u32 {
            let next_a = if w == 0 { 0 } else { zero_extension };
            let z_next =
                field.mul(field.neg(field.mul(w, step.first)), step.inv_scale) as u64;
            acc += prev[((next_a * prev_b_count + step.next_b_idx) * q + z_next) as usize];
        }
        *slot = acc;
    }
    out
}

/// How a suffix argument of the given length steps to the next layer: its
/// first entry, the canonical-or-zero index of the shortened suffix, and the
/// inverse of the scale factor that re-canonicalizes it.
struct SuffixStep {
    first: u32,
    next_b_idx: u64,
    inv_scale: u32,
}

/// Transition table for all canonical-or-zero suffixes of the given length;
/// entry 0 is the zero suffix, entry `1 + c` the canonical suffix of index `c`.
fn suffix_transitions(geometry: &Geometry, len: u32) -> Vec<SuffixStep> {
    let field = geometry.field();
    let q = field.modulus() as u64;
    let count = canonical_count(q, len).expect("in range");
    let mut table = Vec::with_capacity(count as usize + 1);
    table.push(SuffixStep {
        first: 0,
        next_b_idx: 0,
        inv_scale: 1,
    });
    for c in 0..count {
        let coords = index_to_coords(q, len, c).expect("in range");
        let first = coords[0];
        let tail = &coords[1..];
        let step = match tail.iter().position(|&x| x != 0) {
            None => SuffixStep {
                first,
                next_b_idx: 0,
                inv_scale: 1,
            },
            Some(lead) => {
                let inv_scale = field.inv(tail[lead]).expect("nonzero");
                let reduced: Vec<u32> = tail.iter().map(|&x| field.mul(x, inv_scale)).collect();
                let idx = crate::projgeom::coords_to_index(q, len - 1, &reduced)
                    .expect("reduced suffix is canonical");
                SuffixStep {
                    first,
                    next_b_idx: 1 + idx,
                    inv_scale,
                }
            }
        };
        table.push(step);
    }
    table
}
