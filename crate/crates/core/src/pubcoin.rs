//! Public-coin variants that shrink each report to one field element.
//!
//! Client and server derive a shared vector `w` of length `t - 1` from a
//! public seed: all-zero with a calibrated probability, otherwise uniform
//! over canonical vectors. Inputs are restricted to canonical vectors with a
//! nonzero last coordinate, so for every nonzero `w` exactly one appended
//! element `a` lands the decoded point `w . a` inside the input's favored
//! hyperplane. Sending just `a` then reproduces the private-coin output
//! distribution exactly; the hybrid variant additionally sends a block index
//! chosen conditionally on `w`, keeping the joint law identical while its
//! marginal stays the plain block marginal.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hpg::{HpgCountVector, HpgMessage, HpgParams};
use crate::pg::{subset_sums_dp, CountVector, EstimateVector, PgParams};
use crate::projgeom::{canonical_count, index_to_coords, CanonicalVector, Geometry, PointIndex};
use crate::seeding;

/// The shared vector `w`; `None` is the all-zero draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedRandomness {
    prefix: Option<CanonicalVector>,
}

impl SharedRandomness {
    /// The canonical prefix, or `None` for the all-zero draw.
    #[inline]
    pub fn prefix(&self) -> Option<&CanonicalVector> {
        self.prefix.as_ref()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.prefix.is_none()
    }
}

/// Bits of payload needed for one field element.
pub fn field_payload_bits(q: u64) -> u32 {
    u64::BITS - (q - 1).leading_zeros()
}

/// Mixes the public seed with a user index so both sides agree on the
/// per-user shared draw without keeping state.
pub fn user_shared_seed(public_seed: u64, user: u64) -> u64 {
    seeding::mix(&[public_seed, user])
}

/// The canonical vector with nonzero last coordinate assigned to a value.
///
/// Value 0 maps to `(0, ..., 0, 1)`; value `1 + c*(q-1) + (a-1)` maps to the
/// canonical prefix of index `c` with last coordinate `a`. This covers all
/// `q^(t-1)` such points exactly once.
pub fn star_point(geometry: &Geometry, value: u64) -> Result<CanonicalVector> {
    let q = geometry.field().modulus() as u64;
    let t = geometry.dim();
    let capacity = geometry.num_points() - geometry.subspace_size();
    if value >= capacity {
        return Err(Error::InputOutOfRange {
            value,
            k: capacity,
        });
    }
    let mut coords = vec![0u32; t as usize];
    if value == 0 {
        coords[t as usize - 1] = 1;
    } else {
        let c = (value - 1) / (q - 1);
        let last = 1 + ((value - 1) % (q - 1)) as u32;
        let prefix = index_to_coords(q, t - 1, c)?;
        coords[..t as usize - 1].copy_from_slice(&prefix);
        coords[t as usize - 1] = last;
    }
    CanonicalVector::new(coords, geometry.field())
}

/// Public-coin wrapper around the plain mechanism.
#[derive(Debug, Clone)]
pub struct PubCoinPg {
    inner: PgParams,
}

impl PubCoinPg {
    /// Wraps pinned parameters, checking that all `k` inputs fit among the
    /// `q^(t-1)` points with nonzero last coordinate.
    pub fn new(inner: PgParams) -> Result<Self> {
        let capacity = inner.geometry().num_points() - inner.geometry().subspace_size();
        if inner.num_values() > capacity {
            return Err(Error::ParameterOverflow(format!(
                "k={} exceeds public-coin capacity q^(t-1)={capacity}",
                inner.num_values()
            )));
        }
        Ok(PubCoinPg { inner })
    }

    /// Derives parameters with the public-coin capacity constraint
    /// `q^(t-1) >= k` in place of the plain point-count constraint.
    pub fn derive(epsilon: f64, num_values: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let q = crate::pg::closest_prime(epsilon.exp() + 1.0);
        let mut t = 2u32;
        loop {
            let capacity = canonical_count(q, t)? - canonical_count(q, t - 1)?;
            if capacity >= num_values {
                break;
            }
            t += 1;
        }
        Self::new(PgParams::with_geometry(epsilon, num_values, q, t)?)
    }

    pub fn with_geometry(epsilon: f64, num_values: u64, q: u64, t: u32) -> Result<Self> {
        Self::new(PgParams::with_geometry(epsilon, num_values, q, t)?)
    }

    #[inline]
    pub fn inner(&self) -> &PgParams {
        &self.inner
    }

    /// Payload bits per report: one field element.
    pub fn payload_bits(&self) -> u32 {
        field_payload_bits(self.inner.geometry().field().modulus() as u64)
    }

    /// The star point assigned to a value; see [`star_point`].
    pub fn star_point(&self, value: u64) -> Result<CanonicalVector> {
        if value >= self.inner.num_values() {
            return Err(Error::InputOutOfRange {
                value,
                k: self.inner.num_values(),
            });
        }
        star_point(self.inner.geometry(), value)
    }

    /// Dense index of the star point for a value.
    pub fn star_index(&self, value: u64) -> Result<PointIndex> {
        self.inner.geometry().point_to_index(&self.star_point(value)?)
    }

    /// Draws the shared vector from a per-user seed: all-zero with
    /// probability `p`, otherwise uniform over canonical prefixes.
    pub fn sample_shared(&self, seed: u64) -> SharedRandomness {
        let mut rng = seeding::stream(&[seed]);
        let g = self.inner.geometry();
        if rng.random::<f64>() < self.inner.base_prob() {
            return SharedRandomness { prefix: None };
        }
        let q = g.field().modulus() as u64;
        let count = canonical_count(q, g.dim() - 1).expect("validated at construction");
        let idx = rng.random_range(0..count);
        let coords = index_to_coords(q, g.dim() - 1, idx).expect("in range");
        SharedRandomness {
            prefix: Some(CanonicalVector::new(coords, g.field()).expect("canonical")),
        }
    }

    /// Conditional law of the sent element given `(v, w)`, as a length-`q`
    /// probability vector.
    pub fn conditional_law(&self, v: &CanonicalVector, w: &SharedRandomness) -> Result<Vec<f64>> {
        let q = self.inner.geometry().field().modulus() as usize;
        match w.prefix() {
            None => {
                let mut law = vec![0.0; q];
                law[1] = 1.0;
                Ok(law)
            }
            Some(prefix) => {
                let favored = self.solve_aligned(v, prefix)?;
                let e = self.inner.epsilon().exp();
                let mut law = vec![1.0 / (e + q as f64 - 1.0); q];
                law[favored as usize] = e / (e + q as f64 - 1.0);
                Ok(law)
            }
        }
    }

    /// The unique `a` with `<v, w . a> = 0`; needs `v`'s last coordinate
    /// nonzero.
    fn solve_aligned(&self, v: &CanonicalVector, prefix: &CanonicalVector) -> Result<u32> {
        let g = self.inner.geometry();
        let field = g.field();
        let t = g.dim() as usize;
        let last = v.coords()[t - 1];
        if last == 0 {
            return Err(Error::InputNotStarCanonical);
        }
        let head = g.inner_product(&v.coords()[..t - 1], prefix.coords());
        field.div(field.neg(head), last)
    }

    /// Sends one field element for the given input point.
    pub fn encode_point<R: Rng + ?Sized>(
        &self,
        v: &CanonicalVector,
        w: &SharedRandomness,
        rng: &mut R,
    ) -> Result<u32> {
        let q = self.inner.geometry().field().modulus();
        match w.prefix() {
            None => {
                // The element carries no information here; 1 keeps the
                // decoded point at (0, ..., 0, 1).
                if v.coords()[v.coords().len() - 1] == 0 {
                    return Err(Error::InputNotStarCanonical);
                }
                Ok(1)
            }
            Some(prefix) => {
                let favored = self.solve_aligned(v, prefix)?;
                let e = self.inner.epsilon().exp();
                if rng.random::<f64>() < e / (e + q as f64 - 1.0) {
                    Ok(favored)
                } else {
                    let mut other = rng.random_range(0..q - 1);
                    if other >= favored {
                        other += 1;
                    }
                    Ok(other)
                }
            }
        }
    }

    /// Encodes a logical value through its star point.
    pub fn encode_value<R: Rng + ?Sized>(
        &self,
        value: u64,
        w: &SharedRandomness,
        rng: &mut R,
    ) -> Result<u32> {
        let v = self.star_point(value)?;
        self.encode_point(&v, w, rng)
    }

    /// Reconstructs the point `w . a`; the all-zero draw always decodes to
    /// `(0, ..., 0, 1)`.
    pub fn decode_message(&self, w: &SharedRandomness, element: u32) -> PointIndex {
        let g = self.inner.geometry();
        match w.prefix() {
            None => g.num_points() - 1,
            Some(prefix) => {
                let mut coords = prefix.coords().to_vec();
                coords.push(element);
                let point = CanonicalVector::new(coords, g.field())
                    .expect("canonical prefix stays canonical");
                g.point_to_index(&point).expect("in range")
            }
        }
    }

    /// Estimates from decoded-point counts, read off at the star points.
    pub fn decode(&self, y: &CountVector) -> Result<EstimateVector> {
        if y.counts().len() as u64 != self.inner.geometry().num_points() {
            return Err(Error::UniverseMismatch {
                left: self.inner.geometry().num_points(),
                right: y.counts().len() as u64,
            });
        }
        let sums = subset_sums_dp(self.inner.geometry(), y.counts());
        let offset = self.inner.beta() * y.total() as f64;
        let values = (0..self.inner.num_values())
            .map(|m| {
                let idx = self.star_index(m).expect("validated");
                self.inner.alpha() * sums[idx as usize] as f64 + offset
            })
            .collect::<Vec<_>>();
        Ok(EstimateVector { values })
    }

    /// Serializes the sent element, 16-bit little endian.
    pub fn message_to_bytes(&self, element: u32) -> Result<[u8; 2]> {
        if element >= self.inner.geometry().field().modulus() {
            return Err(Error::MalformedMessage("element out of field range".into()));
        }
        Ok((element as u16).to_le_bytes())
    }

    pub fn message_from_bytes(&self, bytes: [u8; 2]) -> Result<u32> {
        let element = u16::from_le_bytes(bytes) as u32;
        if element >= self.inner.geometry().field().modulus() {
            return Err(Error::MalformedMessage("element out of field range".into()));
        }
        Ok(element)
    }
}

/// Public-coin wrapper around the hybrid mechanism.
#[derive(Debug, Clone)]
pub struct PubCoinHpg {
    inner: HpgParams,
    star: PubCoinPg,
}

impl PubCoinHpg {
    /// Wraps pinned parameters, checking each block's values fit among its
    /// `q^(t-1)` star points.
    pub fn new(inner: HpgParams) -> Result<Self> {
        let capacity = inner.geometry().num_points() - inner.geometry().subspace_size();
        if inner.block_size() > capacity {
            return Err(Error::ParameterOverflow(format!(
                "block size {} exceeds public-coin capacity q^(t-1)={capacity}",
                inner.block_size()
            )));
        }
        // A block-local view used for star embedding and the conditional law.
        let star = PubCoinPg::new(PgParams::with_geometry(
            inner.epsilon(),
            inner.block_size(),
            inner.geometry().field().modulus() as u64,
            inner.geometry().dim(),
        )?)?;
        Ok(PubCoinHpg { inner, star })
    }

    /// Derives a shape with the extra per-block capacity constraint.
    pub fn derive(epsilon: f64, num_values: u64, q: u64) -> Result<Self> {
        Self::new(HpgParams::derive_with_block_capacity(epsilon, num_values, q)?)
    }

    #[inline]
    pub fn inner(&self) -> &HpgParams {
        &self.inner
    }

    /// Payload bits per report: block index plus one field element.
    pub fn payload_bits(&self) -> u32 {
        let h = self.inner.num_blocks();
        let block_bits = if h <= 1 {
            0
        } else {
            u64::BITS - (h - 1).leading_zeros()
        };
        block_bits + field_payload_bits(self.inner.geometry().field().modulus() as u64)
    }

    /// Block index and star point of a value within its block.
    pub fn star_position(&self, value: u64) -> Result<(u64, CanonicalVector)> {
        let (block, within) = self.inner.value_position(value)?;
        Ok((block, self.star.star_point(within)?))
    }

    /// Draws the shared vector: all-zero with probability `h * p`, otherwise
    /// uniform over canonical prefixes.
    pub fn sample_shared(&self, seed: u64) -> SharedRandomness {
        let mut rng = seeding::stream(&[seed]);
        let g = self.inner.geometry();
        let zero_prob = self.inner.num_blocks() as f64 * self.inner.base_prob();
        if rng.random::<f64>() < zero_prob {
            return SharedRandomness { prefix: None };
        }
        let q = g.field().modulus() as u64;
        let count = canonical_count(q, g.dim() - 1).expect("validated at construction");
        let idx = rng.random_range(0..count);
        let coords = index_to_coords(q, g.dim() - 1, idx).expect("in range");
        SharedRandomness {
            prefix: Some(CanonicalVector::new(coords, g.field()).expect("canonical")),
        }
    }

    /// Probability that the reported block is the true one, given a nonzero
    /// shared vector.
    pub fn correct_block_prob(&self) -> f64 {
        let e = self.inner.epsilon().exp();
        let q = self.inner.geometry().field().modulus() as f64;
        let c_set = self.inner.geometry().subspace_size() as f64;
        let p = self.inner.base_prob();
        let zero_prob = self.inner.num_blocks() as f64 * p;
        (e + q - 1.0) * p * c_set / (1.0 - zero_prob)
    }

    /// Sends the block index and one field element.
    ///
    /// The block is drawn conditionally on `w` (uniform when `w` is zero),
    /// which keeps the decoded joint law equal to the private-coin one while
    /// the block marginal stays `p ((e^eps - 1) c_set + b)` for the true
    /// block and `p b` elsewhere.
    pub fn encode_value<R: Rng + ?Sized>(
        &self,
        value: u64,
        w: &SharedRandomness,
        rng: &mut R,
    ) -> Result<(u64, u32)> {
        let (block, v) = self.star_position(value)?;
        let h = self.inner.num_blocks();
        match w.prefix() {
            None => {
                if v.coords()[v.coords().len() - 1] == 0 {
                    return Err(Error::InputNotStarCanonical);
                }
                Ok((rng.random_range(0..h), 1))
            }
            Some(_) => {
                let q = self.inner.geometry().field().modulus();
                if rng.random::<f64>() < self.correct_block_prob() {
                    let element = self.star.encode_point(&v, w, rng)?;
                    Ok((block, element))
                } else {
                    let mut other = rng.random_range(0..h - 1);
                    if other >= block {
                        other += 1;
                    }
                    Ok((other, rng.random_range(0..q)))
                }
            }
        }
    }

    /// Reconstructs the `(block, point)` response.
    pub fn decode_message(&self, w: &SharedRandomness, block: u64, element: u32) -> HpgMessage {
        HpgMessage {
            block,
            point: self.star.decode_message(w, element),
        }
    }

    /// Estimates from decoded per-block counts, read off at star points.
    pub fn decode(&self, y: &HpgCountVector) -> Result<EstimateVector> {
        if y.blocks().len() as u64 != self.inner.num_blocks() {
            return Err(Error::BlockMismatch {
                expected: self.inner.num_blocks(),
                got: y.blocks().len() as u64,
            });
        }
        let n = y.total();
        let global = self.inner.gamma() * n as f64;
        let geometry = self.inner.geometry();
        let per_block: Vec<(Vec<u64>, f64)> = y
            .blocks()
            .iter()
            .map(|block| {
                let sums = subset_sums_dp(geometry, block.counts());
                let offset = self.inner.beta() * block.total() as f64 + global;
                (sums, offset)
            })
            .collect();
        let values = (0..self.inner.num_values())
            .map(|m| {
                let (block, within) = self.inner.value_position(m).expect("in range");
                let idx = self.star.star_index(within).expect("in range");
                let (sums, offset) = &per_block[block as usize];
                self.inner.alpha() * sums[idx as usize] as f64 + offset
            })
            .collect();
        Ok(EstimateVector { values })
    }

    /// Serializes a report as 16-bit LE block index plus 16-bit LE element.
    pub fn message_to_bytes(&self, block: u64, element: u32) -> Result<[u8; 4]> {
        if block >= self.inner.num_blocks() {
            return Err(Error::BlockMismatch {
                expected: self.inner.num_blocks(),
                got: block + 1,
            });
        }
        if element >= self.inner.geometry().field().modulus() {
            return Err(Error::MalformedMessage("element out of field range".into()));
        }
        let mut out = [0u8; 4];
        out[..2].copy_from_slice(&(block as u16).to_le_bytes());
        out[2..].copy_from_slice(&(element as u16).to_le_bytes());
        Ok(out)
    }

    pub fn message_from_bytes(&self, bytes: [u8; 4]) -> Result<(u64, u32)> {
        let block = u16::from_le_bytes([bytes[0], bytes[1]]) as u64;
        let element = u16::from_le_bytes([bytes[2], bytes[3]]) as u32;
        if block >= self.inner.num_blocks()
            || element >= self.inner.geometry().field().modulus()
        {
            return Err(Error::MalformedMessage("block or element out of range".into()));
        }
        Ok((block, element))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::projgeom::Geometry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn fano_pub() -> PubCoinPg {
        // q = 2, t = 3: capacity q^(t-1) = 4.
        PubCoinPg::with_geometry(2f64.ln(), 4, 2, 3).unwrap()
    }

    #[test]
    fn capacity_is_enforced() {
        assert!(matches!(
            PubCoinPg::with_geometry(2f64.ln(), 5, 2, 3),
            Err(Error::ParameterOverflow(_))
        ));
        let p = PubCoinPg::derive(5.0, 22_000).unwrap();
        assert_eq!(p.inner().geometry().field().modulus(), 149);
        assert_eq!(p.inner().geometry().dim(), 3);
    }

    #[test]
    fn star_embedding_is_a_bijection_onto_star_points() {
        let p = fano_pub();
        let g = p.inner().geometry();
        let mut seen = std::collections::HashSet::new();
        for m in 0..4 {
            let v = p.star_point(m).unwrap();
            assert_ne!(*v.coords().last().unwrap(), 0, "m={m}");
            assert!(seen.insert(g.point_to_index(&v).unwrap()));
        }
        assert_eq!(p.star_point(0).unwrap().coords(), &[0, 0, 1]);
        assert!(matches!(
            p.star_point(4),
            Err(Error::InputOutOfRange { .. })
        ));

        // Larger field: every value lands on a distinct star point.
        let p = PubCoinPg::with_geometry(1.0, 25, 5, 3).unwrap();
        let g = p.inner().geometry();
        let mut seen = std::collections::HashSet::new();
        for m in 0..25 {
            let v = p.star_point(m).unwrap();
            assert_ne!(*v.coords().last().unwrap(), 0);
            assert!(seen.insert(g.point_to_index(&v).unwrap()));
        }
    }

    #[test]
    fn shared_draw_matches_base_probability() {
        let p = fano_pub();
        let mut zeros = 0u64;
        let draws = 1_000_000u64;
        for seed in 0..draws {
            let w = p.sample_shared(seed);
            if w.is_zero() {
                zeros += 1;
            } else {
                let prefix = w.prefix().unwrap();
                assert_eq!(prefix.coords().len(), 2);
            }
        }
        // Pr[w = 0] = p = 1/10.
        let freq = zeros as f64 / draws as f64;
        let sigma = (0.1f64 * 0.9 / draws as f64).sqrt();
        assert!((freq - 0.1).abs() < 5.0 * sigma, "freq {freq}");
        // Same seed on both sides gives the same draw.
        assert_eq!(p.sample_shared(7), p.sample_shared(7));
    }

    #[test]
    fn forced_branch_and_conditional_law() {
        let p = fano_pub();
        let g = p.inner().geometry();
        let zero = SharedRandomness { prefix: None };
        let v = CanonicalVector::new(vec![1, 0, 1], g.field()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert_eq!(p.encode_point(&v, &zero, &mut rng).unwrap(), 1);

        // w = (1, 0): the unique aligned element solves 1 + a = 0 mod 2.
        let w = SharedRandomness {
            prefix: Some(CanonicalVector::new(vec![1, 0], g.field()).unwrap()),
        };
        let law = p.conditional_law(&v, &w).unwrap();
        assert!((law[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((law[0] - 1.0 / 3.0).abs() < 1e-12);
        let sum: f64 = law.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);

        // Non-star inputs are rejected.
        let bad = CanonicalVector::new(vec![1, 0, 0], g.field()).unwrap();
        assert!(matches!(
            p.encode_point(&bad, &w, &mut rng),
            Err(Error::InputNotStarCanonical)
        ));
    }

    #[test]
    fn decode_message_appends_and_handles_zero_draw() {
        let p = fano_pub();
        let g = p.inner().geometry();
        let w = SharedRandomness {
            prefix: Some(CanonicalVector::new(vec![1, 0], g.field()).unwrap()),
        };
        let decoded = p.decode_message(&w, 1);
        let expected = g
            .point_to_index(&CanonicalVector::new(vec![1, 0, 1], g.field()).unwrap())
            .unwrap();
        assert_eq!(decoded, expected);

        let zero = SharedRandomness { prefix: None };
        let u_star = g
            .point_to_index(&CanonicalVector::new(vec![0, 0, 1], g.field()).unwrap())
            .unwrap();
        assert_eq!(p.decode_message(&zero, 1), u_star);
        assert_eq!(u_star, g.num_points() - 1);
    }

    /// Empirical check that the decoded public-coin law matches the
    /// private-coin message distribution (the exact version lives in the
    /// rational oracle tests).
    #[test]
    fn decoded_law_tracks_private_coin_distribution() {
        let p = fano_pub();
        let value = 2u64;
        let star = p.star_index(value).unwrap();
        let reference = {
            // Private-coin law at the star point.
            let g = Geometry::new(Field::new(2).unwrap(), 3).unwrap();
            let point = g.index_to_point(star).unwrap();
            let mut dist = vec![p.inner().base_prob(); 7];
            for u in g.subspace_members(&point) {
                dist[u as usize] = 2.0 * p.inner().base_prob();
            }
            dist
        };
        let mut rng = ChaCha12Rng::seed_from_u64(50);
        let draws = 200_000u64;
        let mut counts = vec![0u64; 7];
        for seed in 0..draws {
            let w = p.sample_shared(seed);
            let a = p.encode_value(value, &w, &mut rng).unwrap();
            counts[p.decode_message(&w, a) as usize] += 1;
        }
        for (u, &expected) in reference.iter().enumerate() {
            let freq = counts[u] as f64 / draws as f64;
            let sigma = (expected * (1.0 - expected) / draws as f64).sqrt();
            assert!(
                (freq - expected).abs() < 5.0 * sigma,
                "point {u}: {freq} vs {expected}"
            );
        }
    }

    #[test]
    fn payload_bit_widths() {
        assert_eq!(fano_pub().payload_bits(), 1);
        let p = PubCoinPg::with_geometry(1.0, 25, 5, 3).unwrap();
        assert_eq!(p.payload_bits(), 3);

        let hybrid = PubCoinHpg::new(
            HpgParams::with_shape(5f64.ln(), 8, 2, 3, 2).unwrap(),
        )
        .unwrap();
        assert_eq!(hybrid.payload_bits(), 2);
    }

    #[test]
    fn hybrid_capacity_is_enforced() {
        // Block size 7 > q^(t-1) = 4.
        assert!(matches!(
            PubCoinHpg::new(HpgParams::with_shape(5f64.ln(), 14, 2, 3, 2).unwrap()),
            Err(Error::ParameterOverflow(_))
        ));
        let ok = PubCoinHpg::new(HpgParams::with_shape(5f64.ln(), 8, 2, 3, 2).unwrap());
        assert!(ok.is_ok());
    }

    #[test]
    fn hybrid_shared_zero_probability_is_h_times_p() {
        let p = PubCoinHpg::new(HpgParams::with_shape(5f64.ln(), 8, 2, 3, 2).unwrap()).unwrap();
        // h * p = 2/26 = 1/13.
        let expected = 2.0 / 26.0;
        let draws = 500_000u64;
        let mut zeros = 0u64;
        for seed in 0..draws {
            if p.sample_shared(seed).is_zero() {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / draws as f64;
        let sigma = (expected * (1.0 - expected) / draws as f64).sqrt();
        assert!((freq - expected).abs() < 5.0 * sigma, "freq {freq}");
        // Conditional block split: 3/4 correct, 1/4 other.
        assert!((p.correct_block_prob() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn wire_round_trips() {
        let p = fano_pub();
        for a in 0..2u32 {
            let bytes = p.message_to_bytes(a).unwrap();
            assert_eq!(p.message_from_bytes(bytes).unwrap(), a);
        }
        assert!(p.message_from_bytes([9, 0]).is_err());

        let hybrid =
            PubCoinHpg::new(HpgParams::with_shape(5f64.ln(), 8, 2, 3, 2).unwrap()).unwrap();
        let bytes = hybrid.message_to_bytes(1, 1).unwrap();
        assert_eq!(hybrid.message_from_bytes(bytes).unwrap(), (1, 1));
        assert!(hybrid.message_from_bytes([3, 0, 0, 0]).is_err());
    }
}
