//! The PI-RAPPOR mechanism with a fast dynamic-programming decoder.
//!
//! Inputs are vectors of `F_q^t`; a message is an affine form `(a, b)` over
//! `F_q^t x F_q`, favored for input `v` exactly when `<a, v> + b = 0`. The
//! client samples the output distribution directly (probability
//! `e^eps * p` on the `q^t` favored forms, `p` elsewhere). Decoding reuses
//! the prefix dynamic program without the projective reductions, for
//! `O(t q^(t+2))` total time over the `q^(t+1)` message universe.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{is_prime, Field};
use crate::pg::{CountVector, EstimateVector, EXACT_MODE_LIMIT};

/// A message: coefficient vector plus constant term of an affine form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiRapporMessage {
    pub coeffs: Vec<u32>,
    pub constant: u32,
}

/// Derived parameters of the mechanism.
#[derive(Debug, Clone)]
pub struct PiRapporParams {
    epsilon: f64,
    field: Field,
    dim: u32,
    num_values: u64,
    base_prob: f64,
    alpha: f64,
    beta: f64,
}

impl PiRapporParams {
    /// Derives parameters: the largest prime `q` below `e^eps + 1` and the
    /// smallest `t` with `q^t >= k`.
    pub fn derive(epsilon: f64, num_values: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let q = largest_prime_below(epsilon.exp() + 1.0).ok_or_else(|| {
            Error::InvalidConfig(format!("no prime below e^eps + 1 for epsilon={epsilon}"))
        })?;
        let mut t = 1u32;
        let mut span = q;
        while span < num_values {
            span = span
                .checked_mul(q)
                .filter(|&s| s <= 1 << 63)
                .ok_or_else(|| {
                    Error::ParameterOverflow(format!("q^t overflows for q={q}, k={num_values}"))
                })?;
            t += 1;
        }
        Self::with_shape(epsilon, num_values, q, t)
    }

    /// Builds parameters with `(q, t)` pinned.
    pub fn with_shape(epsilon: f64, num_values: u64, q: u64, t: u32) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let field = Field::new(q)?;
        let span = checked_pow(q, t)?;
        checked_pow(q, t + 1)?; // message universe must fit as well
        if num_values > span {
            return Err(Error::ParameterOverflow(format!(
                "k={num_values} exceeds q^t={span}"
            )));
        }
        let e = epsilon.exp();
        let qf = q as f64;
        let base_prob = 1.0 / ((e + qf - 1.0) * span as f64);
        let alpha = qf * (e + qf - 1.0) / ((e - 1.0) * (qf - 1.0));
        let beta = -(e + qf - 1.0) / ((e - 1.0) * (qf - 1.0));
        Ok(PiRapporParams {
            epsilon,
            field,
            dim: t,
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
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Input vector length `t`.
    #[inline]
    pub fn dim(&self) -> u32 {
        self.dim
    }

    #[inline]
    pub fn num_values(&self) -> u64 {
        self.num_values
    }

    /// Input-vector universe `q^t`.
    #[inline]
    pub fn input_span(&self) -> u64 {
        (self.field.modulus() as u64).pow(self.dim)
    }

    /// Message universe `q^(t+1)`.
    #[inline]
    pub fn message_universe(&self) -> u64 {
        self.input_span() * self.field.modulus() as u64
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

    /// Base-`q` digits of a value, most significant first.
    pub fn value_to_vector(&self, value: u64) -> Result<Vec<u32>> {
        if value >= self.num_values {
            return Err(Error::InputOutOfRange {
                value,
                k: self.num_values,
            });
        }
        let q = self.field.modulus() as u64;
        let mut digits = vec![0u32; self.dim as usize];
        let mut rest = value;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % q) as u32;
            rest /= q;
        }
        Ok(digits)
    }

    /// Flat index of a message, `a * q + b` with `a` read as base-`q` digits.
    pub fn message_index(&self, message: &PiRapporMessage) -> u64 {
        let q = self.field.modulus() as u64;
        let mut acc = 0u64;
        for &c in &message.coeffs {
            acc = acc * q + c as u64;
        }
        acc * q + message.constant as u64
    }

    /// Inverse of [`PiRapporParams::message_index`].
    pub fn message_from_index(&self, index: u64) -> Result<PiRapporMessage> {
        if index >= self.message_universe() {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.message_universe(),
            });
        }
        let q = self.field.modulus() as u64;
        let constant = (index % q) as u32;
        let mut rest = index / q;
        let mut coeffs = vec![0u32; self.dim as usize];
        for slot in coeffs.iter_mut().rev() {
            *slot = (rest % q) as u32;
            rest /= q;
        }
        Ok(PiRapporMessage { coeffs, constant })
    }

    /// Randomizes one input value into an affine form.
    pub fn encode<R: Rng + ?Sized>(&self, value: u64, rng: &mut R) -> Result<PiRapporMessage> {
        let v = self.value_to_vector(value)?;
        let q = self.field.modulus();
        let e = self.epsilon.exp();
        let p_in = e * self.base_prob * self.input_span() as f64;
        if rng.random::<f64>() < p_in {
            // Uniform favored form: any coefficients, constant forced.
            let coeffs: Vec<u32> = (0..self.dim).map(|_| rng.random_range(0..q)).collect();
            let constant = self.field.neg(self.inner(&coeffs, &v));
            Ok(PiRapporMessage { coeffs, constant })
        } else {
            loop {
                let coeffs: Vec<u32> = (0..self.dim).map(|_| rng.random_range(0..q)).collect();
                let constant = rng.random_range(0..q);
                if self.field.add(self.inner(&coeffs, &v), constant) != 0 {
                    return Ok(PiRapporMessage { coeffs, constant });
                }
            }
        }
    }

    fn inner(&self, a: &[u32], v: &[u32]) -> u32 {
        let q = self.field.modulus() as u64;
        let mut acc = 0u64;
        for (&x, &y) in a.iter().zip(v) {
            acc = (acc + x as u64 * y as u64) % q;
        }
        acc as u32
    }

    /// Exact message distribution over flat indices; small universes only.
    pub fn message_distribution(&self, value: u64) -> Result<Vec<f64>> {
        let universe = self.message_universe();
        if universe > EXACT_MODE_LIMIT {
            return Err(Error::TooLargeForExactMode(universe));
        }
        let v = self.value_to_vector(value)?;
        let q = self.field.modulus() as u64;
        let favored = self.epsilon.exp() * self.base_prob;
        let mut dist = vec![self.base_prob; universe as usize];
        for a_val in 0..self.input_span() {
            let a = self.digits(a_val);
            let b = self.field.neg(self.inner(&a, &v)) as u64;
            dist[(a_val * q + b) as usize] = favored;
        }
        Ok(dist)
    }

    fn digits(&self, value: u64) -> Vec<u32> {
        let q = self.field.modulus() as u64;
        let mut digits = vec![0u32; self.dim as usize];
        let mut rest = value;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % q) as u32;
            rest /= q;
        }
        digits
    }

    /// Estimates via direct enumeration of every favored form.
    pub fn decode_naive(&self, y: &CountVector) -> Result<EstimateVector> {
        self.check_universe(y)?;
        let sums = self.subset_sums_naive(y.counts());
        Ok(self.estimates_from_sums(&sums, y.total()))
    }

    /// Estimates via the dynamic program; identical integer sums to
    /// [`PiRapporParams::decode_naive`].
    pub fn decode_dp(&self, y: &CountVector) -> Result<EstimateVector> {
        self.check_universe(y)?;
        let sums = self.subset_sums_dp(y.counts());
        Ok(self.estimates_from_sums(&sums, y.total()))
    }

    fn check_universe(&self, y: &CountVector) -> Result<()> {
        if y.counts().len() as u64 != self.message_universe() {
            return Err(Error::UniverseMismatch {
                left: self.message_universe(),
                right: y.counts().len() as u64,
            });
        }
        Ok(())
    }

    fn estimates_from_sums(&self, sums: &[u64], total: u64) -> EstimateVector {
        let offset = self.beta * total as f64;
        let values = sums[..self.num_values as usize]
            .iter()
            .map(|&s| self.alpha * s as f64 + offset)
            .collect();
        EstimateVector { values }
    }

    /// Favored-form sums for every input vector, by direct enumeration.
    pub fn subset_sums_naive(&self, counts: &[u64]) -> Vec<u64> {
        let q = self.field.modulus() as u64;
        (0..self.input_span())
            .map(|v_val| {
                let v = self.digits(v_val);
                (0..self.input_span())
                    .map(|a_val| {
                        let a = self.digits(a_val);
                        let b = self.field.neg(self.inner(&a, &v)) as u64;
                        counts[(a_val * q + b) as usize]
                    })
                    .sum()
            })
            .collect()
    }

    /// Favored-form sums for every input vector via the dynamic program.
    ///
    /// The state `f_j(a, b, z)` sums counts of messages `(u, w)` whose
    /// length-`j` coefficient prefix is `a` and whose suffix satisfies
    /// `<suffix, b> + w = z`; the base layer `f_t(a, _, z) = y[a, z]` is the
    /// count array itself, and each step extends the prefix by one digit.
    pub fn subset_sums_dp(&self, counts: &[u64]) -> Vec<u64> {
        let field = &self.field;
        let q = field.modulus() as u64;
        let t = self.dim;
        let span = self.input_span();

        // Layer t reinterprets counts as f_t indexed by (a, z).
        let mut prev = counts.to_vec();
        // Middle layers j = t-1 down to 1; layer j is indexed by
        // (a in q^j, b in q^(t-j), z) as (a * q^(t-j) + b) * q + z.
        for j in (1..t).rev() {
            let suffix_span = q.pow(t - j - 1); // length of b at layer j+1
            let b_span = q.pow(t - j);
            let a_span = q.pow(j);
            let mut cur = vec![0u64; (a_span * b_span * q) as usize];
            for a_val in 0..a_span {
                for b_val in 0..b_span {
                    let b1 = (b_val / suffix_span) as u32;
                    let b_suffix = b_val % suffix_span;
                    for z in 0..q {
                        let mut acc = 0u64;
                        for i in 0..q {
                            let z_next =
                                field.sub(z as u32, field.mul(i as u32, b1)) as u64;
                            acc += prev[(((a_val * q + i) * suffix_span + b_suffix) * q
                                + z_next) as usize];
                        }
                        cur[((a_val * b_span + b_val) * q + z) as usize] = acc;
                    }
                }
            }
            prev = cur;
        }

        // Final layer: empty prefix, b = v, z = 0 only.
        let suffix_span = q.pow(t - 1);
        let mut out = vec![0u64; span as usize];
        for (v_val, slot) in out.iter_mut().enumerate() {
            let v1 = (v_val as u64 / suffix_span) as u32;
            let v_suffix = v_val as u64 % suffix_span;
            let mut acc = 0u64;
            for i in 0..q {
                let z_next = field.neg(field.mul(i as u32, v1)) as u64;
                acc += prev[((i * suffix_span + v_suffix) * q + z_next) as usize];
            }
            *slot = acc;
        }
        out
    }

    /// Serializes a message as `t + 1` field elements, 16-bit little endian.
    pub fn message_to_bytes(&self, message: &PiRapporMessage) -> Result<Vec<u8>> {
        let q = self.field.modulus();
        if message.coeffs.len() != self.dim as usize
            || message.coeffs.iter().any(|&c| c >= q)
            || message.constant >= q
        {
            return Err(Error::MalformedMessage("element out of field range".into()));
        }
        let mut out = Vec::with_capacity(2 * (self.dim as usize + 1));
        for &c in &message.coeffs {
            out.extend_from_slice(&(c as u16).to_le_bytes());
        }
        out.extend_from_slice(&(message.constant as u16).to_le_bytes());
        Ok(out)
    }

    pub fn message_from_bytes(&self, bytes: &[u8]) -> Result<PiRapporMessage> {
        let expected = 2 * (self.dim as usize + 1);
        if bytes.len() != expected {
            return Err(Error::MalformedMessage(format!(
                "expected {expected} bytes, got {}",
                bytes.len()
            )));
        }
        let q = self.field.modulus();
        let elements: Vec<u32> = bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) as u32)
            .collect();
        if elements.iter().any(|&e| e >= q) {
            return Err(Error::MalformedMessage("element out of field range".into()));
        }
        let (constant, coeffs) = elements.split_last().expect("nonempty");
        Ok(PiRapporMessage {
            coeffs: coeffs.to_vec(),
            constant: *constant,
        })
    }
}

/// Largest prime strictly below `target`.
fn largest_prime_below(target: f64) -> Option<u64> {
    let mut candidate = if target.fract() == 0.0 {
        (target as u64).saturating_sub(1)
    } else {
        target.floor() as u64
    };
    while candidate >= 2 {
        if is_prime(candidate) {
            return Some(candidate);
        }
        candidate -= 1;
    }
    None
}

fn checked_pow(q: u64, exp: u32) -> Result<u64> {
    let mut acc = 1u64;
    for _ in 0..exp {
        acc = acc
            .checked_mul(q)
            .filter(|&a| a <= 1 << 63)
            .ok_or_else(|| Error::ParameterOverflow(format!("q^{exp} overflows for q={q}")))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// eps = ln 2 with (q=3, t=1) pinned: p = 1/12, alpha = 6, beta = -2.
    fn small_params() -> PiRapporParams {
        PiRapporParams::with_shape(2f64.ln(), 3, 3, 1).unwrap()
    }

    #[test]
    fn derive_examples() {
        let p = PiRapporParams::derive(5.0, 22_000).unwrap();
        assert_eq!(p.field().modulus(), 149);
        assert_eq!(p.dim(), 2);

        let p = PiRapporParams::derive(5.0, 3_307_948).unwrap();
        assert_eq!(p.field().modulus(), 149);
        assert_eq!(p.dim(), 3);
        assert_eq!(p.input_span(), 3_307_949);

        // e^(ln 2) + 1 = 3: the largest prime strictly below is 2.
        let p = PiRapporParams::derive(2f64.ln(), 4).unwrap();
        assert_eq!(p.field().modulus(), 2);
    }

    #[test]
    fn pinned_coefficients() {
        let p = small_params();
        assert!((p.base_prob() - 1.0 / 12.0).abs() < 1e-15);
        assert!((p.alpha() - 6.0).abs() < 1e-12);
        assert!((p.beta() + 2.0).abs() < 1e-12);
        // Unbiasedness identities: 6*6/12 - 2 = 1 and 6*4/12 - 2 = 0.
        assert!((p.alpha() * 6.0 / 12.0 + p.beta() - 1.0).abs() < 1e-12);
        assert!((p.alpha() * 4.0 / 12.0 + p.beta()).abs() < 1e-12);
    }

    #[test]
    fn exact_distribution_small_example() {
        let p = small_params();
        // v = 1: favored forms (0,0), (1,2), (2,1) at flat indices 0, 5, 7.
        let dist = p.message_distribution(1).unwrap();
        for (i, &prob) in dist.iter().enumerate() {
            let expected = if [0, 5, 7].contains(&i) {
                2.0 / 12.0
            } else {
                1.0 / 12.0
            };
            assert!((prob - expected).abs() < 1e-12, "index {i}");
        }
        let sum: f64 = dist.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let max = dist.iter().cloned().fold(f64::MIN, f64::max);
        let min = dist.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max / min - 2.0).abs() < 1e-12);
    }

    #[test]
    fn encode_marginal_matches_exact_distribution() {
        let p = small_params();
        let dist = p.message_distribution(2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let draws = 120_000;
        let mut counts = vec![0u64; 9];
        for _ in 0..draws {
            let m = p.encode(2, &mut rng).unwrap();
            counts[p.message_index(&m) as usize] += 1;
        }
        for (i, &expected) in dist.iter().enumerate() {
            let freq = counts[i] as f64 / draws as f64;
            let sigma = (expected * (1.0 - expected) / draws as f64).sqrt();
            assert!((freq - expected).abs() < 5.0 * sigma, "index {i}: {freq}");
        }
    }

    #[test]
    fn dp_equals_naive_on_random_counts() {
        let mut rng = ChaCha12Rng::seed_from_u64(555);
        for q in [2u64, 3, 5] {
            for t in [1u32, 2, 3] {
                let p = PiRapporParams::with_shape(1.0, q.pow(t), q, t).unwrap();
                for _ in 0..30 {
                    let counts: Vec<u64> = (0..p.message_universe())
                        .map(|_| rng.random_range(0..500))
                        .collect();
                    assert_eq!(
                        p.subset_sums_dp(&counts),
                        p.subset_sums_naive(&counts),
                        "q={q} t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_count_decode() {
        let p = PiRapporParams::with_shape(2f64.ln(), 9, 3, 2).unwrap();
        let message = PiRapporMessage {
            coeffs: vec![1, 2],
            constant: 1,
        };
        let mut y = CountVector::new(p.message_universe());
        y.add(p.message_index(&message)).unwrap();
        let est = p.decode_dp(&y).unwrap();
        for v in 0..9u64 {
            let vec = p.value_to_vector(v).unwrap();
            let favored =
                p.field().add(p.inner(&message.coeffs, &vec), message.constant) == 0;
            let expected = if favored { p.alpha() + p.beta() } else { p.beta() };
            assert!((est.values[v as usize] - expected).abs() < 1e-12, "v={v}");
        }

        let zeros = p.decode_naive(&CountVector::new(p.message_universe())).unwrap();
        assert!(zeros.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn expected_estimates_are_one_hot_in_floats() {
        let p = small_params();
        for v in 0..3u64 {
            let dist = p.message_distribution(v).unwrap();
            for w in 0..3u64 {
                let wv = p.value_to_vector(w).unwrap();
                let mut expectation = 0.0;
                for (flat, prob) in dist.iter().enumerate() {
                    let m = p.message_from_index(flat as u64).unwrap();
                    let favored = p.field.add(p.inner(&m.coeffs, &wv), m.constant) == 0;
                    expectation += prob * (if favored { p.alpha() } else { 0.0 } + p.beta());
                }
                let target = if v == w { 1.0 } else { 0.0 };
                assert!(
                    (expectation - target).abs() < 1e-10,
                    "v={v} w={w}: {expectation}"
                );
            }
        }
    }

    #[test]
    fn wire_round_trip() {
        let p = PiRapporParams::with_shape(1.0, 25, 5, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for v in 0..25 {
            let m = p.encode(v, &mut rng).unwrap();
            let bytes = p.message_to_bytes(&m).unwrap();
            assert_eq!(bytes.len(), 6);
            assert_eq!(p.message_from_bytes(&bytes).unwrap(), m);
        }
        assert!(matches!(
            p.message_from_bytes(&[0, 0]),
            Err(Error::MalformedMessage(_))
        ));
        assert!(matches!(
            p.message_from_bytes(&[9, 0, 0, 0, 0, 0]),
            Err(Error::MalformedMessage(_))
        ));
    }

    #[test]
    fn value_embedding_round_trips() {
        let p = PiRapporParams::with_shape(1.0, 25, 5, 2).unwrap();
        for v in 0..25u64 {
            let vec = p.value_to_vector(v).unwrap();
            let back = vec.iter().fold(0u64, |acc, &d| acc * 5 + d as u64);
            assert_eq!(back, v);
        }
        assert!(matches!(
            p.value_to_vector(25),
            Err(Error::InputOutOfRange { .. })
        ));
    }
}
