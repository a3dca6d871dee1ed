//! Exact rational oracles for privacy, unbiasedness and public-coin
//! equivalence checks.
//!
//! Every mechanism's message distribution is a two-valued law with ratio
//! `e^eps`, so substituting a rational value for `e^eps` (e.g. 2 for
//! `eps = ln 2`) makes every probability, estimator coefficient and
//! expectation an exact rational. Tests assert identities with tolerance
//! zero on these oracles; the floating-point implementations are checked
//! against them separately.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::Result;
use crate::projgeom::{index_to_coords, CanonicalVector, Geometry, PointIndex};
use crate::pubcoin::star_point;

/// Exact probability type.
pub type Rat = BigRational;

/// Integer as a rational.
pub fn rat(x: u64) -> Rat {
    BigRational::from_integer(BigInt::from(x))
}

/// `n / d` as a rational.
pub fn ratio(n: u64, d: u64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Largest ratio `law_a[u] / law_b[u]` over all message indices and ordered
/// pairs of laws: the exact privacy loss of a mechanism.
pub fn max_privacy_ratio(laws: &[Vec<Rat>]) -> Rat {
    let mut best = Rat::zero();
    for a in laws {
        for b in laws {
            for (pa, pb) in a.iter().zip(b) {
                let r = pa / pb;
                if r > best {
                    best = r;
                }
            }
        }
    }
    best
}

/// Exact projective-geometry mechanism with rational `e^eps`.
pub struct ExactPg {
    geometry: Geometry,
    num_values: u64,
    e_eps: Rat,
    base_prob: Rat,
    alpha: Rat,
    beta: Rat,
}

impl ExactPg {
    pub fn new(geometry: Geometry, e_eps: Rat, num_values: u64) -> Self {
        let k = rat(geometry.num_points());
        let c_set = rat(geometry.subspace_size());
        let c_int = rat(geometry.intersection_size());
        let em1 = &e_eps - Rat::one();
        let base_prob = Rat::one() / (&em1 * &c_set + &k);
        let alpha = (&em1 * &c_set + &k) / (&em1 * (&c_set - &c_int));
        let beta = -(&em1 * &c_int + &c_set) / (&em1 * (&c_set - &c_int));
        ExactPg {
            geometry,
            num_values,
            e_eps,
            base_prob,
            alpha,
            beta,
        }
    }

    #[inline]
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    #[inline]
    pub fn e_eps(&self) -> &Rat {
        &self.e_eps
    }

    #[inline]
    pub fn base_prob(&self) -> &Rat {
        &self.base_prob
    }

    #[inline]
    pub fn alpha(&self) -> &Rat {
        &self.alpha
    }

    #[inline]
    pub fn beta(&self) -> &Rat {
        &self.beta
    }

    /// Message law for an input identified with the given point.
    pub fn law_for_point(&self, point: &CanonicalVector) -> Vec<Rat> {
        let favored = &self.e_eps * &self.base_prob;
        let mut law = vec![self.base_prob.clone(); self.geometry.num_points() as usize];
        for u in self.geometry.subspace_members(point) {
            law[u as usize] = favored.clone();
        }
        law
    }

    /// Message law for a logical value under the dense embedding.
    pub fn law(&self, value: u64) -> Result<Vec<Rat>> {
        Ok(self.law_for_point(&self.geometry.index_to_point(value)?))
    }

    /// Expected estimates for a single user holding `value`; readout uses the
    /// same dense embedding.
    pub fn expected_estimates(&self, value: u64) -> Result<Vec<Rat>> {
        let law = self.law(value)?;
        Ok(self.expected_estimates_for_law(&law, |w| w))
    }

    /// Expected estimates under an arbitrary message law, reading coordinate
    /// `w` off at point `readout(w)`.
    pub fn expected_estimates_for_law<F: Fn(u64) -> PointIndex>(
        &self,
        law: &[Rat],
        readout: F,
    ) -> Vec<Rat> {
        (0..self.num_values)
            .map(|w| {
                let point = self
                    .geometry
                    .index_to_point(readout(w))
                    .expect("readout in range");
                let mass: Rat = self
                    .geometry
                    .subspace_members(&point)
                    .into_iter()
                    .map(|u| law[u as usize].clone())
                    .sum();
                &self.alpha * mass + &self.beta
            })
            .collect()
    }
}

/// Exact hybrid mechanism with rational `e^eps`.
pub struct ExactHpg {
    geometry: Geometry,
    num_blocks: u64,
    num_values: u64,
    block_size: u64,
    e_eps: Rat,
    base_prob: Rat,
    alpha: Rat,
    beta: Rat,
    gamma: Rat,
}

impl ExactHpg {
    pub fn new(geometry: Geometry, e_eps: Rat, num_blocks: u64, num_values: u64) -> Self {
        let b = rat(geometry.num_points());
        let c_set = rat(geometry.subspace_size());
        let c_int = rat(geometry.intersection_size());
        let em1 = &e_eps - Rat::one();
        let bh = &b * rat(num_blocks);
        let base_prob = Rat::one() / (&bh + &em1 * &c_set);
        let alpha = (&bh + &em1 * &c_set) / (&em1 * (&c_set - &c_int));
        let beta = -(&alpha * &c_int) / &c_set;
        let gamma = -((&c_set - &b * &c_int / &c_set) / (&em1 * (&c_set - &c_int)));
        ExactHpg {
            geometry,
            num_blocks,
            num_values,
            block_size: num_values.div_ceil(num_blocks),
            e_eps,
            base_prob,
            alpha,
            beta,
            gamma,
        }
    }

    #[inline]
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    #[inline]
    pub fn base_prob(&self) -> &Rat {
        &self.base_prob
    }

    #[inline]
    pub fn alpha(&self) -> &Rat {
        &self.alpha
    }

    #[inline]
    pub fn beta(&self) -> &Rat {
        &self.beta
    }

    #[inline]
    pub fn gamma(&self) -> &Rat {
        &self.gamma
    }

    /// Output universe size `b * h`, laws flattened as `block * b + point`.
    pub fn universe(&self) -> u64 {
        self.geometry.num_points() * self.num_blocks
    }

    /// Message law for an input at `(block, point)`.
    pub fn law_for_position(&self, block: u64, point: &CanonicalVector) -> Vec<Rat> {
        let favored = &self.e_eps * &self.base_prob;
        let mut law = vec![self.base_prob.clone(); self.universe() as usize];
        let offset = block * self.geometry.num_points();
        for u in self.geometry.subspace_members(point) {
            law[(offset + u) as usize] = favored.clone();
        }
        law
    }

    /// Message law for a logical value under the dense within-block embedding.
    pub fn law(&self, value: u64) -> Result<Vec<Rat>> {
        let (block, within) = self.position(value);
        Ok(self.law_for_position(block, &self.geometry.index_to_point(within)?))
    }

    fn position(&self, value: u64) -> (u64, u64) {
        (value / self.block_size, value % self.block_size)
    }

    /// Expected estimates for one user holding `value`, dense embedding.
    pub fn expected_estimates(&self, value: u64) -> Result<Vec<Rat>> {
        let law = self.law(value)?;
        let positions = (0..self.num_values)
            .map(|w| self.position(w))
            .collect::<Vec<_>>();
        Ok(self.expected_estimates_for_law(&law, &positions))
    }

    /// Expected estimates under an arbitrary output law; coordinate `w` is
    /// read off at block `positions[w].0`, point `positions[w].1`.
    pub fn expected_estimates_for_law(
        &self,
        law: &[Rat],
        positions: &[(u64, PointIndex)],
    ) -> Vec<Rat> {
        let b = self.geometry.num_points();
        positions
            .iter()
            .map(|&(block, within)| {
                let point = self.geometry.index_to_point(within).expect("in range");
                let offset = block * b;
                let favored_mass: Rat = self
                    .geometry
                    .subspace_members(&point)
                    .into_iter()
                    .map(|u| law[(offset + u) as usize].clone())
                    .sum();
                let block_mass: Rat = law[(offset as usize)..(offset + b) as usize]
                    .iter()
                    .cloned()
                    .sum();
                &self.alpha * favored_mass + &self.beta * block_mass + &self.gamma
            })
            .collect()
    }
}

/// Exact PI-RAPPOR mechanism with rational `e^eps`.
pub struct ExactPiRappor {
    q: u64,
    dim: u32,
    num_values: u64,
    e_eps: Rat,
    base_prob: Rat,
    alpha: Rat,
    beta: Rat,
}

impl ExactPiRappor {
    pub fn new(q: u64, dim: u32, e_eps: Rat, num_values: u64) -> Self {
        let span = rat(q.pow(dim));
        let qr = rat(q);
        let em1 = &e_eps - Rat::one();
        let base_prob = Rat::one() / ((&e_eps + &qr - Rat::one()) * &span);
        let alpha = &qr * (&e_eps + &qr - Rat::one()) / (&em1 * (&qr - Rat::one()));
        let beta = -(&e_eps + &qr - Rat::one()) / (&em1 * (&qr - Rat::one()));
        ExactPiRappor {
            q,
            dim,
            num_values,
            e_eps,
            base_prob,
            alpha,
            beta,
        }
    }

    #[inline]
    pub fn alpha(&self) -> &Rat {
        &self.alpha
    }

    #[inline]
    pub fn beta(&self) -> &Rat {
        &self.beta
    }

    pub fn universe(&self) -> u64 {
        self.q.pow(self.dim + 1)
    }

    fn digits(&self, value: u64) -> Vec<u64> {
        let mut digits = vec![0u64; self.dim as usize];
        let mut rest = value;
        for slot in digits.iter_mut().rev() {
            *slot = rest % self.q;
            rest /= self.q;
        }
        digits
    }

    fn favored_constant(&self, coeffs: u64, value: u64) -> u64 {
        let a = self.digits(coeffs);
        let v = self.digits(value);
        let mut acc = 0u64;
        for (x, y) in a.iter().zip(&v) {
            acc = (acc + x * y) % self.q;
        }
        (self.q - acc) % self.q
    }

    /// Message law over flat `(coeffs, constant)` indices.
    pub fn law(&self, value: u64) -> Vec<Rat> {
        let favored = &self.e_eps * &self.base_prob;
        let mut law = vec![self.base_prob.clone(); self.universe() as usize];
        for a_val in 0..self.q.pow(self.dim) {
            let b = self.favored_constant(a_val, value);
            law[(a_val * self.q + b) as usize] = favored.clone();
        }
        law
    }

    /// Expected estimates for one user holding `value`.
    pub fn expected_estimates(&self, value: u64) -> Vec<Rat> {
        let law = self.law(value);
        (0..self.num_values)
            .map(|w| {
                let mass: Rat = (0..self.q.pow(self.dim))
                    .map(|a_val| {
                        let b = self.favored_constant(a_val, w);
                        law[(a_val * self.q + b) as usize].clone()
                    })
                    .sum();
                &self.alpha * mass + &self.beta
            })
            .collect()
    }
}

/// Exact k-ary randomized response.
pub struct ExactRr {
    num_values: u64,
    p_true: Rat,
    p_other: Rat,
}

impl ExactRr {
    pub fn new(e_eps: Rat, num_values: u64) -> Self {
        let denom = &e_eps + rat(num_values - 1);
        ExactRr {
            num_values,
            p_true: &e_eps / &denom,
            p_other: Rat::one() / denom,
        }
    }

    pub fn law(&self, value: u64) -> Vec<Rat> {
        let mut law = vec![self.p_other.clone(); self.num_values as usize];
        law[value as usize] = self.p_true.clone();
        law
    }

    pub fn expected_estimates(&self, value: u64) -> Vec<Rat> {
        let law = self.law(value);
        let scale = &self.p_true - &self.p_other;
        law.into_iter()
            .map(|p| (p - &self.p_other) / &scale)
            .collect()
    }
}

/// Exact subset selection; laws enumerate all size-`d` subsets.
pub struct ExactSs {
    num_values: u64,
    subset_size: u64,
    e_eps: Rat,
    subsets: Vec<Vec<u64>>,
}

impl ExactSs {
    pub fn new(e_eps: Rat, num_values: u64, subset_size: u64) -> Self {
        ExactSs {
            num_values,
            subset_size,
            e_eps,
            subsets: enumerate_subsets(num_values, subset_size),
        }
    }

    #[inline]
    pub fn subsets(&self) -> &[Vec<u64>] {
        &self.subsets
    }

    /// Probability of each enumerated subset given the input.
    pub fn law(&self, value: u64) -> Vec<Rat> {
        let containing = binomial(self.num_values - 1, self.subset_size - 1);
        let excluding = binomial(self.num_values - 1, self.subset_size);
        let weight = Rat::one() / (&self.e_eps * rat(containing) + rat(excluding));
        self.subsets
            .iter()
            .map(|s| {
                if s.binary_search(&value).is_ok() {
                    &self.e_eps * &weight
                } else {
                    weight.clone()
                }
            })
            .collect()
    }

    /// Exact per-item inclusion probabilities (true item, other item).
    pub fn inclusion_probs(&self) -> (Rat, Rat) {
        let law = self.law(0);
        let mut incl_true = Rat::zero();
        let mut incl_other = Rat::zero();
        for (s, p) in self.subsets.iter().zip(&law) {
            if s.binary_search(&0).is_ok() {
                incl_true += p;
            }
            if s.binary_search(&1).is_ok() {
                incl_other += p;
            }
        }
        (incl_true, incl_other)
    }

    /// Expected estimates for one user holding `value`.
    pub fn expected_estimates(&self, value: u64) -> Vec<Rat> {
        let law = self.law(value);
        let (incl_true, incl_other) = self.inclusion_probs();
        let scale = &incl_true - &incl_other;
        (0..self.num_values)
            .map(|w| {
                let mass: Rat = self
                    .subsets
                    .iter()
                    .zip(&law)
                    .filter(|(s, _)| s.binary_search(&w).is_ok())
                    .map(|(_, p)| p.clone())
                    .sum();
                (mass - &incl_other) / &scale
            })
            .collect()
    }
}

fn enumerate_subsets(k: u64, d: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(d as usize);
    fn recurse(k: u64, d: u64, start: u64, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if current.len() as u64 == d {
            out.push(current.clone());
            return;
        }
        let remaining = d - current.len() as u64;
        for next in start..=k - remaining {
            current.push(next);
            recurse(k, d, next + 1, current, out);
            current.pop();
        }
    }
    recurse(k, d, 0, &mut current, &mut out);
    out
}

fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc = 1u64;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exact decoded output law of the public-coin plain mechanism.
///
/// The shared vector is all-zero with probability `p` (decoding to the last
/// point) and uniform canonical otherwise; given a nonzero draw the sent
/// element is the aligned one with probability `e^eps / (e^eps + q - 1)`.
pub fn pub_coin_pg_decoded_law(pg: &ExactPg, value: u64) -> Result<Vec<Rat>> {
    let g = pg.geometry();
    let v = star_point(g, value)?;
    let q = g.field().modulus();
    let k = g.num_points();
    let c_set = g.subspace_size();
    let mut law = vec![Rat::zero(); k as usize];
    law[(k - 1) as usize] = pg.base_prob().clone();
    let prefix_prob = (Rat::one() - pg.base_prob()) / rat(c_set);
    let qr = rat(q as u64);
    let cond_denom = pg.e_eps() + &qr - Rat::one();
    for c in 0..c_set {
        let prefix = index_to_coords(q as u64, g.dim() - 1, c)?;
        let aligned = solve_aligned(g, &v, &prefix)?;
        for a in 0..q {
            let cond = if a == aligned {
                pg.e_eps() / &cond_denom
            } else {
                Rat::one() / &cond_denom
            };
            let mut coords = prefix.clone();
            coords.push(a);
            let idx = crate::projgeom::coords_to_index(q as u64, g.dim(), &coords)?;
            law[idx as usize] += &prefix_prob * cond;
        }
    }
    Ok(law)
}

/// Exact decoded output law of the public-coin hybrid mechanism.
///
/// The shared vector is all-zero with probability `h * p`; the block report
/// is uniform in that case and otherwise favors the true block with
/// probability `(e^eps + q - 1) p c_set / (1 - h p)`.
pub fn pub_coin_hpg_decoded_law(hpg: &ExactHpg, block: u64, within: u64) -> Result<Vec<Rat>> {
    let g = hpg.geometry();
    let v = star_point(g, within)?;
    let q = g.field().modulus();
    let b = g.num_points();
    let h = hpg.num_blocks;
    let c_set = g.subspace_size();
    let p = hpg.base_prob();
    let zero_prob = rat(h) * p;
    let mut law = vec![Rat::zero(); (b * h) as usize];
    for j in 0..h {
        law[(j * b + b - 1) as usize] = &zero_prob / rat(h);
    }
    let prefix_prob = (Rat::one() - &zero_prob) / rat(c_set);
    let qr = rat(q as u64);
    let correct_block = (hpg.e_eps.clone() + &qr - Rat::one()) * p * rat(c_set)
        / (Rat::one() - &zero_prob);
    let other_block = &qr * p * rat(c_set) / (Rat::one() - &zero_prob);
    let cond_denom = &hpg.e_eps + &qr - Rat::one();
    for c in 0..c_set {
        let prefix = index_to_coords(q as u64, g.dim() - 1, c)?;
        let aligned = solve_aligned(g, &v, &prefix)?;
        for a in 0..q {
            let mut coords = prefix.clone();
            coords.push(a);
            let idx = crate::projgeom::coords_to_index(q as u64, g.dim(), &coords)?;
            // True block: aligned element favored.
            let cond = if a == aligned {
                &hpg.e_eps / &cond_denom
            } else {
                Rat::one() / &cond_denom
            };
            law[(block * b + idx) as usize] += &prefix_prob * &correct_block * cond;
            // Other blocks: uniform element.
            for j in (0..h).filter(|&j| j != block) {
                law[(j * b + idx) as usize] += &prefix_prob * &other_block / &qr;
            }
        }
    }
    Ok(law)
}

/// The unique element `a` with `<v, prefix . a> = 0`, for star-canonical `v`.
fn solve_aligned(g: &Geometry, v: &CanonicalVector, prefix: &[u32]) -> Result<u32> {
    let field = g.field();
    let t = g.dim() as usize;
    let last = v.coords()[t - 1];
    if last == 0 {
        return Err(crate::error::Error::InputNotStarCanonical);
    }
    let head = g.inner_product(&v.coords()[..t - 1], prefix);
    field.div(field.neg(head), last)
}

/// Canonical count shortcut used by tests.
pub fn star_capacity(g: &Geometry) -> u64 {
    g.num_points() - g.subspace_size()
}
