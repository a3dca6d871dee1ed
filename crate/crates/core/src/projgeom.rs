//! Points of the projective space `P(F_q^t)` and their subspaces.
//!
//! Every projective point is named by its canonical representative (first
//! nonzero coordinate equal to 1) and addressed by a dense integer index.
//! The index layout is fixed: points whose first nonzero coordinate sits at
//! position `j` occupy a contiguous block of size `q^(t-1-j)`, blocks ordered
//! by increasing `j`, and within a block the suffix after the leading 1 is
//! read as a base-`q` number, leftmost digit most significant.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::Field;

/// Dense rank of a projective point in `[0, num_points)`.
pub type PointIndex = u64;

/// A nonzero vector whose first nonzero coordinate is 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalVector {
    coords: Vec<u32>,
}

impl CanonicalVector {
    /// Wraps a coordinate vector, verifying canonicity.
    pub fn new(coords: Vec<u32>, field: &Field) -> Result<Self> {
        let lead = coords.iter().position(|&c| c != 0);
        match lead {
            None => Err(Error::NotCanonical),
            Some(j) if coords[j] != 1 => Err(Error::NotCanonical),
            Some(_) => {
                if coords.iter().any(|&c| c >= field.modulus()) {
                    return Err(Error::NotCanonical);
                }
                Ok(CanonicalVector { coords })
            }
        }
    }

    #[inline]
    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    /// Position of the leading 1.
    #[inline]
    pub fn leading_index(&self) -> usize {
        self.coords
            .iter()
            .position(|&c| c != 0)
            .expect("canonical vectors are nonzero")
    }
}

/// Number of canonical vectors of length `dim` over `F_q`: `(q^dim - 1)/(q - 1)`.
pub fn canonical_count(q: u64, dim: u32) -> Result<u64> {
    let mut total: u64 = 0;
    let mut block: u64 = 1;
    for _ in 0..dim {
        total = total
            .checked_add(block)
            .ok_or_else(|| Error::ParameterOverflow(format!("q={q}, dim={dim}")))?;
        block = block
            .checked_mul(q)
            .ok_or_else(|| Error::ParameterOverflow(format!("q={q}, dim={dim}")))?;
        if block > (1u64 << 63) {
            return Err(Error::ParameterOverflow(format!("q^dim > 2^63 for q={q}, dim={dim}")));
        }
    }
    Ok(total)
}

/// Decodes a dense index into the canonical vector of length `dim` it names.
pub fn index_to_coords(q: u64, dim: u32, index: u64) -> Result<Vec<u32>> {
    let total = canonical_count(q, dim)?;
    if index >= total {
        return Err(Error::IndexOutOfRange { index, size: total });
    }
    let dim = dim as usize;
    let mut coords = vec![0u32; dim];
    let mut start = 0u64;
    let mut block = q.pow((dim - 1) as u32);
    for j in 0..dim {
        if index < start + block {
            let mut offset = index - start;
            coords[j] = 1;
            for pos in (j + 1..dim).rev() {
                coords[pos] = (offset % q) as u32;
                offset /= q;
            }
            return Ok(coords);
        }
        start += block;
        block /= q;
    }
    unreachable!("index verified in range");
}

/// Encodes a canonical vector of length `dim` into its dense index.
pub fn coords_to_index(q: u64, dim: u32, coords: &[u32]) -> Result<u64> {
    debug_assert_eq!(coords.len(), dim as usize);
    let lead = coords
        .iter()
        .position(|&c| c != 0)
        .ok_or(Error::NotCanonical)?;
    if coords[lead] != 1 {
        return Err(Error::NotCanonical);
    }
    let dim = dim as usize;
    let mut start = 0u64;
    let mut block = q.pow((dim - 1) as u32);
    for _ in 0..lead {
        start += block;
        block /= q;
    }
    let mut offset = 0u64;
    for &c in &coords[lead + 1..] {
        offset = offset * q + c as u64;
    }
    Ok(start + offset)
}

/// The projective space `P(F_q^t)` together with its subspace cardinalities.
#[derive(Debug, Clone)]
pub struct Geometry {
    field: Field,
    dim: u32,
    num_points: u64,
    subspace_size: u64,
    intersection_size: u64,
}

impl Geometry {
    /// Builds the geometry for dimension `t >= 2`, rejecting parameter
    /// combinations where `q^t` would overflow 2^63.
    pub fn new(field: Field, dim: u32) -> Result<Self> {
        if dim < 2 {
            return Err(Error::ParameterOverflow(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        let q = field.modulus() as u64;
        let num_points = canonical_count(q, dim)?;
        let subspace_size = canonical_count(q, dim - 1)?;
        let intersection_size = canonical_count(q, dim - 2)?;
        debug_assert!(subspace_size * subspace_size >= num_points * intersection_size);
        Ok(Geometry {
            field,
            dim,
            num_points,
            subspace_size,
            intersection_size,
        })
    }

    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Vector-space dimension `t`.
    #[inline]
    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Number of projective points, `(q^t - 1)/(q - 1)`.
    #[inline]
    pub fn num_points(&self) -> u64 {
        self.num_points
    }

    /// Size of each hyperplane subspace `S(v)`, `(q^(t-1) - 1)/(q - 1)`.
    #[inline]
    pub fn subspace_size(&self) -> u64 {
        self.subspace_size
    }

    /// Size of the intersection of two distinct subspaces, `(q^(t-2) - 1)/(q - 1)`.
    #[inline]
    pub fn intersection_size(&self) -> u64 {
        self.intersection_size
    }

    /// Canonical vector for a dense point index.
    pub fn index_to_point(&self, index: PointIndex) -> Result<CanonicalVector> {
        let coords = index_to_coords(self.field.modulus() as u64, self.dim, index)?;
        Ok(CanonicalVector { coords })
    }

    /// Dense index of a canonical vector.
    pub fn point_to_index(&self, point: &CanonicalVector) -> Result<PointIndex> {
        coords_to_index(self.field.modulus() as u64, self.dim, point.coords())
    }

    /// Scales a nonzero vector so its first nonzero coordinate becomes 1.
    pub fn canonicalize(&self, coords: &[u32]) -> Result<CanonicalVector> {
        let lead = coords
            .iter()
            .position(|&c| c != 0)
            .ok_or(Error::ZeroVector)?;
        let inv = self.field.inv(coords[lead])?;
        let scaled = coords
            .iter()
            .map(|&c| self.field.mul(c, inv))
            .collect::<Vec<_>>();
        Ok(CanonicalVector { coords: scaled })
    }

    /// `sum_j u_j * v_j mod q`.
    pub fn inner_product(&self, u: &[u32], v: &[u32]) -> u32 {
        debug_assert_eq!(u.len(), v.len());
        let q = self.field.modulus() as u64;
        let mut acc = 0u64;
        for (&a, &b) in u.iter().zip(v) {
            acc = (acc + a as u64 * b as u64) % q;
        }
        acc as u32
    }

    /// All point indices `u` with `<u, v> = 0`, ascending.
    ///
    /// Enumerates the kernel of `v` through a fixed basis, one canonical
    /// coefficient vector per projective point, so the cost is
    /// `O(c_set * t^2)` rather than a scan of the whole universe.
    pub fn subspace_members(&self, v: &CanonicalVector) -> Vec<PointIndex> {
        let q = self.field.modulus() as u64;
        let coeff_dim = self.dim - 1;
        let count = canonical_count(q, coeff_dim).expect("within range by construction");
        let mut members = Vec::with_capacity(count as usize);
        for c_idx in 0..count {
            let coeffs = index_to_coords(q, coeff_dim, c_idx).expect("in range");
            let u = self.kernel_combination(v, &coeffs);
            let point = self.canonicalize(&u).expect("kernel vectors are nonzero");
            members.push(self.point_to_index(&point).expect("canonical"));
        }
        members.sort_unstable();
        debug_assert_eq!(members.len() as u64, self.subspace_size);
        members
    }

    /// Linear combination of the kernel basis of `{u : <u, v> = 0}` with the
    /// given coefficients (one per position other than the leading 1 of `v`).
    fn kernel_combination(&self, v: &CanonicalVector, coeffs: &[u32]) -> Vec<u32> {
        let t = self.dim as usize;
        debug_assert_eq!(coeffs.len(), t - 1);
        let lead = v.leading_index();
        let mut u = vec![0u32; t];
        let mut pivot_acc = 0u32;
        let mut ci = 0;
        for pos in 0..t {
            if pos == lead {
                continue;
            }
            let c = coeffs[ci];
            ci += 1;
            u[pos] = c;
            pivot_acc = self
                .field
                .add(pivot_acc, self.field.mul(c, v.coords()[pos]));
        }
        u[lead] = self.field.neg(pivot_acc);
        u
    }

    /// Uniform point of `S(v)`: a uniform nonzero kernel vector, canonicalized.
    pub fn sample_in_subspace<R: Rng + ?Sized>(
        &self,
        v: &CanonicalVector,
        rng: &mut R,
    ) -> PointIndex {
        let q = self.field.modulus();
        let len = self.dim as usize - 1;
        let mut coeffs = vec![0u32; len];
        loop {
            let mut nonzero = false;
            for c in coeffs.iter_mut() {
                *c = rng.random_range(0..q);
                nonzero |= *c != 0;
            }
            if nonzero {
                break;
            }
        }
        let u = self.kernel_combination(v, &coeffs);
        let point = self.canonicalize(&u).expect("kernel vectors are nonzero");
        self.point_to_index(&point).expect("canonical")
    }

    /// Uniform point of the complement of `S(v)`, by rejection sampling.
    pub fn sample_out_subspace<R: Rng + ?Sized>(
        &self,
        v: &CanonicalVector,
        rng: &mut R,
    ) -> PointIndex {
        loop {
            let idx = rng.random_range(0..self.num_points);
            let u = self.index_to_point(idx).expect("in range");
            if self.inner_product(u.coords(), v.coords()) != 0 {
                return idx;
            }
        }
    }
}
