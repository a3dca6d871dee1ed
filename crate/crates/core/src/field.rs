//! Prime-field arithmetic with constant-time division.
//!
//! A [`Field`] stores antilog/log tables for a fixed multiplicative
//! generator, so inversion is two lookups instead of an extended-Euclid
//! loop. Elements are plain `u32` values in `[0, q)`.

use crate::error::{Error, Result};

/// Largest supported modulus (exclusive bound is 2^16).
pub const MAX_MODULUS: u64 = 1 << 16;

/// A prime field `F_q` with generator power tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    modulus: u32,
    generator: u32,
    /// `antilog[i] = g^i mod q` for `i` in `[0, q-1)`.
    antilog: Vec<u32>,
    /// `log[x] = i` with `antilog[i] = x`; entry 0 is unused.
    log: Vec<u32>,
}

impl Field {
    /// Builds the field `F_q`, scanning `g = 1, 2, 3, ...` for the smallest
    /// generator so construction is deterministic.
    pub fn new(q: u64) -> Result<Self> {
        if q > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(q));
        }
        if !is_prime(q) {
            return Err(Error::NonPrimeModulus(q));
        }
        let q = q as u32;
        let generator = find_generator(q);
        let order = (q - 1) as usize;
        let mut antilog = vec![0u32; order.max(1)];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u64;
        for (i, slot) in antilog.iter_mut().enumerate() {
            *slot = x as u32;
            log[x as usize] = i as u32;
            x = x * generator as u64 % q as u64;
        }
        Ok(Field {
            modulus: q,
            generator,
            antilog,
            log,
        })
    }

    /// The prime modulus `q`.
    #[inline]
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// The generator whose powers fill the tables.
    #[inline]
    pub fn generator(&self) -> u32 {
        self.generator
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.modulus - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        (a as u64 * b as u64 % self.modulus as u64) as u32
    }

    /// Multiplicative inverse via one log and one antilog lookup.
    #[inline]
    pub fn inv(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let order = self.modulus - 1;
        if order == 0 {
            // q = 2: the only unit is its own inverse.
            return Ok(1);
        }
        let i = self.log[a as usize];
        Ok(self.antilog[((order - i) % order) as usize])
    }

    /// `a / b`, defined for `b != 0`.
    #[inline]
    pub fn div(&self, a: u32, b: u32) -> Result<u32> {
        Ok(self.mul(a, self.inv(b)?))
    }
}

/// Trial-division primality test; sufficient for moduli below 2^16.
pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d as u64 * d as u64 <= n as u64 {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(mut base: u64, mut exp: u32, modulus: u64) -> u64 {
    let mut acc = 1u64;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    acc
}

/// Smallest generator of `F_q^*`: `g` generates iff `g^((q-1)/p) != 1`
/// for every prime factor `p` of `q - 1`.
fn find_generator(q: u32) -> u32 {
    if q == 2 {
        return 1;
    }
    let factors = prime_factors(q - 1);
    for g in 2..q {
        if factors
            .iter()
            .all(|&p| pow_mod(g as u64, (q - 1) / p, q as u64) != 1)
        {
            return g;
        }
    }
    unreachable!("every prime field has a generator");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composite_modulus() {
        assert_eq!(Field::new(6), Err(Error::NonPrimeModulus(6)));
        assert_eq!(Field::new(0), Err(Error::NonPrimeModulus(0)));
        assert_eq!(Field::new(1), Err(Error::NonPrimeModulus(1)));
    }

    #[test]
    fn rejects_oversized_modulus() {
        assert_eq!(Field::new(1 << 17), Err(Error::ModulusTooLarge(1 << 17)));
    }

    #[test]
    fn table_round_trip_q7() {
        let f = Field::new(7).unwrap();
        for x in 1..7u32 {
            assert_eq!(f.antilog[f.log[x as usize] as usize], x);
        }
        for (i, &a) in f.antilog.iter().enumerate() {
            assert_eq!(f.log[a as usize] as usize, i);
        }
    }

    #[test]
    fn q151_has_full_tables() {
        let f = Field::new(151).unwrap();
        assert_eq!(f.antilog.len(), 150);
        let mut seen = vec![false; 151];
        for &a in &f.antilog {
            assert!(!seen[a as usize], "generator power repeated");
            seen[a as usize] = true;
        }
    }

    #[test]
    fn small_arithmetic_examples() {
        let f7 = Field::new(7).unwrap();
        assert_eq!(f7.mul(3, 5), 1);
        assert_eq!(f7.inv(3).unwrap(), 5);
        let f5 = Field::new(5).unwrap();
        assert_eq!(f5.neg(2), 3);
        assert_eq!(f5.inv(0), Err(Error::ZeroInverse));
        assert_eq!(f5.inv(1).unwrap(), 1);
        for q in [2u64, 3, 5, 7] {
            let f = Field::new(q).unwrap();
            for x in 0..q as u32 {
                assert_eq!(f.add(0, x), x);
            }
        }
    }

    #[test]
    fn inverse_exhaustive_up_to_257() {
        for q in (2u64..=257).filter(|&q| is_prime(q)) {
            let f = Field::new(q).unwrap();
            for a in 1..q as u32 {
                let inv = f.inv(a).unwrap();
                assert_eq!(f.mul(a, inv), 1, "q={q} a={a}");
            }
        }
    }

    #[test]
    fn field_axioms_small_q() {
        for q in [2u64, 3, 5, 7, 11] {
            let f = Field::new(q).unwrap();
            let q = q as u32;
            for a in 0..q {
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.sub(f.add(a, b), b), a);
                    for c in 0..q {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        assert_eq!(Field::new(151).unwrap(), Field::new(151).unwrap());
        assert_eq!(Field::new(2).unwrap().generator(), 1);
    }

    #[test]
    fn generator_has_full_order() {
        for q in [3u64, 5, 7, 11, 151, 257, 65521] {
            let f = Field::new(q).unwrap();
            let g = f.generator();
            for &p in &prime_factors(f.modulus() - 1) {
                assert_ne!(
                    pow_mod(g as u64, (f.modulus() - 1) / p, q),
                    1,
                    "g={g} fails at q={q}, p={p}"
                );
            }
        }
    }
}
