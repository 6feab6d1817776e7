//! Arithmetic in the local ring `Z/p^N`.
//!
//! Every lattice, cochain and endomorphism in this crate lives in `Z/p^N` for
//! a working precision `N`. Elements are stored as canonical representatives
//! in `[0, p^N)`. The modulus is kept below `2^62` so sums never overflow.

use crate::error::{Error, Result};

/// The ring `Z/p^N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ZMod {
    p: u64,
    prec: u32,
    q: u64,
    // p == 2: reduction is a mask and products may wrap.
    pow2: bool,
}

impl ZMod {
    pub fn new(p: u64, prec: u32) -> Result<Self> {
        if p < 2 || !is_prime(p) {
            return Err(Error::Invalid(format!("{p} is not a prime")));
        }
        if prec == 0 {
            return Err(Error::Invalid("precision must be positive".into()));
        }
        let mut q: u64 = 1;
        for _ in 0..prec {
            q = q
                .checked_mul(p)
                .filter(|&q| q <= 1 << 62)
                .ok_or(Error::PrecisionTooLarge { p, prec })?;
        }
        Ok(ZMod { p, prec, q, pow2: p == 2 })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// The precision exponent `N`.
    #[inline]
    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// The modulus `p^N`.
    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Same prime, different precision.
    pub fn with_prec(&self, prec: u32) -> Result<Self> {
        ZMod::new(self.p, prec)
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        if self.pow2 {
            x & (self.q - 1)
        } else {
            x % self.q
        }
    }

    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        if self.pow2 {
            (x as u64) & (self.q - 1)
        } else {
            x.rem_euclid(self.q as i64) as u64
        }
    }

    /// Signed representative in `(-p^N/2, p^N/2]`.
    #[inline]
    pub fn to_i64(&self, x: u64) -> i64 {
        if x > self.q / 2 {
            x as i64 - self.q as i64
        } else {
            x as i64
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.pow2 {
            a.wrapping_mul(b) & (self.q - 1)
        } else {
            ((a as u128 * b as u128) % self.q as u128) as u64
        }
    }

    /// `a - f*b`, the workhorse of elimination.
    #[inline]
    pub fn sub_mul(&self, a: u64, f: u64, b: u64) -> u64 {
        self.sub(a, self.mul(f, b))
    }

    /// p-adic valuation; `N` for zero.
    #[inline]
    pub fn val(&self, x: u64) -> u32 {
        if x == 0 {
            return self.prec;
        }
        if self.pow2 {
            return x.trailing_zeros().min(self.prec);
        }
        let mut v = 0;
        let mut y = x;
        while y.is_multiple_of(self.p) {
            y /= self.p;
            v += 1;
        }
        v
    }

    /// `p^v` reduced mod `p^N` (zero once `v >= N`).
    #[inline]
    pub fn ppow(&self, v: u32) -> u64 {
        if v >= self.prec {
            return 0;
        }
        if self.pow2 {
            return 1 << v;
        }
        self.p.pow(v)
    }

    /// Exact integer division of the representative by `p^v`.
    ///
    /// The result is a representative of `x / p^v` modulo `p^(N-v)`.
    #[inline]
    pub fn div_ppow(&self, x: u64, v: u32) -> u64 {
        debug_assert!(self.val(x) >= v, "{x} not divisible by p^{v}");
        if v == 0 {
            return x;
        }
        if v >= self.prec {
            return 0;
        }
        if self.pow2 {
            x >> v
        } else {
            x / self.p.pow(v)
        }
    }

    /// Inverse of a unit.
    pub fn inv(&self, u: u64) -> u64 {
        debug_assert!(!u.is_multiple_of(self.p), "{u} is not a unit");
        if self.pow2 {
            // Newton iteration doubles the number of correct bits.
            let mut x = u;
            for _ in 0..6 {
                x = x.wrapping_mul(2u64.wrapping_sub(u.wrapping_mul(x)));
            }
            return x & (self.q - 1);
        }
        let (mut a, mut b) = (u as i128, self.q as i128);
        let (mut x0, mut x1) = (1i128, 0i128);
        while b != 0 {
            let t = a / b;
            (a, b) = (b, a - t * b);
            (x0, x1) = (x1, x0 - t * x1);
        }
        x0.rem_euclid(self.q as i128) as u64
    }

    /// Splits `x = p^v * u` with `u` a unit (`u = 1` for zero).
    #[inline]
    pub fn split(&self, x: u64) -> (u32, u64) {
        let v = self.val(x);
        if v >= self.prec {
            (self.prec, 1)
        } else {
            (v, self.div_ppow(x, v))
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Returns `(p, e)` with `n = p^e`, if `n > 1` is a prime power.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    if n < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= n && !n.is_multiple_of(p) {
        p += 1;
    }
    if !n.is_multiple_of(p) {
        p = n;
    }
    let mut m = n;
    let mut e = 0;
    while m.is_multiple_of(p) {
        m /= p;
        e += 1;
    }
    (m == 1).then_some((p, e))
}

/// `v_p(n)` for a positive integer.
pub fn valuation_of(p: u64, mut n: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inverses() {
        for (p, n) in [(2, 10), (3, 5), (5, 4), (2, 62)] {
            let r = ZMod::new(p, n).unwrap();
            for u in [1u64, 3, 7, 11, 13, 29] {
                if u % p == 0 {
                    continue;
                }
                let u = r.reduce(u);
                assert_eq!(r.mul(u, r.inv(u)), 1);
            }
        }
    }

    #[test]
    fn precision_cap() {
        assert!(ZMod::new(2, 62).is_ok());
        assert!(ZMod::new(2, 63).is_err());
        assert!(ZMod::new(4, 3).is_err());
    }

    #[test]
    fn prime_powers() {
        assert_eq!(prime_power(8), Some((2, 3)));
        assert_eq!(prime_power(27), Some((3, 3)));
        assert_eq!(prime_power(12), None);
        assert_eq!(prime_power(1), None);
        assert_eq!(prime_power(7), Some((7, 1)));
    }

    proptest! {
        #[test]
        fn split_recombines(x in 0u64..(1 << 20), p in prop::sample::select(vec![2u64, 3, 5])) {
            let r = ZMod::new(p, 8).unwrap();
            let x = r.reduce(x);
            let (v, u) = r.split(x);
            prop_assert_eq!(r.mul(r.ppow(v), u), x);
            if x != 0 { prop_assert!(u % p != 0); }
        }

        #[test]
        fn signed_roundtrip(x in -1000i64..1000) {
            let r = ZMod::new(3, 9).unwrap();
            prop_assert_eq!(r.to_i64(r.from_i64(x)), x);
        }
    }
}
