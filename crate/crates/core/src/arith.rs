// SPDX-License-Identifier: Apache-2.0

//! Integer primitives shared by the rest of the crate: fundamental
//! discriminants, the Kronecker symbol, splitting of odd primes and a few
//! modular helpers.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("{0} is not a negative fundamental discriminant")]
    NotFundamental(i64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

/// A negative fundamental discriminant, i.e. the discriminant of an
/// imaginary quadratic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct FundamentalDiscriminant(i64);

impl FundamentalDiscriminant {
    pub fn new(d: i64) -> Result<Self, ArithError> {
        if d < 0 && is_fundamental(d) {
            Ok(Self(d))
        } else {
            Err(ArithError::NotFundamental(d))
        }
    }

    /// Skips validation; callers must already know `d` is fundamental.
    pub(crate) fn new_unchecked(d: i64) -> Self {
        debug_assert!(d < 0 && is_fundamental(d));
        Self(d)
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> u64 {
        self.0.unsigned_abs()
    }

    /// Number of roots of unity in the ring of integers.
    pub fn unit_count(self) -> u64 {
        match self.0 {
            -3 => 6,
            -4 => 4,
            _ => 2,
        }
    }

    pub fn kronecker(self, a: i64) -> i8 {
        kronecker_symbol(self.0, a)
    }

    /// Values of `kronecker(self, a)` for `a` in `0..|Δ|`. The character is
    /// periodic with period `|Δ|`, so this table covers every argument.
    pub fn character_table(self) -> Vec<i8> {
        (0..self.abs() as i64).map(|a| self.kronecker(a)).collect()
    }

    pub fn splitting(self, p: u64) -> Splitting {
        splitting_type(self, p)
    }
}

impl TryFrom<i64> for FundamentalDiscriminant {
    type Error = ArithError;

    fn try_from(d: i64) -> Result<Self, Self::Error> {
        Self::new(d)
    }
}

impl From<FundamentalDiscriminant> for i64 {
    fn from(d: FundamentalDiscriminant) -> i64 {
        d.0
    }
}

impl fmt::Display for FundamentalDiscriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How an odd prime decomposes in an imaginary quadratic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

impl fmt::Display for Splitting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Splitting::Split => "split",
            Splitting::Inert => "inert",
            Splitting::Ramified => "ramified",
        })
    }
}

/// Whether `d` is the discriminant of a quadratic field. The sign is not
/// checked; 0 and 1 are rejected.
pub fn is_fundamental(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

/// Trial division up to the square root.
pub fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut n = n;
    if n.is_multiple_of(4) {
        return false;
    }
    if n.is_multiple_of(2) {
        n /= 2;
    }
    let mut q = 3u64;
    while q * q <= n {
        if n.is_multiple_of(q) {
            n /= q;
            if n.is_multiple_of(q) {
                return false;
            }
        }
        q += 2;
    }
    true
}

/// All negative fundamental discriminants with `|Δ| <= x`, ascending in `|Δ|`.
pub fn enumerate_fundamental(x: u64) -> Vec<FundamentalDiscriminant> {
    if x < 3 {
        return Vec::new();
    }
    fundamental_in_range(1, x)
}

/// Negative fundamental discriminants with `lo <= |Δ| <= hi`, ascending.
///
/// Squarefreeness is decided by striking multiples of odd prime squares over
/// the window, so a block costs about `(hi - lo) log log hi` operations.
pub fn fundamental_in_range(lo: u64, hi: u64) -> Vec<FundamentalDiscriminant> {
    let lo = lo.max(1);
    if hi < lo {
        return Vec::new();
    }
    let len = (hi - lo + 1) as usize;
    // odd_sf[i]: the odd part of lo + i has no repeated odd prime factor
    let mut odd_sf = vec![true; len];
    for q in primes_up_to(isqrt(hi)).into_iter().skip(1) {
        let sq = q * q;
        let mut m = lo.div_ceil(sq) * sq;
        while m <= hi {
            odd_sf[(m - lo) as usize] = false;
            m += sq;
        }
    }
    let mut out = Vec::new();
    for (i, ok) in odd_sf.into_iter().enumerate() {
        let m = lo + i as u64;
        if !ok {
            continue;
        }
        // m = |Δ|: either m ≡ 3 (mod 4), or m = 4k with k ≡ 1, 2 (mod 4)
        if matches!(m % 16, 3 | 7 | 11 | 15 | 4 | 8) {
            out.push(FundamentalDiscriminant::new_unchecked(-(m as i64)));
        }
    }
    out
}

/// The Kronecker symbol `(d / a)` for arbitrary integers.
pub fn kronecker_symbol(d: i64, a: i64) -> i8 {
    if a == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut d = d as i128;
    let mut a = a as i128;
    let mut t: i8 = 1;
    if a < 0 {
        a = -a;
        if d < 0 {
            t = -t;
        }
    }
    if d % 2 == 0 && a % 2 == 0 {
        return 0;
    }
    let mut v = 0;
    while a % 2 == 0 {
        a /= 2;
        v += 1;
    }
    if v % 2 == 1 && matches!(d.rem_euclid(8), 3 | 5) {
        t = -t;
    }
    // a is odd and positive: reduce to a Jacobi symbol
    d = d.rem_euclid(a);
    while d != 0 {
        while d % 2 == 0 {
            d /= 2;
            if matches!(a % 8, 3 | 5) {
                t = -t;
            }
        }
        std::mem::swap(&mut d, &mut a);
        if d % 4 == 3 && a % 4 == 3 {
            t = -t;
        }
        d %= a;
    }
    if a == 1 {
        t
    } else {
        0
    }
}

pub fn kronecker(delta: FundamentalDiscriminant, a: i64) -> i8 {
    delta.kronecker(a)
}

/// Decomposition of the odd prime `p` in `Q(√Δ)`.
///
/// # Panics
/// If `p` is not an odd prime.
pub fn splitting_type(delta: FundamentalDiscriminant, p: u64) -> Splitting {
    assert!(is_odd_prime(p), "{p} is not an odd prime");
    match delta.kronecker(p as i64) {
        1 => Splitting::Split,
        -1 => Splitting::Inert,
        _ => Splitting::Ramified,
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut q = 3;
    while q * q <= n {
        if n.is_multiple_of(q) {
            return false;
        }
        q += 2;
    }
    true
}

pub fn is_odd_prime(n: u64) -> bool {
    n != 2 && is_prime(n)
}

pub fn check_odd_prime(p: u64) -> Result<(), ArithError> {
    if is_odd_prime(p) {
        Ok(())
    } else {
        Err(ArithError::NotOddPrime(p))
    }
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Distinct prime factors in ascending order, with multiplicities.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            let mut e = 0;
            while n.is_multiple_of(q) {
                n /= q;
                e += 1;
            }
            out.push((q, e));
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Exponent of `p` in `n` (`n > 0`).
pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inv(a: i64, m: u64) -> Option<u64> {
    let (g, x, _) = ext_gcd(a.rem_euclid(m as i64) as i128, m as i128);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m as i128) as u64)
}

/// Returns `(g, x, y)` with `a x + b y = g = gcd(a, b) >= 0`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// `p^k`, failing on overflow.
pub fn checked_pow(p: u64, k: u32) -> Result<u64, ArithError> {
    p.checked_pow(k).ok_or(ArithError::Overflow("prime power"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_fundamental(x: u64) -> Vec<i64> {
        (3..=x as i64)
            .map(|m| -m)
            .filter(|&d| is_fundamental(d))
            .collect()
    }

    #[test]
    fn fundamental_examples() {
        assert!(is_fundamental(-3));
        assert!(!is_fundamental(-12));
        assert!(is_fundamental(-8));
        assert!(!is_fundamental(0));
        assert!(!is_fundamental(1));
        assert!(is_fundamental(5));
        assert!(is_fundamental(12));
        assert!(!is_fundamental(-16));
    }

    #[test]
    fn enumeration_small_cutoffs() {
        let vals = |x| {
            enumerate_fundamental(x)
                .into_iter()
                .map(i64::from)
                .collect::<Vec<_>>()
        };
        assert_eq!(vals(10), vec![-3, -4, -7, -8]);
        assert_eq!(vals(3), vec![-3]);
        assert_eq!(vals(20), vec![-3, -4, -7, -8, -11, -15, -19, -20]);
        assert!(vals(2).is_empty());
    }

    #[test]
    fn sieve_matches_trial_division() {
        let sieved: Vec<i64> = enumerate_fundamental(5000)
            .into_iter()
            .map(i64::from)
            .collect();
        assert_eq!(sieved, brute_fundamental(5000));
        let window: Vec<i64> = fundamental_in_range(4000, 4999)
            .into_iter()
            .map(i64::from)
            .collect();
        let expect: Vec<i64> = brute_fundamental(4999)
            .into_iter()
            .filter(|d| d.unsigned_abs() >= 4000)
            .collect();
        assert_eq!(window, expect);
    }

    #[test]
    fn kronecker_examples() {
        let d = |v| FundamentalDiscriminant::new(v).unwrap();
        assert_eq!(d(-4).kronecker(3), -1);
        assert_eq!(d(-23).kronecker(2), 1);
        assert_eq!(d(-23).kronecker(23), 0);
        assert_eq!(d(-3).kronecker(-1), -1);
        assert_eq!(d(-8).kronecker(0), 0);
        assert_eq!(kronecker_symbol(1, 0), 1);
    }

    #[test]
    fn splitting_examples() {
        let d = |v| FundamentalDiscriminant::new(v).unwrap();
        assert_eq!(splitting_type(d(-11), 5), Splitting::Split);
        assert_eq!(splitting_type(d(-7), 5), Splitting::Inert);
        assert_eq!(splitting_type(d(-3), 3), Splitting::Ramified);
    }

    #[test]
    fn kronecker_agrees_with_euler_criterion_at_odd_primes() {
        for delta in enumerate_fundamental(400) {
            for p in primes_up_to(60).into_iter().skip(1) {
                let r = delta.value().rem_euclid(p as i64) as u64;
                let euler = if r == 0 {
                    0
                } else if mod_pow(r, (p - 1) / 2, p) == 1 {
                    1
                } else {
                    -1
                };
                assert_eq!(delta.kronecker(p as i64), euler, "{delta} {p}");
            }
        }
    }

    #[test]
    fn rejects_non_fundamental() {
        assert_eq!(
            FundamentalDiscriminant::new(-12),
            Err(ArithError::NotFundamental(-12))
        );
        assert!(FundamentalDiscriminant::new(5).is_err());
        assert!(serde_json::from_str::<FundamentalDiscriminant>("-12").is_err());
        assert_eq!(
            serde_json::from_str::<FundamentalDiscriminant>("-23")
                .unwrap()
                .value(),
            -23
        );
    }

    #[test]
    fn helpers() {
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(valuation(54, 3), 3);
        assert_eq!(mod_inv(2, 25), Some(13));
        assert_eq!(mod_inv(5, 25), None);
        assert_eq!(isqrt(99), 9);
        assert_eq!(checked_pow(3, 4), Ok(81));
        assert!(checked_pow(10, 30).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn any_delta() -> impl Strategy<Value = FundamentalDiscriminant> {
            (3u64..200_000).prop_filter_map("fundamental", |m| {
                FundamentalDiscriminant::new(-(m as i64)).ok()
            })
        }

        proptest! {
            #[test]
            fn kronecker_is_multiplicative(delta in any_delta(), a in -5000i64..5000, b in -5000i64..5000) {
                prop_assert_eq!(delta.kronecker(a * b), delta.kronecker(a) * delta.kronecker(b));
            }

            #[test]
            fn kronecker_has_period_abs_delta(delta in any_delta(), a in -100_000i64..100_000) {
                prop_assert_eq!(delta.kronecker(a), delta.kronecker(a + delta.abs() as i64));
            }

            #[test]
            fn ramified_iff_divides(delta in any_delta(), idx in 0usize..20) {
                let p = primes_up_to(80)[idx + 1];
                let ramified = splitting_type(delta, p) == Splitting::Ramified;
                prop_assert_eq!(ramified, delta.abs() % p == 0);
            }

            #[test]
            fn zero_iff_common_factor(delta in any_delta(), a in 1i64..100_000) {
                let g = num_integer::gcd(a, delta.value());
                prop_assert_eq!(delta.kronecker(a) == 0, g.abs() > 1);
            }
        }
    }
}
