// SPDX-License-Identifier: Apache-2.0

//! The cyclotomic `λ`-invariant of an imaginary quadratic field.
//!
//! For `p ∤ Δ` the invariant is read off the `χ`-component of the
//! `c`-twisted Stickelberger element of `Q(ζ_{|Δ| p^{n+1}})`, written as a
//! polynomial in `T = γ - 1` with `γ ↔ 1 + p` and reduced modulo
//! `(p, T^{p^n})`. The `μ`-invariant vanishes, so the series is nonzero mod
//! `p` and its order of vanishing at `T = 0` is `λ` as soon as that order is
//! below `p^n`.
//!
//! Primes that do not split and do not divide `h` give `λ = 0` without any
//! series. Split primes with `p ∤ h` can also be decided by Gold's
//! congruence, which is kept as an independent check.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, mod_inv, mod_pow, ArithError, FundamentalDiscriminant, Splitting};
use crate::classgroup::{reduced_forms, ClassGroupError};

/// Highest power of `T` tracked in a series.
pub const COEFF_CAP: usize = 64;
/// First level tried by [`lambda_invariant`].
pub const START_LEVEL: u32 = 2;
/// Default ceiling for level escalation.
pub const DEFAULT_MAX_LEVEL: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IwasawaError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    ClassGroup(#[from] ClassGroupError),
    #[error("{a} is divisible by {p}")]
    DivisibleByP { a: i64, p: u64 },
    #[error("{p} ramifies in Q(√{delta})")]
    Ramified { delta: i64, p: u64 },
    #[error("twist c = {c} is not valid for Δ = {delta}, p = {p}")]
    InvalidTwist { delta: i64, p: u64, c: u64 },
    #[error("level must be >= 1")]
    InvalidLevel,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed normal form: {0}")]
    MalformedNormalForm(String),
}

/// `ω(a) mod p^m`: the `(p-1)`-st root of unity congruent to `a` mod `p`.
pub fn teichmuller(a: i64, p: u64, m: u32) -> Result<u64, IwasawaError> {
    arith::check_odd_prime(p)?;
    if a.rem_euclid(p as i64) == 0 {
        return Err(IwasawaError::DivisibleByP { a, p });
    }
    let modulus = arith::checked_pow(p, m.max(1))?;
    let mut x = a.rem_euclid(modulus as i64) as u64;
    // x ↦ x^p gains one p-adic digit of agreement with ω(a) per step
    for _ in 1..m {
        x = mod_pow(x, p, modulus);
    }
    Ok(x)
}

/// The exponent `s ∈ [0, p^n)` with `a / ω(a) ≡ (1+p)^s (mod p^{n+1})`.
///
/// Digits are found one at a time: if `u ≡ 1 (mod p^{j+1})` then
/// `(1+p)^{d p^j} ≡ 1 + d p^{j+1} (mod p^{j+2})`, so the next digit of `s`
/// is `(u - 1)/p^{j+1} mod p`.
pub fn one_units_index(a: i64, p: u64, n: u32) -> Result<u64, IwasawaError> {
    let modulus = arith::checked_pow(p, n + 1)?;
    let w = teichmuller(a, p, n + 1)?;
    let winv = mod_inv(w as i64, modulus).expect("teichmuller value is a unit");
    let u = (a.rem_euclid(modulus as i64) as u128 * winv as u128 % modulus as u128) as u64;
    let gen_inv = mod_inv((1 + p) as i64, modulus).expect("1 + p is a unit");
    let mut s = 0u64;
    let mut digit_weight = 1u64;
    let mut pj1 = p;
    // t = u · (1+p)^{-s}
    let mut t = u;
    for _ in 0..n {
        debug_assert_eq!((t + modulus - 1) % pj1, 0);
        let d = ((t + modulus - 1) % modulus / pj1) % p;
        s += d * digit_weight;
        let step = mod_pow(gen_inv, d * digit_weight, modulus);
        t = (t as u128 * step as u128 % modulus as u128) as u64;
        digit_weight *= p;
        pj1 *= p;
    }
    debug_assert_eq!(t % modulus, 1 % modulus);
    Ok(s)
}

/// Whether `c` twists the Stickelberger element into an integral one
/// without changing `λ`: `c` prime to `|Δ| p` and `c - χ(c)` a unit mod `p`.
pub fn is_valid_twist(delta: FundamentalDiscriminant, p: u64, c: u64) -> bool {
    if c < 2 || c.is_multiple_of(p) || num_integer::gcd(c, delta.abs()) != 1 {
        return false;
    }
    let chi = delta.kronecker(c as i64) as i64;
    (c as i64 - chi).rem_euclid(p as i64) != 0
}

/// Valid twists in increasing order.
pub fn twists(delta: FundamentalDiscriminant, p: u64) -> impl Iterator<Item = u64> {
    (2u64..).filter(move |&c| is_valid_twist(delta, p, c))
}

pub fn default_twist(delta: FundamentalDiscriminant, p: u64) -> u64 {
    twists(delta, p).next().expect("valid twists exist")
}

/// A truncated power series over `F_p` in `T`, coefficients of `T^0, T^1, …`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IwasawaSeriesModP {
    pub p: u64,
    pub level: u32,
    pub coeffs: Vec<u32>,
    pub twist: u64,
}

impl IwasawaSeriesModP {
    /// Index of the first nonzero coefficient, if any is tracked.
    pub fn lambda_readout(&self) -> Option<u32> {
        self.coeffs.iter().position(|&c| c != 0).map(|i| i as u32)
    }

    /// Number of coefficients that are exact at this level.
    pub fn window(&self) -> usize {
        self.coeffs.len()
    }
}

/// The `χ`-component of the `c`-twisted level-`n` Stickelberger element,
///
/// ```text
/// Σ_{1 ≤ a ≤ F, (a, Δp) = 1} χ(a) ⌊c a / F⌋ (1+T)^{s_n(a)}  mod (p, T^{p^n}),
/// ```
///
/// with `F = |Δ| p^{n+1}` and `s_n` from [`one_units_index`].
pub fn stickelberger_series(
    delta: FundamentalDiscriminant,
    p: u64,
    n: u32,
    c: u64,
) -> Result<IwasawaSeriesModP, IwasawaError> {
    arith::check_odd_prime(p)?;
    if n == 0 {
        return Err(IwasawaError::InvalidLevel);
    }
    if delta.abs().is_multiple_of(p) {
        return Err(IwasawaError::Ramified {
            delta: delta.value(),
            p,
        });
    }
    if !is_valid_twist(delta, p, c) {
        return Err(IwasawaError::InvalidTwist {
            delta: delta.value(),
            p,
            c,
        });
    }
    let d = delta.abs();
    let m = arith::checked_pow(p, n + 1)?;
    let len = arith::checked_pow(p, n)? as usize;
    let f = d.checked_mul(m).ok_or(ArithError::Overflow("conductor"))?;

    let mut exponent = vec![u32::MAX; m as usize];
    for r in 1..m {
        if r % p != 0 {
            exponent[r as usize] = one_units_index(r as i64, p, n)? as u32;
        }
    }
    let chi = delta.character_table();

    // weights by exponent; ⌊ca/F⌋ = k on [kF/c, (k+1)F/c), and k = 0 adds nothing
    let pi = p as i64;
    let mut weight = vec![0i64; len];
    for k in 1..c {
        let start = (k * f).div_ceil(c);
        let end = ((k + 1) * f).div_ceil(c).min(f);
        let mut ra = (start % d) as usize;
        let mut rm = (start % m) as usize;
        let kk = k as i64;
        for _ in start..end {
            let e = exponent[rm];
            let ch = chi[ra];
            if ch != 0 && e != u32::MAX {
                let w = &mut weight[e as usize];
                *w = (*w + kk * ch as i64).rem_euclid(pi);
            }
            ra += 1;
            if ra == d as usize {
                ra = 0;
            }
            rm += 1;
            if rm == m as usize {
                rm = 0;
            }
        }
    }

    // Σ_s w_s (1+T)^s by Horner in (1+T), truncated at T^cap
    let cap = len.min(COEFF_CAP);
    let mut poly = vec![0u32; cap];
    let pu = p as u32;
    for s in (0..len).rev() {
        for i in (1..cap).rev() {
            poly[i] = (poly[i] + poly[i - 1]) % pu;
        }
        poly[0] = (poly[0] + weight[s] as u32) % pu;
    }
    Ok(IwasawaSeriesModP {
        p,
        level: n,
        coeffs: poly,
        twist: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMethod {
    Stickelberger,
    InertTrivial,
    Unsupported,
}

impl std::fmt::Display for LambdaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LambdaMethod::Stickelberger => "stickelberger",
            LambdaMethod::InertTrivial => "inert_trivial",
            LambdaMethod::Unsupported => "unsupported",
        })
    }
}

/// Outcome of a `λ` computation. `lambda` is `None` when nothing could be
/// read (unsupported case, or a series vanishing through the whole window).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaResult {
    pub lambda: Option<u32>,
    pub level_used: u32,
    pub stable: bool,
    pub method: LambdaMethod,
}

impl LambdaResult {
    /// The value if it is trustworthy.
    pub fn stable_value(&self) -> Option<u32> {
        if self.stable {
            self.lambda
        } else {
            None
        }
    }
}

/// `λ_p` of `Q(√Δ)`; computes the class number itself.
pub fn lambda_invariant(
    delta: FundamentalDiscriminant,
    p: u64,
    max_level: u32,
) -> Result<LambdaResult, IwasawaError> {
    let h = reduced_forms(delta)?.len() as u64;
    lambda_invariant_with_class_number(delta, p, h, max_level)
}

/// `λ_p` of `Q(√Δ)` given `h = h(Δ)`.
///
/// Non-split primes not dividing `h` give `λ = 0` outright. Otherwise the
/// Stickelberger readout is taken at levels `n` and `n + 1`, starting from
/// [`START_LEVEL`], and accepted once both agree on a value `< p^{n-1}`.
pub fn lambda_invariant_with_class_number(
    delta: FundamentalDiscriminant,
    p: u64,
    h: u64,
    max_level: u32,
) -> Result<LambdaResult, IwasawaError> {
    arith::check_odd_prime(p)?;
    let trivial = LambdaResult {
        lambda: Some(0),
        level_used: 0,
        stable: true,
        method: LambdaMethod::InertTrivial,
    };
    match delta.splitting(p) {
        Splitting::Ramified => {
            return Ok(if !h.is_multiple_of(p) {
                trivial
            } else {
                LambdaResult {
                    lambda: None,
                    level_used: 0,
                    stable: false,
                    method: LambdaMethod::Unsupported,
                }
            });
        }
        Splitting::Inert if !h.is_multiple_of(p) => return Ok(trivial),
        _ => {}
    }
    let c = default_twist(delta, p);
    let mut n = START_LEVEL.min(max_level.max(1));
    let mut lower = stickelberger_series(delta, p, n, c)?.lambda_readout();
    let mut level_used = n;
    while n < max_level {
        let upper = stickelberger_series(delta, p, n + 1, c)?.lambda_readout();
        level_used = n + 1;
        if let (Some(a), Some(b)) = (lower, upper) {
            if a == b && (a as u64) < p.pow(n - 1) {
                return Ok(LambdaResult {
                    lambda: Some(a),
                    level_used,
                    stable: true,
                    method: LambdaMethod::Stickelberger,
                });
            }
        }
        lower = upper;
        n += 1;
    }
    Ok(LambdaResult {
        lambda: lower,
        level_used,
        stable: false,
        method: LambdaMethod::Stickelberger,
    })
}

/// Gold's criterion: for `p` split with `p ∤ h`, write `π^h = (α)` for a
/// prime `π | p`; then `λ_p >= 2` iff `α^{p-1} ≡ 1 (mod π̄²)`.
pub fn gold_criterion(delta: FundamentalDiscriminant, p: u64) -> Result<bool, IwasawaError> {
    let h = reduced_forms(delta)?.len() as u64;
    gold_criterion_with_class_number(delta, p, h)
}

pub fn gold_criterion_with_class_number(
    delta: FundamentalDiscriminant,
    p: u64,
    h: u64,
) -> Result<bool, IwasawaError> {
    arith::check_odd_prime(p)?;
    if delta.splitting(p) != Splitting::Split {
        return Err(IwasawaError::Precondition(format!(
            "{p} does not split in Q(√{delta})"
        )));
    }
    if h.is_multiple_of(p) {
        return Err(IwasawaError::Precondition(format!("{p} divides h = {h}")));
    }
    let dv = BigInt::from(delta.value());
    let pb = BigInt::from(p);
    let k = h.max(2) as usize;
    let pk = num_traits::pow(pb.clone(), k);
    let ph = num_traits::pow(pb.clone(), h as usize);
    let root = hensel_sqrt(delta.value(), p, k);

    // π^h = [p^h, (B + √Δ)/2] with B ≡ root (mod p^h), B ≡ Δ (mod 2)
    let mut b = root.mod_floor(&ph);
    if (&b - &dv).is_odd() {
        b += &ph;
    }
    let c = (&b * &b - &dv) / (BigInt::from(4) * &ph);
    let alpha = principal_generator(ph.clone(), b, c, &dv);

    // (B - √Δ)/2 lies in π̄^h, so √Δ ≡ root modulo π̄^k and O/π̄² ≅ Z/p²
    let p2 = &pb * &pb;
    let (x, y) = alpha;
    debug_assert_eq!(&x * &x - &dv * &y * &y, BigInt::from(4) * &ph);
    let two_inv = BigInt::from(mod_inv(2, p * p).expect("p odd"));
    let v = ((x + y * root.mod_floor(&pk)) * two_inv).mod_floor(&p2);
    Ok(v.modpow(&BigInt::from(p - 1), &p2).is_one())
}

/// A square root of `d` modulo `p^k` by Newton lifting from a root mod `p`.
fn hensel_sqrt(d: i64, p: u64, k: usize) -> BigInt {
    let r0 = (0..p)
        .find(|&r| (r as i128 * r as i128 - d as i128).rem_euclid(p as i128) == 0)
        .expect("d is a square mod p");
    let db = BigInt::from(d);
    let mut r = BigInt::from(r0);
    let mut modulus = BigInt::from(p);
    let pk = num_traits::pow(BigInt::from(p), k);
    while modulus < pk {
        modulus = (&modulus * &modulus).min(pk.clone());
        let f = &r * &r - &db;
        let inv = mod_inverse_big(&(BigInt::from(2) * &r), &modulus);
        r = (&r - f * inv).mod_floor(&modulus);
    }
    r
}

fn mod_inverse_big(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

/// Reduces `(a, b, c)`, the norm form of the lattice `Z e1 + Z e2` with
/// `e1 = a`, `e2 = (b + √Δ)/2` scaled by `1/a`, and returns the generator
/// as `(X, Y)` meaning `(X + Y√Δ)/2`. The lattice must be principal.
fn principal_generator(a: BigInt, b: BigInt, c: BigInt, _delta: &BigInt) -> (BigInt, BigInt) {
    let (mut a, mut b, mut c) = (a, b, c);
    let mut e1 = (BigInt::from(2) * &a, BigInt::zero());
    let mut e2 = (b.clone(), BigInt::one());
    loop {
        let two_a = BigInt::from(2) * &a;
        if !(b > -a.clone() && b <= a) {
            // b + 2ak ∈ (-a, a]; e2 ↦ e2 + k e1
            let k = (&a - &b).div_floor(&two_a);
            c = &c + &k * (&a * &k + &b);
            b = &b + &two_a * &k;
            e2 = (&e2.0 + &k * &e1.0, &e2.1 + &k * &e1.1);
        }
        if a > c {
            std::mem::swap(&mut a, &mut c);
            b = -b;
            let old = e1;
            e1 = e2;
            e2 = (-old.0, -old.1);
            continue;
        }
        break;
    }
    assert!(
        a.is_one(),
        "π^h is principal, reduced norm form must be principal; got a = {a}"
    );
    e1
}

/// A distinguished polynomial over `Z_p` known modulo `p^precision`:
/// monic, every other coefficient divisible by `p`. Coefficients are listed
/// from the constant term up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinguishedPolynomial {
    pub p: u64,
    pub precision: u32,
    pub coeffs: Vec<i64>,
}

impl DistinguishedPolynomial {
    pub fn new(p: u64, precision: u32, coeffs: Vec<i64>) -> Result<Self, IwasawaError> {
        let f = Self {
            p,
            precision,
            coeffs,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn validate(&self) -> Result<(), IwasawaError> {
        arith::check_odd_prime(self.p)?;
        if self.precision == 0 {
            return Err(IwasawaError::MalformedNormalForm(
                "precision must be >= 1".into(),
            ));
        }
        match self.coeffs.split_last() {
            Some((&1, rest)) if !rest.is_empty() => {
                if let Some(bad) = rest.iter().find(|&&a| a.rem_euclid(self.p as i64) != 0) {
                    return Err(IwasawaError::MalformedNormalForm(format!(
                        "coefficient {bad} is not divisible by {}",
                        self.p
                    )));
                }
                Ok(())
            }
            Some((_, rest)) if !rest.is_empty() => Err(IwasawaError::MalformedNormalForm(
                "polynomial is not monic".into(),
            )),
            _ => Err(IwasawaError::MalformedNormalForm(
                "degree must be >= 1".into(),
            )),
        }
    }
}

/// `⊕ Λ/(p^{μ_i}) ⊕ ⊕ Λ/(f_j^{λ_j})`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LambdaNormalForm {
    pub mu_exponents: Vec<u32>,
    pub torsion_factors: Vec<(DistinguishedPolynomial, u32)>,
}

impl LambdaNormalForm {
    pub fn direct_sum(mut self, other: Self) -> Self {
        self.mu_exponents.extend(other.mu_exponents);
        self.torsion_factors.extend(other.torsion_factors);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalFormInvariants {
    pub mu: u64,
    pub lambda: u64,
    /// `dim X/𝔐X`, one per cyclic summand.
    pub g: u64,
}

pub fn normal_form_invariants(x: &LambdaNormalForm) -> Result<NormalFormInvariants, IwasawaError> {
    if x.mu_exponents.contains(&0) {
        return Err(IwasawaError::MalformedNormalForm(
            "μ exponents must be positive".into(),
        ));
    }
    let mut lambda = 0u64;
    for (f, mult) in &x.torsion_factors {
        f.validate()?;
        if *mult == 0 {
            return Err(IwasawaError::MalformedNormalForm(
                "multiplicities must be positive".into(),
            ));
        }
        lambda += f.degree() as u64 * *mult as u64;
    }
    Ok(NormalFormInvariants {
        mu: x.mu_exponents.iter().map(|&m| m as u64).sum(),
        lambda,
        g: (x.mu_exponents.len() + x.torsion_factors.len()) as u64,
    })
}
