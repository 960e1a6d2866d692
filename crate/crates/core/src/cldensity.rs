// SPDX-License-Identifier: Apache-2.0

//! Cohen–Lenstra densities for the `p`-part of imaginary quadratic class
//! groups, evaluated with rigorous truncation bounds.
//!
//! Every infinite product here is `P(x) = ∏_{k≥1} (1 - x^k)` at `x = 1/p`
//! (or a rational `q`). Truncating after `N` factors leaves
//! `R = ∏_{k>N} (1 - x^k)`, and since `1 ≥ R ≥ 1 - Σ_{k>N} x^k`,
//!
//! ```text
//! 0 ≤ P_N - P = P_N (1 - R) ≤ x^{N+1} / (1 - x).
//! ```
//!
//! `N` is the least integer pushing that bound below half the requested
//! tolerance; the other half absorbs floating-point rounding.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::is_odd_prime;
use crate::classgroup::AbelianGroupStructure;

/// Default absolute tolerance for truncated products.
pub const DEFAULT_TOLERANCE: f64 = 1e-13;

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DensityError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{group} is not a {p}-group")]
    NotPGroup { p: u64, group: String },
    #[error("automorphism count overflows")]
    Overflow,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A density together with a rigorous bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub value: f64,
    pub error_bound: f64,
}

impl DensityValue {
    fn clamped(value: f64, error_bound: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            error_bound,
        }
    }

    /// Whether `x` lies within the error bound (plus `slack`).
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        (self.value - x).abs() <= self.error_bound + slack
    }
}

fn check_prime(p: u64) -> Result<(), DensityError> {
    if is_odd_prime(p) {
        Ok(())
    } else {
        Err(DensityError::NotOddPrime(p))
    }
}

/// Least `N` with `x^{N+1}/(1-x) <= tol/2`, `x = 1/p`.
fn truncation_for(p: u64, tol: f64) -> u32 {
    let x = 1.0 / p as f64;
    let mut n = 0u32;
    let mut tail = x / (1.0 - x);
    while tail > tol / 2.0 {
        n += 1;
        tail *= x;
    }
    n
}

/// `∏_{k=1}^{n} (1 - p^{-k})`, with the tail bound of the full product.
pub fn pochhammer_partial(p: u64, n: u32) -> DensityValue {
    let x = 1.0 / p as f64;
    let mut prod = 1.0;
    let mut xk = 1.0;
    for _ in 0..n {
        xk *= x;
        prod *= 1.0 - xk;
    }
    let tail = xk * x / (1.0 - x);
    DensityValue {
        value: prod,
        error_bound: tail + (2 * n as usize + 1) as f64 * EPS,
    }
}

/// `∏_{k≥1} (1 - p^{-k})` to within `tol`.
pub fn pochhammer_with_tolerance(p: u64, tol: f64) -> Result<DensityValue, DensityError> {
    check_prime(p)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(DensityError::InvalidArgument(format!("tolerance {tol}")));
    }
    Ok(pochhammer_partial(p, truncation_for(p, tol)))
}

/// `∏_{k≥1} (1 - p^{-k})`, the Cohen–Lenstra probability that the `p`-part
/// of the class group is trivial.
pub fn pochhammer(p: u64) -> Result<DensityValue, DensityError> {
    pochhammer_with_tolerance(p, DEFAULT_TOLERANCE)
}

/// Power-series coefficients `c_0..c_N` of `∏_{i≥1} (1 - q^i)`, by truncated
/// polynomial multiplication.
pub fn euler_expansion_coeffs(n: usize) -> Vec<i64> {
    let mut c = vec![0i64; n + 1];
    c[0] = 1;
    for i in 1..=n {
        // multiply by (1 - q^i), high degrees first
        for d in (i..=n).rev() {
            c[d] -= c[d - i];
        }
    }
    c
}

/// `p^{-n²} ∏_{k=1}^{n} (1 - p^{-k})^{-2}`, the factor turning `P` into the
/// density of `p`-rank exactly `n`.
fn rank_weight(p: u64, n: u32) -> f64 {
    let x = 1.0 / p as f64;
    let mut w = x.powi((n * n) as i32);
    let mut xk = 1.0;
    for _ in 0..n {
        xk *= x;
        w /= (1.0 - xk) * (1.0 - xk);
    }
    w
}

/// Density of fields whose class group has `p`-rank at least 1.
pub fn density_rank_ge_1(p: u64) -> Result<DensityValue, DensityError> {
    let pc = pochhammer(p)?;
    Ok(DensityValue::clamped(1.0 - pc.value, pc.error_bound + EPS))
}

/// Density of fields whose class group has `p`-rank exactly `n`.
pub fn density_rank_exact(p: u64, n: u32) -> Result<DensityValue, DensityError> {
    let pc = pochhammer(p)?;
    if n == 0 {
        return Ok(pc);
    }
    let w = rank_weight(p, n);
    let value = w * pc.value;
    Ok(DensityValue::clamped(
        value,
        w * pc.error_bound + (3 * n as usize + 4) as f64 * EPS * value,
    ))
}

/// Density of fields whose class group has `p`-rank at least `n`:
/// `1 - P · (1 + Σ_{j=1}^{n-1} w_j)` with `w_j = p^{-j²} ∏_{k≤j} (1 - p^{-k})^{-2}`.
///
/// For `n >= 2` the closed form cancels catastrophically against 1 (the
/// value is about `p^{-n²}`), so it is evaluated as the equal tail
/// `P · Σ_{j≥n} w_j`, using `1 + Σ_{j≥1} w_j = 1/P`. The ratio
/// `w_{j+1}/w_j = p^{-(2j+1)} (1 - p^{-j-1})^{-2}` is below 1/2, so the
/// series tail after the last summed term is at most that term.
pub fn density_rank_ge(p: u64, n: u32) -> Result<DensityValue, DensityError> {
    if n == 0 {
        return Err(DensityError::InvalidArgument(
            "rank threshold must be >= 1".into(),
        ));
    }
    if n == 1 {
        return density_rank_ge_1(p);
    }
    let pc = pochhammer(p)?;
    let mut sum = 0.0;
    let mut j = n;
    let mut last = rank_weight(p, j);
    while last > 0.0 && last > sum * EPS {
        sum += last;
        j += 1;
        last = rank_weight(p, j);
    }
    let value = pc.value * sum;
    // P carries an absolute error; the series tail is below `last`;
    // rounding is relative to the value
    let err = sum * pc.error_bound + pc.value * last + (3 * j as usize + 8) as f64 * EPS * value;
    Ok(DensityValue::clamped(value, err))
}

/// Lower bound for the lower density of fields with `λ_p >= n`, assuming the
/// Cohen–Lenstra rank densities. It is the density of `p`-rank `>= n`, since
/// every field of `p`-rank `>= n` has `λ_p >= n`.
pub fn lambda_lower_bound(p: u64, n: u32) -> Result<DensityValue, DensityError> {
    density_rank_ge(p, n)
}

/// `|LHS_N - RHS|` for
/// `1 + Σ_{j≥1} q^{j²} / ∏_{k≤j} (1 - q^k)² = ∏_{i≥1} (1 - q^i)^{-1}`,
/// with the left side truncated at `j = N`.
///
/// Both sides are evaluated in exact integer arithmetic. The right side is
/// truncated at `N'` factors with `N'` large enough that its own error is
/// below a millionth of the first omitted left-hand term, so the returned
/// value is the left-hand truncation error to six significant digits.
pub fn rank_series_identity_residual(q: Ratio<u64>, n: u32) -> Result<f64, DensityError> {
    let (u, v) = (*q.numer(), *q.denom());
    if u == 0 || u >= v {
        return Err(DensityError::InvalidArgument(format!(
            "q = {q} must lie in (0, 1)"
        )));
    }
    if n == 0 {
        return Err(DensityError::InvalidArgument("N must be >= 1".into()));
    }
    let (ub, vb) = (BigInt::from(u), BigInt::from(v));
    // term_j = u^{j²} v^j / ∏_{k≤j} (v^k - u^k)²
    // LHS_N = (D_N + Σ_j u^{j²} v^j D_N / D_j) / D_N with D_j = ∏_{k≤j} (v^k - u^k)²
    let mut d = Vec::with_capacity(n as usize + 1);
    d.push(BigInt::one());
    let (mut uk, mut vk) = (BigInt::one(), BigInt::one());
    for _ in 1..=n {
        uk *= &ub;
        vk *= &vb;
        let f = &vk - &uk;
        let next = d.last().unwrap() * &f * &f;
        d.push(next);
    }
    let dn = d[n as usize].clone();
    let mut lhs_num = dn.clone();
    for j in 1..=n {
        let jj = j;
        let t = num_traits::pow(ub.clone(), (jj * jj) as usize)
            * num_traits::pow(vb.clone(), jj as usize);
        lhs_num += t * (&dn / &d[j as usize]);
    }
    let lhs_den = dn;

    // The first omitted term is at least q^{(N+1)²}. With t = q^{N'+1}/(1-q)
    // the right side's relative truncation error is at most 2t (t <= 1/2),
    // so require 2t · RHS <= 1e-6 q^{(N+1)²}.
    let qf = u as f64 / v as f64;
    let rhs_estimate = 1.01 / (1..10_000).map(|i| 1.0 - qf.powi(i)).product::<f64>();
    let target_log = ((n + 1) * (n + 1)) as f64 * qf.ln() + (1e-6f64).ln() + (1.0 - qf).ln()
        - 2f64.ln()
        - rhs_estimate.ln();
    let n_prime = (target_log / qf.ln()).ceil().max(1.0) as u32;
    // RHS_{N'} = v^{Σi} / ∏_{i≤N'} (v^i - u^i)
    let mut rhs_num = BigInt::one();
    let mut rhs_den = BigInt::one();
    let (mut ui, mut vi) = (BigInt::one(), BigInt::one());
    for _ in 1..=n_prime {
        ui *= &ub;
        vi *= &vb;
        rhs_num *= &vi;
        rhs_den *= &vi - &ui;
    }
    let diff = (&lhs_num * &rhs_den - &rhs_num * &lhs_den).abs();
    let den = lhs_den * rhs_den;
    Ok(big_ratio_to_f64(&diff, &den))
}

/// `num / den` as `f64` for arbitrarily large non-negative integers.
fn big_ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let scaled = if shift >= 0 {
        num << shift as usize
    } else {
        num >> (-shift) as usize
    };
    let q = (scaled / den).to_f64().unwrap_or(f64::INFINITY);
    q * 2f64.powi(-(shift.clamp(-1000, 1100) as i32))
}

/// `|Aut(B)|` for the abelian `p`-group `B`, via Hall's count
///
/// ```text
/// ∏_{k=1}^{r} (p^{d_k} - p^{k-1}) · ∏_j (p^{e_j})^{r-d_j} · ∏_i (p^{e_i-1})^{r-c_i+1}
/// ```
///
/// with `e_1 <= … <= e_r` the cyclic exponents, `d_k = max{l : e_l = e_k}`
/// and `c_k = min{l : e_l = e_k}` (1-based).
pub fn aut_order(p: u64, group: &AbelianGroupStructure) -> Result<u128, DensityError> {
    check_prime(p)?;
    if !group.is_p_group(p) {
        return Err(DensityError::NotPGroup {
            p,
            group: group.to_string(),
        });
    }
    let e: Vec<u32> = group
        .divisors()
        .iter()
        .map(|&d| crate::arith::valuation(d, p))
        .collect();
    let r = e.len();
    let pw = |k: u64| -> Result<u128, DensityError> {
        (p as u128)
            .checked_pow(k as u32)
            .ok_or(DensityError::Overflow)
    };
    let mul = |a: u128, b: u128| a.checked_mul(b).ok_or(DensityError::Overflow);
    let mut total: u128 = 1;
    for k in 0..r {
        let dk = (0..r).rev().find(|&l| e[l] == e[k]).unwrap() + 1;
        let ck = (0..r).find(|&l| e[l] == e[k]).unwrap() + 1;
        total = mul(total, pw(dk as u64)? - pw(k as u64)?)?;
        total = mul(total, pw(e[k] as u64 * (r - dk) as u64)?)?;
        total = mul(total, pw((e[k] as u64 - 1) * (r - ck + 1) as u64)?)?;
    }
    Ok(total)
}

/// Cohen–Lenstra probability that the `p`-part of the class group is `B`.
pub fn cl_measure(p: u64, group: &AbelianGroupStructure) -> Result<DensityValue, DensityError> {
    let aut = aut_order(p, group)? as f64;
    let pc = pochhammer(p)?;
    Ok(DensityValue::clamped(
        pc.value / aut,
        pc.error_bound / aut + EPS * pc.value / aut,
    ))
}

/// Exact rational evaluations with proven truncation intervals, used to
/// check the floating-point routes.
pub mod exact {
    use super::*;

    /// A closed interval `[lo, hi]` of rationals known to contain a value.
    #[derive(Debug, Clone, PartialEq)]
    pub struct Interval {
        pub lo: BigRational,
        pub hi: BigRational,
    }

    impl Interval {
        pub fn width(&self) -> BigRational {
            &self.hi - &self.lo
        }

        pub fn contains(&self, x: &BigRational) -> bool {
            &self.lo <= x && x <= &self.hi
        }

        pub fn midpoint_f64(&self) -> f64 {
            ((&self.lo + &self.hi) / BigRational::from_integer(2.into()))
                .to_f64()
                .unwrap_or(f64::NAN)
        }

        /// Whether `x` is within `slack` of the interval.
        pub fn near(&self, x: f64, slack: f64) -> bool {
            let lo = self.lo.to_f64().unwrap_or(f64::NAN);
            let hi = self.hi.to_f64().unwrap_or(f64::NAN);
            x >= lo - slack && x <= hi + slack
        }
    }

    fn inv_p(p: u64) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(p))
    }

    /// `[P_N - x^{N+1}/(1-x), P_N]` for `P = ∏_{k≥1}(1 - x^k)`, `x = 1/p`.
    pub fn pochhammer(p: u64, n: u32) -> Interval {
        let x = inv_p(p);
        let mut prod = BigRational::one();
        let mut xk = BigRational::one();
        for _ in 0..n {
            xk *= &x;
            prod *= BigRational::one() - &xk;
        }
        let tail = &xk * &x / (BigRational::one() - &x);
        Interval {
            lo: &prod - tail,
            hi: prod,
        }
    }

    fn rank_weight(p: u64, n: u32) -> BigRational {
        let x = inv_p(p);
        let mut w = num_traits::pow(x.clone(), (n * n) as usize);
        let mut xk = BigRational::one();
        for _ in 0..n {
            xk *= &x;
            let f = BigRational::one() - &xk;
            w /= &f * &f;
        }
        w
    }

    pub fn density_rank_exact(p: u64, n: u32, terms: u32) -> Interval {
        let pc = pochhammer(p, terms);
        let w = rank_weight(p, n);
        Interval {
            lo: &pc.lo * &w,
            hi: &pc.hi * &w,
        }
    }

    /// Interval for `1 - P · S_n`.
    pub fn density_rank_ge(p: u64, n: u32, terms: u32) -> Interval {
        let pc = pochhammer(p, terms);
        let mut s = BigRational::one();
        for j in 1..n {
            s += rank_weight(p, j);
        }
        Interval {
            lo: BigRational::one() - &pc.hi * &s,
            hi: BigRational::one() - &pc.lo * &s,
        }
    }

    /// `x^{N+1}/(1-x)` at `x = 1/p` as an exact rational.
    pub fn tail_bound(p: u64, n: u32) -> BigRational {
        let x = inv_p(p);
        num_traits::pow(x.clone(), n as usize + 1) / (BigRational::one() - x)
    }

    pub fn to_f64(x: &BigRational) -> f64 {
        x.to_f64().unwrap_or(f64::NAN)
    }
}
