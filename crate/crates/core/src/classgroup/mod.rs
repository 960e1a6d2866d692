// SPDX-License-Identifier: Apache-2.0

//! Class groups of imaginary quadratic fields, modelled by reduced positive
//! definite binary quadratic forms under Dirichlet composition.

mod form;
mod structure;

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

pub use form::QuadraticForm;
pub use structure::AbelianGroupStructure;

use crate::arith::{factorize, isqrt, valuation, FundamentalDiscriminant};

/// Largest `|Δ|` accepted by the form machinery. Composition runs in `i128`
/// and narrows to `i64`, which stays exact well past this bound.
pub const MAX_ABS_DISCRIMINANT: u64 = 1_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassGroupError {
    #[error("integer overflow in form arithmetic")]
    Overflow,
    #[error("|Δ| = {0} exceeds the supported range")]
    OutOfRange(u64),
    #[error("forms of discriminants {left} and {right} cannot be composed")]
    DiscriminantMismatch { left: i64, right: i64 },
    #[error("({a}, {b}, {c}) is not a positive definite form of discriminant {delta}")]
    InvalidForm { a: i64, b: i64, c: i64, delta: i64 },
    #[error("{0:?} is not a divisor chain of integers >= 2")]
    InvalidStructure(Vec<u64>),
}

fn check_range(delta: FundamentalDiscriminant) -> Result<(), ClassGroupError> {
    if delta.abs() > MAX_ABS_DISCRIMINANT {
        Err(ClassGroupError::OutOfRange(delta.abs()))
    } else {
        Ok(())
    }
}

/// Every reduced form of discriminant `Δ`, one per ideal class, sorted.
pub fn reduced_forms(
    delta: FundamentalDiscriminant,
) -> Result<Vec<QuadraticForm>, ClassGroupError> {
    check_range(delta)?;
    let d = delta.value();
    let amax = isqrt(delta.abs() / 3) as i64;
    let mut out = Vec::new();
    for a in 1..=amax {
        let four_a = 4 * a;
        let mut b = -a + 1;
        if (b - d).rem_euclid(2) != 0 {
            b += 1;
        }
        while b <= a {
            let num = b * b - d;
            if num % four_a == 0 {
                let c = num / four_a;
                if c > a || (c == a && b >= 0) {
                    out.push(QuadraticForm { a, b, c });
                }
            }
            b += 2;
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Reduced-form enumeration for batches of discriminants up to a fixed bound.
///
/// Instead of scanning all `(a, b)` pairs it walks `b` and reads the
/// candidates `a` off the divisors of `(b² - Δ)/4`, factored through a
/// smallest-prime-factor table. This is `O(√|Δ| · d(N))` per field.
#[derive(Debug, Clone)]
pub struct FormEnumerator {
    spf: Vec<u32>,
    max_abs: u64,
}

impl FormEnumerator {
    pub fn new(max_abs: u64) -> Result<Self, ClassGroupError> {
        if max_abs > MAX_ABS_DISCRIMINANT || max_abs > 3 * u32::MAX as u64 {
            return Err(ClassGroupError::OutOfRange(max_abs));
        }
        // (b² + |Δ|)/4 <= |Δ|/3 for b² <= |Δ|/3
        let limit = (max_abs / 3 + 2) as usize;
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Ok(Self { spf, max_abs })
    }

    pub fn max_abs(&self) -> u64 {
        self.max_abs
    }

    fn divisors(&self, mut n: u64, out: &mut Vec<u64>) {
        out.clear();
        out.push(1);
        while n > 1 {
            let q = self.spf[n as usize] as u64;
            let mut e = 0;
            while n.is_multiple_of(q) {
                n /= q;
                e += 1;
            }
            let base = out.len();
            let mut pw = 1;
            for _ in 0..e {
                pw *= q;
                for i in 0..base {
                    out.push(out[i] * pw);
                }
            }
        }
    }

    pub fn reduced_forms(
        &self,
        delta: FundamentalDiscriminant,
    ) -> Result<Vec<QuadraticForm>, ClassGroupError> {
        if delta.abs() > self.max_abs {
            return Err(ClassGroupError::OutOfRange(delta.abs()));
        }
        let abs = delta.abs();
        let bmax = isqrt(abs / 3);
        let mut out = Vec::new();
        let mut divs = Vec::new();
        let mut b = abs % 2;
        while b <= bmax {
            let n = (b * b + abs) / 4;
            self.divisors(n, &mut divs);
            for &a in &divs {
                if a < b.max(1) || a * a > n {
                    continue;
                }
                let c = n / a;
                let (ai, bi, ci) = (a as i64, b as i64, c as i64);
                out.push(QuadraticForm {
                    a: ai,
                    b: bi,
                    c: ci,
                });
                if b > 0 && b < a && a < c {
                    out.push(QuadraticForm {
                        a: ai,
                        b: -bi,
                        c: ci,
                    });
                }
            }
            b += 2;
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// `h(Δ)` from the exact character sum `-(1/|Δ|) Σ a χ(a)`, with the unit
/// correction for `Δ = -3, -4`.
///
/// # Panics
/// If the sum is not divisible by `|Δ|`, which can only happen through a bug
/// in the character.
pub fn class_number_analytic(delta: FundamentalDiscriminant) -> u64 {
    match delta.value() {
        -3 | -4 => return 1,
        _ => {}
    }
    let n = delta.abs() as i64;
    let chi = delta.character_table();
    let sum: i128 = (1..n).map(|a| a as i128 * chi[a as usize] as i128).sum();
    assert!(
        sum % n as i128 == 0,
        "character sum {sum} not divisible by {n} for Δ = {delta}"
    );
    (sum / n as i128).unsigned_abs() as u64
}

/// The class group of one discriminant, with its reduced forms.
#[derive(Debug, Clone)]
pub struct ClassGroup {
    delta: FundamentalDiscriminant,
    forms: Vec<QuadraticForm>,
}

impl ClassGroup {
    pub fn new(delta: FundamentalDiscriminant) -> Result<Self, ClassGroupError> {
        Ok(Self {
            delta,
            forms: reduced_forms(delta)?,
        })
    }

    pub fn with_enumerator(
        delta: FundamentalDiscriminant,
        en: &FormEnumerator,
    ) -> Result<Self, ClassGroupError> {
        Ok(Self {
            delta,
            forms: en.reduced_forms(delta)?,
        })
    }

    pub fn delta(&self) -> FundamentalDiscriminant {
        self.delta
    }

    pub fn forms(&self) -> &[QuadraticForm] {
        &self.forms
    }

    pub fn class_number(&self) -> u64 {
        self.forms.len() as u64
    }

    pub fn identity(&self) -> QuadraticForm {
        QuadraticForm::principal(self.delta)
    }

    /// Elementary divisors of the group.
    ///
    /// For each prime `ℓ | h` the `ℓ`-Sylow subgroup is generated from the
    /// images `x^{h/ℓ^v}` until it reaches order `ℓ^v`. Its cyclic
    /// decomposition follows from the sizes of the `ℓ^k`-torsion subgroups:
    /// `log_ℓ |S[ℓ^k]| - log_ℓ |S[ℓ^{k-1}]|` counts the cyclic factors of
    /// order at least `ℓ^k`.
    pub fn structure(&self) -> Result<AbelianGroupStructure, ClassGroupError> {
        let h = self.class_number();
        let mut exponents = BTreeMap::new();
        for (l, v) in factorize(h) {
            let sylow = self.sylow_subgroup(l, v)?;
            exponents.insert(l, cyclic_exponents(&sylow, l, v)?);
        }
        Ok(AbelianGroupStructure::from_sylow_exponents(&exponents))
    }

    /// The elements of the `ℓ`-Sylow subgroup, which has order `ℓ^v`.
    pub fn sylow_subgroup(&self, l: u64, v: u32) -> Result<Vec<QuadraticForm>, ClassGroupError> {
        let target = l.pow(v) as usize;
        let cofactor = self.class_number() / l.pow(v);
        let mut elems = vec![self.identity()];
        let mut seen: HashSet<QuadraticForm> = elems.iter().copied().collect();
        for x in &self.forms {
            if elems.len() == target {
                break;
            }
            let y = x.pow(cofactor)?;
            if seen.contains(&y) {
                continue;
            }
            // adjoin y: union of the cosets H·y^k until y^k falls back into H
            let base = elems.clone();
            let mut z = y;
            while !seen.contains(&z) {
                for g in &base {
                    let e = g.compose(&z)?;
                    if seen.insert(e) {
                        elems.push(e);
                    }
                }
                z = z.compose(&y)?;
            }
        }
        debug_assert_eq!(elems.len(), target);
        Ok(elems)
    }
}

/// Cyclic-factor exponents of an abelian `ℓ`-group of order `ℓ^v` given by
/// its full element list.
fn cyclic_exponents(elems: &[QuadraticForm], l: u64, v: u32) -> Result<Vec<u32>, ClassGroupError> {
    // order_exp[i] = k with elems[i] of order ℓ^k
    let mut counts = vec![0usize; v as usize + 1];
    for e in elems {
        let mut k = 0;
        let mut z = *e;
        while !z.is_principal() {
            z = z.pow(l)?;
            k += 1;
        }
        counts[k] += 1;
    }
    // t[k] = log_ℓ |S[ℓ^k]|
    let mut t = vec![0u32; v as usize + 2];
    let mut cum = 0usize;
    for k in 0..=v as usize {
        cum += counts[k];
        let (mut size, mut e) = (cum, 0);
        while size > 1 {
            debug_assert_eq!(size % l as usize, 0);
            size /= l as usize;
            e += 1;
        }
        t[k] = e;
    }
    t[v as usize + 1] = t[v as usize];
    let mut out = Vec::new();
    for k in 1..=v as usize {
        let at_least_k = t[k] - t[k - 1];
        let at_least_next = t[k + 1] - t[k];
        for _ in 0..(at_least_k - at_least_next) {
            out.push(k as u32);
        }
    }
    Ok(out)
}

pub fn group_structure(
    delta: FundamentalDiscriminant,
) -> Result<AbelianGroupStructure, ClassGroupError> {
    ClassGroup::new(delta)?.structure()
}

/// Composition of two reduced forms of discriminant `Δ`.
pub fn compose(
    f: &QuadraticForm,
    g: &QuadraticForm,
    delta: FundamentalDiscriminant,
) -> Result<QuadraticForm, ClassGroupError> {
    for x in [f, g] {
        if x.discriminant() != delta.value() as i128 {
            return Err(ClassGroupError::DiscriminantMismatch {
                left: delta.value(),
                right: x.discriminant() as i64,
            });
        }
    }
    f.compose(g)
}

pub fn p_rank(g: &AbelianGroupStructure, p: u64) -> u32 {
    g.p_rank(p)
}

pub fn contains_power(g: &AbelianGroupStructure, m: u64, n: u32) -> bool {
    g.contains_power(m, n)
}

/// `v_p(h)`, convenient when only the order is known.
pub fn p_valuation_of_class_number(h: u64, p: u64) -> u32 {
    valuation(h, p)
}
