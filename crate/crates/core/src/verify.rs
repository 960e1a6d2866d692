// SPDX-License-Identifier: Apache-2.0

//! The invariant suite behind `iwastat verify`.
//!
//! Each check recomputes a quantity along two independent routes or tests
//! an inequality over a finite range. The report text carries no timings,
//! so two runs with the same configuration are byte-identical.

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::arith::{self, Splitting};
use crate::classgroup::{class_number_analytic, FormEnumerator};
use crate::cldensity::{self, exact};
use crate::iwasawa::{self, DistinguishedPolynomial, LambdaNormalForm};
use crate::randmatrix;
use crate::sweep::{self, SweepConfig, SweepRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyConfig {
    /// Range of the class-number dual oracle.
    pub class_number_bound: u64,
    /// Range of the `λ` checks.
    pub lambda_bound: u64,
    pub primes: Vec<u64>,
    pub workers: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            class_number_bound: 10_000,
            lambda_bound: 2000,
            primes: vec![3, 5],
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

type Check = Result<String, String>;

pub fn run_suite(config: &VerifyConfig) -> VerifyReport {
    let records = lambda_records(config);
    let checks: Vec<(&'static str, Check)> = vec![
        ("density routes", density_routes()),
        ("identity residuals", identity_residuals()),
        ("euler expansion", euler_expansion()),
        (
            "class number oracles",
            class_number_oracles(config.class_number_bound),
        ),
        (
            "lambda >= r_p",
            records
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|r| lambda_vs_rank(r, &config.primes)),
        ),
        (
            "containment",
            records
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|r| containment(r, &config.primes)),
        ),
        (
            "non-split triviality",
            records
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|r| non_split(r)),
        ),
        (
            "split positivity",
            records
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|r| split_positivity(r)),
        ),
        (
            "gold cross-check",
            records.as_ref().map_err(Clone::clone).and_then(|r| gold(r)),
        ),
        ("exhaustive matrices", exhaustive_matrices()),
        ("normal forms", normal_forms()),
    ];
    VerifyReport {
        checks: checks
            .into_iter()
            .map(|(name, r)| match r {
                Ok(detail) => CheckOutcome {
                    name,
                    passed: true,
                    detail,
                },
                Err(detail) => CheckOutcome {
                    name,
                    passed: false,
                    detail,
                },
            })
            .collect(),
    }
}

fn lambda_records(config: &VerifyConfig) -> Result<Vec<SweepRecord>, String> {
    let sweep = SweepConfig {
        lambda_ceiling: config.lambda_bound,
        workers: config.workers,
        ..SweepConfig::new(config.lambda_bound.max(3), config.primes.clone())
    };
    sweep::run_sweep(&sweep).map_err(|e| e.to_string())
}

fn density_routes() -> Check {
    let mut compared = 0;
    for p in [3u64, 5, 7] {
        for n in 1..=4 {
            let a = cldensity::density_rank_ge(p, n).map_err(|e| e.to_string())?;
            let b = cldensity::lambda_lower_bound(p, n).map_err(|e| e.to_string())?;
            let iv = exact::density_rank_ge(p, n, 60);
            if (a.value - b.value).abs() >= 1e-12 || !iv.near(a.value, a.error_bound + 1e-15) {
                return Err(format!(
                    "p = {p}, n = {n}: {} vs {} vs [{}, {}]",
                    a.value,
                    b.value,
                    exact::to_f64(&iv.lo),
                    exact::to_f64(&iv.hi)
                ));
            }
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} (p, n) pairs agree with exact intervals"
    ))
}

fn identity_residuals() -> Check {
    let mut out = Vec::new();
    for (q, n, tol) in [(Ratio::new(1, 3), 10, 1e-6), (Ratio::new(1, 5), 8, 1e-8)] {
        let r = cldensity::rank_series_identity_residual(q, n).map_err(|e| e.to_string())?;
        if r >= tol {
            return Err(format!("q = {q}, N = {n}: residual {r:.3e}"));
        }
        let mut prev = f64::INFINITY;
        for m in [1, 2, 4, 8] {
            let r = cldensity::rank_series_identity_residual(q, m).map_err(|e| e.to_string())?;
            if r >= prev {
                return Err(format!("q = {q}: residual did not drop at N = {m}"));
            }
            prev = r;
        }
        out.push(format!("q = {q}, N = {n}: {r:.3e}"));
    }
    Ok(out.join("; "))
}

/// `(-1)^k` summed over partitions of `d` into `k` distinct parts, by
/// enumerating the partitions.
fn distinct_partition_signs(n: usize) -> Vec<i64> {
    fn walk(next: usize, sum: usize, sign: i64, n: usize, table: &mut [i64]) {
        table[sum] += sign;
        for part in next..=n - sum {
            walk(part + 1, sum + part, -sign, n, table);
        }
    }
    let mut table = vec![0i64; n + 1];
    walk(1, 0, 1, n, &mut table);
    table
}

fn euler_expansion() -> Check {
    let n = 60;
    let coeffs = cldensity::euler_expansion_coeffs(n);
    // pentagonal numbers k(3k-1)/2 carry (-1)^k
    let mut pentagonal = vec![0i64; n + 1];
    for k in 0i64.. {
        let mut hit = false;
        for m in [k * (3 * k - 1) / 2, k * (3 * k + 1) / 2] {
            if (m as usize) <= n {
                pentagonal[m as usize] = if k % 2 == 0 { 1 } else { -1 };
                hit = true;
            }
        }
        if !hit {
            break;
        }
    }
    if coeffs != pentagonal || coeffs != distinct_partition_signs(n) {
        return Err("coefficients differ from the pentagonal expansion".into());
    }
    if coeffs[..8] != [1, -1, -1, 0, 0, 1, 0, 1] {
        return Err(format!("degree <= 7 prefix is {:?}", &coeffs[..8]));
    }
    Ok(format!("{} coefficients match", n + 1))
}

fn class_number_oracles(bound: u64) -> Check {
    let en = FormEnumerator::new(bound).map_err(|e| e.to_string())?;
    let fields = arith::enumerate_fundamental(bound);
    for d in &fields {
        let forms = en.reduced_forms(*d).map_err(|e| e.to_string())?.len() as u64;
        let analytic = class_number_analytic(*d);
        if forms != analytic {
            return Err(format!(
                "Δ = {d}: forms give {forms}, analytic formula {analytic}"
            ));
        }
    }
    Ok(format!(
        "{} discriminants with |Δ| <= {bound}",
        fields.len()
    ))
}

fn lambda_vs_rank(records: &[SweepRecord], primes: &[u64]) -> Check {
    let mut compared = 0;
    let mut unsupported = 0;
    for r in records {
        for e in &r.primes {
            match e.stable_lambda() {
                Some(l) if l < e.r_p => {
                    return Err(format!("Δ = {}: λ_{} = {l} < r = {}", r.delta, e.p, e.r_p))
                }
                Some(_) => compared += 1,
                None => unsupported += 1,
            }
        }
    }
    Ok(format!(
        "{compared} stable values over p in {primes:?}, {unsupported} without a stable value"
    ))
}

fn containment(records: &[SweepRecord], primes: &[u64]) -> Check {
    let mut total = 0;
    for &p in primes {
        for n in 1..=3 {
            total += sweep::check_containment(records, p, n).map_err(|e| e.to_string())?;
        }
    }
    Ok(format!("{total} inclusions checked"))
}

fn non_split(records: &[SweepRecord]) -> Check {
    let checked = sweep::check_inert_triviality(records).map_err(|e| e.to_string())?;
    let inert_zero = records
        .iter()
        .flat_map(|r| r.primes.iter())
        .filter(|e| e.splitting == Splitting::Inert && e.stable_lambda() == Some(0))
        .count();
    if inert_zero == 0 {
        return Err("no inert prime with λ = 0".into());
    }
    Ok(format!(
        "{checked} cases with λ = 0, {inert_zero} of them inert"
    ))
}

fn split_positivity(records: &[SweepRecord]) -> Check {
    let mut n = 0;
    for r in records {
        for e in r.primes.iter().filter(|e| e.splitting == Splitting::Split) {
            match e.stable_lambda() {
                Some(l) if l >= 1 => n += 1,
                other => return Err(format!("Δ = {}, p = {}: λ = {other:?}", r.delta, e.p)),
            }
        }
    }
    Ok(format!("{n} split cases with λ >= 1"))
}

fn gold(records: &[SweepRecord]) -> Check {
    let mut agree = 0;
    for r in records {
        for e in &r.primes {
            if e.splitting != Splitting::Split || r.h % e.p == 0 {
                continue;
            }
            let Some(l) = e.stable_lambda() else { continue };
            let g = iwasawa::gold_criterion_with_class_number(r.delta, e.p, r.h)
                .map_err(|e| e.to_string())?;
            if g != (l >= 2) {
                return Err(format!(
                    "Δ = {}, p = {}: criterion {g}, λ = {l}",
                    r.delta, e.p
                ));
            }
            agree += 1;
        }
    }
    if agree < 50 {
        return Err(format!("only {agree} applicable cases"));
    }
    Ok(format!("{agree} agreements"))
}

fn exhaustive_matrices() -> Check {
    let mut out = Vec::new();
    for p in [3u64, 5] {
        for n in 1..=2u32 {
            let h = randmatrix::exhaustive_corank_distribution(p, n).map_err(|e| e.to_string())?;
            // rank-r count: ∏_{i<r} (p^n - p^i)² / (p^r - p^i)
            for k in 0..=n {
                let r = n - k;
                let mut num = 1u128;
                let mut den = 1u128;
                for i in 0..r {
                    let a = (p.pow(n) - p.pow(i)) as u128;
                    num *= a * a;
                    den *= (p.pow(r) - p.pow(i)) as u128;
                }
                if h.count(k) as u128 != num / den {
                    return Err(format!(
                        "p = {p}, N = {n}, corank {k}: {} vs {}",
                        h.count(k),
                        num / den
                    ));
                }
            }
            out.push(format!("{p}:{n}"));
        }
    }
    Ok(format!("counts exact for (p, N) in {}", out.join(" ")))
}

fn normal_forms() -> Check {
    let lin = DistinguishedPolynomial::new(3, 4, vec![3, 1]).map_err(|e| e.to_string())?;
    let quad = DistinguishedPolynomial::new(3, 4, vec![3, -6, 1]).map_err(|e| e.to_string())?;
    let cases = [
        (
            LambdaNormalForm {
                mu_exponents: vec![1],
                torsion_factors: vec![],
            },
            true,
        ),
        (
            LambdaNormalForm {
                mu_exponents: vec![],
                torsion_factors: vec![(lin.clone(), 1)],
            },
            true,
        ),
        (
            LambdaNormalForm {
                mu_exponents: vec![2],
                torsion_factors: vec![(quad.clone(), 1)],
            },
            false,
        ),
        (
            LambdaNormalForm {
                mu_exponents: vec![1, 1],
                torsion_factors: vec![(lin, 3), (quad, 1)],
            },
            false,
        ),
    ];
    for (x, tight) in &cases {
        let inv = iwasawa::normal_form_invariants(x).map_err(|e| e.to_string())?;
        if inv.mu + inv.lambda < inv.g || (inv.mu + inv.lambda == inv.g) != *tight {
            return Err(format!("{x:?} gives {inv:?}"));
        }
    }
    Ok(format!("{} modules satisfy mu + lambda >= g", cases.len()))
}
