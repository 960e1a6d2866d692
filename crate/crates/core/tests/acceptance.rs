// SPDX-License-Identifier: Apache-2.0

//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Stretch hunts are printed as INFO.

use std::time::{Duration, Instant};

use iwastat::arith::{self, Splitting};
use iwastat::classgroup::{class_number_analytic, ClassGroup, FormEnumerator};
use iwastat::cldensity::{self, exact};
use iwastat::iwasawa;
use iwastat::randmatrix;
use iwastat::sweep::{self, Family, ReportOptions, SweepConfig, SweepRecord};
use iwastat::verify::{self, VerifyConfig};
use num_rational::Ratio;

type Outcome = Result<String, String>;

struct Runner {
    failed: Vec<u32>,
}

impl Runner {
    fn run(&mut self, id: u32, title: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let mut outcome = f();
        let took = start.elapsed();
        if let (Ok(detail), Some(b)) = (&outcome, budget) {
            if took > b {
                outcome = Err(format!("{detail}; took {took:.1?}, budget {b:?}"));
            }
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} [{id:>2}] {title}: {detail} ({took:.2?})");
        if outcome.is_err() {
            self.failed.push(id);
        }
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn text<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn density_suite() -> Outcome {
    let a = cldensity::density_rank_ge(3, 2).map_err(text)?.value;
    if (a - 0.0197794).abs() > 1e-6 {
        return Err(format!("density_rank_ge(3, 2) = {a}"));
    }
    let mut pairs = 0;
    for p in [3u64, 5, 7] {
        for n in 1..=4 {
            let a = cldensity::density_rank_ge(p, n).map_err(text)?;
            let b = cldensity::lambda_lower_bound(p, n).map_err(text)?;
            let iv = exact::density_rank_ge(p, n, 60);
            if (a.value - b.value).abs() >= 1e-12 {
                return Err(format!(
                    "p = {p}, n = {n}: routes differ by {:e}",
                    (a.value - b.value).abs()
                ));
            }
            if !iv.near(a.value, a.error_bound + 1e-15) {
                return Err(format!(
                    "p = {p}, n = {n}: {} outside exact interval",
                    a.value
                ));
            }
            pairs += 1;
        }
    }
    Ok(format!(
        "density_rank_ge(3, 2) = {a:.7}, {pairs} (p, n) pairs inside exact intervals"
    ))
}

fn identity() -> Outcome {
    let mut out = Vec::new();
    for (q, n, tol) in [(Ratio::new(1u64, 3), 10, 1e-6), (Ratio::new(1, 5), 8, 1e-8)] {
        let r = cldensity::rank_series_identity_residual(q, n).map_err(text)?;
        if r >= tol {
            return Err(format!("q = {q}, N = {n}: residual {r:.3e} >= {tol:e}"));
        }
        let rs: Vec<f64> = [1, 2, 4, 8, 16]
            .iter()
            .map(|&m| cldensity::rank_series_identity_residual(q, m))
            .collect::<Result<_, _>>()
            .map_err(text)?;
        if rs.windows(2).any(|w| w[1] >= w[0]) {
            return Err(format!("q = {q}: residuals {rs:?} not strictly decreasing"));
        }
        out.push(format!("q = {q}, N = {n}: {r:.2e}"));
    }
    Ok(out.join("; "))
}

/// Multiplies out (1 - q)(1 - q^2)...(1 - q^n) term by term.
fn product_expansion(n: usize) -> Vec<i64> {
    let mut poly = vec![0i64; n + 1];
    poly[0] = 1;
    for i in 1..=n {
        let prev = poly.clone();
        for d in i..=n {
            poly[d] -= prev[d - i];
        }
    }
    poly
}

fn euler() -> Outcome {
    let c = cldensity::euler_expansion_coeffs(60);
    if c != product_expansion(60) {
        return Err("differs from the expanded product".into());
    }
    if c[..8] != [1, -1, -1, 0, 0, 1, 0, 1] {
        return Err(format!("prefix {:?}", &c[..8]));
    }
    Ok("61 coefficients equal; prefix 1 - q - q^2 + q^5 + q^7".into())
}

fn class_numbers() -> Outcome {
    let en = FormEnumerator::new(10_000).map_err(text)?;
    let fields = arith::enumerate_fundamental(10_000);
    for d in &fields {
        let forms = en.reduced_forms(*d).map_err(text)?.len() as u64;
        let analytic = class_number_analytic(*d);
        if forms != analytic {
            return Err(format!("Δ = {d}: {forms} forms, analytic {analytic}"));
        }
    }
    Ok(format!("{} discriminants agree", fields.len()))
}

/// Entries for `p ∤ Δ`, the range of the λ criteria.
fn unramified(records: &[SweepRecord]) -> impl Iterator<Item = (&SweepRecord, &sweep::PrimeEntry)> {
    records
        .iter()
        .flat_map(|r| r.primes.iter().map(move |e| (r, e)))
        .filter(|(_, e)| e.splitting != Splitting::Ramified)
}

fn lambda_ge_rank(records: &[SweepRecord]) -> Outcome {
    let mut compared = 0;
    for (r, e) in unramified(records) {
        match e.stable_lambda() {
            Some(l) if l >= e.r_p => compared += 1,
            other => {
                return Err(format!(
                    "Δ = {}, p = {}: λ = {other:?}, r = {}",
                    r.delta, e.p, e.r_p
                ))
            }
        }
    }
    let trivial = sweep::check_inert_triviality(records).map_err(text)?;
    Ok(format!(
        "{compared} unramified cases with λ >= r_p; {trivial} non-split p ∤ h cases with λ = 0"
    ))
}

fn inclusion(records: &[SweepRecord]) -> Outcome {
    let mut out = Vec::new();
    for p in [3u64, 5] {
        let mut rank = 0;
        for (r, e) in unramified(records).filter(|(_, e)| e.p == p && e.r_p >= 1) {
            rank += 1;
            if e.stable_lambda().is_none_or(|l| l < 1) {
                return Err(format!(
                    "Δ = {} has r_{p} >= 1 but λ = {:?}",
                    r.delta,
                    e.stable_lambda()
                ));
            }
        }
        out.push(format!("|r_{p} >= 1| = {rank}"));
    }
    Ok(format!("{}, all inside λ >= 1", out.join(", ")))
}

fn dichotomy(records: &[SweepRecord]) -> Outcome {
    let mut split = 0;
    let mut inert_zero = 0;
    for (r, e) in unramified(records) {
        match (e.splitting, e.stable_lambda()) {
            (Splitting::Split, Some(l)) if l >= 1 => split += 1,
            (Splitting::Split, l) => {
                return Err(format!(
                    "Δ = {}, p = {}: split with λ = {l:?}",
                    r.delta, e.p
                ))
            }
            (_, Some(0)) => inert_zero += 1,
            _ => {}
        }
    }
    if inert_zero == 0 {
        return Err("no inert case with λ = 0".into());
    }
    Ok(format!(
        "{split} split cases with λ >= 1, {inert_zero} inert cases with λ = 0"
    ))
}

fn gold(records: &[SweepRecord]) -> Outcome {
    let mut agree = 0;
    let mut high = 0;
    for (r, e) in
        unramified(records).filter(|(r, e)| e.splitting == Splitting::Split && r.h % e.p != 0)
    {
        let l = e
            .stable_lambda()
            .ok_or_else(|| format!("Δ = {}: no stable λ", r.delta))?;
        let g = iwasawa::gold_criterion(r.delta, e.p).map_err(text)?;
        if g != (l >= 2) {
            return Err(format!(
                "Δ = {}, p = {}: criterion {g}, λ = {l}",
                r.delta, e.p
            ));
        }
        agree += 1;
        high += g as u32;
    }
    if agree < 50 {
        return Err(format!("only {agree} cases"));
    }
    Ok(format!("{agree} agreements, {high} with λ >= 2"))
}

fn empirical_cl(records: &[SweepRecord]) -> Outcome {
    let mut out = Vec::new();
    let mut ok = true;
    for p in [3u64, 5] {
        let d = sweep::empirical_density(records, &Family::RankAtLeast { p, n: 1 }, 1_000_000)
            .map_err(text)?;
        let err = d.abs_error.ok_or("no prediction")?;
        ok &= err < 0.05;
        out.push(format!(
            "d(r_{p} >= 1) = {:.5} vs {:.7} (|diff| {err:.4})",
            d.empirical,
            d.predicted.unwrap().value
        ));
    }
    let msg = format!("{} fields; {}", records.len(), out.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn confirm(d: arith::FundamentalDiscriminant) -> Result<String, String> {
    let g = ClassGroup::new(d).map_err(text)?;
    let analytic = class_number_analytic(d);
    if g.class_number() != analytic {
        return Err(format!(
            "Δ = {d}: forms give {}, analytic {analytic}",
            g.class_number()
        ));
    }
    Ok(format!(
        "Δ = {d}, h = {analytic}, divisors {:?}",
        g.structure().map_err(text)?.divisors()
    ))
}

fn hunts(records: &[SweepRecord]) -> Outcome {
    let small: Vec<SweepRecord> = records
        .iter()
        .filter(|r| r.delta.abs() <= 10_000)
        .cloned()
        .collect();
    let rank3 = sweep::hunt_examples(&small, &Family::RankAtLeast { p: 3, n: 3 }).map_err(text)?;
    let sq = sweep::hunt_examples(&small, &Family::ContainsPower { m: 3, n: 2 }).map_err(text)?;
    let sq_msg = match sq.first() {
        Some(&d) => format!(
            "contains (Z/3)^2: {} members, smallest {}",
            sq.len(),
            confirm(d)?
        ),
        None => "contains (Z/3)^2: empty".into(),
    };
    match rank3.first() {
        Some(&d) if !sq.is_empty() => Ok(format!("r_3 >= 3: smallest {}; {sq_msg}", confirm(d)?)),
        _ => Err(format!(
            "r_3 >= 3 over |Δ| <= 10^4: {} members; {sq_msg}",
            rank3.len()
        )),
    }
}

fn stretch(records: &[SweepRecord], x: u64) {
    for family in [
        Family::RankAtLeast { p: 3, n: 4 },
        Family::ContainsPower { m: 15, n: 2 },
        Family::RankAtLeast { p: 3, n: 3 },
    ] {
        match sweep::hunt_examples(records, &family) {
            Ok(found) => match found.first() {
                Some(&d) => println!(
                    "INFO stretch {family} over |Δ| <= {x}: {} members, smallest {d}",
                    found.len()
                ),
                None => println!("INFO stretch {family} over |Δ| <= {x}: none"),
            },
            Err(err) => println!("INFO stretch {family}: {err}"),
        }
    }
}

/// Rank of an n x n matrix over F_p for n <= 2, by determinant.
fn brute_rank(m: &[u64], n: usize, p: u64) -> u32 {
    if m.iter().all(|&x| x == 0) {
        0
    } else if n == 1 || (m[0] * m[3] + p * p - m[1] * m[2]).is_multiple_of(p) {
        1
    } else {
        2
    }
}

fn matrices() -> Outcome {
    for p in [3u64, 5] {
        for n in 1..=2usize {
            let h = randmatrix::exhaustive_corank_distribution(p, n as u32).map_err(text)?;
            let cells = n * n;
            let mut counts = vec![0u64; n + 1];
            for idx in 0..p.pow(cells as u32) {
                let m: Vec<u64> = (0..cells).map(|i| idx / p.pow(i as u32) % p).collect();
                counts[n - brute_rank(&m, n, p) as usize] += 1;
            }
            for (k, &c) in counts.iter().enumerate() {
                if h.count(k as u32) != c {
                    return Err(format!(
                        "p = {p}, N = {n}, corank {k}: {} vs {c}",
                        h.count(k as u32)
                    ));
                }
            }
        }
    }
    let h = randmatrix::sample_corank_distribution(3, 60, 100_000, 20240601).map_err(text)?;
    let f0 = h.frequency(0);
    let tv = h.total_variation().map_err(text)?;
    let msg = format!("exhaustive N <= 2 exact; N = 60, T = 10^5: freq(0) = {f0:.5}, TV = {tv:.5}");
    if (f0 - 0.5601261).abs() < 0.01 && tv < 0.015 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let config = VerifyConfig::default();
    let a = verify::run_suite(&config);
    let b = verify::run_suite(&config);
    if !a.passed() {
        return Err(format!("verify failed:\n{a}"));
    }
    if a.to_string() != b.to_string() {
        return Err("verify outputs differ".into());
    }

    let dir = tempfile::tempdir().map_err(text)?;
    let ck = dir.path().join("ck.jsonl");
    let x = 40_000;
    let mut config = SweepConfig::new(x, vec![3, 5]);
    config.checkpoint = Some(ck.clone());
    sweep::run_sweep(&config).map_err(text)?;
    // cut the checkpoint mid-line, as a kill during a write would
    let bytes = std::fs::read(&ck).map_err(text)?;
    let cut = bytes.len() * 2 / 5;
    if bytes[cut - 1] == b'\n' {
        return Err("cut landed on a line boundary".into());
    }
    std::fs::write(&ck, &bytes[..cut]).map_err(text)?;
    let resumed = sweep::run_sweep(&config).map_err(text)?;
    config.checkpoint = None;
    let fresh = sweep::run_sweep(&config).map_err(text)?;

    let write = |records: &[SweepRecord], name: &str| -> Result<Vec<Vec<u8>>, String> {
        let family = Family::RankAtLeast { p: 3, n: 1 };
        let densities = vec![sweep::empirical_density(records, &family, x).map_err(text)?];
        let out_dir = dir.path().join(name);
        let options = ReportOptions {
            out_dir,
            x,
            primes: vec![3, 5],
            csv: true,
            json: true,
            svg: true,
        };
        let paths = sweep::report(records, &densities, &options).map_err(text)?;
        paths
            .iter()
            .map(|p| std::fs::read(p).map_err(text))
            .collect()
    };
    if write(&resumed, "resumed")? != write(&fresh, "fresh")? {
        return Err("resumed sweep reports differ from a fresh run".into());
    }
    Ok(format!(
        "two verify runs identical ({} checks); resume after a cut at byte {cut} matches",
        a.checks.len()
    ))
}

fn main() {
    let mut r = Runner { failed: Vec::new() };
    r.run(1, "density formulas", secs(1), density_suite);
    r.run(2, "identity residuals", secs(1), identity);
    r.run(3, "euler expansion", secs(1), euler);
    r.run(4, "class number dual oracle", secs(120), class_numbers);

    let lambda_records = sweep::run_sweep(&SweepConfig::new(2000, vec![3, 5])).expect("λ sweep");
    r.run(5, "lambda >= r_p", secs(1800), || {
        lambda_ge_rank(&lambda_records)
    });
    r.run(6, "rank/lambda inclusion", None, || {
        inclusion(&lambda_records)
    });
    r.run(7, "split/inert dichotomy", None, || {
        dichotomy(&lambda_records)
    });
    r.run(8, "gold cross-check", None, || gold(&lambda_records));

    let mut cl = Vec::new();
    r.run(9, "empirical Cohen-Lenstra", secs(1800), || {
        cl = sweep::run_sweep(&SweepConfig {
            lambda_ceiling: 0,
            ..SweepConfig::new(1_000_000, vec![3, 5])
        })
        .map_err(text)?;
        empirical_cl(&cl)
    });
    r.run(10, "example hunts", None, || hunts(&cl));
    stretch(&cl, 1_000_000);
    r.run(11, "random matrices", secs(60), matrices);
    r.run(12, "determinism", None, determinism);

    println!("{} criteria, {} failed {:?}", 12, r.failed.len(), r.failed);
    if !r.failed.is_empty() {
        std::process::exit(1);
    }
}
