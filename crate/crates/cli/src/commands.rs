// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use iwastat::arith::{FundamentalDiscriminant, Splitting};
use iwastat::classgroup::{class_number_analytic, ClassGroup};
use iwastat::cldensity;
use iwastat::iwasawa::{self, LambdaMethod};
use iwastat::randmatrix;
use iwastat::sweep::{self, Family, ReportOptions, SweepConfig, SweepError};
use iwastat::verify::{self, VerifyConfig};
use num_rational::Ratio;
use serde_json::{json, Value};

use crate::output::{bound, density, density_json, sig, Output};
use crate::{
    ClassgroupArgs, CliError, Command, DensitiesArgs, HuntArgs, LambdaArgs, MatrixArgs, SweepArgs,
    VerifyArgs,
};

/// The output, plus a message if an invariant failed along the way.
type Outcome = Result<(Output, Option<String>), CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn from_sweep(e: SweepError) -> CliError {
    match e {
        SweepError::InvariantViolation(m) => CliError::Invariant(m),
        e @ (SweepError::Io { .. }
        | SweepError::Serialize { .. }
        | SweepError::CorruptCheckpoint { .. }
        | SweepError::CheckpointMismatch { .. }) => CliError::Io(e.to_string()),
        e => CliError::Usage(e.to_string()),
    }
}

pub fn run(command: &Command, cache_dir: Option<&Path>) -> Outcome {
    match command {
        Command::Densities(a) => densities(a),
        Command::Classgroup(a) => classgroup(a),
        Command::Lambda(a) => lambda(a),
        Command::Sweep(a) => run_sweep(a, cache_dir),
        Command::MatrixSim(a) => matrix_sim(a),
        Command::Verify(a) => run_verify(a),
        Command::Hunt(a) => hunt(a, cache_dir),
    }
}

fn delta(d: i64) -> Result<FundamentalDiscriminant, CliError> {
    FundamentalDiscriminant::new(d).map_err(usage)
}

fn densities(a: &DensitiesArgs) -> Outcome {
    let (p, n) = (a.p, a.n);
    if n == 0 {
        return Err(usage("--n must be >= 1"));
    }
    let pc = cldensity::pochhammer(p).map_err(usage)?;
    let mut out = Output::new();
    out.line(format!("pochhammer(1/{p}; 1/{p})_inf = {}", density(&pc)));
    let mut exact = Vec::new();
    for k in 0..=n {
        let v = cldensity::density_rank_exact(p, k).map_err(usage)?;
        out.line(format!("density r_{p} = {k}: {}", density(&v)));
        exact.push(json!({ "rank": k, "density": density_json(&v) }));
    }
    let ge = cldensity::density_rank_ge(p, n).map_err(usage)?;
    let lb = cldensity::lambda_lower_bound(p, n).map_err(usage)?;
    let q = Ratio::new(1, p);
    let residual = cldensity::rank_series_identity_residual(q, n).map_err(usage)?;
    out.line(format!("density r_{p} >= {n}: {}", density(&ge)));
    out.line(format!(
        "lower density lambda_{p} >= {n}: >= {}",
        density(&lb)
    ));
    out.line(format!(
        "rank-series identity residual at q = 1/{p}, N = {n}: {}",
        bound(residual)
    ));
    out.set("p", p).set("n", n);
    out.set("pochhammer", density_json(&pc));
    out.set("rank_exact", exact);
    out.set("rank_at_least", density_json(&ge));
    out.set("lambda_lower_bound", density_json(&lb));
    out.set("identity_residual", residual);
    Ok((out, None))
}

fn classgroup(a: &ClassgroupArgs) -> Outcome {
    let d = delta(a.delta)?;
    let g = ClassGroup::new(d).map_err(usage)?;
    let structure = g.structure().map_err(usage)?;
    let h = g.class_number();
    let analytic = class_number_analytic(d);
    let mut out = Output::new();
    out.line(format!("delta = {d}"));
    out.line(format!("h = {h}"));
    out.line(format!("divisors = {structure}"));
    let mut ranks = serde_json::Map::new();
    for &p in &a.primes {
        if !iwastat::arith::is_odd_prime(p) {
            return Err(usage(format!("{p} is not an odd prime")));
        }
        out.line(format!("r_{p} = {}", structure.p_rank(p)));
        ranks.insert(p.to_string(), structure.p_rank(p).into());
    }
    if a.forms {
        for f in g.forms() {
            out.line(format!("form {f}"));
        }
        out.set(
            "forms",
            g.forms()
                .iter()
                .map(|f| json!([f.a, f.b, f.c]))
                .collect::<Vec<_>>(),
        );
    }
    out.set("delta", d.value())
        .set("h", h)
        .set("divisors", structure.divisors().to_vec())
        .set("ranks", ranks);
    out.set("h_analytic", analytic);
    let violation =
        (analytic != h).then(|| format!("forms give h = {h}, analytic formula {analytic}"));
    Ok((out, violation))
}

fn lambda(a: &LambdaArgs) -> Outcome {
    let d = delta(a.delta)?;
    if a.max_level == 0 {
        return Err(usage("--max-level must be >= 1"));
    }
    let h = ClassGroup::new(d).map_err(usage)?.class_number();
    let r = iwasawa::lambda_invariant_with_class_number(d, a.p, h, a.max_level).map_err(usage)?;
    let mut out = Output::new();
    let shown = r
        .lambda
        .map_or_else(|| "none".to_string(), |l| l.to_string());
    out.line(format!(
        "lambda={shown} method={} stable={} level_used={}",
        r.method, r.stable, r.level_used
    ));
    out.set("delta", d.value()).set("p", a.p).set("h", h);
    out.set("lambda", serde_json::to_value(r).expect("serializes"));
    let mut violation = None;
    if d.splitting(a.p) == Splitting::Split
        && h % a.p != 0
        && r.method == LambdaMethod::Stickelberger
    {
        let gold = iwasawa::gold_criterion_with_class_number(d, a.p, h).map_err(usage)?;
        out.line(format!("gold_criterion={gold}"));
        out.set("gold_criterion", gold);
        if let Some(l) = r.stable_value() {
            if gold != (l >= 2) {
                violation = Some(format!("gold criterion {gold} but lambda = {l}"));
            }
        }
    }
    Ok((out, violation))
}

fn checkpoint_path(
    explicit: Option<&PathBuf>,
    cache_dir: Option<&Path>,
    primes: &[u64],
    ceiling: u64,
    level: u32,
) -> Result<Option<PathBuf>, CliError> {
    if let Some(p) = explicit {
        return Ok(Some(p.clone()));
    }
    let Some(dir) = cache_dir else {
        return Ok(None);
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut ps: Vec<u64> = primes.to_vec();
    ps.sort_unstable();
    ps.dedup();
    let tag: Vec<String> = ps.iter().map(u64::to_string).collect();
    Ok(Some(dir.join(format!(
        "sweep-p{}-c{ceiling}-l{level}.jsonl",
        tag.join("_")
    ))))
}

fn estimate_line(e: &sweep::DensityEstimate) -> String {
    let mut s = format!(
        "{} (|Δ| <= {}): {}/{} = {}",
        e.label,
        e.x,
        e.family_count,
        e.total_count,
        sig(e.empirical)
    );
    if let Some(pred) = &e.predicted {
        let rel = if e.lower_bound {
            "lower bound"
        } else {
            "predicted"
        };
        s += &format!(", {rel} {}", density(pred));
    }
    if e.undecided > 0 {
        s += &format!(", {} undecided", e.undecided);
    }
    s
}

fn run_sweep(a: &SweepArgs, cache_dir: Option<&Path>) -> Outcome {
    let config = SweepConfig {
        x: a.x,
        primes: a.primes.clone(),
        lambda_ceiling: a.lambda_ceiling,
        max_level: a.max_level,
        workers: a.workers,
        checkpoint: checkpoint_path(
            a.checkpoint.as_ref(),
            cache_dir,
            &a.primes,
            a.lambda_ceiling,
            a.max_level,
        )?,
        progress: !a.quiet,
    };
    let records = sweep::run_sweep(&config).map_err(from_sweep)?;
    let mut primes = a.primes.clone();
    primes.sort_unstable();
    primes.dedup();

    let mut families = Vec::new();
    for &p in &primes {
        for n in 1..=2 {
            families.push((Family::RankAtLeast { p, n }, a.x));
        }
    }
    let lambda_x = a.lambda_ceiling.min(a.x);
    if lambda_x >= 3 {
        for &p in &primes {
            for n in 1..=2 {
                families.push((Family::RankAtLeast { p, n }, lambda_x));
                families.push((Family::LambdaAtLeast { p, n }, lambda_x));
            }
        }
    }
    let mut estimates = Vec::new();
    for (f, x) in &families {
        estimates.push(sweep::empirical_density(&records, f, *x).map_err(from_sweep)?);
    }

    let mut violation = None;
    let mut checks = Vec::new();
    for &p in &primes {
        for n in 1..=3 {
            match sweep::check_containment(&records, p, n) {
                Ok(c) => checks.push(format!(
                    "containment r_{p} >= {n} in lambda_{p} >= {n}: {c} records"
                )),
                Err(e) => violation = Some(e.to_string()),
            }
        }
    }
    match sweep::check_inert_triviality(&records) {
        Ok(c) => checks.push(format!("non-split, p ∤ h gives lambda = 0: {c} cases")),
        Err(e) => violation = Some(e.to_string()),
    }

    let mut out = Output::new();
    out.line(format!("fields = {}", records.len()));
    for e in &estimates {
        out.line(estimate_line(e));
    }
    for c in &checks {
        out.line(c.clone());
    }
    let mut files = Vec::new();
    if let Some(dir) = &a.out {
        let opts = ReportOptions {
            out_dir: dir.clone(),
            x: a.x,
            primes: primes.clone(),
            csv: true,
            json: true,
            svg: a.svg,
        };
        files = sweep::report(&records, &estimates, &opts).map_err(from_sweep)?;
        for f in &files {
            out.line(format!("wrote {}", f.display()));
        }
    }
    out.set("fields", records.len());
    out.set(
        "densities",
        serde_json::to_value(&estimates).expect("serializes"),
    );
    out.set("checks", checks);
    out.set(
        "files",
        files
            .iter()
            .map(|f| f.display().to_string())
            .collect::<Vec<_>>(),
    );
    Ok((out, violation))
}

fn matrix_sim(a: &MatrixArgs) -> Outcome {
    let hist = if a.exhaustive {
        randmatrix::exhaustive_corank_distribution(a.p, a.size)
    } else {
        randmatrix::sample_corank_distribution(a.p, a.size, a.trials, a.seed)
    }
    .map_err(usage)?;
    let tv = hist.total_variation().map_err(usage)?;
    let mut csv = Vec::new();
    hist.write_csv(&mut csv).map_err(usage)?;
    let csv = String::from_utf8(csv).expect("csv is utf-8");
    if let Some(path) = &a.csv {
        std::fs::write(path, &csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let mut out = Output::new();
    out.line(format!(
        "p = {}, N = {}, trials = {}, seed = {}",
        hist.p, hist.matrix_size, hist.trials, hist.seed
    ));
    out.line(format!("total variation to limit = {}", sig(tv)));
    for l in csv.lines() {
        out.line(l);
    }
    out.set("p", hist.p)
        .set("size", hist.matrix_size)
        .set("trials", hist.trials)
        .set("seed", hist.seed);
    out.set("total_variation", tv);
    out.set(
        "rows",
        serde_json::to_value(hist.rows().map_err(usage)?).expect("serializes"),
    );
    Ok((out, None))
}

fn run_verify(a: &VerifyArgs) -> Outcome {
    let config = VerifyConfig {
        class_number_bound: a.class_number_bound,
        lambda_bound: a.lambda_bound,
        primes: a.primes.clone(),
        workers: a.workers,
    };
    let report = verify::run_suite(&config);
    let mut out = Output::new();
    for l in report.to_string().lines() {
        out.line(l);
    }
    out.set(
        "checks",
        serde_json::to_value(&report.checks).expect("serializes"),
    );
    out.set("passed", report.passed());
    let violation = (!report.passed()).then(|| "verify suite reported failures".to_string());
    Ok((out, violation))
}

fn parse_family(text: &str) -> Result<Family, CliError> {
    let bad = || usage(format!("cannot parse family {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [kind, a, n] = parts[..] else {
        return Err(bad());
    };
    let n: u32 = n.parse().map_err(|_| bad())?;
    let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
    Ok(match kind {
        "rank" => Family::RankAtLeast { p: num(a)?, n },
        "contains" => Family::ContainsPower { m: num(a)?, n },
        "lambda" => Family::LambdaAtLeastAll {
            primes: a.split(',').map(num).collect::<Result<_, _>>()?,
            n,
        },
        _ => return Err(bad()),
    })
}

fn hunt(a: &HuntArgs, cache_dir: Option<&Path>) -> Outcome {
    let family = parse_family(&a.family)?;
    let mut primes = match &family {
        Family::RankAtLeast { p, .. } | Family::LambdaAtLeast { p, .. } => vec![*p],
        Family::LambdaAtLeastAll { primes, .. } => primes.clone(),
        Family::ContainsPower { m, .. } => iwastat::arith::factorize(*m)
            .into_iter()
            .map(|(q, _)| q)
            .filter(|&q| q > 2)
            .collect(),
    };
    if primes.is_empty() {
        primes.push(3);
    }
    let ceiling = if matches!(family, Family::LambdaAtLeastAll { .. }) {
        a.lambda_ceiling.min(a.x)
    } else {
        0
    };
    let config = SweepConfig {
        lambda_ceiling: ceiling,
        workers: a.workers,
        progress: !a.quiet,
        checkpoint: checkpoint_path(
            None,
            cache_dir,
            &primes,
            ceiling,
            iwasawa::DEFAULT_MAX_LEVEL,
        )?,
        ..SweepConfig::new(a.x, primes)
    };
    let records = sweep::run_sweep(&config).map_err(from_sweep)?;
    let records: Vec<_> = records
        .into_iter()
        .filter(|r| r.delta.abs() <= a.x)
        .collect();
    let found = sweep::hunt_examples(&records, &family).map_err(from_sweep)?;
    let mut out = Output::new();
    out.line(format!(
        "family {family} over |Δ| <= {}: {} members",
        a.x,
        found.len()
    ));
    let mut violation = None;
    let mut smallest = Value::Null;
    if let Some(d) = found.first() {
        let r = records
            .iter()
            .find(|r| r.delta == *d)
            .expect("hunted from records");
        let analytic = class_number_analytic(*d);
        out.line(format!(
            "smallest Δ = {d}, h = {} (analytic {analytic}), divisors = {}",
            r.h, r.structure
        ));
        if analytic != r.h {
            violation = Some(format!(
                "Δ = {d}: forms give h = {}, analytic formula {analytic}",
                r.h
            ));
        }
        smallest = json!({ "delta": d.value(), "h": r.h, "h_analytic": analytic, "divisors": r.structure.divisors() });
    }
    let shown: Vec<i64> = found.iter().take(a.limit).map(|d| d.value()).collect();
    if !shown.is_empty() {
        let s: Vec<String> = shown.iter().map(i64::to_string).collect();
        out.line(format!("members: {}", s.join(" ")));
    }
    out.set("family", family.to_string())
        .set("x", a.x)
        .set("count", found.len())
        .set("smallest", smallest)
        .set("members", shown);
    Ok((out, violation))
}
