// SPDX-License-Identifier: Apache-2.0

//! Discriminant sweeps: one record per field, densities of named families,
//! example hunts and reports.
//!
//! Work is split into blocks of `|Δ|` values `(k·4096, (k+1)·4096]`. Blocks
//! run in parallel in small batches and the batch results are appended to
//! the checkpoint in block order, so the checkpoint is always a prefix of
//! the sorted record stream.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, FundamentalDiscriminant, Splitting};
use crate::classgroup::{AbelianGroupStructure, ClassGroup, ClassGroupError, FormEnumerator};
use crate::cldensity::{self, DensityValue};
use crate::iwasawa::{self, IwasawaError, LambdaMethod, LambdaResult};

pub const SCHEMA_VERSION: &str = "1";
pub const BLOCK: u64 = 4096;
pub const DEFAULT_LAMBDA_CEILING: u64 = 2000;
pub const FSYNC_EVERY: usize = 1000;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    ClassGroup(#[from] ClassGroupError),
    #[error(transparent)]
    Iwasawa(#[from] IwasawaError),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: corrupt checkpoint record: {message}")]
    CorruptCheckpoint {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: checkpoint was written with a different configuration")]
    CheckpointMismatch { path: PathBuf, line: usize },
    #[error("partial data: {0}")]
    PartialData(String),
    #[error("{path}: {source}")]
    Serialize {
        path: PathBuf,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Per-prime data of one field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeEntry {
    pub p: u64,
    pub splitting: Splitting,
    pub r_p: u32,
    pub lambda: Option<LambdaResult>,
}

impl PrimeEntry {
    /// The `λ` value when it was computed and is stable.
    pub fn stable_lambda(&self) -> Option<u32> {
        self.lambda.and_then(|l| l.stable_value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta: FundamentalDiscriminant,
    pub h: u64,
    pub structure: AbelianGroupStructure,
    pub primes: Vec<PrimeEntry>,
}

impl SweepRecord {
    /// Class group, `p`-ranks and, for `|Δ| <= lambda_ceiling`, `λ_p`.
    pub fn compute(
        delta: FundamentalDiscriminant,
        primes: &[u64],
        lambda_ceiling: u64,
        max_level: u32,
        enumerator: &FormEnumerator,
    ) -> Result<Self, SweepError> {
        let group = ClassGroup::with_enumerator(delta, enumerator)?;
        let h = group.class_number();
        let structure = group.structure()?;
        let mut entries = Vec::with_capacity(primes.len());
        for &p in primes {
            let lambda = if delta.abs() <= lambda_ceiling {
                Some(iwasawa::lambda_invariant_with_class_number(
                    delta, p, h, max_level,
                )?)
            } else {
                None
            };
            entries.push(PrimeEntry {
                p,
                splitting: delta.splitting(p),
                r_p: structure.p_rank(p),
                lambda,
            });
        }
        let record = Self {
            delta,
            h,
            structure,
            primes: entries,
        };
        record.check()?;
        Ok(record)
    }

    /// `h = |G|`, `r_p = rank_p G`, and `λ_p >= r_p` where `λ_p` is stable.
    pub fn check(&self) -> Result<(), SweepError> {
        let fail = |what: String| {
            Err(SweepError::InvariantViolation(format!(
                "Δ = {}: {what}",
                self.delta
            )))
        };
        if self.structure.order() != self.h {
            return fail(format!(
                "h = {} but |{}| = {}",
                self.h,
                self.structure,
                self.structure.order()
            ));
        }
        for e in &self.primes {
            if e.r_p != self.structure.p_rank(e.p) {
                return fail(format!(
                    "stored r_{} = {} disagrees with {}",
                    e.p, e.r_p, self.structure
                ));
            }
            if let Some(l) = e.stable_lambda() {
                if l < e.r_p {
                    return fail(format!("λ_{} = {l} < r_{} = {}", e.p, e.p, e.r_p));
                }
            }
        }
        Ok(())
    }

    pub fn entry(&self, p: u64) -> Option<&PrimeEntry> {
        self.primes.iter().find(|e| e.p == p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    pub x: u64,
    pub primes: Vec<u64>,
    pub lambda_ceiling: u64,
    pub max_level: u32,
    /// Thread count; `None` uses every core. Ignored without the `parallel` feature.
    pub workers: Option<usize>,
    pub checkpoint: Option<PathBuf>,
    /// Print one line per finished block to standard error.
    pub progress: bool,
}

impl SweepConfig {
    pub fn new(x: u64, primes: Vec<u64>) -> Self {
        Self {
            x,
            primes,
            lambda_ceiling: DEFAULT_LAMBDA_CEILING,
            max_level: iwasawa::DEFAULT_MAX_LEVEL,
            workers: None,
            checkpoint: None,
            progress: false,
        }
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.x < 3 {
            return Err(SweepError::InvalidArgument(format!(
                "x = {} but the smallest |Δ| is 3",
                self.x
            )));
        }
        if self.primes.is_empty() {
            return Err(SweepError::InvalidArgument(
                "at least one prime is required".into(),
            ));
        }
        if let Some(&p) = self.primes.iter().find(|&&p| !arith::is_odd_prime(p)) {
            return Err(SweepError::InvalidArgument(format!(
                "{p} is not an odd prime"
            )));
        }
        if self.workers == Some(0) {
            return Err(SweepError::InvalidArgument("workers must be >= 1".into()));
        }
        Ok(())
    }

    fn normalized_primes(&self) -> Vec<u64> {
        self.primes
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Records for every fundamental `Δ` with `|Δ| <= x`, sorted by `|Δ|`.
///
/// With a checkpoint path, existing records are replayed first and new
/// ones appended; a final line cut off mid-write is dropped.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>, SweepError> {
    config.validate()?;
    let primes = config.normalized_primes();
    let mut records = Vec::new();
    let mut writer = None;
    if let Some(path) = &config.checkpoint {
        let (replayed, file) = open_checkpoint(path, &primes, config.lambda_ceiling)?;
        records = replayed;
        writer = Some(CheckpointWriter::new(path, file));
    }
    let done = records.last().map_or(0, |r| r.delta.abs());
    records.retain(|r| r.delta.abs() <= config.x);

    let enumerator = FormEnumerator::new(config.x)?;
    let mut ranges = Vec::new();
    let mut lo = done + 1;
    while lo <= config.x {
        let hi = ((lo - 1) / BLOCK + 1) * BLOCK;
        let hi = hi.min(config.x);
        ranges.push((lo, hi));
        lo = hi + 1;
    }

    let batch = 2 * config.workers.unwrap_or_else(available_workers).max(1);
    let job = |&(lo, hi): &(u64, u64)| -> Result<Vec<SweepRecord>, SweepError> {
        arith::fundamental_in_range(lo, hi)
            .into_iter()
            .map(|d| {
                SweepRecord::compute(
                    d,
                    &primes,
                    config.lambda_ceiling,
                    config.max_level,
                    &enumerator,
                )
            })
            .collect()
    };
    let run = || -> Result<(), SweepError> {
        for chunk in ranges.chunks(batch) {
            for (range, block) in chunk.iter().zip(map_blocks(chunk, &job)) {
                let block = block?;
                if let Some(w) = writer.as_mut() {
                    w.append(&block)?;
                }
                if config.progress {
                    eprintln!(
                        "block |Δ| in [{}, {}]: {} fields",
                        range.0,
                        range.1,
                        block.len()
                    );
                }
                records.extend(block);
            }
        }
        Ok(())
    };
    with_pool(config.workers, run)?;
    if let Some(w) = writer.as_mut() {
        w.sync()?;
    }
    Ok(records)
}

#[cfg(feature = "parallel")]
fn available_workers() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn available_workers() -> usize {
    1
}

#[cfg(feature = "parallel")]
fn map_blocks<F>(ranges: &[(u64, u64)], job: &F) -> Vec<Result<Vec<SweepRecord>, SweepError>>
where
    F: Fn(&(u64, u64)) -> Result<Vec<SweepRecord>, SweepError> + Sync,
{
    use rayon::prelude::*;
    ranges.par_iter().map(job).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_blocks<F>(ranges: &[(u64, u64)], job: &F) -> Vec<Result<Vec<SweepRecord>, SweepError>>
where
    F: Fn(&(u64, u64)) -> Result<Vec<SweepRecord>, SweepError>,
{
    ranges.iter().map(job).collect()
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T>(_workers: Option<usize>, f: impl FnOnce() -> T) -> T {
    f()
}

struct CheckpointWriter {
    path: PathBuf,
    out: BufWriter<File>,
    unsynced: usize,
}

impl CheckpointWriter {
    fn new(path: &Path, file: File) -> Self {
        Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            unsynced: 0,
        }
    }

    fn append(&mut self, records: &[SweepRecord]) -> Result<(), SweepError> {
        for r in records {
            serde_json::to_writer(&mut self.out, r).map_err(|e| SweepError::Serialize {
                path: self.path.clone(),
                source: Box::new(e),
            })?;
            self.out.write_all(b"\n").map_err(io_err(&self.path))?;
            self.unsynced += 1;
            if self.unsynced >= FSYNC_EVERY {
                self.sync()?;
            }
        }
        Ok(())
    }

    fn sync(&mut self) -> Result<(), SweepError> {
        self.out.flush().map_err(io_err(&self.path))?;
        self.out.get_ref().sync_data().map_err(io_err(&self.path))?;
        self.unsynced = 0;
        Ok(())
    }
}

/// Replays a checkpoint and returns it opened for appending, cut back to
/// the end of its last complete line.
fn open_checkpoint(
    path: &Path,
    primes: &[u64],
    lambda_ceiling: u64,
) -> Result<(Vec<SweepRecord>, File), SweepError> {
    let mut file = OpenOptions::new()
        .read(true)
        .write(true)
        .create(true)
        .truncate(false)
        .open(path)
        .map_err(io_err(path))?;
    let mut records: Vec<SweepRecord> = Vec::new();
    let mut good_len = 0u64;
    let mut reader = BufReader::new(&mut file);
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        if !line.ends_with('\n') {
            // interrupted write; recomputed below
            break;
        }
        let corrupt = |message: String| SweepError::CorruptCheckpoint {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let record: SweepRecord =
            serde_json::from_str(line.trim_end()).map_err(|e| corrupt(e.to_string()))?;
        record.check().map_err(|e| corrupt(e.to_string()))?;
        if let Some(prev) = records.last() {
            if record.delta.abs() <= prev.delta.abs() {
                return Err(corrupt(format!("Δ = {} is out of order", record.delta)));
            }
        }
        let same_primes = record.primes.iter().map(|e| e.p).eq(primes.iter().copied());
        let same_ceiling = record
            .primes
            .iter()
            .all(|e| e.lambda.is_some() == (record.delta.abs() <= lambda_ceiling));
        if !same_primes || !same_ceiling {
            return Err(SweepError::CheckpointMismatch {
                path: path.to_path_buf(),
                line: lineno,
            });
        }
        records.push(record);
        good_len += n as u64;
    }
    drop(reader);
    file.set_len(good_len).map_err(io_err(path))?;
    file.seek(SeekFrom::End(0)).map_err(io_err(path))?;
    Ok((records, file))
}

/// A named set of fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `r_p >= n`.
    RankAtLeast { p: u64, n: u32 },
    /// `λ_p >= n`, stable values only.
    LambdaAtLeast { p: u64, n: u32 },
    /// `Cl(K) ⊇ (Z/m)^n`.
    ContainsPower { m: u64, n: u32 },
    /// `λ_p >= n` for every listed `p`.
    LambdaAtLeastAll { primes: Vec<u64>, n: u32 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::RankAtLeast { p, n } => write!(f, "r_{p} >= {n}"),
            Family::LambdaAtLeast { p, n } => write!(f, "lambda_{p} >= {n}"),
            Family::ContainsPower { m, n } => write!(f, "contains (Z/{m})^{n}"),
            Family::LambdaAtLeastAll { primes, n } => {
                let ps: Vec<String> = primes.iter().map(u64::to_string).collect();
                write!(f, "lambda_p >= {n} for p in {{{}}}", ps.join(", "))
            }
        }
    }
}

/// Membership of one record. `Undecided` when the family needs a `λ` that
/// is not stable for this record.
enum Membership {
    In,
    Out,
    Undecided,
}

impl Family {
    fn classify(&self, r: &SweepRecord) -> Result<Membership, SweepError> {
        let entry = |p: u64| {
            r.entry(p).ok_or_else(|| {
                SweepError::PartialData(format!("prime {p} was not swept (Δ = {})", r.delta))
            })
        };
        let lambda_at_least = |p: u64, n: u32| -> Result<Membership, SweepError> {
            let e = entry(p)?;
            let Some(l) = e.lambda else {
                return Err(SweepError::PartialData(format!(
                    "λ_{p} missing for Δ = {}, beyond the λ ceiling",
                    r.delta
                )));
            };
            Ok(match l.stable_value() {
                Some(v) if v >= n => Membership::In,
                Some(_) => Membership::Out,
                None => Membership::Undecided,
            })
        };
        let yes = |b: bool| if b { Membership::In } else { Membership::Out };
        Ok(match self {
            Family::RankAtLeast { p, n } => yes(r.structure.p_rank(*p) >= *n),
            Family::ContainsPower { m, n } => yes(r.structure.contains_power(*m, *n)),
            Family::LambdaAtLeast { p, n } => lambda_at_least(*p, *n)?,
            Family::LambdaAtLeastAll { primes, n } => {
                let mut undecided = false;
                for &p in primes {
                    match lambda_at_least(p, *n)? {
                        Membership::Out => return Ok(Membership::Out),
                        Membership::Undecided => undecided = true,
                        Membership::In => {}
                    }
                }
                if undecided {
                    Membership::Undecided
                } else {
                    Membership::In
                }
            }
        })
    }

    /// The matching prediction, and whether it is only a lower bound.
    fn prediction(&self) -> Option<(DensityValue, bool)> {
        match self {
            Family::RankAtLeast { p, n } => {
                cldensity::density_rank_ge(*p, *n).ok().map(|v| (v, false))
            }
            Family::LambdaAtLeast { p, n } => cldensity::lambda_lower_bound(*p, *n)
                .ok()
                .map(|v| (v, true)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub family: Family,
    pub label: String,
    pub x: u64,
    pub family_count: u64,
    pub total_count: u64,
    pub empirical: f64,
    pub predicted: Option<DensityValue>,
    /// The prediction is a lower bound on the density, not its value.
    pub lower_bound: bool,
    pub abs_error: Option<f64>,
    /// Records whose membership hinged on an unstable or unsupported `λ`.
    pub undecided: u64,
}

/// `#F(x) / #F^IQ(x)` over the records with `|Δ| <= x`.
pub fn empirical_density(
    records: &[SweepRecord],
    family: &Family,
    x: u64,
) -> Result<DensityEstimate, SweepError> {
    let in_range: Vec<&SweepRecord> = records.iter().filter(|r| r.delta.abs() <= x).collect();
    let expected = arith::enumerate_fundamental(x).len();
    if in_range.len() != expected {
        return Err(SweepError::PartialData(format!(
            "{} records with |Δ| <= {x}, expected {expected}",
            in_range.len()
        )));
    }
    let mut family_count = 0;
    let mut undecided = 0;
    for r in &in_range {
        match family.classify(r)? {
            Membership::In => family_count += 1,
            Membership::Out => {}
            Membership::Undecided => undecided += 1,
        }
    }
    let total_count = in_range.len() as u64;
    let empirical = if total_count == 0 {
        0.0
    } else {
        family_count as f64 / total_count as f64
    };
    let (predicted, lower_bound) = match family.prediction() {
        Some((v, lb)) => (Some(v), lb),
        None => (None, false),
    };
    Ok(DensityEstimate {
        label: family.to_string(),
        family: family.clone(),
        x,
        family_count,
        total_count,
        empirical,
        abs_error: predicted.map(|v| (empirical - v.value).abs()),
        predicted,
        lower_bound,
        undecided,
    })
}

/// Members of `family` in ascending `|Δ|`.
pub fn hunt_examples(
    records: &[SweepRecord],
    family: &Family,
) -> Result<Vec<FundamentalDiscriminant>, SweepError> {
    let mut out = Vec::new();
    for r in records {
        if let Membership::In = family.classify(r)? {
            out.push(r.delta);
        }
    }
    out.sort_by_key(|d| d.abs());
    Ok(out)
}

/// Literal set inclusion `{r_p >= n} ⊆ {λ_p >= n}` over the records with a
/// stable `λ_p`. Returns the number of records compared.
pub fn check_containment(records: &[SweepRecord], p: u64, n: u32) -> Result<u64, SweepError> {
    let mut compared = 0;
    for r in records {
        let Some(e) = r.entry(p) else { continue };
        let Some(l) = e.stable_lambda() else { continue };
        compared += 1;
        if e.r_p >= n && l < n {
            return Err(SweepError::InvariantViolation(format!(
                "Δ = {} has r_{p} = {} but λ_{p} = {l}",
                r.delta, e.r_p
            )));
        }
    }
    Ok(compared)
}

/// Non-split primes not dividing `h` must carry `λ = 0`.
pub fn check_inert_triviality(records: &[SweepRecord]) -> Result<u64, SweepError> {
    let mut checked = 0;
    for r in records {
        for e in &r.primes {
            let Some(l) = e.lambda else { continue };
            if e.splitting != Splitting::Split && r.h % e.p != 0 {
                checked += 1;
                if l.lambda != Some(0) || l.method != LambdaMethod::InertTrivial {
                    return Err(SweepError::InvariantViolation(format!(
                        "Δ = {}, p = {}: {} with p ∤ h but λ = {:?} ({})",
                        r.delta, e.p, e.splitting, l.lambda, l.method
                    )));
                }
            }
        }
    }
    Ok(checked)
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a> {
    pub schema_version: &'static str,
    pub x: u64,
    pub primes: &'a [u64],
    pub records: &'a [SweepRecord],
    pub densities: &'a [DensityEstimate],
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub out_dir: PathBuf,
    pub x: u64,
    pub primes: Vec<u64>,
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

pub const CSV_COLUMNS: [&str; 9] = [
    "delta",
    "h",
    "divisors",
    "p",
    "splitting",
    "r_p",
    "lambda",
    "lambda_stable",
    "method",
];

/// Writes `records.csv`, `report.json` and `distributions.svg` as requested.
/// Nothing is written for an empty record list.
pub fn report(
    records: &[SweepRecord],
    densities: &[DensityEstimate],
    options: &ReportOptions,
) -> Result<Vec<PathBuf>, SweepError> {
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let dir = &options.out_dir;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    if options.csv {
        let path = dir.join("records.csv");
        let file = File::create(&path).map_err(io_err(&path))?;
        write_csv(records, file).map_err(|e| SweepError::Serialize {
            path: path.clone(),
            source: Box::new(e),
        })?;
        written.push(path);
    }
    if options.json {
        let path = dir.join("report.json");
        let report = Report {
            schema_version: SCHEMA_VERSION,
            x: options.x,
            primes: &options.primes,
            records,
            densities,
        };
        let mut text =
            serde_json::to_string_pretty(&report).map_err(|e| SweepError::Serialize {
                path: path.clone(),
                source: Box::new(e),
            })?;
        text.push('\n');
        std::fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
    }
    if options.svg {
        let path = dir.join("distributions.svg");
        std::fs::write(&path, render_svg(records, &options.primes)).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// One row per (record, prime); RFC 4180 quoting.
pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        let divisors = r.structure.to_string();
        for e in &r.primes {
            let (lambda, stable, method) = match e.lambda {
                Some(l) => (
                    l.lambda.map(|v| v.to_string()).unwrap_or_default(),
                    l.stable.to_string(),
                    l.method.to_string(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                r.delta.to_string(),
                r.h.to_string(),
                divisors.clone(),
                e.p.to_string(),
                e.splitting.to_string(),
                e.r_p.to_string(),
                lambda,
                stable,
                method,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Bar charts of the `r_p` and stable `λ_p` distributions, one per prime.
pub fn render_svg(records: &[SweepRecord], primes: &[u64]) -> String {
    const W: usize = 420;
    const H: usize = 160;
    let mut charts = Vec::new();
    for &p in primes {
        let mut ranks = std::collections::BTreeMap::<u32, u64>::new();
        let mut lambdas = std::collections::BTreeMap::<u32, u64>::new();
        for r in records {
            if let Some(e) = r.entry(p) {
                *ranks.entry(e.r_p).or_default() += 1;
                if let Some(l) = e.stable_lambda() {
                    *lambdas.entry(l).or_default() += 1;
                }
            }
        }
        charts.push((format!("r_{p}"), ranks));
        if !lambdas.is_empty() {
            charts.push((format!("lambda_{p}"), lambdas));
        }
    }
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{}\" font-family=\"monospace\" font-size=\"10\">\n",
        H * charts.len()
    );
    for (i, (title, counts)) in charts.iter().enumerate() {
        let top = i * H;
        let total: u64 = counts.values().sum();
        let max = counts.values().copied().max().unwrap_or(1);
        let slots = counts.keys().max().map_or(1, |&k| k as usize + 1);
        let bar = (W - 40) / slots;
        s += &format!(
            "<text x=\"10\" y=\"{}\">{title} (n = {total})</text>\n",
            top + 14
        );
        for (&k, &c) in counts {
            let height = (c as f64 / max as f64 * (H - 50) as f64).round() as usize;
            let x = 20 + k as usize * bar;
            let y = top + H - 20 - height;
            s += &format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{}\" height=\"{height}\" fill=\"#4a6fa5\"><title>{title} = {k}: {c}</title></rect>\n",
                bar.saturating_sub(2).max(1)
            );
            s += &format!("<text x=\"{x}\" y=\"{}\">{k}</text>\n", top + H - 6);
        }
    }
    s += "</svg>\n";
    s
}
