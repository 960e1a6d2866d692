// SPDX-License-Identifier: Apache-2.0

//! Coranks of uniform random square matrices over `F_p`.
//!
//! Trial `i` draws its matrix from ChaCha8 seeded with `seed` on stream `i`,
//! so a histogram depends only on `(p, N, T, seed)` and not on how trials
//! are split across threads.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, ArithError};
use crate::cldensity;

/// Largest `p^{N²}` accepted by [`exhaustive_corank_distribution`].
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 24;

const CHUNK: u64 = 512;

#[derive(Debug, Error)]
pub enum RandMatrixError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankHistogram {
    pub p: u64,
    pub matrix_size: u32,
    pub trials: u64,
    pub seed: u64,
    pub counts: BTreeMap<u32, u64>,
}

/// One histogram line against the limiting law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramRow {
    pub corank: u32,
    pub count: u64,
    pub empirical: f64,
    pub predicted: f64,
    pub abs_error: f64,
}

impl RankHistogram {
    fn empty(p: u64, matrix_size: u32, seed: u64) -> Self {
        Self {
            p,
            matrix_size,
            trials: 0,
            seed,
            counts: BTreeMap::new(),
        }
    }

    fn record(&mut self, corank: u32) {
        *self.counts.entry(corank).or_insert(0) += 1;
        self.trials += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.trials += other.trials;
        self
    }

    pub fn count(&self, corank: u32) -> u64 {
        self.counts.get(&corank).copied().unwrap_or(0)
    }

    pub fn frequency(&self, corank: u32) -> f64 {
        self.count(corank) as f64 / self.trials as f64
    }

    /// Rows for coranks `0..=N` with `density_rank_exact(p, k)` as prediction.
    pub fn rows(&self) -> Result<Vec<HistogramRow>, RandMatrixError> {
        (0..=self.matrix_size)
            .map(|k| {
                let predicted = cldensity::density_rank_exact(self.p, k)
                    .map_err(|e| RandMatrixError::InvalidArgument(e.to_string()))?
                    .value;
                let empirical = self.frequency(k);
                Ok(HistogramRow {
                    corank: k,
                    count: self.count(k),
                    empirical,
                    predicted,
                    abs_error: (empirical - predicted).abs(),
                })
            })
            .collect()
    }

    /// Total variation distance to the limiting rank law; predicted mass
    /// beyond corank `N` counts in full.
    pub fn total_variation(&self) -> Result<f64, RandMatrixError> {
        let rows = self.rows()?;
        let inside: f64 = rows.iter().map(|r| r.abs_error).sum();
        let outside = (1.0 - rows.iter().map(|r| r.predicted).sum::<f64>()).max(0.0);
        Ok(0.5 * (inside + outside))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), RandMatrixError> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows()? {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reduction modulo a small odd prime without a hardware divide.
#[derive(Clone, Copy)]
struct SmallModulus {
    p: u32,
    m: u64,
}

impl SmallModulus {
    fn new(p: u64) -> Self {
        Self {
            p: p as u32,
            m: (1u64 << 32) / p + 1,
        }
    }

    /// Exact for `x < 2^32 / p`, which covers `x < p²` when `p < 1600`.
    #[inline]
    fn reduce(self, x: u32) -> u32 {
        let q = ((x as u64 * self.m) >> 32) as u32;
        x - q * self.p
    }
}

/// `N - rank` of a row-major `n × n` matrix with entries in `[0, p)`.
pub fn corank_mod_p(matrix: &mut [u32], n: usize, p: u64) -> u32 {
    assert_eq!(matrix.len(), n * n);
    let md = SmallModulus::new(p);
    let fast = p < 1600;
    let pu = p as u32;
    let mut rank = 0usize;
    for col in 0..n {
        let Some(pivot) = (rank..n).find(|&r| matrix[r * n + col] != 0) else {
            continue;
        };
        if pivot != rank {
            for j in col..n {
                matrix.swap(pivot * n + j, rank * n + j);
            }
        }
        let inv = arith::mod_inv(matrix[rank * n + col] as i64, p).expect("nonzero mod p") as u32;
        let (head, tail) = matrix.split_at_mut((rank + 1) * n);
        let prow = &head[rank * n..];
        for row in tail.chunks_exact_mut(n) {
            let lead = row[col];
            if lead == 0 {
                continue;
            }
            // row -= (lead / pivot) · prow, written as row += f · prow
            let f = pu - (lead as u64 * inv as u64 % p) as u32;
            if fast {
                for j in col..n {
                    row[j] = md.reduce(row[j] + f * prow[j]);
                }
            } else {
                for j in col..n {
                    row[j] = ((row[j] as u64 + f as u64 * prow[j] as u64) % p) as u32;
                }
            }
        }
        rank += 1;
    }
    (n - rank) as u32
}

fn check_args(p: u64, n: u32) -> Result<(), RandMatrixError> {
    arith::check_odd_prime(p)?;
    if p >= 1 << 31 {
        return Err(RandMatrixError::InvalidArgument(format!(
            "p = {p} too large"
        )));
    }
    if n == 0 {
        return Err(RandMatrixError::InvalidArgument(
            "matrix size must be >= 1".into(),
        ));
    }
    Ok(())
}

fn run_chunk(p: u64, n: u32, seed: u64, range: std::ops::Range<u64>) -> RankHistogram {
    let size = n as usize;
    let mut hist = RankHistogram::empty(p, n, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0u32; size * size];
    let pu = p as u32;
    for trial in range {
        rng.set_stream(trial);
        rng.set_word_pos(0);
        for x in buf.iter_mut() {
            *x = rng.random_range(0..pu);
        }
        hist.record(corank_mod_p(&mut buf, size, p));
    }
    hist
}

/// Corank histogram of `trials` uniform `N × N` matrices over `F_p`.
pub fn sample_corank_distribution(
    p: u64,
    n: u32,
    trials: u64,
    seed: u64,
) -> Result<RankHistogram, RandMatrixError> {
    check_args(p, n)?;
    if trials == 0 {
        return Err(RandMatrixError::InvalidArgument(
            "trials must be >= 1".into(),
        ));
    }
    let chunks: Vec<_> = (0..trials.div_ceil(CHUNK))
        .map(|i| i * CHUNK..((i + 1) * CHUNK).min(trials))
        .collect();
    #[cfg(feature = "parallel")]
    let parts: Vec<RankHistogram> = {
        use rayon::prelude::*;
        chunks
            .into_par_iter()
            .map(|r| run_chunk(p, n, seed, r))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<RankHistogram> = chunks
        .into_iter()
        .map(|r| run_chunk(p, n, seed, r))
        .collect();
    Ok(parts
        .into_iter()
        .fold(RankHistogram::empty(p, n, seed), RankHistogram::merge))
}

/// Histogram over every `N × N` matrix over `F_p`; `trials = p^{N²}`.
pub fn exhaustive_corank_distribution(p: u64, n: u32) -> Result<RankHistogram, RandMatrixError> {
    check_args(p, n)?;
    let cells = (n * n) as usize;
    let total = p
        .checked_pow(n * n)
        .filter(|&t| t <= EXHAUSTIVE_LIMIT)
        .ok_or_else(|| {
            RandMatrixError::InvalidArgument(format!(
                "{p}^{} matrices is too many to enumerate",
                n * n
            ))
        })?;
    let mut hist = RankHistogram::empty(p, n, 0);
    let mut digits = vec![0u32; cells];
    let mut buf = vec![0u32; cells];
    for _ in 0..total {
        buf.copy_from_slice(&digits);
        hist.record(corank_mod_p(&mut buf, n as usize, p));
        for d in digits.iter_mut() {
            *d += 1;
            if *d < p as u32 {
                break;
            }
            *d = 0;
        }
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Corank by brute force: count vectors in the kernel.
    fn kernel_corank(m: &[u32], n: usize, p: u64) -> u32 {
        let mut kernel = 0u64;
        let mut v = vec![0u64; n];
        for _ in 0..p.pow(n as u32) {
            let zero =
                (0..n).all(|i| (0..n).map(|j| m[i * n + j] as u64 * v[j]).sum::<u64>() % p == 0);
            kernel += zero as u64;
            for x in v.iter_mut() {
                *x += 1;
                if *x < p {
                    break;
                }
                *x = 0;
            }
        }
        let mut k = 0;
        while p.pow(k) < kernel {
            k += 1;
        }
        k
    }

    #[test]
    fn small_modulus_is_exact() {
        for p in [3u64, 5, 7, 101, 1597] {
            let md = SmallModulus::new(p);
            for x in 0..(p * p) as u32 {
                assert_eq!(md.reduce(x), x % p as u32);
            }
        }
    }

    #[test]
    fn elimination_matches_kernel_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [3u64, 5, 7] {
            for n in 1..=4usize {
                for _ in 0..40 {
                    // bias towards zeros so singular matrices show up
                    let m: Vec<u32> = (0..n * n)
                        .map(|_| {
                            if rng.random_bool(0.5) {
                                0
                            } else {
                                rng.random_range(0..p as u32)
                            }
                        })
                        .collect();
                    let mut work = m.clone();
                    assert_eq!(corank_mod_p(&mut work, n, p), kernel_corank(&m, n, p));
                }
            }
        }
    }

    #[test]
    fn exhaustive_examples() {
        let h = exhaustive_corank_distribution(3, 1).unwrap();
        assert_eq!((h.trials, h.count(0), h.count(1)), (3, 2, 1));
        let h = exhaustive_corank_distribution(3, 2).unwrap();
        assert_eq!(
            (h.trials, h.count(0), h.count(1), h.count(2)),
            (81, 48, 32, 1)
        );
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        for p in [3u64, 5] {
            for n in 1..=2u32 {
                let h = exhaustive_corank_distribution(p, n).unwrap();
                let mut brute = BTreeMap::new();
                let cells = (n * n) as usize;
                for code in 0..p.pow(n * n) {
                    let m: Vec<u32> = (0..cells)
                        .map(|i| (code / p.pow(i as u32) % p) as u32)
                        .collect();
                    *brute
                        .entry(kernel_corank(&m, n as usize, p))
                        .or_insert(0u64) += 1;
                }
                assert_eq!(h.counts, brute);
            }
        }
    }

    #[test]
    fn exhaustive_refuses_huge_spaces() {
        assert!(exhaustive_corank_distribution(3, 5).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let a = sample_corank_distribution(5, 6, 2000, 11).unwrap();
        let b = sample_corank_distribution(5, 6, 2000, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.values().sum::<u64>(), 2000);
        // trial i is fixed by (seed, i) alone
        let short = sample_corank_distribution(5, 6, CHUNK, 11).unwrap();
        let direct = run_chunk(5, 6, 11, 0..CHUNK);
        assert_eq!(short, direct);
        assert_ne!(a, sample_corank_distribution(5, 6, 2000, 12).unwrap());
    }

    /// `P(corank = k)` for uniform `N × N` matrices, from the count of
    /// rank-`r` matrices `∏_{i<r} (p^N - p^i)² / (p^r - p^i)`.
    fn finite_law(p: u64, n: u32) -> Vec<f64> {
        let q = p as f64;
        (0..=n)
            .map(|k| {
                let r = n - k;
                let mut x = q.powi(-((n * n) as i32));
                for i in 0..r {
                    let a = q.powi(n as i32) - q.powi(i as i32);
                    x *= a * a / (q.powi(r as i32) - q.powi(i as i32));
                }
                x
            })
            .collect()
    }

    #[test]
    fn finite_law_matches_exhaustive_counts() {
        for p in [3u64, 5] {
            for n in 1..=2 {
                let h = exhaustive_corank_distribution(p, n).unwrap();
                for (k, want) in finite_law(p, n).into_iter().enumerate() {
                    assert!((h.frequency(k as u32) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn empirical_tracks_finite_law() {
        let h = sample_corank_distribution(3, 4, 200_000, 5).unwrap();
        for (k, want) in finite_law(3, 4).into_iter().enumerate() {
            let se = (want * (1.0 - want) / 200_000.0).sqrt();
            assert!(
                (h.frequency(k as u32) - want).abs() < 4.0 * se + 1e-9,
                "corank {k}"
            );
        }
    }

    #[test]
    fn larger_matrices_sit_closer_to_the_limit() {
        let small = sample_corank_distribution(3, 2, 20_000, 3).unwrap();
        let large = sample_corank_distribution(3, 60, 20_000, 3).unwrap();
        assert!(large.total_variation().unwrap() < small.total_variation().unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(sample_corank_distribution(4, 3, 10, 0).is_err());
        assert!(sample_corank_distribution(3, 0, 10, 0).is_err());
        assert!(sample_corank_distribution(3, 3, 0, 0).is_err());
    }

    #[test]
    fn csv_columns() {
        let h = exhaustive_corank_distribution(3, 2).unwrap();
        let mut out = Vec::new();
        h.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "corank,count,empirical,predicted,abs_error"
        );
        assert_eq!(lines.count(), 3);
    }
}
