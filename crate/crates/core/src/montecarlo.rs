//! Photon-counting simulation: seeded Born-rule sampling, proportions with
//! binomial error bars, and empirical fidelities.
//!
//! The generator is xoshiro256++ seeded through SplitMix64. Shots are split
//! into fixed-size chunks; chunk `k` draws from the seed stream advanced by
//! `k + 1` jumps (2¹²⁸ steps each), so merged counts do not depend on how
//! chunks are distributed over threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmath::DensityMatrix;
use crate::schemes::{transition_probs, OutcomeLabel, Povm, SchemeError, TransitionTable};

/// Shots per sub-stream.
pub const CHUNK_SHOTS: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("n_shots must be at least 1")]
    NoShots,
    #[error("Poisson source needs positive finite rate and duration (got {rate} /s for {duration} s)")]
    BadSource { rate: f64, duration: f64 },
    #[error("count table is empty (total = 0)")]
    EmptyCounts,
    #[error("ideal distribution has {ideal} entries but the table has {table} final outcomes")]
    Dimension { ideal: usize, table: usize },
    #[error("invalid ideal distribution: {0}")]
    Ideal(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceModel {
    /// Exactly `n_shots` detected photons.
    FixedN,
    /// Total count drawn from Poisson(rate × duration); `n_shots` is ignored.
    Poisson { rate_per_second: f64, duration_seconds: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub n_shots: u64,
    pub seed: u64,
    pub source_model: SourceModel,
}

impl ShotConfig {
    pub fn fixed(n_shots: u64, seed: u64) -> Self {
        Self { n_shots, seed, source_model: SourceModel::FixedN }
    }

    pub fn poisson(rate_per_second: f64, duration_seconds: f64, seed: u64) -> Self {
        Self { n_shots: 1, seed, source_model: SourceModel::Poisson { rate_per_second, duration_seconds } }
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.n_shots == 0 {
            return Err(MonteCarloError::NoShots);
        }
        if let SourceModel::Poisson { rate_per_second: r, duration_seconds: d } = self.source_model {
            if !(r.is_finite() && d.is_finite() && r > 0.0 && d > 0.0) {
                return Err(MonteCarloError::BadSource { rate: r, duration: d });
            }
        }
        Ok(())
    }
}

/// Coincidence counts per outcome label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    counts: BTreeMap<OutcomeLabel, u64>,
    total: u64,
}

impl CountTable {
    pub fn new(counts: impl IntoIterator<Item = (OutcomeLabel, u64)>) -> Self {
        let counts: BTreeMap<_, _> = counts.into_iter().collect();
        let total = counts.values().sum();
        Self { counts, total }
    }

    pub fn get(&self, label: OutcomeLabel) -> u64 {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (OutcomeLabel, u64)> + '_ {
        self.counts.iter().map(|(&l, &c)| (l, c))
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `label_i,label_jprime,count` rows with a header, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label_i,label_jprime,count\n");
        for (l, c) in self.iter() {
            writeln!(out, "{},{},{}", l.i, l.j_prime, c).expect("writing to a String");
        }
        out
    }

    fn merge(&mut self, other: &CountTable) {
        for (l, c) in other.iter() {
            *self.counts.entry(l).or_default() += c;
        }
        self.total += other.total;
    }
}

fn base_rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Independent generator for chunk `index`.
pub fn substream(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    let mut rng = base_rng(seed);
    for _ in 0..=index {
        rng.jump();
    }
    rng
}

/// Draws a label by inverse CDF in label order; zero-probability labels are never chosen.
fn draw(cdf: &[(OutcomeLabel, f64)], u: f64) -> OutcomeLabel {
    cdf.iter().find(|(_, c)| u < *c).unwrap_or_else(|| cdf.last().expect("nonempty")).0
}

fn sample_chunk(cdf: &[(OutcomeLabel, f64)], seed: u64, index: u64, shots: u64) -> CountTable {
    let mut rng = substream(seed, index);
    let mut counts: BTreeMap<OutcomeLabel, u64> = cdf.iter().map(|(l, _)| (*l, 0)).collect();
    for _ in 0..shots {
        let u: f64 = rng.random();
        *counts.get_mut(&draw(cdf, u)).expect("label from cdf") += 1;
    }
    CountTable { counts, total: shots }
}

fn total_shots(cfg: &ShotConfig) -> u64 {
    match cfg.source_model {
        SourceModel::FixedN => cfg.n_shots,
        SourceModel::Poisson { rate_per_second, duration_seconds } => {
            let mut rng = base_rng(cfg.seed);
            rng.long_jump();
            let mean = rate_per_second * duration_seconds;
            Poisson::new(mean).expect("validated positive mean").sample(&mut rng) as u64
        }
    }
}

/// Samples `shots` Born-rule outcomes from a probability table.
pub fn sample_table(table: &TransitionTable, cfg: &ShotConfig, threads: usize) -> Result<CountTable, MonteCarloError> {
    cfg.validate()?;
    let positive: Vec<(OutcomeLabel, f64)> = table.iter().filter(|(_, p)| *p > 0.0).collect();
    let sum: f64 = positive.iter().map(|(_, p)| p).sum();
    let mut acc = 0.0;
    let cdf: Vec<(OutcomeLabel, f64)> = positive
        .iter()
        .map(|(l, p)| {
            acc += p / sum;
            (*l, acc)
        })
        .collect();
    let total = total_shots(cfg);
    let chunks = total.div_ceil(CHUNK_SHOTS);
    let chunk_len = |k: u64| CHUNK_SHOTS.min(total - k * CHUNK_SHOTS);
    let mut merged = CountTable::new(table.iter().map(|(l, _)| (l, 0)));
    let threads = threads.max(1).min(chunks.max(1) as usize);
    if threads <= 1 {
        for k in 0..chunks {
            merged.merge(&sample_chunk(&cdf, cfg.seed, k, chunk_len(k)));
        }
    } else {
        let parts: Vec<CountTable> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads as u64)
                .map(|t| {
                    let cdf = &cdf;
                    scope.spawn(move || {
                        let mut part = CountTable::new(std::iter::empty());
                        let mut k = t;
                        while k < chunks {
                            part.merge(&sample_chunk(cdf, cfg.seed, k, chunk_len(k)));
                            k += threads as u64;
                        }
                        part
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("sampling thread panicked")).collect()
        });
        for p in &parts {
            merged.merge(p);
        }
    }
    Ok(merged)
}

/// One Born-rule draw per shot from `trace(M ρ)`; deterministic in the seed.
pub fn sample_counts(povm: &Povm, state: &DensityMatrix, cfg: &ShotConfig) -> Result<CountTable, MonteCarloError> {
    sample_table(&transition_probs(povm, state)?, cfg, 1)
}

/// Proportions with binomial standard errors `√(P̃(1−P̃)/N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub table: TransitionTable,
    pub std_err: BTreeMap<OutcomeLabel, f64>,
    pub total: u64,
}

pub fn proportions(counts: &CountTable) -> Result<Proportions, MonteCarloError> {
    if counts.total == 0 {
        return Err(MonteCarloError::EmptyCounts);
    }
    let n = counts.total as f64;
    let table = TransitionTable::new(counts.iter().map(|(l, c)| (l, c as f64 / n)))?;
    let std_err = table.iter().map(|(l, p)| (l, (p * (1.0 - p) / n).sqrt())).collect();
    Ok(Proportions { table, std_err, total: counts.total })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub value: f64,
    /// First-order multinomial error; `None` without a count total.
    pub std_err: Option<f64>,
}

/// `Σ_j′ √(P̃(j′) P_Id(j′))` over the final marginal of `table`.
///
/// With `total` counts the error uses `Cov(P̃_j, P̃_k) = (δ_jk P̃_j − P̃_j P̃_k)/N`;
/// marginals equal to zero contribute no derivative.
pub fn empirical_fidelity(table: &TransitionTable, ideal: &[f64], total: Option<u64>) -> Result<FidelityEstimate, MonteCarloError> {
    crate::qmath::check_probability_vector(ideal).map_err(|e| MonteCarloError::Ideal(e.to_string()))?;
    let mut marginal = table.final_marginal();
    if marginal.len() > ideal.len() {
        return Err(MonteCarloError::Dimension { ideal: ideal.len(), table: marginal.len() });
    }
    marginal.resize(ideal.len(), 0.0);
    let value = marginal.iter().zip(ideal).map(|(p, q)| (p * q).sqrt()).sum();
    let std_err = total.filter(|&n| n > 0).map(|n| {
        let grad: Vec<f64> = marginal
            .iter()
            .zip(ideal)
            .map(|(&p, &q)| if p > 0.0 { 0.5 * (q / p).sqrt() } else { 0.0 })
            .collect();
        let mean_grad: f64 = grad.iter().zip(&marginal).map(|(g, p)| g * p).sum();
        let var: f64 = grad.iter().zip(&marginal).map(|(g, p)| p * g * g).sum::<f64>() - mean_grad * mean_grad;
        (var.max(0.0) / n as f64).sqrt()
    });
    Ok(FidelityEstimate { value, std_err })
}
