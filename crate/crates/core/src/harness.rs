//! Monte-Carlo sweeps over SNR, scheme and trial.
//!
//! Every trial draws its channel and frame from a seed derived from the
//! master seed and the trial's coordinates, so a sweep is a pure function of
//! its configuration whatever the thread count or execution order.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    derive_seed, draw_channel, noise_variance_from_snr, synthesize_frame, MimoFrame,
};
use crate::classifier::{classify_alrt_ub, decide, score_hypotheses, Algorithm};
use crate::modem::{Constellation, Scheme};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub snr_db_grid: Vec<f64>,
    pub trials_per_point: usize,
    pub n_symbols: usize,
    pub m_t: usize,
    pub m_r: usize,
    pub candidates: Vec<Scheme>,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
}

impl Default for SweepConfig {
    /// 2×4 link, 512 symbols, four schemes, −10..15 dB in 2.5 dB steps,
    /// 500 trials per point.
    fn default() -> Self {
        Self {
            snr_db_grid: snr_grid(-10.0, 15.0, 2.5),
            trials_per_point: 500,
            n_symbols: 512,
            m_t: 2,
            m_r: 4,
            candidates: Scheme::ALL.to_vec(),
            algorithms: vec![Algorithm::Proposed],
            master_seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db_grid.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if self.snr_db_grid.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR grid has non-finite values".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials per point must be >= 1".into()));
        }
        if self.n_symbols == 0 {
            return Err(Error::Config("observation length must be >= 1".into()));
        }
        if self.m_t == 0 || self.m_r < self.m_t {
            return Err(Error::Config(format!(
                "need M_R >= M_T >= 1, got M_T={}, M_R={}",
                self.m_t, self.m_r
            )));
        }
        if self.candidates.is_empty() {
            return Err(Error::Config("no candidate schemes".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        let mut seen = self.candidates.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.candidates.len() {
            return Err(Error::Config("duplicate candidate schemes".into()));
        }
        Ok(())
    }

    /// The frame for one cell, identical for every algorithm.
    pub fn frame(
        &self,
        snr_index: usize,
        scheme_index: usize,
        trial_index: usize,
    ) -> Result<(MimoFrame, u64)> {
        let snr = *self
            .snr_db_grid
            .get(snr_index)
            .ok_or_else(|| Error::Config(format!("SNR index {snr_index} out of range")))?;
        let scheme = *self
            .candidates
            .get(scheme_index)
            .ok_or_else(|| Error::Config(format!("scheme index {scheme_index} out of range")))?;
        let seed = derive_seed(self.master_seed, snr_index, scheme_index, trial_index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channel = draw_channel(self.m_t, self.m_r, &mut rng)?;
        let sigma2 = noise_variance_from_snr(snr, self.m_t);
        let frame = synthesize_frame(
            &Constellation::new(scheme),
            &channel,
            sigma2,
            self.n_symbols,
            &mut rng,
        )?;
        Ok((frame, seed))
    }

    fn constellations(&self) -> Vec<Constellation> {
        self.candidates
            .iter()
            .map(|&s| Constellation::new(s))
            .collect()
    }
}

/// Evenly spaced grid from `min` to `max` inclusive.
pub fn snr_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || max < min {
        return vec![min];
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| min + i as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub scheme_true: Scheme,
    /// `None` when blind estimation failed.
    pub scheme_decided: Option<Scheme>,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub n: usize,
    pub m_t: usize,
    pub m_r: usize,
    pub failed: bool,
    pub elapsed: f64,
}

impl TrialRecord {
    pub fn correct(&self) -> bool {
        !self.failed && self.scheme_decided == Some(self.scheme_true)
    }

    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &TrialRecord) -> bool {
        TrialRecord {
            elapsed: 0.0,
            ..self.clone()
        } == TrialRecord {
            elapsed: 0.0,
            ..other.clone()
        }
    }
}

/// Runs one trial of one algorithm.
pub fn run_trial(
    config: &SweepConfig,
    snr_index: usize,
    scheme_index: usize,
    trial_index: usize,
    algorithm: Algorithm,
) -> Result<TrialRecord> {
    let (frame, seed) = config.frame(snr_index, scheme_index, trial_index)?;
    let cands = config.constellations();
    let start = Instant::now();
    let outcome = if algorithm.is_blind() {
        score_hypotheses(&frame.blind_view(), &cands).and_then(|s| decide(&s, algorithm))
    } else {
        classify_alrt_ub(&frame, &cands)
    };
    let elapsed = start.elapsed().as_secs_f64();
    record(
        config,
        snr_index,
        scheme_index,
        seed,
        algorithm,
        outcome.map(|r| r.decided),
        elapsed,
    )
}

fn record(
    config: &SweepConfig,
    snr_index: usize,
    scheme_index: usize,
    seed: u64,
    algorithm: Algorithm,
    outcome: Result<Scheme>,
    elapsed: f64,
) -> Result<TrialRecord> {
    let decided = match outcome {
        Ok(s) => Some(s),
        Err(Error::EstimationFailure(msg)) | Err(Error::Inconsistent(msg)) => {
            log::debug!("trial seed {seed:#x} failed: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(TrialRecord {
        snr_db: config.snr_db_grid[snr_index],
        scheme_true: config.candidates[scheme_index],
        scheme_decided: decided,
        algorithm,
        seed,
        n: config.n_symbols,
        m_t: config.m_t,
        m_r: config.m_r,
        failed: decided.is_none(),
        elapsed,
    })
}

/// All algorithms of the config on one cell. The blind rules share one JADE
/// run and one set of per-stream likelihoods; the decisions are the same as
/// separate [`run_trial`] calls.
pub fn run_cell(
    config: &SweepConfig,
    snr_index: usize,
    scheme_index: usize,
    trial_index: usize,
) -> Result<Vec<TrialRecord>> {
    let (frame, seed) = config.frame(snr_index, scheme_index, trial_index)?;
    let cands = config.constellations();
    let mut out = Vec::with_capacity(config.algorithms.len());

    let blind = config.algorithms.iter().any(|a| a.is_blind());
    let start = Instant::now();
    let shared = if blind {
        Some(score_hypotheses(&frame.blind_view(), &cands))
    } else {
        None
    };
    let shared_time = start.elapsed().as_secs_f64();

    for &alg in &config.algorithms {
        let start = Instant::now();
        let outcome = match (&shared, alg.is_blind()) {
            (Some(Ok(scores)), true) => decide(scores, alg).map(|r| r.decided),
            (Some(Err(e)), true) => Err(clone_failure(e)),
            _ => classify_alrt_ub(&frame, &cands).map(|r| r.decided),
        };
        let mut elapsed = start.elapsed().as_secs_f64();
        if alg.is_blind() {
            elapsed += shared_time;
        }
        out.push(record(
            config,
            snr_index,
            scheme_index,
            seed,
            alg,
            outcome,
            elapsed,
        )?);
    }
    Ok(out)
}

fn clone_failure(e: &Error) -> Error {
    match e {
        Error::EstimationFailure(m) => Error::EstimationFailure(m.clone()),
        Error::Inconsistent(m) => Error::Inconsistent(m.clone()),
        other => Error::Config(other.to_string()),
    }
}

/// Every trial record of a sweep, ordered by (snr, scheme, trial, algorithm).
pub fn run_sweep_records(config: &SweepConfig, threads: Option<usize>) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let cells: Vec<(usize, usize, usize)> = (0..config.snr_db_grid.len())
        .flat_map(|a| {
            (0..config.candidates.len())
                .flat_map(move |b| (0..config.trials_per_point).map(move |c| (a, b, c)))
        })
        .collect();
    let work = || {
        cells
            .par_iter()
            .map(|&(a, b, c)| run_cell(config, a, b, c))
            .collect::<Result<Vec<_>>>()
    };
    let nested = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(nested.into_iter().flatten().collect())
}

/// Tally for one true scheme at one (SNR, algorithm) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeTally {
    pub scheme: Scheme,
    pub trials: u64,
    pub correct: u64,
    pub failed: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub snr_db: f64,
    pub algorithm: Algorithm,
    /// Mean over schemes of the per-scheme accuracy.
    pub p_cc: f64,
    pub schemes: Vec<SchemeTally>,
    /// `confusion[i][j]`: trials of candidate `i` decided as candidate `j`;
    /// the last column counts failed estimations.
    pub confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmRuntime {
    pub algorithm: Algorithm,
    pub total_seconds: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Ordered by SNR, then by the config's algorithm order.
    pub points: Vec<PointResult>,
    pub runtime: Vec<AlgorithmRuntime>,
}

impl SweepResult {
    pub fn point(&self, snr_db: f64, algorithm: Algorithm) -> Option<&PointResult> {
        self.points
            .iter()
            .find(|p| p.algorithm == algorithm && p.snr_db == snr_db)
    }

    /// `(snr, P_cc)` pairs of one algorithm, in grid order.
    pub fn curve(&self, algorithm: Algorithm) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.algorithm == algorithm)
            .map(|p| (p.snr_db, p.p_cc))
            .collect()
    }

    /// Equality of everything except wall-clock timings.
    pub fn same_outcomes(&self, other: &SweepResult) -> bool {
        self.config == other.config && self.points == other.points
    }
}

/// Aggregates trial records into per-point accuracies and confusion matrices.
pub fn aggregate(config: &SweepConfig, records: &[TrialRecord]) -> SweepResult {
    let k = config.candidates.len();
    let mut points = Vec::new();
    for (si, &snr) in config.snr_db_grid.iter().enumerate() {
        for &alg in &config.algorithms {
            let mut confusion = vec![vec![0u64; k + 1]; k];
            for r in records.iter().filter(|r| {
                r.algorithm == alg && r.snr_db.to_bits() == config.snr_db_grid[si].to_bits()
            }) {
                let Some(row) = config.candidates.iter().position(|&c| c == r.scheme_true) else {
                    continue;
                };
                let col = r
                    .scheme_decided
                    .and_then(|d| config.candidates.iter().position(|&c| c == d))
                    .unwrap_or(k);
                confusion[row][col] += 1;
            }
            let schemes: Vec<SchemeTally> = config
                .candidates
                .iter()
                .enumerate()
                .map(|(i, &scheme)| {
                    let trials: u64 = confusion[i].iter().sum();
                    let correct = confusion[i][i];
                    SchemeTally {
                        scheme,
                        trials,
                        correct,
                        failed: confusion[i][k],
                        accuracy: if trials == 0 {
                            0.0
                        } else {
                            correct as f64 / trials as f64
                        },
                    }
                })
                .collect();
            let p_cc = schemes.iter().map(|s| s.accuracy).sum::<f64>() / k as f64;
            points.push(PointResult {
                snr_db: snr,
                algorithm: alg,
                p_cc,
                schemes,
                confusion,
            });
        }
    }
    let runtime = config
        .algorithms
        .iter()
        .map(|&alg| {
            let mine = records.iter().filter(|r| r.algorithm == alg);
            AlgorithmRuntime {
                algorithm: alg,
                total_seconds: mine.clone().map(|r| r.elapsed).sum(),
                trials: mine.count() as u64,
            }
        })
        .collect();
    SweepResult {
        config: config.clone(),
        points,
        runtime,
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with_threads(config, None)
}

pub fn run_sweep_with_threads(config: &SweepConfig, threads: Option<usize>) -> Result<SweepResult> {
    let records = run_sweep_records(config, threads)?;
    Ok(aggregate(config, &records))
}

/// SNR at which a curve first rises through `level`, by linear
/// interpolation between grid points.
pub fn crossing_snr(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    if let Some(&(snr, p)) = curve.first() {
        if p >= level {
            return Some(snr);
        }
    }
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 < level && y1 >= level).then(|| x0 + (level - y0) * (x1 - x0) / (y1 - y0))
    })
}

/// Binomial standard error of an accuracy estimate.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// The sweeps behind each of the four reference experiments, labelled.
///
/// 1: observation length 256/512/1024. 2: 4/6/8 receive antennas.
/// 3: weighted-sum vs equal-weight vs product fusion on shared frames.
/// 4: blind classifier vs the perfect-CSI ALRT on a 1 dB grid.
pub fn figure_configs(figure: u8, trials: usize, seed: u64) -> Result<Vec<(String, SweepConfig)>> {
    let base = SweepConfig {
        trials_per_point: trials,
        master_seed: seed,
        ..SweepConfig::default()
    };
    let configs = match figure {
        1 => [256, 512, 1024]
            .iter()
            .map(|&n| {
                (
                    format!("n{n}"),
                    SweepConfig {
                        n_symbols: n,
                        ..base.clone()
                    },
                )
            })
            .collect(),
        2 => [4, 6, 8]
            .iter()
            .map(|&m_r| {
                (
                    format!("mr{m_r}"),
                    SweepConfig {
                        m_r,
                        ..base.clone()
                    },
                )
            })
            .collect(),
        3 => vec![(
            "fusion".to_string(),
            SweepConfig {
                algorithms: vec![
                    Algorithm::Proposed,
                    Algorithm::EqualWeight,
                    Algorithm::Product,
                ],
                ..base
            },
        )],
        4 => vec![(
            "alrt".to_string(),
            SweepConfig {
                snr_db_grid: snr_grid(-10.0, 15.0, 1.0),
                algorithms: vec![Algorithm::Proposed, Algorithm::AlrtUb],
                ..base
            },
        )],
        other => {
            return Err(Error::Config(format!(
                "no experiment {other}; expected 1-4"
            )))
        }
    };
    Ok(configs)
}
