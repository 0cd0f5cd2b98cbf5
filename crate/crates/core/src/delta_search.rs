//! Iterative grid refinement for the best δ.
//!
//! Starting from a candidate grid, every iteration scores the new candidates
//! (mean C* over a set of validation instances at a fixed sample size), then
//! inserts midpoints around the two best candidates. When one of the two best
//! sits on the edge of the grid, the grid is extended past that edge by half
//! its largest gap. New candidates are rounded to two decimals, and every
//! candidate is scored exactly once.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jssp::{DispatchMode, Instance};
use crate::policy::PolicySpec;
use crate::rng::child_seed;
use crate::sampling::{sample_in_current_pool, SamplingConfig, SamplingError, Strategy};

/// Two candidates closer than this are the same candidate.
pub const CANDIDATE_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_CANDIDATES: [f64; 7] = [0.05, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Where refinement inserts midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MidpointRule {
    /// Between each of the two best candidates and both of its neighbours.
    #[default]
    BothSides,
    /// Only between the two best candidates.
    BetweenBest,
}

fn default_candidates() -> Vec<f64> {
    DEFAULT_CANDIDATES.to_vec()
}

fn default_max_iterations() -> usize {
    3
}

fn default_min_spacing() -> f64 {
    0.01
}

/// Search settings. The validation instances are supplied to the scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSearchConfig {
    #[serde(default = "default_candidates")]
    pub initial_candidates: Vec<f64>,
    pub sample_size: usize,
    /// Iterations including the initial grid.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_min_spacing")]
    pub min_spacing: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub midpoints: MidpointRule,
}

impl DeltaSearchConfig {
    pub fn new(sample_size: usize, master_seed: u64) -> Self {
        Self {
            initial_candidates: default_candidates(),
            sample_size,
            max_iterations: default_max_iterations(),
            min_spacing: default_min_spacing(),
            master_seed,
            midpoints: MidpointRule::default(),
        }
    }

    pub fn validate(&self) -> Result<(), DeltaSearchError> {
        let c = &self.initial_candidates;
        let bad = |msg: String| Err(DeltaSearchError::InvalidConfig(msg));
        if c.len() < 3 {
            return bad(format!(
                "need at least 3 initial candidates, got {}",
                c.len()
            ));
        }
        if c.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return bad("candidates must be finite and nonnegative".into());
        }
        if c.windows(2).any(|w| w[0] >= w[1]) {
            return bad("candidates must be strictly ascending".into());
        }
        if self.sample_size == 0 {
            return bad("sample_size must be positive".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive".into());
        }
        if !(self.min_spacing >= 0.01) {
            return bad(format!(
                "min_spacing must be at least 0.01, got {}",
                self.min_spacing
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DeltaSearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("scoring delta = {delta} failed: {source}")]
    Scoring {
        delta: f64,
        #[source]
        source: SamplingError,
    },
    #[error("scoring delta = {delta} failed: {message}")]
    Oracle { delta: f64, message: String },
}

/// Scores a candidate δ; lower is better.
pub trait CandidateScorer: Sync {
    fn score(&self, delta: f64) -> Result<f64, DeltaSearchError>;
}

/// Wraps a closed-form score function as a scorer.
pub struct Oracle<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> CandidateScorer for Oracle<F> {
    fn score(&self, delta: f64) -> Result<f64, DeltaSearchError> {
        let s = (self.0)(delta);
        if s.is_nan() {
            return Err(DeltaSearchError::Oracle {
                delta,
                message: "score is NaN".into(),
            });
        }
        Ok(s)
    }
}

/// Scores δ by sampling: the mean C* over the validation instances.
#[derive(Debug, Clone)]
pub struct SamplingScorer<'a> {
    pub instances: &'a [Instance],
    pub policy: &'a PolicySpec,
    pub sample_size: usize,
    pub master_seed: u64,
    pub mode: DispatchMode,
}

impl SamplingScorer<'_> {
    /// Seed of the batch for instance `index` at `delta`.
    pub fn batch_seed(&self, delta: f64, index: usize) -> u64 {
        child_seed(child_seed(self.master_seed, delta.to_bits()), index as u64)
    }

    /// C* per validation instance at `delta`.
    pub fn best_per_instance(&self, delta: f64) -> Result<Vec<crate::Time>, SamplingError> {
        self.instances
            .par_iter()
            .enumerate()
            .map(|(i, instance)| {
                let config = SamplingConfig {
                    delta,
                    sample_size: self.sample_size,
                    master_seed: self.batch_seed(delta, i),
                    parallelism: 1,
                    mode: self.mode,
                    strategy: Strategy::Delta,
                };
                sample_in_current_pool(instance, self.policy, &config).map(|b| b.best)
            })
            .collect()
    }
}

impl CandidateScorer for SamplingScorer<'_> {
    fn score(&self, delta: f64) -> Result<f64, DeltaSearchError> {
        if self.instances.is_empty() {
            return Err(DeltaSearchError::InvalidConfig(
                "no validation instances".into(),
            ));
        }
        let bests = self
            .best_per_instance(delta)
            .map_err(|source| DeltaSearchError::Scoring { delta, source })?;
        Ok(bests.iter().map(|&b| b as f64).sum::<f64>() / bests.len() as f64)
    }
}

/// Rounds to two decimals, half away from zero.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn contains(set: &[f64], x: f64) -> bool {
    set.iter().any(|&y| (y - x).abs() < CANDIDATE_TOLERANCE)
}

/// The two lowest-scoring candidates, ties to the smaller δ.
pub fn two_best(scored: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    sorted.truncate(2);
    sorted
}

/// New candidates from `(delta, score)` pairs, ascending and disjoint from the
/// input.
pub fn refine_candidates(scored: &[(f64, f64)], rule: MidpointRule) -> Vec<f64> {
    let mut grid: Vec<f64> = scored.iter().map(|&(d, _)| d).collect();
    grid.sort_by(f64::total_cmp);
    if grid.len() < 2 {
        return Vec::new();
    }
    let best: Vec<f64> = two_best(scored).iter().map(|&(d, _)| d).collect();
    let position = |d: f64| grid.iter().position(|&g| g == d).expect("best is in grid");

    let mut proposals = Vec::new();
    match rule {
        MidpointRule::BothSides => {
            for &b in &best {
                let p = position(b);
                if p > 0 {
                    proposals.push(round2((grid[p - 1] + b) / 2.0));
                }
                if p + 1 < grid.len() {
                    proposals.push(round2((b + grid[p + 1]) / 2.0));
                }
            }
        }
        MidpointRule::BetweenBest => proposals.push(round2((best[0] + best[1]) / 2.0)),
    }

    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let half_gap = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max) / 2.0;
    if best.contains(&lo) {
        proposals.push(round2(lo - half_gap).max(0.0));
    }
    if best.contains(&hi) {
        proposals.push(round2(hi + half_gap));
    }

    let mut added: Vec<f64> = Vec::new();
    for x in proposals {
        if !contains(&grid, x) && !contains(&added, x) {
            added.push(x);
        }
    }
    added.sort_by(f64::total_cmp);
    added
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub delta: f64,
    /// Mean C* over the validation instances.
    pub score: f64,
    /// Iteration in which the candidate was introduced.
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Candidates scored in this iteration.
    pub candidates: Vec<f64>,
    pub best_delta: f64,
    pub best_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    MinSpacing,
    NoNewCandidates,
    /// A candidate failed to score; the result is partial.
    Failed,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxIterations => "max_iterations",
            StopReason::MinSpacing => "min_spacing",
            StopReason::NoNewCandidates => "no_new_candidates",
            StopReason::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSearchResult {
    /// In evaluation order.
    pub evaluations: Vec<Evaluation>,
    pub best_delta: f64,
    pub best_score: f64,
    pub trace: Vec<IterationTrace>,
    pub stop_reason: StopReason,
}

impl DeltaSearchResult {
    /// `delta,mean_c_star` rows sorted by δ.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<&Evaluation> = self.evaluations.iter().collect();
        rows.sort_by(|a, b| a.delta.total_cmp(&b.delta));
        let mut out = String::from("delta,mean_c_star\n");
        for e in rows {
            out.push_str(&format!("{},{}\n", e.delta, e.score));
        }
        out
    }

    pub fn score_of(&self, delta: f64) -> Option<f64> {
        self.evaluations
            .iter()
            .find(|e| (e.delta - delta).abs() < CANDIDATE_TOLERANCE)
            .map(|e| e.score)
    }
}

/// A search that stopped because a candidate could not be scored.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct SearchFailure {
    #[source]
    pub error: DeltaSearchError,
    /// Everything scored before the failure. `None` if nothing was.
    pub partial: Option<Box<DeltaSearchResult>>,
}

fn adjacent_gaps_below(scored: &[(f64, f64)], spacing: f64) -> bool {
    let mut grid: Vec<f64> = scored.iter().map(|&(d, _)| d).collect();
    grid.sort_by(f64::total_cmp);
    two_best(scored).iter().all(|&(b, _)| {
        let p = grid.iter().position(|&g| g == b).expect("best is in grid");
        let left = p.checked_sub(1).map(|q| b - grid[q]);
        let right = grid.get(p + 1).map(|&g| g - b);
        [left, right].into_iter().flatten().all(|gap| gap < spacing)
    })
}

/// Runs the refinement loop. Candidates of one iteration are scored in
/// parallel on the current rayon pool; the result does not depend on the
/// pool size.
pub fn search_delta(
    config: &DeltaSearchConfig,
    scorer: &dyn CandidateScorer,
) -> Result<DeltaSearchResult, SearchFailure> {
    config.validate().map_err(|error| SearchFailure {
        error,
        partial: None,
    })?;

    let mut evaluations: Vec<Evaluation> = Vec::new();
    let mut trace: Vec<IterationTrace> = Vec::new();
    let mut pending = config.initial_candidates.clone();
    let mut iteration = 0;

    let summarize = |evaluations: &[Evaluation], trace: Vec<IterationTrace>, stop_reason| {
        let scored: Vec<(f64, f64)> = evaluations.iter().map(|e| (e.delta, e.score)).collect();
        two_best(&scored)
            .first()
            .map(|&(best_delta, best_score)| DeltaSearchResult {
                evaluations: evaluations.to_vec(),
                best_delta,
                best_score,
                trace,
                stop_reason,
            })
    };

    let stop_reason = loop {
        let scores: Vec<Result<f64, DeltaSearchError>> =
            pending.par_iter().map(|&d| scorer.score(d)).collect();
        let mut failure = None;
        for (&delta, score) in pending.iter().zip(scores) {
            match score {
                Ok(score) => evaluations.push(Evaluation {
                    delta,
                    score,
                    iteration,
                }),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        if let Some(error) = failure {
            return Err(SearchFailure {
                error,
                partial: summarize(&evaluations, trace, StopReason::Failed).map(Box::new),
            });
        }

        let scored: Vec<(f64, f64)> = evaluations.iter().map(|e| (e.delta, e.score)).collect();
        let (best_delta, best_score) = two_best(&scored)[0];
        log::info!(
            "delta search iteration {iteration}: {} candidates, best delta {best_delta} (score {best_score})",
            pending.len()
        );
        trace.push(IterationTrace {
            iteration,
            candidates: std::mem::take(&mut pending),
            best_delta,
            best_score,
        });

        if iteration + 1 >= config.max_iterations {
            break StopReason::MaxIterations;
        }
        if adjacent_gaps_below(&scored, config.min_spacing) {
            break StopReason::MinSpacing;
        }
        pending = refine_candidates(&scored, config.midpoints);
        if pending.is_empty() {
            break StopReason::NoNewCandidates;
        }
        iteration += 1;
    };

    Ok(summarize(&evaluations, trace, stop_reason).expect("at least three evaluations"))
}
