//! Self-play evaluation and full-factorial coordinate search over strategy weights.
//!
//! An epoch varies four weights over three levels each (81 configurations)
//! and keeps the best. All configurations in an epoch, and all epochs of a
//! run, see the same game seeds, so the winning score can never go down.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Action, GameConfig, GameState, MAX_SCORE};
use crate::factors::{factor_matrix, FactorError, FactorId, FactorMatrix};
use crate::instructor::DecisionSet;
use crate::policy::{agreement, expected_rewards, PolicyError, StrategyVector};

pub const LEVELS: usize = 3;
pub const SUBSET_SIZE: usize = 4;
pub const CONFIGS_PER_EPOCH: usize = 81;
/// Configuration index with every factor at its medium level.
pub const ALL_MEDIUM: usize = 40;
pub const DEFAULT_GAMES_PER_CONFIG: usize = 200;

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Factors(#[from] FactorError),
    #[error("at least one game is required")]
    NoGames,
    #[error("levels for {0} are not ordered low < medium < high")]
    UnorderedLevels(FactorId),
}

/// Seed for game `index` of a run seeded with `seed` (SplitMix64 finalizer).
pub fn game_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Play one game to completion; `observe` sees every decision before it is applied.
pub fn play_game<F>(
    seats: [&StrategyVector; 2],
    config: GameConfig,
    mut observe: F,
) -> Result<u8, TrainingError>
where
    F: FnMut(&GameState, &FactorMatrix, Action),
{
    let mut state = GameState::new(config);
    loop {
        if let Some(score) = state.is_terminal() {
            return Ok(score);
        }
        let actor = state.current_player;
        let h = factor_matrix(&state, actor)?;
        let action = expected_rewards(&h, seats[actor])
            .argmax()
            .and_then(Action::from_index)
            .ok_or(PolicyError::NoLegalAction)?;
        observe(&state, &h, action);
        state = state
            .apply_action(action)
            .expect("argmax over the legal mask yields a legal action")
            .0;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub games: usize,
    pub mean: f64,
    pub stddev: f64,
    /// Count of games per final score 0..=25.
    pub histogram: Vec<u32>,
    pub scores: Vec<u8>,
}

impl ScoreStats {
    pub fn from_scores(scores: Vec<u8>) -> ScoreStats {
        let n = scores.len();
        let mean = scores.iter().map(|&s| s as f64).sum::<f64>() / n.max(1) as f64;
        let var = if n > 1 {
            scores.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut histogram = vec![0u32; MAX_SCORE as usize + 1];
        for &s in &scores {
            histogram[s as usize] += 1;
        }
        ScoreStats {
            games: n,
            mean,
            stddev: var.sqrt(),
            histogram,
            scores,
        }
    }
}

/// Play `n_games` between two strategies, swapping seats every game.
///
/// Game `i` is dealt from `game_seed(seed, i)`; `w_a` sits first in even games.
pub fn selfplay_eval(
    w_a: &StrategyVector,
    w_b: &StrategyVector,
    n_games: usize,
    seed: u64,
) -> Result<ScoreStats, TrainingError> {
    if n_games == 0 {
        return Err(TrainingError::NoGames);
    }
    let scores = (0..n_games)
        .into_par_iter()
        .map(|i| {
            let seats = if i % 2 == 0 { [w_a, w_b] } else { [w_b, w_a] };
            play_game(seats, GameConfig::with_seed(game_seed(seed, i as u64)), |_, _, _| {})
        })
        .collect::<Result<Vec<u8>, _>>()?;
    Ok(ScoreStats::from_scores(scores))
}

/// Something to maximize over strategy vectors.
pub trait Objective: Sync {
    fn evaluate(&self, w: &StrategyVector) -> Result<f64, TrainingError>;
}

/// Mean self-play score over a fixed set of seeded games.
#[derive(Clone, Copy, Debug)]
pub struct SelfPlayScore {
    pub games: usize,
    pub seed: u64,
}

impl Objective for SelfPlayScore {
    fn evaluate(&self, w: &StrategyVector) -> Result<f64, TrainingError> {
        Ok(selfplay_eval(w, w, self.games, self.seed)?.mean)
    }
}

/// Mean score when paired with a fixed partner.
#[derive(Clone, Debug)]
pub struct PartnerScore {
    pub partner: StrategyVector,
    pub games: usize,
    pub seed: u64,
}

impl Objective for PartnerScore {
    fn evaluate(&self, w: &StrategyVector) -> Result<f64, TrainingError> {
        Ok(selfplay_eval(w, &self.partner, self.games, self.seed)?.mean)
    }
}

/// Fraction of stored decisions reproduced. Never touches the engine.
pub struct Humanness<'a> {
    pub decisions: &'a DecisionSet,
}

impl Objective for Humanness<'_> {
    fn evaluate(&self, w: &StrategyVector) -> Result<f64, TrainingError> {
        Ok(agreement(w, self.decisions))
    }
}

impl<F> Objective for F
where
    F: Fn(&StrategyVector) -> f64 + Sync,
{
    fn evaluate(&self, w: &StrategyVector) -> Result<f64, TrainingError> {
        Ok(self(w))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorialEpochSpec {
    pub subset: [FactorId; SUBSET_SIZE],
    /// (low, medium, high) per factor in `subset`.
    pub levels: [[f64; LEVELS]; SUBSET_SIZE],
}

impl FactorialEpochSpec {
    pub fn centered(subset: [FactorId; SUBSET_SIZE], center: [f64; SUBSET_SIZE], step: [f64; SUBSET_SIZE]) -> Self {
        FactorialEpochSpec {
            subset,
            levels: std::array::from_fn(|i| [center[i] - step[i], center[i], center[i] + step[i]]),
        }
    }

    /// Level index per factor for configuration `config` (first factor most significant).
    pub fn level_indices(config: usize) -> [usize; SUBSET_SIZE] {
        let mut rest = config;
        let mut out = [0; SUBSET_SIZE];
        for i in (0..SUBSET_SIZE).rev() {
            out[i] = rest % LEVELS;
            rest /= LEVELS;
        }
        out
    }

    pub fn weights_for(&self, base: &StrategyVector, config: usize) -> StrategyVector {
        let mut w = base.clone();
        for (i, level) in Self::level_indices(config).into_iter().enumerate() {
            w.weights[self.subset[i].index()] = self.levels[i][level];
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochResult {
    pub scores: Vec<f64>,
    pub best: usize,
    pub best_score: f64,
    pub best_weights: StrategyVector,
    pub converged: bool,
}

/// Evaluate all 81 configurations. Ties go to the configuration with the most
/// medium levels, then the lowest index.
pub fn run_epoch(
    base: &StrategyVector,
    spec: &FactorialEpochSpec,
    objective: &dyn Objective,
) -> Result<EpochResult, TrainingError> {
    for (i, levels) in spec.levels.iter().enumerate() {
        if !(levels[0] < levels[1] && levels[1] < levels[2]) {
            return Err(TrainingError::UnorderedLevels(spec.subset[i]));
        }
    }
    let scores = (0..CONFIGS_PER_EPOCH)
        .into_par_iter()
        .map(|c| objective.evaluate(&spec.weights_for(base, c)))
        .collect::<Result<Vec<f64>, _>>()?;

    let off_medium = |c: usize| FactorialEpochSpec::level_indices(c).iter().filter(|&&l| l != 1).count();
    let mut best = ALL_MEDIUM;
    for c in 0..CONFIGS_PER_EPOCH {
        let better = scores[c] > scores[best] || (scores[c] == scores[best] && (off_medium(c), c) < (off_medium(best), best));
        if better {
            best = c;
        }
    }
    Ok(EpochResult {
        best_score: scores[best],
        best_weights: spec.weights_for(base, best),
        converged: best == ALL_MEDIUM,
        scores,
        best,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetSchedule {
    pub subset: [FactorId; SUBSET_SIZE],
    pub step: [f64; SUBSET_SIZE],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Epoch cap per subset.
    pub max_epochs: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { max_epochs: 25 }
    }
}

/// One line of the JSONL training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub subset: [FactorId; SUBSET_SIZE],
    pub levels: [[f64; LEVELS]; SUBSET_SIZE],
    pub scores: Vec<f64>,
    pub winner: usize,
    pub winner_levels: [usize; SUBSET_SIZE],
    pub best_score: f64,
    pub converged: bool,
    pub weights: [f64; crate::factors::NUM_FACTORS],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub weights: StrategyVector,
    pub epochs: Vec<EpochRecord>,
    /// A subset hit the epoch cap before converging.
    pub capped: bool,
}

impl TrainOutcome {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.best_score).collect()
    }
}

/// Coordinate-subset search: recenter the levels on each epoch's winner until
/// the all-medium configuration wins, then move to the next subset.
///
/// A factor whose winning level was medium has its step halved for the next
/// epoch; factors that moved keep their step.
pub fn train(
    base: &StrategyVector,
    schedule: &[SubsetSchedule],
    objective: &dyn Objective,
    options: TrainOptions,
) -> Result<TrainOutcome, TrainingError> {
    let mut w = base.clone();
    let mut epochs = Vec::new();
    let mut capped = false;
    for entry in schedule {
        let mut step = entry.step;
        let mut converged = false;
        for _ in 0..options.max_epochs {
            let center = entry.subset.map(|f| w.get(f));
            let spec = FactorialEpochSpec::centered(entry.subset, center, step);
            let result = run_epoch(&w, &spec, objective)?;
            let winner_levels = FactorialEpochSpec::level_indices(result.best);
            epochs.push(EpochRecord {
                epoch: epochs.len(),
                subset: entry.subset,
                levels: spec.levels,
                scores: result.scores.clone(),
                winner: result.best,
                winner_levels,
                best_score: result.best_score,
                converged: result.converged,
                weights: result.best_weights.weights,
            });
            log::info!(
                "epoch {} subset {:?}: best {:.4} (config {}){}",
                epochs.len() - 1,
                entry.subset.map(FactorId::key),
                result.best_score,
                result.best,
                if result.converged { ", converged" } else { "" }
            );
            w = result.best_weights;
            if result.converged {
                converged = true;
                break;
            }
            for (i, &level) in winner_levels.iter().enumerate() {
                if level == 1 {
                    step[i] /= 2.0;
                }
            }
        }
        if !converged {
            log::warn!("subset {:?} did not converge within {} epochs", entry.subset.map(FactorId::key), options.max_epochs);
            capped = true;
        }
    }
    Ok(TrainOutcome { weights: w, epochs, capped })
}

/// Three subsets of four covering all twelve factors, each with the given step.
pub fn default_schedule(step: f64) -> Vec<SubsetSchedule> {
    FactorId::ALL
        .chunks(SUBSET_SIZE)
        .map(|chunk| SubsetSchedule {
            subset: [chunk[0], chunk[1], chunk[2], chunk[3]],
            step: [step; SUBSET_SIZE],
        })
        .collect()
}
