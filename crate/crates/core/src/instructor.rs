//! Instruction synthesis: explain observed decisions as a weight change on an
//! ideal strategy, keep as few changed weights as possible, and render the
//! opposite change as advice.
//!
//! For each observed decision the ideal's outputs `y` are nudged to the
//! nearest vector `z` whose argmax is the observed action. Stacking the
//! transposed factor matrices gives an overdetermined system
//! `H̃ δw = vec(Z − Y)`, solved in the minimum-norm least-squares sense.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{LegalMask, NUM_ACTIONS};
use crate::factors::{FactorId, FactorMatrix, NUM_FACTORS};
use crate::linalg::min_norm_lstsq;
use crate::policy::{agreement, argmax_legal, expected_rewards, StrategyVector};

/// One observed decision: the decision-maker's factor matrix and the chosen action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub h: FactorMatrix,
    pub action: usize,
    pub source: String,
}

impl Decision {
    pub fn legal(&self) -> &LegalMask {
        &self.h.legal
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionSet(pub Vec<Decision>);

impl DecisionSet {
    pub fn new(decisions: Vec<Decision>) -> Result<DecisionSet, InstructError> {
        for (k, d) in decisions.iter().enumerate() {
            if !d.legal().is_legal(d.action) {
                return Err(InstructError::IllegalDecision { record: k, action: d.action });
            }
        }
        Ok(DecisionSet(decisions))
    }
}

impl std::ops::Deref for DecisionSet {
    type Target = [Decision];

    fn deref(&self) -> &[Decision] {
        &self.0
    }
}

impl FromIterator<Decision> for DecisionSet {
    fn from_iter<I: IntoIterator<Item = Decision>>(iter: I) -> Self {
        DecisionSet(iter.into_iter().collect())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstructError {
    #[error("decision set is empty")]
    EmptyDecisionSet,
    #[error("record {record}: action {action} is not legal")]
    IllegalDecision { record: usize, action: usize },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("target outputs given for {targets} records but {records} records supplied")]
    TargetMismatch { targets: usize, records: usize },
}

/// A weight change with its support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyDelta {
    pub dw: [f64; NUM_FACTORS],
}

impl StrategyDelta {
    pub fn zero() -> StrategyDelta {
        StrategyDelta { dw: [0.0; NUM_FACTORS] }
    }

    pub fn support(&self) -> Vec<FactorId> {
        FactorId::ALL.into_iter().filter(|f| self.dw[f.index()] != 0.0).collect()
    }

    pub fn norm(&self) -> f64 {
        self.dw.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn without(&self, factor: FactorId) -> StrategyDelta {
        let mut dw = self.dw;
        dw[factor.index()] = 0.0;
        StrategyDelta { dw }
    }
}

/// Default tie-breaking margin for target outputs.
pub const DEFAULT_EPSILON: f64 = 0.5;

/// Nearest output vector whose legal argmax is `target`.
///
/// Entries at or above `m` (the mean of the legal entries strictly above
/// `y[target]`) are clamped to `m` and the target is lifted to `m + epsilon`.
/// When `target` already wins, `y` is returned unchanged. Illegal entries are
/// never modified.
pub fn z_from(y: &[f64; NUM_ACTIONS], legal: &LegalMask, target: usize, epsilon: f64) -> [f64; NUM_ACTIONS] {
    if argmax_legal(y, legal) == Some(target) {
        return *y;
    }
    let yt = y[target];
    let above: Vec<f64> = legal.indices().filter(|&j| y[j] > yt).map(|j| y[j]).collect();
    // A tie lost on index order leaves nothing strictly above; clamp at y[target].
    let m = if above.is_empty() {
        yt
    } else {
        above.iter().sum::<f64>() / above.len() as f64
    };
    let mut z = *y;
    for j in legal.indices() {
        if j == target {
            z[j] = m + epsilon;
        } else if y[j] >= m {
            z[j] = m;
        }
    }
    z
}

/// `H̃` (20g × 12) and `vec(Z − Y)` for the given decisions.
pub fn stacked_system(
    decisions: &DecisionSet,
    w_ref: &StrategyVector,
    epsilon: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let g = decisions.len();
    let mut a = DMatrix::zeros(NUM_ACTIONS * g, NUM_FACTORS);
    let mut r = DVector::zeros(NUM_ACTIONS * g);
    for (k, d) in decisions.iter().enumerate() {
        let y = expected_rewards(&d.h, w_ref).y;
        let z = z_from(&y, d.legal(), d.action, epsilon);
        for i in 0..NUM_ACTIONS {
            let row = k * NUM_ACTIONS + i;
            for f in 0..NUM_FACTORS {
                a[(row, f)] = d.h.entries[f][i];
            }
            r[row] = z[i] - y[i];
        }
    }
    (a, r)
}

pub fn solve_dw(
    decisions: &DecisionSet,
    w_ref: &StrategyVector,
    epsilon: f64,
) -> Result<StrategyDelta, InstructError> {
    if decisions.is_empty() {
        return Err(InstructError::EmptyDecisionSet);
    }
    if !(epsilon > 0.0) {
        return Err(InstructError::NonPositiveEpsilon(epsilon));
    }
    let (a, r) = stacked_system(decisions, w_ref, epsilon);
    if r.iter().all(|&v| v == 0.0) {
        return Ok(StrategyDelta::zero());
    }
    let sol = min_norm_lstsq(&a, &r);
    Ok(StrategyDelta {
        dw: std::array::from_fn(|i| sol.x[i]),
    })
}

/// Fraction of decisions reproduced by `w_ref + δw`.
pub fn quality(decisions: &DecisionSet, w_ref: &StrategyVector, delta: &StrategyDelta) -> f64 {
    agreement(&w_ref.plus(&delta.dw), decisions)
}

/// Average residual of the best linear fit of target outputs using only `factors`.
///
/// The fit is the stacked least-squares solution; the reported value averages
/// the per-record L2 residual norms at that solution.
pub fn lambda_merit(
    decisions: &DecisionSet,
    targets: &[[f64; NUM_ACTIONS]],
    factors: &[FactorId],
) -> Result<f64, InstructError> {
    if decisions.is_empty() {
        return Err(InstructError::EmptyDecisionSet);
    }
    if targets.len() != decisions.len() {
        return Err(InstructError::TargetMismatch {
            targets: targets.len(),
            records: decisions.len(),
        });
    }
    let g = decisions.len();
    let mut a = DMatrix::zeros(NUM_ACTIONS * g, factors.len());
    let mut b = DVector::zeros(NUM_ACTIONS * g);
    for (k, (d, y)) in decisions.iter().zip(targets).enumerate() {
        for i in 0..NUM_ACTIONS {
            for (c, f) in factors.iter().enumerate() {
                a[(k * NUM_ACTIONS + i, c)] = d.h.entries[f.index()][i];
            }
            b[k * NUM_ACTIONS + i] = y[i];
        }
    }
    let w = min_norm_lstsq(&a, &b).x;
    let fitted = &a * &w;
    let total: f64 = (0..g)
        .map(|k| {
            let rows = k * NUM_ACTIONS..(k + 1) * NUM_ACTIONS;
            rows.map(|row| (b[row] - fitted[row]).powi(2)).sum::<f64>().sqrt()
        })
        .sum();
    Ok(total / g as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsifyOutcome {
    pub delta: StrategyDelta,
    pub quality: f64,
    /// Set when the input did not clear the threshold and was returned unchanged.
    pub below_threshold: bool,
}

/// Greedily zero entries of `δw` while the quality stays above `alpha`.
///
/// Each round drops the entry whose removal keeps the quality highest; ties
/// go to the smaller magnitude, then the lower factor index.
pub fn sparsify(
    decisions: &DecisionSet,
    w_ref: &StrategyVector,
    delta: &StrategyDelta,
    alpha: f64,
) -> SparsifyOutcome {
    let mut current = *delta;
    let mut q = quality(decisions, w_ref, &current);
    if current.support().is_empty() {
        return SparsifyOutcome {
            delta: current,
            quality: q,
            below_threshold: false,
        };
    }
    if q <= alpha {
        log::warn!("sparsify: quality {q:.4} does not exceed alpha {alpha:.4}; returning dense delta");
        return SparsifyOutcome {
            delta: current,
            quality: q,
            below_threshold: true,
        };
    }
    loop {
        let mut best: Option<(f64, f64, FactorId)> = None;
        for f in current.support() {
            let q_without = quality(decisions, w_ref, &current.without(f));
            let mag = current.dw[f.index()].abs();
            let better = match best {
                None => true,
                Some((bq, bmag, _)) => q_without > bq || (q_without == bq && mag < bmag),
            };
            if better {
                best = Some((q_without, mag, f));
            }
        }
        match best {
            Some((q_without, _, f)) if q_without > alpha => {
                current = current.without(f);
                q = q_without;
            }
            _ => break,
        }
    }
    SparsifyOutcome {
        delta: current,
        quality: q,
        below_threshold: false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub factor: FactorId,
    /// Entry of `−δw`: positive means value the factor more.
    pub change: f64,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstructionResult {
    pub dw_dense: [f64; NUM_FACTORS],
    pub dw_sparse: [f64; NUM_FACTORS],
    pub q_dense: f64,
    pub q_sparse: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub decisions: usize,
    pub below_threshold: bool,
    pub instructions: Vec<Instruction>,
    pub rendered: Vec<String>,
}

impl InstructionResult {
    pub fn sparse(&self) -> StrategyDelta {
        StrategyDelta { dw: self.dw_sparse }
    }

    pub fn dense(&self) -> StrategyDelta {
        StrategyDelta { dw: self.dw_dense }
    }

    /// Plain-text report, one instruction per line.
    pub fn to_text(&self) -> String {
        if self.rendered.is_empty() {
            return "no instruction needed\n".to_string();
        }
        self.rendered.iter().map(|r| format!("{r}\n")).collect()
    }
}

/// Advice strings for `−δw`, largest magnitude first.
pub fn render(delta: &StrategyDelta) -> Vec<Instruction> {
    let mut out: Vec<Instruction> = delta
        .support()
        .into_iter()
        .map(|f| {
            let change = -delta.dw[f.index()];
            let direction = if change > 0.0 { "more" } else { "less" };
            Instruction {
                factor: f,
                change,
                text: format!("value {} {direction}", f.display_name()),
            }
        })
        .collect();
    out.sort_by(|a, b| b.change.abs().total_cmp(&a.change.abs()).then(a.factor.cmp(&b.factor)));
    out
}

pub fn instruct(
    decisions: &DecisionSet,
    ideal: &StrategyVector,
    alpha: f64,
    epsilon: f64,
) -> Result<InstructionResult, InstructError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(InstructError::AlphaOutOfRange(alpha));
    }
    let dense = solve_dw(decisions, ideal, epsilon)?;
    let q_dense = quality(decisions, ideal, &dense);
    let sparse = sparsify(decisions, ideal, &dense, alpha);
    let instructions = render(&sparse.delta);
    Ok(InstructionResult {
        dw_dense: dense.dw,
        dw_sparse: sparse.delta.dw,
        q_dense,
        q_sparse: sparse.quality,
        alpha,
        epsilon,
        decisions: decisions.len(),
        below_threshold: sparse.below_threshold,
        rendered: instructions.iter().map(|i| i.text.clone()).collect(),
        instructions,
    })
}

/// Difference in perceived factor effects, same shape as a factor matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerceptionDelta {
    pub dh: [[f64; NUM_ACTIONS]; NUM_FACTORS],
}

/// Strategy change reproducing the output shift `δHᵀw` of a misperception.
///
/// Computed as `(HHᵀ)⁺ H δHᵀ w`, which equals `(HHᵀ)⁻¹ H δHᵀ w` whenever
/// `HHᵀ` is invertible; `Hᵀδw` is the projection of `δHᵀw` onto range(`Hᵀ`).
pub fn perception_equivalent_dw(h: &FactorMatrix, dh: &PerceptionDelta, w: &StrategyVector) -> StrategyDelta {
    let mut ht = DMatrix::zeros(NUM_ACTIONS, NUM_FACTORS);
    let mut shift = DVector::zeros(NUM_ACTIONS);
    for i in 0..NUM_ACTIONS {
        for f in 0..NUM_FACTORS {
            ht[(i, f)] = h.entries[f][i];
            shift[i] += dh.dh[f][i] * w.weights[f];
        }
    }
    let x = min_norm_lstsq(&ht, &shift).x;
    StrategyDelta {
        dw: std::array::from_fn(|i| x[i]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmulationConfig {
    pub batches: usize,
    pub epsilon: f64,
    pub step: f64,
}

impl Default for EmulationConfig {
    fn default() -> Self {
        EmulationConfig {
            batches: 40,
            epsilon: DEFAULT_EPSILON,
            step: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmulationStep {
    pub batch: usize,
    pub weights: [f64; NUM_FACTORS],
    /// Agreement of `weights` with the batch's target decisions, before updating.
    pub agreement: f64,
    pub dw_norm: f64,
}

/// Repeatedly instruct `start` toward a target decision source and apply the full correction.
///
/// `source(b)` supplies the decisions for batch `b`; batches `0..batches`
/// drive updates and batch `batches` only measures the final agreement.
pub fn iterative_emulation<F>(
    start: &StrategyVector,
    mut source: F,
    config: &EmulationConfig,
) -> Result<Vec<EmulationStep>, InstructError>
where
    F: FnMut(usize) -> DecisionSet,
{
    let mut w = start.clone();
    let mut trajectory = Vec::with_capacity(config.batches + 1);
    for batch in 0..=config.batches {
        let decisions = source(batch);
        let agreement_now = agreement(&w, &decisions);
        let delta = if batch < config.batches {
            solve_dw(&decisions, &w, config.epsilon)?
        } else {
            StrategyDelta::zero()
        };
        trajectory.push(EmulationStep {
            batch,
            weights: w.weights,
            agreement: agreement_now,
            dw_norm: delta.norm(),
        });
        let scaled = delta.dw.map(|v| v * config.step);
        w = w.plus(&scaled);
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legal_prefix(n: usize) -> LegalMask {
        let mut m = LegalMask::none();
        for i in 0..n {
            m.0[i] = true;
        }
        m
    }

    fn pad(v: &[f64]) -> [f64; NUM_ACTIONS] {
        let mut y = [0.0; NUM_ACTIONS];
        y[..v.len()].copy_from_slice(v);
        y
    }

    #[test]
    fn z_clamps_entries_above_the_mean() {
        let z = z_from(&pad(&[4.0, 6.0, 1.0, 2.0]), &legal_prefix(4), 3, 0.01);
        assert_eq!(&z[..4], &[4.0, 5.0, 1.0, 5.01]);
    }

    #[test]
    fn z_is_y_when_target_already_wins() {
        let y = pad(&[7.0, 1.0]);
        assert_eq!(z_from(&y, &legal_prefix(2), 0, 0.01), y);
    }

    #[test]
    fn z_folds_equality_into_the_clamp() {
        let z = z_from(&pad(&[5.0, 1.0, 2.0]), &legal_prefix(3), 2, 0.01);
        assert_eq!(&z[..3], &[5.0, 1.0, 5.01]);
    }

    #[test]
    fn z_breaks_an_index_tie() {
        let z = z_from(&pad(&[3.0, 3.0]), &legal_prefix(2), 1, 0.5);
        assert_eq!(&z[..2], &[3.0, 3.5]);
    }

    #[test]
    fn z_ignores_illegal_entries() {
        let mut legal = legal_prefix(3);
        legal.0[1] = false;
        let z = z_from(&pad(&[4.0, 100.0, 1.0]), &legal, 2, 0.1);
        assert_eq!(&z[..3], &[4.0, 100.0, 4.1]);
    }

    fn two_by_two_decision() -> Decision {
        let mut h = FactorMatrix::zeros(legal_prefix(2));
        h.entries[0][0] = 1.0;
        h.entries[1][1] = 1.0;
        Decision {
            h,
            action: 1,
            source: "test".into(),
        }
    }

    #[test]
    fn solve_on_identity_block() {
        let d = DecisionSet::new(vec![two_by_two_decision()]).unwrap();
        let w = StrategyVector::zeros("ref").with(FactorId::PlayPlayable, 1.0);
        let dw = solve_dw(&d, &w, 0.01).unwrap();
        assert!(dw.dw[0].abs() < 1e-12);
        assert!((dw.dw[1] - 1.01).abs() < 1e-12);
        assert!(dw.dw[2..].iter().all(|&v| v == 0.0));
        assert_eq!(quality(&d, &w, &dw), 1.0);
    }

    #[test]
    fn self_consistent_decisions_need_no_change() {
        let mut d = two_by_two_decision();
        d.action = 0;
        let set = DecisionSet::new(vec![d]).unwrap();
        let w = StrategyVector::zeros("ref").with(FactorId::PlayPlayable, 1.0);
        assert_eq!(solve_dw(&set, &w, 0.01).unwrap(), StrategyDelta::zero());
        let result = instruct(&set, &w, 0.5, 0.01).unwrap();
        assert!(result.rendered.is_empty());
        assert_eq!(result.to_text(), "no instruction needed\n");
    }

    #[test]
    fn empty_set_and_bad_epsilon_are_rejected() {
        let w = StrategyVector::zeros("ref");
        assert_eq!(
            solve_dw(&DecisionSet::default(), &w, 0.1),
            Err(InstructError::EmptyDecisionSet)
        );
        let d = DecisionSet::new(vec![two_by_two_decision()]).unwrap();
        assert_eq!(solve_dw(&d, &w, 0.0), Err(InstructError::NonPositiveEpsilon(0.0)));
    }

    #[test]
    fn illegal_recorded_action_is_rejected() {
        let mut d = two_by_two_decision();
        d.action = 7;
        assert_eq!(
            DecisionSet::new(vec![d]),
            Err(InstructError::IllegalDecision { record: 0, action: 7 })
        );
    }

    #[test]
    fn sparsify_drops_irrelevant_entry() {
        let d = DecisionSet::new(vec![two_by_two_decision()]).unwrap();
        let w = StrategyVector::zeros("ref").with(FactorId::PlayPlayable, 1.0);
        let mut delta = StrategyDelta { dw: [0.0; NUM_FACTORS] };
        delta.dw[1] = 2.0;
        delta.dw[5] = 1e-3;
        let out = sparsify(&d, &w, &delta, 0.5);
        assert_eq!(out.delta.support(), vec![FactorId::PlayUnplayableLt2Strikes]);
        assert_eq!(out.quality, 1.0);
    }

    #[test]
    fn sparsify_keeps_a_needed_single_entry() {
        let d = DecisionSet::new(vec![two_by_two_decision()]).unwrap();
        let w = StrategyVector::zeros("ref").with(FactorId::PlayPlayable, 1.0);
        let mut delta = StrategyDelta::zero();
        delta.dw[1] = 2.0;
        assert_eq!(sparsify(&d, &w, &delta, 0.5).delta, delta);
        // With alpha = 0 nothing forces the entry to stay except q > alpha; q(0) = 0.
        assert_eq!(sparsify(&d, &w, &delta, 0.0).delta, delta);
    }

    #[test]
    fn sparsify_below_threshold_returns_input() {
        let d = DecisionSet::new(vec![two_by_two_decision()]).unwrap();
        let w = StrategyVector::zeros("ref").with(FactorId::PlayPlayable, 1.0);
        let mut delta = StrategyDelta::zero();
        delta.dw[1] = 0.5;
        let out = sparsify(&d, &w, &delta, 0.5);
        assert!(out.below_threshold);
        assert_eq!(out.delta, delta);
        assert!(!sparsify(&d, &w, &StrategyDelta::zero(), 0.5).below_threshold);
    }

    #[test]
    fn rendering_flips_sign_and_orders_by_magnitude() {
        let mut delta = StrategyDelta::zero();
        delta.dw[FactorId::DiscardNonEndangered.index()] = 0.5;
        delta.dw[FactorId::PlayPlayable.index()] = -2.0;
        let rendered = render(&delta);
        assert_eq!(rendered[0].text, "value Playing a playable card more");
        assert_eq!(rendered[1].text, "value Discarding a non-endangered card less");
    }

    #[test]
    fn perception_of_zero_difference() {
        let d = two_by_two_decision();
        let dh = PerceptionDelta {
            dh: [[0.0; NUM_ACTIONS]; NUM_FACTORS],
        };
        let w = StrategyVector::zeros("w").with(FactorId::PlayPlayable, 3.0);
        assert_eq!(perception_equivalent_dw(&d.h, &dh, &w).norm(), 0.0);
    }

    #[test]
    fn emulating_yourself_changes_nothing() {
        let d = DecisionSet::new(vec![{
            let mut d = two_by_two_decision();
            d.action = 0;
            d
        }])
        .unwrap();
        let w = StrategyVector::zeros("ref").with(FactorId::PlayPlayable, 1.0);
        let config = EmulationConfig {
            batches: 3,
            ..EmulationConfig::default()
        };
        let traj = iterative_emulation(&w, |_| d.clone(), &config).unwrap();
        assert_eq!(traj.len(), 4);
        assert!(traj.iter().all(|s| s.agreement == 1.0 && s.dw_norm == 0.0));
    }
}
