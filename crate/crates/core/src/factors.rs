//! Human-preferred factors and the 12×20 factor matrix.
//!
//! Column `i` of the matrix holds the expected effect of action `i` on each
//! factor, computed from the acting player's perspective with no lookahead.
//! Entries are non-negative magnitudes; signs live in the strategy weights.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{card_event_probabilities, BeliefError};
use crate::engine::{Action, ActionKind, ActionOutcome, GameState, LegalMask, HAND_SIZE, NUM_ACTIONS};

pub const NUM_FACTORS: usize = 12;

/// Factor rows in their frozen order. Weight files, logs and API payloads index by it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorId {
    PlayPlayable,
    #[serde(rename = "play-unplayable-lt2strikes")]
    PlayUnplayableLt2Strikes,
    #[serde(rename = "play-unplayable-2strikes")]
    PlayUnplayable2Strikes,
    OtherPlaysPlayable,
    OtherPlaysUnplayable,
    DiscardNonEndangered,
    DiscardUnneeded,
    PlaySingledOut,
    ClueSinglesPlayable,
    ClueSinglesNonplayable,
    DiscardSingledOut,
    ClueValuePerToken,
}

impl FactorId {
    pub const ALL: [FactorId; NUM_FACTORS] = [
        FactorId::PlayPlayable,
        FactorId::PlayUnplayableLt2Strikes,
        FactorId::PlayUnplayable2Strikes,
        FactorId::OtherPlaysPlayable,
        FactorId::OtherPlaysUnplayable,
        FactorId::DiscardNonEndangered,
        FactorId::DiscardUnneeded,
        FactorId::PlaySingledOut,
        FactorId::ClueSinglesPlayable,
        FactorId::ClueSinglesNonplayable,
        FactorId::DiscardSingledOut,
        FactorId::ClueValuePerToken,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<FactorId> {
        FactorId::ALL.get(index).copied()
    }

    /// Stable machine key used in file formats.
    pub fn key(self) -> &'static str {
        match self {
            FactorId::PlayPlayable => "play-playable",
            FactorId::PlayUnplayableLt2Strikes => "play-unplayable-lt2strikes",
            FactorId::PlayUnplayable2Strikes => "play-unplayable-2strikes",
            FactorId::OtherPlaysPlayable => "other-plays-playable",
            FactorId::OtherPlaysUnplayable => "other-plays-unplayable",
            FactorId::DiscardNonEndangered => "discard-non-endangered",
            FactorId::DiscardUnneeded => "discard-unneeded",
            FactorId::PlaySingledOut => "play-singled-out",
            FactorId::ClueSinglesPlayable => "clue-singles-playable",
            FactorId::ClueSinglesNonplayable => "clue-singles-nonplayable",
            FactorId::DiscardSingledOut => "discard-singled-out",
            FactorId::ClueValuePerToken => "clue-value-per-token",
        }
    }

    pub fn from_key(key: &str) -> Option<FactorId> {
        FactorId::ALL.into_iter().find(|f| f.key() == key)
    }

    /// Human-readable name used when rendering instructions.
    pub fn display_name(self) -> &'static str {
        match self {
            FactorId::PlayPlayable => "Playing a playable card",
            FactorId::PlayUnplayableLt2Strikes => "Playing an unplayable card (fewer than 2 strikes)",
            FactorId::PlayUnplayable2Strikes => "Playing an unplayable card (2 strikes)",
            FactorId::OtherPlaysPlayable => "Other player playing a playable card",
            FactorId::OtherPlaysUnplayable => "Other player playing an unplayable card",
            FactorId::DiscardNonEndangered => "Discarding a non-endangered card",
            FactorId::DiscardUnneeded => "Discarding an unneeded card",
            FactorId::PlaySingledOut => "Playing a singled out card",
            FactorId::ClueSinglesPlayable => "Giving a clue that singles out a playable card",
            FactorId::ClueSinglesNonplayable => "Giving a clue that singles out a non-playable card",
            FactorId::DiscardSingledOut => "Discarding a singled out card",
            FactorId::ClueValuePerToken => "Added value to any clue per info token held",
        }
    }

    pub fn keys() -> [&'static str; NUM_FACTORS] {
        FactorId::ALL.map(FactorId::key)
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// `entries[f][a]`: expected effect of action `a` on factor `f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorMatrix {
    pub entries: [[f64; NUM_ACTIONS]; NUM_FACTORS],
    pub legal: LegalMask,
}

impl FactorMatrix {
    pub fn zeros(legal: LegalMask) -> FactorMatrix {
        FactorMatrix {
            entries: [[0.0; NUM_ACTIONS]; NUM_FACTORS],
            legal,
        }
    }

    pub fn get(&self, factor: FactorId, action: usize) -> f64 {
        self.entries[factor.index()][action]
    }

    pub fn set(&mut self, factor: FactorId, action: usize, value: f64) {
        self.entries[factor.index()][action] = value;
    }

    pub fn column(&self, action: usize) -> [f64; NUM_FACTORS] {
        std::array::from_fn(|f| self.entries[f][action])
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("cannot evaluate factors in a finished game")]
    Terminal,
    #[error("actor {actor} is not the current player {current}")]
    NotCurrentPlayer { actor: usize, current: usize },
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

pub fn factor_matrix(state: &GameState, actor: usize) -> Result<FactorMatrix, FactorError> {
    let legal = state.legal_actions().map_err(|_| FactorError::Terminal)?;
    if actor != state.current_player {
        return Err(FactorError::NotCurrentPlayer {
            actor,
            current: state.current_player,
        });
    }
    let mut h = FactorMatrix::zeros(legal);

    for slot in 0..HAND_SIZE {
        let Some(held) = state.slot(actor, slot) else { continue };
        let p = card_event_probabilities(state, actor, slot)?;
        let singled = if held.singled_out { 1.0 } else { 0.0 };

        let play = Action::play(slot).index();
        h.set(FactorId::PlayPlayable, play, p.p_playable);
        if state.strikes < 2 {
            h.set(FactorId::PlayUnplayableLt2Strikes, play, p.p_unplayable);
        } else {
            h.set(FactorId::PlayUnplayable2Strikes, play, p.p_unplayable);
        }
        h.set(FactorId::PlaySingledOut, play, singled);

        let discard = Action::discard(slot).index();
        h.set(FactorId::DiscardNonEndangered, discard, 1.0 - p.p_endangered);
        h.set(FactorId::DiscardUnneeded, discard, p.p_unneeded);
        h.set(FactorId::DiscardSingledOut, discard, singled);
    }

    let partner = GameState::partner(actor);
    let tokens = state.info_tokens as f64;
    for action in Action::all().filter(|a| a.kind().is_clue()) {
        let clue = action.clue().expect("clue action");
        let col = action.index();
        let touched = state.clue_touches(partner, clue);
        h.set(FactorId::ClueValuePerToken, col, tokens);

        // Only cards whose knowledge the clue actually narrows count as newly touched.
        let newly_playable = touched.iter().any(|&i| {
            let slot = state.slot(partner, i).expect("touched slot is occupied");
            let narrowed = slot
                .knowledge
                .apply_clue(clue, true)
                .map(|k| k != slot.knowledge)
                .unwrap_or(false);
            narrowed && state.is_playable(slot.card)
        });
        if newly_playable {
            h.set(FactorId::OtherPlaysPlayable, col, 1.0);
        }

        if let [only] = touched[..] {
            let card = state.slot(partner, only).expect("touched slot is occupied").card;
            if state.is_playable(card) {
                h.set(FactorId::ClueSinglesPlayable, col, 1.0);
            } else {
                h.set(FactorId::ClueSinglesNonplayable, col, 1.0);
                h.set(FactorId::OtherPlaysUnplayable, col, 1.0);
            }
        }
    }
    Ok(h)
}

/// Realized 0/1 outcome per factor for the action just applied.
///
/// Rows 3, 4 and 11 are not audited and stay `None`; rows that do not apply to
/// the action kind are `Some(0.0)`.
pub fn audit_factors(outcome: &ActionOutcome) -> [Option<f64>; NUM_FACTORS] {
    let mut audit = [Some(0.0); NUM_FACTORS];
    for f in [FactorId::OtherPlaysPlayable, FactorId::OtherPlaysUnplayable, FactorId::ClueValuePerToken] {
        audit[f.index()] = None;
    }
    let indicator = |b: bool| Some(if b { 1.0 } else { 0.0 });
    match outcome.action.kind() {
        ActionKind::Play(_) => {
            let playable = outcome.playable.unwrap_or(false);
            audit[FactorId::PlayPlayable.index()] = indicator(playable);
            audit[FactorId::PlayUnplayableLt2Strikes.index()] = indicator(!playable && outcome.strikes_before < 2);
            audit[FactorId::PlayUnplayable2Strikes.index()] = indicator(!playable && outcome.strikes_before >= 2);
            audit[FactorId::PlaySingledOut.index()] = indicator(outcome.slot_singled_out);
        }
        ActionKind::Discard(_) => {
            audit[FactorId::DiscardNonEndangered.index()] = indicator(!outcome.endangered.unwrap_or(false));
            audit[FactorId::DiscardUnneeded.index()] = indicator(outcome.unneeded.unwrap_or(false));
            audit[FactorId::DiscardSingledOut.index()] = indicator(outcome.slot_singled_out);
        }
        ActionKind::ClueColor(_) | ActionKind::ClueRank(_) => {
            if let [playable] = outcome.touched_playable[..] {
                audit[FactorId::ClueSinglesPlayable.index()] = indicator(playable);
                audit[FactorId::ClueSinglesNonplayable.index()] = indicator(!playable);
            }
        }
    }
    audit
}
