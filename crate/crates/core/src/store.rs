//! File formats: weight profiles, state snapshots, decision logs (JSON Lines)
//! and generic JSONL traces.
//!
//! Floats are written by `serde_json`, which emits the shortest decimal that
//! round-trips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Action, Card, GameState, Hand, LegalMask, NUM_COLORS, NUM_PLAYERS};
use crate::factors::{factor_matrix, FactorError, FactorId, FactorMatrix, NUM_FACTORS};
use crate::instructor::{Decision, DecisionSet};
use crate::policy::{StrategyVector, W_INF};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {error}")]
    Io { path: String, error: std::io::Error },
    #[error("line {line}: malformed JSON: {error}")]
    Json { line: usize, error: serde_json::Error },
    #[error("line {line}: schema version {found} is not supported (expected {expected})")]
    Version { line: usize, found: u32, expected: u32 },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("weights file: {0}")]
    Weights(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |error| StoreError::Io {
        path: path.display().to_string(),
        error,
    }
}

// ---------------------------------------------------------------- weights

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Number(f64),
    Symbol(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub name: String,
    pub weights: Vec<WeightValue>,
    pub factor_order: Vec<String>,
}

impl WeightsFile {
    pub fn from_strategy(w: &StrategyVector) -> WeightsFile {
        let weights = w
            .weights
            .iter()
            .map(|&v| match v {
                v if v == W_INF => WeightValue::Symbol("inf".into()),
                v if v == -W_INF => WeightValue::Symbol("-inf".into()),
                v => WeightValue::Number(v),
            })
            .collect();
        WeightsFile {
            name: w.name.clone(),
            weights,
            factor_order: FactorId::keys().iter().map(|k| k.to_string()).collect(),
        }
    }

    pub fn materialize(&self) -> Result<StrategyVector, StoreError> {
        if self.factor_order.len() != NUM_FACTORS || self.weights.len() != NUM_FACTORS {
            return Err(StoreError::Weights(format!(
                "expected {NUM_FACTORS} factors, got {} weights and {} names",
                self.weights.len(),
                self.factor_order.len()
            )));
        }
        for (i, (got, want)) in self.factor_order.iter().zip(FactorId::keys()).enumerate() {
            if got != want {
                return Err(StoreError::Weights(format!("factor {i} is {got:?}, expected {want:?}")));
            }
        }
        let mut weights = [0.0; NUM_FACTORS];
        for (slot, value) in weights.iter_mut().zip(&self.weights) {
            *slot = match value {
                WeightValue::Number(v) if v.is_finite() => *v,
                WeightValue::Number(v) => return Err(StoreError::Weights(format!("non-finite weight {v}"))),
                WeightValue::Symbol(s) => match s.as_str() {
                    "inf" | "+inf" | "∞" => W_INF,
                    "-inf" | "-∞" => -W_INF,
                    other => return Err(StoreError::Weights(format!("unrecognized weight {other:?}"))),
                },
            };
        }
        Ok(StrategyVector::new(self.name.clone(), weights))
    }
}

pub fn parse_weights(json: &str) -> Result<StrategyVector, StoreError> {
    let file: WeightsFile = serde_json::from_str(json).map_err(|error| StoreError::Json { line: 1, error })?;
    file.materialize()
}

pub fn weights_to_json(w: &StrategyVector) -> String {
    serde_json::to_string_pretty(&WeightsFile::from_strategy(w)).expect("weights serialize")
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<StrategyVector, StoreError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_weights(&text)
}

pub fn save_weights(path: impl AsRef<Path>, w: &StrategyVector) -> Result<(), StoreError> {
    let path = path.as_ref();
    std::fs::write(path, weights_to_json(w) + "\n").map_err(io_err(path))
}

// ---------------------------------------------------------------- states

/// Serialized game state. The deck order is omitted unless explicitly kept;
/// its contents are implied by the other zones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deck: Option<Vec<Card>>,
    pub deck_size: usize,
    pub hands: [Hand; NUM_PLAYERS],
    pub fireworks: [u8; NUM_COLORS],
    pub discards: Vec<Card>,
    pub info_tokens: u8,
    pub strikes: u8,
    pub current_player: usize,
    pub turns_after_deck_empty: u8,
    pub turn_number: u32,
    pub strikeout_score_zero: bool,
}

impl StateSnapshot {
    pub fn capture(state: &GameState, include_deck: bool) -> StateSnapshot {
        StateSnapshot {
            deck: include_deck.then(|| state.deck.clone()),
            deck_size: state.deck.len(),
            hands: state.hands.clone(),
            fireworks: state.fireworks,
            discards: state.discards.clone(),
            info_tokens: state.info_tokens,
            strikes: state.strikes,
            current_player: state.current_player,
            turns_after_deck_empty: state.turns_after_deck_empty,
            turn_number: state.turn_number,
            strikeout_score_zero: state.strikeout_score_zero,
        }
    }

    /// Rebuild a state. A hidden deck is filled with the implied cards in canonical order.
    pub fn restore(&self) -> Result<GameState, String> {
        let mut state = GameState {
            deck: Vec::new(),
            hands: self.hands.clone(),
            fireworks: self.fireworks,
            discards: self.discards.clone(),
            info_tokens: self.info_tokens,
            strikes: self.strikes,
            current_player: self.current_player,
            turns_after_deck_empty: self.turns_after_deck_empty,
            turn_number: self.turn_number,
            strikeout_score_zero: self.strikeout_score_zero,
        };
        let implied = state.unaccounted_cards();
        state.deck = match &self.deck {
            Some(deck) => deck.clone(),
            None => implied,
        };
        if state.deck.len() != self.deck_size {
            return Err(format!("deck holds {} cards but deck_size is {}", state.deck.len(), self.deck_size));
        }
        state.check_invariants()?;
        Ok(state)
    }
}

// ---------------------------------------------------------------- decisions

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub schema_version: u32,
    pub state: StateSnapshot,
    pub actor: usize,
    pub action_index: usize,
    pub legal_mask: LegalMask,
    /// 12 rows of 20 entries, in factor order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_matrix: Option<Vec<Vec<f64>>>,
    /// `human` or `agent:<name>`.
    pub source: String,
}

fn matrix_rows(h: &FactorMatrix) -> Vec<Vec<f64>> {
    h.entries.iter().map(|row| row.to_vec()).collect()
}

impl DecisionRecord {
    pub fn capture(
        state: &GameState,
        h: &FactorMatrix,
        action: Action,
        source: impl Into<String>,
        include_deck: bool,
        include_matrix: bool,
    ) -> DecisionRecord {
        DecisionRecord {
            schema_version: SCHEMA_VERSION,
            state: StateSnapshot::capture(state, include_deck),
            actor: state.current_player,
            action_index: action.index(),
            legal_mask: h.legal,
            factor_matrix: include_matrix.then(|| matrix_rows(h)),
            source: source.into(),
        }
    }

    /// Check the record's invariants and return its factor matrix, recomputing it if absent.
    pub fn validate(&self, line: usize) -> Result<FactorMatrix, StoreError> {
        let invalid = |reason: String| StoreError::Invalid { line, reason };
        if self.schema_version != SCHEMA_VERSION {
            return Err(StoreError::Version {
                line,
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        if !self.legal_mask.is_legal(self.action_index) {
            return Err(invalid(format!("action_index {} is not legal", self.action_index)));
        }
        if self.source != "human" && !self.source.starts_with("agent:") {
            return Err(invalid(format!("source {:?} must be \"human\" or \"agent:<name>\"", self.source)));
        }
        let state = self.state.restore().map_err(invalid)?;
        if self.actor != state.current_player {
            return Err(invalid(format!("actor {} is not the player to move", self.actor)));
        }
        let h = factor_matrix(&state, self.actor).map_err(|e: FactorError| invalid(e.to_string()))?;
        if h.legal != self.legal_mask {
            return Err(invalid("legal_mask disagrees with the state".into()));
        }
        if let Some(stored) = &self.factor_matrix {
            if *stored != matrix_rows(&h) {
                return Err(invalid("factor_matrix does not match the state".into()));
            }
        }
        Ok(h)
    }

    pub fn to_decision(&self, h: FactorMatrix) -> Decision {
        Decision {
            h,
            action: self.action_index,
            source: self.source.clone(),
        }
    }
}

pub fn write_decisions(path: impl AsRef<Path>, records: &[DecisionRecord]) -> Result<usize, StoreError> {
    write_jsonl(path, records)
}

pub fn read_decision_records(path: impl AsRef<Path>) -> Result<Vec<DecisionRecord>, StoreError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    parse_decision_records(BufReader::new(file)).map_err(|e| match e {
        StoreError::Io { error, .. } => io_err(path)(error),
        other => other,
    })
}

pub fn parse_decision_records(reader: impl BufRead) -> Result<Vec<DecisionRecord>, StoreError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|error| StoreError::Io {
            path: "<reader>".into(),
            error,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|error| StoreError::Json { line: line_no, error })?;
        if let Some(found) = value.get("schema_version").and_then(|v| v.as_u64()) {
            if found != SCHEMA_VERSION as u64 {
                return Err(StoreError::Version {
                    line: line_no,
                    found: found as u32,
                    expected: SCHEMA_VERSION,
                });
            }
        }
        let record: DecisionRecord =
            serde_json::from_value(value).map_err(|error| StoreError::Json { line: line_no, error })?;
        out.push(record);
    }
    Ok(out)
}

/// Validate records and assemble the in-memory decision set.
pub fn records_to_decisions(records: &[DecisionRecord]) -> Result<DecisionSet, StoreError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| r.validate(i + 1).map(|h| r.to_decision(h)))
        .collect()
}

pub fn read_decisions(path: impl AsRef<Path>) -> Result<DecisionSet, StoreError> {
    records_to_decisions(&read_decision_records(path)?)
}

// ---------------------------------------------------------------- JSONL

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<usize, StoreError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|error| StoreError::Json { line: 0, error })?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(items.len())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>, StoreError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|error| StoreError::Json { line: i + 1, error })?);
    }
    Ok(out)
}
