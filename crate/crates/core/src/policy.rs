//! Linear strategy agent: `y = Hᵀw`, then argmax over legal actions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Action, GameState, LegalMask, NUM_ACTIONS};
use crate::factors::{factor_matrix, FactorError, FactorId, FactorMatrix, NUM_FACTORS};
use crate::instructor::DecisionSet;
use crate::store;

/// Finite stand-in for an infinite weight.
pub const W_INF: f64 = 1.0e4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyVector {
    pub name: String,
    pub weights: [f64; NUM_FACTORS],
}

impl StrategyVector {
    pub fn new(name: impl Into<String>, weights: [f64; NUM_FACTORS]) -> StrategyVector {
        StrategyVector {
            name: name.into(),
            weights,
        }
    }

    pub fn zeros(name: impl Into<String>) -> StrategyVector {
        StrategyVector::new(name, [0.0; NUM_FACTORS])
    }

    pub fn get(&self, factor: FactorId) -> f64 {
        self.weights[factor.index()]
    }

    pub fn with(mut self, factor: FactorId, value: f64) -> StrategyVector {
        self.weights[factor.index()] = value;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> StrategyVector {
        self.name = name.into();
        self
    }

    pub fn plus(&self, delta: &[f64; NUM_FACTORS]) -> StrategyVector {
        let weights = std::array::from_fn(|i| self.weights[i] + delta[i]);
        StrategyVector::new(self.name.clone(), weights)
    }

    pub fn scaled(&self, c: f64) -> StrategyVector {
        StrategyVector::new(self.name.clone(), self.weights.map(|w| w * c))
    }
}

/// The three shipped weight profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    HumanLike,
    HumanComplementary,
    SelfPlay,
}

#[derive(Debug, Error)]
#[error("unknown profile {0:?} (expected human-like, human-complementary or self-play)")]
pub struct UnknownProfile(pub String);

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::HumanLike, Profile::HumanComplementary, Profile::SelfPlay];

    pub fn key(self) -> &'static str {
        match self {
            Profile::HumanLike => "human-like",
            Profile::HumanComplementary => "human-complementary",
            Profile::SelfPlay => "self-play",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Profile::HumanLike => include_str!("../profiles/human-like.json"),
            Profile::HumanComplementary => include_str!("../profiles/human-complementary.json"),
            Profile::SelfPlay => include_str!("../profiles/self-play.json"),
        }
    }

    pub fn strategy(self) -> StrategyVector {
        store::parse_weights(self.source()).expect("shipped profiles are valid weight files")
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Profile {
    type Err = UnknownProfile;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "human-like" | "humanlike" => Ok(Profile::HumanLike),
            "human-complementary" | "human-compl" | "complementary" => Ok(Profile::HumanComplementary),
            "self-play" | "selfplay" => Ok(Profile::SelfPlay),
            _ => Err(UnknownProfile(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputVector {
    pub y: [f64; NUM_ACTIONS],
    pub legal: LegalMask,
}

impl OutputVector {
    pub fn argmax(&self) -> Option<usize> {
        argmax_legal(&self.y, &self.legal)
    }
}

pub fn expected_rewards(h: &FactorMatrix, w: &StrategyVector) -> OutputVector {
    let mut y = [0.0; NUM_ACTIONS];
    for (f, row) in h.entries.iter().enumerate() {
        let wf = w.weights[f];
        for (yi, &hf) in y.iter_mut().zip(row) {
            *yi += hf * wf;
        }
    }
    OutputVector { y, legal: h.legal }
}

/// Highest legal entry; ties go to the lowest index.
pub fn argmax_legal(y: &[f64; NUM_ACTIONS], legal: &LegalMask) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in legal.indices() {
        match best {
            Some(b) if y[i] <= y[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Factors(#[from] FactorError),
    #[error("no legal action available")]
    NoLegalAction,
}

pub fn choose_action(state: &GameState, w: &StrategyVector) -> Result<Action, PolicyError> {
    let h = factor_matrix(state, state.current_player)?;
    let y = expected_rewards(&h, w);
    y.argmax()
        .and_then(Action::from_index)
        .ok_or(PolicyError::NoLegalAction)
}

/// Fraction of recorded decisions this strategy reproduces.
pub fn agreement(w: &StrategyVector, decisions: &DecisionSet) -> f64 {
    if decisions.is_empty() {
        return 0.0;
    }
    let hits = decisions
        .iter()
        .filter(|d| expected_rewards(&d.h, w).argmax() == Some(d.action))
        .count();
    hits as f64 / decisions.len() as f64
}
