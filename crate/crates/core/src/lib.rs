//! Two-player Hanabi with a linear agent over human-preferred factors, plus
//! tools to fit, compare and explain strategy vectors.
//!
//! The pipeline: [`engine`] plays the game, [`belief`] tracks what a player
//! knows about their own cards, [`factors`] turns a state into the 12×20
//! factor matrix `H`, [`policy`] picks `argmax Hᵀw`, [`training`] searches
//! weights with factorial designs, and [`instructor`] explains the gap
//! between two strategies as a short list of weight changes.

pub mod belief;
pub mod engine;
pub mod factors;
pub mod harness;
pub mod instructor;
pub mod linalg;
pub mod policy;
pub mod service;
pub mod store;
pub mod training;

pub use engine::{Action, ActionKind, Card, Color, GameConfig, GameState, LegalMask};
pub use factors::{factor_matrix, FactorId, FactorMatrix, NUM_FACTORS};
pub use instructor::{instruct, Decision, DecisionSet, InstructionResult, StrategyDelta};
pub use policy::{agreement, choose_action, expected_rewards, Profile, StrategyVector, W_INF};
