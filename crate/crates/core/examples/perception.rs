//! A misread factor expressed as an equivalent strategy change.
//!
//! The player overestimates how playable every card is by 0.2; the
//! equivalent change in weights reproduces the same output shift as closely
//! as the state allows.

use hanabi_instruct::engine::{GameConfig, GameState, NUM_ACTIONS};
use hanabi_instruct::factors::{factor_matrix, FactorId, NUM_FACTORS};
use hanabi_instruct::instructor::{perception_equivalent_dw, PerceptionDelta};
use hanabi_instruct::{expected_rewards, Profile};

fn main() -> anyhow::Result<()> {
    let state = GameState::new(GameConfig::with_seed(4));
    let h = factor_matrix(&state, 0)?;
    let w = Profile::HumanLike.strategy();
    let mut dh = [[0.0; NUM_ACTIONS]; NUM_FACTORS];
    for a in h.legal.indices().filter(|&a| a < 5) {
        dh[FactorId::PlayPlayable.index()][a] = 0.2;
    }
    let delta = perception_equivalent_dw(&h, &PerceptionDelta { dh }, &w);
    let y = expected_rewards(&h, &w).y;
    let y2 = expected_rewards(&h, &w.plus(&delta.dw)).y;
    for f in delta.support() {
        println!("{:<32} {:+.4}", f.key(), delta.dw[f.index()]);
    }
    for a in h.legal.indices() {
        println!("action {a:2}: y {:7.3} -> {:7.3}", y[a], y2[a]);
    }
    Ok(())
}
