//! Recover a strategy from logged decisions by maximizing agreement.
//!
//! The log comes from the human-like profile; the search starts from a copy
//! whose play-playable weight is off by four.

use hanabi_instruct::factors::FactorId;
use hanabi_instruct::harness::{generate_decisions, perturbed};
use hanabi_instruct::training::{train, Humanness, SubsetSchedule, TrainOptions};
use hanabi_instruct::{agreement, Profile};

fn main() -> anyhow::Result<()> {
    let truth = Profile::HumanLike.strategy();
    let decisions = generate_decisions(&truth, 300, 9)?;
    let start = perturbed(&truth, FactorId::PlayPlayable, 4.0);
    let schedule = [SubsetSchedule {
        subset: [
            FactorId::PlayPlayable,
            FactorId::DiscardNonEndangered,
            FactorId::PlaySingledOut,
            FactorId::ClueSinglesPlayable,
        ],
        step: [2.0; 4],
    }];
    let outcome = train(&start, &schedule, &Humanness { decisions: &decisions }, TrainOptions::default())?;
    println!("agreement {:.3} -> {:.3}", agreement(&start, &decisions), agreement(&outcome.weights, &decisions));
    println!(
        "play-playable {} -> {} (logged agent uses {})",
        start.get(FactorId::PlayPlayable),
        outcome.weights.get(FactorId::PlayPlayable),
        truth.get(FactorId::PlayPlayable)
    );
    Ok(())
}
