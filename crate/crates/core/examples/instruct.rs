//! Instruction for a player who discards too eagerly, measured against the
//! human-like profile.

use hanabi_instruct::factors::FactorId;
use hanabi_instruct::harness::{generate_decisions, perturbed};
use hanabi_instruct::instructor::DEFAULT_EPSILON;
use hanabi_instruct::{agreement, instruct, Profile};

fn main() -> anyhow::Result<()> {
    let ideal = Profile::HumanLike.strategy();
    let player = perturbed(&ideal, FactorId::DiscardNonEndangered, 3.0);
    let decisions = generate_decisions(&player, 400, 3)?;
    let alpha = agreement(&ideal, &decisions);
    let result = instruct(&decisions, &ideal, alpha, DEFAULT_EPSILON)?;
    println!("q without change {alpha:.3}, dense fit {:.3}", result.q_dense);
    print!("{}", result.to_text());
    Ok(())
}
