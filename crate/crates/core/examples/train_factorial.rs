//! Factorial coordinate search on self-play score, one subset of four factors.
//!
//! cargo run --release --example train_factorial

use hanabi_instruct::training::{default_schedule, train, SelfPlayScore, TrainOptions};
use hanabi_instruct::Profile;

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let base = Profile::HumanLike.strategy();
    let schedule = default_schedule(1.0);
    let objective = SelfPlayScore { games: 100, seed: 0 };
    let outcome = train(&base, &schedule[..1], &objective, TrainOptions { max_epochs: 5 })?;
    for epoch in &outcome.epochs {
        println!("epoch {} best {:.3} winner {:?}", epoch.epoch, epoch.best_score, epoch.winner_levels);
    }
    println!("weights {:?}", outcome.weights.weights);
    Ok(())
}
