//! Self-play score distribution for each shipped profile.
//!
//! cargo run --release --example selfplay -- [games] [seed]

use hanabi_instruct::training::selfplay_eval;
use hanabi_instruct::Profile;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let games: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    for profile in Profile::ALL {
        let w = profile.strategy();
        let stats = selfplay_eval(&w, &w, games, seed)?;
        println!("{:<20} mean {:6.3}  sd {:6.3}  over {} games", profile.key(), stats.mean, stats.stddev, stats.games);
    }
    Ok(())
}
