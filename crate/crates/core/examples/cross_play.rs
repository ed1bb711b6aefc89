//! Each shipped profile paired with the human-like profile.

use hanabi_instruct::harness::cross_play;

fn main() -> anyhow::Result<()> {
    let report = cross_play(500, 0)?;
    for p in &report.pairings {
        println!("{:<20} with {}: mean {:.3}", p.agent, p.partner, p.stats.mean);
    }
    println!("best {}{}", report.best_agent, if report.deviation { " (differs from expected)" } else { "" });
    Ok(())
}
