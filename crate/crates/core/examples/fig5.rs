//! Emulate the self-play agent from a copy with an inflated discard weight.
//!
//! cargo run --release --example fig5 -- [out.csv]

use hanabi_instruct::harness::{fig5, Fig5Config};

fn main() -> anyhow::Result<()> {
    let report = fig5(&Fig5Config::default())?;
    for step in report.trajectory.iter().step_by(5) {
        println!("batch {:2} agreement {:.3} |dw| {:.3}", step.batch, step.agreement, step.dw_norm);
    }
    println!(
        "agreement {:.3} -> {:.3}, discard weight {:.3} -> {:.3}",
        report.agreement_start, report.agreement_end, report.discard_start, report.discard_end
    );
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, report.to_csv())?;
        println!("trajectory written to {path}");
    }
    Ok(())
}
