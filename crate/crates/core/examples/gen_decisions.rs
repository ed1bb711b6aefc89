//! Write a decision log from an agent's self-play and read it back.
//!
//! cargo run --release --example gen_decisions -- [out.jsonl]

use hanabi_instruct::harness::generate_records;
use hanabi_instruct::store;
use hanabi_instruct::Profile;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "human-like.jsonl".into());
    let records = generate_records(&Profile::HumanLike.strategy(), 400, 0, false, true)?;
    store::write_decisions(&out, &records)?;
    let decisions = store::read_decisions(&out)?;
    println!("wrote and validated {} decisions to {out}", decisions.len());
    Ok(())
}
