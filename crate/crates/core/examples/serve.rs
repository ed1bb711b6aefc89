//! Game and instruction service on 127.0.0.1:8080.
//!
//! curl -X POST localhost:8080/sessions -H 'content-type: application/json' -d '{"agent_profile":"self-play"}'

use hanabi_instruct::service::{serve, ServiceConfig};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    serve("127.0.0.1:8080".parse()?, ServiceConfig::default()).await?;
    Ok(())
}
