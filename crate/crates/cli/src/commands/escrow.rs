//! `escrow simulate`: drive a whole escrow session over the simulated
//! network and print the transcript.

use crate::{Ctx, Failure, Outcome};
use bazaar_core::billing::InMemoryLedger;
use bazaar_core::escrow::{run_session, SimNetConfig};
use bazaar_core::money::Money;
use clap::{Args, Subcommand};

#[derive(Debug, Subcommand)]
pub enum EscrowAction {
    /// Transfer generated bytes through the escrow protocol.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Payload size in bytes.
    #[arg(long)]
    bytes: u64,
    /// Chunk size in bytes.
    #[arg(long)]
    chunk: u64,
    /// Price per chunk (defaults to $0.10).
    #[arg(long)]
    price: Option<String>,
    /// Probability a message transmission is lost.
    #[arg(long, default_value_t = 0.0)]
    drop: f64,
    /// Probability a message transmission is duplicated.
    #[arg(long, default_value_t = 0.0)]
    dup: f64,
    /// Maximum extra delivery delay, steps.
    #[arg(long, default_value_t = 1)]
    delay: u32,
    /// Retransmissions before giving up.
    #[arg(long, default_value_t = 10)]
    retries: u32,
    /// Corrupt every delivery of this chunk's ciphertext.
    #[arg(long)]
    tamper: Option<u32>,
}

pub fn run(ctx: &Ctx, action: EscrowAction) -> Result<Outcome, Failure> {
    let EscrowAction::Simulate(args) = action;
    if args.bytes == 0 || args.chunk == 0 {
        return Err(Failure::usage("--bytes and --chunk must be positive"));
    }
    let price = match &args.price {
        Some(text) => text.parse::<Money>().map_err(|e| Failure::usage(e.to_string()))?,
        None => Money::from_micro(100_000),
    };
    let net = SimNetConfig {
        seed: ctx.seed,
        drop_rate: args.drop,
        dup_rate: args.dup,
        max_delay_steps: args.delay,
        max_retries: args.retries,
        tamper_chunk: args.tamper,
    };
    net.check().map_err(Failure::usage)?;

    // Deterministic payload derived from the seed.
    let data: Vec<u8> =
        (0..args.bytes).map(|i| ((i.wrapping_mul(131) ^ ctx.seed) % 251) as u8).collect();
    let mut ledger = InMemoryLedger::new();
    let transcript = run_session(&data, args.chunk as usize, price, &net, &mut ledger);

    let mut out = transcript.to_text();
    out.push_str(&format!(
        "ledger: sender={} receiver={}\n",
        ledger.balance("sender"),
        ledger.balance("receiver")
    ));
    Outcome::ok(out)
}
