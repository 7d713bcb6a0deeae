//! Escrow protocol properties over seed sweeps: liveness under loss, safety
//! ordering, and determinism.

use bazaar_core::billing::InMemoryLedger;
use bazaar_core::escrow::{run_session, SimNetConfig};
use bazaar_core::money::Money;
use bazaar_core::testkit;

fn payload(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i * 131 % 251) as u8).collect()
}

#[test]
fn sessions_complete_across_a_seed_sweep_under_loss() {
    for seed in 0..40 {
        let net = SimNetConfig {
            seed,
            drop_rate: 0.2,
            dup_rate: 0.1,
            max_delay_steps: 2,
            max_retries: 10,
            tamper_chunk: None,
        };
        let mut ledger = InMemoryLedger::new();
        let t = run_session(&payload(9_000), 1_500, Money::from_micro(2_000), &net, &mut ledger);
        assert!(t.completed(), "seed {seed}:\n{}", t.to_text());
        assert_eq!(t.recovered.as_deref(), Some(&payload(9_000)[..]), "seed {seed}");
        testkit::check_atomicity(&t).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        testkit::check_mediator_blindness(&t).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        // Every chunk paid exactly once: the ledger moved exactly price × chunks.
        assert_eq!(
            ledger.balance("sender"),
            Money::from_micro(2_000 * t.chunks as i64),
            "seed {seed}"
        );
    }
}

#[test]
fn tampering_never_earns_payment_or_key() {
    for seed in 100..120 {
        let net = SimNetConfig {
            seed,
            drop_rate: 0.1,
            max_retries: 10,
            tamper_chunk: Some(1),
            ..Default::default()
        };
        let mut ledger = InMemoryLedger::new();
        let t = run_session(&payload(6_000), 2_000, Money::from_micro(1_000), &net, &mut ledger);
        assert!(!t.completed(), "seed {seed}");
        testkit::check_atomicity(&t).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let (paid, released) = testkit::chunk_paid_and_released(&t, 1);
        assert!(!paid, "seed {seed}: tampered chunk paid\n{}", t.to_text());
        assert!(!released, "seed {seed}: tampered chunk key released\n{}", t.to_text());
    }
}

#[test]
fn identical_configs_replay_identically() {
    for seed in [0u64, 7, 42, 1234] {
        let net = SimNetConfig {
            seed,
            drop_rate: 0.15,
            dup_rate: 0.15,
            max_delay_steps: 3,
            ..Default::default()
        };
        let run = |net: &SimNetConfig| {
            let mut ledger = InMemoryLedger::new();
            run_session(&payload(4_000), 900, Money::from_micro(500), net, &mut ledger).to_text()
        };
        assert_eq!(run(&net), run(&net), "seed {seed}");
    }
}

