//! Catalog properties: matchmaking equals the linear-scan oracle, the index
//! stays coherent under churn, results are deterministic, and readers never
//! observe half-published state.

use bazaar_core::asset::{parse_descriptor, serialize_descriptor, AssetDescriptor, SigType};
use bazaar_core::catalog::{aggregate, tokenize, MatchWeights, Marketplace, QualityBound, Request};
use bazaar_core::money::Money;
use bazaar_core::testkit;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::{Arc, RwLock};

fn corpus(seed: u64, n: usize) -> Vec<AssetDescriptor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| testkit::random_descriptor(&mut rng, i)).collect()
}

fn random_request(rng: &mut ChaCha8Rng) -> Request {
    let goals = ["regression", "classification", "join", "aggregate", "clustering"];
    let cats = ["feature-table", "price-predictor", "label-stream", "report"];
    let mut bounds = Vec::new();
    if rng.random_bool(0.7) {
        bounds.push(QualityBound::max("mae", rng.random_range(500.0..9_000.0)));
    }
    if rng.random_bool(0.3) {
        bounds.push(QualityBound::min("accuracy", rng.random_range(0.5..0.95)));
    }
    Request {
        goal: goals[rng.random_range(0..goals.len())].to_string(),
        required_output: SigType::category(cats[rng.random_range(0..cats.len())]),
        quality_bounds: bounds,
        budget: if rng.random_bool(0.5) {
            Some(Money::from_micro(rng.random_range(0..20_000_000)))
        } else {
            None
        },
        keywords: if rng.random_bool(0.3) { vec!["tool".to_string()] } else { vec![] },
    }
}

#[test]
fn match_request_equals_the_linear_scan_oracle() {
    for seed in 0..20 {
        let descriptors = corpus(seed, 200);
        let mut market = Marketplace::new("m");
        for d in &descriptors {
            market.publish(d.clone()).unwrap();
        }
        let idx = market.to_index();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xaaaa);
        for _ in 0..10 {
            let request = random_request(&mut rng);
            let got = idx.match_request(&request, MatchWeights::default());
            let want = testkit::linear_scan_match(&descriptors, &request, MatchWeights::default());
            let got_pairs: Vec<(String, f64)> =
                got.entries.iter().map(|e| (e.candidate.key(), e.score)).collect();
            assert_eq!(got_pairs, want, "seed {seed}, request {request:?}");
        }
    }
}

#[test]
fn match_results_are_deterministic() {
    let descriptors = corpus(3, 150);
    let mut market = Marketplace::new("m");
    for d in descriptors {
        market.publish(d).unwrap();
    }
    let idx = market.to_index();
    let request = Request {
        goal: "regression".into(),
        required_output: SigType::category("price-predictor"),
        quality_bounds: vec![QualityBound::max("mae", 5000.0)],
        budget: None,
        keywords: vec![],
    };
    let a = idx.match_request(&request, MatchWeights::default());
    let b = idx.match_request(&request, MatchWeights::default());
    let keys = |r: &bazaar_core::catalog::MatchResult| {
        r.entries.iter().map(|e| (e.candidate.key(), e.score)).collect::<Vec<_>>()
    };
    assert_eq!(keys(&a), keys(&b));
}

#[test]
fn index_stays_coherent_under_publish_retract_churn() {
    let descriptors = corpus(7, 200);
    let mut market = Marketplace::new("m");
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut live = Vec::new();
    for d in descriptors {
        market.publish(d.clone()).unwrap();
        live.push(d.id.clone());
        if rng.random_bool(0.3) && !live.is_empty() {
            let idx = rng.random_range(0..live.len());
            let id = live.swap_remove(idx);
            market.retract(&id).unwrap();
        }
    }
    assert_eq!(market.len(), live.len());

    // Every indexed id resolves, every live asset is reachable from both
    // indexes, and signature groups are exactly the equality classes.
    let index = market.index();
    for ids in index.by_signature.values().chain(index.by_keyword.values()) {
        for id in ids {
            assert!(market.get(id).is_some(), "dangling index entry {id}");
        }
    }
    for d in market.descriptors().collect::<Vec<_>>() {
        let sig = bazaar_core::asset::canonical_signature(&d.signature);
        assert!(index.by_signature[&sig].contains(&d.id));
        for token in tokenize(d) {
            assert!(index.by_keyword[&token].contains(&d.id));
        }
    }

    // Pairwise signature comparison agrees with the equivalence classes.
    let idx = market.to_index();
    let all: Vec<&AssetDescriptor> = market.descriptors().collect();
    for d in &all {
        let class = idx.equivalents(&d.id).unwrap();
        for other in &all {
            let same = bazaar_core::asset::canonical_signature(&d.signature)
                == bazaar_core::asset::canonical_signature(&other.signature);
            assert_eq!(class.contains(&other.id), same, "{} vs {}", d.id, other.id);
        }
    }
}

#[test]
fn bulk_load_indexes_every_asset() {
    let descriptors = corpus(11, 1000);
    let mut market = Marketplace::new("bulk");
    for d in descriptors {
        market.publish(d).unwrap();
    }
    assert_eq!(market.len(), 1000);
    let indexed: std::collections::BTreeSet<_> =
        market.index().by_signature.values().flatten().cloned().collect();
    assert_eq!(indexed.len(), 1000);
    let idx = market.to_index();
    assert_eq!(idx.len(), 1000);
}

#[test]
fn readers_never_observe_half_published_assets() {
    // Writers take the lock exclusively, so any asset a reader can discover
    // must already be fully indexed.
    let market = Arc::new(RwLock::new(Marketplace::new("shared")));
    let writer = {
        let market = Arc::clone(&market);
        std::thread::spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for i in 0..500 {
                let d = testkit::random_descriptor(&mut rng, i);
                market.write().unwrap().publish(d).unwrap();
            }
        })
    };
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let market = Arc::clone(&market);
            std::thread::spawn(move || {
                for _ in 0..200 {
                    let guard = market.read().unwrap();
                    let index = guard.index();
                    for ids in index.by_signature.values() {
                        for id in ids {
                            assert!(guard.get(id).is_some(), "half-indexed asset observed");
                        }
                    }
                    let n_sig: usize = index.by_signature.values().map(|s| s.len()).sum();
                    assert_eq!(n_sig, guard.len());
                }
            })
        })
        .collect();
    writer.join().unwrap();
    for r in readers {
        r.join().unwrap();
    }
    assert_eq!(market.read().unwrap().len(), 500);
}

#[test]
fn aggregate_of_singleton_equals_own_index() {
    let descriptors = corpus(13, 50);
    let mut market = Marketplace::new("solo");
    for d in descriptors {
        market.publish(d).unwrap();
    }
    let own = market.to_index();
    let agg = aggregate(&[&market]).unwrap();
    assert_eq!(own.core(), agg.core());
    assert_eq!(own.len(), agg.len());
}

#[test]
fn generated_descriptor_corpus_round_trips_byte_stably() {
    // 25 random descriptors: parse ∘ serialize is the identity and a second
    // serialization is byte-identical.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..25 {
        let d = testkit::random_descriptor(&mut rng, i);
        let bytes = serialize_descriptor(&d);
        let parsed = parse_descriptor(&bytes).unwrap_or_else(|e| panic!("descriptor {i}: {e}"));
        assert_eq!(parsed, d, "descriptor {i}");
        assert_eq!(serialize_descriptor(&parsed), bytes, "descriptor {i}");
    }
}
