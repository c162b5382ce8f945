use std::sync::Arc;

use ebc_core::chain::{sample_block_path, PathOptions};
use ebc_core::evolving::{EventLog, EventModel, StreamingLog};
use ebc_core::funcspec::parse_fspec;
use ebc_core::replicate::replicate_map;
use ebc_core::{Alpha, RatesContext};

fn ctx() -> RatesContext {
    RatesContext::new(Alpha::new(1.5).unwrap())
}

#[test]
fn replicates_are_deterministic_per_seed() {
    let c = ctx();
    let run = |seed| replicate_map(seed, 64, |_, rng| sample_block_path(&c, 500, rng, PathOptions::BARE).unwrap().tau());
    assert_eq!(run(7), run(7));
    assert_ne!(run(7), run(8));
}

#[test]
fn event_log_round_trips_through_both_formats() {
    let mut log = EventLog::new(&ctx(), 60, 11).unwrap();
    log.extend(-2.0, 0.5).unwrap();
    let mut bytes = Vec::new();
    log.write_binary(&mut bytes).unwrap();
    let back = EventLog::read_binary(bytes.as_slice()).unwrap();
    assert_eq!(back.times(), log.times());
    assert_eq!(back.events().collect::<Vec<_>>(), log.events().collect::<Vec<_>>());
    let json = EventLog::from_json(&log.to_json().unwrap()).unwrap();
    assert_eq!(json.times(), log.times());
    bytes[0] = b'X';
    assert!(EventLog::read_binary(bytes.as_slice()).is_err());
}

#[test]
fn extracted_trees_are_valid_block_paths() {
    let model = EventModel::new(&ctx(), 80).unwrap();
    for seed in 0..20 {
        let mut log = StreamingLog::new(Arc::clone(&model), seed);
        let trace = log.extract_tree(0.0).unwrap();
        assert!(trace.is_complete());
        trace.to_block_path().validate().unwrap();
    }
}

#[test]
fn functional_series_is_reproducible() {
    let model = EventModel::new(&ctx(), 200).unwrap();
    let f = parse_fspec("tau", Alpha::new(1.5).unwrap()).unwrap();
    let series = |seed| StreamingLog::new(Arc::clone(&model), seed).functional_series(&[0.0, 0.5, 1.0], &f).unwrap();
    let a = series(3);
    assert_eq!(a.len(), 3);
    assert_eq!(a, series(3));
}

#[test]
fn static_tau_mean_for_three_blocks() {
    // from three blocks the chain ends at once with probability 0.1
    let c = ctx();
    let reps = 40_000;
    let taus = replicate_map(5, reps, |_, rng| sample_block_path(&c, 3, rng, PathOptions::BARE).unwrap().tau());
    let mean = taus.iter().sum::<usize>() as f64 / reps as f64;
    assert!((mean - 1.9).abs() < 0.01, "mean {mean}");
}
