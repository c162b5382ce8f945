//! Runs every acceptance criterion and prints one verdict line each.
//!
//! Select criteria with `EBC_CRITERIA=4,5`; override the seed with `EBC_SEED`.

use ebc_suite::{Runner, MASTER_SEED};

fn main() {
    let only: Vec<u8> = std::env::var("EBC_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
        .unwrap_or_default();
    let seed = std::env::var("EBC_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(MASTER_SEED);
    println!("acceptance suite, seed {seed}");
    let runner = Runner::new(seed);
    let outcomes = runner.run(&only, |o| println!("{}", o.line()));
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let documented = outcomes.iter().filter(|o| !o.pass && o.shortfall.is_some()).count();
    let unexpected = outcomes.len() - passed - documented;
    println!("acceptance: {passed} passed, {documented} documented shortfall, {unexpected} failed, of {}", outcomes.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
