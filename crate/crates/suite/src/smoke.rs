//! Quick structural checks at n = 100 with 200 replicates.

use std::sync::Arc;

use ebc_core::chain::{functional_external_length, functional_j, functional_total_length, sample_block_path, PathOptions};
use ebc_core::evolving::{EventLog, EventModel, StreamingLog};
use ebc_core::funcspec::parse_fspec;
use ebc_core::replicate::try_replicate_map;
use ebc_core::stable::cf_stable;
use ebc_core::verify::TestReport;
use ebc_core::{Alpha, RatesContext, Result, StableParams};
use rand::Rng;

use crate::oracle;

const N: usize = 100;
const REPLICATES: usize = 200;

pub fn smoke(seed: u64) -> Result<Vec<TestReport>> {
    let alpha = Alpha::new(1.5)?;
    let ctx = RatesContext::new(alpha);
    let mut out = Vec::new();

    let pmf_err = (2..=N).map(|j| ctx.merger_size_pmf(j).map(|p| (p.iter().sum::<f64>() - 1.0).abs())).try_fold(0.0f64, |m, e| e.map(|e| m.max(e)))?;
    out.push(TestReport::at_most("merger size pmf sums to one", pmf_err, 1e-10));

    let f = parse_fspec("x^-0.25", alpha)?;
    let g = parse_fspec("1", alpha)?;
    let h = f.scaled(2.0).plus(&g.scaled(-0.5))?;
    let per_path = try_replicate_map(seed, REPLICATES, |_, rng| {
        let p = sample_block_path(&ctx, N, rng, PathOptions::FULL)?;
        p.validate()?;
        let ordered = functional_external_length(&p)? <= functional_total_length(&p)? + 1e-12;
        let lin = (functional_j(&p, &h) - 2.0 * functional_j(&p, &f) + 0.5 * functional_j(&p, &g)).abs();
        Ok((ordered, lin, p.tau()))
    })?;
    let unordered = per_path.iter().filter(|x| !x.0).count();
    out.push(TestReport::at_most("paths with external length above total length", unordered as f64, 0.0));
    let lin = per_path.iter().map(|x| x.1).fold(0.0, f64::max);
    out.push(TestReport::at_most("linearity of J in f", lin, 1e-10));

    let again = try_replicate_map(seed, REPLICATES, |_, rng| Ok(sample_block_path(&ctx, N, rng, PathOptions::FULL)?.tau()))?;
    let differing = per_path.iter().zip(&again).filter(|(a, b)| a.2 != **b).count();
    out.push(TestReport::at_most("replicates differing between identical runs", differing as f64, 0.0));

    let model = EventModel::new(&ctx, N)?;
    let incomplete = try_replicate_map(seed ^ 1, REPLICATES, |_, rng| {
        let mut log = StreamingLog::new(Arc::clone(&model), rng.random());
        let trace = log.extract_tree(0.0)?;
        Ok(!(trace.is_complete() && trace.to_block_path().validate().is_ok()))
    })?;
    out.push(TestReport::at_most("evolving extractions that are incomplete or invalid", incomplete.iter().filter(|&&b| b).count() as f64, 0.0));

    let mut log = EventLog::new(&ctx, N, seed)?;
    let first = log.extract_tree(0.0)?;
    let mut bytes = Vec::new();
    log.write_binary(&mut bytes)?;
    let mut back = EventLog::read_binary(bytes.as_slice())?;
    let same = back.extract_tree(0.0)?.blocks == first.blocks;
    out.push(TestReport::at_most("event log replay mismatches", if same { 0.0 } else { 1.0 }, 0.0));

    let law = StableParams::new(alpha, 0.7, -0.4)?;
    let herm = [0.3, 1.0, 2.5].iter().map(|&t| (cf_stable(&law, t) - cf_stable(&law, -t).conj()).norm()).fold(0.0, f64::max);
    out.push(TestReport::at_most("stable CF is Hermitian", herm, 1e-12));

    let mut sigma_err: f64 = 0.0;
    for (example, preset) in [(1, "tau"), (2, "length"), (3, "extlength"), (4, "ratio-linearization")] {
        let (s, _) = parse_fspec(preset, alpha)?.sigma_beta()?;
        let closed = oracle::example_sigma(example, 1.5);
        sigma_err = sigma_err.max((s - closed).abs() / closed);
    }
    out.push(TestReport::at_most("example scales against closed forms", sigma_err, 1e-8));
    Ok(out)
}
