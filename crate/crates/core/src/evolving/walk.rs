//! Backward class-merging walk over an event sequence.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EventBuffer, EventLog, EventModel};
use crate::chain::{j_from_blocks, BlockPath};
use crate::error::{Error, Result};
use crate::funcspec::FunctionalSpec;

const NONE: u32 = u32::MAX;

/// Genealogy of the population read backwards from `query_time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenealogyTrace {
    pub query_time: f64,
    pub n: usize,
    /// Depths `r_1 < r_2 < ...` of the effective mergers.
    pub depths: Vec<f64>,
    /// Block count before the first merger and after each merger.
    pub blocks: Vec<usize>,
    /// Singleton lineages before the first merger and after each merger.
    pub singletons: Vec<usize>,
    /// Depth at which each leaf first coalesces; NaN while still unmerged.
    pub external: Vec<f64>,
}

impl GenealogyTrace {
    pub fn tau(&self) -> usize {
        self.depths.len()
    }

    /// Whether the walk reached the most recent common ancestor.
    pub fn is_complete(&self) -> bool {
        self.blocks.last() == Some(&1)
    }

    pub fn mrca_depth(&self) -> Option<f64> {
        self.is_complete().then(|| *self.depths.last().expect("complete trace has mergers"))
    }

    /// Block count at reverse time `r`.
    pub fn blocks_at_depth(&self, r: f64) -> usize {
        let merged = self.depths.partition_point(|&d| d <= r);
        self.blocks[merged]
    }

    /// Sum of the external branch lengths.
    pub fn external_length(&self) -> f64 {
        self.external.iter().sum()
    }

    pub fn to_block_path(&self) -> BlockPath {
        let mut gaps = Vec::with_capacity(self.depths.len());
        let mut prev = 0.0;
        for &d in &self.depths {
            gaps.push(d - prev);
            prev = d;
        }
        BlockPath {
            n: self.n,
            blocks: self.blocks.clone(),
            holding_times: Some(gaps),
            singletons: Some(self.singletons.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct MergeRecord {
    time: f64,
    start: usize,
    end: usize,
    into: u32,
}

struct Walker {
    n: usize,
    t_query: f64,
    class_of: Vec<u32>,
    next_id: u32,
    blocks: usize,
    singles: usize,
    trace: GenealogyTrace,
    records: Option<(Vec<MergeRecord>, Vec<u32>)>,
    scratch: Vec<u32>,
}

impl Walker {
    fn new(n: usize, t_query: f64, record: bool) -> Self {
        Self {
            n,
            t_query,
            class_of: (0..n as u32).collect(),
            next_id: n as u32,
            blocks: n,
            singles: n,
            trace: GenealogyTrace {
                query_time: t_query,
                n,
                depths: Vec::new(),
                blocks: vec![n],
                singletons: vec![n],
                external: vec![f64::NAN; n],
            },
            records: record.then(|| (Vec::new(), Vec::new())),
            scratch: Vec::with_capacity(16),
        }
    }

    fn done(&self) -> bool {
        self.blocks == 1
    }

    /// Applies one event; returns true once a single class remains.
    fn apply(&mut self, t: f64, participants: &[u32], parent: u32) -> bool {
        self.scratch.clear();
        for &l in participants {
            if self.class_of[l as usize] != NONE {
                self.scratch.push(l);
            }
        }
        match self.scratch.len() {
            0 => {}
            1 => {
                let l = self.scratch[0];
                if l != parent {
                    self.class_of[parent as usize] = self.class_of[l as usize];
                    self.class_of[l as usize] = NONE;
                }
            }
            m => {
                let depth = self.t_query - t;
                let into = self.next_id;
                self.next_id += 1;
                let start = self.records.as_ref().map_or(0, |r| r.1.len());
                for &l in &self.scratch {
                    let c = self.class_of[l as usize];
                    if (c as usize) < self.n {
                        self.trace.external[c as usize] = depth;
                        self.singles -= 1;
                    }
                    if let Some((_, members)) = self.records.as_mut() {
                        members.push(c);
                    }
                    self.class_of[l as usize] = NONE;
                }
                self.class_of[parent as usize] = into;
                self.blocks -= m - 1;
                if let Some((recs, members)) = self.records.as_mut() {
                    recs.push(MergeRecord { time: t, start, end: members.len(), into });
                }
                self.trace.depths.push(depth);
                self.trace.blocks.push(self.blocks);
                self.trace.singletons.push(self.singles);
            }
        }
        self.done()
    }
}

/// Source of events in decreasing time order.
trait EventFeed {
    fn n(&self) -> usize;

    /// Visits the events with `floor <= t < start` from the latest down,
    /// stopping early once `visit` returns true.
    fn feed(&mut self, start: f64, floor: f64, visit: &mut dyn FnMut(f64, &[u32], u32) -> bool) -> Result<bool>;
}

impl EventFeed for EventLog {
    fn n(&self) -> usize {
        self.model.n
    }

    fn feed(&mut self, start: f64, floor: f64, visit: &mut dyn FnMut(f64, &[u32], u32) -> bool) -> Result<bool> {
        if start > self.t_hi {
            if self.frozen {
                return Err(Error::OutOfWindow { t: start, lo: self.t_lo, hi: self.t_hi });
            }
            let lo = self.t_lo.min(start);
            self.extend(lo, start)?;
        }
        let mut idx = self.events.times.partition_point(|&t| t < start);
        loop {
            while idx > 0 {
                idx -= 1;
                let t = self.events.times[idx];
                if t < floor {
                    return Ok(false);
                }
                if visit(t, self.events.participants(idx), self.events.parents[idx]) {
                    return Ok(true);
                }
            }
            if self.t_lo <= floor {
                return Ok(false);
            }
            if self.frozen {
                return Err(Error::OutOfWindow { t: floor.max(self.t_lo - self.model.cell_len), lo: self.t_lo, hi: self.t_hi });
            }
            let old_lo = self.t_lo;
            let span = (self.t_hi - self.t_lo).max(self.model.time_unit());
            let new_lo = (old_lo - span).max(floor);
            self.extend(new_lo, self.t_hi)?;
            let resume = old_lo.min(start);
            idx = self.events.times.partition_point(|&t| t < resume);
        }
    }
}

/// Event source that regenerates time cells on demand instead of storing
/// the log; realizes the same process as an [`EventLog`] with equal seed.
#[derive(Debug, Clone)]
pub struct StreamingLog {
    model: Arc<EventModel>,
    seed: u64,
    depth_cap: f64,
    cell: EventBuffer,
}

impl StreamingLog {
    pub fn new(model: Arc<EventModel>, seed: u64) -> Self {
        let depth_cap = model.default_depth_cap();
        Self { model, seed, depth_cap, cell: EventBuffer::new() }
    }

    pub fn model(&self) -> &Arc<EventModel> {
        &self.model
    }

    pub fn set_depth_cap(&mut self, cap: f64) {
        self.depth_cap = cap;
    }

    pub fn extract_tree(&mut self, t_query: f64) -> Result<GenealogyTrace> {
        let cap = self.depth_cap;
        walk_full(self, t_query, cap)
    }

    pub fn block_counts_at_depths(&mut self, t_query: f64, depths: &[f64]) -> Result<Vec<usize>> {
        block_counts(self, t_query, depths)
    }

    pub fn functional_series(&mut self, scaled_times: &[f64], f: &FunctionalSpec) -> Result<Vec<f64>> {
        let unit = self.model.time_unit();
        let cap = self.depth_cap;
        series(self, unit, cap, scaled_times, f)
    }
}

impl EventFeed for StreamingLog {
    fn n(&self) -> usize {
        self.model.n
    }

    fn feed(&mut self, start: f64, floor: f64, visit: &mut dyn FnMut(f64, &[u32], u32) -> bool) -> Result<bool> {
        let model = Arc::clone(&self.model);
        let mut c = model.cell_of(start);
        loop {
            self.cell.clear();
            model.generate_cell(self.seed, c, &mut self.cell);
            for i in (0..self.cell.len()).rev() {
                let t = self.cell.times[i];
                if t >= start {
                    continue;
                }
                if t < floor {
                    return Ok(false);
                }
                if visit(t, self.cell.participants(i), self.cell.parents[i]) {
                    return Ok(true);
                }
            }
            if model.cell_start(c) <= floor {
                return Ok(false);
            }
            c -= 1;
        }
    }
}

fn walk_full<F: EventFeed>(feed: &mut F, t_query: f64, cap: f64) -> Result<GenealogyTrace> {
    let mut walker = Walker::new(feed.n(), t_query, false);
    let finished = feed.feed(t_query, t_query - cap, &mut |t, p, parent| walker.apply(t, p, parent))?;
    if !finished {
        return Err(Error::DepthCap { cap });
    }
    Ok(walker.trace)
}

fn block_counts<F: EventFeed>(feed: &mut F, t_query: f64, depths: &[f64]) -> Result<Vec<usize>> {
    let deepest = depths.iter().cloned().fold(0.0, f64::max);
    if depths.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::Domain("depths must be finite and nonnegative".into()));
    }
    let mut walker = Walker::new(feed.n(), t_query, false);
    feed.feed(t_query, t_query - deepest, &mut |t, p, parent| walker.apply(t, p, parent))?;
    Ok(depths.iter().map(|&r| walker.trace.blocks_at_depth(r)).collect())
}

fn series<F: EventFeed>(
    feed: &mut F,
    unit: f64,
    cap: f64,
    scaled_times: &[f64],
    f: &FunctionalSpec,
) -> Result<Vec<f64>> {
    if scaled_times.is_empty() {
        return Err(Error::Domain("functional_series needs at least one time".into()));
    }
    if scaled_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("scaled times must be strictly increasing".into()));
    }
    let n = feed.n();
    let times: Vec<f64> = scaled_times.iter().map(|s| s * unit).collect();
    let t1 = times[0];
    let mut base = Walker::new(n, t1, true);
    if !feed.feed(t1, t1 - cap, &mut |t, p, parent| base.apply(t, p, parent))? {
        return Err(Error::DepthCap { cap });
    }
    let (records, members) = base.records.take().expect("recording walker");
    let tau1 = base.trace.tau();
    let mut out = Vec::with_capacity(times.len());
    out.push(j_from_blocks(&base.trace.blocks[..tau1], n, f));
    let mut occupied = vec![false; base.next_id as usize];
    for &tj in &times[1..] {
        let mut walker = Walker::new(n, tj, false);
        feed.feed(tj, t1, &mut |t, p, parent| walker.apply(t, p, parent))?;
        if !walker.done() {
            occupied.iter_mut().for_each(|o| *o = false);
            for (label, &c) in walker.class_of.iter().enumerate() {
                if c != NONE {
                    occupied[label] = true;
                }
            }
            for rec in &records {
                let hits = members[rec.start..rec.end].iter().filter(|&&c| occupied[c as usize]).count();
                occupied[rec.into as usize] = hits > 0;
                if hits >= 2 {
                    walker.blocks -= hits - 1;
                    walker.trace.depths.push(tj - rec.time);
                    walker.trace.blocks.push(walker.blocks);
                    if walker.blocks == 1 {
                        break;
                    }
                }
            }
        }
        let tau = walker.trace.blocks.len() - 1;
        out.push(j_from_blocks(&walker.trace.blocks[..tau], n, f));
    }
    Ok(out)
}

impl EventLog {
    /// Genealogy at `t_query`, extending the log backwards as needed.
    pub fn extract_tree(&mut self, t_query: f64) -> Result<GenealogyTrace> {
        let cap = self.depth_cap;
        walk_full(self, t_query, cap)
    }

    /// Block counts at the given reverse-time depths below `t_query`.
    pub fn block_counts_at_depths(&mut self, t_query: f64, depths: &[f64]) -> Result<Vec<usize>> {
        block_counts(self, t_query, depths)
    }

    /// `J_{n,s}(f)` for the trees at unscaled times `n^{1-alpha} s_j`.
    pub fn functional_series(&mut self, scaled_times: &[f64], f: &FunctionalSpec) -> Result<Vec<f64>> {
        let unit = self.model.time_unit();
        let cap = self.depth_cap;
        series(self, unit, cap, scaled_times, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::functional_j;
    use crate::funcspec::parse_fspec;
    use crate::rates::RatesContext;
    use crate::scalar::Alpha;

    fn model(n: usize) -> Arc<EventModel> {
        EventModel::new(&RatesContext::new(Alpha::new(1.5).unwrap()), n).unwrap()
    }

    #[test]
    fn trace_invariants() {
        let m = model(40);
        for seed in 0..20 {
            let mut log = EventLog::with_model(Arc::clone(&m), seed);
            let tr = log.extract_tree(0.0).unwrap();
            assert!(tr.is_complete());
            assert!(tr.blocks.windows(2).all(|w| w[1] < w[0]));
            assert!(tr.depths.windows(2).all(|w| w[0] < w[1]));
            let last = tr.mrca_depth().unwrap();
            assert!(tr.external.iter().all(|&e| e > 0.0 && e <= last));
            let path = tr.to_block_path();
            path.validate().unwrap();
            let ell = crate::chain::functional_external_length(&path).unwrap();
            assert!((ell - tr.external_length()).abs() < 1e-9 * ell);
        }
    }

    #[test]
    fn streaming_matches_stored() {
        let m = model(25);
        for seed in 0..10 {
            let mut log = EventLog::with_model(Arc::clone(&m), seed);
            let mut lazy = StreamingLog::new(Arc::clone(&m), seed);
            for t in [0.0, 0.7, -3.1] {
                assert_eq!(log.extract_tree(t).unwrap(), lazy.extract_tree(t).unwrap());
            }
        }
    }

    #[test]
    fn series_matches_direct_extraction() {
        let a = Alpha::new(1.5).unwrap();
        let f = parse_fspec("length", a).unwrap();
        let m = model(60);
        let s = [0.0, 0.3, 1.0, 4.0];
        for seed in 0..10 {
            let mut lazy = StreamingLog::new(Arc::clone(&m), seed);
            let got = lazy.functional_series(&s, &f).unwrap();
            let mut log = EventLog::with_model(Arc::clone(&m), seed);
            for (k, &sk) in s.iter().enumerate() {
                let tr = log.extract_tree(sk * m.time_unit()).unwrap();
                assert_eq!(got[k], functional_j(&tr.to_block_path(), &f), "seed {seed} s {sk}");
            }
            let mut log2 = EventLog::with_model(Arc::clone(&m), seed);
            assert_eq!(log2.functional_series(&s, &f).unwrap(), got);
        }
    }

    #[test]
    fn partial_walk_counts() {
        let m = model(200);
        let mut log = EventLog::with_model(Arc::clone(&m), 3);
        let full = log.extract_tree(0.0).unwrap();
        let depths = [0.0, 0.01, 0.1, 1.0];
        let mut lazy = StreamingLog::new(Arc::clone(&m), 3);
        let counts = lazy.block_counts_at_depths(0.0, &depths).unwrap();
        for (r, c) in depths.iter().zip(counts) {
            assert_eq!(c, full.blocks_at_depth(*r));
        }
    }

    #[test]
    fn depth_cap_is_reported() {
        let m = model(50);
        let mut lazy = StreamingLog::new(m, 1);
        lazy.set_depth_cap(1e-6);
        assert!(matches!(lazy.extract_tree(0.0), Err(Error::DepthCap { .. })));
    }

    #[test]
    fn coupling_of_nearby_times() {
        let m = model(30);
        let mut log = EventLog::with_model(Arc::clone(&m), 8);
        log.extend(-1.0, 1.0).unwrap();
        let times = log.times().to_vec();
        let i = times.partition_point(|&t| t < 0.0);
        let (t1, t2) = (times[i - 1] + 1e-9, times[i] - 1e-9);
        let a = log.extract_tree(t1).unwrap();
        let b = log.extract_tree(t2).unwrap();
        let shift = t2 - t1;
        assert_eq!(a.blocks, b.blocks);
        for (x, y) in a.depths.iter().zip(&b.depths) {
            assert!((y - x - shift).abs() < 1e-12);
        }
    }
}
