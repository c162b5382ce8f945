//! Poisson construction of the evolving population: a time-stamped log of
//! reproduction events from which the genealogy at any time is read
//! backwards.


mod persist;
mod walk;

use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

pub use walk::{GenealogyTrace, StreamingLog};

use crate::error::{Error, Result};
use crate::rates::{MergerSizeTable, RatesContext};
use crate::replicate::{stream, DOMAIN_CELL};
use crate::scalar::Alpha;

/// Expected number of events per time cell.
const CELL_EVENTS: f64 = 256.0;

/// Event law shared by all logs with the same `(n, alpha)`.
#[derive(Debug)]
pub struct EventModel {
    n: usize,
    alpha: Alpha,
    kappa: f64,
    rate: f64,
    cell_len: f64,
    sizes: MergerSizeTable,
}

impl EventModel {
    pub fn new(ctx: &RatesContext, n: usize) -> Result<Arc<Self>> {
        if n < 2 {
            return Err(Error::Domain(format!("population size must be at least 2, got {n}")));
        }
        if n > u32::MAX as usize {
            return Err(Error::Domain(format!("population size {n} exceeds the label range")));
        }
        let rate = ctx.total_rate(n)?;
        Ok(Arc::new(Self {
            n,
            alpha: ctx.alpha(),
            kappa: ctx.kappa(),
            rate,
            cell_len: CELL_EVENTS / rate,
            sizes: MergerSizeTable::new(ctx, n)?,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// Effective event rate `lambda_n`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn cell_len(&self) -> f64 {
        self.cell_len
    }

    /// `n^{1 - alpha}`, the unscaled length of one unit of scaled time.
    pub fn time_unit(&self) -> f64 {
        (self.n as f64).powf(1.0 - self.alpha.value())
    }

    /// Default depth cap `10^4 n^{1-alpha} alpha Gamma(alpha)`.
    pub fn default_depth_cap(&self) -> f64 {
        1e4 * self.time_unit() * self.kappa
    }

    fn cell_of(&self, t: f64) -> i64 {
        (t / self.cell_len).floor() as i64
    }

    fn cell_start(&self, c: i64) -> f64 {
        c as f64 * self.cell_len
    }

    /// Appends the events of cell `c` in increasing time order.
    fn generate_cell(&self, seed: u64, c: i64, out: &mut EventBuffer) {
        let zig = ((c << 1) ^ (c >> 63)) as u64;
        let mut rng = stream(seed, DOMAIN_CELL, zig);
        let end = self.cell_start(c + 1);
        let mut t = self.cell_start(c);
        loop {
            let gap: f64 = Exp1.sample(&mut rng);
            t += gap / self.rate;
            if t >= end {
                break;
            }
            let k = self.sizes.sample(&mut rng) + 1;
            let start = out.labels.len();
            out.labels.extend(index::sample(&mut rng, self.n, k).into_iter().map(|l| l as u32));
            out.labels[start..].sort_unstable();
            let parent = out.labels[start + rng.random_range(0..k)];
            out.times.push(t);
            out.parents.push(parent);
            out.offsets.push(out.labels.len());
        }
    }
}

/// Flat storage of a time-sorted event sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct EventBuffer {
    pub times: Vec<f64>,
    /// `offsets[i]..offsets[i + 1]` indexes the participants of event i.
    pub offsets: Vec<usize>,
    pub labels: Vec<u32>,
    pub parents: Vec<u32>,
}

impl EventBuffer {
    fn new() -> Self {
        Self { offsets: vec![0], ..Default::default() }
    }

    fn clear(&mut self) {
        self.times.clear();
        self.labels.clear();
        self.parents.clear();
        self.offsets.clear();
        self.offsets.push(0);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn participants(&self, i: usize) -> &[u32] {
        &self.labels[self.offsets[i]..self.offsets[i + 1]]
    }

    fn push_from(&mut self, other: &EventBuffer, i: usize) {
        self.times.push(other.times[i]);
        self.labels.extend_from_slice(other.participants(i));
        self.parents.push(other.parents[i]);
        self.offsets.push(self.labels.len());
    }

    fn append(&mut self, other: &EventBuffer) {
        for i in 0..other.len() {
            self.push_from(other, i);
        }
    }
}

/// One reproduction event: all participants die and the parent's offspring
/// take over their labels. Labels are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEvent {
    pub time: f64,
    pub participants: Vec<u32>,
    pub parent: u32,
}

/// The events of one population on the window `[t_lo, t_hi)`.
#[derive(Debug, Clone)]
pub struct EventLog {
    model: Arc<EventModel>,
    seed: u64,
    t_lo: f64,
    t_hi: f64,
    events: EventBuffer,
    frozen: bool,
    depth_cap: f64,
}

impl EventLog {
    /// Empty log on the window `[0, 0]`.
    pub fn new(ctx: &RatesContext, n: usize, seed: u64) -> Result<Self> {
        Ok(Self::with_model(EventModel::new(ctx, n)?, seed))
    }

    pub fn with_model(model: Arc<EventModel>, seed: u64) -> Self {
        let depth_cap = model.default_depth_cap();
        Self { model, seed, t_lo: 0.0, t_hi: 0.0, events: EventBuffer::new(), frozen: false, depth_cap }
    }

    pub fn model(&self) -> &Arc<EventModel> {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.model.n
    }

    pub fn alpha(&self) -> Alpha {
        self.model.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.len() == 0
    }

    /// Whether the log was loaded from storage and may not grow.
    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn depth_cap(&self) -> f64 {
        self.depth_cap
    }

    pub fn set_depth_cap(&mut self, cap: f64) {
        self.depth_cap = cap;
    }

    pub fn event(&self, i: usize) -> PopulationEvent {
        PopulationEvent {
            time: self.events.times[i],
            participants: self.events.participants(i).to_vec(),
            parent: self.events.parents[i],
        }
    }

    pub fn events(&self) -> impl Iterator<Item = PopulationEvent> + '_ {
        (0..self.len()).map(|i| self.event(i))
    }

    pub fn times(&self) -> &[f64] {
        &self.events.times
    }

    #[cfg(test)]
    pub(crate) fn buffer(&self) -> &EventBuffer {
        &self.events
    }

    /// Grows the window to `[t_lo_new, t_hi_new)`; existing events are kept.
    pub fn extend(&mut self, t_lo_new: f64, t_hi_new: f64) -> Result<()> {
        if !(t_lo_new <= self.t_lo && t_hi_new >= self.t_hi) || !t_lo_new.is_finite() || !t_hi_new.is_finite() {
            return Err(Error::WindowShrink { lo: self.t_lo, hi: self.t_hi, new_lo: t_lo_new, new_hi: t_hi_new });
        }
        if self.frozen && (t_lo_new < self.t_lo || t_hi_new > self.t_hi) {
            return Err(Error::OutOfWindow {
                t: if t_lo_new < self.t_lo { t_lo_new } else { t_hi_new },
                lo: self.t_lo,
                hi: self.t_hi,
            });
        }
        let empty = self.t_lo == self.t_hi;
        let mut merged = EventBuffer::new();
        if empty {
            self.fill(t_lo_new, t_hi_new, &mut merged);
        } else {
            self.fill(t_lo_new, self.t_lo, &mut merged);
            merged.append(&self.events);
            self.fill(self.t_hi, t_hi_new, &mut merged);
        }
        self.events = merged;
        self.t_lo = t_lo_new;
        self.t_hi = t_hi_new;
        Ok(())
    }

    /// Appends the events in `[lo, hi)` to `out`.
    fn fill(&self, lo: f64, hi: f64, out: &mut EventBuffer) {
        if hi <= lo {
            return;
        }
        let mut cell = EventBuffer::new();
        for c in self.model.cell_of(lo)..=self.model.cell_of(hi) {
            cell.clear();
            self.model.generate_cell(self.seed, c, &mut cell);
            for i in 0..cell.len() {
                let t = cell.times[i];
                if t >= lo && t < hi {
                    out.push_from(&cell, i);
                }
            }
        }
    }

    pub(crate) fn from_parts(
        model: Arc<EventModel>,
        seed: u64,
        window: (f64, f64),
        events: EventBuffer,
    ) -> Self {
        let depth_cap = model.default_depth_cap();
        Self { model, seed, t_lo: window.0, t_hi: window.1, events, frozen: true, depth_cap }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> RatesContext {
        RatesContext::new(Alpha::new(1.5).unwrap())
    }

    #[test]
    fn new_log_is_empty() {
        let log = EventLog::new(&ctx(), 10, 1).unwrap();
        assert_eq!(log.window(), (0.0, 0.0));
        assert!(log.is_empty());
        assert!(EventLog::new(&ctx(), 1, 1).is_err());
    }

    #[test]
    fn extension_order_does_not_matter() {
        let c = ctx();
        let mut a = EventLog::new(&c, 30, 9).unwrap();
        a.extend(-2.0, 1.0).unwrap();
        let mut b = EventLog::new(&c, 30, 9).unwrap();
        b.extend(0.0, 0.5).unwrap();
        b.extend(-0.3, 0.5).unwrap();
        b.extend(-2.0, 1.0).unwrap();
        assert_eq!(a.buffer(), b.buffer());
        assert!(!a.is_empty());
        let mut other = EventLog::new(&c, 30, 10).unwrap();
        other.extend(-2.0, 1.0).unwrap();
        assert_ne!(a.buffer(), other.buffer());
    }

    #[test]
    fn events_are_well_formed() {
        let mut log = EventLog::new(&ctx(), 12, 5).unwrap();
        log.extend(-1.0, 3.0).unwrap();
        assert!(log.times().windows(2).all(|w| w[0] < w[1]));
        for e in log.events() {
            assert!(e.participants.len() >= 2);
            assert!(e.participants.windows(2).all(|w| w[0] < w[1]));
            assert!(e.participants.contains(&e.parent));
            assert!(e.time >= -1.0 && e.time < 3.0);
        }
    }

    #[test]
    fn shrinking_is_rejected() {
        let mut log = EventLog::new(&ctx(), 5, 5).unwrap();
        log.extend(-1.0, 1.0).unwrap();
        assert!(matches!(log.extend(-0.5, 2.0), Err(Error::WindowShrink { .. })));
        assert!(matches!(log.extend(-2.0, 0.5), Err(Error::WindowShrink { .. })));
    }
}
