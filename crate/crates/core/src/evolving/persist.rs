//! Binary and JSON storage of event logs.
//!
//! Binary layout, all fields little-endian:
//! header `"EBCL"`, version `u32`, n `u64`, alpha `f64`, seed `u64`,
//! window bounds `f64 f64`, event count `u64`; then per event time `f64`,
//! k `u32`, parent `u32` and k participant labels `u32`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{EventBuffer, EventLog, EventModel, PopulationEvent};
use crate::error::{Error, Result};
use crate::rates::RatesContext;
use crate::scalar::Alpha;

pub const MAGIC: &[u8; 4] = b"EBCL";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct JsonLog {
    format: String,
    version: u32,
    n: usize,
    alpha: f64,
    seed: u64,
    window: (f64, f64),
    events: Vec<PopulationEvent>,
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Corrupt(format!("truncated while reading {what}")),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }
}

fn build(n: u64, alpha: f64, seed: u64, window: (f64, f64), events: EventBuffer) -> Result<EventLog> {
    let alpha = Alpha::new(alpha).map_err(|_| Error::Corrupt(format!("alpha {alpha} out of range")))?;
    if n < 2 || n > u32::MAX as u64 {
        return Err(Error::Corrupt(format!("population size {n} out of range")));
    }
    let n = n as usize;
    if !(window.0 <= window.1) || !window.0.is_finite() || !window.1.is_finite() {
        return Err(Error::Corrupt(format!("invalid window [{}, {}]", window.0, window.1)));
    }
    let mut prev = f64::NEG_INFINITY;
    for i in 0..events.len() {
        let t = events.times[i];
        if !(t > prev) || t < window.0 || t >= window.1 {
            return Err(Error::Corrupt(format!("event {i} at time {t} is out of order or outside the window")));
        }
        prev = t;
        let p = events.participants(i);
        if p.len() < 2 || p.iter().any(|&l| l as usize >= n) || !p.contains(&events.parents[i]) {
            return Err(Error::Corrupt(format!("event {i} has an invalid participant set")));
        }
    }
    let model = EventModel::new(&RatesContext::new(alpha), n)?;
    Ok(EventLog::from_parts(model, seed, window, events))
}

impl EventLog {
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&self.alpha().value().to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.t_lo.to_le_bytes())?;
        w.write_all(&self.t_hi.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        let ev = &self.events;
        for i in 0..ev.len() {
            let p = ev.participants(i);
            w.write_all(&ev.times[i].to_le_bytes())?;
            w.write_all(&(p.len() as u32).to_le_bytes())?;
            w.write_all(&ev.parents[i].to_le_bytes())?;
            for &l in p {
                w.write_all(&l.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a log written by [`EventLog::write_binary`]. The result is
    /// frozen: queries needing events outside its window fail.
    pub fn read_binary<R: Read>(r: R) -> Result<Self> {
        let mut c = Cursor { inner: r };
        let magic: [u8; 4] = c.bytes("magic")?;
        if &magic != MAGIC {
            return Err(Error::Corrupt("bad magic, not an event log".into()));
        }
        let version = c.u32("version")?;
        if version != VERSION {
            return Err(Error::Version(version));
        }
        let n = c.u64("n")?;
        let alpha = c.f64("alpha")?;
        let seed = c.u64("seed")?;
        let lo = c.f64("window")?;
        let hi = c.f64("window")?;
        let count = c.u64("event count")?;
        let mut events = EventBuffer::new();
        for i in 0..count {
            let what = format!("event {i}");
            let t = c.f64(&what)?;
            let k = c.u32(&what)?;
            if k as u64 > n {
                return Err(Error::Corrupt(format!("event {i} claims {k} participants")));
            }
            let parent = c.u32(&what)?;
            for _ in 0..k {
                let l = c.u32(&what)?;
                events.labels.push(l);
            }
            events.times.push(t);
            events.parents.push(parent);
            events.offsets.push(events.labels.len());
        }
        let mut probe = [0u8; 1];
        if c.inner.read(&mut probe)? != 0 {
            return Err(Error::Corrupt("trailing bytes after the last event".into()));
        }
        build(n, alpha, seed, (lo, hi), events)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = JsonLog {
            format: "EBCL".into(),
            version: VERSION,
            n: self.n(),
            alpha: self.alpha().value(),
            seed: self.seed,
            window: (self.t_lo, self.t_hi),
            events: self.events().collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: JsonLog = serde_json::from_str(text)?;
        if doc.format != "EBCL" {
            return Err(Error::Corrupt(format!("unknown format tag '{}'", doc.format)));
        }
        if doc.version != VERSION {
            return Err(Error::Version(doc.version));
        }
        let mut events = EventBuffer::new();
        for e in doc.events {
            events.times.push(e.time);
            events.labels.extend(e.participants);
            events.parents.push(e.parent);
            events.offsets.push(events.labels.len());
        }
        build(doc.n as u64, doc.alpha, doc.seed, doc.window, events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_log() -> EventLog {
        let ctx = RatesContext::new(Alpha::new(1.4).unwrap());
        let mut log = EventLog::new(&ctx, 20, 77).unwrap();
        log.extract_tree(0.0).unwrap();
        log
    }

    #[test]
    fn binary_round_trip() {
        let mut log = sample_log();
        let mut bytes = Vec::new();
        log.write_binary(&mut bytes).unwrap();
        let mut back = EventLog::read_binary(bytes.as_slice()).unwrap();
        assert!(back.is_frozen());
        assert_eq!(back.buffer(), log.buffer());
        assert_eq!(back.window(), log.window());
        assert_eq!(back.extract_tree(0.0).unwrap(), log.extract_tree(0.0).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let log = sample_log();
        let back = EventLog::from_json(&log.to_json().unwrap()).unwrap();
        assert_eq!(back.buffer(), log.buffer());
    }

    #[test]
    fn damaged_inputs() {
        let log = sample_log();
        let mut bytes = Vec::new();
        log.write_binary(&mut bytes).unwrap();
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(EventLog::read_binary(cut), Err(Error::Corrupt(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(EventLog::read_binary(bad.as_slice()), Err(Error::Corrupt(_))));
        let mut ver = bytes.clone();
        ver[4] = 9;
        assert!(matches!(EventLog::read_binary(ver.as_slice()), Err(Error::Version(9))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(EventLog::read_binary(extra.as_slice()), Err(Error::Corrupt(_))));
    }

    #[test]
    fn frozen_log_refuses_outside_window() {
        let log = sample_log();
        let mut bytes = Vec::new();
        log.write_binary(&mut bytes).unwrap();
        let mut back = EventLog::read_binary(bytes.as_slice()).unwrap();
        let (lo, hi) = back.window();
        assert!(matches!(back.extract_tree(hi + 1.0), Err(Error::OutOfWindow { .. })));
        assert!(matches!(back.extract_tree(lo + 1e-9), Err(Error::OutOfWindow { .. })));
    }
}
