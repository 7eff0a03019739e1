//! Slot traces and their CSV / binary export.
//!
//! Binary layout (all integers little-endian):
//!
//! | field            | type            |
//! |------------------|-----------------|
//! | magic            | `b"NLBT"`       |
//! | version          | u16             |
//! | stride           | u32 (1 = every slot) |
//! | config digest    | 32 raw bytes (SHA-256) |
//! | queue count `n`  | u32             |
//! | queue ids        | `n` x (switch u32, commodity u32) |
//! | record count `m` | u64             |
//! | records          | `m` x (slot u64, `n` x backlog u64) |

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use crate::network::{CommodityId, SwitchId};

pub const BINARY_MAGIC: &[u8; 4] = b"NLBT";
pub const BINARY_VERSION: u16 = 1;
pub const DEFAULT_STRIDE: u64 = 100;

/// How much per-slot detail a run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceLevel {
    #[default]
    None,
    /// One record every `n` slots.
    Decimated(u64),
    Full,
}

impl TraceLevel {
    pub fn stride(self) -> Option<u64> {
        match self {
            TraceLevel::None => None,
            TraceLevel::Decimated(n) => Some(n.max(1)),
            TraceLevel::Full => Some(1),
        }
    }
}

impl FromStr for TraceLevel {
    type Err = String;

    /// Accepts `none`, `full`, `decimated` or `decimated:N`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(TraceLevel::None),
            "full" => Ok(TraceLevel::Full),
            "decimated" => Ok(TraceLevel::Decimated(DEFAULT_STRIDE)),
            other => match other.strip_prefix("decimated:").map(str::parse::<u64>) {
                Some(Ok(n)) if n > 0 => Ok(TraceLevel::Decimated(n)),
                _ => Err(format!("unknown trace level `{other}` (none, decimated[:N], full)")),
            },
        }
    }
}

impl fmt::Display for TraceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceLevel::None => f.write_str("none"),
            TraceLevel::Decimated(n) => write!(f, "decimated:{n}"),
            TraceLevel::Full => f.write_str("full"),
        }
    }
}

/// State at the start of `slot` and what happened during it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    /// Backlog per live queue, in [`SlotTrace::queues`] order.
    pub queues: Vec<u64>,
    /// Exogenous arrivals per commodity during the slot.
    pub arrivals: Vec<u64>,
    /// Sink departures per commodity during the slot.
    pub departures: Vec<u64>,
    /// Service per (link, commodity) in [`SlotTrace::link_layout`] order.
    pub transmissions: Vec<u64>,
    /// Arrivals per commodity before the slot.
    pub cum_arrivals: Vec<u64>,
    /// Departures per commodity before the slot.
    pub cum_departures: Vec<u64>,
}

/// Fairness scalar chosen on one link at one reconfiguration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KRecord {
    pub slot: u64,
    pub from: SwitchId,
    pub to: SwitchId,
    /// `None` for allocators without a fairness scalar.
    pub k: Option<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SlotTrace {
    pub level: TraceLevel,
    pub horizon: u64,
    pub interval: u64,
    pub commodities: Vec<CommodityId>,
    pub queues: Vec<(SwitchId, CommodityId)>,
    pub link_layout: Vec<(SwitchId, SwitchId, Vec<CommodityId>)>,
    pub records: Vec<SlotRecord>,
    pub k_records: Vec<KRecord>,
    /// Network-wide backlog at the start of every slot, kept at every level.
    pub total_backlog: Vec<u64>,
}

impl SlotTrace {
    /// Checks per-commodity conservation on every kept record.
    pub fn conservation_holds(&self) -> bool {
        self.records.iter().all(|r| {
            self.commodities.iter().enumerate().all(|(n, &d)| {
                let held: u64 = self
                    .queues
                    .iter()
                    .zip(&r.queues)
                    .filter(|((_, e), _)| *e == d)
                    .map(|(_, q)| q)
                    .sum();
                r.cum_arrivals[n] == r.cum_departures[n] + held
            })
        })
    }
}

/// One row per kept slot per live queue.
pub fn write_trace_csv<W: Write>(trace: &SlotTrace, out: W) -> Result<(), csv::Error> {
    let stride = trace.level.stride().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "switch", "commodity", "backlog", "decimation"])?;
    for r in &trace.records {
        for (&(i, d), q) in trace.queues.iter().zip(&r.queues) {
            w.write_record([
                r.slot.to_string(),
                i.0.to_string(),
                d.0.to_string(),
                q.to_string(),
                stride.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary_trace<W: Write>(trace: &SlotTrace, digest_hex: &str, mut out: W) -> io::Result<()> {
    let digest = hex::decode(digest_hex)
        .ok()
        .filter(|d| d.len() == 32)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "digest must be 64 hex digits"))?;
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(trace.level.stride().unwrap_or(0) as u32).to_le_bytes())?;
    out.write_all(&digest)?;
    out.write_all(&(trace.queues.len() as u32).to_le_bytes())?;
    for (i, d) in &trace.queues {
        out.write_all(&i.0.to_le_bytes())?;
        out.write_all(&d.0.to_le_bytes())?;
    }
    out.write_all(&(trace.records.len() as u64).to_le_bytes())?;
    for r in &trace.records {
        out.write_all(&r.slot.to_le_bytes())?;
        for q in &r.queues {
            out.write_all(&q.to_le_bytes())?;
        }
    }
    out.flush()
}

/// Decoded binary trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTrace {
    pub stride: u32,
    pub digest: String,
    pub queues: Vec<(SwitchId, CommodityId)>,
    pub rows: Vec<(u64, Vec<u64>)>,
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_binary_trace<R: Read>(mut r: R) -> io::Result<BinaryTrace> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(bad("not a trace file"));
    }
    let mut v = [0; 2];
    r.read_exact(&mut v)?;
    if u16::from_le_bytes(v) != BINARY_VERSION {
        return Err(bad("unsupported trace version"));
    }
    let stride = read_u32(&mut r)?;
    let mut digest = [0; 32];
    r.read_exact(&mut digest)?;
    let n = read_u32(&mut r)? as usize;
    let mut queues = Vec::with_capacity(n);
    for _ in 0..n {
        let i = read_u32(&mut r)?;
        let d = read_u32(&mut r)?;
        queues.push((SwitchId(i), CommodityId(d)));
    }
    let m = read_u64(&mut r)?;
    let mut rows = Vec::new();
    for _ in 0..m {
        let slot = read_u64(&mut r)?;
        let qs = (0..n).map(|_| read_u64(&mut r)).collect::<io::Result<Vec<_>>>()?;
        rows.push((slot, qs));
    }
    Ok(BinaryTrace {
        stride,
        digest: hex::encode(digest),
        queues,
        rows,
    })
}
