use thiserror::Error;

use crate::topology::{ElementId, Hop, Path};

/// Instantaneous quality of one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopQuality {
    pub propagation_s: f64,
    pub capacity_bps: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatencyError {
    #[error("hop `{hop}` is down")]
    LinkDownOnPath { hop: String },
}

pub fn hop_label(h: &Hop) -> String {
    match h {
        Hop::Link(l) => l.0.clone(),
        Hop::Air { cell, terminal } => format!("{cell}~{terminal}"),
    }
}

/// One-way delay of a `size_bytes` message along `path`: per-hop propagation
/// plus serialization, plus the processing delay of every element on the
/// path (both ends included). `quality` returns `None` for a hop that is down.
pub fn message_latency(
    path: &Path,
    size_bytes: u32,
    quality: impl Fn(&Hop) -> Option<HopQuality>,
    processing_s: impl Fn(&ElementId) -> f64,
) -> Result<f64, LatencyError> {
    let bits = size_bytes as f64 * 8.0;
    let mut total = 0.0;
    for h in &path.hops {
        let q = quality(h).ok_or_else(|| LatencyError::LinkDownOnPath { hop: hop_label(h) })?;
        total += q.propagation_s + bits / q.capacity_bps;
    }
    total += path.elements.iter().map(processing_s).sum::<f64>();
    Ok(total)
}

/// Smallest hop capacity along `path`, or `None` if a hop is down.
/// A single-element path has unbounded capacity.
pub fn min_capacity(path: &Path, quality: impl Fn(&Hop) -> Option<HopQuality>) -> Option<f64> {
    path.hops.iter().try_fold(f64::INFINITY, |acc, h| quality(h).map(|q| acc.min(q.capacity_bps)))
}
