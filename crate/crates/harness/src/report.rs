//! Serializable records of trials and sweeps.

use irslink_core::assoc::Association;
use irslink_core::scenario::{Point3, Topology};
use serde::{Deserialize, Serialize};

/// Node placement snapshot, positions as `[x, y, z]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyRecord {
    pub ud: Vec<[f64; 3]>,
    pub dd: Vec<[f64; 3]>,
    pub ur: Vec<[f64; 3]>,
    pub dr: Vec<[f64; 3]>,
    pub ap: [f64; 3],
}

fn triple(p: &Point3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

impl From<&Topology> for TopologyRecord {
    fn from(t: &Topology) -> Self {
        Self {
            ud: t.uplink_devices.iter().map(triple).collect(),
            dd: t.downlink_devices.iter().map(triple).collect(),
            ur: t.uplink_irs.iter().map(triple).collect(),
            dr: t.downlink_irs.iter().map(triple).collect(),
            ap: triple(&t.ap),
        }
    }
}

/// Water-filling diagnostics for one downlink surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRecord {
    pub powers: Vec<f64>,
    pub mu: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// One association algorithm's outcome on a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoRecord {
    pub algorithm: String,
    /// Matched `[l, m]` pairs.
    pub pairs: Vec<[usize; 2]>,
    /// Raw signaling-slot counter of the algorithm.
    pub tau: u64,
    /// Slots charged against the coherence interval, `min(tau, T)`.
    pub tau_applied: u64,
    /// Association objective at zero overhead, bits/s/Hz.
    pub sum_rate: f64,
    /// Objective with the overhead discount applied, bits/s/Hz.
    pub e2e_rate: f64,
    /// Blocking-pair check of the produced matching.
    pub stable: bool,
}

impl AlgoRecord {
    pub fn new(assoc: &Association, r: &irslink_core::assoc::RateMatrix, coherence: u64) -> Self {
        let tau_applied = assoc.overhead_slots(coherence);
        let e2e: f64 = assoc
            .matched()
            .map(|(l, m)| {
                irslink_core::linproc::e2e_rate(r.at(l, m), r.at(l, m), tau_applied, coherence)
                    .expect("tau capped at coherence")
            })
            .sum();
        Self {
            algorithm: assoc.algorithm.tag().to_string(),
            pairs: assoc.matched().map(|(l, m)| [l, m]).collect(),
            tau: assoc.tau,
            tau_applied,
            sum_rate: assoc.sum(r),
            e2e_rate: e2e,
            stable: irslink_core::assoc::is_stable(assoc, r),
        }
    }
}

/// Full record of one evaluated coherence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    /// Mobility step index at which the pipeline was evaluated.
    pub step: u64,
    pub topology: TopologyRecord,
    /// Per-uplink-surface sum rates, bits/s/Hz.
    pub ul_sums: Vec<f64>,
    /// Per-downlink-surface sum rates, bits/s/Hz.
    pub dl_sums: Vec<f64>,
    /// Uplink device SINRs, indexed `[surface][device]`.
    pub ul_sinr: Vec<Vec<f64>>,
    /// Downlink device SINRs, indexed `[surface][device]`.
    pub dl_sinr: Vec<Vec<f64>>,
    /// Water-filling results, one per downlink surface.
    pub power: Vec<PowerRecord>,
    pub algorithms: Vec<AlgoRecord>,
    /// Wall-clock diagnostic only; excluded from serialization so that a
    /// `(config, seed)` pair fixes every emitted byte.
    #[serde(skip)]
    pub wall_clock_ms: f64,
}

/// One aggregated sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub algorithm: String,
    /// Mean rate over trials: bits/s/Hz, or bits/s on the frequency axis.
    pub mean_rate: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    /// Mean raw signaling-slot counter.
    pub mean_tau: f64,
    pub trials: usize,
}

/// Sweep result: one row per (axis value, algorithm), sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}
