//! The trial pipeline and parameter sweeps.
//!
//! One trial evaluates a single coherence interval end to end: sample (or
//! advance) the topology, configure every surface's reflection phases,
//! build the cascaded channels with their estimation-error statistics, run
//! MMSE combining on the uplink and MMSE beamforming plus water-filling on
//! the downlink, assemble the bottleneck rate matrix, and let each
//! configured association algorithm pair the surfaces.
//!
//! Everything is deterministic given `(config, seed)`: the topology and
//! mobility draws come from one seeded stream, and the association stage
//! draws from a stream derived from `(seed, step)` so results do not
//! depend on how many intermediate steps were evaluated.

use anyhow::{anyhow, Context, Result};
use irslink_core::assoc::{
    build_preferences, exhaustive, gale_shapley, greedy, random_assoc, Algorithm, Association,
    RateMatrix,
};
use irslink_core::channel::{
    cascade_with_gram, optimal_phase_config, pathloss_cascaded, segment_channel, CascadedChannel,
    CeeParams, ThzParams,
};
use irslink_core::linalg::CMat;
use irslink_core::linproc::{
    downlink_sinr, mmse_beamformers, mmse_receive_vectors, sum_rate, uplink_sinr, LinkEnsemble,
};
use irslink_core::power::{waterfill, PowerAllocation, WaterfillInstance, WaterfillOptions};
use irslink_core::scenario::{
    sample_topology, step_group, HeadState, MobilityParams, Point3, Topology, TopologyConfig,
};
use irslink_core::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::str::FromStr;
use std::time::Instant;

use crate::config::{db_to_linear, dbm_to_watts, noise_power, ExperimentConfig};
use crate::report::{AlgoRecord, PowerRecord, SweepRow, SweepTable, TopologyRecord, TrialReport};

/// Sweepable parameter axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Transmit power in dBm (uplink devices and AP budget together).
    PowerDbm,
    /// AP antenna count.
    Antennas,
    /// Reflecting elements per surface side.
    Elements,
    /// Square floor side in meters.
    Area,
    /// Normalized CEE variance applied to both segments.
    Cee,
    /// Mobility step index along one trajectory.
    TimeSlot,
    /// Carrier frequency in GHz; rates are reported in bits/s.
    FrequencyGhz,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::PowerDbm => "power_dbm",
            SweepAxis::Antennas => "antennas",
            SweepAxis::Elements => "elements",
            SweepAxis::Area => "area",
            SweepAxis::Cee => "cee",
            SweepAxis::TimeSlot => "time_slot",
            SweepAxis::FrequencyGhz => "frequency_ghz",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power_dbm" | "power" => Ok(SweepAxis::PowerDbm),
            "antennas" => Ok(SweepAxis::Antennas),
            "elements" => Ok(SweepAxis::Elements),
            "area" => Ok(SweepAxis::Area),
            "cee" => Ok(SweepAxis::Cee),
            "time_slot" => Ok(SweepAxis::TimeSlot),
            "frequency_ghz" | "frequency" => Ok(SweepAxis::FrequencyGhz),
            _ => Err(anyhow!(
                "unknown sweep axis `{s}` (expected power_dbm, antennas, elements, area, cee, \
                 time_slot, or frequency_ghz)"
            )),
        }
    }
}

/// Apply one axis value to a configuration.
pub fn apply_axis(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    let as_count = |v: f64, what: &str| -> Result<usize> {
        if v < 1.0 || v.fract() != 0.0 {
            return Err(anyhow!("{what} must be a positive integer, got {v}"));
        }
        Ok(v as usize)
    };
    match axis {
        SweepAxis::PowerDbm => {
            cfg.uplink_power_dbm = value;
            cfg.ap_power_dbm = value;
        }
        SweepAxis::Antennas => cfg.antennas = as_count(value, "antenna count")?,
        SweepAxis::Elements => cfg.elements_per_side = as_count(value, "elements per side")?,
        SweepAxis::Area => {
            if !(value > 0.0) {
                return Err(anyhow!("area side must be positive"));
            }
            cfg.area_m = value;
        }
        SweepAxis::Cee => {
            if value < 0.0 {
                return Err(anyhow!("CEE variance must be non-negative"));
            }
            cfg.sigma2_g = value;
            cfg.sigma2_big_g = value;
        }
        SweepAxis::TimeSlot => {
            cfg.mobility_steps = as_count(value.max(0.0), "time slot").unwrap_or(0) as u64;
            if value < 0.0 || value.fract() != 0.0 {
                return Err(anyhow!("time slot must be a non-negative integer"));
            }
        }
        SweepAxis::FrequencyGhz => {
            if !(value > 0.0) {
                return Err(anyhow!("carrier frequency must be positive"));
            }
            cfg.carrier_freq_ghz = value;
        }
    }
    Ok(cfg)
}

/// Reflecting-element positions: a square grid in the x-z plane centered
/// on the surface, half-wavelength spacing.
fn element_grid(center: &Point3, side: usize, spacing: f64) -> Vec<Point3> {
    let half = 0.5 * (side as f64 - 1.0);
    (0..side * side)
        .map(|n| {
            let u = (n % side) as f64 - half;
            let v = (n / side) as f64 - half;
            Point3::new(center.x + u * spacing, center.y, center.z + v * spacing)
        })
        .collect()
}

/// AP antenna positions: a uniform linear array along y, half-wavelength
/// spacing.
fn antenna_array(center: &Point3, count: usize, spacing: f64) -> Vec<Point3> {
    let half = 0.5 * (count as f64 - 1.0);
    (0..count)
        .map(|k| Point3::new(center.x, center.y + (k as f64 - half) * spacing, center.z))
        .collect()
}

struct SurfaceLink {
    channels: Vec<CascadedChannel>,
}

/// Mobile network state: two independent groups (uplink, downlink), each
/// led by its first device.
struct MobileState {
    topology: Topology,
    ud_head: HeadState,
    dd_head: HeadState,
}

impl MobileState {
    fn sample(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let topo_cfg = TopologyConfig {
            area: (cfg.area_m, cfg.area_m),
            uplink_devices: cfg.uplink_devices,
            downlink_devices: cfg.downlink_devices,
            uplink_irs: cfg.uplink_irs,
            downlink_irs: cfg.downlink_irs,
            device_height: cfg.device_height_m,
            irs_height: cfg.irs_height_m,
            ap_height: cfg.ap_height_m,
        };
        let topology = sample_topology(&topo_cfg, rng).map_err(|e| anyhow!("topology: {e}"))?;
        let ud_head = HeadState::at_rest(topology.uplink_devices[0]);
        let dd_head = HeadState::at_rest(topology.downlink_devices[0]);
        Ok(Self {
            topology,
            ud_head,
            dd_head,
        })
    }

    fn mobility_params(cfg: &ExperimentConfig) -> MobilityParams {
        MobilityParams {
            v_min: cfg.v_min,
            v_max: cfg.v_max,
            pause_slots: cfg.pause_slots,
            alpha_a: cfg.alpha_a,
            alpha_s: cfg.alpha_s,
            area: (cfg.area_m, cfg.area_m),
        }
    }

    /// Advance both groups by one slot.
    fn step(&mut self, cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<()> {
        let params = Self::mobility_params(cfg);
        params.validate().map_err(|e| anyhow!("mobility: {e}"))?;
        let (head, members) = step_group(
            &self.ud_head,
            &self.topology.uplink_devices[1..],
            &params,
            rng,
        );
        self.ud_head = head;
        self.topology.uplink_devices[0] = head.position;
        self.topology.uplink_devices[1..].copy_from_slice(&members);
        let (head, members) = step_group(
            &self.dd_head,
            &self.topology.downlink_devices[1..],
            &params,
            rng,
        );
        self.dd_head = head;
        self.topology.downlink_devices[0] = head.position;
        self.topology.downlink_devices[1..].copy_from_slice(&members);
        Ok(())
    }
}

/// Evaluate the full pipeline on a fixed topology.
fn evaluate(
    cfg: &ExperimentConfig,
    topology: &Topology,
    seed: u64,
    step: u64,
) -> Result<TrialReport> {
    let started = Instant::now();
    let thz = ThzParams::from_frequency(cfg.carrier_freq_hz(), cfg.kappa_abs)
        .map_err(|e| anyhow!("channel parameters: {e}"))?
        .with_gains(
            db_to_linear(cfg.gains_dbi[0]),
            db_to_linear(cfg.gains_dbi[1]),
            db_to_linear(cfg.gains_dbi[2]),
            db_to_linear(cfg.gains_dbi[3]),
        );
    let cee = CeeParams::new(cfg.sigma2_g, cfg.sigma2_big_g).map_err(|e| anyhow!("CEE: {e}"))?;
    let noise_w = noise_power(cfg.noise_density_dbm_hz, cfg.bandwidth_hz(), cfg.noise_figure_db);
    let p_uplink = dbm_to_watts(cfg.uplink_power_dbm);
    let p_ap = dbm_to_watts(cfg.ap_power_dbm);

    // Uplink: MMSE receive combining per surface.
    let mut ul_sums = Vec::with_capacity(topology.uplink_irs.len());
    let mut ul_sinr = Vec::with_capacity(topology.uplink_irs.len());
    for surface in &topology.uplink_irs {
        let link = surface_channels(
            &thz,
            cfg.antennas,
            surface,
            &topology.uplink_devices,
            &topology.ap,
            &cee,
            cfg.elements_per_side,
        )?;
        let powers = vec![p_uplink; link.channels.len()];
        let ens = LinkEnsemble::new(link.channels, powers, noise_w)
            .map_err(|e| anyhow!("uplink ensemble: {e}"))?;
        let decoders = mmse_receive_vectors(&ens).map_err(|e| anyhow!("MMSE receive: {e}"))?;
        let sinr = uplink_sinr(&ens, &decoders);
        ul_sums.push(sum_rate(&sinr));
        ul_sinr.push(sinr);
    }

    // Downlink: MMSE beamforming, then water-filling, per surface.
    let mut dl_sums = Vec::with_capacity(topology.downlink_irs.len());
    let mut dl_sinr = Vec::with_capacity(topology.downlink_irs.len());
    let mut power_records = Vec::with_capacity(topology.downlink_irs.len());
    for surface in &topology.downlink_irs {
        let link = surface_channels(
            &thz,
            cfg.antennas,
            surface,
            &topology.downlink_devices,
            &topology.ap,
            &cee,
            cfg.elements_per_side,
        )?;
        let j = link.channels.len();
        let uniform = LinkEnsemble::new(link.channels.clone(), vec![p_ap / j as f64; j], noise_w)
            .map_err(|e| anyhow!("downlink ensemble: {e}"))?;
        let beams = mmse_beamformers(&uniform).map_err(|e| anyhow!("MMSE beamforming: {e}"))?;
        let instance =
            WaterfillInstance::from_beamforming(&link.channels, &beams, noise_w, p_ap)
                .map_err(|e| anyhow!("water-filling instance: {e}"))?;
        let alloc = waterfill(&instance, &WaterfillOptions::default())
            .map_err(|e| anyhow!("water-filling: {e}"))?;
        let ens = LinkEnsemble::new(link.channels, alloc.powers.clone(), noise_w)
            .map_err(|e| anyhow!("downlink ensemble: {e}"))?;
        let sinr = downlink_sinr(&ens, &beams);
        dl_sums.push(sum_rate(&sinr));
        dl_sinr.push(sinr);
        power_records.push(power_record(&alloc));
    }

    // Association on the bottleneck rate matrix.
    let rate_matrix = RateMatrix::from_link_sums(&ul_sums, &dl_sums)
        .map_err(|e| anyhow!("rate matrix: {e}"))?;
    let mut assoc_rng = assoc_stream(seed, step);
    let mut algorithms = Vec::with_capacity(cfg.algos.len());
    for algo in &cfg.algos {
        let assoc = run_algorithm(*algo, &rate_matrix, cfg.es_cap, &mut assoc_rng)?;
        algorithms.push(AlgoRecord::new(&assoc, &rate_matrix, cfg.coherence_slots));
    }
    enforce_per_trial_ordering(&algorithms)?;

    Ok(TrialReport {
        seed,
        step,
        topology: TopologyRecord::from(topology),
        ul_sums,
        dl_sums,
        ul_sinr,
        dl_sinr,
        power: power_records,
        algorithms,
        wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// The deferred-acceptance matching is stable by construction, and at
/// zero overhead the exhaustive optimum dominates every other strategy.
/// Violations would mean a pipeline bug, so every trial asserts them.
fn enforce_per_trial_ordering(records: &[AlgoRecord]) -> Result<()> {
    let slack = 1e-9;
    let find = |tag: &str| records.iter().find(|r| r.algorithm == tag);
    if let Some(gs) = find("gs") {
        if !gs.stable {
            return Err(anyhow!("deferred acceptance produced an unstable matching"));
        }
        if let Some(es) = find("es") {
            if gs.sum_rate > es.sum_rate + slack {
                return Err(anyhow!(
                    "ordering violated: gs {} > es {}",
                    gs.sum_rate,
                    es.sum_rate
                ));
            }
        }
    }
    if let Some(es) = find("es") {
        for tag in ["greedy", "random"] {
            if let Some(other) = find(tag) {
                if other.sum_rate > es.sum_rate + slack {
                    return Err(anyhow!(
                        "ordering violated: {tag} {} > es {}",
                        other.sum_rate,
                        es.sum_rate
                    ));
                }
            }
        }
    }
    if let (Some(gs), Some(ra)) = (find("gs"), find("random")) {
        if ra.sum_rate > gs.sum_rate + slack {
            return Err(anyhow!(
                "ordering violated: random {} > gs {}",
                ra.sum_rate,
                gs.sum_rate
            ));
        }
    }
    Ok(())
}

fn run_algorithm(
    algo: Algorithm,
    r: &RateMatrix,
    es_cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Association> {
    Ok(match algo {
        Algorithm::GaleShapley => gale_shapley(&build_preferences(r), r),
        Algorithm::Exhaustive => {
            exhaustive(r, es_cap).map_err(|e| anyhow!("exhaustive search: {e}"))?
        }
        Algorithm::Greedy => greedy(r, rng),
        Algorithm::Random => random_assoc(r.rows(), r.cols(), rng),
    })
}

fn power_record(alloc: &PowerAllocation) -> PowerRecord {
    PowerRecord {
        powers: alloc.powers.clone(),
        mu: alloc.mu,
        sweeps: alloc.sweeps,
        converged: alloc.converged,
        kkt_residual: alloc.kkt_residual,
    }
}

/// Association randomness derives from `(seed, step)` so an evaluation at
/// step `s` is identical whether or not earlier steps were also evaluated.
fn assoc_stream(seed: u64, step: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x5DEE_CE66))
}

/// Build the cascaded channels of every device through one surface.
///
/// Per-element path lengths drive the phases; the surface and array
/// centers drive the (per-element constant) pathloss, with the whole
/// cascaded amplitude carried on the device-side segment. The reflection
/// phases align the cascade for the first device in `devices` (the group
/// head) at the first AP antenna.
fn surface_channels(
    thz: &ThzParams,
    antenna_count: usize,
    surface: &Point3,
    devices: &[Point3],
    ap: &Point3,
    cee: &CeeParams,
    elements_per_side: usize,
) -> Result<SurfaceLink> {
    let spacing = thz.element_spacing_m();
    let elements = element_grid(surface, elements_per_side, spacing);
    let antennas = antenna_array(ap, antenna_count, spacing);
    let n = elements.len();
    let k = antennas.len();

    let g_ap = CMat::from_fn(k, n, |kk, nn| {
        Complex64::cis(-thz.wavenumber * antennas[kk].distance(&elements[nn]))
    });
    let gram = g_ap.gram();

    let d_elements_to_ref: Vec<f64> = elements.iter().map(|e| e.distance(&antennas[0])).collect();
    let d_head: Vec<f64> = elements.iter().map(|e| e.distance(&devices[0])).collect();
    let phases = optimal_phase_config(&d_head, &d_elements_to_ref, thz.wavenumber)
        .context("phase configuration")?;

    let d_surface_ap = surface.distance(ap);
    let mut channels = Vec::with_capacity(devices.len());
    for dev in devices {
        let ell = pathloss_cascaded(dev.distance(surface), d_surface_ap, thz)
            .context("cascaded pathloss")?;
        let d_dev: Vec<f64> = elements.iter().map(|e| e.distance(dev)).collect();
        let g_dev = segment_channel(&d_dev, &vec![ell; n], thz.wavenumber)
            .context("device segment")?;
        let ch = cascade_with_gram(&g_ap, &gram, &phases, &g_dev, cee).context("cascade")?;
        channels.push(ch);
    }
    Ok(SurfaceLink { channels })
}

/// Run one trial: sample the topology from the trial seed, advance the
/// configured number of mobility slots, and evaluate the pipeline.
pub fn run_trial(cfg: &ExperimentConfig, seed: u64) -> Result<TrialReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = MobileState::sample(cfg, &mut rng)?;
    for _ in 0..cfg.mobility_steps {
        state.step(cfg, &mut rng)?;
    }
    evaluate(cfg, &state.topology, seed, cfg.mobility_steps)
}

/// The rate a sweep aggregates: the association objective, with the
/// overhead discount when configured, scaled to bits/s on the frequency
/// axis.
fn sweep_rate(cfg: &ExperimentConfig, axis: SweepAxis, record: &AlgoRecord) -> f64 {
    let rate = if cfg.overhead {
        record.e2e_rate
    } else {
        record.sum_rate
    };
    if axis == SweepAxis::FrequencyGhz {
        rate * cfg.bandwidth_hz()
    } else {
        rate
    }
}

/// Sweep an axis: for each value, average `trials` trials with paired
/// seeds `base_seed + trial_index`, one row per (value, algorithm).
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
) -> Result<SweepTable> {
    if values.is_empty() {
        return Ok(SweepTable {
            axis: axis.name().to_string(),
            rows: Vec::new(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(anyhow!("sweep values must be distinct"));
    }

    // Validate every configuration up front so errors surface before the
    // parallel batch starts.
    let configs: Vec<ExperimentConfig> = sorted
        .iter()
        .map(|&v| {
            let c = apply_axis(cfg, axis, v)?;
            c.validate().map_err(|e| anyhow!("config at {v}: {e}"))?;
            Ok(c)
        })
        .collect::<Result<_>>()?;

    // trial-major results: per trial, the per-(value, algorithm) rates.
    let per_trial: Vec<Vec<Vec<(f64, u64)>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = cfg.base_seed.wrapping_add(t as u64);
            if axis == SweepAxis::TimeSlot {
                trajectory_cells(cfg, &configs, &sorted, seed)
            } else {
                sorted
                    .iter()
                    .zip(&configs)
                    .map(|(_, c)| {
                        let report = run_trial(c, seed)?;
                        Ok(report
                            .algorithms
                            .iter()
                            .map(|a| (sweep_rate(c, axis, a), a.tau))
                            .collect())
                    })
                    .collect()
            }
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (vi, (&value, vcfg)) in sorted.iter().zip(&configs).enumerate() {
        for (ai, algo) in vcfg.algos.iter().enumerate() {
            let samples: Vec<f64> = per_trial.iter().map(|t| t[vi][ai].0).collect();
            let taus: Vec<f64> = per_trial.iter().map(|t| t[vi][ai].1 as f64).collect();
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let stderr = if samples.len() > 1 {
                let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
                    / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            rows.push(SweepRow {
                axis_value: value,
                algorithm: algo.tag().to_string(),
                mean_rate: mean,
                stderr,
                mean_tau: taus.iter().sum::<f64>() / n,
                trials,
            });
        }
    }
    Ok(SweepTable {
        axis: axis.name().to_string(),
        rows,
    })
}

/// Time-slot axis: walk one trajectory per seed and evaluate the pipeline
/// at each requested step.
fn trajectory_cells(
    cfg: &ExperimentConfig,
    configs: &[ExperimentConfig],
    steps: &[f64],
    seed: u64,
) -> Result<Vec<Vec<(f64, u64)>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = MobileState::sample(cfg, &mut rng)?;
    let mut out = Vec::with_capacity(steps.len());
    let mut current = 0u64;
    for (&step_value, c) in steps.iter().zip(configs) {
        let target = step_value as u64;
        while current < target {
            state.step(cfg, &mut rng)?;
            current += 1;
        }
        let report = evaluate(c, &state.topology, seed, current)?;
        out.push(
            report
                .algorithms
                .iter()
                .map(|a| (sweep_rate(c, SweepAxis::TimeSlot, a), a.tau))
                .collect(),
        );
    }
    Ok(out)
}

/// Run the configured number of independent trials sequentially seeded
/// from the base seed.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, cfg.base_seed.wrapping_add(t as u64)))
        .collect()
}
