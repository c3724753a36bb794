//! Downlink power allocation by iterative water-filling.
//!
//! Given fixed beamforming directions, each device's optimal power has a
//! closed form: the gap between a common water level (set by the budget
//! multiplier `mu`) and the device's interference-plus-noise floor, shrunk
//! by its own estimation-error penalty and clamped at zero. The solver
//! sweeps the devices Gauss-Seidel style, recomputing interference, the
//! bisected multiplier, and the closed form until the allocation stops
//! moving, then checks the stationarity system it solves.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::channel::CascadedChannel;
use crate::linalg::dot_conj;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerError {
    /// Matrix and vector dimensions disagree.
    DimensionMismatch,
    /// Gains, noise, or budget out of range.
    InvalidInstance,
    /// `mu * |w|^2 + upsilon` must be positive in the closed form.
    NonPositiveMultiplier,
    /// Every device has zero effective gain; the budget cannot be spent.
    AllGainsZero,
}

impl fmt::Display for PowerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerError::DimensionMismatch => write!(f, "instance dimensions do not agree"),
            PowerError::InvalidInstance => write!(f, "instance parameters out of range"),
            PowerError::NonPositiveMultiplier => {
                write!(f, "multiplier combination must be positive")
            }
            PowerError::AllGainsZero => write!(f, "no device has positive effective gain"),
        }
    }
}

impl core::error::Error for PowerError {}

/// Scalarized allocation problem for one downlink surface.
///
/// All gains are linear power gains after beamforming: `cross_gains[j][jp]`
/// is the desired-signal gain of beam `jp` at device `j` (the diagonal is
/// the device's own effective gain), and `cee_cross[j][jp]` is device `j`'s
/// estimation-error power through beam `jp` (the diagonal is the own-beam
/// CEE penalty in the closed form's denominator).
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillInstance {
    pub cross_gains: Vec<Vec<f64>>,
    pub cee_cross: Vec<Vec<f64>>,
    pub beam_norms_sq: Vec<f64>,
    pub noise: Vec<f64>,
    pub budget: f64,
}

impl WaterfillInstance {
    pub fn new(
        cross_gains: Vec<Vec<f64>>,
        cee_cross: Vec<Vec<f64>>,
        beam_norms_sq: Vec<f64>,
        noise: Vec<f64>,
        budget: f64,
    ) -> Result<Self, PowerError> {
        let j = cross_gains.len();
        if j == 0
            || cee_cross.len() != j
            || beam_norms_sq.len() != j
            || noise.len() != j
            || cross_gains.iter().any(|r| r.len() != j)
            || cee_cross.iter().any(|r| r.len() != j)
        {
            return Err(PowerError::DimensionMismatch);
        }
        let finite_nonneg = |rows: &[Vec<f64>]| {
            rows.iter()
                .all(|r| r.iter().all(|&x| x.is_finite() && x >= 0.0))
        };
        if !finite_nonneg(&cross_gains)
            || !finite_nonneg(&cee_cross)
            || beam_norms_sq.iter().any(|&w| !(w > 0.0))
            || noise.iter().any(|&s| !(s > 0.0))
            || !(budget > 0.0)
        {
            return Err(PowerError::InvalidInstance);
        }
        Ok(Self {
            cross_gains,
            cee_cross,
            beam_norms_sq,
            noise,
            budget,
        })
    }

    /// Build the instance from cascaded channels and beam directions.
    pub fn from_beamforming(
        channels: &[CascadedChannel],
        beams: &[Vec<Complex64>],
        noise_power: f64,
        budget: f64,
    ) -> Result<Self, PowerError> {
        let j = channels.len();
        if beams.len() != j {
            return Err(PowerError::DimensionMismatch);
        }
        let mut cross_gains = vec![vec![0.0; j]; j];
        let mut cee_cross = vec![vec![0.0; j]; j];
        for (row, ch) in channels.iter().enumerate() {
            for (col, beam) in beams.iter().enumerate() {
                cross_gains[row][col] = dot_conj(&ch.h_hat, beam).norm_sqr();
                cee_cross[row][col] = ch.cee_power(beam);
            }
        }
        let beam_norms_sq = beams.iter().map(|b| crate::linalg::norm_sq(b)).collect();
        Self::new(
            cross_gains,
            cee_cross,
            beam_norms_sq,
            vec![noise_power; j],
            budget,
        )
    }

    pub fn devices(&self) -> usize {
        self.noise.len()
    }

    /// Own effective gain of device `j`.
    pub fn direct_gain(&self, j: usize) -> f64 {
        self.cross_gains[j][j]
    }

    /// Own-beam CEE penalty of device `j` (the closed form's denominator
    /// term).
    pub fn cee_own(&self, j: usize) -> f64 {
        self.cee_cross[j][j]
    }

    /// Interference seen by device `j` under allocation `p`: every other
    /// beam's desired-signal leakage plus its estimation-error power, each
    /// weighted by that beam's power.
    pub fn interference_term(&self, p: &[f64], j: usize) -> f64 {
        (0..self.devices())
            .filter(|&jp| jp != j)
            .map(|jp| p[jp] * (self.cross_gains[j][jp] + self.cee_cross[j][jp]))
            .sum()
    }

    /// Closed-form power of device `j` for water level `1/(mu*|w|^2+ups)`:
    /// gap to the floor `(iota + noise)/gain`, shrunk by `1 + cee/gain`,
    /// clamped at zero.
    pub fn closed_form_power(
        &self,
        iota_j: f64,
        mu: f64,
        upsilon_j: f64,
        j: usize,
    ) -> Result<f64, PowerError> {
        let denom_mult = mu * self.beam_norms_sq[j] + upsilon_j;
        if !(denom_mult > 0.0) {
            return Err(PowerError::NonPositiveMultiplier);
        }
        let gain = self.direct_gain(j);
        if gain == 0.0 {
            return Ok(0.0);
        }
        let water = 1.0 / denom_mult;
        let floor = (iota_j + self.noise[j]) / gain;
        let gap = water - floor;
        if gap <= 0.0 {
            return Ok(0.0);
        }
        Ok(gap / (1.0 + self.cee_own(j) / gain))
    }

    /// Weighted power spent at multiplier `mu` with interference frozen.
    fn budget_spend(&self, iota: &[f64], upsilon: &[f64], mu: f64) -> f64 {
        (0..self.devices())
            .map(|j| {
                self.beam_norms_sq[j]
                    * self
                        .closed_form_power(iota[j], mu, upsilon[j], j)
                        .unwrap_or(0.0)
            })
            .sum()
    }

    /// Budget multiplier `mu > 0` such that the closed-form allocation
    /// meets the power budget (with the given interference terms frozen).
    /// The weighted spend is continuous and non-increasing in `mu`, so a
    /// bracket expansion followed by bisection converges.
    pub fn bisect_mu(&self, iota: &[f64], upsilon: &[f64]) -> Result<f64, PowerError> {
        if iota.len() != self.devices() || upsilon.len() != self.devices() {
            return Err(PowerError::DimensionMismatch);
        }
        if (0..self.devices()).all(|j| self.direct_gain(j) == 0.0) {
            return Err(PowerError::AllGainsZero);
        }
        let mut lo = 1.0;
        let mut hi = 1.0;
        let mut guard = 0;
        while self.budget_spend(iota, upsilon, hi) > self.budget {
            hi *= 2.0;
            guard += 1;
            if guard > 4096 {
                return Err(PowerError::InvalidInstance);
            }
        }
        while self.budget_spend(iota, upsilon, lo) < self.budget {
            lo *= 0.5;
            guard += 1;
            if guard > 4096 {
                // With positive taxation the budget may never bind; the
                // smallest bracketed multiplier is then the best answer.
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.budget_spend(iota, upsilon, mid) >= self.budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 1e-15 * lo {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Sum-rate objective of an allocation, `sum log2(1 + sinr_j)`.
    pub fn objective(&self, p: &[f64]) -> f64 {
        (0..self.devices())
            .map(|j| {
                let sinr = p[j] * self.direct_gain(j)
                    / (self.interference_term(p, j) + p[j] * self.cee_own(j) + self.noise[j]);
                (1.0 + sinr).log2()
            })
            .sum()
    }

    /// Stationarity residual of an allocation: the largest relative
    /// violation of the water-level identity over devices with positive
    /// power, and of the clamp direction over devices at zero.
    pub fn kkt_residual(&self, p: &[f64], mu: f64, upsilon: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.devices() {
            let gain = self.direct_gain(j);
            if gain == 0.0 {
                continue;
            }
            let denom_mult = mu * self.beam_norms_sq[j] + upsilon[j];
            let water = 1.0 / denom_mult;
            let floor = (self.interference_term(p, j) + self.noise[j]) / gain;
            if p[j] > 0.0 {
                let lhs = p[j] * (1.0 + self.cee_own(j) / gain) + floor;
                worst = worst.max((lhs - water).abs() / water);
            } else {
                worst = worst.max((water - floor).max(0.0) / water);
            }
        }
        worst
    }
}

/// Solver knobs. `epsilon` is the absolute per-device convergence
/// threshold in watts; `upsilon` is an optional taxation vector for the
/// multiplier (zero recovers plain per-device water-filling).
#[derive(Debug, Clone)]
pub struct WaterfillOptions {
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub upsilon: Option<Vec<f64>>,
}

impl Default for WaterfillOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_sweeps: 500,
            upsilon: None,
        }
    }
}

/// Result of the iterative solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub mu: f64,
    pub upsilon: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

impl PowerAllocation {
    /// Weighted power actually spent.
    pub fn spent(&self, instance: &WaterfillInstance) -> f64 {
        self.powers
            .iter()
            .zip(&instance.beam_norms_sq)
            .map(|(&p, &w)| p * w)
            .sum()
    }
}

/// Iterative water-filling.
///
/// Starts from the uniform split, then sweeps devices: recompute the
/// interference terms, bisect the budget multiplier, and apply the closed
/// form, until no device's power moves by more than `epsilon`. Devices with
/// zero effective gain are excluded from the budget equation and held at
/// zero. If a sweep overshoots the budget the allocation is scaled back
/// onto it.
pub fn waterfill(
    instance: &WaterfillInstance,
    options: &WaterfillOptions,
) -> Result<PowerAllocation, PowerError> {
    let j_total = instance.devices();
    let upsilon = match &options.upsilon {
        Some(u) => {
            if u.len() != j_total {
                return Err(PowerError::DimensionMismatch);
            }
            u.clone()
        }
        None => vec![0.0; j_total],
    };
    if (0..j_total).all(|j| instance.direct_gain(j) == 0.0) {
        return Err(PowerError::AllGainsZero);
    }
    if !(options.epsilon > 0.0) {
        return Err(PowerError::InvalidInstance);
    }

    let mut p = vec![instance.budget / j_total as f64; j_total];
    for j in 0..j_total {
        if instance.direct_gain(j) == 0.0 {
            p[j] = 0.0;
        }
    }

    let mut mu = 0.0;
    let mut converged = false;
    let mut sweeps = 0;
    let mut iota = vec![0.0; j_total];
    while sweeps < options.max_sweeps {
        sweeps += 1;
        let mut max_delta: f64 = 0.0;
        for j in 0..j_total {
            if instance.direct_gain(j) == 0.0 {
                continue;
            }
            for (jp, slot) in iota.iter_mut().enumerate() {
                *slot = instance.interference_term(&p, jp);
            }
            mu = instance.bisect_mu(&iota, &upsilon)?;
            let next = instance.closed_form_power(iota[j], mu, upsilon[j], j)?;
            max_delta = max_delta.max((next - p[j]).abs());
            p[j] = next;
        }
        let spent: f64 = p
            .iter()
            .zip(&instance.beam_norms_sq)
            .map(|(&pj, &w)| pj * w)
            .sum();
        if spent > instance.budget {
            let scale = instance.budget / spent;
            for pj in p.iter_mut() {
                *pj *= scale;
            }
        }
        if max_delta <= options.epsilon {
            converged = true;
            break;
        }
    }

    let kkt = instance.kkt_residual(&p, mu, &upsilon);
    Ok(PowerAllocation {
        powers: p,
        mu,
        upsilon,
        sweeps,
        converged,
        kkt_residual: kkt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// CEE-free instance with given direct gains, unit beams, unit noise.
    fn plain_instance(gains: &[f64], budget: f64) -> WaterfillInstance {
        let j = gains.len();
        let mut cross = vec![vec![0.0; j]; j];
        for (i, &g) in gains.iter().enumerate() {
            cross[i][i] = g;
        }
        WaterfillInstance::new(
            cross,
            vec![vec![0.0; j]; j],
            vec![1.0; j],
            vec![1.0; j],
            budget,
        )
        .unwrap()
    }

    #[test]
    fn interference_term_edge_cases() {
        let inst = plain_instance(&[4.0], 2.0);
        assert_eq!(inst.interference_term(&[1.7], 0), 0.0);

        let mut inst2 = plain_instance(&[4.0, 1.0], 2.0);
        assert_eq!(inst2.interference_term(&[0.0, 0.0], 0), 0.0);
        // Orthogonal beams, perfect CSI: no interference at any power.
        assert_eq!(inst2.interference_term(&[5.0, 3.0], 0), 0.0);
        inst2.cross_gains[0][1] = 0.25;
        assert_relative_eq!(inst2.interference_term(&[5.0, 3.0], 0), 0.75);
    }

    #[test]
    fn closed_form_two_user_hand_example() {
        let inst = plain_instance(&[4.0, 1.0], 2.0);
        let mu = 8.0 / 13.0;
        let p0 = inst.closed_form_power(0.0, mu, 0.0, 0).unwrap();
        let p1 = inst.closed_form_power(0.0, mu, 0.0, 1).unwrap();
        assert_relative_eq!(p0, 1.375, max_relative = 1e-12);
        assert_relative_eq!(p1, 0.625, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_clamps_below_floor() {
        let inst = plain_instance(&[0.1], 2.0);
        // Water level 1/mu = 1 is below the floor (iota+noise)/gain = 10.
        assert_eq!(inst.closed_form_power(0.0, 1.0, 0.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_cee_denominator_reduces_power() {
        let mut inst = plain_instance(&[4.0], 2.0);
        let base = inst.closed_form_power(0.0, 0.5, 0.0, 0).unwrap();
        inst.cee_cross[0][0] = 2.0;
        let with_cee = inst.closed_form_power(0.0, 0.5, 0.0, 0).unwrap();
        assert!(with_cee < base);
        assert_relative_eq!(with_cee, base / 1.5, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_rejects_nonpositive_multiplier() {
        let inst = plain_instance(&[4.0], 2.0);
        assert_eq!(
            inst.closed_form_power(0.0, 0.0, 0.0, 0).unwrap_err(),
            PowerError::NonPositiveMultiplier
        );
    }

    #[test]
    fn bisect_two_user_hand_example() {
        let inst = plain_instance(&[4.0, 1.0], 2.0);
        let mu = inst.bisect_mu(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_relative_eq!(mu, 8.0 / 13.0, max_relative = 1e-10);
    }

    #[test]
    fn bisect_vanishing_budget() {
        let inst = plain_instance(&[4.0, 1.0], 1e-12);
        let mu = inst.bisect_mu(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let p0 = inst.closed_form_power(0.0, mu, 0.0, 0).unwrap();
        let p1 = inst.closed_form_power(0.0, mu, 0.0, 1).unwrap();
        assert!(p0 + p1 <= 2e-12);
    }

    #[test]
    fn bisect_all_zero_gains_is_infeasible() {
        let inst = plain_instance(&[0.0, 0.0], 2.0);
        assert_eq!(
            inst.bisect_mu(&[0.0, 0.0], &[0.0, 0.0]).unwrap_err(),
            PowerError::AllGainsZero
        );
    }

    #[test]
    fn waterfill_single_device_takes_whole_budget() {
        let mut inst = plain_instance(&[4.0], 3.0);
        inst.beam_norms_sq[0] = 1.5;
        let alloc = waterfill(&inst, &WaterfillOptions::default()).unwrap();
        assert!(alloc.converged);
        assert_relative_eq!(alloc.powers[0], 2.0, max_relative = 1e-9);
        assert_relative_eq!(alloc.spent(&inst), 3.0, max_relative = 1e-9);
    }

    #[test]
    fn waterfill_two_user_fixed_point() {
        let inst = plain_instance(&[4.0, 1.0], 2.0);
        let alloc = waterfill(&inst, &WaterfillOptions::default()).unwrap();
        assert!(alloc.converged);
        assert_relative_eq!(alloc.powers[0], 1.375, max_relative = 1e-8);
        assert_relative_eq!(alloc.powers[1], 0.625, max_relative = 1e-8);
        assert_relative_eq!(alloc.spent(&inst), 2.0, max_relative = 1e-9);
        assert!(alloc.kkt_residual <= 1e-6);
    }

    #[test]
    fn waterfill_zero_gain_device_gets_nothing() {
        let inst = plain_instance(&[4.0, 0.0], 2.0);
        let alloc = waterfill(&inst, &WaterfillOptions::default()).unwrap();
        assert_eq!(alloc.powers[1], 0.0);
        assert_relative_eq!(alloc.powers[0], 2.0, max_relative = 1e-9);
    }

    #[test]
    fn waterfill_deterministic() {
        let mut inst = plain_instance(&[4.0, 1.0, 2.5], 2.0);
        inst.cross_gains[0][1] = 0.01;
        inst.cee_cross[1][1] = 0.3;
        let a = waterfill(&inst, &WaterfillOptions::default()).unwrap();
        let b = waterfill(&inst, &WaterfillOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
