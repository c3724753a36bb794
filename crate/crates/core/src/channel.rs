//! Cascaded terahertz channel model.
//!
//! Every link runs device -> reflecting surface -> access point (or the
//! reverse); direct paths are assumed blocked. A cascaded channel is the
//! elementwise product of two deterministic line-of-sight segments through
//! the surface's reflection coefficients. Pathloss combines the diffuse
//! reflection aperture term with molecular absorption, and channel
//! estimation error (CEE) enters statistically: estimated channels are the
//! simulation primitives and the error only shows up through its variance
//! in SINR expressions, plus [`inject_cee`] for drawing explicit error
//! realizations.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{norm_sq, CMat};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelError {
    /// A segment distance was zero or negative.
    NonPositiveDistance,
    /// Physical parameters out of range (non-positive gains, area, ...).
    InvalidParams,
    /// Vector or matrix dimensions do not agree.
    DimensionMismatch,
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::NonPositiveDistance => write!(f, "segment distances must be positive"),
            ChannelError::InvalidParams => write!(f, "channel parameters out of range"),
            ChannelError::DimensionMismatch => write!(f, "channel dimensions do not agree"),
        }
    }
}

impl core::error::Error for ChannelError {}

/// Carrier-dependent physical constants of the THz link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThzParams {
    pub carrier_freq_hz: f64,
    pub wavelength_m: f64,
    /// Wavenumber `2*pi / lambda` in 1/m.
    pub wavenumber: f64,
    /// Molecular absorption coefficient in 1/m.
    pub kappa_abs: f64,
    /// Side length of one reflecting element, `0.4 * lambda` by default.
    pub element_side_m: f64,
    /// Element aperture area in m^2.
    pub element_area_m2: f64,
    /// Linear antenna/element gains; all default to 1 (0 dBi).
    pub gain_ap: f64,
    pub gain_elem_in: f64,
    pub gain_elem_out: f64,
    pub gain_device: f64,
}

impl ThzParams {
    /// Derive wavelength-coupled quantities from the carrier frequency.
    pub fn from_frequency(carrier_freq_hz: f64, kappa_abs: f64) -> Result<Self, ChannelError> {
        if !(carrier_freq_hz > 0.0) || kappa_abs < 0.0 {
            return Err(ChannelError::InvalidParams);
        }
        let wavelength_m = SPEED_OF_LIGHT / carrier_freq_hz;
        let element_side_m = 0.4 * wavelength_m;
        Ok(Self {
            carrier_freq_hz,
            wavelength_m,
            wavenumber: TAU / wavelength_m,
            kappa_abs,
            element_side_m,
            element_area_m2: element_side_m * element_side_m,
            gain_ap: 1.0,
            gain_elem_in: 1.0,
            gain_elem_out: 1.0,
            gain_device: 1.0,
        })
    }

    pub fn with_gains(mut self, ap: f64, elem_in: f64, elem_out: f64, device: f64) -> Self {
        self.gain_ap = ap;
        self.gain_elem_in = elem_in;
        self.gain_elem_out = elem_out;
        self.gain_device = device;
        self
    }

    /// Element grid spacing, half a wavelength.
    pub fn element_spacing_m(&self) -> f64 {
        0.5 * self.wavelength_m
    }
}

/// Cascaded pathloss of a device -> surface -> access point link.
///
/// `d1` and `d2` are the two segment lengths in meters. The linear power
/// gain is
/// `G_ap * G_in * G_out * G_dev * A^2 * exp(-kappa*(d1+d2)) / (4*pi*d1*d2)^2`,
/// strictly decreasing in each distance and in the absorption coefficient.
pub fn pathloss_cascaded(d1: f64, d2: f64, params: &ThzParams) -> Result<f64, ChannelError> {
    if !(d1 > 0.0) || !(d2 > 0.0) {
        return Err(ChannelError::NonPositiveDistance);
    }
    if !(params.element_area_m2 > 0.0)
        || params.kappa_abs < 0.0
        || !(params.gain_ap > 0.0)
        || !(params.gain_elem_in > 0.0)
        || !(params.gain_elem_out > 0.0)
        || !(params.gain_device > 0.0)
    {
        return Err(ChannelError::InvalidParams);
    }
    let gains = params.gain_ap * params.gain_elem_in * params.gain_elem_out * params.gain_device;
    let area_sq = params.element_area_m2 * params.element_area_m2;
    let absorption = (-params.kappa_abs * (d1 + d2)).exp();
    let spread = 4.0 * PI * d1 * d2;
    Ok(gains * area_sq * absorption / (spread * spread))
}

/// One line-of-sight segment: element `n` is `sqrt(l_n) * exp(-j*w*d_n)`.
pub fn segment_channel(
    distances: &[f64],
    pathloss: &[f64],
    wavenumber: f64,
) -> Result<Vec<Complex64>, ChannelError> {
    if distances.len() != pathloss.len() {
        return Err(ChannelError::DimensionMismatch);
    }
    if pathloss.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(ChannelError::InvalidParams);
    }
    if distances.iter().any(|&d| d < 0.0) {
        return Err(ChannelError::NonPositiveDistance);
    }
    Ok(distances
        .iter()
        .zip(pathloss)
        .map(|(&d, &l)| Complex64::cis(-wavenumber * d) * l.sqrt())
        .collect())
}

/// Add an estimation-error realization to an estimated channel.
///
/// The error entries are i.i.d. circular complex Gaussian with per-entry
/// variance `sigma2` times the mean per-entry power of `g_hat`, which makes
/// `sigma2` the normalized CEE variance: the correlation between true and
/// estimated channels is `1 / sqrt(1 + sigma2)`.
pub fn inject_cee<R: Rng + ?Sized>(
    g_hat: &[Complex64],
    sigma2: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    if sigma2 == 0.0 || g_hat.is_empty() {
        return g_hat.to_vec();
    }
    let mean_power = norm_sq(g_hat) / g_hat.len() as f64;
    // Split the complex variance evenly over the real and imaginary parts.
    let comp_std = (0.5 * sigma2 * mean_power).sqrt();
    g_hat
        .iter()
        .map(|&g| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g + Complex64::new(re * comp_std, im * comp_std)
        })
        .collect()
}

/// Normalized CEE variances for the two cascade segments.
///
/// Both are relative to the mean per-entry power of the corresponding
/// estimated segment; zero means perfect CSI on that segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeeParams {
    /// Variance of the device <-> surface segment error.
    pub sigma2_device_irs: f64,
    /// Variance of the surface <-> access point segment error.
    pub sigma2_irs_ap: f64,
}

impl CeeParams {
    pub const fn perfect() -> Self {
        Self {
            sigma2_device_irs: 0.0,
            sigma2_irs_ap: 0.0,
        }
    }

    pub fn new(sigma2_device_irs: f64, sigma2_irs_ap: f64) -> Result<Self, ChannelError> {
        if sigma2_device_irs < 0.0 || sigma2_irs_ap < 0.0 {
            return Err(ChannelError::InvalidParams);
        }
        Ok(Self {
            sigma2_device_irs,
            sigma2_irs_ap,
        })
    }

    /// Correlation `1/sqrt(1 + sigma2)` implied by a normalized variance.
    pub fn correlation(sigma2: f64) -> f64 {
        1.0 / (1.0 + sigma2).sqrt()
    }
}

/// Per-element reflection coefficients of one surface.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl PhaseConfig {
    /// Build a configuration, normalizing phases into `[0, 2*pi)`.
    /// Amplitudes must lie in `[0, 1]`.
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self, ChannelError> {
        if amplitudes.len() != phases.len() {
            return Err(ChannelError::DimensionMismatch);
        }
        if amplitudes.iter().any(|&k| !(0.0..=1.0).contains(&k)) {
            return Err(ChannelError::InvalidParams);
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(Self { amplitudes, phases })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Diagonal entries `kappa_n * exp(j*theta_n)` of the reflection matrix.
    pub fn reflection_coefficients(&self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .map(|(&k, &t)| Complex64::cis(t) * k)
            .collect()
    }
}

fn wrap_phase(t: f64) -> f64 {
    let mut r = t % TAU;
    if r < 0.0 {
        r += TAU;
    }
    r
}

/// Phase configuration that makes all cascaded per-element terms add
/// coherently: `theta_n = w * (d_in_n + d_out_n)` with unit amplitudes.
///
/// With this configuration the cascaded channel magnitude at the reference
/// antenna equals the coherent sum of the per-element amplitudes, which by
/// the triangle inequality no feasible configuration can exceed.
pub fn optimal_phase_config(
    d_device_to_elements: &[f64],
    d_elements_to_ap: &[f64],
    wavenumber: f64,
) -> Result<PhaseConfig, ChannelError> {
    if d_device_to_elements.len() != d_elements_to_ap.len() {
        return Err(ChannelError::DimensionMismatch);
    }
    let phases = d_device_to_elements
        .iter()
        .zip(d_elements_to_ap)
        .map(|(&din, &dout)| wrap_phase(wavenumber * (din + dout)))
        .collect();
    let amplitudes = alloc::vec![1.0; d_device_to_elements.len()];
    PhaseConfig::new(amplitudes, phases)
}

/// One device's cascaded channel with its CEE statistics.
///
/// `h_hat` is the estimated effective channel seen at the array. The error
/// covariance of the cascaded estimation error is
/// `s_dev * G G^H + s_ap * |g|^2 * I`, where `s_dev`/`s_ap` are the
/// segment variances scaled by the mean per-entry power of the respective
/// estimated segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedChannel {
    /// Estimated effective channel, one entry per AP antenna.
    pub h_hat: Vec<Complex64>,
    /// Cascaded error covariance (Hermitian PSD, antennas x antennas).
    pub err_cov: CMat,
    /// Device-segment variance scaled to absolute units.
    pub sigma2_dev_eff: f64,
    /// AP-segment variance scaled to absolute units.
    pub sigma2_ap_eff: f64,
    /// Squared norm of the estimated device-side segment.
    pub g_norm_sq: f64,
}

impl CascadedChannel {
    pub fn antennas(&self) -> usize {
        self.h_hat.len()
    }

    /// Mean estimation-error power `E|v^H h_err|^2` seen through a filter
    /// `v`, including the second-order segment-error cross term.
    pub fn cee_power(&self, v: &[Complex64]) -> f64 {
        crate::linalg::quadratic_form(&self.err_cov, v)
            + self.sigma2_dev_eff * self.sigma2_ap_eff * norm_sq(v)
    }

    /// Accumulate the CEE covariance (cross term included) scaled by `s`.
    pub fn add_cee_covariance(&self, acc: &mut CMat, s: f64) {
        acc.add_scaled(&self.err_cov, s);
        acc.add_scaled_identity(s * self.sigma2_dev_eff * self.sigma2_ap_eff);
    }
}

/// Compose a cascaded channel from its segments.
///
/// `g_ap` is the surface -> AP segment (antennas x elements), `g_dev` the
/// device -> surface segment, and `phases` the surface configuration. The
/// same composition serves the downlink with the roles of the segments
/// swapped.
pub fn cascade(
    g_ap: &CMat,
    phases: &PhaseConfig,
    g_dev: &[Complex64],
    cee: &CeeParams,
) -> Result<CascadedChannel, ChannelError> {
    let gram = g_ap.gram();
    cascade_with_gram(g_ap, &gram, phases, g_dev, cee)
}

/// [`cascade`] with a precomputed `g_ap * g_ap^H`, so the Gram matrix can
/// be shared across all devices reflecting off the same surface.
pub fn cascade_with_gram(
    g_ap: &CMat,
    gram: &CMat,
    phases: &PhaseConfig,
    g_dev: &[Complex64],
    cee: &CeeParams,
) -> Result<CascadedChannel, ChannelError> {
    let n = g_ap.cols();
    let k = g_ap.rows();
    if phases.len() != n || g_dev.len() != n || gram.rows() != k || gram.cols() != k {
        return Err(ChannelError::DimensionMismatch);
    }
    if cee.sigma2_device_irs < 0.0 || cee.sigma2_irs_ap < 0.0 {
        return Err(ChannelError::InvalidParams);
    }

    let reflected: Vec<Complex64> = phases
        .reflection_coefficients()
        .iter()
        .zip(g_dev)
        .map(|(r, g)| r * g)
        .collect();
    let h_hat = g_ap.matvec(&reflected);

    let g_norm_sq = norm_sq(g_dev);
    let dev_mean_power = if n > 0 { g_norm_sq / n as f64 } else { 0.0 };
    let ap_mean_power = if n > 0 && k > 0 {
        gram.trace_real() / (k * n) as f64
    } else {
        0.0
    };
    let sigma2_dev_eff = cee.sigma2_device_irs * dev_mean_power;
    let sigma2_ap_eff = cee.sigma2_irs_ap * ap_mean_power;

    let mut err_cov = CMat::zeros(k, k);
    err_cov.add_scaled(gram, sigma2_dev_eff);
    err_cov.add_scaled_identity(sigma2_ap_eff * g_norm_sq);

    Ok(CascadedChannel {
        h_hat,
        err_cov,
        sigma2_dev_eff,
        sigma2_ap_eff,
        g_norm_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn unit_params() -> ThzParams {
        let mut p = ThzParams::from_frequency(SPEED_OF_LIGHT, 0.0).unwrap();
        p.element_side_m = 1.0;
        p.element_area_m2 = 1.0;
        p
    }

    #[test]
    fn pathloss_unit_inputs() {
        // Unit gains, unit aperture, no absorption, both segments 1 m.
        let l = pathloss_cascaded(1.0, 1.0, &unit_params()).unwrap();
        assert_relative_eq!(l, 1.0 / (16.0 * PI * PI), max_relative = 1e-12);
    }

    #[test]
    fn pathloss_absorption_factor() {
        let mut p = unit_params();
        let base = pathloss_cascaded(12.0, 8.0, &p).unwrap();
        p.kappa_abs = 0.0033;
        let absorbed = pathloss_cascaded(12.0, 8.0, &p).unwrap();
        assert_relative_eq!(absorbed / base, (-0.066f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(absorbed / base, 0.93613, max_relative = 1e-5);
    }

    #[test]
    fn pathloss_doubling_distance() {
        let mut p = unit_params();
        p.kappa_abs = 0.01;
        let l1 = pathloss_cascaded(3.0, 5.0, &p).unwrap();
        let l2 = pathloss_cascaded(6.0, 5.0, &p).unwrap();
        assert_relative_eq!(l1 / l2, 4.0 * (0.01f64 * 3.0).exp(), max_relative = 1e-12);
    }

    #[test]
    fn pathloss_rejects_degenerate_geometry() {
        let p = unit_params();
        assert_eq!(
            pathloss_cascaded(0.0, 1.0, &p).unwrap_err(),
            ChannelError::NonPositiveDistance
        );
        assert_eq!(
            pathloss_cascaded(1.0, -2.0, &p).unwrap_err(),
            ChannelError::NonPositiveDistance
        );
    }

    #[test]
    fn segment_channel_phase_and_modulus() {
        let g = segment_channel(&[0.0], &[1.0], 5.0).unwrap();
        assert!((g[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        // Half-wavelength path: w*d = pi flips the sign.
        let g = segment_channel(&[PI / 3.0], &[1.0], 3.0).unwrap();
        assert!((g[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let distances = [1.0, 2.5, 7.0];
        let pathloss = [0.3, 1.7, 0.02];
        let g = segment_channel(&distances, &pathloss, 11.0).unwrap();
        for (gn, &l) in g.iter().zip(&pathloss) {
            assert_relative_eq!(gn.norm_sqr(), l, max_relative = 1e-12);
        }
    }

    #[test]
    fn inject_cee_zero_variance_is_identity() {
        let g = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        use rand::SeedableRng;
        let out = inject_cee(&g, 0.0, &mut rng);
        assert_eq!(out, g);
    }

    #[test]
    fn correlation_closed_form() {
        assert_relative_eq!(CeeParams::correlation(3.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(CeeParams::correlation(0.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn optimal_phases_zero_distance() {
        let cfg = optimal_phase_config(&[0.0, 0.0], &[0.0, 0.0], 7.0).unwrap();
        assert_eq!(cfg.phases(), &[0.0, 0.0]);
        assert_eq!(cfg.amplitudes(), &[1.0, 1.0]);
    }

    #[test]
    fn two_element_coherence_versus_antiphase() {
        // Equal per-element pathloss l: coherent power 4l, anti-phase 0.
        let l = 0.37;
        let w = 9.0;
        let d_dev = [1.0, 2.0];
        let d_ap = [4.0, 3.5];
        let g_dev = segment_channel(&d_dev, &[l, l], w).unwrap();
        let g_ap = CMat::from_fn(1, 2, |_, n| Complex64::cis(-w * d_ap[n]));
        let cfg = optimal_phase_config(&d_dev, &d_ap, w).unwrap();
        let ch = cascade(&g_ap, &cfg, &g_dev, &CeeParams::perfect()).unwrap();
        assert_relative_eq!(ch.h_hat[0].norm_sqr(), 4.0 * l, max_relative = 1e-12);

        // Flip one element by pi to cancel the pair.
        let anti = PhaseConfig::new(
            vec![1.0, 1.0],
            vec![cfg.phases()[0], cfg.phases()[1] + PI],
        )
        .unwrap();
        let ch = cascade(&g_ap, &anti, &g_dev, &CeeParams::perfect()).unwrap();
        assert!(ch.h_hat[0].norm_sqr() < 1e-24);
    }

    #[test]
    fn cascade_scalar_case_matches_hand_computation() {
        let g_ap = CMat::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0));
        let g_dev = vec![Complex64::new(1.0, 0.0)];
        let phases = PhaseConfig::new(vec![1.0], vec![0.0]).unwrap();
        let cee = CeeParams::new(0.3, 0.2).unwrap();
        let ch = cascade(&g_ap, &phases, &g_dev, &cee).unwrap();
        assert!((ch.h_hat[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_relative_eq!(ch.err_cov[(0, 0)].re, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn cascade_perfect_csi_zero_covariance() {
        let g_ap = CMat::from_fn(3, 2, |k, n| Complex64::cis(0.3 * (k * 2 + n) as f64));
        let g_dev = vec![Complex64::new(0.5, 0.1), Complex64::new(-0.2, 0.7)];
        let phases = PhaseConfig::new(vec![1.0, 0.8], vec![0.1, 4.0]).unwrap();
        let ch = cascade(&g_ap, &phases, &g_dev, &CeeParams::perfect()).unwrap();
        assert_eq!(ch.err_cov.frobenius_norm_sq(), 0.0);
        assert_eq!(ch.cee_power(&[Complex64::ONE; 3]), 0.0);
    }

    #[test]
    fn cascade_rejects_dimension_mismatch() {
        let g_ap = CMat::zeros(2, 3);
        let g_dev = vec![Complex64::ZERO; 2];
        let phases = PhaseConfig::new(vec![1.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(
            cascade(&g_ap, &phases, &g_dev, &CeeParams::perfect()).unwrap_err(),
            ChannelError::DimensionMismatch
        );
    }
}
