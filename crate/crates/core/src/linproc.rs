//! Linear processing under imperfect CSI: MMSE receive combining for the
//! uplink, MMSE transmit beamforming for the downlink, the corresponding
//! SINR expressions, and rate accounting.
//!
//! Two independent SINR routes are kept on purpose. [`uplink_sinr`] and
//! [`downlink_sinr`] evaluate the operational definitions term by term for
//! arbitrary unit-norm filters; [`mmse_sinr`] evaluates the closed-form
//! quadratic form that the MMSE solution attains. At the MMSE filters the
//! two agree to numerical precision, which the test suite checks.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

use crate::channel::CascadedChannel;
use crate::linalg::{dot_conj, norm_sq, normalize, CMat, LinalgError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinprocError {
    /// Channel, power, or filter dimensions disagree.
    DimensionMismatch,
    /// Noise power must be strictly positive.
    NonPositiveNoise,
    /// Transmit powers must be non-negative.
    NegativePower,
    /// The interference-plus-noise matrix could not be factorized.
    Singular,
    /// Association overhead exceeds the coherence interval.
    OverheadExceedsInterval,
}

impl fmt::Display for LinprocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinprocError::DimensionMismatch => write!(f, "ensemble dimensions do not agree"),
            LinprocError::NonPositiveNoise => write!(f, "noise power must be positive"),
            LinprocError::NegativePower => write!(f, "transmit powers must be non-negative"),
            LinprocError::Singular => write!(f, "interference-plus-noise matrix is singular"),
            LinprocError::OverheadExceedsInterval => {
                write!(f, "overhead slots exceed the coherence interval")
            }
        }
    }
}

impl core::error::Error for LinprocError {}

impl From<LinalgError> for LinprocError {
    fn from(_: LinalgError) -> Self {
        LinprocError::Singular
    }
}

/// One link direction through a single surface: the cascaded channels of
/// every device it serves, their transmit powers, and the receiver noise.
#[derive(Debug, Clone)]
pub struct LinkEnsemble {
    pub channels: Vec<CascadedChannel>,
    pub powers: Vec<f64>,
    pub noise_power: f64,
}

impl LinkEnsemble {
    pub fn new(
        channels: Vec<CascadedChannel>,
        powers: Vec<f64>,
        noise_power: f64,
    ) -> Result<Self, LinprocError> {
        if channels.is_empty() || channels.len() != powers.len() {
            return Err(LinprocError::DimensionMismatch);
        }
        let k = channels[0].antennas();
        if channels.iter().any(|c| c.antennas() != k) {
            return Err(LinprocError::DimensionMismatch);
        }
        if powers.iter().any(|&p| p < 0.0) {
            return Err(LinprocError::NegativePower);
        }
        if !(noise_power > 0.0) {
            return Err(LinprocError::NonPositiveNoise);
        }
        Ok(Self {
            channels,
            powers,
            noise_power,
        })
    }

    pub fn devices(&self) -> usize {
        self.channels.len()
    }

    pub fn antennas(&self) -> usize {
        self.channels[0].antennas()
    }

    /// Interference-plus-noise covariance excluding device `i`'s own signal:
    /// noise, every device's CEE covariance, and the other devices'
    /// estimated-channel outer products.
    fn interference_matrix(&self, i: usize) -> CMat {
        let k = self.antennas();
        let mut m = CMat::scaled_identity(k, self.noise_power);
        for (idx, (ch, &p)) in self.channels.iter().zip(&self.powers).enumerate() {
            if p == 0.0 {
                continue;
            }
            ch.add_cee_covariance(&mut m, p);
            if idx != i {
                m.add_scaled_outer(&ch.h_hat, p);
            }
        }
        m
    }
}

/// MMSE receive filters, one unit-norm vector per uplink device.
///
/// Each filter is the regularized-inverse direction
/// `(noise + sum CEE covariances + interfering outer products)^-1 h_i`,
/// scaled to unit norm.
pub fn mmse_receive_vectors(ens: &LinkEnsemble) -> Result<Vec<Vec<Complex64>>, LinprocError> {
    (0..ens.devices())
        .map(|i| {
            let m = ens.interference_matrix(i);
            let mut v = m.hermitian_solve(&ens.channels[i].h_hat)?;
            normalize(&mut v);
            Ok(v)
        })
        .collect()
}

/// MMSE transmit beamforming directions for the downlink. Same
/// regularized-inverse structure as the receive filters, applied to the
/// downlink ensemble.
pub fn mmse_beamformers(ens: &LinkEnsemble) -> Result<Vec<Vec<Complex64>>, LinprocError> {
    mmse_receive_vectors(ens)
}

/// Closed-form SINR attained by the MMSE filters:
/// `p_i * h_i^H M_i^-1 h_i` with `M_i` the interference-plus-noise matrix.
pub fn mmse_sinr(ens: &LinkEnsemble) -> Result<Vec<f64>, LinprocError> {
    (0..ens.devices())
        .map(|i| {
            let m = ens.interference_matrix(i);
            let h = &ens.channels[i].h_hat;
            let x = m.hermitian_solve(h)?;
            Ok(ens.powers[i] * dot_conj(h, &x).re)
        })
        .collect()
}

/// Uplink SINR of every device for the given receive filters.
///
/// Evaluated term by term: desired power over other-device interference,
/// every device's estimation-error power through the filter, and filtered
/// noise. Filters need not be unit norm; the expression is scale-invariant.
pub fn uplink_sinr(ens: &LinkEnsemble, decoders: &[Vec<Complex64>]) -> Vec<f64> {
    assert_eq!(decoders.len(), ens.devices(), "one decoder per device");
    (0..ens.devices())
        .map(|i| {
            let v = &decoders[i];
            let vn = norm_sq(v);
            let desired = ens.powers[i] * dot_conj(v, &ens.channels[i].h_hat).norm_sqr();
            let mut denom = ens.noise_power * vn;
            for (idx, (ch, &p)) in ens.channels.iter().zip(&ens.powers).enumerate() {
                if p == 0.0 {
                    continue;
                }
                if idx != i {
                    denom += p * dot_conj(v, &ch.h_hat).norm_sqr();
                }
                denom += p * ch.cee_power(v);
            }
            desired / denom
        })
        .collect()
}

/// Downlink SINR of every device for the given beamforming directions.
///
/// Mirrors the uplink expression with the roles swapped: device `j` hears
/// its own channel through every beam, and its estimation error applies to
/// each beam it receives.
pub fn downlink_sinr(ens: &LinkEnsemble, beams: &[Vec<Complex64>]) -> Vec<f64> {
    assert_eq!(beams.len(), ens.devices(), "one beam per device");
    (0..ens.devices())
        .map(|j| {
            let ch = &ens.channels[j];
            let desired = ens.powers[j] * dot_conj(&ch.h_hat, &beams[j]).norm_sqr();
            let mut denom = ens.noise_power;
            for (jp, (beam, &p)) in beams.iter().zip(&ens.powers).enumerate() {
                if p == 0.0 {
                    continue;
                }
                if jp != j {
                    denom += p * dot_conj(&ch.h_hat, beam).norm_sqr();
                }
                denom += p * ch.cee_power(beam);
            }
            desired / denom
        })
        .collect()
}

/// Matched-filter (maximum ratio) directions, a baseline for the MMSE
/// filters.
pub fn mrt_vectors(ens: &LinkEnsemble) -> Vec<Vec<Complex64>> {
    ens.channels
        .iter()
        .map(|c| {
            let mut v = c.h_hat.clone();
            normalize(&mut v);
            v
        })
        .collect()
}

/// Zero-forcing directions: columns of `H (H^H H)^-1`, normalized. Fails
/// if the stacked channels are rank deficient.
pub fn zf_vectors(ens: &LinkEnsemble) -> Result<Vec<Vec<Complex64>>, LinprocError> {
    let k = ens.antennas();
    let n = ens.devices();
    if n > k {
        return Err(LinprocError::DimensionMismatch);
    }
    // Gram of the stacked channel matrix: G[a][b] = h_a^H h_b.
    let gram = CMat::from_fn(n, n, |a, b| {
        dot_conj(&ens.channels[a].h_hat, &ens.channels[b].h_hat)
    });
    let chol = gram.cholesky().map_err(|_| LinprocError::Singular)?;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = alloc::vec![Complex64::ZERO; n];
        e[j] = Complex64::ONE;
        let coeff = chol.solve(&e);
        let mut v = alloc::vec![Complex64::ZERO; k];
        for (c, ch) in coeff.iter().zip(&ens.channels) {
            for (vk, hk) in v.iter_mut().zip(&ch.h_hat) {
                *vk += c * hk;
            }
        }
        normalize(&mut v);
        out.push(v);
    }
    Ok(out)
}

/// Sum spectral efficiency `sum log2(1 + sinr)` in bits/s/Hz.
pub fn sum_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|&g| (1.0 + g).log2()).sum()
}

/// End-to-end rate of an uplink/downlink surface pairing: the bottleneck
/// of the two sum rates, discounted by the fraction of the coherence
/// interval spent on association.
pub fn e2e_rate(
    ul_sum: f64,
    dl_sum: f64,
    tau_slots: u64,
    coherence_slots: u64,
) -> Result<f64, LinprocError> {
    if coherence_slots == 0 || tau_slots > coherence_slots {
        return Err(LinprocError::OverheadExceedsInterval);
    }
    let frac = 1.0 - tau_slots as f64 / coherence_slots as f64;
    Ok(frac * ul_sum.min(dl_sum))
}
