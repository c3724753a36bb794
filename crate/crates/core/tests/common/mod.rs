//! Shared generators for the oracle test suites.

use irslink_core::channel::{cascade, CascadedChannel, CeeParams, PhaseConfig};
use irslink_core::linalg::CMat;
use irslink_core::linproc::LinkEnsemble;
use irslink_core::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn gaussian_vec<R: Rng>(len: usize, rng: &mut R) -> Vec<Complex64> {
    (0..len).map(|_| gaussian_complex(rng)).collect()
}

pub fn gaussian_mat<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = gaussian_complex(rng);
        }
    }
    m
}

/// Random unit-norm complex vector.
pub fn random_unit_vec<R: Rng>(len: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v = gaussian_vec(len, rng);
    irslink_core::linalg::normalize(&mut v);
    v
}

/// A cascaded channel with random segments and a random (feasible)
/// reflection configuration, exercising the full error-statistics path.
pub fn random_channel<R: Rng>(
    antennas: usize,
    elements: usize,
    cee: &CeeParams,
    rng: &mut R,
) -> CascadedChannel {
    let g_ap = gaussian_mat(antennas, elements, rng);
    let g_dev = gaussian_vec(elements, rng);
    let amps: Vec<f64> = (0..elements).map(|_| rng.random_range(0.3..=1.0)).collect();
    let phases: Vec<f64> = (0..elements)
        .map(|_| rng.random_range(0.0..core::f64::consts::TAU))
        .collect();
    let cfg = PhaseConfig::new(amps, phases).unwrap();
    cascade(&g_ap, &cfg, &g_dev, cee).unwrap()
}

/// Ensemble of random cascaded channels with random powers.
pub fn random_ensemble<R: Rng>(
    antennas: usize,
    elements: usize,
    devices: usize,
    cee: &CeeParams,
    noise: f64,
    rng: &mut R,
) -> LinkEnsemble {
    let channels = (0..devices)
        .map(|_| random_channel(antennas, elements, cee, rng))
        .collect();
    let powers = (0..devices).map(|_| rng.random_range(0.2..=2.0)).collect();
    LinkEnsemble::new(channels, powers, noise).unwrap()
}

/// Smallest eigenvalue of a Hermitian matrix, via cyclic Jacobi on the
/// real symmetric embedding `[[Re, -Im], [Im, Re]]`. Independent of the
/// library's factorizations; test use only.
pub fn min_eigenvalue_hermitian(m: &CMat) -> f64 {
    let k = m.rows();
    assert_eq!(k, m.cols());
    let n = 2 * k;
    let mut a = vec![vec![0.0f64; n]; n];
    for i in 0..k {
        for j in 0..k {
            let z = m[(i, j)];
            a[i][j] = z.re;
            a[i][j + k] = -z.im;
            a[i + k][j] = z.im;
            a[i + k][j + k] = z.re;
        }
    }
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-30 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p][i];
                    let aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}
