//! Shared test support: random beliefs and brute-force information oracles
//! kept independent of the library's planning code paths.
//!
//! Each integration test target uses its own subset of these helpers.
#![allow(dead_code)]

use rand::Rng;

use fovloc_core::belief::GridBelief;
use fovloc_core::sensors::{BearingModel, FovModel, FovObservation, BEARING_BIN_COUNT};
use fovloc_core::{SourcePosition, UavState};

/// Random normalized belief over an `n x n` grid of 5 m cells.
pub fn random_belief<R: Rng>(rng: &mut R, n_per_side: usize) -> GridBelief {
    let mut weights: Vec<f64> = (0..n_per_side * n_per_side)
        .map(|_| rng.random::<f64>())
        .collect();
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    GridBelief::from_weights(n_per_side as f64 * 5.0, 5.0, weights).unwrap()
}

fn entropy_of(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| w * w.ln())
        .sum::<f64>()
}

/// Brute-force mutual information for the binary FOV observation: enumerate
/// both observations, form each posterior explicitly, and take
/// `H(b) - E_z[H(posterior | z)]`.
pub fn fov_mi_posterior_oracle(b: &GridBelief, m: &FovModel, x_next: &UavState) -> f64 {
    let prior: Vec<f64> = b.weights().to_vec();
    let centers: Vec<SourcePosition> = (0..b.n_cells()).map(|i| b.cell_center_at(i)).collect();
    let mut expected_posterior_entropy = 0.0;
    for z in FovObservation::ALL {
        let unnormalized: Vec<f64> = prior
            .iter()
            .zip(&centers)
            .map(|(w, c)| w * m.likelihood(x_next, c, z))
            .collect();
        let p_z: f64 = unnormalized.iter().sum();
        if p_z <= 0.0 {
            continue; // impossible observation contributes nothing
        }
        let posterior: Vec<f64> = unnormalized.iter().map(|w| w / p_z).collect();
        expected_posterior_entropy += p_z * entropy_of(&posterior);
    }
    entropy_of(&prior) - expected_posterior_entropy
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Independent bin mass: integrate the Gaussian over every 360-degree image
/// of the absolute bin interval (no wrapping tricks, no cutoff).
pub fn bearing_bin_mass_oracle(sigma_deg: f64, bin_idx: usize, true_bearing_deg: f64) -> f64 {
    let width = 360.0 / BEARING_BIN_COUNT as f64;
    let lo = bin_idx as f64 * width;
    let hi = lo + width;
    let mut mass = 0.0;
    for wrap in -2..=2 {
        let shift = 360.0 * f64::from(wrap);
        mass += normal_cdf((hi + shift - true_bearing_deg) / sigma_deg)
            - normal_cdf((lo + shift - true_bearing_deg) / sigma_deg);
    }
    mass
}

/// Brute-force expected entropy reduction of one bearing measurement taken
/// at `(north, east)`: direct sum over all 36 bins x all cells with explicit
/// posteriors.
pub fn bearing_mi_posterior_oracle(
    b: &GridBelief,
    m: &BearingModel,
    north_m: f64,
    east_m: f64,
) -> f64 {
    let prior: Vec<f64> = b.weights().to_vec();
    let bearings: Vec<f64> = (0..b.n_cells())
        .map(|i| {
            let c = b.cell_center_at(i);
            let dn = c.north_m() - north_m;
            let de = c.east_m() - east_m;
            if (dn * dn + de * de).sqrt() < 1e-6 {
                0.0
            } else {
                de.atan2(dn).to_degrees().rem_euclid(360.0)
            }
        })
        .collect();
    let mut expected_posterior_entropy = 0.0;
    for bin in 0..BEARING_BIN_COUNT {
        let unnormalized: Vec<f64> = prior
            .iter()
            .zip(&bearings)
            .map(|(w, beta)| w * bearing_bin_mass_oracle(m.sigma_deg(), bin, *beta))
            .collect();
        let p_bin: f64 = unnormalized.iter().sum();
        if p_bin <= 0.0 {
            continue;
        }
        let posterior: Vec<f64> = unnormalized.iter().map(|w| w / p_bin).collect();
        expected_posterior_entropy += p_bin * entropy_of(&posterior);
    }
    entropy_of(&prior) - expected_posterior_entropy
}
