//! Histogram filter over the square search area.
//!
//! The search area is split into `n x n` square cells; each weight is the
//! probability that the transmitter sits in that cell. Cells are indexed
//! row-major by `(north index, east index)` with the origin cell at the
//! south-west corner, and likelihoods are always evaluated at cell centers.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::{SourcePosition, UavState};
use crate::sensors::{
    BearingModel, BearingObservation, FovModel, FovObservation, BEARING_DENSITY_FLOOR,
};

/// Normalized probability mass over the search grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBelief {
    area_side_m: f64,
    cell_side_m: f64,
    n_per_side: usize,
    weights: Vec<f64>,
}

impl GridBelief {
    /// Uniform belief over an `area_side_m` square split into cells of
    /// `cell_side_m`. The area side must be an exact integer multiple of the
    /// cell side.
    pub fn uniform(area_side_m: f64, cell_side_m: f64) -> Result<Self> {
        let n_per_side = checked_cells_per_side(area_side_m, cell_side_m)?;
        let n_cells = n_per_side * n_per_side;
        Ok(Self {
            area_side_m,
            cell_side_m,
            n_per_side,
            weights: vec![1.0 / n_cells as f64; n_cells],
        })
    }

    /// Build a belief from explicit weights (row-major, length `n^2`).
    /// Weights must be non-negative and sum to 1 within 1e-9; they are
    /// renormalized to sum to 1.
    pub fn from_weights(area_side_m: f64, cell_side_m: f64, weights: Vec<f64>) -> Result<Self> {
        let n_per_side = checked_cells_per_side(area_side_m, cell_side_m)?;
        if weights.len() != n_per_side * n_per_side {
            return Err(Error::InvalidParameter(format!(
                "expected {} weights, got {}",
                n_per_side * n_per_side,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "belief weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "belief weights must sum to 1 within 1e-9, got {sum}"
            )));
        }
        let mut b = Self {
            area_side_m,
            cell_side_m,
            n_per_side,
            weights,
        };
        b.normalize(sum);
        Ok(b)
    }

    pub fn area_side_m(&self) -> f64 {
        self.area_side_m
    }

    pub fn cell_side_m(&self) -> f64 {
        self.cell_side_m
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn n_cells(&self) -> usize {
        self.weights.len()
    }

    /// Row-major weights, `(north index, east index)` order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, north_idx: usize, east_idx: usize) -> f64 {
        self.weights[north_idx * self.n_per_side + east_idx]
    }

    /// Center of cell `(north_idx, east_idx)` relative to the south-west
    /// corner of the search area.
    pub fn cell_center(&self, north_idx: usize, east_idx: usize) -> SourcePosition {
        SourcePosition::new(
            (north_idx as f64 + 0.5) * self.cell_side_m,
            (east_idx as f64 + 0.5) * self.cell_side_m,
        )
    }

    /// Center of the cell at a row-major index.
    pub fn cell_center_at(&self, idx: usize) -> SourcePosition {
        self.cell_center(idx / self.n_per_side, idx % self.n_per_side)
    }

    /// Iterate `(weight, cell center)` pairs in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, SourcePosition)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (w, self.cell_center_at(i)))
    }

    /// Shannon entropy in nats, with the `0 ln 0 = 0` convention.
    pub fn entropy(&self) -> f64 {
        -self
            .weights
            .iter()
            .filter(|w| **w > 0.0)
            .map(|w| w * w.ln())
            .sum::<f64>()
    }

    /// Largest single-cell probability.
    pub fn max_norm(&self) -> f64 {
        self.weights.iter().fold(0.0f64, |m, &w| m.max(w))
    }

    /// Center of the maximum-weight cell; ties break to the lowest row-major
    /// index.
    pub fn map_estimate(&self) -> SourcePosition {
        let mut best = 0;
        let mut best_w = self.weights[0];
        for (i, &w) in self.weights.iter().enumerate().skip(1) {
            if w > best_w {
                best = i;
                best_w = w;
            }
        }
        self.cell_center_at(best)
    }

    /// Bayes update with an arbitrary per-cell likelihood, then renormalize.
    ///
    /// Errors with [`Error::BeliefContradiction`] if every cell ends at zero
    /// weight, which is possible only for zero-noise sensor configurations.
    pub fn update_with(&mut self, mut likelihood: impl FnMut(&SourcePosition) -> f64) -> Result<()> {
        let n = self.n_per_side;
        let mut sum = 0.0;
        for r in 0..n {
            for c in 0..n {
                let idx = r * n + c;
                let w = self.weights[idx];
                if w == 0.0 {
                    continue;
                }
                let updated = w * likelihood(&self.cell_center(r, c));
                self.weights[idx] = updated;
                sum += updated;
            }
        }
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::BeliefContradiction);
        }
        self.normalize(sum);
        Ok(())
    }

    fn normalize(&mut self, sum: f64) {
        let inv = 1.0 / sum;
        for w in &mut self.weights {
            *w *= inv;
        }
    }

    /// Write the belief as `row,col,weight` CSV, row-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "row,col,weight")?;
        for r in 0..self.n_per_side {
            for c in 0..self.n_per_side {
                writeln!(out, "{r},{c},{}", self.weight(r, c))?;
            }
        }
        Ok(())
    }
}

fn checked_cells_per_side(area_side_m: f64, cell_side_m: f64) -> Result<usize> {
    if !area_side_m.is_finite() || area_side_m <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "area side must be positive, got {area_side_m}"
        )));
    }
    if !cell_side_m.is_finite() || cell_side_m <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cell side must be positive, got {cell_side_m}"
        )));
    }
    let ratio = area_side_m / cell_side_m;
    let n = ratio.round();
    if n < 1.0 || (n * cell_side_m - area_side_m).abs() > 1e-9 * area_side_m {
        return Err(Error::InvalidParameter(format!(
            "area side {area_side_m} is not an integer multiple of cell side {cell_side_m}"
        )));
    }
    Ok(n as usize)
}

/// Bayes update for a binary FOV observation (likelihoods at cell centers).
pub fn bayes_update_fov(
    b: &mut GridBelief,
    m: &FovModel,
    x: &UavState,
    z: FovObservation,
) -> Result<()> {
    b.update_with(|center| m.likelihood(x, center, z))
}

/// Bayes update for a bearing observation using the discretized
/// [`BEARING_BIN_COUNT`](crate::sensors::BEARING_BIN_COUNT)-bin observation
/// model, the same model the planner takes expectations over. The planned
/// information of a bearing measurement therefore equals the information the
/// filter actually extracts. Bin masses are floored like the continuous
/// density so an extreme-noise observation cannot zero the belief.
pub fn bayes_update_bearing(
    b: &mut GridBelief,
    m: &BearingModel,
    x: &UavState,
    obs: BearingObservation,
) -> Result<()> {
    let bin = crate::sensors::bearing_bin_index(obs.bearing_deg());
    b.update_with(|center| {
        m.bin_probability(bin, crate::geometry::bearing_or_zero(x, center))
            .max(BEARING_DENSITY_FLOOR)
    })
}

/// Bayes update for a bearing observation using the continuous Gaussian
/// density; coincident cell centers contribute at bearing 0.
pub fn bayes_update_bearing_density(
    b: &mut GridBelief,
    m: &BearingModel,
    x: &UavState,
    obs: BearingObservation,
) -> Result<()> {
    b.update_with(|center| m.likelihood_at(obs, crate::geometry::bearing_or_zero(x, center)))
}

/// Predictive observation probability `P(z | b, x_next)`: the belief-weighted
/// sensor likelihood over all cells.
///
/// The rear probability is the exact complement of the front probability, so
/// the two observations always sum to 1.
pub fn predictive_obs_prob(
    b: &GridBelief,
    m: &FovModel,
    x_next: &UavState,
    z: FovObservation,
) -> f64 {
    let p_front: f64 = b
        .cells()
        .map(|(w, center)| w * m.prob_front(x_next, &center))
        .sum();
    match z {
        FovObservation::Front => p_front,
        FovObservation::Rear => 1.0 - p_front,
    }
}
