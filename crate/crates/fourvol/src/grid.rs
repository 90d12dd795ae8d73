//! Observation grids and tick series.
//!
//! An [`ObservationGrid`] holds one asset's strictly increasing observation
//! times on a window `[0, T]`. The step function `theta_bar` maps a time `t`
//! to the smallest observation time `>= t` (capped at the last observation);
//! it is the basic temporal-spacing object used by the kernel layer and the
//! inference layer.

use crate::error::{Result, VolError};

/// Strictly increasing observation times of one asset on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGrid {
    times: Vec<f64>,
    t_window: f64,
}

impl ObservationGrid {
    /// Builds a grid, validating monotonicity and the window bounds.
    pub fn new(times: Vec<f64>, t_window: f64) -> Result<Self> {
        if !(t_window > 0.0) || !t_window.is_finite() {
            return Err(VolError::Config(format!(
                "window length must be positive and finite, got {t_window}"
            )));
        }
        if times.is_empty() {
            return Err(VolError::Data("observation grid is empty".into()));
        }
        if times[0] < 0.0 {
            return Err(VolError::Data(format!(
                "first observation time {} is negative",
                times[0]
            )));
        }
        let last = *times.last().unwrap();
        if last > t_window * (1.0 + 1e-12) {
            return Err(VolError::Data(format!(
                "last observation time {last} exceeds window length {t_window}"
            )));
        }
        for (h, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(VolError::Data(format!(
                    "observation times must be strictly increasing: t[{}]={} >= t[{}]={}",
                    h,
                    w[0],
                    h + 1,
                    w[1]
                )));
            }
        }
        Ok(Self { times, t_window })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn window(&self) -> f64 {
        self.t_window
    }

    /// Number of increments `n_j` (one less than the number of observations).
    pub fn n_intervals(&self) -> usize {
        self.times.len() - 1
    }

    /// Highest alias-free frequency `floor(n_j / 2)`.
    pub fn nyquist(&self) -> usize {
        self.n_intervals() / 2
    }

    /// Step function of time: the smallest observation time `>= t`,
    /// capped at the last observation time.
    pub fn theta_bar(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&tau| tau < t);
        if idx >= self.times.len() {
            *self.times.last().unwrap()
        } else {
            self.times[idx]
        }
    }

    /// Smallest spacing `min_h Δ^j_h`.
    pub fn min_spacing(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest spacing `max_h Δ^j_h` (the observational mesh).
    pub fn max_spacing(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// True when both grids list exactly the same observation times.
    pub fn is_synchronous_with(&self, other: &Self) -> bool {
        self.t_window == other.t_window && self.times == other.times
    }
}

/// One asset's irregular observations: times and log-prices.
#[derive(Debug, Clone)]
pub struct TickSeries {
    pub asset_id: String,
    pub grid: ObservationGrid,
    pub log_prices: Vec<f64>,
}

impl TickSeries {
    pub fn new(asset_id: String, grid: ObservationGrid, log_prices: Vec<f64>) -> Result<Self> {
        if log_prices.len() != grid.times().len() {
            return Err(VolError::Data(format!(
                "asset {asset_id}: {} log-prices for {} observation times",
                log_prices.len(),
                grid.times().len()
            )));
        }
        if let Some(bad) = log_prices.iter().find(|p| !p.is_finite()) {
            return Err(VolError::Data(format!(
                "asset {asset_id}: non-finite log-price {bad}"
            )));
        }
        Ok(Self {
            asset_id,
            grid,
            log_prices,
        })
    }

    /// Number of increments `n_j`.
    pub fn n_intervals(&self) -> usize {
        self.grid.n_intervals()
    }

    /// First-order differences `δ^j_h = X(τ_h) − X(τ_{h−1})`, `h = 1..n_j`.
    pub fn increments(&self) -> Vec<f64> {
        self.log_prices.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
