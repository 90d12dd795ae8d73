//! Finite-difference realized-variance baseline.
//!
//! Local forward windows of squared increments give a rough spot-variance
//! path; the plug-in functional sums `g` of those values over the trimmed
//! native grid. Univariate and synchronous only; this is the comparison
//! method, not the estimator of record.

use nalgebra::DMatrix;

use crate::error::{Result, VolError};
use crate::functionals::VolFunctional;
use crate::grid::TickSeries;
use crate::spot::{SpotKind, SpotPath};

fn window_values(ticks: &TickSeries, k_n: usize) -> Result<Vec<f64>> {
    let n = ticks.n_intervals();
    if k_n < 1 || 2 * k_n > n {
        return Err(VolError::Config(format!(
            "window length k_n = {k_n} out of range for n = {n} (need 1 <= k_n <= n/2)"
        )));
    }
    let incs = ticks.increments();
    let times = ticks.grid.times();
    let mut prefix = vec![0.0f64];
    for d in &incs {
        prefix.push(prefix.last().unwrap() + d * d);
    }
    // spot value at observation index h from the forward window
    // (tau_h, tau_{h+k_n}], normalized by the mean spacing in the window
    Ok((0..=n - k_n)
        .map(|h| (prefix[h + k_n] - prefix[h]) / (times[h + k_n] - times[h]))
        .collect())
}

/// Local realized-variance spot estimator, resampled onto a uniform
/// `b`-point grid for comparability with the Fourier path.
pub fn rv_spot(ticks: &TickSeries, k_n: usize, b: usize) -> Result<SpotPath> {
    let vals = window_values(ticks, k_n)?;
    let times = ticks.grid.times();
    let t_window = ticks.grid.window();
    let values: Vec<DMatrix<f64>> = (0..b)
        .map(|h| {
            let t = h as f64 * t_window / b as f64;
            // last window start at or before t
            let idx = times.partition_point(|&tau| tau <= t).saturating_sub(1);
            DMatrix::from_element(1, 1, vals[idx.min(vals.len() - 1)])
        })
        .collect();
    Ok(SpotPath::from_values(
        t_window,
        1,
        SpotKind::RealizedVariance { k_n },
        values,
    ))
}

/// Plug-in functional over the trimmed native index range `[k_n, n - k_n]`:
/// `sum_h g(c_rv(tau_h)) Delta_h`.
pub fn rv_plug_in(ticks: &TickSeries, g: &dyn VolFunctional, k_n: usize) -> Result<f64> {
    let vals = window_values(ticks, k_n)?;
    let times = ticks.grid.times();
    let n = ticks.n_intervals();
    let mut acc = 0.0;
    let mut c = DMatrix::zeros(1, 1);
    for h in k_n..=(n - k_n) {
        c[(0, 0)] = vals[h];
        let v = g.eval(&c).map_err(|e| {
            VolError::Estimation(format!(
                "functional {} failed at t = {}: {e}",
                g.id(),
                times[h]
            ))
        })?;
        acc += v * (times[h] - times[h - 1]);
    }
    Ok(acc)
}
