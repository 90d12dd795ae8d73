//! Trigonometric kernels and temporal-spacing statistics.
//!
//! Provides the Dirichlet and Fejér kernels in closed form, the shifted and
//! scaled Dirichlet kernel of observation times, the four kernel-product
//! time integrals used by the asymptotic-variance estimator, and the cubic
//! variation of time that drives the asynchronicity bias.
//!
//! All time integrands here are piecewise constant between observation
//! times, so integrals over step functions are computed exactly by sweeping
//! the merged breakpoint lattice; no quadrature error except where an outer
//! integral is explicitly sampled (see [`theta_integrals`]).

use std::f64::consts::PI;

use crate::error::{Result, VolError};
use crate::grid::ObservationGrid;

/// Below this magnitude of `sin(pi x)` the closed forms are evaluated at
/// their removable-singularity limit.
const SIN_GUARD: f64 = 1e-8;

/// `q`-order Dirichlet kernel `D^q(x) = sum_{|s|<=q} e^{i 2 pi s x}`.
///
/// Evaluates the closed form `sin(pi (2q+1) x) / sin(pi x)` away from
/// integers and the limit `2q + 1` at integers; continuous everywhere.
pub fn dirichlet_kernel(q: usize, x: f64) -> f64 {
    let s = (PI * x).sin();
    if s.abs() < SIN_GUARD {
        (2 * q + 1) as f64
    } else {
        (PI * (2 * q + 1) as f64 * x).sin() / s
    }
}

/// Fejér kernel of order `M >= 1`: `F^M(x) = sin(pi M x)^2 / (M sin(pi x)^2)`
/// away from integers, `M` at integers. Non-negative everywhere.
pub fn fejer_kernel(m: usize, x: f64) -> f64 {
    debug_assert!(m >= 1, "Fejér order must be positive");
    let s = (PI * x).sin();
    if s.abs() < SIN_GUARD {
        m as f64
    } else {
        let t = (PI * m as f64 * x).sin();
        t * t / (m as f64 * s * s)
    }
}

/// Shifted and scaled Dirichlet kernel of observation times:
/// `d_{jk}(t, u) = D^N((theta_j(t) - theta_k(u)) / T) / (2N + 1)`.
///
/// Bounded in `[-1, 1]`, equal to 1 exactly when the two step functions
/// agree, and periodic in the step-function difference with period `T`.
pub fn scaled_dirichlet(
    grid_j: &ObservationGrid,
    grid_k: &ObservationGrid,
    n_freq: usize,
    t: f64,
    u: f64,
) -> Result<f64> {
    let t_window = common_window(&[grid_j, grid_k])?;
    let x = (grid_j.theta_bar(t) - grid_k.theta_bar(u)) / t_window;
    Ok(dirichlet_kernel(n_freq, x) / (2 * n_freq + 1) as f64)
}

pub(crate) fn common_window(grids: &[&ObservationGrid]) -> Result<f64> {
    let t0 = grids[0].window();
    for g in grids.iter().skip(1) {
        if (g.window() - t0).abs() > 1e-9 * t0.max(1.0) {
            return Err(VolError::Config(format!(
                "grids have mismatched window lengths: {} vs {}",
                t0,
                g.window()
            )));
        }
    }
    Ok(t0)
}

/// Exact integral over `[0, t_upper]` of a product of two step functions,
/// each piecewise constant on its own breakpoint list. The integrand value
/// on a merged segment is supplied by `integrand(ia, ib)` where `ia`/`ib`
/// index the current segments (value index clamped to the last breakpoint
/// beyond the grids).
pub(crate) fn merged_step_integral<F: FnMut(usize, usize) -> f64>(
    times_a: &[f64],
    times_b: &[f64],
    t_upper: f64,
    mut integrand: F,
) -> f64 {
    let na = times_a.len();
    let nb = times_b.len();
    let mut acc = 0.0;
    let mut cur = 0.0f64;
    let (mut ia, mut ib) = (0usize, 0usize);
    while cur < t_upper {
        let end_a = if ia < na { times_a[ia] } else { f64::INFINITY };
        let end_b = if ib < nb { times_b[ib] } else { f64::INFINITY };
        let next = end_a.min(end_b).min(t_upper);
        if next > cur {
            acc += integrand(ia.min(na - 1), ib.min(nb - 1)) * (next - cur);
        }
        if next >= t_upper {
            break;
        }
        if end_a <= next {
            ia += 1;
        }
        if end_b <= next {
            ib += 1;
        }
        cur = next;
    }
    acc
}

/// Values of the factor `u -> D^N((a - theta_grid(u)) / T) / (2N+1)` on the
/// grid's step segments; entry `i` is the value on `(tau_{i-1}, tau_i]`.
pub(crate) fn dirichlet_factor_values(
    a: f64,
    grid: &ObservationGrid,
    n_freq: usize,
    t_window: f64,
) -> Vec<f64> {
    let scale = 1.0 / (2 * n_freq + 1) as f64;
    grid.times()
        .iter()
        .map(|&tau| dirichlet_kernel(n_freq, (a - tau) / t_window) * scale)
        .collect()
}

/// Exact integral `int_0^t d(a1, theta_{g1}(u)) d(a2, theta_{g2}(u)) du`
/// of a product of two scaled Dirichlet factors with fixed first arguments.
/// This is the inner time integral of the asymptotic-variance estimator.
pub fn kernel_product_integral(
    a1: f64,
    g1: &ObservationGrid,
    a2: f64,
    g2: &ObservationGrid,
    n_freq: usize,
    t_upper: f64,
) -> Result<f64> {
    let t_window = common_window(&[g1, g2])?;
    let v1 = dirichlet_factor_values(a1, g1, n_freq, t_window);
    let v2 = dirichlet_factor_values(a2, g2, n_freq, t_window);
    Ok(merged_step_integral(g1.times(), g2.times(), t_upper, |i, j| {
        v1[i] * v2[j]
    }))
}

/// Cumulative kernel-product time integrals on a uniform grid.
///
/// `tilde/acute/check/grave` hold `int_0^t N int_0^u d.d dv du` for the
/// four argument configurations of the paired scaled Dirichlet kernels;
/// for synchronous grids every curve approaches `(T/4) t` as `N` grows.
#[derive(Debug, Clone)]
pub struct ThetaIntegrals {
    pub t_grid: Vec<f64>,
    pub tilde: Vec<f64>,
    pub acute: Vec<f64>,
    pub check: Vec<f64>,
    pub grave: Vec<f64>,
}

/// Computes the four theta integrals by midpoint quadrature in the outer
/// time variable (step `quad_step`) and exact integration in the inner one.
///
/// `quad_step` should not exceed the smallest observation spacing; the
/// integrands are piecewise constant between grid points, so at that
/// resolution only the boundary cells carry quadrature error.
pub fn theta_integrals(
    grid_j: &ObservationGrid,
    grid_k: &ObservationGrid,
    grid_l: &ObservationGrid,
    grid_m: &ObservationGrid,
    n_freq: usize,
    quad_step: f64,
    b: usize,
) -> Result<ThetaIntegrals> {
    if !(quad_step > 0.0) {
        return Err(VolError::Config(format!(
            "quadrature step must be positive, got {quad_step}"
        )));
    }
    if b == 0 {
        return Err(VolError::Config("theta-integral grid needs b >= 1".into()));
    }
    let t_window = common_window(&[grid_j, grid_k, grid_l, grid_m])?;
    let t_grid: Vec<f64> = (0..=b).map(|h| h as f64 * t_window / b as f64).collect();
    let mut out = ThetaIntegrals {
        t_grid,
        tilde: vec![0.0; b + 1],
        acute: vec![0.0; b + 1],
        check: vec![0.0; b + 1],
        grave: vec![0.0; b + 1],
    };

    let n_scale = n_freq as f64;
    let n_cells = (t_window / quad_step).ceil() as usize;
    let mut cum = [0.0f64; 4];
    let mut gi = 1usize;
    for i in 0..n_cells {
        let lo = i as f64 * quad_step;
        let hi = ((i + 1) as f64 * quad_step).min(t_window);
        while gi < out.t_grid.len() && out.t_grid[gi] <= lo + 1e-12 * t_window {
            out.tilde[gi] = cum[0];
            out.acute[gi] = cum[1];
            out.check[gi] = cum[2];
            out.grave[gi] = cum[3];
            gi += 1;
        }
        let u = 0.5 * (lo + hi);
        let a_j = grid_j.theta_bar(u);
        let a_k = grid_k.theta_bar(u);
        let a_l = grid_l.theta_bar(u);
        let a_m = grid_m.theta_bar(u);
        let w = n_scale * (hi - lo);
        cum[0] += w * kernel_product_integral(a_j, grid_k, a_l, grid_m, n_freq, u)?;
        cum[1] += w * kernel_product_integral(a_j, grid_k, a_m, grid_l, n_freq, u)?;
        cum[2] += w * kernel_product_integral(a_k, grid_j, a_l, grid_m, n_freq, u)?;
        cum[3] += w * kernel_product_integral(a_k, grid_j, a_m, grid_l, n_freq, u)?;
    }
    while gi < out.t_grid.len() {
        out.tilde[gi] = cum[0];
        out.acute[gi] = cum[1];
        out.check[gi] = cum[2];
        out.grave[gi] = cum[3];
        gi += 1;
    }
    Ok(out)
}

/// Cubic variation of time
/// `P^n_{jk}(t) = n_min^2 int_0^t [theta_j(u) - theta_k(u)]^2 du`,
/// computed exactly over the piecewise-constant segments of the two step
/// functions. Zero for synchronous grids; non-negative and non-decreasing.
pub fn cubic_variation(
    grid_j: &ObservationGrid,
    grid_k: &ObservationGrid,
    n_min: usize,
    t: f64,
) -> f64 {
    let times_j = grid_j.times();
    let times_k = grid_k.times();
    let scale = (n_min as f64) * (n_min as f64);
    scale
        * merged_step_integral(times_j, times_k, t.max(0.0), |i, j| {
            let d = times_j[i] - times_k[j];
            d * d
        })
}

/// Cubic variation evaluated at every point of an ascending time grid in a
/// single sweep of the merged breakpoints.
pub fn cubic_variation_curve(
    grid_j: &ObservationGrid,
    grid_k: &ObservationGrid,
    n_min: usize,
    ts: &[f64],
) -> Vec<f64> {
    debug_assert!(ts.windows(2).all(|w| w[1] >= w[0]));
    let times_j = grid_j.times();
    let times_k = grid_k.times();
    let scale = (n_min as f64) * (n_min as f64);
    let mut out = Vec::with_capacity(ts.len());
    let mut prev_t = 0.0f64;
    let mut cum = 0.0f64;
    for &t in ts {
        if t > prev_t {
            // integrate the missing piece [prev_t, t]
            cum += integrate_diff_sq_between(times_j, times_k, prev_t, t);
            prev_t = t;
        }
        out.push(scale * cum);
    }
    out
}

fn integrate_diff_sq_between(times_a: &[f64], times_b: &[f64], lo: f64, hi: f64) -> f64 {
    let na = times_a.len();
    let nb = times_b.len();
    let mut ia = times_a.partition_point(|&tau| tau < lo);
    let mut ib = times_b.partition_point(|&tau| tau < lo);
    let mut acc = 0.0;
    let mut cur = lo;
    while cur < hi {
        let end_a = if ia < na { times_a[ia] } else { f64::INFINITY };
        let end_b = if ib < nb { times_b[ib] } else { f64::INFINITY };
        let next = end_a.min(end_b).min(hi);
        if next > cur {
            let d = times_a[ia.min(na - 1)] - times_b[ib.min(nb - 1)];
            acc += d * d * (next - cur);
        }
        if next >= hi {
            break;
        }
        if end_a <= next {
            ia += 1;
        }
        if end_b <= next {
            ib += 1;
        }
        cur = next;
    }
    acc
}
