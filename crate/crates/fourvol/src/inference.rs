//! Asymptotic-variance estimation, asynchronicity-bias estimation,
//! studentization and confidence intervals.
//!
//! The variance estimator is the quadruple-index sum over gradient products,
//! spot values and paired scaled-Dirichlet time kernels. The inner time
//! integrals have piecewise-constant integrands (step functions of the
//! observation grids), so they are computed exactly by sweeping the merged
//! breakpoint lattices; the outer integral is the `B`-point Riemann sum on
//! the spot grid. A brute-force re-evaluation without any caching is kept in
//! the test suite as the oracle for this optimized path.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, VolError};
use crate::functionals::VolFunctional;
use crate::grid::ObservationGrid;
use crate::kernels::{common_window, cubic_variation_curve, merged_step_integral};
use crate::spot::{SpotKind, SpotPath};
use crate::stats::standard_normal_quantile;

/// Kernel-evaluation budget above which the inner integrals subsample their
/// breakpoint lattices. Acceptance-scale runs stay below it.
pub const DEFAULT_KERNEL_BUDGET: u64 = 100_000_000;

/// Result of the asymptotic-variance estimator.
#[derive(Debug, Clone)]
pub struct AvarEstimate {
    /// Estimated variance of `N^(1/2) (S_hat - S)`.
    pub value: f64,
    /// Per-grid-point contributions (the outer Riemann summands), for
    /// debugging output.
    pub per_t: Vec<f64>,
    /// Breakpoint subsampling stride applied to the inner integrals
    /// (1 = exact, uncapped).
    pub stride: usize,
}

/// Estimator of the asymptotic variance of the functional estimator.
///
/// `path` must be the conditioned spot path whose `B`-grid the outer sum
/// runs over; `grids` are the per-asset observation grids and `n_freq` the
/// convolution width used to build the spectrum.
pub fn avar_estimate(
    path: &SpotPath,
    g: &dyn VolFunctional,
    grids: &[ObservationGrid],
    n_freq: usize,
    budget: Option<u64>,
) -> Result<AvarEstimate> {
    avar_estimate_multi(path, &[g], grids, n_freq, budget).map(|mut v| v.pop().unwrap())
}

/// Variance estimates for several functionals over the same spot path in a
/// single sweep: the kernel-product time integrals do not depend on the
/// functional, so they are computed once and combined with each
/// functional's gradients.
pub fn avar_estimate_multi(
    path: &SpotPath,
    gs: &[&dyn VolFunctional],
    grids: &[ObservationGrid],
    n_freq: usize,
    budget: Option<u64>,
) -> Result<Vec<AvarEstimate>> {
    let d = path.dim;
    if grids.len() != d {
        return Err(VolError::Config(format!(
            "{} observation grids for dimension {d}",
            grids.len()
        )));
    }
    let t_window = common_window(&grids.iter().collect::<Vec<_>>())?;
    let b = path.len();
    let delta_min = grids
        .iter()
        .map(|g| g.min_spacing())
        .fold(f64::INFINITY, f64::min);
    if !(delta_min > 0.0) {
        return Err(VolError::Data(
            "duplicate timestamps: smallest observation spacing is zero".into(),
        ));
    }

    // per-functional gradients on the grid; h = 1..=B, periodic wrap at h = B
    let all_grads: Vec<Vec<DMatrix<f64>>> = gs
        .iter()
        .map(|g| {
            (1..=b)
                .map(|h| g.grad(path.value_periodic(h)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;

    // entries with an identically-zero gradient (for every functional)
    // contribute nothing
    let mut active: Vec<(usize, usize)> = Vec::new();
    for j in 0..d {
        for k in 0..d {
            if all_grads
                .iter()
                .any(|grads| grads.iter().any(|m| m[(j, k)] != 0.0))
            {
                active.push((j, k));
            }
        }
    }
    if active.is_empty() {
        return Ok(gs
            .iter()
            .map(|_| AvarEstimate {
                value: 0.0,
                per_t: vec![0.0; b],
                stride: 1,
            })
            .collect());
    }

    // factor (x, y): the step function u -> d(theta_x(t_h), theta_y(u));
    // both orderings of each active entry appear in the four kernel pairings
    let mut factors: Vec<(usize, usize)> = Vec::new();
    for &(j, k) in &active {
        for f in [(j, k), (k, j)] {
            if !factors.contains(&f) {
                factors.push(f);
            }
        }
    }

    // above the kernel budget, subsample the outer Riemann sum; the inner
    // integrals stay exact (coarsening them would misweight the diagonal
    // band of the kernel products)
    let est_evals: u64 = (b as u64)
        * factors
            .iter()
            .map(|&(_, y)| grids[y].times().len() as u64)
            .sum::<u64>();
    let budget = budget.unwrap_or(DEFAULT_KERNEL_BUDGET);
    let stride = est_evals.div_ceil(budget).max(1) as usize;
    let selected: Vec<usize> = (1..=b).step_by(stride).collect();
    let lattices: Vec<&[f64]> = grids.iter().map(|g| g.times()).collect();

    let factor_index = |x: usize, y: usize| factors.iter().position(|&f| f == (x, y));
    let scale_n = n_freq as f64;
    let w_outer = t_window / selected.len() as f64;

    let contributions: Vec<Vec<f64>> = selected
        .par_iter()
        .map(|&h| {
            let t_h = h as f64 * t_window / b as f64;
            let c_hat = path.value_periodic(h);
            // theta_x(t_h) for every asset
            let thetas: Vec<f64> = grids.iter().map(|g| g.theta_bar(t_h)).collect();
            // factor value arrays on the breakpoint lattices
            let vals: Vec<Vec<f64>> = factors
                .iter()
                .map(|&(x, y)| {
                    let scale = 1.0 / (2 * n_freq + 1) as f64;
                    lattices[y]
                        .iter()
                        .map(|&tau| {
                            crate::kernels::dirichlet_kernel(n_freq, (thetas[x] - tau) / t_window)
                                * scale
                        })
                        .collect()
                })
                .collect();
            // unique unordered pair integrals over [0, t_h]
            let nf = factors.len();
            let mut pair = vec![f64::NAN; nf * nf];
            for p in 0..nf {
                for q in p..nf {
                    let (_, y1) = factors[p];
                    let (_, y2) = factors[q];
                    let v = merged_step_integral(lattices[y1], lattices[y2], t_h, |i, j| {
                        vals[p][i] * vals[q][j]
                    });
                    pair[p * nf + q] = v;
                    pair[q * nf + p] = v;
                }
            }
            let integral = |f1: Option<usize>, f2: Option<usize>| -> f64 {
                pair[f1.unwrap() * nf + f2.unwrap()]
            };

            gs.iter()
                .enumerate()
                .map(|(gi, _)| {
                    let grad = &all_grads[gi][h - 1];
                    let mut acc = 0.0;
                    for &(j, k) in &active {
                        let gjk = grad[(j, k)];
                        if gjk == 0.0 {
                            continue;
                        }
                        for &(l, m) in &active {
                            let glm = grad[(l, m)];
                            if glm == 0.0 {
                                continue;
                            }
                            // V(0): d_jk(t,.) d_lm(t,.) + d_jk(.,t) d_lm(.,t)
                            let i0 = integral(factor_index(j, k), factor_index(l, m))
                                + integral(factor_index(k, j), factor_index(m, l));
                            // V(1): d_jk(t,.) d_lm(.,t) + d_jk(.,t) d_lm(t,.)
                            let i1 = integral(factor_index(j, k), factor_index(m, l))
                                + integral(factor_index(k, j), factor_index(l, m));
                            acc += gjk
                                * glm
                                * scale_n
                                * (c_hat[(j, l)] * c_hat[(k, m)] * i0
                                    + c_hat[(j, m)] * c_hat[(k, l)] * i1);
                        }
                    }
                    w_outer * acc
                })
                .collect()
        })
        .collect();

    Ok(gs
        .iter()
        .enumerate()
        .map(|(gi, _)| {
            let mut per_t = vec![0.0f64; b];
            let mut value = 0.0;
            for (si, &h) in selected.iter().enumerate() {
                per_t[h - 1] = contributions[si][gi];
                value += contributions[si][gi];
            }
            AvarEstimate {
                value,
                per_t,
                stride,
            }
        })
        .collect())
}

/// Second-order asynchronicity-bias estimator
/// `mu_hat = -(2 pi^2 kappa^{5/2} / (3 T^2)) sum_{jk} sum_h
///  grad_jk g(c(t_h)) c_jk(t_h) [P_jk(t_h) - P_jk(t_{h-1})]`.
///
/// Exactly zero for synchronous grids and in the univariate case.
pub fn async_bias_estimate(
    path: &SpotPath,
    g: &dyn VolFunctional,
    grids: &[ObservationGrid],
    kappa: f64,
    n_min: usize,
) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(VolError::Config(format!("kappa must be positive, got {kappa}")));
    }
    let d = path.dim;
    if grids.len() != d {
        return Err(VolError::Config(format!(
            "{} observation grids for dimension {d}",
            grids.len()
        )));
    }
    let t_window = common_window(&grids.iter().collect::<Vec<_>>())?;
    let b = path.len();
    let ts: Vec<f64> = (0..=b).map(|h| h as f64 * t_window / b as f64).collect();

    let mut acc = 0.0;
    for j in 0..d {
        for k in 0..d {
            if j == k || grids[j].is_synchronous_with(&grids[k]) {
                continue;
            }
            let p_curve = cubic_variation_curve(&grids[j], &grids[k], n_min, &ts);
            for h in 1..=b {
                let dp = p_curve[h] - p_curve[h - 1];
                if dp == 0.0 {
                    continue;
                }
                let c_hat = path.value_periodic(h);
                let grad = g.grad(c_hat)?;
                acc += grad[(j, k)] * c_hat[(j, k)] * dp;
            }
        }
    }
    Ok(-(2.0 * std::f64::consts::PI.powi(2) * kappa.powf(2.5) / (3.0 * t_window * t_window)) * acc)
}

/// Studentized statistic `rate (s_hat - target) / sqrt(v_hat)`.
pub fn studentize(s_hat: f64, v_hat: f64, rate_value: f64, target: f64) -> Result<f64> {
    if !(v_hat > 0.0) {
        return Err(VolError::Inference(format!(
            "variance estimate {v_hat} is not positive; cannot studentize"
        )));
    }
    Ok(rate_value * (s_hat - target) / v_hat.sqrt())
}

/// Normal-quantile confidence interval around the bias-corrected estimate:
/// `s_hat - mu_hat/rate +- z_{1-level/2} sqrt(v_hat)/rate`.
pub fn confidence_interval(
    s_hat: f64,
    v_hat: f64,
    rate_value: f64,
    mu_hat: f64,
    level: f64,
) -> Result<(f64, f64)> {
    if !(v_hat > 0.0) {
        return Err(VolError::Inference(format!(
            "variance estimate {v_hat} is not positive; cannot form an interval"
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(VolError::Config(format!("interval level must be in (0,1), got {level}")));
    }
    let z = standard_normal_quantile(1.0 - level / 2.0);
    let center = s_hat - mu_hat / rate_value;
    let half = z * v_hat.sqrt() / rate_value;
    Ok((center - half, center + half))
}

/// Shrinkage target `c_under(t) = [d_jk(t,t) c_jk(t)]_jk`: the true path
/// damped by the diagonal-in-time scaled Dirichlet factor (simulation
/// diagnostic for the full-frequency regime). Equals `c` exactly for
/// synchronous grids; diagonal entries are always untouched.
pub fn shrinkage_target(
    true_path: &SpotPath,
    grids: &[ObservationGrid],
    n_freq: usize,
) -> Result<SpotPath> {
    let d = true_path.dim;
    if grids.len() != d {
        return Err(VolError::Config(format!(
            "{} observation grids for dimension {d}",
            grids.len()
        )));
    }
    let t_window = common_window(&grids.iter().collect::<Vec<_>>())?;
    let b = true_path.len();
    let values: Vec<DMatrix<f64>> = (0..b)
        .map(|h| {
            let t = h as f64 * t_window / b as f64;
            let mut m = true_path.value(h).clone();
            for j in 0..d {
                for k in 0..d {
                    if j != k {
                        let damp = crate::kernels::scaled_dirichlet(&grids[j], &grids[k], n_freq, t, t)
                            .expect("windows already validated");
                        m[(j, k)] *= damp;
                    }
                }
            }
            m
        })
        .collect();
    Ok(SpotPath::from_values(t_window, d, SpotKind::TruePath, values))
}

/// Which limit-theorem regime a report's rate normalization refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateRegime {
    /// `N^(1/2)` normalization (general tuning).
    General,
    /// `Delta(n)^(-1/2)` normalization (synchronous, full frequency usage).
    SynchronousOptimal,
    /// `n_min^(2/5)` normalization with second-order bias correction.
    BiasedOptimalRate,
}

/// Point estimate with variance, bias correction, interval and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub functional: String,
    pub s_hat: f64,
    /// Variance estimate normalized for the reported rate, floored at zero.
    pub v_hat: f64,
    /// Bias estimate on the `N^(1/2)` scale, when the biased-optimal-rate
    /// regime is in force.
    pub mu_hat: Option<f64>,
    pub rate_regime: RateRegime,
    pub rate_label: String,
    pub rate_value: f64,
    /// Standard error of `s_hat` (`sqrt(v_raw) / rate`), when defined.
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub level: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub n_freq: usize,
    pub m_order: usize,
    pub b: usize,
    pub l_trim: usize,
    pub kappa: Option<f64>,
    pub sample_sizes: Vec<usize>,
    /// Largest observation mesh `Delta(n)`.
    pub max_mesh: f64,
    /// Smallest observation spacing `delta(n)`.
    pub min_spacing: f64,
    pub synchronous: bool,
    /// Raw (possibly negative) variance estimate at the `N^(1/2)` rate.
    pub v_hat_raw: f64,
    pub v_hat_positive: bool,
    pub avar_stride: usize,
    pub max_imag_residue: f64,
    pub clamp_eps: f64,
    /// Whole-window kernel-product integrals `N int_0^T d_jk(T,u)^2 du`
    /// per pair (row-major); near `T/4` when the paired-kernel limits exist.
    pub theta_summary: Vec<f64>,
    pub tuning_warnings: Vec<String>,
}

/// The `N int_0^T d_jk(T, u)^2 du` diagnostic per asset pair (row-major).
pub fn theta_summary(grids: &[ObservationGrid], n_freq: usize) -> Result<Vec<f64>> {
    let t_window = common_window(&grids.iter().collect::<Vec<_>>())?;
    let d = grids.len();
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            let a = grids[j].theta_bar(t_window);
            let v = crate::kernels::kernel_product_integral(
                a, &grids[k], a, &grids[k], n_freq, t_window,
            )?;
            out.push(n_freq as f64 * v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::Functional;
    use crate::grid::ObservationGrid;
    use crate::kernels::cubic_variation;
    use approx::assert_relative_eq;

    fn regular_grid(n: usize, t: f64) -> ObservationGrid {
        ObservationGrid::new((0..=n).map(|h| h as f64 * t / n as f64).collect(), t).unwrap()
    }

    fn const_spot(v: f64, dim: usize, b: usize, t: f64) -> SpotPath {
        let m = DMatrix::from_fn(dim, dim, |j, k| if j == k { v } else { 0.5 * v });
        SpotPath::from_values(t, dim, SpotKind::TruePath, vec![m; b])
    }

    struct ZeroGradient;
    impl VolFunctional for ZeroGradient {
        fn eval(&self, _c: &DMatrix<f64>) -> crate::error::Result<f64> {
            Ok(1.0)
        }
        fn grad(&self, c: &DMatrix<f64>) -> crate::error::Result<DMatrix<f64>> {
            Ok(DMatrix::zeros(c.nrows(), c.ncols()))
        }
        fn id(&self) -> String {
            "constant".into()
        }
    }

    #[test]
    fn zero_gradient_functional_has_zero_variance() {
        let path = const_spot(0.16, 2, 32, 1.0);
        let grids = vec![regular_grid(128, 1.0), regular_grid(128, 1.0)];
        let est = avar_estimate(&path, &ZeroGradient, &grids, 16, None).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn synchronous_bias_estimate_is_exactly_zero() {
        let path = const_spot(0.16, 2, 16, 1.0);
        let g = regular_grid(64, 1.0);
        let grids = vec![g.clone(), g];
        let mu = async_bias_estimate(&path, &Functional::Entry(0, 1), &grids, 1.0, 64).unwrap();
        assert_eq!(mu, 0.0);
    }

    #[test]
    fn univariate_bias_estimate_is_exactly_zero() {
        let path = const_spot(0.16, 1, 16, 1.0);
        let grids = vec![regular_grid(64, 1.0)];
        let mu = async_bias_estimate(&path, &Functional::Power(2.0), &grids, 1.0, 64).unwrap();
        assert_eq!(mu, 0.0);
    }

    #[test]
    fn bias_estimate_scales_as_kappa_five_halves() {
        let path = const_spot(0.16, 2, 32, 1.0);
        let n = 64;
        let delta = 0.4 / n as f64;
        let g1 = regular_grid(n, 1.0);
        let times2: Vec<f64> = (0..n).map(|h| h as f64 / n as f64 + delta).collect();
        let g2 = ObservationGrid::new(times2, 1.0).unwrap();
        let grids = vec![g1, g2];
        let g = Functional::Entry(0, 1);
        let m1 = async_bias_estimate(&path, &g, &grids, 1.0, n).unwrap();
        let m2 = async_bias_estimate(&path, &g, &grids, 2.0, n).unwrap();
        assert!(m1 != 0.0);
        assert_relative_eq!(m2 / m1, 2f64.powf(2.5), max_relative = 1e-12);
    }

    #[test]
    fn bias_estimate_matches_analytic_offset_value() {
        // offset-regular grids have |theta_1 - theta_2| = delta a.e., so
        // P(t) = n^2 delta^2 t and the h-sum telescopes analytically
        let n = 256;
        let t_win = 1.0;
        let delta = 0.5 / n as f64;
        let g1 = regular_grid(n, t_win);
        let times2: Vec<f64> = (0..n).map(|h| h as f64 / n as f64 + delta).collect();
        let g2 = ObservationGrid::new(times2, t_win).unwrap();
        let b = 64;
        let c12 = 0.08;
        let path = {
            let m = DMatrix::from_row_slice(2, 2, &[0.16, c12, c12, 0.16]);
            SpotPath::from_values(t_win, 2, SpotKind::TruePath, vec![m; b])
        };
        let kappa = 1.3;
        let grids = vec![g1.clone(), g2.clone()];
        let mu = async_bias_estimate(&path, &Functional::Entry(0, 1), &grids, kappa, n).unwrap();
        // only the (1,2) term contributes: sum_h c12 [P(t_h) - P(t_{h-1})] = c12 P(T)
        let p_total = cubic_variation(&g1, &g2, n, t_win);
        let expected = -(2.0 * std::f64::consts::PI.powi(2) * kappa.powf(2.5) / 3.0) * c12 * p_total;
        assert_relative_eq!(mu, expected, max_relative = 1e-8);
        // and P(T) itself matches the analytic n^2 delta^2 T
        assert_relative_eq!(
            p_total,
            (n as f64).powi(2) * delta * delta * t_win,
            max_relative = 1e-10
        );
    }

    #[test]
    fn studentize_basics() {
        assert_eq!(studentize(1.0, 4.0, 10.0, 1.0).unwrap(), 0.0);
        // v_hat = rate^2 and s_hat - target = 1 gives exactly 1
        assert_relative_eq!(studentize(2.0, 100.0, 10.0, 1.0).unwrap(), 1.0);
        assert!(studentize(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(studentize(1.0, -2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn confidence_interval_basics() {
        // alpha = .32: half-width is z_{.84} ~ .9945 at unit variance/rate
        let (lo, hi) = confidence_interval(0.0, 1.0, 1.0, 0.0, 0.32).unwrap();
        assert_relative_eq!(hi, 0.994458, epsilon = 1e-5);
        assert_relative_eq!(lo, -0.994458, epsilon = 1e-5);
        // centered at s_hat when mu_hat = 0
        let (lo, hi) = confidence_interval(3.0, 4.0, 2.0, 0.0, 0.05).unwrap();
        assert_relative_eq!((lo + hi) / 2.0, 3.0, epsilon = 1e-12);
        // shifted by mu_hat / rate otherwise
        let (lo2, hi2) = confidence_interval(3.0, 4.0, 2.0, 1.0, 0.05).unwrap();
        assert_relative_eq!((lo2 + hi2) / 2.0, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn shrinkage_target_synchronous_and_diagonal() {
        let g = regular_grid(64, 1.0);
        let path = const_spot(0.2, 2, 16, 1.0);
        let out = shrinkage_target(&path, &[g.clone(), g.clone()], 16).unwrap();
        for h in 0..16 {
            assert!((out.value(h) - path.value(h)).abs().max() < 1e-12);
        }
        // asynchronous grids damp only the off-diagonal entries
        let times2: Vec<f64> = (0..64).map(|h| h as f64 / 64.0 + 0.3 / 64.0).collect();
        let g2 = ObservationGrid::new(times2, 1.0).unwrap();
        let out2 = shrinkage_target(&path, &[g, g2], 30).unwrap();
        for h in 1..16 {
            assert_relative_eq!(out2.value(h)[(0, 0)], 0.2, max_relative = 1e-12);
            assert_relative_eq!(out2.value(h)[(1, 1)], 0.2, max_relative = 1e-12);
            assert!(out2.value(h)[(0, 1)] < 0.1);
        }
    }

    #[test]
    fn shrinkage_vanishes_in_small_frequency_regime() {
        // N Delta(n) -> 0: damping factor near one
        let n = 4096;
        let g1 = regular_grid(n, 1.0);
        let times2: Vec<f64> = (0..n).map(|h| h as f64 / n as f64 + 0.5 / n as f64).collect();
        let g2 = ObservationGrid::new(times2, 1.0).unwrap();
        let n_freq = (n as f64).powf(0.6) as usize;
        let path = const_spot(0.2, 2, 64, 1.0);
        let out = shrinkage_target(&path, &[g1, g2], n_freq).unwrap();
        let sup_c = 0.2;
        for h in 0..64 {
            let dev = (out.value(h)[(0, 1)] - 0.1).abs();
            assert!(dev < 0.02 * sup_c, "deviation {dev}");
        }
    }

    #[test]
    fn avar_permutation_equivariance() {
        // relabeling the two assets (and the functional's indices) leaves
        // the quadruple sum unchanged
        let n = 128;
        let g1 = regular_grid(n, 1.0);
        let times2: Vec<f64> = (0..n).map(|h| h as f64 / n as f64 + 0.37 / n as f64).collect();
        let g2 = ObservationGrid::new(times2, 1.0).unwrap();
        let b = 16;
        let m12 = DMatrix::from_row_slice(2, 2, &[0.16, 0.07, 0.07, 0.22]);
        let m21 = DMatrix::from_row_slice(2, 2, &[0.22, 0.07, 0.07, 0.16]);
        let path12 = SpotPath::from_values(1.0, 2, SpotKind::TruePath, vec![m12; b]);
        let path21 = SpotPath::from_values(1.0, 2, SpotKind::TruePath, vec![m21; b]);
        let v12 = avar_estimate(
            &path12,
            &Functional::Entry(0, 1),
            &[g1.clone(), g2.clone()],
            24,
            None,
        )
        .unwrap();
        let v21 = avar_estimate(&path21, &Functional::Entry(1, 0), &[g2, g1], 24, None).unwrap();
        assert_relative_eq!(v12.value, v21.value, max_relative = 1e-12);
    }

    #[test]
    fn cubic_variation_curve_matches_pointwise() {
        let g1 = ObservationGrid::new(vec![0.0, 0.11, 0.35, 0.5, 0.99, 1.0], 1.0).unwrap();
        let g2 = ObservationGrid::new(vec![0.05, 0.3, 0.55, 0.8, 0.95], 1.0).unwrap();
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let curve = cubic_variation_curve(&g1, &g2, 5, &ts);
        for (i, &t) in ts.iter().enumerate() {
            assert_relative_eq!(curve[i], cubic_variation(&g1, &g2, 5, t), max_relative = 1e-12);
        }
    }
}
