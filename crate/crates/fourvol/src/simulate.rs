//! Ground-truth simulation: latent price/volatility paths, irregular and
//! asynchronous sampling of them, and true functional values.
//!
//! The workhorse model is a CIR variance process with a bridge adjustment
//! that pins `c(0) = c(T)` (so the periodic Fourier reconstruction has no
//! boundary mismatch), plus a leveraged log-price diffusion. A fractional
//! Brownian volatility model is included for path-fidelity comparisons.
//!
//! Two independent RNG streams are used: the path stream (seeded from the
//! path seed) and one sampling stream per asset scheme, so the observation
//! grids are exogenous to the path.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::error::{Result, VolError};
use crate::functionals::VolFunctional;
use crate::grid::{ObservationGrid, TickSeries};
use crate::spot::{SpotKind, SpotPath};

/// CIR-with-bridge volatility and leveraged price diffusion parameters.
///
/// Rates are per unit of the time variable handed to the simulator, e.g.
/// per trading day when `t_window = 1.0` spans one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    pub mean_reversion: f64,
    pub long_run: f64,
    pub vol_of_vol: f64,
    pub drift: f64,
    /// Correlation between the price and variance Brownian motions.
    pub leverage: f64,
}

impl Default for HestonParams {
    /// The baseline Monte Carlo configuration:
    /// `dX = .03 dt + sqrt(c) dW`, `dc~ = 6(.16 - c~) dt + .5 sqrt(c~) dB`,
    /// `corr(W, B) = -.6`.
    fn default() -> Self {
        Self {
            mean_reversion: 6.0,
            long_run: 0.16,
            vol_of_vol: 0.5,
            drift: 0.03,
            leverage: -0.6,
        }
    }
}

/// Exponential-of-fBM volatility parameters: `c(t) = exp(a + b B_H(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmVolParams {
    pub hurst: f64,
    /// Log-level `a`.
    pub log_level: f64,
    /// Scale `b` multiplying the fBM.
    pub scale: f64,
    pub drift: f64,
}

impl Default for FbmVolParams {
    fn default() -> Self {
        Self {
            hurst: 0.56,
            log_level: 0.16f64.ln(),
            scale: 0.5,
            drift: 0.0,
        }
    }
}

/// A simulated latent path on a uniform fine mesh: per-asset log-prices,
/// per-asset spot variances, and a constant cross-asset price correlation.
#[derive(Debug, Clone)]
pub struct LatentPath {
    pub t_window: f64,
    pub dt: f64,
    pub seed: u64,
    /// Per-asset log-price arrays, each of length `n_steps + 1`.
    pub x: Vec<Vec<f64>>,
    /// Per-asset spot variance arrays, each of length `n_steps + 1`.
    pub vols: Vec<Vec<f64>>,
    /// Constant correlation matrix of the price Brownian motions.
    pub corr: DMatrix<f64>,
}

impl LatentPath {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn n_steps(&self) -> usize {
        self.x[0].len() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Spot covariance matrix at mesh index `i`:
    /// `c_jk = corr_jk sqrt(v_j v_k)`; positive semidefinite by construction.
    pub fn c_matrix(&self, i: usize) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |j, k| {
            self.corr[(j, k)] * (self.vols[j][i] * self.vols[k][i]).sqrt()
        })
    }
}

/// Simulates the scalar CIR-bridge model by full-truncation Euler.
pub fn simulate_heston_bridge(p: &HestonParams, t_window: f64, dt: f64, seed: u64) -> Result<LatentPath> {
    simulate_heston_bridge_multi(&[*p], &DMatrix::identity(1, 1), t_window, dt, seed)
}

/// Multivariate extension: `d` price Brownian motions with a constant
/// correlation matrix and an independent CIR-bridge variance per asset,
/// each leveraged against its own price shock.
pub fn simulate_heston_bridge_multi(
    params: &[HestonParams],
    corr: &DMatrix<f64>,
    t_window: f64,
    dt: f64,
    seed: u64,
) -> Result<LatentPath> {
    if !(t_window > 0.0) || !(dt > 0.0) || dt > t_window {
        return Err(VolError::Config(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t_window}"
        )));
    }
    let d = params.len();
    if corr.nrows() != d || corr.ncols() != d {
        return Err(VolError::Config(format!(
            "correlation matrix is {}x{} for {d} assets",
            corr.nrows(),
            corr.ncols()
        )));
    }
    let chol = corr
        .clone()
        .cholesky()
        .ok_or_else(|| VolError::Config("price correlation matrix is not positive definite".into()))?;
    let lmat = chol.l();

    let n = (t_window / dt).round() as usize;
    if n == 0 || (t_window / dt - n as f64).abs() > 1e-9 {
        return Err(VolError::Config(format!(
            "window T = {t_window} is not an integer number of steps of dt = {dt}"
        )));
    }
    let dt = t_window / n as f64;
    let sqdt = dt.sqrt();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut raw_vols: Vec<Vec<f64>> = params.iter().map(|p| vec![p.long_run]).collect();
    let mut price_shocks: Vec<Vec<f64>> = vec![Vec::with_capacity(n); d];

    let mut z = vec![0.0f64; d];
    for _ in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        // correlated standard normals driving the prices
        let mut w = vec![0.0f64; d];
        for j in 0..d {
            for (k, zk) in z.iter().enumerate().take(j + 1) {
                w[j] += lmat[(j, k)] * zk;
            }
        }
        for (j, p) in params.iter().enumerate() {
            let xi: f64 = rng.sample(StandardNormal);
            let bshock = p.leverage * w[j] + (1.0 - p.leverage * p.leverage).sqrt() * xi;
            let v = *raw_vols[j].last().unwrap();
            let vp = v.max(0.0);
            let next = v + p.mean_reversion * (p.long_run - v) * dt + p.vol_of_vol * vp.sqrt() * sqdt * bshock;
            raw_vols[j].push(next);
            price_shocks[j].push(w[j]);
        }
    }

    // bridge adjustment pinning c(0) = c(T), clamped into the PSD cone
    let mut vols = Vec::with_capacity(d);
    for rv in &raw_vols {
        let diff = rv[n] - rv[0];
        let bridged: Vec<f64> = rv
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - diff * (i as f64 / n as f64)).max(0.0))
            .collect();
        vols.push(bridged);
    }

    // integrate the prices against the bridged variances
    let mut x = vec![vec![0.0f64]; d];
    for i in 0..n {
        for (j, p) in params.iter().enumerate() {
            let c = vols[j][i];
            let prev = *x[j].last().unwrap();
            x[j].push(prev + p.drift * dt + (c * dt).sqrt() * price_shocks[j][i]);
        }
    }

    Ok(LatentPath {
        t_window,
        dt,
        seed,
        x,
        vols,
        corr: corr.clone(),
    })
}

/// Stationary fractional Gaussian noise by circulant embedding, with a
/// Cholesky fallback when the embedding is not nonnegative definite.
fn fractional_gaussian_noise(hurst: f64, n: usize, dt: f64, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
    let two_h = 2.0 * hurst;
    let gamma = |k: f64| -> f64 {
        0.5 * dt.powf(two_h)
            * ((k + 1.0).abs().powf(two_h) - 2.0 * k.abs().powf(two_h) + (k - 1.0).abs().powf(two_h))
    };
    let m = n.next_power_of_two();
    let size = 2 * m;
    let mut row = vec![Complex64::new(0.0, 0.0); size];
    for k in 0..=m {
        row[k].re = gamma(k as f64);
    }
    for k in 1..m {
        row[size - k].re = gamma(k as f64);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut row);
    let eigs: Vec<f64> = row.iter().map(|c| c.re).collect();
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigs.iter().cloned().fold(0.0f64, f64::max);

    if min < -1e-8 * max {
        return fgn_cholesky(hurst, n, dt, rng);
    }

    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    let scale = 1.0 / (size as f64).sqrt();
    let w0: f64 = rng.sample(StandardNormal);
    buf[0] = Complex64::new(eigs[0].max(0.0).sqrt() * w0, 0.0);
    let wm: f64 = rng.sample(StandardNormal);
    buf[m] = Complex64::new(eigs[m].max(0.0).sqrt() * wm, 0.0);
    for k in 1..m {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let r = (eigs[k].max(0.0) / 2.0).sqrt();
        buf[k] = Complex64::new(r * a, r * b);
        buf[size - k] = buf[k].conj();
    }
    planner.plan_fft_forward(size).process(&mut buf);
    Ok(buf[..n].iter().map(|c| c.re * scale).collect())
}

fn fgn_cholesky(hurst: f64, n: usize, dt: f64, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
    if n > 4096 {
        return Err(VolError::Numerical(format!(
            "circulant embedding failed and n = {n} is too large for the Cholesky fallback"
        )));
    }
    let two_h = 2.0 * hurst;
    let gamma = |k: f64| -> f64 {
        0.5 * dt.powf(two_h)
            * ((k + 1.0).abs().powf(two_h) - 2.0 * k.abs().powf(two_h) + (k - 1.0).abs().powf(two_h))
    };
    let cov = DMatrix::from_fn(n, n, |i, j| gamma((i as f64 - j as f64).abs()));
    let chol = cov
        .cholesky()
        .ok_or_else(|| VolError::Numerical("fGn covariance is not positive definite".into()))?;
    let z = nalgebra::DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok((chol.l() * z).iter().cloned().collect())
}

/// Simulates `c(t) = exp(a + b B_H(t))` volatility with an independent
/// Brownian price; the fBM is generated exactly on the mesh.
pub fn simulate_fbm_vol(p: &FbmVolParams, t_window: f64, dt: f64, seed: u64) -> Result<LatentPath> {
    if !(p.hurst > 0.0 && p.hurst < 1.0) {
        return Err(VolError::Config(format!(
            "Hurst exponent must lie in (0,1), got {}",
            p.hurst
        )));
    }
    if !(t_window > 0.0) || !(dt > 0.0) || dt > t_window {
        return Err(VolError::Config(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t_window}"
        )));
    }
    let n = (t_window / dt).round() as usize;
    let dt = t_window / n as f64;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let fgn = fractional_gaussian_noise(p.hurst, n, dt, &mut rng)?;
    let mut bh = vec![0.0f64];
    for g in &fgn {
        bh.push(bh.last().unwrap() + g);
    }
    let vols: Vec<f64> = bh.iter().map(|b| (p.log_level + p.scale * b).exp()).collect();
    let mut x = vec![0.0f64];
    for i in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        x.push(x.last().unwrap() + p.drift * dt + (vols[i] * dt).sqrt() * z);
    }
    Ok(LatentPath {
        t_window,
        dt,
        seed,
        x: vec![x],
        vols: vec![vols],
        corr: DMatrix::identity(1, 1),
    })
}

/// How one asset's observation times are drawn from the fine mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingScheme {
    /// Every `mesh` seconds-equivalent (a multiple of the path mesh).
    Regular { mesh: f64 },
    /// Keep each base-mesh point independently with probability `keep_prob`,
    /// with gaps capped at `max_gap` base steps so the spacing ratio stays
    /// bounded (oversized gaps are redrawn by truncation).
    PoissonThinning {
        mesh: f64,
        keep_prob: f64,
        max_gap: usize,
    },
    /// Regular sampling shifted by a constant offset.
    OffsetRegular { mesh: f64, offset: f64 },
}

/// A scheme plus its own RNG seed; the sampling stream is disjoint from the
/// path stream by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub scheme: SamplingScheme,
    pub seed: u64,
}

fn mesh_multiple(mesh: f64, dt: f64) -> Result<usize> {
    let k = (mesh / dt).round();
    if k < 1.0 || (mesh / dt - k).abs() > 1e-6 {
        return Err(VolError::Config(format!(
            "sampling mesh {mesh} must be a positive multiple of the path mesh {dt}"
        )));
    }
    Ok(k as usize)
}

/// Reads each asset's path at its own sampled grid times (snapped to the
/// simulation mesh, no interpolation).
pub fn sample_asynchronous(path: &LatentPath, schemes: &[SamplingConfig]) -> Result<Vec<TickSeries>> {
    if schemes.len() != path.dim() {
        return Err(VolError::Config(format!(
            "{} sampling schemes for {} assets",
            schemes.len(),
            path.dim()
        )));
    }
    let n = path.n_steps();
    let mut out = Vec::with_capacity(schemes.len());
    for (j, cfg) in schemes.iter().enumerate() {
        let idx: Vec<usize> = match cfg.scheme {
            SamplingScheme::Regular { mesh } => {
                let k = mesh_multiple(mesh, path.dt)?;
                (0..=n / k).map(|i| i * k).collect()
            }
            SamplingScheme::OffsetRegular { mesh, offset } => {
                let k = mesh_multiple(mesh, path.dt)?;
                let o = (offset / path.dt).round() as usize;
                if ((offset / path.dt) - o as f64).abs() > 1e-6 {
                    return Err(VolError::Config(format!(
                        "offset {offset} must be a multiple of the path mesh {}",
                        path.dt
                    )));
                }
                (0..).map(|i| o + i * k).take_while(|&i| i <= n).collect()
            }
            SamplingScheme::PoissonThinning {
                mesh,
                keep_prob,
                max_gap,
            } => {
                if !(0.0 < keep_prob && keep_prob <= 1.0) {
                    return Err(VolError::Config(format!(
                        "keep probability must lie in (0,1], got {keep_prob}"
                    )));
                }
                if max_gap == 0 {
                    return Err(VolError::Config("max_gap must be >= 1".into()));
                }
                let k = mesh_multiple(mesh, path.dt)?;
                let base_count = n / k;
                let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
                let mut keep = vec![0usize];
                let mut cur = 0usize;
                while cur < base_count {
                    // geometric gap, redrawn whenever it exceeds max_gap
                    let gap = loop {
                        let mut g = 1usize;
                        while g <= max_gap && rng.gen::<f64>() > keep_prob {
                            g += 1;
                        }
                        if g <= max_gap {
                            break g;
                        }
                    };
                    cur = (cur + gap).min(base_count);
                    keep.push(cur);
                }
                keep.into_iter().map(|i| i * k).collect()
            }
        };
        if idx.len() < 2 {
            return Err(VolError::Sampling(format!(
                "asset {j}: sampling produced fewer than two observations"
            )));
        }
        let times: Vec<f64> = idx.iter().map(|&i| i as f64 * path.dt).collect();
        let prices: Vec<f64> = idx.iter().map(|&i| path.x[j][i]).collect();
        let grid = ObservationGrid::new(times, path.t_window)?;
        out.push(TickSeries::new(format!("asset{}", j + 1), grid, prices)?);
    }
    Ok(out)
}

/// Ground-truth functional value `S(g) = int_0^T g(c(t)) dt` by Riemann sum
/// over the fine mesh.
pub fn true_functional(path: &LatentPath, g: &dyn VolFunctional) -> Result<f64> {
    let n = path.n_steps();
    let mut acc = 0.0;
    if path.dim() == 1 {
        let mut c = DMatrix::zeros(1, 1);
        for i in 0..n {
            c[(0, 0)] = path.vols[0][i];
            acc += g.eval(&c)?;
        }
    } else {
        for i in 0..n {
            acc += g.eval(&path.c_matrix(i))?;
        }
    }
    Ok(acc * path.dt)
}

/// The true covariance path sampled onto a uniform `b`-point grid
/// (diagnostics: shrinkage targets and path-fidelity comparisons).
pub fn latent_spot_grid(path: &LatentPath, b: usize) -> SpotPath {
    let n = path.n_steps();
    let values: Vec<DMatrix<f64>> = (0..b)
        .map(|h| {
            let t = h as f64 * path.t_window / b as f64;
            let i = ((t / path.dt).round() as usize).min(n);
            path.c_matrix(i)
        })
        .collect();
    SpotPath::from_values(path.t_window, path.dim(), SpotKind::TruePath, values)
}
