//! Volatility spectrum estimation.
//!
//! The Fourier-Stieltjes transform of one asset's increments is the exact
//! nonuniform sum `F(dX_j)_s = sum_h delta_h e^{-i 2 pi s tau_h / T}`. When
//! the observation times sit on a uniform lattice the sum is evaluated with
//! a scatter-and-FFT fast path; otherwise a phase-recurrence direct sum is
//! used (one complex exponential per tick, one multiply per frequency).
//! Fourier coefficients of the spot covariance are then estimated by the
//! scaled (Bohr) convolution of two transforms.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Result, VolError};
use crate::grid::TickSeries;

/// Largest lattice the FFT fast path will materialize.
const MAX_LATTICE: usize = 1 << 22;
/// Recompute the recurrence phase exactly every this many frequencies.
const PHASE_REFRESH: usize = 256;

/// Fourier-Stieltjes transform of one asset's increments on `|s| <= s_max`.
///
/// Only non-negative frequencies are stored; `value(-s)` is the complex
/// conjugate of `value(s)` because the increments are real.
#[derive(Debug, Clone)]
pub struct StieltjesTransform {
    pub asset_id: String,
    pub t_window: f64,
    values: Vec<Complex64>,
}

impl StieltjesTransform {
    pub fn s_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Transform value at a signed frequency, using conjugate symmetry.
    pub fn value(&self, s: i64) -> Complex64 {
        let a = self.values[s.unsigned_abs() as usize];
        if s < 0 {
            a.conj()
        } else {
            a
        }
    }

    /// Builds a transform from explicit values at `s = 0..=s_max`
    /// (mainly for tests and synthetic spectra).
    pub fn from_values(asset_id: String, t_window: f64, values: Vec<Complex64>) -> Self {
        Self {
            asset_id,
            t_window,
            values,
        }
    }
}

/// Detects whether all observation times (relative to the first one) sit on
/// a uniform lattice that divides the window; returns the lattice size and
/// the per-tick lattice indices of `times[1..]`.
fn detect_lattice(times: &[f64], t_window: f64) -> Option<(usize, Vec<usize>)> {
    let base = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if !(base > 0.0) || !base.is_finite() {
        return None;
    }
    let l = (t_window / base).round();
    if (t_window / base - l).abs() > 1e-6 || !(1.0..=MAX_LATTICE as f64).contains(&l) {
        return None;
    }
    let l = l as usize;
    let t0 = times[0];
    let mut idx = Vec::with_capacity(times.len() - 1);
    for &tau in &times[1..] {
        let m = ((tau - t0) / base).round();
        if ((tau - t0) / base - m).abs() > 1e-6 || m < 0.0 || m > l as f64 {
            return None;
        }
        idx.push(m as usize % l);
    }
    Some((l, idx))
}

/// Exact nonuniform Fourier-Stieltjes transform of a tick series,
/// evaluated for all `|s| <= s_max`.
///
/// `s_max` may not exceed the Nyquist frequency `floor(n_j / 2)`; higher
/// frequencies would alias under discrete sampling.
pub fn fourier_stieltjes(ticks: &TickSeries, t_window: f64, s_max: usize) -> Result<StieltjesTransform> {
    if !(t_window > 0.0) {
        return Err(VolError::Config(format!(
            "window length must be positive, got {t_window}"
        )));
    }
    if s_max > ticks.grid.nyquist() {
        return Err(VolError::Tuning(format!(
            "asset {}: requested frequency {} exceeds the Nyquist frequency {} (n_j = {})",
            ticks.asset_id,
            s_max,
            ticks.grid.nyquist(),
            ticks.n_intervals()
        )));
    }
    let increments = ticks.increments();
    let times = &ticks.grid.times()[1..];

    let values = match detect_lattice(ticks.grid.times(), t_window) {
        // bins 0..l of a length-l DFT are exact for any s < l
        Some((l, idx)) if l > s_max => {
            lattice_transform(&increments, &idx, l, ticks.grid.times()[0], t_window, s_max)
        }
        _ => direct_transform(&increments, times, t_window, s_max),
    };
    Ok(StieltjesTransform {
        asset_id: ticks.asset_id.clone(),
        t_window,
        values,
    })
}

fn lattice_transform(
    increments: &[f64],
    idx: &[usize],
    l: usize,
    t0: f64,
    t_window: f64,
    s_max: usize,
) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for (d, &m) in increments.iter().zip(idx) {
        buf[m].re += d;
    }
    FftPlanner::new().plan_fft_forward(l).process(&mut buf);
    // undo the time translation by the first observation
    (0..=s_max)
        .map(|s| {
            let phase = -2.0 * PI * s as f64 * t0 / t_window;
            buf[s] * Complex64::from_polar(1.0, phase)
        })
        .collect()
}

fn direct_transform(increments: &[f64], times: &[f64], t_window: f64, s_max: usize) -> Vec<Complex64> {
    let mut values = vec![Complex64::new(0.0, 0.0); s_max + 1];
    for (&d, &tau) in increments.iter().zip(times) {
        let w = Complex64::from_polar(1.0, -2.0 * PI * tau / t_window);
        let mut z = Complex64::new(1.0, 0.0);
        for (s, v) in values.iter_mut().enumerate() {
            if s % PHASE_REFRESH == 0 {
                z = Complex64::from_polar(1.0, -2.0 * PI * s as f64 * tau / t_window);
            }
            *v += d * z;
            z *= w;
        }
    }
    values
}

/// Single coefficient of the scaled (Bohr) convolution at a signed
/// frequency `q`: `(2N+1)^{-1} sum_{|s|<=N} F_j(q-s) F_k(s)`.
pub fn bohr_convolution_at(
    fj: &StieltjesTransform,
    fk: &StieltjesTransform,
    n_freq: usize,
    q: i64,
) -> Complex64 {
    let n = n_freq as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in -n..=n {
        acc += fj.value(q - s) * fk.value(s);
    }
    acc / (2 * n_freq + 1) as f64
}

/// Scaled convolution of two Fourier-Stieltjes transforms for
/// `q = 0..=q_max`, with the frequency-availability preconditions checked.
pub fn bohr_convolution(
    fj: &StieltjesTransform,
    fk: &StieltjesTransform,
    n_freq: usize,
    q_max: usize,
) -> Result<Vec<Complex64>> {
    if n_freq > fk.s_max() {
        return Err(VolError::Tuning(format!(
            "convolution width N = {} exceeds available frequencies {} of asset {}",
            n_freq,
            fk.s_max(),
            fk.asset_id
        )));
    }
    if q_max + n_freq > fj.s_max() {
        return Err(VolError::Tuning(format!(
            "frequency q_max + N = {} exceeds available frequencies {} of asset {}",
            q_max + n_freq,
            fj.s_max(),
            fj.asset_id
        )));
    }
    Ok((0..=q_max as i64)
        .map(|q| bohr_convolution_at(fj, fk, n_freq, q))
        .collect())
}

/// Estimated Fourier coefficients of the spot covariance path:
/// a complex `d x d` matrix per frequency `q`, with
/// `coeff(-q, j, k) = conj(coeff(q, j, k))`.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub t_window: f64,
    pub n_freq: usize,
    pub dim: usize,
    pub sample_sizes: Vec<usize>,
    /// `coeffs[q][j * dim + k]` for q = 0..=q_max.
    coeffs: Vec<Vec<Complex64>>,
}

impl SpectrumEstimate {
    pub fn q_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient at a signed frequency (conjugate symmetry in `q`).
    pub fn coeff(&self, q: i64, j: usize, k: usize) -> Complex64 {
        let c = self.coeffs[q.unsigned_abs() as usize][j * self.dim + k];
        if q < 0 {
            c.conj()
        } else {
            c
        }
    }

    /// Assembles an estimate from raw coefficient matrices
    /// (`coeffs[q][j * dim + k]`, `q >= 0`); used by tests and synthetic inputs.
    pub fn from_coeffs(
        t_window: f64,
        n_freq: usize,
        dim: usize,
        sample_sizes: Vec<usize>,
        coeffs: Vec<Vec<Complex64>>,
    ) -> Self {
        assert!(!coeffs.is_empty());
        assert!(coeffs.iter().all(|m| m.len() == dim * dim));
        Self {
            t_window,
            n_freq,
            dim,
            sample_sizes,
            coeffs,
        }
    }
}

/// Assembles the per-frequency spot-covariance coefficient matrices for a
/// panel of tick series.
///
/// `q_max = None` selects the availability bound `min_j floor(n_j/2) - N`.
pub fn spectrum_matrix(
    ticks: &[TickSeries],
    n_freq: usize,
    q_max: Option<usize>,
) -> Result<SpectrumEstimate> {
    if ticks.is_empty() {
        return Err(VolError::Data("no tick series supplied".into()));
    }
    let t_window = crate::kernels::common_window(
        &ticks.iter().map(|t| &t.grid).collect::<Vec<_>>(),
    )?;
    if n_freq == 0 {
        return Err(VolError::Tuning("convolution width N must be >= 1".into()));
    }
    let min_nyquist = ticks.iter().map(|t| t.grid.nyquist()).min().unwrap();
    let q_auto = min_nyquist.checked_sub(n_freq);
    let q_max = match (q_max, q_auto) {
        (Some(q), Some(avail)) if q <= avail => q,
        (None, Some(avail)) => avail,
        _ => {
            // identify an offending pair for the error message
            let worst = ticks
                .iter()
                .min_by_key(|t| t.grid.nyquist())
                .unwrap()
                .asset_id
                .clone();
            return Err(VolError::Tuning(format!(
                "frequency range violation: need q_max + N <= floor(n_j/2) and N <= floor(n_k/2) \
                 for every pair (j, k); tightest asset is {worst} with Nyquist {min_nyquist} \
                 (N = {n_freq}, q_max = {q_max:?})"
            )));
        }
    };

    let s_max = q_max + n_freq;
    let transforms: Vec<StieltjesTransform> = ticks
        .iter()
        .map(|t| fourier_stieltjes(t, t_window, s_max))
        .collect::<Result<_>>()?;

    let dim = ticks.len();
    let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); dim * dim]; q_max + 1];
    for j in 0..dim {
        for k in 0..dim {
            let col = bohr_convolution(&transforms[j], &transforms[k], n_freq, q_max)?;
            for (q, v) in col.into_iter().enumerate() {
                coeffs[q][j * dim + k] = v;
            }
        }
    }
    Ok(SpectrumEstimate {
        t_window,
        n_freq,
        dim,
        sample_sizes: ticks.iter().map(|t| t.n_intervals()).collect(),
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ObservationGrid;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn naive_transform(ticks: &TickSeries, t_window: f64, s_max: usize) -> Vec<Complex64> {
        let incs = ticks.increments();
        let times = &ticks.grid.times()[1..];
        (0..=s_max)
            .map(|s| {
                incs.iter()
                    .zip(times)
                    .map(|(&d, &tau)| {
                        d * Complex64::from_polar(1.0, -2.0 * PI * s as f64 * tau / t_window)
                    })
                    .sum()
            })
            .collect()
    }

    fn bm_series(n: usize, t_window: f64, sigma2: f64, seed: u64) -> TickSeries {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dt = t_window / n as f64;
        let mut x = vec![0.0];
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            x.push(x.last().unwrap() + (sigma2 * dt).sqrt() * z);
        }
        let grid =
            ObservationGrid::new((0..=n).map(|h| h as f64 * dt).collect(), t_window).unwrap();
        TickSeries::new("bm".into(), grid, x).unwrap()
    }

    #[test]
    fn single_increment_at_window_end() {
        // one unit increment at tau = T: value(s) = e^{-i 2 pi s} = 1 for all s
        let grid = ObservationGrid::new(vec![0.0, 1.0], 1.0).unwrap();
        let ts = TickSeries::new("a".into(), grid, vec![0.0, 1.0]).unwrap();
        let f = fourier_stieltjes(&ts, 1.0, 0).unwrap();
        assert_relative_eq!(f.value(0).re, 1.0, epsilon = 1e-14);
        // wider grid so higher frequencies are available
        let grid = ObservationGrid::new(
            (0..=8).map(|h| h as f64 / 8.0).collect::<Vec<_>>(),
            1.0,
        )
        .unwrap();
        let mut x = vec![0.0; 9];
        x[8] = 1.0;
        let ts = TickSeries::new("a".into(), grid, x).unwrap();
        let f = fourier_stieltjes(&ts, 1.0, 4).unwrap();
        for s in -4i64..=4 {
            assert_relative_eq!(f.value(s).re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(f.value(s).im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_frequency_sums_increments() {
        let ts = bm_series(50, 1.0, 0.2, 3);
        let f = fourier_stieltjes(&ts, 1.0, 10).unwrap();
        let total = ts.log_prices.last().unwrap() - ts.log_prices[0];
        assert_relative_eq!(f.value(0).re, total, epsilon = 1e-12);
        assert_relative_eq!(f.value(0).im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lattice_fast_path_matches_naive_dft() {
        let ts = bm_series(128, 1.0, 0.16, 11);
        let f = fourier_stieltjes(&ts, 1.0, 64).unwrap();
        let naive = naive_transform(&ts, 1.0, 64);
        for s in 0..=64 {
            let d = (f.value(s as i64) - naive[s]).norm();
            assert!(d < 1e-12, "s = {s}: diff {d}");
        }
    }

    #[test]
    fn irregular_direct_path_matches_naive_sum() {
        // genuinely irregular times force the phase-recurrence path
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut times = vec![0.0];
        while *times.last().unwrap() < 0.98 {
            let t = times.last().unwrap() + 0.002 + 0.01 * rng.gen::<f64>();
            times.push(t);
        }
        *times.last_mut().unwrap() = 1.0;
        let n = times.len() - 1;
        let x: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let grid = ObservationGrid::new(times, 1.0).unwrap();
        let ts = TickSeries::new("irr".into(), grid, x).unwrap();
        let s_max = ts.grid.nyquist().min(40);
        let f = fourier_stieltjes(&ts, 1.0, s_max).unwrap();
        let naive = naive_transform(&ts, 1.0, s_max);
        for s in 0..=s_max {
            let d = (f.value(s as i64) - naive[s]).norm();
            assert!(d < 1e-11, "s = {s}: diff {d}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let ts = bm_series(64, 1.0, 0.16, 17);
        let f = fourier_stieltjes(&ts, 1.0, 32).unwrap();
        for s in 1..=32 {
            let a = f.value(s);
            let b = f.value(-s);
            assert_relative_eq!(a.re, b.re, epsilon = 1e-15);
            assert_relative_eq!(a.im, -b.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn nyquist_guard() {
        let ts = bm_series(64, 1.0, 0.16, 17);
        assert!(fourier_stieltjes(&ts, 1.0, 33).is_err());
        assert!(fourier_stieltjes(&ts, 1.0, 32).is_ok());
    }

    #[test]
    fn convolution_of_unit_transforms_is_one() {
        let ones = vec![Complex64::new(1.0, 0.0); 40];
        let f = StieltjesTransform::from_values("u".into(), 1.0, ones);
        let out = bohr_convolution(&f, &f, 8, 16).unwrap();
        for v in out {
            assert_relative_eq!(v.re, 1.0, epsilon = 1e-13);
            assert_relative_eq!(v.im, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn convolution_hermitian_in_q() {
        let ts = bm_series(256, 1.0, 0.16, 23);
        let f = fourier_stieltjes(&ts, 1.0, 128).unwrap();
        let n_freq = 32;
        for q in 1i64..=8 {
            let plus = bohr_convolution_at(&f, &f, n_freq, q);
            let minus = bohr_convolution_at(&f, &f, n_freq, -q);
            assert!((plus.conj() - minus).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_frequency_guards() {
        let ts = bm_series(64, 1.0, 0.16, 29);
        let f = fourier_stieltjes(&ts, 1.0, 32).unwrap();
        assert!(bohr_convolution(&f, &f, 33, 0).is_err());
        assert!(bohr_convolution(&f, &f, 16, 17).is_err());
        assert!(bohr_convolution(&f, &f, 16, 16).is_ok());
    }

    #[test]
    fn constant_vol_spectrum_mean_matches_integrated_variance() {
        // mean over replications of Re F(c)_0 is sigma^2 T
        let sigma2 = 0.16;
        let reps = 200;
        let n = 512;
        let n_freq = 64;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let ts = bm_series(n, 1.0, sigma2, 31415 + r as u64);
            let f = fourier_stieltjes(&ts, 1.0, n_freq).unwrap();
            vals.push(bohr_convolution_at(&f, &f, n_freq, 0).re);
        }
        let m = crate::stats::mean(&vals);
        let se = crate::stats::std_dev(&vals) / (reps as f64).sqrt();
        assert!(
            (m - sigma2).abs() < 3.0 * se,
            "mean {m} vs {sigma2}, se {se}"
        );
    }

    #[test]
    fn spectrum_matrix_reduces_to_convolution_for_d1() {
        let ts = bm_series(256, 1.0, 0.16, 31);
        let f = fourier_stieltjes(&ts, 1.0, 96).unwrap();
        let spec = spectrum_matrix(std::slice::from_ref(&ts), 64, Some(16)).unwrap();
        for q in 0..=16i64 {
            let direct = bohr_convolution_at(&f, &f, 64, q);
            assert!((spec.coeff(q, 0, 0) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn bivariate_constant_covariance_mean() {
        // d = 2 synchronous constant c = [[.16,.08],[.08,.16]]
        let reps = 200;
        let n = 512;
        let n_freq = 64;
        let (c11, c12) = (0.16, 0.08);
        let rho = c12 / c11;
        let mut v11 = Vec::new();
        let mut v12 = Vec::new();
        for r in 0..reps {
            let mut rng = ChaCha12Rng::seed_from_u64(9000 + r as u64);
            let dt = 1.0 / n as f64;
            let mut x1 = vec![0.0];
            let mut x2 = vec![0.0];
            for _ in 0..n {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let w2 = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
                x1.push(x1.last().unwrap() + (c11 * dt).sqrt() * z1);
                x2.push(x2.last().unwrap() + (c11 * dt).sqrt() * w2);
            }
            let grid = ObservationGrid::new((0..=n).map(|h| h as f64 * dt).collect(), 1.0).unwrap();
            let t1 = TickSeries::new("a".into(), grid.clone(), x1).unwrap();
            let t2 = TickSeries::new("b".into(), grid, x2).unwrap();
            let spec = spectrum_matrix(&[t1, t2], n_freq, Some(4)).unwrap();
            v11.push(spec.coeff(0, 0, 0).re);
            v12.push(spec.coeff(0, 0, 1).re);
        }
        let (m11, m12) = (crate::stats::mean(&v11), crate::stats::mean(&v12));
        let se11 = crate::stats::std_dev(&v11) / (reps as f64).sqrt();
        let se12 = crate::stats::std_dev(&v12) / (reps as f64).sqrt();
        assert!((m11 - c11).abs() < 3.0 * se11, "m11 {m11} se {se11}");
        assert!((m12 - c12).abs() < 3.0 * se12, "m12 {m12} se {se12}");
    }

    #[test]
    fn cross_coefficient_bias_grows_with_n_freq() {
        // offset bivariate grids, fixed n: once N Delta(n) = O(1), the cross
        // coefficient shrinks toward zero, i.e. its bias grows with N
        let n = 2048;
        let reps = 60;
        let (c11, c12) = (0.16, 0.08);
        let rho = c12 / c11;
        let dt = 1.0 / n as f64;
        // the offset grid has n - 1 increments, so its Nyquist is n/2 - 1
        let n_list = [
            (n as f64).powf(0.6) as usize,
            (n as f64).powf(0.8) as usize,
            n / 2 - 1,
        ];
        let mut bias = Vec::new();
        for &n_freq in &n_list {
            let mut vals = Vec::new();
            for r in 0..reps {
                let mut rng = ChaCha12Rng::seed_from_u64(7000 + r as u64);
                // simulate on a half-step lattice so asset 2 can be offset
                let fine = 2 * n;
                let fdt = 0.5 * dt;
                let mut x1 = vec![0.0];
                let mut x2 = vec![0.0];
                for _ in 0..fine {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let w2 = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
                    x1.push(x1.last().unwrap() + (c11 * fdt).sqrt() * z1);
                    x2.push(x2.last().unwrap() + (c11 * fdt).sqrt() * w2);
                }
                let times1: Vec<f64> = (0..=n).map(|h| h as f64 * dt).collect();
                let times2: Vec<f64> = (0..n).map(|h| h as f64 * dt + 0.5 * dt).collect();
                let p1: Vec<f64> = (0..=n).map(|h| x1[2 * h]).collect();
                let p2: Vec<f64> = (0..n).map(|h| x2[2 * h + 1]).collect();
                let g1 = ObservationGrid::new(times1, 1.0).unwrap();
                let g2 = ObservationGrid::new(times2, 1.0).unwrap();
                let t1 = TickSeries::new("a".into(), g1, p1).unwrap();
                let t2 = TickSeries::new("b".into(), g2, p2).unwrap();
                let spec = spectrum_matrix(&[t1, t2], n_freq, Some(0)).unwrap();
                vals.push(spec.coeff(0, 0, 1).re);
            }
            bias.push((crate::stats::mean(&vals) - c12).abs());
        }
        assert!(
            bias[0] < bias[1] && bias[1] < bias[2],
            "bias not monotone: {bias:?}"
        );
    }
}
