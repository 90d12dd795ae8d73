//! Spot volatility by Fourier-Fejér inversion and PSD conditioning.
//!
//! The spot path is the Cesàro-weighted inverse transform of the estimated
//! volatility spectrum, evaluated on a uniform `B`-point grid by symmetric
//! zero-padding plus an inverse FFT (`O(B log B)` per matrix entry). The
//! series is periodic by construction, so the value at `t = 0` equals the
//! value at `t = T`; boundary trimming is handled downstream by the
//! functional estimator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Result, VolError};
use crate::spectrum::SpectrumEstimate;

/// How a spot path was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpotKind {
    /// Fourier-Fejér inversion with convolution width `n_freq` and Cesàro
    /// order `m_order`.
    Fourier { n_freq: usize, m_order: usize },
    /// Local realized-variance windows of length `k_n`.
    RealizedVariance { k_n: usize },
    /// Ground-truth path sampled from a simulation.
    TruePath,
}

/// Spot volatility matrices on the uniform grid `t_h = h T / B`, `h = 0..B-1`.
#[derive(Debug, Clone)]
pub struct SpotPath {
    pub t_window: f64,
    pub dim: usize,
    pub kind: SpotKind,
    /// Largest imaginary residue discarded during inversion.
    pub max_imag_residue: f64,
    values: Vec<DMatrix<f64>>,
}

impl SpotPath {
    pub fn from_values(t_window: f64, dim: usize, kind: SpotKind, values: Vec<DMatrix<f64>>) -> Self {
        Self {
            t_window,
            dim,
            kind,
            max_imag_residue: 0.0,
            values,
        }
    }

    /// Number of grid points `B`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid time of index `h`.
    pub fn time(&self, h: usize) -> f64 {
        h as f64 * self.t_window / self.len() as f64
    }

    pub fn value(&self, h: usize) -> &DMatrix<f64> {
        &self.values[h]
    }

    /// Value at index `h mod B`; index `B` wraps to the periodic image of
    /// `t = T` at `t = 0`.
    pub fn value_periodic(&self, h: usize) -> &DMatrix<f64> {
        &self.values[h % self.len()]
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    /// Writes `t, c_11, c_12, ..., c_dd` rows (row-major entries).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "t")?;
        for j in 1..=self.dim {
            for k in 1..=self.dim {
                write!(out, ",c_{j}{k}")?;
            }
        }
        writeln!(out)?;
        for h in 0..self.len() {
            write!(out, "{}", self.time(h))?;
            let m = &self.values[h];
            for j in 0..self.dim {
                for k in 0..self.dim {
                    write!(out, ",{}", m[(j, k)])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Fourier-Fejér inversion of a volatility spectrum onto a `B`-point grid.
///
/// Each coefficient sequence is zero-padded symmetrically to length `B` and
/// inverted with an FFT; the result matches direct evaluation of the
/// weighted series. Requires `m_order <= q_max + 1` (frequency availability)
/// and `b >= 2 m_order - 1` (no aliasing of the padded coefficients).
pub fn fejer_inversion(spec: &SpectrumEstimate, m_order: usize, b: usize) -> Result<SpotPath> {
    if m_order < 1 {
        return Err(VolError::Tuning("Fejér order M must be >= 1".into()));
    }
    if m_order > spec.q_max() + 1 {
        return Err(VolError::Tuning(format!(
            "Fejér order M = {} needs frequencies up to {} but only {} are available \
             (M <= min_j floor(n_j/2) - N + 1)",
            m_order,
            m_order - 1,
            spec.q_max()
        )));
    }
    if b < 2 * m_order - 1 {
        return Err(VolError::Config(format!(
            "inversion grid B = {b} would alias the {} spectral coefficients; need B >= {}",
            2 * m_order - 1,
            2 * m_order - 1
        )));
    }

    let d = spec.dim;
    let t = spec.t_window;
    let fft = FftPlanner::new().plan_fft_inverse(b);
    let mut grids: Vec<Vec<Complex64>> = Vec::with_capacity(d * d);
    let mut max_imag = 0.0f64;
    for j in 0..d {
        for k in 0..d {
            let mut buf = vec![Complex64::new(0.0, 0.0); b];
            buf[0] = spec.coeff(0, j, k);
            for q in 1..m_order {
                let w = 1.0 - q as f64 / m_order as f64;
                buf[q] = w * spec.coeff(q as i64, j, k);
                buf[b - q] = w * spec.coeff(-(q as i64), j, k);
            }
            fft.process(&mut buf);
            for v in buf.iter() {
                max_imag = max_imag.max(v.im.abs() / t);
            }
            grids.push(buf);
        }
    }

    let values: Vec<DMatrix<f64>> = (0..b)
        .map(|h| DMatrix::from_fn(d, d, |j, k| grids[j * d + k][h].re / t))
        .collect();
    Ok(SpotPath {
        t_window: t,
        dim: d,
        kind: SpotKind::Fourier {
            n_freq: spec.n_freq,
            m_order,
        },
        max_imag_residue: max_imag,
        values,
    })
}

/// Direct evaluation of the Fejér-weighted series for one matrix entry at
/// an arbitrary time (used for native-grid plug-ins and as the oracle for
/// the zero-padded fast path).
pub fn fejer_series_at(spec: &SpectrumEstimate, m_order: usize, j: usize, k: usize, t: f64) -> f64 {
    let t_window = spec.t_window;
    let mut acc = spec.coeff(0, j, k).re;
    for q in 1..m_order {
        let w = 1.0 - q as f64 / m_order as f64;
        let phase = Complex64::from_polar(1.0, 2.0 * PI * q as f64 * t / t_window);
        acc += 2.0 * w * (spec.coeff(q as i64, j, k) * phase).re;
    }
    acc / t_window
}

/// Symmetrizes each matrix and clamps its eigenvalues below at `eps`.
///
/// Idempotent; leaves already-PSD symmetric matrices unchanged. The raw
/// inversion is neither exactly symmetric nor PSD at finite sample sizes,
/// and the functional layer requires the PSD cone.
pub fn condition_spot(path: &SpotPath, eps: f64) -> SpotPath {
    let values = path
        .values
        .iter()
        .map(|a| clamp_psd(a, eps))
        .collect::<Vec<_>>();
    SpotPath {
        t_window: path.t_window,
        dim: path.dim,
        kind: path.kind,
        max_imag_residue: path.max_imag_residue,
        values,
    }
}

/// Scale-aware default clamp floor: `1e-8 x mean trace / d`.
pub fn default_clamp_eps(path: &SpotPath) -> f64 {
    let d = path.dim as f64;
    let mean_trace =
        path.values.iter().map(|m| m.trace()).sum::<f64>() / path.len().max(1) as f64;
    (1e-8 * mean_trace.abs() / d).max(f64::MIN_POSITIVE)
}

fn clamp_psd(a: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    if a.nrows() == 1 {
        return DMatrix::from_element(1, 1, a[(0, 0)].max(eps));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= eps) {
        return sym;
    }
    let clamped = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(eps)));
    &eig.eigenvectors * clamped * eig.eigenvectors.transpose()
}
