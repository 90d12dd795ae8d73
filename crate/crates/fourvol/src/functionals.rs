//! Smooth functionals of the spot volatility matrix and plug-in estimators.
//!
//! Each functional carries an analytic gradient, taken entrywise (the
//! derivative with respect to the `(j,k)` argument treating entries as
//! independent coordinates, evaluated at a symmetric point). That is the
//! convention under which the quadruple-sum asymptotic variance reproduces
//! the single-entry limit theorems, and it is what the inference layer
//! consumes. Matrix functions (powers, inverse, log, eigenvalues) are
//! evaluated through the eigendecomposition of the symmetrized input.

use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, VolError};
use crate::spot::SpotPath;

/// A functional `g` on (near-)PSD matrices with value and gradient.
pub trait VolFunctional: Sync {
    fn eval(&self, c: &DMatrix<f64>) -> Result<f64>;
    /// Entrywise gradient `[∂g/∂c_jk]_{jk}`.
    fn grad(&self, c: &DMatrix<f64>) -> Result<DMatrix<f64>>;
    fn id(&self) -> String;
}

/// Built-in functional registry. Indices are zero-based internally;
/// the string form (`entry:1,2`, `eig:1`, `beta:1,2`) is one-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    /// `tr(c^p)`; for scalars simply `c^p`.
    Power(f64),
    /// `tr(c^{-1})`.
    Inverse,
    /// `tr(log c) = log det c`.
    Log,
    /// `tr(c)`.
    Trace,
    /// A single entry `c_{jk}`.
    Entry(usize, usize),
    /// The `r`-th largest eigenvalue.
    Eigenvalue(usize),
    /// Spot regression coefficient `beta_{j|k} = c_{jk} / c_{kk}`.
    Beta(usize, usize),
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Power(p) => write!(f, "power:{p}"),
            Functional::Inverse => write!(f, "inverse"),
            Functional::Log => write!(f, "log"),
            Functional::Trace => write!(f, "trace"),
            Functional::Entry(j, k) => write!(f, "entry:{},{}", j + 1, k + 1),
            Functional::Eigenvalue(r) => write!(f, "eig:{}", r + 1),
            Functional::Beta(j, k) => write!(f, "beta:{},{}", j + 1, k + 1),
        }
    }
}

impl FromStr for Functional {
    type Err = VolError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| VolError::Config(format!("functional `{s}`: {msg}"));
        let (head, args) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let parse_pair = |a: &str| -> Result<(usize, usize)> {
            let (j, k) = a
                .split_once([',', '|'])
                .ok_or_else(|| bad("expected two indices like 1,2"))?;
            let j: usize = j.trim().parse().map_err(|_| bad("bad index"))?;
            let k: usize = k.trim().parse().map_err(|_| bad("bad index"))?;
            if j == 0 || k == 0 {
                return Err(bad("indices are one-based"));
            }
            Ok((j - 1, k - 1))
        };
        match (head, args) {
            ("power", Some(a)) => {
                let p: f64 = a.parse().map_err(|_| bad("bad exponent"))?;
                Ok(Functional::Power(p))
            }
            ("inverse", None) => Ok(Functional::Inverse),
            ("log", None) => Ok(Functional::Log),
            ("trace", None) => Ok(Functional::Trace),
            ("entry", Some(a)) => {
                let (j, k) = parse_pair(a)?;
                Ok(Functional::Entry(j, k))
            }
            ("eig", Some(a)) | ("eigenvalue", Some(a)) => {
                let r: usize = a.trim().parse().map_err(|_| bad("bad eigenvalue index"))?;
                if r == 0 {
                    return Err(bad("eigenvalue index is one-based"));
                }
                Ok(Functional::Eigenvalue(r - 1))
            }
            ("beta", Some(a)) => {
                let (j, k) = parse_pair(a)?;
                if j == k {
                    return Err(bad("beta needs distinct indices"));
                }
                Ok(Functional::Beta(j, k))
            }
            _ => Err(bad(
                "unknown functional; expected power:p, inverse, log, trace, entry:j,k, eig:r, beta:j,k",
            )),
        }
    }
}

fn symmetrize(c: &DMatrix<f64>) -> DMatrix<f64> {
    (c + c.transpose()) * 0.5
}

/// Eigendecomposition of the symmetrized input, eigenvalues descending.
fn sym_eigen(c: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = symmetrize(c).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals = DVector::from_fn(order.len(), |i, _| eig.eigenvalues[order[i]]);
    let vecs = DMatrix::from_fn(order.len(), order.len(), |r, i| {
        eig.eigenvectors[(r, order[i])]
    });
    (vals, vecs)
}

fn spectral_map(c: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(c);
    let mapped = DMatrix::from_diagonal(&vals.map(f));
    &vecs * mapped * vecs.transpose()
}

fn min_eig(c: &DMatrix<f64>) -> f64 {
    if c.nrows() == 1 {
        c[(0, 0)]
    } else {
        sym_eigen(c).0.min()
    }
}

impl VolFunctional for Functional {
    fn eval(&self, c: &DMatrix<f64>) -> Result<f64> {
        let d = c.nrows();
        match self {
            Functional::Power(p) => {
                if d == 1 {
                    let v = c[(0, 0)];
                    if v < 0.0 && p.fract() != 0.0 {
                        return Err(VolError::Domain("power of negative value".into(), v));
                    }
                    return Ok(v.powf(*p));
                }
                let (vals, _) = sym_eigen(c);
                if p.fract() != 0.0 && vals.min() < 0.0 {
                    return Err(VolError::Domain(
                        "non-integer matrix power outside PSD cone".into(),
                        vals.min(),
                    ));
                }
                Ok(vals.iter().map(|l| l.powf(*p)).sum())
            }
            Functional::Inverse => {
                let m = min_eig(c);
                if m.abs() < 1e-300 {
                    return Err(VolError::Domain("matrix inverse of singular input".into(), m));
                }
                if d == 1 {
                    return Ok(1.0 / c[(0, 0)]);
                }
                let (vals, _) = sym_eigen(c);
                Ok(vals.iter().map(|l| 1.0 / l).sum())
            }
            Functional::Log => {
                let m = min_eig(c);
                if m <= 0.0 {
                    return Err(VolError::Domain("matrix log outside PSD cone".into(), m));
                }
                if d == 1 {
                    return Ok(c[(0, 0)].ln());
                }
                let (vals, _) = sym_eigen(c);
                Ok(vals.iter().map(|l| l.ln()).sum())
            }
            Functional::Trace => Ok(c.trace()),
            Functional::Entry(j, k) => in_bounds(c, *j, *k).map(|_| c[(*j, *k)]),
            Functional::Eigenvalue(r) => {
                if *r >= d {
                    return Err(VolError::Config(format!(
                        "eigenvalue index {} exceeds dimension {d}",
                        r + 1
                    )));
                }
                Ok(sym_eigen(c).0[*r])
            }
            Functional::Beta(j, k) => {
                in_bounds(c, *j, *k)?;
                let den = c[(*k, *k)];
                if den.abs() < 1e-300 {
                    return Err(VolError::Domain("beta with vanishing variance".into(), den));
                }
                Ok(c[(*j, *k)] / den)
            }
        }
    }

    fn grad(&self, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let d = c.nrows();
        match self {
            Functional::Power(p) => {
                if d == 1 {
                    let v = c[(0, 0)];
                    return Ok(DMatrix::from_element(1, 1, p * v.powf(p - 1.0)));
                }
                Ok(spectral_map(c, |l| p * l.powf(p - 1.0)))
            }
            Functional::Inverse => {
                let m = min_eig(c);
                if m.abs() < 1e-300 {
                    return Err(VolError::Domain("matrix inverse of singular input".into(), m));
                }
                if d == 1 {
                    let v = c[(0, 0)];
                    return Ok(DMatrix::from_element(1, 1, -1.0 / (v * v)));
                }
                Ok(-spectral_map(c, |l| 1.0 / (l * l)))
            }
            Functional::Log => {
                let m = min_eig(c);
                if m <= 0.0 {
                    return Err(VolError::Domain("matrix log outside PSD cone".into(), m));
                }
                if d == 1 {
                    return Ok(DMatrix::from_element(1, 1, 1.0 / c[(0, 0)]));
                }
                Ok(spectral_map(c, |l| 1.0 / l))
            }
            Functional::Trace => Ok(DMatrix::identity(d, d)),
            Functional::Entry(j, k) => {
                in_bounds(c, *j, *k)?;
                let mut g = DMatrix::zeros(d, d);
                g[(*j, *k)] = 1.0;
                Ok(g)
            }
            Functional::Eigenvalue(r) => {
                if *r >= d {
                    return Err(VolError::Config(format!(
                        "eigenvalue index {} exceeds dimension {d}",
                        r + 1
                    )));
                }
                let (_, vecs) = sym_eigen(c);
                let v = vecs.column(*r);
                Ok(&v * v.transpose())
            }
            Functional::Beta(j, k) => {
                in_bounds(c, *j, *k)?;
                let den = c[(*k, *k)];
                if den.abs() < 1e-300 {
                    return Err(VolError::Domain("beta with vanishing variance".into(), den));
                }
                let mut g = DMatrix::zeros(d, d);
                g[(*j, *k)] = 1.0 / den;
                g[(*k, *k)] = -c[(*j, *k)] / (den * den);
                Ok(g)
            }
        }
    }

    fn id(&self) -> String {
        self.to_string()
    }
}

fn in_bounds(c: &DMatrix<f64>, j: usize, k: usize) -> Result<()> {
    if j >= c.nrows() || k >= c.ncols() {
        return Err(VolError::Config(format!(
            "entry ({},{}) exceeds dimension {}",
            j + 1,
            k + 1,
            c.nrows()
        )));
    }
    Ok(())
}

/// The full tuning-parameter set of the functional estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningParams {
    pub n_freq: usize,
    pub m_order: usize,
    pub b: usize,
    pub l_trim: usize,
    pub kappa: Option<f64>,
}

/// Default inversion grid size: next power of two at or above
/// `max(4 M, 8 ceil(sqrt(N)))`, which keeps `B / sqrt(N)` large.
pub fn default_b(n_freq: usize, m_order: usize) -> usize {
    let target = (4 * m_order).max(8 * (n_freq as f64).sqrt().ceil() as usize);
    target.next_power_of_two()
}

/// Default boundary trim: zero in periodic-boundary mode, otherwise of
/// order `B / M`.
pub fn default_l(b: usize, m_order: usize, periodic: bool) -> usize {
    if periodic {
        0
    } else {
        b.div_ceil(m_order)
    }
}

/// Validates hard frequency-availability constraints (errors) and checks the
/// asymptotic tuning conditions (returned as advisory warnings).
pub fn validate_tuning(
    t: &TuningParams,
    sample_sizes: &[usize],
    holder_alpha: f64,
    periodic: bool,
) -> Result<Vec<String>> {
    if t.n_freq == 0 {
        return Err(VolError::Tuning("N must be >= 1".into()));
    }
    if t.m_order < 2 {
        return Err(VolError::Tuning("M must be >= 2".into()));
    }
    if t.b < 2 * t.m_order - 1 {
        return Err(VolError::Tuning(format!(
            "B = {} aliases the spectral coefficients; need B >= 2M - 1 = {}",
            t.b,
            2 * t.m_order - 1
        )));
    }
    if t.l_trim >= t.b / 2 {
        return Err(VolError::Tuning(format!(
            "trim L = {} leaves no interior points for B = {}",
            t.l_trim, t.b
        )));
    }
    let n_min = *sample_sizes
        .iter()
        .min()
        .ok_or_else(|| VolError::Data("no sample sizes".into()))?;
    let bound = (n_min / 2 + 1).saturating_sub(t.m_order);
    if t.n_freq > bound {
        return Err(VolError::Tuning(format!(
            "N = {} exceeds the availability bound floor(n_min/2) - M + 1 = {} (n_min = {})",
            t.n_freq, bound, n_min
        )));
    }
    if let Some(k) = t.kappa {
        if !(k > 0.0) {
            return Err(VolError::Tuning(format!("kappa must be positive, got {k}")));
        }
    }

    let mut warnings = Vec::new();
    let n = t.n_freq as f64;
    let m = t.m_order as f64;
    if m <= n.powf(1.0 / (1.0 + 2.0 * holder_alpha)) {
        warnings.push(format!(
            "M = {} is small next to N^(1/(1+2a)) = {:.1} for Holder exponent a = {holder_alpha}; \
             the smoothing bias may dominate",
            t.m_order,
            n.powf(1.0 / (1.0 + 2.0 * holder_alpha))
        ));
    }
    if m >= n.sqrt() {
        warnings.push(format!(
            "M = {} is not small next to sqrt(N) = {:.1}; the statistical error may dominate",
            t.m_order,
            n.sqrt()
        ));
    }
    if (t.b as f64) < 4.0 * n.sqrt() {
        warnings.push(format!(
            "B = {} is small next to sqrt(N) = {:.1}; the Riemann-sum error may not be negligible",
            t.b,
            n.sqrt()
        ));
    }
    if periodic && t.l_trim > 0 {
        warnings.push("L > 0 with periodic boundaries discards usable interior points".into());
    }
    if !periodic {
        if t.l_trim == 0 {
            warnings.push(
                "L = 0 with non-periodic boundaries keeps the contaminated boundary band".into(),
            );
        } else {
            let ratio = t.l_trim as f64 * m / t.b as f64;
            if !(0.5..=2.0).contains(&ratio) {
                warnings.push(format!(
                    "L = {} is far from the B/M = {:.1} order prescribed for non-periodic data",
                    t.l_trim,
                    t.b as f64 / m
                ));
            }
        }
    }
    Ok(warnings)
}

/// Trimmed Riemann-sum plug-in estimator
/// `sum_{h=1+L}^{B-L} g(c(hT/B)) T/B`; index `B` wraps periodically.
pub fn plug_in_estimate(path: &SpotPath, g: &dyn VolFunctional, l_trim: usize) -> Result<f64> {
    let b = path.len();
    if 2 * l_trim >= b {
        return Err(VolError::Config(format!(
            "trim L = {l_trim} empties the Riemann sum for B = {b}"
        )));
    }
    let w = path.t_window / b as f64;
    let mut acc = 0.0;
    for h in (1 + l_trim)..=(b - l_trim) {
        let v = g.eval(path.value_periodic(h)).map_err(|e| {
            VolError::Estimation(format!(
                "functional {} failed at t = {}: {e}",
                g.id(),
                h as f64 * w
            ))
        })?;
        acc += v;
    }
    Ok(acc * w)
}

/// Univariate plug-in on the asset's own observation times:
/// `sum_{h=1+L}^{n_j-L} g(c_jj(tau_h)) Delta_h`, with the spot estimate
/// evaluated by the direct Fejér series and clamped below at `clamp_eps`.
pub fn univariate_plug_in(
    spec: &crate::spectrum::SpectrumEstimate,
    m_order: usize,
    grid: &crate::grid::ObservationGrid,
    asset: usize,
    g: &dyn VolFunctional,
    l_trim: usize,
    clamp_eps: f64,
) -> Result<f64> {
    let n = grid.n_intervals();
    if 2 * l_trim >= n {
        return Err(VolError::Config(format!(
            "trim L = {l_trim} empties the native-grid sum for n = {n}"
        )));
    }
    let times = grid.times();
    let mut acc = 0.0;
    for h in (1 + l_trim)..=(n - l_trim) {
        let tau = times[h];
        let c = crate::spot::fejer_series_at(spec, m_order, asset, asset, tau).max(clamp_eps);
        let v = g
            .eval(&DMatrix::from_element(1, 1, c))
            .map_err(|e| VolError::Estimation(format!("functional {} failed at t = {tau}: {e}", g.id())))?;
        acc += v * (times[h] - times[h - 1]);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spot::SpotKind;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn const_path(v: f64, b: usize) -> SpotPath {
        SpotPath::from_values(
            1.0,
            1,
            SpotKind::TruePath,
            (0..b).map(|_| DMatrix::from_element(1, 1, v)).collect(),
        )
    }

    fn random_psd(d: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.3
    }

    #[test]
    fn scalar_evaluations() {
        let c = DMatrix::from_element(1, 1, 0.16);
        assert_relative_eq!(
            Functional::Power(2.0).eval(&c).unwrap(),
            0.0256,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            Functional::Log.eval(&c).unwrap(),
            -1.8326,
            max_relative = 1e-4
        );
        // the scalar log agrees with the eigendecomposition path
        let c2 = DMatrix::from_row_slice(2, 2, &[0.16, 0.0, 0.0, 1.0]);
        assert_relative_eq!(
            Functional::Log.eval(&c2).unwrap(),
            0.16f64.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn eigenvalue_of_diagonal_matrix() {
        let c = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.1]);
        assert_relative_eq!(
            Functional::Eigenvalue(0).eval(&c).unwrap(),
            0.2,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            Functional::Eigenvalue(1).eval(&c).unwrap(),
            0.1,
            max_relative = 1e-14
        );
    }

    #[test]
    fn domain_errors_carry_min_eigenvalue() {
        let c = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, -0.2]);
        match Functional::Log.eval(&c) {
            Err(VolError::Domain(_, m)) => assert_relative_eq!(m, -0.2, max_relative = 1e-12),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn parses_cli_ids() {
        assert_eq!("power:2".parse::<Functional>().unwrap(), Functional::Power(2.0));
        assert_eq!("inverse".parse::<Functional>().unwrap(), Functional::Inverse);
        assert_eq!(
            "entry:1,2".parse::<Functional>().unwrap(),
            Functional::Entry(0, 1)
        );
        assert_eq!("eig:1".parse::<Functional>().unwrap(), Functional::Eigenvalue(0));
        assert_eq!("beta:2,1".parse::<Functional>().unwrap(), Functional::Beta(1, 0));
        assert!("beta:1,1".parse::<Functional>().is_err());
        assert!("nope".parse::<Functional>().is_err());
    }

    /// Central finite differences on symmetric perturbations: for `j != k`
    /// the perturbation `h (E_jk + E_kj)` identifies `grad_jk + grad_kj`.
    fn fd_check(g: &Functional, c: &DMatrix<f64>, tol: f64) {
        let d = c.nrows();
        let grad = g.grad(c).unwrap();
        let scale = c.trace() / d as f64;
        let h = 1e-5 * scale;
        for j in 0..d {
            for k in j..d {
                let mut up = c.clone();
                let mut dn = c.clone();
                up[(j, k)] += h;
                dn[(j, k)] -= h;
                if j != k {
                    up[(k, j)] += h;
                    dn[(k, j)] -= h;
                }
                let fd = (g.eval(&up).unwrap() - g.eval(&dn).unwrap()) / (2.0 * h);
                let analytic = if j == k {
                    grad[(j, j)]
                } else {
                    grad[(j, k)] + grad[(k, j)]
                };
                assert!(
                    (fd - analytic).abs() <= tol * analytic.abs().max(1.0),
                    "{} at ({j},{k}): fd {fd} vs analytic {analytic}",
                    g.id()
                );
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let gs = [
            Functional::Power(2.0),
            Functional::Power(3.0),
            Functional::Inverse,
            Functional::Log,
            Functional::Trace,
            Functional::Entry(0, 1),
            Functional::Eigenvalue(0),
            Functional::Beta(0, 1),
        ];
        for _ in 0..10 {
            let c = random_psd(2, &mut rng);
            for g in &gs {
                fd_check(g, &c, 1e-6);
            }
        }
    }

    #[test]
    fn plug_in_on_constant_path_is_exact() {
        let path = const_path(0.16, 64);
        let v = plug_in_estimate(&path, &Functional::Power(2.0), 0).unwrap();
        assert_relative_eq!(v, 0.0256, max_relative = 1e-13);
    }

    #[test]
    fn trim_scales_constant_plug_in_exactly() {
        let b = 64;
        let l = 10;
        let path = const_path(0.16, b);
        let v = plug_in_estimate(&path, &Functional::Power(2.0), l).unwrap();
        let expected = 0.0256 * (b - 2 * l) as f64 / b as f64;
        assert_relative_eq!(v, expected, max_relative = 1e-13);
    }

    #[test]
    fn tuning_validator_flags() {
        // the N^{1/(1+2a)} << M << sqrt(N) window is non-empty only for a > 1/2
        let alpha = 0.75;
        let good = TuningParams {
            n_freq: 512,
            m_order: 16,
            b: 256,
            l_trim: 0,
            kappa: None,
        };
        let warnings = validate_tuning(&good, &[4096], alpha, true).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");

        // hard violation of the availability bound
        let bad = TuningParams {
            n_freq: 2100,
            m_order: 12,
            b: 256,
            l_trim: 0,
            kappa: None,
        };
        assert!(validate_tuning(&bad, &[4096], alpha, true).is_err());

        // advisory: M too large next to sqrt(N)
        let warn = TuningParams {
            n_freq: 100,
            m_order: 12,
            b: 256,
            l_trim: 0,
            kappa: None,
        };
        assert!(!validate_tuning(&warn, &[4096], alpha, true).unwrap().is_empty());

        // advisory: non-periodic data without trimming
        assert!(!validate_tuning(&good, &[4096], alpha, false).unwrap().is_empty());
    }

    #[test]
    fn riemann_refinement_halves_with_b() {
        // the error of the B-point sum shrinks at least geometrically in B
        // (g = log of a positive trigonometric polynomial is not integrated
        // exactly by any finite equally-spaced rule)
        use num_complex::Complex64;
        let coeffs = vec![
            vec![Complex64::new(0.2, 0.0)],
            vec![Complex64::new(0.03, 0.01)],
            vec![Complex64::new(0.01, -0.005)],
        ];
        let spec =
            crate::spectrum::SpectrumEstimate::from_coeffs(1.0, 8, 1, vec![64], coeffs);
        let g = Functional::Log;
        let reference = {
            let path = crate::spot::fejer_inversion(&spec, 3, 4096).unwrap();
            plug_in_estimate(&path, &g, 0).unwrap()
        };
        let mut errs = Vec::new();
        for b in [8usize, 16, 32] {
            let path = crate::spot::fejer_inversion(&spec, 3, b).unwrap();
            errs.push((plug_in_estimate(&path, &g, 0).unwrap() - reference).abs());
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }
}
