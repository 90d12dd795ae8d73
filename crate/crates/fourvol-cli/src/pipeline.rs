//! End-to-end orchestration: tuning resolution, dataset estimation,
//! Monte Carlo replication loops and result emission.

use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

use fourvol::error::{Result, VolError};
use fourvol::functionals::{
    default_b, default_l, plug_in_estimate, validate_tuning, Functional, TuningParams,
    VolFunctional,
};
use fourvol::grid::ObservationGrid;
use fourvol::inference::{
    async_bias_estimate, avar_estimate_multi, confidence_interval, studentize, Diagnostics,
    EstimateReport, RateRegime,
};
use fourvol::simulate::{
    sample_asynchronous, simulate_fbm_vol, simulate_heston_bridge_multi, true_functional,
    FbmVolParams, LatentPath, SamplingConfig, SamplingScheme,
};
use fourvol::spectrum::spectrum_matrix;
use fourvol::spot::{condition_spot, default_clamp_eps, fejer_inversion, SpotPath};
use fourvol::stats;
use fourvol::TickSeries;

use crate::config::{Mode, ModelConfig, NRule, RunConfig, SchemeConfig, SimulationConfig};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic disjoint seed streams: one per (tag, index).
pub fn derive_seed(base: u64, tag: u64, idx: u64) -> u64 {
    splitmix64(splitmix64(base ^ (tag << 48)) ^ idx)
}

/// Fully-resolved tuning for one dataset.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedTuning {
    pub n_freq: usize,
    pub m_order: usize,
    pub b: usize,
    pub l_trim: usize,
    /// Effective kappa `N / n_min^{4/5}` in the biased-optimal-rate regime.
    pub kappa_eff: Option<f64>,
    pub alpha_holder: f64,
    pub kernel_budget: Option<u64>,
}

pub fn resolve_tuning(
    cfg: &RunConfig,
    n_min: usize,
    periodic: bool,
) -> Result<(ResolvedTuning, Vec<String>)> {
    let t = &cfg.tuning;
    let m_order = t
        .m_order
        .unwrap_or_else(|| ((n_min as f64).powf(0.3) as usize).max(2));
    let full_bound = (n_min / 2 + 1).saturating_sub(m_order);
    let from_rule = |r: &NRule| -> usize {
        match *r {
            NRule::Power { exponent } => (n_min as f64).powf(exponent) as usize,
            NRule::Full => full_bound,
            NRule::Fixed { value } => value,
        }
    };
    let n_freq = match (&t.n_rule, cfg.mode) {
        (Some(r), _) => from_rule(r),
        (None, Mode::General) => (n_min as f64).powf(0.75) as usize,
        (None, Mode::SynchronousOptimal) => full_bound,
        (None, Mode::BiasedOptimalRate) => {
            let kappa = t.kappa.ok_or_else(|| {
                VolError::Config(
                    "biased-optimal-rate mode needs tuning.kappa for N = floor(kappa n^(4/5))".into(),
                )
            })?;
            ((kappa * (n_min as f64).powf(0.8)) as usize).min(full_bound)
        }
    };
    let kappa_eff = match cfg.mode {
        Mode::BiasedOptimalRate => Some(n_freq as f64 / (n_min as f64).powf(0.8)),
        _ => None,
    };
    let b = t.b.unwrap_or_else(|| default_b(n_freq, m_order));
    let l_trim = t.l_trim.unwrap_or_else(|| default_l(b, m_order, periodic));
    let alpha_holder = t.alpha_holder.unwrap_or(1.0);
    let params = TuningParams {
        n_freq,
        m_order,
        b,
        l_trim,
        kappa: kappa_eff,
    };
    let warnings = validate_tuning(&params, &[n_min], alpha_holder, periodic)?;
    Ok((
        ResolvedTuning {
            n_freq,
            m_order,
            b,
            l_trim,
            kappa_eff,
            alpha_holder,
            kernel_budget: t.kernel_budget,
        },
        warnings,
    ))
}

fn all_synchronous(grids: &[ObservationGrid]) -> bool {
    grids.windows(2).all(|w| w[0].is_synchronous_with(&w[1]))
}

/// One dataset fully estimated: reports plus the pieces the Monte Carlo
/// layer studentizes.
#[derive(Debug)]
pub struct DatasetEstimate {
    pub reports: Vec<EstimateReport>,
    pub spot: SpotPath,
    pub tuning: ResolvedTuning,
    pub avar_per_t: Vec<Vec<f64>>,
}

pub fn estimate_dataset(ticks: &[TickSeries], cfg: &RunConfig) -> Result<DatasetEstimate> {
    let grids: Vec<ObservationGrid> = ticks.iter().map(|t| t.grid.clone()).collect();
    let n_min = ticks
        .iter()
        .map(|t| t.n_intervals())
        .min()
        .ok_or_else(|| VolError::Data("no tick series".into()))?;
    let synchronous = all_synchronous(&grids);
    if cfg.mode == Mode::SynchronousOptimal && !synchronous {
        return Err(VolError::Config(
            "refusing synchronous-optimal tuning on asynchronous data (the curse of \
             asynchronicity: full frequency usage biases the cross-spectrum once N Delta(n) \
             is of order one); use mode \"general\" or \"biased-optimal-rate\""
                .into(),
        ));
    }
    let periodic = cfg.periodic();
    let (tuning, warnings) = resolve_tuning(cfg, n_min, periodic)?;
    let level = cfg.level.unwrap_or(0.05);
    let gs: Vec<Functional> = cfg
        .functionals
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;

    let spec = spectrum_matrix(ticks, tuning.n_freq, Some(tuning.m_order - 1))?;
    let raw = fejer_inversion(&spec, tuning.m_order, tuning.b)?;
    let clamp_eps = default_clamp_eps(&raw);
    let spot = condition_spot(&raw, clamp_eps);

    let g_refs: Vec<&dyn VolFunctional> = gs.iter().map(|g| g as &dyn VolFunctional).collect();
    let avars = avar_estimate_multi(&spot, &g_refs, &grids, tuning.n_freq, tuning.kernel_budget)?;
    let theta_summary = fourvol::inference::theta_summary(&grids, tuning.n_freq)?;

    let max_mesh = grids.iter().map(|g| g.max_spacing()).fold(0.0f64, f64::max);
    let min_spacing = grids
        .iter()
        .map(|g| g.min_spacing())
        .fold(f64::INFINITY, f64::min);
    let rate_sqrt_n = (tuning.n_freq as f64).sqrt();

    let mut reports = Vec::with_capacity(gs.len());
    let mut per_t = Vec::with_capacity(gs.len());
    for (g, avar) in gs.iter().zip(&avars) {
        let s_hat = plug_in_estimate(&spot, g, tuning.l_trim)?;
        let v_raw = avar.value;
        let mu_raw = match cfg.mode {
            Mode::BiasedOptimalRate => Some(async_bias_estimate(
                &spot,
                g,
                &grids,
                tuning.kappa_eff.unwrap(),
                n_min,
            )?),
            _ => None,
        };
        // the regime changes only the reported normalization; intervals and
        // studentized statistics are computed on the N^(1/2) scale
        let (regime, rate_label, rate_value, v_display, mu_display) = match cfg.mode {
            Mode::General => (
                RateRegime::General,
                "N^(1/2)".to_string(),
                rate_sqrt_n,
                v_raw,
                None,
            ),
            Mode::SynchronousOptimal => {
                let rate = 1.0 / max_mesh.sqrt();
                (
                    RateRegime::SynchronousOptimal,
                    "Delta(n)^(-1/2)".to_string(),
                    rate,
                    v_raw / (tuning.n_freq as f64 * max_mesh),
                    None,
                )
            }
            Mode::BiasedOptimalRate => {
                let kappa = tuning.kappa_eff.unwrap();
                let rate = (n_min as f64).powf(0.4);
                (
                    RateRegime::BiasedOptimalRate,
                    "n_min^(2/5)".to_string(),
                    rate,
                    v_raw / kappa,
                    mu_raw.map(|m| m / kappa.sqrt()),
                )
            }
        };
        let v_positive = v_raw > 0.0;
        let se = v_positive.then(|| (v_raw).sqrt() / rate_sqrt_n);
        let ci = if v_positive {
            Some(confidence_interval(
                s_hat,
                v_raw,
                rate_sqrt_n,
                mu_raw.unwrap_or(0.0),
                level,
            )?)
        } else {
            None
        };
        reports.push(EstimateReport {
            functional: g.id(),
            s_hat,
            v_hat: v_display.max(0.0),
            mu_hat: mu_display,
            rate_regime: regime,
            rate_label,
            rate_value,
            se,
            ci,
            level,
            diagnostics: Diagnostics {
                n_freq: tuning.n_freq,
                m_order: tuning.m_order,
                b: tuning.b,
                l_trim: tuning.l_trim,
                kappa: tuning.kappa_eff,
                sample_sizes: spec.sample_sizes.clone(),
                max_mesh,
                min_spacing,
                synchronous,
                v_hat_raw: v_raw,
                v_hat_positive: v_positive,
                avar_stride: avar.stride,
                max_imag_residue: spot.max_imag_residue,
                clamp_eps,
                theta_summary: theta_summary.clone(),
                tuning_warnings: warnings.clone(),
            },
        });
        per_t.push(avar.per_t.clone());
    }
    Ok(DatasetEstimate {
        reports,
        spot,
        tuning,
        avar_per_t: per_t,
    })
}

/// Builds the latent path and tick panel for one replication.
pub fn simulate_dataset(
    sim: &SimulationConfig,
    base_seed: u64,
    rep: u64,
) -> Result<(LatentPath, Vec<TickSeries>)> {
    let path_seed = derive_seed(base_seed, 1, rep);
    let path = match &sim.model {
        ModelConfig::HestonBridge { assets, corr } => {
            let params: Vec<fourvol::simulate::HestonParams> =
                assets.iter().map(|&a| a.into()).collect();
            let d = params.len();
            let corr = match corr {
                Some(rows) => nalgebra::DMatrix::from_fn(d, d, |j, k| rows[j][k]),
                None => nalgebra::DMatrix::identity(d, d),
            };
            simulate_heston_bridge_multi(&params, &corr, sim.t_window, sim.dt, path_seed)?
        }
        ModelConfig::FbmVol {
            hurst,
            log_level,
            scale,
            drift,
        } => {
            let defaults = FbmVolParams::default();
            simulate_fbm_vol(
                &FbmVolParams {
                    hurst: *hurst,
                    log_level: log_level.unwrap_or(defaults.log_level),
                    scale: scale.unwrap_or(defaults.scale),
                    drift: drift.unwrap_or(defaults.drift),
                },
                sim.t_window,
                sim.dt,
                path_seed,
            )?
        }
    };
    let schemes: Vec<SamplingConfig> = sim
        .schemes
        .iter()
        .enumerate()
        .map(|(j, s)| SamplingConfig {
            scheme: match *s {
                SchemeConfig::Regular { mesh } => SamplingScheme::Regular { mesh },
                SchemeConfig::PoissonThinning {
                    mesh,
                    keep_prob,
                    max_gap,
                } => SamplingScheme::PoissonThinning {
                    mesh,
                    keep_prob,
                    max_gap,
                },
                SchemeConfig::OffsetRegular { mesh, offset } => {
                    SamplingScheme::OffsetRegular { mesh, offset }
                }
            },
            seed: derive_seed(base_seed, 2 + j as u64, rep),
        })
        .collect();
    let ticks = sample_asynchronous(&path, &schemes)?;
    Ok((path, ticks))
}

/// Runs the estimation pipeline once and writes reports, the spot path and
/// the variance summands under `output_dir` (when configured).
pub fn run_estimation(cfg: &RunConfig) -> Result<Vec<EstimateReport>> {
    let ticks = load_ticks(cfg, 0)?;
    let est = estimate_dataset(&ticks, cfg)?;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| VolError::Data(format!("cannot create {}: {e}", dir.display())))?;
        write_json(&dir.join("reports.json"), &est.reports)?;
        let mut spot_csv = Vec::new();
        est.spot
            .write_csv(&mut spot_csv)
            .map_err(|e| VolError::Data(format!("spot CSV: {e}")))?;
        std::fs::write(dir.join("spot_path.csv"), spot_csv)
            .map_err(|e| VolError::Data(format!("cannot write spot path: {e}")))?;
        write_avar_summands(&dir.join("avar_summands.csv"), &est)?;
    }
    Ok(est.reports)
}

fn load_ticks(cfg: &RunConfig, rep: u64) -> Result<Vec<TickSeries>> {
    if !cfg.tick_files.is_empty() {
        crate::ticks::parse_ticks_files(&cfg.tick_files, cfg.window_t, false)
    } else {
        let sim = cfg.simulation.as_ref().unwrap();
        Ok(simulate_dataset(sim, cfg.seed, rep)?.1)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| VolError::Numerical(format!("serialization: {e}")))?;
    std::fs::write(path, text)
        .map_err(|e| VolError::Data(format!("cannot write {}: {e}", path.display())))
}

fn write_avar_summands(path: &Path, est: &DatasetEstimate) -> Result<()> {
    let mut out = String::from("t");
    for r in &est.reports {
        out.push_str(&format!(",{}", r.functional.replace(',', ";")));
    }
    out.push('\n');
    let b = est.spot.len();
    for h in 0..b {
        out.push_str(&format!("{}", (h + 1) as f64 * est.spot.t_window / b as f64));
        for per_t in &est.avar_per_t {
            out.push_str(&format!(",{}", per_t[h]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| VolError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Per-functional Monte Carlo summary of studentized statistics.
#[derive(Debug, Clone, Serialize)]
pub struct McFunctionalSummary {
    pub functional: String,
    pub method: String,
    pub replications_ok: usize,
    pub failures: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub ks_stat: f64,
    pub ks_p: f64,
    pub coverage: f64,
    pub median_rel_error: f64,
    /// Set when the studentized statistics collapse to a point mass.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct McSample {
    pub rep: usize,
    pub functional: String,
    pub method: String,
    pub s_hat: f64,
    pub s_true: f64,
    pub v_hat: f64,
    pub stat: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct McOutput {
    pub replications: usize,
    pub seed: u64,
    pub summaries: Vec<McFunctionalSummary>,
    #[serde(skip)]
    pub samples: Vec<McSample>,
}

struct RepOutcome {
    rep: usize,
    samples: Vec<McSample>,
    failed: Option<String>,
}

/// Ground truth restricted to `[lo, hi]` (for trimmed baselines).
fn true_functional_window(
    path: &LatentPath,
    g: &dyn VolFunctional,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let n = path.n_steps();
    let mut acc = 0.0;
    for i in 0..n {
        let t0 = path.time(i).max(lo);
        let t1 = path.time(i + 1).min(hi);
        if t1 <= t0 {
            continue;
        }
        acc += g.eval(&path.c_matrix(i))? * (t1 - t0);
    }
    Ok(acc)
}

/// Replication loop: simulate, estimate, studentize against the per-path
/// ground truth. Failed replications are counted and skipped.
pub fn run_montecarlo(cfg: &RunConfig) -> Result<McOutput> {
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| VolError::Config("montecarlo needs a simulation block".into()))?;
    let reps = cfg.replications.unwrap_or(100);
    let level = cfg.level.unwrap_or(0.05);
    let gs: Vec<Functional> = cfg
        .functionals
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;

    let outcomes: Vec<RepOutcome> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let run = || -> Result<Vec<McSample>> {
                let (path, ticks) = simulate_dataset(sim, cfg.seed, rep as u64)?;
                let est = estimate_dataset(&ticks, cfg)?;
                let rate = (est.tuning.n_freq as f64).sqrt();
                let mut out = Vec::with_capacity(gs.len());
                for (g, report) in gs.iter().zip(&est.reports) {
                    let s_true = true_functional(&path, g)?;
                    // the report's bias is normalized for display; undo that
                    let mu_raw = report
                        .mu_hat
                        .map(|m| m * est.tuning.kappa_eff.unwrap().sqrt());
                    let v_raw = report.diagnostics.v_hat_raw;
                    let stat =
                        studentize(report.s_hat - mu_raw.unwrap_or(0.0) / rate, v_raw, rate, s_true)?;
                    let covered = report
                        .ci
                        .map(|(lo, hi)| lo <= s_true && s_true <= hi)
                        .unwrap_or(false);
                    out.push(McSample {
                        rep,
                        functional: g.id(),
                        method: "fourier".into(),
                        s_hat: report.s_hat,
                        s_true,
                        v_hat: v_raw,
                        stat,
                        covered,
                    });
                }
                if cfg.baseline_rv {
                    out.extend(rv_baseline_samples(cfg, &path, &ticks, &gs, rep, level)?);
                }
                Ok(out)
            };
            match run() {
                Ok(samples) => RepOutcome {
                    rep,
                    samples,
                    failed: None,
                },
                Err(e) => RepOutcome {
                    rep,
                    samples: Vec::new(),
                    failed: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut samples: Vec<McSample> = Vec::new();
    let mut sorted = outcomes;
    sorted.sort_by_key(|o| o.rep);
    for o in &sorted {
        if let Some(msg) = &o.failed {
            eprintln!("replication {} failed: {msg}", o.rep);
        }
    }
    for o in sorted {
        samples.extend(o.samples);
    }

    let mut summaries = Vec::new();
    let mut methods: Vec<String> = vec!["fourier".into()];
    if cfg.baseline_rv {
        methods.push("rv".into());
    }
    for method in &methods {
        for g in &gs {
            let rows: Vec<&McSample> = samples
                .iter()
                .filter(|s| s.functional == g.id() && &s.method == method)
                .collect();
            if rows.is_empty() {
                summaries.push(McFunctionalSummary {
                    functional: g.id(),
                    method: method.clone(),
                    replications_ok: 0,
                    failures: reps,
                    mean: f64::NAN,
                    std: f64::NAN,
                    skewness: f64::NAN,
                    ks_stat: f64::NAN,
                    ks_p: f64::NAN,
                    coverage: f64::NAN,
                    median_rel_error: f64::NAN,
                    degenerate: false,
                });
                continue;
            }
            let stats_vec: Vec<f64> = rows.iter().map(|s| s.stat).collect();
            let rel_err: Vec<f64> = rows
                .iter()
                .map(|s| ((s.s_hat - s.s_true) / s.s_true).abs())
                .collect();
            let std = stats::std_dev(&stats_vec);
            let degenerate = !(std > 1e-8);
            let (ks_stat, ks_p) = if degenerate {
                (f64::NAN, f64::NAN)
            } else {
                stats::ks_test_standard_normal(&stats_vec)
            };
            summaries.push(McFunctionalSummary {
                functional: g.id(),
                method: method.clone(),
                replications_ok: rows.len(),
                failures: reps - rows.len(),
                mean: stats::mean(&stats_vec),
                std,
                skewness: stats::skewness(&stats_vec),
                ks_stat,
                ks_p,
                coverage: rows.iter().filter(|s| s.covered).count() as f64 / rows.len() as f64,
                median_rel_error: stats::median(&rel_err),
                degenerate,
            });
        }
    }

    let out = McOutput {
        replications: reps,
        seed: cfg.seed,
        summaries,
        samples,
    };
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| VolError::Data(format!("cannot create {}: {e}", dir.display())))?;
        write_json(&dir.join("mc_summary.json"), &out)?;
        let mut csv = String::from("rep,functional,method,s_hat,s_true,v_hat,stat,covered\n");
        for s in &out.samples {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.rep,
                s.functional.replace(',', ";"),
                s.method,
                s.s_hat,
                s.s_true,
                s.v_hat,
                s.stat,
                s.covered
            ));
        }
        std::fs::write(dir.join("mc_samples.csv"), csv)
            .map_err(|e| VolError::Data(format!("cannot write samples: {e}")))?;
    }
    Ok(out)
}

/// Realized-variance baseline for one replication (univariate synchronous
/// data): plug-in, efficient-bound variance estimate, studentized statistic
/// against the trimmed-window ground truth.
fn rv_baseline_samples(
    _cfg: &RunConfig,
    path: &LatentPath,
    ticks: &[TickSeries],
    gs: &[Functional],
    rep: usize,
    level: f64,
) -> Result<Vec<McSample>> {
    if ticks.len() != 1 {
        return Err(VolError::Config(
            "the realized-variance baseline is univariate".into(),
        ));
    }
    let ts = &ticks[0];
    let n = ts.n_intervals();
    let t_window = ts.grid.window();
    let max_mesh = ts.grid.max_spacing();
    let k_n = ((t_window / max_mesh).powf(0.45) as usize).clamp(1, n / 2);
    let times = ts.grid.times();
    let (lo, hi) = (times[k_n], times[n - k_n]);
    let rate = 1.0 / max_mesh.sqrt();
    let z = fourvol::stats::standard_normal_quantile(1.0 - level / 2.0);

    let spot_native = rv_native_values(ts, k_n)?;
    let mut out = Vec::with_capacity(gs.len());
    for g in gs {
        let s_hat = fourvol::rv::rv_plug_in(ts, g, k_n)?;
        // efficient-bound variance V* = 2 int (dg(c) c)^2 dt from the RV path
        let mut v_star = 0.0;
        let mut c = nalgebra::DMatrix::zeros(1, 1);
        for h in k_n..=(n - k_n) {
            c[(0, 0)] = spot_native[h];
            let grad = g.grad(&c)?[(0, 0)];
            v_star += 2.0 * (grad * spot_native[h]).powi(2) * (times[h] - times[h - 1]);
        }
        let s_true = true_functional_window(path, g, lo, hi)?;
        let stat = studentize(s_hat, v_star, rate, s_true)?;
        let half = z * v_star.sqrt() / rate;
        out.push(McSample {
            rep,
            functional: g.id(),
            method: "rv".into(),
            s_hat,
            s_true,
            v_hat: v_star,
            stat,
            covered: (s_hat - half) <= s_true && s_true <= (s_hat + half),
        });
    }
    Ok(out)
}

fn rv_native_values(ts: &TickSeries, k_n: usize) -> Result<Vec<f64>> {
    let b = ts.n_intervals() + 1;
    let path = fourvol::rv::rv_spot(ts, k_n, b)?;
    // read back at native times (the b-grid aligns with them on regular data)
    let times = ts.grid.times();
    let t_window = ts.grid.window();
    Ok(times
        .iter()
        .map(|&t| {
            let h = ((t / t_window) * b as f64).min(b as f64 - 1.0) as usize;
            path.value(h)[(0, 0)]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn sim_config(json_extra: &str) -> RunConfig {
        let text = format!(
            r#"{{
            "simulation": {{
                "model": {{"kind": "heston-bridge", "assets": [{{}}]}},
                "t_window": 1.0,
                "dt": 0.00048828125,
                "schemes": [{{"kind": "regular", "mesh": 0.00048828125}}]
            }},
            "functionals": ["power:2"],
            "seed": 11
            {json_extra}
        }}"#
        );
        RunConfig::from_json(&text).unwrap()
    }

    #[test]
    fn estimation_is_deterministic() {
        let cfg = sim_config("");
        let (_, ticks) = simulate_dataset(cfg.simulation.as_ref().unwrap(), cfg.seed, 0).unwrap();
        let a = estimate_dataset(&ticks, &cfg).unwrap();
        let b = estimate_dataset(&ticks, &cfg).unwrap();
        let ja = serde_json::to_string(&a.reports).unwrap();
        let jb = serde_json::to_string(&b.reports).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn synchronous_optimal_refuses_asynchronous_data() {
        let text = r#"{
            "simulation": {
                "model": {"kind": "heston-bridge",
                          "assets": [{}, {}],
                          "corr": [[1.0, 0.5], [0.5, 1.0]]},
                "t_window": 1.0,
                "dt": 0.00048828125,
                "schemes": [
                    {"kind": "poisson-thinning", "mesh": 0.00048828125, "keep_prob": 0.7},
                    {"kind": "poisson-thinning", "mesh": 0.00048828125, "keep_prob": 0.7}
                ]
            },
            "functionals": ["entry:1,2"],
            "mode": "synchronous-optimal",
            "seed": 5
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let (_, ticks) = simulate_dataset(cfg.simulation.as_ref().unwrap(), cfg.seed, 0).unwrap();
        let err = estimate_dataset(&ticks, &cfg).unwrap_err();
        assert!(err.to_string().contains("curse of asynchronicity"), "{err}");
    }

    #[test]
    fn seed_streams_are_disjoint() {
        let a = derive_seed(1, 1, 0);
        let b = derive_seed(1, 2, 0);
        let c = derive_seed(1, 1, 1);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, 1, 0));
    }

    #[test]
    fn small_montecarlo_runs_and_summarizes() {
        let mut cfg = sim_config(r#", "replications": 8, "baseline_rv": true"#);
        cfg.replications = Some(8);
        let out = run_montecarlo(&cfg).unwrap();
        assert_eq!(out.summaries.len(), 2); // fourier + rv
        let s = &out.summaries[0];
        assert_eq!(s.replications_ok, 8);
        assert!(!s.degenerate);
        assert_eq!(out.samples.len(), 16);
    }

    #[test]
    fn biased_mode_shifts_interval_by_bias_over_rate() {
        let mesh = 1.0 / 512.0;
        let text = format!(
            r#"{{
            "simulation": {{
                "model": {{"kind": "heston-bridge", "assets": [{{}}, {{}}],
                          "corr": [[1.0, 0.5], [0.5, 1.0]]}},
                "t_window": 1.0,
                "dt": {},
                "schemes": [
                    {{"kind": "regular", "mesh": {mesh}}},
                    {{"kind": "offset-regular", "mesh": {mesh}, "offset": {}}}
                ]
            }},
            "functionals": ["entry:1,2"],
            "mode": "biased-optimal-rate",
            "tuning": {{"kappa": 1.0}},
            "seed": 4
        }}"#,
            mesh / 2.0,
            mesh / 2.0
        );
        let cfg = RunConfig::from_json(&text).unwrap();
        let (_, ticks) = simulate_dataset(cfg.simulation.as_ref().unwrap(), cfg.seed, 0).unwrap();
        let est = estimate_dataset(&ticks, &cfg).unwrap();
        let r = &est.reports[0];
        let mu = r.mu_hat.unwrap();
        assert!(mu != 0.0);
        let (lo, hi) = r.ci.unwrap();
        let center = 0.5 * (lo + hi);
        // interval centered at s_hat - mu_hat / rate
        assert!(
            (center - (r.s_hat - mu / r.rate_value)).abs() < 1e-12 * r.s_hat.abs().max(1e-12),
            "center {center} vs {}",
            r.s_hat - mu / r.rate_value
        );
        assert_eq!(r.rate_label, "n_min^(2/5)");
        // general mode: interval centered at s_hat itself
        let mut cfg2 = cfg.clone();
        cfg2.mode = crate::config::Mode::General;
        cfg2.tuning.kappa = None;
        let est2 = estimate_dataset(&ticks, &cfg2).unwrap();
        let r2 = &est2.reports[0];
        let (lo2, hi2) = r2.ci.unwrap();
        assert!((0.5 * (lo2 + hi2) - r2.s_hat).abs() < 1e-12 * r2.s_hat.abs().max(1e-12));
        assert!(r2.mu_hat.is_none());
    }

    #[test]
    fn zero_vol_of_vol_is_flagged_not_crashed() {
        let text = r#"{
            "simulation": {
                "model": {"kind": "heston-bridge",
                          "assets": [{"vol_of_vol": 0.0}]},
                "t_window": 1.0,
                "dt": 0.00048828125,
                "schemes": [{"kind": "regular", "mesh": 0.00048828125}]
            },
            "functionals": ["power:2"],
            "replications": 6,
            "seed": 2
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let out = run_montecarlo(&cfg).unwrap();
        // constant volatility still leaves price noise, so the statistics
        // need not degenerate; the run must simply complete and summarize
        assert_eq!(out.summaries[0].replications_ok + out.summaries[0].failures, 6);
    }
}
