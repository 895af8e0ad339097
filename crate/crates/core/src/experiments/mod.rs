//! Config-driven probes: ratio tables `R(N)` for a functional of
//! `T_μⁿ (I - T_μ)^m f`, certificates and condition checks for the symbol,
//! and the files they are written to.

mod config;
mod output;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{
    CertificateSpec, Engine, ExperimentConfig, FunctionalSpec, MeasureSpec, OutputSpec, ProbeKind,
    TrajectorySpec,
};
pub use output::write_outputs;

use crate::certificates::{
    angular_ratio, check_m1, lemma2_quantities, lemma_quantities, CertificateOptions,
    CertificateReport, ConditionReport, Lemma2Mode, PowerFamily,
};
use crate::error::{Error, Result};
use crate::fractional::trajectory_with_cap;
use crate::fullline::{full_line_norms, FullLineOptions};
use crate::functionals::{evaluate, BlockMode, Functional, FunctionalResult, GapSequence};
use crate::measure::{SignedMeasure, SpatialSequence};
use crate::registry::SymbolKey;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "RITTSQ_THREADS";

/// Sizes the global thread pool from `RITTSQ_THREADS` (if set) and returns
/// the number of worker threads.
pub fn init_threads() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(rayon::current_num_threads())
}

/// `count` functions on `[-radius, radius]` with entries uniform in
/// `[-1, 1]`, each scaled to unit ℓ¹ norm.
pub fn random_functions(seed: u64, count: usize, radius: i64) -> Vec<Vec<(i64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut f: Vec<(i64, f64)> = (-radius..=radius)
                .map(|x| (x, rng.random_range(-1.0..1.0)))
                .collect();
            let norm: f64 = f.iter().map(|p| p.1.abs()).sum();
            if norm > 0.0 {
                f.iter_mut().for_each(|p| p.1 /= norm);
            }
            f
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    /// Parameters inside the regime of the result being probed.
    Hypothesis,
    /// Outside the regime; reported without a verdict.
    Contrast,
    /// No known answer; reported without a verdict.
    Exploratory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    ConsistentWithBounded,
    Growth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    L1,
    L2,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub delta: Option<f64>,
    pub random_mean: Option<f64>,
    pub random_max: Option<f64>,
    /// Worst case over the test functions, relative to `‖f‖`. Windowed
    /// engine: ℓ¹ error of the worst single term `n ≤ N` (window losses and
    /// truncation), not a bound on the functional. Full-line engine:
    /// quadrature error plus tail extrapolation of the functional.
    pub error_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Series {
    pub label: String,
    pub functional: Functional,
    pub arm: Arm,
    pub norm: Norm,
    pub table: Vec<RatioRow>,
    /// `ratios[j][i]`: test function `j` at level `i`.
    pub ratios: Vec<Vec<f64>>,
    /// Largest `(R(N_last) - R(N_prev)) / R(N_prev)` over test functions.
    pub relative_change: f64,
    /// `R` strictly increasing over all levels for the first test function.
    pub monotone_growth: bool,
    /// Least-squares slope of `log R` against `log N` over the last three
    /// levels, first test function.
    pub growth_exponent: Option<f64>,
    /// Present only for hypothesis arms.
    pub verdict: Option<ProbeVerdict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedCertificate {
    pub label: String,
    pub report: CertificateReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub n: usize,
    /// `n^α max_x |terms[n](x)|`.
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct ReportRecord {
    pub probe: ProbeKind,
    pub config: ExperimentConfig,
    pub engine: Engine,
    pub m: f64,
    pub test_functions: Vec<String>,
    pub series: Vec<Series>,
    pub certificates: Vec<NamedCertificate>,
    pub conditions: Vec<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<Vec<DecayRow>>,
    pub notes: Vec<String>,
    /// Site values for `f = δ₀` at the last level, per series (windowed
    /// engine only).
    #[serde(skip)]
    pub pointwise: Vec<Option<FunctionalResult>>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ReportRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Plan {
    label: String,
    functional: Functional,
    arm: Arm,
}

fn plans(cfg: &ExperimentConfig, m: f64, top: usize, ar_holds: bool) -> Result<Vec<Plan>> {
    let f = &cfg.functional;
    let hyp = |ok: bool| if ok { Arm::Hypothesis } else { Arm::Contrast };
    Ok(match cfg.probe {
        ProbeKind::MainTheorem => vec![Plan {
            label: "square".into(),
            functional: Functional::Square {
                alpha: f.alpha,
                s: f.s,
            },
            arm: hyp(f.s * m > f.alpha + 1.0 && m > 0.0),
        }],
        ProbeKind::OpenQuestion => vec![Plan {
            label: "square".into(),
            functional: Functional::Square {
                alpha: f.alpha,
                s: f.s,
            },
            arm: Arm::Exploratory,
        }],
        ProbeKind::CorollarySup => vec![Plan {
            label: "maximal".into(),
            functional: Functional::Maximal { alpha: f.alpha },
            arm: hyp(f.alpha >= 0.0 && f.alpha < m),
        }],
        ProbeKind::Variation => {
            let ok = m > 0.0 && f.beta >= 0.0 && (f.beta == 0.0 || f.s * (m - f.beta) > 1.0);
            let arm = if m == 0.0 { Arm::Exploratory } else { hyp(ok) };
            vec![
                Plan {
                    label: "variation".into(),
                    functional: Functional::Variation {
                        beta: f.beta,
                        s: f.s,
                    },
                    arm,
                },
                Plan {
                    label: "oscillation".into(),
                    functional: Functional::Oscillation {
                        beta: f.beta,
                        s: f.s,
                    },
                    arm,
                },
            ]
        }
        ProbeKind::Longvar => {
            let gaps = GapSequence::with_start(f.gaps_alpha, 1, top)?;
            let rest = 1.0 - f.gaps_alpha - f.beta;
            f.modes
                .iter()
                .map(|&mode| {
                    let threshold = match mode {
                        BlockMode::BlockVariation => 1.0 / rest,
                        _ => (1.0 - f.gaps_alpha) / rest,
                    };
                    Plan {
                        label: format!("block-{}", mode_name(mode)),
                        functional: Functional::Block {
                            gaps: gaps.clone(),
                            beta: f.beta,
                            s: f.s,
                            mode,
                        },
                        arm: hyp(rest > 0.0 && f.s > threshold),
                    }
                })
                .collect()
        }
        ProbeKind::LpSquare => vec![Plan {
            label: "lp-square".into(),
            functional: Functional::ShiftedSquare {
                weight: 2.0 * m - 1.0,
                s: 2.0,
            },
            arm: hyp(ar_holds),
        }],
    })
}

fn mode_name(m: BlockMode) -> &'static str {
    match m {
        BlockMode::EndpointDiff => "endpoint-diff",
        BlockMode::BlockMax => "block-max",
        BlockMode::BlockVariation => "block-variation",
    }
}

/// Half-width that keeps `n ≤ top` steps of `μ` from `[-r, r]` inside the
/// window up to eight standard deviations.
fn auto_w_max(mu: &SignedMeasure, top: usize, radius: i64) -> i64 {
    let tv = mu.total_variation();
    if tv == 0.0 {
        return radius;
    }
    let (mut mean, mut second, mut reach) = (0.0, 0.0, 0i64);
    for (k, w) in mu.atoms() {
        let p = w.abs() / tv;
        mean += p * k as f64;
        second += p * (k as f64).powi(2);
        reach = reach.max(k.abs());
    }
    let var = (second - mean * mean).max(0.0);
    let nf = top as f64;
    let spread = (mean.abs() * nf + 8.0 * (var * nf).sqrt()).ceil() as i64 + 32;
    radius + spread.min(reach.saturating_mul(top as i64) + 1)
}

struct FnResult {
    /// `[plan][level]`
    ratios: Vec<Vec<f64>>,
    errors: Vec<Vec<f64>>,
    pointwise: Vec<Option<FunctionalResult>>,
    decay: Option<Vec<DecayRow>>,
}

fn seq_norm(f: &[(i64, f64)], norm: Norm) -> f64 {
    match norm {
        Norm::L1 => f.iter().map(|p| p.1.abs()).sum(),
        Norm::L2 => f.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt(),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_window(
    mu: &SignedMeasure,
    m: f64,
    f: &[(i64, f64)],
    w_max: i64,
    eps: f64,
    series_cap: usize,
    plans: &[Plan],
    levels: &[usize],
    norm: Norm,
    keep: bool,
    decay_alpha: Option<f64>,
) -> Result<FnResult> {
    let top = *levels.last().expect("levels");
    let seq = SpatialSequence::from_entries(f, w_max)?;
    let traj = trajectory_with_cap(mu, m, &seq, top, eps, series_cap)?;
    let fnorm = seq_norm(f, norm);
    let budget = traj.error_budget();
    let mut out = FnResult {
        ratios: Vec::new(),
        errors: Vec::new(),
        pointwise: Vec::new(),
        decay: None,
    };
    for p in plans {
        let res = evaluate(&traj, &p.functional, levels)?;
        out.ratios.push(
            res.iter()
                .map(|r| match norm {
                    Norm::L1 => r.l1_norm,
                    Norm::L2 => r.pointwise.l2_norm(),
                } / fnorm)
                .collect(),
        );
        // largest ℓ¹ error of any single term up to n
        out.errors.push(
            levels
                .iter()
                .map(|&n| budget[..=n].iter().copied().fold(0.0, f64::max) / fnorm)
                .collect(),
        );
        out.pointwise
            .push(if keep { res.into_iter().last() } else { None });
    }
    if let Some(alpha) = decay_alpha {
        out.decay = Some(
            levels
                .iter()
                .map(|&n| {
                    let mx = traj
                        .term(n)
                        .iter()
                        .map(|(_, v)| v.abs())
                        .fold(0.0, f64::max);
                    DecayRow {
                        n,
                        value: (n as f64).powf(alpha) * mx,
                    }
                })
                .collect(),
        );
    }
    Ok(out)
}

fn run_full_line(
    key: &SymbolKey,
    m: f64,
    f: &[(i64, f64)],
    plans: &[Plan],
    levels: &[usize],
) -> Result<FnResult> {
    let law = key.power_law().expect("checked");
    let fnorm = seq_norm(f, Norm::L1);
    let mut out = FnResult {
        ratios: Vec::new(),
        errors: Vec::new(),
        pointwise: Vec::new(),
        decay: None,
    };
    for p in plans {
        let r = full_line_norms(
            law.as_ref(),
            m as u32,
            f,
            &p.functional,
            levels,
            &FullLineOptions::default(),
        )?;
        out.ratios
            .push(r.levels.iter().map(|l| l.l1_norm / fnorm).collect());
        out.errors.push(
            r.levels
                .iter()
                .map(|l| (l.quadrature_error + l.tail_estimate.abs()) / fnorm)
                .collect(),
        );
        out.pointwise.push(None);
    }
    Ok(out)
}

fn stats(ratios: &[Vec<f64>]) -> (f64, bool) {
    let mut change: f64 = 0.0;
    for r in ratios {
        if r.len() >= 2 {
            let (a, b) = (r[r.len() - 2], r[r.len() - 1]);
            let c = if a > 0.0 {
                (b - a) / a
            } else if b > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            change = change.max(c);
        }
    }
    let first = &ratios[0];
    let monotone = first.len() >= 2 && first.windows(2).all(|w| w[1] > w[0]);
    (change, monotone)
}

/// Least-squares slope through `(ln x, ln y)`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn certificate_options(cfg: &ExperimentConfig, key: &SymbolKey) -> CertificateOptions {
    CertificateOptions {
        tol: cfg.certificate.tol,
        n_cap: cfg.certificate.n_cap,
        t_min: cfg.certificate.t_min,
        a: cfg.certificate.a.unwrap_or_else(|| key.default_exponent()),
        ..CertificateOptions::default()
    }
}

/// Runs one probe.
pub fn run_probe(cfg: &ExperimentConfig) -> Result<ReportRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let key = cfg.symbol_key()?;
    let m = cfg.m();
    let t = &cfg.trajectory;
    let levels = &t.levels;
    let top = *levels.last().expect("validated");
    let symbol = key.symbol(cfg.measure.k)?;
    let a = cfg.certificate.a.unwrap_or_else(|| key.default_exponent());
    let mut notes = Vec::new();

    let ar = angular_ratio(&symbol, cfg.certificate.grid)?;
    let m1 = check_m1(&symbol, a)?;
    let ar_holds = ar.holds();
    let conditions = vec![ar, m1];

    let engine = match t.engine {
        Engine::Auto => {
            if key.power_law().is_some() && m.fract() == 0.0 && cfg.probe != ProbeKind::LpSquare {
                Engine::FullLine
            } else {
                Engine::Window
            }
        }
        e => e,
    };
    let norm = if cfg.probe == ProbeKind::LpSquare {
        Norm::L2
    } else {
        Norm::L1
    };
    let plans = plans(cfg, m, top, ar_holds)?;

    let mut fs: Vec<(String, Vec<(i64, f64)>)> = Vec::new();
    if t.delta {
        fs.push(("delta".into(), vec![(0, 1.0)]));
    }
    for (i, f) in random_functions(cfg.seed, t.random_count, t.random_radius)
        .into_iter()
        .enumerate()
    {
        fs.push((format!("random-{i}"), f));
    }

    let decay_alpha = (cfg.probe == ProbeKind::CorollarySup).then_some(cfg.functional.alpha);
    let mut results = Vec::with_capacity(fs.len());
    match engine {
        Engine::FullLine => {
            notes.push("full-line engine: closed-form powers, all sites".into());
            if decay_alpha.is_some() {
                notes.push("decay table needs the window engine".into());
            }
            for (_, f) in &fs {
                results.push(run_full_line(&key, m, f, &plans, levels)?);
            }
        }
        _ => {
            let mu = key.measure(cfg.measure.k)?;
            let w_max = t
                .w_max
                .unwrap_or_else(|| auto_w_max(&mu, top, t.random_radius));
            let bytes = (top as f64 + 1.0) * (2.0 * w_max as f64 + 1.0) * 8.0;
            if bytes > 4e9 {
                return Err(Error::Config(format!(
                    "window of half-width {w_max} for N = {top} needs {:.1} GB; lower the levels or set w_max",
                    bytes / 1e9
                )));
            }
            notes.push(format!(
                "window engine: w_max = {w_max}, measure truncated at K = {}",
                cfg.measure.k
            ));
            for (i, (label, f)) in fs.iter().enumerate() {
                let keep = i == 0 && label == "delta";
                results.push(run_window(
                    &mu,
                    m,
                    f,
                    w_max,
                    cfg.measure.eps,
                    crate::fractional::DEFAULT_SERIES_CAP,
                    &plans,
                    levels,
                    norm,
                    keep,
                    if keep { decay_alpha } else { None },
                )?);
            }
        }
    }

    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let series: Vec<Series> = plans
        .iter()
        .enumerate()
        .map(|(pi, p)| {
            let ratios: Vec<Vec<f64>> = results.iter().map(|r| r.ratios[pi].clone()).collect();
            let table = levels
                .iter()
                .enumerate()
                .map(|(li, &n)| {
                    let vals: Vec<f64> = fs
                        .iter()
                        .zip(&ratios)
                        .filter(|(f, _)| f.0 != "delta")
                        .map(|(_, r)| r[li])
                        .collect();
                    RatioRow {
                        n,
                        delta: t.delta.then(|| ratios[0][li]),
                        random_mean: (!vals.is_empty())
                            .then(|| vals.iter().sum::<f64>() / vals.len() as f64),
                        random_max: vals.iter().copied().reduce(f64::max),
                        error_bound: results.iter().map(|r| r.errors[pi][li]).fold(0.0, f64::max),
                    }
                })
                .collect();
            let (relative_change, monotone_growth) = stats(&ratios);
            let k = xs.len().min(3);
            let growth_exponent = log_log_slope(&xs[xs.len() - k..], &ratios[0][xs.len() - k..]);
            let verdict = (p.arm == Arm::Hypothesis).then(|| {
                if relative_change <= 0.05 {
                    ProbeVerdict::ConsistentWithBounded
                } else {
                    ProbeVerdict::Growth
                }
            });
            Series {
                label: p.label.clone(),
                functional: p.functional.clone(),
                arm: p.arm,
                norm,
                table,
                ratios,
                relative_change,
                monotone_growth,
                growth_exponent,
                verdict,
            }
        })
        .collect();

    let mut certificates = Vec::new();
    if cfg.certificate.enabled {
        let opts = certificate_options(cfg, &key);
        let fa = &cfg.functional;
        match cfg.probe {
            ProbeKind::MainTheorem | ProbeKind::OpenQuestion if m > 0.0 => {
                let family = PowerFamily {
                    alpha: fa.alpha,
                    s: fa.s,
                    m,
                };
                certificates.push(NamedCertificate {
                    label: "square".into(),
                    report: lemma_quantities(&symbol, &family, &opts)?,
                });
            }
            ProbeKind::Longvar => {
                let gaps = GapSequence::with_start(fa.gaps_alpha, 1, top)?;
                for &mode in &fa.modes {
                    let lm = match mode {
                        BlockMode::EndpointDiff => Lemma2Mode::EndpointDiff,
                        BlockMode::BlockMax => Lemma2Mode::BlockMax,
                        BlockMode::BlockVariation => continue,
                    };
                    certificates.push(NamedCertificate {
                        label: format!("block-{}", mode_name(mode)),
                        report: lemma2_quantities(&symbol, &gaps, fa.beta, fa.s, lm, &opts)?,
                    });
                }
            }
            _ => {}
        }
    }

    let decay = results.first().and_then(|r| r.decay.clone());
    let pointwise = results
        .first()
        .map(|r| r.pointwise.clone())
        .unwrap_or_else(|| vec![None; plans.len()]);
    Ok(ReportRecord {
        probe: cfg.probe,
        config: cfg.clone(),
        engine,
        m,
        test_functions: fs.into_iter().map(|f| f.0).collect(),
        series,
        certificates,
        conditions,
        decay,
        notes,
        pointwise,
        wall_time: start.elapsed(),
    })
}

/// Loads, runs and writes a config; `seed` overrides the configured seed.
pub fn run_config_file(path: &std::path::Path, seed: Option<u64>) -> Result<ReportRecord> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let rep = run_probe(&cfg)?;
    if let Some(dir) = &cfg.output.dir {
        write_outputs(&rep, dir)?;
    }
    Ok(rep)
}
