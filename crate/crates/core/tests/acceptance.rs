//! End-to-end checks, one line per criterion. Run with
//! `cargo test -p rittsq --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rittsq::certificates::{lemma_quantities, ritt_constant, CertificateOptions, PowerFamily};
use rittsq::experiments::{random_functions, run_probe, ExperimentConfig, ProbeKind};
use rittsq::fractional::{frac_coeff, nu_alpha_measure};
use rittsq::fullline::{full_line_sequences, HalfFirstPassage};
use rittsq::functionals::{variation_norm, BlockMode};
use rittsq::symbol::{
    closed_form_nu_alpha, delta_symbol, half_step_grid, lazy_walk_symbol, symbol_from_measure,
};
use rittsq::SignedMeasure;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn coefficients() -> Outcome {
    let c = frac_coeff(0.5, 10_000).map_err(|e| e.to_string())?;
    let g1 = (c.get(1) - 0.5).abs();
    let g2 = (c.get(2) - 0.125).abs();
    let partial: f64 = c.values.iter().sum();
    // product formula g(α,k) = α/k · Π_{j<k} (1 - α/j)
    let mut worst = 0.0f64;
    for alpha in [0.1, 0.5, 0.9] {
        let c = frac_coeff(alpha, 50).unwrap();
        let mut prod = 1.0;
        for k in 1..=50usize {
            let g = alpha / k as f64 * prod;
            worst = worst.max((c.get(k) - g).abs() / g);
            prod *= 1.0 - alpha / k as f64;
        }
    }
    check(
        g1 <= 1e-15 && g2 <= 1e-15 && partial > 0.98 && partial < 1.0 && worst <= 1e-12,
        format!("partial sum {partial:.6}, recursion vs product {worst:.1e}"),
        format!("g1 err {g1:e}, g2 err {g2:e}, partial {partial}, recursion {worst:e}"),
    )
}

fn fourier() -> Outcome {
    let mu = nu_alpha_measure(0.5, 10_000).map_err(|e| e.to_string())?;
    let (finite, closed) = (symbol_from_measure(&mu), closed_form_nu_alpha(0.5).unwrap());
    let tail = mu.tail_bound();
    let grid = half_step_grid(1024);
    let worst = grid
        .iter()
        .map(|&t| (finite.value(t) - closed.value(t)).norm())
        .fold(0.0, f64::max);
    let lazy = lazy_walk_symbol();
    let lw = grid
        .iter()
        .map(|&t| {
            (lazy.value(t)
                - Complex64::new(0.5 + 0.5 * (2.0 * std::f64::consts::PI * t).cos(), 0.0))
            .norm()
        })
        .fold(0.0, f64::max);
    check(
        grid.len() == 1024 && worst <= tail + 1e-12 && lw <= 1e-12,
        format!("max gap {worst:.2e} <= tail {tail:.2e}; lazy walk {lw:.1e}"),
        format!("max gap {worst:e}, tail {tail:e}, lazy walk {lw:e}"),
    )
}

fn derivatives() -> Outcome {
    let base = closed_form_nu_alpha(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = (0.0f64, 0.0f64);
    for (n, m) in [(1u32, 1.0), (8, 0.5), (64, 2.0)] {
        let d = delta_symbol(&base, n, m, 1.0).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let t: f64 =
                rng.random_range(0.01..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let h = 1e-3 * t.abs().min(0.1);
            let v = |k: f64| d.value(t + k * h);
            let fd1 = (v(-2.0) - v(-1.0) * 8.0 + v(1.0) * 8.0 - v(2.0)) / (12.0 * h);
            let fd2 = (-v(-2.0) + v(-1.0) * 16.0 - v(0.0) * 30.0 + v(1.0) * 16.0 - v(2.0))
                / (12.0 * h * h);
            let j = d.eval(t).map_err(|e| e.to_string())?;
            worst.0 = worst.0.max((fd1 - j.d1).norm() / j.d1.norm());
            worst.1 = worst.1.max((fd2 - j.d2).norm() / j.d2.norm());
        }
    }
    check(
        worst.0 <= 1e-6 && worst.1 <= 1e-6,
        format!(
            "worst relative error d1 {:.1e}, d2 {:.1e}",
            worst.0, worst.1
        ),
        format!("d1 {:e}, d2 {:e}", worst.0, worst.1),
    )
}

fn exhaustive_variation(v: &[f64], s: f64) -> f64 {
    let n = v.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sum: f64 = idx
            .windows(2)
            .map(|w| (v[w[1]] - v[w[0]]).abs().powf(s))
            .sum();
        best = best.max(sum);
    }
    best.powf(1.0 / s)
}

fn variation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let len = rng.random_range(1..=12);
        let v: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = [1.0, 1.5, 2.0, 3.0][i % 4];
        let got = variation_norm(&v, s).map_err(|e| e.to_string())?;
        worst = worst.max((got - exhaustive_variation(&v, s)).abs());
    }
    check(
        worst <= 1e-12,
        format!("200 sequences, worst gap {worst:.1e}"),
        format!("worst gap {worst:e}"),
    )
}

fn ritt() -> Outcome {
    let shift = ritt_constant(&SignedMeasure::dirac(1), 64, 0.0).map_err(|e| e.to_string())?;
    let exact = shift
        .trend
        .iter()
        .enumerate()
        .all(|(i, &v)| v == 2.0 * (i + 1) as f64);
    let lazy =
        ritt_constant(&SignedMeasure::lazy_walk(), 4096, 1e-13).map_err(|e| e.to_string())?;
    let at = lazy.trend[2047];
    let sup = lazy.sup_between(2048, 4096);
    check(
        exact && sup <= 1.05 * at,
        format!("shift trend exactly 2n; lazy walk sup {sup:.5} vs {at:.5} at n=2048"),
        format!("shift exact: {exact}; lazy walk sup {sup} vs {at}"),
    )
}

fn certificate() -> Outcome {
    let base = closed_form_nu_alpha(0.5).unwrap();
    let opts = CertificateOptions {
        a: 0.5,
        ..CertificateOptions::default()
    };
    let fam = |s| PowerFamily {
        alpha: 1.0,
        s,
        m: 1.0,
    };
    let r3 = lemma_quantities(&base, &fam(3.0), &opts).map_err(|e| e.to_string())?;
    let r1 = lemma_quantities(&base, &fam(1.0), &opts).map_err(|e| e.to_string())?;
    let four = [&r3.a, &r3.b_tilde, &r3.c, &r3.e];
    check(
        four.iter().all(|q| q.is_finite()) && r1.a.is_diverged(),
        format!(
            "s=3: A {:.3}, B~ {:.3}, C {:.3}, E {:.3}; s=1: A diverged",
            r3.a.value().unwrap(),
            r3.b_tilde.value().unwrap(),
            r3.c.value().unwrap(),
            r3.e.value().unwrap()
        ),
        format!("s=3: {:?}; s=1 A: {:?}", four, r1.a),
    )
}

fn probe(
    kind: ProbeKind,
    edit: impl FnOnce(&mut ExperimentConfig),
) -> Result<rittsq::experiments::ReportRecord, String> {
    let mut c = ExperimentConfig::new(kind);
    c.trajectory.random_count = 0;
    c.certificate.enabled = false;
    edit(&mut c);
    run_probe(&c).map_err(|e| e.to_string())
}

/// `R` for `f = δ₀` at each level of the first series.
fn delta_ratios(r: &rittsq::experiments::ReportRecord) -> Vec<f64> {
    r.series[0]
        .table
        .iter()
        .map(|row| row.delta.unwrap())
        .collect()
}

fn converges(r: &[f64]) -> bool {
    let k = r.len();
    (r[k - 1] - r[k - 2]).abs() <= 0.05 * r[k - 2]
}

fn monotone(r: &[f64]) -> bool {
    r.windows(2).all(|w| w[1] > w[0])
}

fn main_probe() -> Outcome {
    let hyp = delta_ratios(&probe(ProbeKind::MainTheorem, |_| {})?);
    let con = delta_ratios(&probe(ProbeKind::MainTheorem, |c| c.functional.s = 1.0)?);
    check(
        converges(&hyp) && monotone(&con),
        format!(
            "s=3 R {:.4} -> {:.4}; s=1 grows {:.3} -> {:.3}",
            hyp[3], hyp[4], con[0], con[4]
        ),
        format!("s=3 {hyp:?}; s=1 {con:?}"),
    )
}

fn corollary() -> Outcome {
    let r = probe(ProbeKind::CorollarySup, |_| {})?;
    let ratios = delta_ratios(&r);
    let decay = r.decay.as_ref().ok_or("no decay rows")?;
    let (first, last) = (decay.first().unwrap(), decay.last().unwrap());
    check(
        r.config.measure.symbol == "lazy_walk"
            && converges(&ratios)
            && first.n == 256
            && last.n == 4096
            && last.value < first.value,
        format!(
            "R {:.4} -> {:.4}; decay {:.2e} at 256, {:.2e} at 4096",
            ratios[3], ratios[4], first.value, last.value
        ),
        format!("ratios {ratios:?}; decay {decay:?}"),
    )
}

fn abel() -> Outcome {
    let alpha = 0.5f64;
    let n_max = 512usize;
    let depth = 1u64 << 14;
    // C = max_k ((k+1)^α - k^α) / (k+1)^{α-1}
    let c = (0..=n_max)
        .map(|k| {
            let k = k as f64;
            ((k + 1.0).powf(alpha) - k.powf(alpha)) / (k + 1.0).powf(alpha - 1.0)
        })
        .fold(0.0, f64::max);
    let mut fs = vec![vec![(0i64, 1.0)]];
    fs.extend(random_functions(3, 1, 8));
    let (mut sites, mut worst_gap, mut worst_id) = (0usize, f64::NEG_INFINITY, 0.0f64);
    for f in &fs {
        let a = full_line_sequences(&HalfFirstPassage, 1, f, n_max, depth);
        let b = full_line_sequences(&HalfFirstPassage, 2, f, n_max, depth);
        for ((xa, a), (xb, b)) in a.iter().zip(&b) {
            if xa != xb {
                return Err(format!("site mismatch {xa} vs {xb}"));
            }
            sites += 1;
            let scale = a.iter().chain(b.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
            let (mut first, mut second, mut exact) = (0.0, 0.0, 0.0);
            for n in 1..=n_max {
                let k = n - 1;
                let kf = k as f64;
                first += c * (kf + 1.0).powf(alpha - 1.0) * a[k].abs();
                exact += ((kf + 1.0).powf(alpha) - kf.powf(alpha)) * a[k];
                let w = (n as f64).powf(alpha);
                second += w * b[n - 1].abs();
                exact -= w * b[n - 1];
                let lhs = w * a[n].abs();
                worst_gap = worst_gap.max(lhs - (first + second) - 1e-12 * scale * w);
                worst_id =
                    worst_id.max((w * a[n] - exact).abs() / (scale * w).max(f64::MIN_POSITIVE));
            }
        }
    }
    check(
        worst_gap <= 0.0 && worst_id <= 1e-9,
        format!("C = {c:.4}, {sites} sites x {n_max} steps, identity residual {worst_id:.1e}"),
        format!("bound violated by {worst_gap:e}, identity residual {worst_id:e}"),
    )
}

fn longvar() -> Outcome {
    let endpoint = |c: &mut ExperimentConfig| c.functional.modes = vec![BlockMode::EndpointDiff];
    let hyp = delta_ratios(&probe(ProbeKind::Longvar, |c| {
        endpoint(c);
        c.functional.s = 2.0;
    })?);
    let con = delta_ratios(&probe(ProbeKind::Longvar, |c| {
        endpoint(c);
        c.functional.s = 1.1;
        c.functional.beta = 0.4;
    })?);
    check(
        converges(&hyp) && monotone(&con),
        format!(
            "s=2 R {:.4} -> {:.4}; beta=0.4, s=1.1 grows {:.3} -> {:.3}",
            hyp[3], hyp[4], con[0], con[4]
        ),
        format!("s=2 {hyp:?}; contrast {con:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("coefficient identities", coefficients),
        ("fourier consistency", fourier),
        ("derivative soundness", derivatives),
        ("variation oracle", variation),
        ("ritt trend", ritt),
        ("certificate regime split", certificate),
        ("main probe", main_probe),
        ("corollary probe", corollary),
        ("abel inequality", abel),
        ("longvar probe", longvar),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} ({secs:.1}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
