use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rittsq::certificates::{
    lemma2_quantities, lemma_quantities, ritt_constant, CertificateOptions, Lemma2Mode, PowerFamily,
};
use rittsq::experiments::{
    init_threads, random_functions, run_probe, write_outputs, ExperimentConfig, ProbeKind,
};
use rittsq::fractional::{frac_coeff, trajectory, Trajectory};
use rittsq::functionals::{evaluate, gap_subsequence, Functional, FunctionalResult};
use rittsq::registry::SymbolKey;
use rittsq::{convolution_power, SpatialSequence};

/// Convolution powers, fractional differences, square functions and
/// Fourier certificates for operators induced by measures on ℤ.
///
/// The worker-thread count is read from RITTSQ_THREADS.
#[derive(Parser)]
#[command(name = "rittsq", version)]
struct Cli {
    /// Seed for random test functions (overrides a config file's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Binomial-series coefficients g(α, k), k = 1..=K.
    Coeffs {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 16)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// n-th convolution power of a measure, in the measure text format.
    ConvPower {
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        n: u64,
        /// Truncation of infinitely supported measures.
        #[arg(long, default_value_t = 4096)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trend n ↦ n‖μⁿ - μⁿ⁺¹‖₁ and its running supremum.
    Ritt {
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4096)]
        k: usize,
        #[arg(long, default_value_t = 1e-12)]
        eps: f64,
        /// Two-column plot file `n value`.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificate quantities A, B, B̃, C, D, E as JSON.
    Certify(CertifyArgs),
    /// Square function Q_{α,s,m} f on a window.
    SquareFn {
        #[command(flatten)]
        traj: TrajArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
    },
    /// Variation (or oscillation) norm of n^β terms[n] on a window.
    VarNorm {
        #[command(flatten)]
        traj: TrajArgs,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        /// Oscillation over dyadic blocks instead of variation.
        #[arg(long)]
        oscillation: bool,
    },
    /// Runs a named probe with its default configuration.
    Probe {
        /// main-theorem, open-question, corollary-sup, variation, longvar or lp-square
        name: String,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        random_count: Option<usize>,
        /// Comma-separated truncation levels.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long)]
        no_certificate: bool,
        /// Print the configuration as TOML instead of running.
        #[arg(long)]
        print_config: bool,
    },
    /// Runs the probe described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    symbol: String,
    /// Weight exponent α of the power family.
    #[arg(long, conflicts_with = "gaps_alpha")]
    alpha: Option<f64>,
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Gap exponent; selects the gap-block family.
    #[arg(long)]
    gaps_alpha: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// endpoint-diff or block-max
    #[arg(long, default_value = "endpoint-diff")]
    mode: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long, default_value_t = 1 << 18)]
    n_cap: usize,
    /// Exponent of the power majorant (symbol default when absent).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    no_stability_check: bool,
    #[arg(long, default_value_t = 4096)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrajArgs {
    #[arg(long)]
    symbol: String,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Largest n.
    #[arg(long)]
    n: usize,
    /// Half-width of the window.
    #[arg(long, default_value_t = 256)]
    w_max: i64,
    /// `delta` or `random`.
    #[arg(long, default_value = "delta")]
    f0: String,
    #[arg(long, default_value_t = 8)]
    random_radius: i64,
    #[arg(long, default_value_t = 4096)]
    k: usize,
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    /// Functional CSV (site,value).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Trajectory CSV (n,site,value).
    #[arg(long)]
    trajectory_csv: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn key(s: &str) -> Result<SymbolKey> {
    s.parse().with_context(|| format!("symbol `{s}`"))
}

fn build_trajectory(a: &TrajArgs, seed: u64) -> Result<Trajectory> {
    let mu = key(&a.symbol)?.measure(a.k)?;
    let f = match a.f0.as_str() {
        "delta" => SpatialSequence::delta(0, a.w_max),
        "random" => {
            SpatialSequence::from_entries(&random_functions(seed, 1, a.random_radius)[0], a.w_max)?
        }
        other => bail!("unknown f0 `{other}` (expected delta or random)"),
    };
    let t = trajectory(&mu, a.m, &f, a.n, a.eps)?;
    if let Some(p) = &a.trajectory_csv {
        t.save_csv(p)?;
    }
    Ok(t)
}

fn functional_output(a: &TrajArgs, f: &Functional, r: &FunctionalResult) -> Result<()> {
    if let Some(p) = &a.csv {
        r.save_csv(p)?;
    }
    let summary = serde_json::to_string_pretty(&r.summary(f))? + "\n";
    emit(a.summary.as_deref(), &summary)
}

fn certify(a: &CertifyArgs) -> Result<String> {
    let k = key(&a.symbol)?;
    let base = k.symbol(a.k)?;
    let opts = CertificateOptions {
        tol: a.tol,
        n_cap: a.n_cap,
        t_min: a.t_min,
        a: a.a.unwrap_or_else(|| k.default_exponent()),
        stability_check: !a.no_stability_check,
        ..CertificateOptions::default()
    };
    let rep = match (a.alpha, a.gaps_alpha) {
        (_, Some(g)) => {
            let mode = match a.mode.as_str() {
                "endpoint-diff" => Lemma2Mode::EndpointDiff,
                "block-max" => Lemma2Mode::BlockMax,
                other => bail!("unknown mode `{other}` (expected endpoint-diff or block-max)"),
            };
            lemma2_quantities(&base, &gap_subsequence(g, 1)?, a.beta, a.s, mode, &opts)?
        }
        (Some(alpha), None) => lemma_quantities(
            &base,
            &PowerFamily {
                alpha,
                s: a.s,
                m: a.m,
            },
            &opts,
        )?,
        (None, None) => bail!("give --alpha for the power family or --gaps-alpha for gap blocks"),
    };
    Ok(serde_json::to_string_pretty(&rep)? + "\n")
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let threads = init_threads()?;
    let seed = cli.seed.unwrap_or(0);
    match cli.cmd {
        Cmd::Coeffs { alpha, k, out } => {
            let c = frac_coeff(alpha, k)?;
            let mut s = format!("# tail {:e}\nk,g\n", c.tail);
            for (i, v) in c.values.iter().enumerate() {
                s += &format!("{},{v:e}\n", i + 1);
            }
            emit(out.as_deref(), &s)?;
        }
        Cmd::ConvPower {
            symbol,
            n,
            k,
            eps,
            out,
        } => {
            let mu = key(&symbol)?.measure(k)?;
            emit(out.as_deref(), &convolution_power(&mu, n, eps)?.to_text())?;
        }
        Cmd::Ritt {
            symbol,
            n,
            k,
            eps,
            plot,
            out,
        } => {
            let mu = key(&symbol)?.measure(k)?;
            let r = ritt_constant(&mu, n, eps)?;
            if let Some(p) = plot {
                let mut s = String::new();
                for (i, v) in r.trend.iter().enumerate() {
                    s += &format!("{} {v:e}\n", i + 1);
                }
                fs::write(&p, s)?;
            }
            emit(out.as_deref(), &(serde_json::to_string_pretty(&r)? + "\n"))?;
        }
        Cmd::Certify(a) => {
            let text = certify(&a)?;
            emit(a.out.as_deref(), &text)?;
        }
        Cmd::SquareFn { traj, alpha, s } => {
            let t = build_trajectory(&traj, seed)?;
            let f = Functional::Square { alpha, s };
            let r = evaluate(&t, &f, &[t.len()])?.pop().expect("one level");
            functional_output(&traj, &f, &r)?;
        }
        Cmd::VarNorm {
            traj,
            beta,
            s,
            oscillation,
        } => {
            let t = build_trajectory(&traj, seed)?;
            let f = if oscillation {
                Functional::Oscillation { beta, s }
            } else {
                Functional::Variation { beta, s }
            };
            let r = evaluate(&t, &f, &[t.len()])?.pop().expect("one level");
            functional_output(&traj, &f, &r)?;
        }
        Cmd::Probe {
            name,
            out,
            random_count,
            levels,
            symbol,
            no_certificate,
            print_config,
        } => {
            let probe: ProbeKind = name.parse()?;
            let mut cfg = ExperimentConfig::new(probe);
            cfg.seed = seed;
            if let Some(c) = random_count {
                cfg.trajectory.random_count = c;
            }
            if let Some(l) = levels {
                cfg.trajectory.levels = l;
            }
            if let Some(s) = symbol {
                cfg.measure.symbol = s;
            }
            cfg.certificate.enabled = !no_certificate;
            cfg.output.dir = out;
            if print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            run_and_report(&cfg, threads)?;
        }
        Cmd::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if out.is_some() {
                cfg.output.dir = out;
            }
            run_and_report(&cfg, threads)?;
        }
    }
    Ok(())
}

fn run_and_report(cfg: &ExperimentConfig, threads: usize) -> Result<()> {
    let rep = run_probe(cfg)?;
    match &cfg.output.dir {
        Some(dir) => {
            let files = write_outputs(&rep, dir)?;
            for s in &rep.series {
                let verdict = match s.verdict {
                    Some(v) => serde_json::to_string(&v)?.trim_matches('"').to_string(),
                    None => format!(
                        "{} arm, no verdict",
                        serde_json::to_string(&s.arm)?.trim_matches('"')
                    ),
                };
                println!(
                    "{}: R({}) = {:.6}, relative change {:.4}, {verdict}",
                    s.label,
                    s.table.last().map(|r| r.n).unwrap_or(0),
                    s.ratios[0].last().copied().unwrap_or(f64::NAN),
                    s.relative_change
                );
            }
            println!("{} files in {}", files.len(), dir.display());
        }
        None => println!("{}", rep.to_json()),
    }
    eprintln!("{:.2?} on {threads} threads", rep.wall_time);
    Ok(())
}
