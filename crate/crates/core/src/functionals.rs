//! Site-wise functionals of trajectories: the square function
//! `Q_{α,s,m} f = (Σ_n n^α |Tⁿ(I-T)^m f|^s)^{1/s}`, weighted maxima, the
//! variation norm `v(s)`, the oscillation norm `o(s)` and block functionals
//! along gap subsequences.
//!
//! Every functional here acts on one sequence `n ↦ terms[n](x)` per site, so
//! the same code serves windowed trajectories and the full-line sampler.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fractional::Trajectory;
use crate::measure::SpatialSequence;

/// `|x|^s` with cheap paths for small integer `s`.
#[inline]
pub(crate) fn pow_abs(x: f64, s: f64) -> f64 {
    let a = x.abs();
    if s == 1.0 {
        a
    } else if s == 2.0 {
        a * a
    } else if s == 3.0 {
        a * a * a
    } else if s == 4.0 {
        (a * a) * (a * a)
    } else {
        a.powf(s)
    }
}

#[inline]
pub(crate) fn root(x: f64, s: f64) -> f64 {
    if s == 1.0 {
        x
    } else if s == 2.0 {
        x.sqrt()
    } else if s == 3.0 {
        x.cbrt()
    } else {
        x.powf(1.0 / s)
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(domain("s", s, "1 <= s < inf"));
    }
    Ok(())
}

/// Endpoints plus strict turning points, with repeated values merged.
fn local_extrema(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = Vec::with_capacity(values.len());
    for &x in values {
        if v.last() != Some(&x) {
            v.push(x);
        }
    }
    if v.len() <= 2 {
        return v;
    }
    let mut out = vec![v[0]];
    for i in 1..v.len() - 1 {
        if (v[i] - v[i - 1]) * (v[i + 1] - v[i]) < 0.0 {
            out.push(v[i]);
        }
    }
    out.push(v[v.len() - 1]);
    out
}

/// `sup (Σ_k |x_{n_{k+1}} - x_{n_k}|^s)^{1/s}` over increasing index
/// sequences.
///
/// An optimal sequence can be taken among local extrema. For `s = 1` the
/// answer is the total variation; otherwise a quadratic dynamic program over
/// the extrema is used.
pub fn variation_norm(values: &[f64], s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(variation_unchecked(values, s))
}

pub(crate) fn variation_unchecked(values: &[f64], s: f64) -> f64 {
    let e = local_extrema(values);
    if e.len() < 2 {
        return 0.0;
    }
    if s == 1.0 {
        return e.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    }
    let mut best = vec![0.0f64; e.len()];
    let mut total = 0.0f64;
    for j in 1..e.len() {
        let mut b = 0.0f64;
        for i in 0..j {
            b = b.max(best[i] + pow_abs(e[j] - e[i], s));
        }
        best[j] = b;
        total = total.max(b);
    }
    root(total, s)
}

/// `(Σ_k (max - min over block k)^s)^{1/s}`.
///
/// `blocks` holds 1-based starting positions `m_1 < m_2 < …`; block `k`
/// covers positions `m_k..=m_{k+1}` and the last one runs to the end.
pub fn oscillation_norm(values: &[f64], blocks: &[usize], s: f64) -> Result<f64> {
    check_s(s)?;
    let len = values.len();
    if blocks.windows(2).any(|w| w[0] >= w[1]) || blocks.iter().any(|&b| b == 0 || b > len) {
        return Err(Error::BadBlocks { len });
    }
    let mut acc = 0.0;
    for (k, &start) in blocks.iter().enumerate() {
        let end = blocks.get(k + 1).copied().unwrap_or(len);
        let block = &values[start - 1..end];
        let (lo, hi) = block
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        acc += pow_abs(hi - lo, s);
    }
    Ok(root(acc, s))
}

/// Dyadic block starts `1, 2, 4, … ≤ len`.
pub fn dyadic_blocks(len: usize) -> Vec<usize> {
    let mut b = Vec::new();
    let mut m = 1usize;
    while m <= len {
        b.push(m);
        m *= 2;
    }
    b
}

/// Indices `n_{k+1} = n_k + max(1, round(n_k^α))`, all `≤ N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapSequence {
    pub alpha: f64,
    pub indices: Vec<usize>,
}

pub fn gap_subsequence(alpha: f64, n: usize) -> Result<GapSequence> {
    GapSequence::with_start(alpha, 1, n)
}

impl GapSequence {
    pub fn with_start(alpha: f64, start: usize, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain("alpha", alpha, "0 < alpha < 1"));
        }
        if start == 0 {
            return Err(domain("n_1", 0.0, "n_1 >= 1"));
        }
        let mut indices = Vec::new();
        let mut k = start;
        while k <= n {
            indices.push(k);
            k += Self::step(alpha, k);
        }
        Ok(Self { alpha, indices })
    }

    pub fn step(alpha: f64, n: usize) -> usize {
        ((n as f64).powf(alpha).round() as usize).max(1)
    }

    /// Blocks `[n_k, n_{k+1})` that end inside `1..=n`.
    pub fn blocks_within(&self, n: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indices
            .windows(2)
            .map(|w| (w[0], w[1]))
            .take_while(move |&(_, b)| b <= n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockMode {
    EndpointDiff,
    BlockMax,
    BlockVariation,
}

impl std::str::FromStr for BlockMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "endpoint-diff" => Ok(Self::EndpointDiff),
            "block-max" => Ok(Self::BlockMax),
            "block-variation" => Ok(Self::BlockVariation),
            _ => Err(Error::Config(format!("unknown block mode `{s}`"))),
        }
    }
}

/// A functional of one sequence `v[0], v[1], …, v[N]` (index = `n`).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Functional {
    /// `(Σ_{n=1}^N n^α |v[n]|^s)^{1/s}`.
    Square { alpha: f64, s: f64 },
    /// `(Σ_{n=0}^N (n+1)^w |v[n]|^s)^{1/s}`.
    ShiftedSquare { weight: f64, s: f64 },
    /// `max_{1≤n≤N} n^α |v[n]|`.
    Maximal { alpha: f64 },
    /// `v(s)` of `n^β v[n]`, `n = 1..=N`.
    Variation { beta: f64, s: f64 },
    /// `o(s)` of `n^β v[n]`, `n = 1..=N`, with dyadic blocks.
    Oscillation { beta: f64, s: f64 },
    /// Gap-block functional with weights `n_k^{βs}`.
    Block {
        gaps: GapSequence,
        beta: f64,
        s: f64,
        mode: BlockMode,
    },
}

impl Functional {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Square { alpha, s } => {
                check_s(*s)?;
                if !alpha.is_finite() {
                    return Err(domain("alpha", *alpha, "finite"));
                }
            }
            Self::ShiftedSquare { s, .. } => check_s(*s)?,
            Self::Maximal { .. } => {}
            Self::Variation { s, .. } | Self::Oscillation { s, .. } => check_s(*s)?,
            Self::Block { beta, s, .. } => {
                check_s(*s)?;
                if !(*beta >= 0.0) {
                    return Err(domain("beta", *beta, "beta >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Values at each truncation level in `levels` (increasing, each
    /// `< seq.len()`).
    pub fn eval_levels(&self, seq: &[f64], levels: &[usize]) -> Vec<f64> {
        let weights = self.weights(levels.last().copied().unwrap_or(0));
        self.eval_with(&weights, seq, levels)
    }

    pub fn eval(&self, seq: &[f64], n: usize) -> f64 {
        self.eval_levels(seq, &[n])[0]
    }

    /// Per-`n` weights shared by all sites.
    pub(crate) fn weights(&self, n: usize) -> Vec<f64> {
        let pw = |e: f64| -> Vec<f64> {
            (0..=n)
                .map(|k| {
                    if k == 0 {
                        0.0
                    } else if e == 1.0 {
                        k as f64
                    } else {
                        (k as f64).powf(e)
                    }
                })
                .collect()
        };
        match self {
            Self::Square { alpha, .. } | Self::Maximal { alpha } => pw(*alpha),
            Self::ShiftedSquare { weight, .. } => {
                (0..=n).map(|k| ((k + 1) as f64).powf(*weight)).collect()
            }
            Self::Variation { beta, .. } | Self::Oscillation { beta, .. } => pw(*beta),
            Self::Block { beta, s, .. } => pw(beta * s),
        }
    }

    pub(crate) fn eval_with(&self, w: &[f64], seq: &[f64], levels: &[usize]) -> Vec<f64> {
        let top = levels.last().copied().unwrap_or(0);
        let at = |n: usize| seq.get(n).copied().unwrap_or(0.0);
        match self {
            Self::Square { s, .. } | Self::ShiftedSquare { s, .. } => {
                let first = if matches!(self, Self::Square { .. }) {
                    1
                } else {
                    0
                };
                let mut out = Vec::with_capacity(levels.len());
                let mut acc = 0.0;
                let mut li = 0;
                for n in first..=top {
                    let v = at(n);
                    if v != 0.0 {
                        acc += w[n] * pow_abs(v, *s);
                    }
                    while li < levels.len() && levels[li] == n {
                        out.push(root(acc, *s));
                        li += 1;
                    }
                }
                out.resize(levels.len(), root(acc, *s));
                out
            }
            Self::Maximal { .. } => {
                let mut out = Vec::with_capacity(levels.len());
                let mut acc = 0.0f64;
                let mut li = 0;
                while li < levels.len() && levels[li] == 0 {
                    out.push(0.0);
                    li += 1;
                }
                for n in 1..=top {
                    acc = acc.max(w[n] * at(n).abs());
                    while li < levels.len() && levels[li] == n {
                        out.push(acc);
                        li += 1;
                    }
                }
                out
            }
            Self::Variation { s, .. } | Self::Oscillation { s, .. } => {
                let scaled: Vec<f64> = (1..=top).map(|n| w[n] * at(n)).collect();
                levels
                    .iter()
                    .map(|&l| {
                        let v = &scaled[..l];
                        if matches!(self, Self::Variation { .. }) {
                            variation_unchecked(v, *s)
                        } else {
                            oscillation_norm(v, &dyadic_blocks(l), *s).unwrap_or(0.0)
                        }
                    })
                    .collect()
            }
            Self::Block { gaps, s, mode, .. } => levels
                .iter()
                .map(|&l| {
                    let mut acc = 0.0;
                    for (a, b) in gaps.blocks_within(l) {
                        let d = match mode {
                            BlockMode::EndpointDiff => pow_abs(at(a) - at(b), *s),
                            BlockMode::BlockMax => {
                                let base = at(a);
                                let m = (a..b).map(|n| (at(n) - base).abs()).fold(0.0, f64::max);
                                pow_abs(m, *s)
                            }
                            BlockMode::BlockVariation => {
                                let seg: Vec<f64> = (a..b).map(at).collect();
                                pow_abs(variation_unchecked(&seg, *s), *s)
                            }
                        };
                        acc += w[a] * d;
                    }
                    root(acc, *s)
                })
                .collect(),
        }
    }
}

/// Site-wise values of a functional at one truncation level.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalResult {
    pub pointwise: SpatialSequence,
    pub l1_norm: f64,
    pub truncation_n: usize,
    /// Bound on the contribution of `n > N`, when one is known.
    pub tail_estimate: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalSummary<'a> {
    pub functional: &'a Functional,
    pub n: usize,
    pub l1_norm: f64,
    pub tail_estimate: Option<f64>,
}

impl FunctionalResult {
    pub fn summary<'a>(&self, functional: &'a Functional) -> FunctionalSummary<'a> {
        FunctionalSummary {
            functional,
            n: self.truncation_n,
            l1_norm: self.l1_norm,
            tail_estimate: self.tail_estimate,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "site,value")?;
        for (x, v) in self.pointwise.iter() {
            writeln!(out, "{x},{v:e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

const SITE_CHUNK: usize = 256;

/// Evaluates `functional` at every site of `traj` for each level in
/// `levels` (increasing, at most `traj.len()`).
pub fn evaluate(
    traj: &Trajectory,
    functional: &Functional,
    levels: &[usize],
) -> Result<Vec<FunctionalResult>> {
    functional.validate()?;
    check_levels(levels, traj.len())?;
    let w_max = traj.w_max();
    let Some((lo, hi)) = traj.site_range() else {
        return Ok(levels
            .iter()
            .map(|&n| FunctionalResult {
                pointwise: SpatialSequence::zeros(w_max),
                l1_norm: 0.0,
                truncation_n: n,
                tail_estimate: None,
            })
            .collect());
    };
    let top = *levels.last().expect("nonempty");
    let weights = functional.weights(top);
    let width = (hi - lo + 1) as usize;
    let chunks: Vec<usize> = (0..width).step_by(SITE_CHUNK).collect();
    let per_chunk: Vec<Vec<Vec<f64>>> = chunks
        .par_iter()
        .map(|&c0| {
            let c1 = (c0 + SITE_CHUNK).min(width);
            let rows = c1 - c0;
            let mut buf = vec![0.0; rows * (top + 1)];
            for n in 0..=top {
                let t = traj.term(n);
                for (r, x) in (c0..c1).enumerate() {
                    buf[r * (top + 1) + n] = t.get(lo + x as i64);
                }
            }
            (0..rows)
                .map(|r| {
                    let seq = &buf[r * (top + 1)..(r + 1) * (top + 1)];
                    if seq.iter().all(|&v| v == 0.0) {
                        vec![0.0; levels.len()]
                    } else {
                        functional.eval_with(&weights, seq, levels)
                    }
                })
                .collect()
        })
        .collect();
    Ok(levels
        .iter()
        .enumerate()
        .map(|(li, &n)| {
            let vals: Vec<f64> = per_chunk.iter().flatten().map(|v| v[li]).collect();
            let pointwise = SpatialSequence::from_dense(lo, vals, w_max);
            FunctionalResult {
                l1_norm: pointwise.l1_norm(),
                pointwise,
                truncation_n: n,
                tail_estimate: None,
            }
        })
        .collect())
}

pub(crate) fn check_levels(levels: &[usize], n: usize) -> Result<()> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) || levels[levels.len() - 1] > n
    {
        return Err(Error::Config(format!(
            "truncation levels must be increasing and at most {n}"
        )));
    }
    Ok(())
}

fn single(traj: &Trajectory, f: Functional) -> Result<FunctionalResult> {
    let n = traj.len();
    Ok(evaluate(traj, &f, &[n])?.pop().expect("one level"))
}

/// `Q_{α,s,m} f(x) = (Σ_{n=1}^N n^α |terms[n](x)|^s)^{1/s}`.
pub fn square_function(traj: &Trajectory, alpha: f64, s: f64) -> Result<FunctionalResult> {
    single(traj, Functional::Square { alpha, s })
}

/// `max_{n≤N} n^α |terms[n](x)|`.
pub fn maximal_function(traj: &Trajectory, alpha: f64) -> Result<FunctionalResult> {
    single(traj, Functional::Maximal { alpha })
}

pub fn block_functional(
    traj: &Trajectory,
    gaps: &GapSequence,
    beta: f64,
    s: f64,
    mode: BlockMode,
) -> Result<FunctionalResult> {
    single(
        traj,
        Functional::Block {
            gaps: gaps.clone(),
            beta,
            s,
            mode,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variation_examples() {
        assert_eq!(variation_norm(&[0.0, 1.0, 0.0], 1.0).unwrap(), 2.0);
        assert!((variation_norm(&[0.0, 1.0, 0.0], 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        for s in [1.0, 1.5, 2.0, 3.0] {
            assert!((variation_norm(&[0.0, 1.0, 2.0, 3.0], s).unwrap() - 3.0).abs() < 1e-14);
        }
        assert!(variation_norm(&[1.0], 0.5).is_err());
        assert_eq!(variation_norm(&[], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn oscillation_examples() {
        let v = [0.0, 1.0, 0.0, 2.0];
        assert!((oscillation_norm(&v, &[1, 3], 2.0).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(oscillation_norm(&v, &[1], 1.0).unwrap(), 2.0);
        assert_eq!(oscillation_norm(&[3.0; 5], &[1, 2], 1.0).unwrap(), 0.0);
        assert!(oscillation_norm(&v, &[3, 1], 1.0).is_err());
        assert!(oscillation_norm(&v, &[1, 9], 1.0).is_err());
    }

    #[test]
    fn gap_examples() {
        let g = GapSequence::with_start(0.5, 4, 40).unwrap();
        assert_eq!(&g.indices[..4], &[4, 6, 8, 11]);
        let g = gap_subsequence(1e-9, 10).unwrap();
        assert_eq!(g.indices, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn square_levels_single_pass() {
        let f = Functional::Square { alpha: 1.0, s: 2.0 };
        let seq = [9.0, 1.0, 1.0, 1.0];
        let v = f.eval_levels(&seq, &[1, 3]);
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn block_modes_on_small_sequence() {
        let gaps = GapSequence {
            alpha: 0.5,
            indices: vec![1, 3],
        };
        let seq = [0.0, 1.0, 4.0, 2.0];
        let run = |mode| {
            Functional::Block {
                gaps: gaps.clone(),
                beta: 0.0,
                s: 1.0,
                mode,
            }
            .eval(&seq, 3)
        };
        assert_eq!(run(BlockMode::EndpointDiff), 1.0);
        assert_eq!(run(BlockMode::BlockMax), 3.0);
        assert_eq!(run(BlockMode::BlockVariation), 3.0);
    }
}
