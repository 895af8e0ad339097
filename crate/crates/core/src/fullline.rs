//! Site functionals of `T_μⁿ (I - T_μ)^m f` on the whole line, for measures
//! whose convolution powers are known in closed form.
//!
//! For `μ = ν_{1/2}` the powers spread like `n²`, so a window wide enough for
//! `n = 4096` would need tens of millions of sites. Instead the value at each
//! site is computed directly from
//!
//! `μ*ⁿ(k) = (n/k) C(2k-n-1, k-n) 2^{-(2k-n)}`, `k ≥ n`,
//!
//! (the first-passage law of the simple walk; `ν_{1/2}` is its one-step
//! law). Sites close to the support of `f` are summed exactly; further out
//! the site sum over dyadic blocks is replaced by Gauss–Legendre quadrature
//! in a continuous site variable, and the remaining far tail is
//! extrapolated geometrically.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::functionals::{check_levels, Functional};
use crate::quadrature::gauss_legendre;

/// Convolution powers of a measure supported on `k ≥ 0`, with a smooth
/// extension to real `k`.
pub trait PowerLaw: Send + Sync {
    /// Fills `out[n] = μ*ⁿ(k)` for `n = 0..out.len()` (`μ*⁰ = δ₀`).
    fn powers(&self, k: f64, out: &mut [f64]);

    fn name(&self) -> String;
}

/// `Γ(x + a) / Γ(x + b)` for `x + a, x + b > 0`, accurate for large `x`.
pub fn gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    const SHIFT: f64 = 64.0;
    let mut x = x;
    let mut prod = 1.0;
    while x < SHIFT {
        // Γ(x+a)/Γ(x+b) = (x+b)/(x+a) · Γ(x+1+a)/Γ(x+1+b)
        prod *= (x + b) / (x + a);
        x += 1.0;
    }
    // ln Γ(x+a) - ln Γ(x+b) = (a-b) ln x + Σ_j (-1)^{j+1} (B_{j+1}(a) - B_{j+1}(b)) / (j(j+1) x^j)
    let bern = |a: f64| -> [f64; 6] {
        let a2 = a * a;
        let a3 = a2 * a;
        let a4 = a3 * a;
        let a5 = a4 * a;
        [
            a2 - a + 1.0 / 6.0,
            a3 - 1.5 * a2 + 0.5 * a,
            a4 - 2.0 * a3 + a2 - 1.0 / 30.0,
            a5 - 2.5 * a4 + 5.0 / 3.0 * a3 - a / 6.0,
            a5 * a - 3.0 * a5 + 2.5 * a4 - 0.5 * a2 + 1.0 / 42.0,
            a5 * a2 - 3.5 * a5 * a + 3.5 * a5 - 7.0 / 6.0 * a3 + a / 6.0,
        ]
    };
    let (ba, bb) = (bern(a), bern(b));
    let mut s = (a - b) * x.ln();
    let mut xp = x;
    for j in 1..=6 {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        s += sign * (ba[j - 1] - bb[j - 1]) / ((j * (j + 1)) as f64 * xp);
        xp *= x;
    }
    prod * s.exp()
}

/// Powers of `ν_{1/2}`, the first-passage law.
#[derive(Clone, Copy, Debug, Default)]
pub struct HalfFirstPassage;

impl PowerLaw for HalfFirstPassage {
    fn powers(&self, k: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if out.is_empty() {
            return;
        }
        if k == 0.0 {
            out[0] = 1.0;
            return;
        }
        if k < 1.0 {
            return;
        }
        // ν_{1/2}(k) = Γ(k - 1/2) / (2√π Γ(k + 1))
        let mut v = gamma_ratio(k, -0.5, 1.0) / (2.0 * std::f64::consts::PI.sqrt());
        for n in 1..out.len() {
            out[n] = v;
            let nf = n as f64;
            if k - nf <= 0.0 || v == 0.0 {
                break;
            }
            v *= 2.0 * (nf + 1.0) * (k - nf) / (nf * (2.0 * k - nf - 1.0));
        }
    }

    fn name(&self) -> String {
        "nu_alpha:0.5".into()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FullLineOptions {
    /// Depths `0..exact_depth` below the top of the support are summed site
    /// by site.
    pub exact_depth: u64,
    /// Gauss–Legendre nodes per dyadic block (half as many give the error
    /// estimate).
    pub nodes: usize,
    /// Hard limit on the depth.
    pub max_depth: f64,
    /// Stop once four consecutive blocks each add less than this fraction.
    pub rel_stop: f64,
}

impl Default for FullLineOptions {
    fn default() -> Self {
        Self {
            exact_depth: 8192,
            nodes: 24,
            max_depth: 2f64.powi(52),
            rel_stop: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FullLineLevel {
    pub n: usize,
    /// Total: exact + sampled + extrapolated tail.
    pub l1_norm: f64,
    pub exact_part: f64,
    pub sampled_part: f64,
    pub quadrature_error: f64,
    pub tail_estimate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FullLineResult {
    pub law: String,
    pub m: u32,
    pub levels: Vec<FullLineLevel>,
    pub depth_reached: f64,
    pub blocks: usize,
}

struct SiteEval<'a> {
    law: &'a dyn PowerLaw,
    m: u32,
    binom: Vec<f64>,
    f: Vec<(f64, f64)>,
    top_site: f64,
    len: usize,
}

impl SiteEval<'_> {
    /// `terms[n](x)` for `n = 0..len` at depth `u = top_site - x`.
    fn sequence(&self, u: f64, buf: &mut Vec<f64>, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let m = self.m as usize;
        buf.resize(self.len + m, 0.0);
        for &(y, fy) in &self.f {
            // k = y - x
            let k = u - (self.top_site - y);
            if k < 0.0 {
                continue;
            }
            self.law.powers(k, buf);
            for (n, o) in out.iter_mut().enumerate() {
                let mut d = 0.0;
                for j in 0..=m {
                    d += self.binom[j] * buf[n + j];
                }
                *o += fy * d;
            }
        }
    }
}

/// `Σ_x F(n ↦ terms[n](x))` over all sites, for each truncation level.
///
/// `f` is a finitely supported function given as `(site, value)` pairs and
/// `m` the (integer) order of the difference.
pub fn full_line_norms(
    law: &dyn PowerLaw,
    m: u32,
    f: &[(i64, f64)],
    functional: &Functional,
    levels: &[usize],
    opts: &FullLineOptions,
) -> Result<FullLineResult> {
    functional.validate()?;
    check_levels(levels, usize::MAX)?;
    if opts.nodes < 2 {
        return Err(domain("nodes", opts.nodes as f64, "nodes >= 2"));
    }
    let top = *levels.last().expect("nonempty");
    let f: Vec<(f64, f64)> = f
        .iter()
        .filter(|p| p.1 != 0.0)
        .map(|&(y, v)| (y as f64, v))
        .collect();
    let mut binom = vec![1.0];
    for j in 1..=m as usize {
        let prev = binom[j - 1];
        binom.push(-prev * (m as usize + 1 - j) as f64 / j as f64);
    }
    let top_site = f.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut out = FullLineResult {
        law: law.name(),
        m,
        levels: levels
            .iter()
            .map(|&n| FullLineLevel {
                n,
                l1_norm: 0.0,
                exact_part: 0.0,
                sampled_part: 0.0,
                quadrature_error: 0.0,
                tail_estimate: 0.0,
            })
            .collect(),
        depth_reached: 0.0,
        blocks: 0,
    };
    if f.is_empty() {
        return Ok(out);
    }
    let ev = SiteEval {
        law,
        m,
        binom,
        f,
        top_site,
        len: top + 1,
    };
    let weights = functional.weights(top);
    let eval_at = |u: f64, buf: &mut Vec<f64>, seq: &mut Vec<f64>| -> Vec<f64> {
        seq.resize(top + 1, 0.0);
        ev.sequence(u, buf, seq);
        if seq.iter().all(|&v| v == 0.0) {
            vec![0.0; levels.len()]
        } else {
            functional.eval_with(&weights, seq, levels)
        }
    };
    let nl = levels.len();

    // exact region
    const CHUNK: u64 = 128;
    let chunks: Vec<u64> = (0..opts.exact_depth).step_by(CHUNK as usize).collect();
    let partial: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&c| {
            let mut buf = Vec::new();
            let mut seq = Vec::new();
            let mut acc = vec![0.0; nl];
            for u in c..(c + CHUNK).min(opts.exact_depth) {
                let v = eval_at(u as f64, &mut buf, &mut seq);
                for i in 0..nl {
                    acc[i] += v[i];
                }
            }
            acc
        })
        .collect();
    for p in &partial {
        for i in 0..nl {
            out.levels[i].exact_part += p[i];
        }
    }

    // dyadic blocks [a, 2a) with Gauss–Legendre in the continuous depth
    let (xf, wf) = gauss_legendre(opts.nodes);
    let (xc, wc) = gauss_legendre(opts.nodes / 2);
    let mut a = opts.exact_depth.max(1) as f64;
    let mut history: Vec<Vec<f64>> = Vec::new();
    let mut quiet = 0;
    let min_depth = 16.0 * (top as f64 + 1.0).powi(2);
    while a < opts.max_depth {
        let b = 2.0 * a;
        let (lo, hi) = (a - 0.5, b - 0.5);
        let rule = |x: &[f64], w: &[f64]| -> Vec<f64> {
            let vals: Vec<Vec<f64>> = x
                .par_iter()
                .map(|&xi| {
                    let mut buf = Vec::new();
                    let mut seq = Vec::new();
                    eval_at(0.5 * (lo + hi) + 0.5 * (hi - lo) * xi, &mut buf, &mut seq)
                })
                .collect();
            let mut acc = vec![0.0; nl];
            for (v, wi) in vals.iter().zip(w) {
                for i in 0..nl {
                    acc[i] += 0.5 * (hi - lo) * wi * v[i];
                }
            }
            acc
        };
        let fine = rule(&xf, &wf);
        let coarse = rule(&xc, &wc);
        let mut small = true;
        for i in 0..nl {
            let lv = &mut out.levels[i];
            lv.sampled_part += fine[i];
            lv.quadrature_error += (fine[i] - coarse[i]).abs();
            if fine[i] > opts.rel_stop * (lv.exact_part + lv.sampled_part) {
                small = false;
            }
        }
        history.push(fine);
        out.blocks += 1;
        a = b;
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 4 && a >= min_depth {
            break;
        }
    }
    out.depth_reached = a;
    if history.len() >= 2 {
        let last = &history[history.len() - 1];
        let prev = &history[history.len() - 2];
        for i in 0..nl {
            let r = if prev[i] > 0.0 {
                last[i] / prev[i]
            } else {
                0.0
            };
            out.levels[i].tail_estimate = if last[i] == 0.0 {
                0.0
            } else if r < 1.0 {
                last[i] * r / (1.0 - r)
            } else {
                f64::INFINITY
            };
        }
    }
    for lv in &mut out.levels {
        lv.l1_norm = lv.exact_part + lv.sampled_part + lv.tail_estimate;
    }
    Ok(out)
}

/// `terms[n](x)` for `n = 0..=n_max` at every site of depth `< depth`,
/// returned as `(site, sequence)` pairs ordered by decreasing site.
pub fn full_line_sequences(
    law: &dyn PowerLaw,
    m: u32,
    f: &[(i64, f64)],
    n_max: usize,
    depth: u64,
) -> Vec<(i64, Vec<f64>)> {
    let fv: Vec<(f64, f64)> = f
        .iter()
        .filter(|p| p.1 != 0.0)
        .map(|&(y, v)| (y as f64, v))
        .collect();
    if fv.is_empty() {
        return Vec::new();
    }
    let mut binom = vec![1.0];
    for j in 1..=m as usize {
        let prev = binom[j - 1];
        binom.push(-prev * (m as usize + 1 - j) as f64 / j as f64);
    }
    let top_site = fv.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ev = SiteEval {
        law,
        m,
        binom,
        f: fv,
        top_site,
        len: n_max + 1,
    };
    (0..depth)
        .into_par_iter()
        .map(|u| {
            let mut buf = Vec::new();
            let mut seq = vec![0.0; n_max + 1];
            ev.sequence(u as f64, &mut buf, &mut seq);
            (top_site as i64 - u as i64, seq)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::frac_coeff;

    #[test]
    fn gamma_ratio_small_and_large() {
        // Γ(5)/Γ(3) = 12
        assert!((gamma_ratio(4.0, 1.0, -1.0) - 12.0).abs() < 1e-12);
        // Γ(x+1)/Γ(x) = x
        for x in [0.7, 10.0, 1e3, 1e9, 3e14] {
            assert!((gamma_ratio(x, 1.0, 0.0) / x - 1.0).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn first_power_is_nu_half() {
        let c = frac_coeff(0.5, 300).unwrap();
        let mut out = vec![0.0; 2];
        for k in 1..=300 {
            HalfFirstPassage.powers(k as f64, &mut out);
            assert!((out[1] / c.get(k) - 1.0).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn small_powers_by_hand() {
        let mut out = vec![0.0; 4];
        HalfFirstPassage.powers(2.0, &mut out);
        assert!((out[1] - 0.125).abs() < 1e-15);
        assert!((out[2] - 0.25).abs() < 1e-15);
        assert_eq!(out[3], 0.0);
        HalfFirstPassage.powers(3.0, &mut out);
        assert!((out[1] - 0.0625).abs() < 1e-15);
        assert!((out[3] - 0.125).abs() < 1e-15);
    }
}
