//! The six quantities `A, B, B̃, C, D, E` for a family of symbols `Δ̂_n`,
//! with inner sums over `n` closed by geometric tails and the integrals on
//! `[0, t_min]` replaced by explicit power-law bounds.

use serde::{Deserialize, Serialize};

use super::tails::{moment_monomials, safe_mul, tail_sum, Monomials};
use crate::error::{domain, Result};
use crate::functionals::{pow_abs, root, GapSequence};
use crate::quadrature::{graded_breaks, integrate, QuadOptions};
use crate::symbol::{cpow, FourierSymbol, Jet, C64, DEFAULT_T_MIN};

/// `Δ̂_n = n^{α/s} μ̂ⁿ (1 - μ̂)^m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFamily {
    pub alpha: f64,
    pub s: f64,
    pub m: f64,
}

/// How a gap block `[n_k, n_{k+1})` enters the inner sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma2Mode {
    /// `|μ̂^{n_k} - μ̂^{n_{k+1}}|`.
    EndpointDiff,
    /// `max_{n ∈ I_k} |μ̂ⁿ - μ̂^{n_k}|`.
    BlockMax,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    Power(PowerFamily),
    Gaps {
        gaps_alpha: f64,
        start: usize,
        beta: f64,
        s: f64,
        mode: Lemma2Mode,
    },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertificateOptions {
    /// Relative tolerance of the quadratures and of the series stopping rule.
    pub tol: f64,
    /// Cap on the inner sums over `n`.
    pub n_cap: usize,
    /// Lower end of the numerical range; chosen from the symbol when `None`.
    pub t_min: Option<f64>,
    /// Exponent `a` of the power majorant `h(t) = |t|^a`.
    pub a: f64,
    /// Cap on the number of terms of the `C` and `D` series.
    pub series_cap: usize,
    /// Repeat with `tol/2` and `2·n_cap` and compare.
    pub stability_check: bool,
    pub max_intervals: usize,
    /// Inner sums stop once the tail bound is below this fraction.
    pub inner_rel: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            n_cap: 1 << 18,
            t_min: None,
            a: 2.0,
            series_cap: 1 << 14,
            stability_check: true,
            max_intervals: 3000,
            inner_rel: 1e-12,
        }
    }
}

/// Status of one certificate quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Quantity {
    Finite {
        value: f64,
    },
    /// Partial integrals `I_0, I_1, I_2, I_3` over `[t_min 4^{-j}, 1/2]`,
    /// each more than 10% above the previous one.
    Diverged {
        levels: Vec<f64>,
    },
    Unconverged {
        value: f64,
        reason: String,
    },
}

impl Quantity {
    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite { .. })
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, Self::Diverged { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite { value } => Some(*value),
            _ => None,
        }
    }
}

/// Constants of the power-law model near 0, fitted on a log grid:
/// `1-|μ̂| ≥ c1 t^a`, `|μ̂'| ≤ c2 t^{a-1}`, `c5 t^a ≤ |1-μ̂| ≤ c3 t^a`,
/// `|μ̂''| ≤ c4 t^{a-2}`, and `|μ̂| ≥ r_lo` on `[0, t_min]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmallTConstants {
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub r_lo: f64,
    pub t_min: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
}

/// Bounds valid on `(0, t_min]` for `S0, S1, S2` and `S0^s`.
#[derive(Clone, Debug, Serialize)]
pub struct SmallTBounds {
    pub s0: Monomials,
    pub s1: Monomials,
    pub s2: Monomials,
    pub s0_pow: Monomials,
}

impl SmallTBounds {
    pub fn at(&self, t: f64) -> [f64; 3] {
        [self.s0.eval(t), self.s1.eval(t), self.s2.eval(t)]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailBounds {
    pub a: f64,
    pub b: f64,
    pub b_tilde: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub symbol: String,
    pub family: FamilySpec,
    #[serde(rename = "A")]
    pub a: Quantity,
    #[serde(rename = "B")]
    pub b: Quantity,
    #[serde(rename = "B_tilde")]
    pub b_tilde: Quantity,
    #[serde(rename = "C")]
    pub c: Quantity,
    #[serde(rename = "D")]
    pub d: Quantity,
    /// Upper bound `(∫ S0^s)^{1/s}`.
    #[serde(rename = "E")]
    pub e: Quantity,
    pub quadrature_tol: f64,
    pub series_cutoff: usize,
    pub t_min: f64,
    pub n_cap: usize,
    pub analytic_tail_bounds: TailBounds,
    pub constants: SmallTConstants,
    /// `A + B̃ + C + E` when all four are finite.
    pub scale_tilde: Option<f64>,
    /// `A + B + C + D + E` when all five are finite.
    pub scale_full: Option<f64>,
}

impl CertificateReport {
    /// Either sufficient set of quantities is finite.
    pub fn bounded(&self) -> bool {
        self.scale_tilde.is_some() || self.scale_full.is_some()
    }
}

pub(crate) trait Family: Sync {
    fn s(&self) -> f64;
    /// `[S0, S1, S2]`: ℓ^s norms over `n` of `Δ̂_n`, `Δ̂_n'`, `Δ̂_n''` at one
    /// point, as partial sums plus a tail bound.
    fn sums(&self, j: &Jet) -> [f64; 3];
    fn small_t(&self, c: &SmallTConstants) -> SmallTBounds;
    fn spec(&self) -> FamilySpec;
}

/// `1 - |u|` from the gap `w = 1 - u` without cancellation.
pub(crate) fn one_minus_abs(j: &Jet) -> f64 {
    let w = j.gap;
    (2.0 * w.re - w.norm_sqr()) / (1.0 + j.value.norm())
}

fn weights(e: f64, cap: usize) -> Vec<f64> {
    (0..=cap)
        .map(|n| {
            if e == 1.0 {
                n as f64
            } else if n == 0 {
                0.0
            } else {
                (n as f64).powf(e)
            }
        })
        .collect()
}

struct PowerEval {
    fam: PowerFamily,
    cap: usize,
    rel: f64,
    npow: Vec<f64>,
}

impl PowerEval {
    fn new(fam: PowerFamily, cap: usize, rel: f64) -> Self {
        Self {
            npow: weights(fam.alpha, cap),
            fam,
            cap,
            rel,
        }
    }
}

impl Family for PowerEval {
    fn s(&self) -> f64 {
        self.fam.s
    }

    fn spec(&self) -> FamilySpec {
        FamilySpec::Power(self.fam)
    }

    fn sums(&self, j: &Jet) -> [f64; 3] {
        let PowerFamily { alpha, s, m } = self.fam;
        let (u, u1, u2, w) = (j.value, j.d1, j.d2, j.gap);
        let zero = C64::new(0.0, 0.0);
        let wm = cpow(w, m);
        let wm1 = if m != 0.0 { cpow(w, m - 1.0) } else { zero };
        let wm2 = if m * (m - 1.0) != 0.0 {
            cpow(w, m - 2.0)
        } else {
            zero
        };
        let r = u.norm();
        let rho = r.powf(s);
        let (a_u1, a_u2) = (u1.norm(), u2.norm());
        let (a_wm, a_wm1, a_wm2) = (wm.norm(), wm1.norm(), wm2.norm());
        let tails = |n: usize| -> [f64; 3] {
            let g0 = root(tail_sum(alpha, rho, n), s);
            let g1 = root(tail_sum(alpha + s, rho, n), s);
            let g2 = root(tail_sum(alpha + 2.0 * s, rho, n), s);
            let rinv = if r > 0.0 { 1.0 / r } else { 0.0 };
            let t0 = safe_mul(a_wm, g0);
            let first = safe_mul(a_wm * rinv, g1) + safe_mul(m * a_wm1, g0);
            let t1 = safe_mul(a_u1, first);
            let t2 = safe_mul(
                a_u1 * a_u1,
                safe_mul(a_wm * rinv * rinv, g2)
                    + safe_mul(2.0 * m * a_wm1 * rinv, g1)
                    + safe_mul((m * (m - 1.0)).abs() * a_wm2, g0),
            ) + safe_mul(a_u2, first);
            [t0, t1, t2]
        };
        let mut acc = [0.0f64; 3];
        let (mut p0, mut p1, mut p2) = (u, C64::new(1.0, 0.0), zero);
        let mut n = 1usize;
        loop {
            let nf = n as f64;
            let b0 = p0 * wm;
            let inner1 = nf * p1 * wm - m * p0 * wm1;
            let b1 = u1 * inner1;
            let b2 = u1
                * u1
                * (nf * (nf - 1.0) * p2 * wm - 2.0 * nf * m * p1 * wm1 + m * (m - 1.0) * p0 * wm2)
                + u2 * inner1;
            let wn = self.npow[n];
            acc[0] += wn * pow_abs(b0.norm(), s);
            acc[1] += wn * pow_abs(b1.norm(), s);
            acc[2] += wn * pow_abs(b2.norm(), s);
            if n.is_multiple_of(32) || n == self.cap {
                let t = tails(n);
                let part = acc.map(|x| root(x, s));
                let done = (0..3).all(|d| t[d] <= self.rel * part[d] || t[d] == 0.0);
                if done || n == self.cap {
                    return [part[0] + t[0], part[1] + t[1], part[2] + t[2]];
                }
            }
            p2 = p1;
            p1 = p0;
            p0 *= u;
            n += 1;
        }
    }

    fn small_t(&self, c: &SmallTConstants) -> SmallTBounds {
        let PowerFamily { alpha, s, m } = self.fam;
        let a = c.a;
        let lam = s * c.c1;
        let gamma_log = (s * m / 2.0).min(1.0);
        let g = |p: f64| moment_monomials(p, gamma_log, lam, a);
        let gr = |p: f64| g(p).root(s);
        let wpow = |p: f64| -> (f64, f64) {
            if p == 0.0 {
                (1.0, 0.0)
            } else if p > 0.0 {
                (c.c3.powf(p), a * p)
            } else {
                (c.c5.powf(p), a * p)
            }
        };
        let with = |coef: f64, (wc, we): (f64, f64), m: &Monomials| m.times(safe_mul(coef, wc), we);
        let ri = 1.0 / c.r_lo;

        let s0 = with(1.0, wpow(m), &gr(alpha));
        let mut inner1 = with(ri, wpow(m), &gr(alpha + s));
        inner1.add(&with(m, wpow(m - 1.0), &gr(alpha)));
        let s1 = inner1.times(c.c2, a - 1.0);
        let mut sq = with(ri * ri, wpow(m), &gr(alpha + 2.0 * s));
        sq.add(&with(2.0 * m * ri, wpow(m - 1.0), &gr(alpha + s)));
        sq.add(&with((m * (m - 1.0)).abs(), wpow(m - 2.0), &gr(alpha)));
        let mut s2 = sq.times(c.c2 * c.c2, 2.0 * a - 2.0);
        s2.add(&inner1.times(c.c4, a - 2.0));
        let (wc, we) = wpow(m);
        let s0_pow = g(alpha).times(safe_mul(1.0, wc.powf(s)), we * s);
        SmallTBounds { s0, s1, s2, s0_pow }
    }
}

struct GapEval {
    s: f64,
    beta: f64,
    mode: Lemma2Mode,
    gaps_alpha: f64,
    indices: Vec<usize>,
    /// `n_k^{βs}`
    kw: Vec<f64>,
    cap: usize,
    rel: f64,
}

impl GapEval {
    fn new(
        gaps: &GapSequence,
        beta: f64,
        s: f64,
        mode: Lemma2Mode,
        cap: usize,
        rel: f64,
    ) -> Result<Self> {
        let start = gaps.indices.first().copied().unwrap_or(1);
        let g = GapSequence::with_start(gaps.alpha, start, cap)?;
        let kw = g
            .indices
            .iter()
            .map(|&n| (n as f64).powf(beta * s))
            .collect();
        Ok(Self {
            s,
            beta,
            mode,
            gaps_alpha: gaps.alpha,
            indices: g.indices,
            kw,
            cap,
            rel,
        })
    }

    /// `max g_k / g_{k-1}` over the stored blocks.
    fn step_ratio(&self) -> f64 {
        let g: Vec<f64> = self
            .indices
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64)
            .collect();
        g.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max)
    }
}

impl Family for GapEval {
    fn s(&self) -> f64 {
        self.s
    }

    fn spec(&self) -> FamilySpec {
        FamilySpec::Gaps {
            gaps_alpha: self.gaps_alpha,
            start: self.indices.first().copied().unwrap_or(1),
            beta: self.beta,
            s: self.s,
            mode: self.mode,
        }
    }

    fn sums(&self, j: &Jet) -> [f64; 3] {
        let s = self.s;
        let bs = self.beta * s;
        let (u, u1, u2) = (j.value, j.d1, j.d2);
        let r = u.norm();
        let rho = r.powf(s);
        let (a_u1, a_u2) = (u1.norm(), u2.norm());
        let rinv = if r > 0.0 { 1.0 / r } else { 0.0 };
        // |D_k| ≤ 2 r^{n_k}, |D_k'| ≤ 3|u'| n_k r^{n_k-1},
        // |D_k''| ≤ 5|u'|² n_k² r^{n_k-2} + 3|u''| n_k r^{n_k-1}
        let tails = |n: usize| -> [f64; 3] {
            let t0 = 2.0 * root(tail_sum(bs, rho, n), s);
            let g1 = root(tail_sum(bs + s, rho, n), s);
            let g2 = root(tail_sum(bs + 2.0 * s, rho, n), s);
            let t1 = safe_mul(3.0 * a_u1 * rinv, g1);
            let t2 =
                safe_mul(5.0 * a_u1 * a_u1 * rinv * rinv, g2) + safe_mul(3.0 * a_u2 * rinv, g1);
            [t0, t1, t2]
        };
        // jets of uⁿ
        let jet = |n: usize, p0: C64, p1: C64, p2: C64| -> [C64; 3] {
            let nf = n as f64;
            [
                p0,
                nf * p1 * u1,
                nf * (nf - 1.0) * p2 * u1 * u1 + nf * p1 * u2,
            ]
        };
        let mut acc = [0.0f64; 3];
        let (mut p0, mut p1, mut p2) = (u, C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let mut n = 1usize;
        let mut k = 0usize;
        let mut base = [C64::new(0.0, 0.0); 3];
        let mut bmax = [0.0f64; 3];
        let first = self.indices[0];
        loop {
            let here = jet(n, p0, p1, p2);
            if n == self.indices[k] && n == first && k == 0 {
                base = here;
                bmax = [0.0; 3];
            } else if n > first {
                if n == self.indices[k + 1] {
                    let d = match self.mode {
                        Lemma2Mode::EndpointDiff => [
                            (base[0] - here[0]).norm(),
                            (base[1] - here[1]).norm(),
                            (base[2] - here[2]).norm(),
                        ],
                        Lemma2Mode::BlockMax => bmax,
                    };
                    for i in 0..3 {
                        acc[i] += self.kw[k] * pow_abs(d[i], s);
                    }
                    k += 1;
                    base = here;
                    bmax = [0.0; 3];
                    let t = tails(n);
                    let part = acc.map(|x| root(x, s));
                    let done = (0..3).all(|d| t[d] <= self.rel * part[d] || t[d] == 0.0);
                    if done || k + 1 >= self.indices.len() {
                        return [part[0] + t[0], part[1] + t[1], part[2] + t[2]];
                    }
                } else if self.mode == Lemma2Mode::BlockMax {
                    for i in 0..3 {
                        bmax[i] = bmax[i].max((here[i] - base[i]).norm());
                    }
                }
            }
            if n >= self.cap {
                let t = tails(n);
                return [0, 1, 2].map(|d| root(acc[d], s) + t[d]);
            }
            p2 = p1;
            p1 = p0;
            p0 *= u;
            n += 1;
        }
    }

    fn small_t(&self, c: &SmallTConstants) -> SmallTBounds {
        let s = self.s;
        let a = c.a;
        let bs = self.beta * s;
        let ag = self.gaps_alpha;
        let n1 = self.indices[0] as f64;
        let g1 = self.indices.get(1).map(|&x| x as f64 - n1).unwrap_or(1.0);
        let cg = self.step_ratio();
        let lam = s * c.c1;
        // Σ_k n_k^p g_k^s ρ^{n_k} ≤ 1.5^{s-1} (g_1 n_1^q + C_g 2^q G_q), q = p + α_g(s-1)
        let h = |p: f64| -> Monomials {
            let q = p + ag * (s - 1.0);
            let f = 1.5f64.powf(s - 1.0);
            let mut m = Monomials::term(f * g1 * n1.powf(q), 0.0);
            m.add(&moment_monomials(q, 1.0, lam, a).times(f * cg * 2f64.powf(q.max(0.0)), 0.0));
            m
        };
        let hr = |p: f64| h(p).root(s);
        let ri = 1.0 / c.r_lo;
        let s0 = hr(bs).times(c.c3, a);
        let mut inner1 = hr(bs + s).times(c.c3, a);
        inner1.add(&hr(bs));
        let s1 = inner1.times(c.c2 * ri, a - 1.0);
        let mut sq = hr(bs + 2.0 * s).times(c.c3, a);
        sq.add(&hr(bs + s).times(3.0, 0.0));
        let mut s2 = sq.times(c.c2 * c.c2 * ri * ri, 2.0 * a - 2.0);
        s2.add(&inner1.times(c.c4 * ri, a - 2.0));
        let s0_pow = h(bs).times(c.c3.powf(s), a * s);
        SmallTBounds { s0, s1, s2, s0_pow }
    }
}

/// Chooses `t_min` so that `1 - |μ̂(t_min)|` is about `2·10⁻⁴`, clamped to
/// `[2⁻²⁰, 2⁻⁶]` and rounded down to a power of two.
pub fn auto_t_min(base: &FourierSymbol, a: f64) -> Result<f64> {
    let t0 = 1e-3;
    let c = one_minus_abs(&base.eval(t0)?) / t0.powf(a);
    if !(c > 0.0) {
        return Ok(DEFAULT_T_MIN);
    }
    let target = (2e-4 / c).powf(1.0 / a);
    let t = 2f64.powf(target.log2().floor());
    Ok(t.clamp(DEFAULT_T_MIN, 2f64.powi(-6)))
}

/// Fits the constants of the power-law model on `[t_min/1024, 4 t_min]`.
pub fn fit_constants(base: &FourierSymbol, a: f64, t_min: f64) -> Result<SmallTConstants> {
    let (lo, hi) = (t_min / 1024.0, 4.0 * t_min);
    let pts = 241;
    let mut c = SmallTConstants {
        a,
        c1: f64::INFINITY,
        c2: 0.0,
        c3: 0.0,
        c4: 0.0,
        c5: f64::INFINITY,
        r_lo: 0.0,
        t_min,
        fit_lo: lo,
        fit_hi: hi,
    };
    for i in 0..pts {
        let t = lo * (hi / lo).powf(i as f64 / (pts - 1) as f64);
        let j = base.eval(t)?;
        let h = t.powf(a);
        c.c1 = c.c1.min(one_minus_abs(&j) / h);
        c.c2 = c.c2.max(j.d1.norm() / t.powf(a - 1.0));
        c.c3 = c.c3.max(j.gap.norm() / h);
        c.c4 = c.c4.max(j.d2.norm() / t.powf(a - 2.0));
        c.c5 = c.c5.min(j.gap.norm() / h);
    }
    c.c1 = c.c1.max(0.0);
    c.r_lo = 1.0 - c.c3 * t_min.powf(a);
    Ok(c)
}

#[derive(Clone, Debug)]
struct Raw {
    /// components over `[t_min, 1/K0]` and `[1/K0, 1/2]`:
    /// `S0/t, t S2, ln(1/t) S1, S1, S0^s`
    low: [f64; 5],
    high: [f64; 5],
    series_c: f64,
    series_d: f64,
    k0: usize,
    converged: bool,
}

fn integrand(fam: &dyn Family, base: &FourierSymbol, t: f64) -> [f64; 5] {
    match base.eval(t) {
        Ok(j) => {
            let [s0, s1, s2] = fam.sums(&j);
            [
                s0 / t,
                t * s2,
                (1.0 / t).ln() * s1,
                s1,
                pow_abs(s0, fam.s()),
            ]
        }
        Err(_) => [f64::INFINITY; 5],
    }
}

fn run(fam: &dyn Family, base: &FourierSymbol, t_min: f64, opts: &CertificateOptions) -> Raw {
    // series over k ≥ 2 at t = 1/k
    let k_cap = opts.series_cap.min((1.0 / t_min).floor() as usize).max(2);
    let (mut sc, mut sd) = (0.0, 0.0);
    let mut quiet = 0;
    let mut k0 = k_cap;
    for k in 2..=k_cap {
        let kf = k as f64;
        let v = match base.eval(1.0 / kf) {
            Ok(j) => fam.sums(&j),
            Err(_) => [f64::INFINITY; 3],
        };
        let (tc, td) = (v[0] / kf, v[1] / (kf * kf));
        sc += tc;
        sd += td;
        if tc <= opts.tol * sc && td <= opts.tol * sd {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= 16 || !(sc + sd).is_finite() {
            k0 = k;
            break;
        }
    }
    let split = 1.0 / k0 as f64;
    let q = QuadOptions {
        rel_tol: opts.tol,
        abs_tol: 1e-300,
        max_intervals: opts.max_intervals,
    };
    let f = |t: f64| integrand(fam, base, t);
    let low = if split > t_min {
        integrate(f, &graded_breaks(t_min, split), &q)
    } else {
        integrate(f, &[t_min, t_min], &q)
    };
    let high = integrate(f, &graded_breaks(split.max(t_min), 0.5), &q);
    Raw {
        low: low.value,
        high: high.value,
        series_c: sc,
        series_d: sd,
        k0,
        converged: low.converged && high.converged,
    }
}

struct Totals {
    a: f64,
    b: f64,
    bt: f64,
    c: f64,
    d: f64,
    e: f64,
}

fn totals(raw: &Raw, tails: &TailBounds, s: f64) -> Totals {
    let num = |i: usize| raw.low[i] + raw.high[i];
    Totals {
        a: 2.0 * (num(0) + tails.a),
        b: 2.0 * (num(1) + tails.b),
        bt: 2.0 * (num(2) + tails.b_tilde),
        c: 2.0 * (raw.series_c + raw.low[0] + tails.c),
        d: 2.0 * (raw.series_d + raw.low[3] + tails.d),
        e: root(2.0 * (num(4) + tails.e), s),
    }
}

fn certify(
    base: &FourierSymbol,
    make: &dyn Fn(usize) -> Result<Box<dyn Family>>,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    if !(opts.tol > 0.0) {
        return Err(domain("tol", opts.tol, "tol > 0"));
    }
    if !(opts.a > 0.0 && opts.a <= 2.0) {
        return Err(domain("a", opts.a, "0 < a <= 2"));
    }
    let t_min = match opts.t_min {
        Some(t) if t > 0.0 && t < 0.5 => t,
        Some(t) => return Err(domain("t_min", t, "0 < t_min < 1/2")),
        None => auto_t_min(base, opts.a)?,
    };
    let fam = make(opts.n_cap)?;
    let s = fam.s();
    let consts = fit_constants(base, opts.a, t_min)?;
    // with 1 - μ̂ ≡ 0 near 0 the bounds collapse to zero for any c1
    let small = if consts.r_lo > 0.0 && (consts.c1 > 0.0 || consts.c3 == 0.0) {
        fam.small_t(&consts)
    } else {
        let inf = Monomials::term(f64::INFINITY, -1.0);
        SmallTBounds {
            s0: inf.clone(),
            s1: inf.clone(),
            s2: inf.clone(),
            s0_pow: inf,
        }
    };
    let tails = TailBounds {
        a: small.s0.times(1.0, -1.0).integral(t_min),
        b: small.s2.times(1.0, 1.0).integral(t_min),
        b_tilde: small.s1.log_integral(t_min),
        c: small.s0.times(1.0, -1.0).integral(t_min),
        d: small.s1.integral(t_min),
        e: small.s0_pow.integral(t_min),
    };

    let raw = run(fam.as_ref(), base, t_min, opts);
    let tot = totals(&raw, &tails, s);
    let check = if opts.stability_check {
        let fam2 = make(opts.n_cap * 2)?;
        let o2 = CertificateOptions {
            tol: opts.tol / 2.0,
            ..*opts
        };
        let raw2 = run(fam2.as_ref(), base, t_min, &o2);
        Some((totals(&raw2, &tails, s), raw2.converged))
    } else {
        None
    };

    // partial integrals below t_min for divergence diagnostics
    let any_inf = [tails.a, tails.b, tails.b_tilde, tails.c, tails.d, tails.e]
        .iter()
        .any(|t| !t.is_finite());
    let extra: Vec<[f64; 5]> = if any_inf {
        let q = QuadOptions {
            rel_tol: opts.tol,
            abs_tol: 1e-300,
            max_intervals: opts.max_intervals,
        };
        (1..=3)
            .map(|j| {
                let hi = t_min * 4f64.powi(-(j - 1));
                let lo = hi / 4.0;
                integrate(
                    |t| integrand(fam.as_ref(), base, t),
                    &[lo, hi / 2.0, hi],
                    &q,
                )
                .value
            })
            .collect()
    } else {
        Vec::new()
    };

    let num = |i: usize| raw.low[i] + raw.high[i];
    let judge = |value: f64,
                 alt: Option<f64>,
                 tail: f64,
                 start: f64,
                 comp: usize,
                 transform: &dyn Fn(f64) -> f64|
     -> Quantity {
        if !tail.is_finite() {
            let mut levels = vec![transform(start)];
            let mut acc = start;
            for e in &extra {
                acc += e[comp];
                levels.push(transform(acc));
            }
            let diverged = levels.len() == 4
                && levels.iter().all(|v| v.is_finite())
                && levels.windows(2).all(|w| w[1] > 1.1 * w[0]);
            if diverged {
                return Quantity::Diverged { levels };
            }
            return Quantity::Unconverged {
                value: f64::INFINITY,
                reason: "no finite bound near t = 0".into(),
            };
        }
        if !value.is_finite() {
            return Quantity::Unconverged {
                value,
                reason: "inner sums did not close".into(),
            };
        }
        if !raw.converged {
            return Quantity::Unconverged {
                value,
                reason: "quadrature did not reach tolerance".into(),
            };
        }
        if let Some(v2) = alt {
            let scale = value.abs().max(v2.abs());
            if scale > 0.0 && (value - v2).abs() > 1e-4 * scale {
                return Quantity::Unconverged {
                    value,
                    reason: format!("changed to {v2:e} under refinement"),
                };
            }
        }
        Quantity::Finite { value }
    };
    let alt = |f: &dyn Fn(&Totals) -> f64| {
        check
            .as_ref()
            .map(|(t, ok)| if *ok { f(t) } else { f64::NAN })
    };
    let id = |x: f64| x;
    let e_tf = |x: f64| root(2.0 * x, s);
    let a = judge(tot.a, alt(&|t| t.a), tails.a, 2.0 * num(0), 0, &id);
    let b = judge(tot.b, alt(&|t| t.b), tails.b, 2.0 * num(1), 1, &id);
    let bt = judge(tot.bt, alt(&|t| t.bt), tails.b_tilde, 2.0 * num(2), 2, &id);
    let c = judge(
        tot.c,
        alt(&|t| t.c),
        tails.c,
        2.0 * (raw.series_c + raw.low[0]),
        0,
        &id,
    );
    let d = judge(
        tot.d,
        alt(&|t| t.d),
        tails.d,
        2.0 * (raw.series_d + raw.low[3]),
        3,
        &id,
    );
    let e = judge(tot.e, alt(&|t| t.e), tails.e, num(4), 4, &e_tf);
    let sum = |qs: &[&Quantity]| -> Option<f64> { qs.iter().map(|q| q.value()).sum() };
    Ok(CertificateReport {
        symbol: base.label().to_string(),
        family: fam.spec(),
        scale_tilde: sum(&[&a, &bt, &c, &e]),
        scale_full: sum(&[&a, &b, &c, &d, &e]),
        a,
        b,
        b_tilde: bt,
        c,
        d,
        e,
        quadrature_tol: opts.tol,
        series_cutoff: raw.k0,
        t_min,
        n_cap: opts.n_cap,
        analytic_tail_bounds: tails,
        constants: consts,
    })
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 1.0 && s.is_finite()) {
        return Err(domain("s", s, "1 <= s < inf"));
    }
    Ok(())
}

/// Certificate quantities for `Δ̂_n = n^{α/s} μ̂ⁿ (1 - μ̂)^m`.
pub fn lemma_quantities(
    base: &FourierSymbol,
    family: &PowerFamily,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    check_s(family.s)?;
    if !(family.m >= 0.0) {
        return Err(domain("m", family.m, "m >= 0"));
    }
    let fam = *family;
    let rel = opts.inner_rel;
    certify(
        base,
        &|cap| Ok(Box::new(PowerEval::new(fam, cap, rel))),
        opts,
    )
}

/// Certificate quantities for the gap blocks `I_k = [n_k, n_{k+1})` with
/// `Δ_k = n_k^β (μ^{n_k} - μ^{n_{k+1}})` (or the in-block maximum).
///
/// The gap rule and first index are taken from `gaps`; indices are extended
/// up to the inner-sum cap.
pub fn lemma2_quantities(
    base: &FourierSymbol,
    gaps: &GapSequence,
    beta: f64,
    s: f64,
    mode: Lemma2Mode,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    check_s(s)?;
    if !(beta >= 0.0) {
        return Err(domain("beta", beta, "beta >= 0"));
    }
    let rel = opts.inner_rel;
    certify(
        base,
        &|cap| Ok(Box::new(GapEval::new(gaps, beta, s, mode, cap, rel)?) as Box<dyn Family>),
        opts,
    )
}

/// `[S0, S1, S2]` at one point, as used inside the quadratures.
pub fn family_sums(
    base: &FourierSymbol,
    family: &PowerFamily,
    t: f64,
    opts: &CertificateOptions,
) -> Result<[f64; 3]> {
    let j = base.eval(t)?;
    Ok(PowerEval::new(*family, opts.n_cap, opts.inner_rel).sums(&j))
}

/// The bounds used on `(0, t_min]`, together with the fitted constants.
pub fn small_t_bounds(
    base: &FourierSymbol,
    family: &PowerFamily,
    t_min: f64,
    opts: &CertificateOptions,
) -> Result<(SmallTConstants, SmallTBounds)> {
    let c = fit_constants(base, opts.a, t_min)?;
    Ok((c, PowerEval::new(*family, 1, opts.inner_rel).small_t(&c)))
}

/// Same as [`family_sums`] for the gap-block family.
pub fn gap_family_sums(
    base: &FourierSymbol,
    gaps: &GapSequence,
    beta: f64,
    s: f64,
    mode: Lemma2Mode,
    t: f64,
    opts: &CertificateOptions,
) -> Result<[f64; 3]> {
    let j = base.eval(t)?;
    Ok(GapEval::new(gaps, beta, s, mode, opts.n_cap, opts.inner_rel)?.sums(&j))
}

pub fn gap_small_t_bounds(
    base: &FourierSymbol,
    gaps: &GapSequence,
    beta: f64,
    s: f64,
    mode: Lemma2Mode,
    t_min: f64,
    opts: &CertificateOptions,
) -> Result<(SmallTConstants, SmallTBounds)> {
    let c = fit_constants(base, opts.a, t_min)?;
    Ok((
        c,
        GapEval::new(gaps, beta, s, mode, opts.n_cap, opts.inner_rel)?.small_t(&c),
    ))
}
