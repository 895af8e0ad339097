//! Grid checks of the angular ratio, M1 and M2, and the Ritt trend
//! `n ↦ n‖μⁿ - μⁿ⁺¹‖₁`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::measure::{convolve, truncate_unchecked, SignedMeasure};
use crate::symbol::{half_step_grid, FourierSymbol, MajorantFunction, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsEmpirically,
    Fails,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    #[serde(rename = "angular-ratio")]
    AngularRatio,
    M1,
    #[serde(rename = "M2-i")]
    M2i,
    #[serde(rename = "M2-ii")]
    M2ii,
    #[serde(rename = "M2-iii")]
    M2iii,
    #[serde(rename = "M2-iv")]
    M2iv,
    #[serde(rename = "M2-v")]
    M2v,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    /// Supremum (or, for lower bounds, infimum) of the tested ratio.
    pub sup_estimate: f64,
    /// Named constants, e.g. `("a", 2.0), ("c1", 4.0)`.
    pub best_constants: Vec<(String, f64)>,
    pub grid: String,
    pub verdict: Verdict,
    /// Point where the condition is violated; present whenever the verdict
    /// is `Fails`.
    pub witness: Option<f64>,
    /// Grid points left out because `1 - |μ̂(t)|` underflows.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<f64>,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsEmpirically
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct M2Report {
    pub conditions: Vec<ConditionReport>,
    pub verdict: Verdict,
}

/// `1 - |u|` from `u` and `w = 1 - u`.
fn deficit(u: C64, w: C64) -> f64 {
    (2.0 * w.re - w.norm_sqr()) / (1.0 + u.norm())
}

/// Sorted grid on `(-1/2, 1/2]`: a uniform half-step grid plus a symmetric
/// log grid down to `t_lo`, and the endpoint `1/2`.
fn mixed_grid(size: usize, t_lo: f64, log_pts: usize) -> Vec<f64> {
    let mut g = half_step_grid(size);
    g.push(0.5);
    for i in 0..log_pts {
        let t = t_lo * (0.5 / t_lo).powf(i as f64 / log_pts as f64);
        g.push(t);
        g.push(-t);
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn sup_on(
    symbol: &FourierSymbol,
    grid: &[f64],
    excluded: &mut Vec<f64>,
    witness: &mut Option<f64>,
) -> (f64, f64) {
    let (mut best, mut at) = (0.0f64, 0.0);
    for &t in grid {
        let (u, w) = (symbol.value(t), symbol.gap(t));
        let d = deficit(u, w);
        if d < 1e-14 {
            excluded.push(t);
            if w.norm() > 1e-8 && witness.is_none() {
                *witness = Some(t);
            }
            continue;
        }
        let r = w.norm() / d;
        if r > best {
            best = r;
            at = t;
        }
    }
    (best, at)
}

/// `sup |1 - μ̂(t)| / (1 - |μ̂(t)|)` on a half-step grid with local
/// refinement around the maximum, compared against a 4× finer grid.
pub fn angular_ratio(symbol: &FourierSymbol, grid_size: usize) -> Result<ConditionReport> {
    if grid_size < 2 {
        return Err(domain("grid_size", grid_size as f64, "grid_size >= 2"));
    }
    let mut excluded = Vec::new();
    let mut witness = None;
    let coarse = sup_on(
        symbol,
        &half_step_grid(grid_size),
        &mut excluded,
        &mut witness,
    );
    let mut skip = Vec::new();
    let fine = sup_on(
        symbol,
        &half_step_grid(4 * grid_size),
        &mut skip,
        &mut witness,
    );
    // zoom in on the finer maximum
    let (mut best, mut at) = fine;
    let mut h = 1.0 / (4 * grid_size) as f64;
    for _ in 0..6 {
        let local: Vec<f64> = (0..=32)
            .map(|j| at + h * (j as f64 / 16.0 - 1.0))
            .filter(|t| t.abs() < 0.5 && *t != 0.0)
            .collect();
        let (b, a) = sup_on(symbol, &local, &mut skip, &mut witness);
        if b > best {
            best = b;
            at = a;
        }
        h /= 8.0;
    }
    let verdict = if witness.is_some() {
        Verdict::Fails
    } else if best.is_finite() && best <= 1.1 * coarse.0 {
        Verdict::HoldsEmpirically
    } else {
        Verdict::Inconclusive
    };
    Ok(ConditionReport {
        condition: Condition::AngularRatio,
        sup_estimate: best,
        best_constants: vec![("ratio".into(), best), ("t_star".into(), at)],
        grid: format!(
            "half-step {grid_size} and {}, local refinement",
            4 * grid_size
        ),
        verdict,
        witness,
        excluded,
    })
}

struct Level {
    lower: f64,
    lower_at: f64,
    upper: f64,
    upper_at: f64,
}

/// Infimum of the first and supremum of the second value, skipping points
/// where the symbol could not be evaluated.
fn scan(points: impl Iterator<Item = (f64, Option<(f64, f64)>)>) -> Level {
    let mut l = Level {
        lower: f64::INFINITY,
        lower_at: f64::NAN,
        upper: 0.0,
        upper_at: f64::NAN,
    };
    for (t, v) in points {
        if let Some((lo, hi)) = v {
            if lo < l.lower {
                l.lower = lo;
                l.lower_at = t;
            }
            if hi > l.upper {
                l.upper = hi;
                l.upper_at = t;
            }
        }
    }
    l
}

fn level_grid(level: u32) -> (Vec<f64>, String) {
    let size = 256 << level;
    let t_lo = 2f64.powi(-(10 + 5 * level as i32));
    (
        mixed_grid(size, t_lo, 64 * (level as usize + 1)),
        format!("half-step {size} + log grid to {t_lo:e}"),
    )
}

/// Judges a lower constant (must stay positive) and an upper constant (must
/// stay bounded) across three refinement levels.
fn judge(levels: &[Level]) -> (Verdict, Option<f64>) {
    let last = levels.last().expect("levels");
    if !(last.lower > 1e-12) {
        return (Verdict::Fails, Some(last.lower_at));
    }
    for w in levels.windows(2) {
        if w[1].lower < 0.5 * w[0].lower {
            return (Verdict::Fails, Some(w[1].lower_at));
        }
        if w[1].upper > 2.0 * w[0].upper || !w[1].upper.is_finite() {
            return (Verdict::Fails, Some(w[1].upper_at));
        }
    }
    (Verdict::HoldsEmpirically, None)
}

/// Best constants in `1 - |μ̂(t)| ≥ c1 |t|^a` and `|μ̂'(t)| ≤ c2 |t|^{a-1}`.
pub fn check_m1(symbol: &FourierSymbol, a: f64) -> Result<ConditionReport> {
    if !(a > 0.0 && a <= 2.0) {
        return Err(domain("a", a, "0 < a <= 2"));
    }
    let mut levels = Vec::new();
    let mut desc = String::new();
    for l in 0..3 {
        let (grid, d) = level_grid(l);
        desc = d;
        levels.push(scan(grid.iter().map(|&t| {
            let v = symbol.eval(t).ok().map(|j| {
                let ta = t.abs().powf(a);
                (deficit(j.value, j.gap) / ta, j.d1.norm() * t.abs() / ta)
            });
            (t, v)
        })));
    }
    let (verdict, witness) = judge(&levels);
    let last = levels.last().expect("levels");
    Ok(ConditionReport {
        condition: Condition::M1,
        sup_estimate: last.upper,
        best_constants: vec![
            ("a".into(), a),
            ("c1".into(), last.lower.max(0.0)),
            ("c2".into(), last.upper),
        ],
        grid: desc,
        verdict,
        witness,
        excluded: Vec::new(),
    })
}

/// Best constants for the five majorant conditions
/// (i) `|μ̂| ≤ 1 - c h`, (ii) `|t μ̂'| ≤ c h`, (iii) `|μ̂'| ≤ c h'`,
/// (iv) `|t μ̂''| ≤ c h'`, (v) `h ≤ c t h'`.
pub fn check_m2(symbol: &FourierSymbol, h: &MajorantFunction) -> Result<M2Report> {
    let conds = [
        Condition::M2i,
        Condition::M2ii,
        Condition::M2iii,
        Condition::M2iv,
        Condition::M2v,
    ];
    let mut per: Vec<Vec<Level>> = (0..5).map(|_| Vec::new()).collect();
    let mut desc = String::new();
    for l in 0..3 {
        let (grid, d) = level_grid(l);
        desc = d;
        let vals: Vec<Option<[f64; 5]>> = grid
            .iter()
            .map(|&t| {
                let j = symbol.eval(t).ok()?;
                let (ht, hp, ta) = (h.h(t), h.h_prime(t), t.abs());
                Some([
                    deficit(j.value, j.gap) / ht,
                    ta * j.d1.norm() / ht,
                    j.d1.norm() / hp,
                    ta * j.d2.norm() / hp,
                    ht / (ta * hp),
                ])
            })
            .collect();
        for (c, lv) in per.iter_mut().enumerate() {
            lv.push(scan(
                grid.iter()
                    .zip(&vals)
                    .map(|(&t, v)| (t, v.map(|v| (v[c], v[c])))),
            ));
        }
    }
    let mut reports = Vec::new();
    for (c, lv) in per.iter().enumerate() {
        let last = lv.last().expect("level");
        let (verdict, witness, est) = if c == 0 {
            let (v, w) = judge(lv);
            (v, w, last.lower)
        } else {
            // only the upper constant matters
            let mut v = (Verdict::HoldsEmpirically, None);
            for w in lv.windows(2) {
                if w[1].upper > 2.0 * w[0].upper || !w[1].upper.is_finite() {
                    v = (Verdict::Fails, Some(w[1].upper_at));
                    break;
                }
            }
            (v.0, v.1, last.upper)
        };
        reports.push(ConditionReport {
            condition: conds[c],
            sup_estimate: est,
            best_constants: vec![("c".into(), est)],
            grid: desc.clone(),
            verdict,
            witness,
            excluded: Vec::new(),
        });
    }
    let verdict = if reports.iter().all(ConditionReport::holds) {
        Verdict::HoldsEmpirically
    } else if reports.iter().any(|r| r.verdict == Verdict::Fails) {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(M2Report {
        conditions: reports,
        verdict,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RittTrend {
    /// `max_{n ≤ N} n‖μⁿ - μⁿ⁺¹‖₁`.
    pub sup: f64,
    /// `trend[n-1] = n‖μⁿ - μⁿ⁺¹‖₁` for `n = 1..=N`.
    pub trend: Vec<f64>,
    /// Bound on the error of each trend entry from truncation.
    pub truncation_error: Vec<f64>,
}

impl RittTrend {
    /// `max trend[n-1]` over `n ∈ [lo, hi]`.
    pub fn sup_between(&self, lo: usize, hi: usize) -> f64 {
        self.trend[lo.max(1) - 1..hi.min(self.trend.len())]
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

fn diff_norm(p: &SignedMeasure, q: &SignedMeasure) -> f64 {
    p.add_scaled(q, -1.0).total_variation()
}

/// The Ritt trend up to `N`, from successive convolutions with per-step
/// truncation budget `eps/N`.
pub fn ritt_constant(mu: &SignedMeasure, n: usize, eps: f64) -> Result<RittTrend> {
    if n < 2 {
        return Err(domain("N", n as f64, "N >= 2"));
    }
    if !(eps >= 0.0) {
        return Err(domain("eps", eps, "eps >= 0"));
    }
    let step = eps / n as f64;
    let mut cur = truncate_unchecked(mu, step);
    let mut trend = Vec::with_capacity(n);
    let mut err = Vec::with_capacity(n);
    for k in 1..=n {
        let next = truncate_unchecked(&convolve(&cur, mu), step);
        let kf = k as f64;
        trend.push(kf * diff_norm(&cur, &next));
        err.push(kf * (cur.tail_bound() + next.tail_bound()));
        cur = next;
    }
    let sup = trend.iter().copied().fold(0.0, f64::max);
    Ok(RittTrend {
        sup,
        trend,
        truncation_error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{
        closed_form_nu_alpha, lazy_walk_symbol, power_majorant, symbol_from_measure,
    };

    #[test]
    fn shift_trend_is_exact() {
        let r = ritt_constant(&SignedMeasure::dirac(1), 64, 0.0).unwrap();
        for (i, v) in r.trend.iter().enumerate() {
            assert_eq!(*v, 2.0 * (i + 1) as f64);
        }
        let z = ritt_constant(&SignedMeasure::dirac(0), 16, 0.0).unwrap();
        assert!(z.trend.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lazy_walk_conditions() {
        let s = lazy_walk_symbol();
        let m1 = check_m1(&s, 2.0).unwrap();
        assert!(m1.holds());
        assert!(
            (m1.best_constants[1].1 - 4.0).abs() < 1e-9,
            "{:?}",
            m1.best_constants
        );
        let ar = angular_ratio(&s, 1024).unwrap();
        assert!(ar.holds());
        assert!((ar.sup_estimate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shift_fails_everything() {
        let s = symbol_from_measure(&SignedMeasure::dirac(1));
        let ar = angular_ratio(&s, 256).unwrap();
        assert_eq!(ar.verdict, Verdict::Fails);
        assert!(ar.witness.is_some());
        let m1 = check_m1(&s, 1.0).unwrap();
        assert_eq!(m1.verdict, Verdict::Fails);
        assert!(m1.witness.is_some());
        let m2 = check_m2(&s, &power_majorant(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(m2.conditions[0].verdict, Verdict::Fails);
    }

    #[test]
    fn half_fractional_conditions() {
        let s = closed_form_nu_alpha(0.5).unwrap();
        assert!(angular_ratio(&s, 1024).unwrap().holds());
        assert!(check_m1(&s, 0.5).unwrap().holds());
        let m2 = check_m2(&s, &power_majorant(0.5, 1.0).unwrap()).unwrap();
        assert_eq!(m2.verdict, Verdict::HoldsEmpirically, "{m2:#?}");
        assert!((m2.conditions[4].sup_estimate - 2.0).abs() < 1e-12);
    }
}
