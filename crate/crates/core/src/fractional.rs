//! Fractional differences `(I - T_μ)^m` and trajectories `T_μⁿ (I - T_μ)^m f`.
//!
//! The binomial series `(1 - x)^α = 1 - Σ_{k≥1} g(α,k) xᵏ` has nonnegative
//! coefficients summing to one, so `ν_α(k) = g(α,k)` is a probability measure
//! and `(I - T)^α = I - T_{ν_α}`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::measure::{
    convolve, truncate_unchecked, SequenceOperator, SignedMeasure, SpatialSequence,
};

/// Cap on the number of series terms used for a fractional exponent when
/// the requested budget would need more.
pub const DEFAULT_SERIES_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FracCoefficients {
    pub alpha: f64,
    /// `values[k-1] = g(α, k)`.
    pub values: Vec<f64>,
    pub k: usize,
    /// `1 - Σ_{k≤K} g(α,k)`.
    pub tail: f64,
}

impl FracCoefficients {
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 || k > self.k {
            0.0
        } else {
            self.values[k - 1]
        }
    }
}

/// `Σ_{k>K} g(α,k) = Π_{j=1}^{K} (1 - α/j)`.
///
/// This is the coefficient of `x^K` in `(1-x)^{α-1}`, i.e. the partial sums
/// of the series for `(1-x)^α` at `x = 1`, and is free of cancellation.
pub fn frac_tail(alpha: f64, k: usize) -> f64 {
    let mut t = 1.0;
    for j in 1..=k {
        t *= 1.0 - alpha / j as f64;
    }
    t
}

/// Coefficients `g(α,1..=K)` by the recursion `g(k+1) = g(k)(k-α)/(k+1)`.
pub fn frac_coeff(alpha: f64, k: usize) -> Result<FracCoefficients> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain("alpha", alpha, "0 < alpha < 1"));
    }
    if k == 0 {
        return Err(domain("K", 0.0, "K >= 1"));
    }
    let mut values = Vec::with_capacity(k);
    let mut g = alpha;
    let mut tail = 1.0;
    for j in 1..=k {
        values.push(g);
        tail *= 1.0 - alpha / j as f64;
        g *= (j as f64 - alpha) / (j as f64 + 1.0);
    }
    Ok(FracCoefficients {
        alpha,
        values,
        k,
        tail,
    })
}

/// `ν_α` truncated to `{1..K}`, with the neglected mass as tail bound.
pub fn nu_alpha_measure(alpha: f64, k: usize) -> Result<SignedMeasure> {
    let c = frac_coeff(alpha, k)?;
    Ok(SignedMeasure::from_dense(1, c.values, c.tail).with_label(format!("nu_alpha:{alpha}")))
}

/// Smallest `K ≤ cap` with series tail at most `budget` (or `cap`).
fn series_length(beta: f64, budget: f64, cap: usize) -> usize {
    let mut tail = 1.0;
    for j in 1..=cap {
        tail *= 1.0 - beta / j as f64;
        if tail <= budget {
            return j;
        }
    }
    cap
}

/// Measure of `(I - T_μ)^m = (δ₀ - μ)^{*p} * (δ₀ - Σ_{k≤K} g(β,k) μ^{*k})`
/// with `p = ⌊m⌋`, `β = m - p`.
///
/// `k` caps the number of series terms; fewer are used once the series tail
/// drops below `eps/2`. The neglected series mass, the truncation losses and
/// any tail inherited from `μ` are collected in the tail bound.
pub fn difference_measure(mu: &SignedMeasure, m: f64, k: usize, eps: f64) -> Result<SignedMeasure> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(domain("m", m, "m > 0"));
    }
    if !(eps >= 0.0) {
        return Err(domain("eps", eps, "eps >= 0"));
    }
    let p = m.floor();
    let beta = m - p;
    let p = p as u64;
    let norm = mu.total_variation().max(1.0);
    let one_minus = SignedMeasure::dirac(0).add_scaled(mu, -1.0);

    let mut out = SignedMeasure::dirac(0);
    let integer_budget = if beta > 0.0 { eps / 4.0 } else { eps };
    for _ in 0..p {
        let step = integer_budget / (p as f64 * (1.0 + norm).powf(p as f64));
        out = truncate_unchecked(&convolve(&out, &one_minus), step);
    }

    if beta > 0.0 {
        let k = if eps > 0.0 {
            series_length(beta, eps / 2.0, k.max(1))
        } else {
            k.max(1)
        };
        let coeffs = frac_coeff(beta, k)?;
        let step = eps / 4.0 / (k as f64 * norm.powf(k as f64));
        let mut series = SignedMeasure::dirac(0);
        let mut power = SignedMeasure::dirac(0);
        for j in 1..=k {
            power = truncate_unchecked(&convolve(&power, mu), step);
            series = series.add_scaled(&power, -coeffs.get(j));
        }
        // Σ_{j>K} g(β,j) ‖μ‖^j ≤ tail when ‖μ‖ ≤ 1.
        let series_tail = if mu.total_variation() <= 1.0 {
            coeffs.tail
        } else {
            f64::INFINITY
        };
        let tb = series.tail_bound() + series_tail;
        series = series.with_tail_bound(tb);
        out = convolve(&out, &series);
    }
    let label = format!("(I-{})^{m}", mu.label());
    Ok(out.with_label(label))
}

/// `terms[n] = T_μⁿ (I - T_μ)^m f` for `n = 0..=N` on the window of `f`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub mu: SignedMeasure,
    pub m: f64,
    pub f0: SpatialSequence,
    terms: Vec<SpatialSequence>,
    error_budget: Vec<f64>,
}

/// Iterates `T_μ` from `(I - T_μ)^m f`.
///
/// The window is that of `f`. `eps` is the truncation budget of the
/// difference measure for fractional `m`; mass leaving the window and the
/// tail bounds of `μ` and of the difference measure enter `error_budget`.
/// Rounding errors are not included.
pub fn trajectory(
    mu: &SignedMeasure,
    m: f64,
    f: &SpatialSequence,
    n: usize,
    eps: f64,
) -> Result<Trajectory> {
    trajectory_with_cap(mu, m, f, n, eps, DEFAULT_SERIES_CAP)
}

pub fn trajectory_with_cap(
    mu: &SignedMeasure,
    m: f64,
    f: &SpatialSequence,
    n: usize,
    eps: f64,
    series_cap: usize,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(domain("N", 0.0, "N >= 1"));
    }
    if !(m >= 0.0) || !m.is_finite() {
        return Err(domain("m", m, "m >= 0"));
    }
    let w = f.w_max();
    let start = if m == 0.0 {
        f.clone()
    } else {
        let d = difference_measure(mu, m, series_cap, eps)?;
        let op = SequenceOperator::new(&d, w);
        let mut s = op.apply(f);
        let wt = s.window_tail() + d.tail_bound() * f.l1_norm();
        s.set_window_tail(wt);
        s
    };
    let op = SequenceOperator::new(mu, w);
    let norm = mu.total_variation();
    let mut terms = Vec::with_capacity(n + 1);
    let mut budget = Vec::with_capacity(n + 1);
    budget.push(start.window_tail());
    terms.push(start);
    let mut trunc = 0.0;
    for i in 1..=n {
        let prev = &terms[i - 1];
        trunc = trunc * norm + mu.tail_bound() * prev.l1_norm();
        let next = op.apply(prev);
        budget.push(next.window_tail() + trunc);
        terms.push(next);
    }
    Ok(Trajectory {
        mu: mu.clone(),
        m,
        f0: f.clone(),
        terms,
        error_budget: budget,
    })
}

impl Trajectory {
    /// Largest `n` computed.
    pub fn len(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.terms.len() <= 1
    }

    /// `terms()[n]` for `n = 0..=N`; index 0 is `(I - T_μ)^m f`.
    pub fn terms(&self) -> &[SpatialSequence] {
        &self.terms
    }

    pub fn term(&self, n: usize) -> &SpatialSequence {
        &self.terms[n]
    }

    pub fn error_budget(&self) -> &[f64] {
        &self.error_budget
    }

    pub fn w_max(&self) -> i64 {
        self.f0.w_max()
    }

    /// Smallest and largest site touched by any term.
    pub fn site_range(&self) -> Option<(i64, i64)> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for t in &self.terms {
            if !t.dense().is_empty() {
                lo = lo.min(t.offset());
                hi = hi.max(t.offset() + t.dense().len() as i64 - 1);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Writes `n,site,value` rows for `n ≥ 1`, skipping exact zeros.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,site,value")?;
        for (n, t) in self.terms.iter().enumerate().skip(1) {
            for (x, v) in t.iter() {
                if v != 0.0 {
                    writeln!(out, "{n},{x},{v:e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_coefficients() {
        let c = frac_coeff(0.5, 3).unwrap();
        assert_eq!(c.values, vec![0.5, 0.125, 0.0625]);
        assert!(frac_coeff(1.0, 3).is_err());
        assert!(frac_coeff(0.0, 3).is_err());
    }

    #[test]
    fn tail_identity() {
        let c = frac_coeff(0.3, 200).unwrap();
        let partial: f64 = c.values.iter().sum();
        assert!((1.0 - partial - c.tail).abs() < 1e-13);
        assert!((c.tail - frac_tail(0.3, 200)).abs() < 1e-15);
    }

    #[test]
    fn integer_differences() {
        let mu = SignedMeasure::dirac(1);
        let d = difference_measure(&mu, 1.0, 10, 0.0).unwrap();
        assert_eq!(d.atoms().collect::<Vec<_>>(), vec![(0, 1.0), (1, -1.0)]);
        let d = difference_measure(&mu, 2.0, 10, 0.0).unwrap();
        assert_eq!(
            d.atoms().collect::<Vec<_>>(),
            vec![(0, 1.0), (1, -2.0), (2, 1.0)]
        );
    }

    #[test]
    fn half_difference_of_shift() {
        let mu = SignedMeasure::dirac(1);
        let d = difference_measure(&mu, 0.5, 64, 0.0).unwrap();
        let c = frac_coeff(0.5, 64).unwrap();
        assert_eq!(d.weight(0), 1.0);
        for k in 1..=64 {
            assert!((d.weight(k) + c.get(k as usize)).abs() < 1e-16);
        }
        assert!((d.tail_bound() - c.tail).abs() < 1e-15);
    }

    #[test]
    fn pure_shift_trajectory() {
        let f = SpatialSequence::delta(0, 64);
        let t = trajectory(&SignedMeasure::dirac(1), 0.0, &f, 10, 0.0).unwrap();
        for n in 1..=10 {
            assert_eq!(
                t.term(n).iter().collect::<Vec<_>>(),
                vec![(-(n as i64), 1.0)]
            );
        }
    }

    #[test]
    fn identity_annihilates() {
        let f = SpatialSequence::delta(0, 16);
        let t = trajectory(&SignedMeasure::dirac(0), 1.0, &f, 5, 0.0).unwrap();
        assert!(t.terms().iter().all(|s| s.l1_norm() == 0.0));
    }

    #[test]
    fn csv_export() {
        let f = SpatialSequence::delta(0, 16);
        let t = trajectory(&SignedMeasure::dirac(1), 0.0, &f, 2, 0.0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,site,value\n1,-1,1e0\n2,-2,1e0\n"
        );
    }
}
