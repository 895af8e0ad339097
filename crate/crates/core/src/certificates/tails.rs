//! Bounds near `t = 0`: sums of monomials `Σ c t^e`, moment bounds for
//! `Σ n^p xⁿ`, and geometric tails of truncated inner sums.

use serde::Serialize;
use statrs::function::gamma::gamma;

/// `Σ_j c_j t^{e_j}` with `c_j > 0` (possibly infinite).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Monomials(pub Vec<(f64, f64)>);

impl Monomials {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn term(c: f64, e: f64) -> Self {
        let mut m = Self::zero();
        m.push(c, e);
        m
    }

    /// Adds `c t^e`; zero coefficients are dropped, so `0 · ∞` never arises.
    pub fn push(&mut self, c: f64, e: f64) {
        if c != 0.0 {
            self.0.push((c, e));
        }
    }

    pub fn add(&mut self, other: &Self) {
        for &(c, e) in &other.0 {
            self.push(c, e);
        }
    }

    /// Product with `c t^e`.
    pub fn times(&self, c: f64, e: f64) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        Self(self.0.iter().map(|&(a, b)| (a * c, b + e)).collect())
    }

    /// `(Σ c t^e)^{1/s} ≤ Σ c^{1/s} t^{e/s}` for `s ≥ 1`.
    pub fn root(&self, s: f64) -> Self {
        Self(
            self.0
                .iter()
                .map(|&(c, e)| (c.powf(1.0 / s), e / s))
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().map(|&(c, e)| c * t.powf(e)).sum()
    }

    /// `∫_0^T Σ c t^e dt`; infinite unless every exponent exceeds `-1`.
    pub fn integral(&self, t_max: f64) -> f64 {
        self.0
            .iter()
            .map(|&(c, e)| {
                if e > -1.0 {
                    c * t_max.powf(e + 1.0) / (e + 1.0)
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    }

    /// `∫_0^T ln(1/t) Σ c t^e dt` for `T < 1`.
    pub fn log_integral(&self, t_max: f64) -> f64 {
        self.0
            .iter()
            .map(|&(c, e)| {
                if e > -1.0 {
                    let q = e + 1.0;
                    c * t_max.powf(q) * ((1.0 / t_max).ln() / q + 1.0 / (q * q))
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    }

    /// Smallest exponent, or `+∞` for the zero bound.
    pub fn leading_exponent(&self) -> f64 {
        self.0.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }
}

/// Bound `Σ_{n≥1} n^p e^{-λn} ≤ Σ_j K_j λ^{-e_j}` as pairs `(K_j, e_j)`.
///
/// `gamma` is the exponent used for the logarithmic case `p = -1`, where
/// `ln(1 + 1/λ) ≤ λ^{-γ}/γ`.
pub fn moment_bound(p: f64, gamma_log: f64) -> Vec<(f64, f64)> {
    if p > -1.0 {
        let mut v = vec![(gamma(p + 1.0), p + 1.0)];
        if p > 0.0 {
            // maximum of u^p e^{-λu}
            v.push(((p / std::f64::consts::E).powf(p), p));
        }
        v
    } else if p == -1.0 {
        vec![(1.0 / gamma_log, gamma_log)]
    } else {
        vec![(1.0 + 1.0 / (-p - 1.0), 0.0)]
    }
}

/// [`moment_bound`] with `λ ≥ lam_c · t^a`, as monomials in `t`.
pub fn moment_monomials(p: f64, gamma_log: f64, lam_c: f64, a: f64) -> Monomials {
    let mut m = Monomials::zero();
    for (k, e) in moment_bound(p, gamma_log) {
        m.push(k * lam_c.powf(-e), -a * e);
    }
    m
}

/// `Σ_{n>N} n^p ρⁿ`, bounded by a geometric series once consecutive terms
/// shrink by a fixed ratio; infinite otherwise.
pub fn tail_sum(p: f64, rho: f64, n: usize) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let q = ((nf + 2.0) / (nf + 1.0)).powf(p.max(0.0)) * rho;
    if q >= 1.0 {
        return f64::INFINITY;
    }
    (nf + 1.0).powf(p) * rho.powf(nf + 1.0) / (1.0 - q)
}

/// `coef · x`, treating a zero coefficient as absorbing.
#[inline]
pub(crate) fn safe_mul(coef: f64, x: f64) -> f64 {
    if coef == 0.0 || x == 0.0 {
        0.0
    } else {
        coef * x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(p: f64, lam: f64) -> f64 {
        (1..2_000_000)
            .map(|n| (n as f64).powf(p) * (-lam * n as f64).exp())
            .sum()
    }

    #[test]
    fn moment_bounds_dominate() {
        for p in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 4.0] {
            for lam in [1e-3f64, 0.1, 2.0] {
                let b: f64 = moment_bound(p, 0.5)
                    .iter()
                    .map(|&(k, e)| k * lam.powf(-e))
                    .sum();
                assert!(brute(p, lam) <= b * (1.0 + 1e-12), "p={p} lam={lam}");
            }
        }
    }

    #[test]
    fn tail_sum_dominates() {
        for (p, rho, n) in [(1.0, 0.99f64, 500usize), (3.0, 0.9, 100), (-0.5, 0.5, 3)] {
            let exact: f64 = (n + 1..200_000)
                .map(|k| (k as f64).powf(p) * rho.powi(k as i32))
                .sum();
            let b = tail_sum(p, rho, n);
            assert!(exact <= b && b < 10.0 * exact + 1e-300);
        }
        assert!(tail_sum(2.0, 0.99, 10).is_infinite());
    }

    #[test]
    fn monomial_integrals() {
        let m = Monomials::term(2.0, -0.5);
        assert!((m.integral(0.25) - 2.0).abs() < 1e-15);
        assert!(Monomials::term(1.0, -1.0).integral(0.1).is_infinite());
        // ∫_0^1 ln(1/t) dt = 1
        assert!((Monomials::term(1.0, 0.0).log_integral(1.0) - 1.0).abs() < 1e-15);
        assert!(Monomials::zero().integral(1.0) == 0.0);
    }
}
