//! Fourier symbols `μ̂(t) = Σ_k μ(k) e(-kt)` on `(-1/2, 1/2]` with two
//! derivatives, where `e(x) = exp(2πix)`.
//!
//! Symbols come from finite sums over a measure, from closed forms (the
//! lazy walk and the fractional measures `ν_α`), or from the composite
//! `c · μ̂ⁿ (1 - μ̂)^m` built by [`delta_symbol`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::measure::SignedMeasure;

pub type C64 = Complex64;

const TAU: f64 = 2.0 * PI;

/// Default lower cutoff below which composite symbols with a non-integer
/// exponent refuse derivative evaluations.
pub const DEFAULT_T_MIN: f64 = 1.0 / (1u64 << 20) as f64;

/// Value and first two derivatives of a symbol at one point, plus `1 - value`
/// computed without cancellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: C64,
    pub d1: C64,
    pub d2: C64,
    pub gap: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolModel {
    FiniteSum,
    NuAlpha,
    LazyWalk,
    Composite,
}

/// Reduces `t` to `(-1/2, 1/2]`.
pub fn wrap(t: f64) -> f64 {
    let r = t - t.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// `1 - e(-x)` without cancellation near `x = 0`.
fn one_minus_e_neg(x: f64) -> C64 {
    let s = (PI * x).sin();
    C64::new(2.0 * s * s, (TAU * x).sin())
}

#[derive(Clone, Debug)]
enum Model {
    FiniteSum { atoms: Vec<(f64, f64)>, mass: f64 },
    NuAlpha { alpha: f64 },
    LazyWalk,
    Composite(Box<DeltaSymbol>),
}

/// A symbol evaluator on `(-1/2, 1/2]`; arguments outside are wrapped.
#[derive(Clone, Debug)]
pub struct FourierSymbol {
    model: Model,
    label: String,
}

#[derive(Clone, Debug)]
struct DeltaSymbol {
    base: FourierSymbol,
    n: u32,
    m: f64,
    prefactor: f64,
    t_min: f64,
}

/// Exact finite-sum symbol of a measure.
pub fn symbol_from_measure(mu: &SignedMeasure) -> FourierSymbol {
    FourierSymbol {
        model: Model::FiniteSum {
            atoms: mu.atoms().map(|(k, w)| (k as f64, w)).collect(),
            mass: mu.total_mass(),
        },
        label: if mu.label().is_empty() {
            "finite-sum".into()
        } else {
            mu.label().to_string()
        },
    }
}

/// Closed form `ν̂_α(t) = 1 - (1 - e(-t))^α` (principal branch).
pub fn closed_form_nu_alpha(alpha: f64) -> Result<FourierSymbol> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain("alpha", alpha, "0 < alpha < 1"));
    }
    Ok(FourierSymbol {
        model: Model::NuAlpha { alpha },
        label: format!("nu_alpha:{alpha}"),
    })
}

/// Closed form `1/2 + cos(2πt)/2`.
pub fn lazy_walk_symbol() -> FourierSymbol {
    FourierSymbol {
        model: Model::LazyWalk,
        label: "lazy_walk".into(),
    }
}

/// `prefactor · μ̂ⁿ (1 - μ̂)^m` with derivatives from the product and chain
/// rules.
///
/// For non-integer `m` the derivatives blow up at `t = 0`; evaluations with
/// `|t| < t_min` are then refused with [`Error::Singular`].
pub fn delta_symbol(base: &FourierSymbol, n: u32, m: f64, prefactor: f64) -> Result<FourierSymbol> {
    delta_symbol_with_cutoff(base, n, m, prefactor, DEFAULT_T_MIN)
}

pub fn delta_symbol_with_cutoff(
    base: &FourierSymbol,
    n: u32,
    m: f64,
    prefactor: f64,
    t_min: f64,
) -> Result<FourierSymbol> {
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(domain("m", m, "m >= 0"));
    }
    Ok(FourierSymbol {
        label: format!("{}^{n}(1-.)^{m}", base.label),
        model: Model::Composite(Box::new(DeltaSymbol {
            base: base.clone(),
            n,
            m,
            prefactor,
            t_min,
        })),
    })
}

pub(crate) fn is_integer(x: f64) -> bool {
    x.fract() == 0.0
}

/// `w^p`, with integer exponents handled exactly (including `0^0 = 1`).
pub(crate) fn cpow(w: C64, p: f64) -> C64 {
    if is_integer(p) && p.abs() < 64.0 {
        w.powi(p as i32)
    } else {
        w.powf(p)
    }
}

impl FourierSymbol {
    pub fn model(&self) -> SymbolModel {
        match self.model {
            Model::FiniteSum { .. } => SymbolModel::FiniteSum,
            Model::NuAlpha { .. } => SymbolModel::NuAlpha,
            Model::LazyWalk => SymbolModel::LazyWalk,
            Model::Composite(_) => SymbolModel::Composite,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Whether derivatives exist at `t = 0`.
    pub fn smooth_at_zero(&self) -> bool {
        match &self.model {
            Model::FiniteSum { .. } | Model::LazyWalk => true,
            Model::NuAlpha { .. } => false,
            Model::Composite(d) => d.base.smooth_at_zero() && is_integer(d.m),
        }
    }

    /// Value only; defined everywhere, including `t = 0`.
    pub fn value(&self, t: f64) -> C64 {
        let t = wrap(t);
        match &self.model {
            Model::FiniteSum { atoms, .. } => atoms
                .iter()
                .map(|&(k, w)| w * C64::from_polar(1.0, -TAU * k * t))
                .sum(),
            Model::NuAlpha { alpha } => {
                let z = one_minus_e_neg(t);
                C64::new(1.0, 0.0) - cpow(z, *alpha)
            }
            Model::LazyWalk => C64::new(0.5 + 0.5 * (TAU * t).cos(), 0.0),
            Model::Composite(d) => {
                let u = d.base.value(t);
                let w = d.base.gap(t);
                d.prefactor * u.powi(d.n as i32) * cpow(w, d.m)
            }
        }
    }

    /// `1 - value(t)` computed directly where the model allows it.
    pub fn gap(&self, t: f64) -> C64 {
        let t = wrap(t);
        match &self.model {
            Model::FiniteSum { atoms, mass } => {
                let s: C64 = atoms.iter().map(|&(k, w)| w * one_minus_e_neg(k * t)).sum();
                s + (1.0 - mass)
            }
            Model::NuAlpha { alpha } => cpow(one_minus_e_neg(t), *alpha),
            Model::LazyWalk => {
                let s = (PI * t).sin();
                C64::new(s * s, 0.0)
            }
            Model::Composite(_) => C64::new(1.0, 0.0) - self.value(t),
        }
    }

    /// Value and two derivatives at `t`.
    pub fn eval(&self, t: f64) -> Result<Jet> {
        let t = wrap(t);
        match &self.model {
            Model::FiniteSum { atoms, .. } => {
                let mut v = C64::new(0.0, 0.0);
                let mut d1 = v;
                let mut d2 = v;
                for &(k, w) in atoms {
                    let e = w * C64::from_polar(1.0, -TAU * k * t);
                    let f = C64::new(0.0, -TAU * k);
                    v += e;
                    d1 += f * e;
                    d2 += f * f * e;
                }
                Ok(Jet {
                    value: v,
                    d1,
                    d2,
                    gap: self.gap(t),
                })
            }
            Model::NuAlpha { alpha } => {
                if t == 0.0 {
                    return Err(Error::Singular {
                        t,
                        reason: "derivatives of (1 - e(-t))^alpha diverge at 0",
                    });
                }
                let a = *alpha;
                let z = one_minus_e_neg(t);
                let e = C64::from_polar(1.0, -TAU * t);
                let z1 = C64::new(0.0, TAU) * e;
                let z2 = C64::new(TAU * TAU, 0.0) * e;
                let za = cpow(z, a);
                let za1 = za / z;
                let za2 = za1 / z;
                Ok(Jet {
                    value: C64::new(1.0, 0.0) - za,
                    d1: -a * za1 * z1,
                    d2: -a * ((a - 1.0) * za2 * z1 * z1 + za1 * z2),
                    gap: za,
                })
            }
            Model::LazyWalk => {
                let s = (PI * t).sin();
                Ok(Jet {
                    value: C64::new(0.5 + 0.5 * (TAU * t).cos(), 0.0),
                    d1: C64::new(-PI * (TAU * t).sin(), 0.0),
                    d2: C64::new(-TAU * PI * (TAU * t).cos(), 0.0),
                    gap: C64::new(s * s, 0.0),
                })
            }
            Model::Composite(d) => d.eval(t),
        }
    }

    /// Value of the symbol on a uniform grid.
    pub fn values_on(&self, grid: &[f64]) -> Vec<C64> {
        grid.iter().map(|&t| self.value(t)).collect()
    }
}

impl DeltaSymbol {
    fn eval(&self, t: f64) -> Result<Jet> {
        let m = self.m;
        if !is_integer(m) && t.abs() < self.t_min {
            return Err(Error::Singular {
                t,
                reason: "non-integer power of 1 - symbol below the cutoff t_min",
            });
        }
        let b = self.base.eval(t)?;
        let (u, u1, u2, w) = (b.value, b.d1, b.d2, b.gap);
        let n = self.n as f64;
        let pw = |k: f64| {
            if k < 0.0 {
                C64::new(0.0, 0.0)
            } else {
                u.powi(k as i32)
            }
        };
        let un = pw(n);
        let un1 = pw(n - 1.0);
        let un2 = pw(n - 2.0);
        let wm = cpow(w, m);
        let term = |coef: f64, f: &dyn Fn() -> C64| {
            if coef == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                coef * f()
            }
        };

        let value = un * wm;
        let d1 = term(n, &|| un1 * u1 * wm) - term(m, &|| un * u1 * cpow(w, m - 1.0));
        let d2 = term(n * (n - 1.0), &|| un2 * u1 * u1 * wm) + term(n, &|| un1 * u2 * wm)
            - term(2.0 * n * m, &|| un1 * u1 * u1 * cpow(w, m - 1.0))
            + term(m * (m - 1.0), &|| un * cpow(w, m - 2.0) * u1 * u1)
            - term(m, &|| un * cpow(w, m - 1.0) * u2);
        let c = self.prefactor;
        Ok(Jet {
            value: c * value,
            d1: c * d1,
            d2: c * d2,
            gap: C64::new(1.0, 0.0) - c * value,
        })
    }
}

/// Uniform grid of `size` points on `(-1/2, 1/2)` offset by half a step, so
/// that `t = 0` is never a node for even `size`.
pub fn half_step_grid(size: usize) -> Vec<f64> {
    (0..size)
        .map(|j| -0.5 + (j as f64 + 0.5) / size as f64)
        .collect()
}

/// An even majorant `h` with `h(0) = 0`, stored on `[0, 1/2]`.
#[derive(Clone)]
pub enum MajorantFunction {
    /// `h(t) = c |t|^a`.
    Power { a: f64, c: f64 },
    /// User-supplied closed form.
    Custom {
        name: String,
        h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        h_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for MajorantFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { a, c } => write!(f, "Power {{ a: {a}, c: {c} }}"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

pub fn power_majorant(a: f64, c: f64) -> Result<MajorantFunction> {
    if !(a > 0.0 && a <= 2.0) {
        return Err(domain("a", a, "0 < a <= 2"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(domain("c", c, "c > 0"));
    }
    Ok(MajorantFunction::Power { a, c })
}

impl MajorantFunction {
    pub fn h(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            Self::Power { a, c } => {
                if t == 0.0 {
                    0.0
                } else {
                    c * t.powf(*a)
                }
            }
            Self::Custom { h, .. } => h(t),
        }
    }

    /// `h'(t)` for `t > 0`.
    pub fn h_prime(&self, t: f64) -> f64 {
        match self {
            Self::Power { a, c } => c * a * t.abs().powf(a - 1.0),
            Self::Custom { h_prime, .. } => h_prime(t.abs()),
        }
    }

    /// Exponent of a power majorant.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Self::Power { a, .. } => Some(*a),
            Self::Custom { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn dirac_symbol_is_constant() {
        let s = symbol_from_measure(&SignedMeasure::dirac(0));
        for t in [-0.4, 0.0, 0.1, 0.5] {
            let j = s.eval(t).unwrap();
            assert_eq!(j.value, C64::new(1.0, 0.0));
            assert_eq!(j.d1, C64::new(0.0, 0.0));
            assert_eq!(j.d2, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn lazy_walk_finite_sum_matches_closed_form() {
        let s = symbol_from_measure(&SignedMeasure::lazy_walk());
        let c = lazy_walk_symbol();
        for t in half_step_grid(512) {
            let a = s.eval(t).unwrap();
            let b = c.eval(t).unwrap();
            assert!(close(
                a.value,
                C64::new(0.5 + 0.5 * (TAU * t).cos(), 0.0),
                1e-12
            ));
            assert!(close(a.d1, b.d1, 1e-12));
            assert!(close(a.d2, b.d2, 1e-11));
            assert!(close(a.gap, b.gap, 1e-15));
        }
    }

    #[test]
    fn nu_alpha_values() {
        let s = closed_form_nu_alpha(0.5).unwrap();
        assert_eq!(s.value(0.0), C64::new(1.0, 0.0));
        // e(-t) convention: the value at t = -1/4 is 1 - (1 - i)^{1/2}
        let i = C64::new(0.0, 1.0);
        let want = C64::new(1.0, 0.0) - (C64::new(1.0, 0.0) - i).sqrt();
        assert!(close(s.value(-0.25), want, 1e-14));
        assert!(close(s.value(0.25), want.conj(), 1e-14));
        assert!(matches!(s.eval(0.0), Err(Error::Singular { .. })));
        assert!(closed_form_nu_alpha(1.0).is_err());
    }

    #[test]
    fn delta_symbol_identity_and_shift() {
        let base = lazy_walk_symbol();
        let same = delta_symbol(&base, 1, 0.0, 1.0).unwrap();
        for t in [0.0, 0.13, -0.37] {
            let a = same.eval(t).unwrap();
            let b = base.eval(t).unwrap();
            assert!(close(a.value, b.value, 1e-15));
            assert!(close(a.d1, b.d1, 1e-15));
            assert!(close(a.d2, b.d2, 1e-15));
        }
        let shift = symbol_from_measure(&SignedMeasure::dirac(1));
        let d = delta_symbol(&shift, 2, 1.0, 1.0).unwrap();
        for t in [0.0, 0.2, -0.45] {
            let e = |x: f64| C64::from_polar(1.0, -TAU * x);
            let k = C64::new(0.0, -TAU);
            // e(-2t) - e(-3t) and its derivatives
            let v = e(2.0 * t) - e(3.0 * t);
            let v1 = 2.0 * k * e(2.0 * t) - 3.0 * k * e(3.0 * t);
            let v2 = 4.0 * k * k * e(2.0 * t) - 9.0 * k * k * e(3.0 * t);
            let j = d.eval(t).unwrap();
            assert!(close(j.value, v, 1e-14));
            assert!(close(j.d1, v1, 1e-12));
            assert!(close(j.d2, v2, 1e-10));
        }
    }

    #[test]
    fn fractional_exponent_refuses_below_cutoff() {
        let d = delta_symbol(&lazy_walk_symbol(), 3, 0.5, 1.0).unwrap();
        assert!(matches!(d.eval(1e-9), Err(Error::Singular { .. })));
        assert!(d.eval(1e-3).is_ok());
        assert!(!d.smooth_at_zero());
    }

    #[test]
    fn power_majorant_examples() {
        let h = power_majorant(2.0, 4.0).unwrap();
        assert_eq!(h.h(0.5), 1.0);
        let h = power_majorant(0.5, 1.0).unwrap();
        assert_eq!(h.h(0.25), 0.5);
        for (a, c) in [(0.3, 1.0), (2.0, 7.0)] {
            assert_eq!(power_majorant(a, c).unwrap().h(0.0), 0.0);
        }
        assert!(power_majorant(2.5, 1.0).is_err());
    }

    #[test]
    fn wrap_into_half_open_interval() {
        assert_eq!(wrap(1.0), 0.0);
        assert_eq!(wrap(-0.5), 0.5);
        assert!((wrap(0.75) + 0.25).abs() < 1e-15);
    }
}
