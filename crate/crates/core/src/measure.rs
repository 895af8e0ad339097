//! Finitely supported signed measures on ℤ and their action on ℓ¹(ℤ).
//!
//! A measure μ induces the operator `T_μ f(x) = Σ_k μ(k) f(x + k)`, where the
//! underlying shift is the left shift `(T f)(x) = f(x + 1)`. Composition of
//! induced operators is convolution of measures, so `T_μ T_ν = T_{μ*ν}`.
//!
//! Every measure carries a `tail_bound`: an upper bound on the ℓ¹ mass lost
//! to truncation somewhere upstream. Exactly represented measures have a
//! tail bound of zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{domain, Error, Result};
use crate::fft;

/// Widest support (in sites) that dense storage accepts.
const MAX_SPAN: u64 = 1 << 28;

/// A finitely supported signed measure on ℤ.
///
/// Storage is dense over `[offset, offset + len)` with nonzero end points;
/// interior zeros are permitted but never reported as atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMeasure {
    offset: i64,
    weights: Vec<f64>,
    tail_bound: f64,
    label: String,
}

impl SignedMeasure {
    /// Builds a measure from `(offset, weight)` pairs. Zero weights are dropped.
    pub fn from_entries(entries: &[(i64, f64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(k, w) in entries {
            if !w.is_finite() {
                return Err(domain("weight", w, "finite"));
            }
            if map.insert(k, w).is_some() {
                return Err(Error::DuplicateOffset(k));
            }
        }
        let (lo, hi) = match (map.keys().next(), map.keys().next_back()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Ok(Self::zero()),
        };
        let span = (hi as i128 - lo as i128 + 1) as u64;
        if span > MAX_SPAN {
            return Err(Error::SupportTooWide(span));
        }
        let mut weights = vec![0.0; span as usize];
        for (k, w) in map {
            weights[(k - lo) as usize] = w;
        }
        Ok(Self::from_dense(lo, weights, 0.0))
    }

    /// Dense constructor; trims zero ends.
    pub fn from_dense(offset: i64, weights: Vec<f64>, tail_bound: f64) -> Self {
        let mut m = Self {
            offset,
            weights,
            tail_bound: tail_bound.max(0.0),
            label: String::new(),
        };
        m.trim();
        m
    }

    pub fn zero() -> Self {
        Self {
            offset: 0,
            weights: Vec::new(),
            tail_bound: 0.0,
            label: String::new(),
        }
    }

    /// Unit mass at `k`.
    pub fn dirac(k: i64) -> Self {
        Self::from_dense(k, vec![1.0], 0.0).with_label(format!("delta_{k}"))
    }

    /// `δ₀/2 + δ₁/4 + δ₋₁/4`, whose symbol is `1/2 + cos(2πt)/2`.
    pub fn lazy_walk() -> Self {
        Self::from_dense(-1, vec![0.25, 0.5, 0.25], 0.0).with_label("lazy_walk")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_tail_bound(mut self, tail: f64) -> Self {
        self.tail_bound = tail.max(0.0);
        self
    }

    fn trim(&mut self) {
        let first = self.weights.iter().position(|&w| w != 0.0);
        match first {
            None => {
                self.weights.clear();
                self.offset = 0;
            }
            Some(first) => {
                let last = self
                    .weights
                    .iter()
                    .rposition(|&w| w != 0.0)
                    .unwrap_or(first);
                self.weights.truncate(last + 1);
                self.weights.drain(..first);
                self.offset += first as i64;
            }
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Smallest offset of the dense storage (the leftmost atom, if any).
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Dense weights starting at [`offset`](Self::offset).
    pub fn dense(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    /// Inclusive support hull, `None` for the zero measure.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.weights.is_empty() {
            None
        } else {
            Some((self.offset, self.offset + self.weights.len() as i64 - 1))
        }
    }

    /// Weight at `k` (zero off the support).
    pub fn weight(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.weights.get(i as usize).copied().unwrap_or(0.0)
    }

    /// Nonzero atoms in increasing offset order.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(move |(i, &w)| (self.offset + i as i64, w))
    }

    pub fn atom_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }

    /// `Σ_k |μ(k)|`, not including the tail bound.
    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).fold(0.0, |a, b| a + b)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().fold(0.0, |a, b| a + b)
    }

    /// The measure `k ↦ μ(-k)`.
    pub fn reflect(&self) -> Self {
        let mut w = self.weights.clone();
        w.reverse();
        let hi = self.offset + self.weights.len() as i64 - 1;
        Self {
            offset: -hi,
            weights: w,
            tail_bound: self.tail_bound,
            label: self.label.clone(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_dense(
            self.offset,
            self.weights.iter().map(|w| w * c).collect(),
            self.tail_bound * c.abs(),
        )
    }

    /// `self + c·other`, tail bounds combined accordingly.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        if other.is_zero() {
            return self
                .clone()
                .with_tail_bound(self.tail_bound + c.abs() * other.tail_bound);
        }
        if self.is_zero() {
            return other
                .scale(c)
                .with_tail_bound(self.tail_bound + c.abs() * other.tail_bound);
        }
        let lo = self.offset.min(other.offset);
        let hi = (self.offset + self.weights.len() as i64)
            .max(other.offset + other.weights.len() as i64);
        let mut w = vec![0.0; (hi - lo) as usize];
        for (i, &x) in self.weights.iter().enumerate() {
            w[(self.offset - lo) as usize + i] += x;
        }
        for (i, &x) in other.weights.iter().enumerate() {
            w[(other.offset - lo) as usize + i] += c * x;
        }
        Self::from_dense(lo, w, self.tail_bound + c.abs() * other.tail_bound)
    }

    /// Reads the plain-text format: one `offset weight` pair per line, with
    /// an optional `# tail_bound <v>` header comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut tail = 0.0;
        let mut label = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut it = comment.split_whitespace();
                match (it.next(), it.next()) {
                    (Some("tail_bound"), Some(v)) => {
                        tail = v.parse().map_err(|_| Error::Parse {
                            line: i + 1,
                            msg: format!("bad tail_bound `{v}`"),
                        })?;
                        if !(tail >= 0.0) {
                            return Err(Error::Parse {
                                line: i + 1,
                                msg: "tail_bound must be nonnegative".into(),
                            });
                        }
                    }
                    (Some("label"), Some(v)) => label = v.to_string(),
                    _ => {}
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let (k, w) = match (it.next(), it.next(), it.next()) {
                (Some(k), Some(w), None) => (k, w),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("expected `offset weight`, got `{line}`"),
                    })
                }
            };
            let k: i64 = k.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad offset `{k}`"),
            })?;
            let w: f64 = w.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad weight `{w}`"),
            })?;
            entries.push((k, w));
        }
        Ok(Self::from_entries(&entries)?
            .with_tail_bound(tail)
            .with_label(label))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# tail_bound {}\n", self.tail_bound);
        if !self.label.is_empty() && !self.label.contains(char::is_whitespace) {
            let _ = writeln!(out, "# label {}", self.label);
        }
        for (k, w) in self.atoms() {
            let _ = writeln!(out, "{k} {w}");
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// `(μ*ν)(k) = Σ_j μ(j) ν(k - j)`.
///
/// The tail bound propagates as `τ_μ‖ν‖ + τ_ν‖μ‖ + τ_μ τ_ν`.
pub fn convolve(mu: &SignedMeasure, nu: &SignedMeasure) -> SignedMeasure {
    let tail = mu.tail_bound * nu.total_variation()
        + nu.tail_bound * mu.total_variation()
        + mu.tail_bound * nu.tail_bound;
    if mu.is_zero() || nu.is_zero() {
        return SignedMeasure::zero().with_tail_bound(tail);
    }
    let w = fft::convolve(&mu.weights, &nu.weights);
    SignedMeasure::from_dense(mu.offset + nu.offset, w, tail)
}

/// Drops the smallest-|weight| atoms while the dropped ℓ¹ mass stays within
/// `eps`. Among equal magnitudes, larger |offset| goes first (then the
/// positive side). The tail bound grows by exactly the dropped mass.
pub fn truncate(mu: &SignedMeasure, eps: f64) -> Result<SignedMeasure> {
    if !(eps >= 0.0) {
        return Err(domain("eps", eps, "eps >= 0"));
    }
    Ok(truncate_unchecked(mu, eps))
}

pub(crate) fn truncate_unchecked(mu: &SignedMeasure, eps: f64) -> SignedMeasure {
    if eps == 0.0 || mu.is_zero() {
        return mu.clone();
    }
    let mut order: Vec<usize> = (0..mu.weights.len())
        .filter(|&i| mu.weights[i] != 0.0)
        .collect();
    order.sort_by(|&i, &j| {
        let (ki, kj) = (mu.offset + i as i64, mu.offset + j as i64);
        mu.weights[i]
            .abs()
            .total_cmp(&mu.weights[j].abs())
            .then(kj.unsigned_abs().cmp(&ki.unsigned_abs()))
            .then(kj.cmp(&ki))
    });
    let mut dropped = 0.0;
    let mut w = mu.weights.clone();
    for i in order {
        let a = w[i].abs();
        if dropped + a > eps {
            break;
        }
        dropped += a;
        w[i] = 0.0;
    }
    SignedMeasure::from_dense(mu.offset, w, mu.tail_bound + dropped).with_label(mu.label.clone())
}

/// `μ*ⁿ` by repeated squaring, truncating after every product.
///
/// Mass dropped from `μ^{2^k}` reappears up to `⌊n/2^k⌋` times in the
/// result (times `‖μ‖ⁿ` when `‖μ‖ > 1`), so each product gets
/// `eps / (2·steps)` divided by that factor. The discarded mass, propagated
/// to the result, stays below `eps`; inherited tail bounds come on top.
pub fn convolution_power(mu: &SignedMeasure, n: u64, eps: f64) -> Result<SignedMeasure> {
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    if !(eps >= 0.0) {
        return Err(domain("eps", eps, "eps >= 0"));
    }
    let bits = 64 - n.leading_zeros();
    let steps = ((bits - 1) + (n.count_ones() - 1)).max(1);
    let growth = mu.total_variation().max(1.0).powf(n as f64);
    let budget = |amp: u64| {
        if growth.is_finite() {
            eps / (2.0 * steps as f64 * amp as f64 * growth)
        } else {
            0.0
        }
    };

    let mut acc: Option<SignedMeasure> = None;
    let mut base = mu.clone();
    let mut level = 0u32;
    let mut rem = n;
    loop {
        if rem & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => truncate_unchecked(&convolve(&a, &base), budget(1)),
            });
        }
        rem >>= 1;
        if rem == 0 {
            break;
        }
        level += 1;
        base = truncate_unchecked(&convolve(&base, &base), budget(n >> level));
    }
    let label = format!("{}^{n}", mu.label);
    Ok(acc.expect("n >= 1").with_label(label))
}

/// A real sequence on a finite window of ℤ.
///
/// Sites are kept inside `[-w_max, w_max]`; ℓ¹ mass pushed beyond that by an
/// operator is accumulated in `window_tail`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialSequence {
    offset: i64,
    values: Vec<f64>,
    window_tail: f64,
    w_max: i64,
}

impl SpatialSequence {
    pub fn from_dense(offset: i64, values: Vec<f64>, w_max: i64) -> Self {
        let mut s = Self {
            offset,
            values,
            window_tail: 0.0,
            w_max,
        };
        s.window_tail = s.clip();
        s
    }

    pub fn from_entries(entries: &[(i64, f64)], w_max: i64) -> Result<Self> {
        let m = SignedMeasure::from_entries(entries)?;
        Ok(Self::from_dense(m.offset, m.weights, w_max))
    }

    /// Unit mass at `site`.
    pub fn delta(site: i64, w_max: i64) -> Self {
        Self::from_dense(site, vec![1.0], w_max)
    }

    pub fn zeros(w_max: i64) -> Self {
        Self::from_dense(0, Vec::new(), w_max)
    }

    /// Clips to the window and returns the ℓ¹ mass removed.
    fn clip(&mut self) -> f64 {
        let mut lost = 0.0;
        let lo = -self.w_max;
        let hi = self.w_max;
        let end = self.offset + self.values.len() as i64;
        if end - 1 > hi {
            let keep = (hi + 1 - self.offset).max(0) as usize;
            lost += self.values[keep.min(self.values.len())..]
                .iter()
                .map(|v| v.abs())
                .sum::<f64>();
            self.values.truncate(keep);
        }
        if self.offset < lo {
            let cut = ((lo - self.offset) as usize).min(self.values.len());
            lost += self.values[..cut].iter().map(|v| v.abs()).sum::<f64>();
            self.values.drain(..cut);
            self.offset = lo;
        }
        // trim exact zeros at both ends
        let first = self.values.iter().position(|&v| v != 0.0);
        match first {
            None => {
                self.values.clear();
                self.offset = 0;
            }
            Some(f) => {
                let last = self.values.iter().rposition(|&v| v != 0.0).unwrap_or(f);
                self.values.truncate(last + 1);
                self.values.drain(..f);
                self.offset += f as i64;
            }
        }
        lost
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn dense(&self) -> &[f64] {
        &self.values
    }

    pub fn w_max(&self) -> i64 {
        self.w_max
    }

    pub fn window_tail(&self) -> f64 {
        self.window_tail
    }

    pub fn get(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    /// `(site, value)` pairs over the dense range.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.offset + i as i64, v))
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, |a, b| a + b)
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v * v)
            .fold(0.0, |a, b| a + b)
            .sqrt()
    }

    /// `a·self + b·other` on the union of ranges.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        if self.values.is_empty() {
            let mut s = other.clone();
            s.values.iter_mut().for_each(|v| *v *= b);
            s.window_tail = a.abs() * self.window_tail + b.abs() * other.window_tail;
            return s;
        }
        if other.values.is_empty() {
            let mut s = self.clone();
            s.values.iter_mut().for_each(|v| *v *= a);
            s.window_tail = a.abs() * self.window_tail + b.abs() * other.window_tail;
            return s;
        }
        let lo = self.offset.min(other.offset);
        let hi =
            (self.offset + self.values.len() as i64).max(other.offset + other.values.len() as i64);
        let mut v = vec![0.0; (hi - lo) as usize];
        for (i, &x) in self.values.iter().enumerate() {
            v[(self.offset - lo) as usize + i] += a * x;
        }
        for (i, &x) in other.values.iter().enumerate() {
            v[(other.offset - lo) as usize + i] += b * x;
        }
        let mut s = Self::from_dense(lo, v, self.w_max.max(other.w_max));
        s.window_tail += a.abs() * self.window_tail + b.abs() * other.window_tail;
        s
    }

    pub(crate) fn set_window_tail(&mut self, tail: f64) {
        self.window_tail = tail;
    }
}

/// `(T_μ f)(x) = Σ_k μ(k) f(x + k)` on the window of `f`.
///
/// Mass landing outside `[-w_max, w_max]` is added to `window_tail`, and the
/// previous `window_tail` is carried forward scaled by `‖μ‖₁`.
pub fn apply_to_sequence(mu: &SignedMeasure, f: &SpatialSequence) -> SpatialSequence {
    let kernel = mu.reflect();
    let out = fft::convolve(&f.values, &kernel.weights);
    let mut g = SpatialSequence {
        offset: f.offset + kernel.offset,
        values: out,
        window_tail: 0.0,
        w_max: f.w_max,
    };
    if f.values.is_empty() || mu.is_zero() {
        g.values.clear();
        g.offset = 0;
    }
    let lost = g.clip();
    g.window_tail = f.window_tail * mu.total_variation() + lost;
    g
}

/// Applies a fixed measure repeatedly, caching its FFT.
pub(crate) struct SequenceOperator {
    kernel_offset: i64,
    convolver: fft::Convolver,
    norm: f64,
    /// ℓ¹ mass of atoms that can never reach the window from inside it.
    far_mass: f64,
}

impl SequenceOperator {
    /// Prepares `T_μ` for sequences living in `[-w_max, w_max]`. Atoms with
    /// `|k| > 2 w_max` cannot map a window site into the window; their mass
    /// is tracked as a bound instead of being convolved.
    pub(crate) fn new(mu: &SignedMeasure, w_max: i64) -> Self {
        let reach = 2 * w_max;
        let (lo, hi) = mu.support().unwrap_or((0, -1));
        let (lo_c, hi_c) = (lo.max(-reach), hi.min(reach));
        let mut far_mass = 0.0;
        let mut kept = Vec::new();
        let mut kept_offset = 0;
        if lo_c <= hi_c {
            kept_offset = lo_c;
            kept = mu.weights[(lo_c - lo) as usize..=(hi_c - lo) as usize].to_vec();
            far_mass = mu.total_variation() - kept.iter().map(|w| w.abs()).sum::<f64>();
        } else if !mu.is_zero() {
            far_mass = mu.total_variation();
        }
        let clipped = SignedMeasure::from_dense(kept_offset, kept, 0.0).reflect();
        let width = (2 * w_max + 1) as usize;
        Self {
            kernel_offset: clipped.offset,
            convolver: fft::Convolver::new(&clipped.weights, width),
            norm: mu.total_variation(),
            far_mass: far_mass.max(0.0),
        }
    }

    pub(crate) fn apply(&self, f: &SpatialSequence) -> SpatialSequence {
        let out = self.convolver.apply(&f.values);
        let mut g = SpatialSequence {
            offset: f.offset + self.kernel_offset,
            values: out,
            window_tail: 0.0,
            w_max: f.w_max,
        };
        if f.values.is_empty() {
            g.values.clear();
            g.offset = 0;
        }
        let lost = g.clip();
        g.window_tail = f.window_tail * self.norm + lost + self.far_mass * f.l1_norm();
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lazy() -> SignedMeasure {
        SignedMeasure::from_entries(&[(0, 0.5), (1, 0.25), (-1, 0.25)]).unwrap()
    }

    #[test]
    fn construction() {
        let d = SignedMeasure::from_entries(&[(0, 1.0)]).unwrap();
        assert_eq!(d.total_variation(), 1.0);
        assert_eq!(d.tail_bound(), 0.0);
        assert_eq!(lazy().total_variation(), 1.0);
        assert!(matches!(
            SignedMeasure::from_entries(&[(1, 1.0), (1, 2.0)]),
            Err(Error::DuplicateOffset(1))
        ));
        let z = SignedMeasure::from_entries(&[(3, 0.0), (5, 2.0)]).unwrap();
        assert_eq!(z.atoms().collect::<Vec<_>>(), vec![(5, 2.0)]);
    }

    #[test]
    fn total_variation_of_difference() {
        let m = SignedMeasure::from_entries(&[(0, 1.0), (1, -1.0)]).unwrap();
        assert_eq!(m.total_variation(), 2.0);
    }

    #[test]
    fn convolution_examples() {
        let d0 = SignedMeasure::dirac(0);
        let l = lazy();
        assert_eq!(convolve(&d0, &l).dense(), l.dense());
        let d1 = SignedMeasure::dirac(1);
        let d2 = convolve(&d1, &d1);
        assert_eq!(d2.atoms().collect::<Vec<_>>(), vec![(2, 1.0)]);
        let ll = convolve(&l, &l);
        assert_eq!(ll.support(), Some((-2, 2)));
        let expect = [1.0 / 16.0, 0.25, 0.375, 0.25, 1.0 / 16.0];
        for (got, want) in ll.dense().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn tail_propagation() {
        let a = lazy().with_tail_bound(0.1);
        let b = SignedMeasure::dirac(2).with_tail_bound(0.2);
        let c = convolve(&a, &b);
        assert!((c.tail_bound() - (0.1 + 0.2 + 0.02)).abs() < 1e-15);
    }

    #[test]
    fn powers_of_shift_are_exact() {
        let p = convolution_power(&SignedMeasure::dirac(1), 37, 1e-9).unwrap();
        assert_eq!(p.atoms().collect::<Vec<_>>(), vec![(37, 1.0)]);
        assert_eq!(p.tail_bound(), 0.0);
    }

    #[test]
    fn lazy_square_matches_convolve() {
        let l = lazy();
        let p = convolution_power(&l, 2, 0.0).unwrap();
        assert_eq!(p.dense(), convolve(&l, &l).dense());
    }

    #[test]
    fn truncation_examples() {
        let l = lazy();
        assert_eq!(truncate(&l, 0.0).unwrap(), l);
        let m = SignedMeasure::from_entries(&[(0, 0.9), (1, 0.05), (-1, 0.05)]).unwrap();
        let t = truncate(&m, 0.06).unwrap();
        assert_eq!(t.atom_count(), 2);
        // equal magnitudes and equal |offset|: the positive side goes first
        assert_eq!(t.weight(1), 0.0);
        assert_eq!(t.weight(-1), 0.05);
        assert!((t.tail_bound() - 0.05).abs() < 1e-15);
        let far = SignedMeasure::from_entries(&[(0, 0.9), (1, 0.05), (-4, 0.05)]).unwrap();
        assert_eq!(truncate(&far, 0.06).unwrap().weight(-4), 0.0);
        assert!(truncate(&m, -1.0).is_err());
    }

    #[test]
    fn shift_orientation() {
        let f = SpatialSequence::delta(0, 100);
        let g = apply_to_sequence(&SignedMeasure::dirac(1), &f);
        assert_eq!(g.iter().collect::<Vec<_>>(), vec![(-1, 1.0)]);
        let same = apply_to_sequence(&SignedMeasure::dirac(0), &f);
        assert_eq!(same, f);
    }

    #[test]
    fn window_accounting() {
        let f = SpatialSequence::from_entries(&[(-3, 1.0), (3, -2.0)], 3).unwrap();
        let g = apply_to_sequence(&SignedMeasure::dirac(1), &f);
        assert_eq!(g.window_tail(), 1.0);
        assert_eq!(g.get(2), -2.0);
        let op = SequenceOperator::new(&SignedMeasure::dirac(1), 3);
        assert_eq!(op.apply(&f), g);
    }

    #[test]
    fn text_round_trip() {
        let m = SignedMeasure::from_entries(&[(-2, 0.125), (7, -1.0 / 3.0)])
            .unwrap()
            .with_tail_bound(1e-9)
            .with_label("x");
        let back = SignedMeasure::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(SignedMeasure::parse("1 2\n1 3\n").is_err());
        assert!(SignedMeasure::parse("1 2 3\n").is_err());
    }
}
