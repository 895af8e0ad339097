//! Named symbols: `nu_alpha:<α>`, `lazy_walk`, `from_file:<path>`.

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fractional::nu_alpha_measure;
use crate::fullline::{HalfFirstPassage, PowerLaw};
use crate::measure::SignedMeasure;
use crate::symbol::{closed_form_nu_alpha, lazy_walk_symbol, symbol_from_measure, FourierSymbol};

#[derive(Clone, Debug, PartialEq)]
pub enum SymbolKey {
    NuAlpha(f64),
    LazyWalk,
    FromFile(PathBuf),
}

impl FromStr for SymbolKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "lazy_walk" {
            return Ok(Self::LazyWalk);
        }
        if let Some(a) = s.strip_prefix("nu_alpha:") {
            let alpha: f64 = a.parse().map_err(|_| Error::UnknownSymbol(s.to_string()))?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(crate::error::domain("alpha", alpha, "0 < alpha < 1"));
            }
            return Ok(Self::NuAlpha(alpha));
        }
        if let Some(p) = s.strip_prefix("from_file:") {
            if !p.is_empty() {
                return Ok(Self::FromFile(PathBuf::from(p)));
            }
        }
        Err(Error::UnknownSymbol(s.to_string()))
    }
}

impl std::fmt::Display for SymbolKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NuAlpha(a) => write!(f, "nu_alpha:{a}"),
            Self::LazyWalk => write!(f, "lazy_walk"),
            Self::FromFile(p) => write!(f, "from_file:{}", p.display()),
        }
    }
}

impl SymbolKey {
    /// The measure, truncated to `K` atoms where it has infinite support.
    pub fn measure(&self, k: usize) -> Result<SignedMeasure> {
        match self {
            Self::NuAlpha(a) => nu_alpha_measure(*a, k),
            Self::LazyWalk => Ok(SignedMeasure::lazy_walk()),
            Self::FromFile(p) => Ok(SignedMeasure::read(p)?.with_label(self.to_string())),
        }
    }

    /// Closed form where one exists, else the finite sum of the measure.
    pub fn symbol(&self, k: usize) -> Result<FourierSymbol> {
        match self {
            Self::NuAlpha(a) => closed_form_nu_alpha(*a),
            Self::LazyWalk => Ok(lazy_walk_symbol()),
            Self::FromFile(_) => Ok(symbol_from_measure(&self.measure(k)?)),
        }
    }

    /// Exponent `a` in `1 - |μ̂(t)| ≍ |t|^a` assumed by default.
    pub fn default_exponent(&self) -> f64 {
        match self {
            Self::NuAlpha(a) => *a,
            _ => 2.0,
        }
    }

    /// Closed-form convolution powers, when available.
    pub fn power_law(&self) -> Option<Box<dyn PowerLaw>> {
        match self {
            Self::NuAlpha(a) if *a == 0.5 => Some(Box::new(HalfFirstPassage)),
            _ => None,
        }
    }
}

/// Parses a symbol key.
pub fn lookup(key: &str) -> Result<SymbolKey> {
    key.parse()
}
