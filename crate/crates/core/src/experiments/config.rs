use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::BlockMode;
use crate::registry::SymbolKey;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    MainTheorem,
    OpenQuestion,
    CorollarySup,
    Variation,
    Longvar,
    LpSquare,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 6] = [
        Self::MainTheorem,
        Self::OpenQuestion,
        Self::CorollarySup,
        Self::Variation,
        Self::Longvar,
        Self::LpSquare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MainTheorem => "main-theorem",
            Self::OpenQuestion => "open-question",
            Self::CorollarySup => "corollary-sup",
            Self::Variation => "variation",
            Self::Longvar => "longvar",
            Self::LpSquare => "lp-square",
        }
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown probe `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Full-line sampler when the symbol has closed-form powers, the
    /// windowed trajectory otherwise.
    #[default]
    Auto,
    Window,
    FullLine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureSpec {
    pub symbol: String,
    /// Truncation of infinitely supported measures.
    pub k: usize,
    /// Truncation budget of difference measures and convolution powers.
    pub eps: f64,
}

impl Default for MeasureSpec {
    fn default() -> Self {
        Self {
            symbol: "nu_alpha:0.5".into(),
            k: 4096,
            eps: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySpec {
    /// Order of the difference; the probe's default when absent.
    pub m: Option<f64>,
    /// Truncation levels `N`.
    pub levels: Vec<usize>,
    /// Half-width of the window; sized from the measure when absent.
    pub w_max: Option<i64>,
    /// Include `f = δ₀`.
    pub delta: bool,
    /// Number of seeded random `f`, each ℓ¹-normalized.
    pub random_count: usize,
    /// Random `f` live on `[-random_radius, random_radius]`.
    pub random_radius: i64,
    pub engine: Engine,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            m: None,
            levels: vec![256, 512, 1024, 2048, 4096],
            w_max: None,
            delta: true,
            random_count: 20,
            random_radius: 8,
            engine: Engine::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunctionalSpec {
    pub alpha: f64,
    pub s: f64,
    pub beta: f64,
    pub gaps_alpha: f64,
    pub modes: Vec<BlockMode>,
}

impl Default for FunctionalSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            s: 3.0,
            beta: 0.0,
            gaps_alpha: 0.5,
            modes: vec![
                BlockMode::EndpointDiff,
                BlockMode::BlockMax,
                BlockMode::BlockVariation,
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificateSpec {
    pub enabled: bool,
    pub tol: f64,
    pub t_min: Option<f64>,
    pub n_cap: usize,
    /// Exponent of the power majorant; the symbol's default when absent.
    pub a: Option<f64>,
    /// Grid size of the angular-ratio check.
    pub grid: usize,
}

impl Default for CertificateSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            tol: 1e-8,
            t_min: None,
            n_cap: 1 << 18,
            a: None,
            grid: 1024,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Directory for report.json, tables and plot files.
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub probe: ProbeKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub measure: MeasureSpec,
    #[serde(default)]
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub functional: FunctionalSpec,
    #[serde(default)]
    pub certificate: CertificateSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Defaults for a probe.
    pub fn new(probe: ProbeKind) -> Self {
        let mut c = Self {
            probe,
            seed: 0,
            measure: MeasureSpec::default(),
            trajectory: TrajectorySpec::default(),
            functional: FunctionalSpec::default(),
            certificate: CertificateSpec::default(),
            output: OutputSpec::default(),
        };
        match probe {
            ProbeKind::MainTheorem => {}
            ProbeKind::OpenQuestion => c.functional.s = 2.0,
            ProbeKind::CorollarySup => {
                c.measure.symbol = "lazy_walk".into();
                c.functional.alpha = 0.5;
            }
            ProbeKind::Variation => {
                c.functional.s = 1.0;
            }
            ProbeKind::Longvar => {
                c.functional.s = 2.0;
                c.functional.modes = vec![BlockMode::EndpointDiff];
            }
            ProbeKind::LpSquare => {
                c.measure.symbol = "lazy_walk".into();
                c.functional.s = 2.0;
            }
        }
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn symbol_key(&self) -> Result<SymbolKey> {
        self.measure.symbol.parse()
    }

    /// `m` with the probe default: 0 for the gap-block probe, 1 otherwise.
    pub fn m(&self) -> f64 {
        self.trajectory.m.unwrap_or(match self.probe {
            ProbeKind::Longvar => 0.0,
            _ => 1.0,
        })
    }

    /// Checks every parameter before anything is computed.
    pub fn validate(&self) -> Result<()> {
        let key = self.symbol_key()?;
        let t = &self.trajectory;
        let f = &self.functional;
        if self.measure.k == 0 {
            return Err(bad("measure.k must be at least 1"));
        }
        if !(self.measure.eps >= 0.0) {
            return Err(bad("measure.eps must be nonnegative"));
        }
        let m = self.m();
        if !(m >= 0.0 && m.is_finite()) {
            return Err(bad("trajectory.m must be nonnegative"));
        }
        if t.levels.is_empty() || t.levels[0] == 0 || t.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad(
                "trajectory.levels must be positive and strictly increasing",
            ));
        }
        if !t.delta && t.random_count == 0 {
            return Err(bad(
                "no test functions: set trajectory.delta or trajectory.random_count",
            ));
        }
        if t.random_radius < 0 {
            return Err(bad("trajectory.random_radius must be nonnegative"));
        }
        if let Some(w) = t.w_max {
            if w < t.random_radius || w < 0 {
                return Err(bad("trajectory.w_max must cover the support of f"));
            }
        }
        if t.engine == Engine::FullLine {
            if key.power_law().is_none() {
                return Err(bad(format!(
                    "no closed-form powers for `{key}`; use engine = \"window\""
                )));
            }
            if m.fract() != 0.0 {
                return Err(bad("the full-line engine needs an integer m"));
            }
            if self.probe == ProbeKind::LpSquare {
                return Err(bad("the lp-square probe needs the window engine"));
            }
        }
        let s_ok = f.s >= 1.0 && f.s.is_finite();
        match self.probe {
            ProbeKind::MainTheorem
            | ProbeKind::OpenQuestion
            | ProbeKind::Variation
            | ProbeKind::Longvar
                if !s_ok =>
            {
                return Err(bad("functional.s must satisfy 1 <= s < inf"));
            }
            _ => {}
        }
        if !f.alpha.is_finite() || !f.beta.is_finite() {
            return Err(bad("functional.alpha and functional.beta must be finite"));
        }
        if self.probe == ProbeKind::Longvar {
            if !(f.gaps_alpha > 0.0 && f.gaps_alpha < 1.0) {
                return Err(bad("functional.gaps_alpha must lie in (0, 1)"));
            }
            if f.beta < 0.0 {
                return Err(bad("functional.beta must be nonnegative for gap blocks"));
            }
            if f.modes.is_empty() {
                return Err(bad("functional.modes is empty"));
            }
        }
        let c = &self.certificate;
        if !(c.tol > 0.0) || c.n_cap < 64 || c.grid < 2 {
            return Err(bad(
                "certificate: tol > 0, n_cap >= 64 and grid >= 2 are required",
            ));
        }
        if let Some(a) = c.a {
            if !(a > 0.0 && a <= 2.0) {
                return Err(bad("certificate.a must lie in (0, 2]"));
            }
        }
        if let Some(tm) = c.t_min {
            if !(tm > 0.0 && tm < 0.5) {
                return Err(bad("certificate.t_min must lie in (0, 1/2)"));
            }
        }
        Ok(())
    }
}
