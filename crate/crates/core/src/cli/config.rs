//! TOML experiment descriptions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::DissipationRates;
use crate::model::{ModelSpec, Preset, DEFAULT_CHI, DEFAULT_DELTA, DEFAULT_DELTA_PRIME};
use crate::states::StateFamily;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub initial: Option<StateFamily>,
    pub run: RunSection,
    #[serde(default)]
    pub wigner: Option<WignerSection>,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `1`, `2`, `3`, `3p`, `4`, `5` or `kl:K,L`.
    pub preset: String,
    #[serde(default = "default_chi")]
    pub chi: f64,
    /// `ε/χ`; ignored when `epsilon` is given.
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub sigma: f64,
}

fn default_chi() -> f64 {
    DEFAULT_CHI
}

/// Either explicit channel rates, or a single `γ` (absolute, or as
/// `δ′ = γ/ε`) on the preset's own loss channel.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub delta_prime: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma_perp: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Evolve,
    Steady,
    Wigner,
    Scan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Optional here; the subcommand decides, and a conflicting value is an error.
    pub kind: Option<RunKind>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Levels summed into the fidelity column; defaults per preset.
    pub manifold: Option<Vec<usize>>,
    /// Number of `p_n` columns in tables.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_dim() -> usize {
    100
}
fn default_t_end() -> f64 {
    2.0
}
fn default_samples() -> usize {
    401
}
fn default_levels() -> usize {
    6
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WignerTarget {
    #[default]
    Steady,
    Initial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSection {
    #[serde(default)]
    pub target: WignerTarget,
    #[serde(default = "neg4")]
    pub q_min: f64,
    #[serde(default = "pos4")]
    pub q_max: f64,
    #[serde(default = "pts101")]
    pub q_points: usize,
    #[serde(default = "neg4")]
    pub p_min: f64,
    #[serde(default = "pos4")]
    pub p_max: f64,
    #[serde(default = "pts101")]
    pub p_points: usize,
}

fn neg4() -> f64 {
    -4.0
}
fn pos4() -> f64 {
    4.0
}
fn pts101() -> usize {
    101
}

impl Default for WignerSection {
    fn default() -> Self {
        Self { target: WignerTarget::Steady, q_min: -4.0, q_max: 4.0, q_points: 101, p_min: -4.0, p_max: 4.0, p_points: 101 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// `ε/γ` at fixed `γ`.
    EpsilonOverGamma,
    /// Tuning frequency `Ω` at fixed `Σ`.
    OmegaKl,
    /// Mean photon number of a thermal-type initial field.
    MeanN,
    /// Real amplitude of a coherent-type initial field.
    Alpha,
}

/// Initial-state family swept along the `mean_n` or `alpha` axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanFamily {
    Thermal,
    PhotonAddedThermal,
    Coherent,
    YurkeStoler,
    Cat,
    Squeezed,
    DisplacedNumber,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub axis: ScanAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub family: Option<ScanFamily>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub n0: usize,
}

impl ScanSection {
    pub fn values(&self) -> Vec<f64> {
        crate::analysis::uniform_axis(self.start, self.stop, self.points)
    }

    /// Initial state at scan coordinate `x` for the state-family axes.
    pub fn family_at(&self, x: f64) -> Result<StateFamily> {
        use crate::fock::C64;
        let family = self
            .family
            .ok_or_else(|| Error::Domain("scan.family is required for the mean_n and alpha axes".into()))?;
        let alpha = C64::new(x, 0.0);
        let f = match (self.axis, family) {
            (ScanAxis::MeanN, ScanFamily::Thermal) => StateFamily::Thermal { mean_n: x },
            (ScanAxis::MeanN, ScanFamily::PhotonAddedThermal) => StateFamily::PhotonAddedThermal { mean_n: x },
            (ScanAxis::Alpha, ScanFamily::Coherent) => StateFamily::Coherent { alpha },
            (ScanAxis::Alpha, ScanFamily::YurkeStoler) => StateFamily::yurke_stoler(alpha),
            (ScanAxis::Alpha, ScanFamily::Cat) => StateFamily::Cat { alpha, phi: self.phi },
            (ScanAxis::Alpha, ScanFamily::Squeezed) => StateFamily::Squeezed { alpha, xi: C64::new(self.xi, 0.0) },
            (ScanAxis::Alpha, ScanFamily::DisplacedNumber) => StateFamily::DisplacedNumber { alpha, n0: self.n0 },
            (axis, fam) => {
                return Err(Error::Domain(format!("scan family {fam:?} does not fit axis {axis:?}")));
            }
        };
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    pub name: Option<String>,
}

fn default_dir() -> String {
    ".".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), name: None }
    }
}

/// Command-line overrides applied on top of a file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dim: Option<usize>,
    pub out: Option<String>,
    pub model: Option<String>,
    pub delta: Option<f64>,
    pub delta_prime: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Domain(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Domain(msg) => Error::Domain(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(d) = o.dim {
            self.run.dim = d;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(m) = &o.model {
            self.model.preset = m.clone();
        }
        if let Some(d) = o.delta {
            self.model.delta = Some(d);
            self.model.epsilon = None;
        }
        if let Some(dp) = o.delta_prime {
            self.rates = RatesSection { delta_prime: Some(dp), ..RatesSection::default() };
        }
        self.validate()
    }

    /// Fix the run kind from the subcommand.
    pub fn set_kind(&mut self, kind: RunKind) -> Result<()> {
        match self.run.kind {
            Some(k) if k != kind => {
                Err(Error::Domain(format!("run.kind is {k:?} but the {kind:?} command was invoked")))
            }
            _ => {
                self.run.kind = Some(kind);
                self.validate()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.preset()?;
        self.model_spec()?;
        self.rates()?;
        if self.run.dim < 2 {
            return Err(Error::Domain(format!("run.dim must be >= 2, got {}", self.run.dim)));
        }
        if !(self.run.t_end > 0.0) || self.run.samples < 2 {
            return Err(Error::Domain("run.t_end must be > 0 and run.samples >= 2".into()));
        }
        let Some(kind) = self.run.kind else { return Ok(()) };
        match kind {
            RunKind::Evolve | RunKind::Steady => {
                if self.initial.is_none() {
                    return Err(Error::Domain("[initial] is required for this run kind".into()));
                }
            }
            RunKind::Wigner => {
                if self.initial.is_none() {
                    return Err(Error::Domain("[initial] is required for wigner runs".into()));
                }
                let w = self.wigner.clone().unwrap_or_default();
                if w.q_points < 2 || w.p_points < 2 || !(w.q_max > w.q_min) || !(w.p_max > w.p_min) {
                    return Err(Error::Domain("wigner grid needs at least 2 points per axis and max > min".into()));
                }
            }
            RunKind::Scan => {
                let s = self.scan.as_ref().ok_or_else(|| Error::Domain("[scan] is required for scan runs".into()))?;
                if s.points == 0 {
                    return Err(Error::Domain("scan.points must be >= 1".into()));
                }
                match s.axis {
                    ScanAxis::MeanN | ScanAxis::Alpha => {
                        s.family_at(s.start)?;
                    }
                    ScanAxis::EpsilonOverGamma | ScanAxis::OmegaKl => {
                        if self.initial.is_none() {
                            return Err(Error::Domain("[initial] is required for this scan axis".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn preset(&self) -> Result<Preset> {
        self.model.preset.parse()
    }

    pub fn epsilon(&self) -> f64 {
        self.model.epsilon.unwrap_or(self.model.delta.unwrap_or(DEFAULT_DELTA) * self.model.chi)
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let preset = self.preset()?;
        Ok(ModelSpec::new(preset.kind(), self.model.chi, self.epsilon())?.with_tuning(self.model.omega, self.model.sigma))
    }

    /// The single loss rate `γ` used when no explicit channel rates are set.
    pub fn gamma(&self) -> f64 {
        let r = &self.rates;
        r.gamma.unwrap_or(r.delta_prime.unwrap_or(DEFAULT_DELTA_PRIME) * self.epsilon())
    }

    pub fn rates(&self) -> Result<DissipationRates> {
        let r = &self.rates;
        if r.gamma1.is_some() || r.gamma2.is_some() || r.gamma_perp.is_some() {
            if r.gamma.is_some() || r.delta_prime.is_some() {
                return Err(Error::Domain("give either explicit channel rates or gamma / delta_prime, not both".into()));
            }
            return DissipationRates::new(r.gamma2.unwrap_or(0.0), r.gamma1.unwrap_or(0.0), r.gamma_perp.unwrap_or(0.0));
        }
        let rates = DissipationRates::for_preset(self.preset()?, self.gamma());
        rates.validate()?;
        Ok(rates)
    }

    /// Levels whose populations define the blockade fidelity.
    pub fn manifold(&self) -> Result<Vec<usize>> {
        if let Some(m) = &self.run.manifold {
            return Ok(m.clone());
        }
        Ok(match self.preset()? {
            Preset::Model1 | Preset::Model4 => vec![0, 1, 2],
            Preset::Model2 => vec![0, 1, 2, 3, 4],
            Preset::Model3 | Preset::Model3Prime | Preset::Model5 => vec![0, 1],
            Preset::Kl { k, l } => (0..=k.max(l)).collect(),
        })
    }
}
