//! Effective Hamiltonians of the driven Kerr resonator and the dispersive
//! mapping from Jaynes–Cummings parameters.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSpace, OperatorMatrix};

/// Which Hamiltonian family a [`ModelSpec`] builds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `χ(n̂−k)(n̂−l) + ε(a² + a†²)`.
    Kl { k: usize, l: usize },
    /// `χn̂(n̂−1) + ε(a + a†)`.
    Usual,
    /// `χn̂(n̂−2) + ε(a + a†)`.
    UsualPrime,
}

impl ModelKind {
    pub const MODEL_1: Self = Self::Kl { k: 0, l: 2 };
    pub const MODEL_2: Self = Self::Kl { k: 1, l: 3 };
    pub const MODEL_5: Self = Self::Kl { k: 0, l: 1 };

    /// True when the drive changes the photon number by two.
    pub fn two_photon_drive(&self) -> bool {
        matches!(self, Self::Kl { .. })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Kl { k, l } => write!(f, "kl:{k},{l}"),
            Self::Usual => write!(f, "usual"),
            Self::UsualPrime => write!(f, "usual_prime"),
        }
    }
}

/// Named presets. Models 3 and 3′ share a Hamiltonian and differ in the loss
/// channel, which is carried by [`Preset::default_loss`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Model1,
    Model2,
    Model3,
    Model3Prime,
    Model4,
    Model5,
    Kl { k: usize, l: usize },
}

/// Dominant absorption channel of a preset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossChannel {
    SinglePhoton,
    TwoPhoton,
}

impl Preset {
    pub fn kind(&self) -> ModelKind {
        match *self {
            Self::Model1 => ModelKind::MODEL_1,
            Self::Model2 => ModelKind::MODEL_2,
            Self::Model3 | Self::Model3Prime => ModelKind::Usual,
            Self::Model4 => ModelKind::UsualPrime,
            Self::Model5 => ModelKind::MODEL_5,
            Self::Kl { k, l } => ModelKind::Kl { k, l },
        }
    }

    pub fn default_loss(&self) -> LossChannel {
        match self {
            Self::Model3 | Self::Model4 | Self::Model5 => LossChannel::SinglePhoton,
            _ => LossChannel::TwoPhoton,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "1" => return Ok(Self::Model1),
            "2" => return Ok(Self::Model2),
            "3" => return Ok(Self::Model3),
            "3p" | "3'" => return Ok(Self::Model3Prime),
            "4" => return Ok(Self::Model4),
            "5" => return Ok(Self::Model5),
            _ => {}
        }
        if let Some(rest) = t.strip_prefix("kl:") {
            let mut parts = rest.split(',').map(|p| p.trim().parse::<usize>());
            if let (Some(Ok(k)), Some(Ok(l)), None) = (parts.next(), parts.next(), parts.next()) {
                return Ok(Self::Kl { k, l });
            }
        }
        Err(Error::Domain(format!("unknown model '{s}' (expected 1, 2, 3, 3p, 4, 5 or kl:K,L)")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Model1 => f.write_str("1"),
            Self::Model2 => f.write_str("2"),
            Self::Model3 => f.write_str("3"),
            Self::Model3Prime => f.write_str("3p"),
            Self::Model4 => f.write_str("4"),
            Self::Model5 => f.write_str("5"),
            Self::Kl { k, l } => write!(f, "kl:{k},{l}"),
        }
    }
}

/// Effective parameters of one Hamiltonian. Frequencies in arbitrary units, ħ = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub chi: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub omega_tune: f64,
    #[serde(default)]
    pub sigma_tune: f64,
}

/// Drive-to-Kerr ratio `ε/χ` used for the figures.
pub const DEFAULT_DELTA: f64 = 1.0 / 6.0;
/// Loss-to-drive ratio `γ/ε` used for the figures.
pub const DEFAULT_DELTA_PRIME: f64 = 1.0 / 25.0;
pub const DEFAULT_CHI: f64 = 30.0;

impl ModelSpec {
    pub fn new(kind: ModelKind, chi: f64, epsilon: f64) -> Result<Self> {
        let spec = Self { kind, chi, epsilon, omega_tune: 0.0, sigma_tune: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    /// `χ` given, `ε = δχ`.
    pub fn from_ratio(kind: ModelKind, chi: f64, delta: f64) -> Result<Self> {
        Self::new(kind, chi, delta * chi)
    }

    pub fn with_tuning(mut self, omega: f64, sigma: f64) -> Self {
        self.omega_tune = omega;
        self.sigma_tune = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi > 0.0) || !self.chi.is_finite() {
            return Err(Error::Domain(format!("Kerr coupling must be > 0, got {}", self.chi)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Domain(format!("drive strength must be >= 0, got {}", self.epsilon)));
        }
        if !self.omega_tune.is_finite() || !self.sigma_tune.is_finite() {
            return Err(Error::Domain("tuning offsets must be finite".into()));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.epsilon / self.chi
    }

    /// Diagonal energy `⟨n|H|n⟩`.
    pub fn level_energy(&self, n: usize) -> f64 {
        let nf = n as f64;
        let kerr = match self.kind {
            ModelKind::Kl { k, l } => self.chi * (nf - k as f64) * (nf - l as f64),
            ModelKind::Usual => self.chi * nf * (nf - 1.0),
            ModelKind::UsualPrime => self.chi * nf * (nf - 2.0),
        };
        kerr + self.omega_tune * nf + self.sigma_tune
    }

    pub fn hamiltonian(&self, space: FockSpace) -> OperatorMatrix {
        match self.kind {
            ModelKind::Kl { .. } => hamiltonian_kl_unchecked(space, self),
            ModelKind::Usual | ModelKind::UsualPrime => hamiltonian_usual_unchecked(space, self),
        }
    }
}

fn hamiltonian_kl_unchecked(space: FockSpace, spec: &ModelSpec) -> OperatorMatrix {
    let d = space.dim();
    let mut m = OperatorMatrix::diagonal(space, |n| spec.level_energy(n)).into_matrix();
    for n in 0..d.saturating_sub(2) {
        let v = spec.epsilon * (((n + 1) * (n + 2)) as f64).sqrt();
        m[(n, n + 2)].re += v;
        m[(n + 2, n)].re += v;
    }
    OperatorMatrix::new(space, m, true).expect("two-photon Hamiltonian is Hermitian")
}

fn hamiltonian_usual_unchecked(space: FockSpace, spec: &ModelSpec) -> OperatorMatrix {
    let d = space.dim();
    let mut m = OperatorMatrix::diagonal(space, |n| spec.level_energy(n)).into_matrix();
    for n in 0..d - 1 {
        let v = spec.epsilon * ((n + 1) as f64).sqrt();
        m[(n, n + 1)].re += v;
        m[(n + 1, n)].re += v;
    }
    OperatorMatrix::new(space, m, true).expect("single-photon Hamiltonian is Hermitian")
}

/// `Ω n̂ + χ(n̂−k)(n̂−l) + ε(a² + a†²) + Σ`.
pub fn hamiltonian_kl(space: FockSpace, spec: &ModelSpec) -> Result<OperatorMatrix> {
    spec.validate()?;
    if !matches!(spec.kind, ModelKind::Kl { .. }) {
        return Err(Error::Domain(format!("hamiltonian_kl called with {}", spec.kind)));
    }
    Ok(hamiltonian_kl_unchecked(space, spec))
}

/// Single-photon driven Kerr Hamiltonians (`Usual` or `UsualPrime`).
pub fn hamiltonian_usual(space: FockSpace, spec: &ModelSpec) -> Result<OperatorMatrix> {
    spec.validate()?;
    if matches!(spec.kind, ModelKind::Kl { .. }) {
        return Err(Error::Domain(format!("hamiltonian_usual called with {}", spec.kind)));
    }
    Ok(hamiltonian_usual_unchecked(space, spec))
}

/// Physical Jaynes–Cummings inputs, qubit in its ground state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JcParameters {
    pub omega_cav: f64,
    pub omega_q: f64,
    pub g: f64,
    pub omega_d: f64,
    pub epsilon0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DispersiveParams {
    pub raw: JcParameters,
    pub k: usize,
    pub l: usize,
    /// `g/Δ`, `Δ = ω_q − ω_cav`.
    pub lambda: f64,
    pub eta: f64,
    pub chi: f64,
    pub epsilon_eff: f64,
    pub omega_kl: f64,
    pub sigma_kl: f64,
}

const LAMBDA_WARN: f64 = 0.1;
const LAMBDA_MAX: f64 = 0.3;

/// Effective Kerr parameters to the order kept by the dispersive expansion
/// (corrections are `O(λ⁴)`).
pub fn dispersive_map(raw: JcParameters, k: usize, l: usize) -> Result<DispersiveParams> {
    let detuning = raw.omega_q - raw.omega_cav;
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(Error::DispersiveLimit("qubit-cavity detuning is zero".into()));
    }
    if raw.g == 0.0 {
        warn!("coupling g = 0: no Kerr nonlinearity is induced");
        return Err(Error::DispersiveLimit("g = 0 gives lambda = 0 and no Kerr term".into()));
    }
    let lambda = raw.g / detuning;
    if lambda.abs() > LAMBDA_MAX {
        return Err(Error::DispersiveLimit(format!("|lambda| = {} exceeds {LAMBDA_MAX}", lambda.abs())));
    }
    if lambda.abs() > LAMBDA_WARN {
        warn!("|lambda| = {} is not small; dispersive expansion is inaccurate", lambda.abs());
    }
    let chi = -raw.g * lambda.powi(3);
    let eta = -raw.g * lambda * (1.0 - lambda * lambda);
    let epsilon_eff = (1.0 + lambda * lambda) * raw.epsilon0;
    let kf = k as f64;
    let lf = l as f64;
    let omega_kl = raw.omega_cav + (kf + lf + 1.0) * chi - eta - raw.omega_d / 2.0;
    let sigma_kl = 0.5 * (raw.omega_q - 2.0 * kf * lf * chi - eta);
    Ok(DispersiveParams { raw, k, l, lambda, eta, chi, epsilon_eff, omega_kl, sigma_kl })
}

impl DispersiveParams {
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let spec = ModelSpec {
            kind: ModelKind::Kl { k: self.k, l: self.l },
            chi: self.chi,
            epsilon: self.epsilon_eff,
            omega_tune: self.omega_kl,
            sigma_tune: self.sigma_kl,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Qubit and drive frequencies that make `Ω_kl = Σ_kl = 0` for a given
/// cavity frequency and coupling. `Σ_kl = 0` is solved by fixed-point
/// iteration on `ω_q`, starting from `ω_q = initial_omega_q`.
pub fn tune_to_resonance(
    omega_cav: f64,
    g: f64,
    epsilon0: f64,
    k: usize,
    l: usize,
    initial_omega_q: f64,
) -> Result<DispersiveParams> {
    let kl = (k * l) as f64;
    let mut omega_q = initial_omega_q;
    for _ in 0..200 {
        let detuning = omega_q - omega_cav;
        if detuning == 0.0 {
            return Err(Error::DispersiveLimit("iteration hit zero detuning".into()));
        }
        let lambda = g / detuning;
        let chi = -g * lambda.powi(3);
        let eta = -g * lambda * (1.0 - lambda * lambda);
        let next = 2.0 * kl * chi + eta;
        if (next - omega_q).abs() <= 1e-14 * (1.0 + omega_q.abs()) {
            omega_q = next;
            let lf = l as f64;
            let kf = k as f64;
            let omega_d = 2.0 * (omega_cav + (kf + lf + 1.0) * chi - eta);
            return dispersive_map(JcParameters { omega_cav, omega_q, g, omega_d, epsilon0 }, k, l);
        }
        omega_q = next;
    }
    Err(Error::DispersiveLimit("tuning iteration did not converge".into()))
}
