//! Initial-state families and their photon-number parity.
//!
//! All pure-state constructors evaluate the exact (untruncated) Fock
//! amplitudes, keep the first `dim` of them and renormalize. The weight that
//! falls outside the space is reported through [`Prepared::discarded`] and
//! logged when it exceeds [`TRUNCATION_WARN`].

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{displacement_block, CVector, DensityOperator, FockSpace, StateVector, C64};

pub const TRUNCATION_WARN: f64 = 1e-8;

/// Weights of the even and odd photon-number sectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParitySplit {
    pub p_even: f64,
    pub p_odd: f64,
    /// `p_odd / p_even`; `+∞` when `p_even` vanishes.
    pub ratio_r: f64,
}

impl ParitySplit {
    pub fn new(p_even: f64, p_odd: f64) -> Self {
        let ratio_r = if p_even > 1e-15 { p_odd / p_even } else { f64::INFINITY };
        Self { p_even, p_odd, ratio_r }
    }

    fn from_probabilities(probs: impl IntoIterator<Item = f64>) -> Self {
        let (mut even, mut odd) = (0.0, 0.0);
        for (n, p) in probs.into_iter().enumerate() {
            if n % 2 == 0 {
                even += p;
            } else {
                odd += p;
            }
        }
        Self::new(even, odd)
    }
}

pub trait ParityWeights {
    fn parity_split(&self) -> ParitySplit;
}

impl ParityWeights for StateVector {
    fn parity_split(&self) -> ParitySplit {
        ParitySplit::from_probabilities(self.amplitudes().iter().map(|c| c.norm_sqr()))
    }
}

impl ParityWeights for DensityOperator {
    fn parity_split(&self) -> ParitySplit {
        ParitySplit::from_probabilities(self.matrix().diagonal().iter().map(|z| z.re))
    }
}

pub fn parity_split<S: ParityWeights + ?Sized>(state: &S) -> ParitySplit {
    state.parity_split()
}

fn finish_pure(space: FockSpace, raw: CVector, label: &str) -> Result<(StateVector, f64)> {
    let kept = raw.norm_squared();
    let discarded = (1.0 - kept).max(0.0);
    if discarded > TRUNCATION_WARN {
        warn!("{label}: truncation at dim {} discards weight {discarded:.3e}", space.dim());
    }
    Ok((StateVector::from_amplitudes(space, raw)?, discarded))
}

fn finish_mixed(space: FockSpace, probs: Vec<f64>, label: &str) -> Result<(DensityOperator, f64)> {
    let kept: f64 = probs.iter().sum();
    let discarded = (1.0 - kept).max(0.0);
    if discarded > TRUNCATION_WARN {
        warn!("{label}: truncation at dim {} discards weight {discarded:.3e}", space.dim());
    }
    Ok((DensityOperator::diagonal(space, &probs)?, discarded))
}

fn coherent_raw(dim: usize, alpha: C64) -> CVector {
    let mut v = CVector::zeros(dim);
    let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        v[n] = amp;
        amp = amp * alpha / ((n + 1) as f64).sqrt();
    }
    v
}

fn check_coherent_truncation(space: FockSpace, alpha: C64) {
    let r = alpha.norm();
    if r * r + 5.0 * r >= space.dim() as f64 {
        warn!("|alpha| = {r} is large for dim {}", space.dim());
    }
}

/// Fock state `|m⟩`.
pub fn fock(space: FockSpace, m: usize) -> Result<StateVector> {
    StateVector::basis(space, m)
}

fn coherent_prepared(space: FockSpace, alpha: C64) -> Result<(StateVector, f64)> {
    check_coherent_truncation(space, alpha);
    finish_pure(space, coherent_raw(space.dim(), alpha), "coherent state")
}

/// Coherent state `|α⟩`.
pub fn coherent(space: FockSpace, alpha: C64) -> Result<StateVector> {
    coherent_prepared(space, alpha).map(|(s, _)| s)
}

fn cat_prepared(space: FockSpace, alpha: C64, phi: f64) -> Result<(StateVector, f64)> {
    check_coherent_truncation(space, alpha);
    let overlap = (-2.0 * alpha.norm_sqr()).exp();
    let denom = 2.0 * (1.0 + phi.cos() * overlap);
    if denom < 1e-14 {
        return Err(Error::ZeroVector);
    }
    let norm = denom.sqrt().recip();
    let plus = coherent_raw(space.dim(), alpha);
    let minus = coherent_raw(space.dim(), -alpha);
    let raw = (plus + minus * C64::from_polar(1.0, phi)) * C64::new(norm, 0.0);
    finish_pure(space, raw, "cat state")
}

/// Cat state `N[|α⟩ + e^{iφ}|−α⟩]`.
///
/// `φ = 0` is the even coherent state, `φ = π` the odd one and `φ = π/2`
/// the Yurke–Stoler state. The odd state at `α = 0` does not exist and is
/// rejected.
pub fn cat(space: FockSpace, alpha: C64, phi: f64) -> Result<StateVector> {
    cat_prepared(space, alpha, phi).map(|(s, _)| s)
}

fn squeezed_prepared(space: FockSpace, alpha: C64, xi: C64) -> Result<(StateVector, f64)> {
    let r = xi.norm();
    let x = C64::from_polar(r.tanh(), xi.arg());
    // g_n = (x/2)^{n/2} H_n(y) / √n!, with y = (α + α* x)/√(2x); the
    // recurrence below is the Hermite recurrence with the powers of x folded in.
    let lin = alpha + alpha.conj() * x;
    let z = alpha.norm_sqr() + alpha.conj() * alpha.conj() * x;
    let pref = (-z / 2.0).exp() / r.cosh().sqrt();
    let dim = space.dim();
    let mut g = vec![C64::new(0.0, 0.0); dim];
    g[0] = C64::new(1.0, 0.0);
    if dim > 1 {
        g[1] = lin;
    }
    for n in 1..dim.saturating_sub(1) {
        g[n + 1] = (lin * g[n] - x * g[n - 1] * (n as f64).sqrt()) / ((n + 1) as f64).sqrt();
    }
    let raw = CVector::from_iterator(dim, g.into_iter().map(|gn| gn * pref));
    finish_pure(space, raw, "squeezed state")
}

/// Two-photon coherent state `D(α)S(ξ)|0⟩` with
/// `S(ξ) = exp[½ξ* a² − ½ξ a†²]`, from its Hermite expansion.
pub fn squeezed(space: FockSpace, alpha: C64, xi: C64) -> Result<StateVector> {
    squeezed_prepared(space, alpha, xi).map(|(s, _)| s)
}

fn displaced_number_prepared(space: FockSpace, alpha: C64, n0: usize) -> Result<(StateVector, f64)> {
    if n0 >= space.dim() {
        return Err(Error::OutOfRange { n: n0, dim: space.dim() });
    }
    check_coherent_truncation(space, alpha);
    let block = displacement_block(space.dim(), n0 + 1, alpha);
    finish_pure(space, block.column(n0).into_owned(), "displaced number state")
}

/// `D(α)|n₀⟩`.
pub fn displaced_number(space: FockSpace, alpha: C64, n0: usize) -> Result<StateVector> {
    displaced_number_prepared(space, alpha, n0).map(|(s, _)| s)
}

fn thermal_prepared(space: FockSpace, mean_n: f64) -> Result<(DensityOperator, f64)> {
    if !(mean_n >= 0.0) || !mean_n.is_finite() {
        return Err(Error::Domain(format!("thermal mean photon number must be >= 0, got {mean_n}")));
    }
    let q = mean_n / (1.0 + mean_n);
    let probs: Vec<f64> = (0..space.dim()).map(|n| (1.0 - q) * q.powi(n as i32)).collect();
    finish_mixed(space, probs, "thermal state")
}

/// Chaotic state `(1−q) Σ qⁿ |n⟩⟨n|`, `q = ⟨n⟩/(1+⟨n⟩)`.
pub fn thermal(space: FockSpace, mean_n: f64) -> Result<DensityOperator> {
    thermal_prepared(space, mean_n).map(|(s, _)| s)
}

fn photon_added_q(mean_n: f64) -> Result<f64> {
    if !(mean_n >= 1.0) || !mean_n.is_finite() {
        return Err(Error::Domain(format!("photon-added thermal state needs <n> >= 1, got {mean_n}")));
    }
    Ok((mean_n - 1.0) / (mean_n + 1.0))
}

fn photon_added_prepared(space: FockSpace, mean_n: f64) -> Result<(DensityOperator, f64)> {
    let q = photon_added_q(mean_n)?;
    // N n qⁿ with N = (1−q)²/q, written without the division so q = 0 gives |1⟩.
    let probs: Vec<f64> = (0..space.dim())
        .map(|n| if n == 0 { 0.0 } else { (1.0 - q).powi(2) * n as f64 * q.powi(n as i32 - 1) })
        .collect();
    finish_mixed(space, probs, "photon-added thermal state")
}

/// Single-photon-added chaotic state `N a† ρ_ch a`, parametrized by its mean
/// photon number `⟨n⟩ = (1+q)/(1−q) ≥ 1`.
pub fn photon_added_thermal(space: FockSpace, mean_n: f64) -> Result<DensityOperator> {
    photon_added_prepared(space, mean_n).map(|(s, _)| s)
}

/// Descriptor for every initial-state family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateFamily {
    Fock { m: usize },
    Coherent { alpha: C64 },
    Cat { alpha: C64, phi: f64 },
    Squeezed { alpha: C64, xi: C64 },
    DisplacedNumber { alpha: C64, n0: usize },
    Thermal { mean_n: f64 },
    PhotonAddedThermal { mean_n: f64 },
}

#[derive(Clone, Debug)]
pub enum PreparedState {
    Pure(StateVector),
    Mixed(DensityOperator),
}

/// A constructed initial state together with the weight lost to truncation.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub state: PreparedState,
    pub discarded: f64,
}

impl Prepared {
    pub fn density(&self) -> DensityOperator {
        match &self.state {
            PreparedState::Pure(v) => v.to_density(),
            PreparedState::Mixed(r) => r.clone(),
        }
    }

    pub fn parity_split(&self) -> ParitySplit {
        match &self.state {
            PreparedState::Pure(v) => v.parity_split(),
            PreparedState::Mixed(r) => r.parity_split(),
        }
    }
}

impl StateFamily {
    pub fn even_cat(alpha: C64) -> Self {
        Self::Cat { alpha, phi: 0.0 }
    }

    pub fn odd_cat(alpha: C64) -> Self {
        Self::Cat { alpha, phi: PI }
    }

    pub fn yurke_stoler(alpha: C64) -> Self {
        Self::Cat { alpha, phi: PI / 2.0 }
    }

    pub fn prepare(&self, space: FockSpace) -> Result<Prepared> {
        let pure = |r: Result<(StateVector, f64)>| {
            r.map(|(s, discarded)| Prepared { state: PreparedState::Pure(s), discarded })
        };
        let mixed = |r: Result<(DensityOperator, f64)>| {
            r.map(|(s, discarded)| Prepared { state: PreparedState::Mixed(s), discarded })
        };
        match *self {
            Self::Fock { m } => pure(fock(space, m).map(|s| (s, 0.0))),
            Self::Coherent { alpha } => pure(coherent_prepared(space, alpha)),
            Self::Cat { alpha, phi } => pure(cat_prepared(space, alpha, phi)),
            Self::Squeezed { alpha, xi } => pure(squeezed_prepared(space, alpha, xi)),
            Self::DisplacedNumber { alpha, n0 } => pure(displaced_number_prepared(space, alpha, n0)),
            Self::Thermal { mean_n } => mixed(thermal_prepared(space, mean_n)),
            Self::PhotonAddedThermal { mean_n } => mixed(photon_added_prepared(space, mean_n)),
        }
    }

    pub fn density(&self, space: FockSpace) -> Result<DensityOperator> {
        Ok(self.prepare(space)?.density())
    }

    /// Mean photon number of the untruncated state, where it has a closed form.
    pub fn mean_photon_number(&self) -> Option<f64> {
        match *self {
            Self::Fock { m } => Some(m as f64),
            Self::Coherent { alpha } => Some(alpha.norm_sqr()),
            Self::Thermal { mean_n } | Self::PhotonAddedThermal { mean_n } => Some(mean_n),
            Self::DisplacedNumber { alpha, n0 } => Some(alpha.norm_sqr() + n0 as f64),
            Self::Squeezed { alpha, xi } => Some(alpha.norm_sqr() + xi.norm().sinh().powi(2)),
            Self::Cat { alpha, phi } => {
                let e = (-2.0 * alpha.norm_sqr()).exp();
                Some(alpha.norm_sqr() * (1.0 - phi.cos() * e) / (1.0 + phi.cos() * e))
            }
        }
    }
}

/// Analytic parity weights, free of truncation error.
///
/// Supported for coherent, thermal, photon-added thermal and cat states. For
/// the photon-added thermal state the ratio is computed from the two
/// probabilities, `r = (1+q²)/(2q)`.
pub fn closed_form_parity(family: &StateFamily) -> Result<ParitySplit> {
    match *family {
        StateFamily::Coherent { alpha } => {
            let e = (-2.0 * alpha.norm_sqr()).exp();
            Ok(ParitySplit::new(0.5 * (1.0 + e), 0.5 * (1.0 - e)))
        }
        StateFamily::Thermal { mean_n } => {
            if !(mean_n >= 0.0) {
                return Err(Error::Domain(format!("thermal mean photon number must be >= 0, got {mean_n}")));
            }
            let q = mean_n / (1.0 + mean_n);
            Ok(ParitySplit::new(1.0 / (1.0 + q), q / (1.0 + q)))
        }
        StateFamily::PhotonAddedThermal { mean_n } => {
            let q = photon_added_q(mean_n)?;
            let d = (1.0 + q).powi(2);
            Ok(ParitySplit::new(2.0 * q / d, (1.0 + q * q) / d))
        }
        StateFamily::Cat { alpha, phi } => {
            let e = (-2.0 * alpha.norm_sqr()).exp();
            let denom = 1.0 + phi.cos() * e;
            if denom < 1e-14 {
                return Err(Error::ZeroVector);
            }
            let even = (phi / 2.0).cos().powi(2) * (1.0 + e) / denom;
            let odd = (phi / 2.0).sin().powi(2) * (1.0 - e) / denom;
            Ok(ParitySplit::new(even, odd))
        }
        other => Err(Error::Unsupported(format!("no closed-form parity for {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(d: usize) -> FockSpace {
        FockSpace::new(d).unwrap()
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn fock_states() {
        let s = space(10);
        let vac = fock(s, 0).unwrap();
        assert_eq!(vac.amplitudes()[0], re(1.0));
        let two = fock(s, 2).unwrap();
        assert_eq!(two.parity_split().p_even, 1.0);
        assert!(matches!(fock(s, 10), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn coherent_parity() {
        let s = space(100);
        assert_eq!(coherent(s, re(0.0)).unwrap(), fock(s, 0).unwrap());
        let split = coherent(s, re(0.75)).unwrap().parity_split();
        // (1 + e^{-1.125}) / 2
        assert!((split.p_even - 0.662_326_233_679_175).abs() < 1e-10, "{}", split.p_even);
        assert!((split.ratio_r - 0.509_829_973_735_257).abs() < 1e-10, "{}", split.ratio_r);
        let r2 = coherent(s, re(2.0)).unwrap().parity_split().ratio_r;
        assert!((r2 - 4f64.tanh()).abs() < 1e-10);
        assert!((r2 - 0.999_329).abs() < 1e-6);
    }

    #[test]
    fn cat_parity() {
        let s = space(100);
        for a in [0.3, 1.0, 2.0] {
            assert!((cat(s, re(a), 0.0).unwrap().parity_split().p_even - 1.0).abs() < 1e-12);
        }
        assert!((cat(s, re(2.0), PI).unwrap().parity_split().p_odd - 1.0).abs() < 1e-12);
        let r = cat(s, re(2.0), PI / 4.0).unwrap().parity_split().ratio_r;
        let want = (PI / 8.0).tan().powi(2) * 4f64.tanh();
        assert!((r - want).abs() < 1e-9);
        assert!((r - 0.171_455).abs() < 1e-5);
        assert!(matches!(cat(s, re(0.0), PI), Err(Error::ZeroVector)));
    }

    #[test]
    fn squeezed_special_cases() {
        let s = space(100);
        for alpha in [re(1.0), C64::new(-0.4, 0.9)] {
            let sq = squeezed(s, alpha, re(0.0)).unwrap();
            let coh = coherent(s, alpha).unwrap();
            assert!((sq.amplitudes() - coh.amplitudes()).camax() < 1e-12);
        }
        let vac = squeezed(s, re(0.0), re(0.5)).unwrap();
        for n in (1..100).step_by(2) {
            assert_eq!(vac.amplitudes()[n], re(0.0));
        }
        assert!((vac.parity_split().p_even - 1.0).abs() < 1e-15);
        // The analytic expansion is normalized before renormalization.
        let prep = StateFamily::Squeezed { alpha: re(1.0), xi: re(0.5) }.prepare(s).unwrap();
        assert!(prep.discarded < 1e-8, "{}", prep.discarded);
    }

    #[test]
    fn displaced_number_cases() {
        let s = space(60);
        let alpha = C64::new(0.8, -0.5);
        let dn = displaced_number(s, alpha, 0).unwrap();
        let coh = coherent(s, alpha).unwrap();
        assert!((dn.amplitudes() - coh.amplitudes()).camax() < 1e-12);
        let three = displaced_number(s, re(0.0), 3).unwrap();
        assert_eq!(three, fock(s, 3).unwrap());
        let split = displaced_number(s, re(1.0), 1).unwrap().parity_split();
        assert!((split.p_even - (1.0 - split.p_odd)).abs() < 1e-10);
        assert!(displaced_number(s, re(1.0), 60).is_err());
    }

    #[test]
    fn thermal_states() {
        let s = space(100);
        assert_eq!(thermal(s, 0.0).unwrap(), fock(s, 0).unwrap().to_density());
        let split = thermal(s, 1.0).unwrap().parity_split();
        assert!((split.p_even - 2.0 / 3.0).abs() < 1e-12);
        assert!((split.ratio_r - 0.5).abs() < 1e-12);
        let hot = StateFamily::Thermal { mean_n: 50.0 }.prepare(s).unwrap();
        assert!((hot.parity_split().p_even - 0.5).abs() < 0.01);
        assert!(thermal(s, -0.1).is_err());
    }

    #[test]
    fn photon_added_thermal_states() {
        let s = space(100);
        let near_one = photon_added_thermal(s, 1.0 + 1e-9).unwrap().parity_split();
        assert!(near_one.p_odd > 1.0 - 1e-8);
        assert_eq!(photon_added_thermal(s, 1.0).unwrap(), fock(s, 1).unwrap().to_density());
        let rho = photon_added_thermal(s, 2.0).unwrap();
        let split = rho.parity_split();
        assert!((split.p_even - 0.375).abs() < 1e-12);
        assert!((split.p_odd - 0.625).abs() < 1e-12);
        assert!((split.ratio_r - 5.0 / 3.0).abs() < 1e-12);
        for i in 0..100 {
            for j in 0..100 {
                if i != j {
                    assert_eq!(rho.matrix()[(i, j)], re(0.0));
                }
            }
        }
        assert!(matches!(photon_added_thermal(s, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn parity_of_fock_one_is_infinite_ratio() {
        let split = fock(space(4), 1).unwrap().parity_split();
        assert_eq!(split.p_even, 0.0);
        assert_eq!(split.p_odd, 1.0);
        assert!(split.ratio_r.is_infinite());
    }

    #[test]
    fn closed_form_values() {
        let coh = closed_form_parity(&StateFamily::Coherent { alpha: re(2.0) }).unwrap();
        assert!((coh.p_even - 0.5 * (1.0 + (-8f64).exp())).abs() < 1e-15);
        let ys = closed_form_parity(&StateFamily::yurke_stoler(re(2.0))).unwrap();
        assert!((ys.p_even - coh.p_even).abs() < 1e-15);
        assert!((ys.p_odd - coh.p_odd).abs() < 1e-15);
        let vac = closed_form_parity(&StateFamily::Thermal { mean_n: 0.0 }).unwrap();
        assert_eq!((vac.p_even, vac.p_odd), (1.0, 0.0));
        assert!(closed_form_parity(&StateFamily::Squeezed { alpha: re(0.0), xi: re(0.5) }).is_err());
    }

    #[test]
    fn mixed_constructors_are_valid_density_operators() {
        let s = space(40);
        for rho in [thermal(s, 1.0).unwrap(), photon_added_thermal(s, 2.0).unwrap(), thermal(s, 3.0).unwrap()] {
            assert!(rho.hermiticity_error() <= 1e-10);
            assert!((rho.trace().re - 1.0).abs() <= 1e-10);
            assert!(rho.min_eigenvalue() >= -1e-8);
        }
    }
}
