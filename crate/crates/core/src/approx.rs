//! Closed-form approximations: second-order steady states of the two
//! two-photon models, their parity mixtures, and the two-level Rabi solutions
//! of the loss-free dynamics.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CMatrix, CVector, DensityOperator, FockSpace, StateVector, C64};
use crate::liouville::Parity;
use crate::states::parity_split;

/// Beyond this the expansions are used outside their documented domain.
pub const VALIDITY_LIMIT: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxModel {
    Model1,
    Model2,
    /// Single-photon driven Kerr oscillator; only the Rabi solutions exist.
    Usual,
}

impl FromStr for ApproxModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "model1" => Ok(Self::Model1),
            "2" | "model2" => Ok(Self::Model2),
            "3" | "usual" => Ok(Self::Usual),
            other => Err(Error::Domain(format!("no closed form for model '{other}'"))),
        }
    }
}

impl fmt::Display for ApproxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Model1 => "model1",
            Self::Model2 => "model2",
            Self::Usual => "usual",
        })
    }
}

/// Which version of the odd-sector coefficients to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OddForm {
    /// Rational forms before expansion.
    #[default]
    Exact,
    /// Lowest nonvanishing order in δ, δ′.
    Leading,
}

/// Coefficients of the 6×6 steady-state block.
///
/// Even sector: diagonal `p, q, r` on `|0⟩, |2⟩, |4⟩` (and `s` on `|6⟩` for
/// Model 2), coherences `ρ02 = a + ib`, `ρ04 = c + id`, `ρ24 = e + if`.
/// Odd sector: `p` on `|1⟩`, `1 − p` on `|3⟩`, `ρ13 = a + ib`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ApproxCoefficients {
    pub model: ApproxModel,
    pub parity: Parity,
    pub delta: f64,
    pub delta_prime: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl ApproxCoefficients {
    pub fn new(model: ApproxModel, parity: Parity, delta: f64, delta_prime: f64, form: OddForm) -> Result<Self> {
        if !(delta >= 0.0) || !(delta_prime >= 0.0) || !delta.is_finite() || !delta_prime.is_finite() {
            return Err(Error::Domain(format!("delta and delta' must be finite and >= 0, got {delta}, {delta_prime}")));
        }
        if delta > VALIDITY_LIMIT || delta_prime > VALIDITY_LIMIT {
            warn!("expansion used outside delta, delta' <= 1/4 (delta = {delta}, delta' = {delta_prime})");
        }
        let mut out = Self {
            model,
            parity,
            delta,
            delta_prime,
            p: 0.0,
            q: 0.0,
            r: 0.0,
            s: 0.0,
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            e: 0.0,
            f: 0.0,
        };
        let (d, dp) = (delta, delta_prime);
        let (s2, s3, s6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
        match (model, parity) {
            (ApproxModel::Model1, Parity::Even) => {
                out.p = 0.5 - 9.0 / 32.0 * d * d + dp * dp / 8.0;
                out.r = 3.0 / 32.0 * d * d;
                out.q = 1.0 - out.p - out.r;
                out.a = -3.0 / 8.0 * s2 * d;
                out.b = 0.25 * s2 * dp;
                out.c = 5.0 / 64.0 * s6 * d * d;
                out.d = -s6 / 16.0 * d * dp;
                out.e = -s3 / 8.0 * d;
            }
            (ApproxModel::Model1, Parity::Odd) => match form {
                OddForm::Exact => {
                    // M/χ² = 16 + 12δ² + 9δ²δ′², using ε = δχ and γ = δ′ε.
                    let m = 16.0 + 12.0 * d * d + 9.0 * d * d * dp * dp;
                    out.p = 1.0 - 6.0 * d * d / m;
                    out.a = -4.0 * s6 * d / m;
                    out.b = 3.0 * s6 * d * d * dp / m;
                }
                OddForm::Leading => {
                    out.p = 1.0 - 3.0 / 8.0 * d * d;
                    out.a = -s6 / 4.0 * d;
                    out.b = 3.0 / 16.0 * s6 * d * dp;
                }
            },
            (ApproxModel::Model2, Parity::Even) => {
                if (d - dp).abs() > 1e-12 {
                    warn!("Model 2 coefficients assume delta = delta'; got {d} and {dp}");
                }
                out.p = 25.0 / 32.0 - 107.0 / 512.0 * d * d;
                out.q = 3.0 / 16.0 + 15.0 / 128.0 * d * d;
                out.s = 5.0 / 768.0 * d * d;
                out.r = 1.0 - out.p - out.q - out.s;
                out.a = 19.0 / 128.0 * s2 * d;
                out.b = 3.0 / 32.0 * s2 * d;
                out.c = -37.0 / 4608.0 * s6 * d * d;
                out.d = s6 / 16.0 - 49.0 / 768.0 * s6 * d * d;
                out.e = -5.0 / 64.0 * s3 * d;
                out.f = s3 / 32.0 * d;
            }
            (ApproxModel::Model2, Parity::Odd) => match form {
                // M/ε² = 4 + 3δ′²
                OddForm::Exact => {
                    let m = 4.0 + 3.0 * dp * dp;
                    out.p = 1.0 - 2.0 / m;
                    out.b = s6 * dp / m;
                }
                OddForm::Leading => {
                    out.p = 0.5;
                    out.b = s6 / 4.0 * dp;
                }
            },
            (ApproxModel::Usual, _) => {
                return Err(Error::Unsupported("no steady-state closed form for the usual model".into()));
            }
        }
        Ok(out)
    }

    /// Diagonal entries in the order they are placed.
    pub fn diagonal(&self) -> Vec<(usize, f64)> {
        match self.parity {
            Parity::Even => {
                let mut v = vec![(0, self.p), (2, self.q), (4, self.r)];
                if self.s != 0.0 {
                    v.push((6, self.s));
                }
                v
            }
            Parity::Odd => vec![(1, self.p), (3, 1.0 - self.p)],
        }
    }

    /// Fill the block into a `dim × dim` matrix. Entries beyond the space are
    /// dropped, so the result may need renormalizing.
    pub fn to_matrix(&self, dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        let mut put = |i: usize, j: usize, z: C64| {
            if i < dim && j < dim {
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        };
        for (n, p) in self.diagonal() {
            put(n, n, C64::new(p, 0.0));
        }
        match self.parity {
            Parity::Even => {
                put(0, 2, C64::new(self.a, self.b));
                put(0, 4, C64::new(self.c, self.d));
                put(2, 4, C64::new(self.e, self.f));
            }
            Parity::Odd => put(1, 3, C64::new(self.a, self.b)),
        }
        m
    }
}

/// Approximate sector steady state embedded in `space` (exact odd forms).
pub fn approx_steady(
    model: ApproxModel,
    parity: Parity,
    delta: f64,
    delta_prime: f64,
    space: FockSpace,
) -> Result<DensityOperator> {
    approx_steady_with(model, parity, delta, delta_prime, space, OddForm::Exact)
}

pub fn approx_steady_with(
    model: ApproxModel,
    parity: Parity,
    delta: f64,
    delta_prime: f64,
    space: FockSpace,
    form: OddForm,
) -> Result<DensityOperator> {
    if space.dim() < 6 {
        return Err(Error::Domain(format!("closed forms span |0>..|5>; dimension {} is too small", space.dim())));
    }
    let coeffs = ApproxCoefficients::new(model, parity, delta, delta_prime, form)?;
    DensityOperator::normalized(space, coeffs.to_matrix(space.dim()))
}

/// `p_even(ρ0)·ρ_even + p_odd(ρ0)·ρ_odd` from the closed forms.
pub fn approx_mixture(
    model: ApproxModel,
    rho0: &DensityOperator,
    delta: f64,
    delta_prime: f64,
    space: FockSpace,
) -> Result<DensityOperator> {
    let split = parity_split(rho0);
    let total = split.p_even + split.p_odd;
    let even = approx_steady(model, Parity::Even, delta, delta_prime, space)?;
    let odd = approx_steady(model, Parity::Odd, delta, delta_prime, space)?;
    let m = even.matrix() * C64::new(split.p_even / total, 0.0) + odd.matrix() * C64::new(split.p_odd / total, 0.0);
    DensityOperator::normalized(space, m)
}

/// Two-level solution of the loss-free dynamics.
#[derive(Clone, Debug)]
pub struct RabiSolution {
    pub state: StateVector,
    /// Set when `|m⟩` has no resonant partner and the returned state is just
    /// `|m⟩` (no oscillation).
    pub frozen: bool,
}

/// Resonant pair `(lower, upper)` and amplitude angular frequency for `|m⟩`.
pub fn rabi_pair(model: ApproxModel, m: usize, epsilon: f64) -> Option<(usize, usize, f64)> {
    match (model, m) {
        (ApproxModel::Model1, 0 | 2) => Some((0, 2, 2f64.sqrt() * epsilon)),
        (ApproxModel::Model2, 1 | 3) => Some((1, 3, 6f64.sqrt() * epsilon)),
        (ApproxModel::Model2, 0 | 4) => Some((0, 4, epsilon / 5.0)),
        (ApproxModel::Usual, 0 | 1) => Some((0, 1, epsilon)),
        _ => None,
    }
}

/// `cos(Ωt)|m⟩ − i sin(Ωt)|partner⟩` for the supported initial Fock states;
/// any other `m` gives the frozen state `|m⟩`.
pub fn rabi_solution(
    model: ApproxModel,
    initial_m: usize,
    epsilon: f64,
    t: f64,
    space: FockSpace,
) -> Result<RabiSolution> {
    let d = space.dim();
    if initial_m >= d {
        return Err(Error::OutOfRange { n: initial_m, dim: d });
    }
    let Some((lo, hi, omega)) = rabi_pair(model, initial_m, epsilon) else {
        return Ok(RabiSolution { state: StateVector::basis(space, initial_m)?, frozen: true });
    };
    if hi >= d {
        return Err(Error::OutOfRange { n: hi, dim: d });
    }
    let partner = if initial_m == lo { hi } else { lo };
    let mut amps = CVector::zeros(d);
    amps[initial_m] = C64::new((omega * t).cos(), 0.0);
    amps[partner] = C64::new(0.0, -(omega * t).sin());
    Ok(RabiSolution { state: StateVector::from_amplitudes(space, amps)?, frozen: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = 1.0 / 6.0;
    const DP: f64 = 1.0 / 25.0;

    #[test]
    fn model1_even_values() {
        let c = ApproxCoefficients::new(ApproxModel::Model1, Parity::Even, D, DP, OddForm::Exact).unwrap();
        let p = 0.5 - 9.0 / 32.0 / 36.0 + 1.0 / 8.0 / 625.0;
        assert!((c.p - p).abs() < 1e-15);
        assert!((c.p - 0.49239).abs() < 1e-5);
        assert!((c.r - 0.0026042).abs() < 1e-6);
        assert!((c.a + 0.0883883).abs() < 1e-6);
        assert!((c.p + c.q + c.r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn model1_odd_forms() {
        let lead = ApproxCoefficients::new(ApproxModel::Model1, Parity::Odd, D, DP, OddForm::Leading).unwrap();
        assert!((lead.p - 0.98958).abs() < 1e-5);
        assert!((lead.a + 0.10206).abs() < 1e-5);
        let exact = ApproxCoefficients::new(ApproxModel::Model1, Parity::Odd, D, DP, OddForm::Exact).unwrap();
        // χ = 30, ε = 5, γ = 0.2: M = 14400 + 300 + 0.36
        let m = 14400.0 + 300.0 + 0.36;
        assert!((exact.p - (1.0 - 150.0 / m)).abs() < 1e-14);
        assert!((exact.a + 4.0 * 6f64.sqrt() * 150.0 / m).abs() < 1e-14);
        assert!((exact.b - 3.0 * 6f64.sqrt() * 1.0 / m).abs() < 1e-14);
    }

    #[test]
    fn model2_even_values() {
        let c = ApproxCoefficients::new(ApproxModel::Model2, Parity::Even, D, D, OddForm::Exact).unwrap();
        assert!((c.p - 0.7754449).abs() < 1e-6);
        assert!((c.q - 0.190755).abs() < 1e-6);
        assert!((c.s - 1.808e-4).abs() < 1e-6);
        assert!((c.p + c.q + c.r + c.s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embedded_state_is_valid() {
        let space = FockSpace::new(10).unwrap();
        for model in [ApproxModel::Model1, ApproxModel::Model2] {
            for parity in [Parity::Even, Parity::Odd] {
                let dp = if model == ApproxModel::Model2 { D } else { DP };
                let rho = approx_steady(model, parity, D, dp, space).unwrap();
                assert!((rho.trace().re - 1.0).abs() < 1e-14);
                assert!(rho.min_eigenvalue() > -1e-10, "{model} {parity:?}");
                let split = parity_split(&rho);
                let want = if parity == Parity::Even { split.p_even } else { split.p_odd };
                assert!((want - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn usual_has_no_steady_form() {
        let space = FockSpace::new(10).unwrap();
        assert!(approx_steady(ApproxModel::Usual, Parity::Even, D, DP, space).is_err());
    }

    #[test]
    fn rabi_forms() {
        let space = FockSpace::new(8).unwrap();
        let eps = 5.0;
        let s = rabi_solution(ApproxModel::Model1, 0, eps, 0.0, space).unwrap();
        assert!((s.state.amplitudes()[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let t = std::f64::consts::PI / (2.0 * 2f64.sqrt() * eps);
        let s = rabi_solution(ApproxModel::Model1, 2, eps, t, space).unwrap();
        assert!((s.state.amplitudes()[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!(s.state.amplitudes()[2].norm() < 1e-14);
        let (_, _, w) = rabi_pair(ApproxModel::Model2, 1, eps).unwrap();
        assert!((w - 6f64.sqrt() * eps).abs() < 1e-14);
        let frozen = rabi_solution(ApproxModel::Model1, 1, eps, 0.3, space).unwrap();
        assert!(frozen.frozen);
        assert!((frozen.state.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_weights() {
        let space = FockSpace::new(20).unwrap();
        let rho0 = crate::states::coherent(space, C64::new(0.75, 0.0)).unwrap().to_density();
        let mix = approx_mixture(ApproxModel::Model1, &rho0, D, DP, space).unwrap();
        let a = parity_split(&mix);
        let b = parity_split(&rho0);
        assert!((a.p_even - b.p_even).abs() < 1e-14);
        assert!((a.p_even - 0.66233).abs() < 1e-5);
    }
}
