//! Lindblad generators, time evolution and steady states.
//!
//! Vectorization is column stacking: `vec(ρ)[i + N·j] = ρ_ij`.

mod integrate;
pub mod sparse;
mod steady;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityOperator, FockSpace, C64};
use crate::model::{LossChannel, ModelSpec, Preset};
use sparse::{merge_triplets, SparseOp};

pub use integrate::{evolve, evolve_with, EvolveOptions, Trajectory};
pub use steady::{
    null_space_solver, solve_general, solve_sector, solve_unique, steady_state_by_integration,
    steady_state_general, steady_state_sector, steady_state_unique, NullSpace, Parity, SteadyState,
};

/// Largest dimension for which the dense superoperator is assembled.
pub const DENSE_DIM_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DissipationRates {
    #[serde(default)]
    pub gamma2: f64,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma_perp: f64,
}

impl DissipationRates {
    pub fn new(gamma2: f64, gamma1: f64, gamma_perp: f64) -> Result<Self> {
        let r = Self { gamma2, gamma1, gamma_perp };
        r.validate()?;
        Ok(r)
    }

    pub fn two_photon(gamma: f64) -> Self {
        Self { gamma2: gamma, ..Self::default() }
    }

    pub fn single_photon(gamma: f64) -> Self {
        Self { gamma1: gamma, ..Self::default() }
    }

    /// Rate `γ` on the preset's own loss channel.
    pub fn for_preset(preset: Preset, gamma: f64) -> Self {
        match preset.default_loss() {
            LossChannel::TwoPhoton => Self::two_photon(gamma),
            LossChannel::SinglePhoton => Self::single_photon(gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma2", self.gamma2), ("gamma1", self.gamma1), ("gamma_perp", self.gamma_perp)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be a finite rate >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn largest(&self) -> f64 {
        self.gamma2.max(self.gamma1).max(self.gamma_perp)
    }
}

/// Generator split into an elementwise diagonal part and a sparse remainder.
///
/// With `K = Σ L†L`, the diagonal part acts as
/// `(Dρ)_mn = (−i(H_mm − H_nn) − ½(K_mm + K_nn)) ρ_mn`, which factorizes as
/// `f_m f_n*` after exponentiation.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    space: FockSpace,
    energies: Vec<f64>,
    decay: Vec<f64>,
    h_off: SparseOp,
    k_off: SparseOp,
    jumps: Vec<SparseOp>,
}

impl Lindbladian {
    pub fn new(spec: &ModelSpec, rates: &DissipationRates, space: FockSpace) -> Result<Self> {
        spec.validate()?;
        rates.validate()?;
        let h = spec.hamiltonian(space).into_matrix();
        let d = space.dim();
        let mut jumps_dense = Vec::new();
        if rates.gamma_perp > 0.0 {
            jumps_dense.push(CMatrix::from_fn(d, d, |i, j| {
                if i == j { C64::new(rates.gamma_perp.sqrt() * i as f64, 0.0) } else { C64::new(0.0, 0.0) }
            }));
        }
        if rates.gamma1 > 0.0 {
            let s = rates.gamma1.sqrt();
            jumps_dense.push(CMatrix::from_fn(d, d, |i, j| {
                if j == i + 1 { C64::new(s * (j as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) }
            }));
        }
        if rates.gamma2 > 0.0 {
            let s = rates.gamma2.sqrt();
            jumps_dense.push(CMatrix::from_fn(d, d, |i, j| {
                if j == i + 2 { C64::new(s * ((j * (j - 1)) as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) }
            }));
        }
        let mut k = CMatrix::zeros(d, d);
        for l in &jumps_dense {
            k += l.adjoint() * l;
        }
        Ok(Self {
            space,
            energies: (0..d).map(|n| h[(n, n)].re).collect(),
            decay: (0..d).map(|n| k[(n, n)].re).collect(),
            h_off: SparseOp::from_dense_filtered(&h, |i, j| i != j),
            k_off: SparseOp::from_dense_filtered(&k, |i, j| i != j),
            jumps: jumps_dense.iter().map(SparseOp::from_dense).collect(),
        })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    /// True when no term couples levels of opposite parity, so the even and
    /// odd blocks of ρ evolve independently.
    pub fn conserves_parity(&self) -> bool {
        self.h_off.preserves_parity()
            && self.k_off.preserves_parity()
            && self.jumps.iter().all(SparseOp::preserves_parity)
    }

    /// Diagonal generator coefficient for `ρ_mn`.
    #[inline]
    pub fn diagonal_rate(&self, m: usize, n: usize) -> C64 {
        C64::new(-0.5 * (self.decay[m] + self.decay[n]), -(self.energies[m] - self.energies[n]))
    }

    /// `f_m = exp((−iH_mm − ½K_mm) τ)`; the diagonal propagator is `f_m f_n*`.
    pub fn propagator_factors(&self, tau: f64) -> Vec<C64> {
        self.energies
            .iter()
            .zip(&self.decay)
            .map(|(&e, &k)| C64::from_polar((-0.5 * k * tau).exp(), -e * tau))
            .collect()
    }

    /// Largest |diagonal rate|, a scale for step-size heuristics.
    pub fn diagonal_scale(&self) -> f64 {
        let (emin, emax) = self.energies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &e| (a.0.min(e), a.1.max(e)));
        let kmax = self.decay.iter().copied().fold(0.0, f64::max);
        (emax - emin) + kmax
    }

    /// Everything except the diagonal part, written into `out`.
    pub fn apply_offdiagonal(&self, rho: &CMatrix, out: &mut CMatrix) {
        out.fill(C64::new(0.0, 0.0));
        let mi = C64::new(0.0, -1.0);
        self.h_off.left_mul_add(rho, mi, out);
        self.h_off.right_mul_add(rho, -mi, out);
        if !self.k_off.is_empty() {
            let h = C64::new(-0.5, 0.0);
            self.k_off.left_mul_add(rho, h, out);
            self.k_off.right_mul_add(rho, h, out);
        }
        for l in &self.jumps {
            l.sandwich_add(rho, out);
        }
    }

    /// Full right-hand side `ℒρ`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.space.dim();
        let mut out = CMatrix::zeros(d, d);
        self.apply_offdiagonal(rho, &mut out);
        for n in 0..d {
            for m in 0..d {
                out[(m, n)] += self.diagonal_rate(m, n) * rho[(m, n)];
            }
        }
        out
    }

    /// Superoperator entries `(row, col, value)` in column-stacked indices,
    /// duplicates merged.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let d = self.space.dim();
        let idx = |i: usize, j: usize| i + d * j;
        let mut t = Vec::new();
        for j in 0..d {
            for i in 0..d {
                t.push((idx(i, j), idx(i, j), self.diagonal_rate(i, j)));
            }
        }
        let mi = C64::new(0.0, -1.0);
        let half = C64::new(-0.5, 0.0);
        for (op, left, right) in [(&self.h_off, mi, -mi), (&self.k_off, half, half)] {
            for &(i, k, v) in &op.entries {
                // (Aρ)_ij = A_ik ρ_kj
                for j in 0..d {
                    t.push((idx(i, j), idx(k, j), left * v));
                }
                // (ρA)_mk = ρ_mi A_ik
                for m in 0..d {
                    t.push((idx(m, k), idx(m, i), right * v));
                }
            }
        }
        for l in &self.jumps {
            for &(i, k, v1) in &l.entries {
                for &(j, m, v2) in &l.entries {
                    t.push((idx(i, j), idx(k, m), v1 * v2.conj()));
                }
            }
        }
        merge_triplets(t)
    }
}

/// `dρ/dt = −i[H,ρ] + γ⊥𝒟[a†a]ρ + γ₁𝒟[a]ρ + γ₂𝒟[a²]ρ`.
pub fn lindblad_rhs(spec: &ModelSpec, rates: &DissipationRates, rho: &DensityOperator) -> Result<CMatrix> {
    let gen = Lindbladian::new(spec, rates, rho.space())?;
    Ok(gen.apply(rho.matrix()))
}

/// Dense `dim² × dim²` superoperator. Refused above [`DENSE_DIM_LIMIT`].
pub fn liouvillian_matrix(spec: &ModelSpec, rates: &DissipationRates, space: FockSpace) -> Result<CMatrix> {
    if space.dim() > DENSE_DIM_LIMIT {
        return Err(Error::Capacity { dim: space.dim(), limit: DENSE_DIM_LIMIT });
    }
    let gen = Lindbladian::new(spec, rates, space)?;
    let n = space.dim() * space.dim();
    let mut m = CMatrix::zeros(n, n);
    for (i, j, v) in gen.triplets() {
        m[(i, j)] += v;
    }
    Ok(m)
}

/// Column-stacked `vec(ρ)`.
pub fn vectorize(rho: &CMatrix) -> crate::fock::CVector {
    crate::fock::CVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &crate::fock::CVector, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}
