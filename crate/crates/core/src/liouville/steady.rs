//! Steady states: per parity sector, unique, by long-time integration, and a
//! generic null-space solver for assembled superoperators.

use log::{debug, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::integrate::{evolve_with, EvolveOptions};
use super::sparse::BandedMatrix;
use super::{DissipationRates, Lindbladian};
use crate::error::{Error, Result};
use crate::fock::{CMatrix, CVector, DensityOperator, FockSpace, C64};
use crate::model::ModelSpec;
use crate::states::parity_split;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn offset(self) -> usize {
        match self {
            Self::Even => 0,
            Self::Odd => 1,
        }
    }

    pub fn of(n: usize) -> Self {
        if n % 2 == 0 { Self::Even } else { Self::Odd }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" => Ok(Self::Even),
            "odd" => Ok(Self::Odd),
            other => Err(Error::Domain(format!("parity must be 'even' or 'odd', got '{other}'"))),
        }
    }
}

/// A steady state together with `‖ℒρ‖_max`.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub state: DensityOperator,
    pub residual: f64,
}

/// Residual above which a computed steady state is rejected.
const ACCEPT_RESIDUAL: f64 = 1e-7;
const INVERSE_ITERATIONS: usize = 12;

fn residual(gen: &Lindbladian, rho: &CMatrix) -> f64 {
    gen.apply(rho).camax()
}

/// Inverse iteration on the block of the superoperator indexed by `levels`
/// (both row and column of ρ drawn from `levels`).
fn solve_block(gen: &Lindbladian, levels: &[usize]) -> Result<SteadyState> {
    let d = gen.space().dim();
    let m = levels.len();
    let mut local = vec![usize::MAX; d];
    for (a, &n) in levels.iter().enumerate() {
        local[n] = a;
    }
    let map = |g: usize| {
        let (i, j) = (g % d, g / d);
        let (a, b) = (local[i], local[j]);
        if a == usize::MAX || b == usize::MAX { None } else { Some(a + m * b) }
    };
    let mut trip = Vec::new();
    let mut scale: f64 = 0.0;
    for (r, c, v) in gen.triplets() {
        if let (Some(r), Some(c)) = (map(r), map(c)) {
            scale = scale.max(v.norm());
            trip.push((r, c, v));
        }
    }
    let n = m * m;
    let sigma = 1e-9 * scale.max(1.0);
    let mut band = BandedMatrix::from_triplets(n, &trip);
    band.add_diagonal(C64::new(-sigma, 0.0));
    let lu = band.factor(1e-14 * scale.max(1.0));
    let trace_vec = |x: &CVector| (0..m).map(|a| x[a + m * a]).sum::<C64>();
    let mut x = CVector::zeros(n);
    for a in 0..m {
        x[a + m * a] = C64::new(1.0 / m as f64, 0.0);
    }
    let mut prev: Option<CVector> = None;
    for it in 0..INVERSE_ITERATIONS {
        let y = lu.solve(&x);
        let tr = trace_vec(&y);
        let ymax = y.camax();
        if !ymax.is_finite() || tr.norm() < 1e-10 * ymax {
            return Err(Error::Solver("block has no normalizable null vector".into()));
        }
        x = y / tr;
        if let Some(p) = &prev {
            let change = (&x - p).camax();
            debug!("inverse iteration {it}: change {change:e}");
            if change < 1e-14 * x.camax().max(1.0) {
                break;
            }
        }
        prev = Some(x.clone());
    }
    let mut rho = CMatrix::zeros(d, d);
    for (b, &j) in levels.iter().enumerate() {
        for (a, &i) in levels.iter().enumerate() {
            rho[(i, j)] = x[a + m * b];
        }
    }
    let state = DensityOperator::normalized(gen.space(), rho)?;
    let res = residual(gen, state.matrix());
    if res > ACCEPT_RESIDUAL * scale.max(1.0) {
        return Err(Error::Solver(format!("steady-state residual {res:e} too large")));
    }
    Ok(SteadyState { state, residual: res })
}

fn require_sector_model(gen: &Lindbladian, rates: &DissipationRates) -> Result<()> {
    if !gen.conserves_parity() {
        return Err(Error::Unsupported(
            "model couples the parity sectors; use steady_state_unique".into(),
        ));
    }
    if !(rates.gamma2 > 0.0) {
        return Err(Error::Domain("sector steady states need two-photon loss (gamma2 > 0)".into()));
    }
    Ok(())
}

/// Steady state within one parity sector, with its residual.
pub fn solve_sector(gen: &Lindbladian, rates: &DissipationRates, parity: Parity) -> Result<SteadyState> {
    require_sector_model(gen, rates)?;
    let levels = gen.space().parity_levels(parity.offset());
    solve_block(gen, &levels)
}

/// Trace-normalized null vector of ℒ restricted to the even or odd block.
pub fn steady_state_sector(
    spec: &ModelSpec,
    rates: &DissipationRates,
    parity: Parity,
    space: FockSpace,
) -> Result<DensityOperator> {
    let gen = Lindbladian::new(spec, rates, space)?;
    solve_sector(&gen, rates, parity).map(|s| s.state)
}

/// The steady state of a model whose generator has a one-dimensional null
/// space (single-photon drive or loss present).
pub fn steady_state_unique(
    spec: &ModelSpec,
    rates: &DissipationRates,
    space: FockSpace,
) -> Result<DensityOperator> {
    let gen = Lindbladian::new(spec, rates, space)?;
    solve_unique(&gen, rates).map(|s| s.state)
}

pub fn solve_unique(gen: &Lindbladian, rates: &DissipationRates) -> Result<SteadyState> {
    if gen.conserves_parity() {
        return Err(Error::Unsupported(
            "generator conserves parity, so the steady state depends on the initial state; use steady_state_general".into(),
        ));
    }
    if rates.largest() == 0.0 {
        return Err(Error::Domain("no dissipation: the steady state is not unique".into()));
    }
    let levels: Vec<usize> = (0..gen.space().dim()).collect();
    solve_block(gen, &levels)
}

/// `p_even(ρ0)·ρ_even + p_odd(ρ0)·ρ_odd` for parity-conserving models, the
/// unique steady state otherwise.
pub fn steady_state_general(
    spec: &ModelSpec,
    rates: &DissipationRates,
    rho0: &DensityOperator,
) -> Result<DensityOperator> {
    let gen = Lindbladian::new(spec, rates, rho0.space())?;
    solve_general(&gen, rates, rho0).map(|s| s.state)
}

pub fn solve_general(gen: &Lindbladian, rates: &DissipationRates, rho0: &DensityOperator) -> Result<SteadyState> {
    if !gen.conserves_parity() {
        return solve_unique(gen, rates);
    }
    let split = parity_split(rho0);
    let mut parts = Vec::new();
    for (w, parity) in [(split.p_even, Parity::Even), (split.p_odd, Parity::Odd)] {
        if w > 0.0 {
            parts.push((w, solve_sector(gen, rates, parity)?));
        }
    }
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let d = gen.space().dim();
    let mut m = CMatrix::zeros(d, d);
    let mut res: f64 = 0.0;
    for (w, s) in &parts {
        m += s.state.matrix() * C64::new(w / total, 0.0);
        res = res.max(s.residual);
    }
    let state = DensityOperator::normalized(gen.space(), m)?;
    Ok(SteadyState { state, residual: res })
}

/// Integrate until `‖ℒρ‖_max ≤ tol`, in chunks of about ten decay times.
/// Fails if `t_max` is reached first.
pub fn steady_state_by_integration(
    spec: &ModelSpec,
    rates: &DissipationRates,
    rho0: &DensityOperator,
    tol: f64,
    t_max: f64,
) -> Result<SteadyState> {
    let gen = Lindbladian::new(spec, rates, rho0.space())?;
    let rate = rates.largest();
    if rate == 0.0 {
        return Err(Error::Domain("no dissipation: integration does not converge".into()));
    }
    let chunk = 10.0 / rate;
    let opts = EvolveOptions::default();
    let mut rho = rho0.clone();
    let mut t = 0.0;
    loop {
        let res = residual(&gen, rho.matrix());
        if res <= tol {
            return Ok(SteadyState { state: rho, residual: res });
        }
        if t >= t_max {
            return Err(Error::Solver(format!("no convergence by t = {t} (residual {res:e})")));
        }
        let step = chunk.min(t_max - t);
        rho = evolve_with(&gen, &rho, &[0.0, step], &opts, |_, _| {})?;
        t += step;
    }
}

/// Orthonormal null basis of an assembled superoperator.
#[derive(Clone, Debug)]
pub struct NullSpace {
    pub basis: Vec<CVector>,
    /// Smallest singular values found, ascending (SVD path only).
    pub singular_values: Vec<f64>,
}

impl NullSpace {
    pub fn nullity(&self) -> usize {
        self.basis.len()
    }
}

const SVD_LIMIT: usize = 1024;

/// Rank-revealing null space (SVD up to 1024 rows, shifted block inverse
/// iteration beyond). A nullity different from `expected` is logged, not
/// treated as an error.
pub fn null_space_solver(matrix: &CMatrix, expected: Option<usize>) -> Result<NullSpace> {
    let n = matrix.nrows();
    if n != matrix.ncols() || n == 0 {
        return Err(Error::Domain("null space needs a non-empty square matrix".into()));
    }
    let out = if n <= SVD_LIMIT {
        null_space_svd(matrix)?
    } else {
        null_space_inverse(matrix, expected.unwrap_or(1))?
    };
    if let Some(e) = expected {
        if e != out.nullity() {
            warn!(
                "degenerate spectrum: expected nullity {e}, found {} (smallest singular values {:?})",
                out.nullity(),
                &out.singular_values[..out.singular_values.len().min(6)]
            );
        }
    }
    Ok(out)
}

fn null_space_svd(matrix: &CMatrix) -> Result<NullSpace> {
    let svd = matrix.clone().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Solver("SVD did not return V".into()))?;
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = 1e-9 * smax.max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let basis = order
        .iter()
        .filter(|&&i| sv[i] <= tol)
        .map(|&i| v_t.row(i).adjoint().into_owned())
        .collect();
    Ok(NullSpace { basis, singular_values: order.iter().map(|&i| sv[i]).collect() })
}

fn null_space_inverse(matrix: &CMatrix, k: usize) -> Result<NullSpace> {
    let n = matrix.nrows();
    let scale = matrix.camax().max(1.0);
    let shifted = matrix - DMatrix::<C64>::identity(n, n) * C64::new(1e-9 * scale, 0.0);
    let lu = shifted.lu();
    let mut x = CMatrix::from_fn(n, k, |i, j| C64::new(1.0 + ((i * (j + 3)) % 7) as f64, (i % (j + 2)) as f64));
    for _ in 0..INVERSE_ITERATIONS {
        let y = lu.solve(&x).ok_or_else(|| Error::Solver("shifted matrix is singular".into()))?;
        x = y.qr().q();
    }
    let basis: Vec<CVector> = (0..k)
        .map(|j| x.column(j).into_owned())
        .filter(|v| (matrix * v).camax() <= 1e-8 * scale)
        .collect();
    Ok(NullSpace { basis, singular_values: Vec::new() })
}
