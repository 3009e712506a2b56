//! Adaptive time stepping of the master equation.
//!
//! The diagonal part of the generator (Kerr energies and the anti-commutator
//! decay) is integrated exactly through its elementwise exponential and the
//! remainder by an embedded Dormand–Prince 5(4) pair in the interaction frame
//! (Lawson scheme). Error control and step selection follow the usual
//! explicit-pair rules.

use log::debug;

use super::{DissipationRates, Lindbladian};
use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityOperator, C64};
use crate::model::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    /// Steps shorter than `min_step · max(1, |t|)` abort with a stiffness error.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, initial_step: None, min_step: 1e-13, max_steps: 20_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
    /// Photon-number distribution at each stored time.
    pub observables: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&DensityOperator> {
        self.states.last()
    }

    /// `p_n(t)` over the stored times.
    pub fn population(&self, n: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.matrix()[(n, n)].re).collect()
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// b − b̂
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    gen: &'a Lindbladian,
    d: usize,
    /// Stage derivatives in the lab frame; `k[6]` is reused as the next `k[0]`.
    k: Vec<CMatrix>,
    /// The same pulled back to the start of the step, `E(−c_j h) ∘ k_j`.
    kt: Vec<CMatrix>,
    fwd: Vec<C64>,
    back: Vec<C64>,
    max_decay: f64,
}

impl<'a> Stepper<'a> {
    fn new(gen: &'a Lindbladian) -> Self {
        let d = gen.space().dim();
        let zeros = || (0..7).map(|_| CMatrix::zeros(d, d)).collect();
        let max_decay = (0..d).map(|m| -gen.diagonal_rate(m, m).re).fold(0.0, f64::max);
        Self { gen, d, k: zeros(), kt: zeros(), fwd: Vec::new(), back: Vec::new(), max_decay }
    }

    /// Column-major `f f†` for sub-step `tau`, written into `out`.
    fn propagator(&self, tau: f64, out: &mut Vec<C64>) {
        let f = self.gen.propagator_factors(tau);
        out.clear();
        for fnn in &f {
            let c = fnn.conj();
            out.extend(f.iter().map(|fm| fm * c));
        }
    }

    /// One trial step from `y0` with `k[0] = N(y0)` already set. Returns the
    /// proposed state and the scaled error norm.
    fn attempt(&mut self, y0: &CMatrix, h: f64, opts: &EvolveOptions) -> (CMatrix, f64) {
        let d = self.d;
        // Pulling stages back multiplies by up to exp(max_decay·h); refuse
        // steps where that could overflow and let the controller shrink h.
        if self.max_decay * h > 300.0 {
            return (y0.clone(), f64::INFINITY);
        }
        self.kt[0].copy_from(&self.k[0]);
        let mut z = CMatrix::zeros(d, d);
        let mut stage = CMatrix::zeros(d, d);
        let mut fwd = std::mem::take(&mut self.fwd);
        let mut back = std::mem::take(&mut self.back);
        for i in 1..7 {
            z.copy_from(y0);
            for j in 0..i {
                if A[i][j] != 0.0 {
                    axpy(&mut z, h * A[i][j], &self.kt[j]);
                }
            }
            if i < 6 || C[i] != C[i - 1] {
                self.propagator(C[i] * h, &mut fwd);
                self.propagator(-C[i] * h, &mut back);
            }
            for ((s, &zm), &f) in stage.as_mut_slice().iter_mut().zip(z.as_slice()).zip(&fwd) {
                *s = zm * f;
            }
            let mut kn = std::mem::replace(&mut self.k[i], CMatrix::zeros(0, 0));
            self.gen.apply_offdiagonal(&stage, &mut kn);
            for ((t, &km), &b) in self.kt[i].as_mut_slice().iter_mut().zip(kn.as_slice()).zip(&back) {
                *t = km * b;
            }
            self.k[i] = kn;
        }
        // `fwd` now holds E(h) since the last node is c = 1.
        z.fill(C64::new(0.0, 0.0));
        for j in 0..7 {
            if E[j] != 0.0 {
                axpy(&mut z, h * E[j], &self.kt[j]);
            }
        }
        let mut worst: f64 = 0.0;
        for (((e, f), a), b) in z.iter().zip(&fwd).zip(y0.iter()).zip(stage.iter()) {
            let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
            worst = worst.max((e * f).norm() / sc);
        }
        self.fwd = fwd;
        self.back = back;
        (stage, worst)
    }
}

/// `z += c·x` for real `c`.
fn axpy(z: &mut CMatrix, c: f64, x: &CMatrix) {
    for (zm, xm) in z.as_mut_slice().iter_mut().zip(x.as_slice()) {
        zm.re += c * xm.re;
        zm.im += c * xm.im;
    }
}

fn hermitize(m: &mut CMatrix) {
    let h = (&*m + m.adjoint()) * C64::new(0.5, 0.0);
    *m = h;
}

fn initial_step(gen: &Lindbladian, y0: &CMatrix, k0: &CMatrix, span: f64) -> f64 {
    let ny = y0.camax().max(1e-12);
    let nk = k0.camax();
    let scale = (nk / ny).max(gen.diagonal_scale() * 1e-3).max(1e-12);
    (0.01 / scale).min(span).min(0.1)
}

/// Integrate from `rho0` at `t_grid[0]` through every grid point, handing each
/// (hermitized) state to `observe`. Returns the state at the last grid point.
pub fn evolve_with(
    gen: &Lindbladian,
    rho0: &DensityOperator,
    t_grid: &[f64],
    opts: &EvolveOptions,
    mut observe: impl FnMut(f64, &DensityOperator),
) -> Result<DensityOperator> {
    gen.space().ensure_same(&rho0.space())?;
    if t_grid.is_empty() {
        return Err(Error::Domain("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be finite and ascending".into()));
    }
    let space = gen.space();
    let mut stepper = Stepper::new(gen);
    let mut y = rho0.matrix().clone();
    let mut t = t_grid[0];
    let mut current = DensityOperator::hermitized(space, &y);
    observe(t, &current);
    let span = t_grid[t_grid.len() - 1] - t;
    let mut k0 = CMatrix::zeros(y.nrows(), y.ncols());
    gen.apply_offdiagonal(&y, &mut k0);
    let mut h = opts.initial_step.unwrap_or_else(|| initial_step(gen, &y, &k0, span.max(1e-12)));
    let mut steps = 0usize;
    let mut rejected = 0usize;
    for &target in &t_grid[1..] {
        while t < target {
            let remaining = target - t;
            let clipped = h >= remaining;
            let h_use = if clipped { remaining } else { h };
            stepper.k[0].copy_from(&k0);
            let (y1, err) = stepper.attempt(&y, h_use, opts);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 && y1.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                y = y1;
                t = if clipped { target } else { t + h_use };
                k0.copy_from(&stepper.k[6]);
                h = if clipped { h.max(h_use * factor) } else { h_use * factor };
                steps += 1;
                if steps > opts.max_steps {
                    return Err(Error::Stiffness {
                        t,
                        step: h,
                        detail: format!("exceeded {} steps; reduce dim or use the sector solver", opts.max_steps),
                    });
                }
            } else {
                rejected += 1;
                h = h_use * factor.min(0.5);
                if !err.is_finite() {
                    h = h_use * 0.1;
                }
                if h < opts.min_step * t.abs().max(1.0) {
                    return Err(Error::Stiffness {
                        t,
                        step: h,
                        detail: format!("error norm {err:e} after {rejected} rejections; reduce dim or use the sector solver"),
                    });
                }
            }
        }
        hermitize(&mut y);
        gen.apply_offdiagonal(&y, &mut k0);
        current = DensityOperator::hermitized(space, &y);
        observe(t, &current);
    }
    debug!("evolve: {steps} steps, {rejected} rejected, final h = {h:e}");
    Ok(current)
}

/// Evolve `rho0` over `t_grid` (ascending, starting at the initial time).
pub fn evolve(
    spec: &ModelSpec,
    rates: &DissipationRates,
    rho0: &DensityOperator,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let gen = Lindbladian::new(spec, rates, rho0.space())?;
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), observables: Some(Vec::new()) };
    evolve_with(&gen, rho0, t_grid, &EvolveOptions::default(), |t, rho| {
        traj.times.push(t);
        if let Some(obs) = traj.observables.as_mut() {
            obs.push(rho.probabilities());
        }
        traj.states.push(rho.clone());
    })?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FockSpace, StateVector};
    use crate::model::ModelKind;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    #[test]
    fn pure_kerr_phase_is_exact() {
        // With ε = 0 the dynamics is purely diagonal: ρ_mn picks up e^{−i(E_m−E_n)t}.
        let space = FockSpace::new(6).unwrap();
        let spec = ModelSpec::new(ModelKind::MODEL_2, 30.0, 0.0).unwrap();
        let amps = crate::fock::CVector::from_fn(6, |n, _| C64::new(1.0 + n as f64, 0.5));
        let psi = StateVector::from_amplitudes(space, amps).unwrap();
        let rho0 = psi.to_density();
        let traj = evolve(&spec, &DissipationRates::default(), &rho0, &grid(0.7, 7)).unwrap();
        let t = 0.7;
        let last = traj.final_state().unwrap().matrix();
        for m in 0..6 {
            for n in 0..6 {
                let phase = C64::from_polar(1.0, -(spec.level_energy(m) - spec.level_energy(n)) * t);
                assert!((last[(m, n)] - rho0.matrix()[(m, n)] * phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_photon_decay_of_fock_two() {
        // ρ22(t) = e^{−2γt} with no drive.
        let space = FockSpace::new(5).unwrap();
        let spec = ModelSpec::new(ModelKind::MODEL_1, 30.0, 0.0).unwrap();
        let rho0 = StateVector::basis(space, 2).unwrap().to_density();
        let g = 0.4;
        let traj = evolve(&spec, &DissipationRates::two_photon(g), &rho0, &grid(3.0, 30)).unwrap();
        for (t, p2) in traj.times.iter().zip(traj.population(2)) {
            assert!((p2 - (-2.0 * g * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn model1_rabi_peak() {
        let space = FockSpace::new(12).unwrap();
        let spec = ModelSpec::new(ModelKind::MODEL_1, 30.0, 5.0).unwrap();
        let rho0 = StateVector::basis(space, 0).unwrap().to_density();
        let t_peak = std::f64::consts::PI / (2.0 * 2f64.sqrt() * 5.0);
        let traj = evolve(&spec, &DissipationRates::default(), &rho0, &[0.0, t_peak]).unwrap();
        let p2 = traj.population(2)[1];
        let delta: f64 = 5.0 / 30.0;
        assert!((p2 - 1.0).abs() < 2.0 * delta * delta, "p2 = {p2}");
        for s in &traj.states {
            assert!((s.trace().re - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_descending_grid() {
        let space = FockSpace::new(4).unwrap();
        let spec = ModelSpec::new(ModelKind::MODEL_1, 30.0, 5.0).unwrap();
        let rho0 = StateVector::basis(space, 0).unwrap().to_density();
        assert!(evolve(&spec, &DissipationRates::default(), &rho0, &[0.0, 1.0, 0.5]).is_err());
    }
}
