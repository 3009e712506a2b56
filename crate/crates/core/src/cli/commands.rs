//! The four run kinds. Each writes `<dir>/<name>.csv` and a
//! `<dir>/<name>.meta.json` sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, RunKind, ScanAxis, WignerTarget};
use crate::analysis::{blockade_fidelity, fmt17, mean_photon, uniform_axis, wigner};
use crate::approx::{approx_mixture, ApproxModel};
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockSpace};
use crate::liouville::{evolve_with, solve_general, solve_sector, DissipationRates, EvolveOptions, Lindbladian, Parity};
use crate::model::{ModelSpec, Preset};
use crate::states::{closed_form_parity, ParitySplit, ParityWeights, StateFamily};

/// Largest weight tolerated outside the truncated space.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// Dimension used to obtain parity weights of states with no closed form.
const WEIGHT_DIM: usize = 400;

/// Files produced by a command.
#[derive(Clone, Debug)]
pub struct Outputs {
    pub data: PathBuf,
    pub meta: PathBuf,
}

fn output_paths(cfg: &ExperimentConfig, kind: RunKind) -> Result<Outputs> {
    let default = match kind {
        RunKind::Evolve => "evolve",
        RunKind::Steady => "steady",
        RunKind::Wigner => "wigner",
        RunKind::Scan => "scan",
    };
    let name = cfg.output.name.clone().unwrap_or_else(|| default.to_string());
    let dir = Path::new(&cfg.output.dir);
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    Ok(Outputs { data: dir.join(format!("{name}.csv")), meta: dir.join(format!("{name}.meta.json")) })
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn write_meta(path: &Path, value: &Value) -> Result<()> {
    let mut w = create(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| io_error(path, e))
}

fn row(fields: &[f64]) -> String {
    fields.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(",")
}

fn p_header(levels: usize) -> Vec<String> {
    (0..levels).map(|n| format!("p{n}")).collect()
}

fn populations(rho: &DensityOperator, levels: usize) -> Vec<f64> {
    let p = rho.probabilities();
    (0..levels).map(|n| p.get(n).copied().unwrap_or(0.0).max(0.0)).collect()
}

/// Weight in the top two levels, which should stay negligible if the space
/// is large enough.
fn check_tail(rho: &DensityOperator) -> Result<()> {
    let p = rho.probabilities();
    let d = p.len();
    let tail: f64 = p[d.saturating_sub(2)..].iter().map(|x| x.max(0.0)).sum();
    if tail > TRUNCATION_LIMIT {
        return Err(Error::Truncation { discarded: tail, limit: TRUNCATION_LIMIT });
    }
    Ok(())
}

fn initial_density(family: &StateFamily, space: FockSpace) -> Result<DensityOperator> {
    let prepared = family.prepare(space)?;
    if prepared.discarded > TRUNCATION_LIMIT {
        return Err(Error::Truncation { discarded: prepared.discarded, limit: TRUNCATION_LIMIT });
    }
    Ok(prepared.density())
}

fn initial(cfg: &ExperimentConfig) -> Result<&StateFamily> {
    cfg.initial.as_ref().ok_or_else(|| Error::Domain("[initial] is required".into()))
}

fn common_meta(cfg: &ExperimentConfig, spec: &ModelSpec, rates: &DissipationRates) -> Value {
    json!({
        "config": cfg,
        "resolved": {
            "chi": spec.chi,
            "epsilon": spec.epsilon,
            "omega": spec.omega_tune,
            "sigma": spec.sigma_tune,
            "gamma1": rates.gamma1,
            "gamma2": rates.gamma2,
            "gamma_perp": rates.gamma_perp,
            "dim": cfg.run.dim,
        },
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

/// Populations `p_0…p_{levels−1}` and the fidelity `F` on a uniform time grid.
pub fn cmd_evolve(cfg: &ExperimentConfig) -> Result<Outputs> {
    let spec = cfg.model_spec()?;
    let rates = cfg.rates()?;
    let space = FockSpace::new(cfg.run.dim)?;
    let rho0 = initial_density(initial(cfg)?, space)?;
    let manifold = cfg.manifold()?;
    let levels = cfg.run.levels.min(cfg.run.dim);
    let grid = uniform_axis(0.0, cfg.run.t_end, cfg.run.samples);
    let gen = Lindbladian::new(&spec, &rates, space)?;
    let out = output_paths(cfg, RunKind::Evolve)?;

    let mut lines = Vec::with_capacity(grid.len());
    let mut fidelity_err = None;
    let last = evolve_with(&gen, &rho0, &grid, &EvolveOptions::default(), |t, rho| {
        let mut fields = vec![t];
        fields.extend(populations(rho, levels));
        match blockade_fidelity(rho, &manifold) {
            Ok(f) => fields.push(f),
            Err(e) => fidelity_err = Some(e),
        }
        lines.push(row(&fields));
    })?;
    if let Some(e) = fidelity_err {
        return Err(e);
    }
    check_tail(&last)?;

    let mut w = create(&out.data)?;
    let mut header = vec!["t".to_string()];
    header.extend(p_header(levels));
    header.push("F".into());
    let res: std::io::Result<()> = (|| {
        writeln!(w, "{}", header.join(","))?;
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        w.flush()
    })();
    res.map_err(|e| io_error(&out.data, e))?;

    let meta = merge(
        common_meta(cfg, &spec, &rates),
        json!({
            "kind": "evolve",
            "manifold": manifold,
            "columns": header,
            "final_populations": populations(&last, levels),
            "final_trace": last.trace(),
        }),
    );
    write_meta(&out.meta, &meta)?;
    info!("wrote {}", out.data.display());
    Ok(out)
}

/// Closed-form comparison state, when the run matches the assumptions
/// behind it (Models 1 and 2, pure two-photon loss, no tuning offsets).
fn approximation(
    cfg: &ExperimentConfig,
    spec: &ModelSpec,
    rates: &DissipationRates,
    rho0: &DensityOperator,
) -> Option<DensityOperator> {
    let model = match cfg.preset().ok()? {
        Preset::Model1 => ApproxModel::Model1,
        Preset::Model2 => ApproxModel::Model2,
        _ => return None,
    };
    if rates.gamma1 != 0.0 || rates.gamma_perp != 0.0 || spec.omega_tune != 0.0 || spec.sigma_tune != 0.0 {
        return None;
    }
    if spec.epsilon == 0.0 || rho0.space().dim() < 6 {
        return None;
    }
    approx_mixture(model, rho0, spec.delta(), rates.gamma2 / spec.epsilon, rho0.space())
        .map_err(|e| warn!("closed-form comparison skipped: {e}"))
        .ok()
}

/// The steady state reached from the configured initial state.
pub fn steady_for(cfg: &ExperimentConfig) -> Result<(DensityOperator, DensityOperator, f64)> {
    let spec = cfg.model_spec()?;
    let rates = cfg.rates()?;
    let space = FockSpace::new(cfg.run.dim)?;
    let rho0 = initial_density(initial(cfg)?, space)?;
    let gen = Lindbladian::new(&spec, &rates, space)?;
    let ss = solve_general(&gen, &rates, &rho0)?;
    check_tail(&ss.state)?;
    Ok((rho0, ss.state, ss.residual))
}

/// `n, p_n` for the whole space; parity split, fidelity, solver residual and
/// distance to the closed form go to the sidecar.
pub fn cmd_steady(cfg: &ExperimentConfig) -> Result<Outputs> {
    let spec = cfg.model_spec()?;
    let rates = cfg.rates()?;
    let (rho0, rho, residual) = steady_for(cfg)?;
    let out = output_paths(cfg, RunKind::Steady)?;
    let p = rho.probabilities();
    let mut w = create(&out.data)?;
    let res: std::io::Result<()> = (|| {
        writeln!(w, "n,p")?;
        for (n, x) in p.iter().enumerate() {
            writeln!(w, "{n},{}", fmt17(x.max(0.0)))?;
        }
        w.flush()
    })();
    res.map_err(|e| io_error(&out.data, e))?;

    let initial_split = rho0.parity_split();
    let steady_split = rho.parity_split();
    let manifold = cfg.manifold()?;
    let distance = approximation(cfg, &spec, &rates, &rho0).map(|a| rho.trace_distance(&a)).transpose()?;
    let meta = merge(
        common_meta(cfg, &spec, &rates),
        json!({
            "kind": "steady",
            "initial_parity": split_json(&initial_split),
            "steady_parity": split_json(&steady_split),
            "manifold": manifold,
            "fidelity": blockade_fidelity(&rho, &manifold)?,
            "mean_photon": mean_photon(&rho),
            "purity": rho.purity(),
            "residual": residual,
            "trace_distance_to_approximation": distance,
        }),
    );
    write_meta(&out.meta, &meta)?;
    info!("wrote {}", out.data.display());
    Ok(out)
}

fn split_json(s: &ParitySplit) -> Value {
    json!({ "p_even": s.p_even, "p_odd": s.p_odd, "r": s.ratio_r })
}

/// Wigner function of the steady state (or the initial state) on a grid.
pub fn cmd_wigner(cfg: &ExperimentConfig) -> Result<Outputs> {
    let spec = cfg.model_spec()?;
    let rates = cfg.rates()?;
    let grid_cfg = cfg.wigner.clone().unwrap_or_default();
    let (rho, residual) = match grid_cfg.target {
        WignerTarget::Steady => {
            let (_, rho, res) = steady_for(cfg)?;
            (rho, Some(res))
        }
        WignerTarget::Initial => (initial_density(initial(cfg)?, FockSpace::new(cfg.run.dim)?)?, None),
    };
    let q = uniform_axis(grid_cfg.q_min, grid_cfg.q_max, grid_cfg.q_points);
    let p = uniform_axis(grid_cfg.p_min, grid_cfg.p_max, grid_cfg.p_points);
    let grid = wigner(&rho, &q, &p);
    let out = output_paths(cfg, RunKind::Wigner)?;
    let mut w = create(&out.data)?;
    grid.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(&out.data, e))?;
    let meta = merge(
        common_meta(cfg, &spec, &rates),
        json!({
            "kind": "wigner",
            "target": grid_cfg.target,
            "q_axis": { "min": grid_cfg.q_min, "max": grid_cfg.q_max, "points": grid_cfg.q_points },
            "p_axis": { "min": grid_cfg.p_min, "max": grid_cfg.p_max, "points": grid_cfg.p_points },
            "order": "q slowest, p fastest",
            "w_min": grid.min(),
            "w_max": grid.max(),
            "integral": grid.integral(),
            "max_imag": grid.max_imag,
            "residual": residual,
        }),
    );
    write_meta(&out.meta, &meta)?;
    info!("wrote {}", out.data.display());
    Ok(out)
}

/// One scan point: populations, fidelity, parity ratio and weights.
struct ScanPoint {
    p: Vec<f64>,
    fidelity: f64,
    split: ParitySplit,
}

fn point_from(rho: &DensityOperator, split: ParitySplit, levels: usize, manifold: &[usize]) -> Result<ScanPoint> {
    check_tail(rho)?;
    Ok(ScanPoint { p: populations(rho, levels), fidelity: blockade_fidelity(rho, manifold)?, split })
}

/// Parity weights for a scan state: analytic where available, otherwise from
/// a generously sized expansion.
fn scan_weights(family: &StateFamily, dim: usize) -> Result<ParitySplit> {
    if let Ok(s) = closed_form_parity(family) {
        return Ok(s);
    }
    let prepared = family.prepare(FockSpace::new(dim.max(WEIGHT_DIM))?)?;
    if prepared.discarded > TRUNCATION_LIMIT {
        return Err(Error::Truncation { discarded: prepared.discarded, limit: TRUNCATION_LIMIT });
    }
    Ok(prepared.parity_split())
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BLOCKADE_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => builder = builder.num_threads(n),
            _ => return Err(Error::Domain(format!("BLOCKADE_THREADS must be a positive integer, got {v:?}"))),
        }
    }
    builder.build().map_err(|e| Error::Solver(format!("cannot start worker pool: {e}")))
}

/// Steady-state observables along one axis. Points that fail are written
/// with `nan` values and the error in the `status` column.
pub fn cmd_scan(cfg: &ExperimentConfig) -> Result<Outputs> {
    let scan = cfg.scan.clone().ok_or_else(|| Error::Domain("[scan] is required".into()))?;
    let spec = cfg.model_spec()?;
    let rates = cfg.rates()?;
    let space = FockSpace::new(cfg.run.dim)?;
    let levels = cfg.run.levels.min(cfg.run.dim);
    let manifold = cfg.manifold()?;
    let xs = scan.values();
    let pool = worker_pool()?;

    let results: Vec<Result<ScanPoint>> = match scan.axis {
        ScanAxis::EpsilonOverGamma | ScanAxis::OmegaKl => {
            let rho0 = initial_density(initial(cfg)?, space)?;
            let split = rho0.parity_split();
            let gamma = cfg.gamma();
            let solve = |x: f64| -> Result<ScanPoint> {
                let point_spec = match scan.axis {
                    ScanAxis::EpsilonOverGamma => {
                        ModelSpec::new(spec.kind, spec.chi, x * gamma)?.with_tuning(spec.omega_tune, spec.sigma_tune)
                    }
                    _ => spec.with_tuning(x, spec.sigma_tune),
                };
                let gen = Lindbladian::new(&point_spec, &rates, space)?;
                let ss = solve_general(&gen, &rates, &rho0)?;
                point_from(&ss.state, split, levels, &manifold)
            };
            pool.install(|| xs.par_iter().map(|&x| solve(x)).collect())
        }
        ScanAxis::MeanN | ScanAxis::Alpha => {
            let gen = Lindbladian::new(&spec, &rates, space)?;
            let sectors = if gen.conserves_parity() {
                let even = solve_sector(&gen, &rates, Parity::Even)?.state;
                let odd = solve_sector(&gen, &rates, Parity::Odd)?.state;
                Some((even, odd))
            } else {
                None
            };
            let unique = match sectors {
                Some(_) => None,
                None => Some(crate::liouville::solve_unique(&gen, &rates)?.state),
            };
            let point = |x: f64| -> Result<ScanPoint> {
                let family = scan.family_at(x)?;
                let split = scan_weights(&family, cfg.run.dim)?;
                let rho = match (&sectors, &unique) {
                    (Some((even, odd)), _) => DensityOperator::mixture(&[(split.p_even, even), (split.p_odd, odd)])?,
                    (None, Some(u)) => u.clone(),
                    (None, None) => unreachable!(),
                };
                point_from(&rho, split, levels, &manifold)
            };
            pool.install(|| xs.par_iter().map(|&x| point(x)).collect())
        }
    };

    let out = output_paths(cfg, RunKind::Scan)?;
    let axis_name = match scan.axis {
        ScanAxis::EpsilonOverGamma => "epsilon_over_gamma",
        ScanAxis::OmegaKl => "omega_kl",
        ScanAxis::MeanN => "mean_n",
        ScanAxis::Alpha => "alpha",
    };
    let mut header = vec![axis_name.to_string()];
    header.extend(p_header(levels));
    header.extend(["F", "r", "p_even", "p_odd", "status"].map(String::from));
    let mut failed = 0usize;
    let mut w = create(&out.data)?;
    let res: std::io::Result<()> = (|| {
        writeln!(w, "{}", header.join(","))?;
        for (&x, r) in xs.iter().zip(&results) {
            match r {
                Ok(pt) => {
                    let mut f = vec![x];
                    f.extend(&pt.p);
                    f.extend([pt.fidelity, pt.split.ratio_r, pt.split.p_even, pt.split.p_odd]);
                    writeln!(w, "{},ok", row(&f))?;
                }
                Err(e) => {
                    failed += 1;
                    let mut f = vec![x];
                    f.extend(std::iter::repeat(f64::NAN).take(levels + 4));
                    let msg = e.to_string().replace([',', '\n', '"'], ";");
                    writeln!(w, "{},failed: {msg}", row(&f))?;
                }
            }
        }
        w.flush()
    })();
    res.map_err(|e| io_error(&out.data, e))?;
    if failed > 0 {
        warn!("{failed} of {} scan points failed; see the status column", xs.len());
    }
    let meta = merge(
        common_meta(cfg, &spec, &rates),
        json!({
            "kind": "scan",
            "axis": axis_name,
            "points": xs.len(),
            "failed": failed,
            "manifold": manifold,
            "columns": header,
        }),
    );
    write_meta(&out.meta, &meta)?;
    info!("wrote {}", out.data.display());
    Ok(out)
}
