use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blockade"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Run a subcommand, returning the exit code.
fn run(kind: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = exe()
        .args([kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .args(extra)
        .env("RUST_LOG", "error")
        .status()
        .unwrap();
    status.code().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn meta(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.meta.json"))).unwrap()).unwrap()
}

const MODEL1: &str = "[model]\npreset = \"1\"\n\n[rates]\ndelta_prime = 0.04\n";

fn fock(m: usize) -> String {
    format!("[initial]\nfamily = \"fock\"\nm = {m}\n")
}

#[test]
fn evolve_rabi_peak_and_frozen_level() {
    let tmp = TempDir::new().unwrap();
    let base = "[model]\npreset = \"1\"\n\n[rates]\ngamma = 0.0\n";
    let run_cfg = "[run]\ndim = 30\nt_end = 0.5\nsamples = 501\n";
    let cfg = write(tmp.path(), "a.toml", &format!("{base}{}{run_cfg}[output]\nname = \"a\"\n", fock(0)));
    assert_eq!(run("evolve", &cfg, tmp.path(), &[]), 0);
    let t = column(&tmp.path().join("a.csv"), "t");
    let p2 = column(&tmp.path().join("a.csv"), "p2");
    let (i, peak) = p2.iter().enumerate().fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let expected = std::f64::consts::PI / (2.0 * 2f64.sqrt() * 5.0);
    assert!(peak > 0.97, "peak {peak}");
    assert!((t[i] - expected).abs() < 0.005, "peak at {} vs {expected}", t[i]);

    let cfg = write(tmp.path(), "b.toml", &format!("{base}{}{run_cfg}[output]\nname = \"b\"\n", fock(1)));
    assert_eq!(run("evolve", &cfg, tmp.path(), &[]), 0);
    let p1 = column(&tmp.path().join("b.csv"), "p1");
    // Off-resonant mixing with |3> costs at most about (2·√6ε/4χ)² ≈ 0.04.
    assert!(p1.iter().all(|&p| p > 0.95), "min {}", p1.iter().cloned().fold(1.0, f64::min));
    assert!(p1.iter().sum::<f64>() / p1.len() as f64 > 0.97);
    let (header, _) = read_csv(&tmp.path().join("b.csv"));
    assert_eq!(header, ["t", "p0", "p1", "p2", "p3", "p4", "p5", "F"]);
}

#[test]
fn steady_values_and_sidecar() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "s.toml", &format!("{MODEL1}{}[run]\ndim = 40\n", fock(0)));
    assert_eq!(run("steady", &cfg, tmp.path(), &[]), 0);
    let p = column(&tmp.path().join("steady.csv"), "p");
    assert_eq!(p.len(), 40);
    assert!((p[0] - 0.492).abs() < 1e-3 && (p[2] - 0.505).abs() < 1e-3, "{:?}", &p[..4]);
    let m = meta(tmp.path(), "steady");
    assert!(m["trace_distance_to_approximation"].as_f64().unwrap() < 0.02);
    assert!(m["residual"].as_f64().unwrap() < 1e-9);

    let cfg = write(
        tmp.path(),
        "c.toml",
        &format!("{MODEL1}[initial]\nfamily = \"coherent\"\nalpha = [2.0, 0.0]\n\n[run]\ndim = 40\n\n[output]\nname = \"c\"\n"),
    );
    assert_eq!(run("steady", &cfg, tmp.path(), &[]), 0);
    let m = meta(tmp.path(), "c");
    let pe = m["initial_parity"]["p_even"].as_f64().unwrap();
    assert!((pe - 0.5002).abs() < 1e-4, "{pe}");
}

#[test]
fn model3_forgets_its_initial_state() {
    let tmp = TempDir::new().unwrap();
    let base = "[model]\npreset = \"3\"\n\n[rates]\ndelta_prime = 0.04\n";
    let mut pops = Vec::new();
    for m in [0, 1] {
        let cfg = write(tmp.path(), &format!("m{m}.toml"), &format!("{base}{}[run]\ndim = 30\n\n[output]\nname = \"m{m}\"\n", fock(m)));
        assert_eq!(run("steady", &cfg, tmp.path(), &[]), 0);
        pops.push(column(&tmp.path().join(format!("m{m}.csv")), "p"));
    }
    assert!(pops[0].iter().zip(&pops[1]).all(|(a, b)| (a - b).abs() < 1e-9));
    assert!(pops[0][0] + pops[0][1] > 0.99);
}

#[test]
fn wigner_outputs() {
    let tmp = TempDir::new().unwrap();
    let grid = "[wigner]\ntarget = \"initial\"\nq_points = 41\np_points = 41\n";
    let cfg = write(tmp.path(), "v.toml", &format!("{MODEL1}{}[run]\ndim = 20\n\n{grid}[output]\nname = \"v\"\n", fock(0)));
    assert_eq!(run("wigner", &cfg, tmp.path(), &[]), 0);
    let w = column(&tmp.path().join("v.csv"), "W");
    let max = w.iter().cloned().fold(f64::MIN, f64::max);
    assert!((max - 1.0 / std::f64::consts::PI).abs() < 1e-9);
    let m = meta(tmp.path(), "v");
    assert_eq!(m["q_axis"]["points"], 41);

    // Even steady state: W(q, p) = W(−q, −p). Rows run q slowest.
    let cfg = write(
        tmp.path(),
        "e.toml",
        &format!("{MODEL1}{}[run]\ndim = 30\n\n[wigner]\nq_points = 41\np_points = 41\n\n[output]\nname = \"e\"\n", fock(0)),
    );
    assert_eq!(run("wigner", &cfg, tmp.path(), &[]), 0);
    let w = column(&tmp.path().join("e.csv"), "W");
    let n = w.len();
    assert!((0..n).all(|i| (w[i] - w[n - 1 - i]).abs() < 1e-10));

    let cfg = write(
        tmp.path(),
        "o.toml",
        &format!("{MODEL1}{}[run]\ndim = 30\n\n[wigner]\nq_points = 41\np_points = 41\n\n[output]\nname = \"o\"\n", fock(1)),
    );
    assert_eq!(run("wigner", &cfg, tmp.path(), &[]), 0);
    let min = column(&tmp.path().join("o.csv"), "W").into_iter().fold(f64::MAX, f64::min);
    assert!(min < -0.25, "{min}");
}

#[test]
fn scans() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "f8.toml",
        &format!(
            "[model]\npreset = \"1\"\n\n[rates]\ngamma = 0.2\n\n{}[run]\ndim = 24\n\n[scan]\naxis = \"epsilon_over_gamma\"\nstart = 0.0\nstop = 10.0\npoints = 11\n\n[output]\nname = \"f8\"\n",
            fock(0)
        ),
    );
    assert_eq!(run("scan", &cfg, tmp.path(), &[]), 0);
    assert!(column(&tmp.path().join("f8.csv"), "F").iter().all(|&f| f >= 0.99));

    // Tuned point of an Ω scan equals the plain steady state.
    let cfg = write(
        tmp.path(),
        "f9.toml",
        &format!("{MODEL1}{}[run]\ndim = 24\n\n[scan]\naxis = \"omega_kl\"\nstart = -1.0\nstop = 1.0\npoints = 3\n\n[output]\nname = \"f9\"\n", fock(0)),
    );
    assert_eq!(run("scan", &cfg, tmp.path(), &[]), 0);
    let steady = write(tmp.path(), "st.toml", &format!("{MODEL1}{}[run]\ndim = 24\n\n[output]\nname = \"st\"\n", fock(0)));
    assert_eq!(run("steady", &steady, tmp.path(), &[]), 0);
    let p = column(&tmp.path().join("st.csv"), "p");
    for n in 0..5 {
        let scan = column(&tmp.path().join("f9.csv"), &format!("p{n}"));
        assert!((scan[1] - p[n]).abs() < 1e-10);
    }

    let cfg = write(
        tmp.path(),
        "f13.toml",
        &format!("{MODEL1}[run]\ndim = 24\n\n[scan]\naxis = \"alpha\"\nstart = 0.0\nstop = 2.0\npoints = 5\nfamily = \"coherent\"\n\n[output]\nname = \"f13\"\n"),
    );
    assert_eq!(run("scan", &cfg, tmp.path(), &[]), 0);
    let r = column(&tmp.path().join("f13.csv"), "r");
    let p0 = column(&tmp.path().join("f13.csv"), "p0");
    assert_eq!(r[0], 0.0);
    assert!(p0[0] > 0.49);
}

#[test]
fn failed_points_are_flagged() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "pat.toml",
        &format!("{MODEL1}[run]\ndim = 20\n\n[scan]\naxis = \"mean_n\"\nstart = 0.0\nstop = 2.0\npoints = 5\nfamily = \"photon_added_thermal\"\n"),
    );
    assert_eq!(run("scan", &cfg, tmp.path(), &[]), 0);
    let (_, rows) = read_csv(&tmp.path().join("scan.csv"));
    let status: Vec<&str> = rows.iter().map(|r| r.last().unwrap().as_str()).collect();
    assert!(status[0].starts_with("failed"));
    assert!(status[1].starts_with("failed"));
    assert_eq!(&status[2..], ["ok", "ok", "ok"]);
    assert_eq!(meta(tmp.path(), "scan")["failed"], 2);
}

#[test]
fn outputs_are_byte_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "d.toml",
        &format!("{MODEL1}[run]\ndim = 20\n\n[scan]\naxis = \"alpha\"\nstart = 0.0\nstop = 2.0\npoints = 9\nfamily = \"squeezed\"\nxi = 0.5\n"),
    );
    let out = tmp.path().join("out");
    assert_eq!(run("scan", &cfg, &out, &[]), 0);
    let first: Vec<Vec<u8>> = ["scan.csv", "scan.meta.json"].iter().map(|f| std::fs::read(out.join(f)).unwrap()).collect();
    let status = exe()
        .args(["scan", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("BLOCKADE_THREADS", "1")
        .status()
        .unwrap();
    assert!(status.success());
    for (f, bytes) in ["scan.csv", "scan.meta.json"].iter().zip(first) {
        assert!(std::fs::read(out.join(f)).unwrap() == bytes, "{f} differs between runs");
    }
}

#[test]
fn overrides_take_effect() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "o.toml", &format!("{MODEL1}{}[run]\ndim = 40\n", fock(0)));
    assert_eq!(run("steady", &cfg, tmp.path(), &["--dim", "24", "--model", "2", "--delta-prime", "0.16666666666666666"]), 0);
    let m = meta(tmp.path(), "steady");
    assert_eq!(m["resolved"]["dim"], 24);
    assert!((m["resolved"]["gamma2"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);
    let p = column(&tmp.path().join("steady.csv"), "p");
    assert!((p[0] - 0.7755).abs() < 1e-3, "{}", p[0]);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.toml", "[model]\npreset = \"1\"\n\n[run]\ndim = \"x\"\n");
    assert_eq!(run("steady", &bad, tmp.path(), &[]), 2);
    let missing = tmp.path().join("missing.toml");
    assert_eq!(run("steady", &missing, tmp.path(), &[]), 2);
    let wrong_kind = write(tmp.path(), "k.toml", &format!("{MODEL1}{}[run]\nkind = \"scan\"\n", fock(0)));
    assert_eq!(run("steady", &wrong_kind, tmp.path(), &[]), 2);
    let big = write(
        tmp.path(),
        "big.toml",
        &format!("{MODEL1}[initial]\nfamily = \"coherent\"\nalpha = [5.0, 0.0]\n\n[run]\ndim = 20\n"),
    );
    assert_eq!(run("steady", &big, tmp.path(), &[]), 4);
}
