//! End-to-end runs of the `nonlocal` binary and the config round trip.

use std::path::{Path, PathBuf};
use std::process::Command;

use nonlocal_cli::config::{parse_config, CoefficientSpec, FieldSpec, Mode, RunConfig};
use nonlocal_cli::output::{read_manifest, verify_manifest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonlocal"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn data_rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn branch_mode_emits_r_steps_plus_one_rows() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", shipped("rational_branch.toml").to_str().unwrap(), "--out"])
        .arg(out.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(data_rows(&out.path().join("branch.csv")), 65);
    assert!(verify_manifest(out.path()).unwrap().is_empty());
    let manifest = read_manifest(out.path()).unwrap();
    assert_eq!(manifest.mode, "branch");
    assert!(manifest.files.iter().any(|f| f.path == "branch.csv"));
}

#[test]
fn sweep_over_five_radii_writes_five_manifests() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "sweep",
            shipped("sweep_r.toml").to_str().unwrap(),
            "--workers",
            "3",
            "--out",
        ])
        .arg(out.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    for i in 0..5 {
        let entry = out.path().join(format!("entry_{i:03}"));
        assert_eq!(read_manifest(&entry).unwrap().exit_code, 0);
        assert!(verify_manifest(&entry).unwrap().is_empty());
    }
    assert_eq!(data_rows(&out.path().join("sweep.csv")), 5);
    assert!(verify_manifest(out.path()).unwrap().is_empty());
}

#[test]
fn parabolic_mode_writes_trajectory_schema() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", shipped("parabolic.toml").to_str().unwrap(), "--out"])
        .arg(out.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,l2,h1,sup,lr_center,energy_lhs,energy_rhs,corridor_margin_lo,corridor_margin_hi,dist_to_steady"
    );
    for name in ["energy_lhs.dat", "corridor_margin_lo.dat", "dist_to_steady.dat"] {
        assert!(out.path().join(name).exists(), "{name}");
    }
}

#[test]
fn staircase_roots_and_verify_succeed() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", shipped("staircase_roots.toml").to_str().unwrap(), "--out"])
        .arg(out.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(data_rows(&out.path().join("roots.csv")), 3);

    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["verify", "--seed", "11", "--out"])
        .arg(out.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(read_manifest(out.path()).unwrap().seed, 11);
}

const SMALL: &str = r#"
[problem]
n = 3
N = 64
f = { constant = 1.0 }
coefficient = { kind = "rational", alpha = 1.0, beta = 1.0, domain = [-0.5, 10.0] }

[run]
mode = "stationary"
"#;

#[test]
fn exit_codes_follow_the_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    // configuration error: negative source
    let cfg = write_config(dir.path(), &SMALL.replace("constant = 1.0 }", "constant = -1.0 }"));
    let status = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(1));

    // numerical failure: iteration budget too small, manifest still written
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("mode = \"stationary\"", "mode = \"stationary\"\nmax_iter = 1"),
    );
    let status = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
    let manifest = read_manifest(&out).unwrap();
    assert_eq!(manifest.exit_code, 2);
    assert_ne!(manifest.status, "ok");

    // property violation: a truncated branch under --strict
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("mode = \"stationary\"", "mode = \"branch\"\nr_steps = 4\nmax_iter = 2"),
    );
    let status = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--strict")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(3));
    assert_eq!(read_manifest(&out).unwrap().exit_code, 3);
}

fn random_field(rng: &mut ChaCha8Rng) -> FieldSpec {
    match rng.random_range(0..3) {
        0 => FieldSpec::Constant(rng.random_range(0.0..2.0)),
        1 => FieldSpec::Polynomial(
            (0..rng.random_range(1..4))
                .map(|_| rng.random_range(0.0..1.0))
                .collect(),
        ),
        _ => FieldSpec::Tabulated(vec![
            (0.0, rng.random_range(0.0..1.0)),
            (1.0, rng.random_range(0.0..1.0)),
        ]),
    }
}

fn random_config(rng: &mut ChaCha8Rng) -> RunConfig {
    let mut c = parse_config(SMALL).unwrap();
    c.problem.n = rng.random_range(1..=3);
    c.problem.cells = rng.random_range(8..300);
    c.problem.r = rng.random_bool(0.5).then(|| rng.random_range(0.0..2.0));
    c.problem.f = random_field(rng);
    c.problem.g = random_field(rng);
    c.problem.coefficient = match rng.random_range(0..4) {
        0 => CoefficientSpec::Constant {
            value: rng.random_range(0.1..3.0),
        },
        1 => CoefficientSpec::Rational {
            alpha: rng.random_range(0.5..2.0),
            beta: 1.0,
            gamma: rng.random_range(0.0..1.0),
            domain: (-0.5, rng.random_range(1.0..20.0)),
        },
        2 => CoefficientSpec::PiecewiseLinear {
            points: vec![(0.0, 2.0), (1.0, rng.random_range(0.5..2.0)), (3.0, 0.4)],
        },
        _ => CoefficientSpec::Staircase {
            c_min: 0.1,
            c_max: 0.5,
            a0: 1.0,
            n1: 3,
        },
    };
    c.run.mode = [Mode::Stationary, Mode::PdRoots, Mode::Branch, Mode::Parabolic][rng.random_range(0..4)];
    c.run.tol = 10f64.powi(-rng.random_range(6..13));
    c.run.dt = rng.random_bool(0.5).then(|| rng.random_range(1e-4..1e-2));
    c.run.t_final = rng.random_range(0.1..5.0);
    c.constants.c1 = rng.random_bool(0.5).then(|| rng.random_range(0.1..1.0));
    c.constants.k_c = rng.random_bool(0.5).then(|| rng.random_range(0.1..5.0));
    c
}

#[test]
fn twenty_configs_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let c = random_config(&mut rng);
        let text = c.to_toml();
        let back = parse_config(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }
}
