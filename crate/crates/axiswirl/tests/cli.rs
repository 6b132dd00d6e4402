//! Binary-level tests of the CLI contract: exit codes, strict mode,
//! blow-up handling, verify filters, and the Hardy mutation hook.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_axiswirl"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("axiswirl_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const ZERO_CONFIG: &str = r#"
eps = 0.1
r_out = 1.0
half_height = 0.5
nr = 16
nz = 16
nu = 1.0
dt = 5e-4
t_final = 0.01
r0 = 0.25
cadence = 5
"#;

#[test]
fn zero_data_run_exits_zero_with_zero_monitors() {
    let dir = scratch("zero");
    let cfg = write_config(&dir, ZERO_CONFIG);
    let out = dir.join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let csv = std::fs::read_to_string(out.join("monitors.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,"));
    for line in lines {
        for field in line.split(',').skip(1) {
            let v: f64 = field.parse().unwrap();
            assert_eq!(v, 0.0, "nonzero monitor in zero run: {line}");
        }
    }
    assert!(out.join("estimates.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_violating_cutoff_constraint_exits_one() {
    let dir = scratch("badcfg");
    let cfg = write_config(&dir, &ZERO_CONFIG.replace("r0 = 0.25", "r0 = 0.05"));
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(
        err.contains("eps < r0"),
        "stderr must name the constraint: {err}"
    );
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn unknown_config_key_exits_one() {
    let dir = scratch("unknown");
    let cfg = write_config(&dir, &format!("{ZERO_CONFIG}\nmystery_knob = 1\n"));
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("mystery_knob"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn strict_mode_flags_swirl_restriction() {
    // swirl amplitude far above (5/4)^{1/4} nu inside the cut-off plateau
    let dir = scratch("strict");
    let body = format!(
        "{ZERO_CONFIG}\nstrict = true\nu0_kind = \"gaussian_swirl\"\nu0_amplitude = 5.0\nu0_center_r = 0.2\nu0_sigma = 0.2\n"
    );
    let cfg = write_config(&dir, &body);
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(
        err.contains("swirl_5_10"),
        "stderr must name the restriction: {err}"
    );
    assert!(err.contains("first violation"), "{err}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn blow_up_aborts_with_exit_three_and_dumps_state() {
    // advection-dominated, wildly under-resolved: centered advection is
    // unstable here and the run must abort rather than emit garbage
    let dir = scratch("blowup");
    let body = r#"
eps = 0.1
r_out = 1.0
half_height = 0.5
nr = 16
nz = 16
nu = 0.01
dt = 0.05
t_final = 5.0
r0 = 0.25
cadence = 5
chi0_kind = "vortex_ring"
chi0_amplitude = 1000.0
chi0_center_r = 0.5
chi0_center_z = 0.0
chi0_sigma = 0.2
"#;
    let cfg = write_config(&dir, body);
    let out = dir.join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(String::from_utf8_lossy(&output.stderr).contains("blow-up detected at t="));
    // the last finite state is still dumped
    assert!(out.join("u.csv").exists());
    assert!(out.join("monitors.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_only_filter_selects_groups() {
    let output = bin()
        .args(["verify", "--only", "iteration,restriction"])
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("iteration_5_27"));
    assert!(stdout.contains("restriction_crossing"));
    assert!(
        !stdout.contains("hardy_2_16"),
        "hardy group must be filtered out"
    );
    // unknown group name is a usage error
    let output = bin()
        .args(["verify", "--only", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn verify_hardy_mutation_exits_four_naming_2_16() {
    let output = bin()
        .args(["verify", "--only", "hardy", "--hardy-scale", "0.9"])
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    let line = stdout
        .lines()
        .find(|l| l.starts_with("hardy_2_16"))
        .expect("hardy_2_16 row in the table");
    assert!(
        line.contains("FAIL"),
        "hardy_2_16 must fail under the 0.9x constant: {line}"
    );
}

#[test]
fn worker_threads_do_not_change_results() {
    let dir = scratch("threads");
    let body = format!(
        "{ZERO_CONFIG}\nchi0_kind = \"vortex_ring\"\nchi0_amplitude = 0.3\nchi0_center_r = 0.5\nchi0_center_z = 0.0\nchi0_sigma = 0.2\n"
    );
    let cfg = write_config(&dir, &body);
    let run_with = |out: &Path, threads: &str| {
        let status = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let out1 = dir.join("t1");
    let out4 = dir.join("t4");
    run_with(&out1, "1");
    run_with(&out4, "4");
    for name in ["monitors.csv", "chi.csv", "psi.csv"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out4.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between thread counts");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_writes_table() {
    let dir = scratch("sweep");
    let cfg = write_config(&dir, ZERO_CONFIG);
    let out = dir.join("out");
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--r0", "0.2,0.25", "--nu", "1.0"])
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3, "header + 2 rows: {table}");
    assert!(table.starts_with("r0,nu,"));
    let _ = std::fs::remove_dir_all(&dir);
}
