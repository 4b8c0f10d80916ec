//! End-to-end runs of the `homesh` binary: artifact emission, config-file
//! merging, and the exit-code contract.

use std::process::{Command, Output};

use homesh::io::write_mesh;
use homesh::mesh::generate_unit_square_quad_mesh;
use homesh::Coord2;

fn homesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homesh"))
        .args(args)
        .output()
        .expect("failed to launch binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("killed by signal")
}

#[test]
fn adapt_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_mesh = dir.path().join("adapted.homesh");
    let report = dir.path().join("report.txt");
    let svg_prefix = dir.path().join("fig");
    let out = homesh(&[
        "--mesh",
        "unit-square:4:2",
        "--metric",
        "identity",
        "--out",
        out_mesh.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--svg",
        svg_prefix.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("converged = true"), "stdout: {stdout}");

    assert!(out_mesh.exists());
    let report_text = std::fs::read_to_string(&report).unwrap();
    assert!(report_text.contains("converged = true"));
    assert!(report_text.contains("final_energy = "));
    for suffix in ["-before.svg", "-after.svg"] {
        let path = format!("{}{suffix}", svg_prefix.to_str().unwrap());
        let svg = std::fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<svg"), "{path} is not an svg");
    }
}

#[test]
fn config_file_entries_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(
        &config,
        "# small smoke run\nmesh = unit-square:3:1\nmetric = ring\nmax_sweeps = 40\n",
    )
    .unwrap();
    let report = dir.path().join("report.txt");
    let out = homesh(&[
        "--config",
        config.to_str().unwrap(),
        "--metric",
        "identity",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    // The identity override makes the uniform mesh already optimal, so the
    // run stops long before the configured sweep cap.
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("converged = true"), "report: {text}");
    let sweeps: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("sweeps_run = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(sweeps <= 2, "ran {sweeps} sweeps");
}

#[test]
fn malformed_mesh_spec_is_a_usage_error() {
    let out = homesh(&["--mesh", "unit-square:four:2"]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_mesh_file_is_an_io_error() {
    let out = homesh(&["--mesh", "no-such-mesh.homesh"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn tangled_mesh_is_a_validity_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut mesh = generate_unit_square_quad_mesh(2, 1).unwrap();
    // Drag the interior node far outside the square to invert its elements.
    let center = (0..mesh.n_nodes())
        .find(|&i| !mesh.is_frozen(i) && mesh.binding(i).is_none())
        .unwrap();
    mesh.set_node_raw(center, Coord2::new(2.5, 0.5));
    let path = dir.path().join("tangled.homesh");
    write_mesh(&mesh, &path).unwrap();

    let out = homesh(&["--mesh", path.to_str().unwrap()]);
    assert_eq!(
        code(&out),
        3,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn help_is_not_an_error() {
    let out = homesh(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("--metric"));
}
