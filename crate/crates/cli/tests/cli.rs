use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bpfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpfem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn convergence(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "convergence",
        "--example",
        "1",
        "--element",
        "p1",
        "--mesh",
        "tri-uniform",
        "--levels",
        "5,9",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    bpfem(&args)
}

#[test]
fn convergence_writes_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = convergence(dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("table_ex1_p1_tri-uniform_bpm.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,Itr,err_L2,EOC,err_h,EOC,norm_s_minus,EOC");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("5,"));
    assert!(lines[2].starts_with("9,"));
    // The first row has no rate.
    assert_eq!(lines[1].split(',').nth(3), Some(""));
    assert!(stdout(&out).contains("N,Itr"));
    assert!(dir.path().join("run_ex1_p1_tri-uniform_bpm.json").exists());
}

#[test]
fn convergence_output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(convergence(a.path(), &[]).status.success());
    assert!(convergence(b.path(), &[]).status.success());
    let name = "table_ex1_p1_tri-uniform_bpm.csv";
    assert_eq!(
        fs::read(a.path().join(name)).unwrap(),
        fs::read(b.path().join(name)).unwrap()
    );
}

#[test]
fn non_convergence_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let out = convergence(dir.path(), &["--max-iter", "1", "--tol", "1e-30"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("table_ex1_p1_tri-uniform_bpm.csv")).unwrap();
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("NC")));
}

#[test]
fn pretty_table_has_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = convergence(dir.path(), &["--pretty"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("err_L2"));
    assert!(!text.contains("N,Itr"));
}

#[test]
fn layers_writes_fields_sections_and_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpfem(&[
        "layers",
        "--example",
        "3",
        "--element",
        "p1",
        "--mesh",
        "tri-alt",
        "--levels",
        "5",
        "--samples",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".vtk")));
    assert!(names
        .iter()
        .any(|n| n.starts_with("section_") && n.contains("_x0.9_")));
    assert!(names.iter().any(|n| n.starts_with("table_iterations_")));
    let section = names.iter().find(|n| n.starts_with("section_")).unwrap();
    let text = fs::read_to_string(dir.path().join(section)).unwrap();
    assert_eq!(text.lines().next(), Some("t,x,y,value"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn layers_rejects_example_without_layers() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpfem(&[
        "layers",
        "--example",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn convergence_rejects_example_without_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpfem(&[
        "convergence",
        "--example",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn invalid_arguments_fail() {
    assert!(!bpfem(&["convergence", "--element", "p7"]).status.success());
    assert!(
        !bpfem(&["convergence", "--element", "q1", "--mesh", "tri-alt"])
            .status
            .success()
    );
    assert!(!bpfem(&["mesh-info", "--mesh", "hex"]).status.success());
    assert!(!bpfem(&["mesh-info", "--levels", "2"]).status.success());
}

fn mesh_info(mesh: &str) -> String {
    let out = bpfem(&["mesh-info", "--mesh", mesh, "--levels", "5"]);
    assert!(out.status.success());
    stdout(&out)
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.trim().strip_prefix(key))
        .and_then(|r| r.trim().trim_end_matches(" deg").parse().ok())
        .unwrap_or_else(|| panic!("missing {key} in {text}"))
}

#[test]
fn mesh_info_counts() {
    let quad = mesh_info("quad");
    assert_eq!(field(&quad, "vertices:"), 25.0);
    assert_eq!(field(&quad, "cells:"), 16.0);
    let uniform = mesh_info("tri-uniform");
    assert_eq!(field(&uniform, "cells:"), 32.0);
    assert!((field(&uniform, "max angle:") - 90.0).abs() < 1e-9);
    assert_eq!(field(&uniform, "delaunay violations:"), 0.0);
    let perturbed = mesh_info("tri-perturbed");
    assert!(field(&perturbed, "delaunay violations:") >= 1.0);
    assert!(field(&perturbed, "max angle:") > 90.0);
}
