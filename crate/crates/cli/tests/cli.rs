use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn netgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netgrid")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TRIANGLE: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n\
$Elements\n1\n1 2 2 1 1 1 2 3\n$EndElements\n";

const T_JUNCTION: &str =
    "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n5\n1 0 0 0\n2 1 0 0\n3 0.5 1 0\n4 0.5 -1 0\n5 0.5 0 1\n$EndNodes\n\
$Elements\n3\n1 2 2 1 1 1 2 3\n2 2 2 1 1 1 2 4\n3 2 2 1 1 1 2 5\n$EndElements\n";

/// Values of the VTK section starting with `header`, `count` of them.
fn vtk_section(text: &str, header: &str, count: usize) -> Vec<f64> {
    let start = text.find(header).unwrap_or_else(|| panic!("no {header}"));
    text[start..]
        .lines()
        .skip_while(|l| !l.starts_with("LOOKUP_TABLE") && !l.starts_with("POINTS"))
        .skip(1)
        .flat_map(|l| l.split_whitespace().map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .take(count)
        .collect()
}

fn cell_count(vtk: &str) -> usize {
    vtk.lines().find_map(|l| l.strip_prefix("CELLS ")).unwrap().split_whitespace().next().unwrap().parse().unwrap()
}

fn summary_rows(dir: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(dir.join("summary.txt"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect()
}

#[test]
fn info_reports_t_junction() {
    let tmp = TempDir::new().unwrap();
    let report = stdout(&netgrid(&["info", &write(tmp.path(), "t.msh", T_JUNCTION)]));
    assert!(report.contains("codim 0: 3"));
    assert!(report.contains("junction facets: 1"));
    assert!(report.contains("multiplicity 3: 1"));
    assert!(report.contains("boundary facets: 6"));
}

#[test]
fn info_single_triangle() {
    let tmp = TempDir::new().unwrap();
    let report = stdout(&netgrid(&["info", &write(tmp.path(), "t.msh", TRIANGLE)]));
    assert!(report.contains("boundary facets: 3"));
    assert!(report.contains("junction facets: 0"));
}

#[test]
fn empty_file_is_a_parse_error() {
    let tmp = TempDir::new().unwrap();
    let o = netgrid(&["info", &write(tmp.path(), "e.msh", "")]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[parse]:"), "{err}");
}

#[test]
fn missing_file_is_an_io_error() {
    let o = netgrid(&["info", "/nonexistent/mesh.msh"]);
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error[io]:"));
}

#[test]
fn refine_counts_cells() {
    let tmp = TempDir::new().unwrap();
    let square = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/tri3.msh");
    for (steps, cells) in [("0", 2), ("1", 8)] {
        let out = tmp.path().join(format!("r{steps}.vtk"));
        stdout(&netgrid(&["refine", square.to_str().unwrap(), "--steps", steps, "--out", out.to_str().unwrap()]));
        assert_eq!(cell_count(&fs::read_to_string(&out).unwrap()), cells);
    }
}

#[test]
fn wavelet_refinement_hits_the_peak() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("w.vtk");
    stdout(&netgrid(&["refine", "--parametrization", "wavelet", "--steps", "5", "--out", out.to_str().unwrap()]));
    let vtk = fs::read_to_string(&out).unwrap();
    assert_eq!(cell_count(&vtk), 2 * 4usize.pow(5));
    assert!(vtk.lines().any(|l| l == "0 0 0.2"));
}

#[test]
fn unknown_parametrization_is_rejected() {
    let o = netgrid(&["refine", "--parametrization", "sphere", "--out", "/tmp/x.vtk"]);
    assert!(!o.status.success());
}

#[test]
fn flow_chain_pressure_is_linear() {
    let tmp = TempDir::new().unwrap();
    let s = write(
        tmp.path(),
        "s.txt",
        "chain_elements = 16\nl_p = 0\ninflow_tags = 1\noutflow_tags = 2\ninflow_velocity = 1e-3\nadaptive = false\nsteps = 1\n",
    );
    stdout(&netgrid(&["flow", &s, "--out", tmp.path().join("out").to_str().unwrap()]));
    let vtk = fs::read_to_string(tmp.path().join("out/step_0000.vtk")).unwrap();
    let p = vtk_section(&vtk, "SCALARS pressure", 16);
    let range = p[0] - p[15];
    assert!(range > 0.0);
    for w in p.windows(3) {
        assert!((w[0] - 2.0 * w[1] + w[2]).abs() <= 1e-10 * range);
    }
}

#[test]
fn flow_closed_network_conserves_mass() {
    let tmp = TempDir::new().unwrap();
    let s = write(
        tmp.path(),
        "s.txt",
        "chain_elements = 32\nl_p = 1e-11\nd_e = 1e-9\npulse_min = 2e-4\npulse_max = 5e-4\nadaptive = true\ndt = 1e-2\nsteps = 10\n",
    );
    let out = tmp.path().join("out");
    stdout(&netgrid(&["flow", &s, "--out", out.to_str().unwrap()]));
    let rows = summary_rows(&out);
    assert_eq!(rows.len(), 11);
    for w in rows.windows(2) {
        assert!((w[1][3] - w[0][3]).abs() <= 1e-10 * w[0][3]);
    }
}

#[test]
fn flow_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let s = scenarios().join("pulse_chain.txt");
    let run = |name: &str| {
        let out = tmp.path().join(name);
        stdout(&netgrid(&["flow", s.to_str().unwrap(), "--out", out.to_str().unwrap(), "--steps", "5"]));
        let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>()
    };
    let a = run("a");
    assert_eq!(a.len(), 7);
    assert_eq!(a, run("b"));
}

#[test]
fn sequential_flag_gives_the_same_bytes() {
    let tmp = TempDir::new().unwrap();
    let s = scenarios().join("pulse_chain.txt");
    let s = s.to_str().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    stdout(&netgrid(&["flow", s, "--out", a.to_str().unwrap(), "--steps", "3"]));
    stdout(&netgrid(&["--sequential", "flow", s, "--out", b.to_str().unwrap(), "--steps", "3"]));
    assert_eq!(fs::read(a.join("summary.txt")).unwrap(), fs::read(b.join("summary.txt")).unwrap());
}

#[test]
fn scenario_errors_list_keys() {
    let tmp = TempDir::new().unwrap();
    let s = write(tmp.path(), "bad.txt", "mu = -1\nflux = 3\n");
    let o = netgrid(&["flow", &s, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[scenario]:"));
    assert!(err.contains("flux") && err.contains("mu"), "{err}");
}

#[test]
fn roots_without_growth_keep_eight_elements() {
    let tmp = TempDir::new().unwrap();
    let s = write(tmp.path(), "r.txt", "branch_probability = 0\nelongation_probability = 0\nsteps = 4\n");
    let out = tmp.path().join("out");
    stdout(&netgrid(&["roots", &s, "--out", out.to_str().unwrap()]));
    assert!(summary_rows(&out).iter().all(|r| r[1] == 8.0));
}

#[test]
fn roots_are_seeded() {
    let tmp = TempDir::new().unwrap();
    let s = scenarios().join("vertical_root.txt");
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        stdout(&netgrid(&[
            "roots",
            s.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--steps",
            "6",
        ]));
        fs::read_to_string(out.join("summary.txt")).unwrap()
    };
    let a = run("a", "11");
    assert_eq!(a, run("b", "11"));
    assert_ne!(a, run("c", "12"));
    let counts: Vec<f64> = summary_rows(&tmp.path().join("a")).iter().map(|r| r[1]).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
}
