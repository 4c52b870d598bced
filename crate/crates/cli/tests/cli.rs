use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kinetic_net::hermite::build_quadrature;
use kinetic_net_cli::config::{parse_simulate, BoundaryChoice, RunConfig};
use kinetic_net_cli::{CliError, EXIT_CONFIG, EXIT_NUMERICAL};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinetic-net"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const SIM: &str = "\
# two edges meeting at the junction
[system]
N = 2
collision = q1
boundary = network
edges = 2
epsilon = 0.1

[grid]
final_time = 0.4
cells = 80
length = 3.0
snapshots = 0, 0.2, 0.4

[initial]
center = 1.2
width = 0.8
amplitudes = 1, 0.3
";

#[test]
fn quadrature_csv() {
    let o = cli(&["quadrature", "--N", "2"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 4);
    let q = build_quadrature(2).unwrap();
    for (k, row) in r.iter().enumerate() {
        assert_eq!(row[0], k.to_string());
        assert_eq!(row[1].parse::<f64>().unwrap(), q.nodes[k]);
        assert_eq!(row[2].parse::<f64>().unwrap(), q.full_weights()[k]);
        assert!(row[3].parse::<f64>().unwrap() < 1e-13);
    }
    // two distinct weights
    assert_eq!(r[0][2], r[2][2]);
    assert_eq!(r[1][2], r[3][2]);
    assert_ne!(r[0][2], r[1][2]);
}

#[test]
fn check_reports_strict_dissipativity() {
    let o = cli(&["check", "--N", "3", "--edges", "3"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    let b2 = r
        .iter()
        .find(|row| row[0] == "dissipativity" && row[1] == "B2")
        .unwrap();
    assert_eq!(
        (b2[2].as_str(), b2[3].as_str(), b2[5].as_str()),
        ("3", "3", "true")
    );
    assert!(b2[4].parse::<f64>().unwrap() < 0.0);
    let b1 = r
        .iter()
        .find(|row| row[0] == "dissipativity" && row[1] == "B1")
        .unwrap();
    assert_eq!(b1[5], "false");
    for name in ["orthonormality", "orthogonality", "spectral"] {
        let row = r.iter().find(|row| row[0] == name).unwrap();
        assert!(row[4].parse::<f64>().unwrap() < 1e-12, "{name}");
    }
    let o = cli(&["check", "--N", "3", "--edges", "2"]);
    let r = rows(&stdout(&o));
    let b2 = r.iter().find(|row| row[1] == "B2").unwrap();
    assert_eq!(b2[5], "false");
}

#[test]
fn usage_errors_exit_two() {
    let o = cli(&["quadrature"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["quadrature", "--N", "0"]).status.code(), Some(2));
    assert_eq!(
        cli(&["check", "--N", "2", "--edges", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cli(&["converge", "--case", "q3-ibvp1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cli(&["converge", "--case", "q1-ibvp1", "--eps-list", "0.1,0.05"])
            .status
            .code(),
        Some(2)
    );
    assert!(cli(&["--help"]).status.success());
}

#[test]
fn error_classes_map_to_exit_codes() {
    let c: CliError = kinetic_net::Error::config("x").into();
    assert_eq!(c.exit_code(), EXIT_CONFIG);
    let n: CliError = kinetic_net::Error::numerical("x").into();
    assert_eq!(n.exit_code(), EXIT_NUMERICAL);
}

#[test]
fn config_grammar() {
    let c = parse_simulate(SIM).unwrap();
    assert_eq!(c.n_half, 2);
    assert_eq!(c.boundary, BoundaryChoice::Network);
    assert_eq!(c.edge_count(), 2);
    assert_eq!(c.cells, Some(80));
    assert_eq!(c.snapshots, vec![0.0, 0.2, 0.4]);
    assert_eq!(c.initial[0].amplitudes, vec![1.0, 0.3]);
    assert_eq!(c.cfl, 0.9);
    assert_eq!(c.scheme, "upwind");
    RunConfig::Simulate(c).validate().unwrap();

    let minimal = parse_simulate("[system]\nN = 3\nepsilon = 0.05\n").unwrap();
    assert_eq!(minimal.snapshots, vec![0.0, 1.0]);
    assert_eq!(minimal.boundary, BoundaryChoice::B1);
    assert!(minimal.initial.is_empty());

    let per_edge = parse_simulate(
        "[system]\nN = 2\nepsilon = 0.1\nboundary = network\n[initial]\ncenter.2 = 1\nwidth.2 = 0.5\namplitudes.2 = 0.2, 0\n",
    )
    .unwrap();
    assert_eq!(per_edge.per_edge[&2][0].width, 0.5);
    let bad_edge = parse_simulate(
        "[system]\nN = 2\nepsilon = 0.1\nboundary = network\nedges = 2\n[initial]\ncenter.2 = 1\nwidth.2 = 0.5\namplitudes.2 = 0.2, 0\n",
    )
    .unwrap();
    assert!(RunConfig::Simulate(bad_edge).validate().is_err());

    for bad in [
        "[system]\nN = 3\nepsilon = 0.1\nspeed = 2\n",
        "[system]\nN = 3\nepsilon = 0.1\n[mesh]\ncells = 4\n",
        "[system]\nepsilon = 0.1\n",
        "[system]\nN = three\nepsilon = 0.1\n",
        "[system]\nN = 3\nepsilon = 0.1\n[initial]\ncenter = 1\n",
        "[system]\nN = 3\nepsilon = 0.1\n[initial]\nheight = 1\n",
        "N = 3\n",
    ] {
        assert!(parse_simulate(bad).is_err(), "{bad}");
    }
    let wrong_block = parse_simulate(
        "[system]\nN = 3\nepsilon = 0.1\n[initial]\ncenter = 1\nwidth = 1\namplitudes = 1\n",
    )
    .unwrap();
    assert!(RunConfig::Simulate(wrong_block).validate().is_err());
}

#[test]
fn readme_config_example_parses() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```ini\n").unwrap() + 7;
    let text = &readme[start..start + readme[start..].find("```").unwrap()];
    let c = parse_simulate(text).unwrap();
    assert_eq!((c.n_half, c.edges, c.cells), (3, 3, Some(400)));
    assert_eq!(c.per_edge[&1][0].amplitudes, vec![0.5, 0.2]);
    RunConfig::Simulate(c).validate().unwrap();
    // a `;` without leading whitespace stays part of the value
    assert!(parse_simulate("[system]\nN = 3;x\nepsilon = 0.1\n").is_err());
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.ini");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_is_deterministic_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SIM);
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    for d in [&a, &b] {
        let o = cli(&[
            "simulate",
            "--config",
            &cfg,
            "--output",
            d.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest = a.join("manifest.json");
    assert!(cli(&[
        "replay",
        manifest.to_str().unwrap(),
        "--output",
        c.to_str().unwrap()
    ])
    .status
    .success());
    for name in [
        "snapshot_000.csv",
        "snapshot_001.csv",
        "snapshot_002.csv",
        "snapshots.csv",
        "summary.csv",
    ] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
        assert_eq!(read(&a, name), read(&c, name), "{name}");
    }
    let snap = read(&a, "snapshot_002.csv");
    assert!(snap.starts_with("x,e0_g0,e0_g1,e0_g2,e0_g3,e1_g0,"));
    assert_eq!(snap.lines().count(), 81);
    let m: serde_json::Value = serde_json::from_str(&read(&a, "manifest.json")).unwrap();
    assert_eq!(m["config"]["subcommand"], "simulate");
    assert_eq!(m["config"]["epsilon"], 0.1);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));

    // mass only leaves through the far end
    let summary = read(&a, "summary.csv");
    let audit: f64 = summary
        .lines()
        .find(|l| l.starts_with("mass_audit"))
        .unwrap()[11..]
        .parse()
        .unwrap();
    assert!(audit < 1e-12);
}

#[test]
fn simulate_rejects_bad_config_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &SIM.replace("cells = 80", "cells = 80\nbogus = 1"),
    );
    let o = cli(&[
        "simulate",
        "--config",
        &cfg,
        "--output",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    assert!(!tmp.path().join("o").exists());
    let missing = tmp.path().join("nope.ini");
    assert_eq!(
        cli(&["simulate", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn asymptotic_writes_composite_and_layers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("asy");
    let o = cli(&[
        "asymptotic",
        "--case",
        "q1-ibvp2",
        "--eps",
        "0.05",
        "--N",
        "2",
        "--times",
        "0,0.5",
        "--T",
        "0.5",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e = read(&out, "expansion_001.csv");
    assert!(e.starts_with("x,g0,g1,g2,g3\n"));
    let k = read(&out, "kinetic_001.csv");
    assert!(k.starts_with("y,"));
    let diag = rows(&read(&out, "diagnostics.csv"));
    assert_eq!(diag.len(), 2);
    for r in diag {
        assert!(r[2].parse::<f64>().unwrap() < 1e-8);
    }
}

#[test]
fn converge_manifest_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = cli(&[
        "converge",
        "--case",
        "q1-ibvp1",
        "--N",
        "2",
        "--eps-list",
        "0.2,0.1,0.05",
        "--T",
        "0.5",
        "--plot",
        "--no-richardson",
        "--output",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(cli(&[
        "replay",
        a.join("manifest.json").to_str().unwrap(),
        "--output",
        b.to_str().unwrap()
    ])
    .status
    .success());
    for name in [
        "rates.csv",
        "fits.csv",
        "checks.csv",
        "rates.gp",
        "manifest.json",
    ] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    let rates = rows(&read(&a, "rates.csv"));
    assert_eq!(rates.len(), 3);
    let h1: Vec<f64> = rates.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(h1[2] < h1[0]);
    assert!(read(&a, "rates.gp").contains("'rates.csv'"));
}
