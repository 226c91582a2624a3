use std::path::{Path, PathBuf};

use semiwave::io::{parse_config, parse_config_str, sweep_points, Method};
use semiwave::Error;

fn shipped() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

#[test]
fn shipped_configs_parse() {
    let files = shipped();
    assert!(files.len() >= 5);
    for f in files {
        let cfg = parse_config(&f).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        sweep_points(&cfg).unwrap();
    }
}

#[test]
fn reference_config_echoes_the_reference_problem() {
    let f = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sine5.toml");
    let cfg = parse_config(&f).unwrap();
    assert_eq!(cfg.method, Method::Lsq);
    assert_eq!(cfg.grid.nx, 63);
    assert_eq!(cfg.nonlinearity.family, "sine");
    assert_eq!(cfg.nonlinearity.params, vec![5.0]);
    assert_eq!(cfg.setup().unwrap().nt(), 178);
}

#[test]
fn parse_errors_name_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("bad.toml");
    std::fs::write(&f, "[solver]\nm = \"two\"\n").unwrap();
    match parse_config(&f).unwrap_err() {
        Error::Parse { location, .. } => {
            assert!(location.starts_with(&f.display().to_string()), "{location}");
            assert!(location.ends_with(":2:5"), "{location}");
        }
        e => panic!("{e}"),
    }
}

#[test]
fn declared_constants_reach_the_nonlinearity() {
    let cfg = parse_config_str(
        "[nonlinearity]\nfamily = \"sine\"\nparams = [2.0]\ns = 0.5\nholder = 3.0\nalpha = 2.0\nbeta = 0.0\n",
        Path::new("."),
        "t",
    )
    .unwrap();
    let nl = cfg.build_nonlinearity().unwrap();
    assert_eq!(nl.s(), 0.5);
    assert_eq!(nl.holder_seminorm(), 3.0);
    assert_eq!(nl.growth().unwrap().alpha, 2.0);
}

#[test]
fn profile_errors_name_the_data_field() {
    let e = parse_config_str("[data]\ntarget = \"bump(0.5)\"\n", Path::new("."), "t").unwrap_err();
    match e {
        Error::Validation { field, .. } => assert_eq!(field, "data.target"),
        e => panic!("{e}"),
    }
}
