use std::path::PathBuf;
use std::process::{Command, Output};

use deltaform::tower::Tower;
use deltaform_cli::{parse_beta, prepare, RunConfig, SCHEMA_VERSION};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltaform")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("deltaform-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn tower_info_reports_n_of_pi() {
    for (p, m, n) in [("7", "1", 0), ("3", "1", 0), ("7", "0", -1), ("5", "0", -1)] {
        let (code, r) = report(&["tower-info", "--p", p, "--l", "2", "--m", m]);
        assert_eq!(code, 0, "p = {p}, m = {m}");
        assert_eq!(r["schema"], SCHEMA_VERSION);
        let c = check(&r, "N(pi)");
        assert_eq!(c["details"]["formula"], n);
        assert_eq!(c["details"]["brute_force"], n);
    }
    // The pi-adic count for e = 2 < log 11.
    let (_, r) = report(&["tower-info", "--p", "11", "--l", "2", "--m", "1"]);
    assert_eq!(check(&r, "N(pi)")["details"]["pi_adic"], -1);
    let (_, r) = report(&["tower-info", "--p", "7", "--l", "2", "--m", "2"]);
    let table = &check(&r, "Frobenius table")["details"]["lifts"];
    assert_eq!(table.as_array().unwrap().len(), 2);
    assert!(check(&r, "monomial independence")["passed"].as_bool().unwrap());
}

#[test]
fn equal_lifts_fail_the_independence_check() {
    let out = run(&["tower-info", "--gammas", "0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("monomial independence"));
}

#[test]
fn st_identities_are_zero_polynomials() {
    let (code, r) = report(&["verify", "st-identities"]);
    assert_eq!(code, 0);
    let rel: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["name"] != "catalog size").collect();
    assert_eq!(rel.len(), 14);
    assert!(rel.iter().all(|c| c["details"]["status"] == "zero polynomial"));
}

#[test]
fn asd_on_the_first_catalog_curve() {
    let (code, r) = report(&["verify", "asd", "--curve", "catalog#1", "--mu", "11", "--nu", "1", "--nmax", "40"]);
    assert_eq!(code, 0);
    let lines: Vec<&Value> =
        r["checks"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().starts_with("N=")).collect();
    assert_eq!(lines.len(), 40);
    assert!(lines.iter().all(|c| c["passed"] == true && c["details"]["certificate"].as_i64().unwrap() >= 2));
    assert_eq!(check(&r, "mutation")["passed"], true);
}

#[test]
fn gamma_minors_at_pi() {
    let (code, r) = report(&["verify", "gamma", "--beta", "pi"]);
    assert_eq!(code, 0);
    assert_eq!(check(&r, "6x6 minors")["details"]["valuations"].as_array().unwrap().len(), 7);
    assert_eq!(check(&r, "upper left 5x5 minor")["passed"], true);
}

#[test]
fn validation_errors_exit_with_2() {
    for args in [
        vec!["tower-info", "--p", "9", "--l", "2", "--m", "1"],
        vec!["tower-info", "--p", "7"],
        vec!["verify", "nonsense"],
        vec!["verify", "gamma", "--beta", "pie"],
        vec!["verify", "gamma", "--beta", "1"],
        vec!["verify", "asd", "--mu", "1", "--nu", "1"],
        vec!["verify", "asd", "--curve", "5ss"],
        vec!["verify", "asd", "--curve", "catalog#99"],
        vec!["verify", "pairing", "--mu", "13", "--nu", "1"],
        vec!["verify", "gm", "--config", "/nonexistent/deltaform.toml"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn reports_are_deterministic() {
    let a = scratch("a.json");
    let b = scratch("b.json");
    for path in [&a, &b] {
        let out = run(&["verify", "all", "--seed", "7", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let all: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(all.as_array().unwrap().len(), deltaform_cli::SUITES.len());
}

#[test]
fn config_file_and_flag_overrides() {
    let cfg = scratch("run.toml");
    std::fs::write(&cfg, "gammas = [1, 3]\nseed = 11\n\n[tower]\np = 7\nl = 2\nm = 2\nK = 10\n").unwrap();
    let (code, r) = report(&["verify", "gm", "--config", cfg.to_str().unwrap(), "--seed", "12"]);
    assert_eq!(code, 0);
    assert_eq!(r["parameters"]["seed"], 12);
    assert_eq!(r["parameters"]["gammas"], serde_json::json!([1, 3]));
    assert_eq!(r["parameters"]["tower"]["K"], 10);
    assert_eq!(r["parameters"]["tower"]["f"], Value::Null);

    let cat = scratch("curves.toml");
    std::fs::write(&cat, "[[curve]]\nlabel = \"mine\"\np = 7\na4 = 3\na6 = 2\n").unwrap();
    let (code, r) = report(&["verify", "crystalline", "--catalog", cat.to_str().unwrap(), "--curve", "mine"]);
    assert_eq!(code, 0);
    assert_eq!(r["parameters"]["curves"][0]["label"], "mine");

    std::fs::write(&cfg, "nonsense = 1\n").unwrap();
    assert_eq!(run(&["verify", "gm", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn library_api() {
    let t = Tower::new(7, 2, 2, 2, 8).unwrap();
    assert!(t.eq(&parse_beta(&t, "pi").unwrap(), &t.pi()));
    assert!(t.eq(&parse_beta(&t, "3*pi^2").unwrap(), &t.mul(&t.from_int(3), &t.pi_pow(2))));
    assert!(t.eq(&parse_beta(&t, "-14").unwrap(), &t.from_int(-14)));
    assert!(parse_beta(&t, "pi^").is_err() && parse_beta(&t, "x*pi").is_err());

    let base = RunConfig::from_toml("mu = \"11\"\nnmax = 5\n").unwrap();
    let merged = base.merge(RunConfig { nmax: Some(6), ..RunConfig::default() });
    assert_eq!((merged.mu.as_deref(), merged.nmax), (Some("11"), Some(6)));
    assert!(prepare("nonsense", &merged).is_err());
    let r = prepare("n-pi", &RunConfig::default()).unwrap().run().unwrap();
    assert!(r.passed && r.first_failure.is_none());
}
