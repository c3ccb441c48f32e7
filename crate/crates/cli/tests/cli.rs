use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use apstat_cli::{run, Command, Overrides};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("apstat-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

fn run_into(cmd: Command, config: &str, name: &str) -> PathBuf {
    let out = scratch(name);
    let o = Overrides { out_dir: Some(out.clone()), ..Default::default() };
    run(cmd, &configs().join(config), &o).unwrap();
    out
}

fn first_line(p: &Path) -> String {
    fs::read_to_string(p).unwrap().lines().next().unwrap().to_string()
}

fn exit_code(args: &[&str]) -> i32 {
    Proc::new(env!("CARGO_BIN_EXE_apstat")).args(args).output().unwrap().status.code().unwrap()
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let d = scratch(name);
    fs::create_dir_all(&d).unwrap();
    let p = d.join("config.toml");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn headers() {
    let cases: [(Command, &str, &str, &str); 10] = [
        (Command::Exponent, "exponent.toml", "exponent.csv", "z,re,im"),
        (Command::Exponent, "exponent.toml", "section_exponent.csv", "z,re,im,error,tail_bound"),
        (Command::DomainCheck, "domain.toml", "rajput_rosinski.csv", "z,U,V,gauss,total"),
        (Command::Metric, "metric_bl.toml", "metric.csv", "metric,value,tail"),
        (
            Command::Bound,
            "bound.toml",
            "bounds.csv",
            "case_id,lhs,rhs,margin,R,term_1,term_2,term_3,term_4,term_5,term_6",
        ),
        (Command::SimulateOu, "simulate_ou.toml", "ensemble.csv", "t,mean,var,q05,q95"),
        (Command::SimulateOu, "simulate_ou.toml", "paths/path_00000.csv", "t,X"),
        (Command::CertifyAp, "certify_ap.toml", "profile.csv", "tau,D"),
        (Command::Clt, "clt.toml", "clt.csv", "T,n_reps,ks_stat,mean_S,var_S,V_inf2"),
        (Command::TripletTransform, "triplet_transform.toml", "transform.csv", "quantity,i,j,value"),
    ];
    for (i, (cmd, cfg, file, header)) in cases.iter().enumerate() {
        let out = run_into(*cmd, cfg, &format!("header{i}"));
        assert_eq!(first_line(&out.join(file)), *header, "{file}");
        assert!(out.join("manifest.toml").exists());
    }
}

#[test]
fn finite_variance_bound() {
    let out = run_into(Command::Bound, "bound.toml", "finite_var");
    let text = fs::read_to_string(out.join("bounds.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("finite_variance,")).unwrap();
    let rhs: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((rhs - 0.1).abs() < 1e-12, "{rhs}");
}

#[test]
fn certify_finds_the_periods() {
    let out = run_into(Command::CertifyAp, "certify_ap.toml", "certify");
    let report: toml::Value = toml::from_str(&fs::read_to_string(out.join("report.toml")).unwrap()).unwrap();
    let found: Vec<f64> = report["levels"][0]["found"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_float().unwrap())
        .filter(|&t| t > 0.0)
        .collect();
    assert_eq!(found.len(), 3, "{found:?}");
    for (t, want) in found.iter().zip([1.0, 2.0, 3.0]) {
        assert!((t - want).abs() < 0.03, "{found:?}");
    }
}

#[test]
fn manifest_records_the_seed_override() {
    let out = scratch("manifest");
    let o = Overrides { out_dir: Some(out.clone()), seed: Some(99), threads: None };
    run(Command::SimulateOu, &configs().join("simulate_ou.toml"), &o).unwrap();
    let m: toml::Value = toml::from_str(&fs::read_to_string(out.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(m["command"].as_str(), Some("simulate-ou"));
    assert_eq!(m["seed"].as_integer(), Some(99));
    assert_eq!(m["config"]["run"]["seed"].as_integer(), Some(99));
}

#[test]
fn unknown_key_is_a_config_error() {
    let p = write_config("unknown", "z = [1.0]\nbogus = 3\n[triplet]\na = 1.0\n");
    assert_eq!(exit_code(&["exponent", "--config", p.to_str().unwrap()]), 2);
    let p = write_config("unknown_nested", "z = [1.0]\n[triplet]\na = 1.0\nsigma = 2.0\n");
    assert_eq!(exit_code(&["exponent", "--config", p.to_str().unwrap()]), 2);
}

#[test]
fn missing_config_and_bad_args() {
    assert_eq!(exit_code(&["exponent"]), 2);
    assert_eq!(exit_code(&["exponent", "--config", "/nonexistent/x.toml"]), 2);
    assert_eq!(exit_code(&["no-such-command"]), 2);
}

#[test]
fn unmet_hypotheses_exit_with_three() {
    let out = scratch("hyp_out");
    let p = write_config(
        "hyp",
        "n_paths = 2\nmu = { c0 = 0.5 }\ntriplet = { a = 1.0 }\n[ou]\nt0 = 0.0\ndt = 0.01\nsteps = 10\n",
    );
    assert_eq!(exit_code(&["simulate-ou", "--config", p.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]), 3);
    let p = write_config(
        "hyp_clt",
        "t_list = [5.0]\nn_reps = 10\n[process]\nh = { family = \"indicator\", lo = 0.0, hi = 1.0 }\nm = 1.0\ntriplet = { a = 1.0, gamma = 0.5 }\n",
    );
    assert_eq!(exit_code(&["clt", "--config", p.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]), 3);
}

#[test]
fn metric_inputs_are_validated() {
    let d = scratch("metric_bad");
    fs::create_dir_all(&d).unwrap();
    fs::write(d.join("mu.csv"), "x1,weight\n0,0.5\n1,0.6\n").unwrap();
    fs::write(d.join("nu.csv"), "x1,weight\n0,1\n").unwrap();
    fs::write(d.join("config.toml"), "kind = \"wasserstein\"\nmu = \"mu.csv\"\nnu = \"nu.csv\"\n").unwrap();
    assert_eq!(exit_code(&["metric", "--config", d.join("config.toml").to_str().unwrap()]), 2);
    fs::write(d.join("mu.csv"), "x,weight\n0,1\n").unwrap();
    assert_eq!(exit_code(&["metric", "--config", d.join("config.toml").to_str().unwrap()]), 2);
    fs::write(d.join("mu.csv"), "x1,weight\n1,1\n").unwrap();
    assert_eq!(exit_code(&["metric", "--config", d.join("config.toml").to_str().unwrap()]), 0);
    let v = fs::read_to_string(d.join("out/metric.csv")).unwrap();
    assert_eq!(v, "metric,value,tail\nwasserstein,1,0\n");
}

#[test]
fn config_echo_is_stable() {
    let files = [
        "exponent.toml",
        "domain.toml",
        "metric_bl.toml",
        "bound.toml",
        "simulate_ou.toml",
        "certify_ap.toml",
        "clt.toml",
        "triplet_transform.toml",
    ];
    for (cmd, f) in Command::ALL.iter().zip(files) {
        let text = fs::read_to_string(configs().join(f)).unwrap();
        let once = apstat_cli::check_config(*cmd, &text).unwrap();
        assert_eq!(apstat_cli::check_config(*cmd, &once).unwrap(), once, "{f}");
    }
}
