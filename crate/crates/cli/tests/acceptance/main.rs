//! The acceptance criteria, one pass/fail line each.

#[path = "../../../core/tests/common/mod.rs"]
mod common;
mod criteria;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use apstat_cli::{run as run_command, Command, Overrides};
use criteria::*;

fn run(id: usize, name: &str, limit: Duration, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let pass = o.pass && took <= limit;
    println!(
        "criterion {id:>2} [{}] {name}: {} ({:.2}s, limit {}s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let scratch = std::env::temp_dir().join(format!("apstat-acceptance-{}", std::process::id()));
    let cases = [
        (Command::Exponent, "exponent.toml"),
        (Command::DomainCheck, "domain.toml"),
        (Command::Metric, "metric_gamma.toml"),
        (Command::Bound, "bound.toml"),
        (Command::SimulateOu, "simulate_ou.toml"),
        (Command::CertifyAp, "certify_ap.toml"),
        (Command::Clt, "clt.toml"),
        (Command::TripletTransform, "triplet_transform.toml"),
    ];
    let mut failures: Vec<String> = Vec::new();
    let mut files = 0;
    for (cmd, cfg) in cases {
        let mut snaps = Vec::new();
        for (k, threads) in [None, Some(1), Some(2)].into_iter().enumerate() {
            let out = scratch.join(format!("{}-{k}", cmd.name()));
            let _ = fs::remove_dir_all(&out);
            let o = Overrides { out_dir: Some(out.clone()), threads, ..Default::default() };
            match run_command(cmd, &configs.join(cfg), &o) {
                Ok(_) => snaps.push(snapshot(&out)),
                Err(e) => failures.push(format!("{}: {e}", cmd.name())),
            }
        }
        if snaps.len() == 3 {
            files += snaps[0].len();
            if snaps[0].is_empty() || snaps.iter().any(|s| s != &snaps[0]) {
                failures.push(format!("{}: artifacts differ between runs", cmd.name()));
            }
        }
    }
    let _ = fs::remove_dir_all(&scratch);
    let detail = if failures.is_empty() {
        format!("{} subcommands, {files} files identical across reruns and threads default/1/2", cases.len())
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn main() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let results = [
        run(1, "gamma metric of two Dirac masses", Duration::from_secs(1), gamma_two_diracs),
        run(2, "layer-cake norms", Duration::from_secs(10), layer_cake),
        run(3, "exponent difference bound", min(2), bound_domination),
        run(4, "Ky-Fan bound on coupled simulations", min(3), ky_fan_bound),
        run(5, "constant-coefficient OU", min(2), ou_sanity),
        run(6, "periodic OU certificate", min(1), periodic_certificate),
        run(7, "almost periodic OU certificate", min(5), almost_periodic_certificate),
        run(8, "moving-average CLT", min(5), clt),
        run(9, "metric axioms and dominance", min(1), metric_axioms),
        run(10, "reproducible subcommand artifacts", min(1), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
