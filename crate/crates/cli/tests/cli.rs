use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gpargmax_cli::{catalog, config, Summary};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gpargmax"))
}

fn run_config(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn summary(out: &Path) -> Summary {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

const KERNEL: &str = r#"
name = "bm-identities"
seed = 7

[experiment]
kind = "check-kernel"
triples = 200

[[experiment.kernels]]
kind = "scaled_bm1d"
sigma2 = 2.0
"#;

const SIMULATE: &str = r#"
name = "small-chernoff"
seed = 11

[experiment]
kind = "simulate"
cov = { kind = "scaled_bm1d", sigma2 = 1.0 }
mean = { kind = "quadratic", v = [[1.0]] }
lattice = { extent = 3.0, ppu = 20 }
reps = 400
"#;

#[test]
fn catalog_matches_the_config_directory() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut files: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    files.sort();
    let mut names: Vec<String> = catalog::BUNDLED.iter().map(|(n, _)| n.to_string()).collect();
    names.sort();
    assert_eq!(files, names);
    for e in catalog::entries().unwrap() {
        assert!(e.criterion.starts_with("AC"), "{} has no criterion id", e.name);
        assert!(!e.description.is_empty());
    }
    let ids: std::collections::BTreeSet<String> =
        catalog::entries().unwrap().into_iter().map(|e| e.criterion).collect();
    assert_eq!(ids.len(), 10);
}

#[test]
fn bundled_configs_match_their_names() {
    for (name, text) in catalog::BUNDLED {
        let cfg = config::parse(text).unwrap();
        assert_eq!(cfg.name, *name);
    }
}

#[test]
fn list_experiments_prints_the_catalog() {
    let out = bin().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["chernoff-baseline", "erm-convergence", "rkhs-maxscore"] {
        assert!(text.contains(name), "{text}");
    }
    assert_eq!(text.lines().count(), catalog::BUNDLED.len());
}

#[test]
fn kernel_check_passes_and_writes_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "k.toml", KERNEL);
    let out = tmp.path().join("out");
    let res = run_config(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(&out);
    assert_eq!(s.schema_version, 1);
    assert_eq!(s.kind, "check-kernel");
    let names: Vec<&str> = s.checks.iter().map(|c| c.name.as_str()).collect();
    assert!(names.iter().any(|n| n.starts_with("shift-equivariance")));
    assert!(names.iter().any(|n| n.starts_with("self-similarity")));
    assert!(s.checks.iter().all(|c| c.status == gpargmax_cli::Status::Pass));
    assert_eq!(s.artifacts, ["kernel_identities.csv", "summary.json"]);
    let csv = std::fs::read_to_string(out.join("kernel_identities.csv")).unwrap();
    assert!(csv.starts_with("kernel,kind,identity,max_residual,tol,pass\n"));
}

#[test]
fn discontinuity_summary_reports_the_partition() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "d.toml",
        r#"
name = "small-discontinuity"
seed = 3

[experiment]
kind = "discontinuity-example"
gamma = 0.25
c = 1.4
extent = 2.0
ppu = 100
reps = 2000
"#,
    );
    let out = tmp.path().join("out");
    let res = run_config(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let s = summary(&out);
    for name in ["partition", "p_zero-positive", "p_pos-below-half", "p_neg-below-half"] {
        assert!(s.checks.iter().any(|c| c.name == name), "missing {name}");
    }
    let report = &s.metrics["report"];
    let total =
        report["p_zero"].as_f64().unwrap() + report["p_pos"].as_f64().unwrap() + report["p_neg"].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(out.join("discontinuity.csv").exists());
}

#[test]
fn malformed_configs_leave_no_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        ("syntax.toml", "name = \"x\nseed = 1\n", "TOML"),
        ("unknown.toml", &KERNEL.replace("triples = 200", "triples = 200\ntripels = 3"), "tripels"),
        ("type.toml", &KERNEL.replace("sigma2 = 2.0", "sigma2 = \"two\""), "experiment.kernels"),
        ("semantic.toml", &KERNEL.replace("sigma2 = 2.0", "sigma2 = -1.0"), "experiment.kernels[0]"),
        ("kind.toml", &KERNEL.replace("check-kernel", "check-kernels"), "experiment.kind"),
        ("missing.toml", &KERNEL.replace("seed = 7", ""), "seed"),
    ];
    for (file, text, path) in cases {
        let cfg = write(tmp.path(), file, text);
        let res = run_config(&cfg, &out, &[]);
        assert_eq!(res.status.code(), Some(1), "{file}");
        let err = String::from_utf8_lossy(&res.stderr);
        assert!(err.contains(path), "{file}: {err}");
        assert!(!out.exists(), "{file} left output behind");
    }
    let leftovers: Vec<_> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.contains("partial"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn reruns_reproduce_summaries_and_draw_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", SIMULATE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_config(&cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run_config(&cfg, &b, &["--threads", "1"]).status.code(), Some(0));
    let (mut sa, mut sb) = (summary(&a), summary(&b));
    sa.timestamp.clear();
    sb.timestamp.clear();
    assert_eq!(sa, sb);
    assert_eq!(std::fs::read(a.join("draws.csv")).unwrap(), std::fs::read(b.join("draws.csv")).unwrap());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("draws.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config_hash"], sa.config_hash.as_str());
    let law = gpargmax::io::read_law_with_sidecar(&a.join("draws.csv")).unwrap().0;
    assert_eq!(law.replications(), 400);
}

#[test]
fn a_different_config_cannot_reuse_an_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", SIMULATE);
    let out = tmp.path().join("out");
    assert_eq!(run_config(&cfg, &out, &[]).status.code(), Some(0));
    let before = std::fs::read(out.join("summary.json")).unwrap();
    let res = run_config(&cfg, &out, &["--seed", "12"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("refusing"));
    assert_eq!(std::fs::read(out.join("summary.json")).unwrap(), before);
    // The same config may overwrite its own results.
    assert_eq!(run_config(&cfg, &out, &[]).status.code(), Some(0));
}

#[test]
fn seed_and_tolerance_overrides_change_the_hash() {
    let base = config::parse(SIMULATE).unwrap();
    let mut seeded = base.clone();
    seeded.seed = 12;
    let mut scaled = base.clone();
    scaled.tolerance_scale = 2.0;
    let mut moved = base.clone();
    moved.out = Some("elsewhere".into());
    let h = config::config_hash(&base);
    assert_eq!(h.len(), 64);
    assert_ne!(h, config::config_hash(&seeded));
    assert_ne!(h, config::config_hash(&scaled));
    assert_eq!(h, config::config_hash(&moved));
}

#[test]
fn failed_checks_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SIMULATE}\n[experiment.closed_form]\ngamma = [[2.0]]\nsigma = [[1.0]]\nks_tol = 1e-9\n")
        .replace("kind = \"scaled_bm1d\", sigma2 = 1.0", "kind = \"bilinear\", sigma = [[1.0]]");
    let cfg = write(tmp.path(), "f.toml", &text);
    let out = tmp.path().join("out");
    assert_eq!(run_config(&cfg, &out, &[]).status.code(), Some(1));
    assert_eq!(summary(&out).status, gpargmax_cli::Status::Fail);
    // Loosening every tolerance turns it into a pass.
    let out2 = tmp.path().join("out2");
    assert_eq!(run_config(&cfg, &out2, &["--tolerance-scale", "1e9"]).status.code(), Some(0));
}

#[test]
fn unresolved_quadrature_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "q.toml",
        r#"
name = "tight-rkhs"
seed = 5

[experiment]
kind = "rkhs-verify"
pairs = 10
tol = 1e-30

[[experiment.models]]
extent = 2.0
family = { kind = "max_score", atoms = [{ w = 1.0, x = [1.0, 0.5], f = 0.7, fu = 0.3 }] }
"#,
    );
    let out = tmp.path().join("out");
    let res = run_config(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stdout));
    assert_eq!(summary(&out).status, gpargmax_cli::Status::Inconclusive);
    assert!(out.join("rkhs_cov_0.csv").exists());
}
