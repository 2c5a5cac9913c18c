use std::path::Path;
use std::process::{Command, Output};

use pptupb::io::{from_json, CertificateFile, ClassificationFile, StateFile};
use pptupb::symmetry::canonical_params;
use pptupb::tensor::{herm_eig, rank_of_spectrum};
use pptupb::upb::UpbParams;
use tempfile::TempDir;

fn pptupb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pptupb"))
        .args(args)
        .env("PPTUPB_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_state(path: &Path, rho: &pptupb::State) {
    std::fs::write(path, pptupb::io::to_json(&StateFile::from_state(rho))).unwrap();
}

#[test]
fn generate_writes_rank_four_state() {
    let dir = TempDir::new().unwrap();
    let out = pptupb(dir.path(), &["generate", "--params", "1,1,1,1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let state: StateFile = read(&dir.path().join("state.json"));
    let rho = state.to_state().unwrap();
    assert!((rho.herm().trace() - 1.0).abs() < 1e-12);
    assert_eq!(rank_of_spectrum(&herm_eig(rho.herm()).values, 1e-8), 4);
    assert!(dir.path().join("upb.json").exists());
}

#[test]
fn invalid_params_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&pptupb(dir.path(), &["generate", "--params", "0,1,1,1"])), 2);
    assert_eq!(code(&pptupb(dir.path(), &["generate", "--params", "1,1,1"])), 2);
    assert_eq!(code(&pptupb(dir.path(), &["roundtrip", "--params", "-1,1,1,1"])), 2);
}

#[test]
fn out_of_range_params_warn() {
    let dir = TempDir::new().unwrap();
    let out = pptupb(dir.path(), &["generate", "--params", "1e-4,1,1,1"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn generate_transform_classify_recovers_canonical_params() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&pptupb(dir.path(), &["generate", "--params", "2,1,3,1"])), 0);
    let state = dir.path().join("state.json");
    assert_eq!(code(&pptupb(dir.path(), &["transform", state.to_str().unwrap(), "--seed", "4"])), 0);
    let moved = dir.path().join("transformed.json");
    let out = pptupb(dir.path(), &["classify", moved.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: ClassificationFile = read(&dir.path().join("classification.json"));
    let want = canonical_params(&UpbParams::new(2.0, 1.0, 3.0, 1.0).unwrap()).unwrap();
    assert!(report.params().is_ok());
    assert!(UpbParams::from_slice(&report.canonical_params).unwrap().max_rel_diff(&want) < 1e-6);
    assert_eq!(report.admissible_orderings.len(), 60);
    assert!(report.residuals.reconstruction < 1e-7);
}

#[test]
fn transform_from_file_is_reused() {
    let dir = TempDir::new().unwrap();
    pptupb(dir.path(), &["generate", "--params", "1,2,0.5,3"]);
    let state = dir.path().join("state.json");
    pptupb(dir.path(), &["transform", state.to_str().unwrap(), "--seed", "9"]);
    let first: StateFile = read(&dir.path().join("transformed.json"));
    let t = dir.path().join("t.json");
    std::fs::rename(dir.path().join("transform.json"), &t).unwrap();
    let out = pptupb(dir.path(), &["transform", state.to_str().unwrap(), "--with", t.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    // Reloaded factors are re-normalized to unit determinant, which may move the last bits.
    let second: StateFile = read(&dir.path().join("transformed.json"));
    let diff = first.to_state().unwrap().as_mat() - second.to_state().unwrap().as_mat();
    assert!(diff.max_abs() < 1e-14);
}

#[test]
fn roundtrip_passes_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = ["roundtrip", "--params", "1,2,0.5,3", "--seed", "7"];
    let a = pptupb(dir.path(), &args);
    let b = pptupb(dir.path(), &args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let report: pptupb::io::RoundtripFile = from_json(&String::from_utf8(a.stdout).unwrap()).unwrap();
    assert!(report.passed && report.relative_error < 1e-6);
}

#[test]
fn roundtrip_with_unitary_transform() {
    let dir = TempDir::new().unwrap();
    let out = pptupb(dir.path(), &["roundtrip", "--params", "1,2,0.5,3", "--cond-max", "1"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn roundtrip_failure_names_stage() {
    let dir = TempDir::new().unwrap();
    // A single restart cannot find all six kernel vectors.
    let out = pptupb(dir.path(), &["roundtrip", "--params", "1,2,0.5,3", "--restarts", "1"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel-search"));
}

#[test]
fn verify_maximally_mixed_is_not_extremal() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("mixed.json");
    write_state(&path, &pptupb::State::maximally_mixed());
    let out = pptupb(dir.path(), &["verify", path.to_str().unwrap(), "--restarts", "20"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cert: CertificateFile = read(&dir.path().join("certificate.json"));
    assert!(cert.is_ppt && !cert.extremal);
    assert_eq!(cert.extremality_nullity, Some(81));
    assert_eq!(cert.image_verdict, "contains-product");
}

#[test]
fn verify_constructed_state_certifies() {
    let dir = TempDir::new().unwrap();
    pptupb(dir.path(), &["generate", "--params", "1,1,1,1"]);
    let state = dir.path().join("state.json");
    assert_eq!(code(&pptupb(dir.path(), &["verify", state.to_str().unwrap()])), 0);
    let cert: CertificateFile = read(&dir.path().join("certificate.json"));
    assert!(cert.is_ppt && cert.entangled && cert.extremal);
    assert_eq!((cert.rank_pair, cert.local_ranks), ([4, 4], [3, 3]));
}

#[test]
fn orbit_prints_sixty_rows() {
    let dir = TempDir::new().unwrap();
    let out = pptupb(dir.path(), &["orbit", "--params", "1,1,1,1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 60);
}

#[test]
fn classify_full_rank_state_is_not_in_class() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("full.json");
    let weights = [0.05, 0.1, 0.15, 0.08, 0.12, 0.1, 0.14, 0.16, 0.1];
    write_state(&path, &pptupb::State::diagonal(&weights).unwrap());
    assert_eq!(code(&pptupb(dir.path(), &["classify", path.to_str().unwrap()])), 4);
}

#[test]
fn malformed_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"dim_a\": 3,").unwrap();
    assert_eq!(code(&pptupb(dir.path(), &["classify", path.to_str().unwrap()])), 1);
    std::fs::write(&path, "{\"dim_a\":3,\"dim_b\":3,\"rho\":[],\"note\":1}").unwrap();
    assert_eq!(code(&pptupb(dir.path(), &["verify", path.to_str().unwrap()])), 1);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&pptupb(dir.path(), &["verify", missing.to_str().unwrap()])), 1);
}

#[test]
fn batch_classify_in_parallel() {
    let dir = TempDir::new().unwrap();
    let mut inputs = Vec::new();
    for (k, p) in ["1,1,1,1", "2,1,3,1", "0.5,2,1,0.7"].iter().enumerate() {
        let sub = dir.path().join(format!("g{k}"));
        std::fs::create_dir(&sub).unwrap();
        pptupb(&sub, &["generate", "--params", p]);
        let target = dir.path().join(format!("s{k}.json"));
        std::fs::rename(sub.join("state.json"), &target).unwrap();
        inputs.push(target.to_str().unwrap().to_string());
    }
    let mut args = vec!["classify", "--jobs", "3"];
    args.extend(inputs.iter().map(String::as_str));
    let out = pptupb(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for k in 0..3 {
        assert!(dir.path().join(format!("s{k}.classification.json")).exists());
    }
}
