use std::path::Path;
use std::process::{Command, Output};

use egoe_core::archive::SpectrumArchive;
use egoe_core::ensemble::{sample_kbody, EnsembleSpec};
use egoe_core::spectra::eigenvalues_of;
use egoe_core::Statistics;

fn egoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egoe"))
        .args(args)
        .env_remove("EGOE_THREADS")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = egoe(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn generate_bytes(dir: &Path, extra: &[&str]) -> Vec<u8> {
    let d = dir.to_str().unwrap();
    let mut args = vec!["generate", "--m", "5", "--n-states", "9", "--k", "2", "--members", "6", "--out", d];
    args.extend_from_slice(extra);
    ok(&args);
    std::fs::read(dir.join("spectra.egoe")).unwrap()
}

#[test]
fn generate_is_byte_identical_across_runs_and_threads() {
    let t = tempfile::tempdir().unwrap();
    let a = generate_bytes(&t.path().join("a"), &["--seed", "11", "--threads", "1"]);
    let b = generate_bytes(&t.path().join("b"), &["--seed", "11", "--threads", "1"]);
    let c = generate_bytes(&t.path().join("c"), &["--seed", "11", "--threads", "3"]);
    assert_eq!(a, b);
    assert_eq!(a, c);

    let dir = t.path().join("d");
    let out = Command::new(env!("CARGO_BIN_EXE_egoe"))
        .args(["generate", "--m", "5", "--n-states", "9", "--k", "2", "--members", "6", "--seed", "11"])
        .args(["--out", dir.to_str().unwrap()])
        .env("EGOE_THREADS", "2")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(a, std::fs::read(dir.join("spectra.egoe")).unwrap());

    let archive = SpectrumArchive::from_bytes(&a).unwrap();
    assert_eq!(archive.records.len(), 6);
    assert_eq!(archive.header.dimension, 126);
    assert_eq!(archive.header.created, None);
    assert_eq!(archive.to_bytes(), a);
}

#[test]
fn seed_changes_the_archive() {
    let t = tempfile::tempdir().unwrap();
    let a = generate_bytes(&t.path().join("a"), &["--seed", "11"]);
    let b = generate_bytes(&t.path().join("b"), &["--seed", "12"]);
    assert_ne!(a, b);
}

#[test]
fn single_member_at_full_rank_is_the_sampled_goe() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().to_str().unwrap();
    ok(&["generate", "--statistics", "boson", "--m", "3", "--n-states", "4", "--k", "3", "--members", "1", "--seed", "77", "--out", d]);
    let archive = SpectrumArchive::load(&t.path().join("spectra.egoe")).unwrap();
    let spec = EnsembleSpec::new(Statistics::Boson, 3, 4, 3).with_members(1).with_seed(77);
    let direct = eigenvalues_of(&sample_kbody(&spec, 0).unwrap().matrix).unwrap();
    assert_eq!(archive.records[0].eigenvalues, direct);
}

#[test]
fn pipeline_outputs_have_headers_and_config() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().to_str().unwrap();
    ok(&["generate", "--m", "5", "--n-states", "10", "--k", "3", "--members", "4", "--seed", "1", "--out", d, "--export-json"]);
    ok(&["decompose", "--out", d, "--orders", "2,3,4"]);
    ok(&["fluct", "--out", d, "--orders", "2,3", "--threads", "2"]);
    ok(&["analytic", "--out", d, "--points", "51"]);
    ok(&["analytic", "--out", &format!("{d}/one"), "--statistics", "boson", "--k", "3", "--q", "0.5", "--modes", "2,5"]);

    let header = |name: &str| {
        let text = std::fs::read_to_string(t.path().join(name)).unwrap();
        text.lines().next().unwrap().to_string()
    };
    assert_eq!(header("level_motion.csv"), "member,order,E_hat,delta");
    assert_eq!(header("periodogram.csv"), "member,order,frequency,power");
    assert_eq!(header("periodogram_peaks.csv"), "member,order,lambda,f_peak,p_max,samples");
    assert_eq!(header("nnsd.csv"), "s_lo,s_hi,s_mid,count,density,wigner,poisson");
    assert_eq!(header("delta3.csv"), "L,delta3,goe,poisson");
    assert_eq!(header("analytic.csv"), "statistics,m,N,k,q,n,E_hat,value");
    assert_eq!(header("one/analytic.csv"), "statistics,m,N,k,q,n,E_hat,value");

    // d = 252 levels x 3 orders x 4 members
    let rows = std::fs::read_to_string(t.path().join("level_motion.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 252 * 3 * 4);

    for name in ["decompose_summary.json", "fluct_summary.json"] {
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(t.path().join(name)).unwrap()).unwrap();
        assert_eq!(v["format_version"], "egoe-1", "{name}");
        assert_eq!(v["config"]["ensemble"]["k"], 3, "{name}");
        assert_eq!(v["config"]["format_version"], "egoe-1", "{name}");
    }
    let dump: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("spectra.json")).unwrap()).unwrap();
    assert_eq!(dump["records"].as_array().unwrap().len(), 4);
}

#[test]
fn table1_small_run() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().to_str().unwrap();
    ok(&["table1", "--members", "2", "--seed", "5", "--out", d]);
    let text = std::fs::read_to_string(t.path().join("table1.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "statistics,m,N,k,members,gamma1,gamma1_se,gamma2,gamma2_se,variance,variance_se,expected_variance"
    );
    assert_eq!(lines.count(), 5 + 9);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("table1.json")).unwrap()).unwrap();
    assert_eq!(v["configs"].as_array().unwrap().len(), 14);
    assert_eq!(v["format_version"], "egoe-1");
}

#[test]
fn config_file_and_overrides() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"ensemble":{"statistics":"fermion","m":4,"n_states":8,"k":2,"members":3,"master_seed":9},"orders":[2,3]}"#,
    )
    .unwrap();
    let out = t.path().join("o");
    ok(&["generate", "--config", cfg.to_str().unwrap(), "--members", "2", "--out", out.to_str().unwrap()]);
    let a = SpectrumArchive::load(&out.join("spectra.egoe")).unwrap();
    assert_eq!(a.header.members, 2);
    assert_eq!(a.header.master_seed, 9);
    assert_eq!(a.header.dimension, 70);
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().to_str().unwrap();
    assert_eq!(egoe(&["generate", "--k", "7", "--out", d]).status.code(), Some(2));
    assert_eq!(egoe(&["decompose", "--orders", "2,9", "--out", d]).status.code(), Some(2));
    assert_eq!(egoe(&["generate", "--threads", "0", "--out", d]).status.code(), Some(2));
    assert_eq!(egoe(&["generate", "--no-such-flag"]).status.code(), Some(2));
    let bad = t.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(egoe(&["generate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(egoe(&["fluct", "--archive", "/no/such/archive", "--out", d]).status.code(), Some(1));
    let junk = t.path().join("junk.egoe");
    std::fs::write(&junk, b"not an archive").unwrap();
    assert_eq!(egoe(&["decompose", "--archive", junk.to_str().unwrap(), "--out", d]).status.code(), Some(1));
    // capacity: 20 fermions in 40 states
    assert_eq!(
        egoe(&["generate", "--m", "20", "--n-states", "40", "--k", "2", "--out", d]).status.code(),
        Some(2)
    );
}
