//! End-to-end checks of the command-line interface: determinism, config
//! round-trips, exit codes, and output discipline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specband"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("specband-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("missing {}: {e}", path.display()))
}

#[test]
fn bands_prints_edges_and_writes_csv() {
    let out = tmp("bands");
    let res = bin()
        .args(["bands", "--v", "[-5,0,1]", "--g", "1"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("-2.645751") && stdout.contains("1.732051"), "{stdout}");
    let csv = String::from_utf8(read(&out.join("bands.csv"))).unwrap();
    assert!(csv.starts_with("band,a,b\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(!csv.contains('\r'));
}

#[test]
fn resolved_config_round_trips() {
    let out1 = tmp("round1");
    let out2 = tmp("round2");
    let res = bin()
        .args(["bands", "--v", "[-5,0,1]", "--g", "1"])
        .arg("--out")
        .arg(&out1)
        .output()
        .unwrap();
    assert!(res.status.success());
    let res = bin()
        .args(["bands", "--config"])
        .arg(out1.join("resolved-config.json"))
        .arg("--out")
        .arg(&out2)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(read(&out1.join("bands.csv")), read(&out2.join("bands.csv")));
}

#[test]
fn mc_runs_are_byte_identical() {
    let outs = [tmp("mc1"), tmp("mc2")];
    for out in &outs {
        let res = bin()
            .args([
                "mc", "--v", "[0,-1]", "--g", "1", "--n", "8", "--chains", "2", "--sweeps", "60",
                "--burn-in", "20", "--seed", "7",
            ])
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(
        read(&outs[0].join("eigenvalues.bin")),
        read(&outs[1].join("eigenvalues.bin"))
    );
    assert_eq!(
        read(&outs[0].join("mc_meta.json")),
        read(&outs[1].join("mc_meta.json"))
    );
}

#[test]
fn unknown_config_keys_are_rejected() {
    let out = tmp("badkey");
    fs::create_dir_all(&out).unwrap();
    let cfg = out.join("cfg.json");
    fs::write(&cfg, r#"{"subcommand":"bands","not_a_key":1}"#).unwrap();
    let res = bin()
        .args(["bands", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn validation_failures_exit_2() {
    let out = tmp("badpot");
    // Touching bands: not a regular configuration.
    let res = bin()
        .args(["bands", "--v", "[-2,0,1]", "--g", "1"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
    // Missing potential entirely.
    let res = bin()
        .args(["bands"])
        .arg("--out")
        .arg(&tmp("nopot"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn subcommand_mismatch_rejected() {
    let out = tmp("mismatch");
    let res = bin()
        .args(["bands", "--v", "[0,-1]", "--g", "1"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success());
    let res = bin()
        .args(["hill", "--config"])
        .arg(out.join("resolved-config.json"))
        .arg("--out")
        .arg(&tmp("mismatch2"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn outputs_stay_inside_out_dir() {
    let parent = tmp("contain");
    let out = parent.join("inner");
    fs::create_dir_all(&parent).unwrap();
    let before: Vec<PathBuf> = fs::read_dir(&parent)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    let res = bin()
        .args(["recurrence", "--v", "[0,-1]", "--g", "1", "--n", "12", "--l-max", "16"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let after: Vec<PathBuf> = fs::read_dir(&parent)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    // Only the designated output directory appeared.
    assert_eq!(after.len(), before.len() + 1);
    assert!(after.contains(&out));
    let names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.contains(&"recurrence.csv".to_string()));
    assert!(names.contains(&"resolved-config.json".to_string()));
}

#[test]
fn recurrence_csv_has_metadata_header() {
    let out = tmp("rec");
    let res = bin()
        .args(["recurrence", "--v", "[0,-1]", "--g", "1", "--n", "10", "--l-max", "12"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(read(&out.join("recurrence.csv"))).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# ") && comment.contains("n=10") && comment.contains("nodes="));
    assert_eq!(lines.next().unwrap(), "l,r,s");
}
