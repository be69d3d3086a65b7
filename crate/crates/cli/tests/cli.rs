use std::path::Path;
use std::process::{Command, Output};

use workitem_szz::git::CommitId;
use workitem_szz::workitem::TrackingMatrix;
use workitem_szz_fixtures::{materialize, work_item_layout};

fn bin(cache: &Path) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_workitem-szz"));
    c.env_remove("WORKITEM_SZZ_CACHE_DIR")
        .env_remove("WORKITEM_SZZ_PARALLELISM")
        .env("XDG_CACHE_HOME", cache);
    c
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Matrix rows and listed work items from `detect-wi` output.
fn parse_detect(text: &str) -> (Vec<(String, String)>, Vec<String>) {
    let mut rows = Vec::new();
    let mut items = Vec::new();
    let mut in_items = false;
    for line in text.lines() {
        if line.starts_with("work items at factor") {
            in_items = true;
        } else if in_items {
            items.push(line.to_string());
        } else if let [id, _time, bits] = line.split(' ').collect::<Vec<_>>()[..] {
            if id.len() == 40 {
                rows.push((id.to_string(), bits.to_string()));
            }
        }
    }
    (rows, items)
}

#[test]
fn full_factor_lists_only_all_ones_rows() {
    let layout = work_item_layout();
    let tmp = tempfile::tempdir().unwrap();
    let repo = layout.repo.path().to_str().unwrap();
    let out = bin(tmp.path())
        .args(["detect-wi", "--repo", repo, "--fc", &layout.repo.id("a"), "--factor", "1.0"])
        .output()
        .unwrap();
    let (rows, items) = parse_detect(&stdout(&out));
    assert_eq!(rows.len(), 7);
    let all_ones: Vec<String> = rows
        .iter()
        .filter(|(_, bits)| bits.chars().all(|c| c == '1'))
        .map(|(id, _)| id.clone())
        .collect();
    assert!(!all_ones.is_empty());
    assert_eq!(items, all_ones);
}

#[test]
fn dumped_matrix_round_trips() {
    let layout = work_item_layout();
    let tmp = tempfile::tempdir().unwrap();
    let dump = tmp.path().join("m.csv");
    let repo = layout.repo.path().to_str().unwrap();
    let out = bin(tmp.path())
        .args(["detect-wi", "--repo", repo, "--fc", &layout.repo.id("a"), "--dump-matrix"])
        .arg(&dump)
        .output()
        .unwrap();
    let (rows, _) = parse_detect(&stdout(&out));
    let fc: CommitId = layout.repo.id("a").parse().unwrap();
    let matrix = TrackingMatrix::from_csv(fc, &std::fs::read_to_string(&dump).unwrap()).unwrap();
    let back = TrackingMatrix::from_csv(fc, &matrix.to_csv().unwrap()).unwrap();
    assert_eq!(back, matrix);
    let printed: Vec<(String, String)> = matrix
        .rows
        .iter()
        .map(|r| (r.commit.to_string(), r.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()))
        .collect();
    assert_eq!(printed, rows);
}

#[test]
fn find_bic_reports_the_work_item() {
    let layout = work_item_layout();
    let tmp = tempfile::tempdir().unwrap();
    let repo = layout.repo.path().to_str().unwrap();
    let date = layout.issue_date.to_string();
    let out = bin(tmp.path())
        .args(["find-bic", "--repo", repo, "--fc", &layout.repo.id("a"), "--issue-date", &date])
        .output()
        .unwrap();
    assert_eq!(stdout(&out).lines().next().unwrap(), format!("work_item: {}", layout.repo.id("f")));

    let out = bin(tmp.path())
        .args(["find-bic", "--repo", repo, "--fc", &layout.repo.id("a")])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn config_file_then_env_then_flags() {
    let layout = work_item_layout();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "factor = 0.5\nparallelism = 3\ncache_dir = \"/from/file\"\n").unwrap();
    let repo = layout.repo.path().to_str().unwrap();
    let date = layout.issue_date.to_string();
    let config_of = |extra: &[&str], env: &[(&str, &str)]| -> serde_json::Value {
        let mut c = bin(tmp.path());
        c.arg("--config").arg(&cfg);
        c.args(["find-bic", "--json", "--repo", repo, "--fc", &layout.repo.id("a"), "--issue-date", &date]);
        c.args(extra);
        for (k, v) in env {
            c.env(k, v);
        }
        let v: serde_json::Value = serde_json::from_str(&stdout(&c.output().unwrap())).unwrap();
        v["config"].clone()
    };

    let c = config_of(&[], &[]);
    assert_eq!(c["factor"], 0.5);
    assert_eq!(c["parallelism"], 3);
    assert_eq!(c["cache_dir"], "/from/file");

    let env = [("WORKITEM_SZZ_PARALLELISM", "5"), ("WORKITEM_SZZ_CACHE_DIR", "/from/env")];
    let c = config_of(&[], &env);
    assert_eq!(c["parallelism"], 5);
    assert_eq!(c["cache_dir"], "/from/env");
    assert_eq!(c["factor"], 0.5);

    let c = config_of(&["--parallelism", "2", "--factor", "0.9"], &env);
    assert_eq!(c["parallelism"], 2);
    assert_eq!(c["factor"], 0.9);
    assert_eq!(c["cache_dir"], "/from/env");
}

#[test]
fn sweep_writes_one_row_per_factor() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = materialize(&tmp.path().join("fx"));
    let out_dir = tmp.path().join("out");
    let out = bin(tmp.path())
        .args(["sweep", "--parallelism", "2", "--dataset"])
        .arg(&dataset)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    stdout(&out);
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# config: {"));
    assert!(lines[1].starts_with("factor,"));
    let factors: Vec<&str> = lines[2..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(factors, ["0.3", "0.5", "0.7", "0.9"]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json["factors"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let out = bin(tmp.path())
        .args(["detect-wi", "--repo", missing.to_str().unwrap(), "--fc", "HEAD"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "factr = 0.5\n").unwrap();
    let out = bin(tmp.path())
        .arg("--config")
        .arg(&cfg)
        .args(["detect-wi", "--repo", ".", "--fc", "HEAD"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
