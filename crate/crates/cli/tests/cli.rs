use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn influence(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_influence"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_users(dir: &Path, n: usize) {
    let mut s = String::from("user_id,followers\n");
    for u in 0..n {
        s.push_str(&format!("u{u},{}\n", 1000 + u * 10));
    }
    fs::write(dir.join("users.csv"), s).unwrap();
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let mut posts = String::new();
    for i in 0..12 {
        posts.push_str(&format!(
            "{{\"user_id\":\"u0\",\"post_id\":\"p{i}\",\"likes\":5,\"comments\":1,\"views\":100}}\n"
        ));
    }
    posts.push_str("{\"user_id\":\"u0\",\"post_id\":\"p99\",\"likes\":\"many\",\"comments\":1,\"views\":100}\n");
    fs::write(dir.path().join("posts.jsonl"), posts).unwrap();
    write_users(dir.path(), 1);
    let out = influence(dir.path(), &["ingest", "--posts", "posts.jsonl", "--users", "users.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[malformed_line]:"), "{err}");
    assert!(err.contains("13"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = influence(dir.path(), &["train", "--model", "svm"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error[usage]:") && err.lines().count() == 1, "{err}");
    let out = influence(dir.path(), &["train", "--columns", "likes_avg,shoe_size", "--features", "missing.csv"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn missing_input_fails_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = influence(dir.path(), &["features"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[io]:"));
    assert!(!dir.path().join("data").exists());
}

#[test]
fn constant_model_ranks_by_user_id() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from(
        "user_id,likes_avg,comments_avg,followers,geo_mean,followers_per_post,comments_per_likes,focus_diff,focus_ratio,influence\n",
    );
    for (i, id) in ["carol", "alice", "dave", "bob", "erin", "frank"].iter().enumerate() {
        let f = i as f64;
        csv.push_str(&format!(
            "{id},{},{},{},{},{},{},{},{},250\n",
            10.0 + f,
            2.0 + f * 0.5,
            900.0 + 40.0 * f,
            30.0 + f,
            60.0 + f,
            0.1 + 0.01 * f,
            4.0 + f,
            1.5 + 0.1 * f
        ));
    }
    fs::write(dir.path().join("features.csv"), csv).unwrap();
    let out = influence(dir.path(), &["train", "--features", "features.csv", "--out", "model.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = influence(
        dir.path(),
        &["rank", "--model", "model.json", "--features", "features.csv", "--out", "ranking.csv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let ranking = fs::read_to_string(dir.path().join("ranking.csv")).unwrap();
    let ids: Vec<&str> = ranking.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ids, ["alice", "bob", "carol", "dave", "erin", "frank"]);
    assert!(ranking.lines().skip(1).all(|l| l.ends_with(",250")), "{ranking}");
    assert!(dir.path().join("ranking.csv.meta.json").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.conf"), "# small corpus\nn_users = 40\nseed = 5\nout_dir = a\n").unwrap();
    let out = influence(dir.path(), &["--config", "run.conf", "synth", "--seed", "6"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/users.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 6);
    assert_eq!(meta["command"], "synth");
    let args: Vec<&str> = meta["args"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(args.contains(&"n_users=40") && args.contains(&"seed=6"), "{args:?}");
    let users = fs::read_to_string(dir.path().join("a/users.csv")).unwrap();
    assert_eq!(users.lines().count(), 41);

    fs::write(dir.path().join("bad.conf"), "no_such_flag = 1\n").unwrap();
    let out = influence(dir.path(), &["--config", "bad.conf", "synth"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn sidecar_args_regenerate_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = influence(dir.path(), &["synth", "--n-users", "30", "--seed", "3", "--out-dir", "first"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("first/posts.jsonl.meta.json")).unwrap()).unwrap();
    let conf: String = meta["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| format!("{}\n", v.as_str().unwrap()))
        .collect();
    fs::write(dir.path().join("replay.conf"), conf).unwrap();
    let out = influence(dir.path(), &["--config", "replay.conf", "synth", "--out-dir", "second"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["posts.jsonl", "users.csv", "edges.csv", "ground_truth.csv"] {
        assert_eq!(
            fs::read(dir.path().join("first").join(name)).unwrap(),
            fs::read(dir.path().join("second").join(name)).unwrap(),
            "{name}"
        );
    }
}
