use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn textquest(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_textquest"))
        .args(args)
        .env("TEXTQUEST_OUT", out_root)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SHORT: &[&str] = &["run", "--game", "miniz", "--seeds", "0", "--budget", "3000", "--batch", "8", "--patience", "300"];

#[test]
fn run_writes_under_the_output_root_and_chains_replay() {
    let root = tempfile::tempdir().unwrap();
    let o = textquest(SHORT, root.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = root.path().join("miniz-mc+im");
    assert!(stdout(&o).contains(&format!("artifacts\t{}", dir.display())));
    assert!(dir.join("summary.tsv").exists());

    let chain = dir.join("seed-0/chain");
    let replay = textquest(&["replay-chain", "miniz", chain.to_str().unwrap()], root.path());
    assert_eq!(replay.status.code(), Some(0), "{}", String::from_utf8_lossy(&replay.stderr));
    assert!(stdout(&replay).lines().any(|l| l.starts_with("replay\tscore\t")));

    let manifest = chain.join("manifest.tsv");
    let text = fs::read_to_string(&manifest).unwrap();
    let tampered: String = text
        .lines()
        .map(|l| if l.starts_with("j_max\t") { "j_max\t9999".to_owned() } else { l.to_owned() })
        .map(|l| l + "\n")
        .collect();
    fs::write(&manifest, tampered).unwrap();
    let broken = textquest(&["replay-chain", "miniz", chain.to_str().unwrap()], root.path());
    assert_eq!(broken.status.code(), Some(1));
}

#[test]
fn out_flag_overrides_the_environment() {
    let (env_root, flag_root) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut args = SHORT.to_vec();
    args.extend(["--strategy", "vanilla", "--out", flag_root.path().to_str().unwrap()]);
    let o = textquest(&args, env_root.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_root.path().join("miniz-vanilla/summary.tsv").exists());
    assert!(!env_root.path().join("miniz-vanilla").exists());
}

#[test]
fn configuration_errors_exit_with_two() {
    let root = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["run", "--game", "no-such-game"],
        &["run", "--strategy", "vanilla", "--alpha", "0.5"],
        &["run", "--batch", "0"],
        &["analyze", "no-such-game"],
    ];
    for args in cases {
        assert_eq!(textquest(args, root.path()).status.code(), Some(2), "{args:?}");
    }
    let bad = root.path().join("bad.toml");
    fs::write(&bad, "budget = \"lots\"\n").unwrap();
    assert_eq!(textquest(&["run", "--config", bad.to_str().unwrap()], root.path()).status.code(), Some(2));
    assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
}

#[test]
fn analyze_and_dataset_output() {
    let root = tempfile::tempdir().unwrap();
    let o = textquest(&["analyze", "miniz"], root.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("max_score\t50"));
    assert!(text.contains("bottleneck\tcellar"));

    let file = root.path().join("qa.txt");
    let o = textquest(&["emit-dataset", "miniz", "--budget", "20", "--out", file.to_str().unwrap()], root.path());
    assert_eq!(o.status.code(), Some(0));
    let qa = fs::read_to_string(file).unwrap();
    assert!(qa.starts_with("[loc] "));
}
