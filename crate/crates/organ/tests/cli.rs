use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn organ(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_organ")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = organ(args);
    assert!(out.status.success(), "organ {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A few seconds of training on the small molecule corpus.
fn tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.conf");
    std::fs::write(
        &path,
        format!(
            "# smoke-test scale\ncorpus = {}\nobjectives = solubility\npretrain_gen_epochs = 1\npretrain_disc_epochs = 1\n\
             adversarial_epochs = 2\nbatch_size = 16\nhidden_dim = 8\nembed_dim = 4\ncritic_filters = 2\nrollouts = 2\n\
             eval_samples = 20\nreference_size = 20\n",
            data("molecules_500.txt").display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn pretrain_then_sample_count_lines() {
    let dir = scratch("sample");
    let conf = tiny_config(&dir);
    ok(&["pretrain", "--config", s(&conf), "--out", s(&dir)]);
    let log = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("phase,epoch,loss"));
    assert_eq!(log.lines().count(), 3);
    let manifest = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("# command: pretrain") && manifest.contains("batch_size = 16"), "{manifest}");

    let out = dir.join("samples");
    ok(&["sample", "--checkpoint", s(&dir.join("model.ckpt")), "--count", "10", "--out", s(&out)]);
    let samples = std::fs::read_to_string(out.join("samples.txt")).unwrap();
    assert_eq!(samples.lines().count(), 10);
}

#[test]
fn metrics_on_a_file_of_benzene() {
    let dir = scratch("metrics");
    let input = dir.join("benzene.txt");
    std::fs::write(&input, "C1=CC=CC=C1\n".repeat(5)).unwrap();
    let stdout = ok(&["metrics", s(&input), "--objective", "solubility", "--out", s(&dir)]);
    assert!(stdout.contains("samples\t5\n") && stdout.contains("validity\t1.000000\n"), "{stdout}");
    let csv = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("samples,validity,solubility\n5,1.000000,"), "{csv}");
}

#[test]
fn bad_input_gets_its_exit_code() {
    let dir = scratch("errors");
    let conf = tiny_config(&dir);
    assert_eq!(organ(&["train", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(organ(&["sample", "--out", s(&dir)]).status.code(), Some(2));

    let out = organ(&["pretrain", "--config", s(&conf), "--set", "learning_rate=1", "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    let bad_line = dir.join("bad.conf");
    std::fs::write(&bad_line, "seed = 1\nbatch_size = many\n").unwrap();
    let out = organ(&["pretrain", "--config", s(&bad_line), "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&out.stderr));

    let missing = dir.join("nowhere.txt");
    assert_eq!(
        organ(&["pretrain", "--config", s(&conf), "--set", &format!("corpus={}", s(&missing)), "--out", s(&dir)]).status.code(),
        Some(4)
    );

    let garbage = dir.join("garbage.ckpt");
    std::fs::write(&garbage, b"not a checkpoint").unwrap();
    assert_eq!(organ(&["sample", "--checkpoint", s(&garbage), "--out", s(&dir)]).status.code(), Some(5));
}

#[test]
fn plot_writes_one_series_per_column() {
    let dir = scratch("plot");
    let log = dir.join("metrics.csv");
    std::fs::write(&log, "epoch,nll,d_loss\n1,2.000000,0.690000\n2,1.500000,0.650000\n").unwrap();
    ok(&["plot", s(&log), "--out", s(&dir)]);
    assert_eq!(std::fs::read_to_string(dir.join("nll.tsv")).unwrap(), "epoch\tnll\n1\t2.000000\n2\t1.500000\n");
    assert!(dir.join("d_loss.tsv").exists());
}

#[test]
fn sweep_runs_match_standalone_training() {
    let dir = scratch("sweep");
    let conf = tiny_config(&dir);
    ok(&["pretrain", "--config", s(&conf), "--out", s(&dir)]);
    let ckpt = dir.join("model.ckpt");
    let sweep = dir.join("sweep");
    ok(&["sweep", "--checkpoint", s(&ckpt), "--set", "sweep_lambdas=0,1", "--out", s(&sweep)]);
    let swept = std::fs::read_to_string(sweep.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = swept.lines().collect();
    assert_eq!(lines.len(), 5, "{swept}");
    assert!(lines[0].starts_with("lambda,epoch,"));

    // The lambda = 1 rows are what a standalone run from the same
    // checkpoint writes: earlier runs in the sweep leave no trace.
    let alone = dir.join("alone");
    ok(&["train", "--checkpoint", s(&ckpt), "--lambda", "1", "--out", s(&alone)]);
    let single = std::fs::read_to_string(alone.join("metrics.csv")).unwrap();
    let rows: Vec<String> = lines.iter().filter(|l| l.starts_with("1,")).map(|l| l[2..].to_string()).collect();
    assert_eq!(rows, single.lines().skip(1).map(str::to_string).collect::<Vec<_>>());
}
