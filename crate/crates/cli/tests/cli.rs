use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn casgcn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casgcn"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL: &str = r#"
name = "small"

[synth]
count = 60
seed = 3

[synth.generator]
base_rate = 1.0
influence_shape = 1.6

[data]
dataset = "runs/small/dataset.jsonl"
split_seed = 1

[experiment]
vocab_min_count = 1

[experiment.model]
embed_dim = 4
readout_dim = 4
mlp_hidden = [4]

[experiment.train]
epochs = 3
batch_size = 8
"#;

#[test]
fn synth_train_evaluate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), SMALL).unwrap();
    for cmd in ["synth", "train", "evaluate"] {
        let out = casgcn(tmp.path(), &[cmd, "--config", "run.toml"]);
        assert!(out.status.success(), "{cmd}: {}", stderr(&out));
    }
    let run = tmp.path().join("runs/small");
    for file in ["dataset.jsonl", "model.ckpt", "vocab.txt", "model.toml", "history.tsv", "eval_test.tsv", "train.manifest.toml"] {
        assert!(run.join(file).exists(), "missing {file}");
    }
    let first = fs::read_to_string(run.join("eval_test.tsv")).unwrap();
    assert!(first.starts_with("split\tn\tmsle\ntest\t"));
    let ckpt = fs::read(run.join("model.ckpt")).unwrap();

    // Re-running from the written manifests reproduces every artifact.
    fs::copy(run.join("train.manifest.toml"), tmp.path().join("train.toml")).unwrap();
    fs::copy(run.join("evaluate.manifest.toml"), tmp.path().join("evaluate.toml")).unwrap();
    for (cmd, cfg) in [("train", "train.toml"), ("evaluate", "evaluate.toml")] {
        let out = casgcn(tmp.path(), &[cmd, "--config", cfg]);
        assert!(out.status.success(), "{cmd}: {}", stderr(&out));
    }
    assert_eq!(fs::read(run.join("model.ckpt")).unwrap(), ckpt);
    assert_eq!(fs::read_to_string(run.join("eval_test.tsv")).unwrap(), first);
}

#[test]
fn zero_base_rate_gives_single_node_cascades() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), "name = \"flat\"\n[synth]\ncount = 20\n").unwrap();
    let out = casgcn(
        tmp.path(),
        &["synth", "--config", "run.toml", "--set", "synth.generator.base_rate=0"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let data = casgcn_core::ingest::read_cascades(&tmp.path().join("runs/flat/dataset.jsonl")).unwrap();
    assert_eq!(data.len(), 20);
    assert!(data.iter().all(|c| c.node_count() == 1 && c.label.unwrap().0 == 0));
}

#[test]
fn ablate_and_compare_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), SMALL).unwrap();
    assert!(casgcn(tmp.path(), &["synth", "--config", "run.toml"]).status.success());

    let out = casgcn(tmp.path(), &["ablate", "--config", "run.toml"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(tmp.path().join("runs/small/ablation.tsv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "model\tdataset\tval_msle\ttest_msle\tp_value\tsignificance");
    let names: Vec<&str> = lines[1..].iter().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(
        names,
        ["CasGCN", "CasGCN-max", "CasGCN-mean", "CasGCN-undirected", "CasGCN(no time effect)"]
    );
    assert!(lines[1..].iter().all(|l| l.split('\t').count() == 6));

    let out = casgcn(tmp.path(), &["compare", "--config", "run.toml"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(tmp.path().join("runs/small/comparison.tsv")).unwrap();
    let names: Vec<&str> = table.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, ["Feature-linear", "Feature-deep", "CasGCN"]);
}

#[test]
fn ingest_commands_convert_sources() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("weibo");
    fs::create_dir(&src).unwrap();
    fs::write(src.join("m1.tsv"), "O\t0\t\nA\t60\t\nB\t120\t//@A: nice\nC\t90000\t//@B//@A\n").unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        "name = \"w\"\n[weibo]\nsource = \"weibo\"\n",
    )
    .unwrap();
    let out = casgcn(tmp.path(), &["ingest-weibo", "--config", "run.toml"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let data = casgcn_core::ingest::read_cascades(&tmp.path().join("runs/w/dataset.jsonl")).unwrap();
    assert_eq!(data.len(), 1);
    assert_eq!(data[0].graph.cascade_id, "m1");

    fs::write(tmp.path().join("papers.tsv"), "A\t1990\t\nB\t1992\tA\nC\t1993\tA,B\n").unwrap();
    fs::write(
        tmp.path().join("cit.toml"),
        "name = \"c\"\n[citations]\nsource = \"papers.tsv\"\ntargets = [\"A\"]\n",
    )
    .unwrap();
    let out = casgcn(tmp.path(), &["ingest-citations", "--config", "cit.toml"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let data = casgcn_core::ingest::read_cascades(&tmp.path().join("runs/c/dataset.jsonl")).unwrap();
    assert_eq!(data.len(), 1);
    assert_eq!(data[0].graph.edges.len(), 3);
}

#[test]
fn errors_are_single_classified_lines() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "name = \"x\"\nsurprise = true\n").unwrap();
    let out = casgcn(tmp.path(), &["synth", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[config]: "), "{err}");

    let out = casgcn(tmp.path(), &["synth", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error[io]: "));

    fs::write(tmp.path().join("t.toml"), "name = \"t\"\n[data]\ndataset = \"nope.jsonl\"\n").unwrap();
    let out = casgcn(tmp.path(), &["train", "--config", "t.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("runs/t").exists(), "failed run left artifacts");

    fs::write(tmp.path().join("garbage.jsonl"), "# cascade-v1\n{not json}\n").unwrap();
    fs::write(tmp.path().join("g.toml"), "name = \"g\"\n[data]\ndataset = \"garbage.jsonl\"\n").unwrap();
    let out = casgcn(tmp.path(), &["train", "--config", "g.toml"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).starts_with("error[data]: line 2"), "{}", stderr(&out));
}
