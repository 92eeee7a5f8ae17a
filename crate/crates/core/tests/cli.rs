use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shoplens::pipeline::{sha256_file, Manifest};

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline.toml")
}

fn shoplens(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shoplens"))
        .arg("--config")
        .arg(config_path())
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("SHOPLENS_FIXTURE_DIR")
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) {
    let o = shoplens(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(out: &Path, name: &str) -> String {
    fs::read_to_string(out.join(name)).unwrap()
}

#[test]
fn full_run_writes_schema_tagged_tables_and_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(out, &["harvest"]);
    ok(out, &["sweep"]);
    ok(out, &["report"]);
    ok(out, &["query", "--topic", "0", "--terms", "2", "--augment", "db"]);

    assert_eq!(read(out, "dataset.ndjson").lines().count(), 10);
    assert!(read(out, "harvest_summary.tsv").contains("Total (unique)\t15\t10"));
    let coherence = read(out, "coherence.tsv");
    assert!(coherence.starts_with("#schema=coherence/v1\nk\tcv\n"));
    assert_eq!(coherence.lines().count(), 2 + 5);
    for stem in ["topics", "category_counts", "price_stats", "price_bins", "false_products", "topic_0_query"] {
        assert!(read(out, &format!("{stem}.tsv")).starts_with("#schema="), "{stem}");
    }
    let flagged = read(out, "false_products.tsv");
    assert_eq!(flagged.lines().count(), 2 + 4);
    assert!(flagged.contains("zero-information-service"));

    let terms = read(out, "topic_0_terms.tsv");
    assert!(terms.lines().any(|l| l == "augment\tdb\t"));
    assert!(read(out, "topic_0_query.tsv").contains("Forum DB dump 2020 full"));

    for name in ["harvest", "sweep", "report", "topic_0_query"] {
        let m: Manifest = serde_json::from_str(&read(out, &format!("{name}.manifest.json"))).unwrap();
        assert_eq!(m.master_seed, 2020);
        assert!(!m.outputs.is_empty());
        for f in &m.outputs {
            assert_eq!(sha256_file(&out.join(&f.path)).unwrap(), f.sha256, "{name}: {}", f.path);
        }
    }
}

#[test]
fn train_uses_the_configured_k() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(out, &["harvest"]);
    ok(out, &["train", "--k", "3", "--iterations", "50"]);
    let phi = read(out, "phi.tsv");
    assert_eq!(phi.lines().count(), 3);
    let m: Manifest = serde_json::from_str(&read(out, "train.manifest.json")).unwrap();
    assert_eq!(m.seeds.len(), 1);
}

#[test]
fn seed_flag_changes_the_recorded_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(out, &["harvest"]);
    ok(out, &["--seed", "7", "sweep", "--k-values", "2,3", "--iterations", "20"]);
    let m: Manifest = serde_json::from_str(&read(out, "sweep.manifest.json")).unwrap();
    assert_eq!(m.master_seed, 7);
    assert_eq!(m.seeds.len(), 2);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();

    // Usage errors.
    assert_eq!(code(&shoplens(out, &["frobnicate"])), 2);
    assert_eq!(code(&shoplens(out, &["sweep", "--k-values", "x"])), 2);
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[lda]\nbogus = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shoplens"))
        .args(["--config", bad.to_str().unwrap(), "report"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);

    // Data errors.
    assert_eq!(code(&shoplens(out, &["sweep"])), 3, "missing dataset");
    assert_eq!(code(&shoplens(out, &["report"])), 3, "missing model");

    ok(out, &["harvest"]);
    ok(out, &["sweep", "--k-values", "2,3", "--iterations", "20"]);
    assert_eq!(code(&shoplens(out, &["query", "--topic", "9"])), 2, "topic out of range");

    let empty = tmp.path().join("empty.ndjson");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&shoplens(out, &["report", "--dataset", empty.to_str().unwrap()])), 3);
    assert_eq!(code(&shoplens(out, &["sweep", "--dataset", empty.to_str().unwrap()])), 3);

    let garbled = tmp.path().join("garbled.ndjson");
    fs::write(&garbled, "{not json\n").unwrap();
    assert_eq!(code(&shoplens(out, &["train", "--dataset", garbled.to_str().unwrap()])), 3);

    // A vocabulary that does not belong to the model.
    fs::write(out.join("vocabulary.tsv"), "term\tdf\nzzz\t1\nyyy\t1\n").unwrap();
    assert_eq!(code(&shoplens(out, &["report"])), 3, "vocabulary mismatch");
}

#[test]
fn fixture_dir_can_come_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/harvest");
    let cfg = tmp.path().join("cfg.toml");
    let text = fs::read_to_string(config_path()).unwrap().replace("fixture_dir = \"harvest\"\n", "");
    fs::write(&cfg, text).unwrap();
    let run = |env: Option<&Path>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_shoplens"));
        c.args(["--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap(), "harvest"])
            .env("RUST_LOG", "error")
            .env_remove("SHOPLENS_FIXTURE_DIR");
        if let Some(dir) = env {
            c.env("SHOPLENS_FIXTURE_DIR", dir);
        }
        c.output().unwrap()
    };
    assert_eq!(code(&run(None)), 2);
    assert!(run(Some(&fixtures)).status.success());
    assert_eq!(fs::read_to_string(tmp.path().join("o/dataset.ndjson")).unwrap().lines().count(), 10);
}
