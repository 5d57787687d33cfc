use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jointspace::corpus::Section;
use jointspace::eval::Direction;
use jointspace_cli::commands::cmd_sweep;
use jointspace_cli::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jointspace"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).arg("--quiet").output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

const SMALL: &str = r#"
seed = 11
[synth]
n_train = 200
n_test = 60
latent_dim = 8
text_dim = 8
image_dim = 8
[reduction]
pca_dim = 0
[evaluation]
seeds = [0, 1, 2, 3, 4]
k = [1, 10]
"#;

fn summary_value(csv: &str, metric: &str, direction: &str, k: &str) -> f64 {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[0] == metric && f[1] == direction && f[2] == k)
        .unwrap_or_else(|| panic!("{metric},{direction},{k} missing"))[3]
        .parse()
        .unwrap()
}

#[test]
fn synth_writes_dataset_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), SMALL);
    for out in ["a", "b"] {
        let o = run(tmp.path(), &["synth", "--config", "exp.toml", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files = [
        "train/text.emb",
        "train/image.emb",
        "train/pairs.csv",
        "test/text.emb",
        "test/image.emb",
        "test/pairs.csv",
        "labels.csv",
        "wstar.mdl",
    ];
    for f in files {
        let a = fs::read(tmp.path().join("a/synth").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b/synth").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("a/synth/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), files.len());
}

#[test]
fn seed_flag_changes_the_data() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), SMALL);
    run(tmp.path(), &["synth", "--config", "exp.toml", "--out", "a"]);
    run(tmp.path(), &["synth", "--config", "exp.toml", "--out", "b", "--seed", "12"]);
    let a = fs::read(tmp.path().join("a/synth/train/text.emb")).unwrap();
    let b = fs::read(tmp.path().join("b/synth/train/text.emb")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn unknown_ground_truth_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "[synth]\nground_truth = \"rotation\"\n");
    let o = run(tmp.path(), &["synth", "--config", "exp.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("synth.ground_truth"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "[method]\nlearning_rat = 0.1\n");
    let o = run(tmp.path(), &["align", "--config", "exp.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_input_file_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "[data]\nsource = \"files\"\ntrain_text = \"nope.emb\"\ntrain_image = \"nope.emb\"\ntrain_pairs = \"nope.csv\"\n\
         test_text = \"nope.emb\"\ntest_image = \"nope.emb\"\ntest_pairs = \"nope.csv\"\n",
    );
    let o = run(tmp.path(), &["align", "--config", "exp.toml"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn closed_form_without_pairs_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        &format!("{SMALL}\n[method]\nname = \"ea-closed\"\nfraction = 0.0\n"),
    );
    let o = run(tmp.path(), &["align", "--config", "exp.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    write_config(
        tmp.path(),
        &format!("{SMALL}\n[method]\nname = \"ea-closed\"\n[sweep]\nfractions = [0.0, 1.0]\n"),
    );
    let o = run(tmp.path(), &["sweep", "--config", "exp.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn true_map_scores_perfect_mrr_both_ways() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("[synth]", "[synth]\nground_truth = \"permuted-identity\"\nnoise_sigma = 0.0")
        + "\n[method]\nname = \"ea-closed\"\n";
    write_config(tmp.path(), &cfg);
    assert!(run(tmp.path(), &["synth", "--config", "exp.toml"]).status.success());
    let models = tmp.path().join("out/models");
    fs::create_dir_all(&models).unwrap();
    for s in 0..5 {
        fs::copy(tmp.path().join("out/synth/wstar.mdl"), models.join(format!("ea-closed-s{s}.mdl"))).unwrap();
    }
    let o = run(tmp.path(), &["evaluate", "--config", "exp.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(tmp.path().join("out/eval/summary.csv")).unwrap();
    for dir in ["t2i", "i2t"] {
        assert_eq!(summary_value(&summary, "mrr", dir, ""), 1.0);
        assert_eq!(summary_value(&summary, "p_at_1", dir, ""), 1.0);
    }
}

#[test]
fn align_then_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), &format!("{SMALL}\n[method]\nname = \"ea-closed\"\n"));
    let o = run(tmp.path(), &["align", "--config", "exp.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("out/models/ea-closed-s4.mdl").exists());
    let o = run(tmp.path(), &["evaluate", "--config", "exp.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(tmp.path().join("out/eval/summary.csv")).unwrap();
    assert!(summary_value(&summary, "mrr", "t2i", "") > 0.9);
    let metrics = fs::read_to_string(tmp.path().join("out/eval/metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,direction,k,seed,value\n"));
}

#[test]
fn evaluate_without_models_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), SMALL);
    let o = run(tmp.path(), &["evaluate", "--config", "exp.toml"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn baseline_reports_analytic_chance() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), SMALL);
    let o = run(tmp.path(), &["baseline", "--config", "exp.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(tmp.path().join("out/baseline/summary.csv")).unwrap();
    let h: f64 = (1..=60).map(|r| 1.0 / r as f64).sum::<f64>() / 60.0;
    assert!((summary_value(&summary, "mrr_analytic", "t2i", "") - h).abs() < 1e-12);
    let sim = summary_value(&summary, "mrr_chance", "t2i", "");
    assert!((sim - h).abs() < 0.03, "{sim} vs {h}");
}

#[test]
fn featurize_fixture_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = fixtures().join("reports");
    write_config(
        tmp.path(),
        &format!(
            "[data]\ncorpus = \"{}\"\n[features]\nsections = [\"impression\", \"findings\"]\n",
            corpus.display()
        ),
    );
    let o = run(tmp.path(), &["featurize", "--config", "exp.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let feats = tmp.path().join("out/features");
    let skipped = fs::read_to_string(feats.join("impression-tfidf-skipped.txt")).unwrap();
    assert_eq!(skipped, "r10\n");
    let skipped = fs::read_to_string(feats.join("findings-tfidf-skipped.txt")).unwrap();
    assert_eq!(skipped, "r05\n");
    let set = jointspace::format::read_embeddings(&feats.join("impression-tfidf.emb"), jointspace::Modality::Text).unwrap();
    assert_eq!(set.len(), 9);
    for i in 0..set.len() {
        let n: f64 = set.vectors().row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }
}

/// Files-mode dataset over the fixture reports: r01..r07 train, r08..r10 test.
fn fixture_dataset(dir: &Path) {
    let ids: Vec<String> = (1..=10).map(|i| format!("r{i:02}")).collect();
    let emb = |prefix: &str, range: std::ops::Range<usize>| {
        let mut s = format!("emb {} 4\n", range.len());
        for i in range {
            let v: Vec<String> = (0..4).map(|j| format!("{}", ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * j as f64)).collect();
            let id = if prefix == "t" { ids[i].clone() } else { format!("img{i:02}") };
            s.push_str(&format!("{id} {}\n", v.join(" ")));
        }
        s
    };
    let pairs = |range: std::ops::Range<usize>| {
        let mut s = String::from("text_id,image_id\n");
        for i in range {
            s.push_str(&format!("{},img{i:02}\n", ids[i]));
        }
        s
    };
    fs::write(dir.join("train_text.emb"), emb("t", 0..7)).unwrap();
    fs::write(dir.join("train_image.emb"), emb("i", 0..7)).unwrap();
    fs::write(dir.join("test_text.emb"), emb("t", 7..10)).unwrap();
    fs::write(dir.join("test_image.emb"), emb("i", 7..10)).unwrap();
    fs::write(dir.join("train_pairs.csv"), pairs(0..7)).unwrap();
    fs::write(dir.join("test_pairs.csv"), pairs(7..10)).unwrap();
}

#[test]
fn section_sweep_over_fixture_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    fixture_dataset(tmp.path());
    let cfg_path = write_config(
        tmp.path(),
        &format!(
            r#"
seed = 5
[data]
source = "files"
train_text = "train_text.emb"
train_image = "train_image.emb"
train_pairs = "train_pairs.csv"
test_text = "test_text.emb"
test_image = "test_image.emb"
test_pairs = "test_pairs.csv"
corpus = "{}"
[reduction]
pca_dim = 0
[method]
name = "ea-grad"
epochs = 5
batch_size = 4
[evaluation]
seeds = [0, 1]
k = [1]
ndcg = false
[sweep]
fractions = [0.5, 1.0]
sections = ["impression", "findings"]
[output]
dir = "out"
"#,
            fixtures().join("reports").display()
        ),
    );
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let outcome = cmd_sweep(&cfg, &tmp.path().join("out")).unwrap();
    assert_eq!(outcome.cells.len(), 4);
    for s in [Section::Impression, Section::Findings] {
        let series = outcome.series(Some(s), "mrr", Some(Direction::TextToImage), None);
        assert_eq!(series.iter().map(|p| p.0).collect::<Vec<_>>(), [0.5, 1.0]);
        assert!(series.iter().all(|p| p.1 > 0.0 && p.1 <= 1.0));
    }
    let sweep = tmp.path().join("out/sweep");
    assert!(sweep.join("impression/f0.5/metrics.csv").exists());
    assert!(sweep.join("findings/f1/summary.csv").exists());
    let sections = fs::read_to_string(sweep.join("sections.csv")).unwrap();
    assert!(sections.lines().any(|l| l.starts_with("impression,1,mrr,t2i")));
    assert!(sections.lines().any(|l| l.starts_with("findings,1,mrr,t2i")));
}
