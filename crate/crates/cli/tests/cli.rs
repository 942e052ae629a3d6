use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_firerisk");

struct Run {
    dir: TempDir,
    config: PathBuf,
}

impl Run {
    /// Small corpus: national GAM fits, strata too small and skipped.
    fn new() -> Run {
        Run::with_extra("")
    }

    fn with_extra(extra: &str) -> Run {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("run.toml");
        fs::write(
            &config,
            format!(
                r#"seed = 7
{extra}
[paths]
output = "out"

[synthetic]
states_per_region = 2
counties_per_state = 4
n_years = 2

[gam]
k = 5

[firecat.params]
rounds = 30
max_depth = 4

[explain]
rows = 150
pdp_points = 4
pairs = [["response_minutes", "total_sqft"]]
"#
            ),
        )
        .unwrap();
        Run { dir, config }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn cmd(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .arg("-c")
            .arg(&self.config)
            .args(args)
            .env_remove("FIRERISK_OUT")
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) {
        let out = self.cmd(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.ends_with(".json").then_some(name)
        })
        .collect();
    names.sort();
    names
}

#[test]
fn synthetic_ingest_round_trips() {
    let run = Run::new();
    run.ok(&["ingest", "--synthetic"]);
    let roundtrip = fs::read_to_string(run.out().join("ingest/roundtrip.json")).unwrap();
    assert!(roundtrip.contains("\"identical\": true"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.out().join("ingest/load_report.json")).unwrap()).unwrap();
    assert_eq!(report["rows_in"], report["rows_kept"]);
    assert!(run.out().join("data/synthetic_truth.json").exists());
}

#[test]
fn missing_incidents_path_is_a_user_error() {
    let run = Run::with_extra("");
    fs::write(
        &run.config,
        "seed = 1\n[paths]\noutput = \"out\"\nincidents = \"no_such_incidents.csv\"\n",
    )
    .unwrap();
    let out = run.cmd(&["ingest"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no_such_incidents.csv"));
}

#[test]
fn config_errors_exit_2() {
    let run = Run::new();
    fs::write(&run.config, "[paths]\noutput = \"out\"\n").unwrap();
    let out = run.cmd(&["synth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("seed"));

    fs::write(&run.config, "seed = 1\nunknown_key = true\n").unwrap();
    assert_eq!(run.cmd(&["synth"]).status.code(), Some(2));

    let missing = Command::new(BIN)
        .args(["-c", "/definitely/not/here.toml", "synth"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let bad_target = run.cmd(&["fit-firecat", "--target", "smoke"]);
    assert_eq!(bad_target.status.code(), Some(2));
}

#[test]
fn output_dir_env_override() {
    let run = Run::new();
    let alt = run.dir.path().join("elsewhere");
    let out = Command::new(BIN)
        .arg("-c")
        .arg(&run.config)
        .arg("synth")
        .env("FIRERISK_OUT", &alt)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(alt.join("data/incidents.csv").exists());
    assert!(!run.out().exists());
}

#[test]
fn gam_fits_are_complete_and_deterministic() {
    let run = Run::new();
    run.ok(&["ingest", "--synthetic"]);
    run.ok(&["rates"]);
    run.ok(&["fit-gam"]);
    let gam = run.out().join("gam");
    let files = json_files(&gam);
    assert_eq!(files.len(), 9, "{files:?}");
    assert_eq!(files.iter().filter(|f| f.starts_with("seasonal_")).count(), 4);
    assert_eq!(files.iter().filter(|f| f.starts_with("regional_")).count(), 4);
    assert!(gam.join("pdp/national.csv").exists());
    assert!(gam.join("diagnostics/national.json").exists());
    // strata of this small corpus fall below ten rows per coefficient
    let winter = fs::read_to_string(gam.join("seasonal_winter.json")).unwrap();
    assert!(winter.contains("\"status\": \"skipped\""));

    let first = fs::read(gam.join("national.json")).unwrap();
    run.ok(&["fit-gam"]);
    assert_eq!(fs::read(gam.join("national.json")).unwrap(), first);
}

#[test]
fn corrupt_rates_name_the_row() {
    let run = Run::new();
    run.ok(&["ingest", "--synthetic"]);
    run.ok(&["rates"]);
    let rates = run.out().join("rates/rates.csv");
    let text = fs::read_to_string(&rates).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[3] = "06001,2019,7,four,1000,1.0";
    fs::write(&rates, lines.join("\n")).unwrap();
    let out = run.cmd(&["fit-gam"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 3"), "{}", stderr(&out));
}

#[test]
fn firecat_pipeline_contract() {
    let run = Run::new();
    run.ok(&["ingest", "--synthetic"]);
    run.ok(&["targets"]);
    run.ok(&["fit-firecat"]);
    for target in ["spread", "injury", "loss"] {
        let dir = run.out().join("firecat").join(target);
        assert_eq!(
            json_files(&dir),
            vec!["baseline.json", "eval_baseline.json", "eval_firecat.json", "model.json"]
        );
        for suffix in ["firecat", "baseline"] {
            assert!(dir.join(format!("confusion_{suffix}.csv")).exists());
            assert!(dir.join(format!("curve_{suffix}.csv")).exists());
        }
    }
    let model = |t: &str| fs::read(run.out().join("firecat").join(t).join("model.json")).unwrap();
    let before = model("injury");
    run.ok(&["fit-firecat", "--target", "injury"]);
    assert_eq!(model("injury"), before);

    run.ok(&["evaluate", "--target", "loss"]);
    let evaluated = fs::read(run.out().join("evaluate/loss/eval_firecat.json")).unwrap();
    assert_eq!(evaluated, fs::read(run.out().join("firecat/loss/eval_firecat.json")).unwrap());

    run.ok(&["explain", "--target", "spread"]);
    let dir = run.out().join("explain/spread");
    for f in [
        "shap_long.csv",
        "ranking.json",
        "category_effects.json",
        "pdp1.csv",
        "pdp2_response_minutes__total_sqft.csv",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let shap = fs::read(dir.join("shap_long.csv")).unwrap();
    run.ok(&["explain", "--target", "spread"]);
    assert_eq!(fs::read(dir.join("shap_long.csv")).unwrap(), shap);
    let header = String::from_utf8(shap).unwrap();
    assert!(header.starts_with("row_id,feature,value,shap,class\n"));

    run.ok(&["pdp2", "--target", "loss", "--fx", "hour", "--fy", "wind_speed", "--points", "3"]);
    let grid = fs::read_to_string(run.out().join("pdp2/loss_hour__wind_speed.csv")).unwrap();
    assert_eq!(grid.lines().count(), 10);
    let same = run.cmd(&["pdp2", "--target", "loss", "--fx", "hour", "--fy", "hour"]);
    assert_eq!(same.status.code(), Some(2));

    let missing = run.cmd(&["explain", "--target", "spread", "--model", "absent.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("absent.json"));
}
