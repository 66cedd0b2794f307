use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SCENARIO: &str = r#"
seed = 5
start = "1983-01"
background_rate = 20.0

[[phases]]
name = "quiet"
months = 200

[[phases.sources]]
meshes = [[50, 50], [50, 51], [51, 50]]
rate = 2.0

[[phases]]
name = "busy"
months = 211

[[phases.sources]]
meshes = [[50, 50], [50, 51], [51, 50], [52, 52], [55, 55]]
rate = 4.0
"#;

fn resi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resi")).args(args).output().expect("binary runs")
}

fn scenario(dir: &Path) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, SCENARIO).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn synth_then_parse_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario(dir.path());
    let jma = dir.path().join("cat.txt");
    let o = resi(&["synth", &scen, "--out", jma.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = dir.path().join("events.csv");
    let o = resi(&["parse", jma.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("0 rejected"));

    let direct = dir.path().join("direct.csv");
    let o = resi(&["synth", &scen, "--format", "csv", "--out", direct.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&csv).unwrap(), fs::read_to_string(&direct).unwrap());
    let header = fs::read_to_string(&csv).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(header, "time_utc,lat_deg,lon_deg,depth_km,mag");
}

#[test]
fn run_synthetic_writes_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario(dir.path());
    let out = dir.path().join("out");
    let o = resi(&["run", "--synthetic", &scen, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["series.csv", "alarms.csv", "baselines.csv", "report.json", "plots/cell_00.svg", "plots/map_hr_sat_12.svg"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("cell_id,window_start,h,hr,hr_avr,p_s,no_data\n"));
    assert_eq!(series.lines().count(), 1 + 36 * 411);
    let alarms = fs::read_to_string(out.join("alarms.csv")).unwrap();
    assert!(alarms.starts_with("cell_id,window_start,hr,hr_avr,hr_sat,activity,high_hr,high_activity\n"));
    let baselines = fs::read_to_string(out.join("baselines.csv")).unwrap();
    assert!(baselines.starts_with("cell_id,window_start,pi,ri,high_pi,high_ri\n"));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 36);
    assert!(report["cells"][0]["functions"]["hr_sat"]["12"].get("prec").is_some());
    assert!(report["active_cells"].is_array());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = resi(&["run", "--synthetic", &scen, "--no-svg", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["series.csv", "alarms.csv", "baselines.csv", "report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn eval_reads_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario(dir.path());
    let out = dir.path().join("out");
    assert!(resi(&["run", "--synthetic", &scen, "--no-svg", "--out", out.to_str().unwrap()]).status.success());
    let report = out.join("report.json");
    let o = resi(&["eval", "--report", report.to_str().unwrap(), "--dt", "12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("active cells"));
    assert!(text.contains("hr_sat"));
    assert_eq!(text.lines().filter(|l| l.starts_with("hr_sat ")).count(), 1);

    let o = resi(&["eval", "--report", report.to_str().unwrap(), "--dt", "48"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_from_exports() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario(dir.path());
    let out = dir.path().join("out");
    assert!(resi(&["run", "--synthetic", &scen, "--no-svg", "--out", out.to_str().unwrap()]).status.success());
    let plots = dir.path().join("plots");
    let o = resi(&[
        "plot",
        "--alarms",
        out.join("alarms.csv").to_str().unwrap(),
        "--report",
        out.join("report.json").to_str().unwrap(),
        "--cells",
        "14",
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(plots.join("cell_14.svg")).unwrap();
    assert!(svg.contains("stroke=\"green\"") && svg.contains("stroke=\"blue\""));
    assert!(!plots.join("cell_00.svg").exists());
    assert!(plots.join("map_ri_36.svg").exists());
}

#[test]
fn geojson_snapshots_from_config() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[input]\nsynthetic = \"scenario.toml\"\n\n[output]\ndir = \"res\"\nsvg = false\ngeojson = [\"2000-01\"]\n",
    )
    .unwrap();
    let o = resi(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let g: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("res/clusters_2000-01.geojson")).unwrap()).unwrap();
    let features = g["features"].as_array().unwrap();
    assert!(!features.is_empty());
    for f in features {
        assert!(f["properties"]["cluster_id"].is_u64());
        assert!(f["properties"]["event_count"].as_u64().unwrap() >= 2);
        assert!(f["properties"]["cell_id"].is_u64());
    }
}

#[test]
fn missing_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = resi(&["run", "--catalog", dir.path().join("nope.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = resi(&["run"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_geometry_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario(dir.path());
    let o = resi(&["run", "--synthetic", &scen, "--cell", "3.7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("invalid configuration"));
}

#[test]
fn grid_flags_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario(dir.path());
    let out = dir.path().join("out");
    let o = resi(&[
        "run",
        "--synthetic",
        &scen,
        "--mesh",
        "0.1",
        "--cell",
        "4",
        "--window",
        "year",
        "--m0",
        "2.0",
        "--theta-m",
        "1",
        "--universe",
        "25,125,49,149",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 36 * 35);
    // yearly runs carry no baselines or report
    assert!(!out.join("report.json").exists());
}
