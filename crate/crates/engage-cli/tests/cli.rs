//! End-to-end tests driving the `engage` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn engage(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_engage"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn write(path: &Path, content: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, content).unwrap();
}

fn simulate_config(dir: &Path, out: &str, id: &str, seed: u64, duration: u32) -> PathBuf {
    let path = dir.join(format!("sim-{id}.toml"));
    write(
        &path,
        &format!(
            r#"
[output]
dir = "{out}"

[scenario]
id = "{id}"
n_students = 4
duration_s = {duration}
tutor_present = true
mean_dwell_s = 25.0
weights = [0.25, 0.2, 0.1, 0.1, 0.1, 0.1, 0.15]
seed = {seed}
"#
        ),
    );
    path
}

#[test]
fn simulate_with_self_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate_config(dir.path(), "out", "demo", 9, 400);
    let output = engage(
        &["simulate", "--config", config.to_str().unwrap(), "--self-check"],
        dir.path(),
    );
    assert_success(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("seconds matched"), "stdout: {stdout}");

    for artifact in [
        "out/sessions/demo/timeline.json",
        "out/sessions/demo/ground_truth.csv",
        "out/sessions/demo/raw/gaze.csv",
        "out/sessions/demo/raw/diarization.csv",
        "out/sessions/demo/raw/speaker_map.csv",
        "out/sessions/demo/raw/roster.csv",
        "out/manifest.json",
    ] {
        assert!(dir.path().join(artifact).is_file(), "{artifact} missing");
    }
}

/// Simulated raw documents ingest back into the exact same timeline bundle,
/// and analyze produces coded tables and profiles for every session.
#[test]
fn ingest_and_analyze_round_trip_simulated_sessions() {
    let dir = tempfile::tempdir().unwrap();
    for (id, seed) in [("A", 1u64), ("B", 2u64)] {
        let config = simulate_config(dir.path(), "sim", id, seed, 300);
        assert_success(&engage(&["simulate", "--config", config.to_str().unwrap()], dir.path()));
    }

    // One gaze table and one roster covering both sessions; the speaker maps
    // are identical by construction, so either file works globally.
    let sim = dir.path().join("sim/sessions");
    let merge = |name: &str| {
        let a = fs::read_to_string(sim.join("A/raw").join(name)).unwrap();
        let b = fs::read_to_string(sim.join("B/raw").join(name)).unwrap();
        let body_b: String = b.lines().skip(1).collect::<Vec<_>>().join("\n");
        format!("{a}{body_b}\n")
    };
    write(&dir.path().join("inputs/gaze.csv"), &merge("gaze.csv"));
    write(&dir.path().join("inputs/roster.csv"), &merge("roster.csv"));
    fs::copy(
        sim.join("A/raw/speaker_map.csv"),
        dir.path().join("inputs/speaker_map.csv"),
    )
    .unwrap();

    let config = dir.path().join("run.toml");
    write(
        &config,
        r#"
[inputs]
gaze = "inputs/gaze.csv"
speaker_map = "inputs/speaker_map.csv"
roster = "inputs/roster.csv"

[[sessions]]
id = "A"
diarization = "sim/sessions/A/raw/diarization.csv"
duration_s = 300

[[sessions]]
id = "B"
diarization = "sim/sessions/B/raw/diarization.csv"
duration_s = 300

[output]
dir = "out"
jobs = 2
"#,
    );

    assert_success(&engage(&["ingest", "--config", config.to_str().unwrap()], dir.path()));
    for id in ["A", "B"] {
        let ingested: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(format!("out/sessions/{id}/timeline.json")))
                .unwrap(),
        )
        .unwrap();
        let simulated: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(format!("sim/sessions/{id}/timeline.json")))
                .unwrap(),
        )
        .unwrap();
        assert_eq!(
            ingested["timeline"], simulated["timeline"],
            "session {id} did not round-trip"
        );
    }

    assert_success(&engage(&["analyze", "--config", config.to_str().unwrap()], dir.path()));
    let profiles = fs::read_to_string(dir.path().join("out/profiles.csv")).unwrap();
    assert_eq!(profiles.lines().count(), 1 + 8, "4 students x 2 sessions");
    let coded = fs::read_to_string(dir.path().join("out/sessions/A/coded.csv")).unwrap();
    assert_eq!(coded.lines().count(), 1 + 300);
}

fn worked_example_fixtures(dir: &Path) -> PathBuf {
    let mut gaze = String::from("session_id,second,participant_id,gaze\n");
    for second in 0..320u32 {
        let gazes: [&str; 4] = if second < 10 {
            ["Laptop"; 4]
        } else if second < 310 {
            ["Other"; 4]
        } else {
            ["Other", "Student", "Student", "Student"]
        };
        for (idx, g) in gazes.iter().enumerate() {
            gaze.push_str(&format!("W9G2,{second},S{},{g}\n", idx + 1));
        }
    }
    write(&dir.join("inputs/gaze.csv"), &gaze);
    write(
        &dir.join("inputs/diarization.json"),
        r#"{"results": {"speaker_labels": {"segments": [
            {"speaker_label": "spk_1", "start_time": "2.0", "end_time": "3.0"},
            {"speaker_label": "spk_1", "start_time": "314.0", "end_time": "315.0"}
        ]}}}"#,
    );
    write(
        &dir.join("inputs/speaker_map.csv"),
        "speaker_label,participant_id,role\nspk_1,S2,Student\n",
    );
    write(
        &dir.join("inputs/roster.csv"),
        "session_id,participant_id,role\nW9G2,S1,Student\nW9G2,S2,Student\nW9G2,S3,Student\nW9G2,S4,Student\n",
    );
    let config = dir.join("run.toml");
    write(
        &config,
        r#"
[inputs]
gaze = "inputs/gaze.csv"
speaker_map = "inputs/speaker_map.csv"
roster = "inputs/roster.csv"

[[sessions]]
id = "W9G2"
diarization = "inputs/diarization.json"

[output]
dir = "out"
"#,
    );
    config
}

#[test]
fn worked_example_rows_survive_the_cli_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = worked_example_fixtures(dir.path());
    assert_success(&engage(&["ingest", "--config", config.to_str().unwrap()], dir.path()));
    assert_success(&engage(&["analyze", "--config", config.to_str().unwrap()], dir.path()));

    let coded = fs::read_to_string(dir.path().join("out/sessions/W9G2/coded.csv")).unwrap();
    let lines: Vec<&str> = coded.lines().collect();
    assert_eq!(
        lines[0],
        "second,interaction,S1_gaze,S1_speaking,S2_gaze,S2_speaking,S3_gaze,S3_speaking,\
         S4_gaze,S4_speaking,S1_code,S2_code,S3_code,S4_code"
    );
    assert_eq!(
        lines[1 + 2],
        "2,RF,Laptop,N,Laptop,Y,Laptop,N,Laptop,N,\
         Semi-active,Active,Semi-active,Semi-active"
    );
    assert_eq!(
        lines[1 + 314],
        "314,IPC,Other,N,Student,Y,Student,N,Student,N,\
         Passive,Active,Semi-active,Semi-active"
    );
}

fn recovery_profiles_csv() -> String {
    // Two separable clouds in the canonical profiles layout.
    let mut out = String::from("participant_id,session_id,freq_active,freq_semi,freq_passive\n");
    for i in 0..10 {
        let eps = i as f64 * 0.004;
        out.push_str(&format!(
            "d{i},s1,{:.4},{:.4},{:.4}\n",
            0.30 + eps,
            0.44 - eps,
            0.26
        ));
        out.push_str(&format!(
            "p{i},s1,{:.4},{:.4},{:.4}\n",
            0.09 + eps,
            0.60 - eps,
            0.31
        ));
    }
    out
}

#[test]
fn cluster_and_compare_produce_reports() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("out/profiles.csv"), &recovery_profiles_csv());

    // Engagement-like measure separated by group, a constant measure, and a
    // measure with a single driver value.
    let mut measures = String::from("participant_id,measure_name,value\n");
    for i in 0..10 {
        measures.push_str(&format!("d{i},reported_engagement,{}\n", 4.0 + (i % 3) as f64 * 0.5));
        measures.push_str(&format!("p{i},reported_engagement,{}\n", 3.0 + (i % 3) as f64 * 0.5));
        measures.push_str(&format!("d{i},constant,2.5\np{i},constant,2.5\n"));
    }
    measures.push_str("d0,lonely,1.0\n");
    write(&dir.path().join("inputs/measures.csv"), &measures);

    let config = dir.path().join("run.toml");
    write(
        &config,
        r#"
[inputs]
measures = "inputs/measures.csv"

[clustering]
k = 2
runs = 10
seed = 7

[output]
dir = "out"
"#,
    );

    let output = engage(&["cluster", "--config", config.to_str().unwrap()], dir.path());
    assert_success(&output);
    let doc: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/clusters.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc["k"], 2);
    assert_eq!(doc["seed"], 7);
    let labeling = &doc["labeling"];
    assert!(labeling.is_object(), "labeling missing: {doc}");
    // Every d* point is a driver, every p* point a passenger.
    for entry in doc["assignments"].as_array().unwrap() {
        let id = entry["participant_id"].as_str().unwrap();
        let expected = if id.starts_with('d') { "driver" } else { "passenger" };
        assert_eq!(entry["label"], expected, "{id}");
    }
    let means = fs::read_to_string(dir.path().join("out/cluster_means.csv")).unwrap();
    assert_eq!(means.lines().count(), 3);

    let output = engage(&["compare", "--config", config.to_str().unwrap()], dir.path());
    assert_success(&output);
    let report = fs::read_to_string(dir.path().join("out/comparisons.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert!(lines[0].starts_with("measure,driver_n,driver_mean"));
    let engagement = lines.iter().find(|l| l.starts_with("reported_engagement,")).unwrap();
    assert!(engagement.contains(",10,"), "n=10 per group: {engagement}");
    let constant = lines.iter().find(|l| l.starts_with("constant,")).unwrap();
    let p_two: f64 = constant.split(',').nth(10).unwrap().parse().unwrap();
    assert_eq!(p_two, 1.0, "constant measure: {constant}");
    let lonely = lines.iter().find(|l| l.starts_with("lonely,")).unwrap();
    assert!(lonely.contains("n = 1"), "inline error row: {lonely}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = worked_example_fixtures(dir.path());
    let run = |_: usize| {
        assert_success(&engage(&["ingest", "--config", config.to_str().unwrap()], dir.path()));
        assert_success(&engage(&["analyze", "--config", config.to_str().unwrap()], dir.path()));
        [
            "out/sessions/W9G2/timeline.json",
            "out/sessions/W9G2/ingest_report.json",
            "out/sessions/W9G2/coded.csv",
            "out/profiles.csv",
        ]
        .map(|p| fs::read(dir.path().join(p)).unwrap())
    };
    let first = run(0);
    let second = run(1);
    assert_eq!(first, second);
}

#[test]
fn missing_speaker_map_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = worked_example_fixtures(dir.path());
    fs::remove_file(dir.path().join("inputs/speaker_map.csv")).unwrap();
    let output = engage(&["ingest", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(exit_code(&output), 1, "stderr: {}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn empty_gaze_table_exits_with_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = worked_example_fixtures(dir.path());
    write(&dir.path().join("inputs/gaze.csv"), "");
    let output = engage(&["ingest", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(exit_code(&output), 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("missing column"), "stderr: {stderr}");
}

#[test]
fn unmapped_speaker_in_strict_mode_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = worked_example_fixtures(dir.path());
    write(
        &dir.path().join("inputs/speaker_map.csv"),
        "speaker_label,participant_id,role\nspk_other,S2,Student\n",
    );
    let output = engage(
        &["ingest", "--config", config.to_str().unwrap(), "--strict"],
        dir.path(),
    );
    assert_eq!(exit_code(&output), 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unmapped speaker labels"), "stderr: {stderr}");
}

#[test]
fn lenient_mode_reports_unmapped_labels_instead_of_failing() {
    let dir = tempfile::tempdir().unwrap();
    let config = worked_example_fixtures(dir.path());
    write(
        &dir.path().join("inputs/speaker_map.csv"),
        "speaker_label,participant_id,role\nspk_other,S2,Student\n",
    );
    let output = engage(
        &["ingest", "--config", config.to_str().unwrap(), "--lenient"],
        dir.path(),
    );
    assert_success(&output);
    let report = fs::read_to_string(dir.path().join("out/sessions/W9G2/ingest_report.json")).unwrap();
    assert!(report.contains("spk_1"), "unmapped label recorded: {report}");
}

#[test]
fn too_few_profiles_for_k_exits_with_degenerate_error() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("out/profiles.csv"),
        "participant_id,session_id,freq_active,freq_semi,freq_passive\nS1,s,0.3,0.4,0.3\n",
    );
    let output = engage(&["cluster", "--out", "out", "--k", "2"], dir.path());
    assert_eq!(exit_code(&output), 3, "stderr: {}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn measures_for_unknown_participant_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("out/profiles.csv"), &recovery_profiles_csv());
    assert_success(&engage(&["cluster", "--out", "out", "--seed", "7"], dir.path()));
    write(
        &dir.path().join("measures.csv"),
        "participant_id,measure_name,value\nghost,score,1.0\n",
    );
    let output = engage(
        &["compare", "--out", "out", "--measures", "measures.csv"],
        dir.path(),
    );
    assert_eq!(exit_code(&output), 1);
}

#[test]
fn invalid_scenario_weights_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    write(
        &config,
        r#"
[output]
dir = "out"

[scenario]
tutor_present = false
weights = [0.3, 0.2, 0.1, 0.1, 0.2, 0.0, 0.1]
"#,
    );
    let output = engage(&["simulate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(exit_code(&output), 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("tutor_present"), "stderr: {stderr}");
}

#[test]
fn k_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("out/profiles.csv"), &recovery_profiles_csv());
    let config = dir.path().join("run.toml");
    write(&config, "[clustering]\nk = 2\n\n[output]\ndir = \"out\"\n");
    assert_success(&engage(
        &["cluster", "--config", config.to_str().unwrap(), "--k", "1"],
        dir.path(),
    ));
    let means = fs::read_to_string(dir.path().join("out/cluster_means.csv")).unwrap();
    assert_eq!(means.lines().count(), 2, "one cluster row plus header");
}

#[test]
fn report_chains_all_configured_stages() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate_config(dir.path(), "out", "full", 17, 500);
    assert_success(&engage(&["simulate", "--config", config.to_str().unwrap()], dir.path()));
    let output = engage(&["report", "--config", config.to_str().unwrap()], dir.path());
    assert_success(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("skipping ingest"), "stdout: {stdout}");
    assert!(stdout.contains("skipping compare"), "stdout: {stdout}");
    for artifact in ["out/profiles.csv", "out/clusters.json", "out/cluster_means.csv"] {
        assert!(dir.path().join(artifact).is_file(), "{artifact} missing");
    }
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/manifest.json")).unwrap(),
    )
    .unwrap();
    assert!(manifest["artifacts"]["profiles.csv"]["sha256"].is_string());
}
