use nested_stable::harness::{run_experiment, sha256_hex, ExperimentConfig, Format, RunManifest};

fn config(out: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        experiment: "distance-scaling".into(),
        alpha: 1.6,
        alpha_prime: None,
        n: 100,
        replicas: 30,
        checkpoints: vec![],
        seed: 77,
        out: out.to_path_buf(),
        format: Format::Json,
    }
}

#[test]
fn manifest_reruns_to_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_experiment(&config(&dir.path().join("a")), Some(2)).unwrap();
    assert_eq!(first.replica_seeds.len(), 30);
    for f in &first.files {
        let bytes = std::fs::read(dir.path().join("a").join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256);
    }

    // Replay the echoed config from disk into a second directory.
    let text = std::fs::read_to_string(dir.path().join("a").join(RunManifest::FILE_NAME)).unwrap();
    let mut replay = RunManifest::from_json(&text).unwrap().config;
    assert_eq!(replay, config(&dir.path().join("a")));
    replay.out = dir.path().join("b");
    let second = run_experiment(&replay, Some(1)).unwrap();
    assert_eq!(first.files, second.files);
    assert_eq!(first.checks, second.checks);
}

#[test]
fn json_rows_mirror_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(&dir.path().join("j"));
    let json = run_experiment(&c, None).unwrap();
    c.format = Format::Csv;
    c.out = dir.path().join("c");
    run_experiment(&c, None).unwrap();
    let rows: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("j/distances.json")).unwrap(),
    )
    .unwrap();
    let csv = std::fs::read_to_string(dir.path().join("c/distances.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "replica,seed,n,H,scaled");
    assert_eq!(rows.as_array().unwrap().len(), lines.len() - 1);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(rows[0]["seed"].as_u64().unwrap().to_string(), cells[1]);
    assert_eq!(rows[0]["H"].as_u64().unwrap().to_string(), cells[3]);
    assert_eq!(
        json.files
            .iter()
            .map(|f| f.path.as_str())
            .collect::<Vec<_>>(),
        ["summary.json", "distances.json"]
    );
}
