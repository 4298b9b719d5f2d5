use std::path::Path;
use std::process::{Command, Output};

fn isac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isac")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
        .parse()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("campaign.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "trials = 6\nsnr1_db = [-12.0, 10.0]\nmcs = [0]\n[dmrs]\nadditional_positions = [1, 3]\n";

#[test]
fn geometry_worked_example() {
    let dtau = (200.0 / 299_792_458.0f64).to_string();
    let out = isac(&["geometry", "--d0", "100", "--dtau", &dtau, "--theta", "0", "--speed", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!((value(&text, "target_range_m") - 400.0 / 3.0).abs() < 1e-6);
    assert!((value(&text, "bistatic_range_m") - 300.0).abs() < 1e-6);
    assert!((value(&text, "doppler_hz") - 221.51).abs() < 0.01);
}

#[test]
fn geometry_rejects_negative_excess_delay() {
    let out = isac(&["geometry", "--d0", "100", "--dtau", "-1e-7", "--theta", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn throughput_of_error_free_link() {
    let out = isac(&["throughput", "--bler", "0,0,0,0", "--mcs", "0", "--dmrs-add-pos", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(value(&stdout(&out), "throughput_bits_per_slot"), 3577.5);

    let out = isac(&["throughput", "--bler", "0.5,0.2", "--mcs", "0", "--dmrs-add-pos", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = isac(&["throughput", "--bler", "0,0,0,0", "--mcs", "0", "--dmrs-add-pos", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn crlb_needs_a_rate_source() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = isac(&["crlb", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));

    let out = isac(&["crlb", "--config", &cfg, "--bler", "1,0.5,0.1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("mcs,dmrs_additional_position,snr1_db"));
    assert_eq!(text.lines().count(), 1 + 4);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_dir = out_dir.to_str().unwrap();
    for text in ["trials = 5\ntrails = 3\n", "mcs = [40]\n", "trials = \"many\"\n"] {
        let cfg = write_config(dir.path(), text);
        let out = isac(&["sim", "--config", &cfg, "--out", out_dir]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(!out.stderr.is_empty());
    }
    let missing = dir.path().join("missing.toml");
    let out = isac(&["sim", "--config", missing.to_str().unwrap(), "--out", out_dir]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(dir.path(), SMALL);
    let out = isac(&["sim", "--config", &cfg, "--out", out_dir, "--workers", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trials = 1\nsnr1_db = [10.0]\nmcs = [0]\n[dmrs]\nadditional_positions = [1]\n");
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = isac(&["sim", "--config", &cfg, "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sim_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |name: &str, workers: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = isac(&[
            "sim", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--workers", workers, "--seed", seed,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (
            std::fs::read(out_dir.join("results.csv")).unwrap(),
            std::fs::read(out_dir.join("results.json")).unwrap(),
        )
    };
    let a = run("a", "1", "7");
    let b = run("b", "3", "7");
    let c = run("c", "1", "8");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
    let json = String::from_utf8(a.1).unwrap();
    assert!(json.contains("\"master_seed\": 7"));

    let out = isac(&["crlb", "--config", &cfg, "--from-campaign", dir.path().join("a/results.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}
