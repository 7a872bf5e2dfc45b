use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use u2v_cli::{run, Cli, CliResult};

fn exec(args: &[&str]) -> CliResult<String> {
    let mut full = vec!["u2vsim"];
    full.extend_from_slice(args);
    run(Cli::try_parse_from(full).expect("arguments parse"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_u2vsim")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

const FREE_SPACE: &str = r#"
schema_version = 1
carrier_hz = 28.0e9
rays_per_path = 20

[time]
start = 0.0
stop = 1.0
step = 0.1

[tx]
waypoints = [{ t = 0.0, position = [0.0, 0.0, 100.0] }]

[rx]
waypoints = [{ t = 0.0, position = [50.0, 0.0, 2.0] }]
"#;

fn manifest(path: &Path) -> toml::Table {
    toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn free_space_pair_gives_one_los_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("free.toml");
    std::fs::write(&cfg, FREE_SPACE).unwrap();
    let out = dir.path().join("rays.csv");
    exec(&["gen-data", "--scenario", p(&cfg), "--pairs", "1", "--out", p(&out)]).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(",1"), "{}", lines[1]);
    let m = manifest(&dir.path().join("rays.csv.manifest.toml"));
    assert_eq!(m["command"].as_str(), Some("gen-data"));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 1);
}

#[test]
fn gen_data_rows_match_path_recount() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rays.csv");
    exec(&["gen-data", "--scenario", "bundled:urban_28ghz", "--pairs", "500", "--seed", "3", "--out", p(&out)]).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let mut groups: BTreeMap<(u64, u64), (usize, bool)> = BTreeMap::new();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let key = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let e = groups.entry(key).or_insert((0, f[8] == "1"));
        e.0 += 1;
        rows += 1;
    }
    let expected: usize = groups.values().map(|&(_, los)| if los { 1 } else { 20 }).sum();
    assert!(groups.values().all(|&(n, los)| n == if los { 1 } else { 20 }));
    assert_eq!(rows, expected);
    let m = manifest(&dir.path().join("rays.csv.manifest.toml"));
    assert_eq!(m["metrics"]["rows"].as_float(), Some(rows as f64));
}

#[test]
fn bpnn_split_and_cluster_report() {
    let dir = tempfile::tempdir().unwrap();
    let rays = dir.path().join("rays.csv");
    exec(&["gen-data", "--scenario", "bundled:semiurban_24ghz", "--pairs", "200", "--seed", "1", "--out", p(&rays)]).unwrap();

    let model = dir.path().join("nlos.toml");
    let hist = dir.path().join("hist.csv");
    let s = exec(&[
        "train-bpnn", "--data", p(&rays), "--link", "nlos", "--split", "0.7", "--epochs", "50",
        "--out", p(&model), "--history", p(&hist),
    ])
    .unwrap();
    let m = manifest(&dir.path().join("nlos.toml.manifest.toml"));
    let (tr, va) = (
        m["metrics"]["train_size"].as_float().unwrap(),
        m["metrics"]["val_size"].as_float().unwrap(),
    );
    let text = std::fs::read_to_string(&rays).unwrap();
    let records = u2v_cli::csvio::rays_from_csv(&text).unwrap();
    let n = u2v_core::synth::path_power_samples(&records, false).len() as f64;
    assert_eq!(tr + va, n);
    assert_eq!(tr, (0.7 * n).round());
    assert!(s.contains("train size") && s.contains("val size"));
    assert_eq!(std::fs::read_to_string(&hist).unwrap().lines().count(), 51);
    assert!(u2v_core::io::mlp_from_str(&std::fs::read_to_string(&model).unwrap()).is_ok());

    let curve = dir.path().join("curve.csv");
    let s = exec(&["cluster", "--data", p(&rays), "--k-max", "12", "--out-curve", p(&curve)]).unwrap();
    assert!(s.contains("chosen Nk") && s.contains("normalized SSE"), "{s}");
    assert_eq!(std::fs::read_to_string(&curve).unwrap().lines().next(), Some("k,normalized_sse,slope"));
}

#[test]
fn gan_beats_gaussian_on_bimodal_offsets() {
    use rand::SeedableRng;
    let dir = tempfile::tempdir().unwrap();
    let truth = u2v_core::synth::GroundTruth::default().azimuth_offsets;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<(u32, usize, f64, f64)> = truth.sample_n(3000, &mut rng).into_iter().map(|x| (0, 0, x, 0.0)).collect();
    let data = dir.path().join("offsets.csv");
    std::fs::write(&data, u2v_cli::csvio::offsets_to_csv(&rows).unwrap()).unwrap();
    let out = dir.path().join("gan.toml");
    exec(&["train-gan", "--data", p(&data), "--column", "d_azimuth", "--steps", "4000", "--out", p(&out)]).unwrap();
    let m = manifest(&dir.path().join("gan.toml.manifest.toml"));
    let ks = |k: &str| m["metrics"][k].as_float().unwrap();
    assert!(ks("ks_gan") < ks("ks_gaussian"), "{} vs {}", ks("ks_gan"), ks("ks_gaussian"));
}

#[test]
fn simulate_and_stats_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    exec(&["simulate", "--scenario", "bundled:urban_28ghz", "--stop", "5", "--out-dir", p(&sim)]).unwrap();
    let cir = sim.join("cir.csv");
    let series = u2v_cli::csvio::cir_from_csv(&std::fs::read_to_string(&cir).unwrap()).unwrap();
    assert_eq!(series.len(), 2);
    assert!(series.iter().all(|s| s.len() == 51));
    assert!(sim.join("manifest.toml").exists());

    let pdp = dir.path().join("pdp.csv");
    exec(&["stats", "--cir", p(&cir), "--scenario", "bundled:urban_28ghz", "--which", "pdp", "--t", "1", "--out", p(&pdp)]).unwrap();
    assert_eq!(std::fs::read_to_string(&pdp).unwrap().lines().next(), Some("delay_s,power_lin"));

    let dpsd = dir.path().join("dpsd.csv");
    exec(&["stats", "--cir", p(&cir), "--scenario", "bundled:urban_28ghz", "--which", "dpsd", "--t", "1", "--window", "1", "--out", p(&dpsd)]).unwrap();
    let m = manifest(&dir.path().join("dpsd.csv.manifest.toml"));
    let w = m["warnings"].as_array().unwrap();
    assert!(w.iter().any(|x| x.as_str().unwrap().starts_with("aliasing")), "{w:?}");

    for which in ["acf", "ccf", "stcf"] {
        let out = dir.path().join(format!("{which}.csv"));
        exec(&["stats", "--cir", p(&cir), "--scenario", "bundled:urban_28ghz", "--which", which, "--t", "1", "--lags", "5", "--max-spacing", "0.1", "--ensemble", "20", "--out", p(&out)]).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let first = text.lines().nth(1).unwrap();
        let one = |s: &str| s.parse::<f64>().unwrap() == 1.0;
        let fields: Vec<&str> = first.split(',').collect();
        match which {
            "ccf" => assert!(one(fields[1])),
            "acf" => assert!(one(fields[1])),
            _ => assert!(one(fields[2])),
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, FREE_SPACE.replace("28.0e9", "-1.0")).unwrap();
    let (code, err) = bin(&["gen-data", "--scenario", p(&bad), "--out", p(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("carrier_hz"), "{err}");

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, FREE_SPACE.replace("rays_per_path", "rays_per_pth")).unwrap();
    let (code, err) = bin(&["gen-data", "--scenario", p(&unknown), "--out", p(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("line") && err.contains("rays_per_pth"), "{err}");

    let junk = dir.path().join("junk.csv");
    std::fs::write(&junk, "a,b\n1,2\n").unwrap();
    let (code, _) = bin(&["train-bpnn", "--data", p(&junk), "--link", "los", "--out", p(&out)]);
    assert_eq!(code, 2);

    let (code, err) = bin(&[
        "simulate", "--scenario", "bundled:urban_28ghz", "--gan-az", "/nonexistent/gan.toml",
        "--out-dir", p(dir.path()),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("gan.toml"), "{err}");

    let rays = dir.path().join("rays.csv");
    exec(&["gen-data", "--scenario", "bundled:semiurban_24ghz", "--pairs", "100", "--out", p(&rays)]).unwrap();
    let (code, err) = bin(&[
        "train-bpnn", "--data", p(&rays), "--link", "nlos", "--lr", "1e200", "--epochs", "20",
        "--out", p(&out),
    ]);
    assert_eq!(code, 3, "{err}");
}
