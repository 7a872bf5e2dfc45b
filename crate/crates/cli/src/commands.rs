//! One function per subcommand. Each returns a printable summary and writes
//! its outputs plus a run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use u2v_core::bpnn::{self, TrainConfig};
use u2v_core::channel::{build_cir, ChannelModels, Scenario};
use u2v_core::clustering::{elbow_select, extract_offsets, kmeans, ElbowThresholds, KmeansConfig, RayPoint};
use u2v_core::config::ScenarioConfig;
use u2v_core::gan::{self, BaselineFamily, GanConfig, GanModel};
use u2v_core::io::{mlp_from_str, mlp_to_string};
use u2v_core::kinematics::{doppler_bound, Vec3};
use u2v_core::stats::{self, CorrelationOptions, Estimator};
use u2v_core::synth::{self, GroundTruth, RayRecord};

use crate::cli::*;
use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::manifest::{hash_parts, manifest_path_for, write_atomic, RunManifest};

pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::TrainBpnn(a) => train_bpnn(&a),
        Command::TrainGan(a) => train_gan(&a),
        Command::Cluster(a) => cluster(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Stats(a) => stats_cmd(&a),
    }
}

/// A loaded scenario with its source text and the directory that relative
/// model paths resolve against.
struct LoadedScenario {
    config: ScenarioConfig,
    text: String,
    base: Option<PathBuf>,
}

fn load_scenario(arg: &str) -> CliResult<LoadedScenario> {
    if let Some(name) = arg.strip_prefix("bundled:") {
        let text = u2v_core::config::bundled_scenario(name)
            .ok_or_else(|| CliError::input(format!("no bundled scenario named `{name}`")))?;
        return Ok(LoadedScenario {
            config: ScenarioConfig::from_toml_str(text).map_err(|e| CliError::input(format!("{name}: {e}")))?,
            text: text.to_string(),
            base: None,
        });
    }
    let path = Path::new(arg);
    let text = read_text(path)?;
    let config = ScenarioConfig::from_toml_str(&text).map_err(|e| CliError::input(format!("{arg}: {e}")))?;
    Ok(LoadedScenario {
        config,
        text,
        base: path.parent().map(Path::to_path_buf),
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn finish(mut m: RunManifest, outputs: &[&Path], manifest: &Path, started: Instant) -> CliResult<()> {
    m.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    m.wall_time_s = started.elapsed().as_secs_f64();
    write_atomic(manifest, m.to_toml()?.as_bytes())
}

fn uniform_in(rng: &mut ChaCha8Rng, min: [f64; 3], max: [f64; 3]) -> Vec3 {
    let mut c = [0.0; 3];
    for i in 0..3 {
        c[i] = min[i] + (max[i] - min[i]) * rng.random::<f64>();
    }
    Vec3::new(c[0], c[1], c[2])
}

/// Terminal positions for the corpus: uniform in the configured data boxes,
/// or on the trajectories at uniform times when a box is absent.
fn sample_pairs(cfg: &ScenarioConfig, scenario: &Scenario, n: usize, seed: u64) -> CliResult<Vec<(Vec3, Vec3)>> {
    for b in [cfg.data.tx_box, cfg.data.rx_box].into_iter().flatten() {
        if (0..3).any(|i| !(b.min[i] <= b.max[i]) || !b.min[i].is_finite() || !b.max[i].is_finite()) {
            return Err(CliError::input("data box: min must not exceed max"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let (t0, t1) = (scenario.time.start, scenario.time.stop);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let tx = match cfg.data.tx_box {
            Some(b) => uniform_in(&mut rng, b.min, b.max),
            None => scenario.tx.position_at(t0 + (t1 - t0) * rng.random::<f64>())?,
        };
        let rx = match cfg.data.rx_box {
            Some(b) => uniform_in(&mut rng, b.min, b.max),
            None => scenario.rx.position_at(t0 + (t1 - t0) * rng.random::<f64>())?,
        };
        out.push((tx, rx));
    }
    Ok(out)
}

pub fn gen_data(a: &GenDataArgs) -> CliResult<String> {
    let started = Instant::now();
    if a.pairs == 0 {
        return Err(CliError::input("--pairs must be at least 1"));
    }
    let loaded = load_scenario(&a.scenario)?;
    let scenario = loaded.config.to_scenario()?;
    let rays = a.rays.unwrap_or(scenario.rays_per_path);
    let pairs = sample_pairs(&loaded.config, &scenario, a.pairs, a.seed)?;
    let data = synth::generate_pairs(&scenario.scene, &pairs, &GroundTruth::default(), rays, a.seed)?;
    write_atomic(&a.out, &csvio::rays_to_csv(&data.records)?)?;

    let params = format!("pairs={} rays={}", a.pairs, rays);
    let mut m = RunManifest::new("gen-data", hash_parts([loaded.text.as_bytes(), params.as_bytes()]), a.seed);
    m.metrics.insert("rows".into(), data.records.len() as f64);
    m.metrics.insert("pairs".into(), data.pairs as f64);
    m.metrics.insert("skipped_pairs".into(), data.skipped_pairs as f64);
    if data.skipped_pairs > 0 {
        m.warnings.push(format!("{} pairs had no valid path", data.skipped_pairs));
    }
    finish(m, &[&a.out], &manifest_path_for(&a.out), started)?;
    Ok(format!(
        "wrote {} rays from {} pairs ({} without paths) to {}",
        data.records.len(),
        data.pairs,
        data.skipped_pairs,
        a.out.display()
    ))
}

pub fn train_bpnn(a: &TrainBpnnArgs) -> CliResult<String> {
    let started = Instant::now();
    let text = read_text(&a.data)?;
    let records = csvio::rays_from_csv(&text)?;
    let samples = synth::path_power_samples(&records, a.link == Link::Los);
    if samples.len() < 2 {
        return Err(CliError::input(format!("{} has fewer than 2 {:?} paths", a.data.display(), a.link)));
    }
    let cfg = TrainConfig {
        lr: a.lr,
        epochs: a.epochs,
        lambda: a.lambda,
        split: a.split,
        seed: a.seed,
        batch_size: a.batch_size,
        hidden: a.hidden,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let out = bpnn::train(&samples, &cfg)?;
    write_atomic(&a.out, mlp_to_string(&out.model).as_bytes())?;
    let mut outputs: Vec<&Path> = vec![&a.out];
    if let Some(h) = &a.history {
        let rows: Vec<Vec<f64>> = out
            .history
            .iter()
            .map(|e| vec![e.epoch as f64, e.train_cost, e.val_rmse])
            .collect();
        write_atomic(h, &csvio::table_to_csv(&["epoch", "train_cost", "val_rmse"], &rows)?)?;
        outputs.push(h);
    }

    let params = format!("{cfg:?} link={:?}", a.link);
    let mut m = RunManifest::new("train-bpnn", hash_parts([text.as_bytes(), params.as_bytes()]), a.seed);
    m.metrics.insert("train_size".into(), out.train_indices.len() as f64);
    m.metrics.insert("val_size".into(), out.val_indices.len() as f64);
    m.metrics.insert("train_rmse_db".into(), out.train_rmse);
    m.metrics.insert("val_rmse_db".into(), out.val_rmse);
    finish(m, &outputs, &manifest_path_for(&a.out), started)?;
    Ok(format!(
        "train size {}, val size {}, train RMSE {:.4} dB, val RMSE {:.4} dB",
        out.train_indices.len(),
        out.val_indices.len(),
        out.train_rmse,
        out.val_rmse
    ))
}

pub fn train_gan(a: &TrainGanArgs) -> CliResult<String> {
    let started = Instant::now();
    let text = read_text(&a.data)?;
    let data = csvio::read_column(&text, &a.column)?;
    let cfg = GanConfig {
        noise_dim: a.noise_dim,
        hidden: a.hidden,
        lr: a.lr,
        batch: a.batch,
        steps: a.steps,
        seed: a.seed,
        ..GanConfig::default()
    };
    let out = gan::train_gan(&data, &cfg)?;
    if a.eval_samples == 0 {
        return Err(CliError::input("--eval-samples must be at least 1"));
    }
    let generated = gan::sample_offsets(&out.model, a.eval_samples, a.seed.wrapping_add(1))?;
    let ks_gan = gan::ks_two_sample(&generated, &data);
    let gauss = gan::fit_baseline(&data, BaselineFamily::Gaussian)?;
    let laplace = gan::fit_baseline(&data, BaselineFamily::Laplacian)?;
    let ks_gauss = gan::ks_one_sample(&data, |x| gauss.cdf(x));
    let ks_laplace = gan::ks_one_sample(&data, |x| laplace.cdf(x));

    write_atomic(&a.out, out.model.to_document().as_bytes())?;
    let mut outputs: Vec<&Path> = vec![&a.out];
    if let Some(h) = &a.history {
        let rows: Vec<Vec<f64>> = out
            .history
            .d_loss
            .iter()
            .zip(&out.history.g_loss)
            .enumerate()
            .map(|(i, (d, g))| vec![i as f64, *d, *g])
            .collect();
        write_atomic(h, &csvio::table_to_csv(&["step", "d_loss", "g_loss"], &rows)?)?;
        outputs.push(h);
    }

    let params = format!("{cfg:?} column={} eval={}", a.column, a.eval_samples);
    let mut m = RunManifest::new("train-gan", hash_parts([text.as_bytes(), params.as_bytes()]), a.seed);
    m.metrics.insert("samples".into(), data.len() as f64);
    m.metrics.insert("ks_gan".into(), ks_gan);
    m.metrics.insert("ks_gaussian".into(), ks_gauss);
    m.metrics.insert("ks_laplacian".into(), ks_laplace);
    finish(m, &outputs, &manifest_path_for(&a.out), started)?;
    Ok(format!(
        "{} offsets; KS GAN {ks_gan:.4}, Gaussian fit {ks_gauss:.4}, Laplacian fit {ks_laplace:.4}",
        data.len()
    ))
}

fn ray_point(r: &RayRecord, side: AngleSide) -> RayPoint {
    match side {
        AngleSide::Arrival => RayPoint::new(r.delay * 1e6, r.aaoa, r.eaoa),
        AngleSide::Departure => RayPoint::new(r.delay * 1e6, r.aaod, r.eaod),
    }
}

fn k_range(a: &ClusterArgs, n: usize) -> CliResult<Vec<usize>> {
    if a.k_min == 0 || a.k_min > a.k_max {
        return Err(CliError::input("need 1 <= --k-min <= --k-max"));
    }
    let hi = a.k_max.min(n);
    if a.k_min > hi {
        return Err(CliError::input(format!("--k-min {} exceeds the {n} available rays", a.k_min)));
    }
    Ok((a.k_min..=hi).collect())
}

pub fn cluster(a: &ClusterArgs) -> CliResult<String> {
    let started = Instant::now();
    let text = read_text(&a.data)?;
    let records: Vec<RayRecord> = csvio::rays_from_csv(&text)?.into_iter().filter(|r| !r.los).collect();
    if records.is_empty() {
        return Err(CliError::input(format!("{} has no NLoS rays", a.data.display())));
    }
    let thresholds = ElbowThresholds {
        sse: a.sse_threshold,
        slope: a.slope_threshold,
    };
    let params = format!(
        "{:?} k={:?} range={}..={} per_channel={} side={:?}",
        thresholds, a.k, a.k_min, a.k_max, a.per_channel, a.angles
    );
    let mut m = RunManifest::new("cluster", hash_parts([text.as_bytes(), params.as_bytes()]), a.seed);
    let mut offsets: Vec<(u32, usize, f64, f64)> = Vec::new();
    let mut outputs: Vec<&Path> = Vec::new();

    let summary = if a.per_channel {
        let mut groups: BTreeMap<u32, Vec<&RayRecord>> = BTreeMap::new();
        for r in &records {
            groups.entry(r.channel_id).or_default().push(r);
        }
        let mut curve_rows = Vec::new();
        for (&ch, rs) in &groups {
            let pts: Vec<RayPoint> = rs.iter().map(|r| ray_point(r, a.angles)).collect();
            let cfg = KmeansConfig::for_points(&pts, a.seed);
            let (result, nsse) = match a.k {
                KChoice::Paths => {
                    let k = rs.iter().map(|r| r.path_id).collect::<BTreeSet<_>>().len().min(pts.len());
                    let base = kmeans(&pts, 1, &cfg)?.sse;
                    let res = kmeans(&pts, k, &cfg)?;
                    let nsse = if base > 0.0 { res.sse / base } else { 0.0 };
                    (res, nsse)
                }
                KChoice::Auto => {
                    let e = elbow_select(&pts, &k_range(a, pts.len())?, thresholds, &cfg)?;
                    let nsse = e.chosen().normalized_sse;
                    (kmeans(&pts, e.k, &cfg)?, nsse)
                }
            };
            curve_rows.push(vec![ch as f64, result.k as f64, nsse]);
            for ((da, de), &c) in extract_offsets(&result, &pts)?.into_iter().zip(&result.assignments) {
                offsets.push((ch, c, da, de));
            }
        }
        if let Some(p) = &a.out_curve {
            write_atomic(p, &csvio::table_to_csv(&["channel_id", "k", "normalized_sse"], &curve_rows)?)?;
            outputs.push(p);
        }
        let mean_k = curve_rows.iter().map(|r| r[1]).sum::<f64>() / curve_rows.len() as f64;
        m.metrics.insert("channels".into(), groups.len() as f64);
        m.metrics.insert("mean_k".into(), mean_k);
        format!("clustered {} channels, mean Nk {mean_k:.3}, {} offsets", groups.len(), offsets.len())
    } else {
        if a.k == KChoice::Paths {
            return Err(CliError::input("--k paths requires --per-channel"));
        }
        let pts: Vec<RayPoint> = records.iter().map(|r| ray_point(r, a.angles)).collect();
        let cfg = KmeansConfig::for_points(&pts, a.seed);
        let e = elbow_select(&pts, &k_range(a, pts.len())?, thresholds, &cfg)?;
        let chosen = e.chosen().clone();
        if !e.qualified {
            m.warnings.push(format!("no k met both thresholds; using the range maximum {}", e.k));
        }
        if let Some(p) = &a.out_curve {
            let rows: Vec<Vec<f64>> = e
                .curve
                .iter()
                .map(|c| vec![c.k as f64, c.normalized_sse, c.slope.unwrap_or(f64::NAN)])
                .collect();
            write_atomic(p, &csvio::table_to_csv(&["k", "normalized_sse", "slope"], &rows)?)?;
            outputs.push(p);
        }
        if a.out_offsets.is_some() {
            let result = kmeans(&pts, e.k, &cfg)?;
            for (((da, de), &c), r) in extract_offsets(&result, &pts)?.into_iter().zip(&result.assignments).zip(&records) {
                offsets.push((r.channel_id, c, da, de));
            }
        }
        m.metrics.insert("chosen_k".into(), chosen.k as f64);
        m.metrics.insert("normalized_sse".into(), chosen.normalized_sse);
        format!("chosen Nk = {}, normalized SSE = {:.6}", chosen.k, chosen.normalized_sse)
    };

    if let Some(p) = &a.out_offsets {
        write_atomic(p, &csvio::offsets_to_csv(&offsets)?)?;
        outputs.push(p);
    }
    let manifest = match outputs.first() {
        Some(p) => manifest_path_for(p),
        None => manifest_path_for(&a.data.with_extension("cluster")),
    };
    finish(m, &outputs, &manifest, started)?;
    Ok(summary)
}

fn resolve(flag: &Option<PathBuf>, config: &Option<PathBuf>, base: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| {
        config.as_ref().map(|p| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.clone(),
        })
    })
}

/// Models from flags, then config paths, then the bundled set, each slot
/// independently. Returns the models and their serialized text for hashing.
fn load_models(a: &SimulateArgs, loaded: &LoadedScenario) -> CliResult<(ChannelModels, String)> {
    let paths = &loaded.config.models;
    let bundled = ChannelModels::bundled()?;
    let mlp = |flag: &Option<PathBuf>, cfg: &Option<PathBuf>, fallback: &u2v_core::nn::MlpModel| {
        match resolve(flag, cfg, &loaded.base) {
            Some(p) => mlp_from_str(&read_text(&p)?).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
            None => Ok(fallback.clone()),
        }
    };
    let gan = |flag: &Option<PathBuf>, cfg: &Option<PathBuf>, fallback: &GanModel| match resolve(flag, cfg, &loaded.base) {
        Some(p) => GanModel::from_document(&read_text(&p)?).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => Ok(fallback.clone()),
    };
    let models = ChannelModels::new(
        mlp(&a.bpnn_los, &paths.bpnn_los, &bundled.los_power)?,
        mlp(&a.bpnn_nlos, &paths.bpnn_nlos, &bundled.nlos_power)?,
        gan(&a.gan_az, &paths.gan_azimuth, &bundled.azimuth_offsets)?,
        gan(&a.gan_el, &paths.gan_elevation, &bundled.elevation_offsets)?,
    )?;
    let text = [
        mlp_to_string(&models.los_power),
        mlp_to_string(&models.nlos_power),
        models.azimuth_offsets.to_document(),
        models.elevation_offsets.to_document(),
    ]
    .concat();
    Ok((models, text))
}

pub fn simulate(a: &SimulateArgs) -> CliResult<String> {
    let started = Instant::now();
    let loaded = load_scenario(&a.scenario)?;
    let mut scenario = loaded.config.to_scenario()?;
    if let Some(s) = a.start {
        scenario.time.start = s;
    }
    if let Some(s) = a.stop {
        scenario.time.stop = s;
    }
    if let Some(s) = a.step {
        scenario.time.step = s;
    }
    scenario.time.validate()?;
    let seed = a.seed.unwrap_or(scenario.seed);
    let (models, model_text) = load_models(a, &loaded)?;
    let times = scenario.time.times();
    let run = build_cir(&scenario, &models, &times, seed)?;

    let cir = a.out_dir.join("cir.csv");
    write_atomic(&cir, &csvio::cir_to_csv(&run.series)?)?;

    let grid = format!("{:?}", scenario.time);
    let mut m = RunManifest::new(
        "simulate",
        hash_parts([loaded.text.as_bytes(), model_text.as_bytes(), grid.as_bytes()]),
        seed,
    );
    let empty = run.series.iter().flatten().filter(|s| s.paths.is_empty()).count();
    let max_paths = run.series.iter().flatten().map(|s| s.paths.len()).max().unwrap_or(0);
    m.metrics.insert("snapshots".into(), times.len() as f64);
    m.metrics.insert("pairs".into(), run.pairs.len() as f64);
    m.metrics.insert("empty_snapshots".into(), empty as f64);
    m.metrics.insert("max_paths".into(), max_paths as f64);
    if empty > 0 {
        m.warnings.push(format!("{empty} snapshots have no valid path"));
    }
    finish(m, &[&cir], &a.out_dir.join("manifest.toml"), started)?;
    Ok(format!(
        "{} snapshots x {} antenna pairs, up to {max_paths} paths, written to {}",
        times.len(),
        run.pairs.len(),
        cir.display()
    ))
}

fn spacing_lags(a: &StatsArgs) -> CliResult<Vec<f64>> {
    if !(a.spacing_step > 0.0 && a.max_spacing >= 0.0) {
        return Err(CliError::input("--spacing-step must be positive and --max-spacing non-negative"));
    }
    let n = (a.max_spacing / a.spacing_step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * a.spacing_step).collect())
}

pub fn stats_cmd(a: &StatsArgs) -> CliResult<String> {
    let started = Instant::now();
    let cir_text = read_text(&a.cir)?;
    let series_all = csvio::cir_from_csv(&cir_text)?;
    let loaded = load_scenario(&a.scenario)?;
    let mut scenario = loaded.config.to_scenario()?;
    if a.no_attitude {
        scenario = scenario.without_attitude();
    }
    let series = series_all
        .get(a.pair)
        .ok_or_else(|| CliError::input(format!("pair {} not in dump ({} pairs)", a.pair, series_all.len())))?;
    let carrier = scenario.carrier_hz;
    let default_exact = a.which == Which::Dpsd;
    let estimator = match a.estimator {
        Some(EstimatorKind::Exact) => Estimator::Exact,
        Some(EstimatorKind::Mc) => Estimator::MonteCarlo {
            ensemble: a.ensemble,
            seed: a.seed,
        },
        None if default_exact => Estimator::Exact,
        None => Estimator::MonteCarlo {
            ensemble: a.ensemble,
            seed: a.seed,
        },
    };
    let opts = CorrelationOptions {
        estimator,
        path: a.path,
        frequency_hz: a.freq,
    };
    let params = format!(
        "{:?} t={} pair={} path={:?} {:?} lags={} spacing={}/{} axis={:?} no_attitude={} window={:?} fft={} freq={}",
        a.which, a.t, a.pair, a.path, estimator, a.lags, a.max_spacing, a.spacing_step, a.axis, a.no_attitude,
        a.window, a.fft, a.freq
    );
    let mut m = RunManifest::new(
        "stats",
        hash_parts([cir_text.as_bytes(), loaded.text.as_bytes(), params.as_bytes()]),
        a.seed,
    );
    let step = if series.len() > 1 { series[1].t - series[0].t } else { 0.0 };
    let time_lags = |m: &mut RunManifest| -> CliResult<Vec<f64>> {
        let i = stats::index_at(series, a.t)?;
        let avail = series.len() - 1 - i;
        if a.lags > avail {
            m.warnings.push(format!("lags truncated to the {avail} snapshots after t = {}", a.t));
        }
        Ok((0..=a.lags.min(avail)).map(|k| series[i + k].t - series[i].t).collect())
    };

    let (header, rows, summary): (Vec<&str>, Vec<Vec<f64>>, String) = match a.which {
        Which::Pdp => {
            let snap = &series[stats::index_at(series, a.t)?];
            let rows: Vec<Vec<f64>> = stats::pdp(snap).into_iter().map(|(d, p)| vec![d, p]).collect();
            let total: f64 = rows.iter().map(|r| r[1]).sum();
            m.metrics.insert("total_power".into(), total);
            let s = format!("{} impulses, total power {total:.6e}", rows.len());
            (vec!["delay_s", "power_lin"], rows, s)
        }
        Which::Acf => {
            let lags = time_lags(&mut m)?;
            let v = stats::acf(series, a.t, &lags, carrier, &opts)?;
            let rows: Vec<Vec<f64>> = lags.iter().zip(&v).map(|(l, c)| vec![*l, c.re, c.im, c.norm()]).collect();
            let s = format!("{} lags, step {step} s", rows.len());
            (vec!["lag_s", "re", "im", "abs"], rows, s)
        }
        Which::Ccf => {
            let lags = spacing_lags(a)?;
            let snap = &series[stats::index_at(series, a.t)?];
            let shifts = stats::tx_lag_shifts(&scenario, snap.t, &lags, Vec3::from(a.axis))?;
            let v = stats::ccf(snap, &shifts, carrier, &opts)?;
            let mut s = format!("{} spacings", lags.len());
            for (name, level) in [("lag_50", 0.5), ("lag_70", 0.7)] {
                if let Some(l) = stats::lag_at_level(&lags, &v, level) {
                    m.metrics.insert(name.into(), l);
                    s.push_str(&format!(", {name} {l:.4}"));
                }
            }
            let rows = lags.iter().zip(&v).map(|(l, c)| vec![*l, *c]).collect();
            (vec!["lag_norm", "ccf"], rows, s)
        }
        Which::Stcf => {
            let lags = time_lags(&mut m)?;
            let spacings = spacing_lags(a)?;
            let t_ref = series[stats::index_at(series, a.t)?].t;
            let shifts = stats::tx_lag_shifts(&scenario, t_ref, &spacings, Vec3::from(a.axis))?;
            let v = stats::stcf(series, a.t, &lags, &shifts, carrier, &opts)?;
            let mut rows = Vec::new();
            for (l, row) in lags.iter().zip(&v) {
                for (d, c) in spacings.iter().zip(row) {
                    rows.push(vec![*l, *d, c.re, c.im, c.norm()]);
                }
            }
            let s = format!("{} x {} grid", lags.len(), spacings.len());
            (vec!["lag_s", "lag_norm", "re", "im", "abs"], rows, s)
        }
        Which::Dpsd => {
            let bound = doppler_bound(carrier, scenario.tx.max_speed(), scenario.rx.max_speed());
            let d = stats::dpsd(series, a.t, a.window.unwrap_or(64.0 * step), a.fft, carrier, &opts, Some(bound))?;
            if d.aliasing {
                m.warnings.push(format!(
                    "aliasing: snapshot rate {:.3} Hz is below twice the Doppler bound {bound:.3} Hz",
                    1.0 / step
                ));
            }
            m.metrics.insert("peak_hz".into(), d.peak_frequency());
            m.metrics.insert("doppler_bound_hz".into(), bound);
            m.metrics.insert("aliasing".into(), f64::from(u8::from(d.aliasing)));
            let rows = d.freqs.iter().zip(&d.power).map(|(f, p)| vec![*f, *p]).collect();
            let s = format!(
                "{} bins, peak at {:.3} Hz{}",
                d.freqs.len(),
                d.peak_frequency(),
                if d.aliasing { ", aliasing warning" } else { "" }
            );
            (vec!["freq_hz", "power"], rows, s)
        }
    };
    write_atomic(&a.out, &csvio::table_to_csv(&header, &rows)?)?;
    finish(m, &[&a.out], &manifest_path_for(&a.out), started)?;
    Ok(summary)
}
