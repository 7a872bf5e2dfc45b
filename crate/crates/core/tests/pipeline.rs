use u2v_core::channel::{build_cir, ChannelModels};
use u2v_core::config::{bundled_scenarios, ScenarioConfig};
use u2v_core::scene::PathKind;
use u2v_core::stats::{self, CorrelationOptions, Estimator};

fn short_run(name: &str, stop: f64, seed: u64) -> (u2v_core::channel::Scenario, u2v_core::channel::ChannelRun) {
    let s = ScenarioConfig::bundled(name).unwrap().to_scenario().unwrap();
    let times: Vec<f64> = s.time.times().into_iter().filter(|&t| t <= stop).collect();
    let run = build_cir(&s, &ChannelModels::bundled().unwrap(), &times, seed).unwrap();
    (s, run)
}

#[test]
fn bundled_scenarios_simulate() {
    for (name, _) in bundled_scenarios() {
        let (s, run) = short_run(name, 2.0, 1);
        assert_eq!(run.pairs.len(), s.tx_array.elements.len() * s.rx_array.elements.len());
        for series in &run.series {
            assert_eq!(series.len(), 21, "{name}");
            for snap in series {
                assert!(snap.total_power().is_finite());
            }
        }
    }
}

#[test]
fn semiurban_building_hides_low_uav() {
    let (_, run) = short_run("semiurban_24ghz", 23.5, 7);
    let los_at = |t: f64| {
        let series = &run.series[0];
        let snap = &series[stats::index_at(series, t).unwrap()];
        snap.paths.iter().any(|p| p.kind == PathKind::LoS)
    };
    assert!(!los_at(2.0));
    assert!(los_at(20.0));
}

#[test]
fn runs_are_seeded() {
    let (_, a) = short_run("urban_28ghz", 1.0, 5);
    let (_, b) = short_run("urban_28ghz", 1.0, 5);
    let (_, c) = short_run("urban_28ghz", 1.0, 6);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn exact_and_monte_carlo_acf_agree() {
    let (s, run) = short_run("urban_28ghz", 3.0, 2);
    let series = &run.series[0];
    let lags: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let exact = stats::acf(
        series,
        0.5,
        &lags,
        s.carrier_hz,
        &CorrelationOptions {
            estimator: Estimator::Exact,
            ..Default::default()
        },
    )
    .unwrap();
    let mc = stats::acf(
        series,
        0.5,
        &lags,
        s.carrier_hz,
        &CorrelationOptions {
            estimator: Estimator::MonteCarlo {
                ensemble: 4000,
                seed: 3,
            },
            ..Default::default()
        },
    )
    .unwrap();
    for (e, m) in exact.iter().zip(&mc) {
        assert!((e - m).norm() < 0.08, "{e} vs {m}");
    }
}
