//! Browser bindings for three interactive views of the bundled urban
//! scenario. Each view is a plain function returning flat `f64` rows so it
//! can be tested natively; the exported wrappers only convert errors.

use u2v_core::bpnn;
use u2v_core::channel::{build_cir, ChannelModels, Scenario};
use u2v_core::config::ScenarioConfig;
use u2v_core::kinematics::{Attitude, AttitudeSample, Trajectory, Vec3};
use u2v_core::scene::PathKind;
use u2v_core::stats::{self, CorrelationOptions, Estimator};
use wasm_bindgen::prelude::*;

fn urban() -> Result<Scenario, String> {
    ScenarioConfig::bundled("urban_28ghz")
        .and_then(|c| c.to_scenario())
        .map_err(|e| e.to_string())
}

/// Route length of the bundled urban scenario, seconds.
pub fn route_end() -> Result<f64, String> {
    Ok(urban()?.time.stop)
}

/// Spatial correlation at time `t` along the Tx body y axis for normalized
/// spacings `0..=max_spacing`. The Tx pitch is held at `pitch_deg`. Rows are
/// `[spacing, ccf with pitch, ccf level flight]`; empty when no path exists.
pub fn ccf_rows(t: f64, pitch_deg: f64, max_spacing: f64, points: usize) -> Result<Vec<f64>, String> {
    let base = urban()?;
    if !(t >= base.time.start && t <= base.time.stop) {
        return Err(format!("t must lie in [{}, {}]", base.time.start, base.time.stop));
    }
    if points < 2 || !(max_spacing > 0.0) {
        return Err("need at least two spacings and a positive range".into());
    }
    let pitched = Trajectory::new(
        base.tx.waypoints().to_vec(),
        vec![AttitudeSample {
            t: base.time.start,
            attitude: Attitude {
                pitch: pitch_deg.to_radians(),
                ..Attitude::default()
            },
        }],
    )
    .map_err(|e| e.to_string())?;
    let with = Scenario {
        tx: pitched,
        ..base.clone()
    };
    let level = base.without_attitude();
    let models = ChannelModels::bundled().map_err(|e| e.to_string())?;
    let run = build_cir(&level, &models, &[t], base.seed).map_err(|e| e.to_string())?;
    let snap = &run.series[0][0];
    if snap.paths.is_empty() {
        return Ok(Vec::new());
    }
    let lags: Vec<f64> = (0..points).map(|i| max_spacing * i as f64 / (points - 1) as f64).collect();
    let opts = CorrelationOptions {
        estimator: Estimator::Exact,
        ..Default::default()
    };
    let curve = |s: &Scenario| -> Result<Vec<f64>, String> {
        let shifts = stats::tx_lag_shifts(s, t, &lags, Vec3::new(0.0, 1.0, 0.0)).map_err(|e| e.to_string())?;
        stats::ccf(snap, &shifts, s.carrier_hz, &opts).map_err(|e| e.to_string())
    };
    let (a, b) = (curve(&with)?, curve(&level)?);
    Ok(lags.iter().zip(a.iter().zip(&b)).flat_map(|(l, (x, y))| [*l, *x, *y]).collect())
}

/// LoS Doppler and delay along the route every `step` seconds. Rows are
/// `[t, doppler Hz, delay us, NLoS path count]`; Doppler and delay are NaN
/// while the LoS path is blocked.
pub fn route_rows(step: f64) -> Result<Vec<f64>, String> {
    let s = urban()?;
    if !(step >= 0.01) {
        return Err("step must be at least 0.01 s".into());
    }
    let n = ((s.time.stop - s.time.start) / step).floor() as usize;
    let mut out = Vec::with_capacity(4 * (n + 1));
    for i in 0..=n {
        let t = s.time.start + i as f64 * step;
        let tx = s.tx.position_at(t).map_err(|e| e.to_string())?;
        let rx = s.rx.position_at(t).map_err(|e| e.to_string())?;
        let paths = s.scene.enumerate_paths(tx, rx).map_err(|e| e.to_string())?;
        let (mut f, mut d) = (f64::NAN, f64::NAN);
        if let Some(los) = paths.iter().find(|p| p.kind == PathKind::LoS) {
            f = s.ray_doppler(t, &los.angles).map_err(|e| e.to_string())?;
            d = los.delay * 1e6;
        }
        let nlos = paths.iter().filter(|p| p.kind == PathKind::NLoS).count();
        out.extend([t, f, d, nlos as f64]);
    }
    Ok(out)
}

/// Preset path power against delay. Rows are `[delay us, LoS dB, NLoS dB]`.
pub fn power_rows(min_us: f64, max_us: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(max_us > min_us) {
        return Err("need at least two points and max > min".into());
    }
    let (los, nlos) = (bpnn::preset_los(), bpnn::preset_nlos());
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let tau = min_us + (max_us - min_us) * i as f64 / (points - 1) as f64;
        let a = bpnn::predict_db(&los, tau).map_err(|e| e.to_string())?;
        let b = bpnn::predict_db(&nlos, tau).map_err(|e| e.to_string())?;
        out.extend([tau, a, b]);
    }
    Ok(out)
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = routeEnd)]
pub fn route_end_js() -> Result<f64, JsError> {
    route_end().map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = ccfCurves)]
pub fn ccf_curves_js(t: f64, pitch_deg: f64, max_spacing: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(ccf_rows(t, pitch_deg, max_spacing, points))
}

#[wasm_bindgen(js_name = routeTrace)]
pub fn route_trace_js(step: f64) -> Result<Vec<f64>, JsError> {
    js(route_rows(step))
}

#[wasm_bindgen(js_name = powerCurves)]
pub fn power_curves_js(min_us: f64, max_us: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(power_rows(min_us, max_us, points))
}
