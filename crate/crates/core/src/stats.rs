//! Channel statistics: PDP, time/space correlation and Doppler spectrum.
//!
//! Correlations are normalized ray sums. The expectation over initial
//! phases is either evaluated in closed form (`Estimator::Exact`) or by
//! Monte Carlo, where each realization adds a fresh uniform phase to every
//! ray. Monte Carlo phases are drawn from a ChaCha8 stream keyed by the ray
//! identity, so a ray sees the same draws in every call with the same seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::channel::{CirSnapshot, RayKey, Scenario};
use crate::error::{Error, Result};
use crate::kinematics::{Vec3, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Exact,
    MonteCarlo { ensemble: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationOptions {
    pub estimator: Estimator,
    /// Restrict to one path; `None` correlates the path-summed channel.
    pub path: Option<u32>,
    /// Frequency at which the delay term is evaluated.
    pub frequency_hz: f64,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self {
            estimator: Estimator::MonteCarlo {
                ensemble: 100,
                seed: 0,
            },
            path: None,
            frequency_hz: 0.0,
        }
    }
}

/// World-frame antenna displacement applied to the second signal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Shift {
    pub tx: Vec3,
    pub rx: Vec3,
}

/// Power delay profile as `(delay s, linear power)` impulses.
pub fn pdp(snapshot: &CirSnapshot) -> Vec<(f64, f64)> {
    snapshot.paths.iter().map(|p| (p.delay, p.power_linear())).collect()
}

struct Entry {
    amp: f64,
    phase: f64,
    dep: Vec3,
    arr: Vec3,
}

fn entries(s: &CirSnapshot, opts: &CorrelationOptions) -> BTreeMap<RayKey, Entry> {
    let mut out = BTreeMap::new();
    for p in &s.paths {
        if opts.path.is_some_and(|id| id != p.path_id) {
            continue;
        }
        let amp = (p.power_linear() / p.rays.len() as f64).sqrt();
        let delay_phase = -2.0 * PI * opts.frequency_hz * p.delay;
        for r in &p.rays {
            out.insert(
                p.key(r),
                Entry {
                    amp,
                    phase: r.phase + delay_phase,
                    dep: r.angles.departure_unit(),
                    arr: r.angles.arrival_unit(),
                },
            );
        }
    }
    out
}

/// Normalized correlation `E[H1* H2] / sqrt(E|H1|^2 E|H2|^2)` for every shift
/// of the second signal.
pub fn correlate(
    first: &CirSnapshot,
    second: &CirSnapshot,
    shifts: &[Shift],
    carrier_hz: f64,
    opts: &CorrelationOptions,
) -> Result<Vec<Complex64>> {
    let e1 = entries(first, opts);
    let e2 = entries(second, opts);
    let p1: f64 = e1.values().map(|e| e.amp * e.amp).sum();
    let p2: f64 = e2.values().map(|e| e.amp * e.amp).sum();
    if !(p1 > 0.0 && p2 > 0.0) {
        return Err(Error::invalid("correlation needs non-zero power in both snapshots"));
    }
    let k = 2.0 * PI * carrier_hz / SPEED_OF_LIGHT;
    let spatial = |e: &Entry| -> Vec<Complex64> {
        shifts
            .iter()
            .map(|s| Complex64::from_polar(1.0, k * (e.dep.dot(s.tx) + e.arr.dot(s.rx))))
            .collect()
    };
    let n = shifts.len();
    match opts.estimator {
        Estimator::Exact => {
            let den = (p1 * p2).sqrt();
            let mut num = vec![Complex64::new(0.0, 0.0); n];
            for (key, b) in &e2 {
                let Some(a) = e1.get(key) else { continue };
                let base = Complex64::from_polar(a.amp * b.amp, b.phase - a.phase);
                for (acc, s) in num.iter_mut().zip(spatial(b)) {
                    *acc += base * s;
                }
            }
            Ok(num.into_iter().map(|v| v / den).collect())
        }
        Estimator::MonteCarlo { ensemble, seed } => {
            if ensemble == 0 {
                return Err(Error::invalid("ensemble must be positive"));
            }
            let mut keys: Vec<RayKey> = e1.keys().chain(e2.keys()).copied().collect();
            keys.sort_unstable();
            keys.dedup();
            let mut rngs: Vec<ChaCha8Rng> = keys
                .iter()
                .map(|key| {
                    let mut r = ChaCha8Rng::seed_from_u64(seed);
                    r.set_stream(key.packed());
                    r
                })
                .collect();
            let slots: Vec<(Option<&Entry>, Option<(&Entry, Vec<Complex64>)>)> = keys
                .iter()
                .map(|key| (e1.get(key), e2.get(key).map(|b| (b, spatial(b)))))
                .collect();
            let mut n11 = 0.0;
            let mut n22 = vec![0.0; n];
            let mut n12 = vec![Complex64::new(0.0, 0.0); n];
            let mut h2 = vec![Complex64::new(0.0, 0.0); n];
            for _ in 0..ensemble {
                let mut h1 = Complex64::new(0.0, 0.0);
                h2.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (rng, (a, b)) in rngs.iter_mut().zip(&slots) {
                    let theta: f64 = rng.random_range(0.0..2.0 * PI);
                    if let Some(a) = a {
                        h1 += Complex64::from_polar(a.amp, a.phase + theta);
                    }
                    if let Some((b, sp)) = b {
                        let z = Complex64::from_polar(b.amp, b.phase + theta);
                        for (acc, s) in h2.iter_mut().zip(sp) {
                            *acc += z * s;
                        }
                    }
                }
                n11 += h1.norm_sqr();
                for l in 0..n {
                    n22[l] += h2[l].norm_sqr();
                    n12[l] += h1.conj() * h2[l];
                }
            }
            Ok((0..n)
                .map(|l| {
                    let den = (n11 * n22[l]).sqrt();
                    if den > 0.0 {
                        n12[l] / den
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect())
        }
    }
}

/// Index of the snapshot at time `t` (to within a millionth of a step).
pub fn index_at(series: &[CirSnapshot], t: f64) -> Result<usize> {
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::invalid("empty snapshot series"));
    };
    let tol = if series.len() > 1 {
        1e-6 * (series[1].t - series[0].t)
    } else {
        1e-9
    };
    if t < first.t - tol || t > last.t + tol {
        return Err(Error::OutOfRange {
            t,
            start: first.t,
            end: last.t,
        });
    }
    let i = series.partition_point(|s| s.t < t - tol);
    match series.get(i) {
        Some(s) if (s.t - t).abs() <= tol => Ok(i),
        _ => Err(Error::invalid(format!("no snapshot at t = {t}"))),
    }
}

/// Temporal correlation at `t` for every lag (seconds, on the snapshot grid).
pub fn acf(series: &[CirSnapshot], t: f64, lags: &[f64], carrier_hz: f64, opts: &CorrelationOptions) -> Result<Vec<Complex64>> {
    Ok(stcf(series, t, lags, &[Shift::default()], carrier_hz, opts)?
        .into_iter()
        .map(|row| row[0])
        .collect())
}

/// Spatial correlation (real part) of one snapshot for every shift.
pub fn ccf(snapshot: &CirSnapshot, shifts: &[Shift], carrier_hz: f64, opts: &CorrelationOptions) -> Result<Vec<f64>> {
    Ok(correlate(snapshot, snapshot, shifts, carrier_hz, opts)?
        .into_iter()
        .map(|v| v.re)
        .collect())
}

/// Joint correlation surface indexed `[lag][shift]`.
pub fn stcf(
    series: &[CirSnapshot],
    t: f64,
    lags: &[f64],
    shifts: &[Shift],
    carrier_hz: f64,
    opts: &CorrelationOptions,
) -> Result<Vec<Vec<Complex64>>> {
    let i = index_at(series, t)?;
    lags.iter()
        .map(|&dt| {
            let j = index_at(series, series[i].t + dt)?;
            correlate(&series[i], &series[j], shifts, carrier_hz, opts)
        })
        .collect()
}

/// Tx-side shifts for normalized lags `d / lambda` along a body-frame axis.
pub fn tx_lag_shifts(scenario: &Scenario, t: f64, lags: &[f64], axis_body: Vec3) -> Result<Vec<Shift>> {
    let u = axis_body
        .normalized()
        .ok_or_else(|| Error::invalid("spacing axis must be non-zero"))?;
    let lambda = scenario.wavelength();
    lags.iter()
        .map(|&l| {
            Ok(Shift {
                tx: scenario.tx_displacement(t, u * (l * lambda))?,
                rx: Vec3::ZERO,
            })
        })
        .collect()
}

/// First lag at which `values` falls to `level` times its maximum, linearly
/// interpolated. `None` when it never does.
pub fn lag_at_level(lags: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target = level * max;
    for i in 1..values.len().min(lags.len()) {
        if values[i] <= target {
            let (v0, v1) = (values[i - 1], values[i]);
            if v0 == v1 {
                return Some(lags[i]);
            }
            return Some(lags[i - 1] + (v0 - target) / (v0 - v1) * (lags[i] - lags[i - 1]));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dpsd {
    /// Ascending frequencies, Hz.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Un-normalized correlation at zero lag.
    pub acf0: f64,
    /// Snapshot rate is below twice the Doppler bound.
    pub aliasing: bool,
}

impl Dpsd {
    pub fn bin_width(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }

    pub fn total(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_width()
    }

    /// Fraction of spectral mass with `|f| <= limit`.
    pub fn fraction_within(&self, limit: f64) -> f64 {
        let inside: f64 = self
            .freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| f.abs() <= limit)
            .map(|(_, p)| p)
            .sum();
        inside / self.power.iter().sum::<f64>()
    }

    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .power
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        self.freqs[i]
    }
}

/// Doppler spectrum around `t_center`: Hann-windowed FFT of the un-normalized
/// temporal correlation over lags `[-window/2, window/2]`.
///
/// Lags are taken forward from `t_center`; negative lags use the conjugate
/// symmetric extension, so the spectrum is real. Window sidelobes can leave
/// small negative values; they are kept so the spectrum integrates to `acf0`.
pub fn dpsd(
    series: &[CirSnapshot],
    t_center: f64,
    window_s: f64,
    fft_size: usize,
    carrier_hz: f64,
    opts: &CorrelationOptions,
    doppler_bound: Option<f64>,
) -> Result<Dpsd> {
    if series.len() < 2 {
        return Err(Error::invalid("DPSD needs at least two snapshots"));
    }
    let step = series[1].t - series[0].t;
    if series.windows(2).any(|w| ((w[1].t - w[0].t) - step).abs() > 1e-6 * step) {
        return Err(Error::invalid("DPSD needs a uniform snapshot grid"));
    }
    if !(window_s > 0.0) {
        return Err(Error::invalid("window must be positive"));
    }
    let half = (window_s / 2.0 / step).round() as usize;
    if half == 0 || 2 * half + 1 > fft_size {
        return Err(Error::invalid(format!(
            "window of {} lags does not fit an FFT of {fft_size}",
            2 * half + 1
        )));
    }
    let c = index_at(series, t_center)?;
    if c + half >= series.len() {
        return Err(Error::OutOfRange {
            t: series[c].t + half as f64 * step,
            start: series[0].t,
            end: series[series.len() - 1].t,
        });
    }
    let e0 = entries(&series[c], opts);
    let scale: f64 = e0.values().map(|e| e.amp * e.amp).sum();
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    let w_half = half as f64 * step;
    for l in 0..=half {
        let rho = correlate(&series[c], &series[c + l], &[Shift::default()], carrier_hz, opts)?[0];
        let p_l: f64 = entries(&series[c + l], opts).values().map(|e| e.amp * e.amp).sum();
        let r = rho * (scale * p_l).sqrt();
        let w = 0.5 * (1.0 + (PI * l as f64 * step / w_half).cos());
        buf[l] = r * w * step;
        if l > 0 {
            buf[fft_size - l] = r.conj() * w * step;
        }
    }
    FftPlanner::new().plan_fft_forward(fft_size).process(&mut buf);
    let df = 1.0 / (fft_size as f64 * step);
    let n = fft_size as isize;
    let lo = -(n / 2);
    let (freqs, power) = (lo..lo + n)
        .map(|k| (k as f64 * df, buf[k.rem_euclid(n) as usize].re))
        .unzip();
    Ok(Dpsd {
        freqs,
        power,
        acf0: scale,
        aliasing: doppler_bound.is_some_and(|b| 1.0 / step < 2.0 * b),
    })
}
