//! Time-variant channel impulse response assembly.
//!
//! Path set, delays and mean angles come from the scene at every snapshot.
//! Path powers come from the delay-to-power networks and ray angle offsets
//! from the offset generators. Offsets and initial phases are drawn when a
//! path is born and kept for its lifetime; the movement phase integrates the
//! ray Doppler across consecutive snapshots.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gan::GanModel;
use crate::kinematics::{
    doppler_frequency, rotation_phase, wrap_angle, AngleSet, Mat3, PhaseIntegrator, Trajectory, Vec3,
};
use crate::nn::MlpModel;
use crate::scene::{PathKind, Scene};

/// Largest supported rays per path; keeps ray identities packable.
pub const MAX_RAYS_PER_PATH: usize = 4096;

/// Antenna element offsets in the terminal body frame, metres.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    pub elements: Vec<Vec3>,
}

impl AntennaArray {
    pub fn single() -> Self {
        Self {
            elements: vec![Vec3::ZERO],
        }
    }

    /// `n` elements spaced `spacing` metres apart along `axis`, first at the origin.
    pub fn linear(n: usize, spacing: f64, axis: Vec3) -> Result<Self> {
        let u = axis
            .normalized()
            .ok_or_else(|| Error::invalid("array axis must be non-zero"))?;
        Ok(Self {
            elements: (0..n).map(|i| u * (spacing * i as f64)).collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::invalid("antenna array needs at least one element"));
        }
        if self.elements.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("antenna offsets must be finite"));
        }
        Ok(())
    }
}

/// Uniform snapshot grid `start, start + step, ...` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::config("time", "start, stop and step must be finite"));
        }
        if self.stop <= self.start {
            return Err(Error::config("time.stop", "must exceed time.start"));
        }
        if self.step <= 0.0 {
            return Err(Error::config("time.step", "must be positive"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub carrier_hz: f64,
    pub tx: Trajectory,
    pub rx: Trajectory,
    pub tx_array: AntennaArray,
    pub rx_array: AntennaArray,
    pub scene: Scene,
    /// Rays per NLoS path; the LoS path always carries one ray.
    pub rays_per_path: usize,
    pub time: TimeGrid,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(Error::config("carrier_hz", "must be positive"));
        }
        if self.rays_per_path == 0 || self.rays_per_path > MAX_RAYS_PER_PATH {
            return Err(Error::config(
                "rays_per_path",
                format!("must lie in 1..={MAX_RAYS_PER_PATH}"),
            ));
        }
        self.tx_array.validate()?;
        self.rx_array.validate()?;
        self.scene.validate()?;
        self.time.validate()
    }

    pub fn wavelength(&self) -> f64 {
        crate::kinematics::wavelength(self.carrier_hz)
    }

    /// Antenna pairs as `(tx element, rx element)`; the pair index is
    /// `tx_element * rx_count + rx_element`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.tx_array.elements.len())
            .flat_map(|p| (0..self.rx_array.elements.len()).map(move |q| (p, q)))
            .collect()
    }

    /// Terminal velocities at `t`.
    pub fn velocities(&self, t: f64) -> Result<(Vec3, Vec3)> {
        Ok((self.tx.velocity_at(t)?, self.rx.velocity_at(t)?))
    }

    /// Doppler frequency of a ray with the given angles at `t`.
    pub fn ray_doppler(&self, t: f64, angles: &AngleSet) -> Result<f64> {
        let (vt, vr) = self.velocities(t)?;
        Ok(doppler_frequency(angles, vt, vr, self.carrier_hz))
    }

    /// World-frame Tx element displacement `R_v R^P d` at `t`.
    pub fn tx_displacement(&self, t: f64, d_body: Vec3) -> Result<Vec3> {
        let rv = self.tx.velocity_rotation_at(t)?;
        Ok(rv.mul_vec(self.tx.attitude_rotation_at(t).mul_vec(d_body)))
    }

    /// World-frame Rx element displacement `R_v d` at `t`.
    pub fn rx_displacement(&self, t: f64, d_body: Vec3) -> Result<Vec3> {
        Ok(self.rx.velocity_rotation_at(t)?.mul_vec(d_body))
    }

    /// Same scenario with the Tx attitude profile removed.
    pub fn without_attitude(&self) -> Self {
        Self {
            tx: self.tx.without_attitude(),
            rx: self.rx.without_attitude(),
            ..self.clone()
        }
    }
}

/// Trained networks used during generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModels {
    pub los_power: MlpModel,
    pub nlos_power: MlpModel,
    pub azimuth_offsets: GanModel,
    pub elevation_offsets: GanModel,
}

impl ChannelModels {
    pub fn new(los_power: MlpModel, nlos_power: MlpModel, azimuth: GanModel, elevation: GanModel) -> Result<Self> {
        for (name, m) in [("LoS power", &los_power), ("NLoS power", &nlos_power)] {
            if m.input_dim() != 1 || m.output_dim() != 1 {
                return Err(Error::invalid(format!(
                    "{name} model must map delay to power (1 -> 1), has {:?}",
                    m.layer_dims()
                )));
            }
        }
        azimuth.validate()?;
        elevation.validate()?;
        Ok(Self {
            los_power,
            nlos_power,
            azimuth_offsets: azimuth,
            elevation_offsets: elevation,
        })
    }

    /// Preset delay-to-power networks with the bundled offset generators.
    pub fn bundled() -> Result<Self> {
        Self::new(
            crate::bpnn::preset_los(),
            crate::bpnn::preset_nlos(),
            GanModel::from_document(include_str!("../models/gan_azimuth.toml"))?,
            GanModel::from_document(include_str!("../models/gan_elevation.toml"))?,
        )
    }

    /// Path power in dB for a delay in seconds.
    pub fn path_power_db(&self, kind: PathKind, delay_s: f64) -> Result<f64> {
        let m = match kind {
            PathKind::LoS => &self.los_power,
            PathKind::NLoS => &self.nlos_power,
        };
        m.forward_scalar(delay_s * 1e6)
    }
}

/// Globally unique ray identity within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RayKey {
    pub path_id: u32,
    /// Snapshot index at which the path was born.
    pub birth: u32,
    pub ray_id: u32,
}

impl RayKey {
    /// Packs the identity into one integer (used as an RNG stream id).
    pub fn packed(&self) -> u64 {
        ((self.path_id as u64) << 40) | ((self.birth as u64 & 0x0fff_ffff) << 12) | (self.ray_id as u64 & 0xfff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySnapshot {
    pub ray_id: u32,
    pub angles: AngleSet,
    /// Total ray phase for this antenna pair, wrapped to (-pi, pi].
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSnapshot {
    pub path_id: u32,
    pub kind: PathKind,
    pub birth: u32,
    /// Seconds.
    pub delay: f64,
    pub power_db: f64,
    pub rays: Vec<RaySnapshot>,
}

impl PathSnapshot {
    pub fn power_linear(&self) -> f64 {
        10f64.powf(self.power_db / 10.0)
    }

    /// Normalized coefficient `(1/sqrt(M)) sum exp(j psi)`.
    pub fn coefficient(&self) -> Complex64 {
        let a = 1.0 / (self.rays.len() as f64).sqrt();
        self.rays
            .iter()
            .map(|r| Complex64::from_polar(a, r.phase))
            .sum()
    }

    pub fn key(&self, ray: &RaySnapshot) -> RayKey {
        RayKey {
            path_id: self.path_id,
            birth: self.birth,
            ray_id: ray.ray_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirSnapshot {
    pub t: f64,
    pub pair: usize,
    pub paths: Vec<PathSnapshot>,
}

impl CirSnapshot {
    /// `sum sqrt(P_n) h_n exp(-j 2 pi f tau_n)`.
    pub fn transfer_function(&self, f: f64) -> Complex64 {
        self.paths
            .iter()
            .map(|p| p.power_linear().sqrt() * p.coefficient() * Complex64::from_polar(1.0, -2.0 * PI * f * p.delay))
            .sum()
    }

    pub fn path(&self, path_id: u32) -> Option<&PathSnapshot> {
        self.paths.iter().find(|p| p.path_id == path_id)
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(PathSnapshot::power_linear).sum()
    }
}

/// Generated channel: one snapshot series per antenna pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRun {
    pub carrier_hz: f64,
    pub times: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    /// `series[pair][time index]`.
    pub series: Vec<Vec<CirSnapshot>>,
}

impl ChannelRun {
    pub fn series(&self, pair: usize) -> Result<&[CirSnapshot]> {
        self.series
            .get(pair)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("no antenna pair {pair}")))
    }
}

struct LiveRay {
    departure_offset: (f64, f64),
    arrival_offset: (f64, f64),
    initial_phase: f64,
    movement: PhaseIntegrator,
    last_doppler: f64,
}

struct LivePath {
    birth: u32,
    rays: Vec<LiveRay>,
}

fn spawn_rays(kind: PathKind, m: usize, models: &ChannelModels, rng: &mut ChaCha8Rng) -> Result<Vec<LiveRay>> {
    if kind == PathKind::LoS {
        return Ok(vec![LiveRay {
            departure_offset: (0.0, 0.0),
            arrival_offset: (0.0, 0.0),
            initial_phase: rng.random_range(0.0..2.0 * PI),
            movement: PhaseIntegrator::default(),
            last_doppler: 0.0,
        }]);
    }
    let az = &models.azimuth_offsets;
    let el = &models.elevation_offsets;
    let az_off = az.generate(&az.noise.draw(2 * m, rng))?;
    let el_off = el.generate(&el.noise.draw(2 * m, rng))?;
    Ok((0..m)
        .map(|i| LiveRay {
            departure_offset: (az_off[i], el_off[i]),
            arrival_offset: (az_off[m + i], el_off[m + i]),
            initial_phase: rng.random_range(0.0..2.0 * PI),
            movement: PhaseIntegrator::default(),
            last_doppler: 0.0,
        })
        .collect())
}

struct Frame {
    v_tx: Vec3,
    v_rx: Vec3,
    rv_tx: Mat3,
    attitude: Mat3,
    rv_rx: Mat3,
}

/// Builds the CIR over `times` (ascending) for every antenna pair.
pub fn build_cir(scenario: &Scenario, models: &ChannelModels, times: &[f64], seed: u64) -> Result<ChannelRun> {
    scenario.validate()?;
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("time grid must be finite and strictly ascending"));
    }
    if times.len() > 0x0fff_ffff {
        return Err(Error::invalid("time grid is too long"));
    }
    let pairs = scenario.pairs();
    let f0 = scenario.carrier_hz;
    let m = scenario.rays_per_path;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live: BTreeMap<u32, LivePath> = BTreeMap::new();
    let mut series: Vec<Vec<CirSnapshot>> = vec![Vec::with_capacity(times.len()); pairs.len()];

    for (k, &t) in times.iter().enumerate() {
        let tx_pos = scenario.tx.position_at(t)?;
        let rx_pos = scenario.rx.position_at(t)?;
        let frame = Frame {
            v_tx: scenario.tx.velocity_at(t)?,
            v_rx: scenario.rx.velocity_at(t)?,
            rv_tx: scenario.tx.velocity_rotation_at(t)?,
            attitude: scenario.tx.attitude_rotation_at(t),
            rv_rx: scenario.rx.velocity_rotation_at(t)?,
        };
        let dt = if k > 0 { t - times[k - 1] } else { 0.0 };
        let mut geoms = if tx_pos == rx_pos {
            Vec::new()
        } else {
            scenario.scene.enumerate_paths(tx_pos, rx_pos)?
        };
        geoms.sort_by_key(|g| g.path_id);

        let mut next: BTreeMap<u32, LivePath> = BTreeMap::new();
        // Per path: geometry, power and per-ray (angles, doppler-integrated phase).
        let mut current: Vec<(PathKind, u32, u32, f64, f64, Vec<(AngleSet, f64)>)> = Vec::with_capacity(geoms.len());
        for g in &geoms {
            let (mut path, fresh) = match live.remove(&g.path_id) {
                Some(p) => (p, false),
                None => {
                    let rays = spawn_rays(g.kind, m, models, &mut rng)?;
                    (
                        LivePath {
                            birth: k as u32,
                            rays,
                        },
                        true,
                    )
                }
            };
            let power_db = models.path_power_db(g.kind, g.delay)?;
            if !power_db.is_finite() {
                return Err(Error::Diverged {
                    stage: "snapshot",
                    index: k,
                });
            }
            let mut rays = Vec::with_capacity(path.rays.len());
            for r in &mut path.rays {
                let angles = g.angles.offset(r.departure_offset, r.arrival_offset);
                let f = doppler_frequency(&angles, frame.v_tx, frame.v_rx, f0);
                if !fresh {
                    r.movement.advance(r.last_doppler, f, dt);
                }
                r.last_doppler = f;
                rays.push((angles, r.initial_phase + r.movement.phase()));
            }
            current.push((g.kind, g.path_id, path.birth, g.delay, power_db, rays));
            next.insert(g.path_id, path);
        }
        live = next;

        for (pi, &(p, q)) in pairs.iter().enumerate() {
            let d_tx = scenario.tx_array.elements[p];
            let d_rx = scenario.rx_array.elements[q];
            let paths = current
                .iter()
                .map(|(kind, path_id, birth, delay, power_db, rays)| PathSnapshot {
                    path_id: *path_id,
                    kind: *kind,
                    birth: *birth,
                    delay: *delay,
                    power_db: *power_db,
                    rays: rays
                        .iter()
                        .enumerate()
                        .map(|(i, (angles, base))| RaySnapshot {
                            ray_id: i as u32,
                            angles: *angles,
                            phase: wrap_angle(
                                base + rotation_phase(
                                    angles,
                                    &frame.rv_tx,
                                    &frame.attitude,
                                    &frame.rv_rx,
                                    d_tx,
                                    d_rx,
                                    f0,
                                ),
                            ),
                        })
                        .collect(),
                })
                .collect();
            series[pi].push(CirSnapshot { t, pair: pi, paths });
        }
    }
    Ok(ChannelRun {
        carrier_hz: f0,
        times: times.to_vec(),
        pairs,
        series,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bpnn::{preset_los, preset_nlos};
    use crate::gan::{GanConfig, GanModel};
    use crate::kinematics::{Attitude, AttitudeSample, Waypoint, SPEED_OF_LIGHT};
    use crate::nn::{Activation, Layer};
    use crate::scene::Scatterer;

    /// Offset generator with a fixed spread (linear in the first noise input).
    pub(crate) fn fixed_gan(scale: f64) -> GanModel {
        let cfg = GanConfig {
            hidden: 4,
            noise_dim: 2,
            ..GanConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = GanModel::random(&cfg, 0.0, scale, &mut rng).unwrap();
        m.generator = MlpModel::from_layers(vec![Layer {
            inputs: 2,
            outputs: 1,
            weights: vec![1.0, 0.0],
            biases: vec![0.0],
            activation: Activation::Linear,
        }])
        .unwrap();
        m
    }

    pub(crate) fn models() -> ChannelModels {
        ChannelModels::new(preset_los(), preset_nlos(), fixed_gan(0.02), fixed_gan(0.01)).unwrap()
    }

    fn line(p0: Vec3, p1: Vec3, t1: f64) -> Trajectory {
        Trajectory::new(
            vec![
                Waypoint { t: 0.0, position: p0 },
                Waypoint { t: t1, position: p1 },
            ],
            vec![],
        )
        .unwrap()
    }

    pub(crate) fn scenario(tx: Trajectory, rx: Trajectory, scene: Scene) -> Scenario {
        Scenario {
            carrier_hz: 28e9,
            tx,
            rx,
            tx_array: AntennaArray::single(),
            rx_array: AntennaArray::single(),
            scene,
            rays_per_path: 20,
            time: TimeGrid {
                start: 0.0,
                stop: 1.0,
                step: 0.1,
            },
            seed: 1,
        }
    }

    #[test]
    fn time_grid_includes_stop() {
        let g = TimeGrid {
            start: 0.0,
            stop: 1.0,
            step: 0.1,
        };
        let t = g.times();
        assert_eq!(t.len(), 11);
        assert!((t[10] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn static_free_space_is_constant() {
        let s = scenario(
            Trajectory::stationary(Vec3::new(0.0, 0.0, 100.0)),
            Trajectory::stationary(Vec3::new(200.0, 0.0, 2.0)),
            Scene::free_space(),
        );
        let run = build_cir(&s, &models(), &s.time.times(), 3).unwrap();
        let snaps = run.series(0).unwrap();
        let first = &snaps[0];
        assert_eq!(first.paths.len(), 1);
        let p = &first.paths[0];
        let tau = (Vec3::new(0.0, 0.0, 100.0) - Vec3::new(200.0, 0.0, 2.0)).norm() / SPEED_OF_LIGHT;
        assert_eq!(p.kind, PathKind::LoS);
        assert!((p.delay - tau).abs() < 1e-18);
        assert_eq!(p.power_db, preset_los().forward_scalar(tau * 1e6).unwrap());
        for s in snaps {
            assert_eq!(s.paths, first.paths);
        }
        let h = first.transfer_function(0.0);
        let expect = p.power_linear().sqrt() * Complex64::from_polar(1.0, p.rays[0].phase);
        assert!((h - expect).norm() < 1e-15);
    }

    #[test]
    fn moving_ray_phase_advances_by_doppler() {
        // Tx moves straight at the Rx along x at 30 m/s.
        let tx = line(Vec3::new(0.0, 0.0, 10.0), Vec3::new(30.0, 0.0, 10.0), 1.0);
        let rx = Trajectory::stationary(Vec3::new(1000.0, 0.0, 10.0));
        let mut s = scenario(tx, rx, Scene::free_space());
        s.time = TimeGrid {
            start: 0.0,
            stop: 0.001,
            step: 1e-4,
        };
        let run = build_cir(&s, &models(), &s.time.times(), 1).unwrap();
        let snaps = run.series(0).unwrap();
        let fd = 28e9 / SPEED_OF_LIGHT * 30.0;
        assert!((fd - 2801.9).abs() < 0.05);
        for w in snaps.windows(2) {
            let dphi = wrap_angle(w[1].paths[0].rays[0].phase - w[0].paths[0].rays[0].phase);
            let expect = wrap_angle(2.0 * PI * fd * 1e-4);
            assert!((dphi - expect).abs() < 1e-9, "{dphi} vs {expect}");
        }
    }

    fn street() -> Scene {
        Scene {
            scatterers: vec![
                Scatterer::ground(0.0, 3000.0),
                Scatterer::block("n", Vec3::new(-300.0, 30.0, 0.0), Vec3::new(300.0, 50.0, 40.0), true),
            ],
            obstacles: vec![],
        }
    }

    fn moving_scenario() -> Scenario {
        let tx = line(Vec3::new(-100.0, 0.0, 80.0), Vec3::new(200.0, 0.0, 120.0), 10.0);
        let rx = line(Vec3::new(0.0, -10.0, 2.0), Vec3::new(50.0, -10.0, 2.0), 10.0);
        let mut s = scenario(tx, rx, street());
        s.time.stop = 10.0;
        s.time.step = 0.5;
        s
    }

    #[test]
    fn deterministic_and_unit_power_paths() {
        let s = moving_scenario();
        let a = build_cir(&s, &models(), &s.time.times(), 9).unwrap();
        let b = build_cir(&s, &models(), &s.time.times(), 9).unwrap();
        assert_eq!(a, b);
        let mut nlos = 0;
        for snap in a.series(0).unwrap() {
            for p in &snap.paths {
                let m = p.rays.len() as f64;
                let total: f64 = p.rays.iter().map(|_| (1.0 / m.sqrt()).powi(2)).sum();
                assert!((total - 1.0).abs() < 1e-9);
                assert!(p.coefficient().norm() <= 1.0 + 1e-12 || p.rays.len() > 1);
                if p.kind == PathKind::NLoS {
                    nlos += 1;
                    assert_eq!(p.rays.len(), 20);
                } else {
                    assert_eq!(p.rays.len(), 1);
                }
            }
        }
        assert!(nlos > 0);
    }

    #[test]
    fn ray_doppler_within_bound() {
        let s = moving_scenario();
        let run = build_cir(&s, &models(), &s.time.times(), 2).unwrap();
        let bound = crate::kinematics::doppler_bound(s.carrier_hz, s.tx.max_speed(), s.rx.max_speed());
        for snap in run.series(0).unwrap() {
            for p in &snap.paths {
                for r in &p.rays {
                    assert!(s.ray_doppler(snap.t, &r.angles).unwrap().abs() <= bound + 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_attitude_matches_no_attitude_bitwise() {
        let mut s = moving_scenario();
        s.tx_array = AntennaArray::linear(2, 0.005, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let zero = vec![
            AttitudeSample {
                t: 0.0,
                attitude: Attitude::default(),
            },
            AttitudeSample {
                t: 10.0,
                attitude: Attitude::default(),
            },
        ];
        s.tx = Trajectory::new(s.tx.waypoints().to_vec(), zero).unwrap();
        let with = build_cir(&s, &models(), &s.time.times(), 4).unwrap();
        let without = build_cir(&s.without_attitude(), &models(), &s.time.times(), 4).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn mean_path_power_is_unity_over_initial_phases() {
        let s = moving_scenario();
        let mut acc = 0.0;
        let mut count = 0;
        for seed in 0..4000 {
            let run = build_cir(&s, &models(), &[2.0], seed).unwrap();
            for p in &run.series(0).unwrap()[0].paths {
                if p.kind == PathKind::NLoS {
                    acc += p.coefficient().norm_sqr();
                    count += 1;
                }
            }
        }
        let mean = acc / count as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn transfer_function_examples() {
        let mk = |delay: f64, phase: f64| PathSnapshot {
            path_id: 1,
            kind: PathKind::LoS,
            birth: 0,
            delay,
            power_db: 0.0,
            rays: vec![RaySnapshot {
                ray_id: 0,
                angles: AngleSet::default(),
                phase,
            }],
        };
        let one = CirSnapshot {
            t: 0.0,
            pair: 0,
            paths: vec![mk(1e-6, 0.0)],
        };
        assert!((one.transfer_function(1e6) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let empty = CirSnapshot {
            t: 0.0,
            pair: 0,
            paths: vec![],
        };
        assert_eq!(empty.transfer_function(1e6), Complex64::new(0.0, 0.0));
        let dtau = 2e-7;
        let two = CirSnapshot {
            t: 0.0,
            pair: 0,
            paths: vec![mk(1e-6, 0.3), mk(1e-6 + dtau, 0.3)],
        };
        assert!(two.transfer_function(1.0 / (2.0 * dtau)).norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = moving_scenario();
        assert!(build_cir(&s, &models(), &[], 0).is_err());
        assert!(build_cir(&s, &models(), &[1.0, 0.5], 0).is_err());
        assert!(matches!(
            build_cir(&s, &models(), &[11.0], 0),
            Err(Error::OutOfRange { .. })
        ));
        let bad = ChannelModels::new(
            MlpModel::random(&[2, 1], &[Activation::Linear], &mut ChaCha8Rng::seed_from_u64(0)).unwrap(),
            preset_nlos(),
            fixed_gan(0.1),
            fixed_gan(0.1),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn bundled_models_load_and_sample_small_offsets() {
        let m = ChannelModels::bundled().unwrap();
        let az = crate::gan::sample_offsets(&m.azimuth_offsets, 2000, 1).unwrap();
        let el = crate::gan::sample_offsets(&m.elevation_offsets, 2000, 1).unwrap();
        for v in [&az, &el] {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
            assert!(mean.abs() < 0.05 && sd > 0.005 && sd < 0.3, "mean {mean} sd {sd}");
        }
        assert!((m.path_power_db(PathKind::LoS, 1.0e-6).unwrap() + 91.02).abs() < 0.01);
    }
}
