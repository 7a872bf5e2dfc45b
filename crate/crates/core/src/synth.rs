//! Synthetic ray-traced corpus with known ground-truth laws.
//!
//! Geometry comes from [`Scene`]; path powers follow an exponential decay in
//! delay with log-normal jitter, and ray angle offsets follow a two-component
//! Laplacian mixture. The ML stages train on this corpus and are checked
//! against the laws that generated it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::clustering::RayPoint;
use crate::error::{Error, Result};
use crate::kinematics::{normalize_direction, Vec3};
use crate::scene::{PathKind, Scene};

/// Mixture of Laplacian components `(weight, location, scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceMixture {
    components: Vec<(f64, f64, f64)>,
}

impl LaplaceMixture {
    pub fn new(components: Vec<(f64, f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        if components
            .iter()
            .any(|&(w, m, b)| !(w > 0.0 && b > 0.0 && m.is_finite() && w.is_finite() && b.is_finite()))
        {
            return Err(Error::invalid("mixture weights and scales must be positive"));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        Ok(Self {
            components: components.into_iter().map(|(w, m, b)| (w / total, m, b)).collect(),
        })
    }

    /// Equal-weight pair of Laplacians at `±separation / 2`.
    pub fn symmetric_bimodal(separation: f64, scale: f64) -> Result<Self> {
        Self::new(vec![(0.5, -separation / 2.0, scale), (0.5, separation / 2.0, scale)])
    }

    pub fn components(&self) -> &[(f64, f64, f64)] {
        &self.components
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|(w, m, _)| w * m).sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|&(w, m, b)| w * (-(x - m).abs() / b).exp() / (2.0 * b))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|&(w, m, b)| w * laplace_cdf(x, m, b))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u = rng.random::<f64>();
        let mut pick = self.components[self.components.len() - 1];
        for &c in &self.components {
            if u < c.0 {
                pick = c;
                break;
            }
            u -= c.0;
        }
        // Inverse CDF on the open interval (-1/2, 1/2).
        let v: f64 = rng.random::<f64>() - 0.5;
        let v = if v == -0.5 { 0.0 } else { v };
        pick.1 - pick.2 * v.signum() * (1.0 - 2.0 * v.abs()).ln()
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

pub fn laplace_cdf(x: f64, location: f64, scale: f64) -> f64 {
    let z = (x - location) / scale;
    if z < 0.0 {
        0.5 * z.exp()
    } else {
        1.0 - 0.5 * (-z).exp()
    }
}

/// Linear-scale power law `a * exp(-tau / b) + floor` (tau in µs) with
/// Gaussian jitter in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub amplitude: f64,
    pub decay_us: f64,
    pub floor: f64,
    pub jitter_db: f64,
}

impl PowerLaw {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.decay_us > 0.0 && self.floor >= 0.0 && self.jitter_db >= 0.0) {
            return Err(Error::invalid("power law needs positive amplitude and decay"));
        }
        Ok(())
    }

    /// Noise-free power in dB at delay `tau_us`.
    pub fn mean_db(&self, tau_us: f64) -> f64 {
        10.0 * (self.amplitude * (-tau_us / self.decay_us).exp() + self.floor).log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub los_power: PowerLaw,
    pub nlos_power: PowerLaw,
    pub azimuth_offsets: LaplaceMixture,
    pub elevation_offsets: LaplaceMixture,
    /// Full width of the uniform intra-path ray delay spread, seconds.
    pub delay_jitter: f64,
}

impl Default for GroundTruth {
    fn default() -> Self {
        Self {
            los_power: PowerLaw {
                amplitude: 1e-6,
                decay_us: 0.5,
                floor: 1e-12,
                jitter_db: 1.0,
            },
            nlos_power: PowerLaw {
                amplitude: 3e-7,
                decay_us: 0.8,
                floor: 1e-13,
                jitter_db: 3.0,
            },
            azimuth_offsets: LaplaceMixture::symmetric_bimodal(0.10, 0.015).expect("valid defaults"),
            elevation_offsets: LaplaceMixture::symmetric_bimodal(0.06, 0.01).expect("valid defaults"),
            delay_jitter: 10e-9,
        }
    }
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        self.los_power.validate()?;
        self.nlos_power.validate()?;
        if !(self.delay_jitter >= 0.0 && self.delay_jitter.is_finite()) {
            return Err(Error::invalid("delay jitter must be non-negative"));
        }
        Ok(())
    }
}

/// One ray of the corpus. Delay in seconds, power in dB, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRecord {
    pub channel_id: u32,
    pub path_id: u32,
    pub delay: f64,
    pub power_db: f64,
    pub aaoa: f64,
    pub eaoa: f64,
    pub aaod: f64,
    pub eaod: f64,
    pub los: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<RayRecord>,
    /// Pairs without any valid path.
    pub skipped_pairs: usize,
    pub pairs: usize,
}

/// Generates the corpus over every (tx, rx) grid combination, tx-major.
pub fn generate_dataset(
    scene: &Scene,
    tx_grid: &[Vec3],
    rx_grid: &[Vec3],
    truth: &GroundTruth,
    rays_per_path: usize,
    seed: u64,
) -> Result<Dataset> {
    if tx_grid.is_empty() || rx_grid.is_empty() {
        return Err(Error::invalid("terminal grids must be non-empty"));
    }
    let pairs: Vec<(Vec3, Vec3)> = tx_grid
        .iter()
        .flat_map(|&tx| rx_grid.iter().map(move |&rx| (tx, rx)))
        .collect();
    generate_pairs(scene, &pairs, truth, rays_per_path, seed)
}

/// Generates the corpus for an explicit list of (tx, rx) pairs.
///
/// Each pair draws from its own ChaCha8 stream, so a pair's rays depend only
/// on the seed and the pair index.
pub fn generate_pairs(
    scene: &Scene,
    pairs: &[(Vec3, Vec3)],
    truth: &GroundTruth,
    rays_per_path: usize,
    seed: u64,
) -> Result<Dataset> {
    if pairs.is_empty() {
        return Err(Error::invalid("need at least one terminal pair"));
    }
    if rays_per_path == 0 {
        return Err(Error::invalid("rays per path must be at least 1"));
    }
    truth.validate()?;
    scene.validate()?;
    let split_db = 10.0 * (rays_per_path as f64).log10();
    let mut records = Vec::new();
    let mut skipped = 0;
    let mut pair = 0u32;
    for &(tx, rx) in pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(pair as u64);
        let paths = if tx == rx {
            Vec::new()
        } else {
            scene.enumerate_paths(tx, rx)?
        };
        if paths.is_empty() {
            skipped += 1;
        }
        for p in &paths {
            let tau_us = p.delay * 1e6;
            let (law, rays) = match p.kind {
                PathKind::LoS => (&truth.los_power, 1),
                PathKind::NLoS => (&truth.nlos_power, rays_per_path),
            };
            let jitter = Normal::new(0.0, law.jitter_db).map_err(|e| Error::invalid(e.to_string()))?;
            let path_db = law.mean_db(tau_us) + jitter.sample(&mut rng);
            let ray_db = path_db - if rays > 1 { split_db } else { 0.0 };
            for _ in 0..rays {
                let a = &p.angles;
                let rec = if p.kind == PathKind::LoS {
                    RayRecord {
                        channel_id: pair,
                        path_id: p.path_id,
                        delay: p.delay,
                        power_db: ray_db,
                        aaoa: a.aaoa,
                        eaoa: a.eaoa,
                        aaod: a.aaod,
                        eaod: a.eaod,
                        los: true,
                    }
                } else {
                    let dt = (rng.random::<f64>() - 0.5) * truth.delay_jitter;
                    let (aaoa, eaoa) = normalize_direction(
                        a.aaoa + truth.azimuth_offsets.sample(&mut rng),
                        a.eaoa + truth.elevation_offsets.sample(&mut rng),
                    );
                    let (aaod, eaod) = normalize_direction(
                        a.aaod + truth.azimuth_offsets.sample(&mut rng),
                        a.eaod + truth.elevation_offsets.sample(&mut rng),
                    );
                    RayRecord {
                        channel_id: pair,
                        path_id: p.path_id,
                        delay: (p.delay + dt).max(f64::MIN_POSITIVE),
                        power_db: ray_db,
                        aaoa,
                        eaoa,
                        aaod,
                        eaod,
                        los: false,
                    }
                };
                records.push(rec);
            }
        }
        pair += 1;
    }
    Ok(Dataset {
        records,
        skipped_pairs: skipped,
        pairs: pair as usize,
    })
}

/// Per-path `(delay_us, power_db)` samples for one link kind. Ray powers are
/// summed in linear scale and delays averaged.
pub fn path_power_samples(records: &[RayRecord], los: bool) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < records.len() {
        let key = (records[i].channel_id, records[i].path_id);
        let mut j = i;
        let (mut lin, mut delay) = (0.0, 0.0);
        while j < records.len() && (records[j].channel_id, records[j].path_id) == key {
            lin += 10f64.powf(records[j].power_db / 10.0);
            delay += records[j].delay;
            j += 1;
        }
        if records[i].los == los {
            out.push((delay / (j - i) as f64 * 1e6, 10.0 * lin.log10()));
        }
        i = j;
    }
    out
}

/// `n` points spread evenly on a horizontal disc of `radius` around `center`.
pub fn ring_grid(center: Vec3, radius: f64, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n.max(1) as f64;
            Vec3::new(center.x + radius * a.cos(), center.y + radius * a.sin(), center.z)
        })
        .collect()
}

/// Layout of a synthetic multi-cluster ray cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCloud {
    pub clusters: usize,
    pub rays_per_cluster: usize,
    /// Centre delay range, µs.
    pub delay_range_us: (f64, f64),
    /// Centre elevation range, rad.
    pub elevation_range: (f64, f64),
    /// Minimum centre separation in range-normalized units.
    pub min_separation: f64,
    /// Per-ray standard deviations of delay (µs), azimuth and elevation (rad).
    pub delay_sd_us: f64,
    pub azimuth_sd: f64,
    pub elevation_sd: f64,
}

impl Default for ClusterCloud {
    fn default() -> Self {
        Self {
            clusters: 17,
            rays_per_cluster: 40,
            delay_range_us: (0.5, 10.0),
            elevation_range: (-0.6, 0.6),
            min_separation: 0.3,
            delay_sd_us: 0.25,
            azimuth_sd: 0.12,
            elevation_sd: 0.03,
        }
    }
}

/// Samples a clustered ray cloud; returns the points and their true labels.
pub fn cluster_cloud(spec: &ClusterCloud, seed: u64) -> Result<(Vec<RayPoint>, Vec<usize>)> {
    if spec.clusters == 0 || spec.rays_per_cluster == 0 {
        return Err(Error::invalid("cluster and ray counts must be positive"));
    }
    let (d0, d1) = spec.delay_range_us;
    let (e0, e1) = spec.elevation_range;
    if !(d1 > d0 && e1 > e0) {
        return Err(Error::invalid("ranges must be increasing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut centres: Vec<[f64; 3]> = Vec::with_capacity(spec.clusters);
    let mut tries = 0;
    while centres.len() < spec.clusters {
        tries += 1;
        if tries > 100_000 {
            return Err(Error::invalid("cannot place cluster centres at the requested separation"));
        }
        let c = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        let far = centres.iter().all(|o| {
            let da = (c[1] - o[1]).abs();
            let da = da.min(1.0 - da);
            ((c[0] - o[0]).powi(2) + da * da + (c[2] - o[2]).powi(2)).sqrt() >= spec.min_separation
        });
        if far {
            centres.push(c);
        }
    }
    let nd = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::invalid(e.to_string()));
    let (dn, an, en) = (nd(spec.delay_sd_us)?, nd(spec.azimuth_sd)?, nd(spec.elevation_sd)?);
    let mut points = Vec::with_capacity(spec.clusters * spec.rays_per_cluster);
    let mut labels = Vec::with_capacity(points.capacity());
    for (i, c) in centres.iter().enumerate() {
        let delay = d0 + c[0] * (d1 - d0);
        let az = -std::f64::consts::PI + c[1] * two_pi;
        let el = e0 + c[2] * (e1 - e0);
        for _ in 0..spec.rays_per_cluster {
            let (a, e) = normalize_direction(az + an.sample(&mut rng), el + en.sample(&mut rng));
            points.push(RayPoint::new((delay + dn.sample(&mut rng)).max(0.0), a, e));
            labels.push(i);
        }
    }
    Ok((points, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{wrap_angle, SPEED_OF_LIGHT};
    use crate::scene::Scatterer;

    #[test]
    fn free_space_pair_gives_one_los_ray() {
        let tx = [Vec3::new(0.0, 0.0, 10.0)];
        let rx = [Vec3::new(100.0, 0.0, 1.5)];
        let d = generate_dataset(&Scene::free_space(), &tx, &rx, &GroundTruth::default(), 20, 1).unwrap();
        assert_eq!(d.records.len(), 1);
        let r = d.records[0];
        assert!(r.los);
        let dist = (tx[0] - rx[0]).norm();
        assert!((r.delay - dist / SPEED_OF_LIGHT).abs() < 1e-18);
    }

    fn street() -> Scene {
        Scene {
            scatterers: vec![
                Scatterer::ground(0.0, 2000.0),
                Scatterer::block("n", Vec3::new(-200.0, 30.0, 0.0), Vec3::new(200.0, 50.0, 40.0), true),
                Scatterer::block("s", Vec3::new(-200.0, -50.0, 0.0), Vec3::new(200.0, -30.0, 30.0), true),
            ],
            obstacles: vec![],
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let tx = ring_grid(Vec3::new(0.0, 0.0, 60.0), 50.0, 3);
        let rx = ring_grid(Vec3::new(0.0, 0.0, 1.5), 20.0, 2);
        let a = generate_dataset(&street(), &tx, &rx, &GroundTruth::default(), 10, 7).unwrap();
        let b = generate_dataset(&street(), &tx, &rx, &GroundTruth::default(), 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pairs, 6);
        let c = generate_dataset(&street(), &tx, &rx, &GroundTruth::default(), 10, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn regression_recovers_decay() {
        let truth = GroundTruth {
            los_power: PowerLaw {
                amplitude: 1e-6,
                decay_us: 1.0,
                floor: 0.0,
                jitter_db: 2.0,
            },
            ..GroundTruth::default()
        };
        let tx: Vec<Vec3> = (0..20).map(|i| Vec3::new(50.0 + 45.0 * i as f64, 0.0, 80.0)).collect();
        let rx = ring_grid(Vec3::new(0.0, 0.0, 1.5), 10.0, 10);
        let d = generate_dataset(&Scene::free_space(), &tx, &rx, &truth, 1, 3).unwrap();
        assert_eq!(d.pairs, 200);
        let pts: Vec<(f64, f64)> = path_power_samples(&d.records, true)
            .into_iter()
            .map(|(t, db)| (t, db / 10.0 * std::f64::consts::LN_10))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn ray_delays_stay_in_jitter_window_and_offsets_center() {
        let truth = GroundTruth::default();
        let tx = ring_grid(Vec3::new(0.0, 0.0, 60.0), 80.0, 8);
        let rx = ring_grid(Vec3::new(0.0, 0.0, 1.5), 15.0, 4);
        let d = generate_dataset(&street(), &tx, &rx, &truth, 20, 2).unwrap();
        let scene = street();
        let mut offsets = Vec::new();
        for (pair, (t, r)) in tx.iter().flat_map(|t| rx.iter().map(move |r| (t, r))).enumerate() {
            for p in scene.enumerate_paths(*t, *r).unwrap() {
                for rec in d.records.iter().filter(|x| x.channel_id == pair as u32 && x.path_id == p.path_id) {
                    assert!((rec.delay - p.delay).abs() <= truth.delay_jitter / 2.0 + 1e-18);
                    if !rec.los {
                        offsets.push(wrap_angle(rec.aaoa - p.angles.aaoa));
                    }
                }
            }
        }
        let n = offsets.len() as f64;
        assert!(n > 500.0);
        let mean = offsets.iter().sum::<f64>() / n;
        let sd = (offsets.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 3.0 * sd / n.sqrt(), "mean {mean} sd {sd}");
    }

    #[test]
    fn mixture_sampling_matches_cdf() {
        let m = LaplaceMixture::symmetric_bimodal(0.1, 0.015).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut xs = m.sample_n(20_000, &mut rng);
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = m.cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.015, "{ks}");
        assert!((m.cdf(0.0) - 0.5).abs() < 1e-12);
        assert_eq!(m.mean(), 0.0);
    }

    #[test]
    fn input_validation() {
        let truth = GroundTruth::default();
        let p = [Vec3::ZERO];
        assert!(generate_dataset(&Scene::free_space(), &[], &p, &truth, 1, 0).is_err());
        assert!(generate_dataset(&Scene::free_space(), &p, &p, &truth, 0, 0).is_err());
        let d = generate_dataset(&Scene::free_space(), &p, &p, &truth, 1, 0).unwrap();
        assert_eq!(d.skipped_pairs, 1);
        assert!(LaplaceMixture::new(vec![(1.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn cluster_cloud_counts_and_determinism() {
        let spec = ClusterCloud {
            clusters: 5,
            rays_per_cluster: 7,
            ..ClusterCloud::default()
        };
        let (a, la) = cluster_cloud(&spec, 3).unwrap();
        let (b, lb) = cluster_cloud(&spec, 3).unwrap();
        assert_eq!(a.len(), 35);
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!((0..5).map(|c| la.iter().filter(|&&l| l == c).count()).collect::<Vec<_>>(), vec![7; 5]);
        let crowded = ClusterCloud {
            min_separation: 2.0,
            ..spec
        };
        assert!(cluster_cloud(&crowded, 0).is_err());
    }
}
