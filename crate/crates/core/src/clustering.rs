//! K-means over rays in (delay, azimuth, elevation) space with a weighted
//! distance, elbow selection of the cluster count, and extraction of the
//! per-ray angle offsets used to train the offset GAN.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kinematics::wrap_angle;

/// A ray in clustering space. Delay in µs, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPoint {
    pub delay_us: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl RayPoint {
    pub fn new(delay_us: f64, azimuth: f64, elevation: f64) -> Self {
        Self {
            delay_us,
            azimuth,
            elevation,
        }
    }

    fn is_finite(&self) -> bool {
        self.delay_us.is_finite() && self.azimuth.is_finite() && self.elevation.is_finite()
    }

    fn key(&self) -> [f64; 3] {
        [self.delay_us, self.azimuth, self.elevation]
    }
}

/// Per-coordinate scale factors of the modified distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceWeights {
    pub delay: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl Default for DistanceWeights {
    fn default() -> Self {
        Self {
            delay: 1.0,
            azimuth: 1.0,
            elevation: 1.0,
        }
    }
}

impl DistanceWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.delay, self.azimuth, self.elevation];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|x| *x == 0.0) {
            return Err(Error::invalid("distance weights must be non-negative and not all zero"));
        }
        Ok(())
    }

    /// Inverse standard deviation of each coordinate (1 when a coordinate is
    /// constant). Azimuth spread is measured with wrapped deviations around
    /// the circular mean.
    pub fn inverse_std(points: &[RayPoint]) -> Self {
        if points.is_empty() {
            return Self::default();
        }
        let n = points.len() as f64;
        let std_of = |vals: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = vals.collect();
            let mean = v.iter().sum::<f64>() / n;
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
        };
        let (s, c) = points
            .iter()
            .fold((0.0, 0.0), |(s, c), p| (s + p.azimuth.sin(), c + p.azimuth.cos()));
        let circ_mean = s.atan2(c);
        let inv = |sd: f64| if sd > 0.0 { 1.0 / sd } else { 1.0 };
        Self {
            delay: inv(std_of(&mut points.iter().map(|p| p.delay_us))),
            azimuth: inv(std_of(&mut points.iter().map(|p| wrap_angle(p.azimuth - circ_mean)))),
            elevation: inv(std_of(&mut points.iter().map(|p| p.elevation))),
        }
    }
}

fn dist_sq(a: &RayPoint, b: &RayPoint, w: &DistanceWeights) -> f64 {
    let dt = w.delay * (a.delay_us - b.delay_us);
    let da = w.azimuth * wrap_angle(a.azimuth - b.azimuth);
    let de = w.elevation * (a.elevation - b.elevation);
    dt * dt + da * da + de * de
}

/// Weighted Euclidean distance; the azimuth difference is wrapped.
pub fn ray_distance(a: &RayPoint, b: &RayPoint, w: &DistanceWeights) -> f64 {
    dist_sq(a, b, w).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansConfig {
    pub weights: DistanceWeights,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KmeansConfig {
    /// Ten restarts with inverse-std weights derived from `points`.
    pub fn for_points(points: &[RayPoint], seed: u64) -> Self {
        Self {
            weights: DistanceWeights::inverse_std(points),
            restarts: 10,
            max_iter: 300,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    /// Cluster id per input point, in input order.
    pub assignments: Vec<usize>,
    pub centroids: Vec<RayPoint>,
    /// Sum of squared modified distances to the centroid, per cluster.
    pub cluster_sse: Vec<f64>,
    pub sse: f64,
    /// Total SSE after each Lloyd iteration of the retained restart.
    pub sse_history: Vec<f64>,
}

impl ClusterResult {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }
}

/// Mean of a set of points. Azimuths are averaged after shifting each onto
/// the branch nearest the first member, then wrapped.
fn centroid_of<'a>(members: impl Iterator<Item = &'a RayPoint>) -> Option<RayPoint> {
    let mut n = 0usize;
    let mut ref_az = 0.0;
    let (mut st, mut sa, mut se) = (0.0, 0.0, 0.0);
    for p in members {
        if n == 0 {
            ref_az = p.azimuth;
        }
        st += p.delay_us;
        sa += wrap_angle(p.azimuth - ref_az);
        se += p.elevation;
        n += 1;
    }
    (n > 0).then(|| {
        let k = n as f64;
        RayPoint::new(st / k, wrap_angle(ref_az + sa / k), se / k)
    })
}

fn nearest(p: &RayPoint, centroids: &[RayPoint], w: &DistanceWeights) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist_sq(p, c, w);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// D²-weighted seeded choice of `k` distinct initial centroids.
fn init_centroids(points: &[RayPoint], k: usize, w: &DistanceWeights, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| dist_sq(p, &points[chosen[0]], w)).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total implies a positive entry")
        } else {
            // Every remaining point coincides with a chosen one; take any unused index.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist_sq(p, &points[next], w));
        }
        d2[next] = 0.0;
    }
    chosen
}

struct Run {
    assignments: Vec<usize>,
    centroids: Vec<RayPoint>,
    sse: f64,
    history: Vec<f64>,
}

fn lloyd(points: &[RayPoint], k: usize, cfg: &KmeansConfig, rng: &mut ChaCha8Rng) -> Run {
    let w = &cfg.weights;
    let mut centroids: Vec<RayPoint> = init_centroids(points, k, w, rng)
        .into_iter()
        .map(|i| points[i])
        .collect();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..cfg.max_iter.max(1) {
        let mut changed = false;
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centroids, w);
            dists[i] = d;
            if assignments[i] != j {
                assignments[i] = j;
                changed = true;
            }
        }
        // An emptied cluster takes over the point farthest from its centroid.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..points.len())
                    .filter(|&i| counts[assignments[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("k <= n leaves a cluster with two members");
                counts[assignments[far]] -= 1;
                counts[j] = 1;
                assignments[far] = j;
                dists[far] = 0.0;
                changed = true;
            }
        }
        for (j, c) in centroids.iter_mut().enumerate() {
            let members = points.iter().zip(&assignments).filter(|(_, &a)| a == j).map(|(p, _)| p);
            if let Some(m) = centroid_of(members) {
                *c = m;
            }
        }
        let sse: f64 = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| dist_sq(p, &centroids[a], w))
            .sum();
        history.push(sse);
        if !changed {
            break;
        }
    }
    let sse = *history.last().expect("at least one iteration");
    Run {
        assignments,
        centroids,
        sse,
        history,
    }
}

/// Best-of-restarts Lloyd clustering into `k` clusters.
///
/// Points are processed in a canonical sorted order, so the partition does
/// not depend on input order (labels may differ).
pub fn kmeans(points: &[RayPoint], k: usize, cfg: &KmeansConfig) -> Result<ClusterResult> {
    cfg.weights.validate()?;
    if k == 0 || k > points.len() {
        return Err(Error::invalid(format!(
            "cluster count {k} must lie in 1..={}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("ray points must be finite"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (points[a].key(), points[b].key());
        ka[0].total_cmp(&kb[0])
            .then(ka[1].total_cmp(&kb[1]))
            .then(ka[2].total_cmp(&kb[2]))
    });
    let sorted: Vec<RayPoint> = order.iter().map(|&i| points[i]).collect();

    let mut best: Option<Run> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let run = lloyd(&sorted, k, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| run.sse < b.sse) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");

    let mut assignments = vec![0; points.len()];
    for (pos, &orig) in order.iter().enumerate() {
        assignments[orig] = run.assignments[pos];
    }
    let mut cluster_sse = vec![0.0; k];
    for (p, &a) in points.iter().zip(&assignments) {
        cluster_sse[a] += dist_sq(p, &run.centroids[a], &cfg.weights);
    }
    Ok(ClusterResult {
        k,
        assignments,
        centroids: run.centroids,
        cluster_sse,
        sse: run.sse,
        sse_history: run.history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElbowThresholds {
    pub sse: f64,
    pub slope: f64,
}

impl Default for ElbowThresholds {
    fn default() -> Self {
        Self {
            sse: 0.15,
            slope: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElbowPoint {
    pub k: usize,
    /// SSE(k) / SSE(1).
    pub normalized_sse: f64,
    /// Forward decrease per unit k; `None` for the last point of the range.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElbowResult {
    pub k: usize,
    /// False when no k met both thresholds and the range maximum was returned.
    pub qualified: bool,
    pub curve: Vec<ElbowPoint>,
}

impl ElbowResult {
    pub fn chosen(&self) -> &ElbowPoint {
        self.curve.iter().find(|p| p.k == self.k).expect("chosen k is on the curve")
    }
}

/// Picks the first k whose normalized SSE and forward slope magnitude are
/// both below the thresholds.
pub fn elbow_select(
    points: &[RayPoint],
    ks: &[usize],
    thresholds: ElbowThresholds,
    cfg: &KmeansConfig,
) -> Result<ElbowResult> {
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("cluster-count range must be non-empty and ascending"));
    }
    if ks[ks.len() - 1] > points.len() {
        return Err(Error::invalid("cluster-count range exceeds the number of points"));
    }
    let base = kmeans(points, 1, cfg)?.sse;
    let norm = |s: f64| if base > 0.0 { s / base } else { 0.0 };
    let mut sse = Vec::with_capacity(ks.len());
    for &k in ks {
        sse.push(norm(kmeans(points, k, cfg)?.sse));
    }
    let curve: Vec<ElbowPoint> = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| ElbowPoint {
            k,
            normalized_sse: sse[i],
            slope: (i + 1 < ks.len()).then(|| (sse[i] - sse[i + 1]) / (ks[i + 1] - k) as f64),
        })
        .collect();
    let pick = curve.iter().find(|p| {
        p.normalized_sse < thresholds.sse && p.slope.is_some_and(|s| s.abs() < thresholds.slope)
    });
    Ok(match pick {
        Some(p) => ElbowResult {
            k: p.k,
            qualified: true,
            curve: curve.clone(),
        },
        None => ElbowResult {
            k: ks[ks.len() - 1],
            qualified: false,
            curve,
        },
    })
}

/// Angle offsets of each ray from its cluster centroid, wrapped to (-π, π].
pub fn extract_offsets(result: &ClusterResult, points: &[RayPoint]) -> Result<Vec<(f64, f64)>> {
    if result.assignments.len() != points.len() {
        return Err(Error::Shape("assignment count differs from point count".into()));
    }
    points
        .iter()
        .zip(&result.assignments)
        .map(|(p, &a)| {
            let c = result
                .centroids
                .get(a)
                .ok_or_else(|| Error::invalid(format!("assignment to unknown cluster {a}")))?;
            Ok((wrap_angle(p.azimuth - c.azimuth), wrap_angle(p.elevation - c.elevation)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, Normal};

    fn blob(center: RayPoint, spread: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<RayPoint> {
        let g = Normal::new(0.0, spread).unwrap();
        (0..n)
            .map(|_| {
                RayPoint::new(
                    center.delay_us + g.sample(rng),
                    wrap_angle(center.azimuth + g.sample(rng)),
                    center.elevation + g.sample(rng),
                )
            })
            .collect()
    }

    fn unit_cfg(seed: u64) -> KmeansConfig {
        KmeansConfig {
            weights: DistanceWeights::default(),
            restarts: 10,
            max_iter: 300,
            seed,
        }
    }

    #[test]
    fn distance_examples() {
        let o = RayPoint::new(0.0, 0.0, 0.0);
        let w = DistanceWeights::default();
        assert_eq!(ray_distance(&o, &o, &w), 0.0);
        assert!((ray_distance(&o, &RayPoint::new(1.0, 1.0, 1.0), &w) - 3f64.sqrt()).abs() < 1e-15);
        let w2 = DistanceWeights {
            delay: 0.5,
            ..w
        };
        assert_eq!(ray_distance(&o, &RayPoint::new(2.0, 0.0, 0.0), &w2), 1.0);
    }

    #[test]
    fn azimuth_difference_wraps() {
        let w = DistanceWeights::default();
        let a = RayPoint::new(0.0, 3.1, 0.0);
        let b = RayPoint::new(0.0, -3.1, 0.0);
        assert!((ray_distance(&a, &b, &w) - (2.0 * std::f64::consts::PI - 6.2)).abs() < 1e-12);
    }

    #[test]
    fn two_blobs_separate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut pts = blob(RayPoint::new(1.0, 0.5, 0.1), 0.02, 50, &mut rng);
        pts.extend(blob(RayPoint::new(3.0, -1.0, 0.4), 0.02, 50, &mut rng));
        let r = kmeans(&pts, 2, &unit_cfg(1)).unwrap();
        let first = r.assignments[0];
        assert!(r.assignments[..50].iter().all(|&a| a == first));
        assert!(r.assignments[50..].iter().all(|&a| a != first));
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = blob(RayPoint::new(2.0, 0.3, -0.2), 0.1, 40, &mut rng);
        let r = kmeans(&pts, 1, &unit_cfg(0)).unwrap();
        let n = pts.len() as f64;
        let mean_t = pts.iter().map(|p| p.delay_us).sum::<f64>() / n;
        let mean_a = pts.iter().map(|p| p.azimuth).sum::<f64>() / n;
        let mean_e = pts.iter().map(|p| p.elevation).sum::<f64>() / n;
        assert!((r.centroids[0].delay_us - mean_t).abs() < 1e-12);
        assert!((r.centroids[0].azimuth - mean_a).abs() < 1e-12);
        assert!((r.centroids[0].elevation - mean_e).abs() < 1e-12);
    }

    #[test]
    fn singleton_clusters_have_zero_sse() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts = blob(RayPoint::new(1.0, 0.0, 0.0), 0.5, 12, &mut rng);
        let r = kmeans(&pts, pts.len(), &unit_cfg(2)).unwrap();
        assert!(r.sse.abs() < 1e-24);
        assert!(kmeans(&pts, 0, &unit_cfg(2)).is_err());
        assert!(kmeans(&pts, 13, &unit_cfg(2)).is_err());
    }

    #[test]
    fn duplicate_points_still_give_k_clusters() {
        let pts = vec![RayPoint::new(1.0, 0.0, 0.0); 5];
        let r = kmeans(&pts, 3, &unit_cfg(0)).unwrap();
        let mut used: Vec<usize> = r.assignments.clone();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 3);
    }

    fn blobs(count: usize, seed: u64) -> Vec<RayPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        for c in 0..count {
            let center = RayPoint::new(0.5 + c as f64, 0.4 * c as f64 - 1.0, 0.1 * (c % 3) as f64);
            pts.extend(blob(center, 0.05, 30, &mut rng));
        }
        pts
    }

    #[test]
    fn sse_history_is_non_increasing() {
        let pts = blobs(6, 7);
        for k in [2, 4, 6, 9] {
            let r = kmeans(&pts, k, &unit_cfg(k as u64)).unwrap();
            for w in r.sse_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", r.sse_history);
            }
        }
    }

    #[test]
    fn best_sse_non_increasing_in_k() {
        let pts = blobs(5, 8);
        let cfg = KmeansConfig::for_points(&pts, 3);
        let sse: Vec<f64> = (1..=10).map(|k| kmeans(&pts, k, &cfg).unwrap().sse).collect();
        for w in sse.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{sse:?}");
        }
    }

    #[test]
    fn partition_independent_of_input_order() {
        let pts = blobs(4, 9);
        let cfg = KmeansConfig::for_points(&pts, 1);
        let a = kmeans(&pts, 5, &cfg).unwrap();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(77));
        let shuffled: Vec<RayPoint> = perm.iter().map(|&i| pts[i]).collect();
        let b = kmeans(&shuffled, 5, &cfg).unwrap();
        // Same partition up to renaming: co-membership agrees for every pair.
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let same_a = a.assignments[perm[i]] == a.assignments[perm[j]];
                let same_b = b.assignments[i] == b.assignments[j];
                assert_eq!(same_a, same_b);
            }
        }
        assert_eq!(a.sse, b.sse);
    }

    /// Brute-force oracle: SSE of the known two-blob partition versus any
    /// single split gives the elbow at 2.
    #[test]
    fn elbow_on_two_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut pts = blob(RayPoint::new(1.0, 0.0, 0.0), 0.01, 60, &mut rng);
        pts.extend(blob(RayPoint::new(2.0, 1.0, 0.5), 0.01, 60, &mut rng));
        let cfg = unit_cfg(4);
        let ks: Vec<usize> = (1..=6).collect();
        let e = elbow_select(&pts, &ks, ElbowThresholds::default(), &cfg).unwrap();
        assert_eq!(e.k, 2);
        assert!(e.qualified);
        // SSE(2)/SSE(1) equals within-blob scatter over total scatter.
        let within: f64 = [&pts[..60], &pts[60..]]
            .iter()
            .map(|half| {
                let c = centroid_of(half.iter()).unwrap();
                half.iter().map(|p| dist_sq(p, &c, &cfg.weights)).sum::<f64>()
            })
            .sum();
        let c = centroid_of(pts.iter()).unwrap();
        let total: f64 = pts.iter().map(|p| dist_sq(p, &c, &cfg.weights)).sum();
        assert!((e.chosen().normalized_sse - within / total).abs() < 1e-12);
    }

    #[test]
    fn elbow_on_single_blob_picks_first_qualifier() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts = blob(RayPoint::new(1.0, 0.0, 0.0), 0.3, 300, &mut rng);
        let ks: Vec<usize> = (1..=30).collect();
        let th = ElbowThresholds::default();
        let e = elbow_select(&pts, &ks, th, &unit_cfg(1)).unwrap();
        let first = e
            .curve
            .iter()
            .find(|p| p.normalized_sse < th.sse && p.slope.is_some_and(|s| s.abs() < th.slope))
            .map(|p| p.k);
        assert_eq!(first.unwrap_or(30), e.k);
        assert!(elbow_select(&pts, &[3, 2], th, &unit_cfg(1)).is_err());
    }

    #[test]
    fn offset_examples() {
        let pts = vec![
            RayPoint::new(1.0, 0.1, 0.0),
            RayPoint::new(1.0, -0.1, 0.0),
            RayPoint::new(5.0, 2.0, 0.3),
        ];
        let r = kmeans(&pts, 2, &unit_cfg(0)).unwrap();
        let off = extract_offsets(&r, &pts).unwrap();
        assert!((off[0].0 - 0.1).abs() < 1e-12);
        assert!((off[1].0 + 0.1).abs() < 1e-12);
        assert_eq!(off[2], (0.0, 0.0));
    }

    #[test]
    fn offsets_across_the_branch_cut() {
        let pts = vec![RayPoint::new(1.0, 3.1, 0.0), RayPoint::new(1.0, -3.1, 0.0)];
        let r = kmeans(&pts, 1, &unit_cfg(0)).unwrap();
        assert!((r.centroids[0].azimuth.abs() - std::f64::consts::PI).abs() < 1e-12);
        let off = extract_offsets(&r, &pts).unwrap();
        assert!((off[0].0 + off[1].0).abs() < 1e-12);
        assert!((off[0].0.abs() - (std::f64::consts::PI - 3.1)).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn offsets_sum_to_zero_per_cluster(seed in 0u64..1000, k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<RayPoint> = (0..40)
                .map(|_| RayPoint::new(rng.random_range(0.0..5.0), rng.random_range(-1.2..1.2), rng.random_range(-1.0..1.0)))
                .collect();
            let r = kmeans(&pts, k, &KmeansConfig::for_points(&pts, seed)).unwrap();
            let off = extract_offsets(&r, &pts).unwrap();
            for c in 0..k {
                let members: Vec<usize> = r.members(c).collect();
                let (sa, se) = members.iter().fold((0.0, 0.0), |(a, e), &i| (a + off[i].0, e + off[i].1));
                prop_assert!(sa.abs() < 1e-9 && se.abs() < 1e-9);
            }
        }
    }
}
