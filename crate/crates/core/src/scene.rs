//! Scatterer scenes and deterministic path geometry.
//!
//! Only the direct path and single-bounce specular reflections are traced.
//! Reflection points come from the image method on the facets of each
//! reflective scatterer; every leg is checked for blockage against all
//! facets and obstacles of the scene.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{direction_angles, AngleSet, Vec3, SPEED_OF_LIGHT};

/// Minimum hit distance along a ray, meters.
pub const HIT_EPSILON: f64 = 1e-6;
const MIN_AREA: f64 = 1e-9;
const BARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle(pub [Vec3; 3]);

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Triangle([a, b, c])
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.0;
        0.5 * (b - a).cross(c - a).norm()
    }

    /// Unit normal following the vertex winding.
    pub fn normal(&self) -> Vec3 {
        let [a, b, c] = self.0;
        (b - a).cross(c - a).normalized().unwrap_or(Vec3::ZERO)
    }

    fn barycentric(&self, p: Vec3) -> (f64, f64) {
        let [a, b, c] = self.0;
        let (e1, e2, w) = (b - a, c - a, p - a);
        let (d11, d12, d22) = (e1.dot(e1), e1.dot(e2), e2.dot(e2));
        let (dw1, dw2) = (w.dot(e1), w.dot(e2));
        let den = d11 * d22 - d12 * d12;
        ((d22 * dw1 - d12 * dw2) / den, (d11 * dw2 - d12 * dw1) / den)
    }

    /// Whether a point already known to lie on the plane falls inside (edges included).
    fn contains_coplanar(&self, p: Vec3) -> bool {
        let (u, v) = self.barycentric(p);
        u >= -BARY_TOL && v >= -BARY_TOL && u + v <= 1.0 + BARY_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Distance along the ray in units of |direction|.
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Möller–Trumbore ray/triangle test with inclusive edges.
///
/// A hit requires `t > HIT_EPSILON`; with a unit direction `t` is in meters.
pub fn ray_triangle_intersect(origin: Vec3, direction: Vec3, tri: &Triangle) -> Option<Hit> {
    let [v0, v1, v2] = tri.0;
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = direction.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-12 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - v0;
    let u = s.dot(p) * inv;
    if !(-BARY_TOL..=1.0 + BARY_TOL).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = direction.dot(q) * inv;
    if v < -BARY_TOL || u + v > 1.0 + BARY_TOL {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > HIT_EPSILON).then_some(Hit { t, u, v })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub name: String,
    pub centroid: Vec3,
    pub facets: Vec<Triangle>,
    pub reflective: bool,
}

impl Scatterer {
    /// Builds a scatterer; the centroid is the mean of all facet vertices.
    pub fn new(name: impl Into<String>, facets: Vec<Triangle>, reflective: bool) -> Self {
        let n = (facets.len() * 3).max(1) as f64;
        let sum = facets
            .iter()
            .flat_map(|f| f.0)
            .fold(Vec3::ZERO, |acc, p| acc + p);
        Self {
            name: name.into(),
            centroid: sum * (1.0 / n),
            facets,
            reflective,
        }
    }

    /// Axis-aligned block: four walls and a roof, no floor.
    pub fn block(name: impl Into<String>, min: Vec3, max: Vec3, reflective: bool) -> Self {
        let corner = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let (x0, y0, z0, x1, y1, z1) = (min.x, min.y, min.z, max.x, max.y, max.z);
        let quad = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| [Triangle::new(a, b, c), Triangle::new(a, c, d)];
        let mut facets = Vec::with_capacity(10);
        facets.extend(quad(corner(x0, y0, z0), corner(x1, y0, z0), corner(x1, y0, z1), corner(x0, y0, z1)));
        facets.extend(quad(corner(x1, y0, z0), corner(x1, y1, z0), corner(x1, y1, z1), corner(x1, y0, z1)));
        facets.extend(quad(corner(x1, y1, z0), corner(x0, y1, z0), corner(x0, y1, z1), corner(x1, y1, z1)));
        facets.extend(quad(corner(x0, y1, z0), corner(x0, y0, z0), corner(x0, y0, z1), corner(x0, y1, z1)));
        facets.extend(quad(corner(x0, y0, z1), corner(x1, y0, z1), corner(x1, y1, z1), corner(x0, y1, z1)));
        Self::new(name, facets, reflective)
    }

    /// Square horizontal plane at height `z` centered on the origin.
    pub fn ground(z: f64, half_size: f64) -> Self {
        let h = half_size;
        let a = Vec3::new(-h, -h, z);
        let b = Vec3::new(h, -h, z);
        let c = Vec3::new(h, h, z);
        let d = Vec3::new(-h, h, z);
        Self::new("ground", vec![Triangle::new(a, b, c), Triangle::new(a, c, d)], true)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
    /// Blocking-only geometry.
    pub obstacles: Vec<Triangle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    LoS,
    NLoS,
}

/// Identifier reserved for the direct path.
pub const LOS_PATH_ID: u32 = 1;

/// Stable identifier of the reflection off scatterer `index`.
pub fn nlos_path_id(index: usize) -> u32 {
    index as u32 + 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathGeometry {
    pub path_id: u32,
    pub kind: PathKind,
    /// Propagation delay, seconds.
    pub delay: f64,
    pub angles: AngleSet,
    pub bounce: Option<Vec3>,
    pub valid: bool,
}

impl Scene {
    pub fn free_space() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let tris = self
            .scatterers
            .iter()
            .flat_map(|s| s.facets.iter())
            .chain(self.obstacles.iter());
        for (i, tri) in tris.enumerate() {
            if !(tri.area() > MIN_AREA) {
                return Err(Error::invalid(format!("triangle {i} is degenerate")));
            }
        }
        Ok(())
    }

    /// True when something other than the excluded facet cuts the open segment `a -> b`.
    pub fn segment_blocked(&self, a: Vec3, b: Vec3, exclude: Option<(usize, usize)>) -> bool {
        let delta = b - a;
        let len = delta.norm();
        let Some(dir) = delta.normalized() else {
            return false;
        };
        let cuts = |tri: &Triangle| {
            ray_triangle_intersect(a, dir, tri).is_some_and(|h| h.t < len - HIT_EPSILON)
        };
        if self.obstacles.iter().any(cuts) {
            return true;
        }
        self.scatterers.iter().enumerate().any(|(si, s)| {
            s.facets
                .iter()
                .enumerate()
                .any(|(fi, tri)| exclude != Some((si, fi)) && cuts(tri))
        })
    }

    /// Specular bounce off one scatterer: (bounce point, facet index, total length).
    fn reflection(&self, index: usize, tx: Vec3, rx: Vec3) -> Option<(Vec3, usize, f64)> {
        let sc = &self.scatterers[index];
        let mut best: Option<(Vec3, usize, f64)> = None;
        for (fi, tri) in sc.facets.iter().enumerate() {
            let n = tri.normal();
            if n == Vec3::ZERO {
                continue;
            }
            let p0 = tri.0[0];
            let s_tx = (tx - p0).dot(n);
            let s_rx = (rx - p0).dot(n);
            if s_tx * s_rx <= 0.0 || s_tx.abs() < HIT_EPSILON || s_rx.abs() < HIT_EPSILON {
                continue;
            }
            let image = tx - n * (2.0 * s_tx);
            let lambda = s_tx / (s_tx + s_rx);
            let q = image + (rx - image) * lambda;
            if !tri.contains_coplanar(q) {
                continue;
            }
            let length = (rx - image).norm();
            if best.is_none_or(|(_, _, l)| length < l) {
                best = Some((q, fi, length));
            }
        }
        best
    }

    /// All candidate paths, including occluded ones flagged `valid = false`.
    pub fn candidate_paths(&self, tx: Vec3, rx: Vec3) -> Result<Vec<PathGeometry>> {
        if tx == rx {
            return Err(Error::invalid("transmitter and receiver coincide"));
        }
        let mut out = Vec::with_capacity(self.scatterers.len() + 1);
        let los = rx - tx;
        out.push(PathGeometry {
            path_id: LOS_PATH_ID,
            kind: PathKind::LoS,
            delay: los.norm() / SPEED_OF_LIGHT,
            angles: path_angles(los, -los)?,
            bounce: None,
            valid: !self.segment_blocked(tx, rx, None),
        });
        for (si, sc) in self.scatterers.iter().enumerate() {
            if !sc.reflective {
                continue;
            }
            let Some((q, fi, _)) = self.reflection(si, tx, rx) else {
                continue;
            };
            let d_tx = q - tx;
            let d_rx = q - rx;
            let valid = !self.segment_blocked(tx, q, Some((si, fi)))
                && !self.segment_blocked(q, rx, Some((si, fi)));
            out.push(PathGeometry {
                path_id: nlos_path_id(si),
                kind: PathKind::NLoS,
                delay: (d_tx.norm() + d_rx.norm()) / SPEED_OF_LIGHT,
                angles: path_angles(d_tx, d_rx)?,
                bounce: Some(q),
                valid,
            });
        }
        Ok(out)
    }

    /// Unoccluded paths between `tx` and `rx`; empty when everything is blocked.
    pub fn enumerate_paths(&self, tx: Vec3, rx: Vec3) -> Result<Vec<PathGeometry>> {
        let mut paths = self.candidate_paths(tx, rx)?;
        paths.retain(|p| p.valid);
        Ok(paths)
    }
}

/// Mean path angles from the departure vector (Tx toward first hop) and the
/// arrival vector (Rx toward last hop).
///
/// Azimuth uses the four-quadrant arctangent, elevation keeps its sign.
pub fn path_angles(departure: Vec3, arrival: Vec3) -> Result<AngleSet> {
    if departure.norm() == 0.0 || arrival.norm() == 0.0 {
        return Err(Error::invalid("zero-length travel vector"));
    }
    let (aaod, eaod) = direction_angles(departure);
    let (aaoa, eaoa) = direction_angles(arrival);
    Ok(AngleSet {
        aaod,
        eaod,
        aaoa,
        eaoa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::spherical_unit;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit_tri() -> Triangle {
        Triangle::new(Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, -1.0, 0.0), Vec3::new(0.0, 1.0, 0.0))
    }

    #[test]
    fn centroid_shot_hits() {
        let hit = ray_triangle_intersect(Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 0.0, 1.0), &unit_tri()).unwrap();
        assert_abs_diff_eq!(hit.t, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn parallel_ray_misses() {
        let hit = ray_triangle_intersect(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0), &unit_tri());
        assert!(hit.is_none());
    }

    #[test]
    fn edge_graze_counts_as_hit() {
        let tri = Triangle::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        // (0.5, 0.5) sits on the hypotenuse: u + v = 1
        let hit = ray_triangle_intersect(Vec3::new(0.5, 0.5, -2.0), Vec3::new(0.0, 0.0, 1.0), &tri).unwrap();
        assert_abs_diff_eq!(hit.u + hit.v, 1.0, epsilon = 1e-15);
        assert!(ray_triangle_intersect(Vec3::new(0.0, 0.3, -2.0), Vec3::new(0.0, 0.0, 1.0), &tri).is_some());
        assert!(ray_triangle_intersect(Vec3::new(0.5, 0.5001, -2.0), Vec3::new(0.0, 0.0, 1.0), &tri).is_none());
    }

    #[test]
    fn behind_origin_is_a_miss() {
        let hit = ray_triangle_intersect(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0), &unit_tri());
        assert!(hit.is_none());
    }

    #[test]
    fn free_space_los_delay() {
        let paths = Scene::free_space()
            .enumerate_paths(Vec3::ZERO, Vec3::new(299.792458, 0.0, 0.0))
            .unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].kind, PathKind::LoS);
        assert_abs_diff_eq!(paths[0].delay, 1e-6, epsilon = 1e-18);
    }

    #[test]
    fn ground_bounce_is_mirror_symmetric() {
        let scene = Scene {
            scatterers: vec![Scatterer::ground(0.0, 100.0)],
            obstacles: vec![],
        };
        let paths = scene.enumerate_paths(Vec3::new(0.0, 0.0, 10.0), Vec3::new(10.0, 0.0, 10.0)).unwrap();
        assert_eq!(paths.len(), 2);
        let nlos = &paths[1];
        let q = nlos.bounce.unwrap();
        assert!((q - Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-9);
        assert_abs_diff_eq!(nlos.delay, 2.0 * 125f64.sqrt() / SPEED_OF_LIGHT, epsilon = 1e-18);
        assert!(nlos.delay >= paths[0].delay);
    }

    #[test]
    fn wall_blocks_los() {
        let wall = Scatterer::block("wall", Vec3::new(4.0, -50.0, 0.0), Vec3::new(6.0, 50.0, 50.0), false);
        let scene = Scene {
            scatterers: vec![wall],
            obstacles: vec![],
        };
        let paths = scene.candidate_paths(Vec3::new(0.0, 0.0, 10.0), Vec3::new(10.0, 0.0, 10.0)).unwrap();
        assert!(!paths[0].valid);
        assert!(scene.enumerate_paths(Vec3::new(0.0, 0.0, 10.0), Vec3::new(10.0, 0.0, 10.0)).unwrap().is_empty());
    }

    #[test]
    fn obstacle_triangle_blocks() {
        let scene = Scene {
            scatterers: vec![],
            obstacles: vec![Triangle::new(Vec3::new(5.0, -5.0, -5.0), Vec3::new(5.0, 5.0, -5.0), Vec3::new(5.0, 0.0, 20.0))],
        };
        assert!(scene.enumerate_paths(Vec3::ZERO, Vec3::new(10.0, 0.0, 0.0)).unwrap().is_empty());
    }

    #[test]
    fn path_angle_examples() {
        let a = path_angles(Vec3::new(1.0, 1.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(a.aaod, PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.eaod, 0.0);
        assert_abs_diff_eq!(a.aaoa, PI, epsilon = 1e-15);
        let a = path_angles(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -3.0)).unwrap();
        assert_abs_diff_eq!(a.eaod, PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.eaoa, -PI / 2.0, epsilon = 1e-15);
        assert!(path_angles(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn degenerate_triangles_rejected() {
        let flat = Triangle::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0));
        let scene = Scene { scatterers: vec![], obstacles: vec![flat] };
        assert!(scene.validate().is_err());
    }

    #[test]
    fn shortest_facet_wins() {
        // Two parallel reflective walls in one scatterer; the nearer one must be chosen.
        let near = Triangle::new(Vec3::new(-50.0, 5.0, -50.0), Vec3::new(50.0, 5.0, -50.0), Vec3::new(0.0, 5.0, 50.0));
        let far = Triangle::new(Vec3::new(-50.0, 9.0, -50.0), Vec3::new(50.0, 9.0, -50.0), Vec3::new(0.0, 9.0, 50.0));
        let sc = Scatterer::new("pair", vec![far, near], true);
        let scene = Scene { scatterers: vec![sc], obstacles: vec![] };
        let cand = scene.candidate_paths(Vec3::new(-3.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 0.0)).unwrap();
        let q = cand[1].bounce.unwrap();
        assert_abs_diff_eq!(q.y, 5.0, epsilon = 1e-9);
    }

    fn street() -> Scene {
        Scene {
            scatterers: vec![
                Scatterer::ground(0.0, 500.0),
                Scatterer::block("a", Vec3::new(-40.0, 20.0, 0.0), Vec3::new(40.0, 40.0, 30.0), true),
                Scatterer::block("b", Vec3::new(-10.0, -40.0, 0.0), Vec3::new(60.0, -25.0, 45.0), true),
                Scatterer::block("c", Vec3::new(70.0, -20.0, 0.0), Vec3::new(90.0, 20.0, 25.0), true),
            ],
            obstacles: vec![],
        }
    }

    proptest! {
        #[test]
        fn nlos_never_shorter_than_los(
            tx in prop::array::uniform3(-150.0f64..150.0), rx in prop::array::uniform3(-150.0f64..150.0),
        ) {
            let tx = Vec3::new(tx[0], tx[1], 50.0 + tx[2].abs());
            let rx = Vec3::new(rx[0], rx[1], 1.5 + rx[2].abs() / 50.0);
            let cand = street().candidate_paths(tx, rx).unwrap();
            let los = cand[0].delay;
            for p in cand.iter().skip(1) {
                prop_assert!(p.delay >= los - 1e-12);
                // specular: equal angles against the facet plane
                let q = p.bounce.unwrap();
                let a = (tx - q).normalized().unwrap();
                let b = (rx - q).normalized().unwrap();
                let sc = &street().scatterers[(p.path_id - 2) as usize];
                let n = sc.facets.iter().find(|f| {
                    (q - f.0[0]).dot(f.normal()).abs() < 1e-6 && f.contains_coplanar(q)
                }).unwrap().normal();
                prop_assert!((a.dot(n).abs().acos() - b.dot(n).abs().acos()).abs() < 1e-9);
            }
        }

        #[test]
        fn swapping_terminals_preserves_paths(
            tx in prop::array::uniform3(-150.0f64..150.0), rx in prop::array::uniform3(-150.0f64..150.0),
        ) {
            let tx = Vec3::new(tx[0], tx[1], 40.0 + tx[2].abs());
            let rx = Vec3::new(rx[0], rx[1], 2.0);
            let scene = street();
            let fwd = scene.enumerate_paths(tx, rx).unwrap();
            let back = scene.enumerate_paths(rx, tx).unwrap();
            prop_assert_eq!(fwd.len(), back.len());
            for (f, b) in fwd.iter().zip(&back) {
                prop_assert_eq!(f.path_id, b.path_id);
                prop_assert!((f.delay - b.delay).abs() < 1e-15);
                prop_assert!((f.angles.aaod - b.angles.aaoa).abs() < 1e-9);
                prop_assert!((f.angles.eaod - b.angles.eaoa).abs() < 1e-9);
            }
        }

        #[test]
        fn path_angles_round_trip(d in prop::array::uniform3(-100.0f64..100.0)) {
            let d = Vec3::from(d);
            prop_assume!(d.norm() > 1e-6);
            let a = path_angles(d, d).unwrap();
            let back = spherical_unit(a.aaod, a.eaod);
            prop_assert!((back.dot(d) / d.norm() - 1.0).abs() < 1e-9);
        }
    }
}
