//! Vectors, rotations, trajectories and the phase terms of a ray phasor.
//!
//! Direction conventions: a departure direction points from the transmitter
//! toward the next hop, an arrival direction points from the receiver back
//! toward the previous hop. With that orientation a terminal moving along the
//! direction of its ray sees a positive Doppler shift.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength in meters.
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

/// Ray direction angles at both ends of a path (radians).
///
/// Azimuths live in (-pi, pi], elevations in [-pi/2, pi/2].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleSet {
    pub aaod: f64,
    pub eaod: f64,
    pub aaoa: f64,
    pub eaoa: f64,
}

impl AngleSet {
    pub fn departure_unit(&self) -> Vec3 {
        spherical_unit(self.aaod, self.eaod)
    }

    pub fn arrival_unit(&self) -> Vec3 {
        spherical_unit(self.aaoa, self.eaoa)
    }

    /// Adds angular offsets and re-normalizes azimuths and elevations.
    pub fn offset(&self, departure: (f64, f64), arrival: (f64, f64)) -> AngleSet {
        let (aaod, eaod) = normalize_direction(self.aaod + departure.0, self.eaod + departure.1);
        let (aaoa, eaoa) = normalize_direction(self.aaoa + arrival.0, self.eaoa + arrival.1);
        AngleSet {
            aaod,
            eaod,
            aaoa,
            eaoa,
        }
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a.rem_euclid(two_pi);
    if w > PI {
        w -= two_pi;
    }
    w
}

/// Maps an (azimuth, elevation) pair that may have left its range back onto
/// the same direction with azimuth in (-pi, pi] and elevation in [-pi/2, pi/2].
pub fn normalize_direction(azimuth: f64, elevation: f64) -> (f64, f64) {
    let mut el = wrap_angle(elevation);
    let mut az = azimuth;
    if el > PI / 2.0 {
        el = PI - el;
        az += PI;
    } else if el < -PI / 2.0 {
        el = -PI - el;
        az += PI;
    }
    (wrap_angle(az), el)
}

/// Unit vector `[cos(el) cos(az), cos(el) sin(az), sin(el)]`.
pub fn spherical_unit(azimuth: f64, elevation: f64) -> Vec3 {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

/// Azimuth and elevation of a direction; the zero vector maps to (0, 0).
pub fn direction_angles(v: Vec3) -> (f64, f64) {
    let n = v.norm();
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let az = if v.x == 0.0 && v.y == 0.0 {
        0.0
    } else {
        v.y.atan2(v.x)
    };
    let el = (v.z / n).clamp(-1.0, 1.0).asin();
    (az, el)
}

/// Body-to-world rotation induced by the direction of motion.
pub fn rotation_from_velocity(azimuth: f64, elevation: f64) -> Mat3 {
    let (sa, ca) = azimuth.sin_cos();
    let (sb, cb) = elevation.sin_cos();
    Mat3([
        [ca * cb, -sa, -ca * sb],
        [sa * cb, ca, -sa * sb],
        [sb, 0.0, cb],
    ])
}

/// Attitude rotation in its conventional three-angle form.
///
/// The argument order is `(omega, phi, gamma)`; structurally `omega` turns
/// about z, `phi` about y and `gamma` about x. [`Attitude`] carries the
/// naming used for flight angles (yaw = phi, pitch = gamma, roll = omega).
pub fn rotation_from_attitude(omega: f64, phi: f64, gamma: f64) -> Mat3 {
    let (sw, cw) = omega.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    Mat3([
        [cw * cp, cw * sp * sg - sw * cg, cw * sp * cg + sw * sg],
        [sw * cp, sw * sp * sg + cw * cg, sw * sp * cg - cw * sg],
        [-sp, cp * sg, cp * cg],
    ])
}

/// UAV attitude angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Attitude {
    /// phi
    pub yaw: f64,
    /// gamma
    pub pitch: f64,
    /// omega
    pub roll: f64,
}

impl Attitude {
    pub fn rotation(&self) -> Mat3 {
        rotation_from_attitude(self.roll, self.yaw, self.pitch)
    }

    pub fn is_zero(&self) -> bool {
        self.yaw == 0.0 && self.pitch == 0.0 && self.roll == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttitudeSample {
    pub t: f64,
    pub attitude: Attitude,
}

/// Piecewise-linear terminal trajectory with an optional attitude profile.
///
/// A single waypoint describes a stationary terminal valid at any time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
    attitude: Vec<AttitudeSample>,
}

fn strictly_increasing(times: impl Iterator<Item = f64>) -> bool {
    let mut prev = f64::NEG_INFINITY;
    for t in times {
        if !(t.is_finite() && t > prev) {
            return false;
        }
        prev = t;
    }
    true
}

impl Trajectory {
    pub fn new(waypoints: Vec<Waypoint>, attitude: Vec<AttitudeSample>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::invalid("trajectory needs at least one waypoint"));
        }
        if !strictly_increasing(waypoints.iter().map(|w| w.t)) {
            return Err(Error::invalid("waypoint times must be finite and strictly increasing"));
        }
        if waypoints.iter().any(|w| !w.position.is_finite()) {
            return Err(Error::invalid("waypoint positions must be finite"));
        }
        if !strictly_increasing(attitude.iter().map(|a| a.t)) {
            return Err(Error::invalid("attitude times must be finite and strictly increasing"));
        }
        Ok(Self {
            waypoints,
            attitude,
        })
    }

    pub fn stationary(position: Vec3) -> Self {
        Self {
            waypoints: vec![Waypoint { t: 0.0, position }],
            attitude: Vec::new(),
        }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn attitude_profile(&self) -> &[AttitudeSample] {
        &self.attitude
    }

    /// Same path with the attitude profile dropped.
    pub fn without_attitude(&self) -> Self {
        Self {
            waypoints: self.waypoints.clone(),
            attitude: Vec::new(),
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.waypoints.len() == 1
    }

    /// Time span covered by the waypoints.
    pub fn span(&self) -> (f64, f64) {
        if self.is_stationary() {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        (self.waypoints[0].t, self.waypoints[self.waypoints.len() - 1].t)
    }

    fn check(&self, t: f64) -> Result<()> {
        let (start, end) = self.span();
        if !(t >= start && t <= end) {
            return Err(Error::OutOfRange { t, start, end });
        }
        Ok(())
    }

    /// Index of the segment `[w_i, w_{i+1}]` used at time `t` (right-continuous).
    fn segment(&self, t: f64) -> usize {
        let last = self.waypoints.len() - 2;
        let idx = self.waypoints.partition_point(|w| w.t <= t);
        idx.saturating_sub(1).min(last)
    }

    pub fn position_at(&self, t: f64) -> Result<Vec3> {
        self.check(t)?;
        if self.is_stationary() {
            return Ok(self.waypoints[0].position);
        }
        let i = self.segment(t);
        let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
        let s = (t - a.t) / (b.t - a.t);
        Ok(a.position + (b.position - a.position) * s)
    }

    /// Segment slope at `t`; at an interior waypoint the outgoing segment wins.
    pub fn velocity_at(&self, t: f64) -> Result<Vec3> {
        self.check(t)?;
        if self.is_stationary() {
            return Ok(Vec3::ZERO);
        }
        let i = self.segment(t);
        let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
        Ok((b.position - a.position) * (1.0 / (b.t - a.t)))
    }

    /// Largest segment speed along the trajectory.
    pub fn max_speed(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm() / (w[1].t - w[0].t))
            .fold(0.0, f64::max)
    }

    /// Linearly interpolated attitude, held constant outside the profile.
    pub fn attitude_at(&self, t: f64) -> Attitude {
        let prof = &self.attitude;
        match prof.len() {
            0 => Attitude::default(),
            1 => prof[0].attitude,
            n => {
                if t <= prof[0].t {
                    return prof[0].attitude;
                }
                if t >= prof[n - 1].t {
                    return prof[n - 1].attitude;
                }
                let i = prof.partition_point(|a| a.t <= t) - 1;
                let (a, b) = (prof[i], prof[i + 1]);
                let s = (t - a.t) / (b.t - a.t);
                let lerp = |x: f64, y: f64| x + (y - x) * s;
                Attitude {
                    yaw: lerp(a.attitude.yaw, b.attitude.yaw),
                    pitch: lerp(a.attitude.pitch, b.attitude.pitch),
                    roll: lerp(a.attitude.roll, b.attitude.roll),
                }
            }
        }
    }

    /// Motion-direction rotation at `t` (identity while stationary).
    pub fn velocity_rotation_at(&self, t: f64) -> Result<Mat3> {
        let v = self.velocity_at(t)?;
        if v == Vec3::ZERO {
            return Ok(Mat3::IDENTITY);
        }
        let (az, el) = direction_angles(v);
        Ok(rotation_from_velocity(az, el))
    }

    /// Attitude rotation at `t`; exactly the identity when no profile is set.
    pub fn attitude_rotation_at(&self, t: f64) -> Mat3 {
        if self.attitude.is_empty() {
            Mat3::IDENTITY
        } else {
            self.attitude_at(t).rotation()
        }
    }
}

/// Doppler frequency of one ray, `f0/c (r_tx . v_tx + r_rx . v_rx)`.
pub fn doppler_frequency(angles: &AngleSet, v_tx: Vec3, v_rx: Vec3, carrier_hz: f64) -> f64 {
    carrier_hz / SPEED_OF_LIGHT
        * (angles.departure_unit().dot(v_tx) + angles.arrival_unit().dot(v_rx))
}

/// Upper bound on |Doppler| for the given terminal speeds.
pub fn doppler_bound(carrier_hz: f64, speed_tx: f64, speed_rx: f64) -> f64 {
    carrier_hz * (speed_tx + speed_rx) / SPEED_OF_LIGHT
}

/// Trapezoidal integral of `2 pi f(t)` over a sampled Doppler history.
pub fn movement_phase(times: &[f64], doppler_hz: &[f64]) -> Result<f64> {
    if times.len() != doppler_hz.len() {
        return Err(Error::invalid("times and frequencies differ in length"));
    }
    if !strictly_increasing(times.iter().copied()) {
        return Err(Error::invalid("sample times must be strictly increasing"));
    }
    let mut acc = PhaseIntegrator::default();
    for w in times.windows(2).zip(doppler_hz.windows(2)) {
        let (t, f) = w;
        acc.advance(f[0], f[1], t[1] - t[0]);
    }
    Ok(acc.phase())
}

/// Running trapezoidal accumulator for the movement phase of one ray.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseIntegrator {
    phase: f64,
}

impl PhaseIntegrator {
    pub fn advance(&mut self, f_prev: f64, f_next: f64, dt: f64) {
        self.phase += PI * (f_prev + f_next) * dt;
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// Phase added by antenna element placement on both rotated terminals.
///
/// `(2 pi f0 / c)(r_rx . R_v^rx d_rx + r_tx . R_v^tx R^P d_tx)`
pub fn rotation_phase(
    angles: &AngleSet,
    rv_tx: &Mat3,
    attitude: &Mat3,
    rv_rx: &Mat3,
    d_tx: Vec3,
    d_rx: Vec3,
    carrier_hz: f64,
) -> f64 {
    let k = 2.0 * PI * carrier_hz / SPEED_OF_LIGHT;
    let tx = rv_tx.mul_vec(attitude.mul_vec(d_tx));
    let rx = rv_rx.mul_vec(d_rx);
    k * (angles.arrival_unit().dot(rx) + angles.departure_unit().dot(tx))
}
