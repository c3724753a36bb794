//! Network geometry and device mobility.
//!
//! Devices live in a rectangular factory footprint. One uplink and one
//! downlink device act as group heads following a random-waypoint process;
//! the remaining devices of each side track their head with per-step speed
//! and angle deviations (reference-point group mobility). Reflecting
//! surfaces and the access point are static for the lifetime of a run.
//!
//! All randomness flows through the caller's RNG, so trajectories and
//! placements replay bit-exactly from a seed.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioError {
    /// The sampling area has zero or negative extent.
    ZeroArea,
    /// A device or surface count is zero.
    NoDevices,
    /// Mobility parameters violate their invariants.
    InvalidMobility,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::ZeroArea => write!(f, "sampling area must have positive extent"),
            ScenarioError::NoDevices => write!(f, "device and surface counts must be at least 1"),
            ScenarioError::InvalidMobility => write!(f, "mobility parameters out of range"),
        }
    }
}

impl core::error::Error for ScenarioError {}

/// A position in the 3D factory coordinate system, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Euclidean distance between two points.
pub fn distance(a: &Point3, b: &Point3) -> f64 {
    a.distance(b)
}

/// Group mobility parameters.
///
/// Velocities are in meters per coherence-interval slot; one mobility step
/// corresponds to one slot. `alpha_a` and `alpha_s` are the half-widths of
/// the per-member, per-step angle and speed deviation draws, both below 1
/// in magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub v_min: f64,
    pub v_max: f64,
    /// Moving slots between successive head redraws. A redraw consumes one
    /// slot (the head pauses while it picks a new leg).
    pub pause_slots: u32,
    pub alpha_a: f64,
    pub alpha_s: f64,
    /// Footprint `(width, height)` the devices are confined to.
    pub area: (f64, f64),
}

impl MobilityParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let ok = self.v_min >= 0.0
            && self.v_max >= self.v_min
            && self.alpha_a.abs() < 1.0
            && self.alpha_s.abs() < 1.0
            && self.area.0 > 0.0
            && self.area.1 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ScenarioError::InvalidMobility)
        }
    }
}

/// State of a random-waypoint group head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadState {
    pub position: Point3,
    /// Meters per slot, within `[v_min, v_max]` after the first redraw.
    pub velocity: f64,
    /// Heading in radians, normalized to `[0, 2*pi)`.
    pub direction: f64,
    /// Slots left before the head redraws velocity and direction.
    pub slots_until_repick: u32,
}

impl HeadState {
    /// A head at rest that redraws on its first step.
    pub fn at_rest(position: Point3) -> Self {
        Self {
            position,
            velocity: 0.0,
            direction: 0.0,
            slots_until_repick: 0,
        }
    }

    /// Advance the head by one slot of random-waypoint motion.
    ///
    /// When the repick counter has expired the head pauses for this slot
    /// and memorylessly redraws velocity (uniform in `[v_min, v_max]`) and
    /// direction (uniform in `[0, 2*pi)`). Otherwise it moves one slot along
    /// its heading, reflecting specularly off the area boundary.
    pub fn step<R: Rng + ?Sized>(&self, params: &MobilityParams, rng: &mut R) -> HeadState {
        if self.slots_until_repick == 0 {
            let velocity = rng.random_range(params.v_min..=params.v_max);
            let direction = rng.random_range(0.0..TAU);
            return HeadState {
                position: self.position,
                velocity,
                direction,
                slots_until_repick: params.pause_slots.max(1),
            };
        }
        let (position, direction) =
            advance(self.position, self.direction, self.velocity, params.area);
        HeadState {
            position,
            velocity: self.velocity,
            direction,
            slots_until_repick: self.slots_until_repick - 1,
        }
    }
}

/// Advance one group member by one slot of reference-point group motion.
///
/// The member derives its slot velocity and heading from the head state
/// that applies to this slot: speed `|v_h| + alpha_s * v_max` clamped at
/// zero, heading `phi_h + alpha_a * v_max`, with `alpha_a` then `alpha_s`
/// drawn uniformly from the configured deviation ranges per member per
/// step.
pub fn step_member<R: Rng + ?Sized>(
    head: &HeadState,
    member: Point3,
    params: &MobilityParams,
    rng: &mut R,
) -> Point3 {
    let aa = params.alpha_a.abs();
    let als = params.alpha_s.abs();
    let alpha_a = rng.random_range(-aa..=aa);
    let alpha_s = rng.random_range(-als..=als);
    let speed = (head.velocity.abs() + alpha_s * params.v_max).max(0.0);
    let direction = wrap_angle(head.direction + alpha_a * params.v_max);
    let (position, _) = advance(member, direction, speed, params.area);
    position
}

/// Step a head and its members together for one slot. Members follow the
/// post-step head state, so a freshly drawn leg applies from its first slot.
pub fn step_group<R: Rng + ?Sized>(
    head: &HeadState,
    members: &[Point3],
    params: &MobilityParams,
    rng: &mut R,
) -> (HeadState, Vec<Point3>) {
    let next = head.step(params, rng);
    let moved = members
        .iter()
        .map(|&m| step_member(&next, m, params, rng))
        .collect();
    (next, moved)
}

/// Move `dist` meters from `pos` along `direction`, reflecting off the
/// rectangle `[0, w] x [0, h]`. Returns the folded position and the heading
/// after any bounces.
fn advance(pos: Point3, direction: f64, dist: f64, (w, h): (f64, f64)) -> (Point3, f64) {
    let raw_x = pos.x + dist * direction.cos();
    let raw_y = pos.y + dist * direction.sin();
    let (x, flip_x) = fold(raw_x, w);
    let (y, flip_y) = fold(raw_y, h);
    let mut dir = direction;
    if flip_x {
        dir = core::f64::consts::PI - dir;
    }
    if flip_y {
        dir = -dir;
    }
    (Point3::new(x, y, pos.z), wrap_angle(dir))
}

/// Fold a coordinate into `[0, len]` by specular reflection. The flag
/// reports whether the fold left the coordinate on a reversed leg.
fn fold(v: f64, len: f64) -> (f64, bool) {
    let period = 2.0 * len;
    let mut t = v % period;
    if t < 0.0 {
        t += period;
    }
    if t <= len {
        (t, false)
    } else {
        (period - t, true)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r < 0.0 {
        r += TAU;
    }
    r
}

/// Static placement of every node in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub uplink_devices: Vec<Point3>,
    pub downlink_devices: Vec<Point3>,
    pub uplink_irs: Vec<Point3>,
    pub downlink_irs: Vec<Point3>,
    pub ap: Point3,
}

/// Placement configuration. Coordinate ranges follow the reference layout:
/// uplink nodes on the left half of the floor, downlink nodes on the right,
/// surfaces inset from the outer walls, and the access point at the center.
/// Ranges scale proportionally with the footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyConfig {
    pub area: (f64, f64),
    pub uplink_devices: usize,
    pub downlink_devices: usize,
    pub uplink_irs: usize,
    pub downlink_irs: usize,
    pub device_height: f64,
    pub irs_height: f64,
    pub ap_height: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            area: (40.0, 40.0),
            uplink_devices: 10,
            downlink_devices: 10,
            uplink_irs: 4,
            downlink_irs: 4,
            device_height: 1.0,
            irs_height: 10.0,
            ap_height: 10.0,
        }
    }
}

/// Draw a topology from the configured placement ranges.
///
/// With the reference 40 m x 40 m footprint the draws are: uplink devices
/// `x ~ U(0, 20)`, downlink devices `x ~ U(20, 40)`, uplink surfaces
/// `x ~ U(5, 20)`, downlink surfaces `x ~ U(20, 35)`, all with
/// `y ~ U(0, 40)`; other footprints scale these ranges proportionally.
pub fn sample_topology<R: Rng + ?Sized>(
    config: &TopologyConfig,
    rng: &mut R,
) -> Result<Topology, ScenarioError> {
    let (w, h) = config.area;
    if !(w > 0.0) || !(h > 0.0) {
        return Err(ScenarioError::ZeroArea);
    }
    if config.uplink_devices == 0
        || config.downlink_devices == 0
        || config.uplink_irs == 0
        || config.downlink_irs == 0
    {
        return Err(ScenarioError::NoDevices);
    }

    let draw = |n: usize, x_lo: f64, x_hi: f64, z: f64, rng: &mut R| -> Vec<Point3> {
        (0..n)
            .map(|_| {
                let x = rng.random_range(x_lo..x_hi);
                let y = rng.random_range(0.0..h);
                Point3::new(x, y, z)
            })
            .collect()
    };

    let uplink_devices = draw(
        config.uplink_devices,
        0.0,
        0.5 * w,
        config.device_height,
        rng,
    );
    let downlink_devices = draw(
        config.downlink_devices,
        0.5 * w,
        w,
        config.device_height,
        rng,
    );
    let uplink_irs = draw(config.uplink_irs, 0.125 * w, 0.5 * w, config.irs_height, rng);
    let downlink_irs = draw(
        config.downlink_irs,
        0.5 * w,
        0.875 * w,
        config.irs_height,
        rng,
    );
    Ok(Topology {
        uplink_devices,
        downlink_devices,
        uplink_irs,
        downlink_irs,
        ap: Point3::new(0.5 * w, 0.5 * h, config.ap_height),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> MobilityParams {
        MobilityParams {
            v_min: 0.5,
            v_max: 2.0,
            pause_slots: 5,
            alpha_a: 0.2,
            alpha_s: 0.2,
            area: (40.0, 40.0),
        }
    }

    #[test]
    fn distance_identity_and_pythagorean() {
        let p = Point3::new(3.5, -0.0, 7.25);
        assert_eq!(p.distance(&p), 0.0);
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(3.0, 4.0, 0.0);
        assert_eq!(a.distance(&b), 5.0);
        // Access point above a device at the reference heights.
        let ap = Point3::new(20.0, 20.0, 10.0);
        let dev = Point3::new(20.0, 20.0, 1.0);
        assert_eq!(ap.distance(&dev), 9.0);
    }

    #[test]
    fn zero_velocity_leaves_position_unchanged() {
        let head = HeadState {
            position: Point3::new(10.0, 10.0, 1.0),
            velocity: 0.0,
            direction: 1.0,
            slots_until_repick: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = head.step(&params(), &mut rng);
        assert_eq!(next.position, head.position);
        assert_eq!(next.slots_until_repick, 2);
    }

    #[test]
    fn eastbound_step_moves_along_x() {
        let head = HeadState {
            position: Point3::new(10.0, 10.0, 1.0),
            velocity: 1.5,
            direction: 0.0,
            slots_until_repick: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = head.step(&params(), &mut rng);
        assert!((next.position.x - 11.5).abs() < 1e-12);
        assert!((next.position.y - 10.0).abs() < 1e-12);
    }

    #[test]
    fn repick_draws_within_bounds_and_pauses() {
        let head = HeadState::at_rest(Point3::new(5.0, 5.0, 1.0));
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let next = head.step(&p, &mut rng);
        assert_eq!(next.position, head.position);
        assert!(next.velocity >= p.v_min && next.velocity <= p.v_max);
        assert!(next.direction >= 0.0 && next.direction < TAU);
        assert_eq!(next.slots_until_repick, p.pause_slots);
    }

    #[test]
    fn boundary_reflection_keeps_position_inside() {
        // Aim straight at the near wall with a long stride.
        let head = HeadState {
            position: Point3::new(1.0, 20.0, 1.0),
            velocity: 5.0,
            direction: core::f64::consts::PI, // toward x = 0
            slots_until_repick: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = head.step(&params(), &mut rng);
        assert!((next.position.x - 4.0).abs() < 1e-12);
        // Heading now points back into the area.
        assert!(next.direction.cos() > 0.0);
    }

    #[test]
    fn member_with_zero_deviation_tracks_head() {
        let mut p = params();
        p.alpha_a = 0.0;
        p.alpha_s = 0.0;
        let head = HeadState {
            position: Point3::new(10.0, 10.0, 1.0),
            velocity: 1.0,
            direction: 0.7,
            slots_until_repick: 4,
        };
        let member = Point3::new(12.0, 9.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let moved = step_member(&head, member, &p, &mut rng);
        assert!((moved.x - (member.x + 0.7f64.cos())).abs() < 1e-12);
        assert!((moved.y - (member.y + 0.7f64.sin())).abs() < 1e-12);
    }

    #[test]
    fn member_speed_clamps_at_zero() {
        // alpha_s at its lower edge cancels a head moving at v_max.
        let p = params();
        let head = HeadState {
            position: Point3::new(10.0, 10.0, 1.0),
            velocity: p.v_max,
            direction: 0.0,
            slots_until_repick: 4,
        };
        let speed = (head.velocity.abs() + (-1.0) * p.v_max).max(0.0);
        assert_eq!(speed, 0.0);
    }

    #[test]
    fn sample_topology_respects_ranges_and_determinism() {
        let cfg = TopologyConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let topo = sample_topology(&cfg, &mut rng).unwrap();
        for p in &topo.uplink_devices {
            assert!(p.x >= 0.0 && p.x <= 20.0 && p.y >= 0.0 && p.y <= 40.0);
            assert_eq!(p.z, 1.0);
        }
        for p in &topo.downlink_devices {
            assert!(p.x >= 20.0 && p.x <= 40.0);
        }
        for p in &topo.uplink_irs {
            assert!(p.x >= 5.0 && p.x <= 20.0);
            assert_eq!(p.z, 10.0);
        }
        for p in &topo.downlink_irs {
            assert!(p.x >= 20.0 && p.x <= 35.0);
        }
        assert_eq!(topo.ap, Point3::new(20.0, 20.0, 10.0));

        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let topo2 = sample_topology(&cfg, &mut rng2).unwrap();
        assert_eq!(topo, topo2);
    }

    #[test]
    fn sample_topology_rejects_zero_area() {
        let cfg = TopologyConfig {
            area: (0.0, 40.0),
            ..TopologyConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            sample_topology(&cfg, &mut rng).unwrap_err(),
            ScenarioError::ZeroArea
        );
    }
}
