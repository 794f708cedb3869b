//! Planar geometry shared by the grid, generator and evaluation modules.
//!
//! Two frames are in play. The *world frame* is a fixed (x, y) plane in which
//! scenario tracks live. The *sensor frame* is attached to the ego vehicle:
//! Z points forward along the ego heading, X points to the left. Grids are
//! rasterized in the sensor frame.

/// A point in the fixed world frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
}

impl WorldPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// A point in the ego sensor frame: `x` lateral (left positive), `z` forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPoint {
    pub x: f64,
    pub z: f64,
}

impl SensorPoint {
    pub fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }
}

/// World-frame pose of an agent: position plus heading in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> WorldPoint {
        WorldPoint::new(self.x, self.y)
    }
}

/// Projects a world point into the sensor frame of `ego`.
pub fn world_to_sensor(p: WorldPoint, ego: &Pose) -> SensorPoint {
    let dx = p.x - ego.x;
    let dy = p.y - ego.y;
    let (sin_h, cos_h) = ego.heading.sin_cos();
    SensorPoint {
        x: -dx * sin_h + dy * cos_h,
        z: dx * cos_h + dy * sin_h,
    }
}

/// Inverse of [`world_to_sensor`].
pub fn sensor_to_world(p: SensorPoint, ego: &Pose) -> WorldPoint {
    let (sin_h, cos_h) = ego.heading.sin_cos();
    WorldPoint {
        x: ego.x + p.z * cos_h - p.x * sin_h,
        y: ego.y + p.z * sin_h + p.x * cos_h,
    }
}

/// Heading of a world direction expressed in the sensor frame of `ego`,
/// measured from the Z axis toward X.
pub fn heading_in_sensor(world_heading: f64, ego: &Pose) -> f64 {
    world_heading - ego.heading
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensor_round_trip() {
        let ego = Pose::new(3.0, -2.0, 0.7);
        let p = WorldPoint::new(10.0, 4.0);
        let back = sensor_to_world(world_to_sensor(p, &ego), &ego);
        assert!((back.x - p.x).abs() < 1e-12);
        assert!((back.y - p.y).abs() < 1e-12);
    }

    #[test]
    fn forward_point_is_on_z_axis() {
        let ego = Pose::new(1.0, 1.0, std::f64::consts::FRAC_PI_2);
        // One meter ahead of an ego facing +y.
        let p = WorldPoint::new(1.0, 2.0);
        let s = world_to_sensor(p, &ego);
        assert!(s.x.abs() < 1e-12);
        assert!((s.z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn left_of_ego_has_positive_x() {
        let ego = Pose::new(0.0, 0.0, 0.0);
        let s = world_to_sensor(WorldPoint::new(0.0, 1.0), &ego);
        assert!(s.x > 0.0);
        assert!(s.z.abs() < 1e-12);
    }
}
