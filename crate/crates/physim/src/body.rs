use crate::math::{vec2, Vec2};

/// A rigid rectangular body. `inertia` is stored explicitly rather than
/// derived from the extents: the gripped bodies model the gripper collar as
/// extra rotational inertia.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub pos: Vec2,
    pub angle: f64,
    pub vel: Vec2,
    pub omega: f64,
    pub half: Vec2,
    pub mass: f64,
    pub inertia: f64,
}

impl Body {
    pub fn at_rest(pos: Vec2, angle: f64, half: Vec2, mass: f64, inertia: f64) -> Body {
        Body { pos, angle, vel: Vec2::ZERO, omega: 0.0, half, mass, inertia }
    }

    pub fn to_world(&self, local: Vec2) -> Vec2 {
        self.pos + local.rotated(self.angle)
    }

    pub fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.pos).rotated(-self.angle)
    }

    /// Velocity of the material point currently at world position `p`.
    pub fn point_velocity(&self, p: Vec2) -> Vec2 {
        self.vel + (p - self.pos).perp() * self.omega
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let h = self.half;
        [
            self.to_world(vec2(h.x, h.y)),
            self.to_world(vec2(-h.x, h.y)),
            self.to_world(vec2(-h.x, -h.y)),
            self.to_world(vec2(h.x, -h.y)),
        ]
    }

    pub fn contains(&self, world: Vec2) -> bool {
        let l = self.to_local(world);
        l.x.abs() <= self.half.x && l.y.abs() <= self.half.y
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.vel.dot(self.vel) + 0.5 * self.inertia * self.omega * self.omega
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.angle.is_finite() && self.vel.is_finite() && self.omega.is_finite()
    }
}

/// Per-step force/torque accumulator for one body.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accum {
    pub force: Vec2,
    pub torque: f64,
}

impl Accum {
    /// Apply a force at a world point, accumulating the induced torque about
    /// the center of mass.
    pub fn apply_at(&mut self, body: &Body, point: Vec2, force: Vec2) {
        self.force = self.force + force;
        self.torque += (point - body.pos).cross(force);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn world_local_round_trip() {
        let b = Body::at_rest(vec2(1.0, 2.0), 0.7, vec2(0.1, 0.2), 1.0, 0.1);
        let p = vec2(0.05, -0.1);
        let back = b.to_local(b.to_world(p));
        assert!((back - p).norm() < 1e-15);
    }

    #[test]
    fn point_velocity_of_spinning_body() {
        let mut b = Body::at_rest(Vec2::ZERO, 0.0, vec2(1.0, 1.0), 1.0, 1.0);
        b.omega = 2.0;
        // Point at (1, 0) on a body spinning at 2 rad/s moves at (0, 2).
        let v = b.point_velocity(vec2(1.0, 0.0));
        assert!((v - vec2(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn offset_force_produces_torque() {
        let b = Body::at_rest(Vec2::ZERO, 0.0, vec2(1.0, 1.0), 1.0, 1.0);
        let mut acc = Accum::default();
        acc.apply_at(&b, vec2(1.0, 0.0), vec2(0.0, 3.0));
        assert_eq!(acc.torque, 3.0);
        assert_eq!(acc.force, vec2(0.0, 3.0));
    }
}
