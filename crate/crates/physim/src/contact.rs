use crate::body::Body;
use crate::math::{vec2, Rect, Vec2};

/// Contact spring stiffness (N per metre of penetration).
pub const K_P: f64 = 500.0;
/// Contact damping (N per metre/second of penetration rate).
pub const K_D: f64 = 10.0;
/// Viscous tangential (friction) damping at contact points.
pub const C_FRICTION: f64 = 2.0;
/// Penetration beyond this means the integrator stepped through geometry.
pub const MAX_PENETRATION: f64 = 0.05;

/// One penetrating corner. `normal` is the direction the penalty force
/// pushes the dynamic body; `point` is where it acts.
#[derive(Debug, Clone, Copy)]
pub struct Contact {
    pub point: Vec2,
    pub normal: Vec2,
    pub pen: f64,
}

/// Normal force magnitude: spring + damper, never adhesive.
pub fn penalty_force(pen: f64, rate: f64) -> f64 {
    (K_P * pen + K_D * rate).max(0.0)
}

/// Full contact force on the dynamic body for one contact: normal penalty
/// plus viscous tangential damping of the contact-point velocity.
pub fn contact_force(body: &Body, c: &Contact) -> Vec2 {
    let v = body.point_velocity(c.point);
    let rate = -v.dot(c.normal);
    let fn_mag = penalty_force(c.pen, rate);
    if fn_mag == 0.0 {
        return Vec2::ZERO;
    }
    let v_t = v - c.normal * v.dot(c.normal);
    c.normal * fn_mag - v_t * C_FRICTION
}

/// Corner-based overlap test between a (possibly rotated) dynamic body and
/// an axis-aligned static rect, both ways: dynamic corners inside the static
/// rect and static corners inside the dynamic body. Each penetrating corner
/// yields one contact along its minimum-penetration face.
pub fn find_contacts(body: &Body, r: &Rect, out: &mut Vec<Contact>) {
    for p in body.corners() {
        if r.contains(p) {
            let d = p - r.center;
            let faces = [
                (r.half.x - d.x, vec2(1.0, 0.0)),
                (r.half.x + d.x, vec2(-1.0, 0.0)),
                (r.half.y - d.y, vec2(0.0, 1.0)),
                (r.half.y + d.y, vec2(0.0, -1.0)),
            ];
            let (pen, normal) =
                faces.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
            out.push(Contact { point: p, normal, pen });
        }
    }
    for q in r.corners() {
        let l = body.to_local(q);
        if l.x.abs() <= body.half.x && l.y.abs() <= body.half.y {
            let faces = [
                (body.half.x - l.x, vec2(1.0, 0.0)),
                (body.half.x + l.x, vec2(-1.0, 0.0)),
                (body.half.y - l.y, vec2(0.0, 1.0)),
                (body.half.y + l.y, vec2(0.0, -1.0)),
            ];
            let (pen, local_n) =
                faces.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
            // Push the body away from the corner: opposite its own face normal.
            let normal = -local_n.rotated(body.angle);
            out.push(Contact { point: q, normal, pen });
        }
    }
}
