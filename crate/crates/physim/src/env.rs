use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::body::{Accum, Body};
use crate::contact::{self, Contact};
use crate::error::PhysimError;
use crate::math::{rect, vec2, Rect, Vec2};

/// Control timestep (100 Hz).
pub const DT: f64 = 0.01;

/// Gripper linear drive gain: force = K_V · (commanded − actual) at the grip point.
pub const K_V: f64 = 2.0;
/// Per-body viscous damping (linear / angular).
pub const DAMP_LIN: f64 = 0.05;
pub const DAMP_ANG: f64 = 0.001;

// Block-insertion geometry. The slot is the gap between the two fixtures:
// x ∈ [-0.065, 0.065], floor at y = 0, fixture tops at y = 0.18.
pub const SLOT_HALF_WIDTH: f64 = 0.065;
pub const SLOT_TOP: f64 = 0.18;
pub const SLOT_DEPTH: f64 = 0.18;
/// Success: inserted at least 80% of the slot depth.
pub const INSERT_THRESHOLD: f64 = 0.8 * SLOT_DEPTH;
const BLOCK_HALF: Vec2 = vec2(0.06, 0.06);

const BLOCK_STATICS: [Rect; 6] = [
    rect(0.0, -0.025, 0.35, 0.025),     // floor
    rect(-0.2025, 0.09, 0.1375, 0.09),  // left fixture
    rect(0.2025, 0.09, 0.1375, 0.09),   // right fixture
    rect(-0.34, 0.33, 0.02, 0.33),      // left wall
    rect(0.34, 0.33, 0.02, 0.33),       // right wall
    rect(0.0, 0.68, 0.36, 0.02),        // ceiling
];

// Latch-door geometry. The door hinges at the origin and lies along +x when
// closed; the handle pivots on the door near its far end. A static pocket
// above the handle tip latches the door shut until the handle is turned down.
const DOOR_HALF: Vec2 = vec2(0.25, 0.025);
const HANDLE_HALF: Vec2 = vec2(0.065, 0.025);
const HINGE_WORLD: Vec2 = vec2(0.0, 0.0);
const DOOR_HINGE_LOCAL: Vec2 = vec2(-0.25, 0.0);
// Where the handle pivots, in the door frame: 0.45 out from the hinge.
const DOOR_PIN_LOCAL: Vec2 = vec2(0.20, 0.0);
const HANDLE_PIVOT_LOCAL: Vec2 = vec2(-0.065, 0.0);
const GRIP_LOCAL_LATCH: Vec2 = vec2(0.035, 0.0);

/// Success thresholds: handle turned at least 45° relative to the door, door
/// swung open at least 30°.
pub const LATCH_THRESHOLD: f64 = std::f64::consts::FRAC_PI_4;
pub const OPEN_THRESHOLD: f64 = std::f64::consts::FRAC_PI_6;

const LATCH_STATICS: [Rect; 2] = [
    rect(0.60, 0.075, 0.03, 0.025),   // latch pocket above the handle tip
    rect(0.21, -0.053, 0.03, 0.027),  // frame stop under the closed door
];

// Pin springs (penalty joints) and the handle return spring. Damping is
// deliberately light: with semi-implicit Euler at dt=0.01 every damping
// rate c·dt·(1/m + r²/I) has to stay well below 2 or the high-frequency
// handle-door mode flips sign each step and diverges.
const HINGE_K: f64 = 2000.0;
const HINGE_C: f64 = 15.0;
const PIN_K: f64 = 800.0;
const PIN_C: f64 = 3.0;
const RETURN_K: f64 = 0.02;
const RETURN_C: f64 = 0.004;
const REL_STOP: f64 = 1.31; // ±75° hard stop on handle-door relative angle
const DOOR_STOP_HI: f64 = 2.0;
const DOOR_STOP_LO: f64 = -0.3;
const STOP_K: f64 = 5.0;
const STOP_C: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    BlockInsert,
    LatchDoor,
}

impl EnvKind {
    pub fn code(self) -> u32 {
        match self {
            EnvKind::BlockInsert => 1,
            EnvKind::LatchDoor => 2,
        }
    }

    pub fn from_code(code: u32) -> Result<Self, PhysimError> {
        match code {
            1 => Ok(EnvKind::BlockInsert),
            2 => Ok(EnvKind::LatchDoor),
            other => Err(PhysimError::BadDemoFile(format!("unknown env kind code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::BlockInsert => "block-insertion",
            EnvKind::LatchDoor => "latch-door",
        }
    }

    pub fn parse(s: &str) -> Result<Self, PhysimError> {
        match s {
            "block-insertion" => Ok(EnvKind::BlockInsert),
            "latch-door" => Ok(EnvKind::LatchDoor),
            other => Err(PhysimError::BadDemoFile(format!("unknown env kind '{other}'"))),
        }
    }

    pub fn statics(self) -> &'static [Rect] {
        match self {
            EnvKind::BlockInsert => &BLOCK_STATICS,
            EnvKind::LatchDoor => &LATCH_STATICS,
        }
    }

    /// Index of the gripped body in `EnvState::bodies`.
    pub fn grip_body(self) -> usize {
        0
    }

    pub fn grip_local(self) -> Vec2 {
        match self {
            EnvKind::BlockInsert => Vec2::ZERO,
            EnvKind::LatchDoor => GRIP_LOCAL_LATCH,
        }
    }

    /// Gripper angular drive gain (torque = gain · rate error).
    pub fn grip_gain_w(self) -> f64 {
        match self {
            EnvKind::BlockInsert => 0.005,
            EnvKind::LatchDoor => 0.1,
        }
    }

    /// Which (body, static rect) pairs can collide.
    fn contact_pairs(self) -> &'static [(usize, usize)] {
        match self {
            EnvKind::BlockInsert => &[(0, 0), (0, 1), (0, 2), (0, 3), (0, 4), (0, 5)],
            // handle vs pocket, door vs frame stop
            EnvKind::LatchDoor => &[(0, 0), (1, 1)],
        }
    }
}

/// Commanded end-effector velocity: planar (m/s) plus angular rate (rad/s).
/// Components are clamped to [-1, 1] on entry to the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Action {
    pub fn new(vx: f64, vy: f64, omega: f64) -> Action {
        Action { vx, vy, omega }
    }

    pub fn clamped(self) -> Action {
        Action {
            vx: self.vx.clamp(-1.0, 1.0),
            vy: self.vy.clamp(-1.0, 1.0),
            omega: self.omega.clamp(-1.0, 1.0),
        }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.vx, self.vy, self.omega]
    }

    pub fn from_array(a: [f64; 3]) -> Action {
        Action { vx: a[0], vy: a[1], omega: a[2] }
    }

    pub fn is_finite(self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite()
    }

    pub fn norm(self) -> f64 {
        (self.vx * self.vx + self.vy * self.vy + self.omega * self.omega).sqrt()
    }
}

/// Net contact force/torque felt at the gripper this step (torque taken
/// about the grip point). Padded to six channels by the sensing layer.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Wrench {
    pub force: Vec2,
    pub torque: f64,
}

impl Wrench {
    pub fn as_array(self) -> [f64; 3] {
        [self.force.x, self.force.y, self.torque]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub kind: EnvKind,
    pub step: u32,
    pub bodies: Vec<Body>,
}

impl EnvState {
    /// Seeded initial state. Block-insertion scatters the block above the
    /// fixtures; latch-door jitters the handle angle slightly.
    pub fn init(kind: EnvKind, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match kind {
            EnvKind::BlockInsert => {
                let x = rng.gen_range(-0.15..0.15);
                let y = rng.gen_range(0.30..0.40);
                let block = Body::at_rest(vec2(x, y), 0.0, BLOCK_HALF, 0.1, 2.4e-4);
                EnvState { kind, step: 0, bodies: vec![block] }
            }
            EnvKind::LatchDoor => {
                let handle_angle = rng.gen_range(-0.05..0.05);
                let door = Body::at_rest(
                    HINGE_WORLD - DOOR_HINGE_LOCAL,
                    0.0,
                    DOOR_HALF,
                    1.0,
                    0.021,
                );
                let pivot = door.to_world(DOOR_PIN_LOCAL);
                let handle = Body::at_rest(
                    pivot - HANDLE_PIVOT_LOCAL.rotated(handle_angle),
                    handle_angle,
                    HANDLE_HALF,
                    0.15,
                    1.5e-3, // includes the gripper collar
                );
                EnvState { kind, step: 0, bodies: vec![handle, door] }
            }
        }
    }

    pub fn grip_world(&self) -> Vec2 {
        self.bodies[self.kind.grip_body()].to_world(self.kind.grip_local())
    }

    pub fn gripped(&self) -> &Body {
        &self.bodies[self.kind.grip_body()]
    }

    pub fn is_finite(&self) -> bool {
        self.bodies.iter().all(Body::is_finite)
    }

    /// Flat (pos, pos, angle, vel, vel, omega) per body, in body order.
    pub fn state_vec(&self) -> Vec<f64> {
        self.bodies
            .iter()
            .flat_map(|b| [b.pos.x, b.pos.y, b.angle, b.vel.x, b.vel.y, b.omega])
            .collect()
    }

    pub fn from_state_vec(kind: EnvKind, step: u32, v: &[f64]) -> Result<EnvState, PhysimError> {
        let mut state = EnvState::init(kind, 0);
        if v.len() != state.bodies.len() * 6 {
            return Err(PhysimError::BadDemoFile(format!(
                "state vector length {} for {} bodies",
                v.len(),
                state.bodies.len()
            )));
        }
        for (i, b) in state.bodies.iter_mut().enumerate() {
            let s = &v[i * 6..(i + 1) * 6];
            b.pos = vec2(s[0], s[1]);
            b.angle = s[2];
            b.vel = vec2(s[3], s[4]);
            b.omega = s[5];
        }
        state.step = step;
        Ok(state)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.bodies.iter().map(Body::kinetic_energy).sum()
    }
}

/// Depth reached inside the slot, 0 when the block is not over the slot.
pub fn insertion_depth(state: &EnvState) -> f64 {
    debug_assert_eq!(state.kind, EnvKind::BlockInsert);
    let b = &state.bodies[0];
    if b.pos.x.abs() > SLOT_HALF_WIDTH {
        return 0.0;
    }
    let bottom = b.pos.y - b.half.y;
    (SLOT_TOP - bottom).clamp(0.0, SLOT_DEPTH)
}

/// Sparse task-success predicate.
pub fn success(state: &EnvState) -> bool {
    match state.kind {
        EnvKind::BlockInsert => insertion_depth(state) >= INSERT_THRESHOLD,
        EnvKind::LatchDoor => {
            let handle = &state.bodies[0];
            let door = &state.bodies[1];
            let relative = handle.angle - door.angle;
            relative <= -LATCH_THRESHOLD && door.angle >= OPEN_THRESHOLD
        }
    }
}

/// One spring-damper pin between a body-local point and an anchor (another
/// body's local point, or a world point).
fn pin_force(
    a: &Body,
    local_a: Vec2,
    anchor: Vec2,
    anchor_vel: Vec2,
    k: f64,
    c: f64,
) -> (Vec2, Vec2) {
    let pa = a.to_world(local_a);
    let va = a.point_velocity(pa);
    let f = (anchor - pa) * k + (anchor_vel - va) * c;
    (pa, f)
}

/// Advance one timestep with semi-implicit Euler. Returns the new state and
/// the net contact wrench at the gripper.
pub fn step_env(state: &EnvState, action: Action, dt: f64) -> Result<(EnvState, Wrench), PhysimError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(PhysimError::NonFinite("dt"));
    }
    if !state.is_finite() {
        return Err(PhysimError::NonFinite("state"));
    }
    if !action.is_finite() {
        return Err(PhysimError::NonFinite("action"));
    }
    let action = action.clamped();
    let kind = state.kind;
    let mut acc = vec![Accum::default(); state.bodies.len()];

    // Gripper drive: linear impedance at the grip point, angular rate servo.
    let grip_idx = kind.grip_body();
    {
        let b = &state.bodies[grip_idx];
        let grip = b.to_world(kind.grip_local());
        let v_cmd = vec2(action.vx, action.vy);
        let force = (v_cmd - b.point_velocity(grip)) * K_V;
        acc[grip_idx].apply_at(b, grip, force);
        acc[grip_idx].torque += kind.grip_gain_w() * (action.omega - b.omega);
    }

    // Per-body viscous damping.
    for (i, b) in state.bodies.iter().enumerate() {
        acc[i].force = acc[i].force - b.vel * DAMP_LIN;
        acc[i].torque -= DAMP_ANG * b.omega;
    }

    // Joints.
    if kind == EnvKind::LatchDoor {
        let (handle, door) = (&state.bodies[0], &state.bodies[1]);

        // Door hinge to the world frame.
        let (p, f) = pin_force(door, DOOR_HINGE_LOCAL, HINGE_WORLD, Vec2::ZERO, HINGE_K, HINGE_C);
        acc[1].apply_at(door, p, f);

        // Handle pivot pinned to the door.
        let anchor = door.to_world(DOOR_PIN_LOCAL);
        let anchor_vel = door.point_velocity(anchor);
        let (p, f) = pin_force(handle, HANDLE_PIVOT_LOCAL, anchor, anchor_vel, PIN_K, PIN_C);
        acc[0].apply_at(handle, p, f);
        acc[1].apply_at(door, p, -f);

        // Handle return spring about the pivot, with hard stops.
        let rel = handle.angle - door.angle;
        let rel_rate = handle.omega - door.omega;
        let mut tau = -RETURN_K * rel - RETURN_C * rel_rate;
        if rel < -REL_STOP {
            tau += STOP_K * (-REL_STOP - rel) - STOP_C * rel_rate;
        } else if rel > REL_STOP {
            tau -= STOP_K * (rel - REL_STOP) + STOP_C * rel_rate;
        }
        acc[0].torque += tau;
        acc[1].torque -= tau;

        // Door swing backstops (keeps runaway exploration bounded).
        if door.angle > DOOR_STOP_HI {
            acc[1].torque -= STOP_K * (door.angle - DOOR_STOP_HI) + STOP_C * door.omega;
        } else if door.angle < DOOR_STOP_LO {
            acc[1].torque += STOP_K * (DOOR_STOP_LO - door.angle) - STOP_C * door.omega;
        }
    }

    // Contacts.
    let statics = kind.statics();
    let mut contacts: Vec<Contact> = Vec::new();
    let mut wrench = Wrench::default();
    let grip_world = state.grip_world();
    let mut max_pen = 0.0f64;
    for &(bi, si) in kind.contact_pairs() {
        contacts.clear();
        let b = &state.bodies[bi];
        contact::find_contacts(b, &statics[si], &mut contacts);
        for c in &contacts {
            max_pen = max_pen.max(c.pen);
            let f = contact::contact_force(b, c);
            acc[bi].apply_at(b, c.point, f);
            if bi == grip_idx {
                wrench.force = wrench.force + f;
                wrench.torque += (c.point - grip_world).cross(f);
            }
        }
    }
    if max_pen > contact::MAX_PENETRATION {
        return Err(PhysimError::Tunneling { penetration: max_pen });
    }

    // Semi-implicit Euler: velocities first, then positions.
    let mut next = state.clone();
    for (b, a) in next.bodies.iter_mut().zip(&acc) {
        b.vel = b.vel + a.force * (dt / b.mass);
        b.omega += a.torque * dt / b.inertia;
        b.pos = b.pos + b.vel * dt;
        b.angle += b.omega * dt;
    }
    next.step = state.step + 1;
    if !next.is_finite() {
        return Err(PhysimError::NonFinite("integrated state"));
    }
    Ok((next, wrench))
}
