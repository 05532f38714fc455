use crate::env::{Action, EnvKind, EnvState};
use crate::error::PhysimError;
use crate::math::{vec2, Vec2};

/// One target for the gripper: grip-point position plus gripped-body angle.
#[derive(Debug, Clone, Copy)]
pub struct Waypoint {
    pub pos: Vec2,
    pub angle: f64,
    pub pos_tol: f64,
    pub ang_tol: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, angle: f64) -> Waypoint {
        Waypoint { pos: vec2(x, y), angle, pos_tol: 0.02, ang_tol: 0.06 }
    }
}

const GAIN_POS: f64 = 4.0;
const GAIN_ANG: f64 = 3.0;

/// Proportional controller stepping through a waypoint plan. Holds the final
/// waypoint forever once reached.
#[derive(Debug, Clone)]
pub struct ScriptedExpert {
    plan: Vec<Waypoint>,
    current: usize,
}

impl ScriptedExpert {
    pub fn new(plan: Vec<Waypoint>) -> Result<ScriptedExpert, PhysimError> {
        if plan.is_empty() {
            return Err(PhysimError::EmptyPlan);
        }
        Ok(ScriptedExpert { plan, current: 0 })
    }

    /// Default plan for an environment kind.
    pub fn for_kind(kind: EnvKind) -> ScriptedExpert {
        ScriptedExpert::new(default_plan(kind)).expect("built-in plans are non-empty")
    }

    pub fn waypoint_index(&self) -> usize {
        self.current
    }

    /// P-control toward the current waypoint, advancing it when within
    /// tolerance; components clamp to the action bounds.
    pub fn next_action(&mut self, state: &EnvState) -> Action {
        let grip = state.grip_world();
        let angle = state.gripped().angle;
        loop {
            let wp = &self.plan[self.current];
            let reached = (wp.pos - grip).norm() < wp.pos_tol
                && (wp.angle - angle).abs() < wp.ang_tol;
            if reached && self.current + 1 < self.plan.len() {
                self.current += 1;
            } else {
                break;
            }
        }
        let wp = &self.plan[self.current];
        let err = wp.pos - grip;
        Action::new(GAIN_POS * err.x, GAIN_POS * err.y, GAIN_ANG * (wp.angle - angle)).clamped()
    }
}

/// Hand-tuned demonstration plans.
pub fn default_plan(kind: EnvKind) -> Vec<Waypoint> {
    match kind {
        // Carry the block over the slot, line it up, push it in.
        EnvKind::BlockInsert => vec![
            Waypoint::new(0.0, 0.32, 0.0),
            Waypoint { pos_tol: 0.01, ..Waypoint::new(0.0, 0.26, 0.0) },
            Waypoint { pos_tol: 0.008, ..Waypoint::new(0.0, 0.20, 0.0) },
            Waypoint::new(0.0, 0.06, 0.0),
        ],
        // Turn the handle down past the latch, then pull the door open along
        // an arc of grip positions computed from the linkage geometry. The
        // commanded turn overshoots the 45° latch threshold: the angular
        // drive stalls against the return spring short of its target, and
        // the wide angle tolerance advances waypoints from the stall point.
        EnvKind::LatchDoor => {
            let turn = -70.0 * std::f64::consts::PI / 180.0;
            let mut plan = vec![latch_grip_waypoint(0.0, turn)];
            for door_deg in [10.0, 20.0, 30.0, 38.0] {
                let door = door_deg * std::f64::consts::PI / 180.0;
                plan.push(latch_grip_waypoint(door, door + turn));
            }
            plan
        }
    }
}

/// Grip-point waypoint for a target door angle and absolute handle angle.
fn latch_grip_waypoint(door_angle: f64, handle_angle: f64) -> Waypoint {
    // Pivot rides the door at radius 0.45 from the hinge; grip sits 0.1
    // along the handle from the pivot.
    let pivot = vec2(0.45, 0.0).rotated(door_angle);
    let grip = pivot + vec2(0.1, 0.0).rotated(handle_angle);
    Waypoint { ang_tol: 0.12, ..Waypoint::new(grip.x, grip.y, handle_angle) }
}
