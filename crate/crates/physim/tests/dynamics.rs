//! Cross-checks the production integrator against a deliberately plain
//! reimplementation of the block-insertion force model: flat scalar
//! arithmetic, explicit loops, no shared geometry helpers. Both simulators
//! consume the same recorded action sequence; trajectories and accumulated
//! gripper impulse must agree to 1e-9.

use physim::{
    insertion_depth, step_env, Action, EnvKind, EnvState, ScriptedExpert, Waypoint, C_FRICTION,
    DAMP_ANG, DAMP_LIN, DT, INSERT_THRESHOLD, K_D, K_P, K_V,
};
use proptest::prelude::*;

/// Flat body state: x, y, angle, vx, vy, omega.
type Flat = [f64; 6];

struct OracleStep {
    next: Flat,
    /// Net contact force/torque at the gripper: fx, fy, tau.
    wrench: [f64; 3],
}

/// One semi-implicit Euler step of the block-insertion model, rebuilt from
/// the documented force laws. `statics` rows are (cx, cy, hx, hy); the grip
/// point is the block center.
fn oracle_step(
    s: Flat,
    action: [f64; 3],
    statics: &[[f64; 4]],
    half: (f64, f64),
    mass: f64,
    inertia: f64,
    gain_w: f64,
) -> OracleStep {
    let [x, y, angle, vx, vy, omega] = s;
    let ax = action[0].clamp(-1.0, 1.0);
    let ay = action[1].clamp(-1.0, 1.0);
    let aw = action[2].clamp(-1.0, 1.0);

    // Impedance drive at the grip point (the center, so no induced torque)
    // plus the angular rate servo and viscous damping.
    let mut fx = K_V * (ax - vx) - DAMP_LIN * vx;
    let mut fy = K_V * (ay - vy) - DAMP_LIN * vy;
    let mut tau = gain_w * (aw - omega) - DAMP_ANG * omega;
    let mut wrench = [0.0f64; 3];

    // Corner contacts, both directions, against every static rect.
    let (sin, cos) = (angle.sin(), angle.cos());
    let body_corners = [
        (half.0, half.1),
        (-half.0, half.1),
        (-half.0, -half.1),
        (half.0, -half.1),
    ]
    .map(|(lx, ly)| (x + cos * lx - sin * ly, y + sin * lx + cos * ly));

    // (point, pushing normal, penetration) triples for this step.
    let mut contacts: Vec<((f64, f64), (f64, f64), f64)> = Vec::new();
    for &[cx, cy, hx, hy] in statics {
        for &(px, py) in &body_corners {
            let (dx, dy) = (px - cx, py - cy);
            if dx.abs() <= hx && dy.abs() <= hy {
                let faces = [
                    (hx - dx, (1.0, 0.0)),
                    (hx + dx, (-1.0, 0.0)),
                    (hy - dy, (0.0, 1.0)),
                    (hy + dy, (0.0, -1.0)),
                ];
                let mut best = faces[0];
                for f in &faces[1..] {
                    if f.0 < best.0 {
                        best = *f;
                    }
                }
                contacts.push(((px, py), best.1, best.0));
            }
        }
        for (qx, qy) in [(cx + hx, cy + hy), (cx - hx, cy + hy), (cx - hx, cy - hy), (cx + hx, cy - hy)] {
            // Static corner expressed in the block's frame.
            let lx = cos * (qx - x) + sin * (qy - y);
            let ly = -sin * (qx - x) + cos * (qy - y);
            if lx.abs() <= half.0 && ly.abs() <= half.1 {
                let faces = [
                    (half.0 - lx, (1.0, 0.0)),
                    (half.0 + lx, (-1.0, 0.0)),
                    (half.1 - ly, (0.0, 1.0)),
                    (half.1 + ly, (0.0, -1.0)),
                ];
                let mut best = faces[0];
                for f in &faces[1..] {
                    if f.0 < best.0 {
                        best = *f;
                    }
                }
                // Rotate the local face normal to world and flip it so the
                // force pushes the block off the corner.
                let (nx, ny) = best.1;
                let n = (-(cos * nx - sin * ny), -(sin * nx + cos * ny));
                contacts.push(((qx, qy), n, best.0));
            }
        }
    }

    for ((px, py), (nx, ny), pen) in contacts {
        // Material-point velocity at the contact.
        let vpx = vx - (py - y) * omega;
        let vpy = vy + (px - x) * omega;
        let vn = vpx * nx + vpy * ny;
        let fn_mag = (K_P * pen + K_D * -vn).max(0.0);
        if fn_mag == 0.0 {
            continue;
        }
        let (vtx, vty) = (vpx - vn * nx, vpy - vn * ny);
        let (cfx, cfy) = (nx * fn_mag - C_FRICTION * vtx, ny * fn_mag - C_FRICTION * vty);
        fx += cfx;
        fy += cfy;
        tau += (px - x) * cfy - (py - y) * cfx;
        wrench[0] += cfx;
        wrench[1] += cfy;
        // Torque about the grip point, which is the block center.
        wrench[2] += (px - x) * cfy - (py - y) * cfx;
    }

    let nvx = vx + fx * DT / mass;
    let nvy = vy + fy * DT / mass;
    let nw = omega + tau * DT / inertia;
    OracleStep {
        next: [x + nvx * DT, y + nvy * DT, angle + nw * DT, nvx, nvy, nw],
        wrench,
    }
}

fn flatten(state: &EnvState) -> Flat {
    let b = &state.bodies[0];
    [b.pos.x, b.pos.y, b.angle, b.vel.x, b.vel.y, b.omega]
}

#[test]
fn block_insertion_matches_independent_restep() {
    let kind = EnvKind::BlockInsert;
    let statics: Vec<[f64; 4]> = kind
        .statics()
        .iter()
        .map(|r| [r.center.x, r.center.y, r.half.x, r.half.y])
        .collect();

    // Scripted 200-step run, recording the action sequence as we go. The
    // plan is the stock insertion script plus a final waypoint below the
    // resting height, so after insertion the block presses into the slot
    // floor and the contact model carries sustained force.
    let mut plan = physim::default_plan(kind);
    plan.push(Waypoint::new(0.0, 0.04, 0.0));
    let mut expert = ScriptedExpert::new(plan).unwrap();
    let mut state = EnvState::init(kind, 7);
    let b0 = &state.bodies[0];
    let (half, mass, inertia) = ((b0.half.x, b0.half.y), b0.mass, b0.inertia);
    let gain_w = kind.grip_gain_w();

    let mut trajectory = vec![flatten(&state)];
    let mut actions: Vec<[f64; 3]> = Vec::new();
    let mut impulse = [0.0f64; 3];
    for _ in 0..200 {
        let action = expert.next_action(&state);
        let (next, wrench) = step_env(&state, action, DT).unwrap();
        actions.push(action.as_array());
        for (sum, w) in impulse.iter_mut().zip(wrench.as_array()) {
            *sum += w * DT;
        }
        trajectory.push(flatten(&next));
        state = next;
    }
    assert!(
        insertion_depth(&state) >= INSERT_THRESHOLD,
        "scripted run must finish inserted, depth={}",
        insertion_depth(&state)
    );

    // Re-run the whole trajectory through the oracle on the same actions.
    let mut flat = trajectory[0];
    let mut oracle_impulse = [0.0f64; 3];
    for (t, action) in actions.iter().enumerate() {
        let out = oracle_step(flat, *action, &statics, half, mass, inertia, gain_w);
        flat = out.next;
        for (sum, w) in oracle_impulse.iter_mut().zip(out.wrench) {
            *sum += w * DT;
        }
        for (i, (a, b)) in flat.iter().zip(trajectory[t + 1]).enumerate() {
            assert!(
                (a - b).abs() <= 1e-9,
                "component {i} diverged at step {}: oracle {a} vs production {b}",
                t + 1
            );
        }
    }
    for (i, (a, b)) in oracle_impulse.iter().zip(impulse).enumerate() {
        assert!(
            (a - b).abs() <= 1e-9,
            "impulse component {i}: oracle {a} vs production {b}"
        );
    }
    // The run must actually have touched something, or the contact model
    // was never exercised.
    assert!(
        impulse.iter().any(|w| w.abs() > 1e-3),
        "no contact impulse accumulated: {impulse:?}"
    );
}

#[test]
fn contact_scramble_matches_independent_restep() {
    // Open-loop shove of a tilted block down onto a fixture's inner top
    // corner: messy multi-contact dynamics, including the branch where a
    // static corner sits inside the body, compared step for step against
    // the plain reimplementation.
    let kind = EnvKind::BlockInsert;
    let statics: Vec<[f64; 4]> = kind
        .statics()
        .iter()
        .map(|r| [r.center.x, r.center.y, r.half.x, r.half.y])
        .collect();
    let mut state = EnvState::init(kind, 0);
    {
        let b = &mut state.bodies[0];
        b.pos = physim::math::vec2(0.055, 0.25);
        b.angle = 0.15;
        b.vel = physim::math::vec2(0.0, -0.3);
        b.omega = 0.0;
    }
    let b0 = &state.bodies[0];
    let (half, mass, inertia) = ((b0.half.x, b0.half.y), b0.mass, b0.inertia);
    let gain_w = kind.grip_gain_w();
    let action = Action::new(0.2, -0.6, 0.1);

    let mut corner_hits = 0usize;
    let mut flat = flatten(&state);
    for t in 0..80 {
        for r in kind.statics() {
            let mut found = Vec::new();
            physim::find_contacts(&state.bodies[0], r, &mut found);
            for c in &found {
                if r.corners().iter().any(|q| (*q - c.point).norm() == 0.0) {
                    corner_hits += 1;
                }
            }
        }
        let (next, _) = step_env(&state, action, DT).unwrap();
        let out = oracle_step(flat, action.as_array(), &statics, half, mass, inertia, gain_w);
        flat = out.next;
        for (i, (a, b)) in flat.iter().zip(flatten(&next)).enumerate() {
            assert!(
                (a - b).abs() <= 1e-9,
                "component {i} diverged at step {}: oracle {a} vs production {b}",
                t + 1
            );
        }
        state = next;
    }
    assert!(
        corner_hits > 0,
        "the shove never put a static corner inside the body"
    );
}

#[test]
fn latch_door_settles_from_rest() {
    // The linkage starts at its pin equilibrium with only the handle-angle
    // jitter loading the return spring, so with no drive the stored energy
    // stays tiny and nothing drifts apart.
    for seed in [0, 1, 2, 3, 11] {
        let mut state = EnvState::init(EnvKind::LatchDoor, seed);
        for _ in 0..100 {
            state = step_env(&state, Action::default(), DT).unwrap().0;
            assert!(state.kinetic_energy() < 1e-4, "seed {seed}: KE blew up");
        }
        let rel = state.bodies[0].angle - state.bodies[1].angle;
        assert!(rel.abs() < 0.06, "seed {seed}: handle drifted to rel={rel}");
        assert!(state.bodies[1].angle.abs() < 0.01, "seed {seed}: door moved");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// With zero action and no contact, every force is dissipative: kinetic
    /// energy must never increase.
    #[test]
    fn free_flight_energy_is_nonincreasing(
        x in -0.10f64..0.10,
        y in 0.40f64..0.52,
        angle in -3.1f64..3.1,
        vx in -0.5f64..0.5,
        vy in -0.5f64..0.5,
        omega in -3.0f64..3.0,
    ) {
        let mut state = EnvState::init(EnvKind::BlockInsert, 0);
        {
            let b = &mut state.bodies[0];
            b.pos = physim::math::vec2(x, y);
            b.angle = angle;
            b.vel = physim::math::vec2(vx, vy);
            b.omega = omega;
        }
        let mut ke = state.kinetic_energy();
        for t in 0..60 {
            let (next, wrench) = step_env(&state, Action::default(), DT).unwrap();
            prop_assert_eq!(wrench.as_array(), [0.0; 3], "contact at step {}", t);
            let ke_next = next.kinetic_energy();
            prop_assert!(ke_next <= ke, "KE rose {} -> {} at step {}", ke, ke_next, t);
            ke = ke_next;
            state = next;
        }
    }

    /// Same seed and action tape, twice: bit-identical state sequences.
    #[test]
    fn stepping_is_bit_deterministic(seed in 0u64..1000, tape in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..30)) {
        for kind in [EnvKind::BlockInsert, EnvKind::LatchDoor] {
            let mut a = EnvState::init(kind, seed);
            let mut b = EnvState::init(kind, seed);
            for &(vx, vy, w) in &tape {
                let act = Action::new(vx, vy, w);
                a = step_env(&a, act, DT).unwrap().0;
                b = step_env(&b, act, DT).unwrap().0;
                prop_assert_eq!(a.state_vec(), b.state_vec());
            }
        }
    }
}
