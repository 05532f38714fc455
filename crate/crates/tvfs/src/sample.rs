use physim::Action;
use rand::Rng;

/// Outcome of one cone draw. `pre_clamp` is the raw sampled vector before
/// component clamping; it is what the cone guarantee speaks about and what
/// dataset records store for post-hoc verification. `fallback` marks draws
/// where the demo action was zero and the cone was undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledAction {
    pub action: Action,
    pub pre_clamp: [f64; 3],
    pub fallback: bool,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Deterministic core of the cone draw: rotate `demo` by angle `phi` toward
/// the in-plane direction `psi`, scaling the magnitude by `scale`. With
/// phi = 0 and scale = 1 the result is the demo vector unchanged, and for
/// any inputs angle(result, demo) = phi exactly (up to rounding).
pub fn cone_action(demo: [f64; 3], phi: f64, psi: f64, scale: f64) -> [f64; 3] {
    let n = norm3(demo);
    debug_assert!(n > 0.0, "cone_action needs a non-zero axis");
    let d_hat = [demo[0] / n, demo[1] / n, demo[2] / n];

    // Orthonormal pair spanning the plane perpendicular to the demo action:
    // cross the axis least aligned with it, then complete the triad.
    let axis = if d_hat[0].abs() <= d_hat[1].abs() && d_hat[0].abs() <= d_hat[2].abs() {
        [1.0, 0.0, 0.0]
    } else if d_hat[1].abs() <= d_hat[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let mut e1 = cross3(axis, d_hat);
    let n1 = norm3(e1);
    e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = cross3(d_hat, e1);

    let (sin_phi, cos_phi) = phi.sin_cos();
    let (sin_psi, cos_psi) = psi.sin_cos();
    let u = [
        e1[0] * cos_psi + e2[0] * sin_psi,
        e1[1] * cos_psi + e2[1] * sin_psi,
        e1[2] * cos_psi + e2[2] * sin_psi,
    ];
    let along = scale * cos_phi;
    let across = n * scale * sin_phi;
    [
        demo[0] * along + u[0] * across,
        demo[1] * along + u[1] * across,
        demo[2] * along + u[2] * across,
    ]
}

/// Draw an action in the θ-cone around the demo action: deviation angle
/// uniform in [0, θ], in-plane direction uniform, magnitude scaled by a
/// factor uniform in [0.8, 1.2], components clamped to the actuator bounds.
/// A zero demo action has no cone; those draws fall back to an isotropic
/// perturbation of magnitude at most 0.1 and are flagged.
///
/// The rng draw order (phi, psi, scale — or the rejection loop plus
/// magnitude on the fallback path) is frozen: dataset golden values depend
/// on it.
pub fn sample_action<R: Rng>(demo: Action, theta: f64, rng: &mut R) -> SampledAction {
    assert!((0.0..=std::f64::consts::PI).contains(&theta), "theta out of range: {theta}");
    let d = demo.as_array();
    if norm3(d) == 0.0 {
        let dir = loop {
            let v = [
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
            ];
            let n = norm3(v);
            if n > 1e-9 && n <= 1.0 {
                break [v[0] / n, v[1] / n, v[2] / n];
            }
        };
        let mag = rng.gen_range(0.0..=0.1);
        let pre = [dir[0] * mag, dir[1] * mag, dir[2] * mag];
        return SampledAction {
            action: Action::from_array(pre).clamped(),
            pre_clamp: pre,
            fallback: true,
        };
    }
    let phi = rng.gen_range(0.0..=theta);
    let psi = rng.gen_range(0.0..std::f64::consts::TAU);
    let scale = rng.gen_range(0.8..=1.2);
    let pre = cone_action(d, phi, psi, scale);
    SampledAction { action: Action::from_array(pre).clamped(), pre_clamp: pre, fallback: false }
}
