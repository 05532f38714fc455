use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub const fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2 { x, y }
}

impl Vec2 {
    pub const ZERO: Vec2 = vec2(0.0, 0.0);

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Rotate 90° counterclockwise (ω × r for unit ω out of the plane).
    pub fn perp(self) -> Vec2 {
        vec2(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        vec2(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        vec2(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        vec2(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        vec2(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        vec2(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle used for all static geometry.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub center: Vec2,
    pub half: Vec2,
}

pub const fn rect(cx: f64, cy: f64, hx: f64, hy: f64) -> Rect {
    Rect { center: vec2(cx, cy), half: vec2(hx, hy) }
}

impl Rect {
    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.center;
        d.x.abs() <= self.half.x && d.y.abs() <= self.half.y
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let (h, c) = (self.half, self.center);
        [
            c + vec2(h.x, h.y),
            c + vec2(-h.x, h.y),
            c + vec2(-h.x, -h.y),
            c + vec2(h.x, -h.y),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_and_cross() {
        let v = vec2(1.0, 0.0).rotated(std::f64::consts::FRAC_PI_2);
        assert!((v.x - 0.0).abs() < 1e-15 && (v.y - 1.0).abs() < 1e-15);
        assert_eq!(vec2(1.0, 0.0).cross(vec2(0.0, 1.0)), 1.0);
        assert_eq!(vec2(3.0, 4.0).perp(), vec2(-4.0, 3.0));
    }

    #[test]
    fn rect_containment() {
        let r = rect(1.0, 1.0, 0.5, 0.25);
        assert!(r.contains(vec2(1.4, 1.2)));
        assert!(!r.contains(vec2(1.6, 1.0)));
        assert!(r.contains(vec2(0.5, 0.75))); // boundary counts as inside
    }
}
