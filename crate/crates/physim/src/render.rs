use crate::env::{EnvKind, EnvState};
use crate::math::{rect, Rect, Vec2};

pub const GRID: usize = 32;

/// Orthographic camera window per environment, chosen so no static edge sits
/// exactly on a cell-center coordinate.
pub fn view(kind: EnvKind) -> Rect {
    match kind {
        EnvKind::BlockInsert => rect(0.0, 0.30, 0.35, 0.35),
        EnvKind::LatchDoor => rect(0.35, 0.10, 0.45, 0.45),
    }
}

/// Flat-shaded display styles. Depth is a layer value in (0, 1], larger =
/// nearer the camera; dynamic bodies sit in front of static geometry.
fn body_style(kind: EnvKind, idx: usize) -> (f64, f64) {
    match (kind, idx) {
        (EnvKind::BlockInsert, _) => (0.9, 0.9),
        (EnvKind::LatchDoor, 0) => (0.9, 0.95), // handle in front of the door
        (EnvKind::LatchDoor, _) => (0.7, 0.85),
    }
}

const STATIC_STYLE: (f64, f64) = (0.4, 0.4);

/// 32×32 single-channel grid, row 0 at the top of the view.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    cells: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { cells: vec![0.0; GRID * GRID] }
    }
}

impl Grid {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * GRID + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.cells[row * GRID + col] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.cells
    }

    pub fn from_cells(cells: Vec<f64>) -> Grid {
        assert_eq!(cells.len(), GRID * GRID);
        Grid { cells }
    }
}

/// World position of a cell center.
pub fn cell_center(view: &Rect, row: usize, col: usize) -> Vec2 {
    let w = 2.0 * view.half.x / GRID as f64;
    let h = 2.0 * view.half.y / GRID as f64;
    Vec2 {
        x: view.center.x - view.half.x + (col as f64 + 0.5) * w,
        y: view.center.y + view.half.y - (row as f64 + 0.5) * h,
    }
}

/// Cell containing a world position, if it is in view.
pub fn cell_of(view: &Rect, p: Vec2) -> Option<(usize, usize)> {
    let w = 2.0 * view.half.x / GRID as f64;
    let h = 2.0 * view.half.y / GRID as f64;
    let fx = (p.x - (view.center.x - view.half.x)) / w;
    let fy = ((view.center.y + view.half.y) - p.y) / h;
    if fx < 0.0 || fy < 0.0 {
        return None;
    }
    let (col, row) = (fx as usize, fy as usize);
    (row < GRID && col < GRID).then_some((row, col))
}

/// Rasterize the scene: per cell the nearest covering body wins; empty cells
/// are (0, 0) in both channels.
pub fn render(state: &EnvState) -> (Grid, Grid) {
    let view = view(state.kind);
    let mut intensity = Grid::default();
    let mut depth = Grid::default();
    for row in 0..GRID {
        for col in 0..GRID {
            let p = cell_center(&view, row, col);
            let mut best: Option<(f64, f64)> = None; // (depth, intensity)
            for r in state.kind.statics() {
                if r.contains(p) && best.map_or(true, |(d, _)| STATIC_STYLE.1 > d) {
                    best = Some((STATIC_STYLE.1, STATIC_STYLE.0));
                }
            }
            for (i, b) in state.bodies.iter().enumerate() {
                let (shade, layer) = body_style(state.kind, i);
                if b.contains(p) && best.map_or(true, |(d, _)| layer > d) {
                    best = Some((layer, shade));
                }
            }
            if let Some((d, shade)) = best {
                intensity.set(row, col, shade);
                depth.set(row, col, d);
            }
        }
    }
    (intensity, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvState;

    #[test]
    fn uncovered_cells_are_zero() {
        // With the block out of view, every cell not covered by static
        // geometry must be exactly (0, 0) in both channels.
        let mut s = EnvState::init(EnvKind::BlockInsert, 0);
        s.bodies[0].pos = Vec2 { x: 5.0, y: 5.0 };
        let v = view(s.kind);
        let (i, d) = render(&s);
        let mut empties = 0;
        for row in 0..GRID {
            for col in 0..GRID {
                let p = cell_center(&v, row, col);
                if !s.kind.statics().iter().any(|r| r.contains(p)) {
                    assert_eq!(i.get(row, col), 0.0);
                    assert_eq!(d.get(row, col), 0.0);
                    empties += 1;
                }
            }
        }
        assert!(empties > 300, "expected mostly empty view, got {empties}");
    }

    #[test]
    fn nearer_body_wins_overlap() {
        // Handle overlaps the door near the pivot; the handle's layer is
        // nearer, so overlapped cells carry the handle's depth.
        let s = EnvState::init(EnvKind::LatchDoor, 0);
        let v = view(EnvKind::LatchDoor);
        let overlap = s.bodies[0].to_world(Vec2 { x: -0.05, y: 0.0 });
        assert!(s.bodies[0].contains(overlap) && s.bodies[1].contains(overlap));
        let (_, d) = render(&s);
        let (row, col) = cell_of(&v, overlap).unwrap();
        assert_eq!(d.get(row, col), 0.95);
    }

    #[test]
    fn centroid_cell_is_occupied() {
        for kind in [EnvKind::BlockInsert, EnvKind::LatchDoor] {
            let s = EnvState::init(kind, 11);
            let v = view(kind);
            let (_, d) = render(&s);
            for (i, b) in s.bodies.iter().enumerate() {
                let (_, layer) = body_style(kind, i);
                let (row, col) = cell_of(&v, b.pos).expect("centroid in view");
                assert_eq!(d.get(row, col), layer, "{kind:?} body {i}");
            }
        }
    }

    #[test]
    fn grid_values_in_unit_range() {
        let s = EnvState::init(EnvKind::LatchDoor, 3);
        let (i, d) = render(&s);
        for v in i.data().iter().chain(d.data()) {
            assert!((0.0..=1.0).contains(v));
        }
    }
}
