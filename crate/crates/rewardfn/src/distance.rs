/// Distance measure between embeddings. Only Euclidean for now; the enum
/// keeps the bundle format and constructors honest about what they cached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    Euclidean,
}

impl DistanceKind {
    pub fn measure(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            DistanceKind::Euclidean => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
        }
    }

    pub fn code(self) -> u8 {
        match self {
            DistanceKind::Euclidean => 0,
        }
    }

    pub fn from_code(code: u8) -> Option<DistanceKind> {
        match code {
            0 => Some(DistanceKind::Euclidean),
            _ => None,
        }
    }
}
