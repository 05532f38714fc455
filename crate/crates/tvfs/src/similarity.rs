use crate::error::TvfsError;

/// dot(a, b) / (‖a‖·‖b‖), defined only for non-zero vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, TvfsError> {
    if a.len() != b.len() {
        return Err(TvfsError::LengthMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(TvfsError::ZeroNorm);
    }
    Ok(dot / (na * nb))
}
