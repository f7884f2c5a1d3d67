/// Probabilities are clamped to `[BCE_CLIP, 1 − BCE_CLIP]` before taking logs.
pub const BCE_CLIP: f64 = 1e-7;

/// Mean binary cross-entropy `−(y ln p + (1 − y) ln(1 − p))`. Empty input gives 0.
pub fn bce_loss(p: &[f64], y: &[f64]) -> f64 {
    assert_eq!(p.len(), y.len(), "probability and target lengths differ");
    if p.is_empty() {
        return 0.0;
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_CLIP, 1.0 - BCE_CLIP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    total / p.len() as f64
}
