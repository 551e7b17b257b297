use crate::error::{Error, Result};

/// Weighted least-squares non-decreasing fit by pool-adjacent-violators.
pub fn pava_isotonic(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: weights.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter(format!("weights must be positive, got {w}")));
    }

    // blocks of (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, l1 + l2));
        }
    }
    Ok(blocks
        .into_iter()
        .flat_map(|(m, _, len)| std::iter::repeat_n(m, len))
        .collect())
}
