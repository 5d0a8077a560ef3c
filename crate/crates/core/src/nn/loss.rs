use crate::error::{Error, Result};

/// Floor applied to probabilities inside logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

pub fn safe_ln(p: f64) -> f64 {
    p.max(LOG_FLOOR).ln()
}

/// Derivative of [`safe_ln`]; zero where the floor is active.
pub fn safe_ln_grad(p: f64) -> f64 {
    if p > LOG_FLOOR {
        1.0 / p
    } else {
        0.0
    }
}

/// Mean over samples of `-sum_j label_j ln p_j`.
pub fn cross_entropy(labels: &[Vec<f64>], probs: &[Vec<f64>]) -> Result<f64> {
    if labels.len() != probs.len() || labels.is_empty() {
        return Err(Error::input(format!(
            "{} label rows vs {} probability rows",
            labels.len(),
            probs.len()
        )));
    }
    let mut total = 0.0;
    for (i, (y, p)) in labels.iter().zip(probs).enumerate() {
        if y.len() != p.len() {
            return Err(Error::input(format!("row {i}: {} labels vs {} probabilities", y.len(), p.len())));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::input(format!("row {i}: probabilities sum to {s}")));
        }
        total -= y.iter().zip(p).map(|(yj, pj)| yj * safe_ln(*pj)).sum::<f64>();
    }
    Ok(total / labels.len() as f64)
}

/// Gradient of the per-sample cross-entropy w.r.t. the probabilities.
pub fn cross_entropy_grad(label: &[f64], probs: &[f64]) -> Vec<f64> {
    label
        .iter()
        .zip(probs)
        .map(|(y, p)| -y * safe_ln_grad(*p))
        .collect()
}

pub fn one_hot(class: usize, classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; classes];
    v[class] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_cases() {
        let y = vec![one_hot(2, 4)];
        assert_eq!(cross_entropy(&y, &[one_hot(2, 4)]).unwrap(), 0.0);

        let uniform = vec![vec![0.2; 5]];
        let ce = cross_entropy(&[one_hot(0, 5)], &uniform).unwrap();
        assert!((ce - 5f64.ln()).abs() < 1e-12);

        let labels = vec![one_hot(0, 2), one_hot(1, 2)];
        let probs = vec![vec![0.5, 0.5], vec![0.75, 0.25]];
        let ce = cross_entropy(&labels, &probs).unwrap();
        assert!((ce - (2f64.ln() + 4f64.ln()) / 2.0).abs() < 1e-12);
        assert!((ce - 1.0397).abs() < 1e-4);

        assert!(cross_entropy(&labels, &probs[..1]).is_err());
        assert!(cross_entropy(&[one_hot(0, 2)], &[vec![0.5, 0.6]]).is_err());
    }

    #[test]
    fn floor_keeps_loss_finite() {
        let ce = cross_entropy(&[one_hot(0, 2)], &[vec![0.0, 1.0]]).unwrap();
        assert!((ce - (-LOG_FLOOR.ln())).abs() < 1e-9);
        assert_eq!(safe_ln_grad(0.0), 0.0);
    }
}
