use crate::error::{Result, TrainError};

/// Per-sample relative errors of one process.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeL2 {
    pub per_sample: Vec<f64>,
    /// Some target had zero norm; its error is the absolute norm of the difference.
    pub zero_norm: bool,
}

impl RelativeL2 {
    pub fn mean(&self) -> f64 {
        mean_std(&self.per_sample).0
    }
}

/// `||pred_n - target_n|| / ||target_n||` for each of `samples` equal-sized rows.
pub fn relative_l2(pred: &[f64], target: &[f64], samples: usize) -> Result<RelativeL2> {
    if pred.len() != target.len() || samples == 0 || pred.len() % samples != 0 {
        return Err(TrainError::Config(format!(
            "cannot split {} predictions and {} targets into {samples} samples",
            pred.len(),
            target.len()
        )));
    }
    let cells = pred.len() / samples;
    let mut zero_norm = false;
    let per_sample = pred
        .chunks_exact(cells)
        .zip(target.chunks_exact(cells))
        .map(|(p, t)| {
            let diff = p
                .iter()
                .zip(t)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm = t.iter().map(|b| b * b).sum::<f64>().sqrt();
            if norm == 0.0 {
                zero_norm = true;
                diff
            } else {
                diff / norm
            }
        })
        .collect();
    Ok(RelativeL2 {
        per_sample,
        zero_norm,
    })
}

/// Mean and population standard deviation; `(NaN, NaN)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
