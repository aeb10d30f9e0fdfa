use nalgebra::DVector;

use crate::error::{Error, Result};

/// Normalised absolute error of one prediction:
/// `Σ_m |ŷ_m − y_m| / (M · max_m y_m)`.
pub fn segment_ae(prediction: &DVector<f64>, truth: &DVector<f64>, label: &str) -> Result<f64> {
    if prediction.len() != truth.len() || truth.is_empty() {
        return Err(Error::dim(format!(
            "prediction has {} entries, truth has {}",
            prediction.len(),
            truth.len()
        )));
    }
    let max = truth.max();
    if !(max > 0.0) {
        return Err(Error::NonPositiveNormalizer { segment: label.to_string(), max });
    }
    let total: f64 = prediction.iter().zip(truth.iter()).map(|(p, y)| (p - y).abs()).sum();
    Ok(total / (truth.len() as f64 * max))
}

/// Per-segment normalised absolute errors; segments are labelled from 1.
pub fn normalized_ae(predictions: &[DVector<f64>], truths: &[DVector<f64>]) -> Result<Vec<f64>> {
    if predictions.len() != truths.len() {
        return Err(Error::dim(format!("{} predictions for {} segments", predictions.len(), truths.len())));
    }
    predictions
        .iter()
        .zip(truths)
        .enumerate()
        .map(|(k, (p, y))| segment_ae(p, y, &(k + 1).to_string()))
        .collect()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
