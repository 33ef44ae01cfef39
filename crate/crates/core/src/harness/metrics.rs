use crate::error::{Error, Result};

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn compute_r2(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.len() != actuals.len() || actuals.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "R² needs two equal-length series of at least 2 values, got {} and {}",
            predictions.len(),
            actuals.len()
        )));
    }
    let mean = actuals.iter().sum::<f64>() / actuals.len() as f64;
    let ss_tot: f64 = actuals.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedR2);
    }
    let ss_res: f64 = predictions.iter().zip(actuals).map(|(p, a)| (a - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}
