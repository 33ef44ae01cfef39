use nalgebra::{DMatrix, DVector};

use super::weights::{LinearWeights, RidgeWeights};
use super::{WindowSample, LAGS};

/// Number of ridge2 features: the lags plus every pairwise product (squares included).
pub const RIDGE_FEATURES: usize = LAGS + LAGS * (LAGS + 1) / 2;

/// Least squares with a relative singular-value cutoff; rank-deficient systems
/// get the minimum-norm solution.
fn min_norm_solve(a: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (top * 1e-12).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("u and v were computed")
}

/// Ordinary least squares on the 5 lags plus an intercept.
pub fn fit_lin(samples: &[WindowSample]) -> LinearWeights {
    let n = samples.len();
    let a = DMatrix::from_fn(n, LAGS + 1, |r, c| if c < LAGS { samples[r].lags[c] } else { 1.0 });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.target));
    let w = min_norm_solve(a, &y);
    let mut coef = [0.0; LAGS];
    coef.copy_from_slice(&w.as_slice()[..LAGS]);
    LinearWeights { coef, intercept: w[LAGS] }
}

pub fn predict_lin(w: &LinearWeights, lags: &[f64; LAGS]) -> f64 {
    w.coef.iter().zip(lags).map(|(c, x)| c * x).sum::<f64>() + w.intercept
}

pub fn ridge_features(lags: &[f64; LAGS]) -> [f64; RIDGE_FEATURES] {
    let mut f = [0.0; RIDGE_FEATURES];
    f[..LAGS].copy_from_slice(lags);
    let mut k = LAGS;
    for i in 0..LAGS {
        for j in i..LAGS {
            f[k] = lags[i] * lags[j];
            k += 1;
        }
    }
    f
}

fn lag_mean(lags: &[f64; LAGS]) -> f64 {
    lags.iter().sum::<f64>() / LAGS as f64
}

/// Features of the lags measured from their own mean.
fn centered_features(lags: &[f64; LAGS]) -> [f64; RIDGE_FEATURES] {
    let base = lag_mean(lags);
    ridge_features(&lags.map(|v| v - base))
}

/// Ridge regression on standardized lag and interaction features, both taken
/// relative to the window's lag mean. The target is the offset from that mean
/// and its intercept is not penalized.
pub fn fit_ridge2(samples: &[WindowSample], lambda: f64) -> RidgeWeights {
    let n = samples.len();
    let feats: Vec<[f64; RIDGE_FEATURES]> = samples.iter().map(|s| centered_features(&s.lags)).collect();
    let mut mean = vec![0.0; RIDGE_FEATURES];
    let mut scale = vec![0.0; RIDGE_FEATURES];
    for k in 0..RIDGE_FEATURES {
        let m = feats.iter().map(|f| f[k]).sum::<f64>() / n as f64;
        let var = feats.iter().map(|f| (f[k] - m).powi(2)).sum::<f64>() / n as f64;
        mean[k] = m;
        scale[k] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    }
    let z = DMatrix::from_fn(n, RIDGE_FEATURES, |r, c| (feats[r][c] - mean[c]) / scale[c]);
    let residual: Vec<f64> = samples.iter().map(|s| s.target - lag_mean(&s.lags)).collect();
    let y_mean = residual.iter().sum::<f64>() / n as f64;
    let y = DVector::from_iterator(n, residual.iter().map(|r| r - y_mean));
    let zt = z.transpose();
    let gram = &zt * &z + DMatrix::identity(RIDGE_FEATURES, RIDGE_FEATURES) * lambda;
    let rhs = &zt * &y;
    let w = match gram.clone().cholesky() {
        Some(ch) if lambda > 0.0 => ch.solve(&rhs),
        _ => min_norm_solve(gram, &rhs),
    };
    RidgeWeights {
        feature_mean: mean,
        feature_scale: scale,
        coef: w.as_slice().to_vec(),
        intercept: y_mean,
    }
}

pub fn predict_ridge2(w: &RidgeWeights, lags: &[f64; LAGS]) -> f64 {
    let f = centered_features(lags);
    lag_mean(lags)
        + f.iter()
        .zip(&w.feature_mean)
        .zip(&w.feature_scale)
        .zip(&w.coef)
        .map(|(((x, m), s), c)| c * (x - m) / s)
        .sum::<f64>()
        + w.intercept
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_samples(n: usize, seed: u64, target: impl Fn(&[f64; 5]) -> f64) -> Vec<WindowSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let lags: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.0..300.0));
                WindowSample { target: target(&lags), lags }
            })
            .collect()
    }

    #[test]
    fn persistence_data_recovers_last_lag() {
        let s = random_samples(40, 1, |l| l[4]);
        let w = fit_lin(&s);
        for (c, want) in w.coef.iter().zip([0.0, 0.0, 0.0, 0.0, 1.0]) {
            assert!((c - want).abs() < 1e-8, "{c} vs {want}");
        }
        assert!(w.intercept.abs() < 1e-8);
        assert_eq!(predict_lin(&w, &[7.0, 9.0, 11.0, 13.0, 42.0]).round(), 42.0);
    }

    #[test]
    fn constant_series_falls_back_to_minimum_norm() {
        let s: Vec<WindowSample> = (0..20).map(|_| WindowSample { lags: [5.0; 5], target: 5.0 }).collect();
        let a = fit_lin(&s);
        let b = fit_lin(&s);
        assert_eq!(a, b);
        assert!((predict_lin(&a, &[5.0; 5]) - 5.0).abs() < 1e-9);
        // Minimum-norm spreads weight evenly across the collinear columns.
        let c0 = a.coef[0];
        assert!(a.coef.iter().all(|c| (c - c0).abs() < 1e-9));
    }

    #[test]
    fn ridge_without_penalty_recovers_a_centered_quadratic() {
        let truth = |l: &[f64; 5]| {
            let m = l.iter().sum::<f64>() / 5.0;
            m + 0.6 * (l[4] - m) - 0.002 * (l[3] - m) * (l[4] - m) + 3.0
        };
        let s = random_samples(80, 2, truth);
        let w = fit_ridge2(&s, 0.0);
        for x in &random_samples(10, 3, truth) {
            assert!((predict_ridge2(&w, &x.lags) - x.target).abs() < 1e-6);
        }
    }

    #[test]
    fn ridge_prediction_follows_a_level_shift() {
        let s = random_samples(60, 4, |l| 0.3 * l[0] + 0.7 * l[4] + 0.001 * l[2] * l[3]);
        let w = fit_ridge2(&s, 1.0);
        let lags = [120.0, 180.0, 150.0, 90.0, 200.0];
        let d = predict_ridge2(&w, &lags.map(|v| v + 40.0)) - predict_ridge2(&w, &lags);
        assert!((d - 40.0).abs() < 1e-9);
    }

    #[test]
    fn feature_count() {
        assert_eq!(RIDGE_FEATURES, 20);
        let f = ridge_features(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(f[5], 1.0);
        assert_eq!(f[19], 25.0);
    }
}
