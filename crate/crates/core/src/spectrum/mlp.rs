//! One-hidden-layer tanh regressor.
//!
//! Inputs are the lags minus their own mean, and the network predicts the
//! target's offset from that mean. A level shift in the stream therefore moves
//! the prediction by the same amount instead of pushing the hidden units into
//! saturation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::weights::MlpWeights;
use super::{WindowSample, LAGS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct MlpFit {
    pub weights: MlpWeights,
    /// Training MSE (standardized target) before each epoch's update.
    pub losses: Vec<f64>,
}

fn lag_mean(lags: &[f64; LAGS]) -> f64 {
    lags.iter().sum::<f64>() / LAGS as f64
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

fn standardized_inputs(lags: &[f64; LAGS], mean: &[f64; LAGS], scale: &[f64; LAGS]) -> [f64; LAGS] {
    let base = lag_mean(lags);
    std::array::from_fn(|i| (lags[i] - base - mean[i]) / scale[i])
}

pub fn fit_mlp(samples: &[WindowSample], seed: u64, cfg: &MlpConfig) -> MlpFit {
    let n = samples.len();
    let h = cfg.hidden;

    let centered: Vec<[f64; LAGS]> = samples
        .iter()
        .map(|s| {
            let base = lag_mean(&s.lags);
            s.lags.map(|v| v - base)
        })
        .collect();
    let mut input_mean = [0.0; LAGS];
    let mut input_scale = [0.0; LAGS];
    for i in 0..LAGS {
        (input_mean[i], input_scale[i]) = mean_std(centered.iter().map(|c| c[i]));
    }
    let residual = samples.iter().map(|s| s.target - lag_mean(&s.lags));
    let (target_mean, target_scale) = mean_std(residual.clone());

    let z: Vec<[f64; LAGS]> = centered
        .iter()
        .map(|c| std::array::from_fn(|i| (c[i] - input_mean[i]) / input_scale[i]))
        .collect();
    let t: Vec<f64> = residual.map(|r| (r - target_mean) / target_scale).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let w1_scale = 1.0 / (LAGS as f64).sqrt();
    let mut w1: Vec<f64> = (0..LAGS * h).map(|_| normal() * w1_scale).collect();
    let mut b1: Vec<f64> = (0..h).map(|_| normal() * 0.5).collect();

    let mut act = vec![0.0; n * h];
    let forward = |w1: &[f64], b1: &[f64], act: &mut [f64]| {
        for (r, zr) in z.iter().enumerate() {
            for k in 0..h {
                let mut a = b1[k];
                for i in 0..LAGS {
                    a += zr[i] * w1[i * h + k];
                }
                act[r * h + k] = a.tanh();
            }
        }
    };

    // Output layer starts at the least-squares fit of the random features.
    forward(&w1, &b1, &mut act);
    let design = DMatrix::from_fn(n, h + 1, |r, c| if c < h { act[r * h + c] } else { 1.0 });
    let dt = design.transpose();
    let gram = &dt * &design + DMatrix::identity(h + 1, h + 1) * 1e-3;
    let rhs = &dt * DVector::from_column_slice(&t);
    let out = gram
        .cholesky()
        .expect("ridge-regularized gram matrix is positive definite")
        .solve(&rhs);
    let mut w2: Vec<f64> = out.as_slice()[..h].to_vec();
    let mut b2 = out[h];

    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut g_w1 = vec![0.0; LAGS * h];
    let mut g_b1 = vec![0.0; h];
    let mut g_w2 = vec![0.0; h];
    for _ in 0..cfg.epochs {
        forward(&w1, &b1, &mut act);
        g_w1.fill(0.0);
        g_b1.fill(0.0);
        g_w2.fill(0.0);
        let mut g_b2 = 0.0;
        let mut loss = 0.0;
        for r in 0..n {
            let a = &act[r * h..(r + 1) * h];
            let pred = a.iter().zip(&w2).map(|(x, w)| x * w).sum::<f64>() + b2;
            let err = pred - t[r];
            loss += err * err;
            let g = 2.0 * err / n as f64;
            g_b2 += g;
            for k in 0..h {
                g_w2[k] += g * a[k];
                let gh = g * w2[k] * (1.0 - a[k] * a[k]);
                g_b1[k] += gh;
                for i in 0..LAGS {
                    g_w1[i * h + k] += z[r][i] * gh;
                }
            }
        }
        losses.push(loss / n as f64);
        let lr = cfg.learning_rate;
        w1.iter_mut().zip(&g_w1).for_each(|(w, g)| *w -= lr * g);
        b1.iter_mut().zip(&g_b1).for_each(|(w, g)| *w -= lr * g);
        w2.iter_mut().zip(&g_w2).for_each(|(w, g)| *w -= lr * g);
        b2 -= lr * g_b2;
    }

    MlpFit {
        weights: MlpWeights {
            hidden: h,
            input_mean,
            input_scale,
            w1,
            b1,
            w2,
            b2,
            target_mean,
            target_scale,
        },
        losses,
    }
}

pub fn predict_mlp(w: &MlpWeights, lags: &[f64; LAGS]) -> f64 {
    let z = standardized_inputs(lags, &w.input_mean, &w.input_scale);
    let h = w.hidden;
    let mut out = w.b2;
    for k in 0..h {
        let mut a = w.b1[k];
        for i in 0..LAGS {
            a += z[i] * w.w1[i * h + k];
        }
        out += w.w2[k] * a.tanh();
    }
    lag_mean(lags) + w.target_mean + w.target_scale * out
}
