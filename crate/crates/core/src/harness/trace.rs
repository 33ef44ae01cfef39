//! Synthetic diurnal traffic trace.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::pipeline::TimePoint;

/// 5-minute readings per day.
pub const POINTS_PER_DAY: usize = 288;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub days: usize,
    pub seed: u64,
    /// Mean flow (vehicles / 5 min).
    pub level: f64,
    /// Amplitude of the daily cycle.
    pub daily_amplitude: f64,
    /// Standard deviation of the fluctuation around the daily cycle.
    pub noise_scale: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self { days: 14, seed: 7, level: 200.0, daily_amplitude: 20.0, noise_scale: 40.0 }
    }
}

fn start_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid start date")
}

/// Daily sinusoid (trough at midnight) plus a nonlinear autoregressive
/// fluctuation, so flow depends on recent readings in a way a linear model on
/// the lags cannot fully capture.
pub fn generate_trace(p: &TraceParams) -> Vec<TimePoint> {
    let n = p.days * POINTS_PER_DAY;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut u = vec![0.0f64; n];
    for i in 2..n {
        let (x1, x2) = (u[i - 1], u[i - 2]);
        let eps: f64 = StandardNormal.sample(&mut rng);
        u[i] = -0.7 * x1 + 2.5 * ((-x1 * x1 / 0.49).exp() - 0.6) - 0.3 * x2 + 0.4 * eps;
    }
    let mean = u.iter().sum::<f64>() / n.max(1) as f64;
    let sd = (u.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };

    let t0 = start_time();
    (0..n)
        .map(|i| {
            let phase = 2.0 * std::f64::consts::PI * (i % POINTS_PER_DAY) as f64 / POINTS_PER_DAY as f64;
            let daily = p.level + p.daily_amplitude * (phase - std::f64::consts::FRAC_PI_2).sin();
            let flow = daily + p.noise_scale * (u[i] - mean) / sd;
            // two decimals keep the CSV compact
            let flow = (flow * 100.0).round() / 100.0;
            TimePoint {
                timestamp: (t0 + Duration::minutes(5 * i as i64)).format("%Y-%m-%dT%H:%M:%S").to_string(),
                flow,
            }
        })
        .collect()
}
