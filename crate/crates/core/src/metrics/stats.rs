//! Sample mean with a two-sided 95% Student-t confidence interval.

use crate::error::{Error, Result};

/// Two-sided 95% critical values `t(0.975, df)` for `df = 1..=120`, rounded
/// to six decimals from the inverse Student-t CDF (`scipy.stats.t.ppf`).
/// Index `i` holds `df = i + 1`.
const T_975: [f64; 120] = [
    12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004, 2.262157, 2.228139, 2.200985,
    2.178813, 2.160369, 2.144787, 2.131450, 2.119905, 2.109816, 2.100922, 2.093024, 2.085963, 2.079614, 2.073873,
    2.068658, 2.063899, 2.059539, 2.055529, 2.051831, 2.048407, 2.045230, 2.042272, 2.039513, 2.036933, 2.034515,
    2.032245, 2.030108, 2.028094, 2.026192, 2.024394, 2.022691, 2.021075, 2.019541, 2.018082, 2.016692, 2.015368,
    2.014103, 2.012896, 2.011741, 2.010635, 2.009575, 2.008559, 2.007584, 2.006647, 2.005746, 2.004879, 2.004045,
    2.003241, 2.002465, 2.001717, 2.000995, 2.000298, 1.999624, 1.998972, 1.998341, 1.997730, 1.997138, 1.996564,
    1.996008, 1.995469, 1.994945, 1.994437, 1.993943, 1.993464, 1.992997, 1.992543, 1.992102, 1.991673, 1.991254,
    1.990847, 1.990450, 1.990063, 1.989686, 1.989319, 1.988960, 1.988610, 1.988268, 1.987934, 1.987608, 1.987290,
    1.986979, 1.986675, 1.986377, 1.986086, 1.985802, 1.985523, 1.985251, 1.984984, 1.984723, 1.984467, 1.984217,
    1.983972, 1.983731, 1.983495, 1.983264, 1.983038, 1.982815, 1.982597, 1.982383, 1.982173, 1.981967, 1.981765,
    1.981567, 1.981372, 1.981180, 1.980992, 1.980808, 1.980626, 1.980448, 1.980272, 1.980100, 1.979930,
];

/// Normal-limit value, the `df = inf` row of the table.
const Z_975: f64 = 1.959964;

/// `t(0.975, df)`. Beyond the table, interpolates linearly in `1/df`
/// between the `df = 120` row and the normal limit.
pub fn t_quantile_975(df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be positive");
    if df <= T_975.len() {
        return T_975[df - 1];
    }
    let last = T_975.len() as f64;
    let w = last / df as f64;
    Z_975 + (T_975[T_975.len() - 1] - Z_975) * w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
}

impl MeanCi {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

/// Mean and `t(0.975, n-1) * s / sqrt(n)` half-width of `samples`.
pub fn mean_ci95(samples: &[f64]) -> Result<MeanCi> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("confidence interval needs at least 2 samples, got {n}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half_width = t_quantile_975(n - 1) * var.sqrt() / (n as f64).sqrt();
    Ok(MeanCi { mean, half_width })
}
