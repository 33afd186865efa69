//! Validation harness: k-fold cross-validation with Top-X statistics, the
//! `w` sweep, the timing bench and the synthetic corpus generator.

mod bench;
mod crossval;
mod synth;

pub use bench::{
    time_median, timing_bench, BenchConfig, BenchRow, BenchTable, ALG_DIFF, ALG_FINGERPRINT, ALG_GRID, ALG_SINGLE,
};
pub use crossval::{crossval, kfold_partition, true_class_rank, w_sweep, CrossvalReport, TopXRow, TopXTable, WSweepRow};
pub use synth::{class_id, synth_generate, synth_reference, synth_traces, trace_file, SynthConfig};

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided 95% quantile `t(0.975, 9)` for ten folds.
pub const T_QUANTILE_975_DF9: f64 = 2.262_157_163;

/// `t(0.975, df)`.
pub fn t_quantile_975(df: usize) -> f64 {
    if df == 9 {
        return T_QUANTILE_975_DF9;
    }
    StudentsT::new(0.0, 1.0, df as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::NAN)
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    if xs.iter().all(|x| *x == xs[0]) {
        return (xs[0], 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Half-width of the 95% confidence interval of a mean over `k` folds:
/// `t(0.975, k-1) / sqrt(k) * sd`.
pub fn ci95_half_width(per_fold: &[f64]) -> f64 {
    let k = per_fold.len();
    if k < 2 {
        return 0.0;
    }
    let (_, sd) = mean_std(per_fold);
    t_quantile_975(k - 1) / (k as f64).sqrt() * sd
}
