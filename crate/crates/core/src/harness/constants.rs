//! Pass/fail thresholds of the validation suites.
//!
//! These are deliberately not exposed as flags. Any change here must bump
//! [`THRESHOLDS_VERSION`], which is echoed in every report.

pub const THRESHOLDS_VERSION: &str = "1";

/// Monte Carlo sample size of a full run and of `--quick`.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
pub const QUICK_MC_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;

/// KS bound at the reference sample size.
pub const KS_MAX: f64 = 0.005;
pub const KS_REFERENCE_N: usize = 1_000_000;

/// Binomial band widths, in standard deviations.
pub const JOINT_BAND_SIGMAS: f64 = 3.0;
pub const FDD_BAND_SIGMAS: f64 = 4.0;

pub const MONOTONE_SLACK: f64 = 1e-12;
pub const MOMENT_REL_TOL: f64 = 1e-6;
pub const MULTIPLICATIVITY_TOL: f64 = 1e-8;
pub const ROUND_TRIP_TOL: f64 = 1e-6;
pub const N1_IDENTITY_TOL: f64 = 1e-14;
pub const STABLE_FIXED_POINT_TOL: f64 = 1e-12;
pub const ORIGIN_COLLAPSE_TOL: f64 = 1e-12;
pub const CHAPMAN_KOLMOGOROV_TOL: f64 = 1e-6;
pub const ENUM_DP_TOL: f64 = 1e-12;
pub const MARGINAL_TOL: f64 = 1e-8;
pub const K1_COLLAPSE_TOL: f64 = 1e-14;
pub const KERNEL_CHAIN_TOL: f64 = 1e-5;
pub const NORMING_RESIDUAL_TOL: f64 = 1e-6;

/// KS threshold for a sample of size `n`: [`KS_MAX`] at the reference size,
/// widened by `√(N_ref / n)` for smaller samples so the false-alarm rate
/// stays put under `--quick`.
pub fn ks_threshold(n: usize) -> f64 {
    KS_MAX * (KS_REFERENCE_N as f64 / n.max(1) as f64).sqrt().max(1.0)
}
