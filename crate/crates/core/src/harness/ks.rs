use crate::error::{KendallError, Result};
use crate::simulator::WalkEnsemble;

/// Smallest sample accepted by [`ks_statistic`].
pub const KS_MIN_SAMPLE: usize = 100;

/// `sup_t |F_N(t) − F(t)|` for the terminal values of `e`.
///
/// Both one-sided gaps are taken at every distinct sample value, using the
/// left limit `F(v⁻)` so that atoms of the exact law are handled correctly.
pub fn ks_statistic<F: Fn(f64) -> f64>(e: &WalkEnsemble, exact_cdf: F) -> Result<f64> {
    ks_sorted(e.sorted(), exact_cdf)
}

/// [`ks_statistic`] for an already sorted sample.
pub fn ks_sorted<F: Fn(f64) -> f64>(sorted: &[f64], exact_cdf: F) -> Result<f64> {
    let n = sorted.len();
    if n < KS_MIN_SAMPLE {
        return Err(KendallError::InvalidParameter(format!(
            "KS statistic needs at least {KS_MIN_SAMPLE} samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i + 1;
        while j < n && sorted[j] == v {
            j += 1;
        }
        let below = i as f64 / nf;
        let upto = j as f64 / nf;
        d = d.max((upto - exact_cdf(v)).abs());
        d = d.max((below - exact_cdf(v.next_down())).abs());
        i = j;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stratified_uniform_sample_is_close() {
        let n = 10_000;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_sorted(&v, |t| t.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_against_continuous_cdf() {
        let v = vec![0.3; 200];
        let d = ks_sorted(&v, |t| t.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn atom_matches_exactly() {
        let v = vec![1.0; 500];
        let d = ks_sorted(&v, |t| if t >= 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn tiny_samples_are_rejected() {
        assert!(ks_sorted(&[0.5], |t| t).is_err());
    }
}
