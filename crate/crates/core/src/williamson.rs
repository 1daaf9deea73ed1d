//! Williamson transform, its inversion and the exact one-dimensional laws
//! `F_n` of the walk.

use crate::distributions::StepDistribution;
use crate::error::{KendallError, Result};

/// Tolerance for clamping inverted cdf values into `[0, 1]`.
pub const INVERSION_TOL: f64 = 1e-8;
/// Switch to the series form of `F̄_n` when `n (1 − G)` falls below this.
const TAIL_SERIES_THRESHOLD: f64 = 0.1;

/// `Ψ(r) = (1 − rᵅ)₊` for a ratio `r ≥ 0`.
#[inline]
pub fn psi_ratio(alpha: f64, r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else if r <= 0.0 {
        1.0
    } else {
        1.0 - r.powf(alpha)
    }
}

/// `Ψ(x/t) = (1 − (x/t)ᵅ)₊`.
pub fn psi(alpha: f64, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(KendallError::Domain(format!("psi requires t > 0, got {t}")));
    }
    if x < 0.0 {
        return Err(KendallError::Domain(format!("psi requires x >= 0, got {x}")));
    }
    Ok(psi_ratio(alpha, x / t))
}

/// `G(t)` for the step law.
pub fn williamson_g(d: &StepDistribution, t: f64) -> Result<f64> {
    d.williamson(t)
}

/// Recovers `F(t) = G(t) + (t/α) G′(t)` from a Williamson transform.
///
/// With `derivative` absent, `G′` is a central difference with step
/// `max(1e−6·t, 1e−9)`. Where the one-sided slopes disagree (a kink, i.e.
/// an atom of ν) the right slope is used, giving the right-continuous cdf.
pub fn invert_to_cdf<G>(g: G, derivative: Option<&dyn Fn(f64) -> f64>, alpha: f64, t: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(t > 0.0) {
        return Err(KendallError::Domain(format!("inversion requires t > 0, got {t}")));
    }
    let gt = g(t);
    let slope = match derivative {
        Some(dg) => dg(t),
        None => {
            let h = (1e-6 * t).max(1e-9);
            let left = (gt - g(t - h)) / h;
            let g1 = g(t + h);
            let right = (g1 - gt) / h;
            let kink = (right - left).abs() > 1e-3 * (right.abs() + left.abs()) + 1e-6;
            if kink {
                // second-order one-sided difference
                (4.0 * g1 - 3.0 * gt - g(t + 2.0 * h)) / (2.0 * h)
            } else {
                0.5 * (left + right)
            }
        }
    };
    let f = gt + t / alpha * slope;
    if !(-INVERSION_TOL..=1.0 + INVERSION_TOL).contains(&f) {
        return Err(KendallError::Inversion { value: f });
    }
    Ok(f.clamp(0.0, 1.0))
}

fn check_steps(n: u64) -> Result<()> {
    if n == 0 {
        Err(KendallError::Domain("number of steps must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[inline]
pub(crate) fn powu(x: f64, n: u64) -> f64 {
    if n <= i32::MAX as u64 {
        x.powi(n as i32)
    } else {
        x.powf(n as f64)
    }
}

/// `F_n(t) = G(t)^{n−1} [n t^{−α} H(t) + G(t)]`, the cdf of `X_n`.
pub fn cdf_n(d: &StepDistribution, n: u64, t: f64) -> Result<f64> {
    check_steps(n)?;
    if n == 1 {
        return Ok(d.cdf(t));
    }
    if t <= 0.0 {
        // X_n = 0 requires every step to vanish
        return Ok(powu(d.cdf(0.0), n));
    }
    let (g, h) = d.transform_pair(t)?;
    let u = t.powf(-d.alpha());
    Ok((powu(g, n - 1) * (n as f64 * u * h + g)).clamp(0.0, 1.0))
}

/// `F̄_n(t) = 1 − F_n(t)`.
///
/// With `b = F̄(t)`, `a = t^{−α} H(t)` and `q = a + b = 1 − G(t)`,
/// `F̄_n = Σ_{j=1}^{n} C(n,j) (−1)^{j+1} q^{j−1} (b − (j−1) a)`, which is
/// summed directly when `n q` is small so that far tails keep full
/// relative precision.
pub fn tail_n(d: &StepDistribution, n: u64, t: f64) -> Result<f64> {
    check_steps(n)?;
    if n == 1 {
        return Ok(d.tail(t));
    }
    if t <= 0.0 {
        return Ok(1.0 - powu(d.cdf(0.0), n));
    }
    let b = d.tail(t);
    let a = d.trunc_moment(t)? * t.powf(-d.alpha());
    let q = a + b;
    let nf = n as f64;
    if nf * q < TAIL_SERIES_THRESHOLD {
        let mut sum = 0.0;
        // C(n, j) q^{j−1}, starting at j = 1
        let mut binom_q = nf;
        let mut j = 1u64;
        loop {
            let jf = j as f64;
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            let term = sign * binom_q * (b - (jf - 1.0) * a);
            sum += term;
            if j == n || (term.abs() <= 1e-18 * sum.abs() && j > 2) {
                break;
            }
            binom_q *= (nf - jf) / (jf + 1.0) * q;
            j += 1;
        }
        Ok(sum.clamp(0.0, 1.0))
    } else {
        Ok((1.0 - cdf_n(d, n, t)?).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Family, StepDistribution};

    fn dist(family: Family, alpha: f64) -> StepDistribution {
        StepDistribution::with_alpha(family, alpha).unwrap()
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(1.0, 0.0, 5.0).unwrap(), 1.0);
        assert_eq!(psi(1.0, 5.0, 5.0).unwrap(), 0.0);
        assert_eq!(psi(2.0, 1.0, 2.0).unwrap(), 0.75);
        assert!(psi(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn williamson_examples() {
        let d = dist(Family::Dirac1, 1.0);
        assert_eq!(williamson_g(&d, 2.0).unwrap(), 0.5);
        let u = dist(Family::Uniform01, 1.0);
        assert!((williamson_g(&u, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let l = dist(Family::LackOfMemory, 1.0);
        assert_eq!(williamson_g(&l, 0.5).unwrap(), 0.25);
        assert_eq!(williamson_g(&d, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn inversion_examples() {
        let f = invert_to_cdf(|t: f64| (1.0 - 1.0 / t).max(0.0), None, 1.0, 2.0).unwrap();
        assert!((f - 1.0).abs() < 1e-8);
        let f = invert_to_cdf(|t: f64| (-1.0 / t).exp(), None, 1.0, 1.0).unwrap();
        assert!((f - 2.0 * (-1.0f64).exp()).abs() < 1e-9);
        let f = invert_to_cdf(|_| 0.3, None, 1.0, 4.0).unwrap();
        assert!((f - 0.3).abs() < 1e-15);
        // analytic derivative route
        let dg = |t: f64| 1.0 / (t * t);
        let f = invert_to_cdf(|t: f64| 1.0 - 1.0 / t, Some(&dg), 1.0, 3.0).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inversion_rejects_invalid_transform() {
        // decreasing "transform" yields a negative cdf
        let r = invert_to_cdf(|t: f64| 1.0 / (t * t), None, 1.0, 2.0);
        assert!(matches!(r, Err(KendallError::Inversion { .. })));
    }

    #[test]
    fn inversion_at_atom_is_right_continuous() {
        let d = dist(Family::Dirac1, 1.0);
        let f = invert_to_cdf(|t| d.williamson(t).unwrap(), None, 1.0, 1.0).unwrap();
        assert!((f - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cdf_n_examples() {
        let d = dist(Family::Dirac1, 1.0);
        assert!((cdf_n(&d, 2, 2.0).unwrap() - 0.75).abs() < 1e-15);
        let u = dist(Family::Uniform01, 1.0);
        assert!((cdf_n(&u, 2, 2.0).unwrap() - 0.9375).abs() < 1e-15);
        let l = dist(Family::LackOfMemory, 1.0);
        assert!((cdf_n(&l, 2, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(cdf_n(&d, 0, 1.0).is_err());
    }

    #[test]
    fn tail_n_examples() {
        let d = dist(Family::Dirac1, 1.0);
        assert!((tail_n(&d, 2, 2.0).unwrap() - 0.25).abs() < 1e-15);
        // F̄₂(x) = x^{−2} exactly for δ₁, deep in the tail
        for &x in &[10.0, 1e3, 1e6] {
            let r = tail_n(&d, 2, x).unwrap() * x * x;
            assert!((r - 1.0).abs() < 1e-12, "x={x}: {r}");
        }
        let s = dist(Family::StableLimit { m: 1.0 }, 1.0);
        let expect = 1.0 - 1.3 * (-0.3f64).exp();
        assert!((tail_n(&s, 3, 10.0).unwrap() - expect).abs() < 1e-15);
        let g = dist(Family::Gamma { shape: 2.0, rate: 1.0 }, 1.0);
        assert_eq!(tail_n(&g, 1, 3.0).unwrap(), g.tail(3.0));
    }

    #[test]
    fn tail_series_agrees_with_direct_difference() {
        for d in [
            dist(Family::Uniform01, 1.0),
            dist(Family::Gamma { shape: 2.0, rate: 1.0 }, 0.5),
            dist(Family::ParetoMix { p: 0.3 }, 1.0),
            dist(Family::StableLimit { m: 2.0 }, 2.0),
        ] {
            for &n in &[2u64, 5, 10] {
                for &x in &[30.0, 100.0, 1e3] {
                    let direct = 1.0 - cdf_n(&d, n, x).unwrap();
                    let series = tail_n(&d, n, x).unwrap();
                    assert!((direct - series).abs() < 1e-12, "{} n={n} x={x}: {direct} vs {series}", d.name());
                }
            }
        }
    }
}
