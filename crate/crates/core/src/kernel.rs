//! Kendall convolution of point masses and the walk's transition kernel
//! `P_n(x, ·) = δ_x ⊳_α ν^{⊳n}`, exposed through its cdf and truncated
//! α-moment.

use crate::distributions::StepDistribution;
use crate::error::{KendallError, Result};
use crate::williamson::{powu, psi_ratio};

/// `δ_x ⊳_α δ_y = T_M(ϱᵅ π_{2α} + (1 − ϱᵅ) δ₁)` with `M = max`, `ϱ = min/max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointConvolution {
    pub max: f64,
    pub weight_atom: f64,
    pub weight_pareto: f64,
    alpha: f64,
}

impl PointConvolution {
    /// Cdf of the mixture: atom at `M` plus `M·θ`, `θ ~ π_{2α}`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < self.max || (self.max == 0.0 && t < 0.0) {
            return 0.0;
        }
        if self.max == 0.0 {
            return 1.0;
        }
        let pareto = 1.0 - (self.max / t).powf(2.0 * self.alpha);
        self.weight_atom + self.weight_pareto * pareto
    }
}

pub fn point_mass_convolution(x: f64, y: f64, alpha: f64) -> Result<PointConvolution> {
    if x < 0.0 || y < 0.0 {
        return Err(KendallError::Domain(format!("point masses must sit in [0, ∞), got {x}, {y}")));
    }
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let weight_pareto = if hi == 0.0 { 0.0 } else { (lo / hi).powf(alpha) };
    Ok(PointConvolution { max: hi, weight_atom: 1.0 - weight_pareto, weight_pareto, alpha })
}

/// `(δ_x ⊳ δ_y)((0, t]) = (1 − xᵅyᵅ / t^{2α}) 1{x < t, y < t}`.
pub fn delta_conv_cdf(x: f64, y: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(KendallError::Domain(format!("threshold must be positive, got {t}")));
    }
    if x < 0.0 || y < 0.0 {
        return Err(KendallError::Domain("point masses must be nonnegative".into()));
    }
    if x >= t || y >= t {
        return Ok(0.0);
    }
    Ok(1.0 - ((x / t) * (y / t)).powf(alpha))
}

/// Start point, number of steps and threshold of a kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuery {
    pub start: f64,
    pub steps: u64,
    pub threshold: f64,
}

impl KernelQuery {
    pub fn new(start: f64, steps: u64, threshold: f64) -> Result<Self> {
        if !(start >= 0.0) {
            return Err(KendallError::Domain(format!("start must be nonnegative, got {start}")));
        }
        if steps == 0 {
            return Err(KendallError::Domain("kernel needs at least one step".into()));
        }
        if !(threshold > 0.0) {
            return Err(KendallError::Domain(format!("threshold must be positive, got {threshold}")));
        }
        Ok(Self { start, steps, threshold })
    }
}

/// `P_n(x, (0, t]) = G(t)ⁿ + n t^{−α} H(t) G(t)^{n−1} Ψ(x/t)` for `x ≤ t`, else 0.
///
/// The walk never moves below its start, so `P_n(x, ·)` carries an atom
/// of mass `G(x)ⁿ` at `x`; the value at `t = x` is that atom.
pub fn kernel_cdf(d: &StepDistribution, q: &KernelQuery) -> Result<f64> {
    let (x, n, t) = (q.start, q.steps, q.threshold);
    if x > t {
        return Ok(0.0);
    }
    let (g, h) = d.transform_pair(t)?;
    let a = d.alpha();
    let gn1 = powu(g, n - 1);
    let v = g * gn1 + n as f64 * h * t.powf(-a) * gn1 * psi_ratio(a, x / t);
    Ok(v.clamp(0.0, 1.0))
}

/// `∫₀ᵗ wᵅ P_n(x, dw) = xᵅ G(t)ⁿ + n G(t)^{n−1} H(t) Ψ(x/t)` for `x ≤ t`, else 0.
pub fn kernel_trunc_moment(d: &StepDistribution, q: &KernelQuery) -> Result<f64> {
    let (x, n, t) = (q.start, q.steps, q.threshold);
    if x > t {
        return Ok(0.0);
    }
    let (g, h) = d.transform_pair(t)?;
    let a = d.alpha();
    let gn1 = powu(g, n - 1);
    Ok(x.powf(a) * g * gn1 + n as f64 * gn1 * h * psi_ratio(a, x / t))
}
