//! Tail expansions, stable limit laws, norming sequences and convergence
//! diagnostics for the rescaled walk.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{Family, KendallIndex, StepDistribution};
use crate::error::{KendallError, Result};
use crate::williamson::cdf_n;

/// Two-term approximation `n F̄(x) + ½ n(n−1) H(x)² x^{−2α}` of `F̄_n(x)`.
pub fn tail_expansion(d: &StepDistribution, n: u64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(KendallError::Domain(format!("x must be positive, got {x}")));
    }
    if n == 0 {
        return Err(KendallError::Domain("n must be at least 1".into()));
    }
    let nf = n as f64;
    let w = d.trunc_moment(x)? * x.powf(-d.alpha());
    Ok(nf * d.tail(x) + 0.5 * nf * (nf - 1.0) * w * w)
}

/// Which term of the tail expansion governs `F̄_n` for large `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum TailRegime {
    /// `F̄ ∈ RV_{θ−α}`: `F̄_n ~ n F̄`.
    RegVarDominates { theta: f64 },
    /// Finite α-moment with `F̄` not `o(x^{−2α})`: both terms matter.
    FiniteMomentMixed,
    /// `F̄ = o(x^{−2α})`: `F̄_n ~ ½ n(n−1) m² x^{−2α}`.
    SecondTermDominates,
}

/// Classifies the tail regime from family metadata, falling back to a
/// log-log slope probe of `F̄` for generic laws.
pub fn corollary_regime(d: &StepDistribution) -> Result<TailRegime> {
    let a = d.alpha();
    if let Some(rv) = d.regvar_tail() {
        return Ok(TailRegime::RegVarDominates { theta: rv.theta() });
    }
    match d.family() {
        Family::Dirac1 | Family::LackOfMemory | Family::Uniform01 | Family::Gamma { .. } => {
            Ok(TailRegime::SecondTermDominates)
        }
        Family::StableLimit { .. } => Ok(TailRegime::FiniteMomentMixed),
        Family::ParetoMix { p } => {
            // here p > α or p = 1; the tail is (1 − p) x^{−p}
            if *p == 1.0 || *p > 2.0 * a {
                Ok(TailRegime::SecondTermDominates)
            } else {
                Ok(TailRegime::FiniteMomentMixed)
            }
        }
        Family::Generic(g) => probe_regime(d, g.support().1.max(1.0)),
    }
}

const SLOPE_AGREEMENT: f64 = 0.05;

fn probe_regime(d: &StepDistribution, x0: f64) -> Result<TailRegime> {
    let a = d.alpha();
    let xs = [x0, 10.0 * x0, 100.0 * x0];
    let tails: Vec<f64> = xs.iter().map(|&x| d.tail(x)).collect();
    if tails[2] <= 0.0 {
        return if d.alpha_moment().is_finite() {
            Ok(TailRegime::SecondTermDominates)
        } else {
            Err(KendallError::Classification("tail vanishes but the α-moment diverges".into()))
        };
    }
    let s1 = (tails[1] / tails[0]).log10();
    let s2 = (tails[2] / tails[1]).log10();
    if (s1 - s2).abs() > SLOPE_AGREEMENT {
        return Err(KendallError::Classification(format!(
            "log-log slope of the tail did not stabilize ({s1:.3} vs {s2:.3})"
        )));
    }
    let theta = a + s2;
    if theta >= 0.0 && theta < a {
        Ok(TailRegime::RegVarDominates { theta })
    } else if s2 < -2.0 * a - SLOPE_AGREEMENT {
        Ok(TailRegime::SecondTermDominates)
    } else if d.alpha_moment().is_finite() {
        Ok(TailRegime::FiniteMomentMixed)
    } else {
        Err(KendallError::Classification(format!("tail slope {s2:.3} fits no regime")))
    }
}

/// Parameters of the two stable limit families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitKind {
    FiniteMoment { m: f64 },
    RegVar { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitLaw {
    pub kind: LimitKind,
    pub alpha: KendallIndex,
}

impl LimitLaw {
    pub fn finite_moment(m: f64, alpha: KendallIndex) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(KendallError::InvalidParameter(format!("m must be positive and finite, got {m}")));
        }
        Ok(Self { kind: LimitKind::FiniteMoment { m }, alpha })
    }

    pub fn regvar(theta: f64, alpha: KendallIndex) -> Result<Self> {
        if !(0.0..alpha.value()).contains(&theta) {
            return Err(KendallError::InvalidParameter(format!(
                "theta must lie in [0, alpha = {}), got {theta}",
                alpha.value()
            )));
        }
        Ok(Self { kind: LimitKind::RegVar { theta }, alpha })
    }

    /// `(c, κ, γ)` with the cdf written as `(1 + y) e^{−κ y}`, `y = c x^{−γ}`.
    ///
    /// Under regular variation `1 − G(a_n x) ~ (F̄ + H/tᵅ)(a_n x)` picks up
    /// the tail as well as the truncated moment; by Karamata `tᵅ F̄ / H → θ/(α−θ)`,
    /// so the exponent carries `κ = α/(α−θ)`. At `θ = 0` this is 1.
    fn shape(&self) -> (f64, f64, f64) {
        let a = self.alpha.value();
        match self.kind {
            LimitKind::FiniteMoment { m } => (m, 1.0, a),
            LimitKind::RegVar { theta } => (1.0, a / (a - theta), a - theta),
        }
    }
}

pub fn limit_cdf(law: &LimitLaw, x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let (c, kappa, gamma) = law.shape();
    let y = c * x.powf(-gamma);
    if y.is_infinite() {
        return 0.0;
    }
    (1.0 + y) * (-kappa * y).exp()
}

/// Density `γ y e^{−κy} (κ(1 + y) − 1) / x` with `y = c x^{−γ}`: the
/// derivative of [`limit_cdf`]. For the finite-moment law this is
/// `α m² x^{−2α−1} e^{−m x^{−α}}`.
pub fn limit_pdf(law: &LimitLaw, x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let (c, kappa, gamma) = law.shape();
    let y = c * x.powf(-gamma);
    if y.is_infinite() || kappa * y > 745.0 {
        return 0.0;
    }
    gamma * y * (-kappa * y).exp() * (kappa * (1.0 + y) - 1.0) / x
}

/// How a norming constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormingMethod {
    /// `n^{1/α}` when the α-moment is finite, numeric inversion otherwise.
    Auto,
    ClosedForm,
    NumericInverse,
}

/// Options of the numeric inversion of `W(a) = aᵅ / H(a) = n`.
#[derive(Debug, Clone, Copy)]
pub struct NormingOptions {
    /// Roots are searched beyond this point; defaults to the 0.99 quantile of ν.
    pub x_min: Option<f64>,
    pub rel_tol: f64,
}

impl Default for NormingOptions {
    fn default() -> Self {
        Self { x_min: None, rel_tol: 1e-10 }
    }
}

const SEARCH_CEILING: f64 = 1e30;

/// Norming constant `a_n` with `H(a_n) / a_nᵅ = 1/n`, or `n^{1/α}`.
pub fn norming_sequence(d: &StepDistribution, n: u64, method: NormingMethod) -> Result<f64> {
    norming_with(d, n, method, NormingOptions::default())
}

pub fn norming_with(d: &StepDistribution, n: u64, method: NormingMethod, opts: NormingOptions) -> Result<f64> {
    if n == 0 {
        return Err(KendallError::Domain("n must be at least 1".into()));
    }
    let a = d.alpha();
    let closed = (n as f64).powf(1.0 / a);
    match method {
        NormingMethod::ClosedForm => Ok(closed),
        NormingMethod::Auto if d.alpha_moment().is_finite() => Ok(closed),
        _ => solve_norming(d, n as f64, opts),
    }
}

fn solve_norming(d: &StepDistribution, n: f64, opts: NormingOptions) -> Result<f64> {
    let a = d.alpha();
    let x_min = opts.x_min.unwrap_or_else(|| d.quantile(0.99)).max(f64::MIN_POSITIVE);
    // f > 0 ⇔ W(x) < n
    let f = |x: f64| -> Result<f64> {
        let h = d.trunc_moment(x)?;
        Ok(if h <= 0.0 { f64::NEG_INFINITY } else { n.ln() + h.ln() - a * x.ln() })
    };
    let mut lo = x_min;
    let flo = f(lo)?;
    if flo < 0.0 {
        return Err(KendallError::Search(format!("x^α/H(x) already exceeds n = {n} at x_min = {x_min}")));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut hi = lo.max(1.0).max(n.powf(1.0 / a));
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > SEARCH_CEILING {
            return Err(KendallError::Search(format!("no sign change below {SEARCH_CEILING:e}")));
        }
    }
    while (hi - lo) > opts.rel_tol * hi {
        let mid = (lo * hi).sqrt().clamp(lo, hi);
        let mid = if mid <= lo || mid >= hi { 0.5 * (lo + hi) } else { mid };
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Norming constants for several `n`.
#[derive(Debug, Clone, Serialize)]
pub struct NormingSequence {
    pub values: Vec<(u64, f64)>,
    pub method: NormingMethod,
}

impl NormingSequence {
    pub fn compute(d: &StepDistribution, ns: &[u64], method: NormingMethod) -> Result<Self> {
        let values = ns.iter().map(|&n| norming_sequence(d, n, method).map(|a| (n, a))).collect::<Result<_>>()?;
        Ok(Self { values, method })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagnosticRow {
    pub n: u64,
    pub a_n: f64,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticTable {
    pub rows: Vec<DiagnosticRow>,
    /// Distances are nonincreasing along the rows up to 10% slack, or
    /// already below [`DIAGNOSTIC_FLOOR`].
    pub monotone: bool,
}

/// Slack allowed when checking that sup-distances shrink with `n`.
pub const DIAGNOSTIC_SLACK: f64 = 0.10;
/// Distances below this are rounding noise and count as converged.
pub const DIAGNOSTIC_FLOOR: f64 = 1e-12;

impl DiagnosticTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,a_n,sup_distance")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.n, r.a_n, r.sup_distance)?;
        }
        Ok(())
    }
}

/// `sup_x |F_n(a_n x) − limit_cdf(x)|` over `grid`, for each `n`.
pub fn convergence_diagnostic(
    d: &StepDistribution,
    ns: &[u64],
    law: &LimitLaw,
    grid: &[f64],
    method: NormingMethod,
) -> Result<DiagnosticTable> {
    let rows = ns
        .par_iter()
        .map(|&n| {
            let a_n = norming_sequence(d, n, method)?;
            let mut sup: f64 = 0.0;
            for &x in grid {
                let gap = (cdf_n(d, n, a_n * x)? - limit_cdf(law, x)).abs();
                sup = sup.max(gap);
            }
            Ok(DiagnosticRow { n, a_n, sup_distance: sup })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| {
        w[1].sup_distance <= w[0].sup_distance * (1.0 + DIAGNOSTIC_SLACK) || w[1].sup_distance <= DIAGNOSTIC_FLOOR
    });
    Ok(DiagnosticTable { rows, monotone })
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
