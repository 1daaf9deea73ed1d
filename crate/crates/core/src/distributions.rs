//! Unit-step laws on `[0, ∞)` and the three functionals every walk formula
//! consumes: the cdf `F`, the truncated α-moment `H(t) = ∫₀ᵗ yᵅ F(dy)` and the
//! Williamson transform `G(t) = F(t) − t^{−α} H(t)`.
//!
//! Six families have closed forms. [`GenericCdf`] wraps any monotone cdf and
//! obtains `H` by adaptive quadrature of
//! `H(t) = α ∫₀ᵗ x^{α−1} (F(t) − F(x)) dx`.
//!
//! ParetoMix parametrization: `ν = p δ₁ + (1 − p) π_p` where `π_p` is the
//! Pareto law on `[1, ∞)` with tail `x^{−p}`. The Pareto index is `p`
//! itself and is unrelated to the walk's `α`; the α-moment is finite only
//! for `p > α`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{KendallError, Result};
use crate::quadrature;
use crate::special::{gamma_p, gamma_q};

/// The convolution parameter α > 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct KendallIndex(f64);

impl KendallIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Self(alpha))
        } else {
            Err(KendallError::InvalidParameter(format!("alpha must be positive and finite, got {alpha}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Tail metadata: `F̄` is regularly varying with index `θ − α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegVarTail {
    theta: f64,
}

impl RegVarTail {
    pub fn new(theta: f64, alpha: KendallIndex) -> Result<Self> {
        if (0.0..alpha.value()).contains(&theta) {
            Ok(Self { theta })
        } else {
            Err(KendallError::InvalidParameter(format!(
                "tail index theta must lie in [0, alpha = {}), got {theta}",
                alpha.value()
            )))
        }
    }

    pub fn theta(self) -> f64 {
        self.theta
    }
}

type CdfFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied cdf evaluated through quadrature.
#[derive(Clone)]
pub struct GenericCdf {
    cdf: Arc<CdfFn>,
    support: (f64, f64),
    /// Error target for `H(t)`: absolute while `H < 1`, relative beyond,
    /// and never below the rounding floor `64 ε tᵅ`.
    quad_tol: f64,
    nodes: Arc<Vec<f64>>,
    divergence_ratio: f64,
    tail: Option<f64>,
}

impl fmt::Debug for GenericCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericCdf")
            .field("support", &self.support)
            .field("quad_tol", &self.quad_tol)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// `H(10⁶) / H(10⁵)` above this ratio declares the α-moment infinite.
pub const DEFAULT_DIVERGENCE_RATIO: f64 = 1.01;
const MONOTONE_SLACK: f64 = 1e-12;

impl GenericCdf {
    /// Wraps a callable cdf. `support` is a hint `[lo, hi]` locating the
    /// bulk of the mass; it seeds quadrature break points and quantile
    /// brackets. The callable is sampled on a grid and rejected if it
    /// decreases or leaves `[0, 1]`.
    pub fn from_fn<F>(cdf: F, support: (f64, f64), quad_tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi) = support;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(KendallError::InvalidParameter(format!("bad support hint [{lo}, {hi}]")));
        }
        if !(quad_tol > 0.0) {
            return Err(KendallError::InvalidParameter(format!("quad_tol must be positive, got {quad_tol}")));
        }
        let mut prev = 0.0;
        let top = 4.0 * hi;
        for i in 0..=2000 {
            let x = top * i as f64 / 2000.0;
            let v = cdf(x);
            if !(-MONOTONE_SLACK..=1.0 + MONOTONE_SLACK).contains(&v) {
                return Err(KendallError::InvalidParameter(format!("cdf({x}) = {v} outside [0, 1]")));
            }
            if v < prev - MONOTONE_SLACK {
                return Err(KendallError::InvalidParameter(format!("cdf decreases near x = {x}")));
            }
            prev = v;
        }
        Ok(Self {
            cdf: Arc::new(cdf),
            support,
            quad_tol,
            nodes: Arc::new(Vec::new()),
            divergence_ratio: DEFAULT_DIVERGENCE_RATIO,
            tail: None,
        })
    }

    /// Piecewise-linear cdf through the table `(x, F(x))`. `x` must be
    /// strictly increasing and nonnegative; values are clamped to `[0, 1]`.
    /// The cdf is 0 below the first node and 1 from the last node on.
    pub fn from_table(xs: Vec<f64>, fs: Vec<f64>, quad_tol: f64) -> Result<Self> {
        if xs.len() != fs.len() || xs.len() < 2 {
            return Err(KendallError::InvalidParameter("cdf table needs at least two (x, F) rows".into()));
        }
        if xs[0] < 0.0 || xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
            return Err(KendallError::InvalidParameter(
                "cdf table x column must be nonnegative and strictly increasing".into(),
            ));
        }
        let fs: Vec<f64> = fs.into_iter().map(|f| f.clamp(0.0, 1.0)).collect();
        if fs.windows(2).any(|w| w[1] < w[0]) {
            return Err(KendallError::InvalidParameter("cdf table values must be nondecreasing".into()));
        }
        let support = (xs[0], xs[xs.len() - 1]);
        let nodes = Arc::new(xs.clone());
        let (tx, tf) = (Arc::new(xs), Arc::new(fs));
        let cdf = move |t: f64| -> f64 {
            let last = tx.len() - 1;
            if t < tx[0] {
                0.0
            } else if t >= tx[last] {
                1.0
            } else {
                let i = tx.partition_point(|&x| x <= t) - 1;
                let w = (t - tx[i]) / (tx[i + 1] - tx[i]);
                tf[i] + w * (tf[i + 1] - tf[i])
            }
        };
        let mut g = Self::from_fn(cdf, support, quad_tol)?;
        g.nodes = nodes;
        Ok(g)
    }

    /// Reads a two-column `x,F(x)` CSV table. A header row is allowed.
    pub fn from_csv(path: &Path, quad_tol: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| KendallError::Parse(format!("{}: {e}", path.display())))?;
        let (mut xs, mut fs) = (Vec::new(), Vec::new());
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| KendallError::Parse(e.to_string()))?;
            if record.len() != 2 {
                return Err(KendallError::Parse(format!("row {}: expected 2 columns", line + 1)));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(x), Ok(f)) => {
                    xs.push(x);
                    fs.push(f);
                }
                _ if line == 0 => continue,
                _ => return Err(KendallError::Parse(format!("row {}: not numeric", line + 1))),
            }
        }
        Self::from_table(xs, fs, quad_tol)
    }

    pub fn with_divergence_ratio(mut self, ratio: f64) -> Self {
        self.divergence_ratio = ratio;
        self
    }

    /// Attaches regular-variation metadata (the θ of `F̄ ∈ RV_{θ−α}`).
    pub fn with_regvar_theta(mut self, theta: f64) -> Self {
        self.tail = Some(theta);
        self
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            (self.cdf)(t).clamp(0.0, 1.0)
        }
    }

    fn trunc_moment(&self, alpha: f64, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let ft = self.eval(t);
        let mut points = vec![0.0];
        points.extend(
            [self.support.0, self.support.1].iter().chain(self.nodes.iter()).copied().filter(|&x| x > 0.0 && x < t),
        );
        points.push(t);
        points.sort_by(f64::total_cmp);
        points.dedup();
        let integrand = |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            alpha * x.powf(alpha - 1.0) * (ft - self.eval(x))
        };
        // F is only known to rounding, which bounds H(t) to about ε·tᵅ
        let floor = 64.0 * f64::EPSILON * t.powf(alpha);
        let est = quadrature::integrate_mixed(integrand, &points, self.quad_tol.max(floor), self.quad_tol)?;
        Ok(est.value.max(0.0))
    }
}

/// Step-law families.
#[derive(Debug, Clone)]
pub enum Family {
    Dirac1,
    ParetoMix { p: f64 },
    LackOfMemory,
    StableLimit { m: f64 },
    Uniform01,
    Gamma { shape: f64, rate: f64 },
    Generic(GenericCdf),
}

/// A step distribution ν together with the walk parameter α.
#[derive(Debug, Clone)]
pub struct StepDistribution {
    alpha: KendallIndex,
    family: Family,
    moment: f64,
    // Γ(a+α) / (Γ(a) bᵅ) for the Gamma family
    gamma_scale: f64,
}

impl StepDistribution {
    pub fn new(family: Family, alpha: KendallIndex) -> Result<Self> {
        let a = alpha.value();
        let invalid = |msg: String| Err(KendallError::InvalidParameter(msg));
        let mut gamma_scale = 0.0;
        let moment = match &family {
            Family::Dirac1 => 1.0,
            Family::ParetoMix { p } => {
                let p = *p;
                if !(p > 0.0 && p <= 1.0) {
                    return invalid(format!("pareto_mix weight p must lie in (0, 1], got {p}"));
                }
                if p == 1.0 {
                    1.0
                } else if p > a {
                    p * (1.0 - a) / (p - a)
                } else {
                    f64::INFINITY
                }
            }
            Family::LackOfMemory => 0.5,
            Family::StableLimit { m } => {
                if !(*m > 0.0 && m.is_finite()) {
                    return invalid(format!("stable parameter m must be positive, got {m}"));
                }
                *m
            }
            Family::Uniform01 => 1.0 / (a + 1.0),
            Family::Gamma { shape, rate } => {
                if !(*shape > 0.0 && shape.is_finite()) {
                    return invalid(format!("gamma shape must be positive, got {shape}"));
                }
                if !(*rate > 0.0 && rate.is_finite()) {
                    return invalid(format!("gamma rate must be positive, got {rate}"));
                }
                gamma_scale = (ln_gamma(shape + a) - ln_gamma(*shape) - a * rate.ln()).exp();
                gamma_scale
            }
            Family::Generic(_) => 0.0,
        };
        let mut d = Self { alpha, family, moment, gamma_scale };
        if let Family::Generic(g) = &d.family {
            d.moment = generic_moment(g, a)?;
        }
        Ok(d)
    }

    /// Convenience constructor validating α as well.
    pub fn with_alpha(family: Family, alpha: f64) -> Result<Self> {
        Self::new(family, KendallIndex::new(alpha)?)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.value()
    }

    pub fn index(&self) -> KendallIndex {
        self.alpha
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Short machine name of the family.
    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Dirac1 => "dirac",
            Family::ParetoMix { .. } => "pareto_mix",
            Family::LackOfMemory => "lack_of_memory",
            Family::StableLimit { .. } => "stable",
            Family::Uniform01 => "uniform",
            Family::Gamma { .. } => "gamma",
            Family::Generic(_) => "generic",
        }
    }

    /// Cumulative distribution function `F(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let a = self.alpha();
        match &self.family {
            Family::Dirac1 => indicator(t >= 1.0),
            Family::ParetoMix { p } => {
                if t < 1.0 {
                    0.0
                } else {
                    1.0 - (1.0 - p) * t.powf(-p)
                }
            }
            Family::LackOfMemory => {
                if t < 1.0 {
                    t.powf(a)
                } else {
                    1.0
                }
            }
            Family::StableLimit { m } => {
                if t == 0.0 {
                    0.0
                } else {
                    let y = m * t.powf(-a);
                    (1.0 + y) * (-y).exp()
                }
            }
            Family::Uniform01 => t.min(1.0),
            Family::Gamma { shape, rate } => gamma_p(*shape, rate * t),
            Family::Generic(g) => g.eval(t),
        }
    }

    /// Tail `F̄(t) = 1 − F(t)`, evaluated without cancellation where the
    /// family allows it.
    pub fn tail(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        let a = self.alpha();
        match &self.family {
            Family::Dirac1 => indicator(t < 1.0),
            Family::ParetoMix { p } => {
                if t < 1.0 {
                    1.0
                } else {
                    (1.0 - p) * t.powf(-p)
                }
            }
            Family::LackOfMemory => {
                if t < 1.0 {
                    -(a * t.ln()).exp_m1()
                } else {
                    0.0
                }
            }
            Family::StableLimit { m } => {
                if t == 0.0 {
                    1.0
                } else {
                    stable_tail(m * t.powf(-a))
                }
            }
            Family::Uniform01 => (1.0 - t).max(0.0),
            Family::Gamma { shape, rate } => gamma_q(*shape, rate * t),
            Family::Generic(g) => 1.0 - g.eval(t),
        }
    }

    /// Truncated α-moment `H(t) = ∫₀ᵗ yᵅ F(dy)`.
    pub fn trunc_moment(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let a = self.alpha();
        Ok(match &self.family {
            Family::Dirac1 => indicator(t >= 1.0),
            Family::ParetoMix { p } => {
                let p = *p;
                if t < 1.0 {
                    0.0
                } else if p == a {
                    p + p * (1.0 - p) * t.ln()
                } else {
                    p * (1.0 - a) / (p - a) + p * (1.0 - p) / (a - p) * t.powf(a - p)
                }
            }
            Family::LackOfMemory => {
                if t < 1.0 {
                    0.5 * t.powf(2.0 * a)
                } else {
                    0.5
                }
            }
            Family::StableLimit { m } => m * (-m * t.powf(-a)).exp(),
            Family::Uniform01 => t.min(1.0).powf(a + 1.0) / (a + 1.0),
            Family::Gamma { shape, rate } => self.gamma_scale * gamma_p(shape + a, rate * t),
            Family::Generic(g) => g.trunc_moment(a, t)?,
        })
    }

    /// Williamson transform `G(t) = ∫ Ψ(x/t) ν(dx)`; `G(0)` is the
    /// right limit `ν{0} = F(0)`.
    pub fn williamson(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(self.cdf(0.0));
        }
        let a = self.alpha();
        let u = t.powf(-a);
        Ok(match &self.family {
            Family::Dirac1 => (1.0 - u).max(0.0),
            Family::ParetoMix { p } => {
                let p = *p;
                if t < 1.0 {
                    0.0
                } else if p == a {
                    1.0 - t.powf(-p) * (1.0 + p * (1.0 - p) * t.ln())
                } else {
                    1.0 - a * (1.0 - p) / (a - p) * t.powf(-p) + p * (1.0 - a) / (a - p) * u
                }
            }
            Family::LackOfMemory => {
                if t < 1.0 {
                    0.5 * t.powf(a)
                } else {
                    1.0 - 0.5 * u
                }
            }
            Family::StableLimit { m } => (-m * u).exp(),
            Family::Uniform01 => {
                let s = t.min(1.0);
                s - s.powf(a + 1.0) / ((a + 1.0) * t.powf(a))
            }
            Family::Gamma { shape, rate } => {
                gamma_p(*shape, rate * t) - self.gamma_scale * u * gamma_p(shape + a, rate * t)
            }
            Family::Generic(g) => g.eval(t) - u * g.trunc_moment(a, t)?,
        })
    }

    /// `(G(t), H(t))` with a single quadrature for generic laws.
    pub fn transform_pair(&self, t: f64) -> Result<(f64, f64)> {
        if let Family::Generic(g) = &self.family {
            if t <= 0.0 {
                return Ok((g.eval(0.0), 0.0));
            }
            let h = g.trunc_moment(self.alpha(), t)?;
            return Ok((g.eval(t) - h * t.powf(-self.alpha()), h));
        }
        Ok((self.williamson(t)?, self.trunc_moment(t)?))
    }

    /// `1 − G(t) = F̄(t) + t^{−α} H(t)`, accurate when `G(t)` is close to 1.
    pub fn williamson_complement(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(1.0 - self.cdf(0.0));
        }
        Ok(self.tail(t) + self.trunc_moment(t)? * t.powf(-self.alpha()))
    }

    /// Analytic derivative `G′(t) = α t^{−α−1} H(t)`.
    pub fn williamson_derivative(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let a = self.alpha();
        Ok(a * self.trunc_moment(t)? * t.powf(-a - 1.0))
    }

    /// The α-moment `m = ∫ xᵅ ν(dx)`; `+∞` when it diverges.
    pub fn alpha_moment(&self) -> f64 {
        self.moment
    }

    /// Regular-variation metadata when the tail is known to be regularly
    /// varying with index `θ − α`.
    pub fn regvar_tail(&self) -> Option<RegVarTail> {
        match &self.family {
            Family::ParetoMix { p } if *p <= self.alpha() && *p < 1.0 => {
                RegVarTail::new(self.alpha() - p, self.alpha).ok()
            }
            Family::Generic(g) => g.tail.and_then(|theta| RegVarTail::new(theta, self.alpha).ok()),
            _ => None,
        }
    }

    /// Left-most quantile `inf{x : F(x) ≥ u}` for `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let a = self.alpha();
        match &self.family {
            Family::Dirac1 => 1.0,
            Family::ParetoMix { p } => {
                if u <= *p {
                    1.0
                } else {
                    ((1.0 - u) / (1.0 - p)).powf(-1.0 / p)
                }
            }
            Family::LackOfMemory => u.powf(1.0 / a),
            Family::Uniform01 => u,
            _ => self.bisect_quantile(u),
        }
    }

    fn bisect_quantile(&self, u: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = match &self.family {
            Family::Generic(g) => g.support.1.max(1e-300),
            _ => 1.0,
        };
        while self.cdf(hi) < u {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        // invariant: F(lo) < u ≤ F(hi), except possibly at lo = 0
        while hi - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Locations that may carry point masses.
    pub fn atoms(&self) -> Vec<f64> {
        match &self.family {
            Family::Dirac1 | Family::ParetoMix { .. } => vec![1.0],
            Family::Generic(g) if !g.nodes.is_empty() => {
                vec![g.support.0, g.support.1]
            }
            _ => Vec::new(),
        }
    }

    /// Points where `F` or its derivative may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            Family::Dirac1 | Family::ParetoMix { .. } | Family::LackOfMemory | Family::Uniform01 => vec![1.0],
            Family::Generic(g) => {
                let mut v = vec![g.support.0, g.support.1];
                v.extend(g.nodes.iter().copied());
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
            _ => Vec::new(),
        }
    }

    /// JSON description used to echo configurations in output files.
    pub fn describe(&self) -> serde_json::Value {
        let mut v = match &self.family {
            Family::ParetoMix { p } => serde_json::json!({ "family": "pareto_mix", "p": p }),
            Family::StableLimit { m } => serde_json::json!({ "family": "stable", "m": m }),
            Family::Gamma { shape, rate } => {
                serde_json::json!({ "family": "gamma", "shape": shape, "rate": rate })
            }
            Family::Generic(g) => serde_json::json!({
                "family": "generic",
                "support": [g.support.0, g.support.1],
                "quad_tol": g.quad_tol,
            }),
            _ => serde_json::json!({ "family": self.name() }),
        };
        v["alpha"] = serde_json::json!(self.alpha());
        v
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `1 − (1 + y) e^{−y}`; a power series avoids cancellation for small `y`.
fn stable_tail(y: f64) -> f64 {
    if y > 0.5 {
        return 1.0 - (1.0 + y) * (-y).exp();
    }
    // Σ_{k≥2} (−1)^k (k−1) y^k / k!
    let mut term = y * y / 2.0; // y^k / k! at k = 2
    let mut sum: f64 = 0.0;
    let mut k = 2.0;
    while term > 1e-18 * sum.max(1e-300) {
        let signed = if (k as i64) % 2 == 0 { term } else { -term };
        sum += (k - 1.0) * signed;
        k += 1.0;
        term *= y / k;
        if k > 60.0 {
            break;
        }
    }
    sum
}

fn generic_moment(g: &GenericCdf, alpha: f64) -> Result<f64> {
    let far = 1e6_f64.max(g.support.1);
    let h_far = g.trunc_moment(alpha, far)?;
    let h_near = g.trunc_moment(alpha, far / 10.0)?;
    if h_near > 0.0 && h_far / h_near > g.divergence_ratio {
        Ok(f64::INFINITY)
    } else {
        Ok(h_far)
    }
}

/// Serializable description of a step law, e.g.
/// `{"family":"pareto_mix","p":0.5,"alpha":1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistSpec {
    #[serde(flatten)]
    pub family: FamilySpec,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    #[serde(alias = "dirac1")]
    Dirac,
    ParetoMix {
        p: f64,
    },
    LackOfMemory,
    #[serde(alias = "stable_limit")]
    Stable {
        m: f64,
    },
    #[serde(alias = "uniform01")]
    Uniform,
    Gamma {
        shape: f64,
        rate: f64,
    },
    Generic {
        table: PathBuf,
        #[serde(default)]
        quad_tol: Option<f64>,
    },
}

impl DistSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KendallError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut spec = Self::from_json(&text)?;
        // table paths are relative to the spec file
        if let FamilySpec::Generic { table, .. } = &mut spec.family {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<StepDistribution> {
        let family = match &self.family {
            FamilySpec::Dirac => Family::Dirac1,
            FamilySpec::ParetoMix { p } => Family::ParetoMix { p: *p },
            FamilySpec::LackOfMemory => Family::LackOfMemory,
            FamilySpec::Stable { m } => Family::StableLimit { m: *m },
            FamilySpec::Uniform => Family::Uniform01,
            FamilySpec::Gamma { shape, rate } => Family::Gamma { shape: *shape, rate: *rate },
            FamilySpec::Generic { table, quad_tol } => {
                Family::Generic(GenericCdf::from_csv(table, quad_tol.unwrap_or(DEFAULT_QUAD_TOL))?)
            }
        };
        StepDistribution::with_alpha(family, self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(family: Family, alpha: f64) -> StepDistribution {
        StepDistribution::with_alpha(family, alpha).unwrap()
    }

    #[test]
    fn dirac_values() {
        let d = dist(Family::Dirac1, 1.0);
        assert_eq!(d.cdf(2.0), 1.0);
        assert_eq!(d.cdf(0.5), 0.0);
        assert_eq!(d.trunc_moment(2.0).unwrap(), 1.0);
        assert_eq!(d.alpha_moment(), 1.0);
    }

    #[test]
    fn lack_of_memory_cdf() {
        let d = dist(Family::LackOfMemory, 1.0);
        assert_eq!(d.cdf(0.5), 0.5);
    }

    #[test]
    fn uniform_values() {
        let d = dist(Family::Uniform01, 1.0);
        assert_eq!(d.cdf(0.3), 0.3);
        assert!((d.trunc_moment(0.5).unwrap() - 0.125).abs() < 1e-15);
        // brute-force ∫₀¹ x dx by a midpoint sum
        let n = 100_000;
        let brute: f64 = (0..n).map(|i| (i as f64 + 0.5) / n as f64).sum::<f64>() / n as f64;
        assert!((d.alpha_moment() - brute).abs() < 1e-9);
    }

    #[test]
    fn stable_cdf_at_one() {
        let d = dist(Family::StableLimit { m: 1.0 }, 1.0);
        assert!((d.cdf(1.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((d.cdf(1.0) - 0.735_758_9).abs() < 1e-7);
    }

    #[test]
    fn gamma_moment_closed_form() {
        let d = dist(Family::Gamma { shape: 2.0, rate: 1.5 }, 1.0);
        // Γ(3)/(Γ(2)·1.5) = 2/1.5
        assert!((d.alpha_moment() - 2.0 / 1.5).abs() < 1e-13);
        assert!((d.trunc_moment(1e6).unwrap() - d.alpha_moment()).abs() < 1e-12);
    }

    #[test]
    fn truncated_moment_at_zero() {
        for d in [
            dist(Family::Dirac1, 1.0),
            dist(Family::Uniform01, 2.0),
            dist(Family::StableLimit { m: 2.0 }, 0.5),
            dist(Family::Gamma { shape: 0.5, rate: 1.0 }, 1.0),
        ] {
            assert_eq!(d.trunc_moment(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn pareto_mix_moment_regimes() {
        assert!(dist(Family::ParetoMix { p: 0.5 }, 1.0).alpha_moment().is_infinite());
        assert!(dist(Family::ParetoMix { p: 0.5 }, 0.5).alpha_moment().is_infinite());
        let d = dist(Family::ParetoMix { p: 0.8 }, 0.5);
        assert!((d.alpha_moment() - 0.8 * 0.5 / 0.3).abs() < 1e-14);
        assert!((d.trunc_moment(1e12).unwrap() - d.alpha_moment()).abs() < 1e-3);
        assert_eq!(dist(Family::ParetoMix { p: 1.0 }, 1.0).alpha_moment(), 1.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let a = KendallIndex::new(1.0).unwrap();
        assert!(KendallIndex::new(0.0).is_err());
        assert!(KendallIndex::new(-1.0).is_err());
        assert!(StepDistribution::new(Family::ParetoMix { p: 0.0 }, a).is_err());
        assert!(StepDistribution::new(Family::ParetoMix { p: 1.5 }, a).is_err());
        assert!(StepDistribution::new(Family::Gamma { shape: 0.0, rate: 1.0 }, a).is_err());
        assert!(StepDistribution::new(Family::Gamma { shape: 1.0, rate: -1.0 }, a).is_err());
        assert!(StepDistribution::new(Family::StableLimit { m: 0.0 }, a).is_err());
        assert!(GenericCdf::from_fn(|x| 1.0 - x.min(1.0), (0.0, 1.0), 1e-10).is_err());
        assert!(GenericCdf::from_table(vec![0.0, 1.0, 1.0], vec![0.0, 0.5, 1.0], 1e-10).is_err());
        assert!(GenericCdf::from_table(vec![0.0, 1.0, 2.0], vec![0.0, 0.6, 0.5], 1e-10).is_err());
    }

    #[test]
    fn generic_uniform_matches_closed_form() {
        let g = GenericCdf::from_fn(|x| x.clamp(0.0, 1.0), (0.0, 1.0), 1e-12).unwrap();
        let d = dist(Family::Generic(g), 1.0);
        assert!((d.trunc_moment(1.0).unwrap() - 0.5).abs() < 1e-10);
        assert!((d.alpha_moment() - 0.5).abs() < 1e-9);
        assert!((d.williamson(1.0).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn generic_divergence_detected() {
        // Pareto tail x^{-1/2} with α = 1 has an infinite α-moment
        let g = GenericCdf::from_fn(|x| if x < 1.0 { 0.0 } else { 1.0 - x.powf(-0.5) }, (1.0, 10.0), 1e-8).unwrap();
        assert!(dist(Family::Generic(g), 1.0).alpha_moment().is_infinite());
    }

    #[test]
    fn table_interpolates() {
        let g = GenericCdf::from_table(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.0], 1e-10).unwrap();
        let d = dist(Family::Generic(g), 1.0);
        assert!((d.cdf(0.5) - 0.25).abs() < 1e-15);
        assert_eq!(d.cdf(3.0), 1.0);
        assert!((d.quantile(0.75) - 1.5).abs() < 1e-10);
    }

    #[test]
    fn stable_tail_is_accurate() {
        for &y in &[1e-8_f64, 1e-4, 0.1, 0.4, 0.6, 2.0] {
            let naive = 1.0 - (1.0 + y) * (-y).exp();
            let t = stable_tail(y);
            if y > 0.05 {
                assert!(((t - naive) / t).abs() < 1e-12);
            }
            assert!(t > 0.0);
        }
        assert!((stable_tail(1e-8) / 5e-17 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn quantiles_invert_cdf() {
        for d in [
            dist(Family::StableLimit { m: 1.5 }, 2.0),
            dist(Family::Gamma { shape: 2.5, rate: 0.7 }, 1.0),
            dist(Family::ParetoMix { p: 0.4 }, 1.0),
            dist(Family::LackOfMemory, 0.5),
        ] {
            for &u in &[0.05, 0.5, 0.93] {
                let x = d.quantile(u);
                if d.name() == "pareto_mix" && u <= 0.4 {
                    assert_eq!(x, 1.0);
                } else {
                    assert!((d.cdf(x) - u).abs() < 1e-9, "{} u={u}", d.name());
                }
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec = DistSpec::from_json(r#"{"family":"pareto_mix","p":0.5,"alpha":1.0}"#).unwrap();
        assert_eq!(spec.family, FamilySpec::ParetoMix { p: 0.5 });
        let d = spec.build().unwrap();
        assert_eq!(d.alpha(), 1.0);
        let back: DistSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(DistSpec::from_json(r#"{"family":"cauchy","alpha":1.0}"#).is_err());
    }
}
