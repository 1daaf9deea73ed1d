//! Finite-dimensional distributions of the walk.
//!
//! Every formula here has the same shape: a sum over `ε ∈ {0,1}^k` of
//! products of per-coordinate weights (`stay_j` when `ε_j = 0`, `jump_j`
//! when `ε_j = 1`) times a chain `∏ Ψ(x_{ε̃_i} / x_{ε̃_{i+1}})` linking
//! consecutive ones. [`Chain`] holds those weights and evaluates the sum
//! either by full enumeration or by an `O(k²)` dynamic program over the
//! position of the most recent one.

use serde::Serialize;

use crate::distributions::StepDistribution;
use crate::error::{KendallError, Result};
use crate::williamson::{powu, psi_ratio};

/// Largest `k` accepted by the enumeration evaluator.
pub const ENUM_MAX_K: usize = 24;
// levels of the recursion that fork onto the rayon pool
const PARALLEL_DEPTH: usize = 6;

/// Ordered epochs `n₁ ≤ … ≤ n_k` and thresholds `x₁ ≤ … ≤ x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FddQuery {
    epochs: Vec<u64>,
    thresholds: Vec<f64>,
}

impl FddQuery {
    pub fn new(epochs: Vec<u64>, thresholds: Vec<f64>) -> Result<Self> {
        if epochs.is_empty() {
            return Err(KendallError::Domain("fdd query needs at least one epoch".into()));
        }
        if epochs.len() != thresholds.len() {
            return Err(KendallError::Domain(format!("{} epochs but {} thresholds", epochs.len(), thresholds.len())));
        }
        if epochs[0] == 0 || epochs.windows(2).any(|w| w[1] < w[0]) {
            return Err(KendallError::Domain("epochs must be positive and nondecreasing".into()));
        }
        if !(thresholds[0] > 0.0) || thresholds.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(KendallError::Domain("thresholds must be positive and nondecreasing".into()));
        }
        Ok(Self { epochs, thresholds })
    }

    pub fn k(&self) -> usize {
        self.epochs.len()
    }

    pub fn epochs(&self) -> &[u64] {
        &self.epochs
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }
}

/// A binary vector `ε` and the positions `ε̃₁ < … < ε̃_s` of its ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonStructure {
    bits: Vec<bool>,
    ones: Vec<usize>,
}

impl EpsilonStructure {
    /// Bit `j` of `mask` is `ε_{j+1}`.
    pub fn from_mask(mask: u64, k: usize) -> Self {
        let bits: Vec<bool> = (0..k).map(|j| mask >> j & 1 == 1).collect();
        let ones = bits.iter().enumerate().filter_map(|(j, &b)| b.then_some(j)).collect();
        Self { bits, ones }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Zero-based positions of the ones.
    pub fn ones(&self) -> &[usize] {
        &self.ones
    }

    pub fn s(&self) -> usize {
        self.ones.len()
    }
}

/// Per-coordinate weights of an ε-sum.
#[derive(Debug, Clone)]
pub struct Chain {
    alpha: f64,
    levels: Vec<f64>,
    stay: Vec<f64>,
    jump: Vec<f64>,
}

impl Chain {
    pub fn new(alpha: f64, levels: Vec<f64>, stay: Vec<f64>, jump: Vec<f64>) -> Self {
        debug_assert!(levels.len() == stay.len() && stay.len() == jump.len());
        Self { alpha, levels, stay, jump }
    }

    /// Weights of the walk's joint cdf: `stay_j = G(x_j)^{Δn_j}`,
    /// `jump_j = G(x_j)^{Δn_j − 1} Δn_j H(x_j) / x_jᵅ` (zero when `Δn_j = 0`).
    pub fn for_walk(d: &StepDistribution, q: &FddQuery) -> Result<Self> {
        let a = d.alpha();
        let mut prev = 0;
        let (mut stay, mut jump) = (Vec::with_capacity(q.k()), Vec::with_capacity(q.k()));
        for (&n, &x) in q.epochs.iter().zip(&q.thresholds) {
            let dn = n - prev;
            prev = n;
            let (g, h) = d.transform_pair(x)?;
            stay.push(powu(g, dn));
            jump.push(if dn == 0 { 0.0 } else { powu(g, dn - 1) * dn as f64 * h * x.powf(-a) });
        }
        Ok(Self::new(a, q.thresholds.clone(), stay, jump))
    }

    pub fn k(&self) -> usize {
        self.levels.len()
    }

    #[inline]
    fn link(&self, from: usize, to: usize) -> f64 {
        psi_ratio(self.alpha, self.levels[from] / self.levels[to])
    }

    /// Weight of a single ε vector.
    pub fn term(&self, eps: &EpsilonStructure) -> f64 {
        let mut w: f64 =
            eps.bits.iter().enumerate().map(|(j, &b)| if b { self.jump[j] } else { self.stay[j] }).product();
        for pair in eps.ones.windows(2) {
            w *= self.link(pair[0], pair[1]);
        }
        w
    }

    /// Sum over all `2^k` vectors. The summation tree splits on `ε_1`, then
    /// `ε_2`, …, so it is pairwise and fixed by `k` regardless of how many
    /// threads evaluate it.
    pub fn sum_enumerated(&self) -> f64 {
        self.subtree(0, None, 1.0)
    }

    fn subtree(&self, j: usize, last: Option<usize>, acc: f64) -> f64 {
        if j == self.k() {
            return acc;
        }
        if acc == 0.0 {
            return 0.0;
        }
        let link = last.map_or(1.0, |i| self.link(i, j));
        let zero = || self.subtree(j + 1, last, acc * self.stay[j]);
        let one = || self.subtree(j + 1, Some(j), acc * self.jump[j] * link);
        let (a, b) = if j < PARALLEL_DEPTH { rayon::join(zero, one) } else { (zero(), one()) };
        a + b
    }

    /// `O(k²)` evaluation. `start` multiplies the first one at position `j`
    /// by `start(j)`; `end` is `(weight with no ones, weight after last one
    /// at j)`. The walk's joint cdf uses `start ≡ 1`, `end ≡ 1`.
    fn sum_dp<S, E>(&self, start: S, end: E) -> f64
    where
        S: Fn(usize) -> f64,
        E: Fn(Option<usize>) -> f64,
    {
        let k = self.k();
        let mut none = 1.0;
        // last_one[i]: total weight of prefixes whose latest one is at i
        let mut last_one: Vec<f64> = Vec::with_capacity(k);
        for j in 0..k {
            let mut reach = none * start(j);
            for (i, &w) in last_one.iter().enumerate() {
                if w != 0.0 {
                    reach += w * self.link(i, j);
                }
            }
            none *= self.stay[j];
            for w in last_one.iter_mut() {
                *w *= self.stay[j];
            }
            last_one.push(reach * self.jump[j]);
        }
        let mut total = none * end(None);
        for (i, &w) in last_one.iter().enumerate() {
            total += w * end(Some(i));
        }
        total
    }

    pub fn sum_dynamic(&self) -> f64 {
        self.sum_dp(|_| 1.0, |_| 1.0)
    }
}

/// Value of a joint-cdf evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FddValue {
    pub value: f64,
    pub k: usize,
    pub terms_evaluated: u64,
}

/// `P(X_{n_1} ≤ x_1, …, X_{n_k} ≤ x_k)` by summing all `2^k` terms.
pub fn fdd_cdf_enum(d: &StepDistribution, q: &FddQuery) -> Result<FddValue> {
    let k = q.k();
    if k > ENUM_MAX_K {
        return Err(KendallError::Size { k, limit: ENUM_MAX_K });
    }
    let chain = Chain::for_walk(d, q)?;
    Ok(FddValue { value: chain.sum_enumerated().clamp(0.0, 1.0), k, terms_evaluated: 1 << k })
}

/// Same probability via the dynamic program, for any `k`.
pub fn fdd_cdf_dp(d: &StepDistribution, q: &FddQuery) -> Result<FddValue> {
    let k = q.k();
    let chain = Chain::for_walk(d, q)?;
    let transitions = (k * (k + 1) / 2) as u64;
    Ok(FddValue { value: chain.sum_dynamic().clamp(0.0, 1.0), k, terms_evaluated: transitions })
}

/// The nested kernel integral
/// `∫…∫ Ψ(y_k / x_{k+1}) P_{Δn_k}(y_{k−1}, dy_k) ⋯ P_{n_1}(y_0, dy_1)`
/// over `y_j ≤ x_j`, in closed form. `x_next = ∞` drops the trailing Ψ.
pub fn weighted_chain(d: &StepDistribution, q: &FddQuery, y0: f64, x_next: f64) -> Result<f64> {
    let x = q.thresholds();
    if !(y0 >= 0.0 && y0 <= x[0]) {
        return Err(KendallError::Domain(format!("need 0 <= y0 <= x1, got y0 = {y0}")));
    }
    if !(x_next >= x[q.k() - 1]) {
        return Err(KendallError::Domain(format!("need x_next >= x_k, got {x_next}")));
    }
    let chain = Chain::for_walk(d, q)?;
    let a = d.alpha();
    let tail = |from: f64| if x_next.is_infinite() { 1.0 } else { psi_ratio(a, from / x_next) };
    Ok(chain.sum_dp(
        |j| psi_ratio(a, y0 / x[j]),
        |last| match last {
            None => tail(y0),
            Some(i) => tail(x[i]),
        },
    ))
}

/// Times `0 ≤ t₁ ≤ … ≤ t_k`, levels `z₁ ≤ … ≤ z_k`, scale `n` and norming `a_n`
/// for `Z_n(t) = a_n^{−1} X_{[nt]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledFddQuery {
    times: Vec<f64>,
    levels: Vec<f64>,
    scale: u64,
    norming: f64,
}

fn check_times_levels(times: &[f64], levels: &[f64]) -> Result<()> {
    if times.is_empty() || times.len() != levels.len() {
        return Err(KendallError::Domain("times and levels must be nonempty and of equal length".into()));
    }
    if !(times[0] >= 0.0) || times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(KendallError::Domain("times must be nonnegative and nondecreasing".into()));
    }
    if !(levels[0] > 0.0) || levels.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(KendallError::Domain("levels must be positive and nondecreasing".into()));
    }
    Ok(())
}

impl ScaledFddQuery {
    pub fn new(times: Vec<f64>, levels: Vec<f64>, scale: u64, norming: f64) -> Result<Self> {
        check_times_levels(&times, &levels)?;
        if scale == 0 || !(norming > 0.0) {
            return Err(KendallError::Domain("scale and norming must be positive".into()));
        }
        Ok(Self { times, levels, scale, norming })
    }
}

/// `P(Z_n(t_1) ≤ z_1, …, Z_n(t_k) ≤ z_k)` through the exact joint cdf at
/// epochs `[n t_j]`. Coordinates with epoch 0 are dropped.
pub fn fdd_zn(d: &StepDistribution, sq: &ScaledFddQuery) -> Result<f64> {
    let n = sq.scale as f64;
    let (mut epochs, mut thresholds) = (Vec::new(), Vec::new());
    for (&t, &z) in sq.times.iter().zip(&sq.levels) {
        let e = (n * t).floor() as u64;
        if e > 0 {
            epochs.push(e);
            thresholds.push(sq.norming * z);
        }
    }
    if epochs.is_empty() {
        return Ok(1.0);
    }
    Ok(fdd_cdf_dp(d, &FddQuery::new(epochs, thresholds)?)?.value)
}

/// Chain with `stay_j = e^{−κ c_j}` and `jump_j = c_j e^{−κ c_j}`,
/// `c_j = rate(z_j) (t_j − t_{j−1})`.
fn limit_chain(times: &[f64], levels: &[f64], alpha: f64, kappa: f64, rate: impl Fn(f64) -> f64) -> Chain {
    let mut prev = 0.0;
    let (mut stay, mut jump) = (Vec::new(), Vec::new());
    for (&t, &z) in times.iter().zip(levels) {
        let c = rate(z) * (t - prev);
        prev = t;
        let e = (-kappa * c).exp();
        stay.push(e);
        // c may overflow to ∞ at tiny levels, where the jump weight is 0
        jump.push(if e == 0.0 { 0.0 } else { e * c });
    }
    Chain::new(alpha, levels.to_vec(), stay, jump)
}

/// Limit fdd of `Z_n` for steps with finite α-moment `m`.
pub fn fdd_limit_finite_moment(times: &[f64], levels: &[f64], m: f64, alpha: f64) -> Result<f64> {
    check_times_levels(times, levels)?;
    if !(m > 0.0 && m.is_finite()) || !(alpha > 0.0) {
        return Err(KendallError::Domain("need m > 0 and alpha > 0".into()));
    }
    Ok(limit_chain(times, levels, alpha, 1.0, |z| m * z.powf(-alpha)).sum_dynamic().clamp(0.0, 1.0))
}

/// Limit fdd of `Z_n` for steps with `F̄ ∈ RV_{θ−α}`.
///
/// `G(a_n z)^{n Δt} → exp(−κ Δt z^{θ−α})` with `κ = α/(α−θ)`: the tail
/// `F̄(a_n z)` is of the same order as `H(a_n z)/(a_n z)ᵅ` and both enter `1 − G`.
pub fn fdd_limit_regvar(times: &[f64], levels: &[f64], alpha: f64, theta: f64) -> Result<f64> {
    check_times_levels(times, levels)?;
    if !(alpha > 0.0) || !(0.0..alpha).contains(&theta) {
        return Err(KendallError::Domain(format!("need 0 <= theta < alpha, got theta = {theta}, alpha = {alpha}")));
    }
    Ok(limit_chain(times, levels, alpha, alpha / (alpha - theta), |z| z.powf(theta - alpha))
        .sum_dynamic()
        .clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Family, StepDistribution};
    use crate::williamson::cdf_n;

    fn dist(family: Family, alpha: f64) -> StepDistribution {
        StepDistribution::with_alpha(family, alpha).unwrap()
    }

    /// Brute-force sum over masks, written independently of the recursion.
    fn brute(chain: &Chain) -> f64 {
        (0..1u64 << chain.k()).map(|m| chain.term(&EpsilonStructure::from_mask(m, chain.k()))).sum()
    }

    #[test]
    fn dirac_worked_value() {
        let d = dist(Family::Dirac1, 1.0);
        let q = FddQuery::new(vec![1, 2], vec![2.0, 3.0]).unwrap();
        let e = fdd_cdf_enum(&d, &q).unwrap();
        assert!((e.value - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(e.terms_evaluated, 4);
        // individual terms 1/3, 1/3, 1/6, 1/18
        let chain = Chain::for_walk(&d, &q).unwrap();
        let mut terms: Vec<f64> = (0..4).map(|m| chain.term(&EpsilonStructure::from_mask(m, 2))).collect();
        terms.sort_by(f64::total_cmp);
        let mut expect = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 18.0];
        expect.sort_by(f64::total_cmp);
        for (t, e) in terms.iter().zip(expect) {
            assert!((t - e).abs() < 1e-15);
        }
        assert!((fdd_cdf_dp(&d, &q).unwrap().value - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn k1_collapses_to_one_dimensional_law() {
        let d = dist(Family::Gamma { shape: 2.0, rate: 1.0 }, 1.5);
        for n in 1..=5 {
            let q = FddQuery::new(vec![n], vec![2.5]).unwrap();
            let c = cdf_n(&d, n, 2.5).unwrap();
            assert!((fdd_cdf_enum(&d, &q).unwrap().value - c).abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_epochs() {
        let d = dist(Family::Uniform01, 1.0);
        let q = FddQuery::new(vec![3, 3], vec![0.8, 1.4]).unwrap();
        let expect = cdf_n(&d, 3, 0.8).unwrap();
        assert!((fdd_cdf_enum(&d, &q).unwrap().value - expect).abs() < 1e-14);
    }

    #[test]
    fn enum_matches_brute_force_and_dp() {
        let d = dist(Family::Uniform01, 1.0);
        let q = FddQuery::new(vec![1, 3, 4], vec![0.4, 0.9, 1.7]).unwrap();
        let chain = Chain::for_walk(&d, &q).unwrap();
        let b = brute(&chain);
        assert!((fdd_cdf_enum(&d, &q).unwrap().value - b).abs() < 1e-15);
        assert!((fdd_cdf_dp(&d, &q).unwrap().value - b).abs() < 1e-15);
    }

    #[test]
    fn enumeration_guard() {
        let d = dist(Family::Dirac1, 1.0);
        let q = FddQuery::new((1..=25).collect(), (1..=25).map(|i| i as f64).collect()).unwrap();
        assert!(matches!(fdd_cdf_enum(&d, &q), Err(KendallError::Size { k: 25, .. })));
        assert!(fdd_cdf_dp(&d, &q).is_ok());
    }

    #[test]
    fn query_validation() {
        assert!(FddQuery::new(vec![2, 1], vec![1.0, 2.0]).is_err());
        assert!(FddQuery::new(vec![1, 2], vec![2.0, 1.0]).is_err());
        assert!(FddQuery::new(vec![0, 2], vec![1.0, 2.0]).is_err());
        assert!(FddQuery::new(vec![], vec![]).is_err());
        assert!(FddQuery::new(vec![1], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn weighted_chain_special_cases() {
        let d = dist(Family::Uniform01, 1.0);
        let q = FddQuery::new(vec![1, 2, 4], vec![0.5, 1.0, 2.0]).unwrap();
        let full = weighted_chain(&d, &q, 0.0, f64::INFINITY).unwrap();
        assert!((full - fdd_cdf_enum(&d, &q).unwrap().value).abs() < 1e-15);

        // k = 1: Ψ(y0/x2) Gⁿ(x1) + (n/x1ᵅ) G^{n−1} H(x1) Ψ(y0/x1) Ψ(x1/x2)
        let d = dist(Family::Dirac1, 1.0);
        let q = FddQuery::new(vec![1], vec![2.0]).unwrap();
        assert!((weighted_chain(&d, &q, 0.0, 4.0).unwrap() - 0.75).abs() < 1e-15);
        let (n, x1, x2, y0) = (3u64, 2.5, 4.0, 0.5);
        let d = dist(Family::LackOfMemory, 2.0);
        let q = FddQuery::new(vec![n], vec![x1]).unwrap();
        let (g, h) = d.transform_pair(x1).unwrap();
        let a = 2.0;
        let expect = psi_ratio(a, y0 / x2) * g.powi(3)
            + 3.0 / x1.powf(a) * g * g * h * psi_ratio(a, y0 / x1) * psi_ratio(a, x1 / x2);
        assert!((weighted_chain(&d, &q, y0, x2).unwrap() - expect).abs() < 1e-15);

        assert!(weighted_chain(&d, &q, 3.0, 4.0).is_err());
        assert!(weighted_chain(&d, &q, 0.0, 1.0).is_err());
    }

    #[test]
    fn zn_drops_empty_epochs() {
        let d = dist(Family::Dirac1, 1.0);
        let sq = ScaledFddQuery::new(vec![0.001, 1.0], vec![0.5, 1.0], 100, 100.0).unwrap();
        let alone = ScaledFddQuery::new(vec![1.0], vec![1.0], 100, 100.0).unwrap();
        assert_eq!(fdd_zn(&d, &sq).unwrap(), fdd_zn(&d, &alone).unwrap());
        let none = ScaledFddQuery::new(vec![0.001], vec![0.5], 100, 100.0).unwrap();
        assert_eq!(fdd_zn(&d, &none).unwrap(), 1.0);
    }

    #[test]
    fn limit_examples() {
        let e1 = (-1.0f64).exp();
        assert!((fdd_limit_finite_moment(&[1.0], &[1.0], 1.0, 1.0).unwrap() - 2.0 * e1).abs() < 1e-15);
        let (m, a, z): (f64, f64, f64) = (0.7, 1.5, 1.3);
        let y = m * z.powf(-a);
        let expect = (1.0 + y) * (-y).exp();
        assert!((fdd_limit_finite_moment(&[1.0], &[z], m, a).unwrap() - expect).abs() < 1e-15);
        // θ = 0 is the finite-moment form with m = 1
        let (t, zs) = ([0.3, 1.0, 2.0], [0.5, 0.9, 2.0]);
        let r = fdd_limit_regvar(&t, &zs, 1.2, 0.0).unwrap();
        let f = fdd_limit_finite_moment(&t, &zs, 1.0, 1.2).unwrap();
        assert!((r - f).abs() < 1e-15);
        let (th, a, z): (f64, f64, f64) = (0.4, 1.0, 2.0);
        let y = z.powf(th - a);
        let r = fdd_limit_regvar(&[1.0], &[z], a, th).unwrap();
        assert!((r - (1.0 + y) * (-y / 0.6).exp()).abs() < 1e-15);
        assert!(fdd_limit_regvar(&[1.0], &[1.0], 1.0, 1.0).is_err());
    }
}
