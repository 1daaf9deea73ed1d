//! Validation suites: one case per module invariant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::constants::*;
use super::ks::ks_sorted;
use super::oracle::{chapman_kolmogorov, kernel_chain};
use super::report::{CaseResult, ValidationReport};
use crate::asymptotics::{
    convergence_diagnostic, limit_cdf, log_grid, norming_sequence, tail_expansion, LimitLaw, NormingMethod,
};
use crate::distributions::{Family, GenericCdf, KendallIndex, StepDistribution, DEFAULT_QUAD_TOL};
use crate::error::{KendallError, Result};
use crate::fdd::{fdd_cdf_dp, fdd_cdf_enum, fdd_limit_finite_moment, fdd_limit_regvar, FddQuery};
use crate::kernel::{kernel_cdf, kernel_trunc_moment, KernelQuery};
use crate::simulator::{sample_ensemble, step, SimConfig};
use crate::williamson::{cdf_n, invert_to_cdf, powu, tail_n};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Transforms,
    Kernels,
    Fdd,
    Simulator,
    Asymptotics,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Transforms => "transforms",
            Suite::Kernels => "kernels",
            Suite::Fdd => "fdd",
            Suite::Simulator => "simulator",
            Suite::Asymptotics => "asymptotics",
            Suite::All => "all",
        }
    }
}

/// Sample size and seed shared by the randomized cases.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { mc_samples: DEFAULT_MC_SAMPLES, seed: DEFAULT_SEED }
    }
}

/// What a case measured.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub statistic: f64,
    pub threshold: f64,
    pub n: Option<u64>,
    pub detail: String,
}

impl Outcome {
    fn exact(statistic: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { statistic, threshold, n: None, detail: detail.into() }
    }

    fn sampled(statistic: f64, threshold: f64, n: usize, detail: impl Into<String>) -> Self {
        Self { statistic, threshold, n: Some(n as u64), detail: detail.into() }
    }
}

pub struct Case {
    pub id: &'static str,
    pub suite: Suite,
    pub randomized: bool,
    pub run: fn(&Budget) -> Result<Outcome>,
}

/// Every module invariant, by id. The registry must cover this list exactly.
pub const MANIFEST: &[&str] = &[
    "distributions.monotone",
    "distributions.generic_quadrature",
    "distributions.moment_limit",
    "williamson.multiplicativity",
    "williamson.round_trip",
    "williamson.n1_identity",
    "williamson.monotone",
    "williamson.stable_fixed_point",
    "kernel.origin_collapse",
    "kernel.monotone",
    "kernel.chapman_kolmogorov",
    "kernel.moment_decay",
    "simulator.ks",
    "simulator.joint",
    "simulator.determinism",
    "simulator.step_floor",
    "fdd.enum_dp",
    "fdd.marginal",
    "fdd.k1_collapse",
    "fdd.kernel_chain",
    "fdd.monte_carlo",
    "fdd.limit_cdfs",
    "asymptotics.tail_expansion",
    "asymptotics.limit_cdf",
    "asymptotics.norming_residual",
    "asymptotics.convergence",
    "cli.bit_stable",
];

pub fn registry() -> Vec<Case> {
    use Suite::*;
    let c = |id, suite, randomized, run| Case { id, suite, randomized, run };
    vec![
        c("distributions.monotone", Transforms, false, dist_monotone as fn(&Budget) -> Result<Outcome>),
        c("distributions.generic_quadrature", Transforms, false, dist_generic_quadrature),
        c("distributions.moment_limit", Transforms, false, dist_moment_limit),
        c("williamson.multiplicativity", Transforms, false, williamson_multiplicativity),
        c("williamson.round_trip", Transforms, false, williamson_round_trip),
        c("williamson.n1_identity", Transforms, false, williamson_n1_identity),
        c("williamson.monotone", Transforms, false, williamson_monotone),
        c("williamson.stable_fixed_point", Transforms, false, williamson_stable_fixed_point),
        c("kernel.origin_collapse", Kernels, false, kernel_origin_collapse),
        c("kernel.monotone", Kernels, false, kernel_monotone),
        c("kernel.chapman_kolmogorov", Kernels, false, kernel_chapman_kolmogorov),
        c("kernel.moment_decay", Kernels, false, kernel_moment_decay),
        c("simulator.ks", Simulator, true, simulator_ks),
        c("simulator.joint", Simulator, true, simulator_joint),
        c("simulator.determinism", Simulator, true, simulator_determinism),
        c("simulator.step_floor", Simulator, true, simulator_step_floor),
        c("fdd.enum_dp", Fdd, true, fdd_enum_dp),
        c("fdd.marginal", Fdd, false, fdd_marginal),
        c("fdd.k1_collapse", Fdd, false, fdd_k1_collapse),
        c("fdd.kernel_chain", Fdd, false, fdd_kernel_chain),
        c("fdd.monte_carlo", Fdd, true, fdd_monte_carlo),
        c("fdd.limit_cdfs", Fdd, false, fdd_limit_cdfs),
        c("asymptotics.tail_expansion", Asymptotics, false, asymptotics_tail_expansion),
        c("asymptotics.limit_cdf", Asymptotics, false, asymptotics_limit_cdf),
        c("asymptotics.norming_residual", Asymptotics, false, asymptotics_norming_residual),
        c("asymptotics.convergence", Asymptotics, false, asymptotics_convergence),
        c("cli.bit_stable", Simulator, false, cli_bit_stable),
    ]
}

/// Fails unless every manifest entry has exactly one registered case and
/// every registered case is in the manifest.
pub fn check_registry() -> Result<()> {
    let reg = registry();
    for id in MANIFEST {
        let hits = reg.iter().filter(|c| c.id == *id).count();
        if hits != 1 {
            return Err(KendallError::Classification(format!("invariant {id} has {hits} validation cases")));
        }
    }
    if let Some(c) = reg.iter().find(|c| !MANIFEST.contains(&c.id)) {
        return Err(KendallError::Classification(format!("case {} is not in the manifest", c.id)));
    }
    Ok(())
}

pub fn run_suite(suite: Suite, budget: &Budget) -> Result<ValidationReport> {
    check_registry()?;
    let cases = registry()
        .into_iter()
        .filter(|c| suite == Suite::All || c.suite == suite)
        .map(|c| run_case(&c, budget))
        .collect();
    Ok(ValidationReport::new(suite.name(), budget.seed, budget.mc_samples, cases))
}

fn run_case(c: &Case, budget: &Budget) -> CaseResult {
    let seed = c.randomized.then_some(budget.seed);
    match (c.run)(budget) {
        Ok(o) => CaseResult {
            name: c.id.to_string(),
            suite: c.suite.name().to_string(),
            statistic: o.statistic,
            threshold: o.threshold,
            pass: o.statistic.is_finite() && o.statistic <= o.threshold,
            n: o.n,
            seed,
            detail: o.detail,
        },
        Err(e) => CaseResult {
            name: c.id.to_string(),
            suite: c.suite.name().to_string(),
            statistic: f64::NAN,
            threshold: f64::NAN,
            pass: false,
            n: None,
            seed,
            detail: format!("error: {e}"),
        },
    }
}

// ---------------------------------------------------------------------------
// fixtures

pub const ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];

/// The six named families with the parameters used throughout validation.
pub fn named_families() -> Vec<Family> {
    vec![
        Family::Dirac1,
        Family::ParetoMix { p: 0.75 },
        Family::LackOfMemory,
        Family::StableLimit { m: 1.0 },
        Family::Uniform01,
        Family::Gamma { shape: 2.0, rate: 1.0 },
    ]
}

/// Every named family at every α in [`ALPHAS`].
pub fn fixtures() -> Vec<StepDistribution> {
    ALPHAS
        .iter()
        .flat_map(|&a| named_families().into_iter().map(move |f| StepDistribution::with_alpha(f, a)))
        .collect::<Result<_>>()
        .expect("fixture parameters are valid")
}

fn fixtures_at(alpha: f64) -> Vec<StepDistribution> {
    fixtures().into_iter().filter(|d| d.alpha() == alpha).collect()
}

/// Families whose α-moment is attained well before `10⁶`.
pub fn is_light_tailed(f: &Family) -> bool {
    matches!(f, Family::Dirac1 | Family::LackOfMemory | Family::Uniform01 | Family::Gamma { .. })
}

fn label(d: &StepDistribution) -> String {
    format!("{}(alpha={})", d.name(), d.alpha())
}

/// Largest value and where it occurred.
#[derive(Debug, Clone, Default)]
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn note(&mut self, value: f64, at: impl FnOnce() -> String) {
        if value > self.value || value.is_nan() {
            self.value = if value.is_nan() { f64::INFINITY } else { value };
            self.at = at();
        }
    }

    fn merge(mut self, other: Worst) -> Worst {
        if other.value > self.value {
            self = other;
        }
        self
    }

    fn detail(&self) -> String {
        if self.at.is_empty() {
            "no deviation".into()
        } else {
            format!("worst at {}", self.at)
        }
    }
}

/// Runs `f` on every item in parallel and keeps the worst deviation.
fn worst_over<T: Sync, F>(items: &[T], f: F) -> Result<Worst>
where
    F: Fn(&T) -> Result<Worst> + Sync + Send,
{
    let parts = items.par_iter().map(f).collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().fold(Worst::default(), Worst::merge))
}

fn kq(x: f64, n: u64, t: f64) -> Result<KernelQuery> {
    KernelQuery::new(x, n, t)
}

// ---------------------------------------------------------------------------
// distributions

fn dist_monotone(_: &Budget) -> Result<Outcome> {
    let mut grid = vec![0.0];
    grid.extend(log_grid(1e-3, 1e3, 400));
    grid.push(1.0);
    grid.sort_by(f64::total_cmp);
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        let a = d.alpha();
        for pair in grid.windows(2) {
            let (s, t) = (pair[0], pair[1]);
            let (hs, ht) = (d.trunc_moment(s)?, d.trunc_moment(t)?);
            w.note(d.cdf(s) - d.cdf(t), || format!("{} F at {t}", label(d)));
            w.note((hs - ht) / ht.max(1.0), || format!("{} H at {t}", label(d)));
            w.note((ht - t.powf(a)) / t.powf(a).max(1e-300), || format!("{} H <= t^a at {t}", label(d)));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, MONOTONE_SLACK, w.detail()))
}

fn support_hint(f: &Family) -> (f64, f64) {
    match f {
        Family::Dirac1 | Family::LackOfMemory | Family::Uniform01 => (0.0, 1.0),
        Family::ParetoMix { .. } => (1.0, 10.0),
        _ => (0.0, 10.0),
    }
}

fn generic_copy(d: &StepDistribution, quad_tol: f64) -> Result<StepDistribution> {
    let inner = d.clone();
    let g = GenericCdf::from_fn(move |t| inner.cdf(t), support_hint(d.family()), quad_tol)?;
    StepDistribution::new(Family::Generic(g), d.index())
}

fn dist_generic_quadrature(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(0.05, 20.0, 50);
    let w = worst_over(&fixtures(), |d| {
        let g = generic_copy(d, DEFAULT_QUAD_TOL)?;
        let mut w = Worst::default();
        for &t in &grid {
            let err = (g.trunc_moment(t)? - d.trunc_moment(t)?).abs();
            w.note(err, || format!("{} t={t}", label(d)));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, 10.0 * DEFAULT_QUAD_TOL, w.detail()))
}

fn dist_moment_limit(_: &Budget) -> Result<Outcome> {
    let light: Vec<_> = fixtures().into_iter().filter(|d| is_light_tailed(d.family())).collect();
    let w = worst_over(&light, |d| {
        let m = d.alpha_moment();
        let mut w = Worst::default();
        w.note(((d.trunc_moment(1e6)? - m) / m).abs(), || label(d));
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, MOMENT_REL_TOL, w.detail()))
}

// ---------------------------------------------------------------------------
// williamson

fn williamson_multiplicativity(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(0.05, 50.0, 40);
    let items: Vec<(StepDistribution, u64)> =
        fixtures().into_iter().flat_map(|d| [2u64, 5].map(|n| (d.clone(), n))).collect();
    let w = worst_over(&items, |(d, n)| {
        let (inner, n) = (d.clone(), *n);
        let law = GenericCdf::from_fn(
            move |t| cdf_n(&inner, n, t).unwrap_or(f64::NAN),
            support_hint(d.family()),
            DEFAULT_QUAD_TOL,
        )?;
        let dn = StepDistribution::new(Family::Generic(law), d.index())?;
        let mut w = Worst::default();
        for &t in &grid {
            let err = (dn.williamson(t)? - powu(d.williamson(t)?, n)).abs();
            w.note(err, || format!("{} n={n} t={t}", label(d)));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, MULTIPLICATIVITY_TOL, w.detail()))
}

fn williamson_round_trip(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(0.01, 100.0, 100);
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        for &t in &grid {
            let f = invert_to_cdf(|s| d.williamson(s).unwrap_or(f64::NAN), None, d.alpha(), t)?;
            w.note((f - d.cdf(t)).abs(), || format!("{} t={t}", label(d)));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, ROUND_TRIP_TOL, w.detail()))
}

fn williamson_n1_identity(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(0.01, 100.0, 200);
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        for &t in &grid {
            let f = d.cdf(t);
            let (g, h) = d.transform_pair(t)?;
            let algebraic = g + t.powf(-d.alpha()) * h;
            w.note((cdf_n(d, 1, t)? - f).abs(), || format!("{} cdf_n t={t}", label(d)));
            w.note((algebraic - f).abs(), || format!("{} G + uH t={t}", label(d)));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, N1_IDENTITY_TOL, w.detail()))
}

fn williamson_monotone(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(0.01, 100.0, 200);
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        let mut prev_row: Option<Vec<f64>> = None;
        for n in 1..=10u64 {
            let row = grid.iter().map(|&t| cdf_n(d, n, t)).collect::<Result<Vec<_>>>()?;
            for i in 1..row.len() {
                w.note(row[i - 1] - row[i], || format!("{} n={n} t={}", label(d), grid[i]));
            }
            if let Some(prev) = &prev_row {
                for (i, &t) in grid.iter().enumerate() {
                    if d.williamson(t)? < 1.0 {
                        w.note(row[i] - prev[i], || format!("{} n={n} vs n-1 t={t}", label(d)));
                    }
                }
            }
            prev_row = Some(row);
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, MONOTONE_SLACK, w.detail()))
}

fn williamson_stable_fixed_point(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(0.01, 1000.0, 200);
    let items: Vec<(f64, u64)> = ALPHAS.iter().flat_map(|&a| [1u64, 2, 5, 10, 100].map(|n| (a, n))).collect();
    let w = worst_over(&items, |&(a, n)| {
        let d = StepDistribution::with_alpha(Family::StableLimit { m: 1.0 }, a)?;
        let dn = StepDistribution::with_alpha(Family::StableLimit { m: n as f64 }, a)?;
        let mut w = Worst::default();
        for &t in &grid {
            w.note((cdf_n(&d, n, t)? - dn.cdf(t)).abs(), || format!("alpha={a} n={n} t={t}"));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, STABLE_FIXED_POINT_TOL, w.detail()))
}

// ---------------------------------------------------------------------------
// kernel

fn kernel_origin_collapse(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(0.01, 100.0, 60);
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        for n in 1..=10u64 {
            for &t in &grid {
                let err = (kernel_cdf(d, &kq(0.0, n, t)?)? - cdf_n(d, n, t)?).abs();
                w.note(err, || format!("{} n={n} t={t}", label(d)));
            }
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, ORIGIN_COLLAPSE_TOL, w.detail()))
}

fn kernel_monotone(_: &Budget) -> Result<Outcome> {
    let xs = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0];
    let ts = log_grid(0.05, 50.0, 80);
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        for n in [1u64, 3, 10] {
            for &t in &ts {
                for x in xs.windows(2) {
                    let (lo, hi) = (kernel_cdf(d, &kq(x[0], n, t)?)?, kernel_cdf(d, &kq(x[1], n, t)?)?);
                    w.note(hi - lo, || format!("{} n={n} t={t} x={}", label(d), x[1]));
                }
            }
            for &x in &xs {
                for t in ts.windows(2) {
                    let (lo, hi) = (kernel_cdf(d, &kq(x, n, t[0])?)?, kernel_cdf(d, &kq(x, n, t[1])?)?);
                    w.note(lo - hi, || format!("{} n={n} x={x} t={}", label(d), t[1]));
                }
            }
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, MONOTONE_SLACK, w.detail()))
}

fn kernel_chapman_kolmogorov(_: &Budget) -> Result<Outcome> {
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        for x in [0.0, 0.5] {
            for n in 1..=3u64 {
                for t in [0.8, 2.0, 5.0] {
                    let lhs = chapman_kolmogorov(d, x, n, t, 1e-10)?;
                    let rhs = kernel_cdf(d, &kq(x, n + 1, t)?)?;
                    w.note((lhs - rhs).abs(), || format!("{} x={x} n={n} t={t}", label(d)));
                }
            }
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, CHAPMAN_KOLMOGOROV_TOL, w.detail()))
}

/// Ceiling on `kernel_trunc_moment / tᵅ` at `t = 10⁶`.
const MOMENT_DECAY_CEILING: f64 = 1e-2;

fn kernel_moment_decay(_: &Budget) -> Result<Outcome> {
    let ts: Vec<f64> = (1..=6).map(|i| 10f64.powi(i)).collect();
    let w = worst_over(&fixtures(), |d| {
        let a = d.alpha();
        let mut w = Worst::default();
        for x in [0.0, 0.5] {
            for n in [1u64, 3] {
                let mut ratios = Vec::new();
                let mut cdfs = Vec::new();
                for &t in &ts {
                    let q = kq(x, n, t)?;
                    ratios.push(kernel_trunc_moment(d, &q)? / t.powf(a));
                    cdfs.push(kernel_cdf(d, &q)?);
                }
                let at = || format!("{} x={x} n={n}", label(d));
                let increasing_ratio = ratios.windows(2).any(|r| r[1] > r[0] + MONOTONE_SLACK);
                let decreasing_cdf = cdfs.windows(2).any(|c| c[1] < c[0] - MONOTONE_SLACK);
                if increasing_ratio || decreasing_cdf {
                    w.note(f64::INFINITY, || format!("{} not monotone", at()));
                }
                w.note(*ratios.last().expect("nonempty"), at);
            }
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, MOMENT_DECAY_CEILING, w.detail()))
}

// ---------------------------------------------------------------------------
// simulator

const KS_EPOCHS: [u64; 4] = [1, 2, 5, 10];

fn simulator_ks(b: &Budget) -> Result<Outcome> {
    let n = b.mc_samples;
    let mut w = Worst::default();
    // ensembles run one at a time; each fans out over streams internally
    for d in fixtures() {
        let cfg = SimConfig::new(d.clone(), 10, n, b.seed)?.with_paths_kept();
        let e = sample_ensemble(&cfg)?;
        let stats = KS_EPOCHS
            .par_iter()
            .map(|&k| {
                let mut m = e.marginal(k as usize).expect("paths kept");
                m.sort_by(f64::total_cmp);
                ks_sorted(&m, |t| cdf_n(&d, k, t).unwrap_or(f64::NAN)).map(|s| (k, s))
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, s) in stats {
            w.note(s, || format!("{} n={k}", label(&d)));
        }
    }
    Ok(Outcome::sampled(w.value, ks_threshold(n), n, w.detail()))
}

/// `|p̂ − p| / σ` with the binomial σ, floored at one count.
fn band_z(empirical: f64, p: f64, n: usize) -> f64 {
    let nf = n as f64;
    let sigma = (p * (1.0 - p) / nf).sqrt().max(1.0 / nf);
    (empirical - p).abs() / sigma
}

fn simulator_joint(b: &Budget) -> Result<Outcome> {
    let n = b.mc_samples;
    let mut w = Worst::default();
    for d in fixtures_at(1.0) {
        let cfg = SimConfig::new(d.clone(), 2, n, b.seed)?.with_paths_kept();
        let e = sample_ensemble(&cfg)?;
        let queries = [[d.quantile(0.5), 2.0 * d.quantile(0.7)], [d.quantile(0.8), 3.0 * d.quantile(0.95)]];
        for x in queries {
            let q = FddQuery::new(vec![1, 2], x.to_vec())?;
            let p = fdd_cdf_enum(&d, &q)?.value;
            let emp = e.joint_frequency(&[1, 2], &x).expect("paths kept");
            w.note(band_z(emp, p, n), || format!("{} x={x:?}", label(&d)));
        }
    }
    Ok(Outcome::sampled(w.value, JOINT_BAND_SIGMAS, n, format!("z-score; {}", w.detail())))
}

fn simulator_determinism(b: &Budget) -> Result<Outcome> {
    let d = StepDistribution::with_alpha(Family::ParetoMix { p: 0.75 }, 1.0)?;
    let n = (b.mc_samples / 10).max(1000);
    let cfg = SimConfig::new(d, 5, n, b.seed)?.with_paths_kept();
    let run = |threads: usize| -> Result<Vec<u64>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| KendallError::InvalidParameter(e.to_string()))?;
        let e = pool.install(|| sample_ensemble(&cfg))?;
        let mut bits: Vec<u64> = e.terminal().iter().map(|v| v.to_bits()).collect();
        for i in 0..e.len() {
            bits.extend(e.path(i).expect("paths kept").iter().map(|v| v.to_bits()));
        }
        Ok(bits)
    };
    let one = run(1)?;
    let mismatches = [2usize, 4]
        .iter()
        .map(|&t| {
            run(t).map(|other| one.iter().zip(&other).filter(|(a, b)| a != b).count() + one.len().abs_diff(other.len()))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(Outcome::sampled(mismatches as f64, 0.0, n, "mismatched values across 1, 2 and 4 workers"))
}

fn simulator_step_floor(b: &Budget) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let mut violations = 0usize;
    let draws = 100_000;
    for _ in 0..draws {
        let alpha = ALPHAS[rng.random_range(0..ALPHAS.len())];
        let x: f64 = rng.random::<f64>() * 10f64.powi(rng.random_range(-3..4));
        let y: f64 = rng.random::<f64>() * 10f64.powi(rng.random_range(-3..4));
        let xi: f64 = rng.random();
        let u: f64 = 1.0 - rng.random::<f64>();
        let theta = u.powf(-0.5 / alpha);
        if step(x, y, xi, theta, alpha) < x.max(y) {
            violations += 1;
        }
    }
    // sampled paths never decrease
    for d in fixtures_at(1.0) {
        let cfg = SimConfig::new(d, 10, 10_000, b.seed)?.with_paths_kept();
        let e = sample_ensemble(&cfg)?;
        for i in 0..e.len() {
            let p = e.path(i).expect("paths kept");
            violations += p.windows(2).filter(|w| w[1] < w[0]).count();
        }
    }
    Ok(Outcome::sampled(violations as f64, 0.0, draws, "transitions below the running max"))
}

// ---------------------------------------------------------------------------
// fdd

fn random_query(d: &StepDistribution, rng: &mut ChaCha8Rng, k: usize) -> Result<FddQuery> {
    let mut epochs = Vec::with_capacity(k);
    let mut e = 0u64;
    for j in 0..k {
        e += if j == 0 { rng.random_range(1..=3) } else { rng.random_range(0..=3) };
        epochs.push(e);
    }
    let mut thresholds: Vec<f64> =
        (0..k).map(|j| d.quantile(rng.random_range(0.05..0.95)).max(1e-3) * (1.0 + 0.5 * j as f64)).collect();
    thresholds.sort_by(f64::total_cmp);
    FddQuery::new(epochs, thresholds)
}

fn fdd_enum_dp(b: &Budget) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let mut w = Worst::default();
    let queries = 100;
    for d in fixtures() {
        for _ in 0..queries {
            let k = rng.random_range(1..=12);
            let q = random_query(&d, &mut rng, k)?;
            let err = (fdd_cdf_enum(&d, &q)?.value - fdd_cdf_dp(&d, &q)?.value).abs();
            w.note(err, || format!("{} {:?} {:?}", label(&d), q.epochs(), q.thresholds()));
        }
    }
    Ok(Outcome::exact(w.value, ENUM_DP_TOL, w.detail()))
}

fn fdd_marginal(_: &Budget) -> Result<Outcome> {
    let w = worst_over(&fixtures(), |d| {
        let (q5, q9) = (d.quantile(0.5).max(1e-3), d.quantile(0.9).max(1e-3));
        let bases: [(Vec<u64>, Vec<f64>); 3] =
            [(vec![2], vec![q5]), (vec![1, 3], vec![q5, 2.0 * q9]), (vec![1, 2, 4], vec![q5, q9, 3.0 * q9])];
        let mut w = Worst::default();
        for (epochs, thresholds) in bases {
            let base = fdd_cdf_enum(d, &FddQuery::new(epochs.clone(), thresholds.clone())?)?.value;
            let (mut e, mut x) = (epochs.clone(), thresholds.clone());
            e.push(epochs.last().expect("nonempty") + 1);
            x.push(1e12);
            let ext = fdd_cdf_enum(d, &FddQuery::new(e, x)?)?.value;
            w.note((ext - base).abs(), || format!("{} {epochs:?}", label(d)));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, MARGINAL_TOL, w.detail()))
}

fn fdd_k1_collapse(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(0.01, 100.0, 40);
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        for n in 1..=10u64 {
            for &t in &grid {
                let v = fdd_cdf_enum(d, &FddQuery::new(vec![n], vec![t])?)?.value;
                w.note((v - cdf_n(d, n, t)?).abs(), || format!("{} n={n} t={t}", label(d)));
            }
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, K1_COLLAPSE_TOL, w.detail()))
}

/// Queries with `k ≤ 3` and `n_j ≤ 3`, thresholds scaled to the law.
pub fn chain_queries(d: &StepDistribution) -> Result<Vec<FddQuery>> {
    let b = d.quantile(0.6).max(0.1);
    [
        (vec![3], vec![2.0 * b]),
        (vec![1, 2], vec![b, 2.0 * b]),
        (vec![2, 3], vec![b, 1.5 * b]),
        (vec![1, 1, 3], vec![b, b, 2.0 * b]),
        (vec![1, 2, 3], vec![0.8 * b, 1.5 * b, 2.5 * b]),
    ]
    .into_iter()
    .map(|(e, x)| FddQuery::new(e, x))
    .collect()
}

fn fdd_kernel_chain(_: &Budget) -> Result<Outcome> {
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        for q in chain_queries(d)? {
            let oracle = kernel_chain(d, &q, 1e-8)?;
            let exact = fdd_cdf_enum(d, &q)?.value;
            w.note((oracle - exact).abs(), || format!("{} {:?} {:?}", label(d), q.epochs(), q.thresholds()));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, KERNEL_CHAIN_TOL, w.detail()))
}

fn fdd_monte_carlo(b: &Budget) -> Result<Outcome> {
    let n = b.mc_samples;
    let mut w = Worst::default();
    for d in fixtures_at(1.0) {
        let cfg = SimConfig::new(d.clone(), 3, n, b.seed.wrapping_add(1))?.with_paths_kept();
        let e = sample_ensemble(&cfg)?;
        let q = |u: f64| d.quantile(u);
        let queries = [
            FddQuery::new(vec![1, 3], vec![q(0.6), 2.0 * q(0.8)])?,
            FddQuery::new(vec![1, 2, 3], vec![q(0.5), 1.5 * q(0.7), 2.5 * q(0.9)])?,
        ];
        for query in queries {
            let p = fdd_cdf_enum(&d, &query)?.value;
            let emp = e.joint_frequency(query.epochs(), query.thresholds()).expect("paths kept");
            w.note(band_z(emp, p, n), || format!("{} k={}", label(&d), query.k()));
        }
    }
    Ok(Outcome::sampled(w.value, FDD_BAND_SIGMAS, n, format!("z-score; {}", w.detail())))
}

fn fdd_limit_cdfs(_: &Budget) -> Result<Outcome> {
    type Law = Box<dyn Fn(&[f64], &[f64]) -> Result<f64> + Sync + Send>;
    let times = [0.5, 1.0, 2.0];
    let base = [0.5, 1.0, 2.0];
    let mut laws: Vec<(String, Law)> = Vec::new();
    for a in ALPHAS {
        laws.push((format!("finite m=1 alpha={a}"), Box::new(move |t, z| fdd_limit_finite_moment(t, z, 1.0, a))));
        for theta in [0.0, 0.5 * a] {
            laws.push((
                format!("regvar theta={theta} alpha={a}"),
                Box::new(move |t, z| fdd_limit_regvar(t, z, a, theta)),
            ));
        }
    }
    let w = worst_over(&laws, |(name, law)| {
        let mut w = Worst::default();
        w.note(law(&times, &[1e-300; 3])?, || format!("{name} at 0"));
        w.note(1.0 - law(&times, &[1e300; 3])?, || format!("{name} at infinity"));
        for j in 0..base.len() {
            let lo = if j == 0 { 1e-300 } else { base[j - 1] };
            let hi = if j + 1 == base.len() { 1e300 } else { base[j + 1] };
            let mut prev = 0.0;
            for z in log_grid(lo, hi, 60) {
                let mut levels = base;
                levels[j] = z;
                let v = law(&times, &levels)?;
                w.note(prev - v, || format!("{name} coordinate {j} z={z}"));
                prev = v;
            }
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, LIMIT_EDGE_TOL, w.detail()))
}

/// Allowed distance from 0 and 1 at the extreme scanned levels.
const LIMIT_EDGE_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// asymptotics

fn asymptotics_tail_expansion(_: &Budget) -> Result<Outcome> {
    let finite: Vec<_> = fixtures().into_iter().filter(|d| d.alpha_moment().is_finite()).collect();
    let xs = [10.0, 1e2, 1e3, 1e4];
    let w = worst_over(&finite, |d| {
        let mut w = Worst::default();
        for n in [2u64, 5] {
            let errs = xs
                .iter()
                .map(|&x| Ok((tail_n(d, n, x)? / tail_expansion(d, n, x)? - 1.0).abs()))
                .collect::<Result<Vec<f64>>>()?;
            for (i, e) in errs.windows(2).enumerate() {
                w.note(e[1] - e[0], || format!("{} n={n} x={}", label(d), xs[i + 1]));
            }
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, MONOTONE_SLACK, format!("relative error growth; {}", w.detail())))
}

fn limit_laws() -> Result<Vec<(String, LimitLaw)>> {
    let mut laws = Vec::new();
    for a in ALPHAS {
        let idx = KendallIndex::new(a)?;
        for m in [0.5, 1.0, 2.0] {
            laws.push((format!("finite m={m} alpha={a}"), LimitLaw::finite_moment(m, idx)?));
        }
        for theta in [0.0, 0.5 * a] {
            laws.push((format!("regvar theta={theta} alpha={a}"), LimitLaw::regvar(theta, idx)?));
        }
    }
    Ok(laws)
}

fn asymptotics_limit_cdf(_: &Budget) -> Result<Outcome> {
    let grid = log_grid(1e-6, 1e6, 1000);
    let mut w = Worst::default();
    for (name, law) in limit_laws()? {
        w.note(limit_cdf(&law, 1e-300), || format!("{name} at 0"));
        w.note(1.0 - limit_cdf(&law, 1e300), || format!("{name} at infinity"));
        for pair in grid.windows(2) {
            w.note(limit_cdf(&law, pair[0]) - limit_cdf(&law, pair[1]), || format!("{name} x={}", pair[1]));
        }
    }
    Ok(Outcome::exact(w.value, LIMIT_EDGE_TOL, w.detail()))
}

fn asymptotics_norming_residual(_: &Budget) -> Result<Outcome> {
    let w = worst_over(&fixtures(), |d| {
        let mut w = Worst::default();
        for n in [1_000u64, 10_000, 1_000_000] {
            let a_n = norming_sequence(d, n, NormingMethod::NumericInverse)?;
            let residual = (n as f64 * d.trunc_moment(a_n)? / a_n.powf(d.alpha()) - 1.0).abs();
            w.note(residual, || format!("{} n={n}", label(d)));
        }
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, NORMING_RESIDUAL_TOL, w.detail()))
}

/// Ceiling on the sup-distance at `n = 10⁴`.
pub const CONVERGENCE_CEILING: f64 = 0.01;

fn asymptotics_convergence(_: &Budget) -> Result<Outcome> {
    let items: Vec<_> = fixtures().into_iter().filter(|d| !matches!(d.family(), Family::ParetoMix { .. })).collect();
    let grid = log_grid(0.01, 100.0, 400);
    let w = worst_over(&items, |d| {
        let law = LimitLaw::finite_moment(d.alpha_moment(), d.index())?;
        let table = convergence_diagnostic(d, &[100, 1_000, 10_000], &law, &grid, NormingMethod::ClosedForm)?;
        let mut w = Worst::default();
        if !table.monotone {
            w.note(f64::INFINITY, || format!("{} not decreasing", label(d)));
        }
        let last = table.rows.last().expect("three rows").sup_distance;
        w.note(last, || format!("{} sup distance at n=1e4", label(d)));
        Ok(w)
    })?;
    Ok(Outcome::exact(w.value, CONVERGENCE_CEILING, w.detail()))
}

// ---------------------------------------------------------------------------
// cli

fn cli_bit_stable(_: &Budget) -> Result<Outcome> {
    let commands: [&[&str]; 4] = [
        &["sample", "--dist", "uniform", "--alpha", "1", "--n", "5", "--paths", "3", "--seed", "7"],
        &["cdf", "--dist", "dirac", "--alpha", "1", "--n", "2", "--t", "2"],
        &["fdd", "--dist", "dirac", "--alpha", "1", "--epochs", "1,2", "--thresholds", "2,3", "--json"],
        &["tail", "--dist", "gamma", "--alpha", "1", "--n", "3", "--x", "10,100", "--json"],
    ];
    let mut differing = 0;
    for argv in commands {
        let (c1, o1) = crate::cli::run_captured(argv.iter().copied());
        let (c2, o2) = crate::cli::run_captured(argv.iter().copied());
        if c1 != 0 || c1 != c2 || o1 != o2 || o1.is_empty() {
            differing += 1;
        }
    }
    Ok(Outcome::exact(differing as f64, 0.0, "commands with differing output across two runs"))
}
