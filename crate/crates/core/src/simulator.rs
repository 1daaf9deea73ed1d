//! Path simulation by the max/Pareto recursion
//! `X_{n+1} = M_{n+1} [1(ξ_n > ϱ_{n+1}) + θ_{n+1} 1(ξ_n < ϱ_{n+1})]`.
//!
//! Random numbers come from ChaCha8 with one stream per worker partition:
//! stream `s` is `ChaCha8Rng::seed_from_u64(seed)` moved to stream `s`, and
//! it owns the contiguous block of paths `[s·N/S, (s+1)·N/S)`. The ensemble
//! is therefore a pure function of `(seed, streams)`, independent of how
//! many threads execute it.

use std::io::Write;
use std::sync::OnceLock;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::distributions::{Family, StepDistribution};
use crate::error::{KendallError, Result};

/// One state of the walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkState {
    pub index: u64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dist: StepDistribution,
    pub horizon: u64,
    pub paths: usize,
    pub seed: u64,
    pub streams: usize,
    pub keep_paths: bool,
}

impl SimConfig {
    pub fn new(dist: StepDistribution, horizon: u64, paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self { dist, horizon, paths, seed, streams: 64, keep_paths: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_streams(mut self, streams: usize) -> Result<Self> {
        self.streams = streams;
        self.validate()?;
        Ok(self)
    }

    pub fn with_paths_kept(mut self) -> Self {
        self.keep_paths = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(KendallError::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.paths == 0 {
            return Err(KendallError::InvalidParameter("number of paths must be at least 1".into()));
        }
        if self.streams == 0 {
            return Err(KendallError::InvalidParameter("number of streams must be at least 1".into()));
        }
        Ok(())
    }

    /// Path indices owned by `stream`.
    pub fn stream_range(&self, stream: usize) -> std::ops::Range<usize> {
        let bound = |s: usize| (s as u128 * self.paths as u128 / self.streams as u128) as usize;
        bound(stream)..bound(stream + 1)
    }

    /// JSON echo of the configuration.
    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "dist": self.dist.describe(),
            "horizon": self.horizon,
            "paths": self.paths,
            "seed": self.seed,
            "streams": self.streams,
        })
    }
}

/// Inverse-cdf sample `u^{−1/(2α)}` of the Pareto law `π_{2α}`.
pub fn sample_pareto(u: f64, alpha: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(KendallError::Domain(format!("uniform variate must lie in (0, 1), got {u}")));
    }
    Ok(u.powf(-0.5 / alpha))
}

/// One transition of the walk. `ξ = ϱ` resolves to the `M` branch.
#[inline]
pub fn step(x_prev: f64, y: f64, xi: f64, theta: f64, alpha: f64) -> f64 {
    let (lo, hi) = if x_prev <= y { (x_prev, y) } else { (y, x_prev) };
    if hi == 0.0 {
        return 0.0;
    }
    let rho = (lo / hi).powf(alpha);
    if xi < rho {
        hi * theta
    } else {
        hi
    }
}

enum StepSampler<'a> {
    Dirac,
    Stable { m: f64, inv_alpha: f64 },
    Gamma(rand_distr::Gamma<f64>),
    Quantile(&'a StepDistribution),
}

impl<'a> StepSampler<'a> {
    fn new(d: &'a StepDistribution) -> Self {
        match d.family() {
            Family::Dirac1 => Self::Dirac,
            Family::StableLimit { m } => Self::Stable { m: *m, inv_alpha: 1.0 / d.alpha() },
            Family::Gamma { shape, rate } => {
                Self::Gamma(rand_distr::Gamma::new(*shape, 1.0 / rate).expect("validated parameters"))
            }
            _ => Self::Quantile(d),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Dirac => 1.0,
            // m X^{−α} is Gamma(2, 1) distributed
            Self::Stable { m, inv_alpha } => {
                let u1: f64 = rng.sample(Open01);
                let u2: f64 = rng.sample(Open01);
                let g2 = -(u1.ln() + u2.ln());
                (m / g2).powf(*inv_alpha)
            }
            Self::Gamma(g) => g.sample(rng),
            Self::Quantile(d) => d.quantile(rng.sample(Open01)),
        }
    }
}

fn stream_rng(seed: u64, stream: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

fn fill_path<R: Rng>(sampler: &StepSampler<'_>, alpha: f64, rng: &mut R, out: &mut [f64]) {
    let mut x = sampler.sample(rng);
    out[0] = x;
    for slot in out.iter_mut().skip(1) {
        let y = sampler.sample(rng);
        let xi: f64 = rng.random();
        let u: f64 = rng.sample(Open01);
        let theta = u.powf(-0.5 / alpha);
        x = step(x, y, xi, theta, alpha);
        *slot = x;
    }
}

/// First path `X_1, …, X_horizon` produced by `stream`.
pub fn sample_path(cfg: &SimConfig, stream: usize) -> Result<Vec<WalkState>> {
    if stream >= cfg.streams {
        return Err(KendallError::Domain(format!("stream {stream} out of range (streams = {})", cfg.streams)));
    }
    let sampler = StepSampler::new(&cfg.dist);
    let mut rng = stream_rng(cfg.seed, stream);
    let mut path = vec![0.0; cfg.horizon as usize];
    fill_path(&sampler, cfg.dist.alpha(), &mut rng, &mut path);
    Ok(path.into_iter().enumerate().map(|(i, value)| WalkState { index: i as u64 + 1, value }).collect())
}

/// Simulated terminal values (and optionally full paths) of the walk.
#[derive(Debug)]
pub struct WalkEnsemble {
    terminal: Vec<f64>,
    paths: Option<Vec<f64>>,
    horizon: usize,
    seed: u64,
    streams: usize,
    config: serde_json::Value,
    sorted: OnceLock<Vec<f64>>,
}

impl WalkEnsemble {
    /// Wraps an existing sample, e.g. for KS checks of external data.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            terminal: values,
            paths: None,
            horizon: 1,
            seed: 0,
            streams: 1,
            config: serde_json::Value::Null,
            sorted: OnceLock::new(),
        }
    }

    pub fn terminal(&self) -> &[f64] {
        &self.terminal
    }

    pub fn len(&self) -> usize {
        self.terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Row `i` of the full paths, when they were kept.
    pub fn path(&self, i: usize) -> Option<&[f64]> {
        self.paths.as_ref().map(|p| &p[i * self.horizon..(i + 1) * self.horizon])
    }

    /// Values `X_n` across all paths, `1 ≤ n ≤ horizon`.
    pub fn marginal(&self, n: usize) -> Option<Vec<f64>> {
        if n == 0 || n > self.horizon {
            return None;
        }
        let p = self.paths.as_ref()?;
        Some(p.chunks_exact(self.horizon).map(|row| row[n - 1]).collect())
    }

    pub fn sorted(&self) -> &[f64] {
        self.sorted.get_or_init(|| {
            let mut v = self.terminal.clone();
            v.sort_by(f64::total_cmp);
            v
        })
    }

    /// Fraction of terminal values `≤ t`.
    pub fn empirical_cdf(&self, t: f64) -> f64 {
        let s = self.sorted();
        if s.is_empty() {
            return 0.0;
        }
        s.partition_point(|&v| v <= t) as f64 / s.len() as f64
    }

    /// Fraction of paths with `X_{n_j} ≤ x_j` for all `j`.
    pub fn joint_frequency(&self, epochs: &[u64], thresholds: &[f64]) -> Option<f64> {
        let p = self.paths.as_ref()?;
        if epochs.iter().any(|&n| n == 0 || n as usize > self.horizon) || epochs.len() != thresholds.len() {
            return None;
        }
        let hits = p
            .chunks_exact(self.horizon)
            .filter(|row| epochs.iter().zip(thresholds).all(|(&n, &x)| row[n as usize - 1] <= x))
            .count();
        Some(hits as f64 / self.terminal.len() as f64)
    }

    fn header(&self) -> String {
        format!("# {}\n", self.config)
    }

    /// Single-column CSV of terminal values.
    pub fn write_terminal_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.header().as_bytes())?;
        writeln!(w, "x")?;
        for v in &self.terminal {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    /// One row per path, columns `x1..x_horizon`.
    pub fn write_paths_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let p = self
            .paths
            .as_ref()
            .ok_or_else(|| KendallError::InvalidParameter("ensemble was sampled without full paths".into()))?;
        w.write_all(self.header().as_bytes())?;
        let cols: Vec<String> = (1..=self.horizon).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", cols.join(","))?;
        for row in p.chunks_exact(self.horizon) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Samples `cfg.paths` walks, fanning the streams out over the rayon pool.
pub fn sample_ensemble(cfg: &SimConfig) -> Result<WalkEnsemble> {
    cfg.validate()?;
    let horizon = cfg.horizon as usize;
    let alpha = cfg.dist.alpha();
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.streams)
        .into_par_iter()
        .map(|s| {
            let range = cfg.stream_range(s);
            let sampler = StepSampler::new(&cfg.dist);
            let mut rng = stream_rng(cfg.seed, s);
            let mut terminal = Vec::with_capacity(range.len());
            let mut rows = Vec::with_capacity(if cfg.keep_paths { range.len() * horizon } else { 0 });
            let mut buf = vec![0.0; horizon];
            for _ in range {
                fill_path(&sampler, alpha, &mut rng, &mut buf);
                terminal.push(buf[horizon - 1]);
                if cfg.keep_paths {
                    rows.extend_from_slice(&buf);
                }
            }
            (terminal, rows)
        })
        .collect();
    let mut terminal = Vec::with_capacity(cfg.paths);
    let mut paths = cfg.keep_paths.then(|| Vec::with_capacity(cfg.paths * horizon));
    for (t, rows) in blocks {
        terminal.extend(t);
        if let Some(p) = paths.as_mut() {
            p.extend(rows);
        }
    }
    Ok(WalkEnsemble {
        terminal,
        paths,
        horizon,
        seed: cfg.seed,
        streams: cfg.streams,
        config: cfg.describe(),
        sorted: OnceLock::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Family, StepDistribution};

    fn dist(family: Family, alpha: f64) -> StepDistribution {
        StepDistribution::with_alpha(family, alpha).unwrap()
    }

    #[test]
    fn pareto_examples() {
        assert!((sample_pareto(0.25, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((sample_pareto(1.0 - 1e-15, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((sample_pareto(0.01, 0.5).unwrap() - 100.0).abs() < 1e-10);
        assert!(sample_pareto(0.0, 1.0).is_err());
        assert!(sample_pareto(1.0, 1.0).is_err());
    }

    #[test]
    fn step_examples() {
        assert_eq!(step(1.0, 1.0, 0.999, 2.0, 0.8), 2.0);
        assert_eq!(step(2.0, 1.0, 0.7, 3.0, 1.0), 2.0);
        assert_eq!(step(2.0, 1.0, 0.3, 3.0, 1.0), 6.0);
        // tie goes to the M branch
        assert_eq!(step(2.0, 1.0, 0.5, 3.0, 1.0), 2.0);
        assert_eq!(step(0.0, 0.0, 0.1, 3.0, 1.0), 0.0);
    }

    #[test]
    fn dirac_paths_start_at_one() {
        let cfg = SimConfig::new(dist(Family::Dirac1, 1.0), 3, 100, 5).unwrap().with_paths_kept();
        let e = sample_ensemble(&cfg).unwrap();
        assert!(e.marginal(1).unwrap().iter().all(|&x| x == 1.0));
        let p = sample_path(&cfg, 0).unwrap();
        assert_eq!(p[0], WalkState { index: 1, value: 1.0 });
        assert_eq!(p[1].value, e.path(0).unwrap()[1]);
    }

    #[test]
    fn empirical_cdf_counts() {
        let e = WalkEnsemble::from_values(vec![3.0, 1.0, 4.0, 2.0]);
        assert_eq!(e.empirical_cdf(2.5), 0.5);
        assert_eq!(e.empirical_cdf(0.5), 0.0);
        assert_eq!(e.empirical_cdf(4.0), 1.0);
    }

    #[test]
    fn single_path_is_reproducible() {
        let cfg = SimConfig::new(dist(Family::Uniform01, 1.0), 5, 1, 42).unwrap();
        let a = sample_ensemble(&cfg).unwrap();
        let b = sample_ensemble(&cfg).unwrap();
        assert_eq!(a.terminal()[0].to_bits(), b.terminal()[0].to_bits());
    }

    #[test]
    fn stream_partition_covers_all_paths() {
        let cfg = SimConfig::new(dist(Family::Dirac1, 1.0), 1, 10, 0).unwrap().with_streams(3).unwrap();
        let total: usize = (0..3).map(|s| cfg.stream_range(s).len()).sum();
        assert_eq!(total, 10);
        assert!(sample_path(&cfg, 3).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(dist(Family::Dirac1, 1.0), 0, 10, 0).is_err());
        assert!(SimConfig::new(dist(Family::Dirac1, 1.0), 1, 0, 0).is_err());
    }

    #[test]
    fn csv_export_has_config_echo() {
        let cfg = SimConfig::new(dist(Family::Uniform01, 1.0), 2, 3, 9).unwrap().with_paths_kept();
        let e = sample_ensemble(&cfg).unwrap();
        let mut out = Vec::new();
        e.write_paths_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        let echo: serde_json::Value = serde_json::from_str(lines.next().unwrap().trim_start_matches("# ")).unwrap();
        assert_eq!(echo["seed"], 9);
        assert_eq!(lines.next().unwrap(), "x1,x2");
        assert_eq!(lines.count(), 3);
    }
}
