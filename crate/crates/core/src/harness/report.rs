use std::fmt::Write as _;

use serde::Serialize;

use super::constants::THRESHOLDS_VERSION;

/// Outcome of one validation case. A case passes when `statistic` is finite
/// and does not exceed `threshold`.
#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub suite: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Monte Carlo sample size, for randomized cases.
    pub n: Option<u64>,
    pub seed: Option<u64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub suite: String,
    pub seed: u64,
    pub mc_samples: usize,
    pub thresholds_version: &'static str,
    pub cases: Vec<CaseResult>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn new(suite: &str, seed: u64, mc_samples: usize, cases: Vec<CaseResult>) -> Self {
        let pass = cases.iter().all(|c| c.pass);
        Self { suite: suite.to_string(), seed, mc_samples, thresholds_version: THRESHOLDS_VERSION, cases, pass }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "suite {}  seed {}  mc_samples {}  thresholds v{}",
            self.suite, self.seed, self.mc_samples, self.thresholds_version
        );
        let width = self.cases.iter().map(|c| c.name.len()).max().unwrap_or(4);
        for c in &self.cases {
            let _ = writeln!(
                s,
                "{:<4}  {:<width$}  {:>12.4e}  <= {:<10.3e}  {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.statistic,
                c.threshold,
                c.detail
            );
        }
        let _ = writeln!(s, "{}", if self.pass { "overall: PASS" } else { "overall: FAIL" });
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,suite,statistic,threshold,pass,n,seed\n");
        for c in &self.cases {
            let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                c.name,
                c.suite,
                c.statistic,
                c.threshold,
                c.pass,
                opt(c.n),
                opt(c.seed)
            );
        }
        s
    }
}
