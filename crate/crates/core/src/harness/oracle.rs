//! Brute-force numerical oracles for the closed forms: Stieltjes integrals
//! against kernel cdfs, nested kernel chains and Chapman–Kolmogorov.

use std::cell::RefCell;

use crate::distributions::StepDistribution;
use crate::error::Result;
use crate::fdd::FddQuery;
use crate::kernel::{kernel_cdf, KernelQuery};
use crate::quadrature::integrate_with_breaks;
use crate::williamson::powu;

/// `∫_{[lo, hi]} f dF` for a right-continuous cdf `F`.
///
/// `marks` lists points where `F` may jump or kink. Jumps at marks (and at
/// both ends) are measured as `F(c) − F(c − δ)`; between marks the density
/// is a central difference of `F` and is integrated adaptively.
pub fn stieltjes<F, C>(f: F, cdf: C, lo: f64, hi: f64, marks: &[f64], tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    C: Fn(f64) -> f64,
{
    if !(hi >= lo) {
        return Ok(0.0);
    }
    let mut points = vec![lo, hi];
    points.extend(marks.iter().copied().filter(|&c| c > lo && c < hi));
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut total = 0.0;
    for &c in &points {
        let delta = 1e-12 * c.abs().max(1.0);
        let mass = cdf(c) - cdf(c - delta);
        if mass > 1e-15 {
            total += f(c) * mass;
        }
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let density = |t: f64| {
            let h = (1e-5 * t.abs().max(1e-6)).min(0.5 * (t - a).min(b - t));
            if h <= 0.0 {
                return 0.0;
            }
            (cdf(t + h) - cdf(t - h)) / (2.0 * h)
        };
        total += integrate_with_breaks(|t| f(t) * density(t), &[a, b], tol)?.value;
    }
    Ok(total)
}

/// `t ↦ P_n(y, (0, t])`, extended by 0 below the start point.
fn kernel_fn(d: &StepDistribution, y: f64, n: u64) -> impl Fn(f64) -> f64 + '_ {
    move |t: f64| {
        if t < y {
            0.0
        } else if t <= 0.0 {
            powu(d.cdf(0.0), n)
        } else {
            KernelQuery::new(y, n, t).and_then(|q| kernel_cdf(d, &q)).unwrap_or(f64::NAN)
        }
    }
}

fn marks_for(d: &StepDistribution, y: f64) -> Vec<f64> {
    let mut m = d.breakpoints();
    m.extend(d.atoms());
    m.push(y);
    m
}

/// The joint cdf `P(X_{n_1} ≤ x_1, …, X_{n_k} ≤ x_k)` as the nested integral
/// `∫_{[0,x_1]} ∫_{[y_1,x_2]} ⋯ P_{Δn_k}(y_{k−1}, (0, x_k]) P_{Δn_{k−1}}(y_{k−2}, dy_{k−1}) ⋯ P_{n_1}(0, dy_1)`.
pub fn kernel_chain(d: &StepDistribution, q: &FddQuery, tol: f64) -> Result<f64> {
    let mut deltas = Vec::with_capacity(q.k());
    let mut prev = 0;
    for &n in q.epochs() {
        deltas.push(n - prev);
        prev = n;
    }
    chain_level(d, &deltas, q.thresholds(), 0, 0.0, tol)
}

fn chain_level(d: &StepDistribution, deltas: &[u64], x: &[f64], j: usize, y: f64, tol: f64) -> Result<f64> {
    if y > x[j] {
        return Ok(0.0);
    }
    let last = j + 1 == x.len();
    if deltas[j] == 0 {
        // no steps between the epochs: the walk stays at y
        return if last { Ok(1.0) } else { chain_level(d, deltas, x, j + 1, y, tol) };
    }
    let cdf = kernel_fn(d, y, deltas[j]);
    if last {
        return Ok(cdf(x[j]));
    }
    let inner_tol = tol * 0.1;
    let failure = RefCell::new(None);
    let v = stieltjes(
        |w| match chain_level(d, deltas, x, j + 1, w, inner_tol) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        cdf,
        y,
        x[j],
        &marks_for(d, y),
        tol,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => v,
    }
}

/// `∫_{[x, t]} P_1(w, (0, t]) P_n(x, dw)`, which should equal `P_{n+1}(x, (0, t])`.
pub fn chapman_kolmogorov(d: &StepDistribution, x: f64, n: u64, t: f64, tol: f64) -> Result<f64> {
    let one = |w: f64| kernel_fn(d, w, 1)(t);
    stieltjes(one, kernel_fn(d, x, n), x, t, &marks_for(d, x), tol)
}
