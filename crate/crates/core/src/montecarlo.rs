//! Monte Carlo oracle for the shuffled-DP-SGD hypothesis test.
//!
//! Under H0 the adversary sees `M` i.i.d. standard normals; under H1 one
//! coordinate is shifted by `1/σ`. The Neyman–Pearson test thresholds
//! `S = (1/M) Σ e^{x_j/σ - 1/(2σ²)}`. The shifted coordinate is always index 0,
//! which is equivalent by exchangeability and saves one draw per replica.
//!
//! Replica `i` of stream `t` is driven by its own generator keyed on
//! `(seed, t, i)`, and all reductions run in replica order, so results are
//! bit-identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use crate::accountant::{delta_bound, PrivacyParams};
use crate::error::{Error, Result};
use crate::lognormal::{
    be_error_bound, check_sigma, edgeworth_model, moments, BeMode, B_SHEVTSOVA,
};
use crate::numerics::{exp_m1, std_normal_cdf};

/// Replicas per parallel work unit.
pub const BLOCK: usize = 4096;
/// Smallest replica count for which standard errors are quoted.
pub const MIN_REPLICAS: usize = 1000;
/// Shifted-normal components of the moment sampler.
const MIXTURE_COMPONENTS: usize = 5;

const STREAM_H0: u64 = 0;
const STREAM_H1: u64 = 1;
const STREAM_CDF: u64 = 2;
const STREAM_MOMENTS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H0,
    H1,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for replica `index` of stream `stream`.
pub fn replica_rng(seed: u64, stream: u64, index: u64) -> Xoshiro256PlusPlus {
    let key = splitmix(splitmix(splitmix(seed) ^ stream) ^ index);
    Xoshiro256PlusPlus::seed_from_u64(key)
}

// (S, Y_0) for one replica.
fn draw<R: Rng + ?Sized>(inv_sigma: f64, m: usize, hyp: Hypothesis, rng: &mut R) -> (f64, f64) {
    let half = 0.5 * inv_sigma * inv_sigma;
    let shift = match hyp {
        Hypothesis::H0 => 0.0,
        Hypothesis::H1 => inv_sigma,
    };
    let z: f64 = rng.sample(StandardNormal);
    let y0 = ((z + shift) * inv_sigma - half).exp();
    let mut sum = y0;
    for _ in 1..m {
        let z: f64 = rng.sample(StandardNormal);
        sum += (z * inv_sigma - half).exp();
    }
    (sum / m as f64, y0)
}

/// One draw of the test statistic under `hyp`.
pub fn sample_statistic<R: Rng + ?Sized>(
    sigma: f64,
    rounds: usize,
    hyp: Hypothesis,
    rng: &mut R,
) -> Result<f64> {
    check_sigma(sigma)?;
    if rounds < 1 {
        return Err(Error::Precondition("need M >= 1".into()));
    }
    Ok(draw(1.0 / sigma, rounds, hyp, rng).0)
}

fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

// Maps every replica index through `f`, block-parallel, in index order.
fn per_replica<T: Send>(count: usize, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let blocks = count.div_ceil(BLOCK);
    let parts: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let end = ((b + 1) * BLOCK).min(count);
            (b * BLOCK..end).map(|i| f(i as u64)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestConfig {
    pub sigma: f64,
    pub rounds: usize,
    /// Replicas per hypothesis.
    pub replicas: usize,
    pub seed: u64,
    pub alpha_grid: Vec<f64>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl TestConfig {
    /// `a ∈ {0.1, 0.2, …, 0.9}`.
    pub fn decile_grid() -> Vec<f64> {
        (1..=9).map(|i| i as f64 / 10.0).collect()
    }

    fn validate(&self) -> Result<f64> {
        check_sigma(self.sigma)?;
        if self.rounds < 2 {
            return Err(Error::Precondition(format!("need M >= 2, got {}", self.rounds)));
        }
        if self.replicas < MIN_REPLICAS {
            return Err(Error::Precondition(format!(
                "need at least {MIN_REPLICAS} replicas, got {}",
                self.replicas
            )));
        }
        let g = &self.alpha_grid;
        if g.is_empty()
            || g.iter().any(|a| !(0.0..=1.0).contains(a))
            || g.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::domain(
                "alpha grid must be non-empty, strictly increasing and inside [0, 1]",
            ));
        }
        Ok(1.0 / self.sigma)
    }
}

/// Empirical trade-off curve with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalTestReport {
    pub config: TestConfig,
    pub alpha_grid: Vec<f64>,
    /// Realized type I error of each threshold.
    pub alpha_realized: Vec<f64>,
    pub beta_hat_raw: Vec<f64>,
    /// Isotonic (non-increasing) regression of `beta_hat_raw`.
    pub beta_hat: Vec<f64>,
    pub beta_se: Vec<f64>,
    /// `mean_H0[Y_0 · 1{S < h}]`.
    pub beta_hat_reweighted: Vec<f64>,
    pub beta_se_reweighted: Vec<f64>,
    pub delta_thm: Option<f64>,
    pub bound_valid: bool,
    /// `1 - a - δ_thm` where the bound is valid.
    pub lower_bound_reference: Option<Vec<f64>>,
}

struct Samples {
    // H0 statistics sorted ascending, with their Y_0.
    h0: Vec<(f64, f64)>,
    h1: Vec<f64>,
}

fn simulate(cfg: &TestConfig) -> Result<Samples> {
    let inv_sigma = cfg.validate()?;
    let (m, seed) = (cfg.rounds, cfg.seed);
    let (mut h0, mut h1) = with_threads(cfg.threads, || {
        let h0 = per_replica(cfg.replicas, |i| {
            draw(inv_sigma, m, Hypothesis::H0, &mut replica_rng(seed, STREAM_H0, i))
        });
        let h1 = per_replica(cfg.replicas, |i| {
            draw(inv_sigma, m, Hypothesis::H1, &mut replica_rng(seed, STREAM_H1, i)).0
        });
        (h0, h1)
    })?;
    h0.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    h1.sort_by(f64::total_cmp);
    Ok(Samples { h0, h1 })
}

/// Pool-adjacent-violators fit of a non-increasing sequence.
pub fn isotonic_non_increasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a >= b {
                break;
            }
            blocks.pop();
            let n = na + nb;
            *blocks.last_mut().expect("two blocks") = ((a * na as f64 + b * nb as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, n)| std::iter::repeat_n(v, n))
        .collect()
}

fn report(cfg: &TestConfig, s: &Samples) -> Result<EmpiricalTestReport> {
    let r = cfg.replicas;
    let rf = r as f64;
    // Prefix sums of Y_0 and Y_0² in threshold order.
    let mut py = Vec::with_capacity(r + 1);
    let mut py2 = Vec::with_capacity(r + 1);
    let (mut acc, mut acc2) = (0.0, 0.0);
    py.push(0.0);
    py2.push(0.0);
    for &(_, y) in &s.h0 {
        acc += y;
        acc2 += y * y;
        py.push(acc);
        py2.push(acc2);
    }

    let mut alpha_realized = Vec::new();
    let mut raw = Vec::new();
    let mut se = Vec::new();
    let mut rw = Vec::new();
    let mut rw_se = Vec::new();
    for &a in &cfg.alpha_grid {
        // Reject when S >= h, with h the (1-a) order statistic of H0.
        let k = ((a * rf).floor() as usize).min(r);
        let (below_h0, below_h1) = if k == 0 {
            (r, r)
        } else {
            let h = s.h0[r - k].0;
            let below_h0 = s.h0.partition_point(|p| p.0 < h);
            (below_h0, s.h1.partition_point(|&v| v < h))
        };
        alpha_realized.push((r - below_h0) as f64 / rf);
        let b = below_h1 as f64 / rf;
        raw.push(b);
        se.push((b * (1.0 - b) / rf).sqrt());
        let mean = py[below_h0] / rf;
        rw.push(mean);
        rw_se.push(((py2[below_h0] / rf - mean * mean).max(0.0) / (rf - 1.0)).sqrt());
    }

    let bound = if cfg.rounds >= 3 {
        Some(delta_bound(&PrivacyParams::new(cfg.sigma, cfg.rounds as u64, 1)?, B_SHEVTSOVA)?)
    } else {
        None
    };
    let bound_valid = bound.is_some_and(|b| b.valid);
    let lower_bound_reference = bound
        .filter(|b| b.valid)
        .map(|b| cfg.alpha_grid.iter().map(|a| 1.0 - a - b.total).collect());
    Ok(EmpiricalTestReport {
        config: cfg.clone(),
        alpha_grid: cfg.alpha_grid.clone(),
        alpha_realized,
        beta_hat: isotonic_non_increasing(&raw),
        beta_hat_raw: raw,
        beta_se: se,
        beta_hat_reweighted: rw,
        beta_se_reweighted: rw_se,
        delta_thm: bound.map(|b| b.total),
        bound_valid,
        lower_bound_reference,
    })
}

/// Neyman–Pearson trade-off estimate at each level of `cfg.alpha_grid`.
pub fn empirical_tradeoff(cfg: &TestConfig) -> Result<EmpiricalTestReport> {
    report(cfg, &simulate(cfg)?)
}

/// Empirical CDF of the standardized mean `(Ȳ_n - 1)√n/√μ₂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    pub sigma: f64,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub x_grid: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub se: Vec<f64>,
}

impl EmpiricalCdf {
    /// `max |F̂(x) - reference(x)|` over grid points with `|x| <= half_width`.
    pub fn max_gap(&self, half_width: f64, reference: impl Fn(f64) -> f64) -> f64 {
        self.x_grid
            .iter()
            .zip(&self.f_hat)
            .filter(|(x, _)| x.abs() <= half_width + 1e-12)
            .map(|(&x, &f)| (f - reference(x)).abs())
            .fold(0.0, f64::max)
    }
}

impl EmpiricalCdf {
    /// Mean of `(F̂(x) - reference(x))²` over grid points with `|x| <= half_width`.
    pub fn mean_square_gap(&self, half_width: f64, reference: impl Fn(f64) -> f64) -> f64 {
        let (sum, n) = self
            .x_grid
            .iter()
            .zip(&self.f_hat)
            .filter(|(x, _)| x.abs() <= half_width + 1e-12)
            .fold((0.0, 0usize), |(s, n), (&x, &f)| (s + (f - reference(x)).powi(2), n + 1));
        if n == 0 { 0.0 } else { sum / n as f64 }
    }
}

/// z-score of `Σ_x (F̂-Φ)² - (F̂-G)²` over `|x| <= half_width`.
///
/// The difference is `2 Σ_x Δ(x)(F̂(x) - (Φ(x)+G(x))/2)` with `Δ = G - Φ`, a
/// mean of i.i.d. per-sample scores, so its standard error is exact.
fn l2_improvement_z(sorted: &[f64], grid: &[f64], half_width: f64, g: impl Fn(f64) -> f64) -> f64 {
    let xs: Vec<f64> = grid.iter().copied().filter(|x| x.abs() <= half_width + 1e-12).collect();
    let delta: Vec<f64> = xs.iter().map(|&x| g(x) - std_normal_cdf(x)).collect();
    let centre: f64 = xs
        .iter()
        .zip(&delta)
        .map(|(&x, d)| d * 0.5 * (g(x) + std_normal_cdf(x)))
        .sum();
    // suffix[k] = Σ_{j >= k} Δ_j: the score of a sample falling below x_k.
    let mut suffix = vec![0.0; xs.len() + 1];
    for k in (0..xs.len()).rev() {
        suffix[k] = suffix[k + 1] + delta[k];
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for &v in sorted {
        let score = suffix[xs.partition_point(|&x| x < v)];
        s1 += score;
        s2 += score * score;
    }
    let n = sorted.len() as f64;
    let mean = s1 / n;
    let se = ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
    (mean - centre) / se
}

fn ecdf(sorted: &[f64], x_grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let r = sorted.len() as f64;
    x_grid
        .iter()
        .map(|&x| {
            let f = sorted.partition_point(|&v| v <= x) as f64 / r;
            (f, (f * (1.0 - f) / r).sqrt())
        })
        .unzip()
}

fn standardize(stat: f64, n: usize, em1: f64) -> f64 {
    (stat - 1.0) * (n as f64 / em1).sqrt()
}

/// `x ∈ [-3, 3]` in steps of 0.01.
pub fn default_x_grid() -> Vec<f64> {
    (-300..=300).map(|i| i as f64 / 100.0).collect()
}

pub fn empirical_cdf(
    sigma: f64,
    n: usize,
    replicas: usize,
    x_grid: &[f64],
    seed: u64,
) -> Result<EmpiricalCdf> {
    empirical_cdf_with_threads(sigma, n, replicas, x_grid, seed, None)
}

pub fn empirical_cdf_with_threads(
    sigma: f64,
    n: usize,
    replicas: usize,
    x_grid: &[f64],
    seed: u64,
    threads: Option<usize>,
) -> Result<EmpiricalCdf> {
    let inv = check_sigma(sigma)?;
    if n < 2 {
        return Err(Error::Precondition(format!("need n >= 2, got {n}")));
    }
    if replicas < 1 {
        return Err(Error::Precondition("need at least one replica".into()));
    }
    let em1 = exp_m1(inv);
    let inv_sigma = 1.0 / sigma;
    let mut z = with_threads(threads, || {
        per_replica(replicas, |i| {
            let (s, _) = draw(inv_sigma, n, Hypothesis::H0, &mut replica_rng(seed, STREAM_CDF, i));
            standardize(s, n, em1)
        })
    })?;
    z.sort_by(f64::total_cmp);
    let (f_hat, se) = ecdf(&z, x_grid);
    Ok(EmpiricalCdf {
        sigma,
        n,
        replicas,
        seed,
        x_grid: x_grid.to_vec(),
        f_hat,
        se,
    })
}

/// One moment compared with its closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub name: &'static str,
    pub closed_form: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
}

/// Importance-sampled estimates of `u, μ₂, μ₃, μ₄, ρ³`.
///
/// Draws come from an equal mixture of `N(j/σ, 1)`, `j = 0..5`, so that every
/// `Y^k` for `k <= 4` has a component centred on its dominant region.
pub fn moment_estimates(sigma: f64, samples: usize, seed: u64) -> Result<Vec<MomentEstimate>> {
    let m = moments(sigma)?;
    if m.mu4_in_log_space {
        return Err(Error::range("mu4", m.ln_mu4));
    }
    if samples < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let inv_sigma = 1.0 / sigma;
    let half = 0.5 * inv_sigma * inv_sigma;
    let blocks = samples.div_ceil(BLOCK);
    let partial: Vec<[[f64; 2]; 5]> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = [[0.0; 2]; 5];
            for i in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                let mut rng = replica_rng(seed, STREAM_MOMENTS, i as u64);
                let j = rng.random_range(0..MIXTURE_COMPONENTS) as f64;
                let z: f64 = rng.sample(StandardNormal);
                let x = z + j * inv_sigma;
                let mix: f64 = (0..MIXTURE_COMPONENTS)
                    .map(|k| {
                        let k = k as f64;
                        (k * x * inv_sigma - k * k * half).exp()
                    })
                    .sum::<f64>()
                    / MIXTURE_COMPONENTS as f64;
                let w = 1.0 / mix;
                let d = (x * inv_sigma - half).exp() - 1.0;
                let vals = [d + 1.0, d * d, d * d * d, d * d * d * d, (d * d * d).abs()];
                for (a, v) in acc.iter_mut().zip(vals) {
                    let t = w * v;
                    a[0] += t;
                    a[1] += t * t;
                }
            }
            acc
        })
        .collect();
    let mut tot = [[0.0; 2]; 5];
    for p in &partial {
        for (t, a) in tot.iter_mut().zip(p) {
            t[0] += a[0];
            t[1] += a[1];
        }
    }
    let n = samples as f64;
    let names = ["u", "mu2", "mu3", "mu4", "rho3"];
    let exact = [m.u, m.mu2, m.mu3, m.mu4, m.rho3];
    Ok(names
        .iter()
        .zip(exact)
        .zip(tot)
        .map(|((&name, closed_form), [s, s2])| {
            let estimate = s / n;
            let se = ((s2 / n - estimate * estimate).max(0.0) / (n - 1.0)).sqrt();
            MomentEstimate {
                name,
                closed_form,
                estimate,
                se,
                z: (estimate - closed_form) / se,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Distance from failing; positive when passing.
    pub margin: Option<f64>,
    pub detail: String,
}

impl Check {
    fn graded(name: &'static str, margin: f64, detail: String) -> Self {
        Check {
            name,
            status: if margin >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail },
            margin: Some(margin),
            detail,
        }
    }

    fn skipped(name: &'static str, reason: String) -> Self {
        Check {
            name,
            status: CheckStatus::NotApplicable(reason.clone()),
            margin: None,
            detail: reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub sigma: f64,
    pub rounds: usize,
    pub replicas: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationSummary {
    /// No check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Samples drawn for the moment check.
pub const MOMENT_SAMPLES: usize = 1_000_000;
/// Half-width of the Edgeworth comparison window.
pub const EDGEWORTH_KAPPA: f64 = 2.0;

/// Runs the dominance, Berry–Esseen, Edgeworth and moment checks.
pub fn validate_all(sigma: f64, rounds: usize, replicas: usize, seed: u64) -> Result<ValidationSummary> {
    let cfg = TestConfig {
        sigma,
        rounds,
        replicas,
        seed,
        alpha_grid: TestConfig::decile_grid(),
        threads: None,
    };
    let samples = simulate(&cfg)?;
    let rep = report(&cfg, &samples)?;
    let mut checks = Vec::new();

    match &rep.lower_bound_reference {
        Some(lb) => {
            let margin = rep
                .beta_hat_raw
                .iter()
                .zip(&rep.beta_se)
                .zip(lb)
                .map(|((b, se), l)| b - l + 3.0 * se)
                .fold(f64::INFINITY, f64::min);
            checks.push(Check::graded(
                "tradeoff_dominance",
                margin,
                format!("beta_hat >= 1 - a - {:.6} - 3 SE on a = 0.1..0.9", rep.delta_thm.unwrap_or(0.0)),
            ));
        }
        None => checks.push(Check::skipped(
            "tradeoff_dominance",
            "not applicable: validity condition fails".into(),
        )),
    }

    let em1 = exp_m1(1.0 / (sigma * sigma));
    let z: Vec<f64> = samples.h0.iter().map(|p| standardize(p.0, rounds, em1)).collect();
    let grid = default_x_grid();
    let (f_hat, se) = ecdf(&z, &grid);
    let cdf = EmpiricalCdf {
        sigma,
        n: rounds,
        replicas,
        seed,
        x_grid: grid,
        f_hat,
        se,
    };
    let se_cap = 0.5 / (replicas as f64).sqrt();
    let bound = be_error_bound(sigma, rounds as u64, B_SHEVTSOVA, BeMode::Exact)?;
    let gap = cdf.max_gap(3.0, std_normal_cdf);
    checks.push(Check::graded(
        "berry_esseen",
        bound + 3.0 * se_cap - gap,
        format!("max gap {gap:.6} vs bound {bound:.6}"),
    ));

    match edgeworth_model(sigma, rounds as u64, EDGEWORTH_KAPPA) {
        Ok(model) => {
            let edge = |x: f64| std_normal_cdf(model.polynomial(x));
            let plain = cdf.max_gap(EDGEWORTH_KAPPA, std_normal_cdf);
            let refined = cdf.max_gap(EDGEWORTH_KAPPA, edge);
            let (plain_l2, refined_l2) = (
                cdf.mean_square_gap(EDGEWORTH_KAPPA, std_normal_cdf),
                cdf.mean_square_gap(EDGEWORTH_KAPPA, edge),
            );
            let z_improve = l2_improvement_z(&z, &cdf.x_grid, EDGEWORTH_KAPPA, edge);
            checks.push(Check::graded(
                "edgeworth_improvement",
                z_improve,
                format!(
                    "rms gap to Phi {:.6}, to Phi(p_n) {:.6} (z = {z_improve:.2}); max gap {plain:.6} vs {refined:.6}",
                    plain_l2.sqrt(),
                    refined_l2.sqrt()
                ),
            ));
        }
        Err(Error::Validity(msg)) | Err(Error::Range { what: msg, .. }) => {
            checks.push(Check::skipped("edgeworth_improvement", format!("not applicable: {msg}")))
        }
        Err(e) => return Err(e),
    }

    match moment_estimates(sigma, MOMENT_SAMPLES, seed) {
        Ok(est) => {
            let worst = est.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
            checks.push(Check::graded(
                "moment_z_scores",
                4.0 - worst,
                format!("max |z| = {worst:.3}"),
            ));
        }
        Err(Error::Range { what, .. }) => {
            checks.push(Check::skipped("moment_z_scores", format!("not applicable: {what} overflows")))
        }
        Err(e) => return Err(e),
    }

    Ok(ValidationSummary {
        sigma,
        rounds,
        replicas,
        seed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sigma: f64, rounds: usize, replicas: usize, seed: u64) -> TestConfig {
        TestConfig {
            sigma,
            rounds,
            replicas,
            seed,
            alpha_grid: TestConfig::decile_grid(),
            threads: None,
        }
    }

    #[test]
    fn statistic_means() {
        let (sigma, m, n) = (1.0, 10, 200_000);
        let inv = 1.0 / sigma;
        let mean = |hyp| {
            let v: Vec<f64> = (0..n)
                .map(|i| draw(inv, m, hyp, &mut replica_rng(7, 9, i)).0)
                .collect();
            let mu = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
            (mu, var)
        };
        let em1 = exp_m1(1.0);
        let (m0, v0) = mean(Hypothesis::H0);
        assert!((m0 - 1.0).abs() < 4.0 * (v0 / n as f64).sqrt());
        assert!((v0 / (em1 / m as f64) - 1.0).abs() < 0.05);
        let (m1, v1) = mean(Hypothesis::H1);
        assert!((m1 - (1.0 + em1 / m as f64)).abs() < 4.0 * (v1 / n as f64).sqrt());
    }

    #[test]
    fn isotonic_fit() {
        assert_eq!(isotonic_non_increasing(&[1.0, 0.5, 0.6, 0.2]), vec![1.0, 0.55, 0.55, 0.2]);
        assert_eq!(isotonic_non_increasing(&[0.1, 0.3]), vec![0.2, 0.2]);
        assert!(isotonic_non_increasing(&[]).is_empty());
    }

    #[test]
    fn preconditions() {
        assert!(matches!(empirical_tradeoff(&cfg(1.0, 10, 10, 1)), Err(Error::Precondition(_))));
        let mut c = cfg(1.0, 10, 1000, 1);
        c.alpha_grid = vec![0.5, 0.2];
        assert!(matches!(empirical_tradeoff(&c), Err(Error::Domain(_))));
        c.alpha_grid = vec![];
        assert!(matches!(empirical_tradeoff(&c), Err(Error::Domain(_))));
        assert!(matches!(validate_all(1.0, 1000, 10, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn report_shape_and_estimators() {
        let mut c = cfg(1.0, 1000, 20_000, 3);
        c.alpha_grid = std::iter::once(0.0).chain(TestConfig::decile_grid()).collect();
        let r = empirical_tradeoff(&c).unwrap();
        assert_eq!(r.beta_hat_raw[0], 1.0);
        let rf = c.replicas as f64;
        for i in 0..c.alpha_grid.len() {
            let a = c.alpha_grid[i];
            assert!((r.alpha_realized[i] - a).abs() <= 1.0 / rf);
            assert!(r.beta_se[i] <= 0.5 / rf.sqrt() + 1e-12);
            assert!(r.beta_hat_raw[i] <= 1.0 - a + 3.0 * r.beta_se[i] + 1.0 / rf);
            let comb = (r.beta_se[i].powi(2) + r.beta_se_reweighted[i].powi(2)).sqrt();
            assert!((r.beta_hat_raw[i] - r.beta_hat_reweighted[i]).abs() <= 4.0 * comb + 1e-12);
        }
        assert!(r.beta_hat.windows(2).all(|w| w[1] <= w[0]));
        assert!(!r.bound_valid && r.lower_bound_reference.is_none());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut c = cfg(1.0, 50, 9000, 11);
        c.threads = Some(1);
        let a = empirical_tradeoff(&c).unwrap();
        c.threads = Some(3);
        let b = empirical_tradeoff(&c).unwrap();
        assert_eq!(a.beta_hat_raw, b.beta_hat_raw);
        assert_eq!(
            a.beta_hat_reweighted.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.beta_hat_reweighted.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let x = default_x_grid();
        let e1 = empirical_cdf_with_threads(1.0, 20, 5000, &x, 4, Some(1)).unwrap();
        let e2 = empirical_cdf_with_threads(1.0, 20, 5000, &x, 4, Some(2)).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn seeds_change_results() {
        let a = empirical_tradeoff(&cfg(1.0, 20, 2000, 1)).unwrap();
        let b = empirical_tradeoff(&cfg(1.0, 20, 2000, 2)).unwrap();
        assert_ne!(a.beta_hat_raw, b.beta_hat_raw);
    }

    #[test]
    fn cdf_tails() {
        let grid = [-50.0, 0.0, 50.0];
        let e = empirical_cdf(1.0, 100, 2000, &grid, 5).unwrap();
        assert_eq!(e.f_hat[0], 0.0);
        assert_eq!(e.f_hat[2], 1.0);
        assert!(e.se.iter().all(|&s| s <= 0.5 / 2000f64.sqrt()));
    }

    #[test]
    fn moment_oracle_sigma_one() {
        for e in moment_estimates(1.0, 200_000, 17).unwrap() {
            assert!(e.z.abs() <= 4.0, "{e:?}");
        }
    }

    #[test]
    fn validate_small_config() {
        let s = validate_all(1.0, 5000, 5000, 42).unwrap();
        assert_eq!(s.checks.len(), 4);
        let dominance = &s.checks[0];
        assert_eq!(dominance.status, CheckStatus::Pass, "{dominance:?}");
        assert_eq!(s.checks[1].status, CheckStatus::Pass);
        assert_eq!(s.checks[3].status, CheckStatus::Pass);
    }

    #[test]
    fn validate_reports_not_applicable() {
        let s = validate_all(0.5, 1000, 1000, 42).unwrap();
        match &s.checks[0].status {
            CheckStatus::NotApplicable(r) => assert!(r.contains("validity condition fails")),
            other => panic!("{other:?}"),
        }
    }
}
