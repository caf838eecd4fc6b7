//! Limiting Gaussian-DP coefficients for shuffling and Poisson subsampling.
//!
//! With `E = c²M` epochs the shuffled mechanism tends to `G_{c·√(e^{1/σ²}-1)}`
//! while Poisson subsampling tends to `G_{c·√(2(e^{1/σ²}Φ(3/(2σ)) + 3Φ(-1/(2σ)) - 2))}`.

use std::f64::consts::{E, FRAC_1_SQRT_2, PI, SQRT_2};

use serde::Serialize;

use crate::accountant::mu_of;
use crate::error::{Error, Result};
use crate::lognormal::check_sigma;
use crate::numerics::{exp_m1, log_std_normal_cdf, std_normal_cdf};
use crate::tradeoff::{compose_f0_delta, gdp, Gaussian};

/// Above this `1/σ²` the coefficients are carried as logarithms.
pub const LOG_SPACE_THRESHOLD: f64 = 700.0;

/// `(1 + √2)/2`.
pub const MIDPOINT_RATIO: f64 = 0.5 * (1.0 + SQRT_2);

fn ln_exp_m1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        exp_m1(x).ln()
    }
}

/// `ln √(e^{1/σ²} - 1)`.
pub fn ln_shuffle_coeff(sigma: f64) -> Result<f64> {
    Ok(0.5 * ln_exp_m1(check_sigma(sigma)?))
}

/// `√(e^{1/σ²} - 1)`; infinite once `1/σ² > 1418`, see [`ln_shuffle_coeff`].
pub fn shuffle_coeff(sigma: f64) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    if inv > LOG_SPACE_THRESHOLD {
        return Ok(ln_shuffle_coeff(sigma)?.exp());
    }
    Ok(exp_m1(inv).sqrt())
}

// ε with poisson² = 2(e^{1/σ²} - 1)(1 - ε).
fn poisson_defect(sigma: f64) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    let hi = -1.5 / sigma;
    let lo = -0.5 / sigma;
    if sigma <= 1.0 {
        // e^x Φ(-3/(2σ)) ≈ e^{-x/8}: no cancellation for small σ.
        let tail = (inv + log_std_normal_cdf(hi)).exp();
        let num = tail + 1.0 - 3.0 * std_normal_cdf(lo);
        let em1_ln = ln_exp_m1(inv);
        Ok((num.ln() - em1_ln).exp())
    } else {
        Ok(1.0 - half_poisson_sq(sigma)? / exp_m1(inv))
    }
}

// e^xΦ(3/(2σ)) + 3Φ(-1/(2σ)) - 2, written with erf to avoid the cancellation at large σ.
fn half_poisson_sq(sigma: f64) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    let a = 1.5 / sigma * FRAC_1_SQRT_2;
    let b = 0.5 / sigma * FRAC_1_SQRT_2;
    Ok(0.5 * exp_m1(inv) + 0.5 * inv.exp() * libm::erf(a) - 1.5 * libm::erf(b))
}

/// `ln` of [`poisson_coeff`].
pub fn ln_poisson_coeff(sigma: f64) -> Result<f64> {
    let eps = poisson_defect(sigma)?;
    Ok(ln_shuffle_coeff(sigma)? + 0.5 * (2.0 * (1.0 - eps)).ln())
}

/// `√(2(e^{1/σ²}Φ(3/(2σ)) + 3Φ(-1/(2σ)) - 2))`.
pub fn poisson_coeff(sigma: f64) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    if inv > 1.0 {
        return Ok(ln_poisson_coeff(sigma)?.exp());
    }
    Ok((2.0 * half_poisson_sq(sigma)?).sqrt())
}

/// Shuffling versus Poisson subsampling at one σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GdpComparison {
    pub sigma: f64,
    pub shuffle_mu: f64,
    pub poisson_mu: f64,
    pub ln_shuffle_mu: f64,
    pub ln_poisson_mu: f64,
    /// `poisson_mu / shuffle_mu`.
    pub ratio: f64,
    /// `√2 - ratio`, resolved below the spacing of doubles near `√2`.
    pub ratio_deficit: f64,
    pub computed_in_log_space: bool,
}

pub fn coeff_ratio(sigma: f64) -> Result<GdpComparison> {
    let inv = check_sigma(sigma)?;
    let eps = poisson_defect(sigma)?;
    let root = (1.0 - eps).sqrt();
    let ln_shuffle_mu = ln_shuffle_coeff(sigma)?;
    let ln_poisson_mu = ln_poisson_coeff(sigma)?;
    Ok(GdpComparison {
        sigma,
        shuffle_mu: shuffle_coeff(sigma)?,
        poisson_mu: poisson_coeff(sigma)?,
        ln_shuffle_mu,
        ln_poisson_mu,
        ratio: SQRT_2 * root,
        ratio_deficit: SQRT_2 * eps / (1.0 + root),
        computed_in_log_space: inv > LOG_SPACE_THRESHOLD,
    })
}

/// σ where the ratio equals `(1+√2)/2`, by bisection on `[0.1, 20]`.
pub fn midpoint_sigma() -> Result<f64> {
    let f = |s: f64| coeff_ratio(s).map(|c| c.ratio - MIDPOINT_RATIO);
    let (mut lo, mut hi) = (0.1, 20.0);
    if !(f(lo)? > 0.0 && f(hi)? < 0.0) {
        return Err(Error::Numerical("midpoint not bracketed by [0.1, 20]".into()));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `G_{c·√(e^{1/σ²}-1)}`, the limit over `E = c²M` epochs.
pub fn asymptotic_epoch_gdp(sigma: f64, c: f64) -> Result<Gaussian> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::domain(format!("c must be >= 0, got {c}")));
    }
    if c == 0.0 {
        check_sigma(sigma)?;
        return Gaussian::new(0.0);
    }
    Gaussian::new(c * shuffle_coeff(sigma)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeparationMode {
    /// `sep(f_{0,δ}^{⊗E}) = (1-(1-δ)^E)/√2`; the input is δ.
    ConcreteLinear,
    /// `sep(G_{μ√E}) = (1-2Φ(-μ√E/2))/√2`; the input is μ.
    AsymptoticSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationEstimate {
    pub value: f64,
    /// The `γ_M` and `δ̂_M` corrections are taken as zero.
    pub leading_order: bool,
}

pub fn separation_scaling(value: f64, epochs: u64, mode: SeparationMode) -> Result<SeparationEstimate> {
    if epochs < 1 {
        return Err(Error::Precondition("need E >= 1".into()));
    }
    match mode {
        SeparationMode::ConcreteLinear => Ok(SeparationEstimate {
            value: compose_f0_delta(value, epochs)? * FRAC_1_SQRT_2,
            leading_order: false,
        }),
        SeparationMode::AsymptoticSqrt => {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::domain(format!("mu must be >= 0, got {value}")));
            }
            let half = 0.5 * value * (epochs as f64).sqrt() * FRAC_1_SQRT_2;
            Ok(SeparationEstimate {
                value: libm::erf(half) * FRAC_1_SQRT_2,
                leading_order: true,
            })
        }
    }
}

/// Leading-order two-sided envelope of the single-epoch trade-off function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticEnvelope {
    pub a: f64,
    pub mu: f64,
    pub lower: f64,
    pub upper: f64,
    /// `e^{2/σ²}/(√(8πe)(M-1))` for `a >= 1/2`, else 0.
    pub s_m: f64,
    /// `δ_M` and `γ_M` have no explicit form and are reported as zero.
    pub non_constructive: bool,
}

pub fn asymptotic_envelope(sigma: f64, rounds: u64, a: f64) -> Result<AsymptoticEnvelope> {
    let inv = check_sigma(sigma)?;
    let mu = mu_of(sigma, rounds)?;
    let g = gdp(mu, a)?;
    let s_m = if a >= 0.5 {
        if 2.0 * inv > LOG_SPACE_THRESHOLD {
            return Err(Error::range("e^{2/sigma^2}", 2.0 * inv));
        }
        (2.0 * inv).exp() / ((8.0 * PI * E).sqrt() * (rounds - 1) as f64)
    } else {
        0.0
    };
    Ok(AsymptoticEnvelope {
        a,
        mu,
        lower: g,
        upper: (g + s_m).min(1.0 - a),
        s_m,
        non_constructive: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tradeoff::{separation, TradeoffFunction};

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn shuffle_values() {
        assert!((shuffle_coeff(1.0).unwrap() - 1.310_832_494_432_086).abs() < 1e-14);
        assert!((shuffle_coeff(0.5).unwrap() - 7.321_075_742_890_811).abs() < 1e-12);
        let s = 1e6;
        assert!((shuffle_coeff(s).unwrap() * s - 1.0).abs() < 1e-12);
        assert!(shuffle_coeff(0.02).unwrap().is_infinite());
        assert!((ln_shuffle_coeff(0.02).unwrap() - 1250.0).abs() < 1e-9);
    }

    #[test]
    fn poisson_values() {
        // 2(eΦ(1.5) + 3Φ(-0.5) - 2) with 40-digit Φ.
        assert!((poisson_coeff(1.0).unwrap() - 1.710_142_475_595_331).abs() < 1e-12);
        let direct = |s: f64| {
            let x = 1.0 / (s * s);
            (2.0 * (x.exp() * std_normal_cdf(1.5 / s) + 3.0 * std_normal_cdf(-0.5 / s) - 2.0)).sqrt()
        };
        for s in [0.3, 0.7, 1.0, 2.5, 5.0] {
            let p = poisson_coeff(s).unwrap();
            assert!(((p - direct(s)) / p).abs() < 1e-10, "sigma={s}");
        }
    }

    #[test]
    fn ratio_values() {
        assert!((coeff_ratio(1.0).unwrap().ratio - 1.304_623_1).abs() < 1e-7);
        let c = coeff_ratio(0.2).unwrap();
        assert!((c.ratio - SQRT_2).abs() < 1e-4);
        assert!(c.ratio_deficit > 0.0);
        let c = coeff_ratio(0.02).unwrap();
        assert!(c.computed_in_log_space && c.ratio_deficit >= 0.0 && c.ratio <= SQRT_2);
        assert!((c.ln_poisson_mu - c.ln_shuffle_mu - 0.5 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ratio_monotone_on_log_grid() {
        let grid = log_grid(0.05, 50.0, 200);
        let cs: Vec<_> = grid.iter().map(|&s| coeff_ratio(s).unwrap()).collect();
        for w in cs.windows(2) {
            assert!(w[1].ratio <= w[0].ratio, "{} {}", w[0].sigma, w[1].sigma);
            assert!(w[1].ratio_deficit > w[0].ratio_deficit);
        }
        for c in &cs {
            assert!(c.ratio > 1.0 && c.ratio_deficit > 0.0 && c.ratio_deficit < SQRT_2 - 1.0);
        }
    }

    #[test]
    fn ratio_tends_to_one() {
        assert!((coeff_ratio(20.0).unwrap().ratio - 1.019_745_9).abs() < 1e-6);
        assert!(coeff_ratio(1e4).unwrap().ratio - 1.0 < 1e-3);
    }

    #[test]
    fn coefficients_diverge_as_sigma_shrinks() {
        let s: Vec<f64> = [0.3, 0.2, 0.1].iter().map(|&x| ln_shuffle_coeff(x).unwrap()).collect();
        let p: Vec<f64> = [0.3, 0.2, 0.1].iter().map(|&x| ln_poisson_coeff(x).unwrap()).collect();
        assert!(s[0] < s[1] && s[1] < s[2] && p[0] < p[1] && p[1] < p[2]);
        assert!(s[2] > 49.0 && p[2] > 49.0);
    }

    #[test]
    fn midpoint() {
        let s = midpoint_sigma().unwrap();
        assert!((s - 1.668_014_53).abs() < 1e-7);
        assert!((coeff_ratio(s).unwrap().ratio - MIDPOINT_RATIO).abs() < 1e-6);
    }

    #[test]
    fn epoch_gdp() {
        let g = asymptotic_epoch_gdp(1.0, 0.0).unwrap();
        assert!((g.eval(0.3) - 0.7).abs() < 1e-15);
        let g = asymptotic_epoch_gdp(1.0, 1.0).unwrap();
        assert!((g.eval(0.5) - std_normal_cdf(-1.310_832_494_432_086)).abs() < 1e-14);
        assert!((g.eval(0.5) - 0.094_95).abs() < 1e-4);
        let g = asymptotic_epoch_gdp(1.0, 0.1).unwrap();
        assert!((separation(&g).unwrap() - 0.036_951_44).abs() < 1e-8);
        assert!(asymptotic_epoch_gdp(1.0, -1.0).is_err());
    }

    #[test]
    fn separation_modes() {
        let s = separation_scaling(0.01, 1, SeparationMode::ConcreteLinear).unwrap();
        assert!((s.value - 0.01 * FRAC_1_SQRT_2).abs() < 1e-16 && !s.leading_order);
        let s = separation_scaling(0.001, 100, SeparationMode::AsymptoticSqrt).unwrap();
        assert!((s.value - 0.002_820_936_2).abs() < 1e-10 && s.leading_order);
        let g = Gaussian::new(0.01).unwrap();
        assert!((s.value - separation(&g).unwrap()).abs() < 1e-10);
        for e in [1u64, 10, 100, 500] {
            let r = separation_scaling(0.001, 4 * e, SeparationMode::AsymptoticSqrt).unwrap().value
                / separation_scaling(0.001, e, SeparationMode::AsymptoticSqrt).unwrap().value;
            assert!((1.99..=2.01).contains(&r));
        }
    }

    #[test]
    fn asymptotic_dominates_concrete_composition() {
        // σ = 1, M = 10⁶, E = 10⁴ gives c = 0.1.
        let delta = crate::accountant::delta_bound(
            &crate::accountant::PrivacyParams::new(1.0, 1_000_000, 1).unwrap(),
            crate::lognormal::B_SHEVTSOVA,
        )
        .unwrap()
        .total;
        assert!((delta - 0.0106).abs() < 2e-4);
        let shift = compose_f0_delta(delta, 10_000).unwrap();
        assert!(shift > 1.0 - 1e-12);
        let g = asymptotic_epoch_gdp(1.0, 0.1).unwrap();
        for i in 0..=100 {
            let a = i as f64 / 100.0;
            assert!(g.eval(a) >= (1.0 - a - shift).max(0.0));
        }
        let sep = separation(&g).unwrap();
        assert!(sep < separation_scaling(delta, 10_000, SeparationMode::ConcreteLinear).unwrap().value);
    }

    #[test]
    fn envelope() {
        let e = asymptotic_envelope(1.0, 10_001, 0.3).unwrap();
        assert_eq!(e.s_m, 0.0);
        assert!(e.non_constructive && e.lower == e.upper);
        let e = asymptotic_envelope(1.0, 10_001, 0.6).unwrap();
        let s = (2.0f64).exp() / ((8.0 * PI * E).sqrt() * 10_000.0);
        assert!((e.s_m - s).abs() < 1e-18 && e.upper >= e.lower);
    }
}
