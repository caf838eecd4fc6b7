//! Moments of the shifted lognormal `Y = exp(X/σ - 1/(2σ²))`, `X ~ N(0,1)`,
//! the Berry–Esseen error bounds for its standardized sample mean, and the
//! two-term Edgeworth correction `Φ(p_n(x))` for the same sum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{central_mass, exp_m1, std_normal_cdf};

/// Proven upper bound on the Berry–Esseen constant (Shevtsova).
pub const B_SHEVTSOVA: f64 = 0.4748;
/// Known lower bound on the Berry–Esseen constant (Esseen). Sensitivity studies only.
pub const B_ESSEEN: f64 = 0.4097;

/// Largest `1/σ²` for which [`moments`] is defined.
pub const MAX_INV_SIGMA_SQ: f64 = 230.0;

const MAX_EXP_ARG: f64 = 700.0;

/// Checks the Berry–Esseen constant against the proven interval.
pub fn check_be_constant(b: f64) -> Result<f64> {
    if (B_ESSEEN..=B_SHEVTSOVA).contains(&b) {
        Ok(b)
    } else {
        Err(Error::domain(format!(
            "Berry-Esseen constant {b} outside [{B_ESSEEN}, {B_SHEVTSOVA}]"
        )))
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<f64> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(1.0 / (sigma * sigma))
    } else {
        Err(Error::domain(format!("noise multiplier must be > 0, got {sigma}")))
    }
}

/// Raw moment `E[Y^k] = exp(k(k-1)/(2σ²))`.
pub fn raw_moment(sigma: f64, k: u32) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    let k = f64::from(k);
    let log_value = k * (k - 1.0) * 0.5 * inv;
    if log_value > MAX_EXP_ARG {
        return Err(Error::range(format!("E[Y^{k}]"), log_value));
    }
    Ok(log_value.exp())
}

/// Mean, central moments and absolute third central moment of `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub sigma: f64,
    pub u: f64,
    pub mu2: f64,
    pub mu3: f64,
    /// `+inf` when `mu4_in_log_space` is set; use `ln_mu4` then.
    pub mu4: f64,
    pub ln_mu4: f64,
    pub mu4_in_log_space: bool,
    pub rho3: f64,
}

impl MomentSet {
    /// `μ₄/μ₂²`, finite even when `μ₄` itself is not.
    pub fn kurtosis(&self) -> f64 {
        (self.ln_mu4 - 2.0 * self.mu2.ln()).exp()
    }

    pub fn skewness(&self) -> f64 {
        self.mu3 / self.mu2.powf(1.5)
    }
}

/// Closed-form moments. μ₃ and μ₄ come from their factored forms so that
/// large σ does not cancel.
pub fn moments(sigma: f64) -> Result<MomentSet> {
    let inv = check_sigma(sigma)?;
    if inv > MAX_INV_SIGMA_SQ {
        return Err(Error::range("e^{3/sigma^2}", 3.0 * inv));
    }
    let em1 = exp_m1(inv);
    let e1 = inv.exp();
    let mu2 = em1;
    let mu3 = (e1 + 2.0) * em1 * em1;

    let ln_em1 = em1.ln();
    let ln_quartic_factor =
        4.0 * inv + (2.0 * (-inv).exp() + 3.0 * (-2.0 * inv).exp() - 3.0 * (-4.0 * inv).exp()).ln_1p();
    let ln_mu4 = ln_quartic_factor + 2.0 * ln_em1;
    let (mu4, mu4_in_log_space) = if ln_mu4 <= MAX_EXP_ARG {
        let quartic_factor =
            (4.0 * inv).exp() + 2.0 * (3.0 * inv).exp() + 3.0 * (2.0 * inv).exp() - 3.0;
        (quartic_factor * em1 * em1, false)
    } else {
        (f64::INFINITY, true)
    };

    let rho3 = central_mass(2.5 / sigma) * (3.0 * inv).exp()
        - 3.0 * central_mass(1.5 / sigma) * e1
        + 4.0 * central_mass(0.5 / sigma);

    Ok(MomentSet {
        sigma,
        u: 1.0,
        mu2,
        mu3,
        mu4,
        ln_mu4,
        mu4_in_log_space,
        rho3,
    })
}

/// Which Berry–Esseen error bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BeMode {
    /// `B ρ³ / (√n μ₂^{3/2})`.
    Exact,
    /// Upper bound that is tight for small σ.
    SmallSigma,
    /// Upper bound that is tight for large σ.
    LargeSigma,
}

/// Bound on `sup_x |F_n(x) - Φ(x)|` for the standardized mean of `n` copies of `Y`.
pub fn be_error_bound(sigma: f64, n: u64, b: f64, mode: BeMode) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    if n < 2 {
        return Err(Error::Precondition(format!("need n >= 2, got {n}")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::domain(format!("Berry-Esseen constant must be > 0, got {b}")));
    }
    let sqrt_n = (n as f64).sqrt();
    match mode {
        BeMode::Exact => {
            let m = moments(sigma)?;
            Ok(b * m.rho3 / (sqrt_n * m.mu2.powf(1.5)))
        }
        BeMode::SmallSigma => {
            if 1.5 * inv > MAX_EXP_ARG {
                return Err(Error::range("e^{3/(2 sigma^2)}", 1.5 * inv));
            }
            let one_minus = -exp_m1(-inv);
            Ok(b * (1.5 * inv).exp() * (1.0 + 4.0 * (-3.0 * inv).exp())
                / (sqrt_n * one_minus.powf(1.5)))
        }
        BeMode::LargeSigma => {
            if 3.0 * inv > MAX_EXP_ARG {
                return Err(Error::range("e^{3/sigma^2}", 3.0 * inv));
            }
            let tail = (46.115 + 0.375 * inv.exp() + 5.625 * (3.0 * inv).exp()) * inv;
            Ok(b * (8.0 / std::f64::consts::PI).sqrt() / sqrt_n * (1.0 + tail))
        }
    }
}

/// Two-term Edgeworth model `F_n(x) ≈ Φ(p_n(x))` for `|x| <= kappa_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeworthModel {
    pub sigma: f64,
    pub n: u64,
    pub c_n: f64,
    pub d_n: f64,
    pub kappa_n: f64,
}

/// Points used for the monotonicity scan of `p_n` on `[-κ, κ]`.
pub const MONOTONICITY_GRID: usize = 10_000;

/// `min(√(2 ln n), n^{1/16}/2)`, floored at 1.
pub fn default_kappa(n: u64) -> f64 {
    let n = n as f64;
    (2.0 * n.ln()).sqrt().min(n.powf(1.0 / 16.0) / 2.0).max(1.0)
}

/// `(c_n, d_n)` from arbitrary moments: skewness and excess kurtosis terms.
pub fn edgeworth_coefficients(m: &MomentSet, n: u64) -> (f64, f64) {
    let n = n as f64;
    let c = m.mu3 / (6.0 * m.mu2.powf(1.5) * n.sqrt());
    let d = (m.kurtosis() - 3.0) / (24.0 * n);
    (c, d)
}

/// Lognormal closed forms for `(c_n, d_n)`.
pub fn lognormal_edgeworth_coefficients(sigma: f64, n: u64) -> Result<(f64, f64)> {
    let inv = check_sigma(sigma)?;
    if 3.0 * inv > MAX_EXP_ARG {
        return Err(Error::range("e^{3/sigma^2}", 3.0 * inv));
    }
    let n = n as f64;
    let e1 = inv.exp();
    let em1 = exp_m1(inv);
    let c = (e1 + 2.0) * em1.sqrt() / (6.0 * n.sqrt());
    let d = em1 * ((3.0 * inv).exp() + 3.0 * (2.0 * inv).exp() + 6.0 * e1 + 6.0) / (24.0 * n);
    Ok((c, d))
}

impl EdgeworthModel {
    /// `p_n(x) = x + c(1-x²) + d(3x-x³) + c²(4x³-7x)`.
    pub fn polynomial(&self, x: f64) -> f64 {
        let (c, d) = (self.c_n, self.d_n);
        let x2 = x * x;
        x + c * (1.0 - x2) + d * (3.0 * x - x2 * x) + c * c * (4.0 * x2 * x - 7.0 * x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (c, d) = (self.c_n, self.d_n);
        let x2 = x * x;
        1.0 - 2.0 * c * x + d * (3.0 - 3.0 * x2) + c * c * (12.0 * x2 - 7.0)
    }

    /// Smallest `p_n'` over the monotonicity grid.
    pub fn min_derivative(&self) -> (f64, f64) {
        monotonicity_grid(self.kappa_n)
            .map(|x| (x, self.derivative(x)))
            .fold((0.0, f64::INFINITY), |acc, (x, v)| if v < acc.1 { (x, v) } else { acc })
    }
}

fn monotonicity_grid(kappa: f64) -> impl Iterator<Item = f64> {
    let steps = MONOTONICITY_GRID - 1;
    (0..MONOTONICITY_GRID).map(move |i| -kappa + 2.0 * kappa * i as f64 / steps as f64)
}

/// Builds the Edgeworth model and checks that `p_n` increases on `[-κ, κ]`.
pub fn edgeworth_model(sigma: f64, n: u64, kappa_n: f64) -> Result<EdgeworthModel> {
    if n < 2 {
        return Err(Error::Precondition(format!("need n >= 2, got {n}")));
    }
    if !(kappa_n.is_finite() && kappa_n > 0.0) {
        return Err(Error::domain(format!("kappa_n must be > 0, got {kappa_n}")));
    }
    let (c_n, d_n) = lognormal_edgeworth_coefficients(sigma, n)?;

    let m = moments(sigma)?;
    let (c_gen, d_gen) = edgeworth_coefficients(&m, n);
    // The general d_n subtracts 3 from the kurtosis; scale the tolerance by
    // that cancellation.
    let kurt = m.kurtosis();
    let cond = kurt / (kurt - 3.0).abs();
    if (c_gen - c_n).abs() > 1e-12 * c_n.abs() || (d_gen - d_n).abs() > 1e-12 * cond * d_n.abs() {
        return Err(Error::Numerical(format!(
            "Edgeworth coefficient routes disagree: c {c_gen} vs {c_n}, d {d_gen} vs {d_n}"
        )));
    }

    let model = EdgeworthModel {
        sigma,
        n,
        c_n,
        d_n,
        kappa_n,
    };
    if let Some(x) = monotonicity_grid(kappa_n).find(|&x| model.derivative(x) <= 0.0) {
        return Err(Error::Validity(format!(
            "p_n is not strictly increasing on [-{kappa_n}, {kappa_n}]: p_n'({x}) = {}",
            model.derivative(x)
        )));
    }
    Ok(model)
}

/// `Φ(p_n(x))`.
pub fn edgeworth_cdf(model: &EdgeworthModel, x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() > model.kappa_n {
        return Err(Error::domain(format!(
            "|x| = {} exceeds kappa_n = {}",
            x.abs(),
            model.kappa_n
        )));
    }
    Ok(std_normal_cdf(model.polynomial(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::std_normal_pdf;
    use std::f64::consts::E;

    // Simpson quadrature of g(Y(x)) φ(x) on a wide window around the mass of
    // the integrand; an independent check of the closed forms.
    fn expect(sigma: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = (-12.0, 12.0 + 5.0 / sigma);
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        let f = |x: f64| g((x / sigma - 0.5 / (sigma * sigma)).exp()) * std_normal_pdf(x);
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn raw_moment_values() {
        assert_eq!(raw_moment(1.0, 1).unwrap(), 1.0);
        assert_eq!(raw_moment(1.0, 0).unwrap(), 1.0);
        let q = expect(1.0, |y| y * y);
        assert!((raw_moment(1.0, 2).unwrap() - q).abs() < 1e-10);
        assert!((raw_moment(1.0, 2).unwrap() - E).abs() < 1e-15);
    }

    #[test]
    fn raw_moment_overflow_carries_log() {
        match raw_moment(0.1, 5) {
            Err(Error::Range { log_value, .. }) => assert!((log_value - 1000.0).abs() < 1e-9),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn moments_match_quadrature() {
        for &s in &[0.7, 1.0, 2.0, 5.0] {
            let m = moments(s).unwrap();
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            assert!(rel(m.mu2, expect(s, |y| (y - 1.0).powi(2))) < 1e-9, "s={s}");
            assert!(rel(m.mu3, expect(s, |y| (y - 1.0).powi(3))) < 1e-9, "s={s}");
            assert!(rel(m.mu4, expect(s, |y| (y - 1.0).powi(4))) < 1e-9, "s={s}");
            assert!(rel(m.rho3, expect(s, |y| (y - 1.0).abs().powi(3))) < 1e-8, "s={s}");
        }
    }

    #[test]
    fn moments_at_sigma_one() {
        let m = moments(1.0).unwrap();
        assert_eq!(m.u, 1.0);
        assert!((m.mu2 - (E - 1.0)).abs() < 1e-15);
        assert!((m.rho3 - 14.302_547_010_955_665).abs() < 1e-12);
        assert!(m.mu4 >= m.mu2 * m.mu2);
        assert!(m.rho3 >= m.mu3.abs() && m.rho3 >= m.mu2.powf(1.5));
    }

    #[test]
    fn moments_large_sigma() {
        let m = moments(100.0).unwrap();
        assert!((m.mu2 - 1e-4).abs() < 1e-8);
        // (e^x + 2)√(e^x - 1) ≈ 3·10⁻² at x = 10⁻⁴.
        assert!((m.skewness() - 0.030_001_5).abs() < 1e-6);
    }

    #[test]
    fn moments_log_space_mu4() {
        let m = moments(0.07).unwrap();
        assert!(m.mu4_in_log_space && m.mu4.is_infinite());
        assert!(m.ln_mu4.is_finite() && m.mu3.is_finite());
        assert!(matches!(moments(0.06), Err(Error::Range { .. })));
        assert!(matches!(moments(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn be_bound_sigma_one() {
        let v = be_error_bound(1.0, 2000, B_SHEVTSOVA, BeMode::Exact).unwrap();
        assert!((v - 0.067_416_701_577_353_71).abs() < 1e-12);
        let small = be_error_bound(1.0, 2000, B_SHEVTSOVA, BeMode::SmallSigma).unwrap();
        assert!(small >= v);
        let quarter = be_error_bound(1.0, 8000, B_SHEVTSOVA, BeMode::Exact).unwrap();
        assert!((quarter - v / 2.0).abs() < 1e-15);
    }

    #[test]
    fn be_bound_ordering() {
        for i in 0..=94 {
            let s = 0.3 + 0.05 * i as f64;
            for &n in &[100, 10_000, 1_000_000] {
                let exact = be_error_bound(s, n, B_SHEVTSOVA, BeMode::Exact).unwrap();
                let small = be_error_bound(s, n, B_SHEVTSOVA, BeMode::SmallSigma).unwrap();
                let large = be_error_bound(s, n, B_SHEVTSOVA, BeMode::LargeSigma).unwrap();
                assert!(exact <= small.min(large), "s={s} n={n}");
            }
        }
    }

    #[test]
    fn be_bound_errors() {
        assert!(matches!(
            be_error_bound(1.0, 1, B_SHEVTSOVA, BeMode::Exact),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            be_error_bound(0.04, 100, B_SHEVTSOVA, BeMode::SmallSigma),
            Err(Error::Range { .. })
        ));
        assert!(check_be_constant(0.5).is_err());
        assert!(check_be_constant(B_ESSEEN).is_ok());
    }

    #[test]
    fn edgeworth_coefficients_sigma_one() {
        let m = edgeworth_model(1.0, 2000, 3.0).unwrap();
        let expected_c = (E + 2.0) * (E - 1.0).sqrt() / (6.0 * 2000f64.sqrt());
        assert!((m.c_n - expected_c).abs() < 1e-16);
        assert!((m.c_n - 0.023_049_676_190_777_97).abs() < 1e-15);
        let (c, d) = edgeworth_coefficients(&moments(1.0).unwrap(), 2000);
        assert!(((c - m.c_n) / m.c_n).abs() < 1e-12);
        assert!(((d - m.d_n) / m.d_n).abs() < 1e-12);
    }

    #[test]
    fn edgeworth_coefficients_vanish() {
        let (c1, d1) = lognormal_edgeworth_coefficients(1.0, 1_000).unwrap();
        let (c2, d2) = lognormal_edgeworth_coefficients(1.0, 1_000_000).unwrap();
        assert!((c2 - c1 / 1000f64.sqrt()).abs() < 1e-16);
        assert!((d2 - d1 / 1000.0).abs() < 1e-18);
    }

    #[test]
    fn edgeworth_cdf_points() {
        let m = edgeworth_model(1.0, 2000, 3.0).unwrap();
        assert_eq!(edgeworth_cdf(&m, 0.0).unwrap(), std_normal_cdf(m.c_n));
        let at_one = std_normal_cdf(1.0 + 2.0 * m.d_n - 3.0 * m.c_n * m.c_n);
        assert!((edgeworth_cdf(&m, 1.0).unwrap() - at_one).abs() < 1e-15);
        let v = edgeworth_cdf(&m, -2.0).unwrap();
        assert!((v - std_normal_cdf(-2.0)).abs() < 0.02);
        assert!(matches!(edgeworth_cdf(&m, 3.5), Err(Error::Domain(_))));
    }

    #[test]
    fn edgeworth_monotone_on_default_kappa() {
        for &n in &[2_000u64, 100_000, 10_000_000] {
            let k = default_kappa(n);
            let m = edgeworth_model(1.0, n, k).unwrap();
            assert!(m.min_derivative().1 > 0.0);
        }
        assert_eq!(default_kappa(2000), 1.0);
    }

    #[test]
    fn edgeworth_rejects_non_monotone_range() {
        // Large skewness at small sigma and n: p_n' turns negative.
        match edgeworth_model(0.5, 100, 3.0) {
            Err(Error::Validity(msg)) => assert!(msg.contains("p_n'")),
            other => panic!("expected validity error, got {other:?}"),
        }
    }
}
