//! Trade-off functions: the Gaussian family `G_μ`, the uniform shift
//! `f_{0,δ}`, their closed-form compositions, fixed points and separation
//! from the random-guessing diagonal.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{std_normal_cdf, std_normal_cdf_inv};

/// Grid size used when sampling a trade-off function into a curve.
pub const DEFAULT_GRID_POINTS: usize = 1025;

const CURVE_TOL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 200;

fn check_prob(name: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} = {v} is not in [0, 1]")))
    }
}

fn check_mu(mu: f64) -> Result<f64> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(mu)
    } else {
        Err(Error::domain(format!("mu must be finite and >= 0, got {mu}")))
    }
}

/// Gaussian trade-off function `G_μ(a) = Φ(Φ⁻¹(1-a) - μ)`.
pub fn gdp(mu: f64, a: f64) -> Result<f64> {
    check_mu(mu)?;
    check_prob("a", a)?;
    Ok(gdp_unchecked(mu, a))
}

fn gdp_unchecked(mu: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return 1.0;
    }
    if a >= 1.0 {
        return 0.0;
    }
    if mu == 0.0 {
        return 1.0 - a;
    }
    // Φ⁻¹(1-a) = -Φ⁻¹(a) keeps precision for small a.
    let z = -std_normal_cdf_inv(a).expect("a in (0,1)");
    std_normal_cdf(z - mu)
}

/// `f_{0,δ}(a) = max(1 - a - δ, 0)`.
pub fn f0_delta(delta: f64, a: f64) -> Result<f64> {
    check_prob("delta", delta)?;
    check_prob("a", a)?;
    Ok((1.0 - a - delta).max(0.0))
}

/// Shift of the `E`-fold composition `f_{0,δ}^{⊗E} = f_{0,1-(1-δ)^E}`.
pub fn compose_f0_delta(delta: f64, epochs: u64) -> Result<f64> {
    check_prob("delta", delta)?;
    if epochs < 1 {
        return Err(Error::Precondition("need E >= 1".into()));
    }
    if delta == 1.0 {
        return Ok(1.0);
    }
    Ok(-(epochs as f64 * (-delta).ln_1p()).exp_m1())
}

/// `G_μ^{⊗E} = G_{μ√E}`.
pub fn compose_gdp(mu: f64, epochs: u64) -> Result<f64> {
    check_mu(mu)?;
    if epochs < 1 {
        return Err(Error::Precondition("need E >= 1".into()));
    }
    Ok(mu * (epochs as f64).sqrt())
}

/// `k(a) = (1-δ̂) G_μ(a/(1-δ̂))` for `a <= 1-δ̂`, else 0; this is `G_μ ⊗ f_{0,δ̂}`.
pub fn compose_gdp_uniform(mu: f64, delta_hat: f64, a: f64) -> Result<f64> {
    check_mu(mu)?;
    check_prob("a", a)?;
    if !(0.0..1.0).contains(&delta_hat) {
        return Err(Error::domain(format!("delta_hat must be in [0, 1), got {delta_hat}")));
    }
    let scale = 1.0 - delta_hat;
    if a >= scale {
        return Ok(0.0);
    }
    Ok(scale * gdp_unchecked(mu, a / scale))
}

/// `δ̂ = max(δ/a*, 1 - G_μ(δ) + δ)` with `a* = Φ(-μ/2)`, the shift for which
/// `G_μ ⊗ f_{0,δ̂}` lies below `a ↦ G_μ(a+δ) - δ`.
pub fn delta_hat_of(mu: f64, delta: f64) -> Result<f64> {
    check_mu(mu)?;
    let a_star = std_normal_cdf(-0.5 * mu);
    if !(delta > 0.0 && delta < a_star) {
        return Err(Error::domain(format!(
            "need 0 < delta < a* = {a_star}, got {delta}"
        )));
    }
    Ok((delta / a_star).max(1.0 - gdp_unchecked(mu, delta) + delta))
}

/// A trade-off function as an evaluation map plus shape flags.
pub trait TradeoffFunction: Send + Sync {
    fn eval(&self, a: f64) -> f64;

    /// `f = f⁻¹`.
    fn is_symmetric(&self) -> bool {
        false
    }

    fn is_convex(&self) -> bool {
        true
    }

    /// Samples the function into a curve on the default uniform grid.
    fn sample(&self) -> TradeoffCurve {
        TradeoffCurve::sample(self, DEFAULT_GRID_POINTS)
    }
}

/// `G_μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian {
    pub mu: f64,
}

impl Gaussian {
    pub fn new(mu: f64) -> Result<Self> {
        Ok(Gaussian { mu: check_mu(mu)? })
    }
}

impl TradeoffFunction for Gaussian {
    fn eval(&self, a: f64) -> f64 {
        gdp_unchecked(self.mu, a.clamp(0.0, 1.0))
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `f_{0,δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformShift {
    pub delta: f64,
}

impl UniformShift {
    pub fn new(delta: f64) -> Result<Self> {
        Ok(UniformShift {
            delta: check_prob("delta", delta)?,
        })
    }

    /// `f_{0,δ}^{⊗E}`.
    pub fn compose(&self, epochs: u64) -> Result<Self> {
        UniformShift::new(compose_f0_delta(self.delta, epochs)?)
    }
}

impl TradeoffFunction for UniformShift {
    fn eval(&self, a: f64) -> f64 {
        (1.0 - a - self.delta).max(0.0)
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `G_μ ⊗ f_{0,δ̂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianWithShift {
    pub mu: f64,
    pub delta_hat: f64,
}

impl GaussianWithShift {
    pub fn new(mu: f64, delta_hat: f64) -> Result<Self> {
        compose_gdp_uniform(mu, delta_hat, 0.5)?;
        Ok(GaussianWithShift { mu, delta_hat })
    }
}

impl TradeoffFunction for GaussianWithShift {
    fn eval(&self, a: f64) -> f64 {
        compose_gdp_uniform(self.mu, self.delta_hat, a.clamp(0.0, 1.0)).expect("validated")
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `a ↦ max(G_μ(a+δ) - δ, 0)`: a Gaussian curve shifted by `δ` in both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedGaussian {
    pub mu: f64,
    pub delta: f64,
}

impl TradeoffFunction for ShiftedGaussian {
    fn eval(&self, a: f64) -> f64 {
        (gdp_unchecked(self.mu, (a + self.delta).min(1.0)) - self.delta).max(0.0)
    }
}

/// Wraps a closure as a trade-off function.
pub struct FnTradeoff<F> {
    f: F,
    symmetric: bool,
    convex: bool,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnTradeoff<F> {
    pub fn new(f: F, symmetric: bool, convex: bool) -> Self {
        FnTradeoff {
            f,
            symmetric,
            convex,
        }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> TradeoffFunction for FnTradeoff<F> {
    fn eval(&self, a: f64) -> f64 {
        (self.f)(a)
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn is_convex(&self) -> bool {
        self.convex
    }
}

/// Unique fixed point `a* = g(a*)` in `[0, 1/2]`, by bisection on `a - g(a)`.
pub fn fixed_point<G: TradeoffFunction + ?Sized>(g: &G) -> Result<f64> {
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    let h = |a: f64| a - g.eval(a);
    if h(lo) > 0.0 || h(hi) < 0.0 {
        return Err(Error::Numerical(format!(
            "no fixed point in [0, 1/2]: g(0) = {}, g(1/2) = {}",
            g.eval(0.0),
            g.eval(0.5)
        )));
    }
    for _ in 0..FIXED_POINT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let v = h(mid);
        if v == 0.0 || hi - lo <= f64::EPSILON * mid {
            lo = mid;
            hi = mid;
            break;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    if h(a).abs() > FIXED_POINT_TOL {
        return Err(Error::Numerical(format!(
            "fixed point did not converge: |a - g(a)| = {} at a = {a}",
            h(a).abs()
        )));
    }
    Ok(a)
}

/// Distance of a symmetric convex trade-off function from the diagonal `1-a`.
pub fn separation<G: TradeoffFunction + ?Sized>(g: &G) -> Result<f64> {
    Ok((1.0 - 2.0 * fixed_point(g)?) * FRAC_1_SQRT_2)
}

/// A trade-off function sampled on a grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl TradeoffCurve {
    /// `points` equally spaced values including both endpoints.
    pub fn uniform_grid(points: usize) -> Vec<f64> {
        let last = (points.max(2) - 1) as f64;
        (0..points.max(2)).map(|i| i as f64 / last).collect()
    }

    pub fn sample<G: TradeoffFunction + ?Sized>(g: &G, points: usize) -> Self {
        Self::sample_on(g, Self::uniform_grid(points))
    }

    pub fn sample_on<G: TradeoffFunction + ?Sized>(g: &G, grid: Vec<f64>) -> Self {
        let values = grid.iter().map(|&a| g.eval(a)).collect();
        TradeoffCurve { grid, values }
    }

    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let curve = TradeoffCurve { grid, values };
        curve.check_invariants()?;
        Ok(curve)
    }

    /// Monotone non-increasing, convex (up to 1e-12) and below the diagonal.
    pub fn check_invariants(&self) -> Result<()> {
        let (g, v) = (&self.grid, &self.values);
        if g.len() != v.len() || g.is_empty() {
            return Err(Error::Validity("grid and values must be non-empty and aligned".into()));
        }
        for i in 0..g.len() {
            if !(0.0..=1.0).contains(&g[i]) || !(0.0..=1.0).contains(&v[i]) {
                return Err(Error::Validity(format!("point {i} outside the unit square")));
            }
            if v[i] > 1.0 - g[i] + CURVE_TOL {
                return Err(Error::Validity(format!(
                    "f({}) = {} lies above the diagonal",
                    g[i], v[i]
                )));
            }
            if i > 0 {
                if g[i] <= g[i - 1] {
                    return Err(Error::Validity(format!("grid not increasing at {i}")));
                }
                if v[i] > v[i - 1] {
                    return Err(Error::Validity(format!("values increase at a = {}", g[i])));
                }
            }
            if i > 0 && i + 1 < g.len() {
                let (h1, h2) = (g[i] - g[i - 1], g[i + 1] - g[i]);
                let d2 = ((v[i + 1] - v[i]) / h2 - (v[i] - v[i - 1]) / h1) * 0.5 * (h1 + h2);
                if d2 < -CURVE_TOL {
                    return Err(Error::Validity(format!(
                        "not convex at a = {}: second difference {d2}",
                        g[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Vec<f64> {
        TradeoffCurve::uniform_grid(DEFAULT_GRID_POINTS)
    }

    #[test]
    fn gdp_values() {
        assert!((gdp(0.0, 0.3).unwrap() - 0.7).abs() < 1e-12);
        let v = gdp(1.0, 0.5).unwrap();
        assert!((v - std_normal_cdf(-1.0)).abs() < 1e-15);
        assert!((v - 0.158_655).abs() < 1e-6);
        for &mu in &[0.2, 1.0, 2.5] {
            let a = std_normal_cdf(-mu / 2.0);
            assert!((gdp(mu, a).unwrap() - a).abs() < 1e-12);
        }
        assert_eq!(gdp(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(gdp(1.0, 1.0).unwrap(), 0.0);
        assert!(gdp(1.0, 1.5).is_err());
        assert!(gdp(-1.0, 0.5).is_err());
    }

    #[test]
    fn gdp_is_self_inverse() {
        for &mu in &[0.1, 1.0, 3.0] {
            for &a in grid().iter() {
                let back = gdp(mu, gdp(mu, a).unwrap()).unwrap();
                assert!((back - a).abs() <= 1e-9, "mu={mu} a={a}");
            }
        }
    }

    #[test]
    fn gdp_monotone_in_mu() {
        for &a in grid().iter() {
            let mut prev = gdp(0.0, a).unwrap();
            for k in 1..30 {
                let v = gdp(0.1 * k as f64, a).unwrap();
                assert!(v <= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn f0_delta_values() {
        assert_eq!(f0_delta(0.0, 0.25).unwrap(), 0.75);
        assert!((f0_delta(0.01, 0.5).unwrap() - 0.49).abs() < 1e-15);
        assert_eq!(f0_delta(0.3, 0.8).unwrap(), 0.0);
    }

    #[test]
    fn compose_f0_values() {
        assert!((compose_f0_delta(0.01, 1).unwrap() - 0.01).abs() < 1e-17);
        let v = compose_f0_delta(0.01, 100).unwrap();
        assert!((v - (1.0 - 0.99f64.powi(100))).abs() < 1e-14);
        assert!((v - 0.633_968).abs() < 1e-6);
        for &d in &[1e-9, 0.02, 0.4] {
            let two = compose_f0_delta(d, 2).unwrap();
            assert!((two - (2.0 * d - d * d)).abs() < 1e-15);
        }
        assert!(compose_f0_delta(0.1, 0).is_err());
    }

    #[test]
    fn fixed_points() {
        assert_eq!(fixed_point(&Gaussian::new(0.0).unwrap()).unwrap(), 0.5);
        for &mu in &[0.01, 0.5, 1.0, 4.0] {
            let a = fixed_point(&Gaussian::new(mu).unwrap()).unwrap();
            assert!((a - std_normal_cdf(-mu / 2.0)).abs() < 1e-10, "mu={mu}");
        }
        let a = fixed_point(&UniformShift::new(0.1).unwrap()).unwrap();
        assert!((a - 0.45).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_rejects_non_tradeoff() {
        let above = FnTradeoff::new(|_| 1.0, false, true);
        assert!(matches!(fixed_point(&above), Err(Error::Numerical(_))));
    }

    #[test]
    fn separations() {
        assert!(separation(&Gaussian::new(0.0).unwrap()).unwrap().abs() < 1e-15);
        let mu = 0.8;
        let s = separation(&Gaussian::new(mu).unwrap()).unwrap();
        assert!((s - (1.0 - 2.0 * std_normal_cdf(-mu / 2.0)) * FRAC_1_SQRT_2).abs() < 1e-10);
        let s = separation(&UniformShift::new(0.02).unwrap()).unwrap();
        assert!((s - 0.02 * FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn separation_first_order_in_mu() {
        let bound = |x: f64| x / (2.0 * std::f64::consts::PI.sqrt()) + 1e-6;
        for k in 1..=50 {
            let x = 0.01 * k as f64;
            let s = separation(&Gaussian::new(x).unwrap()).unwrap();
            assert!(s <= bound(x), "x={x}");
        }
    }

    #[test]
    fn compose_gdp_uniform_values() {
        for &a in &[0.0, 0.2, 0.9] {
            assert!((compose_gdp_uniform(0.0, 0.0, a).unwrap() - (1.0 - a)).abs() < 1e-12);
        }
        assert_eq!(compose_gdp_uniform(1.3, 0.2, 0.8).unwrap(), 0.0);
        let v = compose_gdp_uniform(1.0, 0.1, 0.45).unwrap();
        assert!((v - 0.9 * std_normal_cdf(-1.0)).abs() < 1e-15);
        assert!((v - 0.142_789_728_538_311_35).abs() < 1e-14);
        assert!(compose_gdp_uniform(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn delta_hat_values() {
        assert!((delta_hat_of(0.0, 0.1).unwrap() - 0.2).abs() < 1e-12);
        let a_star = std_normal_cdf(-0.25);
        let expected = (0.01 / a_star).max(1.0 - gdp(0.5, 0.01).unwrap() + 0.01);
        assert_eq!(delta_hat_of(0.5, 0.01).unwrap(), expected);
        assert!(delta_hat_of(0.5, 1e-12).unwrap() < 1e-9);
        assert!(matches!(delta_hat_of(1.0, 0.4), Err(Error::Domain(_))));
    }

    #[test]
    fn shifted_gaussian_dominates_composed_floor() {
        for &(mu, delta) in &[(0.1, 0.01), (0.5, 0.05)] {
            let h = ShiftedGaussian { mu, delta };
            let k = GaussianWithShift::new(mu, delta_hat_of(mu, delta).unwrap()).unwrap();
            for &a in grid().iter() {
                assert!(h.eval(a) >= k.eval(a) - 1e-12, "mu={mu} a={a}");
            }
        }
    }

    #[test]
    fn curve_rejects_bad_shapes() {
        let g = vec![0.0, 0.5, 1.0];
        assert!(TradeoffCurve::new(g.clone(), vec![1.0, 0.5, 0.0]).is_ok());
        assert!(TradeoffCurve::new(g.clone(), vec![1.0, 0.6, 0.0]).is_err());
        assert!(TradeoffCurve::new(g.clone(), vec![0.5, 0.6, 0.0]).is_err());
        assert!(TradeoffCurve::new(g.clone(), vec![1.0, 0.2, 0.0]).is_ok());
        assert!(TradeoffCurve::new(g, vec![1.0, 0.2, 0.1]).is_err());
    }

    proptest! {
        #[test]
        fn gdp_uniform_curves_are_tradeoffs(mu in 0.0..3.0f64, dh in 0.0..0.5f64) {
            let k = GaussianWithShift::new(mu, dh).unwrap();
            prop_assert!(k.sample().check_invariants().is_ok());
        }

        #[test]
        fn gaussian_curves_are_tradeoffs(mu in 0.0..6.0f64) {
            prop_assert!(Gaussian::new(mu).unwrap().sample().check_invariants().is_ok());
        }
    }
}
