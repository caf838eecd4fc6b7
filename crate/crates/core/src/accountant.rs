//! Single-epoch δ bound for shuffled DP-SGD and its inversions.
//!
//! For noise multiplier σ and `M` rounds the trade-off function of one epoch
//! satisfies `f(a) >= 1 - a - δ` whenever δ is at least the six-term sum in
//! [`DeltaBreakdown`] and the validity condition holds. `E` epochs compose to
//! `f^{⊗E}(a) >= (1-δ)^E - a`.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lognormal::check_sigma;
use crate::numerics::{exp_m1, std_normal_cdf};
use crate::tradeoff::{compose_f0_delta, TradeoffCurve, UniformShift};

/// Default clipping norm for dataset sizing.
pub const DEFAULT_CLIP: f64 = 1.0;
/// Default ceiling on the per-round noise `CσM/N`.
pub const DEFAULT_NOISE_BUDGET: f64 = 0.1;

const MAX_EXP_ARG: f64 = 700.0;

/// `(σ, M, E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyParams {
    pub sigma: f64,
    pub rounds: u64,
    pub epochs: u64,
}

impl PrivacyParams {
    pub fn new(sigma: f64, rounds: u64, epochs: u64) -> Result<Self> {
        check_sigma(sigma)?;
        if rounds < 3 {
            return Err(Error::Precondition(format!("need M >= 3 rounds, got {rounds}")));
        }
        if epochs < 1 {
            return Err(Error::Precondition("need E >= 1 epochs".into()));
        }
        Ok(PrivacyParams {
            sigma,
            rounds,
            epochs,
        })
    }

    /// `σ < √(3/ln M)`: the bound can never be valid here.
    pub fn below_validity_threshold(&self) -> bool {
        self.sigma < (3.0 / (self.rounds as f64).ln()).sqrt()
    }

    /// `σ < 1/√(2 ln M)`: the regime of the known impossibility result.
    pub fn in_impossibility_regime(&self) -> bool {
        self.sigma < 1.0 / (2.0 * (self.rounds as f64).ln()).sqrt()
    }
}

/// `μ = √((e^{1/σ²} - 1)/(M - 1))`.
pub fn mu_of(sigma: f64, rounds: u64) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    if rounds < 2 {
        return Err(Error::Precondition(format!("need M >= 2, got {rounds}")));
    }
    if inv > MAX_EXP_ARG {
        return Err(Error::range("e^{1/sigma^2}", inv));
    }
    Ok((exp_m1(inv) / (rounds - 1) as f64).sqrt())
}

// e^{1/σ²}(1 + 4e^{-3/σ²})/(1 - e^{-1/σ²})², the Berry-Esseen factor per unit μ.
fn be_coefficient(inv: f64) -> Result<f64> {
    if inv > MAX_EXP_ARG {
        return Err(Error::range("e^{1/sigma^2}", inv));
    }
    let one_minus = -exp_m1(-inv);
    Ok(inv.exp() * (1.0 + 4.0 * (-3.0 * inv).exp()) / (one_minus * one_minus))
}

/// `1/2 - Φ(-(e^{1/σ²} - 1)/2)`, the right side of the validity condition.
pub fn validity_rhs(sigma: f64) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    // e^{1/σ²} overflowing just saturates Φ at 0.
    Ok(0.5 - std_normal_cdf(-0.5 * exp_m1(inv)))
}

/// The six terms of the δ bound, their sum, and the validity condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBreakdown {
    pub mu: f64,
    pub term_be: f64,
    pub term_linear: f64,
    pub term_quad: f64,
    pub term_cubic: f64,
    pub term_quartic: f64,
    pub term_tail: f64,
    pub total: f64,
    pub validity_lhs: f64,
    pub validity_rhs: f64,
    pub valid: bool,
}

impl DeltaBreakdown {
    pub fn terms(&self) -> [f64; 6] {
        [
            self.term_be,
            self.term_linear,
            self.term_quad,
            self.term_cubic,
            self.term_quartic,
            self.term_tail,
        ]
    }

    /// `validity_rhs - validity_lhs`; non-negative iff valid.
    pub fn validity_margin(&self) -> f64 {
        self.validity_rhs - self.validity_lhs
    }
}

/// `4.52/(2.88√(ln M) - 2.41/√(ln M)) · M^{-25/24}`.
pub fn tail_term(rounds: u64) -> Result<f64> {
    let ln_m = (rounds as f64).ln();
    let denom = 2.88 * ln_m.sqrt() - 2.41 / ln_m.sqrt();
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::Precondition(format!(
            "tail term undefined for M = {rounds} (need M >= 3)"
        )));
    }
    Ok(4.52 / denom * (rounds as f64).powf(-25.0 / 24.0))
}

/// Evaluates the single-epoch δ bound at `(σ, M)` with Berry–Esseen constant `b`.
pub fn delta_bound(p: &PrivacyParams, b: f64) -> Result<DeltaBreakdown> {
    let inv = check_sigma(p.sigma)?;
    let mu = mu_of(p.sigma, p.rounds)?;
    let coef = be_coefficient(inv)?;
    let sqrt_2pi = (2.0 * PI).sqrt();
    let sqrt_2epi = (2.0 * E * PI).sqrt();
    let one_minus = -exp_m1(-inv);

    let term_be = 2.0 * b * coef * mu;
    let term_linear = mu / sqrt_2pi;
    let term_quad = (1.0 / (4.0 * sqrt_2pi)
        + (1.0 + inv.exp() / one_minus) / (2.0 * sqrt_2epi))
        * mu
        * mu;
    let term_cubic = mu.powi(3) / (4.0 * sqrt_2epi);
    let term_quartic = mu.powi(4) / (32.0 * sqrt_2epi);
    let term_tail = tail_term(p.rounds)?;
    let total = term_be + term_linear + term_quad + term_cubic + term_quartic + term_tail;

    let validity_lhs = total + 0.5 * term_be;
    let validity_rhs = validity_rhs(p.sigma)?;
    Ok(DeltaBreakdown {
        mu,
        term_be,
        term_linear,
        term_quad,
        term_cubic,
        term_quartic,
        term_tail,
        total,
        validity_lhs,
        validity_rhs,
        valid: validity_lhs <= validity_rhs,
    })
}

/// The Berry–Esseen and linear terms only: `(2B·coef(σ) + 1/√(2π)) μ`.
pub fn delta_two_term(sigma: f64, rounds: u64, b: f64) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    let mu = mu_of(sigma, rounds)?;
    Ok((2.0 * b * be_coefficient(inv)? + 1.0 / (2.0 * PI).sqrt()) * mu)
}

/// Which closed-form lower bound on `M` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MBound {
    /// Inverts the two-term δ approximation at the target δ.
    Primary,
    /// Follows from the validity condition alone.
    Conditional,
}

/// Square root of `(M-1)δ²` for the two-term bound, with `k` the Berry–Esseen multiplier.
fn m_bracket(inv: f64, kb: f64) -> Result<f64> {
    if 1.5 * inv > MAX_EXP_ARG {
        return Err(Error::range("e^{3/(2 sigma^2)}", 1.5 * inv));
    }
    let one_minus = -exp_m1(-inv);
    Ok(kb * (1.5 * inv).exp() * (1.0 + 4.0 * (-3.0 * inv).exp()) / one_minus.powf(1.5)
        + exp_m1(inv).sqrt() / (2.0 * PI).sqrt())
}

/// Real-valued closed-form lower bound on `M` (callers take the ceiling).
pub fn m_closed_form(sigma: f64, delta: f64, b: f64, which: MBound) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    let (kb, denom) = match which {
        MBound::Primary => {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::domain(format!("delta must be > 0, got {delta}")));
            }
            (2.0 * b, delta)
        }
        MBound::Conditional => {
            let rhs = validity_rhs(sigma)?;
            if rhs <= 0.0 {
                return Err(Error::domain("validity right-hand side is not positive"));
            }
            (3.0 * b, rhs)
        }
    };
    let ratio = m_bracket(inv, kb)? / denom;
    let m = 1.0 + ratio * ratio;
    if !m.is_finite() {
        return Err(Error::range("closed-form M", 2.0 * ratio.ln()));
    }
    Ok(m)
}

/// `(M-1)δ²` implied by the primary closed form; `M ≈ constant/δ²`.
pub fn rule_of_thumb_constant(sigma: f64, b: f64) -> Result<f64> {
    let inv = check_sigma(sigma)?;
    Ok(m_bracket(inv, 2.0 * b)?.powi(2))
}

/// `ceil(C σ M / noise_budget)`.
pub fn min_dataset(sigma: f64, rounds: u64, clip: f64, noise_budget: f64) -> Result<u64> {
    for (name, v) in [("sigma", sigma), ("C", clip), ("noise budget", noise_budget)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!("{name} must be > 0, got {v}")));
        }
    }
    let n = clip * sigma * rounds as f64 / noise_budget;
    // Absorb representation error so exact multiples do not round up.
    let nearest = n.round();
    let n = if (n - nearest).abs() <= 1e-12 * n { nearest } else { n.ceil() };
    if n >= u64::MAX as f64 {
        return Err(Error::Saturation(format!("dataset size {n} does not fit in u64")));
    }
    Ok(n as u64)
}

/// Result of [`solve_m_exact`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSolution {
    pub sigma: f64,
    pub delta_target: f64,
    pub rounds: u64,
    pub delta_achieved: f64,
    pub n_min: u64,
    /// Target within the `(2/3)·validity_rhs` frontier.
    pub admissible: bool,
    pub breakdown: DeltaBreakdown,
}

const SEARCH_CEILING: u64 = 1 << 63;

/// Smallest `M >= 3` whose full bound is valid and at most `delta_target`.
///
/// Doubles upward from the closed-form seed, then bisects on integers; the
/// bound and its validity margin are both monotone in `M`.
pub fn solve_m_exact(sigma: f64, delta_target: f64, b: f64) -> Result<ParamSolution> {
    check_sigma(sigma)?;
    if !(delta_target > 0.0 && delta_target < 1.0) {
        return Err(Error::domain(format!(
            "delta target must be in (0, 1), got {delta_target}"
        )));
    }
    let feasible = |m: u64| -> Result<bool> {
        let bd = delta_bound(&PrivacyParams::new(sigma, m, 1)?, b)?;
        Ok(bd.valid && bd.total <= delta_target)
    };

    let seed = m_closed_form(sigma, delta_target, b, MBound::Primary)?;
    if seed >= SEARCH_CEILING as f64 {
        return Err(Error::Saturation(format!(
            "closed-form seed {seed:.3e} exceeds 2^63 rounds"
        )));
    }
    let seed = (seed.ceil() as u64).max(3);

    let (mut lo, mut hi);
    if feasible(seed)? {
        hi = seed;
        lo = seed / 2;
        while lo >= 3 && feasible(lo)? {
            hi = lo;
            lo /= 2;
        }
        lo = lo.max(2);
    } else {
        lo = seed;
        hi = seed.saturating_mul(2);
        while !feasible(hi)? {
            if hi >= SEARCH_CEILING {
                return Err(Error::Saturation(format!(
                    "no admissible M below 2^63 for sigma = {sigma}, delta = {delta_target}"
                )));
            }
            lo = hi;
            hi = hi.saturating_mul(2).min(SEARCH_CEILING);
        }
    }
    // lo infeasible (or the sentinel 2), hi feasible.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let breakdown = delta_bound(&PrivacyParams::new(sigma, hi, 1)?, b)?;
    Ok(ParamSolution {
        sigma,
        delta_target,
        rounds: hi,
        delta_achieved: breakdown.total,
        n_min: min_dataset(sigma, hi, DEFAULT_CLIP, DEFAULT_NOISE_BUDGET)?,
        admissible: delta_target <= max_delta_for_sigma(sigma)?,
        breakdown,
    })
}

/// `(2/3)(1/2 - Φ(-(e^{1/σ²}-1)/2))`: the largest δ for which the primary
/// closed-form bound on `M` implies the conditional one.
pub fn max_delta_for_sigma(sigma: f64) -> Result<f64> {
    Ok(2.0 / 3.0 * validity_rhs(sigma)?)
}

/// Largest σ with `max_delta_for_sigma(σ) >= delta`.
pub fn max_sigma_for_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::domain(format!("delta must be in (0, 1/3), got {delta}")));
    }
    let f = |ln_s: f64| max_delta_for_sigma(ln_s.exp()).map(|d| d - delta);
    // max_delta_for_sigma decreases from 1/3 (σ → 0) to 0 (σ → ∞).
    let (mut lo, mut hi) = ((1e-3f64).ln(), (1e7f64).ln());
    if f(lo)? < 0.0 || f(hi)? > 0.0 {
        return Err(Error::Numerical(format!(
            "cannot bracket the admissibility frontier for delta = {delta}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(lo.exp())
}

/// Input to [`admissibility`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AdmissibilityQuery {
    /// Given δ, return the largest admissible σ.
    Delta(f64),
    /// Given σ, return the largest admissible δ.
    Sigma(f64),
}

pub fn admissibility(query: AdmissibilityQuery) -> Result<f64> {
    match query {
        AdmissibilityQuery::Delta(d) => max_sigma_for_delta(d),
        AdmissibilityQuery::Sigma(s) => max_delta_for_sigma(s),
    }
}

/// Per-epoch δ whose `E`-fold composition has shift `composed`.
pub fn per_epoch_delta(composed: f64, epochs: u64) -> Result<f64> {
    if !(0.0..1.0).contains(&composed) {
        return Err(Error::domain(format!("composed shift must be in [0, 1), got {composed}")));
    }
    if epochs < 1 {
        return Err(Error::Precondition("need E >= 1".into()));
    }
    Ok(-((-composed).ln_1p() / epochs as f64).exp_m1())
}

/// How to carry a single-epoch bound over `E` epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EpochMode {
    /// `f^{⊗E}(a) >= (1-δ)^E - a`.
    Proven,
    /// Unproven `√E·δ` penalty: per-epoch δ is `target/√E`.
    ConjecturedSqrtE { target: f64 },
}

/// Output of [`multi_epoch`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MultiEpoch {
    Proven {
        per_epoch_delta: f64,
        composed_shift: f64,
        curve: TradeoffCurve,
    },
    /// Not a guarantee; `hypothetical` is always set.
    Conjectured {
        per_epoch_delta: f64,
        rounds_closed_form: f64,
        hypothetical: bool,
    },
}

pub fn multi_epoch(p: &PrivacyParams, b: f64, mode: EpochMode) -> Result<MultiEpoch> {
    match mode {
        EpochMode::Proven => {
            let bd = delta_bound(p, b)?;
            if !bd.valid {
                return Err(Error::Validity(format!(
                    "validity condition fails at sigma = {}, M = {} (margin {})",
                    p.sigma,
                    p.rounds,
                    bd.validity_margin()
                )));
            }
            let composed = UniformShift::new(bd.total)?.compose(p.epochs)?;
            Ok(MultiEpoch::Proven {
                per_epoch_delta: bd.total,
                composed_shift: compose_f0_delta(bd.total, p.epochs)?,
                curve: TradeoffCurve::sample(&composed, crate::tradeoff::DEFAULT_GRID_POINTS),
            })
        }
        EpochMode::ConjecturedSqrtE { target } => {
            let per_epoch = target / (p.epochs as f64).sqrt();
            Ok(MultiEpoch::Conjectured {
                per_epoch_delta: per_epoch,
                rounds_closed_form: m_closed_form(p.sigma, per_epoch, b, MBound::Primary)?,
                hypothetical: true,
            })
        }
    }
}
