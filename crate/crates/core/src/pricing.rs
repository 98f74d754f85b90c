//! Risk-neutral prices of credit-sensitive claims: promised payoff at
//! maturity, recovery at maturity or at default, flat risk-free rate.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SubCirError};
use crate::quad::{integrate, GammaGauss, QuadConfig};
use crate::subcir::SubCirModel;

/// Real function of the terminal (or default-time) state.
pub type StateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Extra quadrature nodes beyond `2N` in [`payoff_coefficients`].
pub const EXTRA_NODES: usize = 16;

#[derive(Clone)]
pub enum Payoff {
    Constant(f64),
    Function(StateFn),
}

impl Payoff {
    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Payoff::Function(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Payoff::Constant(c) => *c,
            Payoff::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payoff::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Payoff::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// When the recovery `ℛ(X)` on default is paid.
#[derive(Clone, Debug)]
pub enum RecoveryTiming {
    /// Only the maturity payoff `f₁` is paid to a defaulted claim.
    AtMaturity,
    /// `ℛ(X^φ_τ)` is paid at the default time `τ`, in addition to `f₁`.
    AtDefault(Payoff),
}

#[derive(Clone, Debug)]
pub struct Claim {
    maturity: f64,
    rate: f64,
    promised: Payoff,
    recovery: Payoff,
    timing: RecoveryTiming,
}

impl Claim {
    pub fn new(maturity: f64, rate: f64, promised: Payoff, recovery: Payoff, timing: RecoveryTiming) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(SubCirError::InvalidParameter {
                name: "maturity",
                msg: format!("must be positive, got {maturity}"),
            });
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(SubCirError::InvalidParameter {
                name: "rate",
                msg: format!("must be nonnegative, got {rate}"),
            });
        }
        if let Payoff::Constant(r) = recovery {
            if !(0.0..=1.0).contains(&r) {
                return Err(SubCirError::InvalidParameter {
                    name: "recovery",
                    msg: format!("constant recovery must lie in [0, 1], got {r}"),
                });
            }
        }
        Ok(Self {
            maturity,
            rate,
            promised,
            recovery,
            timing,
        })
    }

    /// Defaultable zero-coupon bond paying 1, or the fraction `recovery` of it
    /// at maturity after default.
    pub fn zero_coupon(maturity: f64, rate: f64, recovery: f64) -> Result<Self> {
        Self::new(
            maturity,
            rate,
            Payoff::Constant(1.0),
            Payoff::Constant(recovery),
            RecoveryTiming::AtMaturity,
        )
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn promised(&self) -> &Payoff {
        &self.promised
    }
    pub fn recovery(&self) -> &Payoff {
        &self.recovery
    }
    pub fn timing(&self) -> &RecoveryTiming {
        &self.timing
    }
}

/// `f_n = ∫ f φ_n^β π dx` for `n = 1..=n`.
///
/// `φ_n^β π` is a polynomial times the gamma density with rate
/// `(κ + ρ)/σ²`, so the Gauss rule for that weight with `2N + 16` nodes is
/// used; each term is assembled in log space because tail nodes pair tiny
/// weights with huge Laguerre values.
pub fn payoff_coefficients<F: FnMut(f64) -> f64>(m: &SubCirModel, beta: f64, mut f: F, n: usize) -> Result<Vec<f64>> {
    let sd = m.spectral(beta)?;
    let p = m.cir();
    let s2 = p.sigma() * p.sigma();
    let shifted = (p.kappa() + sd.rho()) / s2;
    let rule = GammaGauss::new(p.b(), shifted, 2 * n + EXTRA_NODES)?;
    let ln_shift = p.b() * (p.a() / shifted).ln();
    let nu = p.b() - 1.0;
    let scale = 2.0 * sd.rho() / s2;
    let ln_norms: Vec<f64> = (1..=n).map(|k| sd.ln_norm(k)).collect();

    const BIG: f64 = 1e150;
    let mut coeffs = vec![0.0; n];
    let mut second_moment = 0.0;
    for (&x, &lw) in rule.nodes.iter().zip(&rule.ln_weights) {
        let fx = f(x);
        if !fx.is_finite() {
            return Err(SubCirError::Domain {
                op: "payoff_coefficients",
                msg: format!("payoff is not finite at x = {x}"),
            });
        }
        let base = lw + ln_shift;
        second_moment += fx * fx * (base + (sd.rho() - p.kappa()) / s2 * x).exp();
        if fx == 0.0 {
            continue;
        }
        let y = scale * x;
        let (mut prev, mut curr, mut log_scale) = (0.0_f64, 1.0_f64, 0.0_f64);
        for (j, c) in coeffs.iter_mut().enumerate() {
            if j > 0 {
                let k = j as f64;
                let next = ((2.0 * k - 1.0 + nu - y) * curr - (k - 1.0 + nu) * prev) / k;
                prev = curr;
                curr = next;
                if curr.abs() > BIG {
                    curr /= BIG;
                    prev /= BIG;
                    log_scale += BIG.ln();
                }
            }
            *c += fx * curr * (base + ln_norms[j] + log_scale).exp();
        }
    }
    if !second_moment.is_finite() {
        return Err(SubCirError::Domain {
            op: "payoff_coefficients",
            msg: "payoff is not square-integrable against the stationary law".into(),
        });
    }
    Ok(coeffs)
}

/// Number of coefficients used for the expansions of a model.
fn coefficient_count(m: &SubCirModel) -> usize {
    m.truncation().n_max
}

/// `𝒫_τ^{β,φ} f(x)` for a payoff given as a function.
fn apply_payoff(m: &SubCirModel, beta: f64, tau: f64, f: &Payoff, x: f64) -> Result<f64> {
    let coeffs = match f {
        Payoff::Constant(c) if beta == 0.0 => vec![*c],
        _ => payoff_coefficients(m, beta, |y| f.eval(y), coefficient_count(m))?,
    };
    m.apply_semigroup(beta, tau, &coeffs, x)
}

/// Price at time `t` of `claim`, given the state `x` and the default flag.
///
/// `e^{−rτ}[𝒫^{0,φ}_τ f₁(x) + (1−d)𝒫^{1,φ}_τ(f₀ − f₁)(x)]` with `τ = T − t`,
/// plus for recovery at default
/// `(1−d)∫₀^τ e^{−ru} 𝒫^{1,φ}_u(ℛ k^φ)(x) du`. The expansion is used on
/// `[t_min, τ]`; on `[0, t_min]` the trapezoid between `ℛ(x)k^φ(x)` and the
/// expansion at `t_min` is used, whose error is below `sup ℛk^φ · t_min`.
pub fn price_claim(m: &SubCirModel, claim: &Claim, t: f64, x: f64, defaulted: bool) -> Result<f64> {
    let tau = claim.maturity - t;
    let t_min = m.truncation().t_min;
    if !(tau >= t_min) {
        return Err(SubCirError::BelowResolution { t: tau, t_min });
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(SubCirError::Domain {
            op: "price_claim",
            msg: format!("state must be nonnegative, got {x}"),
        });
    }
    let discount = (-claim.rate * tau).exp();
    let recovered = apply_payoff(m, 0.0, tau, &claim.recovery, x)?;
    let mut value = discount * recovered;
    if defaulted {
        return Ok(value);
    }
    let survival_part = match (&claim.promised, &claim.recovery) {
        (Payoff::Constant(a), Payoff::Constant(b)) => (a - b) * m.survival_probability(tau, x, false)?,
        (f0, f1) => {
            let (f0, f1) = (f0.clone(), f1.clone());
            let spread_payoff = Payoff::function(move |y| f0.eval(y) - f1.eval(y));
            apply_payoff(m, 1.0, tau, &spread_payoff, x)?
        }
    };
    value += discount * survival_part;

    if let RecoveryTiming::AtDefault(at_default) = &claim.timing {
        value += default_recovery_value(m, at_default, claim.rate, tau, x)?;
    }
    Ok(value)
}

fn default_recovery_value(m: &SubCirModel, recovery: &Payoff, rate: f64, tau: f64, x: f64) -> Result<f64> {
    if let Payoff::Constant(c) = recovery {
        if *c == 0.0 {
            return Ok(0.0);
        }
    }
    let mut failure = None;
    let mut paid = |y: f64| match m.killing_rate(y) {
        Ok(k) => recovery.eval(y) * k,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let coeffs = payoff_coefficients(m, 1.0, &mut paid, coefficient_count(m))?;
    let at_x = paid(x);
    if let Some(e) = failure {
        return Err(e);
    }
    let t_min = m.truncation().t_min;
    let mut failure = None;
    let mut density = |u: f64| match m.apply_semigroup(1.0, u, &coeffs, x) {
        Ok(v) => (-rate * u).exp() * v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let head = 0.5 * t_min * (at_x + density(t_min));
    let body = if tau > t_min {
        integrate(&mut density, t_min, tau, &QuadConfig::with_rel_tol(m.quadrature().rel_tol))?.value
    } else {
        0.0
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(head + body)
}

/// `e^{−rτ}[(1−d)Q + R(1 − (1−d)Q)]` with `Q = 𝒫^{1,φ}_τ 1(x)`.
pub fn zcb_defaultable(m: &SubCirModel, t: f64, maturity: f64, x: f64, defaulted: bool, rate: f64, recovery: f64) -> Result<f64> {
    let tau = maturity - t;
    let t_min = m.truncation().t_min;
    if !(tau >= t_min) {
        return Err(SubCirError::BelowResolution { t: tau, t_min });
    }
    let q = m.survival_probability(tau, x, defaulted)?;
    Ok((-rate * tau).exp() * (q + recovery * (1.0 - q)))
}

/// Default-free bond price `𝒫^{1,φ}_{T−t} 1(x)` when `X^φ` is read as a short rate.
pub fn riskfree_bond_subcir(m: &SubCirModel, t: f64, maturity: f64, x: f64) -> Result<f64> {
    let tau = maturity - t;
    if tau == 0.0 {
        return Ok(1.0);
    }
    let t_min = m.truncation().t_min;
    if !(tau >= t_min) {
        return Err(SubCirError::BelowResolution { t: tau, t_min });
    }
    m.survival_probability(tau, x, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cir::CirParams;
    use crate::subordinators::SubordinatorSpec;
    use num_complex::Complex64;

    fn reference() -> SubCirModel {
        SubCirModel::with_defaults(
            CirParams::new(1.0, 0.1, 0.25).unwrap(),
            SubordinatorSpec::inverse_gaussian(0.5, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn coefficients_of_constant() {
        let m = reference();
        let c = payoff_coefficients(&m, 0.0, |_| 1.0, 30).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-13);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn coefficients_of_exponential() {
        let m = reference();
        for beta in [0.0, 1.0] {
            let sd = m.spectral(beta).unwrap();
            for z in [0.0, 1.0, 7.5] {
                let c = payoff_coefficients(&m, beta, |x| (-z * x).exp(), 60).unwrap();
                for (j, v) in c.iter().enumerate() {
                    let want = sd.coeff_exp(j + 1, Complex64::new(z, 0.0)).re;
                    assert!((v - want).abs() < 1e-9, "β={beta} z={z} n={}", j + 1);
                }
            }
        }
    }

    #[test]
    fn coefficients_of_identity() {
        // x = (b − √b φ_2^0(x))/a, so f_1 = θ, f_2 = −√b/a
        let m = reference();
        let p = m.cir();
        let c = payoff_coefficients(&m, 0.0, |x| x, 20).unwrap();
        assert!((c[0] - p.theta()).abs() < 1e-14);
        assert!((c[1] + p.b().sqrt() / p.a()).abs() < 1e-14);
        assert!(c[2..].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn rejects_non_finite_payoff() {
        let m = reference();
        assert!(payoff_coefficients(&m, 0.0, |x| (x * 1e3).exp(), 10).is_err());
    }

    #[test]
    fn claim_validation() {
        assert!(Claim::zero_coupon(0.0, 0.0, 0.4).is_err());
        assert!(Claim::zero_coupon(1.0, -0.1, 0.4).is_err());
        assert!(Claim::zero_coupon(1.0, 0.0, 1.4).is_err());
    }

    #[test]
    fn zcb_reductions() {
        let m = reference();
        let q = m.survival_probability(5.0, 0.1, false).unwrap();
        let r = 0.03;
        let df = (-r * 5.0f64).exp();
        assert!((zcb_defaultable(&m, 0.0, 5.0, 0.1, false, r, 1.0).unwrap() - df).abs() < 1e-15);
        assert!((zcb_defaultable(&m, 0.0, 5.0, 0.1, false, r, 0.0).unwrap() - df * q).abs() < 1e-15);
        assert!((zcb_defaultable(&m, 0.0, 5.0, 0.1, true, r, 0.4).unwrap() - df * 0.4).abs() < 1e-15);
        let zero_rate = zcb_defaultable(&m, 0.0, 1.0, 0.1, false, 0.0, 0.0).unwrap();
        assert!(zero_rate > 0.85 && zero_rate < 0.95);
    }

    #[test]
    fn price_claim_matches_zcb() {
        let m = reference();
        let r = 0.02;
        for (x, defaulted) in [(0.1, false), (0.3, false), (0.1, true)] {
            let claim = Claim::zero_coupon(7.0, r, 0.4).unwrap();
            let got = price_claim(&m, &claim, 2.0, x, defaulted).unwrap();
            let want = zcb_defaultable(&m, 2.0, 7.0, x, defaulted, r, 0.4).unwrap();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // functional payoffs go through the quadrature coefficients
        let claim = Claim::new(
            5.0,
            r,
            Payoff::function(|_| 1.0),
            Payoff::function(|_| 0.4),
            RecoveryTiming::AtMaturity,
        )
        .unwrap();
        let got = price_claim(&m, &claim, 0.0, 0.1, false).unwrap();
        let q = m.survival_probability(5.0, 0.1, false).unwrap();
        assert!((got - (-5.0 * r).exp() * (q + 0.4 * (1.0 - q))).abs() < 1e-10);
    }

    #[test]
    fn static_replication() {
        let m = reference();
        let f0 = Payoff::function(|x| (-2.0 * x).exp());
        let f1 = Payoff::function(|x| 0.3 / (1.0 + x));
        let diff = Payoff::function(|x| (-2.0 * x).exp() - 0.3 / (1.0 + x));
        let price = |a: Payoff, b: Payoff| {
            let claim = Claim::new(3.0, 0.01, a, b, RecoveryTiming::AtMaturity).unwrap();
            price_claim(&m, &claim, 0.0, 0.12, false).unwrap()
        };
        let whole = price(f0, f1.clone());
        let split = price(diff, Payoff::Constant(0.0)) + price(f1.clone(), f1);
        assert!((whole - split).abs() < 1e-10);
    }

    #[test]
    fn at_default_zero_recovery_is_zero_recovery_price() {
        let m = reference();
        let base = Claim::new(2.0, 0.01, Payoff::Constant(1.0), Payoff::Constant(0.0), RecoveryTiming::AtMaturity).unwrap();
        let with = Claim::new(
            2.0,
            0.01,
            Payoff::Constant(1.0),
            Payoff::Constant(0.0),
            RecoveryTiming::AtDefault(Payoff::function(|_| 0.0)),
        )
        .unwrap();
        assert_eq!(price_claim(&m, &base, 0.0, 0.1, false).unwrap(), price_claim(&m, &with, 0.0, 0.1, false).unwrap());
    }

    #[test]
    fn at_default_unit_recovery_pays_default_probability() {
        // with r = 0 and ℛ ≡ 1, the recovery leg is the default probability
        let m = reference();
        let claim = Claim::new(
            2.0,
            0.0,
            Payoff::Constant(0.0),
            Payoff::Constant(0.0),
            RecoveryTiming::AtDefault(Payoff::Constant(1.0)),
        )
        .unwrap();
        let leg = price_claim(&m, &claim, 0.0, 0.1, false).unwrap();
        let q = m.survival_probability(2.0, 0.1, false).unwrap();
        assert!((leg - (1.0 - q)).abs() < 1e-5, "{leg} vs {}", 1.0 - q);
    }

    #[test]
    fn price_monotonicity_and_range() {
        let m = reference();
        let r = 0.03;
        let rs = [0.0, 0.2, 0.5, 0.9];
        for &x in &[0.02, 0.1, 0.3] {
            let by_r: Vec<f64> = rs.iter().map(|&rec| zcb_defaultable(&m, 0.0, 4.0, x, false, r, rec).unwrap()).collect();
            assert!(by_r.windows(2).all(|w| w[1] >= w[0]));
            let by_t: Vec<f64> = [0.5, 1.0, 3.0, 10.0]
                .iter()
                .map(|&t| zcb_defaultable(&m, 0.0, t, x, false, r, 0.4).unwrap())
                .collect();
            assert!(by_t.windows(2).all(|w| w[1] <= w[0]));
            for &p in by_r.iter().chain(&by_t) {
                assert!((0.0..=1.0).contains(&p));
            }
        }
        let by_x: Vec<f64> = [0.0, 0.05, 0.1, 0.3]
            .iter()
            .map(|&x| zcb_defaultable(&m, 0.0, 4.0, x, false, r, 0.4).unwrap())
            .collect();
        assert!(by_x.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn riskfree_bond() {
        let m = reference();
        assert_eq!(riskfree_bond_subcir(&m, 2.0, 2.0, 0.1).unwrap(), 1.0);
        assert_eq!(
            riskfree_bond_subcir(&m, 0.0, 5.0, 0.1).unwrap(),
            m.survival_probability(5.0, 0.1, false).unwrap()
        );
        assert!(riskfree_bond_subcir(&m, 0.0, 1e-4, 0.1).is_err());
    }
}
